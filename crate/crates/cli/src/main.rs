use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use splitword::coupling::{canonical_coupling, partial_canonical_coupling, prefix_codes};
use splitword::experiments::{tail_bound_experiment, Sampling};
use splitword::metric::{aut_count, choose_n0, e_bruteforce, e_exact, DEFAULT_ENUMERATION_CAP};
use splitword::process::{simulate_path, Levels, DEFAULT_MEMORY_CAP};
use splitword::reconstruct::{theorem_b_chain, theorem_b_step, theorem_c_run, PlanFile, ReconstructionPlan};
use splitword::schedule::{
    build_schedule, condition_report, extract_schedule, proposition21_construct, Schedule, ScheduleSpec,
};
use splitword::verify::run_verify;
use splitword::words::{canonical_letter, Word};
use splitword::{Error, Execution};

const OUT_DIR_VAR: &str = "SPLITWORD_OUT_DIR";

#[derive(Parser)]
#[command(name = "splitword", version, about = "Split-word process laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Output file; defaults to $SPLITWORD_OUT_DIR/<command>.<ext>, else stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// JSON object of flag values; flags given on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Run sample loops on one thread.
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Series terms and the summability verdict of a schedule.
    Classify {
        #[arg(long)]
        spec: String,
        #[arg(long, default_value_t = 256)]
        precision: u32,
    },
    /// Automatic selection of coupled times and rates.
    Plan {
        #[arg(long)]
        spec: String,
    },
    /// The schedule seen at a subset of its times.
    Extract {
        #[arg(long)]
        spec: String,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        keep: Vec<i64>,
    },
    /// One simulated path.
    Simulate {
        #[arg(long)]
        spec: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write one JSON line per time to this file.
        #[arg(long)]
        dump: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_MEMORY_CAP)]
        memory_cap: usize,
    },
    /// Canonical coupling of a word of block letters.
    Couple {
        #[arg(long)]
        word: String,
        /// Size of the block alphabet for the full coupling.
        #[arg(long = "M")]
        block_alphabet: Option<u64>,
        /// Couple on the prefixes of blocks of a word over `N` letters.
        #[arg(long)]
        partial: bool,
        #[arg(long = "N", default_value_t = 2)]
        alphabet: u32,
        #[arg(long)]
        ell: Option<usize>,
        #[arg(long)]
        lambda: Option<usize>,
    },
    /// Reconstruction pipelines.
    Reconstruct {
        #[command(subcommand)]
        pipeline: Pipeline,
    },
    /// Orbit semi-metric, automorphism counts and tail bounds.
    Metric {
        #[command(subcommand)]
        query: MetricQuery,
    },
    /// Self-check suite with a pass/fail report.
    Verify {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
    },
}

#[derive(Subcommand)]
enum Pipeline {
    /// Full coupling chain, or one step with --step.
    #[command(name = "theoremB", alias = "theorem-b")]
    TheoremB {
        #[arg(long)]
        spec: String,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Only the coupled step at this time.
        #[arg(long, allow_hyphen_values = true)]
        step: Option<i64>,
        /// Use identity couplings.
        #[arg(long)]
        identity: bool,
    },
    /// Partial couplings at selected times.
    #[command(name = "theoremC", alias = "theorem-c")]
    TheoremC {
        #[arg(long)]
        spec: String,
        /// Plan file ({times, alphas, fill}) or `auto`.
        #[arg(long)]
        plan: String,
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        target: i64,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum MetricQuery {
    /// Exact `e_n(x, y)`.
    E {
        #[arg(long)]
        spec: String,
        #[arg(long, allow_hyphen_values = true)]
        n: i64,
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        n0: i64,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        /// Also compute by enumerating the group.
        #[arg(long)]
        oracle: bool,
    },
    /// Size of the automorphism group between two times
    Autcount {
        #[arg(long)]
        spec: String,
        #[arg(long, allow_hyphen_values = true)]
        n: i64,
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        n0: i64,
    },
    /// Automatic choice of `n0` and `α`.
    N0 {
        #[arg(long)]
        spec: String,
    },
    /// Tail probability of the orbit distance for independent words.
    Tailbound {
        #[arg(long)]
        spec: String,
        #[arg(long, allow_hyphen_values = true)]
        n: i64,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Provenance wrapper around every result.
#[derive(Serialize)]
struct Artifact {
    tool: &'static str,
    version: &'static str,
    command: String,
    spec: Option<String>,
    seed: Option<u64>,
    samples: Option<u64>,
    result: Value,
}

struct Outcome {
    artifact: Artifact,
    ok: bool,
}

fn schedule(spec: &str) -> Result<Schedule, Error> {
    let parsed: ScheduleSpec = spec.parse()?;
    build_schedule(&parsed)
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("results serialize")
}

fn artifact(command: &str, spec: Option<&str>, seed: Option<u64>, samples: Option<u64>, result: Value) -> Artifact {
    Artifact {
        tool: "splitword",
        version: env!("CARGO_PKG_VERSION"),
        command: command.to_string(),
        spec: spec.map(str::to_string),
        seed,
        samples,
        result,
    }
}

fn run(cli: &Cli) -> Result<Outcome, Box<dyn std::error::Error>> {
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    let sampling = |samples: u64, seed: u64| Sampling::new(samples, seed).with_exec(exec);
    let done = |artifact| Ok(Outcome { artifact, ok: true });
    match &cli.command {
        Command::Classify { spec, precision } => {
            let report = condition_report(&schedule(spec)?, *precision);
            done(artifact("classify", Some(spec), None, None, to_value(&report)))
        }
        Command::Plan { spec } => {
            let plan = proposition21_construct(&schedule(spec)?);
            done(artifact("plan", Some(spec), None, None, to_value(&plan)))
        }
        Command::Extract { spec, keep } => {
            let extracted = extract_schedule(&schedule(spec)?, keep)?;
            let report = condition_report(&extracted, 256);
            let result = json!({
                "extracted_spec": extracted.spec().to_string(),
                "rows": extracted.rows(),
                "condition": report,
            });
            done(artifact("extract", Some(spec), None, None, result))
        }
        Command::Simulate { spec, seed, dump, memory_cap } => {
            let s = schedule(spec)?;
            let levels = Arc::new(Levels::new(&s, *memory_cap)?);
            let path = simulate_path(&levels, *seed, 0);
            let records = path.records();
            if let Some(file) = dump {
                let mut text = String::new();
                for r in &records {
                    let line = json!({"spec": spec, "seed": seed, "time": r.time, "word": r.word, "innovation": r.innovation});
                    text.push_str(&line.to_string());
                    text.push('\n');
                }
                std::fs::write(file, text)?;
            }
            let result = json!({"splitting_holds": path.splitting_holds(), "records": records});
            done(artifact("simulate", Some(spec), Some(*seed), None, result))
        }
        Command::Couple { word, block_alphabet, partial, alphabet, ell, lambda } => {
            done(artifact("couple", None, None, None, couple(word, *block_alphabet, *partial, *alphabet, *ell, *lambda)?))
        }
        Command::Reconstruct { pipeline } => match pipeline {
            Pipeline::TheoremB { spec, samples, seed, step, identity } => {
                let s = schedule(spec)?;
                let sm = sampling(*samples, *seed);
                let result = match step {
                    Some(t) => to_value(&theorem_b_step(&s, *t, &sm)?),
                    None => to_value(&theorem_b_chain(&s, !identity, &sm)?),
                };
                done(artifact("reconstruct theoremB", Some(spec), Some(*seed), Some(*samples), result))
            }
            Pipeline::TheoremC { spec, plan, target, samples, seed } => {
                let s = schedule(spec)?;
                let plan = if plan == "auto" {
                    ReconstructionPlan::from_selection(&proposition21_construct(&s), 1)?
                } else {
                    let text = std::fs::read_to_string(plan).map_err(|e| format!("reading plan {plan}: {e}"))?;
                    let file: PlanFile = serde_json::from_str(&text).map_err(|e| format!("parsing plan {plan}: {e}"))?;
                    ReconstructionPlan::from_file(&file)?
                };
                let result = theorem_c_run(&s, &plan, *target, &sampling(*samples, *seed))?;
                done(artifact("reconstruct theoremC", Some(spec), Some(*seed), Some(*samples), to_value(&result)))
            }
        },
        Command::Metric { query } => match query {
            MetricQuery::E { spec, n, n0, x, y, oracle } => {
                let s = schedule(spec)?;
                let alphabet = s.effective_alphabet()?;
                let x = Word::parse(x, alphabet)?;
                let y = Word::parse(y, alphabet)?;
                let value = e_exact(&s, *n, *n0, x.letters(), y.letters())?;
                let mut result = json!({"n": n, "n0": n0, "e": value});
                if *oracle {
                    let slow = e_bruteforce(&s, *n, *n0, x.letters(), y.letters(), DEFAULT_ENUMERATION_CAP)?;
                    result["oracle"] = to_value(&slow);
                    result["agree"] = json!(slow == value);
                }
                done(artifact("metric e", Some(spec), None, None, result))
            }
            MetricQuery::Autcount { spec, n, n0 } => {
                let count = aut_count(&schedule(spec)?, *n, *n0)?;
                done(artifact("metric autcount", Some(spec), None, None, to_value(&count)))
            }
            MetricQuery::N0 { spec } => {
                let choice = choose_n0(&schedule(spec)?)?;
                done(artifact("metric n0", Some(spec), None, None, to_value(&choice)))
            }
            MetricQuery::Tailbound { spec, n, alpha, samples, seed } => {
                let t = tail_bound_experiment(&schedule(spec)?, *n, *alpha, &sampling(*samples, *seed))?;
                done(artifact("metric tailbound", Some(spec), Some(*seed), Some(*samples), to_value(&t)))
            }
        },
        Command::Verify { seed, samples } => {
            let report = run_verify(*seed, *samples, exec)?;
            let ok = report.success;
            Ok(Outcome { artifact: artifact("verify", None, Some(*seed), Some(*samples), to_value(&report)), ok })
        }
    }
}

fn couple(
    word: &str,
    block_alphabet: Option<u64>,
    partial: bool,
    alphabet: u32,
    ell: Option<usize>,
    lambda: Option<usize>,
) -> Result<Value, Box<dyn std::error::Error>> {
    let (codes, size, coupling) = if partial {
        let (Some(ell), Some(lambda)) = (ell, lambda) else {
            return Err("--partial needs --ell and --lambda".into());
        };
        let w = Word::parse(word, alphabet)?;
        let (codes, size) = prefix_codes(w.letters(), alphabet, ell, lambda)?;
        let coupling = partial_canonical_coupling(w.letters(), alphabet, ell, lambda)?;
        (codes, size, coupling)
    } else {
        let size = block_alphabet.ok_or("--M is required without --partial")?;
        let letters = u32::try_from(size).map_err(|_| "--M is too large for letter literals")?;
        let codes: Vec<u64> = Word::parse(word, letters)?.letters().iter().map(|&l| l as u64).collect();
        let coupling = canonical_coupling(&codes, size)?;
        (codes, size, coupling)
    };
    let aligned: Vec<u64> = coupling.as_slice().iter().map(|&p| canonical_letter(size, p as u64)).collect();
    let (matched, mismatched): (Vec<usize>, Vec<usize>) = (1..=codes.len()).partition(|&i| aligned[i - 1] == codes[i - 1]);
    Ok(json!({
        "block_alphabet": size,
        "letters": codes,
        "perm": coupling.as_slice(),
        "aligned": aligned,
        "matched_positions": matched,
        "mismatched_positions": mismatched,
    }))
}

/// Long-format rows: every scalar with the time of its nearest enclosing
/// record, if any.
fn flatten(value: &Value, path: &str, time: Option<i64>, rows: &mut Vec<(Option<i64>, String, String)>) {
    let join = |key: &str| if path.is_empty() { key.to_string() } else { format!("{path}.{key}") };
    match value {
        Value::Object(map) => {
            let time = map.get("time").and_then(Value::as_i64).or(time);
            for (k, v) in map {
                if k != "time" {
                    flatten(v, &join(k), time, rows);
                }
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                let keyed = v.get("time").is_some();
                let p = if keyed { path.to_string() } else { join(&i.to_string()) };
                flatten(v, &p, time, rows);
            }
        }
        Value::Null => rows.push((time, path.to_string(), String::new())),
        Value::String(s) => rows.push((time, path.to_string(), s.clone())),
        other => rows.push((time, path.to_string(), other.to_string())),
    }
}

fn render(artifact: &Artifact, format: Format) -> Result<String, Box<dyn std::error::Error>> {
    match format {
        Format::Json => Ok(serde_json::to_string_pretty(artifact)? + "\n"),
        Format::Csv => {
            let mut rows = Vec::new();
            flatten(&artifact.result, "", None, &mut rows);
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["tool", "version", "command", "spec", "seed", "samples", "time", "statistic", "value"])?;
            let opt = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
            for (time, stat, value) in rows {
                w.write_record([
                    artifact.tool,
                    artifact.version,
                    &artifact.command,
                    artifact.spec.as_deref().unwrap_or(""),
                    &opt(artifact.seed),
                    &opt(artifact.samples),
                    &time.map(|t| t.to_string()).unwrap_or_default(),
                    &stat,
                    &value,
                ])?;
            }
            Ok(String::from_utf8(w.into_inner()?)?)
        }
    }
}

fn destination(cli: &Cli, command: &str) -> Option<PathBuf> {
    if let Some(out) = &cli.out {
        return Some(out.clone());
    }
    let dir = std::env::var_os(OUT_DIR_VAR)?;
    let ext = if cli.format == Format::Csv { "csv" } else { "json" };
    Some(Path::new(&dir).join(format!("{}.{ext}", command.replace(' ', "-"))))
}

/// Appends `--key value` for config entries not already given as flags.
fn merge_config(mut args: Vec<String>) -> Result<Vec<String>, String> {
    let pos = args.iter().position(|a| a == "--config" || a.starts_with("--config="));
    let Some(pos) = pos else { return Ok(args) };
    let file = match args[pos].strip_prefix("--config=") {
        Some(f) => f.to_string(),
        None => args.get(pos + 1).cloned().ok_or("--config needs a file")?,
    };
    let text = std::fs::read_to_string(&file).map_err(|e| format!("reading config {file}: {e}"))?;
    let config: serde_json::Map<String, Value> =
        serde_json::from_str(&text).map_err(|e| format!("config {file} must be a JSON object: {e}"))?;
    let given = |key: &str| {
        let flag = format!("--{key}");
        args.iter().any(|a| *a == flag || a.starts_with(&format!("{flag}=")))
    };
    let mut extra = Vec::new();
    for (key, value) in &config {
        if given(key) {
            continue;
        }
        match value {
            Value::Bool(true) => extra.push(format!("--{key}")),
            Value::Bool(false) | Value::Null => {}
            Value::String(s) => extra.push(format!("--{key}={s}")),
            Value::Number(n) => extra.push(format!("--{key}={n}")),
            Value::Array(items) => {
                let parts: Vec<String> =
                    items.iter().map(|v| v.as_str().map_or_else(|| v.to_string(), str::to_string)).collect();
                extra.push(format!("--{key}={}", parts.join(",")));
            }
            Value::Object(_) => return Err(format!("config key `{key}` cannot be an object")),
        }
    }
    args.extend(extra);
    Ok(args)
}

fn main() -> ExitCode {
    let args = match merge_config(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let cli = Cli::parse_from(args);
    let outcome = match run(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let text = match render(&outcome.artifact, cli.format) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match destination(&cli, &outcome.artifact.command) {
        Some(path) => {
            if let Err(e) = std::fs::write(&path, text) {
                eprintln!("error: writing {}: {e}", path.display());
                return ExitCode::from(1);
            }
            eprintln!("wrote {}", path.display());
        }
        None => print!("{text}"),
    }
    if outcome.ok {
        ExitCode::SUCCESS
    } else {
        eprintln!("verification reported failures");
        ExitCode::from(3)
    }
}
