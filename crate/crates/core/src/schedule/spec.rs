use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::One;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Textual description of a schedule.
///
/// Forms: `const:r=2,depth=10,N=2`, `tower2:depth=4,N=2`, `ex2:depth=4,N=2`,
/// `ratios:[2,3,4],N=2` (earliest ratio first, entries may be written `2^k`)
/// and `extract:base=(<spec>),keep=[0,-2,-4]`. `N` defaults to 2.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ScheduleSpec {
    ConstRatio { ratio: BigUint, depth: u32, alphabet: u32 },
    /// `ℓ_{n-1} = 2^{ℓ_n}`.
    Tower2 { depth: u32, alphabet: u32 },
    /// `ℓ_{n-1} = 4^{√ℓ_n}`.
    Ex2 { depth: u32, alphabet: u32 },
    /// Ratios `r_{m+1}, …, r_0`.
    ExplicitRatios { ratios: Vec<BigUint>, alphabet: u32 },
    /// Subsequence of a base schedule at the kept times.
    Extracted { base: Box<ScheduleSpec>, keep: Vec<i64> },
}

impl ScheduleSpec {
    pub fn alphabet(&self) -> u32 {
        match self {
            ScheduleSpec::ConstRatio { alphabet, .. }
            | ScheduleSpec::Tower2 { alphabet, .. }
            | ScheduleSpec::Ex2 { alphabet, .. }
            | ScheduleSpec::ExplicitRatios { alphabet, .. } => *alphabet,
            ScheduleSpec::Extracted { base, .. } => base.alphabet(),
        }
    }

    pub fn depth(&self) -> u32 {
        match self {
            ScheduleSpec::ConstRatio { depth, .. }
            | ScheduleSpec::Tower2 { depth, .. }
            | ScheduleSpec::Ex2 { depth, .. } => *depth,
            ScheduleSpec::ExplicitRatios { ratios, .. } => ratios.len() as u32,
            ScheduleSpec::Extracted { keep, .. } => keep.len().saturating_sub(1) as u32,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSchedule(msg));
        if self.alphabet() < 2 {
            return bad(format!("alphabet size {} must be at least 2", self.alphabet()));
        }
        if self.depth() < 1 {
            return bad("depth must be at least 1".into());
        }
        match self {
            ScheduleSpec::ConstRatio { ratio, .. } if ratio < &BigUint::from(2u32) => {
                bad(format!("constant ratio {ratio} must be at least 2"))
            }
            ScheduleSpec::Extracted { base, keep } => {
                base.validate()?;
                let earliest = -(base.depth() as i64);
                for w in keep.windows(2) {
                    if w[0] >= w[1] {
                        return bad(format!("kept times must be strictly increasing, got {} then {}", w[0], w[1]));
                    }
                }
                if let Some(t) = keep.iter().find(|t| !(earliest..=0).contains(*t)) {
                    return bad(format!("kept time {t} outside base window {earliest}..=0"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

fn parse_err(input: &str, reason: impl Into<String>) -> Error {
    Error::SpecParse { input: input.to_string(), reason: reason.into() }
}

/// Splits on commas that are not nested in brackets or parentheses.
fn split_top(s: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts
}

fn parse_big(tok: &str, input: &str) -> Result<BigUint> {
    let tok = tok.trim();
    if let Some((b, e)) = tok.split_once('^') {
        let b: BigUint = b.trim().parse().map_err(|_| parse_err(input, format!("bad base in `{tok}`")))?;
        let e: u32 = e.trim().parse().map_err(|_| parse_err(input, format!("bad exponent in `{tok}`")))?;
        return Ok(b.pow(e));
    }
    tok.parse().map_err(|_| parse_err(input, format!("bad integer `{tok}`")))
}

fn parse_list<T>(text: &str, input: &str, item: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    let inner = text
        .trim()
        .strip_prefix('[')
        .and_then(|t| t.strip_suffix(']'))
        .ok_or_else(|| parse_err(input, format!("expected a bracketed list, got `{text}`")))?;
    if inner.trim().is_empty() {
        return Ok(Vec::new());
    }
    inner.split(',').map(|t| item(t.trim())).collect()
}

struct Fields<'a> {
    input: &'a str,
    pairs: Vec<(&'a str, &'a str)>,
}

impl<'a> Fields<'a> {
    fn new(input: &'a str, body: &'a str) -> Result<Self> {
        let mut pairs = Vec::new();
        for part in split_top(body) {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| parse_err(input, format!("expected key=value, got `{part}`")))?;
            pairs.push((k.trim(), v.trim()));
        }
        Ok(Fields { input, pairs })
    }

    fn take(&mut self, key: &str) -> Option<&'a str> {
        let pos = self.pairs.iter().position(|(k, _)| *k == key)?;
        Some(self.pairs.remove(pos).1)
    }

    fn u32(&mut self, key: &str) -> Result<Option<u32>> {
        self.take(key)
            .map(|v| v.parse().map_err(|_| parse_err(self.input, format!("bad value for {key}: `{v}`"))))
            .transpose()
    }

    fn required_u32(&mut self, key: &str) -> Result<u32> {
        self.u32(key)?.ok_or_else(|| parse_err(self.input, format!("missing {key}")))
    }

    fn alphabet(&mut self) -> Result<u32> {
        Ok(self.u32("N")?.unwrap_or(2))
    }

    fn finish(self) -> Result<()> {
        match self.pairs.first() {
            Some((k, _)) => Err(parse_err(self.input, format!("unknown key `{k}`"))),
            None => Ok(()),
        }
    }
}

impl FromStr for ScheduleSpec {
    type Err = Error;

    fn from_str(input: &str) -> Result<Self> {
        let text = input.trim();
        let (family, body) = text
            .split_once(':')
            .ok_or_else(|| parse_err(input, "expected `<family>:<parameters>`"))?;
        let spec = match family.trim() {
            "const" => {
                let mut f = Fields::new(input, body)?;
                let ratio = parse_big(f.take("r").ok_or_else(|| parse_err(input, "missing r"))?, input)?;
                let depth = f.required_u32("depth")?;
                let alphabet = f.alphabet()?;
                f.finish()?;
                ScheduleSpec::ConstRatio { ratio, depth, alphabet }
            }
            "tower2" | "ex2" => {
                let mut f = Fields::new(input, body)?;
                let depth = f.required_u32("depth")?;
                let alphabet = f.alphabet()?;
                f.finish()?;
                if family.trim() == "tower2" {
                    ScheduleSpec::Tower2 { depth, alphabet }
                } else {
                    ScheduleSpec::Ex2 { depth, alphabet }
                }
            }
            "ratios" => {
                let parts = split_top(body);
                let ratios = parse_list(parts[0], input, |t| parse_big(t, input))?;
                let mut f = Fields::new(input, &body[parts[0].len()..])?;
                let alphabet = f.alphabet()?;
                f.finish()?;
                ScheduleSpec::ExplicitRatios { ratios, alphabet }
            }
            "extract" => {
                let cut = body
                    .rfind(",keep=")
                    .ok_or_else(|| parse_err(input, "missing keep=[...]"))?;
                let base_part = body[..cut]
                    .trim()
                    .strip_prefix("base=")
                    .ok_or_else(|| parse_err(input, "expected base=<spec>"))?
                    .trim();
                let base_text = base_part
                    .strip_prefix('(')
                    .and_then(|b| b.strip_suffix(')'))
                    .unwrap_or(base_part);
                let base: ScheduleSpec = base_text.parse()?;
                let keep = parse_list(&body[cut + 6..], input, |t| {
                    t.parse::<i64>().map_err(|_| parse_err(input, format!("bad time `{t}`")))
                })?;
                ScheduleSpec::Extracted { base: Box::new(base), keep }
            }
            other => return Err(parse_err(input, format!("unknown family `{other}`"))),
        };
        spec.validate().map_err(|e| parse_err(input, e.to_string()))?;
        Ok(spec)
    }
}

fn fmt_big(n: &BigUint) -> String {
    let k = n.bits().saturating_sub(1);
    if n.bits() > 64 && n == &(BigUint::one() << k) {
        format!("2^{k}")
    } else {
        n.to_string()
    }
}

impl fmt::Display for ScheduleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScheduleSpec::ConstRatio { ratio, depth, alphabet } => {
                write!(f, "const:r={},depth={depth},N={alphabet}", fmt_big(ratio))
            }
            ScheduleSpec::Tower2 { depth, alphabet } => write!(f, "tower2:depth={depth},N={alphabet}"),
            ScheduleSpec::Ex2 { depth, alphabet } => write!(f, "ex2:depth={depth},N={alphabet}"),
            ScheduleSpec::ExplicitRatios { ratios, alphabet } => {
                let list: Vec<String> = ratios.iter().map(fmt_big).collect();
                write!(f, "ratios:[{}],N={alphabet}", list.join(","))
            }
            ScheduleSpec::Extracted { base, keep } => {
                let list: Vec<String> = keep.iter().map(|t| t.to_string()).collect();
                write!(f, "extract:base=({base}),keep=[{}]", list.join(","))
            }
        }
    }
}

impl Serialize for ScheduleSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        for text in [
            "const:r=2,depth=10,N=2",
            "tower2:depth=4,N=2",
            "ex2:depth=4,N=3",
            "ratios:[2,3,4],N=2",
            "ratios:[2^100,4],N=2",
            "extract:base=(ex2:depth=4,N=2),keep=[-4,-2,0]",
            "extract:base=(extract:base=(const:r=2,depth=6,N=2),keep=[-6,-4,-2,0]),keep=[-2,0]",
        ] {
            let spec: ScheduleSpec = text.parse().unwrap();
            assert_eq!(spec.to_string(), text);
        }
    }

    #[test]
    fn flexible_input() {
        let a: ScheduleSpec = "const: N=3, depth=2, r=5".parse().unwrap();
        assert_eq!(a.to_string(), "const:r=5,depth=2,N=3");
        let b: ScheduleSpec = "extract:base=const:r=2,depth=6,N=2,keep=[-6,-4,-2,0]".parse().unwrap();
        assert_eq!(b.to_string(), "extract:base=(const:r=2,depth=6,N=2),keep=[-6,-4,-2,0]");
        let c: ScheduleSpec = "tower2:depth=3".parse().unwrap();
        assert_eq!(c.alphabet(), 2);
    }

    #[test]
    fn rejects_malformed() {
        for text in [
            "const:r=2,N=2",
            "tower2:depth=0,N=2",
            "ex2:depth=2,N=1",
            "ratios:2,3,N=2",
            "ratios:[],N=2",
            "spiral:depth=2",
            "const:r=2,depth=3,N=2,extra=1",
            "extract:base=(const:r=2,depth=3,N=2),keep=[0,-1]",
            "extract:base=(const:r=2,depth=3,N=2),keep=[-5,0]",
            "extract:base=(const:r=2,depth=3,N=2),keep=[0]",
        ] {
            assert!(text.parse::<ScheduleSpec>().is_err(), "{text}");
        }
    }
}
