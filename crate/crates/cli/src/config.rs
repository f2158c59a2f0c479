//! Settings from an optional `key=value` file, overridden by flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use kp_core::ring::scalar::Rational;
use kp_core::suites::SuiteConfig;

use crate::{CommonArgs, Format};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Settings {
    pub m: Option<usize>,
    pub n: Option<usize>,
    pub lambda: Option<Vec<Rational>>,
    pub depth: Option<i32>,
    pub s_cap: Option<i32>,
    pub sminus_cap: Option<i32>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub pairing_budget: Option<u64>,
    pub timings: bool,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

pub fn parse_lambda(s: &str) -> Result<Vec<Rational>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<Rational>()
                .with_context(|| format!("bad eigenvalue {t:?}"))
        })
        .collect()
}

fn parse_format(s: &str) -> Result<Format> {
    match s {
        "json" => Ok(Format::Json),
        "csv" => Ok(Format::Csv),
        _ => bail!("unknown format {s:?}; expected json or csv"),
    }
}

fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    v.parse::<T>()
        .with_context(|| format!("bad value for {key}: {v:?}"))
}

/// Blank lines and lines starting with `#` are ignored. Keys use the flag
/// spelling without dashes (`s-cap` or `s_cap`).
pub fn parse_text(text: &str) -> Result<Settings> {
    let mut s = Settings::default();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("line {}: expected key=value", no + 1);
        };
        let (k, v) = (k.trim().replace('_', "-"), v.trim());
        match k.as_str() {
            "M" => s.m = Some(parse(&k, v)?),
            "N" => s.n = Some(parse(&k, v)?),
            "lambda" => s.lambda = Some(parse_lambda(v)?),
            "depth" => s.depth = Some(parse(&k, v)?),
            "s-cap" => s.s_cap = Some(parse(&k, v)?),
            "sminus-cap" => s.sminus_cap = Some(parse(&k, v)?),
            "seed" => s.seed = Some(parse(&k, v)?),
            "tol" => s.tol = Some(parse(&k, v)?),
            "pairing-budget" => s.pairing_budget = Some(parse(&k, v)?),
            "timings" => s.timings = parse(&k, v)?,
            "out" => s.out = Some(PathBuf::from(v)),
            "format" => s.format = Some(parse_format(v)?),
            _ => bail!("line {}: unknown key {k:?}", no + 1),
        }
    }
    Ok(s)
}

pub fn read_file(path: &Path) -> Result<Settings> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_text(&text).with_context(|| format!("in {}", path.display()))
}

impl Settings {
    pub fn override_with(&mut self, a: &CommonArgs) -> Result<()> {
        if a.m.is_some() {
            self.m = a.m;
        }
        if a.n.is_some() {
            self.n = a.n;
        }
        if let Some(l) = &a.lambda {
            self.lambda = Some(parse_lambda(l)?);
        }
        if a.depth.is_some() {
            self.depth = a.depth;
        }
        if a.s_cap.is_some() {
            self.s_cap = a.s_cap;
        }
        if a.sminus_cap.is_some() {
            self.sminus_cap = a.sminus_cap;
        }
        if a.seed.is_some() {
            self.seed = a.seed;
        }
        if a.out.is_some() {
            self.out = a.out.clone();
        }
        if a.format.is_some() {
            self.format = a.format;
        }
        Ok(())
    }

    pub fn suite_config(&self) -> SuiteConfig {
        let d = SuiteConfig::default();
        SuiteConfig {
            m: self.m,
            n: self.n,
            lambda: self.lambda.clone(),
            depth: self.depth,
            s_cap: self.s_cap,
            sminus_cap: self.sminus_cap,
            seed: self.seed.unwrap_or(d.seed),
            tol: self.tol.unwrap_or(d.tol),
            pairing_budget: self.pairing_budget.unwrap_or(d.pairing_budget),
            timings: self.timings,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_flags() {
        let mut s = parse_text("# caps\ndepth = 4\nlambda=1,3/2\nformat=csv\ns_cap=2\n").unwrap();
        assert_eq!(s.depth, Some(4));
        assert_eq!(
            s.lambda.as_ref().unwrap()[1],
            "3/2".parse::<Rational>().unwrap()
        );
        let flags = CommonArgs {
            depth: Some(5),
            ..CommonArgs::default()
        };
        s.override_with(&flags).unwrap();
        assert_eq!(
            (s.depth, s.s_cap, s.format),
            (Some(5), Some(2), Some(Format::Csv))
        );
    }

    #[test]
    fn bad_lines_are_reported() {
        assert!(parse_text("depth").is_err());
        assert!(parse_text("colour=blue").is_err());
        assert!(parse_text("lambda=1,x").is_err());
    }
}
