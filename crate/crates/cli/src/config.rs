//! Experiment configuration: a flat `key=value` file whose values use the
//! same mini-language as the command-line flags.

use std::fmt;

use crate::error::ParseError;
use crate::spec::{AdversarySpec, ModelSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EtaSpec {
    /// `1/√T`.
    Auto,
    Value(f64),
    /// Deterministic best response instead of a softmax.
    Best,
}

impl EtaSpec {
    pub fn parse(s: &str) -> Result<Self, ParseError> {
        match s.trim() {
            "auto" => Ok(EtaSpec::Auto),
            "br" | "best" => Ok(EtaSpec::Best),
            other => {
                other.parse::<f64>().ok().filter(|x| x.is_finite() && *x > 0.0).map(EtaSpec::Value).ok_or_else(|| {
                    ParseError::new(1, format!("eta must be auto, br, or a positive number, got '{other}'"))
                })
            }
        }
    }
}

impl fmt::Display for EtaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EtaSpec::Auto => f.write_str("auto"),
            EtaSpec::Value(x) => write!(f, "{x}"),
            EtaSpec::Best => f.write_str("br"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub adversary: AdversarySpec,
    pub horizon: usize,
    pub trials: usize,
    pub eta: EtaSpec,
    /// Default exponent for wrappers that do not set their own.
    pub alpha: f64,
    pub seed: u64,
    pub out: Option<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: ModelSpec::Polya,
            adversary: AdversarySpec::Flip,
            horizon: 1024,
            trials: 128,
            eta: EtaSpec::Auto,
            alpha: 1.0,
            seed: 0,
            out: None,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ParseError> {
    v.trim().parse().map_err(|_| ParseError::new(1, format!("{key} expects a number, got '{}'", v.trim())))
}

impl ExperimentConfig {
    /// Sets one key from text. Errors carry columns relative to `value`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ParseError> {
        match key {
            "model" => self.model = ModelSpec::parse(value)?,
            "adversary" => self.adversary = AdversarySpec::parse(value)?,
            "horizon" | "T" => {
                self.horizon = parse_num(key, value)?;
                if self.horizon == 0 {
                    return Err(ParseError::new(1, "horizon must be positive"));
                }
            }
            "trials" => self.trials = parse_num(key, value)?,
            "eta" => self.eta = EtaSpec::parse(value)?,
            "alpha" => {
                self.alpha = parse_num(key, value)?;
                if !(self.alpha > 0.0 && self.alpha.is_finite()) {
                    return Err(ParseError::new(1, "alpha must be positive"));
                }
            }
            "seed" => self.seed = parse_num(key, value)?,
            "out" => self.out = Some(value.trim().to_string()),
            other => return Err(ParseError::new(1, format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Parses a config file over the defaults. Blank lines and `#` comments
    /// are ignored.
    pub fn parse(text: &str, origin: &str) -> Result<Self, ParseError> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("");
            if content.trim().is_empty() {
                continue;
            }
            let Some(eq) = content.find('=') else {
                let col = content.len() - content.trim_start().len() + 1;
                return Err(ParseError::new(col, "expected key=value").at(origin, line, 1));
            };
            let key = content[..eq].trim();
            let value = &content[eq + 1..];
            let lead = value.len() - value.trim_start().len();
            cfg.set(key, value.trim()).map_err(|e| e.at(origin, line, eq + 2 + lead))?;
        }
        Ok(cfg)
    }
}

/// Canonical text form; parsing it gives back an equal config.
impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "model={}", self.model)?;
        writeln!(f, "adversary={}", self.adversary)?;
        writeln!(f, "horizon={}", self.horizon)?;
        writeln!(f, "trials={}", self.trials)?;
        writeln!(f, "eta={}", self.eta)?;
        writeln!(f, "alpha={}", self.alpha)?;
        writeln!(f, "seed={}", self.seed)?;
        if let Some(out) = &self.out {
            writeln!(f, "out={out}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let text = "# experiment\nmodel = robust(bernoulli(1/3@1,2/3@T/2+1), alpha=1)\nadversary=env(drift(phi=T/5))\n\
                    T=512\ntrials=16\neta=0.05\nalpha=2\nseed=42\nout=run.csv\n";
        let cfg = ExperimentConfig::parse(text, "exp.cfg").unwrap();
        assert_eq!(cfg.horizon, 512);
        let canon = cfg.to_string();
        assert_eq!(ExperimentConfig::parse(&canon, "canon").unwrap(), cfg);
        assert_eq!(ExperimentConfig::default().to_string().lines().count(), 7);
    }

    #[test]
    fn errors_carry_line_and_column() {
        let e = ExperimentConfig::parse("seed=1\nmodel=robust(polya,alpah=1)\n", "exp.cfg").unwrap_err();
        assert_eq!((e.line, e.col), (2, 20));
        assert!(e.to_string().starts_with("exp.cfg: line 2, column 20"));
        let e = ExperimentConfig::parse("\n\n  nonsense\n", "f").unwrap_err();
        assert_eq!((e.line, e.col), (3, 3));
        let e = ExperimentConfig::parse("model =  nope\n", "f").unwrap_err();
        assert_eq!((e.line, e.col), (1, 10));
        assert!(ExperimentConfig::parse("colour=red\n", "f").is_err());
    }
}
