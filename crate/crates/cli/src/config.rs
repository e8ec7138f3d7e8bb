//! Flat key/value run configuration.
//!
//! One `key = value` pair per line; `#` starts a comment. Recognized keys:
//!
//! | key       | meaning                                         | default  |
//! |-----------|-------------------------------------------------|----------|
//! | `n`       | points per level                                | required |
//! | `m`       | number of factors                               | required |
//! | `nus`     | comma-separated `ν_1..ν_{m−1}`                  | all 0    |
//! | `b`       | coupling constant                               | required |
//! | `seed`    | sampler seed                                    | 0        |
//! | `rel_tol` | tolerance of representation comparisons         | 1e-6     |

use anyhow::{anyhow, bail, Context, Result};
use coupled_ginibre::model::ModelConfig;
use coupled_ginibre::tolerances::REPRESENTATION_REL_TOL;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Parsed configuration, also embedded verbatim in run manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub n: usize,
    pub m: usize,
    pub nus: Vec<u32>,
    pub b: f64,
    pub seed: u64,
    pub rel_tol: f64,
}

impl RunConfig {
    /// Reads and validates a configuration file.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        RunConfig::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    /// Parses configuration text.
    pub fn parse(text: &str) -> Result<RunConfig> {
        let (mut n, mut m, mut nus, mut b, mut seed, mut rel_tol) = (None, None, None, None, 0u64, REPRESENTATION_REL_TOL);
        for (index, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected 'key = value', got '{raw}'", index + 1))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| anyhow!("line {}: invalid {what} '{value}'", index + 1);
            match key {
                "n" => n = Some(value.parse().map_err(|_| bad("n"))?),
                "m" => m = Some(value.parse().map_err(|_| bad("m"))?),
                "nus" => {
                    nus = Some(if value.is_empty() {
                        Vec::new()
                    } else {
                        value
                            .split(',')
                            .map(|v| v.trim().parse::<u32>())
                            .collect::<std::result::Result<Vec<_>, _>>()
                            .map_err(|_| bad("nus"))?
                    })
                }
                "b" => b = Some(value.parse().map_err(|_| bad("b"))?),
                "seed" => seed = value.parse().map_err(|_| bad("seed"))?,
                "rel_tol" => rel_tol = value.parse().map_err(|_| bad("rel_tol"))?,
                other => bail!("line {}: unknown key '{other}'", index + 1),
            }
        }
        let n = n.ok_or_else(|| anyhow!("missing key 'n'"))?;
        let m: usize = m.ok_or_else(|| anyhow!("missing key 'm'"))?;
        let b = b.ok_or_else(|| anyhow!("missing key 'b'"))?;
        let nus = nus.unwrap_or_else(|| vec![0; m.saturating_sub(1)]);
        if !(rel_tol > 0.0) {
            bail!("rel_tol must be positive");
        }
        let cfg = RunConfig { n, m, nus, b, seed, rel_tol };
        cfg.model()?;
        Ok(cfg)
    }

    /// The model parameters.
    pub fn model(&self) -> Result<ModelConfig> {
        Ok(ModelConfig::new(self.n, self.m, self.nus.clone(), self.b)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_keys_and_comments() {
        let cfg = RunConfig::parse("# model\nn = 4\nm=3\nnus = 1, 2  # two values\nb = 0.5\nseed = 9\nrel_tol = 1e-7\n").unwrap();
        assert_eq!(cfg, RunConfig { n: 4, m: 3, nus: vec![1, 2], b: 0.5, seed: 9, rel_tol: 1e-7 });
    }

    #[test]
    fn defaults_fill_optional_keys() {
        let cfg = RunConfig::parse("n=2\nm=3\nb=1").unwrap();
        assert_eq!(cfg.nus, vec![0, 0]);
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.rel_tol, REPRESENTATION_REL_TOL);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(RunConfig::parse("n=2\nm=2").is_err());
        assert!(RunConfig::parse("n=2\nm=2\nb=0.5\ncolor=red").is_err());
        assert!(RunConfig::parse("n=2\nm=2\nb=-1").is_err());
        assert!(RunConfig::parse("n=2\nm=3\nnus=1\nb=1").is_err());
        assert!(RunConfig::parse("n two").is_err());
    }
}
