use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
pub enum TowerFamily {
    G,
    B,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Svg,
}

/// Everything a command needs; loaded from TOML, then overridden by flags.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub tower: TowerConfig,
    pub caps: CapsConfig,
    pub certificates: CertConfig,
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TowerConfig {
    pub family: TowerFamily,
    pub m: usize,
    pub p: usize,
    pub power: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CapsConfig {
    pub ball_radius: usize,
    pub node_cap: usize,
    /// Longest intermediate word the normal form may build.
    pub word_cap: usize,
    pub search_nodes: usize,
    pub pairs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertConfig {
    pub c: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub formats: Vec<Format>,
    pub seed: u64,
}

impl Default for TowerConfig {
    fn default() -> Self {
        TowerConfig { family: TowerFamily::G, m: 2, p: 2, power: 1 }
    }
}

impl Default for CapsConfig {
    fn default() -> Self {
        let search = divtower::Caps::default();
        CapsConfig {
            ball_radius: 3,
            node_cap: search.ball_nodes,
            word_cap: divtower::words::DEFAULT_LENGTH_CAP,
            search_nodes: search.search_nodes,
            pairs: search.pairs,
        }
    }
}

impl Default for CertConfig {
    fn default() -> Self {
        CertConfig { c: 3.0 }
    }
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("divtower-out"), formats: vec![Format::Json, Format::Csv, Format::Svg], seed: 7 }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tower.m < 1 {
            bail!("tower level m must be at least 1");
        }
        if self.tower.p != 2 {
            bail!("only rank p = 2 is supported, got {}", self.tower.p);
        }
        let caps = &self.caps;
        for (name, v) in [
            ("ball_radius", caps.ball_radius),
            ("node_cap", caps.node_cap),
            ("word_cap", caps.word_cap),
            ("search_nodes", caps.search_nodes),
            ("pairs", caps.pairs),
        ] {
            if v == 0 {
                bail!("cap {name} must be positive");
            }
        }
        if self.certificates.c.is_nan() || self.certificates.c <= 1.0 {
            bail!("certificate constant C must exceed 1, got {}", self.certificates.c);
        }
        if self.output.formats.is_empty() {
            bail!("at least one output format is required");
        }
        Ok(())
    }

    pub fn search_caps(&self) -> divtower::Caps {
        divtower::Caps { search_nodes: self.caps.search_nodes, ball_nodes: self.caps.node_cap, pairs: self.caps.pairs }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg = RunConfig::parse("[tower]\nm = 3\n[output]\nformats = [\"csv\"]\n").unwrap();
        assert_eq!(cfg.tower.m, 3);
        assert_eq!(cfg.tower.power, 1);
        assert_eq!(cfg.output.formats, vec![Format::Csv]);
        assert_eq!(cfg.caps, CapsConfig::default());
        cfg.validate().unwrap();
    }

    #[test]
    fn round_trip() {
        let cfg = RunConfig::default();
        assert_eq!(RunConfig::parse(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(RunConfig::parse("[tower]\nlevel = 2\n").is_err());
        let mut cfg = RunConfig::default();
        cfg.tower.m = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.caps.node_cap = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.certificates.c = 1.0;
        assert!(cfg.validate().is_err());
    }
}
