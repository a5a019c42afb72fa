//! Experiment configuration files.
//!
//! ```toml
//! [data]
//! synth = { units = 200, t = 200 }   # or: csv = "series.csv"
//! fractions = [0.6, 0.2, 0.2]        # train, test, validation
//!
//! [experiment]
//! m = 20
//! n = 8
//! l_set = [2, 4, 6]
//! seeds = [0, 1, 2, 3, 4]
//!
//! [gen]
//! epochs = 200
//!
//! [pred]
//! epochs = 20
//!
//! [itc]
//! groups = 4
//! ```
//!
//! Unknown keys are rejected. Every section may be omitted.

use crate::error::{CliError, Result};
use genf_core::cwgan::GenConfig;
use genf_core::predictor::PredConfig;
use genf_core::strategies::StrategyConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSource {
    pub units: usize,
    pub t: usize,
    /// Process seed; defaults to the run's master seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthSource>,
    pub fractions: [f64; 3],
}

impl Default for DataSection {
    fn default() -> Self {
        DataSection {
            csv: None,
            synth: None,
            fractions: [0.6, 0.2, 0.2],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub m: usize,
    pub n: usize,
    pub l_set: Vec<usize>,
    pub seeds: Vec<u64>,
    pub target_feature: usize,
    pub noise_draws: usize,
    pub output: PathBuf,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            m: 20,
            n: 8,
            l_set: vec![2, 4, 6],
            seeds: vec![0],
            target_feature: 0,
            noise_draws: 1,
            output: PathBuf::from("genf-out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ItcSection {
    pub groups: usize,
    pub k: usize,
    pub fraction: f64,
}

impl Default for ItcSection {
    fn default() -> Self {
        let d = StrategyConfig::default();
        ItcSection {
            groups: d.itc_groups,
            k: d.itc_k,
            fraction: d.itc_fraction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: DataSection,
    pub experiment: ExperimentSection,
    pub gen: GenConfig,
    pub pred: PredConfig,
    pub itc: ItcSection,
    /// Directory of the config file; relative CSV paths resolve against it.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

fn default_synth() -> SynthSource {
    SynthSource {
        units: 200,
        t: 200,
        seed: None,
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            data: DataSection {
                synth: Some(default_synth()),
                ..DataSection::default()
            },
            experiment: ExperimentSection::default(),
            gen: GenConfig::default(),
            pred: PredConfig::default(),
            itc: ItcSection::default(),
            base_dir: None,
        }
    }
}

impl ExperimentConfig {
    /// Parse and validate. Without a data source the default synthetic process is used.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
            let msg = e.message().replace('\n', " ");
            CliError::Config(match e.span() {
                Some(span) => {
                    let line = text[..span.start].matches('\n').count() + 1;
                    format!("line {line}: {msg}")
                }
                None => msg,
            })
        })?;
        if cfg.data.csv.is_none() && cfg.data.synth.is_none() {
            cfg.data.synth = Some(default_synth());
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises to TOML")
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.data;
        if d.csv.is_some() == d.synth.is_some() {
            return Err(CliError::Config(String::from("[data] needs exactly one of `csv` or `synth`")));
        }
        if d.fractions.iter().any(|f| !(0.0..=1.0).contains(f)) || (d.fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(CliError::Config(String::from("[data] fractions must be in [0, 1] and sum to 1")));
        }
        let e = &self.experiment;
        if e.seeds.is_empty() {
            return Err(CliError::Config(String::from("[experiment] seeds must not be empty")));
        }
        if e.n < 1 {
            return Err(CliError::Config(String::from("[experiment] n must be >= 1")));
        }
        if let Some(&l) = e.l_set.iter().find(|&&l| l >= e.n) {
            return Err(genf_core::Error::SyntheticWindow { l, n: e.n }.into());
        }
        self.to_strategy_config().validate()?;
        Ok(())
    }

    pub fn to_strategy_config(&self) -> StrategyConfig {
        StrategyConfig {
            m: self.experiment.m,
            target_feature: self.experiment.target_feature,
            gen: self.gen.clone(),
            pred: self.pred.clone(),
            itc_groups: self.itc.groups,
            itc_k: self.itc.k,
            itc_fraction: self.itc.fraction,
            noise_draws: self.experiment.noise_draws,
        }
    }

    pub fn fractions(&self) -> (f64, f64, f64) {
        let [a, b, c] = self.data.fractions;
        (a, b, c)
    }

    /// SHA-256 of the compact JSON form. The output directory is excluded so
    /// the same experiment written elsewhere keeps its hash.
    pub fn hash(&self) -> String {
        let mut canon = self.clone();
        canon.experiment.output = PathBuf::new();
        let json = serde_json::to_string(&canon).expect("config serialises to JSON");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn output_dir(&self) -> &Path {
        &self.experiment.output
    }

    pub fn csv_path(&self) -> Option<PathBuf> {
        let csv = self.data.csv.as_ref()?;
        Some(match &self.base_dir {
            Some(dir) if csv.is_relative() => dir.join(csv),
            _ => csv.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_default() {
        let cfg = ExperimentConfig::parse("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.gen, GenConfig::default());
    }

    #[test]
    fn unknown_key_rejected() {
        let err = ExperimentConfig::parse("[gen]\nepochz = 3\n").unwrap_err();
        assert_eq!(err.kind(), "config");
        assert!(err.to_string().contains("epochz"), "{err}");
        assert!(err.to_string().starts_with("line 2"), "{err}");
        assert!(ExperimentConfig::parse("[nope]\n").is_err());
    }

    #[test]
    fn l_at_or_past_n_rejected() {
        let err = ExperimentConfig::parse("[experiment]\nn = 4\nl_set = [1, 4]\n").unwrap_err();
        assert_eq!(err.kind(), "synthetic-window");
    }

    #[test]
    fn one_data_source() {
        let err = ExperimentConfig::parse("[data]\ncsv = \"a.csv\"\nsynth = { units = 3, t = 30 }\n").unwrap_err();
        assert_eq!(err.kind(), "config");
        assert!(ExperimentConfig::parse("[data]\ncsv = \"a.csv\"\nsynth = {}\n").is_err());
        let cfg = ExperimentConfig::parse("[data]\ncsv = \"a.csv\"\n").unwrap();
        assert!(cfg.data.synth.is_none());
    }

    #[test]
    fn hash_survives_toml_roundtrip() {
        let cfg = ExperimentConfig::parse("[gen]\neta = 10.0\nepoch_samples = 500\n[experiment]\nseeds = [3, 4]\n").unwrap();
        let back = ExperimentConfig::parse(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
        assert_eq!(cfg.hash().len(), 64);
        let mut moved = cfg.clone();
        moved.experiment.output = PathBuf::from("elsewhere");
        assert_eq!(moved.hash(), cfg.hash());
        let mut changed = cfg.clone();
        changed.gen.eta = 9.0;
        assert_ne!(changed.hash(), cfg.hash());
    }
}
