//! Versioned report JSON.
//!
//! One report per strategy run. The layout is documented in
//! `docs/report-schema-v1.json`; [`validate`] enforces it together with the
//! invariants a JSON schema cannot express.

use crate::error::{CliError, Result};
use genf_core::metrics::MetricSet;
use genf_core::strategies::{ForecastReport, ParamCounts, Seeds, StrategyKind};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const SCHEMA: &str = "genf-report/v1";

/// Upper limit on trainable parameters of a GenF configuration.
pub const PARAM_BUDGET: usize = 12_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportV1 {
    pub schema: String,
    pub strategy: StrategyKind,
    /// Row label in sweep tables, e.g. `GenF-4`.
    pub label: String,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub master_seed: u64,
    pub seeds: Seeds,
    /// Horizon-`N` metrics of the target feature in original units.
    pub metrics: MetricSet,
    pub metric_scale: String,
    /// Scaled MSE of the synthetic block against the true future; GenF only.
    pub generation_mse: Option<f64>,
    pub param_counts: ParamCounts,
    pub param_budget: usize,
    pub config_hash: String,
    pub training_units: Vec<String>,
    pub test_units: Vec<String>,
}

pub fn label(kind: StrategyKind, l: usize) -> String {
    match kind {
        StrategyKind::Genf => format!("GenF-{l}"),
        k => k.label().to_string(),
    }
}

impl ReportV1 {
    pub fn from_forecast(r: &ForecastReport, master_seed: u64, config_hash: &str) -> Self {
        ReportV1 {
            schema: SCHEMA.to_string(),
            strategy: r.strategy,
            label: label(r.strategy, r.l),
            l: r.l,
            n: r.n,
            m: r.m,
            master_seed,
            seeds: r.seeds,
            metrics: r.metrics,
            metric_scale: String::from("unscaled"),
            generation_mse: r.generation_mse,
            param_counts: r.param_counts,
            param_budget: PARAM_BUDGET,
            config_hash: config_hash.to_string(),
            training_units: r.training_units.clone(),
            test_units: r.test_units.clone(),
        }
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| CliError::io(path, e))
    }
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Report(msg.into())
}

/// Parse and check a report.
pub fn validate(json: &str) -> Result<ReportV1> {
    let r: ReportV1 = serde_json::from_str(json).map_err(|e| bad(format!("report does not match {SCHEMA}: {e}")))?;
    if r.schema != SCHEMA {
        return Err(bad(format!("schema `{}`, expected `{SCHEMA}`", r.schema)));
    }
    if r.label != label(r.strategy, r.l) {
        return Err(bad(format!("label `{}` does not match strategy and L", r.label)));
    }
    let l_ok = match r.strategy {
        StrategyKind::Df => r.l == 0,
        StrategyKind::If => r.l + 1 == r.n,
        StrategyKind::Genf => r.l >= 1 && r.l < r.n,
    };
    if !l_ok || r.n < 1 || r.m < 1 {
        return Err(bad(format!("inconsistent L={} N={} M={}", r.l, r.n, r.m)));
    }
    let m = &r.metrics;
    if !(m.mse >= 0.0 && m.mae >= 0.0 && (0.0..=200.0).contains(&m.smape)) || m.n == 0 {
        return Err(bad("metrics out of range"));
    }
    if m.mae > m.mse.sqrt() * (1.0 + 1e-12) {
        return Err(bad("mae exceeds sqrt(mse)"));
    }
    if r.metric_scale != "unscaled" && r.metric_scale != "scaled" {
        return Err(bad(format!("unknown metric_scale `{}`", r.metric_scale)));
    }
    if (r.strategy == StrategyKind::Genf) != r.generation_mse.is_some() {
        return Err(bad("generation_mse is present exactly for GenF"));
    }
    let p = &r.param_counts;
    if p.total != p.generator + p.critic + p.predictor || p.predictor == 0 {
        return Err(bad("param_counts do not add up"));
    }
    if r.config_hash.len() != 64 || !r.config_hash.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b)) {
        return Err(bad("config_hash is not a sha256 hex digest"));
    }
    if let Some(u) = r.test_units.iter().find(|u| r.training_units.contains(u)) {
        return Err(bad(format!("unit {u} is listed as both training and test")));
    }
    Ok(r)
}

pub fn load(path: &Path) -> Result<ReportV1> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    validate(&text).map_err(|e| bad(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ReportV1 {
        ReportV1 {
            schema: SCHEMA.to_string(),
            strategy: StrategyKind::Genf,
            label: String::from("GenF-2"),
            l: 2,
            n: 8,
            m: 20,
            master_seed: 0,
            seeds: Seeds::from_master(0),
            metrics: MetricSet {
                mse: 0.25,
                mae: 0.4,
                smape: 30.0,
                n: 10,
            },
            metric_scale: String::from("unscaled"),
            generation_mse: Some(0.003),
            param_counts: ParamCounts {
                generator: 387,
                critic: 309,
                predictor: 5865,
                total: 6561,
            },
            param_budget: PARAM_BUDGET,
            config_hash: "ab".repeat(32),
            training_units: vec![String::from("u1")],
            test_units: vec![String::from("u2")],
        }
    }

    #[test]
    fn roundtrip_validates() {
        let r = sample();
        let json = r.to_json();
        assert!(json.contains("\"L\": 2"));
        assert_eq!(validate(&json).unwrap(), r);
    }

    #[test]
    fn rejects_broken_reports() {
        let mut r = sample();
        r.l = 8;
        assert!(validate(&r.to_json()).is_err());
        let mut r = sample();
        r.generation_mse = None;
        assert!(validate(&r.to_json()).is_err());
        let mut r = sample();
        r.param_counts.total += 1;
        assert!(validate(&r.to_json()).is_err());
        let mut r = sample();
        r.test_units.push(String::from("u1"));
        assert!(validate(&r.to_json()).is_err());
        let extra = sample().to_json().replacen('{', "{\"extra\": 1,", 1);
        assert_eq!(validate(&extra).unwrap_err().kind(), "report");
        let nan = sample().to_json().replace("0.25", "null");
        assert!(validate(&nan).is_err());
    }
}
