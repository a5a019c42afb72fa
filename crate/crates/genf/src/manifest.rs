//! Small text artifacts written next to reports: split manifests, ITC
//! partitions, training logs, predictions and sweep tables.

use crate::error::{CliError, Result};
use crate::report::ReportV1;
use genf_core::cwgan::EpochLog;
use genf_core::mi::ItcPartition;
use genf_core::predictor::PredEpochLog;
use genf_core::strategies::{ExperimentData, PredictionRow};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitManifest {
    pub train: Units,
    pub test: Units,
    pub validation: Units,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Units {
    pub units: Vec<String>,
}

impl SplitManifest {
    pub fn from_data(data: &ExperimentData) -> Self {
        let ids = |v: &[genf_core::data::RawSeries]| Units {
            units: v.iter().map(|s| s.unit_id.clone()).collect(),
        };
        SplitManifest {
            train: ids(&data.train),
            test: ids(&data.test),
            validation: ids(&data.validation),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serialises")
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("split manifest: {}", e.message())))
    }
}

/// `unit<TAB>G|P<TAB>score`, in descending score order.
pub fn partition_tsv(p: &ItcPartition) -> String {
    let mut out = String::from("unit\tside\tscore\n");
    for unit in p.groups.iter().flatten() {
        let side = p.side(unit).unwrap_or('-');
        writeln!(out, "{unit}\t{side}\t{}", p.scores[unit]).unwrap();
    }
    out
}

fn csv_string<F>(header: &[&str], mut rows: F) -> String
where
    F: FnMut(&mut csv::Writer<&mut Vec<u8>>) -> csv::Result<()>,
{
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(header).expect("in-memory write");
        rows(&mut w).expect("in-memory write");
        w.flush().expect("in-memory write");
    }
    String::from_utf8(buf).expect("csv is utf-8")
}

pub fn gan_log_csv(log: &[EpochLog]) -> String {
    csv_string(&["epoch", "critic_loss", "gen_loss", "supervised_term", "penalty_mean"], |w| {
        for e in log {
            w.write_record([
                e.epoch.to_string(),
                e.critic_loss.to_string(),
                e.gen_loss.to_string(),
                e.supervised_term.to_string(),
                e.penalty_mean.to_string(),
            ])?;
        }
        Ok(())
    })
}

pub fn pred_log_csv(log: &[PredEpochLog]) -> String {
    csv_string(&["epoch", "train_mse", "val_mse"], |w| {
        for e in log {
            w.write_record([e.epoch.to_string(), e.train_mse.to_string(), e.val_mse.to_string()])?;
        }
        Ok(())
    })
}

pub fn predictions_csv(rows: &[PredictionRow]) -> String {
    csv_string(&["window_id", "unit", "horizon", "y_true", "y_pred"], |w| {
        for r in rows {
            w.write_record([
                r.window_id.to_string(),
                r.unit.clone(),
                r.horizon.to_string(),
                r.y_true.to_string(),
                r.y_pred.to_string(),
            ])?;
        }
        Ok(())
    })
}

pub fn sweep_csv(reports: &[ReportV1]) -> String {
    csv_string(&["seed", "label", "L", "N", "mse", "mae", "smape", "generation_mse", "params"], |w| {
        for r in reports {
            w.write_record([
                r.master_seed.to_string(),
                r.label.clone(),
                r.l.to_string(),
                r.n.to_string(),
                r.metrics.mse.to_string(),
                r.metrics.mae.to_string(),
                r.metrics.smape.to_string(),
                r.generation_mse.map_or_else(String::new, |v| v.to_string()),
                r.param_counts.total.to_string(),
            ])?;
        }
        Ok(())
    })
}

/// Aligned text table with one row per report.
pub fn sweep_table(reports: &[ReportV1]) -> String {
    let mut out = format!(
        "{:>5}  {:<8} {:>10} {:>10} {:>9} {:>8}\n",
        "seed", "strategy", "MSE", "MAE", "sMAPE%", "params"
    );
    for r in reports {
        writeln!(
            out,
            "{:>5}  {:<8} {:>10.5} {:>10.5} {:>9.3} {:>8}",
            r.master_seed, r.label, r.metrics.mse, r.metrics.mae, r.metrics.smape, r.param_counts.total
        )
        .unwrap();
    }
    out
}

pub fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e)),
        _ => Ok(()),
    }
}

/// Write `text`, creating parent directories as needed.
pub fn write(path: &Path, text: &str) -> Result<()> {
    ensure_parent(path)?;
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    #[test]
    fn split_manifest_roundtrip() {
        let m = SplitManifest {
            train: Units {
                units: vec![String::from("a"), String::from("b")],
            },
            test: Units {
                units: vec![String::from("c")],
            },
            validation: Units { units: vec![] },
        };
        let text = m.to_toml();
        assert!(text.contains("[train]") && text.contains("[validation]"));
        assert_eq!(SplitManifest::parse(&text).unwrap(), m);
    }

    #[test]
    fn partition_rows() {
        let scores: BTreeMap<String, f64> = [("a", 3.0), ("b", 1.0)].iter().map(|(k, v)| (k.to_string(), *v)).collect();
        let p = ItcPartition {
            groups: vec![vec![String::from("a")], vec![String::from("b")]],
            subset_g: vec![String::from("a")],
            subset_p: vec![String::from("b")],
            scores,
        };
        assert_eq!(partition_tsv(&p), "unit\tside\tscore\na\tG\t3\nb\tP\t1\n");
    }

    #[test]
    fn logs_have_headers() {
        let log = [PredEpochLog {
            epoch: 0,
            train_mse: 0.5,
            val_mse: f64::NAN,
        }];
        assert_eq!(pred_log_csv(&log), "epoch,train_mse,val_mse\n0,0.5,NaN\n");
        assert!(gan_log_csv(&[]).starts_with("epoch,critic_loss"));
    }
}
