//! Seeded experiment runs shared by the CLI subcommands and the acceptance suite.

use crate::config::ExperimentConfig;
use crate::csv_io;
use crate::error::{CliError, Result};
use crate::report::ReportV1;
use genf_core::cwgan::Cwgan;
use genf_core::data::RawSeries;
use genf_core::strategies::{
    self, ExperimentData, GenfStage, RunArtifacts, Seeds, StrategyConfig, StrategyKind,
};
use genf_core::synth::ProcessSpec;
use rayon::prelude::*;
use std::path::PathBuf;

/// Raw units for one master seed: the CSV file, or the synthetic process
/// seeded with the configured seed (falling back to the master seed).
pub fn load_raw(cfg: &ExperimentConfig, master_seed: u64) -> Result<Vec<RawSeries>> {
    if let Some(path) = cfg.csv_path() {
        let raw = csv_io::load_csv(&path)?;
        if raw.is_empty() {
            return Err(genf_core::Error::EmptyDataset("csv has no rows").into());
        }
        return Ok(raw);
    }
    let s = cfg.data.synth.as_ref().ok_or_else(|| CliError::Config(String::from("no data source")))?;
    Ok(ProcessSpec::default_var(s.units, s.t, s.seed.unwrap_or(master_seed)).simulate()?)
}

/// Everything a single-seed run needs.
#[derive(Debug, Clone)]
pub struct Session {
    pub master_seed: u64,
    pub seeds: Seeds,
    pub data: ExperimentData,
    pub strategy: StrategyConfig,
    pub n: usize,
    pub config_hash: String,
    pub dir: PathBuf,
}

impl Session {
    pub fn open(cfg: &ExperimentConfig, master_seed: u64) -> Result<Self> {
        let raw = load_raw(cfg, master_seed)?;
        let seeds = Seeds::from_master(master_seed);
        let data = ExperimentData::prepare(&raw, cfg.fractions(), seeds.split)?;
        let strategy = cfg.to_strategy_config();
        if strategy.target_feature >= data.k() {
            return Err(CliError::Config(format!(
                "target_feature {} out of range for K={}",
                strategy.target_feature,
                data.k()
            )));
        }
        Ok(Session {
            master_seed,
            seeds,
            data,
            strategy,
            n: cfg.experiment.n,
            config_hash: cfg.hash(),
            dir: seed_dir(cfg, master_seed),
        })
    }

    pub fn report(&self, run: &strategies::ForecastReport) -> ReportV1 {
        ReportV1::from_forecast(run, self.master_seed, &self.config_hash)
    }

    pub fn genf_stage(&self) -> Result<GenfStage> {
        Ok(strategies::prepare_genf(&self.data, &self.strategy, &self.seeds)?)
    }

    /// Rebuild a stage around a trained GAN; the ITC split is recomputed.
    pub fn stage_with(&self, gan: Cwgan) -> Result<GenfStage> {
        let partition = strategies::itc_split(&self.data, &self.strategy, &self.seeds)?;
        Ok(GenfStage {
            partition,
            gan,
            gan_log: Vec::new(),
        })
    }

    /// Train and score one strategy. GenF with `L = 0` is DF.
    pub fn forecast(&self, kind: StrategyKind, l: usize, stage: Option<&GenfStage>) -> Result<RunArtifacts> {
        let (d, c, s, n) = (&self.data, &self.strategy, &self.seeds, self.n);
        Ok(match kind {
            StrategyKind::Df => strategies::run_direct(d, n, c, s)?,
            StrategyKind::If => strategies::run_iterative(d, n, c, s)?,
            StrategyKind::Genf => match stage {
                Some(st) if l > 0 && l < n => strategies::run_genf_with(d, st, n, l, c, s)?,
                _ => strategies::run_genf(d, n, l, c, s)?,
            },
        })
    }

    /// DF, IF and GenF for every configured `L`, sharing one GAN.
    pub fn sweep(&self, l_set: &[usize]) -> Result<Vec<ReportV1>> {
        let runs = strategies::sweep_l(&self.data, self.n, l_set, &self.strategy, &self.seeds)?;
        Ok(runs.iter().map(|r| self.report(r)).collect())
    }
}

pub fn seed_dir(cfg: &ExperimentConfig, seed: u64) -> PathBuf {
    cfg.output_dir().join(format!("seed-{seed}"))
}

/// Parallelism cap from `GENF_THREADS`; defaults to the machine's cores.
pub fn thread_count() -> Result<usize> {
    match std::env::var("GENF_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n >= 1)
            .ok_or_else(|| CliError::Config(format!("GENF_THREADS must be a positive integer, got `{v}`"))),
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Run `f` for each seed on at most `threads` workers. Results keep seed order.
pub fn per_seed<T, F>(seeds: &[u64], threads: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    pool.install(|| seeds.par_iter().map(|&s| f(s)).collect())
}

/// Sweep every configured seed.
pub fn sweep_all(cfg: &ExperimentConfig, threads: usize) -> Result<Vec<Vec<ReportV1>>> {
    per_seed(&cfg.experiment.seeds, threads, |seed| Session::open(cfg, seed)?.sweep(&cfg.experiment.l_set))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedOutcome {
    pub seed: u64,
    pub df: f64,
    pub iterative: f64,
    /// Best GenF MSE and its `L`.
    pub genf: (usize, f64),
    pub genf_wins: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSummary {
    pub outcomes: Vec<SeedOutcome>,
    pub wins: usize,
}

/// Did the best GenF row beat both DF and IF, seed by seed?
pub fn bench_summary(sweeps: &[Vec<ReportV1>]) -> Result<BenchSummary> {
    let mut outcomes = Vec::new();
    for reports in sweeps {
        let pick = |k: StrategyKind| reports.iter().find(|r| r.strategy == k).map(|r| r.metrics.mse);
        let (Some(df), Some(iterative)) = (pick(StrategyKind::Df), pick(StrategyKind::If)) else {
            return Err(CliError::Report(String::from("sweep lacks a DF or IF row")));
        };
        let genf = reports
            .iter()
            .filter(|r| r.strategy == StrategyKind::Genf)
            .map(|r| (r.l, r.metrics.mse))
            .fold(None, |best: Option<(usize, f64)>, cur| match best {
                Some(b) if b.1 <= cur.1 => Some(b),
                _ => Some(cur),
            })
            .ok_or_else(|| CliError::Report(String::from("sweep has no GenF row")))?;
        outcomes.push(SeedOutcome {
            seed: reports[0].master_seed,
            df,
            iterative,
            genf,
            genf_wins: genf.1 < df.min(iterative),
        });
    }
    let wins = outcomes.iter().filter(|o| o.genf_wins).count();
    Ok(BenchSummary { outcomes, wins })
}

impl BenchSummary {
    pub fn render(&self) -> String {
        let mut out = format!("{:>5} {:>10} {:>10} {:>14}  win\n", "seed", "DF", "IF", "best GenF");
        for o in &self.outcomes {
            out.push_str(&format!(
                "{:>5} {:>10.5} {:>10.5} {:>10.5} L={}  {}\n",
                o.seed,
                o.df,
                o.iterative,
                o.genf.1,
                o.genf.0,
                if o.genf_wins { "yes" } else { "no" }
            ));
        }
        out.push_str(&format!("GenF lowest on {}/{} seeds\n", self.wins, self.outcomes.len()));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn per_seed_keeps_order() {
        let out = per_seed(&[5, 1, 9, 3], 3, |s| Ok(s * 10)).unwrap();
        assert_eq!(out, vec![50, 10, 90, 30]);
        let err = per_seed(&[1, 2], 2, |s| if s == 2 { Err(CliError::Config(String::from("x"))) } else { Ok(s) });
        assert!(err.is_err());
    }
}
