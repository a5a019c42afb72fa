use clap::{Args, Parser, Subcommand, ValueEnum};
use genf::checkpoint::{self, Checkpoint};
use genf::config::ExperimentConfig;
use genf::csv_io;
use genf::error::{CliError, Result};
use genf::experiment::{self, Session};
use genf::manifest::{self, SplitManifest};
use genf::report::{self, ReportV1};
use genf_core::cwgan::{generate_recursive, train_cwgan};
use genf_core::data::{invert_scale, RawSeries};
use genf_core::nn::Mat;
use genf_core::rng::derive_seed;
use genf_core::strategies::{self, GenfStage, StrategyKind};
use genf_core::synth::ProcessSpec;
use genf_core::theory::{self, TheoryParams};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "genf", version, about = "Generative forecasting experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment config (TOML). Defaults apply when omitted.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Master seed; defaults to the first seed of the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides `experiment.output`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    Df,
    If,
    Genf,
}

impl From<StrategyArg> for StrategyKind {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Df => StrategyKind::Df,
            StrategyArg::If => StrategyKind::If,
            StrategyArg::Genf => StrategyKind::Genf,
        }
    }
}

#[derive(Args, Clone)]
struct StrategyOpts {
    #[arg(long, value_enum)]
    strategy: StrategyArg,
    /// Synthetic window length (GenF only).
    #[arg(long = "L", default_value_t = 0)]
    l: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Load the configured data and write it back in canonical CSV form.
    Ingest(Common),
    /// Write the unit split and the ITC partition.
    Split(Common),
    /// Train the CWGAN on the ITC `G` units.
    TrainGan(Common),
    /// Roll each test unit's first window forward `L` steps (original units).
    Generate {
        #[command(flatten)]
        common: Common,
        #[arg(long = "L")]
        l: usize,
        /// GAN checkpoint; defaults to `<out>/seed-<s>/gan.ckpt`.
        #[arg(long)]
        gan: Option<PathBuf>,
    },
    /// Train a predictor and save its checkpoint.
    TrainPredictor {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        strategy: StrategyOpts,
        #[arg(long)]
        gan: Option<PathBuf>,
    },
    /// Train and evaluate one strategy end to end.
    Forecast {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        strategy: StrategyOpts,
    },
    /// Score saved checkpoints on the test units.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        strategy: StrategyOpts,
        #[arg(long)]
        predictor: Option<PathBuf>,
        #[arg(long)]
        gan: Option<PathBuf>,
    },
    /// DF, IF and GenF for every configured L and seed.
    Sweep(Common),
    /// Sweep, then count the seeds where GenF has the lowest MSE.
    Bench(Common),
    /// Bias-variance bounds and the corollary verdict.
    Theory(TheoryArgs),
    /// Synthetic benchmark data.
    Synthbench {
        #[command(subcommand)]
        action: SynthAction,
    },
}

#[derive(Args)]
struct TheoryArgs {
    #[arg(long, default_value_t = 8)]
    n: usize,
    /// Print `U_genf` for every L in 1..N.
    #[arg(long)]
    grid: bool,
    /// L reported by the single-L bounds line.
    #[arg(long = "L", default_value_t = 1)]
    l: usize,
    #[arg(long, default_value_t = 0.5)]
    l1: f64,
    #[arg(long, default_value_t = 0.1)]
    l2: f64,
    #[arg(long, default_value_t = 0.1)]
    sigma_i_sq: f64,
    #[arg(long, default_value_t = 0.1)]
    sigma_d_sq: f64,
    #[arg(long, default_value_t = 1.0)]
    beta0: f64,
    #[arg(long, default_value_t = 1.0)]
    beta1: f64,
    #[arg(long, default_value_t = 2.0)]
    beta2: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Relative tolerance for U_dir ≈ U_iter.
    #[arg(long, default_value_t = 1e-3)]
    rel_tol: f64,
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum SynthAction {
    /// Write a simulated process as ingestion CSV.
    Emit {
        #[arg(long, default_value_t = 200)]
        units: usize,
        #[arg(long, default_value_t = 200)]
        t: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// AR(1) coefficient; the default 3-feature VAR(2) when absent.
        #[arg(long)]
        ar1: Option<f64>,
        #[arg(long, default_value_t = 0.1)]
        sigma: f64,
        /// Destination file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

struct Ctx {
    cfg: ExperimentConfig,
    seed: u64,
}

impl Ctx {
    fn new(c: &Common) -> Result<Self> {
        let mut cfg = match &c.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(out) = &c.out {
            cfg.experiment.output = out.clone();
        }
        let seed = c.seed.unwrap_or(cfg.experiment.seeds[0]);
        Ok(Ctx { cfg, seed })
    }

    fn dir(&self) -> PathBuf {
        experiment::seed_dir(&self.cfg, self.seed)
    }

    fn session(&self) -> Result<Session> {
        Session::open(&self.cfg, self.seed)
    }

    fn check_strategy(&self, s: &StrategyOpts) -> Result<()> {
        let n = self.cfg.experiment.n;
        if s.l >= n {
            return Err(genf_core::Error::SyntheticWindow { l: s.l, n }.into());
        }
        if s.strategy != StrategyArg::Genf && s.l != 0 {
            return Err(CliError::Config(String::from("--L applies to --strategy genf only")));
        }
        Ok(())
    }
}

fn file_label(kind: StrategyKind, l: usize) -> String {
    report::label(kind, l).to_ascii_lowercase()
}

fn save_run(dir: &Path, rep: &ReportV1, predictions: &[strategies::PredictionRow]) -> Result<()> {
    let tag = file_label(rep.strategy, rep.l);
    manifest::write(&dir.join(format!("report-{tag}.json")), &rep.to_json())?;
    manifest::write(&dir.join(format!("predictions-{tag}.csv")), &manifest::predictions_csv(predictions))
}

fn print_metrics(rep: &ReportV1) {
    let gen = rep.generation_mse.map_or_else(String::new, |g| format!(" gen_mse {g:.6}"));
    println!(
        "{} seed {}: mse {:.6} mae {:.6} smape {:.3}%{} params {}",
        rep.label, rep.master_seed, rep.metrics.mse, rep.metrics.mae, rep.metrics.smape, gen, rep.param_counts.total
    );
}

fn load_gan(path: Option<&PathBuf>, dir: &Path) -> Result<genf_core::cwgan::Cwgan> {
    let path = path.cloned().unwrap_or_else(|| dir.join("gan.ckpt"));
    checkpoint::gan_from(&Checkpoint::load(&path)?)
}

fn ingest(c: &Common) -> Result<()> {
    let ctx = Ctx::new(c)?;
    let raw = experiment::load_raw(&ctx.cfg, ctx.seed)?;
    let path = ctx.dir().join("data.csv");
    manifest::ensure_parent(&path)?;
    csv_io::save_csv(&path, &raw)?;
    let lens: Vec<usize> = raw.iter().map(RawSeries::len).collect();
    let missing: usize = raw.iter().map(|s| s.missing.iter().filter(|m| **m).count()).sum();
    println!(
        "{} units, K={}, T in [{}, {}], {} missing cells -> {}",
        raw.len(),
        raw[0].k(),
        lens.iter().min().unwrap_or(&0),
        lens.iter().max().unwrap_or(&0),
        missing,
        path.display()
    );
    Ok(())
}

fn split(c: &Common) -> Result<()> {
    let ctx = Ctx::new(c)?;
    let s = ctx.session()?;
    let partition = strategies::itc_split(&s.data, &s.strategy, &s.seeds)?;
    manifest::write(&s.dir.join("split.toml"), &SplitManifest::from_data(&s.data).to_toml())?;
    manifest::write(&s.dir.join("partition.tsv"), &manifest::partition_tsv(&partition))?;
    println!(
        "train {} / test {} / validation {} units; G {} / P {}",
        s.data.train.len(),
        s.data.test.len(),
        s.data.validation.len(),
        partition.subset_g.len(),
        partition.subset_p.len()
    );
    Ok(())
}

fn train_gan(c: &Common) -> Result<()> {
    let ctx = Ctx::new(c)?;
    let s = ctx.session()?;
    let partition = strategies::itc_split(&s.data, &s.strategy, &s.seeds)?;
    let ds = strategies::gan_windows(&s.data, &partition, &s.strategy)?;
    let (gan, log) = train_cwgan(&ds, &s.strategy.gen, s.seeds.gan)?;
    let path = s.dir.join("gan.ckpt");
    manifest::ensure_parent(&path)?;
    checkpoint::gan_checkpoint(&gan).save(&path)?;
    manifest::write(&s.dir.join("gan_log.csv"), &manifest::gan_log_csv(&log))?;
    let (g, cr) = gan.param_counts();
    println!("CWGAN trained: {} epochs, generator {g} + critic {cr} params", log.len());
    Ok(())
}

fn generate(c: &Common, l: usize, gan_path: Option<&PathBuf>) -> Result<()> {
    let ctx = Ctx::new(c)?;
    let s = ctx.session()?;
    let gan = load_gan(gan_path, &s.dir)?;
    let m = s.strategy.m;
    let mut out = Vec::new();
    for (i, unit) in s.data.test.iter().enumerate() {
        if unit.len() < m {
            continue;
        }
        let window = Mat::from_vec(m, unit.k(), unit.values[..m * unit.k()].to_vec())?;
        let g = generate_recursive(&gan.generator, &window, l, derive_seed(s.seeds.noise, i as u64))?;
        let mut values = window.data.clone();
        values.extend_from_slice(&g.block.data);
        let series = RawSeries::new(unit.unit_id.clone(), unit.feature_names.clone(), values)?;
        out.push(invert_scale(&series, &s.data.scaling));
    }
    let path = s.dir.join(format!("generated-L{l}.csv"));
    manifest::ensure_parent(&path)?;
    csv_io::save_csv(&path, &out)?;
    println!("{} test units: {m} observed + {l} generated rows -> {}", out.len(), path.display());
    Ok(())
}

fn stage_for(s: &Session, l: usize, gan_path: Option<&PathBuf>) -> Result<Option<GenfStage>> {
    if l == 0 {
        return Ok(None);
    }
    Ok(Some(s.stage_with(load_gan(gan_path, &s.dir)?)?))
}

fn train_predictor(c: &Common, opts: &StrategyOpts, gan_path: Option<&PathBuf>) -> Result<()> {
    let ctx = Ctx::new(c)?;
    ctx.check_strategy(opts)?;
    let s = ctx.session()?;
    let kind: StrategyKind = opts.strategy.into();
    let (model, log) = match (kind, opts.l) {
        (StrategyKind::If, _) => strategies::train_iterative(&s.data, s.n, &s.strategy, &s.seeds)?,
        (StrategyKind::Genf, l) if l > 0 => {
            let stage = stage_for(&s, l, gan_path)?.expect("l > 0");
            strategies::train_genf(&s.data, &stage, s.n, l, &s.strategy, &s.seeds)?
        }
        _ => strategies::train_direct(&s.data, s.n, &s.strategy, &s.seeds)?,
    };
    let tag = file_label(if opts.l == 0 && kind == StrategyKind::Genf { StrategyKind::Df } else { kind }, opts.l);
    let path = s.dir.join(format!("predictor-{tag}.ckpt"));
    manifest::ensure_parent(&path)?;
    checkpoint::predictor_checkpoint(&model).save(&path)?;
    manifest::write(&s.dir.join(format!("pred_log-{tag}.csv")), &manifest::pred_log_csv(&log))?;
    println!("predictor trained: {} epochs, {} params -> {}", log.len(), model.param_count(), path.display());
    Ok(())
}

fn forecast(c: &Common, opts: &StrategyOpts) -> Result<()> {
    let ctx = Ctx::new(c)?;
    ctx.check_strategy(opts)?;
    let s = ctx.session()?;
    let run = s.forecast(opts.strategy.into(), opts.l, None)?;
    let rep = s.report(&run.report);
    save_run(&s.dir, &rep, &run.report.predictions)?;
    print_metrics(&rep);
    Ok(())
}

fn evaluate(c: &Common, opts: &StrategyOpts, pred_path: Option<&PathBuf>, gan_path: Option<&PathBuf>) -> Result<()> {
    let ctx = Ctx::new(c)?;
    ctx.check_strategy(opts)?;
    let s = ctx.session()?;
    let mut kind: StrategyKind = opts.strategy.into();
    if kind == StrategyKind::Genf && opts.l == 0 {
        kind = StrategyKind::Df;
    }
    let pred_path = pred_path
        .cloned()
        .unwrap_or_else(|| s.dir.join(format!("predictor-{}.ckpt", file_label(kind, opts.l))));
    let model = checkpoint::predictor_from(&Checkpoint::load(&pred_path)?)?;
    let (d, cfg, seeds) = (&s.data, &s.strategy, &s.seeds);
    let run = match kind {
        StrategyKind::Df => strategies::evaluate_direct(d, &model, s.n, cfg, seeds)?,
        StrategyKind::If => strategies::evaluate_iterative(d, &model, s.n, cfg, seeds)?,
        StrategyKind::Genf => {
            let gan = load_gan(gan_path, &s.dir)?;
            strategies::evaluate_genf(d, &gan, &model, s.n, opts.l, cfg, seeds)?
        }
    };
    let rep = s.report(&run);
    save_run(&s.dir, &rep, &run.predictions)?;
    print_metrics(&rep);
    Ok(())
}

fn sweep(c: &Common, bench: bool) -> Result<()> {
    let ctx = Ctx::new(c)?;
    let mut cfg = ctx.cfg.clone();
    if c.seed.is_some() {
        cfg.experiment.seeds = vec![ctx.seed];
    }
    let sweeps = experiment::sweep_all(&cfg, experiment::thread_count()?)?;
    for reports in &sweeps {
        let dir = experiment::seed_dir(&cfg, reports[0].master_seed);
        for r in reports {
            let tag = file_label(r.strategy, r.l);
            manifest::write(&dir.join(format!("report-{tag}.json")), &r.to_json())?;
        }
    }
    let flat: Vec<ReportV1> = sweeps.iter().flatten().cloned().collect();
    let name = if bench { "bench.csv" } else { "sweep.csv" };
    manifest::write(&cfg.output_dir().join(name), &manifest::sweep_csv(&flat))?;
    print!("{}", manifest::sweep_table(&flat));
    if bench {
        let summary = experiment::bench_summary(&sweeps)?;
        println!();
        print!("{}", summary.render());
        manifest::write(&cfg.output_dir().join("bench.txt"), &summary.render())?;
    }
    Ok(())
}

fn theory_cmd(a: &TheoryArgs) -> Result<()> {
    let p = TheoryParams {
        l1: a.l1,
        l2: a.l2,
        sigma_i_sq: a.sigma_i_sq,
        sigma_d_sq: a.sigma_d_sq,
        beta0: a.beta0,
        beta1: a.beta1,
        beta2: a.beta2,
        alpha: a.alpha,
        n: a.n,
        l: a.l,
    };
    let bounds = theory::bounds(&p)?;
    let verdict = theory::corollary_check(&p, a.rel_tol)?;
    if a.json {
        let grid: Vec<serde_json::Value> = if a.grid {
            verdict.grid.iter().map(|(l, u)| serde_json::json!({ "L": l, "u_genf": u })).collect()
        } else {
            Vec::new()
        };
        let out = serde_json::json!({
            "params": p,
            "bounds": bounds,
            "grid": grid,
            "corollary": {
                "holds_some_l": verdict.holds_some_l,
                "holds_all_l": verdict.holds_all_l,
                "threshold": verdict.threshold,
                "argmin_l": verdict.argmin_l,
            },
        });
        println!("{}", serde_json::to_string_pretty(&out).expect("json"));
        return Ok(());
    }
    println!("N={}  U_dir={:.6}  U_iter={:.6}  U_genf(L={})={:.6}", p.n, bounds.u_dir, bounds.u_iter, p.l, bounds.u_genf);
    if a.grid {
        println!("{:>4} {:>14}", "L", "U_genf");
        for (l, u) in &verdict.grid {
            let mark = if *l == verdict.argmin_l { "  <- min" } else { "" };
            println!("{l:>4} {u:>14.6}{mark}");
        }
    }
    println!(
        "corollary: beta0={} threshold={:.6} holds_some_L={} holds_all_L={}",
        p.beta0, verdict.threshold, verdict.holds_some_l, verdict.holds_all_l
    );
    Ok(())
}

fn synth_emit(units: usize, t: usize, seed: u64, ar1: Option<f64>, sigma: f64, out: Option<&PathBuf>) -> Result<()> {
    let spec = match ar1 {
        Some(phi) => ProcessSpec::ar(&[phi], sigma, units, t, seed),
        None => ProcessSpec {
            noise_sigma: sigma,
            ..ProcessSpec::default_var(units, t, seed)
        },
    };
    let series = spec.simulate()?;
    match out {
        Some(path) => {
            manifest::ensure_parent(path)?;
            csv_io::save_csv(path, &series)
        }
        None => csv_io::write_series(&series, std::io::stdout().lock()),
    }
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Ingest(c) => ingest(c),
        Command::Split(c) => split(c),
        Command::TrainGan(c) => train_gan(c),
        Command::Generate { common, l, gan } => generate(common, *l, gan.as_ref()),
        Command::TrainPredictor { common, strategy, gan } => train_predictor(common, strategy, gan.as_ref()),
        Command::Forecast { common, strategy } => forecast(common, strategy),
        Command::Evaluate {
            common,
            strategy,
            predictor,
            gan,
        } => evaluate(common, strategy, predictor.as_ref(), gan.as_ref()),
        Command::Sweep(c) => sweep(c, false),
        Command::Bench(c) => sweep(c, true),
        Command::Theory(a) => theory_cmd(a),
        Command::Synthbench {
            action:
                SynthAction::Emit {
                    units,
                    t,
                    seed,
                    ar1,
                    sigma,
                    out,
                },
        } => synth_emit(*units, *t, *seed, *ar1, *sigma, out.as_ref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.one_line());
            ExitCode::FAILURE
        }
    }
}
