use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use phasetrack::config::Config;
use phasetrack::emit::{self, Meta, TabularRow};
use phasetrack::error::{Error, Result};
use phasetrack::{estimator, lab, optics};

/// Adaptive homodyne phase-tracking simulator and prediction tool.
#[derive(Parser)]
#[command(name = "phasetrack", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Closed-form MSE predictions for the configured operating point.
    Predict(Common),
    /// Run a single closed-loop trial and emit the sampled trajectory.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Keep every n-th sample.
        #[arg(long, default_value_t = 1)]
        decimate: usize,
    },
    /// Monte Carlo MSE estimate over all configured trials.
    Mc(Common),
    /// Monte Carlo plus analytic traces over the configured squeezing levels.
    SweepSqueezing(Common),
    /// Monte Carlo plus analytic traces over the configured amplitude grid.
    SweepAlpha(Common),
    /// Predicted MSE over a (squeezing, anti-squeezing) grid with the
    /// loss-model curve overlaid.
    Heatmap(Common),
    /// Broadband vs effective-bandwidth predictions and photon-flux shares.
    Bandwidth(Common),
    /// Squeezing level minimizing the predicted smoothed MSE.
    Optimize(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker thread count; defaults to the number of cores.
    #[arg(long)]
    jobs: Option<usize>,
    /// Override the coherent photon flux.
    #[arg(long)]
    alpha_sq: Option<f64>,
    /// Override the measured squeezing level (dB, <= 0).
    #[arg(long, allow_hyphen_values = true)]
    squeezing_db: Option<f64>,
    /// Override the measured anti-squeezing level (dB, >= 0).
    #[arg(long)]
    antisqueezing_db: Option<f64>,
    /// Override the trial count.
    #[arg(long)]
    trials: Option<usize>,
    /// Override the trajectory duration, in milliseconds.
    #[arg(long)]
    duration_ms: Option<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl Common {
    fn config(&self) -> Result<Config> {
        let mut cfg = match &self.config {
            Some(path) => Config::from_path(path)?,
            None => Config::default(),
        };
        if let Some(seed) = self.seed {
            cfg.run.master_seed = seed;
        }
        if let Some(a2) = self.alpha_sq {
            cfg.beam.alpha_sq = a2;
        }
        if self.squeezing_db.is_some() || self.antisqueezing_db.is_some() {
            let (Some(s), Some(a)) = (self.squeezing_db, self.antisqueezing_db) else {
                return Err(Error::Config(
                    "--squeezing-db and --antisqueezing-db must be given together".into(),
                ));
            };
            cfg.beam.squeezing_db = Some(s);
            cfg.beam.antisqueezing_db = Some(a);
            cfg.beam.r_m = None;
            cfg.beam.r_p = None;
        }
        if let Some(t) = self.trials {
            cfg.run.trials = t;
        }
        if let Some(ms) = self.duration_ms {
            cfg.run.duration = ms * 1e-3;
        }
        Ok(cfg)
    }

    fn emit<R: TabularRow>(&self, cfg: &Config, rows: &[R]) -> Result<()> {
        let rendered = match self.format {
            FormatArg::Csv => emit::to_csv(rows)?,
            FormatArg::Json => {
                let meta = Meta::new(cfg.run.master_seed, cfg)?;
                emit::to_json(&meta, rows)?
            }
        };
        match &self.out {
            Some(path) => emit::write_file(path, &rendered),
            None => {
                print!("{rendered}");
                Ok(())
            }
        }
    }
}

/// One sampled instant of a simulated trajectory.
#[derive(Serialize)]
struct SampleRow {
    t: f64,
    phi: f64,
    current: f64,
    phi_f: f64,
    phi_s: f64,
}

impl TabularRow for SampleRow {
    const COLUMNS: &'static [&'static str] = &["t", "phi", "current", "phi_f", "phi_s"];
}

/// Optimal-squeezing search result.
#[derive(Serialize)]
struct OptimizeRow {
    alpha_sq: f64,
    l_sq: f64,
    /// Pure squeezing parameter at the optimum.
    r_star: f64,
    /// Measured squeezing level at the optimum, dB.
    squeezing_db: f64,
    /// Predicted smoothed MSE at the optimum.
    mse_pred: f64,
}

impl TabularRow for OptimizeRow {
    const COLUMNS: &'static [&'static str] =
        &["alpha_sq", "l_sq", "r_star", "squeezing_db", "mse_pred"];
}

fn run(cli: Cli) -> Result<()> {
    let common = match &cli.cmd {
        Cmd::Predict(c)
        | Cmd::Mc(c)
        | Cmd::SweepSqueezing(c)
        | Cmd::SweepAlpha(c)
        | Cmd::Heatmap(c)
        | Cmd::Bandwidth(c)
        | Cmd::Optimize(c) => c,
        Cmd::Simulate { common, .. } => common,
    };
    if let Some(jobs) = common.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let cfg = common.config()?;
    match &cli.cmd {
        Cmd::Predict(c) => {
            let sc = cfg.scenario()?;
            let plan = sc.plan()?;
            c.emit(&cfg, &[plan.prediction])
        }
        Cmd::Simulate {
            common: c,
            decimate,
        } => {
            if *decimate == 0 {
                return Err(Error::Parameter("--decimate must be >= 1".into()));
            }
            let sc = cfg.scenario()?;
            let tr = lab::run_closed_loop(&sc, 0)?;
            let rows: Vec<SampleRow> = tr
                .times()
                .enumerate()
                .step_by(*decimate)
                .map(|(k, t)| SampleRow {
                    t,
                    phi: tr.phi[k],
                    current: tr.current[k],
                    phi_f: tr.phi_f[k],
                    phi_s: tr.phi_s[k],
                })
                .collect();
            c.emit(&cfg, &rows)
        }
        Cmd::Mc(c) => {
            let sc = cfg.scenario()?;
            let report = lab::monte_carlo(&sc)?;
            c.emit(&cfg, &[report])
        }
        Cmd::SweepSqueezing(c) => {
            let sc = cfg.scenario()?;
            let levels = cfg.squeezing_levels()?;
            let rows = lab::sweep_squeezing(&sc, &levels)?;
            c.emit(&cfg, &rows)
        }
        Cmd::SweepAlpha(c) => {
            let sc = cfg.scenario()?;
            if cfg.sweep.alpha_sq.is_empty() {
                return Err(Error::Config("sweep: alpha_sq list is empty".into()));
            }
            let rows = lab::sweep_alpha(&sc, &cfg.sweep.alpha_sq)?;
            c.emit(&cfg, &rows)
        }
        Cmd::Heatmap(c) => {
            let sc = cfg.scenario()?;
            let l_sq = cfg
                .sweep
                .l_sq
                .ok_or_else(|| Error::Config("heatmap requires sweep.l_sq".into()))?;
            if cfg.sweep.squeezing_db.is_empty() || cfg.sweep.antisqueezing_db.is_empty() {
                return Err(Error::Config(
                    "heatmap requires sweep.squeezing_db and sweep.antisqueezing_db grids".into(),
                ));
            }
            let hm = lab::heatmap_squeezing(
                &sc,
                &cfg.sweep.squeezing_db,
                &cfg.sweep.antisqueezing_db,
                l_sq,
            )?;
            // CSV carries the cell grid; the loss curve rides along in JSON
            match c.format {
                FormatArg::Csv => c.emit(&cfg, &hm.cells),
                FormatArg::Json => {
                    let meta = Meta::new(cfg.run.master_seed, &cfg)?;
                    let rendered = emit::to_json(&meta, std::slice::from_ref(&hm))?;
                    match &c.out {
                        Some(path) => emit::write_file(path, &rendered),
                        None => {
                            print!("{rendered}");
                            Ok(())
                        }
                    }
                }
            }
        }
        Cmd::Bandwidth(c) => {
            let sc = cfg.scenario()?;
            let alphas = if cfg.sweep.alpha_sq.is_empty() {
                vec![sc.beam.alpha_sq]
            } else {
                cfg.sweep.alpha_sq.clone()
            };
            let rows = lab::bandwidth_comparison(&sc, &alphas)?;
            c.emit(&cfg, &rows)
        }
        Cmd::Optimize(c) => {
            let sc = cfg.scenario()?;
            let l_sq = cfg.sweep.l_sq.unwrap_or(0.0);
            let ae2 = sc.beam.effective_alpha_sq();
            let (r_star, db) = estimator::optimal_squeezing(ae2, sc.ou.kappa, sc.ou.lambda, l_sq)?;
            let (r_minus, r_plus) = optics::lossy_levels(r_star, l_sq);
            let pred = estimator::predict(
                ae2,
                sc.ou.kappa,
                sc.ou.lambda,
                -r_minus.ln() / 2.0,
                r_plus.ln() / 2.0,
            )?;
            c.emit(
                &cfg,
                &[OptimizeRow {
                    alpha_sq: sc.beam.alpha_sq,
                    l_sq,
                    r_star,
                    squeezing_db: db,
                    mse_pred: pred.sigma_s_sq,
                }],
            )
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
