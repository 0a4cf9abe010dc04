use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "hawkes-intraday",
    version,
    about = "Marked Hawkes model for intraday electricity prices"
)]
pub struct Cli {
    /// Master seed for every random draw.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory receiving all output files.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Analysis window as `<start>:<end>` before delivery, e.g. `9h:1h`.
    #[arg(long, global = true)]
    pub window: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Fitted 18h product.
    #[value(name = "18h")]
    H18,
    /// Fitted 19h product.
    #[value(name = "19h")]
    H19,
    /// Fitted 20h product.
    #[value(name = "20h")]
    H20,
    /// Moderate regime μ₀=2, κ=1, α=5, β=10.
    Base,
}

#[derive(Debug, Clone, Args, Default)]
pub struct ParamArgs {
    /// Parameter set to start from.
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long)]
    pub mu0: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Session length in hours.
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub mean_j: Option<f64>,
    #[arg(long)]
    pub mean_j2: Option<f64>,
    #[arg(long)]
    pub f0: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SamplerKind {
    Lognormal,
    Exponential,
    Constant,
}

#[derive(Debug, Clone, Args, Default)]
pub struct SessionArgs {
    /// Glob of tick files (`timestamp_ms,price[,volume]`).
    #[arg(long, conflicts_with = "events")]
    pub ticks: Option<String>,
    /// Glob of event files written by `sim`.
    #[arg(long)]
    pub events: Option<String>,
    /// Delivery start, `HH:MM` UTC.
    #[arg(long)]
    pub delivery_time: Option<String>,
    /// Session open on the previous day, `HH:MM` UTC.
    #[arg(long)]
    pub open_time: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate sessions and optionally a Monte Carlo report.
    Sim {
        #[command(flatten)]
        params: ParamArgs,
        /// Jump law matched to the parameter moments.
        #[arg(long, value_enum)]
        sampler: Option<SamplerKind>,
        #[arg(long, default_value_t = 1)]
        n_paths: usize,
        /// Also write price grids with this step in seconds.
        #[arg(long)]
        grid_step: Option<f64>,
        /// Write Monte Carlo moment and signature-plot tables.
        #[arg(long)]
        mc: bool,
        /// Probe times for the Monte Carlo report, hours.
        #[arg(long, value_delimiter = ',', default_values_t = [1.0, 2.0, 4.0, 8.0])]
        times: Vec<f64>,
        /// Sampling steps for the Monte Carlo signature plot, seconds.
        #[arg(long, value_delimiter = ',', default_values_t = [1.0, 5.0, 30.0, 60.0, 300.0, 600.0])]
        deltas: Vec<f64>,
        /// Skip writing one event file per path.
        #[arg(long)]
        no_events: bool,
    },
    /// Maximum-likelihood fit on observed sessions.
    Fit {
        #[command(flatten)]
        sessions: SessionArgs,
        /// Start from these parameters instead of the signature-plot fit.
        #[command(flatten)]
        init: ParamArgs,
        #[arg(long, default_value_t = hawkes_intraday::estimate::DEFAULT_KAPPA0)]
        kappa0: f64,
        #[arg(long, default_value_t = 2000)]
        max_iters: u64,
    },
    /// Closed-form moment curves.
    Moments {
        #[command(flatten)]
        params: ParamArgs,
        /// Number of grid intervals on [0, T].
        #[arg(long, default_value_t = 160)]
        points: usize,
    },
    /// Theoretical and empirical signature plots.
    Sigplot {
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        sessions: SessionArgs,
        /// Observation time in hours; defaults to the horizon.
        #[arg(long)]
        t: Option<f64>,
        /// Largest sampling step in seconds; steps are 1..=max.
        #[arg(long, default_value_t = 600)]
        max_delta: usize,
    },
    /// Model-free diagnostics of observed sessions.
    Diagnose {
        #[command(flatten)]
        sessions: SessionArgs,
        /// Kernel bandwidth in seconds.
        #[arg(long, default_value_t = hawkes_intraday::empirics::DEFAULT_BANDWIDTH_SECONDS)]
        bandwidth: f64,
        /// Grid intervals for intensity and count curves.
        #[arg(long, default_value_t = 480)]
        points: usize,
        /// Hours before maturity for the jump-size profile.
        #[arg(long, value_delimiter = ',', default_values_t = [1.5, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0])]
        cutoffs: Vec<f64>,
        /// Second glob of sessions paired in sorted order for the Epps curve.
        #[arg(long)]
        pair: Option<String>,
        /// Sampling steps for the Epps curve, seconds.
        #[arg(long, value_delimiter = ',', default_values_t = [1.0, 5.0, 10.0, 30.0, 60.0, 120.0, 300.0, 600.0])]
        epps_deltas: Vec<f64>,
    },
    /// Monte Carlo checks of the large-horizon limits.
    Limits {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_enum)]
        sampler: Option<SamplerKind>,
        #[arg(long, value_delimiter = ',', default_values_t = [25.0, 100.0, 400.0])]
        scales: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [0, 1, 2])]
        orders: Vec<u32>,
        #[arg(long, default_value_t = 200)]
        n_paths: usize,
        #[arg(long, default_value_t = 1000)]
        grid_points: usize,
        #[arg(long, default_value_t = 200.0)]
        clt_scale: f64,
        #[arg(long, default_value_t = 500)]
        clt_paths: usize,
    },
}
