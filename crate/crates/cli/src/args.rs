use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tdlob_core::analytic::TailForm;
use tdlob_core::empirical::{DEFAULT_BIN_WIDTH, DEFAULT_SESSION_LENGTH, DEFAULT_SKIP_BINS};
use tdlob_core::scaling::{Schedule, DEFAULT_CRITICALITY_THRESHOLD};
use tdlob_core::{CumulativeClock, DepthDistribution, RateForm, RateSpec};

#[derive(Parser, Debug)]
#[command(name = "tdlob", version, about = "Time-dependent level-I limit order book toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Survival of a queue depletion time on a grid of horizons.
    Survival(SurvivalArgs),
    /// Simulate price paths of the book.
    Simulate(SimulateArgs),
    /// Monte Carlo variance profiles of the rescaled price.
    Limit(LimitArgs),
    /// Fit power-law intensities to event data (or the published tables).
    Fit(FitArgs),
    /// Generate a synthetic event file from fitted intensities.
    Synth(SynthArgs),
    /// Classify the scaling regime of a rate specification.
    Classify(ClassifyArgs),
    /// Inter-price-change durations of an event file.
    Durations(DurationsArgs),
}

#[derive(Args, Debug, Clone)]
pub struct RateArgs {
    /// Base limit-order rate.
    #[arg(long)]
    pub lambda: f64,
    /// Base market-order plus cancellation rate.
    #[arg(long)]
    pub mu: f64,
    /// Modulation: constant:c, power:K,s, powerlog:K,s,m or recip:k,t0.
    #[arg(long, default_value = "constant:1", allow_hyphen_values = true)]
    pub alpha: RateForm,
    /// Clock origin (defaults to the form's natural origin).
    #[arg(long)]
    pub origin: Option<f64>,
}

impl RateArgs {
    pub fn spec(&self) -> tdlob_core::Result<RateSpec> {
        RateSpec::new(self.alpha.clone(), self.lambda, self.mu)
    }

    pub fn clock(&self) -> tdlob_core::Result<CumulativeClock> {
        CumulativeClock::new(self.spec()?, self.origin)
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grid {
    Linear,
    Log,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailChoice {
    ProofConsistent,
    ProofClosedForm,
    AsPrinted,
}

impl From<TailChoice> for TailForm {
    fn from(c: TailChoice) -> Self {
        match c {
            TailChoice::ProofConsistent => TailForm::ProofConsistent,
            TailChoice::ProofClosedForm => TailForm::ProofClosedForm,
            TailChoice::AsPrinted => TailForm::AsPrinted,
        }
    }
}

#[derive(Args, Debug)]
pub struct SurvivalArgs {
    #[command(flatten)]
    pub rates: RateArgs,
    /// Initial queue depth.
    #[arg(long)]
    pub x: u32,
    /// Largest horizon T (absolute clock time).
    #[arg(long, required_unless_present = "times")]
    pub tmax: Option<f64>,
    /// Smallest horizon (defaults to one grid step past the origin).
    #[arg(long)]
    pub tmin: Option<f64>,
    #[arg(long, default_value_t = 50)]
    pub points: usize,
    #[arg(long, value_enum, default_value = "linear")]
    pub grid: Grid,
    /// Explicit comma-separated horizons instead of a generated grid.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["tmax", "tmin"])]
    pub times: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value = "proof-consistent")]
    pub tail_form: TailChoice,
    /// Add a column from the truncated-chain oracle and fail if it disagrees by more than 1e-6.
    #[arg(long)]
    pub oracle_check: bool,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Output directory (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// BookConfig JSON (or a previous summary.json); replaces the rate and depth flags.
    #[arg(long, conflicts_with_all = ["lambda", "mu", "alpha", "origin", "depth"])]
    pub config: Option<PathBuf>,
    #[arg(long, required_unless_present = "config")]
    pub lambda: Option<f64>,
    #[arg(long, required_unless_present = "config")]
    pub mu: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<RateForm>,
    #[arg(long)]
    pub origin: Option<f64>,
    /// Redraw law: point:x,y, uniform:d1,d2,... or a JSON file path.
    #[arg(long)]
    pub depth: Option<String>,
    /// Initial depths x,y; 0,0 draws them from the redraw law.
    #[arg(long, value_delimiter = ',')]
    pub start: Option<Vec<u32>>,
    #[arg(long, default_value_t = 1)]
    pub paths: usize,
    /// Stop each path at this absolute time.
    #[arg(long, required_unless_present = "changes", conflicts_with = "changes")]
    pub horizon: Option<f64>,
    /// Stop each path after this many price changes.
    #[arg(long)]
    pub changes: Option<usize>,
    #[arg(long)]
    pub seed: u64,
    /// Also write a log-binned duration histogram with this many bins.
    #[arg(long)]
    pub durations: Option<usize>,
    #[arg(long)]
    pub sequential: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct LimitArgs {
    #[command(flatten)]
    pub rates: RateArgs,
    #[arg(long, default_value = "uniform:1,2")]
    pub depth: String,
    /// Increasing comma-separated scales n.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n_ladder: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.125,0.25,0.5,1")]
    pub t_grid: Vec<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub paths: usize,
    #[arg(long)]
    pub seed: u64,
    /// Override the classifier: linear, power:e, nlogn:s, printed-nlogn:s or none.
    #[arg(long, value_parser = parse_schedule)]
    pub schedule: Option<Schedule>,
    #[arg(long, default_value_t = DEFAULT_CRITICALITY_THRESHOLD)]
    pub threshold: f64,
    #[arg(long)]
    pub sequential: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Event CSV: t_seconds,side,kind,price_ticks,size[,day].
    #[arg(long, required_unless_present = "published")]
    pub events: Option<PathBuf>,
    /// Use the published regression tables instead of an event file.
    #[arg(long, conflicts_with = "events")]
    pub published: bool,
    /// Stock label (defaults to the file stem).
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long, default_value_t = DEFAULT_BIN_WIDTH)]
    pub bin_width: f64,
    #[arg(long, default_value_t = DEFAULT_SESSION_LENGTH)]
    pub session: f64,
    /// Leading bins left out of the regressions.
    #[arg(long, default_value_t = DEFAULT_SKIP_BINS)]
    pub skip_bins: usize,
    #[arg(long, default_value_t = DEFAULT_CRITICALITY_THRESHOLD)]
    pub threshold: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Stock row of the published tables used as generator.
    #[arg(long, default_value = "CSCO")]
    pub stock: String,
    /// Multiplier on the published intensities.
    #[arg(long, default_value_t = 1e4)]
    pub scale: f64,
    #[arg(long, default_value_t = 1)]
    pub days: u32,
    #[arg(long, default_value_t = DEFAULT_SESSION_LENGTH)]
    pub session: f64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub rates: RateArgs,
    #[arg(long, default_value_t = DEFAULT_CRITICALITY_THRESHOLD)]
    pub threshold: f64,
    /// Also report finiteness of moments 1..=N of tau.
    #[arg(long, default_value_t = 2)]
    pub moments: u32,
}

#[derive(Args, Debug)]
pub struct DurationsArgs {
    #[arg(long)]
    pub events: PathBuf,
    #[arg(long, default_value_t = 30)]
    pub bins: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_number(text: &str) -> Result<f64, String> {
    text.trim().parse().map_err(|_| format!("'{text}' is not a number"))
}

pub fn parse_schedule(text: &str) -> Result<Schedule, String> {
    let (name, arg) = text.split_once(':').unwrap_or((text, ""));
    match (name, arg) {
        ("linear", "") => Ok(Schedule::Linear),
        ("none", "") => Ok(Schedule::None),
        ("power", a) => Ok(Schedule::Power { exponent: parse_number(a)? }),
        ("nlogn", a) => Ok(Schedule::NLogN { s: parse_number(a)? }),
        ("printed-nlogn", a) => Ok(Schedule::PrintedNLogN { s: parse_number(a)? }),
        _ => Err(format!("unknown schedule '{text}'")),
    }
}

/// `point:x,y`, `uniform:d1,d2,...` (same depths on both sides) or a JSON file.
pub fn parse_depth(text: &str) -> Result<DepthDistribution, String> {
    let depths = |list: &str| -> Result<Vec<u32>, String> {
        list.split(',').map(|d| d.trim().parse().map_err(|_| format!("bad depth '{d}'"))).collect()
    };
    let result = match text.split_once(':') {
        Some(("point", rest)) => match depths(rest)?.as_slice() {
            [x, y] => DepthDistribution::point(*x, *y),
            _ => return Err("point needs exactly two depths".into()),
        },
        Some(("uniform", rest)) => {
            let d = depths(rest)?;
            DepthDistribution::uniform(&d, &d)
        }
        _ => {
            let body = std::fs::read_to_string(text).map_err(|e| format!("{text}: {e}"))?;
            return serde_json::from_str(&body).map_err(|e| format!("{text}: {e}"));
        }
    };
    result.map_err(|e| e.to_string())
}
