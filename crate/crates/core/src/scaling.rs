//! Diffusion limits of the rescaled price: regime classification, rescaling
//! schedules, Monte Carlo variance and counting profiles, and the truncated
//! mean sequences that control the counting process in the heavy-tailed
//! regimes.

use serde::{Deserialize, Serialize};

use crate::analytic::{self, TailCase, TailRegime};
use crate::error::{invalid, Error, Result};
use crate::par::Backend;
use crate::quad::{self, Tolerance};
use crate::rates::{RateForm, RateSpec};
use crate::simulator::{replicate_map, BookConfig, PricePath, StopRule};
use crate::stats::{self, LinearFit};

pub const DEFAULT_CRITICALITY_THRESHOLD: f64 = 0.97;
pub const MIN_PATHS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    SubcriticalStandard,
    SubcriticalBoundary,
    CriticalStandard,
    CriticalTimeDependent,
    NoConvergence,
}

/// Time dilation `t -> t_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Schedule {
    /// `t_n = n t`
    Linear,
    /// `t_n = t n^exponent`
    Power { exponent: f64 },
    /// `t_n = t (n log n)^s`
    NLogN { s: f64 },
    /// `t_n = t n^(1/s) log n`
    PrintedNLogN { s: f64 },
    None,
}

impl Schedule {
    pub fn t_n(&self, t: f64, n: f64) -> Option<f64> {
        match *self {
            Schedule::Linear => Some(n * t),
            Schedule::Power { exponent } => Some(t * n.powf(exponent)),
            Schedule::NLogN { s } => Some(t * (n * n.ln()).powf(s)),
            Schedule::PrintedNLogN { s } => Some(t * n.powf(1.0 / s) * n.ln()),
            Schedule::None => None,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Schedule::Linear => "t_n = n t".into(),
            Schedule::Power { exponent } => format!("t_n = t n^{exponent}"),
            Schedule::NLogN { s } => format!("t_n = t (n log n)^{s}"),
            Schedule::PrintedNLogN { s } => format!("t_n = t n^(1/{s}) log n"),
            Schedule::None => "none".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LimitVolatility {
    ConstantBm,
    /// Volatility `u^exponent` in the limiting stochastic integral.
    PowerKernel { exponent: f64 },
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub regime: Regime,
    pub schedule: Schedule,
    pub limit_volatility: LimitVolatility,
    pub lambda: f64,
    pub mu: f64,
    pub c: f64,
    pub form: RateForm,
    /// Log-log slope of `Var(s_{t_n})` against `t` implied by the renewal
    /// count under the schedule, when the regime has a limit.
    pub variance_slope: Option<f64>,
    pub note: Option<String>,
}

/// How close to `-1` a fitted exponent may be before the classification is
/// reported as a boundary case.
pub const BOUNDARY_BAND: f64 = 0.01;

/// Selects the limit theorem that applies to `spec`.
pub fn classify_regime(spec: &RateSpec, threshold: f64) -> Result<RegimeReport> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(invalid(format!("criticality threshold must lie in (0, 1], got {threshold}")));
    }
    let (lambda, mu) = (spec.lambda, spec.mu);
    let critical = lambda / mu >= threshold;
    let c = if critical { 0.0 } else { spec.decay_constant() };
    let mut report = RegimeReport {
        regime: Regime::NoConvergence,
        schedule: Schedule::None,
        limit_volatility: LimitVolatility::None,
        lambda,
        mu,
        c,
        form: spec.form.clone(),
        variance_slope: None,
        note: None,
    };
    let exponent = match &spec.form {
        RateForm::PiecewiseConstant { .. } => {
            return Err(Error::UnsupportedForm("piecewise-constant rates have no limit classification".into()))
        }
        RateForm::Reciprocal { k, .. } => return Ok(reciprocal(report, *k, critical)),
        RateForm::Power { k, s } if *s == -1.0 => return Ok(reciprocal(report, *k, critical)),
        RateForm::PowerLog { k, s, m } if *s == -1.0 && *m == 0.0 => return Ok(reciprocal(report, *k, critical)),
        other => other.growth_exponent().unwrap_or(0.0),
    };
    let logarithmic = matches!(spec.form, RateForm::PowerLog { .. }) && exponent == -1.0;
    let boundary = (exponent + 1.0).abs() <= BOUNDARY_BAND && exponent != -1.0;
    if boundary {
        report.note = Some(format!(
            "boundary: exponent {exponent} is within {BOUNDARY_BAND} of -1, where A_t grows only \
             logarithmically; the classification flips across this line and constant-volatility \
             behaviour observed in data is not implied by the limit theorems"
        ));
    }
    if exponent < -1.0 {
        if !boundary {
            report.note = Some(format!(
                "alpha decays like t^{exponent}: A_t is bounded and tau is infinite with positive probability"
            ));
        }
        return Ok(report);
    }
    if !critical {
        report.regime = Regime::SubcriticalStandard;
        report.schedule = Schedule::Linear;
        report.limit_volatility = LimitVolatility::ConstantBm;
        report.variance_slope = Some(1.0);
        return Ok(report);
    }
    if logarithmic {
        return Ok(report);
    }
    let s = exponent + 1.0;
    if s > 1.0 {
        report.regime = Regime::CriticalStandard;
        report.schedule = Schedule::Linear;
        report.limit_volatility = LimitVolatility::ConstantBm;
        report.variance_slope = Some(1.0);
    } else if s > 0.0 {
        report.regime = Regime::CriticalTimeDependent;
        report.schedule = Schedule::NLogN { s };
        report.limit_volatility = LimitVolatility::PowerKernel { exponent: -s / 2.0 };
        report.variance_slope = Some(s);
    }
    Ok(report)
}

fn reciprocal(mut report: RegimeReport, k: f64, critical: bool) -> RegimeReport {
    if critical {
        report.note = Some("critical with alpha ~ k/t: A_t grows logarithmically and no rescaling converges".into());
        return report;
    }
    let index = 2.0 * report.c * k;
    if index > 1.0 {
        report.regime = Regime::SubcriticalStandard;
        report.schedule = Schedule::Linear;
        report.limit_volatility = LimitVolatility::ConstantBm;
        report.variance_slope = Some(1.0);
    } else {
        report.regime = Regime::SubcriticalBoundary;
        report.schedule = Schedule::Power { exponent: 1.0 / index };
        report.limit_volatility = LimitVolatility::PowerKernel { exponent: (index - 1.0) / 2.0 };
        report.variance_slope = Some(index);
    }
    report
}

/// Per-path reduction on a time grid: cumulative direction sum and change
/// count at each grid time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSample {
    pub sums: Vec<i64>,
    pub counts: Vec<usize>,
    pub censored: bool,
}

pub fn grid_sample(path: &PricePath, times: &[f64]) -> GridSample {
    let mut sums = Vec::with_capacity(times.len());
    let mut counts = Vec::with_capacity(times.len());
    for &t in times {
        let n = path.count_at(t);
        counts.push(n);
        sums.push(path.directions[..n].iter().map(|d| *d as i64).sum());
    }
    GridSample { sums, counts, censored: path.censored }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariancePoint {
    pub t: f64,
    pub t_n: f64,
    pub variance: f64,
}

fn usable(samples: &[GridSample]) -> Result<Vec<&GridSample>> {
    let kept: Vec<&GridSample> = samples.iter().filter(|s| !s.censored).collect();
    if kept.len() < MIN_PATHS {
        return Err(Error::InsufficientData(format!(
            "variance profile needs at least {MIN_PATHS} uncensored paths, got {}",
            kept.len()
        )));
    }
    Ok(kept)
}

/// Pooled mean direction over all recorded changes (at the last grid time).
pub fn pooled_mean_direction(samples: &[GridSample]) -> f64 {
    let (mut sum, mut count) = (0i64, 0usize);
    for s in samples.iter().filter(|s| !s.censored) {
        sum += s.sums.last().copied().unwrap_or(0);
        count += s.counts.last().copied().unwrap_or(0);
    }
    if count == 0 {
        0.0
    } else {
        sum as f64 / count as f64
    }
}

/// Centered, `sqrt(n)`-scaled price at grid index `i` for every usable path.
pub fn standardized_prices(samples: &[GridSample], i: usize, n: f64) -> Result<Vec<f64>> {
    let m = pooled_mean_direction(samples);
    Ok(usable(samples)?
        .iter()
        .map(|s| (s.sums[i] as f64 - m * s.counts[i] as f64) / n.sqrt())
        .collect())
}

pub fn variance_profile_from_samples(
    samples: &[GridSample],
    t_grid: &[f64],
    schedule: Schedule,
    n: f64,
) -> Result<Vec<VariancePoint>> {
    t_grid
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let values = standardized_prices(samples, i, n)?;
            Ok(VariancePoint { t, t_n: schedule.t_n(t, n).unwrap_or(f64::NAN), variance: stats::variance(&values) })
        })
        .collect()
}

/// `Var[(s_{t_n} - centering) / sqrt(n)]` across paths for each grid `t`.
pub fn variance_profile(paths: &[PricePath], schedule: Schedule, n: f64, t_grid: &[f64]) -> Result<Vec<VariancePoint>> {
    let times = schedule_times(schedule, n, t_grid)?;
    let samples: Vec<GridSample> = paths.iter().map(|p| grid_sample(p, &times)).collect();
    variance_profile_from_samples(&samples, t_grid, schedule, n)
}

fn schedule_times(schedule: Schedule, n: f64, t_grid: &[f64]) -> Result<Vec<f64>> {
    if t_grid.is_empty() || t_grid.windows(2).any(|w| w[1] <= w[0]) || t_grid[0] < 0.0 {
        return Err(invalid("t grid must be nonempty, nonnegative and increasing"));
    }
    t_grid
        .iter()
        .map(|&t| schedule.t_n(t, n).ok_or_else(|| invalid("regime has no rescaling schedule")))
        .collect()
}

/// Log-log slope of the variance profile (points with zero variance dropped).
pub fn variance_slope(profile: &[VariancePoint]) -> Result<LinearFit> {
    let (t, v): (Vec<f64>, Vec<f64>) =
        profile.iter().filter(|p| p.t > 0.0 && p.variance > 0.0).map(|p| (p.t, p.variance)).unzip();
    stats::loglog_fit(&t, &v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountingPoint {
    pub t: f64,
    /// Mean of `N_{t_n} / n` over paths.
    pub empirical: f64,
    /// Theoretical limit where it is known in absolute terms, otherwise the
    /// predicted shape matched to the empirical value at the last grid point.
    pub theoretical: Option<f64>,
}

/// Mean rescaled counting process against the renewal prediction.
/// `mean_tau` is used by the standard regimes (`N_{nt}/n -> t / E[tau]`).
pub fn counting_profile_from_samples(
    samples: &[GridSample],
    t_grid: &[f64],
    report: &RegimeReport,
    n: f64,
    mean_tau: Option<f64>,
) -> Result<Vec<CountingPoint>> {
    let kept = usable(samples)?;
    let empirical: Vec<f64> = (0..t_grid.len())
        .map(|i| kept.iter().map(|s| s.counts[i] as f64).sum::<f64>() / kept.len() as f64 / n)
        .collect();
    let last = t_grid.len() - 1;
    let theory = |t: f64| -> Option<f64> {
        match (report.regime, report.schedule) {
            (Regime::SubcriticalStandard | Regime::CriticalStandard, Schedule::Linear) => mean_tau.map(|m| t / m),
            (_, _) => {
                let exponent = report.variance_slope?;
                let t_last = t_grid[last];
                if t_last <= 0.0 {
                    return None;
                }
                Some(empirical[last] * (t / t_last).powf(exponent))
            }
        }
    };
    Ok(t_grid
        .iter()
        .zip(&empirical)
        .map(|(&t, &e)| CountingPoint { t, empirical: e, theoretical: if t == 0.0 { Some(0.0) } else { theory(t) } })
        .collect())
}

pub fn counting_process_rescale(
    paths: &[PricePath],
    report: &RegimeReport,
    n: f64,
    t_grid: &[f64],
    mean_tau: Option<f64>,
) -> Result<Vec<CountingPoint>> {
    let times = schedule_times(report.schedule, n, t_grid)?;
    let samples: Vec<GridSample> = paths.iter().map(|p| grid_sample(p, &times)).collect();
    counting_profile_from_samples(&samples, t_grid, report, n, mean_tau)
}

/// `E[tau]` for a book config by integrating the aggregated survival.
pub fn mean_tau(config: &BookConfig) -> Result<f64> {
    let clock = &config.clock;
    if TailRegime::of(&clock.spec)?.case == TailCase::Critical {
        return Ok(f64::INFINITY);
    }
    let est = quad::integrate_to_infinity(
        |u| analytic::tau_survival_mixture(clock.origin + u, &config.depth, clock).unwrap_or(0.0),
        0.0,
        Tolerance { abs: 1e-10, rel: 1e-10, max_panels: 2000 },
    )?;
    Ok(est.value)
}

/// A Monte Carlo limit experiment at one scale `n`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LimitExperiment {
    pub config: BookConfig,
    pub schedule: Schedule,
    pub n: f64,
    pub t_grid: Vec<f64>,
    pub n_paths: usize,
    pub seed: u64,
    #[serde(default)]
    pub backend: Backend,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LimitResult {
    pub n: f64,
    pub profile: Vec<VariancePoint>,
    pub slope: LinearFit,
    pub slope_ci95: (f64, f64),
    /// Jarque-Bera statistic of the standardized price at the last grid time.
    pub jarque_bera: f64,
    pub mean_direction: f64,
    pub censored_paths: usize,
    pub mean_changes: f64,
    #[serde(skip)]
    pub samples: Vec<GridSample>,
}

pub fn run_limit_experiment(exp: &LimitExperiment) -> Result<LimitResult> {
    if exp.n_paths < MIN_PATHS {
        return Err(Error::InsufficientData(format!(
            "limit experiments need at least {MIN_PATHS} paths, got {}",
            exp.n_paths
        )));
    }
    let times = schedule_times(exp.schedule, exp.n, &exp.t_grid)?;
    let horizon = *times.last().unwrap();
    let samples = replicate_map(
        &exp.config,
        exp.n_paths,
        StopRule::Horizon(horizon),
        exp.seed,
        exp.backend,
        |p| grid_sample(&p, &times),
    )?;
    let profile = variance_profile_from_samples(&samples, &exp.t_grid, exp.schedule, exp.n)?;
    let slope = variance_slope(&profile)?;
    let last = standardized_prices(&samples, exp.t_grid.len() - 1, exp.n)?;
    let kept = usable(&samples)?;
    let mean_changes =
        kept.iter().map(|s| *s.counts.last().unwrap() as f64).sum::<f64>() / kept.len() as f64;
    Ok(LimitResult {
        n: exp.n,
        slope_ci95: slope.slope_interval(),
        profile,
        slope,
        jarque_bera: stats::jarque_bera(&last),
        mean_direction: pooled_mean_direction(&samples),
        censored_paths: samples.iter().filter(|s| s.censored).count(),
        mean_changes,
        samples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruncatedKind {
    /// Tail `Theta / (t^rho log t)`, truncation at `n^(1/rho)`.
    Psi,
    /// Tail `Theta / t^s`, truncation at `n^(1/s) log n`.
    Phi,
}

/// Truncated mean `E[(n / b_n) tau 1{tau < b_n}]` for a tail law `G`
/// (`P[tau > t] = G(t)`), through `E[tau 1{tau < b}] = int_0^b G - b G(b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncatedMean {
    pub kind: TruncatedKind,
    /// `rho = 2 k C` for `Psi`, `s` for `Phi`.
    pub index: f64,
    pub theta: f64,
}

impl TruncatedMean {
    pub fn new(kind: TruncatedKind, index: f64, theta: f64) -> Result<Self> {
        if !(theta >= 0.0 && theta.is_finite()) {
            return Err(invalid(format!("Theta must be finite and nonnegative, got {theta}")));
        }
        if !(index > 0.0 && index <= 1.0) {
            let name = match kind {
                TruncatedKind::Psi => "2kC",
                TruncatedKind::Phi => "s",
            };
            return Err(invalid(format!("{name} must lie in (0, 1], got {index}")));
        }
        Ok(Self { kind, index, theta })
    }

    pub fn tail(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        let raw = match self.kind {
            TruncatedKind::Psi if t <= 1.0 => return 1.0,
            TruncatedKind::Psi => self.theta / (t.powf(self.index) * t.ln()),
            TruncatedKind::Phi => self.theta * t.powf(-self.index),
        };
        raw.min(1.0)
    }

    /// Point beyond which the tail is below one.
    fn kink(&self) -> f64 {
        match self.kind {
            TruncatedKind::Phi => self.theta.powf(1.0 / self.index),
            TruncatedKind::Psi => {
                let f = |t: f64| self.theta / (t.powf(self.index) * t.ln()) - 1.0;
                let (mut lo, mut hi) = (1.0 + 1e-12, 2.0);
                while f(hi) > 0.0 {
                    hi *= 2.0;
                }
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if f(mid) > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                hi
            }
        }
    }

    pub fn truncation(&self, n: f64) -> f64 {
        match self.kind {
            TruncatedKind::Psi => n.powf(1.0 / self.index),
            TruncatedKind::Phi => n.powf(1.0 / self.index) * n.ln(),
        }
    }

    pub fn value(&self, n: f64) -> Result<f64> {
        if !(n > 1.0) {
            return Err(invalid(format!("n must exceed 1, got {n}")));
        }
        if self.theta == 0.0 {
            return Ok(0.0);
        }
        let b = self.truncation(n);
        let kink = self.kink().min(b);
        let tol = Tolerance { abs: 0.0, rel: 1e-13, max_panels: 4000 };
        // the tail is a smooth power of t beyond the kink: integrate in log t
        let upper = if b > kink {
            quad::integrate(|u: f64| self.tail(u.exp()) * u.exp(), kink.ln(), b.ln(), tol)?.value
        } else {
            0.0
        };
        let integral = kink + upper;
        Ok(n / b * integral - n * self.tail(b))
    }

    /// Large-`n` form of `Phi_n` for `s < 1`: `s Theta / ((1 - s) log^s n)`.
    pub fn phi_asymptote(&self, n: f64) -> Option<f64> {
        (self.kind == TruncatedKind::Phi && self.index < 1.0)
            .then(|| self.index * self.theta / ((1.0 - self.index) * n.ln().powf(self.index)))
    }
}

pub fn truncated_mean_sequence(law: &TruncatedMean, n_list: &[f64]) -> Result<Vec<(f64, f64)>> {
    n_list.iter().map(|&n| Ok((n, law.value(n)?))).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceConvergence {
    pub bound: f64,
    /// `|v_{i+1} - v_i|` for consecutive entries.
    pub differences: Vec<f64>,
    /// First `n` from which the difference magnitudes strictly decrease.
    pub n0: Option<f64>,
}

pub fn sequence_convergence(seq: &[(f64, f64)]) -> SequenceConvergence {
    let bound = seq.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
    let differences: Vec<f64> = seq.windows(2).map(|w| (w[1].1 - w[0].1).abs()).collect();
    let mut start = differences.len().saturating_sub(1);
    while start > 0 && differences[start] < differences[start - 1] {
        start -= 1;
    }
    let n0 = (differences.len() >= 2 && start + 1 < differences.len()).then(|| seq[start].0);
    SequenceConvergence { bound, differences, n0 }
}
