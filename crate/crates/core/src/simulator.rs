//! Event-level simulation of the two-queue book.
//!
//! Each side's extinction is drawn exactly: the constant-rate chain runs on
//! the internal clock until it hits zero at internal time `s`, and the
//! calendar duration is `A^{-1}(s)` measured from the clock origin. The clock
//! restarts at every price change, so the inter-change times are i.i.d.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::depth::DepthDistribution;
use crate::error::{invalid, Error, Result};
use crate::par::{map_indexed, Backend};
use crate::rates::{CumulativeClock, RateForm, RateSpec};

pub const DEFAULT_STEP_CAP: u64 = 100_000_000;

/// Per-path seed derived from a master seed with SplitMix64.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Result of running one side on the internal clock.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Internal {
    /// Hit zero at internal time `s`.
    Extinct(f64),
    /// Still alive when the internal clock passed the cap.
    Survived,
    /// Step budget exhausted before either of the above.
    Censored,
}

/// Runs the constant-rate birth-death chain from `x` until it hits 0 or its
/// internal time exceeds `cap`.
pub fn run_internal<R: Rng + ?Sized>(x: u32, lambda: f64, mu: f64, cap: f64, step_cap: u64, rng: &mut R) -> Internal {
    let q = lambda + mu;
    let birth_threshold = ((lambda / q) * 2f64.powi(64)).min(u64::MAX as f64) as u64;
    let mut depth = x as u64;
    let mut s = 0.0;
    let mut steps = 0u64;
    loop {
        let e: f64 = Exp1.sample(rng);
        s += e / q;
        if s > cap {
            return Internal::Survived;
        }
        if rng.next_u64() < birth_threshold {
            depth += 1;
        } else {
            depth -= 1;
            if depth == 0 {
                return Internal::Extinct(s);
            }
        }
        steps += 1;
        if steps >= step_cap {
            return Internal::Censored;
        }
    }
}

/// One exact draw of `sigma_H`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtinctionSample {
    /// Internal (constant-rate) extinction time.
    pub internal: f64,
    /// Calendar duration since the clock origin; infinite when `internal`
    /// exceeds `sup A`.
    pub duration: f64,
    pub censored: bool,
}

pub fn simulate_extinction<R: Rng + ?Sized>(
    clock: &CumulativeClock,
    x: u32,
    step_cap: u64,
    rng: &mut R,
) -> Result<ExtinctionSample> {
    if x < 1 {
        return Err(invalid("x must be ≥ 1"));
    }
    if clock.lambda() > clock.mu() {
        // transient chain: cap on the internal clock keeps the loop finite
        return Err(invalid("simulate_extinction needs lambda ≤ mu"));
    }
    Ok(match run_internal(x, clock.lambda(), clock.mu(), f64::INFINITY, step_cap, rng) {
        Internal::Extinct(s) => ExtinctionSample {
            internal: s,
            duration: clock.inverse_elapsed(s).unwrap_or(f64::INFINITY),
            censored: false,
        },
        _ => ExtinctionSample { internal: f64::NAN, duration: f64::NAN, censored: true },
    })
}

/// Direct simulation of the modulated flows by thinning, for clocks whose
/// rate is bounded and nonincreasing from the origin. Returns the calendar
/// duration, or `None` if the queue survives past `horizon`.
pub fn simulate_extinction_thinning<R: Rng + ?Sized>(
    clock: &CumulativeClock,
    x: u32,
    horizon: f64,
    rng: &mut R,
) -> Result<Option<f64>> {
    if x < 1 {
        return Err(invalid("x must be ≥ 1"));
    }
    let bounded = match &clock.spec.form {
        RateForm::Constant { .. } | RateForm::Reciprocal { .. } => true,
        RateForm::Power { s, .. } => *s <= 0.0 && (*s == 0.0 || clock.origin > 0.0),
        _ => false,
    };
    if !bounded {
        return Err(Error::UnsupportedForm(format!(
            "thinning needs a bounded nonincreasing rate, got {} from origin {}",
            clock.spec.form, clock.origin
        )));
    }
    let (lambda, mu) = (clock.lambda(), clock.mu());
    let peak = clock.alpha(clock.origin)?;
    let majorant = (lambda + mu) * peak;
    let mut depth = x as u64;
    let mut t = 0.0;
    loop {
        let e: f64 = Exp1.sample(rng);
        t += e / majorant;
        if t > horizon {
            return Ok(None);
        }
        let accept = clock.alpha(clock.origin + t)? / peak;
        if rng.random::<f64>() >= accept {
            continue;
        }
        if rng.random::<f64>() < lambda / (lambda + mu) {
            depth += 1;
        } else {
            depth -= 1;
            if depth == 0 {
                return Ok(Some(t));
            }
        }
    }
}

/// How long a path runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopRule {
    Horizon(f64),
    Changes(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BookConfig {
    pub clock: CumulativeClock,
    pub depth: DepthDistribution,
    pub x0: u32,
    pub y0: u32,
    #[serde(default)]
    pub s0: i64,
    #[serde(default = "default_step_cap")]
    pub step_cap: u64,
    #[serde(default)]
    pub seed: u64,
}

fn default_step_cap() -> u64 {
    DEFAULT_STEP_CAP
}

impl BookConfig {
    pub fn new(clock: CumulativeClock, depth: DepthDistribution, x0: u32, y0: u32) -> Result<Self> {
        let config = Self { clock, depth, x0, y0, s0: 0, step_cap: DEFAULT_STEP_CAP, seed: 0 };
        config.validate()?;
        Ok(config)
    }

    /// Starts from a draw of `f` rather than fixed depths: the first
    /// inter-change time then has the same law as all later ones.
    pub fn stationary(spec: RateSpec, depth: DepthDistribution) -> Result<Self> {
        let clock = CumulativeClock::from_spec(spec)?;
        let (x0, y0) = depth.support()[0].0;
        let mut config = Self::new(clock, depth, x0, y0)?;
        config.x0 = 0;
        config.y0 = 0;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let redraw_start = self.x0 == 0 && self.y0 == 0;
        if !redraw_start && (self.x0 < 1 || self.y0 < 1) {
            return Err(invalid("initial depths must be ≥ 1 (or both 0 to draw them from f)"));
        }
        if self.step_cap == 0 {
            return Err(invalid("step_cap must be positive"));
        }
        if self.clock.lambda() > self.clock.mu() {
            return Err(invalid("book simulation needs lambda ≤ mu"));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PricePath {
    pub epochs: Vec<f64>,
    pub directions: Vec<i8>,
    pub s0: i64,
    /// A side exceeded the step budget; the path stops at its last change.
    pub censored: bool,
}

impl PricePath {
    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }

    /// `N_t`: number of changes in `[0, t]`.
    pub fn count_at(&self, t: f64) -> usize {
        self.epochs.partition_point(|e| *e <= t)
    }

    /// Price in ticks at time `t`.
    pub fn price_at(&self, t: f64) -> i64 {
        let n = self.count_at(t);
        self.s0 + self.directions[..n].iter().map(|d| *d as i64).sum::<i64>()
    }

    /// Sum of centered directions up to `t`.
    pub fn centered_price_at(&self, t: f64, mean_direction: f64) -> f64 {
        let n = self.count_at(t);
        self.directions[..n].iter().map(|d| *d as f64).sum::<f64>() - mean_direction * n as f64
    }

    /// Inter-change durations `tau_n`.
    pub fn durations(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.epochs
            .iter()
            .map(|e| {
                let d = e - prev;
                prev = *e;
                d
            })
            .collect()
    }

    /// CSV with columns `n,S_n,X_n,price`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "n,S_n,X_n,price")?;
        let mut price = self.s0;
        for (i, (e, d)) in self.epochs.iter().zip(&self.directions).enumerate() {
            price += *d as i64;
            writeln!(out, "{},{},{},{}", i + 1, e, d, price)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSummary {
    pub n_paths: usize,
    pub n_changes: usize,
    pub censored_count: usize,
    pub mean_tau: f64,
    pub p_up: f64,
}

/// Pooled statistics; censored paths count only in `censored_count`.
pub fn summarize(paths: &[PricePath]) -> PathSummary {
    let mut n_changes = 0;
    let mut censored_count = 0;
    let mut tau_sum = 0.0;
    let mut ups = 0usize;
    for p in paths {
        if p.censored {
            censored_count += 1;
            continue;
        }
        n_changes += p.len();
        tau_sum += p.durations().iter().sum::<f64>();
        ups += p.directions.iter().filter(|d| **d > 0).count();
    }
    let nan_if_empty = |num: f64| if n_changes == 0 { f64::NAN } else { num / n_changes as f64 };
    PathSummary {
        n_paths: paths.len(),
        n_changes,
        censored_count,
        mean_tau: nan_if_empty(tau_sum),
        p_up: nan_if_empty(ups as f64),
    }
}

fn next_epoch(now: f64, tau: f64) -> f64 {
    let t = now + tau;
    if t > now {
        t
    } else {
        now.next_up()
    }
}

/// One inter-change draw from depths `(x, y)` with internal budget `cap`.
/// Returns `(internal time, direction)`, `Ok(None)` when neither side
/// depletes within the budget, or `Err(())` when censored.
fn draw_change<R: Rng + ?Sized>(
    config: &BookConfig,
    x: u32,
    y: u32,
    cap: f64,
    rng: &mut R,
) -> std::result::Result<Option<(f64, i8)>, ()> {
    let (lambda, mu) = (config.clock.lambda(), config.clock.mu());
    let a = run_internal(x, lambda, mu, cap, config.step_cap, rng);
    let cap_b = match a {
        Internal::Censored => return Err(()),
        Internal::Extinct(s) => s,
        Internal::Survived => cap,
    };
    let b = run_internal(y, lambda, mu, cap_b, config.step_cap, rng);
    match (a, b) {
        (_, Internal::Censored) => Err(()),
        (Internal::Extinct(sa), Internal::Extinct(sb)) if sa == sb => {
            let up = rng.next_u32() & 1 == 1;
            Ok(Some((sa, if up { 1 } else { -1 })))
        }
        (_, Internal::Extinct(sb)) => Ok(Some((sb, -1))),
        (Internal::Extinct(sa), _) => Ok(Some((sa, 1))),
        _ => Ok(None),
    }
}

/// Simulates one path with the RNG stream seeded from `config.seed`.
pub fn simulate_book(config: &BookConfig, stop: StopRule) -> Result<PricePath> {
    config.validate()?;
    let mut rng = stream(config.seed);
    simulate_book_with(config, stop, &mut rng)
}

pub fn simulate_book_with<R: Rng + ?Sized>(config: &BookConfig, stop: StopRule, rng: &mut R) -> Result<PricePath> {
    match stop {
        StopRule::Horizon(h) if !(h >= 0.0) => return Err(invalid(format!("horizon must be nonnegative, got {h}"))),
        _ => {}
    }
    let clock = &config.clock;
    let mut path = PricePath { s0: config.s0, ..Default::default() };
    let (mut x, mut y) = if config.x0 == 0 { config.depth.sample(rng) } else { (config.x0, config.y0) };
    let mut now = 0.0;
    let sup = clock.sup();
    loop {
        let cap = match stop {
            StopRule::Horizon(h) => clock.cumulative_elapsed(h - now)?,
            StopRule::Changes(n) => {
                if path.len() >= n {
                    break;
                }
                sup
            }
        };
        let Ok(change) = draw_change(config, x, y, cap, rng) else {
            path.censored = true;
            break;
        };
        let Some((s, direction)) = change else { break };
        let Some(tau) = clock.inverse_elapsed(s) else { break };
        let epoch = next_epoch(now, tau);
        if let StopRule::Horizon(h) = stop {
            if epoch > h {
                break;
            }
        }
        now = epoch;
        path.epochs.push(now);
        path.directions.push(direction);
        (x, y) = config.depth.sample(rng);
    }
    Ok(path)
}

/// `n_paths` independent paths; path `i` uses seed `derive_seed(master, i)`.
pub fn replicate(
    config: &BookConfig,
    n_paths: usize,
    stop: StopRule,
    master_seed: u64,
    backend: Backend,
) -> Result<Vec<PricePath>> {
    replicate_map(config, n_paths, stop, master_seed, backend, |p| p)
}

/// Like [`replicate`] but reduces each path with `f` as soon as it is built,
/// so only the reductions are kept in memory.
pub fn replicate_map<T, F>(
    config: &BookConfig,
    n_paths: usize,
    stop: StopRule,
    master_seed: u64,
    backend: Backend,
    f: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(PricePath) -> T + Sync + Send,
{
    if n_paths < 1 {
        return Err(invalid("n_paths must be ≥ 1"));
    }
    config.validate()?;
    map_indexed(n_paths, backend, |i| {
        let mut rng = stream(derive_seed(master_seed, i as u64));
        simulate_book_with(config, stop, &mut rng).map(&f)
    })
    .into_iter()
    .collect()
}

/// `n` extinction draws on independent streams derived from `master_seed`.
pub fn sample_extinctions(
    clock: &CumulativeClock,
    x: u32,
    n: usize,
    master_seed: u64,
    backend: Backend,
) -> Result<Vec<ExtinctionSample>> {
    map_indexed(n, backend, |i| {
        let mut rng = stream(derive_seed(master_seed, i as u64));
        simulate_extinction(clock, x, DEFAULT_STEP_CAP, &mut rng)
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_config(lambda: f64, mu: f64, depth: DepthDistribution) -> BookConfig {
        BookConfig::stationary(RateSpec::constant(lambda, mu).unwrap(), depth).unwrap()
    }

    #[test]
    fn pure_death_extinction_mean() {
        let clock = CumulativeClock::from_spec(RateSpec::constant(1e-12, 1.0).unwrap()).unwrap();
        let draws = sample_extinctions(&clock, 3, 100_000, 11, Backend::Parallel).unwrap();
        let mean = draws.iter().map(|d| d.duration).sum::<f64>() / draws.len() as f64;
        assert!((mean - 3.0).abs() < 3.0 * (3.0f64 / 1e5).sqrt(), "{mean}");
    }

    #[test]
    fn time_change_is_exact() {
        let spec = RateSpec::new(RateForm::Power { k: 1.0, s: -0.5 }, 0.8, 1.0).unwrap();
        let clock = CumulativeClock::from_spec(spec).unwrap();
        for d in sample_extinctions(&clock, 2, 2000, 5, Backend::Sequential).unwrap() {
            let a = clock.cumulative_elapsed(d.duration).unwrap();
            assert!((a - d.internal).abs() <= 1e-8 * d.internal.max(1.0));
        }
    }

    #[test]
    fn bounded_clock_can_leave_tau_infinite() {
        let spec = RateSpec::new(RateForm::Power { k: 0.05, s: -2.0 }, 1.0, 1.0).unwrap();
        let clock = CumulativeClock::from_spec(spec).unwrap();
        let draws = sample_extinctions(&clock, 3, 200, 1, Backend::Sequential).unwrap();
        assert!(draws.iter().any(|d| d.duration.is_infinite()));
    }

    #[test]
    fn exponential_minimum() {
        let config = constant_config(1e-12, 1.0, DepthDistribution::point(1, 1).unwrap());
        let paths = replicate(&config, 20, StopRule::Changes(500), 9, Backend::Parallel).unwrap();
        let summary = summarize(&paths);
        assert_eq!(summary.n_changes, 10_000);
        assert!((summary.mean_tau - 0.5).abs() < 3.0 * 0.5 / 100.0, "{}", summary.mean_tau);
        assert!((summary.p_up - 0.5).abs() < 3.0 * 0.5 / 100.0, "{}", summary.p_up);
    }

    #[test]
    fn path_invariants() {
        let config = constant_config(0.9, 1.1, DepthDistribution::uniform(&[1, 2], &[1, 2]).unwrap()).with_seed(4);
        let path = simulate_book(&config, StopRule::Horizon(500.0)).unwrap();
        assert!(path.epochs.windows(2).all(|w| w[1] > w[0]));
        assert!(*path.epochs.last().unwrap() <= 500.0);
        assert_eq!(path.epochs.len(), path.directions.len());
        let total: i64 = path.directions.iter().map(|d| *d as i64).sum();
        assert_eq!(path.price_at(500.0), total);
        assert_eq!(path.count_at(0.0), 0);
    }

    #[test]
    fn replicate_is_deterministic_across_backends() {
        let config = constant_config(0.9, 1.1, DepthDistribution::uniform(&[1, 2], &[1, 2]).unwrap());
        let a = replicate(&config, 64, StopRule::Horizon(50.0), 77, Backend::Sequential).unwrap();
        let b = replicate(&config, 64, StopRule::Horizon(50.0), 77, Backend::Parallel).unwrap();
        assert_eq!(a, b);
        let single = replicate(&config, 1, StopRule::Horizon(50.0), 77, Backend::Parallel).unwrap();
        let direct = simulate_book(&config.clone().with_seed(derive_seed(77, 0)), StopRule::Horizon(50.0)).unwrap();
        assert_eq!(single[0], direct);
    }

    #[test]
    fn censoring_is_reported() {
        let mut config = constant_config(1.0, 1.0, DepthDistribution::point(30, 30).unwrap());
        config.step_cap = 10;
        let path = simulate_book(&config, StopRule::Changes(5)).unwrap();
        assert!(path.censored);
        assert!(path.is_empty());
        assert_eq!(summarize(&[path]).censored_count, 1);
    }

    #[test]
    fn thinning_agrees_with_time_change_in_mean() {
        let spec = RateSpec::new(RateForm::Reciprocal { k: 4.0, t0: 1.0 }, 0.5, 1.0).unwrap();
        let clock = CumulativeClock::from_spec(spec).unwrap();
        let mut rng = stream(8);
        let horizon = 1e6;
        let n = 20_000;
        let (mut hits_thin, mut hits_tc) = (0, 0);
        for _ in 0..n {
            if let Some(t) = simulate_extinction_thinning(&clock, 1, horizon, &mut rng).unwrap() {
                hits_thin += (t <= 2.0) as usize;
            }
            let d = simulate_extinction(&clock, 1, DEFAULT_STEP_CAP, &mut rng).unwrap();
            hits_tc += (d.duration <= 2.0) as usize;
        }
        let (p, q) = (hits_thin as f64 / n as f64, hits_tc as f64 / n as f64);
        assert!((p - q).abs() < 4.0 * (2.0 * p * (1.0 - p) / n as f64).sqrt(), "{p} vs {q}");
    }

    #[test]
    fn csv_export() {
        let path = PricePath { epochs: vec![1.0, 3.0, 6.0], directions: vec![1, 1, -1], s0: 100, censored: false };
        let mut buf = Vec::new();
        path.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "n,S_n,X_n,price\n1,1,1,101\n2,3,1,102\n3,6,-1,101\n");
        assert_eq!(path.durations(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn seeds_differ_per_index() {
        let seeds: Vec<u64> = (0..1000).map(|i| derive_seed(42, i)).collect();
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), seeds.len());
    }
}
