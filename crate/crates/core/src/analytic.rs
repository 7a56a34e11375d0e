//! Distribution of the extinction time `sigma` of one level-I queue and of the
//! inter-price-change time `tau = min(sigma_a, sigma_b)`.
//!
//! The exact survival of `sigma` under constant rates is the Bessel integral
//!
//! ```text
//! P[sigma > T] = (mu/lambda)^(x/2) * int_T^inf (x/s) I_x(2 s sqrt(lambda mu)) e^(-s (lambda + mu)) ds
//! ```
//!
//! and a time-dependent modulation enters only through the clock:
//! `P[sigma_H > T] = P[sigma_Q > A_T]`.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::bessel::ive;
use crate::depth::DepthDistribution;
use crate::error::{invalid, Error, Result};
use crate::quad::{self, Tolerance};
use crate::rates::{CumulativeClock, RateForm, RateSpec};

/// Initial (ask, bid) depths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueueStart {
    pub x: u32,
    pub y: u32,
}

impl QueueStart {
    pub fn new(x: u32, y: u32) -> Result<Self> {
        if x < 1 {
            return Err(invalid("x must be ≥ 1"));
        }
        if y < 1 {
            return Err(invalid("y must be ≥ 1"));
        }
        Ok(Self { x, y })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailCase {
    Subcritical,
    Critical,
}

/// Criticality of the pair `(lambda, mu)` with `C = (sqrt(mu) - sqrt(lambda))^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailRegime {
    pub case: TailCase,
    pub c: f64,
}

const CRITICAL_RTOL: f64 = 1e-12;

impl TailRegime {
    pub fn from_rates(lambda: f64, mu: f64) -> Result<Self> {
        check_rates(lambda, mu)?;
        if (lambda - mu).abs() <= CRITICAL_RTOL * mu {
            Ok(Self { case: TailCase::Critical, c: 0.0 })
        } else {
            let d = mu.sqrt() - lambda.sqrt();
            Ok(Self { case: TailCase::Subcritical, c: d * d })
        }
    }

    pub fn of(spec: &RateSpec) -> Result<Self> {
        Self::from_rates(spec.lambda, spec.mu)
    }
}

/// Which set of constants the tail and density asymptotics use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailForm {
    /// `(mu/lambda)^(x/2) x / (2 sqrt(pi sqrt(lambda mu))) * int_T^inf s^(-3/2) e^(-C s) ds`,
    /// which keeps the incomplete-gamma term of the large-`s` Bessel expansion.
    #[default]
    ProofConsistent,
    /// `(mu/lambda)^(x/2) x / sqrt(pi sqrt(lambda mu)) * e^(-T C) / sqrt(T)`.
    ProofClosedForm,
    /// Constants exactly as stated in the lemma: `x / (lambda sqrt(pi T))` when critical,
    /// `(mu/lambda)^(x/2) x / (C sqrt(pi sqrt(lambda mu))) * e^(-T) / sqrt(T)` otherwise.
    AsPrinted,
}

fn check_rates(lambda: f64, mu: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda > 0.0 && mu.is_finite() && mu > 0.0) {
        return Err(invalid(format!("rates must be positive, got lambda={lambda}, mu={mu}")));
    }
    if lambda > mu * (1.0 + CRITICAL_RTOL) {
        return Err(invalid(format!(
            "lambda={lambda} > mu={mu}: the queue is transient and sigma is defective"
        )));
    }
    Ok(())
}

/// Exact law of `sigma` for one queue under constant rates.
#[derive(Debug, Clone, Copy)]
pub struct SigmaLaw {
    x: u32,
    lambda: f64,
    mu: f64,
    log_prefactor: f64,
    geometric: f64,
    c: f64,
}

fn survival_tolerance() -> Tolerance {
    Tolerance { abs: 1e-18, rel: 1e-14, max_panels: 4000 }
}

impl SigmaLaw {
    pub fn new(x: u32, lambda: f64, mu: f64) -> Result<Self> {
        check_rates(lambda, mu)?;
        if x < 1 {
            return Err(invalid("x must be ≥ 1"));
        }
        let d = mu.sqrt() - lambda.sqrt();
        Ok(Self {
            x,
            lambda,
            mu,
            log_prefactor: 0.5 * x as f64 * (mu / lambda).ln(),
            geometric: (lambda * mu).sqrt(),
            c: d * d,
        })
    }

    /// Density of `sigma` at internal time `s`.
    pub fn density(&self, s: f64) -> f64 {
        if !(s > 0.0) || !s.is_finite() {
            return 0.0;
        }
        let b = ive(self.x, 2.0 * s * self.geometric);
        if b <= 0.0 {
            return 0.0;
        }
        (self.log_prefactor + (self.x as f64 / s).ln() + b.ln() - self.c * s).exp()
    }

    /// Scale beyond which the density is in its monotone tail.
    fn split_point(&self) -> f64 {
        let x = self.x as f64;
        (x + 1.0) * (x + 1.0) / (self.lambda + self.mu)
    }

    /// `int_s^inf density` through `s' = s / v^2`, smooth on `v in (0, 1]` for both
    /// the algebraic and the exponential tail.
    fn upper_tail(&self, s: f64) -> Result<f64> {
        let est = quad::integrate(
            |v: f64| {
                if v <= 0.0 {
                    return 0.0;
                }
                let u = s / (v * v);
                let g = self.density(u) * 2.0 * s / (v * v * v);
                if g.is_finite() {
                    g
                } else {
                    0.0
                }
            },
            0.0,
            1.0,
            survival_tolerance(),
        )?;
        Ok(est.value)
    }

    /// `int_a^b density`.
    pub fn mass(&self, a: f64, b: f64) -> Result<f64> {
        Ok(quad::integrate(|s| self.density(s), a, b, survival_tolerance())?.value)
    }

    /// `P[sigma > t]`.
    pub fn survival(&self, t: f64) -> Result<f64> {
        if t.is_nan() || t < 0.0 {
            return Err(invalid(format!("T must be nonnegative, got {t}")));
        }
        if t == 0.0 {
            return Ok(1.0);
        }
        if t.is_infinite() {
            return Ok(0.0);
        }
        let split = self.split_point();
        let value = if t < split {
            self.mass(t, split)? + self.upper_tail(split)?
        } else {
            self.upper_tail(t)?
        };
        Ok(value.clamp(0.0, 1.0))
    }

    /// Survival on an ascending grid, integrating the density between
    /// consecutive points rather than restarting from each point.
    pub fn survival_sorted(&self, ts: &[f64]) -> Result<Vec<f64>> {
        if ts.windows(2).any(|w| w[1] < w[0]) {
            return Err(invalid("grid must be ascending"));
        }
        let mut out = Vec::with_capacity(ts.len());
        let mut current: Option<(f64, f64)> = None;
        for &t in ts {
            let value = match current {
                None => self.survival(t)?,
                Some((prev_t, prev_v)) if t == prev_t => prev_v,
                Some((prev_t, prev_v)) => {
                    if t > 4.0 * prev_t.max(self.split_point()) {
                        self.survival(t)?
                    } else {
                        prev_v - self.mass(prev_t, t)?
                    }
                }
            };
            let value = value.clamp(0.0, 1.0);
            current = Some((t, value));
            out.push(value);
        }
        Ok(out)
    }
}

/// `P[sigma > T]` for a queue started at depth `x` under constant rates.
pub fn survival_const(t: f64, x: u32, lambda: f64, mu: f64) -> Result<f64> {
    SigmaLaw::new(x, lambda, mu)?.survival(t)
}

/// `P[sigma > T]` under the modulated rates, `T` measured on the clock's
/// absolute time axis (`T >= origin`).
pub fn survival_timechanged(t: f64, x: u32, clock: &CumulativeClock) -> Result<f64> {
    let a = clock.cumulative(t)?;
    survival_const(a, x, clock.lambda(), clock.mu())
}

/// `P[tau > T] = P[sigma_a > T] P[sigma_b > T]`.
pub fn tau_survival(t: f64, start: QueueStart, clock: &CumulativeClock) -> Result<f64> {
    let sx = survival_timechanged(t, start.x, clock)?;
    if start.x == start.y {
        return Ok(sx * sx);
    }
    Ok(sx * survival_timechanged(t, start.y, clock)?)
}

/// `P[tau > T]` with the starting depths drawn from `f`.
pub fn tau_survival_mixture(t: f64, f: &DepthDistribution, clock: &CumulativeClock) -> Result<f64> {
    let a = clock.cumulative(t)?;
    let mut cache: Vec<(u32, f64)> = Vec::new();
    let mut side = |x: u32| -> Result<f64> {
        if let Some(&(_, v)) = cache.iter().find(|c| c.0 == x) {
            return Ok(v);
        }
        let v = survival_const(a, x, clock.lambda(), clock.mu())?;
        cache.push((x, v));
        Ok(v)
    };
    let mut total = 0.0;
    for &((x, y), p) in f.support() {
        total += p * side(x)? * side(y)?;
    }
    Ok(total)
}

/// `Gamma(-1/2, a) = int_a^inf u^(-3/2) e^(-u) du`.
pub fn upper_gamma_minus_half(a: f64) -> f64 {
    if a <= 0.0 {
        return f64::INFINITY;
    }
    if a < 1.0 {
        return 2.0 * (-a).exp() / a.sqrt() - 2.0 * std::f64::consts::PI.sqrt() * erfc(a.sqrt());
    }
    // modified Lentz on the Legendre continued fraction of Gamma(s, a), s = -1/2
    let s = -0.5;
    let tiny = 1e-300;
    let mut b = a + 1.0 - s;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let an = -(i as f64) * (i as f64 - s);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-a).exp() * a.powf(s) * h
}

/// Large-`A` tail of one side and its rate of decay `-d tail / dA`.
fn side_tail(a: f64, x: u32, regime: TailRegime, lambda: f64, mu: f64, form: TailForm) -> (f64, f64) {
    let pi = std::f64::consts::PI;
    let xf = x as f64;
    match regime.case {
        TailCase::Critical => {
            let tail = match form {
                TailForm::AsPrinted => xf / (lambda * (pi * a).sqrt()),
                _ => xf / (pi * lambda * a).sqrt(),
            };
            (tail, tail / (2.0 * a))
        }
        TailCase::Subcritical => {
            let c = regime.c;
            let log_pref = 0.5 * xf * (mu / lambda).ln();
            let root = (pi * (lambda * mu).sqrt()).sqrt();
            match form {
                TailForm::ProofConsistent => {
                    let k = log_pref.exp() * xf / (2.0 * root);
                    let tail = k * c.sqrt() * upper_gamma_minus_half(a * c);
                    let rate = k * a.powf(-1.5) * (-c * a).exp();
                    (tail, rate)
                }
                TailForm::ProofClosedForm => {
                    let tail = (log_pref - c * a).exp() * xf / (root * a.sqrt());
                    (tail, tail * (c + 0.5 / a))
                }
                TailForm::AsPrinted => {
                    let tail = (log_pref - a).exp() * xf / (c * root * a.sqrt());
                    (tail, tail * (1.0 + 0.5 / a))
                }
            }
        }
    }
}

/// Joint tail of `tau` and its rate `-d/dA` at clock value `a`.
fn pair_tail(a: f64, x: u32, y: u32, regime: TailRegime, lambda: f64, mu: f64, form: TailForm) -> (f64, f64) {
    if form == TailForm::AsPrinted && regime.case == TailCase::Subcritical {
        let c = regime.c;
        let log_pref = 0.5 * (x + y) as f64 * (mu / lambda).ln();
        let tail = (log_pref - 2.0 * a * c).exp() * (x * y) as f64
            / (std::f64::consts::PI * c * c * (lambda * mu).sqrt() * a);
        return (tail, tail * (2.0 * c + 1.0 / a));
    }
    let (tx, rx) = side_tail(a, x, regime, lambda, mu, form);
    let (ty, ry) = side_tail(a, y, regime, lambda, mu, form);
    (tx * ty, rx * ty + tx * ry)
}

/// Asymptotic `P[sigma > T]` for large `T` under constant rates.
pub fn tail_sigma(t: f64, x: u32, regime: TailRegime, lambda: f64, mu: f64, form: TailForm) -> Result<f64> {
    if !(t > 0.0) {
        return Err(invalid(format!("T must be positive, got {t}")));
    }
    if x < 1 {
        return Err(invalid("x must be ≥ 1"));
    }
    check_rates(lambda, mu)?;
    Ok(side_tail(t, x, regime, lambda, mu, form).0)
}

/// Asymptotic `P[tau > T]` evaluated at the clock value `A_T`.
pub fn tail_tau(t: f64, start: QueueStart, clock: &CumulativeClock, form: TailForm) -> Result<f64> {
    let a = clock.cumulative(t)?;
    if !(a > 0.0) {
        return Err(invalid(format!("A_T must be positive, got {a} at T={t}")));
    }
    let regime = TailRegime::of(&clock.spec)?;
    Ok(pair_tail(a, start.x, start.y, regime, clock.lambda(), clock.mu(), form).0)
}

/// Asymptotic density of `tau` at `T`, aggregated over the redraw law `f`.
pub fn tau_density_asymptotic(
    t: f64,
    f: &DepthDistribution,
    clock: &CumulativeClock,
    form: TailForm,
) -> Result<f64> {
    if f.support().is_empty() {
        return Err(Error::EmptySupport);
    }
    let a = clock.cumulative(t)?;
    if !(a > 0.0) {
        return Err(invalid(format!("A_T must be positive, got {a} at T={t}")));
    }
    let alpha = clock.alpha(t)?;
    let regime = TailRegime::of(&clock.spec)?;
    let rate: f64 = f
        .support()
        .iter()
        .map(|&((x, y), p)| p * pair_tail(a, x, y, regime, clock.lambda(), clock.mu(), form).1)
        .sum();
    Ok(alpha * rate)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Moment {
    Finite,
    Infinite,
}

fn finite_if(cond: bool) -> Moment {
    if cond {
        Moment::Finite
    } else {
        Moment::Infinite
    }
}

/// Whether `E[tau^n]` is finite for the asymptotic rate family of `spec`.
pub fn moment_finiteness(n: u32, regime: TailRegime, spec: &RateSpec) -> Result<Moment> {
    if n < 1 {
        return Err(invalid("moment order must be ≥ 1"));
    }
    let n = n as f64;
    let critical = regime.case == TailCase::Critical;
    let reciprocal = |k: f64| finite_if(!critical && n < 2.0 * k * regime.c);
    Ok(match &spec.form {
        RateForm::Constant { .. } => finite_if(!critical || n < 1.0),
        RateForm::Reciprocal { k, .. } => reciprocal(*k),
        RateForm::Power { k, s } if *s == -1.0 => reciprocal(*k),
        // A_t stays bounded, so tau is infinite with positive probability
        RateForm::Power { s, .. } | RateForm::PowerLog { s, .. } if *s < -1.0 => Moment::Infinite,
        RateForm::Power { s, .. } => finite_if(!critical || n < s + 1.0),
        RateForm::PowerLog { k, s, m } => {
            if *s == -1.0 {
                if *m == 0.0 {
                    reciprocal(*k)
                } else {
                    // A_t ~ log^(m+1) t: super-polynomial decay off criticality, 1/A_t at it
                    finite_if(!critical)
                }
            } else if critical {
                let p = s + 1.0;
                finite_if(n < p || (n == p && *m > 1.0))
            } else {
                Moment::Finite
            }
        }
        RateForm::PiecewiseConstant { .. } => {
            return Err(Error::UnsupportedForm(
                "piecewise-constant rates have no asymptotic moment classification".into(),
            ))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_clock(lambda: f64, mu: f64) -> CumulativeClock {
        CumulativeClock::from_spec(RateSpec::constant(lambda, mu).unwrap()).unwrap()
    }

    #[test]
    fn survival_at_zero_and_infinity() {
        assert_eq!(survival_const(0.0, 3, 0.9, 1.1).unwrap(), 1.0);
        assert_eq!(survival_const(f64::INFINITY, 1, 0.5, 1.0).unwrap(), 0.0);
        assert!(survival_const(1e7, 1, 0.5, 1.0).unwrap() < 1e-12);
    }

    #[test]
    fn total_mass_is_one() {
        for (x, lambda, mu) in [(1, 0.5, 1.0), (3, 0.9, 1.1), (5, 0.99, 1.0), (2, 1e-6, 1.0)] {
            let v = survival_const(1e-9, x, lambda, mu).unwrap();
            assert!((v - 1.0).abs() < 1e-8, "x={x} lambda={lambda}: {v}");
        }
    }

    #[test]
    fn pure_death_limit_is_erlang() {
        // lambda -> 0: sigma is a sum of x exponentials with rate mu
        let v = survival_const(2.0, 3, 1e-10, 1.0).unwrap();
        let erlang = (-2.0f64).exp() * (1.0 + 2.0 + 2.0);
        assert!((v - erlang).abs() < 1e-7, "{v} vs {erlang}");
    }

    #[test]
    fn monotone_in_t_and_x() {
        let mut prev = 1.0;
        for t in [0.1, 0.5, 1.0, 3.0, 10.0, 50.0] {
            let v = survival_const(t, 2, 0.9, 1.1).unwrap();
            assert!(v <= prev);
            assert!(survival_const(t, 3, 0.9, 1.1).unwrap() >= v);
            prev = v;
        }
    }

    #[test]
    fn sorted_evaluation_matches_pointwise() {
        let law = SigmaLaw::new(2, 0.8, 1.0).unwrap();
        let grid = [0.01, 0.02, 0.5, 0.5, 1.7, 3.0, 9.0, 40.0, 41.0, 500.0];
        let sorted = law.survival_sorted(&grid).unwrap();
        for (t, v) in grid.iter().zip(sorted) {
            assert!((law.survival(*t).unwrap() - v).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_supercritical_and_zero_depth() {
        assert!(survival_const(1.0, 1, 1.2, 1.0).is_err());
        let err = survival_const(1.0, 0, 0.5, 1.0).unwrap_err();
        assert_eq!(err.to_string(), "invalid parameter: x must be ≥ 1");
    }

    #[test]
    fn time_change_identity() {
        let spec = RateSpec::new(RateForm::Power { k: 1.0, s: -0.5 }, 1.0, 1.0).unwrap();
        let clock = CumulativeClock::from_spec(spec).unwrap();
        let lhs = survival_timechanged(4.0, 2, &clock).unwrap();
        assert_eq!(lhs, survival_const(4.0, 2, 1.0, 1.0).unwrap());
        let constant = constant_clock(0.9, 1.1);
        assert_eq!(
            survival_timechanged(2.5, 3, &constant).unwrap(),
            survival_const(2.5, 3, 0.9, 1.1).unwrap()
        );
    }

    #[test]
    fn tau_is_product_of_sides() {
        let clock = constant_clock(0.9, 1.0);
        let start = QueueStart::new(2, 3).unwrap();
        let t = 4.0;
        let product = survival_const(t, 2, 0.9, 1.0).unwrap() * survival_const(t, 3, 0.9, 1.0).unwrap();
        assert!((tau_survival(t, start, &clock).unwrap() - product).abs() < 1e-15);
        let f = DepthDistribution::point(2, 3).unwrap();
        assert!((tau_survival_mixture(t, &f, &clock).unwrap() - product).abs() < 1e-15);
    }

    #[test]
    fn critical_tail_examples() {
        let regime = TailRegime::from_rates(1.0, 1.0).unwrap();
        let v = tail_sigma(100.0, 2, regime, 1.0, 1.0, TailForm::default()).unwrap();
        assert!((v - 0.112838).abs() < 1e-6);
        let half = tail_sigma(400.0, 1, regime, 1.0, 1.0, TailForm::default()).unwrap();
        assert!((half - 1.0 / (std::f64::consts::PI.sqrt() * 20.0)).abs() < 1e-15);
        let clock = constant_clock(1.0, 1.0);
        let tau = tail_tau(std::f64::consts::PI, QueueStart::new(1, 1).unwrap(), &clock, TailForm::default()).unwrap();
        assert!((tau - 1.0 / (std::f64::consts::PI * std::f64::consts::PI)).abs() < 1e-15);
    }

    #[test]
    fn critical_tail_with_small_rates() {
        // the lemma's 1/lambda prefactor only coincides with the exact tail at lambda = 1
        let regime = TailRegime::from_rates(0.5, 0.5).unwrap();
        let t = 4e4;
        let exact = survival_const(t, 2, 0.5, 0.5).unwrap();
        let ratio = exact / tail_sigma(t, 2, regime, 0.5, 0.5, TailForm::ProofConsistent).unwrap();
        assert!((ratio - 1.0).abs() < 1e-3, "{ratio}");
        let printed = exact / tail_sigma(t, 2, regime, 0.5, 0.5, TailForm::AsPrinted).unwrap();
        assert!((printed - 0.5f64.sqrt()).abs() < 1e-3, "{printed}");
    }

    #[test]
    fn subcritical_tail_converges() {
        let regime = TailRegime::from_rates(0.81, 1.21).unwrap();
        assert!((regime.c - 0.04).abs() < 1e-15);
        let exact = survival_const(60.0, 1, 0.81, 1.21).unwrap();
        let tail = tail_sigma(60.0, 1, regime, 0.81, 1.21, TailForm::ProofConsistent).unwrap();
        assert!((exact / tail - 1.0).abs() < 0.05, "{}", exact / tail);
    }

    #[test]
    fn incomplete_gamma_branches_agree() {
        let direct = |a: f64| {
            quad::integrate_to_infinity(|u: f64| u.powf(-1.5) * (-u).exp(), a, Tolerance { abs: 0.0, rel: 1e-13, max_panels: 2000 })
                .unwrap()
                .value
        };
        for a in [0.1, 1.0, 10.0, 39.0, 41.0, 120.0] {
            let g = upper_gamma_minus_half(a);
            assert!((g / direct(a) - 1.0).abs() < 1e-9, "a={a}");
        }
    }

    #[test]
    fn density_is_derivative_of_tail() {
        let f = DepthDistribution::uniform(&[1, 2], &[1, 2]).unwrap();
        for (lambda, mu) in [(1.0, 1.0), (0.81, 1.21)] {
            let clock = constant_clock(lambda, mu);
            for form in [TailForm::ProofConsistent, TailForm::ProofClosedForm, TailForm::AsPrinted] {
                let t = 50.0;
                let h = 1e-3;
                let agg = |t: f64| -> f64 {
                    f.support()
                        .iter()
                        .map(|&((x, y), p)| p * tail_tau(t, QueueStart::new(x, y).unwrap(), &clock, form).unwrap())
                        .sum()
                };
                let fd = (agg(t - h) - agg(t + h)) / (2.0 * h);
                let d = tau_density_asymptotic(t, &f, &clock, form).unwrap();
                assert!((fd / d - 1.0).abs() < 1e-6, "{form:?} {lambda}: {fd} vs {d}");
            }
        }
    }

    #[test]
    fn point_mass_critical_density() {
        let clock = constant_clock(1.0, 1.0);
        let f = DepthDistribution::point(1, 1).unwrap();
        let d = tau_density_asymptotic(7.0, &f, &clock, TailForm::default()).unwrap();
        assert!((d - 1.0 / (std::f64::consts::PI * 49.0)).abs() < 1e-15);
    }

    #[test]
    fn moment_table() {
        let critical = TailRegime::from_rates(1.0, 1.0).unwrap();
        let power = RateSpec::new(RateForm::Power { k: 1.0, s: 2.0 }, 1.0, 1.0).unwrap();
        assert_eq!(moment_finiteness(1, critical, &power).unwrap(), Moment::Finite);
        assert_eq!(moment_finiteness(3, critical, &power).unwrap(), Moment::Infinite);
        let sub = TailRegime { case: TailCase::Subcritical, c: 0.25 };
        let recip = RateSpec::new(RateForm::Reciprocal { k: 1.0, t0: 1.0 }, 0.5, 1.0).unwrap();
        assert_eq!(moment_finiteness(1, sub, &recip).unwrap(), Moment::Infinite);
        let wide = RateSpec::new(RateForm::Reciprocal { k: 3.0, t0: 1.0 }, 0.5, 1.0).unwrap();
        assert_eq!(moment_finiteness(1, sub, &wide).unwrap(), Moment::Finite);
        let constant = RateSpec::constant(1.0, 1.0).unwrap();
        assert_eq!(moment_finiteness(1, critical, &constant).unwrap(), Moment::Infinite);
        assert_eq!(moment_finiteness(4, sub, &constant).unwrap(), Moment::Finite);
        let piecewise = RateSpec::new(
            RateForm::PiecewiseConstant { breakpoints: vec![1.0], values: vec![1.0, 2.0] },
            1.0,
            1.0,
        )
        .unwrap();
        assert!(matches!(moment_finiteness(1, critical, &piecewise), Err(Error::UnsupportedForm(_))));
    }
}
