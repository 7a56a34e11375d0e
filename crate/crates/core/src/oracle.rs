//! Brute-force reference for the extinction law: the absorbed birth-death
//! chain on `{0, ..., cap}` with its top state reflecting, solved by
//! uniformization (constant rates, evaluated at `A_T`) and, as an independent
//! witness, by stiff time stepping of the backward equation with the
//! modulated rates.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::analytic::QueueStart;
use crate::error::{invalid, Error, Result};
use crate::rates::CumulativeClock;

pub const MAX_TRUNCATION_BOUND: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleValue {
    pub value: f64,
    /// Upper bound on the probability mass lost to the truncation.
    pub truncation_bound: f64,
}

#[derive(Debug, Clone)]
pub struct TruncatedChain {
    pub cap: usize,
    pub clock: CumulativeClock,
}

/// `P[Poisson(m) >= k]`, summed in log space from `k` upward.
pub fn poisson_upper_tail(m: f64, k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if m <= 0.0 {
        return 0.0;
    }
    let log_pmf = |j: usize| -m + j as f64 * m.ln() - ln_gamma(j as f64 + 1.0);
    let start = if (k as f64) < m { m.floor() as usize } else { k };
    if start > k {
        // below the mode: use the complement
        let mut lower = 0.0;
        for j in 0..k {
            lower += log_pmf(j).exp();
        }
        return (1.0 - lower).clamp(0.0, 1.0);
    }
    let mut total = 0.0;
    let mut j = k;
    loop {
        let p = log_pmf(j).exp();
        total += p;
        if p < 1e-18 * total.max(1e-300) || j > k + 100_000 {
            break;
        }
        j += 1;
    }
    total.min(1.0)
}

/// `max(10 x, x + 20 sqrt(lambda a) + 50)`.
pub fn default_cap(x: u32, lambda: f64, a: f64) -> usize {
    let x = x as f64;
    (10.0 * x).max(x + 20.0 * (lambda * a).sqrt() + 50.0).ceil() as usize
}

fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &mut [f64], scratch: &mut [f64]) {
    let n = diag.len();
    scratch[0] = sup[0] / diag[0];
    rhs[0] /= diag[0];
    for i in 1..n {
        let denom = diag[i] - sub[i] * scratch[i - 1];
        scratch[i] = if i + 1 < n { sup[i] / denom } else { 0.0 };
        rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= scratch[i] * rhs[i + 1];
    }
}

impl TruncatedChain {
    pub fn new(clock: CumulativeClock, cap: usize) -> Result<Self> {
        if cap < 11 {
            return Err(invalid(format!("cap {cap} is below the minimum of 11")));
        }
        Ok(Self { cap, clock })
    }

    /// Chain with the default cap for a start at `x` and absolute horizon `t`.
    pub fn for_horizon(clock: CumulativeClock, x: u32, t: f64) -> Result<Self> {
        let a = clock.cumulative(t)?;
        let cap = default_cap(x, clock.lambda(), a);
        Self::new(clock, cap)
    }

    fn lambda(&self) -> f64 {
        self.clock.lambda()
    }

    fn mu(&self) -> f64 {
        self.clock.mu()
    }

    fn check_start(&self, x: u32) -> Result<()> {
        if x < 1 {
            return Err(invalid("x must be ≥ 1"));
        }
        if (x as usize) + 10 > self.cap {
            return Err(invalid(format!("cap {} must be at least x + 10 = {}", self.cap, x + 10)));
        }
        Ok(())
    }

    /// Birth-only bound on reaching the top state before internal time `a`.
    pub fn truncation_bound(&self, x: u32, a: f64) -> f64 {
        poisson_upper_tail(self.lambda() * a, self.cap - x as usize)
    }

    fn checked_bound(&self, x: u32, a: f64) -> Result<f64> {
        let bound = self.truncation_bound(x, a);
        if bound > MAX_TRUNCATION_BOUND {
            return Err(Error::TruncationInsufficient { cap: self.cap, bound });
        }
        Ok(bound)
    }

    /// `v -> P v` with `P = I + Q/q` on the truncated generator.
    fn apply_jump(&self, v: &[f64], out: &mut [f64]) {
        let (lambda, mu) = (self.lambda(), self.mu());
        let q = lambda + mu;
        let n = self.cap;
        out[0] = 0.0;
        for z in 1..n {
            out[z] = (lambda * v[z + 1] + mu * v[z - 1]) / q;
        }
        out[n] = (mu * v[n - 1] + lambda * v[n]) / q;
    }

    /// Survival from every state `0..=cap` at internal (constant-rate) time `a`.
    pub fn survival_vector_internal(&self, a: f64) -> Result<Vec<f64>> {
        if !(a >= 0.0) || !a.is_finite() {
            return Err(invalid(format!("internal time must be finite and nonnegative, got {a}")));
        }
        let n = self.cap;
        let mut v = vec![1.0; n + 1];
        v[0] = 0.0;
        if a == 0.0 {
            return Ok(v);
        }
        let m = (self.lambda() + self.mu()) * a;
        let ln_m = m.ln();
        let mut acc = vec![0.0; n + 1];
        let mut next = vec![0.0; n + 1];
        let mut k = 0usize;
        let mut weight_sum = 0.0;
        loop {
            let w = (-m + k as f64 * ln_m - ln_gamma(k as f64 + 1.0)).exp();
            if w > 0.0 {
                for (acc_z, v_z) in acc.iter_mut().zip(&v) {
                    *acc_z += w * v_z;
                }
                weight_sum += w;
            }
            if k as f64 > m && (1.0 - weight_sum < 1e-16 || w < 1e-18) {
                break;
            }
            self.apply_jump(&v, &mut next);
            std::mem::swap(&mut v, &mut next);
            k += 1;
            if k > 10_000_000 {
                return Err(Error::NoConvergence("uniformization needs more than 1e7 terms".into()));
            }
        }
        Ok(acc.into_iter().map(|p| p.clamp(0.0, 1.0)).collect())
    }

    /// `P[sigma > T]` from depth `x`, `T` on the clock's absolute time axis.
    pub fn survival(&self, t: f64, x: u32) -> Result<OracleValue> {
        self.check_start(x)?;
        let a = self.clock.cumulative(t)?;
        let truncation_bound = self.checked_bound(x, a)?;
        let v = self.survival_vector_internal(a)?;
        Ok(OracleValue { value: v[x as usize], truncation_bound })
    }

    /// Same quantity by integrating `dw/drho = alpha(T - rho) Q w` over
    /// calendar time with an A-stable SDIRK scheme and step-doubling control.
    pub fn survival_ode(&self, t: f64, x: u32, tol: f64) -> Result<OracleValue> {
        self.check_start(x)?;
        let a = self.clock.cumulative(t)?;
        let truncation_bound = self.checked_bound(x, a)?;
        let span = t - self.clock.origin;
        let n = self.cap + 1;
        let mut w = vec![1.0; n];
        w[0] = 0.0;
        if span == 0.0 {
            return Ok(OracleValue { value: 1.0, truncation_bound });
        }
        let mut stepper = Sdirk::new(self.lambda(), self.mu(), n);
        let alpha = |rho: f64| self.clock.spec.alpha(t - rho).unwrap_or(0.0);
        let mut rho = 0.0;
        let mut h = (span * 1e-3).min(0.1 / ((self.lambda() + self.mu()) * alpha(0.0).max(1e-300)));
        let mut steps = 0usize;
        while rho < span {
            h = h.min(span - rho);
            let full = stepper.step(&w, rho, h, &alpha);
            let half = stepper.step(&w, rho, 0.5 * h, &alpha);
            let two = stepper.step(&half, rho + 0.5 * h, 0.5 * h, &alpha);
            let err = full
                .iter()
                .zip(&two)
                .map(|(p, q)| (p - q).abs())
                .fold(0.0, f64::max)
                / 7.0;
            if err <= tol || h <= 1e-14 * span.max(1.0) {
                for ((wz, tz), fz) in w.iter_mut().zip(&two).zip(&full) {
                    *wz = tz + (tz - fz) / 7.0;
                }
                rho += h;
            }
            let factor = if err == 0.0 { 4.0 } else { (0.9 * (tol / err).powf(0.25)).clamp(0.2, 4.0) };
            h *= factor;
            steps += 1;
            if steps > 5_000_000 {
                return Err(Error::NoConvergence("backward-equation stepping exceeded 5e6 steps".into()));
            }
        }
        Ok(OracleValue { value: w[x as usize].clamp(0.0, 1.0), truncation_bound })
    }

    /// Product of the two independent side survivals.
    pub fn tau_survival(&self, t: f64, start: QueueStart) -> Result<OracleValue> {
        let sx = self.survival(t, start.x)?;
        let sy = self.survival(t, start.y)?;
        Ok(OracleValue {
            value: sx.value * sy.value,
            truncation_bound: sx.truncation_bound + sy.truncation_bound,
        })
    }
}

/// Two-stage, third-order, A-stable SDIRK for `w' = a(rho) Q w`.
struct Sdirk {
    lambda: f64,
    mu: f64,
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
    scratch: Vec<f64>,
}

const GAMMA: f64 = 0.788_675_134_594_812_9; // (3 + sqrt 3) / 6

impl Sdirk {
    fn new(lambda: f64, mu: f64, n: usize) -> Self {
        Self {
            lambda,
            mu,
            sub: vec![0.0; n],
            diag: vec![0.0; n],
            sup: vec![0.0; n],
            scratch: vec![0.0; n],
        }
    }

    fn apply_q(&self, v: &[f64], scale: f64, out: &mut [f64]) {
        let n = v.len() - 1;
        out[0] = 0.0;
        for z in 1..n {
            out[z] = scale * (self.lambda * (v[z + 1] - v[z]) + self.mu * (v[z - 1] - v[z]));
        }
        out[n] = scale * self.mu * (v[n - 1] - v[n]);
    }

    /// Solves `(I - c Q) y = rhs` in place.
    fn solve(&mut self, c: f64, rhs: &mut [f64]) {
        let n = rhs.len() - 1;
        self.sub[0] = 0.0;
        self.diag[0] = 1.0;
        self.sup[0] = 0.0;
        for z in 1..n {
            self.sub[z] = -c * self.mu;
            self.diag[z] = 1.0 + c * (self.lambda + self.mu);
            self.sup[z] = -c * self.lambda;
        }
        self.sub[n] = -c * self.mu;
        self.diag[n] = 1.0 + c * self.mu;
        self.sup[n] = 0.0;
        thomas(&self.sub, &self.diag, &self.sup, rhs, &mut self.scratch);
    }

    fn step(&mut self, w: &[f64], rho: f64, h: f64, alpha: &impl Fn(f64) -> f64) -> Vec<f64> {
        let a1 = alpha(rho + GAMMA * h);
        let a2 = alpha(rho + (1.0 - GAMMA) * h);
        let mut y1 = w.to_vec();
        self.solve(h * GAMMA * a1, &mut y1);
        let mut k1 = vec![0.0; w.len()];
        self.apply_q(&y1, a1, &mut k1);
        let mut y2: Vec<f64> = w.iter().zip(&k1).map(|(wz, kz)| wz + h * (1.0 - 2.0 * GAMMA) * kz).collect();
        self.solve(h * GAMMA * a2, &mut y2);
        let mut k2 = vec![0.0; w.len()];
        self.apply_q(&y2, a2, &mut k2);
        w.iter()
            .zip(k1.iter().zip(&k2))
            .map(|(wz, (p, q))| wz + 0.5 * h * (p + q))
            .collect()
    }
}

/// Oracle survival with the default cap for the horizon.
pub fn ctmc_survival(t: f64, x: u32, clock: &CumulativeClock) -> Result<OracleValue> {
    TruncatedChain::for_horizon(clock.clone(), x, t)?.survival(t, x)
}

/// Oracle `P[tau > T]` as the product of two single-queue oracles.
pub fn ctmc_tau_survival(t: f64, start: QueueStart, clock: &CumulativeClock) -> Result<OracleValue> {
    let sx = ctmc_survival(t, start.x, clock)?;
    let sy = ctmc_survival(t, start.y, clock)?;
    Ok(OracleValue {
        value: sx.value * sy.value,
        truncation_bound: sx.truncation_bound + sy.truncation_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rates::{RateForm, RateSpec};

    fn constant(lambda: f64, mu: f64) -> CumulativeClock {
        CumulativeClock::from_spec(RateSpec::constant(lambda, mu).unwrap()).unwrap()
    }

    #[test]
    fn pure_death_single_order() {
        let v = ctmc_survival(1.0, 1, &constant(1e-12, 1.0)).unwrap();
        assert!((v.value - (-1.0f64).exp()).abs() < 1e-6);
        assert_eq!(ctmc_survival(0.0, 3, &constant(1e-12, 2.0)).unwrap().value, 1.0);
    }

    #[test]
    fn two_pure_deaths() {
        let v = ctmc_tau_survival(1.0, QueueStart::new(1, 1).unwrap(), &constant(1e-12, 1.0)).unwrap();
        assert!((v.value - (-2.0f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn cap_doubling_is_stable() {
        let clock = constant(0.9, 1.1);
        let base = TruncatedChain::new(clock.clone(), 200).unwrap().survival(5.0, 3).unwrap();
        let doubled = TruncatedChain::new(clock, 400).unwrap().survival(5.0, 3).unwrap();
        assert!((base.value - doubled.value).abs() <= 1e-9);
        assert!(base.truncation_bound < 1e-8);
    }

    #[test]
    fn small_cap_is_rejected() {
        let chain = TruncatedChain::new(constant(1.0, 1.0), 12).unwrap();
        assert!(matches!(chain.survival(50.0, 1), Err(Error::TruncationInsufficient { .. })));
        assert!(chain.survival(1.0, 5).is_err());
    }

    #[test]
    fn poisson_tail_matches_direct_sum() {
        let direct = |m: f64, k: usize| {
            1.0 - (0..k).map(|j| (-m + j as f64 * m.ln() - ln_gamma(j as f64 + 1.0)).exp()).sum::<f64>()
        };
        for (m, k) in [(3.0, 2), (3.0, 8), (20.0, 25)] {
            assert!((poisson_upper_tail(m, k) - direct(m, k)).abs() < 1e-13);
        }
        assert!(poisson_upper_tail(1.0, 60) < 1e-60);
    }

    #[test]
    fn ode_witness_agrees_with_uniformization() {
        let spec = RateSpec::new(RateForm::Power { k: 1.0, s: -0.5 }, 0.8, 1.0).unwrap();
        let clock = CumulativeClock::from_spec(spec).unwrap();
        let chain = TruncatedChain::for_horizon(clock, 2, 4.0).unwrap();
        let a = chain.survival(4.0, 2).unwrap().value;
        let b = chain.survival_ode(4.0, 2, 1e-11).unwrap().value;
        assert!((a - b).abs() < 1e-7, "{a} vs {b}");
    }

    #[test]
    fn ode_witness_with_growing_rate() {
        let spec = RateSpec::new(RateForm::Reciprocal { k: 2.0, t0: 1.0 }, 0.8, 1.0).unwrap();
        let clock = CumulativeClock::from_spec(spec).unwrap();
        let e = std::f64::consts::E;
        let chain = TruncatedChain::for_horizon(clock, 1, e).unwrap();
        let a = chain.survival(e, 1).unwrap().value;
        let b = chain.survival_ode(e, 1, 1e-11).unwrap().value;
        assert!((a - b).abs() < 1e-7, "{a} vs {b}");
        let direct = ctmc_survival(2.0, 1, &constant(0.8, 1.0)).unwrap().value;
        assert!((a - direct).abs() < 1e-12);
    }
}
