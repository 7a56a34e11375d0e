//! Rate modulation `alpha_t` and its cumulative clock `A_t`.
//!
//! Limit orders arrive at `lambda * alpha_t` and market orders plus
//! cancellations at `mu * alpha_t`. Every time change in the crate goes
//! through [`CumulativeClock`], which measures `A` from a domain origin and
//! inverts it exactly where a closed form exists.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quad::{self, Tolerance};

/// Parametric families for `alpha_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", content = "params", rename_all = "snake_case")]
pub enum RateForm {
    /// `alpha_t = c`
    Constant { c: f64 },
    /// `alpha_t = k * t^s`
    Power { k: f64, s: f64 },
    /// `alpha_t = k * t^s * ln(t)^m`, defined for `t >= 1`
    PowerLog { k: f64, s: f64, m: f64 },
    /// `alpha_t = k / t` on `[t0, inf)`
    Reciprocal { k: f64, t0: f64 },
    /// `values[0]` before `breakpoints[0]`, `values[i]` on `[breakpoints[i-1], breakpoints[i])`,
    /// and the last value after the last breakpoint.
    PiecewiseConstant { breakpoints: Vec<f64>, values: Vec<f64> },
}

impl RateForm {
    fn validate(&self) -> Result<()> {
        let finite_pos = |v: f64, name: &str| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(format!("{name} must be positive and finite, got {v}")))
            }
        };
        match self {
            RateForm::Constant { c } => finite_pos(*c, "c"),
            RateForm::Power { k, s } => {
                finite_pos(*k, "k")?;
                if !s.is_finite() {
                    return Err(invalid("power exponent must be finite"));
                }
                Ok(())
            }
            RateForm::PowerLog { k, s, m } => {
                finite_pos(*k, "k")?;
                if !s.is_finite() || !m.is_finite() || *m < 0.0 {
                    return Err(invalid("powerlog needs finite s and m >= 0"));
                }
                Ok(())
            }
            RateForm::Reciprocal { k, t0 } => {
                finite_pos(*k, "k")?;
                finite_pos(*t0, "t0")
            }
            RateForm::PiecewiseConstant { breakpoints, values } => {
                if values.len() != breakpoints.len() + 1 {
                    return Err(invalid("piecewise rate needs one more value than breakpoints"));
                }
                if breakpoints.iter().any(|b| !b.is_finite() || *b < 0.0) {
                    return Err(invalid("breakpoints must be finite and nonnegative"));
                }
                if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(invalid("breakpoints must be strictly increasing"));
                }
                if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(invalid("piecewise values must be finite and nonnegative"));
                }
                if values.iter().all(|v| *v == 0.0) {
                    return Err(invalid("piecewise rate is identically zero"));
                }
                Ok(())
            }
        }
    }

    /// Default domain origin: zero where `A` is finite from zero, one second
    /// for the forms that are singular (or negative) near zero.
    pub fn default_origin(&self) -> f64 {
        match self {
            RateForm::Power { s, .. } if *s <= -1.0 => 1.0,
            RateForm::PowerLog { .. } => 1.0,
            RateForm::Reciprocal { t0, .. } => *t0,
            _ => 0.0,
        }
    }

    /// Exponent `s` of the power-law behaviour `alpha_t ~ t^s` at infinity,
    /// when the form has one.
    pub fn growth_exponent(&self) -> Option<f64> {
        match self {
            RateForm::Constant { .. } => Some(0.0),
            RateForm::Power { s, .. } | RateForm::PowerLog { s, .. } => Some(*s),
            RateForm::Reciprocal { .. } => Some(-1.0),
            RateForm::PiecewiseConstant { .. } => None,
        }
    }
}

impl fmt::Display for RateForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RateForm::Constant { c } => write!(f, "constant:{c}"),
            RateForm::Power { k, s } => write!(f, "power:{k},{s}"),
            RateForm::PowerLog { k, s, m } => write!(f, "powerlog:{k},{s},{m}"),
            RateForm::Reciprocal { k, t0 } => write!(f, "recip:{k},{t0}"),
            RateForm::PiecewiseConstant { breakpoints, values } => {
                write!(f, "piecewise:{breakpoints:?}/{values:?}")
            }
        }
    }
}

/// Parses the flag grammar `constant:c`, `power:K,s`, `powerlog:K,s,m`, `recip:k,t0`.
impl FromStr for RateForm {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let (name, args) = text
            .split_once(':')
            .ok_or_else(|| invalid(format!("rate form '{text}' is missing ':'")))?;
        let nums = args
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| invalid(format!("bad number in rate form '{text}': {e}")))?;
        let want = |n: usize| {
            if nums.len() == n {
                Ok(())
            } else {
                Err(invalid(format!("rate form '{name}' takes {n} parameters, got {}", nums.len())))
            }
        };
        let form = match name.trim() {
            "constant" => {
                want(1)?;
                RateForm::Constant { c: nums[0] }
            }
            "power" => {
                want(2)?;
                RateForm::Power { k: nums[0], s: nums[1] }
            }
            "powerlog" => {
                want(3)?;
                RateForm::PowerLog { k: nums[0], s: nums[1], m: nums[2] }
            }
            "recip" | "reciprocal" => {
                want(2)?;
                RateForm::Reciprocal { k: nums[0], t0: nums[1] }
            }
            other => return Err(invalid(format!("unknown rate form '{other}'"))),
        };
        form.validate()?;
        Ok(form)
    }
}

#[derive(Deserialize)]
struct RawRateSpec {
    #[serde(flatten)]
    form: RateForm,
    lambda: f64,
    mu: f64,
}

/// Modulation form plus the base rates `lambda` (limit orders) and `mu`
/// (market orders plus cancellations).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRateSpec")]
pub struct RateSpec {
    #[serde(flatten)]
    pub form: RateForm,
    pub lambda: f64,
    pub mu: f64,
}

impl TryFrom<RawRateSpec> for RateSpec {
    type Error = Error;

    fn try_from(raw: RawRateSpec) -> Result<Self> {
        RateSpec::new(raw.form, raw.lambda, raw.mu)
    }
}

impl RateSpec {
    pub fn new(form: RateForm, lambda: f64, mu: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(invalid(format!("lambda must be positive, got {lambda}")));
        }
        if !(mu.is_finite() && mu > 0.0) {
            return Err(invalid(format!("mu must be positive, got {mu}")));
        }
        form.validate()?;
        Ok(Self { form, lambda, mu })
    }

    pub fn constant(lambda: f64, mu: f64) -> Result<Self> {
        Self::new(RateForm::Constant { c: 1.0 }, lambda, mu)
    }

    /// `alpha_t` at absolute time `t`.
    pub fn alpha(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Domain { t, origin: 0.0 });
        }
        Ok(match &self.form {
            RateForm::Constant { c } => *c,
            RateForm::Power { k, s } => {
                if t == 0.0 {
                    match *s {
                        s if s > 0.0 => 0.0,
                        0.0 => *k,
                        _ => f64::INFINITY,
                    }
                } else {
                    k * t.powf(*s)
                }
            }
            RateForm::PowerLog { k, s, m } => {
                if t < 1.0 {
                    return Err(Error::Domain { t, origin: 1.0 });
                }
                k * t.powf(*s) * t.ln().powf(*m)
            }
            RateForm::Reciprocal { k, t0 } => {
                if t < *t0 {
                    return Err(Error::Domain { t, origin: *t0 });
                }
                k / t
            }
            RateForm::PiecewiseConstant { breakpoints, values } => {
                values[breakpoints.partition_point(|b| *b <= t)]
            }
        })
    }

    /// `mu / lambda`-free criticality constant `(sqrt(mu) - sqrt(lambda))^2`.
    pub fn decay_constant(&self) -> f64 {
        let d = self.mu.sqrt() - self.lambda.sqrt();
        d * d
    }
}

/// `A(t) = integral of alpha over [origin, t]` with its inverse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawClock")]
pub struct CumulativeClock {
    pub spec: RateSpec,
    pub origin: f64,
}

#[derive(Deserialize)]
struct RawClock {
    spec: RateSpec,
    #[serde(default)]
    origin: Option<f64>,
}

impl TryFrom<RawClock> for CumulativeClock {
    type Error = Error;

    fn try_from(raw: RawClock) -> Result<Self> {
        CumulativeClock::new(raw.spec, raw.origin)
    }
}

const ROOT_ITERATIONS: usize = 100;

impl CumulativeClock {
    pub fn new(spec: RateSpec, origin: Option<f64>) -> Result<Self> {
        let origin = origin.unwrap_or_else(|| spec.form.default_origin());
        if !(origin.is_finite() && origin >= 0.0) {
            return Err(invalid(format!("origin must be finite and nonnegative, got {origin}")));
        }
        match &spec.form {
            RateForm::Power { s, .. } if *s <= -1.0 && origin <= 0.0 => {
                return Err(invalid(format!(
                    "power exponent {s} <= -1 makes A infinite from 0; supply a positive origin"
                )))
            }
            RateForm::PowerLog { .. } if origin < 1.0 => {
                return Err(invalid("powerlog rate needs origin >= 1"))
            }
            RateForm::Reciprocal { t0, .. } if origin < *t0 => {
                return Err(invalid(format!("reciprocal rate needs origin >= t0 = {t0}")))
            }
            _ => {}
        }
        Ok(Self { spec, origin })
    }

    /// Clock with the form's default origin.
    pub fn from_spec(spec: RateSpec) -> Result<Self> {
        Self::new(spec, None)
    }

    pub fn lambda(&self) -> f64 {
        self.spec.lambda
    }

    pub fn mu(&self) -> f64 {
        self.spec.mu
    }

    pub fn alpha(&self, t: f64) -> Result<f64> {
        if t < self.origin {
            return Err(Error::Domain { t, origin: self.origin });
        }
        self.spec.alpha(t)
    }

    fn antiderivative_powerlog(t: f64, s: f64, m: u32) -> f64 {
        let l = t.ln();
        let p = s + 1.0;
        if p == 0.0 {
            return l.powi(m as i32 + 1) / (m as f64 + 1.0);
        }
        let tp = t.powf(p);
        let mut sum = 0.0;
        let mut coeff = 1.0; // m! / (m - j)!
        for j in 0..=m {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * coeff * l.powi((m - j) as i32) / p.powi(j as i32 + 1);
            coeff *= (m - j) as f64;
        }
        tp * sum
    }

    fn quadrature_tolerance() -> Tolerance {
        Tolerance { abs: 1e-12, rel: 1e-13, max_panels: 4000 }
    }

    /// `A(t)`.
    pub fn cumulative(&self, t: f64) -> Result<f64> {
        if !(t >= self.origin) {
            return Err(Error::Domain { t, origin: self.origin });
        }
        if t.is_infinite() {
            return Ok(self.sup());
        }
        let t0 = self.origin;
        let value = match &self.spec.form {
            RateForm::Constant { c } => c * (t - t0),
            RateForm::Power { k, s } => {
                let p = s + 1.0;
                if p == 0.0 {
                    k * (t / t0).ln()
                } else {
                    k * (t.powf(p) - t0.powf(p)) / p
                }
            }
            RateForm::PowerLog { k, s, m } => {
                if m.fract() == 0.0 && *m <= 64.0 {
                    let m = *m as u32;
                    k * (Self::antiderivative_powerlog(t, *s, m) - Self::antiderivative_powerlog(t0, *s, m))
                } else {
                    self.quadrature_cumulative(t)?
                }
            }
            RateForm::Reciprocal { k, .. } => k * (t / t0).ln(),
            RateForm::PiecewiseConstant { breakpoints, values } => {
                let mut acc = 0.0;
                let mut left = t0;
                for (i, v) in values.iter().enumerate() {
                    let right = breakpoints.get(i).copied().unwrap_or(f64::INFINITY);
                    if right <= left {
                        continue;
                    }
                    let hi = right.min(t);
                    if hi > left {
                        acc += v * (hi - left);
                    }
                    if t <= right {
                        break;
                    }
                    left = right;
                }
                acc
            }
        };
        if !value.is_finite() {
            return Err(Error::Divergence { from: t0, to: t });
        }
        Ok(value.max(0.0))
    }

    /// Adaptive quadrature route for `A(t)`; used for non-integer log powers and
    /// as a cross-check of the closed forms.
    pub fn quadrature_cumulative(&self, t: f64) -> Result<f64> {
        if !(t >= self.origin) {
            return Err(Error::Domain { t, origin: self.origin });
        }
        let mut cuts = vec![self.origin];
        if let RateForm::PiecewiseConstant { breakpoints, .. } = &self.spec.form {
            cuts.extend(breakpoints.iter().copied().filter(|b| *b > self.origin && *b < t));
        }
        // geometric panels keep the integrand's dynamic range per panel small
        let mut edge = if self.origin > 0.0 { self.origin } else { 1e-300 };
        while edge * 2.0 < t {
            edge *= 2.0;
            if edge > self.origin {
                cuts.push(edge);
            }
        }
        cuts.push(t);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut total = 0.0;
        for w in cuts.windows(2) {
            let est = quad::integrate(
                |u| self.spec.alpha(u).unwrap_or(0.0),
                w[0],
                w[1],
                Self::quadrature_tolerance(),
            )?;
            total += est.value;
        }
        Ok(total)
    }

    /// Supremum of `A` over the domain (infinite for every form whose rate
    /// does not decay faster than `1/t`).
    pub fn sup(&self) -> f64 {
        match &self.spec.form {
            RateForm::Power { k, s } if *s < -1.0 => {
                let p = s + 1.0;
                -k * self.origin.powf(p) / p
            }
            RateForm::PowerLog { k, s, m } if *s < -1.0 => {
                if m.fract() == 0.0 && *m <= 64.0 {
                    -k * Self::antiderivative_powerlog(self.origin, *s, *m as u32)
                } else {
                    quad::integrate_to_infinity(
                        |u| self.spec.alpha(u).unwrap_or(0.0),
                        self.origin,
                        Self::quadrature_tolerance(),
                    )
                    .map(|e| e.value)
                    .unwrap_or(f64::INFINITY)
                }
            }
            RateForm::PiecewiseConstant { breakpoints, values } if *values.last().unwrap() == 0.0 => {
                let last = breakpoints.last().copied().unwrap_or(self.origin).max(self.origin);
                self.cumulative(last).unwrap_or(f64::INFINITY)
            }
            _ => f64::INFINITY,
        }
    }

    /// `t` with `A(t) = a`.
    pub fn inverse(&self, a: f64) -> Result<f64> {
        let sup = self.sup();
        if !(a >= 0.0) || a >= sup {
            return Err(Error::Range { value: a, sup });
        }
        let t0 = self.origin;
        match &self.spec.form {
            RateForm::Constant { c } => Ok(t0 + a / c),
            RateForm::Power { k, s } => {
                let p = s + 1.0;
                if p == 0.0 {
                    Ok(t0 * (a / k).exp())
                } else {
                    let base = t0.powf(p) + a * p / k;
                    Ok(base.max(0.0).powf(1.0 / p))
                }
            }
            RateForm::Reciprocal { k, .. } => Ok(t0 * (a / k).exp()),
            RateForm::PiecewiseConstant { breakpoints, values } => {
                let mut left = t0;
                let mut remaining = a;
                for (i, v) in values.iter().enumerate() {
                    let right = breakpoints.get(i).copied().unwrap_or(f64::INFINITY);
                    if right <= left {
                        continue;
                    }
                    let capacity = v * (right - left);
                    if remaining <= capacity && *v > 0.0 {
                        return Ok(left + remaining / v);
                    }
                    remaining -= capacity;
                    left = right;
                }
                Err(Error::Range { value: a, sup })
            }
            RateForm::PowerLog { .. } => self.solve_inverse(a),
        }
    }

    /// Bracket by doubling, then safeguarded Newton.
    pub fn solve_inverse(&self, a: f64) -> Result<f64> {
        let sup = self.sup();
        if !(a >= 0.0) || a >= sup {
            return Err(Error::Range { value: a, sup });
        }
        if a == 0.0 {
            return Ok(self.origin);
        }
        let mut lo = self.origin;
        let mut width = 1.0f64.max(self.origin);
        let mut hi = self.origin + width;
        let mut doublings = 0;
        while self.cumulative(hi)? < a {
            lo = hi;
            width *= 2.0;
            hi = self.origin + width;
            doublings += 1;
            if doublings > 2000 || !hi.is_finite() {
                return Err(Error::Range { value: a, sup });
            }
        }
        let tol = 1e-12 * a.max(1.0);
        let mut t = 0.5 * (lo + hi);
        for _ in 0..ROOT_ITERATIONS {
            let f = self.cumulative(t)? - a;
            if f.abs() <= tol {
                return Ok(t);
            }
            if f > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let slope = self.alpha(t)?;
            let newton = t - f / slope;
            t = if slope > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= 4.0 * f64::EPSILON * hi {
                return Ok(t);
            }
        }
        Ok(t)
    }

    /// `A(origin + u)`: clock value after `u` seconds of elapsed time.
    pub fn cumulative_elapsed(&self, u: f64) -> Result<f64> {
        self.cumulative(self.origin + u)
    }

    /// Elapsed time `u` with `A(origin + u) = a`; `None` when `a` is beyond
    /// `sup A` (the event never happens in calendar time).
    pub fn inverse_elapsed(&self, a: f64) -> Option<f64> {
        if a >= self.sup() {
            return None;
        }
        match &self.spec.form {
            RateForm::Reciprocal { k, .. } => Some(self.origin * (a / k).exp_m1()),
            RateForm::Power { k, s } if *s == -1.0 => Some(self.origin * (a / k).exp_m1()),
            RateForm::Constant { c } => Some(a / c),
            _ => self.inverse(a).ok().map(|t| t - self.origin),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clock(form: RateForm, origin: Option<f64>) -> CumulativeClock {
        CumulativeClock::new(RateSpec::new(form, 0.9, 1.1).unwrap(), origin).unwrap()
    }

    #[test]
    fn alpha_examples() {
        let c = RateSpec::new(RateForm::Constant { c: 1.0 }, 1.0, 1.0).unwrap();
        assert_eq!(c.alpha(7.3).unwrap(), 1.0);
        let p = RateSpec::new(RateForm::Power { k: 0.1703, s: -0.4560 }, 1.0, 1.0).unwrap();
        assert!((p.alpha(1.0).unwrap() - 0.1703).abs() < 1e-15);
        let r = RateSpec::new(RateForm::Reciprocal { k: 2.0, t0: 1.0 }, 1.0, 1.0).unwrap();
        assert_eq!(r.alpha(4.0).unwrap(), 0.5);
        assert!(matches!(r.alpha(0.5), Err(Error::Domain { .. })));
    }

    #[test]
    fn cumulative_examples() {
        assert_eq!(clock(RateForm::Constant { c: 1.0 }, None).cumulative(5.0).unwrap(), 5.0);
        let sqrt = clock(RateForm::Power { k: 1.0, s: -0.5 }, None);
        assert!((sqrt.cumulative(4.0).unwrap() - 4.0).abs() < 1e-14);
        let recip = clock(RateForm::Reciprocal { k: 1.0, t0: 1.0 }, None);
        assert!((recip.cumulative(std::f64::consts::E).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(clock(RateForm::Constant { c: 1.0 }, None).inverse(5.0).unwrap(), 5.0);
        let sqrt = clock(RateForm::Power { k: 1.0, s: -0.5 }, None);
        assert!((sqrt.inverse(4.0).unwrap() - 4.0).abs() < 1e-13);
        let fb = clock(RateForm::Power { k: 0.4664, s: -1.0045 }, Some(1.0));
        let a10 = fb.cumulative(10.0).unwrap();
        assert!((fb.inverse(a10).unwrap() - 10.0).abs() < 1e-9);
    }

    #[test]
    fn singular_power_requires_positive_origin() {
        let spec = RateSpec::new(RateForm::Power { k: 1.0, s: -1.2 }, 1.0, 1.0).unwrap();
        assert!(CumulativeClock::new(spec.clone(), Some(0.0)).is_err());
        let c = CumulativeClock::new(spec, None).unwrap();
        assert_eq!(c.origin, 1.0);
        assert!((c.sup() - 5.0).abs() < 1e-12);
        assert!(matches!(c.inverse(5.5), Err(Error::Range { .. })));
        assert!(c.inverse_elapsed(6.0).is_none());
    }

    #[test]
    fn reciprocal_requires_t0() {
        assert!(RateSpec::new(RateForm::Reciprocal { k: 1.0, t0: 0.0 }, 1.0, 1.0).is_err());
    }

    #[test]
    fn rejects_bad_rates() {
        assert!(RateSpec::new(RateForm::Constant { c: 1.0 }, 0.0, 1.0).is_err());
        assert!(RateSpec::new(RateForm::Constant { c: 1.0 }, 1.0, -1.0).is_err());
        let bad = RateForm::PiecewiseConstant { breakpoints: vec![2.0, 1.0], values: vec![1.0, 1.0, 1.0] };
        assert!(RateSpec::new(bad, 1.0, 1.0).is_err());
        let neg = RateForm::PiecewiseConstant { breakpoints: vec![1.0], values: vec![1.0, -1.0] };
        assert!(RateSpec::new(neg, 1.0, 1.0).is_err());
    }

    #[test]
    fn piecewise_clock() {
        let form = RateForm::PiecewiseConstant { breakpoints: vec![1.0, 3.0], values: vec![2.0, 0.0, 1.0] };
        let c = clock(form, None);
        assert_eq!(c.cumulative(0.5).unwrap(), 1.0);
        assert_eq!(c.cumulative(2.0).unwrap(), 2.0);
        assert_eq!(c.cumulative(5.0).unwrap(), 4.0);
        assert_eq!(c.inverse(1.0).unwrap(), 0.5);
        assert_eq!(c.inverse(3.0).unwrap(), 4.0);
        assert_eq!(c.sup(), f64::INFINITY);
    }

    #[test]
    fn powerlog_closed_form_matches_quadrature() {
        for (s, m) in [(0.3, 1.0), (-0.5, 2.0), (-1.0, 1.0), (1.2, 3.0), (-1.5, 2.0)] {
            let c = clock(RateForm::PowerLog { k: 0.7, s, m }, None);
            for t in [1.5, 10.0, 250.0] {
                let closed = c.cumulative(t).unwrap();
                let quad = c.quadrature_cumulative(t).unwrap();
                assert!((closed - quad).abs() <= 1e-9 * closed.max(1.0), "s={s} m={m} t={t}: {closed} vs {quad}");
            }
        }
    }

    #[test]
    fn quadrature_agrees_with_closed_forms() {
        let forms = [
            RateForm::Constant { c: 2.5 },
            RateForm::Power { k: 1.0, s: -0.5 },
            RateForm::Power { k: 0.3, s: 1.7 },
            RateForm::Reciprocal { k: 2.0, t0: 0.5 },
            RateForm::PiecewiseConstant { breakpoints: vec![0.7, 4.0], values: vec![1.0, 3.0, 0.5] },
        ];
        for form in forms {
            let c = clock(form.clone(), None);
            for t in [1.0, 3.3, 77.0] {
                let closed = c.cumulative(t).unwrap();
                let quad = c.quadrature_cumulative(t).unwrap();
                assert!((closed - quad).abs() <= 1e-9, "{form}: t={t} {closed} vs {quad}");
            }
        }
    }

    #[test]
    fn non_integer_log_power_uses_quadrature_and_inverts() {
        let c = clock(RateForm::PowerLog { k: 1.0, s: 0.2, m: 0.5 }, None);
        let a = c.cumulative(40.0).unwrap();
        assert!((c.inverse(a).unwrap() - 40.0).abs() < 1e-8 * 40.0);
    }

    #[test]
    fn flag_grammar() {
        assert_eq!("power:1,-0.5".parse::<RateForm>().unwrap(), RateForm::Power { k: 1.0, s: -0.5 });
        assert_eq!("recip:2,1".parse::<RateForm>().unwrap(), RateForm::Reciprocal { k: 2.0, t0: 1.0 });
        assert_eq!("constant:3".parse::<RateForm>().unwrap(), RateForm::Constant { c: 3.0 });
        assert!("power:1".parse::<RateForm>().is_err());
        assert!("cubic:1,2".parse::<RateForm>().is_err());
    }

    #[test]
    fn json_schema() {
        let spec = RateSpec::new(RateForm::Power { k: 0.1703, s: -0.456 }, 0.9, 1.1).unwrap();
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(text, r#"{"form":"power","params":{"k":0.1703,"s":-0.456},"lambda":0.9,"mu":1.1}"#);
        let back: RateSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
        let bad = r#"{"form":"constant","params":{"c":1.0},"lambda":-1.0,"mu":1.1}"#;
        assert!(serde_json::from_str::<RateSpec>(bad).is_err());
    }
}
