//! Exponentially scaled modified Bessel function of the first kind,
//! `I_n(z) * exp(-z)` for integer order.
//!
//! Small and moderate arguments use the power series summed outward from its
//! largest term in log space; large arguments (relative to `n^2`) use the
//! Hankel asymptotic expansion truncated at its smallest term.

use statrs::function::gamma::ln_gamma;

fn hankel_threshold(n: u32) -> f64 {
    let n = n as f64;
    25.0 + 2.5 * n * n
}

/// `I_n(z) e^{-z}` for `z >= 0`.
pub fn ive(n: u32, z: f64) -> f64 {
    debug_assert!(z >= 0.0);
    if z == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if z >= hankel_threshold(n) {
        hankel(n, z)
    } else {
        series(n, z)
    }
}

fn series(n: u32, z: f64) -> f64 {
    let nf = n as f64;
    let q = 0.25 * z * z;
    let half_ln = (0.5 * z).ln();
    let peak = ((-nf + (nf * nf + z * z).sqrt()) * 0.5).floor().max(0.0);
    let ln_term = |k: f64| (nf + 2.0 * k) * half_ln - ln_gamma(k + 1.0) - ln_gamma(nf + k + 1.0) - z;
    let log_peak = ln_term(peak);

    let mut sum = 1.0;
    let mut rel = 1.0;
    let mut k = peak;
    loop {
        rel *= q / ((k + 1.0) * (nf + k + 1.0));
        sum += rel;
        k += 1.0;
        if rel < 1e-18 * sum {
            break;
        }
    }
    rel = 1.0;
    k = peak;
    while k > 0.0 {
        rel *= k * (nf + k) / q;
        sum += rel;
        k -= 1.0;
        if rel < 1e-18 * sum {
            break;
        }
    }
    (log_peak + sum.ln()).exp()
}

fn hankel(n: u32, z: f64) -> f64 {
    let mu = 4.0 * (n as f64) * (n as f64);
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        let odd = 2.0 * k - 1.0;
        let next = -term * (mu - odd * odd) / (8.0 * k * z);
        if next.abs() >= term.abs() || next == 0.0 {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
        k += 1.0;
    }
    sum / (2.0 * std::f64::consts::PI * z).sqrt()
}
