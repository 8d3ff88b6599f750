//! Gamma-family functions, classical orthogonal polynomials and
//! hypergeometric functions.
//!
//! Hypergeometric values are returned as [`LogScaled`] since they reach
//! e^z scales; series are summed in the log domain with sign tracking and a
//! cancellation diagnostic.

use crate::error::{Error, Result};
use crate::logscale::LogScaled;
use crate::quad::{integrate, QuadratureSpec};

const HALF_LN_2PI: f64 = 0.918938533204672741780329736406;

// Lanczos coefficients, g = 7.
const LANCZOS: [f64; 9] = [
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
];

fn lanczos_ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection: ln Gamma(x) = ln(pi / sin(pi x)) - ln Gamma(1 - x)
        let s = (std::f64::consts::PI * x).sin();
        std::f64::consts::PI.ln() - s.ln() - lanczos_ln_gamma(1.0 - x)
    } else {
        let z = x - 1.0;
        let mut a = LANCZOS[0];
        for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
            a += c / (z + i as f64);
        }
        let t = z + 7.5;
        HALF_LN_2PI + (z + 0.5) * t.ln() - t + a.ln()
    }
}

/// ln Gamma(x) for x > 0.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("log_gamma requires x > 0, got {x}")));
    }
    Ok(lanczos_ln_gamma(x))
}

/// Gamma(x) for any non-pole real x, carried as sign + log magnitude.
pub(crate) fn gamma_signed(x: f64) -> Result<LogScaled> {
    if x > 0.0 {
        return Ok(LogScaled::from_exp(lanczos_ln_gamma(x)));
    }
    if x == x.floor() {
        return Err(Error::Domain(format!("gamma pole at {x}")));
    }
    // reflection on the magnitude, sign from sin(pi x)
    let s = (std::f64::consts::PI * x).sin();
    let lg = std::f64::consts::PI.ln() - s.abs().ln() - lanczos_ln_gamma(1.0 - x);
    Ok(LogScaled::new(if s > 0.0 { 1 } else { -1 }, lg))
}

/// ln Gamma_n(alpha) = (n(n-1)/2) ln pi + sum_j ln Gamma(alpha - j + 1).
pub fn multivariate_log_gamma(n: usize, alpha: f64) -> Result<f64> {
    if n < 1 {
        return Err(Error::Domain("n must be >= 1".into()));
    }
    if !(alpha > n as f64 - 1.0) {
        return Err(Error::Domain(format!(
            "multivariate_log_gamma requires alpha > n - 1 = {}, got {alpha}",
            n - 1
        )));
    }
    let mut acc = (n * (n - 1)) as f64 / 2.0 * std::f64::consts::PI.ln();
    for j in 1..=n {
        acc += lanczos_ln_gamma(alpha - j as f64 + 1.0);
    }
    Ok(acc)
}

/// Associated Laguerre polynomial L_mu^{(s)}(x) by three-term recurrence.
pub fn laguerre(mu: usize, s: f64, x: f64) -> f64 {
    if mu == 0 {
        return 1.0;
    }
    let mut lm1 = 1.0;
    let mut l = 1.0 + s - x;
    for k in 1..mu {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + s - x) * l - (kf + s) * lm1) / (kf + 1.0);
        lm1 = l;
        l = next;
    }
    l
}

/// Physicists' Hermite polynomial H_mu(x) by recurrence.
pub fn hermite(mu: usize, x: f64) -> f64 {
    if mu == 0 {
        return 1.0;
    }
    let mut hm1 = 1.0;
    let mut h = 2.0 * x;
    for k in 1..mu {
        let next = 2.0 * x * h - 2.0 * k as f64 * hm1;
        hm1 = h;
        h = next;
    }
    h
}

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.floor()
}

/// Generalized hypergeometric series sum_k prod(num)_k / prod(den)_k z^k / k!
/// summed in the log domain. Numerator/denominator parameter pairs that are
/// exactly equal cancel; a zero numerator factor truncates the series.
/// Truncation takes precedence: a non-positive-integer numerator parameter
/// is never cancelled away, so the series stays a polynomial even when the
/// same value appears downstairs (the limit convention behind terminating
/// moment-matrix entries).
fn hyp_series(num: &[f64], den: &[f64], z: f64, max_terms: usize) -> Result<LogScaled> {
    // cancel identical non-truncating parameter pairs
    let mut num: Vec<f64> = num.to_vec();
    let mut den: Vec<f64> = den.to_vec();
    let mut i = 0;
    while i < num.len() {
        if !is_nonpositive_integer(num[i]) {
            if let Some(j) = den.iter().position(|&d| d == num[i]) {
                num.remove(i);
                den.remove(j);
                continue;
            }
        }
        i += 1;
    }

    let zl = LogScaled::from_f64(z);
    let mut term = LogScaled::ONE;
    let mut sum = LogScaled::ONE;
    let mut max_term_log: f64 = 0.0;
    let mut small_streak = 0;
    for k in 0..max_terms {
        let kf = k as f64;
        let mut ratio = zl;
        let mut truncated = false;
        for &a in &num {
            if a + kf == 0.0 {
                truncated = true;
                break;
            }
            ratio = ratio * LogScaled::from_f64(a + kf);
        }
        if truncated {
            break;
        }
        for &b in &den {
            if b + kf == 0.0 {
                return Err(Error::Domain(format!(
                    "hypergeometric denominator parameter {b} hit a pole at term {k}"
                )));
            }
            ratio = ratio / LogScaled::from_f64(b + kf);
        }
        ratio = ratio / LogScaled::from_f64(kf + 1.0);
        term = term * ratio;
        if term.is_zero() {
            break;
        }
        sum = sum + term;
        max_term_log = max_term_log.max(term.log_abs());
        if term.log_abs() < sum.log_abs() - 37.0 && term.log_abs() < max_term_log {
            small_streak += 1;
            if small_streak >= 3 {
                break;
            }
        } else {
            small_streak = 0;
        }
        if k + 1 == max_terms {
            return Err(Error::AccuracyLoss(format!(
                "hypergeometric series did not converge within {max_terms} terms (z = {z})"
            )));
        }
    }
    if !sum.is_zero() && sum.log_abs() < max_term_log - 34.0 {
        return Err(Error::AccuracyLoss(format!(
            "catastrophic cancellation in hypergeometric series (z = {z})"
        )));
    }
    Ok(sum)
}

/// Poincare asymptotic expansion of 1F1 for large positive z; the
/// subdominant z^{-a} branch is exponentially small here and dropped.
fn kummer_asymptotic(a: f64, b: f64, z: f64) -> Result<LogScaled> {
    let pref = gamma_signed(b)? / gamma_signed(a)?
        * LogScaled::from_exp(z)
        * LogScaled::new(1, (a - b) * z.ln());
    let mut term = LogScaled::ONE;
    let mut sum = LogScaled::ONE;
    let mut prev_log = 0.0f64;
    for k in 0..40 {
        let kf = k as f64;
        term = term
            * LogScaled::from_f64((b - a + kf) * (1.0 - a + kf))
            / LogScaled::from_f64((kf + 1.0) * z);
        if term.is_zero() || term.log_abs() < sum.log_abs() - 37.0 {
            sum = sum + term;
            return Ok(pref * sum);
        }
        if k > 0 && term.log_abs() > prev_log {
            // divergent tail of the asymptotic series: stop at optimal term
            return Ok(pref * sum);
        }
        prev_log = term.log_abs();
        sum = sum + term;
    }
    Ok(pref * sum)
}

/// Kummer's confluent hypergeometric function 1F1(a; b; z).
pub fn kummer_1f1(a: f64, b: f64, z: f64) -> Result<LogScaled> {
    if is_nonpositive_integer(b) {
        return Err(Error::Domain(format!(
            "1F1 undefined for non-positive integer b = {b}"
        )));
    }
    if z == 0.0 {
        return Ok(LogScaled::ONE);
    }
    if z < 0.0 {
        // Kummer transformation keeps the series terms same-signed for the
        // parameter ranges used here.
        let inner = kummer_1f1_pos(b - a, b, -z)?;
        return Ok(LogScaled::from_exp(z) * inner);
    }
    kummer_1f1_pos(a, b, z)
}

fn kummer_1f1_pos(a: f64, b: f64, z: f64) -> Result<LogScaled> {
    debug_assert!(z >= 0.0);
    if is_nonpositive_integer(a) {
        // polynomial case, direct truncated series
        return hyp_series(&[a], &[b], z, (-a) as usize + 2);
    }
    if z > 200.0 {
        if let Ok(v) = kummer_asymptotic(a, b, z) {
            return Ok(v);
        }
    }
    hyp_series(&[a], &[b], z, 100_000)
}

/// Tricomi's confluent hypergeometric function U(a, b; z) for a > 0, z > 0,
/// computed from its half-line integral representation.
pub fn tricomi_u(a: f64, b: f64, z: f64) -> Result<LogScaled> {
    if !(a > 0.0) {
        return Err(Error::Domain(format!("tricomi_u requires a > 0, got {a}")));
    }
    if !(z > 0.0) {
        return Err(Error::Domain(format!("tricomi_u requires z > 0, got {z}")));
    }
    tricomi_u_with(a, b, z, &QuadratureSpec::half_line())
}

/// U(a, b; z) with an explicit quadrature budget (used by the self-oracle
/// tests at doubled subdivision limits).
pub fn tricomi_u_with(a: f64, b: f64, z: f64, spec: &QuadratureSpec) -> Result<LogScaled> {
    let p = a - 1.0;
    let q = b - a - 1.0;
    let integral = integrate(
        |t: f64| {
            if t <= 0.0 {
                return LogScaled::ZERO;
            }
            LogScaled::from_exp(p * t.ln() - z * t + q * t.ln_1p())
        },
        spec,
    )?;
    Ok(integral * LogScaled::from_exp(-lanczos_ln_gamma(a)))
}

/// Gauss hypergeometric function 2F1(a, b; c; z) for z < 1. Negative
/// arguments are mapped into [0, 1) by the Pfaff transformation.
pub fn gauss_2f1(a: f64, b: f64, c: f64, z: f64) -> Result<LogScaled> {
    if is_nonpositive_integer(c) {
        return Err(Error::Domain(format!(
            "2F1 undefined for non-positive integer c = {c}"
        )));
    }
    if !(z < 1.0) {
        return Err(Error::Domain(format!("2F1 requires z < 1, got {z}")));
    }
    if z == 0.0 {
        return Ok(LogScaled::ONE);
    }
    if z < 0.0 {
        // Pfaff: 2F1(a,b;c;z) = (1-z)^{-a} 2F1(a, c-b; c; z/(z-1))
        let zt = z / (z - 1.0); // in (0, 1)
        let pref = LogScaled::from_exp(-a * (1.0 - z).ln());
        return Ok(pref * hyp_series(&[a, c - b], &[c], zt, 500_000)?);
    }
    hyp_series(&[a, b], &[c], z, 500_000)
}

/// Generalized hypergeometric function 2F2(a1, a2; b1, b2; z) (entire).
pub fn hyp_2f2(a1: f64, a2: f64, b1: f64, b2: f64, z: f64) -> Result<LogScaled> {
    for (name, b) in [("b1", b1), ("b2", b2)] {
        if is_nonpositive_integer(b) {
            // allowed only when a numerator parameter truncates the series
            // first, or cancels the pair; hyp_series checks term by term.
            let truncates = [a1, a2]
                .iter()
                .any(|&a| is_nonpositive_integer(a) && a >= b)
                || a1 == b
                || a2 == b;
            if !truncates {
                return Err(Error::Domain(format!(
                    "2F2 undefined for non-positive integer {name} = {b}"
                )));
            }
        }
    }
    hyp_series(&[a1, a2], &[b1, b2], z, 100_000)
}
