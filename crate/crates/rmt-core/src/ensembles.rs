//! The four composite ensembles and the closed-form reference densities.
//!
//! Each constructor supplies the biorthogonal data (w, {f_j}, h) of its
//! ensemble:
//!
//! * quotient of two Wisharts, H = aA (1 + bB)^{-1}: Tricomi-U family on
//!   the positive half-line;
//! * weighted Wigner + Wishart sum, H = aA + bB: Gaussian weight on the
//!   full line, family by max-factored quadrature (Kummer closed form as a
//!   bounded-argument cross-check);
//! * Wigner x Wishart product, H = AB: signed power-law weight, family by
//!   quadrature on each half-line, checkerboard moment matrix;
//! * weighted sum of two Wisharts with covariance, H = aA + bB: Kummer
//!   family, Gauss-2F1 moment matrix.

use crate::biortho::{build_system, BiorthoSystem, FamilyFn, HStrategy, WeightFn};
use crate::error::{Error, Result};
use crate::linalg::stable_log_det;
use crate::logscale::LogScaled;
use crate::quad::{integrate, integrate_lenient, Domain, QuadratureSpec};
use crate::specfun::{gauss_2f1, hermite, hyp_2f2, kummer_1f1, laguerre, log_gamma, tricomi_u};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Relative gap below which the sigma spectrum counts as degenerate.
pub const SIGMA_DEGENERACY_THRESHOLD: f64 = 1e-8;

/// Parameter record selecting one of the four composite models.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EnsembleSpec {
    /// H = aA (1 + bB)^{-1}, A, B Wishart.
    Quotient {
        n: usize,
        n_a: usize,
        n_b: usize,
        a: f64,
        b: f64,
    },
    /// H = aA + bB, A Gaussian Wigner, B Wishart.
    WignerWishartSum {
        n: usize,
        n_b: usize,
        a: f64,
        b: f64,
    },
    /// H = AB, A Gaussian Wigner, B Wishart.
    WignerWishartProduct { n: usize, n_b: usize },
    /// H = aA + bB, A Wishart, B correlated Wishart with spectrum sigma.
    TwoWishartSum {
        n: usize,
        n_a: usize,
        n_b: usize,
        a: f64,
        b: f64,
        sigma: Vec<f64>,
    },
}

impl EnsembleSpec {
    pub fn n(&self) -> usize {
        match self {
            EnsembleSpec::Quotient { n, .. }
            | EnsembleSpec::WignerWishartSum { n, .. }
            | EnsembleSpec::WignerWishartProduct { n, .. }
            | EnsembleSpec::TwoWishartSum { n, .. } => *n,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            EnsembleSpec::Quotient { .. } => "quotient",
            EnsembleSpec::WignerWishartSum { .. } => "wigner-wishart-sum",
            EnsembleSpec::WignerWishartProduct { .. } => "wigner-wishart-product",
            EnsembleSpec::TwoWishartSum { .. } => "two-wishart-sum",
        }
    }

    /// Support of the eigenvalue density.
    pub fn support(&self) -> Domain {
        match self {
            EnsembleSpec::Quotient { .. } | EnsembleSpec::TwoWishartSum { .. } => {
                Domain::HalfLinePos
            }
            _ => Domain::FullLine,
        }
    }

    /// Invariants required for the analytic construction.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidSpec(msg));
        match self {
            EnsembleSpec::Quotient { n, n_a, n_b, a, b } => {
                if *n < 1 {
                    return fail("n must be >= 1".into());
                }
                if n_a < n || n_b < n {
                    return fail(format!("degrees of freedom n_A={n_a}, n_B={n_b} must be >= n={n}"));
                }
                if !(*a > 0.0) {
                    return fail(format!("a must be > 0, got {a}"));
                }
                if !(*b > 0.0) {
                    return fail(format!("quotient ensemble requires b > 0, got {b}"));
                }
            }
            EnsembleSpec::WignerWishartSum { n, n_b, a, b } => {
                if *n < 1 {
                    return fail("n must be >= 1".into());
                }
                if n_b < n {
                    return fail(format!("n_B={n_b} must be >= n={n}"));
                }
                if !(*a > 0.0) || !(*b > 0.0) {
                    return fail(format!("a={a}, b={b} must be > 0"));
                }
            }
            EnsembleSpec::WignerWishartProduct { n, n_b } => {
                if *n < 1 {
                    return fail("n must be >= 1".into());
                }
                if n_b < n {
                    return fail(format!("n_B={n_b} must be >= n={n}"));
                }
            }
            EnsembleSpec::TwoWishartSum { n, n_a, n_b, a, b, sigma } => {
                if *n < 1 {
                    return fail("n must be >= 1".into());
                }
                if n_a < n || n_b < n {
                    return fail(format!("degrees of freedom n_A={n_a}, n_B={n_b} must be >= n={n}"));
                }
                if !(*a > 0.0) || !(*b > 0.0) {
                    return fail(format!("a={a}, b={b} must be > 0"));
                }
                if sigma.len() != *n {
                    return fail(format!("sigma must have n={n} entries, got {}", sigma.len()));
                }
                if sigma.iter().any(|&s| !(s > 0.0)) {
                    return fail("sigma entries must be positive".into());
                }
                check_sigma_gap(sigma)?;
            }
        }
        Ok(())
    }

    /// Build the biorthogonal system for this ensemble.
    pub fn build(&self) -> Result<BiorthoSystem> {
        self.validate()?;
        match self {
            EnsembleSpec::Quotient { n, n_a, n_b, a, b } => quotient_system(*n, *n_a, *n_b, *a, *b),
            EnsembleSpec::WignerWishartSum { n, n_b, a, b } => {
                wigner_wishart_sum_system(*n, *n_b, *a, *b)
            }
            EnsembleSpec::WignerWishartProduct { n, n_b } => {
                wigner_wishart_product_system(*n, *n_b)
            }
            EnsembleSpec::TwoWishartSum { n, n_a, n_b, a, b, sigma } => {
                two_wishart_sum_system(*n, *n_a, *n_b, *a, *b, sigma)
            }
        }
    }
}

fn check_sigma_gap(sigma: &[f64]) -> Result<()> {
    let max = sigma.iter().cloned().fold(0.0f64, f64::max);
    let threshold = SIGMA_DEGENERACY_THRESHOLD * max;
    let mut min_gap = f64::INFINITY;
    for i in 0..sigma.len() {
        for j in i + 1..sigma.len() {
            min_gap = min_gap.min((sigma[i] - sigma[j]).abs());
        }
    }
    if sigma.len() > 1 && min_gap <= threshold {
        return Err(Error::DegenerateSigma {
            gap: min_gap,
            threshold,
        });
    }
    Ok(())
}

/// Quotient ensemble H = aA (1 + bB)^{-1}:
/// w(l) = e^{-l/a} l^{n_A-n} on (0, inf),
/// f_j(l) = U(n_B-j+1, n_A+n_B-j+2; 1/b + l/a),
/// h_{j,k} = a^{n_A-n+k} Gamma(n_A-n+k) U(n_B-j+1, n_B+n-j-k+2; 1/b).
pub fn quotient_system(n: usize, n_a: usize, n_b: usize, a: f64, b: f64) -> Result<BiorthoSystem> {
    let s = (n_a - n) as f64;
    let weight: WeightFn = Arc::new(move |l: f64| {
        if l < 0.0 {
            return LogScaled::ZERO;
        }
        LogScaled::from_exp(-l / a) * LogScaled::from_powi(l, (n_a - n) as i64)
    });
    let (nbf, naf) = (n_b as f64, n_a as f64);
    let family: FamilyFn = Arc::new(move |j: usize, l: f64| {
        let jf = j as f64;
        tricomi_u(nbf - jf + 1.0, naf + nbf - jf + 2.0, 1.0 / b + l / a)
            .expect("quotient family: U parameters are in range by construction")
    });
    let mut table = vec![vec![LogScaled::ZERO; n]; n];
    for j in 1..=n {
        for k in 1..=n {
            let (jf, kf) = (j as f64, k as f64);
            let pref = LogScaled::from_exp((s + kf) * a.ln() + log_gamma(s + kf)?);
            let u = tricomi_u(nbf - jf + 1.0, nbf + n as f64 - jf - kf + 2.0, 1.0 / b)?;
            table[j - 1][k - 1] = pref * u;
        }
    }
    build_system(n, Domain::HalfLinePos, weight, family, HStrategy::Table(table))
}

/// Integrate over the positive half-line, relaxing the tolerance a couple
/// of notches before giving up: family integrals get probed at extreme
/// arguments where the integrand degenerates to a boundary layer and the
/// adaptive scheme can stall just short of the tightest target.
fn half_line_integral<F: Fn(f64) -> LogScaled>(f: F, what: &str) -> LogScaled {
    for tol in [1e-11, 1e-9, 1e-7] {
        if let Ok(v) = integrate(&f, &QuadratureSpec::half_line().with_tolerance(tol)) {
            return v;
        }
    }
    // Exponent magnitudes past ~1e15 lose absolute log precision to f64
    // rounding, so the integrand is pointwise noisy and the error estimate
    // saturates; the integral itself averages the noise out, so take the
    // best estimate rather than fail (it only feeds regions an outer weight
    // suppresses anyway).
    match integrate_lenient(&f, &QuadratureSpec::half_line().with_tolerance(1e-7)) {
        Ok((v, _)) => v,
        Err(e) => panic!("{what}: half-line integral failed outright: {e:?}"),
    }
}

/// The family integral of the Wigner+Wishart sum in quadrature form:
/// f_j(l) = int_0^inf mu^{n_B-j} e^{-mu^2 + (2l/a - a/b) mu} dmu.
fn sum_family_integral(n_b: usize, j: usize, c: f64) -> LogScaled {
    let p = (n_b - j) as f64;
    half_line_integral(
        |mu: f64| {
            if mu <= 0.0 {
                return LogScaled::ZERO;
            }
            LogScaled::from_exp(p * mu.ln() - mu * mu + c * mu)
        },
        "sum family",
    )
}

/// Closed-form Kummer representation of the same integral; numerically safe
/// only for bounded |l/a - a/2b| (catastrophic cancellation beyond).
pub fn sum_family_closed_form(n_b: usize, j: usize, x: f64) -> Result<LogScaled> {
    let nj = (n_b - j) as f64;
    let t1 = LogScaled::from_exp(log_gamma((nj + 1.0) / 2.0)? - 2f64.ln())
        * kummer_1f1((nj + 1.0) / 2.0, 0.5, x * x)?;
    let t2 = LogScaled::from_f64(x)
        * LogScaled::from_exp(log_gamma((nj + 2.0) / 2.0)?)
        * kummer_1f1((nj + 2.0) / 2.0, 1.5, x * x)?;
    Ok(t1 + t2)
}

/// Wigner + Wishart weighted sum H = aA + bB:
/// w(l) = e^{-l^2/a^2} on the full line; family by quadrature;
/// h_{j,k} = sqrt(pi) b^{n_B-j+k} a^{-(n_B-j)} Gamma(n_B-j+k) 2F2(...).
pub fn wigner_wishart_sum_system(n: usize, n_b: usize, a: f64, b: f64) -> Result<BiorthoSystem> {
    let weight: WeightFn = Arc::new(move |l: f64| LogScaled::from_exp(-l * l / (a * a)));
    let family: FamilyFn = Arc::new(move |j: usize, l: f64| {
        sum_family_integral(n_b, j, 2.0 * l / a - a / b)
    });
    let mut table = vec![vec![LogScaled::ZERO; n]; n];
    let z = a * a / (4.0 * b * b);
    for j in 1..=n {
        for k in 1..=n {
            let (jf, kf) = (j as f64, k as f64);
            let nbjk = n_b as f64 - jf + kf;
            let pref = LogScaled::from_exp(
                0.5 * std::f64::consts::PI.ln() + nbjk * b.ln() - (n_b as f64 - jf) * a.ln()
                    + log_gamma(nbjk)?,
            );
            let f22 = hyp_2f2(
                (1.0 - kf) / 2.0,
                (2.0 - kf) / 2.0,
                (1.0 - n_b as f64 + jf - kf) / 2.0,
                (2.0 - n_b as f64 + jf - kf) / 2.0,
                z,
            )?;
            table[j - 1][k - 1] = pref * f22;
        }
    }
    build_system(n, Domain::FullLine, weight, family, HStrategy::Table(table))
}

/// Wigner x Wishart product H = AB:
/// w(l) = l^{n_B-n} (signed) on the full line;
/// f_j(l) = int over the mu ray with the sign of l, orientation fixed so the
/// scalar case reproduces the product-density oracle;
/// h_{j,k} = ((1+(-1)^{j+k})/2) Gamma(n_B-n+k) Gamma((j+k-1)/2).
pub fn wigner_wishart_product_system(n: usize, n_b: usize) -> Result<BiorthoSystem> {
    let s = (n_b - n) as i64;
    let weight: WeightFn = Arc::new(move |l: f64| LogScaled::from_powi(l, s));
    let family: FamilyFn = Arc::new(move |j: usize, l: f64| {
        // p = -n_B + n + j - 2
        let p = j as i64 - s - 2;
        // lambda = 0 sits on the branch cut; the system is built with the
        // origin-singular flag and the marginal averages p(+-1e-6) there.
        let l = if l == 0.0 { 1e-300 } else { l };
        let pf = p as f64;
        let ray = half_line_integral(
            |mu: f64| {
                if mu <= 0.0 {
                    return LogScaled::ZERO;
                }
                LogScaled::from_exp(pf * mu.ln() - mu * mu - l.abs() / mu)
            },
            "product family",
        );
        if l > 0.0 {
            ray
        } else {
            // negative ray: mu = -t with (-t)^p and reversed orientation
            if (p + 1) % 2 == 0 {
                ray
            } else {
                -ray
            }
        }
    });
    let mut table = vec![vec![LogScaled::ZERO; n]; n];
    for j in 1..=n {
        for k in 1..=n {
            if (j + k) % 2 == 1 {
                continue; // checkerboard zero
            }
            table[j - 1][k - 1] = LogScaled::from_exp(
                log_gamma((s + k as i64) as f64)? + log_gamma((j + k - 1) as f64 / 2.0)?,
            );
        }
    }
    let mut sys = build_system(n, Domain::FullLine, weight, family, HStrategy::Table(table))?;
    sys.set_origin_singular(true);
    Ok(sys)
}

/// Two-Wishart weighted sum H = aA + bB with covariance spectrum sigma:
/// w(l) = l^m e^{-l/a} on (0, inf) with m = n_A + n_B - n,
/// f_j(l) = 1F1(n_B-n+1; m+1; (1/a - 1/(b sigma_j)) l),
/// h_{j,k} = a^{m+k} Gamma(m+k) 2F1(n_B-n+1, m+k; m+1; 1 - a/(b sigma_j)).
pub fn two_wishart_sum_system(
    n: usize,
    n_a: usize,
    n_b: usize,
    a: f64,
    b: f64,
    sigma: &[f64],
) -> Result<BiorthoSystem> {
    check_sigma_gap(sigma)?;
    let m = (n_a + n_b - n) as f64;
    let m_pow = (n_a + n_b - n) as i64;
    let weight: WeightFn = Arc::new(move |l: f64| {
        if l < 0.0 {
            return LogScaled::ZERO;
        }
        LogScaled::from_powi(l, m_pow) * LogScaled::from_exp(-l / a)
    });
    let sl = (n_b - n) as f64 + 1.0;
    let coeffs: Vec<f64> = sigma.iter().map(|&sj| 1.0 / a - 1.0 / (b * sj)).collect();
    let coeffs_f = coeffs.clone();
    let family: FamilyFn = Arc::new(move |j: usize, l: f64| {
        kummer_1f1(sl, m + 1.0, coeffs_f[j - 1] * l)
            .expect("two-Wishart family: 1F1 parameters are positive by construction")
    });
    let mut table = vec![vec![LogScaled::ZERO; n]; n];
    for j in 1..=n {
        let z = 1.0 - a / (b * sigma[j - 1]);
        debug_assert!(z < 1.0, "2F1 argument must stay below 1");
        for k in 1..=n {
            let kf = k as f64;
            let pref = LogScaled::from_exp((m + kf) * a.ln() + log_gamma(m + kf)?);
            table[j - 1][k - 1] = pref * gauss_2f1(sl, m + kf, m + 1.0, z)?;
        }
    }
    build_system(n, Domain::HalfLinePos, weight, family, HStrategy::Table(table))
}

/// Wishart marginal density p_W via the Laguerre bilinear form;
/// s = dof - n.
pub fn wishart_marginal(n: usize, s: usize, lambda: f64) -> Result<f64> {
    if n < 1 {
        return Err(Error::Domain("n must be >= 1".into()));
    }
    if lambda < 0.0 {
        return Err(Error::Domain(format!("Wishart density needs lambda >= 0, got {lambda}")));
    }
    let sf = s as f64;
    let pref = (log_gamma(n as f64)? - log_gamma(sf + n as f64)?).exp();
    let bilinear = laguerre(n - 1, sf, lambda) * laguerre(n, sf + 1.0, lambda)
        - laguerre(n, sf, lambda) * laguerre(n - 1, sf + 1.0, lambda);
    let pw = if lambda == 0.0 && s == 0 {
        pref * bilinear
    } else {
        pref * lambda.powi(s as i32) * (-lambda).exp() * bilinear
    };
    Ok(pw)
}

/// Gaussian Wigner marginal density p_GW via the Hermite bilinear form.
pub fn gaussian_wigner_marginal(n: usize, lambda: f64) -> f64 {
    assert!(n >= 1);
    let log_pref = -(n as f64) * 2f64.ln()
        - 0.5 * std::f64::consts::PI.ln()
        - log_gamma(n as f64 + 1.0).expect("n >= 1");
    let bilinear = hermite(n, lambda) * hermite(n, lambda)
        - hermite(n - 1, lambda) * hermite(n + 1, lambda);
    (log_pref - lambda * lambda).exp() * bilinear
}

/// Correlated-Wishart marginal density p_CW via the bordered determinant
/// with rows e^{-l/sigma_j} and Gamma(k+s) sigma_j^{k+s}; s = n_B - n.
pub fn correlated_wishart_marginal(n: usize, n_b: usize, sigma: &[f64], lambda: f64) -> Result<f64> {
    if sigma.len() != n {
        return Err(Error::Domain(format!("expected {n} sigma entries, got {}", sigma.len())));
    }
    if n_b < n {
        return Err(Error::Domain(format!("n_B={n_b} must be >= n={n}")));
    }
    if lambda < 0.0 {
        return Err(Error::Domain(format!("correlated Wishart needs lambda >= 0, got {lambda}")));
    }
    check_sigma_gap(sigma)?;
    let s = (n_b - n) as f64;

    let mut m = vec![vec![LogScaled::ZERO; n + 1]; n + 1];
    for k in 1..=n {
        m[0][k] = LogScaled::from_powi(lambda, k as i64 - 1);
    }
    for (j, &sj) in sigma.iter().enumerate() {
        m[j + 1][0] = LogScaled::from_exp(-lambda / sj);
        for k in 1..=n {
            m[j + 1][k] = LogScaled::from_exp(log_gamma(k as f64 + s)? + (k as f64 + s) * sj.ln());
        }
    }
    let det = stable_log_det(&m);

    let mut vandermonde = LogScaled::ONE;
    for j in 1..n {
        for k in 0..j {
            vandermonde = vandermonde * LogScaled::from_f64(sigma[j] - sigma[k]);
        }
    }
    let mut denom_log = (n as f64).ln();
    for (j, &sj) in sigma.iter().enumerate() {
        denom_log += (s + 1.0) * sj.ln() + log_gamma((j + 1) as f64 + s)?;
    }
    let pref = -LogScaled::from_powi(lambda, (n_b - n) as i64)
        / (vandermonde * LogScaled::from_exp(denom_log));
    Ok((pref * det).to_f64())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn spec_validation() {
        assert!(EnsembleSpec::Quotient { n: 3, n_a: 2, n_b: 5, a: 1.0, b: 1.0 }
            .validate()
            .is_err());
        assert!(EnsembleSpec::Quotient { n: 3, n_a: 5, n_b: 5, a: 1.0, b: 0.0 }
            .validate()
            .is_err());
        assert!(EnsembleSpec::Quotient { n: 3, n_a: 5, n_b: 5, a: 1.0, b: 0.5 }
            .validate()
            .is_ok());
        assert!(EnsembleSpec::TwoWishartSum {
            n: 2,
            n_a: 3,
            n_b: 3,
            a: 1.0,
            b: 1.0,
            sigma: vec![1.0, 1.0]
        }
        .validate()
        .is_err());
    }

    #[test]
    fn coincident_sigma_rejected() {
        let err = two_wishart_sum_system(2, 3, 3, 1.0, 1.0, &[2.0, 2.0 + 1e-12]);
        assert!(matches!(err, Err(Error::DegenerateSigma { .. })));
    }

    #[test]
    fn quotient_scalar_closed_form() {
        // n = n_A = n_B = 1, a = b = 1: p(l) = e^{-l} [1/(1+l) + 1/(1+l)^2]
        let sys = quotient_system(1, 1, 1, 1.0, 1.0).unwrap();
        for l in [0.0f64, 0.3, 1.0, 2.7, 6.0] {
            let exact = (-l).exp() * (1.0 / (1.0 + l) + 1.0 / (1.0 + l).powi(2));
            let p = sys.marginal_density(l).unwrap();
            assert!(rel(p, exact) < 1e-7, "l={l}: {p} vs {exact}");
        }
        assert!(rel(sys.marginal_density(0.0).unwrap(), 2.0) < 1e-7);
    }

    #[test]
    fn two_wishart_scalar_convolution() {
        // n = 1, a = b = 1, sigma = (2): p = e^{-l/2} - e^{-l}
        let sys = two_wishart_sum_system(1, 1, 1, 1.0, 1.0, &[2.0]).unwrap();
        for l in [0.1, 0.5, 1.0, 3.0, 8.0] {
            let exact = (-l / 2.0f64).exp() - (-l as f64).exp();
            let p = sys.marginal_density(l).unwrap();
            assert!(rel(p, exact) < 1e-8, "l={l}: {p} vs {exact}");
        }
    }

    #[test]
    fn sum_family_quadrature_matches_closed_form() {
        for &(n_b, j) in &[(4usize, 1usize), (4, 3), (7, 2)] {
            for &x in &[-1.5, -0.5, 0.0, 1.2, 4.5] {
                // c = 2x where x = l/a - a/2b
                let quad = sum_family_integral(n_b, j, 2.0 * x);
                let closed = sum_family_closed_form(n_b, j, x).unwrap();
                // closed form loses digits to cancellation as |x| grows
                assert!(
                    rel(quad.to_f64(), closed.to_f64()) < 1e-6,
                    "n_b={n_b} j={j} x={x}: quad={} closed={}",
                    quad.to_f64(),
                    closed.to_f64()
                );
            }
        }
    }

    #[test]
    fn product_marginal_symmetric() {
        let sys = wigner_wishart_product_system(2, 3).unwrap();
        for i in 0..100 {
            let l = 0.05 + 4.0 * i as f64 / 99.0;
            let p = sys.marginal_density(l).unwrap();
            let q = sys.marginal_density(-l).unwrap();
            assert!((p - q).abs() <= 1e-9, "l={l}: {p} vs {q}");
        }
    }

    #[test]
    fn product_log_singularity_signature() {
        let sys = wigner_wishart_product_system(2, 2).unwrap();
        let mut last = 0.0;
        for k in 1..=4 {
            let p = sys.marginal_density(10f64.powi(-k)).unwrap();
            assert!(p > last, "p(1e-{k}) = {p} not increasing");
            last = p;
        }
    }

    #[test]
    fn wishart_marginal_values() {
        assert!(rel(wishart_marginal(1, 0, 1.0).unwrap(), (-1.0f64).exp()) < 1e-12);
        // normalization
        let total = integrate(
            |l: f64| LogScaled::from_f64(wishart_marginal(4, 2, l).unwrap()),
            &QuadratureSpec::half_line().with_tolerance(1e-10),
        )
        .unwrap()
        .to_f64();
        assert!(rel(total, 1.0) < 1e-8, "integral = {total}");
        assert!(wishart_marginal(2, 1, -0.5).is_err());
    }

    #[test]
    fn gaussian_wigner_marginal_values() {
        let p = gaussian_wigner_marginal(1, 0.0);
        assert!(rel(p, 1.0 / std::f64::consts::PI.sqrt()) < 1e-12);
        for l in [0.3, 1.1, 2.6] {
            assert!(rel(gaussian_wigner_marginal(6, l), gaussian_wigner_marginal(6, -l)) < 1e-12);
        }
        let total = integrate(
            |l: f64| LogScaled::from_f64(gaussian_wigner_marginal(6, l)),
            &QuadratureSpec::full_line().with_tolerance(1e-10),
        )
        .unwrap()
        .to_f64();
        assert!(rel(total, 1.0) < 1e-8);
    }

    #[test]
    fn correlated_wishart_marginal_values() {
        // 1x1 reduction: e^{-l/sigma}/sigma
        let p = correlated_wishart_marginal(1, 1, &[2.0], 0.0).unwrap();
        assert!(rel(p, 0.5) < 1e-12);
        let sigma = [4.0, 20.0 / 3.0, 2.5, 11.0 / 9.0, 4.0 / 3.0, 7.0 / 8.0];
        let total = integrate(
            |l: f64| LogScaled::from_f64(correlated_wishart_marginal(6, 9, &sigma, l).unwrap()),
            &QuadratureSpec::half_line().with_tolerance(1e-7),
        )
        .unwrap()
        .to_f64();
        assert!(rel(total, 1.0) < 1e-6, "integral = {total}");
        for i in 0..200 {
            let l = 60.0 * i as f64 / 199.0;
            assert!(correlated_wishart_marginal(6, 9, &sigma, l).unwrap() >= -1e-12);
        }
        assert!(correlated_wishart_marginal(2, 2, &[1.0, 1.0], 1.0).is_err());
    }

    #[test]
    fn sigma_permutation_invariance() {
        let s1 = two_wishart_sum_system(3, 4, 5, 0.5, 1.0, &[0.5, 1.0, 2.0]).unwrap();
        let s2 = two_wishart_sum_system(3, 4, 5, 0.5, 1.0, &[2.0, 0.5, 1.0]).unwrap();
        for l in [0.5, 2.0, 5.0, 9.0] {
            let a = s1.marginal_density(l).unwrap();
            let b = s2.marginal_density(l).unwrap();
            assert!(rel(a, b) < 1e-10, "l={l}: {a} vs {b}");
        }
    }

    #[test]
    fn sum_and_product_normalize() {
        let sum = wigner_wishart_sum_system(2, 3, 1.0, 1.0).unwrap();
        let total = integrate(
            |l: f64| LogScaled::from_f64(sum.marginal_density(l).unwrap()),
            &QuadratureSpec::full_line().with_tolerance(1e-8),
        )
        .unwrap()
        .to_f64();
        assert!(rel(total, 1.0) < 1e-6, "sum integral = {total}");

        let prod = wigner_wishart_product_system(3, 4).unwrap();
        let total = integrate(
            |l: f64| LogScaled::from_f64(prod.marginal_density(l).unwrap()),
            &QuadratureSpec::full_line().with_tolerance(1e-8),
        )
        .unwrap()
        .to_f64();
        assert!(rel(total, 1.0) < 1e-6, "product integral = {total}");
    }

    #[test]
    fn quotient_normalizes() {
        // Fig 1a parameters
        let sys = quotient_system(3, 20, 21, 2.0, 0.2).unwrap();
        let total = integrate(
            |l: f64| LogScaled::from_f64(sys.marginal_density(l).unwrap()),
            &QuadratureSpec::half_line().with_tolerance(1e-8),
        )
        .unwrap()
        .to_f64();
        assert!(rel(total, 1.0) < 1e-6, "integral = {total}");
    }
}
