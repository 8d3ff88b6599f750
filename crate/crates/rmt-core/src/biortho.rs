//! Generic engine for Borodin-type biorthogonal ensembles.
//!
//! A system is the bundle (w, {f_j}, h, C, support): joint density
//! `C * Vandermonde * prod w(l_i) * det[f_j(l_k)]`, normalization
//! `C^{-1} = n! det h` with `h_{j,k} = int w f_j l^{k-1}`, and the r-point
//! correlation function as a single (n+r)-dimensional bordered determinant.

use crate::error::{Error, Result};
use crate::linalg::stable_log_det;
use crate::logscale::LogScaled;
use crate::quad::{integrate, integrate_lenient, Domain, QuadratureSpec};
use crate::specfun::log_gamma;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

pub type WeightFn = Arc<dyn Fn(f64) -> LogScaled + Send + Sync>;
/// family(j, lambda) with j in 1..=n.
pub type FamilyFn = Arc<dyn Fn(usize, f64) -> LogScaled + Send + Sync>;

/// Largest bordered determinant dimension evaluated at native precision.
pub const MAX_BORDERED_DIM: usize = 24;

/// How to obtain the moment matrix at construction.
pub enum HStrategy {
    /// Closed-form table; a randomized subset of entries is verified against
    /// quadrature before acceptance.
    Table(Vec<Vec<LogScaled>>),
    /// Compute every entry by quadrature of `w f_j l^{k-1}`.
    Quadrature,
}

pub struct BiorthoSystem {
    n: usize,
    support: Domain,
    weight: WeightFn,
    family: FamilyFn,
    moment_matrix: Vec<Vec<LogScaled>>,
    log_norm: LogScaled,
    /// Marginal at exactly 0 is reported as the average of p(+-1e-6)
    /// (product ensemble with its origin singularity).
    origin_singular: bool,
}

fn h_quadrature(
    support: Domain,
    weight: &WeightFn,
    family: &FamilyFn,
    j: usize,
    k: usize,
    tol: f64,
) -> Result<LogScaled> {
    let spec = QuadratureSpec::new(support, tol, 6000)?;
    integrate(
        |l: f64| weight(l) * family(j, l) * LogScaled::from_powi(l, k as i64 - 1),
        &spec,
    )
}

impl BiorthoSystem {
    /// Number of eigenvalues.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn support(&self) -> Domain {
        self.support
    }

    pub fn moment_matrix(&self) -> &[Vec<LogScaled>] {
        &self.moment_matrix
    }

    pub fn log_norm(&self) -> LogScaled {
        self.log_norm
    }

    pub fn weight(&self, lambda: f64) -> LogScaled {
        (self.weight)(lambda)
    }

    pub fn family(&self, j: usize, lambda: f64) -> LogScaled {
        (self.family)(j, lambda)
    }

    pub fn set_origin_singular(&mut self, v: bool) {
        self.origin_singular = v;
    }

    /// Recompute a moment-matrix entry by quadrature (verification path).
    pub fn h_by_quadrature(&self, j: usize, k: usize, tol: f64) -> Result<LogScaled> {
        h_quadrature(self.support, &self.weight, &self.family, j, k, tol)
    }

    /// Joint eigenvalue density at one configuration.
    pub fn joint_density(&self, lambdas: &[f64]) -> Result<LogScaled> {
        if lambdas.len() != self.n {
            return Err(Error::Domain(format!(
                "expected {} eigenvalues, got {}",
                self.n,
                lambdas.len()
            )));
        }
        for &l in lambdas {
            if !self.support.contains(l) {
                return Err(Error::OutOfSupport(l));
            }
        }
        let mut vandermonde = LogScaled::ONE;
        for j in 1..self.n {
            for k in 0..j {
                vandermonde = vandermonde * LogScaled::from_f64(lambdas[j] - lambdas[k]);
            }
        }
        if vandermonde.is_zero() {
            return Ok(LogScaled::ZERO);
        }
        let weights: LogScaled = lambdas.iter().map(|&l| (self.weight)(l)).product();
        let fmat: Vec<Vec<LogScaled>> = (1..=self.n)
            .map(|j| lambdas.iter().map(|&l| (self.family)(j, l)).collect())
            .collect();
        Ok(self.log_norm * vandermonde * weights * stable_log_det(&fmat))
    }

    /// r-point correlation function R_r via the (n+r)-dimensional bordered
    /// determinant.
    pub fn correlation_r(&self, points: &[f64]) -> Result<f64> {
        let r = points.len();
        let n = self.n;
        if r < 1 || r > n {
            return Err(Error::OrderOutOfRange { r, n });
        }
        if n + r > MAX_BORDERED_DIM {
            return Err(Error::SizeLimit(n + r));
        }
        for &l in points {
            if !self.support.contains(l) {
                return Err(Error::OutOfSupport(l));
            }
        }
        let dim = n + r;
        let mut m = vec![vec![LogScaled::ZERO; dim]; dim];
        for (j, &l) in points.iter().enumerate() {
            for k in 0..n {
                m[j][r + k] = LogScaled::from_powi(l, k as i64);
            }
        }
        for j in 0..n {
            for (k, &l) in points.iter().enumerate() {
                m[r + j][k] = (self.family)(j + 1, l);
            }
            for k in 0..n {
                m[r + j][r + k] = self.moment_matrix[j][k];
            }
        }
        let det = stable_log_det(&m);
        let weights: LogScaled = points.iter().map(|&l| (self.weight)(l)).product();
        let sign_r = if r % 2 == 0 { LogScaled::ONE } else { -LogScaled::ONE };
        let n_fact = LogScaled::from_exp(log_gamma(n as f64 + 1.0).expect("n >= 1"));
        Ok((sign_r * n_fact * self.log_norm * weights * det).to_f64())
    }

    /// First-order marginal density p(lambda) = R_1(lambda) / n.
    pub fn marginal_density(&self, lambda: f64) -> Result<f64> {
        if self.origin_singular && lambda == 0.0 {
            let eps = 1e-6;
            return Ok(0.5 * (self.marginal_density(eps)? + self.marginal_density(-eps)?));
        }
        Ok(self.correlation_r(&[lambda])? / self.n as f64)
    }
}

/// Construct a system, populating the moment matrix and normalization.
pub fn build_system(
    n: usize,
    support: Domain,
    weight: WeightFn,
    family: FamilyFn,
    h_strategy: HStrategy,
) -> Result<BiorthoSystem> {
    if n < 1 {
        return Err(Error::Domain("n must be >= 1".into()));
    }
    if n + 1 > MAX_BORDERED_DIM {
        return Err(Error::SizeLimit(n + 1));
    }

    let moment_matrix = match h_strategy {
        HStrategy::Quadrature => {
            let mut m = vec![vec![LogScaled::ZERO; n]; n];
            for j in 0..n {
                for k in 0..n {
                    m[j][k] = h_quadrature(support, &weight, &family, j + 1, k + 1, 1e-9)?;
                }
            }
            m
        }
        HStrategy::Table(table) => {
            if table.len() != n || table.iter().any(|row| row.len() != n) {
                return Err(Error::Domain("moment matrix table has wrong shape".into()));
            }
            spot_check_table(&table, n, support, &weight, &family)?;
            table
        }
    };

    if moment_matrix.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite moment matrix entry".into()));
    }

    let det = stable_log_det(&moment_matrix);
    if det.sign() == 0 {
        return Err(Error::SingularMomentMatrix);
    }
    let log_norm =
        (LogScaled::from_exp(log_gamma(n as f64 + 1.0).expect("n >= 1")) * det).recip();

    Ok(BiorthoSystem {
        n,
        support,
        weight,
        family,
        moment_matrix,
        log_norm,
        origin_singular: false,
    })
}

/// Verify a randomized subset of closed-form entries against quadrature.
fn spot_check_table(
    table: &[Vec<LogScaled>],
    n: usize,
    support: Domain,
    weight: &WeightFn,
    family: &FamilyFn,
) -> Result<()> {
    let typical = table
        .iter()
        .flatten()
        .map(|v| v.log_abs())
        .filter(|l| l.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    let mut rng = ChaCha8Rng::seed_from_u64(0x68_73_70_6f_74); // fixed: build is deterministic
    let picks = 3.max(n.min(3));
    let mut seen = std::collections::HashSet::new();
    let mut checked = 0;
    while checked < picks && seen.len() < n * n {
        let j = rng.gen_range(0..n);
        let k = rng.gen_range(0..n);
        if !seen.insert((j, k)) {
            continue;
        }
        let closed = table[j][k];
        // extreme parameters can leave the reference quadrature with a noise
        // floor (its integrand is itself computed numerically); take its best
        // estimate and scale the comparison to the error it actually achieved
        let spec = QuadratureSpec::new(support, 1e-9, 6000)?;
        let (quad, achieved) = integrate_lenient(
            |l: f64| weight(l) * family(j + 1, l) * LogScaled::from_powi(l, k as i64),
            &spec,
        )?;
        if achieved > 1e-2 {
            continue; // no trustworthy reference at this entry
        }
        let check_tol = (50.0 * achieved).max(1e-6);
        let both_negligible = closed.log_abs() < typical - 25.0 && quad.log_abs() < typical - 25.0;
        if !both_negligible {
            let denom = closed.abs().log_abs().max(quad.abs().log_abs());
            let diff = closed - quad;
            let rel_ok = diff.is_zero() || diff.log_abs() - denom < check_tol.ln();
            if !rel_ok {
                return Err(Error::MomentMatrixMismatch {
                    j: j + 1,
                    k: k + 1,
                    closed: closed.to_f64(),
                    quadrature: quad.to_f64(),
                });
            }
        }
        checked += 1;
    }
    Ok(())
}

/// Verify the full moment matrix against quadrature (slow path, behind the
/// CLI's `info --verify-h`).
pub fn verify_table_full(sys: &BiorthoSystem, rel_tol: f64) -> Result<()> {
    let typical = sys
        .moment_matrix
        .iter()
        .flatten()
        .map(|v| v.log_abs())
        .filter(|l| l.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    for j in 0..sys.n {
        for k in 0..sys.n {
            let closed = sys.moment_matrix[j][k];
            let quad = sys.h_by_quadrature(j + 1, k + 1, 1e-9)?;
            if closed.log_abs() < typical - 25.0 && quad.log_abs() < typical - 25.0 {
                continue;
            }
            let denom = closed.abs().log_abs().max(quad.abs().log_abs());
            let diff = closed - quad;
            if !(diff.is_zero() || diff.log_abs() - denom < rel_tol.ln()) {
                return Err(Error::MomentMatrixMismatch {
                    j: j + 1,
                    k: k + 1,
                    closed: closed.to_f64(),
                    quadrature: quad.to_f64(),
                });
            }
        }
    }
    Ok(())
}
