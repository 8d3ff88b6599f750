//! Monte Carlo realization of the composite matrix models.
//!
//! Conventions: the Gaussian Wigner matrix A is Hermitian with density
//! proportional to exp(-tr A^2), i.e. diagonal entries N(0, 1/2) and
//! off-diagonal real/imaginary parts N(0, 1/4). The Wishart matrix
//! B = Sigma^{1/2} G G^dagger Sigma^{1/2} uses an n x dof complex Ginibre
//! block G whose real and imaginary parts are N(0, 1/2) each.

use crate::ensembles::EnsembleSpec;
use crate::error::{Error, Result};
use nalgebra::{Cholesky, DMatrix};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type ComplexMatrix = DMatrix<Complex64>;

/// Deterministic per-trial RNG: one base seed, one independent stream per
/// trial, so results are identical regardless of scheduling.
#[derive(Clone, Copy, Debug)]
pub struct RngStream {
    pub seed: u64,
    pub stream_index: u64,
}

impl RngStream {
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_index);
        rng
    }
}

fn normal(rng: &mut ChaCha8Rng, sd: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    sd * z
}

/// Hermitian Gaussian matrix with density ~ exp(-tr A^2).
pub fn sample_gue(n: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let mut a = ComplexMatrix::zeros(n, n);
    let diag_sd = 0.5f64.sqrt();
    for i in 0..n {
        a[(i, i)] = Complex64::new(normal(rng, diag_sd), 0.0);
        for j in i + 1..n {
            let z = Complex64::new(normal(rng, 0.5), normal(rng, 0.5));
            a[(i, j)] = z;
            a[(j, i)] = z.conj();
        }
    }
    a
}

/// Wishart matrix Sigma^{1/2} G G^dagger Sigma^{1/2} with G an n x dof
/// complex Ginibre block; `sigma_sqrt` is None for Sigma = 1.
pub fn sample_wishart(
    n: usize,
    dof: usize,
    sigma_sqrt: Option<&ComplexMatrix>,
    rng: &mut ChaCha8Rng,
) -> ComplexMatrix {
    let sd = 0.5f64.sqrt();
    let g = ComplexMatrix::from_fn(n, dof, |_, _| {
        Complex64::new(normal(rng, sd), normal(rng, sd))
    });
    let w = &g * g.adjoint();
    match sigma_sqrt {
        Some(s) => s * w * s,
        None => w,
    }
}

/// Hermitian square root of a positive-definite matrix.
pub fn posdef_sqrt(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = nalgebra::SymmetricEigen::try_new(m.clone(), 1e-13, 0)
        .ok_or(Error::EigenFailure)?;
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        return Err(Error::NotPositiveDefinite(min));
    }
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| Complex64::new(l.sqrt(), 0.0)));
    Ok(&eig.eigenvectors * d * eig.eigenvectors.adjoint())
}

/// Eigenvalues of a Hermitian matrix, sorted ascending. The input is
/// checked for Hermiticity and symmetrized before decomposition.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>> {
    let n = m.nrows();
    let scale = m.iter().map(|z| z.norm()).fold(0.0f64, f64::max).max(1.0);
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    if dev > 1e-12 * scale {
        return Err(Error::NonHermitian(dev));
    }
    let sym = ComplexMatrix::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)].conj()));
    let eig = nalgebra::SymmetricEigen::try_new(sym, 1e-13, 0).ok_or(Error::EigenFailure)?;
    let mut vals: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

/// Draw one realization of the model and return its sorted eigenvalues.
///
/// Each composite is evaluated in a manifestly Hermitian congruence form:
/// the quotient as (1+bB)^{-1/2} (aA) (1+bB)^{-1/2} and the product as
/// B^{1/2} A B^{1/2}, both similar to the defining expressions.
pub fn realize_eigenvalues(spec: &EnsembleSpec, stream: RngStream) -> Result<Vec<f64>> {
    let mut rng = stream.rng();
    match spec {
        EnsembleSpec::Quotient { n, n_a, n_b, a, b } => {
            let wa = sample_wishart(*n, *n_a, None, &mut rng);
            let wb = sample_wishart(*n, *n_b, None, &mut rng);
            let denom = ComplexMatrix::identity(*n, *n)
                + wb.map(|z| Complex64::new(*b, 0.0) * z);
            let inv_sqrt = posdef_sqrt(&denom)?
                .try_inverse()
                .ok_or(Error::EigenFailure)?;
            let h = &inv_sqrt * wa.map(|z| Complex64::new(*a, 0.0) * z) * &inv_sqrt;
            hermitian_eigenvalues(&h)
        }
        EnsembleSpec::WignerWishartSum { n, n_b, a, b } => {
            let ga = sample_gue(*n, &mut rng);
            let wb = sample_wishart(*n, *n_b, None, &mut rng);
            let h = ga.map(|z| Complex64::new(*a, 0.0) * z)
                + wb.map(|z| Complex64::new(*b, 0.0) * z);
            hermitian_eigenvalues(&h)
        }
        EnsembleSpec::WignerWishartProduct { n, n_b } => {
            let ga = sample_gue(*n, &mut rng);
            let wb = sample_wishart(*n, *n_b, None, &mut rng);
            let sqrt_b = posdef_sqrt(&wb)?;
            let h = &sqrt_b * ga * &sqrt_b;
            hermitian_eigenvalues(&h)
        }
        EnsembleSpec::TwoWishartSum { n, n_a, n_b, a, b, sigma } => {
            let wa = sample_wishart(*n, *n_a, None, &mut rng);
            let sig_sqrt = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                *n,
                sigma.iter().map(|&s| Complex64::new(s.sqrt(), 0.0)),
            ));
            let wb = sample_wishart(*n, *n_b, Some(&sig_sqrt), &mut rng);
            let h = wa.map(|z| Complex64::new(*a, 0.0) * z)
                + wb.map(|z| Complex64::new(*b, 0.0) * z);
            hermitian_eigenvalues(&h)
        }
    }
}

/// Eigenvalues of a plain constituent matrix, for reference overlays.
pub enum ReferenceModel {
    GaussianWigner { n: usize },
    Wishart { n: usize, dof: usize },
    CorrelatedWishart { n: usize, dof: usize, sigma: Vec<f64> },
}

pub fn realize_reference_eigenvalues(model: &ReferenceModel, stream: RngStream) -> Result<Vec<f64>> {
    let mut rng = stream.rng();
    match model {
        ReferenceModel::GaussianWigner { n } => hermitian_eigenvalues(&sample_gue(*n, &mut rng)),
        ReferenceModel::Wishart { n, dof } => {
            hermitian_eigenvalues(&sample_wishart(*n, *dof, None, &mut rng))
        }
        ReferenceModel::CorrelatedWishart { n, dof, sigma } => {
            let sig_sqrt = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                *n,
                sigma.iter().map(|&s| Complex64::new(s.sqrt(), 0.0)),
            ));
            hermitian_eigenvalues(&sample_wishart(*n, *dof, Some(&sig_sqrt), &mut rng))
        }
    }
}

/// Cholesky-based validity check used by tests; a positive-definite input
/// must round-trip through its square root.
pub fn is_posdef(m: &ComplexMatrix) -> bool {
    Cholesky::new(m.clone()).is_some()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean<I: Iterator<Item = f64>>(it: I) -> f64 {
        let v: Vec<f64> = it.collect();
        v.iter().sum::<f64>() / v.len() as f64
    }

    #[test]
    fn gue_entry_variances() {
        let mut rng = RngStream { seed: 7, stream_index: 0 }.rng();
        let trials = 20_000;
        let mut diag = Vec::new();
        let mut off_re = Vec::new();
        let mut off_im = Vec::new();
        for _ in 0..trials {
            let a = sample_gue(2, &mut rng);
            diag.push(a[(0, 0)].re * a[(0, 0)].re);
            off_re.push(a[(0, 1)].re * a[(0, 1)].re);
            off_im.push(a[(0, 1)].im * a[(0, 1)].im);
        }
        assert!((mean(diag.into_iter()) - 0.5).abs() < 0.02);
        assert!((mean(off_re.into_iter()) - 0.25).abs() < 0.01);
        assert!((mean(off_im.into_iter()) - 0.25).abs() < 0.01);
    }

    #[test]
    fn gue_trace_square_expectation() {
        // E[tr A^2] = n^2 / 2 under exp(-tr A^2)
        let n = 4;
        let mut rng = RngStream { seed: 11, stream_index: 0 }.rng();
        let m = mean((0..20_000).map(|_| {
            let a = sample_gue(n, &mut rng);
            (&a * &a).diagonal().iter().map(|z| z.re).sum::<f64>()
        }));
        assert!((m - (n * n) as f64 / 2.0).abs() < 0.1, "E[tr A^2] = {m}");
    }

    #[test]
    fn wishart_diagonal_gamma_means() {
        // each diagonal entry of G G^dagger is Gamma(dof, 1): mean dof
        let (n, dof) = (3, 7);
        let mut rng = RngStream { seed: 13, stream_index: 0 }.rng();
        let m = mean((0..20_000).map(|_| {
            let w = sample_wishart(n, dof, None, &mut rng);
            w[(1, 1)].re
        }));
        assert!((m - dof as f64).abs() < 0.1, "mean diag = {m}");
    }

    #[test]
    fn sqrt_reconstruction() {
        let mut rng = RngStream { seed: 17, stream_index: 0 }.rng();
        let w = sample_wishart(4, 6, None, &mut rng);
        assert!(is_posdef(&w));
        let s = posdef_sqrt(&w).unwrap();
        let err = (&s * &s - &w).iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        assert!(err < 1e-10 * w.iter().map(|z| z.norm()).fold(0.0f64, f64::max));
    }

    #[test]
    fn eigen_sorted_and_hermiticity_checked() {
        let mut rng = RngStream { seed: 19, stream_index: 0 }.rng();
        let w = sample_wishart(5, 8, None, &mut rng);
        let vals = hermitian_eigenvalues(&w).unwrap();
        assert!(vals.windows(2).all(|p| p[0] <= p[1]));
        assert!(vals.iter().all(|&l| l > 0.0));

        let mut bad = w.clone();
        bad[(0, 1)] += Complex64::new(0.1, 0.0);
        assert!(matches!(hermitian_eigenvalues(&bad), Err(Error::NonHermitian(_))));
    }

    #[test]
    fn trial_streams_are_reproducible() {
        let spec = EnsembleSpec::Quotient { n: 3, n_a: 5, n_b: 6, a: 1.0, b: 0.5 };
        let s = RngStream { seed: 42, stream_index: 9 };
        let a = realize_eigenvalues(&spec, s).unwrap();
        let b = realize_eigenvalues(&spec, s).unwrap();
        assert_eq!(a, b);
        let c = realize_eigenvalues(&spec, RngStream { seed: 42, stream_index: 10 }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn quotient_trace_mean() {
        // E[tr aA(1+bB)^{-1}] with b -> 0 reduces to a * E[tr A] = a n n_A
        let spec = EnsembleSpec::Quotient { n: 2, n_a: 4, n_b: 4, a: 1.5, b: 1e-9 };
        let m = mean((0..4_000).map(|t| {
            realize_eigenvalues(&spec, RngStream { seed: 23, stream_index: t })
                .unwrap()
                .iter()
                .sum::<f64>()
        }));
        let expect = 1.5 * (2 * 4) as f64;
        assert!((m - expect).abs() < 0.3, "mean trace = {m}, expect {expect}");
    }

    #[test]
    fn two_wishart_trace_mean() {
        // E[tr(aA + bB)] = a n n_A + b n_B sum(sigma)
        let spec = EnsembleSpec::TwoWishartSum {
            n: 2,
            n_a: 3,
            n_b: 4,
            a: 1.0,
            b: 0.5,
            sigma: vec![1.0, 2.0],
        };
        let m = mean((0..4_000).map(|t| {
            realize_eigenvalues(&spec, RngStream { seed: 29, stream_index: t })
                .unwrap()
                .iter()
                .sum::<f64>()
        }));
        let expect = 1.0 * (2 * 3) as f64 + 0.5 * 4.0 * 3.0;
        assert!((m - expect).abs() < 0.3, "mean trace = {m}, expect {expect}");
    }

    #[test]
    fn product_trace_is_centered() {
        let spec = EnsembleSpec::WignerWishartProduct { n: 3, n_b: 4 };
        let m = mean((0..4_000).map(|t| {
            realize_eigenvalues(&spec, RngStream { seed: 31, stream_index: t })
                .unwrap()
                .iter()
                .sum::<f64>()
        }));
        assert!(m.abs() < 0.3, "mean trace = {m}");
    }
}
