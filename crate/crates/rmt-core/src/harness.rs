//! Evaluation and validation harness: analytic curves on grids, Monte
//! Carlo histograms, and the comparison metrics between the two.
//!
//! The Monte Carlo driver runs one RNG stream per trial, so the parallel
//! and sequential paths produce bit-identical histograms.

use crate::biortho::BiorthoSystem;
use crate::ensembles::EnsembleSpec;
use crate::error::{Error, Result};
use crate::sampler::{realize_eigenvalues, realize_reference_eigenvalues, ReferenceModel, RngStream};
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Marginal density sampled on a grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DensityCurve {
    pub lambda: Vec<f64>,
    pub p: Vec<f64>,
}

/// Two-point correlation sampled on a rectangular grid;
/// `r2[i][j]` corresponds to `(lambda1[i], lambda2[j])`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CorrelationSurface {
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
    pub r2: Vec<Vec<f64>>,
}

/// Equal-width eigenvalue histogram. Counts landing outside the range are
/// tallied separately so coverage can be checked.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
    pub out_of_range: u64,
    pub total_values: u64,
}

impl Histogram {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if !(hi > lo) || bins == 0 {
            return Err(Error::InvalidSpec(format!(
                "histogram needs hi > lo and bins > 0, got [{lo}, {hi}] with {bins} bins"
            )));
        }
        Ok(Histogram {
            lo,
            hi,
            counts: vec![0; bins],
            out_of_range: 0,
            total_values: 0,
        })
    }

    pub fn record(&mut self, x: f64) {
        self.total_values += 1;
        let width = (self.hi - self.lo) / self.counts.len() as f64;
        if x < self.lo || x >= self.hi {
            self.out_of_range += 1;
            return;
        }
        let idx = (((x - self.lo) / width) as usize).min(self.counts.len() - 1);
        self.counts[idx] += 1;
    }

    /// Commutative merge of two partial histograms over the same range.
    pub fn merge(&mut self, other: &Histogram) {
        assert_eq!(self.lo, other.lo);
        assert_eq!(self.hi, other.hi);
        assert_eq!(self.counts.len(), other.counts.len());
        for (c, o) in self.counts.iter_mut().zip(&other.counts) {
            *c += o;
        }
        self.out_of_range += other.out_of_range;
        self.total_values += other.total_values;
    }

    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.counts.len() as f64
    }

    /// Normalized density estimate per bin (integrates to the in-range
    /// fraction of mass).
    pub fn density(&self) -> Vec<f64> {
        let norm = self.total_values as f64 * self.bin_width();
        self.counts.iter().map(|&c| c as f64 / norm).collect()
    }
}

/// Evaluate the marginal density on an explicit grid, in parallel when the
/// `parallel` feature is on.
pub fn analytic_curve(sys: &BiorthoSystem, grid: &[f64]) -> Result<DensityCurve> {
    #[cfg(feature = "parallel")]
    let p: Result<Vec<f64>> = grid.par_iter().map(|&l| sys.marginal_density(l)).collect();
    #[cfg(not(feature = "parallel"))]
    let p: Result<Vec<f64>> = grid.iter().map(|&l| sys.marginal_density(l)).collect();
    Ok(DensityCurve {
        lambda: grid.to_vec(),
        p: p?,
    })
}

/// Choose a plotting window automatically: scan a wide coarse grid, keep
/// the region where the density is at least `1e-6` of its peak, and return
/// `points` equally spaced values across it.
pub fn auto_grid(sys: &BiorthoSystem, points: usize) -> Result<Vec<f64>> {
    let support = sys.support();
    // Rescan with a doubled range while the density at a scan edge is still
    // above threshold, so wide spectra are not clipped.
    let mut scale = 1.0f64;
    let (mut lo, mut hi);
    loop {
        let coarse: Vec<f64> = match support {
            crate::quad::Domain::HalfLinePos => {
                // geometric sweep plus linear fill
                let mut g: Vec<f64> = (0..60).map(|i| scale * 1e-3 * 1.25f64.powi(i)).collect();
                g.insert(0, 0.0);
                g
            }
            _ => (-60..=60).map(|i| i as f64 * 0.5 * scale).collect(),
        };
        let curve = analytic_curve(sys, &coarse)?;
        let peak = curve.p.iter().cloned().fold(0.0f64, f64::max);
        if !(peak > 0.0) {
            return Err(Error::Domain("density vanished on the coarse scan".into()));
        }
        let kept: Vec<f64> = curve
            .lambda
            .iter()
            .zip(&curve.p)
            .filter(|(_, &p)| p >= 1e-6 * peak)
            .map(|(&l, _)| l)
            .collect();
        lo = kept[0];
        hi = *kept.last().unwrap();
        let hi_clipped = hi >= *coarse.last().unwrap();
        let lo_clipped = match support {
            crate::quad::Domain::HalfLinePos => false,
            _ => lo <= coarse[0],
        };
        if (hi_clipped || lo_clipped) && scale < 64.0 {
            scale *= 2.0;
            continue;
        }
        break;
    }
    // pad by one coarse step so the tails are visibly closed off
    let pad = (hi - lo) * 0.05;
    lo = match support {
        crate::quad::Domain::HalfLinePos => (lo - pad).max(0.0),
        _ => lo - pad,
    };
    hi += pad;
    Ok((0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect())
}

/// Two-point correlation on the product grid `lambda1 x lambda2`.
pub fn correlation_surface(
    sys: &BiorthoSystem,
    lambda1: &[f64],
    lambda2: &[f64],
) -> Result<CorrelationSurface> {
    let pairs: Vec<(usize, usize)> = (0..lambda1.len())
        .flat_map(|i| (0..lambda2.len()).map(move |j| (i, j)))
        .collect();
    let eval = |&(i, j): &(usize, usize)| sys.correlation_r(&[lambda1[i], lambda2[j]]);
    #[cfg(feature = "parallel")]
    let flat: Result<Vec<f64>> = pairs.par_iter().map(eval).collect();
    #[cfg(not(feature = "parallel"))]
    let flat: Result<Vec<f64>> = pairs.iter().map(eval).collect();
    let flat = flat?;
    let r2 = flat
        .chunks(lambda2.len())
        .map(|row| row.to_vec())
        .collect();
    Ok(CorrelationSurface {
        lambda1: lambda1.to_vec(),
        lambda2: lambda2.to_vec(),
        r2,
    })
}

/// What to draw eigenvalues from in a Monte Carlo run.
pub enum SampleSource<'a> {
    Composite(&'a EnsembleSpec),
    Reference(&'a ReferenceModel),
}

impl SampleSource<'_> {
    fn draw(&self, stream: RngStream) -> Result<Vec<f64>> {
        match self {
            SampleSource::Composite(spec) => realize_eigenvalues(spec, stream),
            SampleSource::Reference(model) => realize_reference_eigenvalues(model, stream),
        }
    }
}

fn mc_template(lo: f64, hi: f64, bins: usize) -> Result<Histogram> {
    Histogram::new(lo, hi, bins)
}

/// Accumulate eigenvalues from `trials` independent realizations into a
/// histogram, processing trials in parallel.
#[cfg(feature = "parallel")]
pub fn run_monte_carlo(
    source: &SampleSource,
    seed: u64,
    trials: u64,
    lo: f64,
    hi: f64,
    bins: usize,
) -> Result<Histogram> {
    let template = mc_template(lo, hi, bins)?;
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let vals = source.draw(RngStream { seed, stream_index: t })?;
            let mut h = template.clone();
            for v in vals {
                h.record(v);
            }
            Ok(h)
        })
        .try_reduce(
            || template.clone(),
            |mut acc, h| {
                acc.merge(&h);
                Ok(acc)
            },
        )
}

#[cfg(not(feature = "parallel"))]
pub fn run_monte_carlo(
    source: &SampleSource,
    seed: u64,
    trials: u64,
    lo: f64,
    hi: f64,
    bins: usize,
) -> Result<Histogram> {
    run_monte_carlo_seq(source, seed, trials, lo, hi, bins)
}

/// Sequential reference implementation of the same accumulation.
pub fn run_monte_carlo_seq(
    source: &SampleSource,
    seed: u64,
    trials: u64,
    lo: f64,
    hi: f64,
    bins: usize,
) -> Result<Histogram> {
    let mut h = mc_template(lo, hi, bins)?;
    for t in 0..trials {
        for v in source.draw(RngStream { seed, stream_index: t })? {
            h.record(v);
        }
    }
    Ok(h)
}

/// Result of comparing a histogram against an analytic density.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Comparison {
    pub l1: f64,
    pub sup: f64,
    pub per_bin: Vec<f64>,
    /// Fraction of recorded values that fell outside the histogram range.
    pub escaped: f64,
}

/// Compare a histogram against `density`, evaluated by averaging the
/// analytic curve over each bin with adaptive quadrature (the average must
/// stay accurate across integrable singularities such as the product
/// ensemble's logarithmic peak at the origin). Errors with
/// `CoverageMismatch` if more than 1% of the mass escaped the histogram
/// range.
pub fn compare<F>(hist: &Histogram, density: F) -> Result<Comparison>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let escaped = hist.out_of_range as f64 / hist.total_values.max(1) as f64;
    if escaped > 0.01 {
        return Err(Error::CoverageMismatch);
    }
    let est = hist.density();
    let w = hist.bin_width();
    let bin_avg = |i: usize| -> Result<(f64, f64)> {
        let a = hist.lo + i as f64 * w;
        let spec = crate::quad::QuadratureSpec::bounded(a, a + w).with_tolerance(1e-7);
        let failed = std::sync::Mutex::new(None);
        // Lenient: some reference densities carry a determinant noise floor
        // just above the target tolerance; the aggregate mass-weighted error
        // is judged after the loop instead.
        let (mass, achieved) = crate::quad::integrate_lenient(
            |x| match density(x) {
                Ok(p) => crate::logscale::LogScaled::from_f64(p),
                Err(e) => {
                    *failed.lock().unwrap() = Some(e);
                    crate::logscale::LogScaled::ZERO
                }
            },
            &spec,
        )?;
        if let Some(e) = failed.into_inner().unwrap() {
            return Err(e);
        }
        Ok((mass.to_f64() / w, achieved))
    };
    let mut per_bin = Vec::with_capacity(est.len());
    let mut l1 = 0.0;
    let mut sup = 0.0f64;
    let mut mass_tot = 0.0;
    let mut err_tot = 0.0;
    for (i, &e) in est.iter().enumerate() {
        let (avg, achieved) = bin_avg(i)?;
        mass_tot += avg.abs() * w;
        err_tot += achieved * avg.abs() * w;
        let diff = e - avg;
        per_bin.push(diff);
        l1 += diff.abs() * w;
        sup = sup.max(diff.abs());
    }
    // Noise on negligible tail bins must not fail the comparison, but the
    // reference curve as a whole has to be far more accurate than the
    // Monte Carlo noise it is judged against.
    if err_tot > 1e-3 * mass_tot.max(1e-300) {
        return Err(Error::NonConvergence {
            subdivisions: 0,
            achieved: err_tot / mass_tot.max(1e-300),
            requested: 1e-3,
        });
    }
    Ok(Comparison {
        l1,
        sup,
        per_bin,
        escaped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;

    #[test]
    fn histogram_basics() {
        let mut h = Histogram::new(0.0, 1.0, 4).unwrap();
        for x in [0.1, 0.3, 0.6, 0.9, 1.5, -0.2] {
            h.record(x);
        }
        assert_eq!(h.counts, vec![1, 1, 1, 1]);
        assert_eq!(h.out_of_range, 2);
        assert_eq!(h.total_values, 6);
        assert!(Histogram::new(1.0, 0.0, 4).is_err());
    }

    #[test]
    fn merge_is_commutative() {
        let mut a = Histogram::new(0.0, 1.0, 2).unwrap();
        let mut b = Histogram::new(0.0, 1.0, 2).unwrap();
        a.record(0.2);
        b.record(0.7);
        let mut ab = a.clone();
        ab.merge(&b);
        let mut ba = b.clone();
        ba.merge(&a);
        assert_eq!(ab, ba);
    }

    #[test]
    fn mc_parallel_matches_sequential() {
        let spec = EnsembleSpec::WignerWishartSum { n: 2, n_b: 3, a: 1.0, b: 0.5 };
        let src = SampleSource::Composite(&spec);
        let par = run_monte_carlo(&src, 5, 300, -4.0, 12.0, 32).unwrap();
        let seq = run_monte_carlo_seq(&src, 5, 300, -4.0, 12.0, 32).unwrap();
        assert_eq!(par, seq);
    }

    #[test]
    fn mc_is_deterministic_across_runs() {
        let spec = EnsembleSpec::WignerWishartProduct { n: 2, n_b: 2 };
        let src = SampleSource::Composite(&spec);
        let a = run_monte_carlo(&src, 99, 500, -10.0, 10.0, 40).unwrap();
        let b = run_monte_carlo(&src, 99, 500, -10.0, 10.0, 40).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn compare_against_known_distribution() {
        // inverse-CDF self-consistency: exponential draws vs e^{-x}
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(123);
        let mut h = Histogram::new(0.0, 12.0, 60).unwrap();
        for _ in 0..1_000_000 {
            let u: f64 = rng.gen();
            h.record(-(1.0 - u).ln());
        }
        let cmp = compare(&h, |x| Ok((-x).exp())).unwrap();
        assert!(cmp.l1 < 0.005, "l1 = {}", cmp.l1);
        assert!(cmp.escaped < 1e-4);
    }

    #[test]
    fn coverage_mismatch_detected() {
        let mut h = Histogram::new(0.0, 0.1, 4).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let u: f64 = rng.gen();
            h.record(-(1.0 - u).ln());
        }
        assert!(matches!(compare(&h, |x| Ok((-x).exp())), Err(Error::CoverageMismatch)));
    }

    #[test]
    fn auto_grid_brackets_the_mass() {
        let sys = crate::ensembles::quotient_system(3, 20, 21, 2.0, 0.2).unwrap();
        let grid = auto_grid(&sys, 120).unwrap();
        assert_eq!(grid.len(), 120);
        assert!(grid[0] >= 0.0);
        assert!(grid.windows(2).all(|p| p[1] > p[0]));
        let curve = analytic_curve(&sys, &grid).unwrap();
        // trapezoid over the window should catch nearly all the mass
        let mut total = 0.0;
        for i in 1..grid.len() {
            total += 0.5 * (curve.p[i] + curve.p[i - 1]) * (grid[i] - grid[i - 1]);
        }
        assert!((total - 1.0).abs() < 1e-3, "window mass = {total}");
    }

    #[test]
    fn correlation_surface_shape() {
        let sys = crate::ensembles::quotient_system(2, 3, 3, 1.0, 1.0).unwrap();
        let surf = correlation_surface(&sys, &[0.5, 1.0, 2.0], &[0.4, 1.5]).unwrap();
        assert_eq!(surf.r2.len(), 3);
        assert_eq!(surf.r2[0].len(), 2);
        for row in &surf.r2 {
            for &v in row {
                assert!(v >= -1e-12);
            }
        }
        // symmetry of the 2-point function
        let a = sys.correlation_r(&[0.5, 1.5]).unwrap();
        let b = sys.correlation_r(&[1.5, 0.5]).unwrap();
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }
}
