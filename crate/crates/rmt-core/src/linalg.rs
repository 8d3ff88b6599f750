//! Log-domain determinants.
//!
//! Moment matrices mix Gamma factors and power-law prefactors whose
//! magnitudes span hundreds of orders, so the determinant is taken after
//! row/column log-scale equilibration: each row and column is shifted to
//! zero mean log magnitude, elimination runs on the resulting O(1) matrix,
//! and the exact log-scale correction is reapplied at the end.

use crate::logscale::LogScaled;

/// Determinant of a square matrix of log-scaled values. Singular input
/// returns the zero value rather than an error.
pub fn stable_log_det(m: &[Vec<LogScaled>]) -> LogScaled {
    let n = m.len();
    if n == 0 {
        return LogScaled::ONE;
    }
    debug_assert!(m.iter().all(|row| row.len() == n));

    let mut logs: Vec<Vec<f64>> = m
        .iter()
        .map(|row| row.iter().map(|v| v.log_abs()).collect())
        .collect();
    let signs: Vec<Vec<i8>> = m
        .iter()
        .map(|row| row.iter().map(|v| v.sign()).collect())
        .collect();

    // Sinkhorn-style equilibration in the log domain; zero entries are
    // ignored when averaging. The accumulated shift is exact.
    let mut shift = 0.0f64;
    for pass in 0..200 {
        // Balancing converges geometrically; stop once every finite entry is
        // representable in f64 with orders to spare.
        if pass >= 4 {
            let spread = logs
                .iter()
                .flatten()
                .copied()
                .filter(|l| l.is_finite())
                .fold(0.0f64, |m, l| m.max(l.abs()));
            if spread <= 300.0 {
                break;
            }
        }
        for i in 0..n {
            let finite: Vec<f64> = logs[i].iter().copied().filter(|l| l.is_finite()).collect();
            if finite.is_empty() {
                return LogScaled::ZERO; // structurally singular row
            }
            let mean = finite.iter().sum::<f64>() / finite.len() as f64;
            for l in logs[i].iter_mut() {
                *l -= mean;
            }
            shift += mean;
        }
        for k in 0..n {
            let finite: Vec<f64> = (0..n).map(|i| logs[i][k]).filter(|l| l.is_finite()).collect();
            if finite.is_empty() {
                return LogScaled::ZERO;
            }
            let mean = finite.iter().sum::<f64>() / finite.len() as f64;
            for row in logs.iter_mut() {
                row[k] -= mean;
            }
            shift += mean;
        }
    }

    // Equilibration can leave a row unbalanced when its entries span more
    // orders than column scaling can absorb; pin each row's max to 1 so the
    // f64 conversion below never overflows (small entries may underflow,
    // which only drops contributions that are negligible at that row scale).
    for i in 0..n {
        let row_max = logs[i]
            .iter()
            .copied()
            .filter(|l| l.is_finite())
            .fold(f64::NEG_INFINITY, f64::max);
        if !row_max.is_finite() {
            return LogScaled::ZERO;
        }
        for l in logs[i].iter_mut() {
            *l -= row_max;
        }
        shift += row_max;
    }

    // Elimination on the equilibrated values with partial pivoting.
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|k| signs[i][k] as f64 * logs[i][k].exp())
                .collect()
        })
        .collect();

    let mut det_sign = 1i8;
    let mut log_det = 0.0f64;
    for col in 0..n {
        let (pivot_row, pivot_abs) = (col..n)
            .map(|r| (r, a[r][col].abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .expect("non-empty column");
        if pivot_abs == 0.0 {
            return LogScaled::ZERO;
        }
        if pivot_row != col {
            a.swap(pivot_row, col);
            det_sign = -det_sign;
        }
        let p = a[col][col];
        det_sign *= if p > 0.0 { 1 } else { -1 };
        log_det += p.abs().ln();
        for r in col + 1..n {
            let factor = a[r][col] / p;
            if factor == 0.0 {
                continue;
            }
            for k in col + 1..n {
                let delta = factor * a[col][k];
                a[r][k] -= delta;
            }
            a[r][col] = 0.0;
        }
    }

    LogScaled::new(det_sign, log_det + shift)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::rational::BigRational;
    use num::BigInt;

    fn from_rows(rows: &[&[f64]]) -> Vec<Vec<LogScaled>> {
        rows.iter()
            .map(|r| r.iter().map(|&x| LogScaled::from_f64(x)).collect())
            .collect()
    }

    #[test]
    fn identity_det() {
        let m = from_rows(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        let d = stable_log_det(&m);
        assert_eq!(d.sign(), 1);
        assert!(d.log_abs().abs() < 1e-14);
    }

    #[test]
    fn small_det() {
        let m = from_rows(&[&[1.0, 1.0], &[1.0, 2.0]]);
        let d = stable_log_det(&m);
        assert_eq!(d.sign(), 1);
        assert!(d.log_abs().abs() < 1e-12);
    }

    #[test]
    fn singular_det() {
        let m = from_rows(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert_eq!(stable_log_det(&m).sign(), 0);
    }

    #[test]
    fn sign_tracking() {
        let m = from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let d = stable_log_det(&m);
        assert_eq!(d.sign(), -1);
        assert!(d.log_abs().abs() < 1e-14);
    }

    #[test]
    fn hilbert_6x6_vs_exact_rational() {
        let n = 6;
        // exact determinant by fraction-free elimination
        let mut h: Vec<Vec<BigRational>> = (0..n)
            .map(|j| {
                (0..n)
                    .map(|k| BigRational::new(BigInt::from(1), BigInt::from((j + k + 1) as i64)))
                    .collect()
            })
            .collect();
        let mut exact = BigRational::new(BigInt::from(1), BigInt::from(1));
        for c in 0..n {
            exact *= h[c][c].clone();
            for r in c + 1..n {
                let f = h[r][c].clone() / h[c][c].clone();
                for k in c..n {
                    let d = f.clone() * h[c][k].clone();
                    h[r][k] -= d;
                }
            }
        }
        let exact_f64: f64 = {
            let num: f64 = exact.numer().to_string().parse().unwrap();
            let den: f64 = exact.denom().to_string().parse().unwrap();
            num / den
        };

        let m: Vec<Vec<LogScaled>> = (0..n)
            .map(|j| {
                (0..n)
                    .map(|k| LogScaled::from_f64(1.0 / (j + k + 1) as f64))
                    .collect()
            })
            .collect();
        let d = stable_log_det(&m).to_f64();
        assert!(
            (d - exact_f64).abs() <= 1e-8 * exact_f64.abs(),
            "{d} vs exact {exact_f64}"
        );
    }

    #[test]
    fn extreme_scale_spread() {
        // diag(1e-200, 1e200, 1) has det 1; plain f64 elimination would
        // underflow the product of pivots.
        let m = from_rows(&[
            &[1e-200, 0.0, 0.0],
            &[0.0, 1e200, 0.0],
            &[0.0, 0.0, 1.0],
        ]);
        let d = stable_log_det(&m);
        assert_eq!(d.sign(), 1);
        assert!(d.log_abs().abs() < 1e-10);
    }
}
