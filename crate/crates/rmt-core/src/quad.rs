//! Max-factored adaptive quadrature.
//!
//! Integrands are supplied in the log domain (`f64 -> LogScaled`). The engine
//! locates the exponent maximum of the transformed integrand, factors it out
//! so floating point only ever sees O(1) values, and then runs adaptive
//! Gauss-Kronrod (7-15) subdivision on the unit interval. Semi-infinite
//! domains are mapped by `t = s*u/(1-u)` with the scale `s` chosen from a
//! logarithmic scan, so sharply peaked exponential integrands land near the
//! middle of the unit interval.

use crate::error::{Error, Result};
use crate::logscale::LogScaled;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Integration domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Domain {
    HalfLinePos,
    HalfLineNeg,
    FullLine,
    Bounded(f64, f64),
}

impl Domain {
    /// Closure of the domain (evaluation is permitted on the boundary).
    pub fn contains(&self, x: f64) -> bool {
        match self {
            Domain::HalfLinePos => x >= 0.0,
            Domain::HalfLineNeg => x <= 0.0,
            Domain::FullLine => x.is_finite(),
            Domain::Bounded(lo, hi) => x >= *lo && x <= *hi,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct QuadratureSpec {
    pub domain: Domain,
    pub relative_tolerance: f64,
    pub max_subdivisions: usize,
}

impl QuadratureSpec {
    pub fn new(domain: Domain, relative_tolerance: f64, max_subdivisions: usize) -> Result<Self> {
        if !(relative_tolerance > 0.0 && relative_tolerance < 1.0) {
            return Err(Error::Domain(format!(
                "relative_tolerance must lie in (0,1), got {relative_tolerance}"
            )));
        }
        if max_subdivisions < 1 {
            return Err(Error::Domain("max_subdivisions must be >= 1".into()));
        }
        Ok(QuadratureSpec {
            domain,
            relative_tolerance,
            max_subdivisions,
        })
    }

    pub fn half_line() -> Self {
        QuadratureSpec {
            domain: Domain::HalfLinePos,
            relative_tolerance: 1e-11,
            max_subdivisions: 4000,
        }
    }

    pub fn full_line() -> Self {
        QuadratureSpec {
            domain: Domain::FullLine,
            relative_tolerance: 1e-11,
            max_subdivisions: 4000,
        }
    }

    pub fn bounded(lo: f64, hi: f64) -> Self {
        QuadratureSpec {
            domain: Domain::Bounded(lo, hi),
            relative_tolerance: 1e-11,
            max_subdivisions: 4000,
        }
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.relative_tolerance = tol;
        self
    }
}

// Gauss-Kronrod 7-15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Integrate a log-domain integrand over the spec's domain.
pub fn integrate<F>(f: F, spec: &QuadratureSpec) -> Result<LogScaled>
where
    F: Fn(f64) -> LogScaled,
{
    let (value, achieved) = integrate_parts(&f, spec)?;
    if achieved > spec.relative_tolerance {
        return Err(Error::NonConvergence {
            subdivisions: spec.max_subdivisions,
            achieved,
            requested: spec.relative_tolerance,
        });
    }
    Ok(value)
}

/// Like `integrate`, but a blown tolerance is not an error: returns the
/// best estimate together with its achieved relative error so the caller
/// can judge. Used where the integrand itself carries numerical noise
/// (e.g. cross-checking moment tables whose integrand is an inner
/// quadrature).
pub fn integrate_lenient<F>(f: F, spec: &QuadratureSpec) -> Result<(LogScaled, f64)>
where
    F: Fn(f64) -> LogScaled,
{
    integrate_parts(&f, spec)
}

fn integrate_parts<F>(f: &F, spec: &QuadratureSpec) -> Result<(LogScaled, f64)>
where
    F: Fn(f64) -> LogScaled,
{
    match spec.domain {
        Domain::HalfLinePos => integrate_half(f, spec),
        Domain::HalfLineNeg => integrate_half(&|t: f64| f(-t), spec),
        Domain::FullLine => {
            let (pos, ep) = integrate_half(f, spec)?;
            let (neg, en) = integrate_half(&|t: f64| f(-t), spec)?;
            Ok((pos + neg, ep.max(en)))
        }
        Domain::Bounded(lo, hi) => integrate_bounded(f, lo, hi, spec),
    }
}

/// Integral over (0, inf) via t = s*u/(1-u).
fn integrate_half<F>(f: &F, spec: &QuadratureSpec) -> Result<(LogScaled, f64)>
where
    F: Fn(f64) -> LogScaled,
{
    integrate_half_inner(f, spec, true)
}

fn integrate_half_inner<F>(
    f: &F,
    spec: &QuadratureSpec,
    allow_carve: bool,
) -> Result<(LogScaled, f64)>
where
    F: Fn(f64) -> LogScaled,
{
    // Logarithmic scan for the dominant scale: maximize log|f(t)| + ln t,
    // the log-measure mass density. When the winner sits on a scan boundary
    // the mass may live beyond the scanned decades (e.g. a peak pushed out
    // by a large linear exponent), so the scan extends itself outward.
    let mut best_t = 1.0;
    let mut best = f64::NEG_INFINITY;
    let mut any = false;
    let scan = |lo_dec: f64, hi_dec: f64, best: &mut f64, best_t: &mut f64, any: &mut bool| {
        let steps = ((hi_dec - lo_dec) / 0.05).round().max(1.0) as usize;
        for i in 0..=steps {
            let t = 10f64.powf(lo_dec + (hi_dec - lo_dec) * i as f64 / steps as f64);
            let v = f(t);
            if !v.is_zero() {
                *any = true;
                let m = v.log_abs() + t.ln();
                if m > *best {
                    *best = m;
                    *best_t = t;
                }
            }
        }
    };
    let (mut lo_dec, mut hi_dec) = (-8.0f64, 8.0f64);
    scan(lo_dec, hi_dec, &mut best, &mut best_t, &mut any);
    for _ in 0..6 {
        if any && best_t >= 10f64.powf(hi_dec) * 0.999 {
            let from = hi_dec;
            hi_dec += 8.0;
            scan(from + 0.05, hi_dec, &mut best, &mut best_t, &mut any);
        } else if any && best_t <= 10f64.powf(lo_dec) * 1.001 {
            let to = lo_dec;
            lo_dec -= 8.0;
            scan(lo_dec, to - 0.05, &mut best, &mut best_t, &mut any);
        } else {
            break;
        }
    }
    if !any {
        return Ok((LogScaled::ZERO, 0.0));
    }
    // A peak much narrower than its distance from the origin shrinks, under
    // the unit-interval map, below the node spacing of the panels: the error
    // estimate cannot flag what no node samples, and the result silently
    // loses part or all of the peak. Carve such a peak out and integrate it
    // in natural coordinates, where it is wide; the flanks keep their edge
    // layers at interval ends, which adaptive subdivision does resolve.
    if allow_carve {
        if let Some((t_star, width)) = narrow_spike(f, best_t) {
            let lo = (t_star - 12.0 * width).max(0.0);
            let hi = t_star + 12.0 * width;
            let (core, e_core) = integrate_bounded(f, lo, hi, spec)?;
            let (head, e_head) = if lo > 0.0 {
                integrate_bounded(f, 0.0, lo, spec)?
            } else {
                (LogScaled::ZERO, 0.0)
            };
            let shifted = |w: f64| f(w + hi);
            let tail_f: &dyn Fn(f64) -> LogScaled = &shifted;
            let (tail, e_tail) = integrate_half_inner(&tail_f, spec, false)?;
            let total = core + head + tail;
            if total.is_zero() {
                return Ok((total, e_core.max(e_head).max(e_tail)));
            }
            let err = core.abs() * LogScaled::from_f64(e_core)
                + head.abs() * LogScaled::from_f64(e_head)
                + tail.abs() * LogScaled::from_f64(e_tail);
            let achieved = if err.is_zero() {
                0.0
            } else {
                (err.log_abs() - total.log_abs()).exp()
            };
            return Ok((total, achieved));
        }
    }
    let s = best_t;
    // g(u) = f(s*u/(1-u)) * s/(1-u)^2, u in (0,1)
    let g = |u: f64| -> LogScaled {
        let om = 1.0 - u;
        let t = s * u / om;
        let v = f(t);
        LogScaled::new(v.sign(), v.log_abs() + s.ln() - 2.0 * om.ln())
    };
    adaptive_unit(&g, spec)
}

/// Refine the mass maximum found by the log scan and measure the distance
/// over which the log-integrand drops by one unit. Returns the peak location
/// and that halfwidth when the peak is narrower than a couple percent of its
/// own location (the regime the unit-interval map cannot resolve).
fn narrow_spike<F>(f: &F, seed: f64) -> Option<(f64, f64)>
where
    F: Fn(f64) -> LogScaled,
{
    let m = |t: f64| -> f64 {
        let v = f(t);
        if v.is_zero() {
            f64::NEG_INFINITY
        } else {
            v.log_abs() + t.ln()
        }
    };
    // Cheap pre-check: a peak this narrow falls off steeply within one
    // percent of its location; a broad integrand does not, and skips the
    // refinement below.
    let seed_m = m(seed);
    if seed_m.is_finite()
        && m(seed * 1.01) > seed_m - 2.0
        && m(seed * 0.99) > seed_m - 2.0
    {
        return None;
    }
    // Golden-section refinement in ln t around the scan winner (scan spacing
    // is 0.115 in ln t, so +-0.13 brackets the true maximum).
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (seed.ln() - 0.13, seed.ln() + 0.13);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (m(c.exp()), m(d.exp()));
    for _ in 0..48 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = m(c.exp());
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = m(d.exp());
        }
    }
    let t_star = (0.5 * (a + b)).exp();
    let peak = m(t_star);
    if !peak.is_finite() {
        return None;
    }
    let drop_dist = |dir: f64| -> f64 {
        let mut h = t_star * 1e-13;
        while h < t_star {
            let t = t_star + dir * h;
            if t <= 0.0 {
                break;
            }
            if m(t) < peak - 1.0 {
                // bracket [h/2, h]; bisect so the width is not overestimated
                // (an inflated width re-creates the unresolvable narrow spike
                // inside the carved core)
                let (mut lo, mut hi) = (0.5 * h, h);
                for _ in 0..50 {
                    let mid = 0.5 * (lo + hi);
                    if m(t_star + dir * mid) < peak - 1.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                return hi;
            }
            h *= 2.0;
        }
        t_star
    };
    let w = drop_dist(1.0).max(drop_dist(-1.0));
    if w < 0.02 * t_star {
        Some((t_star, w))
    } else {
        None
    }
}

fn integrate_bounded<F>(f: &F, lo: f64, hi: f64, spec: &QuadratureSpec) -> Result<(LogScaled, f64)>
where
    F: Fn(f64) -> LogScaled,
{
    if !(hi > lo) {
        if hi == lo {
            return Ok((LogScaled::ZERO, 0.0));
        }
        return Err(Error::Domain(format!("bad bounded domain [{lo}, {hi}]")));
    }
    let w = hi - lo;
    let g = |u: f64| -> LogScaled {
        let v = f(lo + w * u);
        LogScaled::new(v.sign(), v.log_abs() + w.ln())
    };
    adaptive_unit(&g, spec)
}

struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Adaptive GK15 on (0,1) with exponent factoring and restart when a higher
/// maximum than the scan estimate is encountered.
fn adaptive_unit<G>(g: &G, spec: &QuadratureSpec) -> Result<(LogScaled, f64)>
where
    G: Fn(f64) -> LogScaled,
{
    // Midpoint scan for the exponent maximum.
    const SCAN: usize = 257;
    let mut max_log = f64::NEG_INFINITY;
    for i in 0..SCAN {
        let u = (i as f64 + 0.5) / SCAN as f64;
        let l = g(u).log_abs();
        if l > max_log {
            max_log = l;
        }
    }
    if max_log == f64::NEG_INFINITY {
        return Ok((LogScaled::ZERO, 0.0));
    }

    for _restart in 0..6 {
        let mut new_max = max_log;
        let phi = |u: f64| -> f64 {
            let v = g(u);
            if v.is_zero() {
                return 0.0;
            }
            let d = v.log_abs() - max_log;
            if d > 100.0 {
                // signalled via new_max outside; clamp here
                return v.sign() as f64 * f64::MAX;
            }
            v.sign() as f64 * d.exp()
        };

        // Seed with 8 panels so a scan-missed spike still gets found by the
        // error estimates.
        let mut heap: BinaryHeap<Panel> = BinaryHeap::new();
        let mut total = 0.0;
        let mut total_err = 0.0;
        let mut total_abs = 0.0;
        let mut overflowed = false;
        let eval_panel = |lo: f64, hi: f64, new_max: &mut f64, overflowed: &mut bool| -> Panel {
            let c = 0.5 * (hi + lo);
            let h = 0.5 * (hi - lo);
            let mut k = 0.0; // kronrod
            let mut gq = 0.0; // gauss
            let mut absint = 0.0;
            for (i, &x) in XGK.iter().enumerate() {
                let (u1, u2) = (c - h * x, c + h * x);
                let (f1, f2) = if i == 7 {
                    let v = phi(u1);
                    (v, 0.0)
                } else {
                    (phi(u1), phi(u2))
                };
                for (u, fv) in [(u1, f1), (u2, f2)] {
                    if fv.abs() >= f64::MAX {
                        *overflowed = true;
                        let l = g(u).log_abs();
                        if l > *new_max {
                            *new_max = l;
                        }
                    }
                }
                let fsum = if i == 7 { f1 } else { f1 + f2 };
                k += WGK[i] * fsum;
                absint += WGK[i] * (f1.abs() + if i == 7 { 0.0 } else { f2.abs() });
                if i % 2 == 1 {
                    gq += WG[i / 2] * fsum;
                }
            }
            let value = k * h;
            let err = ((k - gq) * h).abs();
            // QUADPACK-style sharpening of the raw |K - G| estimate.
            let scaled = if absint * h > 0.0 {
                let r = (200.0 * err / (absint * h)).powf(1.5);
                if r < 1.0 {
                    absint * h * r
                } else {
                    err
                }
            } else {
                err
            };
            Panel {
                lo,
                hi,
                value,
                error: scaled.max(err * 1e-4),
            }
        };

        for i in 0..8 {
            let p = eval_panel(i as f64 / 8.0, (i + 1) as f64 / 8.0, &mut new_max, &mut overflowed);
            total += p.value;
            total_err += p.error;
            total_abs += p.value.abs();
            heap.push(p);
        }

        let mut subdivisions = 8usize;
        while !overflowed
            && total_err > spec.relative_tolerance * total.abs().max(1e-300)
            && subdivisions < spec.max_subdivisions
        {
            let worst = heap.pop().expect("heap cannot be empty");
            total -= worst.value;
            total_err -= worst.error;
            total_abs -= worst.value.abs();
            let mid = 0.5 * (worst.lo + worst.hi);
            for (lo, hi) in [(worst.lo, mid), (mid, worst.hi)] {
                let p = eval_panel(lo, hi, &mut new_max, &mut overflowed);
                total += p.value;
                total_err += p.error;
                total_abs += p.value.abs();
                heap.push(p);
            }
            subdivisions += 1;
        }

        if overflowed {
            max_log = new_max;
            continue;
        }

        let achieved = total_err / total.abs().max(1e-300);
        if achieved > spec.relative_tolerance {
            // Genuinely-zero integrals (odd integrands) cancel between panels;
            // accept when the residual is tiny relative to the L1 mass.
            if total.abs() <= 1e-12 * total_abs && total_err <= 1e-10 * total_abs.max(1e-300) {
                return Ok((LogScaled::ZERO, 0.0));
            }
        }
        let _ = subdivisions;
        if total == 0.0 {
            return Ok((LogScaled::ZERO, achieved.min(1.0)));
        }
        return Ok((
            LogScaled::new(
                if total > 0.0 { 1 } else { -1 },
                total.abs().ln() + max_log,
            ),
            achieved,
        ));
    }
    Err(Error::NonConvergence {
        subdivisions: 0,
        achieved: f64::INFINITY,
        requested: spec.relative_tolerance,
    })
}
