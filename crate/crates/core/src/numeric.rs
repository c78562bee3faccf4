//! Bracketing root finding and one-dimensional maximization.

use crate::error::Result;

/// Largest `x` in `[lo, hi]` with `f(x) ≤ target`, for `f` nondecreasing and
/// `f(lo) ≤ target < f(hi)`. Stops once the bracket is narrower than `tol`.
pub(crate) fn bisect_last_below<F>(mut f: F, target: f64, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    // 200 halvings exhaust f64 resolution on any finite bracket.
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid)? <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Golden-section search for a maximum of a unimodal `f` on `[a, b]`.
/// Returns `(x, f(x))` for the best point evaluated.
pub(crate) fn golden_section_max<F>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let mut best = if fc >= fd { (c, fc) } else { (d, fd) };
    for _ in 0..400 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
            if fc > best.1 {
                best = (c, fc);
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
            if fd > best.1 {
                best = (d, fd);
            }
        }
    }
    Ok(best)
}

/// `count` log-spaced points covering `[lo, hi]` inclusive.
pub(crate) fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count <= 1 {
        return vec![lo];
    }
    let (ll, lh) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == count - 1 {
                hi
            } else {
                (ll + (lh - ll) * i as f64 / (count - 1) as f64).exp()
            }
        })
        .collect()
}

/// `count` evenly spaced points covering `[lo, hi]` inclusive.
pub(crate) fn lin_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count <= 1 {
        return vec![lo];
    }
    (0..count)
        .map(|i| {
            if i == count - 1 {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (count - 1) as f64
            }
        })
        .collect()
}
