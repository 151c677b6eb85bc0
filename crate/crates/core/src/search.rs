//! One-dimensional minimisation of convex (unimodal) objectives.

use crate::error::{GeomError, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Expands an interval geometrically from `start` until it brackets a minimum
/// of the unimodal function `f`.
pub fn bracket_minimum<F: Fn(f64) -> f64>(f: &F, start: f64, step: f64) -> Result<(f64, f64)> {
    let mut h = step.abs().max(f64::EPSILON);
    let f0 = f(start);
    let fp = f(start + h);
    let fm = f(start - h);
    if fp >= f0 && fm >= f0 {
        return Ok((start - h, start + h));
    }
    if fm < fp {
        h = -h;
    }
    let (mut a, mut b) = (start, start + h);
    let mut fb = f(b);
    for _ in 0..200 {
        h *= 2.0;
        let c = b + h;
        let fc = f(c);
        if !fc.is_finite() {
            return Err(GeomError::Bracketing);
        }
        if fc >= fb {
            return Ok(if a < c { (a, c) } else { (c, a) });
        }
        a = b;
        b = c;
        fb = fc;
    }
    Err(GeomError::Bracketing)
}

/// Golden-section search for the minimiser of a unimodal `f` on `[lo, hi]`,
/// stopping once the bracket is narrower than `tol`.
pub fn golden_section<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Bracket then golden-section. Returns `(argmin, min)`.
pub fn minimize_unimodal<F: Fn(f64) -> f64>(f: &F, start: f64, step: f64, tol: f64) -> Result<(f64, f64)> {
    let (lo, hi) = bracket_minimum(f, start, step)?;
    let x = golden_section(f, lo, hi, tol);
    Ok((x, f(x)))
}

/// True when the samples decrease (weakly) and then increase (weakly), up to
/// `tol` of noise. A flat bottom counts as a single minimum.
pub fn is_unimodal(samples: &[f64], tol: f64) -> bool {
    let Some(min_idx) = samples
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
    else {
        return true;
    };
    let descending = samples[..=min_idx].windows(2).all(|w| w[1] <= w[0] + tol);
    let ascending = samples[min_idx..].windows(2).all(|w| w[1] + tol >= w[0]);
    descending && ascending
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_section_finds_parabola_vertex() {
        let f = |x: f64| (x - 1.25).powi(2) + 3.0;
        let (x, v) = minimize_unimodal(&f, -40.0, 0.5, 1e-10).unwrap();
        assert!((x - 1.25).abs() < 1e-7);
        assert!((v - 3.0).abs() < 1e-12);
    }

    #[test]
    fn bracketing_fails_on_monotone_function() {
        let f = |x: f64| -x;
        assert_eq!(bracket_minimum(&f, 0.0, 1.0), Err(GeomError::Bracketing));
    }

    #[test]
    fn unimodality_detection() {
        assert!(is_unimodal(&[3.0, 2.0, 1.0, 1.0, 2.0], 0.0));
        assert!(!is_unimodal(&[3.0, 1.0, 2.0, 0.5, 2.0], 0.0));
        assert!(is_unimodal(&[], 0.0));
    }
}
