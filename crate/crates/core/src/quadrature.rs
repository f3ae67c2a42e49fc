//! Adaptive Simpson quadrature.

use crate::error::{GeometryError, Result};
use crate::scalar::{lit, Scalar};

const MAX_DEPTH: u32 = 48;

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
///
/// Works for `b < a` (returns the negated integral). Fails when the
/// recursion depth is exhausted or the integrand produces non-finite values.
pub fn adaptive_simpson<T: Scalar>(f: impl Fn(T) -> T, a: T, b: T, tol: T) -> Result<T> {
    if a == b {
        return Ok(T::zero());
    }
    let fa = f(a);
    let fb = f(b);
    let m = (a + b) * lit(0.5);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    let out = recurse(&f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH);
    match out {
        Some(v) if v.is_finite() => Ok(v),
        _ => Err(GeometryError::QuadratureFailed {
            lo: a.to_f64().unwrap_or(f64::NAN),
            hi: b.to_f64().unwrap_or(f64::NAN),
        }),
    }
}

fn simpson<T: Scalar>(a: T, b: T, fa: T, fm: T, fb: T) -> T {
    (b - a) / lit(6.0) * (fa + lit::<T>(4.0) * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse<T: Scalar>(
    f: &impl Fn(T) -> T,
    a: T,
    b: T,
    fa: T,
    fm: T,
    fb: T,
    whole: T,
    tol: T,
    depth: u32,
) -> Option<T> {
    let m = (a + b) * lit(0.5);
    let lm = (a + m) * lit(0.5);
    let rm = (m + b) * lit(0.5);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if !delta.is_finite() {
        return None;
    }
    if delta.abs() <= lit::<T>(15.0) * tol {
        return Some(left + right + delta / lit(15.0));
    }
    if depth == 0 {
        return None;
    }
    let half = tol * lit(0.5);
    let l = recurse(f, a, m, fa, flm, fm, left, half, depth - 1)?;
    let r = recurse(f, m, b, fm, frm, fb, right, half, depth - 1)?;
    Some(l + r)
}
