//! Adaptive Dormand–Prince 5(4) integration with dense output.
//!
//! Dense output re-takes a single fifth-order step from the nearest accepted
//! node, so interpolated states carry the same local accuracy as the steps.

use crate::error::{GeometryError, Result};
use crate::scalar::{lit, Scalar};

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Right-hand side `y' = f(s, y)`.
pub type Rhs<'a, T> = dyn Fn(T, &[T]) -> Vec<T> + Send + Sync + 'a;

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions<T> {
    pub atol: T,
    pub rtol: T,
    pub h_init: T,
    pub h_min: T,
    pub max_steps: usize,
}

impl<T: Scalar> Default for OdeOptions<T> {
    fn default() -> Self {
        Self {
            atol: lit(1e-10),
            rtol: lit(1e-10),
            h_init: lit(1e-3),
            h_min: lit(1e-14),
            max_steps: 200_000,
        }
    }
}

/// Accepted nodes of an integration run.
#[derive(Clone, Debug)]
pub struct Trajectory<T> {
    pub s: Vec<T>,
    pub y: Vec<Vec<T>>,
}

fn step<T: Scalar>(f: &Rhs<'_, T>, s: T, y: &[T], h: T) -> (Vec<T>, Vec<T>) {
    let dim = y.len();
    let mut k: Vec<Vec<T>> = Vec::with_capacity(7);
    for stage in 0..7 {
        let mut ys = y.to_vec();
        for (j, kj) in k.iter().enumerate() {
            let a = lit::<T>(A[stage][j]);
            if a != T::zero() {
                for i in 0..dim {
                    ys[i] = ys[i] + h * a * kj[i];
                }
            }
        }
        k.push(f(s + lit::<T>(C[stage]) * h, &ys));
    }
    let mut y5 = y.to_vec();
    let mut err = vec![T::zero(); dim];
    for (stage, ks) in k.iter().enumerate() {
        let b5 = lit::<T>(B5[stage]);
        let db = lit::<T>(B5[stage] - B4[stage]);
        for i in 0..dim {
            y5[i] = y5[i] + h * b5 * ks[i];
            err[i] = err[i] + h * db * ks[i];
        }
    }
    (y5, err)
}

/// Integrates from `s0` to `s1` (either direction).
///
/// `admissible` is checked on every accepted state; the first violation ends
/// the run with [`GeometryError::OdeLeftDomain`].
pub fn integrate<T: Scalar>(
    f: &Rhs<'_, T>,
    s0: T,
    y0: &[T],
    s1: T,
    opts: &OdeOptions<T>,
    admissible: &dyn Fn(T, &[T]) -> bool,
) -> Result<Trajectory<T>> {
    let dir = if s1 >= s0 { T::one() } else { -T::one() };
    let mut traj = Trajectory { s: vec![s0], y: vec![y0.to_vec()] };
    if s0 == s1 {
        return Ok(traj);
    }
    let mut s = s0;
    let mut y = y0.to_vec();
    let mut h = opts.h_init.min((s1 - s0).abs());
    for _ in 0..opts.max_steps {
        if (s1 - s) * dir <= T::zero() {
            return Ok(traj);
        }
        h = h.min((s1 - s).abs());
        let (y5, err) = step(f, s, &y, h * dir);
        let mut e = T::zero();
        for i in 0..y.len() {
            let sc = opts.atol + opts.rtol * y[i].abs().max(y5[i].abs());
            e = e.max((err[i] / sc).abs());
        }
        if !e.is_finite() {
            h = h * lit(0.25);
        } else if e <= T::one() {
            s = if (s1 - (s + h * dir)) * dir <= lit::<T>(1e-14) * (T::one() + s1.abs()) {
                s1
            } else {
                s + h * dir
            };
            y = y5;
            if !admissible(s, &y) {
                return Err(GeometryError::OdeLeftDomain { s: s.to_f64().unwrap_or(f64::NAN) });
            }
            traj.s.push(s);
            traj.y.push(y.clone());
            let grow = if e == T::zero() { lit(5.0) } else { lit::<T>(0.9) * e.powf(lit(-0.2)) };
            h = h * grow.min(lit(5.0)).max(lit(0.2));
        } else {
            h = h * (lit::<T>(0.9) * e.powf(lit(-0.2))).max(lit(0.1));
        }
        if h < opts.h_min {
            return Err(GeometryError::StepSizeUnderflow { s: s.to_f64().unwrap_or(f64::NAN) });
        }
    }
    Err(GeometryError::StepSizeUnderflow { s: s.to_f64().unwrap_or(f64::NAN) })
}

impl<T: Scalar> Trajectory<T> {
    /// State at `s`, which must lie within the integrated span.
    pub fn eval(&self, f: &Rhs<'_, T>, s: T) -> Option<Vec<T>> {
        let (lo, hi) = self.span();
        if s < lo || s > hi {
            return None;
        }
        // nodes are monotone in the integration direction
        let forward = self.s.last() >= self.s.first();
        let idx = if forward {
            self.s.partition_point(|&x| x <= s).saturating_sub(1)
        } else {
            self.s.partition_point(|&x| x >= s).saturating_sub(1)
        };
        let s_i = self.s[idx];
        if s == s_i {
            return Some(self.y[idx].clone());
        }
        Some(step(f, s_i, &self.y[idx], s - s_i).0)
    }

    pub fn span(&self) -> (T, T) {
        let a = self.s[0];
        let b = *self.s.last().expect("trajectory has nodes");
        (a.min(b), a.max(b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator() {
        let f = |_s: f64, y: &[f64]| vec![y[1], -y[0]];
        let tr = integrate(&f, 0.0, &[0.0, 1.0], 3.0, &OdeOptions::default(), &|_, _| true).unwrap();
        let y = tr.y.last().unwrap();
        assert!((y[0] - 3f64.sin()).abs() < 1e-8);
        let mid = tr.eval(&f, 1.234).unwrap();
        assert!((mid[0] - 1.234f64.sin()).abs() < 1e-9);
        let back = integrate(&f, 0.0, &[0.0, 1.0], -2.0, &OdeOptions::default(), &|_, _| true).unwrap();
        let yb = back.eval(&f, -1.5).unwrap();
        assert!((yb[0] - (-1.5f64).sin()).abs() < 1e-9);
    }
}
