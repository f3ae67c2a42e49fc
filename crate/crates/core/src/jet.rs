//! Truncated Taylor series in one variable.
//!
//! A [`Jet`] stores the Taylor coefficients `c_k = f^(k)(x0) / k!` for
//! `k = 0..=ORDER`. Arithmetic follows the usual recurrences so that radial
//! profiles written once against `Jet` yield their derivatives exactly.
//!
//! Coefficients that are no longer determined (after [`Jet::derivative`]) are
//! set to NaN so that accidental use of them shows up in results.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::scalar::{count, lit, Scalar};

/// Highest derivative order carried by a jet.
pub const ORDER: usize = 4;
const LEN: usize = ORDER + 1;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet<T> {
    pub c: [T; LEN],
}

impl<T: Scalar> Jet<T> {
    pub fn constant(x: T) -> Self {
        let mut c = [T::zero(); LEN];
        c[0] = x;
        Self { c }
    }

    /// The independent variable expanded about `x0`.
    pub fn variable(x0: T) -> Self {
        let mut c = [T::zero(); LEN];
        c[0] = x0;
        c[1] = T::one();
        Self { c }
    }

    pub fn from_taylor(c: [T; LEN]) -> Self {
        Self { c }
    }

    /// Builds a jet from derivative values `f, f', f'', ...`.
    pub fn from_derivatives(d: &[T]) -> Self {
        let mut c = [T::nan(); LEN];
        let mut fact = T::one();
        for (k, slot) in c.iter_mut().enumerate() {
            if k > 0 {
                fact = fact * count::<T>(k);
            }
            if let Some(&v) = d.get(k) {
                *slot = v / fact;
            }
        }
        Self { c }
    }

    pub fn value(&self) -> T {
        self.c[0]
    }

    /// k-th derivative at the expansion point.
    pub fn d(&self, k: usize) -> T {
        let mut fact = T::one();
        for j in 2..=k {
            fact = fact * count::<T>(j);
        }
        self.c[k] * fact
    }

    pub fn d1(&self) -> T {
        self.d(1)
    }

    pub fn d2(&self) -> T {
        self.d(2)
    }

    pub fn d3(&self) -> T {
        self.d(3)
    }

    pub fn derivative(&self) -> Self {
        let mut c = [T::nan(); LEN];
        for k in 0..ORDER {
            c[k] = count::<T>(k + 1) * self.c[k + 1];
        }
        Self { c }
    }

    /// Antiderivative with constant term `c0`; the top coefficient is dropped.
    pub fn integral(&self, c0: T) -> Self {
        let mut c = [T::zero(); LEN];
        c[0] = c0;
        for k in 1..LEN {
            c[k] = self.c[k - 1] / count::<T>(k);
        }
        Self { c }
    }

    pub fn scale(&self, s: T) -> Self {
        let mut c = self.c;
        for x in c.iter_mut() {
            *x = *x * s;
        }
        Self { c }
    }

    pub fn recip(&self) -> Self {
        let a = &self.c;
        let mut b = [T::zero(); LEN];
        b[0] = a[0].recip();
        for k in 1..LEN {
            let mut s = T::zero();
            for j in 1..=k {
                s = s + a[j] * b[k - j];
            }
            b[k] = -s * b[0];
        }
        Self { c: b }
    }

    pub fn exp(&self) -> Self {
        let a = &self.c;
        let mut e = [T::zero(); LEN];
        e[0] = a[0].exp();
        for k in 1..LEN {
            let mut s = T::zero();
            for j in 1..=k {
                s = s + count::<T>(j) * a[j] * e[k - j];
            }
            e[k] = s / count::<T>(k);
        }
        Self { c: e }
    }

    pub fn ln(&self) -> Self {
        let a = &self.c;
        let mut l = [T::zero(); LEN];
        l[0] = a[0].ln();
        for k in 1..LEN {
            let mut s = T::zero();
            for j in 1..k {
                s = s + count::<T>(j) * l[j] * a[k - j];
            }
            l[k] = (a[k] - s / count::<T>(k)) / a[0];
        }
        Self { c: l }
    }

    pub fn sqrt(&self) -> Self {
        let a = &self.c;
        let mut s = [T::zero(); LEN];
        s[0] = a[0].sqrt();
        for k in 1..LEN {
            let mut acc = T::zero();
            for j in 1..k {
                acc = acc + s[j] * s[k - j];
            }
            s[k] = (a[k] - acc) / (lit::<T>(2.0) * s[0]);
        }
        Self { c: s }
    }

    pub fn powf(&self, p: T) -> Self {
        (self.ln().scale(p)).exp()
    }

    pub fn powi(&self, p: i32) -> Self {
        let mut out = Self::constant(T::one());
        let base = if p < 0 { self.recip() } else { *self };
        for _ in 0..p.unsigned_abs() {
            out = out * base;
        }
        out
    }

    /// Returns `(sin, cos)` of the jet.
    pub fn sin_cos(&self) -> (Self, Self) {
        let a = &self.c;
        let mut s = [T::zero(); LEN];
        let mut c = [T::zero(); LEN];
        s[0] = a[0].sin();
        c[0] = a[0].cos();
        for k in 1..LEN {
            let mut ss = T::zero();
            let mut cc = T::zero();
            for j in 1..=k {
                let ja = count::<T>(j) * a[j];
                ss = ss + ja * c[k - j];
                cc = cc + ja * s[k - j];
            }
            s[k] = ss / count::<T>(k);
            c[k] = -cc / count::<T>(k);
        }
        (Self { c: s }, Self { c })
    }

    pub fn sin(&self) -> Self {
        self.sin_cos().0
    }

    pub fn cos(&self) -> Self {
        self.sin_cos().1
    }

    pub fn tanh(&self) -> Self {
        let e = self.scale(lit(2.0)).exp();
        (e - T::one()) / (e + T::one())
    }

    /// `ln(cosh x)` written to stay finite for large arguments.
    pub fn ln_cosh(&self) -> Self {
        let sign = if self.value() < T::zero() { -T::one() } else { T::one() };
        let x = self.scale(sign);
        // ln cosh x = x + ln(1 + e^{-2x}) - ln 2
        let tail = (self.scale(-lit::<T>(2.0) * sign).exp() + T::one()).ln();
        x + tail - lit::<T>(2.0).ln()
    }

    /// Evaluates the series `self` (expanded about `inner.value()`) at `inner`.
    pub fn compose(&self, inner: &Self) -> Self {
        let mut h = *inner;
        h.c[0] = T::zero();
        let mut out = Self::constant(self.c[0]);
        let mut pow = Self::constant(T::one());
        for k in 1..LEN {
            pow = pow * h;
            // h^k vanishes below order k
            for j in k..LEN {
                out.c[j] = out.c[j] + self.c[k] * pow.c[j];
            }
        }
        out
    }
}

impl<T: Scalar> Add for Jet<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let mut c = self.c;
        for (x, y) in c.iter_mut().zip(o.c) {
            *x = *x + y;
        }
        Self { c }
    }
}

impl<T: Scalar> Sub for Jet<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        let mut c = self.c;
        for (x, y) in c.iter_mut().zip(o.c) {
            *x = *x - y;
        }
        Self { c }
    }
}

impl<T: Scalar> Neg for Jet<T> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-T::one())
    }
}

impl<T: Scalar> Mul for Jet<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut c = [T::zero(); LEN];
        for k in 0..LEN {
            let mut s = T::zero();
            for j in 0..=k {
                s = s + self.c[j] * o.c[k - j];
            }
            c[k] = s;
        }
        Self { c }
    }
}

impl<T: Scalar> Div for Jet<T> {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Self) -> Self {
        self * o.recip()
    }
}

impl<T: Scalar> Add<T> for Jet<T> {
    type Output = Self;
    fn add(self, o: T) -> Self {
        let mut c = self.c;
        c[0] = c[0] + o;
        Self { c }
    }
}

impl<T: Scalar> Sub<T> for Jet<T> {
    type Output = Self;
    fn sub(self, o: T) -> Self {
        let mut c = self.c;
        c[0] = c[0] - o;
        Self { c }
    }
}

impl<T: Scalar> Mul<T> for Jet<T> {
    type Output = Self;
    fn mul(self, o: T) -> Self {
        self.scale(o)
    }
}

impl<T: Scalar> Div<T> for Jet<T> {
    type Output = Self;
    fn div(self, o: T) -> Self {
        self.scale(o.recip())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) {
        assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()), "{a} vs {b}");
    }

    #[test]
    fn exp_ln_sqrt_derivatives() {
        let x = Jet::variable(0.7_f64);
        let e = x.exp();
        for k in 0..=4 {
            close(e.d(k), 0.7_f64.exp());
        }
        let l = x.ln();
        close(l.d1(), 1.0 / 0.7);
        close(l.d2(), -1.0 / 0.49);
        close(l.d3(), 2.0 / 0.343);
        close(l.d(4), -6.0 / 0.7_f64.powi(4));
        let s = x.sqrt();
        close(s.d2(), -0.25 * 0.7_f64.powf(-1.5));
        close(s.d(4), -15.0 / 16.0 * 0.7_f64.powf(-3.5));
    }

    #[test]
    fn trig_and_quotients() {
        let x = Jet::variable(0.3_f64);
        let (s, c) = x.sin_cos();
        close(s.d3(), -0.3_f64.cos());
        close(c.d(4), 0.3_f64.cos());
        let q = s / c;
        let sec2 = 1.0 / 0.3_f64.cos().powi(2);
        close(q.d1(), sec2);
        close(q.d2(), 2.0 * sec2 * 0.3_f64.tan());
        let th = x.tanh();
        close(th.d1(), 1.0 - 0.3_f64.tanh().powi(2));
        let lc = x.ln_cosh();
        close(lc.value(), 0.3_f64.cosh().ln());
        close(lc.d1(), 0.3_f64.tanh());
    }

    #[test]
    fn derivative_marks_top_order_undetermined() {
        let x = Jet::variable(1.0_f64);
        let d = x.exp().derivative();
        close(d.d3(), 1.0_f64.exp());
        assert!(d.c[ORDER].is_nan());
    }

    #[test]
    fn compose_matches_chain_rule() {
        // f(g(x)) with f = exp, g = x^2, at x = 0.5
        let g = Jet::variable(0.5_f64).powi(2);
        let f_at = Jet::variable(g.value()).exp();
        let h = f_at.compose(&g);
        let direct = g.exp();
        for k in 0..=4 {
            close(h.d(k), direct.d(k));
        }
    }
}
