//! Invariant tensors `π`, `Φ`, `Ψ` and the decomposition `R = aπ + bΦ + cΨ`.
//!
//! All tensors live in adapted-frame components, where `g = 1`, `J` is
//! standard, `η = e⁰` and `η̃ = e¹`.

use serde::{Deserialize, Serialize};

use crate::error::{GeometryError, Result};
use crate::linalg::Matrix;
use crate::scalar::{count, lit, Scalar};
use crate::tensor::{curvature_scalars, nn1, ricci, standard_complex_structure, AdaptedFrame, CurvatureScalars, KahlerTensor4};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum InvariantKind {
    Pi,
    Phi,
    Psi,
}

struct FrameAlgebra<T> {
    j: Matrix<T>,
}

impl<T: Scalar> FrameAlgebra<T> {
    fn new(n: usize) -> Self {
        Self { j: standard_complex_structure(n) }
    }

    fn g(&self, a: usize, b: usize) -> T {
        if a == b {
            T::one()
        } else {
            T::zero()
        }
    }

    /// `g(J v_a, v_b)`.
    fn gj(&self, a: usize, b: usize) -> T {
        self.j[(b, a)]
    }

    fn eta(&self, a: usize) -> T {
        self.g(a, 0)
    }

    fn eta_t(&self, a: usize) -> T {
        self.g(a, 1)
    }

    fn pi(&self, x: usize, y: usize, z: usize, u: usize) -> T {
        let s = self.g(y, z) * self.g(x, u) - self.g(x, z) * self.g(y, u) + self.gj(y, z) * self.gj(x, u)
            - self.gj(x, z) * self.gj(y, u)
            - lit::<T>(2.0) * self.gj(x, y) * self.gj(z, u);
        s * lit(0.25)
    }

    fn phi(&self, x: usize, y: usize, z: usize, u: usize) -> T {
        let sym = |a: usize, b: usize| self.eta(a) * self.eta(b) + self.eta_t(a) * self.eta_t(b);
        let alt = |a: usize, b: usize| self.eta(a) * self.eta_t(b) - self.eta(b) * self.eta_t(a);
        let two = lit::<T>(2.0);
        let s = self.g(y, z) * sym(x, u) - self.g(x, z) * sym(y, u) + self.g(x, u) * sym(y, z)
            - self.g(y, u) * sym(x, z)
            + self.gj(y, z) * alt(x, u)
            - self.gj(x, z) * alt(y, u)
            + self.gj(x, u) * alt(y, z)
            - self.gj(y, u) * alt(x, z)
            - two * self.gj(x, y) * alt(z, u)
            - two * self.gj(z, u) * alt(x, y);
        s * lit(0.125)
    }

    fn psi(&self, x: usize, y: usize, z: usize, u: usize) -> T {
        let (e, t) = (|a| self.eta(a), |a| self.eta_t(a));
        e(y) * e(z) * t(x) * t(u) - e(x) * e(z) * t(y) * t(u) + e(x) * e(u) * t(y) * t(z)
            - e(y) * e(u) * t(x) * t(z)
    }
}

/// Frame components of `π`, `Φ` or `Ψ` in complex dimension `n`.
pub fn invariant_tensor<T: Scalar>(kind: InvariantKind, n: usize) -> KahlerTensor4<T> {
    let alg = FrameAlgebra::new(n);
    KahlerTensor4::from_fn(2 * n, |x, y, z, u| match kind {
        InvariantKind::Pi => alg.pi(x, y, z, u),
        InvariantKind::Phi => alg.phi(x, y, z, u),
        InvariantKind::Psi => alg.psi(x, y, z, u),
    })
}

/// `aπ + bΦ + cΨ` in frame components.
pub fn compose<T: Scalar>(n: usize, a: T, b: T, c: T) -> KahlerTensor4<T> {
    let pi = invariant_tensor(InvariantKind::Pi, n);
    let phi = invariant_tensor(InvariantKind::Phi, n);
    let psi = invariant_tensor(InvariantKind::Psi, n);
    KahlerTensor4::linear_combination(&[(a, &pi), (b, &phi), (c, &psi)])
}

/// Result of [`qch_decompose`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QchCoefficients<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    /// `‖R - aπ - bΦ - cΨ‖∞`.
    pub residual: T,
}

impl<T: Scalar> QchCoefficients<T> {
    pub fn horizontal(&self) -> T {
        self.a
    }

    pub fn mixed(&self) -> T {
        (lit::<T>(2.0) * self.a + self.b) * lit(0.125)
    }

    pub fn vertical(&self) -> T {
        self.a + self.b + self.c
    }

    /// Whether the residual is within `rel · max(‖R‖∞, 1)`.
    pub fn is_qch(&self, r_norm: T, rel: T) -> bool {
        self.residual <= rel * r_norm.max(T::one())
    }
}

/// Reads `a`, `b`, `c` off three curvature components and reports how far
/// `R` is from `aπ + bΦ + cΨ`.
pub fn qch_decompose<T: Scalar>(r: &KahlerTensor4<T>) -> Result<QchCoefficients<T>> {
    let d = r.dim();
    if d < 4 || d % 2 != 0 {
        return Err(GeometryError::DimensionMismatch { expected: 4, found: d });
    }
    let n = d / 2;
    let a = r.get(2, 3, 3, 2);
    let b = lit::<T>(8.0) * r.get(2, 0, 0, 2) - lit::<T>(2.0) * a;
    let c = r.get(0, 1, 1, 0) - a - b;
    let residual = r.sub(&compose(n, a, b, c)).max_abs();
    Ok(QchCoefficients { a, b, c, residual })
}

/// `a + b cos²φ + c cos⁴φ`.
pub fn hol_profile<T: Scalar>(a: T, b: T, c: T, phi: T) -> T {
    let c2 = phi.cos().powi(2);
    a + b * c2 + c * c2 * c2
}

/// Holomorphic sectional curvature `R(X, JX, JX, X)` for a frame-component
/// vector `x` (normalised internally).
pub fn holomorphic_sectional<T: Scalar>(r: &KahlerTensor4<T>, x: &[T]) -> Result<T> {
    let n2 = x.iter().fold(T::zero(), |s, v| s + *v * *v);
    if !(n2 > T::zero()) {
        return Err(GeometryError::DegenerateVector);
    }
    let j = standard_complex_structure::<T>(r.dim() / 2);
    let jx = j.mul_vec(x);
    Ok(r.eval(x, &jx, &jx, x) / (n2 * n2))
}

/// `(a, b, c)` from `(τ, σ, ϰ)`.
pub fn coefficients_from_scalars<T: Scalar>(s: &CurvatureScalars<T>, n: usize) -> Result<(T, T, T)> {
    if n < 2 {
        return Err(GeometryError::InvalidArgument("n must be at least 2".into()));
    }
    let nn = count::<T>(n);
    let two = lit::<T>(2.0);
    let four = lit::<T>(4.0);
    let den = nn1::<T>(n);
    let a = (s.tau - four * s.sigma + two * s.kappa) / den;
    let b = (four * (nn + two) * s.sigma - two * s.tau - four * (nn + T::one()) * s.kappa) / den;
    let c = (s.tau - four * (nn + T::one()) * s.sigma + (nn + T::one()) * (nn + two) * s.kappa) / den;
    Ok((a, b, c))
}

/// `(τ, σ, ϰ)` of `aπ + bΦ + cΨ`.
pub fn scalars_from_coefficients<T: Scalar>(a: T, b: T, c: T, n: usize) -> CurvatureScalars<T> {
    let kappa = a + b + c;
    let mixed = count::<T>(n - 1) * (lit::<T>(2.0) * a + b) * lit(0.25);
    let sigma = mixed + kappa;
    let tau = nn1::<T>(n) * a + lit::<T>(2.0) * sigma + lit::<T>(2.0) * mixed;
    CurvatureScalars { tau, sigma, kappa }
}

/// Frame components of `ρ - αg - β(η⊗η + η̃⊗η̃)` with the coefficients fixed
/// by `τ` and `σ`; vanishes for quasi-constant holomorphic curvature.
pub fn ricci_deviation<T: Scalar>(r: &KahlerTensor4<T>) -> Matrix<T> {
    let d = r.dim();
    let n = d / 2;
    let s = curvature_scalars(r);
    let two = lit::<T>(2.0);
    let den = two * count::<T>(n - 1);
    let alpha = (s.tau - two * s.sigma) / den;
    let beta = (two * count::<T>(n) * s.sigma - s.tau) / den;
    let rho = ricci(r);
    Matrix::from_fn(d, |i, j| {
        let g = if i == j { T::one() } else { T::zero() };
        let v = if i == j && i < 2 { T::one() } else { T::zero() };
        rho[(i, j)] - alpha * g - beta * v
    })
}

/// `QC(R) = R - aπ - bΦ - cΨ` in frame components, with `(a, b, c)` taken
/// from the scalar curvatures.
pub fn qc_tensor<T: Scalar>(r: &KahlerTensor4<T>) -> Result<KahlerTensor4<T>> {
    let n = r.dim() / 2;
    let (a, b, c) = coefficients_from_scalars(&curvature_scalars(r), n)?;
    Ok(r.sub(&compose(n, a, b, c)))
}

/// Coordinate components of `QC(R)` as a `(1,3)` tensor.
pub fn qc_tensor_coordinates<T: Scalar>(r: &KahlerTensor4<T>, frame: &AdaptedFrame<T>) -> Result<KahlerTensor4<T>> {
    Ok(qc_tensor(r)?.raised_coordinates(frame))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::kahler_symmetry_residual;

    #[test]
    fn normalisation_values() {
        let pi = invariant_tensor::<f64>(InvariantKind::Pi, 3);
        let phi = invariant_tensor::<f64>(InvariantKind::Phi, 3);
        let psi = invariant_tensor::<f64>(InvariantKind::Psi, 3);
        assert_eq!(pi.get(2, 3, 3, 2), 1.0);
        assert_eq!(pi.get(0, 1, 1, 0), 1.0);
        assert_eq!(psi.get(0, 1, 1, 0), 1.0);
        assert_eq!(phi.get(2, 0, 0, 2), 0.125);
        for t in [&pi, &phi, &psi] {
            assert!(kahler_symmetry_residual(t) < 1e-15);
        }
    }

    #[test]
    fn scalars_of_reference_combinations() {
        let r = compose(3, 2.0, 3.0, 5.0_f64);
        let s = curvature_scalars(&r);
        assert!((s.kappa - 10.0).abs() < 1e-13);
        assert!((s.sigma - 13.5).abs() < 1e-13);
        assert!((s.tau - 46.0).abs() < 1e-13);
        let r = compose(3, 4.0, 0.0, 0.0_f64);
        let s = curvature_scalars(&r);
        assert!((s.tau - 48.0).abs() < 1e-13 && (s.sigma - 8.0).abs() < 1e-13 && (s.kappa - 4.0).abs() < 1e-13);
    }

    #[test]
    fn perturbed_tensor_is_not_qch() {
        let mut r = compose(3, 2.0, 3.0, 5.0_f64);
        r.set(2, 4, 4, 2, r.get(2, 4, 4, 2) + 1.0);
        let q = qch_decompose(&r).unwrap();
        assert!(q.residual >= 0.5);
        assert!(kahler_symmetry_residual(&r) >= 0.5);
    }

    #[test]
    fn small_dimension_rejected() {
        let r = KahlerTensor4::<f64>::zeros(2);
        assert!(qch_decompose(&r).is_err());
        let s = CurvatureScalars { tau: 1.0, sigma: 0.0, kappa: 0.0 };
        assert!(coefficients_from_scalars(&s, 1).is_err());
    }
}
