//! Pointwise tensor algebra on a Hermitian tangent space.
//!
//! Frame components are always taken with respect to an [`AdaptedFrame`]
//! ordered `(ξ, Jξ, e₁, Je₁, …)`. In such a frame the metric is the identity
//! and `J` is the standard block matrix returned by [`standard_complex_structure`],
//! so most algebra below is written directly against those constants.

use serde::{Deserialize, Serialize};

use crate::error::{GeometryError, Result};
use crate::linalg::{dot, Matrix};
use crate::scalar::{count, lit, Scalar};

/// Block-diagonal complex structure on ℝ²ⁿ with `J e₂ₖ = e₂ₖ₊₁`.
pub fn standard_complex_structure<T: Scalar>(n: usize) -> Matrix<T> {
    let mut j = Matrix::zeros(2 * n);
    for k in 0..n {
        j[(2 * k + 1, 2 * k)] = T::one();
        j[(2 * k, 2 * k + 1)] = -T::one();
    }
    j
}

/// Apply a `(1,1)` tensor stored as a matrix to a vector.
pub fn apply<T: Scalar>(m: &Matrix<T>, v: &[T]) -> Vec<T> {
    m.mul_vec(v)
}

/// Metric and complex structure at a single point.
#[derive(Clone, Debug)]
pub struct TangentSpace<T> {
    pub n: usize,
    pub g: Matrix<T>,
    pub j: Matrix<T>,
}

impl<T: Scalar> TangentSpace<T> {
    /// Validates `J² = -1`, `g` positive definite and `g(JX, JY) = g(X, Y)`.
    pub fn new(g: Matrix<T>, j: Matrix<T>) -> Result<Self> {
        let d = g.dim();
        if d % 2 != 0 || j.dim() != d {
            return Err(GeometryError::DimensionMismatch { expected: d, found: j.dim() });
        }
        let tol = lit::<T>(1e-9);
        let j2 = j.mul(&j).add(&Matrix::identity(d));
        if j2.max_abs() > tol {
            return Err(GeometryError::InvalidComplexStructure("J² ≠ -1".into()));
        }
        g.cholesky()?;
        let scale = g.max_abs().max(T::one());
        let herm = j.transpose().mul(&g).mul(&j).sub(&g);
        if herm.max_abs() > tol * scale {
            return Err(GeometryError::InvalidComplexStructure("metric is not J-invariant".into()));
        }
        Ok(Self { n: d / 2, g, j })
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn inner(&self, u: &[T], v: &[T]) -> T {
        self.g.bilinear(u, v)
    }
}

/// Orthonormal frame `(ξ, Jξ, e₁, Je₁, …, eₙ₋₁, Jeₙ₋₁)` at a point.
#[derive(Clone, Debug)]
pub struct AdaptedFrame<T> {
    pub n: usize,
    /// Frame vectors in coordinates, in adapted order.
    pub vectors: Vec<Vec<T>>,
    /// Metric duals `g(v_a, ·)` of the frame vectors.
    pub coframe: Vec<Vec<T>>,
    pub space: TangentSpace<T>,
}

impl<T: Scalar> AdaptedFrame<T> {
    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn xi(&self) -> &[T] {
        &self.vectors[0]
    }

    pub fn j_xi(&self) -> &[T] {
        &self.vectors[1]
    }

    /// `η = g(ξ, ·)` in coordinates.
    pub fn eta(&self) -> &[T] {
        &self.coframe[0]
    }

    /// `η̃ = g(Jξ, ·)` in coordinates.
    pub fn eta_tilde(&self) -> &[T] {
        &self.coframe[1]
    }

    /// Frame components of a coordinate vector.
    pub fn components(&self, x: &[T]) -> Vec<T> {
        self.coframe.iter().map(|c| dot(c, x)).collect()
    }

    /// Coordinate vector from frame components.
    pub fn vector(&self, comps: &[T]) -> Vec<T> {
        let d = self.dim();
        let mut out = vec![T::zero(); d];
        for (c, v) in comps.iter().zip(&self.vectors) {
            for i in 0..d {
                out[i] = out[i] + *c * v[i];
            }
        }
        out
    }

    /// Same frame with `ξ` rotated by `angle` in the `(ξ, Jξ)` plane.
    pub fn rotated(&self, angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        let mut out = self.clone();
        let d = self.dim();
        for i in 0..d {
            out.vectors[0][i] = c * self.vectors[0][i] + s * self.vectors[1][i];
            out.vectors[1][i] = -s * self.vectors[0][i] + c * self.vectors[1][i];
            out.coframe[0][i] = c * self.coframe[0][i] + s * self.coframe[1][i];
            out.coframe[1][i] = -s * self.coframe[0][i] + c * self.coframe[1][i];
        }
        out
    }
}

/// Builds the adapted frame with distinguished unit vector along `xi`.
///
/// Remaining vectors come from Gram–Schmidt over the coordinate axes in
/// order; candidates whose orthogonal projection is shorter than `1e-8` are
/// skipped.
pub fn adapted_frame<T: Scalar>(space: &TangentSpace<T>, xi: &[T]) -> Result<AdaptedFrame<T>> {
    let d = space.dim();
    if xi.len() != d {
        return Err(GeometryError::DimensionMismatch { expected: d, found: xi.len() });
    }
    let len = space.inner(xi, xi).sqrt();
    if !(len > lit(1e-12)) {
        return Err(GeometryError::DegenerateVector);
    }
    let unit: Vec<T> = xi.iter().map(|x| *x / len).collect();
    let mut vectors = vec![unit.clone(), space.j.mul_vec(&unit)];
    let skip = lit::<T>(1e-8);
    for axis in 0..d {
        if vectors.len() == d {
            break;
        }
        let mut w: Vec<T> = (0..d).map(|i| if i == axis { T::one() } else { T::zero() }).collect();
        for v in &vectors {
            let p = space.inner(&w, v);
            for i in 0..d {
                w[i] = w[i] - p * v[i];
            }
        }
        let wl = space.inner(&w, &w).sqrt();
        if wl < skip {
            continue;
        }
        let w: Vec<T> = w.iter().map(|x| *x / wl).collect();
        let jw = space.j.mul_vec(&w);
        vectors.push(w);
        vectors.push(jw);
    }
    if vectors.len() != d {
        return Err(GeometryError::IncompleteFrame { found: vectors.len(), expected: d });
    }
    let coframe = vectors.iter().map(|v| space.g.mul_vec(v)).collect();
    Ok(AdaptedFrame { n: space.n, vectors, coframe, space: space.clone() })
}

/// Fully covariant 4-tensor on a `2n`-dimensional space.
///
/// Used both for adapted-frame components and for coordinate components;
/// the context decides which.
#[derive(Clone, Debug, PartialEq)]
pub struct KahlerTensor4<T> {
    d: usize,
    data: Vec<T>,
}

impl<T: Scalar> KahlerTensor4<T> {
    pub fn zeros(d: usize) -> Self {
        Self { d, data: vec![T::zero(); d * d * d * d] }
    }

    pub fn from_fn(d: usize, f: impl Fn(usize, usize, usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(d * d * d * d);
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        data.push(f(i, j, k, l));
                    }
                }
            }
        }
        Self { d, data }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    fn idx(&self, i: usize, j: usize, k: usize, l: usize) -> usize {
        ((i * self.d + j) * self.d + k) * self.d + l
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> T {
        self.data[self.idx(i, j, k, l)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, l: usize, v: T) {
        let ix = self.idx(i, j, k, l);
        self.data[ix] = v;
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, x| m.max(x.abs()))
    }

    pub fn linear_combination(terms: &[(T, &Self)]) -> Self {
        let d = terms[0].1.d;
        let mut out = Self::zeros(d);
        for (c, t) in terms {
            for (o, x) in out.data.iter_mut().zip(&t.data) {
                *o = *o + *c * *x;
            }
        }
        out
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self::linear_combination(&[(T::one(), self), (-T::one(), o)])
    }

    /// Evaluates the tensor on four vectors given in the same basis.
    pub fn eval(&self, x: &[T], y: &[T], z: &[T], u: &[T]) -> T {
        let d = self.d;
        let mut s = T::zero();
        for i in 0..d {
            if x[i] == T::zero() {
                continue;
            }
            for j in 0..d {
                if y[j] == T::zero() {
                    continue;
                }
                for k in 0..d {
                    if z[k] == T::zero() {
                        continue;
                    }
                    for l in 0..d {
                        s = s + x[i] * y[j] * z[k] * u[l] * self.get(i, j, k, l);
                    }
                }
            }
        }
        s
    }

    /// Contracts every slot with the rows of `m`: `out[a..] = Σ m[a][i] … T[i..]`.
    pub fn transform(&self, m: &[Vec<T>]) -> Self {
        let d = self.d;
        let mut cur = self.data.clone();
        // one slot at a time, rotating the slot order each pass
        for _ in 0..4 {
            let mut next = vec![T::zero(); d * d * d * d];
            for a in 0..d {
                for i in 0..d {
                    let c = m[a][i];
                    if c == T::zero() {
                        continue;
                    }
                    let src = &cur[i * d * d * d..(i + 1) * d * d * d];
                    for (r, v) in src.iter().enumerate() {
                        // moves slot 0 to slot 3
                        let dst = r * d + a;
                        next[dst] = next[dst] + c * *v;
                    }
                }
            }
            cur = next;
        }
        Self { d, data: cur }
    }

    /// Coordinate components of a tensor given in frame components.
    pub fn frame_to_coordinates(&self, frame: &AdaptedFrame<T>) -> Self {
        let d = self.d;
        let m: Vec<Vec<T>> = (0..d).map(|i| (0..d).map(|a| frame.coframe[a][i]).collect()).collect();
        self.transform(&m)
    }

    /// Frame components of a tensor given in coordinate components.
    pub fn coordinates_to_frame(&self, frame: &AdaptedFrame<T>) -> Self {
        self.transform(&frame.vectors)
    }

    /// Coordinate components `T^l_{ijk}` of the `(1,3)` tensor obtained by
    /// raising the last slot, from frame components.
    pub fn raised_coordinates(&self, frame: &AdaptedFrame<T>) -> Self {
        let d = self.d;
        let lower: Vec<Vec<T>> =
            (0..d).map(|i| (0..d).map(|a| frame.coframe[a][i]).collect()).collect();
        let upper: Vec<Vec<T>> =
            (0..d).map(|i| (0..d).map(|a| frame.vectors[a][i]).collect()).collect();
        let mut out = Self::zeros(d);
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        let mut s = T::zero();
                        for a in 0..d {
                            let ca = lower[i][a];
                            if ca == T::zero() {
                                continue;
                            }
                            for b in 0..d {
                                let cb = ca * lower[j][b];
                                if cb == T::zero() {
                                    continue;
                                }
                                for c in 0..d {
                                    let cc = cb * lower[k][c];
                                    if cc == T::zero() {
                                        continue;
                                    }
                                    for e in 0..d {
                                        s = s + cc * upper[l][e] * self.get(a, b, c, e);
                                    }
                                }
                            }
                        }
                        out.set(i, j, k, l, s);
                    }
                }
            }
        }
        out
    }
}

/// Largest violation of the algebraic curvature identities of a Kähler
/// manifold, for a tensor in adapted-frame components.
///
/// Checks antisymmetry in each pair, the first Bianchi identity and
/// `R(X,Y,JZ,U) + R(X,Y,Z,JU) = 0`.
pub fn kahler_symmetry_residual<T: Scalar>(t: &KahlerTensor4<T>) -> T {
    let d = t.dim();
    let jm = standard_complex_structure::<T>(d / 2);
    // J v_k = Σ_m J[m][k] v_m, and the standard J has one entry per column
    let jcol = |k: usize| -> (usize, T) {
        (0..d).find(|&m| jm[(m, k)] != T::zero()).map(|m| (m, jm[(m, k)])).expect("J column")
    };
    let mut worst = T::zero();
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    let x = t.get(i, j, k, l);
                    let r1 = (x + t.get(j, i, k, l)).abs();
                    let r2 = (x + t.get(i, j, l, k)).abs();
                    let r3 = (x + t.get(j, k, i, l) + t.get(k, i, j, l)).abs();
                    let (mk, sk) = jcol(k);
                    let (ml, sl) = jcol(l);
                    let r4 = (sk * t.get(i, j, mk, l) + sl * t.get(i, j, k, ml)).abs();
                    worst = worst.max(r1).max(r2).max(r3).max(r4);
                }
            }
        }
    }
    worst
}

/// Scalar curvature, `σ = ρ(ξ, ξ)` and `ϰ = R(ξ, Jξ, Jξ, ξ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureScalars<T> {
    pub tau: T,
    pub sigma: T,
    pub kappa: T,
}

impl<T: Scalar> CurvatureScalars<T> {
    /// `τ - 2σ - 2(σ - ϰ)`.
    pub fn horizontal(&self) -> T {
        self.tau - lit::<T>(4.0) * self.sigma + lit::<T>(2.0) * self.kappa
    }

    pub fn mixed(&self) -> T {
        self.sigma - self.kappa
    }

    pub fn vertical(&self) -> T {
        self.kappa
    }
}

/// Ricci tensor `ρ(Y, Z) = Σ R(e_a, Y, Z, e_a)` in frame components.
pub fn ricci<T: Scalar>(t: &KahlerTensor4<T>) -> Matrix<T> {
    let d = t.dim();
    Matrix::from_fn(d, |b, c| (0..d).fold(T::zero(), |s, a| s + t.get(a, b, c, a)))
}

pub fn curvature_scalars<T: Scalar>(t: &KahlerTensor4<T>) -> CurvatureScalars<T> {
    let rho = ricci(t);
    let d = t.dim();
    let tau = (0..d).fold(T::zero(), |s, a| s + rho[(a, a)]);
    CurvatureScalars { tau, sigma: rho[(0, 0)], kappa: t.get(0, 1, 1, 0) }
}

/// Angle `φ ∈ [0, π/2]` between a nonzero coordinate vector and the plane
/// `span{ξ, Jξ}`, with `cos²φ = η²(x) + η̃²(x)` for unit `x`.
pub fn angle_phi<T: Scalar>(frame: &AdaptedFrame<T>, x: &[T]) -> Result<T> {
    let len2 = frame.space.inner(x, x);
    if !(len2 > T::zero()) {
        return Err(GeometryError::DegenerateVector);
    }
    let e = dot(frame.eta(), x);
    let et = dot(frame.eta_tilde(), x);
    let c2 = ((e * e + et * et) / len2).min(T::one()).max(T::zero());
    Ok(c2.sqrt().acos())
}

/// `n(n-1)`, the normalisation shared by the coefficient formulas.
pub(crate) fn nn1<T: Scalar>(n: usize) -> T {
    count::<T>(n) * count::<T>(n - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclidean_frame_is_standard_basis() {
        let n = 3;
        let space = TangentSpace::new(Matrix::<f64>::identity(6), standard_complex_structure(n)).unwrap();
        let xi = vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let f = adapted_frame(&space, &xi).unwrap();
        for (a, v) in f.vectors.iter().enumerate() {
            for (i, x) in v.iter().enumerate() {
                assert_eq!(*x, if a == i { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn rejects_bad_structures() {
        let g = Matrix::<f64>::identity(4);
        assert!(TangentSpace::new(g.clone(), Matrix::identity(4)).is_err());
        let mut skew = g.clone();
        skew[(0, 0)] = 2.0;
        assert!(TangentSpace::new(skew, standard_complex_structure(2)).is_err());
        let space = TangentSpace::new(g, standard_complex_structure(2)).unwrap();
        assert_eq!(adapted_frame(&space, &[0.0; 4]).unwrap_err(), GeometryError::DegenerateVector);
    }

    #[test]
    fn transform_round_trip() {
        let n = 2;
        let g = Matrix::from_rows(&[
            vec![2.0, 0.3, 0.1, 0.2],
            vec![0.3, 1.5, -0.2, 0.1],
            vec![0.1, -0.2, 1.8, 0.0],
            vec![0.2, 0.1, 0.0, 1.2_f64],
        ]);
        let j = standard_complex_structure::<f64>(n);
        let herm = g.add(&j.transpose().mul(&g).mul(&j)).scale(0.5);
        let space = TangentSpace::new(herm, j).unwrap();
        let f = adapted_frame(&space, &[0.3, 1.0, -0.4, 0.2]).unwrap();
        let t = KahlerTensor4::from_fn(4, |i, j, k, l| (i + 2 * j) as f64 - (k * l) as f64 * 0.5);
        let back = t.frame_to_coordinates(&f).coordinates_to_frame(&f);
        assert!(back.sub(&t).max_abs() < 1e-12);
    }
}
