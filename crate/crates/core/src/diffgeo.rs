//! Connection, curvature and distribution calculus for Hermitian metric fields.
//!
//! A [`MetricField`] gives `g(p)` in real coordinates on an open set of ℝ²ⁿ,
//! with a constant complex structure. Fields may supply exact first and
//! second derivatives; otherwise fourth-order central differences are used.
//!
//! Conventions: `R(X,Y)Z = ∇_X∇_Y Z - ∇_Y∇_X Z - ∇_[X,Y] Z`,
//! `R(X,Y,Z,U) = g(R(X,Y)Z, U)`, `dη(X,Y) = (∇_Xη)(Y) - (∇_Yη)(X)` and
//! `dΩ(X,Y,Z)` is the cyclic sum of `(∇_XΩ)(Y,Z)`.

use std::sync::Arc;

use crate::error::{GeometryError, Result};
use crate::linalg::{dot, Matrix};
use crate::scalar::{count, lit, Scalar};
use crate::tensor::{adapted_frame, standard_complex_structure, AdaptedFrame, KahlerTensor4, TangentSpace};

/// Value, first and second coordinate derivatives of the metric at a point.
#[derive(Clone, Debug)]
pub struct MetricJet<T> {
    pub g: Matrix<T>,
    /// `dg[k] = ∂_k g`.
    pub dg: Vec<Matrix<T>>,
    /// `ddg[k][l] = ∂_k ∂_l g`.
    pub ddg: Vec<Vec<Matrix<T>>>,
}

pub trait MetricField<T: Scalar>: Send + Sync {
    /// Complex dimension.
    fn n(&self) -> usize;

    /// Whether `p` lies in the open domain of the field.
    fn contains(&self, p: &[T]) -> bool;

    fn metric(&self, p: &[T]) -> Matrix<T>;

    /// Exact derivatives, when the field knows them.
    fn analytic_jet(&self, _p: &[T]) -> Option<MetricJet<T>> {
        None
    }

    fn complex_structure(&self) -> Matrix<T> {
        standard_complex_structure(self.n())
    }
}

/// Metric field given by a closure, without derivative providers.
pub struct FnMetric<T> {
    pub n: usize,
    pub domain: Arc<dyn Fn(&[T]) -> bool + Send + Sync>,
    pub g: Arc<dyn Fn(&[T]) -> Matrix<T> + Send + Sync>,
}

impl<T: Scalar> MetricField<T> for FnMetric<T> {
    fn n(&self) -> usize {
        self.n
    }

    fn contains(&self, p: &[T]) -> bool {
        (self.domain)(p)
    }

    fn metric(&self, p: &[T]) -> Matrix<T> {
        (self.g)(p)
    }
}

/// Hides the derivative providers of another field, forcing finite differences.
pub struct FiniteDifferenceOnly<F>(pub F);

impl<T: Scalar, F: MetricField<T>> MetricField<T> for FiniteDifferenceOnly<F> {
    fn n(&self) -> usize {
        self.0.n()
    }

    fn contains(&self, p: &[T]) -> bool {
        self.0.contains(p)
    }

    fn metric(&self, p: &[T]) -> Matrix<T> {
        self.0.metric(p)
    }

    fn complex_structure(&self) -> Matrix<T> {
        self.0.complex_structure()
    }
}

/// Step for central differences: `ε^{1/5}` scaled by the coordinate magnitude.
pub fn fd_step<T: Scalar>(p: &[T]) -> T {
    let scale = p.iter().fold(T::one(), |m, x| m.max(x.abs()));
    T::epsilon().powf(lit(0.2)) * scale
}

const W1: [f64; 4] = [1.0 / 12.0, -8.0 / 12.0, 8.0 / 12.0, -1.0 / 12.0];
const O1: [f64; 4] = [-2.0, -1.0, 1.0, 2.0];

fn shifted<T: Scalar>(p: &[T], moves: &[(usize, T)]) -> Vec<T> {
    let mut q = p.to_vec();
    for (k, dx) in moves {
        q[*k] = q[*k] + *dx;
    }
    q
}

/// Fourth-order central difference of a vector-valued map along axis `k`.
fn fd_axis<T: Scalar>(f: &dyn Fn(&[T]) -> Result<Vec<T>>, p: &[T], k: usize, h: T) -> Result<Vec<T>> {
    let mut acc: Option<Vec<T>> = None;
    for (w, o) in W1.iter().zip(O1) {
        let v = f(&shifted(p, &[(k, lit::<T>(o) * h)]))?;
        let w = lit::<T>(*w) / h;
        acc = Some(match acc {
            None => v.iter().map(|x| *x * w).collect(),
            Some(a) => a.iter().zip(&v).map(|(s, x)| *s + *x * w).collect(),
        });
    }
    Ok(acc.expect("stencil is nonempty"))
}

fn require_stencil<T: Scalar>(field: &dyn MetricField<T>, p: &[T], h: T) -> Result<()> {
    let d = p.len();
    if !field.contains(p) {
        return Err(GeometryError::OutsideDomain);
    }
    let two = lit::<T>(2.0) * h;
    for k in 0..d {
        for l in k..d {
            for (sk, sl) in [(two, two), (two, -two), (-two, two), (-two, -two)] {
                let q = if k == l { shifted(p, &[(k, sk)]) } else { shifted(p, &[(k, sk), (l, sl)]) };
                if !field.contains(&q) {
                    return Err(GeometryError::OutsideDomain);
                }
            }
        }
    }
    Ok(())
}

/// Metric jet from fourth-order central differences of `g`.
pub fn finite_difference_jet<T: Scalar>(field: &dyn MetricField<T>, p: &[T]) -> Result<MetricJet<T>> {
    let d = 2 * field.n();
    if p.len() != d {
        return Err(GeometryError::DimensionMismatch { expected: d, found: p.len() });
    }
    let h = fd_step(p);
    require_stencil(field, p, h)?;
    let g = field.metric(p);
    let flat = |q: &[T]| -> Result<Vec<T>> {
        let m = field.metric(q);
        Ok((0..d * d).map(|ix| m[(ix / d, ix % d)]).collect())
    };
    let to_matrix = |v: Vec<T>| Matrix::from_fn(d, |i, j| v[i * d + j]);
    let mut dg = Vec::with_capacity(d);
    for k in 0..d {
        dg.push(to_matrix(fd_axis(&flat, p, k, h)?));
    }
    let mut ddg = vec![vec![Matrix::zeros(d); d]; d];
    let w2 = [-1.0, 16.0, -30.0, 16.0, -1.0];
    for k in 0..d {
        let mut acc = vec![T::zero(); d * d];
        for (o, w) in [-2.0, -1.0, 0.0, 1.0, 2.0].iter().zip(w2) {
            let v = flat(&shifted(p, &[(k, lit::<T>(*o) * h)]))?;
            for (a, x) in acc.iter_mut().zip(v) {
                *a = *a + lit::<T>(w) * x;
            }
        }
        let s = (lit::<T>(12.0) * h * h).recip();
        ddg[k][k] = to_matrix(acc.into_iter().map(|x| x * s).collect());
        for l in (k + 1)..d {
            let mut acc = vec![T::zero(); d * d];
            for (wa, oa) in W1.iter().zip(O1) {
                for (wb, ob) in W1.iter().zip(O1) {
                    let v = flat(&shifted(p, &[(k, lit::<T>(oa) * h), (l, lit::<T>(ob) * h)]))?;
                    let w = lit::<T>(wa * wb);
                    for (a, x) in acc.iter_mut().zip(v) {
                        *a = *a + w * x;
                    }
                }
            }
            let m = to_matrix(acc.into_iter().map(|x| x / (h * h)).collect());
            ddg[k][l] = m.clone();
            ddg[l][k] = m;
        }
    }
    Ok(MetricJet { g, dg, ddg })
}

/// Exact jet when available, otherwise finite differences.
pub fn metric_jet<T: Scalar>(field: &dyn MetricField<T>, p: &[T]) -> Result<MetricJet<T>> {
    let d = 2 * field.n();
    if p.len() != d {
        return Err(GeometryError::DimensionMismatch { expected: d, found: p.len() });
    }
    if !field.contains(p) {
        return Err(GeometryError::OutsideDomain);
    }
    match field.analytic_jet(p) {
        Some(j) => Ok(j),
        None => finite_difference_jet(field, p),
    }
}

/// Largest relative disagreement between exact and finite-difference jets.
pub fn derivative_provider_mismatch<T: Scalar>(field: &dyn MetricField<T>, p: &[T]) -> Result<T> {
    let exact = field.analytic_jet(p).ok_or_else(|| GeometryError::InvalidArgument("field has no derivative providers".into()))?;
    let fd = finite_difference_jet(field, p)?;
    let d = p.len();
    let mut worst = T::zero();
    let mut s1 = T::zero();
    let mut s2 = T::zero();
    for k in 0..d {
        s1 = s1.max(exact.dg[k].max_abs());
        worst = worst.max(exact.dg[k].sub(&fd.dg[k]).max_abs());
        for l in 0..d {
            s2 = s2.max(exact.ddg[k][l].max_abs());
        }
    }
    let mut w2 = T::zero();
    for k in 0..d {
        for l in 0..d {
            w2 = w2.max(exact.ddg[k][l].sub(&fd.ddg[k][l]).max_abs());
        }
    }
    let floor = exact.g.max_abs();
    Ok((worst / s1.max(floor)).max(w2 / s2.max(floor)))
}

/// Levi-Civita connection data at a point.
#[derive(Clone, Debug)]
pub struct Connection<T> {
    pub jet: MetricJet<T>,
    pub g_inv: Matrix<T>,
    d: usize,
    /// `Γ_{m,ij}` at `[(m*d + i)*d + j]`.
    lower: Vec<T>,
    /// `Γ^l_{ij}` at `[(l*d + i)*d + j]`.
    upper: Vec<T>,
}

impl<T: Scalar> Connection<T> {
    pub fn from_jet(jet: MetricJet<T>) -> Result<Self> {
        let d = jet.g.dim();
        let g_inv = jet.g.inverse_spd()?;
        let mut lower = vec![T::zero(); d * d * d];
        for m in 0..d {
            for i in 0..d {
                for j in 0..d {
                    lower[(m * d + i) * d + j] =
                        (jet.dg[i][(m, j)] + jet.dg[j][(m, i)] - jet.dg[m][(i, j)]) * lit(0.5);
                }
            }
        }
        let mut upper = vec![T::zero(); d * d * d];
        for l in 0..d {
            for i in 0..d {
                for j in 0..d {
                    let mut s = T::zero();
                    for m in 0..d {
                        s = s + g_inv[(l, m)] * lower[(m * d + i) * d + j];
                    }
                    upper[(l * d + i) * d + j] = s;
                }
            }
        }
        Ok(Self { jet, g_inv, d, lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// `Γ^l_{ij}` with `∇_{∂_i} ∂_j = Γ^l_{ij} ∂_l`.
    #[inline]
    pub fn gamma(&self, l: usize, i: usize, j: usize) -> T {
        self.upper[(l * self.d + i) * self.d + j]
    }

    #[inline]
    pub fn gamma_lower(&self, m: usize, i: usize, j: usize) -> T {
        self.lower[(m * self.d + i) * self.d + j]
    }

    /// `max |∂_k g_ij - Γ^m_{ki} g_mj - Γ^m_{kj} g_im|`.
    pub fn compatibility_residual(&self) -> T {
        let d = self.d;
        let g = &self.jet.g;
        let mut worst = T::zero();
        for k in 0..d {
            for i in 0..d {
                for j in 0..d {
                    let mut s = self.jet.dg[k][(i, j)];
                    for m in 0..d {
                        s = s - self.gamma(m, k, i) * g[(m, j)] - self.gamma(m, k, j) * g[(i, m)];
                    }
                    worst = worst.max(s.abs());
                }
            }
        }
        worst
    }

    /// Covariant derivative of a covector field: `(∇_{∂_i} α)_j = ∂_i α_j - Γ^k_{ij} α_k`.
    pub fn covariant_covector(&self, alpha: &[T], d_alpha: &[Vec<T>]) -> Matrix<T> {
        let d = self.d;
        Matrix::from_fn(d, |i, j| {
            let mut s = d_alpha[i][j];
            for k in 0..d {
                s = s - self.gamma(k, i, j) * alpha[k];
            }
            s
        })
    }

    /// Covariant curvature components `R(∂_i, ∂_j, ∂_k, ∂_l)`.
    pub fn riemann(&self) -> KahlerTensor4<T> {
        let d = self.d;
        let dd = &self.jet.ddg;
        KahlerTensor4::from_fn(d, |i, j, k, l| {
            let second = (dd[i][k][(l, j)] - dd[i][l][(j, k)] - dd[j][k][(l, i)] + dd[j][l][(i, k)]) * lit(0.5);
            let mut quad = T::zero();
            for m in 0..d {
                quad = quad - self.gamma_lower(m, i, l) * self.gamma(m, j, k)
                    + self.gamma_lower(m, j, l) * self.gamma(m, i, k);
            }
            second + quad
        })
    }
}

pub fn christoffel<T: Scalar>(field: &dyn MetricField<T>, p: &[T]) -> Result<Connection<T>> {
    Connection::from_jet(metric_jet(field, p)?)
}

pub fn tangent_space<T: Scalar>(field: &dyn MetricField<T>, p: &[T]) -> Result<TangentSpace<T>> {
    if !field.contains(p) {
        return Err(GeometryError::OutsideDomain);
    }
    TangentSpace::new(field.metric(p), field.complex_structure())
}

/// Covariant curvature in coordinate components.
pub fn riemann_coordinates<T: Scalar>(field: &dyn MetricField<T>, p: &[T]) -> Result<KahlerTensor4<T>> {
    Ok(christoffel(field, p)?.riemann())
}

/// Curvature in the components of `frame`.
pub fn riemann<T: Scalar>(field: &dyn MetricField<T>, p: &[T], frame: &AdaptedFrame<T>) -> Result<KahlerTensor4<T>> {
    Ok(riemann_coordinates(field, p)?.coordinates_to_frame(frame))
}

/// Fourth-order directional derivative of a scalar function.
pub fn directional_derivative<T: Scalar>(f: &dyn Fn(&[T]) -> Result<T>, p: &[T], v: &[T]) -> Result<T> {
    let vn = v.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    if vn == T::zero() {
        return Ok(T::zero());
    }
    let h = fd_step(p) / vn;
    let mut s = T::zero();
    for (w, o) in W1.iter().zip(O1) {
        let q: Vec<T> = p.iter().zip(v).map(|(x, y)| *x + lit::<T>(o) * h * *y).collect();
        s = s + lit::<T>(*w) * f(&q)?;
    }
    Ok(s / h)
}

/// Source of the distinguished direction `ξ`.
pub trait DistributionField<T: Scalar>: Send + Sync {
    /// A nonzero vector along `ξ(p)`; it is normalised by the metric.
    fn direction(&self, field: &dyn MetricField<T>, p: &[T]) -> Result<Vec<T>>;
}

/// `ξ` along the position vector, the canonical choice on radial metrics.
#[derive(Clone, Copy, Debug, Default)]
pub struct RadialDistribution;

impl<T: Scalar> DistributionField<T> for RadialDistribution {
    fn direction(&self, _field: &dyn MetricField<T>, p: &[T]) -> Result<Vec<T>> {
        Ok(p.to_vec())
    }
}

/// Constant coordinate direction.
#[derive(Clone, Debug)]
pub struct ConstantDistribution<T>(pub Vec<T>);

impl<T: Scalar> DistributionField<T> for ConstantDistribution<T> {
    fn direction(&self, _field: &dyn MetricField<T>, _p: &[T]) -> Result<Vec<T>> {
        Ok(self.0.clone())
    }
}

/// `cos θ ξ + sin θ Jξ` for a constant angle `θ`.
pub struct RotatedDistribution<T, D> {
    pub inner: D,
    pub angle: T,
}

impl<T: Scalar, D: DistributionField<T>> DistributionField<T> for RotatedDistribution<T, D> {
    fn direction(&self, field: &dyn MetricField<T>, p: &[T]) -> Result<Vec<T>> {
        let xi = unit_xi(field, &self.inner, p)?;
        let jxi = field.complex_structure().mul_vec(&xi);
        let (s, c) = self.angle.sin_cos();
        Ok(xi.iter().zip(&jxi).map(|(x, y)| c * *x + s * *y).collect())
    }
}

/// The principal rotation of another distribution at every point.
pub struct PrincipalDistribution<D>(pub D);

impl<T: Scalar, D: DistributionField<T>> DistributionField<T> for PrincipalDistribution<D> {
    fn direction(&self, field: &dyn MetricField<T>, p: &[T]) -> Result<Vec<T>> {
        Ok(principal_frame(field, &self.0, p)?.xi().to_vec())
    }
}

fn unit_xi<T: Scalar, D: DistributionField<T> + ?Sized>(field: &dyn MetricField<T>, dist: &D, p: &[T]) -> Result<Vec<T>> {
    let v = dist.direction(field, p)?;
    let g = field.metric(p);
    let len = g.bilinear(&v, &v).sqrt();
    if !(len > lit(1e-12)) {
        return Err(GeometryError::DegenerateVector);
    }
    Ok(v.iter().map(|x| *x / len).collect())
}

/// Adapted frame at `p` for the distribution.
pub fn frame_at<T: Scalar, D: DistributionField<T> + ?Sized>(field: &dyn MetricField<T>, dist: &D, p: &[T]) -> Result<AdaptedFrame<T>> {
    let space = tangent_space(field, p)?;
    let v = dist.direction(field, p)?;
    adapted_frame(&space, &v)
}

/// `η` and `η̃` concatenated, in coordinates.
fn eta_pair<T: Scalar, D: DistributionField<T> + ?Sized>(field: &dyn MetricField<T>, dist: &D, p: &[T]) -> Result<Vec<T>> {
    let xi = unit_xi(field, dist, p)?;
    let g = field.metric(p);
    let jxi = field.complex_structure().mul_vec(&xi);
    let mut out = g.mul_vec(&xi);
    out.extend(g.mul_vec(&jxi));
    Ok(out)
}

/// First-order data of `η` and `η̃` in an adapted frame.
///
/// `nabla_eta[(a, b)] = (∇_{v_a} η)(v_b)` and likewise for `η̃`. Indices
/// `a, b ≥ 2` span `D`.
#[derive(Clone, Debug)]
pub struct NablaEta<T> {
    pub frame: AdaptedFrame<T>,
    pub nabla_eta: Matrix<T>,
    pub nabla_eta_tilde: Matrix<T>,
    pub div0_xi: T,
    pub div0_jxi: T,
    /// `div₀ξ / (n - 1)`.
    pub k: T,
    /// `g(∇_ξ ξ, Jξ)`.
    pub p: T,
    /// `g(∇_{Jξ} Jξ, ξ)`.
    pub p_star: T,
    /// `θ` on `D`, in frame components `2..2n`.
    pub theta: Vec<T>,
    /// `θ*` on `D`, in frame components `2..2n`.
    pub theta_star: Vec<T>,
}

impl<T: Scalar> NablaEta<T> {
    /// `dη(v_a, v_b)`.
    pub fn d_eta(&self, a: usize, b: usize) -> T {
        self.nabla_eta[(a, b)] - self.nabla_eta[(b, a)]
    }

    /// `dη̃(v_a, v_b)`.
    pub fn d_eta_tilde(&self, a: usize, b: usize) -> T {
        self.nabla_eta_tilde[(a, b)] - self.nabla_eta_tilde[(b, a)]
    }
}

pub fn nabla_eta<T: Scalar, D: DistributionField<T> + ?Sized>(field: &dyn MetricField<T>, dist: &D, p: &[T]) -> Result<NablaEta<T>> {
    let n = field.n();
    let d = 2 * n;
    if n < 2 {
        return Err(GeometryError::InvalidArgument("distribution calculus needs n ≥ 2".into()));
    }
    let conn = christoffel(field, p)?;
    let h = fd_step(p);
    require_stencil(field, p, h)?;
    let frame = frame_at(field, dist, p)?;
    let pair = eta_pair(field, dist, p)?;
    let f = |q: &[T]| eta_pair(field, dist, q);
    let mut d_eta = Vec::with_capacity(d);
    let mut d_eta_t = Vec::with_capacity(d);
    for k in 0..d {
        let v = fd_axis(&f, p, k, h)?;
        d_eta.push(v[..d].to_vec());
        d_eta_t.push(v[d..].to_vec());
    }
    let cov = conn.covariant_covector(&pair[..d], &d_eta);
    let cov_t = conn.covariant_covector(&pair[d..], &d_eta_t);
    let to_frame = |m: &Matrix<T>| Matrix::from_fn(d, |a, b| m.bilinear(&frame.vectors[a], &frame.vectors[b]));
    let ne = to_frame(&cov);
    let nt = to_frame(&cov_t);
    let div0_xi = (2..d).fold(T::zero(), |s, a| s + ne[(a, a)]);
    let div0_jxi = (2..d).fold(T::zero(), |s, a| s + nt[(a, a)]);
    let k = div0_xi / count::<T>(n - 1);
    let theta = (2..d).map(|a| ne[(0, a)]).collect();
    let theta_star = (2..d).map(|a| nt[(1, a)]).collect();
    Ok(NablaEta {
        p: ne[(0, 1)],
        p_star: nt[(1, 0)],
        frame,
        nabla_eta: ne,
        nabla_eta_tilde: nt,
        div0_xi,
        div0_jxi,
        k,
        theta,
        theta_star,
    })
}

/// Involutivity residuals of `D`, `D⊥ = span{ξ, Jξ}` and `Δ = ξ⊥`.
#[derive(Clone, Debug)]
pub struct Involutivity<T> {
    /// `max |dη|_D|, |dη̃|_D|`.
    pub d_residual: T,
    /// `D`-component of `[ξ, Jξ]`.
    pub d_perp_residual: T,
    /// `max |dη|_Δ|`.
    pub delta_residual: T,
}

impl<T: Scalar> Involutivity<T> {
    pub fn d(&self, tol: T) -> bool {
        self.d_residual <= tol
    }

    pub fn d_perp(&self, tol: T) -> bool {
        self.d_perp_residual <= tol
    }

    pub fn delta(&self, tol: T) -> bool {
        self.delta_residual <= tol
    }
}

pub fn involutivity_from<T: Scalar>(ne: &NablaEta<T>) -> Involutivity<T> {
    let d = ne.frame.dim();
    let mut dr = T::zero();
    let mut delta = T::zero();
    for a in 1..d {
        for b in 1..d {
            delta = delta.max(ne.d_eta(a, b).abs());
            if a >= 2 && b >= 2 {
                dr = dr.max(ne.d_eta(a, b).abs()).max(ne.d_eta_tilde(a, b).abs());
            }
        }
    }
    let mut perp = T::zero();
    for a in 2..d {
        // g(∇_ξ Jξ - ∇_{Jξ} ξ, v_a)
        perp = perp.max((ne.nabla_eta_tilde[(0, a)] - ne.nabla_eta[(1, a)]).abs());
    }
    Involutivity { d_residual: dr, d_perp_residual: perp, delta_residual: delta }
}

pub fn involutivity<T: Scalar, D: DistributionField<T> + ?Sized>(field: &dyn MetricField<T>, dist: &D, p: &[T]) -> Result<Involutivity<T>> {
    Ok(involutivity_from(&nabla_eta(field, dist, p)?))
}

/// Frame at `p` rotated in the `(ξ, Jξ)` plane so that `div₀Jξ' = 0` and
/// `div₀ξ' ≥ 0`.
pub fn principal_frame<T: Scalar, D: DistributionField<T> + ?Sized>(field: &dyn MetricField<T>, dist: &D, p: &[T]) -> Result<AdaptedFrame<T>> {
    let ne = nabla_eta(field, dist, p)?;
    if !(ne.div0_xi * ne.div0_xi + ne.div0_jxi * ne.div0_jxi > lit(1e-12)) {
        return Err(GeometryError::NoPrincipalFrame);
    }
    Ok(ne.frame.rotated(ne.div0_jxi.atan2(ne.div0_xi)))
}

/// `dΩ` in coordinates, `out[(i*d + j)*d + k] = dΩ(∂_i, ∂_j, ∂_k)`.
pub fn kahler_form_differential<T: Scalar>(field: &dyn MetricField<T>, p: &[T]) -> Result<Vec<T>> {
    let jet = metric_jet(field, p)?;
    let j = field.complex_structure();
    let d = p.len();
    // ∂_i Ω_{ab} with Ω_{ab} = g(J∂_a, ∂_b)
    let d_omega = |i: usize, a: usize, b: usize| (0..d).fold(T::zero(), |s, m| s + j[(m, a)] * jet.dg[i][(m, b)]);
    let mut out = vec![T::zero(); d * d * d];
    for i in 0..d {
        for a in 0..d {
            for b in 0..d {
                out[(i * d + a) * d + b] = d_omega(i, a, b) + d_omega(a, b, i) + d_omega(b, i, a);
            }
        }
    }
    Ok(out)
}

/// Lee form `ω` in coordinates, defined by the trace of `dΩ = ω ∧ Ω + …`:
/// `ω(X) = Σ_a dΩ(X, v_a, J v_a) / (2(n-1))` over an orthonormal frame.
pub fn lee_form<T: Scalar>(field: &dyn MetricField<T>, p: &[T]) -> Result<Vec<T>> {
    let n = field.n();
    if n < 2 {
        return Err(GeometryError::InvalidArgument("Lee form needs n ≥ 2".into()));
    }
    let d = 2 * n;
    let d_omega = kahler_form_differential(field, p)?;
    let space = tangent_space(field, p)?;
    let mut axis = vec![T::zero(); d];
    axis[0] = T::one();
    let frame = adapted_frame(&space, &axis)?;
    let den = lit::<T>(2.0) * count::<T>(n - 1);
    Ok((0..d)
        .map(|i| {
            let mut s = T::zero();
            for v in &frame.vectors {
                let jv = space.j.mul_vec(v);
                for a in 0..d {
                    for b in 0..d {
                        s = s + d_omega[(i * d + a) * d + b] * v[a] * jv[b];
                    }
                }
            }
            s / den
        })
        .collect())
}

/// `max |dΩ - ω ∧ Ω|` with `ω` the Lee form.
pub fn w4_residual<T: Scalar>(field: &dyn MetricField<T>, p: &[T]) -> Result<T> {
    let d = p.len();
    let d_omega = kahler_form_differential(field, p)?;
    let omega = lee_form(field, p)?;
    let g = field.metric(p);
    let j = field.complex_structure();
    let kf = |a: usize, b: usize| (0..d).fold(T::zero(), |s, m| s + j[(m, a)] * g[(m, b)]);
    let mut worst = T::zero();
    for i in 0..d {
        for a in 0..d {
            for b in 0..d {
                let wedge = omega[i] * kf(a, b) + omega[a] * kf(b, i) + omega[b] * kf(i, a);
                worst = worst.max((d_omega[(i * d + a) * d + b] - wedge).abs());
            }
        }
    }
    Ok(worst)
}

/// `max |dΩ|` in coordinates.
pub fn kahler_residual<T: Scalar>(field: &dyn MetricField<T>, p: &[T]) -> Result<T> {
    Ok(kahler_form_differential(field, p)?.iter().fold(T::zero(), |m, x| m.max(x.abs())))
}

/// `(∇_{∂_i} J)` as matrices `out[i][(k, j)]`, for a constant coordinate `J`.
pub fn covariant_j<T: Scalar>(conn: &Connection<T>, j: &Matrix<T>) -> Vec<Matrix<T>> {
    let d = conn.dim();
    (0..d)
        .map(|i| {
            Matrix::from_fn(d, |k, jj| {
                let mut s = T::zero();
                for m in 0..d {
                    s = s + conn.gamma(k, i, m) * j[(m, jj)] - conn.gamma(m, i, jj) * j[(k, m)];
                }
                s
            })
        })
        .collect()
}

/// Violation of the second Bianchi identity relative to the largest
/// coordinate derivative `|∂_m R_ijkl|` (which stays nonzero on symmetric spaces).
pub fn second_bianchi_residual<T: Scalar>(field: &dyn MetricField<T>, p: &[T]) -> Result<T> {
    let d = p.len();
    let conn = christoffel(field, p)?;
    let r = conn.riemann();
    let h = fd_step(p);
    require_stencil(field, p, h)?;
    let flat = |q: &[T]| -> Result<Vec<T>> {
        let t = riemann_coordinates(field, q)?;
        let mut v = Vec::with_capacity(d * d * d * d);
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        v.push(t.get(i, j, k, l));
                    }
                }
            }
        }
        Ok(v)
    };
    let idx = |i: usize, j: usize, k: usize, l: usize| ((i * d + j) * d + k) * d + l;
    let mut nabla = vec![Vec::new(); d];
    let mut scale = T::zero();
    for m in 0..d {
        let dr = fd_axis(&flat, p, m, h)?;
        scale = dr.iter().fold(scale, |s, x| s.max(x.abs()));
        let mut v = vec![T::zero(); d * d * d * d];
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        let mut s = dr[idx(i, j, k, l)];
                        for t in 0..d {
                            s = s - conn.gamma(t, m, i) * r.get(t, j, k, l)
                                - conn.gamma(t, m, j) * r.get(i, t, k, l)
                                - conn.gamma(t, m, k) * r.get(i, j, t, l)
                                - conn.gamma(t, m, l) * r.get(i, j, k, t);
                        }
                        v[idx(i, j, k, l)] = s;
                    }
                }
            }
        }
        nabla[m] = v;
    }
    let mut worst = T::zero();
    for m in 0..d {
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        let c = nabla[m][idx(i, j, k, l)] + nabla[i][idx(j, m, k, l)] + nabla[j][idx(m, i, k, l)];
                        worst = worst.max(c.abs());
                    }
                }
            }
        }
    }
    Ok(if scale > T::zero() { worst / scale } else { worst })
}

/// Components of a coordinate vector along the frame, `g(v_a, x)`.
pub fn frame_components<T: Scalar>(frame: &AdaptedFrame<T>, x: &[T]) -> Vec<T> {
    frame.coframe.iter().map(|c| dot(c, x)).collect()
}
