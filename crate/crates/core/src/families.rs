//! Radial Hermitian metrics on annuli in ℂⁿ and the transformations between them.
//!
//! Every metric here has the form
//!
//! ```text
//! g = A(ρ) δ + C(ρ) (x xᵀ + Jx (Jx)ᵀ),      ρ = r² = |x|²,
//! ```
//!
//! i.e. `g = A δ + B (dr⊗dr + J₀dr⊗J₀dr)` with `B = ρ C`. The coefficient
//! functions are evaluated as Taylor jets in `ρ`, which gives exact first and
//! second derivatives of `g`. The canonical distribution is the radial one,
//! with `η = √(A + B) dr`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::diffgeo::{MetricField, MetricJet};
use crate::error::{GeometryError, Result};
use crate::jet::Jet;
use crate::linalg::{norm, Matrix};
use crate::quadrature::adaptive_simpson;
use crate::scalar::{lit, Scalar};
use crate::tensor::standard_complex_structure;

/// Radius interval of the default evaluation annulus.
pub const DEFAULT_ANNULUS: (f64, f64) = (0.2, 5.0);

/// Absolute tolerance of the quadratures defining `u`.
pub const QUADRATURE_TOL: f64 = 1e-10;

type JetFn<T> = Arc<dyn Fn(T) -> Jet<T> + Send + Sync>;

/// A function of `ρ = r²` that reports its Taylor jet at any point.
#[derive(Clone)]
pub struct RadialScalar<T> {
    taylor: JetFn<T>,
}

impl<T> fmt::Debug for RadialScalar<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("RadialScalar")
    }
}

impl<T: Scalar> RadialScalar<T> {
    /// From a map `ρ ↦ jet of the function about ρ`.
    pub fn from_taylor(f: impl Fn(T) -> Jet<T> + Send + Sync + 'static) -> Self {
        Self { taylor: Arc::new(f) }
    }

    /// From an expression written against [`Jet`] arithmetic.
    pub fn from_expr(f: impl Fn(Jet<T>) -> Jet<T> + Send + Sync + 'static) -> Self {
        Self::from_taylor(move |x| f(Jet::variable(x)))
    }

    pub fn constant(c: T) -> Self {
        Self::from_taylor(move |_| Jet::constant(c))
    }

    pub fn jet(&self, rho: T) -> Jet<T> {
        (self.taylor)(rho)
    }

    pub fn value(&self, rho: T) -> T {
        self.jet(rho).value()
    }

    pub fn d1(&self, rho: T) -> T {
        self.jet(rho).d1()
    }

    pub fn d2(&self, rho: T) -> T {
        self.jet(rho).d2()
    }

    pub fn d3(&self, rho: T) -> T {
        self.jet(rho).d3()
    }

    pub fn add(&self, other: &Self) -> Self {
        let (a, b) = (self.clone(), other.clone());
        Self::from_taylor(move |x| a.jet(x) + b.jet(x))
    }

    pub fn scale(&self, s: T) -> Self {
        let a = self.clone();
        Self::from_taylor(move |x| a.jet(x).scale(s))
    }

    /// Antiderivative vanishing at `rho0`, by adaptive Simpson quadrature.
    ///
    /// Values are cached at evenly spaced anchors over `[rho0, rho1]`, so an
    /// evaluation only integrates from the nearest anchor.
    pub fn antiderivative(&self, rho0: T, rho1: T) -> Result<Self> {
        let anchors = 64usize;
        let step = (rho1 - rho0) / lit::<T>(anchors as f64);
        let tol = lit::<T>(QUADRATURE_TOL) / lit(anchors as f64);
        let f = self.clone();
        let mut nodes = Vec::with_capacity(anchors + 1);
        let mut acc = T::zero();
        nodes.push((rho0, acc));
        for i in 0..anchors {
            let a = rho0 + step * lit(i as f64);
            let b = a + step;
            acc = acc + adaptive_simpson(|x| f.value(x), a, b, tol)?;
            nodes.push((b, acc));
        }
        let nodes = Arc::new(nodes);
        let g = self.clone();
        Ok(Self::from_taylor(move |x| {
            let idx = if step > T::zero() {
                ((x - rho0) / step).round().to_usize().unwrap_or(0).min(anchors)
            } else {
                0
            };
            let (x0, v0) = nodes[idx];
            let piece = adaptive_simpson(|t| g.value(t), x0, x, tol).unwrap_or_else(|_| T::nan());
            g.jet(x).integral(v0 + piece)
        }))
    }
}

/// Coefficient jets `(A, C)` about a value of `ρ`.
pub type Coefficients<T> = Arc<dyn Fn(T) -> (Jet<T>, Jet<T>) + Send + Sync>;

/// Radial Hermitian metric `A δ + C (x xᵀ + Jx Jxᵀ)` on an annulus.
#[derive(Clone)]
pub struct RadialMetric<T> {
    pub n: usize,
    pub r_min: T,
    pub r_max: T,
    pub label: String,
    coefficients: Coefficients<T>,
}

impl<T> fmt::Debug for RadialMetric<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RadialMetric({}, n = {})", self.label, self.n)
    }
}

impl<T: Scalar> RadialMetric<T> {
    pub fn new(n: usize, r_min: T, r_max: T, label: impl Into<String>, coefficients: Coefficients<T>) -> Self {
        Self { n, r_min, r_max, label: label.into(), coefficients }
    }

    /// Jets of `A` and `C` about `rho`.
    pub fn coefficients(&self, rho: T) -> (Jet<T>, Jet<T>) {
        (self.coefficients)(rho)
    }

    /// Jets of `A` and `B = ρ C`.
    pub fn a_b(&self, rho: T) -> (Jet<T>, Jet<T>) {
        let (a, c) = self.coefficients(rho);
        (a, c * Jet::variable(rho))
    }

    /// `A + B = g(∂_r, ∂_r)`.
    pub fn radial_norm2(&self, rho: T) -> Jet<T> {
        let (a, b) = self.a_b(rho);
        a + b
    }

    /// Coefficient of `kη` along `dρ` for the radial distribution:
    /// `(A + ρA') / (ρ A)`.
    pub fn k_eta(&self, rho: T) -> Jet<T> {
        let x = Jet::variable(rho);
        let (a, _) = self.coefficients(rho);
        (a + x * a.derivative()) / (x * a)
    }

    /// `k = 2(A + ρA') / (r A √(A + B))` for the radial distribution.
    pub fn k(&self, rho: T) -> Jet<T> {
        let x = Jet::variable(rho);
        let (a, _) = self.coefficients(rho);
        let q = self.radial_norm2(rho);
        (a + x * a.derivative()).scale(lit(2.0)) / (x.sqrt() * a * q.sqrt())
    }

    /// `ds/dρ` along the radial unit-speed parameter.
    pub fn ds_drho(&self, rho: T) -> Jet<T> {
        let x = Jet::variable(rho);
        self.radial_norm2(rho).sqrt() / x.sqrt().scale(lit(2.0))
    }

    /// Horizontal holomorphic curvature `-4A'/A²`, valid for Kähler radial metrics.
    pub fn horizontal_curvature(&self, rho: T) -> Jet<T> {
        let (a, _) = self.coefficients(rho);
        a.derivative().scale(lit(-4.0)) / (a * a)
    }

    /// Kähler defect `C - A'`; the metric is Kähler exactly when it vanishes.
    pub fn kahler_defect(&self, rho: T) -> T {
        let (a, c) = self.coefficients(rho);
        c.value() - a.d1()
    }

    pub fn rho_min(&self) -> T {
        self.r_min * self.r_min
    }

    pub fn rho_max(&self) -> T {
        self.r_max * self.r_max
    }

    /// Evenly spaced radii strictly inside the annulus.
    pub fn radius_grid(&self, count: usize) -> Vec<T> {
        let (lo, hi) = (self.r_min, self.r_max);
        (0..count)
            .map(|i| lo + (hi - lo) * lit::<T>((i as f64 + 0.5) / count as f64))
            .collect()
    }

    /// Copy with a different annulus.
    pub fn restricted(&self, r_min: T, r_max: T) -> Self {
        let mut out = self.clone();
        out.r_min = r_min;
        out.r_max = r_max;
        out
    }
}

impl<T: Scalar> MetricField<T> for RadialMetric<T> {
    fn n(&self) -> usize {
        self.n
    }

    fn contains(&self, p: &[T]) -> bool {
        let r = norm(p);
        p.len() == 2 * self.n && r > self.r_min && r < self.r_max
    }

    fn metric(&self, p: &[T]) -> Matrix<T> {
        let rho = p.iter().fold(T::zero(), |s, x| s + *x * *x);
        let (a, c) = self.coefficients(rho);
        let j = standard_complex_structure::<T>(self.n);
        let w = j.mul_vec(p);
        Matrix::from_fn(2 * self.n, |i, k| {
            let delta = if i == k { a.value() } else { T::zero() };
            delta + c.value() * (p[i] * p[k] + w[i] * w[k])
        })
    }

    fn analytic_jet(&self, p: &[T]) -> Option<MetricJet<T>> {
        let d = 2 * self.n;
        let rho = p.iter().fold(T::zero(), |s, x| s + *x * *x);
        let (aj, cj) = self.coefficients(rho);
        let (a, a1, a2) = (aj.value(), aj.d1(), aj.d2());
        let (c, c1, c2) = (cj.value(), cj.d1(), cj.d2());
        let j = standard_complex_structure::<T>(self.n);
        let w = j.mul_vec(p);
        let two = lit::<T>(2.0);
        let four = lit::<T>(4.0);
        let kd = |i: usize, k: usize| if i == k { T::one() } else { T::zero() };
        let m = |i: usize, k: usize| p[i] * p[k] + w[i] * w[k];
        // ∂_k M_ij
        let dm = |k: usize, i: usize, jj: usize| kd(i, k) * p[jj] + p[i] * kd(jj, k) + j[(i, k)] * w[jj] + w[i] * j[(jj, k)];
        // ∂_k ∂_l M_ij
        let ddm = |k: usize, l: usize, i: usize, jj: usize| {
            kd(i, k) * kd(jj, l) + kd(i, l) * kd(jj, k) + j[(i, k)] * j[(jj, l)] + j[(i, l)] * j[(jj, k)]
        };
        let g = Matrix::from_fn(d, |i, k| a * kd(i, k) + c * m(i, k));
        let dg = (0..d)
            .map(|k| Matrix::from_fn(d, |i, jj| two * p[k] * (a1 * kd(i, jj) + c1 * m(i, jj)) + c * dm(k, i, jj)))
            .collect();
        let ddg = (0..d)
            .map(|k| {
                (0..d)
                    .map(|l| {
                        Matrix::from_fn(d, |i, jj| {
                            (four * p[k] * p[l] * a2 + two * kd(k, l) * a1) * kd(i, jj)
                                + (four * p[k] * p[l] * c2 + two * kd(k, l) * c1) * m(i, jj)
                                + two * c1 * (p[k] * dm(l, i, jj) + p[l] * dm(k, i, jj))
                                + c * ddm(k, l, i, jj)
                        })
                    })
                    .collect()
            })
            .collect();
        Some(MetricJet { g, dg, ddg })
    }
}

/// Flat metric on the default annulus, with `ξ = x/|x|` the canonical choice.
pub fn flat_metric<T: Scalar>(n: usize) -> RadialMetric<T> {
    let (lo, hi) = DEFAULT_ANNULUS;
    RadialMetric::new(
        n,
        lit(lo),
        lit(hi),
        "flat",
        Arc::new(|_| (Jet::constant(T::one()), Jet::constant(T::zero()))),
    )
}

/// Named Kähler potentials `f(ρ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    /// `ρ/2`, the flat metric.
    Quadratic,
    /// `ln(1 + ρ)`, Fubini–Study.
    Log1p,
    /// `Σ c_k ρ^k`.
    Polynomial(Vec<f64>),
}

impl PotentialKind {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "quadratic" => Some(Self::Quadratic),
            "log1p" => Some(Self::Log1p),
            "polynomial" => Some(Self::Polynomial(vec![0.0, 1.0, 0.25])),
            _ => {
                let coeffs = name.strip_prefix("polynomial:")?;
                let parsed: std::result::Result<Vec<f64>, _> = coeffs.split(',').map(|c| c.trim().parse()).collect();
                parsed.ok().map(Self::Polynomial)
            }
        }
    }

    pub fn scalar<T: Scalar>(&self) -> RadialScalar<T> {
        match self {
            Self::Quadratic => RadialScalar::from_expr(|x| x.scale(lit(0.5))),
            Self::Log1p => RadialScalar::from_expr(|x| (x + T::one()).ln()),
            Self::Polynomial(c) => {
                let c: Vec<T> = c.iter().map(|v| lit(*v)).collect();
                RadialScalar::from_expr(move |x| {
                    let mut acc = Jet::constant(T::zero());
                    for ck in c.iter().rev() {
                        acc = acc * x + *ck;
                    }
                    acc
                })
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            Self::Quadratic => "quadratic".into(),
            Self::Log1p => "log1p".into(),
            Self::Polynomial(c) => {
                let parts: Vec<String> = c.iter().map(|v| v.to_string()).collect();
                format!("polynomial:{}", parts.join(","))
            }
        }
    }
}

/// Kähler metric `∂∂̄ f(r²)`, in real form `2f' δ + 2f'' (x xᵀ + Jx Jxᵀ)`.
///
/// Fails when `f' > 0` or `f' + ρ f'' > 0` is violated on a radius grid.
pub fn potential_metric<T: Scalar>(f: RadialScalar<T>, n: usize, r_min: T, r_max: T, label: &str) -> Result<RadialMetric<T>> {
    let probe = RadialMetric::new(n, r_min, r_max, label, Arc::new(|_| (Jet::constant(T::one()), Jet::constant(T::zero()))));
    for r in probe.radius_grid(400).into_iter().chain([r_min, r_max]) {
        let rho = r * r;
        let j = f.jet(rho);
        if !(j.d1() > T::zero()) || !(j.d1() + rho * j.d2() > T::zero()) {
            return Err(GeometryError::NonPositivePotential { radius: r.to_f64().unwrap_or(f64::NAN) });
        }
    }
    let f2 = f.clone();
    Ok(RadialMetric::new(
        n,
        r_min,
        r_max,
        label,
        Arc::new(move |rho| {
            let d = f2.jet(rho).derivative();
            (d.scale(lit(2.0)), d.derivative().scale(lit(2.0)))
        }),
    ))
}

/// Potential metric from the registry on the default annulus.
pub fn registry_metric<T: Scalar>(kind: &PotentialKind, n: usize) -> Result<RadialMetric<T>> {
    let (lo, hi) = DEFAULT_ANNULUS;
    potential_metric(kind.scalar(), n, lit(lo), lit(hi), &kind.name())
}

pub fn fubini_study<T: Scalar>(n: usize) -> RadialMetric<T> {
    registry_metric(&PotentialKind::Log1p, n).expect("log1p potential is positive")
}

/// Pair `(u, v)` of a biconformal transformation, both functions of `ρ`.
#[derive(Clone, Debug)]
pub struct BiconformalPair<T> {
    pub u: RadialScalar<T>,
    pub v: RadialScalar<T>,
}

fn grid<T: Scalar>(lo: T, hi: T, count: usize) -> Vec<T> {
    (0..count).map(|i| lo + (hi - lo) * lit::<T>(i as f64 / (count - 1) as f64)).collect()
}

/// Solves `2du = k(e^{2v} - 1)η` for `u` with `u(r0) = 0`.
///
/// `k_eta(ρ)` is the jet of the coefficient of `kη` along `dρ`; for the flat
/// metric with the radial distribution it is `1/ρ`.
pub fn u_from_v<T: Scalar>(v: &RadialScalar<T>, k_eta: impl Fn(T) -> Jet<T> + Send + Sync + 'static, r0: T, r1: T) -> Result<RadialScalar<T>> {
    let (rho0, rho1) = (r0 * r0, r1 * r1);
    let dv = grid(rho0, rho1, 200).into_iter().fold(T::zero(), |m, x| m.max(v.d1(x).abs()));
    if !(dv > lit(1e-12)) {
        return Err(GeometryError::ZeroDv);
    }
    let vv = v.clone();
    let integrand = RadialScalar::from_taylor(move |x| {
        let e2v = vv.jet(x).scale(lit(2.0)).exp();
        (e2v - T::one()) * k_eta(x) * lit::<T>(0.5)
    });
    integrand.antiderivative(rho0, rho1)
}

impl<T: Scalar> BiconformalPair<T> {
    /// Builds the pair over `src`, solving for `u` from the inner radius.
    pub fn for_source(src: &RadialMetric<T>, v: RadialScalar<T>) -> Result<Self> {
        let s = src.clone();
        let u = u_from_v(&v, move |x| s.k_eta(x), src.r_min, src.r_max)?;
        Ok(Self { u, v })
    }

    /// Pair of the composite transformation, `(u + u', v + v')`.
    pub fn compose(&self, next: &Self) -> Self {
        Self { u: self.u.add(&next.u), v: self.v.add(&next.v) }
    }

    /// Largest relative violation of `2u' = (e^{2v} - 1) kη` on a grid.
    pub fn constraint_residual(&self, src: &RadialMetric<T>) -> T {
        let mut worst = T::zero();
        for x in grid(src.rho_min(), src.rho_max(), 41) {
            let lhs = self.u.d1(x) * lit(2.0);
            let rhs = ((self.v.value(x) * lit(2.0)).exp() - T::one()) * src.k_eta(x).value();
            worst = worst.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(lit(1e-12)));
        }
        worst
    }
}

/// `g' = e^{2u}{g + (e^{2v} - 1)(η⊗η + η̃⊗η̃)}` for the radial distribution.
pub fn biconformal_apply<T: Scalar>(src: &RadialMetric<T>, pair: &BiconformalPair<T>) -> Result<RadialMetric<T>> {
    let dv = grid(src.rho_min(), src.rho_max(), 200).into_iter().fold(T::zero(), |m, x| m.max(pair.v.d1(x).abs()));
    if !(dv > lit(1e-12)) {
        return Err(GeometryError::ZeroDv);
    }
    let res = pair.constraint_residual(src);
    if !(res <= lit(1e-6)) {
        return Err(GeometryError::ConstraintViolated(res.to_f64().unwrap_or(f64::NAN)));
    }
    let s = src.clone();
    let p = pair.clone();
    Ok(RadialMetric::new(
        src.n,
        src.r_min,
        src.r_max,
        format!("biconformal({})", src.label),
        Arc::new(move |rho| {
            let x = Jet::variable(rho);
            let (a, b) = s.a_b(rho);
            let e2u = p.u.jet(rho).scale(lit(2.0)).exp();
            let e2v = p.v.jet(rho).scale(lit(2.0)).exp();
            let a_new = e2u * a;
            let b_new = e2u * (b + (e2v - T::one()) * (a + b));
            (a_new, b_new / x)
        }),
    ))
}

/// `g* = g + (q - 1)(η⊗η + η̃⊗η̃)` for a constant `q > 0`.
pub fn dilatational_apply<T: Scalar>(src: &RadialMetric<T>, q: T) -> Result<RadialMetric<T>> {
    if !(q > T::zero()) {
        return Err(GeometryError::InvalidArgument("q must be positive".into()));
    }
    let s = src.clone();
    Ok(RadialMetric::new(
        src.n,
        src.r_min,
        src.r_max,
        format!("dilatational({})", src.label),
        Arc::new(move |rho| {
            let x = Jet::variable(rho);
            let (a, b) = s.a_b(rho);
            (a, (b + (a + b) * (q - T::one())) / x)
        }),
    ))
}

/// `g = e^{-2u}{δ + (e^{-2v} - 1)(dr⊗dr + J₀dr⊗J₀dr)}` with
/// `d(-u)/dρ = (e^{-2v} - 1)/(2ρ)` and `u = 0` at the inner radius.
pub fn biconformally_flat_normal_form<T: Scalar>(v: RadialScalar<T>, n: usize, r_min: T, r_max: T) -> Result<RadialMetric<T>> {
    let vv = v.clone();
    let minus_u_rate = RadialScalar::from_taylor(move |x| {
        let e = vv.jet(x).scale(lit(-2.0)).exp();
        (e - T::one()) / Jet::variable(x).scale(lit(2.0))
    });
    let minus_u = minus_u_rate.antiderivative(r_min * r_min, r_max * r_max)?;
    Ok(RadialMetric::new(
        n,
        r_min,
        r_max,
        "normal-form",
        Arc::new(move |rho| {
            let x = Jet::variable(rho);
            let a = minus_u.jet(rho).scale(lit(2.0)).exp();
            let e = v.jet(rho).scale(lit(-2.0)).exp();
            (a, a * (e - T::one()) / x)
        }),
    ))
}

/// Smooth monotone `v(ρ) = ½ ln(1 + c₁ρ + c₂ρ²)` with nonnegative coefficients.
pub fn log_polynomial_v<T: Scalar>(c1: T, c2: T) -> RadialScalar<T> {
    RadialScalar::from_expr(move |x| ((x * c1 + x * x * c2) + T::one()).ln().scale(lit(0.5)))
}
