//! Rotational hypersurfaces in ℂⁿ × ℝ and their dilatational Kähler metrics.
//!
//! A profile `t(s) > 0` with `0 < t'(s) ≤ 1` describes the hypersurface swept
//! by spheres of radius `t(s)` in unit-speed parameter `s`. The induced
//! metric `ḡ = ds² + t² g_{S²ⁿ⁻¹}` is written in the radial chart
//! `Z = R(s)·θ` with `R(s) = exp ∫ ds/t`, where it becomes `(t²/r²) δ` and
//! the complex structure is the standard one. The dilatational metric is
//! `g = ḡ + (t' - 1)(η̄⊗η̄ + η̃̄⊗η̃̄)`.

use std::fmt;
use std::sync::Arc;

use crate::diffgeo::{christoffel, covariant_j, MetricField};
use crate::error::{GeometryError, Result};
use crate::families::RadialMetric;
use crate::jet::{Jet, ORDER};
use crate::linalg::{norm, Matrix};
use crate::ode::{integrate, OdeOptions, Rhs, Trajectory};
use crate::quadrature::adaptive_simpson;
use crate::scalar::{lit, Scalar};

type ProfileFn<T> = Arc<dyn Fn(Jet<T>) -> Jet<T> + Send + Sync>;

/// Profile `t(s)` of a rotational hypersurface on `(s_min, s_max)`.
#[derive(Clone)]
pub struct RotationalProfile<T> {
    pub label: String,
    pub s_min: T,
    pub s_max: T,
    t: ProfileFn<T>,
}

impl<T> fmt::Debug for RotationalProfile<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RotationalProfile({})", self.label)
    }
}

/// `t, t', t'', t'''` at a parameter value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProfileDerivatives<T> {
    pub t: T,
    pub t1: T,
    pub t2: T,
    pub t3: T,
}

impl<T: Scalar> RotationalProfile<T> {
    /// From an expression in jet arithmetic; validated on a grid.
    pub fn new(label: impl Into<String>, s_min: T, s_max: T, t: impl Fn(Jet<T>) -> Jet<T> + Send + Sync + 'static) -> Result<Self> {
        let p = Self { label: label.into(), s_min, s_max, t: Arc::new(t) };
        p.check_admissible(200)?;
        Ok(p)
    }

    /// `t ∘ s` for a jet `s`.
    pub fn apply(&self, s: &Jet<T>) -> Jet<T> {
        (self.t)(*s)
    }

    /// Taylor expansion of `t` about `s`.
    pub fn taylor(&self, s: T) -> Jet<T> {
        self.apply(&Jet::variable(s))
    }

    pub fn derivatives(&self, s: T) -> ProfileDerivatives<T> {
        let j = self.taylor(s);
        ProfileDerivatives { t: j.value(), t1: j.d1(), t2: j.d2(), t3: j.d3() }
    }

    /// Requires `t > 0` and `0 < t' ≤ 1` at `samples` interior points.
    pub fn check_admissible(&self, samples: usize) -> Result<()> {
        let slack = lit::<T>(1e-12);
        for i in 0..=samples {
            let s = self.s_min + (self.s_max - self.s_min) * lit::<T>(i as f64 / samples as f64);
            let d = self.derivatives(s);
            let reason = if !(d.t > T::zero()) {
                Some("t must be positive")
            } else if !(d.t1 > T::zero()) {
                Some("t' must be positive")
            } else if !(d.t1 <= T::one() + slack) {
                Some("t' must not exceed 1")
            } else {
                None
            };
            if let Some(reason) = reason {
                return Err(GeometryError::InadmissibleProfile { s: s.to_f64().unwrap_or(f64::NAN), reason: reason.into() });
            }
        }
        Ok(())
    }

    /// `t = sin s` on `(0.15, 1.45)`: the round sphere.
    pub fn sine() -> Self {
        Self::new("sin", lit(0.15), lit(1.45), |s| s.sin()).expect("sine profile is admissible")
    }

    /// `t' = ½ + ¼ tanh(s - 1)`, a smooth ramp between slopes ¼ and ¾.
    pub fn ramp() -> Self {
        Self::new("ramp", lit(0.2), lit(2.5), |s| {
            s.scale(lit(0.5)) + (s - T::one()).ln_cosh().scale(lit(0.25)) + lit::<T>(0.5)
        })
        .expect("ramp profile is admissible")
    }

    /// `t = (2/√a) tanh(√a s / 2)`, the profile with `t' = 1 - a t²/4`.
    pub fn constant_holomorphic(a: T) -> Result<Self> {
        if !(a > T::zero()) {
            return Err(GeometryError::NonPositiveCurvature);
        }
        let sa = a.sqrt();
        Self::new("constant-holomorphic", lit::<T>(0.2) / sa, lit::<T>(3.0) / sa, move |s| {
            s.scale(sa * lit(0.5)).tanh().scale(lit::<T>(2.0) / sa)
        })
    }

    /// `t = s + t0`, the real hyperplane with `t' ≡ 1`.
    pub fn hyperplane(t0: T) -> Self {
        Self::new("hyperplane", lit(0.1), lit(2.0), move |s| s + t0).expect("hyperplane profile is admissible")
    }

    /// `t' = 1 - ε(s - s₀)^m` near `s₀`, touching `t' = 1` with order `m`.
    pub fn touching(eps: T, s0: T, m: i32) -> Result<Self> {
        let mp1 = lit::<T>(f64::from(m + 1));
        Self::new(format!("touching-{m}"), s0 - lit(0.4), s0 + lit(0.4), move |s| {
            s + lit::<T>(1.0) - (s - s0).powi(m + 1).scale(eps / mp1)
        })
    }

    /// Parameter values evenly spread over the interior of the span.
    pub fn grid(&self, count: usize) -> Vec<T> {
        (0..count)
            .map(|i| self.s_min + (self.s_max - self.s_min) * lit::<T>((i as f64 + 0.5) / count as f64))
            .collect()
    }
}

/// `(a, b, c)` of the dilatational metric from the profile.
pub fn closed_form_coefficients<T: Scalar>(profile: &RotationalProfile<T>, s: T) -> (T, T, T) {
    let d = profile.derivatives(s);
    let (t, t1, t2, t3) = (d.t, d.t1, d.t2, d.t3);
    let four = lit::<T>(4.0);
    let two = lit::<T>(2.0);
    let a = four * (T::one() - t1) / (t * t);
    let b = lit::<T>(8.0) * ((t1 - T::one()) / (t * t) - t2 / (two * t * t1));
    let c = four * (T::one() - t1) / (t * t) + lit::<T>(5.0) * t2 / (two * t * t1) + (t2 * t2 - t1 * t3) / (two * t1 * t1 * t1);
    (a, b, c)
}

/// Coefficients `(α, β)` with `R̄ = α π̄ + β Φ̄` for the induced metric.
pub fn warped_curvature_coefficients<T: Scalar>(profile: &RotationalProfile<T>, s: T) -> (T, T) {
    let d = profile.derivatives(s);
    let t2 = d.t * d.t;
    let one_m = T::one() - d.t1 * d.t1;
    (one_m / t2, -(one_m + d.t * d.t2) / t2)
}

/// `α π̄ + β Φ̄` in a frame orthonormal for `ḡ` whose first vector is `ξ̄`.
pub fn warped_curvature_tensor<T: Scalar>(alpha: T, beta: T, dim: usize) -> crate::tensor::KahlerTensor4<T> {
    let g = |a: usize, b: usize| if a == b { T::one() } else { T::zero() };
    let e = |a: usize| g(a, 0);
    crate::tensor::KahlerTensor4::from_fn(dim, |x, y, z, u| {
        let pi = g(y, z) * g(x, u) - g(x, z) * g(y, u);
        let phi = g(y, z) * e(x) * e(u) - g(x, z) * e(y) * e(u) + e(y) * e(z) * g(x, u) - e(x) * e(z) * g(y, u);
        alpha * pi + beta * phi
    })
}

/// Radial chart `r = R(s) = exp ∫_{s_ref}^s dσ/t(σ)` with `R(s_ref) = 1`.
#[derive(Clone)]
pub struct RadialChart<T> {
    profile: RotationalProfile<T>,
    s_ref: T,
    anchors: Arc<Vec<(T, T)>>,
}

const CHART_TOL: f64 = 1e-13;

impl<T: Scalar> RadialChart<T> {
    pub fn new(profile: &RotationalProfile<T>) -> Result<Self> {
        let s_ref = (profile.s_min + profile.s_max) * lit(0.5);
        let count = 64usize;
        let mut anchors = Vec::with_capacity(count + 1);
        let inv = |s: T| profile.taylor(s).value().recip();
        let step = (profile.s_max - profile.s_min) / lit(count as f64);
        let mut ln_r = adaptive_simpson(inv, s_ref, profile.s_min, lit(CHART_TOL))?;
        anchors.push((profile.s_min, ln_r));
        for i in 0..count {
            let a = profile.s_min + step * lit(i as f64);
            ln_r = ln_r + adaptive_simpson(inv, a, a + step, lit(CHART_TOL))?;
            anchors.push((a + step, ln_r));
        }
        Ok(Self { profile: profile.clone(), s_ref, anchors: Arc::new(anchors) })
    }

    pub fn s_ref(&self) -> T {
        self.s_ref
    }

    fn nearest(&self, s: T) -> (T, T) {
        let step = (self.profile.s_max - self.profile.s_min) / lit((self.anchors.len() - 1) as f64);
        let idx = ((s - self.profile.s_min) / step).round().to_isize().unwrap_or(0);
        self.anchors[idx.clamp(0, self.anchors.len() as isize - 1) as usize]
    }

    /// `ln R(s)`.
    pub fn ln_radius(&self, s: T) -> T {
        let (s0, l0) = self.nearest(s);
        let piece = adaptive_simpson(|x| self.profile.taylor(x).value().recip(), s0, s, lit(CHART_TOL)).unwrap_or_else(|_| T::nan());
        l0 + piece
    }

    pub fn radius(&self, s: T) -> T {
        self.ln_radius(s).exp()
    }

    /// Inverse of [`RadialChart::radius`] by Newton iteration.
    pub fn s_of_radius(&self, r: T) -> T {
        let target = r.ln();
        // start from the anchor table
        let mut s = self.anchors[0].0;
        for w in self.anchors.windows(2) {
            if (w[0].1 - target) * (w[1].1 - target) <= T::zero() {
                let f = (target - w[0].1) / (w[1].1 - w[0].1);
                s = w[0].0 + (w[1].0 - w[0].0) * f;
                break;
            }
            if target > w[1].1 {
                s = w[1].0;
            }
        }
        for _ in 0..50 {
            let t = self.profile.taylor(s).value();
            let ds = (target - self.ln_radius(s)) * t;
            s = s + ds;
            if ds.abs() <= lit::<T>(1e-15) * (T::one() + s.abs()) {
                break;
            }
        }
        s
    }

    /// Taylor jet of `s` as a function of `ρ = r²` about `rho`, from
    /// `ds/dρ = t(s) / (2ρ)`.
    pub fn s_jet(&self, rho: T) -> Jet<T> {
        let s0 = self.s_of_radius(rho.sqrt());
        let x = Jet::variable(rho);
        let mut s = Jet::constant(s0);
        for _ in 0..=ORDER {
            let rate = self.profile.apply(&s) / x.scale(lit(2.0));
            s = rate.integral(s0);
        }
        s
    }

    /// Point at parameter `s` along a unit coordinate direction.
    pub fn point(&self, s: T, direction: &[T]) -> Vec<T> {
        let r = self.radius(s);
        let len = norm(direction);
        direction.iter().map(|x| *x * r / len).collect()
    }

    pub fn profile(&self) -> &RotationalProfile<T> {
        &self.profile
    }
}

fn chart_metric<T: Scalar>(profile: &RotationalProfile<T>, n: usize, dilatational: bool) -> Result<(RadialMetric<T>, RadialChart<T>)> {
    let chart = RadialChart::new(profile)?;
    let (r_min, r_max) = (chart.radius(profile.s_min), chart.radius(profile.s_max));
    let c = chart.clone();
    let label = if dilatational { format!("rotational({})", profile.label) } else { format!("induced({})", profile.label) };
    let metric = RadialMetric::new(
        n,
        r_min,
        r_max,
        label,
        Arc::new(move |rho| {
            let x = Jet::variable(rho);
            let s = c.s_jet(rho);
            let t = c.profile.apply(&s);
            let a = t * t / x;
            if !dilatational {
                return (a, Jet::constant(T::zero()));
            }
            let t1 = c.profile.taylor(s.value()).derivative().compose(&s);
            (a, (t1 - T::one()) * a / x)
        }),
    );
    Ok((metric, chart))
}

/// Dilatational Kähler metric of the profile in the radial chart.
pub fn rotational_metric<T: Scalar>(profile: &RotationalProfile<T>, n: usize) -> Result<(RadialMetric<T>, RadialChart<T>)> {
    chart_metric(profile, n, true)
}

/// Induced metric `ḡ = (t²/r²) δ` in the radial chart.
pub fn induced_metric<T: Scalar>(profile: &RotationalProfile<T>, n: usize) -> Result<(RadialMetric<T>, RadialChart<T>)> {
    chart_metric(profile, n, false)
}

/// Largest deviation of `∇̄J` from
/// `((t'-1)/t)(ḡ(X,Y)Jξ̄ - η̃̄(Y)X - η̄(Y)JX + ḡ(JX,Y)ξ̄)` at `p`, using the
/// structure `j` (the standard one unless overridden).
pub fn nabla_j_identity_residual<T: Scalar>(induced: &RadialMetric<T>, chart: &RadialChart<T>, p: &[T], j: Option<&Matrix<T>>) -> Result<T> {
    let d = p.len();
    let j = j.cloned().unwrap_or_else(|| induced.complex_structure());
    let conn = christoffel(induced, p)?;
    let nj = covariant_j(&conn, &j);
    let g = induced.metric(p);
    let r = norm(p);
    let s = chart.s_of_radius(r);
    let pd = chart.profile().derivatives(s);
    let coef = (pd.t1 - T::one()) / pd.t;
    let len = g.bilinear(p, p).sqrt();
    let xi: Vec<T> = p.iter().map(|x| *x / len).collect();
    let jxi = j.mul_vec(&xi);
    let eta = g.mul_vec(&xi);
    let eta_t = g.mul_vec(&jxi);
    let mut worst = T::zero();
    for i in 0..d {
        for jj in 0..d {
            // g(J∂_i, ∂_jj)
            let gjx = (0..d).fold(T::zero(), |s, m| s + j[(m, i)] * g[(m, jj)]);
            for k in 0..d {
                let x_k = if k == i { T::one() } else { T::zero() };
                let rhs = coef * (g[(i, jj)] * jxi[k] - eta_t[jj] * x_k - eta[jj] * j[(k, i)] + gjx * xi[k]);
                worst = worst.max((nj[i][(k, jj)] - rhs).abs());
            }
        }
    }
    Ok(worst)
}

/// Height of the meridian of constant holomorphic curvature `a`,
/// `y = (√(8 - ax²) + ln((√(8 - ax²) - 2)/(√(8 - ax²) + 2))) / √a`.
pub fn meridian_height<T: Scalar>(a: T, x: &Jet<T>) -> Jet<T> {
    let w = (x.powi(2).scale(-a) + lit::<T>(8.0)).sqrt();
    let two = lit::<T>(2.0);
    (((w - two) / (w + two)).ln() + w).scale(a.sqrt().recip())
}

/// `samples` points `(x, y)` of the meridian with `0 < x < 2/√a`.
pub fn constant_curvature_meridian<T: Scalar>(a: T, samples: usize) -> Result<Vec<(T, T)>> {
    if !(a > T::zero()) {
        return Err(GeometryError::NonPositiveCurvature);
    }
    let x_max = lit::<T>(2.0) / a.sqrt();
    Ok((0..samples)
        .map(|i| {
            let x = x_max * lit::<T>((i as f64 + 1.0) / (samples as f64 + 1.0));
            (x, meridian_height(a, &Jet::constant(x)).value())
        })
        .collect())
}

/// `t'' - 2t'(t' - 1)/t` along the meridian at `x`, from its arclength
/// parametrisation `t' = 1/√(1 + y'²)`, `t'' = t' dt'/dx`.
pub fn meridian_b_zero_residual<T: Scalar>(a: T, x: T) -> T {
    let xj = Jet::variable(x);
    let yp = meridian_height(a, &xj).derivative();
    let tp = (yp * yp + T::one()).sqrt().recip();
    let t1 = tp.value();
    let t2 = t1 * tp.d1();
    t2 - lit::<T>(2.0) * t1 * (t1 - T::one()) / x
}

/// Solution of `t'' = 2t'(t' - 1)/t` with the meridian height
/// `q' = -√(1 - t'²)`, integrated in both directions from `s0`.
#[derive(Clone)]
pub struct BZeroSolution<T> {
    pub s0: T,
    forward: Trajectory<T>,
    backward: Trajectory<T>,
}

fn b_zero_rhs<T: Scalar>() -> Box<Rhs<'static, T>> {
    Box::new(|_s: T, y: &[T]| {
        let (t, tp) = (y[0], y[1]);
        vec![tp, lit::<T>(2.0) * tp * (tp - T::one()) / t, -(T::one() - tp * tp).max(T::zero()).sqrt()]
    })
}

/// Integrates the `b = 0` equation from `(t0, t0')` at `s0` over `[s_lo, s_hi]`.
pub fn solve_b_zero_ode<T: Scalar>(t0: T, tp0: T, s0: T, s_lo: T, s_hi: T) -> Result<BZeroSolution<T>> {
    if !(t0 > T::zero()) || !(tp0 > T::zero() && tp0 <= T::one()) {
        return Err(GeometryError::InvalidArgument("need t0 > 0 and 0 < t0' ≤ 1".into()));
    }
    if !(s_lo <= s0 && s0 <= s_hi) {
        return Err(GeometryError::InvalidArgument("s0 must lie in the span".into()));
    }
    let rhs = b_zero_rhs::<T>();
    let opts = OdeOptions::default();
    let ok = |_s: T, y: &[T]| y[0] > T::zero() && y[1] > T::zero() && y[1] <= T::one() + lit(1e-12);
    let y0 = [t0, tp0, T::zero()];
    let forward = integrate(rhs.as_ref(), s0, &y0, s_hi, &opts, &ok)?;
    let backward = integrate(rhs.as_ref(), s0, &y0, s_lo, &opts, &ok)?;
    Ok(BZeroSolution { s0, forward, backward })
}

/// Initial slope on the curve of constant holomorphic curvature `a` through `t0`.
pub fn b_zero_slope_for_curvature<T: Scalar>(a: T, t0: T) -> T {
    T::one() - a * t0 * t0 / lit(4.0)
}

impl<T: Scalar> BZeroSolution<T> {
    /// `(t, t', q)` at `s`.
    pub fn state(&self, s: T) -> Option<Vec<T>> {
        let rhs = b_zero_rhs::<T>();
        if s >= self.s0 {
            self.forward.eval(rhs.as_ref(), s)
        } else {
            self.backward.eval(rhs.as_ref(), s)
        }
    }

    pub fn span(&self) -> (T, T) {
        (self.backward.span().0, self.forward.span().1)
    }

    /// The solution as a rotational profile; derivatives come from the
    /// Taylor expansion of the equation about each evaluation point.
    pub fn profile(&self, margin: T) -> Result<RotationalProfile<T>> {
        let (lo, hi) = self.span();
        let sol = self.clone();
        RotationalProfile::new("b-zero-ode", lo + margin, hi - margin, move |s: Jet<T>| {
            let st = sol.state(s.value()).unwrap_or_else(|| vec![T::nan(); 3]);
            let (t0, tp0) = (st[0], st[1]);
            let mut t = Jet::variable(T::zero()).scale(tp0) + t0;
            for _ in 0..=ORDER {
                let tp = t.derivative();
                let f = tp * (tp - T::one()) / t * lit::<T>(2.0);
                t = f.integral(tp0).integral(t0);
            }
            // t is a series in (s - s0); shift it onto the input jet
            t.compose(&s)
        })
    }
}
