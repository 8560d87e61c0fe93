//! Regular kernels `k1`, `k2` and Cauchy principal-value integrals on the contour.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::basis::BasisKind;
use crate::geometry::{ArcId, Contour, CurvePoint};
use crate::quadrature::{graded_toward, GaussLegendre, QuadratureRule};
use crate::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Relative arc-length distance (times `l`) from a tip inside which principal
/// values are refused.
pub const EPS_TIP: f64 = 1e-8;

/// Below this arc-length separation the chord is expanded in a Taylor series.
const SERIES_BELOW: f64 = 1e-6;

/// A field point `t0 = t(s_field)` and a source point `τ = t(s_src)`.
///
/// Both kernels are written through the second divided difference
/// `E = (τ - t0 - t0' Δ) / Δ²`, `Δ = s_src - s_field`, which removes the
/// cancellation between their two terms near the diagonal:
/// `k1 = 2i Im(t̄0' E) / (t0' |S|²)` and `k2 = -2i Im(t̄0' E) / (t0' S̄²)` with
/// `S = t0' + Δ E`.
#[derive(Debug, Clone, Copy)]
pub struct KernelPoint {
    pub s_field: f64,
    pub s_src: f64,
    pub t0: Complex64,
    pub tau: Complex64,
    pub dt0: Complex64,
    /// `(τ - t0) / Δ`.
    secant: Complex64,
    /// `Im(t̄0' E)`, half the mean curvature of the chord.
    bend: f64,
}

impl KernelPoint {
    pub fn new(contour: &Contour, s_field: f64, s_src: f64) -> Self {
        let f = contour.point(s_field);
        let g = contour.point(s_src);
        Self::from_points(&f, &g, contour.arc_difference(s_field, s_src))
    }

    /// `ds` is `s_src - s_field`, consistent with the chord `τ - t0`.
    pub(crate) fn from_points(field: &CurvePoint, src: &CurvePoint, ds: f64) -> Self {
        let e = second_difference(field, src, ds);
        Self {
            s_field: field.s,
            s_src: src.s,
            t0: field.t,
            tau: src.t,
            dt0: field.d1,
            secant: field.d1 + e * ds,
            bend: (field.d1.conj() * e).im,
        }
    }

    /// `k1 = -1/(τ - t) + (dt̄/dt) / (τ̄ - t̄)`.
    pub fn k1(&self) -> Complex64 {
        2.0 * I * self.bend / (self.dt0 * self.secant.norm_sqr())
    }

    /// `k2 = 1/(τ̄ - t̄) - (τ - t)/(τ̄ - t̄)² · dt̄/dt`.
    pub fn k2(&self) -> Complex64 {
        let sc = self.secant.conj();
        -2.0 * I * self.bend / (self.dt0 * sc * sc)
    }
}

pub fn k1(contour: &Contour, s_field: f64, s_src: f64) -> Complex64 {
    KernelPoint::new(contour, s_field, s_src).k1()
}

pub fn k2(contour: &Contour, s_field: f64, s_src: f64) -> Complex64 {
    KernelPoint::new(contour, s_field, s_src).k2()
}

/// `(τ - t0 - t0' Δ) / Δ²`, by series when `Δ` is tiny.
fn second_difference(field: &CurvePoint, src: &CurvePoint, ds: f64) -> Complex64 {
    if ds.abs() < SERIES_BELOW {
        field.d2 * 0.5 + field.d3 * (ds / 6.0)
    } else {
        (src.t - field.t - field.d1 * ds) / (ds * ds)
    }
}

/// `(τ - t0) / (σ - s0)` for `τ = t(σ)`.
fn secant(field: &CurvePoint, src: &CurvePoint, ds: f64) -> Complex64 {
    field.d1 + second_difference(field, src, ds) * ds
}

/// Quadrature nodes over the whole contour with precomputed geometry, reused
/// for many principal-value evaluations of closed-contour densities.
#[derive(Debug, Clone)]
pub struct CauchyEvaluator<'a> {
    contour: &'a Contour,
    nodes: Vec<(f64, CurvePoint)>,
}

impl<'a> CauchyEvaluator<'a> {
    pub fn new(contour: &'a Contour, rule: &QuadratureRule) -> Result<Self> {
        rule.validate()?;
        let mut nodes = Vec::new();
        for arc in ArcId::BOTH {
            let (a, b) = contour.arc_bounds(arc);
            for (s, w) in rule.arc_nodes(a, b) {
                nodes.push((w, contour.point(s)));
            }
        }
        Ok(Self { contour, nodes })
    }

    pub fn node_positions(&self) -> impl Iterator<Item = f64> + '_ {
        self.nodes.iter().map(|(_, p)| p.s)
    }

    /// `PV ∫ density(τ) / (τ - t(s_field)) dτ` by subtracting `density(s_field)`
    /// and adding its exact closed-contour value `πi · density(s_field)`.
    pub fn pv<F: Fn(f64) -> Complex64>(&self, density: &F, s_field: f64) -> Complex64 {
        let field = self.contour.point(s_field);
        let g0 = density(s_field);
        let l = self.contour.length();
        let mut sum = Complex64::new(0.0, 0.0);
        let mut slope = None;
        for (w, p) in &self.nodes {
            let ds = self.contour.arc_difference(s_field, p.s);
            let term = if ds.abs() < 1e-7 * l {
                // removable singularity: the integrand tends to dg/ds
                *slope.get_or_insert_with(|| {
                    let h = 1e-5 * l;
                    (density(s_field + h) - density(s_field - h)) / (2.0 * h)
                })
            } else {
                (density(p.s) - g0) * p.d1 / (secant(&field, p, ds) * ds)
            };
            sum += w * term;
        }
        sum + PI * I * g0
    }
}

/// Principal value of `∫ density(τ) / (τ - t(s_field)) dτ` over `L0 ∪ L`.
pub fn cauchy_pv<F: Fn(f64) -> Complex64>(
    contour: &Contour,
    density: F,
    s_field: f64,
    rule: &QuadratureRule,
) -> Result<Complex64> {
    let eps = EPS_TIP * contour.length();
    if contour.tip_distance(s_field) < eps {
        return Err(Error::TipProximity { s: s_field, eps });
    }
    Ok(CauchyEvaluator::new(contour, rule)?.pv(&density, s_field))
}

/// `S φ(t) = (1/πi) PV ∫ φ(τ) / (τ - t) dτ` sampled at the rule's nodes.
pub fn singular_apply<F: Fn(f64) -> Complex64>(
    contour: &Contour,
    density: F,
    rule: &QuadratureRule,
) -> Result<Vec<(f64, Complex64)>> {
    let ev = CauchyEvaluator::new(contour, rule)?;
    let eps = EPS_TIP * contour.length();
    ev.node_positions()
        .map(|s| {
            if contour.tip_distance(s) < eps {
                Err(Error::TipProximity { s, eps })
            } else {
                Ok((s, ev.pv(&density, s) / (PI * I)))
            }
        })
        .collect()
}

/// Integrals of one arc's basis functions against the Cauchy kernel and the
/// two regular kernels, seen from a single field point.
#[derive(Debug, Clone)]
pub struct ArcMoments {
    /// `∫ P_k(σ) t'(σ) / (t(σ) - t0) dσ` (principal value when the field point
    /// lies on the arc).
    pub cauchy: Vec<Complex64>,
    /// `∫ k1(t0, τ) P_k(σ) t'(σ) dσ`.
    pub k1: Vec<Complex64>,
    /// `∫ k2(t0, τ) P_k(σ) conj(t'(σ)) dσ`.
    pub k2_conj: Vec<Complex64>,
}

/// Computes [`ArcMoments`] for the first `n` basis functions on `arc`.
///
/// On the field point's own arc the density is split as
/// `P(σ) = (P(σ) - P(s0)) + P(s0)`: the first part is integrated by Gauss
/// quadrature and the second exactly through the logarithm of `t - t0`. Off
/// the arc, the panels are refined geometrically toward the nearer endpoint.
pub fn arc_moments(
    contour: &Contour,
    basis: BasisKind,
    n: usize,
    arc: ArcId,
    field: &CurvePoint,
    rule: &QuadratureRule,
) -> Result<ArcMoments> {
    let (a, b) = contour.arc_bounds(arc);
    let len = b - a;
    let mid = 0.5 * (a + b);
    let l = contour.length();

    // representative of the field point closest to the arc
    let s0 = [field.s - l, field.s, field.s + l]
        .into_iter()
        .min_by(|x, y| dist_to(*x, a, b).total_cmp(&dist_to(*y, a, b)))
        .unwrap();
    let tip_eps = EPS_TIP * l;
    if (s0 - a).abs() < tip_eps || (s0 - b).abs() < tip_eps {
        return Err(Error::TipProximity {
            s: field.s,
            eps: tip_eps,
        });
    }
    let inside = s0 > a && s0 < b;

    let gl = GaussLegendre::new(rule.nodes_per_panel);
    let nodes = if inside {
        rule.arc_nodes(a, b)
    } else {
        let h = len / rule.panels_per_arc as f64;
        let (d, toward_a) = if s0 < a { (a - s0, true) } else { (s0 - b, false) };
        if d < h {
            graded_toward(&gl, rule.panels_per_arc, a, b, toward_a, d)
        } else {
            rule.arc_nodes(a, b)
        }
    };

    let mut cauchy = vec![Complex64::new(0.0, 0.0); n];
    let mut k1v = vec![Complex64::new(0.0, 0.0); n];
    let mut k2v = vec![Complex64::new(0.0, 0.0); n];
    let mut pk = vec![0.0; n];
    let mut dd = vec![0.0; n];
    let y0 = 2.0 * (s0 - mid) / len;
    let dxds = 2.0 / len;

    for (sigma, w) in nodes {
        let src = contour.point(sigma);
        let ds = sigma - s0;
        let x = 2.0 * (sigma - mid) / len;
        basis.values(x, &mut pk);
        let kp = KernelPoint::from_points(field, &src, ds);
        let kk1 = w * kp.k1() * src.d1;
        let kk2 = w * kp.k2() * src.d1.conj();
        for k in 0..n {
            k1v[k] += kk1 * pk[k];
            k2v[k] += kk2 * pk[k];
        }
        if inside {
            basis.divided_differences(x, y0, &mut dd);
            let factor = w * dxds * src.d1 / secant(field, &src, ds);
            for k in 0..n {
                cauchy[k] += factor * dd[k];
            }
        } else {
            let factor = w * src.d1 / (src.t - field.t);
            for k in 0..n {
                cauchy[k] += factor * pk[k];
            }
        }
    }

    if inside {
        let log_term = arc_log_pv(contour, field, s0, a, b);
        basis.values(y0, &mut pk);
        for k in 0..n {
            cauchy[k] += pk[k] * log_term;
        }
    }

    Ok(ArcMoments {
        cauchy,
        k1: k1v,
        k2_conj: k2v,
    })
}

fn dist_to(s: f64, a: f64, b: f64) -> f64 {
    if s < a {
        a - s
    } else if s > b {
        s - b
    } else {
        0.0
    }
}

/// `PV ∫_a^b t'(σ) / (t(σ) - t0) dσ` for `t0 = t(s0)`, `a < s0 < b`.
///
/// Writing `t(σ) - t0 = (σ - s0) t'(s0) h(σ)` with `h` smooth and `h(s0) = 1`,
/// the value is `ln|t(b) - t0| - ln|t(a) - t0| + i (arg h(b) - arg h(a))`,
/// where `arg h` is tracked continuously through `s0`.
fn arc_log_pv(contour: &Contour, field: &CurvePoint, s0: f64, a: f64, b: f64) -> Complex64 {
    const STEPS: usize = 128;
    let h_at = |sigma: f64| -> Complex64 {
        let src = contour.point(sigma);
        secant(field, &src, sigma - s0) / field.d1
    };
    let unwrap_to = |end: f64| -> f64 {
        let mut arg = 0.0;
        let mut prev = Complex64::new(1.0, 0.0);
        for j in 1..=STEPS {
            let sigma = s0 + (end - s0) * j as f64 / STEPS as f64;
            let h = h_at(sigma);
            arg += (h / prev).arg();
            prev = h;
        }
        arg
    };
    let ta = contour.point(a).t;
    let tb = contour.point(b).t;
    let re = (tb - field.t).norm().ln() - (ta - field.t).norm().ln();
    let im = unwrap_to(b) - unwrap_to(a);
    Complex64::new(re, im)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn unit() -> Contour {
        Contour::circle(1.0, (0.0, PI)).unwrap()
    }

    #[test]
    fn k1_diagonal_on_unit_circle() {
        let c = unit();
        for s in [0.3, 2.0, 4.5] {
            let v = k1(&c, s, s);
            assert!((v - Complex64::from_polar(1.0, -s)).norm() < 1e-14);
        }
    }

    #[test]
    fn k2_diagonal_on_unit_circle() {
        let c = unit();
        for s in [0.3, 2.0, 4.5] {
            let v = k2(&c, s, s);
            assert!((v - Complex64::from_polar(1.0, s)).norm() < 1e-14);
        }
    }

    #[test]
    fn kernels_at_antipodal_points() {
        let c = unit();
        assert!((k1(&c, 0.0, PI) - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        assert!((k2(&c, 0.0, PI) - Complex64::new(-1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn kernels_vanish_on_nearly_straight_contour() {
        let c = Contour::circle(1e7, (0.0, 1.0)).unwrap();
        for (a, b) in [(0.1, 0.7), (2.0, 5.0)] {
            assert!(k1(&c, a, b).norm() < 1e-6);
            assert!(k2(&c, a, b).norm() < 1e-6);
        }
    }

    #[test]
    fn kernels_match_direct_formulas_off_diagonal() {
        let c = Contour::ellipse(2.0, 1.0, (0.0, 1.0)).unwrap();
        for (s, h) in [(0.5, 1.3), (3.0, -0.2), (7.0, 1e-2)] {
            let t0 = c.point(s);
            let tau = c.position(s + h);
            let d = tau - t0.t;
            let r = t0.d1.conj() / t0.d1;
            let direct1 = -1.0 / d + r / d.conj();
            let direct2 = 1.0 / d.conj() - d / (d.conj() * d.conj()) * r;
            assert!((k1(&c, s, s + h) - direct1).norm() < 1e-11);
            assert!((k2(&c, s, s + h) - direct2).norm() < 1e-11);
        }
    }

    #[test]
    fn kernels_continuous_through_diagonal() {
        let c = Contour::ellipse(2.0, 1.0, (0.0, 1.0)).unwrap();
        for s in [0.5, 3.0, 7.0] {
            let p = c.point(s);
            let diag1 = I * p.curvature / p.d1;
            let diag2 = -I * p.curvature / p.d1.conj();
            for h in [1e-9, 1e-7, 1e-5, 1e-3] {
                assert!((k1(&c, s, s + h) - diag1).norm() < 4.0 * h, "h={h}");
                assert!((k2(&c, s, s - h) - diag2).norm() < 4.0 * h, "h={h}");
            }
        }
    }

    #[test]
    fn pv_of_constant_density() {
        let c = unit();
        let rule = QuadratureRule::default();
        for s in [0.5, 2.0, 4.0] {
            let v = cauchy_pv(&c, |_| Complex64::new(1.0, 0.0), s, &rule).unwrap();
            assert!((v - PI * I).norm() < 1e-12);
        }
    }

    #[test]
    fn pv_of_position_density() {
        let c = unit();
        let rule = QuadratureRule::default();
        let s = 1.1;
        let t = c.position(s);
        let v = cauchy_pv(&c, |x| c.position(x), s, &rule).unwrap();
        assert!((v - PI * I * t).norm() < 1e-12);
        let v2 = cauchy_pv(&c, |x| c.position(x).powi(2), s, &rule).unwrap();
        assert!((v2 - PI * I * t * t).norm() < 1e-12);
    }

    #[test]
    fn pv_matches_symmetric_exclusion_oracle() {
        // periodic midpoint sums straddling the pole converge to the PV
        let c = unit();
        let s0 = 2.3;
        let t0 = c.position(s0);
        let dens = |x: f64| Complex64::new(x.cos().exp(), (2.0 * x).sin());
        let m = 4000;
        let h = TAU / m as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..m {
            let x = s0 + (j as f64 + 0.5) * h;
            let p = c.point(x);
            acc += dens(x) * p.d1 / (p.t - t0) * h;
        }
        let v = cauchy_pv(&c, dens, s0, &QuadratureRule::default()).unwrap();
        assert!((v - acc).norm() < 1e-8, "{v} vs {acc}");
    }

    #[test]
    fn pv_refuses_tips() {
        let c = unit();
        let r = cauchy_pv(&c, |_| Complex64::new(1.0, 0.0), PI, &QuadratureRule::default());
        assert!(matches!(r, Err(Error::TipProximity { .. })));
    }

    #[test]
    fn singular_operator_reproduces_boundary_values_of_analytic_functions() {
        let c = unit();
        let out = singular_apply(&c, |x| c.position(x), &QuadratureRule::default()).unwrap();
        for (s, v) in out {
            assert!((v - c.position(s)).norm() < 1e-10, "s={s}: {v} vs {}", c.position(s));
        }
        let out = singular_apply(&c, |_| Complex64::new(1.0, 0.0), &QuadratureRule::default()).unwrap();
        assert!(out.iter().all(|(_, v)| (v - 1.0).norm() < 1e-12));
    }

    #[test]
    fn pv_is_linear() {
        let c = Contour::ellipse(1.5, 1.0, (0.2, 2.0)).unwrap();
        let rule = QuadratureRule::default();
        let f = |x: f64| Complex64::new(x.sin(), (2.0 * x).cos());
        let g = |x: f64| Complex64::new(x.cos() * 0.3, 1.0);
        let (alpha, beta) = (Complex64::new(0.7, -1.2), Complex64::new(-2.0, 0.5));
        let s = 3.3;
        let lhs = cauchy_pv(&c, |x| alpha * f(x) + beta * g(x), s, &rule).unwrap();
        let rhs = alpha * cauchy_pv(&c, f, s, &rule).unwrap() + beta * cauchy_pv(&c, g, s, &rule).unwrap();
        assert!((lhs - rhs).norm() < 1e-11);
    }

    /// Arc moments of piecewise polynomials must agree with a closed-contour PV
    /// when the density is assembled arc by arc.
    #[test]
    fn arc_moments_sum_to_closed_contour_pv() {
        let c = Contour::ellipse(1.3, 0.8, (-0.4, 1.9)).unwrap();
        let rule = QuadratureRule::default();
        let n = 6;
        for s_field in [0.4, c.l0() - 1e-3, c.l0() + 0.01, c.length() - 0.5] {
            let field = c.point(s_field);
            let mut total = Complex64::new(0.0, 0.0);
            for arc in ArcId::BOTH {
                let m = arc_moments(&c, BasisKind::Legendre, n, arc, &field, &rule).unwrap();
                // density = P_5 on each arc
                total += m.cauchy[5];
            }
            let dens = |x: f64| {
                let arc = c.arc_of(x);
                let (a, b) = c.arc_bounds(arc);
                let mut v = vec![0.0; n];
                BasisKind::Legendre.values(2.0 * (c.wrap(x) - 0.5 * (a + b)) / (b - a), &mut v);
                Complex64::new(v[5], 0.0)
            };
            // graded closed-contour rule as the reference
            let fine = QuadratureRule::new(24, 64).with_tip_grading(30);
            let reference = CauchyEvaluator::new(&c, &fine).unwrap().pv(&dens, s_field);
            assert!((total - reference).norm() < 1e-7, "s={s_field}: {total} vs {reference}");
        }
    }
}
