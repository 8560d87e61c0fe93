//! Closed contour `L0 ∪ L` in arc-length parametrization.
//!
//! `s ∈ [0, l0]` traces the crack and `s ∈ [l0, l]` the bonded arc, both
//! counterclockwise. The junctions `s = 0 (= l)` and `s = l0` are the crack tips.
//! All arc-length arithmetic wraps modulo `l`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::quadrature::GaussLegendre;
use crate::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Which of the two arcs a point belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArcId {
    /// The crack `L0`, `s ∈ [0, l0]`.
    Crack,
    /// The bonded interface `L`, `s ∈ [l0, l]`.
    Bonded,
}

impl ArcId {
    pub const BOTH: [ArcId; 2] = [ArcId::Crack, ArcId::Bonded];

    pub fn index(self) -> usize {
        match self {
            ArcId::Crack => 0,
            ArcId::Bonded => 1,
        }
    }
}

/// Position, derivatives up to third order and curvature at one arc length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub s: f64,
    pub t: Complex64,
    pub d1: Complex64,
    pub d2: Complex64,
    pub d3: Complex64,
    pub curvature: f64,
    pub curvature_ds: f64,
}

#[derive(Debug, Clone)]
enum Curve {
    Circle { radius: f64 },
    Parametric { kind: Parametric, arc: ArcMap },
}

/// A smooth closed curve `z(θ)`, `θ ∈ [0, 2π)`, counterclockwise.
#[derive(Debug, Clone)]
enum Parametric {
    Ellipse { a: f64, b: f64 },
    Fourier { modes: Vec<(f64, Complex64)> },
}

impl Parametric {
    /// `z` and its first three θ-derivatives.
    fn eval(&self, theta: f64) -> [Complex64; 4] {
        match self {
            Parametric::Ellipse { a, b } => {
                let (s, c) = theta.sin_cos();
                [
                    Complex64::new(a * c, b * s),
                    Complex64::new(-a * s, b * c),
                    Complex64::new(-a * c, -b * s),
                    Complex64::new(a * s, -b * c),
                ]
            }
            Parametric::Fourier { modes } => {
                let mut out = [Complex64::new(0.0, 0.0); 4];
                for &(k, c) in modes {
                    let e = c * Complex64::from_polar(1.0, k * theta);
                    let ik = Complex64::new(0.0, k);
                    out[0] += e;
                    out[1] += ik * e;
                    out[2] += ik * ik * e;
                    out[3] += ik * ik * ik * e;
                }
                out
            }
        }
    }

    fn speed(&self, theta: f64) -> f64 {
        self.eval(theta)[1].norm()
    }
}

/// Cumulative arc length on a uniform θ grid, inverted by Newton iteration.
#[derive(Debug, Clone)]
struct ArcMap {
    gl: GaussLegendre,
    dtheta: f64,
    cumulative: Vec<f64>,
}

const ARC_MAP_INTERVALS: usize = 512;

impl ArcMap {
    fn new(curve: &Parametric) -> Self {
        let gl = GaussLegendre::new(20);
        let dtheta = TAU / ARC_MAP_INTERVALS as f64;
        let mut cumulative = Vec::with_capacity(ARC_MAP_INTERVALS + 1);
        cumulative.push(0.0);
        let mut acc = 0.0;
        for i in 0..ARC_MAP_INTERVALS {
            let a = i as f64 * dtheta;
            acc += integrate_speed(&gl, curve, a, a + dtheta);
            cumulative.push(acc);
        }
        Self { gl, dtheta, cumulative }
    }

    fn total(&self) -> f64 {
        self.cumulative[ARC_MAP_INTERVALS]
    }

    /// Arc length from θ = 0 to θ ∈ [0, 2π].
    fn arc_of(&self, curve: &Parametric, theta: f64) -> f64 {
        let theta = theta.rem_euclid(TAU);
        let i = ((theta / self.dtheta) as usize).min(ARC_MAP_INTERVALS - 1);
        let a = i as f64 * self.dtheta;
        self.cumulative[i] + integrate_speed(&self.gl, curve, a, theta)
    }

    /// θ ∈ [0, 2π) with arc length `s` from θ = 0.
    fn theta_of(&self, curve: &Parametric, s: f64) -> f64 {
        let s = s.rem_euclid(self.total());
        let i = match self.cumulative.binary_search_by(|v| v.partial_cmp(&s).unwrap()) {
            Ok(i) => return (i as f64 * self.dtheta).min(TAU),
            Err(i) => i.saturating_sub(1).min(ARC_MAP_INTERVALS - 1),
        };
        let a = i as f64 * self.dtheta;
        let frac = (s - self.cumulative[i]) / (self.cumulative[i + 1] - self.cumulative[i]);
        let mut theta = a + frac * self.dtheta;
        for _ in 0..30 {
            let f = self.cumulative[i] + integrate_speed(&self.gl, curve, a, theta) - s;
            let step = f / curve.speed(theta);
            theta -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        theta
    }
}

fn integrate_speed(gl: &GaussLegendre, curve: &Parametric, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    gl.nodes
        .iter()
        .zip(&gl.weights)
        .map(|(x, w)| w * curve.speed(mid + half * x))
        .sum::<f64>()
        * half
}

/// The closed contour with the crack at the start of the arc-length range.
#[derive(Debug, Clone)]
pub struct Contour {
    curve: Curve,
    /// Curve parameter (polar angle for circles) at `s = 0`.
    theta_start: f64,
    /// Arc length of `theta_start` measured along the underlying curve map.
    s_offset: f64,
    l0: f64,
    l: f64,
}

fn check_span(crack: (f64, f64)) -> Result<f64> {
    let span = crack.1 - crack.0;
    if !span.is_finite() || span <= 0.0 || span >= TAU {
        return Err(Error::Contour(format!("crack arc span must lie in (0, 2π), got {span}")));
    }
    Ok(span)
}

impl Contour {
    /// Circle of `radius` with the crack over polar angles `crack.0 ..= crack.1`.
    pub fn circle(radius: f64, crack: (f64, f64)) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::Contour(format!("radius must be positive, got {radius}")));
        }
        let span = check_span(crack)?;
        Ok(Self {
            curve: Curve::Circle { radius },
            theta_start: crack.0,
            s_offset: 0.0,
            l0: radius * span,
            l: TAU * radius,
        })
    }

    /// Ellipse `x²/a² + y²/b² = 1` with the crack over polar angles `crack`.
    pub fn ellipse(a: f64, b: f64, crack: (f64, f64)) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
            return Err(Error::Contour(format!("semi-axes must be positive, got ({a}, {b})")));
        }
        check_span(crack)?;
        let to_param = |phi: f64| (a * phi.sin()).atan2(b * phi.cos());
        let kind = Parametric::Ellipse { a, b };
        Self::parametric(kind, to_param(crack.0), to_param(crack.1))
    }

    /// Closed curve through `points`, sampled uniformly in some parameter, with
    /// the crack over polar angles `crack` about the origin. The curve is
    /// interpolated by a trigonometric polynomial; it must be star-shaped about
    /// the origin.
    pub fn from_samples(points: &[Complex64], crack: (f64, f64)) -> Result<Self> {
        let n = points.len();
        if n < 8 {
            return Err(Error::Contour(format!("sampled contour needs at least 8 points, got {n}")));
        }
        check_span(crack)?;
        let mut pts = points.to_vec();
        let area: f64 = (0..n)
            .map(|j| {
                let p = pts[j];
                let q = pts[(j + 1) % n];
                p.re * q.im - q.re * p.im
            })
            .sum();
        if area.abs() < 1e-14 {
            return Err(Error::Contour("sampled contour encloses no area".into()));
        }
        if area < 0.0 {
            pts.reverse();
        }
        let half = n as i64 / 2;
        let mut modes = Vec::new();
        for k in -half..=half {
            if n.is_multiple_of(2) && k == -half {
                continue;
            }
            let mut c = Complex64::new(0.0, 0.0);
            for (j, p) in pts.iter().enumerate() {
                c += p * Complex64::from_polar(1.0, -(k as f64) * TAU * j as f64 / n as f64);
            }
            c /= n as f64;
            if n.is_multiple_of(2) && k == half {
                // split the Nyquist mode evenly between ±n/2
                modes.push((k as f64, 0.5 * c));
                modes.push((-(k as f64), 0.5 * c));
            } else {
                modes.push((k as f64, c));
            }
        }
        let kind = Parametric::Fourier { modes };
        let th0 = polar_to_param(&kind, crack.0)?;
        let th1 = polar_to_param(&kind, crack.1)?;
        Self::parametric(kind, th0, th1)
    }

    fn parametric(kind: Parametric, th0: f64, th1: f64) -> Result<Self> {
        let arc = ArcMap::new(&kind);
        let l = arc.total();
        let s0 = arc.arc_of(&kind, th0);
        let s1 = arc.arc_of(&kind, th1);
        let l0 = (s1 - s0).rem_euclid(l);
        if !(l0 > 0.0 && l0 < l) {
            return Err(Error::Contour(format!("crack length {l0} must lie strictly inside (0, {l})")));
        }
        Ok(Self {
            curve: Curve::Parametric { kind, arc },
            theta_start: th0,
            s_offset: s0,
            l0,
            l,
        })
    }

    /// Arc length of the crack `L0`.
    pub fn l0(&self) -> f64 {
        self.l0
    }

    /// Total arc length of `L0 ∪ L`.
    pub fn length(&self) -> f64 {
        self.l
    }

    pub fn bonded_length(&self) -> f64 {
        self.l - self.l0
    }

    /// Always true: every constructor orients the contour counterclockwise.
    pub fn is_counterclockwise(&self) -> bool {
        true
    }

    pub fn arc_bounds(&self, arc: ArcId) -> (f64, f64) {
        match arc {
            ArcId::Crack => (0.0, self.l0),
            ArcId::Bonded => (self.l0, self.l),
        }
    }

    /// Arc containing `s` (wrapped); tips are assigned to the crack.
    pub fn arc_of(&self, s: f64) -> ArcId {
        let s = self.wrap(s);
        if s <= self.l0 {
            ArcId::Crack
        } else {
            ArcId::Bonded
        }
    }

    pub fn wrap(&self, s: f64) -> f64 {
        if (0.0..=self.l).contains(&s) {
            s
        } else {
            s.rem_euclid(self.l)
        }
    }

    /// Shortest signed arc-length difference `b - a` on the closed contour.
    pub fn arc_difference(&self, a: f64, b: f64) -> f64 {
        let d = (b - a).rem_euclid(self.l);
        if d > 0.5 * self.l {
            d - self.l
        } else {
            d
        }
    }

    /// Distance in arc length from `s` to the nearer crack tip.
    pub fn tip_distance(&self, s: f64) -> f64 {
        let s = self.wrap(s);
        s.min(self.l - s).min((s - self.l0).abs())
    }

    pub fn point(&self, s: f64) -> CurvePoint {
        match &self.curve {
            Curve::Circle { radius } => {
                let theta = self.theta_start + s / radius;
                let e = Complex64::from_polar(1.0, theta);
                CurvePoint {
                    s,
                    t: radius * e,
                    d1: I * e,
                    d2: -e / *radius,
                    d3: -I * e / (radius * radius),
                    curvature: 1.0 / radius,
                    curvature_ds: 0.0,
                }
            }
            Curve::Parametric { kind, arc } => {
                let theta = arc.theta_of(kind, self.s_offset + self.wrap(s));
                let [z, z1, z2, z3] = kind.eval(theta);
                let v = z1.norm();
                let num = (z1.conj() * z2).im;
                let num_d = (z1.conj() * z3).im;
                let v_d = (z1.conj() * z2).re / v;
                let curvature = num / v.powi(3);
                let curvature_dtheta = num_d / v.powi(3) - 3.0 * num * v_d / v.powi(4);
                let curvature_ds = curvature_dtheta / v;
                let d1 = z1 / v;
                let d2 = I * curvature * d1;
                let d3 = (I * curvature_ds - curvature * curvature) * d1;
                CurvePoint {
                    s,
                    t: z,
                    d1,
                    d2,
                    d3,
                    curvature,
                    curvature_ds,
                }
            }
        }
    }

    pub fn position(&self, s: f64) -> Complex64 {
        self.point(s).t
    }

    /// Derivative of `t(s)` of order 1, 2 or 3.
    pub fn derivative(&self, s: f64, order: usize) -> Result<Complex64> {
        let p = self.point(s);
        match order {
            1 => Ok(p.d1),
            2 => Ok(p.d2),
            3 => Ok(p.d3),
            _ => Err(Error::InvalidArgument(format!(
                "derivative order must be 1, 2 or 3, got {order}"
            ))),
        }
    }

    /// Signed curvature `Im(t'' conj(t'))`, positive on a counterclockwise circle.
    pub fn curvature(&self, s: f64) -> f64 {
        let p = self.point(s);
        (p.d2 * p.d1.conj()).im
    }

    pub fn curvature_derivative(&self, s: f64) -> f64 {
        self.point(s).curvature_ds
    }
}

fn polar_to_param(kind: &Parametric, phi: f64) -> Result<f64> {
    const M: usize = 2048;
    let mut prev = kind.eval(0.0)[0].arg();
    let mut unwrapped = vec![prev];
    let mut acc = prev;
    for j in 1..=M {
        let a = kind.eval(TAU * j as f64 / M as f64)[0].arg();
        let mut d = a - prev;
        if d > PI {
            d -= TAU;
        } else if d < -PI {
            d += TAU;
        }
        if d <= 0.0 {
            return Err(Error::Contour("sampled contour is not star-shaped about the origin".into()));
        }
        acc += d;
        unwrapped.push(acc);
        prev = a;
    }
    let base = unwrapped[0];
    let target = base + (phi - base).rem_euclid(TAU);
    let j = unwrapped.partition_point(|v| *v < target).clamp(1, M);
    let (mut lo, mut hi) = (TAU * (j - 1) as f64 / M as f64, TAU * j as f64 / M as f64);
    let v_lo = unwrapped[j - 1];
    let a_lo = kind.eval(lo)[0].arg();
    let unwrap_at = |th: f64| {
        let mut d = kind.eval(th)[0].arg() - a_lo;
        if d > PI {
            d -= TAU;
        } else if d <= -PI {
            d += TAU;
        }
        v_lo + d
    };
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if unwrap_at(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn semicircular_crack_on_unit_circle() {
        let c = Contour::circle(1.0, (0.0, PI)).unwrap();
        assert_abs_diff_eq!(c.l0(), PI, epsilon = 1e-15);
        assert_abs_diff_eq!(c.length(), TAU, epsilon = 1e-15);
        for s in [0.0, 0.4, 2.0, 5.0] {
            let t = c.position(s);
            assert!((t - Complex64::from_polar(1.0, s)).norm() < 1e-15);
        }
    }

    #[test]
    fn symmetric_small_crack() {
        let c = Contour::circle(1.0, (-PI / 6.0, PI / 6.0)).unwrap();
        assert_abs_diff_eq!(c.l0(), PI / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c.length(), TAU, epsilon = 1e-15);
        assert!((c.position(0.0) - Complex64::from_polar(1.0, -PI / 6.0)).norm() < 1e-15);
    }

    #[test]
    fn radius_two_reparametrized() {
        let c = Contour::circle(2.0, (0.0, PI)).unwrap();
        assert_abs_diff_eq!(c.l0(), TAU, epsilon = 1e-14);
        for s in [0.0, 1.0, 3.0] {
            assert!((c.position(s) - 2.0 * Complex64::from_polar(1.0, s / 2.0)).norm() < 1e-14);
        }
        assert_abs_diff_eq!(c.curvature(1.3), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn unit_circle_derivatives_at_origin() {
        let c = Contour::circle(1.0, (0.0, PI)).unwrap();
        assert!((c.derivative(0.0, 1).unwrap() - I).norm() < 1e-15);
        assert!((c.derivative(0.0, 2).unwrap() + 1.0).norm() < 1e-15);
        assert!((c.derivative(0.0, 3).unwrap() + I).norm() < 1e-15);
        assert!(c.derivative(0.0, 4).is_err());
        assert!(c.derivative(0.0, 0).is_err());
        assert_abs_diff_eq!(c.curvature(2.2), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn degenerate_arcs_rejected() {
        assert!(Contour::circle(1.0, (0.0, 0.0)).is_err());
        assert!(Contour::circle(1.0, (1.0, 0.5)).is_err());
        assert!(Contour::circle(1.0, (0.0, TAU)).is_err());
        assert!(Contour::circle(-1.0, (0.0, 1.0)).is_err());
        assert!(Contour::ellipse(1.0, 0.0, (0.0, 1.0)).is_err());
    }

    #[test]
    fn ellipse_curvature_matches_finite_differences() {
        let c = Contour::ellipse(2.0, 1.0, (-0.5, 1.0)).unwrap();
        let h = 1e-3;
        for s in [0.0, 0.7, 2.9, 6.1] {
            let tm = c.position(s - h);
            let t0 = c.position(s);
            let tp = c.position(s + h);
            let d1 = (tp - tm) / (2.0 * h);
            let d2 = (tp - 2.0 * t0 + tm) / (h * h);
            let fd = (d2 * d1.conj()).im / d1.norm().powi(3);
            assert!((fd - c.curvature(s)).abs() < 1e-6, "s={s}: {fd} vs {}", c.curvature(s));
        }
    }

    #[test]
    fn ellipse_known_curvature_at_vertex() {
        // at the end of the major axis ϱ = a / b²
        let c = Contour::ellipse(2.0, 1.0, (0.0, 1.0)).unwrap();
        assert_abs_diff_eq!(c.curvature(0.0), 2.0, epsilon = 1e-10);
        assert!((c.position(0.0) - Complex64::new(2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn sampled_circle_matches_analytic_circle() {
        let pts: Vec<Complex64> = (0..64).map(|j| Complex64::from_polar(1.5, TAU * j as f64 / 64.0)).collect();
        let c = Contour::from_samples(&pts, (0.2, 2.0)).unwrap();
        assert_abs_diff_eq!(c.length(), 3.0 * PI, epsilon = 1e-10);
        assert_abs_diff_eq!(c.l0(), 1.5 * 1.8, epsilon = 1e-9);
        assert_abs_diff_eq!(c.curvature(1.0), 1.0 / 1.5, epsilon = 1e-9);
        assert!((c.position(0.0) - Complex64::from_polar(1.5, 0.2)).norm() < 1e-9);
    }

    #[test]
    fn clockwise_samples_are_reoriented() {
        let pts: Vec<Complex64> = (0..32).map(|j| Complex64::from_polar(1.0, -TAU * j as f64 / 32.0)).collect();
        let c = Contour::from_samples(&pts, (0.0, 1.0)).unwrap();
        assert!(c.curvature(0.5) > 0.0);
    }

    #[test]
    fn arc_bookkeeping() {
        let c = Contour::circle(1.0, (0.0, PI)).unwrap();
        assert_eq!(c.arc_of(1.0), ArcId::Crack);
        assert_eq!(c.arc_of(4.0), ArcId::Bonded);
        assert_abs_diff_eq!(c.arc_difference(6.0, 0.2), 0.2 + TAU - 6.0, epsilon = 1e-14);
        assert_abs_diff_eq!(c.tip_distance(3.0), PI - 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(c.tip_distance(6.2), TAU - 6.2, epsilon = 1e-14);
    }
}
