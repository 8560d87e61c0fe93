//! Independent checks of the operators and of solved densities.
//!
//! None of these reuse the assembled matrix. Quadratures run at twice the
//! assembly resolution or finer, so agreement is evidence rather than
//! tautology.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{ArcId, Contour, CurvePoint};
use crate::kernels::{CauchyEvaluator, KernelPoint};
use crate::model::{m_coefficients, ProblemSetup};
use crate::quadrature::QuadratureRule;
use crate::solver::{Density, DensitySet};
use crate::Result;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// One named check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckEntry {
    pub name: String,
    /// The identity being tested, written out.
    pub identity: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckEntry {
    pub fn new(name: impl Into<String>, identity: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            identity: identity.into(),
            value,
            tolerance,
            // NaN never passes
            pass: value <= tolerance,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<CheckEntry>,
}

impl ValidationReport {
    pub fn push(&mut self, entry: CheckEntry) {
        self.checks.push(entry);
    }

    pub fn extend(&mut self, entries: impl IntoIterator<Item = CheckEntry>) {
        self.checks.extend(entries);
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&CheckEntry> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Tolerances of the solution checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub inversion: f64,
    pub boundary_conditions: f64,
    pub trace_consistency: f64,
    pub conservation: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            inversion: 1e-5,
            boundary_conditions: 0.02,
            trace_consistency: 1e-3,
            conservation: 1e-6,
        }
    }
}

/// A closed-contour trial density for the inversion check.
#[derive(Debug, Clone, PartialEq)]
pub enum TrialDensity {
    /// `Σ a_k τ^k + b_k τ̄^k`, `k = 0..`.
    Polynomial { a: Vec<Complex64>, b: Vec<Complex64> },
    /// `Σ c_m e^{2πi m s / l}`, `m = -M..=M`.
    Trigonometric { c: Vec<Complex64> },
}

impl TrialDensity {
    pub fn eval(&self, contour: &Contour, s: f64) -> Complex64 {
        match self {
            TrialDensity::Polynomial { a, b } => {
                let t = contour.position(s);
                let horner = |c: &[Complex64], z: Complex64| c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, v| acc * z + v);
                horner(a, t) + horner(b, t.conj())
            }
            TrialDensity::Trigonometric { c } => {
                let m = (c.len() / 2) as i64;
                let th = 2.0 * PI * s / contour.length();
                c.iter()
                    .enumerate()
                    .map(|(j, v)| v * Complex64::from_polar(1.0, (j as i64 - m) as f64 * th))
                    .sum()
            }
        }
    }
}

/// `count` seeded trial densities alternating between polynomials of degree 6
/// in `τ, τ̄` and trigonometric sums of order 6.
pub fn random_trials(seed: u64, count: usize) -> Vec<TrialDensity> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = |n: usize| -> Vec<Complex64> {
        (0..n)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect()
    };
    (0..count)
        .map(|j| {
            if j % 2 == 0 {
                TrialDensity::Polynomial { a: c(7), b: c(7) }
            } else {
                TrialDensity::Trigonometric { c: c(13) }
            }
        })
        .collect()
}

/// `count` points spread over the contour, offset so none falls on a
/// quadrature node.
pub fn off_node_samples(contour: &Contour, count: usize) -> Vec<f64> {
    let l = contour.length();
    (0..count).map(|j| l * (j as f64 + 0.2917) / count as f64).collect()
}

/// Largest `|S²φ - φ|` at `samples`, `S φ = (1/πi) PV ∫ φ(τ) / (τ - t) dτ`.
pub fn inversion_error<F: Fn(f64) -> Complex64>(
    contour: &Contour,
    rule: &QuadratureRule,
    phi: F,
    samples: &[f64],
) -> Result<f64> {
    let ev = CauchyEvaluator::new(contour, rule)?;
    let s_phi = |s: f64| ev.pv(&phi, s) / (PI * I);
    Ok(samples
        .iter()
        .map(|&s| (ev.pv(&s_phi, s) / (PI * I) - phi(s)).norm())
        .fold(0.0, f64::max))
}

pub fn inversion_check(
    contour: &Contour,
    rule: &QuadratureRule,
    trial: &TrialDensity,
    samples: &[f64],
    tolerance: f64,
) -> Result<CheckEntry> {
    let err = inversion_error(contour, rule, |s| trial.eval(contour, s), samples)?;
    Ok(CheckEntry::new(
        "cauchy_inversion",
        "S(S phi) = phi on the closed contour",
        err,
        tolerance,
    ))
}

/// `d^k/ds^k (u1 + iu2)` for `k = 1, 2, 3` from the displacement derivative
/// `du/dt = factor · g(s)`.
fn displacement_derivatives(
    dset: &DensitySet,
    g: Density,
    arc: ArcId,
    p: &CurvePoint,
    factor: Complex64,
) -> Result<[Complex64; 3]> {
    let s = p.s;
    let g0 = dset.value(g, arc, s)?;
    let g1 = dset.derivative(g, arc, s, 1)?;
    let g2 = dset.derivative(g, arc, s, 2)?;
    Ok([
        factor * g0 * p.d1,
        factor * (g1 * p.d1 + g0 * p.d2),
        factor * (g2 * p.d1 + 2.0 * g1 * p.d2 + g0 * p.d3),
    ])
}

/// Right side of the linearized surface-tension condition without loads.
fn tension_term(gamma: f64, m: &[Complex64; 4], d1: Complex64, u: &[Complex64; 3]) -> Complex64 {
    0.5 * gamma * (m[0] * u[0] + m[1] * u[0].conj() + m[2] * u[1] + m[3] * u[1].conj() + d1.conj() * u[2] - d1 * u[2].conj())
}

/// Arc-length samples in the middle `fraction` of an arc.
pub fn central_samples(contour: &Contour, arc: ArcId, fraction: f64, count: usize) -> Vec<f64> {
    let (a, b) = contour.arc_bounds(arc);
    let half = 0.5 * fraction * (b - a);
    let mid = 0.5 * (a + b);
    let n = count.max(2);
    (0..n).map(|j| mid - half + 2.0 * half * j as f64 / (n - 1) as f64).collect()
}

fn scale_of(setup: &ProblemSetup) -> f64 {
    let s = setup.stress_scale();
    if s > 0.0 {
        s
    } else {
        1.0
    }
}

/// Largest mismatch, over `crack` and `bonded` samples, of the original
/// surface-tension boundary conditions written with full displacement
/// derivatives and the curve's `m` coefficients, relative to the stress scale.
pub fn original_bc_residual(
    dset: &DensitySet,
    setup: &ProblemSetup,
    crack: &[f64],
    bonded: &[f64],
    tolerance: f64,
) -> Result<CheckEntry> {
    let c0 = I * (setup.inclusion.kappa() + 1.0) / (2.0 * setup.inclusion.mu());
    let c = -I * (setup.matrix.kappa() + 1.0) / (2.0 * setup.matrix.mu());
    let st = &setup.surface;
    let mut worst: f64 = 0.0;
    for (arc, samples) in [(ArcId::Crack, crack), (ArcId::Bonded, bonded)] {
        for &s in samples {
            let p = setup.contour.point(s);
            let m = m_coefficients(&setup.contour, s);
            let u0 = displacement_derivatives(dset, Density::G0Prime, arc, &p, c0)?;
            let plus = 2.0 * dset.value(Density::Q0, arc, s)?;
            let minus = -2.0 * dset.value(Density::Q, arc, s)?;
            match arc {
                ArcId::Crack => {
                    let (f1, f2) = setup.tractions.at(s);
                    let u = displacement_derivatives(dset, Density::GPrime, arc, &p, c)?;
                    worst = worst.max((plus - tension_term(st.plus, &m, p.d1, &u0) - f1).norm());
                    worst = worst.max((minus - tension_term(st.minus, &m, p.d1, &u) - f2).norm());
                }
                ArcId::Bonded => {
                    worst = worst.max((plus - minus - tension_term(st.interface, &m, p.d1, &u0)).norm());
                }
            }
        }
    }
    Ok(CheckEntry::new(
        "surface_tension_conditions",
        "traction = surface-tension term of du/ds, d2u/ds2, d3u/ds3 + applied load, on both crack faces and the interface",
        worst / scale_of(setup),
        tolerance,
    ))
}

/// Contour nodes of `rule` with geometry.
fn contour_nodes(contour: &Contour, rule: &QuadratureRule) -> Vec<(ArcId, f64, CurvePoint)> {
    let mut out = Vec::new();
    for arc in ArcId::BOTH {
        let (a, b) = contour.arc_bounds(arc);
        for (s, w) in rule.arc_nodes(a, b) {
            out.push((arc, w, contour.point(s)));
        }
    }
    out
}

/// Integral part of the one-sided traction at `s` for one body's densities:
/// everything except `±q` and the far-field terms.
fn traction_integrals<Q, G>(
    contour: &Contour,
    ev: &CauchyEvaluator,
    nodes: &[(ArcId, f64, CurvePoint)],
    s: f64,
    kappa: f64,
    q: Q,
    g: G,
) -> Complex64
where
    Q: Fn(f64) -> Complex64,
    G: Fn(f64) -> Complex64,
{
    let field = contour.point(s);
    let (cq, cg) = (ev.pv(&q, s), ev.pv(&g, s));
    let zero = Complex64::new(0.0, 0.0);
    let (mut k1q, mut k1g, mut k2q, mut k2g) = (zero, zero, zero, zero);
    for (_, w, p) in nodes {
        let kp = KernelPoint::from_points(&field, p, contour.arc_difference(s, p.s));
        let dt = p.d1 * *w;
        let qv = q(p.s) * dt;
        let gv = g(p.s) * dt;
        let (k1, k2) = (kp.k1(), kp.k2());
        k1q += k1 * qv;
        k1g += k1 * gv;
        k2q += k2 * qv.conj();
        k2g += k2 * gv.conj();
    }
    let a = 1.0 / ((kappa + 1.0) * PI * I);
    (2.0 * cg + k1g + k2g) / (2.0 * PI) + a * ((1.0 - kappa) * cq - kappa * k1q) - a * k2q
}

/// One-sided stress traces `((σn + iτn)⁺₀, (σn + iτn)⁻)` at `s` from the full
/// integral representations of each body.
pub fn integral_traces(dset: &DensitySet, setup: &ProblemSetup, rule: &QuadratureRule, s: f64) -> Result<(Complex64, Complex64)> {
    let contour = &setup.contour;
    let ev = CauchyEvaluator::new(contour, rule)?;
    let nodes = contour_nodes(contour, rule);
    let conj_ratio = {
        let d1 = contour.point(s).d1;
        d1.conj() / d1
    };
    let val = |d: Density| move |x: f64| dset.value_at(d, x).unwrap_or_default();
    let inc = traction_integrals(
        contour,
        &ev,
        &nodes,
        s,
        setup.inclusion.kappa(),
        val(Density::Q0),
        val(Density::G0Prime),
    );
    let mat = traction_integrals(
        contour,
        &ev,
        &nodes,
        s,
        setup.matrix.kappa(),
        val(Density::Q),
        val(Density::GPrime),
    );
    let (q0, q) = (dset.value_at(Density::Q0, s)?, dset.value_at(Density::Q, s)?);
    let (g, gp) = setup.far_field();
    Ok((q0 + inc, -q + mat + 2.0 * g + gp.conj() * conj_ratio))
}

/// Largest difference between the integral-representation traces and the
/// direct values `2q0` and `-2q`, relative to the stress scale.
pub fn trace_consistency(
    dset: &DensitySet,
    setup: &ProblemSetup,
    rule: &QuadratureRule,
    samples: &[f64],
    tolerance: f64,
) -> Result<[CheckEntry; 2]> {
    let (mut inc, mut mat): (f64, f64) = (0.0, 0.0);
    for &s in samples {
        let (plus, minus) = integral_traces(dset, setup, rule, s)?;
        inc = inc.max((plus - 2.0 * dset.value_at(Density::Q0, s)?).norm());
        mat = mat.max((minus + 2.0 * dset.value_at(Density::Q, s)?).norm());
    }
    let scale = scale_of(setup);
    Ok([
        CheckEntry::new(
            "trace_consistency_inclusion",
            "inclusion-side traction from the integral representation = 2 q0",
            inc / scale,
            tolerance,
        ),
        CheckEntry::new(
            "trace_consistency_matrix",
            "matrix-side traction from the integral representation = -2 q",
            mat / scale,
            tolerance,
        ),
    ])
}

/// Seeded field points at least 5% of an arc length away from the tips.
pub fn random_contour_samples(contour: &Contour, seed: u64, count: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|j| {
            let arc = ArcId::BOTH[j % 2];
            let (a, b) = contour.arc_bounds(arc);
            let pad = 0.05 * (b - a);
            rng.gen_range(a + pad..b - pad)
        })
        .collect()
}

/// `|∫ (q0 - q) dt|` over the contour and `|∫ ((κ0+1)/μ0 g0' + (κ+1)/μ g') dt|`
/// over the crack, both in units of the stress scale.
pub fn conservation_checks(
    dset: &DensitySet,
    setup: &ProblemSetup,
    rule: &QuadratureRule,
    tolerance: f64,
) -> Result<[CheckEntry; 2]> {
    let contour = &setup.contour;
    let w0 = (setup.inclusion.kappa() + 1.0) / setup.inclusion.mu();
    let w = (setup.matrix.kappa() + 1.0) / setup.matrix.mu();
    let mut force = Complex64::new(0.0, 0.0);
    let mut jump = Complex64::new(0.0, 0.0);
    for (arc, wt, p) in contour_nodes(contour, rule) {
        let dt = p.d1 * wt;
        force += (dset.value(Density::Q0, arc, p.s)? - dset.value(Density::Q, arc, p.s)?) * dt;
        if arc == ArcId::Crack {
            jump += (w0 * dset.value(Density::G0Prime, arc, p.s)? + w * dset.value(Density::GPrime, arc, p.s)?) * dt;
        }
    }
    let scale = scale_of(setup);
    Ok([
        CheckEntry::new(
            "force_balance",
            "integral of (q0 - q) dt over the contour = 0",
            force.norm() / scale,
            tolerance,
        ),
        CheckEntry::new(
            "single_valuedness",
            "integral over the crack of ((k0+1)/mu0 g0' + (k+1)/mu g') dt = 0",
            jump.norm() / (scale * w.max(w0)),
            tolerance,
        ),
    ])
}

/// `|∫ q0 dt|` over the contour, in units of the stress scale.
///
/// The inclusion-side traces equal `2 q0` only when the inclusion field
/// continued outside the inclusion vanishes. Zero displacement derivative there
/// leaves one exterior field free, the rigid-inclusion field of a net force,
/// and this integral measures that force. Crack-face tension with
/// curvature-dependent stiffness has a nonzero resultant over an open arc, so
/// the integral is generally not zero.
pub fn inclusion_resultant(dset: &DensitySet, setup: &ProblemSetup, rule: &QuadratureRule, tolerance: f64) -> Result<CheckEntry> {
    let mut x = Complex64::new(0.0, 0.0);
    for (arc, wt, p) in contour_nodes(&setup.contour, rule) {
        x += dset.value(Density::Q0, arc, p.s)? * p.d1 * wt;
    }
    Ok(CheckEntry::new(
        "inclusion_resultant",
        "integral of q0 dt over the contour = 0 (net force on the inclusion)",
        x.norm() / scale_of(setup),
        tolerance,
    ))
}

/// All solution checks, with quadrature at twice `assembly_rule`'s resolution.
pub fn validate_solution(
    dset: &DensitySet,
    setup: &ProblemSetup,
    assembly_rule: &QuadratureRule,
    tol: &Tolerances,
) -> Result<ValidationReport> {
    let fine = assembly_rule.refined();
    let mut report = ValidationReport::default();
    let trial = TrialDensity::Polynomial {
        a: vec![Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
        b: vec![Complex64::new(0.0, 0.0), Complex64::new(0.5, 0.0)],
    };
    report.push(inversion_check(
        &setup.contour,
        &fine,
        &trial,
        &off_node_samples(&setup.contour, 8),
        tol.inversion,
    )?);
    let crack = central_samples(&setup.contour, ArcId::Crack, 0.8, 21);
    let bonded = central_samples(&setup.contour, ArcId::Bonded, 0.8, 21);
    report.push(original_bc_residual(dset, setup, &crack, &bonded, tol.boundary_conditions)?);
    let samples = random_contour_samples(&setup.contour, 7, 20);
    report.extend(trace_consistency(dset, setup, &fine, &samples, tol.trace_consistency)?);
    let oracle = QuadratureRule::new(fine.nodes_per_panel + 4, fine.panels_per_arc);
    report.extend(conservation_checks(dset, setup, &oracle, tol.conservation)?);
    report.push(inclusion_resultant(dset, setup, &oracle, tol.conservation)?);
    Ok(report)
}
