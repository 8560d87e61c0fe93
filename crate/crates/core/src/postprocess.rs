//! Physical boundary fields from solved densities.
//!
//! With the zero extension, one-sided traces reduce to the densities:
//! `(σn + iτn)⁺₀ = 2 q0`, `(σn + iτn)⁻ = -2 q`,
//! `du⁺₀/dt = i (κ0 + 1) / (2 μ0) g0'` and `du⁻/dt = -i (κ + 1) / (2 μ) g'`.
//! These hold on both arcs.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::geometry::{ArcId, Contour};
use crate::model::ProblemSetup;
use crate::quadrature::{GaussLegendre, QuadratureRule};
use crate::solver::{Density, DensitySet};
use crate::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Closest approach to the contour accepted by [`potentials_at`], as a
/// fraction of the contour length.
pub const NEAR_FRACTION: f64 = 0.02;

/// Stress and displacement-derivative traces on both sides at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Traces {
    /// `(σn + iτn)⁺₀`, inclusion side.
    pub stress_inclusion: Complex64,
    /// `(σn + iτn)⁻`, matrix side.
    pub stress_matrix: Complex64,
    /// `d(u1 + iu2)⁺₀/dt`.
    pub strain_inclusion: Complex64,
    /// `d(u1 + iu2)⁻/dt`.
    pub strain_matrix: Complex64,
}

pub fn traces(dset: &DensitySet, setup: &ProblemSetup, arc: ArcId, s: f64) -> Result<Traces> {
    let (k0, mu0) = (setup.inclusion.kappa(), setup.inclusion.mu());
    let (k, mu) = (setup.matrix.kappa(), setup.matrix.mu());
    Ok(Traces {
        stress_inclusion: 2.0 * dset.value(Density::Q0, arc, s)?,
        stress_matrix: -2.0 * dset.value(Density::Q, arc, s)?,
        strain_inclusion: I * (k0 + 1.0) / (2.0 * mu0) * dset.value(Density::G0Prime, arc, s)?,
        strain_matrix: -I * (k + 1.0) / (2.0 * mu) * dset.value(Density::GPrime, arc, s)?,
    })
}

/// One CSV row of boundary output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundarySample {
    pub s: f64,
    pub arc: ArcId,
    pub x: f64,
    pub y: f64,
    pub sigma_n_plus_0: f64,
    pub tau_n_plus_0: f64,
    pub sigma_n_minus: f64,
    pub tau_n_minus: f64,
    pub u_t_prime_plus_0: f64,
    pub u_n_prime_plus_0: f64,
    pub u_t_prime_minus: f64,
    pub u_n_prime_minus: f64,
    pub re_q0: f64,
    pub im_q0: f64,
    pub re_g0_prime: f64,
    pub im_g0_prime: f64,
    pub re_q: f64,
    pub im_q: f64,
    pub re_g_prime: f64,
    pub im_g_prime: f64,
}

/// Samples of the boundary fields along one arc.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryField {
    pub arc: ArcId,
    pub samples: Vec<BoundarySample>,
}

impl BoundaryField {
    pub fn s(&self) -> Vec<f64> {
        self.samples.iter().map(|p| p.s).collect()
    }

    /// Largest `|σ + iτ|` on either side.
    pub fn max_stress(&self) -> f64 {
        self.samples
            .iter()
            .map(|p| {
                p.sigma_n_plus_0
                    .hypot(p.tau_n_plus_0)
                    .max(p.sigma_n_minus.hypot(p.tau_n_minus))
            })
            .fold(0.0, f64::max)
    }
}

fn sample(dset: &DensitySet, setup: &ProblemSetup, arc: ArcId, s: f64) -> Result<BoundarySample> {
    let tr = traces(dset, setup, arc, s)?;
    let q0 = dset.value(Density::Q0, arc, s)?;
    let g0 = dset.value(Density::G0Prime, arc, s)?;
    let q = dset.value(Density::Q, arc, s)?;
    let g = dset.value(Density::GPrime, arc, s)?;
    let z = setup.contour.position(s);
    Ok(BoundarySample {
        s,
        arc,
        x: z.re,
        y: z.im,
        sigma_n_plus_0: tr.stress_inclusion.re,
        tau_n_plus_0: tr.stress_inclusion.im,
        sigma_n_minus: tr.stress_matrix.re,
        tau_n_minus: tr.stress_matrix.im,
        // with |t'| = 1, du/dt = (du/ds) conj(t') = u'_t + i u'_n
        u_t_prime_plus_0: tr.strain_inclusion.re,
        u_n_prime_plus_0: tr.strain_inclusion.im,
        u_t_prime_minus: tr.strain_matrix.re,
        u_n_prime_minus: tr.strain_matrix.im,
        re_q0: q0.re,
        im_q0: q0.im,
        re_g0_prime: g0.re,
        im_g0_prime: g0.im,
        re_q: q.re,
        im_q: q.im,
        re_g_prime: g.re,
        im_g_prime: g.im,
    })
}

/// `count` equally spaced samples over `arc`, ends included.
pub fn arc_samples(contour: &Contour, arc: ArcId, count: usize) -> Vec<f64> {
    let (a, b) = contour.arc_bounds(arc);
    let n = count.max(2);
    (0..n).map(|j| a + (b - a) * j as f64 / (n - 1) as f64).collect()
}

pub fn fields_on(dset: &DensitySet, setup: &ProblemSetup, arc: ArcId, count: usize) -> Result<BoundaryField> {
    let samples = arc_samples(&setup.contour, arc, count)
        .into_iter()
        .map(|s| sample(dset, setup, arc, s))
        .collect::<Result<_>>()?;
    Ok(BoundaryField { arc, samples })
}

/// Fields on both faces of the crack.
pub fn crack_face_fields(dset: &DensitySet, setup: &ProblemSetup, count: usize) -> Result<BoundaryField> {
    fields_on(dset, setup, ArcId::Crack, count)
}

/// Fields on both sides of the bonded interface.
pub fn interface_fields(dset: &DensitySet, setup: &ProblemSetup, count: usize) -> Result<BoundaryField> {
    fields_on(dset, setup, ArcId::Bonded, count)
}

/// Boundary displacements of both bodies, integrated from their derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementField {
    pub s: Vec<f64>,
    pub inclusion: Vec<Complex64>,
    pub matrix: Vec<Complex64>,
    /// Mismatch after one full turn around the contour.
    pub closure_inclusion: Complex64,
    pub closure_matrix: Complex64,
}

impl DisplacementField {
    /// `u⁺₀ - u⁻` at the crack samples: the opening as a displacement jump.
    pub fn aperture(&self, l0: f64) -> Vec<(f64, Complex64)> {
        self.s
            .iter()
            .zip(self.inclusion.iter().zip(&self.matrix))
            .filter(|(s, _)| **s <= l0)
            .map(|(s, (a, b))| (*s, a - b))
            .collect()
    }
}

/// `d u / ds` on each side, `(inclusion, matrix)`.
fn slope(dset: &DensitySet, setup: &ProblemSetup, arc: ArcId, s: f64) -> Result<(Complex64, Complex64)> {
    let tr = traces(dset, setup, arc, s)?;
    let t1 = setup.contour.point(s).d1;
    Ok((tr.strain_inclusion * t1, tr.strain_matrix * t1))
}

/// Integrates both slopes over `[a, b]` inside one arc.
fn integrate(
    dset: &DensitySet,
    setup: &ProblemSetup,
    arc: ArcId,
    gl: &GaussLegendre,
    a: f64,
    b: f64,
) -> Result<(Complex64, Complex64)> {
    let mut nodes = Vec::with_capacity(gl.len());
    gl.push_mapped(a, b, &mut nodes);
    let mut acc = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    for (s, w) in nodes {
        let (u0, u) = slope(dset, setup, arc, s)?;
        acc.0 += w * u0;
        acc.1 += w * u;
    }
    Ok(acc)
}

/// Displacements at `count` samples per arc. The inclusion is fixed at the
/// crack midpoint; the matrix follows from continuity at the bonded-arc
/// midpoint. Only derivatives are known, so rigid translations are otherwise
/// free.
pub fn displacements(dset: &DensitySet, setup: &ProblemSetup, count: usize) -> Result<DisplacementField> {
    let gl = GaussLegendre::new(12);
    let contour = &setup.contour;
    let mut s_all = Vec::new();
    let mut cum0 = Vec::new();
    let mut cum = Vec::new();
    let (mut acc0, mut acc) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    for arc in ArcId::BOTH {
        let pts = arc_samples(contour, arc, count);
        for (j, &s) in pts.iter().enumerate() {
            if j > 0 {
                let (d0, d) = integrate(dset, setup, arc, &gl, pts[j - 1], s)?;
                acc0 += d0;
                acc += d;
            } else if arc == ArcId::Bonded {
                // the tip is shared with the end of the crack
                continue;
            }
            s_all.push(s);
            cum0.push(acc0);
            cum.push(acc);
        }
    }
    let l0 = contour.l0();
    let (a_mid, _) = integrate(dset, setup, ArcId::Crack, &gl, 0.0, 0.5 * l0)?;
    let (_, b) = contour.arc_bounds(ArcId::Bonded);
    let l1 = 0.5 * (l0 + b);
    let (c0, c) = integrate(dset, setup, ArcId::Bonded, &gl, l0, l1)?;
    let (crack0, crack) = integrate(dset, setup, ArcId::Crack, &gl, 0.0, l0)?;
    // values at l1 measured from s = 0
    let u0_l1 = crack0 + c0 - a_mid;
    let shift = u0_l1 - (crack + c);
    let inclusion: Vec<Complex64> = cum0.iter().map(|v| v - a_mid).collect();
    let matrix: Vec<Complex64> = cum.iter().map(|v| v + shift).collect();
    Ok(DisplacementField {
        s: s_all,
        inclusion,
        matrix,
        closure_inclusion: acc0,
        closure_matrix: acc,
    })
}

/// `|du⁺₀/dt - du⁻/dt|` over the crack.
pub fn opening_profile(dset: &DensitySet, setup: &ProblemSetup, count: usize) -> Result<Vec<(f64, f64)>> {
    arc_samples(&setup.contour, ArcId::Crack, count)
        .into_iter()
        .map(|s| {
            let tr = traces(dset, setup, ArcId::Crack, s)?;
            Ok((s, (tr.strain_inclusion - tr.strain_matrix).norm()))
        })
        .collect()
}

/// Largest opening over the crack, tips included, with its location.
pub fn max_crack_opening(dset: &DensitySet, setup: &ProblemSetup) -> Result<(f64, f64)> {
    let profile = opening_profile(dset, setup, 2001)?;
    Ok(profile
        .into_iter()
        .fold((0.0, 0.0), |best, (s, v)| if v > best.0 { (v, s) } else { best }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Inclusion,
    Matrix,
}

/// `(Φ, Ψ)` at `z` from the integral representations of the chosen body.
///
/// Quadrature is not trusted close to the contour; points nearer than
/// `NEAR_FRACTION · l` are rejected in favour of the boundary traces.
pub fn potentials_at(dset: &DensitySet, setup: &ProblemSetup, z: Complex64, region: Region) -> Result<(Complex64, Complex64)> {
    let contour = &setup.contour;
    let eps = NEAR_FRACTION * contour.length();
    let rule = QuadratureRule::new(16, 32);
    let mut nodes = Vec::new();
    for arc in ArcId::BOTH {
        let (a, b) = contour.arc_bounds(arc);
        for (s, w) in rule.arc_nodes(a, b) {
            nodes.push((arc, s, w, contour.point(s)));
        }
    }
    let near = nodes
        .iter()
        .map(|(_, _, _, p)| (p.t - z).norm())
        .fold(f64::INFINITY, f64::min);
    if near < eps {
        return Err(Error::NearBoundary { re: z.re, im: z.im, eps });
    }
    let winding: Complex64 = nodes.iter().map(|(_, _, w, p)| *w * p.d1 / (p.t - z)).sum::<Complex64>() / (2.0 * PI * I);
    let inside = winding.re > 0.5;
    if inside != (region == Region::Inclusion) {
        return Err(Error::InvalidArgument(format!(
            "z = {z} does not lie in the {} region",
            if region == Region::Inclusion { "inclusion" } else { "matrix" }
        )));
    }

    let (q_d, g_d, kappa) = match region {
        Region::Inclusion => (Density::Q0, Density::G0Prime, setup.inclusion.kappa()),
        Region::Matrix => (Density::Q, Density::GPrime, setup.matrix.kappa()),
    };
    let (mut phi, mut psi) = match region {
        Region::Inclusion => (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)),
        Region::Matrix => {
            let (g, gp) = setup.far_field();
            (Complex64::new(g, 0.0), gp)
        }
    };
    let c_q = 1.0 / ((kappa + 1.0) * PI * I);
    for (arc, s, w, p) in &nodes {
        let g = dset.value(g_d, *arc, *s)?;
        let q = dset.value(q_d, *arc, *s)?;
        let dt = p.d1 * *w;
        let r = p.t - z;
        let gdt = g * dt;
        let qdt = q * dt;
        phi += gdt / (2.0 * PI * r) + c_q * qdt / r;
        psi += (gdt.conj() / r - p.t.conj() * gdt / (r * r)) / (2.0 * PI)
            + c_q * (kappa * qdt.conj() / r - p.t.conj() * qdt / (r * r));
    }
    Ok((phi, psi))
}

/// Power-law and logarithmic fits of the traces approaching one crack tip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TipFit {
    /// Arc length of the tip.
    pub tip: f64,
    /// `p` in `|σn| ~ d^-p`.
    pub sigma_exponent: f64,
    /// `p` in `|τn| ~ d^-p`.
    pub tau_exponent: f64,
    /// `b` in `τn ≈ a + b ln d`.
    pub tau_log_slope: f64,
    /// RMS misfit of the logarithmic fit over the RMS of `τn`.
    pub tau_log_residual: f64,
}

/// Distances `l0 · 2^-k`, `k = 3..=10`.
pub fn tip_ladder(l0: f64) -> Vec<f64> {
    (3..=10).map(|k| l0 * 0.5f64.powi(k)).collect()
}

/// Straight-line least squares, returning `(intercept, slope, rms residual)`.
fn line_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum::<f64>() / n).sqrt();
    (intercept, slope, rms)
}

/// Fits of the inclusion-side traces at both crack tips.
pub fn tip_fits(dset: &DensitySet, setup: &ProblemSetup) -> Result<Vec<TipFit>> {
    let l0 = setup.contour.l0();
    let ladder = tip_ladder(l0);
    let logd: Vec<f64> = ladder.iter().map(|d| d.ln()).collect();
    let mut out = Vec::new();
    for tip in [0.0, l0] {
        let mut sigma = Vec::new();
        let mut tau = Vec::new();
        for d in &ladder {
            let s = if tip == 0.0 { *d } else { l0 - d };
            let st = traces(dset, setup, ArcId::Crack, s)?.stress_inclusion;
            sigma.push(st.re);
            tau.push(st.im);
        }
        let log_abs = |v: &[f64]| -> Vec<f64> { v.iter().map(|x| x.abs().max(f64::MIN_POSITIVE).ln()).collect() };
        let (_, ps, _) = line_fit(&logd, &log_abs(&sigma));
        let (_, pt, _) = line_fit(&logd, &log_abs(&tau));
        let (_, b, rms) = line_fit(&logd, &tau);
        let tau_rms = (tau.iter().map(|v| v * v).sum::<f64>() / tau.len() as f64).sqrt();
        out.push(TipFit {
            tip,
            sigma_exponent: -ps,
            tau_exponent: -pt,
            tau_log_slope: b,
            tau_log_residual: if tau_rms > 0.0 { rms / tau_rms } else { 0.0 },
        });
    }
    Ok(out)
}

/// Writes boundary samples of several arcs as one CSV table.
pub fn write_boundary_csv<W: Write>(out: W, fields: &[&BoundaryField]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for f in fields {
        for p in &f.samples {
            w.serialize(p)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, Serialize)]
struct DeformedRow {
    s: f64,
    x_undeformed: f64,
    y_undeformed: f64,
    x_deformed_inclusion: f64,
    y_deformed_inclusion: f64,
    x_deformed_matrix: f64,
    y_deformed_matrix: f64,
}

/// Undeformed and deformed boundary, displacements magnified by `scale`.
pub fn write_deformed_csv<W: Write>(out: W, contour: &Contour, disp: &DisplacementField, scale: f64) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (j, &s) in disp.s.iter().enumerate() {
        let z = contour.position(s);
        let a = z + scale * disp.inclusion[j];
        let b = z + scale * disp.matrix[j];
        w.serialize(DeformedRow {
            s,
            x_undeformed: z.re,
            y_undeformed: z.im,
            x_deformed_inclusion: a.re,
            y_deformed_inclusion: a.im,
            x_deformed_matrix: b.re,
            y_deformed_matrix: b.im,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Convenience wrapper creating `path`.
pub fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    Ok(std::io::BufWriter::new(std::fs::File::create(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CrackTractions, Material, PlaneMode, RemoteLoad, SurfaceTension};
    use crate::solver::{slot, solve_problem, SolverOptions};

    fn setup(load: RemoteLoad) -> ProblemSetup {
        ProblemSetup::new(
            Contour::circle(1.0, (0.0, PI)).unwrap(),
            Material::new(40.0, 0.25, PlaneMode::PlaneStress).unwrap(),
            Material::new(60.0, 0.35, PlaneMode::PlaneStress).unwrap(),
            SurfaceTension::new(0.5, 0.5, 0.0).unwrap(),
            load,
            CrackTractions::Zero,
        )
        .unwrap()
    }

    fn zeros(setup: &ProblemSetup) -> DensitySet {
        DensitySet::for_contour(&setup.contour, 8, Default::default())
    }

    #[test]
    fn zero_densities_give_zero_fields() {
        let setup = setup(RemoteLoad::uniaxial(1.0, 0.0));
        let d = zeros(&setup);
        let f = crack_face_fields(&d, &setup, 11).unwrap();
        assert_eq!(f.max_stress(), 0.0);
        assert_eq!(max_crack_opening(&d, &setup).unwrap().0, 0.0);
        let disp = displacements(&d, &setup, 9).unwrap();
        assert!(disp.inclusion.iter().chain(&disp.matrix).all(|v| v.norm() == 0.0));
    }

    #[test]
    fn constant_traction_density() {
        let setup = setup(RemoteLoad::uniaxial(1.0, 0.0));
        let mut d = zeros(&setup);
        let j = slot(Density::Q0, ArcId::Crack);
        d.re[j][0] = 0.3;
        d.im[j][0] = -0.2;
        for p in crack_face_fields(&d, &setup, 7).unwrap().samples {
            assert!((p.sigma_n_plus_0 - 0.6).abs() < 1e-14);
            assert!((p.tau_n_plus_0 + 0.4).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_densities_leave_only_the_far_field() {
        let setup = setup(RemoteLoad::new(1.0, 0.3, 0.4));
        let d = zeros(&setup);
        let (g, gp) = setup.far_field();
        let (phi, psi) = potentials_at(&d, &setup, Complex64::new(2.0, 1.0), Region::Matrix).unwrap();
        assert!((phi - g).norm() < 1e-15 && (psi - gp).norm() < 1e-15);
        let (phi, psi) = potentials_at(&d, &setup, Complex64::new(0.1, -0.2), Region::Inclusion).unwrap();
        assert_eq!((phi.norm(), psi.norm()), (0.0, 0.0));
    }

    #[test]
    fn potentials_reject_bad_points() {
        let setup = setup(RemoteLoad::uniaxial(1.0, 0.0));
        let d = zeros(&setup);
        let near = potentials_at(&d, &setup, Complex64::new(1.01, 0.0), Region::Matrix);
        assert!(matches!(near, Err(Error::NearBoundary { .. })));
        let wrong = potentials_at(&d, &setup, Complex64::new(0.0, 0.0), Region::Matrix);
        assert!(matches!(wrong, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn displacement_of_a_constant_density() {
        // g0' = 1 gives du0/ds = i (κ0+1)/(2μ0) t'(s), an infinitesimal
        // rotation and dilation, so the displacement closes around the contour.
        let setup = setup(RemoteLoad::uniaxial(1.0, 0.0));
        let mut d = zeros(&setup);
        for arc in ArcId::BOTH {
            d.re[slot(Density::G0Prime, arc)][0] = 1.0;
        }
        let disp = displacements(&d, &setup, 41).unwrap();
        let k0 = setup.inclusion.kappa();
        let mu0 = setup.inclusion.mu();
        let c = I * (k0 + 1.0) / (2.0 * mu0);
        let anchor = setup.contour.position(0.5 * PI);
        for (s, u) in disp.s.iter().zip(&disp.inclusion) {
            let expect = c * (setup.contour.position(*s) - anchor);
            assert!((u - expect).norm() < 1e-12, "s = {s}");
        }
        assert!(disp.closure_inclusion.norm() < 1e-12);
    }

    #[test]
    fn line_fit_recovers_a_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let (a, b, r) = line_fit(&x, &y);
        assert!((a - 2.0).abs() < 1e-14 && (b + 0.5).abs() < 1e-14 && r < 1e-14);
    }

    #[test]
    fn solved_interface_has_no_traction_jump_without_interface_tension() {
        let setup = setup(RemoteLoad::uniaxial(1.0, 0.0));
        let sol = solve_problem(&setup, &SolverOptions::with_order(16)).unwrap();
        let f = interface_fields(&sol.densities, &setup, 41).unwrap();
        let worst = f.samples[1..40]
            .iter()
            .map(|p| (p.sigma_n_plus_0 - p.sigma_n_minus).hypot(p.tau_n_plus_0 - p.tau_n_minus))
            .fold(0.0, f64::max);
        assert!(worst < 1e-2, "jump {worst}");
    }

    #[test]
    fn far_field_is_recovered_far_away() {
        let setup = setup(RemoteLoad::uniaxial(1.0, 0.0));
        let sol = solve_problem(&setup, &SolverOptions::with_order(16)).unwrap();
        let (g, _) = setup.far_field();
        let (phi, _) = potentials_at(&sol.densities, &setup, Complex64::new(0.0, 100.0), Region::Matrix).unwrap();
        assert!((phi - g).norm() < 0.01 * g.abs());
    }
}
