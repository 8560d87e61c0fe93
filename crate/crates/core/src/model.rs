//! Materials, loads and surface-tension data, plus the constants derived from them.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::geometry::Contour;
use crate::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PlaneMode {
    #[default]
    PlaneStress,
    PlaneStrain,
}

/// Kolosov constant κ for Poisson ratio `nu`.
pub fn kolosov(nu: f64, mode: PlaneMode) -> Result<f64> {
    if !(nu > -1.0 && nu < 0.5) {
        return Err(Error::Material(format!("Poisson ratio must satisfy -1 < nu < 0.5, got {nu}")));
    }
    Ok(match mode {
        PlaneMode::PlaneStress => (3.0 - nu) / (1.0 + nu),
        PlaneMode::PlaneStrain => 3.0 - 4.0 * nu,
    })
}

/// Isotropic linear elastic phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Material {
    shear_modulus: f64,
    poisson: f64,
    kolosov: f64,
    mode: PlaneMode,
}

impl Material {
    pub fn new(shear_modulus: f64, poisson: f64, mode: PlaneMode) -> Result<Self> {
        if !(shear_modulus > 0.0) || !shear_modulus.is_finite() {
            return Err(Error::Material(format!(
                "shear modulus must be positive, got {shear_modulus}"
            )));
        }
        let kolosov = kolosov(poisson, mode)?;
        Ok(Self {
            shear_modulus,
            poisson,
            kolosov,
            mode,
        })
    }

    /// μ
    pub fn mu(&self) -> f64 {
        self.shear_modulus
    }

    /// ν
    pub fn nu(&self) -> f64 {
        self.poisson
    }

    /// κ
    pub fn kappa(&self) -> f64 {
        self.kolosov
    }

    pub fn mode(&self) -> PlaneMode {
        self.mode
    }
}

/// Surface-tension parameters on the crack faces (inclusion side `plus`,
/// matrix side `minus`) and on the bonded interface (`interface`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceTension {
    pub plus: f64,
    pub minus: f64,
    pub interface: f64,
}

impl SurfaceTension {
    pub fn new(plus: f64, minus: f64, interface: f64) -> Result<Self> {
        if !(plus > 0.0 && minus > 0.0) {
            return Err(Error::SurfaceTension(format!(
                "crack-face tensions must be positive, got gamma+ = {plus}, gamma- = {minus}"
            )));
        }
        if !(interface >= 0.0) {
            return Err(Error::SurfaceTension(format!(
                "interface tension must be non-negative, got {interface}"
            )));
        }
        Ok(Self { plus, minus, interface })
    }
}

/// Principal stresses at infinity; `sigma1` acts along angle `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemoteLoad {
    pub sigma1: f64,
    pub sigma2: f64,
    pub alpha: f64,
}

impl RemoteLoad {
    pub fn new(sigma1: f64, sigma2: f64, alpha: f64) -> Self {
        Self { sigma1, sigma2, alpha }
    }

    pub fn uniaxial(sigma: f64, alpha: f64) -> Self {
        Self::new(sigma, 0.0, alpha)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::new(self.sigma1 * factor, self.sigma2 * factor, self.alpha)
    }

    /// Largest absolute principal stress, used as the stress scale in reports.
    pub fn magnitude(&self) -> f64 {
        self.sigma1.abs().max(self.sigma2.abs())
    }
}

/// `(Γ, Γ')` of the potentials at infinity.
pub fn far_field_constants(load: &RemoteLoad) -> (f64, Complex64) {
    let gamma = 0.25 * (load.sigma1 + load.sigma2);
    let gamma_prime = 0.5 * (load.sigma2 - load.sigma1) * Complex64::from_polar(1.0, -2.0 * load.alpha);
    (gamma, gamma_prime)
}

/// Tractions prescribed on the crack banks, `f1` from the inclusion side and
/// `f2` from the matrix side.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum CrackTractions {
    #[default]
    Zero,
    /// Uniform pressure `p` on both banks: `f1 = f2 = -p`.
    Pressure(f64),
    Constant {
        f1: Complex64,
        f2: Complex64,
    },
    /// Piecewise-linear table over `s ∈ [0, l0]`.
    Sampled {
        s: Vec<f64>,
        f1: Vec<Complex64>,
        f2: Vec<Complex64>,
    },
}

impl CrackTractions {
    pub fn validate(&self) -> Result<()> {
        match self {
            CrackTractions::Zero => Ok(()),
            CrackTractions::Pressure(p) if p.is_finite() => Ok(()),
            CrackTractions::Constant { f1, f2 } if f1.is_finite() && f2.is_finite() => Ok(()),
            CrackTractions::Sampled { s, f1, f2 } => {
                if s.len() < 2 || s.len() != f1.len() || s.len() != f2.len() {
                    return Err(Error::InvalidArgument(
                        "traction table needs matching columns with at least two rows".into(),
                    ));
                }
                if s.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::InvalidArgument("traction table arc lengths must increase".into()));
                }
                if f1.iter().chain(f2).any(|v| !v.is_finite()) {
                    return Err(Error::InvalidArgument("traction table has non-finite values".into()));
                }
                Ok(())
            }
            _ => Err(Error::InvalidArgument("tractions must be finite".into())),
        }
    }

    /// `(f1(s), f2(s))`.
    pub fn at(&self, s: f64) -> (Complex64, Complex64) {
        match self {
            CrackTractions::Zero => (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)),
            CrackTractions::Pressure(p) => (Complex64::new(-p, 0.0), Complex64::new(-p, 0.0)),
            CrackTractions::Constant { f1, f2 } => (*f1, *f2),
            CrackTractions::Sampled { s: xs, f1, f2 } => {
                let j = xs.partition_point(|x| *x <= s).clamp(1, xs.len() - 1);
                let w = ((s - xs[j - 1]) / (xs[j] - xs[j - 1])).clamp(0.0, 1.0);
                (f1[j - 1] * (1.0 - w) + f1[j] * w, f2[j - 1] * (1.0 - w) + f2[j] * w)
            }
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            CrackTractions::Zero => CrackTractions::Zero,
            CrackTractions::Pressure(p) => CrackTractions::Pressure(p * factor),
            CrackTractions::Constant { f1, f2 } => CrackTractions::Constant {
                f1: f1 * factor,
                f2: f2 * factor,
            },
            CrackTractions::Sampled { s, f1, f2 } => CrackTractions::Sampled {
                s: s.clone(),
                f1: f1.iter().map(|v| v * factor).collect(),
                f2: f2.iter().map(|v| v * factor).collect(),
            },
        }
    }
}

/// Full problem description.
#[derive(Debug, Clone)]
pub struct ProblemSetup {
    pub contour: Contour,
    pub matrix: Material,
    pub inclusion: Material,
    pub surface: SurfaceTension,
    pub load: RemoteLoad,
    pub tractions: CrackTractions,
}

impl ProblemSetup {
    pub fn new(
        contour: Contour,
        matrix: Material,
        inclusion: Material,
        surface: SurfaceTension,
        load: RemoteLoad,
        tractions: CrackTractions,
    ) -> Result<Self> {
        tractions.validate()?;
        if !(load.sigma1.is_finite() && load.sigma2.is_finite() && load.alpha.is_finite()) {
            return Err(Error::InvalidArgument("remote load must be finite".into()));
        }
        Ok(Self {
            contour,
            matrix,
            inclusion,
            surface,
            load,
            tractions,
        })
    }

    /// True when `μ0 κ (κ0 + 1) = μ κ0 (κ + 1)`, the material combination for
    /// which the weakly-singular reduction needs a different set of unknowns.
    pub fn is_special_material_case(&self) -> bool {
        let (mu, k) = (self.matrix.mu(), self.matrix.kappa());
        let (mu0, k0) = (self.inclusion.mu(), self.inclusion.kappa());
        let lhs = mu0 * k * (k0 + 1.0);
        let rhs = mu * k0 * (k + 1.0);
        (lhs - rhs).abs() <= 1e-12 * lhs.abs().max(rhs.abs())
    }

    /// Same problem with every load (remote and crack-face) multiplied by `factor`.
    pub fn with_scaled_loads(&self, factor: f64) -> Self {
        Self {
            load: self.load.scaled(factor),
            tractions: self.tractions.scaled(factor),
            ..self.clone()
        }
    }

    pub fn far_field(&self) -> (f64, Complex64) {
        far_field_constants(&self.load)
    }

    /// Stress scale for relative tolerances: the remote stress, or the largest
    /// crack-face traction when there is no remote load.
    pub fn stress_scale(&self) -> f64 {
        let mut scale = self.load.magnitude();
        let l0 = self.contour.l0();
        for j in 0..=16 {
            let (f1, f2) = self.tractions.at(l0 * j as f64 / 16.0);
            scale = scale.max(f1.norm()).max(f2.norm());
        }
        scale
    }
}

/// Coefficients `m1 … m4` of the linearized surface-tension conditions.
pub fn m_coefficients(contour: &Contour, s: f64) -> [Complex64; 4] {
    let p = contour.point(s);
    let (d1, d2, d3) = (p.d1, p.d2, p.d3);
    let rho = p.curvature;
    let rho_s = p.curvature_ds;
    let m1 = -d3.conj() - 2.0 * I * d2.conj() * rho - 3.0 * I * d1.conj() * rho_s - 3.0 * d1.conj() * rho * rho;
    let m2 = d3 - 4.0 * I * d2 * rho - 3.0 * I * d1 * rho_s - 3.0 * d1 * rho * rho;
    let m3 = -4.0 * I * d1.conj() * rho;
    let m4 = -2.0 * I * d1 * rho;
    [m1, m2, m3, m4]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn kolosov_values() {
        assert_abs_diff_eq!(kolosov(0.25, PlaneMode::PlaneStress).unwrap(), 2.2, epsilon = 1e-15);
        assert_abs_diff_eq!(kolosov(0.25, PlaneMode::PlaneStrain).unwrap(), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(kolosov(0.35, PlaneMode::PlaneStress).unwrap(), 2.65 / 1.35, epsilon = 1e-15);
        assert!(kolosov(0.7, PlaneMode::PlaneStress).is_err());
        assert!(kolosov(-1.0, PlaneMode::PlaneStrain).is_err());
        assert!(kolosov(0.5, PlaneMode::PlaneStrain).is_err());
    }

    #[test]
    fn kolosov_decreases_with_poisson_ratio() {
        for mode in [PlaneMode::PlaneStress, PlaneMode::PlaneStrain] {
            let mut prev = f64::INFINITY;
            for j in 0..30 {
                let nu = -0.95 + j as f64 * 0.048;
                let k = kolosov(nu, mode).unwrap();
                assert!(k < prev);
                prev = k;
            }
        }
    }

    #[test]
    fn far_field_examples() {
        let (g, gp) = far_field_constants(&RemoteLoad::new(1.0, 0.0, 0.0));
        assert_abs_diff_eq!(g, 0.25);
        assert!((gp - Complex64::new(-0.5, 0.0)).norm() < 1e-15);
        let (g, gp) = far_field_constants(&RemoteLoad::new(1.0, 0.0, PI / 2.0));
        assert_abs_diff_eq!(g, 0.25);
        assert!((gp - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        let (g, gp) = far_field_constants(&RemoteLoad::new(3.0, 3.0, 0.4));
        assert_abs_diff_eq!(g, 1.5);
        assert!(gp.norm() < 1e-15);
    }

    #[test]
    fn principal_axis_relabeling_invariance() {
        for &(s1, s2, a) in &[(1.0, 0.0, 0.0), (2.0, -0.5, 0.3), (-1.0, 4.0, 2.0)] {
            let (g, gp) = far_field_constants(&RemoteLoad::new(s1, s2, a));
            let (g2, gp2) = far_field_constants(&RemoteLoad::new(s2, s1, a + PI / 2.0));
            assert_abs_diff_eq!(g, g2, epsilon = 1e-15);
            assert!((gp - gp2).norm() < 1e-14);
        }
    }

    #[test]
    fn m_coefficients_on_unit_circle() {
        let c = Contour::circle(1.0, (0.0, PI)).unwrap();
        let [m1, m2, m3, m4] = m_coefficients(&c, 0.0);
        assert!((m3 - Complex64::new(-4.0, 0.0)).norm() < 1e-14);
        assert!((m4 - Complex64::new(2.0, 0.0)).norm() < 1e-14);
        // t' = i e^{is}, ϱ = 1: m1 = 4i e^{-is}, m2 = 0
        assert!((m1 - Complex64::new(0.0, 4.0)).norm() < 1e-14);
        assert!(m2.norm() < 1e-14);
    }

    #[test]
    fn m_coefficients_vanish_on_flat_pieces() {
        // a very large circle approximates a straight segment
        let c = Contour::circle(1e9, (0.0, 1.0)).unwrap();
        let m = m_coefficients(&c, 0.3);
        for v in m {
            assert!(v.norm() < 1e-8);
        }
    }

    #[test]
    fn special_material_case() {
        let c = Contour::circle(1.0, (0.0, PI)).unwrap();
        let m = Material::new(40.0, 0.25, PlaneMode::PlaneStress).unwrap();
        let s = SurfaceTension::new(0.01, 0.01, 0.0).unwrap();
        let p = ProblemSetup::new(c.clone(), m, m, s, RemoteLoad::uniaxial(1.0, 0.0), CrackTractions::Zero).unwrap();
        assert!(p.is_special_material_case());
        let m0 = Material::new(60.0, 0.35, PlaneMode::PlaneStress).unwrap();
        let p = ProblemSetup::new(c, m, m0, s, RemoteLoad::uniaxial(1.0, 0.0), CrackTractions::Zero).unwrap();
        assert!(!p.is_special_material_case());
    }

    #[test]
    fn invalid_inputs_rejected() {
        assert!(Material::new(0.0, 0.2, PlaneMode::PlaneStress).is_err());
        assert!(SurfaceTension::new(0.0, 0.1, 0.0).is_err());
        assert!(SurfaceTension::new(0.1, 0.1, -0.1).is_err());
        let bad = CrackTractions::Sampled {
            s: vec![0.0, 0.0],
            f1: vec![Complex64::new(0.0, 0.0); 2],
            f2: vec![Complex64::new(0.0, 0.0); 2],
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn sampled_tractions_interpolate() {
        let t = CrackTractions::Sampled {
            s: vec![0.0, 1.0, 2.0],
            f1: vec![Complex64::new(0.0, 0.0), Complex64::new(2.0, 0.0), Complex64::new(2.0, 2.0)],
            f2: vec![Complex64::new(1.0, 0.0); 3],
        };
        let (f1, f2) = t.at(1.5);
        assert!((f1 - Complex64::new(2.0, 1.0)).norm() < 1e-15);
        assert!((f2 - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }
}
