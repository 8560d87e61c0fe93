//! Run configuration files.
//!
//! Keys carry their units. Stresses and moduli share one unit (GPa), lengths
//! share another (`len`), and surface tension is in GPa·len.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::BasisKind;
use crate::geometry::Contour;
use crate::model::{CrackTractions, Material, PlaneMode, ProblemSetup, RemoteLoad, SurfaceTension};
use crate::quadrature::QuadratureRule;
use crate::solver::{ConstantTerm, SolverOptions};
use crate::validation::Tolerances;
use crate::{Error, Result};

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_VAR: &str = "INCRACK_OUT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum ContourConfig {
    Circle {
        radius_len: f64,
        crack_start_rad: f64,
        crack_end_rad: f64,
    },
    Ellipse {
        semi_axis_x_len: f64,
        semi_axis_y_len: f64,
        crack_start_rad: f64,
        crack_end_rad: f64,
    },
    /// Closed curve through the sample points, star-shaped about the origin.
    Samples {
        x_len: Vec<f64>,
        y_len: Vec<f64>,
        crack_start_rad: f64,
        crack_end_rad: f64,
    },
}

impl ContourConfig {
    pub fn build(&self) -> Result<Contour> {
        match self {
            ContourConfig::Circle {
                radius_len,
                crack_start_rad,
                crack_end_rad,
            } => Contour::circle(*radius_len, (*crack_start_rad, *crack_end_rad)),
            ContourConfig::Ellipse {
                semi_axis_x_len,
                semi_axis_y_len,
                crack_start_rad,
                crack_end_rad,
            } => Contour::ellipse(*semi_axis_x_len, *semi_axis_y_len, (*crack_start_rad, *crack_end_rad)),
            ContourConfig::Samples {
                x_len,
                y_len,
                crack_start_rad,
                crack_end_rad,
            } => {
                if x_len.len() != y_len.len() {
                    return Err(Error::Config(format!(
                        "contour.x_len has {} entries but contour.y_len has {}",
                        x_len.len(),
                        y_len.len()
                    )));
                }
                let pts: Vec<Complex64> = x_len.iter().zip(y_len).map(|(x, y)| Complex64::new(*x, *y)).collect();
                Contour::from_samples(&pts, (*crack_start_rad, *crack_end_rad))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    pub mu_gpa: f64,
    pub nu: f64,
    #[serde(default)]
    pub plane: PlaneMode,
}

impl MaterialConfig {
    pub fn build(&self) -> Result<Material> {
        Material::new(self.mu_gpa, self.nu, self.plane)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceTensionConfig {
    pub gamma_plus_gpa_len: f64,
    pub gamma_minus_gpa_len: f64,
    pub gamma_interface_gpa_len: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadConfig {
    pub sigma1_gpa: f64,
    #[serde(default)]
    pub sigma2_gpa: f64,
    #[serde(default)]
    pub alpha_rad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TractionsConfig {
    #[default]
    Zero,
    Pressure {
        pressure_gpa: f64,
    },
    Constant {
        f1_re_gpa: f64,
        f1_im_gpa: f64,
        f2_re_gpa: f64,
        f2_im_gpa: f64,
    },
    Table {
        s_len: Vec<f64>,
        f1_re_gpa: Vec<f64>,
        f1_im_gpa: Vec<f64>,
        f2_re_gpa: Vec<f64>,
        f2_im_gpa: Vec<f64>,
    },
}

impl TractionsConfig {
    pub fn build(&self) -> Result<CrackTractions> {
        Ok(match self {
            TractionsConfig::Zero => CrackTractions::Zero,
            TractionsConfig::Pressure { pressure_gpa } => CrackTractions::Pressure(*pressure_gpa),
            TractionsConfig::Constant {
                f1_re_gpa,
                f1_im_gpa,
                f2_re_gpa,
                f2_im_gpa,
            } => CrackTractions::Constant {
                f1: Complex64::new(*f1_re_gpa, *f1_im_gpa),
                f2: Complex64::new(*f2_re_gpa, *f2_im_gpa),
            },
            TractionsConfig::Table {
                s_len,
                f1_re_gpa,
                f1_im_gpa,
                f2_re_gpa,
                f2_im_gpa,
            } => {
                let n = s_len.len();
                if [f1_re_gpa.len(), f1_im_gpa.len(), f2_re_gpa.len(), f2_im_gpa.len()]
                    .iter()
                    .any(|&m| m != n)
                {
                    return Err(Error::Config("tractions table columns must have equal length".into()));
                }
                let zip = |re: &[f64], im: &[f64]| re.iter().zip(im).map(|(a, b)| Complex64::new(*a, *b)).collect();
                CrackTractions::Sampled {
                    s: s_len.clone(),
                    f1: zip(f1_re_gpa, f1_im_gpa),
                    f2: zip(f2_re_gpa, f2_im_gpa),
                }
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsConfig {
    pub order: usize,
    pub oversampling: usize,
    pub basis: BasisKind,
    pub nodes_per_panel: usize,
    pub panels_per_arc: usize,
    pub tip_grading: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inset_len: Option<f64>,
    pub rank_tol: f64,
    pub assembly_tol: f64,
    pub max_refinements: usize,
    pub constant_term: ConstantTerm,
    pub tolerances: Tolerances,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        let o = SolverOptions::default();
        Self {
            order: o.order,
            oversampling: o.oversampling,
            basis: o.basis,
            nodes_per_panel: o.quadrature.nodes_per_panel,
            panels_per_arc: o.quadrature.panels_per_arc,
            tip_grading: o.quadrature.tip_grading,
            inset_len: o.inset,
            rank_tol: o.rank_tol,
            assembly_tol: o.assembly_tol,
            max_refinements: o.max_refinements,
            constant_term: o.constant_term,
            tolerances: Tolerances::default(),
        }
    }
}

impl NumericsConfig {
    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            order: self.order,
            basis: self.basis,
            quadrature: QuadratureRule::new(self.nodes_per_panel, self.panels_per_arc).with_tip_grading(self.tip_grading),
            oversampling: self.oversampling,
            inset: self.inset_len,
            rank_tol: self.rank_tol,
            assembly_tol: self.assembly_tol,
            max_refinements: self.max_refinements,
            constant_term: self.constant_term,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Output directory; relative paths resolve against the output root.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// Boundary samples per arc, ends included.
    pub samples: usize,
    /// Magnification of displacements in the deformed-boundary table.
    pub displacement_scale: f64,
    /// Seed for randomly placed validation points.
    pub seed: u64,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: None,
            samples: 201,
            displacement_scale: 1.0,
            seed: 7,
        }
    }
}

/// A complete run description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub contour: ContourConfig,
    pub matrix: MaterialConfig,
    pub inclusion: MaterialConfig,
    pub surface_tension: SurfaceTensionConfig,
    pub load: LoadConfig,
    #[serde(default)]
    pub tractions: TractionsConfig,
    #[serde(default)]
    pub numerics: NumericsConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Builds everything once so that invalid values fail at load time.
    pub fn check(&self) -> Result<()> {
        self.setup()?;
        self.numerics.solver_options().validate()?;
        if self.output.samples < 2 {
            return Err(Error::Config("output.samples must be at least 2".into()));
        }
        if !self.output.displacement_scale.is_finite() {
            return Err(Error::Config("output.displacement_scale must be finite".into()));
        }
        Ok(())
    }

    pub fn setup(&self) -> Result<ProblemSetup> {
        let st = &self.surface_tension;
        ProblemSetup::new(
            self.contour.build()?,
            self.matrix.build()?,
            self.inclusion.build()?,
            SurfaceTension::new(st.gamma_plus_gpa_len, st.gamma_minus_gpa_len, st.gamma_interface_gpa_len)?,
            RemoteLoad::new(self.load.sigma1_gpa, self.load.sigma2_gpa, self.load.alpha_rad),
            self.tractions.build()?,
        )
    }

    pub fn solver_options(&self) -> SolverOptions {
        self.numerics.solver_options()
    }
}

/// Output root: the environment variable if set, else `out`.
pub fn output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_VAR)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("out"))
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
[contour]
shape = "circle"
radius_len = 1.0
crack_start_rad = 0.0
crack_end_rad = 3.141592653589793

[matrix]
mu_gpa = 40.0
nu = 0.25

[inclusion]
mu_gpa = 60.0
nu = 0.35

[surface_tension]
gamma_plus_gpa_len = 0.1
gamma_minus_gpa_len = 0.1
gamma_interface_gpa_len = 0.1

[load]
sigma1_gpa = 1.0
"#;

    #[test]
    fn parses_a_minimal_file() {
        let c = RunConfig::from_toml(BASIC).unwrap();
        assert_eq!(c.numerics.order, 24);
        assert_eq!(c.tractions, TractionsConfig::Zero);
        let s = c.setup().unwrap();
        assert!((s.contour.l0() - std::f64::consts::PI).abs() < 1e-14);
    }

    #[test]
    fn rejects_unknown_keys() {
        let text = BASIC.replace("nu = 0.25", "nu = 0.25\nyoung = 1.0");
        let e = RunConfig::from_toml(&text).unwrap_err().to_string();
        assert!(e.contains("young"), "{e}");
        let text = BASIC.replace("radius_len = 1.0", "radius_len = 1.0\nradius = 2.0");
        assert!(RunConfig::from_toml(&text).is_err());
    }

    #[test]
    fn rejects_invalid_poisson_ratio() {
        let text = BASIC.replace("nu = 0.25", "nu = 0.7");
        let e = RunConfig::from_toml(&text).unwrap_err().to_string();
        assert!(e.contains("Poisson"), "{e}");
    }

    #[test]
    fn reports_the_line_of_a_type_error() {
        let text = BASIC.replace("mu_gpa = 40.0", "mu_gpa = \"forty\"");
        let e = RunConfig::from_toml(&text).unwrap_err().to_string();
        assert!(e.contains("line") && e.contains("mu_gpa"), "{e}");
    }

    #[test]
    fn round_trips_through_toml() {
        let mut c = RunConfig::from_toml(BASIC).unwrap();
        c.tractions = TractionsConfig::Table {
            s_len: vec![0.0, 1.0, 3.0],
            f1_re_gpa: vec![0.1, 0.2, 0.3],
            f1_im_gpa: vec![0.0; 3],
            f2_re_gpa: vec![0.1, 0.2, 0.3],
            f2_im_gpa: vec![0.0; 3],
        };
        c.output.dir = Some("runs/a".into());
        let back = RunConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(back, c);
    }
}
