//! Built-in parameter sets, one per named scenario.

use std::f64::consts::PI;

use crate::config::{
    ContourConfig, LoadConfig, MaterialConfig, NumericsConfig, OutputConfig, RunConfig, SurfaceTensionConfig, TractionsConfig,
};
use crate::model::PlaneMode;

/// Order used by the presets. The tip layers at small tension need more terms
/// than the library default.
pub const PRESET_ORDER: usize = 48;

pub const NAMES: [&str; 7] = ["fig1", "fig2", "fig3", "fig4", "fig5", "fig5a", "fig6"];

#[derive(Debug, Clone, PartialEq)]
pub struct Case {
    /// Subdirectory name.
    pub label: String,
    pub config: RunConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: &'static str,
    pub description: &'static str,
    /// Caveat recorded in the scenario metadata.
    pub note: Option<&'static str>,
    pub cases: Vec<Case>,
}

fn material(mu: f64, nu: f64) -> MaterialConfig {
    MaterialConfig {
        mu_gpa: mu,
        nu,
        plane: PlaneMode::PlaneStress,
    }
}

fn tension(plus_minus: f64, interface: f64) -> SurfaceTensionConfig {
    SurfaceTensionConfig {
        gamma_plus_gpa_len: plus_minus,
        gamma_minus_gpa_len: plus_minus,
        gamma_interface_gpa_len: interface,
    }
}

/// Unit circle with the crack on the upper half, the reference geometry of
/// most presets.
pub fn semicircle_config(gamma: f64, gamma_interface: f64, alpha: f64) -> RunConfig {
    RunConfig {
        contour: ContourConfig::Circle {
            radius_len: 1.0,
            crack_start_rad: 0.0,
            crack_end_rad: PI,
        },
        matrix: material(40.0, 0.25),
        inclusion: material(60.0, 0.35),
        surface_tension: tension(gamma, gamma_interface),
        load: LoadConfig {
            sigma1_gpa: 1.0,
            sigma2_gpa: 0.0,
            alpha_rad: alpha,
        },
        tractions: TractionsConfig::Zero,
        numerics: NumericsConfig {
            order: PRESET_ORDER,
            ..NumericsConfig::default()
        },
        output: OutputConfig::default(),
    }
}

fn case(label: String, config: RunConfig) -> Case {
    Case { label, config }
}

/// `0.1` as `0.1`, `1.0` as `1`, `π/4` as `0.7854`.
pub fn value_label(v: f64) -> String {
    let r = (v * 1e4).round() / 1e4;
    format!("{r}")
}

pub fn preset(name: &str) -> Option<Scenario> {
    let gammas = [0.1, 0.5, 1.0];
    Some(match name {
        "fig1" => Scenario {
            name: "fig1",
            description: "Re and Im of g0' on the semicircular crack for N = 16, 24, 30",
            note: None,
            cases: [16, 24, 30]
                .into_iter()
                .map(|n| {
                    let mut c = semicircle_config(0.1, 0.1, 0.0);
                    c.numerics.order = n;
                    case(format!("order_{n}"), c)
                })
                .collect(),
        },
        "fig2" | "fig3" => Scenario {
            name: if name == "fig2" { "fig2" } else { "fig3" },
            description: if name == "fig2" {
                "normal and shear tractions on the crack and the interface for three crack-face tensions"
            } else {
                "tangential and normal displacement derivatives on the crack and the interface for three crack-face tensions"
            },
            note: None,
            cases: gammas
                .iter()
                .map(|&g| case(format!("gamma_{}", value_label(g)), semicircle_config(g, 0.0, 0.0)))
                .collect(),
        },
        "fig4" => {
            let mut with = semicircle_config(0.01, 0.05, 0.0);
            let mut without = semicircle_config(0.01, 0.0, 0.0);
            for c in [&mut with, &mut without] {
                c.matrix = material(40.0, 0.25);
                c.inclusion = material(40.0, 0.25);
            }
            Scenario {
                name: "fig4",
                description: "displacement derivatives on the right half of the crack, identical phases",
                note: Some(
                    "identical phases fall in the special material case; the external comparison curves are not regenerated",
                ),
                cases: vec![
                    case("interface_tension_0.05".into(), with),
                    case("interface_tension_0".into(), without),
                ],
            }
        }
        "fig5" => Scenario {
            name: "fig5",
            description: "deformed boundary under horizontal and vertical remote tension, displacements scaled by 2",
            note: None,
            cases: [("horizontal", 0.0), ("vertical", PI / 2.0)]
                .into_iter()
                .map(|(label, alpha)| {
                    let mut c = semicircle_config(0.1, 0.05, alpha);
                    c.output.displacement_scale = 2.0;
                    case(label.into(), c)
                })
                .collect(),
        },
        "fig5a" => {
            let mut c = semicircle_config(1e-4, 0.0, PI / 6.0);
            c.contour = ContourConfig::Circle {
                radius_len: 1.0,
                crack_start_rad: -PI / 6.0,
                crack_end_rad: PI / 6.0,
            };
            c.inclusion = material(44.2, 0.22);
            c.matrix = material(2.39, 0.35);
            Scenario {
                name: "fig5a",
                description: "glass inclusion in epoxy: tractions on the bonded interface",
                note: Some("the external comparison curves for the tension-free problem are not regenerated"),
                cases: vec![case("glass_epoxy".into(), c)],
            }
        }
        "fig6" => Scenario {
            name: "fig6",
            description: "maximal crack opening against the crack-face tension for three load directions",
            note: None,
            cases: [0.0, PI / 4.0, PI / 2.0]
                .iter()
                .flat_map(|&a| {
                    gammas.iter().map(move |&g| {
                        case(
                            format!("alpha_{}_gamma_{}", value_label(a), value_label(g)),
                            semicircle_config(g, 0.0, a),
                        )
                    })
                })
                .collect(),
        },
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_name_resolves_to_valid_cases() {
        for name in NAMES {
            let s = preset(name).unwrap();
            assert_eq!(s.name, name);
            assert!(!s.cases.is_empty());
            for c in &s.cases {
                c.config.check().unwrap();
            }
        }
        assert!(preset("fig7").is_none());
    }

    #[test]
    fn fig4_is_the_special_material_case() {
        let s = preset("fig4").unwrap();
        assert!(s.note.is_some());
        assert!(s.cases[0].config.setup().unwrap().is_special_material_case());
    }

    #[test]
    fn fig5a_crack_spans_sixty_degrees() {
        let s = preset("fig5a").unwrap().cases[0].config.setup().unwrap();
        assert!((s.contour.l0() - PI / 3.0).abs() < 1e-12);
        assert_eq!(s.surface.interface, 0.0);
    }

    #[test]
    fn presets_round_trip_through_config_files() {
        for name in NAMES {
            for c in preset(name).unwrap().cases {
                let text = c.config.to_toml().unwrap();
                assert_eq!(RunConfig::from_toml(&text).unwrap(), c.config, "{name}/{}", c.label);
            }
        }
    }

    #[test]
    fn labels() {
        assert_eq!(value_label(0.1), "0.1");
        assert_eq!(value_label(1.0), "1");
        assert_eq!(value_label(PI / 4.0), "0.7854");
    }
}
