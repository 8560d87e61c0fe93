//! Command-line front end: `solve`, `sweep`, `scenario` and `validate`.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::{output_root, RunConfig};
use crate::geometry::{ArcId, Contour};
use crate::postprocess::{self, BoundaryField, TipFit};
use crate::scenario::{self, Scenario};
use crate::solver::{solve_problem, ResidualReport};
use crate::validation::{self, CheckEntry, ValidationReport};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "incrack",
    version,
    about = "Interface crack on a partially bonded inclusion with curvature-dependent surface tension"
)]
pub struct Cli {
    /// Suppress progress messages.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one configuration and write its outputs.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the truncation order.
        #[arg(long)]
        order: Option<usize>,
    },
    /// Solve a configuration for several values of one parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        order: Option<usize>,
        #[arg(long, value_enum)]
        parameter: SweepParameter,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        values: Vec<f64>,
    },
    /// Run a built-in figure preset.
    Scenario {
        #[arg(value_parser = scenario::NAMES)]
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        order: Option<usize>,
    },
    /// Solve a configuration and run the operator and solution checks.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        order: Option<usize>,
        /// Random trial densities for the inversion check.
        #[arg(long, default_value_t = 10)]
        trials: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParameter {
    /// Crack-face tension on both faces.
    Gamma0,
    /// Direction of the first principal remote stress.
    Alpha,
    /// Truncation order.
    #[value(name = "N", alias = "n", alias = "order")]
    N,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Gamma0 => "gamma0",
            SweepParameter::Alpha => "alpha",
            SweepParameter::N => "N",
        }
    }

    pub fn apply(self, cfg: &RunConfig, value: f64) -> Result<RunConfig> {
        let mut c = cfg.clone();
        match self {
            SweepParameter::Gamma0 => {
                c.surface_tension.gamma_plus_gpa_len = value;
                c.surface_tension.gamma_minus_gpa_len = value;
            }
            SweepParameter::Alpha => c.load.alpha_rad = value,
            SweepParameter::N => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "order must be a positive integer, got {value}"
                    )));
                }
                c.numerics.order = value as usize;
            }
        }
        c.check()?;
        Ok(c)
    }
}

/// Progress messages to stderr unless quiet.
#[derive(Debug, Clone, Copy)]
pub struct Log {
    pub quiet: bool,
}

impl Log {
    pub fn info(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub order: usize,
    pub crack_length: f64,
    pub contour_length: f64,
    pub max_crack_opening: f64,
    pub max_crack_opening_at: f64,
    pub tip_fits: Vec<TipFit>,
    pub displacement_closure_inclusion: f64,
    pub displacement_closure_matrix: f64,
    pub max_aperture: f64,
    pub special_material_case: bool,
    pub solver: ResidualReport,
    pub validation_pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Everything produced by one solve.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub summary: Summary,
    pub validation: ValidationReport,
    pub crack: BoundaryField,
    pub interface: BoundaryField,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Solves `cfg`, writing `config.toml`, `densities.json`,
/// `boundary_fields.csv`, `deformed_boundary.csv`, `aperture.csv`,
/// `validation.json` and `summary.json` into `dir`.
pub fn run_case(cfg: &RunConfig, dir: &Path, note: Option<&str>, log: Log) -> Result<RunOutput> {
    fs::create_dir_all(dir)?;
    let mut echo = cfg.clone();
    echo.output.dir = None;
    fs::write(dir.join("config.toml"), echo.to_toml()?)?;

    let setup = cfg.setup()?;
    let options = cfg.solver_options();
    log.info(format!("solving N = {} into {}", options.order, dir.display()));
    let sol = solve_problem(&setup, &options)?;
    let d = &sol.densities;
    write_json(&dir.join("densities.json"), d)?;

    let crack = postprocess::crack_face_fields(d, &setup, cfg.output.samples)?;
    let interface = postprocess::interface_fields(d, &setup, cfg.output.samples)?;
    postprocess::write_boundary_csv(postprocess::create(&dir.join("boundary_fields.csv"))?, &[&crack, &interface])?;

    let disp = postprocess::displacements(d, &setup, cfg.output.samples)?;
    postprocess::write_deformed_csv(
        postprocess::create(&dir.join("deformed_boundary.csv"))?,
        &setup.contour,
        &disp,
        cfg.output.displacement_scale,
    )?;
    let aperture = disp.aperture(setup.contour.l0());
    {
        let mut w = csv::Writer::from_writer(postprocess::create(&dir.join("aperture.csv"))?);
        w.write_record(["s", "aperture_re", "aperture_im", "aperture_abs"])?;
        for (s, a) in &aperture {
            w.write_record([s.to_string(), a.re.to_string(), a.im.to_string(), a.norm().to_string()])?;
        }
        w.flush()?;
    }

    let report = validation::validate_solution(d, &setup, &options.quadrature, &cfg.numerics.tolerances)?;
    write_json(&dir.join("validation.json"), &report)?;

    let (opening, at) = postprocess::max_crack_opening(d, &setup)?;
    let mut notes: Vec<String> = note.map(String::from).into_iter().collect();
    if setup.is_special_material_case() {
        notes.push("special material case: the phases satisfy mu0 k (k0 + 1) = mu k0 (k + 1)".into());
    }
    let summary = Summary {
        order: options.order,
        crack_length: setup.contour.l0(),
        contour_length: setup.contour.length(),
        max_crack_opening: opening,
        max_crack_opening_at: at,
        tip_fits: postprocess::tip_fits(d, &setup)?,
        displacement_closure_inclusion: disp.closure_inclusion.norm(),
        displacement_closure_matrix: disp.closure_matrix.norm(),
        max_aperture: aperture.iter().map(|(_, a)| a.norm()).fold(0.0, f64::max),
        special_material_case: setup.is_special_material_case(),
        solver: sol.report.clone(),
        validation_pass: report.all_pass(),
        note: if notes.is_empty() { None } else { Some(notes.join("; ")) },
    };
    write_json(&dir.join("summary.json"), &summary)?;
    for c in report.checks.iter().filter(|c| !c.pass) {
        log.info(format!("  check {} failed: {:.3e} > {:.1e}", c.name, c.value, c.tolerance));
    }
    Ok(RunOutput {
        summary,
        validation: report,
        crack,
        interface,
    })
}

/// Largest difference of `g0'` between two runs over the middle 80% of the
/// crack, relative to the larger curve amplitude. Both runs must share the
/// sample grid.
pub fn g0_prime_change(a: &BoundaryField, b: &BoundaryField) -> f64 {
    let n = a.samples.len().min(b.samples.len());
    if n < 2 {
        return f64::NAN;
    }
    let (s0, s1) = (a.samples[0].s, a.samples[n - 1].s);
    let lo = s0 + 0.1 * (s1 - s0);
    let hi = s1 - 0.1 * (s1 - s0);
    let amp = a
        .samples
        .iter()
        .chain(&b.samples)
        .map(|p| p.re_g0_prime.hypot(p.im_g0_prime))
        .fold(0.0, f64::max);
    let diff = a.samples[..n]
        .iter()
        .zip(&b.samples[..n])
        .filter(|(p, _)| p.s >= lo && p.s <= hi)
        .map(|(p, q)| (p.re_g0_prime - q.re_g0_prime).hypot(p.im_g0_prime - q.im_g0_prime))
        .fold(0.0, f64::max);
    if amp > 0.0 {
        diff / amp
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub parameter: &'static str,
    pub value: f64,
    pub max_crack_opening: f64,
    pub sigma_exponent_start: f64,
    pub sigma_exponent_end: f64,
    pub tau_log_slope_start: f64,
    pub tau_log_slope_end: f64,
    pub max_residual: f64,
    pub condition: f64,
    pub g0_prime_change_from_previous: f64,
    pub validation_pass: bool,
}

pub fn run_sweep(cfg: &RunConfig, parameter: SweepParameter, values: &[f64], dir: &Path, log: Log) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("sweep needs at least one value".into()));
    }
    fs::create_dir_all(dir)?;
    let mut rows = Vec::with_capacity(values.len());
    let mut previous: Option<BoundaryField> = None;
    for &v in values {
        let c = parameter.apply(cfg, v)?;
        let sub = dir.join(format!("{}_{}", parameter.name(), scenario::value_label(v)));
        let out = run_case(&c, &sub, None, log)?;
        let fits = &out.summary.tip_fits;
        rows.push(SweepRow {
            parameter: parameter.name(),
            value: v,
            max_crack_opening: out.summary.max_crack_opening,
            sigma_exponent_start: fits[0].sigma_exponent,
            sigma_exponent_end: fits[1].sigma_exponent,
            tau_log_slope_start: fits[0].tau_log_slope,
            tau_log_slope_end: fits[1].tau_log_slope,
            max_residual: out.summary.solver.max_residual,
            condition: out.summary.solver.condition,
            g0_prime_change_from_previous: previous.as_ref().map_or(f64::NAN, |p| g0_prime_change(p, &out.crack)),
            validation_pass: out.summary.validation_pass,
        });
        previous = Some(out.crack);
    }
    let mut w = csv::Writer::from_writer(postprocess::create(&dir.join("sweep.csv"))?);
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(rows)
}

/// Writes columns of equal length as one CSV table.
fn write_columns(path: &Path, columns: &[(String, Vec<f64>)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(postprocess::create(path)?);
    w.write_record(columns.iter().map(|(h, _)| h.as_str()))?;
    let n = columns.iter().map(|(_, v)| v.len()).min().unwrap_or(0);
    for j in 0..n {
        w.write_record(columns.iter().map(|(_, v)| v[j].to_string()))?;
    }
    w.flush()?;
    Ok(())
}

type Pick = fn(&postprocess::BoundarySample) -> f64;

/// One table per field: `s`, then one column per case and side.
fn overlay(dir: &Path, file: &str, runs: &[(String, &BoundaryField)], fields: &[(&str, Pick)]) -> Result<()> {
    let first = runs[0].1;
    let mut cols = vec![("s".to_string(), first.s())];
    for (label, f) in runs {
        for (name, pick) in fields {
            cols.push((format!("{name}_{label}"), f.samples.iter().map(pick).collect()));
        }
    }
    write_columns(&dir.join(file), &cols)
}

#[derive(Debug, Serialize)]
struct ScenarioMeta<'a> {
    name: &'a str,
    description: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<&'a str>,
    cases: Vec<&'a str>,
    validation_pass: bool,
}

/// Runs every case of `sc` and writes the figure tables into `dir`.
pub fn run_scenario(sc: &Scenario, dir: &Path, order: Option<usize>, log: Log) -> Result<Vec<RunOutput>> {
    fs::create_dir_all(dir)?;
    let mut outs = Vec::new();
    for case in &sc.cases {
        let mut c = case.config.clone();
        if let Some(n) = order {
            c.numerics.order = n;
            c.check()?;
        }
        outs.push(run_case(&c, &dir.join(&case.label), sc.note, log)?);
    }
    let labelled = |f: fn(&RunOutput) -> &BoundaryField| -> Vec<(String, &BoundaryField)> {
        sc.cases.iter().zip(&outs).map(|(c, o)| (c.label.clone(), f(o))).collect()
    };
    let sigma: [(&str, Pick); 2] = [
        ("sigma_n_plus_0", |p| p.sigma_n_plus_0),
        ("sigma_n_minus", |p| p.sigma_n_minus),
    ];
    let tau: [(&str, Pick); 2] = [("tau_n_plus_0", |p| p.tau_n_plus_0), ("tau_n_minus", |p| p.tau_n_minus)];
    let u_t: [(&str, Pick); 2] = [
        ("u_t_prime_plus_0", |p| p.u_t_prime_plus_0),
        ("u_t_prime_minus", |p| p.u_t_prime_minus),
    ];
    let u_n: [(&str, Pick); 2] = [
        ("u_n_prime_plus_0", |p| p.u_n_prime_plus_0),
        ("u_n_prime_minus", |p| p.u_n_prime_minus),
    ];
    let crack = labelled(|o| &o.crack);
    let interface = labelled(|o| &o.interface);
    match sc.name {
        "fig1" => {
            let g: [(&str, Pick); 2] = [("re_g0_prime", |p| p.re_g0_prime), ("im_g0_prime", |p| p.im_g0_prime)];
            overlay(dir, "g0_prime_by_order.csv", &crack, &g)?;
        }
        "fig2" => {
            overlay(dir, "crack_sigma_n.csv", &crack, &sigma)?;
            overlay(dir, "crack_tau_n.csv", &crack, &tau)?;
            overlay(dir, "interface_sigma_n.csv", &interface, &sigma)?;
            overlay(dir, "interface_tau_n.csv", &interface, &tau)?;
        }
        "fig3" => {
            overlay(dir, "crack_u_t_prime.csv", &crack, &u_t)?;
            overlay(dir, "crack_u_n_prime.csv", &crack, &u_n)?;
            overlay(dir, "interface_u_t_prime.csv", &interface, &u_t)?;
            overlay(dir, "interface_u_n_prime.csv", &interface, &u_n)?;
        }
        "fig4" => {
            // right half of the crack only
            let half: Vec<BoundaryField> = outs
                .iter()
                .map(|o| BoundaryField {
                    arc: ArcId::Crack,
                    samples: o
                        .crack
                        .samples
                        .iter()
                        .filter(|p| p.s <= 0.5 * o.summary.crack_length + 1e-12)
                        .copied()
                        .collect(),
                })
                .collect();
            let runs: Vec<(String, &BoundaryField)> = sc.cases.iter().map(|c| c.label.clone()).zip(&half).collect();
            let both: Vec<(&str, Pick)> = u_t.iter().chain(&u_n).copied().collect();
            overlay(dir, "crack_displacement_derivatives.csv", &runs, &both)?;
        }
        "fig5a" => {
            overlay(dir, "interface_sigma_n.csv", &interface, &sigma)?;
            overlay(dir, "interface_tau_n.csv", &interface, &tau)?;
        }
        "fig6" => {
            let mut w = csv::Writer::from_writer(postprocess::create(&dir.join("max_crack_opening.csv"))?);
            w.write_record(["alpha_rad", "gamma0_gpa_len", "max_crack_opening"])?;
            for (c, o) in sc.cases.iter().zip(&outs) {
                w.write_record([
                    c.config.load.alpha_rad.to_string(),
                    c.config.surface_tension.gamma_plus_gpa_len.to_string(),
                    o.summary.max_crack_opening.to_string(),
                ])?;
            }
            w.flush()?;
        }
        // fig5: each case already carries its deformed_boundary.csv at scale 2
        _ => {}
    }
    let meta = ScenarioMeta {
        name: sc.name,
        description: sc.description,
        note: sc.note,
        cases: sc.cases.iter().map(|c| c.label.as_str()).collect(),
        validation_pass: outs.iter().all(|o| o.summary.validation_pass),
    };
    write_json(&dir.join("scenario.json"), &meta)?;
    Ok(outs)
}

/// Inversion checks with seeded random trial densities on `contour`.
pub fn operator_checks(contour: &Contour, cfg: &RunConfig, trials: usize) -> Result<Vec<CheckEntry>> {
    let rule = cfg.solver_options().quadrature;
    let samples = validation::off_node_samples(contour, 16);
    validation::random_trials(cfg.output.seed, trials)
        .iter()
        .enumerate()
        .map(|(j, t)| {
            let mut e = validation::inversion_check(contour, &rule, t, &samples, cfg.numerics.tolerances.inversion)?;
            e.name = format!("cauchy_inversion_trial_{j}");
            Ok(e)
        })
        .collect()
}

fn load(config: &Path, order: Option<usize>) -> Result<RunConfig> {
    let mut cfg = RunConfig::from_file(config)?;
    if let Some(n) = order {
        cfg.numerics.order = n;
        cfg.check()?;
    }
    Ok(cfg)
}

fn out_dir(out: Option<PathBuf>, cfg: &RunConfig, default_name: &str) -> PathBuf {
    out.unwrap_or_else(|| match &cfg.output.dir {
        Some(d) if d.is_absolute() => d.clone(),
        Some(d) => output_root().join(d),
        None => output_root().join(default_name),
    })
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| "run".into(), |s| s.to_string_lossy().into_owned())
}

/// Exit status for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Contour(_) | Error::Material(_) | Error::SurfaceTension(_) | Error::InvalidArgument(_) => {
            EXIT_USAGE
        }
        _ => EXIT_SOLVER,
    }
}

/// Executes a parsed command line and returns the process exit status.
pub fn execute(cli: Cli) -> i32 {
    let log = Log { quiet: cli.quiet };
    let result: Result<bool> = (|| match cli.command {
        Command::Solve { config, out, order } => {
            let cfg = load(&config, order)?;
            let dir = out_dir(out, &cfg, &stem(&config));
            Ok(run_case(&cfg, &dir, None, log)?.summary.validation_pass)
        }
        Command::Sweep {
            config,
            out,
            order,
            parameter,
            values,
        } => {
            let cfg = load(&config, order)?;
            let dir = out_dir(out, &cfg, &format!("{}_sweep_{}", stem(&config), parameter.name()));
            let rows = run_sweep(&cfg, parameter, &values, &dir, log)?;
            Ok(rows.iter().all(|r| r.validation_pass))
        }
        Command::Scenario { name, out, order } => {
            let sc = scenario::preset(&name).ok_or_else(|| Error::InvalidArgument(format!("unknown scenario {name}")))?;
            let dir = out.unwrap_or_else(|| output_root().join(&name));
            let outs = run_scenario(&sc, &dir, order, log)?;
            Ok(outs.iter().all(|o| o.summary.validation_pass))
        }
        Command::Validate {
            config,
            out,
            order,
            trials,
        } => {
            let cfg = load(&config, order)?;
            let dir = out_dir(out, &cfg, &stem(&config));
            let run = run_case(&cfg, &dir, None, log)?;
            let mut report = run.validation;
            report.extend(operator_checks(&cfg.setup()?.contour, &cfg, trials)?);
            fs::write(dir.join("validation.json"), report.to_json()? + "\n")?;
            for c in &report.checks {
                log.info(format!(
                    "{:<34} {:>11.3e}  tol {:.1e}  {}",
                    c.name,
                    c.value,
                    c.tolerance,
                    if c.pass { "ok" } else { "FAIL" }
                ));
            }
            Ok(report.all_pass())
        }
    })();
    match result {
        Ok(true) => EXIT_OK,
        Ok(false) => {
            log.info("validation failed; outputs were written");
            EXIT_VALIDATION
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Parses `args` and runs; clap usage errors map to status 1.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_commands() {
        let c = Cli::try_parse_from([
            "incrack",
            "sweep",
            "--config",
            "a.toml",
            "--parameter",
            "gamma0",
            "--values",
            "0.1,0.5",
        ])
        .unwrap();
        match c.command {
            Command::Sweep { parameter, values, .. } => {
                assert_eq!(parameter, SweepParameter::Gamma0);
                assert_eq!(values, vec![0.1, 0.5]);
            }
            _ => panic!(),
        }
        let c = Cli::try_parse_from(["incrack", "--quiet", "scenario", "fig2", "--order", "16"]).unwrap();
        assert!(c.quiet);
        assert!(Cli::try_parse_from(["incrack", "scenario", "fig9"]).is_err());
        assert!(Cli::try_parse_from(["incrack", "sweep", "--config", "a.toml", "--parameter", "N"]).is_err());
    }

    #[test]
    fn usage_errors_exit_with_one() {
        assert_eq!(main_with_args(["incrack", "frobnicate"]), EXIT_USAGE);
        assert_eq!(
            main_with_args(["incrack", "solve", "--config", "/nonexistent/x.toml", "--quiet"]),
            EXIT_USAGE
        );
    }

    #[test]
    fn sweep_parameters_apply() {
        let cfg = scenario::semicircle_config(0.1, 0.0, 0.0);
        assert_eq!(
            SweepParameter::Gamma0
                .apply(&cfg, 0.5)
                .unwrap()
                .surface_tension
                .gamma_minus_gpa_len,
            0.5
        );
        assert_eq!(SweepParameter::N.apply(&cfg, 16.0).unwrap().numerics.order, 16);
        assert!(SweepParameter::N.apply(&cfg, 16.5).is_err());
        assert!(SweepParameter::Gamma0.apply(&cfg, 0.0).is_err());
    }

    #[test]
    fn empty_sweep_is_an_error() {
        let cfg = scenario::semicircle_config(0.1, 0.0, 0.0);
        let dir = std::env::temp_dir().join("incrack_empty_sweep");
        let e = run_sweep(&cfg, SweepParameter::Alpha, &[], &dir, Log { quiet: true }).unwrap_err();
        assert_eq!(exit_code(&e), EXIT_USAGE);
    }
}
