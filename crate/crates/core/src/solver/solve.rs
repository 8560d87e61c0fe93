use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::assemble::{assemble, LinearSystem, RowKind, SolverOptions};
use super::density::DensitySet;
use crate::model::ProblemSetup;
use crate::{Error, Result};

/// Diagnostics of one linear solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
    /// Ratio of extreme singular values of the equilibrated matrix.
    pub condition: f64,
    /// Largest `|A x - b|` over rows of each kind, in the rows' own units.
    pub max_residual_by_tag: BTreeMap<String, f64>,
    pub max_residual: f64,
    pub special_material_case: bool,
    pub quadrature_panels_per_arc: usize,
    pub quadrature_change: f64,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub densities: DensitySet,
    pub report: ResidualReport,
}

/// Solves the system with the side conditions as exact constraints and the
/// collocation rows in the least-squares sense.
///
/// Rows are equilibrated per complex condition and columns by their largest
/// entry. The constraints are eliminated through a Householder QR of their
/// transpose, and the remaining problem is solved by SVD. Fails when either
/// block is rank deficient at `rank_tol`.
pub fn solve(system: &LinearSystem, rank_tol: f64) -> Result<Solution> {
    let a = &system.matrix;
    let (m, n) = a.shape();
    let scaled_a = equilibrate(system);
    let (scaled, row_scale, col_scale) = (&scaled_a.0, &scaled_a.1, &scaled_a.2);
    let b = DVector::from_iterator(m, system.rhs.iter().zip(row_scale).map(|(v, s)| v * s));

    let (cons, rest): (Vec<usize>, Vec<usize>) = (0..m).partition(|&i| system.tags[i].kind.is_constraint());
    let p = cons.len();
    if p >= n {
        return Err(Error::InvalidArgument(format!(
            "{p} constraints leave no free unknowns out of {n}"
        )));
    }
    let c = scaled.select_rows(&cons);
    let d = DVector::from_iterator(p, cons.iter().map(|&i| b[i]));
    let a_ls = scaled.select_rows(&rest);
    let b_ls = DVector::from_iterator(rest.len(), rest.iter().map(|&i| b[i]));

    // C^T = Q R, so C Q = [R^T 0]: the first p rotated unknowns are fixed by
    // the constraints and the rest span their null space.
    let qr = c.transpose().qr();
    let r = qr.r();
    let rmax = r.diagonal().amax();
    if let Some(k) = (0..p).find(|&k| r[(k, k)].abs() <= rank_tol * rmax) {
        return Err(Error::SingularSystem {
            rank: k,
            cols: p,
            tags: cons
                .iter()
                .map(|&i| system.tags[i].to_string())
                .collect::<Vec<_>>()
                .join(", "),
        });
    }
    let y1 = r
        .transpose()
        .solve_lower_triangular(&d)
        .ok_or_else(|| Error::InvalidArgument("constraint block is singular".into()))?;
    let mut q_t = DMatrix::<f64>::identity(n, n);
    qr.q_tr_mul(&mut q_t);
    let q = q_t.transpose();
    let q1 = q.columns(0, p);
    let q2 = q.columns(p, n - p);

    let reduced = &a_ls * q2;
    let rhs = &b_ls - &a_ls * (q1 * &y1);
    let svd = reduced.svd(true, true);
    let sv = &svd.singular_values;
    let smax = sv.max();
    let smin = sv.min();
    let cutoff = rank_tol * smax;
    let rank = sv.iter().filter(|v| **v > cutoff).count();
    if rank < n - p {
        let u = svd.u.as_ref().expect("left vectors requested");
        let mut weights = vec![0.0; rest.len()];
        for (idx, v) in sv.iter().enumerate() {
            if *v <= cutoff {
                for (i, w) in weights.iter_mut().enumerate() {
                    *w += u[(i, idx)].powi(2);
                }
            }
        }
        let mut order: Vec<usize> = (0..rest.len()).collect();
        order.sort_by(|x, y| weights[*y].total_cmp(&weights[*x]));
        let tags: Vec<String> = order.iter().take(6).map(|&i| system.tags[rest[i]].to_string()).collect();
        return Err(Error::SingularSystem {
            rank: rank + p,
            cols: n,
            tags: tags.join(", "),
        });
    }
    let y2 = svd
        .solve(&rhs, cutoff)
        .map_err(|e| Error::InvalidArgument(format!("SVD solve failed: {e}")))?;
    let y = q1 * y1 + q2 * y2;
    let x = DVector::from_iterator(n, y.iter().zip(col_scale).map(|(v, s)| v * s));

    let residual = a * &x - &system.rhs;
    let mut by_tag: BTreeMap<String, f64> = BTreeMap::new();
    for (tag, r) in system.tags.iter().zip(residual.iter()) {
        let e = by_tag.entry(tag.group()).or_insert(0.0);
        *e = e.max(r.abs());
    }
    let max_residual = residual.amax();

    let mut densities = system.empty_densities();
    system.layout.expand(&x, &mut densities);
    Ok(Solution {
        densities,
        report: ResidualReport {
            rows: m,
            cols: n,
            rank: rank + p,
            condition: if smin > 0.0 { smax / smin } else { f64::INFINITY },
            max_residual_by_tag: by_tag,
            max_residual,
            special_material_case: system.special_material_case,
            quadrature_panels_per_arc: system.rule.panels_per_arc,
            quadrature_change: system.quadrature_change,
        },
    })
}

/// Returns the scaled matrix with its row and column factors. The real and
/// imaginary rows of one complex condition share a factor, so the weighting
/// does not depend on the phase in which the condition is written.
fn equilibrate(system: &LinearSystem) -> (DMatrix<f64>, Vec<f64>, Vec<f64>) {
    let a = &system.matrix;
    let (m, n) = a.shape();
    let key = |i: usize| {
        let tag = &system.tags[i];
        (tag.kind, tag.s.map_or(u64::MAX, f64::to_bits))
    };
    let mut group_max: BTreeMap<(RowKind, u64), f64> = BTreeMap::new();
    for i in 0..m {
        let e = group_max.entry(key(i)).or_insert(0.0);
        *e = e.max(a.row(i).amax());
    }
    let row_scale: Vec<f64> = (0..m)
        .map(|i| {
            let r = group_max[&key(i)];
            if r > 0.0 {
                1.0 / r
            } else {
                1.0
            }
        })
        .collect();
    let mut scaled = a.clone();
    for (i, s) in row_scale.iter().enumerate() {
        scaled.row_mut(i).scale_mut(*s);
    }
    let col_scale: Vec<f64> = (0..n)
        .map(|j| {
            let c = scaled.column(j).amax();
            if c > 0.0 {
                1.0 / c
            } else {
                1.0
            }
        })
        .collect();
    for (j, s) in col_scale.iter().enumerate() {
        scaled.column_mut(j).scale_mut(*s);
    }
    (scaled, row_scale, col_scale)
}

/// Assembles and solves `setup`.
pub fn solve_problem(setup: &ProblemSetup, options: &SolverOptions) -> Result<Solution> {
    let system = assemble(setup, options)?;
    solve(&system, options.rank_tol)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::geometry::{ArcId, Contour};
    use crate::model::{CrackTractions, Material, PlaneMode, RemoteLoad, SurfaceTension};
    use crate::solver::{slot, Density};

    fn semicircle(gamma: f64, load: RemoteLoad) -> ProblemSetup {
        ProblemSetup::new(
            Contour::circle(1.0, (0.0, PI)).unwrap(),
            Material::new(40.0, 0.25, PlaneMode::PlaneStress).unwrap(),
            Material::new(60.0, 0.35, PlaneMode::PlaneStress).unwrap(),
            SurfaceTension::new(gamma, gamma, gamma).unwrap(),
            load,
            CrackTractions::Zero,
        )
        .unwrap()
    }

    #[test]
    fn coefficient_counts() {
        let setup = semicircle(1.0, RemoteLoad::uniaxial(1.0, 0.0));
        for n in [8, 16] {
            let system = assemble(&setup, &SolverOptions::with_order(n)).unwrap();
            assert_eq!(system.layout.full_count(), 16 * n + 23);
            assert_eq!(system.matrix.ncols(), system.layout.free_count());
            assert_eq!(system.layout.free_count(), 14 * n + 22);
            assert_eq!(system.tags.len(), system.matrix.nrows());
        }
        // one point per unknown set: only the explicit single-valuedness pair
        // exceeds the unknown count
        let square = SolverOptions {
            oversampling: 1,
            ..SolverOptions::with_order(8)
        };
        let system = assemble(&setup, &square).unwrap();
        assert_eq!(system.matrix.nrows(), system.matrix.ncols() + 2);
    }

    #[test]
    fn zero_load_gives_zero_solution() {
        let setup = semicircle(0.5, RemoteLoad::uniaxial(0.0, 0.0));
        let sol = solve_problem(&setup, &SolverOptions::with_order(8)).unwrap();
        assert_eq!(sol.densities.max_abs_coefficient(), 0.0);
        assert_eq!(sol.report.max_residual, 0.0);
    }

    #[test]
    fn solution_is_linear_in_the_load() {
        let setup = semicircle(0.5, RemoteLoad::new(1.0, -0.4, 0.3));
        let options = SolverOptions::with_order(10);
        let one = solve_problem(&setup, &options).unwrap().densities;
        let three = solve_problem(&setup.with_scaled_loads(3.0), &options).unwrap().densities;
        let scale = one.max_abs_coefficient();
        for (a, b) in one.re.iter().flatten().zip(three.re.iter().flatten()) {
            assert!((3.0 * a - b).abs() <= 1e-10 * 3.0 * scale);
        }
        for (a, b) in one.im.iter().flatten().zip(three.im.iter().flatten()) {
            assert!((3.0 * a - b).abs() <= 1e-10 * 3.0 * scale);
        }
    }

    #[test]
    fn bonded_coefficients_obey_the_elimination_ratio() {
        let setup = semicircle(0.5, RemoteLoad::new(1.0, 0.2, 0.7));
        let sol = solve_problem(&setup, &SolverOptions::with_order(10)).unwrap();
        let (k0, mu0) = (setup.inclusion.kappa(), setup.inclusion.mu());
        let (k, mu) = (setup.matrix.kappa(), setup.matrix.mu());
        let (g0r, g0i) = sol.densities.taylor_coefficients(slot(Density::G0Prime, ArcId::Bonded));
        let (gr, gi) = sol.densities.taylor_coefficients(slot(Density::GPrime, ArcId::Bonded));
        let scale = g0r.iter().chain(&g0i).fold(0.0f64, |m, v| m.max(v.abs()));
        for kk in 1..g0r.len() {
            let lhs = (k0 + 1.0) / mu0 * g0r[kk];
            assert!((lhs + (k + 1.0) / mu * gr[kk]).abs() < 1e-12 * scale.max(1.0));
        }
        for kk in 1..g0i.len() {
            let lhs = (k0 + 1.0) / mu0 * g0i[kk];
            assert!((lhs + (k + 1.0) / mu * gi[kk]).abs() < 1e-12 * scale.max(1.0));
        }
    }

    #[test]
    fn side_condition_rows_are_met() {
        let setup = semicircle(1.0, RemoteLoad::uniaxial(1.0, 0.4));
        let sol = solve_problem(&setup, &SolverOptions::with_order(12)).unwrap();
        let by = &sol.report.max_residual_by_tag;
        for key in [
            "force_balance.re",
            "force_balance.im",
            "single_valuedness.re",
            "single_valuedness.im",
            "interface_displacement.re",
            "interface_displacement.im",
            "inclusion_tip_continuity.re",
            "matrix_tip_continuity.re",
        ] {
            assert!(by[key] < 1e-12, "{key}: {}", by[key]);
        }
    }

    #[test]
    fn semicircle_solution_is_mirror_symmetric() {
        let setup = semicircle(0.3, RemoteLoad::uniaxial(1.0, 0.0));
        let d = solve_problem(&setup, &SolverOptions::with_order(12)).unwrap().densities;
        let mut worst = 0.0f64;
        for i in 1..20 {
            let s = PI * i as f64 / 20.0;
            let a = d.value(Density::G0Prime, ArcId::Crack, s).unwrap();
            let b = d.value(Density::G0Prime, ArcId::Crack, PI - s).unwrap();
            // Re flips sign, Im is even
            worst = worst.max((a + b.conj()).norm());
            let a = d.value(Density::Q0, ArcId::Crack, s).unwrap();
            let b = d.value(Density::Q0, ArcId::Crack, PI - s).unwrap();
            worst = worst.max((a - b.conj()).norm());
        }
        assert!(worst < 1e-9, "asymmetry {worst}");
    }

    #[test]
    fn report_is_populated() {
        let setup = semicircle(1.0, RemoteLoad::uniaxial(1.0, 0.0));
        let sol = solve_problem(&setup, &SolverOptions::with_order(8)).unwrap();
        let r = &sol.report;
        assert_eq!(r.rank, r.cols);
        assert!(r.condition.is_finite() && r.condition >= 1.0);
        assert!(r.quadrature_change <= 1e-9);
        assert!(!r.special_material_case);
        assert!(r.max_residual_by_tag.contains_key("crack_face_inclusion.im"));
    }
}
