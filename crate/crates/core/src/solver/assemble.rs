use std::f64::consts::PI;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::density::{collocation_points, default_inset, slot, slot_lengths, Density, DensitySet};
use crate::basis::BasisKind;
use crate::geometry::{ArcId, Contour};
use crate::kernels::arc_moments;
use crate::model::ProblemSetup;
use crate::quadrature::QuadratureRule;
use crate::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// How the constant terms of `g0'` and `g'` on the bonded arc are tied together.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstantTerm {
    /// Only the non-constant coefficients are eliminated; the constant terms
    /// stay free and the pointwise relation is imposed at the arc midpoint.
    #[default]
    MidpointRows,
    /// The constant coefficients are eliminated as well.
    Eliminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    /// Truncation order `N`.
    pub order: usize,
    pub basis: BasisKind,
    pub quadrature: QuadratureRule,
    /// Collocation points per arc as a multiple of `N + 1`. A factor of 1
    /// gives the square system; larger factors solve in the least-squares
    /// sense, which is far better behaved near the tips.
    pub oversampling: usize,
    /// Collocation inset from the arc ends; `None` selects `l / (200 (N + 1))`.
    pub inset: Option<f64>,
    /// Singular values below `rank_tol · σ_max` count as rank deficiency.
    pub rank_tol: f64,
    /// Relative change of the matrix under panel doubling accepted as converged.
    pub assembly_tol: f64,
    pub max_refinements: usize,
    pub constant_term: ConstantTerm,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            order: 24,
            basis: BasisKind::Legendre,
            quadrature: QuadratureRule::default(),
            oversampling: 4,
            inset: None,
            rank_tol: 1e-12,
            assembly_tol: 1e-9,
            max_refinements: 3,
            constant_term: ConstantTerm::MidpointRows,
        }
    }
}

impl SolverOptions {
    pub fn with_order(order: usize) -> Self {
        Self {
            order,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.order < 4 {
            return Err(Error::InvalidArgument(format!(
                "truncation order must be at least 4, got {}",
                self.order
            )));
        }
        if self.oversampling == 0 {
            return Err(Error::InvalidArgument("oversampling factor must be at least 1".into()));
        }
        if let Some(d) = self.inset {
            if !(d > 0.0) {
                return Err(Error::InvalidArgument(format!("collocation inset must be positive, got {d}")));
            }
        }
        if !(self.rank_tol > 0.0 && self.rank_tol < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "rank tolerance must lie in (0, 1), got {}",
                self.rank_tol
            )));
        }
        if !(self.assembly_tol > 0.0) {
            return Err(Error::InvalidArgument("assembly tolerance must be positive".into()));
        }
        self.quadrature.validate()
    }
}

/// The condition a row enforces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    /// Zero displacement derivative of the inclusion field outside the inclusion.
    InclusionExtension,
    /// Zero displacement derivative of the matrix field inside the inclusion,
    /// with the crack single-valuedness term.
    MatrixExtension,
    /// Surface-tension traction condition on the inclusion-side crack face.
    CrackFaceInclusion,
    /// Surface-tension traction condition on the matrix-side crack face.
    CrackFaceMatrix,
    /// Traction jump across the bonded interface.
    InterfaceTraction,
    /// Displacement continuity across the bonded interface (constant terms).
    InterfaceDisplacement,
    /// Zero resultant force on the inclusion.
    ForceBalance,
    /// Equal tip-to-tip displacement along both crack faces.
    SingleValuedness,
    /// Continuity of `Re g0'` through both crack tips.
    InclusionTipContinuity,
    /// Continuity of `Re g'` through both crack tips.
    MatrixTipContinuity,
}

impl RowKind {
    pub fn name(self) -> &'static str {
        match self {
            RowKind::InclusionExtension => "inclusion_extension",
            RowKind::MatrixExtension => "matrix_extension",
            RowKind::CrackFaceInclusion => "crack_face_inclusion",
            RowKind::CrackFaceMatrix => "crack_face_matrix",
            RowKind::InterfaceTraction => "interface_traction",
            RowKind::InterfaceDisplacement => "interface_displacement",
            RowKind::ForceBalance => "force_balance",
            RowKind::SingleValuedness => "single_valuedness",
            RowKind::InclusionTipContinuity => "inclusion_tip_continuity",
            RowKind::MatrixTipContinuity => "matrix_tip_continuity",
        }
    }

    /// Side conditions are met exactly; the pointwise rows in the
    /// least-squares sense.
    pub fn is_constraint(self) -> bool {
        matches!(
            self,
            RowKind::InterfaceDisplacement
                | RowKind::ForceBalance
                | RowKind::SingleValuedness
                | RowKind::InclusionTipContinuity
                | RowKind::MatrixTipContinuity
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Part {
    Re,
    Im,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RowTag {
    pub kind: RowKind,
    pub part: Part,
    /// Collocation arc length, when the row is pointwise.
    pub s: Option<f64>,
}

impl RowTag {
    /// Grouping key used in residual reports.
    pub fn group(&self) -> String {
        let part = match self.part {
            Part::Re => "re",
            Part::Im => "im",
        };
        format!("{}.{}", self.kind.name(), part)
    }
}

impl fmt::Display for RowTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.s {
            Some(s) => write!(f, "{}@s={s:.6}", self.group()),
            None => write!(f, "{}", self.group()),
        }
    }
}

/// Map from the `16 N + 23` polynomial coefficients to the free unknowns left
/// after eliminating the bonded-arc `g'` coefficients.
#[derive(Debug, Clone)]
pub struct CoefficientLayout {
    pub order: usize,
    offsets: [usize; 8],
    full: usize,
    /// For each full coefficient, `(free index, weight)`.
    map: Vec<(usize, f64)>,
    free: usize,
}

impl CoefficientLayout {
    fn new(order: usize, ratio: f64, constant_term: ConstantTerm) -> Self {
        let mut offsets = [0; 8];
        let mut full = 0;
        for (j, off) in offsets.iter_mut().enumerate() {
            *off = full;
            let (nr, ni) = slot_lengths(order, j);
            full += nr + ni;
        }
        let first = match constant_term {
            ConstantTerm::MidpointRows => 1,
            ConstantTerm::Eliminate => 0,
        };
        let (g0b, gb) = (slot(Density::G0Prime, ArcId::Bonded), slot(Density::GPrime, ArcId::Bonded));
        let (nr, ni) = slot_lengths(order, gb);
        let eliminated = |c: usize| -> Option<usize> {
            let off = offsets[gb];
            if c >= off && c < off + nr {
                let k = c - off;
                (k >= first).then(|| offsets[g0b] + k)
            } else if c >= off + nr && c < off + nr + ni {
                let k = c - off - nr;
                (k >= first).then(|| offsets[g0b] + slot_lengths(order, g0b).0 + k)
            } else {
                None
            }
        };
        let mut free_index = vec![usize::MAX; full];
        let mut free = 0;
        for (c, fi) in free_index.iter_mut().enumerate() {
            if eliminated(c).is_none() {
                *fi = free;
                free += 1;
            }
        }
        let map = (0..full)
            .map(|c| match eliminated(c) {
                Some(src) => (free_index[src], ratio),
                None => (free_index[c], 1.0),
            })
            .collect();
        Self {
            order,
            offsets,
            full,
            map,
            free,
        }
    }

    pub fn full_count(&self) -> usize {
        self.full
    }

    pub fn free_count(&self) -> usize {
        self.free
    }

    fn re_col(&self, j: usize, k: usize) -> usize {
        self.offsets[j] + k
    }

    fn im_col(&self, j: usize, k: usize) -> usize {
        self.offsets[j] + slot_lengths(self.order, j).0 + k
    }

    /// Free-unknown matrix from a full-coefficient matrix.
    fn reduce(&self, full: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(full.nrows(), self.free);
        for (c, &(f, w)) in self.map.iter().enumerate() {
            let src = full.column(c);
            let mut dst = out.column_mut(f);
            dst.axpy(w, &src, 1.0);
        }
        out
    }

    /// Fills `dset` from the free unknowns.
    pub fn expand(&self, x: &DVector<f64>, dset: &mut DensitySet) {
        for j in 0..8 {
            let (nr, ni) = slot_lengths(self.order, j);
            for k in 0..nr {
                let (f, w) = self.map[self.re_col(j, k)];
                dset.re[j][k] = w * x[f];
            }
            for k in 0..ni {
                let (f, w) = self.map[self.im_col(j, k)];
                dset.im[j][k] = w * x[f];
            }
        }
    }
}

/// The assembled real collocation system.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub matrix: DMatrix<f64>,
    pub rhs: DVector<f64>,
    pub tags: Vec<RowTag>,
    pub layout: CoefficientLayout,
    pub basis: BasisKind,
    pub l0: f64,
    pub l: f64,
    /// Quadrature rule that passed the refinement test.
    pub rule: QuadratureRule,
    /// Relative matrix change at the last refinement.
    pub quadrature_change: f64,
    pub special_material_case: bool,
}

impl LinearSystem {
    pub fn empty_densities(&self) -> DensitySet {
        DensitySet::zeros(self.layout.order, self.l0, self.l, self.basis)
    }
}

struct Constants {
    mu0: f64,
    k0: f64,
    mu: f64,
    k: f64,
    gamma: Complex64,
    gamma_prime: Complex64,
}

/// Assembles the collocation system, doubling the quadrature panels until
/// the matrix is stable to `assembly_tol`.
pub fn assemble(setup: &ProblemSetup, options: &SolverOptions) -> Result<LinearSystem> {
    options.validate()?;
    let contour = &setup.contour;
    let consts = Constants {
        mu0: setup.inclusion.mu(),
        k0: setup.inclusion.kappa(),
        mu: setup.matrix.mu(),
        k: setup.matrix.kappa(),
        gamma: Complex64::new(setup.far_field().0, 0.0),
        gamma_prime: setup.far_field().1,
    };
    let ratio = -consts.mu * (consts.k0 + 1.0) / (consts.mu0 * (consts.k + 1.0));
    let layout = CoefficientLayout::new(options.order, ratio, options.constant_term);
    let inset = options
        .inset
        .unwrap_or_else(|| default_inset(contour.length(), options.order));
    let per_arc = options.oversampling * (options.order + 1);
    let points = collocation_points(contour.l0(), contour.length(), per_arc - 1, inset)?;
    let mut rule = options.quadrature;
    let (mut full, rhs, tags) = build(setup, &consts, &layout, options, &points, &rule)?;
    let mut change = f64::INFINITY;
    for _ in 0..=options.max_refinements {
        let finer = rule.refined();
        let (next, _, _) = build(setup, &consts, &layout, options, &points, &finer)?;
        let scale = next.amax().max(f64::MIN_POSITIVE);
        change = (&next - &full).amax() / scale;
        full = next;
        rule = finer;
        if change <= options.assembly_tol {
            break;
        }
    }
    if change > options.assembly_tol {
        return Err(Error::QuadratureNonConvergence {
            change,
            tol: options.assembly_tol,
        });
    }

    Ok(LinearSystem {
        matrix: layout.reduce(&full),
        rhs,
        tags,
        layout,
        basis: options.basis,
        l0: contour.l0(),
        l: contour.length(),
        rule,
        quadrature_change: change,
        special_material_case: setup.is_special_material_case(),
    })
}

/// Rows over the full coefficient set.
struct Rows {
    data: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    tags: Vec<RowTag>,
    width: usize,
}

impl Rows {
    fn push_complex(&mut self, row: Vec<Complex64>, rhs: Complex64, kind: RowKind, s: Option<f64>) {
        self.data.push(row.iter().map(|v| v.re).collect());
        self.rhs.push(rhs.re);
        self.tags.push(RowTag { kind, part: Part::Re, s });
        self.data.push(row.iter().map(|v| v.im).collect());
        self.rhs.push(rhs.im);
        self.tags.push(RowTag { kind, part: Part::Im, s });
    }

    fn push_real(&mut self, row: Vec<f64>, rhs: f64, kind: RowKind, part: Part, s: Option<f64>) {
        self.data.push(row);
        self.rhs.push(rhs);
        self.tags.push(RowTag { kind, part, s });
    }

    fn zero_complex(&self) -> Vec<Complex64> {
        vec![Complex64::new(0.0, 0.0); self.width]
    }
}

fn build(
    setup: &ProblemSetup,
    c: &Constants,
    layout: &CoefficientLayout,
    options: &SolverOptions,
    points: &(Vec<f64>, Vec<f64>),
    rule: &QuadratureRule,
) -> Result<(DMatrix<f64>, DVector<f64>, Vec<RowTag>)> {
    let contour = &setup.contour;
    let basis = options.basis;
    let n = options.order + 2;
    let mut rows = Rows {
        data: Vec::new(),
        rhs: Vec::new(),
        tags: Vec::new(),
        width: layout.full,
    };
    let moments_plain = [
        plain_moments(contour, basis, n, ArcId::Crack, rule),
        plain_moments(contour, basis, n, ArcId::Bonded, rule),
    ];

    // integral equations at every collocation point
    for (arc, pts) in [(ArcId::Crack, &points.0), (ArcId::Bonded, &points.1)] {
        for &s0 in pts {
            let (inc, mat, rhs) = extension_rows(contour, c, layout, basis, n, arc, s0, rule, &moments_plain[0])?;
            rows.push_complex(inc, Complex64::new(0.0, 0.0), RowKind::InclusionExtension, Some(s0));
            rows.push_complex(mat, rhs, RowKind::MatrixExtension, Some(s0));
        }
    }

    // surface-tension conditions on the crack faces
    let cp = setup.surface.plus * (c.k0 + 1.0) / (4.0 * c.mu0);
    let cm = setup.surface.minus * (c.k + 1.0) / (4.0 * c.mu);
    for &s in &points.0 {
        let (f1, f2) = setup.tractions.at(s);
        let ctx = PointCtx::new(contour, layout, basis, ArcId::Crack, s);
        let (re, im) = ctx.face_rows(Density::Q0, 1.0, &[(Density::G0Prime, cp)]);
        rows.push_real(re, 0.5 * f1.re, RowKind::CrackFaceInclusion, Part::Re, Some(s));
        rows.push_real(im, 0.5 * f1.im, RowKind::CrackFaceInclusion, Part::Im, Some(s));
        let (re, im) = ctx.face_rows(Density::Q, 1.0, &[(Density::GPrime, cm)]);
        rows.push_real(re, -0.5 * f2.re, RowKind::CrackFaceMatrix, Part::Re, Some(s));
        rows.push_real(im, -0.5 * f2.im, RowKind::CrackFaceMatrix, Part::Im, Some(s));
    }

    // traction jump on the bonded interface
    let ci = setup.surface.interface * (c.k0 + 1.0) / (4.0 * c.mu0);
    for &s in &points.1 {
        let ctx = PointCtx::new(contour, layout, basis, ArcId::Bonded, s);
        let (mut re, mut im) = ctx.face_rows(Density::Q0, 1.0, &[(Density::G0Prime, ci)]);
        let (re_q, im_q) = ctx.face_rows(Density::Q, 1.0, &[]);
        re.iter_mut().zip(&re_q).for_each(|(a, b)| *a += b);
        im.iter_mut().zip(&im_q).for_each(|(a, b)| *a += b);
        rows.push_real(re, 0.0, RowKind::InterfaceTraction, Part::Re, Some(s));
        rows.push_real(im, 0.0, RowKind::InterfaceTraction, Part::Im, Some(s));
    }

    // displacement continuity of the constant terms, at the bonded-arc midpoint
    if options.constant_term == ConstantTerm::MidpointRows {
        let (a, b) = contour.arc_bounds(ArcId::Bonded);
        let mid = 0.5 * (a + b);
        let mut row = rows.zero_complex();
        let mut p = vec![0.0; n];
        basis.values(0.0, &mut p);
        add_density(&mut row, layout, Density::G0Prime, ArcId::Bonded, &p, (c.k0 + 1.0) / c.mu0);
        add_density(&mut row, layout, Density::GPrime, ArcId::Bonded, &p, (c.k + 1.0) / c.mu);
        rows.push_complex(row, Complex64::new(0.0, 0.0), RowKind::InterfaceDisplacement, Some(mid));
    }

    // zero resultant force: ∫ (q0 - q) dt = 0
    let mut row = rows.zero_complex();
    for arc in ArcId::BOTH {
        let m = &moments_plain[arc.index()];
        add_density_complex(&mut row, layout, Density::Q0, arc, m, Complex64::new(1.0, 0.0));
        add_density_complex(&mut row, layout, Density::Q, arc, m, Complex64::new(-1.0, 0.0));
    }
    rows.push_complex(row, Complex64::new(0.0, 0.0), RowKind::ForceBalance, None);

    // single-valued displacements: ∫_{L0} ((κ0+1)/μ0 g0' + (κ+1)/μ g') dτ = 0
    let mut row = rows.zero_complex();
    let m = &moments_plain[ArcId::Crack.index()];
    add_density_complex(
        &mut row,
        layout,
        Density::G0Prime,
        ArcId::Crack,
        m,
        Complex64::new((c.k0 + 1.0) / c.mu0, 0.0),
    );
    add_density_complex(
        &mut row,
        layout,
        Density::GPrime,
        ArcId::Crack,
        m,
        Complex64::new((c.k + 1.0) / c.mu, 0.0),
    );
    rows.push_complex(row, Complex64::new(0.0, 0.0), RowKind::SingleValuedness, None);

    // Re g0' and Re g' continuous through s = 0 (= l) and s = l0
    for (density, kind) in [
        (Density::G0Prime, RowKind::InclusionTipContinuity),
        (Density::GPrime, RowKind::MatrixTipContinuity),
    ] {
        let (mut pm, mut pp) = (vec![0.0; n], vec![0.0; n]);
        basis.values(-1.0, &mut pm);
        basis.values(1.0, &mut pp);
        for (x_crack, x_bonded, s) in [(&pm, &pp, 0.0), (&pp, &pm, contour.l0())] {
            let mut row = vec![0.0; layout.full];
            add_real_part(&mut row, layout, density, ArcId::Crack, x_crack, 1.0);
            add_real_part(&mut row, layout, density, ArcId::Bonded, x_bonded, -1.0);
            rows.push_real(row, 0.0, kind, Part::Re, Some(s));
        }
    }

    let nrows = rows.data.len();
    let matrix = DMatrix::from_fn(nrows, layout.full, |i, j| rows.data[i][j]);
    Ok((matrix, DVector::from_vec(rows.rhs), rows.tags))
}

/// `∫ P_k(σ) t'(σ) dσ` over one arc.
fn plain_moments(contour: &Contour, basis: BasisKind, n: usize, arc: ArcId, rule: &QuadratureRule) -> Vec<Complex64> {
    let (a, b) = contour.arc_bounds(arc);
    let mid = 0.5 * (a + b);
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    let mut p = vec![0.0; n];
    for (s, w) in rule.arc_nodes(a, b) {
        basis.values(2.0 * (s - mid) / (b - a), &mut p);
        let dt = contour.point(s).d1 * w;
        for (o, v) in out.iter_mut().zip(&p) {
            *o += dt * v;
        }
    }
    out
}

/// Adds `weight · density` with real basis values `p` to a complex row.
fn add_density(row: &mut [Complex64], layout: &CoefficientLayout, density: Density, arc: ArcId, p: &[f64], weight: f64) {
    let j = slot(density, arc);
    let (nr, ni) = slot_lengths(layout.order, j);
    for k in 0..nr {
        row[layout.re_col(j, k)] += weight * p[k];
    }
    for k in 0..ni {
        row[layout.im_col(j, k)] += I * weight * p[k];
    }
}

/// Adds `weight · ∫ density · (complex moment)` to a complex row.
fn add_density_complex(
    row: &mut [Complex64],
    layout: &CoefficientLayout,
    density: Density,
    arc: ArcId,
    m: &[Complex64],
    weight: Complex64,
) {
    let j = slot(density, arc);
    let (nr, ni) = slot_lengths(layout.order, j);
    for k in 0..nr {
        row[layout.re_col(j, k)] += weight * m[k];
    }
    for k in 0..ni {
        row[layout.im_col(j, k)] += I * weight * m[k];
    }
}

fn add_real_part(row: &mut [f64], layout: &CoefficientLayout, density: Density, arc: ArcId, p: &[f64], weight: f64) {
    let j = slot(density, arc);
    for k in 0..slot_lengths(layout.order, j).0 {
        row[layout.re_col(j, k)] += weight * p[k];
    }
}

fn add_imag_part(row: &mut [f64], layout: &CoefficientLayout, density: Density, arc: ArcId, p: &[f64], weight: f64) {
    let j = slot(density, arc);
    for k in 0..slot_lengths(layout.order, j).1 {
        row[layout.im_col(j, k)] += weight * p[k];
    }
}

/// Basis values and arc-length derivatives at one collocation point.
struct PointCtx<'a> {
    layout: &'a CoefficientLayout,
    arc: ArcId,
    p: Vec<f64>,
    dp: Vec<f64>,
    ddp: Vec<f64>,
    rho: f64,
    rho_s: f64,
}

impl<'a> PointCtx<'a> {
    fn new(contour: &Contour, layout: &'a CoefficientLayout, basis: BasisKind, arc: ArcId, s: f64) -> Self {
        let n = layout.order + 2;
        let (a, b) = contour.arc_bounds(arc);
        let x = 2.0 * (s - 0.5 * (a + b)) / (b - a);
        let dx = 2.0 / (b - a);
        let mut p = vec![0.0; n];
        basis.values(x, &mut p);
        let dp = basis.derivatives(x, n, 1).into_iter().map(|v| v * dx).collect();
        let ddp = basis.derivatives(x, n, 2).into_iter().map(|v| v * dx * dx).collect();
        let pt = contour.point(s);
        Self {
            layout,
            arc,
            p,
            dp,
            ddp,
            rho: pt.curvature,
            rho_s: pt.curvature_ds,
        }
    }

    /// Real and imaginary rows of
    /// `w·q - Σ C [ϱ (ϱ Im g + Re g_s)]` and `w·q - Σ C d/ds[ϱ Im g + Re g_s]`.
    fn face_rows(&self, q: Density, w: f64, terms: &[(Density, f64)]) -> (Vec<f64>, Vec<f64>) {
        let (l, arc) = (self.layout, self.arc);
        let mut re = vec![0.0; l.full];
        let mut im = vec![0.0; l.full];
        add_real_part(&mut re, l, q, arc, &self.p, w);
        add_imag_part(&mut im, l, q, arc, &self.p, w);
        for &(g, coef) in terms {
            add_imag_part(&mut re, l, g, arc, &self.p, -coef * self.rho * self.rho);
            add_real_part(&mut re, l, g, arc, &self.dp, -coef * self.rho);
            let mixed: Vec<f64> = self
                .p
                .iter()
                .zip(&self.dp)
                .map(|(p, dp)| self.rho_s * p + self.rho * dp)
                .collect();
            add_imag_part(&mut im, l, g, arc, &mixed, -coef);
            add_real_part(&mut im, l, g, arc, &self.ddp, -coef);
        }
        (re, im)
    }
}

/// Both integral-equation rows at `s0`, with the right-hand side of the
/// matrix-side one.
#[allow(clippy::too_many_arguments)]
fn extension_rows(
    contour: &Contour,
    c: &Constants,
    layout: &CoefficientLayout,
    basis: BasisKind,
    n: usize,
    field_arc: ArcId,
    s0: f64,
    rule: &QuadratureRule,
    crack_moments: &[Complex64],
) -> Result<(Vec<Complex64>, Vec<Complex64>, Complex64)> {
    let field = contour.point(s0);
    let (a, b) = contour.arc_bounds(field_arc);
    let y0 = 2.0 * (s0 - 0.5 * (a + b)) / (b - a);
    let mut p0 = vec![0.0; n];
    basis.values(y0, &mut p0);
    let zero = Complex64::new(0.0, 0.0);
    let mut inc = vec![zero; layout.full];
    let mut mat = vec![zero; layout.full];
    let inv_2pi = 1.0 / (2.0 * PI);
    let pii = PI * I;
    let (k0, k) = (c.k0, c.k);
    let tangent_ratio = field.d1.conj() / field.d1;

    for src in ArcId::BOTH {
        let m = arc_moments(contour, basis, n, src, &field, rule)?;
        let same = src == field_arc;
        for density in Density::ALL {
            let j = slot(density, src);
            let (nr, ni) = slot_lengths(layout.order, j);
            let cols = (0..nr)
                .map(|kk| (layout.re_col(j, kk), kk, Complex64::new(1.0, 0.0)))
                .chain((0..ni).map(|kk| (layout.im_col(j, kk), kk, I)));
            for (col, kk, coef) in cols {
                let (cc, k1, k2) = (m.cauchy[kk], m.k1[kk], m.k2_conj[kk]);
                let free = if same { p0[kk] } else { 0.0 };
                match density {
                    Density::G0Prime => {
                        inc[col] += -I * (k0 + 1.0) / 2.0 * coef * free + inv_2pi * coef * ((k0 - 1.0) * cc - k1)
                            - inv_2pi * coef.conj() * k2;
                        // Single-valuedness enters as i·C/t'(s0). Any constant
                        // phase fixes C = 0, but only an imaginary one keeps the
                        // discrete operator mirror-symmetric.
                        if src == ArcId::Crack {
                            mat[col] += (k0 + 1.0) / c.mu0 * coef * crack_moments[kk] * I / field.d1;
                        }
                    }
                    Density::Q0 => {
                        inc[col] +=
                            k0 / ((k0 + 1.0) * pii) * coef * (2.0 * cc + k1) + 1.0 / ((k0 + 1.0) * pii) * coef.conj() * k2;
                    }
                    Density::GPrime => {
                        mat[col] += I * (k + 1.0) / 2.0 * coef * free + inv_2pi * coef * ((k - 1.0) * cc - k1)
                            - inv_2pi * coef.conj() * k2;
                        if src == ArcId::Crack {
                            mat[col] += (k + 1.0) / c.mu * coef * crack_moments[kk] * I / field.d1;
                        }
                    }
                    Density::Q => {
                        mat[col] += k / ((k + 1.0) * pii) * coef * (2.0 * cc + k1) + 1.0 / ((k + 1.0) * pii) * coef.conj() * k2;
                    }
                }
            }
        }
    }
    let rhs = -(k * c.gamma - c.gamma.conj() - c.gamma_prime.conj() * tangent_ratio);
    Ok((inc, mat, rhs))
}
