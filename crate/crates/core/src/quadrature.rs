//! Composite Gauss–Legendre rules on the two arcs of the contour.

use serde::{Deserialize, Serialize};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Computes an `n`-point rule by Newton iteration on the Legendre recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi's initial guess.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Maps the rule onto `[a, b]`, appending `(node, weight)` pairs.
    pub fn push_mapped(&self, a: f64, b: f64, out: &mut Vec<(f64, f64)>) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        out.extend(self.nodes.iter().zip(&self.weights).map(|(x, w)| (mid + half * x, half * w)));
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite rule settings: `panels_per_arc` equal panels on each arc, each
/// carrying `nodes_per_panel` Gauss points; `tip_grading` extra dyadic levels
/// refine the end panels of every arc toward the crack tips.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureRule {
    pub nodes_per_panel: usize,
    pub panels_per_arc: usize,
    #[serde(default)]
    pub tip_grading: usize,
}

impl Default for QuadratureRule {
    fn default() -> Self {
        Self {
            nodes_per_panel: 16,
            panels_per_arc: 8,
            tip_grading: 0,
        }
    }
}

impl QuadratureRule {
    pub fn new(nodes_per_panel: usize, panels_per_arc: usize) -> Self {
        Self {
            nodes_per_panel,
            panels_per_arc,
            tip_grading: 0,
        }
    }

    pub fn with_tip_grading(mut self, levels: usize) -> Self {
        self.tip_grading = levels;
        self
    }

    /// Same node count per panel, twice the panels.
    pub fn refined(self) -> Self {
        Self {
            panels_per_arc: self.panels_per_arc * 2,
            ..self
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        if self.nodes_per_panel < 4 {
            return Err(crate::Error::InvalidArgument(format!(
                "quadrature needs at least 4 nodes per panel, got {}",
                self.nodes_per_panel
            )));
        }
        if self.panels_per_arc == 0 {
            return Err(crate::Error::InvalidArgument(
                "quadrature needs at least one panel per arc".into(),
            ));
        }
        Ok(())
    }

    /// Panel breakpoints on `[a, b]`, including the graded end panels.
    pub fn breakpoints(&self, a: f64, b: f64) -> Vec<f64> {
        let h = (b - a) / self.panels_per_arc as f64;
        let mut pts = Vec::with_capacity(self.panels_per_arc + 2 * self.tip_grading + 1);
        pts.push(a);
        for lev in (1..=self.tip_grading).rev() {
            pts.push(a + h / 2f64.powi(lev as i32));
        }
        for p in 1..self.panels_per_arc {
            pts.push(a + h * p as f64);
        }
        for lev in 1..=self.tip_grading {
            pts.push(b - h / 2f64.powi(lev as i32));
        }
        pts.push(b);
        pts
    }

    /// All `(node, weight)` pairs on `[a, b]`.
    pub fn arc_nodes(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        let gl = GaussLegendre::new(self.nodes_per_panel);
        let bp = self.breakpoints(a, b);
        let mut out = Vec::with_capacity(gl.len() * (bp.len() - 1));
        for w in bp.windows(2) {
            gl.push_mapped(w[0], w[1], &mut out);
        }
        out
    }
}

/// Nodes on `[a, b]` with geometric refinement toward an interior-adjacent
/// point lying `dist` outside the interval, beyond `a` (`toward_a`) or `b`.
pub(crate) fn graded_toward(
    gl: &GaussLegendre,
    base_panels: usize,
    a: f64,
    b: f64,
    toward_a: bool,
    dist: f64,
) -> Vec<(f64, f64)> {
    let h = (b - a) / base_panels as f64;
    let mut levels = 0usize;
    while h / 2f64.powi(levels as i32) > dist && levels < 60 {
        levels += 1;
    }
    let mut bp = Vec::with_capacity(base_panels + levels + 1);
    if toward_a {
        bp.push(a);
        for lev in (1..=levels).rev() {
            bp.push(a + h / 2f64.powi(lev as i32));
        }
        for p in 1..=base_panels {
            bp.push(a + h * p as f64);
        }
    } else {
        for p in 0..base_panels {
            bp.push(a + h * p as f64);
        }
        for lev in 1..=levels {
            bp.push(b - h / 2f64.powi(lev as i32));
        }
        bp.push(b);
    }
    let mut out = Vec::with_capacity(gl.len() * bp.len());
    for w in bp.windows(2) {
        gl.push_mapped(w[0], w[1], &mut out);
    }
    out
}
