use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::BasisKind;
use crate::geometry::{ArcId, Contour};
use crate::{Error, Result};

/// The four unknown densities: traction jumps `q0`, `q` and displacement
/// derivative jumps `g0'`, `g'` of the inclusion and the matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Density {
    Q0,
    G0Prime,
    Q,
    GPrime,
}

impl Density {
    pub const ALL: [Density; 4] = [Density::Q0, Density::G0Prime, Density::Q, Density::GPrime];

    pub fn index(self) -> usize {
        match self {
            Density::Q0 => 0,
            Density::G0Prime => 1,
            Density::Q => 2,
            Density::GPrime => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Density::Q0 => "q0",
            Density::G0Prime => "g0_prime",
            Density::Q => "q",
            Density::GPrime => "g_prime",
        }
    }
}

/// Polynomial index `1..=8`: the four densities on the crack, then on the
/// bonded arc.
pub fn slot(density: Density, arc: ArcId) -> usize {
    4 * arc.index() + density.index()
}

/// Number of real-part and imaginary-part coefficients of polynomial `slot`.
///
/// Real parts carry degree `N + 1` and imaginary parts degree `N`, except the
/// real part of `q` on the bonded arc, which stops at degree `N`.
pub fn slot_lengths(order: usize, slot: usize) -> (usize, usize) {
    let re = if slot == 6 { order + 1 } else { order + 2 };
    (re, order + 1)
}

/// Piecewise-polynomial densities on the crack `[0, l0]` and the bonded arc
/// `[l0, l]`.
///
/// Coefficients are stored in `basis` on the scaled variable
/// `x = 2 (s - c) / L_arc`, with `c` the arc midpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensitySet {
    pub order: usize,
    pub l0: f64,
    pub l: f64,
    pub basis: BasisKind,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl DensitySet {
    pub fn zeros(order: usize, l0: f64, l: f64, basis: BasisKind) -> Self {
        let (re, im) = (0..8)
            .map(|j| {
                let (nr, ni) = slot_lengths(order, j);
                (vec![0.0; nr], vec![0.0; ni])
            })
            .unzip();
        Self {
            order,
            l0,
            l,
            basis,
            re,
            im,
        }
    }

    pub fn for_contour(contour: &Contour, order: usize, basis: BasisKind) -> Self {
        Self::zeros(order, contour.l0(), contour.length(), basis)
    }

    /// Total number of real coefficients, `16 N + 23`.
    pub fn coefficient_count(&self) -> usize {
        self.re.iter().chain(&self.im).map(Vec::len).sum()
    }

    pub fn arc_bounds(&self, arc: ArcId) -> (f64, f64) {
        match arc {
            ArcId::Crack => (0.0, self.l0),
            ArcId::Bonded => (self.l0, self.l),
        }
    }

    /// Expansion centre: `l0 / 2` on the crack, `(l0 + l) / 2` on the bonded arc.
    pub fn center(&self, arc: ArcId) -> f64 {
        let (a, b) = self.arc_bounds(arc);
        0.5 * (a + b)
    }

    fn scaled(&self, arc: ArcId, s: f64) -> Result<(f64, f64)> {
        let (a, b) = self.arc_bounds(arc);
        let slack = 1e-12 * self.l;
        if !(s >= a - slack && s <= b + slack) {
            return Err(Error::OutOfRange { s, range: (a, b) });
        }
        let half = 0.5 * (b - a);
        Ok(((s - self.center(arc)) / half, 1.0 / half))
    }

    /// Value of `density` at arc length `s` on `arc`.
    pub fn value(&self, density: Density, arc: ArcId, s: f64) -> Result<Complex64> {
        let (x, _) = self.scaled(arc, s)?;
        let j = slot(density, arc);
        let mut p = vec![0.0; self.re[j].len().max(self.im[j].len())];
        self.basis.values(x, &mut p);
        Ok(combine(&self.re[j], &self.im[j], &p))
    }

    /// `d^order/ds^order` of `density` at `s` on `arc`.
    pub fn derivative(&self, density: Density, arc: ArcId, s: f64, order: usize) -> Result<Complex64> {
        if order > 3 || order > self.order {
            return Err(Error::InvalidArgument(format!(
                "derivative order {order} needs 1 <= order <= min(3, N = {})",
                self.order
            )));
        }
        let (x, dxds) = self.scaled(arc, s)?;
        let j = slot(density, arc);
        let n = self.re[j].len().max(self.im[j].len());
        let p = self.basis.derivatives(x, n, order);
        Ok(combine(&self.re[j], &self.im[j], &p) * dxds.powi(order as i32))
    }

    /// Value of `density` at any `s`, choosing the arc that contains it.
    /// The crack tips belong to the crack.
    pub fn value_at(&self, density: Density, s: f64) -> Result<Complex64> {
        let s = if (0.0..=self.l).contains(&s) {
            s
        } else {
            s.rem_euclid(self.l)
        };
        let arc = if s <= self.l0 { ArcId::Crack } else { ArcId::Bonded };
        self.value(density, arc, s)
    }

    /// Coefficients of polynomial `slot` in powers of `(s - c)`.
    pub fn taylor_coefficients(&self, slot: usize) -> (Vec<f64>, Vec<f64>) {
        let arc = if slot < 4 { ArcId::Crack } else { ArcId::Bonded };
        let (a, b) = self.arc_bounds(arc);
        let inv_half = 2.0 / (b - a);
        let conv = |c: &[f64]| -> Vec<f64> {
            self.basis
                .to_monomial(c)
                .into_iter()
                .enumerate()
                .map(|(k, v)| v * inv_half.powi(k as i32))
                .collect()
        };
        (conv(&self.re[slot]), conv(&self.im[slot]))
    }

    /// Sets polynomial `slot` from coefficients in powers of `(s - c)`.
    pub fn set_taylor_coefficients(&mut self, slot: usize, re: &[f64], im: &[f64]) -> Result<()> {
        let (nr, ni) = slot_lengths(self.order, slot);
        if re.len() > nr || im.len() > ni {
            return Err(Error::InvalidArgument(format!(
                "slot {slot} holds at most {nr} real and {ni} imaginary coefficients"
            )));
        }
        let arc = if slot < 4 { ArcId::Crack } else { ArcId::Bonded };
        let (a, b) = self.arc_bounds(arc);
        let half = 0.5 * (b - a);
        let table = self.basis.monomial_table(nr.max(ni));
        let convert = |c: &[f64], n: usize| -> Vec<f64> {
            // back-substitution: the table is lower triangular in (basis, power)
            let mut mono: Vec<f64> = (0..n)
                .map(|k| c.get(k).copied().unwrap_or(0.0) * half.powi(k as i32))
                .collect();
            let mut out = vec![0.0; n];
            for k in (0..n).rev() {
                out[k] = mono[k] / table[k][k];
                for (m, v) in mono.iter_mut().enumerate().take(k + 1) {
                    *v -= out[k] * table[k][m];
                }
            }
            out
        };
        self.re[slot] = convert(re, nr);
        self.im[slot] = convert(im, ni);
        Ok(())
    }

    /// Every coefficient multiplied by `factor`.
    pub fn scaled_by(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for v in out.re.iter_mut().chain(out.im.iter_mut()) {
            v.iter_mut().for_each(|c| *c *= factor);
        }
        out
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.re.iter().chain(&self.im).flatten().fold(0.0, |m, c| m.max(c.abs()))
    }
}

fn combine(re: &[f64], im: &[f64], p: &[f64]) -> Complex64 {
    let r: f64 = re.iter().zip(p).map(|(c, v)| c * v).sum();
    let i: f64 = im.iter().zip(p).map(|(c, v)| c * v).sum();
    Complex64::new(r, i)
}

/// `N + 1` equally spaced points on each arc, inset by `delta` from the ends.
pub fn collocation_points(l0: f64, l: f64, n: usize, delta: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::InvalidArgument("collocation needs N >= 1".into()));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "collocation inset must be positive, got {delta}"
        )));
    }
    let arc = |a: f64, b: f64| -> Result<Vec<f64>> {
        if 2.0 * delta >= b - a {
            return Err(Error::InvalidArgument(format!(
                "inset {delta} leaves no room on an arc of length {}",
                b - a
            )));
        }
        let h = (b - a - 2.0 * delta) / n as f64;
        Ok((0..=n).map(|m| a + delta + h * m as f64).collect())
    };
    Ok((arc(0.0, l0)?, arc(l0, l)?))
}

/// Default inset `l / (200 (N + 1))`.
pub fn default_inset(l: f64, n: usize) -> f64 {
    l / (200.0 * (n as f64 + 1.0))
}
