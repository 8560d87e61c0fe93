//! Polynomial families on the scaled arc variable `x = 2 (s - c) / L ∈ [-1, 1]`.
//!
//! Both families span the same space of polynomials of a given degree; the
//! Legendre family is used internally for conditioning and converted to plain
//! centered Taylor coefficients for reporting.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BasisKind {
    /// Monomials `x^k`.
    Taylor,
    /// Legendre polynomials `P_k(x)`.
    #[default]
    Legendre,
}

impl BasisKind {
    /// Values of the first `out.len()` basis functions at `x`.
    pub fn values(self, x: f64, out: &mut [f64]) {
        let n = out.len();
        if n == 0 {
            return;
        }
        out[0] = 1.0;
        if n == 1 {
            return;
        }
        out[1] = x;
        match self {
            BasisKind::Taylor => {
                for k in 2..n {
                    out[k] = out[k - 1] * x;
                }
            }
            BasisKind::Legendre => {
                for k in 1..n - 1 {
                    let kf = k as f64;
                    out[k + 1] = ((2.0 * kf + 1.0) * x * out[k] - kf * out[k - 1]) / (kf + 1.0);
                }
            }
        }
    }

    /// `d^order/dx^order` of the first `n` basis functions at `x`.
    pub fn derivatives(self, x: f64, n: usize, order: usize) -> Vec<f64> {
        let mut cur = vec![0.0; n];
        self.values(x, &mut cur);
        for m in 1..=order {
            let mut next = vec![0.0; n];
            match self {
                BasisKind::Taylor => {
                    // recompute directly: k!/(k-m)! x^(k-m)
                    for (k, v) in next.iter_mut().enumerate() {
                        if k >= m {
                            let coef: f64 = ((k - m + 1)..=k).map(|j| j as f64).product();
                            *v = coef * x.powi((k - m) as i32);
                        }
                    }
                }
                BasisKind::Legendre => {
                    // D^m P_{k+1} = D^m P_{k-1} + (2k+1) D^{m-1} P_k
                    for k in 0..n.saturating_sub(1) {
                        let prev = if k >= 1 { next[k - 1] } else { 0.0 };
                        next[k + 1] = prev + (2.0 * k as f64 + 1.0) * cur[k];
                    }
                }
            }
            cur = next;
        }
        cur
    }

    /// Divided differences `(P_k(x) - P_k(y)) / (x - y)`, stable as `x → y`.
    pub fn divided_differences(self, x: f64, y: f64, out: &mut [f64]) {
        let n = out.len();
        if n == 0 {
            return;
        }
        out[0] = 0.0;
        if n == 1 {
            return;
        }
        out[1] = 1.0;
        match self {
            BasisKind::Taylor => {
                let mut ypow = y;
                for k in 1..n - 1 {
                    out[k + 1] = x * out[k] + ypow;
                    ypow *= y;
                }
            }
            BasisKind::Legendre => {
                let mut p_prev = 1.0;
                let mut p = x;
                for k in 1..n - 1 {
                    let kf = k as f64;
                    out[k + 1] = ((2.0 * kf + 1.0) * (p + y * out[k]) - kf * out[k - 1]) / (kf + 1.0);
                    let p_next = ((2.0 * kf + 1.0) * x * p - kf * p_prev) / (kf + 1.0);
                    p_prev = p;
                    p = p_next;
                }
            }
        }
    }

    /// Row `k` holds the monomial coefficients of basis function `k`.
    pub fn monomial_table(self, n: usize) -> Vec<Vec<f64>> {
        let mut rows = vec![vec![0.0; n]; n];
        for (k, row) in rows.iter_mut().enumerate() {
            if self == BasisKind::Taylor {
                row[k] = 1.0;
            }
        }
        if self == BasisKind::Legendre && n > 0 {
            rows[0][0] = 1.0;
            if n > 1 {
                rows[1][1] = 1.0;
            }
            for k in 1..n.saturating_sub(1) {
                let kf = k as f64;
                for j in 0..n {
                    let shifted = if j >= 1 { rows[k][j - 1] } else { 0.0 };
                    rows[k + 1][j] = ((2.0 * kf + 1.0) * shifted - kf * rows[k - 1][j]) / (kf + 1.0);
                }
            }
        }
        rows
    }

    /// Converts coefficients in this basis to monomial coefficients in `x`.
    pub fn to_monomial(self, coeffs: &[f64]) -> Vec<f64> {
        let table = self.monomial_table(coeffs.len());
        let mut out = vec![0.0; coeffs.len()];
        for (c, row) in coeffs.iter().zip(&table) {
            for (o, r) in out.iter_mut().zip(row) {
                *o += c * r;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn horner(c: &[f64], x: f64) -> f64 {
        c.iter().rev().fold(0.0, |acc, v| acc * x + v)
    }

    #[test]
    fn legendre_low_orders() {
        let mut v = [0.0; 4];
        BasisKind::Legendre.values(0.5, &mut v);
        assert!((v[2] - (3.0 * 0.25 - 1.0) / 2.0).abs() < 1e-15);
        assert!((v[3] - (5.0 * 0.125 - 1.5) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn derivatives_of_known_polynomials() {
        let d = BasisKind::Legendre.derivatives(0.3, 4, 1);
        // P3' = (15x² - 3)/2
        assert!((d[3] - (15.0 * 0.09 - 3.0) / 2.0).abs() < 1e-14);
        let d3 = BasisKind::Taylor.derivatives(0.7, 5, 3);
        assert!((d3[3] - 6.0).abs() < 1e-15);
        assert!((d3[4] - 24.0 * 0.7).abs() < 1e-14);
        assert_eq!(d3[2], 0.0);
    }

    proptest! {
        #[test]
        fn divided_differences_match_direct(x in -1.0f64..1.0, y in -1.0f64..1.0, kind in prop_oneof![Just(BasisKind::Taylor), Just(BasisKind::Legendre)]) {
            prop_assume!((x - y).abs() > 1e-3);
            let n = 12;
            let (mut px, mut py, mut dd) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
            kind.values(x, &mut px);
            kind.values(y, &mut py);
            kind.divided_differences(x, y, &mut dd);
            for k in 0..n {
                let direct = (px[k] - py[k]) / (x - y);
                prop_assert!((direct - dd[k]).abs() < 1e-9 * (1.0 + direct.abs()));
            }
        }

        #[test]
        fn monomial_conversion_preserves_values(c in proptest::collection::vec(-2.0f64..2.0, 1..16), x in -1.0f64..1.0) {
            let mut v = vec![0.0; c.len()];
            BasisKind::Legendre.values(x, &mut v);
            let direct: f64 = c.iter().zip(&v).map(|(a, b)| a * b).sum();
            let mono = BasisKind::Legendre.to_monomial(&c);
            prop_assert!((horner(&mono, x) - direct).abs() < 1e-9);
        }

        #[test]
        fn derivative_matches_finite_difference(x in -0.9f64..0.9) {
            let n = 10;
            let h = 1e-5;
            for kind in [BasisKind::Taylor, BasisKind::Legendre] {
                let d = kind.derivatives(x, n, 2);
                let (mut a, mut b, mut c) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
                kind.values(x - h, &mut a);
                kind.values(x, &mut b);
                kind.values(x + h, &mut c);
                for k in 0..n {
                    let fd = (c[k] - 2.0 * b[k] + a[k]) / (h * h);
                    prop_assert!((fd - d[k]).abs() < 1e-3 * (1.0 + d[k].abs()));
                }
            }
        }
    }
}
