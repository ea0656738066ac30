use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest power tried when searching for `A^k = I`.
pub const ORDER_SEARCH_BOUND: u32 = 64;

const INVERSE_TOL: f64 = 1e-12;
const ORDER_TOL: f64 = 1e-10;

/// Invertible real matrix of size 1 or 2, stored row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SquareMatrix {
    dim: usize,
    entries: [f64; 4],
    inverse: [f64; 4],
    det: f64,
}

impl SquareMatrix {
    pub fn new(dim: usize, entries: &[f64]) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::Unsupported(format!("matrix dimension {dim}")));
        }
        if entries.len() != dim * dim || !entries.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "a {dim}x{dim} matrix needs {} finite entries",
                dim * dim
            )));
        }
        let mut e = [0.0; 4];
        e[..entries.len()].copy_from_slice(entries);
        let (det, inverse) = if dim == 1 {
            (e[0], [1.0 / e[0], 0.0, 0.0, 0.0])
        } else {
            let det = e[0] * e[3] - e[1] * e[2];
            (det, [e[3] / det, -e[1] / det, -e[2] / det, e[0] / det])
        };
        let scale = e.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if det == 0.0 || !det.is_finite() || det.abs() < 1e-14 * scale.powi(dim as i32) {
            return Err(Error::SingularMatrix { det });
        }
        let m = SquareMatrix {
            dim,
            entries: e,
            inverse,
            det,
        };
        let prod = m.mul_raw(&m.entries, &m.inverse);
        if max_dev_from_identity(dim, &prod) > INVERSE_TOL {
            return Err(Error::SingularMatrix { det });
        }
        Ok(m)
    }

    pub fn scalar(lambda: f64) -> Result<Self> {
        SquareMatrix::new(1, &[lambda])
    }

    pub fn identity(dim: usize) -> Self {
        let e: &[f64] = if dim == 1 { &[1.0] } else { &[1.0, 0.0, 0.0, 1.0] };
        SquareMatrix::new(dim, e).expect("identity is invertible")
    }

    /// Counter-clockwise rotation by `quarter_turns * 90` degrees, with exact entries.
    pub fn rotation_quarter(quarter_turns: i32) -> Self {
        let e: [f64; 4] = match quarter_turns.rem_euclid(4) {
            0 => [1.0, 0.0, 0.0, 1.0],
            1 => [0.0, -1.0, 1.0, 0.0],
            2 => [-1.0, 0.0, 0.0, -1.0],
            _ => [0.0, 1.0, -1.0, 0.0],
        };
        SquareMatrix::new(2, &e).expect("rotations are invertible")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn det(&self) -> f64 {
        self.det
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries[..self.dim * self.dim]
    }

    pub fn as_scalar(&self) -> Option<f64> {
        (self.dim == 1).then_some(self.entries[0])
    }

    pub fn inverse(&self) -> SquareMatrix {
        SquareMatrix {
            dim: self.dim,
            entries: self.inverse,
            inverse: self.entries,
            det: 1.0 / self.det,
        }
    }

    pub fn inverse_entries(&self) -> &[f64] {
        &self.inverse[..self.dim * self.dim]
    }

    pub fn apply(&self, x: [f64; 2]) -> [f64; 2] {
        apply_raw(self.dim, &self.entries, x)
    }

    pub fn apply_inverse(&self, x: [f64; 2]) -> [f64; 2] {
        apply_raw(self.dim, &self.inverse, x)
    }

    fn mul_raw(&self, a: &[f64; 4], b: &[f64; 4]) -> [f64; 4] {
        mul(self.dim, a, b)
    }

    pub fn compose(&self, other: &SquareMatrix) -> Result<SquareMatrix> {
        if self.dim != other.dim {
            return Err(Error::InvalidParameter("matrix dimensions differ".into()));
        }
        let p = mul(self.dim, &self.entries, &other.entries);
        SquareMatrix::new(self.dim, &p[..self.dim * self.dim])
    }

    /// Smallest `k <= ORDER_SEARCH_BOUND` with `max |A^k - I| <= 1e-10`.
    pub fn order(&self) -> Option<u32> {
        self.order_within(ORDER_SEARCH_BOUND)
    }

    pub fn order_within(&self, bound: u32) -> Option<u32> {
        let mut power = self.entries;
        for k in 1..=bound {
            if max_dev_from_identity(self.dim, &power) <= ORDER_TOL {
                return Some(k);
            }
            power = mul(self.dim, &power, &self.entries);
            if power.iter().any(|v| !v.is_finite() || v.abs() > 1e12) {
                return None;
            }
        }
        None
    }

    /// True when `A` and `A^{-1}` map an axis-aligned lattice onto itself
    /// after scaling by powers of two, so cell lookups stay exact.
    pub fn is_dyadic_monomial(&self) -> bool {
        let dyadic = |v: f64| v == 0.0 || (v.abs().log2().fract() == 0.0);
        let e = self.entries();
        if !e.iter().all(|v| dyadic(*v)) {
            return false;
        }
        if self.dim == 1 {
            return true;
        }
        (e[0] != 0.0 && e[3] != 0.0 && e[1] == 0.0 && e[2] == 0.0)
            || (e[1] != 0.0 && e[2] != 0.0 && e[0] == 0.0 && e[3] == 0.0)
    }

    pub fn to_spec(&self) -> MatrixSpec {
        MatrixSpec {
            dim: self.dim,
            entries: self.entries().to_vec(),
        }
    }

    pub fn from_spec(spec: &MatrixSpec) -> Result<Self> {
        SquareMatrix::new(spec.dim, &spec.entries)
    }
}

fn apply_raw(dim: usize, m: &[f64; 4], x: [f64; 2]) -> [f64; 2] {
    if dim == 1 {
        [m[0] * x[0], 0.0]
    } else {
        [m[0] * x[0] + m[1] * x[1], m[2] * x[0] + m[3] * x[1]]
    }
}

fn mul(dim: usize, a: &[f64; 4], b: &[f64; 4]) -> [f64; 4] {
    if dim == 1 {
        [a[0] * b[0], 0.0, 0.0, 0.0]
    } else {
        [
            a[0] * b[0] + a[1] * b[2],
            a[0] * b[1] + a[1] * b[3],
            a[2] * b[0] + a[3] * b[2],
            a[2] * b[1] + a[3] * b[3],
        ]
    }
}

fn max_dev_from_identity(dim: usize, m: &[f64; 4]) -> f64 {
    let mut dev: f64 = 0.0;
    for r in 0..dim {
        for c in 0..dim {
            let target = if r == c { 1.0 } else { 0.0 };
            dev = dev.max((m[r * dim + c] - target).abs());
        }
    }
    dev
}

/// Matrix JSON: `{"dim":n, "entries":[row-major]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixSpec {
    pub dim: usize,
    pub entries: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_inverse_and_det() {
        let a = SquareMatrix::scalar(-0.5).unwrap();
        assert_eq!(a.det(), -0.5);
        assert_eq!(a.inverse().as_scalar(), Some(-2.0));
        assert_eq!(a.apply([3.0, 0.0])[0], -1.5);
    }

    #[test]
    fn singular_matrices_rejected() {
        assert!(matches!(SquareMatrix::scalar(0.0), Err(Error::SingularMatrix { .. })));
        assert!(matches!(
            SquareMatrix::new(2, &[1.0, 2.0, 2.0, 4.0]),
            Err(Error::SingularMatrix { .. })
        ));
    }

    #[test]
    fn orders_of_common_matrices() {
        assert_eq!(SquareMatrix::scalar(-1.0).unwrap().order(), Some(2));
        assert_eq!(SquareMatrix::identity(2).order(), Some(1));
        assert_eq!(SquareMatrix::rotation_quarter(1).order(), Some(4));
        assert_eq!(SquareMatrix::scalar(2.0).unwrap().order(), None);
        let t = std::f64::consts::TAU / 6.0;
        let r6 = SquareMatrix::new(2, &[t.cos(), -t.sin(), t.sin(), t.cos()]).unwrap();
        assert_eq!(r6.order(), Some(6));
        // shear: unipotent but infinite order
        assert_eq!(SquareMatrix::new(2, &[1.0, 1.0, 0.0, 1.0]).unwrap().order(), None);
    }

    #[test]
    fn inverse_product_is_identity() {
        let a = SquareMatrix::new(2, &[2.0, 1.0, -3.0, 0.5]).unwrap();
        let x = [0.3, -1.7];
        let y = a.apply_inverse(a.apply(x));
        assert!((y[0] - x[0]).abs() < 1e-14 && (y[1] - x[1]).abs() < 1e-14);
        assert_eq!(a.det(), 4.0);
    }

    #[test]
    fn dyadic_monomial_detection() {
        assert!(SquareMatrix::scalar(0.5).unwrap().is_dyadic_monomial());
        assert!(SquareMatrix::rotation_quarter(1).is_dyadic_monomial());
        assert!(!SquareMatrix::scalar(3.0).unwrap().is_dyadic_monomial());
        assert!(!SquareMatrix::new(2, &[1.0, 1.0, 0.0, 1.0]).unwrap().is_dyadic_monomial());
    }

    #[test]
    fn json_round_trip() {
        let spec: MatrixSpec = serde_json::from_str(r#"{"dim":2,"entries":[0,-1,1,0]}"#).unwrap();
        let a = SquareMatrix::from_spec(&spec).unwrap();
        assert_eq!(a, SquareMatrix::rotation_quarter(1));
        assert_eq!(a.to_spec(), spec);
    }
}
