//! Small numerical kernels shared by the modules: compensated sums,
//! double-double accumulators, Gauss-Legendre panels, one-dimensional
//! searches and log-scale slope fits.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;

/// Neumaier's variant of Kahan summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = NeumaierSum::new();
        for v in iter {
            s.add(v);
        }
        s
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<NeumaierSum>().value()
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

#[inline]
fn fast_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

impl DoubleDouble {
    pub const ZERO: DoubleDouble = DoubleDouble { hi: 0.0, lo: 0.0 };

    pub fn from_f64(v: f64) -> Self {
        DoubleDouble { hi: v, lo: 0.0 }
    }

    pub fn add(self, other: DoubleDouble) -> Self {
        let (s, e) = two_sum(self.hi, other.hi);
        let e = e + self.lo + other.lo;
        let (hi, lo) = fast_two_sum(s, e);
        DoubleDouble { hi, lo }
    }

    pub fn add_f64(self, v: f64) -> Self {
        self.add(DoubleDouble::from_f64(v))
    }

    pub fn neg(self) -> Self {
        DoubleDouble { hi: -self.hi, lo: -self.lo }
    }

    pub fn sub(self, other: DoubleDouble) -> Self {
        self.add(other.neg())
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

/// Eight-node Gauss-Legendre rule on [-1, 1] as `(node, weight)` pairs.
pub fn gauss_legendre_8() -> &'static [(f64, f64)] {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(NonZeroUsize::new(8).expect("nonzero")))
        .as_node_weight_pairs()
}

/// Integrates `f` over `[a, b]` with `panels` equal Gauss-Legendre panels.
pub fn gauss_panels<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let rule = gauss_legendre_8();
    let width = (b - a) / panels as f64;
    let mut acc = NeumaierSum::new();
    for i in 0..panels {
        let lo = a + width * i as f64;
        let half = 0.5 * width;
        let mid = lo + half;
        for &(x, w) in rule {
            acc.add(w * half * f(mid + half * x));
        }
    }
    acc.value()
}

/// Maximizes a concave function on `[lo, hi]` by golden-section search.
/// Returns `(argmax, max)`.
pub fn golden_max<F: Fn(f64) -> f64>(g: F, mut lo: f64, mut hi: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut g1 = g(x1);
    let mut g2 = g(x2);
    for _ in 0..300 {
        if (hi - lo) <= 1e-15 * hi.abs().max(1e-300) {
            break;
        }
        if g1 < g2 {
            lo = x1;
            x1 = x2;
            g1 = g2;
            x2 = lo + INV_PHI * (hi - lo);
            g2 = g(x2);
        } else {
            hi = x2;
            x2 = x1;
            g2 = g1;
            x1 = hi - INV_PHI * (hi - lo);
            g1 = g(x1);
        }
    }
    if g1 >= g2 {
        (x1, g1)
    } else {
        (x2, g2)
    }
}

/// Least-squares slope of `ys` against `xs`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Norm on `L^s(R)` of the uncentered Hardy-Littlewood maximal operator:
/// the positive root of `(s-1)x^s - s x^(s-1) - 1 = 0`.
pub fn uncentered_maximal_norm_1d(s: f64) -> f64 {
    assert!(s > 1.0, "exponent must exceed 1");
    let f = |x: f64| (s - 1.0) * x.powf(s) - s * x.powf(s - 1.0) - 1.0;
    let mut lo = 1.0;
    let mut hi = 2.0;
    while f(hi) <= 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    hi
}

/// Relative difference `(a - b) / max(|a|, |b|, tiny)`.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    (a - b) / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
