//! Young functions, their complementary functions, Luxemburg averages over
//! cubes and the `B_p` integrability test.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcspace::{CellCube, Cube, Density, GridFunction, SegmentWeight1D};
use crate::numeric::{gauss_legendre_8, golden_max, NeumaierSum};

/// Relative bracket width at which Luxemburg bisection stops.
pub const LUXEMBURG_RTOL: f64 = 1e-13;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum YoungFn {
    /// `t`
    Identity,
    /// `t^r`
    Power { r: f64 },
    /// `coef * t^r`
    ScaledPower { coef: f64, r: f64 },
    /// `t^r * ln(e + t)^beta`
    PowerLog { r: f64, beta: f64 },
    /// `e^t - 1`
    ExpMinusOne,
    /// `t^(p / (p + eps - 1))`
    Bump { p: f64, eps: f64 },
    /// `0` on `[0, 1]`, `+inf` beyond; its Luxemburg average is the supremum.
    SupGauge,
    /// Numeric Legendre transform `s -> sup_t (s t - of(t))`.
    Legendre { of: Box<YoungFn> },
}

/// Asymptotic growth `t^rho * ln(t)^lambda` of a Young function.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Growth {
    pub rho: f64,
    pub log_power: f64,
}

impl YoungFn {
    pub fn power(r: f64) -> Self {
        YoungFn::Power { r }
    }

    pub fn bump(p: f64, eps: f64) -> Self {
        YoungFn::Bump { p, eps }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match self {
            YoungFn::Power { r } if !(*r > 1.0 && r.is_finite()) => bad(format!("power needs r > 1, got {r}")),
            YoungFn::ScaledPower { coef, r } if !(*r > 1.0 && *coef > 0.0 && r.is_finite() && coef.is_finite()) => {
                bad(format!("scaled power needs coef > 0 and r > 1, got ({coef}, {r})"))
            }
            YoungFn::PowerLog { r, beta } if !(*r >= 1.0 && *beta > 0.0 && r.is_finite() && beta.is_finite()) => {
                bad(format!("power-log needs r >= 1 and beta > 0, got ({r}, {beta})"))
            }
            YoungFn::Bump { p, eps } if !(*p > 1.0 && *eps > 1.0 - p && *eps < 1.0) => {
                bad(format!("bump needs p > 1 and 1 - p < eps < 1, got ({p}, {eps})"))
            }
            YoungFn::Legendre { of } => of.validate(),
            _ => Ok(()),
        }
    }

    /// `(coef, r)` when the function is exactly `coef * t^r`.
    pub fn as_power(&self) -> Option<(f64, f64)> {
        match *self {
            YoungFn::Identity => Some((1.0, 1.0)),
            YoungFn::Power { r } => Some((1.0, r)),
            YoungFn::ScaledPower { coef, r } => Some((coef, r)),
            YoungFn::Bump { p, eps } => Some((1.0, p / (p + eps - 1.0))),
            _ => None,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self {
            YoungFn::Identity => t,
            YoungFn::Power { r } => t.powf(*r),
            YoungFn::ScaledPower { coef, r } => coef * t.powf(*r),
            YoungFn::PowerLog { r, beta } => t.powf(*r) * (std::f64::consts::E + t).ln().powf(*beta),
            YoungFn::ExpMinusOne => t.exp_m1(),
            YoungFn::Bump { p, eps } => t.powf(p / (p + eps - 1.0)),
            YoungFn::SupGauge => {
                if t <= 1.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            YoungFn::Legendre { of } => legendre_transform(of, t),
        }
    }

    /// The complementary function: closed forms for power kinds and the
    /// identity, the numeric Legendre transform otherwise.
    pub fn complementary(&self) -> YoungFn {
        match self {
            YoungFn::Identity => YoungFn::SupGauge,
            YoungFn::SupGauge => YoungFn::Identity,
            YoungFn::Legendre { of } => (**of).clone(),
            other => match other.as_power() {
                Some((coef, r)) => {
                    let rp = r / (r - 1.0);
                    YoungFn::ScaledPower {
                        coef: coef.powf(1.0 - rp) * (r - 1.0) * r.powf(-rp),
                        r: rp,
                    }
                }
                None => YoungFn::Legendre {
                    of: Box::new(other.clone()),
                },
            },
        }
    }

    /// The `t` with `phi(t) = 1`.
    pub fn inverse_at_one(&self) -> f64 {
        match self {
            YoungFn::SupGauge => 1.0,
            _ => {
                if let Some((coef, r)) = self.as_power() {
                    return coef.powf(-1.0 / r);
                }
                let mut lo = 0.0;
                let mut hi = 1.0;
                while self.eval(hi) < 1.0 {
                    lo = hi;
                    hi *= 2.0;
                    if hi > 1e300 {
                        return f64::INFINITY;
                    }
                }
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if self.eval(mid) < 1.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo <= 1e-15 * hi {
                        break;
                    }
                }
                hi
            }
        }
    }

    pub fn growth(&self) -> Option<Growth> {
        let g = |rho, log_power| Some(Growth { rho, log_power });
        match self {
            YoungFn::PowerLog { r, beta } => g(*r, *beta),
            YoungFn::ExpMinusOne | YoungFn::SupGauge => None,
            YoungFn::Legendre { of } => match of.as_ref() {
                YoungFn::ExpMinusOne => g(1.0, 1.0),
                inner => {
                    let gi = inner.growth()?;
                    if gi.rho > 1.0 {
                        g(gi.rho / (gi.rho - 1.0), -gi.log_power / (gi.rho - 1.0))
                    } else {
                        None
                    }
                }
            },
            other => other.as_power().map(|(_, r)| Growth { rho: r, log_power: 0.0 }),
        }
    }

    /// Checks `phi(0) = 0`, monotonicity and convexity on `{0, 2^-10, ..., 2^10}`.
    pub fn check_lattice(&self) -> Result<()> {
        let ts: Vec<f64> = std::iter::once(0.0).chain((-10..=10).map(|e| 2f64.powi(e))).collect();
        let vs: Vec<f64> = ts.iter().map(|t| self.eval(*t)).collect();
        if vs[0] != 0.0 {
            return Err(Error::Domain("phi(0) != 0".into()));
        }
        for i in 1..ts.len() {
            if vs[i] < vs[i - 1] {
                return Err(Error::Domain(format!("phi decreases at t = {}", ts[i])));
            }
        }
        for i in 1..ts.len() - 1 {
            if !vs[i + 1].is_finite() {
                break;
            }
            let s0 = (vs[i] - vs[i - 1]) / (ts[i] - ts[i - 1]);
            let s1 = (vs[i + 1] - vs[i]) / (ts[i + 1] - ts[i]);
            if s1 < s0 * (1.0 - 1e-9) - 1e-12 {
                return Err(Error::Domain(format!("phi is not convex near t = {}", ts[i])));
            }
        }
        Ok(())
    }
}

/// `sup_{t >= 0} (s t - phi(t))` by golden-section search on a bracket that
/// doubles until the secant slope of `phi` exceeds `s`.
pub fn legendre_transform(phi: &YoungFn, s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    let mut hi = 1.0f64;
    loop {
        let slope = (phi.eval(hi) - phi.eval(0.5 * hi)) / (0.5 * hi);
        if slope > s {
            break;
        }
        hi *= 2.0;
        if hi > 1e150 {
            return f64::INFINITY;
        }
    }
    let (_, v) = golden_max(|t| s * t - phi.eval(t), 0.0, hi);
    v.max(0.0)
}

/// Luxemburg gauge of values with probability weights `probs` (summing to 1).
pub fn luxemburg_weighted(values: &[f64], probs: &[f64], phi: &YoungFn) -> f64 {
    debug_assert_eq!(values.len(), probs.len());
    let max = values.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return 0.0;
    }
    match phi {
        YoungFn::Identity => return weighted_mean(values, probs, 1.0),
        YoungFn::SupGauge => {
            return values
                .iter()
                .zip(probs)
                .filter(|(_, p)| **p > 0.0)
                .map(|(v, _)| *v)
                .fold(0.0, f64::max)
        }
        _ => {}
    }
    if let Some((coef, r)) = phi.as_power() {
        return (coef * weighted_mean(values, probs, r)).powf(1.0 / r);
    }
    luxemburg_bisect(values, probs, phi)
}

fn weighted_mean(values: &[f64], probs: &[f64], r: f64) -> f64 {
    let mut acc = NeumaierSum::new();
    for (v, p) in values.iter().zip(probs) {
        if *v > 0.0 && *p > 0.0 {
            acc.add(p * if r == 1.0 { *v } else { v.powf(r) });
        }
    }
    acc.value()
}

fn modular(values: &[f64], probs: &[f64], phi: &YoungFn, lambda: f64) -> f64 {
    let mut acc = NeumaierSum::new();
    for (v, p) in values.iter().zip(probs) {
        if *v > 0.0 && *p > 0.0 {
            acc.add(p * phi.eval(v / lambda));
        }
    }
    acc.value()
}

/// Bisection for `inf { lambda : avg phi(f / lambda) <= 1 }`, without the closed-form shortcuts.
pub fn luxemburg_bisect(values: &[f64], probs: &[f64], phi: &YoungFn) -> f64 {
    let max = values.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return 0.0;
    }
    let mean = weighted_mean(values, probs, 1.0);
    let t1 = phi.inverse_at_one();
    // Jensen gives the lower end, the maximum gives the upper end.
    let mut lo = mean / t1;
    let mut hi = max / t1;
    while modular(values, probs, phi, lo) <= 1.0 && lo > 0.0 {
        lo *= 0.5;
    }
    while modular(values, probs, phi, hi) > 1.0 {
        hi *= 2.0;
    }
    for _ in 0..400 {
        if hi - lo <= LUXEMBURG_RTOL * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if modular(values, probs, phi, mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Value of `avg phi(f / lambda)` at the returned gauge, for certificates.
pub fn luxemburg_modular(values: &[f64], probs: &[f64], phi: &YoungFn, lambda: f64) -> f64 {
    modular(values, probs, phi, lambda)
}

/// Luxemburg average of a grid function over a grid-aligned cube.
pub fn luxemburg_norm_grid(f: &GridFunction, cube: &CellCube, phi: &YoungFn) -> f64 {
    if let Some((coef, r)) = phi.as_power() {
        if r == 1.0 {
            return coef * f.cube_average(cube);
        }
    }
    let cells = cube.cells(f.geom());
    let values: Vec<f64> = cells.iter().map(|i| f.value(*i)).collect();
    let p = 1.0 / values.len() as f64;
    let probs = vec![p; values.len()];
    luxemburg_weighted(&values, &probs, phi)
}

/// Luxemburg average of cell values of equal measure.
pub fn luxemburg_norm_cells(values: &[f64], phi: &YoungFn) -> f64 {
    let p = 1.0 / values.len() as f64;
    luxemburg_weighted(values, &vec![p; values.len()], phi)
}

/// Luxemburg average of an analytic weight over an interval. Power-type
/// functions use exact masses; other kinds use graded Gauss-Legendre panels.
pub fn luxemburg_norm_analytic(w: &SegmentWeight1D, cube: &Cube, phi: &YoungFn) -> Result<f64> {
    if cube.dim != 1 {
        return Err(Error::Unsupported("analytic Luxemburg averages are one-dimensional".into()));
    }
    let (a, b) = (cube.lo(), cube.hi());
    match phi {
        YoungFn::SupGauge => return Ok(w.sup_on(a, b)),
        _ => {
            if let Some((coef, r)) = phi.as_power() {
                let wr = w.pow(r)?;
                let avg = wr.mass_between(a, b) / cube.side;
                return Ok((coef * avg).powf(1.0 / r));
            }
        }
    }
    let (values, probs) = graded_nodes(w, a, b);
    Ok(luxemburg_weighted(&values, &probs, phi))
}

/// Quadrature nodes over `[a, b]` graded toward the centers of power pieces.
/// Returns weight values and probability weights normalized by `b - a`.
pub fn graded_nodes(w: &SegmentWeight1D, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    const RATIO: f64 = 0.2;
    const LEVELS: usize = 24;
    // stop grading once panels approach the spacing of floats near the center
    let grading_levels = |center: f64, d: f64| {
        let floor = 64.0 * f64::EPSILON * center.abs();
        (0..LEVELS)
            .take_while(|k| d * RATIO.powi(*k as i32 + 1) > floor)
            .count()
    };
    let mut cuts = vec![a, b];
    let mut centers = Vec::new();
    for seg in w.segments() {
        for x in [seg.lo(), seg.hi()] {
            if x > a && x < b {
                cuts.push(x);
            }
        }
        if let Density::Power { center, .. } = seg.density() {
            if *center >= a && *center <= b {
                cuts.push(*center);
                centers.push(*center);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let rule = gauss_legendre_8();
    let mut values = Vec::new();
    let mut probs = Vec::new();
    let scale = 1.0 / (b - a);
    let mut panel = |lo: f64, hi: f64| {
        let half = 0.5 * (hi - lo);
        let mid = lo + half;
        for &(x, wt) in rule {
            values.push(w.value(mid + half * x));
            probs.push(wt * half * scale);
        }
    };
    for pair in cuts.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        let near_lo = centers.contains(&lo);
        let near_hi = centers.contains(&hi);
        match (near_lo, near_hi) {
            (false, false) => {
                for i in 0..4 {
                    let d = (hi - lo) / 4.0;
                    panel(lo + d * i as f64, lo + d * (i + 1) as f64);
                }
            }
            _ => {
                let mid = if near_lo && near_hi { 0.5 * (lo + hi) } else if near_lo { hi } else { lo };
                if near_lo {
                    let d = mid - lo;
                    let levels = grading_levels(lo, d);
                    for k in 0..levels {
                        let outer = lo + d * RATIO.powi(k as i32);
                        let inner = lo + d * RATIO.powi(k as i32 + 1);
                        panel(inner, outer);
                    }
                    panel(lo, lo + d * RATIO.powi(levels as i32));
                }
                if near_hi {
                    let d = hi - mid;
                    let levels = grading_levels(hi, d);
                    for k in 0..levels {
                        let outer = hi - d * RATIO.powi(k as i32);
                        let inner = hi - d * RATIO.powi(k as i32 + 1);
                        panel(outer, inner);
                    }
                    panel(hi - d * RATIO.powi(levels as i32), hi);
                }
            }
        }
    }
    (values, probs)
}

/// `2 ||f||_phi ||g||_phibar - avg(f g)` over cells of equal measure.
pub fn holder_defect(f: &[f64], g: &[f64], phi: &YoungFn) -> f64 {
    assert_eq!(f.len(), g.len());
    let nf = luxemburg_norm_cells(f, phi);
    let ng = luxemburg_norm_cells(g, &phi.complementary());
    let avg = NeumaierSum::from_iter(f.iter().zip(g).map(|(a, b)| a * b)).value() / f.len() as f64;
    let lhs = if nf == 0.0 || ng == 0.0 { 0.0 } else { 2.0 * nf * ng };
    lhs - avg
}

/// `holder_defect` on a grid-aligned cube.
pub fn holder_defect_grid(f: &GridFunction, g: &GridFunction, cube: &CellCube, phi: &YoungFn) -> f64 {
    let cells = cube.cells(f.geom());
    let fv: Vec<f64> = cells.iter().map(|i| f.value(*i)).collect();
    let gv: Vec<f64> = cells.iter().map(|i| g.value(*i)).collect();
    holder_defect(&fv, &gv, phi)
}

/// Outcome of the `B_p` test.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BpReport {
    pub p: f64,
    pub upper: f64,
    /// `int_1^T phi(t) t^(-p-1) dt` (with `T` capped for infinite upper limits).
    pub integral: f64,
    /// Closed-form tail beyond `T` for power-type functions below `p`.
    pub tail: Option<f64>,
    /// Full value: `integral + tail`, infinite when divergent.
    pub total: f64,
    /// `Some` when the growth exponent decides membership.
    pub in_bp: Option<bool>,
    pub growth_exponent: Option<f64>,
}

/// `int_1^T phi(t) t^(-p-1) dt` with membership decided by the growth exponent.
pub fn bp_integral(phi: &YoungFn, p: f64, upper: f64) -> Result<BpReport> {
    if !(p > 1.0) {
        return Err(Error::InvalidParameter(format!("B_p needs p > 1, got {p}")));
    }
    if !(upper >= 1.0) {
        return Err(Error::Domain(format!("upper limit must be >= 1, got {upper}")));
    }
    let growth = phi.growth();
    let in_bp = growth.map(|g| g.rho < p || (g.rho == p && g.log_power < -1.0));
    let t_num = if upper.is_finite() { upper } else { 2f64.powi(60) };
    let integral = dyadic_integral(|t| phi.eval(t) * t.powf(-p - 1.0), t_num);
    let power_tail = |t: f64| -> Option<f64> {
        let (coef, r) = phi.as_power()?;
        (r < p).then(|| coef * t.powf(r - p) / (p - r))
    };
    let (tail, total) = if upper.is_finite() {
        let tail = power_tail(upper);
        (tail, integral)
    } else {
        match in_bp {
            Some(false) => (None, f64::INFINITY),
            _ => match power_tail(t_num) {
                Some(t) => (Some(t), integral + t),
                None => (None, integral),
            },
        }
    };
    Ok(BpReport {
        p,
        upper,
        integral,
        tail,
        total,
        in_bp,
        growth_exponent: growth.map(|g| g.rho),
    })
}

fn dyadic_integral<F: Fn(f64) -> f64>(f: F, upper: f64) -> f64 {
    let rule = gauss_legendre_8();
    let mut acc = NeumaierSum::new();
    let mut lo = 1.0f64;
    while lo < upper {
        let hi = (2.0 * lo).min(upper);
        let panels = 4;
        let d = (hi - lo) / panels as f64;
        for i in 0..panels {
            let a = lo + d * i as f64;
            let half = 0.5 * d;
            for &(x, wt) in rule {
                acc.add(wt * half * f(a + half + half * x));
            }
        }
        lo = hi;
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::{GridGeometry, Segment, Tail};

    #[test]
    fn square_complement_is_quarter_square() {
        let c = YoungFn::power(2.0).complementary();
        for s in [0.0, 0.5, 1.0, 7.0, 100.0] {
            assert!((c.eval(s) - s * s / 4.0).abs() <= 1e-12 * (1.0 + s * s));
        }
    }

    #[test]
    fn numeric_legendre_of_square_matches_closed_form() {
        let phi = YoungFn::power(2.0);
        for s in [0.25, 1.0, 3.0, 40.0, 100.0] {
            let v = legendre_transform(&phi, s);
            assert!((v - s * s / 4.0).abs() <= 1e-8 * (s * s / 4.0).max(1.0), "s = {s}: {v}");
        }
    }

    #[test]
    fn exp_complement_is_entropy_type() {
        let c = YoungFn::ExpMinusOne.complementary();
        for s in [0.5f64, 1.0, 2.0, 10.0, 1e3] {
            let exact = if s <= 1.0 { 0.0 } else { s * s.ln() - s + 1.0 };
            assert!((c.eval(s) - exact).abs() <= 1e-8 * exact.max(1.0), "s = {s}");
        }
    }

    #[test]
    fn young_equality_at_derivative() {
        let phi = YoungFn::power(2.0);
        let c = phi.complementary();
        assert!((2.0 * 1.0 - (phi.eval(1.0) + c.eval(2.0))).abs() < 1e-7);
    }

    #[test]
    fn luxemburg_identity_and_power_closed_forms() {
        let vals = [1.0, 2.0, 0.0, 5.0];
        assert_eq!(luxemburg_norm_cells(&vals, &YoungFn::Identity), 2.0);
        let r3 = luxemburg_norm_cells(&vals, &YoungFn::power(3.0));
        let exact = ((1.0 + 8.0 + 125.0) / 4.0f64).powf(1.0 / 3.0);
        assert!((r3 - exact).abs() < 1e-14 * exact);
        let probs = [0.25; 4];
        let b = luxemburg_bisect(&vals, &probs, &YoungFn::power(3.0));
        assert!((b - exact).abs() < 1e-10 * exact);
    }

    #[test]
    fn luxemburg_of_linear_function_on_unit_interval() {
        let w = SegmentWeight1D::power_weight(0.0, 1.0, 0.0, 1.0).unwrap();
        let q = Cube::interval(0.0, 1.0).unwrap();
        let v = luxemburg_norm_analytic(&w, &q, &YoungFn::power(2.0)).unwrap();
        assert!((v - (1.0f64 / 3.0).sqrt()).abs() < 1e-8);
        let (values, probs) = graded_nodes(&w, 0.0, 1.0);
        let b = luxemburg_bisect(&values, &probs, &YoungFn::power(2.0));
        assert!((b - (1.0f64 / 3.0).sqrt()).abs() < 1e-8);
    }

    #[test]
    fn luxemburg_of_constant_is_constant_over_phi_inverse() {
        let vals = [5.0; 6];
        assert!((luxemburg_norm_cells(&vals, &YoungFn::power(2.0)) - 5.0).abs() < 1e-13);
        let e = luxemburg_norm_cells(&vals, &YoungFn::ExpMinusOne);
        assert!((e - 5.0 / 2f64.ln()).abs() < 1e-10 * e);
    }

    #[test]
    fn graded_nodes_integrate_singular_weight() {
        let w = SegmentWeight1D::new(
            vec![Segment::power(-1.0, 2.0, 1.0, 0.5, -0.5).unwrap()],
            Tail::Zero,
        )
        .unwrap();
        let (values, probs) = graded_nodes(&w, -1.0, 2.0);
        let avg: f64 = values.iter().zip(&probs).map(|(v, p)| v * p).sum();
        let exact = w.mass_between(-1.0, 2.0) / 3.0;
        assert!((avg - exact).abs() < 1e-6 * exact, "{avg} vs {exact}");
    }

    #[test]
    fn holder_defect_examples() {
        let phi = YoungFn::power(2.0);
        assert!(holder_defect(&[1.0; 4], &[1.0; 4], &phi) >= 0.0);
        assert_eq!(holder_defect(&[0.0; 4], &[3.0; 4], &phi), 0.0);
        let n = 256;
        let f: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let g: Vec<f64> = f.iter().map(|x| 1.0 - x).collect();
        assert!(holder_defect(&f, &g, &phi) >= 0.0);
    }

    #[test]
    fn identity_complement_gives_supremum() {
        let geom = GridGeometry::line(0.0, 1.0, 8).unwrap();
        let g = GridFunction::from_fn(geom, |c| c[0]).unwrap();
        let cube = CellCube::new([2, 0], 4);
        assert_eq!(luxemburg_norm_grid(&g, &cube, &YoungFn::SupGauge), g.value(5));
    }

    #[test]
    fn bp_examples() {
        let lin = bp_integral(&YoungFn::Identity, 2.0, f64::INFINITY).unwrap();
        assert_eq!(lin.in_bp, Some(true));
        assert!((lin.total - 1.0).abs() < 1e-8);
        let crit = bp_integral(&YoungFn::power(2.0), 2.0, f64::INFINITY).unwrap();
        assert_eq!(crit.in_bp, Some(false));
        assert!(crit.total.is_infinite());
        let bump = bp_integral(&YoungFn::bump(2.0, 0.5), 2.0, f64::INFINITY).unwrap();
        assert_eq!(bump.in_bp, Some(true));
        assert!((bump.growth_exponent.unwrap() - 4.0 / 3.0).abs() < 1e-15);
        assert!((bump.total - 1.5).abs() < 1e-8);
        assert!(matches!(bp_integral(&YoungFn::Identity, 2.0, 0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn bp_finite_upper_limit() {
        let r = bp_integral(&YoungFn::power(2.0), 2.0, 64.0).unwrap();
        assert!((r.integral - 64f64.ln()).abs() < 1e-10);
        let l = bp_integral(&YoungFn::Identity, 3.0, 10.0).unwrap();
        assert!((l.integral - 0.5 * (1.0 - 0.01)).abs() < 1e-12);
    }

    #[test]
    fn lattice_checks_pass_for_builtin_kinds() {
        for phi in [
            YoungFn::Identity,
            YoungFn::power(1.5),
            YoungFn::PowerLog { r: 1.0, beta: 2.0 },
            YoungFn::ExpMinusOne,
            YoungFn::bump(2.0, 0.5),
            YoungFn::ExpMinusOne.complementary(),
        ] {
            phi.validate().unwrap();
            phi.check_lattice().unwrap();
        }
        assert!(YoungFn::power(0.5).validate().is_err());
        assert!(YoungFn::bump(2.0, 1.0).validate().is_err());
    }

    #[test]
    fn json_tagged_kinds() {
        let phi: YoungFn = serde_json::from_str(r#"{"kind":"power","r":2}"#).unwrap();
        assert_eq!(phi, YoungFn::power(2.0));
        let b: YoungFn = serde_json::from_str(r#"{"kind":"bump","p":2,"eps":0.5}"#).unwrap();
        assert_eq!(b.as_power().unwrap().1, 4.0 / 3.0);
    }
}
