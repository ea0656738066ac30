use serde_json::json;

use super::{Basis, Check, SuiteId, SuiteResult};
use crate::error::{Error, Result};
use crate::funcspace::{weight_mass, Cube, Measure, Segment, SegmentWeight1D, SquareMatrix, Tail};
use crate::numeric::rel_diff;
use crate::weightclass::{aap_product, ap_product};

const HALF_WIDTH: f64 = 128.0;
const H_GRID: [f64; 5] = [0.01, 0.1, 1.0, 5.0, 20.0];
const OFFSETS: [f64; 4] = [0.5, 1.0, 2.0, 5.0];

/// `e^((p-1)|x|)` on `[-128, 128]`.
pub fn nondoubling_weight(p: f64) -> Result<SegmentWeight1D> {
    SegmentWeight1D::new(
        vec![
            Segment::exponential(-HALF_WIDTH, 0.0, 1.0, -(p - 1.0))?,
            Segment::exponential(0.0, HALF_WIDTH, 1.0, p - 1.0)?,
        ],
        Tail::Zero,
    )
}

/// Closed form of the twisted product on `(0, h)` with `A = 1/2`, written
/// with decaying exponentials only.
pub fn j_closed_form(p: f64, h: f64) -> f64 {
    let q = -(-h).exp_m1();
    let first = 2.0 / (p + 1.0) * (-(-(p + 1.0) * h / 2.0).exp_m1()) / q;
    let second = ((-h / 2.0).exp() * h / q).powf(p - 1.0);
    first * second
}

/// Closed form of the untwisted product on `(0, h)`.
pub fn nondoubling_ap_closed_form(p: f64, h: f64) -> f64 {
    let q = -(-h).exp_m1();
    (-(-p * h).exp_m1()) / p * q.powf(-p) * h.powf(p - 1.0)
}

fn interval(a: f64, h: f64) -> Cube {
    Cube::interval(a, a + h).expect("h > 0")
}

pub fn suite_nondoubling(ps: &[f64]) -> Result<SuiteResult> {
    if let Some(p) = ps.iter().find(|p| !(**p > 1.0)) {
        return Err(Error::InvalidParameter(format!("p must exceed 1, got {p}")));
    }
    let half = SquareMatrix::scalar(0.5)?;
    let mut checks = Vec::new();

    let mut worst_measure: f64 = 0.0;
    let mut worst_dual: f64 = 0.0;
    for &p in ps {
        let dual = nondoubling_weight(p)?.pow(-1.0 / (p - 1.0))?.with_measure(Measure::ExpAbs)?;
        for a in [0.0, 0.5, 2.0] {
            for h in H_GRID {
                let mu = Measure::ExpAbs.mass(a, a + h);
                worst_measure = worst_measure.max(rel_diff(mu, (a + h).exp() * -(-h).exp_m1()));
                worst_dual = worst_dual.max(rel_diff(weight_mass(&dual, a, a + h)?, h));
            }
        }
    }
    checks.push(Check::at_most(
        "exact_masses",
        "max relative error of mu(R_h) and of the dual mass against h",
        worst_measure.max(worst_dual),
        1e-10,
        Basis::Computed,
        json!({ "p": ps, "h": H_GRID, "a": [0.0, 0.5, 2.0], "measure_error": worst_measure, "dual_error": worst_dual }),
    ));

    let mut rows = Vec::new();
    let mut worst_j: f64 = 0.0;
    for &p in ps {
        let w = nondoubling_weight(p)?;
        for h in H_GRID {
            let v = aap_product(&w, &half, &interval(0.0, h), p, Measure::ExpAbs)?;
            let j = j_closed_form(p, h);
            worst_j = worst_j.max(rel_diff(v, j));
            rows.push(json!({ "p": p, "h": h, "product": v, "closed_form": j }));
        }
    }
    checks.push(Check::at_most(
        "twisted_product_closed_form",
        "max relative gap between the A_{1/2,p}(mu) product on (0, h) and J_h",
        worst_j,
        1e-8,
        Basis::Computed,
        json!(rows),
    ));

    let mut limits_ok = true;
    let mut rows = Vec::new();
    for &p in ps {
        let w = nondoubling_weight(p)?;
        let small = aap_product(&w, &half, &interval(0.0, 0.001), p, Measure::ExpAbs)?;
        let large = aap_product(&w, &half, &interval(0.0, 50.0), p, Measure::ExpAbs)?;
        let (js, jl) = (j_closed_form(p, 0.001), j_closed_form(p, 50.0));
        limits_ok &= (small - 1.0).abs() <= 0.02 && (js - 1.0).abs() <= 0.02 && large < 1e-3 && jl < 1e-3;
        rows.push(json!({ "p": p, "j_small": js, "product_small": small, "j_large": jl, "product_large": large }));
    }
    checks.push(Check::new(
        "limits",
        "J_h near 1 at h = 0.001 and below 1e-3 at h = 50",
        if limits_ok { 1.0 } else { 0.0 },
        "|J_0.001 - 1| <= 0.02 and J_50 < 1e-3".into(),
        limits_ok,
        Basis::Literature,
        json!(rows),
    ));

    let mut worst_excess = f64::NEG_INFINITY;
    for &p in ps {
        let w = nondoubling_weight(p)?;
        for h in H_GRID {
            let j = j_closed_form(p, h);
            for a in OFFSETS {
                let v = aap_product(&w, &half, &interval(a, h), p, Measure::ExpAbs)?;
                worst_excess = worst_excess.max(v / j - 1.0);
            }
        }
    }
    checks.push(Check::at_most(
        "offset_monotonicity",
        "max over a > 0 of product(a, h) / J_h - 1",
        worst_excess,
        1e-8,
        Basis::Computed,
        json!({ "p": ps, "h": H_GRID, "a": OFFSETS }),
    ));

    // without the matrix the products grow without bound; this is the negative control
    let growth_h = [1.0, 5.0, 10.0, 25.0, 50.0];
    let mut worst_ap: f64 = 0.0;
    let mut growth_ok = true;
    let mut rows = Vec::new();
    for &p in ps {
        let w = nondoubling_weight(p)?;
        let vals: Vec<f64> = growth_h.iter().map(|h| ap_product(&w, &interval(0.0, *h), p, Measure::ExpAbs)).collect::<Result<_>>()?;
        for (v, h) in vals.iter().zip(growth_h) {
            worst_ap = worst_ap.max(rel_diff(*v, nondoubling_ap_closed_form(p, h)));
        }
        let increasing = vals.windows(2).skip(1).all(|w| w[1] > w[0]);
        let peak = vals.iter().cloned().fold(0.0, f64::max);
        growth_ok &= increasing && (p < 2.0 || peak > 10.0);
        rows.push(json!({ "p": p, "h": growth_h, "product": vals }));
    }
    checks.push(Check::new(
        "untwisted_growth",
        "A_p(mu) product on (0, h) against its closed form; exceeds 10 for some h <= 50 when p >= 2, increasing in h",
        worst_ap,
        "relative error <= 1e-8 and growth".into(),
        worst_ap <= 1e-8 && growth_ok,
        Basis::Computed,
        json!(rows),
    ));
    Ok(SuiteResult::new(SuiteId::Nondoubling, checks))
}
