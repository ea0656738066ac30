use serde_json::json;

use super::{Basis, Check, SuiteId, SuiteResult};
use crate::error::Result;
use crate::funcspace::{compose_matrix, weight_mass, Cube, CubeFamily, Measure, Segment, SegmentWeight1D, SquareMatrix, Tail};
use crate::numeric::ls_slope;
use crate::weightclass::{aap_product, ap_product, constant, ClassSpec};

const K_MAX: i32 = 8;
const HALF_WIDTH: f64 = 16.0;

/// `|x|^(-1/2)` left of `1/2` and `|x - k|^(-1/2)` on `[k - 1/2, k + 1/2)`, on `[-16, 16]`.
pub fn reflection_weight() -> Result<SegmentWeight1D> {
    let mut segments = vec![Segment::power(-HALF_WIDTH, 0.5, 1.0, 0.0, -0.5)?];
    let last = HALF_WIDTH as i32;
    for k in 1..=last {
        let hi = (k as f64 + 0.5).min(HALF_WIDTH);
        segments.push(Segment::power(k as f64 - 0.5, hi, 1.0, k as f64, -0.5)?);
    }
    SegmentWeight1D::new(segments, Tail::Zero)
}

/// `J_k = (-k - 1/4, -k)`.
pub fn j_interval(k: i32) -> Cube {
    Cube::interval(-(k as f64) - 0.25, -(k as f64)).expect("nondegenerate")
}

pub fn suite_reflection() -> Result<SuiteResult> {
    let w = reflection_weight()?;
    let minus = SquareMatrix::scalar(-1.0)?;
    let wr = compose_matrix(&w, &minus)?;
    let sigma = w.pow(-1.0)?;
    let ks: Vec<i32> = (1..=K_MAX).collect();
    let mut checks = Vec::new();

    let masses: Vec<f64> = ks.iter().map(|&k| weight_mass(&wr, j_interval(k).lo(), j_interval(k).hi())).collect::<Result<_>>()?;
    let worst = masses.iter().map(|m| (m - 1.0).abs()).fold(0.0, f64::max);
    checks.push(Check::at_most(
        "reflected_mass",
        "max_k |int_{J_k} w(-x) dx - 1|",
        worst,
        1e-10,
        Basis::Literature,
        json!({ "k": ks, "mass": masses }),
    ));

    let dual: Vec<f64> = ks.iter().map(|&k| weight_mass(&sigma, j_interval(k).lo(), j_interval(k).hi())).collect::<Result<_>>()?;
    let bounds: Vec<f64> = ks.iter().map(|&k| (k as f64).sqrt() * 0.25).collect();
    let margin = dual.iter().zip(&bounds).map(|(d, b)| d / b).fold(f64::INFINITY, f64::min);
    checks.push(Check::at_least(
        "dual_mass_lower_bound",
        "min_k int_{J_k} w^-1 / (k^(1/2) |J_k|)",
        margin,
        1.0,
        Basis::Literature,
        json!({ "k": ks, "dual_mass": dual, "bound": bounds }),
    ));

    let lk: Vec<f64> = ks.iter().map(|k| (*k as f64).ln()).collect();
    let twisted: Vec<f64> = ks.iter().map(|&k| aap_product(&w, &minus, &j_interval(k), 2.0, Measure::Lebesgue)).collect::<Result<_>>()?;
    let plain: Vec<f64> = ks.iter().map(|&k| ap_product(&w, &j_interval(k), 2.0, Measure::Lebesgue)).collect::<Result<_>>()?;
    let slope = ls_slope(&lk, &twisted.iter().map(|v| v.ln()).collect::<Vec<_>>());
    let control = ls_slope(&lk, &plain.iter().map(|v| v.ln()).collect::<Vec<_>>());
    checks.push(Check::new(
        "twisted_growth",
        "log-log slope in k of the A_{-I,2} product on J_k; same with A = I as negative control",
        slope,
        "|slope - 0.5| <= 0.15 and |control slope| <= 0.15".into(),
        (slope - 0.5).abs() <= 0.15 && control.abs() <= 0.15,
        Basis::Computed,
        json!({ "k": ks, "product": twisted, "identity_product": plain, "identity_slope": control }),
    ));

    let family = CubeFamily::on_interval(-HALF_WIDTH, HALF_WIDTH, 0, 7, 2)?;
    let rep = constant(&w, &ClassSpec::ap(2.0), &family)?;
    checks.push(Check::new(
        "ap_finite",
        "[w]_{A_2} over the cube family on (-16, 16)",
        rep.value,
        "finite on at least 300 cubes".into(),
        rep.value.is_finite() && rep.cubes_evaluated >= 300,
        Basis::Literature,
        json!({ "cubes": rep.cubes_evaluated, "family": rep.family, "argmax": rep.argmax }),
    ));
    Ok(SuiteResult::new(SuiteId::Reflection, checks))
}
