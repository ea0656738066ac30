use serde_json::json;

use super::{Basis, Check, SuiteId, SuiteResult};
use crate::error::Result;
use crate::funcspace::{compose_matrix, weight_mass, Cube, CubeFamily, Measure, Segment, SegmentWeight1D, SquareMatrix, Tail};
use crate::numeric::ls_slope;
use crate::weightclass::{aap_product, ap_product, constant, ClassSpec};

const K_MAX: i32 = 6;

fn center(k: i32) -> f64 {
    2f64.powi(2 * k - 1)
}

fn right_end(k: i32) -> f64 {
    if k == 0 {
        0.0
    } else {
        3.0 * 2f64.powi(2 * k - 1)
    }
}

/// `|x - c_k|^(-1/2)` on `[a_{k-1}, a_k)` with `c_k = 2^(2k-1)`, `a_k = 3 2^(2k-1)`, `k = 1..=7`.
pub fn dilation_weight() -> Result<SegmentWeight1D> {
    let segments = (1..=K_MAX + 1)
        .map(|k| Segment::power(right_end(k - 1), right_end(k), 1.0, center(k), -0.5))
        .collect::<Result<Vec<_>>>()?;
    SegmentWeight1D::new(segments, Tail::ExtendLast)
}

/// `T_k = (2 c_k, 2 c_k + 1/4)`.
pub fn t_interval(k: i32) -> Cube {
    let lo = 2.0 * center(k);
    Cube::interval(lo, lo + 0.25).expect("nondegenerate")
}

pub fn suite_dilation() -> Result<SuiteResult> {
    let w = dilation_weight()?;
    let two = SquareMatrix::scalar(2.0)?;
    let w2 = compose_matrix(&w, &two)?;
    let sigma = w.pow(-1.0)?;
    let ks: Vec<i32> = (1..=K_MAX).collect();
    let mut checks = Vec::new();

    let placement: Vec<bool> = ks
        .iter()
        .map(|&k| {
            let t = t_interval(k);
            t.lo() > right_end(k - 1) && t.hi() < right_end(k)
        })
        .collect();
    checks.push(Check::new(
        "t_inside_segment",
        "T_k lies inside (a_{k-1}, a_k)",
        placement.iter().filter(|b| **b).count() as f64,
        format!("all {} intervals placed", ks.len()),
        placement.iter().all(|b| *b),
        Basis::Immediate,
        json!({ "k": ks, "inside": placement }),
    ));

    let masses: Vec<f64> = ks.iter().map(|&k| weight_mass(&w2, t_interval(k).lo(), t_interval(k).hi())).collect::<Result<_>>()?;
    let target = 0.5f64.sqrt();
    let worst = masses.iter().map(|m| (m - target).abs()).fold(0.0, f64::max);
    checks.push(Check::at_most(
        "dilated_mass",
        "max_k |int_{T_k} w(2x) dx - 2^(-1/2)|",
        worst,
        1e-10,
        Basis::Literature,
        json!({ "k": ks, "mass": masses }),
    ));

    let dual: Vec<f64> = ks.iter().map(|&k| weight_mass(&sigma, t_interval(k).lo(), t_interval(k).hi())).collect::<Result<_>>()?;
    let bounds: Vec<f64> = ks.iter().map(|&k| 0.25 * center(k).sqrt()).collect();
    let margin = dual.iter().zip(&bounds).map(|(d, b)| d / b).fold(f64::INFINITY, f64::min);
    checks.push(Check::at_least(
        "dual_mass_lower_bound",
        "min_k int_{T_k} w^-1 / (|T_k| c_k^(1/2))",
        margin,
        1.0,
        Basis::Literature,
        json!({ "k": ks, "dual_mass": dual, "bound": bounds }),
    ));

    let kf: Vec<f64> = ks.iter().map(|k| *k as f64).collect();
    let twisted: Vec<f64> = ks.iter().map(|&k| aap_product(&w, &two, &t_interval(k), 2.0, Measure::Lebesgue)).collect::<Result<_>>()?;
    let plain: Vec<f64> = ks.iter().map(|&k| ap_product(&w, &t_interval(k), 2.0, Measure::Lebesgue)).collect::<Result<_>>()?;
    let slope = ls_slope(&kf, &twisted.iter().map(|v| v.log2()).collect::<Vec<_>>());
    let control = ls_slope(&kf, &plain.iter().map(|v| v.log2()).collect::<Vec<_>>());
    checks.push(Check::new(
        "twisted_growth",
        "log2-slope in k of the A_{2,2} product on T_k; same with A = I as negative control",
        slope,
        "|slope - 1| <= 0.1 and |control slope| <= 0.1".into(),
        (slope - 1.0).abs() <= 0.1 && control.abs() <= 0.1,
        Basis::Computed,
        json!({ "k": ks, "product": twisted, "identity_product": plain, "identity_slope": control }),
    ));

    let family = CubeFamily::on_interval(0.0, right_end(K_MAX), 0, 6, 3)?;
    let rep = constant(&w, &ClassSpec::ap(2.0), &family)?;
    checks.push(Check::new(
        "ap_finite",
        "[w]_{A_2} over the cube family on (0, a_6)",
        rep.value,
        "finite on at least 300 cubes".into(),
        rep.value.is_finite() && rep.cubes_evaluated >= 300,
        Basis::Literature,
        json!({ "cubes": rep.cubes_evaluated, "family": rep.family, "argmax": rep.argmax }),
    ));
    Ok(SuiteResult::new(SuiteId::Dilation, checks))
}
