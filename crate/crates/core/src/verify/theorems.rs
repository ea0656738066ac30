use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use super::dilation::{dilation_weight, t_interval};
use super::reflection::{j_interval, reflection_weight};
use super::{Basis, Check, SuiteId, SuiteResult};
use crate::czlab::{level_sets, theorem_chain_check, ChainConfig, ChainReport, SLACK_TOL};
use crate::error::Result;
use crate::funcspace::{weight_mass, Cube, CubeFamily, GridFunction, GridGeometry, Measure, SegmentWeight1D, SquareMatrix};
use crate::maximal::{fractional_maximal, hl_maximal};
use crate::numeric::{ls_slope, rel_diff, uncentered_maximal_norm_1d};
use crate::weightclass::{aap_product, ap_product, cube_quantity, finite_order_reduction, rh_inclusion_check, ClassSpec, WeightInput};

#[derive(Clone, Debug, PartialEq)]
pub struct TheoremsConfig {
    /// Cells of the one-dimensional grid, as a power of two.
    pub cells_log2: u32,
    /// Cells per side of the two-dimensional grid, as a power of two.
    pub cells_2d_log2: u32,
    pub functions: usize,
    pub seed: u64,
}

impl Default for TheoremsConfig {
    fn default() -> Self {
        TheoremsConfig { cells_log2: 14, cells_2d_log2: 9, functions: 50, seed: 20_240_601 }
    }
}

const BOX: f64 = 8.0;
const IN_CLASS: [f64; 3] = [0.0, 0.5, -0.25];
const FRACTIONAL_IN_CLASS: [f64; 3] = [0.0, 0.25, -0.125];
const DILATIONS: [f64; 4] = [0.5, -0.5, 2.0, -2.0];

fn power_weight(delta: f64) -> Result<SegmentWeight1D> {
    if delta == 0.0 {
        SegmentWeight1D::constant(-8.0 * BOX, 8.0 * BOX, 1.0)
    } else {
        SegmentWeight1D::power_weight(-8.0 * BOX, 8.0 * BOX, 0.0, delta)
    }
}

fn indicator(lo: f64, hi: f64) -> impl Fn(f64) -> f64 {
    move |x| if (lo..hi).contains(&x) { 1.0 } else { 0.0 }
}

/// The two fixed chain functions followed by seeded random step functions.
pub fn test_functions(geom: GridGeometry, count: usize, seed: u64) -> Result<Vec<GridFunction>> {
    let unit = indicator(0.0, 1.0);
    let spike = indicator(-2.1, -2.0);
    let mut out = vec![
        GridFunction::from_fn(geom, |c| unit(c[0]))?,
        GridFunction::from_fn(geom, |c| 3.0 * (1.0 - (c[0] - 0.3).abs()).max(0.0) + 20.0 * spike(c[0]))?,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while out.len() < count {
        let pieces: usize = rng.random_range(1..5);
        let bumps: Vec<(f64, f64, f64)> = (0..pieces)
            .map(|_| {
                let width: f64 = 2f64.powf(rng.random_range(-6.0..2.0));
                let lo: f64 = rng.random_range(-6.0..6.0 - width);
                (lo, lo + width, rng.random_range(0.5..8.0))
            })
            .collect();
        out.push(GridFunction::from_fn(geom, |c| {
            bumps.iter().map(|(lo, hi, v)| indicator(*lo, *hi)(c[0]) * v).sum()
        })?);
    }
    out.truncate(count);
    Ok(out)
}

fn chain_summary(r: &ChainReport) -> Value {
    json!({
        "min_slack": r.min_slack(),
        "applicable_steps": r.steps.iter().filter(|s| s.applicable).count(),
        "bump_constant": r.bump_constant,
        "beta": r.beta,
        "ratio": r.ratio,
        "bound": r.bound,
        "note": r.note,
    })
}

fn chain_check(
    name: &str,
    description: &str,
    fs: &[GridFunction],
    deltas: &[f64],
    ps: &[f64],
    alpha: f64,
) -> Result<Check> {
    let configs: Vec<(f64, f64, f64, usize)> = deltas
        .iter()
        .flat_map(|d| DILATIONS.iter().flat_map(move |l| ps.iter().flat_map(move |p| (0..fs.len()).map(move |i| (*d, *l, *p, i)))))
        .collect();
    let rows = configs
        .par_iter()
        .map(|&(delta, lambda, p, i)| {
            let cfg = if alpha > 0.0 { ChainConfig::fractional(p, alpha) } else { ChainConfig::new(p) };
            let r = theorem_chain_check(&fs[i], &power_weight(delta)?, &SquareMatrix::scalar(lambda)?, &cfg)?;
            Ok((r.holds(), r.min_slack(), json!({ "delta": delta, "lambda": lambda, "p": p, "function": i, "chain": chain_summary(&r) })))
        })
        .collect::<Result<Vec<_>>>()?;
    let worst = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let pass = rows.iter().all(|r| r.0);
    Ok(Check::new(
        name,
        description,
        worst,
        format!("every applicable slack >= {SLACK_TOL:e}, cover and disjointness exact"),
        pass,
        Basis::Computed,
        Value::Array(rows.into_iter().map(|r| r.2).collect()),
    ))
}

/// `sup_lambda lambda^p w({M_{A^{-1}} f > lambda}) / ||f||^p` for
/// `f = w^(-1/(p-1))` on the interval, computed on a local grid around it.
pub fn weak_type_quantity(w: &SegmentWeight1D, a: &SquareMatrix, t: &Cube, p: f64, cells_log2: u32) -> Result<f64> {
    let geom = GridGeometry::line(t.lo() - 2.0, t.lo() + 2.0, 1 << cells_log2)?;
    let sigma = w.pow(-1.0 / (p - 1.0))?;
    let n = geom.cells;
    let edge = |i: usize| geom.lo[0] + i as f64 * geom.h();
    let f = GridFunction::from_fn(geom, |c| {
        if t.contains(c) {
            let i = ((c[0] - geom.lo[0]) / geom.h()) as usize;
            sigma.mass_between(edge(i), edge(i + 1)) / geom.h()
        } else {
            0.0
        }
    })?;
    let family = CubeFamily::for_grid(&geom, 0, cells_log2, 2)?;
    let mf = hl_maximal(&f, &family)?;
    let lam = a.as_scalar().expect("one-dimensional matrix");
    let image_mass = |i: usize| {
        let (u, v) = (lam * edge(i), lam * edge(i + 1));
        weight_mass(w, u.min(v), u.max(v))
    };
    let mut norm = 0.0;
    for i in 0..n {
        if f.value(i) > 0.0 {
            norm += f.value(i).powf(p) * weight_mass(w, edge(i), edge(i + 1))?;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|i, j| mf.value(*j).total_cmp(&mf.value(*i)).then(i.cmp(j)));
    let mut cumulative = 0.0;
    let mut best: f64 = 0.0;
    for i in order {
        let v = mf.value(i);
        if v <= 0.0 {
            break;
        }
        cumulative += image_mass(i)?;
        best = best.max(v.powf(p) * cumulative);
    }
    Ok(best / norm)
}

pub fn suite_theorems(cfg: &TheoremsConfig) -> Result<SuiteResult> {
    let geom = GridGeometry::line(-BOX, BOX, 1 << cfg.cells_log2)?;
    let fs = test_functions(geom, cfg.functions.max(2), cfg.seed)?;
    let mut checks = Vec::new();

    checks.push(chain_check(
        "chain_slacks",
        "chain inequalities on power weights, dilations +-1/2, +-2 and p in {3/2, 2}",
        &fs[..2],
        &IN_CLASS,
        &[1.5, 2.0],
        0.0,
    )?);
    checks.push(chain_check(
        "fractional_chain_slacks",
        "fractional chain with (p, q) = (2, 4), alpha = 1/4",
        &fs[..2],
        &FRACTIONAL_IN_CLASS,
        &[2.0],
        0.25,
    )?);

    // norm ratios over the function corpus
    let p = 2.0;
    let mut rows = Vec::new();
    let mut worst_ratio: f64 = 0.0;
    let mut ratio_ok = true;
    for delta in IN_CLASS {
        let w = power_weight(delta)?;
        for lambda in [2.0, -0.5] {
            let a = SquareMatrix::scalar(lambda)?;
            let reports = fs
                .par_iter()
                .map(|f| theorem_chain_check(f, &w, &a, &ChainConfig::new(p)))
                .collect::<Result<Vec<_>>>()?;
            let max_ratio = reports.iter().map(|r| r.ratio).fold(0.0, f64::max);
            let within_chain = reports.iter().all(|r| r.bound.is_some_and(|b| r.ratio <= b));
            let unweighted_bound = lambda.abs().powf(1.0 / p) * uncentered_maximal_norm_1d(p);
            let unweighted_ok = delta != 0.0 || max_ratio <= unweighted_bound * (1.0 + 1e-12);
            ratio_ok &= within_chain && unweighted_ok;
            worst_ratio = worst_ratio.max(max_ratio);
            rows.push(json!({
                "delta": delta, "lambda": lambda, "p": p, "functions": fs.len(),
                "max_ratio": max_ratio, "within_chain_bound": within_chain,
                "unweighted_bound": (delta == 0.0).then_some(unweighted_bound),
            }));
        }
    }
    checks.push(Check::new(
        "norm_ratio",
        "max over the function corpus of ||M_{A^-1} f|| / ||f|| in L^2(w)",
        worst_ratio,
        "each ratio <= its chain bound; unweighted ratio <= |det A|^(1/p) ||M||_p".into(),
        ratio_ok,
        Basis::Computed,
        json!(rows),
    ));

    // weak type along the T_k-adapted functions for the dilation weight
    let dw = dilation_weight()?;
    let ks: Vec<i32> = (1..=6).collect();
    let two = SquareMatrix::scalar(2.0)?;
    let id = SquareMatrix::identity(1);
    let twisted = ks.par_iter().map(|&k| weak_type_quantity(&dw, &two, &t_interval(k), 2.0, 12)).collect::<Result<Vec<_>>>()?;
    let plain = ks.par_iter().map(|&k| weak_type_quantity(&dw, &id, &t_interval(k), 2.0, 12)).collect::<Result<Vec<_>>>()?;
    let kf: Vec<f64> = ks.iter().map(|k| *k as f64).collect();
    let slope = ls_slope(&kf, &twisted.iter().map(|v| v.ln()).collect::<Vec<_>>());
    let control = ls_slope(&kf, &plain.iter().map(|v| v.ln()).collect::<Vec<_>>());
    let ln2 = std::f64::consts::LN_2;
    checks.push(Check::new(
        "weak_type_growth",
        "slope in k of ln sup_t t^2 w({M_{A^-1} f_k > t}) / ||f_k||^2 for the dilation weight, A = 2 (empirical)",
        slope,
        "|slope - ln 2| <= 0.1 and |identity slope| <= 0.1".into(),
        (slope - ln2).abs() <= 0.1 && control.abs() <= 0.1,
        Basis::Computed,
        json!({ "k": ks, "quantity": twisted, "identity_quantity": plain, "identity_slope": control }),
    ));

    // reverse Hölder inclusion
    let family = CubeFamily::on_interval(-BOX, BOX, 0, 6, 2)?;
    let mut rows = Vec::new();
    let mut rh_ok = true;
    let mut cubes = usize::MAX;
    for delta in [0.0, -0.25] {
        let r = rh_inclusion_check(&power_weight(delta)?, &two, 2.0, 0.5, &family, Measure::Lebesgue)?;
        rh_ok &= r.applicable && r.holds;
        cubes = cubes.min(r.cubes);
        rows.push(json!({ "delta": delta, "report": r }));
    }
    checks.push(Check::new(
        "rh_inclusion",
        "per-cube identity P_{p-eps} = R^(p-1) P_p and the class bound, A = 2, p = 2, eps = 1/2",
        cubes as f64,
        "holds on at least 200 cubes".into(),
        rh_ok && cubes >= 200,
        Basis::Computed,
        json!(rows),
    ));

    // finite order: A = -I
    let minus = SquareMatrix::scalar(-1.0)?;
    let mut rows = Vec::new();
    let mut fo_ok = true;
    for delta in [0.5, -0.25] {
        let r = finite_order_reduction(WeightInput::Analytic(&power_weight(delta)?), &minus, 2.0, &family)?;
        fo_ok &= r.applicable && r.consistent && r.order == Some(2) && r.aap.is_finite() && r.ap.is_finite();
        rows.push(json!({ "delta": delta, "report": r }));
    }
    let rw = reflection_weight()?;
    let rfam = CubeFamily::on_interval(-16.0, 16.0, 0, 7, 2)?;
    let sep = finite_order_reduction(WeightInput::Analytic(&rw), &minus, 2.0, &rfam)?;
    let jk: Vec<i32> = (1..=15).collect();
    let prods = jk.iter().map(|&k| aap_product(&rw, &minus, &j_interval(k), 2.0, Measure::Lebesgue)).collect::<Result<Vec<_>>>()?;
    let sep_slope = ls_slope(&jk.iter().map(|k| (*k as f64).ln()).collect::<Vec<_>>(), &prods.iter().map(|v| v.ln()).collect::<Vec<_>>());
    let separated = sep.ap.is_finite() && sep.aap > sep.ap && (sep_slope - 0.5).abs() <= 0.15;
    rows.push(json!({ "weight": "reflection", "report": sep, "j_products": prods, "slope": sep_slope }));
    checks.push(Check::new(
        "finite_order",
        "A = -I: twisted class finite implies A_2 finite; the reflection weight separates the classes",
        sep_slope,
        "consistent reductions, and twisted products on J_k grow with log-slope 0.5 +- 0.15 while [w]_{A_2} stays finite".into(),
        fo_ok && separated,
        Basis::Computed,
        json!(rows),
    ));

    // level sets in the plane
    let n2 = 1usize << cfg.cells_2d_log2;
    let g2 = GridGeometry::square([-1.0, -1.0], 2.0, n2)?;
    let f2 = GridFunction::from_fn(g2, |c| {
        let a = (0.1..0.4).contains(&c[0]) && (-0.3..0.2).contains(&c[1]);
        let b = (-0.6..-0.5).contains(&c[0]) && (-0.6..-0.5).contains(&c[1]);
        f64::from(u8::from(a)) + 4.0 * f64::from(u8::from(b))
    })?;
    let fam2 = CubeFamily::for_grid(&g2, 0, cfg.cells_2d_log2, 2)?;
    let mats = [
        ("-I", SquareMatrix::new(2, &[-1.0, 0.0, 0.0, -1.0])?),
        ("quarter turn", SquareMatrix::rotation_quarter(1)),
        ("2I", SquareMatrix::new(2, &[2.0, 0.0, 0.0, 2.0])?),
    ];
    let mut rows = Vec::new();
    let mut ls_ok = true;
    for (name, m) in &mats {
        let ls = level_sets(&f2, m, 16.0, None, &fam2)?;
        let ok = ls.all_exact() && ls.rows.iter().all(|r| r.nested && r.triple_cover && r.cover_exact);
        ls_ok &= ok && !ls.rows.is_empty();
        rows.push(json!({ "matrix": name, "levels": ls.rows.len(), "ok": ok }));
    }
    checks.push(Check::new(
        "planar_level_sets",
        "Omega^A_k = A(Omega_k), D^A_k = A(D_k), nesting, triple-cube and exact dyadic cover on the plane",
        mats.len() as f64,
        "all identities exact".into(),
        ls_ok,
        Basis::Immediate,
        json!(rows),
    ));

    // fractional operator at alpha = 0 and the per-cube exponent identity
    let fam1 = CubeFamily::for_grid(&geom, 0, cfg.cells_log2, 2)?;
    let bitwise = fs
        .par_iter()
        .take(10)
        .map(|f| {
            let a = fractional_maximal(f, 0.0, &fam1)?;
            let b = hl_maximal(f, &fam1)?;
            Ok(a.values().iter().zip(b.values()).all(|(x, y)| x.to_bits() == y.to_bits()))
        })
        .collect::<Result<Vec<bool>>>()?;
    checks.push(Check::new(
        "fractional_reduction",
        "M_0 equals M bit for bit on the first ten functions",
        bitwise.iter().filter(|b| **b).count() as f64,
        "all equal".into(),
        bitwise.iter().all(|b| *b),
        Basis::Immediate,
        json!({ "functions": bitwise.len() }),
    ));

    let cube_family = CubeFamily::on_interval(-BOX, BOX, 0, 5, 2)?;
    let mut worst: f64 = 0.0;
    for delta in FRACTIONAL_IN_CLASS {
        let w = power_weight(delta)?;
        let wp = w.pow(2.0)?;
        for lambda in [2.0, -0.5] {
            let a = SquareMatrix::scalar(lambda)?;
            let frac = ClassSpec::Frac { p: 2.0, q: 2.0, a };
            let twisted = ClassSpec::aap(2.0, a);
            for q in cube_family.cubes() {
                let lhs = cube_quantity(&w, &frac, &q)?.powi(2);
                let rhs = cube_quantity(&wp, &twisted, &q)?;
                worst = worst.max(rel_diff(lhs, rhs));
            }
        }
    }
    checks.push(Check::at_most(
        "fractional_identity",
        "max relative gap between P_frac(w; p, p)^p and P_{A,p}(w^p) per cube",
        worst,
        1e-9,
        Basis::Immediate,
        json!({ "delta": FRACTIONAL_IN_CLASS, "lambda": [2.0, -0.5], "cubes": cube_family.len() }),
    ));

    // identity sanity: A = I chains agree with the plain maximal function
    let plain = ap_product(&power_weight(0.5)?, &Cube::interval(0.0, 1.0)?, 2.0, Measure::Lebesgue)?;
    let twisted = aap_product(&power_weight(0.5)?, &SquareMatrix::identity(1), &Cube::interval(0.0, 1.0)?, 2.0, Measure::Lebesgue)?;
    checks.push(Check::close(
        "identity_matrix",
        "A = I reduces the twisted product to the plain one on (0, 1)",
        twisted,
        plain,
        1e-14 * plain,
        Basis::Immediate,
        json!({ "delta": 0.5 }),
    ));
    Ok(SuiteResult::new(SuiteId::Theorems, checks))
}
