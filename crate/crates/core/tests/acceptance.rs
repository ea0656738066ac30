//! One line per acceptance criterion; exits nonzero if any fails.

use std::time::{Duration, Instant};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use weightlab::czlab::{cz_decompose, theorem_chain_check, ChainConfig};
use weightlab::funcspace::{
    compose_matrix, sample_to_grid, weight_mass, CellCube, Cube, CubeFamily, GridFunction, GridGeometry, Measure,
    Segment, SegmentWeight1D, SquareMatrix, Tail,
};
use weightlab::maximal::{fractional_maximal, hl_maximal, matrix_compose_to};
use weightlab::numeric::rel_diff;
use weightlab::verify::{
    dilation_weight, j_closed_form, j_interval, nondoubling_ap_closed_form, nondoubling_weight, reflection_weight,
    suite_dilation, suite_nondoubling, suite_reflection, suite_theorems, t_interval, test_functions, TheoremsConfig,
};
use weightlab::weightclass::{aap_product, ap_product, cube_quantity, ClassSpec};
use weightlab::young::{luxemburg_bisect, luxemburg_norm_cells, YoungFn};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn quad<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    quadrature::double_exponential::integrate(f, a, b, 1e-12).integral
}

/// `int_0^len f(d) dd` after `d = s^2`, for an inverse square root at `d = 0`.
fn quad_left_singular<F: Fn(f64) -> f64>(f: F, len: f64) -> f64 {
    quad(|s| 2.0 * s * f(s * s), 0.0, len.sqrt())
}

fn criterion_dilation() -> Outcome {
    let suite = suite_dilation().unwrap();
    let w = dilation_weight().unwrap();
    let w2 = compose_matrix(&w, &SquareMatrix::scalar(2.0).unwrap()).unwrap();
    let target = 0.5f64.sqrt();
    let mut closed: f64 = 0.0;
    let mut oracle: f64 = 0.0;
    for k in 1..=6 {
        let t = t_interval(k);
        closed = closed.max((weight_mass(&w2, t.lo(), t.hi()).unwrap() - target).abs());
        let c_next = 2f64.powi(2 * k + 1);
        let gap = 2.0 * t.lo() - c_next;
        let q = quad_left_singular(|d| (gap + 2.0 * d).abs().powf(-0.5), t.hi() - t.lo());
        oracle = oracle.max((q - target).abs());
    }
    let slope = suite.check("twisted_growth").unwrap();
    let pass = closed <= 1e-10 && oracle <= 1e-6 && slope.pass && suite.passed;
    outcome(
        pass,
        format!(
            "mass error {closed:.2e} (closed form), {oracle:.2e} (quadrature); slope {:.4}; suite {}",
            slope.value.unwrap_or(f64::NAN),
            if suite.passed { "passed" } else { "failed" }
        ),
    )
}

fn criterion_nondoubling() -> Outcome {
    let suite = suite_nondoubling(&[1.5, 2.0, 3.0]).unwrap();
    let half = SquareMatrix::scalar(0.5).unwrap();
    let mut worst: f64 = 0.0;
    for p in [1.5, 2.0, 3.0] {
        let w = nondoubling_weight(p).unwrap();
        for h in [0.01, 0.1, 1.0, 5.0, 20.0] {
            let v = aap_product(&w, &half, &Cube::interval(0.0, h).unwrap(), p, Measure::ExpAbs).unwrap();
            worst = worst.max(rel_diff(v, j_closed_form(p, h)));
        }
    }
    let small = j_closed_form(2.0, 0.001);
    let large = j_closed_form(2.0, 50.0);
    let w = nondoubling_weight(2.0).unwrap();
    let ap = ap_product(&w, &Cube::interval(0.0, 25.0).unwrap(), 2.0, Measure::ExpAbs).unwrap();
    let formula = nondoubling_ap_closed_form(2.0, 25.0);
    // quadrature cross-check of the same product
    let mu = quad(|x| x.exp(), 0.0, 25.0);
    let num = quad(|x| (2.0 * x).exp(), 0.0, 25.0);
    let den = quad(|_| 1.0, 0.0, 25.0);
    let by_quad = (num / mu) * (den / mu);
    let pass = worst <= 1e-8
        && (small - 1.0).abs() <= 0.02
        && large < 1e-3
        && (ap - formula).abs() <= 1e-6
        && rel_diff(by_quad, formula) <= 1e-6
        && suite.passed;
    outcome(
        pass,
        format!(
            "max rel gap to J_h {worst:.2e}; J_0.001 = {small:.6}; J_50 = {large:.2e}; A_2(mu) at h = 25: {ap:.10} vs {formula:.10} (quadrature {by_quad:.10})"
        ),
    )
}

fn criterion_reflection() -> Outcome {
    let suite = suite_reflection().unwrap();
    let w = reflection_weight().unwrap();
    let wr = compose_matrix(&w, &SquareMatrix::scalar(-1.0).unwrap()).unwrap();
    let worst = (1..=8)
        .map(|k| {
            let j = j_interval(k);
            (weight_mass(&wr, j.lo(), j.hi()).unwrap() - 1.0).abs()
        })
        .fold(0.0, f64::max);
    let growth = suite.check("twisted_growth").unwrap();
    let control = growth.inputs["identity_slope"].as_f64().unwrap();
    let pass = worst <= 1e-10 && growth.pass && control.abs() <= 0.15 && suite.passed;
    outcome(
        pass,
        format!(
            "mass error {worst:.2e}; slope {:.4}; identity-matrix slope {control:.4}",
            growth.value.unwrap_or(f64::NAN)
        ),
    )
}

fn random_weight(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> SegmentWeight1D {
    let cuts = [lo, lo + (hi - lo) * rng.random_range(0.2..0.45), lo + (hi - lo) * rng.random_range(0.55..0.8), hi];
    let segs = cuts
        .windows(2)
        .map(|c| {
            let gamma: f64 = rng.random_range(-0.6..1.5);
            let center: f64 = rng.random_range(c[0]..c[1]);
            Segment::power(c[0], c[1], rng.random_range(0.5..3.0), center, gamma).unwrap()
        })
        .collect();
    SegmentWeight1D::new(segs, Tail::Zero).unwrap()
}

fn composition_identity(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let lambdas = [2.0, -2.0, 0.5, -0.5, 4.0, -0.25, 1.0, -1.0];
    for i in 0..20 {
        let lambda: f64 = lambdas[i % lambdas.len()];
        let half = 4.0;
        let w = random_weight(&mut rng, -half * 4.0, half * 4.0);
        let a = SquareMatrix::scalar(lambda).unwrap();
        let n = 512;
        let g_out = GridGeometry::line(-half, half, n).unwrap();
        let g_in = GridGeometry::line(-half * lambda.abs(), half * lambda.abs(), n).unwrap();
        let wa = sample_to_grid(&compose_matrix(&w, &a).unwrap(), g_out).unwrap();
        let lhs = hl_maximal(&wa, &CubeFamily::for_grid(&g_out, 0, 9, 2).unwrap()).unwrap();
        let win = sample_to_grid(&w, g_in).unwrap();
        let mw = hl_maximal(&win, &CubeFamily::for_grid(&g_in, 0, 9, 2).unwrap()).unwrap();
        let rhs = matrix_compose_to(&mw, &a.inverse(), &g_out).unwrap();
        for j in 0..n {
            worst = worst.max(rel_diff(lhs.value(j), rhs.value(j)));
        }
    }
    worst
}

fn luxemburg_closed_forms(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n: usize = rng.random_range(1..40);
        let values: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let probs: Vec<f64> = raw.iter().map(|r| r / total).collect();
        let r: f64 = rng.random_range(1.0..6.0);
        let power = (values.iter().zip(&probs).map(|(v, p)| p * v.powf(r)).sum::<f64>()).powf(1.0 / r);
        let mean = values.iter().zip(&probs).map(|(v, p)| p * v).sum::<f64>();
        worst = worst.max(rel_diff(luxemburg_bisect(&values, &probs, &YoungFn::power(r)), power));
        worst = worst.max(rel_diff(luxemburg_bisect(&values, &probs, &YoungFn::Identity), mean));
        let uniform = (values.iter().map(|v| v.powf(r)).sum::<f64>() / n as f64).powf(1.0 / r);
        worst = worst.max(rel_diff(luxemburg_norm_cells(&values, &YoungFn::power(r)), uniform));
    }
    worst
}

fn cz_sandwich_corpus() -> (usize, usize) {
    let geom = GridGeometry::line(-8.0, 8.0, 1024).unwrap();
    let fs = test_functions(geom, 30, 99).unwrap();
    let mut cubes = 0;
    let mut bad = 0;
    for f in &fs {
        let dec = cz_decompose(f, 8.0, None).unwrap();
        for level in &dec.levels {
            let t = 8f64.powi(level.k);
            for c in &level.cubes {
                cubes += 1;
                if !(c.average > t / 4.0 && c.average <= t / 2.0) {
                    bad += 1;
                }
            }
        }
    }
    (cubes, bad)
}

fn prefix_sums_exact(seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g1 = GridGeometry::line(0.0, 1.0, 4096).unwrap();
    let g2 = GridGeometry::square([0.0, 0.0], 1.0, 256).unwrap();
    let mut dyadic = |g: GridGeometry| {
        let vals = (0..g.len()).map(|_| rng.random_range(0..1u32 << 20) as f64 / 1024.0).collect();
        GridFunction::new(g, vals).unwrap()
    };
    let (f1, f2) = (dyadic(g1), dyadic(g2));
    let mut mismatches = 0;
    for i in 0..100 {
        let (f, n) = if i % 2 == 0 { (&f1, 4096) } else { (&f2, 256) };
        let len = rng.random_range(1..=n);
        let x = rng.random_range(0..=n - len);
        let y = if f.dim() == 2 { rng.random_range(0..=n - len) } else { 0 };
        let c = CellCube::new([x, y], len);
        if f.cube_value_sum(&c) != f.cube_value_sum_direct(&c) {
            mismatches += 1;
        }
    }
    mismatches
}

fn criterion_identities() -> Outcome {
    let comp = composition_identity(4);
    let lux = luxemburg_closed_forms(5);
    let (cubes, bad) = cz_sandwich_corpus();
    let prefix = prefix_sums_exact(6);
    let pass = comp <= 1e-9 && lux <= 1e-8 && bad == 0 && cubes > 0 && prefix == 0;
    outcome(
        pass,
        format!(
            "composition max rel gap {comp:.2e}; Luxemburg max rel gap {lux:.2e}; sandwich violations {bad}/{cubes} cubes; prefix mismatches {prefix}/100"
        ),
    )
}

fn criterion_theorems() -> Outcome {
    let suite = suite_theorems(&TheoremsConfig::default()).unwrap();
    let names = ["chain_slacks", "rh_inclusion", "finite_order", "planar_level_sets"];
    let parts: Vec<String> = names
        .iter()
        .map(|n| {
            let c = suite.check(n).unwrap();
            format!("{n} {} ({:.3e})", if c.pass { "ok" } else { "FAIL" }, c.value.unwrap_or(f64::NAN))
        })
        .collect();
    outcome(suite.passed, parts.join("; "))
}

fn criterion_fractional() -> Outcome {
    let geom = GridGeometry::line(-8.0, 8.0, 1 << 14).unwrap();
    let fs = test_functions(geom, 12, 7).unwrap();
    let fam = CubeFamily::for_grid(&geom, 0, 14, 2).unwrap();
    let bitwise = fs.iter().all(|f| {
        let a = fractional_maximal(f, 0.0, &fam).unwrap();
        let b = hl_maximal(f, &fam).unwrap();
        a.values().iter().zip(b.values()).all(|(x, y)| x.to_bits() == y.to_bits())
    });
    let cubes = CubeFamily::on_interval(-8.0, 8.0, 0, 5, 2).unwrap().cubes();
    let mut ident: f64 = 0.0;
    for delta in [0.0, 0.25, -0.125, 0.4] {
        let w = SegmentWeight1D::power_weight(-64.0, 64.0, 0.0, delta).unwrap();
        let wp = w.pow(2.0).unwrap();
        for lambda in [2.0, -0.5, 1.0] {
            let a = SquareMatrix::scalar(lambda).unwrap();
            for q in &cubes {
                let lhs = cube_quantity(&w, &ClassSpec::Frac { p: 2.0, q: 2.0, a }, q).unwrap().powi(2);
                let rhs = cube_quantity(&wp, &ClassSpec::aap(2.0, a), q).unwrap();
                ident = ident.max(rel_diff(lhs, rhs));
            }
        }
    }
    let mut worst_slack = f64::INFINITY;
    let mut chains_hold = true;
    for delta in [0.0, 0.25, -0.125] {
        let w = SegmentWeight1D::power_weight(-64.0, 64.0, 0.0, delta).unwrap();
        for lambda in [0.5, -0.5, 2.0, -2.0] {
            for f in &fs[..2] {
                let r = theorem_chain_check(f, &w, &SquareMatrix::scalar(lambda).unwrap(), &ChainConfig::fractional(2.0, 0.25)).unwrap();
                assert_eq!(r.q, 4.0);
                chains_hold &= r.holds();
                worst_slack = worst_slack.min(r.min_slack());
            }
        }
    }
    let pass = bitwise && ident <= 1e-9 && chains_hold && worst_slack >= -1e-6;
    outcome(
        pass,
        format!("alpha = 0 bitwise {bitwise}; per-cube identity max rel gap {ident:.2e}; fractional chain min slack {worst_slack:.3e}"),
    )
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome, Duration);
    let criteria: [Criterion; 6] = [
        ("dilation counterexample", criterion_dilation, Duration::from_secs(5)),
        ("non-doubling counterexample", criterion_nondoubling, Duration::from_secs(5)),
        ("reflection counterexample", criterion_reflection, Duration::from_secs(5)),
        ("identity suite", criterion_identities, Duration::from_secs(60)),
        ("theorem probes", criterion_theorems, Duration::from_secs(60)),
        ("fractional suite", criterion_fractional, Duration::from_secs(60)),
    ];
    let mut failures = 0;
    for (i, (name, run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let pass = out.pass && elapsed <= *limit;
        if !pass {
            failures += 1;
        }
        println!(
            "criterion {} ({name}): {} | {} | {:.2?} (limit {:?})",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            elapsed,
            limit
        );
    }
    if failures > 0 {
        eprintln!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
