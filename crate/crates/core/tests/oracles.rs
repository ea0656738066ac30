//! Frozen values and quadrature cross-checks.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use weightlab::funcspace::{
    weight_mass, CellCube, Cube, CubeFamily, GridFunction, GridGeometry, Measure, Segment, SegmentWeight1D,
    SquareMatrix, Tail,
};
use weightlab::maximal::{brute_force_maximal_1d, fractional_maximal, hl_maximal};
use weightlab::numeric::rel_diff;
use weightlab::verify::{j_closed_form, nondoubling_ap_closed_form, nondoubling_weight};
use weightlab::weightclass::{aap_product, ap_product};

fn quad<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    quadrature::double_exponential::integrate(f, a, b, 1e-13).integral
}

/// `int_a^b |x - c|^g dx`, split at `c` and desingularised by `x = c +- s^k`.
fn power_mass(c: f64, g: f64, a: f64, b: f64) -> f64 {
    let k = (2.0 / (1.0 + g)).ceil().max(2.0);
    let int = |d0: f64, d1: f64| {
        quad(|s| k * s.powf(k - 1.0) * s.powf(k).powf(g), d0.powf(1.0 / k), d1.powf(1.0 / k))
    };
    let right = |lo: f64, hi: f64| int(lo - c, hi - c);
    let left = |lo: f64, hi: f64| int(c - hi, c - lo);
    if b <= c {
        left(a, b)
    } else if a >= c {
        right(a, b)
    } else {
        left(a, c) + right(c, b)
    }
}

#[test]
fn power_segment_masses_match_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let (lo, hi) = (-3.0, 5.0);
        let center: f64 = rng.random_range(lo..hi);
        let gamma: f64 = rng.random_range(-0.9..2.0);
        let coef: f64 = rng.random_range(0.2..4.0);
        let w = SegmentWeight1D::single(Segment::power(lo, hi, coef, center, gamma).unwrap());
        let a: f64 = rng.random_range(lo..hi);
        let b: f64 = rng.random_range(a..hi);
        let got = weight_mass(&w, a, b).unwrap();
        let want = coef * power_mass(center, gamma, a, b);
        assert!(rel_diff(got, want) <= 1e-9, "c={center} g={gamma} [{a},{b}]: {got} vs {want}");
    }
}

#[test]
fn exponential_segment_masses_match_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..200 {
        let rate: f64 = rng.random_range(-3.0..3.0);
        let coef: f64 = rng.random_range(0.2..4.0);
        let w = SegmentWeight1D::single(Segment::exponential(-10.0, 10.0, coef, rate).unwrap());
        let a: f64 = rng.random_range(-10.0..10.0);
        let b: f64 = rng.random_range(a..10.0);
        let got = weight_mass(&w, a, b).unwrap();
        let want = quad(|x| coef * (rate * x).exp(), a, b);
        assert!((got - want).abs() <= 1e-10 * want + 1e-13, "{got} vs {want}");
    }
}

#[test]
fn twisted_product_matches_quadrature() {
    // mu = e^{|x|} dx, w(x/2) = e^{(p-1)x/2}, w^{-1/(p-1)} = e^{-x} on (0, h)
    let half = SquareMatrix::scalar(0.5).unwrap();
    for p in [1.5, 2.0, 3.0] {
        let w = nondoubling_weight(p).unwrap();
        for h in [0.01, 0.1, 1.0, 5.0, 20.0] {
            let mu = quad(f64::exp, 0.0, h);
            let first = quad(|x| ((p - 1.0) * x / 2.0 + x).exp(), 0.0, h) / mu;
            let second = quad(|_| 1.0, 0.0, h) / mu;
            let want = first * second.powf(p - 1.0);
            let got = aap_product(&w, &half, &Cube::interval(0.0, h).unwrap(), p, Measure::ExpAbs).unwrap();
            assert!(rel_diff(got, want) <= 1e-9, "p={p} h={h}: {got} vs {want}");
            assert!(rel_diff(j_closed_form(p, h), want) <= 1e-9);
        }
    }
}

#[test]
fn untwisted_product_frozen_values() {
    // mpmath, 30 digits
    let w = nondoubling_weight(2.0).unwrap();
    for (h, frozen) in [(10.0, 5.000_454_019_910_097), (25.0, 12.500_000_000_347_2)] {
        let got = ap_product(&w, &Cube::interval(0.0, h).unwrap(), 2.0, Measure::ExpAbs).unwrap();
        assert!((got - frozen).abs() <= 1e-9, "h={h}: {got}");
        assert!((nondoubling_ap_closed_form(2.0, h) - frozen).abs() <= 1e-9);
    }
}

fn random_grid(seed: u64, n: usize) -> GridFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let geom = GridGeometry::line(-2.0, 2.0, n).unwrap();
    let values = (0..n)
        .map(|_| if rng.random_bool(0.3) { 0.0 } else { rng.random_range(0.0..8.0) })
        .collect();
    GridFunction::new(geom, values).unwrap()
}

fn direct_average(f: &GridFunction, c: &CellCube) -> f64 {
    let s: f64 = (c.start[0]..c.start[0] + c.len).map(|i| f.value(i)).sum();
    s / c.len as f64
}

#[test]
fn family_maximal_matches_enumeration() {
    for seed in 0..6 {
        let f = random_grid(seed, 128);
        let fam = CubeFamily::for_grid(f.geom(), 0, 7, 2).unwrap();
        let got = hl_maximal(&f, &fam).unwrap();
        let mut want: Vec<f64> = f.values().to_vec();
        for c in fam.grid_lattices(f.geom()).unwrap().cubes(1) {
            let avg = direct_average(&f, &c);
            for slot in &mut want[c.start[0]..c.start[0] + c.len] {
                *slot = slot.max(avg);
            }
        }
        for (i, (g, w)) in got.values().iter().zip(&want).enumerate() {
            assert!(rel_diff(*g, *w) <= 1e-12, "seed {seed} cell {i}: {g} vs {w}");
        }
    }
}

#[test]
fn all_interval_maximal_dominates_family() {
    for seed in 10..14 {
        let f = random_grid(seed, 128);
        let fam = CubeFamily::for_grid(f.geom(), 0, 7, 2).unwrap();
        let h = f.geom().h();
        for alpha in [0.0, 0.3] {
            let brute = brute_force_maximal_1d(&f, alpha);
            let mut mine = vec![0.0f64; 128];
            for s in 0..128 {
                for l in 1..=128 - s {
                    let v = direct_average(&f, &CellCube::new([s, 0], l)) * (l as f64 * h).powf(alpha);
                    for slot in &mut mine[s..s + l] {
                        *slot = slot.max(v);
                    }
                }
            }
            let fm = fractional_maximal(&f, alpha, &fam).unwrap();
            for i in 0..128 {
                assert!(rel_diff(brute[i], mine[i]) <= 1e-12);
                assert!(fm.value(i) <= mine[i] * (1.0 + 1e-12));
            }
        }
    }
}

#[test]
fn maximal_of_indicator_frozen() {
    // M chi_[0,1) over all intervals on a fine grid: 1 inside, 1/(1+d) at distance d.
    let geom = GridGeometry::line(-4.0, 4.0, 256).unwrap();
    let f = GridFunction::from_fn(geom, |c| if (0.0..1.0).contains(&c[0]) { 1.0 } else { 0.0 }).unwrap();
    let brute = brute_force_maximal_1d(&f, 0.0);
    for i in 0..256 {
        let left = geom.edge(0, i);
        let right = left + geom.h();
        let want = if right <= 0.0 {
            1.0 / (1.0 - left)
        } else if left >= 1.0 {
            1.0 / right
        } else {
            1.0
        };
        assert!(rel_diff(brute[i], want) <= 1e-12, "cell {i}: {} vs {want}", brute[i]);
    }
}

#[test]
fn tail_zero_mass_outside_support() {
    let w = SegmentWeight1D::new(vec![Segment::power(0.0, 1.0, 1.0, 0.0, 0.5).unwrap()], Tail::Zero).unwrap();
    assert_eq!(weight_mass(&w, 2.0, 3.0).unwrap(), 0.0);
    assert!(rel_diff(weight_mass(&w, -1.0, 2.0).unwrap(), 2.0 / 3.0) <= 1e-14);
}
