//! Weight-class constants over finite cube families: `A_p`, the matrix-twisted
//! `A_{A,p}` and `A_{A,1}`, bump and fractional variants, reverse Hölder, and
//! the inclusion and reduction probes built on them.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::funcspace::{
    compose_matrix, sample_to_grid, CellCube, Cube, CubeFamily, FamilySpec, GridFunction, GridGeometry,
    Measure, SegmentWeight1D, SquareMatrix,
};
use crate::maximal::{hl_maximal, matrix_compose};
use crate::young::{luxemburg_norm_analytic, YoungFn};

/// Weight classes with a per-cube characteristic quantity.
#[derive(Clone, Debug, PartialEq)]
pub enum ClassSpec {
    Ap { p: f64, measure: Measure },
    Aap { p: f64, a: SquareMatrix, measure: Measure },
    Aa1 { a: SquareMatrix },
    Bump { p: f64, a: SquareMatrix, phi: YoungFn },
    Frac { p: f64, q: f64, a: SquareMatrix },
    FracBump { p: f64, q: f64, a: SquareMatrix, phi: YoungFn },
    Rh { s: f64 },
}

impl ClassSpec {
    pub fn ap(p: f64) -> Self {
        ClassSpec::Ap { p, measure: Measure::Lebesgue }
    }

    pub fn aap(p: f64, a: SquareMatrix) -> Self {
        ClassSpec::Aap { p, a, measure: Measure::Lebesgue }
    }

    /// Fractional class with `1/q = 1/p - alpha/n`.
    pub fn frac_from_alpha(p: f64, alpha: f64, a: SquareMatrix) -> Result<Self> {
        let n = a.dim() as f64;
        let inv_q = 1.0 / p - alpha / n;
        if !(inv_q > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "1/p - alpha/n must be positive (p = {p}, alpha = {alpha})"
            )));
        }
        let spec = ClassSpec::Frac { p, q: 1.0 / inv_q, a };
        spec.validate()?;
        Ok(spec)
    }

    pub fn name(&self) -> &'static str {
        match self {
            ClassSpec::Ap { .. } => "ap",
            ClassSpec::Aap { .. } => "aap",
            ClassSpec::Aa1 { .. } => "aa1",
            ClassSpec::Bump { .. } => "bump",
            ClassSpec::Frac { .. } => "frac",
            ClassSpec::FracBump { .. } => "frac_bump",
            ClassSpec::Rh { .. } => "rh",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let need_p = |p: f64| {
            if p > 1.0 && p.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("p must lie in (1, inf), got {p}")))
            }
        };
        match self {
            ClassSpec::Ap { p, .. } | ClassSpec::Aap { p, .. } => need_p(*p),
            ClassSpec::Aa1 { .. } => Ok(()),
            ClassSpec::Bump { p, phi, .. } => {
                need_p(*p)?;
                phi.validate()
            }
            ClassSpec::Frac { p, q, .. } | ClassSpec::FracBump { p, q, .. } => {
                need_p(*p)?;
                if !(*q >= *p && q.is_finite()) {
                    return Err(Error::InvalidParameter(format!("fractional classes need q >= p, got q = {q}")));
                }
                if let ClassSpec::FracBump { phi, .. } = self {
                    phi.validate()?;
                }
                Ok(())
            }
            ClassSpec::Rh { s } => {
                if *s > 1.0 && s.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!("RH needs s > 1, got {s}")))
                }
            }
        }
    }

    fn matrix(&self) -> Option<&SquareMatrix> {
        match self {
            ClassSpec::Aap { a, .. }
            | ClassSpec::Aa1 { a }
            | ClassSpec::Bump { a, .. }
            | ClassSpec::Frac { a, .. }
            | ClassSpec::FracBump { a, .. } => Some(a),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CubeRecord {
    pub corner: Vec<f64>,
    pub side: f64,
}

impl From<&Cube> for CubeRecord {
    fn from(c: &Cube) -> Self {
        CubeRecord {
            corner: c.corner[..c.dim].to_vec(),
            side: c.side,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceEntry {
    pub cube: CubeRecord,
    pub value: f64,
}

/// Maximum of the per-cube quantity over the evaluated cubes (a lower bound
/// of the supremum over all cubes).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstantReport {
    pub class: String,
    pub value: f64,
    /// Set when `value` is infinite (serialized as null).
    pub unbounded: bool,
    pub argmax: Option<CubeRecord>,
    pub witness: Option<String>,
    pub family: FamilySpec,
    pub cubes_evaluated: usize,
    pub cubes_skipped: usize,
    pub trace: Option<Vec<TraceEntry>>,
}

impl ConstantReport {
    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }
}

/// A `theta`-power of a weight, ready for averages; negative powers are
/// infinite on cubes that leave the support.
struct PowWeight {
    weight: SegmentWeight1D,
    support: SegmentWeight1D,
    negative: bool,
    measure: Measure,
}

impl PowWeight {
    fn new(w: &SegmentWeight1D, theta: f64, measure: Measure) -> Result<Self> {
        let weight = if theta == 1.0 { w.clone() } else { w.pow(theta)? };
        Ok(PowWeight {
            weight: weight.with_measure(measure)?,
            support: w.clone(),
            negative: theta < 0.0,
            measure,
        })
    }

    /// `mu`-average over `[a, b]`.
    fn avg(&self, a: f64, b: f64) -> f64 {
        if self.negative && !self.support.covers(a, b) {
            return f64::INFINITY;
        }
        self.weight.mass_between(a, b) / self.measure.mass(a, b)
    }
}

fn product(first: f64, second: f64) -> f64 {
    if first.is_infinite() || second.is_infinite() {
        f64::INFINITY
    } else {
        first * second
    }
}

/// Per-cube quantity of a class for an analytic weight on the line.
struct Prepared {
    kind: PreparedKind,
}

enum PreparedKind {
    Twisted { wa: PowWeight, sigma: PowWeight, p: f64 },
    Bump { wa: PowWeight, dual: SegmentWeight1D, support: SegmentWeight1D, p: f64, phi: YoungFn },
    Frac { wa: PowWeight, dual: PowWeight, q: f64, pp: f64 },
    FracBump { wa: PowWeight, dual: SegmentWeight1D, support: SegmentWeight1D, q: f64, phi: YoungFn },
    Rh { ws: PowWeight, w1: PowWeight, s: f64 },
}

impl Prepared {
    fn new(w: &SegmentWeight1D, spec: &ClassSpec) -> Result<Self> {
        spec.validate()?;
        let lebesgue = Measure::Lebesgue;
        let composed = |a: &SquareMatrix| compose_matrix(w, a);
        let kind = match spec {
            ClassSpec::Ap { p, measure } => PreparedKind::Twisted {
                wa: PowWeight::new(w, 1.0, *measure)?,
                sigma: PowWeight::new(w, -1.0 / (p - 1.0), *measure)?,
                p: *p,
            },
            ClassSpec::Aap { p, a, measure } => PreparedKind::Twisted {
                wa: PowWeight::new(&composed(a)?, 1.0, *measure)?,
                sigma: PowWeight::new(w, -1.0 / (p - 1.0), *measure)?,
                p: *p,
            },
            ClassSpec::Bump { p, a, phi } => PreparedKind::Bump {
                wa: PowWeight::new(&composed(a)?, 1.0, lebesgue)?,
                dual: w.pow(-1.0 / p)?,
                support: w.clone(),
                p: *p,
                phi: phi.clone(),
            },
            ClassSpec::Frac { p, q, a } => {
                let pp = p / (p - 1.0);
                PreparedKind::Frac {
                    wa: PowWeight::new(&composed(a)?, *q, lebesgue)?,
                    dual: PowWeight::new(w, -pp, lebesgue)?,
                    q: *q,
                    pp,
                }
            }
            ClassSpec::FracBump { q, a, phi, .. } => PreparedKind::FracBump {
                wa: PowWeight::new(&composed(a)?, *q, lebesgue)?,
                dual: w.pow(-1.0)?,
                support: w.clone(),
                q: *q,
                phi: phi.clone(),
            },
            ClassSpec::Rh { s } => PreparedKind::Rh {
                ws: PowWeight::new(w, *s, lebesgue)?,
                w1: PowWeight::new(w, 1.0, lebesgue)?,
                s: *s,
            },
            ClassSpec::Aa1 { .. } => {
                return Err(Error::Unsupported("A_{A,1} is evaluated on a grid".into()));
            }
        };
        Ok(Prepared { kind })
    }

    fn quantity(&self, cube: &Cube) -> f64 {
        let (a, b) = (cube.lo(), cube.hi());
        match &self.kind {
            PreparedKind::Twisted { wa, sigma, p } => {
                let s = sigma.avg(a, b);
                product(wa.avg(a, b), s.powf(p - 1.0))
            }
            PreparedKind::Bump { wa, dual, support, p, phi } => {
                let lux = if support.covers(a, b) {
                    luxemburg_norm_analytic(dual, cube, phi).unwrap_or(f64::INFINITY)
                } else {
                    f64::INFINITY
                };
                product(wa.avg(a, b).powf(1.0 / p), lux)
            }
            PreparedKind::Frac { wa, dual, q, pp } => {
                product(wa.avg(a, b).powf(1.0 / q), dual.avg(a, b).powf(1.0 / pp))
            }
            PreparedKind::FracBump { wa, dual, support, q, phi } => {
                let lux = if support.covers(a, b) {
                    luxemburg_norm_analytic(dual, cube, phi).unwrap_or(f64::INFINITY)
                } else {
                    f64::INFINITY
                };
                product(wa.avg(a, b).powf(1.0 / q), lux)
            }
            PreparedKind::Rh { ws, w1, s } => {
                let m = w1.avg(a, b);
                if m == 0.0 {
                    1.0
                } else {
                    ws.avg(a, b).powf(1.0 / s) / m
                }
            }
        }
    }
}

/// `(mu-avg_Q w)(mu-avg_Q w^(-1/(p-1)))^(p-1)` with exact masses.
pub fn ap_product(w: &SegmentWeight1D, q: &Cube, p: f64, measure: Measure) -> Result<f64> {
    let prep = Prepared::new(w, &ClassSpec::Ap { p, measure })?;
    Ok(prep.quantity(q))
}

/// `(mu-avg_Q w_A)(mu-avg_Q w^(-1/(p-1)))^(p-1)` with `w_A(x) = w(Ax)`.
pub fn aap_product(w: &SegmentWeight1D, a: &SquareMatrix, q: &Cube, p: f64, measure: Measure) -> Result<f64> {
    let prep = Prepared::new(w, &ClassSpec::Aap { p, a: *a, measure })?;
    Ok(prep.quantity(q))
}

/// Per-cube quantity of any analytic class.
pub fn cube_quantity(w: &SegmentWeight1D, spec: &ClassSpec, q: &Cube) -> Result<f64> {
    Ok(Prepared::new(w, spec)?.quantity(q))
}

fn reduce_max(cubes: &[Cube], values: &[f64]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.iter().enumerate() {
        let v = if v.is_nan() { f64::INFINITY } else { *v };
        best = match best {
            None => Some((i, v)),
            Some((j, b)) if v > b || (v == b && cubes[i].corner_lt(&cubes[j])) => Some((i, v)),
            keep => keep,
        };
    }
    best
}

fn finish(
    spec: &ClassSpec,
    family: &CubeFamily,
    cubes: &[Cube],
    values: Vec<f64>,
    skipped: usize,
    with_trace: bool,
) -> ConstantReport {
    let best = reduce_max(cubes, &values);
    let witness = best
        .filter(|(_, v)| v.is_infinite())
        .map(|(i, _)| format!("infinite quantity on cube {:?}", CubeRecord::from(&cubes[i])));
    ConstantReport {
        class: spec.name().to_string(),
        value: best.map_or(0.0, |(_, v)| v),
        unbounded: best.is_some_and(|(_, v)| v.is_infinite()),
        argmax: best.map(|(i, _)| CubeRecord::from(&cubes[i])),
        witness,
        family: family.to_spec(),
        cubes_evaluated: values.len(),
        cubes_skipped: skipped,
        trace: with_trace.then(|| {
            cubes
                .iter()
                .zip(&values)
                .map(|(c, v)| TraceEntry { cube: c.into(), value: *v })
                .collect()
        }),
    }
}

fn infinite_report(spec: &ClassSpec, family: &CubeFamily, err: &Error) -> ConstantReport {
    ConstantReport {
        class: spec.name().to_string(),
        value: f64::INFINITY,
        unbounded: true,
        argmax: None,
        witness: Some(err.to_string()),
        family: family.to_spec(),
        cubes_evaluated: 0,
        cubes_skipped: 0,
        trace: None,
    }
}

/// Class constant of an analytic weight over the family.
pub fn constant(w: &SegmentWeight1D, spec: &ClassSpec, family: &CubeFamily) -> Result<ConstantReport> {
    constant_traced(w, spec, family, false)
}

pub fn constant_traced(
    w: &SegmentWeight1D,
    spec: &ClassSpec,
    family: &CubeFamily,
    with_trace: bool,
) -> Result<ConstantReport> {
    spec.validate()?;
    if family.dim != 1 {
        return Err(Error::Unsupported("analytic weights use one-dimensional families".into()));
    }
    if let ClassSpec::Aa1 { a } = spec {
        let geom = aa1_grid(family)?;
        let wg = sample_to_grid(w, geom)?;
        let wag = sample_to_grid(&compose_matrix(w, a)?, geom)?;
        return aa1_from_grids(&wg, &wag, family, spec);
    }
    let prep = match Prepared::new(w, spec) {
        Ok(p) => p,
        Err(e @ Error::NonIntegrable { .. }) => return Ok(infinite_report(spec, family, &e)),
        Err(e) => return Err(e),
    };
    let cubes = family.cubes();
    let values: Vec<f64> = cubes.par_iter().map(|c| prep.quantity(c)).collect();
    Ok(finish(spec, family, &cubes, values, 0, with_trace))
}

/// Constant over the union of the family and extra cubes.
pub fn constant_with_extra(
    w: &SegmentWeight1D,
    spec: &ClassSpec,
    family: &CubeFamily,
    extra: &[Cube],
) -> Result<ConstantReport> {
    let prep = match Prepared::new(w, spec) {
        Ok(p) => p,
        Err(e @ Error::NonIntegrable { .. }) => return Ok(infinite_report(spec, family, &e)),
        Err(e) => return Err(e),
    };
    let mut cubes = family.cubes();
    cubes.extend_from_slice(extra);
    let values: Vec<f64> = cubes.par_iter().map(|c| prep.quantity(c)).collect();
    Ok(finish(spec, family, &cubes, values, 0, false))
}

/// Grid used for `A_{A,1}` and pointwise checks of analytic weights.
pub fn aa1_grid(family: &CubeFamily) -> Result<GridGeometry> {
    let cells = 1usize << family.j_max.max(8);
    GridGeometry::new(family.dim, family.lo, family.side, cells)
}

fn aa1_from_grids(
    w: &GridFunction,
    wa: &GridFunction,
    family: &CubeFamily,
    spec: &ClassSpec,
) -> Result<ConstantReport> {
    let m = hl_maximal(wa, family)?;
    let geom = *w.geom();
    let cubes: Vec<Cube> = (0..geom.len())
        .map(|i| geom.cube_bounds(&CellCube::new(geom.unflat(i), 1)))
        .collect();
    let mut skipped = 0;
    let values: Vec<f64> = (0..geom.len())
        .map(|i| {
            if !wa.in_domain()[i] {
                skipped += 1;
                return 0.0;
            }
            let (mv, wv) = (m.value(i), w.value(i));
            if mv == 0.0 {
                0.0
            } else if wv == 0.0 {
                f64::INFINITY
            } else {
                mv / wv
            }
        })
        .collect();
    Ok(finish(spec, family, &cubes, values, skipped, false))
}

/// Class constant of a grid weight (`Ap`, `Aap`, `Aa1`, `Rh`) over the grid
/// realization of the family. Cubes meeting cells whose image under `A`
/// leaves the grid are skipped and counted.
pub fn constant_grid(w: &GridFunction, spec: &ClassSpec, family: &CubeFamily) -> Result<ConstantReport> {
    spec.validate()?;
    w.validate_weight()?;
    let geom = *w.geom();
    let wa = match spec.matrix() {
        Some(a) => matrix_compose(w, &a.inverse())?,
        None => w.clone(),
    };
    if let ClassSpec::Aa1 { .. } = spec {
        return aa1_from_grids(w, &wa, family, spec);
    }
    let outside = GridFunction::new(
        geom,
        wa.in_domain().iter().map(|d| if *d { 0.0 } else { 1.0 }).collect(),
    )?;
    let needs_dual = !matches!(spec, ClassSpec::Rh { .. });
    if needs_dual && w.values().iter().any(|v| *v == 0.0) {
        return Err(Error::Domain("grid weight vanishes on a cell; dual averages are infinite".into()));
    }
    let lattices = family.grid_lattices(&geom)?;
    let cells: Vec<CellCube> = lattices.cubes(geom.dim).collect();
    let per_cube: Box<dyn Fn(&CellCube) -> f64 + Sync> = match spec {
        ClassSpec::Ap { p, measure } | ClassSpec::Aap { p, measure, .. } => {
            if *measure != Measure::Lebesgue {
                return Err(Error::Unsupported("grid weights use Lebesgue measure".into()));
            }
            let p = *p;
            let sigma = w.map(|v| v.powf(-1.0 / (p - 1.0)))?;
            Box::new(move |c| wa.cube_average(c) * sigma.cube_average(c).powf(p - 1.0))
        }
        ClassSpec::Rh { s } => {
            let s = *s;
            let ws = w.map(|v| v.powf(s))?;
            let w1 = w.clone();
            Box::new(move |c| {
                let m = w1.cube_average(c);
                if m == 0.0 {
                    1.0
                } else {
                    ws.cube_average(c).powf(1.0 / s) / m
                }
            })
        }
        other => {
            return Err(Error::Unsupported(format!("class {} on grid weights", other.name())));
        }
    };
    let kept: Vec<CellCube> = cells
        .into_iter()
        .filter(|c| outside.cube_value_sum(c) == 0.0)
        .collect();
    let skipped = lattices.cube_count(geom.dim) - kept.len();
    let values: Vec<f64> = kept.par_iter().map(|c| per_cube(c)).collect();
    let cubes: Vec<Cube> = kept.iter().map(|c| geom.cube_bounds(c)).collect();
    Ok(finish(spec, family, &cubes, values, skipped, false))
}

/// Weight given analytically on the line or sampled on a grid.
#[derive(Clone, Copy, Debug)]
pub enum WeightInput<'a> {
    Analytic(&'a SegmentWeight1D),
    Grid(&'a GridFunction),
}

impl WeightInput<'_> {
    fn constant(&self, spec: &ClassSpec, family: &CubeFamily) -> Result<ConstantReport> {
        match self {
            WeightInput::Analytic(w) => constant(w, spec, family),
            WeightInput::Grid(g) => constant_grid(g, spec, family),
        }
    }

    /// Cell values of `w` and of `x -> w(Ax)` on a common grid, with the domain mask of the latter.
    fn cell_pair(&self, a: &SquareMatrix, family: &CubeFamily) -> Result<(GridFunction, GridFunction)> {
        match self {
            WeightInput::Analytic(w) => {
                let geom = aa1_grid(family)?;
                let wg = sample_to_grid(w, geom)?;
                let wag = sample_to_grid(&compose_matrix(w, a)?, geom)?;
                Ok((wg, wag))
            }
            WeightInput::Grid(g) => Ok(((*g).clone(), matrix_compose(g, &a.inverse())?)),
        }
    }
}

/// `max over cells of w(Ax) / w(x)` on cells whose image stays in the grid.
pub fn pointwise_ratio(input: WeightInput<'_>, a: &SquareMatrix, family: &CubeFamily) -> Result<f64> {
    let (w, wa) = input.cell_pair(a, family)?;
    let mut best: f64 = 0.0;
    for i in 0..w.geom().len() {
        if !wa.in_domain()[i] {
            continue;
        }
        let (num, den) = (wa.value(i), w.value(i));
        let r = if num == 0.0 {
            0.0
        } else if den == 0.0 {
            f64::INFINITY
        } else {
            num / den
        };
        best = best.max(r);
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FiniteOrderReport {
    pub applicable: bool,
    pub order: Option<u32>,
    pub aap: f64,
    pub ap: f64,
    pub ratio_bound: f64,
    /// `aap` finite implies `ap` and `ratio_bound` finite.
    pub consistent: bool,
    pub note: String,
}

/// For `A^k = I`: `[w]_{A_{A,p}}`, `[w]_{A_p}` and `max w(Ax)/w(x)` on the family.
pub fn finite_order_reduction(
    input: WeightInput<'_>,
    a: &SquareMatrix,
    p: f64,
    family: &CubeFamily,
) -> Result<FiniteOrderReport> {
    let order = a.order();
    let Some(k) = order else {
        return Ok(FiniteOrderReport {
            applicable: false,
            order: None,
            aap: f64::NAN,
            ap: f64::NAN,
            ratio_bound: f64::NAN,
            consistent: true,
            note: format!("no k <= {} with A^k = I", crate::funcspace::ORDER_SEARCH_BOUND),
        });
    };
    let aap = input.constant(&ClassSpec::aap(p, *a), family)?.value;
    let ap = input.constant(&ClassSpec::ap(p), family)?.value;
    let ratio_bound = pointwise_ratio(input, a, family)?;
    let consistent = !aap.is_finite() || (ap.is_finite() && ratio_bound.is_finite());
    Ok(FiniteOrderReport {
        applicable: true,
        order: Some(k),
        aap,
        ap,
        ratio_bound,
        consistent,
        note: format!("A has order {k}"),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubsetReport {
    pub constant: f64,
    /// `max |S|/|Q| - [w]^(1/p) (w(S)/w_A(Q))^(1/p)`.
    pub max_defect: f64,
    /// Same with the product on `Q` in place of `[w]`.
    pub max_local_defect: f64,
    pub pairs: usize,
}

/// Checks `|S|/|Q| <= [w]^(1/p) (w(S)/w_A(Q))^(1/p)` for `S ⊆ Q`, with `[w]`
/// taken over the family together with the `Q`s.
pub fn subset_lemma_check(
    w: &SegmentWeight1D,
    a: &SquareMatrix,
    p: f64,
    pairs: &[(Cube, Cube)],
    family: &CubeFamily,
) -> Result<SubsetReport> {
    let spec = ClassSpec::aap(p, *a);
    let qs: Vec<Cube> = pairs.iter().map(|(_, q)| *q).collect();
    let constant = constant_with_extra(w, &spec, family, &qs)?.value;
    let wa = compose_matrix(w, a)?;
    let prep = Prepared::new(w, &spec)?;
    let mut max_defect = f64::NEG_INFINITY;
    let mut max_local = f64::NEG_INFINITY;
    for (s, q) in pairs {
        if s.lo() < q.lo() || s.hi() > q.hi() {
            return Err(Error::InvalidParameter("each S must lie inside its Q".into()));
        }
        let ratio = s.side / q.side;
        let mass = w.mass_between(s.lo(), s.hi()) / wa.mass_between(q.lo(), q.hi());
        let local = prep.quantity(q);
        max_defect = max_defect.max(ratio - (constant * mass).powf(1.0 / p));
        max_local = max_local.max(ratio - (local * mass).powf(1.0 / p));
    }
    Ok(SubsetReport {
        constant,
        max_defect,
        max_local_defect: max_local,
        pairs: pairs.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RhInclusionReport {
    pub applicable: bool,
    pub note: String,
    pub s: f64,
    /// `[w^(1-p')]_{RH_s}`.
    pub rh_constant: f64,
    pub aap: f64,
    pub aap_eps: f64,
    /// `C` in `[w]_{A_{A,p-eps}} <= C [w^(1-p')]_{RH_s}^(p-1) [w]_{A_{A,p}}`.
    pub chain_constant: f64,
    /// Largest `P_{p-eps}(Q) / (C R_Q^(p-1) P_p(Q)) - 1` over the cubes.
    pub max_cube_excess: f64,
    pub holds: bool,
    pub cubes: usize,
}

/// Theorem-style inclusion: on each cube `P_{p-eps}(Q) = R_Q^(p-1) P_p(Q)`
/// where `R_Q` is the reverse Hölder ratio of `w^(1-p')` at exponent
/// `s = (p-1)/(p-eps-1)`, hence the class inequality with `C = 1`.
pub fn rh_inclusion_check(
    w: &SegmentWeight1D,
    a: &SquareMatrix,
    p: f64,
    eps: f64,
    family: &CubeFamily,
    measure: Measure,
) -> Result<RhInclusionReport> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("eps must lie in (0, 1), got {eps}")));
    }
    if !(p > 1.0 + eps) {
        return Err(Error::InvalidParameter(format!("need p > 1 + eps, got p = {p}, eps = {eps}")));
    }
    let s = (p - 1.0) / (p - eps - 1.0);
    if measure != Measure::Lebesgue {
        return Ok(RhInclusionReport {
            applicable: false,
            note: "reverse Hölder constants are computed for Lebesgue measure only".into(),
            s,
            rh_constant: f64::NAN,
            aap: f64::NAN,
            aap_eps: f64::NAN,
            chain_constant: 1.0,
            max_cube_excess: f64::NAN,
            holds: true,
            cubes: 0,
        });
    }
    let sigma = w.pow(-1.0 / (p - 1.0))?;
    let rh = Prepared::new(&sigma, &ClassSpec::Rh { s })?;
    let pp = Prepared::new(w, &ClassSpec::aap(p, *a))?;
    let pe = Prepared::new(w, &ClassSpec::aap(p - eps, *a))?;
    let cubes = family.cubes();
    let rows: Vec<(f64, f64, f64)> = cubes
        .par_iter()
        .map(|c| (rh.quantity(c), pp.quantity(c), pe.quantity(c)))
        .collect();
    let mut rh_constant: f64 = 0.0;
    let mut aap: f64 = 0.0;
    let mut aap_eps: f64 = 0.0;
    let mut excess = f64::NEG_INFINITY;
    for &(r, p_p, p_e) in &rows {
        rh_constant = rh_constant.max(r);
        aap = aap.max(p_p);
        aap_eps = aap_eps.max(p_e);
        let bound = r.powf(p - 1.0) * p_p;
        if bound.is_finite() && bound > 0.0 {
            excess = excess.max(p_e / bound - 1.0);
        } else if p_e.is_finite() {
            excess = excess.max(0.0);
        } else {
            excess = f64::INFINITY;
        }
    }
    let class_bound = rh_constant.powf(p - 1.0) * aap;
    let holds = excess <= 1e-9 && aap_eps <= class_bound * (1.0 + 1e-9);
    Ok(RhInclusionReport {
        applicable: true,
        note: "per-cube identity with C = 1".into(),
        s,
        rh_constant,
        aap,
        aap_eps,
        chain_constant: 1.0,
        max_cube_excess: excess,
        holds,
        cubes: cubes.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RhProbeRow {
    pub s: f64,
    pub rh_constant: f64,
}

/// Reverse Hölder constants of `w` for several exponents; no conclusion is drawn.
pub fn rh_probe(w: &SegmentWeight1D, exponents: &[f64], family: &CubeFamily) -> Result<Vec<RhProbeRow>> {
    exponents
        .iter()
        .map(|s| {
            let r = constant(w, &ClassSpec::Rh { s: *s }, family)?;
            Ok(RhProbeRow { s: *s, rh_constant: r.value })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::{Segment, Tail};

    fn sqrt_weight() -> SegmentWeight1D {
        SegmentWeight1D::power_weight(-8.0, 8.0, 0.0, 0.5).unwrap()
    }

    #[test]
    fn constant_weight_has_unit_constants() {
        let w = SegmentWeight1D::constant(-4.0, 4.0, 3.0).unwrap();
        let fam = CubeFamily::on_interval(-2.0, 2.0, 0, 4, 2).unwrap();
        let half = SquareMatrix::scalar(0.5).unwrap();
        for spec in [
            ClassSpec::ap(2.0),
            ClassSpec::aap(1.5, half),
            ClassSpec::Bump { p: 2.0, a: half, phi: YoungFn::power(4.0) },
            ClassSpec::Frac { p: 2.0, q: 4.0, a: half },
            ClassSpec::Rh { s: 2.0 },
        ] {
            let r = constant(&w, &spec, &fam).unwrap();
            assert!((r.value - 1.0).abs() < 1e-12, "{}: {}", spec.name(), r.value);
        }
    }

    #[test]
    fn sqrt_weight_ap_product_on_unit_interval() {
        let w = sqrt_weight();
        let q = Cube::interval(0.0, 1.0).unwrap();
        let v = ap_product(&w, &q, 2.0, Measure::Lebesgue).unwrap();
        assert!((v - 4.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn exp_weight_under_exp_measure() {
        let w = SegmentWeight1D::new(vec![Segment::exponential(0.0, 60.0, 1.0, 1.0).unwrap()], Tail::Zero).unwrap();
        for h in [0.5f64, 2.0, 10.0] {
            let q = Cube::interval(0.0, h).unwrap();
            let v = ap_product(&w, &q, 2.0, Measure::ExpAbs).unwrap();
            let exact = 0.5 * (-(-2.0 * h).exp_m1()) * (-(-h).exp_m1()).powi(-2) * h;
            assert!((v - exact).abs() < 1e-12 * exact, "h = {h}");
        }
    }

    #[test]
    fn duality_of_ap_constants() {
        let w = sqrt_weight();
        let fam = CubeFamily::on_interval(-4.0, 4.0, 0, 6, 2).unwrap();
        let p: f64 = 3.0;
        let pp = p / (p - 1.0);
        let wp = constant(&w, &ClassSpec::ap(p), &fam).unwrap().value;
        let sigma = w.pow(-1.0 / (p - 1.0)).unwrap();
        let sp = constant(&sigma, &ClassSpec::ap(pp), &fam).unwrap().value;
        assert!((sp - wp.powf(pp - 1.0)).abs() < 1e-8 * sp);
    }

    #[test]
    fn non_integrable_dual_is_infinite_with_witness() {
        let w = SegmentWeight1D::power_weight(-1.0, 1.0, 0.0, 1.5).unwrap();
        let fam = CubeFamily::on_interval(-1.0, 1.0, 0, 3, 1).unwrap();
        let r = constant(&w, &ClassSpec::ap(2.0), &fam).unwrap();
        assert!(r.value.is_infinite());
        assert!(r.witness.unwrap().contains("segment 0"));
    }

    #[test]
    fn argmax_ties_break_to_smallest_corner() {
        let w = SegmentWeight1D::constant(0.0, 4.0, 1.0).unwrap();
        let fam = CubeFamily::on_interval(0.0, 4.0, 1, 2, 1).unwrap();
        let r = constant(&w, &ClassSpec::ap(2.0), &fam).unwrap();
        assert_eq!(r.argmax.unwrap().corner, vec![0.0]);
    }

    #[test]
    fn aa1_of_constant_weight_is_one() {
        let w = SegmentWeight1D::constant(-4.0, 4.0, 2.0).unwrap();
        let fam = CubeFamily::on_interval(-2.0, 2.0, 0, 4, 2).unwrap();
        let r = constant(&w, &ClassSpec::Aa1 { a: SquareMatrix::scalar(2.0).unwrap() }, &fam).unwrap();
        assert!((r.value - 1.0).abs() < 1e-14);
    }

    #[test]
    fn finite_order_even_weight() {
        let w = SegmentWeight1D::power_weight(-4.0, 4.0, 0.0, 0.3).unwrap();
        let fam = CubeFamily::on_interval(-4.0, 4.0, 0, 6, 2).unwrap();
        let rep = finite_order_reduction(WeightInput::Analytic(&w), &SquareMatrix::scalar(-1.0).unwrap(), 2.0, &fam)
            .unwrap();
        assert!(rep.applicable && rep.consistent);
        assert!(rep.aap.is_finite() && rep.ap.is_finite());
        assert!((rep.ratio_bound - 1.0).abs() < 1e-12);
        let none = finite_order_reduction(WeightInput::Analytic(&w), &SquareMatrix::scalar(2.0).unwrap(), 2.0, &fam)
            .unwrap();
        assert!(!none.applicable);
    }

    #[test]
    fn subset_lemma_on_random_pairs() {
        use rand::{RngExt, SeedableRng};
        let w = SegmentWeight1D::power_weight(-16.0, 16.0, 0.0, 0.5).unwrap();
        let a = SquareMatrix::scalar(2.0).unwrap();
        let fam = CubeFamily::on_interval(-8.0, 8.0, 0, 5, 2).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let pairs: Vec<(Cube, Cube)> = (0..100)
            .map(|_| {
                let lo: f64 = rng.random_range(-8.0..6.0);
                let len = rng.random_range(0.01..(8.0 - lo).min(2.0));
                let s0 = rng.random_range(lo..lo + len);
                let s1 = rng.random_range(s0..lo + len);
                let s1 = if s1 > s0 { s1 } else { lo + len };
                (Cube::interval(s0, s1).unwrap(), Cube::interval(lo, lo + len).unwrap())
            })
            .collect();
        let rep = subset_lemma_check(&w, &a, 2.0, &pairs, &fam).unwrap();
        assert!(rep.max_defect <= 1e-9, "{rep:?}");
        assert!(rep.max_local_defect <= 1e-9);
    }

    #[test]
    fn rh_inclusion_on_sqrt_weight() {
        let w = SegmentWeight1D::power_weight(-16.0, 16.0, 0.0, 0.5).unwrap();
        let fam = CubeFamily::on_interval(-8.0, 8.0, 0, 6, 2).unwrap();
        let rep = rh_inclusion_check(&w, &SquareMatrix::scalar(2.0).unwrap(), 2.0, 0.25, &fam, Measure::Lebesgue)
            .unwrap();
        assert!(rep.cubes >= 200);
        assert!(rep.holds, "{rep:?}");
        assert!(rep.max_cube_excess.abs() < 1e-9);
        assert!(rh_inclusion_check(&w, &SquareMatrix::scalar(2.0).unwrap(), 1.2, 0.25, &fam, Measure::Lebesgue).is_err());
        let na = rh_inclusion_check(&w, &SquareMatrix::scalar(2.0).unwrap(), 2.0, 0.25, &fam, Measure::ExpAbs).unwrap();
        assert!(!na.applicable);
    }

    #[test]
    fn grid_and_analytic_constants_agree_on_aligned_family() {
        let w = SegmentWeight1D::power_weight(-4.0, 4.0, 0.0, 0.5).unwrap();
        let geom = GridGeometry::line(-4.0, 4.0, 256).unwrap();
        let g = sample_to_grid(&w, geom).unwrap();
        let fam = CubeFamily::for_grid(&geom, 0, 5, 2).unwrap();
        let a = constant(&w, &ClassSpec::ap(2.0), &fam).unwrap().value;
        let b = constant_grid(&g, &ClassSpec::ap(2.0), &fam).unwrap().value;
        // cell averaging can only lower the dual average (Jensen), single cells give 1
        assert!(b <= a.max(1.0) * (1.0 + 1e-12), "{b} > {a}");
        assert!(b >= 0.9 * a);
    }
}
