//! Maximal operators on grid functions: Hardy-Littlewood, dyadic, fractional
//! and Orlicz variants, evaluated at cell centers over a finite cube family,
//! plus the pull-back by a matrix.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::funcspace::{
    CellCube, CubeFamily, GridFunction, GridGeometry, GridLattices, Lattice, Measure, SquareMatrix,
};
use crate::young::{luxemburg_norm_grid, YoungFn};

#[derive(Clone, Debug, PartialEq)]
pub enum Operator {
    Hl,
    Dyadic,
    Fractional { alpha: f64 },
    Orlicz { phi: YoungFn, alpha: f64 },
}

/// A maximal operator, optionally composed with `x -> A^{-1} x`.
#[derive(Clone, Debug, PartialEq)]
pub struct MaximalRequest {
    pub operator: Operator,
    pub matrix: Option<SquareMatrix>,
    pub family: CubeFamily,
    pub measure: Measure,
}

impl MaximalRequest {
    pub fn new(operator: Operator, family: CubeFamily) -> Self {
        MaximalRequest {
            operator,
            matrix: None,
            family,
            measure: Measure::Lebesgue,
        }
    }

    pub fn with_matrix(mut self, a: SquareMatrix) -> Self {
        self.matrix = Some(a);
        self
    }

    pub fn with_measure(mut self, measure: Measure) -> Self {
        self.measure = measure;
        self
    }

    /// `M f`, or `M f(A^{-1} x)` when a matrix is set.
    pub fn evaluate(&self, f: &GridFunction) -> Result<GridFunction> {
        let mf = match (&self.operator, self.measure) {
            (Operator::Hl, Measure::Lebesgue) => hl_maximal(f, &self.family)?,
            (Operator::Hl, m) => fractional_maximal_measure(f, 0.0, m, &self.family)?,
            (Operator::Fractional { alpha }, Measure::Lebesgue) => {
                fractional_maximal(f, *alpha, &self.family)?
            }
            (Operator::Fractional { alpha }, m) => fractional_maximal_measure(f, *alpha, m, &self.family)?,
            (Operator::Dyadic, Measure::Lebesgue) => dyadic_maximal(f, None)?,
            (Operator::Orlicz { phi, alpha }, Measure::Lebesgue) => {
                orlicz_maximal(f, phi, *alpha, &self.family)?
            }
            (op, m) => {
                return Err(Error::Unsupported(format!("{op:?} under the measure {m:?}")));
            }
        };
        match &self.matrix {
            Some(a) => matrix_compose(&mf, a),
            None => Ok(mf),
        }
    }
}

fn check_input(f: &GridFunction) -> Result<()> {
    match f.values().iter().position(|v| !(*v >= 0.0)) {
        Some(i) => Err(Error::Domain(format!(
            "maximal operators take |f|; cell {i} holds {}",
            f.value(i)
        ))),
        None => Ok(()),
    }
}

/// Per-cell maximum of `value(cube)` over cubes of the lattices containing the cell.
fn sweep<F>(geom: &GridGeometry, lattices: &GridLattices, value: F) -> Result<Vec<f64>>
where
    F: Fn(&CellCube) -> f64 + Sync,
{
    let dim = geom.dim;
    let n = geom.cells;
    for i in 0..geom.len() {
        if !lattices.covers(dim, geom.unflat(i)) {
            return Err(Error::Coverage { cell: i });
        }
    }
    let mut out = vec![f64::NEG_INFINITY; geom.len()];
    for lat in &lattices.lattices {
        let vals: Vec<f64> = (0..lat.cube_count(dim))
            .into_par_iter()
            .map(|i| value(&lat.cube(dim, i, lattices.base)))
            .collect();
        scatter_max(&mut out, n, dim, lat, lattices.base, &vals);
    }
    Ok(out)
}

fn scatter_max(out: &mut [f64], n: usize, dim: usize, lat: &Lattice, base: [usize; 2], vals: &[f64]) {
    for (i, v) in vals.iter().enumerate() {
        let c = lat.cube(dim, i, base);
        if dim == 1 {
            for slot in &mut out[c.start[0]..c.start[0] + c.len] {
                if *v > *slot {
                    *slot = *v;
                }
            }
        } else {
            for y in c.start[1]..c.start[1] + c.len {
                let row = &mut out[y * n + c.start[0]..y * n + c.start[0] + c.len];
                for slot in row {
                    if *v > *slot {
                        *slot = *v;
                    }
                }
            }
        }
    }
}

/// `sup_{Q ∋ x} avg_Q f` over the family (plus single cells) at every cell center.
pub fn hl_maximal(f: &GridFunction, family: &CubeFamily) -> Result<GridFunction> {
    check_input(f)?;
    let lattices = family.grid_lattices(f.geom())?;
    let out = sweep(f.geom(), &lattices, |c| f.cube_average(c))?;
    GridFunction::with_domain(*f.geom(), out, f.in_domain().to_vec())
}

fn check_alpha(alpha: f64, dim: usize) -> Result<()> {
    if !(alpha >= 0.0 && alpha < dim as f64) {
        return Err(Error::InvalidParameter(format!(
            "fractional order must satisfy 0 <= alpha < {dim}, got {alpha}"
        )));
    }
    Ok(())
}

/// `sup_{Q ∋ x} |Q|^(alpha/n - 1) int_Q f`. With `alpha = 0` the factor is
/// exactly `1.0`, so the output matches `hl_maximal` bit for bit.
pub fn fractional_maximal(f: &GridFunction, alpha: f64, family: &CubeFamily) -> Result<GridFunction> {
    check_input(f)?;
    let dim = f.dim();
    check_alpha(alpha, dim)?;
    let geom = *f.geom();
    let lattices = family.grid_lattices(&geom)?;
    let expo = alpha / dim as f64;
    let h = geom.h();
    let out = sweep(&geom, &lattices, |c| {
        let vol = (c.len as f64 * h).powi(dim as i32);
        f.cube_average(c) * vol.powf(expo)
    })?;
    GridFunction::with_domain(geom, out, f.in_domain().to_vec())
}

/// Fractional maximal function with respect to `mu` on the line:
/// `sup_{Q ∋ x} mu(Q)^(alpha - 1) int_Q f dmu`, `f` constant on cells.
pub fn fractional_maximal_measure(
    f: &GridFunction,
    alpha: f64,
    measure: Measure,
    family: &CubeFamily,
) -> Result<GridFunction> {
    check_input(f)?;
    let geom = *f.geom();
    if geom.dim != 1 && measure != Measure::Lebesgue {
        return Err(Error::Unsupported("non-Lebesgue measures live on the line".into()));
    }
    check_alpha(alpha, geom.dim)?;
    let masses: Vec<f64> = (0..geom.cells)
        .map(|i| {
            let a = geom.edge(0, i);
            let b = if i + 1 == geom.cells { geom.hi(0) } else { geom.edge(0, i + 1) };
            measure.mass(a, b)
        })
        .collect();
    let fm = GridFunction::new(geom, f.values().iter().zip(&masses).map(|(v, m)| v * m).collect())?;
    let mu = GridFunction::new(geom, masses)?;
    let lattices = family.grid_lattices(&geom)?;
    let out = sweep(&geom, &lattices, |c| {
        let m = mu.cube_value_sum(c);
        fm.cube_value_sum(c) / m * m.powf(alpha)
    })?;
    GridFunction::with_domain(geom, out, f.in_domain().to_vec())
}

/// Maximum over dyadic ancestors inside the grid box. `levels` bounds the
/// ancestor depth `j` (cubes of `N / 2^j` cells); the default is all levels.
pub fn dyadic_maximal(f: &GridFunction, levels: Option<(u32, u32)>) -> Result<GridFunction> {
    check_input(f)?;
    let geom = *f.geom();
    let n = geom.cells;
    if !n.is_power_of_two() {
        return Err(Error::Config(format!(
            "dyadic maximal needs a power-of-two resolution, got {n}"
        )));
    }
    let depth = n.trailing_zeros();
    let (j_min, j_max) = levels.unwrap_or((0, depth));
    if j_min > j_max || j_max > depth {
        return Err(Error::Config(format!("dyadic levels [{j_min}, {j_max}] exceed depth {depth}")));
    }
    let mut lats: Vec<Lattice> = (j_min..=j_max)
        .map(|j| Lattice {
            len: n >> j,
            origin: 0,
            count: 1 << j,
        })
        .collect();
    if j_max < depth {
        lats.push(Lattice { len: 1, origin: 0, count: n });
    }
    let lattices = GridLattices {
        base: [0, 0],
        cells: n,
        lattices: lats,
    };
    let out = sweep(&geom, &lattices, |c| f.cube_average(c))?;
    GridFunction::with_domain(geom, out, f.in_domain().to_vec())
}

/// `sup_{Q ∋ x} |Q|^(alpha/n) ||f||_{phi,Q}`.
pub fn orlicz_maximal(f: &GridFunction, phi: &YoungFn, alpha: f64, family: &CubeFamily) -> Result<GridFunction> {
    check_input(f)?;
    phi.validate()?;
    let dim = f.dim();
    check_alpha(alpha, dim)?;
    let geom = *f.geom();
    let expo = alpha / dim as f64;
    let h = geom.h();
    let scale = move |c: &CellCube| (c.len as f64 * h).powi(dim as i32).powf(expo);
    let lattices = family.grid_lattices(&geom)?;
    let out = match phi.as_power() {
        Some((coef, r)) if r == 1.0 => sweep(&geom, &lattices, |c| coef * f.cube_average(c) * scale(c))?,
        Some((coef, r)) => {
            let fr = f.map(|v| v.powf(r))?;
            sweep(&geom, &lattices, |c| (coef * fr.cube_average(c)).powf(1.0 / r) * scale(c))?
        }
        None => sweep(&geom, &lattices, |c| luxemburg_norm_grid(f, c, phi) * scale(c))?,
    };
    GridFunction::with_domain(geom, out, f.in_domain().to_vec())
}

/// `x -> input(A^{-1} x)` on the input's own grid.
pub fn matrix_compose(input: &GridFunction, a: &SquareMatrix) -> Result<GridFunction> {
    matrix_compose_to(input, a, input.geom())
}

/// `x -> input(A^{-1} x)` sampled at the cell centers of `out`. Cells whose
/// preimage leaves the input box are flagged out of domain and set to zero.
pub fn matrix_compose_to(input: &GridFunction, a: &SquareMatrix, out: &GridGeometry) -> Result<GridFunction> {
    if a.dim() != input.dim() || out.dim != input.dim() {
        return Err(Error::InvalidParameter("matrix and grid dimensions differ".into()));
    }
    let src = input.geom();
    let (values, domain): (Vec<f64>, Vec<bool>) = (0..out.len())
        .into_par_iter()
        .map(|i| match src.locate(a.apply_inverse(out.center(i))) {
            Some(j) if input.in_domain()[j] => (input.value(j), true),
            _ => (0.0, false),
        })
        .unzip();
    GridFunction::with_domain(*out, values, domain)
}

/// Brute-force maximal function over every grid-aligned cube (test oracle, 1D).
pub fn brute_force_maximal_1d(f: &GridFunction, alpha: f64) -> Vec<f64> {
    let n = f.geom().cells;
    let h = f.geom().h();
    let mut out = vec![0.0f64; n];
    for s in 0..n {
        for l in 1..=(n - s) {
            let c = CellCube::new([s, 0], l);
            let v = f.cube_value_sum_direct(&c) / l as f64 * (l as f64 * h).powf(alpha);
            for slot in &mut out[s..s + l] {
                *slot = slot.max(v);
            }
        }
    }
    out
}
