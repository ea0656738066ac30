use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{gauss_legendre_8, DoubleDouble, NeumaierSum};

use super::segment::SegmentWeight1D;

/// Uniform grid on a cubic box `[lo, lo + side)^dim` with `cells` cells per side.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridGeometry {
    pub dim: usize,
    pub lo: [f64; 2],
    pub side: f64,
    pub cells: usize,
}

impl GridGeometry {
    pub fn new(dim: usize, lo: [f64; 2], side: f64, cells: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::Unsupported(format!("grid dimension {dim}")));
        }
        if !(side > 0.0 && side.is_finite()) || !lo.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter(format!("degenerate grid box (side {side})")));
        }
        if cells < 2 {
            return Err(Error::InvalidParameter(format!(
                "a grid needs at least 2 cells per side, got {cells}"
            )));
        }
        let lo = if dim == 1 { [lo[0], 0.0] } else { lo };
        Ok(GridGeometry { dim, lo, side, cells })
    }

    pub fn line(lo: f64, hi: f64, cells: usize) -> Result<Self> {
        GridGeometry::new(1, [lo, 0.0], hi - lo, cells)
    }

    pub fn square(lo: [f64; 2], side: f64, cells: usize) -> Result<Self> {
        GridGeometry::new(2, lo, side, cells)
    }

    pub fn h(&self) -> f64 {
        self.side / self.cells as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.h().powi(self.dim as i32)
    }

    pub fn len(&self) -> usize {
        self.cells.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn hi(&self, axis: usize) -> f64 {
        self.lo[axis] + self.side
    }

    /// Flat index of the cell with per-axis indices `idx` (row-major, axis 0 fastest).
    pub fn flat(&self, idx: [usize; 2]) -> usize {
        if self.dim == 1 {
            idx[0]
        } else {
            idx[1] * self.cells + idx[0]
        }
    }

    pub fn unflat(&self, i: usize) -> [usize; 2] {
        if self.dim == 1 {
            [i, 0]
        } else {
            [i % self.cells, i / self.cells]
        }
    }

    pub fn center(&self, i: usize) -> [f64; 2] {
        let idx = self.unflat(i);
        let h = self.h();
        let mut c = [0.0; 2];
        for (axis, slot) in c.iter_mut().enumerate().take(self.dim) {
            *slot = self.lo[axis] + (idx[axis] as f64 + 0.5) * h;
        }
        c
    }

    /// Left edge of cell `k` along `axis`.
    pub fn edge(&self, axis: usize, k: usize) -> f64 {
        self.lo[axis] + k as f64 * self.h()
    }

    /// Cell containing `x`, or `None` outside the half-open box.
    pub fn locate(&self, x: [f64; 2]) -> Option<usize> {
        let h = self.h();
        let mut idx = [0usize; 2];
        for axis in 0..self.dim {
            let t = (x[axis] - self.lo[axis]) / h;
            if !(t >= 0.0) || t >= self.cells as f64 {
                return None;
            }
            idx[axis] = (t.floor() as usize).min(self.cells - 1);
        }
        Some(self.flat(idx))
    }

    /// Real-coordinate cube covered by `cube`.
    pub fn cube_bounds(&self, cube: &CellCube) -> super::Cube {
        let h = self.h();
        let mut corner = [0.0; 2];
        for (axis, slot) in corner.iter_mut().enumerate().take(self.dim) {
            *slot = self.lo[axis] + cube.start[axis] as f64 * h;
        }
        super::Cube::new(self.dim, corner, cube.len as f64 * h)
            .expect("cell cubes have positive side")
    }
}

/// Grid-aligned cube: `len` cells per side starting at cell `start`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellCube {
    pub start: [usize; 2],
    pub len: usize,
}

impl CellCube {
    pub fn new(start: [usize; 2], len: usize) -> Self {
        CellCube { start, len }
    }

    pub fn cell_count(&self, dim: usize) -> usize {
        self.len.pow(dim as u32)
    }

    pub fn contains(&self, dim: usize, idx: [usize; 2]) -> bool {
        (0..dim).all(|a| idx[a] >= self.start[a] && idx[a] < self.start[a] + self.len)
    }

    pub fn fits(&self, geom: &GridGeometry) -> bool {
        self.len > 0 && (0..geom.dim).all(|a| self.start[a] + self.len <= geom.cells)
    }

    /// Flat indices of the cells in the cube, in grid order.
    pub fn cells(&self, geom: &GridGeometry) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.cell_count(geom.dim));
        if geom.dim == 1 {
            out.extend(self.start[0]..self.start[0] + self.len);
        } else {
            for y in self.start[1]..self.start[1] + self.len {
                for x in self.start[0]..self.start[0] + self.len {
                    out.push(geom.flat([x, y]));
                }
            }
        }
        out
    }
}

/// Piecewise-constant function on a uniform grid, with double-double prefix sums.
#[derive(Clone, Debug)]
pub struct GridFunction {
    geom: GridGeometry,
    values: Vec<f64>,
    in_domain: Vec<bool>,
    prefix: Vec<DoubleDouble>,
}

impl PartialEq for GridFunction {
    fn eq(&self, other: &Self) -> bool {
        self.geom == other.geom && self.values == other.values && self.in_domain == other.in_domain
    }
}

impl GridFunction {
    pub fn new(geom: GridGeometry, values: Vec<f64>) -> Result<Self> {
        let n = geom.len();
        GridFunction::with_domain(geom, values, vec![true; n])
    }

    pub fn with_domain(geom: GridGeometry, values: Vec<f64>, in_domain: Vec<bool>) -> Result<Self> {
        if values.len() != geom.len() || in_domain.len() != geom.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} cell values, got {}",
                geom.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| v.is_nan()) {
            return Err(Error::InvalidParameter(format!("cell {i} holds NaN")));
        }
        let prefix = build_prefix(&geom, &values);
        Ok(GridFunction {
            geom,
            values,
            in_domain,
            prefix,
        })
    }

    pub fn constant(geom: GridGeometry, c: f64) -> Result<Self> {
        GridFunction::new(geom, vec![c; geom.len()])
    }

    /// Cell values from a closure of the cell center.
    pub fn from_fn<F: Fn([f64; 2]) -> f64>(geom: GridGeometry, f: F) -> Result<Self> {
        let values = (0..geom.len()).map(|i| f(geom.center(i))).collect();
        GridFunction::new(geom, values)
    }

    pub fn geom(&self) -> &GridGeometry {
        &self.geom
    }

    pub fn dim(&self) -> usize {
        self.geom.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn in_domain(&self) -> &[bool] {
        &self.in_domain
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// Checks the weight invariant: finite and nonnegative on every cell.
    pub fn validate_weight(&self) -> Result<()> {
        match self.values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            Some(i) => Err(Error::Domain(format!(
                "cell {i} has value {} (weights must be finite and nonnegative)",
                self.values[i]
            ))),
            None => Ok(()),
        }
    }

    fn p1(&self, i: usize) -> DoubleDouble {
        self.prefix[i]
    }

    fn p2(&self, x: usize, y: usize) -> DoubleDouble {
        self.prefix[y * (self.geom.cells + 1) + x]
    }

    /// Sum of the cell values over `cube`, from the prefix table.
    pub fn cube_value_sum(&self, cube: &CellCube) -> f64 {
        let [x, y] = cube.start;
        let l = cube.len;
        if self.geom.dim == 1 {
            self.p1(x + l).sub(self.p1(x)).to_f64()
        } else {
            self.p2(x + l, y + l)
                .sub(self.p2(x, y + l))
                .sub(self.p2(x + l, y))
                .add(self.p2(x, y))
                .to_f64()
        }
    }

    /// Sum of cell values by a direct loop, as an oracle for the prefix table.
    pub fn cube_value_sum_direct(&self, cube: &CellCube) -> f64 {
        let mut acc = DoubleDouble::ZERO;
        for i in cube.cells(&self.geom) {
            acc = acc.add_f64(self.values[i]);
        }
        acc.to_f64()
    }

    /// Average of `f` over the cube.
    pub fn cube_average(&self, cube: &CellCube) -> f64 {
        self.cube_value_sum(cube) / cube.cell_count(self.geom.dim) as f64
    }

    /// Integral of `f` over the cube.
    pub fn cube_integral(&self, cube: &CellCube) -> f64 {
        self.cube_value_sum(cube) * self.geom.cell_volume()
    }

    pub fn integral(&self) -> f64 {
        let all = CellCube::new([0, 0], self.geom.cells);
        self.cube_integral(&all)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Result<GridFunction> {
        GridFunction::with_domain(
            self.geom,
            self.values.iter().map(|v| f(*v)).collect(),
            self.in_domain.clone(),
        )
    }

    pub fn zip_map<F: Fn(f64, f64) -> f64>(&self, other: &GridFunction, f: F) -> Result<GridFunction> {
        if self.geom != other.geom {
            return Err(Error::InvalidParameter("grid geometries differ".into()));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| f(*a, *b))
            .collect();
        let domain = self
            .in_domain
            .iter()
            .zip(&other.in_domain)
            .map(|(a, b)| *a && *b)
            .collect();
        GridFunction::with_domain(self.geom, values, domain)
    }

    /// `(sum over in-domain cells of |f|^p * weight) * cell volume`.
    pub fn lp_power(&self, p: f64, weight: Option<&GridFunction>) -> f64 {
        let mut acc = NeumaierSum::new();
        for (i, v) in self.values.iter().enumerate() {
            if !self.in_domain[i] {
                continue;
            }
            let w = weight.map_or(1.0, |g| g.values[i]);
            if *v != 0.0 && w != 0.0 {
                acc.add(v.abs().powf(p) * w);
            }
        }
        acc.value() * self.geom.cell_volume()
    }

    pub fn to_spec(&self) -> GridSpec {
        let mut bx = Vec::with_capacity(2 * self.geom.dim);
        bx.extend_from_slice(&self.geom.lo[..self.geom.dim]);
        for axis in 0..self.geom.dim {
            bx.push(self.geom.hi(axis));
        }
        GridSpec {
            dim: self.geom.dim,
            r#box: bx,
            cells: self.geom.cells,
            values: self.values.clone(),
        }
    }

    pub fn from_spec(spec: &GridSpec) -> Result<Self> {
        let geom = geometry_from_box(spec.dim, &spec.r#box, spec.cells)?;
        GridFunction::new(geom, spec.values.clone())
    }
}

fn build_prefix(geom: &GridGeometry, values: &[f64]) -> Vec<DoubleDouble> {
    let n = geom.cells;
    if geom.dim == 1 {
        let mut p = Vec::with_capacity(n + 1);
        p.push(DoubleDouble::ZERO);
        let mut acc = DoubleDouble::ZERO;
        for v in values {
            acc = acc.add_f64(*v);
            p.push(acc);
        }
        p
    } else {
        let w = n + 1;
        let mut p = vec![DoubleDouble::ZERO; w * w];
        for y in 0..n {
            let mut row = DoubleDouble::ZERO;
            for x in 0..n {
                row = row.add_f64(values[y * n + x]);
                p[(y + 1) * w + x + 1] = p[y * w + x + 1].add(row);
            }
        }
        p
    }
}

/// Grid geometry from a `[lo.., hi..]` box; the box must be a cube.
pub fn geometry_from_box(dim: usize, bx: &[f64], cells: usize) -> Result<GridGeometry> {
    if bx.len() != 2 * dim {
        return Err(Error::Parse(format!(
            "box needs {} numbers for dim {dim}, got {}",
            2 * dim,
            bx.len()
        )));
    }
    let side = bx[dim] - bx[0];
    for axis in 1..dim {
        let s = bx[dim + axis] - bx[axis];
        if (s - side).abs() > 1e-12 * side.abs().max(1.0) {
            return Err(Error::Unsupported("grid boxes must be cubes".into()));
        }
    }
    let mut lo = [0.0; 2];
    lo[..dim].copy_from_slice(&bx[..dim]);
    GridGeometry::new(dim, lo, side, cells)
}

/// Grid JSON: `{"dim":1, "box":[lo, hi], "cells":N, "values":[...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    #[serde(rename = "box")]
    pub r#box: Vec<f64>,
    pub cells: usize,
    pub values: Vec<f64>,
}

/// Cell averages of a one-dimensional analytic weight (exact masses divided by cell width).
pub fn sample_to_grid(w: &SegmentWeight1D, geom: GridGeometry) -> Result<GridFunction> {
    if geom.dim != 1 {
        return Err(Error::Unsupported(
            "analytic weights sample onto one-dimensional grids; use sample_separable".into(),
        ));
    }
    let h = geom.h();
    let values = (0..geom.cells)
        .map(|i| {
            let a = geom.edge(0, i);
            let b = if i + 1 == geom.cells { geom.hi(0) } else { geom.edge(0, i + 1) };
            w.mass_between(a, b) / h
        })
        .collect();
    GridFunction::new(geom, values)
}

/// Cell averages of `w1(x) * w2(y)` on a square grid, exact per axis.
pub fn sample_separable(
    w1: &SegmentWeight1D,
    w2: &SegmentWeight1D,
    geom: GridGeometry,
) -> Result<GridFunction> {
    if geom.dim != 2 {
        return Err(Error::InvalidParameter("separable sampling needs a 2D grid".into()));
    }
    let gx = GridGeometry::line(geom.lo[0], geom.hi(0), geom.cells)?;
    let gy = GridGeometry::line(geom.lo[1], geom.hi(1), geom.cells)?;
    let fx = sample_to_grid(w1, gx)?;
    let fy = sample_to_grid(w2, gy)?;
    let n = geom.cells;
    let mut values = Vec::with_capacity(n * n);
    for y in 0..n {
        for x in 0..n {
            values.push(fx.values[x] * fy.values[y]);
        }
    }
    GridFunction::new(geom, values)
}

/// Cell averages of a smooth 2D density by an 8x8 Gauss-Legendre rule per cell.
pub fn sample_density_2d<F: Fn(f64, f64) -> f64>(f: F, geom: GridGeometry) -> Result<GridFunction> {
    if geom.dim != 2 {
        return Err(Error::InvalidParameter("sample_density_2d needs a 2D grid".into()));
    }
    let rule = gauss_legendre_8();
    let h = geom.h();
    let half = 0.5 * h;
    let values = (0..geom.len())
        .map(|i| {
            let c = geom.center(i);
            let mut acc = NeumaierSum::new();
            for &(xi, wi) in rule {
                for &(yj, wj) in rule {
                    acc.add(wi * wj * f(c[0] + half * xi, c[1] + half * yj));
                }
            }
            0.25 * acc.value()
        })
        .collect();
    GridFunction::new(geom, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::segment::{weight_mass, Segment, Tail};

    #[test]
    fn constant_weight_samples_to_ones() {
        let w = SegmentWeight1D::constant(-2.0, 2.0, 1.0).unwrap();
        let g = sample_to_grid(&w, GridGeometry::line(-2.0, 2.0, 16).unwrap()).unwrap();
        assert!(g.values().iter().all(|v| *v == 1.0));
    }

    #[test]
    fn inverse_sqrt_first_cell_and_average() {
        let w = SegmentWeight1D::power_weight(0.0, 1.0, 0.0, -0.5).unwrap();
        let g = sample_to_grid(&w, GridGeometry::line(0.0, 1.0, 4).unwrap()).unwrap();
        assert!((g.value(0) - 4.0).abs() < 1e-14);
        let all = CellCube::new([0, 0], 4);
        assert!((g.cube_average(&all) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn grid_averages_match_exact_masses() {
        let w = SegmentWeight1D::new(
            vec![
                Segment::power(-3.0, 1.0, 1.0, 0.3, -0.5).unwrap(),
                Segment::exponential(1.0, 5.0, 2.0, 0.7).unwrap(),
            ],
            Tail::Zero,
        )
        .unwrap();
        let geom = GridGeometry::line(-3.0, 5.0, 64).unwrap();
        let g = sample_to_grid(&w, geom).unwrap();
        for (s, l) in [(0, 64), (3, 17), (30, 9), (40, 24)] {
            let c = CellCube::new([s, 0], l);
            let b = geom.cube_bounds(&c);
            let exact = weight_mass(&w, b.corner[0], b.corner[0] + b.side).unwrap() / b.side;
            assert!(((g.cube_average(&c) - exact) / exact).abs() < 1e-12);
        }
    }

    #[test]
    fn prefix_sums_exact_on_integer_grid_2d() {
        let geom = GridGeometry::square([0.0, 0.0], 1.0, 8).unwrap();
        let g = GridFunction::from_fn(geom, |c| ((c[0] * 37.0 + c[1] * 11.0) * 8.0).floor()).unwrap();
        for s in 0..8 {
            for l in 1..=(8 - s) {
                let cube = CellCube::new([s, 8 - l], l);
                assert_eq!(g.cube_value_sum(&cube), g.cube_value_sum_direct(&cube));
            }
        }
    }

    #[test]
    fn locate_and_center_agree() {
        let geom = GridGeometry::square([-1.0, 2.0], 4.0, 16).unwrap();
        for i in [0, 5, 17, 255] {
            assert_eq!(geom.locate(geom.center(i)), Some(i));
        }
        assert_eq!(geom.locate([3.0, 2.0]), None);
        assert_eq!(geom.locate([-1.0, 2.0]), Some(0));
    }

    #[test]
    fn separable_sampling_is_a_product_of_line_samples() {
        let w1 = SegmentWeight1D::power_weight(0.0, 1.0, 0.0, 0.5).unwrap();
        let w2 = SegmentWeight1D::constant(0.0, 1.0, 3.0).unwrap();
        let g = sample_separable(&w1, &w2, GridGeometry::square([0.0, 0.0], 1.0, 4).unwrap()).unwrap();
        let all = CellCube::new([0, 0], 4);
        assert!((g.cube_average(&all) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn density_2d_sampling_integrates_polynomials() {
        let geom = GridGeometry::square([0.0, 0.0], 2.0, 4).unwrap();
        let g = sample_density_2d(|x, y| x * x * y, geom).unwrap();
        // int_0^2 int_0^2 x^2 y = (8/3)(2)
        assert!((g.integral() - 16.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn grid_json_round_trip() {
        let geom = GridGeometry::line(0.0, 2.0, 4).unwrap();
        let g = GridFunction::new(geom, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let text = serde_json::to_string(&g.to_spec()).unwrap();
        let back = GridFunction::from_spec(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(g, back);
    }
}
