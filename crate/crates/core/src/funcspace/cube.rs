use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::grid::{CellCube, GridGeometry};

/// Axis-parallel cube `corner + [0, side)^dim`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cube {
    pub dim: usize,
    pub corner: [f64; 2],
    pub side: f64,
}

impl Cube {
    pub fn new(dim: usize, corner: [f64; 2], side: f64) -> Result<Self> {
        if !(side > 0.0 && side.is_finite()) {
            return Err(Error::InvalidParameter(format!("cube side must be positive, got {side}")));
        }
        if dim != 1 && dim != 2 {
            return Err(Error::Unsupported(format!("cube dimension {dim}")));
        }
        Ok(Cube { dim, corner, side })
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Cube::new(1, [lo, 0.0], hi - lo)
    }

    pub fn lo(&self) -> f64 {
        self.corner[0]
    }

    pub fn hi(&self) -> f64 {
        self.corner[0] + self.side
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(self.dim as i32)
    }

    pub fn contains(&self, x: [f64; 2]) -> bool {
        (0..self.dim).all(|a| x[a] >= self.corner[a] && x[a] < self.corner[a] + self.side)
    }

    /// Concentric cube with `factor` times the side.
    pub fn dilate(&self, factor: f64) -> Cube {
        let grow = 0.5 * (factor - 1.0) * self.side;
        let mut corner = self.corner;
        for c in corner.iter_mut().take(self.dim) {
            *c -= grow;
        }
        Cube {
            dim: self.dim,
            corner,
            side: self.side * factor,
        }
    }

    /// Lexicographic order on the corner, used for deterministic tie-breaks.
    pub fn corner_lt(&self, other: &Cube) -> bool {
        for a in (0..self.dim).rev() {
            if self.corner[a] != other.corner[a] {
                return self.corner[a] < other.corner[a];
            }
        }
        self.side < other.side
    }
}

/// Cubes of side `side / 2^j`, `j_min <= j <= j_max`, on `shifts` translated
/// lattices per level, all inside the box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CubeFamily {
    pub dim: usize,
    pub lo: [f64; 2],
    pub side: f64,
    pub j_min: u32,
    pub j_max: u32,
    pub shifts: usize,
}

/// One translated lattice of grid-aligned cubes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lattice {
    pub len: usize,
    pub origin: usize,
    pub count: usize,
}

impl Lattice {
    pub fn cube(&self, dim: usize, i: usize, base: [usize; 2]) -> CellCube {
        let (ix, iy) = if dim == 1 { (i, 0) } else { (i % self.count, i / self.count) };
        let mut start = [0usize; 2];
        start[0] = base[0] + self.origin + ix * self.len;
        if dim == 2 {
            start[1] = base[1] + self.origin + iy * self.len;
        }
        CellCube::new(start, self.len)
    }

    pub fn cube_count(&self, dim: usize) -> usize {
        self.count.pow(dim as u32)
    }
}

/// Grid realization of a family: lattices in cell units relative to `base`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridLattices {
    pub base: [usize; 2],
    pub cells: usize,
    pub lattices: Vec<Lattice>,
}

impl GridLattices {
    pub fn cubes(&self, dim: usize) -> impl Iterator<Item = CellCube> + '_ {
        self.lattices.iter().flat_map(move |l| {
            (0..l.cube_count(dim)).map(move |i| l.cube(dim, i, self.base))
        })
    }

    pub fn cube_count(&self, dim: usize) -> usize {
        self.lattices.iter().map(|l| l.cube_count(dim)).sum()
    }

    /// Whether the cell lies in the family box.
    pub fn covers(&self, dim: usize, idx: [usize; 2]) -> bool {
        (0..dim).all(|a| idx[a] >= self.base[a] && idx[a] < self.base[a] + self.cells)
    }
}

impl CubeFamily {
    pub fn new(dim: usize, lo: [f64; 2], side: f64, j_min: u32, j_max: u32, shifts: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::Unsupported(format!("family dimension {dim}")));
        }
        if !(side > 0.0 && side.is_finite()) {
            return Err(Error::InvalidParameter("family box must be nondegenerate".into()));
        }
        if j_min > j_max || j_max > 40 {
            return Err(Error::InvalidParameter(format!(
                "levels must satisfy j_min <= j_max <= 40, got [{j_min}, {j_max}]"
            )));
        }
        if shifts == 0 {
            return Err(Error::InvalidParameter("shift count must be at least 1".into()));
        }
        let lo = if dim == 1 { [lo[0], 0.0] } else { lo };
        Ok(CubeFamily {
            dim,
            lo,
            side,
            j_min,
            j_max,
            shifts,
        })
    }

    pub fn on_interval(lo: f64, hi: f64, j_min: u32, j_max: u32, shifts: usize) -> Result<Self> {
        CubeFamily::new(1, [lo, 0.0], hi - lo, j_min, j_max, shifts)
    }

    /// Family whose box is the whole grid box.
    pub fn for_grid(geom: &GridGeometry, j_min: u32, j_max: u32, shifts: usize) -> Result<Self> {
        CubeFamily::new(geom.dim, geom.lo, geom.side, j_min, j_max, shifts)
    }

    pub fn hi(&self, axis: usize) -> f64 {
        self.lo[axis] + self.side
    }

    fn level_offsets(&self, j: u32) -> (f64, Vec<f64>) {
        let len = self.side / 2f64.powi(j as i32);
        let offsets = (0..self.shifts).map(|t| t as f64 * len / self.shifts as f64).collect();
        (len, offsets)
    }

    /// All cubes in deterministic order: level, shift, then row-major position.
    pub fn cubes(&self) -> Vec<Cube> {
        let mut out = Vec::new();
        for j in self.j_min..=self.j_max {
            let (len, offsets) = self.level_offsets(j);
            let full = 1usize << j;
            for (t, off) in offsets.iter().enumerate() {
                let count = if t == 0 { full } else { full - 1 };
                let ny = if self.dim == 2 { count } else { 1 };
                for iy in 0..ny {
                    for ix in 0..count {
                        let mut corner = [0.0; 2];
                        corner[0] = self.lo[0] + off + ix as f64 * len;
                        if self.dim == 2 {
                            corner[1] = self.lo[1] + off + iy as f64 * len;
                        }
                        out.push(Cube {
                            dim: self.dim,
                            corner,
                            side: len,
                        });
                    }
                }
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        let mut n = 0usize;
        for j in self.j_min..=self.j_max {
            let full = 1usize << j;
            for t in 0..self.shifts {
                let count = if t == 0 { full } else { full - 1 };
                n += count.pow(self.dim as u32);
            }
        }
        n
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Realizes the family on a grid. The family box must be cell-aligned inside
    /// the grid box and hold a multiple of `2^j_max` cells per side. Shift
    /// offsets are snapped down to whole cells; single cells are always added.
    pub fn grid_lattices(&self, geom: &GridGeometry) -> Result<GridLattices> {
        if geom.dim != self.dim {
            return Err(Error::Config(format!(
                "family dimension {} differs from grid dimension {}",
                self.dim, geom.dim
            )));
        }
        let h = geom.h();
        let cells_f = self.side / h;
        let cells = cells_f.round() as usize;
        if (cells_f - cells as f64).abs() > 1e-9 * cells_f.max(1.0) || cells == 0 {
            return Err(Error::Config("family box is not a whole number of cells".into()));
        }
        let mut base = [0usize; 2];
        for a in 0..self.dim {
            let s = (self.lo[a] - geom.lo[a]) / h;
            let r = s.round();
            if (s - r).abs() > 1e-9 * s.abs().max(1.0) || r < 0.0 {
                return Err(Error::Config("family box is not aligned to grid cells".into()));
            }
            base[a] = r as usize;
            if base[a] + cells > geom.cells {
                return Err(Error::Config("family box extends past the grid".into()));
            }
        }
        let top = 1usize << self.j_max;
        if !cells.is_multiple_of(top) {
            return Err(Error::Config(format!(
                "{cells} cells per side are not divisible by 2^{}",
                self.j_max
            )));
        }
        let mut lattices = vec![Lattice {
            len: 1,
            origin: 0,
            count: cells,
        }];
        for j in self.j_min..=self.j_max {
            let m = cells >> j;
            let mut offsets: Vec<usize> = (0..self.shifts).map(|t| t * m / self.shifts).collect();
            offsets.dedup();
            for o in offsets {
                let count = (cells - o) / m;
                if count > 0 {
                    lattices.push(Lattice { len: m, origin: o, count });
                }
            }
        }
        lattices.sort();
        lattices.dedup();
        Ok(GridLattices {
            base,
            cells,
            lattices,
        })
    }

    pub fn to_spec(&self) -> FamilySpec {
        let mut bx = self.lo[..self.dim].to_vec();
        for a in 0..self.dim {
            bx.push(self.hi(a));
        }
        FamilySpec {
            levels: [self.j_min, self.j_max],
            shifts: self.shifts,
            r#box: bx,
        }
    }

    pub fn from_spec(spec: &FamilySpec) -> Result<Self> {
        let dim = match spec.r#box.len() {
            2 => 1,
            4 => 2,
            n => return Err(Error::Parse(format!("family box has {n} numbers"))),
        };
        let side = spec.r#box[dim] - spec.r#box[0];
        if dim == 2 && ((spec.r#box[3] - spec.r#box[1]) - side).abs() > 1e-12 * side.abs().max(1.0) {
            return Err(Error::Unsupported("family boxes must be cubes".into()));
        }
        let mut lo = [0.0; 2];
        lo[..dim].copy_from_slice(&spec.r#box[..dim]);
        CubeFamily::new(dim, lo, side, spec.levels[0], spec.levels[1], spec.shifts)
    }
}

/// Family JSON: `{"levels":[j_min, j_max], "shifts":k, "box":[lo.., hi..]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub levels: [u32; 2],
    pub shifts: usize,
    #[serde(rename = "box")]
    pub r#box: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubes_lie_inside_box_and_count_matches() {
        let fam = CubeFamily::on_interval(-3.0, 5.0, 0, 4, 3).unwrap();
        let cubes = fam.cubes();
        assert_eq!(cubes.len(), fam.len());
        for c in &cubes {
            assert!(c.lo() >= -3.0 - 1e-12 && c.hi() <= 5.0 + 1e-12, "{c:?}");
        }
        let fam2 = CubeFamily::new(2, [0.0, 0.0], 1.0, 1, 3, 2).unwrap();
        assert_eq!(fam2.cubes().len(), fam2.len());
    }

    #[test]
    fn enumeration_is_deterministic() {
        let fam = CubeFamily::on_interval(0.0, 1.0, 0, 5, 4).unwrap();
        assert_eq!(fam.cubes(), fam.cubes());
    }

    #[test]
    fn grid_lattices_snap_offsets() {
        let geom = GridGeometry::line(0.0, 8.0, 64).unwrap();
        let fam = CubeFamily::for_grid(&geom, 0, 3, 3).unwrap();
        let gl = fam.grid_lattices(&geom).unwrap();
        // level 3 cubes are 8 cells wide: offsets 0, 2, 5
        let lv3: Vec<_> = gl.lattices.iter().filter(|l| l.len == 8).map(|l| l.origin).collect();
        assert_eq!(lv3, vec![0, 2, 5]);
        assert!(gl.lattices.iter().any(|l| l.len == 1));
        for c in gl.cubes(1) {
            assert!(c.fits(&geom));
        }
    }

    #[test]
    fn misaligned_family_rejected() {
        let geom = GridGeometry::line(0.0, 8.0, 64).unwrap();
        let fam = CubeFamily::on_interval(0.01, 4.01, 0, 1, 1).unwrap();
        assert!(matches!(fam.grid_lattices(&geom), Err(Error::Config(_))));
        let deep = CubeFamily::for_grid(&geom, 0, 7, 1).unwrap();
        assert!(deep.grid_lattices(&geom).is_err());
    }

    #[test]
    fn tripled_cube_is_concentric() {
        let q = Cube::interval(2.0, 3.0).unwrap().dilate(3.0);
        assert_eq!((q.lo(), q.hi()), (1.0, 4.0));
    }

    #[test]
    fn family_json() {
        let spec: FamilySpec = serde_json::from_str(r#"{"levels":[0,6],"shifts":2,"box":[-4,4]}"#).unwrap();
        let fam = CubeFamily::from_spec(&spec).unwrap();
        assert_eq!(fam.dim, 1);
        assert_eq!(fam.to_spec(), spec);
    }
}
