//! Piecewise-constant functions on the cube `[0, L]^n` with uniform cells.
//!
//! Values are stored in flat order with axis 1 fastest:
//! `flat(i) = i_1 + N i_2 + ... + N^(n-1) i_n`.

pub(crate) mod overlay;
mod random;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{leq_slack, Accumulator};
use overlay::{for_each_piece, AxisOverlay};

pub use random::random_bv;

/// The class `F[L, M, V]` of functions on `[0, L]^n` with `|u| <= M` and
/// total variation at most `V`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BvClass {
    pub dim: usize,
    pub side: f64,
    pub sup_bound: f64,
    pub tv_bound: f64,
}

impl BvClass {
    pub fn new(dim: usize, side: f64, sup_bound: f64, tv_bound: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParams("dimension must be at least 1".into()));
        }
        for (name, x) in [("L", side), ("M", sup_bound), ("V", tv_bound)] {
            if !(x.is_finite() && x > 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be positive and finite, got {x}")));
            }
        }
        Ok(Self { dim, side, sup_bound, tv_bound })
    }

    /// Unit cube class with `L = M = V = 1`.
    pub fn unit(dim: usize) -> Self {
        Self::new(dim, 1.0, 1.0, 1.0).expect("unit class is valid")
    }

    /// `M L^n / 8`, the upper end of the admissible accuracy range.
    pub fn max_eps(&self) -> f64 {
        self.sup_bound * self.side.powi(self.dim as i32) / 8.0
    }
}

/// Measured quantities behind a class membership test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MembershipReport {
    pub sup_norm: f64,
    pub total_variation: f64,
    pub member: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoincareCell {
    pub deviation: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoincareReport {
    pub coarse: usize,
    pub cells: Vec<PoincareCell>,
    pub pass: bool,
}

/// Per-coarse-cell statistics of a fine function, used by the Poincaré and
/// neighbour-difference checks.
#[derive(Debug, Clone)]
pub(crate) struct CoarseProfile {
    pub mean: GridFunction,
    /// `int_cell |u - mean|`.
    pub deviation: Vec<f64>,
    /// Jump measure of `u` strictly inside each coarse cell.
    pub interior_jump: Vec<f64>,
    /// `face_jump[j][c]`: jump measure on the face between `c` and `c + e_j`.
    pub face_jump: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    dim: usize,
    side: f64,
    cells: usize,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct GridJson {
    n: usize,
    #[serde(rename = "L")]
    side: f64,
    #[serde(rename = "N")]
    cells: usize,
    values: Vec<f64>,
}

/// `cells^dim`, or `None` on overflow.
pub fn cell_count(dim: usize, cells: usize) -> Option<usize> {
    let mut total = 1usize;
    for _ in 0..dim {
        total = total.checked_mul(cells)?;
    }
    Some(total)
}

impl GridFunction {
    pub fn new(dim: usize, side: f64, cells: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 || cells == 0 {
            return Err(Error::InvalidGrid("dimension and cell count must be positive".into()));
        }
        if !(side.is_finite() && side > 0.0) {
            return Err(Error::InvalidGrid(format!("side length must be positive, got {side}")));
        }
        let expected = cell_count(dim, cells)
            .ok_or_else(|| Error::InvalidGrid(format!("{cells}^{dim} cells overflow")))?;
        if values.len() != expected {
            return Err(Error::InvalidGrid(format!(
                "expected {expected} values for N={cells}, n={dim}, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid(format!("value at flat index {i} is not finite")));
        }
        Ok(Self { dim, side, cells, values })
    }

    pub fn constant(dim: usize, side: f64, cells: usize, value: f64) -> Result<Self> {
        let len = cell_count(dim, cells).ok_or_else(|| Error::InvalidGrid("cell count overflow".into()))?;
        Self::new(dim, side, cells, vec![value; len])
    }

    pub fn zero(dim: usize, side: f64) -> Result<Self> {
        Self::constant(dim, side, 1, 0.0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    /// Cells per axis.
    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn cell_width(&self) -> f64 {
        self.side / self.cells as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_width().powi(self.dim as i32)
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        debug_assert_eq!(multi.len(), self.dim);
        multi.iter().rev().fold(0, |acc, &i| acc * self.cells + i)
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.dim);
        for _ in 0..self.dim {
            out.push(flat % self.cells);
            flat /= self.cells;
        }
        out
    }

    pub fn value_at(&self, multi: &[usize]) -> f64 {
        self.values[self.flat_index(multi)]
    }

    /// Same-shaped function with every value mapped through `f`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.dim, self.side, self.cells, self.values.iter().map(|&v| f(v)).collect())
    }

    fn check_domain(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim || self.side != other.side {
            return Err(Error::DomainMismatch(format!(
                "(n={}, L={}) vs (n={}, L={})",
                self.dim, self.side, other.dim, other.side
            )));
        }
        Ok(())
    }

    /// Exact `int |u - v|` on the common refinement of both grids.
    pub fn l1_distance(&self, other: &Self) -> Result<f64> {
        self.check_domain(other)?;
        let ov = AxisOverlay::new(self.cells, other.cells);
        let unit_vol = ov.unit(self.side).powi(self.dim as i32);
        let mut acc = Accumulator::new();
        for_each_piece(&ov, self.dim, self.cells, other.cells, |_, a, b, w| {
            let d = (self.values[a] - other.values[b]).abs();
            if d != 0.0 {
                acc.add(d * w);
            }
        });
        Ok(acc.value() * unit_vol)
    }

    /// `int |u|`.
    pub fn l1_norm(&self) -> f64 {
        let mut acc = Accumulator::new();
        for v in &self.values {
            acc.add(v.abs());
        }
        acc.value() * self.cell_volume()
    }

    /// Total variation of the piecewise-constant extension on the open cube:
    /// face measure `(L/N)^(n-1)` times the sum of interior jumps.
    pub fn total_variation(&self) -> f64 {
        let n = self.cells;
        let mut acc = Accumulator::new();
        for flat in 0..self.values.len() {
            let mut stride = 1;
            let mut rest = flat;
            for _ in 0..self.dim {
                let coord = rest % n;
                rest /= n;
                if coord + 1 < n {
                    acc.add((self.values[flat + stride] - self.values[flat]).abs());
                }
                stride *= n;
            }
        }
        acc.value() * self.cell_width().powi(self.dim as i32 - 1)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Tests `sup |u| <= M` and `TV(u) <= V`.
    pub fn class_membership(&self, class: &BvClass) -> Result<MembershipReport> {
        if self.dim != class.dim || self.side != class.side {
            return Err(Error::DomainMismatch(format!(
                "function on (n={}, L={}) vs class (n={}, L={})",
                self.dim, self.side, class.dim, class.side
            )));
        }
        let sup_norm = self.sup_norm();
        let total_variation = self.total_variation();
        Ok(MembershipReport {
            sup_norm,
            total_variation,
            member: sup_norm <= class.sup_bound && total_variation <= class.tv_bound,
        })
    }

    /// Exact mean of `u` over each cell of the uniform grid with `coarse`
    /// cells per axis. `coarse` need not divide `self.cells()`.
    pub fn cell_average(&self, coarse: usize) -> Result<Self> {
        if coarse == 0 {
            return Err(Error::InvalidParams("coarse resolution must be positive".into()));
        }
        if coarse == self.cells {
            return Ok(self.clone());
        }
        let len = cell_count(self.dim, coarse).ok_or_else(|| Error::InvalidGrid("cell count overflow".into()))?;
        let ov = AxisOverlay::new(self.cells, coarse);
        let mut acc = vec![Accumulator::new(); len];
        for_each_piece(&ov, self.dim, self.cells, coarse, |_, a, b, w| {
            acc[b].add(self.values[a] * w);
        });
        let per_cell = ((ov.resolution / coarse as u64) as f64).powi(self.dim as i32);
        let bound = self.sup_norm();
        let values = acc.iter().map(|s| (s.value() / per_cell).clamp(-bound, bound)).collect();
        Self::new(self.dim, self.side, coarse, values)
    }

    /// Splits every cell into `factor^n` equal cells carrying the same value.
    pub fn refine(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::InvalidParams("refinement factor must be positive".into()));
        }
        let fine = self
            .cells
            .checked_mul(factor)
            .ok_or_else(|| Error::InvalidGrid("refinement overflow".into()))?;
        let len = cell_count(self.dim, fine).ok_or_else(|| Error::InvalidGrid("cell count overflow".into()))?;
        let mut values = Vec::with_capacity(len);
        for flat in 0..len {
            let mut rest = flat;
            let mut coarse_flat = 0;
            let mut stride = 1;
            for _ in 0..self.dim {
                coarse_flat += (rest % fine) / factor * stride;
                rest /= fine;
                stride *= self.cells;
            }
            values.push(self.values[coarse_flat]);
        }
        Self::new(self.dim, self.side, fine, values)
    }

    pub(crate) fn coarse_profile(&self, coarse: usize) -> Result<CoarseProfile> {
        let mean = self.cell_average(coarse)?;
        let ov = AxisOverlay::new(self.cells, coarse);
        let unit = ov.unit(self.side);
        let unit_vol = unit.powi(self.dim as i32);
        let face_unit = unit.powi(self.dim as i32 - 1);
        let len = mean.len();
        let mut deviation = vec![Accumulator::new(); len];
        let mut interior = vec![Accumulator::new(); len];
        let mut faces = vec![vec![Accumulator::new(); len]; self.dim];
        let pieces = &ov.pieces;
        let mut strides = Vec::with_capacity(self.dim);
        let mut s = 1usize;
        for _ in 0..self.dim {
            strides.push(s);
            s *= self.cells;
        }
        for_each_piece(&ov, self.dim, self.cells, coarse, |idx, a, b, w| {
            deviation[b].add((self.values[a] - mean.values[b]).abs() * w);
            for j in 0..self.dim {
                let p = idx[j];
                if p + 1 >= pieces.len() {
                    continue;
                }
                let here = pieces[p];
                let next = pieces[p + 1];
                if here.a == next.a {
                    continue;
                }
                let jump = (self.values[a + strides[j]] - self.values[a]).abs();
                if jump == 0.0 {
                    continue;
                }
                let face = w / here.units as f64;
                if here.b == next.b {
                    interior[b].add(jump * face);
                } else {
                    faces[j][b].add(jump * face);
                }
            }
        });
        Ok(CoarseProfile {
            mean,
            deviation: deviation.iter().map(|a| a.value() * unit_vol).collect(),
            interior_jump: interior.iter().map(|a| a.value() * face_unit).collect(),
            face_jump: faces
                .iter()
                .map(|f| f.iter().map(|a| a.value() * face_unit).collect())
                .collect(),
        })
    }

    /// On each coarse cell `Q`, checks
    /// `int_Q |u - u_Q| <= diam(Q)/2 * |Du|(int Q)`.
    pub fn poincare_check(&self, coarse: usize) -> Result<PoincareReport> {
        let profile = self.coarse_profile(coarse)?;
        let half_diam = (self.dim as f64).sqrt() * self.side / coarse as f64 / 2.0;
        let cells: Vec<_> = profile
            .deviation
            .iter()
            .zip(&profile.interior_jump)
            .map(|(&deviation, &jump)| PoincareCell { deviation, bound: half_diam * jump })
            .collect();
        let pass = cells.iter().all(|c| leq_slack(c.deviation, c.bound));
        Ok(PoincareReport { coarse, cells, pass })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&GridJson {
            n: self.dim,
            side: self.side,
            cells: self.cells,
            values: self.values.clone(),
        })
        .expect("grid serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: GridJson = serde_json::from_str(text).map_err(|e| Error::InvalidGrid(e.to_string()))?;
        Self::new(raw.n, raw.side, raw.cells, raw.values)
    }
}
