//! Reduction from the cube to one dimension: boustrophedon ordering of grid
//! cells, flattening along it, and the resolution/accuracy choice used by
//! the encoder.

use crate::error::{Error, Result};
use crate::grid_fn::{cell_count, BvClass, GridFunction};
use crate::jordan::StepFunction;
use crate::numeric::floor_snap;

/// Enumeration of `{0..N}^n` in which consecutive cells share a face.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnakeOrder {
    dim: usize,
    cells: usize,
    /// Flat (axis-1-fastest) index of the j-th visited cell.
    order: Vec<usize>,
}

impl SnakeOrder {
    /// Boustrophedon traversal: axis 1 sweeps back and forth, nested under
    /// axis 2, and so on. Equivalently the reflected N-ary Gray code.
    pub fn new(dim: usize, cells: usize) -> Result<Self> {
        if dim == 0 || cells == 0 {
            return Err(Error::InvalidParams("snake order needs n >= 1 and N >= 1".into()));
        }
        let len = cell_count(dim, cells).ok_or_else(|| Error::InvalidGrid("cell count overflow".into()))?;
        let mut order = Vec::with_capacity(len);
        let mut digits = vec![0usize; dim];
        for j in 0..len {
            let mut rest = j;
            for d in digits.iter_mut() {
                *d = rest % cells;
                rest /= cells;
            }
            let mut reversed = false;
            let mut flat = 0usize;
            for k in (0..dim).rev() {
                let g = if reversed { cells - 1 - digits[k] } else { digits[k] };
                reversed ^= g % 2 == 1;
                flat = flat * cells + g;
            }
            order.push(flat);
        }
        Ok(Self { dim, cells, order })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn flat_order(&self) -> &[usize] {
        &self.order
    }

    pub fn multi_index(&self, j: usize) -> Vec<usize> {
        let mut flat = self.order[j];
        (0..self.dim)
            .map(|_| {
                let c = flat % self.cells;
                flat /= self.cells;
                c
            })
            .collect()
    }

    fn check(&self, dim: usize, cells: usize) -> Result<()> {
        if dim != self.dim || cells != self.cells {
            return Err(Error::DomainMismatch(format!(
                "grid (n={dim}, N={cells}) vs snake (n={}, N={})",
                self.dim, self.cells
            )));
        }
        Ok(())
    }

    /// Step function on `[0, L N^(n-1))` whose j-th cell carries the value
    /// of the j-th visited grid cell; cell width stays `L/N`.
    pub fn flatten(&self, u: &GridFunction) -> Result<StepFunction> {
        self.check(u.dim(), u.cells())?;
        let values = self.order.iter().map(|&i| u.values()[i]).collect();
        let length = u.side() * (self.cells as f64).powi(self.dim as i32 - 1);
        StepFunction::new(length, values)
    }

    pub fn unflatten(&self, f: &StepFunction, side: f64) -> Result<GridFunction> {
        if f.cells() != self.order.len() {
            return Err(Error::DomainMismatch(format!(
                "step function has {} cells, snake visits {}",
                f.cells(),
                self.order.len()
            )));
        }
        let mut values = vec![0.0; self.order.len()];
        for (&flat, &v) in self.order.iter().zip(f.values()) {
            values[flat] = v;
        }
        GridFunction::new(self.dim, side, self.cells, values)
    }
}

/// Grid resolution and 1-D accuracy used by the encoder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpperParams {
    /// Cells per axis, `floor(2 sqrt(n) L V / ε) + 1`.
    pub cells: usize,
    /// `ε' = N^(n-1) ε / (4 L^(n-1))`.
    pub eps_prime: f64,
    /// Flattened domain length `L_N = L N^(n-1)`.
    pub length: f64,
    /// Variation budget after flattening, `β_N = 2 V (N/L)^(n-1)`.
    pub tv_budget: f64,
}

pub fn select_upper_params(class: &BvClass, eps: f64) -> Result<UpperParams> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::OutOfRange(format!("eps must be positive, got {eps}")));
    }
    let n = class.dim as f64;
    let raw = floor_snap(2.0 * n.sqrt() * class.side * class.tv_bound / eps);
    let cells = usize::try_from(raw)
        .ok()
        .and_then(|c| c.checked_add(1))
        .ok_or_else(|| Error::OutOfRange("grid resolution overflows".into()))?;
    let np = class.dim as i32 - 1;
    let nf = cells as f64;
    Ok(UpperParams {
        cells,
        eps_prime: nf.powi(np) * eps / (4.0 * class.side.powi(np)),
        length: class.side * nf.powi(np),
        tv_budget: 2.0 * class.tv_bound * (nf / class.side).powi(np),
    })
}

/// `ε' <= L_N (β_N + 2M) / 6`, the range condition of the 1-D bound.
pub fn cond1_holds(class: &BvClass, eps: f64) -> bool {
    match select_upper_params(class, eps) {
        Ok(p) => p.eps_prime <= p.length * (p.tv_budget + 2.0 * class.sup_bound) / 6.0,
        Err(_) => false,
    }
}

/// `0 < ε < M L^n / 8`; the derived 1-D range condition is checked too.
pub fn validity_check(class: &BvClass, eps: f64) -> bool {
    eps > 0.0 && eps < class.max_eps() && cond1_holds(class, eps)
}

/// `Γ = (8/√n)(4√n L V)^n + (2^(n+7) V/M + 8)(M L^n / 8)^n`.
pub fn gamma_constant(class: &BvClass) -> f64 {
    let n = class.dim as i32;
    let rn = (class.dim as f64).sqrt();
    let first = 8.0 / rn * (4.0 * rn * class.side * class.tv_bound).powi(n);
    let second = (2f64.powi(n + 7) * class.tv_bound / class.sup_bound + 8.0) * class.max_eps().powi(n);
    first + second
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborReport {
    pub pairs: usize,
    /// Largest `|u_(i+e_j) - u_i| / ((N/L)^(n-1) |Du|(int(Q_i ∪ Q_(i+e_j))))`.
    pub worst_ratio: f64,
    pub pass: bool,
}

/// Checks the neighbour estimate for coarse averages at resolution `coarse`
/// against the jumps of `u_fine` inside each pair of adjacent coarse cells.
pub fn neighbor_diff_check(u_fine: &GridFunction, coarse: usize) -> Result<NeighborReport> {
    let profile = u_fine.coarse_profile(coarse)?;
    let dim = u_fine.dim();
    let scale = (coarse as f64 / u_fine.side()).powi(dim as i32 - 1);
    let means = profile.mean.values();
    let mut pairs = 0;
    let mut worst: f64 = 0.0;
    let mut pass = true;
    for c in 0..means.len() {
        let mut stride = 1;
        let mut rest = c;
        for j in 0..dim {
            let coord = rest % coarse;
            rest /= coarse;
            if coord + 1 < coarse {
                let other = c + stride;
                let lhs = (means[other] - means[c]).abs();
                let rhs = scale
                    * (profile.interior_jump[c] + profile.interior_jump[other] + profile.face_jump[j][c]);
                pairs += 1;
                let ratio = if rhs > 0.0 {
                    lhs / rhs
                } else if lhs == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                };
                worst = worst.max(ratio);
                pass &= crate::numeric::leq_slack(lhs, rhs);
            }
            stride *= coarse;
        }
    }
    Ok(NeighborReport { pairs, worst_ratio: worst, pass })
}
