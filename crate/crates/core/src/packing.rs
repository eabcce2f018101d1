//! Lower bounds through the indicator family `{ h Σ δ_i χ_(Q_i) }` over the
//! `N^n` grid cells. L¹ distances in the family are Hamming distances times
//! `h L^n / N^n`, so counting the family members inside a `2ε` ball is a
//! binomial tail sum.

use num_bigint::BigUint;
use num_traits::{FromPrimitive, One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid_fn::{cell_count, BvClass, GridFunction};
use crate::numeric::{floor_snap, leq_slack, log2_big};

/// Largest family dimension `m = N^n` for which exact counts are built.
pub const EXACT_COUNT_CAP: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PackingFamily {
    pub dim: usize,
    pub cells: usize,
    pub side: f64,
    pub height: f64,
}

/// Bit selector `δ` in flat cell order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeltaIndex {
    pub bits: Vec<bool>,
}

impl DeltaIndex {
    /// Low `len` bits of `mask`, bit `i` selecting flat cell `i`.
    pub fn from_mask(mask: u64, len: usize) -> Self {
        Self { bits: (0..len).map(|i| i < 64 && mask >> i & 1 == 1).collect() }
    }

    pub fn hamming(&self, other: &Self) -> usize {
        self.bits.iter().zip(&other.bits).filter(|(a, b)| a != b).count()
    }
}

/// `min{M, V / (2^(n-1) L^(n-1) N)}`.
pub fn max_height(class: &BvClass, cells: usize) -> f64 {
    let np = class.dim as i32 - 1;
    let tv_cap = class.tv_bound / (2f64.powi(np) * class.side.powi(np) * cells as f64);
    class.sup_bound.min(tv_cap)
}

impl PackingFamily {
    pub fn new(class: &BvClass, cells: usize, height: f64) -> Result<Self> {
        if cells == 0 {
            return Err(Error::InvalidParams("packing family needs N >= 1".into()));
        }
        let cap = max_height(class, cells);
        if !(height > 0.0 && leq_slack(height, cap)) {
            return Err(Error::ClassViolation(format!("height {height} outside (0, {cap}]")));
        }
        cell_count(class.dim, cells).ok_or_else(|| Error::OutOfRange("family too large".into()))?;
        Ok(Self { dim: class.dim, cells, side: class.side, height })
    }

    /// `m = N^n`.
    pub fn size(&self) -> usize {
        cell_count(self.dim, self.cells).expect("checked at construction")
    }

    /// `(2L)^(n-1) N h`, the family-wide variation bound.
    pub fn tv_bound(&self) -> f64 {
        (2.0 * self.side).powi(self.dim as i32 - 1) * self.cells as f64 * self.height
    }

    pub fn function(&self, delta: &DeltaIndex) -> Result<GridFunction> {
        if delta.bits.len() != self.size() {
            return Err(Error::DomainMismatch(format!(
                "selector has {} bits, family has {} cells",
                delta.bits.len(),
                self.size()
            )));
        }
        let values = delta.bits.iter().map(|&b| if b { self.height } else { 0.0 }).collect();
        GridFunction::new(self.dim, self.side, self.cells, values)
    }

    /// All `2^m` members, only for `m <= 20`.
    pub fn members(&self) -> Result<Vec<GridFunction>> {
        let m = self.size();
        if m > 20 {
            return Err(Error::SizeCap { size: m, cap: 20 });
        }
        (0..1u64 << m).map(|mask| self.function(&DeltaIndex::from_mask(mask, m))).collect()
    }

    /// `d h L^n / N^n`.
    pub fn l1_from_hamming(&self, dist: usize) -> Result<f64> {
        let m = self.size();
        if dist > m {
            return Err(Error::OutOfRange(format!("Hamming distance {dist} exceeds {m}")));
        }
        Ok(dist as f64 * self.height * self.side.powi(self.dim as i32) / m as f64)
    }
}

pub fn make_packing_function(delta: &DeltaIndex, family: &PackingFamily) -> Result<GridFunction> {
    family.function(delta)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerParams {
    pub cells: usize,
    pub height: f64,
}

/// `N = floor(V L / (2^(n+2) ε))`, `h = min{M, V/(2^(n-1) L^(n-1) N)}`.
pub fn select_lower_params(class: &BvClass, eps: f64) -> Result<LowerParams> {
    if !(eps > 0.0 && eps < class.max_eps()) {
        return Err(Error::OutOfRange(format!("eps = {eps} outside (0, {})", class.max_eps())));
    }
    let raw = floor_snap(class.tv_bound * class.side / (2f64.powi(class.dim as i32 + 2) * eps));
    if raw == 0 {
        return Err(Error::OutOfRange(format!("eps = {eps} too large: the packing grid is empty")));
    }
    let cells = usize::try_from(raw).map_err(|_| Error::OutOfRange("packing grid overflow".into()))?;
    let height = max_height(class, cells);
    // eps <= h L^n / 8 follows from the choice of N
    debug_assert!(leq_slack(eps, height * class.side.powi(class.dim as i32) / 8.0));
    Ok(LowerParams { cells, height })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PackingTvReport {
    pub max_tv: f64,
    pub max_sup: f64,
    pub tv_bound: f64,
    pub checked: usize,
    pub exhaustive: bool,
    pub pass: bool,
}

/// Checks `TV(u_δ) <= (2L)^(n-1) N h <= V` and `sup <= M` over all selectors
/// when `m <= 16`, otherwise over a deterministic sample including the
/// checkerboard.
pub fn packing_tv_check(family: &PackingFamily, class: &BvClass, samples: usize, seed: u64) -> Result<PackingTvReport> {
    let m = family.size();
    let exhaustive = m <= 16;
    let mut selectors = Vec::new();
    if exhaustive {
        selectors.extend((0..1u64 << m).map(|mask| DeltaIndex::from_mask(mask, m)));
    } else {
        let probe = GridFunction::zero(family.dim, family.side)?;
        let _ = probe;
        let parity = |flat: usize| {
            let mut rest = flat;
            let mut s = 0;
            for _ in 0..family.dim {
                s += rest % family.cells;
                rest /= family.cells;
            }
            s % 2 == 0
        };
        selectors.push(DeltaIndex { bits: (0..m).map(parity).collect() });
        selectors.push(DeltaIndex { bits: vec![true; m] });
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            selectors.push(DeltaIndex { bits: (0..m).map(|_| rng.gen_bool(0.5)).collect() });
        }
    }
    let tv_bound = family.tv_bound();
    let mut max_tv: f64 = 0.0;
    let mut max_sup: f64 = 0.0;
    for d in &selectors {
        let u = family.function(d)?;
        max_tv = max_tv.max(u.total_variation());
        max_sup = max_sup.max(u.sup_norm());
    }
    let pass = leq_slack(max_tv, tv_bound) && leq_slack(tv_bound, class.tv_bound) && max_sup <= class.sup_bound;
    Ok(PackingTvReport { max_tv, max_sup, tv_bound, checked: selectors.len(), exhaustive, pass })
}

/// `sum_(r <= k) C(m, r)`, exactly.
pub fn ball_count_exact(m: usize, k: usize) -> Result<BigUint> {
    if k > m {
        return Err(Error::OutOfRange(format!("radius {k} exceeds {m}")));
    }
    let mut term = BigUint::one();
    let mut total = BigUint::one();
    for r in 0..k {
        term *= (m - r) as u64;
        term /= (r + 1) as u64;
        total += &term;
    }
    Ok(total)
}

fn check_hoeffding(m: usize, k: usize) -> Result<()> {
    if m == 0 || 2 * k > m {
        return Err(Error::OutOfRange(format!("Hoeffding bound needs 0 < m and k <= m/2, got m={m}, k={k}")));
    }
    Ok(())
}

/// `log2(2^m exp(-2 (m/2 - k)^2 / m))`.
pub fn hoeffding_bound_log2(m: usize, k: usize) -> Result<f64> {
    check_hoeffding(m, k)?;
    let mf = m as f64;
    let gap = mf / 2.0 - k as f64;
    Ok(mf - 2.0 * gap * gap / mf * std::f64::consts::LOG2_E)
}

/// `2^m exp(-2 (m/2 - k)^2 / m)`; infinite once `2^m` overflows.
pub fn hoeffding_bound(m: usize, k: usize) -> Result<f64> {
    check_hoeffding(m, k)?;
    let mf = m as f64;
    let gap = mf / 2.0 - k as f64;
    Ok(2f64.powi(m as i32) * (-2.0 * gap * gap / mf).exp())
}

/// Exact check of `ball_count_exact(m, k) <= hoeffding_bound(m, k)`. The float
/// bound is rounded down before comparison so a pass is never an artefact of
/// rounding.
pub fn hoeffding_dominates(m: usize, k: usize) -> Result<bool> {
    let count = ball_count_exact(m, k)?;
    let bound = hoeffding_bound(m, k)?;
    if bound.is_finite() {
        let lowered = (bound * (1.0 - 1e-13)).floor();
        let lowered = BigUint::from_f64(lowered).unwrap_or_default();
        Ok(count <= lowered)
    } else {
        Ok(log2_big(&count) <= hoeffding_bound_log2(m, k)? - 1e-9)
    }
}

/// `(log2 e / 8) floor(V L / (2^(n+2) ε))^n` bits.
pub fn lower_entropy_bound(class: &BvClass, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < class.max_eps()) {
        return Err(Error::OutOfRange(format!("eps = {eps} outside (0, {})", class.max_eps())));
    }
    let cells = floor_snap(class.tv_bound * class.side / (2f64.powi(class.dim as i32 + 2) * eps));
    Ok(std::f64::consts::LOG2_E / 8.0 * (cells as f64).powi(class.dim as i32))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountReport {
    pub cells: usize,
    pub height: f64,
    /// Family dimension `N^n`.
    pub m: usize,
    /// Hamming radius `floor(2 ε N^n / (h L^n))`.
    pub k: usize,
    pub exact_count: BigUint,
    pub hoeffding_log2: f64,
    /// `log2(2^m / exact_count)`.
    pub exact_bits: f64,
    /// Closed-form lower bound in bits.
    pub lower_entropy_bits: f64,
}

impl CountReport {
    pub fn hoeffding(&self) -> f64 {
        self.hoeffding_log2.exp2()
    }

    pub fn closed_le_exact(&self) -> bool {
        leq_slack(self.lower_entropy_bits, self.exact_bits)
    }

    /// `ceil(2^m / exact_count)`, the counting lower bound on the cover size.
    pub fn cover_lower_bound(&self) -> BigUint {
        let total = BigUint::one() << self.m;
        (&total + &self.exact_count - 1u32) / &self.exact_count
    }
}

pub fn packing_certificate(class: &BvClass, eps: f64) -> Result<CountReport> {
    let LowerParams { cells, height } = select_lower_params(class, eps)?;
    let m = cell_count(class.dim, cells)
        .filter(|&m| m <= EXACT_COUNT_CAP)
        .ok_or(Error::SizeCap { size: usize::MAX, cap: EXACT_COUNT_CAP })?;
    let volume = class.side.powi(class.dim as i32);
    let k = (floor_snap(2.0 * eps * m as f64 / (height * volume)) as usize).min(m);
    let exact_count = ball_count_exact(m, k)?;
    let exact_bits = m as f64 - log2_big(&exact_count);
    let hoeffding_log2 = if 2 * k <= m { hoeffding_bound_log2(m, k)? } else { m as f64 };
    let report = CountReport {
        cells,
        height,
        m,
        k,
        exact_count,
        hoeffding_log2,
        exact_bits,
        lower_entropy_bits: lower_entropy_bound(class, eps)?,
    };
    debug_assert!(!report.exact_count.is_zero());
    Ok(report)
}
