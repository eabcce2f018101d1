//! One-dimensional building blocks: step functions on `[0, Λ)`, running
//! variation, Jordan decomposition into nondecreasing parts, the staircase
//! net for bounded monotone functions and the two-part BV code built on it.

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::grid_fn::overlay::AxisOverlay;
use crate::numeric::{ceil_log2_binomial, ceil_snap, floor_snap, leq_slack, Accumulator};
use crate::rank;

/// Piecewise-constant function on `[0, length)` with equal cells.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    length: f64,
    values: Vec<f64>,
}

impl StepFunction {
    pub fn new(length: f64, values: Vec<f64>) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidParams(format!("domain length must be positive, got {length}")));
        }
        if values.is_empty() {
            return Err(Error::InvalidParams("step function needs at least one cell".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("step function values must be finite".into()));
        }
        Ok(Self { length, values })
    }

    pub fn constant(length: f64, cells: usize, value: f64) -> Result<Self> {
        Self::new(length, vec![value; cells])
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn cells(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn cell_width(&self) -> f64 {
        self.length / self.values.len() as f64
    }

    pub fn total_variation(&self) -> f64 {
        let mut acc = Accumulator::new();
        for w in self.values.windows(2) {
            acc.add((w[1] - w[0]).abs());
        }
        acc.value()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_nondecreasing(&self, tol: f64) -> bool {
        self.values.windows(2).all(|w| w[1] >= w[0] - tol)
    }

    fn check_length(&self, other: &Self) -> Result<()> {
        if (self.length - other.length).abs() > 1e-12 * self.length.max(other.length) {
            return Err(Error::DomainMismatch(format!(
                "step functions on [0,{}) and [0,{})",
                self.length, other.length
            )));
        }
        Ok(())
    }

    /// Exact `int |f - g|` on the common refinement.
    pub fn l1_distance(&self, other: &Self) -> Result<f64> {
        self.check_length(other)?;
        let ov = AxisOverlay::new(self.cells(), other.cells());
        let mut acc = Accumulator::new();
        for p in &ov.pieces {
            let d = (self.values[p.a] - other.values[p.b]).abs();
            if d != 0.0 {
                acc.add(d * p.units as f64);
            }
        }
        Ok(acc.value() * ov.unit(self.length))
    }

    /// Exact means over `cells` equal subintervals.
    pub fn cell_average(&self, cells: usize) -> Result<Self> {
        if cells == 0 {
            return Err(Error::InvalidParams("cell count must be positive".into()));
        }
        if cells == self.cells() {
            return Ok(self.clone());
        }
        let ov = AxisOverlay::new(self.cells(), cells);
        let mut acc = vec![Accumulator::new(); cells];
        for p in &ov.pieces {
            acc[p.b].add(self.values[p.a] * p.units as f64);
        }
        let per_cell = (ov.resolution / cells as u64) as f64;
        let (lo, hi) = self
            .values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        Self::new(
            self.length,
            acc.iter().map(|a| (a.value() / per_cell).clamp(lo, hi)).collect(),
        )
    }

    /// `V_f`: variation accumulated up to each cell, starting at 0.
    pub fn running_variation(&self) -> Self {
        let mut acc = Accumulator::new();
        let mut out = Vec::with_capacity(self.values.len());
        out.push(0.0);
        for w in self.values.windows(2) {
            acc.add((w[1] - w[0]).abs());
            out.push(acc.value());
        }
        Self { length: self.length, values: out }
    }

    /// Splits `f = plus - minus` with
    /// `plus = (V_f + f)/2 + M/2` and `minus = (V_f - f)/2 + M/2`,
    /// both nondecreasing with values in `[0, (TV(f) + 2M)/2]`.
    pub fn jordan_decompose(&self, sup_bound: f64) -> Result<(Self, Self)> {
        let sup = self.sup_norm();
        if sup > sup_bound {
            return Err(Error::ClassViolation(format!("sup |f| = {sup} exceeds M = {sup_bound}")));
        }
        let var = self.running_variation();
        let half_m = sup_bound / 2.0;
        let (plus, minus): (Vec<f64>, Vec<f64>) = var
            .values
            .iter()
            .zip(&self.values)
            .map(|(&v, &f)| ((v + f) / 2.0 + half_m, (v - f) / 2.0 + half_m))
            .unzip();
        Ok((
            Self { length: self.length, values: plus },
            Self { length: self.length, values: minus },
        ))
    }
}

/// Staircase net for nondecreasing functions `[0, Λ) -> [0, B]`: `k` equal
/// domain cells and `m` value levels of height `B/m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotoneNet {
    pub length: f64,
    pub range: f64,
    pub accuracy: f64,
    pub cells: u64,
    pub levels: u64,
}

/// Level index per net cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonotoneCodeword {
    pub levels: Vec<u64>,
}

impl MonotoneNet {
    /// `k = m = ceil(4 Λ B / ε)`, which keeps the quantization error below
    /// `ε/2` in L¹; `B = 0` collapses to the single zero codeword.
    pub fn new(length: f64, range: f64, accuracy: f64) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidParams(format!("net length must be positive, got {length}")));
        }
        if !(accuracy.is_finite() && accuracy > 0.0) {
            return Err(Error::InvalidParams(format!("net accuracy must be positive, got {accuracy}")));
        }
        if !(range.is_finite() && range >= 0.0) {
            return Err(Error::InvalidParams(format!("net range must be nonnegative, got {range}")));
        }
        if range == 0.0 {
            return Ok(Self { length, range, accuracy, cells: 1, levels: 0 });
        }
        let count = ceil_snap(4.0 * length * range / accuracy).max(1);
        if count > u32::MAX as u64 {
            return Err(Error::OutOfRange(format!("monotone net with {count} cells is too large")));
        }
        Ok(Self { length, range, accuracy, cells: count, levels: count })
    }

    fn tolerance(&self) -> f64 {
        1e-9 * self.range.max(1.0)
    }

    /// Exact number of codewords, `C(k + m, m)`.
    pub fn size(&self) -> BigUint {
        rank::sequence_count(self.cells, self.levels)
    }

    /// `ceil(log2 C(k + m, m))`: bits needed to name one codeword.
    pub fn size_bits(&self) -> u64 {
        ceil_log2_binomial(self.cells + self.levels, self.levels)
    }

    pub fn quantize(&self, g: &StepFunction) -> Result<MonotoneCodeword> {
        if (g.length - self.length).abs() > 1e-12 * self.length {
            return Err(Error::DomainMismatch(format!(
                "function on [0,{}) vs net on [0,{})",
                g.length, self.length
            )));
        }
        let tol = self.tolerance();
        if !g.is_nondecreasing(tol) {
            return Err(Error::ClassViolation("quantize_monotone needs a nondecreasing input".into()));
        }
        if g.values.iter().any(|&v| v < -tol || v > self.range + tol) {
            return Err(Error::ClassViolation(format!("values leave [0, {}]", self.range)));
        }
        if self.levels == 0 {
            return Ok(MonotoneCodeword { levels: vec![0; self.cells as usize] });
        }
        let means = g.cell_average(self.cells as usize)?;
        let scale = self.levels as f64 / self.range;
        let mut running = 0u64;
        let levels = means
            .values
            .iter()
            .map(|&v| {
                let l = (v * scale).round_ties_even().clamp(0.0, self.levels as f64) as u64;
                running = running.max(l);
                running
            })
            .collect();
        Ok(MonotoneCodeword { levels })
    }

    pub fn dequantize(&self, c: &MonotoneCodeword) -> StepFunction {
        let step = if self.levels == 0 { 0.0 } else { self.range / self.levels as f64 };
        StepFunction {
            length: self.length,
            values: c.levels.iter().map(|&l| l as f64 * step).collect(),
        }
    }

    pub fn rank(&self, c: &MonotoneCodeword) -> Result<BigUint> {
        if c.levels.len() as u64 != self.cells {
            return Err(Error::InvalidParams(format!(
                "codeword has {} cells, net has {}",
                c.levels.len(),
                self.cells
            )));
        }
        rank::colex_rank(&c.levels, self.levels)
    }

    pub fn unrank(&self, r: &BigUint) -> Result<MonotoneCodeword> {
        Ok(MonotoneCodeword { levels: rank::colex_unrank(r, self.cells, self.levels)? })
    }
}

/// Parameters of the two-part code for `{f : |f| <= M, TV(f) <= V}` on
/// `[0, Λ)` at L¹ accuracy `ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bv1dParams {
    pub length: f64,
    pub sup_bound: f64,
    pub tv_bound: f64,
    pub accuracy: f64,
}

impl Bv1dParams {
    /// Both parts share one net with range `(V + 2M)/2` and accuracy `ε/2`.
    pub fn net(&self) -> Result<MonotoneNet> {
        MonotoneNet::new(self.length, (self.tv_bound + 2.0 * self.sup_bound) / 2.0, self.accuracy / 2.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BvCodeword1d {
    pub plus: MonotoneCodeword,
    pub minus: MonotoneCodeword,
}

pub fn encode_bv_1d(f: &StepFunction, sup_bound: f64, tv_bound: f64, accuracy: f64) -> Result<(BvCodeword1d, Bv1dParams)> {
    let params = Bv1dParams { length: f.length, sup_bound, tv_bound, accuracy };
    let net = params.net()?;
    let tv = f.total_variation();
    if !leq_slack(tv, tv_bound) {
        return Err(Error::ClassViolation(format!("TV(f) = {tv} exceeds V = {tv_bound}")));
    }
    let (plus, minus) = f.jordan_decompose(sup_bound)?;
    Ok((
        BvCodeword1d { plus: net.quantize(&plus)?, minus: net.quantize(&minus)? },
        params,
    ))
}

/// Reconstruction `g_plus - g_minus` on the net's cells.
pub fn decode_bv_1d(c: &BvCodeword1d, params: &Bv1dParams) -> Result<StepFunction> {
    let net = params.net()?;
    let plus = net.dequantize(&c.plus);
    let minus = net.dequantize(&c.minus);
    if plus.cells() != minus.cells() || plus.cells() as u64 != net.cells {
        return Err(Error::Malformed("codeword parts do not match the net".into()));
    }
    StepFunction::new(
        params.length,
        plus.values.iter().zip(&minus.values).map(|(p, m)| p - m).collect(),
    )
}

/// `8 floor(L (M + V) / ε)`, valid for `0 < ε < L (M + V) / 6`.
pub fn entropy_bound_1d(length: f64, sup_bound: f64, tv_bound: f64, eps: f64) -> Result<u64> {
    let scale = length * (sup_bound + tv_bound);
    if !(eps > 0.0 && eps < scale / 6.0) {
        return Err(Error::OutOfRange(format!("eps = {eps} outside (0, {})", scale / 6.0)));
    }
    Ok(8 * floor_snap(scale / eps))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step(values: &[f64]) -> StepFunction {
        StepFunction::new(1.0, values.to_vec()).unwrap()
    }

    #[test]
    fn running_variation_examples() {
        assert_eq!(step(&[0.4; 5]).running_variation().values(), &[0.0; 5]);
        assert_eq!(step(&[1.0, 0.0]).running_variation().values(), &[0.0, 1.0]);
        let up = step(&[0.25, 0.5, 1.0, 1.0, 2.0]);
        let v = up.running_variation();
        for (a, b) in v.values().iter().zip(up.values()) {
            assert_eq!(*a, b - 0.25);
        }
    }

    #[test]
    fn jordan_examples() {
        let (p, m) = step(&[0.5, 0.5]).jordan_decompose(1.0).unwrap();
        assert_eq!(p.values(), &[0.75, 0.75]);
        assert_eq!(m.values(), &[0.25, 0.25]);

        let (p, m) = step(&[1.0, 0.0]).jordan_decompose(1.0).unwrap();
        assert_eq!(p.values(), &[1.0, 1.0]);
        assert_eq!(m.values(), &[0.0, 1.0]);

        let (_, m) = step(&[-0.5, 0.0, 0.5]).jordan_decompose(1.0).unwrap();
        assert!(m.values().iter().all(|&x| x == 0.75));

        assert!(matches!(step(&[2.0]).jordan_decompose(1.0), Err(Error::ClassViolation(_))));
    }

    #[test]
    fn net_params_examples() {
        let z = MonotoneNet::new(1.0, 0.0, 0.3).unwrap();
        assert_eq!((z.cells, z.levels), (1, 0));
        let a = MonotoneNet::new(1.0, 1.0, 0.5).unwrap();
        assert_eq!((a.cells, a.levels), (8, 8));
        let b = MonotoneNet::new(1.0, 1.0, 0.1).unwrap();
        assert_eq!((b.cells, b.levels), (40, 40));
        assert!(MonotoneNet::new(0.0, 1.0, 0.1).is_err());
        assert!(MonotoneNet::new(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn quantize_examples() {
        let net = MonotoneNet::new(1.0, 1.0, 0.5).unwrap();
        assert!(net.quantize(&step(&[0.0; 3])).unwrap().levels.iter().all(|&l| l == 0));
        assert!(net.quantize(&step(&[1.0; 5])).unwrap().levels.iter().all(|&l| l == 8));
        let ramp: Vec<f64> = (0..8).map(|i| i as f64 / 8.0).collect();
        let c = net.quantize(&step(&ramp)).unwrap();
        assert_eq!(c.levels, (0..8).collect::<Vec<u64>>());
        let back = net.dequantize(&c);
        assert!(back.l1_distance(&step(&ramp)).unwrap() <= 0.25);
        assert!(net.quantize(&step(&[0.5, 0.2])).is_err());
        assert!(net.quantize(&step(&[0.5, 1.5])).is_err());
    }

    #[test]
    fn dequantize_examples() {
        let net = MonotoneNet::new(1.0, 1.0, 0.5).unwrap();
        let zero = MonotoneCodeword { levels: vec![0; 8] };
        assert!(net.dequantize(&zero).values().iter().all(|&v| v == 0.0));
        let ramp = MonotoneCodeword { levels: (0..8).collect() };
        let d = net.dequantize(&ramp);
        assert!(d.values().windows(2).all(|w| (w[1] - w[0] - 0.125).abs() < 1e-15));
    }

    #[test]
    fn net_sizes() {
        let one = MonotoneNet { length: 1.0, range: 0.0, accuracy: 1.0, cells: 1, levels: 0 };
        assert_eq!(one.size(), BigUint::from(1u32));
        let two = MonotoneNet { length: 1.0, range: 1.0, accuracy: 1.0, cells: 2, levels: 1 };
        assert_eq!(two.size(), BigUint::from(3u32));
        let eight = MonotoneNet::new(1.0, 1.0, 0.5).unwrap();
        assert_eq!(eight.size(), BigUint::from(12870u32));
        assert_eq!(eight.size_bits(), 14);
    }

    #[test]
    fn bv_1d_examples() {
        let zero = StepFunction::constant(1.0, 4, 0.0).unwrap();
        let (c, p) = encode_bv_1d(&zero, 1.0, 1.0, 0.5).unwrap();
        assert_eq!(c.plus, c.minus);
        assert_eq!(decode_bv_1d(&c, &p).unwrap().l1_distance(&zero).unwrap(), 0.0);

        let f = step(&[1.0, 0.0]);
        let (c, p) = encode_bv_1d(&f, 1.0, 1.0, 0.5).unwrap();
        assert!(decode_bv_1d(&c, &p).unwrap().l1_distance(&f).unwrap() <= 0.5);

        assert!(encode_bv_1d(&step(&[1.0, -1.0]), 1.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn entropy_bound_examples() {
        assert_eq!(entropy_bound_1d(1.0, 1.0, 1.0, 0.1).unwrap(), 160);
        assert_eq!(entropy_bound_1d(1.0, 1.0, 1.0, 0.3).unwrap(), 48);
        assert!(entropy_bound_1d(1.0, 1.0, 1.0, 2.0 / 6.0 + 1e-12).is_err());
        // 1/3 is exactly L(M+V)/6 here, so it is excluded
        assert!(entropy_bound_1d(1.0, 1.0, 1.0, 1.0 / 3.0).is_err());
        let edge = 1.0 * (1.0 + 1.0) / 6.0;
        assert!(matches!(entropy_bound_1d(1.0, 1.0, 1.0, edge), Err(Error::OutOfRange(_))));
    }
}
