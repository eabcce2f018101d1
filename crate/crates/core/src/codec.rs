//! Encoder/decoder for grid BV functions with certified L¹ distortion.
//!
//! `u` is averaged onto the `N`-grid, flattened along the snake order and
//! coded by the two-part monotone code at 1-D accuracy `2ε'`. Averaging
//! costs at most `L√n V / N < ε/2` and the 1-D code at most
//! `2ε' (L/N)^(n-1) = ε/2`, so the reconstruction is within `ε` of `u`.
//!
//! # Stream layout
//!
//! ```text
//! "BVE1" | n: u8 | N: u32 | L, M, V, ε: f64 | (len: u32, rank: big-endian bytes) x 2
//! ```
//!
//! All fixed-width fields are little-endian. Ranks are minimal big-endian
//! magnitudes (zero has length 0); the first part is the `plus` codeword.

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::grid_fn::{cell_count, BvClass, GridFunction};
use crate::jordan::{decode_bv_1d, encode_bv_1d, Bv1dParams, BvCodeword1d, MonotoneNet, StepFunction};
use crate::numeric::floor_snap;
use crate::snake::{select_upper_params, validity_check, SnakeOrder, UpperParams};

pub const MAGIC: &[u8; 4] = b"BVE1";
const HEADER_LEN: usize = 4 + 1 + 4 + 4 * 8;

#[derive(Debug, Clone, PartialEq)]
pub struct EncodedBv {
    class: BvClass,
    eps: f64,
    upper: UpperParams,
    code: Bv1dParams,
    codeword: BvCodeword1d,
}

fn code_params(class: &BvClass, upper: &UpperParams) -> Bv1dParams {
    Bv1dParams {
        length: upper.length,
        sup_bound: class.sup_bound,
        tv_bound: upper.tv_budget,
        accuracy: 2.0 * upper.eps_prime,
    }
}

fn checked_upper(class: &BvClass, eps: f64) -> Result<UpperParams> {
    if !validity_check(class, eps) {
        return Err(Error::OutOfRange(format!("eps = {eps} outside (0, {})", class.max_eps())));
    }
    let upper = select_upper_params(class, eps)?;
    cell_count(class.dim, upper.cells)
        .ok_or_else(|| Error::OutOfRange(format!("{}^{} cells overflow", upper.cells, class.dim)))?;
    Ok(upper)
}

pub fn encode(u: &GridFunction, class: &BvClass, eps: f64) -> Result<EncodedBv> {
    let upper = checked_upper(class, eps)?;
    let report = u.class_membership(class)?;
    if !report.member {
        return Err(Error::ClassViolation(format!(
            "sup = {}, TV = {} against M = {}, V = {}",
            report.sup_norm, report.total_variation, class.sup_bound, class.tv_bound
        )));
    }
    let averaged = u.cell_average(upper.cells)?;
    let snake = SnakeOrder::new(class.dim, upper.cells)?;
    let flat = snake.flatten(&averaged)?;
    let code = code_params(class, &upper);
    let (codeword, _) = encode_bv_1d(&flat, code.sup_bound, code.tv_bound, code.accuracy)?;
    Ok(EncodedBv { class: *class, eps, upper, code, codeword })
}

/// Reconstruction clamped to `[-M, M]`.
pub fn decode(c: &EncodedBv) -> Result<GridFunction> {
    let m = c.class.sup_bound;
    decode_unclamped(c)?.map(|v| v.clamp(-m, m))
}

/// Raw reconstruction before clamping; quantization may overshoot `M` by
/// up to one level.
pub fn decode_unclamped(c: &EncodedBv) -> Result<GridFunction> {
    let line = decode_bv_1d(&c.codeword, &c.code)?;
    let cells = c.grid_len();
    let line: StepFunction = line.cell_average(cells)?;
    let snake = SnakeOrder::new(c.class.dim, c.upper.cells)?;
    snake.unflatten(&line, c.class.side)
}

/// Payload bits: `sum over both parts of ceil(log2 C(k + m, m))`.
pub fn bit_length(c: &EncodedBv) -> u64 {
    2 * c.net().size_bits()
}

/// Printed bit budgets at accuracy `ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BitBudget {
    /// `8 floor(L_N (β_N + 2M) / ε')`.
    pub lemma_bits: u64,
    /// `Γ / ε^n`.
    pub gamma_bits: f64,
}

pub fn theoretical_bit_budget(class: &BvClass, eps: f64) -> Result<BitBudget> {
    let upper = checked_upper(class, eps)?;
    let lemma = floor_snap(upper.length * (upper.tv_budget + 2.0 * class.sup_bound) / upper.eps_prime);
    Ok(BitBudget {
        lemma_bits: 8 * lemma,
        gamma_bits: crate::snake::gamma_constant(class) / eps.powi(class.dim as i32),
    })
}

/// Payload bits the encoder spends at accuracy `ε`, without encoding.
pub fn planned_bit_length(class: &BvClass, eps: f64) -> Result<u64> {
    let upper = checked_upper(class, eps)?;
    Ok(2 * code_params(class, &upper).net()?.size_bits())
}

impl EncodedBv {
    pub fn class(&self) -> &BvClass {
        &self.class
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn upper(&self) -> &UpperParams {
        &self.upper
    }

    /// Cells per axis of the reconstruction.
    pub fn cells(&self) -> usize {
        self.upper.cells
    }

    pub fn eps_prime(&self) -> f64 {
        self.upper.eps_prime
    }

    pub fn codeword(&self) -> &BvCodeword1d {
        &self.codeword
    }

    pub fn code_params(&self) -> &Bv1dParams {
        &self.code
    }

    pub fn net(&self) -> MonotoneNet {
        self.code.net().expect("validated at construction")
    }

    fn grid_len(&self) -> usize {
        cell_count(self.class.dim, self.upper.cells).expect("validated at construction")
    }

    /// Colex ranks of the `plus` and `minus` codewords.
    pub fn ranks(&self) -> Result<(BigUint, BigUint)> {
        let net = self.net();
        Ok((net.rank(&self.codeword.plus)?, net.rank(&self.codeword.minus)?))
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let dim = u8::try_from(self.class.dim)
            .map_err(|_| Error::OutOfRange("dimension does not fit the stream header".into()))?;
        let cells = u32::try_from(self.upper.cells)
            .map_err(|_| Error::OutOfRange("resolution does not fit the stream header".into()))?;
        let (plus, minus) = self.ranks()?;
        let mut out = Vec::with_capacity(HEADER_LEN + 8 + (self.net().size_bits() as usize / 4));
        out.extend_from_slice(MAGIC);
        out.push(dim);
        out.extend_from_slice(&cells.to_le_bytes());
        for x in [self.class.side, self.class.sup_bound, self.class.tv_bound, self.eps] {
            out.extend_from_slice(&x.to_le_bytes());
        }
        for r in [plus, minus] {
            let bytes = if r.bits() == 0 { Vec::new() } else { r.to_bytes_be() };
            let len = u32::try_from(bytes.len()).map_err(|_| Error::OutOfRange("rank too long".into()))?;
            out.extend_from_slice(&len.to_le_bytes());
            out.extend_from_slice(&bytes);
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Malformed("unknown magic".into()));
        }
        let dim = r.take(1)?[0] as usize;
        let cells = u32::from_le_bytes(r.take(4)?.try_into().unwrap()) as usize;
        let mut f = [0.0f64; 4];
        for x in f.iter_mut() {
            *x = f64::from_le_bytes(r.take(8)?.try_into().unwrap());
        }
        let [side, sup_bound, tv_bound, eps] = f;
        let class = BvClass::new(dim, side, sup_bound, tv_bound).map_err(|e| Error::Malformed(e.to_string()))?;
        let upper = checked_upper(&class, eps).map_err(|e| Error::Malformed(e.to_string()))?;
        if upper.cells != cells {
            return Err(Error::Malformed(format!(
                "header resolution {cells} does not match {} implied by (n, L, V, eps)",
                upper.cells
            )));
        }
        let code = code_params(&class, &upper);
        let net = code.net().map_err(|e| Error::Malformed(e.to_string()))?;
        let mut parts = Vec::with_capacity(2);
        for _ in 0..2 {
            let len = u32::from_le_bytes(r.take(4)?.try_into().unwrap()) as usize;
            let mag = r.take(len)?;
            if mag.first() == Some(&0) {
                return Err(Error::Malformed("rank has leading zero bytes".into()));
            }
            let rank = BigUint::from_bytes_be(mag);
            parts.push(net.unrank(&rank)?);
        }
        if r.pos != bytes.len() {
            return Err(Error::Malformed(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        let minus = parts.pop().unwrap();
        let plus = parts.pop().unwrap();
        Ok(Self { class, eps, upper, code, codeword: BvCodeword1d { plus, minus } })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Malformed("truncated stream".into()))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_round_trips_exactly() {
        let class = BvClass::unit(2);
        let u = GridFunction::zero(2, 1.0).unwrap();
        let c = encode(&u, &class, 0.1).unwrap();
        let d = decode(&c).unwrap();
        assert_eq!(d.cells(), c.cells());
        assert_eq!(d.l1_distance(&u).unwrap(), 0.0);
    }

    #[test]
    fn half_indicator_within_eps() {
        let class = BvClass::unit(1);
        let u = GridFunction::new(1, 1.0, 2, vec![0.0, 1.0]).unwrap();
        let c = encode(&u, &class, 0.1).unwrap();
        assert_eq!(c.cells(), 21);
        let d = decode(&c).unwrap();
        assert!(u.l1_distance(&d).unwrap() <= 0.1);
        assert!(d.sup_norm() <= 1.0);
    }

    #[test]
    fn header_preserved() {
        let class = BvClass::new(2, 0.5, 1.0, 0.75).unwrap();
        let u = GridFunction::constant(2, 0.5, 3, -0.25).unwrap();
        let c = encode(&u, &class, 0.02).unwrap();
        let d = decode(&c).unwrap();
        assert_eq!((d.dim(), d.side(), d.cells()), (2, 0.5, c.cells()));
    }

    #[test]
    fn rejects_bad_inputs() {
        let class = BvClass::unit(1);
        let u = GridFunction::new(1, 1.0, 2, vec![0.0, 1.0]).unwrap();
        assert!(matches!(encode(&u, &class, 0.2), Err(Error::OutOfRange(_))));
        let big = GridFunction::new(1, 1.0, 2, vec![0.0, 2.0]).unwrap();
        assert!(matches!(encode(&big, &class, 0.1), Err(Error::ClassViolation(_))));
    }

    #[test]
    fn budget_examples() {
        let b = theoretical_bit_budget(&BvClass::unit(1), 0.1).unwrap();
        assert_eq!(b.lemma_bits, 1280);
        assert!((b.gamma_bits - 650.0).abs() < 1e-9);
        let half = theoretical_bit_budget(&BvClass::unit(2), 0.1).unwrap();
        let quarter = theoretical_bit_budget(&BvClass::unit(2), 0.05).unwrap();
        assert!((quarter.gamma_bits / half.gamma_bits - 4.0).abs() < 1e-9);
    }

    #[test]
    fn stream_round_trip_and_rejections() {
        let class = BvClass::unit(1);
        let u = crate::grid_fn::random_bv(&class, 8, 3);
        let c = encode(&u, &class, 0.1).unwrap();
        let bytes = c.to_bytes().unwrap();
        let back = EncodedBv::from_bytes(&bytes).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_bytes().unwrap(), bytes);

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(EncodedBv::from_bytes(&bad), Err(Error::Malformed(_))));
        let mut long = bytes.clone();
        long.push(0);
        assert!(matches!(EncodedBv::from_bytes(&long), Err(Error::Malformed(_))));
        assert!(EncodedBv::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut wrong_n = bytes.clone();
        wrong_n[5] ^= 1;
        assert!(matches!(EncodedBv::from_bytes(&wrong_n), Err(Error::Malformed(_))));
    }
}
