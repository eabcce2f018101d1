//! Colexicographic ranking of nondecreasing level sequences.
//!
//! A sequence `0 <= l_0 <= ... <= l_(k-1) <= m` corresponds to the k-subset
//! `{l_i + i}` of `{0, ..., k+m-1}`; its colex rank is `sum_i C(l_i + i, i+1)`.
//! Ranks cover `0 .. C(k+m, k)` exactly. Both directions walk the binomial
//! lattice with one small multiply and one exact small divide per step, so
//! the cost is quadratic in `k + m` word operations.

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::numeric::binomial;

/// Number of nondecreasing sequences of length `k` with entries in `0..=m`.
pub fn sequence_count(k: u64, m: u64) -> BigUint {
    binomial(k + m, k)
}

pub fn colex_rank(levels: &[u64], m: u64) -> Result<BigUint> {
    let mut prev = 0u64;
    for &l in levels {
        if l < prev || l > m {
            return Err(Error::InvalidParams(format!("level {l} breaks monotonicity or exceeds {m}")));
        }
        prev = l;
    }
    let mut rank = BigUint::zero();
    // d tracks C(p, s) with s = number of ones placed before position p
    let mut d = BigUint::one();
    let mut p = 0u64;
    let mut s = 0u64;
    for (i, &l) in levels.iter().enumerate() {
        let i = i as u64;
        let c = l + i;
        while p < c {
            if p + 1 == s {
                d = BigUint::one();
            } else {
                d *= p + 1;
                d /= p + 1 - s;
            }
            p += 1;
        }
        let mut term = d;
        term *= c - i;
        term /= i + 1;
        rank += &term;
        d = term;
        s = i + 1;
    }
    Ok(rank)
}

pub fn colex_unrank(rank: &BigUint, k: u64, m: u64) -> Result<Vec<u64>> {
    if k == 0 {
        return if rank.is_zero() {
            Ok(Vec::new())
        } else {
            Err(Error::Malformed("nonzero rank for empty sequence".into()))
        };
    }
    let total = sequence_count(k, m);
    if rank >= &total {
        return Err(Error::Malformed(format!(
            "rank has {} bits but only {} sequences exist",
            rank.bits(),
            total
        )));
    }
    let mut p = k + m - 1;
    let mut t = k;
    // C(k+m-1, k) = C(k+m, k) * m / (k+m)
    let mut b = total * m / (k + m);
    let mut r = rank.clone();
    let mut out = vec![0u64; k as usize];
    for i in (0..k).rev() {
        while b > r {
            b *= p - t;
            b /= p;
            p -= 1;
        }
        out[i as usize] = p - i;
        r -= &b;
        if i == 0 {
            break;
        }
        b *= t;
        b /= p;
        p -= 1;
        t -= 1;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// All nondecreasing sequences, sorted in colex order of their subsets.
    fn colex_enumeration(k: usize, m: u64) -> Vec<Vec<u64>> {
        let mut all = vec![vec![]];
        for _ in 0..k {
            let mut next = Vec::new();
            for seq in &all {
                let lo = seq.last().copied().unwrap_or(0);
                for l in lo..=m {
                    let mut s: Vec<u64> = seq.clone();
                    s.push(l);
                    next.push(s);
                }
            }
            all = next;
        }
        all.sort_by_key(|s| {
            let mut key: Vec<u64> = s.iter().enumerate().map(|(i, &l)| l + i as u64).collect();
            key.reverse();
            key
        });
        all
    }

    #[test]
    fn rank_matches_enumeration() {
        for k in 1..=5usize {
            for m in 0..=5u64 {
                let seqs = colex_enumeration(k, m);
                assert_eq!(BigUint::from(seqs.len()), sequence_count(k as u64, m));
                for (idx, s) in seqs.iter().enumerate() {
                    let r = colex_rank(s, m).unwrap();
                    assert_eq!(r, BigUint::from(idx), "k={k} m={m} seq={s:?}");
                    assert_eq!(&colex_unrank(&r, k as u64, m).unwrap(), s);
                }
            }
        }
    }

    #[test]
    fn small_counts() {
        assert_eq!(sequence_count(1, 0), BigUint::one());
        assert_eq!(sequence_count(2, 1), BigUint::from(3u32));
        assert_eq!(sequence_count(8, 8), BigUint::from(12870u32));
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(colex_rank(&[2, 1], 3).is_err());
        assert!(colex_rank(&[0, 4], 3).is_err());
        assert!(colex_unrank(&BigUint::from(3u32), 2, 1).is_err());
    }

    #[test]
    fn extremes_round_trip_at_scale() {
        let k = 300u64;
        let m = 300u64;
        let zeros = vec![0u64; k as usize];
        let tops = vec![m; k as usize];
        assert!(colex_rank(&zeros, m).unwrap().is_zero());
        let top = colex_rank(&tops, m).unwrap();
        assert_eq!(top + 1u32, sequence_count(k, m));
        let ramp: Vec<u64> = (0..k).collect();
        let r = colex_rank(&ramp, m).unwrap();
        assert_eq!(colex_unrank(&r, k, m).unwrap(), ramp);
    }
}
