//! Common refinement of two uniform partitions of `[0, L]`.
//!
//! Both partitions are expressed in units of `L / lcm(a, b)`, so every piece
//! boundary is an exact integer and no rational overlaps are ever formed.

use crate::numeric::lcm;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Piece {
    /// Cell index in the first partition.
    pub a: usize,
    /// Cell index in the second partition.
    pub b: usize,
    /// Length in refinement units.
    pub units: u64,
}

#[derive(Debug, Clone)]
pub(crate) struct AxisOverlay {
    pub pieces: Vec<Piece>,
    /// Refinement resolution `lcm(a, b)`.
    pub resolution: u64,
}

impl AxisOverlay {
    pub fn new(a: usize, b: usize) -> Self {
        let resolution = lcm(a as u64, b as u64);
        let step_a = resolution / a as u64;
        let step_b = resolution / b as u64;
        let mut pieces = Vec::with_capacity(a + b);
        let (mut i, mut j) = (0usize, 0usize);
        let mut pos = 0u64;
        while pos < resolution {
            let end_a = (i as u64 + 1) * step_a;
            let end_b = (j as u64 + 1) * step_b;
            let end = end_a.min(end_b);
            pieces.push(Piece { a: i, b: j, units: end - pos });
            pos = end;
            if end == end_a {
                i += 1;
            }
            if end == end_b {
                j += 1;
            }
        }
        Self { pieces, resolution }
    }

    /// Length of one refinement unit on an axis of length `side`.
    pub fn unit(&self, side: f64) -> f64 {
        side / self.resolution as f64
    }
}

/// Visits every n-dimensional piece of the product overlay in ascending
/// order (axis 1 fastest). The callback gets the piece multi-index, the flat
/// indices in both grids and the piece volume in refinement units.
pub(crate) fn for_each_piece<F>(ov: &AxisOverlay, dim: usize, na: usize, nb: usize, mut f: F)
where
    F: FnMut(&[usize], usize, usize, f64),
{
    let count = ov.pieces.len();
    let mut idx = vec![0usize; dim];
    loop {
        let mut flat_a = 0usize;
        let mut flat_b = 0usize;
        let mut units = 1.0f64;
        for k in (0..dim).rev() {
            let p = ov.pieces[idx[k]];
            flat_a = flat_a * na + p.a;
            flat_b = flat_b * nb + p.b;
            units *= p.units as f64;
        }
        f(&idx, flat_a, flat_b, units);

        let mut k = 0;
        loop {
            if k == dim {
                return;
            }
            idx[k] += 1;
            if idx[k] < count {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pieces_cover_both_partitions() {
        let ov = AxisOverlay::new(2, 3);
        assert_eq!(ov.resolution, 6);
        let got: Vec<_> = ov.pieces.iter().map(|p| (p.a, p.b, p.units)).collect();
        assert_eq!(got, vec![(0, 0, 2), (0, 1, 1), (1, 1, 1), (1, 2, 2)]);
    }

    #[test]
    fn identical_partitions_give_unit_pieces() {
        let ov = AxisOverlay::new(4, 4);
        assert_eq!(ov.pieces.len(), 4);
        assert!(ov.pieces.iter().enumerate().all(|(i, p)| p.a == i && p.b == i && p.units == 1));
    }

    #[test]
    fn product_volume_is_total() {
        let ov = AxisOverlay::new(3, 5);
        let mut total = 0.0;
        let mut visits = 0;
        for_each_piece(&ov, 2, 3, 5, |_, _, _, w| {
            total += w;
            visits += 1;
        });
        assert_eq!(visits, ov.pieces.len().pow(2));
        assert_eq!(total, (ov.resolution * ov.resolution) as f64);
    }
}
