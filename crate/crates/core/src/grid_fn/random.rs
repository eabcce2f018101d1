use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{cell_count, BvClass, GridFunction};

/// Deterministic pseudo-random member of `class` at resolution `cells`.
///
/// Raw values come from one of a few shapes (boxes, noise, ramps, a
/// constant) and are then rescaled so that both `sup |u| <= M` and
/// `TV(u) <= V` hold; most draws saturate one of the two budgets.
pub fn random_bv(class: &BvClass, cells: usize, seed: u64) -> GridFunction {
    let dim = class.dim;
    let len = cell_count(dim, cells).expect("random_bv: grid too large");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = vec![0.0f64; len];

    let shape = rng.gen_range(0..4u8);
    match shape {
        0 => {
            let boxes = rng.gen_range(1..=4);
            for _ in 0..boxes {
                let lo: Vec<usize> = (0..dim).map(|_| rng.gen_range(0..cells)).collect();
                let hi: Vec<usize> = lo.iter().map(|&l| rng.gen_range(l..cells) + 1).collect();
                let height: f64 = rng.gen_range(-1.0..1.0);
                for (flat, v) in values.iter_mut().enumerate() {
                    let mut rest = flat;
                    let inside = (0..dim).all(|k| {
                        let c = rest % cells;
                        rest /= cells;
                        c >= lo[k] && c < hi[k]
                    });
                    if inside {
                        *v += height;
                    }
                }
            }
        }
        1 => {
            for v in values.iter_mut() {
                *v = rng.gen_range(-1.0..1.0);
            }
        }
        2 => {
            let slopes: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let freq: f64 = rng.gen_range(0.5..3.0);
            let offset: f64 = rng.gen_range(-0.5..0.5);
            for (flat, v) in values.iter_mut().enumerate() {
                let mut rest = flat;
                let mut t = offset;
                for s in &slopes {
                    let x = (rest % cells) as f64 / cells as f64;
                    rest /= cells;
                    t += s * x;
                }
                *v = (freq * t * std::f64::consts::PI).sin();
            }
        }
        _ => {
            let c: f64 = rng.gen_range(-1.0..1.0);
            values.iter_mut().for_each(|v| *v = c);
        }
    }

    let raw = GridFunction::new(dim, class.side, cells, values).expect("finite values");
    let sup = raw.sup_norm();
    let tv = raw.total_variation();
    let mut scale = f64::INFINITY;
    if sup > 0.0 {
        scale = scale.min(class.sup_bound / sup);
    }
    if tv > 0.0 {
        scale = scale.min(class.tv_bound / tv);
    }
    if !scale.is_finite() {
        return raw;
    }
    if rng.gen_bool(0.25) {
        scale *= rng.gen_range(0.2..1.0);
    }
    loop {
        let u = raw.map(|v| v * scale).expect("finite values");
        if u.class_membership(class).expect("same domain").member {
            return u;
        }
        scale *= 1.0 - 1e-12;
    }
}
