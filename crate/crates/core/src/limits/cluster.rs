//! Importance proposal for connected configurations: random recursive trees
//! with edges of bounded length, and their exact proposal density.

use crate::geometry::{ball_volume, dist2, uniform_in_ball};
use rand::seq::SliceRandom;
use rand::Rng;

/// Places `m` free points as a random recursive tree hanging off `root`:
/// the points are visited in a uniformly random order and each is drawn
/// uniformly from the ball of radius `r` around a uniformly chosen earlier
/// point (the root included). Writes `m * d` coordinates into `out`.
pub fn sample_tree<R: Rng + ?Sized>(rng: &mut R, root: &[f64], m: usize, r: f64, out: &mut [f64]) {
    let d = root.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(rng);
    let mut center = vec![0.0; d];
    for q in 0..m {
        let parent = rng.random_range(0..=q);
        if parent == 0 {
            center.copy_from_slice(root);
        } else {
            let p = order[parent - 1];
            center.copy_from_slice(&out[p * d..(p + 1) * d]);
        }
        let v = order[q];
        uniform_in_ball(rng, &center, r, &mut out[v * d..(v + 1) * d]);
    }
}

/// Density of [`sample_tree`] at the free points `free` (flat, `m * d`),
/// computed exactly by summing over insertion orders with a subset recursion.
pub fn tree_density(root: &[f64], free: &[f64], r: f64) -> f64 {
    let d = root.len();
    let m = free.len() / d;
    if m == 0 {
        return 1.0;
    }
    assert!(m < 20, "tree density supports fewer than 20 free points");
    let r2 = r * r;
    let point = |v: usize| &free[v * d..(v + 1) * d];
    let mut adj = vec![0u32; m];
    let mut near_root = vec![0u32; m];
    for a in 0..m {
        near_root[a] = (dist2(point(a), root) <= r2) as u32;
        for b in a + 1..m {
            if dist2(point(a), point(b)) <= r2 {
                adj[a] |= 1 << b;
                adj[b] |= 1 << a;
            }
        }
    }
    let cell = ball_volume(d) * r.powi(d as i32);
    let full = (1usize << m) - 1;
    let mut g = vec![0.0f64; full + 1];
    g[0] = 1.0;
    for set in 1..=full {
        let size = (set as u32).count_ones();
        let mut acc = 0.0;
        let mut rest = set;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let prev = set & !(1 << v);
            if g[prev] == 0.0 {
                continue;
            }
            let links = (adj[v] & prev as u32).count_ones() + near_root[v];
            acc += g[prev] * links as f64;
        }
        g[set] = acc / (size as f64 * cell);
    }
    let orders: f64 = (1..=m).map(|x| x as f64).product();
    g[full] / orders
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::SeedRecord;
    use std::f64::consts::PI;

    #[test]
    fn single_point_density_is_uniform() {
        let q = tree_density(&[0.0, 0.0], &[0.3, 0.1], 1.0);
        assert!((q - 1.0 / PI).abs() < 1e-15);
        assert_eq!(tree_density(&[0.0, 0.0], &[1.3, 0.1], 1.0), 0.0);
    }

    #[test]
    fn two_point_density_by_hand() {
        // Orders (a, b) and (b, a), each with probability 1/2; parents uniform.
        let root = [0.0, 0.0];
        let free = [0.5, 0.0, 1.2, 0.0];
        let c = PI;
        // a near root, b near a only: order (a, b): (1/c) * (1/2)(1/c); order (b, a): b not near root -> 0.
        let expected = 0.5 * (1.0 / c) * (0.5 / c);
        assert!((tree_density(&root, &free, 1.0) - expected).abs() < 1e-15);
    }

    #[test]
    fn density_integrates_to_one() {
        // E_uniform-box[q] * box volume = 1, checked by Monte Carlo over a box
        // containing the support (free points within 3 of the origin).
        let mut rng = SeedRecord::new(2).rng();
        let n = 400_000;
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        let mut free = [0.0; 6];
        for _ in 0..n {
            for x in free.iter_mut() {
                *x = rng.random_range(-3.0..3.0);
            }
            let q = tree_density(&[0.0, 0.0], &free, 1.0);
            sum += q;
            sum2 += q * q;
        }
        let vol = 6f64.powi(6);
        let mean = sum / n as f64;
        let se = ((sum2 / n as f64 - mean * mean) / n as f64).sqrt();
        assert!((mean * vol - 1.0).abs() <= 4.0 * se * vol, "{} ± {}", mean * vol, se * vol);
    }

    #[test]
    fn samples_lie_in_support() {
        let mut rng = SeedRecord::new(4).rng();
        let mut out = [0.0; 8];
        for _ in 0..1000 {
            sample_tree(&mut rng, &[1.0, 1.0], 4, 0.7, &mut out);
            assert!(tree_density(&[1.0, 1.0], &out, 0.7) > 0.0);
        }
    }
}
