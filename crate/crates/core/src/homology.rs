//! Betti numbers of small static complexes by direct rank computation over
//! GF(2). Independent of the persistence reduction; used as an oracle and
//! inside the component indicators.

use crate::geometry::dist2;
use crate::miniball::simplex_value;

/// Rank over GF(2) of the matrix whose columns are bitsets over `rows` rows.
pub fn rank_gf2(rows: usize, columns: &[Vec<u64>]) -> usize {
    let words = rows.div_ceil(64).max(1);
    let mut basis: Vec<Option<Vec<u64>>> = vec![None; rows];
    let mut rank = 0;
    for col in columns {
        let mut v = col.clone();
        v.resize(words, 0);
        loop {
            let Some(lead) = leading_bit(&v) else { break };
            match &basis[lead] {
                Some(b) => v.iter_mut().zip(b).for_each(|(x, y)| *x ^= y),
                None => {
                    basis[lead] = Some(v);
                    rank += 1;
                    break;
                }
            }
        }
    }
    rank
}

fn leading_bit(v: &[u64]) -> Option<usize> {
    v.iter()
        .enumerate()
        .rev()
        .find(|(_, w)| **w != 0)
        .map(|(i, w)| i * 64 + 63 - w.leading_zeros() as usize)
}

/// Rank of the boundary map from the simplices in `upper` to those in `lower`.
/// Both lists hold sorted vertex lists; `lower` must contain every facet.
fn boundary_rank(lower: &[Vec<usize>], upper: &[Vec<usize>]) -> usize {
    if upper.is_empty() || lower.is_empty() {
        return 0;
    }
    let index: std::collections::HashMap<&[usize], usize> =
        lower.iter().enumerate().map(|(i, s)| (s.as_slice(), i)).collect();
    let words = lower.len().div_ceil(64);
    let cols: Vec<Vec<u64>> = upper
        .iter()
        .map(|s| {
            let mut col = vec![0u64; words];
            let mut face = Vec::with_capacity(s.len() - 1);
            for skip in 0..s.len() {
                face.clear();
                face.extend(s.iter().enumerate().filter(|(j, _)| *j != skip).map(|(_, v)| *v));
                let r = index[face.as_slice()];
                col[r / 64] ^= 1 << (r % 64);
            }
            col
        })
        .collect();
    rank_gf2(lower.len(), &cols)
}

/// `beta_k` of the complex given by its simplices grouped by dimension
/// (`by_dim[p]` lists the p-simplices). Missing dimensions count as empty.
pub fn betti_from_simplices(by_dim: &[Vec<Vec<usize>>], k: usize) -> usize {
    let empty = Vec::new();
    let get = |p: usize| by_dim.get(p).unwrap_or(&empty);
    let n_k = get(k).len();
    let rank_k = if k == 0 { 0 } else { boundary_rank(get(k - 1), get(k)) };
    let rank_k1 = boundary_rank(get(k), get(k + 1));
    n_k - rank_k - rank_k1
}

/// Simplices of dimension `0..=max_dim` of the Čech complex at parameter `t`
/// (balls of radius `t/2`), grouped by dimension.
pub fn cech_simplices(points: &[&[f64]], t: f64, max_dim: usize) -> Vec<Vec<Vec<usize>>> {
    let n = points.len();
    let mut by_dim: Vec<Vec<Vec<usize>>> = vec![Vec::new(); max_dim + 1];
    by_dim[0] = (0..n).map(|v| vec![v]).collect();
    if max_dim == 0 || !(t >= 0.0) {
        return by_dim;
    }
    let mut adj = vec![0u64; n];
    for a in 0..n {
        for b in a + 1..n {
            if dist2(points[a], points[b]).sqrt() <= t {
                adj[a] |= 1 << b;
                adj[b] |= 1 << a;
                by_dim[1].push(vec![a, b]);
            }
        }
    }
    for p in 2..=max_dim {
        let mut next = Vec::new();
        for s in &by_dim[p - 1] {
            let last = *s.last().unwrap();
            let common = s.iter().fold(u64::MAX, |m, &v| m & adj[v]);
            for w in last + 1..n {
                if common >> w & 1 == 1 {
                    let mut verts = s.clone();
                    verts.push(w);
                    let pts: Vec<&[f64]> = verts.iter().map(|&v| points[v]).collect();
                    if simplex_value(&pts).map(|v| v <= t).unwrap_or(false) {
                        next.push(verts);
                    }
                }
            }
        }
        by_dim[p] = next;
    }
    by_dim
}

/// `beta_k` of the Čech complex of at most 64 points at parameter `t`.
pub fn cech_betti(points: &[&[f64]], t: f64, k: usize) -> usize {
    assert!(points.len() <= 64, "direct Betti computation supports at most 64 points");
    betti_from_simplices(&cech_simplices(points, t, k + 1), k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_of_small_matrices() {
        assert_eq!(rank_gf2(3, &[vec![0b011], vec![0b110], vec![0b101]]), 2);
        assert_eq!(rank_gf2(3, &[vec![0b001], vec![0b010], vec![0b100]]), 3);
        assert_eq!(rank_gf2(3, &[]), 0);
    }

    #[test]
    fn hollow_and_filled_triangle() {
        let h = 3f64.sqrt() / 2.0;
        let pts = [[0.0, 0.0], [1.0, 0.0], [0.5, h]];
        let r: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        assert_eq!(cech_betti(&r, 0.99, 1), 0);
        assert_eq!(cech_betti(&r, 1.0, 1), 1);
        assert_eq!(cech_betti(&r, 1.1, 1), 1);
        assert_eq!(cech_betti(&r, 1.16, 1), 0);
        assert_eq!(cech_betti(&r, 0.5, 0), 3);
        assert_eq!(cech_betti(&r, 1.0, 0), 1);
    }

    #[test]
    fn square_has_one_hole_between_side_and_diagonal() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let r: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        assert_eq!(cech_betti(&r, 1.1, 1), 1);
        assert_eq!(cech_betti(&r, 1.5, 1), 0);
    }

    #[test]
    fn two_disjoint_holes() {
        let pts = [
            [0.0, 0.0],
            [1.0, 0.0],
            [1.0, 1.0],
            [0.0, 1.0],
            [10.0, 0.0],
            [11.0, 0.0],
            [11.0, 1.0],
            [10.0, 1.0],
        ];
        let r: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        assert_eq!(cech_betti(&r, 1.2, 1), 2);
        assert_eq!(cech_betti(&r, 1.2, 0), 2);
    }
}
