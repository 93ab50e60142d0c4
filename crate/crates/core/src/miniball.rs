//! Smallest enclosing balls of small point sets (move-to-front Welzl).

use crate::error::{Error, Result};
use crate::geometry::dist2;

/// Closed Euclidean ball.
#[derive(Clone, Debug, PartialEq)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn contains(&self, p: &[f64], tol: f64) -> bool {
        dist2(&self.center, p).sqrt() <= self.radius + tol
    }
}

const PIVOT_TOL: f64 = 1e-12;
const CONTAIN_TOL: f64 = 1e-12;

/// Smallest ball whose boundary passes through every point of `support`,
/// restricted to their affine hull. Affinely dependent points are dropped.
pub fn circumball(support: &[&[f64]]) -> Ball {
    let p0 = support[0];
    let d = p0.len();
    let m = support.len() - 1;
    if m == 0 {
        return Ball {
            center: p0.to_vec(),
            radius: 0.0,
        };
    }
    let vs: Vec<Vec<f64>> = support[1..]
        .iter()
        .map(|p| p.iter().zip(p0).map(|(a, b)| a - b).collect())
        .collect();
    // Gram system G lambda = b, center = p0 + sum lambda_j v_j.
    let mut g = vec![vec![0.0; m + 1]; m];
    let mut scale = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            g[i][j] = vs[i].iter().zip(&vs[j]).map(|(a, b)| a * b).sum();
        }
        g[i][m] = 0.5 * g[i][i];
        scale = scale.max(g[i][i]);
    }
    let mut active = vec![true; m];
    let mut pivot_of_col = vec![usize::MAX; m];
    let mut used_row = vec![false; m];
    for col in 0..m {
        let best = (0..m)
            .filter(|&r| !used_row[r])
            .max_by(|&a, &b| g[a][col].abs().total_cmp(&g[b][col].abs()));
        let Some(r) = best else {
            active[col] = false;
            continue;
        };
        if g[r][col].abs() <= PIVOT_TOL * scale.max(f64::MIN_POSITIVE) {
            active[col] = false;
            continue;
        }
        used_row[r] = true;
        pivot_of_col[col] = r;
        for rr in 0..m {
            if rr != r {
                let f = g[rr][col] / g[r][col];
                if f != 0.0 {
                    for c in col..=m {
                        g[rr][c] -= f * g[r][c];
                    }
                }
            }
        }
    }
    let mut center = p0.to_vec();
    for col in 0..m {
        if !active[col] {
            continue;
        }
        let r = pivot_of_col[col];
        let lambda = g[r][m] / g[r][col];
        for (c, v) in center.iter_mut().zip(&vs[col]) {
            *c += lambda * v;
        }
    }
    debug_assert_eq!(center.len(), d);
    let radius = support
        .iter()
        .map(|p| dist2(&center, p))
        .fold(0.0f64, f64::max)
        .sqrt();
    Ball { center, radius }
}

fn mtf(points: &[&[f64]], order: &mut Vec<usize>, end: usize, boundary: &mut Vec<usize>, dim: usize) -> Ball {
    let support: Vec<&[f64]> = boundary.iter().map(|&i| points[i]).collect();
    let mut ball = if support.is_empty() {
        Ball {
            center: points[order[0]].to_vec(),
            radius: -1.0,
        }
    } else {
        circumball(&support)
    };
    if boundary.len() == dim + 1 {
        return ball;
    }
    let mut i = 0;
    while i < end {
        let idx = order[i];
        let outside = ball.radius < 0.0 || !ball.contains(points[idx], CONTAIN_TOL * (1.0 + ball.radius));
        if outside {
            boundary.push(idx);
            ball = mtf(points, order, i, boundary, dim);
            boundary.pop();
            // move to front
            order[..=i].rotate_right(1);
        }
        i += 1;
    }
    ball
}

/// Smallest enclosing ball of a nonempty point set.
pub fn miniball(points: &[&[f64]]) -> Result<Ball> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("miniball of an empty point set".into()));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim || p.iter().any(|x| !x.is_finite())) {
        return Err(Error::InvalidArgument("miniball needs finite points of equal dimension".into()));
    }
    if points.len() == 1 {
        return Ok(Ball {
            center: points[0].to_vec(),
            radius: 0.0,
        });
    }
    if points.len() == 2 {
        let center: Vec<f64> = points[0].iter().zip(points[1]).map(|(a, b)| 0.5 * (a + b)).collect();
        return Ok(Ball {
            radius: 0.5 * dist2(points[0], points[1]).sqrt(),
            center,
        });
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    let mut boundary = Vec::with_capacity(dim + 1);
    let n = points.len();
    Ok(mtf(points, &mut order, n, &mut boundary, dim))
}

/// Filtration value of a simplex: twice the radius of its smallest enclosing
/// ball, i.e. the least `t` for which the balls of radius `t/2` share a point.
pub fn simplex_value(points: &[&[f64]]) -> Result<f64> {
    Ok(2.0 * miniball(points)?.radius)
}

/// Radius of the smallest enclosing ball, by exhaustive search over support
/// sets of size at most `d + 1`. Exponential; used as a test oracle.
pub fn brute_force_radius(points: &[&[f64]]) -> f64 {
    let n = points.len();
    let d = points[0].len();
    let mut best = f64::INFINITY;
    for mask in 1u32..(1u32 << n) {
        if mask.count_ones() as usize > d + 1 {
            continue;
        }
        let support: Vec<&[f64]> = (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| points[i]).collect();
        let ball = circumball(&support);
        if ball.radius < best && points.iter().all(|p| ball.contains(p, 1e-9 * (1.0 + ball.radius))) {
            best = ball.radius;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn refs(pts: &[Vec<f64>]) -> Vec<&[f64]> {
        pts.iter().map(|p| p.as_slice()).collect()
    }

    #[test]
    fn small_cases() {
        let p = vec![vec![0.3, -1.0]];
        let b = miniball(&refs(&p)).unwrap();
        assert_eq!(b.radius, 0.0);
        assert_eq!(b.center, p[0]);
        assert_eq!(simplex_value(&refs(&p)).unwrap(), 0.0);

        let p = vec![vec![0.0, 0.0], vec![1.0, 0.0]];
        let b = miniball(&refs(&p)).unwrap();
        assert!((b.radius - 0.5).abs() < 1e-15);
        assert_eq!(b.center, vec![0.5, 0.0]);
        assert!((simplex_value(&refs(&p)).unwrap() - 1.0).abs() < 1e-15);

        let h = 3f64.sqrt() / 2.0;
        let p = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, h]];
        assert!((miniball(&refs(&p)).unwrap().radius - 1.0 / 3f64.sqrt()).abs() < 1e-12);
        assert!((simplex_value(&refs(&p)).unwrap() - 2.0 / 3f64.sqrt()).abs() < 1e-12);
        assert!(miniball(&[]).is_err());
    }

    #[test]
    fn obtuse_triangle_uses_longest_side() {
        let p = vec![vec![0.0, 0.0], vec![4.0, 0.0], vec![2.0, 0.5]];
        let b = miniball(&refs(&p)).unwrap();
        assert!((b.radius - 2.0).abs() < 1e-12);
    }

    #[test]
    fn collinear_and_duplicate_points() {
        let p = vec![vec![0.0, 0.0], vec![0.4, 0.0], vec![0.8, 0.0]];
        assert!((miniball(&refs(&p)).unwrap().radius - 0.4).abs() < 1e-12);
        let p = vec![vec![1.0, 1.0], vec![1.0, 1.0], vec![1.0, 1.0]];
        assert!(miniball(&refs(&p)).unwrap().radius.abs() < 1e-12);
        let p = vec![vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]];
        let r = miniball(&refs(&p)).unwrap().radius;
        assert!((r - 2f64.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn regular_tetrahedron() {
        let s = 1.0 / 2f64.sqrt();
        let p = vec![
            vec![1.0, 0.0, -s],
            vec![-1.0, 0.0, -s],
            vec![0.0, 1.0, s],
            vec![0.0, -1.0, s],
        ];
        // edge 2, circumradius sqrt(3/8) * 2
        let r = miniball(&refs(&p)).unwrap().radius;
        assert!((r - (3.0f64 / 8.0).sqrt() * 2.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn agrees_with_brute_force(
            d in 2usize..4,
            raw in proptest::collection::vec(-3.0f64..3.0, 3 * 6),
            n in 1usize..7,
        ) {
            let pts: Vec<Vec<f64>> = raw.chunks(3).take(n).map(|c| c[..d].to_vec()).collect();
            let r = refs(&pts);
            let b = miniball(&r).unwrap();
            for p in &r {
                prop_assert!(b.contains(p, 1e-12 * (1.0 + b.radius)));
            }
            if n > 1 {
                let on_boundary = r.iter().any(|p| (dist2(&b.center, p).sqrt() - b.radius).abs() <= 1e-9);
                prop_assert!(on_boundary);
            }
            let oracle = brute_force_radius(&r);
            prop_assert!((b.radius - oracle).abs() <= 1e-9 * (1.0 + oracle), "{} vs {}", b.radius, oracle);
        }

        #[test]
        fn monotone_under_point_addition(raw in proptest::collection::vec(-2.0f64..2.0, 10)) {
            let pts: Vec<Vec<f64>> = raw.chunks(2).map(|c| c.to_vec()).collect();
            let r = refs(&pts);
            let mut prev = 0.0;
            for m in 1..=r.len() {
                let v = simplex_value(&r[..m]).unwrap();
                prop_assert!(v + 1e-12 >= prev);
                prev = v;
            }
        }
    }
}
