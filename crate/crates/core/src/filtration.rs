//! Čech filtrations built from minimal enclosing balls.

use crate::error::{Error, Result};
use crate::geometry::{dist2, PointsView};
use crate::miniball::simplex_value;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::HashMap;
use std::io::Write;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Simplex {
    pub vertices: Vec<usize>,
    pub value: f64,
}

impl Simplex {
    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }

    /// Filtration order: value, then dimension, then vertex list.
    pub fn filtration_cmp(&self, other: &Self) -> Ordering {
        self.value
            .total_cmp(&other.value)
            .then(self.vertices.len().cmp(&other.vertices.len()))
            .then_with(|| self.vertices.cmp(&other.vertices))
    }
}

/// Default cap on the number of simplices a single filtration may hold.
pub const DEFAULT_SIMPLEX_BUDGET: usize = 5_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilteredComplex {
    pub simplices: Vec<Simplex>,
    pub max_dim: usize,
    pub t_max: f64,
}

impl FilteredComplex {
    pub fn len(&self) -> usize {
        self.simplices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.simplices.is_empty()
    }

    pub fn count_of_dim(&self, p: usize) -> usize {
        self.simplices.iter().filter(|s| s.dim() == p).count()
    }

    /// Simplices with value at most `t`, grouped by dimension.
    pub fn static_at(&self, t: f64) -> Vec<Vec<Vec<usize>>> {
        let mut by_dim = vec![Vec::new(); self.max_dim + 1];
        for s in self.simplices.iter().take_while(|s| s.value <= t) {
            by_dim[s.dim()].push(s.vertices.clone());
        }
        by_dim
    }

    /// Distinct filtration values in increasing order.
    pub fn values(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.simplices.iter().map(|s| s.value).collect();
        v.dedup();
        v
    }

    /// Writes one simplex per line as `value dim v0 v1 ... vp`.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        for s in &self.simplices {
            write!(w, "{:.17e} {}", s.value, s.dim())?;
            for v in &s.vertices {
                write!(w, " {v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// Reads the format produced by [`write_text`](Self::write_text).
    pub fn read_text(text: &str, max_dim: usize, t_max: f64) -> Result<Self> {
        let mut simplices = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            let bad = |m: &str| Error::Config {
                line: ln + 1,
                column: 1,
                message: m.to_string(),
            };
            if fields.len() < 3 {
                return Err(bad("expected `value dim v0 ...`"));
            }
            let value: f64 = fields[0].parse().map_err(|_| bad("bad value"))?;
            let dim: usize = fields[1].parse().map_err(|_| bad("bad dimension"))?;
            let vertices = fields[2..]
                .iter()
                .map(|f| f.parse::<usize>().map_err(|_| bad("bad vertex")))
                .collect::<Result<Vec<_>>>()?;
            if vertices.len() != dim + 1 {
                return Err(bad("vertex count does not match dimension"));
            }
            simplices.push(Simplex { vertices, value });
        }
        Ok(FilteredComplex {
            simplices,
            max_dim,
            t_max,
        })
    }
}

/// Neighbor lists (higher-indexed neighbors only) of the graph joining points
/// at distance at most `radius`.
pub fn neighbor_graph(points: PointsView<'_>, radius: f64) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut up = vec![Vec::new(); n];
    if n == 0 || !(radius >= 0.0) {
        return up;
    }
    let r2 = radius * radius;
    let d = points.dim;
    if n <= 64 || !radius.is_finite() || radius == 0.0 || d > 6 {
        for a in 0..n {
            for b in a + 1..n {
                if dist2(points.point(a), points.point(b)) <= r2 {
                    up[a].push(b);
                }
            }
        }
        return up;
    }
    let key = |p: &[f64]| -> Vec<i64> { p.iter().map(|x| (x / radius).floor() as i64).collect() };
    let mut cells: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    for (i, p) in points.iter().enumerate() {
        cells.entry(key(p)).or_default().push(i);
    }
    let offsets: Vec<Vec<i64>> = (0..3usize.pow(d as u32))
        .map(|mut code| {
            (0..d)
                .map(|_| {
                    let o = (code % 3) as i64 - 1;
                    code /= 3;
                    o
                })
                .collect()
        })
        .collect();
    let mut probe = vec![0i64; d];
    for (a, p) in points.iter().enumerate() {
        let base = key(p);
        for off in &offsets {
            for ((q, b), o) in probe.iter_mut().zip(&base).zip(off) {
                *q = b + o;
            }
            if let Some(members) = cells.get(&probe) {
                for &b in members {
                    if b > a && dist2(p, points.point(b)) <= r2 {
                        up[a].push(b);
                    }
                }
            }
        }
        up[a].sort_unstable();
    }
    up
}

/// Čech filtration of `points` restricted to dimension `max_dim` and values
/// at most `t_max`, sorted in filtration order.
pub fn build_filtered_complex(points: PointsView<'_>, max_dim: usize, t_max: f64) -> Result<FilteredComplex> {
    build_filtered_complex_with_budget(points, max_dim, t_max, DEFAULT_SIMPLEX_BUDGET)
}

pub fn build_filtered_complex_with_budget(
    points: PointsView<'_>,
    max_dim: usize,
    t_max: f64,
    budget: usize,
) -> Result<FilteredComplex> {
    if !(t_max >= 0.0) {
        return Err(Error::InvalidArgument(format!("t_max = {t_max} must be non-negative")));
    }
    let n = points.len();
    let mut simplices: Vec<Simplex> = (0..n)
        .map(|v| Simplex {
            vertices: vec![v],
            value: 0.0,
        })
        .collect();
    let mut enumerated = n;
    let check = |count: usize| -> Result<()> {
        if count > budget {
            Err(Error::ComplexityBudget { count, budget })
        } else {
            Ok(())
        }
    };
    check(enumerated)?;
    if max_dim == 0 || n < 2 {
        return Ok(finish(simplices, max_dim, t_max));
    }
    let up = neighbor_graph(points, t_max);
    // Current layer: simplices of dimension p, with their (clamped) values.
    let mut layer: Vec<Simplex> = Vec::new();
    for (a, nb) in up.iter().enumerate() {
        for &b in nb {
            layer.push(Simplex {
                vertices: vec![a, b],
                value: dist2(points.point(a), points.point(b)).sqrt(),
            });
        }
    }
    enumerated += layer.len();
    check(enumerated)?;
    let mut adjacency: Vec<Vec<usize>> = up;
    for list in adjacency.iter_mut() {
        list.sort_unstable();
    }
    let mut pts: Vec<&[f64]> = Vec::with_capacity(max_dim + 1);
    for _p in 2..=max_dim {
        let lookup: HashMap<&[usize], f64> = layer.iter().map(|s| (s.vertices.as_slice(), s.value)).collect();
        let mut next = Vec::new();
        for s in &layer {
            let last = *s.vertices.last().unwrap();
            // Common higher neighbors of all vertices of s.
            for &w in &adjacency[s.vertices[0]] {
                if w <= last {
                    continue;
                }
                if !s.vertices[1..].iter().all(|&v| adjacency[v].binary_search(&w).is_ok()) {
                    continue;
                }
                enumerated += 1;
                check(enumerated)?;
                let mut verts = s.vertices.clone();
                verts.push(w);
                pts.clear();
                pts.extend(verts.iter().map(|&v| points.point(v)));
                let mut value = simplex_value(&pts)?;
                if value > t_max {
                    continue;
                }
                let mut all_faces = true;
                let mut face = Vec::with_capacity(verts.len() - 1);
                for skip in 0..verts.len() {
                    face.clear();
                    face.extend(verts.iter().enumerate().filter(|(j, _)| *j != skip).map(|(_, v)| *v));
                    match lookup.get(face.as_slice()) {
                        Some(&fv) => value = value.max(fv),
                        None => {
                            all_faces = false;
                            break;
                        }
                    }
                }
                if all_faces {
                    next.push(Simplex { vertices: verts, value });
                }
            }
        }
        simplices.append(&mut layer);
        layer = next;
        if layer.is_empty() {
            break;
        }
    }
    simplices.append(&mut layer);
    Ok(finish(simplices, max_dim, t_max))
}

fn finish(mut simplices: Vec<Simplex>, max_dim: usize, t_max: f64) -> FilteredComplex {
    simplices.sort_by(|a, b| a.filtration_cmp(b));
    FilteredComplex {
        simplices,
        max_dim,
        t_max,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn view(coords: &[f64]) -> PointsView<'_> {
        PointsView::new(2, coords)
    }

    #[test]
    fn equilateral_triangle() {
        let h = 3f64.sqrt() / 2.0;
        let c = [0.0, 0.0, 1.0, 0.0, 0.5, h];
        let fc = build_filtered_complex(view(&c), 2, 2.0).unwrap();
        assert_eq!(fc.len(), 7);
        assert_eq!(fc.count_of_dim(0), 3);
        for s in fc.simplices.iter().filter(|s| s.dim() == 1) {
            assert!((s.value - 1.0).abs() < 1e-12);
        }
        let tri = fc.simplices.last().unwrap();
        assert_eq!(tri.vertices, vec![0, 1, 2]);
        assert!((tri.value - 2.0 / 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn unit_square() {
        let c = [0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0];
        let fc = build_filtered_complex(view(&c), 2, 2.0).unwrap();
        let edges: Vec<f64> = fc.simplices.iter().filter(|s| s.dim() == 1).map(|s| s.value).collect();
        assert_eq!(edges.len(), 6);
        assert_eq!(edges.iter().filter(|v| (**v - 1.0).abs() < 1e-12).count(), 4);
        assert_eq!(edges.iter().filter(|v| (**v - 2f64.sqrt()).abs() < 1e-12).count(), 2);
        let tris: Vec<&Simplex> = fc.simplices.iter().filter(|s| s.dim() == 2).collect();
        assert_eq!(tris.len(), 4);
        assert!(tris.iter().all(|s| (s.value - 2f64.sqrt()).abs() < 1e-12));
    }

    #[test]
    fn zero_horizon_gives_vertices() {
        let c = [0.0, 0.0, 1.0, 0.0, 0.2, 0.3];
        let fc = build_filtered_complex(view(&c), 2, 0.0).unwrap();
        assert_eq!(fc.len(), 3);
        assert!(fc.simplices.iter().all(|s| s.dim() == 0));
    }

    #[test]
    fn budget_guard() {
        let c: Vec<f64> = (0..40).flat_map(|i| [0.01 * i as f64, 0.0]).collect();
        let err = build_filtered_complex_with_budget(view(&c), 2, 1.0, 500).unwrap_err();
        assert!(matches!(err, Error::ComplexityBudget { budget: 500, .. }));
    }

    #[test]
    fn text_round_trip() {
        let c = [0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0];
        let fc = build_filtered_complex(view(&c), 2, 2.0).unwrap();
        let mut buf = Vec::new();
        fc.write_text(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("0.00000000000000000e0 0 0\n"));
        assert_eq!(FilteredComplex::read_text(&text, 2, 2.0).unwrap(), fc);
    }

    #[test]
    fn grid_neighbors_match_brute_force() {
        let mut rng = crate::seed::SeedRecord::new(4).rng();
        use rand::Rng;
        let c: Vec<f64> = (0..600).map(|_| rng.random_range(-5.0..5.0)).collect();
        let fast = neighbor_graph(view(&c), 0.7);
        let v = view(&c);
        for a in 0..v.len() {
            let brute: Vec<usize> = (a + 1..v.len()).filter(|&b| dist2(v.point(a), v.point(b)) <= 0.49).collect();
            assert_eq!(fast[a], brute);
        }
    }

    proptest! {
        #[test]
        fn faces_precede_cofaces(raw in proptest::collection::vec(-1.5f64..1.5, 2 * 9), t_max in 0.1f64..3.0) {
            let fc = build_filtered_complex(view(&raw), 3, t_max).unwrap();
            let pos: HashMap<Vec<usize>, usize> =
                fc.simplices.iter().enumerate().map(|(i, s)| (s.vertices.clone(), i)).collect();
            for (i, s) in fc.simplices.iter().enumerate() {
                prop_assert!(s.value <= t_max);
                if s.dim() == 1 {
                    let (a, b) = (s.vertices[0], s.vertices[1]);
                    let d = dist2(&raw[2 * a..2 * a + 2], &raw[2 * b..2 * b + 2]).sqrt();
                    prop_assert!((s.value - d).abs() <= 1e-12);
                }
                if s.dim() == 0 {
                    continue;
                }
                for skip in 0..s.vertices.len() {
                    let f: Vec<usize> = s.vertices.iter().enumerate().filter(|(j, _)| *j != skip).map(|(_, v)| *v).collect();
                    let j = pos[&f];
                    prop_assert!(j < i);
                    prop_assert!(fc.simplices[j].value <= s.value);
                }
            }
        }

        #[test]
        fn nerve_matches_grid_search(raw in proptest::collection::vec(-1.0f64..1.0, 2 * 5), t in 0.2f64..2.5) {
            // A simplex is present iff some grid point lies in all radius-t/2 balls.
            let fc = build_filtered_complex(view(&raw), 4, 10.0).unwrap();
            let pts: Vec<&[f64]> = raw.chunks(2).collect();
            let steps = 160;
            for s in fc.simplices.iter().filter(|s| s.dim() >= 1) {
                let r = 0.5 * t;
                let found = (0..=steps).any(|i| (0..=steps).any(|j| {
                    let x = [-2.5 + 5.0 * i as f64 / steps as f64, -2.5 + 5.0 * j as f64 / steps as f64];
                    s.vertices.iter().all(|&v| dist2(&x, pts[v]).sqrt() <= r + 0.5 * 5.0 / steps as f64 * 1.5)
                }));
                let strict = (0..=steps).any(|i| (0..=steps).any(|j| {
                    let x = [-2.5 + 5.0 * i as f64 / steps as f64, -2.5 + 5.0 * j as f64 / steps as f64];
                    s.vertices.iter().all(|&v| dist2(&x, pts[v]).sqrt() <= r - 0.5 * 5.0 / steps as f64 * 1.5)
                }));
                if s.value <= t {
                    prop_assert!(found);
                } else {
                    prop_assert!(!strict);
                }
            }
        }
    }
}
