//! Mod-2 persistence barcodes, Betti curves and lifetime sums.

use crate::error::{Error, Result};
use crate::filtration::FilteredComplex;
use crate::union_find::UnionFind;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::io::Write;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bar {
    pub birth: f64,
    /// `f64::INFINITY` for classes alive at the end of the filtration.
    pub death: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Barcode {
    pub degree: usize,
    pub bars: Vec<Bar>,
}

impl Barcode {
    pub fn new(degree: usize, mut bars: Vec<Bar>) -> Self {
        bars.sort_by(|a, b| a.birth.total_cmp(&b.birth).then(a.death.total_cmp(&b.death)));
        Barcode { degree, bars }
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    pub fn len(&self) -> usize {
        self.bars.len()
    }

    /// Number of bars with `birth <= t < death`.
    pub fn betti_at(&self, t: f64) -> usize {
        self.bars.iter().filter(|b| b.birth <= t && t < b.death).count()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["k", "birth", "death"])?;
        for b in &self.bars {
            let death = if b.death.is_infinite() {
                "inf".to_string()
            } else {
                format!("{:.17e}", b.death)
            };
            wr.write_record([self.degree.to_string(), format!("{:.17e}", b.birth), death])?;
        }
        wr.flush()?;
        Ok(())
    }
}

fn symmetric_difference(a: &[usize], b: &[usize], out: &mut Vec<usize>) {
    out.clear();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
}

/// Reduces the given columns (boundaries as sorted row positions) in place,
/// left to right. Returns `pivot -> column` for every nonzero reduced column.
fn reduce(columns: &mut [(usize, Vec<usize>)]) -> HashMap<usize, usize> {
    let mut pivots: HashMap<usize, usize> = HashMap::new();
    let mut scratch = Vec::new();
    for c in 0..columns.len() {
        loop {
            let Some(&low) = columns[c].1.last() else { break };
            match pivots.get(&low) {
                Some(&other) => {
                    symmetric_difference(&columns[c].1, &columns[other].1, &mut scratch);
                    std::mem::swap(&mut columns[c].1, &mut scratch);
                }
                None => {
                    pivots.insert(low, c);
                    break;
                }
            }
        }
    }
    pivots
}

fn faces_of(vertices: &[usize], index: &HashMap<&[usize], usize>) -> Vec<usize> {
    let mut face = Vec::with_capacity(vertices.len() - 1);
    let mut col: Vec<usize> = (0..vertices.len())
        .map(|skip| {
            face.clear();
            face.extend(vertices.iter().enumerate().filter(|(j, _)| *j != skip).map(|(_, v)| *v));
            index[face.as_slice()]
        })
        .collect();
    col.sort_unstable();
    col
}

/// Degree-`k` barcode of a filtered complex.
pub fn barcode(complex: &FilteredComplex, k: usize) -> Result<Barcode> {
    if complex.max_dim < k + 1 {
        return Err(Error::MaxDimTooSmall {
            max_dim: complex.max_dim,
            k,
        });
    }
    let simplices = &complex.simplices;
    let index: HashMap<&[usize], usize> = simplices
        .iter()
        .enumerate()
        .filter(|(_, s)| s.dim() + 1 == k || s.dim() == k)
        .map(|(i, s)| (s.vertices.as_slice(), i))
        .collect();
    // Highest dimension first so that pivots clear degree-k columns.
    let mut upper: Vec<(usize, Vec<usize>)> = simplices
        .iter()
        .enumerate()
        .filter(|(_, s)| s.dim() == k + 1)
        .map(|(i, s)| (i, faces_of(&s.vertices, &index)))
        .collect();
    let upper_pivots = reduce(&mut upper);
    let mut bars = Vec::new();
    let mut killed = vec![false; simplices.len()];
    for (&low, &c) in &upper_pivots {
        killed[low] = true;
        let (birth, death) = (simplices[low].value, simplices[upper[c].0].value);
        if birth < death {
            bars.push(Bar { birth, death });
        }
    }
    // Unpaired degree-k simplices that create a class live forever.
    let degree_k: Vec<usize> = (0..simplices.len()).filter(|&i| simplices[i].dim() == k && !killed[i]).collect();
    let positive: Vec<bool> = if k == 0 {
        vec![true; degree_k.len()]
    } else if k == 1 {
        let n_vertices = simplices.iter().filter(|s| s.dim() == 0).map(|s| s.vertices[0] + 1).max().unwrap_or(0);
        let mut uf = UnionFind::new(n_vertices);
        let mut creates = vec![false; simplices.len()];
        for (i, s) in simplices.iter().enumerate() {
            if s.dim() == 1 {
                creates[i] = !uf.union(s.vertices[0], s.vertices[1]);
            }
        }
        degree_k.iter().map(|&i| creates[i]).collect()
    } else {
        let mut cols: Vec<(usize, Vec<usize>)> =
            degree_k.iter().map(|&i| (i, faces_of(&simplices[i].vertices, &index))).collect();
        reduce(&mut cols);
        cols.iter().map(|(_, c)| c.is_empty()).collect()
    };
    for (&i, &pos) in degree_k.iter().zip(&positive) {
        if pos {
            bars.push(Bar {
                birth: simplices[i].value,
                death: f64::INFINITY,
            });
        }
    }
    Ok(Barcode::new(k, bars))
}

/// Right-continuous integer step function, zero before the first breakpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BettiCurve {
    pub breakpoints: Vec<f64>,
    /// `values[i]` holds on `[breakpoints[i], breakpoints[i + 1])`.
    pub values: Vec<usize>,
}

impl BettiCurve {
    pub fn at(&self, s: f64) -> usize {
        let idx = self.breakpoints.partition_point(|&b| b <= s);
        if idx == 0 {
            0
        } else {
            self.values[idx - 1]
        }
    }

    /// Exact integral over `[0, t]`.
    pub fn integral(&self, t: f64) -> f64 {
        let mut total = 0.0;
        for (i, (&b, &v)) in self.breakpoints.iter().zip(&self.values).enumerate() {
            if b >= t {
                break;
            }
            let end = self.breakpoints.get(i + 1).copied().unwrap_or(f64::INFINITY).min(t);
            if v > 0 {
                total += v as f64 * (end - b.max(0.0)).max(0.0);
            }
        }
        total
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["s", "beta"])?;
        for (b, v) in self.breakpoints.iter().zip(&self.values) {
            wr.write_record([format!("{b:.17e}"), v.to_string()])?;
        }
        wr.flush()?;
        Ok(())
    }
}

pub fn betti_curve(bc: &Barcode) -> BettiCurve {
    let mut events: Vec<(f64, i64)> = Vec::with_capacity(2 * bc.bars.len());
    for b in &bc.bars {
        events.push((b.birth, 1));
        if b.death.is_finite() {
            events.push((b.death, -1));
        }
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut breakpoints = Vec::new();
    let mut values = Vec::new();
    let mut level: i64 = 0;
    let mut i = 0;
    while i < events.len() {
        let x = events[i].0;
        while i < events.len() && events[i].0 == x {
            level += events[i].1;
            i += 1;
        }
        if values.last().is_some_and(|&v: &usize| v as i64 == level) {
            continue;
        }
        breakpoints.push(x);
        values.push(level as usize);
    }
    BettiCurve { breakpoints, values }
}

/// Sum of bar lengths with births and deaths truncated at `t`.
pub fn lifetime_sum(bc: &Barcode, t: f64) -> f64 {
    bc.bars.iter().map(|b| b.death.min(t) - b.birth.min(t)).sum()
}

pub fn lifetime_sum_by_integration(curve: &BettiCurve, t: f64) -> f64 {
    curve.integral(t)
}

/// Writes `t,lifetime` rows for the given grid.
pub fn write_lifetime_csv<W: Write>(bc: &Barcode, grid: &[f64], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["t", "lifetime_sum"])?;
    for &t in grid {
        wr.write_record([format!("{t:.17e}"), format!("{:.17e}", lifetime_sum(bc, t))])?;
    }
    wr.flush()?;
    Ok(())
}
