use crate::error::{Error, Result};
use crate::estimate::{monte_carlo_mean, LimitEstimate, Method};
use crate::geometry::{dist2, norm, sphere_area};
use crate::quadrature::adaptive;
use crate::sampler::{sample_cloud, sample_point, DensitySpec, RadialDensity};
use crate::seed::SeedRecord;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Small functionals `u(Y)` of an `l`-subset used to exercise the Palm identity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PalmFunctional {
    /// `l = 1`: the point lies in the centered ball of this radius.
    InBall { radius: f64 },
    /// `l = 2`: the two points are within distance `r`.
    PairWithin { r: f64 },
}

impl PalmFunctional {
    pub fn arity(&self) -> usize {
        match self {
            PalmFunctional::InBall { .. } => 1,
            PalmFunctional::PairWithin { .. } => 2,
        }
    }

    fn eval(&self, pts: &[&[f64]]) -> bool {
        match *self {
            PalmFunctional::InBall { radius } => norm(pts[0]) <= radius,
            PalmFunctional::PairWithin { r } => dist2(pts[0], pts[1]) <= r * r,
        }
    }

    fn subset_sum(&self, pts: &[&[f64]]) -> u64 {
        match self {
            PalmFunctional::InBall { .. } => pts.iter().filter(|p| self.eval(&[p])).count() as u64,
            PalmFunctional::PairWithin { .. } => {
                let mut c = 0;
                for a in 0..pts.len() {
                    for b in a + 1..pts.len() {
                        c += self.eval(&[pts[a], pts[b]]) as u64;
                    }
                }
                c
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PalmCheck {
    pub functional: PalmFunctional,
    /// Sum over subsets of the process, averaged over replications.
    pub lhs: LimitEstimate,
    /// `n^l / l!` times the expectation over `l` fresh iid points.
    pub rhs: LimitEstimate,
    /// Deterministic value, available for the single-point functional.
    pub quadrature: Option<LimitEstimate>,
}

/// Both sides of the Palm identity for `functional` under a Poisson process
/// with intensity `n f`. The right side uses `100 * reps` fresh draws.
pub fn palm_identity_check(
    functional: PalmFunctional,
    n: f64,
    density: &DensitySpec,
    reps: usize,
    seed: SeedRecord,
) -> Result<PalmCheck> {
    if reps < 2 {
        return Err(Error::InvalidArgument("need at least two replications".into()));
    }
    let d = density.d();
    let lhs_seed = seed.named("lhs");
    let counts: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|i| {
            let cloud = sample_cloud(density, n, lhs_seed.child(i as u64))?;
            let pts: Vec<&[f64]> = cloud.view().iter().collect();
            Ok(functional.subset_sum(&pts) as f64)
        })
        .collect::<Result<_>>()?;
    let mean = counts.iter().sum::<f64>() / reps as f64;
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (reps as f64 - 1.0);
    let lhs = LimitEstimate::monte_carlo(mean, (var / reps as f64).sqrt(), reps as u64, lhs_seed);

    let l = functional.arity();
    let factor = n.powi(l as i32) / (1..=l).product::<usize>() as f64;
    let rhs_seed = seed.named("rhs");
    let samples = 100 * reps as u64;
    let (p, se) = monte_carlo_mean(samples, rhs_seed, |rng| {
        let mut buf = vec![0.0; l * d];
        for c in buf.chunks_exact_mut(d) {
            sample_point(rng, density, c);
        }
        let pts: Vec<&[f64]> = buf.chunks_exact(d).collect();
        functional.eval(&pts) as u8 as f64
    });
    let rhs = LimitEstimate::monte_carlo(factor * p, factor * se, samples, rhs_seed);

    let quadrature = match functional {
        PalmFunctional::InBall { radius } => {
            let mass = if radius > 0.0 {
                adaptive(
                    |r| sphere_area(d) * r.powi(d as i32 - 1) * density.density_at_radius(r),
                    0.0,
                    radius,
                    1e-12,
                )
            } else {
                0.0
            };
            Some(LimitEstimate::exact(n * mass, Method::Quadrature))
        }
        PalmFunctional::PairWithin { .. } => None,
    };
    Ok(PalmCheck {
        functional,
        lhs,
        rhs,
        quadrature,
    })
}
