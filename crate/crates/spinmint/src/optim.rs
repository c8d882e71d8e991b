//! General-purpose bounded minimizers: differential evolution for global
//! search and Nelder–Mead for local refinement.
//!
//! Both are deterministic given a seed.  Differential evolution uses the
//! classic `rand/1/bin` strategy; candidate generation is strictly sequential
//! in the RNG while objective evaluations of a generation may be farmed out in
//! parallel and are reduced back in index order, so results are bit-stable
//! regardless of thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Rectangular search domain.
#[derive(Debug, Clone)]
pub struct Bounds {
    /// Lower corner.
    pub lo: Vec<f64>,
    /// Upper corner.
    pub hi: Vec<f64>,
}

impl Bounds {
    /// Construct and validate a box.
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::domain("bounds must be non-empty and of equal length"));
        }
        for (l, h) in lo.iter().zip(&hi) {
            if !(l.is_finite() && h.is_finite() && l < h) {
                return Err(Error::domain(format!("invalid bound pair ({l}, {h})")));
            }
        }
        Ok(Bounds { lo, hi })
    }

    /// Dimensionality of the box.
    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// Clamp a point into the box, coordinate-wise.
    pub fn clamp(&self, x: &mut [f64]) {
        for ((xi, &l), &h) in x.iter_mut().zip(&self.lo).zip(&self.hi) {
            *xi = xi.clamp(l, h);
        }
    }

    fn sample(&self, rng: &mut impl Rng) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(&l, &h)| rng.gen_range(l..h))
            .collect()
    }
}

/// Differential evolution settings (`rand/1/bin`).
#[derive(Debug, Clone)]
pub struct DeConfig {
    /// Population size.
    pub population: usize,
    /// Number of generations.
    pub generations: usize,
    /// Differential weight F.
    pub weight: f64,
    /// Crossover probability CR.
    pub crossover: f64,
}

impl Default for DeConfig {
    fn default() -> Self {
        DeConfig {
            population: 32,
            generations: 400,
            weight: 0.7,
            crossover: 0.9,
        }
    }
}

/// A candidate point with its objective value.
#[derive(Debug, Clone)]
pub struct Candidate {
    /// Parameter vector.
    pub x: Vec<f64>,
    /// Objective value.
    pub f: f64,
}

/// Outcome of a minimization.
#[derive(Debug, Clone)]
pub struct MinimizeResult {
    /// Best point found.
    pub x: Vec<f64>,
    /// Objective at the best point.
    pub f: f64,
    /// Total number of objective evaluations.
    pub evaluations: usize,
    /// Whether the local stage met its tolerance before hitting the
    /// iteration cap.
    pub converged: bool,
}

fn eval_batch<F>(objective: &F, points: &[Vec<f64>]) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    // Parallel evaluation, reduced back in index order for determinism.
    points
        .par_iter()
        .map(|p| objective(p))
        .collect::<Result<Vec<f64>>>()
}

/// Run differential evolution and return the final population sorted by
/// objective value (best first).
pub fn differential_evolution<F>(
    objective: &F,
    bounds: &Bounds,
    cfg: &DeConfig,
    seed: u64,
) -> Result<(Vec<Candidate>, usize)>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    if cfg.population < 4 {
        return Err(Error::domain("differential evolution needs population >= 4"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = bounds.dim();

    let mut pop: Vec<Vec<f64>> = (0..cfg.population).map(|_| bounds.sample(&mut rng)).collect();
    let mut vals = eval_batch(objective, &pop)?;
    let mut evals = pop.len();

    let mut trials: Vec<Vec<f64>> = Vec::with_capacity(cfg.population);
    for _ in 0..cfg.generations {
        trials.clear();
        for i in 0..cfg.population {
            // Pick three distinct partners, all different from i.
            let mut pick = || loop {
                let j = rng.gen_range(0..cfg.population);
                if j != i {
                    return j;
                }
            };
            let (a, b, c) = loop {
                let (a, b, c) = (pick(), pick(), pick());
                if a != b && b != c && a != c {
                    break (a, b, c);
                }
            };
            let j_rand = rng.gen_range(0..dim);
            let mut trial = pop[i].clone();
            for j in 0..dim {
                if j == j_rand || rng.gen::<f64>() < cfg.crossover {
                    trial[j] = pop[a][j] + cfg.weight * (pop[b][j] - pop[c][j]);
                }
            }
            bounds.clamp(&mut trial);
            trials.push(trial);
        }
        let trial_vals = eval_batch(objective, &trials)?;
        evals += trials.len();
        for i in 0..cfg.population {
            if trial_vals[i] <= vals[i] {
                pop[i] = trials[i].clone();
                vals[i] = trial_vals[i];
            }
        }
    }

    let mut out: Vec<Candidate> = pop
        .into_iter()
        .zip(vals)
        .map(|(x, f)| Candidate { x, f })
        .collect();
    out.sort_by(|p, q| p.f.partial_cmp(&q.f).unwrap());
    Ok((out, evals))
}

/// Nelder–Mead settings.
#[derive(Debug, Clone)]
pub struct NelderMeadConfig {
    /// Convergence tolerance on both the simplex diameter and the spread of
    /// objective values.
    pub tolerance: f64,
    /// Iteration cap.
    pub max_iterations: usize,
    /// Initial simplex edge length, per coordinate, as a fraction of the
    /// bound width.
    pub initial_scale: f64,
}

impl Default for NelderMeadConfig {
    fn default() -> Self {
        NelderMeadConfig {
            tolerance: 1e-12,
            max_iterations: 4000,
            initial_scale: 0.05,
        }
    }
}

/// Nelder–Mead downhill simplex minimization from `start`, clamped to bounds.
pub fn nelder_mead<F>(
    objective: &F,
    bounds: &Bounds,
    start: &[f64],
    cfg: &NelderMeadConfig,
) -> Result<MinimizeResult>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let dim = bounds.dim();
    if start.len() != dim {
        return Err(Error::domain("start point dimension mismatch"));
    }
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);

    // Build the initial simplex: start plus one displaced vertex per axis.
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    simplex.push(start.to_vec());
    for j in 0..dim {
        let mut v = start.to_vec();
        let step = cfg.initial_scale * (bounds.hi[j] - bounds.lo[j]);
        v[j] = if v[j] + step <= bounds.hi[j] { v[j] + step } else { v[j] - step };
        simplex.push(v);
    }
    let mut values = eval_batch(objective, &simplex)?;
    let mut evals = simplex.len();

    let mut converged = false;
    for _ in 0..cfg.max_iterations {
        // Order the simplex by objective value.
        let mut idx: Vec<usize> = (0..=dim).collect();
        idx.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap());
        let ordered: Vec<Vec<f64>> = idx.iter().map(|&i| simplex[i].clone()).collect();
        let ordered_vals: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
        simplex = ordered;
        values = ordered_vals;

        // Convergence: value spread and simplex diameter.
        let f_spread = values[dim] - values[0];
        let x_spread = simplex[1..]
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&simplex[0])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if f_spread.abs() <= cfg.tolerance && x_spread <= cfg.tolerance.sqrt() * 1e-3 {
            converged = true;
            break;
        }

        // Centroid of all but the worst vertex.
        let mut centroid = vec![0.0; dim];
        for v in &simplex[..dim] {
            for (c, vi) in centroid.iter_mut().zip(v) {
                *c += vi / dim as f64;
            }
        }

        let project = |mut x: Vec<f64>| {
            bounds.clamp(&mut x);
            x
        };
        let reflect: Vec<f64> = project(
            centroid
                .iter()
                .zip(&simplex[dim])
                .map(|(c, w)| c + alpha * (c - w))
                .collect(),
        );
        let f_reflect = objective(&reflect)?;
        evals += 1;

        if f_reflect < values[0] {
            // Try to expand.
            let expand: Vec<f64> = project(
                centroid
                    .iter()
                    .zip(&simplex[dim])
                    .map(|(c, w)| c + gamma * alpha * (c - w))
                    .collect(),
            );
            let f_expand = objective(&expand)?;
            evals += 1;
            if f_expand < f_reflect {
                simplex[dim] = expand;
                values[dim] = f_expand;
            } else {
                simplex[dim] = reflect;
                values[dim] = f_reflect;
            }
        } else if f_reflect < values[dim - 1] {
            simplex[dim] = reflect;
            values[dim] = f_reflect;
        } else {
            // Contract (outside if the reflection helped at all, else inside).
            let towards = if f_reflect < values[dim] { &reflect } else { &simplex[dim] };
            let contract: Vec<f64> = project(
                centroid
                    .iter()
                    .zip(towards)
                    .map(|(c, w)| c + rho * (w - c))
                    .collect(),
            );
            let f_contract = objective(&contract)?;
            evals += 1;
            if f_contract < values[dim].min(f_reflect) {
                simplex[dim] = contract;
                values[dim] = f_contract;
            } else {
                // Shrink toward the best vertex.
                let best = simplex[0].clone();
                for v in simplex.iter_mut().skip(1) {
                    for (vi, bi) in v.iter_mut().zip(&best) {
                        *vi = bi + sigma * (*vi - bi);
                    }
                }
                let new_vals = eval_batch(objective, &simplex[1..])?;
                evals += dim;
                values[1..].copy_from_slice(&new_vals);
            }
        }
    }

    let best = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    Ok(MinimizeResult {
        x: simplex[best].clone(),
        f: values[best],
        evaluations: evals,
        converged,
    })
}

/// Global-then-local minimization: differential evolution seeds multi-start
/// Nelder–Mead from the `refine_top` best candidates.  Ties between refined
/// minima (within `tie_tolerance` of each other) are broken toward the point
/// with the smallest first coordinate.
pub fn global_minimize<F>(
    objective: &F,
    bounds: &Bounds,
    de: &DeConfig,
    nm: &NelderMeadConfig,
    refine_top: usize,
    tie_tolerance: f64,
    seed: u64,
) -> Result<MinimizeResult>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let (population, mut evals) = differential_evolution(objective, bounds, de, seed)?;
    let starts = population.iter().take(refine_top.max(1));

    let mut best: Option<MinimizeResult> = None;
    for cand in starts {
        let refined = nelder_mead(objective, bounds, &cand.x, nm)?;
        evals += refined.evaluations;
        best = Some(match best {
            None => refined,
            Some(cur) => {
                let strictly_better = refined.f < cur.f - tie_tolerance;
                let tie_break =
                    (refined.f - cur.f).abs() <= tie_tolerance && refined.x[0] < cur.x[0];
                if strictly_better || tie_break {
                    refined
                } else {
                    cur
                }
            }
        });
    }
    let mut out = best.expect("at least one refinement start");
    out.evaluations = evals;
    Ok(out)
}
