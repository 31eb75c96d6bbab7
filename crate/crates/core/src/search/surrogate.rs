//! Surrogate-assisted black-box minimization over selections and
//! permutations.
//!
//! Candidates are encoded as real vectors: a selection of `V` positions
//! rounds each of `V` coordinates to an integer (with a deterministic
//! repair for collisions), and a permutation is the sort order of `N`
//! random keys in `[0,1]`. The optimizer follows the stochastic-RBF
//! recipe: a Latin hypercube initial design, a cubic radial-basis-function
//! interpolant with a linear tail, Gaussian perturbations of the
//! incumbent scored by a weight-cycled blend of predicted value and
//! distance to evaluated points, and one true objective evaluation per
//! iteration.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::mapping::{selection_to_permutation, Permutation, Selection};
use crate::rng;

/// Weight on the predicted value when scoring candidates; cycles per
/// iteration from exploration-leaning to exploitation-leaning.
const WEIGHT_CYCLE: [f64; 4] = [0.3, 0.5, 0.8, 0.95];
/// Candidate pool size per iteration.
const CANDIDATES_PER_ITER: usize = 200;
/// Initial perturbation scale as a fraction of each coordinate's range.
const INITIAL_STEP: f64 = 0.2;
const MIN_STEP: f64 = 0.005;

/// Search space for the optimizer.
#[derive(Debug, Clone)]
pub enum Domain {
    /// Ordered choices of `v` distinct positions out of `n`.
    Selection { n: usize, v: usize },
    /// Bijections on `n` positions via random-key encoding.
    Permutation { n: usize },
}

/// A decoded point in either space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Point {
    Selection(Selection),
    Permutation(Permutation),
}

impl Point {
    pub fn as_selection(&self) -> Option<&Selection> {
        match self {
            Point::Selection(s) => Some(s),
            Point::Permutation(_) => None,
        }
    }

    pub fn as_permutation(&self) -> Option<&Permutation> {
        match self {
            Point::Permutation(p) => Some(p),
            Point::Selection(_) => None,
        }
    }

    /// The permutation this point induces on `n` positions.
    pub fn to_permutation(&self, n: usize) -> Result<Permutation> {
        match self {
            Point::Permutation(p) => Ok(p.clone()),
            Point::Selection(s) => selection_to_permutation(s, n),
        }
    }

    fn key(&self) -> Vec<usize> {
        match self {
            Point::Selection(s) => {
                // order inside a selection is irrelevant to the channel
                let mut k = s.as_slice().to_vec();
                k.sort_unstable();
                k
            }
            Point::Permutation(p) => p.as_slice().to_vec(),
        }
    }
}

impl Domain {
    pub fn dim(&self) -> usize {
        match *self {
            Domain::Selection { v, .. } => v,
            Domain::Permutation { n } => n,
        }
    }

    fn upper(&self) -> f64 {
        match *self {
            Domain::Selection { n, .. } => (n - 1) as f64,
            Domain::Permutation { .. } => 1.0,
        }
    }

    /// Decodes an encoded vector into a concrete point.
    fn decode(&self, x: &[f64]) -> Point {
        match *self {
            Domain::Selection { n, v } => {
                debug_assert_eq!(x.len(), v);
                let mut taken = vec![false; n];
                let mut chosen = Vec::with_capacity(v);
                for &raw in x {
                    let want = raw.round().clamp(0.0, (n - 1) as f64) as usize;
                    let mut pick = None;
                    // nearest free integer, preferring the lower on ties
                    for delta in 0..n {
                        if want >= delta && !taken[want - delta] {
                            pick = Some(want - delta);
                            break;
                        }
                        if want + delta < n && !taken[want + delta] {
                            pick = Some(want + delta);
                            break;
                        }
                    }
                    let p = pick.expect("v <= n guarantees a free slot");
                    taken[p] = true;
                    chosen.push(p);
                }
                Point::Selection(Selection::new(chosen).expect("distinct by construction"))
            }
            Domain::Permutation { n } => {
                debug_assert_eq!(x.len(), n);
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by(|&a, &b| {
                    x[a].partial_cmp(&x[b])
                        .unwrap_or(std::cmp::Ordering::Equal)
                        .then(a.cmp(&b))
                });
                Point::Permutation(Permutation::new(order).expect("argsort is a bijection"))
            }
        }
    }
}

/// One objective evaluation in the log.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub point: Point,
    pub value: f64,
}

/// Result of a surrogate search.
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub best_point: Point,
    pub best_value: f64,
    pub log: Vec<Evaluation>,
}

/// Minimizes `objective` over `domain` with at most `max_evaluations`
/// objective calls. The optimizer itself is deterministic given
/// `master_seed`; pair it with a deterministic objective (common random
/// numbers) for reproducible searches.
pub fn surrogate_optimize<F>(
    mut objective: F,
    domain: &Domain,
    max_evaluations: u64,
    master_seed: u64,
) -> Result<SearchOutcome>
where
    F: FnMut(&Point) -> Result<f64>,
{
    if max_evaluations == 0 {
        return Err(Error::InvalidParameter(
            "budget must allow at least one evaluation".into(),
        ));
    }
    let dim = domain.dim();
    let upper = domain.upper();
    let mut driver: ChaCha8Rng = rng::substream(master_seed, u64::MAX);

    let mut evaluated_x: Vec<Vec<f64>> = Vec::new();
    let mut evaluated_f: Vec<f64> = Vec::new();
    let mut log: Vec<Evaluation> = Vec::new();
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut best_idx = 0usize;

    let mut eval = |x: Vec<f64>,
                    evaluated_x: &mut Vec<Vec<f64>>,
                    evaluated_f: &mut Vec<f64>,
                    log: &mut Vec<Evaluation>,
                    seen: &mut HashSet<Vec<usize>>,
                    best_idx: &mut usize|
     -> Result<()> {
        let point = domain.decode(&x);
        let value = objective(&point)?;
        if !value.is_finite() {
            return Err(Error::NonFinite("objective value"));
        }
        seen.insert(point.key());
        log.push(Evaluation {
            point,
            value,
        });
        evaluated_x.push(x);
        evaluated_f.push(value);
        if value < evaluated_f[*best_idx] {
            *best_idx = evaluated_f.len() - 1;
        }
        Ok(())
    };

    // Latin hypercube initial design, clamped to the budget.
    let design_target = 2 * dim + 2;
    let design_size = (design_target as u64).min(max_evaluations) as usize;
    for row in latin_hypercube(design_size, dim, upper, &mut driver) {
        eval(
            row,
            &mut evaluated_x,
            &mut evaluated_f,
            &mut log,
            &mut seen,
            &mut best_idx,
        )?;
    }

    let mut step = INITIAL_STEP;
    let mut stall = 0u32;
    let stall_limit = (dim as u32).max(5);

    while (log.len() as u64) < max_evaluations {
        let iter = log.len() - design_size;
        let weight = WEIGHT_CYCLE[iter % WEIGHT_CYCLE.len()];
        let surrogate = RbfModel::fit(&evaluated_x, &evaluated_f);

        let incumbent = evaluated_x[best_idx].clone();
        let perturb_prob = if dim <= 20 {
            1.0
        } else {
            (20.0 / dim as f64).max(3.0 / dim as f64)
        };

        let mut chosen: Option<Vec<f64>> = None;
        let mut chosen_score = f64::INFINITY;
        let mut pool: Vec<Vec<f64>> = Vec::with_capacity(CANDIDATES_PER_ITER);
        for _ in 0..CANDIDATES_PER_ITER {
            let mut x = incumbent.clone();
            let mut touched = false;
            for coord in x.iter_mut() {
                if driver.random::<f64>() < perturb_prob {
                    let z: f64 = driver.sample(StandardNormal);
                    *coord = (*coord + step * upper * z).clamp(0.0, upper);
                    touched = true;
                }
            }
            if !touched {
                let i = driver.random_range(0..dim);
                let z: f64 = driver.sample(StandardNormal);
                x[i] = (x[i] + step * upper * z).clamp(0.0, upper);
            }
            pool.push(x);
        }
        // prefer candidates decoding to something not yet evaluated
        let fresh: Vec<&Vec<f64>> = pool
            .iter()
            .filter(|x| !seen.contains(&domain.decode(x).key()))
            .collect();
        let scored: Vec<&Vec<f64>> = if fresh.is_empty() {
            pool.iter().collect()
        } else {
            fresh
        };

        let predictions: Vec<f64> = scored
            .iter()
            .map(|x| match &surrogate {
                Some(model) => model.predict(x),
                None => 0.0,
            })
            .collect();
        let distances: Vec<f64> = scored
            .iter()
            .map(|x| min_distance(x, &evaluated_x))
            .collect();
        let (pmin, pmax) = min_max(&predictions);
        let (dmin, dmax) = min_max(&distances);
        for ((x, &pred), &dist) in scored.iter().zip(&predictions).zip(&distances) {
            let vs = if pmax > pmin {
                (pred - pmin) / (pmax - pmin)
            } else {
                0.0
            };
            let vd = if dmax > dmin {
                (dmax - dist) / (dmax - dmin)
            } else {
                0.0
            };
            let score = weight * vs + (1.0 - weight) * vd;
            if score < chosen_score {
                chosen_score = score;
                chosen = Some((*x).clone());
            }
        }

        let x = chosen.expect("candidate pool is never empty");
        let previous_best = evaluated_f[best_idx];
        eval(
            x,
            &mut evaluated_x,
            &mut evaluated_f,
            &mut log,
            &mut seen,
            &mut best_idx,
        )?;
        if evaluated_f[best_idx] < previous_best {
            stall = 0;
            step = (step * 1.3).min(INITIAL_STEP);
        } else {
            stall += 1;
            if stall >= stall_limit {
                stall = 0;
                step = (step * 0.5).max(MIN_STEP);
            }
        }
    }

    Ok(SearchOutcome {
        best_point: log[best_idx].point.clone(),
        best_value: evaluated_f[best_idx],
        log,
    })
}

fn min_max(values: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

fn min_distance(x: &[f64], points: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .map(|p| dist(x, p))
        .fold(f64::INFINITY, f64::min)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Latin hypercube sample of `rows` points in `[0, upper]^dim`.
fn latin_hypercube<R: Rng>(rows: usize, dim: usize, upper: f64, rng: &mut R) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; dim]; rows];
    let mut strata: Vec<usize> = (0..rows).collect();
    for d in 0..dim {
        // Fisher-Yates shuffle of stratum order for this dimension
        for i in (1..rows).rev() {
            let j = rng.random_range(0..=i);
            strata.swap(i, j);
        }
        for (r, row) in out.iter_mut().enumerate() {
            let jitter: f64 = rng.random();
            row[d] = (strata[r] as f64 + jitter) / rows as f64 * upper;
        }
    }
    out
}

/// Cubic RBF interpolant with a linear polynomial tail:
/// `s(x) = Σ λ_i ||x − x_i||³ + bᵀx + a`.
struct RbfModel {
    centers: Vec<Vec<f64>>,
    lambda: DVector<f64>,
    linear: DVector<f64>,
    constant: f64,
}

impl RbfModel {
    /// Solves the standard saddle system; returns `None` when the system
    /// is singular (e.g. affinely dependent points), in which case the
    /// caller falls back to pure distance scoring.
    fn fit(points: &[Vec<f64>], values: &[f64]) -> Option<Self> {
        let m = points.len();
        let dim = points[0].len();
        let size = m + dim + 1;
        let mut a = DMatrix::zeros(size, size);
        for i in 0..m {
            for j in 0..m {
                let r = dist(&points[i], &points[j]);
                a[(i, j)] = r * r * r;
            }
            // tiny ridge keeps nearly-duplicate centers solvable
            a[(i, i)] += 1e-10;
            for d in 0..dim {
                a[(i, m + d)] = points[i][d];
                a[(m + d, i)] = points[i][d];
            }
            a[(i, m + dim)] = 1.0;
            a[(m + dim, i)] = 1.0;
        }
        let mut rhs = DVector::zeros(size);
        for (i, &v) in values.iter().enumerate() {
            rhs[i] = v;
        }
        let solution = a.lu().solve(&rhs)?;
        Some(Self {
            centers: points.to_vec(),
            lambda: solution.rows(0, m).into_owned(),
            linear: solution.rows(m, dim).into_owned(),
            constant: solution[m + dim],
        })
    }

    fn predict(&self, x: &[f64]) -> f64 {
        let mut value = self.constant;
        for (c, &l) in self.centers.iter().zip(self.lambda.iter()) {
            let r = dist(x, c);
            value += l * r * r * r;
        }
        for (d, &b) in self.linear.iter().enumerate() {
            value += b * x[d];
        }
        value
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_objective_returns_the_constant() {
        let domain = Domain::Selection { n: 8, v: 1 };
        let out = surrogate_optimize(|_| Ok(4.25), &domain, 12, 3).unwrap();
        assert_eq!(out.best_value, 4.25);
        assert_eq!(out.log.len(), 12);
    }

    #[test]
    fn budget_of_one_returns_single_evaluation() {
        let domain = Domain::Permutation { n: 6 };
        let out = surrogate_optimize(|_| Ok(1.0), &domain, 1, 9).unwrap();
        assert_eq!(out.log.len(), 1);
        assert!(out.best_point.as_permutation().is_some());
    }

    #[test]
    fn incumbent_is_best_of_log() {
        let domain = Domain::Selection { n: 16, v: 2 };
        let out = surrogate_optimize(
            |p| {
                let s = p.as_selection().unwrap().as_slice();
                Ok((s[0] as f64 - 3.0).abs() + (s[1] as f64 - 11.0).abs())
            },
            &domain,
            40,
            5,
        )
        .unwrap();
        let log_best = out
            .log
            .iter()
            .map(|e| e.value)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(out.best_value, log_best);
    }

    #[test]
    fn non_finite_objective_is_an_error() {
        let domain = Domain::Selection { n: 4, v: 1 };
        let res = surrogate_optimize(|_| Ok(f64::NAN), &domain, 4, 1);
        assert!(matches!(res, Err(Error::NonFinite(_))));
    }

    #[test]
    fn finds_hidden_selection_quickly() {
        let domain = Domain::Selection { n: 16, v: 1 };
        let hidden = 11.0;
        let mut hits = 0;
        for seed in 0..100 {
            let out = surrogate_optimize(
                |p| {
                    let s = p.as_selection().unwrap().as_slice()[0] as f64;
                    Ok((s - hidden) * (s - hidden))
                },
                &domain,
                30,
                seed,
            )
            .unwrap();
            if out.best_value == 0.0 {
                hits += 1;
            }
        }
        assert!(hits >= 95, "found hidden point in only {hits}/100 runs");
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let domain = Domain::Permutation { n: 8 };
        let obj = |p: &Point| {
            let perm = p.as_permutation().unwrap();
            Ok(perm
                .as_slice()
                .iter()
                .enumerate()
                .map(|(i, &v)| (i as f64 - v as f64).abs())
                .sum())
        };
        let a = surrogate_optimize(obj, &domain, 25, 77).unwrap();
        let b = surrogate_optimize(obj, &domain, 25, 77).unwrap();
        assert_eq!(a.best_value, b.best_value);
        assert_eq!(
            a.best_point.as_permutation().unwrap().as_slice(),
            b.best_point.as_permutation().unwrap().as_slice()
        );
    }

    #[test]
    fn permutation_decoding_is_argsort() {
        let domain = Domain::Permutation { n: 4 };
        let p = domain.decode(&[0.9, 0.1, 0.5, 0.3]);
        assert_eq!(p.as_permutation().unwrap().as_slice(), &[1, 3, 2, 0]);
    }

    #[test]
    fn selection_decoding_repairs_collisions() {
        let domain = Domain::Selection { n: 8, v: 3 };
        let p = domain.decode(&[2.2, 1.8, 2.4]);
        let s = p.as_selection().unwrap().as_slice();
        assert_eq!(s.len(), 3);
        let set: HashSet<_> = s.iter().collect();
        assert_eq!(set.len(), 3);
        assert!(s.contains(&2));
    }
}
