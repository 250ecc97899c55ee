//! The Monte Carlo sliced objective and its two minimizers.
//!
//! For particles w = (w_1, ..., w_k) in the radius-R ball and slice matrix D,
//! the objective is
//!
//! ```text
//! F(w) = (1/(m k)) * sum_j sum_q (<w_q, V_j> - D[rank_j(q), j])^2
//! ```
//!
//! where rank_j(q) is the rank of particle q among the projections onto V_j.
//! Because each column of D is sorted, this equals the direction-averaged 1-D
//! squared Wasserstein distance between the projected particles and the slice.
//!
//! `fit_bcd` alternates between fixing the ranks and solving the resulting
//! quadratic exactly over the product ball; the per-particle block problem
//!
//! ```text
//! minimize (U - L^{-1} vbar_q)' L (U - L^{-1} vbar_q)   over ||U|| <= R,
//! L = sum_j V_j V_j',   vbar_q = sum_j D[rank_j(q), j] V_j
//! ```
//!
//! is a ball-constrained least-squares problem solved by a safeguarded
//! root-find on the Lagrange multiplier. `fit_abcd` replaces the block solve
//! with its large-m limit `(d/m) vbar_q` followed by projection onto the
//! product ball, running a fixed number of iterations.

use crate::data::NormalizedDataset;
use crate::error::{Error, Result};
use crate::rng::{self, tag};
use crate::slicing::{build_slice_matrix, SliceMatrix};
use crate::sphere::{dot, norm2, project_ball, DirectionSet};
use crate::transport::w2_squared_sorted;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use std::time::Instant;

/// Default displacement threshold for declaring block coordinate descent
/// converged; an exact zero is not floating-point realizable.
pub const DEFAULT_BCD_TOL: f64 = 1e-9;

/// Default iteration cap for block coordinate descent.
pub const DEFAULT_BCD_MAX_ITER: usize = 200;

/// k particles in the closed ball of radius `radius`.
#[derive(Debug, Clone)]
pub struct ParticleConfig {
    points: Vec<Vec<f64>>,
    radius: f64,
}

impl ParticleConfig {
    /// Validates that every particle lies in the ball (tolerance 1e-9).
    pub fn new(points: Vec<Vec<f64>>, radius: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("particle set must be non-empty"));
        }
        let d = points[0].len();
        if points.iter().any(|p| p.len() != d) {
            return Err(Error::invalid("particles have mixed dimensions"));
        }
        for (q, p) in points.iter().enumerate() {
            let n = norm2(p);
            if !(n <= radius + 1e-9) {
                return Err(Error::invalid(format!(
                    "particle {q} has norm {n}, outside the radius-{radius} ball"
                )));
            }
        }
        Ok(ParticleConfig { points, radius })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn into_points(self) -> Vec<Vec<f64>> {
        self.points
    }
}

/// Optimization summary. `objective_trace[0]` is the objective of the initial
/// configuration; entry `l` is the objective after iteration `l`. Times are
/// wall-clock seconds; `slice_time` covers slice-matrix construction and
/// `iter_time` the iteration loop, so `iter_time` is the quantity governed by
/// the per-iteration complexity in k and m alone.
#[derive(Debug, Clone)]
pub struct FitReport {
    pub final_objective: f64,
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub wall_time: f64,
    pub slice_time: f64,
    pub iter_time: f64,
}

/// A sorting permutation `nu` (rank -> index) and its inverse (index -> rank).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankAssignment {
    pub nu: Vec<usize>,
    pub nu_inv: Vec<usize>,
}

/// Stable argsort: `nu[r]` is the index of the rank-r smallest entry, with
/// ties keeping original order, so the permutation is deterministic.
pub fn argsort_stable(a: &[f64]) -> Result<RankAssignment> {
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("argsort input has a non-finite entry"));
    }
    let mut nu: Vec<usize> = (0..a.len()).collect();
    nu.sort_by(|&i, &j| a[i].partial_cmp(&a[j]).expect("finite entries"));
    let mut nu_inv = vec![0usize; a.len()];
    for (rank, &idx) in nu.iter().enumerate() {
        nu_inv[idx] = rank;
    }
    Ok(RankAssignment { nu, nu_inv })
}

fn check_shapes(points: &[Vec<f64>], sm: &SliceMatrix, dirs: &DirectionSet) -> Result<()> {
    if points.len() != sm.k() {
        return Err(Error::invalid(format!(
            "particle count {} does not match slice rows {}",
            points.len(),
            sm.k()
        )));
    }
    if dirs.len() != sm.m() {
        return Err(Error::invalid(format!(
            "direction count {} does not match slice columns {}",
            dirs.len(),
            sm.m()
        )));
    }
    if points.iter().any(|p| p.len() != dirs.dim()) {
        return Err(Error::invalid("particle dimension does not match directions"));
    }
    Ok(())
}

/// The Monte Carlo objective F(w): the average over directions of the 1-D
/// squared Wasserstein distance between the projected particles and the
/// corresponding slice column. Sorting the projections realizes the optimal
/// rank assignment, so no explicit permutation is needed.
pub fn eval_objective(
    points: &[Vec<f64>],
    sm: &SliceMatrix,
    dirs: &DirectionSet,
) -> Result<f64> {
    check_shapes(points, sm, dirs)?;
    let per_dir: Vec<f64> = dirs
        .directions()
        .par_iter()
        .enumerate()
        .map(|(j, v)| {
            let mut proj: Vec<f64> = points.iter().map(|p| dot(p, v.coords())).collect();
            proj.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite projections"));
            w2_squared_sorted(sm.col(j), &proj)
        })
        .collect();
    // fixed-order reduction keeps the sum bit-identical across thread counts
    Ok(per_dir.iter().sum::<f64>() / sm.m() as f64)
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix
/// in row-major order; `None` if a pivot degenerates.
fn cholesky(a: &[f64], d: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let mut s = a[i * d + j];
            for p in 0..j {
                s -= l[i * d + p] * l[j * d + p];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return None;
                }
                l[i * d + i] = s.sqrt();
            } else {
                l[i * d + j] = s / l[j * d + j];
            }
        }
    }
    Some(l)
}

/// Solves L L' x = b given the Cholesky factor.
fn chol_solve(l: &[f64], d: usize, b: &[f64]) -> Vec<f64> {
    let mut x = b.to_vec();
    for i in 0..d {
        for j in 0..i {
            x[i] -= l[i * d + j] * x[j];
        }
        x[i] /= l[i * d + i];
    }
    for i in (0..d).rev() {
        for j in i + 1..d {
            x[i] -= l[j * d + i] * x[j];
        }
        x[i] /= l[i * d + i];
    }
    x
}

fn shifted_solve(a: &[f64], d: usize, lambda: f64, b: &[f64]) -> Option<Vec<f64>> {
    let mut shifted = a.to_vec();
    for i in 0..d {
        shifted[i * d + i] += lambda;
    }
    cholesky(&shifted, d).map(|l| chol_solve(&l, d, b))
}

/// Minimizes (U - L^{-1}v)' L (U - L^{-1}v) over the ball ||U|| <= R for
/// symmetric positive definite `l` (row-major d by d).
///
/// Returns the unconstrained solution when it lies inside; otherwise the
/// boundary point U(lambda) = (L + lambda I)^{-1} v whose norm equals R,
/// found by a safeguarded root-find on the strictly decreasing map
/// lambda -> ||U(lambda)|| (norm residual tolerance 1e-10).
pub fn solve_ball_least_squares(l: &[f64], v: &[f64], r: f64) -> Result<Vec<f64>> {
    let d = v.len();
    if l.len() != d * d {
        return Err(Error::invalid("matrix and vector dimensions disagree"));
    }
    if !(r > 0.0) {
        return Err(Error::invalid("ball radius must be positive"));
    }
    let factor = cholesky(l, d).ok_or_else(|| {
        Error::Conditioning(
            "direction Gram matrix is singular; use at least d directions in general position"
                .into(),
        )
    })?;
    let unconstrained = chol_solve(&factor, d, v);
    if norm2(&unconstrained) <= r {
        return Ok(unconstrained);
    }

    // Bracket the multiplier: the norm is > R at 0 and tends to 0, and
    // ||U(lambda)|| <= ||v|| / lambda gives a guaranteed upper endpoint.
    let mut lo = 0.0;
    let mut hi = (norm2(v) / r).max(1e-12);
    while shifted_solve(l, d, hi, v).map_or(true, |u| norm2(&u) > r) {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::Conditioning("ball least squares failed to bracket".into()));
        }
    }
    let mut u = unconstrained;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        match shifted_solve(l, d, mid, v) {
            Some(cand) => {
                let n = norm2(&cand);
                u = cand;
                if (n - r).abs() <= 1e-10 {
                    return Ok(u);
                }
                if n > r {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            // lambda = 0 with semidefinite L can fail; push into the interior
            None => lo = mid.max(lo + 1e-18),
        }
    }
    // interval exhausted below f64 resolution; u is the closest bracketed point
    Ok(u)
}

/// Draws `count` points uniformly from the radius-r ball in R^d.
pub fn sample_ball_uniform<R: Rng>(d: usize, count: usize, r: f64, rng: &mut R) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| {
            let mut p: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let n = norm2(&p);
            let scale = if n > 1e-300 {
                r * rng.gen::<f64>().powf(1.0 / d as f64) / n
            } else {
                0.0
            };
            for x in &mut p {
                *x *= scale;
            }
            p
        })
        .collect()
}

/// Per-direction inverse rank maps for the current particles: entry `[j][q]`
/// is the rank of particle q among projections onto direction j. Computed in
/// parallel over directions; the result is a plain vector indexed by j, so
/// downstream accumulation order does not depend on scheduling.
fn inverse_ranks(points: &[Vec<f64>], dirs: &DirectionSet) -> Vec<Vec<usize>> {
    dirs.directions()
        .par_iter()
        .map(|v| {
            let proj: Vec<f64> = points.iter().map(|p| dot(p, v.coords())).collect();
            argsort_stable(&proj).expect("projections are finite").nu_inv
        })
        .collect()
}

/// `vbar[q] = sum_j D[rank_j(q), j] * V_j`, accumulated in ascending j.
fn rank_weighted_direction_sums(
    ranks: &[Vec<usize>],
    sm: &SliceMatrix,
    dirs: &DirectionSet,
    k: usize,
) -> Vec<Vec<f64>> {
    let d = dirs.dim();
    let mut vbar = vec![vec![0.0; d]; k];
    for (j, v) in dirs.directions().iter().enumerate() {
        let col = sm.col(j);
        let nu_inv = &ranks[j];
        for q in 0..k {
            let target = col[nu_inv[q]];
            for (acc, c) in vbar[q].iter_mut().zip(v.coords()) {
                *acc += target * c;
            }
        }
    }
    vbar
}

fn gram_matrix(dirs: &DirectionSet) -> Vec<f64> {
    let d = dirs.dim();
    let mut l = vec![0.0; d * d];
    for v in dirs.directions() {
        let c = v.coords();
        for i in 0..d {
            for j in 0..d {
                l[i * d + j] += c[i] * c[j];
            }
        }
    }
    l
}

fn step_norm(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(p, q)| p.iter().zip(q).map(|(x, y)| (x - y) * (x - y)))
        .sum::<f64>()
        .sqrt()
}

fn validate_fit_inputs(nd: &NormalizedDataset, dirs: &DirectionSet, k: usize, r: f64) -> Result<()> {
    if nd.dim() != dirs.dim() {
        return Err(Error::invalid(format!(
            "data dimension {} does not match direction dimension {}",
            nd.dim(),
            dirs.dim()
        )));
    }
    if k == 0 || k > nd.len() {
        return Err(Error::invalid(format!(
            "particle count {k} must be in 1..={}",
            nd.len()
        )));
    }
    if !(r > 0.0) {
        return Err(Error::invalid("ball radius must be positive"));
    }
    Ok(())
}

/// Block coordinate descent from a uniform random initialization in the
/// product ball. Stops when the particle displacement drops to `tol` or
/// after `max_iter` iterations.
pub fn fit_bcd(
    nd: &NormalizedDataset,
    dirs: &DirectionSet,
    k: usize,
    r: f64,
    seed: u64,
    max_iter: usize,
    tol: f64,
) -> Result<(ParticleConfig, FitReport)> {
    validate_fit_inputs(nd, dirs, k, r)?;
    let init = sample_ball_uniform(dirs.dim(), k, r, &mut rng::stream(seed, tag::PARTICLE_INIT));
    fit_bcd_from(nd, dirs, init, r, max_iter, tol)
}

/// Block coordinate descent from an explicit initial configuration.
pub fn fit_bcd_from(
    nd: &NormalizedDataset,
    dirs: &DirectionSet,
    init: Vec<Vec<f64>>,
    r: f64,
    max_iter: usize,
    tol: f64,
) -> Result<(ParticleConfig, FitReport)> {
    let k = init.len();
    validate_fit_inputs(nd, dirs, k, r)?;
    if max_iter == 0 {
        return Err(Error::invalid("max_iter must be >= 1"));
    }
    let start = Instant::now();
    let sm = build_slice_matrix(nd, dirs, k)?;
    let slice_time = start.elapsed().as_secs_f64();

    let gram = gram_matrix(dirs);
    let iter_start = Instant::now();
    let mut points = init;
    let mut trace = vec![eval_objective(&points, &sm, dirs)?];
    let mut converged = false;
    let mut iterations = 0;
    for _ in 1..=max_iter {
        iterations += 1;
        let ranks = inverse_ranks(&points, dirs);
        let vbar = rank_weighted_direction_sums(&ranks, &sm, dirs, k);
        let next: Vec<Vec<f64>> = vbar
            .par_iter()
            .map(|v| solve_ball_least_squares(&gram, v, r))
            .collect::<Result<_>>()?;
        let delta = step_norm(&points, &next);
        points = next;
        trace.push(eval_objective(&points, &sm, dirs)?);
        if delta <= tol {
            converged = true;
            break;
        }
    }
    let iter_time = iter_start.elapsed().as_secs_f64();
    let report = FitReport {
        final_objective: *trace.last().expect("trace is non-empty"),
        objective_trace: trace,
        iterations,
        converged,
        wall_time: start.elapsed().as_secs_f64(),
        slice_time,
        iter_time,
    };
    Ok((ParticleConfig::new(points, r)?, report))
}

/// Approximate block coordinate descent: the block solve is replaced by its
/// large-m closed form `(d/m) vbar_q` followed by projection onto the product
/// ball. Runs exactly `t` iterations.
pub fn fit_abcd(
    nd: &NormalizedDataset,
    dirs: &DirectionSet,
    k: usize,
    r: f64,
    seed: u64,
    t: usize,
) -> Result<(ParticleConfig, FitReport)> {
    validate_fit_inputs(nd, dirs, k, r)?;
    let init = sample_ball_uniform(dirs.dim(), k, r, &mut rng::stream(seed, tag::PARTICLE_INIT));
    fit_abcd_from(nd, dirs, init, r, t)
}

/// Approximate block coordinate descent from an explicit initialization.
pub fn fit_abcd_from(
    nd: &NormalizedDataset,
    dirs: &DirectionSet,
    init: Vec<Vec<f64>>,
    r: f64,
    t: usize,
) -> Result<(ParticleConfig, FitReport)> {
    let k = init.len();
    validate_fit_inputs(nd, dirs, k, r)?;
    if t == 0 {
        return Err(Error::invalid("iteration count must be >= 1"));
    }
    let start = Instant::now();
    let sm = build_slice_matrix(nd, dirs, k)?;
    let slice_time = start.elapsed().as_secs_f64();

    let d = dirs.dim();
    let m = dirs.len() as f64;
    let iter_start = Instant::now();
    let mut points = init;
    let mut trace = vec![eval_objective(&points, &sm, dirs)?];
    for _ in 0..t {
        let ranks = inverse_ranks(&points, dirs);
        let vbar = rank_weighted_direction_sums(&ranks, &sm, dirs, k);
        points = vbar
            .into_iter()
            .map(|v| project_ball(&v.iter().map(|x| x * d as f64 / m).collect::<Vec<_>>(), r))
            .collect();
        trace.push(eval_objective(&points, &sm, dirs)?);
    }
    let iter_time = iter_start.elapsed().as_secs_f64();
    let report = FitReport {
        final_objective: *trace.last().expect("trace is non-empty"),
        objective_trace: trace,
        iterations: t,
        converged: true,
        wall_time: start.elapsed().as_secs_f64(),
        slice_time,
        iter_time,
    };
    Ok((ParticleConfig::new(points, r)?, report))
}
