//! Diffusion particle sampler.
//!
//! L particles evolve for t Euler–Maruyama steps. In each step the drift
//! pulls every projected particle toward the slice quantile sitting at its
//! own empirical rank,
//!
//! ```text
//! v(Q) = -(1/m) * sum_j ( <Q, V_j> - quantile_j( cdf_j(<Q, V_j>) ) ) V_j
//! ```
//!
//! where `cdf_j` is the empirical CDF of all L particle projections onto V_j
//! and `quantile_j` the empirical quantile of slice column j. Independent
//! Gaussian noise of scale sqrt(2*lambda*h) is added per coordinate.
//! Particles are not projected onto any ball during the loop: the entropic
//! noise is free to push mass outside, and the quantile targets keep the
//! system anchored. A rank-matched configuration with lambda = 0 is an exact
//! fixed point because the CDF and quantile conventions below invert each
//! other on the grid.

use crate::data::NormalizedDataset;
use crate::error::{Error, Result};
use crate::estimator::sample_ball_uniform;
use crate::rng::{self, tag};
use crate::slicing::{build_slice_matrix, SliceMatrix};
use crate::sphere::{dot, project_ball, DirectionSet};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

/// Parameters of the particle system.
#[derive(Debug, Clone)]
pub struct FlowConfig {
    /// Particle count; conventionally equal to the slice row count k.
    pub l: usize,
    /// Entropic regularization weight, >= 0.
    pub lambda: f64,
    /// Step size, > 0.
    pub h: f64,
    /// Step count, >= 1.
    pub t: usize,
    /// Radius of the initialization ball.
    pub r: f64,
    pub seed: u64,
    /// Record particle positions after every `snapshot_every` steps.
    pub snapshot_every: Option<usize>,
    /// Clamp the final particles to the radius-r ball. The loop itself never
    /// projects; this only affects the returned positions.
    pub clamp_final: bool,
    /// Diagnostic hook: freeze the drift at zero so only the noise acts.
    pub skip_drift: bool,
}

impl FlowConfig {
    /// Standard settings: lambda = 0.01, h = 1, t = 20, no snapshots.
    pub fn new(l: usize, r: f64, seed: u64) -> Self {
        FlowConfig {
            l,
            lambda: 0.01,
            h: 1.0,
            t: 20,
            r,
            seed,
            snapshot_every: None,
            clamp_final: false,
            skip_drift: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.l < 1 {
            return Err(Error::invalid("particle count must be >= 1"));
        }
        if !(self.h > 0.0) {
            return Err(Error::invalid("step size must be positive"));
        }
        if self.t < 1 {
            return Err(Error::invalid("step count must be >= 1"));
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::invalid("regularization weight must be >= 0"));
        }
        if !(self.r > 0.0) {
            return Err(Error::invalid("ball radius must be positive"));
        }
        Ok(())
    }
}

/// Particle positions over the run: optional intermediate snapshots
/// `(step, positions)` and the final configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowTrace {
    pub snapshots: Vec<(usize, Vec<Vec<f64>>)>,
    pub final_particles: Vec<Vec<f64>>,
}

/// Right-continuous empirical CDF: the fraction of `values` that are <= x.
pub fn empirical_cdf(values: &[f64], x: f64) -> f64 {
    debug_assert!(!values.is_empty());
    values.iter().filter(|&&v| v <= x).count() as f64 / values.len() as f64
}

/// Grid quantile of a sorted column: entry `clamp(ceil(p*k), 1, k)` in
/// 1-based indexing, so every p <= 1/k maps to the minimum and p = 1 to the
/// maximum.
pub fn empirical_quantile(sorted_col: &[f64], p: f64) -> Result<f64> {
    if sorted_col.is_empty() {
        return Err(Error::invalid("quantile of an empty column"));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("quantile level {p} outside [0, 1]")));
    }
    let k = sorted_col.len();
    let idx = ((p * k as f64).ceil() as usize).clamp(1, k);
    Ok(sorted_col[idx - 1])
}

/// The drift field at one particle. Reference implementation: the stepping
/// loop computes the same quantity with shared per-direction sorting.
pub fn drift(
    q: &[f64],
    particles: &[Vec<f64>],
    sm: &SliceMatrix,
    dirs: &DirectionSet,
) -> Result<Vec<f64>> {
    if particles.is_empty() {
        return Err(Error::invalid("particle set must be non-empty"));
    }
    if dirs.len() != sm.m() {
        return Err(Error::invalid("direction count does not match slice columns"));
    }
    if q.len() != dirs.dim() || particles.iter().any(|p| p.len() != dirs.dim()) {
        return Err(Error::invalid("dimension mismatch"));
    }
    let m = dirs.len() as f64;
    let mut v = vec![0.0; q.len()];
    for (j, dir) in dirs.directions().iter().enumerate() {
        let proj_q = dot(q, dir.coords());
        let proj_all: Vec<f64> = particles.iter().map(|p| dot(p, dir.coords())).collect();
        let p = empirical_cdf(&proj_all, proj_q);
        let target = empirical_quantile(sm.col(j), p)?;
        let residual = proj_q - target;
        for (acc, c) in v.iter_mut().zip(dir.coords()) {
            *acc -= residual * c / m;
        }
    }
    Ok(v)
}

/// Runs the particle system from a uniform random initialization in the
/// radius-r ball.
pub fn run_flow(
    nd: &NormalizedDataset,
    dirs: &DirectionSet,
    k: usize,
    cfg: &FlowConfig,
) -> Result<FlowTrace> {
    cfg.validate()?;
    let init = sample_ball_uniform(
        dirs.dim(),
        cfg.l,
        cfg.r,
        &mut rng::stream(cfg.seed, tag::PARTICLE_INIT),
    );
    run_flow_from(nd, dirs, k, cfg, init)
}

/// Runs the particle system from explicit initial positions (length must
/// equal `cfg.l`).
pub fn run_flow_from(
    nd: &NormalizedDataset,
    dirs: &DirectionSet,
    k: usize,
    cfg: &FlowConfig,
    init: Vec<Vec<f64>>,
) -> Result<FlowTrace> {
    cfg.validate()?;
    if init.len() != cfg.l {
        return Err(Error::invalid(format!(
            "initial configuration has {} particles, config says {}",
            init.len(),
            cfg.l
        )));
    }
    if init.iter().any(|p| p.len() != dirs.dim()) {
        return Err(Error::invalid("initial particle dimension mismatch"));
    }
    let sm = build_slice_matrix(nd, dirs, k)?;

    let d = dirs.dim();
    let m = dirs.len();
    let l = cfg.l;
    let noise_scale = (2.0 * cfg.lambda * cfg.h).sqrt();
    // one noise stream per particle: parallel updates stay reproducible
    let mut noise: Vec<_> = (0..l)
        .map(|i| rng::stream(rng::derive(cfg.seed, i as u64), tag::FLOW_NOISE))
        .collect();

    let mut particles = init;
    let mut snapshots = Vec::new();
    for step in 1..=cfg.t {
        if !cfg.skip_drift {
            // per-direction projections of all particles, plus a sorted copy
            // for rank lookup
            let projections: Vec<(Vec<f64>, Vec<f64>)> = dirs
                .directions()
                .par_iter()
                .map(|dir| {
                    let proj: Vec<f64> =
                        particles.iter().map(|p| dot(p, dir.coords())).collect();
                    let mut sorted = proj.clone();
                    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite projections"));
                    (proj, sorted)
                })
                .collect();
            let drifts: Vec<Vec<f64>> = (0..l)
                .into_par_iter()
                .map(|i| {
                    let mut v = vec![0.0; d];
                    for (j, dir) in dirs.directions().iter().enumerate() {
                        let (proj, sorted) = &projections[j];
                        let count = sorted.partition_point(|&x| x <= proj[i]);
                        let p = count as f64 / l as f64;
                        let idx = ((p * k as f64).ceil() as usize).clamp(1, k);
                        let residual = proj[i] - sm.col(j)[idx - 1];
                        for (acc, c) in v.iter_mut().zip(dir.coords()) {
                            *acc -= residual * c / m as f64;
                        }
                    }
                    v
                })
                .collect();
            for (p, v) in particles.iter_mut().zip(&drifts) {
                for (x, dv) in p.iter_mut().zip(v) {
                    *x += cfg.h * dv;
                }
            }
        }
        particles
            .par_iter_mut()
            .zip(noise.par_iter_mut())
            .for_each(|(p, rng)| {
                for x in p.iter_mut() {
                    let z: f64 = rng.sample(StandardNormal);
                    *x += noise_scale * z;
                }
            });
        if let Some(every) = cfg.snapshot_every {
            if every > 0 && step % every == 0 && step != cfg.t {
                snapshots.push((step, particles.clone()));
            }
        }
    }
    if cfg.clamp_final {
        for p in &mut particles {
            *p = project_ball(p, cfg.r);
        }
    }
    Ok(FlowTrace { snapshots, final_particles: particles })
}
