//! Treatment-effect estimation through a random coefficient model.
//!
//! The outcome model is `Y = <Z, beta_Z> + W * R + U` with unit-level effect
//! R. Stacking `X = (Z, W, 1)` and `beta = (beta_Z, R, U)` turns it into the
//! linear random coefficient model, except that a covariate with bounded
//! support (binary treatment, intercept) violates the support conditions the
//! estimator needs. The working model therefore perturbs the treatment with
//! heavy-tailed noise, `W + eps * C` with C standard Cauchy, which restores
//! full support while moving the design arbitrarily little in probability as
//! eps shrinks. The effect distribution is then read off the treatment
//! coordinate of the fitted particles.

use crate::data::{normalize, read_numeric_csv, Dataset};
use crate::error::{Error, Result};
use crate::estimator::fit_abcd;
use crate::rng::{self, tag};
use crate::simbench::default_k;
use crate::sphere::sample_haar_directions;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Covariates Z (n by p), treatments W, outcomes Y.
#[derive(Debug, Clone)]
pub struct CausalDataset {
    z: Vec<Vec<f64>>,
    w: Vec<f64>,
    y: Vec<f64>,
}

impl CausalDataset {
    pub fn new(z: Vec<Vec<f64>>, w: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if z.is_empty() {
            return Err(Error::data("causal dataset has no rows"));
        }
        if z.len() != w.len() || z.len() != y.len() {
            return Err(Error::data(format!(
                "row counts disagree: {} covariate rows, {} treatments, {} outcomes",
                z.len(),
                w.len(),
                y.len()
            )));
        }
        let p = z[0].len();
        if p < 1 {
            return Err(Error::data("need at least one covariate column"));
        }
        for (i, row) in z.iter().enumerate() {
            if row.len() != p {
                return Err(Error::data(format!("row {i} has {} covariates, expected {p}", row.len())));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::data(format!("row {i} has a non-finite covariate")));
            }
        }
        if let Some(i) = w.iter().position(|v| !v.is_finite()) {
            return Err(Error::data(format!("row {i} has a non-finite treatment")));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::data(format!("row {i} has a non-finite outcome")));
        }
        Ok(CausalDataset { z, w, y })
    }

    pub fn z(&self) -> &[Vec<f64>] {
        &self.z
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn p(&self) -> usize {
        self.z[0].len()
    }
}

/// Reads a causal dataset from CSV with header `z1,...,zp,w,y`.
pub fn read_causal_csv(path: &Path, p: usize) -> Result<CausalDataset> {
    if p < 1 {
        return Err(Error::invalid("need at least one covariate column"));
    }
    let mut expected: Vec<String> = (1..=p).map(|j| format!("z{j}")).collect();
    expected.push("w".into());
    expected.push("y".into());
    let (rows, _) = read_numeric_csv(path, &expected)?;
    let mut z = Vec::with_capacity(rows.len());
    let mut w = Vec::with_capacity(rows.len());
    let mut y = Vec::with_capacity(rows.len());
    for mut row in rows {
        let yv = row.pop().expect("width checked");
        let wv = row.pop().expect("width checked");
        z.push(row);
        w.push(wv);
        y.push(yv);
    }
    CausalDataset::new(z, w, y)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CausalConfig {
    /// Scale of the Cauchy treatment perturbation.
    pub epsilon: f64,
    /// Ball radius for the coefficient particles.
    pub r_ball: f64,
    /// Neighbor count; `None` applies the `ceil(n^{d/(2d-1)})` rule with
    /// d = p + 2.
    pub k: Option<usize>,
    /// Direction count.
    pub m: usize,
    /// Iteration count.
    pub t: usize,
    /// Standardize covariate columns and outcomes before fitting; effect
    /// samples are mapped back to the original outcome scale.
    pub normalize_inputs: bool,
}

impl Default for CausalConfig {
    fn default() -> Self {
        CausalConfig {
            epsilon: 0.005,
            r_ball: 10.0,
            k: None,
            m: 1000,
            t: 20,
            normalize_inputs: true,
        }
    }
}

impl CausalConfig {
    fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::invalid("perturbation scale must be positive"));
        }
        if !(self.r_ball > 0.0) {
            return Err(Error::invalid("ball radius must be positive"));
        }
        if self.m < 1 || self.t < 1 {
            return Err(Error::invalid("direction and iteration counts must be >= 1"));
        }
        Ok(())
    }
}

/// Effect samples (one per particle, original outcome scale) and their
/// nearest-rank percentiles.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectSummary {
    /// Treatment coordinate of each fitted particle.
    pub samples: Vec<f64>,
    /// Nearest-rank percentiles of `samples` at the levels in
    /// [`PERCENTILE_LEVELS`].
    pub percentiles: [(u32, f64); 5],
    /// The full fitted particles (dimension p + 2), for inspection and
    /// serialization.
    pub particles: Vec<Vec<f64>>,
}

pub const PERCENTILE_LEVELS: [u32; 5] = [5, 25, 50, 75, 95];

/// Nearest-rank percentile: the `ceil(level/100 * n)`-th smallest sample.
fn nearest_rank(sorted: &[f64], level: u32) -> f64 {
    let n = sorted.len();
    let idx = ((level as f64 / 100.0 * n as f64).ceil() as usize).clamp(1, n);
    sorted[idx - 1]
}

/// Builds the working design: rows `(Z_i, W_i + eps * C_i, 1)` with
/// independent standard Cauchy draws `C_i = tan(pi * (u - 1/2))`. The
/// trailing constant column absorbs the intercept coefficient U.
pub fn build_design(cd: &CausalDataset, cfg: &CausalConfig, seed: u64) -> Result<Dataset> {
    cfg.validate()?;
    let mut rng = rng::stream(seed, tag::CAUCHY);
    let mut x = Vec::with_capacity(cd.len());
    for (row, &w) in cd.z().iter().zip(cd.w()) {
        let u: f64 = rng.sample(rand::distributions::Open01);
        let cauchy = (std::f64::consts::PI * (u - 0.5)).tan();
        let mut design_row = row.clone();
        design_row.push(w + cfg.epsilon * cauchy);
        design_row.push(1.0);
        x.push(design_row);
    }
    Dataset::new(x, cd.y().to_vec())
}

/// Means and population standard deviations of the covariate columns and the
/// outcome; zero-variance columns keep scale 1 so standardization is a shift.
fn column_stats(values: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let mean = values.clone().sum::<f64>() / n as f64;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    let sd = var.sqrt();
    (mean, if sd > 0.0 { sd } else { 1.0 })
}

/// Estimates the distribution of the unit treatment effect.
///
/// Pipeline: optionally standardize Z columns and Y (treatments are left
/// untouched so the treatment coordinate keeps its scale), build the
/// Cauchy-perturbed design, fit the approximate solver, extract coordinate
/// p + 1 of every particle, undo the outcome scaling, and summarize.
pub fn estimate_effects(cd: &CausalDataset, cfg: &CausalConfig, seed: u64) -> Result<EffectSummary> {
    cfg.validate()?;
    let p = cd.p();
    let d = p + 2;
    let n = cd.len();
    let k = cfg.k.unwrap_or_else(|| default_k(n, d));
    if k > n {
        return Err(Error::invalid(format!("neighbor count {k} exceeds sample size {n}")));
    }

    let (z, y, y_scale) = if cfg.normalize_inputs {
        let mut z = cd.z().to_vec();
        for c in 0..p {
            let (mean, sd) = column_stats(z.iter().map(|row| row[c]), n);
            for row in &mut z {
                row[c] = (row[c] - mean) / sd;
            }
        }
        let (y_mean, y_sd) = column_stats(cd.y().iter().copied(), n);
        let y: Vec<f64> = cd.y().iter().map(|v| (v - y_mean) / y_sd).collect();
        (z, y, y_sd)
    } else {
        (cd.z().to_vec(), cd.y().to_vec(), 1.0)
    };

    let standardized = CausalDataset::new(z, cd.w().to_vec(), y)?;
    let design = build_design(&standardized, cfg, seed)?;
    let nd = normalize(&design)?;
    let dirs = sample_haar_directions(d, cfg.m, seed)?;
    let (pc, _) = fit_abcd(&nd, &dirs, k, cfg.r_ball, seed, cfg.t)?;
    let particles = pc.into_points();

    let mut samples: Vec<f64> = particles.iter().map(|w| w[p] * y_scale).collect();
    let mut sorted = samples.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite effects"));
    let percentiles = PERCENTILE_LEVELS.map(|lvl| (lvl, nearest_rank(&sorted, lvl)));
    samples.shrink_to_fit();
    Ok(EffectSummary { samples, percentiles, particles })
}
