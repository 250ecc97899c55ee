//! Synthetic benchmark: coefficient laws, covariate generation, and the
//! repeated-experiment runner.
//!
//! Covariates are drawn from a von Mises–Fisher distribution with mean
//! `(d^{-1/2}, ..., d^{-1/2})` and weak concentration, coefficients from one
//! of three laws on a scale-R support, and responses are exact inner
//! products. Each repetition regenerates data, fits the requested algorithm,
//! and scores the output against a size-matched subsample of the true
//! coefficients with a fresh 100-direction sliced distance.

use crate::data::{fmt_f64, Dataset};
use crate::error::{Error, Result};
use crate::estimator::{fit_abcd, fit_bcd, sample_ball_uniform, DEFAULT_BCD_TOL};
use crate::flow::{run_flow, FlowConfig};
use crate::rng::{self, tag};
use crate::sphere::{dot, norm2, sample_haar_directions, sample_vmf, Direction};
use crate::transport::sw2_point_clouds;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

/// Supports of the three coefficient laws, all on scale R:
/// `sph` is uniform in a radius R/4 ball around `+-(R/2) e2`,
/// `deg` uniform on the radius R/4 sphere around the same centers,
/// `dis` uniform over the 2d points `+-(R/2) e_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LawKind {
    Sph,
    Deg,
    Dis,
}

impl fmt::Display for LawKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            LawKind::Sph => "sph",
            LawKind::Deg => "deg",
            LawKind::Dis => "dis",
        };
        f.write_str(s)
    }
}

impl FromStr for LawKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sph" => Ok(LawKind::Sph),
            "deg" => Ok(LawKind::Deg),
            "dis" => Ok(LawKind::Dis),
            other => Err(Error::invalid(format!(
                "unknown coefficient law {other:?}; expected sph, deg, or dis"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientLaw {
    pub kind: LawKind,
    /// Scale of the support; the estimation ball radius is set to this.
    pub r: f64,
    pub d: usize,
}

impl CoefficientLaw {
    pub fn new(kind: LawKind, r: f64, d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::invalid(format!("dimension must be >= 2, got {d}")));
        }
        if !(r > 0.0) {
            return Err(Error::invalid("law scale must be positive"));
        }
        Ok(CoefficientLaw { kind, r, d })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Bcd,
    Abcd,
    Flow,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Algorithm::Bcd => "bcd",
            Algorithm::Abcd => "abcd",
            Algorithm::Flow => "flow",
        };
        f.write_str(s)
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bcd" => Ok(Algorithm::Bcd),
            "abcd" => Ok(Algorithm::Abcd),
            "flow" => Ok(Algorithm::Flow),
            other => Err(Error::invalid(format!(
                "unknown algorithm {other:?}; expected bcd, abcd, or flow"
            ))),
        }
    }
}

/// The default neighbor count `ceil(n^{d/(2d-1)})`.
pub fn default_k(n: usize, d: usize) -> usize {
    (n as f64).powf(d as f64 / (2.0 * d as f64 - 1.0)).ceil() as usize
}

/// One benchmark configuration, repeated `reps` times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub algorithm: Algorithm,
    pub law: CoefficientLaw,
    pub n: usize,
    /// Neighbor count; `None` applies [`default_k`].
    pub k: Option<usize>,
    /// Direction count for the fit.
    pub m: usize,
    /// Iterations (ABCD/flow step count, BCD iteration cap).
    pub t: usize,
    pub reps: usize,
    pub seed: u64,
    pub vmf_kappa: f64,
    /// Flow-only parameters, ignored by the other algorithms.
    pub flow_lambda: f64,
    pub flow_h: f64,
    /// Flow particle count; `None` means the neighbor count.
    pub flow_l: Option<usize>,
}

impl ExperimentSpec {
    /// Standard settings for one algorithm/law/size cell: 20 repetitions,
    /// concentration 0.1, flow noise 0.01 with unit step.
    pub fn new(algorithm: Algorithm, law: CoefficientLaw, n: usize, m: usize, t: usize, seed: u64) -> Self {
        ExperimentSpec {
            algorithm,
            law,
            n,
            k: None,
            m,
            t,
            reps: 20,
            seed,
            vmf_kappa: 0.1,
            flow_lambda: 0.01,
            flow_h: 1.0,
            flow_l: None,
        }
    }

    pub fn resolved_k(&self) -> usize {
        self.k.unwrap_or_else(|| default_k(self.n, self.law.d))
    }
}

/// Aggregated results of one spec; `per_rep` holds (distance, seconds) in
/// repetition order and the means are plain averages of it.
#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub spec: ExperimentSpec,
    pub k: usize,
    pub mean_distance: f64,
    pub mean_time: f64,
    pub per_rep: Vec<(f64, f64)>,
}

/// Draws n coefficients from the law.
pub fn sample_coefficients(law: &CoefficientLaw, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rng::stream(seed, tag::COEFFICIENTS);
    let d = law.d;
    let half = law.r / 2.0;
    let quarter = law.r / 4.0;
    (0..n)
        .map(|_| match law.kind {
            LawKind::Sph => {
                let delta = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                let mut p = sample_ball_uniform(d, 1, quarter, &mut rng).pop().expect("one point");
                p[1] += delta * half;
                p
            }
            LawKind::Deg => {
                let delta = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                let mut p: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                let n2 = norm2(&p);
                for x in &mut p {
                    *x *= quarter / n2;
                }
                p[1] += delta * half;
                p
            }
            LawKind::Dis => {
                let which = rng.gen_range(0..2 * d);
                let mut p = vec![0.0; d];
                p[which / 2] = if which % 2 == 0 { half } else { -half };
                p
            }
        })
        .collect()
}

/// Generates a synthetic dataset: vMF covariates (already unit norm),
/// law-distributed coefficients, exact responses. Returns the data and the
/// true coefficients.
pub fn generate_dataset(
    law: &CoefficientLaw,
    n: usize,
    vmf_kappa: f64,
    seed: u64,
) -> Result<(Dataset, Vec<Vec<f64>>)> {
    let d = law.d;
    let mean = Direction::from_vector(vec![1.0; d])?;
    let xs = sample_vmf(d, n, vmf_kappa, &mean, seed)?;
    let betas = sample_coefficients(law, n, seed);
    let x: Vec<Vec<f64>> = xs.into_iter().map(|dir| dir.coords().to_vec()).collect();
    let y: Vec<f64> = x.iter().zip(&betas).map(|(row, b)| dot(row, b)).collect();
    Ok((Dataset::new(x, y)?, betas))
}

/// Number of directions used by the scoring metric.
pub const METRIC_DIRECTIONS: usize = 100;

/// One repetition in full: the scored distance, the fit wall time, the
/// size-matched truth subsample used for scoring, and the fitted points.
#[derive(Debug, Clone)]
pub struct RepOutcome {
    pub distance: f64,
    pub seconds: f64,
    pub truth: Vec<Vec<f64>>,
    pub points: Vec<Vec<f64>>,
}

fn run_one_rep(spec: &ExperimentSpec, rep: usize) -> Result<(f64, f64)> {
    run_rep(spec, rep).map(|o| (o.distance, o.seconds))
}

pub fn run_rep(spec: &ExperimentSpec, rep: usize) -> Result<RepOutcome> {
    let rep_seed = rng::derive(spec.seed, rep as u64);
    let (ds, betas) = generate_dataset(&spec.law, spec.n, spec.vmf_kappa, rep_seed)?;
    let nd = crate::data::normalize(&ds)?;
    let k = spec.resolved_k();
    if k > spec.n {
        return Err(Error::invalid(format!(
            "neighbor count {k} exceeds sample size {}",
            spec.n
        )));
    }
    let dirs = sample_haar_directions(spec.law.d, spec.m, rep_seed)?;
    let r = spec.law.r;
    let (points, seconds) = match spec.algorithm {
        Algorithm::Bcd => {
            let (pc, report) = fit_bcd(&nd, &dirs, k, r, rep_seed, spec.t, DEFAULT_BCD_TOL)?;
            (pc.into_points(), report.wall_time)
        }
        Algorithm::Abcd => {
            let (pc, report) = fit_abcd(&nd, &dirs, k, r, rep_seed, spec.t)?;
            (pc.into_points(), report.wall_time)
        }
        Algorithm::Flow => {
            let l = spec.flow_l.unwrap_or(k);
            if l > spec.n {
                return Err(Error::invalid(format!(
                    "flow particle count {l} exceeds sample size {}; the scoring subsample is drawn without replacement",
                    spec.n
                )));
            }
            let mut cfg = FlowConfig::new(l, r, rep_seed);
            cfg.lambda = spec.flow_lambda;
            cfg.h = spec.flow_h;
            cfg.t = spec.t;
            let start = Instant::now();
            let trace = run_flow(&nd, &dirs, k, &cfg)?;
            (trace.final_particles, start.elapsed().as_secs_f64())
        }
    };
    // score against a size-matched subsample of the true coefficients,
    // drawn without replacement on the repetition's own stream
    let mut sub_rng = rng::stream(rep_seed, tag::SUBSAMPLE);
    let chosen = rand::seq::index::sample(&mut sub_rng, betas.len(), points.len());
    let truth: Vec<Vec<f64>> = chosen.iter().map(|i| betas[i].clone()).collect();
    let metric_dirs =
        sample_haar_directions(spec.law.d, METRIC_DIRECTIONS, rng::derive(rep_seed, u64::MAX))?;
    let distance = sw2_point_clouds(&truth, &points, &metric_dirs)?;
    Ok(RepOutcome { distance, seconds, truth, points })
}

/// Runs all repetitions of a spec. Repetitions execute in parallel but are
/// seeded and aggregated by repetition index, so the report is identical for
/// any thread count.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    if spec.reps < 1 {
        return Err(Error::invalid("repetition count must be >= 1"));
    }
    let per_rep: Vec<(f64, f64)> = (0..spec.reps)
        .into_par_iter()
        .map(|rep| run_one_rep(spec, rep))
        .collect::<Result<_>>()?;
    let mean_distance = per_rep.iter().map(|(d, _)| d).sum::<f64>() / spec.reps as f64;
    let mean_time = per_rep.iter().map(|(_, t)| t).sum::<f64>() / spec.reps as f64;
    Ok(ExperimentReport {
        spec: spec.clone(),
        k: spec.resolved_k(),
        mean_distance,
        mean_time,
        per_rep,
    })
}

/// Writes reports as CSV: `algorithm,law,d,n,k,m,t,reps,mean_distance,mean_time`.
pub fn emit_table(reports: &[ExperimentReport], path: &Path) -> Result<()> {
    let file = File::create(path)?;
    let mut out = BufWriter::new(file);
    writeln!(out, "algorithm,law,d,n,k,m,t,reps,mean_distance,mean_time")?;
    for r in reports {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.spec.algorithm,
            r.spec.law.kind,
            r.spec.law.d,
            r.spec.n,
            r.k,
            r.spec.m,
            r.spec.t,
            r.spec.reps,
            fmt_f64(r.mean_distance),
            fmt_f64(r.mean_time),
        )?;
    }
    out.flush()?;
    Ok(())
}

const SVG_PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Writes point sets as a standalone scatter SVG with fixed viewport
/// `[-r, r]^2`. Higher-dimensional points are drawn by their first two
/// coordinates; each set gets a distinct fill color.
pub fn emit_scatter_svg(sets: &[Vec<Vec<f64>>], r: f64, path: &Path) -> Result<()> {
    if !(r > 0.0) {
        return Err(Error::invalid("viewport radius must be positive"));
    }
    if sets.iter().flatten().any(|p| p.len() < 2) {
        return Err(Error::invalid("scatter points need at least two coordinates"));
    }
    let file = File::create(path)?;
    let mut out = BufWriter::new(file);
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="600" height="600" viewBox="{} {} {} {}">"#,
        -r,
        -r,
        2.0 * r,
        2.0 * r
    )?;
    writeln!(
        out,
        r#"<rect x="{}" y="{}" width="{}" height="{}" fill="white"/>"#,
        -r,
        -r,
        2.0 * r,
        2.0 * r
    )?;
    let dot_r = r / 100.0;
    for (s, points) in sets.iter().enumerate() {
        let fill = SVG_PALETTE[s % SVG_PALETTE.len()];
        for p in points {
            // SVG y grows downward; negate to keep math orientation
            writeln!(
                out,
                r#"<circle cx="{}" cy="{}" r="{}" fill="{}" fill-opacity="0.6"/>"#,
                p[0], -p[1], dot_r, fill
            )?;
        }
    }
    writeln!(out, "</svg>")?;
    out.flush()?;
    Ok(())
}
