use std::fs;
use std::path::{Path, PathBuf};

use swrc::causal::{estimate_effects, read_causal_csv, CausalConfig};
use swrc::data::{fmt_f64, normalize, read_observations_csv, write_points_csv};
use swrc::estimator::{fit_abcd, fit_bcd, FitReport, DEFAULT_BCD_TOL};
use swrc::flow::{run_flow, FlowConfig};
use swrc::simbench::{
    emit_scatter_svg, emit_table, generate_dataset, run_experiment, run_rep, CoefficientLaw,
};
use swrc::sphere::sample_haar_directions;
use swrc::{rng, Error, Result};

use crate::manifest::{
    CausalRunConfig, CommandConfig, EstimateConfig, FlowRunConfig, Manifest, SimulateConfig,
};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Re-runs a recorded configuration. Artifacts land next to the manifest
/// unless an explicit output directory overrides that.
pub fn replay(manifest_path: &Path, out_override: Option<&Path>) -> Result<()> {
    let manifest = Manifest::read(manifest_path)?;
    if manifest.tool != "swrc" {
        return Err(Error::invalid(format!(
            "manifest was written by {:?}, not swrc",
            manifest.tool
        )));
    }
    let out = match out_override {
        Some(p) => p.to_path_buf(),
        None => manifest_path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from(".")),
    };
    execute(&manifest.command, &out)
}

pub fn execute(command: &CommandConfig, out: &Path) -> Result<()> {
    match command {
        CommandConfig::Estimate(cfg) => execute_estimate(cfg, out),
        CommandConfig::Simulate(cfg) => execute_simulate(cfg, out),
        CommandConfig::Flow(cfg) => execute_flow(cfg, out),
        CommandConfig::Causal(cfg) => execute_causal(cfg, out),
    }
}

fn finish(out: &Path, command: CommandConfig, artifacts: Vec<String>) -> Result<()> {
    let manifest = Manifest::new(command, artifacts);
    manifest.write(&out.join(MANIFEST_FILE))
}

/// Times in the report are environment-dependent by nature; everything else
/// is deterministic and formatted through [`fmt_f64`].
fn write_fit_report(report: &FitReport, path: &Path) -> Result<()> {
    let mut body = String::from("field,value\n");
    body.push_str(&format!("final_objective,{}\n", fmt_f64(report.final_objective)));
    body.push_str(&format!("iterations,{}\n", report.iterations));
    body.push_str(&format!("converged,{}\n", report.converged));
    body.push_str(&format!("wall_time,{}\n", fmt_f64(report.wall_time)));
    body.push_str(&format!("slice_time,{}\n", fmt_f64(report.slice_time)));
    body.push_str(&format!("iter_time,{}\n", fmt_f64(report.iter_time)));
    for (i, v) in report.objective_trace.iter().enumerate() {
        body.push_str(&format!("trace_{i},{}\n", fmt_f64(*v)));
    }
    fs::write(path, body)?;
    Ok(())
}

pub fn execute_estimate(cfg: &EstimateConfig, out: &Path) -> Result<()> {
    let dataset = read_observations_csv(Path::new(&cfg.data), cfg.d)?;
    let nd = normalize(&dataset)?;
    let dirs = sample_haar_directions(cfg.d, cfg.m, cfg.seed)?;
    let (particles, report) = match cfg.algo.as_str() {
        "bcd" => fit_bcd(
            &nd,
            &dirs,
            cfg.k,
            cfg.radius,
            cfg.seed,
            cfg.iters,
            DEFAULT_BCD_TOL,
        )?,
        "abcd" => fit_abcd(&nd, &dirs, cfg.k, cfg.radius, cfg.seed, cfg.iters)?,
        other => {
            return Err(Error::invalid(format!(
                "unknown algorithm {other:?}; estimate supports bcd and abcd"
            )))
        }
    };
    fs::create_dir_all(out)?;
    write_points_csv(particles.points(), &out.join("particles.csv"))?;
    write_fit_report(&report, &out.join("fit_report.csv"))?;
    finish(
        out,
        CommandConfig::Estimate(cfg.clone()),
        vec!["particles.csv".into(), "fit_report.csv".into()],
    )
}

pub fn execute_simulate(cfg: &SimulateConfig, out: &Path) -> Result<()> {
    let report = run_experiment(&cfg.spec)?;
    fs::create_dir_all(out)?;
    emit_table(std::slice::from_ref(&report), &out.join("report.csv"))?;
    let mut artifacts = vec!["report.csv".to_string()];
    if cfg.svg {
        // replays repetition 0 to plot the fit against the sampled truth
        let outcome = run_rep(&cfg.spec, 0)?;
        emit_scatter_svg(
            &[outcome.truth, outcome.points],
            cfg.spec.law.r,
            &out.join("scatter.svg"),
        )?;
        artifacts.push("scatter.svg".into());
    }
    finish(out, CommandConfig::Simulate(cfg.clone()), artifacts)
}

pub fn execute_flow(cfg: &FlowRunConfig, out: &Path) -> Result<()> {
    if cfg.lambdas.is_empty() {
        return Err(Error::invalid("at least one regularization weight is required"));
    }
    let dataset = match &cfg.data {
        Some(path) => read_observations_csv(Path::new(path), cfg.d)?,
        None => {
            let law = CoefficientLaw::new(cfg.law.parse()?, cfg.radius, cfg.d)?;
            generate_dataset(&law, cfg.n, cfg.kappa, cfg.seed)?.0
        }
    };
    let nd = normalize(&dataset)?;
    let dirs = sample_haar_directions(cfg.d, cfg.m, cfg.seed)?;
    fs::create_dir_all(out)?;
    let single = cfg.lambdas.len() == 1;
    let mut artifacts = Vec::new();
    let mut sets = Vec::new();
    for (i, &lambda) in cfg.lambdas.iter().enumerate() {
        // independent noise per sweep entry, stable under reordering
        let mut flow_cfg = FlowConfig::new(cfg.particles, cfg.radius, rng::derive(cfg.seed, i as u64));
        flow_cfg.lambda = lambda;
        flow_cfg.h = cfg.h;
        flow_cfg.t = cfg.t;
        let trace = run_flow(&nd, &dirs, cfg.k, &flow_cfg)?;
        let name = if single {
            "particles.csv".to_string()
        } else {
            format!("particles_{i}.csv")
        };
        write_points_csv(&trace.final_particles, &out.join(&name))?;
        artifacts.push(name);
        sets.push(trace.final_particles);
    }
    if cfg.svg {
        emit_scatter_svg(&sets, cfg.radius, &out.join("flow.svg"))?;
        artifacts.push("flow.svg".into());
    }
    finish(out, CommandConfig::Flow(cfg.clone()), artifacts)
}

pub fn execute_causal(cfg: &CausalRunConfig, out: &Path) -> Result<()> {
    let cd = read_causal_csv(Path::new(&cfg.data), cfg.p)?;
    let causal_cfg = CausalConfig {
        epsilon: cfg.epsilon,
        r_ball: cfg.radius,
        k: Some(cfg.k),
        m: cfg.m,
        t: cfg.t,
        normalize_inputs: !cfg.raw,
    };
    let summary = estimate_effects(&cd, &causal_cfg, cfg.seed)?;
    fs::create_dir_all(out)?;

    let mut pct = String::from("percentile,value\n");
    for (level, value) in summary.percentiles {
        pct.push_str(&format!("{level},{}\n", fmt_f64(value)));
    }
    fs::write(out.join("percentiles.csv"), pct)?;

    let mut eff = String::from("effect\n");
    for v in &summary.samples {
        eff.push_str(&format!("{}\n", fmt_f64(*v)));
    }
    fs::write(out.join("effects.csv"), eff)?;

    write_points_csv(&summary.particles, &out.join("particles.csv"))?;
    finish(
        out,
        CommandConfig::Causal(cfg.clone()),
        vec![
            "percentiles.csv".into(),
            "effects.csv".into(),
            "particles.csv".into(),
        ],
    )
}
