//! Command-line driver for random coefficient estimation.
//!
//! Every run writes its artifacts plus a `manifest.json` capturing the fully
//! resolved configuration; `--from-manifest` replays a manifest and
//! reproduces the artifacts byte for byte, regardless of `--threads`.

mod manifest;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use swrc::causal::read_causal_csv;
use swrc::data::read_observations_csv;
use swrc::simbench::{default_k, Algorithm, CoefficientLaw, ExperimentSpec, LawKind};
use swrc::{Error, Result};

use manifest::{CausalRunConfig, CommandConfig, EstimateConfig, FlowRunConfig, SimulateConfig};

#[derive(Parser)]
#[command(
    name = "swrc",
    version,
    about = "Estimates the distribution of random linear-model coefficients from (X, Y) observations"
)]
struct Cli {
    /// Replay a recorded run; artifacts land next to the manifest unless
    /// --out overrides.
    #[arg(long, global = true, value_name = "PATH")]
    from_manifest: Option<PathBuf>,

    /// Worker thread cap; artifacts never depend on it.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    /// Output directory (default: current directory).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Fit k coefficient particles to an observations CSV.
    Estimate(EstimateArgs),
    /// Run repeated synthetic benchmarks and tabulate fit quality.
    Simulate(SimulateArgs),
    /// Sample coefficient particles with the diffusion flow.
    Flow(FlowArgs),
    /// Estimate a treatment effect distribution from (Z, W, Y) data.
    Causal(CausalArgs),
}

#[derive(Args)]
struct EstimateArgs {
    /// Observations CSV with header x1,...,xd,y.
    #[arg(long)]
    data: PathBuf,
    /// Covariate dimension.
    #[arg(long)]
    d: usize,
    /// Solver: bcd (exact block descent) or abcd (projected approximation).
    #[arg(long, default_value = "abcd")]
    algo: String,
    /// Particle count; default ceil(n^(d/(2d-1))).
    #[arg(long)]
    k: Option<usize>,
    /// Direction count.
    #[arg(long, default_value_t = 1000)]
    m: usize,
    /// Iteration count (cap for bcd, exact for abcd).
    #[arg(long, default_value_t = 20)]
    iters: usize,
    /// Coefficient search ball radius.
    #[arg(long, default_value_t = 10.0)]
    radius: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SimulateArgs {
    /// Named configuration: table1-d2-abcd (sph law, d=2, n=500, abcd,
    /// m=1000).
    #[arg(long, conflicts_with_all = ["law", "d", "n", "algo", "m"])]
    preset: Option<String>,
    /// Coefficient law: sph, deg, or dis.
    #[arg(long, required_unless_present = "preset")]
    law: Option<String>,
    /// Coefficient dimension.
    #[arg(long, required_unless_present = "preset")]
    d: Option<usize>,
    /// Sample size per repetition.
    #[arg(long, required_unless_present = "preset")]
    n: Option<usize>,
    /// Solver: bcd, abcd, or flow.
    #[arg(long, required_unless_present = "preset")]
    algo: Option<String>,
    /// Particle count; default ceil(n^(d/(2d-1))).
    #[arg(long)]
    k: Option<usize>,
    /// Direction count; default 1000 for abcd, 50 otherwise.
    #[arg(long)]
    m: Option<usize>,
    /// Iteration count.
    #[arg(long, default_value_t = 20)]
    iters: usize,
    /// Repetition count.
    #[arg(long, default_value_t = 20)]
    reps: usize,
    /// Law scale and search ball radius.
    #[arg(long, default_value_t = 10.0)]
    radius: f64,
    /// Covariate concentration on the sphere.
    #[arg(long, default_value_t = 0.1)]
    kappa: f64,
    /// Flow noise weight (flow algorithm only).
    #[arg(long, default_value_t = 0.01)]
    lambda: f64,
    /// Flow step size (flow algorithm only).
    #[arg(long, default_value_t = 1.0)]
    h: f64,
    /// Flow particle count; default k (flow algorithm only).
    #[arg(long = "L")]
    particles: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also plot the first repetition against the sampled truth.
    #[arg(long)]
    svg: bool,
}

#[derive(Args)]
struct FlowArgs {
    /// Named configuration: fig2 (noise sweep 0.01/0.02/0.04/0.08 on a
    /// generated n=2000 dataset).
    #[arg(long, conflicts_with_all = ["lambda", "data", "law", "d", "n", "m", "particles", "t", "h"])]
    preset: Option<String>,
    /// Particle count; default k.
    #[arg(long = "L")]
    particles: Option<usize>,
    /// Noise weight.
    #[arg(long)]
    lambda: Option<f64>,
    /// Step size.
    #[arg(long)]
    h: Option<f64>,
    /// Step count.
    #[arg(long)]
    t: Option<usize>,
    /// Observations CSV; when omitted a benchmark dataset is generated.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Covariate dimension (required with --data; default 2 otherwise).
    #[arg(long)]
    d: Option<usize>,
    /// Coefficient law for generated data: sph, deg, or dis.
    #[arg(long)]
    law: Option<String>,
    /// Sample size for generated data.
    #[arg(long)]
    n: Option<usize>,
    /// Covariate concentration for generated data.
    #[arg(long, default_value_t = 0.1)]
    kappa: f64,
    /// Slice row count; default ceil(n^(d/(2d-1))).
    #[arg(long)]
    k: Option<usize>,
    /// Direction count.
    #[arg(long)]
    m: Option<usize>,
    /// Law scale and initialization ball radius.
    #[arg(long, default_value_t = 10.0)]
    radius: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also plot the final particles.
    #[arg(long)]
    svg: bool,
}

#[derive(Args)]
struct CausalArgs {
    /// CSV with header z1,...,zp,w,y.
    #[arg(long)]
    data: PathBuf,
    /// Pretreatment covariate count.
    #[arg(long)]
    p: usize,
    /// Treatment perturbation scale.
    #[arg(long, default_value_t = 0.005)]
    epsilon: f64,
    /// Particle count; default ceil(n^(d/(2d-1))) with d = p + 2.
    #[arg(long)]
    k: Option<usize>,
    /// Direction count.
    #[arg(long, default_value_t = 1000)]
    m: usize,
    /// Iteration count.
    #[arg(long, default_value_t = 20)]
    t: usize,
    /// Coefficient search ball radius.
    #[arg(long, default_value_t = 10.0)]
    radius: f64,
    /// Skip standardization of covariates and outcome.
    #[arg(long)]
    raw: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn path_string(path: &Path) -> Result<String> {
    path.to_str()
        .map(str::to_string)
        .ok_or_else(|| Error::invalid("paths must be valid UTF-8"))
}

/// Reads the data once to resolve the default particle count; the run reads
/// it again, so resolution and execution always see the same file.
fn estimate_config(args: EstimateArgs) -> Result<EstimateConfig> {
    if args.algo != "bcd" && args.algo != "abcd" {
        return Err(Error::invalid(format!(
            "unknown algorithm {:?}; estimate supports bcd and abcd",
            args.algo
        )));
    }
    let n = read_observations_csv(&args.data, args.d)?.len();
    let k = args.k.unwrap_or_else(|| default_k(n, args.d));
    if k > n {
        return Err(Error::invalid(format!(
            "neighbor count {k} exceeds sample size {n}"
        )));
    }
    Ok(EstimateConfig {
        data: path_string(&args.data)?,
        d: args.d,
        algo: args.algo,
        k,
        m: args.m,
        iters: args.iters,
        radius: args.radius,
        seed: args.seed,
    })
}

fn simulate_config(args: SimulateArgs) -> Result<SimulateConfig> {
    let (law_kind, d, n, algorithm, m) = match args.preset.as_deref() {
        Some("table1-d2-abcd") => (LawKind::Sph, 2, 500, Algorithm::Abcd, 1000),
        Some(other) => {
            return Err(Error::invalid(format!(
                "unknown preset {other:?}; simulate supports table1-d2-abcd"
            )))
        }
        None => {
            // clap guarantees the quartet is present without a preset
            let law: LawKind = args.law.as_deref().expect("required").parse()?;
            let algorithm: Algorithm = args.algo.as_deref().expect("required").parse()?;
            let m = args.m.unwrap_or(match algorithm {
                Algorithm::Abcd => 1000,
                _ => 50,
            });
            (
                law,
                args.d.expect("required"),
                args.n.expect("required"),
                algorithm,
                m,
            )
        }
    };
    let law = CoefficientLaw::new(law_kind, args.radius, d)?;
    let mut spec = ExperimentSpec::new(algorithm, law, n, m, args.iters, args.seed);
    spec.k = Some(args.k.unwrap_or_else(|| default_k(n, d)));
    spec.reps = args.reps;
    spec.vmf_kappa = args.kappa;
    spec.flow_lambda = args.lambda;
    spec.flow_h = args.h;
    spec.flow_l = args.particles;
    if spec.resolved_k() > n {
        return Err(Error::invalid(format!(
            "neighbor count {} exceeds sample size {n}",
            spec.resolved_k()
        )));
    }
    Ok(SimulateConfig {
        spec,
        svg: args.svg,
    })
}

fn flow_config(args: FlowArgs) -> Result<FlowRunConfig> {
    match args.preset.as_deref() {
        Some("fig2") => {
            let n = 2000;
            let d = 2;
            let k = args.k.unwrap_or_else(|| default_k(n, d));
            return Ok(FlowRunConfig {
                data: None,
                law: "sph".into(),
                d,
                n,
                kappa: args.kappa,
                k,
                m: 10,
                particles: 20,
                lambdas: vec![0.01, 0.02, 0.04, 0.08],
                h: 1.0,
                t: 20,
                radius: args.radius,
                seed: args.seed,
                svg: args.svg,
            });
        }
        Some(other) => {
            return Err(Error::invalid(format!(
                "unknown preset {other:?}; flow supports fig2"
            )))
        }
        None => {}
    }
    let (data, d, n) = match &args.data {
        Some(path) => {
            let d = args
                .d
                .ok_or_else(|| Error::invalid("--d is required with --data"))?;
            let n = read_observations_csv(path, d)?.len();
            (Some(path_string(path)?), d, n)
        }
        None => (None, args.d.unwrap_or(2), args.n.unwrap_or(500)),
    };
    let k = args.k.unwrap_or_else(|| default_k(n, d));
    if k > n {
        return Err(Error::invalid(format!(
            "slice row count {k} exceeds sample size {n}"
        )));
    }
    Ok(FlowRunConfig {
        data,
        law: args.law.unwrap_or_else(|| "sph".into()),
        d,
        n,
        kappa: args.kappa,
        k,
        m: args.m.unwrap_or(50),
        particles: args.particles.unwrap_or(k),
        lambdas: vec![args.lambda.unwrap_or(0.01)],
        h: args.h.unwrap_or(1.0),
        t: args.t.unwrap_or(20),
        radius: args.radius,
        seed: args.seed,
        svg: args.svg,
    })
}

fn causal_config(args: CausalArgs) -> Result<CausalRunConfig> {
    let n = read_causal_csv(&args.data, args.p)?.len();
    let d = args.p + 2;
    let k = args.k.unwrap_or_else(|| default_k(n, d));
    if k > n {
        return Err(Error::invalid(format!(
            "neighbor count {k} exceeds sample size {n}"
        )));
    }
    Ok(CausalRunConfig {
        data: path_string(&args.data)?,
        p: args.p,
        epsilon: args.epsilon,
        k,
        m: args.m,
        t: args.t,
        radius: args.radius,
        raw: args.raw,
        seed: args.seed,
    })
}

fn dispatch(cli: Cli) -> Result<()> {
    match (cli.command, cli.from_manifest) {
        (Some(_), Some(_)) => Err(Error::invalid(
            "pass either a subcommand or --from-manifest, not both",
        )),
        (None, Some(path)) => run::replay(&path, cli.out.as_deref()),
        (None, None) => Err(Error::invalid(
            "missing subcommand; run with --help for usage",
        )),
        (Some(command), None) => {
            let out = cli.out.unwrap_or_else(|| PathBuf::from("."));
            let config = match command {
                Command::Estimate(a) => CommandConfig::Estimate(estimate_config(a)?),
                Command::Simulate(a) => CommandConfig::Simulate(simulate_config(a)?),
                Command::Flow(a) => CommandConfig::Flow(flow_config(a)?),
                Command::Causal(a) => CommandConfig::Causal(causal_config(a)?),
            };
            run::execute(&config, &out)
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_) => 2,
        Error::Conditioning(_) => 4,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let kind = e.kind();
            let _ = e.print();
            return if matches!(kind, ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            };
        }
    };
    if let Some(threads) = cli.threads {
        // a second global-pool build fails harmlessly; artifacts do not
        // depend on the pool size anyway
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
