//! End-to-end acceptance checks, one test per shipped guarantee.
//!
//! Each test prints a single verdict line of the form
//! `[criterion NN] PASS|FAIL <name>: <measured detail>` (visible with
//! `cargo test --test acceptance -- --nocapture`) and then asserts the
//! verdict, so a red line always fails the build.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::sync::{Mutex, MutexGuard};
use std::time::Instant;

use swrc::causal::{estimate_effects, CausalConfig, CausalDataset};
use swrc::data::normalize;
use swrc::estimator::{
    eval_objective, fit_abcd, fit_abcd_from, fit_bcd, fit_bcd_from, sample_ball_uniform,
    DEFAULT_BCD_MAX_ITER, DEFAULT_BCD_TOL,
};
use swrc::flow::{run_flow_from, FlowConfig};
use swrc::rng::{self, tag};
use swrc::simbench::{
    default_k, generate_dataset, run_experiment, Algorithm, CoefficientLaw, ExperimentSpec,
    LawKind, METRIC_DIRECTIONS,
};
use swrc::slicing::build_slice_matrix;
use swrc::sphere::sample_haar_directions;
use swrc::transport::{sw2_point_clouds, w2_squared_equal};

fn verdict(id: u32, name: &str, pass: bool, detail: &str) {
    let status = if pass { "PASS" } else { "FAIL" };
    println!("[criterion {id:02}] {status} {name}: {detail}");
    assert!(pass, "[criterion {id:02}] {status} {name}: {detail}");
}

/// Serializes the long-running and timing-sensitive checks so their wall
/// clocks are not inflated by sibling tests.
static HEAVY: Mutex<()> = Mutex::new(());

fn heavy_guard() -> MutexGuard<'static, ()> {
    HEAVY.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

fn sph_law(r: f64) -> CoefficientLaw {
    CoefficientLaw::new(LawKind::Sph, r, 2).unwrap()
}

/// Minimum mean squared assignment cost between equal-size point sets by
/// branch-and-bound over all permutations. Exponential; oracle only.
fn min_assignment_cost(a: &[Vec<f64>], b: &[Vec<f64>], used: &mut [bool], i: usize, acc: f64, best: &mut f64) {
    if acc >= *best {
        return;
    }
    if i == a.len() {
        *best = acc;
        return;
    }
    for j in 0..b.len() {
        if !used[j] {
            used[j] = true;
            let cost: f64 = a[i]
                .iter()
                .zip(&b[j])
                .map(|(x, y)| (x - y) * (x - y))
                .sum();
            min_assignment_cost(a, b, used, i + 1, acc + cost, best);
            used[j] = false;
        }
    }
}

fn w2_exact(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let mut best = f64::INFINITY;
    let mut used = vec![false; b.len()];
    min_assignment_cost(a, b, &mut used, 0, 0.0, &mut best);
    (best / a.len() as f64).sqrt()
}

/// Squared 1-D 2-Wasserstein distance between uniform measures on sorted
/// samples of possibly different sizes, by integrating the squared quantile
/// difference over the merged mass breakpoints.
fn w2sq_sorted_unequal(a: &[f64], b: &[f64]) -> f64 {
    let (p, q) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut prev = 0.0;
    let mut acc = 0.0;
    while i < a.len() && j < b.len() {
        let na = (i + 1) as f64 / p;
        let nb = (j + 1) as f64 / q;
        let next = na.min(nb);
        let d = a[i] - b[j];
        acc += (next - prev) * d * d;
        prev = next;
        if na <= next {
            i += 1;
        }
        if nb <= next {
            j += 1;
        }
    }
    acc
}

/// Sliced distance for clouds of different sizes: direction-averaged
/// unequal-size 1-D squared distance, square-rooted.
fn sliced_w2_unequal(a: &[Vec<f64>], b: &[Vec<f64>], dirs: &swrc::sphere::DirectionSet) -> f64 {
    let mut acc = 0.0;
    for v in dirs.directions() {
        let mut pa: Vec<f64> = a.iter().map(|p| dot(p, v.coords())).collect();
        let mut pb: Vec<f64> = b.iter().map(|p| dot(p, v.coords())).collect();
        pa.sort_by(|x, y| x.partial_cmp(y).unwrap());
        pb.sort_by(|x, y| x.partial_cmp(y).unwrap());
        acc += w2sq_sorted_unequal(&pa, &pb);
    }
    (acc / dirs.len() as f64).sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

#[test]
fn criterion_01_sorted_transport_matches_brute_force() {
    use rand::Rng;
    let start = Instant::now();
    let mut rng = rng::stream(101, 1);
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let k = rng.gen_range(1..=6);
        let a: Vec<f64> = (0..k).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let b: Vec<f64> = (0..k).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let fast = w2_squared_equal(&a, &b).unwrap();
        let a1: Vec<Vec<f64>> = a.iter().map(|&x| vec![x]).collect();
        let b1: Vec<Vec<f64>> = b.iter().map(|&x| vec![x]).collect();
        let brute = w2_exact(&a1, &b1).powi(2);
        worst = worst.max((fast - brute).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        1,
        "sorted transport equals the assignment minimum",
        worst <= 1e-12 && secs < 10.0,
        &format!("max |sorted - brute force| = {worst:.3e} over 500 pairs in {secs:.2}s (limits 1e-12, 10s)"),
    );
}

#[test]
fn criterion_02_full_sample_pseudo_points_are_a_fixed_minimum() {
    let mut detail = String::new();
    let mut pass = true;
    for d in [2usize, 3] {
        let n = 50;
        let law = CoefficientLaw::new(LawKind::Sph, 10.0, d).unwrap();
        let (ds, _) = generate_dataset(&law, n, 0.1, 20 + d as u64).unwrap();
        let nd = normalize(&ds).unwrap();
        let dirs = sample_haar_directions(d, 40, 21).unwrap();
        let pseudo = nd.pseudo_points();
        let sm = build_slice_matrix(&nd, &dirs, n).unwrap();
        let objective = eval_objective(&pseudo, &sm, &dirs).unwrap();
        let (_, report) = fit_bcd_from(
            &nd,
            &dirs,
            pseudo,
            10.0,
            DEFAULT_BCD_MAX_ITER,
            DEFAULT_BCD_TOL,
        )
        .unwrap();
        let ok = objective.abs() <= 1e-12 && report.iterations == 1 && report.converged;
        pass &= ok;
        detail.push_str(&format!(
            "d={d}: objective={objective:.3e}, stopped at iteration {} (converged={}); ",
            report.iterations, report.converged
        ));
    }
    verdict(
        2,
        "pseudo-point initialization is an immediate zero-objective fixed point",
        pass,
        detail.trim_end_matches("; "),
    );
}

#[test]
fn criterion_03_descent_monotonicity() {
    let law = sph_law(10.0);
    let k = default_k(500, 2);
    let mut bcd_monotone = true;
    let mut worst_rise = 0.0f64;
    let mut abcd_improved = 0;
    for s in 0..20u64 {
        let seed = rng::derive(300, s);
        let (ds, _) = generate_dataset(&law, 500, 0.1, seed).unwrap();
        let nd = normalize(&ds).unwrap();
        let dirs = sample_haar_directions(2, 50, seed).unwrap();
        let (_, bcd) = fit_bcd(&nd, &dirs, k, 10.0, seed, 20, DEFAULT_BCD_TOL).unwrap();
        for w in bcd.objective_trace.windows(2) {
            worst_rise = worst_rise.max(w[1] - w[0]);
            if w[1] > w[0] + 1e-10 {
                bcd_monotone = false;
            }
        }
        let (_, abcd) = fit_abcd(&nd, &dirs, k, 10.0, seed, 20).unwrap();
        if abcd.final_objective <= abcd.objective_trace[0] {
            abcd_improved += 1;
        }
    }
    verdict(
        3,
        "exact descent is monotone and the approximate step usually improves",
        bcd_monotone && abcd_improved >= 18,
        &format!(
            "worst exact-descent rise {worst_rise:.3e} (limit 1e-10); approximate step improved {abcd_improved}/20 seeds (needs >= 18)"
        ),
    );
}

#[test]
fn criterion_04_direction_sample_size_bound() {
    let _guard = heavy_guard();
    let start = Instant::now();
    let m_set = (8.0 * std::f64::consts::PI / (0.05 * 0.05)).ceil() as usize;
    assert_eq!(m_set, 10054);
    let law = sph_law(1.0);
    let (ds, _) = generate_dataset(&law, 200, 0.1, 40).unwrap();
    let nd = normalize(&ds).unwrap();
    let w = sample_ball_uniform(2, 16, 1.0, &mut rng::stream(40, tag::PARTICLE_INIT));

    let dirs_ref = sample_haar_directions(2, 1_000_000, 41).unwrap();
    let sm_ref = build_slice_matrix(&nd, &dirs_ref, 16).unwrap();
    let f_ref = eval_objective(&w, &sm_ref, &dirs_ref).unwrap();
    drop(sm_ref);
    drop(dirs_ref);

    let mut gaps = Vec::with_capacity(50);
    for s in 0..50u64 {
        let dirs = sample_haar_directions(2, m_set, rng::derive(42, s)).unwrap();
        let sm = build_slice_matrix(&nd, &dirs, 16).unwrap();
        let f = eval_objective(&w, &sm, &dirs).unwrap();
        gaps.push((f - f_ref).abs());
    }
    let mean_gap = mean(&gaps);
    let secs = start.elapsed().as_secs_f64();
    verdict(
        4,
        "the direction-count rule keeps the Monte Carlo objective within tolerance",
        mean_gap <= 0.05 && secs < 120.0,
        &format!(
            "mean |objective(m={m_set}) - objective(m=1e6)| = {mean_gap:.5} over 50 sets in {secs:.1}s (limits 0.05, 120s)"
        ),
    );
}

#[test]
fn criterion_05_one_step_solver_agreement() {
    let law = sph_law(1.0);
    let (ds, _) = generate_dataset(&law, 200, 0.1, 50).unwrap();
    let nd = normalize(&ds).unwrap();
    let mut dist_hi = Vec::new();
    let mut dist_lo = Vec::new();
    for s in 0..10u64 {
        let seed = rng::derive(500, s);
        let init = sample_ball_uniform(2, 8, 1.0, &mut rng::stream(seed, tag::PARTICLE_INIT));
        for (m, out) in [(10_000usize, &mut dist_hi), (100, &mut dist_lo)] {
            let dirs = sample_haar_directions(2, m, rng::derive(seed, m as u64)).unwrap();
            let (exact, _) = fit_bcd_from(&nd, &dirs, init.clone(), 1.0, 1, 0.0).unwrap();
            let (approx, _) = fit_abcd_from(&nd, &dirs, init.clone(), 1.0, 1).unwrap();
            out.push(w2_exact(exact.points(), approx.points()));
        }
    }
    let close_hi = dist_hi.iter().filter(|&&d| d < 0.05).count();
    let med_hi = median(&dist_hi);
    let med_lo = median(&dist_lo);
    verdict(
        5,
        "the approximate step converges to the exact step as directions grow",
        close_hi >= 9 && med_lo > med_hi,
        &format!(
            "one-step gap < 0.05 in {close_hi}/10 seeds at m=10^4 (median {med_hi:.4}); median at m=10^2 is {med_lo:.4} (must exceed it)"
        ),
    );
}

/// Scores fits of the n=500 benchmark against the generating coefficient law
/// under two conventions: the fitted k points against the full n-point truth
/// sample (unequal sizes, the convention the target window was calibrated
/// for), and against a size-k truth subsample (equal sizes). The subsample
/// convention adds sampling noise of its own, so its mean sits well above
/// the window even for a perfect fit; it is printed for transparency but
/// not gated.
#[test]
fn criterion_06_benchmark_mean_distance_window() {
    let _guard = heavy_guard();
    let start = Instant::now();
    // oracle sanity: unequal-size transport agrees with the equal-size path
    {
        let a = vec![0.3, -1.2, 2.0];
        let b = vec![1.0, 0.1, -0.4];
        let mut sa = a.clone();
        let mut sb = b.clone();
        sa.sort_by(|x, y| x.partial_cmp(y).unwrap());
        sb.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let eq = w2_squared_equal(&a, &b).unwrap();
        let un = w2sq_sorted_unequal(&sa, &sb);
        assert!((eq - un).abs() <= 1e-12, "transport oracle mismatch: {eq} vs {un}");
    }

    let law = sph_law(10.0);
    let k = default_k(500, 2);
    assert_eq!(k, 63);
    let reps = 20;
    let mut full = Vec::with_capacity(reps);
    let mut sub = Vec::with_capacity(reps);
    for rep in 0..reps {
        let rep_seed = rng::derive(600, rep as u64);
        let (ds, betas) = generate_dataset(&law, 500, 0.1, rep_seed).unwrap();
        let nd = normalize(&ds).unwrap();
        let dirs = sample_haar_directions(2, 1000, rep_seed).unwrap();
        let (pc, _) = fit_abcd(&nd, &dirs, k, 10.0, rep_seed, 20).unwrap();
        let points = pc.into_points();
        let metric_dirs =
            sample_haar_directions(2, METRIC_DIRECTIONS, rng::derive(rep_seed, u64::MAX)).unwrap();
        full.push(sliced_w2_unequal(&points, &betas, &metric_dirs));
        let chosen =
            rand::seq::index::sample(&mut rng::stream(rep_seed, tag::SUBSAMPLE), betas.len(), k);
        let truth: Vec<Vec<f64>> = chosen.iter().map(|i| betas[i].clone()).collect();
        sub.push(sw2_point_clouds(&truth, &points, &metric_dirs).unwrap());
    }
    let mean_full = mean(&full);
    let mean_sub = mean(&sub);
    let secs = start.elapsed().as_secs_f64();
    verdict(
        6,
        "n=500 benchmark mean distance lands in the calibrated window",
        (0.54..=0.84).contains(&mean_full) && secs < 300.0,
        &format!(
            "mean fitted-vs-full-sample distance {mean_full:.4} over {reps} reps in {secs:.1}s (window [0.54, 0.84], limit 300s); size-matched-subsample convention gives {mean_sub:.4}, ungated"
        ),
    );
}

#[test]
fn criterion_07_benchmark_mean_decreases_with_sample_size() {
    let _guard = heavy_guard();
    let start = Instant::now();
    let law = sph_law(10.0);
    let mut means = Vec::new();
    for (n, seed) in [(500usize, 700u64), (2000, 701)] {
        let spec = ExperimentSpec::new(Algorithm::Abcd, law, n, 1000, 20, seed);
        let report = run_experiment(&spec).unwrap();
        means.push(report.mean_distance);
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        7,
        "quadrupling the sample shrinks the benchmark mean distance",
        means[1] < means[0] && secs < 900.0,
        &format!(
            "mean distance {:.4} at n=500 vs {:.4} at n=2000 over 20 reps each in {secs:.1}s (limit 900s)",
            means[0], means[1]
        ),
    );
}

#[test]
fn criterion_08_flow_fixed_point_and_spread() {
    // (a) with matched ranks and no noise, one step moves nothing
    let law = sph_law(10.0);
    let n = 20;
    let (ds, _) = generate_dataset(&law, n, 0.1, 80).unwrap();
    let nd = normalize(&ds).unwrap();
    let dirs = sample_haar_directions(2, 30, 81).unwrap();
    let pseudo = nd.pseudo_points();
    let mut cfg = FlowConfig::new(n, 10.0, 82);
    cfg.lambda = 0.0;
    cfg.t = 1;
    let trace = run_flow_from(&nd, &dirs, n, &cfg, pseudo.clone()).unwrap();
    let max_move = trace
        .final_particles
        .iter()
        .zip(&pseudo)
        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
        .fold(0.0f64, f64::max);
    let fixed_ok = max_move <= 1e-12;

    // (b) with the drift frozen, displacement variance matches 2*lambda*h*t
    let (small_ds, _) = generate_dataset(&law, 50, 0.1, 83).unwrap();
    let small_nd = normalize(&small_ds).unwrap();
    let small_dirs = sample_haar_directions(2, 8, 84).unwrap();
    let (l, t, lambda, h) = (1000usize, 10usize, 0.05f64, 1.0f64);
    assert!(l * t >= 10_000);
    let mut noise_cfg = FlowConfig::new(l, 10.0, 85);
    noise_cfg.lambda = lambda;
    noise_cfg.h = h;
    noise_cfg.t = t;
    noise_cfg.skip_drift = true;
    let zeros = vec![vec![0.0; 2]; l];
    let noise_trace = run_flow_from(&small_nd, &small_dirs, 10, &noise_cfg, zeros).unwrap();
    let displacements: Vec<f64> = noise_trace
        .final_particles
        .iter()
        .flat_map(|p| p.iter().copied())
        .collect();
    let mu = mean(&displacements);
    let var = displacements.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>()
        / (displacements.len() - 1) as f64;
    let target = 2.0 * lambda * h * t as f64;
    let ratio = var / target;
    let variance_ok = (0.85..=1.15).contains(&ratio);

    // (c) more noise spreads the final particles out
    let mut deltas = Vec::new();
    for s in 0..10u64 {
        let seed = rng::derive(860, s);
        let (ds_s, _) = generate_dataset(&law, 200, 0.1, seed).unwrap();
        let nd_s = normalize(&ds_s).unwrap();
        let dirs_s = sample_haar_directions(2, 20, seed).unwrap();
        let k = default_k(200, 2);
        let spread = |lam: f64| -> f64 {
            let mut c = FlowConfig::new(k, 10.0, seed);
            c.lambda = lam;
            let fin = swrc::flow::run_flow(&nd_s, &dirs_s, k, &c).unwrap().final_particles;
            let mut acc = 0.0;
            let mut cnt = 0usize;
            for i in 0..fin.len() {
                for j in (i + 1)..fin.len() {
                    acc += fin[i]
                        .iter()
                        .zip(&fin[j])
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt();
                    cnt += 1;
                }
            }
            acc / cnt as f64
        };
        deltas.push(spread(0.08) - spread(0.01));
    }
    let med_delta = median(&deltas);
    let spread_ok = med_delta > 0.0;

    verdict(
        8,
        "flow is stationary at matched ranks, diffuses at the injected rate, and spreads with noise",
        fixed_ok && variance_ok && spread_ok,
        &format!(
            "max one-step move {max_move:.2e} (limit 1e-12); displacement variance ratio {ratio:.3} (window [0.85, 1.15]); median pairwise-spread gain {med_delta:.4} (must be > 0)"
        ),
    );
}

/// Synthetic scenario with a constant unit treatment effect of 2 on a binary
/// treatment. Binary treatments cap the treatment coordinate of every unit
/// design row at 1/sqrt(2) and untreated rows carry almost no treatment
/// signal, so the slice quantiles attenuate the recovered effect toward
/// zero. The window below is the design target for this scenario; the check
/// documents the measured shortfall rather than hiding it. The null half has
/// no signal to attenuate and is expected to hold.
#[test]
fn criterion_09_causal_synthetic_recovery() {
    let _guard = heavy_guard();
    let start = Instant::now();

    fn synthetic(n: usize, effect: f64, seed: u64) -> CausalDataset {
        use rand::Rng;
        use rand_distr::StandardNormal;
        let mut r = rng::stream(seed, tag::TREATMENT);
        let mut z = Vec::with_capacity(n);
        let mut w = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let z1: f64 = r.sample(StandardNormal);
            let z2: f64 = r.sample(StandardNormal);
            let wi = f64::from(r.gen_bool(0.5));
            z.push(vec![z1, z2]);
            w.push(wi);
            y.push(z1 - z2 + effect * wi);
        }
        CausalDataset::new(z, w, y).unwrap()
    }

    let cfg = CausalConfig::default();
    let mut effect_medians = Vec::new();
    let mut null_medians = Vec::new();
    for s in 0..10u64 {
        let cd = synthetic(2000, 2.0, rng::derive(900, s));
        let summary = estimate_effects(&cd, &cfg, rng::derive(901, s)).unwrap();
        effect_medians.push(summary.percentiles[2].1);
        let cd0 = synthetic(2000, 0.0, rng::derive(902, s));
        let summary0 = estimate_effects(&cd0, &cfg, rng::derive(903, s)).unwrap();
        null_medians.push(summary0.percentiles[2].1);
    }
    let med_effect = median(&effect_medians);
    let med_null = median(&null_medians);
    let secs = start.elapsed().as_secs_f64();
    verdict(
        9,
        "constant binary-treatment effect is recovered and the null stays at zero",
        (1.5..=2.5).contains(&med_effect)
            && (-0.3..=0.3).contains(&med_null)
            && secs < 300.0,
        &format!(
            "median recovered effect {med_effect:.3} over 10 seeds (window [1.5, 2.5]); null median {med_null:.3} (window [-0.3, 0.3]); {secs:.1}s (limit 300s)"
        ),
    );
}

#[test]
fn criterion_10_performance_smoke() {
    let _guard = heavy_guard();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let law = sph_law(10.0);
    let k = default_k(2000, 2);

    // best of three fits per size; the minimum filters scheduler noise
    let measure = |n: usize| -> (f64, f64) {
        let (ds, _) = generate_dataset(&law, n, 0.1, 70).unwrap();
        let nd = normalize(&ds).unwrap();
        let dirs = sample_haar_directions(2, 1000, 70).unwrap();
        let mut best_wall = f64::INFINITY;
        let mut best_iter = f64::INFINITY;
        for _ in 0..3 {
            let report = pool
                .install(|| fit_abcd(&nd, &dirs, k, 10.0, 70, 20))
                .unwrap()
                .1;
            best_wall = best_wall.min(report.wall_time);
            best_iter = best_iter.min(report.iter_time);
        }
        (best_wall, best_iter)
    };
    let (wall_2000, iter_2000) = measure(2000);
    let (_, iter_4000) = measure(4000);
    let ratio = iter_4000 / iter_2000;
    verdict(
        10,
        "single-threaded fit is fast and iteration cost is insensitive to n",
        wall_2000 < 60.0 && ratio < 2.0 * 1.25,
        &format!(
            "n=2000 fit wall time {wall_2000:.2}s single-threaded (limit 60s); iteration-loop time ratio n=4000/n=2000 = {ratio:.2} (limit 2.5)"
        ),
    );
}

fn write_obs_csv(path: &Path, n: usize, seed: u64) {
    use rand::Rng;
    let mut r = rng::stream(seed, 77);
    let mut body = String::from("x1,x2,y\n");
    for _ in 0..n {
        let x1: f64 = r.gen_range(-1.0..1.0);
        let x2: f64 = r.gen_range(-1.0..1.0);
        let b = if r.gen_bool(0.5) { 5.0 } else { -5.0 };
        body.push_str(&format!("{x1},{x2},{}\n", b * x2 + x1));
    }
    fs::write(path, body).unwrap();
}

fn write_causal_csv(path: &Path, n: usize, seed: u64) {
    use rand::Rng;
    let mut r = rng::stream(seed, 78);
    let mut body = String::from("z1,z2,w,y\n");
    for _ in 0..n {
        let z1: f64 = r.gen_range(-1.0..1.0);
        let z2: f64 = r.gen_range(-1.0..1.0);
        let w = f64::from(r.gen_bool(0.5));
        body.push_str(&format!("{z1},{z2},{w},{}\n", z1 - z2 + 2.0 * w));
    }
    fs::write(path, body).unwrap();
}

/// Reads an artifact with environment-dependent timing fields blanked out:
/// the named rows of a fit report and the trailing mean-time column of a
/// benchmark table. All other bytes must reproduce exactly.
fn masked(path: &Path) -> String {
    let body = fs::read_to_string(path).unwrap();
    let name = path.file_name().unwrap().to_str().unwrap();
    match name {
        "fit_report.csv" => body
            .lines()
            .filter(|l| {
                !(l.starts_with("wall_time,")
                    || l.starts_with("slice_time,")
                    || l.starts_with("iter_time,"))
            })
            .collect::<Vec<_>>()
            .join("\n"),
        "report.csv" => body
            .lines()
            .map(|l| l.rsplit_once(',').map(|(head, _)| head).unwrap_or(l))
            .collect::<Vec<_>>()
            .join("\n"),
        _ => body,
    }
}

fn run_ok(args: &[&str]) {
    let status = Command::new(env!("CARGO_BIN_EXE_swrc"))
        .args(args)
        .status()
        .unwrap();
    assert!(status.success(), "swrc {args:?} failed with {status}");
}

#[test]
fn criterion_11_manifest_replay_is_byte_identical_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let obs = tmp.path().join("obs.csv");
    write_obs_csv(&obs, 80, 1);
    let causal = tmp.path().join("causal.csv");
    write_causal_csv(&causal, 100, 2);
    let obs_s = obs.to_str().unwrap();
    let causal_s = causal.to_str().unwrap();

    let runs: Vec<(&str, Vec<String>)> = vec![
        (
            "estimate",
            ["estimate", "--data", obs_s, "--d", "2", "--m", "60", "--iters", "5", "--seed", "3"]
                .map(String::from)
                .to_vec(),
        ),
        (
            "simulate",
            [
                "simulate", "--law", "sph", "--d", "2", "--n", "60", "--algo", "abcd", "--reps",
                "2", "--m", "40", "--svg", "--seed", "1",
            ]
            .map(String::from)
            .to_vec(),
        ),
        (
            "flow",
            ["flow", "--n", "60", "--m", "20", "--t", "5", "--L", "10", "--svg", "--seed", "2"]
                .map(String::from)
                .to_vec(),
        ),
        (
            "causal",
            [
                "causal", "--data", causal_s, "--p", "2", "--m", "60", "--t", "5", "--k", "15",
                "--seed", "4",
            ]
            .map(String::from)
            .to_vec(),
        ),
    ];

    let mut details = Vec::new();
    for (name, args) in &runs {
        let dir_a = tmp.path().join(format!("{name}_a"));
        let dir_b = tmp.path().join(format!("{name}_b"));
        let mut first: Vec<&str> = args.iter().map(String::as_str).collect();
        first.extend(["--out", dir_a.to_str().unwrap(), "--threads", "3"]);
        run_ok(&first);
        let manifest_a = dir_a.join("manifest.json");
        run_ok(&[
            "--from-manifest",
            manifest_a.to_str().unwrap(),
            "--out",
            dir_b.to_str().unwrap(),
            "--threads",
            "1",
        ]);

        let listed: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(&manifest_a).unwrap()).unwrap();
        let mut files: Vec<String> = listed["artifacts"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_str().unwrap().to_string())
            .collect();
        files.push("manifest.json".into());
        for f in &files {
            let a = masked(&dir_a.join(f));
            let b = masked(&dir_b.join(f));
            assert_eq!(a, b, "{name}: artifact {f} differs between run and replay");
        }
        details.push(format!("{name} ({} artifacts)", files.len()));
    }
    verdict(
        11,
        "manifest replay reproduces every artifact byte for byte at a different thread count",
        true,
        &details.join(", "),
    );
}
