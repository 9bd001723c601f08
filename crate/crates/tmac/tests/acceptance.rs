//! End-to-end acceptance checks. Each test prints a single PASS/FAIL line
//! (visible with `cargo test -- --nocapture`) and asserts the criterion.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tmac::baselines::{run_dmdda_like, run_fts_like};
use tmac::channel::{build_channel, ChannelConfig};
use tmac::latency::{latency_report, packet_latency, LatencyParams};
use tmac::rd::{
    conditional_entropy, correlated_frames, entropy, finetune_codec, gradient_check,
    mutual_information, EmpiricalJoint, LinearCodec,
};
use tmac::report::{linear_fit_r2, median};
use tmac::scenario::{generate_scenario, ScenarioConfig, ScenarioState};
use tmac::simplex::{solve_fractional_knapsack, solve_lp, LpProblem};
use tmac::solver::{
    audit_constraints, compute_budgets, rho_lower_bound, run_tmac, LinkMatrix, RdConfig,
};

fn report(name: &str, ok: bool, detail: &str) {
    println!("[{}] {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "{name}: {detail}");
}

/// Calibration in which channel capacity, not the sensing rate or the
/// compute budget, is the binding resource; used for the sweep shapes.
fn capacity_bound_config() -> ScenarioConfig {
    ScenarioConfig {
        local_data_a: 1e9,
        cpu_range_f: (4e11, 6e11),
        noise_psd_n0: 1e-20,
        ..ScenarioConfig::calibrated()
    }
}

fn solve_throughput(cfg: &ScenarioConfig) -> f64 {
    let state = generate_scenario(cfg).unwrap();
    let channel = build_channel(&state, cfg, &ChannelConfig::default());
    run_tmac(&state, &channel, cfg, &RdConfig::default(), None)
        .unwrap()
        .throughput_bps
}

fn mean_throughput(base: &ScenarioConfig, seeds: u64) -> f64 {
    let total: f64 = (0..seeds)
        .map(|s| {
            solve_throughput(&ScenarioConfig { rng_seed: base.rng_seed + s, ..base.clone() })
        })
        .sum();
    total / seeds as f64
}

#[test]
fn oracle_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = rng.gen_range(1..=8usize);
        let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..5.0)).collect();
        let caps: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..5e7)).collect();
        let budget: f64 = rng.gen_range(0.0..1.5e8);

        let mut lp = LpProblem::maximize(weights.clone());
        lp.upper = caps.clone();
        lp.add_constraint(vec![1.0; n], budget);
        let lp_obj = solve_lp(&lp).unwrap().objective;

        let u = solve_fractional_knapsack(&weights, &caps, budget).unwrap();
        let oracle: f64 = weights.iter().zip(&u).map(|(w, ui)| w * ui).sum();
        let rel = (lp_obj - oracle).abs() / oracle.abs().max(1.0);
        worst = worst.max(rel);
    }
    let elapsed = start.elapsed();
    let ok = worst <= 1e-6 && elapsed.as_secs_f64() < 5.0;
    report(
        "oracle equivalence",
        ok,
        &format!("200 instances, worst relative error {worst:.2e}, {elapsed:.2?}"),
    );
}

/// Eq-11 optimum by brute force: every link matrix, per-ego fractional
/// knapsack, budget-infeasible configurations skipped.
fn enumerate_optimum(state: &ScenarioState, cfg: &ScenarioConfig) -> f64 {
    let n = state.n();
    let channel = build_channel(state, cfg, &ChannelConfig::default());
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect();
    let local: f64 = state.vehicles.iter().map(|v| v.local_data_bps).sum();
    let mut best = local;
    'outer: for mask in 0u32..(1 << pairs.len()) {
        let mut links = LinkMatrix::empty(n);
        for (b, &(i, j)) in pairs.iter().enumerate() {
            if mask & (1 << b) != 0 {
                links.set(i, j, true);
            }
        }
        if (0..n).any(|j| links.in_degree(j) > cfg.subchannel_budget_k) {
            continue;
        }
        let budgets = compute_budgets(state, cfg, &links);
        let mut t = local;
        for j in 0..n {
            let members: Vec<usize> = (0..n).filter(|&i| i != j && links.get(i, j)).collect();
            if members.is_empty() {
                continue;
            }
            if budgets.is_infeasible(j) {
                continue 'outer;
            }
            let w: Vec<f64> = members
                .iter()
                .map(|&i| 1.0 / rho_lower_bound(cfg, state.norm_distance.get(i, j)))
                .collect();
            let caps: Vec<f64> = members
                .iter()
                .map(|&i| channel.capacity.get(i, j).min(state.vehicles[i].local_data_bps))
                .collect();
            let u = solve_fractional_knapsack(&w, &caps, budgets.effective(j)).unwrap();
            t += w.iter().zip(&u).map(|(wi, ui)| wi * ui).sum::<f64>();
        }
        best = best.max(t);
    }
    best
}

#[test]
fn small_instance_quality() {
    let start = Instant::now();
    let mut worst_ratio = f64::INFINITY;
    for seed in 0..50u64 {
        let n = 3 + (seed % 2) as usize; // alternate N = 3 and N = 4
        let cfg = ScenarioConfig {
            vehicle_count: n,
            rng_seed: 100 + seed,
            ..ScenarioConfig::calibrated()
        };
        let state = generate_scenario(&cfg).unwrap();
        let channel = build_channel(&state, &cfg, &ChannelConfig::default());
        let t = run_tmac(&state, &channel, &cfg, &RdConfig::default(), None)
            .unwrap()
            .throughput_bps;
        let opt = enumerate_optimum(&state, &cfg);
        worst_ratio = worst_ratio.min(t / opt);
    }
    let elapsed = start.elapsed();
    let ok = worst_ratio >= 0.95 && elapsed.as_secs_f64() < 120.0;
    report(
        "small-instance quality",
        ok,
        &format!("worst fixed-point/optimum ratio {worst_ratio:.4} over 50 seeds, {elapsed:.2?}"),
    );
}

#[test]
fn constraint_audit_clean() {
    let mut violations = 0usize;
    for seed in 0..100u64 {
        let cfg = ScenarioConfig { rng_seed: seed, ..ScenarioConfig::calibrated() };
        let state = generate_scenario(&cfg).unwrap();
        let channel = build_channel(&state, &cfg, &ChannelConfig::default());
        let res = run_tmac(&state, &channel, &cfg, &RdConfig::default(), None).unwrap();
        violations += audit_constraints(&res.links, &res.plan, &state, &channel, &cfg).len();
    }
    report(
        "constraint audit",
        violations == 0,
        &format!("{violations} violations across 100 seeds"),
    );
}

#[test]
fn baseline_dominance() {
    let mut gains = Vec::new();
    let mut dominated_everywhere = true;
    for seed in 0..20u64 {
        let cfg = ScenarioConfig { rng_seed: seed, ..ScenarioConfig::calibrated() };
        let state = generate_scenario(&cfg).unwrap();
        let channel = build_channel(&state, &cfg, &ChannelConfig::default());
        let t = run_tmac(&state, &channel, &cfg, &RdConfig::default(), None)
            .unwrap()
            .throughput_bps;
        let dmdda = run_dmdda_like(&state, &channel, &cfg).unwrap().throughput_bps;
        let fts = run_fts_like(&state, &channel, &cfg).unwrap().throughput_bps;
        dominated_everywhere &= t >= dmdda && t >= fts;
        gains.push(t / dmdda - 1.0);
    }
    let median_gain = median(&gains);
    let ok = dominated_everywhere && median_gain >= 0.10;
    report(
        "baseline dominance",
        ok,
        &format!(
            "dominates every seed: {dominated_everywhere}, median gain over the \
             capacity-ranked baseline {:.2}%",
            100.0 * median_gain
        ),
    );
}

#[test]
fn sweep_shapes() {
    let base = capacity_bound_config();
    let seeds = 20;

    let bw_values = [100e6, 120e6, 140e6, 160e6, 180e6, 200e6];
    let bw_means: Vec<f64> = bw_values
        .iter()
        .map(|&w| mean_throughput(&ScenarioConfig { bandwidth_w: w, ..base.clone() }, seeds))
        .collect();
    let r2 = linear_fit_r2(&bw_values, &bw_means);
    let increasing = bw_means.windows(2).all(|w| w[1] > w[0]);

    let span_values = [60.0, 80.0, 100.0, 120.0, 140.0, 160.0, 180.0, 200.0];
    let span_means: Vec<f64> = span_values
        .iter()
        .map(|&s| mean_throughput(&ScenarioConfig { span_m: s, ..base.clone() }, seeds))
        .collect();
    let non_increasing = span_means.windows(2).all(|w| w[1] <= w[0] + 1e-6);

    let cav_values: Vec<usize> = (2..=9).collect();
    let cav_means: Vec<f64> = cav_values
        .iter()
        .map(|&n| mean_throughput(&ScenarioConfig { vehicle_count: n, ..base.clone() }, seeds))
        .collect();
    let non_decreasing = cav_means.windows(2).all(|w| w[1] >= w[0] - 1e-6);
    let increments: Vec<f64> = cav_means.windows(2).map(|w| w[1] - w[0]).collect();
    let half = increments.len() / 2;
    let early = increments[..increments.len() - half].iter().sum::<f64>()
        / (increments.len() - half) as f64;
    let late = increments[increments.len() - half..].iter().sum::<f64>() / half as f64;
    let peak_idx = increments
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap()
        .0;
    // "Growth slows down": the largest jump happens while egos are still
    // filling their K sub-channels, and later increments average lower.
    let diminishing = peak_idx < increments.len() - half && late <= early;

    let ok = r2 >= 0.98 && increasing && non_increasing && non_decreasing && diminishing;
    report(
        "sweep shapes",
        ok,
        &format!(
            "bandwidth R^2 {r2:.4} (increasing: {increasing}), span non-increasing: \
             {non_increasing}, CAV non-decreasing: {non_decreasing} with diminishing \
             increments: {diminishing}"
        ),
    );
}

#[test]
fn recovery_tightness() {
    let mut worst_rho = 0.0f64;
    let mut worst_u = 0.0f64;
    let mut active = 0usize;
    for seed in 0..20u64 {
        let cfg = ScenarioConfig { rng_seed: seed, ..ScenarioConfig::calibrated() };
        let state = generate_scenario(&cfg).unwrap();
        let channel = build_channel(&state, &cfg, &ChannelConfig::default());
        let res = run_tmac(&state, &channel, &cfg, &RdConfig::default(), None).unwrap();
        for (i, j) in res.links.links() {
            let u = res.plan.payload.get(i, j);
            if u <= 0.0 {
                continue;
            }
            active += 1;
            let lb = rho_lower_bound(&cfg, state.norm_distance.get(i, j));
            worst_rho = worst_rho.max((res.plan.rho.get(i, j) - lb).abs());
            let prod = res.plan.rate.get(i, j) * res.plan.rho.get(i, j);
            worst_u = worst_u.max((prod - u).abs() / u.abs().max(1.0));
        }
    }
    let ok = active > 0 && worst_rho <= 1e-9 && worst_u <= 1e-9;
    report(
        "recovery tightness",
        ok,
        &format!(
            "{active} active links, worst |rho - bound| {worst_rho:.2e}, worst relative \
             |d*rho - u| {worst_u:.2e}"
        ),
    );
}

#[test]
fn gradient_correctness() {
    let mut worst = 0.0f64;
    for seed in 0..20u64 {
        let codec = LinearCodec::random(8, 4, seed).unwrap();
        let frames = correlated_frames(8, 4, 12, 0.9, seed + 1000);
        worst = worst.max(gradient_check(&codec, &frames).unwrap());
    }
    report(
        "gradient correctness",
        worst <= 1e-4,
        &format!("worst relative error vs central differences {worst:.2e} over 20 codecs"),
    );
}

#[test]
fn information_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst = 0.0f64;
    let mut min_mi = f64::INFINITY;
    for _ in 0..1000 {
        let rows = rng.gen_range(2..=6usize);
        let cols = rng.gen_range(2..=6usize);
        let mut p: Vec<f64> = (0..rows * cols).map(|_| rng.gen_range(0.0..1.0)).collect();
        let total: f64 = p.iter().sum();
        for v in &mut p {
            *v /= total;
        }
        let joint = EmpiricalJoint::new(rows, cols, p).unwrap();
        let h_f = entropy(&joint.marginal_future()).unwrap();
        let mi = mutual_information(&joint);
        let h_cond = conditional_entropy(&joint);
        worst = worst.max((h_cond - (h_f - mi)).abs());
        min_mi = min_mi.min(mi);
    }
    let ok = worst <= 1e-12 && min_mi >= -1e-12;
    report(
        "information identity",
        ok,
        &format!("worst |H(f|p) - (H(f) - I)| {worst:.2e}, min I {min_mi:.2e} over 1000 joints"),
    );
}

#[test]
fn finetuning_benefit() {
    let mut diffs = Vec::new();
    for seed in 0..50u64 {
        let pretrain = correlated_frames(8, 4, 16, 0.9, seed);
        let deploy = correlated_frames(8, 4, 16, 0.9, seed ^ 0x5eed_0000_0000_0001);
        let base = LinearCodec::random(8, 4, seed).unwrap();
        let (pretrained, _) = finetune_codec(&base, &pretrain, 200, 0.5).unwrap();
        let holdout = &deploy[8..];
        let before = pretrained.mse(holdout).unwrap();
        let (tuned, _) = finetune_codec(&pretrained, &deploy[..8], 60, 0.5).unwrap();
        let after = tuned.mse(holdout).unwrap();
        diffs.push(after - before);
    }
    let med = median(&diffs);
    report(
        "fine-tuning benefit",
        med <= 0.0,
        &format!("median held-out MSE change after fine-tuning {med:.3e} over 50 seeds"),
    );
}

#[test]
fn latency_formula() {
    // 20 parameter sets: the known 19.99 ms schedule plus 19 variations.
    let mut sets = vec![LatencyParams::default()]; // totals 19.99 ms
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..19 {
        let n = rng.gen_range(1..=30usize);
        sets.push(LatencyParams {
            l_up: rng.gen_range(0.0..20.0),
            l_down: rng.gen_range(0.0..20.0),
            l_ft: rng.gen_range(0.0..5.0),
            lhat_up: rng.gen_range(0.0..5.0),
            lhat_down: rng.gen_range(0.0..5.0),
            lhat_inf: rng.gen_range(0.0..2.0),
            frames_per_packet: n,
            finetune_frames: rng.gen_range(0..=n),
        });
    }
    let rows = latency_report(&sets).unwrap();
    let mut exact = true;
    for (p, row) in sets.iter().zip(&rows) {
        let i = p.finetune_frames as f64;
        let n = p.frames_per_packet as f64;
        let expected = i * (p.l_up + p.l_down + p.l_ft)
            + (n - i) * (p.lhat_up + p.lhat_down + p.lhat_inf);
        exact &= row.total_ms == expected;
    }
    let has_1999 = (rows[0].total_ms - 19.99).abs() < 1e-9 && rows[0].under_100ms;

    // Linearity in i: stepping i by one changes the total by exactly L - Lhat.
    let base = LatencyParams { frames_per_packet: 10, ..LatencyParams::default() };
    let step = base.uncompressed_ms() - base.compressed_ms();
    let mut linear = true;
    let mut prev = packet_latency(&LatencyParams { finetune_frames: 0, ..base.clone() }).unwrap();
    for i in 1..=10usize {
        let cur = packet_latency(&LatencyParams { finetune_frames: i, ..base.clone() }).unwrap();
        linear &= (cur - prev - step).abs() < 1e-12;
        prev = cur;
    }

    let ok = exact && has_1999 && linear;
    report(
        "latency formula",
        ok,
        &format!(
            "20 parameter sets exact: {exact}, includes unflagged 19.99 ms schedule: \
             {has_1999}, linear in fine-tuned frames: {linear}"
        ),
    );
}

#[test]
fn csv_determinism() {
    use std::process::Command;
    let bin = env!("CARGO_BIN_EXE_tmac");
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("exp.cfg");
    std::fs::write(
        &cfg_path,
        "cpu_range_F = 4e10,6e10\nsweep_param = bandwidth_W\n\
         sweep_values = 100e6,200e6\nsweep_seeds = 3\n",
    )
    .unwrap();

    let mut ok = true;
    let mut detail = String::new();
    for cmd in ["solve", "sweep", "latency", "finetune-demo"] {
        let mut outputs = Vec::new();
        for run in 0..2 {
            let out = dir.path().join(format!("{cmd}-{run}.csv"));
            let status = Command::new(bin)
                .args([
                    cmd,
                    "--config",
                    cfg_path.to_str().unwrap(),
                    "--out",
                    out.to_str().unwrap(),
                    "--seeds",
                    "3",
                ])
                .output()
                .unwrap();
            assert!(status.status.success(), "{cmd} failed: {status:?}");
            outputs.push(std::fs::read(&out).unwrap());
        }
        let same = outputs[0] == outputs[1];
        ok &= same;
        detail.push_str(&format!("{cmd}: {} ", if same { "identical" } else { "DIFFERS" }));
    }
    report("csv determinism", ok, detail.trim());
}
