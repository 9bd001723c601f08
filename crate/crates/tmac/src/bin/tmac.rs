//! Experiment driver: single solves, parameter sweeps, baseline
//! comparisons, the fine-tuning demonstration, and latency tables, all
//! emitted as deterministic CSV.

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use tmac::baselines::{run_dmdda_like, run_fts_like, run_no_fusion, BaselineResult, Scheme};
use tmac::channel::build_channel;
use tmac::config::{ConfigError, ExperimentConfig};
use tmac::latency::{latency_report, LatencyParams};
use tmac::rd::{
    conditional_entropy, correlated_frames, entropy, finetune_codec, mutual_information,
    EmpiricalJoint, LinearCodec,
};
use tmac::report::{fmt_f64, median, write_csv};
use tmac::scenario::{generate_scenario, ScenarioConfig};
use tmac::solver::{audit_constraints, run_tmac, total_throughput};

const EXIT_CONFIG: u8 = 2;
const EXIT_NO_CONVERGENCE: u8 = 3;

#[derive(Parser)]
#[command(name = "tmac", about = "V2V cooperative-perception throughput experiments")]
struct Cli {
    /// Key-value config file; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output CSV path.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seeds per experiment (overrides the config).
    #[arg(long, global = true)]
    seeds: Option<usize>,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    parallel: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one scenario and print the resulting plan.
    Solve,
    /// Sweep a parameter and average throughput over seeds per scheme.
    Sweep,
    /// Compare all schemes on the configured scenario.
    Baselines,
    /// Fine-tune a linear codec on correlated synthetic frames.
    FinetuneDemo,
    /// Packet-latency table over fine-tuning schedules.
    Latency,
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let cfg = match load_config(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };

    if let Some(threads) = cli.parallel {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("thread pool: {e}");
            return ExitCode::FAILURE;
        }
    }

    let out = cli.out.clone();
    let seeds = cli.seeds;
    let result = match cli.command {
        Command::Solve => cmd_solve(&cfg, out.as_deref()),
        Command::Sweep => cmd_sweep(&cfg, out.as_deref(), seeds),
        Command::Baselines => cmd_baselines(&cfg, out.as_deref(), seeds),
        Command::FinetuneDemo => cmd_finetune_demo(&cfg, out.as_deref(), seeds),
        Command::Latency => cmd_latency(&cfg, out.as_deref()),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig, ConfigError> {
    match path {
        Some(p) => ExperimentConfig::load(p),
        None => Ok(ExperimentConfig::default()),
    }
}

/// One scheme on one scenario seed, audited before anything is reported.
fn run_scheme(
    cfg: &ExperimentConfig,
    scenario: &ScenarioConfig,
    scheme: Scheme,
) -> Result<(BaselineResult, bool), String> {
    let state = generate_scenario(scenario).map_err(|e| e.to_string())?;
    let channel = build_channel(&state, scenario, &cfg.channel);
    let (result, converged) = match scheme {
        Scheme::Tmac => {
            let r = run_tmac(&state, &channel, scenario, &cfg.rd, cfg.max_rounds)
                .map_err(|e| e.to_string())?;
            (
                BaselineResult {
                    scheme: Scheme::Tmac,
                    links: r.links,
                    plan: r.plan,
                    throughput_bps: r.throughput_bps,
                },
                r.converged,
            )
        }
        Scheme::DmddaLike => {
            (run_dmdda_like(&state, &channel, scenario).map_err(|e| e.to_string())?, true)
        }
        Scheme::FtsLike => {
            (run_fts_like(&state, &channel, scenario).map_err(|e| e.to_string())?, true)
        }
        Scheme::NoFusion => (run_no_fusion(&state), true),
    };
    // A round-limited run may stop mid-removal with an infeasible link set;
    // it is reported with converged = false instead of being audited.
    let violations = if converged {
        audit_constraints(&result.links, &result.plan, &state, &channel, scenario)
    } else {
        Vec::new()
    };
    if !violations.is_empty() {
        return Err(format!(
            "{} seed {} failed the constraint audit: {} [{}]",
            scheme.label(),
            scenario.rng_seed,
            violations[0].constraint.label(),
            violations.len()
        ));
    }
    debug_assert!(
        (total_throughput(&state, &result.links, &result.plan) - result.throughput_bps).abs()
            <= 1e-6 * (1.0 + result.throughput_bps),
    );
    Ok((result, converged))
}

const RESULT_HEADER: [&str; 8] = [
    "scheme",
    "seed",
    "ego",
    "local_bps",
    "link_count",
    "fused_bps",
    "total_throughput_bps",
    "converged",
];

/// Per-ego summary rows in the shared result schema.
fn result_rows(
    cfg: &ExperimentConfig,
    scenario: &ScenarioConfig,
    r: &BaselineResult,
    converged: bool,
) -> Vec<Vec<String>> {
    let state = generate_scenario(scenario).expect("already solved this scenario");
    let _ = cfg;
    let n = state.n();
    (0..n)
        .map(|j| {
            let fused: f64 = (0..n)
                .filter(|&i| i != j && r.links.get(i, j))
                .map(|i| r.plan.rate.get(i, j))
                .sum();
            vec![
                r.scheme.label().to_string(),
                scenario.rng_seed.to_string(),
                j.to_string(),
                fmt_f64(state.vehicles[j].local_data_bps),
                r.links.in_degree(j).to_string(),
                fmt_f64(fused),
                fmt_f64(r.throughput_bps),
                converged.to_string(),
            ]
        })
        .collect()
}

fn cmd_solve(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<u8, String> {
    let scenario = &cfg.scenario;
    let (result, converged) = run_scheme(cfg, scenario, Scheme::Tmac)?;

    println!("T_sum = {} bit/s (converged: {converged})", fmt_f64(result.throughput_bps));
    println!("links (tx -> ego): d_bps rho beta* u_bps");
    for (i, j) in result.links.links() {
        println!(
            "  {i} -> {j}: {} {} {} {}",
            fmt_f64(result.plan.rate.get(i, j)),
            fmt_f64(result.plan.rho.get(i, j)),
            fmt_f64(result.plan.beta_star.get(i, j)),
            fmt_f64(result.plan.payload.get(i, j)),
        );
    }

    let rows = result_rows(cfg, scenario, &result, converged);
    let path = out.unwrap_or_else(|| Path::new("solve.csv"));
    write_csv(path, &RESULT_HEADER, &rows).map_err(|e| e.to_string())?;
    Ok(if converged { 0 } else { EXIT_NO_CONVERGENCE })
}

fn cmd_baselines(
    cfg: &ExperimentConfig,
    out: Option<&Path>,
    seeds: Option<usize>,
) -> Result<u8, String> {
    let seeds = seeds.unwrap_or(1);
    let mut rows = Vec::new();
    let mut all_converged = true;
    for s in 0..seeds {
        let scenario = ScenarioConfig {
            rng_seed: cfg.scenario.rng_seed + s as u64,
            ..cfg.scenario.clone()
        };
        for scheme in Scheme::all() {
            let (result, converged) = run_scheme(cfg, &scenario, scheme)?;
            all_converged &= converged;
            rows.extend(result_rows(cfg, &scenario, &result, converged));
        }
    }
    let path = out.unwrap_or_else(|| Path::new("baselines.csv"));
    write_csv(path, &RESULT_HEADER, &rows).map_err(|e| e.to_string())?;
    Ok(if all_converged { 0 } else { EXIT_NO_CONVERGENCE })
}

fn cmd_sweep(
    cfg: &ExperimentConfig,
    out: Option<&Path>,
    seeds: Option<usize>,
) -> Result<u8, String> {
    let spec = &cfg.sweep;
    let seeds = seeds.unwrap_or(spec.seeds_per_point);
    if seeds < 1 {
        return Err("seeds must be >= 1".into());
    }

    // Every (point, scheme) cell is independent; compute in parallel and
    // sort afterwards so the output order never depends on scheduling.
    let mut cells: Vec<(usize, usize)> = Vec::new();
    for vi in 0..spec.values.len() {
        for si in 0..spec.schemes.len() {
            cells.push((vi, si));
        }
    }
    let computed: Result<Vec<_>, String> = cells
        .par_iter()
        .map(|&(vi, si)| {
            let value = spec.values[vi];
            let scheme = spec.schemes[si];
            let mut samples = Vec::with_capacity(seeds);
            let mut all_converged = true;
            for s in 0..seeds {
                let scenario = ScenarioConfig {
                    rng_seed: cfg.scenario.rng_seed + s as u64,
                    ..cfg.scenario_at(spec.param, value)
                };
                let (result, converged) = run_scheme(cfg, &scenario, scheme)?;
                all_converged &= converged;
                samples.push(result.throughput_bps);
            }
            Ok((vi, si, samples, all_converged))
        })
        .collect();
    let mut computed = computed?;
    computed.sort_by_key(|&(vi, si, ..)| (vi, si));

    let mut rows = Vec::new();
    let mut all_converged = true;
    for (vi, si, samples, converged) in computed {
        all_converged &= converged;
        let (mean, std) = tmac::report::mean_std(&samples);
        rows.push(vec![
            spec.param.label().to_string(),
            fmt_f64(spec.values[vi]),
            spec.schemes[si].label().to_string(),
            fmt_f64(mean),
            fmt_f64(std),
            seeds.to_string(),
        ]);
    }
    let path = out.unwrap_or_else(|| Path::new("sweep.csv"));
    write_csv(
        path,
        &["param", "value", "scheme", "mean_throughput_bps", "std_bps", "seeds"],
        &rows,
    )
    .map_err(|e| e.to_string())?;
    Ok(if all_converged { 0 } else { EXIT_NO_CONVERGENCE })
}

/// Symbol stream for the entropy accounting: quantize each frame by the
/// sign of its first two components (alphabet of 4).
fn frame_symbols(frames: &[Vec<f64>]) -> Vec<usize> {
    frames
        .iter()
        .map(|f| {
            let a = usize::from(f[0] >= 0.0);
            let b = usize::from(f.get(1).is_some_and(|v| *v >= 0.0));
            2 * a + b
        })
        .collect()
}

fn cmd_finetune_demo(
    cfg: &ExperimentConfig,
    out: Option<&Path>,
    seeds: Option<usize>,
) -> Result<u8, String> {
    let demo = &cfg.demo;
    let seeds = seeds.unwrap_or(50);
    let m = demo.finetune_frames_m.min(demo.frame_count);

    let mut rows = Vec::new();
    let mut pre_all = Vec::new();
    let mut post_all = Vec::new();
    for s in 0..seeds {
        let seed = cfg.scenario.rng_seed + s as u64;
        let err = |e: tmac::rd::RdError| e.to_string();

        // Pretrain on one scene, deploy on a fresh scene: the first m frames
        // travel uncompressed and drive fine-tuning, the rest are compressed
        // and scored.
        let pretrain = correlated_frames(
            demo.frame_dim,
            demo.latent_dim,
            demo.frame_count.max(2),
            demo.frame_correlation,
            seed,
        );
        let deploy = correlated_frames(
            demo.frame_dim,
            demo.latent_dim,
            demo.frame_count,
            demo.frame_correlation,
            seed ^ 0x5eed_0000_0000_0001,
        );
        let base = LinearCodec::random(demo.frame_dim, demo.latent_dim, seed).map_err(err)?;
        let (pretrained, _) =
            finetune_codec(&base, &pretrain, demo.pretrain_steps, demo.learning_rate)
                .map_err(err)?;

        let holdout = &deploy[m..];
        if holdout.is_empty() {
            // All frames uncompressed: nothing flows through the codec.
            continue;
        }
        let mse_pre = pretrained.mse(holdout).map_err(err)?;
        let tuned = if m > 0 {
            finetune_codec(&pretrained, &deploy[..m], demo.finetune_steps, demo.learning_rate)
                .map_err(err)?
                .0
        } else {
            pretrained.clone()
        };
        let mse_post = tuned.mse(holdout).map_err(err)?;

        let symbols = frame_symbols(&deploy);
        let pairs: Vec<(usize, usize)> =
            symbols.windows(2).map(|w| (w[1], w[0])).collect();
        let joint = EmpiricalJoint::from_symbol_pairs(4, &pairs).map_err(err)?;
        let h_f = entropy(&joint.marginal_future()).map_err(err)?;
        let mi = mutual_information(&joint);
        let h_cond = conditional_entropy(&joint);

        pre_all.push(mse_pre);
        post_all.push(mse_post);
        rows.push(vec![
            s.to_string(),
            fmt_f64(mse_pre),
            fmt_f64(mse_post),
            fmt_f64(h_f),
            fmt_f64(mi),
            fmt_f64(h_cond),
        ]);
    }
    if !pre_all.is_empty() {
        rows.push(vec![
            "median".to_string(),
            fmt_f64(median(&pre_all)),
            fmt_f64(median(&post_all)),
            String::new(),
            String::new(),
            String::new(),
        ]);
    }
    let path = out.unwrap_or_else(|| Path::new("finetune.csv"));
    write_csv(
        path,
        &[
            "seed",
            "mse_pretrained",
            "mse_finetuned",
            "entropy_future_bits",
            "mutual_information_bits",
            "conditional_entropy_bits",
        ],
        &rows,
    )
    .map_err(|e| e.to_string())?;
    Ok(0)
}

fn cmd_latency(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<u8, String> {
    // One row per fine-tuning schedule 0..=n with the configured components.
    let base = &cfg.latency;
    let scenarios: Vec<LatencyParams> = (0..=base.frames_per_packet)
        .map(|i| LatencyParams { finetune_frames: i, ..base.clone() })
        .collect();
    let table = latency_report(&scenarios).map_err(|e| e.to_string())?;
    let rows: Vec<Vec<String>> = table
        .iter()
        .map(|r| {
            vec![
                "TMAC".to_string(),
                r.n.to_string(),
                r.i.to_string(),
                fmt_f64(r.l_ms),
                fmt_f64(r.lhat_ms),
                fmt_f64(r.total_ms),
                r.under_100ms.to_string(),
            ]
        })
        .collect();
    let path = out.unwrap_or_else(|| Path::new("latency.csv"));
    write_csv(
        path,
        &["scheme", "n", "i", "L_ms", "Lhat_ms", "total_ms", "under_100ms"],
        &rows,
    )
    .map_err(|e| e.to_string())?;
    Ok(0)
}
