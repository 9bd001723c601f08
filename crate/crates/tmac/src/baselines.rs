//! Reference schemes the adaptive solver is compared against.
//!
//! All three produce the same (links, plan, throughput) shape as the main
//! solver so the audit and reporting code treats them uniformly.

use crate::channel::ChannelMatrix;
use crate::scenario::{ScenarioConfig, ScenarioState};
use crate::solver::{
    compute_budgets, total_throughput, LinkMatrix, RatePlan, SolverError,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Tmac,
    DmddaLike,
    FtsLike,
    NoFusion,
}

impl Scheme {
    pub fn label(&self) -> &'static str {
        match self {
            Scheme::Tmac => "TMAC",
            Scheme::DmddaLike => "DMDDA-like",
            Scheme::FtsLike => "FTS-like",
            Scheme::NoFusion => "NoFusion",
        }
    }

    pub fn all() -> [Scheme; 4] {
        [Scheme::Tmac, Scheme::DmddaLike, Scheme::FtsLike, Scheme::NoFusion]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineResult {
    pub scheme: Scheme,
    pub links: LinkMatrix,
    pub plan: RatePlan,
    pub throughput_bps: f64,
}

/// Remove the minimum-capacity established link among the given egos.
fn drop_weakest(links: &mut LinkMatrix, channel: &ChannelMatrix, egos: &[usize]) -> bool {
    let mut best: Option<((usize, usize), f64)> = None;
    for (i, j) in links.links() {
        if !egos.contains(&j) {
            continue;
        }
        let c = channel.capacity.get(i, j);
        let take = match best {
            None => true,
            Some((bl, bc)) => c < bc || (c == bc && (i, j) < bl),
        };
        if take {
            best = Some(((i, j), c));
        }
    }
    match best {
        Some(((i, j), _)) => {
            links.set(i, j, false);
            true
        }
        None => false,
    }
}

/// Full-rate plan for a fixed link set and compression ratio: every link
/// transmits at d = min(C, A) with the given rho.
fn full_rate_plan(
    links: &LinkMatrix,
    state: &ScenarioState,
    channel: &ChannelMatrix,
    rho: f64,
) -> RatePlan {
    let mut plan = RatePlan::zeros(state.n());
    for (i, j) in links.links() {
        let d = channel.capacity.get(i, j).min(state.vehicles[i].local_data_bps);
        plan.rate.set(i, j, d);
        plan.rho.set(i, j, rho);
        plan.payload.set(i, j, rho * d);
    }
    plan
}

/// Egos whose plan exceeds a budget (or whose raw budget is negative).
fn infeasible_egos(
    links: &LinkMatrix,
    plan: &RatePlan,
    state: &ScenarioState,
    cfg: &ScenarioConfig,
) -> Vec<usize> {
    let budgets = compute_budgets(state, cfg, links);
    (0..state.n())
        .filter(|&j| {
            if links.in_degree(j) == 0 {
                return false;
            }
            if budgets.is_infeasible(j) {
                return true;
            }
            let sum_u: f64 = (0..state.n())
                .filter(|&i| i != j && links.get(i, j))
                .map(|i| plan.payload.get(i, j))
                .sum();
            sum_u > budgets.effective(j) * (1.0 + 1e-12)
        })
        .collect()
}

/// Capacity-ranked scheme: each ego keeps its K highest-capacity links and
/// receives them uncompressed at full rate; links are shed weakest-first
/// until the energy and compute budgets hold.
pub fn run_dmdda_like(
    state: &ScenarioState,
    channel: &ChannelMatrix,
    cfg: &ScenarioConfig,
) -> Result<BaselineResult, SolverError> {
    let mut links = crate::solver::initial_links(channel, cfg.subchannel_budget_k);
    loop {
        let plan = full_rate_plan(&links, state, channel, 1.0);
        let bad = infeasible_egos(&links, &plan, state, cfg);
        if bad.is_empty() {
            let throughput_bps = total_throughput(state, &links, &plan);
            return Ok(BaselineResult {
                scheme: Scheme::DmddaLike,
                links,
                plan,
                throughput_bps,
            });
        }
        if !drop_weakest(&mut links, channel, &bad) {
            unreachable!("infeasible egos always hold at least one link");
        }
    }
}

/// Distance-ranked scheme: each ego keeps its K nearest transmitters at the
/// maximum compression ratio; per-ego rates are scaled down uniformly to fit
/// the budgets, after shedding links whose mere presence breaks the energy
/// budget.
pub fn run_fts_like(
    state: &ScenarioState,
    channel: &ChannelMatrix,
    cfg: &ScenarioConfig,
) -> Result<BaselineResult, SolverError> {
    let n = state.n();
    let mut links = LinkMatrix::empty(n);
    for j in 0..n {
        let mut col: Vec<(usize, f64)> = (0..n)
            .filter(|&i| i != j)
            .map(|i| (i, state.distance_m.get(i, j)))
            .collect();
        col.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("finite distance").then(a.0.cmp(&b.0)));
        for &(i, _) in col.iter().take(cfg.subchannel_budget_k) {
            links.set(i, j, true);
        }
    }

    // Shed links while any ego's budget is negative before rates enter.
    loop {
        let budgets = compute_budgets(state, cfg, &links);
        let bad: Vec<usize> = (0..n)
            .filter(|&j| links.in_degree(j) > 0 && budgets.is_infeasible(j))
            .collect();
        if bad.is_empty() {
            break;
        }
        drop_weakest(&mut links, channel, &bad);
    }

    let mut plan = full_rate_plan(&links, state, channel, cfg.rho_max);
    let budgets = compute_budgets(state, cfg, &links);
    for j in 0..n {
        let members: Vec<usize> = (0..n).filter(|&i| i != j && links.get(i, j)).collect();
        if members.is_empty() {
            continue;
        }
        let sum_u: f64 = members.iter().map(|&i| plan.payload.get(i, j)).sum();
        let budget = budgets.effective(j);
        if sum_u > budget {
            let scale = if sum_u > 0.0 { budget / sum_u } else { 0.0 };
            for &i in &members {
                plan.rate.set(i, j, plan.rate.get(i, j) * scale);
                plan.payload.set(i, j, plan.payload.get(i, j) * scale);
            }
        }
    }
    let throughput_bps = total_throughput(state, &links, &plan);
    Ok(BaselineResult {
        scheme: Scheme::FtsLike,
        links,
        plan,
        throughput_bps,
    })
}

/// No cooperation: every vehicle processes only its own sensing data.
pub fn run_no_fusion(state: &ScenarioState) -> BaselineResult {
    let n = state.n();
    let links = LinkMatrix::empty(n);
    let plan = RatePlan::zeros(n);
    let throughput_bps = state.vehicles.iter().map(|v| v.local_data_bps).sum();
    BaselineResult {
        scheme: Scheme::NoFusion,
        links,
        plan,
        throughput_bps,
    }
}
