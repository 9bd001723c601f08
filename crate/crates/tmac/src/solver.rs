//! Decomposed throughput maximization: LP construction over the auxiliary
//! payload variables u_ij = rho_ij * d_ij, closed-form recovery of rates and
//! compression ratios, and the outer add/remove link search.
//!
//! Each round solves the rate/compression LP for the current link matrix,
//! then either removes the minimum-capacity link of a budget-infeasible ego
//! or greedily adds the single link that most increases total throughput.

use crate::channel::ChannelMatrix;
use crate::mat::Mat;
use crate::rd::{select_operating_point, BetaMap, RdError, RdOperatingSet};
use crate::scenario::{ScenarioConfig, ScenarioState};
use crate::simplex::{solve_lp, LpError, LpProblem, LpStatus};
use thiserror::Error;

/// Relative improvement threshold for accepting a link addition.
pub const IMPROVEMENT_TOL: f64 = 1e-6;
/// Relative tolerance used by the constraint audit.
pub const AUDIT_REL_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("subchannel budget K must be >= 0")]
    NegativeBudget,
    #[error("lp solve failed: {0}")]
    Lp(#[from] LpError),
    #[error("lp reported status {0:?} for a bounded feasible program")]
    UnexpectedLpStatus(LpStatus),
    #[error("recovered payload {u} exceeds cap {cap} on link ({i},{j})")]
    PayloadExceedsCap { i: usize, j: usize, u: f64, cap: f64 },
    #[error("rate-distortion selection failed: {0}")]
    Rd(#[from] RdError),
}

/// Binary link-establishment matrix with a zero diagonal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkMatrix {
    n: usize,
    s: Vec<bool>,
}

impl LinkMatrix {
    pub fn empty(n: usize) -> Self {
        LinkMatrix { n, s: vec![false; n * n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.s[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        assert!(i != j || !v, "diagonal links are not allowed");
        self.s[i * self.n + j] = v;
    }

    /// Number of established links into ego column `j`.
    pub fn in_degree(&self, j: usize) -> usize {
        (0..self.n).filter(|&i| i != j && self.get(i, j)).count()
    }

    /// Established links in deterministic (transmitter, ego) order.
    pub fn links(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for j in 0..self.n {
            for i in 0..self.n {
                if i != j && self.get(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn link_count(&self) -> usize {
        self.s.iter().filter(|&&v| v).count()
    }
}

/// Rates, compression ratios, payloads and selected tradeoff points, all
/// N x N with zeros on non-established links.
#[derive(Debug, Clone, PartialEq)]
pub struct RatePlan {
    /// Transmission rates d_ij in bits/s.
    pub rate: Mat,
    /// Compression ratios rho_ij; lower bound convention on idle links.
    pub rho: Mat,
    /// Payloads u_ij = rho_ij * d_ij in bits/s.
    pub payload: Mat,
    /// Selected rate-distortion operating point per active link, 0 elsewhere.
    pub beta_star: Mat,
}

impl RatePlan {
    pub fn zeros(n: usize) -> Self {
        RatePlan {
            rate: Mat::zeros(n),
            rho: Mat::zeros(n),
            payload: Mat::zeros(n),
            beta_star: Mat::zeros(n),
        }
    }
}

/// Per-ego throughput budgets derived from the energy and compute
/// constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct EgoBudgets {
    /// Energy-derived budget gamma_j in bits/s, before flooring at zero.
    pub gamma: Vec<f64>,
    /// Compute budget phi_j = F_j/beta - A_j in bits/s.
    pub phi: Vec<f64>,
}

impl EgoBudgets {
    /// Effective LP budget for ego j: min(max(gamma, 0), phi).
    pub fn effective(&self, j: usize) -> f64 {
        self.gamma[j].max(0.0).min(self.phi[j])
    }

    /// An ego with established links whose raw budget is negative cannot be
    /// served at any rate; the outer loop reacts by removing a link.
    pub fn is_infeasible(&self, j: usize) -> bool {
        self.gamma[j] < 0.0 || self.phi[j] < 0.0
    }
}

/// Per-link energy cost chi_ij = u_ij * eps_j * tau_c + tau_t * P_t, joules.
pub fn link_energy_cost(cfg: &ScenarioConfig, u: f64) -> f64 {
    u * cfg.epsilon_j * cfg.tau_c + cfg.tau_t * cfg.tx_power_pt
}

/// Lower bound on the compression ratio of a link at normalized distance l.
pub fn rho_lower_bound(cfg: &ScenarioConfig, l: f64) -> f64 {
    cfg.rho_min.max(cfg.eta * (-l).exp())
}

pub fn compute_budgets(
    state: &ScenarioState,
    cfg: &ScenarioConfig,
    links: &LinkMatrix,
) -> EgoBudgets {
    let n = state.n();
    let mut gamma = Vec::with_capacity(n);
    let mut phi = Vec::with_capacity(n);
    let et_per_bit = cfg.epsilon_j * cfg.tau_c;
    for j in 0..n {
        let v = &state.vehicles[j];
        let established = links.in_degree(j) as f64;
        gamma.push(
            cfg.energy_budget_et / et_per_bit
                - cfg.tau_t * cfg.tx_power_pt * established / et_per_bit
                - v.local_data_bps,
        );
        phi.push(v.cpu_hz / cfg.cycles_per_bit_beta - v.local_data_bps);
    }
    EgoBudgets { gamma, phi }
}

/// Room left under the sub-channel budget for a new link into ego `j`.
fn k_budget_has_room(links: &LinkMatrix, cfg: &ScenarioConfig, j: usize) -> bool {
    if cfg.network_k_budget {
        links.link_count() < cfg.subchannel_budget_k
    } else {
        links.in_degree(j) < cfg.subchannel_budget_k
    }
}

/// Initial links under a network-wide budget: the K largest capacities
/// anywhere in the matrix.
pub fn initial_links_network(channel: &ChannelMatrix, k: usize) -> LinkMatrix {
    let n = channel.capacity.n();
    let mut all: Vec<(usize, usize, f64)> = channel.capacity.iter_off_diag().collect();
    all.sort_by(|a, b| {
        b.2.partial_cmp(&a.2)
            .expect("finite capacity")
            .then((a.0, a.1).cmp(&(b.0, b.1)))
    });
    let mut links = LinkMatrix::empty(n);
    for &(i, j, _) in all.iter().take(k) {
        links.set(i, j, true);
    }
    links
}

/// Initial links: for each ego column, mark the K largest off-diagonal
/// capacities; ties break toward the lower transmitter index.
pub fn initial_links(channel: &ChannelMatrix, k: usize) -> LinkMatrix {
    let n = channel.capacity.n();
    let mut links = LinkMatrix::empty(n);
    for j in 0..n {
        let mut col: Vec<(usize, f64)> = channel.capacity.column_off_diag(j).collect();
        col.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("finite capacity").then(a.0.cmp(&b.0)));
        for &(i, _) in col.iter().take(k) {
            links.set(i, j, true);
        }
    }
    links
}

/// Outcome of assembling the rate/compression LP for a fixed link matrix.
#[derive(Debug)]
pub enum P12 {
    Problem {
        lp: LpProblem,
        /// Variable order: one payload u_ij per established link.
        links: Vec<(usize, usize)>,
        /// Objective weight per link: 1 / max(rho_min, eta e^-L).
        weights: Vec<f64>,
    },
    /// Egos whose budget is negative while they still have established
    /// links; consumed by the outer loop, which removes a link.
    InfeasibleBudget { egos: Vec<usize> },
}

pub fn build_p12(
    state: &ScenarioState,
    channel: &ChannelMatrix,
    cfg: &ScenarioConfig,
    links: &LinkMatrix,
) -> P12 {
    let n = state.n();
    let budgets = compute_budgets(state, cfg, links);
    let bad: Vec<usize> = (0..n)
        .filter(|&j| links.in_degree(j) > 0 && budgets.is_infeasible(j))
        .collect();
    if !bad.is_empty() {
        return P12::InfeasibleBudget { egos: bad };
    }

    let link_list = links.links();
    let mut weights = Vec::with_capacity(link_list.len());
    let mut upper = Vec::with_capacity(link_list.len());
    for &(i, j) in &link_list {
        let l = state.norm_distance.get(i, j);
        weights.push(1.0 / rho_lower_bound(cfg, l));
        upper.push(channel.capacity.get(i, j).min(state.vehicles[i].local_data_bps));
    }
    let mut lp = LpProblem::maximize(weights.clone());
    lp.upper = upper;
    for j in 0..n {
        if links.in_degree(j) == 0 {
            continue;
        }
        let coeffs: Vec<f64> = link_list
            .iter()
            .map(|&(_, ego)| if ego == j { 1.0 } else { 0.0 })
            .collect();
        lp.add_constraint(coeffs, budgets.effective(j));
    }
    P12::Problem { lp, links: link_list, weights }
}

/// Rates and compression ratios from the optimal payloads: on active links
/// rho sits exactly at its lower bound and d = u / rho.
pub fn recover_plan(
    u_opt: &[f64],
    link_list: &[(usize, usize)],
    state: &ScenarioState,
    channel: &ChannelMatrix,
    cfg: &ScenarioConfig,
) -> Result<RatePlan, SolverError> {
    let n = state.n();
    let mut plan = RatePlan::zeros(n);
    for (&(i, j), &u) in link_list.iter().zip(u_opt) {
        let cap = channel.capacity.get(i, j).min(state.vehicles[i].local_data_bps);
        if u > cap * (1.0 + 1e-6) + 1e-6 {
            return Err(SolverError::PayloadExceedsCap { i, j, u, cap });
        }
        let lb = rho_lower_bound(cfg, state.norm_distance.get(i, j));
        plan.rho.set(i, j, lb);
        if u > 0.0 {
            plan.payload.set(i, j, u);
            plan.rate.set(i, j, u / lb);
        }
    }
    Ok(plan)
}

/// Total processing throughput: sum_j (A_j + sum_i s_ij d_ij).
pub fn total_throughput(state: &ScenarioState, links: &LinkMatrix, plan: &RatePlan) -> f64 {
    let local: f64 = state.vehicles.iter().map(|v| v.local_data_bps).sum();
    let fused: f64 = links.links().iter().map(|&(i, j)| plan.rate.get(i, j)).sum();
    local + fused
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Added(usize, usize),
    Removed(usize, usize),
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    pub objective: f64,
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TmacResult {
    pub links: LinkMatrix,
    pub plan: RatePlan,
    pub throughput_bps: f64,
    pub trace: Vec<RoundRecord>,
    pub converged: bool,
}

/// Remove the established link with minimum capacity among the given egos
/// (all egos when the slice is empty). Ties break toward the lower (i, j).
fn remove_min_capacity_link(
    links: &LinkMatrix,
    channel: &ChannelMatrix,
    egos: &[usize],
) -> Option<(usize, usize)> {
    let mut best: Option<((usize, usize), f64)> = None;
    for (i, j) in links.links() {
        if !egos.is_empty() && !egos.contains(&j) {
            continue;
        }
        let c = channel.capacity.get(i, j);
        best = match best {
            None => Some(((i, j), c)),
            Some((bl, bc)) => {
                if c < bc || (c == bc && (i, j) < bl) {
                    Some(((i, j), c))
                } else {
                    Some((bl, bc))
                }
            }
        };
    }
    best.map(|(l, _)| l)
}

fn solve_p12_for(
    state: &ScenarioState,
    channel: &ChannelMatrix,
    cfg: &ScenarioConfig,
    links: &LinkMatrix,
) -> Result<Option<(RatePlan, f64)>, SolverError> {
    match build_p12(state, channel, cfg, links) {
        P12::InfeasibleBudget { .. } => Ok(None),
        P12::Problem { lp, links: order, .. } => {
            let sol = solve_lp(&lp)?;
            if sol.status != LpStatus::Optimal {
                return Err(SolverError::UnexpectedLpStatus(sol.status));
            }
            let plan = recover_plan(&sol.x, &order, state, channel, cfg)?;
            let t = total_throughput(state, links, &plan);
            Ok(Some((plan, t)))
        }
    }
}

/// One step of the link search: removal of a minimum-capacity link when the
/// current plan violates the budget constraints, otherwise the best single
/// addition that strictly improves throughput while staying feasible.
pub fn solve_p2_step(
    state: &ScenarioState,
    channel: &ChannelMatrix,
    cfg: &ScenarioConfig,
    plan: &RatePlan,
    links: &LinkMatrix,
) -> Result<(LinkMatrix, Action), SolverError> {
    let n = state.n();
    let budgets = compute_budgets(state, cfg, links);

    // Feasibility of the current (plan, S) under the payload, energy, and
    // sub-channel constraints.
    let mut violating = Vec::new();
    for j in 0..n {
        let sum_u: f64 = (0..n)
            .filter(|&i| i != j && links.get(i, j))
            .map(|i| plan.payload.get(i, j))
            .sum();
        let chi_total: f64 = (0..n)
            .filter(|&i| i != j && links.get(i, j))
            .map(|i| link_energy_cost(cfg, plan.payload.get(i, j)))
            .sum();
        let energy_room = cfg.energy_budget_et
            - cfg.tau_c * cfg.epsilon_j * state.vehicles[j].local_data_bps;
        let tol = |rhs: f64| AUDIT_REL_TOL * (1.0 + rhs.abs());
        let degree_over = if cfg.network_k_budget {
            links.link_count() > cfg.subchannel_budget_k && links.in_degree(j) > 0
        } else {
            links.in_degree(j) > cfg.subchannel_budget_k
        };
        if sum_u > budgets.phi[j] + tol(budgets.phi[j])
            || chi_total > energy_room + tol(energy_room)
            || degree_over
        {
            violating.push(j);
        }
    }
    if !violating.is_empty() {
        if let Some((i, j)) = remove_min_capacity_link(links, channel, &violating) {
            let mut next = links.clone();
            next.set(i, j, false);
            return Ok((next, Action::Removed(i, j)));
        }
    }

    // Steepest-ascent addition: re-solve the LP with each tentative link and
    // keep the best strict improvement. Ties break by capacity, then index.
    let current_t = total_throughput(state, links, plan);
    let mut best: Option<((usize, usize), f64, f64)> = None;
    for j in 0..n {
        if !k_budget_has_room(links, cfg, j) {
            continue;
        }
        for i in 0..n {
            if i == j || links.get(i, j) {
                continue;
            }
            let mut tentative = links.clone();
            tentative.set(i, j, true);
            let Some((_, t)) = solve_p12_for(state, channel, cfg, &tentative)? else {
                continue; // addition would break an ego budget
            };
            if t - current_t <= IMPROVEMENT_TOL * current_t.abs() {
                continue;
            }
            let cap = channel.capacity.get(i, j);
            let better = match &best {
                None => true,
                Some((bl, bt, bcap)) => {
                    t > *bt + 1e-12
                        || ((t - bt).abs() <= 1e-12
                            && (cap > *bcap || (cap == *bcap && (i, j) < *bl)))
                }
            };
            if better {
                best = Some(((i, j), t, cap));
            }
        }
    }
    if let Some(((i, j), _, _)) = best {
        let mut next = links.clone();
        next.set(i, j, true);
        return Ok((next, Action::Added(i, j)));
    }
    Ok((links.clone(), Action::None))
}

/// Rate-distortion configuration consumed when stamping beta* onto the plan.
#[derive(Debug, Clone, PartialEq)]
pub struct RdConfig {
    pub beta_map: BetaMap,
    pub operating_set: RdOperatingSet,
}

impl Default for RdConfig {
    fn default() -> Self {
        RdConfig {
            beta_map: BetaMap::identity(),
            operating_set: RdOperatingSet::default(),
        }
    }
}

pub fn default_max_rounds(cfg: &ScenarioConfig) -> usize {
    (4 * cfg.vehicle_count * cfg.subchannel_budget_k).max(1)
}

/// The full alternating loop: initialize links by capacity, then alternate
/// LP solve and link add/remove until a fixed point or the round limit.
pub fn run_tmac(
    state: &ScenarioState,
    channel: &ChannelMatrix,
    cfg: &ScenarioConfig,
    rd: &RdConfig,
    max_rounds: Option<usize>,
) -> Result<TmacResult, SolverError> {
    let max_rounds = max_rounds.unwrap_or_else(|| default_max_rounds(cfg));
    let mut links = if cfg.network_k_budget {
        initial_links_network(channel, cfg.subchannel_budget_k)
    } else {
        initial_links(channel, cfg.subchannel_budget_k)
    };
    let mut plan = RatePlan::zeros(state.n());
    let mut trace = Vec::new();
    let mut converged = false;

    for round in 0..max_rounds {
        match solve_p12_for(state, channel, cfg, &links)? {
            None => {
                // Budget-infeasible ego: drop its weakest link and retry.
                let bad: Vec<usize> = {
                    let budgets = compute_budgets(state, cfg, &links);
                    (0..state.n())
                        .filter(|&j| links.in_degree(j) > 0 && budgets.is_infeasible(j))
                        .collect()
                };
                let (i, j) = remove_min_capacity_link(&links, channel, &bad)
                    .expect("infeasible egos have established links");
                links.set(i, j, false);
                plan = RatePlan::zeros(state.n());
                trace.push(RoundRecord {
                    round,
                    objective: total_throughput(state, &links, &plan),
                    action: Action::Removed(i, j),
                });
                continue;
            }
            Some((p, t)) => {
                plan = p;
                let (next, action) = solve_p2_step(state, channel, cfg, &plan, &links)?;
                trace.push(RoundRecord { round, objective: t, action });
                match action {
                    Action::None => {
                        converged = true;
                        break;
                    }
                    _ => links = next,
                }
            }
        }
    }

    // Final plan for the settled link matrix.
    if let Some((p, _)) = solve_p12_for(state, channel, cfg, &links)? {
        plan = p;
    }
    stamp_beta_star(&mut plan, &links, rd)?;
    let throughput_bps = total_throughput(state, &links, &plan);
    Ok(TmacResult { links, plan, throughput_bps, trace, converged })
}

/// Select the rate-distortion operating point for every active link.
pub fn stamp_beta_star(
    plan: &mut RatePlan,
    links: &LinkMatrix,
    rd: &RdConfig,
) -> Result<(), SolverError> {
    for (i, j) in links.links() {
        if plan.rate.get(i, j) > 0.0 {
            let (lo, hi) = rd.beta_map.domain();
            let rho = plan.rho.get(i, j).clamp(lo, hi);
            let beta = select_operating_point(&rd.operating_set, rho, &rd.beta_map)?;
            plan.beta_star.set(i, j, beta);
        }
    }
    Ok(())
}

/// One detected constraint violation, with the offending indices and the
/// magnitude by which the constraint is exceeded.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub constraint: ConstraintKind,
    pub tx: Option<usize>,
    pub ego: usize,
    pub magnitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    /// Non-zero diagonal entry in S.
    DiagonalLink,
    /// More than K links into one ego.
    SubchannelBudget,
    /// rho * d exceeds min(C, A) on a link.
    RateCap,
    /// rho outside [rho_min, rho_max] on an established link.
    RhoRange,
    /// rho e^L below eta on an established link.
    RhoDistancePriority,
    /// A_j + sum rho s d exceeds F_j / beta.
    ComputeCapacity,
    /// Total transmit plus processing energy exceeds E^T.
    EnergyBudget,
}

impl ConstraintKind {
    pub fn label(&self) -> &'static str {
        match self {
            ConstraintKind::DiagonalLink => "diagonal-link",
            ConstraintKind::SubchannelBudget => "subchannel-budget",
            ConstraintKind::RateCap => "rate-cap",
            ConstraintKind::RhoRange => "rho-range",
            ConstraintKind::RhoDistancePriority => "rho-distance-priority",
            ConstraintKind::ComputeCapacity => "compute-capacity",
            ConstraintKind::EnergyBudget => "energy-budget",
        }
    }
}

/// Independent constraint checker: re-derives every constraint from the
/// scenario, channel, and config without reusing solver state.
pub fn audit_constraints(
    links: &LinkMatrix,
    plan: &RatePlan,
    state: &ScenarioState,
    channel: &ChannelMatrix,
    cfg: &ScenarioConfig,
) -> Vec<Violation> {
    let n = state.n();
    let tol = |rhs: f64| AUDIT_REL_TOL * (1.0 + rhs.abs());
    let mut out = Vec::new();

    if cfg.network_k_budget && links.link_count() > cfg.subchannel_budget_k {
        out.push(Violation {
            constraint: ConstraintKind::SubchannelBudget,
            tx: None,
            ego: 0,
            magnitude: (links.link_count() - cfg.subchannel_budget_k) as f64,
        });
    }

    for j in 0..n {
        if links.get(j, j) {
            out.push(Violation {
                constraint: ConstraintKind::DiagonalLink,
                tx: Some(j),
                ego: j,
                magnitude: 1.0,
            });
        }
        let degree = links.in_degree(j);
        if !cfg.network_k_budget && degree > cfg.subchannel_budget_k {
            out.push(Violation {
                constraint: ConstraintKind::SubchannelBudget,
                tx: None,
                ego: j,
                magnitude: (degree - cfg.subchannel_budget_k) as f64,
            });
        }

        let mut processed = state.vehicles[j].local_data_bps;
        for i in 0..n {
            if i == j || !links.get(i, j) {
                continue;
            }
            let d = plan.rate.get(i, j);
            let rho = plan.rho.get(i, j);
            processed += rho * d;

            let cap = channel.capacity.get(i, j).min(state.vehicles[i].local_data_bps);
            if rho * d > cap + tol(cap) {
                out.push(Violation {
                    constraint: ConstraintKind::RateCap,
                    tx: Some(i),
                    ego: j,
                    magnitude: rho * d - cap,
                });
            }
            if rho < cfg.rho_min - AUDIT_REL_TOL || rho > cfg.rho_max + AUDIT_REL_TOL {
                out.push(Violation {
                    constraint: ConstraintKind::RhoRange,
                    tx: Some(i),
                    ego: j,
                    magnitude: (cfg.rho_min - rho).max(rho - cfg.rho_max),
                });
            }
            let l = state.norm_distance.get(i, j);
            if rho * l.exp() < cfg.eta - tol(cfg.eta) {
                out.push(Violation {
                    constraint: ConstraintKind::RhoDistancePriority,
                    tx: Some(i),
                    ego: j,
                    magnitude: cfg.eta - rho * l.exp(),
                });
            }
        }

        let compute_cap = state.vehicles[j].cpu_hz / cfg.cycles_per_bit_beta;
        if processed > compute_cap + tol(compute_cap) {
            out.push(Violation {
                constraint: ConstraintKind::ComputeCapacity,
                tx: None,
                ego: j,
                magnitude: processed - compute_cap,
            });
        }

        let energy = cfg.epsilon_j * cfg.tau_c * processed
            + cfg.tau_t * cfg.tx_power_pt * links.in_degree(j) as f64;
        if energy > cfg.energy_budget_et + tol(cfg.energy_budget_et) {
            out.push(Violation {
                constraint: ConstraintKind::EnergyBudget,
                tx: None,
                ego: j,
                magnitude: energy - cfg.energy_budget_et,
            });
        }
    }
    out
}
