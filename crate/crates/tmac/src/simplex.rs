//! Dense two-phase simplex solver with Bland's anti-cycling rule, plus an
//! independent greedy oracle for knapsack-structured instances.
//!
//! Instances here are tiny (tens of variables), so the implementation favors
//! determinism and clarity over asymptotics: reduced costs are recomputed
//! from the cost vector every iteration instead of being carried in the
//! tableau.

use thiserror::Error;

/// Absolute feasibility tolerance on normalized rows.
pub const FEAS_TOL: f64 = 1e-9;
/// Entries below this magnitude are not eligible as pivots.
pub const PIVOT_TOL: f64 = 1e-10;

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
    #[error("iteration limit of {0} reached without convergence")]
    IterationLimit(usize),
}

#[derive(Debug, Error, PartialEq)]
pub enum KnapsackError {
    #[error("negative input: {0}")]
    Negative(&'static str),
    #[error("dimension mismatch: {weights} weights vs {caps} caps")]
    Dimension { weights: usize, caps: usize },
}

/// General dense linear program: optimize `objective . x` subject to
/// `constraints * x <= rhs` and `lower <= x <= upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub maximize: bool,
    pub objective: Vec<f64>,
    pub constraints: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LpProblem {
    /// Maximization problem with default bounds 0 <= x < +inf.
    pub fn maximize(objective: Vec<f64>) -> Self {
        let n = objective.len();
        LpProblem {
            maximize: true,
            objective,
            constraints: Vec::new(),
            rhs: Vec::new(),
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn add_constraint(&mut self, coeffs: Vec<f64>, rhs: f64) {
        self.constraints.push(coeffs);
        self.rhs.push(rhs);
    }

    fn validate(&self) -> Result<(), LpError> {
        let n = self.objective.len();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(LpError::Dimension(format!(
                "{} objective coefficients but {}/{} bounds",
                n,
                self.lower.len(),
                self.upper.len()
            )));
        }
        if self.constraints.len() != self.rhs.len() {
            return Err(LpError::Dimension(format!(
                "{} constraint rows but {} rhs entries",
                self.constraints.len(),
                self.rhs.len()
            )));
        }
        for row in &self.constraints {
            if row.len() != n {
                return Err(LpError::Dimension(format!(
                    "constraint row of width {} in a {n}-variable problem",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(LpError::NonFinite("constraints"));
            }
        }
        if self.objective.iter().any(|v| !v.is_finite()) {
            return Err(LpError::NonFinite("objective"));
        }
        if self.rhs.iter().any(|v| !v.is_finite()) {
            return Err(LpError::NonFinite("rhs"));
        }
        if self.lower.iter().any(|v| !v.is_finite()) {
            return Err(LpError::NonFinite("lower bounds"));
        }
        if self.upper.iter().any(|v| v.is_nan()) {
            return Err(LpError::NonFinite("upper bounds"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal solution; empty unless status is Optimal.
    pub x: Vec<f64>,
    pub objective: f64,
    /// Dual values for the user-supplied rows, oriented so that at an optimum
    /// `objective == duals . rhs + bound_duals . upper` for problems with zero
    /// lower bounds.
    pub duals: Vec<f64>,
    /// Dual values for the implicit finite upper-bound rows (0 where the
    /// upper bound is infinite).
    pub bound_duals: Vec<f64>,
}

struct Tableau {
    rows: Vec<Vec<f64>>, // each row: ncols coefficients then rhs
    basis: Vec<usize>,
    ncols: usize,
    n_struct: usize,
    n_slack: usize,
    art_start: usize,
}

impl Tableau {
    fn rhs(&self, r: usize) -> f64 {
        self.rows[r][self.ncols]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let piv = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= piv;
        }
        let pivot_row = self.rows[r].clone();
        for (k, row) in self.rows.iter_mut().enumerate() {
            if k == r {
                continue;
            }
            let factor = row[c];
            if factor == 0.0 {
                continue;
            }
            for (v, p) in row.iter_mut().zip(pivot_row.iter()) {
                *v -= factor * p;
            }
            row[c] = 0.0; // exact, avoids roundoff residue in the pivot column
        }
        self.basis[r] = c;
    }

    /// One Bland iteration of phase `cost`. Returns Ok(true) when optimal,
    /// Ok(false) after a pivot, Err(()) when unbounded.
    fn bland_step(&mut self, cost: &[f64], allow: impl Fn(usize) -> bool) -> Result<bool, ()> {
        // reduced cost of column j: c_j - sum_i cost[basis_i] * T[i][j]
        let mut entering = None;
        'cols: for j in 0..self.ncols {
            if !allow(j) || self.basis.contains(&j) {
                continue;
            }
            let mut red = cost[j];
            for (i, &b) in self.basis.iter().enumerate() {
                let cb = cost[b];
                if cb != 0.0 {
                    red -= cb * self.rows[i][j];
                }
            }
            if red < -PIVOT_TOL {
                entering = Some(j);
                break 'cols;
            }
        }
        let Some(j) = entering else { return Ok(true) };

        let mut leave: Option<(usize, f64)> = None;
        for i in 0..self.rows.len() {
            let a = self.rows[i][j];
            if a > PIVOT_TOL {
                let ratio = self.rhs(i) / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        if ratio < br - PIVOT_TOL
                            || ((ratio - br).abs() <= PIVOT_TOL && self.basis[i] < self.basis[bi])
                        {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
        }
        match leave {
            Some((r, _)) => {
                self.pivot(r, j);
                Ok(false)
            }
            None => Err(()),
        }
    }

    fn objective_value(&self, cost: &[f64]) -> f64 {
        self.basis
            .iter()
            .enumerate()
            .map(|(i, &b)| cost[b] * self.rhs(i))
            .sum()
    }
}

/// Solve a dense LP with the two-phase simplex method. Deterministic: Bland's
/// rule picks the lowest-index entering column and breaks ratio ties on the
/// lowest basic index.
pub fn solve_lp(p: &LpProblem) -> Result<LpSolution, LpError> {
    p.validate()?;
    let n = p.objective.len();
    let m_user = p.constraints.len();

    // Shift to y = x - lower, y >= 0; finite upper bounds become extra rows.
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for (a, &b) in p.constraints.iter().zip(&p.rhs) {
        let shift: f64 = a.iter().zip(&p.lower).map(|(ai, li)| ai * li).sum();
        rows.push((a.clone(), b - shift));
    }
    let mut bound_row_of: Vec<Option<usize>> = vec![None; n];
    for j in 0..n {
        if p.upper[j] < p.lower[j] {
            return Ok(infeasible());
        }
        if p.upper[j].is_finite() {
            let mut a = vec![0.0; n];
            a[j] = 1.0;
            bound_row_of[j] = Some(rows.len());
            rows.push((a, p.upper[j] - p.lower[j]));
        }
    }
    let m = rows.len();
    let obj_const: f64 = p.objective.iter().zip(&p.lower).map(|(c, l)| c * l).sum();

    // Internal convention: minimize.
    let internal_cost: Vec<f64> = if p.maximize {
        p.objective.iter().map(|c| -c).collect()
    } else {
        p.objective.clone()
    };

    if n == 0 {
        if rows.iter().any(|(_, b)| *b < -FEAS_TOL) {
            return Ok(infeasible());
        }
        return Ok(LpSolution {
            status: LpStatus::Optimal,
            x: Vec::new(),
            objective: 0.0,
            duals: vec![0.0; m_user],
            bound_duals: vec![0.0; n],
        });
    }

    // Build tableau: structural | slack | artificial | rhs.
    let mut sign = vec![1.0f64; m]; // row orientation after negative-rhs flips
    let mut need_art: Vec<bool> = vec![false; m];
    for (i, (_, b)) in rows.iter().enumerate() {
        if *b < 0.0 {
            sign[i] = -1.0;
            need_art[i] = true;
        }
    }
    let n_art = need_art.iter().filter(|&&x| x).count();
    let n_slack = m;
    let ncols = n + n_slack + n_art;
    let mut t = Tableau {
        rows: Vec::with_capacity(m),
        basis: Vec::with_capacity(m),
        ncols,
        n_struct: n,
        n_slack,
        art_start: n + n_slack,
    };
    let mut art_idx = t.art_start;
    for (i, (a, b)) in rows.iter().enumerate() {
        let mut row = vec![0.0; ncols + 1];
        for (j, &aj) in a.iter().enumerate() {
            row[j] = sign[i] * aj;
        }
        row[n + i] = sign[i]; // slack
        row[ncols] = sign[i] * b;
        if need_art[i] {
            row[art_idx] = 1.0;
            t.basis.push(art_idx);
            art_idx += 1;
        } else {
            t.basis.push(n + i);
        }
        t.rows.push(row);
    }

    let max_iters = 200 * (ncols + m) + 1000;
    let mut iters = 0usize;

    // Phase 1: drive artificials to zero.
    if n_art > 0 {
        let mut cost1 = vec![0.0; ncols];
        for c in cost1.iter_mut().skip(t.art_start) {
            *c = 1.0;
        }
        loop {
            iters += 1;
            if iters > max_iters {
                return Err(LpError::IterationLimit(max_iters));
            }
            match t.bland_step(&cost1, |_| true) {
                Ok(true) => break,
                Ok(false) => {}
                Err(()) => unreachable!("phase-1 objective is bounded below by 0"),
            }
        }
        if t.objective_value(&cost1) > 1e-7 {
            return Ok(infeasible());
        }
        // Pivot remaining basic artificials out; a row with no eligible pivot
        // is redundant and gets dropped.
        let mut r = 0;
        while r < t.rows.len() {
            if t.basis[r] >= t.art_start {
                let mut pivoted = false;
                for j in 0..t.art_start {
                    if t.rows[r][j].abs() > PIVOT_TOL {
                        t.pivot(r, j);
                        pivoted = true;
                        break;
                    }
                }
                if !pivoted {
                    t.rows.remove(r);
                    t.basis.remove(r);
                    continue;
                }
            }
            r += 1;
        }
    }

    // Phase 2.
    let mut cost2 = vec![0.0; ncols];
    cost2[..n].copy_from_slice(&internal_cost);
    let art_start = t.art_start;
    loop {
        iters += 1;
        if iters > max_iters {
            return Err(LpError::IterationLimit(max_iters));
        }
        match t.bland_step(&cost2, |j| j < art_start) {
            Ok(true) => break,
            Ok(false) => {}
            Err(()) => {
                return Ok(LpSolution {
                    status: LpStatus::Unbounded,
                    x: Vec::new(),
                    objective: if p.maximize { f64::INFINITY } else { f64::NEG_INFINITY },
                    duals: vec![0.0; m_user],
                    bound_duals: vec![0.0; n],
                })
            }
        }
    }

    // Extract primal.
    let mut y = vec![0.0; n];
    for (i, &b) in t.basis.iter().enumerate() {
        if b < n {
            y[b] = t.rhs(i);
        }
    }
    let x: Vec<f64> = y.iter().zip(&p.lower).map(|(yi, li)| yi + li).collect();
    let objective: f64 = p.objective.iter().zip(&x).map(|(c, xi)| c * xi).sum::<f64>();
    let _ = obj_const;

    // Duals: pi_i = cost_B . B^-1 e_i. The final slack column of row i holds
    // sign_i * B^-1 e_i. Rows deleted as redundant keep a zero dual.
    let mut pi = vec![0.0; m];
    for i in 0..m {
        let col = n + i;
        let mut v = 0.0;
        for (k, &b) in t.basis.iter().enumerate() {
            let cb = cost2[b];
            if cb != 0.0 {
                v += cb * t.rows[k][col];
            }
        }
        pi[i] = sign[i] * v;
    }
    let orient = if p.maximize { -1.0 } else { 1.0 };
    let duals: Vec<f64> = pi[..m_user].iter().map(|v| orient * v).collect();
    let mut bound_duals = vec![0.0; n];
    for (j, row) in bound_row_of.iter().enumerate() {
        if let Some(r) = row {
            bound_duals[j] = orient * pi[*r];
        }
    }

    let _ = (t.n_struct, t.n_slack);
    Ok(LpSolution {
        status: LpStatus::Optimal,
        x,
        objective,
        duals,
        bound_duals,
    })
}

fn infeasible() -> LpSolution {
    LpSolution {
        status: LpStatus::Infeasible,
        x: Vec::new(),
        objective: f64::NAN,
        duals: Vec::new(),
        bound_duals: Vec::new(),
    }
}

/// Greedy oracle for `max sum w_i u_i` subject to `0 <= u_i <= caps_i` and
/// `sum u_i <= budget`: fill in descending weight order, ties to the lower
/// index.
pub fn solve_fractional_knapsack(
    weights: &[f64],
    caps: &[f64],
    budget: f64,
) -> Result<Vec<f64>, KnapsackError> {
    if weights.len() != caps.len() {
        return Err(KnapsackError::Dimension {
            weights: weights.len(),
            caps: caps.len(),
        });
    }
    if weights.iter().any(|&w| w <= 0.0) {
        return Err(KnapsackError::Negative("weights must be > 0"));
    }
    if caps.iter().any(|&c| c < 0.0) {
        return Err(KnapsackError::Negative("caps"));
    }
    if budget < 0.0 {
        return Err(KnapsackError::Negative("budget"));
    }
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        weights[b]
            .partial_cmp(&weights[a])
            .expect("weights are finite")
            .then(a.cmp(&b))
    });
    let mut u = vec![0.0; weights.len()];
    let mut remaining = budget;
    for idx in order {
        if remaining <= 0.0 {
            break;
        }
        let take = caps[idx].min(remaining);
        u[idx] = take;
        remaining -= take;
    }
    Ok(u)
}
