//! Dense bounded-variable revised simplex.
//!
//! Problems are stated as
//!
//! ```text
//!     maximize    cᵀx
//!     subject to  E x = f
//!                 lo ≤ hᵀx ≤ hi        (optional interval row)
//!                 0 ≤ x ≤ u            (u may be +∞)
//! ```
//!
//! The interval row becomes an extra equality `hᵀx − w = lo` with a bounded
//! slack `w ∈ [0, hi − lo]`, so the basis only grows by one row. Phase one
//! uses one artificial per row; in phase two artificials are fixed at zero.
//!
//! Pricing is Dantzig's rule until twenty degenerate pivots in a row, then
//! Bland's rule until the objective moves again. The explicit basis inverse is
//! updated with eta transformations and refactored every fifty pivots.

use log::debug;
use thiserror::Error;

use crate::numerics::{dot, invert, Mat, NumericsError};

const REDUCED_COST_TOL: f64 = 1e-9;
const RATIO_TOL: f64 = 1e-10;
const HARRIS_TOL: f64 = 1e-9;
const DEGENERATE_STREAK: usize = 20;
const REFACTOR_EVERY: usize = 50;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("malformed instance: {0}")]
    Malformed(String),
    #[error("basis factorization failed: {0}")]
    Numerics(#[from] NumericsError),
}

/// Two-sided row `lo ≤ coeffsᵀx ≤ hi`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalRow {
    pub coeffs: Vec<f64>,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpInstance {
    /// Objective to maximize.
    pub objective: Vec<f64>,
    pub eq_matrix: Mat,
    pub eq_rhs: Vec<f64>,
    pub interval: Option<IntervalRow>,
    /// Per-variable upper bounds; `None` means all `+∞`. Lower bounds are 0.
    pub upper: Option<Vec<f64>>,
}

impl LpInstance {
    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.eq_matrix.cols() != n && self.eq_matrix.rows() > 0 {
            return Err(LpError::Malformed(format!(
                "equality matrix has {} columns, objective has {n}",
                self.eq_matrix.cols()
            )));
        }
        if self.eq_matrix.rows() != self.eq_rhs.len() {
            return Err(LpError::Malformed("equality rhs length".into()));
        }
        if let Some(iv) = &self.interval {
            if iv.coeffs.len() != n {
                return Err(LpError::Malformed("interval row length".into()));
            }
            if !(iv.lo <= iv.hi) {
                return Err(LpError::Malformed("interval row has lo > hi".into()));
            }
        }
        if let Some(u) = &self.upper {
            if u.len() != n || u.iter().any(|&v| !(v >= 0.0)) {
                return Err(LpError::Malformed("upper bounds".into()));
            }
        }
        let finite = self
            .objective
            .iter()
            .chain(self.eq_matrix.as_slice())
            .chain(&self.eq_rhs)
            .all(|v| v.is_finite());
        if !finite {
            return Err(LpError::Malformed("non-finite data".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LpStatus {
    Optimal,
    /// Stopped once a dual bound certified `value ≥ (1 − α)·optimum`.
    AlphaApproximate(f64),
    /// Pivot limit reached; the returned point is feasible but may be
    /// suboptimal.
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
    pub status: LpStatus,
    /// Best proven upper bound on the optimal value (`+∞` when none).
    pub bound: f64,
    pub pivots: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    /// Relative accuracy for early termination, in `[0, 1)`. Zero solves to
    /// optimality.
    pub alpha: f64,
    pub pivot_limit: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            alpha: 0.0,
            pivot_limit: 50_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic,
    AtLower,
    AtUpper,
}

struct Simplex {
    m: usize,
    ncols: usize,
    /// Column-major constraint matrix.
    cols: Vec<f64>,
    rhs: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    /// Columns that may never enter the basis.
    frozen: Vec<bool>,
    basis: Vec<usize>,
    state: Vec<VarState>,
    binv: Vec<f64>,
    xb: Vec<f64>,
    pivots: usize,
    since_refactor: usize,
}

enum Step {
    Optimal,
    Pivoted { degenerate: bool },
    Unbounded,
}

impl Simplex {
    fn col(&self, j: usize) -> &[f64] {
        &self.cols[j * self.m..(j + 1) * self.m]
    }

    fn value_of(&self, j: usize) -> f64 {
        match self.state[j] {
            VarState::AtLower => 0.0,
            VarState::AtUpper => self.upper[j],
            VarState::Basic => {
                let r = self.basis.iter().position(|&b| b == j).unwrap();
                self.xb[r]
            }
        }
    }

    fn primal(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.ncols];
        for j in 0..self.ncols {
            if self.state[j] == VarState::AtUpper {
                x[j] = self.upper[j];
            }
        }
        for (r, &j) in self.basis.iter().enumerate() {
            x[j] = self.xb[r];
        }
        x
    }

    fn objective(&self) -> f64 {
        (0..self.ncols)
            .map(|j| self.cost[j] * self.value_of(j))
            .sum()
    }

    /// Dual prices `y = c_Bᵀ B⁻¹`.
    fn duals(&self) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (r, &j) in self.basis.iter().enumerate() {
            let cj = self.cost[j];
            if cj != 0.0 {
                for k in 0..m {
                    y[k] += cj * self.binv[r * m + k];
                }
            }
        }
        y
    }

    fn reduced_cost(&self, y: &[f64], j: usize) -> f64 {
        self.cost[j] - dot(y, self.col(j))
    }

    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        let a = self.col(j);
        (0..m)
            .map(|r| dot(&self.binv[r * m..(r + 1) * m], a))
            .collect()
    }

    fn refactor(&mut self) -> Result<(), LpError> {
        let m = self.m;
        let mut b = Mat::zeros(m, m);
        for (r, &j) in self.basis.iter().enumerate() {
            for i in 0..m {
                b[(i, r)] = self.col(j)[i];
            }
        }
        let inv = match invert(&b) {
            Ok(inv) => inv,
            Err(NumericsError::Singular) => {
                let swapped = self.repair_basis();
                debug!("singular basis: {swapped} columns replaced by artificials");
                let mut b = Mat::zeros(m, m);
                for (r, &j) in self.basis.iter().enumerate() {
                    for i in 0..m {
                        b[(i, r)] = self.col(j)[i];
                    }
                }
                invert(&b)?
            }
            Err(e) => return Err(e.into()),
        };
        self.binv = inv.as_slice().to_vec();
        let mut rhs = self.rhs.clone();
        for j in 0..self.ncols {
            if self.state[j] == VarState::AtUpper {
                let u = self.upper[j];
                for (ri, aij) in rhs.iter_mut().zip(self.col(j)) {
                    *ri -= u * aij;
                }
            }
        }
        self.xb = (0..m)
            .map(|r| dot(&self.binv[r * m..(r + 1) * m], &rhs))
            .collect();
        for (r, &j) in self.basis.iter().enumerate() {
            self.xb[r] = self.xb[r].clamp(0.0, self.upper[j]);
        }
        self.since_refactor = 0;
        Ok(())
    }

    /// Swaps numerically dependent basis columns for the artificial columns
    /// of rows the remaining basis leaves uncovered. Returns the swap count.
    fn repair_basis(&mut self) -> usize {
        let m = self.m;
        let first_artificial = self.ncols - m;
        let mut a = vec![0.0; m * m];
        for (r, &j) in self.basis.iter().enumerate() {
            for (i, v) in self.col(j).iter().enumerate() {
                a[i * m + r] = *v;
            }
        }
        let scale = a.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        let mut row_used = vec![false; m];
        let mut dependent = Vec::new();
        for r in 0..m {
            let pivot = (0..m)
                .filter(|&i| !row_used[i])
                .max_by(|&i, &k| a[i * m + r].abs().total_cmp(&a[k * m + r].abs()));
            let Some(p) = pivot.filter(|&p| a[p * m + r].abs() > 1e-11 * scale) else {
                dependent.push(r);
                continue;
            };
            row_used[p] = true;
            let piv = a[p * m + r];
            for c in r + 1..m {
                let f = a[p * m + c] / piv;
                if f != 0.0 {
                    for i in 0..m {
                        a[i * m + c] -= f * a[i * m + r];
                    }
                }
            }
        }
        for &r in &dependent {
            self.state[self.basis[r]] = VarState::AtLower;
        }
        let free_rows: Vec<usize> = (0..m)
            .filter(|&i| !row_used[i] && self.state[first_artificial + i] != VarState::Basic)
            .collect();
        for (r, i) in dependent.iter().zip(free_rows) {
            let art = first_artificial + i;
            self.basis[*r] = art;
            self.state[art] = VarState::Basic;
        }
        dependent.len()
    }

    /// Refactors, then applies rounds of iterative refinement to the basic
    /// values so that `B x_B` matches the right-hand side to working precision.
    fn refine(&mut self, rounds: usize) -> Result<(), LpError> {
        self.refactor()?;
        let m = self.m;
        for _ in 0..rounds {
            let mut resid = self.rhs.clone();
            for j in 0..self.ncols {
                let v = match self.state[j] {
                    VarState::AtUpper => self.upper[j],
                    _ => continue,
                };
                for (ri, aij) in resid.iter_mut().zip(self.col(j)) {
                    *ri -= v * aij;
                }
            }
            for (r, &j) in self.basis.iter().enumerate() {
                let v = self.xb[r];
                for (ri, aij) in resid.iter_mut().zip(self.col(j)) {
                    *ri -= v * aij;
                }
            }
            for r in 0..m {
                let j = self.basis[r];
                let corr = dot(&self.binv[r * m..(r + 1) * m], &resid);
                self.xb[r] = (self.xb[r] + corr).clamp(0.0, self.upper[j]);
            }
        }
        Ok(())
    }

    /// Upper bound on the current phase objective from the basis duals.
    fn dual_bound(&self, y: &[f64]) -> f64 {
        let mut bound = dot(y, &self.rhs);
        for j in 0..self.ncols {
            if self.state[j] == VarState::Basic || self.upper[j] == 0.0 {
                continue;
            }
            let d = self.reduced_cost(y, j);
            if d > 0.0 {
                if self.upper[j].is_infinite() {
                    return f64::INFINITY;
                }
                bound += d * self.upper[j];
            }
        }
        bound
    }

    fn step(&mut self, bland: bool, y: &[f64]) -> Result<Step, LpError> {
        // Pricing.
        let mut entering: Option<(usize, f64)> = None;
        for j in 0..self.ncols {
            if self.frozen[j] || self.upper[j] == 0.0 {
                continue;
            }
            let d = match self.state[j] {
                VarState::Basic => continue,
                VarState::AtLower => self.reduced_cost(y, j),
                VarState::AtUpper => -self.reduced_cost(y, j),
            };
            if d > REDUCED_COST_TOL {
                if bland {
                    entering = Some((j, d));
                    break;
                }
                if entering.map_or(true, |(_, best)| d > best) {
                    entering = Some((j, d));
                }
            }
        }
        let Some((q, _)) = entering else {
            return Ok(Step::Optimal);
        };
        let dir = if self.state[q] == VarState::AtLower {
            1.0
        } else {
            -1.0
        };
        let alpha = self.ftran(q);

        // Ratio test: basics move by −θ·dir·α. Pivots are screened relative
        // to the column; outside Bland mode, Harris' two passes pick the
        // largest pivot among rows blocking within a small tolerance.
        let pivot_tol = RATIO_TOL * alpha.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        let limits: Vec<Option<(f64, f64, bool)>> = (0..self.m)
            .map(|r| {
                let delta = dir * alpha[r];
                let j = self.basis[r];
                if delta > pivot_tol {
                    Some((self.xb[r].max(0.0), delta, false))
                } else if delta < -pivot_tol && self.upper[j].is_finite() {
                    Some(((self.upper[j] - self.xb[r]).max(0.0), -delta, true))
                } else {
                    None
                }
            })
            .collect();
        let mut theta = self.upper[q];
        let mut leave: Option<(usize, bool)> = None; // (row, leaves at upper)
        if bland {
            for (r, lim) in limits.iter().enumerate() {
                let Some((room, delta, at_upper)) = *lim else {
                    continue;
                };
                let limit = room / delta;
                let better = match leave {
                    None => limit <= theta,
                    Some((lr, _)) => {
                        let tie = 1e-12 * (1.0 + theta);
                        limit < theta - tie
                            || (limit <= theta + tie && self.basis[r] < self.basis[lr])
                    }
                };
                if better {
                    theta = limit;
                    leave = Some((r, at_upper));
                }
            }
        } else {
            let mut relaxed = self.upper[q];
            for &(room, delta, _) in limits.iter().flatten() {
                relaxed = relaxed.min((room + HARRIS_TOL) / delta);
            }
            let mut best_pivot = 0.0;
            for (r, lim) in limits.iter().enumerate() {
                let Some((room, delta, at_upper)) = *lim else {
                    continue;
                };
                let limit = room / delta;
                if limit <= relaxed && delta > best_pivot {
                    best_pivot = delta;
                    leave = Some((r, at_upper));
                    theta = limit;
                }
            }
            if leave.is_none() {
                theta = self.upper[q];
            }
        }
        if theta.is_infinite() {
            return Ok(Step::Unbounded);
        }
        let degenerate = theta <= 1e-12;

        for r in 0..self.m {
            self.xb[r] -= theta * dir * alpha[r];
        }
        match leave {
            None => {
                // Bound flip of the entering variable.
                self.state[q] = if dir > 0.0 {
                    VarState::AtUpper
                } else {
                    VarState::AtLower
                };
            }
            Some((r, at_upper)) => {
                let out = self.basis[r];
                self.state[out] = if at_upper {
                    VarState::AtUpper
                } else {
                    VarState::AtLower
                };
                let entering_value = if dir > 0.0 {
                    theta
                } else {
                    self.upper[q] - theta
                };
                self.basis[r] = q;
                self.state[q] = VarState::Basic;
                self.xb[r] = entering_value;
                // Eta update of the explicit inverse.
                let m = self.m;
                let piv = alpha[r];
                for k in 0..m {
                    self.binv[r * m + k] /= piv;
                }
                for i in 0..m {
                    if i == r || alpha[i] == 0.0 {
                        continue;
                    }
                    let f = alpha[i];
                    for k in 0..m {
                        self.binv[i * m + k] -= f * self.binv[r * m + k];
                    }
                }
                self.since_refactor += 1;
                if self.since_refactor >= REFACTOR_EVERY {
                    self.refactor()?;
                }
            }
        }
        for r in 0..self.m {
            let j = self.basis[r];
            self.xb[r] = self.xb[r].clamp(0.0, self.upper[j]);
        }
        self.pivots += 1;
        Ok(Step::Pivoted { degenerate })
    }
}

/// Solves an instance to optimality or to relative accuracy `opts.alpha`.
pub fn solve(inst: &LpInstance, opts: SolveOptions) -> Result<LpSolution, LpError> {
    inst.validate()?;
    if !(0.0..1.0).contains(&opts.alpha) {
        return Err(LpError::Malformed(format!(
            "alpha must lie in [0, 1), got {}",
            opts.alpha
        )));
    }
    let n = inst.num_vars();
    let k_eq = inst.eq_matrix.rows();
    let has_iv = inst.interval.is_some();
    let m = k_eq + usize::from(has_iv);
    let n_struct = n + usize::from(has_iv);
    let ncols = n_struct + m;

    // Assemble standard-form rows.
    let mut rows: Vec<Vec<f64>> = (0..k_eq)
        .map(|i| {
            let mut r = inst.eq_matrix.row(i).to_vec();
            if has_iv {
                r.push(0.0);
            }
            r
        })
        .collect();
    let mut rhs = inst.eq_rhs.clone();
    let mut upper: Vec<f64> = inst.upper.clone().unwrap_or_else(|| vec![f64::INFINITY; n]);
    let mut cost: Vec<f64> = inst.objective.clone();
    if let Some(iv) = &inst.interval {
        let mut r = iv.coeffs.clone();
        r.push(-1.0);
        rows.push(r);
        rhs.push(iv.lo);
        upper.push(iv.hi - iv.lo);
        cost.push(0.0);
    }

    // Equilibrate: columns first, then rows, by max magnitude.
    let mut col_scale = vec![1.0; n_struct];
    for (j, cs) in col_scale.iter_mut().enumerate() {
        let mx = rows.iter().fold(0.0f64, |acc, r| acc.max(r[j].abs()));
        if mx > 0.0 {
            *cs = 1.0 / mx;
        }
    }
    for r in rows.iter_mut() {
        for (v, cs) in r.iter_mut().zip(&col_scale) {
            *v *= cs;
        }
    }
    for (i, r) in rows.iter_mut().enumerate() {
        let mx = r.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if mx > 0.0 {
            for v in r.iter_mut() {
                *v /= mx;
            }
            rhs[i] /= mx;
        }
    }
    // Variable x_j = col_scale_j * x'_j.
    for j in 0..n_struct {
        cost[j] *= col_scale[j];
        upper[j] /= col_scale[j];
    }
    let obj_scale = cost.iter().fold(0.0f64, |a, c| a.max(c.abs()));
    let obj_scale = if obj_scale > 0.0 { obj_scale } else { 1.0 };
    for c in cost.iter_mut() {
        *c /= obj_scale;
    }

    let mut cols = vec![0.0; ncols * m];
    for j in 0..n_struct {
        for i in 0..m {
            cols[j * m + i] = rows[i][j];
        }
    }
    let mut binv = vec![0.0; m * m];
    for i in 0..m {
        let sign = if rhs[i] >= 0.0 { 1.0 } else { -1.0 };
        cols[(n_struct + i) * m + i] = sign;
        binv[i * m + i] = sign;
    }
    let mut upper_full = upper.clone();
    upper_full.extend(std::iter::repeat(f64::INFINITY).take(m));
    let mut state = vec![VarState::AtLower; ncols];
    for s in state.iter_mut().skip(n_struct) {
        *s = VarState::Basic;
    }
    let mut phase1_cost = vec![0.0; ncols];
    for c in phase1_cost.iter_mut().skip(n_struct) {
        *c = -1.0;
    }

    let mut sx = Simplex {
        m,
        ncols,
        cols,
        xb: rhs.iter().map(|v| v.abs()).collect(),
        rhs: rhs.clone(),
        upper: upper_full,
        cost: phase1_cost,
        frozen: (0..ncols).map(|j| j >= n_struct).collect(),
        basis: (n_struct..ncols).collect(),
        state,
        binv,
        pivots: 0,
        since_refactor: 0,
    };

    // Phase one.
    let infeas_tol = 1e-9 * (1.0 + rhs.iter().map(|v| v.abs()).sum::<f64>());
    let mut streak = 0;
    loop {
        let infeas: f64 = -sx.objective();
        if infeas <= infeas_tol {
            break;
        }
        if sx.pivots >= opts.pivot_limit {
            return Err(LpError::Infeasible);
        }
        let y = sx.duals();
        match sx.step(streak >= DEGENERATE_STREAK, &y)? {
            Step::Optimal => {
                if -sx.objective() > infeas_tol {
                    return Err(LpError::Infeasible);
                }
                break;
            }
            Step::Unbounded => return Err(LpError::Malformed("phase one unbounded".into())),
            Step::Pivoted { degenerate } => streak = if degenerate { streak + 1 } else { 0 },
        }
    }

    // Phase two: artificials pinned at zero.
    for j in n_struct..ncols {
        sx.upper[j] = 0.0;
        if sx.state[j] != VarState::Basic {
            sx.state[j] = VarState::AtLower;
        }
    }
    for r in 0..m {
        if sx.basis[r] >= n_struct {
            sx.xb[r] = 0.0;
        }
    }
    let mut cost2 = cost.clone();
    cost2.extend(std::iter::repeat(0.0).take(m));
    sx.cost = cost2;
    sx.refactor()?;

    let mut streak = 0;
    let mut bound = f64::INFINITY;
    let status = loop {
        let y = sx.duals();
        let z = sx.objective();
        bound = bound.min(sx.dual_bound(&y));
        if opts.alpha > 0.0 && bound.is_finite() && bound - z <= opts.alpha * bound.abs() {
            break LpStatus::AlphaApproximate(opts.alpha);
        }
        if sx.pivots >= opts.pivot_limit {
            break LpStatus::IterationLimit;
        }
        match sx.step(streak >= DEGENERATE_STREAK, &y)? {
            Step::Optimal => break LpStatus::Optimal,
            Step::Unbounded => return Err(LpError::Unbounded),
            Step::Pivoted { degenerate } => streak = if degenerate { streak + 1 } else { 0 },
        }
    };

    sx.refine(2)?;
    let xs = sx.primal();
    let x: Vec<f64> = (0..n).map(|j| (xs[j] * col_scale[j]).max(0.0)).collect();
    let value = dot(&inst.objective, &x);
    let bound = if status == LpStatus::Optimal {
        value
    } else {
        bound * obj_scale
    };
    Ok(LpSolution {
        x,
        value,
        status,
        bound,
        pivots: sx.pivots,
    })
}

/// `max ⟨g, x⟩` subject to `A x ≤ b` with free `x`.
///
/// Returns the optimal value and a maximizer.
pub fn max_linear_over_polytope(a: &Mat, b: &[f64], g: &[f64]) -> Result<(f64, Vec<f64>), LpError> {
    let (rows, n) = (a.rows(), a.cols());
    if b.len() != rows || g.len() != n {
        return Err(LpError::Malformed("dimension mismatch".into()));
    }
    // x = x⁺ − x⁻, A x⁺ − A x⁻ + s = b.
    let nv = 2 * n + rows;
    let mut e = Mat::zeros(rows, nv);
    for i in 0..rows {
        for j in 0..n {
            e[(i, j)] = a[(i, j)];
            e[(i, n + j)] = -a[(i, j)];
        }
        e[(i, 2 * n + i)] = 1.0;
    }
    let mut c = vec![0.0; nv];
    for j in 0..n {
        c[j] = g[j];
        c[n + j] = -g[j];
    }
    let inst = LpInstance {
        objective: c,
        eq_matrix: e,
        eq_rhs: b.to_vec(),
        interval: None,
        upper: None,
    };
    let sol = solve(&inst, SolveOptions::default())?;
    let x: Vec<f64> = (0..n).map(|j| sol.x[j] - sol.x[n + j]).collect();
    Ok((dot(g, &x), x))
}
