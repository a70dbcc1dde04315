//! Execution protocols, polytope localizers and the accuracy certificates
//! extracted from them.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::geometry::{Domain, GeometryError};
use crate::lp::{IntervalRow, LpError, LpInstance};
use crate::numerics::{axpy, dot, norm2, norm_inf, Mat};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertificateError {
    #[error("cut direction is zero")]
    ZeroVector,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("productive steps must carry a value and nonproductive steps must not")]
    ValueMismatch,
    #[error("no certificate yet: productive mass {0:e} is not positive")]
    DegenerateCertificate(f64),
    #[error("infeasible certificate multipliers: {0}")]
    InfeasibleLambda(String),
    #[error("localizer has no rows")]
    EmptyLocalizer,
    #[error("certificate references unknown step {0}")]
    UnknownStep(usize),
    #[error("center is not strictly inside the localizer (row {row} has slack {slack:e})")]
    CenterNotInterior { row: usize, slack: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Lp(#[from] LpError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StepKind {
    Productive,
    Nonproductive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    /// 1-based step index.
    pub index: usize,
    pub point: Vec<f64>,
    pub direction: Vec<f64>,
    pub kind: StepKind,
    pub value: Option<f64>,
    pub payload: Option<Vec<f64>>,
}

/// The record `{(x_t, e_t)}` of a cutting-plane run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionProtocol {
    dim: usize,
    steps: Vec<Step>,
}

impl ExecutionProtocol {
    pub fn new(dim: usize) -> Self {
        ExecutionProtocol {
            dim,
            steps: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Appends a step and returns its 1-based index.
    pub fn record_step(
        &mut self,
        point: Vec<f64>,
        direction: Vec<f64>,
        kind: StepKind,
        value: Option<f64>,
        payload: Option<Vec<f64>>,
    ) -> Result<usize, CertificateError> {
        for v in [&point, &direction] {
            if v.len() != self.dim {
                return Err(CertificateError::DimensionMismatch {
                    expected: self.dim,
                    got: v.len(),
                });
            }
        }
        if direction.iter().all(|v| *v == 0.0) {
            return Err(CertificateError::ZeroVector);
        }
        if value.is_some() != (kind == StepKind::Productive) {
            return Err(CertificateError::ValueMismatch);
        }
        let index = self.steps.len() + 1;
        self.steps.push(Step {
            index,
            point,
            direction,
            kind,
            value,
            payload,
        });
        Ok(index)
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    /// Step `t`, 1-based.
    pub fn step(&self, t: usize) -> Option<&Step> {
        t.checked_sub(1).and_then(|i| self.steps.get(i))
    }

    /// `I_τ`.
    pub fn productive(&self) -> impl Iterator<Item = &Step> {
        self.steps.iter().filter(|s| s.kind == StepKind::Productive)
    }

    /// `J_τ`.
    pub fn nonproductive(&self) -> impl Iterator<Item = &Step> {
        self.steps
            .iter()
            .filter(|s| s.kind == StepKind::Nonproductive)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RowOrigin {
    Initial,
    Productive(usize),
    Nonproductive(usize),
}

impl RowOrigin {
    pub fn step(&self) -> Option<usize> {
        match self {
            RowOrigin::Initial => None,
            RowOrigin::Productive(t) | RowOrigin::Nonproductive(t) => Some(*t),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub a: Vec<f64>,
    pub b: f64,
    pub origin: RowOrigin,
}

/// `{x : aᵢᵀx ≤ bᵢ}` with each row tagged by the step that created it.
#[derive(Debug, Clone, PartialEq)]
pub struct PolytopeLocalizer {
    dim: usize,
    rows: Vec<Row>,
}

impl PolytopeLocalizer {
    pub fn new(dim: usize) -> Self {
        PolytopeLocalizer {
            dim,
            rows: Vec::new(),
        }
    }

    /// The box `lower ≤ x ≤ upper` as `2n` initial rows, `+eᵢ` then `−eᵢ`
    /// for each coordinate.
    pub fn from_box(lower: &[f64], upper: &[f64]) -> Self {
        let n = lower.len();
        let mut loc = PolytopeLocalizer::new(n);
        for i in 0..n {
            let mut a = vec![0.0; n];
            a[i] = 1.0;
            loc.rows.push(Row {
                a: a.clone(),
                b: upper[i],
                origin: RowOrigin::Initial,
            });
            a[i] = -1.0;
            loc.rows.push(Row {
                a,
                b: -lower[i],
                origin: RowOrigin::Initial,
            });
        }
        loc
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push(&mut self, row: Row) -> Result<(), CertificateError> {
        if row.a.len() != self.dim {
            return Err(CertificateError::DimensionMismatch {
                expected: self.dim,
                got: row.a.len(),
            });
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn remove(&mut self, i: usize) -> Row {
        self.rows.remove(i)
    }

    pub fn matrix(&self) -> Mat {
        let mut m = Mat::zeros(self.rows.len(), self.dim);
        for (i, r) in self.rows.iter().enumerate() {
            m.row_mut(i).copy_from_slice(&r.a);
        }
        m
    }

    pub fn rhs(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.b).collect()
    }

    /// `b − Ax`.
    pub fn slacks(&self, x: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.b - dot(&r.a, x)).collect()
    }

    /// `Ax ≤ b + tol` componentwise.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.slacks(x).iter().all(|s| *s >= -tol)
    }
}

/// `max Σ_{i∈𝒫} λᵢ‖aᵢ‖ s.t. λ ≥ 0, Aᵀλ = 0, 0 ≤ bᵀλ ≤ 2`, one variable per
/// localizer row in row order.
pub fn build_certificate_lp(loc: &PolytopeLocalizer) -> Result<LpInstance, CertificateError> {
    if loc.is_empty() {
        return Err(CertificateError::EmptyLocalizer);
    }
    Ok(LpInstance {
        objective: objective(loc),
        eq_matrix: loc.matrix().transpose(),
        eq_rhs: vec![0.0; loc.dim()],
        interval: Some(IntervalRow {
            coeffs: loc.rhs(),
            lo: 0.0,
            hi: 2.0,
        }),
        upper: None,
    })
}

/// The same LP written around a strictly interior point `c`.
///
/// On `Aᵀλ = 0` the value `bᵀλ` equals `(b − Ac)ᵀλ`, and every coefficient
/// of the latter is positive, so `λᵢ ≤ 2/(bᵢ − aᵢᵀc)` is implied. Stating
/// those bounds explicitly makes the feasible region visibly bounded, which
/// gives the simplex a finite dual bound from the first pivot.
pub fn build_centered_certificate_lp(
    loc: &PolytopeLocalizer,
    center: &[f64],
) -> Result<LpInstance, CertificateError> {
    if loc.is_empty() {
        return Err(CertificateError::EmptyLocalizer);
    }
    let slacks = loc.slacks(center);
    if let Some((row, &slack)) = slacks.iter().enumerate().find(|(_, s)| !(**s > 0.0)) {
        return Err(CertificateError::CenterNotInterior { row, slack });
    }
    Ok(LpInstance {
        objective: objective(loc),
        eq_matrix: loc.matrix().transpose(),
        eq_rhs: vec![0.0; loc.dim()],
        upper: Some(slacks.iter().map(|s| 2.0 / s).collect()),
        interval: Some(IntervalRow {
            coeffs: slacks,
            lo: 0.0,
            hi: 2.0,
        }),
    })
}

fn objective(loc: &PolytopeLocalizer) -> Vec<f64> {
    loc.rows()
        .iter()
        .map(|r| match r.origin {
            RowOrigin::Productive(_) => norm2(&r.a),
            _ => 0.0,
        })
        .collect()
}

/// Cleans up an approximate solution of the centered certificate LP.
///
/// The equality residual `r = Aᵀλ` is moved onto the initial box rows
/// (`±eⱼ`), and `λ` is then scaled down if needed so that
/// `(b − Ac)ᵀλ ≤ 2`. Neither step changes the weights of cut rows relative
/// to each other, so the resulting certificate `ξ` is the same. What it fixes
/// is `d_τ`: the residual bounds derived from `d_τ` assume `Aᵀλ = 0`
/// exactly, and an LP solution at tolerance `1e-9` can miss that by more
/// than the bounds themselves once `d_τ` is large.
///
/// Returns `lambda` clamped at zero and otherwise unchanged when the
/// localizer lacks a complete set of initial box rows.
pub fn repair_multipliers(lambda: &[f64], loc: &PolytopeLocalizer, center: &[f64]) -> Vec<f64> {
    let mut lam: Vec<f64> = lambda.iter().map(|v| v.max(0.0)).collect();
    let n = loc.dim();
    let mut plus = vec![None; n];
    let mut minus = vec![None; n];
    for (i, r) in loc.rows().iter().enumerate() {
        if r.origin != RowOrigin::Initial {
            continue;
        }
        let nz: Vec<usize> = (0..n).filter(|&j| r.a[j] != 0.0).collect();
        if let [j] = nz[..] {
            if r.a[j] > 0.0 {
                plus[j] = Some(i);
            } else {
                minus[j] = Some(i);
            }
        }
    }
    if plus.iter().chain(&minus).any(|v| v.is_none()) || lam.len() != loc.len() {
        return lam;
    }
    let mut residual = vec![0.0; n];
    for (r, l) in loc.rows().iter().zip(&lam) {
        axpy(*l, &r.a, &mut residual);
    }
    for j in 0..n {
        // Cancel r_j with the +eⱼ row when r_j < 0, with the −eⱼ row otherwise.
        let (i, coef) = if residual[j] < 0.0 {
            (plus[j].unwrap(), loc.rows()[plus[j].unwrap()].a[j])
        } else {
            (minus[j].unwrap(), loc.rows()[minus[j].unwrap()].a[j])
        };
        lam[i] += -residual[j] / coef;
    }
    let slacks = loc.slacks(center);
    let total: f64 = slacks.iter().zip(&lam).map(|(s, l)| s * l).sum();
    if total > 2.0 {
        lam.iter_mut().for_each(|l| *l *= 2.0 / total);
    }
    lam
}

/// Step weights `ξ` derived from LP multipliers.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    weights: BTreeMap<usize, f64>,
    lambda: Vec<f64>,
    productive_mass: f64,
    objective: f64,
    equality_residual: f64,
}

impl Certificate {
    /// `ξ_t`, keyed by 1-based step index; absent steps have weight 0.
    pub fn weights(&self) -> &BTreeMap<usize, f64> {
        &self.weights
    }

    pub fn weight(&self, t: usize) -> f64 {
        self.weights.get(&t).copied().unwrap_or(0.0)
    }

    /// The multipliers after clamping tiny negatives to zero.
    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    /// `d_τ = Σ_{i∈𝒫} λᵢ`.
    pub fn d_tau(&self) -> f64 {
        self.productive_mass
    }

    /// `D_τ = Σ_{i∈𝒫} λᵢ‖aᵢ‖`.
    pub fn big_d_tau(&self) -> f64 {
        self.objective
    }

    /// `‖Aᵀλ‖∞` of the accepted multipliers.
    pub fn equality_residual(&self) -> f64 {
        self.equality_residual
    }
}

/// Accepts approximately feasible multipliers and normalizes them into step
/// weights `ξ_{t(i)} = λᵢ / d_τ`.
///
/// Tolerances: `λᵢ ≥ −1e-10` (then clamped to 0),
/// `‖Aᵀλ‖∞ ≤ 1e-8·(1 + ‖λ‖₁·maxᵢ‖aᵢ‖)` and `bᵀλ ∈ [−τ, 2 + τ]` with
/// `τ = 1e-8·(1 + Σ|bᵢ|λᵢ)`.
pub fn certificate_from_lambda(
    lambda: &[f64],
    loc: &PolytopeLocalizer,
) -> Result<Certificate, CertificateError> {
    if lambda.len() != loc.len() {
        return Err(CertificateError::DimensionMismatch {
            expected: loc.len(),
            got: lambda.len(),
        });
    }
    if let Some((i, v)) = lambda.iter().enumerate().find(|(_, v)| !(**v >= -1e-10)) {
        return Err(CertificateError::InfeasibleLambda(format!(
            "λ[{i}] = {v:e}"
        )));
    }
    let lambda: Vec<f64> = lambda.iter().map(|v| v.max(0.0)).collect();
    let rows = loc.rows();

    let mut aggregate = vec![0.0; loc.dim()];
    for (r, l) in rows.iter().zip(&lambda) {
        aggregate
            .iter_mut()
            .zip(&r.a)
            .for_each(|(s, a)| *s += l * a);
    }
    let equality_residual = norm_inf(&aggregate);
    let l1: f64 = lambda.iter().sum();
    let amax = rows.iter().map(|r| norm2(&r.a)).fold(0.0, f64::max);
    if equality_residual > 1e-8 * (1.0 + l1 * amax) {
        return Err(CertificateError::InfeasibleLambda(format!(
            "‖Aᵀλ‖∞ = {equality_residual:e}"
        )));
    }
    let bl: f64 = rows.iter().zip(&lambda).map(|(r, l)| r.b * l).sum();
    let scale: f64 = rows.iter().zip(&lambda).map(|(r, l)| r.b.abs() * l).sum();
    let tol = 1e-8 * (1.0 + scale);
    if bl < -tol || bl > 2.0 + tol {
        return Err(CertificateError::InfeasibleLambda(format!(
            "bᵀλ = {bl} outside [0, 2]"
        )));
    }

    let mut d = 0.0;
    let mut big_d = 0.0;
    for (r, l) in rows.iter().zip(&lambda) {
        if let RowOrigin::Productive(_) = r.origin {
            d += l;
            big_d += l * norm2(&r.a);
        }
    }
    if !(d > 1e-12) {
        return Err(CertificateError::DegenerateCertificate(d));
    }
    let mut weights = BTreeMap::new();
    for (r, l) in rows.iter().zip(&lambda) {
        if let Some(t) = r.origin.step() {
            if *l > 0.0 {
                *weights.entry(t).or_insert(0.0) += l / d;
            }
        }
    }
    Ok(Certificate {
        weights,
        lambda,
        productive_mass: d,
        objective: big_d,
        equality_residual,
    })
}

fn step_of(protocol: &ExecutionProtocol, t: usize) -> Result<&Step, CertificateError> {
    protocol.step(t).ok_or(CertificateError::UnknownStep(t))
}

/// `Σ ξ_t⟨e_t, x_t⟩ + max_{x∈B} ⟨−Σ ξ_t e_t, x⟩ = max_{x∈B} Σ ξ_t⟨e_t, x_t − x⟩`.
///
/// Meaningful when `B ⊇ X`.
pub fn residual(
    cert: &Certificate,
    protocol: &ExecutionProtocol,
    b: &Domain,
) -> Result<f64, CertificateError> {
    let mut aggregate = vec![0.0; protocol.dim()];
    let mut linear = 0.0;
    for (&t, &w) in cert.weights() {
        let s = step_of(protocol, t)?;
        linear += w * dot(&s.direction, &s.point);
        aggregate
            .iter_mut()
            .zip(&s.direction)
            .for_each(|(g, e)| *g -= w * e);
    }
    Ok(linear + b.support(&aggregate)?.value)
}

/// `x^τ[ξ] = Σ_{t∈I_τ} ξ_t x_t`.
pub fn induced_solution(
    cert: &Certificate,
    protocol: &ExecutionProtocol,
) -> Result<Vec<f64>, CertificateError> {
    let mut x = vec![0.0; protocol.dim()];
    for (&t, &w) in cert.weights() {
        let s = step_of(protocol, t)?;
        if s.kind == StepKind::Productive {
            x.iter_mut().zip(&s.point).for_each(|(xi, p)| *xi += w * p);
        }
    }
    Ok(x)
}

/// `Σ_{t∈I_τ} ξ_t‖e_t‖₂`; times `d_τ` this reproduces `D_τ`.
pub fn weighted_productive_norm(
    cert: &Certificate,
    protocol: &ExecutionProtocol,
) -> Result<f64, CertificateError> {
    let mut s = 0.0;
    for (&t, &w) in cert.weights() {
        let step = step_of(protocol, t)?;
        if step.kind == StepKind::Productive {
            s += w * norm2(&step.direction);
        }
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub d_tau: f64,
    pub big_d_tau: f64,
    /// `2 / D_τ`.
    pub eps_tau: f64,
    /// Residual over the `B` passed to [`diagnostics`].
    pub eps_cert: f64,
    pub two_over_d: f64,
    /// `max_{t∈I_τ} max_{x∈X} ⟨e_t, x − x_t⟩`.
    pub w_tau: f64,
    /// Inscribed-radius lower bound used for the small-residual bound.
    pub r_hat: f64,
    /// `ε_τ W_τ / (r̂ − ε_τ)`, present when `ε_τ < r̂`.
    pub radius_bound: Option<f64>,
}

pub fn diagnostics(
    cert: &Certificate,
    protocol: &ExecutionProtocol,
    x: &Domain,
    b: &Domain,
) -> Result<Diagnostics, CertificateError> {
    let eps_cert = residual(cert, protocol, b)?;
    let mut w_tau = f64::NEG_INFINITY;
    for s in protocol.productive() {
        let sup = x.support(&s.direction)?.value;
        w_tau = w_tau.max(sup - dot(&s.direction, &s.point));
    }
    let r_hat = x.inscribed_radius()?;
    let big_d = cert.big_d_tau();
    let eps_tau = 2.0 / big_d;
    let radius_bound = (eps_tau < r_hat).then(|| eps_tau * w_tau / (r_hat - eps_tau));
    Ok(Diagnostics {
        d_tau: cert.d_tau(),
        big_d_tau: big_d,
        eps_tau,
        eps_cert,
        two_over_d: 2.0 / cert.d_tau(),
        w_tau,
        r_hat,
        radius_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{solve, SolveOptions};

    /// Rows `x ≤ 1`, `−x ≤ 1` and the productive cut `x ≤ 0` from step 1 at
    /// `x₁ = 0` with `e₁ = 1`.
    fn one_d() -> (PolytopeLocalizer, ExecutionProtocol) {
        let mut loc = PolytopeLocalizer::new(1);
        loc.push(Row {
            a: vec![1.0],
            b: 1.0,
            origin: RowOrigin::Initial,
        })
        .unwrap();
        loc.push(Row {
            a: vec![-1.0],
            b: 1.0,
            origin: RowOrigin::Initial,
        })
        .unwrap();
        loc.push(Row {
            a: vec![1.0],
            b: 0.0,
            origin: RowOrigin::Productive(1),
        })
        .unwrap();
        let mut p = ExecutionProtocol::new(1);
        p.record_step(vec![0.0], vec![1.0], StepKind::Productive, Some(0.0), None)
            .unwrap();
        (loc, p)
    }

    #[test]
    fn protocol_recording() {
        let mut p = ExecutionProtocol::new(2);
        assert_eq!(
            p.record_step(
                vec![0.0; 2],
                vec![1.0, 0.0],
                StepKind::Productive,
                Some(1.0),
                None
            ),
            Ok(1)
        );
        assert_eq!(p.productive().map(|s| s.index).collect::<Vec<_>>(), vec![1]);
        assert_eq!(p.nonproductive().count(), 0);
        assert_eq!(
            p.record_step(
                vec![0.0; 2],
                vec![0.0, 1.0],
                StepKind::Nonproductive,
                None,
                None
            ),
            Ok(2)
        );
        assert_eq!(
            p.nonproductive().map(|s| s.index).collect::<Vec<_>>(),
            vec![2]
        );
        assert_eq!(
            p.record_step(
                vec![0.0; 2],
                vec![0.0, 0.0],
                StepKind::Productive,
                Some(0.0),
                None
            ),
            Err(CertificateError::ZeroVector)
        );
        assert_eq!(
            p.record_step(
                vec![0.0; 2],
                vec![1.0, 0.0],
                StepKind::Nonproductive,
                Some(0.0),
                None
            ),
            Err(CertificateError::ValueMismatch)
        );
        assert_eq!(p.len(), 2);
    }

    #[test]
    fn lp_construction() {
        let (loc, _) = one_d();
        let lp = build_certificate_lp(&loc).unwrap();
        assert_eq!(lp.objective, vec![0.0, 0.0, 1.0]);
        assert_eq!(lp.eq_matrix.row(0), &[1.0, -1.0, 1.0]);
        assert_eq!(lp.interval.as_ref().unwrap().coeffs, vec![1.0, 1.0, 0.0]);
        let mut no_prod = PolytopeLocalizer::from_box(&[-1.0, -1.0], &[1.0, 1.0]);
        assert!(build_certificate_lp(&no_prod)
            .unwrap()
            .objective
            .iter()
            .all(|c| *c == 0.0));
        no_prod
            .push(Row {
                a: vec![3.0, 4.0],
                b: 0.0,
                origin: RowOrigin::Productive(1),
            })
            .unwrap();
        assert_eq!(build_certificate_lp(&no_prod).unwrap().objective[4], 5.0);
        assert_eq!(
            build_certificate_lp(&PolytopeLocalizer::new(1)),
            Err(CertificateError::EmptyLocalizer)
        );
    }

    #[test]
    fn one_d_certificate_walkthrough() {
        let (loc, p) = one_d();
        let sol = solve(
            &build_certificate_lp(&loc).unwrap(),
            SolveOptions::default(),
        )
        .unwrap();
        assert!((sol.value - 2.0).abs() < 1e-12);
        let cert = certificate_from_lambda(&[0.0, 2.0, 2.0], &loc).unwrap();
        assert_eq!(cert.d_tau(), 2.0);
        assert_eq!(cert.big_d_tau(), 2.0);
        assert_eq!(
            cert.weights()
                .iter()
                .map(|(k, v)| (*k, *v))
                .collect::<Vec<_>>(),
            vec![(1, 1.0)]
        );
        let x = Domain::boxed(vec![-1.0], vec![1.0]).unwrap();
        assert_eq!(residual(&cert, &p, &x).unwrap(), 1.0);
        assert_eq!(induced_solution(&cert, &p).unwrap(), vec![0.0]);
        let diag = diagnostics(&cert, &p, &x, &x).unwrap();
        assert_eq!(diag.eps_tau, 1.0);
        assert_eq!(diag.two_over_d, 1.0);
        assert_eq!(diag.eps_cert, 1.0);
        assert_eq!(diag.w_tau, 1.0);
        assert!(diag.radius_bound.is_none());
    }

    #[test]
    fn centered_lp_has_same_optimum() {
        let (loc, _) = one_d();
        let lp = build_centered_certificate_lp(&loc, &[-0.5]).unwrap();
        assert_eq!(
            lp.upper.as_ref().unwrap(),
            &vec![2.0 / 1.5, 2.0 / 0.5, 2.0 / 0.5]
        );
        let sol = solve(&lp, SolveOptions::default()).unwrap();
        assert!((sol.value - 2.0).abs() < 1e-12);
        assert!(matches!(
            build_centered_certificate_lp(&loc, &[0.0]),
            Err(CertificateError::CenterNotInterior { row: 2, .. })
        ));
    }

    #[test]
    fn lambda_validation() {
        let (loc, _) = one_d();
        assert!(matches!(
            certificate_from_lambda(&[0.0; 3], &loc),
            Err(CertificateError::DegenerateCertificate(_))
        ));
        assert!(matches!(
            certificate_from_lambda(&[0.0, 2.0, 1.0], &loc),
            Err(CertificateError::InfeasibleLambda(_))
        ));
        assert!(matches!(
            certificate_from_lambda(&[0.0, 3.0, 3.0], &loc),
            Err(CertificateError::InfeasibleLambda(_))
        ));
        assert!(matches!(
            certificate_from_lambda(&[-1.0, 2.0, 2.0], &loc),
            Err(CertificateError::InfeasibleLambda(_))
        ));
        // Tiny negatives are clamped.
        let c = certificate_from_lambda(&[-1e-11, 2.0, 2.0], &loc).unwrap();
        assert_eq!(c.lambda()[0], 0.0);
    }

    #[test]
    fn nonproductive_weight_is_outside_normalization() {
        // Box [−1, 1], productive cut x ≤ 0 (step 1) and nonproductive cut
        // −x ≤ 0.5 (step 2, from a query at −0.5).
        let mut loc = PolytopeLocalizer::from_box(&[-1.0], &[1.0]);
        loc.push(Row {
            a: vec![1.0],
            b: 0.0,
            origin: RowOrigin::Productive(1),
        })
        .unwrap();
        loc.push(Row {
            a: vec![-1.0],
            b: 0.5,
            origin: RowOrigin::Nonproductive(2),
        })
        .unwrap();
        let mut p = ExecutionProtocol::new(1);
        p.record_step(vec![0.0], vec![1.0], StepKind::Productive, Some(0.0), None)
            .unwrap();
        p.record_step(vec![-0.5], vec![-1.0], StepKind::Nonproductive, None, None)
            .unwrap();
        let cert = certificate_from_lambda(&[0.0, 0.0, 2.0, 2.0], &loc).unwrap();
        assert_eq!(cert.weight(1), 1.0);
        assert_eq!(cert.weight(2), 1.0);
        let total_productive: f64 = p.productive().map(|s| cert.weight(s.index)).sum();
        assert_eq!(total_productive, 1.0);
        assert_eq!(induced_solution(&cert, &p).unwrap(), vec![0.0]);
    }

    #[test]
    fn residual_special_cases() {
        let mut p = ExecutionProtocol::new(2);
        p.record_step(
            vec![1.0, 2.0],
            vec![3.0, 4.0],
            StepKind::Productive,
            Some(0.0),
            None,
        )
        .unwrap();
        let cert = Certificate {
            weights: BTreeMap::from([(1, 1.0)]),
            lambda: vec![],
            productive_mass: 1.0,
            objective: 5.0,
            equality_residual: 0.0,
        };
        let ball = Domain::ball(vec![1.0, 2.0], 0.5).unwrap();
        assert!((residual(&cert, &p, &ball).unwrap() - 2.5).abs() < 1e-14);

        // Opposite cuts with equal weight: aggregated direction is zero.
        let mut p = ExecutionProtocol::new(1);
        p.record_step(vec![0.5], vec![1.0], StepKind::Productive, Some(0.0), None)
            .unwrap();
        p.record_step(
            vec![-0.25],
            vec![-1.0],
            StepKind::Productive,
            Some(0.0),
            None,
        )
        .unwrap();
        let cert = Certificate {
            weights: BTreeMap::from([(1, 0.5), (2, 0.5)]),
            lambda: vec![],
            productive_mass: 1.0,
            objective: 1.0,
            equality_residual: 0.0,
        };
        let bx = Domain::boxed(vec![-1.0], vec![1.0]).unwrap();
        assert!((residual(&cert, &p, &bx).unwrap() - 0.375).abs() < 1e-15);
        assert_eq!(induced_solution(&cert, &p).unwrap(), vec![0.125]);
    }
}
