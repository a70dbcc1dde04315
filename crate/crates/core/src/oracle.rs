//! First-order δ-oracles: the regularized max benchmark and the Lagrange dual
//! oracle built on an inner solver.

use thiserror::Error;

use crate::geometry::{Domain, GeometryError};
use crate::numerics::{dot, Cholesky, Mat};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("inner solver failed: {0}")]
    InnerSolverFailure(String),
    #[error("inner solver hit its iteration limit ({iterations}) with gap {gap:e} > {target:e}")]
    IterationLimit {
        iterations: usize,
        gap: f64,
        target: f64,
    },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid problem: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleOutput {
    /// `F̃(x)` with `|F̃(x) − F(x)| ≤ δ`.
    pub value: f64,
    /// A δ-subgradient: `F(y) ≥ F(x) + ⟨g, y − x⟩ − δ` for all `y`.
    pub subgradient: Vec<f64>,
    /// Inner minimizer `u_x` for dual oracles.
    pub payload: Option<Vec<f64>>,
}

/// A first-order oracle with declared accuracy `δ`.
///
/// Oracles are stateless maps and must be safe to share across threads.
pub trait DeltaOracle: Sync {
    fn dim(&self) -> usize;
    fn delta(&self) -> f64;
    fn query(&self, x: &[f64]) -> Result<OracleOutput, OracleError>;
}

/// `F(x) = maxᵢ xᵢ + (μ/2)‖x‖²`, queried exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxPlusQuadratic {
    dim: usize,
    mu: f64,
}

impl MaxPlusQuadratic {
    pub fn new(dim: usize, mu: f64) -> Result<Self, OracleError> {
        if dim == 0 || !(mu > 0.0 && mu.is_finite()) {
            return Err(OracleError::Invalid(format!(
                "need n ≥ 1 and μ > 0, got n={dim}, μ={mu}"
            )));
        }
        Ok(MaxPlusQuadratic { dim, mu })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        max + 0.5 * self.mu * dot(x, x)
    }

    /// `x_* = −(1/(μn))·1`.
    pub fn minimizer(&self) -> Vec<f64> {
        vec![-1.0 / (self.mu * self.dim as f64); self.dim]
    }

    /// `−1/(2μn)`.
    pub fn optimal_value(&self) -> f64 {
        -1.0 / (2.0 * self.mu * self.dim as f64)
    }
}

impl DeltaOracle for MaxPlusQuadratic {
    fn dim(&self) -> usize {
        self.dim
    }

    fn delta(&self) -> f64 {
        0.0
    }

    fn query(&self, x: &[f64]) -> Result<OracleOutput, OracleError> {
        if x.len() != self.dim {
            return Err(OracleError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        // First index attaining the max.
        let mut istar = 0;
        for (i, v) in x.iter().enumerate() {
            if *v > x[istar] {
                istar = i;
            }
        }
        let mut subgradient: Vec<f64> = x.iter().map(|v| self.mu * v).collect();
        subgradient[istar] += 1.0;
        Ok(OracleOutput {
            value: self.value(x),
            subgradient,
            payload: None,
        })
    }
}

/// `min f(u) s.t. g(u) ≤ 0, u ∈ U` seen through its Lagrangian
/// `φ(u, x) = f(u) + ⟨x, g(u)⟩`.
pub trait Lagrangian: Sync {
    fn primal_dim(&self) -> usize;
    fn constraint_count(&self) -> usize;
    fn objective(&self, u: &[f64]) -> f64;
    fn constraints(&self, u: &[f64]) -> Vec<f64>;

    /// A point `u_x ∈ U` with `φ(u_x, x) − min_U φ(·, x) ≤ delta`.
    fn inner_minimize(&self, x: &[f64], delta: f64) -> Result<Vec<f64>, OracleError>;

    fn lagrangian(&self, u: &[f64], x: &[f64]) -> f64 {
        self.objective(u) + dot(x, &self.constraints(u))
    }
}

/// The dual function `F(x) = −min_U φ(·, x)` to be minimized over
/// `X = {x ≥ 0 : ‖x‖_p ≤ L + 1}`, where `L ≥ ‖x_*‖_p`.
#[derive(Debug, Clone)]
pub struct DualProblem<P> {
    problem: P,
    delta: f64,
    p: f64,
    bound: f64,
}

impl<P: Lagrangian> DualProblem<P> {
    pub fn new(problem: P, delta: f64, p: f64, bound: f64) -> Result<Self, OracleError> {
        if !(delta >= 0.0) || !(p >= 1.0) || !(bound > 0.0 && bound.is_finite()) {
            return Err(OracleError::Invalid(format!(
                "need δ ≥ 0, p ≥ 1, L > 0 (got {delta}, {p}, {bound})"
            )));
        }
        Ok(DualProblem {
            problem,
            delta,
            p,
            bound,
        })
    }

    pub fn problem(&self) -> &P {
        &self.problem
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// `{x ≥ 0 : ‖x‖_p ≤ L + 1}`.
    pub fn domain(&self) -> Result<Domain, GeometryError> {
        Domain::nonneg_p_cap(self.problem.constraint_count(), self.p, self.bound + 1.0)
    }
}

impl<P: Lagrangian> DeltaOracle for DualProblem<P> {
    fn dim(&self) -> usize {
        self.problem.constraint_count()
    }

    fn delta(&self) -> f64 {
        self.delta
    }

    fn query(&self, x: &[f64]) -> Result<OracleOutput, OracleError> {
        if x.len() != self.dim() {
            return Err(OracleError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let u = self.problem.inner_minimize(x, self.delta)?;
        let g = self.problem.constraints(&u);
        let value = -(self.problem.objective(&u) + dot(x, &g));
        if !value.is_finite() || g.iter().any(|v| !v.is_finite()) {
            return Err(OracleError::InnerSolverFailure(
                "non-finite inner solution".into(),
            ));
        }
        Ok(OracleOutput {
            value,
            subgradient: g.iter().map(|v| -v).collect(),
            payload: Some(u),
        })
    }
}

/// `½uᵀQu + qᵀu + c` over a box; all bounds finite, or all infinite for the
/// unconstrained case.
#[derive(Debug, Clone)]
pub struct BoxQp {
    pub hessian: Mat,
    pub linear: Vec<f64>,
    pub constant: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

pub const INNER_MAX_ITERATIONS: usize = 200_000;

impl BoxQp {
    pub fn value(&self, u: &[f64]) -> f64 {
        0.5 * dot(u, &self.hessian.mul_vec(u)) + dot(&self.linear, u) + self.constant
    }

    fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let mut g = self.hessian.mul_vec(u);
        g.iter_mut()
            .zip(&self.linear)
            .for_each(|(gi, li)| *gi += li);
        g
    }

    /// Frank–Wolfe gap `max_{v ∈ U} ⟨∇, u − v⟩`, an upper bound on the
    /// suboptimality of `u` for a convex objective.
    pub fn gap(&self, u: &[f64]) -> f64 {
        let g = self.gradient(u);
        (0..u.len())
            .map(|i| g[i] * u[i] - (g[i] * self.lower[i]).min(g[i] * self.upper[i]))
            .sum()
    }

    /// Projected gradient with step `1/L` (`L` a Gershgorin bound on the
    /// Hessian) until the Frank–Wolfe gap drops to `delta`.
    ///
    /// With `delta = 0` the target is floating-point resolution of the
    /// objective.
    pub fn solve(&self, delta: f64) -> Result<Vec<f64>, OracleError> {
        let n = self.linear.len();
        if self.hessian.rows() != n
            || self.hessian.cols() != n
            || self.lower.len() != n
            || self.upper.len() != n
        {
            return Err(OracleError::Invalid("box QP dimensions".into()));
        }
        let finite = self
            .lower
            .iter()
            .chain(&self.upper)
            .filter(|v| v.is_finite())
            .count();
        if finite == 0 {
            let chol = Cholesky::new(&self.hessian)
                .map_err(|e| OracleError::InnerSolverFailure(e.to_string()))?;
            let neg: Vec<f64> = self.linear.iter().map(|v| -v).collect();
            return Ok(chol.solve(&neg));
        }
        if finite != 2 * n {
            return Err(OracleError::Invalid(
                "box must be fully bounded or fully unbounded".into(),
            ));
        }
        if self.lower.iter().zip(&self.upper).any(|(l, u)| l > u) {
            return Err(OracleError::Invalid("empty box".into()));
        }
        let lip = (0..n)
            .map(|i| self.hessian.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        let clamp = |v: f64, i: usize| v.max(self.lower[i]).min(self.upper[i]);
        let mut u: Vec<f64> = (0..n).map(|i| clamp(0.0, i)).collect();
        let mut gap = f64::INFINITY;
        for _ in 0..INNER_MAX_ITERATIONS {
            let target = delta.max(1e-13 * (1.0 + self.value(&u).abs()));
            gap = self.gap(&u);
            if gap <= target {
                return Ok(u);
            }
            let g = self.gradient(&u);
            for i in 0..n {
                u[i] = clamp(u[i] - g[i] / lip, i);
            }
        }
        Err(OracleError::IterationLimit {
            iterations: INNER_MAX_ITERATIONS,
            gap,
            target: delta,
        })
    }
}

/// `f(u) = ½‖u − u₀‖²`, `g(u) = Cu − d`, `u` in a box (or unconstrained when
/// every bound is infinite).
#[derive(Debug, Clone)]
pub struct QuadraticDual {
    pub u0: Vec<f64>,
    pub c: Mat,
    pub d: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl QuadraticDual {
    /// The inner problem `min_U φ(·, x)` as a box QP.
    pub fn inner_qp(&self, x: &[f64]) -> BoxQp {
        let n = self.u0.len();
        let ctx = self.c.tr_mul_vec(x);
        BoxQp {
            hessian: Mat::identity(n),
            linear: (0..n).map(|i| ctx[i] - self.u0[i]).collect(),
            constant: 0.5 * dot(&self.u0, &self.u0) - dot(x, &self.d),
            lower: self.lower.clone(),
            upper: self.upper.clone(),
        }
    }
}

impl Lagrangian for QuadraticDual {
    fn primal_dim(&self) -> usize {
        self.u0.len()
    }

    fn constraint_count(&self) -> usize {
        self.d.len()
    }

    fn objective(&self, u: &[f64]) -> f64 {
        0.5 * u
            .iter()
            .zip(&self.u0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
    }

    fn constraints(&self, u: &[f64]) -> Vec<f64> {
        let mut g = self.c.mul_vec(u);
        g.iter_mut().zip(&self.d).for_each(|(gi, di)| *gi -= di);
        g
    }

    fn inner_minimize(&self, x: &[f64], delta: f64) -> Result<Vec<f64>, OracleError> {
        self.inner_qp(x).solve(delta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::sub;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn benchmark_examples() {
        let f = MaxPlusQuadratic::new(3, 0.1).unwrap();
        let out = f.query(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(out.value, 0.0);
        assert_eq!(out.subgradient, vec![1.0, 0.0, 0.0]);
        let out = f.query(&[1.0, 2.0, 2.0]).unwrap();
        assert!((out.value - 2.45).abs() < 1e-15);
        let expect = [0.1, 1.2, 0.2];
        assert!(out
            .subgradient
            .iter()
            .zip(expect)
            .all(|(a, b)| (a - b).abs() < 1e-15));
        let xs = f.minimizer();
        assert!((f.query(&xs).unwrap().value - f.optimal_value()).abs() < 1e-15);
        assert!((f.optimal_value() + 1.0 / 0.6).abs() < 1e-15);
        assert!(MaxPlusQuadratic::new(3, 0.0).is_err());
        assert!(f.query(&[0.0]).is_err());
    }

    proptest! {
        #[test]
        fn benchmark_subgradient_inequality(
            x in proptest::collection::vec(-5.0f64..5.0, 4),
            ys in proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, 4), 100),
            mu in 0.01f64..1.0,
        ) {
            let f = MaxPlusQuadratic::new(4, mu).unwrap();
            let out = f.query(&x).unwrap();
            for y in ys {
                prop_assert!(f.value(&y) >= out.value + dot(&out.subgradient, &sub(&y, &x)) - 1e-9);
            }
        }
    }

    fn unconstrained(u0: Vec<f64>, c: Vec<f64>) -> QuadraticDual {
        let n = u0.len();
        QuadraticDual {
            u0,
            c: Mat::identity(n),
            d: c,
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    #[test]
    fn dual_oracle_closed_form() {
        let u0 = vec![1.0, -2.0];
        let c = vec![0.5, 0.25];
        let dp = DualProblem::new(unconstrained(u0.clone(), c.clone()), 0.0, 2.0, 5.0).unwrap();
        let x = [0.3, 1.7];
        let out = dp.query(&x).unwrap();
        let ux: Vec<f64> = (0..2).map(|i| u0[i] - x[i]).collect();
        let value = -(-0.5 * dot(&x, &x) + dot(&x, &sub(&u0, &c)));
        let sg: Vec<f64> = (0..2).map(|i| -(u0[i] - x[i] - c[i])).collect();
        assert!(out
            .payload
            .as_ref()
            .unwrap()
            .iter()
            .zip(&ux)
            .all(|(a, b)| (a - b).abs() < 1e-14));
        assert!((out.value - value).abs() < 1e-13);
        assert!(out
            .subgradient
            .iter()
            .zip(&sg)
            .all(|(a, b)| (a - b).abs() < 1e-14));
        // At x = 0 the inner problem reduces to argmin f = u0.
        let out = dp.query(&[0.0, 0.0]).unwrap();
        assert_eq!(out.payload.unwrap(), u0);
        assert!(out
            .subgradient
            .iter()
            .zip(sub(&u0, &c))
            .all(|(a, b)| (a + b).abs() < 1e-14));
        let dom = dp.domain().unwrap();
        assert_eq!(dom, Domain::nonneg_p_cap(2, 2.0, 6.0).unwrap());
    }

    #[test]
    fn dual_problem_validation() {
        let q = unconstrained(vec![0.0], vec![0.0]);
        assert!(DualProblem::new(q.clone(), -1.0, 2.0, 1.0).is_err());
        assert!(DualProblem::new(q.clone(), 0.0, 2.0, 0.0).is_err());
        assert!(DualProblem::new(q, 0.0, 0.5, 1.0).is_err());
    }

    #[test]
    fn box_qp_interior_optimum() {
        let qp = BoxQp {
            hessian: Mat::from_rows(&[[2.0, 1.0], [1.0, 3.0]]),
            linear: vec![-1.0, -2.0],
            constant: 0.0,
            lower: vec![-10.0, -10.0],
            upper: vec![10.0, 10.0],
        };
        // Q⁻¹ = (1/5)[[3, −1], [−1, 2]], so −Q⁻¹q = (1/5)(3 − 2, −1 + 4) = (0.2, 0.6).
        let exact = [0.2, 0.6];
        let u = qp.solve(1e-10).unwrap();
        assert!(qp.value(&u) - qp.value(&exact) <= 1e-10);
        assert!((u[0] - 0.2).abs() < 1e-4 && (u[1] - 0.6).abs() < 1e-4);
    }

    #[test]
    fn box_qp_corner_matches_enumeration() {
        let qp = BoxQp {
            hessian: Mat::from_rows(&[[1.0, 0.5], [0.5, 1.0]]),
            linear: vec![-5.0, 4.0],
            constant: 1.0,
            lower: vec![0.0, 0.0],
            upper: vec![1.0, 1.0],
        };
        // Enumerate the 4 corners and the 1-D minimizer on each of the 4 edges.
        let mut best = f64::INFINITY;
        for fix in 0..2 {
            for val in [0.0, 1.0] {
                let free = 1 - fix;
                let mut u = [0.0; 2];
                u[fix] = val;
                let h = qp.hessian[(free, free)];
                let lin = qp.linear[free] + qp.hessian[(free, fix)] * val;
                for cand in [0.0, 1.0, (-lin / h).clamp(0.0, 1.0)] {
                    u[free] = cand;
                    best = best.min(qp.value(&u));
                }
            }
        }
        let u = qp.solve(1e-9).unwrap();
        assert!(qp.value(&u) - best <= 1e-9 && qp.value(&u) >= best - 1e-12);
        assert_eq!(u, vec![1.0, 0.0]);
    }

    #[test]
    fn box_qp_rejects_mixed_bounds() {
        let qp = BoxQp {
            hessian: Mat::identity(1),
            linear: vec![0.0],
            constant: 0.0,
            lower: vec![0.0],
            upper: vec![f64::INFINITY],
        };
        assert!(matches!(qp.solve(1e-6), Err(OracleError::Invalid(_))));
    }

    #[test]
    fn box_qp_iteration_limit_on_ill_conditioning() {
        let qp = BoxQp {
            hessian: Mat::from_diag(&[1.0, 1e-9]),
            linear: vec![0.0, -1.0],
            constant: 0.0,
            lower: vec![-1.0, -1e9],
            upper: vec![1.0, 1e9],
        };
        assert!(matches!(
            qp.solve(1e-12),
            Err(OracleError::IterationLimit { .. })
        ));
    }

    #[test]
    fn dual_oracle_delta_subgradient_on_box_problem() {
        let q = QuadraticDual {
            u0: vec![2.0, 1.0, -0.5],
            c: Mat::from_rows(&[[1.0, 1.0, 0.0], [0.0, 1.0, -1.0]]),
            d: vec![1.0, 0.5],
            lower: vec![-1.0, -1.0, -1.0],
            upper: vec![1.5, 1.5, 1.5],
        };
        let delta = 1e-6;
        let dp = DualProblem::new(q.clone(), delta, 2.0, 5.0).unwrap();
        let reference = |y: &[f64]| {
            let qp = q.inner_qp(y);
            -qp.value(&qp.solve(1e-13).unwrap())
        };
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for _ in 0..5 {
            let x: Vec<f64> = (0..2).map(|_| rng.gen_range(0.0..3.0)).collect();
            let out = dp.query(&x).unwrap();
            assert!((out.value - reference(&x)).abs() <= delta + 1e-9);
            for _ in 0..100 {
                let y: Vec<f64> = (0..2).map(|_| rng.gen_range(0.0..3.0)).collect();
                let lhs = reference(&y);
                let rhs = out.value + dot(&out.subgradient, &sub(&y, &x)) - delta - 1e-9;
                assert!(lhs >= rhs, "{lhs} < {rhs}");
            }
        }
    }
}
