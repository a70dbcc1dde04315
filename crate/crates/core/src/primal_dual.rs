//! Recovering a primal solution of `min f(u) s.t. g(u) ≤ 0, u ∈ U` from a
//! certificate produced while minimizing its dual.

use thiserror::Error;

use crate::certificate::{residual, Certificate, CertificateError, ExecutionProtocol, StepKind};
use crate::geometry::{Domain, GeometryError};
use crate::numerics::{holder_conjugate, norm};
use crate::oracle::{DeltaOracle, DualProblem, Lagrangian};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecoveryError {
    #[error("productive step {0} carries no inner solution")]
    MissingPayload(usize),
    #[error("payload of step {step} has length {got}, expected {expected}")]
    PayloadDimension {
        step: usize,
        expected: usize,
        got: usize,
    },
    #[error(transparent)]
    Certificate(#[from] CertificateError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrimalRecovery {
    /// `û = Σ_{t∈I_τ} ξ_t u_t`.
    pub u_hat: Vec<f64>,
    /// `‖[g(û)]₊‖_q` with `q` conjugate to the dual domain's `p`.
    pub violation: f64,
    /// `f(û)`.
    pub primal_value: f64,
    /// Residual of the certificate over the dual domain `X`.
    pub eps_cert_over_x: f64,
    pub delta: f64,
}

/// `‖max(v, 0)‖_q`.
pub fn positive_part_norm(v: &[f64], q: f64) -> f64 {
    let pos: Vec<f64> = v.iter().map(|x| x.max(0.0)).collect();
    norm(&pos, q)
}

/// The dual domain `X = {x ≥ 0 : ‖x‖_p ≤ L + 1}` together with the oracle.
pub fn build_dual_cmp<P: Lagrangian>(
    dp: &DualProblem<P>,
) -> Result<(Domain, &DualProblem<P>), GeometryError> {
    Ok((dp.domain()?, dp))
}

/// Averages the inner solutions of productive steps with the certificate
/// weights and evaluates the result.
pub fn recover<P: Lagrangian>(
    cert: &Certificate,
    protocol: &ExecutionProtocol,
    dp: &DualProblem<P>,
    x: &Domain,
) -> Result<PrimalRecovery, RecoveryError> {
    let problem = dp.problem();
    let dim = problem.primal_dim();
    for s in protocol.productive() {
        match &s.payload {
            None => return Err(RecoveryError::MissingPayload(s.index)),
            Some(u) if u.len() != dim => {
                return Err(RecoveryError::PayloadDimension {
                    step: s.index,
                    expected: dim,
                    got: u.len(),
                })
            }
            Some(_) => {}
        }
    }
    let mut u_hat = vec![0.0; dim];
    for (&t, &w) in cert.weights() {
        let step = protocol.step(t).ok_or(CertificateError::UnknownStep(t))?;
        if step.kind != StepKind::Productive {
            continue;
        }
        let u = step.payload.as_ref().expect("checked above");
        u_hat.iter_mut().zip(u).for_each(|(a, b)| *a += w * b);
    }
    let violation = positive_part_norm(&problem.constraints(&u_hat), holder_conjugate(dp.p()));
    Ok(PrimalRecovery {
        primal_value: problem.objective(&u_hat),
        violation,
        eps_cert_over_x: residual(cert, protocol, x)?,
        delta: dp.delta(),
        u_hat,
    })
}
