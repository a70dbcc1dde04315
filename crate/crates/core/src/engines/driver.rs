//! The cutting-plane loop: separate or query, record, cut, and periodically
//! extract a certificate.

use std::time::{Duration, Instant};

use log::{debug, warn};

use super::{Cut, CuttingPlaneEngine, EngineError};
use crate::certificate::{
    build_centered_certificate_lp, certificate_from_lambda, induced_solution, repair_multipliers,
    Certificate, CertificateError, ExecutionProtocol, RowOrigin, StepKind,
};
use crate::geometry::Domain;
use crate::lp::{self, LpError, LpStatus, SolveOptions};
use crate::oracle::DeltaOracle;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveOptions {
    /// Number of steps; each step makes one separation or δ-oracle call.
    pub budget: usize,
    /// Compute a certificate after every `cert_every`-th step; 0 disables.
    pub cert_every: usize,
    /// Relative optimality at which the certificate LP may stop early.
    pub lp_alpha: f64,
    pub pivot_limit: usize,
}

impl Default for DriveOptions {
    fn default() -> Self {
        DriveOptions {
            budget: 2000,
            cert_every: 1,
            lp_alpha: 0.5,
            pivot_limit: 50_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub step: usize,
    pub oracle_calls: usize,
    pub kind: StepKind,
    /// `F̃(x_t)` on productive steps.
    pub value: Option<f64>,
    pub best_value: Option<f64>,
    pub elapsed: Duration,
    /// Index into [`RunOutput::snapshots`].
    pub snapshot: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateSnapshot {
    pub step: usize,
    pub certificate: Certificate,
    pub lp_status: LpStatus,
    pub lp_value: f64,
    pub lp_pivots: usize,
    /// `x^τ[ξ]`.
    pub induced: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpFailure {
    pub step: usize,
    pub error: CertificateError,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    BudgetExhausted,
    /// The oracle returned a zero subgradient; `point` is δ-optimal.
    Terminated {
        step: usize,
        point: Vec<f64>,
    },
    /// The engine could not make further numerical progress.
    PrecisionLimit {
        step: usize,
        reason: String,
    },
    Failed {
        step: usize,
        reason: String,
    },
}

impl RunStatus {
    pub fn is_failure(&self) -> bool {
        matches!(self, RunStatus::Failed { .. })
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trace: Vec<TraceRecord>,
    pub snapshots: Vec<CertificateSnapshot>,
    pub protocol: ExecutionProtocol,
    pub status: RunStatus,
    /// Certificate computations that failed for reasons other than "no
    /// certificate yet".
    pub lp_failures: Vec<LpFailure>,
    pub best_point: Option<Vec<f64>>,
    pub best_value: Option<f64>,
}

/// Runs `engine` on `min_{x∈X} F(x)`.
///
/// `observer` is called with the engine after every successful update.
pub fn drive<E, O, F>(
    engine: &mut E,
    x: &Domain,
    oracle: &O,
    opts: DriveOptions,
    mut observer: F,
) -> RunOutput
where
    E: CuttingPlaneEngine,
    O: DeltaOracle + ?Sized,
    F: FnMut(&E),
{
    let start = Instant::now();
    let mut out = RunOutput {
        trace: Vec::new(),
        snapshots: Vec::new(),
        protocol: ExecutionProtocol::new(engine.dim()),
        status: RunStatus::BudgetExhausted,
        lp_failures: Vec::new(),
        best_point: None,
        best_value: None,
    };
    for step in 1..=opts.budget {
        match one_step(engine, x, oracle, step, &mut out) {
            Ok(StepOutcome::Continue) => {}
            Ok(StepOutcome::Terminated(point)) => {
                out.status = RunStatus::Terminated { step, point };
                break;
            }
            Err(StepError::Engine(EngineError::DegenerateCut)) => {
                out.status = RunStatus::PrecisionLimit {
                    step,
                    reason: EngineError::DegenerateCut.to_string(),
                };
                break;
            }
            Err(StepError::Engine(EngineError::PrecisionLimit(reason))) => {
                out.status = RunStatus::PrecisionLimit { step, reason };
                break;
            }
            Err(e) => {
                warn!("{} run failed at step {step}: {e}", engine.name());
                out.status = RunStatus::Failed {
                    step,
                    reason: e.to_string(),
                };
                break;
            }
        }
        observer(engine);
        let snapshot = if opts.cert_every > 0 && step % opts.cert_every == 0 {
            certify(engine, step, opts, &mut out)
        } else {
            None
        };
        let last = out.protocol.steps().last().expect("step recorded");
        out.trace.push(TraceRecord {
            step,
            oracle_calls: step,
            kind: last.kind,
            value: last.value,
            best_value: out.best_value,
            elapsed: start.elapsed(),
            snapshot,
        });
    }
    out
}

enum StepOutcome {
    Continue,
    Terminated(Vec<f64>),
}

#[derive(Debug, thiserror::Error)]
enum StepError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Oracle(#[from] crate::oracle::OracleError),
    #[error(transparent)]
    Certificate(#[from] CertificateError),
}

fn one_step<E: CuttingPlaneEngine, O: DeltaOracle + ?Sized>(
    engine: &mut E,
    x: &Domain,
    oracle: &O,
    step: usize,
    out: &mut RunOutput,
) -> Result<StepOutcome, StepError> {
    let point = engine.query_point();
    let (direction, kind, value, payload) = match x.separate(&point).map_err(EngineError::from)? {
        Some(sep) => (sep.into_vec(), StepKind::Nonproductive, None, None),
        None => {
            let o = oracle.query(&point)?;
            if o.subgradient.iter().any(|v| !v.is_finite()) {
                return Err(EngineError::Invalid(
                    "oracle returned a non-finite subgradient".into(),
                )
                .into());
            }
            if o.subgradient.iter().all(|v| *v == 0.0) {
                return Ok(StepOutcome::Terminated(point));
            }
            if out.best_value.map_or(true, |b| o.value < b) {
                out.best_value = Some(o.value);
                out.best_point = Some(point.clone());
            }
            (
                o.subgradient,
                StepKind::Productive,
                Some(o.value),
                o.payload,
            )
        }
    };
    let origin = match kind {
        StepKind::Productive => RowOrigin::Productive(step),
        StepKind::Nonproductive => RowOrigin::Nonproductive(step),
    };
    let cut = Cut {
        direction: direction.clone(),
        point: point.clone(),
        origin,
    };
    let recorded = out
        .protocol
        .record_step(point, direction, kind, value, payload)?;
    debug_assert_eq!(recorded, step);
    engine.update(&cut)?;
    Ok(StepOutcome::Continue)
}

fn certify<E: CuttingPlaneEngine>(
    engine: &E,
    step: usize,
    opts: DriveOptions,
    out: &mut RunOutput,
) -> Option<usize> {
    let (loc, center) = engine.certificate_localizer()?;
    let attempt = || -> Result<CertificateSnapshot, CertificateError> {
        let inst = build_centered_certificate_lp(loc, &center)?;
        let sol = lp::solve(
            &inst,
            SolveOptions {
                alpha: opts.lp_alpha,
                pivot_limit: opts.pivot_limit,
            },
        )?;
        let lambda = repair_multipliers(&sol.x, loc, &center);
        let certificate = certificate_from_lambda(&lambda, loc)?;
        let induced = induced_solution(&certificate, &out.protocol)?;
        Ok(CertificateSnapshot {
            step,
            certificate,
            lp_status: sol.status,
            lp_value: sol.value,
            lp_pivots: sol.pivots,
            induced,
        })
    };
    match attempt() {
        Ok(snap) => {
            out.snapshots.push(snap);
            Some(out.snapshots.len() - 1)
        }
        Err(CertificateError::DegenerateCertificate(d)) => {
            debug!("step {step}: no certificate yet (d = {d:e})");
            None
        }
        Err(error) => {
            if matches!(
                error,
                CertificateError::Lp(LpError::Unbounded | LpError::Infeasible)
            ) {
                warn!("step {step}: certificate LP reported {error}");
            }
            out.lp_failures.push(LpFailure { step, error });
            None
        }
    }
}
