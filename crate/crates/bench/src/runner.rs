//! One benchmark run: `min_{x∈X} maxᵢ xᵢ + (μ/2)‖x‖²` over
//! `X = Ball(0, 10‖x_*‖₂)`, written as CSV.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use cutcert::certificate::{residual, StepKind};
use cutcert::engines::{
    drive, DriveOptions, Ellipsoid, EngineError, RunOutput, RunStatus, Vaidya, VaidyaParams,
};
use cutcert::geometry::Domain;
use cutcert::numerics::norm2;
use cutcert::oracle::{MaxPlusQuadratic, OracleError};
use log::info;
use thiserror::Error;

use crate::config::{ExperimentConfig, Method};

pub const HEADER: &str =
    "iter,oracle_calls,kind,f_best,eps_opt,d_tau,D_tau,eps_cert,two_over_d,wall_ms";

/// Thresholds reported in sweep summaries.
pub const THRESHOLDS: [f64; 3] = [1e-1, 1e-2, 1e-3];

#[derive(Debug, Error)]
pub enum RunError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("invalid problem: {0}")]
    Problem(String),
}

/// The benchmark instance with its closed-form solution.
#[derive(Debug, Clone)]
pub struct Benchmark {
    pub oracle: MaxPlusQuadratic,
    pub x_star: Vec<f64>,
    pub opt: f64,
    pub domain: Domain,
}

impl Benchmark {
    pub fn new(n: usize, mu: f64) -> Result<Self, RunError> {
        let oracle = MaxPlusQuadratic::new(n, mu)?;
        let x_star = oracle.minimizer();
        let radius = 10.0 * norm2(&x_star);
        let domain =
            Domain::ball(vec![0.0; n], radius).map_err(|e| RunError::Problem(e.to_string()))?;
        Ok(Benchmark {
            opt: oracle.optimal_value(),
            oracle,
            x_star,
            domain,
        })
    }
}

/// What a sweep needs to know about a finished run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub status: RunStatus,
    pub iterations: usize,
    /// Oracle calls until `f_best − Opt` first drops to each of [`THRESHOLDS`].
    pub calls_to_eps_opt: [Option<usize>; 3],
    /// Oracle calls until a certificate residual first drops to each threshold.
    pub calls_to_eps_cert: [Option<usize>; 3],
}

impl RunSummary {
    pub fn failed(&self) -> bool {
        self.status.is_failure()
    }
}

pub fn status_label(status: &RunStatus) -> String {
    match status {
        RunStatus::BudgetExhausted => "budget_exhausted".into(),
        RunStatus::Terminated { step, .. } => format!("terminated step={step}"),
        RunStatus::PrecisionLimit { step, reason } => {
            format!("precision_limit step={step} reason=\"{reason}\"")
        }
        RunStatus::Failed { step, reason } => format!("failed step={step} reason=\"{reason}\""),
    }
}

fn execute(cfg: &ExperimentConfig, bench: &Benchmark) -> Result<RunOutput, RunError> {
    let opts = DriveOptions {
        budget: cfg.max_oracle_calls,
        cert_every: cfg.cert_every,
        lp_alpha: cfg.lp_alpha,
        ..Default::default()
    };
    Ok(match cfg.method {
        Method::Vaidya => {
            let params = VaidyaParams {
                drop_threshold: cfg.vaidya_eps,
                gamma: cfg.vaidya_gamma,
                newton_max_steps: cfg.vaidya_newton_steps,
                ..Default::default()
            };
            let mut engine = Vaidya::new(&bench.domain, params)?;
            drive(&mut engine, &bench.domain, &bench.oracle, opts, |_| {})
        }
        Method::Ellipsoid => {
            let mut engine = Ellipsoid::new(&bench.domain)?;
            drive(&mut engine, &bench.domain, &bench.oracle, opts, |_| {})
        }
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

/// Runs `cfg` and writes its CSV to `cfg.out`.
///
/// Engine failures during the run end up in the status line and the summary;
/// only setup and I/O problems are errors.
pub fn run_benchmark(cfg: &ExperimentConfig) -> Result<RunSummary, RunError> {
    let bench = Benchmark::new(cfg.n, cfg.mu)?;
    let out = execute(cfg, &bench)?;
    let io = |source| RunError::Io {
        path: cfg.out.clone(),
        source,
    };
    if let Some(dir) = cfg.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    let mut w = BufWriter::new(File::create(&cfg.out).map_err(io)?);
    writeln!(
        w,
        "# method={} n={} mu={} max_oracle_calls={} cert_every={} lp_alpha={} vaidya_eps={} vaidya_gamma={}",
        cfg.method, cfg.n, cfg.mu, cfg.max_oracle_calls, cfg.cert_every, cfg.lp_alpha, cfg.vaidya_eps, cfg.vaidya_gamma
    )
    .map_err(io)?;
    writeln!(w, "# opt={:.16e}", bench.opt).map_err(io)?;
    writeln!(
        w,
        "# eps_opt: F(x_tau) - Opt at certificate rows (x_tau the certificate's induced point), f_best - Opt elsewhere"
    )
    .map_err(io)?;
    writeln!(
        w,
        "# eps_cert: certificate residual over X; certificate columns are empty on other rows"
    )
    .map_err(io)?;
    writeln!(w, "{HEADER}").map_err(io)?;

    let mut summary = RunSummary {
        status: out.status.clone(),
        iterations: out.trace.len(),
        calls_to_eps_opt: [None; 3],
        calls_to_eps_cert: [None; 3],
    };
    for rec in &out.trace {
        let gap_best = rec.best_value.map(|b| b - bench.opt);
        if let Some(g) = gap_best {
            for (slot, thr) in summary.calls_to_eps_opt.iter_mut().zip(THRESHOLDS) {
                if slot.is_none() && g <= thr {
                    *slot = Some(rec.oracle_calls);
                }
            }
        }
        let mut eps_opt = gap_best;
        let mut cert_cols = [None; 4];
        if let Some(idx) = rec.snapshot {
            let snap = &out.snapshots[idx];
            let c = &snap.certificate;
            let eps_cert = residual(c, &out.protocol, &bench.domain)
                .map_err(|e| RunError::Problem(e.to_string()))?;
            eps_opt = Some(bench.oracle.value(&snap.induced) - bench.opt);
            cert_cols = [
                Some(c.d_tau()),
                Some(c.big_d_tau()),
                Some(eps_cert),
                Some(2.0 / c.d_tau()),
            ];
            for (slot, thr) in summary.calls_to_eps_cert.iter_mut().zip(THRESHOLDS) {
                if slot.is_none() && eps_cert <= thr {
                    *slot = Some(rec.oracle_calls);
                }
            }
        }
        let kind = match rec.kind {
            StepKind::Productive => "P",
            StepKind::Nonproductive => "N",
        };
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{:.3}",
            rec.step,
            rec.oracle_calls,
            kind,
            fmt_opt(rec.best_value),
            fmt_opt(eps_opt),
            fmt_opt(cert_cols[0]),
            fmt_opt(cert_cols[1]),
            fmt_opt(cert_cols[2]),
            fmt_opt(cert_cols[3]),
            rec.elapsed.as_secs_f64() * 1e3
        )
        .map_err(io)?;
    }
    writeln!(w, "# status={}", status_label(&out.status)).map_err(io)?;
    w.flush().map_err(io)?;
    info!(
        "{} n={} mu={}: {} iterations, {}",
        cfg.method,
        cfg.n,
        cfg.mu,
        summary.iterations,
        status_label(&summary.status)
    );
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn benchmark_closed_form() {
        let b = Benchmark::new(10, 0.1).unwrap();
        assert!((norm2(&b.x_star) - 10f64.sqrt()).abs() < 1e-12);
        match &b.domain {
            Domain::EuclideanBall { radius, .. } => {
                assert!((radius - 31.622776601683793).abs() < 1e-9)
            }
            other => panic!("{other:?}"),
        }
        assert!((b.opt + 0.5).abs() < 1e-15);
        let b = Benchmark::new(10, 0.01).unwrap();
        assert!((b.opt + 5.0).abs() < 1e-12);
    }

    #[test]
    fn status_labels() {
        assert_eq!(
            status_label(&RunStatus::BudgetExhausted),
            "budget_exhausted"
        );
        assert_eq!(
            status_label(&RunStatus::Failed {
                step: 3,
                reason: "x".into()
            }),
            "failed step=3 reason=\"x\""
        );
    }
}
