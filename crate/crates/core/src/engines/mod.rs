//! Cutting-plane engines and the generic driver loop.

mod driver;
mod ellipsoid;
mod vaidya;

pub use driver::{
    drive, CertificateSnapshot, DriveOptions, LpFailure, RunOutput, RunStatus, TraceRecord,
};
pub use ellipsoid::Ellipsoid;
pub use vaidya::{Vaidya, VaidyaParams};

use thiserror::Error;

use crate::certificate::{CertificateError, PolytopeLocalizer, RowOrigin};
use crate::geometry::{Domain, GeometryError};
use crate::numerics::NumericsError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("engine stalled: {0}")]
    Stall(String),
    #[error("cut is degenerate relative to the localizer")]
    DegenerateCut,
    #[error("floating-point resolution exhausted: {0}")]
    PrecisionLimit(String),
    #[error("invalid engine input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Certificate(#[from] CertificateError),
}

/// The half-space `⟨direction, y − point⟩ ≤ 0` produced at one step.
#[derive(Debug, Clone, PartialEq)]
pub struct Cut {
    pub direction: Vec<f64>,
    pub point: Vec<f64>,
    pub origin: RowOrigin,
}

pub trait CuttingPlaneEngine {
    fn name(&self) -> &'static str;

    fn dim(&self) -> usize;

    /// The next search point; strictly inside the current localizer.
    fn query_point(&self) -> Vec<f64>;

    /// Shrinks the localizer so it contains `{y ∈ Q : ⟨e, y − x⟩ ≤ 0}`.
    fn update(&mut self, cut: &Cut) -> Result<(), EngineError>;

    /// Localizer rows in the engine's working coordinates, together with the
    /// current center in the same coordinates. `None` for engines without a
    /// polytope localizer.
    ///
    /// The certificate LP only involves `A` and `Aᵀλ = 0`, so it is the same
    /// in any translated frame.
    fn certificate_localizer(&self) -> Option<(&PolytopeLocalizer, Vec<f64>)>;

    /// Whether `x` lies in the current localizer up to `tol`.
    fn contains(&self, x: &[f64], tol: f64) -> bool;
}

/// `X`'s bounding box with each half-width inflated by 1%.
pub fn initial_box(x: &Domain) -> Result<(Vec<f64>, Vec<f64>), EngineError> {
    let (lo, hi) = x.bounding_box()?;
    let mut lower = Vec::with_capacity(lo.len());
    let mut upper = Vec::with_capacity(lo.len());
    for (l, h) in lo.iter().zip(&hi) {
        let mid = 0.5 * (l + h);
        let half = 0.5 * (h - l) * 1.01;
        lower.push(mid - half);
        upper.push(mid + half);
    }
    Ok((lower, upper))
}

/// `Q₁` as a [`Domain`], for residuals over the initial localizer.
pub fn initial_box_domain(x: &Domain) -> Result<Domain, EngineError> {
    let (lower, upper) = initial_box(x)?;
    Ok(Domain::boxed(lower, upper)?)
}
