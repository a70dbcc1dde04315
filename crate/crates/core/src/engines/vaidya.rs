//! Vaidya's volumetric-center method in its practical add/drop form.
//!
//! The localizer is kept in a frame whose origin follows the center, so
//! slacks are computed from small numbers and keep full relative precision
//! long after the localizer has shrunk below the magnitude of the
//! coordinates.

use log::debug;

use super::{initial_box, Cut, CuttingPlaneEngine, EngineError};
use crate::certificate::{PolytopeLocalizer, Row, RowOrigin};
use crate::geometry::Domain;
use crate::numerics::{axpy, dot, norm2, Cholesky, Mat, ThinQr};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VaidyaParams {
    /// Rows whose leverage score falls below this are dropped.
    pub drop_threshold: f64,
    /// Depth of new rows: a row enters where its leverage score computed
    /// before insertion equals `gamma`, so after insertion it is
    /// `gamma / (1 + gamma)`.
    pub gamma: f64,
    /// Newton decrement at which re-centering stops.
    pub newton_tol: f64,
    pub newton_max_steps: usize,
}

impl Default for VaidyaParams {
    fn default() -> Self {
        VaidyaParams {
            drop_threshold: 5e-3,
            gamma: 1.0,
            newton_tol: 1e-8,
            newton_max_steps: 50,
        }
    }
}

impl VaidyaParams {
    /// Leverage score of a freshly inserted row at the old center.
    pub fn entry_score(&self) -> f64 {
        self.gamma / (1.0 + self.gamma)
    }

    fn validate(&self) -> Result<(), EngineError> {
        if !(self.drop_threshold > 0.0 && self.drop_threshold < 1.0) {
            return Err(EngineError::Invalid(format!(
                "drop threshold must lie in (0, 1), got {}",
                self.drop_threshold
            )));
        }
        if !(self.gamma.is_finite() && self.entry_score() > self.drop_threshold) {
            return Err(EngineError::Invalid(format!(
                "gamma = {} gives entry score γ/(1+γ) at or below the drop threshold",
                self.gamma
            )));
        }
        if !(self.newton_tol > 0.0) {
            return Err(EngineError::Invalid("newton_tol must be positive".into()));
        }
        Ok(())
    }
}

/// Approximate Newton decrement below which a center is accepted when the
/// step budget runs out.
const LOOSE_DECREMENT: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct Vaidya {
    params: VaidyaParams,
    /// Rows in the translated frame `y = x − origin`.
    loc: PolytopeLocalizer,
    origin: Vec<f64>,
    center: Vec<f64>,
    adds: usize,
    drops: usize,
    newton_steps: usize,
    peak_rows: usize,
}

/// Barrier quantities at a point, in the frame `w = R y` where
/// `Aₛ = QR` and `Aₛ` has rows `aᵢ / sᵢ`. In that frame `H = I`, the gradient
/// of `V` is `Qᵀσ` and its Hessian is `Qᵀ(3Σ − 2P∘P)Q` with `P = QQᵀ`; all of
/// them are built from the well-scaled `Q` rather than from `H`.
struct Local {
    slacks: Vec<f64>,
    qr: ThinQr,
    sigma: Vec<f64>,
    grad_w: Vec<f64>,
    value: f64,
}

impl Local {
    /// `∇V` in the original frame, `Rᵀ∇_w V`.
    #[cfg(test)]
    fn grad(&self) -> Vec<f64> {
        self.qr.r.transpose().mul_vec(&self.grad_w)
    }
}

impl Vaidya {
    /// Starts from `X`'s inflated bounding box with the box center as the
    /// first query point.
    pub fn new(x: &Domain, params: VaidyaParams) -> Result<Self, EngineError> {
        params.validate()?;
        let (lower, upper) = initial_box(x)?;
        let origin: Vec<f64> = lower
            .iter()
            .zip(&upper)
            .map(|(l, u)| 0.5 * (l + u))
            .collect();
        let lo: Vec<f64> = lower.iter().zip(&origin).map(|(l, o)| l - o).collect();
        let hi: Vec<f64> = upper.iter().zip(&origin).map(|(u, o)| u - o).collect();
        let loc = PolytopeLocalizer::from_box(&lo, &hi);
        let n = origin.len();
        Ok(Vaidya {
            params,
            peak_rows: loc.len(),
            loc,
            origin,
            center: vec![0.0; n],
            adds: 0,
            drops: 0,
            newton_steps: 0,
        })
    }

    pub fn params(&self) -> &VaidyaParams {
        &self.params
    }

    pub fn row_count(&self) -> usize {
        self.loc.len()
    }

    pub fn peak_rows(&self) -> usize {
        self.peak_rows
    }

    pub fn adds(&self) -> usize {
        self.adds
    }

    pub fn drops(&self) -> usize {
        self.drops
    }

    pub fn newton_steps(&self) -> usize {
        self.newton_steps
    }

    /// The localizer in absolute coordinates.
    pub fn localizer(&self) -> PolytopeLocalizer {
        let mut out = PolytopeLocalizer::new(self.loc.dim());
        for r in self.loc.rows() {
            let b = r.b + dot(&r.a, &self.origin);
            out.push(Row {
                a: r.a.clone(),
                b,
                origin: r.origin,
            })
            .expect("same dimension");
        }
        out
    }

    /// Slacks of the current center, computed in the translated frame.
    pub fn center_slacks(&self) -> Vec<f64> {
        self.loc.slacks(&self.center)
    }

    /// Leverage scores at the current center.
    pub fn leverage_scores(&self) -> Result<Vec<f64>, EngineError> {
        Ok(self.evaluate(&self.center)?.sigma)
    }

    fn evaluate(&self, y: &[f64]) -> Result<Local, EngineError> {
        let n = self.loc.dim();
        let m = self.loc.len();
        let slacks = self.loc.slacks(y);
        if let Some(i) = slacks.iter().position(|s| !(*s > 0.0)) {
            return Err(EngineError::Stall(format!(
                "point left the localizer at row {i}"
            )));
        }
        let mut scaled = Mat::zeros(m, n);
        for (i, r) in self.loc.rows().iter().enumerate() {
            for (dst, a) in scaled.row_mut(i).iter_mut().zip(&r.a) {
                *dst = a / slacks[i];
            }
        }
        let qr = ThinQr::new(&scaled)?;
        let mut sigma = vec![0.0; m];
        let mut grad_w = vec![0.0; n];
        for i in 0..m {
            let qi = qr.q.row(i);
            sigma[i] = dot(qi, qi);
            axpy(sigma[i], qi, &mut grad_w);
        }
        let value = 0.5 * qr.log_det_gram();
        Ok(Local {
            slacks,
            qr,
            sigma,
            grad_w,
            value,
        })
    }

    /// `Qᵀ(3Σ − 2P∘P)Q`.
    fn hessian_w(local: &Local) -> Mat {
        let q = &local.qr.q;
        let (m, n) = (q.rows(), q.cols());
        let mut hess = if n * n < 4 * m {
            leverage_square_tensor(q)
        } else {
            leverage_square_pairwise(q)
        };
        for v in hess.as_mut_slice() {
            *v *= -2.0;
        }
        for i in 0..m {
            let a = q.row(i);
            let s = 3.0 * local.sigma[i];
            for j in 0..n {
                for k in 0..n {
                    hess[(j, k)] += s * a[j] * a[k];
                }
            }
        }
        hess.symmetrize();
        hess
    }

    /// `QᵀΣQ`, a positive-definite lower bound on the exact Hessian.
    fn approximate_hessian_w(local: &Local) -> Mat {
        let q = &local.qr.q;
        let n = q.cols();
        let mut h = Mat::zeros(n, n);
        for (i, s) in local.sigma.iter().enumerate() {
            let a = q.row(i);
            for j in 0..n {
                for k in 0..n {
                    h[(j, k)] += s * a[j] * a[k];
                }
            }
        }
        h
    }

    fn newton_system(local: &Local) -> Result<Cholesky, EngineError> {
        Cholesky::new(&Self::hessian_w(local))
            .or_else(|_| Cholesky::new(&Self::approximate_hessian_w(local)))
            .map_err(|e| EngineError::Stall(format!("Newton system: {e}")))
    }

    /// Damped Newton on the volumetric barrier, starting from the current
    /// center.
    fn recenter(&mut self) -> Result<(), EngineError> {
        let mut y = self.center.clone();
        let mut local = self.evaluate(&y)?;
        for _ in 0..self.params.newton_max_steps {
            let chol = Self::newton_system(&local)?;
            let dir_w: Vec<f64> = chol.solve(&local.grad_w).into_iter().map(|v| -v).collect();
            let slope = dot(&local.grad_w, &dir_w);
            let decrement = (-slope).max(0.0).sqrt();
            if decrement <= self.params.newton_tol {
                self.center = y;
                return Ok(());
            }
            let dir = local.qr.solve_r(&dir_w);
            let mut alpha: f64 = if decrement > 0.25 {
                1.0 / (1.0 + decrement)
            } else {
                1.0
            };
            for (r, s) in self.loc.rows().iter().zip(&local.slacks) {
                let rate = dot(&r.a, &dir);
                if rate > 0.0 {
                    alpha = alpha.min(0.99 * s / rate);
                }
            }
            let mut accepted = None;
            for _ in 0..60 {
                let trial: Vec<f64> = y.iter().zip(&dir).map(|(v, d)| v + alpha * d).collect();
                if let Ok(next) = self.evaluate(&trial) {
                    if decrement < 1e-5 || next.value <= local.value + 0.25 * alpha * slope {
                        accepted = Some((trial, next));
                        break;
                    }
                }
                alpha *= 0.5;
            }
            self.newton_steps += 1;
            match accepted {
                Some((trial, next)) => {
                    y = trial;
                    local = next;
                }
                None if decrement < LOOSE_DECREMENT => {
                    debug!(
                        "vaidya: line search stalled at decrement {decrement:e}; accepting center"
                    );
                    self.center = y;
                    return Ok(());
                }
                None => {
                    return Err(EngineError::Stall(format!(
                        "line search failed at decrement {decrement:e}"
                    )))
                }
            }
        }
        let decrement = Self::newton_system(&local)?
            .inv_quad_form(&local.grad_w)
            .sqrt();
        if decrement < LOOSE_DECREMENT {
            debug!("vaidya: step budget exhausted at decrement {decrement:e}; accepting center");
            self.center = y;
            Ok(())
        } else {
            Err(EngineError::Stall(format!(
                "no centering after {} Newton steps (decrement {decrement:e})",
                self.params.newton_max_steps
            )))
        }
    }

    /// Moves the frame origin onto the current center.
    fn reanchor(&mut self) {
        let delta: Vec<f64> = self
            .origin
            .iter()
            .zip(&self.center)
            .map(|(o, y)| (o + y) - o)
            .collect();
        for (o, d) in self.origin.iter_mut().zip(&delta) {
            *o += d;
        }
        for (c, d) in self.center.iter_mut().zip(&delta) {
            *c -= d;
        }
        let rows: Vec<Row> = self
            .loc
            .rows()
            .iter()
            .map(|r| Row {
                a: r.a.clone(),
                b: r.b - dot(&r.a, &delta),
                origin: r.origin,
            })
            .collect();
        let mut loc = PolytopeLocalizer::new(self.loc.dim());
        for r in rows {
            loc.push(r).expect("same dimension");
        }
        self.loc = loc;
    }
}

impl CuttingPlaneEngine for Vaidya {
    fn name(&self) -> &'static str {
        "vaidya"
    }

    fn dim(&self) -> usize {
        self.loc.dim()
    }

    fn query_point(&self) -> Vec<f64> {
        self.origin
            .iter()
            .zip(&self.center)
            .map(|(o, y)| o + y)
            .collect()
    }

    /// Adds the cut with its offset relaxed so the new row enters with the
    /// target leverage score, re-centers, then drops low-score cut rows one
    /// at a time (re-centering after each). The initial box rows are never
    /// dropped.
    fn update(&mut self, cut: &Cut) -> Result<(), EngineError> {
        let n = self.dim();
        if cut.direction.len() != n || cut.point.len() != n {
            return Err(EngineError::Invalid("cut dimension".into()));
        }
        let a = &cut.direction;
        let anorm = norm2(a);
        if !(anorm > 0.0) || !anorm.is_finite() {
            return Err(EngineError::Invalid(
                "cut direction must be finite and nonzero".into(),
            ));
        }
        if cut.origin == RowOrigin::Initial {
            return Err(EngineError::Invalid("cuts must come from a step".into()));
        }
        let local = self.evaluate(&self.center)?;
        let leverage = norm2(&local.qr.solve_rt(a)).powi(2);
        let shift = (leverage / self.params.gamma).sqrt();
        if !(shift > 0.0) || !shift.is_finite() {
            return Err(EngineError::DegenerateCut);
        }
        let point: Vec<f64> = cut
            .point
            .iter()
            .zip(&self.origin)
            .map(|(p, o)| p - o)
            .collect();
        let b = dot(a, &point) + shift;
        let center_slack = b - dot(a, &self.center);
        if !(center_slack > 0.5 * shift) {
            return Err(EngineError::PrecisionLimit(format!(
                "query point resolution: new row slack {center_slack:e} vs offset {shift:e}"
            )));
        }
        self.loc.push(Row {
            a: a.clone(),
            b,
            origin: cut.origin,
        })?;
        self.adds += 1;
        self.peak_rows = self.peak_rows.max(self.loc.len());
        self.recenter()?;

        for _ in 0..self.loc.len() {
            let sigma = self.evaluate(&self.center)?.sigma;
            let weakest = self
                .loc
                .rows()
                .iter()
                .zip(&sigma)
                .enumerate()
                .filter(|(_, (r, _))| r.origin != RowOrigin::Initial)
                .min_by(|(_, (_, s1)), (_, (_, s2))| s1.total_cmp(s2));
            match weakest {
                Some((i, (_, s))) if *s < self.params.drop_threshold => {
                    self.loc.remove(i);
                    self.drops += 1;
                    self.recenter()?;
                }
                _ => break,
            }
        }
        self.reanchor();
        Ok(())
    }

    fn certificate_localizer(&self) -> Option<(&PolytopeLocalizer, Vec<f64>)> {
        Some((&self.loc, self.center.clone()))
    }

    fn contains(&self, x: &[f64], tol: f64) -> bool {
        let y: Vec<f64> = x.iter().zip(&self.origin).map(|(v, o)| v - o).collect();
        self.loc.contains(&y, tol)
    }
}

/// `Qᵀ(P∘P)Q` with `P = QQᵀ`, summing over row pairs: `O(m²n)`.
fn leverage_square_pairwise(q: &Mat) -> Mat {
    let (m, n) = (q.rows(), q.cols());
    let mut weighted = Mat::zeros(m, n);
    for i in 0..m {
        let qi = q.row(i);
        for j in 0..=i {
            let p = dot(qi, q.row(j));
            let coef = p * p;
            axpy(coef, q.row(j), weighted.row_mut(i));
            if i != j {
                axpy(coef, qi, weighted.row_mut(j));
            }
        }
    }
    let mut out = Mat::zeros(n, n);
    for i in 0..m {
        let (a, w) = (q.row(i), weighted.row(i));
        for j in 0..n {
            for k in 0..n {
                out[(j, k)] += a[j] * w[k];
            }
        }
    }
    out
}

/// Same as [`leverage_square_pairwise`] via `(q_i·q_j)² = φ_i·φ_j`, where
/// `φ_i` is the symmetric square of row `i`: `O(mn³)`.
fn leverage_square_tensor(q: &Mat) -> Mat {
    let (m, n) = (q.rows(), q.cols());
    let pairs: Vec<(usize, usize, f64)> = (0..n)
        .flat_map(|k| (k..n).map(move |l| (k, l, if k == l { 1.0 } else { 2f64.sqrt() })))
        .collect();
    // Row c of `t` is Σ_i φ_i[c]·q_i.
    let mut t = Mat::zeros(pairs.len(), n);
    for i in 0..m {
        let qi = q.row(i);
        for (c, &(k, l, w)) in pairs.iter().enumerate() {
            let phi = w * qi[k] * qi[l];
            if phi != 0.0 {
                axpy(phi, qi, t.row_mut(c));
            }
        }
    }
    let mut out = Mat::zeros(n, n);
    for c in 0..pairs.len() {
        let tc = t.row(c);
        for j in 0..n {
            let tj = tc[j];
            for (o, tk) in out.row_mut(j).iter_mut().zip(tc) {
                *o += tj * tk;
            }
        }
    }
    out
}
