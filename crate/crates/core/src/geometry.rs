//! Solids with the three capabilities cutting-plane methods need: strict
//! interior membership, separation and support-function maximization.

use thiserror::Error;

use crate::lp::{self, LpError};
use crate::numerics::{dot, holder_conjugate, norm, norm2, sub, Mat};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("dimension mismatch: domain has dimension {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid domain: {0}")]
    Invalid(String),
    #[error("operation not supported for this domain: {0}")]
    Unsupported(&'static str),
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// A nonzero vector `e` with `⟨e, y − x⟩ ≤ 0` for every `y` in the domain,
/// where `x` is the separated point.
#[derive(Debug, Clone, PartialEq)]
pub struct Separator(Vec<f64>);

impl Separator {
    fn new(e: Vec<f64>) -> Self {
        debug_assert!(norm2(&e) > 0.0);
        Separator(e)
    }

    pub fn direction(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Support {
    pub value: f64,
    pub maximizer: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    EuclideanBall {
        center: Vec<f64>,
        radius: f64,
    },
    Box {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    /// `{x ≥ 0 : ‖x‖_p ≤ cap}`.
    NonnegPCap {
        dim: usize,
        p: f64,
        cap: f64,
        inscribed: f64,
    },
    /// `{x : A x ≤ b}` with a known strictly interior point.
    Polytope {
        a: Mat,
        b: Vec<f64>,
        interior: Vec<f64>,
    },
}

impl Domain {
    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self, GeometryError> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(GeometryError::Invalid(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        if center.is_empty() || center.iter().any(|c| !c.is_finite()) {
            return Err(GeometryError::Invalid("ball center".into()));
        }
        Ok(Domain::EuclideanBall { center, radius })
    }

    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, GeometryError> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(GeometryError::Invalid(
                "box bounds must have equal nonzero length".into(),
            ));
        }
        if lower
            .iter()
            .zip(&upper)
            .any(|(l, u)| !(l < u) || !l.is_finite() || !u.is_finite())
        {
            return Err(GeometryError::Invalid(
                "box requires finite lower < upper".into(),
            ));
        }
        Ok(Domain::Box { lower, upper })
    }

    /// The capped nonnegative p-ball `{x ≥ 0 : ‖x‖_p ≤ cap}`.
    pub fn nonneg_p_cap(dim: usize, p: f64, cap: f64) -> Result<Self, GeometryError> {
        if dim == 0 || !(p >= 1.0) || !(cap > 0.0 && cap.is_finite()) {
            return Err(GeometryError::Invalid(format!(
                "need dim ≥ 1, p ≥ 1, cap > 0 (got {dim}, {p}, {cap})"
            )));
        }
        let inscribed = p_cap_inscribed_radius(dim, p, cap);
        Ok(Domain::NonnegPCap {
            dim,
            p,
            cap,
            inscribed,
        })
    }

    pub fn polytope(a: Mat, b: Vec<f64>, interior: Vec<f64>) -> Result<Self, GeometryError> {
        if a.rows() != b.len() || a.cols() != interior.len() || a.cols() == 0 {
            return Err(GeometryError::Invalid("polytope dimensions".into()));
        }
        let slack = sub(&b, &a.mul_vec(&interior));
        if slack.iter().any(|s| !(*s > 0.0)) {
            return Err(GeometryError::Invalid(
                "supplied point is not strictly interior".into(),
            ));
        }
        Ok(Domain::Polytope { a, b, interior })
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::EuclideanBall { center, .. } => center.len(),
            Domain::Box { lower, .. } => lower.len(),
            Domain::NonnegPCap { dim, .. } => *dim,
            Domain::Polytope { a, .. } => a.cols(),
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), GeometryError> {
        if x.len() != self.dim() {
            return Err(GeometryError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Strict interior test; boundary points are not interior.
    pub fn contains_interior(&self, x: &[f64]) -> Result<bool, GeometryError> {
        self.check_dim(x)?;
        Ok(match self {
            Domain::EuclideanBall { center, radius } => norm2(&sub(x, center)) < *radius,
            Domain::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(v, (l, u))| l < v && v < u),
            Domain::NonnegPCap { p, cap, .. } => x.iter().all(|&v| v > 0.0) && norm(x, *p) < *cap,
            Domain::Polytope { a, b, .. } => (0..a.rows()).all(|i| dot(a.row(i), x) < b[i]),
        })
    }

    /// `None` when `x` is strictly interior, otherwise a separator.
    pub fn separate(&self, x: &[f64]) -> Result<Option<Separator>, GeometryError> {
        if self.contains_interior(x)? {
            return Ok(None);
        }
        let n = self.dim();
        let e = match self {
            Domain::EuclideanBall { center, .. } => {
                let d = sub(x, center);
                let len = norm2(&d);
                if len > 0.0 {
                    d.iter().map(|v| v / len).collect()
                } else {
                    // Only reachable for a degenerate zero-radius ball, which
                    // the constructor forbids.
                    unit(n, 0, 1.0)
                }
            }
            Domain::Box { lower, upper } => {
                let mut best = (f64::NEG_INFINITY, 0, 1.0);
                for i in 0..n {
                    let hi = x[i] - upper[i];
                    let lo = lower[i] - x[i];
                    if hi > best.0 {
                        best = (hi, i, 1.0);
                    }
                    if lo > best.0 {
                        best = (lo, i, -1.0);
                    }
                }
                unit(n, best.1, best.2)
            }
            Domain::NonnegPCap { p, .. } => {
                if let Some(i) = x.iter().position(|&v| v <= 0.0) {
                    unit(n, i, -1.0)
                } else {
                    holder_dual_vector(x, *p)
                }
            }
            Domain::Polytope { a, b, .. } => {
                let i = (0..a.rows())
                    .max_by(|&i, &j| {
                        let vi = (dot(a.row(i), x) - b[i]) / norm2(a.row(i));
                        let vj = (dot(a.row(j), x) - b[j]) / norm2(a.row(j));
                        // Reverse on ties so the smallest index wins.
                        vi.total_cmp(&vj).then(j.cmp(&i))
                    })
                    .unwrap();
                a.row(i).to_vec()
            }
        };
        Ok(Some(Separator::new(e)))
    }

    /// `max_{x ∈ domain} ⟨g, x⟩` together with a maximizer.
    pub fn support(&self, g: &[f64]) -> Result<Support, GeometryError> {
        self.check_dim(g)?;
        let n = self.dim();
        Ok(match self {
            Domain::EuclideanBall { center, radius } => {
                let gn = norm2(g);
                let maximizer = if gn > 0.0 {
                    center
                        .iter()
                        .zip(g)
                        .map(|(c, gi)| c + radius * gi / gn)
                        .collect()
                } else {
                    center.clone()
                };
                Support {
                    value: dot(g, center) + radius * gn,
                    maximizer,
                }
            }
            Domain::Box { lower, upper } => {
                let maximizer: Vec<f64> = (0..n)
                    .map(|i| if g[i] > 0.0 { upper[i] } else { lower[i] })
                    .collect();
                Support {
                    value: dot(g, &maximizer),
                    maximizer,
                }
            }
            Domain::NonnegPCap { p, cap, .. } => {
                let pos: Vec<f64> = g.iter().map(|v| v.max(0.0)).collect();
                let q = holder_conjugate(*p);
                let value = cap * norm(&pos, q);
                let maximizer = if value > 0.0 {
                    holder_dual_vector(&pos, q)
                        .into_iter()
                        .map(|v| cap * v)
                        .collect()
                } else {
                    vec![0.0; n]
                };
                Support { value, maximizer }
            }
            Domain::Polytope { a, b, .. } => {
                let (value, maximizer) = lp::max_linear_over_polytope(a, b, g)?;
                Support { value, maximizer }
            }
        })
    }

    /// Radius of a Euclidean ball contained in the domain.
    ///
    /// Exact for balls and boxes. For the capped p-ball this is the largest
    /// ball centred on the diagonal whose containment can be certified by the
    /// norm-equivalence bound, found by bisection; it never exceeds the true
    /// inscribed radius.
    pub fn inscribed_radius(&self) -> Result<f64, GeometryError> {
        match self {
            Domain::EuclideanBall { radius, .. } => Ok(*radius),
            Domain::Box { lower, upper } => Ok(lower
                .iter()
                .zip(upper)
                .map(|(l, u)| 0.5 * (u - l))
                .fold(f64::INFINITY, f64::min)),
            Domain::NonnegPCap { inscribed, .. } => Ok(*inscribed),
            Domain::Polytope { .. } => Err(GeometryError::Unsupported(
                "inscribed radius of a general polytope",
            )),
        }
    }

    /// Axis-aligned bounding box.
    pub fn bounding_box(&self) -> Result<(Vec<f64>, Vec<f64>), GeometryError> {
        let n = self.dim();
        match self {
            Domain::EuclideanBall { center, radius } => Ok((
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            )),
            Domain::Box { lower, upper } => Ok((lower.clone(), upper.clone())),
            Domain::NonnegPCap { cap, .. } => Ok((vec![0.0; n], vec![*cap; n])),
            Domain::Polytope { .. } => {
                let mut lo = vec![0.0; n];
                let mut hi = vec![0.0; n];
                for i in 0..n {
                    hi[i] = self.support(&unit(n, i, 1.0))?.value;
                    lo[i] = -self.support(&unit(n, i, -1.0))?.value;
                }
                Ok((lo, hi))
            }
        }
    }
}

fn unit(n: usize, i: usize, sign: f64) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[i] = sign;
    e
}

/// The vector `a` with `‖a‖_q = 1` and `⟨a, x⟩ = ‖x‖_p`, `q` the Hölder
/// conjugate of `p`: `sign aᵢ = sign xᵢ`, `|aᵢ|^q = |xᵢ|^p / ‖x‖_p^p`.
fn holder_dual_vector(x: &[f64], p: f64) -> Vec<f64> {
    let n = x.len();
    if p == 1.0 {
        // q = ∞: the sign pattern (zeros get 0 so ⟨a, x⟩ = ‖x‖₁ still holds).
        return x
            .iter()
            .map(|v| {
                if *v > 0.0 {
                    1.0
                } else if *v < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            })
            .collect();
    }
    if p.is_infinite() {
        let i = (0..n)
            .max_by(|&i, &j| x[i].abs().total_cmp(&x[j].abs()).then(j.cmp(&i)))
            .unwrap();
        return unit(n, i, x[i].signum());
    }
    let xp = norm(x, p);
    let q = holder_conjugate(p);
    x.iter()
        .map(|v| v.signum() * (v.abs() / xp).powf(p / q))
        .collect()
}

/// Lower bound on the inscribed radius of `{x ≥ 0 : ‖x‖_p ≤ cap}` from
/// balls centred at `c·1`.
///
/// A ball of radius ρ around `c·1` stays nonnegative iff ρ ≤ c and lies in
/// the p-ball whenever `c·n^{1/p} + ρ·k ≤ cap`, where `k = max(1, n^{1/p − 1/2})`
/// bounds `‖h‖_p / ‖h‖₂`. The best such ball has ρ = c at the crossing point,
/// located by bisection.
fn p_cap_inscribed_radius(n: usize, p: f64, cap: f64) -> f64 {
    let nf = n as f64;
    let inv_p = if p.is_infinite() { 0.0 } else { 1.0 / p };
    let k = 1f64.max(nf.powf(inv_p - 0.5));
    let fits = |c: f64| c * nf.powf(inv_p) + c * k <= cap;
    let (mut lo, mut hi) = (0.0, cap);
    while hi - lo > 1e-8 * cap {
        let mid = 0.5 * (lo + hi);
        if fits(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}
