//! Central-cut ellipsoid method `{x : (x − c)ᵀH⁻¹(x − c) ≤ 1}`.

use super::{initial_box, Cut, CuttingPlaneEngine, EngineError};
use crate::certificate::PolytopeLocalizer;
use crate::geometry::Domain;
use crate::numerics::{dot, norm2, Cholesky, Mat};

#[derive(Debug, Clone)]
pub struct Ellipsoid {
    center: Vec<f64>,
    shape: Mat,
    updates: usize,
}

impl Ellipsoid {
    /// `Ball(c, 1.01·R)` when `X` is a ball, otherwise the ball circumscribing
    /// the inflated bounding box.
    pub fn new(x: &Domain) -> Result<Self, EngineError> {
        let (center, radius) = match x {
            Domain::EuclideanBall { center, radius } => (center.clone(), 1.01 * radius),
            _ => {
                let (lo, hi) = initial_box(x)?;
                let center: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| 0.5 * (l + h)).collect();
                let half: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| 0.5 * (h - l)).collect();
                (center, norm2(&half))
            }
        };
        Ok(Self::from_ball(center, radius))
    }

    pub fn from_ball(center: Vec<f64>, radius: f64) -> Self {
        let n = center.len();
        let mut shape = Mat::identity(n);
        for i in 0..n {
            shape[(i, i)] = radius * radius;
        }
        Ellipsoid {
            center,
            shape,
            updates: 0,
        }
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn shape(&self) -> &Mat {
        &self.shape
    }

    pub fn updates(&self) -> usize {
        self.updates
    }
}

impl CuttingPlaneEngine for Ellipsoid {
    fn name(&self) -> &'static str {
        "ellipsoid"
    }

    fn dim(&self) -> usize {
        self.center.len()
    }

    fn query_point(&self) -> Vec<f64> {
        self.center.clone()
    }

    /// `c ← c − He/((n+1)√(eᵀHe))`,
    /// `H ← n²/(n²−1)·(H − 2/(n+1)·(He)(He)ᵀ/(eᵀHe))`.
    ///
    /// The cut is taken through the current center; `cut.point` only needs to
    /// match it for the cut to be valid.
    fn update(&mut self, cut: &Cut) -> Result<(), EngineError> {
        let n = self.dim();
        let e = &cut.direction;
        if e.len() != n {
            return Err(EngineError::Invalid("cut dimension".into()));
        }
        let he = self.shape.mul_vec(e);
        let ehe = dot(e, &he);
        let enorm2 = dot(e, e);
        if !(ehe > 1e-14 * enorm2) || !ehe.is_finite() {
            return Err(EngineError::DegenerateCut);
        }
        let nf = n as f64;
        let root = ehe.sqrt();
        for (c, h) in self.center.iter_mut().zip(&he) {
            *c -= h / ((nf + 1.0) * root);
        }
        if n > 1 {
            let factor = nf * nf / (nf * nf - 1.0);
            let rank_one = 2.0 / ((nf + 1.0) * ehe);
            for i in 0..n {
                for j in 0..n {
                    self.shape[(i, j)] = factor * (self.shape[(i, j)] - rank_one * he[i] * he[j]);
                }
            }
            self.shape.symmetrize();
        } else {
            // n = 1: the half-interval update.
            self.shape[(0, 0)] *= 0.25;
        }
        self.updates += 1;
        Ok(())
    }

    fn certificate_localizer(&self) -> Option<(&PolytopeLocalizer, Vec<f64>)> {
        None
    }

    fn contains(&self, x: &[f64], tol: f64) -> bool {
        let d: Vec<f64> = x.iter().zip(&self.center).map(|(a, c)| a - c).collect();
        match Cholesky::new(&self.shape) {
            Ok(chol) => chol.inv_quad_form(&d) <= 1.0 + tol,
            Err(_) => false,
        }
    }
}
