//! Projective points over R or C with a canonical normal form.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{BlowupError, Result};
use crate::field::{mat_apply, vec_dist, vec_norm, Field};

/// A point of F P^{n-1}: a nonzero homogeneous coordinate vector over F.
///
/// The canonical normal form rescales so the largest-magnitude component
/// becomes 1 (for R, the signed entry; for C, positive real 1). Equality is
/// tested in normal form within a tolerance.
#[derive(Debug, Clone)]
pub struct ProjPoint {
    coords: Vec<f64>,
    field: Field,
}

impl ProjPoint {
    /// Builds a projective point; fails with `ZeroVector` on a zero or
    /// non-finite coordinate vector.
    pub fn new(coords: Vec<f64>, field: Field) -> Result<Self> {
        if !coords.iter().all(|x| x.is_finite()) || vec_norm(&coords) == 0.0 {
            return Err(BlowupError::ZeroVector);
        }
        debug_assert_eq!(coords.len() % field.slots(), 0);
        Ok(ProjPoint { coords, field })
    }

    /// Real homogeneous line through `v`.
    pub fn real(coords: &[f64]) -> Result<Self> {
        Self::new(coords.to_vec(), Field::Real)
    }

    pub fn field(&self) -> Field {
        self.field
    }

    /// Number of field components.
    pub fn fdim(&self) -> usize {
        self.field.components(&self.coords)
    }

    /// Interleaved homogeneous coordinates of the stored representative.
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// The `j`-th homogeneous component.
    pub fn component(&self, j: usize) -> Complex64 {
        self.field.get(&self.coords, j)
    }

    /// Index of the largest-magnitude component.
    pub fn pivot(&self) -> usize {
        let mut best = 0;
        let mut best_mag = 0.0;
        for j in 0..self.fdim() {
            let mag = self.component(j).norm();
            if mag > best_mag {
                best_mag = mag;
                best = j;
            }
        }
        best
    }

    /// Canonical normal form: pivot component rescaled to 1. Idempotent.
    pub fn normalize(&self) -> ProjPoint {
        let pivot = self.component(self.pivot());
        ProjPoint {
            coords: self.field.scale(&self.coords, pivot.inv()),
            field: self.field,
        }
    }

    /// Representative rescaled so that component `i` equals 1.
    /// Fails with `ChartMiss` when component `i` is numerically zero.
    pub fn normalized_at(&self, i: usize, tol: f64) -> Result<ProjPoint> {
        let norm = self.normalize();
        let zi = norm.component(i);
        if zi.norm() <= tol {
            return Err(BlowupError::ChartMiss {
                chart: format!("slot {i}"),
                reason: format!("homogeneous component {i} has magnitude {:.3e}", zi.norm()),
            });
        }
        Ok(ProjPoint {
            coords: self.field.scale(&norm.coords, zi.inv()),
            field: self.field,
        })
    }

    /// Equality of projective points in normal form within `tol`.
    pub fn approx_eq(&self, other: &ProjPoint, tol: f64) -> bool {
        if self.field != other.field || self.coords.len() != other.coords.len() {
            return false;
        }
        let a = self.normalize();
        // Rescale `other` against a's pivot so near-tied pivots cannot flip the comparison.
        let p = a.pivot();
        let zp = other.component(p);
        if zp.norm() < 1e-300 {
            return false;
        }
        let b = ProjPoint {
            coords: other.field.scale(&other.coords, zp.inv()),
            field: other.field,
        };
        vec_dist(&a.coords, &b.coords) < tol
    }

    /// Image line under a real matrix acting on the interleaved coordinates.
    /// Fails with `CollapsedLine` when the image is numerically zero relative
    /// to the input scale.
    pub fn map(&self, m: &DMatrix<f64>) -> Result<ProjPoint> {
        let image = mat_apply(m, &self.coords);
        let norm = vec_norm(&image);
        if norm <= 1e-12 * vec_norm(&self.coords).max(1.0) {
            return Err(BlowupError::CollapsedLine { norm });
        }
        ProjPoint::new(image, self.field)
    }
}

/// Canonical normal form of a projective point (see [`ProjPoint::normalize`]).
pub fn proj_normalize(p: &ProjPoint) -> ProjPoint {
    p.normalize()
}
