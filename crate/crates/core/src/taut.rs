//! The tautological line bundle over F P^{c-1} and its standard charts.

use num_complex::Complex64;

use crate::error::{BlowupError, Result};
use crate::field::{vec_dist, vec_norm, Field};
use crate::proj::ProjPoint;

/// A point `(line, vec)` of the tautological line bundle: `vec` lies on `line`.
#[derive(Debug, Clone)]
pub struct TautPoint {
    pub line: ProjPoint,
    /// Interleaved coordinates of the fiber vector (same field as the line).
    pub vec: Vec<f64>,
    pub field: Field,
}

impl TautPoint {
    /// Builds a tautological point, checking the incidence `vec in line`
    /// within `tol`.
    pub fn new(line: ProjPoint, vec: Vec<f64>, tol: f64) -> Result<Self> {
        let field = line.field();
        debug_assert_eq!(vec.len(), field.real_dim(line.fdim()));
        let p = TautPoint { line, vec, field };
        let r = p.incidence_residual();
        if r >= tol {
            return Err(BlowupError::MembershipViolation { residual: r, tol });
        }
        Ok(p)
    }

    /// Point of the zero section over `line`.
    pub fn zero(line: ProjPoint) -> Self {
        let field = line.field();
        let vec = field.zeros(line.fdim());
        TautPoint { line, vec, field }
    }

    /// Distance from `vec` to its projection onto the line.
    pub fn incidence_residual(&self) -> f64 {
        let n = self.line.normalize();
        let l = n.coords();
        // complex projection <v, l> / <l, l> computed componentwise
        let mut num = Complex64::new(0.0, 0.0);
        let mut den = 0.0;
        for j in 0..n.fdim() {
            let lj = self.field.get(l, j);
            let vj = self.field.get(&self.vec, j);
            num += vj * lj.conj();
            den += lj.norm_sqr();
        }
        let t = num / den;
        let proj = self.field.scale(l, t);
        vec_dist(&proj, &self.vec)
    }

    /// The scalar `t` with `vec = t * (slot-i-normalized line)`.
    pub fn fiber_scalar_at(&self, i: usize, tol: f64) -> Result<Complex64> {
        let rep = self.line.normalized_at(i, tol)?;
        // with rep_i = 1, t is just the i-th component of vec
        let _ = rep;
        Ok(self.field.get(&self.vec, i))
    }
}

/// The `i`-th standard chart: `w_j = r_j / r_i` for `j != i`, `w_i = v_i`.
///
/// Errors with `ChartMiss` when the `i`-th homogeneous coordinate vanishes.
pub fn taut_chart(p: &TautPoint, i: usize, tol: f64) -> Result<Vec<f64>> {
    let rep = p.line.normalized_at(i, tol)?;
    let c = p.line.fdim();
    let mut w = p.field.zeros(c);
    for j in 0..c {
        if j == i {
            p.field.set(&mut w, j, p.field.get(&p.vec, i));
        } else {
            p.field.set(&mut w, j, rep.component(j));
        }
    }
    Ok(w)
}

/// Inverse of the `i`-th standard chart: the line has 1 in slot `i` and `w_j`
/// in slot `j != i`; the vector is `w_i` times that representative.
pub fn taut_chart_inv(w: &[f64], i: usize, c: usize, field: Field) -> TautPoint {
    debug_assert_eq!(w.len(), field.real_dim(c));
    let mut rep = field.zeros(c);
    for j in 0..c {
        if j == i {
            field.set(&mut rep, j, Complex64::new(1.0, 0.0));
        } else {
            field.set(&mut rep, j, field.get(w, j));
        }
    }
    let line = ProjPoint::new(rep.clone(), field).expect("slot-i representative is nonzero");
    let wi = field.get(w, i);
    let vec = field.scale(&rep, wi);
    TautPoint { line, vec, field }
}

/// Projection `(line, vec) -> vec` of the bundle to the total space of F^c.
pub fn taut_project(p: &TautPoint) -> Vec<f64> {
    p.vec.clone()
}

/// Residual of the tautological transition law between charts `i` and `j`:
/// the line coordinates transform by `r_k / r_j`-ratios and the fiber
/// coordinate picks up the one-dimensional cocycle factor `r_j / r_i`.
pub fn transition_law_residual(p: &TautPoint, i: usize, j: usize, tol: f64) -> Result<f64> {
    let wi = taut_chart(p, i, tol)?;
    let wj = taut_chart(p, j, tol)?;
    let field = p.field;
    let ri = p.line.component(i);
    let rj = p.line.component(j);
    let factor = rj / ri;
    let mut worst: f64 = (field.get(&wj, j) - field.get(&wi, i) * factor).norm();
    for k in 0..p.line.fdim() {
        if k == i || k == j {
            continue;
        }
        // w^j_k = r_k / r_j = (r_k / r_i) / (r_j / r_i)
        let want = field.get(&wi, k) / factor;
        worst = worst.max((field.get(&wj, k) - want).norm());
    }
    // slot i of chart j carries r_i / r_j = 1 / factor
    let want_inv = factor.inv();
    worst = worst.max((field.get(&wj, i) - want_inv).norm());
    Ok(worst)
}

/// Injectivity witness for the identification of the bundle minus the zero
/// section with F^c minus the origin: nonzero vectors determine their line.
pub fn off_zero_projection_injective(points: &[TautPoint], tol: f64) -> bool {
    for p in points {
        if vec_norm(&p.vec) <= tol {
            continue;
        }
        let from_vec = ProjPoint::new(p.vec.clone(), p.field).expect("nonzero");
        if !from_vec.approx_eq(&p.line, 1e-6) {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::SamplePlan;
    use rand::Rng;

    const TOL: f64 = 1e-9;

    #[test]
    fn chart_values_match_ratio_formula() {
        // ([1,2],(3,6)), i = 1 (slot 0) -> (3, 2)
        let line = ProjPoint::real(&[1.0, 2.0]).unwrap();
        let p = TautPoint::new(line, vec![3.0, 6.0], TOL).unwrap();
        let w = taut_chart(&p, 0, TOL).unwrap();
        assert!(vec_dist(&w, &[3.0, 2.0]) < 1e-12);
    }

    #[test]
    fn zero_vector_on_axis_line() {
        let line = ProjPoint::real(&[0.0, 1.0]).unwrap();
        let p = TautPoint::zero(line);
        let w = taut_chart(&p, 1, TOL).unwrap();
        assert!(vec_dist(&w, &[0.0, 0.0]) < 1e-15);
        assert!(matches!(
            taut_chart(&p, 0, TOL),
            Err(BlowupError::ChartMiss { .. })
        ));
    }

    #[test]
    fn inverse_reconstruction() {
        // (2,5), i = 1 (slot 0), c = 2 -> ([1,5],(2,10)); verified forward
        let p = taut_chart_inv(&[2.0, 5.0], 0, 2, Field::Real);
        assert!(p
            .line
            .approx_eq(&ProjPoint::real(&[1.0, 5.0]).unwrap(), 1e-12));
        assert!(vec_dist(&p.vec, &[2.0, 10.0]) < 1e-12);
        let w = taut_chart(&p, 0, TOL).unwrap();
        assert!(vec_dist(&w, &[2.0, 5.0]) < 1e-12);
    }

    #[test]
    fn zero_fiber_inverse_is_axis_line() {
        let p = taut_chart_inv(&[0.0, 0.0, 0.0], 1, 3, Field::Real);
        assert!(p
            .line
            .approx_eq(&ProjPoint::real(&[0.0, 1.0, 0.0]).unwrap(), 1e-12));
        assert_eq!(p.vec, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn roundtrip_on_random_inputs() {
        let plan = SamplePlan::default();
        let mut rng = plan.rng_for(21);
        for field in [Field::Real, Field::Complex] {
            for _ in 0..500 {
                let c = 3;
                let w: Vec<f64> = (0..field.real_dim(c))
                    .map(|_| rng.random_range(-2.0..2.0))
                    .collect();
                let i = rng.random_range(0..c);
                let p = taut_chart_inv(&w, i, c, field);
                assert!(p.incidence_residual() < 1e-10);
                let back = taut_chart(&p, i, TOL).unwrap();
                assert!(vec_dist(&back, &w) < 1e-9, "field {field:?}");
            }
        }
    }

    #[test]
    fn transition_obeys_cocycle_factor() {
        let plan = SamplePlan::default();
        let mut rng = plan.rng_for(22);
        for field in [Field::Real, Field::Complex] {
            for _ in 0..200 {
                let c = 3;
                let mut rep: Vec<f64> = (0..field.real_dim(c))
                    .map(|_| rng.random_range(-1.0..1.0))
                    .collect();
                // keep both pivot components safely nonzero
                rep[0] += 1.5;
                rep[field.real_dim(1)] += 1.2;
                let line = ProjPoint::new(rep.clone(), field).unwrap();
                let t = Complex64::new(rng.random_range(-1.0..1.0), 0.0);
                let vec = field.scale(&rep, t);
                let p = TautPoint::new(line, vec, 1e-6).unwrap();
                let r = transition_law_residual(&p, 0, 1, TOL).unwrap();
                assert!(r < 1e-12);
            }
        }
    }

    #[test]
    fn projection_injective_off_zero_section() {
        let plan = SamplePlan::default();
        let mut rng = plan.rng_for(23);
        let mut pts = Vec::new();
        for _ in 0..200 {
            let w: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            pts.push(taut_chart_inv(&w, rng.random_range(0..3), 3, Field::Real));
        }
        assert!(off_zero_projection_injective(&pts, 1e-9));
    }
}
