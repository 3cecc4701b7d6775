//! Chart maps with explicit inverses on box domains, numeric differentiation,
//! and adapted charts cutting out a submanifold.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand_chacha::ChaCha8Rng;

use crate::error::{BlowupError, Result};
use crate::field::{vec_dist, Field};
use crate::sample::SamplePlan;

/// Axis-aligned box; the only domain shape used by the library.
#[derive(Debug, Clone)]
pub struct BoxDomain {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl BoxDomain {
    pub fn new(intervals: &[(f64, f64)]) -> Self {
        let lo = intervals.iter().map(|&(a, _)| a).collect::<Vec<_>>();
        let hi = intervals.iter().map(|&(_, b)| b).collect::<Vec<_>>();
        assert!(lo.iter().zip(&hi).all(|(a, b)| a < b), "empty box interval");
        BoxDomain { lo, hi }
    }

    /// The cube `[-r, r]^n`.
    pub fn cube(n: usize, r: f64) -> Self {
        BoxDomain {
            lo: vec![-r; n],
            hi: vec![r; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn interval(&self, k: usize) -> (f64, f64) {
        (self.lo[k], self.hi[k])
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(v, (a, b))| *v >= *a && *v <= *b)
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| 0.5 * (a + b))
            .collect()
    }

    pub fn intersect(&self, other: &BoxDomain) -> Option<BoxDomain> {
        if self.dim() != other.dim() {
            return None;
        }
        let mut iv = Vec::with_capacity(self.dim());
        for k in 0..self.dim() {
            let a = self.lo[k].max(other.lo[k]);
            let b = self.hi[k].min(other.hi[k]);
            if a >= b {
                return None;
            }
            iv.push((a, b));
        }
        Some(BoxDomain::new(&iv))
    }

    /// Box shrunk toward its center by `factor` in every axis.
    pub fn shrink(&self, factor: f64) -> BoxDomain {
        let c = self.center();
        let iv: Vec<(f64, f64)> = (0..self.dim())
            .map(|k| {
                let h = 0.5 * (self.hi[k] - self.lo[k]) * factor;
                (c[k] - h, c[k] + h)
            })
            .collect();
        BoxDomain::new(&iv)
    }

    /// Smallest box containing all the points (padded slightly).
    pub fn bounding(points: &[Vec<f64>]) -> Option<BoxDomain> {
        let first = points.first()?;
        let n = first.len();
        let mut lo = vec![f64::INFINITY; n];
        let mut hi = vec![f64::NEG_INFINITY; n];
        for p in points {
            for k in 0..n {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let iv: Vec<(f64, f64)> = (0..n)
            .map(|k| {
                let pad = 1e-9 + 1e-6 * (hi[k] - lo[k]).abs();
                (lo[k] - pad, hi[k] + pad)
            })
            .collect();
        Some(BoxDomain::new(&iv))
    }

    /// Restriction to the tail coordinates `[from..]`.
    pub fn tail(&self, from: usize) -> BoxDomain {
        let iv: Vec<(f64, f64)> = (from..self.dim()).map(|k| self.interval(k)).collect();
        BoxDomain::new(&iv)
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        use rand::Rng;
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| rng.random_range(*a..*b))
            .collect()
    }
}

pub type MapFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A smooth map with an explicitly supplied inverse and a box domain in the
/// source coordinates. The atom from which all manifolds are described here.
#[derive(Clone)]
pub struct ChartFn {
    pub dim_in: usize,
    pub dim_out: usize,
    forward: MapFn,
    inverse: MapFn,
    pub domain: BoxDomain,
}

impl std::fmt::Debug for ChartFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ChartFn")
            .field("dim_in", &self.dim_in)
            .field("dim_out", &self.dim_out)
            .field("domain", &self.domain)
            .finish()
    }
}

impl ChartFn {
    pub fn new<F, G>(dim_in: usize, dim_out: usize, domain: BoxDomain, forward: F, inverse: G) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        assert_eq!(domain.dim(), dim_in);
        ChartFn {
            dim_in,
            dim_out,
            forward: Arc::new(forward),
            inverse: Arc::new(inverse),
            domain,
        }
    }

    pub fn identity(n: usize, domain: BoxDomain) -> Self {
        ChartFn::new(n, n, domain, |x| x.to_vec(), |x| x.to_vec())
    }

    /// Chart given by an invertible matrix.
    pub fn linear(a: DMatrix<f64>, domain: BoxDomain) -> Self {
        let n = a.nrows();
        assert_eq!(n, a.ncols());
        let inv = a
            .clone()
            .try_inverse()
            .expect("linear chart requires an invertible matrix");
        ChartFn::new(
            n,
            n,
            domain,
            move |x| crate::field::mat_apply(&a, x),
            move |y| crate::field::mat_apply(&inv, y),
        )
    }

    /// Forward evaluation (no domain check).
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (self.forward)(x)
    }

    /// Forward evaluation, erroring with `DomainExit` outside the box.
    pub fn apply_checked(&self, x: &[f64]) -> Result<Vec<f64>> {
        if !self.domain.contains(x) {
            return Err(BlowupError::DomainExit {
                context: "forward evaluation",
            });
        }
        Ok(self.apply(x))
    }

    /// Inverse evaluation (no domain check on the target side).
    pub fn apply_inv(&self, y: &[f64]) -> Vec<f64> {
        (self.inverse)(y)
    }

    pub fn roundtrip_residual(&self, x: &[f64]) -> f64 {
        vec_dist(&self.apply_inv(&self.apply(x)), x)
    }

    /// Maximum roundtrip residual over the plan's samples of the domain box.
    /// Errors with `InverseMismatch` above `tau_rt`.
    pub fn check_roundtrip(&self, plan: &SamplePlan, salt: u64) -> Result<f64> {
        let mut rng = plan.rng_for(salt);
        let mut worst = 0.0f64;
        for _ in 0..plan.interior.max(100) {
            let x = self.domain.sample(&mut rng);
            worst = worst.max(self.roundtrip_residual(&x));
        }
        if worst >= plan.tols.roundtrip {
            return Err(BlowupError::InverseMismatch {
                residual: worst,
                tol: plan.tols.roundtrip,
            });
        }
        Ok(worst)
    }
}

/// Central-difference Jacobian with entries `(f_i(x+h e_j) - f_i(x-h e_j)) / 2h`.
/// Errors with `DomainExit` if a stencil point leaves the chart domain.
pub fn numeric_jacobian(f: &ChartFn, x: &[f64], h: f64) -> Result<DMatrix<f64>> {
    let mut jac = DMatrix::zeros(f.dim_out, f.dim_in);
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    for j in 0..f.dim_in {
        xp[j] = x[j] + h;
        xm[j] = x[j] - h;
        if !f.domain.contains(&xp) || !f.domain.contains(&xm) {
            return Err(BlowupError::DomainExit {
                context: "jacobian stencil",
            });
        }
        let fp = f.apply(&xp);
        let fm = f.apply(&xm);
        for i in 0..f.dim_out {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
        xp[j] = x[j];
        xm[j] = x[j];
    }
    Ok(jac)
}

/// Fourth-order central-difference block Jacobian of `map` at `x`, with respect
/// to the coordinates in `cols`. Used by the quadrature kernels, which need
/// more accuracy headroom than a plain central stencil provides.
pub fn jacobian_block<F>(map: F, x: &[f64], dim_out: usize, cols: std::ops::Range<usize>, h: f64) -> DMatrix<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let ncols = cols.len();
    let mut jac = DMatrix::zeros(dim_out, ncols);
    let mut xs = x.to_vec();
    for (jc, j) in cols.enumerate() {
        let x0 = xs[j];
        let mut eval = |t: f64| {
            xs[j] = x0 + t;
            let v = map(&xs);
            xs[j] = x0;
            v
        };
        let f1 = eval(h);
        let f_1 = eval(-h);
        let f2 = eval(2.0 * h);
        let f_2 = eval(-2.0 * h);
        for i in 0..dim_out {
            jac[(i, jc)] = (8.0 * (f1[i] - f_1[i]) - (f2[i] - f_2[i])) / (12.0 * h);
        }
    }
    jac
}

/// An adapted chart: a chart map into F^c x R^m whose first `c` field
/// coordinates cut out the submanifold Y.
#[derive(Debug, Clone)]
pub struct YChart {
    pub chart: ChartFn,
    /// Codimension over the field.
    pub c: usize,
    /// Dimension of Y.
    pub m: usize,
    pub field: Field,
}

impl YChart {
    pub fn new(chart: ChartFn, c: usize, m: usize, field: Field) -> Self {
        assert_eq!(chart.dim_out, field.real_dim(c) + m);
        YChart { chart, c, m, field }
    }

    /// Real slots occupied by the normal coordinates.
    pub fn cs(&self) -> usize {
        self.field.real_dim(self.c)
    }

    pub fn dim(&self) -> usize {
        self.cs() + self.m
    }

    /// First `c` field coordinates of the chart at an ambient point.
    pub fn normal_coords(&self, x: &[f64]) -> Vec<f64> {
        self.chart.apply(x)[..self.cs()].to_vec()
    }

    /// Tail coordinates (the R^m factor) of the chart at an ambient point.
    pub fn tail_coords(&self, x: &[f64]) -> Vec<f64> {
        self.chart.apply(x)[self.cs()..].to_vec()
    }

    /// Sampled check that the chart cuts out Y exactly: ambient points
    /// satisfying `on_y` have vanishing normal coordinates and conversely.
    pub fn check_cuts_out<F>(&self, on_y: F, plan: &SamplePlan, salt: u64) -> Result<f64>
    where
        F: Fn(&[f64]) -> bool,
    {
        let mut rng = plan.rng_for(salt);
        let mut worst = 0.0f64;
        for _ in 0..plan.interior.max(100) {
            let x = self.chart.domain.sample(&mut rng);
            let r = self.normal_coords(&x);
            let rn = crate::field::vec_norm(&r);
            if on_y(&x) {
                worst = worst.max(rn);
            } else if rn < plan.tols.identity {
                return Err(BlowupError::ContractViolation(format!(
                    "off-Y point has vanishing normal coordinates (|r| = {rn:.3e})"
                )));
            }
        }
        if worst >= plan.tols.identity {
            return Err(BlowupError::ContractViolation(format!(
                "on-Y point has nonzero normal coordinates (residual {worst:.3e})"
            )));
        }
        Ok(worst)
    }
}

/// Composite `a o b^{-1}` on the image of the overlap of two adapted charts.
///
/// The returned chart's domain box is the bounding box of the sampled images
/// of the ambient overlap under `b`. Errors with `EmptyOverlap` when the
/// domains share no sampled point and `InverseMismatch` when either chart
/// fails its roundtrip tolerance on the overlap.
pub fn overlap_map(a: &YChart, b: &YChart, plan: &SamplePlan) -> Result<ChartFn> {
    let common = a
        .chart
        .domain
        .intersect(&b.chart.domain)
        .ok_or(BlowupError::EmptyOverlap)?;
    let mut rng = plan.rng_for(0x4f76_6572);
    let samples = plan.sample_box(&common, plan.interior.max(100), &mut rng);
    if samples.is_empty() {
        return Err(BlowupError::EmptyOverlap);
    }
    let mut worst = 0.0f64;
    for x in &samples {
        worst = worst.max(a.chart.roundtrip_residual(x));
        worst = worst.max(b.chart.roundtrip_residual(x));
    }
    if worst >= plan.tols.roundtrip {
        return Err(BlowupError::InverseMismatch {
            residual: worst,
            tol: plan.tols.roundtrip,
        });
    }
    let images: Vec<Vec<f64>> = samples.iter().map(|x| b.chart.apply(x)).collect();
    let domain = BoxDomain::bounding(&images).ok_or(BlowupError::EmptyOverlap)?;
    let af = a.chart.clone();
    let bf = b.chart.clone();
    let af2 = a.chart.clone();
    let bf2 = b.chart.clone();
    Ok(ChartFn::new(
        a.dim(),
        a.dim(),
        domain,
        move |w| af.apply(&bf.apply_inv(w)),
        move |w| bf2.apply(&af2.apply_inv(w)),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::SamplePlan;

    fn plan() -> SamplePlan {
        SamplePlan::default()
    }

    #[test]
    fn identity_overlap_is_identity() {
        let dom = BoxDomain::cube(2, 1.0);
        let a = YChart::new(ChartFn::identity(2, dom.clone()), 2, 0, Field::Real);
        let b = YChart::new(ChartFn::identity(2, dom), 2, 0, Field::Real);
        let o = overlap_map(&a, &b, &plan()).unwrap();
        let x = [0.3, -0.4];
        assert!(vec_dist(&o.apply(&x), &x) < 1e-15);
    }

    #[test]
    fn nonlinear_overlap_against_identity_is_the_chart() {
        // a(r,s) = (r(1+s^2), s), b = identity, c = m = 1
        let dom = BoxDomain::cube(2, 1.0);
        let a = YChart::new(
            ChartFn::new(
                2,
                2,
                dom.clone(),
                |x| vec![x[0] * (1.0 + x[1] * x[1]), x[1]],
                |w| vec![w[0] / (1.0 + w[1] * w[1]), w[1]],
            ),
            1,
            1,
            Field::Real,
        );
        let b = YChart::new(ChartFn::identity(2, dom), 1, 1, Field::Real);
        let o = overlap_map(&a, &b, &plan()).unwrap();
        let x = [0.5, 0.7];
        let want = [0.5 * (1.0 + 0.49), 0.7];
        assert!(vec_dist(&o.apply(&x), &want) < 1e-15);
    }

    #[test]
    fn rotation_overlap_roundtrips() {
        let dom = BoxDomain::cube(2, 1.0);
        let rot = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let a = YChart::new(ChartFn::linear(rot.clone(), dom.clone()), 2, 0, Field::Real);
        let b = YChart::new(ChartFn::identity(2, dom), 2, 0, Field::Real);
        let o = overlap_map(&a, &b, &plan()).unwrap();
        let mut rng = plan().rng_for(99);
        for _ in 0..100 {
            let x = o.domain.sample(&mut rng);
            assert!(o.roundtrip_residual(&x) < 1e-12);
            let img = o.apply(&x);
            let want = crate::field::mat_apply(&rot, &x);
            assert!(vec_dist(&img, &want) < 1e-14);
        }
    }

    #[test]
    fn disjoint_domains_are_empty_overlap() {
        let a = YChart::new(
            ChartFn::identity(2, BoxDomain::new(&[(-1.0, -0.5), (-1.0, 1.0)])),
            2,
            0,
            Field::Real,
        );
        let b = YChart::new(
            ChartFn::identity(2, BoxDomain::new(&[(0.5, 1.0), (-1.0, 1.0)])),
            2,
            0,
            Field::Real,
        );
        assert!(matches!(
            overlap_map(&a, &b, &plan()),
            Err(BlowupError::EmptyOverlap)
        ));
    }

    #[test]
    fn jacobian_of_identity_is_identity() {
        let f = ChartFn::identity(3, BoxDomain::cube(3, 1.0));
        let j = numeric_jacobian(&f, &[0.1, 0.2, -0.3], 1e-5).unwrap();
        assert!((&j - DMatrix::<f64>::identity(3, 3)).norm() < 1e-10);
    }

    #[test]
    fn jacobian_matches_closed_form_derivative() {
        // f(v) = v + v^2 in one dimension, f'(0) = 1
        let f = ChartFn::new(
            1,
            1,
            BoxDomain::cube(1, 1.0),
            |x| vec![x[0] + x[0] * x[0]],
            |w| vec![0.5 * (-1.0 + (1.0 + 4.0 * w[0]).sqrt())],
        );
        let j = numeric_jacobian(&f, &[0.0], 1e-5).unwrap();
        assert!((j[(0, 0)] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn jacobian_of_linear_map_is_its_matrix() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, -0.5, 3.0]);
        let f = ChartFn::linear(a.clone(), BoxDomain::cube(2, 2.0));
        let mut rng = plan().rng_for(5);
        for _ in 0..20 {
            let x = BoxDomain::cube(2, 1.0).sample(&mut rng);
            let j = numeric_jacobian(&f, &x, 1e-5).unwrap();
            assert!((&j - &a).norm() < 1e-10);
        }
    }

    #[test]
    fn jacobian_stencil_respects_domain() {
        let f = ChartFn::identity(1, BoxDomain::cube(1, 1.0));
        assert!(matches!(
            numeric_jacobian(&f, &[1.0], 1e-5),
            Err(BlowupError::DomainExit { .. })
        ));
    }

    #[test]
    fn composition_jacobian_is_product() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        let f = ChartFn::new(
            2,
            2,
            BoxDomain::cube(2, 2.0),
            |x| vec![x[0] + x[1] * x[1], x[1]],
            |w| vec![w[0] - w[1] * w[1], w[1]],
        );
        let g = ChartFn::linear(a.clone(), BoxDomain::cube(2, 2.0));
        let fg = {
            let (ff, gg) = (f.clone(), g.clone());
            ChartFn::new(2, 2, BoxDomain::cube(2, 0.5), move |x| ff.apply(&gg.apply(x)), |w| w.to_vec())
        };
        let x = [0.2, -0.1];
        let jg = numeric_jacobian(&g, &x, 1e-5).unwrap();
        let jf = numeric_jacobian(&f, &crate::field::mat_apply(&a, &x), 1e-5).unwrap();
        let jfg = numeric_jacobian(&fg, &x, 1e-5).unwrap();
        assert!((&jfg - jf * jg).norm() < 1e-8);
    }
}
