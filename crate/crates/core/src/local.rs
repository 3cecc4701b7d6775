//! Local construction of the F-blowup from an atlas of adapted charts:
//! integral extraction of the matrix factors h, atlas verification, blowup
//! charts, transition maps, cocycle checks, blowdown, and the induced
//! normal-bundle trivializations.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::chart::{jacobian_block, overlap_map, BoxDomain, ChartFn, YChart};
use crate::error::{BlowupError, Result};
use crate::field::{complex_linearity_defect, mat_apply, vec_dist, vec_norm, Field};
use crate::proj::ProjPoint;
use crate::quadrature::{GaussLegendre, NODE_LADDER};
use crate::sample::SamplePlan;
use crate::taut::TautPoint;

/// Matrix factor of an overlap map: chart coordinates `(r, s)` to the real
/// form of a c x c matrix over the field.
pub type HMap = Arc<dyn Fn(&[f64]) -> Result<DMatrix<f64>> + Send + Sync>;

/// Finite-difference step for the quadrature integrand Jacobians.
const FD_STEP: f64 = 1e-3;

/// Extracts the matrix factor `h` of an overlap map by integrating its
/// normal-block Jacobian along rays: `h(r, s) = int_0^1 d_r phi(t r, s) dt`,
/// so that `h(r, s) r` reproduces the first `c` components of the overlap.
///
/// The quadrature starts at 8 Gauss-Legendre nodes and doubles until the
/// factor identity holds within `tau_id` (or fails with `QuadratureFail` at
/// 256 nodes). Fails with `SliceViolation` when the overlap does not preserve
/// the zero slice.
pub fn hadamard_h(
    overlap: &ChartFn,
    c: usize,
    m: usize,
    field: Field,
    plan: &SamplePlan,
) -> Result<HMap> {
    let cs = field.real_dim(c);
    debug_assert_eq!(cs + m, overlap.dim_in);
    // slice check: r = 0 must map to r = 0
    let mut rng = plan.rng_for(0x511c);
    let mut worst = 0.0f64;
    for _ in 0..plan.on_y.max(20) {
        let mut x = overlap.domain.sample(&mut rng);
        for k in 0..cs {
            x[k] = 0.0;
        }
        let y = overlap.apply(&x);
        worst = worst.max(vec_norm(&y[..cs]));
    }
    if worst >= plan.tols.identity {
        return Err(BlowupError::SliceViolation { residual: worst });
    }
    let ov = overlap.clone();
    let tol = plan.tols.identity;
    Ok(Arc::new(move |x: &[f64]| hadamard_at(&ov, cs, x, tol)))
}

/// One-point integral factor extraction (see [`hadamard_h`]).
pub fn hadamard_at(overlap: &ChartFn, cs: usize, x: &[f64], tol: f64) -> Result<DMatrix<f64>> {
    let r = &x[..cs];
    let target = overlap.apply(x);
    let mut best: Option<(DMatrix<f64>, f64)> = None;
    for &n in NODE_LADDER.iter() {
        let rule = GaussLegendre::unit(n);
        let mut h = DMatrix::zeros(cs, cs);
        for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
            let mut xt = x.to_vec();
            for k in 0..cs {
                xt[k] = t * r[k];
            }
            let block = jacobian_block(
                |p| overlap.apply(p)[..cs].to_vec(),
                &xt,
                cs,
                0..cs,
                FD_STEP,
            );
            h += w * block;
        }
        let residual = vec_dist(&mat_apply(&h, r), &target[..cs]);
        if residual < tol {
            return Ok(h);
        }
        match &best {
            Some((_, r0)) if *r0 <= residual => {}
            _ => best = Some((h, residual)),
        }
    }
    let (_, residual) = best.expect("ladder is nonempty");
    Err(BlowupError::QuadratureFail {
        residual,
        tol,
        nodes: *NODE_LADDER.last().unwrap(),
    })
}

/// One overlap of an atlas: the composite chart map and its matrix factor.
pub struct AtlasOverlap {
    pub map: ChartFn,
    pub h: HMap,
}

/// An F-atlas: adapted charts with matrix factors on every ordered overlap.
///
/// For a real atlas the factors default to the integral extraction; complex
/// atlases must supply them (ray integration of the real Jacobian yields only
/// a real-linear factor, while complex-linearity is an atlas hypothesis).
pub struct FAtlas {
    pub charts: Vec<YChart>,
    pub c: usize,
    pub m: usize,
    pub field: Field,
    overlaps: BTreeMap<(usize, usize), AtlasOverlap>,
    /// Region of Y (tail coordinates) the atlas is required to cover, if any.
    pub y_extent: Option<BoxDomain>,
}

impl FAtlas {
    /// Real atlas with integral-extracted factors.
    pub fn from_charts(charts: Vec<YChart>, plan: &SamplePlan) -> Result<Self> {
        Self::build(charts, BTreeMap::new(), plan)
    }

    /// Atlas with explicitly supplied factors for some or all ordered pairs.
    /// Complex atlases must cover every overlapping pair.
    pub fn with_h_maps(
        charts: Vec<YChart>,
        h_maps: BTreeMap<(usize, usize), HMap>,
        plan: &SamplePlan,
    ) -> Result<Self> {
        Self::build(charts, h_maps, plan)
    }

    fn build(
        charts: Vec<YChart>,
        mut h_maps: BTreeMap<(usize, usize), HMap>,
        plan: &SamplePlan,
    ) -> Result<Self> {
        let first = charts.first().ok_or_else(|| {
            BlowupError::ContractViolation("atlas needs at least one chart".into())
        })?;
        let (c, m, field) = (first.c, first.m, first.field);
        if charts.iter().any(|ch| ch.c != c || ch.m != m || ch.field != field) {
            return Err(BlowupError::ContractViolation(
                "atlas charts must share c, m, and field".into(),
            ));
        }
        let mut overlaps = BTreeMap::new();
        for a in 0..charts.len() {
            for b in 0..charts.len() {
                let map = match overlap_map(&charts[a], &charts[b], plan) {
                    Ok(map) => map,
                    Err(BlowupError::EmptyOverlap) => continue,
                    Err(e) => return Err(e),
                };
                let h = match h_maps.remove(&(a, b)) {
                    Some(h) => h,
                    None => {
                        if field == Field::Complex {
                            return Err(BlowupError::ContractViolation(format!(
                                "complex atlas must supply h for overlap ({a}, {b})"
                            )));
                        }
                        hadamard_h(&map, c, m, field, plan)?
                    }
                };
                overlaps.insert((a, b), AtlasOverlap { map, h });
            }
        }
        Ok(FAtlas {
            charts,
            c,
            m,
            field,
            overlaps,
            y_extent: None,
        })
    }

    pub fn cs(&self) -> usize {
        self.field.real_dim(self.c)
    }

    pub fn dim(&self) -> usize {
        self.cs() + self.m
    }

    pub fn len(&self) -> usize {
        self.charts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.charts.is_empty()
    }

    pub fn overlap(&self, a: usize, b: usize) -> Option<&AtlasOverlap> {
        self.overlaps.get(&(a, b))
    }

    /// Ordered pairs with a nonempty overlap.
    pub fn overlap_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.overlaps.keys().copied()
    }

    /// Matrix factor of the overlap `a o b^{-1}` at chart-b coordinates.
    pub fn h_at(&self, a: usize, b: usize, coords: &[f64]) -> Result<DMatrix<f64>> {
        let ov = self.overlaps.get(&(a, b)).ok_or(BlowupError::EmptyOverlap)?;
        (ov.h)(coords)
    }

    /// Declares the Y region (tail-coordinate box) the charts must cover.
    pub fn with_y_extent(mut self, y: BoxDomain) -> Self {
        self.y_extent = Some(y);
        self
    }

    /// Ambient sample points of the overlap of charts `a` and `b`.
    pub fn overlap_samples(
        &self,
        a: usize,
        b: usize,
        plan: &SamplePlan,
        salt: u64,
    ) -> Vec<Vec<f64>> {
        let Some(common) = self.charts[a]
            .chart
            .domain
            .intersect(&self.charts[b].chart.domain)
        else {
            return Vec::new();
        };
        let cs = self.cs();
        let samples = plan.ambient_samples(&common, cs, salt ^ ((a as u64) << 32) ^ b as u64);
        samples.all().cloned().collect()
    }
}

/// Verification report for an F-atlas.
#[derive(Debug, Clone, serde::Serialize)]
pub struct FAtlasReport {
    /// Max residual of the factor identity over all ordered overlaps.
    pub h_identity_max: f64,
    /// Min singular value of `h(0, s)` over sampled on-Y points.
    pub min_singular_on_y: f64,
    /// Max complex-linearity defect of sampled factor values (0 for R).
    pub complex_linearity_max: f64,
    /// Whether the charts cover the declared Y extent on samples.
    pub cover_ok: bool,
    pub pairs_checked: usize,
    pub points_checked: usize,
    pub pass: bool,
}

/// Checks the factor identity, on-Y invertibility of the factors, and (over C)
/// complex-linearity of the factor values, over stratified overlap samples.
pub fn verify_f_atlas(atlas: &FAtlas, plan: &SamplePlan) -> FAtlasReport {
    let cs = atlas.cs();
    let mut h_identity_max = 0.0f64;
    let mut min_singular = f64::INFINITY;
    let mut lin_defect = 0.0f64;
    let mut pairs = 0usize;
    let mut points = 0usize;
    for (a, b) in atlas.overlap_pairs().collect::<Vec<_>>() {
        pairs += 1;
        let ov = atlas.overlap(a, b).unwrap();
        for x in atlas.overlap_samples(a, b, plan, 0xA71A5) {
            let coords = atlas.charts[b].chart.apply(&x);
            let r = &coords[..cs];
            let h = match (ov.h)(&coords) {
                Ok(h) => h,
                Err(_) => {
                    h_identity_max = f64::INFINITY;
                    continue;
                }
            };
            points += 1;
            let image = ov.map.apply(&coords);
            h_identity_max = h_identity_max.max(vec_dist(&mat_apply(&h, r), &image[..cs]));
            lin_defect = lin_defect.max(complex_linearity_defect(atlas.field, &h));
            if vec_norm(r) < plan.tols.identity {
                let sv = h.clone().singular_values();
                min_singular = min_singular.min(sv[sv.len() - 1]);
            }
        }
    }
    let cover_ok = match &atlas.y_extent {
        None => true,
        Some(y) => {
            let mut rng = plan.rng_for(0xC04E);
            let mut ok = true;
            for _ in 0..plan.on_y.max(50) {
                let s = y.sample(&mut rng);
                let covered = atlas.charts.iter().any(|ch| {
                    let mut x = vec![0.0; atlas.dim()];
                    x[cs..].copy_from_slice(&s);
                    ch.chart.domain.contains(&x)
                });
                ok &= covered;
            }
            ok
        }
    };
    let pass = h_identity_max < plan.tols.identity
        && min_singular > 1e-6
        && (atlas.field == Field::Real || lin_defect < plan.tols.identity)
        && cover_ok;
    FAtlasReport {
        h_identity_max,
        min_singular_on_y: if min_singular.is_finite() {
            min_singular
        } else {
            1.0
        },
        complex_linearity_max: lin_defect,
        cover_ok,
        pairs_checked: pairs,
        points_checked: points,
        pass,
    }
}

/// A point of the blowup built from an atlas: either an ambient point off Y
/// carried by some chart, or a chart-borne pair (line, base point).
#[derive(Debug, Clone)]
pub enum BlowupPoint {
    XSide {
        chart: usize,
        point: Vec<f64>,
    },
    Chart {
        chart: usize,
        line: ProjPoint,
        base: Vec<f64>,
    },
}

/// The blowup of the ambient box along Y determined by an atlas, presented as
/// the chart family with lazy transitions; equality of points is
/// transition-then-compare.
pub struct BlowupSpace {
    pub atlas: FAtlas,
    tol: f64,
}

impl BlowupSpace {
    pub fn new(atlas: FAtlas, plan: &SamplePlan) -> Self {
        BlowupSpace {
            atlas,
            tol: plan.tols.identity,
        }
    }

    /// Builds a chart-borne point, checking the incidence of the normal
    /// coordinates of the base with the line.
    pub fn point(&self, chart: usize, line: ProjPoint, base: Vec<f64>) -> Result<BlowupPoint> {
        let ych = &self.atlas.charts[chart];
        let r = ych.normal_coords(&base);
        if vec_norm(&r) > 0.0 {
            let p = TautPoint::new(line.clone(), r, f64::INFINITY)?;
            let res = p.incidence_residual();
            if res >= self.tol {
                return Err(BlowupError::MembershipViolation {
                    residual: res,
                    tol: self.tol,
                });
            }
        }
        Ok(BlowupPoint::Chart { chart, line, base })
    }

    /// Lift of an ambient point off Y into chart `alpha`.
    pub fn lift(&self, alpha: usize, x: &[f64]) -> Result<BlowupPoint> {
        let r = self.atlas.charts[alpha].normal_coords(x);
        let line = ProjPoint::new(r, self.atlas.field)?;
        Ok(BlowupPoint::Chart {
            chart: alpha,
            line,
            base: x.to_vec(),
        })
    }

    /// Blowup chart: ratios of the line in the slots away from `i`, chart
    /// values of the base in slot `i` and the tail.
    pub fn chart_coords(&self, p: &BlowupPoint, i: usize) -> Result<Vec<f64>> {
        let BlowupPoint::Chart { chart, line, base } = p else {
            return Err(BlowupError::ChartMiss {
                chart: format!("blowup chart {i}"),
                reason: "ambient-side point".into(),
            });
        };
        let atlas = &self.atlas;
        let field = atlas.field;
        let rep = line.normalized_at(i, self.tol)?;
        let coords = atlas.charts[*chart].chart.apply(base);
        let cs = atlas.cs();
        let mut w = vec![0.0; atlas.dim()];
        for j in 0..atlas.c {
            if j == i {
                let vi = field.get(&coords[..cs], i);
                field.set(&mut w[..cs], j, vi);
            } else {
                field.set(&mut w[..cs], j, rep.component(j));
            }
        }
        w[cs..].copy_from_slice(&coords[cs..]);
        Ok(w)
    }

    /// Inverse blowup chart: reconstructs the line and the base point from
    /// chart coordinates.
    pub fn chart_point(&self, alpha: usize, i: usize, w: &[f64]) -> Result<BlowupPoint> {
        let atlas = &self.atlas;
        let field = atlas.field;
        let cs = atlas.cs();
        let mut rep = field.zeros(atlas.c);
        for j in 0..atlas.c {
            if j == i {
                field.set(&mut rep, j, num_complex::Complex64::new(1.0, 0.0));
            } else {
                field.set(&mut rep, j, field.get(&w[..cs], j));
            }
        }
        let wi = field.get(&w[..cs], i);
        let fiber = field.scale(&rep, wi);
        let mut coords = vec![0.0; atlas.dim()];
        coords[..cs].copy_from_slice(&fiber);
        coords[cs..].copy_from_slice(&w[cs..]);
        let base = atlas.charts[alpha].chart.apply_inv(&coords);
        let line = ProjPoint::new(rep, field)?;
        Ok(BlowupPoint::Chart {
            chart: alpha,
            line,
            base,
        })
    }

    /// Transition of a chart-borne point into chart `a`: the line moves by the
    /// matrix factor at the base point, the base point is unchanged.
    pub fn transition(&self, a: usize, p: &BlowupPoint) -> Result<BlowupPoint> {
        match p {
            BlowupPoint::XSide { point, .. } => Ok(BlowupPoint::XSide {
                chart: a,
                point: point.clone(),
            }),
            BlowupPoint::Chart { chart: b, line, base } => {
                if a == *b {
                    return Ok(p.clone());
                }
                let coords = self.atlas.charts[*b].chart.apply(base);
                let h = self.atlas.h_at(a, *b, &coords)?;
                let moved = line.map(&h)?;
                Ok(BlowupPoint::Chart {
                    chart: a,
                    line: moved,
                    base: base.clone(),
                })
            }
        }
    }

    /// Blowdown to the ambient manifold.
    pub fn blowdown(&self, p: &BlowupPoint) -> Vec<f64> {
        match p {
            BlowupPoint::XSide { point, .. } => point.clone(),
            BlowupPoint::Chart { base, .. } => base.clone(),
        }
    }

    /// Equality of blowup points: transition into a common chart, compare the
    /// line in normal form and the base within tolerance.
    pub fn approx_eq(&self, p: &BlowupPoint, q: &BlowupPoint, tol: f64) -> bool {
        match (p, q) {
            (BlowupPoint::XSide { point: x, .. }, BlowupPoint::XSide { point: y, .. }) => {
                vec_dist(x, y) < tol
            }
            (BlowupPoint::Chart { chart, .. }, _) => match self.transition(*chart, q) {
                Ok(BlowupPoint::Chart { line: lq, base: bq, .. }) => {
                    let BlowupPoint::Chart { line: lp, base: bp, .. } = p else {
                        unreachable!()
                    };
                    vec_dist(bp, &bq) < tol && lp.approx_eq(&lq, tol)
                }
                _ => false,
            },
            (BlowupPoint::XSide { .. }, BlowupPoint::Chart { .. }) => self.approx_eq(q, p, tol),
        }
    }

    /// Max cocycle residual over sampled triple-overlap points: transitioning
    /// `c -> b -> a` must agree with `c -> a` directly. Off-Y points use
    /// lifted lines; on-Y points carry random exceptional lines.
    pub fn cocycle_residual(
        &self,
        a: usize,
        b: usize,
        c: usize,
        plan: &SamplePlan,
        samples: usize,
    ) -> Result<f64> {
        let atlas = &self.atlas;
        let dom = atlas.charts[a]
            .chart
            .domain
            .intersect(&atlas.charts[b].chart.domain)
            .and_then(|d| d.intersect(&atlas.charts[c].chart.domain))
            .ok_or(BlowupError::EmptyOverlap)?;
        let mut rng =
            plan.rng_for((0xC0C << 12) | ((a as u64) << 8) | ((b as u64) << 4) | c as u64);
        let mut worst = 0.0f64;
        let compare = |p: &BlowupPoint| -> Result<f64> {
            let direct = self.transition(a, p)?;
            let via = self.transition(a, &self.transition(b, p)?)?;
            let (
                BlowupPoint::Chart { line: ld, .. },
                BlowupPoint::Chart { line: lv, .. },
            ) = (&direct, &via)
            else {
                unreachable!()
            };
            Ok(vec_dist(
                ld.normalize().coords(),
                lv.normalize().coords(),
            ))
        };
        let mut n = 0usize;
        while n < samples {
            let x = dom.sample(&mut rng);
            let p = match self.lift(c, &x) {
                Ok(p) => p,
                Err(_) => continue,
            };
            n += 1;
            worst = worst.max(compare(&p)?);
        }
        let cs = atlas.cs();
        for _ in 0..plan.on_y {
            use rand::Rng;
            let mut x = dom.sample(&mut rng);
            for k in 0..cs {
                x[k] = 0.0;
            }
            let rep: Vec<f64> = (0..cs).map(|_| rng.random_range(-1.0..1.0)).collect();
            let Ok(line) = ProjPoint::new(rep, atlas.field) else {
                continue;
            };
            let p = self.point(c, line, x)?;
            worst = worst.max(compare(&p)?);
        }
        Ok(worst)
    }
}

/// The trivialization of the normal bundle induced by chart `alpha`: its
/// matrix columns are the normal-slot columns of the inverse-chart Jacobian
/// at the zero slice, as a function of the on-Y ambient point.
#[derive(Clone)]
pub struct NormalFrame {
    chart: ChartFn,
    cs: usize,
}

impl NormalFrame {
    /// Frame matrix at an on-Y ambient point: maps fiber coordinates `r` to
    /// the normal part of the ambient vector `sum_j r_j d/d phi_j`.
    pub fn matrix_at(&self, y: &[f64]) -> Result<DMatrix<f64>> {
        let coords = self.chart.apply(y);
        let mut at_zero = coords.clone();
        for k in 0..self.cs {
            at_zero[k] = 0.0;
        }
        let inv = self.chart.clone();
        let full = jacobian_block(
            move |w| inv.apply_inv(w),
            &at_zero,
            self.chart.dim_in,
            0..self.cs,
            FD_STEP,
        );
        Ok(full.rows(0, self.cs).into_owned())
    }

    /// The trivialization as a callable: `(r, y) -> normal ambient vector`.
    pub fn apply(&self, r: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        Ok(mat_apply(&self.matrix_at(y)?, r))
    }
}

/// Normal-bundle trivialization determined by chart `alpha` (columns of the
/// inverse-chart Jacobian in the normal slots along Y).
pub fn normal_trivialization(atlas: &FAtlas, alpha: usize) -> NormalFrame {
    NormalFrame {
        chart: atlas.charts[alpha].chart.clone(),
        cs: atlas.cs(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::SamplePlan;

    fn plan() -> SamplePlan {
        SamplePlan::default()
    }

    fn identity_chart(c: usize, m: usize) -> YChart {
        YChart::new(
            ChartFn::identity(c + m, BoxDomain::cube(c + m, 1.0)),
            c,
            m,
            Field::Real,
        )
    }

    #[test]
    fn hadamard_of_linear_block_is_the_matrix() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, -1.0, 3.0]);
        let dom = BoxDomain::cube(2, 1.0);
        let ov = ChartFn::linear(a.clone(), dom);
        let h = hadamard_h(&ov, 2, 0, Field::Real, &plan()).unwrap();
        let m = h(&[0.3, -0.7]).unwrap();
        assert!((&m - &a).norm() < 1e-9);
    }

    #[test]
    fn hadamard_matches_closed_form_in_one_dim() {
        // c = 1, m = 0, phi(r) = r + r^2 -> h(r) = 1 + r; at r = 2: h = 3
        let dom = BoxDomain::new(&[(-0.45, 2.5)]);
        let ov = ChartFn::new(
            1,
            1,
            dom,
            |x| vec![x[0] + x[0] * x[0]],
            |w| vec![0.5 * (-1.0 + (1.0 + 4.0 * w[0]).sqrt())],
        );
        let h = hadamard_h(&ov, 1, 0, Field::Real, &plan()).unwrap();
        let m = h(&[2.0]).unwrap();
        assert!((m[(0, 0)] - 3.0).abs() < 1e-9);
        assert!((m[(0, 0)] * 2.0 - 6.0).abs() < 1e-9);
    }

    #[test]
    fn hadamard_matches_closed_form_with_parameters() {
        // c = m = 1, phi(r, s) = (r(1+s^2), s) -> h(r, s) = 1 + s^2
        let dom = BoxDomain::cube(2, 1.0);
        let ov = ChartFn::new(
            2,
            2,
            dom,
            |x| vec![x[0] * (1.0 + x[1] * x[1]), x[1]],
            |w| vec![w[0] / (1.0 + w[1] * w[1]), w[1]],
        );
        let h = hadamard_h(&ov, 1, 1, Field::Real, &plan()).unwrap();
        let mut rng = plan().rng_for(31);
        for _ in 0..100 {
            let x = BoxDomain::cube(2, 0.9).sample(&mut rng);
            let m = h(&x).unwrap();
            assert!((m[(0, 0)] - (1.0 + x[1] * x[1])).abs() < 1e-9);
        }
    }

    #[test]
    fn quadrature_fails_on_underresolved_oscillation() {
        // a 4000-radian oscillation cannot be integrated by 256 nodes
        let dom = BoxDomain::cube(1, 1.0);
        let ov = ChartFn::new(
            1,
            1,
            dom,
            |x| vec![x[0] + x[0] * (4000.0 * x[0]).sin() / 1000.0],
            |w| w.to_vec(), // unused by the extraction
        );
        assert!(matches!(
            hadamard_at(&ov, 1, &[0.9], 1e-9),
            Err(BlowupError::QuadratureFail { .. })
        ));
    }

    #[test]
    fn wrong_inverse_is_rejected_by_overlap() {
        let dom = BoxDomain::cube(2, 1.0);
        let broken = YChart::new(
            ChartFn::new(
                2,
                2,
                dom.clone(),
                |x| vec![x[0] + x[1] * x[1], x[1]],
                |w| w.to_vec(), // not the inverse
            ),
            2,
            0,
            Field::Real,
        );
        let id = YChart::new(ChartFn::identity(2, dom), 2, 0, Field::Real);
        assert!(matches!(
            overlap_map(&broken, &id, &plan()),
            Err(BlowupError::InverseMismatch { .. })
        ));
    }

    #[test]
    fn slice_violation_detected() {
        let dom = BoxDomain::cube(2, 1.0);
        let ov = ChartFn::new(
            2,
            2,
            dom,
            |x| vec![x[0] + 0.1, x[1]],
            |w| vec![w[0] - 0.1, w[1]],
        );
        assert!(matches!(
            hadamard_h(&ov, 1, 1, Field::Real, &plan()),
            Err(BlowupError::SliceViolation { .. })
        ));
    }

    #[test]
    fn single_identity_chart_atlas_passes() {
        let atlas = FAtlas::from_charts(vec![identity_chart(2, 0)], &plan()).unwrap();
        let report = verify_f_atlas(&atlas, &plan());
        assert!(report.pass, "{report:?}");
        assert!(report.h_identity_max < 1e-12);
    }

    #[test]
    fn rotated_pair_atlas_passes() {
        let dom = BoxDomain::cube(2, 1.0);
        let rot = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let charts = vec![
            identity_chart(2, 0),
            YChart::new(ChartFn::linear(rot, dom), 2, 0, Field::Real),
        ];
        let atlas = FAtlas::from_charts(charts, &plan()).unwrap();
        let report = verify_f_atlas(&atlas, &plan());
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn conjugation_overlap_fails_complex_linearity() {
        // complex atlas on C (c = 1): identity and conjugation; the only
        // factor for z -> conj(z) is the conjugation matrix, which is
        // real-linear but not complex-linear.
        let dom = BoxDomain::cube(2, 1.0);
        let conj = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let charts = vec![
            YChart::new(ChartFn::identity(2, dom.clone()), 1, 0, Field::Complex),
            YChart::new(ChartFn::linear(conj.clone(), dom), 1, 0, Field::Complex),
        ];
        let mut h_maps: BTreeMap<(usize, usize), HMap> = BTreeMap::new();
        for (a, b) in [(0usize, 0usize), (0, 1), (1, 0), (1, 1)] {
            let m = if a == b {
                DMatrix::identity(2, 2)
            } else {
                conj.clone()
            };
            h_maps.insert((a, b), Arc::new(move |_: &[f64]| Ok(m.clone())));
        }
        let atlas = FAtlas::with_h_maps(charts, h_maps, &plan()).unwrap();
        let report = verify_f_atlas(&atlas, &plan());
        assert!(!report.pass);
        // commutator of conjugation with i has operator norm 2
        // (frobenius norm 2 sqrt 2)
        assert!((report.complex_linearity_max - 2.0 * 2.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn blowup_chart_matches_direct_substitution() {
        // X = R^2, Y = {0}, phi = id, ((1,2), (3,6)), i = 0 -> (3, 2)
        let atlas = FAtlas::from_charts(vec![identity_chart(2, 0)], &plan()).unwrap();
        let space = BlowupSpace::new(atlas, &plan());
        let p = space
            .point(0, ProjPoint::real(&[1.0, 2.0]).unwrap(), vec![3.0, 6.0])
            .unwrap();
        let w = space.chart_coords(&p, 0).unwrap();
        assert!(vec_dist(&w, &[3.0, 2.0]) < 1e-12);
    }

    #[test]
    fn exceptional_point_has_vanishing_fiber_coordinate() {
        let atlas = FAtlas::from_charts(vec![identity_chart(2, 0)], &plan()).unwrap();
        let space = BlowupSpace::new(atlas, &plan());
        let p = space
            .point(0, ProjPoint::real(&[1.0, 2.0]).unwrap(), vec![0.0, 0.0])
            .unwrap();
        let w = space.chart_coords(&p, 0).unwrap();
        assert!(vec_dist(&w, &[0.0, 2.0]) < 1e-12);
    }

    #[test]
    fn blowup_chart_roundtrips_on_random_samples() {
        let atlas = FAtlas::from_charts(vec![identity_chart(2, 0)], &plan()).unwrap();
        let space = BlowupSpace::new(atlas, &plan());
        let mut rng = plan().rng_for(77);
        for _ in 0..1000 {
            use rand::Rng;
            let w: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
            let i = rng.random_range(0..2);
            let p = space.chart_point(0, i, &w).unwrap();
            let back = space.chart_coords(&p, i).unwrap();
            assert!(vec_dist(&back, &w) < 1e-9);
        }
    }

    #[test]
    fn transition_moves_line_by_matrix() {
        // h = [[2,0],[1,1]] constant, l = [1,0] -> [2,1]
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 1.0, 1.0]);
        let dom = BoxDomain::cube(2, 1.0);
        let charts = vec![
            identity_chart(2, 0),
            YChart::new(ChartFn::linear(a, dom), 2, 0, Field::Real),
        ];
        let atlas = FAtlas::from_charts(charts, &plan()).unwrap();
        let space = BlowupSpace::new(atlas, &plan());
        let p = space
            .point(0, ProjPoint::real(&[1.0, 0.0]).unwrap(), vec![0.0, 0.0])
            .unwrap();
        let q = space.transition(1, &p).unwrap();
        let BlowupPoint::Chart { line, base, .. } = q else {
            panic!()
        };
        assert!(line.approx_eq(&ProjPoint::real(&[2.0, 1.0]).unwrap(), 1e-9));
        assert_eq!(base, vec![0.0, 0.0]);
    }

    #[test]
    fn identity_overlap_transition_is_identity() {
        let atlas =
            FAtlas::from_charts(vec![identity_chart(2, 0), identity_chart(2, 0)], &plan())
                .unwrap();
        let space = BlowupSpace::new(atlas, &plan());
        let p = space
            .point(0, ProjPoint::real(&[0.4, -0.3]).unwrap(), vec![0.0, 0.0])
            .unwrap();
        let q = space.transition(1, &p).unwrap();
        assert!(space.approx_eq(&p, &q, 1e-9));
    }

    #[test]
    fn blowdown_collapses_fiber_and_preserves_lines() {
        let atlas = FAtlas::from_charts(vec![identity_chart(2, 0)], &plan()).unwrap();
        let space = BlowupSpace::new(atlas, &plan());
        // ((1,2),(3,6)) -> (3,6)
        let p = space
            .point(0, ProjPoint::real(&[1.0, 2.0]).unwrap(), vec![3.0, 6.0])
            .unwrap();
        assert_eq!(space.blowdown(&p), vec![3.0, 6.0]);
        // X-side points map to themselves
        let x = BlowupPoint::XSide {
            chart: 0,
            point: vec![0.2, 0.9],
        };
        assert_eq!(space.blowdown(&x), vec![0.2, 0.9]);
        // 50 distinct normalized lines over 0 all map to 0 and stay distinct
        let mut lines = Vec::new();
        for k in 0..50 {
            let th = std::f64::consts::PI * (k as f64) / 50.0;
            lines.push(ProjPoint::real(&[th.cos(), th.sin()]).unwrap());
        }
        for l in &lines {
            let p = space.point(0, l.clone(), vec![0.0, 0.0]).unwrap();
            assert_eq!(space.blowdown(&p), vec![0.0, 0.0]);
        }
        for i in 0..lines.len() {
            for j in (i + 1)..lines.len() {
                assert!(!lines[i].approx_eq(&lines[j], 1e-6));
            }
        }
    }

    #[test]
    fn normal_frame_of_identity_is_identity() {
        let atlas = FAtlas::from_charts(vec![identity_chart(1, 1)], &plan()).unwrap();
        let frame = normal_trivialization(&atlas, 0);
        let m = frame.matrix_at(&[0.0, 0.3]).unwrap();
        assert!((&m - DMatrix::<f64>::identity(1, 1)).norm() < 1e-10);
    }

    #[test]
    fn normal_frame_of_linear_chart_is_inverse_block() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 3.0]);
        let inv = a.clone().try_inverse().unwrap();
        let atlas = FAtlas::from_charts(
            vec![YChart::new(
                ChartFn::linear(a, BoxDomain::cube(2, 1.0)),
                2,
                0,
                Field::Real,
            )],
            &plan(),
        )
        .unwrap();
        let frame = normal_trivialization(&atlas, 0);
        let m = frame.matrix_at(&[0.0, 0.0]).unwrap();
        assert!((&m - &inv).norm() < 1e-9);
    }

    #[test]
    fn frames_compose_through_h_on_y() {
        // Phi_b^{-1} o Phi_a along Y equals h_{ba}(0, s)
        let dom = BoxDomain::cube(3, 1.0);
        let twist = ChartFn::new(
            3,
            3,
            dom,
            |x| {
                let th = x[2];
                vec![
                    th.cos() * x[0] - th.sin() * x[1],
                    th.sin() * x[0] + th.cos() * x[1],
                    x[2],
                ]
            },
            |w| {
                let th = w[2];
                vec![
                    th.cos() * w[0] + th.sin() * w[1],
                    -th.sin() * w[0] + th.cos() * w[1],
                    w[2],
                ]
            },
        );
        let charts = vec![identity_chart(2, 1), YChart::new(twist, 2, 1, Field::Real)];
        let atlas = FAtlas::from_charts(charts, &plan()).unwrap();
        let fa = normal_trivialization(&atlas, 0);
        let fb = normal_trivialization(&atlas, 1);
        let y = [0.0, 0.0, 0.4];
        let ma = fa.matrix_at(&y).unwrap();
        let mb = fb.matrix_at(&y).unwrap();
        let composed = mb.try_inverse().unwrap() * ma;
        let coords = atlas.charts[0].chart.apply(&y);
        let h = atlas.h_at(1, 0, &coords).unwrap();
        assert!((&composed - &h).norm() < 1e-8);
    }

    #[test]
    fn mobius_determinant_sign_witness() {
        // the transition between the two standard charts of the blowup of R^2
        // at 0 has negative jacobian determinant where the ratio is negative
        let atlas = FAtlas::from_charts(vec![identity_chart(2, 0)], &plan()).unwrap();
        let space = BlowupSpace::new(atlas, &plan());
        let trans = |w: &[f64]| -> Vec<f64> {
            let p = space.chart_point(0, 0, w).unwrap();
            space.chart_coords(&p, 1).unwrap()
        };
        let det_at = |w: &[f64]| -> f64 {
            let j = jacobian_block(trans, w, 2, 0..2, 1e-6);
            j[(0, 0)] * j[(1, 1)] - j[(0, 1)] * j[(1, 0)]
        };
        assert!(det_at(&[0.3, 0.5]) > 0.0);
        assert!(det_at(&[0.3, -0.5]) < 0.0);
    }

    #[test]
    fn exceptional_transition_carries_cocycle_factor() {
        // at a point of the exceptional locus, the jacobian of the transition
        // between blowup charts i and j sends the fiber direction e_i to
        // (r_j / r_i) e_j modulo directions tangent to the locus
        let atlas = FAtlas::from_charts(vec![identity_chart(2, 0)], &plan()).unwrap();
        let space = BlowupSpace::new(atlas, &plan());
        let trans = |w: &[f64]| -> Vec<f64> {
            let p = space.chart_point(0, 0, w).unwrap();
            space.chart_coords(&p, 1).unwrap()
        };
        let b = 0.7; // chart-0 ratio coordinate r_1 / r_0
        let j = jacobian_block(trans, &[0.0, b], 2, 0..2, 1e-6);
        // fiber slot of chart 1 is index 1; factor r_1 / r_0 = b
        assert!((j[(1, 0)] - b).abs() < 1e-8);
    }
}
