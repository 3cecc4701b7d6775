//! Equivalence of the global and local constructions: cutting tubular data
//! into atlases, distinguished charts on global blowups, the two chart-level
//! relation suites certifying isomorphic blowdowns, assembly of atlases into
//! tubular data, and merging of tubular identifications.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::aug::AugParams;
use crate::chart::{BoxDomain, ChartFn, YChart};
use crate::error::{BlowupError, Result};
use crate::field::{mat_apply, vec_norm, Field};
use crate::global::{
    aug_global_blowdown, sector2_preimage, tni_equiv_check, AugGlobalPoint, GlobalBlowup,
    GlobalPoint, InnerProduct, TubularNbhd,
};
use crate::local::{normal_trivialization, FAtlas, HMap};
use crate::proj::ProjPoint;
use crate::sample::SamplePlan;

/// A trivialization of the normal bundle over part of Y: a fiberwise linear
/// frame together with a chart on the base.
#[derive(Clone)]
pub struct NormalTrivialization {
    frame: crate::field::MatrixFn,
    /// Chart on Y; its domain box is the covered part of Y.
    pub base_chart: ChartFn,
}

impl NormalTrivialization {
    pub fn new<F>(frame: F, base_chart: ChartFn) -> Self
    where
        F: Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    {
        NormalTrivialization {
            frame: Arc::new(frame),
            base_chart,
        }
    }

    /// Identity frame over a box in Y coordinates.
    pub fn identity(cs: usize, y_box: BoxDomain) -> Self {
        let m = y_box.dim();
        NormalTrivialization::new(move |_| DMatrix::identity(cs, cs), ChartFn::identity(m, y_box))
    }

    /// Constant frame over a box in Y coordinates.
    pub fn constant(a: DMatrix<f64>, y_box: BoxDomain) -> Self {
        let m = y_box.dim();
        NormalTrivialization::new(move |_| a.clone(), ChartFn::identity(m, y_box))
    }

    pub fn matrix_at(&self, y: &[f64]) -> DMatrix<f64> {
        (self.frame)(y)
    }

    /// Fiber dimension of the frame.
    pub fn cs(&self) -> usize {
        self.matrix_at(&self.base_chart.domain.center()).nrows()
    }

    /// The trivialization on bundle coordinates: `(r, y) -> (A(y) r, psi(y))`.
    pub fn apply(&self, v: &[f64], cs: usize) -> Vec<f64> {
        let (r, y) = v.split_at(cs);
        let mut out = mat_apply(&self.matrix_at(y), r);
        out.extend(self.base_chart.apply(y));
        out
    }

    /// Inverse of [`Self::apply`].
    pub fn apply_inv(&self, w: &[f64], cs: usize) -> Vec<f64> {
        let (u, s) = w.split_at(cs);
        let y = self.base_chart.apply_inv(s);
        let a_inv = self
            .matrix_at(&y)
            .try_inverse()
            .expect("trivialization frame must be invertible");
        let mut out = mat_apply(&a_inv, u);
        out.extend(y);
        out
    }
}

/// Cuts a tubular identification into an atlas of adapted charts:
/// `phi_alpha = Phi_alpha o Psi^{-1}` on the image of the covered band.
///
/// The matrix factors are supplied in closed form (`A_a(y) A_b(y)^{-1}`), so
/// they are independent of the normal coordinates, as cut-up atlases must be.
/// Fails with `CoverGap` when the trivialization domains miss sampled Y.
pub fn cut_up_charts(
    t: &TubularNbhd,
    trivs: &[NormalTrivialization],
    plan: &SamplePlan,
) -> Result<FAtlas> {
    let cs = t.cs();
    let y_box = t.y_box();
    // cover check over sampled Y
    let mut rng = plan.rng_for(0xC07);
    for _ in 0..plan.on_y.max(50) {
        let y = y_box.sample(&mut rng);
        if !trivs.iter().any(|tr| tr.base_chart.domain.contains(&y)) {
            return Err(BlowupError::CoverGap);
        }
    }
    let mut charts = Vec::with_capacity(trivs.len());
    for tr in trivs {
        let psi = t.psi.clone();
        let tr_fwd = tr.clone();
        let psi_inv = t.psi.clone();
        let tr_inv = tr.clone();
        // ambient domain: image of the band over the trivialization's base box
        let mut band_iv: Vec<(f64, f64)> = (0..cs).map(|k| t.w.interval(k)).collect();
        for k in 0..t.m {
            let (a, b) = t.w.interval(cs + k);
            let (c, d) = tr.base_chart.domain.interval(k);
            let (lo, hi) = (a.max(c), b.min(d));
            if lo >= hi {
                return Err(BlowupError::CoverGap);
            }
            band_iv.push((lo, hi));
        }
        let band = BoxDomain::new(&band_iv);
        let mut rng2 = plan.rng_for(0xC08);
        let mut images = plan.sample_box(&band, plan.interior.max(200), &mut rng2);
        for x in images.iter_mut() {
            *x = t.psi.apply(x);
        }
        let domain = BoxDomain::bounding(&images).ok_or(BlowupError::CoverGap)?;
        let chart = ChartFn::new(
            t.total_dim(),
            t.total_dim(),
            domain,
            move |x| tr_fwd.apply(&psi.apply_inv(x), cs),
            move |w| psi_inv.apply(&tr_inv.apply_inv(w, cs)),
        );
        charts.push(YChart::new(chart, t.c, t.m, t.field));
    }
    // closed-form factors: h_{ab}(w, s) = A_a(y) A_b(y)^{-1}, y = psi_b^{-1}(s)
    let mut h_maps: BTreeMap<(usize, usize), HMap> = BTreeMap::new();
    for a in 0..trivs.len() {
        for b in 0..trivs.len() {
            let ta = trivs[a].clone();
            let tb = trivs[b].clone();
            h_maps.insert(
                (a, b),
                Arc::new(move |coords: &[f64]| {
                    let y = tb.base_chart.apply_inv(&coords[cs..]);
                    let inv = tb.matrix_at(&y).try_inverse().ok_or_else(|| {
                        BlowupError::ContractViolation("frame not invertible".into())
                    })?;
                    Ok(ta.matrix_at(&y) * inv)
                }),
            );
        }
    }
    Ok(FAtlas::with_h_maps(charts, h_maps, plan)?.with_y_extent(y_box))
}

/// The distinguished charts on a global blowup induced by trivializations:
/// ratio coordinates of the framed line away from slot `i`, framed fiber
/// value in slot `i`, base chart values in the tail.
pub struct GlobalChartSet {
    pub trivs: Vec<NormalTrivialization>,
    pub c: usize,
    pub m: usize,
    pub field: Field,
    tol: f64,
}

impl GlobalChartSet {
    pub fn new(t: &TubularNbhd, trivs: Vec<NormalTrivialization>, plan: &SamplePlan) -> Self {
        GlobalChartSet {
            trivs,
            c: t.c,
            m: t.m,
            field: t.field,
            tol: plan.tols.identity,
        }
    }

    fn cs(&self) -> usize {
        self.field.real_dim(self.c)
    }

    /// Chart coordinates of a band point in chart `(alpha, i)`.
    pub fn coords(&self, alpha: usize, i: usize, p: &GlobalPoint) -> Result<Vec<f64>> {
        let GlobalPoint::Band { line, v } = p else {
            return Err(BlowupError::ChartMiss {
                chart: format!("global chart ({alpha}, {i})"),
                reason: "ambient-side point".into(),
            });
        };
        let cs = self.cs();
        let field = self.field;
        let tr = &self.trivs[alpha];
        let y = &v[cs..];
        let a = tr.matrix_at(y);
        let framed_line = line.map(&a)?;
        let rep = framed_line.normalized_at(i, self.tol)?;
        let framed_r = mat_apply(&a, &v[..cs]);
        let mut w = vec![0.0; cs + self.m];
        for j in 0..self.c {
            if j == i {
                let vi = field.get(&framed_r, i);
                field.set(&mut w[..cs], j, vi);
            } else {
                field.set(&mut w[..cs], j, rep.component(j));
            }
        }
        let s = tr.base_chart.apply(y);
        w[cs..].copy_from_slice(&s);
        Ok(w)
    }

    /// Inverse chart: reconstructs the band point from chart coordinates.
    pub fn point(&self, alpha: usize, i: usize, w: &[f64]) -> Result<GlobalPoint> {
        let cs = self.cs();
        let field = self.field;
        let tr = &self.trivs[alpha];
        let y = tr.base_chart.apply_inv(&w[cs..]);
        let a_inv = tr
            .matrix_at(&y)
            .try_inverse()
            .ok_or_else(|| BlowupError::ContractViolation("frame not invertible".into()))?;
        let mut rep = field.zeros(self.c);
        for j in 0..self.c {
            if j == i {
                field.set(&mut rep, j, Complex64::new(1.0, 0.0));
            } else {
                field.set(&mut rep, j, field.get(&w[..cs], j));
            }
        }
        let wi = field.get(&w[..cs], i);
        let fiber = field.scale(&rep, wi);
        let line = ProjPoint::new(mat_apply(&a_inv, &rep), field)?;
        let mut v = mat_apply(&a_inv, &fiber);
        v.extend(y);
        Ok(GlobalPoint::Band { line, v })
    }

    /// Whether some chart `(alpha, i)` contains the point.
    pub fn covers(&self, alpha: usize, p: &GlobalPoint) -> bool {
        (0..self.c).any(|i| self.coords(alpha, i, p).is_ok())
    }
}

/// Builds the distinguished chart family on the global blowup.
pub fn global_taut_charts(
    t: &TubularNbhd,
    trivs: &[NormalTrivialization],
    plan: &SamplePlan,
) -> GlobalChartSet {
    GlobalChartSet::new(t, trivs.to_vec(), plan)
}

/// One relation of a chart-level verification suite.
#[derive(Debug, Clone, serde::Serialize)]
pub struct RelationCheck {
    pub name: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Outcome of a chart-level relation suite.
#[derive(Debug, Clone, serde::Serialize)]
pub struct EquivReport {
    pub relations: Vec<RelationCheck>,
    pub covering_ok: bool,
    pub points_checked: usize,
    pub pass: bool,
}

impl EquivReport {
    fn from_parts(parts: Vec<(String, f64, f64)>, covering_ok: bool, points: usize) -> Self {
        let relations: Vec<RelationCheck> = parts
            .into_iter()
            .map(|(name, max_residual, tolerance)| RelationCheck {
                pass: max_residual < tolerance,
                name,
                max_residual,
                tolerance,
            })
            .collect();
        let pass = covering_ok && points > 0 && relations.iter().all(|r| r.pass);
        EquivReport {
            relations,
            covering_ok,
            points_checked: points,
            pass,
        }
    }
}

/// Sampled band points of a global blowup over one trivialization's base box.
fn sample_band(
    t: &TubularNbhd,
    bl: &GlobalBlowup,
    y_dom: &BoxDomain,
    plan: &SamplePlan,
    salt: u64,
) -> Vec<GlobalPoint> {
    let cs = t.cs();
    let mut iv: Vec<(f64, f64)> = (0..cs).map(|k| t.w.interval(k)).collect();
    for k in 0..t.m {
        let (a, b) = t.w.interval(cs + k);
        let (c, d) = y_dom.interval(k);
        iv.push((a.max(c), b.min(d)));
    }
    let band = BoxDomain::new(&iv);
    let samples = plan.ambient_samples(&band, cs, salt);
    let mut out = Vec::new();
    for v in samples.off_y() {
        if let Ok(p) = bl.lift(v) {
            out.push(p);
        }
    }
    let mut rng = plan.rng_for(salt ^ 0xE);
    for v in samples.on_y.iter() {
        use rand::Rng;
        let rep: Vec<f64> = (0..cs).map(|_| rng.random_range(-1.0..1.0)).collect();
        let Ok(line) = ProjPoint::new(rep, t.field) else {
            continue;
        };
        if let Ok(p) = bl.point(line, v.clone()) {
            out.push(p);
        }
    }
    out
}

/// Verifies the chart-level relations certifying that the global blowup and
/// the atlas blowup have diffeomorphic blowdowns: over every sampled band
/// point, the cut-up chart values of the blowdown factor through the
/// distinguished chart values, and the distinguished charts cover the band.
pub fn verify_chart_relations(
    bl: &GlobalBlowup,
    charts: &GlobalChartSet,
    atlas: &FAtlas,
    plan: &SamplePlan,
) -> EquivReport {
    let t = &bl.tni;
    let cs = t.cs();
    let field = t.field;
    let tol = plan.tols.cocycle;
    let mut ratio_max = 0.0f64;
    let mut direct_max = 0.0f64;
    let mut covering_ok = true;
    let mut points = 0usize;
    for alpha in 0..charts.trivs.len() {
        let y_dom = charts.trivs[alpha].base_chart.domain.clone();
        for p in sample_band(t, bl, &y_dom, plan, 0x31 ^ ((alpha as u64) << 8)) {
            let down = bl.blowdown(&p);
            if !atlas.charts[alpha].chart.domain.contains(&down) {
                continue;
            }
            points += 1;
            let phi = atlas.charts[alpha].chart.apply(&down);
            let mut in_some_chart = false;
            for i in 0..t.c {
                let Ok(w) = charts.coords(alpha, i, &p) else {
                    continue;
                };
                in_some_chart = true;
                for j in 0..t.c {
                    let phi_j = field.get(&phi[..cs], j);
                    if j == i {
                        let wt = field.get(&w[..cs], j);
                        direct_max = direct_max.max((phi_j - wt).norm());
                    } else {
                        let wt = field.get(&w[..cs], j);
                        let phi_i = field.get(&phi[..cs], i);
                        ratio_max = ratio_max.max((phi_j - wt * phi_i).norm());
                    }
                }
                for k in 0..t.m {
                    direct_max = direct_max.max((phi[cs + k] - w[cs + k]).abs());
                }
            }
            covering_ok &= in_some_chart;
        }
    }
    EquivReport::from_parts(
        vec![
            ("ratio-slots".into(), ratio_max, tol),
            ("direct-slots".into(), direct_max, tol),
        ],
        covering_ok,
        points,
    )
}

/// The three distinguished chart families on an augmented global blowup in
/// adapted trivializations.
pub struct AugChartSet {
    pub trivs: Vec<NormalTrivialization>,
    pub params: AugParams,
    pub m: usize,
    tol: f64,
}

impl AugChartSet {
    fn frame_blocks(&self, alpha: usize, y: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
        let a = self.trivs[alpha].matrix_at(y);
        let c1 = self.params.c1;
        let c2 = self.params.c2();
        (
            a.view((0, 0), (c1, c1)).into_owned(),
            a.view((c1, c1), (c2, c2)).into_owned(),
        )
    }

    /// Sector-1 chart `(alpha, i)` with `i` in the distinguished head slots.
    pub fn coords1(&self, alpha: usize, i: usize, p: &AugGlobalPoint) -> Result<Vec<f64>> {
        let AugGlobalPoint::Sector1 { line, v } = p else {
            return Err(BlowupError::ChartMiss {
                chart: format!("sector-1 chart ({alpha}, {i})"),
                reason: "not a sector-1 point".into(),
            });
        };
        if i >= self.params.c1 {
            return Err(BlowupError::ChartMiss {
                chart: format!("sector-1 chart ({alpha}, {i})"),
                reason: "slot outside the head block".into(),
            });
        }
        let c = self.params.c;
        let y = &v[c..];
        let a = self.trivs[alpha].matrix_at(y);
        let framed_line = line.map(&a)?;
        let rep = framed_line.normalized_at(i, self.tol)?;
        let framed_r = mat_apply(&a, &v[..c]);
        let mut w = vec![0.0; c + self.m];
        for j in 0..c {
            w[j] = if j == i { framed_r[i] } else { rep.component(j).re };
        }
        let s = self.trivs[alpha].base_chart.apply(y);
        w[c..].copy_from_slice(&s);
        Ok(w)
    }

    /// Sector-2 chart `(alpha, i)` with `i` in `1..=c1` (one-based head slot).
    pub fn coords2(&self, alpha: usize, i: usize, p: &AugGlobalPoint) -> Result<Vec<f64>> {
        let AugGlobalPoint::Sector2 { line_v, line_c, w, y, .. } = p else {
            return Err(BlowupError::ChartMiss {
                chart: format!("sector-2 chart ({alpha}, {i})"),
                reason: "not a sector-2 point".into(),
            });
        };
        let c1 = self.params.c1;
        let c = self.params.c;
        debug_assert!((1..=c1).contains(&i));
        let (a11, a22) = self.frame_blocks(alpha, y);
        let av = mat_apply(&a11, line_v);
        let pivot = av[i - 1];
        if pivot.abs() <= self.tol {
            return Err(BlowupError::ChartMiss {
                chart: format!("sector-2 chart ({alpha}, {i})"),
                reason: format!("framed head component {i} is {pivot:.3e}"),
            });
        }
        let (v_hat, c_hat) = p.sector2_fiber().unwrap();
        let av_hat = mat_apply(&a11, &v_hat);
        let aw = mat_apply(&a22, w);
        let mut out = vec![0.0; c + self.m];
        // one-based slot layout from the chart display
        out[0] = line_c / pivot;
        for j in 2..=i {
            out[j - 1] = av[j - 2] / pivot;
        }
        for j in (i + 1)..=c1 {
            out[j - 1] = av[j - 1] / pivot;
        }
        for j in (c1 + 1)..=c {
            out[j - 1] = av_hat[i - 1] * aw[j - c1 - 1];
        }
        let s = self.trivs[alpha].base_chart.apply(y);
        out[c..].copy_from_slice(&s);
        let _ = c_hat;
        Ok(out)
    }

    /// Sector-2 chart `(alpha, 0)` defined where the trivial-factor slot of
    /// the line is nonzero.
    pub fn coords20(&self, alpha: usize, p: &AugGlobalPoint) -> Result<Vec<f64>> {
        let AugGlobalPoint::Sector2 { line_v, line_c, w, y, .. } = p else {
            return Err(BlowupError::ChartMiss {
                chart: format!("sector-2 chart ({alpha}, 0)"),
                reason: "not a sector-2 point".into(),
            });
        };
        if line_c.abs() <= self.tol {
            return Err(BlowupError::ChartMiss {
                chart: format!("sector-2 chart ({alpha}, 0)"),
                reason: format!("trivial-factor slot is {line_c:.3e}"),
            });
        }
        let c1 = self.params.c1;
        let c = self.params.c;
        let (a11, a22) = self.frame_blocks(alpha, y);
        let av = mat_apply(&a11, line_v);
        let (_, c_hat) = p.sector2_fiber().unwrap();
        let aw = mat_apply(&a22, w);
        let mut out = vec![0.0; c + self.m];
        for j in 1..=c1 {
            out[j - 1] = av[j - 1] / line_c;
        }
        for j in (c1 + 1)..=c {
            out[j - 1] = c_hat * aw[j - c1 - 1];
        }
        let s = self.trivs[alpha].base_chart.apply(y);
        out[c..].copy_from_slice(&s);
        Ok(out)
    }

    /// Whether the chart collection contains the point over `alpha`.
    pub fn covers(&self, alpha: usize, p: &AugGlobalPoint) -> bool {
        match p {
            AugGlobalPoint::Sector1 { .. } => {
                (0..self.params.c1).any(|i| self.coords1(alpha, i, p).is_ok())
            }
            AugGlobalPoint::Sector2 { .. } => {
                self.coords20(alpha, p).is_ok()
                    || (1..=self.params.c1).any(|i| self.coords2(alpha, i, p).is_ok())
            }
            AugGlobalPoint::XSide(_) => false,
        }
    }
}

/// Builds the three distinguished chart families, checking that the
/// trivializations are adapted: block-triangular frames whose lower block
/// realizes the inner product.
pub fn aug_global_charts(
    t: &TubularNbhd,
    ip: &InnerProduct,
    trivs: &[NormalTrivialization],
    c1: usize,
    plan: &SamplePlan,
) -> Result<AugChartSet> {
    let params = AugParams::new(t.c, c1)?;
    let c2 = params.c2();
    let mut rng = plan.rng_for(0xADA);
    for tr in trivs {
        for _ in 0..plan.on_y.max(20) {
            let y = tr.base_chart.domain.sample(&mut rng);
            let a = tr.matrix_at(&y);
            let a12 = a.view((0, c1), (c1, c2));
            if a12.norm() > 1e-12 {
                return Err(BlowupError::ContractViolation(
                    "trivialization not adapted: head block sees the distinguished subbundle"
                        .into(),
                ));
            }
            // the chart relations also need the complement preserved; frames
            // must be block-diagonal for the chosen splitting
            let a21 = a.view((c1, 0), (c2, c1));
            if a21.norm() > 1e-12 {
                return Err(BlowupError::ContractViolation(
                    "trivialization not adapted: distinguished block sees the complement".into(),
                ));
            }
            let a22 = a.view((c1, c1), (c2, c2)).into_owned();
            let dev = (a22.transpose() * &a22 - ip.gram_at(&y)).norm();
            if dev > 1e-9 {
                return Err(BlowupError::ContractViolation(format!(
                    "trivialization not norm-compatible with the inner product (deviation {dev:.3e})"
                )));
            }
        }
    }
    Ok(AugChartSet {
        trivs: trivs.to_vec(),
        params,
        m: t.m,
        tol: plan.tols.identity,
    })
}

/// Sampled augmented points over one trivialization's base box.
fn sample_aug_band(
    t: &TubularNbhd,
    ip: &InnerProduct,
    params: AugParams,
    y_dom: &BoxDomain,
    plan: &SamplePlan,
    salt: u64,
) -> Vec<AugGlobalPoint> {
    use rand::Rng;
    let c = params.c;
    let c1 = params.c1;
    let c2 = params.c2();
    let mut rng = plan.rng_for(salt);
    let mut out = Vec::new();
    let mut y_iv: Vec<(f64, f64)> = Vec::new();
    for k in 0..t.m {
        let (a, b) = t.w.interval(c + k);
        let (cc, d) = y_dom.interval(k);
        y_iv.push((a.max(cc), b.min(d)));
    }
    let sample_y = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
        y_iv.iter()
            .map(|&(a, b)| rng.random_range(a..b))
            .collect()
    };
    // sector-1 points: on-Y lines with nonzero head, plus lifted off-Y points
    for _ in 0..plan.interior {
        let y = sample_y(&mut rng);
        let mut rep: Vec<f64> = (0..c).map(|_| rng.random_range(-1.0..1.0)).collect();
        rep[rng.random_range(0..c1)] += 1.5;
        let Ok(line) = ProjPoint::real(&rep) else {
            continue;
        };
        // fiber point on the line, scaled into the band
        let tscale = rng.random_range(-0.5..0.5);
        let mut v: Vec<f64> = rep.iter().map(|x| tscale * x).collect();
        let rbound: f64 = (0..c)
            .map(|k| {
                let (a, b) = t.w.interval(k);
                (-a).min(b)
            })
            .fold(f64::INFINITY, f64::min);
        let norm = vec_norm(&v).max(1e-9);
        if norm > 0.8 * rbound {
            let sc = 0.8 * rbound / norm;
            for x in v.iter_mut() {
                *x *= sc;
            }
        }
        v.extend(y);
        out.push(AugGlobalPoint::Sector1 { line, v });
    }
    // sector-2 points with preimage inside the band
    let mut made = 0usize;
    let mut tries = 0usize;
    while made < plan.interior && tries < 40 * plan.interior {
        tries += 1;
        let y = sample_y(&mut rng);
        let line_v: Vec<f64> = (0..c1).map(|_| rng.random_range(-1.0..1.0)).collect();
        let line_c: f64 = rng.random_range(-1.0..1.0);
        let mu = rng.random_range(-1.0..1.0);
        let w: Vec<f64> = (0..c2).map(|_| rng.random_range(-1.0..1.0)).collect();
        if vec_norm(&line_v).max(line_c.abs()) < 1e-3 {
            continue;
        }
        let p = AugGlobalPoint::Sector2 {
            line_v,
            line_c,
            mu,
            w,
            y,
        };
        let Ok(pre) = sector2_preimage(&p, ip) else {
            continue;
        };
        if !t.w.contains(&pre) {
            continue;
        }
        made += 1;
        out.push(p);
    }
    out
}

/// Verifies the augmented chart-level relations: over every sampled point of
/// the two sectors, the cut-up chart values of the blowdown factor through
/// the distinguished chart values with the required monomial and
/// sum-of-squares factors, and the three families cover the band.
pub fn verify_aug_chart_relations(
    t: &TubularNbhd,
    ip: &InnerProduct,
    charts: &AugChartSet,
    atlas: &FAtlas,
    plan: &SamplePlan,
) -> EquivReport {
    let params = charts.params;
    let c = params.c;
    let c1 = params.c1;
    let tol = plan.tols.cocycle;
    let mut k1_ratio = 0.0f64;
    let mut k1_direct = 0.0f64;
    let mut k2_head = 0.0f64;
    let mut k2_tail = 0.0f64;
    let mut k2_base = 0.0f64;
    let mut covering_ok = true;
    let mut points = 0usize;
    for alpha in 0..charts.trivs.len() {
        let y_dom = charts.trivs[alpha].base_chart.domain.clone();
        for p in sample_aug_band(t, ip, params, &y_dom, plan, 0x32 ^ ((alpha as u64) << 8)) {
            let Ok(down) = aug_global_blowdown(&p, t, ip, c1, plan.tols.identity) else {
                continue;
            };
            if !atlas.charts[alpha].chart.domain.contains(&down) {
                continue;
            }
            points += 1;
            let phi = atlas.charts[alpha].chart.apply(&down);
            covering_ok &= charts.covers(alpha, &p);
            match &p {
                AugGlobalPoint::Sector1 { .. } => {
                    for i in 0..c1 {
                        let Ok(w) = charts.coords1(alpha, i, &p) else {
                            continue;
                        };
                        for j in 0..c {
                            if j == i {
                                k1_direct = k1_direct.max((phi[j] - w[j]).abs());
                            } else {
                                k1_ratio = k1_ratio.max((phi[j] - w[j] * phi[i]).abs());
                            }
                        }
                        for k in 0..t.m {
                            k1_direct = k1_direct.max((phi[c + k] - w[c + k]).abs());
                        }
                    }
                }
                AugGlobalPoint::Sector2 { .. } => {
                    // i = 0 chart
                    if let Ok(w) = charts.coords20(alpha, &p) {
                        let sum_sq: f64 = (c1..c).map(|j| w[j] * w[j]).sum();
                        for j in 0..c1 {
                            k2_head = k2_head.max((phi[j] - sum_sq * w[j]).abs());
                        }
                        for j in c1..c {
                            k2_tail = k2_tail.max((phi[j] - w[j]).abs());
                        }
                        for k in 0..t.m {
                            k2_base = k2_base.max((phi[c + k] - w[c + k]).abs());
                        }
                    }
                    // i in [c1] charts (one-based)
                    for i in 1..=c1 {
                        let Ok(w) = charts.coords2(alpha, i, &p) else {
                            continue;
                        };
                        let sum_sq: f64 = (c1..c).map(|j| w[j] * w[j]).sum();
                        for j in 1..=c1 {
                            let want = if i < j {
                                sum_sq * w[0] * w[j - 1]
                            } else if i == j {
                                sum_sq * w[0]
                            } else {
                                sum_sq * w[0] * w[j]
                            };
                            k2_head = k2_head.max((phi[j - 1] - want).abs());
                        }
                        for j in (c1 + 1)..=c {
                            k2_tail = k2_tail.max((phi[j - 1] - w[j - 1] * w[0]).abs());
                        }
                        for k in 0..t.m {
                            k2_base = k2_base.max((phi[c + k] - w[c + k]).abs());
                        }
                    }
                }
                AugGlobalPoint::XSide(_) => {}
            }
        }
    }
    EquivReport::from_parts(
        vec![
            ("sector1-ratio".into(), k1_ratio, tol),
            ("sector1-direct".into(), k1_direct, tol),
            ("sector2-head".into(), k2_head, tol),
            ("sector2-tail".into(), k2_tail, tol),
            ("sector2-base".into(), k2_base, tol),
        ],
        covering_ok,
        points,
    )
}

/// Assembles an atlas into a tubular identification: per-chart
/// identifications `Psi_a(u, y) = phi_a^{-1}(B_a(y)^{-1} u, s_a(y))` folded
/// pairwise with [`merge_tni`] in index order.
pub fn assemble_tni(atlas: &FAtlas, plan: &SamplePlan) -> Result<TubularNbhd> {
    let mut acc: Option<TubularNbhd> = None;
    for alpha in 0..atlas.len() {
        let t = per_chart_tni(atlas, alpha, plan)?;
        acc = Some(match acc {
            None => t,
            Some(prev) => merge_tni(&prev, &t, plan)?,
        });
    }
    let t = acc.ok_or_else(|| BlowupError::ContractViolation("empty atlas".into()))?;
    let report = crate::global::verify_tni(&t, plan);
    if !report.pass {
        return Err(BlowupError::MergeFail(format!(
            "assembled identification fails its contract (y {:.3e}, jacobian {:.3e})",
            report.y_identity_max, report.jacobian_deviation_max
        )));
    }
    Ok(t)
}

/// The tubular identification cut out of a single adapted chart.
fn per_chart_tni(atlas: &FAtlas, alpha: usize, plan: &SamplePlan) -> Result<TubularNbhd> {
    let cs = atlas.cs();
    let m = atlas.m;
    let ych = atlas.charts[alpha].clone();
    let frame = normal_trivialization(atlas, alpha);
    let chart_fwd = ych.chart.clone();
    // over a point the frame is a single matrix; compute it once
    let cached = if m == 0 {
        Some(frame.matrix_at(&vec![0.0; cs])?)
    } else {
        None
    };
    let frame_matrix = move |y_m: &[f64]| -> Result<DMatrix<f64>> {
        if let Some(b) = &cached {
            return Ok(b.clone());
        }
        let mut y = vec![0.0; cs + m];
        y[cs..].copy_from_slice(y_m);
        frame.matrix_at(&y)
    };
    let fm_fwd = frame_matrix.clone();
    let fm_inv = frame_matrix;
    let psi_fwd = move |v: &[f64]| -> Vec<f64> {
        let (u, y_m) = v.split_at(cs);
        let b = fm_fwd(y_m).expect("frame");
        let b_inv = b.try_inverse().expect("frame invertible");
        let r = mat_apply(&b_inv, u);
        // tail chart coordinates of the on-Y point
        let mut y = vec![0.0; cs + m];
        y[cs..].copy_from_slice(y_m);
        let s = chart_fwd.apply(&y);
        let mut coords = r;
        coords.extend_from_slice(&s[cs..]);
        chart_fwd.apply_inv(&coords)
    };
    let chart_inv = ych.chart.clone();
    let psi_inv = move |x: &[f64]| -> Vec<f64> {
        let coords = chart_inv.apply(x);
        let mut on_y = coords.clone();
        for k in 0..cs {
            on_y[k] = 0.0;
        }
        let y_pt = chart_inv.apply_inv(&on_y);
        let y_m = &y_pt[cs..];
        let b = fm_inv(y_m).expect("frame");
        let mut out = mat_apply(&b, &coords[..cs]);
        out.extend_from_slice(y_m);
        out
    };
    // the band in bundle coordinates, from sampled chart-domain preimages
    let mut rng = plan.rng_for(0xbadd ^ alpha as u64);
    let mut pre = Vec::new();
    let probe = ChartFn::new(
        cs + m,
        cs + m,
        ych.chart.domain.clone(),
        psi_inv.clone(),
        psi_fwd.clone(),
    );
    for _ in 0..plan.interior.max(200) {
        let x = ych.chart.domain.sample(&mut rng);
        pre.push(probe.apply(&x));
    }
    let w = BoxDomain::bounding(&pre)
        .ok_or_else(|| BlowupError::ContractViolation("empty chart domain".into()))?
        .shrink(0.9);
    let psi = ChartFn::new(cs + m, cs + m, w.clone(), psi_fwd, psi_inv);
    let t = TubularNbhd::new(atlas.c, m, atlas.field, w, psi);
    let report = crate::global::verify_tni(&t, plan);
    if !report.pass {
        return Err(BlowupError::ContractViolation(format!(
            "per-chart identification fails its contract (y {:.3e}, jacobian {:.3e})",
            report.y_identity_max, report.jacobian_deviation_max
        )));
    }
    Ok(t)
}

/// Smooth ramp: 0 for x <= 0, 1 for x >= 1.
fn smooth_step(x: f64) -> f64 {
    fn e(x: f64) -> f64 {
        if x > 0.0 {
            (-1.0 / x).exp()
        } else {
            0.0
        }
    }
    let a = e(x);
    let b = e(1.0 - x);
    a / (a + b)
}

/// Merges two equivalent identifications over the union of their Y regions:
/// the first identification away from the second's shrunken region, the
/// second away from the first's, and the bump-interpolated transport of the
/// composite factor in between. The neighborhood is halved (up to 10 times)
/// until the result passes its contract and roundtrip checks.
pub fn merge_tni(t1: &TubularNbhd, t2: &TubularNbhd, plan: &SamplePlan) -> Result<TubularNbhd> {
    if t1.c != t2.c || t1.m != t2.m || t1.field != t2.field {
        return Err(BlowupError::ContractViolation(
            "identifications must share c, m, and field".into(),
        ));
    }
    let equiv = tni_equiv_check(t1, t2, plan);
    if !equiv.pass {
        return Err(BlowupError::ContractViolation(format!(
            "identifications are not equivalent (factor residual {:.3e})",
            equiv.factor_residual_max
        )));
    }
    let cs = t1.cs();
    let m = t1.m;
    let u1 = t1.y_box();
    let u2 = t2.y_box();
    // shrink each region's faces that are interior to the other region
    let (u1s, u2s) = shrink_into_overlap(&u1, &u2)?;
    // union coverage check (the union of boxes must fill its bounding box)
    let union_box = bbox_union(&u1, &u2);
    if m > 0 {
        let mut rng = plan.rng_for(0x771);
        for _ in 0..plan.on_y.max(50) {
            let y = union_box.sample(&mut rng);
            if !u1.contains(&y) && !u2.contains(&y) {
                return Err(BlowupError::ContractViolation(
                    "Y regions do not cover their bounding box".into(),
                ));
            }
        }
    }
    let eta = bump_eta(&u1, &u2, &u1s, &u2s);
    let g = {
        let p1 = t1.psi.clone();
        let p2 = t2.psi.clone();
        move |v: &[f64]| -> Vec<f64> { p1.apply_inv(&p2.apply(v)) }
    };
    let in_region1 = {
        let u1 = u1.clone();
        let u2s = u2s.clone();
        move |y: &[f64]| u1.contains(y) && !u2s.contains(y)
    };
    let in_region3 = {
        let u2 = u2.clone();
        let u1s = u1s.clone();
        move |y: &[f64]| u2.contains(y) && !u1s.contains(y)
    };
    let psi1 = t1.psi.clone();
    let psi2 = t2.psi.clone();
    let eta_f = eta.clone();
    let g_f = g.clone();
    let in1 = in_region1.clone();
    let in3 = in_region3.clone();
    let forward = move |v: &[f64]| -> Vec<f64> {
        let y = &v[cs..];
        if in1(y) {
            return psi1.apply(v);
        }
        if in3(y) {
            return psi2.apply(v);
        }
        let e = eta_f(y);
        let gv = g_f(v);
        let mut tv = vec![0.0; v.len()];
        for k in 0..cs {
            tv[k] = (1.0 - e) * v[k] + e * gv[k];
        }
        for k in cs..v.len() {
            tv[k] = v[k] + e * (gv[k] - v[k]);
        }
        psi1.apply(&tv)
    };
    // inverse: exact on the outer regions, Newton on the blended band
    let psi1b = t1.psi.clone();
    let psi2b = t2.psi.clone();
    let fwd_for_inv = forward.clone();
    let in1b = in_region1;
    let in3b = in_region3;
    let inverse = move |x: &[f64]| -> Vec<f64> {
        let v1 = psi1b.apply_inv(x);
        if in1b(&v1[cs..]) {
            return v1;
        }
        let v2 = psi2b.apply_inv(x);
        if in3b(&v2[cs..]) {
            return v2;
        }
        newton_invert(&fwd_for_inv, x, &v1)
    };
    // conservative neighborhood: common fiber extents over the united base
    let mut iv: Vec<(f64, f64)> = Vec::new();
    for k in 0..cs {
        let (a1, b1) = t1.w.interval(k);
        let (a2, b2) = t2.w.interval(k);
        iv.push((a1.max(a2), b1.min(b2)));
    }
    for k in 0..m {
        iv.push(union_box.interval(k));
    }
    for level in 0..=10u32 {
        let factor = 0.5f64.powi(level as i32);
        let mut ivl = iv.clone();
        for item in ivl.iter_mut().take(cs) {
            *item = (item.0 * factor, item.1 * factor);
        }
        let w = BoxDomain::new(&ivl);
        let psi = ChartFn::new(cs + m, cs + m, w.clone(), forward.clone(), inverse.clone());
        let t = TubularNbhd::new(t1.c, m, t1.field, w, psi);
        let contract = crate::global::verify_tni(&t, plan);
        let roundtrip = t.psi.check_roundtrip(plan, 0x4e77);
        if contract.pass && roundtrip.is_ok() {
            return Ok(t);
        }
    }
    Err(BlowupError::MergeFail(
        "no shrinkage level passed the contract and roundtrip checks".into(),
    ))
}

/// Newton iteration for the merged identification's inverse.
fn newton_invert<F>(f: &F, target: &[f64], seed: &[f64]) -> Vec<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = target.len();
    let mut v = seed.to_vec();
    let h = 1e-6;
    for _ in 0..50 {
        let fv = f(&v);
        let res: Vec<f64> = fv.iter().zip(target).map(|(a, b)| a - b).collect();
        if vec_norm(&res) < 1e-13 {
            break;
        }
        let mut jac = DMatrix::zeros(n, n);
        let mut vp = v.clone();
        for j in 0..n {
            vp[j] = v[j] + h;
            let fp = f(&vp);
            vp[j] = v[j] - h;
            let fm = f(&vp);
            vp[j] = v[j];
            for i in 0..n {
                jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        let Some(inv) = jac.try_inverse() else { break };
        let step = mat_apply(&inv, &res);
        for (vi, si) in v.iter_mut().zip(&step) {
            *vi -= si;
        }
    }
    v
}

/// Pulls each box's faces that are strictly interior to the other box inward
/// by a quarter of the overlap extent on that axis.
fn shrink_into_overlap(u1: &BoxDomain, u2: &BoxDomain) -> Result<(BoxDomain, BoxDomain)> {
    let m = u1.dim();
    if m == 0 {
        return Ok((u1.clone(), u2.clone()));
    }
    let overlap = u1
        .intersect(u2)
        .ok_or_else(|| BlowupError::ContractViolation("Y regions do not overlap".into()))?;
    let mut iv1 = Vec::with_capacity(m);
    let mut iv2 = Vec::with_capacity(m);
    for k in 0..m {
        let (a1, b1) = u1.interval(k);
        let (a2, b2) = u2.interval(k);
        let (oa, ob) = overlap.interval(k);
        let pull = 0.25 * (ob - oa);
        let b1s = if b2 > b1 && a2 < b1 { b1 - pull } else { b1 };
        let a1s = if a2 < a1 && b2 > a1 { a1 + pull } else { a1 };
        let b2s = if b1 > b2 && a1 < b2 { b2 - pull } else { b2 };
        let a2s = if a1 < a2 && b1 > a2 { a2 + pull } else { a2 };
        if a1s >= b1s || a2s >= b2s {
            return Err(BlowupError::MergeFail(
                "overlap too small for the fixed-fraction shrinkage".into(),
            ));
        }
        iv1.push((a1s, b1s));
        iv2.push((a2s, b2s));
    }
    Ok((BoxDomain::new(&iv1), BoxDomain::new(&iv2)))
}

fn bbox_union(u1: &BoxDomain, u2: &BoxDomain) -> BoxDomain {
    let m = u1.dim();
    if m == 0 {
        return u1.clone();
    }
    let iv: Vec<(f64, f64)> = (0..m)
        .map(|k| {
            let (a1, b1) = u1.interval(k);
            let (a2, b2) = u2.interval(k);
            (a1.min(a2), b1.max(b2))
        })
        .collect();
    BoxDomain::new(&iv)
}

/// Bump over Y: 0 outside the second shrunken region, 1 on the second region
/// away from the first shrunken region's closure.
type BumpFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

fn bump_eta(u1: &BoxDomain, u2: &BoxDomain, u1s: &BoxDomain, u2s: &BoxDomain) -> BumpFn {
    let m = u1.dim();
    let mut ramps: Vec<(usize, f64, f64, bool)> = Vec::new();
    for k in 0..m {
        let (_, b1) = u1.interval(k);
        let (a1, _) = u1.interval(k);
        let (a2, b2) = u2.interval(k);
        let (a1s, b1s) = u1s.interval(k);
        let (a2s, b2s) = u2s.interval(k);
        if b2 > b1 && a2 < b1 {
            // the second region extends above: ramp up from a2s to b1s
            ramps.push((k, a2s, b1s, true));
        }
        if a2 < a1 && b2 > a1 {
            // the second region extends below: ramp down from a1s to b2s
            ramps.push((k, b2s, a1s, false));
        }
    }
    Arc::new(move |y: &[f64]| {
        let mut e = 1.0;
        for &(k, lo, hi, up) in &ramps {
            let t = (y[k] - lo) / (hi - lo);
            let r = if up { smooth_step(t) } else { smooth_step(1.0 - t) };
            e *= r;
        }
        e
    })
}
