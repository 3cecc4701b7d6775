//! Global constructions: tubular neighborhood identifications and their
//! contracts, the glued blowup, equivalence of identifications via ray
//! integration, and the augmented blowup in its open-sets description.
//!
//! Bundle coordinates are `(r, y)` with `r` the fiber over the zero section
//! `{r = 0}`; the ambient manifold uses the same splitting, so the
//! identification restricted to Y is literally the identity on coordinates.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::chart::{numeric_jacobian, BoxDomain, ChartFn, YChart};
use crate::error::{BlowupError, Result};
use crate::field::{complex_linearity_defect, mat_apply, vec_dist, vec_norm, Field};
use crate::aug::FMap;
use crate::local::{hadamard_at, HMap};
use crate::proj::ProjPoint;
use crate::sample::{SamplePlan, GRADES};

/// Finite-difference step used by the Jacobian clause of the contract check.
const TNI_FD_STEP: f64 = 1e-5;

/// Deviation allowed for "the ray factor converges to the identity on Y",
/// measured at the last rung of the distance ladder.
const IDENTITY_LIMIT_TOL: f64 = 1e-5;

/// A tubular neighborhood identification: a diffeomorphism from a
/// neighborhood of the zero section in the normal bundle onto an ambient
/// neighborhood, restricting to the identity on Y with identity normal
/// derivative.
#[derive(Clone)]
pub struct TubularNbhd {
    pub c: usize,
    pub m: usize,
    pub field: Field,
    /// Neighborhood of the zero section in bundle coordinates.
    pub w: BoxDomain,
    /// The identification (bundle coordinates to ambient), with inverse.
    pub psi: ChartFn,
    /// Optional adapted charts giving the ambient picture.
    pub base_charts: Vec<YChart>,
}

impl std::fmt::Debug for TubularNbhd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TubularNbhd")
            .field("c", &self.c)
            .field("m", &self.m)
            .field("field", &self.field)
            .field("w", &self.w)
            .finish()
    }
}

impl TubularNbhd {
    pub fn new(c: usize, m: usize, field: Field, w: BoxDomain, psi: ChartFn) -> Self {
        assert_eq!(w.dim(), field.real_dim(c) + m);
        assert_eq!(psi.dim_in, w.dim());
        TubularNbhd {
            c,
            m,
            field,
            w,
            psi,
            base_charts: Vec::new(),
        }
    }

    /// The identity identification on a cube.
    pub fn identity(c: usize, m: usize, field: Field, radius: f64) -> Self {
        let n = field.real_dim(c) + m;
        let w = BoxDomain::cube(n, radius);
        TubularNbhd::new(c, m, field, w.clone(), ChartFn::identity(n, w))
    }

    pub fn cs(&self) -> usize {
        self.field.real_dim(self.c)
    }

    pub fn total_dim(&self) -> usize {
        self.cs() + self.m
    }

    /// The Y-slice of the neighborhood box (tail coordinates).
    pub fn y_box(&self) -> BoxDomain {
        self.w.tail(self.cs())
    }

    /// Identification with the neighborhood box shrunk by `factor`.
    pub fn shrunk(&self, factor: f64) -> TubularNbhd {
        let mut t = self.clone();
        t.w = self.w.shrink(factor);
        t
    }
}

/// Report of the tubular neighborhood contract check.
#[derive(Debug, Clone, serde::Serialize)]
pub struct TniReport {
    /// Max of `|Psi(0, y) - (0, y)|` over sampled on-Y points.
    pub y_identity_max: f64,
    /// Max deviation of the normal-block Jacobian from the identity on Y.
    pub jacobian_deviation_max: f64,
    pub jacobian_tol: f64,
    pub points_checked: usize,
    pub pass: bool,
}

/// Checks the two contract clauses: the identification fixes Y pointwise and
/// its normal-block Jacobian along Y is the identity.
pub fn verify_tni(t: &TubularNbhd, plan: &SamplePlan) -> TniReport {
    let cs = t.cs();
    let mut rng = plan.rng_for(0x791);
    let mut y_max = 0.0f64;
    let mut j_max = 0.0f64;
    let mut points = 0usize;
    let jac_tol = 10.0 * TNI_FD_STEP * TNI_FD_STEP + plan.tols.identity;
    for _ in 0..plan.on_y.max(40) {
        let mut v = t.w.sample(&mut rng);
        for k in 0..cs {
            v[k] = 0.0;
        }
        points += 1;
        let x = t.psi.apply(&v);
        y_max = y_max.max(vec_dist(&x, &v));
        if let Ok(jac) = numeric_jacobian(&t.psi, &v, TNI_FD_STEP) {
            // normal rows: d(first cs outputs); the r-block must be the
            // identity and the y-block must vanish
            let mut dev = 0.0f64;
            for i in 0..cs {
                for j in 0..t.total_dim() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    dev = dev.max((jac[(i, j)] - want).abs());
                }
            }
            j_max = j_max.max(dev);
        }
    }
    let pass = y_max < plan.tols.identity && j_max < jac_tol;
    TniReport {
        y_identity_max: y_max,
        jacobian_deviation_max: j_max,
        jacobian_tol: jac_tol,
        points_checked: points,
        pass,
    }
}

/// A point of the glued global blowup.
#[derive(Debug, Clone)]
pub enum GlobalPoint {
    /// Ambient point away from Y.
    XSide(Vec<f64>),
    /// Pair (line, bundle point) with the fiber part of the bundle point on
    /// the line.
    Band { line: ProjPoint, v: Vec<f64> },
}

/// The blowup glued from the ambient manifold minus Y and the band of
/// line-decorated bundle points over the identification's neighborhood.
pub struct GlobalBlowup {
    pub tni: TubularNbhd,
    tol: f64,
}

impl GlobalBlowup {
    /// Builds the blowup; the identification must pass its contract check.
    pub fn build(tni: TubularNbhd, plan: &SamplePlan) -> Result<Self> {
        let report = verify_tni(&tni, plan);
        if !report.pass {
            return Err(BlowupError::ContractViolation(format!(
                "identification fails its contract (y residual {:.3e}, jacobian deviation {:.3e})",
                report.y_identity_max, report.jacobian_deviation_max
            )));
        }
        Ok(GlobalBlowup {
            tni,
            tol: plan.tols.identity,
        })
    }

    /// Band point with incidence validation.
    pub fn point(&self, line: ProjPoint, v: Vec<f64>) -> Result<GlobalPoint> {
        let cs = self.tni.cs();
        let r = &v[..cs];
        if vec_norm(r) > 0.0 {
            let t = crate::taut::TautPoint::new(line.clone(), r.to_vec(), f64::INFINITY)?;
            let res = t.incidence_residual();
            if res >= self.tol {
                return Err(BlowupError::MembershipViolation {
                    residual: res,
                    tol: self.tol,
                });
            }
        }
        Ok(GlobalPoint::Band { line, v })
    }

    /// Lift of a bundle point off Y.
    pub fn lift(&self, v: &[f64]) -> Result<GlobalPoint> {
        let cs = self.tni.cs();
        let line = ProjPoint::new(v[..cs].to_vec(), self.tni.field)?;
        Ok(GlobalPoint::Band {
            line,
            v: v.to_vec(),
        })
    }

    /// Blowdown: band points map through the identification, ambient points
    /// map to themselves.
    pub fn blowdown(&self, p: &GlobalPoint) -> Vec<f64> {
        match p {
            GlobalPoint::XSide(x) => x.clone(),
            GlobalPoint::Band { v, .. } => self.tni.psi.apply(v),
        }
    }

    /// Gluing consistency on samples: off-Y band points and their ambient
    /// images blow down identically (they are the same point of the quotient).
    pub fn gluing_residual(&self, plan: &SamplePlan) -> f64 {
        let cs = self.tni.cs();
        let samples = plan.ambient_samples(&self.tni.w, cs, 0x61);
        let mut worst = 0.0f64;
        for v in samples.off_y() {
            let Ok(p) = self.lift(v) else { continue };
            let down = self.blowdown(&p);
            let x = self.tni.psi.apply(v);
            worst = worst.max(vec_dist(&down, &x));
        }
        worst
    }
}

/// Report of the equivalence check between two identifications.
#[derive(Debug, Clone, serde::Serialize)]
pub struct TniEquivReport {
    /// Clause (a): max residual of `{h(v)}(v) = Psi_1^{-1}(Psi_2(v))`.
    pub factor_residual_max: f64,
    /// Max of `|g(0, y) - (0, y)|` (the composite fixes Y).
    pub y_fixed_max: f64,
    /// Clause (b): deviation of the ray factor from the identity at the first
    /// and last rungs of the ladder.
    pub identity_first_deviation: f64,
    pub identity_last_deviation: f64,
    /// Clause (c): max complex-linearity defect of the ray factor (0 over R).
    pub complex_commutator_max: f64,
    pub points_checked: usize,
    pub pass_factor: bool,
    pub pass_identity_limit: bool,
    pub pass_complex: bool,
    pub pass: bool,
}

/// The composite `Psi_1^{-1} o Psi_2` as a chart on the second neighborhood.
fn tni_composite(t1: &TubularNbhd, t2: &TubularNbhd) -> ChartFn {
    let p1 = t1.psi.clone();
    let p2 = t2.psi.clone();
    let p1b = t1.psi.clone();
    let p2b = t2.psi.clone();
    ChartFn::new(
        t2.total_dim(),
        t1.total_dim(),
        t2.w.clone(),
        move |v| p1.apply_inv(&p2.apply(v)),
        move |u| p2b.apply_inv(&p1b.apply(u)),
    )
}

/// Numerically tests equivalence of two identifications: extracts the ray
/// factor `h(v) = int_0^1 d_r g(t r, y) dt` of the composite `g`, checks the
/// factorization residual, convergence of the factor to the identity toward
/// Y, and (over C) complex-linearity of the factor values.
pub fn tni_equiv_check(t1: &TubularNbhd, t2: &TubularNbhd, plan: &SamplePlan) -> TniEquivReport {
    let cs = t2.cs();
    let g = tni_composite(t1, t2);
    let tol = plan.tols.identity;
    let mut factor_max = 0.0f64;
    let mut y_fixed = 0.0f64;
    let mut commutator = 0.0f64;
    let mut points = 0usize;
    let samples = plan.ambient_samples(&t2.w, cs, 0x7e9);
    let in_overlap = |v: &[f64]| -> bool {
        let x = t2.psi.apply(v);
        t1.w.contains(&t1.psi.apply_inv(&x))
    };
    for v in samples.all() {
        if !in_overlap(v) {
            continue;
        }
        let Ok(h) = hadamard_at(&g, cs, v, tol) else {
            factor_max = f64::INFINITY;
            continue;
        };
        points += 1;
        let image = g.apply(v);
        factor_max = factor_max.max(vec_dist(&mat_apply(&h, &v[..cs]), &image[..cs]));
        commutator = commutator.max(complex_linearity_defect(t2.field, &h));
    }
    for v in samples.on_y.iter() {
        if !in_overlap(v) {
            continue;
        }
        let image = g.apply(v);
        y_fixed = y_fixed.max(vec_dist(&image, v));
    }
    // ladder clause: factor along rays toward Y
    let mut first_dev = 0.0f64;
    let mut last_dev = 0.0f64;
    let eye = DMatrix::<f64>::identity(cs, cs);
    let mut rays = 0usize;
    for u in samples.interior.iter().take(24) {
        if !in_overlap(u) {
            continue;
        }
        rays += 1;
        for (k, &t) in GRADES.iter().enumerate() {
            let mut v = u.clone();
            for j in 0..cs {
                v[j] = t * u[j];
            }
            let Ok(h) = hadamard_at(&g, cs, &v, tol) else {
                continue;
            };
            let dev = (&h - &eye).norm();
            if k == 0 {
                first_dev = first_dev.max(dev);
            }
            if k == GRADES.len() - 1 {
                last_dev = last_dev.max(dev);
            }
        }
    }
    let pass_factor = points > 0 && factor_max < tol && y_fixed < tol;
    let pass_identity_limit =
        rays > 0 && last_dev < IDENTITY_LIMIT_TOL && last_dev <= first_dev.max(1e-12);
    let pass_complex = t2.field == Field::Real || commutator < plan.tols.cocycle;
    TniEquivReport {
        factor_residual_max: factor_max,
        y_fixed_max: y_fixed,
        identity_first_deviation: first_dev,
        identity_last_deviation: last_dev,
        complex_commutator_max: commutator,
        points_checked: points,
        pass_factor,
        pass_identity_limit,
        pass_complex,
        pass: pass_factor && pass_identity_limit && pass_complex,
    }
}

/// An inner product on the distinguished subbundle, presented as a
/// positive-definite Gram matrix over the Y coordinates.
#[derive(Clone)]
pub struct InnerProduct {
    gram: crate::field::MatrixFn,
    pub c2: usize,
}

impl InnerProduct {
    pub fn new<F>(c2: usize, gram: F) -> Self
    where
        F: Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    {
        InnerProduct {
            gram: Arc::new(gram),
            c2,
        }
    }

    /// The standard (constant identity) inner product.
    pub fn standard(c2: usize) -> Self {
        InnerProduct::new(c2, move |_| DMatrix::identity(c2, c2))
    }

    pub fn gram_at(&self, y: &[f64]) -> DMatrix<f64> {
        (self.gram)(y)
    }

    pub fn pair(&self, y: &[f64], a: &[f64], b: &[f64]) -> f64 {
        let g = self.gram_at(y);
        let gb = mat_apply(&g, b);
        a.iter().zip(&gb).map(|(x, z)| x * z).sum()
    }

    pub fn norm_sq(&self, y: &[f64], a: &[f64]) -> f64 {
        self.pair(y, a, a)
    }

    /// Sampled symmetry and positivity check.
    pub fn check(&self, y_box: &BoxDomain, plan: &SamplePlan) -> Result<f64> {
        let mut rng = plan.rng_for(0x16);
        let mut min_eig = f64::INFINITY;
        for _ in 0..plan.on_y.max(20) {
            let y = y_box.sample(&mut rng);
            let g = self.gram_at(&y);
            let sym_dev = (&g - g.transpose()).norm();
            if sym_dev > 1e-12 {
                return Err(BlowupError::ContractViolation(format!(
                    "gram matrix asymmetric (deviation {sym_dev:.3e})"
                )));
            }
            let eig = g.symmetric_eigenvalues();
            let lo = eig.iter().cloned().fold(f64::INFINITY, f64::min);
            if lo <= 0.0 {
                return Err(BlowupError::ContractViolation(format!(
                    "gram matrix not positive definite (min eigenvalue {lo:.3e})"
                )));
            }
            min_eig = min_eig.min(lo);
        }
        Ok(min_eig)
    }
}

/// A point of the augmented global blowup in the open-sets description, in an
/// adapted trivialization where the distinguished subbundle occupies the last
/// `c2` fiber slots.
#[derive(Debug, Clone)]
pub enum AugGlobalPoint {
    /// Ambient point away from Y.
    XSide(Vec<f64>),
    /// Line not inside the distinguished subbundle, with a bundle point on it.
    Sector1 { line: ProjPoint, v: Vec<f64> },
    /// Tensor-sector point: line `[v : c]` in the complement-plus-trivial
    /// factor, fiber element `mu (v, c)`, distinguished component `w`, base
    /// point `y`.
    Sector2 {
        line_v: Vec<f64>,
        line_c: f64,
        mu: f64,
        w: Vec<f64>,
        y: Vec<f64>,
    },
}

impl AugGlobalPoint {
    /// Fiber pair `(v_hat, c_hat) = mu (line_v, line_c)` of a sector-2 point.
    pub fn sector2_fiber(&self) -> Option<(Vec<f64>, f64)> {
        match self {
            AugGlobalPoint::Sector2 { line_v, line_c, mu, .. } => Some((
                line_v.iter().map(|x| mu * x).collect(),
                mu * line_c,
            )),
            _ => None,
        }
    }
}

/// The bundle point a sector-2 point blows down through:
/// `(c <w,w> v + c w, y)` computed from the fiber pair.
pub fn sector2_preimage(p: &AugGlobalPoint, ip: &InnerProduct) -> Result<Vec<f64>> {
    let AugGlobalPoint::Sector2 { w, y, .. } = p else {
        return Err(BlowupError::ContractViolation(
            "sector-2 preimage of a non-sector-2 point".into(),
        ));
    };
    let (v_hat, c_hat) = p.sector2_fiber().unwrap();
    let ww = ip.norm_sq(y, w);
    let mut out = Vec::with_capacity(v_hat.len() + w.len() + y.len());
    for x in &v_hat {
        out.push(c_hat * ww * x);
    }
    for x in w {
        out.push(c_hat * x);
    }
    out.extend_from_slice(y);
    Ok(out)
}

/// Blowdown of the augmented global blowup: sector-1 points map through the
/// identification, sector-2 points map through their preimage bundle point.
pub fn aug_global_blowdown(
    p: &AugGlobalPoint,
    t: &TubularNbhd,
    ip: &InnerProduct,
    c1: usize,
    tol: f64,
) -> Result<Vec<f64>> {
    match p {
        AugGlobalPoint::XSide(x) => Ok(x.clone()),
        AugGlobalPoint::Sector1 { line, v } => {
            let head = vec_norm(&line.normalize().coords()[..c1]);
            if head <= tol {
                return Err(BlowupError::MembershipViolation {
                    residual: head,
                    tol,
                });
            }
            let r = &v[..t.cs()];
            if vec_norm(r) > 0.0 {
                let tp = crate::taut::TautPoint::new(line.clone(), r.to_vec(), f64::INFINITY)?;
                let res = tp.incidence_residual();
                if res >= tol {
                    return Err(BlowupError::MembershipViolation { residual: res, tol });
                }
            }
            Ok(t.psi.apply(v))
        }
        AugGlobalPoint::Sector2 { .. } => {
            let pre = sector2_preimage(p, ip)?;
            if !t.w.contains(&pre) {
                return Err(BlowupError::MembershipViolation {
                    residual: f64::INFINITY,
                    tol,
                });
            }
            Ok(t.psi.apply(&pre))
        }
    }
}

/// Sector-1 partner of a sector-2 point under the gluing relation:
/// line spanned by `<w,w> v_hat + w`, bundle point the sector-2 preimage.
pub fn sector2_partner(p: &AugGlobalPoint, ip: &InnerProduct) -> Result<AugGlobalPoint> {
    let AugGlobalPoint::Sector2 { w, y, .. } = p else {
        return Err(BlowupError::GluingMiss);
    };
    let (v_hat, _) = p.sector2_fiber().unwrap();
    if vec_norm(&v_hat) * vec_norm(w) == 0.0 {
        return Err(BlowupError::GluingMiss);
    }
    let ww = ip.norm_sq(y, w);
    let mut span = Vec::with_capacity(v_hat.len() + w.len());
    for x in &v_hat {
        span.push(ww * x);
    }
    span.extend_from_slice(w);
    let line = ProjPoint::real(&span)?;
    let v = sector2_preimage(p, ip)?;
    Ok(AugGlobalPoint::Sector1 { line, v })
}

/// Equivalence data for the augmented transition: the ray factor and the
/// conformal factor of a pair of identifications, as functions of bundle
/// points of the second neighborhood.
pub struct AugTniEquiv {
    pub h: HMap,
    pub f: FMap,
    pub c1: usize,
}

/// Report of the augmented equivalence check.
#[derive(Debug, Clone, serde::Serialize)]
pub struct AugTniEquivReport {
    /// Max norm of the forbidden block `h12`.
    pub block_violation_max: f64,
    /// Max residual of the conformality condition on the distinguished block.
    pub conformal_violation_max: f64,
    /// Extracted conformal factor samples (min and max over the sweep).
    pub f_min: f64,
    pub f_max: f64,
    pub points_checked: usize,
    pub pass: bool,
}

/// Checks the two augmented clauses on top of the plain equivalence: the ray
/// factor preserves the distinguished block and acts on it conformally;
/// returns the extracted factor data for use in the sector-2 transition.
pub fn tni_aug_equiv_check(
    t1: &TubularNbhd,
    t2: &TubularNbhd,
    ip: &InnerProduct,
    c1: usize,
    plan: &SamplePlan,
) -> (AugTniEquivReport, AugTniEquiv) {
    let cs = t2.cs();
    let c2 = cs - c1;
    let g = tni_composite(t1, t2);
    let tol = plan.tols.identity;
    let g_for_h = g.clone();
    let h: HMap = Arc::new(move |v: &[f64]| hadamard_at(&g_for_h, cs, v, tol));
    let h_for_f = h.clone();
    let g_for_f = g.clone();
    let ip_f = ip.clone();
    let f: FMap = Arc::new(move |v: &[f64]| {
        let m = h_for_f(v)?;
        let h22 = m.view((c1, c1), (c2, c2)).into_owned();
        let y = &v[cs..];
        let image = g_for_f.apply(v);
        let y_img = &image[cs..];
        let gy = ip_f.gram_at(y);
        let gy_img = ip_f.gram_at(y_img);
        let lhs = h22.transpose() * gy_img * &h22;
        let gyi = gy.clone().try_inverse().ok_or_else(|| {
            BlowupError::ContractViolation("gram matrix not invertible".into())
        })?;
        Ok((gyi * lhs).trace() / c2 as f64)
    });
    let mut block_max = 0.0f64;
    let mut conf_max = 0.0f64;
    let mut f_min = f64::INFINITY;
    let mut f_max = f64::NEG_INFINITY;
    let mut points = 0usize;
    let samples = plan.ambient_samples(&t2.w, cs, 0xa6e);
    let in_overlap = |v: &[f64]| -> bool {
        let x = t2.psi.apply(v);
        t1.w.contains(&t1.psi.apply_inv(&x))
    };
    for v in samples.all() {
        if !in_overlap(v) {
            continue;
        }
        let (Ok(m), Ok(fv)) = (h(v), f(v)) else {
            block_max = f64::INFINITY;
            continue;
        };
        points += 1;
        let h12 = m.view((0, c1), (c1, c2));
        block_max = block_max.max(h12.norm());
        // conformality as a matrix identity: h22^T G(y') h22 = f G(y)
        let h22 = m.view((c1, c1), (c2, c2)).into_owned();
        let image = g.apply(v);
        let gy = ip.gram_at(&v[cs..]);
        let gy_img = ip.gram_at(&image[cs..]);
        let dev = (h22.transpose() * gy_img * h22 - fv * &gy).norm();
        conf_max = conf_max.max(dev);
        f_min = f_min.min(fv);
        f_max = f_max.max(fv);
    }
    let pass = points > 0 && block_max < tol && conf_max < tol && f_min > 0.0;
    (
        AugTniEquivReport {
            block_violation_max: block_max,
            conformal_violation_max: conf_max,
            f_min: if f_min.is_finite() { f_min } else { 0.0 },
            f_max: if f_max.is_finite() { f_max } else { 0.0 },
            points_checked: points,
            pass,
        },
        AugTniEquiv { h, f, c1 },
    )
}

/// Sector-2 transition between augmented blowups built from two equivalent
/// identifications, including the conformal correction factor
/// `F = f + 2 <h21 v, h22 w> + |w|^2 |h21 v|^2`.
///
/// The input lives in the second identification's blowup; the output lives in
/// the first's and satisfies the blowdown relation
/// `Psi_2(preimage(p)) = Psi_1(preimage(output))`.
pub fn aug_sector2_transition(
    t1: &TubularNbhd,
    t2: &TubularNbhd,
    ip: &InnerProduct,
    equiv: &AugTniEquiv,
    p: &AugGlobalPoint,
) -> Result<AugGlobalPoint> {
    let AugGlobalPoint::Sector2 { line_v, line_c, mu, w, y } = p else {
        return Err(BlowupError::ContractViolation(
            "sector-2 transition of a non-sector-2 point".into(),
        ));
    };
    let c1 = equiv.c1;
    let cs = t2.cs();
    let pre = sector2_preimage(p, ip)?;
    if !t2.w.contains(&pre) {
        return Err(BlowupError::DomainExit {
            context: "sector-2 preimage",
        });
    }
    let m = (equiv.h)(&pre)?;
    let fv = (equiv.f)(&pre)?;
    let h11 = m.view((0, 0), (c1, c1)).into_owned();
    let h21 = m.view((c1, 0), (cs - c1, c1)).into_owned();
    let h22 = m.view((c1, c1), (cs - c1, cs - c1)).into_owned();
    let g = tni_composite(t1, t2);
    let image = g.apply(&pre);
    let y_img = image[cs..].to_vec();
    let (v_hat, _c_hat) = p.sector2_fiber().unwrap();
    let h21v = mat_apply(&h21, &v_hat);
    let h22w = mat_apply(&h22, w);
    let ww = ip.norm_sq(y, w);
    let f_corr = fv + 2.0 * ip.pair(&y_img, &h21v, &h22w) + ww * ip.norm_sq(&y_img, &h21v);
    if f_corr <= 0.0 {
        return Err(BlowupError::FNonPositive { value: f_corr });
    }
    let new_line_v = mat_apply(&h11, line_v);
    let new_line_c = f_corr * line_c;
    let new_mu = mu / f_corr;
    let new_w: Vec<f64> = h22w
        .iter()
        .zip(&h21v)
        .map(|(a, b)| a + ww * b)
        .collect();
    Ok(AugGlobalPoint::Sector2 {
        line_v: new_line_v,
        line_c: new_line_c,
        mu: new_mu,
        w: new_w,
        y: y_img,
    })
}
