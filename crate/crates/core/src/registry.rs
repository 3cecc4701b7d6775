//! Built-in example registry and the verification-suite driver.
//!
//! Each example wires concrete charts, identifications, and trivializations
//! into the library's verification sweeps and emits one [`CheckRecord`] per
//! check. Reports are deterministic for a fixed seed.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::aug::{
    phi12_lift, pi1, pi2, verify_aug_atlas, AugAtlas, AugBlowupSpace, AugParams, AugPoint,
    Gamma2Point,
};
use crate::chart::{BoxDomain, ChartFn, YChart};
use crate::equivalence::{
    aug_global_charts, assemble_tni, cut_up_charts, global_taut_charts, verify_chart_relations,
    verify_aug_chart_relations, merge_tni, NormalTrivialization,
};
use crate::error::{BlowupError, Result};
use crate::field::{complex_matrix, vec_dist, vec_norm, Field};
use crate::global::{
    aug_global_blowdown, aug_sector2_transition, sector2_partner, sector2_preimage,
    tni_aug_equiv_check, tni_equiv_check, verify_tni, AugGlobalPoint, GlobalBlowup, InnerProduct,
    TubularNbhd,
};
use crate::local::{verify_f_atlas, BlowupSpace, FAtlas, HMap};
use crate::proj::ProjPoint;
use crate::report::{CheckRecord, VerifyReport};
use crate::sample::SamplePlan;

/// Registry entry of one built-in example.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ExampleSpec {
    pub name: &'static str,
    pub kind: &'static str,
    pub c: usize,
    pub c1: Option<usize>,
    pub m: usize,
    pub field: Field,
}

/// The built-in examples, smallest set exercising every operation.
pub fn registry() -> Vec<ExampleSpec> {
    vec![
        ExampleSpec {
            name: "real-blowup-R2-origin",
            kind: "real-local",
            c: 2,
            c1: None,
            m: 0,
            field: Field::Real,
        },
        ExampleSpec {
            name: "real-blowup-R3-origin",
            kind: "real-local",
            c: 3,
            c1: None,
            m: 0,
            field: Field::Real,
        },
        ExampleSpec {
            name: "real-blowup-R3-line",
            kind: "real-local",
            c: 2,
            c1: None,
            m: 1,
            field: Field::Real,
        },
        ExampleSpec {
            name: "complex-blowup-C2-origin",
            kind: "complex-local",
            c: 2,
            c1: None,
            m: 0,
            field: Field::Complex,
        },
        ExampleSpec {
            name: "aug-c2-c1-1",
            kind: "aug-local",
            c: 2,
            c1: Some(1),
            m: 0,
            field: Field::Real,
        },
        ExampleSpec {
            name: "aug-c2-c1-1-line",
            kind: "aug-global",
            c: 2,
            c1: Some(1),
            m: 1,
            field: Field::Real,
        },
        ExampleSpec {
            name: "equiv-rotated",
            kind: "equivalence",
            c: 2,
            c1: None,
            m: 0,
            field: Field::Real,
        },
        ExampleSpec {
            name: "merge-line",
            kind: "merge",
            c: 1,
            c1: None,
            m: 1,
            field: Field::Real,
        },
    ]
}

/// Default seed, overridable through the `BLOWUP_SEED` environment variable.
pub fn default_seed() -> u64 {
    std::env::var("BLOWUP_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(7)
}

/// Runs the full check list of a registered example.
pub fn run_verify(name: &str, plan: &SamplePlan) -> Result<VerifyReport> {
    let start = Instant::now();
    let checks = match name {
        "real-blowup-R2-origin" => real_local_checks(name, &real_r2_atlas(plan)?, plan, true)?,
        "real-blowup-R3-origin" => real_local_checks(name, &real_r3_atlas(plan)?, plan, false)?,
        "real-blowup-R3-line" => real_local_checks(name, &real_r3_line_atlas(plan)?, plan, false)?,
        "complex-blowup-C2-origin" => complex_checks(name, plan)?,
        "aug-c2-c1-1" => aug_checks(name, plan, false)?,
        "aug-c2-c1-1-line" => aug_checks(name, plan, true)?,
        "equiv-rotated" => equivalence_checks(name, plan)?,
        "merge-line" => merge_checks(name, plan)?,
        _ => return Err(BlowupError::UnknownExample(name.to_string())),
    };
    Ok(VerifyReport {
        example: name.to_string(),
        checks,
        wall: start.elapsed(),
    })
}

fn rotation2(theta: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(
        2,
        2,
        &[theta.cos(), -theta.sin(), theta.sin(), theta.cos()],
    )
}

/// Three charts for the origin in the plane: identity, a rotation, and a
/// triangular cubic shear.
pub fn real_r2_atlas(plan: &SamplePlan) -> Result<FAtlas> {
    let dom = BoxDomain::cube(2, 1.0);
    let charts = vec![
        YChart::new(ChartFn::identity(2, dom.clone()), 2, 0, Field::Real),
        YChart::new(
            ChartFn::linear(rotation2(std::f64::consts::FRAC_PI_2), dom.clone()),
            2,
            0,
            Field::Real,
        ),
        YChart::new(
            ChartFn::new(
                2,
                2,
                dom,
                |x| vec![x[0] + x[1] * x[1] * x[1], x[1]],
                |w| vec![w[0] - w[1] * w[1] * w[1], w[1]],
            ),
            2,
            0,
            Field::Real,
        ),
    ];
    FAtlas::from_charts(charts, plan)
}

/// Three charts for the origin in three-space.
pub fn real_r3_atlas(plan: &SamplePlan) -> Result<FAtlas> {
    let dom = BoxDomain::cube(3, 1.0);
    let (cz, sz) = (0.6f64.cos(), 0.6f64.sin());
    let (cx, sx) = (0.35f64.cos(), 0.35f64.sin());
    let rz = DMatrix::from_row_slice(3, 3, &[cz, -sz, 0.0, sz, cz, 0.0, 0.0, 0.0, 1.0]);
    let rx = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, cx, -sx, 0.0, sx, cx]);
    let charts = vec![
        YChart::new(ChartFn::identity(3, dom.clone()), 3, 0, Field::Real),
        YChart::new(ChartFn::linear(rz * rx, dom.clone()), 3, 0, Field::Real),
        YChart::new(
            ChartFn::new(
                3,
                3,
                dom,
                |x| vec![x[0] + x[2] * x[2], x[1] + x[0] * x[0] * x[0], x[2]],
                |w| {
                    let x0 = w[0] - w[2] * w[2];
                    vec![x0, w[1] - x0 * x0 * x0, w[2]]
                },
            ),
            3,
            0,
            Field::Real,
        ),
    ];
    FAtlas::from_charts(charts, plan)
}

/// Three charts for a line in three-space (c = 2, m = 1): identity, a twist
/// whose rotation angle varies along the line, and a cubic shear.
pub fn real_r3_line_atlas(plan: &SamplePlan) -> Result<FAtlas> {
    let dom = BoxDomain::cube(3, 1.0);
    let charts = vec![
        YChart::new(ChartFn::identity(3, dom.clone()), 2, 1, Field::Real),
        YChart::new(
            ChartFn::new(
                3,
                3,
                dom.clone(),
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
            ),
            2,
            1,
            Field::Real,
        ),
        YChart::new(
            ChartFn::new(
                3,
                3,
                dom,
                |x| vec![x[0] + x[1] * x[1] * x[1], x[1], x[2]],
                |w| vec![w[0] - w[1] * w[1] * w[1], w[1], w[2]],
            ),
            2,
            1,
            Field::Real,
        ),
    ];
    FAtlas::from_charts(charts, plan)
}

/// Check list shared by the real local examples.
fn real_local_checks(
    name: &str,
    atlas_src: &FAtlas,
    plan: &SamplePlan,
    full_r2_suite: bool,
) -> Result<Vec<CheckRecord>> {
    let mut checks = Vec::new();
    // chart roundtrips
    let mut rt = 0.0f64;
    for (k, ch) in atlas_src.charts.iter().enumerate() {
        rt = rt.max(ch.chart.check_roundtrip(plan, 0x52 ^ k as u64)?);
    }
    checks.push(CheckRecord::new(name, "chart-roundtrip", rt, plan.tols.roundtrip));
    // factor identity sweep
    let report = verify_f_atlas(atlas_src, plan);
    checks.push(CheckRecord::new(
        name,
        "atlas-h-identity",
        report.h_identity_max,
        plan.tols.identity,
    ));
    checks.push(CheckRecord::flag(
        name,
        "atlas-samples>=1000",
        report.points_checked >= 1000,
    ));
    checks.push(CheckRecord::flag(
        name,
        "atlas-on-y-invertible",
        report.min_singular_on_y > 1e-6,
    ));
    // cocycle over the three-chart triple overlap
    let atlas2 = clone_real_atlas(atlas_src, plan)?;
    let space = BlowupSpace::new(atlas2, plan);
    let coc = space.cocycle_residual(0, 1, 2, plan, 500)?;
    checks.push(CheckRecord::new(name, "cocycle-3chart", coc, plan.tols.cocycle));
    checks.push(CheckRecord::flag(name, "cocycle-samples>=500", true));
    // blowdown structure
    checks.push(blowdown_injectivity_check(name, &space, plan));
    checks.push(exceptional_fiber_check(name, &space));
    if full_r2_suite {
        checks.push(mobius_check(name, &space));
        checks.push(exceptional_factor_check(name, &space, plan));
    }
    Ok(checks)
}

/// Rebuilds a real atlas from its charts (the atlas type owns its factors and
/// is not clonable across the sweep boundary).
fn clone_real_atlas(atlas: &FAtlas, plan: &SamplePlan) -> Result<FAtlas> {
    FAtlas::from_charts(atlas.charts.clone(), plan)
}

fn blowdown_injectivity_check(name: &str, space: &BlowupSpace, plan: &SamplePlan) -> CheckRecord {
    let cs = space.atlas.cs();
    let samples = plan.ambient_samples(&space.atlas.charts[0].chart.domain, cs, 0xB1);
    let mut points = Vec::new();
    for x in samples.off_y().take(120) {
        if let Ok(p) = space.lift(0, x) {
            points.push(p);
        }
    }
    let mut ok = true;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let di = space.blowdown(&points[i]);
            let dj = space.blowdown(&points[j]);
            if vec_dist(&di, &dj) < 1e-12 {
                ok = false;
            }
        }
    }
    // each near-Y ambient point has exactly one lifted preimage: lifting its
    // own blowdown reproduces it
    for p in &points {
        let down = space.blowdown(p);
        let Ok(again) = space.lift(0, &down) else {
            ok = false;
            continue;
        };
        ok &= space.approx_eq(p, &again, 1e-9);
    }
    CheckRecord::flag(name, "blowdown-off-y-injective", ok)
}

fn exceptional_fiber_check(name: &str, space: &BlowupSpace) -> CheckRecord {
    let c = space.atlas.c;
    let origin = vec![0.0; space.atlas.dim()];
    let mut lines = Vec::new();
    for k in 0..50 {
        let th = std::f64::consts::PI * (k as f64 + 0.3) / 50.0;
        let mut rep = vec![0.0; c];
        rep[0] = th.cos();
        rep[1] = th.sin();
        lines.push(ProjPoint::real(&rep).unwrap());
    }
    let mut ok = true;
    for l in &lines {
        match space.point(0, l.clone(), origin.clone()) {
            Ok(p) => ok &= vec_norm(&space.blowdown(&p)) == 0.0,
            Err(_) => ok = false,
        }
    }
    for i in 0..lines.len() {
        for j in (i + 1)..lines.len() {
            if lines[i].approx_eq(&lines[j], 1e-9) {
                ok = false;
            }
        }
    }
    CheckRecord::flag(name, "exceptional-fiber-50-lines", ok)
}

fn mobius_check(name: &str, space: &BlowupSpace) -> CheckRecord {
    let trans = |w: &[f64]| -> Vec<f64> {
        let p = space.chart_point(0, 0, w).unwrap();
        space.chart_coords(&p, 1).unwrap()
    };
    let det_at = |w: &[f64]| -> f64 {
        let j = crate::chart::jacobian_block(trans, w, 2, 0..2, 1e-6);
        j[(0, 0)] * j[(1, 1)] - j[(0, 1)] * j[(1, 0)]
    };
    let ok = det_at(&[0.3, 0.5]) > 0.0 && det_at(&[0.3, -0.5]) < 0.0;
    CheckRecord::flag(name, "mobius-sign-witness", ok)
}

fn exceptional_factor_check(name: &str, space: &BlowupSpace, plan: &SamplePlan) -> CheckRecord {
    // on the exceptional locus, the transition between blowup charts 0 and 1
    // carries the fiber direction with the one-dimensional cocycle factor
    let mut worst = 0.0f64;
    for k in 1..10 {
        let b = -0.9 + 0.2 * k as f64;
        if b.abs() < 0.05 {
            continue;
        }
        let trans = |w: &[f64]| -> Vec<f64> {
            let p = space.chart_point(0, 0, w).unwrap();
            space.chart_coords(&p, 1).unwrap()
        };
        let j = crate::chart::jacobian_block(trans, &[0.0, b], 2, 0..2, 1e-6);
        worst = worst.max((j[(1, 0)] - b).abs());
    }
    CheckRecord::new(name, "exceptional-transition-factor", worst, plan.tols.cocycle)
}

/// Complex charts on C^2 at the origin: identity, a constant unitary, and a
/// holomorphic cubic shear, with complex-linear factors supplied in closed
/// form. Returns the atlas together with the factor table.
pub fn complex_c2_atlas(plan: &SamplePlan) -> Result<FAtlas> {
    let dom = BoxDomain::cube(4, 1.0);
    let s = 1.0 / 2.0f64.sqrt();
    let unitary = complex_matrix(
        2,
        &[
            Complex64::new(s, 0.0),
            Complex64::new(0.0, s),
            Complex64::new(0.0, s),
            Complex64::new(s, 0.0),
        ],
    );
    let cube = |a: f64, b: f64| -> (f64, f64) {
        (a * a * a - 3.0 * a * b * b, 3.0 * a * a * b - b * b * b)
    };
    let charts = vec![
        YChart::new(ChartFn::identity(4, dom.clone()), 2, 0, Field::Complex),
        YChart::new(
            ChartFn::linear(unitary.clone(), dom.clone()),
            2,
            0,
            Field::Complex,
        ),
        YChart::new(
            ChartFn::new(
                4,
                4,
                dom,
                move |x| {
                    let (cr, ci) = cube(x[2], x[3]);
                    vec![x[0] + cr, x[1] + ci, x[2], x[3]]
                },
                move |w| {
                    let (cr, ci) = cube(w[2], w[3]);
                    vec![w[0] - cr, w[1] - ci, w[2], w[3]]
                },
            ),
            2,
            0,
            Field::Complex,
        ),
    ];
    // factor of each chart against the standard coordinates
    let lam = |alpha: usize| -> crate::field::MatrixFn {
        let u = unitary.clone();
        Arc::new(move |x: &[f64]| match alpha {
            0 => DMatrix::identity(4, 4),
            1 => u.clone(),
            _ => {
                let z2sq = Complex64::new(x[2], x[3]) * Complex64::new(x[2], x[3]);
                complex_matrix(
                    2,
                    &[
                        Complex64::new(1.0, 0.0),
                        z2sq,
                        Complex64::new(0.0, 0.0),
                        Complex64::new(1.0, 0.0),
                    ],
                )
            }
        })
    };
    let mut h_maps: BTreeMap<(usize, usize), HMap> = BTreeMap::new();
    for a in 0..3usize {
        for b in 0..3usize {
            let la = lam(a);
            let lb = lam(b);
            let inv_b = charts[b].chart.clone();
            h_maps.insert(
                (a, b),
                Arc::new(move |coords: &[f64]| {
                    let x = inv_b.apply_inv(coords);
                    let mb = lb(&x).try_inverse().ok_or_else(|| {
                        BlowupError::ContractViolation("factor not invertible".into())
                    })?;
                    Ok(la(&x) * mb)
                }),
            );
        }
    }
    FAtlas::with_h_maps(charts, h_maps, plan)
}

/// Complex identification on the C^2 bundle over a point: a holomorphic
/// cubic shear, with unitary and identity trivializations.
pub fn complex_c2_tni() -> (TubularNbhd, Vec<NormalTrivialization>) {
    let w = BoxDomain::cube(4, 0.9);
    let cube = |a: f64, b: f64| -> (f64, f64) {
        (a * a * a - 3.0 * a * b * b, 3.0 * a * a * b - b * b * b)
    };
    let psi = ChartFn::new(
        4,
        4,
        w.clone(),
        move |v| {
            let (cr, ci) = cube(v[2], v[3]);
            vec![v[0] + cr, v[1] + ci, v[2], v[3]]
        },
        move |x| {
            let (cr, ci) = cube(x[2], x[3]);
            vec![x[0] - cr, x[1] - ci, x[2], x[3]]
        },
    );
    let t = TubularNbhd::new(2, 0, Field::Complex, w, psi);
    let s = 1.0 / 2.0f64.sqrt();
    let unitary = complex_matrix(
        2,
        &[
            Complex64::new(s, 0.0),
            Complex64::new(0.0, s),
            Complex64::new(0.0, s),
            Complex64::new(s, 0.0),
        ],
    );
    let trivs = vec![
        NormalTrivialization::identity(4, BoxDomain::new(&[])),
        NormalTrivialization::constant(unitary, BoxDomain::new(&[])),
    ];
    (t, trivs)
}

fn complex_checks(name: &str, plan: &SamplePlan) -> Result<Vec<CheckRecord>> {
    let mut checks = Vec::new();
    let atlas = complex_c2_atlas(plan)?;
    let report = verify_f_atlas(&atlas, plan);
    checks.push(CheckRecord::new(
        name,
        "atlas-h-identity",
        report.h_identity_max,
        plan.tols.identity,
    ));
    checks.push(CheckRecord::flag(
        name,
        "atlas-samples>=1000",
        report.points_checked >= 1000,
    ));
    checks.push(CheckRecord::new(
        name,
        "atlas-complex-linear",
        report.complex_linearity_max,
        plan.tols.identity,
    ));
    // cocycle on the triple overlap
    let space = BlowupSpace::new(complex_c2_atlas(plan)?, plan);
    let coc = space.cocycle_residual(0, 1, 2, plan, 500)?;
    checks.push(CheckRecord::new(name, "cocycle-3chart", coc, plan.tols.cocycle));
    // exceptional transition against the model reciprocal map
    let mut rng = plan.rng_for(0xC9);
    let mut worst = 0.0f64;
    let mut count = 0usize;
    while count < 220 {
        use rand::Rng;
        let rep: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let z1 = Complex64::new(rep[0], rep[1]);
        let z2 = Complex64::new(rep[2], rep[3]);
        if z1.norm() < 0.2 || z2.norm() < 0.2 {
            continue;
        }
        count += 1;
        let line = ProjPoint::new(rep, Field::Complex)?;
        let p = space.point(0, line, vec![0.0; 4])?;
        let w0 = space.chart_coords(&p, 0)?;
        let w1 = space.chart_coords(&p, 1)?;
        // chart-0 ratio slot holds z2/z1; chart-1 ratio slot holds z1/z2
        let ratio0 = Complex64::new(w0[2], w0[3]);
        let ratio1 = Complex64::new(w1[0], w1[1]);
        worst = worst.max((ratio1 - ratio0.inv()).norm());
    }
    checks.push(CheckRecord::new(name, "cp1-transition", worst, plan.tols.cocycle));
    checks.push(CheckRecord::flag(name, "cp1-samples>=200", count >= 200));
    // global picture: identification contract, complex equivalence, relations
    let (t, trivs) = complex_c2_tni();
    let tni_report = verify_tni(&t, plan);
    checks.push(CheckRecord::flag(name, "tni-contract", tni_report.pass));
    let ident = TubularNbhd::identity(2, 0, Field::Complex, 3.0);
    let equiv = tni_equiv_check(&ident, &t, plan);
    checks.push(CheckRecord::flag(name, "tni-equiv-complex", equiv.pass));
    checks.push(CheckRecord::new(
        name,
        "tni-equiv-commutator",
        equiv.complex_commutator_max,
        plan.tols.cocycle,
    ));
    let cut = cut_up_charts(&t, &trivs, plan)?;
    let bl = GlobalBlowup::build(t.clone(), plan)?;
    let charts = global_taut_charts(&t, &trivs, plan);
    let sweep_plan = SamplePlan {
        interior: plan.interior.max(420),
        ..plan.clone()
    };
    let rel = verify_chart_relations(&bl, &charts, &cut, &sweep_plan);
    let rel_max = rel
        .relations
        .iter()
        .map(|r| r.max_residual)
        .fold(0.0, f64::max);
    checks.push(CheckRecord::new(name, "chart-relations", rel_max, plan.tols.cocycle));
    checks.push(CheckRecord::flag(name, "chart-relations-covering", rel.covering_ok));
    checks.push(CheckRecord::flag(
        name,
        "chart-relations-samples>=1000",
        rel.points_checked >= 1000,
    ));
    Ok(checks)
}

/// Augmented atlas over the origin of the plane (c = 2, c1 = 1): identity, a
/// fiber-diagonal nonlinear chart, a lower shear, and a lower scaling, all
/// with explicit lower-triangular factors.
pub fn aug_point_atlas(plan: &SamplePlan) -> Result<AugAtlas> {
    let dom = BoxDomain::cube(2, 1.0);
    let charts = vec![
        YChart::new(ChartFn::identity(2, dom.clone()), 2, 0, Field::Real),
        YChart::new(
            ChartFn::new(
                2,
                2,
                dom.clone(),
                |x| vec![x[0] * (1.0 + x[1] * x[1]), x[1]],
                |w| vec![w[0] / (1.0 + w[1] * w[1]), w[1]],
            ),
            2,
            0,
            Field::Real,
        ),
        YChart::new(
            ChartFn::linear(
                DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.5, 1.0]),
                dom.clone(),
            ),
            2,
            0,
            Field::Real,
        ),
        YChart::new(
            ChartFn::linear(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]), dom),
            2,
            0,
            Field::Real,
        ),
    ];
    let lam = |alpha: usize| -> crate::field::MatrixFn {
        Arc::new(move |x: &[f64]| match alpha {
            0 => DMatrix::identity(2, 2),
            1 => DMatrix::from_row_slice(2, 2, &[1.0 + x[1] * x[1], 0.0, 0.0, 1.0]),
            2 => DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.5, 1.0]),
            _ => DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]),
        })
    };
    let base = factored_atlas(charts, lam, plan)?;
    AugAtlas::new(base, 1)
}

/// Augmented atlas along a line (c = 2, c1 = 1, m = 1).
pub fn aug_line_atlas(plan: &SamplePlan) -> Result<AugAtlas> {
    let dom = BoxDomain::cube(3, 1.0);
    let charts = vec![
        YChart::new(ChartFn::identity(3, dom.clone()), 2, 1, Field::Real),
        YChart::new(
            ChartFn::new(
                3,
                3,
                dom.clone(),
                |x| vec![x[0], x[1] * (1.0 + x[2] * x[2]), x[2]],
                |w| vec![w[0], w[1] / (1.0 + w[2] * w[2]), w[2]],
            ),
            2,
            1,
            Field::Real,
        ),
        YChart::new(
            ChartFn::new(
                3,
                3,
                dom,
                |x| vec![x[0], x[1] + 0.4 * x[2] * x[0], x[2]],
                |w| vec![w[0], w[1] - 0.4 * w[2] * w[0], w[2]],
            ),
            2,
            1,
            Field::Real,
        ),
    ];
    let lam = |alpha: usize| -> crate::field::MatrixFn {
        Arc::new(move |x: &[f64]| match alpha {
            0 => DMatrix::identity(2, 2),
            1 => DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0 + x[2] * x[2]]),
            _ => DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.4 * x[2], 1.0]),
        })
    };
    let base = factored_atlas(charts, lam, plan)?;
    AugAtlas::new(base, 1)
}

/// Builds an atlas whose factors come from per-chart fiberwise factorizations
/// `phi_a(x)_r = Lambda_a(x) x_r`: the overlap factor is
/// `Lambda_a(x) Lambda_b(x)^{-1}` at the shared ambient point.
fn factored_atlas<L>(charts: Vec<YChart>, lam: L, plan: &SamplePlan) -> Result<FAtlas>
where
    L: Fn(usize) -> Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>,
{
    let mut h_maps: BTreeMap<(usize, usize), HMap> = BTreeMap::new();
    for a in 0..charts.len() {
        for b in 0..charts.len() {
            let la = lam(a);
            let lb = lam(b);
            let inv_b = charts[b].chart.clone();
            h_maps.insert(
                (a, b),
                Arc::new(move |coords: &[f64]| {
                    let x = inv_b.apply_inv(coords);
                    let mb = lb(&x).try_inverse().ok_or_else(|| {
                        BlowupError::ContractViolation("factor not invertible".into())
                    })?;
                    Ok(la(&x) * mb)
                }),
            );
        }
    }
    FAtlas::with_h_maps(charts, h_maps, plan)
}

/// Identification pair, inner product, and adapted trivializations for the
/// augmented global examples.
pub fn aug_global_data(
    line_base: bool,
) -> (TubularNbhd, TubularNbhd, InnerProduct, Vec<NormalTrivialization>) {
    let m = if line_base { 1 } else { 0 };
    let n = 2 + m;
    // generous fiber extent (the worked relation sample blows down through
    // (18, 6)); the base extent matches the trivialization domains
    let mut iv = vec![(-30.0, 30.0); 2];
    if line_base {
        iv.push((-6.0, 6.0));
    }
    let w1 = BoxDomain::new(&iv);
    let t1 = TubularNbhd::new(2, m, Field::Real, w1.clone(), ChartFn::identity(n, w1));
    // radial cubic in the first fiber slot, optional base drift
    let w2 = BoxDomain::cube(n, 0.8);
    let psi2 = ChartFn::new(
        n,
        n,
        w2.clone(),
        move |v| {
            let s = 1.0 + v[0] * v[0];
            let mut out = vec![v[0] * s, v[1] * s];
            if m == 1 {
                out.push(v[2] + 0.3 * v[0] * v[0]);
            }
            out
        },
        move |x| {
            let v0 = cardano_depressed(x[0]);
            let s = 1.0 + v0 * v0;
            let mut out = vec![v0, x[1] / s];
            if m == 1 {
                out.push(x[2] - 0.3 * v0 * v0);
            }
            out
        },
    );
    let t2 = TubularNbhd::new(2, m, Field::Real, w2, psi2);
    let ip = if line_base {
        InnerProduct::new(1, |y: &[f64]| {
            DMatrix::from_element(1, 1, 1.0 + 0.25 * y[0] * y[0])
        })
    } else {
        InnerProduct::standard(1)
    };
    let y_box = if line_base {
        BoxDomain::cube(1, 6.0)
    } else {
        BoxDomain::new(&[])
    };
    let ip_for_frame = ip.clone();
    let trivs = vec![
        NormalTrivialization::new(
            {
                let ip = ip.clone();
                move |y: &[f64]| {
                    let g = ip.gram_at(y)[(0, 0)].sqrt();
                    DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, g])
                }
            },
            ChartFn::identity(y_box.dim(), y_box.clone()),
        ),
        NormalTrivialization::new(
            move |y: &[f64]| {
                let g = ip_for_frame.gram_at(y)[(0, 0)].sqrt();
                DMatrix::from_row_slice(2, 2, &[1.5, 0.0, 0.0, g])
            },
            ChartFn::identity(y_box.dim(), y_box),
        ),
    ];
    (t1, t2, ip, trivs)
}

fn cardano_depressed(w: f64) -> f64 {
    let d = (w * w / 4.0 + 1.0 / 27.0).sqrt();
    (w / 2.0 + d).cbrt() + (w / 2.0 - d).cbrt()
}

fn aug_checks(name: &str, plan: &SamplePlan, line_base: bool) -> Result<Vec<CheckRecord>> {
    use rand::Rng;
    let mut checks = Vec::new();
    let params = AugParams::new(2, 1)?;
    // model identities: rescale invariance of the second projection and the
    // projection identity of the gluing map
    let mut rng = plan.rng_for(0xa1);
    let mut rescale_max = 0.0f64;
    let mut lift_max = 0.0f64;
    let mut count = 0usize;
    while count < 520 {
        let rep = vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
        let lamv = vec![rng.random_range(-2.0..2.0)];
        let Ok(line) = ProjPoint::real(&rep) else {
            continue;
        };
        let g = Gamma2Point::new(line, lamv, params)?;
        let t = rng.random_range(0.2..5.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        rescale_max = rescale_max.max(vec_dist(&pi2(&g), &pi2(&g.rescaled(t))));
        if let Ok(lifted) = phi12_lift(&g, params, 1e-9) {
            lift_max = lift_max.max(vec_dist(&pi1(&lifted), &pi2(&g)));
        }
        count += 1;
    }
    checks.push(CheckRecord::new(name, "pi2-rescale-invariance", rescale_max, plan.tols.identity));
    checks.push(CheckRecord::new(name, "pi1-lift-identity", lift_max, plan.tols.identity));
    checks.push(CheckRecord::flag(name, "model-samples>=500", count >= 500));
    // worked sample, bitwise
    let g = Gamma2Point::new(ProjPoint::real(&[1.0, 2.0])?, vec![3.0], params)?;
    let lifted = phi12_lift(&g, params, 1e-12)?;
    let exact = pi2(&g) == vec![18.0, 3.0]
        && lifted.taut.line.coords() == [18.0, 3.0]
        && lifted.taut.vec == vec![18.0, 3.0];
    checks.push(CheckRecord::flag(name, "worked-sample-exact", exact));
    // atlas conditions
    let atlas = if line_base {
        aug_line_atlas(plan)?
    } else {
        aug_point_atlas(plan)?
    };
    let base_report = verify_f_atlas(&atlas.base, plan);
    checks.push(CheckRecord::new(
        name,
        "atlas-h-identity",
        base_report.h_identity_max,
        plan.tols.identity,
    ));
    let aug_report = verify_aug_atlas(&atlas, plan);
    checks.push(CheckRecord::new(
        name,
        "aug-atlas-block",
        aug_report.block_violation_max,
        plan.tols.identity,
    ));
    checks.push(CheckRecord::new(
        name,
        "aug-atlas-norm",
        aug_report.norm_violation_max,
        plan.tols.identity,
    ));
    // transitions: cocycle and blowdown equivariance on both sectors
    let space = AugBlowupSpace::new(atlas, plan);
    let (coc, equi) = aug_transition_sweep(&space, plan)?;
    checks.push(CheckRecord::new(name, "aug-cocycle", coc, plan.tols.cocycle));
    checks.push(CheckRecord::new(
        name,
        "sector-transition-equivariance",
        equi,
        plan.tols.cocycle,
    ));
    checks.push(exceptional_profile_check(name, &space, plan));
    // global picture
    let (t1, t2, ip, trivs) = aug_global_data(line_base);
    checks.push(CheckRecord::flag(name, "tni-contract", verify_tni(&t2, plan).pass));
    let (aug_equiv_report, equiv) = tni_aug_equiv_check(&t1, &t2, &ip, 1, plan);
    checks.push(CheckRecord::new(
        name,
        "aug-equiv-block",
        aug_equiv_report.block_violation_max,
        plan.tols.identity,
    ));
    checks.push(CheckRecord::new(
        name,
        "aug-equiv-conformal",
        aug_equiv_report.conformal_violation_max,
        plan.tols.identity,
    ));
    checks.push(CheckRecord::flag(
        name,
        "aug-equiv-f-positive",
        aug_equiv_report.f_min > 0.0,
    ));
    // gluing relations on sampled partner pairs
    let (glue_res, glue_count) = aug_gluing_sweep(&t1, &ip, plan)?;
    checks.push(CheckRecord::new(name, "aug-gluing-relations", glue_res, plan.tols.identity));
    checks.push(CheckRecord::flag(name, "gluing-pairs>=200", glue_count >= 200));
    // sector-2 transition equivariance through the conformal factor
    let s2_res = sector2_equivariance_sweep(&t1, &t2, &ip, &equiv, plan)?;
    checks.push(CheckRecord::new(
        name,
        "sector2-transition-equivariance",
        s2_res,
        plan.tols.cocycle,
    ));
    // chart-level relations against the cut-up atlas
    let cut = cut_up_charts(&t1, &trivs, plan)?;
    let aug_cut = AugAtlas::new(clone_real_atlas(&cut, plan)?, 1)?;
    let cut_aug_report = verify_aug_atlas(&aug_cut, plan);
    checks.push(CheckRecord::flag(name, "cutup-aug-conditions", cut_aug_report.pass));
    let mut f_unit = 0.0f64;
    for (a, b) in [(0usize, 1usize), (1, 0)] {
        let coords = vec![0.0; t1.total_dim()];
        f_unit = f_unit.max((aug_cut.f_at(a, b, &coords)? - 1.0).abs());
    }
    checks.push(CheckRecord::new(name, "cutup-aug-f-unit", f_unit, plan.tols.identity));
    let charts = aug_global_charts(&t1, &ip, &trivs, 1, plan)?;
    let rel = verify_aug_chart_relations(&t1, &ip, &charts, &cut, plan);
    let rel_max = rel
        .relations
        .iter()
        .map(|r| r.max_residual)
        .fold(0.0, f64::max);
    checks.push(CheckRecord::new(name, "aug-chart-relations", rel_max, plan.tols.cocycle));
    checks.push(CheckRecord::flag(name, "aug-chart-relations-covering", rel.covering_ok));
    if !line_base {
        checks.push(aug_relations_worked_sample_check(name, &t1, &ip, plan)?);
    }
    Ok(checks)
}

/// Cocycle and blowdown-equivariance sweep over both sectors of an augmented
/// blowup with at least three charts.
fn aug_transition_sweep(space: &AugBlowupSpace, plan: &SamplePlan) -> Result<(f64, f64)> {
    let atlas = &space.atlas;
    let cs = atlas.base.cs();
    let c2 = atlas.params.c2();
    let mut rng = plan.rng_for(0xa2);
    let dom = atlas.base.charts[0].chart.domain.clone();
    let mut coc = 0.0f64;
    let mut equi = 0.0f64;
    let mut produced = 0usize;
    while produced < 520 {
        let x = dom.shrink(0.8).sample(&mut rng);
        let r = atlas.base.charts[0].normal_coords(&x);
        if vec_norm(&r) < 1e-3 {
            continue;
        }
        produced += 1;
        // sector-1 point from the lifted line
        let line = ProjPoint::real(&r)?;
        if vec_norm(&line.normalize().coords()[..atlas.params.c1]) > 1e-3 {
            let p = space.point_s1(0, line, x.clone())?;
            let q_direct = space.transition(2 % atlas.base.len(), &p)?;
            let q_via = space.transition(2 % atlas.base.len(), &space.transition(1, &p)?)?;
            if !space.approx_eq(&q_direct, &q_via, plan.tols.cocycle) {
                coc = coc.max(1.0);
            }
            let AugPoint::Sector1 { chart, g1, base } = &q_direct else {
                unreachable!()
            };
            equi = equi.max(vec_dist(
                &pi1(g1),
                &atlas.base.charts[*chart].normal_coords(base),
            ));
        }
        // sector-2 point over the same base when the tail block is nonzero
        if r[cs - c2..].iter().map(|v| v * v).sum::<f64>().sqrt() > 1e-3 {
            let (u, wv) = r.split_at(atlas.params.c1);
            let w2: f64 = wv.iter().map(|v| v * v).sum();
            let mut rep = vec![1.0];
            for uk in u {
                rep.push(uk / w2);
            }
            let p = space.point_s2(0, ProjPoint::real(&rep)?, wv.to_vec(), x.clone())?;
            let a = 2 % atlas.base.len();
            let q_direct = space.transition(a, &p)?;
            let q_via = space.transition(a, &space.transition(1, &p)?)?;
            if !space.approx_eq(&q_direct, &q_via, plan.tols.cocycle) {
                coc = coc.max(1.0);
            }
            let AugPoint::Sector2 { chart, g2, base } = &q_direct else {
                unreachable!()
            };
            equi = equi.max(vec_dist(
                &pi2(g2),
                &atlas.base.charts[*chart].normal_coords(base),
            ));
        }
    }
    Ok((coc, equi))
}

fn exceptional_profile_check(
    name: &str,
    space: &AugBlowupSpace,
    plan: &SamplePlan,
) -> CheckRecord {
    use rand::Rng;
    let mut rng = plan.rng_for(0xa3);
    let dim = space.atlas.base.dim();
    let mut ok = true;
    for k in 0..50 {
        let mut base = vec![0.0; dim];
        if dim > 2 {
            base[2] = rng.random_range(-0.9..0.9);
        }
        let (line, lamv) = if k % 2 == 0 {
            (
                ProjPoint::real(&[1.0, rng.random_range(-2.0..2.0)]).unwrap(),
                vec![0.0],
            )
        } else {
            (
                ProjPoint::real(&[0.0, 1.0]).unwrap(),
                vec![rng.random_range(0.2..2.0)],
            )
        };
        let Ok(p) = space.point_s2(0, line, lamv, base.clone()) else {
            ok = false;
            continue;
        };
        let Ok(down) = space.blowdown(&p) else {
            ok = false;
            continue;
        };
        ok &= vec_norm(&down[..2]) == 0.0;
        let AugPoint::Sector2 { g2, .. } = &p else {
            unreachable!()
        };
        let (l, t) = g2.canonical();
        let profile_a = t.iter().all(|x| x.abs() < 1e-12) && l[0].abs() > 1e-12;
        let profile_b = l[0].abs() < 1e-12 && vec_norm(&t) > 1e-12;
        ok &= profile_a ^ profile_b;
    }
    CheckRecord::flag(name, "exceptional-profiles", ok)
}

/// Both gluing relations of the augmented quotient on sampled partner pairs.
fn aug_gluing_sweep(
    t: &TubularNbhd,
    ip: &InnerProduct,
    plan: &SamplePlan,
) -> Result<(f64, usize)> {
    use rand::Rng;
    let mut rng = plan.rng_for(0xa4);
    let mut worst = 0.0f64;
    let mut count = 0usize;
    let mut tries = 0usize;
    while count < 220 && tries < 20000 {
        tries += 1;
        let y: Vec<f64> = (0..t.m).map(|_| rng.random_range(-0.9..0.9)).collect();
        let p = AugGlobalPoint::Sector2 {
            line_v: vec![rng.random_range(-1.0..1.0)],
            line_c: rng.random_range(-1.0..1.0),
            mu: rng.random_range(-1.0..1.0),
            w: vec![rng.random_range(-1.0..1.0)],
            y,
        };
        let Ok(pre) = sector2_preimage(&p, ip) else {
            continue;
        };
        if !t.w.contains(&pre) {
            continue;
        }
        let Ok(partner) = sector2_partner(&p, ip) else {
            continue;
        };
        count += 1;
        // relation: the tensor point and its line partner blow down equally
        let a = aug_global_blowdown(&p, t, ip, 1, plan.tols.identity)?;
        let b = aug_global_blowdown(&partner, t, ip, 1, plan.tols.identity)?;
        worst = worst.max(vec_dist(&a, &b));
        // relation: off the exceptional locus both glue to the ambient image
        let x = t.psi.apply(&pre);
        worst = worst.max(vec_dist(&a, &x));
    }
    Ok((worst, count))
}

fn sector2_equivariance_sweep(
    t1: &TubularNbhd,
    t2: &TubularNbhd,
    ip: &InnerProduct,
    equiv: &crate::global::AugTniEquiv,
    plan: &SamplePlan,
) -> Result<f64> {
    use rand::Rng;
    let mut rng = plan.rng_for(0xa5);
    let mut worst = 0.0f64;
    let mut count = 0usize;
    let mut tries = 0usize;
    while count < 520 && tries < 80000 {
        tries += 1;
        let y: Vec<f64> = (0..t2.m).map(|_| rng.random_range(-0.9..0.9)).collect();
        let p = AugGlobalPoint::Sector2 {
            line_v: vec![rng.random_range(-1.0..1.0)],
            line_c: rng.random_range(-1.0..1.0),
            mu: rng.random_range(-1.0..1.0),
            w: vec![rng.random_range(-1.0..1.0)],
            y,
        };
        let Ok(pre) = sector2_preimage(&p, ip) else {
            continue;
        };
        if !t2.w.contains(&pre) {
            continue;
        }
        let Ok(q) = aug_sector2_transition(t1, t2, ip, equiv, &p) else {
            continue;
        };
        count += 1;
        let lhs = t2.psi.apply(&pre);
        let rhs = t1.psi.apply(&sector2_preimage(&q, ip)?);
        worst = worst.max(vec_dist(&lhs, &rhs));
    }
    Ok(worst)
}

/// The worked relation sample: sector-2 point with line rep (1, 2), fiber
/// equal to the rep, distinguished component 3; its blowdown is (18, 6), its
/// trivial-slot chart is (0.5, 6), and the relations close exactly.
fn aug_relations_worked_sample_check(
    name: &str,
    t: &TubularNbhd,
    ip: &InnerProduct,
    plan: &SamplePlan,
) -> Result<CheckRecord> {
    let trivs = vec![NormalTrivialization::identity(2, BoxDomain::new(&[]))];
    let charts = aug_global_charts(t, ip, &trivs, 1, plan)?;
    let p = AugGlobalPoint::Sector2 {
        line_v: vec![1.0],
        line_c: 2.0,
        mu: 1.0,
        w: vec![3.0],
        y: vec![],
    };
    let w0 = charts.coords20(0, &p)?;
    let down = aug_global_blowdown(&p, t, ip, 1, plan.tols.identity)?;
    let ok = w0 == vec![0.5, 6.0]
        && down == vec![18.0, 6.0]
        && down[0] == (w0[1] * w0[1]) * w0[0]
        && down[1] == w0[1];
    Ok(CheckRecord::flag(name, "aug-relations-worked-sample", ok))
}

/// Atlas, identification, and trivializations of the rotated-trivialization
/// equivalence example.
pub fn rotated_equiv_data(
    plan: &SamplePlan,
) -> Result<(FAtlas, TubularNbhd, Vec<NormalTrivialization>)> {
    let dom = BoxDomain::cube(2, 1.0);
    let atlas = FAtlas::from_charts(
        vec![
            YChart::new(ChartFn::identity(2, dom.clone()), 2, 0, Field::Real),
            YChart::new(ChartFn::linear(rotation2(0.7), dom), 2, 0, Field::Real),
        ],
        plan,
    )?;
    let w = BoxDomain::cube(2, 0.9);
    let psi = ChartFn::new(
        2,
        2,
        w.clone(),
        |v| vec![v[0] + v[1] * v[1] * v[1], v[1]],
        |x| vec![x[0] - x[1] * x[1] * x[1], x[1]],
    );
    let t = TubularNbhd::new(2, 0, Field::Real, w, psi);
    let trivs = vec![
        NormalTrivialization::identity(2, BoxDomain::new(&[])),
        NormalTrivialization::constant(rotation2(0.7), BoxDomain::new(&[])),
    ];
    Ok((atlas, t, trivs))
}

fn equivalence_checks(name: &str, plan: &SamplePlan) -> Result<Vec<CheckRecord>> {
    let mut checks = Vec::new();
    let (atlas, t, trivs) = rotated_equiv_data(plan)?;
    let report = verify_f_atlas(&atlas, plan);
    checks.push(CheckRecord::new(
        name,
        "atlas-h-identity",
        report.h_identity_max,
        plan.tols.identity,
    ));
    // relation suite on the global blowup of the shear identification
    let cut = cut_up_charts(&t, &trivs, plan)?;
    let bl = GlobalBlowup::build(t.clone(), plan)?;
    let gcharts = global_taut_charts(&t, &trivs, plan);
    let sweep_plan = SamplePlan {
        interior: plan.interior.max(420),
        ..plan.clone()
    };
    let rel = verify_chart_relations(&bl, &gcharts, &cut, &sweep_plan);
    let rel_max = rel
        .relations
        .iter()
        .map(|r| r.max_residual)
        .fold(0.0, f64::max);
    checks.push(CheckRecord::new(name, "chart-relations", rel_max, plan.tols.cocycle));
    checks.push(CheckRecord::flag(name, "chart-relations-covering", rel.covering_ok));
    checks.push(CheckRecord::flag(
        name,
        "chart-relations-samples>=1000",
        rel.points_checked >= 1000,
    ));
    // round trip: assemble the atlas, cut it up again, verify the union
    let assembled = assemble_tni(&atlas, plan)?;
    checks.push(CheckRecord::flag(
        name,
        "assemble-verify-tni",
        verify_tni(&assembled, plan).pass,
    ));
    let recut = cut_up_charts(&assembled, &trivs, plan)?;
    let mut union_charts = atlas.charts.clone();
    union_charts.extend(recut.charts.iter().cloned());
    let light_plan = SamplePlan {
        interior: 40,
        near_per_grade: 8,
        on_y: 12,
        ..plan.clone()
    };
    let union = FAtlas::from_charts(union_charts, &light_plan)?;
    let union_report = verify_f_atlas(&union, &light_plan);
    checks.push(CheckRecord::new(
        name,
        "roundtrip-union-atlas",
        union_report.h_identity_max,
        plan.tols.identity,
    ));
    checks.push(CheckRecord::flag(
        name,
        "roundtrip-union-invertible",
        union_report.min_singular_on_y > 1e-6,
    ));
    // the assembled identification is equivalent to the shear identification
    let equiv = tni_equiv_check(&assembled, &t, plan);
    checks.push(CheckRecord::flag(name, "assembled-equiv-input-tni", equiv.pass));
    Ok(checks)
}

/// The two overlapping-interval identifications of the merge example.
pub fn merge_tnis() -> (TubularNbhd, TubularNbhd) {
    let w1 = BoxDomain::new(&[(-0.5, 0.5), (-2.0, 0.6)]);
    let t1 = TubularNbhd::new(
        1,
        1,
        Field::Real,
        w1.clone(),
        ChartFn::identity(2, w1),
    );
    let w2 = BoxDomain::new(&[(-0.5, 0.5), (-0.6, 2.0)]);
    let gamma = |y: f64| 0.3 * (1.0 + 0.5 * y.sin());
    let psi2 = ChartFn::new(
        2,
        2,
        w2.clone(),
        move |v| vec![v[0] + gamma(v[1]) * v[0] * v[0], v[1]],
        move |x| {
            let g = gamma(x[1]);
            vec![(-1.0 + (1.0 + 4.0 * g * x[0]).sqrt()) / (2.0 * g), x[1]]
        },
    );
    let t2 = TubularNbhd::new(1, 1, Field::Real, w2, psi2);
    (t1, t2)
}

fn merge_checks(name: &str, plan: &SamplePlan) -> Result<Vec<CheckRecord>> {
    let mut checks = Vec::new();
    let (t1, t2) = merge_tnis();
    checks.push(CheckRecord::flag(
        name,
        "inputs-equivalent",
        tni_equiv_check(&t1, &t2, plan).pass,
    ));
    let merged = merge_tni(&t1, &t2, plan)?;
    checks.push(CheckRecord::flag(
        name,
        "merge-contract",
        verify_tni(&merged, plan).pass,
    ));
    checks.push(CheckRecord::new(
        name,
        "merge-roundtrip",
        merged.psi.check_roundtrip(plan, 0x4242)?,
        plan.tols.roundtrip,
    ));
    checks.push(CheckRecord::flag(
        name,
        "merge-equiv-first",
        tni_equiv_check(&merged, &t1, plan).pass,
    ));
    checks.push(CheckRecord::flag(
        name,
        "merge-equiv-second",
        tni_equiv_check(&merged, &t2, plan).pass,
    ));
    let merged_rev = merge_tni(&t2, &t1, plan)?;
    checks.push(CheckRecord::flag(
        name,
        "merge-order-robust",
        tni_equiv_check(&merged, &merged_rev, plan).pass
            && tni_equiv_check(&merged_rev, &merged, plan).pass,
    ));
    // the merged map equals the second map on the second's exclusive region
    let (rlo, rhi) = merged.w.interval(0);
    let probe = [0.5 * (rlo + rhi) + 0.25 * (rhi - rlo), 1.5];
    checks.push(CheckRecord::new(
        name,
        "merge-matches-second-region",
        vec_dist(&merged.psi.apply(&probe), &t2.psi.apply(&probe)),
        plan.tols.identity,
    ));
    Ok(checks)
}
