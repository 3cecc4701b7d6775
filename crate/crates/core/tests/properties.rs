//! Property tests for the structural invariants of the numeric kernels.

use blowup_core::aug::{gamma2_chart, gamma2_chart_inv, pi2, AugParams, Gamma2Point};
use blowup_core::chart::{BoxDomain, ChartFn};
use blowup_core::field::vec_dist;
use blowup_core::local::hadamard_at;
use blowup_core::{proj_normalize, taut_chart, taut_chart_inv, Field, ProjPoint};
use proptest::prelude::*;

fn nonzero_vec(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0f64, n).prop_filter("nonzero", |v| {
        v.iter().map(|x| x * x).sum::<f64>().sqrt() > 1e-3
    })
}

proptest! {
    /// Normal form is idempotent and invariant under nonzero rescaling.
    #[test]
    fn proj_normal_form_is_scale_invariant(
        v in nonzero_vec(3),
        t in prop_oneof![(-4.0..-0.1f64), (0.1..4.0f64)],
    ) {
        let p = ProjPoint::real(&v).unwrap();
        let scaled: Vec<f64> = v.iter().map(|x| t * x).collect();
        let q = ProjPoint::real(&scaled).unwrap();
        prop_assert!(p.approx_eq(&q, 1e-9));
        let n = proj_normalize(&p);
        let nn = proj_normalize(&n);
        prop_assert!(vec_dist(n.coords(), nn.coords()) < 1e-12);
    }

    /// Normal-form equality is symmetric and transitive on rescales.
    #[test]
    fn proj_equality_is_an_equivalence(
        v in nonzero_vec(3),
        s in 0.1..4.0f64,
        t in 0.1..4.0f64,
    ) {
        let a = ProjPoint::real(&v).unwrap();
        let b = ProjPoint::real(&v.iter().map(|x| s * x).collect::<Vec<_>>()).unwrap();
        let c = ProjPoint::real(&v.iter().map(|x| -t * x).collect::<Vec<_>>()).unwrap();
        prop_assert!(a.approx_eq(&a, 1e-12));
        prop_assert!(a.approx_eq(&b, 1e-9) && b.approx_eq(&a, 1e-9));
        prop_assert!(b.approx_eq(&c, 1e-9) && a.approx_eq(&c, 1e-9));
    }

    /// Tautological chart and its inverse roundtrip over both fields.
    #[test]
    fn taut_chart_roundtrips(
        w in prop::collection::vec(-2.0..2.0f64, 6),
        i in 0usize..3,
        complex in any::<bool>(),
    ) {
        let field = if complex { Field::Complex } else { Field::Real };
        let w = &w[..field.real_dim(3)];
        let p = taut_chart_inv(w, i, 3, field);
        let back = taut_chart(&p, i, 1e-9).unwrap();
        prop_assert!(vec_dist(&back, w) < 1e-9);
    }

    /// The second-sector projection and charts are invariant under the
    /// rank-one reparametrization.
    #[test]
    fn gamma2_data_is_rescale_invariant(
        rep in nonzero_vec(2),
        lam in prop::collection::vec(-2.0..2.0f64, 2),
        t in prop_oneof![(-4.0..-0.2f64), (0.2..4.0f64)],
    ) {
        let params = AugParams::new(3, 1).unwrap();
        let g = Gamma2Point::new(ProjPoint::real(&rep).unwrap(), lam, params).unwrap();
        let gs = g.rescaled(t);
        prop_assert!(vec_dist(&pi2(&g), &pi2(&gs)) < 1e-9);
        let i = g.line.pivot();
        let a = gamma2_chart(&g, i, 1e-9).unwrap();
        let b = gamma2_chart(&gs, i, 1e-9).unwrap();
        prop_assert!(vec_dist(&a, &b) < 1e-9);
    }

    /// Second-sector charts roundtrip through their inverses.
    #[test]
    fn gamma2_chart_roundtrips(
        w in prop::collection::vec(-2.0..2.0f64, 4),
        i in 0usize..3,
    ) {
        let params = AugParams::new(4, 2).unwrap();
        let g = gamma2_chart_inv(&w, i, params).unwrap();
        let back = gamma2_chart(&g, i, 1e-9).unwrap();
        prop_assert!(vec_dist(&back, &w) < 1e-9);
    }

    /// The integral factor identity holds for random triangular cubic
    /// overlaps: the extracted matrix reproduces the normal block.
    #[test]
    fn hadamard_factors_random_triangular_overlaps(
        a in -1.0..1.0f64,
        b in -1.0..1.0f64,
        x in -0.8..0.8f64,
        y in -0.8..0.8f64,
    ) {
        let dom = BoxDomain::cube(2, 1.0);
        let ov = ChartFn::new(
            2,
            2,
            dom,
            move |v| vec![v[0] * (1.0 + a * v[1] * v[1]) + b * v[1] * v[1] * v[1], v[1]],
            move |w| vec![(w[0] - b * w[1] * w[1] * w[1]) / (1.0 + a * w[1] * w[1]), w[1]],
        );
        let h = hadamard_at(&ov, 2, &[x, y], 1e-9).unwrap();
        let img = ov.apply(&[x, y]);
        let hx = [h[(0, 0)] * x + h[(0, 1)] * y, h[(1, 0)] * x + h[(1, 1)] * y];
        prop_assert!(vec_dist(&hx, &img[..2]) < 1e-9);
    }
}
