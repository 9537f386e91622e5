//! Randomized invariants for the numerical core.

use kschem_core::bound::{
    geometry_constants, lower_bound_time, payne_constants, payne_inequality_check, ScriptConstants,
};
use kschem_core::diagnostics::psi_components;
use kschem_core::model::{condition_bound, PhiCertificate};
use kschem_core::{Grid, GridSpec, ScalarField};
use proptest::prelude::*;

fn small_grid() -> Grid {
    Grid::new(GridSpec {
        lo: [-0.5; 3],
        hi: [0.5; 3],
        n: [9; 3],
    })
    .unwrap()
}

fn field_values(len: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-10.0f64..10.0, len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn integrate_is_linear(
        a in -5.0f64..5.0,
        b in -5.0f64..5.0,
        xs in field_values(9 * 9 * 9),
        ys in field_values(9 * 9 * 9),
    ) {
        let g = small_grid();
        let f1 = ScalarField::from_values(&g, xs.clone()).unwrap();
        let f2 = ScalarField::from_values(&g, ys.clone()).unwrap();
        let combo = ScalarField::from_values(
            &g,
            xs.iter().zip(&ys).map(|(x, y)| a * x + b * y).collect(),
        )
        .unwrap();
        let lhs = g.integrate(&combo);
        let rhs = a * g.integrate(&f1) + b * g.integrate(&f2);
        let scale = lhs.abs().max(rhs.abs()).max(1.0);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale);
    }

    #[test]
    fn psi_recomposes_and_orders_by_tau(xs in field_values(9 * 9 * 9)) {
        let g = small_grid();
        let u = ScalarField::from_values(&g, xs.clone()).unwrap();
        let v = ScalarField::from_values(&g, xs.iter().map(|x| x.cos()).collect()).unwrap();
        let w = ScalarField::from_values(&g, xs.iter().map(|x| x.abs()).collect()).unwrap();
        let c = psi_components(&g, &u, &v, &w);
        let psi1 = c.psi(1.0);
        let psi0 = c.psi(0.0);
        prop_assert!(psi0 <= psi1 + 1e-12 * psi1.abs().max(1.0));
        prop_assert!((psi1 - (c.u2 + c.grad_v4 + c.grad_w2)).abs() <= 1e-12 * psi1.abs().max(1.0));
    }

    #[test]
    fn payne_inequality_holds_on_random_nonneg_fields(
        xs in field_values(9 * 9 * 9),
        eps in 0.05f64..10.0,
    ) {
        let g = small_grid();
        let (rho, d) = geometry_constants(g.spec()).unwrap();
        let consts = payne_constants(rho, d).unwrap();
        let f = ScalarField::from_values(&g, xs.iter().map(|x| x.max(0.0)).collect()).unwrap();
        prop_assert!(payne_inequality_check(&g, &f, eps, &consts).unwrap());
    }

    #[test]
    fn lower_bound_is_monotone(
        psi0 in 1.0f64..100.0,
        a in 0.1f64..10.0,
        b in 0.0f64..1.0,
        c in 0.0f64..1.0,
        tau in 0u8..2,
    ) {
        let base = ScriptConstants { a, b, c, tau };
        let t = lower_bound_time(psi0, &base).unwrap();
        prop_assert!(t > 0.0 && t.is_finite());
        let t_bigger_psi = lower_bound_time(psi0 * 1.5, &base).unwrap();
        prop_assert!(t_bigger_psi < t);
        let t_bigger_a = lower_bound_time(psi0, &ScriptConstants { a: a * 2.0, ..base }).unwrap();
        prop_assert!(t_bigger_a < t);
        // and the pure-cubic closed form brackets from below
        let cubic_only = lower_bound_time(psi0, &ScriptConstants { a, b: 0.0, c: 0.0, tau }).unwrap();
        prop_assert!(t <= cubic_only * (1.0 + 1e-9));
    }

    #[test]
    fn weight_identity_and_monotonicity(
        p in 1.55f64..6.0,
        eps in 0.02f64..0.98,
        frac in 0.0f64..1.0,
    ) {
        let range = 0.99 * condition_bound(p, eps);
        let cert = PhiCertificate::new(p, eps, range).unwrap();
        prop_assert!(cert.satisfied);
        let x = frac * range;
        let phi = cert.phi(x).unwrap();
        prop_assert!(phi >= 1.0 - 1e-13);
        prop_assert!(cert.phi_d1(x).unwrap() >= -1e-11 * phi);
        prop_assert!(cert.identity_residual(x).unwrap().abs() <= 1e-8);
    }
}
