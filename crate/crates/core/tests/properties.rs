use proptest::prelude::*;
use yamabe_core::barriers::{time_reparam, time_reparam_rate, xi_k, BarrierParams};
use yamabe_core::solver::{l1_distance, max_tracker};
use yamabe_core::{
    gamma_roots, rate_d, Barriers, BoundaryMode, Exponents, Family, Field, Grid1D, Solver,
    SolverConfig,
};

const FAMILIES: [Family; 3] = [Family::Five, Family::Four, Family::Three];

proptest! {
    #[test]
    fn vieta_identities(n in 3u32..12, lambda in 1.01f64..20.0) {
        let e = Exponents::new(n).unwrap();
        let g = gamma_roots(lambda, &e).unwrap();
        let p = e.p();
        prop_assert!(g.gamma_small > 0.0 && g.gamma_small < g.gamma_large);
        prop_assert!((g.gamma_small * g.gamma_large - (p - 1.0)).abs() <= 1e-12 * p);
        prop_assert!((g.gamma_small + g.gamma_large - lambda * p).abs() <= 1e-12 * lambda * p);
    }

    #[test]
    fn rate_d_is_symmetric(l1 in 1.01f64..10.0, l2 in 1.01f64..10.0) {
        let e = Exponents::new(3).unwrap();
        prop_assert_eq!(rate_d(l1, l2, &e).unwrap(), rate_d(l2, l1, &e).unwrap());
    }

    #[test]
    fn xi_solves_its_ode(k in 0.01f64..0.5, tau in -40.0f64..-2.0) {
        let e = Exponents::new(3).unwrap();
        let h = 1e-3;
        let xi = xi_k(k, tau, &e).unwrap();
        let d = (xi_k(k, tau + h, &e).unwrap() - xi_k(k, tau - h, &e).unwrap()) / (2.0 * h);
        let rhs = xi - e.pow_m(xi);
        prop_assert!(xi > 0.0 && xi < 1.0);
        // The absolute floor covers cancellation once xi is within 1e-12 of 1.
        prop_assert!((d - rhs).abs() <= 1e-6 * rhs.abs() + 1e-12, "{} {}", d, rhs);
    }

    #[test]
    fn reparametrised_time_runs_ahead(tau in -35.0f64..-10.0) {
        let e = Exponents::new(3).unwrap();
        prop_assert!(time_reparam(tau, -1.0, &e) > tau);
        prop_assert!(time_reparam_rate(tau, -1.0, &e) > 0.0);
    }

    #[test]
    fn max_tracker_finds_parabola_vertex(c in -3.0f64..3.0, top in 70.0f64..100.0) {
        let g = Grid1D::centered(0.0, 5.0, 0.01).unwrap();
        let f = Field::from_fn(g, 0.0, |x| top - (x - c) * (x - c)).unwrap();
        let (x0, v) = max_tracker(&f).unwrap();
        prop_assert!((x0 - c).abs() < 1e-9);
        prop_assert!((v - top).abs() < 1e-9);
    }

    #[test]
    fn max_tracker_respects_mirror_symmetry(w in 0.5f64..3.0) {
        let g = Grid1D::centered(1.0, 6.0, 0.01).unwrap();
        let f = Field::from_fn(g, 0.0, |x| (-(x - 1.0) * (x - 1.0) / w).exp()).unwrap();
        let (x0, _) = max_tracker(&f).unwrap();
        prop_assert!((x0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn l1_distance_is_a_metric(a in 0.0f64..1.0, b in 0.0f64..1.0, c in 0.0f64..1.0) {
        let g = Grid1D::centered(0.0, 2.0, 0.05).unwrap();
        let mk = |s: f64| Field::from_fn(g, 0.0, move |x| s * (-x * x).exp()).unwrap();
        let (fa, fb, fc) = (mk(a), mk(b), mk(c));
        let ab = l1_distance(&fa, &fb).unwrap();
        prop_assert_eq!(ab, l1_distance(&fb, &fa).unwrap());
        prop_assert_eq!(l1_distance(&fa, &fa).unwrap(), 0.0);
        let via = l1_distance(&fa, &fc).unwrap() + l1_distance(&fc, &fb).unwrap();
        prop_assert!(ab <= via + 1e-15);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn barrier_sandwich_and_family_order(
        lambda in 1.2f64..4.0,
        lambda_prime in 1.2f64..4.0,
        h in 0.0f64..10.0,
        h_prime in 0.0f64..10.0,
        k in 0.01f64..0.5,
        points in prop::collection::vec((-120.0f64..120.0, -60.0f64..-10.0), 40),
    ) {
        let params = BarrierParams { lambda, lambda_prime, h, h_prime, k, ..BarrierParams::default() };
        let b = Barriers::solve(params, Exponents::new(3).unwrap(), 1e-3).unwrap();
        for (x, tau) in points {
            let lo = FAMILIES.map(|f| b.lower(f, x, tau));
            let up = FAMILIES.map(|f| b.upper(f, x, tau));
            for i in 0..3 {
                prop_assert!(lo[i] <= up[i] + 1e-14, "{:?} {} {}", FAMILIES[i], x, tau);
                prop_assert!(lo[i] > 0.0 && up[i] <= 1.0);
            }
            prop_assert!(lo[0] <= lo[1].min(lo[2]) + 1e-14);
            prop_assert!(up[0] <= up[1].min(up[2]) + 1e-14);
        }
    }

    #[test]
    fn solver_preserves_order(a_hi in 0.02f64..0.2, gap in 0.005f64..0.05, width in 0.5f64..3.0) {
        let e = Exponents::new(3).unwrap();
        let g = Grid1D::centered(0.0, 4.0, 0.1).unwrap();
        let tau = -8.0;
        let xi = xi_k(0.1, tau, &e).unwrap();
        let data = |a: f64| Field::from_fn(g, tau, |x| xi * (1.0 - a * (-x * x / width).exp())).unwrap();
        let cfg = SolverConfig { dt: 0.01, record_every: 10, ..SolverConfig::default() };
        let s = Solver::new(e, cfg, BoundaryMode::ZeroFlux, None).unwrap();
        let low = s.evolve(data(a_hi), tau + 1.0).unwrap();
        let high = s.evolve(data(a_hi - gap), tau + 1.0).unwrap();
        for (l, h) in low.snapshots.iter().zip(&high.snapshots) {
            for (p, q) in l.values.iter().zip(&h.values) {
                prop_assert!(p <= &(q + 1e-14));
            }
        }
    }
}
