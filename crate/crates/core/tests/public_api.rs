use folitor::chart::{develop, ChartConfig, LeafPatch};
use folitor::homotopy::{closedness_residual, integrate_homotopy, BeltramiField, SolverConfig};
use folitor::metric::{assemble_closed_form, build_h, LeafForm, MetricConfig};
use folitor::spectral::{random_beltrami, random_field, RippleSpec};
use folitor::{Dim, Field, FoliationParams, FourierField, Geometry, ModeIndex, NormSpec, SymbolTag, C64};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn geom(a1: f64, a2: f64) -> Geometry<f64> {
    Geometry::Torus3(FoliationParams::new(a1, a2))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn json_round_trip_is_exact(seed in any::<u64>(), m in 1usize..4, two in any::<bool>()) {
        let dim = if two { Dim::Torus2 } else { Dim::Torus3 };
        let f: Field = random_field(dim, m, 0.3, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(Field::from_json(&f.to_json()).unwrap(), f);
    }

    #[test]
    fn u_is_unitary_and_intertwines(seed in any::<u64>(), a1 in 0.1f64..3.0, a2 in 0.1f64..3.0) {
        let g = geom(a1, a2);
        let a: Field = random_field(Dim::Torus3, 3, 0.2, &mut ChaCha8Rng::seed_from_u64(seed));
        let ua = g.apply(SymbolTag::U, &a).unwrap();
        for j in 0..=2 {
            let s = NormSpec::Sobolev(j);
            prop_assert!((ua.norm(s) - a.norm(s)).abs() <= 1e-12 * a.norm(s));
        }
        let mut d = g.apply(SymbolTag::Dzbar, &ua).unwrap();
        d.axpy(C64::new(-1.0, 0.0), &g.apply(SymbolTag::Dz, &a).unwrap());
        prop_assert!(d.max_abs_coeff() <= 1e-12);
    }

    #[test]
    fn solution_is_closed_and_normalized(seed in 0u64..1000) {
        let g = geom(std::f64::consts::SQRT_2, 3f64.sqrt());
        let spec = RippleSpec { mean_max: 0.3, ..RippleSpec::default() };
        let mu = BeltramiField::new(random_beltrami(Dim::Torus3, 3, &spec, &mut ChaCha8Rng::seed_from_u64(seed))).unwrap();
        let sol = integrate_homotopy(&g, &mu, &SolverConfig::default()).unwrap();
        let f = sol.final_field();
        let r = closedness_residual(&g, mu.mu(), f).unwrap();
        prop_assert!(r.in_band <= 1e-8, "{:?}", r);
        prop_assert!(sol.final_time() == 1.0);
    }
}

#[test]
fn pipeline_from_mu_to_chart() {
    let g = geom(std::f64::consts::SQRT_2, 3f64.sqrt());
    let spec = RippleSpec { mean_max: 0.3, ..RippleSpec::default() };
    let mu: Field = random_beltrami(Dim::Torus3, 5, &spec, &mut ChaCha8Rng::seed_from_u64(2));
    let b = BeltramiField::new(mu.clone()).unwrap();
    let f = integrate_homotopy(&g, &b, &SolverConfig::default()).unwrap().final_field().clone();
    let form = LeafForm::new(f, mu).unwrap();
    let cl = build_h(&g, &form, &MetricConfig::default()).unwrap();
    let om = assemble_closed_form(&g, &form, &cl).unwrap();
    assert!(om.dform_residual <= 1e-6);
    let patch = LeafPatch::new([1.0, 2.0, 3.0], 1.5, 9).unwrap();
    let ch = develop(&g, &form, &patch, &ChartConfig::default()).unwrap();
    assert!(ch.min_jacobian > 0.0 && ch.min_numeric_jacobian > 0.0);
    assert!(ch.derivative_error < 1e-6, "{}", ch.derivative_error);
}

#[test]
fn zero_mu_on_both_tori_gives_one() {
    for g in [geom(0.5f64.sqrt(), 7f64.sqrt()), Geometry::Torus2] {
        let b = BeltramiField::new(FourierField::zeros(g.dim(), 3)).unwrap();
        let sol = integrate_homotopy(&g, &b, &SolverConfig::default()).unwrap();
        let f = sol.final_field();
        assert_eq!(f.get(ModeIndex::ZERO), C64::new(1.0, 0.0));
        assert_eq!(f.norm_h0(), 1.0);
    }
}
