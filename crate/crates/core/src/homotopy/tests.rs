use super::*;
use crate::foliation::FoliationParams;
use crate::spectral::{projective_distance, random_beltrami, random_field, Field, ModeIndex, RippleSpec};
use num_complex::Complex64 as C;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn t3() -> Geometry<f64> {
    Geometry::Torus3(FoliationParams::new(std::f64::consts::SQRT_2, 3f64.sqrt()))
}

fn constant(dim: Dim, m: usize, c: C) -> Field {
    FourierField::constant(dim, m, c)
}

fn smooth_mu(seed: u64, dim: Dim, m: usize, mean_max: f64) -> BeltramiField<f64> {
    let spec = RippleSpec {
        mean_max,
        ..RippleSpec::default()
    };
    let mu = random_beltrami(dim, m, &spec, &mut ChaCha8Rng::seed_from_u64(seed));
    BeltramiField::new(mu).unwrap()
}

fn cos_mode(dim: Dim, m: usize, n: ModeIndex, amp: f64) -> Field {
    let mut f = FourierField::zeros(dim, m);
    f.set(n, C::new(amp / 2.0, 0.0));
    f.set(-n, C::new(amp / 2.0, 0.0));
    f
}

#[test]
fn beltrami_field_rejects_sup_at_least_one() {
    let bad = constant(Dim::Torus3, 2, C::new(0.6, 0.8));
    assert!(matches!(BeltramiField::new(bad), Err(Error::BeltramiBound { .. })));
    let ok = BeltramiField::new(cos_mode(Dim::Torus3, 3, ModeIndex::new(0, 1, 0), 0.9)).unwrap();
    assert!((ok.delta() - 0.9).abs() < 1e-12);
    assert!(ok.delta() >= ok.delta_grid());
}

#[test]
fn resolvent_of_zero_is_identity() {
    let g = random_field(Dim::Torus3, 3, 0.3, &mut ChaCha8Rng::seed_from_u64(4));
    let out = resolvent_apply(&t3(), &FourierField::zeros(Dim::Torus3, 3), &g, 1e-13).unwrap();
    assert_eq!(out.y, g);
    assert!(out.iterations <= 2);
}

#[test]
fn resolvent_geometric_series_on_one_mode() {
    let n = ModeIndex::new(0, 1, 0);
    let g = FourierField::single_mode(Dim::Torus3, 3, n, C::new(1.0, 0.0));
    let nu = constant(Dim::Torus3, 3, C::new(0.5, 0.0));
    let out = resolvent_apply(&t3(), &nu, &g, 1e-14).unwrap();
    assert!((out.y.get(n) - C::new(2.0 / 3.0, 0.0)).norm() < 1e-13);
    assert!((out.y.norm_h0() - 2.0 / 3.0).abs() < 1e-13);
}

/// Dense `(Id - U P nu)` on the mode space, column `j` holding the image of mode `j`.
fn dense_operator(geom: &Geometry<f64>, nu: &Field) -> nalgebra::DMatrix<C> {
    let modes: Vec<ModeIndex> = nu.modes().collect();
    let m = nu.cutoff() as i64;
    let n = modes.len();
    nalgebra::DMatrix::from_fn(n, n, |i, j| {
        let d = modes[i] - modes[j];
        let conv = if d.linf() <= m { nu.get(d) } else { C::new(0.0, 0.0) };
        let id = if i == j { 1.0 } else { 0.0 };
        C::new(id, 0.0) - geom.symbol(SymbolTag::U, modes[i]) * conv
    })
}

#[test]
fn resolvent_matches_dense_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for seed in 0..3 {
        let raw: Field = random_field(Dim::Torus3, 4, 1.0, &mut rng);
        let s = crate::spectral::sup_refined(&raw, 4).value;
        let nu = raw.scale_real(0.4 / s);
        let g = random_field(Dim::Torus3, 4, 0.5, &mut rng);
        let geom = t3();
        let out = resolvent_apply(&geom, &nu, &g, 1e-14).unwrap();
        let a = dense_operator(&geom, &nu);
        let want = a.lu().solve(&nalgebra::DVector::from_column_slice(g.coeffs())).unwrap();
        let err = out
            .y
            .coeffs()
            .iter()
            .zip(want.iter())
            .fold(0.0f64, |m, (x, y)| m.max((x - y).norm()));
        assert!(err < 1e-8, "seed {seed}: {err}");
        assert!(out.iterations <= resolvent_budget(0.4, 1e-14));
    }
}

#[test]
fn resolvent_iteration_contracts_at_rate_delta() {
    let mu = smooth_mu(3, Dim::Torus3, 4, 0.5);
    let geom = t3();
    let mut ws = Workspace::new(&geom, 4);
    let vals = ws.values(mu.mu());
    let g = random_field(Dim::Torus3, 4, 0.5, &mut ChaCha8Rng::seed_from_u64(8));
    let mut y = g.clone();
    let mut prev = f64::INFINITY;
    for _ in 0..20 {
        let mut next = ws.u_product(&vals, &y);
        next.axpy(C::new(1.0, 0.0), &g);
        let d = (&next - &y).norm_h0();
        if prev.is_finite() && prev > 1e-12 {
            assert!(d <= mu.delta() * prev * (1.0 + 1e-9), "{d} vs {prev}");
        }
        prev = d;
        y = next;
    }
}

#[test]
fn residual_examples() {
    let geom = t3();
    let one = constant(Dim::Torus3, 3, C::new(1.0, 0.0));
    let zero = FourierField::zeros(Dim::Torus3, 3);
    let r0 = closedness_residual(&geom, &zero, &one).unwrap();
    assert_eq!(r0.total, 0.0, "{r0:?}");
    let c = constant(Dim::Torus3, 3, C::new(0.3, -0.2));
    let f = constant(Dim::Torus3, 3, C::new(2.0, 1.0));
    assert!(closedness_residual(&geom, &c, &f).unwrap().total < 1e-15);
    let n = ModeIndex::new(1, -2, 1);
    let nu = FourierField::single_mode(Dim::Torus3, 3, n, C::new(0.25, 0.1));
    let r = closedness_residual(&geom, &nu, &one).unwrap();
    let want = geom.lambda(n).norm() * C::new(0.25, 0.1).norm();
    assert!((r.total - want).abs() < 1e-14);
    assert!(r.spill < 1e-14);
}

#[test]
fn residual_counts_spill_beyond_cutoff() {
    let geom = t3();
    let n = ModeIndex::new(0, 1, 0);
    let nu = FourierField::single_mode(Dim::Torus3, 2, n, C::new(0.5, 0.0));
    let f = FourierField::single_mode(Dim::Torus3, 2, ModeIndex::new(0, 2, 0), C::new(1.0, 0.0));
    let r = closedness_residual(&geom, &nu, &f).unwrap();
    let spill = geom.lambda(ModeIndex::new(0, 3, 0)).norm() * 0.5;
    assert!((r.spill - spill).abs() < 1e-14);
    assert!((r.total.powi(2) - r.in_band.powi(2) - r.spill.powi(2)).abs() < 1e-12);
}

#[test]
fn zero_mu_keeps_f_identically_one() {
    let mu = BeltramiField::new(FourierField::zeros(Dim::Torus3, 3)).unwrap();
    let sol = integrate_homotopy(&t3(), &mu, &SolverConfig::default()).unwrap();
    assert_eq!(sol.times[0], 0.0);
    assert_eq!(sol.final_time(), 1.0);
    for f in &sol.fields {
        assert_eq!(*f, constant(Dim::Torus3, 3, C::new(1.0, 0.0)));
    }
}

#[test]
fn constant_mu_gives_scalar_closed_form() {
    let half = C::new(0.5, 0.3) * (0.5 / C::new(0.5, 0.3).norm());
    for c in [C::new(0.2, 0.0), C::new(0.5, 0.0), half] {
        for (geom, dim) in [(t3(), Dim::Torus3), (Geometry::Torus2, Dim::Torus2)] {
            let mu = BeltramiField::new(constant(dim, 3, c)).unwrap();
            let sol = integrate_homotopy(&geom, &mu, &SolverConfig::default()).unwrap();
            let f = sol.final_field();
            let want = (C::new(1.0, 0.0) - c).inv();
            assert!((f.average() - want).norm() < 1e-8, "{c} {dim}: {}", f.average());
            let rest = f.coeffs().iter().map(|v| v.norm()).sum::<f64>() - f.average().norm();
            assert!(rest < 1e-12);
            assert_eq!(sol.fields[0], constant(dim, 3, C::new(1.0, 0.0)));
        }
    }
}

#[test]
fn f_at_time_zero_is_exactly_one_and_residuals_small() {
    let mu = smooth_mu(5, Dim::Torus3, 4, 0.35);
    let sol = integrate_homotopy(&t3(), &mu, &SolverConfig::default()).unwrap();
    assert_eq!(sol.fields[0], constant(Dim::Torus3, 4, C::new(1.0, 0.0)));
    for r in &sol.records {
        assert!(r.residual.in_band <= 1e-6);
        assert!(r.min_abs_f > 0.0);
    }
    assert!(sol.times.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn conserved_identity_holds_along_the_path() {
    let mu = smooth_mu(6, Dim::Torus3, 4, 0.4);
    let geom = t3();
    let sol = integrate_homotopy(&geom, &mu, &SolverConfig::default()).unwrap();
    let mut ws = Workspace::new(&geom, 4);
    for (t, f) in sol.times.iter().zip(&sol.fields) {
        let nu = mu.mu().scale_real(*t);
        let vals = ws.values(&nu);
        let w = &*f - &ws.u_product(&vals, f);
        let defect = &w - &constant(Dim::Torus3, 4, C::new(1.0, 0.0));
        assert!(defect.norm_h0() < 1e-9, "t = {t}: {}", defect.norm_h0());
    }
}

#[test]
fn kernel_oracle_trivial_cases() {
    let geom = t3();
    let zero = BeltramiField::new(FourierField::zeros(Dim::Torus3, 3)).unwrap();
    let k = kernel_oracle(&geom, &zero, 3).unwrap();
    assert!((&k.field - &constant(Dim::Torus3, 3, C::new(1.0, 0.0))).max_abs_coeff() < 1e-12);
    let min_lp = FourierField::<f64>::zeros(Dim::Torus3, 3)
        .modes()
        .filter(|n| !n.is_zero())
        .map(|n| geom.symbol(SymbolTag::Dzbar, n).norm())
        .fold(f64::INFINITY, f64::min);
    assert!(k.sigma_next >= min_lp * (1.0 - 1e-9), "{} {min_lp}", k.sigma_next);
    assert!(k.sigma_min < 1e-12);
    assert!(k.warning.is_none());

    let c = BeltramiField::new(constant(Dim::Torus3, 3, C::new(0.3, 0.2))).unwrap();
    let k = kernel_oracle(&geom, &c, 3).unwrap();
    assert!((&k.field - &constant(Dim::Torus3, 3, C::new(1.0, 0.0))).max_abs_coeff() < 1e-12);
}

#[test]
fn ode_matches_kernel_oracle_for_cosine_mu() {
    let geom = t3();
    let mu = BeltramiField::new(cos_mode(Dim::Torus3, 8, ModeIndex::new(0, 1, 0), 0.3)).unwrap();
    let sol = integrate_homotopy(&geom, &mu, &SolverConfig::default()).unwrap();
    let k = kernel_oracle(&geom, &mu, 8).unwrap();
    let d = projective_distance(sol.final_field(), &k.field);
    assert!(d <= 1e-6, "{d}");
    assert!(!sol.under_resolved);
}

#[test]
fn ode_matches_kernel_oracle_for_random_smooth_mu() {
    let geom = t3();
    let mu = smooth_mu(21, Dim::Torus3, 6, 0.25);
    assert!(mu.delta() <= 0.3);
    let k = kernel_oracle(&geom, &mu, 6).unwrap();
    let r = closedness_residual(&geom, mu.mu(), &k.field).unwrap();
    assert!(r.total <= 1e-8, "{r:?}");
    let sol = integrate_homotopy(&geom, &mu, &SolverConfig::default()).unwrap();
    let d = projective_distance(sol.final_field(), &k.field);
    assert!(d <= 1e-6, "{d}");
    assert!(sol.final_record().residual.total <= 1e-6);
}

#[test]
fn torus2_cases() {
    let cfg = SolverConfig::default();
    let zero = BeltramiField::new(FourierField::zeros(Dim::Torus2, 4)).unwrap();
    let sol = torus2_solve(&zero, &cfg).unwrap();
    assert_eq!(*sol.final_field(), constant(Dim::Torus2, 4, C::new(1.0, 0.0)));

    let mu = BeltramiField::new(FourierField::single_mode(
        Dim::Torus2,
        8,
        ModeIndex::t2(1, 0),
        C::new(0.4, 0.0),
    ))
    .unwrap();
    let sol = torus2_solve(&mu, &cfg).unwrap();
    let k = kernel_oracle(&Geometry::Torus2, &mu, 8).unwrap();
    let d = projective_distance(sol.final_field(), &k.field);
    assert!(d <= 1e-6, "{d}");
    assert_eq!(sol.under_resolved, sol.final_record().residual.total > cfg.residual_tol);
    assert!(torus2_solve(&smooth_mu(1, Dim::Torus3, 2, 0.2), &cfg).is_err());
}

#[test]
fn endpoint_is_path_independent_up_to_scale() {
    let geom = t3();
    let mu = smooth_mu(9, Dim::Torus3, 5, 0.3);
    let lin = integrate_homotopy(&geom, &mu, &SolverConfig::default()).unwrap();
    let cfg = SolverConfig {
        path: PathRule::Sine,
        ..SolverConfig::default()
    };
    let sine = integrate_homotopy(&geom, &mu, &cfg).unwrap();
    let d = projective_distance(lin.final_field(), sine.final_field());
    assert!(d <= 1e-6, "{d}");
}

#[test]
fn custom_path_must_start_at_zero() {
    let mu = smooth_mu(2, Dim::Torus3, 3, 0.3).into_inner();
    let m2 = mu.clone();
    let bad: PathFamily<f64> = Arc::new(move |t| (m2.scale_real(t + 0.1), m2.clone()));
    assert!(HomotopyPath::custom(bad).is_err());
    let m3 = mu.clone();
    let quad: PathFamily<f64> = Arc::new(move |t| (m3.scale_real(t * t), m3.scale_real(2.0 * t)));
    let path = HomotopyPath::custom(quad).unwrap();
    let geom = t3();
    let sol = integrate_path(&geom, &path, &SolverConfig::default()).unwrap();
    let lin = integrate_homotopy(&geom, &BeltramiField::new(mu).unwrap(), &SolverConfig::default()).unwrap();
    assert!(projective_distance(sol.final_field(), lin.final_field()) <= 1e-6);
}

#[test]
fn vanish_guard_reports_location_and_keeps_partial_solution() {
    let mu = smooth_mu(2, Dim::Torus3, 3, 0.3);
    let cfg = SolverConfig {
        vanish_guard: 0.999,
        ..SolverConfig::default()
    };
    let (sol, err) = integrate_path_partial(&t3(), &HomotopyPath::scaled(&mu, PathRule::Linear), &cfg);
    let err = err.expect("guard must trip");
    assert!(err.to_string().contains("possible zero of f"), "{err}");
    assert!(!sol.fields.is_empty());
    assert!(sol.final_time() < 1.0);
}

#[test]
fn rational_slope_is_refused() {
    let slope = |s: &str| s.parse::<crate::Slope>().unwrap();
    let geom = Geometry::Torus3(FoliationParams::from_slopes(&slope("1/2"), &slope("1/3")));
    let mu = smooth_mu(2, Dim::Torus3, 6, 0.3);
    assert!(matches!(
        integrate_homotopy(&geom, &mu, &SolverConfig::default()),
        Err(Error::LeavesNotDense { p: 3, m: 2, k: -6 })
    ));
    let flat = Geometry::Torus3(FoliationParams::from_slopes(&slope("0"), &slope("0")));
    let mu = smooth_mu(2, Dim::Torus3, 2, 0.3);
    assert!(matches!(
        kernel_oracle(&flat, &mu, 2),
        Err(Error::LeavesNotDense { p: 0, m: 0, k: 1 })
    ));
}

#[test]
fn analytic_category_step_control() {
    let geom = t3();
    let mu = smooth_mu(4, Dim::Torus3, 4, 0.3);
    let cfg = SolverConfig {
        category: "analytic(0.5)".parse().unwrap(),
        ..SolverConfig::default()
    };
    let a = integrate_homotopy(&geom, &mu, &cfg).unwrap();
    let s = integrate_homotopy(&geom, &mu, &SolverConfig::default()).unwrap();
    assert!(projective_distance(a.final_field(), s.final_field()) <= 1e-8);
}

#[test]
fn residual_decreases_with_cutoff() {
    let geom = t3();
    let base = smooth_mu(13, Dim::Torus3, 1, 0.35).into_inner();
    let mut res = Vec::new();
    for m in [4, 6, 8] {
        let mu = BeltramiField::new(base.resized(m)).unwrap();
        let sol = integrate_homotopy(&geom, &mu, &SolverConfig::default()).unwrap();
        res.push(sol.final_record().residual.total);
    }
    assert!(res[0] > res[1] && res[1] > res[2], "{res:?}");
    assert!(res[2] <= 0.1 * res[0]);
}

#[test]
fn resolvent_bound_examples() {
    let geom = t3();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let zero = BeltramiField::new(FourierField::zeros(Dim::Torus3, 3)).unwrap();
    let r = resolvent_bound_probe(&geom, &zero, 0, 5, &mut rng).unwrap();
    assert!((r.estimate - 1.0).abs() < 1e-14 && r.holds);
    let half = BeltramiField::new(constant(Dim::Torus3, 3, C::new(0.5, 0.0))).unwrap();
    let r = resolvent_bound_probe(&geom, &half, 0, 5, &mut rng).unwrap();
    assert!(r.holds && r.estimate <= 2.0 && r.estimate > 2.0 - 1e-10, "{r:?}");
    for seed in 0..8 {
        let mu = smooth_mu(seed, Dim::Torus3, 4, 0.55);
        for j in [0, 1] {
            let r = resolvent_bound_probe(&geom, &mu, j, 6, &mut rng).unwrap();
            assert!(r.holds, "{r:?}");
        }
    }
    assert!(resolvent_bound_probe(&geom, &half, 2, 1, &mut rng).is_err());
}

#[test]
fn category_and_path_parse() {
    assert_eq!("smooth".parse::<Category>().unwrap(), Category::Smooth);
    assert_eq!("analytic(0.25)".parse::<Category>().unwrap(), Category::Analytic(0.25));
    assert!("analytic(-1)".parse::<Category>().is_err());
    assert_eq!("sine".parse::<PathRule>().unwrap(), PathRule::Sine);
    let cfg: SolverConfig = serde_json::from_str(r#"{"category":"analytic(1)","path":"sine"}"#).unwrap();
    assert_eq!(cfg.category, Category::Analytic(1.0));
    assert_eq!(cfg.step_tol, 1e-9);
}

