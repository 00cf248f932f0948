use super::*;
use crate::foliation::FoliationParams;
use crate::homotopy::{integrate_homotopy, BeltramiField, SolverConfig};
use crate::spectral::{random_beltrami, Field, ModeIndex, RippleSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn t3() -> Geometry<f64> {
    Geometry::Torus3(FoliationParams::new(std::f64::consts::SQRT_2, 3f64.sqrt()))
}

fn constant(m: usize, c: C) -> Field {
    FourierField::constant(Dim::Torus3, m, c)
}

fn patch(grid: usize) -> LeafPatch {
    LeafPatch::new([0.3, -0.2, 1.1], PI, grid).unwrap()
}

fn pipeline(seed: u64, m: usize) -> (LeafForm<f64>, f64) {
    let spec = RippleSpec {
        mean_max: 0.4,
        ..RippleSpec::default()
    };
    let mu = random_beltrami(Dim::Torus3, m, &spec, &mut ChaCha8Rng::seed_from_u64(seed));
    let b = BeltramiField::new(mu.clone()).unwrap();
    let delta = b.delta();
    let sol = integrate_homotopy(&t3(), &b, &SolverConfig::default()).unwrap();
    (LeafForm::new(sol.final_field().clone(), mu).unwrap(), delta)
}

#[test]
fn identity_form_develops_to_identity() {
    let form = LeafForm::new(constant(3, C::new(1.0, 0.0)), constant(3, C::new(0.0, 0.0))).unwrap();
    let ch = develop(&t3(), &form, &patch(17), &ChartConfig::default()).unwrap();
    for p in &ch.points {
        assert!((p.psi[0] - p.z[0]).abs() < 1e-13 && (p.psi[1] - p.z[1]).abs() < 1e-13);
        assert_eq!(p.dilatation, 1.0);
        assert_eq!(p.jacobian, 1.0);
    }
    assert!(ch.derivative_error < 1e-10);
}

#[test]
fn constant_mu_gives_affine_chart() {
    let c = C::new(0.3, -0.25);
    let one = C::new(1.0, 0.0);
    let form = LeafForm::new(constant(2, (one - c).inv()), constant(2, c)).unwrap();
    let ch = develop(&t3(), &form, &patch(33), &ChartConfig::default()).unwrap();
    assert_eq!(ch.points.len(), 33 * 33);
    let mut worst: f64 = 0.0;
    for p in &ch.points {
        let z = C::new(p.z[0], p.z[1]);
        let want = (z + c * z.conj()) / (one - c);
        worst = worst.max((C::new(p.psi[0], p.psi[1]) - want).norm());
    }
    assert!(worst < 1e-10, "{worst}");
    let k = (1.0 + c.norm()) / (1.0 - c.norm());
    assert!((ch.max_dilatation - k).abs() < 1e-12);
    let det = (one - c).inv().norm_sqr() * (1.0 - c.norm_sqr());
    assert!((ch.min_jacobian - det).abs() < 1e-12);
    assert!((ch.min_numeric_jacobian - det).abs() < 1e-8);
}

#[test]
fn non_closed_form_is_refused() {
    let mut mu = constant(3, C::new(0.0, 0.0));
    mu.set(ModeIndex::new(1, 0, 0), C::new(0.3, 0.0));
    let form = LeafForm::new(constant(3, C::new(1.0, 0.0)), mu).unwrap();
    let err = develop(&t3(), &form, &patch(9), &ChartConfig::default()).unwrap_err();
    assert!(matches!(err, Error::NotClosed { .. }), "{err:?}");
}

#[test]
fn loop_residual_detects_non_closed_form() {
    let mut mu = constant(3, C::new(0.0, 0.0));
    mu.set(ModeIndex::new(1, 0, 0), C::new(0.3, 0.0));
    let form = LeafForm::new(constant(3, C::new(1.0, 0.0)), mu).unwrap();
    let r = loop_residual(&t3(), &form, &patch(9), 16, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    assert!(r > 1e-3, "{r}");
}

#[test]
fn pipeline_chart_is_closed_and_quasiconformal() {
    let geom = t3();
    let (form, delta) = pipeline(17, 6);
    let p = patch(33);
    let ch = develop(&geom, &form, &p, &ChartConfig::default()).unwrap();
    let lr = loop_residual(&geom, &form, &p, 16, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    assert!(lr <= 1e-6, "{lr}");
    assert!(ch.points.iter().all(|q| q.jacobian > 0.0));
    assert!(ch.min_numeric_jacobian > 0.0);
    assert!(ch.max_dilatation <= (1.0 + delta) / (1.0 - delta) + 1e-6);
    assert!(ch.derivative_error < 1e-5, "{}", ch.derivative_error);
    let k = dilatation_estimate(&geom, &form, &p).unwrap();
    assert_eq!(k.max, ch.max_dilatation);
}

#[test]
fn development_is_translation_equivariant() {
    let geom = t3();
    let (form, _) = pipeline(5, 4);
    let (a1, a2) = (std::f64::consts::SQRT_2, 3f64.sqrt());
    let base = LeafPatch::new([0.0, 0.0, 0.0], 2.0, 9).unwrap();
    let v = C::new(0.5, -0.5);
    let shifted = LeafPatch::new(base.lift(v, (a1, a2)), 2.0, 9).unwrap();
    let cfg = ChartConfig::default();
    let ig = LeafIntegrand::new(&geom, &form, base.base).unwrap();
    let ch = develop(&geom, &form, &shifted, &cfg).unwrap();
    for q in ch.points.iter().step_by(7) {
        let z = C::new(q.z[0], q.z[1]);
        let direct = ig.segment(v, v + z);
        assert!((C::new(q.psi[0], q.psi[1]) - direct).norm() < 1e-7, "{z}");
    }
}

#[test]
fn dilatation_rejects_unit_mu() {
    let geom = t3();
    let form = LeafForm::new(constant(2, C::new(1.0, 0.0)), constant(2, C::new(0.0, 1.0))).unwrap();
    assert!(dilatation_estimate(&geom, &form, &patch(5)).is_err());
}

#[test]
fn degenerate_patches_are_rejected() {
    assert!(LeafPatch::new([0.0; 3], 0.0, 5).is_err());
    assert!(LeafPatch::new([0.0; 3], 1.0, 1).is_err());
}
