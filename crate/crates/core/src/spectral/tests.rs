use super::*;
use num_complex::Complex64 as C;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{PI, TAU};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn one() -> C {
    C::new(1.0, 0.0)
}

fn max_diff(a: &Field, b: &Field) -> f64 {
    a.coeffs()
        .iter()
        .zip(b.coeffs())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Naive forward transform of samples on an `n^3` grid, restricted to cutoff `m`.
fn naive_analyze(vals: &[C], n: usize, m: usize) -> Field {
    Field::from_fn(Dim::Torus3, m, |mode| {
        let mut acc = C::new(0.0, 0.0);
        let h = TAU / n as f64;
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    let ph = -(mode.p as f64 * i as f64 + mode.m as f64 * j as f64 + mode.k as f64 * l as f64) * h;
                    acc += vals[(i * n + j) * n + l] * C::from_polar(1.0, ph);
                }
            }
        }
        acc / (n * n * n) as f64
    })
}

#[test]
fn mode_storage_is_lexicographic() {
    let f = Field::zeros(Dim::Torus3, 2);
    let modes: Vec<_> = f.modes().collect();
    assert_eq!(modes.len(), 125);
    assert!(modes.windows(2).all(|w| w[0] < w[1]));
    for (i, n) in modes.iter().enumerate() {
        assert_eq!(f.index_of(*n), Some(i));
    }
    let g = Field::zeros(Dim::Torus2, 3);
    assert_eq!(g.modes().count(), 49);
    assert_eq!(g.index_of(ModeIndex::new(0, 0, 1)), None);
}

#[test]
fn l1_size_of_modes() {
    assert_eq!(ModeIndex::new(2, -3, 1).l1(), 6);
    assert_eq!(ModeIndex::new(2, -3, 1).linf(), 3);
    assert_eq!(ModeIndex::new(-1, 0, 2).sign_normalized(), ModeIndex::new(1, 0, -2));
}

#[test]
fn multiply_by_one_is_identity() {
    let b: Field = random_field(Dim::Torus3, 3, 0.3, &mut rng(1));
    let a = Field::constant(Dim::Torus3, 3, one());
    assert_eq!(max_diff(&a.multiply(&b).unwrap(), &b) < 1e-15, true);
}

#[test]
fn exponentials_multiply_by_adding_modes() {
    let a = Field::single_mode(Dim::Torus3, 2, ModeIndex::new(1, 0, 0), one());
    let b = Field::single_mode(Dim::Torus3, 2, ModeIndex::new(0, 1, 0), one());
    let c = a.multiply(&b).unwrap();
    let want = Field::single_mode(Dim::Torus3, 2, ModeIndex::new(1, 1, 0), one());
    assert!(max_diff(&c, &want) < 1e-15);
}

#[test]
fn multiply_matches_physical_grid_oracle() {
    let mut r = rng(2);
    let a: Field = random_field(Dim::Torus3, 4, 0.0, &mut r);
    let b: Field = random_field(Dim::Torus3, 4, 0.0, &mut r);
    let n = 17;
    let h = TAU / n as f64;
    let mut vals = Vec::with_capacity(n * n * n);
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                let x = [i as f64 * h, j as f64 * h, l as f64 * h];
                vals.push(a.evaluate(&x) * b.evaluate(&x));
            }
        }
    }
    let want = naive_analyze(&vals, n, 4);
    let got = a.multiply(&b).unwrap();
    let scale = want.max_abs_coeff();
    assert!(max_diff(&got, &want) / scale < 1e-12, "{}", max_diff(&got, &want));
}

#[test]
fn multiply_reports_truncation_loss() {
    let a = Field::single_mode(Dim::Torus3, 2, ModeIndex::new(2, 0, 0), one());
    let (c, loss) = a.multiply_with_loss(&a).unwrap();
    assert!(c.norm_h0() < 1e-15);
    assert!((loss - 1.0).abs() < 1e-14);
    let full = a.multiply_full(&a).unwrap();
    assert!((full.get(ModeIndex::new(4, 0, 0)) - one()).norm() < 1e-14);
}

#[test]
fn multiply_rejects_mismatched_fields() {
    let a = Field::zeros(Dim::Torus3, 2);
    assert!(matches!(a.multiply(&Field::zeros(Dim::Torus3, 3)), Err(Error::CutoffMismatch { .. })));
    assert!(matches!(a.multiply(&Field::zeros(Dim::Torus2, 2)), Err(Error::DimensionMismatch(_))));
}

#[test]
fn banded_product_is_exact_in_band() {
    let mut r = rng(3);
    let a: Field = random_field(Dim::Torus3, 5, 0.1, &mut r);
    let b: Field = random_field(Dim::Torus3, 5, 0.1, &mut r);
    let mut plan = ProductPlan::new(Dim::Torus3, 5, false);
    let fast = plan.product(&a, &b);
    let exact = a.multiply(&b).unwrap();
    assert!(max_diff(&fast, &exact) < 1e-12);
}

#[test]
fn derivative_of_constant_vanishes() {
    let a = Field::constant(Dim::Torus3, 3, C::new(2.0, -1.0));
    for axis in 1..=3 {
        assert_eq!(a.partial_derivative(axis).unwrap().norm_h0(), 0.0);
    }
}

#[test]
fn derivative_along_x3_of_single_mode() {
    let n = ModeIndex::new(2, 0, -1);
    let a = Field::single_mode(Dim::Torus3, 2, n, one());
    let d = a.partial_derivative(3).unwrap();
    assert_eq!(d.get(n), C::new(0.0, -1.0));
    assert!(a.partial_derivative(4).is_err());
    assert!(Field::zeros(Dim::Torus2, 2).partial_derivative(3).is_err());
}

#[test]
fn derivative_matches_finite_differences() {
    let a: Field = random_field(Dim::Torus3, 4, 0.2, &mut rng(4));
    let d = a.partial_derivative(1).unwrap();
    let n = 129;
    let h = TAU / n as f64;
    let (y, z) = (0.7, -1.3);
    let at = |i: i64| a.evaluate(&[i as f64 * h, y, z]);
    // Eighth-order central stencil.
    let w = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
    let mut worst: f64 = 0.0;
    for i in 0..n as i64 {
        let mut fd = C::new(0.0, 0.0);
        for (s, ws) in w.iter().enumerate() {
            let s = s as i64 + 1;
            fd += (at(i + s) - at(i - s)) * *ws;
        }
        fd /= h;
        worst = worst.max((fd - d.evaluate(&[i as f64 * h, y, z])).norm());
    }
    assert!(worst < 1e-6, "{worst}");
}

#[test]
fn average_is_grid_mean() {
    let a: Field = random_field(Dim::Torus3, 4, 0.0, &mut rng(5));
    let n = 9;
    let h = TAU / n as f64;
    let mut acc = C::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                acc += a.evaluate(&[i as f64 * h, j as f64 * h, l as f64 * h]);
            }
        }
    }
    acc /= (n * n * n) as f64;
    assert!((acc - a.average()).norm() < 1e-12);
    let e = Field::single_mode(Dim::Torus3, 1, ModeIndex::new(1, 0, 0), one());
    assert_eq!(e.average(), C::new(0.0, 0.0));
}

#[test]
fn norm_examples() {
    let e = Field::single_mode(Dim::Torus3, 2, ModeIndex::new(1, 0, 0), one());
    assert!((e.norm(NormSpec::Sobolev(0)) - 1.0).abs() < 1e-15);
    assert!((e.norm(NormSpec::Analytic(0.5)) - 0.25f64.exp()).abs() < 1e-15);
    assert!((e.norm(NormSpec::Sobolev(2)) - 2.0).abs() < 1e-15);
    assert_eq!(Field::zeros(Dim::Torus3, 2).norm(NormSpec::Analytic(1.0)), 0.0);
}

#[test]
fn sup_estimate_examples() {
    let c = Field::constant(Dim::Torus3, 2, C::new(0.5, 0.0));
    assert!((sup_estimate(&c, 2) - 0.5).abs() < 1e-15);
    let e = Field::single_mode(Dim::Torus3, 2, ModeIndex::new(1, 0, 0), C::new(0.3, 0.0));
    assert!((sup_estimate(&e, 2) - 0.3).abs() < 1e-10);
    let mut s = Field::constant(Dim::Torus3, 2, C::new(0.25, 0.0));
    s.set(ModeIndex::new(0, 0, 1), C::new(0.25, 0.0));
    // Dense 1-D oracle along x3.
    let dense = (0..4001)
        .map(|i| s.evaluate(&[0.0, 0.0, TAU * i as f64 / 4001.0]).norm())
        .fold(0.0, f64::max);
    assert!((sup_estimate(&s, 4) - dense).abs() < 1e-6);
    assert!((sup_estimate(&s, 4) - 0.5).abs() < 1e-6);
}

#[test]
fn refined_sup_finds_off_grid_maximum() {
    // Maximum at x1 = 1 (not a grid point): |0.3 + 0.2 e^{i(x1 - 1)}| peaks at 0.5.
    let mut a = Field::constant(Dim::Torus3, 1, C::new(0.3, 0.0));
    a.set(ModeIndex::new(1, 0, 0), C::from_polar(0.2, -1.0));
    let coarse = sup_estimate(&a, 2);
    let fine = sup_refined(&a, 2);
    assert!(coarse < 0.5 - 1e-4);
    assert!((fine.value - 0.5).abs() < 1e-12, "{}", fine.value);
    assert!((fine.x[0] - 1.0).abs() < 1e-6);
}

#[test]
fn grid_minimum_locates_zero() {
    let mut a = Field::constant(Dim::Torus2, 1, C::new(0.5, 0.0));
    a.set(ModeIndex::t2(1, 0), C::new(0.5, 0.0));
    let (_, lo) = grid_extrema(&a, 30);
    assert!(lo.value < 1e-12);
    assert!((lo.x[0] - PI).abs() < 1e-12);
}

#[test]
fn conj_flips_modes_and_matches_pointwise() {
    let a: Field = random_field(Dim::Torus3, 3, 0.2, &mut rng(6));
    let b = a.conj();
    for n in a.modes() {
        assert_eq!(b.get(n), a.get(-n).conj());
    }
    let x = [0.3, 1.1, -2.0];
    assert!((b.evaluate(&x) - a.evaluate(&x).conj()).norm() < 1e-12);
    let t: Field = random_field(Dim::Torus2, 3, 0.2, &mut rng(7));
    assert!((t.conj().evaluate(&x) - t.evaluate(&x).conj()).norm() < 1e-12);
}

#[test]
fn evaluation_matches_grid_synthesis() {
    let a: Field = random_field(Dim::Torus3, 3, 0.2, &mut rng(8));
    let mut g = GridTransform::new(Dim::Torus3, 10);
    let vals = g.synthesize(&a);
    for idx in [0, 17, 345, 999] {
        let x = g.point(idx);
        assert!((vals[idx] - a.evaluate(&x)).norm() < 1e-12);
    }
    let back = g.analyze(vals, 3);
    assert!(max_diff(&back, &a) < 1e-14);
}

#[test]
fn json_round_trip() {
    let a: Field = random_field(Dim::Torus3, 2, 0.5, &mut rng(9));
    let text = a.to_json();
    assert!(text.starts_with("{\"dim\":3,\"cutoff\":2,\"modes\":[[-2,-2,-2,"));
    assert_eq!(Field::from_json(&text).unwrap(), a);
    let t: Field = random_field(Dim::Torus2, 2, 0.5, &mut rng(10));
    assert_eq!(Field::from_json(&t.to_json()).unwrap(), t);
}

#[test]
fn json_rejects_bad_documents() {
    for bad in [
        r#"{"dim":3,"cutoff":1,"modes":[[2,0,0,1.0,0.0]]}"#,
        r#"{"dim":4,"cutoff":1,"modes":[]}"#,
        r#"{"dim":3,"cutoff":1,"modes":[[1,0,1.0,0.0]]}"#,
        r#"{"dim":3,"cutoff":1,"modes":[[1,0,0,1.0,0.0],[1,0,0,2.0,0.0]]}"#,
        r#"{"dim":3,"cutoff":0,"modes":[]}"#,
        r#"{"dim":3,"modes":[]}"#,
    ] {
        assert!(Field::from_json(bad).is_err(), "{bad}");
    }
    let z = Field::from_json(r#"{"dim":2,"cutoff":1,"modes":[]}"#).unwrap();
    assert_eq!(z.norm_h0(), 0.0);
}

#[test]
fn projective_distance_ignores_scalar_multiples() {
    let a: Field = random_field(Dim::Torus3, 2, 0.3, &mut rng(11));
    let b = a.scale(C::new(-0.3, 2.0));
    assert!(projective_distance(&a, &b) < 1e-14);
    let e1 = Field::single_mode(Dim::Torus3, 2, ModeIndex::new(1, 0, 0), one());
    let e2 = Field::single_mode(Dim::Torus3, 2, ModeIndex::new(0, 1, 0), one());
    assert!((projective_distance(&e1, &e2) - 1.0).abs() < 1e-15);
}

#[test]
fn single_precision_fields_work() {
    let a: FourierField<f32> = random_field(Dim::Torus3, 2, 0.3, &mut rng(12));
    let b = a.multiply(&a.conj()).unwrap();
    assert!(b.average().re >= 0.0);
    assert!((b.average().re - a.norm_h0().powi(2)).abs() < 1e-5);
}

fn arb_field(dim: Dim, m: usize) -> impl Strategy<Value = Field> {
    let n = (2 * m + 1).pow(dim.rank() as u32);
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n).prop_map(move |v| {
        let mut f = Field::zeros(dim, m);
        for (c, (re, im)) in f.coeffs_mut().iter_mut().zip(v) {
            *c = C::new(re, im);
        }
        f
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn parseval(a in arb_field(Dim::Torus3, 2), b in arb_field(Dim::Torus3, 2)) {
        let lhs = a.norm_h0().powi(2) + b.norm_h0().powi(2) + 2.0 * a.inner(&b).re;
        let rhs = (&a + &b).norm_h0().powi(2);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0));
    }

    #[test]
    fn single_mode_products_associate(
        n1 in (-1i64..=1, -1i64..=1, -1i64..=1),
        n2 in (-1i64..=1, -1i64..=1, -1i64..=1),
        n3 in (-1i64..=1, -1i64..=1, -1i64..=1),
    ) {
        let mk = |n: (i64, i64, i64)| Field::single_mode(Dim::Torus3, 3, ModeIndex::new(n.0, n.1, n.2), C::new(0.5, 0.25));
        let (a, b, c) = (mk(n1), mk(n2), mk(n3));
        let left = a.multiply(&b).unwrap().multiply(&c).unwrap();
        let right = a.multiply(&b.multiply(&c).unwrap()).unwrap();
        prop_assert!(max_diff(&left, &right) < 1e-14);
        prop_assert!(max_diff(&a.multiply(&b).unwrap(), &b.multiply(&a).unwrap()) < 1e-15);
    }

    #[test]
    fn derivatives_commute(a in arb_field(Dim::Torus3, 2)) {
        let d12 = a.partial_derivative(1).unwrap().partial_derivative(2).unwrap();
        let d21 = a.partial_derivative(2).unwrap().partial_derivative(1).unwrap();
        prop_assert_eq!(d12, d21);
    }

    #[test]
    fn mean_of_squared_modulus_is_nonnegative(a in arb_field(Dim::Torus3, 2)) {
        let s = a.multiply(&a.conj()).unwrap().average();
        prop_assert!(s.re >= 0.0);
        prop_assert!(s.im.abs() < 1e-12);
    }

    #[test]
    fn product_is_bilinear(a in arb_field(Dim::Torus2, 3), b in arb_field(Dim::Torus2, 3), c in arb_field(Dim::Torus2, 3)) {
        let s = C::new(0.7, -0.2);
        let lhs = a.multiply(&(&b + &c.scale(s))).unwrap();
        let mut rhs = a.multiply(&b).unwrap();
        rhs.axpy(s, &a.multiply(&c).unwrap());
        prop_assert!(max_diff(&lhs, &rhs) < 1e-12);
    }
}
