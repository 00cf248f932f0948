//! Seeded random fields for probes, property tests and the verification battery.

use num_complex::Complex;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Dim, FourierField};
use crate::scalar::Real;

/// Random coefficients `(u + i v) e^{-decay |N|}` with `u, v` uniform on `[-1, 1]`.
pub fn random_field<T: Real, R: Rng + ?Sized>(
    dim: Dim,
    cutoff: usize,
    decay: f64,
    rng: &mut R,
) -> FourierField<T> {
    FourierField::from_fn(dim, cutoff, |n| {
        let w = (-decay * n.l1() as f64).exp();
        let re = rng.gen_range(-1.0..=1.0) * w;
        let im = rng.gen_range(-1.0..=1.0) * w;
        Complex::new(T::lit(re), T::lit(im))
    })
}

/// Shape of a random smooth Beltrami coefficient: a constant part plus a small ripple on
/// the low modes `0 < max |N_i| <= band`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RippleSpec {
    /// The constant term is drawn uniformly from the disc of this radius.
    pub mean_max: f64,
    /// Exact value of `sum |c_N|` over the ripple modes.
    pub ripple: f64,
    pub band: usize,
}

impl Default for RippleSpec {
    fn default() -> Self {
        Self {
            mean_max: 0.35,
            ripple: 0.05,
            band: 1,
        }
    }
}

impl RippleSpec {
    /// A priori bound `mean_max + ripple` on `sup |mu|`.
    pub fn sup_bound(&self) -> f64 {
        self.mean_max + self.ripple
    }
}

/// Random smooth Beltrami coefficient following `spec`.
pub fn random_beltrami<T: Real, R: Rng + ?Sized>(
    dim: Dim,
    cutoff: usize,
    spec: &RippleSpec,
    rng: &mut R,
) -> FourierField<T> {
    let band = spec.band.min(cutoff) as i64;
    let mut f = FourierField::zeros(dim, cutoff);
    let r = spec.mean_max * rng.gen::<f64>().sqrt();
    let theta = rng.gen_range(0.0..std::f64::consts::TAU);
    let mut ripple = Vec::new();
    for n in f.modes() {
        if n.is_zero() || n.linf() > band {
            continue;
        }
        let c = Complex::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0));
        ripple.push((n, c));
    }
    let total: f64 = ripple.iter().map(|(_, c)| c.norm()).sum();
    let scale = if total > 0.0 { spec.ripple / total } else { 0.0 };
    for (n, c) in ripple {
        f.set(n, Complex::new(T::lit(c.re * scale), T::lit(c.im * scale)));
    }
    f.set(
        super::ModeIndex::ZERO,
        Complex::new(T::lit(r * theta.cos()), T::lit(r * theta.sin())),
    );
    f
}
