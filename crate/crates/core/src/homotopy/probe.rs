//! Randomized checks of the resolvent bound in `H^0` and `H^1`.

use num_complex::Complex;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{BeltramiField, Workspace};
use crate::error::{Error, Result};
use crate::foliation::Geometry;
use crate::scalar::Real;
use crate::spectral::{random_field, FourierField, ModeIndex, NormSpec};

/// Outcome of [`resolvent_bound_probe`]. A violation is a probe whose amplification exceeds `bound`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolventBoundReport {
    pub j: u32,
    pub trials: usize,
    pub delta: f64,
    pub derivative_sup: f64,
    /// `1/(1-delta)` for `j = 0`, `4/(1-delta)^2` for `j = 1`.
    pub constant: f64,
    pub bound: f64,
    pub estimate: f64,
    pub violations: usize,
    pub holds: bool,
}

/// Largest observed `|R g|_{H^j} / |g|_{H^j}` over the constant probe, the lowest
/// nonconstant modes and `trials` random probes.
pub fn resolvent_bound_probe<T: Real, R: Rng + ?Sized>(
    geometry: &Geometry<T>,
    nu: &BeltramiField<T>,
    j: u32,
    trials: usize,
    rng: &mut R,
) -> Result<ResolventBoundReport> {
    if j > 1 {
        return Err(Error::InvalidArgument("resolvent bounds are probed for j in {0, 1}".into()));
    }
    geometry.check_field(nu.mu())?;
    let dim = nu.dim();
    let cutoff = nu.cutoff();
    let delta = nu.delta().to_f64_lossy();
    let derivative_sup = nu.derivative_sup().to_f64_lossy();
    let (constant, bound) = if j == 0 {
        let c = 1.0 / (1.0 - delta);
        (c, c)
    } else {
        let c = 4.0 / (1.0 - delta).powi(2);
        (c, c * (1.0 + derivative_sup))
    };
    let norm = NormSpec::Sobolev(j);
    let mut ws = Workspace::new(geometry, cutoff);
    let vals = ws.values(nu.mu());

    let one = Complex::new(T::one(), T::zero());
    let mut probes = vec![FourierField::constant(dim, cutoff, one)];
    for axis in 1..=dim.rank() {
        let mut e = [0i64; 3];
        e[axis - 1] = 1;
        probes.push(FourierField::single_mode(dim, cutoff, ModeIndex::new(e[0], e[1], e[2]), one));
    }
    for i in 0..trials {
        let decay = [0.0, 0.5, 1.0][i % 3];
        probes.push(random_field(dim, cutoff, decay, rng));
    }

    let mut estimate = 0.0f64;
    let mut violations = 0;
    for g in &probes {
        let gn = g.norm(norm).to_f64_lossy();
        if gn == 0.0 {
            continue;
        }
        let y = ws.resolvent(&vals, delta, g, None, 1e-14)?.y;
        let ratio = y.norm(norm).to_f64_lossy() / gn;
        estimate = estimate.max(ratio);
        if ratio > bound * (1.0 + 1e-9) {
            violations += 1;
        }
    }
    Ok(ResolventBoundReport {
        j,
        trials: probes.len(),
        delta,
        derivative_sup,
        constant,
        bound,
        estimate,
        violations,
        holds: violations == 0,
    })
}
