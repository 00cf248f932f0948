//! Developing a leafwise closed form into a chart on a square patch of the leaf's universal
//! cover, with closedness, injectivity and dilatation diagnostics.

#[cfg(test)]
mod tests;

use num_complex::Complex64 as C;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::foliation::Geometry;
use crate::homotopy::closedness_residual;
use crate::metric::LeafForm;
use crate::scalar::Real;
use crate::spectral::{Dim, FourierField};

const GL8_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL8_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Square `[-R, R]^2` in leaf coordinates `(Re z, Im z)` around the leaf point `base`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeafPatch {
    pub base: [f64; 3],
    pub radius: f64,
    /// Points per side.
    pub grid: usize,
}

impl LeafPatch {
    pub fn new(base: [f64; 3], radius: f64, grid: usize) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) || grid < 2 {
            return Err(Error::InvalidArgument("patch needs radius > 0 and grid >= 2".into()));
        }
        Ok(Self { base, radius, grid })
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        -self.radius + 2.0 * self.radius * i as f64 / (self.grid - 1) as f64
    }

    /// Point of `R^3` on the leaf through `base` at leaf coordinate `z`.
    pub fn lift(&self, z: C, slopes: (f64, f64)) -> [f64; 3] {
        [
            self.base[0] + z.re,
            self.base[1] + z.im,
            self.base[2] + slopes.0 * z.re + slopes.1 * z.im,
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChartConfig {
    /// Refuse to develop when the closedness residual exceeds this.
    pub max_residual: f64,
    /// Every `stride`-th grid point (per axis) gets a finite-difference derivative check.
    pub derivative_stride: usize,
    pub fd_step: f64,
}

impl Default for ChartConfig {
    fn default() -> Self {
        Self {
            max_residual: 1e-4,
            derivative_stride: 4,
            fd_step: 0.05,
        }
    }
}

/// Evaluates a field along one leaf, `z -> a(x0 + (Re z, Im z, a1 Re z + a2 Im z))`.
struct LeafEvaluator {
    coeffs: Vec<C>,
    dim: Dim,
    cutoff: usize,
    slopes: (f64, f64),
}

impl LeafEvaluator {
    fn new<T: Real>(a: &FourierField<T>, base: [f64; 3], slopes: (f64, f64)) -> Self {
        let a = a.cast::<f64>();
        let coeffs = a
            .iter()
            .map(|(n, c)| {
                let phase = n.p as f64 * base[0] + n.m as f64 * base[1] + n.k as f64 * base[2];
                c * C::from_polar(1.0, phase)
            })
            .collect();
        Self {
            coeffs,
            dim: a.dim(),
            cutoff: a.cutoff(),
            slopes,
        }
    }

    fn powers(theta: f64, m: usize) -> Vec<C> {
        (0..=2 * m)
            .map(|j| C::from_polar(1.0, (j as f64 - m as f64) * theta))
            .collect()
    }

    fn eval(&self, z: C) -> C {
        let m = self.cutoff;
        let side = 2 * m + 1;
        let ep = Self::powers(z.re, m);
        let em = Self::powers(z.im, m);
        match self.dim {
            Dim::Torus2 => {
                let mut acc = C::new(0.0, 0.0);
                for (i, row) in self.coeffs.chunks(side).enumerate() {
                    let s: C = row.iter().zip(&em).map(|(c, e)| c * e).sum();
                    acc += ep[i] * s;
                }
                acc
            }
            Dim::Torus3 => {
                let ek = Self::powers(self.slopes.0 * z.re + self.slopes.1 * z.im, m);
                let mut acc = C::new(0.0, 0.0);
                for (i, plane) in self.coeffs.chunks(side * side).enumerate() {
                    let mut s = C::new(0.0, 0.0);
                    for (j, row) in plane.chunks(side).enumerate() {
                        let r: C = row.iter().zip(&ek).map(|(c, e)| c * e).sum();
                        s += em[j] * r;
                    }
                    acc += ep[i] * s;
                }
                acc
            }
        }
    }
}

/// `f` and `mu` restricted to one leaf.
struct LeafIntegrand {
    f: LeafEvaluator,
    mu: LeafEvaluator,
    max_piece: f64,
}

impl LeafIntegrand {
    fn new<T: Real>(geometry: &Geometry<T>, form: &LeafForm<T>, base: [f64; 3]) -> Result<Self> {
        let slopes = match geometry {
            Geometry::Torus3(p) => (p.a1.to_f64_lossy(), p.a2.to_f64_lossy()),
            Geometry::Torus2 => (0.0, 0.0),
            Geometry::Lattice(_) => {
                return Err(Error::InvalidArgument("charts need a 3-torus or 2-torus field".into()))
            }
        };
        let m = form.f.cutoff().max(1);
        Ok(Self {
            f: LeafEvaluator::new(&form.f, base, slopes),
            mu: LeafEvaluator::new(&form.mu, base, slopes),
            max_piece: 2.0 * std::f64::consts::PI / (4 * m) as f64,
        })
    }

    fn form_at(&self, z: C) -> (C, C) {
        (self.f.eval(z), self.mu.eval(z))
    }

    /// `int_a^b f (dz + mu dzbar)` along the straight segment, Gauss-Legendre 8 per piece.
    fn segment(&self, a: C, b: C) -> C {
        let d = b - a;
        let len = d.norm();
        if len == 0.0 {
            return C::new(0.0, 0.0);
        }
        let pieces = (len / self.max_piece).ceil().max(1.0) as usize;
        let step = d / pieces as f64;
        let mut acc = C::new(0.0, 0.0);
        for j in 0..pieces {
            let mid = a + step * (j as f64 + 0.5);
            for (x, w) in GL8_NODES.iter().zip(&GL8_WEIGHTS) {
                for s in [-1.0, 1.0] {
                    let z = mid + step * (0.5 * s * x);
                    let (f, mu) = self.form_at(z);
                    acc += f * (step + mu * step.conj()) * (0.5 * w);
                }
            }
        }
        acc
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub z: [f64; 2],
    pub psi: [f64; 2],
    /// `(1 + |mu|) / (1 - |mu|)`.
    pub dilatation: f64,
    /// `|f|^2 (1 - |mu|^2)`, the Jacobian determinant of `(Re Psi, Im Psi)`.
    pub jacobian: f64,
}

/// The developed chart on the patch grid (row-major, `Im z` varying fastest).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartSample {
    pub patch: LeafPatch,
    pub points: Vec<ChartPoint>,
    pub closedness_residual: f64,
    /// Sup over checked points of `|d_z Psi - f|` and `|d_zbar Psi - f mu|` (Richardson
    /// central differences).
    pub derivative_error: f64,
    pub derivative_checks: usize,
    pub min_jacobian: f64,
    /// Smallest Jacobian determinant from the finite-difference derivatives.
    pub min_numeric_jacobian: f64,
    pub max_dilatation: f64,
}

impl ChartSample {
    pub fn psi(&self, i: usize, j: usize) -> C {
        let p = self.points[i * self.patch.grid + j].psi;
        C::new(p[0], p[1])
    }
}

fn check_closed<T: Real>(geometry: &Geometry<T>, form: &LeafForm<T>, tol: f64) -> Result<f64> {
    let r = closedness_residual(geometry, &form.mu, &form.f)?.total;
    if !(r <= tol) {
        return Err(Error::NotClosed { residual: r, tol });
    }
    Ok(r)
}

fn dilatation(mu: C, z: C) -> Result<f64> {
    let a = mu.norm();
    if !(a < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "|mu| = {a} at z = {z}: not a Beltrami coefficient there"
        )));
    }
    Ok((1.0 + a) / (1.0 - a))
}

/// `Psi(z) = int_0^z f (dz + mu dzbar)`, integrated along the real axis to `Re z` and
/// then vertically, so every grid point is reached by straight segments.
pub fn develop<T: Real>(
    geometry: &Geometry<T>,
    form: &LeafForm<T>,
    patch: &LeafPatch,
    config: &ChartConfig,
) -> Result<ChartSample> {
    let closedness = check_closed(geometry, form, config.max_residual)?;
    let ig = LeafIntegrand::new(geometry, form, patch.base)?;
    let n = patch.grid;
    let coords: Vec<f64> = (0..n).map(|i| patch.coordinate(i)).collect();

    let walk = |start: C, targets: &[C]| -> Vec<C> {
        // Cumulative integrals from `start` to each target, visiting them in order of
        // distance on each side of `start`.
        let mut out = vec![C::new(0.0, 0.0); targets.len()];
        let mut idx: Vec<usize> = (0..targets.len()).collect();
        idx.sort_by(|&a, &b| (targets[a] - start).norm().partial_cmp(&(targets[b] - start).norm()).unwrap());
        let mut last_pos = (start, C::new(0.0, 0.0));
        let mut last_neg = (start, C::new(0.0, 0.0));
        let axis = if targets.len() > 1 { targets[targets.len() - 1] - targets[0] } else { C::new(1.0, 0.0) };
        for i in idx {
            let side = ((targets[i] - start) * axis.conj()).re >= 0.0;
            let last = if side { &mut last_pos } else { &mut last_neg };
            let val = last.1 + ig.segment(last.0, targets[i]);
            *last = (targets[i], val);
            out[i] = val;
        }
        out
    };

    let axis_points: Vec<C> = coords.iter().map(|&u| C::new(u, 0.0)).collect();
    let base_line = walk(C::new(0.0, 0.0), &axis_points);
    let mut points = Vec::with_capacity(n * n);
    let mut min_jacobian = f64::INFINITY;
    let mut max_dilatation: f64 = 0.0;
    for (i, &u) in coords.iter().enumerate() {
        let column: Vec<C> = coords.iter().map(|&v| C::new(u, v)).collect();
        let vals = walk(C::new(u, 0.0), &column);
        for (j, &v) in coords.iter().enumerate() {
            let z = C::new(u, v);
            let psi = base_line[i] + vals[j];
            if !(psi.re.is_finite() && psi.im.is_finite()) {
                return Err(Error::InvalidArgument(format!("quadrature failed at z = {z}")));
            }
            let (f, mu) = ig.form_at(z);
            let k = dilatation(mu, z)?;
            let jac = f.norm_sqr() * (1.0 - mu.norm_sqr());
            min_jacobian = min_jacobian.min(jac);
            max_dilatation = max_dilatation.max(k);
            points.push(ChartPoint {
                z: [u, v],
                psi: [psi.re, psi.im],
                dilatation: k,
                jacobian: jac,
            });
        }
    }

    let stride = config.derivative_stride.max(1);
    let h = config.fd_step;
    let mut derivative_error: f64 = 0.0;
    let mut min_numeric_jacobian = f64::INFINITY;
    let mut checks = 0;
    for i in (0..n).step_by(stride) {
        for j in (0..n).step_by(stride) {
            let z = C::new(coords[i], coords[j]);
            let d = |dir: C, step: f64| (ig.segment(z, z + dir * step) - ig.segment(z, z - dir * step)) / (2.0 * step);
            let rich = |dir: C| (4.0 * d(dir, h / 2.0) - d(dir, h)) / 3.0;
            let pu = rich(C::new(1.0, 0.0));
            let pv = rich(C::new(0.0, 1.0));
            let i_ = C::new(0.0, 1.0);
            let pz = (pu - i_ * pv) / 2.0;
            let pzb = (pu + i_ * pv) / 2.0;
            let (f, mu) = ig.form_at(z);
            derivative_error = derivative_error.max((pz - f).norm()).max((pzb - f * mu).norm());
            min_numeric_jacobian = min_numeric_jacobian.min(pz.norm_sqr() - pzb.norm_sqr());
            checks += 1;
        }
    }
    Ok(ChartSample {
        patch: patch.clone(),
        points,
        closedness_residual: closedness,
        derivative_error,
        derivative_checks: checks,
        min_jacobian,
        min_numeric_jacobian,
        max_dilatation,
    })
}

/// Max over `n_loops` random axis-parallel rectangles in the patch of `|closed integral| /
/// perimeter`. Rectangle sides are at least a quarter of the patch radius.
pub fn loop_residual<T: Real, R: Rng + ?Sized>(
    geometry: &Geometry<T>,
    form: &LeafForm<T>,
    patch: &LeafPatch,
    n_loops: usize,
    rng: &mut R,
) -> Result<f64> {
    let ig = LeafIntegrand::new(geometry, form, patch.base)?;
    let r = patch.radius;
    let mut worst: f64 = 0.0;
    for _ in 0..n_loops {
        let side = |rng: &mut R| {
            let len = rng.gen_range(0.25 * r..=2.0 * r);
            let lo = rng.gen_range(-r..=r - len);
            (lo, lo + len)
        };
        let (u0, u1) = side(rng);
        let (v0, v1) = side(rng);
        let c = [C::new(u0, v0), C::new(u1, v0), C::new(u1, v1), C::new(u0, v1)];
        let total: C = (0..4).map(|k| ig.segment(c[k], c[(k + 1) % 4])).sum();
        let perimeter = 2.0 * ((u1 - u0) + (v1 - v0));
        worst = worst.max(total.norm() / perimeter);
    }
    Ok(worst)
}

/// `K(z)` on the patch grid, same ordering as [`ChartSample::points`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DilatationField {
    pub values: Vec<f64>,
    pub max: f64,
}

pub fn dilatation_estimate<T: Real>(
    geometry: &Geometry<T>,
    form: &LeafForm<T>,
    patch: &LeafPatch,
) -> Result<DilatationField> {
    let ig = LeafIntegrand::new(geometry, form, patch.base)?;
    let n = patch.grid;
    let mut values = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let z = C::new(patch.coordinate(i), patch.coordinate(j));
            values.push(dilatation(ig.mu.eval(z), z)?);
        }
    }
    let max = values.iter().cloned().fold(0.0, f64::max);
    Ok(DilatationField { values, max })
}
