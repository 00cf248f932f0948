//! Closed 1-forms on the torus built from a leafwise closed form, and the metrics they induce.
//!
//! `Omega = f dz + (mu f) dzbar - h dl` with `dz = dx1 + i dx2` and `dl = a1 dx1 + a2 dx2 - dx3`.

mod counterexample;

use nalgebra::{Matrix3, SymmetricEigen};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::foliation::{require_dense, Geometry, SymbolTag};
use crate::homotopy::{closedness_residual, ClosednessResidual};
use crate::scalar::Real;
use crate::spectral::{Dim, FourierField, GridTransform, ModeIndex, ProductPlan};

pub use counterexample::{
    counterexample_family, solve_nu_along_family, obstruction_detect, CounterexampleFamily, ForcedCoefficient,
    NuSolveConfig, NuSolution, ObstructionReport, Verdict,
};

/// `omega = f (dz + mu dzbar)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LeafForm<T: Real> {
    pub f: FourierField<T>,
    pub mu: FourierField<T>,
}

impl<T: Real> LeafForm<T> {
    pub fn new(f: FourierField<T>, mu: FourierField<T>) -> Result<Self> {
        f.check_compatible(&mu)?;
        Ok(Self { f, mu })
    }

    pub fn cutoff(&self) -> usize {
        self.f.cutoff()
    }

    pub fn residual(&self, geometry: &Geometry<T>) -> Result<ClosednessResidual> {
        closedness_residual(geometry, &self.mu, &self.f)
    }
}

/// Tuning knobs for the metric pipeline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricConfig {
    /// Warn when some `|k / lambda_N|` exceeds this.
    pub amplification_bound: f64,
    /// Points per axis for the positive-definiteness sample.
    pub sample_grid: usize,
    pub flat_tol: f64,
    pub curvature_tol: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            amplification_bound: 1e6,
            sample_grid: 33,
            flat_tol: 1e-6,
            curvature_tol: 1e-4,
        }
    }
}

/// `h` solving `d f / dx3 = D_z h`, with the defects of both closure equations.
#[derive(Clone, Debug)]
pub struct ClosureSolution<T: Real> {
    pub h: FourierField<T>,
    /// `|df/dx3 - D_z h|_{H^0}`.
    pub residual1: f64,
    /// `|d(mu f)/dx3 - D_zbar h|_{H^0}` with the exact product.
    pub residual2: f64,
    pub max_amplification: f64,
    pub amplification_argmax: ModeIndex,
    pub warnings: Vec<String>,
}

/// `i` times the physical frequency of `n` along `x_axis`.
pub fn axis_symbol<T: Real>(geometry: &Geometry<T>, n: ModeIndex, axis: usize) -> Complex<T> {
    let w = match geometry {
        Geometry::Torus3(_) => T::from_int(n.component(axis)),
        Geometry::Torus2 => {
            if axis == 3 {
                T::zero()
            } else {
                T::from_int(n.component(axis))
            }
        }
        Geometry::Lattice(l) => T::lit(l.physical(n)[axis - 1] as f64),
    };
    Complex::new(T::zero(), w)
}

fn d_axis<T: Real>(geometry: &Geometry<T>, a: &FourierField<T>, axis: usize) -> FourierField<T> {
    a.map(|n, c| c * axis_symbol(geometry, n, axis))
}

fn symbol<T: Real>(geometry: &Geometry<T>, tag: SymbolTag, a: &FourierField<T>) -> FourierField<T> {
    a.map(|n, c| c * geometry.symbol(tag, n))
}

fn slopes<T: Real>(geometry: &Geometry<T>) -> (T, T) {
    geometry.params().map_or((T::zero(), T::zero()), |p| (p.a1, p.a2))
}

fn check_dense<T: Real>(geometry: &Geometry<T>, cutoff: usize) -> Result<()> {
    if let Geometry::Torus3(p) = geometry {
        require_dense(p, cutoff)?;
    }
    Ok(())
}

/// `h = D_z^{-1}(df/dx3)`.
pub fn build_h<T: Real>(
    geometry: &Geometry<T>,
    form: &LeafForm<T>,
    config: &MetricConfig,
) -> Result<ClosureSolution<T>> {
    geometry.check_field(&form.f)?;
    check_dense(geometry, form.cutoff())?;
    let df3 = d_axis(geometry, &form.f, 3);
    let h = geometry.apply_dz_inverse(&df3)?;
    let residual1 = (&df3 - &symbol(geometry, SymbolTag::Dz, &h)).norm_h0().to_f64_lossy();
    let residual2 = second_equation_defect(geometry, form, &h).norm_h0().to_f64_lossy();

    let mut max_amplification = 0.0f64;
    let mut amplification_argmax = ModeIndex::ZERO;
    let zero = Complex::new(T::zero(), T::zero());
    for (n, c) in form.f.iter() {
        if n.is_zero() || c == zero {
            continue;
        }
        let k = axis_symbol(geometry, n, 3).norm().to_f64_lossy();
        let lam = geometry.lambda(n).norm().to_f64_lossy();
        let amp = if k == 0.0 { 0.0 } else { k / lam };
        if amp > max_amplification {
            max_amplification = amp;
            amplification_argmax = n;
        }
    }
    let mut warnings = Vec::new();
    if max_amplification > config.amplification_bound {
        warnings.push(format!(
            "small denominators dominate: |k/lambda| = {max_amplification:.3e} at {amplification_argmax}"
        ));
    }
    Ok(ClosureSolution {
        h,
        residual1,
        residual2,
        max_amplification,
        amplification_argmax,
        warnings,
    })
}

/// `d(mu f)/dx3 - D_zbar h`, at cutoff `2M`.
pub fn second_equation_defect<T: Real>(
    geometry: &Geometry<T>,
    form: &LeafForm<T>,
    h: &FourierField<T>,
) -> FourierField<T> {
    let g = form.mu.multiply_full(&form.f).expect("compatible fields");
    let hh = h.resized(g.cutoff());
    &d_axis(geometry, &g, 3) - &symbol(geometry, SymbolTag::Dzbar, &hh)
}

/// Coefficients of `Omega` in the `dx` basis and of `d Omega` in the `dx_i ^ dx_j` basis.
#[derive(Clone, Debug)]
pub struct ClosedForm<T: Real> {
    /// `[A1, A2, A3]` with `Omega = A1 dx1 + A2 dx2 + A3 dx3`, cutoff `2M`.
    pub components: [FourierField<T>; 3],
    /// `[d12, d13, d23]`.
    pub differential: [FourierField<T>; 3],
    pub component_residuals: [f64; 3],
    pub dform_residual: f64,
}

/// Assembles `Omega` and measures `d Omega` spectrally.
pub fn assemble_closed_form<T: Real>(
    geometry: &Geometry<T>,
    form: &LeafForm<T>,
    closure: &ClosureSolution<T>,
) -> Result<ClosedForm<T>> {
    geometry.check_field(&form.f)?;
    form.f.check_compatible(&closure.h)?;
    let g = form.mu.multiply_full(&form.f)?;
    let m2 = g.cutoff();
    let f = form.f.resized(m2);
    let h = closure.h.resized(m2);
    let (a1, a2) = slopes(geometry);
    let c = |x: T| Complex::new(x, T::zero());
    let i = Complex::new(T::zero(), T::one());

    let mut c1 = &f + &g;
    c1.axpy(-c(a1), &h);
    let mut c2 = (&f - &g).scale(i);
    c2.axpy(-c(a2), &h);
    let c3 = h;

    let d = |a: &FourierField<T>, axis| d_axis(geometry, a, axis);
    let d12 = &d(&c2, 1) - &d(&c1, 2);
    let d13 = &d(&c3, 1) - &d(&c1, 3);
    let d23 = &d(&c3, 2) - &d(&c2, 3);
    let component_residuals = [&d12, &d13, &d23].map(|x| x.norm_h0().to_f64_lossy());
    let dform_residual = component_residuals.iter().cloned().fold(0.0, f64::max);
    Ok(ClosedForm {
        components: [c1, c2, c3],
        differential: [d12, d13, d23],
        component_residuals,
        dform_residual,
    })
}

/// Largest `|K|` of the leaf metric `|omega|^2` over a sample grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureCheck {
    pub max_abs: f64,
    pub at: [f64; 3],
    pub samples: usize,
    pub within_tol: bool,
}

/// Sampled Gram matrix of `Re(Omega (x) conj Omega) + dl (x) dl`.
#[derive(Clone, Debug)]
pub struct MetricReport<T: Real> {
    /// `g11, g12, g13, g22, g23, g33`.
    pub gram: Vec<FourierField<T>>,
    pub gram_mean: [[f64; 3]; 3],
    pub min_eigenvalue: f64,
    pub min_at: [f64; 3],
    pub max_eigenvalue: f64,
    pub samples: usize,
    pub positive_definite: bool,
    /// `min |f|^2` and `max |f|^2` on the sample grid.
    pub conformal_factor: (f64, f64),
    pub curvature: CurvatureCheck,
    /// `d Omega` is not small, so the metric need not be flat along leaves.
    pub non_flat: bool,
}

pub const GRAM_LABELS: [&str; 6] = ["g11", "g12", "g13", "g22", "g23", "g33"];
const GRAM_INDEX: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

fn covector<T: Real>(geometry: &Geometry<T>) -> [f64; 3] {
    match geometry {
        Geometry::Torus2 => [0.0; 3],
        _ => {
            let (a1, a2) = slopes(geometry);
            [a1.to_f64_lossy(), a2.to_f64_lossy(), -1.0]
        }
    }
}

fn sample_size(base: usize, cutoff: usize) -> usize {
    let base = base.max(1);
    let need = 2 * cutoff + 1;
    base * need.div_ceil(base)
}

/// Gram fields and pointwise positive-definiteness on a `sample_grid^3` grid.
pub fn euclidean_metric<T: Real>(
    geometry: &Geometry<T>,
    form: &LeafForm<T>,
    closed: &ClosedForm<T>,
    config: &MetricConfig,
) -> Result<MetricReport<T>> {
    let dim = geometry.dim();
    let l = covector(geometry);
    let comps = &closed.components;
    let cut = comps[0].cutoff();

    let mut plan = ProductPlan::new(dim, cut, true);
    let vals: Vec<_> = comps.iter().map(|a| plan.values(a)).collect();
    let mut gram = Vec::with_capacity(6);
    let mut gram_mean = [[0.0; 3]; 3];
    for &(i, j) in &GRAM_INDEX {
        let pts: Vec<_> = vals[i]
            .iter()
            .zip(&vals[j])
            .map(|(x, y)| Complex::new((x * y.conj()).re + T::lit(l[i] * l[j]), T::zero()))
            .collect();
        let field = plan.grid().analyze(pts, 2 * cut);
        let mean = field.average().re.to_f64_lossy();
        gram_mean[i][j] = mean;
        gram_mean[j][i] = mean;
        gram.push(field);
    }

    let base = config.sample_grid.max(1);
    let size = sample_size(base, cut);
    let stride = size / base;
    let mut grid = GridTransform::new(dim, size);
    let pv: Vec<_> = comps.iter().map(|a| grid.synthesize(a)).collect();
    let fv = grid.synthesize(&form.f);
    let rank = dim.rank();
    let mut min_eig = f64::INFINITY;
    let mut max_eig = f64::NEG_INFINITY;
    let mut min_at = [0.0; 3];
    let mut phi = (f64::INFINITY, 0.0f64);
    let mut samples = 0;
    for idx in 0..grid.len() {
        let mut rest = idx;
        let mut on_sample = true;
        for _ in 0..rank {
            if (rest % size) % stride != 0 {
                on_sample = false;
            }
            rest /= size;
        }
        if !on_sample {
            continue;
        }
        samples += 1;
        let a: Vec<Complex<f64>> = pv
            .iter()
            .map(|v| Complex::new(v[idx].re.to_f64_lossy(), v[idx].im.to_f64_lossy()))
            .collect();
        let g = Matrix3::from_fn(|i, j| (a[i] * a[j].conj()).re + l[i] * l[j]);
        let eig = SymmetricEigen::new(g).eigenvalues;
        let lo = eig.min();
        if lo < min_eig {
            min_eig = lo;
            min_at = grid.point(idx).map(|x| x.to_f64_lossy());
        }
        max_eig = max_eig.max(eig.max());
        let p = fv[idx].norm_sqr().to_f64_lossy();
        phi = (phi.0.min(p), phi.1.max(p));
    }
    let positive_definite = dim == Dim::Torus2 || min_eig > 0.0;
    if !positive_definite {
        return Err(Error::NotPositiveDefinite {
            x: min_at,
            min_eigenvalue: min_eig,
        });
    }
    let curvature = leaf_curvature(geometry, form, config.curvature_tol)?;
    Ok(MetricReport {
        gram,
        gram_mean,
        min_eigenvalue: min_eig,
        min_at,
        max_eigenvalue: max_eig,
        samples,
        positive_definite,
        conformal_factor: phi,
        curvature,
        non_flat: !(closed.dform_residual <= config.flat_tol),
    })
}

/// Gaussian curvature of `|f (dz + mu dzbar)|^2` in leaf coordinates `(x1, x2)` by the
/// Brioschi formula, sampled on a `(4M + 1)^rank` grid.
pub fn leaf_curvature<T: Real>(geometry: &Geometry<T>, form: &LeafForm<T>, tol: f64) -> Result<CurvatureCheck> {
    geometry.check_field(&form.f)?;
    let g = form.mu.multiply_full(&form.f)?;
    let m2 = g.cutoff();
    let f = form.f.resized(m2);
    let i = Complex::new(T::zero(), T::one());
    let alpha = &f + &g;
    let beta = (&f - &g).scale(i);
    let leaf = |a: &FourierField<T>, u: usize| {
        a.map(|n, c| {
            let (p, q) = geometry.leaf_freq(n);
            c * Complex::new(T::zero(), if u == 1 { p } else { q })
        })
    };
    let jets = |a: &FourierField<T>| {
        let a1 = leaf(a, 1);
        let a2 = leaf(a, 2);
        let a11 = leaf(&a1, 1);
        let a12 = leaf(&a1, 2);
        let a22 = leaf(&a2, 2);
        [a.clone(), a1, a2, a11, a12, a22]
    };
    let size = 2 * m2 + 1;
    let mut grid = GridTransform::new(geometry.dim(), size);
    let to64 = |v: Vec<Complex<T>>| -> Vec<Complex<f64>> {
        v.into_iter()
            .map(|z| Complex::new(z.re.to_f64_lossy(), z.im.to_f64_lossy()))
            .collect()
    };
    let ja: Vec<_> = jets(&alpha).iter().map(|a| to64(grid.synthesize(a))).collect();
    let jb: Vec<_> = jets(&beta).iter().map(|a| to64(grid.synthesize(a))).collect();
    let mut worst = (0.0f64, 0usize);
    for idx in 0..grid.len() {
        let [a, au, av, _, auv, avv] = [0, 1, 2, 3, 4, 5].map(|k| ja[k][idx]);
        let [b, bu, bv, buu, buv, _] = [0, 1, 2, 3, 4, 5].map(|k| jb[k][idx]);
        let re = |z: Complex<f64>| z.re;
        let e = a.norm_sqr();
        let ff = re(a * b.conj());
        let gg = b.norm_sqr();
        let e_u = 2.0 * re(au * a.conj());
        let e_v = 2.0 * re(av * a.conj());
        let e_vv = 2.0 * (re(avv * a.conj()) + av.norm_sqr());
        let f_u = re(au * b.conj() + a * bu.conj());
        let f_v = re(av * b.conj() + a * bv.conj());
        let f_uv = re(auv * b.conj() + au * bv.conj() + av * bu.conj() + a * buv.conj());
        let g_u = 2.0 * re(bu * b.conj());
        let g_v = 2.0 * re(bv * b.conj());
        let g_uu = 2.0 * (re(buu * b.conj()) + bu.norm_sqr());
        let m1 = Matrix3::new(
            -0.5 * e_vv + f_uv - 0.5 * g_uu,
            0.5 * e_u,
            f_u - 0.5 * e_v,
            f_v - 0.5 * g_u,
            e,
            ff,
            0.5 * g_v,
            ff,
            gg,
        );
        let m2m = Matrix3::new(0.0, 0.5 * e_v, 0.5 * g_u, 0.5 * e_v, e, ff, 0.5 * g_u, ff, gg);
        let w = e * gg - ff * ff;
        let k = (m1.determinant() - m2m.determinant()) / (w * w);
        let k = if k.is_finite() { k.abs() } else { f64::INFINITY };
        if k > worst.0 {
            worst = (k, idx);
        }
    }
    Ok(CurvatureCheck {
        max_abs: worst.0,
        at: grid.point(worst.1).map(|x| x.to_f64_lossy()),
        samples: grid.len(),
        within_tol: worst.0 <= tol,
    })
}
