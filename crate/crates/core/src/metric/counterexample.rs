//! A family of leafwise closed forms on Liouville slopes whose closure `h` cannot be square
//! integrable, with the Beltrami coefficients that realize it.

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::axis_symbol;
use crate::error::{Error, Result};
use crate::foliation::{safe_inv, FoliationParams, Geometry, LatticeGeometry, SymbolTag};
use crate::homotopy::{closedness_residual, ClosednessResidual};
use crate::scalar::Real;
use crate::spectral::{fft_friendly, sup_estimate, Dim, FourierField, GridTransform, ModeIndex, ProductPlan};

const UNDERFLOW: f64 = 1e-300;

/// `f(x, t) = 1 + t sum_j (lambda_{N_j} / k_j) e^{i N_j . x}` on the lattice spanned by the
/// modes `N_j`; abstract mode `e_j` stands for `N_j`.
#[derive(Clone, Debug)]
pub struct CounterexampleFamily {
    pub geometry: Geometry<f64>,
    pub modes: Vec<[i128; 3]>,
    /// `lambda_{N_j} / k_j`, rounded from exact arithmetic when the slope is exact.
    pub coefficients: Vec<Complex<f64>>,
    /// `(s, log10 sum_j |N_j|^s |coefficient_j|)`.
    pub smoothness: Vec<(f64, f64)>,
    pub warnings: Vec<String>,
}

impl CounterexampleFamily {
    pub fn abstract_modes(&self) -> Vec<ModeIndex> {
        (0..self.modes.len())
            .map(|j| {
                let mut e = [0i64; 3];
                e[j] = 1;
                ModeIndex::new(e[0], e[1], e[2])
            })
            .collect()
    }

    /// `sum_j (lambda_j / k_j) e_j`.
    pub fn direction(&self, cutoff: usize) -> FourierField<f64> {
        let mut s = FourierField::zeros(Dim::Torus3, cutoff.max(1));
        for (n, c) in self.abstract_modes().into_iter().zip(&self.coefficients) {
            s.set(n, *c);
        }
        s
    }

    pub fn at(&self, t: f64, cutoff: usize) -> FourierField<f64> {
        let mut f = self.direction(cutoff).scale_real(t);
        let one = f.get(ModeIndex::ZERO) + Complex::new(1.0, 0.0);
        f.set(ModeIndex::ZERO, one);
        f
    }

    /// `t -> (f(., t), df/dt)`.
    pub fn family(&self, cutoff: usize) -> impl Fn(f64) -> (FourierField<f64>, FourierField<f64>) + '_ {
        let s = self.direction(cutoff);
        move |t| {
            let mut f = s.scale_real(t);
            f.set(ModeIndex::ZERO, Complex::new(1.0, 0.0));
            (f, s.clone())
        }
    }
}

fn exact_coefficient(params: &FoliationParams<f64>, n: [i128; 3]) -> Option<Complex<f64>> {
    let (r1, r2) = (params.exact_a1.as_ref()?, params.exact_a2.as_ref()?);
    let big = |v: i128| BigRational::from_integer(BigInt::from(v));
    let k = big(n[2]);
    let p = big(n[0]) + r1 * &k;
    let q = big(n[1]) + r2 * &k;
    let two_k = k * BigRational::from_integer(BigInt::from(2));
    Some(Complex::new((q / &two_k).to_f64()?, (p / two_k).to_f64()?))
}

/// Builds the family on the given convergent-type modes (at most three, all with `k != 0`).
pub fn counterexample_family(
    params: &FoliationParams<f64>,
    modes: &[[i128; 3]],
    t: f64,
) -> Result<CounterexampleFamily> {
    if modes.is_empty() {
        return Err(Error::InvalidArgument("counterexample needs at least one mode".into()));
    }
    if modes.len() > 3 {
        return Err(Error::InvalidArgument("at most three lattice modes are supported".into()));
    }
    if !(t.abs() <= 1.0) {
        return Err(Error::InvalidArgument("family parameter must satisfy |t| <= 1".into()));
    }
    let mut kept = Vec::new();
    let mut coefficients = Vec::new();
    let mut warnings = Vec::new();
    for &n in modes {
        if n[2] == 0 {
            return Err(Error::InvalidArgument(format!("mode {n:?} has k = 0")));
        }
        let c = exact_coefficient(params, n).unwrap_or_else(|| {
            let (p, q) = params.leaf_freq_wide(n[0], n[1], n[2]);
            let k = n[2] as f64;
            Complex::new(q / (2.0 * k), p / (2.0 * k))
        });
        if !(c.norm() >= UNDERFLOW) {
            warnings.push(format!("coefficient of mode {n:?} underflows; mode dropped"));
            continue;
        }
        kept.push(n);
        coefficients.push(c);
    }
    if kept.is_empty() {
        return Err(Error::InvalidArgument("every coefficient underflowed".into()));
    }
    let smoothness = [0.0, 1.0, 2.0, 4.0, 8.0]
        .iter()
        .map(|&s| {
            let logs: Vec<f64> = kept
                .iter()
                .zip(&coefficients)
                .map(|(n, c)| {
                    let l1 = n.iter().map(|v| v.unsigned_abs() as f64).sum::<f64>();
                    s * l1.log10() + c.norm().log10()
                })
                .collect();
            let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = logs.iter().map(|l| 10f64.powf(l - top)).sum();
            (s, top + sum.log10())
        })
        .collect();
    Ok(CounterexampleFamily {
        geometry: Geometry::Lattice(LatticeGeometry {
            params: params.clone(),
            generators: kept.clone(),
        }),
        modes: kept,
        coefficients,
        smoothness,
        warnings,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NuSolveConfig {
    pub steps: usize,
    pub cutoff: usize,
    pub vanish_guard: f64,
}

impl Default for NuSolveConfig {
    fn default() -> Self {
        Self {
            steps: 40,
            cutoff: 6,
            vanish_guard: 1e-3,
        }
    }
}

/// `nu(., t)` with `nu(., 0) = 0` making `f(., t) (dz + nu dzbar)` leafwise closed.
#[derive(Clone, Debug)]
pub struct NuSolution<T: Real> {
    pub times: Vec<f64>,
    pub nu: Vec<FourierField<T>>,
    pub sup_nu: Vec<f64>,
    pub min_abs_f: Vec<f64>,
    pub residual: ClosednessResidual,
    /// `|P(nu f) - U^{-1}(f - 1)|_{H^0}` at the final time; zero for the exact flow.
    pub identity_defect: f64,
}

impl<T: Real> NuSolution<T> {
    pub fn final_nu(&self) -> &FourierField<T> {
        self.nu.last().expect("at least the initial state")
    }
}

/// RK4 on `nu' = (U^{-1} f' - nu f') / f`, dividing by `f` pointwise on a grid.
pub fn solve_nu_along_family<T: Real>(
    geometry: &Geometry<T>,
    family: &dyn Fn(f64) -> (FourierField<T>, FourierField<T>),
    t_end: f64,
    config: &NuSolveConfig,
) -> Result<NuSolution<T>> {
    let m = config.cutoff.max(1);
    let dim = geometry.dim();
    let (f0, _) = family(0.0);
    geometry.check_field(&f0)?;
    let one = FourierField::constant(dim, m, Complex::new(T::one(), T::zero()));
    if (&f0.resized(m) - &one).max_abs_coeff().to_f64_lossy() > 1e-14 {
        return Err(Error::InvalidArgument("family must start at f = 1".into()));
    }
    let uinv = geometry.table(SymbolTag::Uinv, m);
    let mut grid = GridTransform::new(dim, fft_friendly(4 * m + 2));
    let steps = config.steps.max(1);
    let h = t_end / steps as f64;

    let mut rhs = |t: f64, nu: &FourierField<T>| -> Result<(FourierField<T>, f64)> {
        let (f, df) = family(t);
        let (f, df) = (f.resized(m), df.resized(m));
        let mut w = df.clone();
        for (c, s) in w.coeffs_mut().iter_mut().zip(&uinv) {
            *c = *c * *s;
        }
        let fv = grid.synthesize(&f);
        let dv = grid.synthesize(&df);
        let wv = grid.synthesize(&w);
        let nv = grid.synthesize(nu);
        let scale = f.norm_h0();
        let mut lo = (T::infinity(), 0usize);
        let vals: Vec<_> = (0..fv.len())
            .map(|i| {
                let r = fv[i].norm();
                if r < lo.0 {
                    lo = (r, i);
                }
                (wv[i] - nv[i] * dv[i]) / fv[i]
            })
            .collect();
        if !(lo.0 >= T::lit(config.vanish_guard) * scale) {
            return Err(Error::PossibleZero {
                min_abs: lo.0.to_f64_lossy(),
                x: grid.point(lo.1).map(|x| x.to_f64_lossy()),
                t,
            });
        }
        Ok((grid.analyze(vals, m), lo.0.to_f64_lossy()))
    };

    let c = |x: f64| Complex::new(T::lit(x), T::zero());
    let mut nu = FourierField::zeros(dim, m);
    let mut times = vec![0.0];
    let mut history = vec![nu.clone()];
    let mut sup_nu = vec![0.0];
    let (_, min0) = rhs(0.0, &nu)?;
    let mut min_abs_f = vec![min0];
    for step in 0..steps {
        let t = step as f64 * h;
        let (k1, _) = rhs(t, &nu)?;
        let mut y = nu.clone();
        y.axpy(c(h / 2.0), &k1);
        let (k2, _) = rhs(t + h / 2.0, &y)?;
        let mut y = nu.clone();
        y.axpy(c(h / 2.0), &k2);
        let (k3, _) = rhs(t + h / 2.0, &y)?;
        let mut y = nu.clone();
        y.axpy(c(h), &k3);
        let (k4, _) = rhs(t + h, &y)?;
        nu.axpy(c(h / 6.0), &k1);
        nu.axpy(c(h / 3.0), &k2);
        nu.axpy(c(h / 3.0), &k3);
        nu.axpy(c(h / 6.0), &k4);
        let t_new = if step + 1 == steps { t_end } else { t + h };
        let sup = sup_estimate(&nu, 4).to_f64_lossy();
        if sup >= 1.0 {
            return Err(Error::NuTooLarge { sup, t: t_new });
        }
        let (_, lo) = rhs(t_new, &nu)?;
        times.push(t_new);
        history.push(nu.clone());
        sup_nu.push(sup);
        min_abs_f.push(lo);
    }

    let (f_end, _) = family(t_end);
    let f_end = f_end.resized(m);
    let residual = closedness_residual(geometry, &nu, &f_end)?;
    let mut plan = ProductPlan::new(dim, m, false);
    let prod = plan.product(&nu, &f_end);
    let mut target = &f_end - &one;
    for (c, s) in target.coeffs_mut().iter_mut().zip(&uinv) {
        *c = *c * *s;
    }
    let identity_defect = (&prod - &target).norm_h0().to_f64_lossy();
    Ok(NuSolution {
        times,
        nu: history,
        sup_nu,
        min_abs_f,
        residual,
        identity_defect,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Obstructed,
    Unobstructed,
    UnobstructedTrivial,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Obstructed => "obstructed",
            Verdict::Unobstructed => "unobstructed",
            Verdict::UnobstructedTrivial => "unobstructed (trivial)",
        }
    }
}

impl Serialize for Verdict {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

/// Closure coefficient `h_N = (i k / lambda_N) c_N` forced by the first closure equation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ForcedCoefficient {
    #[serde(rename = "N")]
    pub n: [i128; 3],
    pub h: [f64; 2],
    pub abs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ObstructionReport {
    pub t: Option<f64>,
    pub forced: Vec<ForcedCoefficient>,
    /// `sum_{j <= J} |h_j|^2`.
    pub partial_l2: Vec<f64>,
    /// `max_j |h_j| - min_j |h_j|`.
    pub magnitude_spread: f64,
    /// Every `|h_j|` equals `|t|` within `1e-10` (only when `t` is given).
    pub matches_t: Option<bool>,
    pub verdict: Verdict,
}

/// Constant nonzero magnitudes along the listed modes mean the partial sums of `|h|^2` grow
/// linearly, so no square-integrable `h` exists on any extension of the list.
pub fn obstruction_detect<T: Real>(
    geometry: &Geometry<T>,
    f: &FourierField<T>,
    modes: &[ModeIndex],
    t: Option<f64>,
) -> Result<ObstructionReport> {
    geometry.check_field(f)?;
    let mut forced = Vec::new();
    let mut partial = Vec::new();
    let mut acc = 0.0;
    for &n in modes {
        if !f.contains(n) {
            return Err(Error::InvalidArgument(format!("mode {n} outside the field cutoff")));
        }
        let lam = geometry.lambda(n);
        let c = f.get(n);
        let h = if lam.is_zero() || c.is_zero() {
            Complex::new(T::zero(), T::zero())
        } else {
            axis_symbol(geometry, n, 3) * c * safe_inv(lam)
        };
        let physical = match geometry {
            Geometry::Lattice(l) => l.physical(n),
            _ => [n.p as i128, n.m as i128, n.k as i128],
        };
        let abs = h.norm().to_f64_lossy();
        acc += abs * abs;
        partial.push(acc);
        forced.push(ForcedCoefficient {
            n: physical,
            h: [h.re.to_f64_lossy(), h.im.to_f64_lossy()],
            abs,
        });
    }
    let hi = forced.iter().map(|c| c.abs).fold(0.0, f64::max);
    let lo = forced.iter().map(|c| c.abs).fold(f64::INFINITY, f64::min);
    let spread = if forced.is_empty() { 0.0 } else { hi - lo };
    let verdict = if hi == 0.0 {
        Verdict::UnobstructedTrivial
    } else if spread <= 1e-10 {
        Verdict::Obstructed
    } else {
        Verdict::Unobstructed
    };
    let matches_t = t.map(|t| forced.iter().all(|c| (c.abs - t.abs()).abs() <= 1e-10));
    Ok(ObstructionReport {
        t,
        forced,
        partial_l2: partial,
        magnitude_spread: spread,
        matches_t,
        verdict,
    })
}

