//! Homotopy continuation for closed leafwise forms `f (dz + nu dzbar)`.
//!
//! Along `nu(., t)` the coefficient `f` obeys `f' = R(nu) U P(nu' f)` with
//! `R(nu) = (Id - U P nu)^{-1}` and `f(., 0) = 1`, which keeps `f - U P(nu f) = 1`.

mod oracle;
mod probe;
#[cfg(test)]
mod tests;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::foliation::{require_dense, Geometry, SymbolTag};
use crate::scalar::Real;
use crate::spectral::{grid_extrema, sup_estimate, sup_refined, Dim, FourierField, NormSpec, ProductPlan};

pub use oracle::{kernel_oracle, KernelOracle};
pub use probe::{resolvent_bound_probe, ResolventBoundReport};

/// Oversampling used to validate `sup |mu|`.
pub const SUP_OVERSAMPLE: usize = 4;

/// A Beltrami coefficient together with its validated sup estimate `delta < 1`.
#[derive(Clone, Debug)]
pub struct BeltramiField<T: Real> {
    mu: FourierField<T>,
    delta: T,
    delta_grid: T,
}

impl<T: Real> BeltramiField<T> {
    pub fn new(mu: FourierField<T>) -> Result<Self> {
        Self::with_oversample(mu, SUP_OVERSAMPLE)
    }

    pub fn with_oversample(mu: FourierField<T>, oversample: usize) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::InvalidArgument("Beltrami coefficient is not finite".into()));
        }
        let oversample = oversample.max(SUP_OVERSAMPLE);
        let delta_grid = sup_estimate(&mu, oversample);
        let delta = sup_refined(&mu, oversample).value.max(delta_grid);
        if delta >= T::one() {
            return Err(Error::BeltramiBound { sup: delta.to_f64_lossy() });
        }
        Ok(Self { mu, delta, delta_grid })
    }

    pub fn mu(&self) -> &FourierField<T> {
        &self.mu
    }

    pub fn into_inner(self) -> FourierField<T> {
        self.mu
    }

    /// Refined estimate of `sup |mu|`.
    pub fn delta(&self) -> T {
        self.delta
    }

    /// Plain grid maximum of `|mu|`.
    pub fn delta_grid(&self) -> T {
        self.delta_grid
    }

    pub fn dim(&self) -> Dim {
        self.mu.dim()
    }

    pub fn cutoff(&self) -> usize {
        self.mu.cutoff()
    }

    /// `max_r sup |d mu / dx_r|`.
    pub fn derivative_sup(&self) -> T {
        (1..=self.mu.dim().rank())
            .map(|axis| {
                let d = self.mu.partial_derivative(axis).expect("axis in range");
                sup_refined(&d, SUP_OVERSAMPLE).value
            })
            .fold(T::zero(), |a, b| a.max(b))
    }
}

/// Time profile `phi` of a scaled path `nu(., t) = phi(t) mu`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathRule {
    #[default]
    Linear,
    Sine,
}

impl PathRule {
    /// `(phi(t), phi'(t))`.
    pub fn profile(self, t: f64) -> (f64, f64) {
        match self {
            PathRule::Linear => (t, 1.0),
            PathRule::Sine => {
                let w = std::f64::consts::FRAC_PI_2;
                ((w * t).sin(), w * (w * t).cos())
            }
        }
    }
}

impl FromStr for PathRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "linear" => Ok(PathRule::Linear),
            "sine" | "sin" => Ok(PathRule::Sine),
            other => Err(Error::InvalidArgument(format!("unknown path rule {other:?}"))),
        }
    }
}

impl fmt::Display for PathRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PathRule::Linear => "linear",
            PathRule::Sine => "sine",
        })
    }
}

/// `t -> (nu(., t), d nu / dt)`.
pub type PathFamily<T> = Arc<dyn Fn(f64) -> (FourierField<T>, FourierField<T>) + Send + Sync>;

/// A deformation of the Beltrami coefficient starting from `nu(., 0) = 0`.
#[derive(Clone)]
pub enum HomotopyPath<T: Real> {
    Scaled { mu: FourierField<T>, rule: PathRule },
    Custom { family: PathFamily<T> },
}

impl<T: Real> HomotopyPath<T> {
    pub fn scaled(mu: &BeltramiField<T>, rule: PathRule) -> Self {
        HomotopyPath::Scaled {
            mu: mu.mu().clone(),
            rule,
        }
    }

    /// A user family; rejected unless `nu(., 0)` vanishes exactly.
    pub fn custom(family: PathFamily<T>) -> Result<Self> {
        let (nu0, _) = family(0.0);
        let zero = Complex::new(T::zero(), T::zero());
        if nu0.coeffs().iter().any(|c| *c != zero) {
            return Err(Error::InvalidArgument("path must start at nu = 0".into()));
        }
        Ok(HomotopyPath::Custom { family })
    }

    pub fn at(&self, t: f64) -> (FourierField<T>, FourierField<T>) {
        match self {
            HomotopyPath::Scaled { mu, rule } => {
                let (p, dp) = rule.profile(t);
                (mu.scale_real(T::lit(p)), mu.scale_real(T::lit(dp)))
            }
            HomotopyPath::Custom { family } => family(t),
        }
    }

    fn dim_cutoff(&self) -> (Dim, usize) {
        match self {
            HomotopyPath::Scaled { mu, .. } => (mu.dim(), mu.cutoff()),
            HomotopyPath::Custom { family } => {
                let (nu, _) = family(0.0);
                (nu.dim(), nu.cutoff())
            }
        }
    }
}

impl<T: Real> fmt::Debug for HomotopyPath<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HomotopyPath::Scaled { rule, .. } => write!(f, "HomotopyPath::Scaled({rule})"),
            HomotopyPath::Custom { .. } => f.write_str("HomotopyPath::Custom"),
        }
    }
}

/// Function class of the data, selecting the norm used for step control.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum Category {
    #[default]
    Smooth,
    Analytic(f64),
}

impl Category {
    pub fn norm(self) -> NormSpec {
        match self {
            Category::Smooth => NormSpec::Sobolev(2),
            Category::Analytic(r) => NormSpec::Analytic(r),
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Category::Smooth => f.write_str("smooth"),
            Category::Analytic(r) => write!(f, "analytic({r})"),
        }
    }
}

impl FromStr for Category {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        if s == "smooth" {
            return Ok(Category::Smooth);
        }
        let bad = || Error::InvalidArgument(format!("unknown category {s:?}"));
        let inner = s
            .strip_prefix("analytic(")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(bad)?;
        let r: f64 = inner.trim().parse().map_err(|_| bad())?;
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidArgument("analytic radius must be positive".into()));
        }
        Ok(Category::Analytic(r))
    }
}

impl Serialize for Category {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Category {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Integrator settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Local error allowance per unit time, relative to `max(1, |f|)`.
    pub step_tol: f64,
    /// Bound on the in-band closedness residual at accepted steps.
    pub residual_tol: f64,
    /// Minimum of `|f| / |f|_{H^0}` tolerated on the oversampled grid.
    pub vanish_guard: f64,
    pub resolvent_tol: f64,
    pub category: Category,
    pub path: PathRule,
    pub initial_step: f64,
    pub min_step: f64,
    pub max_steps: usize,
    pub oversample: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            step_tol: 1e-9,
            residual_tol: 1e-6,
            vanish_guard: 1e-3,
            resolvent_tol: 1e-13,
            category: Category::Smooth,
            path: PathRule::Linear,
            initial_step: 0.125,
            min_step: 1e-7,
            max_steps: 100_000,
            oversample: 2,
        }
    }
}

/// Closedness defect `D_zbar f - D_z(nu f)`, split into the modes inside the cutoff and
/// the spill of the exact product beyond it. Norms are divided by `max(1, |f|_{H^0})`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosednessResidual {
    pub total: f64,
    pub in_band: f64,
    pub spill: f64,
}

/// Closedness residual of `f (dz + nu dzbar)` on the leaves (or on the 2-torus).
pub fn closedness_residual<T: Real>(
    geometry: &Geometry<T>,
    nu: &FourierField<T>,
    f: &FourierField<T>,
) -> Result<ClosednessResidual> {
    geometry.check_field(f)?;
    nu.check_compatible(f)?;
    let mut plan = ProductPlan::new(f.dim(), f.cutoff(), true);
    Ok(residual_with(geometry, &mut plan, nu, f))
}

fn residual_with<T: Real>(
    geometry: &Geometry<T>,
    plan: &mut ProductPlan<T>,
    nu: &FourierField<T>,
    f: &FourierField<T>,
) -> ClosednessResidual {
    let m = f.cutoff() as i64;
    let prod = plan.product_full(nu, f);
    let mut in2 = 0.0;
    let mut out2 = 0.0;
    for (n, c) in prod.iter() {
        let d = geometry.symbol(SymbolTag::Dz, n) * c;
        let d = if n.linf() <= m {
            geometry.symbol(SymbolTag::Dzbar, n) * f.get(n) - d
        } else {
            d
        };
        let s = d.norm_sqr().to_f64_lossy();
        if n.linf() <= m {
            in2 += s;
        } else {
            out2 += s;
        }
    }
    let scale = f.norm_h0().to_f64_lossy().max(1.0);
    ClosednessResidual {
        total: (in2 + out2).sqrt() / scale,
        in_band: in2.sqrt() / scale,
        spill: out2.sqrt() / scale,
    }
}

/// Result of [`resolvent_apply`].
#[derive(Clone, Debug)]
pub struct ResolventOutcome<T: Real> {
    pub y: FourierField<T>,
    pub iterations: usize,
    /// `|y_prev - (g + U P(nu y_prev))|_{H^0} / |g|_{H^0}` at the last iterate.
    pub residual: f64,
}

/// Iteration budget `ceil(log tol / log delta) + margin`.
pub fn resolvent_budget(delta: f64, tol: f64) -> usize {
    const MARGIN: usize = 25;
    if delta <= 0.0 {
        return 2 + MARGIN;
    }
    let k = (tol.ln() / delta.ln()).ceil();
    k.max(1.0) as usize + MARGIN
}

/// Reusable symbol tables and FFT plans for one geometry and cutoff.
pub(crate) struct Workspace<T: Real> {
    dim: Dim,
    cutoff: usize,
    u: Vec<Complex<T>>,
    band: ProductPlan<T>,
}

impl<T: Real> Workspace<T> {
    pub(crate) fn new(geometry: &Geometry<T>, cutoff: usize) -> Self {
        let dim = geometry.dim();
        Self {
            dim,
            cutoff,
            u: geometry.table(SymbolTag::U, cutoff),
            band: ProductPlan::new(dim, cutoff, false),
        }
    }

    pub(crate) fn values(&mut self, a: &FourierField<T>) -> Vec<Complex<T>> {
        self.band.values(a)
    }

    /// `U P(v a)` for grid values `v`.
    pub(crate) fn u_product(&mut self, v: &[Complex<T>], a: &FourierField<T>) -> FourierField<T> {
        let mut out = self.band.multiply_values(v, a);
        for (c, s) in out.coeffs_mut().iter_mut().zip(&self.u) {
            *c = *c * *s;
        }
        out
    }

    /// Fixed-point iteration `y <- g + U P(nu y)` from `start`.
    pub(crate) fn resolvent(
        &mut self,
        nu: &[Complex<T>],
        delta: f64,
        g: &FourierField<T>,
        start: Option<&FourierField<T>>,
        tol: f64,
    ) -> Result<ResolventOutcome<T>> {
        if delta >= 1.0 {
            return Err(Error::BeltramiBound { sup: delta });
        }
        let gn = g.norm_h0().to_f64_lossy();
        if gn == 0.0 {
            return Ok(ResolventOutcome {
                y: FourierField::zeros(self.dim, self.cutoff),
                iterations: 0,
                residual: 0.0,
            });
        }
        let budget = resolvent_budget(delta, tol);
        let mut y = start.cloned().unwrap_or_else(|| g.clone());
        let mut residual = f64::INFINITY;
        for it in 1..=budget {
            let mut next = self.u_product(nu, &y);
            next.axpy(Complex::new(T::one(), T::zero()), g);
            let diff = (&next - &y).norm_h0().to_f64_lossy() / gn;
            y = next;
            residual = diff;
            if !diff.is_finite() {
                break;
            }
            if diff <= tol {
                return Ok(ResolventOutcome {
                    y,
                    iterations: it,
                    residual,
                });
            }
        }
        Err(Error::ResolventDiverged {
            iterations: budget,
            residual,
        })
    }
}

/// Applies `(Id - U P nu)^{-1}` to `g`.
pub fn resolvent_apply<T: Real>(
    geometry: &Geometry<T>,
    nu: &FourierField<T>,
    g: &FourierField<T>,
    tol: f64,
) -> Result<ResolventOutcome<T>> {
    geometry.check_field(g)?;
    nu.check_compatible(g)?;
    let delta = BeltramiField::new(nu.clone())?.delta().to_f64_lossy();
    let mut ws = Workspace::new(geometry, g.cutoff());
    let vals = ws.values(nu);
    ws.resolvent(&vals, delta, g, None, tol)
}

/// Diagnostics at one accepted time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: f64,
    pub step: f64,
    pub residual: ClosednessResidual,
    pub min_abs_f: f64,
    pub min_at: [f64; 3],
    pub norm_h0: f64,
    pub norm_h1: f64,
    pub norm_h2: f64,
    pub error_estimate: f64,
    /// Largest resolvent iteration count among the stage evaluations of the step.
    pub resolvent_iterations: usize,
}

/// Output of the homotopy integration.
#[derive(Clone, Debug)]
pub struct HomotopySolution<T: Real> {
    pub dim: Dim,
    pub cutoff: usize,
    pub times: Vec<f64>,
    pub fields: Vec<FourierField<T>>,
    pub records: Vec<StepRecord>,
    pub rejected_steps: usize,
    /// The full residual (including spill) exceeded the residual tolerance at `t = 1`.
    pub under_resolved: bool,
    pub warnings: Vec<String>,
}

impl<T: Real> HomotopySolution<T> {
    /// The last accepted field (`f(., 1)` on success).
    pub fn final_field(&self) -> &FourierField<T> {
        self.fields.last().expect("solution always holds f(., 0)")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("solution always holds t = 0")
    }

    pub fn final_record(&self) -> &StepRecord {
        self.records.last().expect("solution always holds t = 0")
    }
}

struct Stepper<'a, T: Real> {
    geometry: &'a Geometry<T>,
    path: &'a HomotopyPath<T>,
    config: &'a SolverConfig,
    ws: Workspace<T>,
    full: ProductPlan<T>,
    scaled: Option<(Vec<Complex<T>>, f64, PathRule)>,
    warm: Option<FourierField<T>>,
    max_iters: usize,
}

impl<'a, T: Real> Stepper<'a, T> {
    /// `f'(t) = R(nu(t)) U P(nu'(t) f)`.
    fn rhs(&mut self, t: f64, f: &FourierField<T>) -> Result<FourierField<T>> {
        let (nu_vals, dnu_vals, delta) = match &self.scaled {
            Some((mu_vals, dmu, rule)) => {
                let (p, dp) = rule.profile(t);
                let nu: Vec<_> = mu_vals.iter().map(|v| v.scale(T::lit(p))).collect();
                let dnu: Vec<_> = mu_vals.iter().map(|v| v.scale(T::lit(dp))).collect();
                (nu, dnu, p.abs() * dmu)
            }
            None => {
                let (nu, dnu) = self.path.at(t);
                let delta = sup_estimate(&nu, SUP_OVERSAMPLE).to_f64_lossy();
                if delta >= 1.0 {
                    return Err(Error::NuTooLarge { sup: delta, t });
                }
                (self.ws.values(&nu), self.ws.values(&dnu), delta)
            }
        };
        let g = self.ws.u_product(&dnu_vals, f);
        let out = self.ws.resolvent(
            &nu_vals,
            delta,
            &g,
            self.warm.as_ref(),
            self.config.resolvent_tol,
        )?;
        self.max_iters = self.max_iters.max(out.iterations);
        self.warm = Some(out.y.clone());
        Ok(out.y)
    }

    fn rk4(
        &mut self,
        t: f64,
        f: &FourierField<T>,
        h: f64,
        k1: &FourierField<T>,
    ) -> Result<FourierField<T>> {
        let c = |x: f64| Complex::new(T::lit(x), T::zero());
        let mut y = f.clone();
        y.axpy(c(h / 2.0), k1);
        let k2 = self.rhs(t + h / 2.0, &y)?;
        let mut y = f.clone();
        y.axpy(c(h / 2.0), &k2);
        let k3 = self.rhs(t + h / 2.0, &y)?;
        let mut y = f.clone();
        y.axpy(c(h), &k3);
        let k4 = self.rhs(t + h, &y)?;
        let mut out = f.clone();
        out.axpy(c(h / 6.0), k1);
        out.axpy(c(h / 3.0), &k2);
        out.axpy(c(h / 3.0), &k3);
        out.axpy(c(h / 6.0), &k4);
        Ok(out)
    }

    fn nu_at(&self, t: f64) -> FourierField<T> {
        self.path.at(t).0
    }

    fn record(&mut self, t: f64, h: f64, err: f64, f: &FourierField<T>) -> Result<StepRecord> {
        let nu = self.nu_at(t);
        let residual = residual_with(self.geometry, &mut self.full, &nu, f);
        let size = self.config.oversample.max(1) * (2 * f.cutoff() + 1);
        let (_, lo) = grid_extrema(f, size);
        let norm_h0 = f.norm_h0().to_f64_lossy();
        let min_abs_f = lo.value.to_f64_lossy();
        let min_at = lo.x.map(|v| v.to_f64_lossy());
        if !(min_abs_f >= self.config.vanish_guard * norm_h0) {
            return Err(Error::PossibleZero {
                min_abs: min_abs_f,
                x: min_at,
                t,
            });
        }
        Ok(StepRecord {
            t,
            step: h,
            residual,
            min_abs_f,
            min_at,
            norm_h0,
            norm_h1: f.norm(NormSpec::Sobolev(1)).to_f64_lossy(),
            norm_h2: f.norm(NormSpec::Sobolev(2)).to_f64_lossy(),
            error_estimate: err,
            resolvent_iterations: std::mem::take(&mut self.max_iters),
        })
    }
}

/// Integrates along `path`, returning whatever was accepted plus the error that stopped
/// the integration, if any.
pub fn integrate_path_partial<T: Real>(
    geometry: &Geometry<T>,
    path: &HomotopyPath<T>,
    config: &SolverConfig,
) -> (HomotopySolution<T>, Option<Error>) {
    let (dim, cutoff) = path.dim_cutoff();
    let mut sol = HomotopySolution {
        dim,
        cutoff,
        times: Vec::new(),
        fields: Vec::new(),
        records: Vec::new(),
        rejected_steps: 0,
        under_resolved: false,
        warnings: Vec::new(),
    };
    if let Err(e) = check_preconditions(geometry, dim, cutoff) {
        return (sol, Some(e));
    }
    let scaled = match path {
        HomotopyPath::Scaled { mu, rule } => match BeltramiField::new(mu.clone()) {
            Ok(b) => {
                let mut ws = Workspace::new(geometry, cutoff);
                Some((ws.values(mu), b.delta().to_f64_lossy(), *rule))
            }
            Err(e) => return (sol, Some(e)),
        },
        HomotopyPath::Custom { .. } => None,
    };
    let mut st = Stepper {
        geometry,
        path,
        config,
        ws: Workspace::new(geometry, cutoff),
        full: ProductPlan::new(dim, cutoff, true),
        scaled,
        warm: None,
        max_iters: 0,
    };
    let norm = config.category.norm();
    let mut t = 0.0f64;
    let mut f = FourierField::constant(dim, cutoff, Complex::new(T::one(), T::zero()));
    match st.record(0.0, 0.0, 0.0, &f) {
        Ok(r) => sol.records.push(r),
        Err(e) => return (sol, Some(e)),
    }
    sol.times.push(0.0);
    sol.fields.push(f.clone());
    let mut h = config.initial_step.min(1.0);
    let mut steps = 0usize;
    while t < 1.0 {
        if steps >= config.max_steps {
            return (sol, Some(Error::StepSizeUnderflow { t, h }));
        }
        steps += 1;
        if t + h > 1.0 || 1.0 - (t + h) < 1e-12 {
            h = 1.0 - t;
        }
        let attempt = (|| -> Result<(FourierField<T>, f64)> {
            st.warm = Some(f.clone());
            let k1 = st.rhs(t, &f)?;
            let big = st.rk4(t, &f, h, &k1)?;
            let mid = st.rk4(t, &f, h / 2.0, &k1)?;
            let kmid = st.rhs(t + h / 2.0, &mid)?;
            let fine = st.rk4(t + h / 2.0, &mid, h / 2.0, &kmid)?;
            let diff = &fine - &big;
            let err = diff.norm(norm).to_f64_lossy() / 15.0;
            let mut next = fine;
            next.axpy(Complex::new(T::lit(1.0 / 15.0), T::zero()), &diff);
            Ok((next, err))
        })();
        let (next, err) = match attempt {
            Ok(v) => v,
            Err(e) => return (sol, Some(e)),
        };
        let scale = next.norm(norm).to_f64_lossy().max(1.0);
        let allowed = config.step_tol * h * scale;
        let mut accept = err.is_finite() && err <= allowed;
        if accept {
            let nu = st.nu_at(t + h);
            let res = residual_with(geometry, &mut st.full, &nu, &next);
            if !(res.in_band <= config.residual_tol) {
                accept = false;
            }
        }
        let factor = if err > 0.0 && err.is_finite() {
            (0.9 * (allowed / err).powf(0.2)).clamp(0.2, 4.0)
        } else if err == 0.0 {
            4.0
        } else {
            0.2
        };
        if !accept {
            sol.rejected_steps += 1;
            h *= factor.min(0.5);
            if h < config.min_step {
                return (sol, Some(Error::StepSizeUnderflow { t, h }));
            }
            continue;
        }
        let t_new = if (1.0 - (t + h)).abs() < 1e-12 { 1.0 } else { t + h };
        match st.record(t_new, h, err, &next) {
            Ok(r) => sol.records.push(r),
            Err(e) => return (sol, Some(e)),
        }
        t = t_new;
        f = next;
        sol.times.push(t);
        sol.fields.push(f.clone());
        h *= factor;
    }
    let last = sol.final_record().residual;
    if last.total > config.residual_tol {
        sol.under_resolved = true;
        sol.warnings.push(format!(
            "closedness residual {:.3e} (spill {:.3e}) exceeds {:.1e}: cutoff too small for this data",
            last.total, last.spill, config.residual_tol
        ));
    }
    if let Some(p) = geometry.params() {
        let degenerate = geometry.degenerate_modes(sol.final_field());
        if !degenerate.is_empty() && p.is_exact() {
            sol.warnings.push(format!(
                "{} modes with vanishing leaf frequency use the unit fallback of U",
                degenerate.len()
            ));
        }
    }
    (sol, None)
}

fn check_preconditions<T: Real>(geometry: &Geometry<T>, dim: Dim, cutoff: usize) -> Result<()> {
    if geometry.dim() != dim {
        return Err(Error::DimensionMismatch(format!(
            "path lives on {dim}, geometry on {}",
            geometry.dim()
        )));
    }
    if cutoff == 0 {
        return Err(Error::InvalidArgument("cutoff must be positive".into()));
    }
    if let Geometry::Torus3(p) = geometry {
        require_dense(p, cutoff)?;
    }
    Ok(())
}

/// Integrates along an arbitrary path.
pub fn integrate_path<T: Real>(
    geometry: &Geometry<T>,
    path: &HomotopyPath<T>,
    config: &SolverConfig,
) -> Result<HomotopySolution<T>> {
    match integrate_path_partial(geometry, path, config) {
        (sol, None) => Ok(sol),
        (_, Some(e)) => Err(e),
    }
}

/// Integrates `nu(., t) = phi(t) mu` with `phi` chosen by `config.path`.
pub fn integrate_homotopy<T: Real>(
    geometry: &Geometry<T>,
    mu: &BeltramiField<T>,
    config: &SolverConfig,
) -> Result<HomotopySolution<T>> {
    integrate_path(geometry, &HomotopyPath::scaled(mu, config.path), config)
}

/// Same as [`integrate_homotopy`] on the 2-torus, where `U` is the global Beurling-type
/// multiplier `(n1 - i n2) / (n1 + i n2)`.
pub fn torus2_solve<T: Real>(mu: &BeltramiField<T>, config: &SolverConfig) -> Result<HomotopySolution<T>> {
    if mu.dim() != Dim::Torus2 {
        return Err(Error::DimensionMismatch("torus2_solve needs a 2-torus field".into()));
    }
    integrate_homotopy(&Geometry::Torus2, mu, config)
}
