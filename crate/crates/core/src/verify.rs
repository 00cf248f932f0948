//! The invariant battery run by `folitor verify`: operator identities, the resolvent bound,
//! oracle cross-validation, constant-coefficient closed forms and counterexample duality.

use std::str::FromStr;

use num_complex::Complex64 as C;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diophantine::find_liouville_modes;
use crate::error::{Error, Result};
use crate::foliation::{FoliationParams, Geometry, MultiplierSymbol, SymbolTag};
use crate::homotopy::{
    closedness_residual, integrate_homotopy, kernel_oracle, resolvent_bound_probe, BeltramiField, SolverConfig,
};
use crate::metric::{counterexample_family, obstruction_detect, Verdict};
use crate::spectral::{projective_distance, random_beltrami, random_field, Dim, Field, FourierField, GridTransform, NormSpec, RippleSpec};
use crate::Slope;

/// Deliberate corruptions used to check that the battery catches them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fault {
    /// Replace the `U` symbol by its complex conjugate.
    CorruptU,
}

impl FromStr for Fault {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "corrupt-u" => Ok(Fault::CorruptU),
            _ => Err(Error::InvalidArgument(format!("unknown fault '{s}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyConfig {
    pub geometry: Geometry<f64>,
    pub cutoff: usize,
    pub seed: u64,
    /// Random fields per identity check.
    pub fields: usize,
    /// Random probes per resolvent-bound sample.
    pub probe_trials: usize,
    pub fault: Option<Fault>,
}

impl VerifyConfig {
    pub fn new(geometry: Geometry<f64>, cutoff: usize, seed: u64) -> Self {
        Self {
            geometry,
            cutoff,
            seed,
            fields: 20,
            probe_trials: 8,
            fault: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Worst observed value of the checked quantity.
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub cutoff: usize,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

impl VerifyReport {
    pub fn failures(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect()
    }
}

pub const UNITARITY: &str = "unitarity";
pub const PARSEVAL: &str = "parseval";
pub const U_INTERTWINING: &str = "u-intertwining identity";
pub const RESOLVENT_BOUND: &str = "resolvent bound";
pub const ORACLE: &str = "oracle cross-validation";
pub const CONSTANT_MU: &str = "constant-mu closed form";
pub const DUALITY: &str = "counterexample duality";

fn check(name: &str, value: f64, tolerance: f64, detail: String) -> CheckResult {
    CheckResult {
        name: name.to_string(),
        passed: value <= tolerance,
        value,
        tolerance,
        detail,
    }
}

fn failed(name: &str, tolerance: f64, err: Error) -> CheckResult {
    CheckResult {
        name: name.to_string(),
        passed: false,
        value: f64::INFINITY,
        tolerance,
        detail: err.to_string(),
    }
}

fn u_symbol(geometry: &Geometry<f64>, fault: Option<Fault>) -> MultiplierSymbol<f64> {
    match fault {
        None => MultiplierSymbol::of(geometry, SymbolTag::U),
        Some(Fault::CorruptU) => {
            let g = geometry.clone();
            MultiplierSymbol::custom(move |n| g.symbol(SymbolTag::U, n).conj())
        }
    }
}

fn rel(a: f64, scale: f64) -> f64 {
    a / scale.max(f64::MIN_POSITIVE)
}

fn random_fields(cfg: &VerifyConfig, rng: &mut ChaCha8Rng) -> Vec<Field> {
    (0..cfg.fields)
        .map(|i| random_field(cfg.geometry.dim(), cfg.cutoff, 0.25 * (i % 3) as f64, rng))
        .collect()
}

fn unitarity(cfg: &VerifyConfig, rng: &mut ChaCha8Rng) -> CheckResult {
    let u = u_symbol(&cfg.geometry, cfg.fault);
    let mut worst: f64 = 0.0;
    for a in random_fields(cfg, rng) {
        let ua = u.apply(&a);
        for j in 0..=2 {
            let s = NormSpec::Sobolev(j);
            worst = worst.max(rel((ua.norm(s) - a.norm(s)).abs(), a.norm(s)));
        }
    }
    check(UNITARITY, worst, 1e-11, format!("{} fields in H^0, H^1, H^2", cfg.fields))
}

fn parseval(cfg: &VerifyConfig, rng: &mut ChaCha8Rng) -> CheckResult {
    let dim = cfg.geometry.dim();
    let mut grid = GridTransform::<f64>::new(dim, 2 * cfg.cutoff + 1);
    let mut worst: f64 = 0.0;
    for a in random_fields(cfg, rng) {
        let vals = grid.synthesize(&a);
        let mean = vals.iter().map(|v| v.norm_sqr()).sum::<f64>() / vals.len() as f64;
        let coef = a.norm_h0().powi(2);
        worst = worst.max(rel((mean - coef).abs(), coef));
    }
    check(PARSEVAL, worst, 1e-11, format!("{} fields", cfg.fields))
}

fn intertwining(cfg: &VerifyConfig, rng: &mut ChaCha8Rng) -> CheckResult {
    let u = u_symbol(&cfg.geometry, cfg.fault);
    let g = &cfg.geometry;
    let mut run = || -> Result<f64> {
        let mut worst: f64 = 0.0;
        for a in random_fields(cfg, rng) {
            let dz = g.apply(SymbolTag::Dz, &a)?;
            let left = u.apply(&g.apply(SymbolTag::Dzbar, &a)?);
            let right = g.apply(SymbolTag::Dzbar, &u.apply(&a))?;
            let scale = dz.norm_h0();
            let mut d1 = left;
            d1.axpy(C::new(-1.0, 0.0), &dz);
            let mut d2 = right;
            d2.axpy(C::new(-1.0, 0.0), &dz);
            worst = worst.max(rel(d1.norm_h0(), scale)).max(rel(d2.norm_h0(), scale));
        }
        Ok(worst)
    };
    match run() {
        Ok(w) => check(U_INTERTWINING, w, 1e-11, "U D_zbar = D_zbar U = D_z".into()),
        Err(e) => failed(U_INTERTWINING, 1e-11, e),
    }
}

fn ripple(mean_max: f64) -> RippleSpec {
    RippleSpec {
        mean_max,
        ..RippleSpec::default()
    }
}

fn resolvent_bound(cfg: &VerifyConfig, j: u32, rng: &mut ChaCha8Rng) -> CheckResult {
    let name = format!("{RESOLVENT_BOUND} j={j}");
    let run = |rng: &mut ChaCha8Rng| -> Result<(usize, f64)> {
        let mut violations = 0;
        let mut worst: f64 = 0.0;
        for _ in 0..5 {
            let mu: Field = random_beltrami(cfg.geometry.dim(), cfg.cutoff, &ripple(0.5), rng);
            let nu = BeltramiField::new(mu)?;
            let rep = resolvent_bound_probe(&cfg.geometry, &nu, j, cfg.probe_trials, rng)?;
            violations += rep.violations;
            worst = worst.max(rep.estimate / rep.bound);
        }
        Ok((violations, worst))
    };
    match run(rng) {
        Ok((v, w)) => CheckResult {
            name,
            passed: v == 0,
            value: v as f64,
            tolerance: 0.0,
            detail: format!("5 samples, largest estimate / bound = {w:.6}"),
        },
        Err(e) => failed(&name, 0.0, e),
    }
}

fn solve(geometry: &Geometry<f64>, mu: &BeltramiField<f64>) -> Result<Field> {
    Ok(integrate_homotopy(geometry, mu, &SolverConfig::default())?.final_field().clone())
}

fn oracle(cfg: &VerifyConfig, rng: &mut ChaCha8Rng) -> CheckResult {
    let mut run = || -> Result<(f64, f64)> {
        let mut dist: f64 = 0.0;
        let mut resid: f64 = 0.0;
        for _ in 0..2 {
            let mu: Field = random_beltrami(cfg.geometry.dim(), cfg.cutoff, &ripple(0.35), rng);
            let b = BeltramiField::new(mu)?;
            let f = solve(&cfg.geometry, &b)?;
            let k = kernel_oracle(&cfg.geometry, &b, cfg.cutoff)?;
            dist = dist.max(projective_distance(&f, &k.field));
            resid = resid.max(closedness_residual(&cfg.geometry, b.mu(), &f)?.total);
        }
        Ok((dist, resid))
    };
    match run() {
        Ok((d, r)) => {
            let mut c = check(ORACLE, d, 1e-6, format!("projective distance; closedness residual {r:.3e}"));
            c.passed &= r <= 1e-6;
            c
        }
        Err(e) => failed(ORACLE, 1e-6, e),
    }
}

fn constant_mu(cfg: &VerifyConfig) -> CheckResult {
    let mut geoms = vec![Geometry::Torus2];
    if matches!(cfg.geometry, Geometry::Torus3(_)) {
        geoms.insert(0, cfg.geometry.clone());
    }
    let cs = [C::new(0.2, 0.0), C::new(0.5, 0.0), C::new(0.5, 0.3).scale(0.5 / C::new(0.5, 0.3).norm())];
    let run = || -> Result<f64> {
        let mut worst: f64 = 0.0;
        for g in &geoms {
            for &c in &cs {
                let mu = FourierField::constant(g.dim(), cfg.cutoff, c);
                let f = solve(g, &BeltramiField::new(mu)?)?;
                let want = FourierField::constant(g.dim(), cfg.cutoff, (C::new(1.0, 0.0) - c).inv());
                let mut d = f;
                d.axpy(C::new(-1.0, 0.0), &want);
                worst = worst.max(d.max_abs_coeff());
            }
        }
        Ok(worst)
    };
    let dims: Vec<&str> = geoms.iter().map(|g| if g.dim() == Dim::Torus2 { "torus2" } else { "torus3" }).collect();
    match run() {
        Ok(w) => check(CONSTANT_MU, w, 1e-8, format!("f = 1/(1-c) on {}", dims.join(", "))),
        Err(e) => failed(CONSTANT_MU, 1e-8, e),
    }
}

fn duality() -> CheckResult {
    let run = || -> Result<(f64, bool)> {
        let params = FoliationParams::from_slopes(&Slope::liouville(6)?, &Slope::integer(0));
        let modes: Vec<[i128; 3]> = find_liouville_modes(&params, &[2.0, 3.0, 4.0], u128::MAX)
            .modes
            .iter()
            .map(|m| m.n)
            .collect();
        let mut worst: f64 = 0.0;
        let mut verdicts = true;
        for t in [0.1, 0.0, -0.3] {
            let fam = counterexample_family(&params, &modes, t)?;
            let rep = obstruction_detect(&fam.geometry, &fam.at(t, 1), &fam.abstract_modes(), Some(t))?;
            for h in &rep.forced {
                worst = worst.max((h.abs - t.abs()).abs());
            }
            let want = if t == 0.0 { Verdict::UnobstructedTrivial } else { Verdict::Obstructed };
            verdicts &= rep.verdict == want;
        }
        Ok((worst, verdicts))
    };
    match run() {
        Ok((w, v)) => {
            let mut c = check(DUALITY, w, 1e-10, format!("forced |h_N| = |t|; verdicts {}", if v { "as expected" } else { "wrong" }));
            c.passed &= v;
            c
        }
        Err(e) => failed(DUALITY, 1e-10, e),
    }
}

/// Runs every check. Each check draws from its own generator seeded from `config.seed`, so
/// the result does not depend on scheduling.
pub fn run_battery(config: &VerifyConfig) -> Result<VerifyReport> {
    if config.cutoff < 2 {
        return Err(Error::InvalidArgument("verify needs cutoff >= 2".into()));
    }
    type Job<'a> = Box<dyn Fn(&mut ChaCha8Rng) -> CheckResult + Send + Sync + 'a>;
    let jobs: Vec<Job> = vec![
        Box::new(|r| unitarity(config, r)),
        Box::new(|r| parseval(config, r)),
        Box::new(|r| intertwining(config, r)),
        Box::new(|r| resolvent_bound(config, 0, r)),
        Box::new(|r| resolvent_bound(config, 1, r)),
        Box::new(|r| oracle(config, r)),
        Box::new(|_| constant_mu(config)),
        Box::new(|_| duality()),
    ];
    let checks: Vec<CheckResult> = jobs
        .par_iter()
        .enumerate()
        .map(|(i, job)| job(&mut ChaCha8Rng::seed_from_u64(config.seed.wrapping_mul(0x9e37_79b9).wrapping_add(i as u64))))
        .collect();
    let passed = checks.iter().all(|c| c.passed);
    Ok(VerifyReport {
        cutoff: config.cutoff,
        seed: config.seed,
        checks,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t3() -> Geometry<f64> {
        Geometry::Torus3(FoliationParams::new(std::f64::consts::SQRT_2, 3f64.sqrt()))
    }

    #[test]
    fn default_battery_passes() {
        let rep = run_battery(&VerifyConfig::new(t3(), 4, 7)).unwrap();
        assert!(rep.passed, "{:#?}", rep.checks);
        assert_eq!(rep.checks.len(), 8);
    }

    #[test]
    fn torus2_battery_passes() {
        let rep = run_battery(&VerifyConfig::new(Geometry::Torus2, 4, 7)).unwrap();
        assert!(rep.passed, "{:#?}", rep.checks);
        let c = rep.checks.iter().find(|c| c.name == CONSTANT_MU).unwrap();
        assert!(c.detail.contains("torus2"));
    }

    #[test]
    fn corrupted_u_is_caught_by_the_intertwining_check() {
        let mut cfg = VerifyConfig::new(t3(), 3, 7);
        cfg.fault = Some("corrupt-u".parse().unwrap());
        let rep = run_battery(&cfg).unwrap();
        assert!(!rep.passed);
        assert!(rep.failures().contains(&U_INTERTWINING));
    }

    #[test]
    fn battery_is_deterministic() {
        let cfg = VerifyConfig::new(t3(), 3, 11);
        let a = serde_json::to_string(&run_battery(&cfg).unwrap()).unwrap();
        let b = serde_json::to_string(&run_battery(&cfg).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn small_cutoff_is_rejected() {
        assert!(run_battery(&VerifyConfig::new(t3(), 1, 7)).is_err());
    }
}
