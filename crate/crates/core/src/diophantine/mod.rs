//! Finite-scan evidence about small denominators `d(N) = |p + k a1| + |m + k a2|`.
//!
//! Nothing here proves a Diophantine property: reports state the scan bounds and label
//! every classification as evidence. Scans run in `f64` with exact rational arithmetic
//! for exact slopes.

pub mod contfrac;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::foliation::{small_denominator_candidates, FoliationParams};
use crate::spectral::ModeIndex;
use contfrac::{certified_quotients, convergents, log2_abs, semiconvergent_endpoints, RealInput};

/// Verdicts of [`classify`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    DiophantineEvidence,
    WeaklyDiophantineEvidence,
    LiouvilleEvidence,
    RationalDegenerate,
    Inconclusive,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::DiophantineEvidence => "diophantine-evidence",
            Classification::WeaklyDiophantineEvidence => "weakly-diophantine-evidence",
            Classification::LiouvilleEvidence => "liouville-evidence",
            Classification::RationalDegenerate => "rational-degenerate",
            Classification::Inconclusive => "inconclusive",
        }
    }
}

/// Tunables of the classifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Exponents tried, increasing.
    pub s_grid: Vec<f64>,
    /// Largest stable exponent still read as Diophantine.
    pub s_max: f64,
    /// An exponent is stable when the full-scan minimum of `d |N|^s` is at least
    /// `kappa` times the minimum over the `sqrt(M)` prefix scan.
    pub kappa: f64,
    /// Tolerance for the weakly Diophantine proxy `L >= 1 - eps_w`.
    pub eps_w: f64,
    pub min_records: usize,
}

impl Default for Thresholds {
    fn default() -> Self {
        let mut s_grid: Vec<f64> = (0..=10).map(|i| 1.0 + 0.1 * i as f64).collect();
        s_grid.extend([2.5, 3.0, 4.0, 5.0, 6.0, 8.0]);
        Self {
            s_grid,
            s_max: 2.0,
            kappa: 0.5,
            eps_w: 0.05,
            min_records: 3,
        }
    }
}

/// A strict running minimum of `d(N)` in order of increasing `|N|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordMinimum {
    #[serde(rename = "N")]
    pub n: [i64; 3],
    #[serde(rename = "absN")]
    pub abs_n: i64,
    pub d: f64,
}

/// `min d(N) |N|^s` over the full scan and over the prefix scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedMinimum {
    pub s: f64,
    pub min: f64,
    pub argmin: [i64; 3],
    pub prefix_min: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiophantineReport {
    pub cutoff: usize,
    pub prefix_cutoff: usize,
    pub exact_arithmetic: bool,
    pub records: Vec<RecordMinimum>,
    pub weighted_minima: Vec<WeightedMinimum>,
    /// Smallest grid exponent that is stable between the prefix and full scans.
    pub stable_exponent: Option<f64>,
    /// Negated slope of the least-squares fit of `log d` against `log |N|` over the records.
    pub regression_exponent: Option<f64>,
    /// `min d(N)^{1/|N|}` over the whole scan (never above 1).
    pub liminf_proxy: f64,
    /// Same minimum restricted to `|N| > prefix_cutoff`.
    pub tail_liminf_proxy: f64,
    pub exact_zero: Option<[i64; 3]>,
    pub classification: Classification,
}

struct Sample {
    n: ModeIndex,
    d: f64,
    zero: bool,
}

fn denominators(params: &FoliationParams<f64>, cutoff: i64) -> Vec<Sample> {
    small_denominator_candidates(params, cutoff)
        .into_iter()
        .map(|n| match params.exact_leaf_freq(n) {
            Some((p, q)) => {
                let d = p.abs() + q.abs();
                Sample {
                    n,
                    d: d.to_f64().unwrap_or(0.0),
                    zero: d.is_zero(),
                }
            }
            None => {
                let (p, q) = params.leaf_freq(n);
                let d = p.abs() + q.abs();
                Sample { n, d, zero: d == 0.0 }
            }
        })
        .collect()
}

fn isqrt(n: usize) -> usize {
    let mut r = (n as f64).sqrt() as usize;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Scans every `N != 0` with `max |N_i| <= cutoff` for small denominators.
///
/// Only `O(cutoff)` modes are visited: for fixed `k` the minimizing `p` and `m` are the
/// floor or ceiling of `-k a1` and `-k a2`, and every other mode has `d(N) >= 1`, which the
/// unit modes `(1, 0, 0)`, `(0, 1, 0)` already attain. The classification field is left
/// as `Inconclusive`; see [`analyze`].
pub fn scan_denominators(params: &FoliationParams<f64>, cutoff: usize, s_grid: &[f64]) -> Result<DiophantineReport> {
    if cutoff < 2 {
        return Err(Error::InvalidArgument("scan needs cutoff >= 2".into()));
    }
    let prefix = isqrt(cutoff).max(1);
    let mut samples = denominators(params, cutoff as i64);
    samples.iter_mut().for_each(|s| s.n = s.n.sign_normalized());
    samples.sort_by(|a, b| {
        (a.n.l1(), a.d, a.n)
            .partial_cmp(&(b.n.l1(), b.d, b.n))
            .unwrap()
    });
    samples.dedup_by(|a, b| a.n == b.n);

    let mut records = Vec::new();
    let mut best = f64::INFINITY;
    for s in &samples {
        if s.d < best {
            best = s.d;
            records.push(RecordMinimum {
                n: s.n.to_array(),
                abs_n: s.n.l1(),
                d: best,
            });
        }
    }
    let exact_zero = samples.iter().find(|s| s.zero).map(|s| s.n.to_array());

    let prefix_samples = denominators(params, prefix as i64);
    let weighted_minima = s_grid
        .iter()
        .map(|&s| {
            let w = |x: &Sample| if x.zero { 0.0 } else { x.d * (x.n.l1() as f64).powf(s) };
            let (min, argmin) = samples
                .iter()
                .map(|x| (w(x), x.n))
                .fold((f64::INFINITY, ModeIndex::ZERO), |acc, v| if v.0 < acc.0 { v } else { acc });
            let prefix_min = prefix_samples.iter().map(w).fold(f64::INFINITY, f64::min);
            WeightedMinimum {
                s,
                min,
                argmin: argmin.to_array(),
                prefix_min,
            }
        })
        .collect();

    let root = |x: &Sample| if x.zero { 0.0 } else { x.d.powf(1.0 / x.n.l1() as f64) };
    let liminf_proxy = samples.iter().map(root).fold(1.0, f64::min);
    let tail_liminf_proxy = samples
        .iter()
        .filter(|x| x.n.l1() > prefix as i64)
        .map(root)
        .fold(1.0, f64::min);

    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.d > 0.0 && r.abs_n >= 2)
        .map(|r| ((r.abs_n as f64).ln(), r.d.ln()))
        .collect();
    let regression_exponent = (pts.len() >= 2).then(|| {
        let n = pts.len() as f64;
        let (mx, my) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0 / n, a.1 + p.1 / n));
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        -sxy / sxx
    });

    Ok(DiophantineReport {
        cutoff,
        prefix_cutoff: prefix,
        exact_arithmetic: params.is_exact(),
        records,
        weighted_minima,
        stable_exponent: None,
        regression_exponent,
        liminf_proxy,
        tail_liminf_proxy,
        exact_zero,
        classification: Classification::Inconclusive,
    })
}

/// Smallest grid exponent `s` with `min_full d|N|^s >= kappa * min_prefix d|N|^s`.
pub fn stable_exponent(report: &DiophantineReport, kappa: f64) -> Option<f64> {
    report
        .weighted_minima
        .iter()
        .find(|w| w.min > 0.0 && w.min >= kappa * w.prefix_min)
        .map(|w| w.s)
}

/// Reads a scan report as evidence for one of the slope classes.
pub fn classify(report: &DiophantineReport, th: &Thresholds) -> Classification {
    if report.exact_zero.is_some() {
        return Classification::RationalDegenerate;
    }
    if report.records.len() < th.min_records {
        return Classification::Inconclusive;
    }
    match stable_exponent(report, th.kappa) {
        Some(s) if s <= th.s_max => Classification::DiophantineEvidence,
        _ if report.tail_liminf_proxy >= 1.0 - th.eps_w => Classification::WeaklyDiophantineEvidence,
        _ => Classification::LiouvilleEvidence,
    }
}

/// Scan plus classification.
pub fn analyze(params: &FoliationParams<f64>, cutoff: usize, th: &Thresholds) -> Result<DiophantineReport> {
    let mut rep = scan_denominators(params, cutoff, &th.s_grid)?;
    rep.stable_exponent = stable_exponent(&rep, th.kappa);
    rep.classification = classify(&rep, th);
    Ok(rep)
}

/// An integer combination `c1 a1 + c2 a2` whose one-slope scan reads as Diophantine.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupElementEvidence {
    pub c1: i64,
    pub c2: i64,
    pub value: f64,
    pub stable_exponent: Option<f64>,
    /// Always true: the search is bounded to `|c_i| <= bound` and uses float scans.
    pub heuristic: bool,
}

/// Searches `|c_i| <= bound` (smallest `|c1| + |c2|` first) for a group element with
/// Diophantine evidence.
pub fn group_element_search(
    params: &FoliationParams<f64>,
    cutoff: usize,
    bound: i64,
    th: &Thresholds,
) -> Result<Option<GroupElementEvidence>> {
    let mut combos: Vec<(i64, i64)> = (-bound..=bound)
        .flat_map(|c1| (-bound..=bound).map(move |c2| (c1, c2)))
        .filter(|&combo| combo > (0, 0))
        .collect();
    combos.sort_by_key(|&(c1, c2)| (c1.abs() + c2.abs(), c1, c2));
    for (c1, c2) in combos {
        let exact = match (&params.exact_a1, &params.exact_a2) {
            (Some(r1), Some(r2)) => Some(r1 * BigInt::from(c1) + r2 * BigInt::from(c2)),
            _ => None,
        };
        let value = c1 as f64 * params.a1 + c2 as f64 * params.a2;
        let single = FoliationParams {
            a1: value,
            a2: 0.0,
            exact_a2: exact.as_ref().map(|_| BigRational::zero()),
            exact_a1: exact,
        };
        let rep = analyze(&single, cutoff, th)?;
        if rep.classification == Classification::DiophantineEvidence {
            return Ok(Some(GroupElementEvidence {
                c1,
                c2,
                value,
                stable_exponent: rep.stable_exponent,
                heuristic: true,
            }));
        }
    }
    Ok(None)
}

/// A mode with an exceptionally small `|lambda_N|`, possibly far beyond `i64`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiouvilleMode {
    #[serde(rename = "N")]
    pub n: [i128; 3],
    #[serde(rename = "absN")]
    pub abs_n: f64,
    /// `log2(1 / |lambda_N|)`.
    pub log2_inv_lambda: f64,
    /// The target exponent this mode was selected for.
    pub target_s: f64,
    /// `log(1/|lambda_N|) / log |N|`.
    pub achieved_exponent: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LiouvilleModes {
    pub modes: Vec<LiouvilleMode>,
    pub warnings: Vec<String>,
}

/// `(P, Q)` of a wide mode, exactly.
fn exact_freq(a1: &RealInput, a2: &RealInput, n: [i128; 3]) -> (BigRational, BigRational) {
    let k = BigInt::from(n[2]);
    (
        BigRational::from_integer(n[0].into()) + a1.center() * &k,
        BigRational::from_integer(n[1].into()) + a2.center() * &k,
    )
}

fn round_big(r: &BigRational) -> BigInt {
    r.round().to_integer()
}

/// Modes `N_j = (-p, -m, q)` built from continued-fraction convergents `p/q` of `a1` (and of
/// `a2`), with `|lambda_{N_j}|^{-1} > |N_j|^{s_j}` for the `j`-th target. Modes are distinct,
/// have `k != 0`, and are sorted by `|N|`. Targets with no qualifying mode with `k <= max_k`
/// are skipped with a warning.
pub fn find_liouville_modes(
    params: &FoliationParams<f64>,
    s_targets: &[f64],
    max_k: u128,
) -> LiouvilleModes {
    let slope = |exact: &Option<BigRational>, v: f64| match exact {
        Some(r) => RealInput::Exact(r.clone()),
        None => RealInput::from_f64(v),
    };
    let a1 = slope(&params.exact_a1, params.a1);
    let a2 = slope(&params.exact_a2, params.a2);
    let max_q = BigInt::from(max_k);
    let mut out = LiouvilleModes::default();

    let mut denominators: Vec<BigInt> = Vec::new();
    for a in [&a1, &a2] {
        if a.center().is_integer() {
            continue;
        }
        for c in convergents(&certified_quotients(a, 4096)) {
            if c.q > max_q {
                break;
            }
            if !denominators.contains(&c.q) {
                denominators.push(c.q);
            }
        }
    }
    denominators.sort();

    let radius = |a: &RealInput| match a {
        RealInput::Exact(_) => BigRational::zero(),
        RealInput::Interval { radius, .. } => radius.clone(),
    };
    let (r1, r2) = (radius(&a1), radius(&a2));
    let mut candidates = Vec::new();
    for q in denominators {
        let Some(k) = q.to_i128() else { continue };
        let p = round_big(&(a1.center() * &q));
        let m = round_big(&(a2.center() * &q));
        let (Some(p), Some(m)) = (p.to_i128(), m.to_i128()) else { continue };
        let n = [-p, -m, k];
        let (pp, qq) = exact_freq(&a1, &a2, n);
        if pp.is_zero() && qq.is_zero() {
            if a1.is_exact() && a2.is_exact() {
                out.warnings.push(format!(
                    "lambda vanishes exactly at N = ({}, {}, {}); the slope is rational at this scale",
                    n[0], n[1], n[2]
                ));
            }
            continue;
        }
        // For float slopes the true frequencies are only known up to q * radius.
        let slack = (&r1 + &r2) * BigRational::from_integer(q.clone());
        let size = pp.abs() + qq.abs();
        if !slack.is_zero() && size <= slack * BigRational::from_integer(BigInt::from(8)) {
            continue;
        }
        // |lambda| = sqrt(P^2 + Q^2) / 2
        let sq = &pp * &pp + &qq * &qq;
        let log2_lambda = 0.5 * log2_abs(&sq) - 1.0;
        let abs_n = (p.unsigned_abs() + m.unsigned_abs() + k.unsigned_abs()) as f64;
        candidates.push((n, abs_n, -log2_lambda));
    }
    candidates.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());

    let mut start = 0;
    for &s in s_targets {
        let hit = candidates[start.min(candidates.len())..]
            .iter()
            .position(|c| c.2 > s * c.1.log2());
        match hit {
            Some(off) => {
                let (n, abs_n, l2) = candidates[start + off];
                out.modes.push(LiouvilleMode {
                    n,
                    abs_n,
                    log2_inv_lambda: l2,
                    target_s: s,
                    achieved_exponent: l2 / abs_n.log2(),
                });
                start += off + 1;
            }
            None => out.warnings.push(format!(
                "no mode with 0 < k <= {max_k} satisfies 1/|lambda_N| > |N|^{s}"
            )),
        }
    }
    out
}

/// Outcome of [`check_diophantine_number`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiophantineNumberCheck {
    pub holds: bool,
    /// The pair `(m, k)` minimizing `|alpha - m/k| k^{s+1} / C`, as decimal strings.
    pub worst_m: String,
    pub worst_k: String,
    /// `log2(|alpha - m/k| k^{s+1} / C)` at the worst pair (`-inf` for an exact hit).
    pub log2_margin: f64,
    /// Whether the decisive comparisons were carried out in exact arithmetic.
    pub exact_comparison: bool,
    /// Whether every checked denominator lies within the certified part of the expansion.
    pub certified: bool,
}

/// Checks `|alpha - m/k| > C / |k|^{s+1}` for all `1 <= k <= max_k`.
///
/// A smallest violating `k` is always a best approximation, so it suffices to check the
/// convergents and the semiconvergents. Along a run of semiconvergents the quantity
/// `|k alpha - m| k^s` is log-concave in the run index, so the run endpoints suffice too.
pub fn check_diophantine_number(alpha: &RealInput, c: f64, s: f64, max_k: u128) -> Result<DiophantineNumberCheck> {
    if !(c > 0.0) || !(s > 1.0) || max_k < 1 {
        return Err(Error::InvalidArgument("need C > 0, s > 1, K >= 1".into()));
    }
    let max_q = BigInt::from(max_k);
    let quotients = certified_quotients(alpha, 4096);
    let conv = convergents(&quotients);
    let last_q = conv.last().map(|c| c.q.clone()).unwrap_or_else(BigInt::one);
    let exhausted = match alpha {
        RealInput::Exact(_) => true,
        RealInput::Interval { .. } => false,
    };
    let certified = exhausted || last_q > max_q;

    let mut pairs: Vec<(BigInt, BigInt)> = Vec::new();
    let x = alpha.center();
    for k in 1..=(max_k.min(64) as i64) {
        let kx = x * BigInt::from(k);
        for m in [kx.floor().to_integer(), kx.ceil().to_integer()] {
            pairs.push((m, BigInt::from(k)));
        }
    }
    for cv in conv.iter().chain(semiconvergent_endpoints(&quotients, &max_q).iter()) {
        if cv.q >= BigInt::one() && cv.q <= max_q {
            pairs.push((cv.p.clone(), cv.q.clone()));
        }
    }

    let integer_s = s.fract() == 0.0 && s <= 64.0;
    let exact_alpha = alpha.is_exact();
    let c_exact = BigRational::from_float(c).expect("finite C");
    let mut worst: Option<(f64, BigInt, BigInt)> = None;
    let mut holds = true;
    for (m, k) in pairs {
        let err = (x * &k - BigRational::from_integer(m.clone())).abs();
        let log2_margin = if err.is_zero() {
            f64::NEG_INFINITY
        } else {
            log2_abs(&err) + s * log2_abs(&BigRational::from_integer(k.clone())) - c.log2()
        };
        let violated = if err.is_zero() {
            true
        } else if exact_alpha && integer_s {
            let lhs = err * BigRational::from_integer(num_traits::pow(k.clone(), s as usize));
            lhs <= c_exact
        } else {
            log2_margin <= 0.0
        };
        holds &= !violated;
        if worst.as_ref().map_or(true, |w| log2_margin < w.0) {
            worst = Some((log2_margin, m, k));
        }
    }
    let (log2_margin, m, k) = worst.expect("at least k = 1 is checked");
    Ok(DiophantineNumberCheck {
        holds,
        worst_m: m.to_string(),
        worst_k: k.to_string(),
        log2_margin,
        exact_comparison: exact_alpha && integer_s,
        certified,
    })
}
