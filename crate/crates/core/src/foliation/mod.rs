//! Leafwise Cauchy-Riemann operators of the linear foliation `l(x) = a1 x1 + a2 x2 - x3`.
//!
//! On `e^{i(N, x)}`, `N = (p, m, k)`, with leaf frequencies `P = p + k a1`, `Q = m + k a2`:
//!
//! * `D_z` acts by `lambda_N = (i/2)(P - iQ)`,
//! * `D_zbar` acts by `lambda'_N = -conj(lambda_N) = (i/2)(P + iQ)`,
//! * `U` acts by `lambda_N / lambda'_N = (P - iQ) / (P + iQ)`, and by 1 where `lambda_N = 0`.
//!
//! On the 2-torus the same formulas hold with `P = n1`, `Q = n2`.

use std::sync::Arc;

use num_bigint::BigInt;
use num_complex::Complex;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::slope::Slope;
use crate::spectral::{Dim, FourierField, ModeIndex};

/// Slopes `(a1, a2)`, with exact rational values kept alongside when available.
#[derive(Clone, Debug, PartialEq)]
pub struct FoliationParams<T> {
    pub a1: T,
    pub a2: T,
    pub exact_a1: Option<BigRational>,
    pub exact_a2: Option<BigRational>,
}

impl<T: Real> FoliationParams<T> {
    pub fn new(a1: T, a2: T) -> Self {
        Self {
            a1,
            a2,
            exact_a1: None,
            exact_a2: None,
        }
    }

    pub fn from_slopes(a1: &Slope, a2: &Slope) -> Self {
        Self {
            a1: T::lit(a1.value),
            a2: T::lit(a2.value),
            exact_a1: a1.exact.clone(),
            exact_a2: a2.exact.clone(),
        }
    }

    /// Both slopes given as exact rationals.
    pub fn is_exact(&self) -> bool {
        self.exact_a1.is_some() && self.exact_a2.is_some()
    }

    /// Leaf frequencies `(P, Q)` of a physical mode, using exact arithmetic where possible.
    pub fn leaf_freq_wide(&self, p: i128, m: i128, k: i128) -> (T, T) {
        let one = |n: i128, a: T, exact: &Option<BigRational>| -> T {
            match exact {
                Some(r) => {
                    let v = BigRational::from_integer(BigInt::from(n)) + r * BigInt::from(k);
                    T::lit(v.to_f64().unwrap_or(f64::NAN))
                }
                None => T::lit(n as f64) + T::lit(k as f64) * a,
            }
        };
        (one(p, self.a1, &self.exact_a1), one(m, self.a2, &self.exact_a2))
    }

    pub fn leaf_freq(&self, n: ModeIndex) -> (T, T) {
        self.leaf_freq_wide(n.p as i128, n.m as i128, n.k as i128)
    }

    /// Exact `(P, Q)` when both slopes are exact.
    pub fn exact_leaf_freq(&self, n: ModeIndex) -> Option<(BigRational, BigRational)> {
        let (r1, r2) = (self.exact_a1.as_ref()?, self.exact_a2.as_ref()?);
        let k = BigInt::from(n.k);
        Some((
            BigRational::from_integer(BigInt::from(n.p)) + r1 * &k,
            BigRational::from_integer(BigInt::from(n.m)) + r2 * &k,
        ))
    }

    /// Whether `lambda_N` vanishes, decided exactly for exact slopes.
    pub fn lambda_vanishes(&self, n: ModeIndex) -> bool {
        match self.exact_leaf_freq(n) {
            Some((p, q)) => p.is_zero() && q.is_zero(),
            None => {
                let (p, q) = self.leaf_freq(n);
                p == T::zero() && q == T::zero()
            }
        }
    }
}

/// `lambda` from leaf frequencies.
#[inline]
pub fn lambda_from_freq<T: Real>(p: T, q: T) -> Complex<T> {
    let half = T::lit(0.5);
    Complex::new(q * half, p * half)
}

/// `lambda_N`, the `D_z` eigenvalue.
pub fn lambda_of<T: Real>(params: &FoliationParams<T>, n: ModeIndex) -> Complex<T> {
    let (p, q) = params.leaf_freq(n);
    lambda_from_freq(p, q)
}

/// `lambda'_N = -conj(lambda_N)`, the `D_zbar` eigenvalue.
pub fn lambda_prime_of<T: Real>(params: &FoliationParams<T>, n: ModeIndex) -> Complex<T> {
    -lambda_of(params, n).conj()
}

/// `U` eigenvalue from leaf frequencies; 1 where both vanish.
#[inline]
pub fn u_from_freq<T: Real>(p: T, q: T) -> Complex<T> {
    let s = p.abs().max(q.abs());
    if s == T::zero() {
        return Complex::new(T::one(), T::zero());
    }
    // Rescale first: leaf frequencies of huge modes can square to zero.
    let (p, q) = (p / s, q / s);
    let r2 = p * p + q * q;
    // (P - iQ) / (P + iQ) = (P - iQ)^2 / (P^2 + Q^2)
    Complex::new((p * p - q * q) / r2, -(T::lit(2.0) * p * q) / r2)
}

/// `1 / z` without squaring `|z|`, so tiny `z` do not underflow; zero maps to zero.
pub fn safe_inv<T: Real>(z: Complex<T>) -> Complex<T> {
    let s = z.re.abs().max(z.im.abs());
    if s == T::zero() {
        return z;
    }
    let w = z.unscale(s);
    w.conj().unscale(w.norm_sqr() * s)
}

/// Where the operators act: a foliated 3-torus, the 2-torus, or a lattice of 3-torus modes.
#[derive(Clone, Debug, PartialEq)]
pub enum Geometry<T> {
    Torus3(FoliationParams<T>),
    Torus2,
    /// Fields with abstract modes `n` standing for the physical modes `sum_j n_j G_j`.
    Lattice(LatticeGeometry<T>),
}

/// Embedding of abstract 3-index modes into the 3-torus lattice through up to three
/// generator modes. Physical components use `i128` since generators can be huge.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeGeometry<T> {
    pub params: FoliationParams<T>,
    pub generators: Vec<[i128; 3]>,
}

impl<T: Real> LatticeGeometry<T> {
    pub fn physical(&self, n: ModeIndex) -> [i128; 3] {
        let c = [n.p as i128, n.m as i128, n.k as i128];
        let mut out = [0i128; 3];
        for (j, g) in self.generators.iter().enumerate().take(3) {
            for r in 0..3 {
                out[r] += c[j] * g[r];
            }
        }
        out
    }
}

impl<T: Real> Geometry<T> {
    pub fn dim(&self) -> Dim {
        match self {
            Geometry::Torus2 => Dim::Torus2,
            _ => Dim::Torus3,
        }
    }

    pub fn params(&self) -> Option<&FoliationParams<T>> {
        match self {
            Geometry::Torus3(p) => Some(p),
            Geometry::Lattice(l) => Some(&l.params),
            Geometry::Torus2 => None,
        }
    }

    pub fn leaf_freq(&self, n: ModeIndex) -> (T, T) {
        match self {
            Geometry::Torus3(p) => p.leaf_freq(n),
            Geometry::Torus2 => (T::from_int(n.p), T::from_int(n.m)),
            Geometry::Lattice(l) => {
                let [p, m, k] = l.physical(n);
                l.params.leaf_freq_wide(p, m, k)
            }
        }
    }

    /// Physical `x3` frequency (zero on the 2-torus).
    pub fn k_freq(&self, n: ModeIndex) -> T {
        match self {
            Geometry::Torus3(_) => T::from_int(n.k),
            Geometry::Torus2 => T::zero(),
            Geometry::Lattice(l) => T::lit(l.physical(n)[2] as f64),
        }
    }

    pub fn lambda_vanishes(&self, n: ModeIndex) -> bool {
        match self {
            Geometry::Torus3(p) => p.lambda_vanishes(n),
            Geometry::Torus2 => n.p == 0 && n.m == 0,
            Geometry::Lattice(l) => {
                let [p, m, k] = l.physical(n);
                match (&l.params.exact_a1, &l.params.exact_a2) {
                    (Some(r1), Some(r2)) => {
                        let kk = BigInt::from(k);
                        (BigRational::from_integer(p.into()) + r1 * &kk).is_zero()
                            && (BigRational::from_integer(m.into()) + r2 * &kk).is_zero()
                    }
                    _ => {
                        let (pp, qq) = l.params.leaf_freq_wide(p, m, k);
                        pp == T::zero() && qq == T::zero()
                    }
                }
            }
        }
    }

    pub fn lambda(&self, n: ModeIndex) -> Complex<T> {
        let (p, q) = self.leaf_freq(n);
        lambda_from_freq(p, q)
    }

    pub fn symbol(&self, tag: SymbolTag, n: ModeIndex) -> Complex<T> {
        let zero = Complex::new(T::zero(), T::zero());
        let (p, q) = self.leaf_freq(n);
        let lam = lambda_from_freq(p, q);
        match tag {
            SymbolTag::Dz => lam,
            SymbolTag::Dzbar => -lam.conj(),
            SymbolTag::U => u_from_freq(p, q),
            SymbolTag::Uinv => u_from_freq(p, q).conj(),
            SymbolTag::Dzinv => {
                if lam == zero {
                    zero
                } else {
                    safe_inv(lam)
                }
            }
            SymbolTag::Ddx3 => Complex::new(T::zero(), self.k_freq(n)),
            SymbolTag::Custom => panic!("custom symbols carry their own function"),
        }
    }

    /// Symbol values for every stored mode of a `(dim, cutoff)` field, in storage order.
    pub fn table(&self, tag: SymbolTag, cutoff: usize) -> Vec<Complex<T>> {
        crate::spectral::mode_list(self.dim(), cutoff)
            .map(|n| self.symbol(tag, n))
            .collect()
    }

    pub fn check_field(&self, a: &FourierField<T>) -> Result<()> {
        if a.dim() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "operator on {} applied to a {} field",
                self.dim(),
                a.dim()
            )));
        }
        Ok(())
    }

    pub fn apply(&self, tag: SymbolTag, a: &FourierField<T>) -> Result<FourierField<T>> {
        self.check_field(a)?;
        Ok(a.map(|n, c| c * self.symbol(tag, n)))
    }

    /// `D_z^{-1}` on zero-average fields whose modes all have `lambda_N != 0`.
    pub fn apply_dz_inverse(&self, a: &FourierField<T>) -> Result<FourierField<T>> {
        self.check_field(a)?;
        let avg = a.average().norm().to_f64_lossy();
        if avg > 1e-12 {
            return Err(Error::NotInDomain { average: avg });
        }
        let zero = Complex::new(T::zero(), T::zero());
        for (n, c) in a.iter() {
            if !n.is_zero() && c != zero && self.lambda_vanishes(n) {
                return Err(Error::LeavesNotDense { p: n.p, m: n.m, k: n.k });
            }
        }
        Ok(a.map(|n, c| {
            if n.is_zero() {
                zero
            } else {
                c * self.symbol(SymbolTag::Dzinv, n)
            }
        }))
    }

    /// Nonzero modes of `a` other than `N = 0` on which `lambda_N = 0`, i.e. where `U`
    /// falls back to the arbitrary unit eigenvalue 1.
    pub fn degenerate_modes(&self, a: &FourierField<T>) -> Vec<ModeIndex> {
        let zero = Complex::new(T::zero(), T::zero());
        a.iter()
            .filter(|(n, c)| !n.is_zero() && *c != zero && self.lambda_vanishes(*n))
            .map(|(n, _)| n)
            .collect()
    }
}

/// Which diagonal operator a [`MultiplierSymbol`] represents.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymbolTag {
    Dz,
    Dzbar,
    U,
    Uinv,
    Dzinv,
    Ddx3,
    Custom,
}

/// A Fourier multiplier: a function of the mode, applied coefficientwise.
#[derive(Clone)]
pub struct MultiplierSymbol<T> {
    pub tag: SymbolTag,
    f: Arc<dyn Fn(ModeIndex) -> Complex<T> + Send + Sync>,
}

impl<T: Real> MultiplierSymbol<T> {
    pub fn of(geometry: &Geometry<T>, tag: SymbolTag) -> Self {
        assert!(tag != SymbolTag::Custom, "use MultiplierSymbol::custom");
        let g = geometry.clone();
        Self {
            tag,
            f: Arc::new(move |n| g.symbol(tag, n)),
        }
    }

    pub fn custom(f: impl Fn(ModeIndex) -> Complex<T> + Send + Sync + 'static) -> Self {
        Self {
            tag: SymbolTag::Custom,
            f: Arc::new(f),
        }
    }

    pub fn eval(&self, n: ModeIndex) -> Complex<T> {
        (self.f)(n)
    }

    pub fn apply(&self, a: &FourierField<T>) -> FourierField<T> {
        a.map(|n, c| c * self.eval(n))
    }

    pub fn table(&self, dim: Dim, cutoff: usize) -> Vec<Complex<T>> {
        crate::spectral::mode_list(dim, cutoff).map(|n| self.eval(n)).collect()
    }
}

impl<T> std::fmt::Debug for MultiplierSymbol<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MultiplierSymbol").field("tag", &self.tag).finish()
    }
}

/// Direction of [`apply_u`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

fn torus3<T: Real>(params: &FoliationParams<T>) -> Geometry<T> {
    Geometry::Torus3(params.clone())
}

pub fn apply_dz<T: Real>(params: &FoliationParams<T>, a: &FourierField<T>) -> Result<FourierField<T>> {
    torus3(params).apply(SymbolTag::Dz, a)
}

pub fn apply_dzbar<T: Real>(params: &FoliationParams<T>, a: &FourierField<T>) -> Result<FourierField<T>> {
    torus3(params).apply(SymbolTag::Dzbar, a)
}

pub fn apply_u<T: Real>(
    params: &FoliationParams<T>,
    a: &FourierField<T>,
    direction: Direction,
) -> Result<FourierField<T>> {
    let tag = match direction {
        Direction::Forward => SymbolTag::U,
        Direction::Inverse => SymbolTag::Uinv,
    };
    torus3(params).apply(tag, a)
}

pub fn apply_dz_inverse<T: Real>(params: &FoliationParams<T>, a: &FourierField<T>) -> Result<FourierField<T>> {
    torus3(params).apply_dz_inverse(a)
}

/// A mode with its `D_z` eigenvalue, as serialized in reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolRecord {
    #[serde(rename = "N")]
    pub n: [i64; 3],
    pub lambda: [f64; 2],
}

impl SymbolRecord {
    pub fn new<T: Real>(n: ModeIndex, lambda: Complex<T>) -> Self {
        Self {
            n: n.to_array(),
            lambda: [lambda.re.to_f64_lossy(), lambda.im.to_f64_lossy()],
        }
    }
}

/// Result of [`density_check`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub cutoff: usize,
    pub min_abs_lambda: f64,
    pub argmin: SymbolRecord,
    pub no_exact_zero: bool,
    /// True when zeros were decided with exact rational arithmetic.
    pub symbolic: bool,
}

/// Floor and ceiling of `-k a` clamped to `[-m, m]`: the only integers that can minimize
/// `|n + k a|` over `|n| <= m`.
fn nearest_candidates<T: Real>(k: i64, a: T, exact: &Option<BigRational>, m: i64) -> [i64; 2] {
    let (lo, hi) = match exact {
        Some(r) => {
            let x = -(r * BigInt::from(k));
            let fl = x.numer().div_floor(x.denom());
            let ce = -((-x.numer()).div_floor(x.denom()));
            (clamp_big(&fl, m), clamp_big(&ce, m))
        }
        None => {
            let x = -(T::from_int(k) * a);
            (clamp_f(x.floor(), m), clamp_f(x.ceil(), m))
        }
    };
    [lo, hi]
}

fn clamp_big(v: &BigInt, m: i64) -> i64 {
    if v > &BigInt::from(m) {
        m
    } else if v < &BigInt::from(-m) {
        -m
    } else {
        v.to_i64().unwrap()
    }
}

fn clamp_f<T: Real>(v: T, m: i64) -> i64 {
    let mf = T::from_int(m);
    if v > mf {
        m
    } else if v < -mf {
        -m
    } else {
        v.to_i64().unwrap()
    }
}

/// Candidate modes for the minimum of `|lambda_N|` (equivalently of `|P|` and `|Q|`
/// separately) over `0 < max |N_i| <= cutoff`: O(cutoff) modes instead of O(cutoff^3).
pub fn small_denominator_candidates<T: Real>(params: &FoliationParams<T>, cutoff: i64) -> Vec<ModeIndex> {
    let mut out = vec![
        ModeIndex::new(1, 0, 0),
        ModeIndex::new(-1, 0, 0),
        ModeIndex::new(0, 1, 0),
        ModeIndex::new(0, -1, 0),
    ];
    for k in (-cutoff..=cutoff).filter(|&k| k != 0) {
        let ps = nearest_candidates(k, params.a1, &params.exact_a1, cutoff);
        let ms = nearest_candidates(k, params.a2, &params.exact_a2, cutoff);
        for p in ps {
            for m in ms {
                let n = ModeIndex::new(p, m, k);
                if !out.contains(&n) {
                    out.push(n);
                }
            }
        }
    }
    out
}

/// Minimum of `|lambda_N|` over `0 < max |N_i| <= cutoff`, its argmin (smallest `|N|`,
/// sign-normalized) and whether an exact zero was found.
pub fn density_check<T: Real>(params: &FoliationParams<T>, cutoff: usize) -> Result<DensityReport> {
    if cutoff < 1 {
        return Err(Error::InvalidArgument("density check needs cutoff >= 1".into()));
    }
    let mut best: Option<(bool, f64, i64, ModeIndex)> = None;
    for n in small_denominator_candidates(params, cutoff as i64) {
        let zero = params.lambda_vanishes(n);
        let abs = if zero { 0.0 } else { lambda_of(params, n).norm().to_f64_lossy() };
        let n = n.sign_normalized();
        let key = (!zero, abs, n.l1(), n);
        let better = match &best {
            None => true,
            Some((bz, ba, bl, bn)) => {
                let cur = (!*bz, *ba, *bl, *bn);
                (key.0, key.1, key.2, key.3) < (cur.0, cur.1, cur.2, cur.3)
            }
        };
        if better {
            best = Some((zero, abs, n.l1(), n));
        }
    }
    let (zero, abs, _, n) = best.expect("candidate list is never empty");
    let lam = if zero {
        Complex::new(0.0, 0.0)
    } else {
        let l = lambda_of(params, n);
        Complex::new(l.re.to_f64_lossy(), l.im.to_f64_lossy())
    };
    Ok(DensityReport {
        cutoff,
        min_abs_lambda: abs,
        argmin: SymbolRecord::new(n, lam),
        no_exact_zero: !zero,
        symbolic: params.is_exact(),
    })
}

/// Refuses parameters whose leaves are not dense at the given cutoff.
pub fn require_dense<T: Real>(params: &FoliationParams<T>, cutoff: usize) -> Result<DensityReport> {
    let rep = density_check(params, cutoff)?;
    if !rep.no_exact_zero {
        let [p, m, k] = rep.argmin.n;
        return Err(Error::LeavesNotDense { p, m, k });
    }
    Ok(rep)
}
