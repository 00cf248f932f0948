//! Truncated Fourier series on the 3-torus `R^3 / 2 pi Z^3` and on the 2-torus.
//!
//! Coefficients are stored densely on the cube `max |N_i| <= M`, ordered lexicographically
//! in `(p, m, k)`. Inner products and norms use the normalized Haar measure, so every
//! exponential `e^{i(N, x)}` has unit `H^0` norm.

mod grid;
mod json;
mod random;
mod sup;

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub use grid::{fft_friendly, GridTransform, ProductPlan};
pub use json::FieldDocument;
pub use random::{random_beltrami, random_field, RippleSpec};
pub use sup::{grid_extrema, sup_estimate, sup_refined, SupPoint};

/// Which torus a field lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dim {
    Torus3,
    Torus2,
}

impl Dim {
    pub fn rank(self) -> usize {
        match self {
            Dim::Torus3 => 3,
            Dim::Torus2 => 2,
        }
    }

    pub fn from_rank(rank: usize) -> Option<Self> {
        match rank {
            3 => Some(Dim::Torus3),
            2 => Some(Dim::Torus2),
            _ => None,
        }
    }
}

impl fmt::Display for Dim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dim::Torus3 => "torus3",
            Dim::Torus2 => "torus2",
        })
    }
}

/// Integer frequency `N = (p, m, k)`. On the 2-torus `(n1, n2)` is stored as `(p, m)` with `k = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct ModeIndex {
    pub p: i64,
    pub m: i64,
    pub k: i64,
}

impl ModeIndex {
    pub const ZERO: ModeIndex = ModeIndex { p: 0, m: 0, k: 0 };

    pub const fn new(p: i64, m: i64, k: i64) -> Self {
        Self { p, m, k }
    }

    pub const fn t2(n1: i64, n2: i64) -> Self {
        Self { p: n1, m: n2, k: 0 }
    }

    /// `|p| + |m| + |k|`, the size used by every norm and small-denominator bound.
    pub fn l1(&self) -> i64 {
        self.p.abs() + self.m.abs() + self.k.abs()
    }

    pub fn linf(&self) -> i64 {
        self.p.abs().max(self.m.abs()).max(self.k.abs())
    }

    pub fn is_zero(&self) -> bool {
        *self == Self::ZERO
    }

    /// Component along `axis` (1-based).
    pub fn component(&self, axis: usize) -> i64 {
        match axis {
            1 => self.p,
            2 => self.m,
            3 => self.k,
            _ => panic!("axis out of range: {axis}"),
        }
    }

    /// `N` or `-N`, whichever has its first nonzero component positive.
    pub fn sign_normalized(self) -> Self {
        let first = [self.p, self.m, self.k].into_iter().find(|&c| c != 0);
        match first {
            Some(c) if c < 0 => -self,
            _ => self,
        }
    }

    pub fn to_array(self) -> [i64; 3] {
        [self.p, self.m, self.k]
    }
}

impl Neg for ModeIndex {
    type Output = ModeIndex;
    fn neg(self) -> ModeIndex {
        ModeIndex::new(-self.p, -self.m, -self.k)
    }
}

impl Add for ModeIndex {
    type Output = ModeIndex;
    fn add(self, o: ModeIndex) -> ModeIndex {
        ModeIndex::new(self.p + o.p, self.m + o.m, self.k + o.k)
    }
}

impl Sub for ModeIndex {
    type Output = ModeIndex;
    fn sub(self, o: ModeIndex) -> ModeIndex {
        ModeIndex::new(self.p - o.p, self.m - o.m, self.k - o.k)
    }
}

impl fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.p, self.m, self.k)
    }
}

/// Weighted `l^2` norms on coefficient sequences.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormSpec {
    /// `(sum (1 + |N|^2)^j |c_N|^2)^{1/2}`.
    Sobolev(u32),
    /// `(sum e^{|N| r} |c_N|^2)^{1/2}`.
    Analytic(f64),
}

impl NormSpec {
    /// Squared weight of mode `n`.
    pub fn weight<T: Real>(&self, n: ModeIndex) -> T {
        let a = T::from_int(n.l1());
        match *self {
            NormSpec::Sobolev(j) => (T::one() + a * a).powi(j as i32),
            NormSpec::Analytic(r) => (a * T::lit(r)).exp(),
        }
    }
}

/// Complex-valued truncated Fourier series.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierField<T> {
    dim: Dim,
    cutoff: usize,
    coeffs: Vec<Complex<T>>,
}

/// Type alias for the double precision field used throughout the CLI.
pub type Field = FourierField<f64>;

#[inline]
fn czero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

impl<T: Real> FourierField<T> {
    pub fn zeros(dim: Dim, cutoff: usize) -> Self {
        let side = 2 * cutoff + 1;
        Self {
            dim,
            cutoff,
            coeffs: vec![czero(); side.pow(dim.rank() as u32)],
        }
    }

    pub fn constant(dim: Dim, cutoff: usize, c: Complex<T>) -> Self {
        let mut f = Self::zeros(dim, cutoff);
        f.set(ModeIndex::ZERO, c);
        f
    }

    /// `amp * e^{i(N, x)}`. Panics if `N` is outside the cutoff.
    pub fn single_mode(dim: Dim, cutoff: usize, n: ModeIndex, amp: Complex<T>) -> Self {
        let mut f = Self::zeros(dim, cutoff);
        assert!(f.contains(n), "mode {n} outside cutoff {cutoff}");
        f.set(n, amp);
        f
    }

    /// Builds a field from a coefficient function evaluated on every stored mode.
    pub fn from_fn(dim: Dim, cutoff: usize, mut g: impl FnMut(ModeIndex) -> Complex<T>) -> Self {
        let mut f = Self::zeros(dim, cutoff);
        for (slot, n) in mode_list(dim, cutoff).enumerate() {
            f.coeffs[slot] = g(n);
        }
        f
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.coeffs
    }

    /// Stored modes in lexicographic order (the storage order).
    pub fn modes(&self) -> impl Iterator<Item = ModeIndex> {
        mode_list(self.dim, self.cutoff)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ModeIndex, Complex<T>)> + '_ {
        self.modes().zip(self.coeffs.iter().copied())
    }

    pub fn contains(&self, n: ModeIndex) -> bool {
        let m = self.cutoff as i64;
        let ok = n.p.abs() <= m && n.m.abs() <= m;
        match self.dim {
            Dim::Torus3 => ok && n.k.abs() <= m,
            Dim::Torus2 => ok && n.k == 0,
        }
    }

    /// Storage slot of `n`, if stored.
    pub fn index_of(&self, n: ModeIndex) -> Option<usize> {
        if !self.contains(n) {
            return None;
        }
        let m = self.cutoff as i64;
        let side = 2 * m + 1;
        let (ip, im, ik) = (n.p + m, n.m + m, n.k + m);
        Some(match self.dim {
            Dim::Torus3 => ((ip * side + im) * side + ik) as usize,
            Dim::Torus2 => (ip * side + im) as usize,
        })
    }

    /// Coefficient at `n`; zero for unstored modes.
    pub fn get(&self, n: ModeIndex) -> Complex<T> {
        self.index_of(n).map_or_else(czero, |i| self.coeffs[i])
    }

    /// Sets the coefficient at `n`. Panics if `n` is not stored.
    pub fn set(&mut self, n: ModeIndex, c: Complex<T>) {
        let i = self
            .index_of(n)
            .unwrap_or_else(|| panic!("mode {n} outside cutoff {}", self.cutoff));
        self.coeffs[i] = c;
    }

    pub fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(format!("{} vs {}", self.dim, other.dim)));
        }
        if self.cutoff != other.cutoff {
            return Err(Error::CutoffMismatch {
                left: self.cutoff,
                right: other.cutoff,
            });
        }
        Ok(())
    }

    /// Same function, stored with a different cutoff (modes beyond the new cutoff are dropped).
    pub fn resized(&self, cutoff: usize) -> Self {
        let mut out = Self::zeros(self.dim, cutoff);
        for (n, c) in self.iter() {
            if let Some(i) = out.index_of(n) {
                out.coeffs[i] = c;
            }
        }
        out
    }

    /// `H^0` norm of the part with some `|N_i| > cutoff`.
    pub fn out_of_band_norm(&self, cutoff: usize) -> T {
        let m = cutoff as i64;
        self.iter()
            .filter(|(n, _)| n.linf() > m)
            .fold(T::zero(), |acc, (_, c)| acc + c.norm_sqr())
            .sqrt()
    }

    /// Coefficients `conj(c_{-N})`, i.e. the pointwise complex conjugate.
    pub fn conj(&self) -> Self {
        let mut out = self.clone();
        let len = self.coeffs.len();
        // Storage is symmetric: slot of -N is len - 1 - slot of N.
        for (i, c) in out.coeffs.iter_mut().enumerate() {
            *c = self.coeffs[len - 1 - i].conj();
        }
        out
    }

    /// Coefficient at `N = 0`.
    pub fn average(&self) -> Complex<T> {
        self.get(ModeIndex::ZERO)
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        self.map(|_, c| c * s)
    }

    pub fn scale_real(&self, s: T) -> Self {
        self.map(|_, c| c * s)
    }

    /// Applies `g(N, c_N)` to every coefficient.
    pub fn map(&self, mut g: impl FnMut(ModeIndex, Complex<T>) -> Complex<T>) -> Self {
        let mut out = self.clone();
        for (slot, n) in mode_list(self.dim, self.cutoff).enumerate() {
            out.coeffs[slot] = g(n, self.coeffs[slot]);
        }
        out
    }

    /// `self + s * other`, in place. Panics on incompatible fields.
    pub fn axpy(&mut self, s: Complex<T>, other: &Self) {
        assert_eq!(self.coeffs.len(), other.coeffs.len(), "incompatible fields");
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += *b * s;
        }
    }

    /// `<self, other> = sum c_N conj(d_N)`.
    pub fn inner(&self, other: &Self) -> Complex<T> {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .fold(czero(), |acc, (a, b)| acc + *a * b.conj())
    }

    pub fn norm(&self, spec: NormSpec) -> T {
        self.iter()
            .fold(T::zero(), |acc, (n, c)| acc + spec.weight::<T>(n) * c.norm_sqr())
            .sqrt()
    }

    pub fn norm_h0(&self) -> T {
        self.norm(NormSpec::Sobolev(0))
    }

    /// Largest coefficient modulus.
    pub fn max_abs_coeff(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |acc, c| acc.max(c.norm()))
    }

    /// `sum_N |c_N|`, an upper bound for the sup norm.
    pub fn l1_coeff_sum(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |acc, c| acc + c.norm())
    }

    /// `d/dx_axis`, axis 1-based.
    pub fn partial_derivative(&self, axis: usize) -> Result<Self> {
        if axis == 0 || axis > self.dim.rank() {
            return Err(Error::DimensionMismatch(format!(
                "axis {axis} invalid on {}",
                self.dim
            )));
        }
        Ok(self.map(|n, c| c * Complex::new(T::zero(), T::from_int(n.component(axis)))))
    }

    /// `sum c_N e^{i(N, x)}` summed in storage order. Extra coordinates are ignored.
    pub fn evaluate(&self, x: &[T]) -> Complex<T> {
        assert!(x.len() >= self.dim.rank(), "point has too few coordinates");
        let mut acc = czero();
        for (n, c) in self.iter() {
            let mut phase = T::from_int(n.p) * x[0] + T::from_int(n.m) * x[1];
            if self.dim == Dim::Torus3 {
                phase += T::from_int(n.k) * x[2];
            }
            acc += c * Complex::new(phase.cos(), phase.sin());
        }
        acc
    }

    /// Pointwise product, computed exactly (cutoff `2M` intermediate) and truncated back to `M`.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        Ok(self.multiply_with_loss(other)?.0)
    }

    /// As [`Self::multiply`], also returning the `H^0` norm of the discarded out-of-band part.
    pub fn multiply_with_loss(&self, other: &Self) -> Result<(Self, T)> {
        let full = self.multiply_full(other)?;
        let loss = full.out_of_band_norm(self.cutoff);
        Ok((full.resized(self.cutoff), loss))
    }

    /// Exact pointwise product with cutoff `2M`.
    pub fn multiply_full(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut plan = ProductPlan::new(self.dim, self.cutoff, true);
        Ok(plan.product_full(self, other))
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Converts the coefficient type.
    pub fn cast<S: Real>(&self) -> FourierField<S> {
        FourierField {
            dim: self.dim,
            cutoff: self.cutoff,
            coeffs: self
                .coeffs
                .iter()
                .map(|c| Complex::new(S::lit(c.re.to_f64_lossy()), S::lit(c.im.to_f64_lossy())))
                .collect(),
        }
    }
}

/// Stored modes for `(dim, cutoff)` in lexicographic order.
pub fn mode_list(dim: Dim, cutoff: usize) -> impl Iterator<Item = ModeIndex> {
    let m = cutoff as i64;
    let side = 2 * m + 1;
    let (total, rank3) = match dim {
        Dim::Torus3 => (side * side * side, true),
        Dim::Torus2 => (side * side, false),
    };
    (0..total).map(move |i| {
        if rank3 {
            ModeIndex::new(i / (side * side) - m, (i / side) % side - m, i % side - m)
        } else {
            ModeIndex::t2(i / side - m, i % side - m)
        }
    })
}

/// `min_c ||f - c g|| / ||f||` in `H^0`: distance between the complex lines through `f` and `g`.
pub fn projective_distance<T: Real>(f: &FourierField<T>, g: &FourierField<T>) -> T {
    let nf = f.norm_h0();
    if nf == T::zero() {
        return T::zero();
    }
    let gg = g.inner(g).re;
    if gg == T::zero() {
        return T::one();
    }
    let c = f.inner(g) / gg;
    let mut r = f.clone();
    r.axpy(-c, g);
    r.norm_h0() / nf
}

impl<T: Real> Add for &FourierField<T> {
    type Output = FourierField<T>;
    fn add(self, o: &FourierField<T>) -> FourierField<T> {
        let mut out = self.clone();
        out.axpy(Complex::new(T::one(), T::zero()), o);
        out
    }
}

impl<T: Real> Sub for &FourierField<T> {
    type Output = FourierField<T>;
    fn sub(self, o: &FourierField<T>) -> FourierField<T> {
        let mut out = self.clone();
        out.axpy(Complex::new(-T::one(), T::zero()), o);
        out
    }
}

impl<T: Real> Neg for &FourierField<T> {
    type Output = FourierField<T>;
    fn neg(self) -> FourierField<T> {
        self.scale_real(-T::one())
    }
}

impl<T: Real> Mul<Complex<T>> for &FourierField<T> {
    type Output = FourierField<T>;
    fn mul(self, s: Complex<T>) -> FourierField<T> {
        self.scale(s)
    }
}

#[cfg(test)]
mod tests;
