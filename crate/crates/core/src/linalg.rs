//! Complex banded LU with partial pivoting (LAPACK `gbtf2` storage layout).

use num_complex::Complex;
use num_traits::Zero;

use crate::scalar::Real;

/// Banded matrix with `kl` sub- and `ku` super-diagonals, stored column-major with
/// `ldab = 2 kl + ku + 1` rows; the extra `kl` rows hold fill-in produced by pivoting.
#[derive(Clone, Debug)]
pub struct BandMatrix<T> {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<Complex<T>>,
}

impl<T: Real> BandMatrix<T> {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            ldab,
            ab: vec![Complex::zero(); ldab * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `(kl, ku)`.
    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        j * self.ldab + self.kl + self.ku + i - j
    }

    /// Whether `(i, j)` lies inside the declared band.
    pub fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && i + self.ku >= j && j + self.kl >= i
    }

    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        if self.in_band(i, j) {
            self.ab[self.slot(i, j)]
        } else {
            Complex::zero()
        }
    }

    /// Adds `v` at `(i, j)`. Panics outside the band.
    pub fn add(&mut self, i: usize, j: usize, v: Complex<T>) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside the band");
        let s = self.slot(i, j);
        self.ab[s] += v;
    }

    pub fn mul_vec(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut y = vec![Complex::zero(); self.n];
        for j in 0..self.n {
            let lo = j.saturating_sub(self.ku);
            let hi = (j + self.kl).min(self.n - 1);
            for (i, yi) in y.iter_mut().enumerate().take(hi + 1).skip(lo) {
                *yi += self.ab[self.slot(i, j)] * x[j];
            }
        }
        y
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> T {
        self.ab.iter().fold(T::zero(), |m, v| m.max(v.norm()))
    }

    /// LU factorization with partial pivoting. Pivots smaller than `tiny` are replaced by
    /// `tiny` (counted in [`BandLu::perturbed_pivots`]), so exactly singular matrices still
    /// factor, which is what inverse iteration needs.
    pub fn factor(mut self, tiny: T) -> BandLu<T> {
        let n = self.n;
        let kv = self.kl + self.ku;
        let ldab = self.ldab;
        let mut ipiv = vec![0usize; n];
        let mut perturbed = 0;
        let mut ju = 0usize;
        for j in 0..n {
            let km = self.kl.min(n - 1 - j);
            let col = j * ldab + kv;
            let mut jp = 0;
            let mut best = T::zero();
            for r in 0..=km {
                let v = self.ab[col + r].norm();
                if v > best {
                    best = v;
                    jp = r;
                }
            }
            ipiv[j] = j + jp;
            if best <= tiny {
                perturbed += 1;
                jp = 0;
                ipiv[j] = j;
                let p = self.ab[col];
                self.ab[col] = if p.norm() > T::zero() {
                    p * (tiny / p.norm())
                } else {
                    Complex::new(tiny, T::zero())
                };
            }
            ju = ju.max((j + self.ku + jp).min(n - 1));
            if jp != 0 {
                for c in j..=ju {
                    let a = c * ldab + kv + j - c;
                    let b = a + jp;
                    self.ab.swap(a, b);
                }
            }
            let piv = self.ab[col];
            let inv = piv.inv();
            for r in 1..=km {
                self.ab[col + r] *= inv;
            }
            for c in j + 1..=ju {
                let base = c * ldab + kv + j - c;
                let u = self.ab[base];
                if u == Complex::zero() {
                    continue;
                }
                for r in 1..=km {
                    let l = self.ab[col + r];
                    self.ab[base + r] -= l * u;
                }
            }
        }
        BandLu {
            m: self,
            ipiv,
            perturbed_pivots: perturbed,
        }
    }
}

/// Factorization produced by [`BandMatrix::factor`].
#[derive(Clone, Debug)]
pub struct BandLu<T> {
    m: BandMatrix<T>,
    ipiv: Vec<usize>,
    pub perturbed_pivots: usize,
}

impl<T: Real> BandLu<T> {
    /// Solves `A x = b` in place.
    pub fn solve(&self, b: &mut [Complex<T>]) {
        let n = self.m.n;
        let (kl, kv, ldab) = (self.m.kl, self.m.kl + self.m.ku, self.m.ldab);
        for j in 0..n {
            let p = self.ipiv[j];
            if p != j {
                b.swap(j, p);
            }
            let km = kl.min(n - 1 - j);
            let bj = b[j];
            for r in 1..=km {
                b[j + r] -= self.m.ab[j * ldab + kv + r] * bj;
            }
        }
        for c in (0..n).rev() {
            let base = c * ldab + kv;
            b[c] /= self.m.ab[base];
            let xc = b[c];
            let lo = c.saturating_sub(kv);
            for i in lo..c {
                b[i] -= self.m.ab[base + i - c] * xc;
            }
        }
    }

    /// Solves `A^H x = b` in place.
    pub fn solve_adjoint(&self, b: &mut [Complex<T>]) {
        let n = self.m.n;
        let (kl, kv, ldab) = (self.m.kl, self.m.kl + self.m.ku, self.m.ldab);
        for i in 0..n {
            let base = i * ldab + kv;
            let lo = i.saturating_sub(kv);
            let mut s = b[i];
            for c in lo..i {
                s -= self.m.ab[base + c - i].conj() * b[c];
            }
            b[i] = s / self.m.ab[base].conj();
        }
        for j in (0..n).rev() {
            let km = kl.min(n - 1 - j);
            let mut s = b[j];
            for r in 1..=km {
                s -= self.m.ab[j * ldab + kv + r].conj() * b[j + r];
            }
            b[j] = s;
            let p = self.ipiv[j];
            if p != j {
                b.swap(j, p);
            }
        }
    }
}
