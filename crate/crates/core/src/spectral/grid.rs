//! Uniform physical grids on the torus and the FFTs that move fields on and off them.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::{Dim, FourierField};
use crate::scalar::Real;

/// Smallest integer `>= n` whose prime factors are all in {2, 3, 5, 7}.
pub fn fft_friendly(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for f in [2, 3, 5, 7] {
            while r % f == 0 {
                r /= f;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

/// A `size^rank` uniform grid with points `x_j = 2 pi j / size`, plus cached FFT plans.
///
/// Grid values are stored row-major: the last axis (x3, or x2 on the 2-torus) is contiguous.
pub struct GridTransform<T: Real> {
    dim: Dim,
    size: usize,
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
    lane: Vec<Complex<T>>,
    scratch: Vec<Complex<T>>,
}

impl<T: Real> GridTransform<T> {
    pub fn new(dim: Dim, size: usize) -> Self {
        assert!(size >= 1);
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(size);
        let inv = planner.plan_fft_inverse(size);
        let scratch_len = fwd
            .get_inplace_scratch_len()
            .max(inv.get_inplace_scratch_len());
        Self {
            dim,
            size,
            fwd,
            inv,
            lane: vec![Complex::new(T::zero(), T::zero()); size],
            scratch: vec![Complex::new(T::zero(), T::zero()); scratch_len],
        }
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn len(&self) -> usize {
        self.size.pow(self.dim.rank() as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Physical coordinates of the grid point with flat index `idx` (unused axes are zero).
    pub fn point(&self, idx: usize) -> [T; 3] {
        let g = self.size;
        let h = T::lit(2.0) * T::PI() / T::from_usize(g).unwrap();
        let mut out = [T::zero(); 3];
        let rank = self.dim.rank();
        let mut rem = idx;
        for axis in (0..rank).rev() {
            out[axis] = T::from_usize(rem % g).unwrap() * h;
            rem /= g;
        }
        out
    }

    fn wrap(&self, n: i64) -> usize {
        n.rem_euclid(self.size as i64) as usize
    }

    /// Values of `field` at every grid point. Requires `size >= 2 * cutoff + 1`.
    pub fn synthesize(&mut self, field: &FourierField<T>) -> Vec<Complex<T>> {
        assert_eq!(field.dim(), self.dim, "grid/field dimension mismatch");
        let m = field.cutoff();
        assert!(self.size > 2 * m, "grid too coarse for the field cutoff");
        let mut buf = vec![Complex::new(T::zero(), T::zero()); self.len()];
        let g = self.size;
        for (mode, c) in field.iter() {
            let idx = match self.dim {
                Dim::Torus3 => (self.wrap(mode.p) * g + self.wrap(mode.m)) * g + self.wrap(mode.k),
                Dim::Torus2 => self.wrap(mode.p) * g + self.wrap(mode.m),
            };
            buf[idx] = c;
        }
        let rank = self.dim.rank();
        // Pass order: contiguous axis first, pruning lanes that are still identically zero.
        for axis in (0..rank).rev() {
            self.pass(&mut buf, axis, m, false);
        }
        buf
    }

    /// Fourier coefficients (cutoff `cutoff`) of grid values. Exact when the underlying
    /// function has no modes that alias into the band, i.e. max mode `<= size - cutoff - 1`.
    pub fn analyze(&mut self, mut values: Vec<Complex<T>>, cutoff: usize) -> FourierField<T> {
        assert_eq!(values.len(), self.len());
        assert!(self.size > 2 * cutoff, "grid too coarse for the requested cutoff");
        let rank = self.dim.rank();
        for axis in 0..rank {
            self.pass(&mut values, axis, cutoff, true);
        }
        let scale = T::one() / T::from_usize(self.len()).unwrap();
        let g = self.size;
        let mut out = FourierField::zeros(self.dim, cutoff);
        let modes: Vec<_> = out.modes().collect();
        for (slot, mode) in modes.into_iter().enumerate() {
            let idx = match self.dim {
                Dim::Torus3 => (self.wrap(mode.p) * g + self.wrap(mode.m)) * g + self.wrap(mode.k),
                Dim::Torus2 => self.wrap(mode.p) * g + self.wrap(mode.m),
            };
            out.coeffs_mut()[slot] = values[idx] * scale;
        }
        out
    }

    /// One 1-D transform pass along `axis` (0 = x1). Lanes whose fixed indices on the
    /// *other* still-spectral axes lie outside the band are skipped: for synthesis they
    /// are zero, for analysis their outputs are discarded.
    fn pass(&mut self, buf: &mut [Complex<T>], axis: usize, band: usize, forward: bool) {
        let g = self.size;
        let rank = self.dim.rank();
        let stride = g.pow((rank - 1 - axis) as u32);
        let in_band = |i: usize| i <= band || i + band >= g;
        // Synthesis runs the axes last-to-first and analysis first-to-last, so in both
        // directions the axes before `axis` are the ones currently in spectral form.
        let spectral_axis = |other: usize| other < axis;
        let fft = if forward { self.fwd.clone() } else { self.inv.clone() };
        let n_lanes = self.len() / g;
        for lane_id in 0..n_lanes {
            // Decompose lane id into the indices of the other axes.
            let outer = lane_id / stride;
            let inner = lane_id % stride;
            let base = outer * stride * g + inner;
            let mut skip = false;
            let mut rem = base;
            for other in (0..rank).rev() {
                let i = rem % g;
                rem /= g;
                if other != axis && spectral_axis(other) && !in_band(i) {
                    skip = true;
                    break;
                }
            }
            if skip {
                continue;
            }
            for j in 0..g {
                self.lane[j] = buf[base + j * stride];
            }
            fft.process_with_scratch(&mut self.lane, &mut self.scratch);
            for j in 0..g {
                buf[base + j * stride] = self.lane[j];
            }
        }
    }
}

/// Dealiased pointwise products of fields with a common cutoff `M`.
///
/// `full` plans use a `fft_friendly(4M + 1)` grid, so the whole product (modes up to `2M`)
/// is recovered exactly. Banded plans use `fft_friendly(3M + 1)`: only the coefficients with
/// modes `<= M` are exact, which is all the truncated solvers need.
pub struct ProductPlan<T: Real> {
    cutoff: usize,
    full: bool,
    grid: GridTransform<T>,
}

impl<T: Real> ProductPlan<T> {
    pub fn new(dim: Dim, cutoff: usize, full: bool) -> Self {
        let need = if full { 4 * cutoff + 1 } else { 3 * cutoff + 1 };
        Self {
            cutoff,
            full,
            grid: GridTransform::new(dim, fft_friendly(need)),
        }
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn grid(&mut self) -> &mut GridTransform<T> {
        &mut self.grid
    }

    /// Grid values of `a`, reusable as a fixed multiplier.
    pub fn values(&mut self, a: &FourierField<T>) -> Vec<Complex<T>> {
        debug_assert_eq!(a.cutoff(), self.cutoff);
        self.grid.synthesize(a)
    }

    /// In-band coefficients of `values * b`, where `values` came from [`Self::values`].
    pub fn multiply_values(&mut self, values: &[Complex<T>], b: &FourierField<T>) -> FourierField<T> {
        let mut vb = self.grid.synthesize(b);
        for (x, y) in vb.iter_mut().zip(values) {
            *x = *x * *y;
        }
        self.grid.analyze(vb, self.cutoff)
    }

    /// In-band product.
    pub fn product(&mut self, a: &FourierField<T>, b: &FourierField<T>) -> FourierField<T> {
        let va = self.grid.synthesize(a);
        self.multiply_values(&va, b)
    }

    /// Exact product with cutoff `2M`. Panics on banded plans.
    pub fn product_full(&mut self, a: &FourierField<T>, b: &FourierField<T>) -> FourierField<T> {
        assert!(self.full, "exact products need a full plan");
        let mut va = self.grid.synthesize(a);
        let vb = self.grid.synthesize(b);
        for (x, y) in va.iter_mut().zip(&vb) {
            *x = *x * *y;
        }
        self.grid.analyze(va, 2 * self.cutoff)
    }
}
