//! Pointwise sup/min estimates of `|a(x)|`.

use num_complex::Complex;

use super::{Dim, FourierField, GridTransform};
use crate::scalar::Real;

/// Location and value of a pointwise extremum of `|a|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupPoint<T> {
    pub value: T,
    pub x: [T; 3],
}

/// Grid extrema of `|a|` on a `size^rank` uniform grid: (max, min).
pub fn grid_extrema<T: Real>(a: &FourierField<T>, size: usize) -> (SupPoint<T>, SupPoint<T>) {
    let mut grid = GridTransform::new(a.dim(), size.max(2 * a.cutoff() + 1));
    let vals = grid.synthesize(a);
    let mut hi = (T::neg_infinity(), 0usize);
    let mut lo = (T::infinity(), 0usize);
    for (i, v) in vals.iter().enumerate() {
        let r = v.norm();
        if r > hi.0 {
            hi = (r, i);
        }
        if r < lo.0 {
            lo = (r, i);
        }
    }
    (
        SupPoint { value: hi.0, x: grid.point(hi.1) },
        SupPoint { value: lo.0, x: grid.point(lo.1) },
    )
}

/// Max of `|a|` over the uniform grid with `oversample * (2M + 1)` points per axis.
///
/// This is a lower bound for the true supremum.
pub fn sup_estimate<T: Real>(a: &FourierField<T>, oversample: usize) -> T {
    let size = oversample.max(1) * (2 * a.cutoff() + 1);
    grid_extrema(a, size).0.value
}

/// Grid maximum followed by Newton ascent of `|a|^2` from the best grid points.
///
/// Still a lower bound, but typically accurate to round-off for smooth fields.
pub fn sup_refined<T: Real>(a: &FourierField<T>, oversample: usize) -> SupPoint<T> {
    let size = oversample.max(1) * (2 * a.cutoff() + 1);
    let mut grid = GridTransform::new(a.dim(), size);
    let vals = grid.synthesize(a);
    let mut order: Vec<usize> = (0..vals.len()).collect();
    let starts = 8.min(vals.len());
    order.select_nth_unstable_by(starts - 1, |&i, &j| {
        vals[j].norm_sqr().partial_cmp(&vals[i].norm_sqr()).unwrap()
    });
    let mut best = SupPoint { value: T::zero(), x: [T::zero(); 3] };
    for &i in &order[..starts] {
        let x0 = grid.point(i);
        let v0 = vals[i].norm();
        if v0 > best.value {
            best = SupPoint { value: v0, x: x0 };
        }
        let p = ascend(a, x0);
        if p.value > best.value {
            best = p;
        }
    }
    best
}

/// Value, gradient and Hessian of `g = |a|^2` at `x`.
fn jet<T: Real>(a: &FourierField<T>, x: [T; 3]) -> (T, [T; 3], [[T; 3]; 3]) {
    let rank = a.dim().rank();
    let zero = Complex::new(T::zero(), T::zero());
    let mut v = zero;
    let mut d = [zero; 3];
    let mut dd = [[zero; 3]; 3];
    for (n, c) in a.iter() {
        if c == zero {
            continue;
        }
        let nn = [T::from_int(n.p), T::from_int(n.m), T::from_int(n.k)];
        let mut phase = T::zero();
        for r in 0..rank {
            phase += nn[r] * x[r];
        }
        let e = c * Complex::new(phase.cos(), phase.sin());
        v += e;
        for r in 0..rank {
            d[r] += e * Complex::new(T::zero(), nn[r]);
            for s in 0..rank {
                dd[r][s] -= e * (nn[r] * nn[s]);
            }
        }
    }
    let two = T::lit(2.0);
    let g = v.norm_sqr();
    let mut grad = [T::zero(); 3];
    let mut hess = [[T::zero(); 3]; 3];
    for r in 0..rank {
        grad[r] = two * (v.conj() * d[r]).re;
        for s in 0..rank {
            hess[r][s] = two * (d[s].conj() * d[r] + v.conj() * dd[r][s]).re;
        }
    }
    (g, grad, hess)
}

fn ascend<T: Real>(a: &FourierField<T>, mut x: [T; 3]) -> SupPoint<T> {
    let rank = a.dim().rank();
    let (mut g, mut grad, mut hess) = jet(a, x);
    // Step caps keep the iteration inside the basin of the starting grid point.
    let cap = T::PI() / T::from_usize(2 * a.cutoff().max(1) + 1).unwrap();
    for _ in 0..40 {
        let mut step = newton_step(&grad, &hess, rank).unwrap_or([T::zero(); 3]);
        let ascent = (0..rank).fold(T::zero(), |acc, r| acc + step[r] * grad[r]);
        if !(ascent > T::zero()) {
            // Not a local-max model: fall back to a scaled gradient step.
            let gn = (0..rank).fold(T::zero(), |acc, r| acc + grad[r] * grad[r]).sqrt();
            if gn == T::zero() {
                break;
            }
            for r in 0..rank {
                step[r] = grad[r] / gn * cap * T::lit(0.25);
            }
        }
        let len = (0..rank).fold(T::zero(), |acc, r| acc + step[r] * step[r]).sqrt();
        if len > cap {
            for s in step.iter_mut().take(rank) {
                *s = *s * cap / len;
            }
        }
        let mut accepted = false;
        let mut scale = T::one();
        for _ in 0..20 {
            let mut y = x;
            for r in 0..rank {
                y[r] += step[r] * scale;
            }
            let (gy, grad_y, hess_y) = jet(a, y);
            if gy >= g {
                let tiny = (0..rank).all(|r| (step[r] * scale).abs() < T::epsilon() * T::lit(16.0));
                x = y;
                g = gy;
                grad = grad_y;
                hess = hess_y;
                accepted = !tiny;
                break;
            }
            scale = scale * T::lit(0.5);
        }
        if !accepted {
            break;
        }
    }
    if a.dim() == Dim::Torus2 {
        x[2] = T::zero();
    }
    SupPoint { value: g.sqrt(), x }
}

/// Solves `H s = -grad` by Gaussian elimination with partial pivoting.
fn newton_step<T: Real>(grad: &[T; 3], hess: &[[T; 3]; 3], rank: usize) -> Option<[T; 3]> {
    let mut m = [[T::zero(); 4]; 3];
    for r in 0..rank {
        for s in 0..rank {
            m[r][s] = hess[r][s];
        }
        m[r][3] = -grad[r];
    }
    for col in 0..rank {
        let piv = (col..rank).max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())?;
        if m[piv][col].abs() <= T::epsilon() {
            return None;
        }
        m.swap(col, piv);
        for row in col + 1..rank {
            let f = m[row][col] / m[col][col];
            for c in col..4 {
                let v = m[col][c];
                m[row][c] -= f * v;
            }
        }
    }
    let mut out = [T::zero(); 3];
    for row in (0..rank).rev() {
        let mut s = m[row][3];
        for c in row + 1..rank {
            s -= m[row][c] * out[c];
        }
        out[row] = s / m[row][row];
    }
    Some(out)
}
