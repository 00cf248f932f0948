//! Direct computation of the kernel of `A = D_zbar - D_z P mu` on the truncated mode space.

use nalgebra::{Matrix3, SymmetricEigen};
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::BeltramiField;
use crate::error::{Error, Result};
use crate::foliation::{require_dense, Geometry, SymbolTag};
use crate::linalg::BandMatrix;
use crate::scalar::Real;
use crate::spectral::{mode_list, Dim, FourierField, ModeIndex};

const BLOCK: usize = 3;
const SWEEPS: usize = 8;
const AMBIGUITY_RATIO: f64 = 10.0;

/// Smallest right singular vector of the truncated closedness operator.
#[derive(Clone, Debug)]
pub struct KernelOracle<T: Real> {
    pub field: FourierField<T>,
    pub sigma_min: f64,
    pub sigma_next: f64,
    pub lower_bandwidth: usize,
    pub upper_bandwidth: usize,
    pub warning: Option<String>,
}

fn flat(n: ModeIndex, dim: Dim, side: i64) -> i64 {
    match dim {
        Dim::Torus3 => (n.p * side + n.m) * side + n.k,
        Dim::Torus2 => n.p * side + n.m,
    }
}

fn to_c<T: Real>(z: num_complex::Complex<T>) -> C {
    C::new(z.re.to_f64_lossy(), z.im.to_f64_lossy())
}

fn assemble<T: Real>(geometry: &Geometry<T>, mu: &FourierField<T>, cutoff: usize) -> BandMatrix<f64> {
    let dim = geometry.dim();
    let side = 2 * cutoff as i64 + 1;
    let reach = 2 * cutoff as i64;
    let support: Vec<(ModeIndex, C)> = mu
        .iter()
        .filter(|(d, c)| d.linf() <= reach && c.norm().to_f64_lossy() > 0.0)
        .map(|(d, c)| (d, to_c(c)))
        .collect();
    let mut kl = 0usize;
    let mut ku = 0usize;
    for (d, _) in &support {
        let off = flat(*d, dim, side);
        if off >= 0 {
            kl = kl.max(off as usize);
        } else {
            ku = ku.max((-off) as usize);
        }
    }
    let modes: Vec<ModeIndex> = mode_list(dim, cutoff).collect();
    let n = modes.len();
    let m = cutoff as i64;
    let mut a = BandMatrix::zeros(n, kl, ku);
    for (row, &nn) in modes.iter().enumerate() {
        a.add(row, row, to_c(geometry.symbol(SymbolTag::Dzbar, nn)));
        let lam = to_c(geometry.symbol(SymbolTag::Dz, nn));
        for (d, c) in &support {
            let src = nn - *d;
            if src.linf() > m {
                continue;
            }
            let col = (row as i64 - flat(*d, dim, side)) as usize;
            a.add(row, col, -lam * c);
        }
    }
    a
}

fn orthonormalize(block: &mut [Vec<C>]) {
    let norm = |v: &[C]| v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    for i in 0..block.len() {
        let (head, tail) = block.split_at_mut(i);
        let v = &mut tail[0];
        // Repeat until a pass keeps most of the vector; inverse iteration with a
        // near-singular pivot makes single-pass Gram-Schmidt lose orthogonality.
        for _ in 0..4 {
            let before = norm(v);
            for u in head.iter() {
                let proj: C = u.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
                for (x, y) in v.iter_mut().zip(u) {
                    *x -= proj * y;
                }
            }
            let after = norm(v);
            let inv = if after > 0.0 { 1.0 / after } else { 0.0 };
            v.iter_mut().for_each(|x| *x *= inv);
            if after > 0.5 * before {
                break;
            }
        }
    }
}

/// Kernel of the truncated operator `D_zbar - D_z P mu` on `max |N_i| <= cutoff`, by block
/// inverse iteration on `A^H A` followed by a Rayleigh-Ritz step.
pub fn kernel_oracle<T: Real>(
    geometry: &Geometry<T>,
    mu: &BeltramiField<T>,
    cutoff: usize,
) -> Result<KernelOracle<T>> {
    geometry.check_field(mu.mu())?;
    if cutoff == 0 {
        return Err(Error::InvalidArgument("cutoff must be positive".into()));
    }
    if let Geometry::Torus3(p) = geometry {
        require_dense(p, cutoff)?;
    }
    let dim = geometry.dim();
    let a = assemble(geometry, mu.mu(), cutoff);
    let n = a.n();
    let tiny = a.max_abs().max(1.0) * 1e-15;
    let (kl, ku) = a.bandwidths();
    let lu = a.clone().factor(tiny);

    let mut rng = ChaCha8Rng::seed_from_u64(0x6b65726e);
    let mut block: Vec<Vec<C>> = (0..BLOCK.min(n))
        .map(|_| (0..n).map(|_| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect())
        .collect();
    orthonormalize(&mut block);
    for _ in 0..SWEEPS {
        for v in block.iter_mut() {
            lu.solve_adjoint(v);
            lu.solve(v);
        }
        orthonormalize(&mut block);
    }
    let images: Vec<Vec<C>> = block.iter().map(|v| a.mul_vec(v)).collect();
    let b = block.len();
    let mut gram = Matrix3::<C>::zeros();
    for i in 0..b {
        for j in 0..b {
            gram[(i, j)] = images[i].iter().zip(&images[j]).map(|(x, y)| x.conj() * y).sum();
        }
    }
    for i in b..3 {
        gram[(i, i)] = C::new(f64::MAX, 0.0);
    }
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let sigma = |i: usize| eig.eigenvalues[order[i]].max(0.0).sqrt();
    let sigma_min = sigma(0);
    let sigma_next = if b > 1 { sigma(1) } else { f64::INFINITY };
    let coeffs = eig.eigenvectors.column(order[0]);
    let mut x = vec![C::new(0.0, 0.0); n];
    for (i, v) in block.iter().enumerate() {
        for (xk, vk) in x.iter_mut().zip(v) {
            *xk += coeffs[i] * vk;
        }
    }

    let zero_slot = n / 2;
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    let pivot = if x[zero_slot].norm() > 1e-8 * peak {
        x[zero_slot]
    } else {
        *x.iter().max_by(|p, q| p.norm().partial_cmp(&q.norm()).unwrap()).unwrap()
    };
    let mut field = FourierField::zeros(dim, cutoff);
    for (c, v) in field.coeffs_mut().iter_mut().zip(&x) {
        let w = v / pivot;
        *c = num_complex::Complex::new(T::lit(w.re), T::lit(w.im));
    }
    let warning = (sigma_next < AMBIGUITY_RATIO * sigma_min)
        .then(|| "kernel dimension ambiguous at this cutoff".to_string());
    Ok(KernelOracle {
        field,
        sigma_min,
        sigma_next,
        lower_bandwidth: kl,
        upper_bandwidth: ku,
        warning,
    })
}
