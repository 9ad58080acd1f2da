//! Rank-4 tensors as matrices on packed symmetric components.

use crate::linalg::CMatrix;
use crate::real::{creal as re, Real, C};
use crate::tensorfield::sym_pairs;

/// `ns x d²` isometric packing `P`: full matrix (row-major) to packed
/// symmetric components. `Pᵀ` embeds back; `PᵀP` is the symmetrizer.
pub fn sym_pack<T: Real>(d: usize) -> CMatrix<T> {
    let pairs = sym_pairs(d);
    let r2 = T::one() / T::lit(2.0).sqrt();
    let mut p = CMatrix::zeros(pairs.len(), d * d);
    for (row, &(a, b)) in pairs.iter().enumerate() {
        if a == b {
            p[(row, a * d + a)] = re(T::one());
        } else {
            p[(row, a * d + b)] = re(r2);
            p[(row, b * d + a)] = re(r2);
        }
    }
    p
}

/// Projection onto multiples of the identity, on packed components.
pub fn lambda_h<T: Real>(d: usize) -> CMatrix<T> {
    let ns = d * (d + 1) / 2;
    let w = T::one() / T::count(d);
    CMatrix::from_fn(ns, ns, |r, c| if r < d && c < d { re(w) } else { re(T::zero()) })
}

/// Projection onto trace-free symmetric matrices, on packed components.
pub fn lambda_s<T: Real>(d: usize) -> CMatrix<T> {
    let ns = d * (d + 1) / 2;
    &CMatrix::identity(ns) - &lambda_h(d)
}

/// `d κ Λ_h + 2 μ Λ_s`: isotropic stiffness with bulk modulus `κ`, shear `μ`.
pub fn isotropic_stiffness<T: Real>(d: usize, bulk: C<T>, shear: C<T>) -> CMatrix<T> {
    let h = lambda_h::<T>(d).scale(bulk * T::count(d));
    let s = lambda_s::<T>(d).scale(shear * T::lit(2.0));
    &h + &s
}

/// Lifts a packed operator to full `d x d` matrices: `Pᵀ C P`.
///
/// The result annihilates antisymmetric matrices.
pub fn lift_to_full<T: Real>(d: usize, packed: &CMatrix<T>) -> CMatrix<T> {
    let p = sym_pack::<T>(d);
    &(&p.transpose() * packed) * &p
}

/// `M ↦ tr(M) I` on full row-major `d x d` matrices.
pub fn identity_dyad_full<T: Real>(d: usize) -> CMatrix<T> {
    let mut m = CMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            m[(i * d + i, j * d + j)] = re(T::one());
        }
    }
    m
}

/// Projection onto antisymmetric parts of full matrices, `I - PᵀP`.
pub fn antisym_full<T: Real>(d: usize) -> CMatrix<T> {
    let p = sym_pack::<T>(d);
    &CMatrix::identity(d * d) - &(&p.transpose() * &p)
}

/// Packs a full symmetric matrix into Mandel components.
pub fn pack_sym<T: Real>(full: &CMatrix<T>) -> Vec<C<T>> {
    let d = full.rows();
    let flat: Vec<C<T>> = full.as_slice().to_vec();
    sym_pack::<T>(d).matvec(&flat)
}
