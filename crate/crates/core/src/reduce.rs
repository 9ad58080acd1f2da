//! Reductions with a fixed summation order, independent of thread count.

use rayon::prelude::*;

use crate::real::{czero, Real, C};

const CHUNK: usize = 4096;

/// `sum conj(x) y`, chunked so the result is bitwise reproducible.
pub(crate) fn det_dot<T: Real>(x: &[C<T>], y: &[C<T>]) -> C<T> {
    debug_assert_eq!(x.len(), y.len());
    let partial: Vec<C<T>> = x
        .par_chunks(CHUNK)
        .zip(y.par_chunks(CHUNK))
        .map(|(a, b)| {
            a.iter()
                .zip(b)
                .fold(czero(), |acc, (u, v)| acc + u.conj() * *v)
        })
        .collect();
    partial.into_iter().fold(czero(), |a, b| a + b)
}

pub(crate) fn det_norm_sqr<T: Real>(x: &[C<T>]) -> T {
    let partial: Vec<T> = x
        .par_chunks(CHUNK)
        .map(|a| a.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()))
        .collect();
    partial.into_iter().fold(T::zero(), |a, b| a + b)
}
