//! Restarted GMRES on flat complex buffers with optional deflation.

use rayon::prelude::*;

use crate::linalg::{hermitian_eigen, CMatrix};
use crate::real::{czero, Real, C};
use crate::reduce::{det_dot, det_norm_sqr};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Status {
    Converged,
    MaxIter,
    /// A full cycle (or an Arnoldi breakdown) made no measurable progress.
    Stagnated,
}

pub(crate) struct Outcome<T: Real> {
    pub status: Status,
    pub iterations: usize,
    /// Relative residual after each inner iteration.
    pub history: Vec<T>,
    /// Smallest singular value of the last Hessenberg matrix.
    pub sigma_min: T,
}

fn norm<T: Real>(x: &[C<T>]) -> T {
    det_norm_sqr(x).sqrt()
}

fn axpy<T: Real>(a: C<T>, x: &[C<T>], y: &mut [C<T>]) {
    y.par_iter_mut().zip(x.par_iter()).for_each(|(yi, xi)| *yi += a * *xi);
}

/// Orthonormal deflation directions; the iteration runs on `P A P` with
/// `P = I - Σ w w†`.
pub(crate) struct Deflation<T: Real> {
    basis: Vec<Vec<C<T>>>,
}

impl<T: Real> Deflation<T> {
    pub fn new(vectors: Vec<Vec<C<T>>>) -> Self {
        let mut basis: Vec<Vec<C<T>>> = Vec::new();
        for mut v in vectors {
            for _ in 0..2 {
                for w in &basis {
                    let h = det_dot(w, &v);
                    axpy(-h, w, &mut v);
                }
            }
            let n = norm(&v);
            if n > T::zero() {
                let inv = C::new(T::one() / n, T::zero());
                v.par_iter_mut().for_each(|z| *z *= inv);
                basis.push(v);
            }
        }
        Self { basis }
    }

    pub fn none() -> Self {
        Self { basis: Vec::new() }
    }

    pub fn project(&self, v: &mut [C<T>]) {
        for w in &self.basis {
            let h = det_dot(w, v);
            axpy(-h, w, v);
        }
    }
}

pub(crate) struct Params<T: Real> {
    pub tol: T,
    pub max_iter: usize,
    pub restart: usize,
}

/// Solves `A x = b` starting from `x`. `apply(v, out)` writes `A v`.
pub(crate) fn gmres<T: Real, F>(
    apply: F,
    b: &[C<T>],
    x: &mut [C<T>],
    params: &Params<T>,
    deflation: &Deflation<T>,
) -> Outcome<T>
where
    F: Fn(&[C<T>], &mut [C<T>]),
{
    let n = b.len();
    let op = |v: &[C<T>], out: &mut [C<T>]| {
        let mut pv = v.to_vec();
        deflation.project(&mut pv);
        apply(&pv, out);
        deflation.project(out);
    };
    let mut rhs = b.to_vec();
    deflation.project(&mut rhs);
    deflation.project(x);
    let bnorm = norm(&rhs);
    let mut out = Outcome {
        status: Status::Converged,
        iterations: 0,
        history: Vec::new(),
        sigma_min: T::infinity(),
    };
    if bnorm.is_zero() {
        x.iter_mut().for_each(|z| *z = czero());
        return out;
    }
    let abs_tol = params.tol * bnorm;
    let m = params.restart.max(1).min(n.max(1));
    let mut r = vec![czero::<T>(); n];
    let mut w = vec![czero::<T>(); n];
    loop {
        op(x, &mut r);
        r.par_iter_mut().zip(rhs.par_iter()).for_each(|(ri, bi)| *ri = *bi - *ri);
        let beta = norm(&r);
        if beta <= abs_tol {
            out.status = Status::Converged;
            return out;
        }
        if out.iterations >= params.max_iter {
            out.status = Status::MaxIter;
            return out;
        }
        let mut v: Vec<Vec<C<T>>> = Vec::with_capacity(m + 1);
        let inv = C::new(T::one() / beta, T::zero());
        v.push(r.iter().map(|z| *z * inv).collect());
        let mut h = CMatrix::<T>::zeros(m + 1, m);
        let mut raw = CMatrix::<T>::zeros(m + 1, m);
        let mut cs = vec![T::zero(); m];
        let mut sn = vec![czero::<T>(); m];
        let mut g = vec![czero::<T>(); m + 1];
        g[0] = C::new(beta, T::zero());
        let mut k = 0;
        let mut breakdown = false;
        let mut resid = beta;
        while k < m && out.iterations < params.max_iter {
            op(&v[k], &mut w);
            out.iterations += 1;
            let wnorm0 = norm(&w);
            // two passes of modified Gram-Schmidt
            for _ in 0..2 {
                for (i, vi) in v.iter().enumerate() {
                    let hij = det_dot(vi, &w);
                    h[(i, k)] += hij;
                    axpy(-hij, vi, &mut w);
                }
            }
            let hn = norm(&w);
            h[(k + 1, k)] = C::new(hn, T::zero());
            for i in 0..=k + 1 {
                raw[(i, k)] = h[(i, k)];
            }
            for i in 0..k {
                let (a, bb) = (h[(i, k)], h[(i + 1, k)]);
                h[(i, k)] = a.scale(cs[i]) + sn[i] * bb;
                h[(i + 1, k)] = -sn[i].conj() * a + bb.scale(cs[i]);
            }
            let a = h[(k, k)];
            let rr = (a.norm_sqr() + hn * hn).sqrt();
            if a.norm().is_zero() {
                cs[k] = T::zero();
                sn[k] = C::new(T::one(), T::zero());
            } else {
                cs[k] = a.norm() / rr;
                sn[k] = (a / a.norm()).scale(hn / rr);
            }
            h[(k, k)] = a.scale(cs[k]) + sn[k].scale(hn);
            h[(k + 1, k)] = czero();
            g[k + 1] = -sn[k].conj() * g[k];
            g[k] = g[k].scale(cs[k]);
            resid = g[k + 1].norm();
            out.history.push(resid / bnorm);
            k += 1;
            if resid <= abs_tol {
                break;
            }
            if hn <= T::epsilon() * T::lit(16.0) * wnorm0.max(T::min_positive_value()) {
                breakdown = true;
                break;
            }
            let inv = C::new(T::one() / hn, T::zero());
            v.push(w.iter().map(|z| *z * inv).collect());
        }
        // back substitution
        let mut y = vec![czero::<T>(); k];
        for i in (0..k).rev() {
            let mut acc = g[i];
            for j in i + 1..k {
                acc -= h[(i, j)] * y[j];
            }
            y[i] = if h[(i, i)].norm().is_zero() { czero() } else { acc / h[(i, i)] };
        }
        for (vi, yi) in v.iter().zip(&y) {
            axpy(*yi, vi, x);
        }
        out.sigma_min = hessenberg_sigma_min(&raw, k);
        if resid <= abs_tol {
            continue; // confirm with the true residual
        }
        if breakdown || resid >= beta * (T::one() - T::lit(1e-10)) {
            op(x, &mut r);
            r.par_iter_mut().zip(rhs.par_iter()).for_each(|(ri, bi)| *ri = *bi - *ri);
            if norm(&r) > abs_tol {
                out.status = Status::Stagnated;
                return out;
            }
        }
    }
}

fn hessenberg_sigma_min<T: Real>(raw: &CMatrix<T>, k: usize) -> T {
    if k == 0 {
        return T::infinity();
    }
    let hk = raw.block(0, 0, k + 1, k);
    let gram = &hk.adjoint() * &hk;
    let e = hermitian_eigen(&gram);
    e.values[0].max(T::zero()).sqrt()
}
