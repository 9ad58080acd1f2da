//! Small dense complex linear algebra.
//!
//! Per-point material matrices and per-wavevector symbols are at most a few
//! dozen rows, so everything here is straightforward O(n^3) code kept generic
//! over [`Real`].

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_traits::{One, Zero};
use thiserror::Error;

use crate::real::{cone, czero, Real, C};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is singular (pivot column {column})")]
    Singular { column: usize },
    #[error("dimension mismatch: {0}")]
    Shape(String),
}

/// Dense row-major complex matrix.
#[derive(Clone, PartialEq)]
pub struct CMatrix<T: Real> {
    rows: usize,
    cols: usize,
    data: Vec<C<T>>,
}

impl<T: Real> fmt::Debug for CMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:+.4e}{:+.4e}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![czero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = cone();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Wraps row-major data. Panics if the length does not match.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<C<T>>) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major buffer length");
        Self { rows, cols, data }
    }

    pub fn from_diagonal(diag: &[C<T>]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        m
    }

    /// Real matrix promoted to complex.
    pub fn from_real(rows: usize, cols: usize, data: &[T]) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self {
            rows,
            cols,
            data: data.iter().map(|&x| C::new(x, T::zero())).collect(),
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[C<T>] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [C<T>] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<C<T>> {
        self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn scale(&self, a: C<T>) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| *z * a).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, z| acc + z.norm_sqr())
            .sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, z| acc.max(z.norm()))
    }

    pub fn trace(&self) -> C<T> {
        (0..self.rows.min(self.cols)).fold(czero(), |acc, i| acc + self[(i, i)])
    }

    /// Hermitian part `(A + A†)/2`.
    pub fn hermitian_part(&self) -> Self {
        let half = T::lit(0.5);
        Self::from_fn(self.rows, self.cols, |r, c| {
            (self[(r, c)] + self[(c, r)].conj()).scale(half)
        })
    }

    /// Anti-Hermitian part divided by `i`: `(A - A†)/(2i)`, which is Hermitian.
    pub fn imaginary_part(&self) -> Self {
        let half = T::lit(0.5);
        Self::from_fn(self.rows, self.cols, |r, c| {
            let d = self[(r, c)] - self[(c, r)].conj();
            // d / (2i) = -i d / 2
            C::new(d.im * half, -d.re * half)
        })
    }

    pub fn matvec(&self, x: &[C<T>]) -> Vec<C<T>> {
        let mut y = vec![czero(); self.rows];
        self.matvec_into(x, &mut y);
        y
    }

    #[inline]
    pub fn matvec_into(&self, x: &[C<T>], y: &mut [C<T>]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(y.len(), self.rows);
        matvec_slice(&self.data, self.rows, self.cols, x, y);
    }

    /// Copies `block` into `self` with its top-left corner at `(r0, c0)`.
    pub fn set_block(&mut self, r0: usize, c0: usize, block: &CMatrix<T>) {
        for r in 0..block.rows {
            for c in 0..block.cols {
                self[(r0 + r, c0 + c)] = block[(r, c)];
            }
        }
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> CMatrix<T> {
        Self::from_fn(rows, cols, |r, c| self[(r0 + r, c0 + c)])
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// LU factorisation with partial pivoting.
    pub fn lu(&self) -> Result<Lu<T>, LinalgError> {
        Lu::factor(self)
    }

    pub fn inverse(&self) -> Result<CMatrix<T>, LinalgError> {
        let lu = self.lu()?;
        let n = self.rows;
        let mut inv = CMatrix::zeros(n, n);
        let mut col = vec![czero(); n];
        for j in 0..n {
            col.iter_mut().for_each(|z| *z = czero());
            col[j] = cone();
            lu.solve_in_place(&mut col);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        Ok(inv)
    }

    pub fn solve(&self, b: &[C<T>]) -> Result<Vec<C<T>>, LinalgError> {
        let lu = self.lu()?;
        let mut x = b.to_vec();
        lu.solve_in_place(&mut x);
        Ok(x)
    }
}

/// `y = A x` on raw row-major storage.
#[inline]
pub(crate) fn matvec_slice<T: Real>(a: &[C<T>], rows: usize, cols: usize, x: &[C<T>], y: &mut [C<T>]) {
    for r in 0..rows {
        let row = &a[r * cols..(r + 1) * cols];
        let mut acc = czero();
        for (aij, xj) in row.iter().zip(x) {
            acc += *aij * *xj;
        }
        y[r] = acc;
    }
}

impl<T: Real> Index<(usize, usize)> for CMatrix<T> {
    type Output = C<T>;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &C<T> {
        &self.data[r * self.cols + c]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for CMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C<T> {
        &mut self.data[r * self.cols + c]
    }
}

impl<'a, T: Real> Mul<&'a CMatrix<T>> for &'a CMatrix<T> {
    type Output = CMatrix<T>;
    fn mul(self, rhs: &'a CMatrix<T>) -> CMatrix<T> {
        assert_eq!(self.cols, rhs.rows, "matrix product shape");
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.data[k * rhs.cols + j];
                }
            }
        }
        out
    }
}

impl<'a, T: Real> Add<&'a CMatrix<T>> for &'a CMatrix<T> {
    type Output = CMatrix<T>;
    fn add(self, rhs: &'a CMatrix<T>) -> CMatrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| *a + *b).collect(),
        }
    }
}

impl<'a, T: Real> Sub<&'a CMatrix<T>> for &'a CMatrix<T> {
    type Output = CMatrix<T>;
    fn sub(self, rhs: &'a CMatrix<T>) -> CMatrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| *a - *b).collect(),
        }
    }
}

/// Packed LU factors of a square matrix.
#[derive(Debug, Clone)]
pub struct Lu<T: Real> {
    n: usize,
    lu: Vec<C<T>>,
    perm: Vec<usize>,
}

impl<T: Real> Lu<T> {
    fn factor(a: &CMatrix<T>) -> Result<Self, LinalgError> {
        if !a.is_square() {
            return Err(LinalgError::Shape(format!(
                "LU of non-square {}x{} matrix",
                a.rows, a.cols
            )));
        }
        let n = a.rows;
        let mut lu = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.max_abs();
        let tiny = T::epsilon() * T::count(n.max(1)) * scale;
        for k in 0..n {
            let mut piv = k;
            let mut best = lu[k * n + k].norm();
            for r in k + 1..n {
                let v = lu[r * n + k].norm();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best <= tiny || best.is_zero() {
                return Err(LinalgError::Singular { column: k });
            }
            if piv != k {
                for c in 0..n {
                    lu.swap(k * n + c, piv * n + c);
                }
                perm.swap(k, piv);
            }
            let inv_p = C::<T>::one() / lu[k * n + k];
            for r in k + 1..n {
                let f = lu[r * n + k] * inv_p;
                lu[r * n + k] = f;
                if f.is_zero() {
                    continue;
                }
                for c in k + 1..n {
                    let u = lu[k * n + c];
                    lu[r * n + c] -= f * u;
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    pub fn solve_in_place(&self, b: &mut [C<T>]) {
        let n = self.n;
        let pb: Vec<C<T>> = self.perm.iter().map(|&p| b[p]).collect();
        b.copy_from_slice(&pb);
        for i in 0..n {
            let mut acc = b[i];
            for j in 0..i {
                acc -= self.lu[i * n + j] * b[j];
            }
            b[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = b[i];
            for j in i + 1..n {
                acc -= self.lu[i * n + j] * b[j];
            }
            b[i] = acc / self.lu[i * n + i];
        }
    }

    /// Smallest and largest pivot magnitudes, a cheap conditioning hint.
    pub fn pivot_range(&self) -> (T, T) {
        let n = self.n;
        let mut lo = T::infinity();
        let mut hi = T::zero();
        for i in 0..n {
            let v = self.lu[i * n + i].norm();
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }
}

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen<T: Real> {
    /// Ascending eigenvalues.
    pub values: Vec<T>,
    /// Orthonormal eigenvectors stored as columns, matching `values`.
    pub vectors: CMatrix<T>,
}

/// Cyclic Jacobi eigen-solver for Hermitian matrices.
///
/// Only the Hermitian part of `a` is used.
pub fn hermitian_eigen<T: Real>(a: &CMatrix<T>) -> HermitianEigen<T> {
    assert!(a.is_square(), "eigen-decomposition needs a square matrix");
    let n = a.rows;
    let mut m = a.hermitian_part();
    let mut v = CMatrix::<T>::identity(n);
    let scale = m.frobenius_norm();
    if n > 1 && scale > T::zero() {
        let thresh = T::epsilon() * T::lit(0.25) * scale;
        for _sweep in 0..100 {
            let mut off = T::zero();
            for p in 0..n {
                for q in p + 1..n {
                    off += m[(p, q)].norm_sqr();
                }
            }
            if off.sqrt() <= thresh {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = m[(p, q)];
                    let r = apq.norm();
                    if r <= T::min_positive_value() {
                        continue;
                    }
                    let phase = apq / C::new(r, T::zero());
                    let app = m[(p, p)].re;
                    let aqq = m[(q, q)].re;
                    let theta = (aqq - app) / (T::lit(2.0) * r);
                    let t = if theta.is_infinite() {
                        T::zero()
                    } else {
                        let sgn = if theta >= T::zero() { T::one() } else { -T::one() };
                        sgn / (theta.magnitude() + (theta * theta + T::one()).sqrt())
                    };
                    let c = T::one() / (t * t + T::one()).sqrt();
                    let s = t * c;
                    let eph = phase.conj();
                    // Plane rotation U = diag(1, e^{-i phi}) * [[c, s], [-s, c]].
                    let upp = C::new(c, T::zero());
                    let upq = C::new(s, T::zero());
                    let uqp = eph.scale(-s);
                    let uqq = eph.scale(c);
                    // m <- m U
                    for k in 0..n {
                        let akp = m[(k, p)];
                        let akq = m[(k, q)];
                        m[(k, p)] = akp * upp + akq * uqp;
                        m[(k, q)] = akp * upq + akq * uqq;
                    }
                    // m <- U^dagger m
                    for k in 0..n {
                        let apk = m[(p, k)];
                        let aqk = m[(q, k)];
                        m[(p, k)] = upp.conj() * apk + uqp.conj() * aqk;
                        m[(q, k)] = upq.conj() * apk + uqq.conj() * aqk;
                    }
                    m[(p, q)] = czero();
                    m[(q, p)] = czero();
                    m[(p, p)] = C::new(m[(p, p)].re, T::zero());
                    m[(q, q)] = C::new(m[(q, q)].re, T::zero());
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = vkp * upp + vkq * uqp;
                        v[(k, q)] = vkp * upq + vkq * uqq;
                    }
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        m[(i, i)]
            .re
            .partial_cmp(&m[(j, j)].re)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| m[(i, i)].re).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    HermitianEigen { values, vectors }
}

/// Smallest eigenvalue of the Hermitian part of `a`.
pub fn min_hermitian_eigenvalue<T: Real>(a: &CMatrix<T>) -> T {
    hermitian_eigen(a).values.first().copied().unwrap_or_else(T::zero)
}

/// Moore-Penrose pseudo-inverse of a Hermitian positive semidefinite matrix.
///
/// Eigenvalues at or below `rel_cutoff * max_eigenvalue` are treated as zero.
pub fn hermitian_pseudo_inverse<T: Real>(a: &CMatrix<T>, rel_cutoff: T) -> (CMatrix<T>, usize) {
    let eig = hermitian_eigen(a);
    let n = a.rows();
    let lmax = eig
        .values
        .iter()
        .fold(T::zero(), |acc, &x| acc.max(x.magnitude()));
    let mut out = CMatrix::zeros(n, n);
    let mut rank = 0;
    for (idx, &lam) in eig.values.iter().enumerate() {
        if lmax.is_zero() || lam <= rel_cutoff * lmax {
            continue;
        }
        rank += 1;
        let inv = T::one() / lam;
        for r in 0..n {
            let vr = eig.vectors[(r, idx)];
            for c in 0..n {
                out[(r, c)] += (vr * eig.vectors[(c, idx)].conj()).scale(inv);
            }
        }
    }
    (out, rank)
}

/// Orthogonal projector onto the column space of `d`.
///
/// One-sided Jacobi orthogonalisation of the columns; columns whose final
/// norm is at or below `rel_cutoff * largest` count as null. Returns the
/// projector and the numerical rank.
pub fn range_projector<T: Real>(d: &CMatrix<T>, rel_cutoff: T) -> (CMatrix<T>, usize) {
    let (m, n) = (d.rows(), d.cols());
    let mut cols: Vec<Vec<C<T>>> = (0..n).map(|j| (0..m).map(|i| d[(i, j)]).collect()).collect();
    let eps = T::epsilon();
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = cols[p].iter().fold(T::zero(), |a, z| a + z.norm_sqr());
                let beta = cols[q].iter().fold(T::zero(), |a, z| a + z.norm_sqr());
                let gamma = dot(&cols[p], &cols[q]);
                let g = gamma.norm();
                if g <= eps * (alpha * beta).sqrt() || g <= T::min_positive_value() {
                    continue;
                }
                rotated = true;
                let ph = (gamma / C::new(g, T::zero())).conj();
                let zeta = (beta - alpha) / (T::lit(2.0) * g);
                let sgn = if zeta >= T::zero() { T::one() } else { -T::one() };
                let t = sgn / (zeta.magnitude() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let ap = cols[p][i];
                    let bq = cols[q][i] * ph;
                    cols[p][i] = ap.scale(c) - bq.scale(s);
                    cols[q][i] = ap.scale(s) + bq.scale(c);
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<T> = cols.iter().map(|c| norm2(c)).collect();
    let smax = norms.iter().fold(T::zero(), |a, &b| a.max(b));
    let mut out = CMatrix::zeros(m, m);
    let mut rank = 0;
    for (c, &s) in cols.iter().zip(&norms) {
        if smax.is_zero() || s <= rel_cutoff * smax {
            continue;
        }
        rank += 1;
        let inv = T::one() / s;
        let u: Vec<C<T>> = c.iter().map(|z| z.scale(inv)).collect();
        for r in 0..m {
            for k in 0..m {
                out[(r, k)] += u[r] * u[k].conj();
            }
        }
    }
    (out, rank)
}

/// Conjugate-linear dot product `sum conj(x) y`.
#[inline]
pub fn dot<T: Real>(x: &[C<T>], y: &[C<T>]) -> C<T> {
    x.iter().zip(y).fold(czero(), |acc, (a, b)| acc + a.conj() * *b)
}

#[inline]
pub fn norm2<T: Real>(x: &[C<T>]) -> T {
    x.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::clit;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, rng: &mut ChaCha8Rng) -> CMatrix<f64> {
        CMatrix::from_fn(n, n, |_, _| {
            C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    #[test]
    fn inverse_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = &random(7, &mut rng) + &CMatrix::identity(7).scale(clit(4.0, 0.0));
        let inv = a.inverse().unwrap();
        let prod = &a * &inv;
        let err = (&prod - &CMatrix::identity(7)).frobenius_norm();
        assert!(err < 1e-13, "err {err}");
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = CMatrix::<f64>::from_diagonal(&[clit(1.0, 0.0), clit(0.0, 0.0), clit(2.0, 0.0)]);
        assert!(matches!(a.inverse(), Err(LinalgError::Singular { .. })));
    }

    #[test]
    fn jacobi_diagonalises_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [1, 2, 5, 12] {
            let b = random(n, &mut rng);
            let h = (&b + &b.adjoint()).scale(clit(0.5, 0.0));
            let eig = hermitian_eigen(&h);
            let d = CMatrix::from_diagonal(
                &eig.values.iter().map(|&x| clit(x, 0.0)).collect::<Vec<_>>(),
            );
            let rebuilt = &(&eig.vectors * &d) * &eig.vectors.adjoint();
            assert!((&rebuilt - &h).frobenius_norm() < 1e-12 * (1.0 + h.frobenius_norm()));
            let orth = &eig.vectors.adjoint() * &eig.vectors;
            assert!((&orth - &CMatrix::identity(n)).frobenius_norm() < 1e-12);
            assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn pseudo_inverse_drops_null_space() {
        let v: [C<f64>; 2] = [clit(1.0, 0.0), clit(0.0, 1.0)];
        // rank-one projector-like matrix v v^dagger
        let a = CMatrix::from_fn(2, 2, |r, c| v[r] * v[c].conj());
        let (p, rank) = hermitian_pseudo_inverse(&a, 1e-12);
        assert_eq!(rank, 1);
        // a^+ = a / |v|^4 = a / 4
        let expect = a.scale(clit(0.25, 0.0));
        assert!((&p - &expect).frobenius_norm() < 1e-14);
    }

    #[test]
    fn range_projector_matches_normal_equations() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let d = CMatrix::from_fn(7, 3, |_, _| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let (p, rank) = range_projector(&d, 1e-12);
        assert_eq!(rank, 3);
        let g = (&d.adjoint() * &d).inverse().unwrap();
        let q = &(&d * &g) * &d.adjoint();
        assert!((&p - &q).frobenius_norm() < 1e-13);
        // duplicate column: rank drops, projector unchanged
        let d2 = CMatrix::from_fn(7, 4, |r, c| d[(r, c.min(2))]);
        let (p2, rank2) = range_projector(&d2, 1e-12);
        assert_eq!(rank2, 3);
        assert!((&p2 - &q).frobenius_norm() < 1e-12);
    }

    #[test]
    fn imaginary_part_is_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random(4, &mut rng);
        let im = a.imaginary_part();
        assert!((&im - &im.adjoint()).frobenius_norm() < 1e-15);
        let re = a.hermitian_part();
        let back = &re + &im.scale(clit(0.0, 1.0));
        assert!((&back - &a).frobenius_norm() < 1e-14);
    }
}
