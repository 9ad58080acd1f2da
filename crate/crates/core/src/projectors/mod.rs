//! Fourier-local projections `Γ₁(k)` and `Γ₂(k) = I - Γ₁(k)`.
//!
//! Every builder maps a wavevector to a dense self-adjoint idempotent matrix
//! acting on one grid point's components. Closed forms are provided for each
//! physics; [`FromD`] builds the same objects from a differential symbol.

mod apply;
mod dsymbol;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::linalg::{range_projector, CMatrix};
use crate::real::{Real, C};
use crate::tensorfield::{Block, BlockLayout, FieldError};

pub use apply::{apply_gamma2, apply_projector, ProjectorOp};
pub use dsymbol::{
    BrinkmanD, DSymbol, FirstIndexD, HelmholtzD, MaxwellD, SurfaceD, ThermoacousticD,
};

#[derive(Debug, Error)]
pub enum ProjectorError {
    #[error("degenerate symbol: D(ik) vanishes at k = {k:?}")]
    DegenerateSymbol { k: Vec<f64> },
    #[error("layout mismatch: {0}")]
    Layout(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// A wavevector-indexed projection symbol.
pub trait Projector<T: Real>: Send + Sync {
    fn name(&self) -> String;
    /// Layout of the fields the symbol acts on.
    fn layout(&self) -> BlockLayout;
    /// Number of wavevector components expected.
    fn wave_dim(&self) -> usize;
    /// `Γ₁(k)`.
    fn gamma1(&self, k: &[T]) -> CMatrix<T>;

    /// `Γ₂(k) = I - Γ₁(k)`.
    fn gamma2(&self, k: &[T]) -> CMatrix<T> {
        let g = self.gamma1(k);
        &CMatrix::identity(g.rows()) - &g
    }
}

impl<T: Real> fmt::Debug for dyn Projector<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Projector({})", self.name())
    }
}

#[inline]
fn k2<T: Real>(k: &[T]) -> T {
    k.iter().fold(T::zero(), |a, &x| a + x * x)
}

/// Writes `Z(k)` for a `(vector(d), scalar)` pair into `out`, addressing the
/// vector entries through `vec_idx` and the scalar through `sca_idx`.
#[inline]
fn write_z<T: Real>(out: &mut CMatrix<T>, k: &[T], vec_idx: impl Fn(usize) -> usize, sca_idx: usize) {
    let inv = T::one() / (k2(k) + T::one());
    let d = k.len();
    for a in 0..d {
        for b in 0..d {
            out[(vec_idx(a), vec_idx(b))] = C::new(k[a] * k[b] * inv, T::zero());
        }
        out[(vec_idx(a), sca_idx)] = C::new(T::zero(), k[a] * inv);
        out[(sca_idx, vec_idx(a))] = C::new(T::zero(), -k[a] * inv);
    }
    out[(sca_idx, sca_idx)] = C::new(inv, T::zero());
}

/// `Z(k) = (1/(k²+1)) [[k⊗k, ik], [-ikᵀ, 1]]` on `(vector(d), scalar)` fields.
#[derive(Debug, Clone, Copy)]
pub struct Helmholtz {
    pub d: usize,
}

impl<T: Real> Projector<T> for Helmholtz {
    fn name(&self) -> String {
        format!("helmholtz(d={})", self.d)
    }
    fn layout(&self) -> BlockLayout {
        BlockLayout::vector_scalar(self.d)
    }
    fn wave_dim(&self) -> usize {
        self.d
    }
    fn gamma1(&self, k: &[T]) -> CMatrix<T> {
        let d = self.d;
        let mut g = CMatrix::zeros(d + 1, d + 1);
        write_z(&mut g, &k[..d], |a| a, d);
        g
    }
}

/// The Helmholtz form in the `N * d` dimensional configuration space.
#[derive(Debug, Clone, Copy)]
pub struct Schrodinger {
    pub electrons: usize,
    pub d_space: usize,
}

impl<T: Real> Projector<T> for Schrodinger {
    fn name(&self) -> String {
        format!("schrodinger(N={}, d={})", self.electrons, self.d_space)
    }
    fn layout(&self) -> BlockLayout {
        BlockLayout::vector_scalar(self.electrons * self.d_space)
    }
    fn wave_dim(&self) -> usize {
        self.electrons * self.d_space
    }
    fn gamma1(&self, k: &[T]) -> CMatrix<T> {
        Projector::<T>::gamma1(&Helmholtz { d: self.electrons * self.d_space }, k)
    }
}

/// `η(k) a = k × a` as a 3x3 matrix.
fn eta<T: Real>(k: &[T]) -> [[T; 3]; 3] {
    let z = T::zero();
    [[z, -k[2], k[1]], [k[2], z, -k[0]], [-k[1], k[0], z]]
}

/// Electromagnetic projector on `(e-type, curl-type)` pairs of 3-vectors.
///
/// `(1/(k²+1)) [I; iη] (I + k⊗k) [I, iη]`, expanded using `η k = 0` and
/// `η η = k⊗k - k² I`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Maxwell;

impl<T: Real> Projector<T> for Maxwell {
    fn name(&self) -> String {
        "maxwell".into()
    }
    fn layout(&self) -> BlockLayout {
        BlockLayout::new(vec![Block::Vector(3), Block::Vector(3)]).expect("layout")
    }
    fn wave_dim(&self) -> usize {
        3
    }
    fn gamma1(&self, k: &[T]) -> CMatrix<T> {
        let kk = k2(k);
        let inv = T::one() / (kk + T::one());
        let e = eta(k);
        let mut g = CMatrix::zeros(6, 6);
        for a in 0..3 {
            for b in 0..3 {
                let delta = if a == b { T::one() } else { T::zero() };
                let kab = k[a] * k[b];
                g[(a, b)] = C::new((delta + kab) * inv, T::zero());
                g[(a, 3 + b)] = C::new(T::zero(), e[a][b] * inv);
                g[(3 + a, b)] = C::new(T::zero(), e[a][b] * inv);
                g[(3 + a, 3 + b)] = C::new((delta * kk - kab) * inv, T::zero());
            }
        }
        g
    }
}

/// `Z(k)` acting on the first index of `(matrix(d), vector(d))` fields: each
/// column `j` of the matrix block pairs with entry `j` of the vector block.
#[derive(Debug, Clone, Copy)]
pub struct FirstIndex {
    pub d: usize,
}

impl FirstIndex {
    fn write<T: Real>(d: usize, g: &mut CMatrix<T>, k: &[T], offset: usize) {
        for j in 0..d {
            write_z(g, &k[..d], |i| offset + i * d + j, offset + d * d + j);
        }
    }
}

impl<T: Real> Projector<T> for FirstIndex {
    fn name(&self) -> String {
        format!("first-index(d={})", self.d)
    }
    fn layout(&self) -> BlockLayout {
        BlockLayout::matrix_vector(self.d)
    }
    fn wave_dim(&self) -> usize {
        self.d
    }
    fn gamma1(&self, k: &[T]) -> CMatrix<T> {
        let n = self.d * self.d + self.d;
        let mut g = CMatrix::zeros(n, n);
        FirstIndex::write(self.d, &mut g, k, 0);
        g
    }
}

/// Projector for `(sym(d) σ, vector(d) div σ)` fields, built as `I - Γ₂` with
/// `Γ₂ = [D; I] (D†D + I)⁻¹ [D†, I]` and `D(ik) m = (i/2)(m⊗k + k⊗m)`.
#[derive(Debug, Clone, Copy)]
pub struct Brinkman {
    pub d: usize,
}

/// `D(ik)` as a packed-symmetric x vector matrix.
pub(crate) fn sym_grad_symbol<T: Real>(d: usize, k: &[T]) -> CMatrix<T> {
    let pairs = crate::tensorfield::sym_pairs(d);
    let r2 = T::one() / T::lit(2.0).sqrt();
    CMatrix::from_fn(pairs.len(), d, |row, j| {
        let (a, b) = pairs[row];
        if a == b {
            if a == j {
                C::new(T::zero(), k[a])
            } else {
                C::new(T::zero(), T::zero())
            }
        } else {
            let mut v = T::zero();
            if a == j {
                v += k[b];
            }
            if b == j {
                v += k[a];
            }
            C::new(T::zero(), v * r2)
        }
    })
}

impl<T: Real> Projector<T> for Brinkman {
    fn name(&self) -> String {
        format!("brinkman(d={})", self.d)
    }
    fn layout(&self) -> BlockLayout {
        BlockLayout::new(vec![Block::Sym(self.d), Block::Vector(self.d)]).expect("layout")
    }
    fn wave_dim(&self) -> usize {
        self.d
    }
    fn gamma1(&self, k: &[T]) -> CMatrix<T> {
        let d = self.d;
        let ns = d * (d + 1) / 2;
        let dm = sym_grad_symbol(d, k);
        let mut b = CMatrix::zeros(ns + d, d);
        b.set_block(0, 0, &dm);
        b.set_block(ns, 0, &CMatrix::identity(d));
        let bt = b.adjoint();
        let inner = (&bt * &b).inverse().expect("D†D + I is positive definite");
        let g2 = &(&b * &inner) * &bt;
        let g1 = &CMatrix::identity(ns + d) - &g2;
        g1.hermitian_part()
    }
}

/// Block-diagonal thermoacoustic projector on
/// `(matrix(d) ∇v, vector(d) v, vector(d) ∇θ, scalar θ)`.
#[derive(Debug, Clone, Copy)]
pub struct Thermoacoustic {
    pub d: usize,
}

impl<T: Real> Projector<T> for Thermoacoustic {
    fn name(&self) -> String {
        format!("thermoacoustic(d={})", self.d)
    }
    fn layout(&self) -> BlockLayout {
        let d = self.d;
        BlockLayout::new(vec![Block::Matrix(d), Block::Vector(d), Block::Vector(d), Block::Scalar])
            .expect("layout")
    }
    fn wave_dim(&self) -> usize {
        self.d
    }
    fn gamma1(&self, k: &[T]) -> CMatrix<T> {
        let d = self.d;
        let m = d * d + d;
        let mut g = CMatrix::zeros(m + d + 1, m + d + 1);
        FirstIndex::write(d, &mut g, k, 0);
        write_z(&mut g, &k[..d], |a| m + a, m + d);
        g
    }
}

/// Surface-wave reduction: `Γ⁰(k₃) = base((k₁, 0, k₃))` on a one-axis grid.
///
/// Without a base this is the scalar Love form
/// `(1/(k₃²+1)) [[k₃², ik₃], [-ik₃, 1]]`.
#[derive(Clone)]
pub struct Surface<T: Real> {
    pub k1: T,
    pub base: Option<Arc<dyn Projector<T>>>,
}

impl<T: Real> Surface<T> {
    pub fn love(k1: T) -> Self {
        Self { k1, base: None }
    }

    pub fn with_base(k1: T, base: Arc<dyn Projector<T>>) -> Self {
        Self { k1, base: Some(base) }
    }
}

impl<T: Real> Projector<T> for Surface<T> {
    fn name(&self) -> String {
        match &self.base {
            None => "surface(love)".into(),
            Some(b) => format!("surface({}, k1={})", b.name(), self.k1),
        }
    }
    fn layout(&self) -> BlockLayout {
        match &self.base {
            None => BlockLayout::vector_scalar(1),
            Some(b) => b.layout(),
        }
    }
    fn wave_dim(&self) -> usize {
        1
    }
    fn gamma1(&self, k: &[T]) -> CMatrix<T> {
        match &self.base {
            None => Projector::<T>::gamma1(&Helmholtz { d: 1 }, &k[..1]),
            Some(b) => b.gamma1(&[self.k1, T::zero(), k[0]]),
        }
    }
}

/// Relative singular-value cutoff used by [`gamma_from_d`].
pub const D_RANK_TOL: f64 = 1e-12;

/// `D(ik) [D(ik)† D(ik)]⁺ D(ik)†`, the projector onto the range of the symbol.
pub fn gamma_from_d<T: Real>(d: &dyn DSymbol<T>, k: &[T]) -> Result<CMatrix<T>, ProjectorError> {
    let dm = d.eval(k);
    if dm.max_abs().is_zero() {
        return Err(ProjectorError::DegenerateSymbol {
            k: k.iter().map(|x| x.to_f64_lossy()).collect(),
        });
    }
    let (p, _rank) = range_projector(&dm, T::lit(D_RANK_TOL));
    Ok(p)
}

/// Projector built from a differential symbol via [`gamma_from_d`].
#[derive(Clone)]
pub struct FromD<T: Real> {
    pub symbol: Arc<dyn DSymbol<T>>,
}

impl<T: Real> FromD<T> {
    pub fn new(symbol: Arc<dyn DSymbol<T>>) -> Self {
        Self { symbol }
    }
}

impl<T: Real> Projector<T> for FromD<T> {
    fn name(&self) -> String {
        format!("from-D({})", self.symbol.name())
    }
    fn layout(&self) -> BlockLayout {
        self.symbol.layout()
    }
    fn wave_dim(&self) -> usize {
        self.symbol.wave_dim()
    }
    /// Panics on a vanishing symbol; use [`gamma_from_d`] to handle that case.
    fn gamma1(&self, k: &[T]) -> CMatrix<T> {
        gamma_from_d(self.symbol.as_ref(), k).expect("non-degenerate symbol")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::clit;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_k(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
        (0..d).map(|_| rng.gen_range(-6.0..6.0)).collect()
    }

    fn check_projector(g: &CMatrix<f64>, tol: f64) {
        let n = g.frobenius_norm();
        assert!((&(g * g) - g).frobenius_norm() <= tol * n, "not idempotent");
        assert!((g - &g.adjoint()).frobenius_norm() <= tol * n, "not self-adjoint");
    }

    fn all_builders() -> Vec<Arc<dyn Projector<f64>>> {
        vec![
            Arc::new(Helmholtz { d: 3 }),
            Arc::new(Maxwell),
            Arc::new(Brinkman { d: 3 }),
            Arc::new(Surface::<f64>::love(0.7)),
            Arc::new(Surface::<f64>::with_base(0.7, Arc::new(Maxwell))),
            Arc::new(Thermoacoustic { d: 3 }),
            Arc::new(Schrodinger { electrons: 2, d_space: 2 }),
            Arc::new(FirstIndex { d: 2 }),
        ]
    }

    #[test]
    fn builders_are_projectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for b in all_builders() {
            for _ in 0..50 {
                let k = rand_k(&mut rng, b.wave_dim());
                let g1 = b.gamma1(&k);
                assert_eq!(g1.rows(), b.layout().total_components(), "{}", b.name());
                check_projector(&g1, 1e-13);
                let g2 = b.gamma2(&k);
                assert!((&g1 * &g2).frobenius_norm() < 1e-13, "{}", b.name());
            }
        }
    }

    #[test]
    fn helmholtz_closed_values() {
        let g: CMatrix<f64> = Helmholtz { d: 3 }.gamma1(&[0.0, 0.0, 0.0]);
        let want = CMatrix::from_diagonal(&[clit(0.0, 0.0), clit(0.0, 0.0), clit(0.0, 0.0), clit(1.0, 0.0)]);
        assert_eq!(g, want);
        let g: CMatrix<f64> = Helmholtz { d: 3 }.gamma1(&[1.0, 0.0, 0.0]);
        assert!((g[(0, 0)] - clit(0.5, 0.0)).norm() < 1e-16);
        assert!((g[(0, 3)] - clit(0.0, 0.5)).norm() < 1e-16);
        assert!((g[(3, 0)] - clit(0.0, -0.5)).norm() < 1e-16);
        assert!((g[(3, 3)] - clit(0.5, 0.0)).norm() < 1e-16);
        assert!((&(&g * &g) - &g).frobenius_norm() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let k = rand_k(&mut rng, 3);
            let t = Projector::<f64>::gamma1(&Helmholtz { d: 3 }, &k).trace();
            assert!((t - clit(1.0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn helmholtz_range_is_gradient_potential_pairs() {
        let k = [0.3, -1.1, 2.0];
        let c = clit::<f64>(0.4, -0.9);
        let v: Vec<C<f64>> = k.iter().map(|&x| C::new(0.0, x) * c).chain([c]).collect();
        let g: CMatrix<f64> = Helmholtz { d: 3 }.gamma1(&k);
        let w = g.matvec(&v);
        for (a, b) in v.iter().zip(&w) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn maxwell_values_and_range() {
        let g: CMatrix<f64> = Maxwell.gamma1(&[0.0, 0.0, 0.0]);
        for r in 0..6 {
            for c in 0..6 {
                let want = if r == c && r < 3 { 1.0 } else { 0.0 };
                assert_eq!(g[(r, c)], clit(want, 0.0));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let k = rand_k(&mut rng, 3);
            let g: CMatrix<f64> = Maxwell.gamma1(&k);
            let a: Vec<C<f64>> = (0..3).map(|_| C::new(rng.gen(), rng.gen())).collect();
            let cross = [
                k[1] * a[2] - k[2] * a[1],
                k[2] * a[0] - k[0] * a[2],
                k[0] * a[1] - k[1] * a[0],
            ];
            let v: Vec<C<f64>> = a.iter().copied().chain(cross.iter().map(|z| z * C::new(0.0, 1.0))).collect();
            let w = g.matvec(&v);
            for (x, y) in v.iter().zip(&w) {
                assert!((x - y).norm() < 1e-12);
            }
            assert!((g.trace() - clit(3.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn maxwell_matches_unsimplified_form() {
        // [I; iη] (I - ηη)⁻¹ [I, iη]
        let k = [0.4, -0.2, 1.3];
        let e = eta(&k);
        let etam = CMatrix::from_fn(3, 3, |a, b| clit::<f64>(e[a][b], 0.0));
        let left = CMatrix::from_fn(6, 3, |r, c| {
            if r < 3 {
                if r == c { clit(1.0, 0.0) } else { clit(0.0, 0.0) }
            } else {
                etam[(r - 3, c)] * C::new(0.0, 1.0)
            }
        });
        let inner = (&CMatrix::identity(3) - &(&etam * &etam)).inverse().unwrap();
        let right = CMatrix::from_fn(3, 6, |r, c| {
            if c < 3 {
                if r == c { clit(1.0, 0.0) } else { clit(0.0, 0.0) }
            } else {
                etam[(r, c - 3)] * C::new(0.0, 1.0)
            }
        });
        let full = &(&left * &inner) * &right;
        let g: CMatrix<f64> = Maxwell.gamma1(&k);
        assert!((&full - &g).frobenius_norm() < 1e-13);
    }

    #[test]
    fn brinkman_zero_k_and_range() {
        let g: CMatrix<f64> = Brinkman { d: 3 }.gamma1(&[0.0; 3]);
        for r in 0..9 {
            for c in 0..9 {
                let want = if r == c && r < 6 { 1.0 } else { 0.0 };
                assert!((g[(r, c)] - clit(want, 0.0)).norm() < 1e-15);
            }
        }
        let k = [0.5, 1.5, -0.7];
        let d = sym_grad_symbol(3, &k);
        let a = [clit::<f64>(1.0, 0.2), clit(-0.3, 0.0), clit(0.1, 0.9)];
        let dm = d.matvec(&a);
        let v: Vec<C<f64>> = dm.iter().copied().chain(a.iter().copied()).collect();
        let g2 = Projector::<f64>::gamma2(&Brinkman { d: 3 }, &k);
        let w = g2.matvec(&v);
        for (x, y) in v.iter().zip(&w) {
            assert!((x - y).norm() < 1e-13);
        }
    }

    #[test]
    fn surface_forms() {
        let love = Surface::<f64>::love(3.0);
        let g = love.gamma1(&[0.0]);
        assert_eq!(g[(1, 1)], clit(1.0, 0.0));
        assert_eq!(g[(0, 0)], clit(0.0, 0.0));
        let g = love.gamma1(&[1.0]);
        let want = CMatrix::from_row_major(
            2,
            2,
            vec![clit(0.5, 0.0), clit(0.0, 0.5), clit(0.0, -0.5), clit(0.5, 0.0)],
        );
        assert!((&g - &want).frobenius_norm() < 1e-16);
        assert_eq!(&(&g * &g) - &g, CMatrix::zeros(2, 2));
        // embedding: base helmholtz with k1 = 0 equals 1D helmholtz on (k3, scalar)
        let s = Surface::with_base(0.0, Arc::new(Helmholtz { d: 3 }));
        let g3 = s.gamma1(&[1.7]);
        let g1: CMatrix<f64> = Helmholtz { d: 1 }.gamma1(&[1.7]);
        let idx = [2, 3];
        for (r, &a) in idx.iter().enumerate() {
            for (c, &b) in idx.iter().enumerate() {
                assert!((g3[(a, b)] - g1[(r, c)]).norm() < 1e-15);
            }
        }
        assert!(g3[(0, 0)].norm() < 1e-15 && g3[(1, 1)].norm() < 1e-15);
    }

    #[test]
    fn schrodinger_example() {
        let g: CMatrix<f64> = Schrodinger { electrons: 2, d_space: 1 }.gamma1(&[1.0, 1.0]);
        let t = 1.0 / 3.0;
        let want = CMatrix::from_row_major(
            3,
            3,
            vec![
                clit(t, 0.0), clit(t, 0.0), clit(0.0, t),
                clit(t, 0.0), clit(t, 0.0), clit(0.0, t),
                clit(0.0, -t), clit(0.0, -t), clit(t, 0.0),
            ],
        );
        assert!((&g - &want).frobenius_norm() < 1e-15);
        let g0: CMatrix<f64> = Schrodinger { electrons: 1, d_space: 1 }.gamma1(&[0.0]);
        assert_eq!(g0[(1, 1)], clit(1.0, 0.0));
        assert_eq!(g0[(0, 0)], clit(0.0, 0.0));
    }

    #[test]
    fn thermoacoustic_blocks() {
        let g: CMatrix<f64> = Thermoacoustic { d: 3 }.gamma1(&[0.0; 3]);
        // keeps v and θ entries only
        for r in 0..g.rows() {
            let keep = (9..12).contains(&r) || r == 15;
            assert_eq!(g[(r, r)], clit(if keep { 1.0 } else { 0.0 }, 0.0));
        }
        let k = [0.3, 0.2, -0.4];
        let g: CMatrix<f64> = Thermoacoustic { d: 3 }.gamma1(&k);
        for r in 0..12 {
            for c in 12..16 {
                assert_eq!(g[(r, c)], clit(0.0, 0.0));
                assert_eq!(g[(c, r)], clit(0.0, 0.0));
            }
        }
    }

    #[test]
    fn from_d_matches_closed_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pairs: Vec<(Arc<dyn Projector<f64>>, Arc<dyn DSymbol<f64>>)> = vec![
            (Arc::new(Helmholtz { d: 3 }), Arc::new(HelmholtzD { d: 3 })),
            (Arc::new(Maxwell), Arc::new(MaxwellD)),
            (Arc::new(FirstIndex { d: 3 }), Arc::new(FirstIndexD { d: 3 })),
            (Arc::new(Brinkman { d: 3 }), Arc::new(BrinkmanD { d: 3 })),
            (Arc::new(Thermoacoustic { d: 2 }), Arc::new(ThermoacousticD { d: 2 })),
            (Arc::new(Schrodinger { electrons: 3, d_space: 1 }), Arc::new(HelmholtzD { d: 3 })),
        ];
        for (closed, sym) in pairs {
            for _ in 0..30 {
                let k = rand_k(&mut rng, closed.wave_dim());
                let a = closed.gamma1(&k);
                let b = gamma_from_d(sym.as_ref(), &k).unwrap();
                assert!((&a - &b).max_abs() < 1e-12, "{}", closed.name());
            }
        }
        // k = 0 limit of the scalar potential form
        let g0 = gamma_from_d(&HelmholtzD { d: 3 }, &[0.0; 3]).unwrap();
        assert!((g0[(3, 3)] - clit(1.0, 0.0)).norm() < 1e-15);
        assert!(g0.as_slice().iter().enumerate().all(|(i, z)| i == 15 || z.norm() < 1e-15));
    }

    #[test]
    fn zero_symbol_is_degenerate() {
        struct Zero;
        impl DSymbol<f64> for Zero {
            fn name(&self) -> String {
                "zero".into()
            }
            fn layout(&self) -> BlockLayout {
                BlockLayout::vector_scalar(2)
            }
            fn wave_dim(&self) -> usize {
                2
            }
            fn potential_components(&self) -> usize {
                1
            }
            fn eval(&self, _k: &[f64]) -> CMatrix<f64> {
                CMatrix::zeros(3, 1)
            }
        }
        match gamma_from_d(&Zero, &[1.0, 2.0]) {
            Err(ProjectorError::DegenerateSymbol { k }) => assert_eq!(k, vec![1.0, 2.0]),
            other => panic!("unexpected {other:?}"),
        }
    }
}
