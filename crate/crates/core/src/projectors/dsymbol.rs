use std::sync::Arc;

use super::sym_grad_symbol;
use crate::linalg::CMatrix;
use crate::real::{Real, C};
use crate::tensorfield::{Block, BlockLayout};

/// Fourier symbol `D(ik)` of a first-order differential operator mapping
/// potentials to fields.
pub trait DSymbol<T: Real>: Send + Sync {
    fn name(&self) -> String;
    /// Layout of the field `D Ψ`.
    fn layout(&self) -> BlockLayout;
    fn wave_dim(&self) -> usize;
    fn potential_components(&self) -> usize;
    /// `total_components x potential_components` matrix at wavevector `k`.
    fn eval(&self, k: &[T]) -> CMatrix<T>;
}

#[inline]
fn ik<T: Real>(x: T) -> C<T> {
    C::new(T::zero(), x)
}

/// `D(∇) = (∇, 1)` on a scalar potential.
#[derive(Debug, Clone, Copy)]
pub struct HelmholtzD {
    pub d: usize,
}

impl<T: Real> DSymbol<T> for HelmholtzD {
    fn name(&self) -> String {
        format!("grad-potential(d={})", self.d)
    }
    fn layout(&self) -> BlockLayout {
        BlockLayout::vector_scalar(self.d)
    }
    fn wave_dim(&self) -> usize {
        self.d
    }
    fn potential_components(&self) -> usize {
        1
    }
    fn eval(&self, k: &[T]) -> CMatrix<T> {
        let d = self.d;
        CMatrix::from_fn(d + 1, 1, |r, _| if r < d { ik(k[r]) } else { C::new(T::one(), T::zero()) })
    }
}

/// `D(∇) a = (a, ∇ × a)`, i.e. `[I; iη(k)]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct MaxwellD;

impl<T: Real> DSymbol<T> for MaxwellD {
    fn name(&self) -> String {
        "curl-pair".into()
    }
    fn layout(&self) -> BlockLayout {
        BlockLayout::new(vec![Block::Vector(3), Block::Vector(3)]).expect("layout")
    }
    fn wave_dim(&self) -> usize {
        3
    }
    fn potential_components(&self) -> usize {
        3
    }
    fn eval(&self, k: &[T]) -> CMatrix<T> {
        let e = super::eta(k);
        CMatrix::from_fn(6, 3, |r, c| {
            if r < 3 {
                if r == c {
                    C::new(T::one(), T::zero())
                } else {
                    C::new(T::zero(), T::zero())
                }
            } else {
                ik(e[r - 3][c])
            }
        })
    }
}

/// `D(∇) u = (∇u, u)` with `(∇u)_{ij} = ∂_i u_j`.
#[derive(Debug, Clone, Copy)]
pub struct FirstIndexD {
    pub d: usize,
}

impl FirstIndexD {
    fn fill<T: Real>(d: usize, m: &mut CMatrix<T>, k: &[T], row0: usize, col0: usize) {
        for i in 0..d {
            for j in 0..d {
                m[(row0 + i * d + j, col0 + j)] = ik(k[i]);
            }
        }
        for j in 0..d {
            m[(row0 + d * d + j, col0 + j)] = C::new(T::one(), T::zero());
        }
    }
}

impl<T: Real> DSymbol<T> for FirstIndexD {
    fn name(&self) -> String {
        format!("vector-gradient(d={})", self.d)
    }
    fn layout(&self) -> BlockLayout {
        BlockLayout::matrix_vector(self.d)
    }
    fn wave_dim(&self) -> usize {
        self.d
    }
    fn potential_components(&self) -> usize {
        self.d
    }
    fn eval(&self, k: &[T]) -> CMatrix<T> {
        let d = self.d;
        let mut m = CMatrix::zeros(d * d + d, d);
        Self::fill(d, &mut m, k, 0, 0);
        m
    }
}

/// Parametrises the stress space directly: `σ ↦ (σ, ∇·σ)` for symmetric `σ`.
#[derive(Debug, Clone, Copy)]
pub struct BrinkmanD {
    pub d: usize,
}

impl<T: Real> DSymbol<T> for BrinkmanD {
    fn name(&self) -> String {
        format!("stress-divergence(d={})", self.d)
    }
    fn layout(&self) -> BlockLayout {
        BlockLayout::new(vec![Block::Sym(self.d), Block::Vector(self.d)]).expect("layout")
    }
    fn wave_dim(&self) -> usize {
        self.d
    }
    fn potential_components(&self) -> usize {
        self.d * (self.d + 1) / 2
    }
    fn eval(&self, k: &[T]) -> CMatrix<T> {
        let d = self.d;
        let ns = d * (d + 1) / 2;
        // ik·σ = -D(ik)† σ
        let div = sym_grad_symbol(d, k).adjoint().scale(C::new(-T::one(), T::zero()));
        let mut m = CMatrix::zeros(ns + d, ns);
        m.set_block(0, 0, &CMatrix::identity(ns));
        m.set_block(ns, 0, &div);
        m
    }
}

/// Block-diagonal pair of [`FirstIndexD`] and [`HelmholtzD`].
#[derive(Debug, Clone, Copy)]
pub struct ThermoacousticD {
    pub d: usize,
}

impl<T: Real> DSymbol<T> for ThermoacousticD {
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
    fn potential_components(&self) -> usize {
        self.d + 1
    }
    fn eval(&self, k: &[T]) -> CMatrix<T> {
        let d = self.d;
        let m0 = d * d + d;
        let mut m = CMatrix::zeros(m0 + d + 1, d + 1);
        FirstIndexD::fill(d, &mut m, k, 0, 0);
        for a in 0..d {
            m[(m0 + a, d)] = ik(k[a]);
        }
        m[(m0 + d, d)] = C::new(T::one(), T::zero());
        m
    }
}

/// Surface reduction of a 3D symbol: evaluates `base` at `(k₁, 0, k₃)`.
#[derive(Clone)]
pub struct SurfaceD<T: Real> {
    pub k1: T,
    pub base: Arc<dyn DSymbol<T>>,
}

impl<T: Real> DSymbol<T> for SurfaceD<T> {
    fn name(&self) -> String {
        format!("surface({})", self.base.name())
    }
    fn layout(&self) -> BlockLayout {
        self.base.layout()
    }
    fn wave_dim(&self) -> usize {
        1
    }
    fn potential_components(&self) -> usize {
        self.base.potential_components()
    }
    fn eval(&self, k: &[T]) -> CMatrix<T> {
        self.base.eval(&[self.k1, T::zero(), k[0]])
    }
}
