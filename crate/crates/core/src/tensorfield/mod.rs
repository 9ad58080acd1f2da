//! Block-structured complex fields on periodic grids.

mod fft;
mod grid;
mod layout;
pub mod uplf;

use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::linalg::{matvec_slice, CMatrix};
use crate::real::{czero, is_finite_c, Real, C};
use crate::reduce::{det_dot, det_norm_sqr};

pub use fft::FftPlan;
pub use grid::Grid;
pub use layout::{sym_pairs, Block, BlockLayout};

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("expected a {expected} field, got {found}")]
    Representation {
        expected: Representation,
        found: Representation,
    },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("index out of bounds: {0}")]
    Bounds(String),
    #[error("non-finite value at point {point}, component {component}")]
    NonFinite { point: usize, component: usize },
    #[error("malformed field file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Representation {
    Real,
    Fourier,
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Representation::Real => write!(f, "real-space"),
            Representation::Fourier => write!(f, "fourier-space"),
        }
    }
}

/// Complex supertensor field: `num_points x total_components` values.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T: Real> {
    grid: Grid,
    layout: BlockLayout,
    repr: Representation,
    data: Vec<C<T>>,
}

impl<T: Real> Field<T> {
    pub fn zeros(grid: &Grid, layout: &BlockLayout, repr: Representation) -> Self {
        let n = grid.num_points() * layout.total_components();
        Self {
            grid: grid.clone(),
            layout: layout.clone(),
            repr,
            data: vec![czero(); n],
        }
    }

    pub fn from_vec(
        grid: &Grid,
        layout: &BlockLayout,
        repr: Representation,
        data: Vec<C<T>>,
    ) -> Result<Self, FieldError> {
        let want = grid.num_points() * layout.total_components();
        if data.len() != want {
            return Err(FieldError::Shape(format!(
                "{} values for {} points x {} components",
                data.len(),
                grid.num_points(),
                layout.total_components()
            )));
        }
        let f = Self {
            grid: grid.clone(),
            layout: layout.clone(),
            repr,
            data,
        };
        f.check_finite()?;
        Ok(f)
    }

    /// Real-space field from a per-point closure writing all components.
    pub fn from_fn<F>(grid: &Grid, layout: &BlockLayout, f: F) -> Self
    where
        F: Fn(&[T], &mut [C<T>]) + Sync,
    {
        let nc = layout.total_components();
        let d = grid.ndim();
        let mut out = Self::zeros(grid, layout, Representation::Real);
        out.data
            .par_chunks_mut(nc)
            .enumerate()
            .for_each(|(p, v)| {
                let mut x = vec![T::zero(); d];
                grid.position(p, &mut x);
                f(&x, v);
            });
        out
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn layout(&self) -> &BlockLayout {
        &self.layout
    }

    #[inline]
    pub fn representation(&self) -> Representation {
        self.repr
    }

    #[inline]
    pub fn ncomp(&self) -> usize {
        self.layout.total_components()
    }

    #[inline]
    pub fn values(&self) -> &[C<T>] {
        &self.data
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [C<T>] {
        &mut self.data
    }

    pub fn into_values(self) -> Vec<C<T>> {
        self.data
    }

    /// Components stored at point (or Fourier mode) `p`.
    #[inline]
    pub fn point(&self, p: usize) -> &[C<T>] {
        let nc = self.ncomp();
        &self.data[p * nc..(p + 1) * nc]
    }

    #[inline]
    pub fn point_mut(&mut self, p: usize) -> &mut [C<T>] {
        let nc = self.ncomp();
        &mut self.data[p * nc..(p + 1) * nc]
    }

    pub fn check_finite(&self) -> Result<(), FieldError> {
        match self.data.iter().position(|z| !is_finite_c(z)) {
            None => Ok(()),
            Some(i) => Err(FieldError::NonFinite {
                point: i / self.ncomp(),
                component: i % self.ncomp(),
            }),
        }
    }

    fn expect_repr(&self, want: Representation) -> Result<(), FieldError> {
        if self.repr == want {
            Ok(())
        } else {
            Err(FieldError::Representation {
                expected: want,
                found: self.repr,
            })
        }
    }

    pub fn same_shape(&self, other: &Self) -> Result<(), FieldError> {
        if self.grid != other.grid {
            return Err(FieldError::Shape("fields live on different grids".into()));
        }
        if self.layout != other.layout {
            return Err(FieldError::Shape(format!(
                "layouts differ: {} vs {}",
                self.layout, other.layout
            )));
        }
        Ok(())
    }

    fn same_space(&self, other: &Self) -> Result<(), FieldError> {
        self.same_shape(other)?;
        if self.repr != other.repr {
            return Err(FieldError::Representation {
                expected: self.repr,
                found: other.repr,
            });
        }
        Ok(())
    }

    pub fn to_fourier(&self) -> Result<Self, FieldError> {
        self.to_fourier_with(&FftPlan::new(&self.grid))
    }

    pub fn to_fourier_with(&self, plan: &FftPlan<T>) -> Result<Self, FieldError> {
        self.expect_repr(Representation::Real)?;
        let mut out = self.clone();
        plan.forward(&mut out.data, self.ncomp());
        out.repr = Representation::Fourier;
        Ok(out)
    }

    pub fn to_real(&self) -> Result<Self, FieldError> {
        self.to_real_with(&FftPlan::new(&self.grid))
    }

    pub fn to_real_with(&self, plan: &FftPlan<T>) -> Result<Self, FieldError> {
        self.expect_repr(Representation::Fourier)?;
        let mut out = self.clone();
        plan.inverse(&mut out.data, self.ncomp());
        out.repr = Representation::Real;
        Ok(out)
    }

    /// `(f, g) = sum_x conj(f(x)) . g(x) * cell_volume / num_points`.
    ///
    /// The unitary transform makes this the same number in either representation.
    pub fn inner_product(&self, other: &Self) -> Result<C<T>, FieldError> {
        self.same_space(other)?;
        let w = T::lit(self.grid.point_weight());
        Ok(det_dot(&self.data, &other.data).scale(w))
    }

    /// `sqrt((f, f))`.
    pub fn norm(&self) -> T {
        (det_norm_sqr(&self.data) * T::lit(self.grid.point_weight())).sqrt()
    }

    /// `a x + y`.
    pub fn axpy(a: C<T>, x: &Self, y: &Self) -> Result<Self, FieldError> {
        x.same_space(y)?;
        let mut out = y.clone();
        out.data
            .par_iter_mut()
            .zip(x.data.par_iter())
            .for_each(|(o, xv)| *o += a * *xv);
        Ok(out)
    }

    /// In-place `self += a x`.
    pub fn add_scaled(&mut self, a: C<T>, x: &Self) -> Result<(), FieldError> {
        self.same_space(x)?;
        self.data
            .par_iter_mut()
            .zip(x.data.par_iter())
            .for_each(|(o, xv)| *o += a * *xv);
        Ok(())
    }

    pub fn scale(&self, a: C<T>) -> Self {
        let mut out = self.clone();
        out.data.par_iter_mut().for_each(|z| *z *= a);
        out
    }

    /// Applies the `ncomp x ncomp` matrix `m(p)` at every point.
    pub fn pointwise_map<F>(&self, m: F) -> Result<Self, FieldError>
    where
        F: Fn(usize) -> CMatrix<T> + Sync,
    {
        let nc = self.ncomp();
        let mut out = self.clone();
        let bad = out
            .data
            .par_chunks_mut(nc)
            .zip(self.data.par_chunks(nc))
            .enumerate()
            .map(|(p, (o, x))| {
                let mat = m(p);
                if mat.rows() != nc || mat.cols() != nc {
                    return 1usize;
                }
                matvec_slice(mat.as_slice(), nc, nc, x, o);
                0
            })
            .sum::<usize>();
        if bad > 0 {
            return Err(FieldError::Shape(format!(
                "pointwise matrix is not {nc}x{nc} at {bad} points"
            )));
        }
        Ok(out)
    }

    /// Applies one constant matrix at every point.
    pub fn map_constant(&self, m: &CMatrix<T>) -> Result<Self, FieldError> {
        let nc = self.ncomp();
        if m.rows() != nc || m.cols() != nc {
            return Err(FieldError::Shape(format!(
                "matrix is {}x{}, field has {nc} components",
                m.rows(),
                m.cols()
            )));
        }
        let mut out = self.clone();
        out.data
            .par_chunks_mut(nc)
            .zip(self.data.par_chunks(nc))
            .for_each(|(o, x)| matvec_slice(m.as_slice(), nc, nc, x, o));
        Ok(out)
    }

    /// Average over the cell of each component (real-space fields).
    pub fn mean(&self) -> Result<Vec<C<T>>, FieldError> {
        self.expect_repr(Representation::Real)?;
        let nc = self.ncomp();
        let mut acc = vec![czero::<T>(); nc];
        for chunk in self.data.chunks(nc) {
            for (a, z) in acc.iter_mut().zip(chunk) {
                *a += *z;
            }
        }
        let inv = T::one() / T::count(self.grid.num_points());
        Ok(acc.into_iter().map(|z| z.scale(inv)).collect())
    }

    /// Copy of the field restricted to block `b`.
    pub fn block(&self, b: usize) -> Field<T> {
        let range = self.layout.range(b);
        let layout = BlockLayout::new(vec![self.layout.blocks()[b]]).expect("single block");
        let mut data = Vec::with_capacity(self.grid.num_points() * range.len());
        for chunk in self.data.chunks(self.ncomp()) {
            data.extend_from_slice(&chunk[range.clone()]);
        }
        Field {
            grid: self.grid.clone(),
            layout,
            repr: self.repr,
            data,
        }
    }

    /// Max-norm distance, handy in tests.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |m, (a, b)| m.max((*a - *b).norm()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::clit;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_field(grid: &Grid, layout: &BlockLayout, seed: u64) -> Field<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = grid.num_points() * layout.total_components();
        let data = (0..n)
            .map(|_| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        Field::from_vec(grid, layout, Representation::Real, data).unwrap()
    }

    #[test]
    fn constant_field_has_single_mode() {
        let g = Grid::new(vec![4, 6], vec![1.0, 2.0]).unwrap();
        let l = BlockLayout::scalar();
        let c = clit(0.3, -1.2);
        let f = Field::from_fn(&g, &l, |_, v| v[0] = c);
        let spec = f.to_fourier().unwrap();
        let root_n = (24f64).sqrt();
        assert!((spec.values()[0] - c * root_n).norm() < 1e-13);
        assert!(spec.values()[1..].iter().all(|z| z.norm() < 1e-13));
    }

    #[test]
    fn plane_wave_lands_on_its_index() {
        let g = Grid::new(vec![16], vec![2.0 * PI]).unwrap();
        let l = BlockLayout::scalar();
        for m in [1i64, 5, -3] {
            let f = Field::<f64>::from_fn(&g, &l, |x, v| v[0] = C::new(0.0, m as f64 * x[0]).exp());
            let spec = f.to_fourier().unwrap();
            let idx = m.rem_euclid(16) as usize;
            for (p, z) in spec.values().iter().enumerate() {
                if p == idx {
                    assert!((z.norm() - 4.0).abs() < 1e-12);
                } else {
                    assert!(z.norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn delta_at_zero_mode_gives_constant() {
        let g = Grid::new(vec![4, 4], vec![1.0, 1.0]).unwrap();
        let l = BlockLayout::scalar();
        let mut f = Field::<f64>::zeros(&g, &l, Representation::Fourier);
        f.values_mut()[0] = clit(2.0, 0.0);
        let r = f.to_real().unwrap();
        assert!(r.values().iter().all(|z| (*z - clit::<f64>(0.5, 0.0)).norm() < 1e-15));
        let z = Field::<f64>::zeros(&g, &l, Representation::Fourier).to_real().unwrap();
        assert!(z.values().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn round_trip_and_plancherel() {
        let l = BlockLayout::new(vec![Block::Matrix(2), Block::Vector(2), Block::Scalar]).unwrap();
        for (i, dims) in [vec![8, 8], vec![5, 6, 3], vec![7]].into_iter().enumerate() {
            let lens = vec![1.3; dims.len()];
            let g = Grid::new(dims, lens).unwrap();
            let f = random_field(&g, &l, i as u64);
            let h = random_field(&g, &l, 100 + i as u64);
            let back = f.to_fourier().unwrap().to_real().unwrap();
            let err = Field::axpy(clit(-1.0, 0.0), &f, &back).unwrap().norm();
            assert!(err <= 1e-13 * f.norm());
            let ip_r = f.inner_product(&h).unwrap();
            let ip_f = f
                .to_fourier()
                .unwrap()
                .inner_product(&h.to_fourier().unwrap())
                .unwrap();
            assert!((ip_r - ip_f).norm() <= 1e-12 * f.norm() * h.norm());
        }
    }

    #[test]
    fn representation_errors() {
        let g = Grid::new(vec![4], vec![1.0]).unwrap();
        let f = Field::<f64>::zeros(&g, &BlockLayout::scalar(), Representation::Real);
        assert!(matches!(f.to_real(), Err(FieldError::Representation { .. })));
        let s = f.to_fourier().unwrap();
        assert!(s.to_fourier().is_err());
        assert!(f.inner_product(&s).is_err());
    }

    #[test]
    fn unit_constant_has_unit_norm() {
        let g = Grid::new(vec![5, 3], vec![1.0, 1.0]).unwrap();
        let f = Field::<f64>::from_fn(&g, &BlockLayout::scalar(), |_, v| v[0] = clit(1.0, 0.0));
        assert!((f.inner_product(&f).unwrap() - clit(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn distinct_modes_are_orthogonal() {
        let g = Grid::new(vec![8], vec![2.0 * PI]).unwrap();
        let l = BlockLayout::scalar();
        let a = Field::<f64>::from_fn(&g, &l, |x, v| v[0] = C::new(0.0, x[0]).exp());
        let b = Field::<f64>::from_fn(&g, &l, |x, v| v[0] = C::new(0.0, 2.0 * x[0]).exp());
        assert!(a.inner_product(&b).unwrap().norm() < 1e-14);
    }

    #[test]
    fn trivial_linear_ops() {
        let g = Grid::new(vec![4, 4], vec![1.0, 1.0]).unwrap();
        let l = BlockLayout::vector_scalar(2);
        let x = random_field(&g, &l, 1);
        let y = random_field(&g, &l, 2);
        assert_eq!(Field::axpy(clit(0.0, 0.0), &x, &y).unwrap(), y);
        assert_eq!(x.scale(clit(1.0, 0.0)), x);
        assert_eq!(x.pointwise_map(|_| CMatrix::identity(3)).unwrap(), x);
        assert!(x.pointwise_map(|_| CMatrix::identity(2)).is_err());
    }

    #[test]
    fn f32_round_trip() {
        let g = Grid::new(vec![8, 4], vec![1.0, 1.0]).unwrap();
        let l = BlockLayout::scalar();
        let f = Field::<f32>::from_fn(&g, &l, |x, v| v[0] = C::new(x[0].sin(), x[1]));
        let back = f.to_fourier().unwrap().to_real().unwrap();
        assert!(f.max_abs_diff(&back) < 1e-5);
    }
}
