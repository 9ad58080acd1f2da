use std::sync::Arc;

use rayon::prelude::*;

use super::{Projector, ProjectorError};
use crate::linalg::matvec_slice;
use crate::real::{czero, Real, C};
use crate::tensorfield::{Field, FieldError, Grid, Representation};

/// Default ceiling on cached symbol entries (complex numbers).
pub const DEFAULT_CACHE_ENTRIES: usize = 1 << 22;

/// A projector bound to one grid and Bloch shift, ready to apply to
/// Fourier coefficient buffers.
///
/// When the grid is small enough the symbols are evaluated once and stored;
/// the cache is read-only afterwards.
pub struct ProjectorOp<T: Real> {
    builder: Arc<dyn Projector<T>>,
    grid: Grid,
    shift: Vec<T>,
    nc: usize,
    cache: Option<Vec<C<T>>>,
}

impl<T: Real> ProjectorOp<T> {
    pub fn new(
        builder: Arc<dyn Projector<T>>,
        grid: &Grid,
        shift: Option<&[T]>,
    ) -> Result<Self, ProjectorError> {
        Self::with_cache_limit(builder, grid, shift, DEFAULT_CACHE_ENTRIES)
    }

    pub fn with_cache_limit(
        builder: Arc<dyn Projector<T>>,
        grid: &Grid,
        shift: Option<&[T]>,
        max_entries: usize,
    ) -> Result<Self, ProjectorError> {
        if builder.wave_dim() != grid.ndim() {
            return Err(ProjectorError::Layout(format!(
                "{} expects {}-component wavevectors, grid has {} axes",
                builder.name(),
                builder.wave_dim(),
                grid.ndim()
            )));
        }
        let shift = match shift {
            Some(s) if s.len() != grid.ndim() => {
                return Err(ProjectorError::Layout(format!(
                    "shift has {} components for a {}-axis grid",
                    s.len(),
                    grid.ndim()
                )))
            }
            Some(s) => s.to_vec(),
            None => vec![T::zero(); grid.ndim()],
        };
        let nc = builder.layout().total_components();
        let mut op = Self {
            builder,
            grid: grid.clone(),
            shift,
            nc,
            cache: None,
        };
        let entries = grid.num_points().saturating_mul(nc * nc);
        if entries <= max_entries {
            let mut cache = vec![czero(); entries];
            cache
                .par_chunks_mut(nc * nc)
                .enumerate()
                .for_each(|(p, slot)| slot.copy_from_slice(op.symbol_at(p).as_slice()));
            op.cache = Some(cache);
        }
        Ok(op)
    }

    pub fn builder(&self) -> &Arc<dyn Projector<T>> {
        &self.builder
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn shift(&self) -> &[T] {
        &self.shift
    }

    pub fn is_cached(&self) -> bool {
        self.cache.is_some()
    }

    /// Shifted wavevector of Fourier index `p`.
    pub fn wavevector(&self, p: usize) -> Vec<T> {
        let mut k = vec![T::zero(); self.grid.ndim()];
        self.grid.wavevector_flat(p, &mut k);
        for (a, s) in k.iter_mut().zip(&self.shift) {
            *a += *s;
        }
        k
    }

    /// `Γ₁(k_p + shift)`.
    pub fn symbol_at(&self, p: usize) -> crate::linalg::CMatrix<T> {
        if let Some(c) = &self.cache {
            let n2 = self.nc * self.nc;
            return crate::linalg::CMatrix::from_row_major(self.nc, self.nc, c[p * n2..(p + 1) * n2].to_vec());
        }
        self.builder.gamma1(&self.wavevector(p))
    }

    /// Applies `Γ₁` (or `Γ₂` when `complement`) to Fourier coefficients in place.
    pub fn apply_in_place(&self, data: &mut [C<T>], complement: bool) {
        let nc = self.nc;
        debug_assert_eq!(data.len(), self.grid.num_points() * nc);
        data.par_chunks_mut(nc).enumerate().for_each(|(p, v)| {
            let x: Vec<C<T>> = v.to_vec();
            match &self.cache {
                Some(c) => matvec_slice(&c[p * nc * nc..(p + 1) * nc * nc], nc, nc, &x, v),
                None => {
                    let g = self.builder.gamma1(&self.wavevector(p));
                    matvec_slice(g.as_slice(), nc, nc, &x, v);
                }
            }
            if complement {
                for (o, xi) in v.iter_mut().zip(&x) {
                    *o = *xi - *o;
                }
            }
        });
    }

    fn check(&self, f: &Field<T>) -> Result<(), ProjectorError> {
        if f.representation() != Representation::Fourier {
            return Err(FieldError::Representation {
                expected: Representation::Fourier,
                found: f.representation(),
            }
            .into());
        }
        if f.grid() != &self.grid {
            return Err(ProjectorError::Layout("field grid differs from projector grid".into()));
        }
        if f.layout() != &self.builder.layout() {
            return Err(ProjectorError::Layout(format!(
                "field layout {} but {} acts on {}",
                f.layout(),
                self.builder.name(),
                self.builder.layout()
            )));
        }
        Ok(())
    }

    pub fn apply(&self, f: &Field<T>) -> Result<Field<T>, ProjectorError> {
        self.check(f)?;
        let mut out = f.clone();
        self.apply_in_place(out.values_mut(), false);
        Ok(out)
    }

    pub fn apply_complement(&self, f: &Field<T>) -> Result<Field<T>, ProjectorError> {
        self.check(f)?;
        let mut out = f.clone();
        self.apply_in_place(out.values_mut(), true);
        Ok(out)
    }
}

/// `Γ₁(k + shift) F̂(k)` at every Fourier index.
pub fn apply_projector<T: Real>(
    builder: Arc<dyn Projector<T>>,
    f: &Field<T>,
    shift: Option<&[T]>,
) -> Result<Field<T>, ProjectorError> {
    ProjectorOp::with_cache_limit(builder, f.grid(), shift, 0)?.apply(f)
}

/// `Γ₂(k + shift) F̂(k)` at every Fourier index.
pub fn apply_gamma2<T: Real>(
    builder: Arc<dyn Projector<T>>,
    f: &Field<T>,
    shift: Option<&[T]>,
) -> Result<Field<T>, ProjectorError> {
    ProjectorOp::with_cache_limit(builder, f.grid(), shift, 0)?.apply_complement(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projectors::{Helmholtz, Maxwell};
    use crate::real::clit;
    use crate::tensorfield::BlockLayout;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spec(grid: &Grid, layout: &BlockLayout, seed: u64) -> Field<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = grid.num_points() * layout.total_components();
        let data = (0..n).map(|_| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        Field::from_vec(grid, layout, Representation::Fourier, data).unwrap()
    }

    #[test]
    fn field_level_idempotence_and_complement() {
        let g = Grid::new(vec![6, 5, 4], vec![1.0, 2.0, 1.5]).unwrap();
        let b: Arc<dyn Projector<f64>> = Arc::new(Maxwell);
        let f = random_spec(&g, &b.layout(), 3);
        let shift = [0.3, -0.1, 0.2];
        let once = apply_projector(b.clone(), &f, Some(&shift)).unwrap();
        let twice = apply_projector(b.clone(), &once, Some(&shift)).unwrap();
        assert!(once.max_abs_diff(&twice) <= 1e-12 * once.norm());
        let zero = apply_gamma2(b.clone(), &once, Some(&shift)).unwrap();
        assert!(zero.norm() <= 1e-12 * f.norm());
        // cached and uncached agree
        let op = ProjectorOp::new(b, &g, Some(&shift)).unwrap();
        assert!(op.is_cached());
        assert!(op.apply(&f).unwrap().max_abs_diff(&once) < 1e-15);
    }

    #[test]
    fn constant_field_keeps_scalar_block() {
        let g = Grid::new(vec![4, 4, 4], vec![1.0; 3]).unwrap();
        let l = BlockLayout::vector_scalar(3);
        let f = Field::<f64>::from_fn(&g, &l, |_, v| {
            v.copy_from_slice(&[clit(1.0, 0.0), clit(2.0, 0.0), clit(3.0, 0.0), clit(4.0, 0.0)])
        });
        let out = apply_projector(Arc::new(Helmholtz { d: 3 }), &f.to_fourier().unwrap(), None)
            .unwrap()
            .to_real()
            .unwrap();
        for p in 0..g.num_points() {
            let v = out.point(p);
            assert!(v[..3].iter().all(|z| z.norm() < 1e-14));
            assert!((v[3] - clit(4.0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn rejects_mismatches() {
        let g = Grid::new(vec![4, 4], vec![1.0; 2]).unwrap();
        let f = random_spec(&g, &BlockLayout::vector_scalar(2), 1);
        assert!(apply_projector(Arc::new(Helmholtz { d: 3 }), &f, None).is_err());
        let g3 = Grid::new(vec![4, 4, 4], vec![1.0; 3]).unwrap();
        let f3 = random_spec(&g3, &BlockLayout::vector_scalar(2), 1);
        assert!(apply_projector(Arc::new(Helmholtz { d: 3 }), &f3, None).is_err());
        let real = f.to_real().unwrap();
        assert!(apply_projector(Arc::new(Helmholtz { d: 2 }), &real, None).is_err());
    }
}
