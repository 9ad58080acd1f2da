//! Pointwise material tensors `L(x)` for each supported physics, with
//! passivity diagnostics and the complex rotation `L ↦ e^{iϑ} L`.

mod builders;
mod spatial;
pub mod tensors;

use std::collections::HashMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::linalg::{matvec_slice, min_hermitian_eigenvalue, CMatrix};
use crate::real::{is_finite_c, Real, C};
use crate::tensorfield::{BlockLayout, Field, FieldError, Grid, Representation};

pub use builders::{
    AcousticsSpec, BrinkmanSpec, ElastodynamicsSpec, LoveSpec, MaterialSpec, MaxwellSpec, NsSpec,
    OseenSpec, SchrodingerPotential, SchrodingerSpec, ThermoacousticSpec,
};
pub use spatial::{sample, Spatial};

#[derive(Debug, Error)]
pub enum PhysicsError {
    #[error("invalid frequency: {0}")]
    Frequency(String),
    #[error("material singular at point {point}: {what}")]
    MaterialSingular { point: usize, what: String },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("no rotation angle in (0, pi) gives a strictly positive imaginary part")]
    RotationNotFound,
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Which way the stored matrix maps the canonical pair.
///
/// `Direct`: `J = L E - s`. `Inverse`: the stored matrix sends `J + s` to `E`,
/// so the solver inverts it pointwise first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Direct,
    Inverse,
}

impl Orientation {
    pub fn flipped(self) -> Self {
        match self {
            Orientation::Direct => Orientation::Inverse,
            Orientation::Inverse => Orientation::Direct,
        }
    }
}

/// Dense complex matrix per grid point. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct LField<T: Real> {
    grid: Grid,
    layout: BlockLayout,
    orientation: Orientation,
    data: Vec<C<T>>,
}

impl<T: Real> LField<T> {
    pub fn new(
        grid: &Grid,
        layout: &BlockLayout,
        orientation: Orientation,
        data: Vec<C<T>>,
    ) -> Result<Self, PhysicsError> {
        let nc = layout.total_components();
        if data.len() != grid.num_points() * nc * nc {
            return Err(PhysicsError::Shape(format!(
                "{} entries for {} points of {nc}x{nc} matrices",
                data.len(),
                grid.num_points()
            )));
        }
        if let Some(i) = data.iter().position(|z| !is_finite_c(z)) {
            return Err(PhysicsError::MaterialSingular {
                point: i / (nc * nc),
                what: "non-finite entry".into(),
            });
        }
        Ok(Self {
            grid: grid.clone(),
            layout: layout.clone(),
            orientation,
            data,
        })
    }

    /// Builds point by point in parallel; the lowest failing point wins.
    pub fn from_fn<F>(
        grid: &Grid,
        layout: &BlockLayout,
        orientation: Orientation,
        f: F,
    ) -> Result<Self, PhysicsError>
    where
        F: Fn(usize) -> Result<CMatrix<T>, PhysicsError> + Sync,
    {
        let nc = layout.total_components();
        let mats: Vec<Result<CMatrix<T>, PhysicsError>> =
            (0..grid.num_points()).into_par_iter().map(&f).collect();
        let mut data = Vec::with_capacity(grid.num_points() * nc * nc);
        for (p, m) in mats.into_iter().enumerate() {
            let m = m?;
            if m.rows() != nc || m.cols() != nc {
                return Err(PhysicsError::Shape(format!(
                    "point {p}: {}x{} matrix for layout {layout}",
                    m.rows(),
                    m.cols()
                )));
            }
            data.extend_from_slice(m.as_slice());
        }
        Self::new(grid, layout, orientation, data)
    }

    /// Same matrix at every point.
    pub fn uniform(
        grid: &Grid,
        layout: &BlockLayout,
        orientation: Orientation,
        m: &CMatrix<T>,
    ) -> Result<Self, PhysicsError> {
        Self::from_fn(grid, layout, orientation, |_| Ok(m.clone()))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn layout(&self) -> &BlockLayout {
        &self.layout
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn ncomp(&self) -> usize {
        self.layout.total_components()
    }

    pub fn data(&self) -> &[C<T>] {
        &self.data
    }

    pub fn slice(&self, p: usize) -> &[C<T>] {
        let n2 = self.ncomp() * self.ncomp();
        &self.data[p * n2..(p + 1) * n2]
    }

    pub fn at(&self, p: usize) -> CMatrix<T> {
        let nc = self.ncomp();
        CMatrix::from_row_major(nc, nc, self.slice(p).to_vec())
    }

    /// True when every point carries the same matrix.
    pub fn is_uniform(&self) -> bool {
        let n2 = self.ncomp() * self.ncomp();
        let first = &self.data[..n2];
        self.data.chunks(n2).all(|c| c == first)
    }

    /// Largest entry modulus over all points.
    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, z| m.max(z.norm()))
    }

    pub fn scaled(&self, a: C<T>) -> Self {
        let mut out = self.clone();
        out.data.par_iter_mut().for_each(|z| *z *= a);
        out
    }

    /// Pointwise `L(x) f(x)` on a real-space field.
    pub fn apply(&self, f: &Field<T>) -> Result<Field<T>, PhysicsError> {
        if f.representation() != Representation::Real {
            return Err(FieldError::Representation {
                expected: Representation::Real,
                found: f.representation(),
            }
            .into());
        }
        if f.grid() != &self.grid || f.layout() != &self.layout {
            return Err(PhysicsError::Shape(format!(
                "field {} on {:?} vs material {} on {:?}",
                f.layout(),
                f.grid().dims(),
                self.layout,
                self.grid.dims()
            )));
        }
        let mut out = f.clone();
        self.apply_slice(f.values(), out.values_mut());
        Ok(out)
    }

    /// Pointwise product on raw point-major buffers.
    pub fn apply_slice(&self, x: &[C<T>], y: &mut [C<T>]) {
        let nc = self.ncomp();
        y.par_chunks_mut(nc)
            .zip(x.par_chunks(nc))
            .zip(self.data.par_chunks(nc * nc))
            .for_each(|((o, xi), m)| matvec_slice(m, nc, nc, xi, o));
    }
}

/// Outcome of [`passivity_check`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PassivityStatus {
    /// Minimum eigenvalue above the tolerance everywhere.
    Strict,
    /// Within the tolerance of zero somewhere, never below `-tol`.
    Marginal,
    Fail,
}

#[derive(Debug, Clone)]
pub struct PassivityReport<T: Real> {
    pub min_eigenvalues: Vec<T>,
    pub min: T,
    pub status: PassivityStatus,
    pub failing_points: Vec<usize>,
}

impl<T: Real> PassivityReport<T> {
    pub fn passes(&self) -> bool {
        self.status != PassivityStatus::Fail
    }
}

pub const PASSIVITY_TOL: f64 = 1e-12;

/// Smallest eigenvalue of `(L - L†)/(2i)` at every point.
pub fn passivity_check<T: Real>(l: &LField<T>) -> PassivityReport<T> {
    let n = l.grid.num_points();
    let mut cache: HashMap<Vec<u64>, T> = HashMap::new();
    let keys: Vec<Vec<u64>> = (0..n).map(|p| matrix_key(l.slice(p))).collect();
    for (p, k) in keys.iter().enumerate() {
        if !cache.contains_key(k) {
            cache.insert(k.clone(), min_hermitian_eigenvalue(&l.at(p).imaginary_part()));
        }
    }
    let min_eigenvalues: Vec<T> = keys.iter().map(|k| cache[k]).collect();
    let tol = T::lit(PASSIVITY_TOL);
    let failing_points: Vec<usize> = (0..n).filter(|&p| min_eigenvalues[p] < -tol).collect();
    let min = min_eigenvalues.iter().fold(T::infinity(), |a, &b| a.min(b));
    let status = if !failing_points.is_empty() {
        PassivityStatus::Fail
    } else if min <= tol {
        PassivityStatus::Marginal
    } else {
        PassivityStatus::Strict
    };
    PassivityReport {
        min_eigenvalues,
        min,
        status,
        failing_points,
    }
}

fn matrix_key<T: Real>(m: &[C<T>]) -> Vec<u64> {
    m.iter()
        .flat_map(|z| [z.re.to_f64_lossy().to_bits(), z.im.to_f64_lossy().to_bits()])
        .collect()
}

/// `e^{iϑ} L`.
pub fn gibiansky_rotation<T: Real>(l: &LField<T>, theta: T) -> LField<T> {
    l.scaled(C::from_polar(T::one(), theta))
}

pub const ROTATION_STEP: f64 = 1e-3;

/// Scans `ϑ = j·10⁻³` over `(0, π)` and returns the midpoint of the longest run
/// of angles where `Im(e^{iϑ}L)` is strictly positive definite everywhere.
pub fn find_rotation<T: Real>(l: &LField<T>) -> Result<T, PhysicsError> {
    let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut parts: Vec<(CMatrix<T>, CMatrix<T>)> = Vec::new();
    for p in 0..l.grid.num_points() {
        let key = matrix_key(l.slice(p));
        if !seen.contains_key(&key) {
            seen.insert(key, parts.len());
            let m = l.at(p);
            parts.push((m.imaginary_part(), m.hermitian_part()));
        }
    }
    let steps = (std::f64::consts::PI / ROTATION_STEP).ceil() as usize;
    let tol = T::lit(PASSIVITY_TOL);
    let ok: Vec<bool> = (1..steps)
        .into_par_iter()
        .map(|j| {
            let theta = T::lit(j as f64 * ROTATION_STEP);
            let (c, s) = (C::new(theta.cos(), T::zero()), C::new(theta.sin(), T::zero()));
            parts
                .iter()
                .all(|(im, re)| min_hermitian_eigenvalue(&(&im.scale(c) + &re.scale(s))) > tol)
        })
        .collect();
    let (mut best, mut best_len, mut start) = (0usize, 0usize, None);
    for (i, &pass) in ok.iter().chain(std::iter::once(&false)).enumerate() {
        match (pass, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                if i - s > best_len {
                    best_len = i - s;
                    best = s;
                }
                start = None;
            }
            _ => {}
        }
    }
    if best_len == 0 {
        return Err(PhysicsError::RotationNotFound);
    }
    // ok[i] holds angle (i + 1) * step
    let lo = (best + 1) as f64;
    let hi = (best + best_len) as f64;
    Ok(T::lit(0.5 * (lo + hi) * ROTATION_STEP))
}

/// Pointwise matrix inverse; flips the orientation.
pub fn invert_blockwise<T: Real>(l: &LField<T>) -> Result<LField<T>, PhysicsError> {
    let mut cache: HashMap<Vec<u64>, Option<CMatrix<T>>> = HashMap::new();
    let nc = l.ncomp();
    let mut data = Vec::with_capacity(l.data.len());
    for p in 0..l.grid.num_points() {
        let key = matrix_key(l.slice(p));
        let inv = cache
            .entry(key)
            .or_insert_with(|| l.at(p).inverse().ok().filter(|m| m.is_finite()));
        match inv {
            Some(m) => data.extend_from_slice(m.as_slice()),
            None => {
                return Err(PhysicsError::MaterialSingular {
                    point: p,
                    what: format!("{nc}x{nc} pointwise matrix is not invertible"),
                })
            }
        }
    }
    LField::new(&l.grid, &l.layout, l.orientation.flipped(), data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::clit;

    fn diag_field(g: &Grid, d: &[C<f64>]) -> LField<f64> {
        let layout = BlockLayout::new(vec![crate::Block::Scalar; d.len()]).unwrap();
        LField::uniform(g, &layout, Orientation::Direct, &CMatrix::from_diagonal(d)).unwrap()
    }

    #[test]
    fn rotation_scan() {
        let g = Grid::new(vec![2], vec![1.0]).unwrap();
        let id = diag_field(&g, &[clit(1.0, 0.0), clit(1.0, 0.0)]);
        let theta = find_rotation(&id).unwrap();
        assert!((theta - std::f64::consts::FRAC_PI_2).abs() < 2e-3);
        assert_eq!(passivity_check(&gibiansky_rotation(&id, theta)).status, PassivityStatus::Strict);
        let indefinite = diag_field(&g, &[clit(-1.0, 0.0), clit(1.0, 0.0)]);
        assert!(matches!(find_rotation(&indefinite), Err(PhysicsError::RotationNotFound)));
        let rotated = gibiansky_rotation(&indefinite, std::f64::consts::FRAC_PI_2);
        assert_eq!(passivity_check(&rotated).status, PassivityStatus::Fail);
        assert_eq!(gibiansky_rotation(&indefinite, 0.0), indefinite);
    }

    #[test]
    fn lossy_rotation_is_small_positive() {
        // real part positive, small loss: admissible angles hug zero
        let g = Grid::new(vec![2], vec![1.0]).unwrap();
        let l = diag_field(&g, &[clit(1.0, 0.01), clit(2.0, 0.0)]);
        let theta = find_rotation(&l).unwrap();
        assert!(theta > 0.0 && theta < std::f64::consts::PI);
        assert!(passivity_check(&gibiansky_rotation(&l, theta)).passes());
    }

    #[test]
    fn inversion() {
        let g = Grid::new(vec![3], vec![1.0]).unwrap();
        let l = diag_field(&g, &[clit(2.0, 0.0), clit(0.0, 4.0)]);
        let inv = invert_blockwise(&l).unwrap();
        assert_eq!(inv.orientation(), Orientation::Inverse);
        assert!((inv.at(1)[(0, 0)] - clit(0.5, 0.0)).norm() < 1e-15);
        assert!((inv.at(1)[(1, 1)] - clit(0.0, -0.25)).norm() < 1e-15);
        let layout = BlockLayout::vector_scalar(1);
        let sing = LField::<f64>::from_fn(&g, &layout, Orientation::Direct, |p| {
            Ok(if p == 2 {
                CMatrix::zeros(2, 2)
            } else {
                CMatrix::identity(2)
            })
        })
        .unwrap();
        match invert_blockwise(&sing) {
            Err(PhysicsError::MaterialSingular { point, .. }) => assert_eq!(point, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn passivity_reports_points() {
        let g = Grid::new(vec![4], vec![1.0]).unwrap();
        let layout = BlockLayout::scalar();
        let l = LField::<f64>::from_fn(&g, &layout, Orientation::Direct, |p| {
            Ok(CMatrix::from_diagonal(&[clit(1.0, if p == 3 { -0.5 } else { 0.0 })]))
        })
        .unwrap();
        let r = passivity_check(&l);
        assert_eq!(r.status, PassivityStatus::Fail);
        assert_eq!(r.failing_points, vec![3]);
        assert!((r.min + 0.5).abs() < 1e-15);
    }
}
