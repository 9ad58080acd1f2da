use super::SolveError;
use crate::linalg::CMatrix;
use crate::real::{Real, C};
use crate::tensorfield::{FftPlan, Field, Representation};

/// `W = ∫ |p - s|² + (E″)² dx` with `p = ∇·A∇ψ + (E′ - V)ψ`.
///
/// `ψ`, `V` and `s` are real-space scalar fields; `ψ` must have unit norm.
pub fn residual_functional<T: Real>(
    psi: &Field<T>,
    a: &CMatrix<T>,
    v: &Field<T>,
    e1: T,
    e2: T,
    s: &Field<T>,
) -> Result<T, SolveError> {
    let grid = psi.grid();
    for f in [psi, v, s] {
        if f.ncomp() != 1 || f.grid() != grid || f.representation() != Representation::Real {
            return Err(SolveError::Setup("psi, V and s must be real-space scalar fields on one grid".into()));
        }
    }
    let n = grid.ndim();
    if a.rows() != n || a.cols() != n {
        return Err(SolveError::Setup(format!("A must be {n}x{n}")));
    }
    let norm2 = psi.norm().powi(2);
    if (norm2 - T::one()).abs() > T::lit(1e-10) {
        return Err(SolveError::Normalization(norm2.to_f64_lossy()));
    }
    let plan = FftPlan::new(grid);
    let mut lap = psi.values().to_vec();
    plan.forward(&mut lap, 1);
    let mut k = vec![T::zero(); n];
    for (p, z) in lap.iter_mut().enumerate() {
        grid.wavevector_flat(p, &mut k);
        let mut q = C::new(T::zero(), T::zero());
        for i in 0..n {
            for j in 0..n {
                q += a[(i, j)] * (k[i] * k[j]);
            }
        }
        *z = -q * *z;
    }
    plan.inverse(&mut lap, 1);
    let e1c = C::new(e1, T::zero());
    let diff: Vec<C<T>> = (0..grid.num_points())
        .map(|p| lap[p] + (e1c - v.values()[p]) * psi.values()[p] - s.values()[p])
        .collect();
    let r = Field::from_vec(grid, psi.layout(), Representation::Real, diff)?;
    Ok(r.norm().powi(2) + e2 * e2 * T::lit(grid.volume()))
}
