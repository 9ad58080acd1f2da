//! Bloch-shifted solves for sources `e^{ik₀·x} s₀ (1 + α_f(x))` and the
//! effective tensors relating the cell averages `E₀`, `J₀` to `s₀`.

use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::linalg::CMatrix;
use crate::physics::LField;
use crate::projectors::Projector;
use crate::real::{Real, C};
use crate::solver::{solve, Problem, SolveError, SolveOptions, SolveResult};
use crate::tensorfield::{BlockLayout, Field, Representation};

#[derive(Debug, Error)]
pub enum QuasiError {
    #[error("quasiperiodic setup: {0}")]
    Setup(String),
    #[error(
        "no convergence at k0 = {k0:?} (residual {residual:.3e} after {iterations} iterations); \
         k0 is likely close to the dispersion relation or the medium is nearly lossless"
    )]
    NearResonance {
        k0: Vec<f64>,
        residual: f64,
        iterations: usize,
    },
    #[error("basis solves failed for columns {failed:?}: {first}")]
    Partial { failed: Vec<usize>, first: Box<QuasiError> },
    #[error(transparent)]
    Solve(SolveError),
}

/// `e^{ik₀·x} s₀ (1 + α_f(x))`; `α_f` has its mean removed on construction.
#[derive(Debug, Clone)]
pub struct QuasiSource<T: Real> {
    k0: Vec<T>,
    s0: Vec<C<T>>,
    alpha: Field<T>,
}

impl<T: Real> QuasiSource<T> {
    pub fn new(k0: Vec<T>, s0: Vec<C<T>>, alpha: Field<T>) -> Result<Self, QuasiError> {
        if alpha.ncomp() != 1 || alpha.representation() != Representation::Real {
            return Err(QuasiError::Setup("alpha_f must be a real-space scalar field".into()));
        }
        if k0.len() != alpha.grid().ndim() {
            return Err(QuasiError::Setup(format!(
                "k0 has {} entries for a {}-axis grid",
                k0.len(),
                alpha.grid().ndim()
            )));
        }
        if k0.iter().any(|k| !k.is_finite()) || s0.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(QuasiError::Setup("k0 and s0 must be finite".into()));
        }
        let m = alpha.mean().map_err(|e| QuasiError::Setup(e.to_string()))?[0];
        let mut alpha = alpha;
        alpha.values_mut().iter_mut().for_each(|a| *a -= m);
        Ok(Self { k0, s0, alpha })
    }

    /// Unmodulated source (`α_f = 0`).
    pub fn plane(k0: Vec<T>, s0: Vec<C<T>>, grid: &crate::tensorfield::Grid) -> Result<Self, QuasiError> {
        Self::new(k0, s0, Field::zeros(grid, &BlockLayout::scalar(), Representation::Real))
    }

    pub fn k0(&self) -> &[T] {
        &self.k0
    }

    pub fn s0(&self) -> &[C<T>] {
        &self.s0
    }

    pub fn alpha(&self) -> &Field<T> {
        &self.alpha
    }

    /// The periodic factor `s₀ (1 + α_f)` on a given layout.
    fn periodic_source(&self, layout: &BlockLayout) -> Result<Field<T>, QuasiError> {
        let nc = layout.total_components();
        if self.s0.len() != nc {
            return Err(QuasiError::Setup(format!("s0 has {} entries, layout {layout} needs {nc}", self.s0.len())));
        }
        let grid = self.alpha.grid();
        let one = C::new(T::one(), T::zero());
        let data = (0..grid.num_points())
            .flat_map(|p| {
                let w = one + self.alpha.values()[p];
                self.s0.iter().map(move |s| *s * w)
            })
            .collect();
        Field::from_vec(grid, layout, Representation::Real, data).map_err(|e| QuasiError::Setup(e.to_string()))
    }
}

#[derive(Debug, Clone)]
pub struct QuasiSolution<T: Real> {
    pub e0: Vec<C<T>>,
    pub j0: Vec<C<T>>,
    /// Zero-mean periodic fluctuations (the `e^{ik₀·x}` factor is not applied).
    pub e_f: Field<T>,
    pub j_f: Field<T>,
    pub result: SolveResult<T>,
}

fn split_mean<T: Real>(f: &Field<T>) -> (Vec<C<T>>, Field<T>) {
    let m = f.mean().expect("real-space field");
    let mut fl = f.clone();
    let nc = m.len();
    fl.values_mut().chunks_mut(nc).for_each(|pt| pt.iter_mut().zip(&m).for_each(|(v, mi)| *v -= *mi));
    (m, fl)
}

fn classify(err: SolveError, k0: &[f64]) -> QuasiError {
    match err {
        SolveError::NotConverged(r) => QuasiError::NearResonance {
            k0: k0.to_vec(),
            residual: r.residual,
            iterations: r.iterations,
        },
        SolveError::SingularOperator { residual, iterations, .. } => QuasiError::NearResonance {
            k0: k0.to_vec(),
            residual,
            iterations,
        },
        e => QuasiError::Solve(e),
    }
}

/// Solves the periodic problem with `Γ₁(k + k₀)` and source `s₀(1 + α_f)`.
/// Any shift already present in `options` is replaced by `k₀`.
pub fn solve_quasiperiodic<T: Real>(
    l: &LField<T>,
    gamma: Arc<dyn Projector<T>>,
    q: &QuasiSource<T>,
    options: &SolveOptions<T>,
) -> Result<QuasiSolution<T>, QuasiError> {
    if q.alpha.grid() != l.grid() {
        return Err(QuasiError::Setup("alpha_f and material grids differ".into()));
    }
    let source = q.periodic_source(l.layout())?;
    let mut opts = options.clone();
    opts.shift = Some(q.k0.clone());
    let k0: Vec<f64> = q.k0.iter().map(|k| k.to_f64_lossy()).collect();
    let problem = Problem::new(l.clone(), gamma, source, opts).map_err(QuasiError::Solve)?;
    let result = solve(&problem).map_err(|e| classify(e, &k0))?;
    let (e0, e_f) = split_mean(&result.e);
    let (j0, j_f) = split_mean(&result.j);
    Ok(QuasiSolution { e0, j0, e_f, j_f, result })
}

#[derive(Debug, Clone)]
pub struct EffectiveTensors<T: Real> {
    pub l_e: CMatrix<T>,
    pub l_j: CMatrix<T>,
    pub k0: Vec<T>,
    pub omega: T,
}

/// One quasiperiodic solve per unit `s₀ = e_j`, run concurrently.
/// `omega` is carried as metadata only.
pub fn effective_tensors<T: Real>(
    l: &LField<T>,
    gamma: Arc<dyn Projector<T>>,
    k0: &[T],
    alpha: &Field<T>,
    omega: T,
    options: &SolveOptions<T>,
) -> Result<EffectiveTensors<T>, QuasiError> {
    let nc = l.ncomp();
    let columns: Vec<Result<QuasiSolution<T>, QuasiError>> = (0..nc)
        .into_par_iter()
        .map(|j| {
            let mut s0 = vec![C::new(T::zero(), T::zero()); nc];
            s0[j] = C::new(T::one(), T::zero());
            let q = QuasiSource::new(k0.to_vec(), s0, alpha.clone())?;
            solve_quasiperiodic(l, gamma.clone(), &q, options)
        })
        .collect();
    let mut l_e = CMatrix::zeros(nc, nc);
    let mut l_j = CMatrix::zeros(nc, nc);
    let mut failed = Vec::new();
    let mut first = None;
    for (j, col) in columns.into_iter().enumerate() {
        match col {
            Ok(sol) => {
                for i in 0..nc {
                    l_e[(i, j)] = sol.e0[i];
                    l_j[(i, j)] = sol.j0[i];
                }
            }
            Err(e) => {
                failed.push(j);
                first.get_or_insert(e);
            }
        }
    }
    if let Some(first) = first {
        return Err(QuasiError::Partial {
            failed,
            first: Box::new(first),
        });
    }
    Ok(EffectiveTensors {
        l_e,
        l_j,
        k0: k0.to_vec(),
        omega,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::{AcousticsSpec, MaterialSpec, Orientation, Spatial};
    use crate::projectors::{Helmholtz, ProjectorOp};
    use crate::real::clit;
    use crate::tensorfield::Grid;
    use nalgebra::DMatrix;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C<f64> {
        clit(re, im)
    }

    fn helm(d: usize) -> Arc<dyn Projector<f64>> {
        Arc::new(Helmholtz { d })
    }

    fn tight() -> SolveOptions<f64> {
        SolveOptions {
            tol: 1e-12,
            ..SolveOptions::default()
        }
    }

    /// Smooth part plus a term aligned with the two-phase quadrants, so the
    /// modulation couples back to the cell average.
    fn alpha(grid: &Grid) -> Field<f64> {
        let mut idx = vec![0; grid.ndim()];
        let mut x = vec![0.0; grid.ndim()];
        let data = (0..grid.num_points())
            .map(|p| {
                grid.multi_index(p, &mut idx);
                grid.position(p, &mut x);
                let quad: usize = idx.iter().zip(grid.dims()).map(|(&m, &n)| 2 * m / n).sum();
                let parity = if quad % 2 == 0 { 1.0 } else { -1.0 };
                c(0.4 * (2.0 * PI * x[0]).cos() + 0.3 * parity + 0.2, 0.0)
            })
            .collect();
        Field::from_vec(grid, &BlockLayout::scalar(), Representation::Real, data).unwrap()
    }

    fn two_phase(grid: &Grid, delta: f64) -> LField<f64> {
        MaterialSpec::Acoustics(AcousticsSpec {
            d: 2,
            omega: c(3.0, 0.0),
            kappa: Spatial::Checkerboard(vec![c(1.0, -delta), c(2.0, -2.0 * delta)]),
            rho: CMatrix::identity(2).into(),
            scale_by_omega: false,
        })
        .build(grid)
        .unwrap()
    }

    #[test]
    fn mean_is_removed() {
        let g = Grid::new(vec![6, 6], vec![1.0, 1.0]).unwrap();
        let q = QuasiSource::new(vec![0.1, 0.2], vec![c(1.0, 0.0); 3], alpha(&g)).unwrap();
        let m = q.alpha().mean().unwrap()[0];
        assert!(m.norm() <= 1e-12 * q.alpha().norm());
        assert!(QuasiSource::new(vec![0.1], vec![c(1.0, 0.0); 3], alpha(&g)).is_err());
    }

    #[test]
    fn scalar_material_gives_projected_source() {
        let g = Grid::new(vec![6, 6], vec![1.0, 1.0]).unwrap();
        let layout = BlockLayout::vector_scalar(2);
        let cst = c(2.0, -0.5);
        let l = LField::uniform(&g, &layout, Orientation::Direct, &CMatrix::identity(3).scale(cst)).unwrap();
        let k0 = [0.7, -1.3];
        let s0 = vec![c(0.2, 0.1), c(-0.4, 0.0), c(1.0, 0.3)];
        let q = QuasiSource::plane(k0.to_vec(), s0.clone(), &g).unwrap();
        let sol = solve_quasiperiodic(&l, helm(2), &q, &tight()).unwrap();
        let want = helm(2).gamma1(&k0).matvec(&s0);
        for (a, b) in sol.e0.iter().zip(&want) {
            assert!((a - b / cst).norm() < 1e-12);
        }
        assert!(sol.e_f.norm() < 1e-12);
        let eff = effective_tensors(&l, helm(2), &k0, q.alpha(), 3.0, &tight()).unwrap();
        let diff = &eff.l_e - &helm(2).gamma1(&k0).scale(c(1.0, 0.0) / cst);
        assert!(diff.max_abs() < 1e-12);
    }

    #[test]
    fn constant_anisotropic_material_matches_pseudo_solve() {
        let g = Grid::new(vec![4, 4], vec![1.0, 1.0]).unwrap();
        let layout = BlockLayout::vector_scalar(2);
        let m = CMatrix::from_row_major(
            3,
            3,
            vec![c(2.0, 0.3), c(0.4, 0.0), c(0.1, 0.1), c(0.4, 0.0), c(3.0, 0.2), c(0.0, 0.0), c(0.1, 0.1), c(0.0, 0.0), c(-1.5, 0.4)],
        );
        let l = LField::uniform(&g, &layout, Orientation::Direct, &m).unwrap();
        let k0 = [0.9, 0.4];
        let s0 = vec![c(1.0, 0.0), c(0.5, -0.5), c(0.2, 0.0)];
        let q = QuasiSource::plane(k0.to_vec(), s0.clone(), &g).unwrap();
        let sol = solve_quasiperiodic(&l, helm(2), &q, &tight()).unwrap();
        let to_na = |a: &CMatrix<f64>| DMatrix::from_row_slice(3, 3, a.as_slice());
        let gm = to_na(&helm(2).gamma1(&k0));
        let a = &gm * to_na(&m) * &gm;
        let rhs = &gm * DMatrix::from_column_slice(3, 1, &s0);
        let want = a.pseudo_inverse(1e-10).unwrap() * rhs;
        for i in 0..3 {
            assert!((sol.e0[i] - want[i]).norm() < 1e-10, "{i}");
        }
    }

    #[test]
    fn fluctuations_have_zero_mean_and_depend_affinely_on_alpha() {
        let g = Grid::new(vec![8, 8], vec![1.0, 1.0]).unwrap();
        let l = two_phase(&g, 0.3);
        let k0 = [1.1, 0.5];
        let q = QuasiSource::new(k0.to_vec(), vec![c(1.0, 0.0), c(0.0, 1.0), c(0.5, 0.0)], alpha(&g)).unwrap();
        let sol = solve_quasiperiodic(&l, helm(2), &q, &tight()).unwrap();
        for f in [&sol.e_f, &sol.j_f] {
            let m: f64 = f.mean().unwrap().iter().map(|z| z.norm()).sum();
            assert!(m <= 1e-12 * f.norm().max(1.0));
        }
        let eff = |eps: f64| {
            effective_tensors(&l, helm(2), &k0, &alpha(&g).scale(c(eps, 0.0)), 3.0, &tight()).unwrap()
        };
        let (e0, e1, e2) = (eff(0.0), eff(0.05), eff(0.1));
        let second = &(&e2.l_e - &e1.l_e.scale(c(2.0, 0.0))) + &e0.l_e;
        assert!(second.max_abs() <= 1e-6 * e0.l_e.max_abs());
        assert!((&e1.l_e - &e0.l_e).max_abs() > 1e-6);
    }

    #[test]
    fn reciprocal_shift_reindexes_symbols() {
        let g = Grid::new(vec![8, 6], vec![1.0, 2.0]).unwrap();
        let k0 = [0.3, -0.2];
        let kg = [0.3 + 2.0 * PI, -0.2];
        let a = ProjectorOp::new(helm(2), &g, Some(&k0)).unwrap();
        let b = ProjectorOp::new(helm(2), &g, Some(&kg)).unwrap();
        let mut idx = [0usize; 2];
        for p in 0..g.num_points() {
            g.multi_index(p, &mut idx);
            // signed index i on axis 0; i + 1 must stay in the sampled range
            let signed = if idx[0] < 4 { idx[0] as i64 } else { idx[0] as i64 - 8 };
            if signed + 1 > 3 {
                continue;
            }
            let shifted = ((signed + 1).rem_euclid(8)) as usize * 6 + idx[1];
            let diff = &b.symbol_at(p) - &a.symbol_at(shifted);
            assert!(diff.max_abs() < 1e-12);
        }
    }

    #[test]
    fn effective_tensor_grows_as_loss_vanishes() {
        let g = Grid::new(vec![8, 8], vec![1.0, 1.0]).unwrap();
        let omega = 3.0;
        let kr: f64 = 1.0;
        // |k0|² = ω²ρ/κ_r
        let k0 = [omega / kr.sqrt() * 0.6, omega / kr.sqrt() * 0.8];
        let mut norms = Vec::new();
        for delta in [1e-1, 1e-2, 1e-3] {
            let l = MaterialSpec::Acoustics(AcousticsSpec {
                d: 2,
                omega: c(omega, 0.0),
                kappa: c(kr, -kr * delta).into(),
                rho: CMatrix::identity(2).into(),
                scale_by_omega: false,
            })
            .build(&g)
            .unwrap();
            let eff = effective_tensors(&l, helm(2), &k0, &alpha(&g).scale(c(0.0, 0.0)), omega, &tight()).unwrap();
            norms.push(eff.l_e.frobenius_norm());
        }
        assert!(norms[0] < norms[1] && norms[1] < norms[2], "{norms:?}");
    }

    #[test]
    fn lossless_resonance_is_diagnosed() {
        let g = Grid::new(vec![4, 4], vec![1.0, 1.0]).unwrap();
        let omega = 3.0;
        let l = MaterialSpec::Acoustics(AcousticsSpec {
            d: 2,
            omega: c(omega, 0.0),
            kappa: c(1.0, 0.0).into(),
            rho: CMatrix::identity(2).into(),
            scale_by_omega: false,
        })
        .build(&g)
        .unwrap();
        let q = QuasiSource::plane(vec![omega, 0.0], vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)], &g).unwrap();
        let err = solve_quasiperiodic(&l, helm(2), &q, &tight()).unwrap_err();
        assert!(matches!(err, QuasiError::NearResonance { .. }), "{err}");
    }
}
