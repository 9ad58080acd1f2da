use std::sync::Arc;

use super::perm::{MultiElectronGrid, Permutation};
use super::FermionError;
use crate::linalg::{hermitian_eigen, CMatrix};
use crate::physics::{SchrodingerPotential, SchrodingerSpec, Spatial};
use crate::projectors::Schrodinger;
use crate::real::{czero, Real, C};
use crate::solver::{solve, Problem, SolveOptions};
use crate::tensorfield::{BlockLayout, FftPlan, Field, Grid, Representation};

/// Normalization is checked to this (absolute) tolerance.
pub const NORM_TOLERANCE: f64 = 1e-10;
/// Dense spectral checks run up to this many grid points.
pub const DENSE_LIMIT: usize = 1024;
/// Minimal distance to the rest of the spectrum for a nondegenerate level.
pub const GAP_TOLERANCE: f64 = 1e-8;

fn check_scalar<T: Real>(f: &Field<T>, what: &str) -> Result<(), FermionError> {
    if f.ncomp() != 1 || f.representation() != Representation::Real {
        return Err(FermionError::Layout(format!("{what} must be a real-space scalar field")));
    }
    Ok(())
}

/// Index of the first component of largest magnitude.
fn pivot<T: Real>(values: &[C<T>]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if v.norm() > values[best].norm() {
            best = i;
        }
    }
    best
}

/// Scales to unit norm and rotates the largest-magnitude component onto the
/// positive real axis.
pub fn normalize<T: Real>(psi: &Field<T>) -> Result<Field<T>, FermionError> {
    check_scalar(psi, "psi")?;
    let n = psi.norm();
    if !(n > T::zero()) {
        return Err(FermionError::ZeroField);
    }
    let p = psi.values()[pivot(psi.values())];
    let phase = p.conj() / p.norm();
    Ok(psi.scale(phase.unscale(n)))
}

fn check_normalized<T: Real>(psi: &Field<T>) -> Result<(), FermionError> {
    let n2 = psi.norm().powi(2);
    if (n2 - T::one()).abs() > T::lit(NORM_TOLERANCE) {
        return Err(FermionError::Normalization(n2.to_f64_lossy()));
    }
    Ok(())
}

/// `E′ = ∫ |ψ|² V′`.
pub fn perturbation_energy<T: Real>(psi: &Field<T>, v_prime: &Field<T>) -> Result<T, FermionError> {
    check_scalar(psi, "psi")?;
    check_scalar(v_prime, "V'")?;
    if psi.grid() != v_prime.grid() {
        return Err(FermionError::Layout("psi and V' live on different grids".into()));
    }
    check_normalized(psi)?;
    let w = T::lit(psi.grid().point_weight());
    let e: C<T> = psi
        .values()
        .iter()
        .zip(v_prime.values())
        .map(|(p, v)| *v * p.norm_sqr())
        .fold(czero(), |a, b| a + b)
        .scale(w);
    if e.im.abs() > T::lit(1e-12) {
        return Err(FermionError::ComplexEnergy(e.im.to_f64_lossy()));
    }
    Ok(e.re)
}

/// `H = -∇·A∇ + V` on a configuration grid without spin axes.
#[derive(Debug, Clone)]
pub struct SchrodingerSystem<T: Real> {
    pub grid: MultiElectronGrid,
    pub a: CMatrix<T>,
    pub v: Field<T>,
}

impl<T: Real> SchrodingerSystem<T> {
    pub fn new(grid: MultiElectronGrid, a: CMatrix<T>, v: Field<T>) -> Result<Self, FermionError> {
        if grid.spin() {
            return Err(FermionError::Unsupported("spin axes are not differentiated; the Fourier solver needs position axes only".into()));
        }
        let n = grid.grid().ndim();
        if a.rows() != n || a.cols() != n {
            return Err(FermionError::Layout(format!("A must be {n}x{n}")));
        }
        check_scalar(&v, "V")?;
        if v.grid() != grid.grid() {
            return Err(FermionError::Layout("V lives on a different grid".into()));
        }
        Ok(Self { grid, a, v })
    }

    fn kinetic_symbol(&self, grid: &Grid, p: usize, k: &mut [T]) -> C<T> {
        grid.wavevector_flat(p, k);
        let mut q = czero::<T>();
        for i in 0..k.len() {
            for j in 0..k.len() {
                q += self.a[(i, j)] * (k[i] * k[j]);
            }
        }
        q
    }

    /// Dense matrix of `H` on grid values (spectral derivatives).
    pub fn dense_hamiltonian(&self) -> CMatrix<T> {
        let grid = self.grid.grid();
        let n = grid.num_points();
        let plan = FftPlan::new(grid);
        let mut k = vec![T::zero(); grid.ndim()];
        let sym: Vec<C<T>> = (0..n).map(|p| self.kinetic_symbol(grid, p, &mut k)).collect();
        let mut h = CMatrix::zeros(n, n);
        let mut col = vec![czero::<T>(); n];
        for j in 0..n {
            col.iter_mut().for_each(|z| *z = czero());
            col[j] = C::new(T::one(), T::zero());
            plan.forward(&mut col, 1);
            col.iter_mut().zip(&sym).for_each(|(z, s)| *z *= *s);
            plan.inverse(&mut col, 1);
            for i in 0..n {
                h[(i, j)] = col[i];
            }
            h[(j, j)] += self.v.values()[j];
        }
        h.hermitian_part()
    }

    /// Ascending spectrum of `H` on antisymmetric states, with eigenvectors as
    /// columns; other states are pushed above the whole spectrum and dropped.
    pub fn antisymmetric_spectrum(&self) -> Result<(Vec<T>, CMatrix<T>), FermionError> {
        let n = self.grid.grid().num_points();
        if n > DENSE_LIMIT {
            return Err(FermionError::Unsupported(format!("dense spectra are limited to {DENSE_LIMIT} points")));
        }
        let h = self.dense_hamiltonian();
        let electrons = self.grid.electrons();
        if electrons == 1 {
            let e = hermitian_eigen(&h);
            return Ok((e.values, e.vectors));
        }
        if electrons > super::MAX_BRUTE_FORCE_ELECTRONS {
            return Err(FermionError::TooManyElectrons {
                electrons,
                max: super::MAX_BRUTE_FORCE_ELECTRONS,
            });
        }
        let perms = Permutation::all(electrons);
        let w = T::one() / T::count(perms.len());
        let mut proj = CMatrix::zeros(n, n);
        for sigma in &perms {
            let s = w * T::lit(sigma.sign() as f64);
            for (p, q) in self.grid.permutation_table(sigma).into_iter().enumerate() {
                proj[(p, q)] += C::new(s, T::zero());
            }
        }
        let shift = T::lit(10.0) * (h.frobenius_norm() + T::one());
        let comp = &CMatrix::identity(n) - &proj;
        let ha = &(&(&proj * &h) * &proj) + &comp.scale(C::new(shift, T::zero()));
        let e = hermitian_eigen(&ha);
        let keep: Vec<usize> = (0..n).filter(|&i| e.values[i] < shift * T::lit(0.5)).collect();
        let values = keep.iter().map(|&i| e.values[i]).collect();
        let vectors = CMatrix::from_fn(n, keep.len(), |r, c| e.vectors[(r, keep[c])]);
        Ok((values, vectors))
    }

    /// The `index`-th antisymmetric eigenpair (ascending), normalized with
    /// the phase convention of [`normalize`].
    pub fn dense_eigenstate(&self, index: usize) -> Result<(T, Field<T>), FermionError> {
        let (values, vectors) = self.antisymmetric_spectrum()?;
        if index >= values.len() {
            return Err(FermionError::Setup(format!("only {} antisymmetric states on this grid", values.len())));
        }
        let grid = self.grid.grid();
        let data = (0..grid.num_points()).map(|p| vectors[(p, index)]).collect();
        let psi = Field::from_vec(grid, &BlockLayout::scalar(), Representation::Real, data)?;
        Ok((values[index], normalize(&psi)?))
    }

    /// Checks that `energy` is a nondegenerate antisymmetric eigenvalue.
    pub fn check_nondegenerate(&self, energy: T) -> Result<(), FermionError> {
        let (values, _) = self.antisymmetric_spectrum()?;
        let mut d: Vec<T> = values.iter().map(|v| (*v - energy).abs()).collect();
        d.sort_by(|a, b| a.partial_cmp(b).expect("finite spectrum"));
        let scale = energy.abs().max(T::one());
        if d.is_empty() || d[0] > T::lit(1e-6) * scale {
            return Err(FermionError::NotEigenvalue {
                energy: energy.to_f64_lossy(),
                distance: d.first().map_or(f64::INFINITY, |x| x.to_f64_lossy()),
            });
        }
        if d.len() > 1 && d[1] <= T::lit(GAP_TOLERANCE) {
            return Err(FermionError::Degenerate {
                energy: energy.to_f64_lossy(),
                gap: d[1].to_f64_lossy(),
            });
        }
        Ok(())
    }

    /// `(∇ψ, ψ)` with spectral derivatives.
    pub fn e_field(&self, psi: &Field<T>) -> Result<Field<T>, FermionError> {
        let grid = self.grid.grid();
        let n = grid.ndim();
        let hat = psi.to_fourier()?;
        let mut k = vec![T::zero(); n];
        let data = (0..grid.num_points())
            .flat_map(|p| {
                grid.wavevector_flat(p, &mut k);
                let v = hat.values()[p];
                let mut out: Vec<C<T>> = k.iter().map(|ki| C::new(T::zero(), *ki) * v).collect();
                out.push(v);
                out
            })
            .collect();
        Ok(Field::from_vec(grid, &BlockLayout::vector_scalar(n), Representation::Fourier, data)?.to_real()?)
    }
}

#[derive(Debug, Clone)]
pub struct FirstOrder<T: Real> {
    pub e_prime: T,
    pub psi_prime: Field<T>,
    /// `|∫ ψ′ψ̄ + ψψ̄′|`.
    pub orthogonality: T,
    pub residual: T,
    pub iterations: usize,
}

/// First-order change of a nondegenerate state under `V → V + εV′`.
///
/// Solves `J = L E - s` with `s = (0, (V′ - E′)ψ)` through the Fourier
/// solver with the `(∇ψ, ψ)` direction deflated, then removes the
/// remaining `ψ` component.
pub fn perturbation_solve<T: Real>(
    system: &SchrodingerSystem<T>,
    psi: &Field<T>,
    energy: T,
    v_prime: &Field<T>,
    options: &SolveOptions<T>,
) -> Result<FirstOrder<T>, FermionError> {
    check_scalar(psi, "psi")?;
    if psi.grid() != system.grid.grid() {
        return Err(FermionError::Layout("psi lives on a different grid".into()));
    }
    check_normalized(psi)?;
    if system.grid.grid().num_points() <= DENSE_LIMIT {
        system.check_nondegenerate(energy)?;
    }
    let e_prime = perturbation_energy(psi, v_prime)?;
    let grid = system.grid.grid();
    let n = grid.ndim();
    let spec = SchrodingerSpec {
        a: system.a.clone(),
        energy: C::new(energy, T::zero()),
        potential: SchrodingerPotential::Full(Spatial::PerPoint(system.v.values().to_vec())),
    };
    let l = spec.build(grid)?;
    let layout = BlockLayout::vector_scalar(n);
    let ep = C::new(e_prime, T::zero());
    let src: Vec<C<T>> = (0..grid.num_points())
        .flat_map(|p| {
            let mut v = vec![czero::<T>(); n + 1];
            v[n] = (v_prime.values()[p] - ep) * psi.values()[p];
            v
        })
        .collect();
    let source = Field::from_vec(grid, &layout, Representation::Real, src)?;
    let mut opts = options.clone();
    opts.deflation.push(system.e_field(psi)?);
    let projector = Arc::new(Schrodinger {
        electrons: system.grid.electrons(),
        d_space: system.grid.d_space(),
    });
    let problem = Problem::new(l, projector, source, opts)?;
    let result = solve(&problem)?;
    let mut psi_prime = result.e.block(1);
    let overlap = psi.inner_product(&psi_prime)?;
    psi_prime.add_scaled(-overlap, psi)?;
    let orthogonality = psi.inner_product(&psi_prime)?.re.abs() * T::lit(2.0);
    Ok(FirstOrder {
        e_prime,
        psi_prime,
        orthogonality,
        residual: result.residual,
        iterations: result.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::clit;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn well(points: usize, length: f64) -> SchrodingerSystem<f64> {
        let g = MultiElectronGrid::new(1, 1, false, points, length).unwrap();
        let v = Field::from_fn(g.grid(), &BlockLayout::scalar(), |x: &[f64], v| {
            let y = x[0] - length / 2.0;
            v[0] = clit(0.5 * y * y, 0.0)
        });
        SchrodingerSystem::new(g, CMatrix::identity(1).scale(clit(0.5, 0.0)), v).unwrap()
    }

    fn scalar(g: &Grid, f: impl Fn(f64) -> f64 + Sync) -> Field<f64> {
        Field::from_fn(g, &BlockLayout::scalar(), |x: &[f64], v| v[0] = clit(f(x[0]), 0.0))
    }

    #[test]
    fn normalization_and_phase() {
        let g = Grid::new(vec![4, 4], vec![1.0, 1.0]).unwrap();
        let one = Field::from_fn(&g, &BlockLayout::scalar(), |_: &[f64], v| v[0] = clit(1.0, 0.0));
        let n = normalize(&one).unwrap();
        assert!(n.values().iter().all(|z| (z - clit(1.0, 0.0)).norm() < 1e-15));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let data: Vec<C<f64>> = (0..16).map(|_| clit(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let psi = Field::from_vec(&g, &BlockLayout::scalar(), Representation::Real, data).unwrap();
        let a = normalize(&psi).unwrap();
        assert!((a.norm().powi(2) - 1.0).abs() < 1e-14);
        let b = normalize(&psi.scale(clit(-2.0, 3.0))).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-15);
        assert!(matches!(normalize(&one.scale(clit(0.0, 0.0))), Err(FermionError::ZeroField)));
    }

    #[test]
    fn energy_shift_examples() {
        let sys = well(24, 12.0);
        let (_, psi) = sys.dense_eigenstate(0).unwrap();
        let g = sys.grid.grid();
        // odd under the periodic reflection x -> 12 - x
        let odd = scalar(g, |x| (2.0 * std::f64::consts::PI * (x - 6.0) / 12.0).sin());
        assert!(perturbation_energy(&psi, &odd).unwrap().abs() < 1e-12);
        assert!((perturbation_energy(&psi, &scalar(g, |_| 1.0)).unwrap() - 1.0).abs() < 1e-13);
        assert!(matches!(
            perturbation_energy(&psi.scale(clit(1.1, 0.0)), &odd),
            Err(FermionError::Normalization(_))
        ));
    }

    #[test]
    fn constant_perturbation_leaves_the_state() {
        let sys = well(16, 10.0);
        let (e, psi) = sys.dense_eigenstate(0).unwrap();
        let c = scalar(sys.grid.grid(), |_| 0.3);
        let r = perturbation_solve(&sys, &psi, e, &c, &SolveOptions::default()).unwrap();
        assert!((r.e_prime - 0.3).abs() < 1e-12);
        assert!(r.psi_prime.norm() < 1e-12);
    }

    #[test]
    fn orthogonality_for_random_perturbations() {
        let sys = well(20, 10.0);
        let (e, psi) = sys.dense_eigenstate(1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..3 {
            let data: Vec<C<f64>> = (0..20).map(|_| clit(rng.gen_range(-1.0..1.0), 0.0)).collect();
            let vp = Field::from_vec(sys.grid.grid(), &BlockLayout::scalar(), Representation::Real, data).unwrap();
            let r = perturbation_solve(&sys, &psi, e, &vp, &SolveOptions { tol: 1e-10, ..SolveOptions::default() }).unwrap();
            assert!(r.orthogonality <= 1e-10);
        }
    }

    #[test]
    fn energy_checks() {
        let sys = well(16, 10.0);
        let (e, psi) = sys.dense_eigenstate(0).unwrap();
        let vp = scalar(sys.grid.grid(), |x| x);
        assert!(matches!(
            perturbation_solve(&sys, &psi, e + 0.1, &vp, &SolveOptions::default()),
            Err(FermionError::NotEigenvalue { .. })
        ));
        // free particle on a ring: ±k states are degenerate
        let g = MultiElectronGrid::new(1, 1, false, 8, 1.0).unwrap();
        let z = Field::zeros(g.grid(), &BlockLayout::scalar(), Representation::Real);
        let free = SchrodingerSystem::new(g, CMatrix::identity(1), z).unwrap();
        let k2 = (2.0 * std::f64::consts::PI).powi(2);
        assert!(matches!(free.check_nondegenerate(k2), Err(FermionError::Degenerate { .. })));
        assert!(free.check_nondegenerate(0.0).is_ok());
    }

    #[test]
    fn two_electron_ground_state_is_antisymmetric() {
        let g = MultiElectronGrid::new(2, 1, false, 6, 6.0).unwrap();
        let v = Field::from_fn(g.grid(), &BlockLayout::scalar(), |x: &[f64], v| {
            v[0] = clit(0.5 * ((x[0] - 3.0).powi(2) + (x[1] - 3.0).powi(2)), 0.0)
        });
        let sys = SchrodingerSystem::new(g.clone(), CMatrix::identity(2).scale(clit(0.5, 0.0)), v).unwrap();
        let (_, psi) = sys.dense_eigenstate(0).unwrap();
        let anti = super::super::antisymmetrize_full(&psi, &g).unwrap();
        assert!(anti.max_abs_diff(&psi) < 1e-10);
    }
}
