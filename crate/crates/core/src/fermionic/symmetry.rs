use rayon::prelude::*;

use super::perm::{MultiElectronGrid, Permutation};
use super::FermionError;
use crate::physics::LField;
use crate::real::{czero, Real, C};
use crate::tensorfield::{Block, BlockLayout, Field, Representation};

/// Brute-force sums are limited to `N! ≤ 24`.
pub const MAX_BRUTE_FORCE_ELECTRONS: usize = 4;

/// Tolerance (relative) for the tail antisymmetry precondition.
pub const TAIL_TOLERANCE: f64 = 1e-10;

fn check_scalar<T: Real>(phi: &Field<T>, g: &MultiElectronGrid) -> Result<(), FermionError> {
    if phi.ncomp() != 1 || phi.grid() != g.grid() || phi.representation() != Representation::Real {
        return Err(FermionError::Layout("expected a real-space scalar field on the configuration grid".into()));
    }
    Ok(())
}

fn check_brute_force(g: &MultiElectronGrid) -> Result<(), FermionError> {
    if g.electrons() > MAX_BRUTE_FORCE_ELECTRONS {
        return Err(FermionError::TooManyElectrons {
            electrons: g.electrons(),
            max: MAX_BRUTE_FORCE_ELECTRONS,
        });
    }
    Ok(())
}

/// `Σ_σ w_σ R_σ φ` for a scalar field.
fn signed_sum<T: Real>(phi: &Field<T>, g: &MultiElectronGrid, terms: &[(Permutation, T)]) -> Field<T> {
    let mut out = vec![czero::<T>(); phi.values().len()];
    let src = phi.values();
    for (sigma, w) in terms {
        let table = g.permutation_table(sigma);
        out.par_iter_mut().zip(table.par_iter()).for_each(|(o, &q)| *o += src[q].scale(*w));
    }
    Field::from_vec(phi.grid(), phi.layout(), Representation::Real, out).expect("same shape as input")
}

fn signed_weights<T: Real>(perms: Vec<Permutation>) -> Vec<(Permutation, T)> {
    let w = T::one() / T::count(perms.len());
    perms
        .into_iter()
        .map(|p| {
            let s = T::lit(p.sign() as f64);
            (p, s * w)
        })
        .collect()
}

/// `(1/N!) Σ_π sign(π) φ∘π` over all electron permutations.
pub fn antisymmetrize_full<T: Real>(phi: &Field<T>, g: &MultiElectronGrid) -> Result<Field<T>, FermionError> {
    check_scalar(phi, g)?;
    check_brute_force(g)?;
    Ok(signed_sum(phi, g, &signed_weights(Permutation::all(g.electrons()))))
}

/// Permutations of `0..n` that fix `0` and `1` pointwise and permute the tail.
fn tail_permutations(n: usize) -> Vec<Permutation> {
    if n <= 2 {
        return vec![Permutation::identity(n)];
    }
    Permutation::all(n - 2)
        .into_iter()
        .map(|p| {
            let mut map = vec![0, 1];
            map.extend(p.map().iter().map(|&i| i + 2));
            Permutation::new(map).expect("valid")
        })
        .collect()
}

/// Largest relative violation of antisymmetry under adjacent tail swaps.
pub fn tail_violation<T: Real>(phi: &Field<T>, g: &MultiElectronGrid) -> Result<T, FermionError> {
    check_scalar(phi, g)?;
    let n = g.electrons();
    let scale = phi.norm();
    if scale.is_zero() {
        return Ok(T::zero());
    }
    let mut worst = T::zero();
    for i in 2..n.saturating_sub(1) {
        let swapped = signed_sum(phi, g, &[(Permutation::transposition(n, i, i + 1), T::one())]);
        let mut sum = swapped;
        sum.add_scaled(C::new(T::one(), T::zero()), phi).expect("same shape");
        worst = worst.max(sum.norm() / scale);
    }
    Ok(worst)
}

/// Antisymmetrizer through the pair-insertion sum: average over which pair of
/// electrons occupies the first two slots, with the remaining electrons in
/// increasing order and the parity of the resulting ordering.
///
/// The sum is exact once `φ` is antisymmetric in its first two slots and in
/// its tail; the first-slot pair is antisymmetrized here. With
/// `assume_tail_symmetry` the tail is checked instead of symmetrized.
pub fn lambda_a<T: Real>(
    phi: &Field<T>,
    g: &MultiElectronGrid,
    assume_tail_symmetry: bool,
) -> Result<Field<T>, FermionError> {
    check_scalar(phi, g)?;
    let n = g.electrons();
    if n == 1 {
        return Ok(phi.clone());
    }
    let phi = if assume_tail_symmetry {
        let v = tail_violation(phi, g)?;
        if v > T::lit(TAIL_TOLERANCE) {
            return Err(FermionError::TailSymmetry(v.to_f64_lossy()));
        }
        phi.clone()
    } else {
        if n > MAX_BRUTE_FORCE_ELECTRONS + 2 {
            return Err(FermionError::TooManyElectrons {
                electrons: n,
                max: MAX_BRUTE_FORCE_ELECTRONS + 2,
            });
        }
        signed_sum(phi, g, &signed_weights(tail_permutations(n)))
    };
    let half = T::lit(0.5);
    let paired = signed_sum(
        &phi,
        g,
        &[(Permutation::identity(n), half), (Permutation::transposition(n, 0, 1), -half)],
    );
    let mut terms = Vec::with_capacity(n * (n - 1) / 2);
    for a in 0..n {
        for b in a + 1..n {
            let mut map = vec![a, b];
            map.extend((0..n).filter(|&i| i != a && i != b));
            terms.push(Permutation::new(map).expect("valid"));
        }
    }
    Ok(signed_sum(&paired, g, &signed_weights(terms)))
}

fn check_vector<T: Real>(p: &Field<T>, g: &MultiElectronGrid) -> Result<(), FermionError> {
    let want = g.electrons() * g.d_space();
    if p.grid() != g.grid() || p.ncomp() != want || p.representation() != Representation::Real {
        return Err(FermionError::Layout(format!(
            "expected a real-space field with {want} components (one block per electron)"
        )));
    }
    Ok(())
}

/// Vector antisymmetrizer: `(Λ_A p)_j(x) = (1/N!) Σ_π sign(π) p_{π⁻¹(j)}(x∘π)`,
/// where `p_j` is the `d_space`-component block of electron `j`. This is the
/// form that commutes with the gradient: `Λ_A ∇φ = ∇ Λ_a φ`.
#[allow(non_snake_case)]
pub fn lambda_A<T: Real>(p: &Field<T>, g: &MultiElectronGrid) -> Result<Field<T>, FermionError> {
    check_vector(p, g)?;
    check_brute_force(g)?;
    let n = g.electrons();
    let d = g.d_space();
    let nc = n * d;
    let perms = Permutation::all(n);
    let w = T::one() / T::count(perms.len());
    let src = p.values();
    let mut out = vec![czero::<T>(); src.len()];
    for pi in &perms {
        let table = g.permutation_table(pi);
        let inv = pi.inverse();
        let s = w * T::lit(pi.sign() as f64);
        out.par_chunks_mut(nc).zip(table.par_iter()).for_each(|(o, &q)| {
            let from = &src[q * nc..(q + 1) * nc];
            for j in 0..n {
                let m = inv.apply(j);
                for c in 0..d {
                    o[j * d + c] += from[m * d + c].scale(s);
                }
            }
        });
    }
    Ok(Field::from_vec(p.grid(), p.layout(), Representation::Real, out)?)
}

/// Desymmetrized material with the symmetrization applied on the left:
/// `E ↦ Λ (L^D E)` with `Λ = diag(Λ_A, Λ_a)`.
///
/// Against antisymmetric states the pair potential `V^D` contributes the
/// average over pairs of the pairwise interaction; to represent
/// `Σ_{i<j} V(x_i, x_j)` use `V^D = N(N-1)/2 · V` (see [`pair_count`]).
#[derive(Debug, Clone)]
pub struct SymmetrizedL<T: Real> {
    ld: LField<T>,
    grid: MultiElectronGrid,
}

pub fn pair_count(electrons: usize) -> usize {
    electrons * electrons.saturating_sub(1) / 2
}

pub fn symmetrized_l<T: Real>(ld: LField<T>, g: &MultiElectronGrid) -> Result<SymmetrizedL<T>, FermionError> {
    let want = BlockLayout::vector_scalar(g.electrons() * g.d_space());
    if ld.grid() != g.grid() || ld.layout() != &want {
        return Err(FermionError::Layout(format!("L^D must have layout {want} on the configuration grid")));
    }
    if ld.orientation() != crate::physics::Orientation::Direct {
        return Err(FermionError::Layout("L^D must be stored in direct orientation".into()));
    }
    Ok(SymmetrizedL { ld, grid: g.clone() })
}

impl<T: Real> SymmetrizedL<T> {
    pub fn material(&self) -> &LField<T> {
        &self.ld
    }

    pub fn apply(&self, e: &Field<T>) -> Result<Field<T>, FermionError> {
        let j = self.ld.apply(e)?;
        let nv = self.grid.electrons() * self.grid.d_space();
        let q = lambda_A(&j.block(0), &self.grid)?;
        let s = lambda_a(&j.block(1), &self.grid, false)?;
        let data = q
            .values()
            .chunks(nv)
            .zip(s.values())
            .flat_map(|(qv, sv)| qv.iter().copied().chain(std::iter::once(*sv)))
            .collect();
        Ok(Field::from_vec(e.grid(), e.layout(), Representation::Real, data)?)
    }
}

/// Layout of a per-electron vector field.
pub fn electron_vector_layout(g: &MultiElectronGrid) -> BlockLayout {
    BlockLayout::new(vec![Block::Vector(g.electrons() * g.d_space())]).expect("nonempty")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CMatrix;
    use crate::physics::{SchrodingerPotential, SchrodingerSpec, Spatial};
    use crate::real::clit;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(g: &MultiElectronGrid, layout: &BlockLayout, seed: u64) -> Field<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = g.grid().num_points() * layout.total_components();
        let data = (0..n).map(|_| clit(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        Field::from_vec(g.grid(), layout, Representation::Real, data).unwrap()
    }

    fn at(f: &Field<f64>, g: &MultiElectronGrid, idx: &[usize]) -> C<f64> {
        f.point(g.grid().flat_index(idx).unwrap())[0]
    }

    #[test]
    fn two_electrons_reduce_to_a_single_swap() {
        let g = MultiElectronGrid::new(2, 1, false, 5, 1.0).unwrap();
        let phi = random(&g, &BlockLayout::scalar(), 1);
        let full = antisymmetrize_full(&phi, &g).unwrap();
        let red = lambda_a(&phi, &g, true).unwrap();
        for (i, j) in [(0, 1), (2, 4), (3, 3)] {
            let want = (at(&phi, &g, &[i, j]) - at(&phi, &g, &[j, i])) * 0.5;
            assert!((at(&full, &g, &[i, j]) - want).norm() < 1e-15);
            assert!((at(&red, &g, &[i, j]) - want).norm() < 1e-15);
        }
    }

    #[test]
    fn fixed_points_and_annihilation() {
        let g = MultiElectronGrid::new(3, 1, false, 4, 1.0).unwrap();
        let phi = random(&g, &BlockLayout::scalar(), 2);
        let anti = antisymmetrize_full(&phi, &g).unwrap();
        assert!(antisymmetrize_full(&anti, &g).unwrap().max_abs_diff(&anti) < 1e-14);
        // symmetrize by hand
        let sym: Vec<(Permutation, f64)> = Permutation::all(3).into_iter().map(|p| (p, 1.0)).collect();
        let s = signed_sum(&phi, &g, &sym);
        assert!(antisymmetrize_full(&s, &g).unwrap().norm() < 1e-14);
    }

    #[test]
    fn reduced_formula_matches_brute_force() {
        for (n, d, pts) in [(3, 1, 5), (4, 1, 4), (3, 2, 3)] {
            let g = MultiElectronGrid::new(n, d, false, pts, 1.0).unwrap();
            let raw = random(&g, &BlockLayout::scalar(), n as u64);
            let tail = signed_sum(&raw, &g, &signed_weights(tail_permutations(n)));
            let red = lambda_a(&tail, &g, true).unwrap();
            let full = antisymmetrize_full(&tail, &g).unwrap();
            assert!(red.max_abs_diff(&full) < 1e-13, "n={n}");
            assert!(lambda_a(&raw, &g, false).unwrap().max_abs_diff(&antisymmetrize_full(&raw, &g).unwrap()) < 1e-13);
            assert!(lambda_a(&red, &g, true).unwrap().max_abs_diff(&red) < 1e-13);
        }
    }

    #[test]
    fn tail_precondition_is_enforced() {
        let g = MultiElectronGrid::new(4, 1, false, 3, 1.0).unwrap();
        let raw = random(&g, &BlockLayout::scalar(), 9);
        assert!(matches!(lambda_a(&raw, &g, true), Err(FermionError::TailSymmetry(_))));
    }

    #[test]
    fn three_electron_vector_projector_matches_explicit_formula() {
        let g = MultiElectronGrid::new(3, 1, false, 4, 1.0).unwrap();
        let layout = electron_vector_layout(&g);
        let p = random(&g, &layout, 3);
        let q = lambda_A(&p, &g).unwrap();
        let pv = |j: usize, a: usize, b: usize, c: usize| p.point(g.grid().flat_index(&[a, b, c]).unwrap())[j];
        for (x1, x2, x3) in [(0, 1, 2), (3, 3, 1), (2, 0, 0), (1, 2, 3)] {
            let got = q.point(g.grid().flat_index(&[x1, x2, x3]).unwrap());
            let q1 = (pv(0, x1, x2, x3) - pv(0, x1, x3, x2) - pv(1, x2, x1, x3) + pv(1, x3, x1, x2) - pv(2, x3, x2, x1)
                + pv(2, x2, x3, x1))
                / 6.0;
            let q2 = (pv(1, x1, x2, x3) - pv(1, x3, x2, x1) - pv(0, x2, x1, x3) + pv(0, x2, x3, x1) - pv(2, x1, x3, x2)
                + pv(2, x3, x1, x2))
                / 6.0;
            let q3 = (pv(2, x1, x2, x3) - pv(2, x2, x1, x3) - pv(0, x3, x2, x1) + pv(0, x3, x1, x2) - pv(1, x1, x3, x2)
                + pv(1, x2, x3, x1))
                / 6.0;
            assert!((got[0] - q1).norm() < 1e-15);
            assert!((got[1] - q2).norm() < 1e-15);
            assert!((got[2] - q3).norm() < 1e-15);
        }
        assert!(lambda_A(&q, &g).unwrap().max_abs_diff(&q) < 1e-14);
    }

    #[test]
    fn vector_projector_commutes_with_gradient() {
        let g = MultiElectronGrid::new(3, 1, false, 6, 2.0).unwrap();
        // band-limited random field
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let modes: Vec<([f64; 3], C<f64>)> = (0..6)
            .map(|_| {
                let k = [0, 1, 2].map(|_| rng.gen_range(-2i32..=2) as f64 * std::f64::consts::PI);
                (k, clit(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            })
            .collect();
        let phi = Field::from_fn(g.grid(), &BlockLayout::scalar(), |x: &[f64], v| {
            v[0] = modes.iter().map(|(k, a)| a * clit(0.0, k[0] * x[0] + k[1] * x[1] + k[2] * x[2]).exp()).sum();
        });
        let grad = |f: &Field<f64>| {
            let fh = f.to_fourier().unwrap();
            let mut k = [0.0; 3];
            let data: Vec<C<f64>> = (0..g.grid().num_points())
                .flat_map(|p| {
                    g.grid().wavevector_flat(p, &mut k);
                    let v = fh.point(p)[0];
                    k.map(|ki: f64| clit::<f64>(0.0, ki) * v)
                })
                .collect();
            Field::from_vec(g.grid(), &electron_vector_layout(&g), Representation::Fourier, data)
                .unwrap()
                .to_real()
                .unwrap()
        };
        let lhs = lambda_A(&grad(&phi), &g).unwrap();
        let rhs = grad(&lambda_a(&phi, &g, false).unwrap());
        assert!(lhs.max_abs_diff(&rhs) < 1e-12 * lhs.norm().max(1.0));
        // first symmetry family: q_1(x1,x2,x3) = -q_2(x2,x1,x3)
        let f = |j: usize, a: usize, b: usize, c: usize| lhs.point(g.grid().flat_index(&[a, b, c]).unwrap())[j];
        assert!((f(0, 1, 4, 2) + f(1, 4, 1, 2)).norm() < 1e-13);
    }

    #[test]
    fn spin_moves_with_the_electron() {
        let g = MultiElectronGrid::new(2, 1, true, 3, 1.0).unwrap();
        let phi = random(&g, &BlockLayout::scalar(), 6);
        let anti = antisymmetrize_full(&phi, &g).unwrap();
        for (s1, s2, x1, x2) in [(0, 1, 0, 2), (1, 1, 1, 0), (0, 0, 2, 2)] {
            let a = at(&anti, &g, &[s1, s2, x1, x2]);
            let b = at(&anti, &g, &[s2, s1, x2, x1]);
            assert!((a + b).norm() < 1e-15);
        }
        // spin-up/up electrons at one position vanish
        assert!(at(&anti, &g, &[0, 0, 1, 1]).norm() < 1e-15);
    }

    fn pair_bump(g: &MultiElectronGrid) -> Vec<C<f64>> {
        let n = g.grid().dims()[0];
        (0..n * n)
            .map(|p| {
                let (a, b) = (p / n, p % n);
                clit(if a == b { 3.0 } else if a + 1 == b { 1.0 } else { 0.0 }, 0.0)
            })
            .collect()
    }

    #[test]
    fn pair_potential_expectation_is_the_pair_average() {
        let g = MultiElectronGrid::new(3, 1, false, 4, 1.0).unwrap();
        let vd = pair_bump(&g);
        let spec = SchrodingerSpec {
            a: CMatrix::identity(3),
            energy: clit(0.0, 0.0),
            potential: SchrodingerPotential::Pair { d_space: 1, values: vd.clone() },
        };
        let sl = symmetrized_l(spec.build(g.grid()).unwrap(), &g).unwrap();
        let psi = antisymmetrize_full(&random(&g, &BlockLayout::scalar(), 8), &g).unwrap();
        let e_layout = BlockLayout::vector_scalar(3);
        let e = Field::from_vec(
            g.grid(),
            &e_layout,
            Representation::Real,
            psi.values().iter().flat_map(|v| [clit(0.0, 0.0), clit(0.0, 0.0), clit(0.0, 0.0), *v]).collect(),
        )
        .unwrap();
        let j = sl.apply(&e).unwrap();
        // scalar block is -V^D-part symmetrized (E = 0)
        let lhs = -psi.inner_product(&j.block(1)).unwrap();
        // dense pairwise Hamiltonian: Σ_{i<j} V(x_i, x_j)
        let n = 4;
        let mut idx = [0; 3];
        let w = g.grid().point_weight();
        let mut pairwise = clit(0.0, 0.0);
        for p in 0..g.grid().num_points() {
            g.grid().multi_index(p, &mut idx);
            let v: C<f64> = [(0, 1), (0, 2), (1, 2)].iter().map(|&(a, b)| vd[idx[a] * n + idx[b]]).sum();
            pairwise += psi.values()[p].conj() * v * psi.values()[p] * w;
        }
        assert!((lhs - pairwise / pair_count(3) as f64).norm() < 1e-13);
        // two electrons: Λ L^D Λ = L^D on antisymmetric states
        let g2 = MultiElectronGrid::new(2, 1, false, 4, 1.0).unwrap();
        let spec2 = SchrodingerSpec {
            a: CMatrix::identity(2),
            energy: clit(0.7, 0.0),
            potential: SchrodingerPotential::Full(Spatial::PerPoint(
                (0..16).map(|p| clit(if p % 5 == 0 { 1.0 } else { 0.2 }, 0.0)).collect(),
            )),
        };
        let ld = spec2.build(g2.grid()).unwrap();
        let sl2 = symmetrized_l(ld.clone(), &g2).unwrap();
        let psi2 = antisymmetrize_full(&random(&g2, &BlockLayout::scalar(), 1), &g2).unwrap();
        let e2 = Field::from_vec(
            g2.grid(),
            &BlockLayout::vector_scalar(2),
            Representation::Real,
            psi2.values().iter().flat_map(|v| [clit(0.0, 0.0), clit(0.0, 0.0), *v]).collect(),
        )
        .unwrap();
        let direct = ld.apply(&e2).unwrap();
        assert!(sl2.apply(&e2).unwrap().max_abs_diff(&direct) < 1e-14);
    }
}
