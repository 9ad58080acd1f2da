use rayon::prelude::*;

use super::gmres::{gmres, Deflation, Params, Status};
use super::SolveError;
use crate::linalg::{hermitian_eigen, matvec_slice, CMatrix};
use crate::physics::LField;
use crate::projectors::DSymbol;
use crate::real::{czero, Real, C};
use crate::tensorfield::{FftPlan, Field, Representation};

#[derive(Debug, Clone)]
pub struct ResolventOptions<T: Real> {
    pub tol: T,
    pub max_iter: Option<usize>,
    pub restart: usize,
}

impl<T: Real> Default for ResolventOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::lit(1e-10),
            max_iter: None,
            restart: 40,
        }
    }
}

fn sigma_min<T: Real>(m: &CMatrix<T>) -> T {
    let e = hermitian_eigen(&(&m.adjoint() * m));
    e.values[0].max(T::zero()).sqrt()
}

/// `Ψ = [z I - D† B D]⁻¹ f` for a real-space potential-space source `f`.
///
/// Uniform `B` is inverted exactly mode by mode; otherwise a Krylov solve
/// runs on the operator assembled from the symbol of `D`.
pub fn solve_resolvent<T: Real>(
    z: C<T>,
    b: &LField<T>,
    f: &Field<T>,
    d: &dyn DSymbol<T>,
    options: &ResolventOptions<T>,
) -> Result<Field<T>, SolveError> {
    let grid = b.grid();
    let npot = d.potential_components();
    let nc = b.ncomp();
    if f.grid() != grid || f.ncomp() != npot || f.representation() != Representation::Real {
        return Err(SolveError::Setup(format!(
            "source must be a real-space field with {npot} components on the coefficient grid"
        )));
    }
    if b.layout() != &d.layout() || d.wave_dim() != grid.ndim() {
        return Err(SolveError::Setup(format!(
            "coefficient layout {} does not match symbol {} on a {}-axis grid",
            b.layout(),
            d.name(),
            grid.ndim()
        )));
    }
    let plan = FftPlan::new(grid);
    let n = grid.num_points();
    let symbols: Vec<CMatrix<T>> = (0..n)
        .into_par_iter()
        .map(|p| {
            let mut k = vec![T::zero(); grid.ndim()];
            grid.wavevector_flat(p, &mut k);
            d.eval(&k)
        })
        .collect();
    let mut rhs = f.values().to_vec();
    plan.forward(&mut rhs, npot);
    let out_field = |mut data: Vec<C<T>>| -> Result<Field<T>, SolveError> {
        plan.inverse(&mut data, npot);
        Ok(Field::from_vec(grid, f.layout(), Representation::Real, data)?)
    };

    if b.is_uniform() {
        let bm = b.at(0);
        let zi = CMatrix::<T>::identity(npot).scale(z);
        let solved: Vec<Result<Vec<C<T>>, T>> = rhs
            .par_chunks(npot)
            .zip(symbols.par_iter())
            .map(|(fk, dk)| {
                let m = &zi - &(&(&dk.adjoint() * &bm) * dk);
                let scale = m.max_abs().max(z.norm()).max(T::min_positive_value());
                match m.lu() {
                    Ok(lu) if lu.pivot_range().0 > T::lit(1e-13) * scale => {
                        let mut x = fk.to_vec();
                        lu.solve_in_place(&mut x);
                        Ok(x)
                    }
                    _ => Err(sigma_min(&m)),
                }
            })
            .collect();
        let mut data = Vec::with_capacity(rhs.len());
        let mut worst: Option<T> = None;
        for r in solved {
            match r {
                Ok(x) => data.extend(x),
                Err(s) => worst = Some(worst.map_or(s, |w: T| w.min(s))),
            }
        }
        if let Some(s) = worst {
            return Err(SolveError::Resonance {
                z: format!("{z}"),
                sigma_min: s.to_f64_lossy(),
            });
        }
        return out_field(data);
    }

    // ψ̂ ↦ z ψ̂ - D(ik)† F B F⁻¹ D(ik) ψ̂
    let apply = |x: &[C<T>], out: &mut [C<T>]| {
        let mut e = vec![czero::<T>(); n * nc];
        e.par_chunks_mut(nc)
            .zip(x.par_chunks(npot))
            .zip(symbols.par_iter())
            .for_each(|((ek, xk), dk)| matvec_slice(dk.as_slice(), nc, npot, xk, ek));
        plan.inverse(&mut e, nc);
        let mut be = vec![czero::<T>(); n * nc];
        b.apply_slice(&e, &mut be);
        plan.forward(&mut be, nc);
        out.par_chunks_mut(npot)
            .zip(be.par_chunks(nc))
            .zip(symbols.par_iter().zip(x.par_chunks(npot)))
            .for_each(|((o, bek), (dk, xk))| {
                for a in 0..npot {
                    let mut acc = z * xk[a];
                    for c in 0..nc {
                        acc -= dk[(c, a)].conj() * bek[c];
                    }
                    o[a] = acc;
                }
            });
    };
    let mut x = vec![czero(); rhs.len()];
    let params = Params {
        tol: options.tol,
        max_iter: options.max_iter.unwrap_or_else(|| (10 * rhs.len()).min(2000)),
        restart: options.restart,
    };
    let out = gmres(apply, &rhs, &mut x, &params, &Deflation::none());
    if out.status != Status::Converged {
        return Err(SolveError::Resonance {
            z: format!("{z}"),
            sigma_min: out.sigma_min.to_f64_lossy(),
        });
    }
    out_field(x)
}
