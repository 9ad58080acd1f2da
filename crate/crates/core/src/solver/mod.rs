//! Matrix-free solution of `J = L E - s`, `Γ₁E = E`, `Γ₁J = 0`.
//!
//! Unknowns live in Fourier space inside the range of `Γ₁`; each operator
//! application goes back to real space for the pointwise product with `L`.

mod functional;
mod gmres;
mod resolvent;

use std::io::Write;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::physics::{invert_blockwise, LField, Orientation, PhysicsError};
use crate::projectors::{Projector, ProjectorError, ProjectorOp};
use crate::real::{czero, Real, C};
use crate::reduce::det_norm_sqr;
use crate::tensorfield::{FftPlan, Field, FieldError, Grid, Representation};

pub use functional::residual_functional;
pub use resolvent::{solve_resolvent, ResolventOptions};

use gmres::{gmres, Deflation, Params, Status};

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("problem setup: {0}")]
    Setup(String),
    #[error(transparent)]
    Physics(#[from] PhysicsError),
    #[error(transparent)]
    Projector(#[from] ProjectorError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("operator is singular on the field space: residual stalled at {residual:.3e} after {iterations} iterations")]
    SingularOperator {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },
    #[error("not converged: residual {:.3e} after {} iterations", .0.residual, .0.iterations)]
    NotConverged(Box<SolveResult<f64>>),
    #[error("z = {z} is at or near a resonance: smallest singular value estimate {sigma_min:.3e}")]
    Resonance { z: String, sigma_min: f64 },
    #[error("wavefunction is not normalized: norm^2 = {0}")]
    Normalization(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Method<T: Real> {
    /// Restarted minimal-residual Krylov iteration.
    Krylov { restart: usize },
    /// `E ← E + (1/c) Γ₁(s - L E)`.
    FixedPoint { c: C<T> },
}

impl<T: Real> Default for Method<T> {
    fn default() -> Self {
        Method::Krylov { restart: 40 }
    }
}

#[derive(Debug, Clone)]
pub struct SolveOptions<T: Real> {
    pub tol: T,
    /// Defaults to `min(10 · unknowns, 2000)`.
    pub max_iter: Option<usize>,
    pub method: Method<T>,
    /// Bloch shift `k₀` added to every wavevector.
    pub shift: Option<Vec<T>>,
    /// Real-space E-fields removed from the Krylov space (null directions).
    pub deflation: Vec<Field<T>>,
}

impl<T: Real> Default for SolveOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::lit(1e-8),
            max_iter: None,
            method: Method::default(),
            shift: None,
            deflation: Vec::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult<T: Real> {
    pub e: Field<T>,
    pub j: Field<T>,
    /// `‖Γ₁(L E - s)‖ / ‖Γ₁ s‖`, both with deflated directions removed.
    pub residual: T,
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<T>,
}

impl<T: Real> SolveResult<T> {
    fn into_f64(self) -> SolveResult<f64> {
        let conv = |f: &Field<T>| {
            let data = f.values().iter().map(|z| C::new(z.re.to_f64_lossy(), z.im.to_f64_lossy())).collect();
            Field::from_vec(f.grid(), f.layout(), f.representation(), data).unwrap_or_else(|_| {
                Field::zeros(f.grid(), f.layout(), f.representation())
            })
        };
        SolveResult {
            e: conv(&self.e),
            j: conv(&self.j),
            residual: self.residual.to_f64_lossy(),
            iterations: self.iterations,
            converged: self.converged,
            history: self.history.iter().map(|x| x.to_f64_lossy()).collect(),
        }
    }
}

/// A fully specified periodic problem.
pub struct Problem<T: Real> {
    l: LField<T>,
    gamma: ProjectorOp<T>,
    plan: FftPlan<T>,
    source: Field<T>,
    options: SolveOptions<T>,
}

impl<T: Real> Problem<T> {
    /// Inverse-oriented materials are inverted pointwise here.
    pub fn new(
        l: LField<T>,
        projector: Arc<dyn Projector<T>>,
        source: Field<T>,
        options: SolveOptions<T>,
    ) -> Result<Self, SolveError> {
        let l = match l.orientation() {
            Orientation::Direct => l,
            Orientation::Inverse => invert_blockwise(&l)?,
        };
        let grid = l.grid().clone();
        if source.grid() != &grid {
            return Err(SolveError::Setup("source and material grids differ".into()));
        }
        if source.representation() != Representation::Real {
            return Err(SolveError::Setup("source must be given in real space".into()));
        }
        if source.layout() != l.layout() || &projector.layout() != l.layout() {
            return Err(SolveError::Setup(format!(
                "layouts differ: material {}, source {}, projector {}",
                l.layout(),
                source.layout(),
                projector.layout()
            )));
        }
        if !(options.tol > T::zero()) {
            return Err(SolveError::Setup(format!("tolerance must be positive, got {}", options.tol)));
        }
        if let Method::FixedPoint { c } = options.method {
            if c.norm().is_zero() {
                return Err(SolveError::Setup("fixed-point reference constant must be nonzero".into()));
            }
        }
        let gamma = ProjectorOp::new(projector, &grid, options.shift.as_deref())?;
        let plan = FftPlan::new(&grid);
        Ok(Self {
            l,
            gamma,
            plan,
            source,
            options,
        })
    }

    pub fn grid(&self) -> &Grid {
        self.l.grid()
    }

    pub fn material(&self) -> &LField<T> {
        &self.l
    }

    pub fn projector(&self) -> &ProjectorOp<T> {
        &self.gamma
    }

    pub fn source(&self) -> &Field<T> {
        &self.source
    }

    pub fn options(&self) -> &SolveOptions<T> {
        &self.options
    }

    pub fn unknowns(&self) -> usize {
        self.source.values().len()
    }

    pub fn max_iter(&self) -> usize {
        self.options.max_iter.unwrap_or_else(|| (10 * self.unknowns()).min(2000))
    }

    /// `Γ₁ F L F⁻¹ x` on Fourier coefficients, with `L` or `L†`.
    fn apply_with(&self, l: &LField<T>, x: &[C<T>], out: &mut [C<T>]) {
        let nc = l.ncomp();
        let mut real = x.to_vec();
        self.plan.inverse(&mut real, nc);
        l.apply_slice(&real, out);
        self.plan.forward(out, nc);
        self.gamma.apply_in_place(out, false);
    }

    fn apply(&self, x: &[C<T>], out: &mut [C<T>]) {
        self.apply_with(&self.l, x, out)
    }

    /// `Γ₁ ŝ`.
    fn rhs(&self) -> Vec<C<T>> {
        let mut b = self.source.values().to_vec();
        self.plan.forward(&mut b, self.l.ncomp());
        self.gamma.apply_in_place(&mut b, false);
        b
    }

    fn fourier_field(&self, data: Vec<C<T>>) -> Result<Field<T>, SolveError> {
        Ok(Field::from_vec(self.grid(), self.l.layout(), Representation::Fourier, data)?)
    }

    /// Builds `E`, `J` and the residual from Fourier coefficients of `E`.
    fn finish(&self, mut e_hat: Vec<C<T>>, iterations: usize, history: Vec<T>) -> Result<SolveResult<T>, SolveError> {
        self.gamma.apply_in_place(&mut e_hat, false);
        // residuals are measured on the deflated system
        let defl = self.deflation()?;
        let mut b = self.rhs();
        defl.project(&mut b);
        let bnorm = det_norm_sqr(&b).sqrt();
        let mut ae = vec![czero(); e_hat.len()];
        self.apply(&e_hat, &mut ae);
        let mut r: Vec<C<T>> = ae.iter().zip(&b).map(|(a, b)| *a - *b).collect();
        defl.project(&mut r);
        let rnorm = det_norm_sqr(&r).sqrt();
        let residual = if bnorm.is_zero() { T::zero() } else { rnorm / bnorm };
        let e = self.fourier_field(e_hat)?.to_real_with(&self.plan)?;
        let mut j = self.l.apply(&e)?;
        j.add_scaled(-C::new(T::one(), T::zero()), &self.source)?;
        Ok(SolveResult {
            e,
            j,
            residual,
            iterations,
            converged: residual <= self.options.tol,
            history,
        })
    }

    fn deflation(&self) -> Result<Deflation<T>, SolveError> {
        let mut vs = Vec::new();
        for f in &self.options.deflation {
            if f.grid() != self.grid() || f.layout() != self.l.layout() {
                return Err(SolveError::Setup("deflation field does not match the problem".into()));
            }
            let mut v = match f.representation() {
                Representation::Real => f.to_fourier_with(&self.plan)?.into_values(),
                Representation::Fourier => f.values().to_vec(),
            };
            self.gamma.apply_in_place(&mut v, false);
            vs.push(v);
        }
        Ok(Deflation::new(vs))
    }
}

fn to_f64<T: Real>(v: &[T]) -> Vec<f64> {
    v.iter().map(|x| x.to_f64_lossy()).collect()
}

/// Solves the problem. A non-converged run is returned inside
/// [`SolveError::NotConverged`] with its residual history.
pub fn solve<T: Real>(p: &Problem<T>) -> Result<SolveResult<T>, SolveError> {
    let b = p.rhs();
    let n = b.len();
    if det_norm_sqr(&b).is_zero() {
        return p.finish(vec![czero(); n], 0, Vec::new());
    }
    let max_iter = p.max_iter();
    let (x, iterations, history) = match &p.options.method {
        Method::Krylov { restart } => {
            let mut x = vec![czero(); n];
            let params = Params {
                tol: p.options.tol,
                max_iter,
                restart: *restart,
            };
            let out = gmres(|v, o| p.apply(v, o), &b, &mut x, &params, &p.deflation()?);
            if out.status == Status::Stagnated {
                return Err(SolveError::SingularOperator {
                    iterations: out.iterations,
                    residual: out.history.last().map(|r| r.to_f64_lossy()).unwrap_or(1.0),
                    history: to_f64(&out.history),
                });
            }
            (x, out.iterations, out.history)
        }
        Method::FixedPoint { c } => {
            let inv_c = C::new(T::one(), T::zero()) / *c;
            let bnorm = det_norm_sqr(&b).sqrt();
            let defl = p.deflation()?;
            let mut x = vec![czero(); n];
            let mut ax = vec![czero(); n];
            let mut history = Vec::new();
            let mut it = 0;
            while it < max_iter {
                p.apply(&x, &mut ax);
                let mut r: Vec<C<T>> = b.iter().zip(&ax).map(|(b, a)| *b - *a).collect();
                defl.project(&mut r);
                let rel = det_norm_sqr(&r).sqrt() / bnorm;
                if it > 0 {
                    history.push(rel);
                }
                if rel <= p.options.tol || !rel.is_finite() {
                    break;
                }
                for (xi, ri) in x.iter_mut().zip(&r) {
                    *xi += *ri * inv_c;
                }
                it += 1;
            }
            (x, it, history)
        }
    };
    let result = p.finish(x, iterations, history)?;
    if result.converged {
        Ok(result)
    } else {
        Err(SolveError::NotConverged(Box::new(result.into_f64())))
    }
}

/// Power-iteration estimate of `‖Γ₁ L Γ₁‖₂` (50 steps on `A†A`).
pub fn operator_norm_estimate<T: Real>(p: &Problem<T>) -> T {
    operator_norm_estimate_with(p, 50, 0)
}

pub fn operator_norm_estimate_with<T: Real>(p: &Problem<T>, steps: usize, seed: u64) -> T {
    let n = p.unknowns();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<C<T>> = (0..n)
        .map(|_| C::new(T::lit(rng.gen_range(-1.0..1.0)), T::lit(rng.gen_range(-1.0..1.0))))
        .collect();
    p.gamma.apply_in_place(&mut x, false);
    let adj = adjoint_field(&p.l);
    let mut y = vec![czero(); n];
    let mut z = vec![czero(); n];
    let mut lambda = T::zero();
    for _ in 0..steps {
        let nx = det_norm_sqr(&x).sqrt();
        if nx.is_zero() {
            return T::zero();
        }
        let inv = C::new(T::one() / nx, T::zero());
        x.iter_mut().for_each(|v| *v *= inv);
        p.apply(&x, &mut y);
        p.apply_with(&adj, &y, &mut z);
        lambda = det_norm_sqr(&z).sqrt();
        std::mem::swap(&mut x, &mut z);
    }
    lambda.sqrt()
}

fn adjoint_field<T: Real>(l: &LField<T>) -> LField<T> {
    let data: Vec<C<T>> = (0..l.grid().num_points())
        .flat_map(|p| l.at(p).adjoint().into_vec())
        .collect();
    LField::new(l.grid(), l.layout(), l.orientation(), data).expect("adjoint of a finite field")
}

/// Writes `iteration,residual` lines with a header.
pub fn write_history_csv<T: Real, W: Write>(history: &[T], mut w: W) -> std::io::Result<()> {
    writeln!(w, "iteration,residual")?;
    for (i, r) in history.iter().enumerate() {
        writeln!(w, "{},{:e}", i + 1, r.to_f64_lossy())?;
    }
    Ok(())
}
