use std::sync::Arc;

use super::tensors::{identity_dyad_full, lambda_h, lambda_s, lift_to_full, sym_pack};
use super::{LField, Orientation, PhysicsError, Spatial};
use crate::linalg::{hermitian_eigen, CMatrix};
use crate::projectors::{self, Projector};
use crate::real::{cone, Real, C};
use crate::tensorfield::{Block, BlockLayout, Field, Grid, Representation};

type Sc<T> = Spatial<C<T>>;
type Mat<T> = Spatial<CMatrix<T>>;

fn nonzero_omega<T: Real>(omega: C<T>) -> Result<(), PhysicsError> {
    if omega.norm().is_zero() || !omega.re.is_finite() || !omega.im.is_finite() {
        return Err(PhysicsError::Frequency(format!("omega = {omega} must be finite and nonzero")));
    }
    Ok(())
}

fn check_mat<T: Real>(name: &str, s: &Mat<T>, grid: &Grid, rows: usize, cols: usize) -> Result<(), PhysicsError> {
    s.validate(grid)?;
    let bad = |m: &CMatrix<T>| m.rows() != rows || m.cols() != cols;
    let any_bad = match s {
        Spatial::Constant(m) => bad(m),
        Spatial::Layered { values, .. } | Spatial::Checkerboard(values) | Spatial::PerPoint(values) => {
            values.iter().any(bad)
        }
    };
    if any_bad {
        return Err(PhysicsError::Shape(format!("{name} must be {rows}x{cols}")));
    }
    Ok(())
}

fn check_vec<T: Real>(name: &str, s: &Spatial<Vec<C<T>>>, grid: &Grid, len: usize) -> Result<(), PhysicsError> {
    s.validate(grid)?;
    let any_bad = match s {
        Spatial::Constant(v) => v.len() != len,
        Spatial::Layered { values, .. } | Spatial::Checkerboard(values) | Spatial::PerPoint(values) => {
            values.iter().any(|v| v.len() != len)
        }
    };
    if any_bad {
        return Err(PhysicsError::Shape(format!("{name} must have {len} components")));
    }
    Ok(())
}

fn singular(point: usize, what: &str) -> PhysicsError {
    PhysicsError::MaterialSingular {
        point,
        what: what.into(),
    }
}

fn inverse_at<T: Real>(m: &CMatrix<T>, point: usize, what: &str) -> Result<CMatrix<T>, PhysicsError> {
    m.inverse()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| singular(point, what))
}

fn real_c<T: Real>(x: T) -> C<T> {
    C::new(x, T::zero())
}

fn ci<T: Real>() -> C<T> {
    C::new(T::zero(), T::one())
}

/// Acoustic pressure formulation. The stored matrix maps `(i∇·v, iv)`-type
/// fields to `(∇P, P)`, so it is flagged [`Orientation::Inverse`].
#[derive(Debug, Clone)]
pub struct AcousticsSpec<T: Real> {
    pub d: usize,
    pub omega: C<T>,
    /// Bulk modulus `κ(x)`.
    pub kappa: Sc<T>,
    /// Density `ρ(x)`, `d x d`.
    pub rho: Mat<T>,
    /// Multiply through by `ω`: `diag(ω²ρ, -κ)`.
    pub scale_by_omega: bool,
}

#[derive(Debug, Clone)]
pub struct ElastodynamicsSpec<T: Real> {
    pub d: usize,
    pub omega: C<T>,
    /// Packed stiffness, `ns x ns` with `ns = d(d+1)/2`.
    pub stiffness: Mat<T>,
    pub rho: Mat<T>,
    /// Willis coupling on packed components, `ns x d`.
    pub coupling: Option<Mat<T>>,
}

#[derive(Debug, Clone)]
pub struct MaxwellSpec<T: Real> {
    pub omega: C<T>,
    pub eps: Mat<T>,
    pub mu: Mat<T>,
}

#[derive(Debug, Clone)]
pub struct BrinkmanSpec<T: Real> {
    pub d: usize,
    pub omega: C<T>,
    /// Packed viscosity tensor; must annihilate the identity.
    pub viscosity: Mat<T>,
    pub permeability: Mat<T>,
    pub eta: C<T>,
    pub rho: Mat<T>,
}

#[derive(Debug, Clone)]
pub struct OseenSpec<T: Real> {
    pub d: usize,
    pub omega: C<T>,
    pub kappa: Sc<T>,
    pub eta_bulk: Sc<T>,
    pub eta: Sc<T>,
    /// Uniform background velocity `U`.
    pub velocity: Vec<T>,
    pub rho: Mat<T>,
}

#[derive(Debug, Clone)]
pub struct NsSpec<T: Real> {
    pub d: usize,
    pub omega: C<T>,
    /// Drop the `-iωρ` term (stationary perturbations).
    pub stationary: bool,
    pub eta: Sc<T>,
    pub rho: C<T>,
    /// Background velocity `v(x)`.
    pub velocity: Spatial<Vec<C<T>>>,
    /// `(∇v)_{ij} = ∂_i v_j`.
    pub velocity_gradient: Mat<T>,
    /// Incompressibility penalty; defaults to `1e8 · max|2η|`.
    pub penalty: Option<T>,
}

#[derive(Debug, Clone)]
pub struct ThermoacousticSpec<T: Real> {
    pub d: usize,
    pub omega: C<T>,
    pub eta_bulk: Sc<T>,
    pub eta: Sc<T>,
    pub beta_t: Sc<T>,
    pub c_p: Sc<T>,
    pub conductivity: Mat<T>,
    pub alpha0: T,
    pub rho0: T,
    pub t0: T,
}

/// Love waves: one axis `x₃`, horizontal wavenumber `k₁`.
#[derive(Debug, Clone)]
pub struct LoveSpec<T: Real> {
    pub omega: C<T>,
    pub k1: T,
    pub mu: Sc<T>,
    pub rho: Sc<T>,
}

#[derive(Debug, Clone)]
pub enum SchrodingerPotential<T: Real> {
    Full(Sc<T>),
    /// Pair potential on the first two electrons' coordinates, row-major over
    /// the leading `2·d_space` grid axes.
    Pair { d_space: usize, values: Vec<C<T>> },
}

#[derive(Debug, Clone)]
pub struct SchrodingerSpec<T: Real> {
    /// Kinetic matrix, `n x n` with `n` the grid dimension.
    pub a: CMatrix<T>,
    pub energy: C<T>,
    pub potential: SchrodingerPotential<T>,
}

impl<T: Real> AcousticsSpec<T> {
    pub fn build(&self, grid: &Grid) -> Result<LField<T>, PhysicsError> {
        nonzero_omega(self.omega)?;
        let d = self.d;
        check_mat("rho", &self.rho, grid, d, d)?;
        self.kappa.validate(grid)?;
        let w = self.omega;
        let layout = BlockLayout::vector_scalar(d);
        LField::from_fn(grid, &layout, Orientation::Inverse, |p| {
            let rho = self.rho.at(grid, p);
            let kappa = self.kappa.at(grid, p);
            let mut m = CMatrix::zeros(d + 1, d + 1);
            let (v, s) = if self.scale_by_omega {
                (rho.scale(w * w), -kappa)
            } else {
                (rho.scale(w), -kappa / w)
            };
            m.set_block(0, 0, &v);
            m[(d, d)] = s;
            Ok(m)
        })
    }
}

impl<T: Real> ElastodynamicsSpec<T> {
    pub fn build(&self, grid: &Grid) -> Result<LField<T>, PhysicsError> {
        nonzero_omega(self.omega)?;
        let d = self.d;
        let ns = d * (d + 1) / 2;
        check_mat("stiffness", &self.stiffness, grid, ns, ns)?;
        check_mat("rho", &self.rho, grid, d, d)?;
        if let Some(c) = &self.coupling {
            check_mat("coupling", c, grid, ns, d)?;
        }
        let p = sym_pack::<T>(d);
        let pt = p.transpose();
        let w = self.omega;
        let layout = BlockLayout::matrix_vector(d);
        LField::from_fn(grid, &layout, Orientation::Direct, |x| {
            let c = self.stiffness.at(grid, x);
            let mut m = CMatrix::zeros(d * d + d, d * d + d);
            m.set_block(0, 0, &(&(&pt * &c) * &p).scale(-cone::<T>() / w));
            m.set_block(d * d, d * d, &self.rho.at(grid, x).scale(w));
            if let Some(dc) = &self.coupling {
                let upper = &pt * &dc.at(grid, x);
                m.set_block(0, d * d, &upper);
                m.set_block(d * d, 0, &upper.adjoint());
            }
            Ok(m)
        })
    }
}

impl<T: Real> MaxwellSpec<T> {
    pub fn build(&self, grid: &Grid) -> Result<LField<T>, PhysicsError> {
        nonzero_omega(self.omega)?;
        check_mat("eps", &self.eps, grid, 3, 3)?;
        check_mat("mu", &self.mu, grid, 3, 3)?;
        let w = self.omega;
        let layout = BlockLayout::new(vec![Block::Vector(3), Block::Vector(3)])?;
        LField::from_fn(grid, &layout, Orientation::Direct, |p| {
            let wmu = self.mu.at(grid, p).scale(w);
            let inv = inverse_at(&wmu, p, "magnetic permeability is not invertible")?;
            let mut m = CMatrix::zeros(6, 6);
            m.set_block(0, 0, &self.eps.at(grid, p).scale(w));
            m.set_block(3, 3, &inv.scale(-cone::<T>()));
            Ok(m)
        })
    }
}

impl<T: Real> BrinkmanSpec<T> {
    pub fn build(&self, grid: &Grid) -> Result<LField<T>, PhysicsError> {
        nonzero_omega(self.omega)?;
        let d = self.d;
        let ns = d * (d + 1) / 2;
        check_mat("viscosity", &self.viscosity, grid, ns, ns)?;
        check_mat("permeability", &self.permeability, grid, d, d)?;
        check_mat("rho", &self.rho, grid, d, d)?;
        let lh = lambda_h::<T>(d);
        let w = self.omega;
        let layout = BlockLayout::new(vec![Block::Sym(d), Block::Vector(d)])?;
        LField::from_fn(grid, &layout, Orientation::Direct, |p| {
            let v = self.viscosity.at(grid, p);
            let scale = v.max_abs().max(T::min_positive_value());
            let tol = T::lit(1e-10) * scale;
            if (&lh * &v).max_abs() > tol || (&v * &lh).max_abs() > tol {
                return Err(PhysicsError::Parameter(format!(
                    "viscosity tensor at point {p} does not annihilate the identity"
                )));
            }
            let kinv = inverse_at(&self.permeability.at(grid, p), p, "permeability is not invertible")?;
            let bracket = &self.rho.at(grid, p).scale(w) + &kinv.scale(ci::<T>() * self.eta);
            let lower = inverse_at(&bracket, p, "drag bracket is not invertible")?;
            let mut m = CMatrix::zeros(ns + d, ns + d);
            m.set_block(0, 0, &v.scale(ci()));
            m.set_block(ns, ns, &lower.scale(-cone::<T>()));
            Ok(m)
        })
    }
}

/// `(κ - iωη_B) Λ_h/3 - 2iωη Λ_s` on packed components.
fn oseen_stiffness<T: Real>(d: usize, omega: C<T>, kappa: C<T>, eta_b: C<T>, eta: C<T>) -> CMatrix<T> {
    let i = ci::<T>();
    let h = lambda_h::<T>(d).scale((kappa - i * omega * eta_b) / T::lit(3.0));
    let s = lambda_s::<T>(d).scale(-i * omega * eta * T::lit(2.0));
    &h + &s
}

/// Row block contracting `w` against the gradient index: `[d² + j][i d + j] = w_i`.
fn convective_rows<T: Real>(m: &mut CMatrix<T>, d: usize, w: &[C<T>]) {
    for i in 0..d {
        for j in 0..d {
            m[(d * d + j, i * d + j)] = w[i];
        }
    }
}

impl<T: Real> OseenSpec<T> {
    /// Maps `(i∇v, iv)` to `(σ, ∇·σ)`, so it is [`Orientation::Direct`] here.
    pub fn build(&self, grid: &Grid) -> Result<LField<T>, PhysicsError> {
        nonzero_omega(self.omega)?;
        let d = self.d;
        if self.velocity.len() != d {
            return Err(PhysicsError::Shape(format!("velocity must have {d} components")));
        }
        self.kappa.validate(grid)?;
        self.eta_bulk.validate(grid)?;
        self.eta.validate(grid)?;
        check_mat("rho", &self.rho, grid, d, d)?;
        let u: Vec<C<T>> = self.velocity.iter().map(|&x| real_c(x)).collect();
        let w = self.omega;
        let layout = BlockLayout::matrix_vector(d);
        LField::from_fn(grid, &layout, Orientation::Direct, |p| {
            let c = oseen_stiffness(d, w, self.kappa.at(grid, p), self.eta_bulk.at(grid, p), self.eta.at(grid, p));
            let mut m = CMatrix::zeros(d * d + d, d * d + d);
            m.set_block(0, 0, &lift_to_full(d, &c));
            convective_rows(&mut m, d, &u);
            m.set_block(d * d, d * d, &self.rho.at(grid, p).scale(-w));
            Ok(m)
        })
    }
}

impl<T: Real> NsSpec<T> {
    pub fn effective_penalty(&self, grid: &Grid) -> Result<T, PhysicsError> {
        match self.penalty {
            Some(p) if p > T::zero() && p.is_finite() => Ok(p),
            Some(p) => Err(PhysicsError::Parameter(format!("penalty must be positive and finite, got {p}"))),
            None => {
                self.eta.validate(grid)?;
                let two = T::lit(2.0);
                let m = (0..grid.num_points()).fold(T::zero(), |m, p| m.max((self.eta.at(grid, p) * two).norm()));
                if m.is_zero() {
                    return Err(PhysicsError::Parameter("default penalty needs nonzero viscosity".into()));
                }
                Ok(T::lit(1e8) * m)
            }
        }
    }

    pub fn build(&self, grid: &Grid) -> Result<LField<T>, PhysicsError> {
        if !self.stationary {
            nonzero_omega(self.omega)?;
        }
        let d = self.d;
        self.eta.validate(grid)?;
        check_vec("velocity", &self.velocity, grid, d)?;
        check_mat("velocity_gradient", &self.velocity_gradient, grid, d, d)?;
        let pen = real_c(self.effective_penalty(grid)?);
        let lh = lambda_h::<T>(d);
        let ls = lambda_s::<T>(d);
        let rho = self.rho;
        let layout = BlockLayout::matrix_vector(d);
        LField::from_fn(grid, &layout, Orientation::Direct, |p| {
            let eta2 = self.eta.at(grid, p) * T::lit(2.0);
            let top = &ls.scale(eta2) + &lh.scale(pen);
            let mut m = CMatrix::zeros(d * d + d, d * d + d);
            m.set_block(0, 0, &lift_to_full(d, &top));
            let v: Vec<C<T>> = self.velocity.at(grid, p).iter().map(|&x| x * rho).collect();
            convective_rows(&mut m, d, &v);
            let mut lower = self.velocity_gradient.at(grid, p).transpose().scale(rho);
            if !self.stationary {
                lower = &lower - &CMatrix::identity(d).scale(ci::<T>() * self.omega * rho);
            }
            m.set_block(d * d, d * d, &lower);
            Ok(m)
        })
    }
}

impl<T: Real> ThermoacousticSpec<T> {
    pub fn build(&self, grid: &Grid) -> Result<LField<T>, PhysicsError> {
        nonzero_omega(self.omega)?;
        let d = self.d;
        for (name, v) in [("rho0", self.rho0), ("t0", self.t0)] {
            if !(v > T::zero()) {
                return Err(PhysicsError::Parameter(format!("{name} must be positive, got {v}")));
            }
        }
        for s in [&self.eta_bulk, &self.eta, &self.beta_t, &self.c_p] {
            s.validate(grid)?;
        }
        check_mat("conductivity", &self.conductivity, grid, d, d)?;
        let w = self.omega;
        let i = ci::<T>();
        let (a0, t0, r0) = (real_c(self.alpha0), real_c(self.t0), real_c(self.rho0));
        let dyad = identity_dyad_full::<T>(d);
        let lh = lambda_h::<T>(d);
        let ls = lambda_s::<T>(d);
        let (m1, m2, m3) = (d * d, d * d + d, d * d + 2 * d);
        let layout = BlockLayout::new(vec![Block::Matrix(d), Block::Vector(d), Block::Vector(d), Block::Scalar])?;
        LField::from_fn(grid, &layout, Orientation::Direct, |p| {
            let beta = self.beta_t.at(grid, p);
            if beta.norm().is_zero() {
                return Err(singular(p, "isothermal compressibility is zero"));
            }
            let visc = &lh.scale(self.eta_bulk.at(grid, p) / T::lit(3.0)) + &ls.scale(self.eta.at(grid, p) * T::lit(2.0));
            let l11 = &lift_to_full(d, &visc).scale(i) + &dyad.scale(cone::<T>() / (w * beta));
            let mut m = CMatrix::zeros(m3 + 1, m3 + 1);
            m.set_block(0, 0, &l11);
            let c = a0 * t0 / beta;
            for a in 0..d {
                m[(a * d + a, m3)] = -i * c;
                m[(m3, a * d + a)] = i * c;
            }
            m.set_block(m1, m1, &CMatrix::identity(d).scale(-w * r0));
            m.set_block(m2, m2, &self.conductivity.at(grid, p).scale(i * t0));
            m[(m3, m3)] = w * a0 * a0 * t0 * t0 / beta - w * r0 * self.c_p.at(grid, p) * t0;
            Ok(m)
        })
    }
}

impl<T: Real> LoveSpec<T> {
    pub fn build(&self, grid: &Grid) -> Result<LField<T>, PhysicsError> {
        if grid.ndim() != 1 {
            return Err(PhysicsError::Shape("love waves live on a one-axis grid".into()));
        }
        self.mu.validate(grid)?;
        self.rho.validate(grid)?;
        let k2 = real_c(self.k1 * self.k1);
        let w2 = self.omega * self.omega;
        LField::from_fn(grid, &BlockLayout::vector_scalar(1), Orientation::Direct, |p| {
            let mu = self.mu.at(grid, p);
            if !(mu.re > T::zero()) {
                return Err(PhysicsError::Parameter(format!("shear modulus must be positive, got {mu} at point {p}")));
            }
            Ok(CMatrix::from_diagonal(&[mu, k2 * mu - w2 * self.rho.at(grid, p)]))
        })
    }
}

impl<T: Real> SchrodingerSpec<T> {
    pub fn build(&self, grid: &Grid) -> Result<LField<T>, PhysicsError> {
        let n = grid.ndim();
        if self.a.rows() != n || self.a.cols() != n {
            return Err(PhysicsError::Shape(format!("kinetic matrix must be {n}x{n}")));
        }
        let herm_err = (&self.a - &self.a.adjoint()).max_abs();
        let eig = hermitian_eigen(&self.a.hermitian_part());
        if herm_err > T::lit(1e-12) * self.a.max_abs() || !(eig.values[0] > T::zero()) {
            return Err(PhysicsError::Parameter("kinetic matrix must be symmetric positive definite".into()));
        }
        let pair_tail = match &self.potential {
            SchrodingerPotential::Full(v) => {
                v.validate(grid)?;
                None
            }
            SchrodingerPotential::Pair { d_space, values } => {
                let lead = 2 * d_space;
                if lead > n {
                    return Err(PhysicsError::Shape(format!("pair potential needs {lead} axes, grid has {n}")));
                }
                let head: usize = grid.dims()[..lead].iter().product();
                if values.len() != head {
                    return Err(PhysicsError::Shape(format!(
                        "pair potential has {} values, leading axes hold {head}",
                        values.len()
                    )));
                }
                Some(grid.dims()[lead..].iter().product::<usize>())
            }
        };
        let neg_a = self.a.scale(-cone::<T>());
        LField::from_fn(grid, &BlockLayout::vector_scalar(n), Orientation::Direct, |p| {
            let v = match (&self.potential, pair_tail) {
                (SchrodingerPotential::Full(v), _) => v.at(grid, p),
                (SchrodingerPotential::Pair { values, .. }, Some(tail)) => values[p / tail],
                _ => unreachable!(),
            };
            let mut m = CMatrix::zeros(n + 1, n + 1);
            m.set_block(0, 0, &neg_a);
            m[(n, n)] = self.energy - v;
            Ok(m)
        })
    }
}

/// Any of the supported physics with its parameters.
#[derive(Debug, Clone)]
pub enum MaterialSpec<T: Real> {
    Acoustics(AcousticsSpec<T>),
    Elastodynamics(ElastodynamicsSpec<T>),
    Maxwell(MaxwellSpec<T>),
    Brinkman(BrinkmanSpec<T>),
    Oseen(OseenSpec<T>),
    NavierStokes(NsSpec<T>),
    Thermoacoustic(ThermoacousticSpec<T>),
    Love(LoveSpec<T>),
    Schrodinger(SchrodingerSpec<T>),
}

impl<T: Real> MaterialSpec<T> {
    pub fn name(&self) -> &'static str {
        match self {
            MaterialSpec::Acoustics(_) => "acoustics",
            MaterialSpec::Elastodynamics(_) => "elastodynamics",
            MaterialSpec::Maxwell(_) => "maxwell",
            MaterialSpec::Brinkman(_) => "brinkman",
            MaterialSpec::Oseen(_) => "oseen",
            MaterialSpec::NavierStokes(_) => "ns-perturb",
            MaterialSpec::Thermoacoustic(_) => "thermoacoustic",
            MaterialSpec::Love(_) => "love",
            MaterialSpec::Schrodinger(_) => "schrodinger",
        }
    }

    pub fn build(&self, grid: &Grid) -> Result<LField<T>, PhysicsError> {
        match self {
            MaterialSpec::Acoustics(s) => s.build(grid),
            MaterialSpec::Elastodynamics(s) => s.build(grid),
            MaterialSpec::Maxwell(s) => s.build(grid),
            MaterialSpec::Brinkman(s) => s.build(grid),
            MaterialSpec::Oseen(s) => s.build(grid),
            MaterialSpec::NavierStokes(s) => s.build(grid),
            MaterialSpec::Thermoacoustic(s) => s.build(grid),
            MaterialSpec::Love(s) => s.build(grid),
            MaterialSpec::Schrodinger(s) => s.build(grid),
        }
    }

    /// The matching `Γ₁` builder for a grid of dimension `ndim`.
    pub fn projector(&self, ndim: usize) -> Arc<dyn Projector<T>> {
        match self {
            MaterialSpec::Acoustics(s) => Arc::new(projectors::Helmholtz { d: s.d }),
            MaterialSpec::Elastodynamics(s) => Arc::new(projectors::FirstIndex { d: s.d }),
            MaterialSpec::Maxwell(_) => Arc::new(projectors::Maxwell),
            MaterialSpec::Brinkman(s) => Arc::new(projectors::Brinkman { d: s.d }),
            MaterialSpec::Oseen(s) => Arc::new(projectors::FirstIndex { d: s.d }),
            MaterialSpec::NavierStokes(s) => Arc::new(projectors::FirstIndex { d: s.d }),
            MaterialSpec::Thermoacoustic(s) => Arc::new(projectors::Thermoacoustic { d: s.d }),
            MaterialSpec::Love(s) => Arc::new(projectors::Surface::love(s.k1)),
            MaterialSpec::Schrodinger(_) => Arc::new(projectors::Helmholtz { d: ndim }),
        }
    }

    /// Layout of the physical forcing accepted by [`MaterialSpec::source`].
    pub fn forcing_layout(&self) -> BlockLayout {
        match self {
            MaterialSpec::Acoustics(s) => BlockLayout::new(vec![Block::Vector(s.d)]).expect("layout"),
            MaterialSpec::Maxwell(_) => BlockLayout::new(vec![Block::Vector(3)]).expect("layout"),
            MaterialSpec::Elastodynamics(ElastodynamicsSpec { d, .. })
            | MaterialSpec::Brinkman(BrinkmanSpec { d, .. })
            | MaterialSpec::Oseen(OseenSpec { d, .. })
            | MaterialSpec::NavierStokes(NsSpec { d, .. }) => {
                BlockLayout::new(vec![Block::Vector(*d)]).expect("layout")
            }
            MaterialSpec::Thermoacoustic(s) => BlockLayout::new(vec![Block::Vector(s.d), Block::Scalar]).expect("layout"),
            MaterialSpec::Love(_) => BlockLayout::vector_scalar(1),
            MaterialSpec::Schrodinger(_) => BlockLayout::scalar(),
        }
    }

    /// Canonical source `s` (in `J = L E - s` with `L` direct) from a
    /// real-space physical forcing: body force, current, heat source or
    /// scalar drive depending on the physics. `l` is the matching build.
    pub fn source(&self, l: &LField<T>, forcing: &Field<T>) -> Result<Field<T>, PhysicsError> {
        let grid = l.grid();
        if forcing.grid() != grid || forcing.representation() != Representation::Real {
            return Err(PhysicsError::Shape("forcing must be a real-space field on the material grid".into()));
        }
        let expect = self.forcing_layout();
        if forcing.layout() != &expect {
            return Err(PhysicsError::Shape(format!("forcing layout {} but expected {expect}", forcing.layout())));
        }
        let nc = l.ncomp();
        let fc = expect.total_components();
        let mut out = Field::zeros(grid, l.layout(), Representation::Real);
        // place the forcing into the full layout at `offset`, times `a`
        let place = |out: &mut Field<T>, offset: usize, a: C<T>| {
            for p in 0..grid.num_points() {
                let f = forcing.point(p);
                let o = out.point_mut(p);
                for c in 0..fc {
                    o[offset + c] = f[c] * a;
                }
            }
        };
        let one = cone::<T>();
        match self {
            MaterialSpec::Maxwell(_) | MaterialSpec::Love(_) => place(&mut out, 0, one),
            MaterialSpec::Elastodynamics(ElastodynamicsSpec { d, .. }) | MaterialSpec::Oseen(OseenSpec { d, .. }) => {
                place(&mut out, d * d, one)
            }
            MaterialSpec::NavierStokes(s) => place(&mut out, s.d * s.d, -one),
            MaterialSpec::Schrodinger(_) => place(&mut out, nc - 1, one),
            MaterialSpec::Thermoacoustic(s) => {
                let d = s.d;
                for p in 0..grid.num_points() {
                    let f = forcing.point(p).to_vec();
                    let o = out.point_mut(p);
                    for a in 0..d {
                        o[d * d + a] = ci::<T>() * f[a];
                    }
                    o[nc - 1] = ci::<T>() * f[d];
                }
            }
            MaterialSpec::Acoustics(_) => {
                // s = M⁻¹ (f, 0) with M the stored (inverse) matrix
                place(&mut out, 0, one);
                let inv = super::invert_blockwise(l)?;
                out = inv.apply(&out)?;
            }
            MaterialSpec::Brinkman(s) => {
                let ns = s.d * (s.d + 1) / 2;
                place(&mut out, ns, one);
                out = l.apply(&out)?.scale(-one);
            }
        }
        Ok(out)
    }
}
