//! JSON run configuration and its translation into library objects.

use std::path::{Path, PathBuf};

use gamma_solve::linalg::CMatrix;
use gamma_solve::physics::{AcousticsSpec, ElastodynamicsSpec, LoveSpec, MaterialSpec, MaxwellSpec, Spatial};
use gamma_solve::physics::tensors::isotropic_stiffness;
use gamma_solve::solver::{Method, SolveOptions};
use gamma_solve::tensorfield::uplf;
use gamma_solve::{Block, BlockLayout, Field, Grid, Representation, C64};
use serde::Deserialize;

use crate::error::CliError;

/// A complex number written either as a bare real or as `[re, im]`.
#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Cplx {
    Real(f64),
    Pair([f64; 2]),
}

impl Cplx {
    pub fn value(self) -> C64 {
        match self {
            Cplx::Real(x) => C64::new(x, 0.0),
            Cplx::Pair([re, im]) => C64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum PhysicsTag {
    Acoustics,
    Elastodynamics,
    Maxwell,
    Love,
}

impl PhysicsTag {
    pub fn name(self) -> &'static str {
        match self {
            PhysicsTag::Acoustics => "acoustics",
            PhysicsTag::Elastodynamics => "elastodynamics",
            PhysicsTag::Maxwell => "maxwell",
            PhysicsTag::Love => "love",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dims: Vec<usize>,
    pub lengths: Vec<f64>,
}

/// How one material parameter varies over the cell.
#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ParamSpec {
    Constant(Cplx),
    Layered {
        axis: usize,
        breakpoints: Vec<f64>,
        values: Vec<Cplx>,
    },
    Checkerboard(Vec<Cplx>),
    /// UPLF file with one scalar (or, for tensor parameters, one `d x d`
    /// matrix) per grid point.
    Voxel(PathBuf),
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Materials {
    pub kappa: Option<ParamSpec>,
    pub rho: Option<ParamSpec>,
    pub eps: Option<ParamSpec>,
    pub mu: Option<ParamSpec>,
    pub bulk: Option<ParamSpec>,
    pub shear: Option<ParamSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceSpec {
    Zero,
    /// `f(x) = amplitude · e^{ik·x}` with `k_i = 2π k_index_i / L_i`.
    PlaneWave { k_index: Vec<i64>, amplitude: Vec<Cplx> },
    /// Periodized Gaussian `amplitude · exp(-|x - center|² / width²)`.
    Bump {
        center: Vec<f64>,
        width: f64,
        amplitude: Vec<Cplx>,
    },
    Voxel(PathBuf),
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum MethodTag {
    #[default]
    Krylov,
    FixedPoint,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    #[serde(default)]
    pub method: MethodTag,
    pub restart: Option<usize>,
    /// Reference medium `c` for the fixed-point iteration.
    pub reference: Option<Cplx>,
}

impl SolverSpec {
    pub fn options(&self, tol_override: Option<f64>) -> Result<SolveOptions<f64>, CliError> {
        let tol = tol_override.or(self.tol).unwrap_or(1e-8);
        if !(tol > 0.0 && tol < 1.0) {
            return Err(CliError::config("solver.tol", format!("tolerance {tol} must lie in (0, 1)")));
        }
        let method = match self.method {
            MethodTag::Krylov => Method::Krylov {
                restart: self.restart.unwrap_or(40).max(1),
            },
            MethodTag::FixedPoint => Method::FixedPoint {
                c: self
                    .reference
                    .ok_or_else(|| CliError::config("solver.reference", "fixed_point needs a reference medium"))?
                    .value(),
            },
        };
        Ok(SolveOptions {
            tol,
            max_iter: self.max_iter,
            method,
            ..SolveOptions::default()
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlochSpec {
    pub k0: Vec<f64>,
    /// Fluctuation profile `α_f`; its mean is removed. Defaults to zero.
    pub alpha: Option<ParamSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub physics: PhysicsTag,
    pub grid: GridSpec,
    pub omega: Cplx,
    #[serde(default)]
    pub materials: Materials,
    pub source: SourceSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    pub bloch: Option<BlochSpec>,
    /// Horizontal wavenumber for `love`.
    pub k1: Option<f64>,
    /// Acoustics only: store `diag(ω²ρ, -κ)` instead of `diag(ωρ, -κ/ω)`.
    #[serde(default)]
    pub scale_by_omega: bool,
    pub output: Option<PathBuf>,
    /// Directory that relative voxel paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Deserializes with the JSON path of the first offending key in the error.
pub fn from_json<'de, D: Deserialize<'de>>(text: &'de str) -> Result<D, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::config(if path.is_empty() { "." } else { &path }, e.into_inner().to_string())
    })
}

pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let cfg: RunConfig = from_json(text)?;
    cfg.check()?;
    Ok(cfg)
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// Reads and validates a config file; voxel paths resolve next to it.
pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let mut cfg = parse_config(&read_text(path)?)?;
    cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(cfg)
}

pub fn build_grid(g: &GridSpec) -> Result<Grid, CliError> {
    Grid::new(g.dims.clone(), g.lengths.clone()).map_err(|e| CliError::config("grid", e.to_string()))
}

impl RunConfig {
    fn check(&self) -> Result<(), CliError> {
        let grid = build_grid(&self.grid)?;
        let d = grid.ndim();
        let m = &self.materials;
        let (required, allowed): (&[&str], &[&str]) = match self.physics {
            PhysicsTag::Acoustics => (&["kappa"], &["kappa", "rho"]),
            PhysicsTag::Maxwell => (&[], &["eps", "mu"]),
            PhysicsTag::Elastodynamics => (&["bulk", "shear"], &["bulk", "shear", "rho"]),
            PhysicsTag::Love => (&["mu"], &["mu", "rho"]),
        };
        let present = [
            ("kappa", m.kappa.is_some()),
            ("rho", m.rho.is_some()),
            ("eps", m.eps.is_some()),
            ("mu", m.mu.is_some()),
            ("bulk", m.bulk.is_some()),
            ("shear", m.shear.is_some()),
        ];
        for (name, set) in present {
            if set && !allowed.contains(&name) {
                return Err(CliError::config(
                    format!("materials.{name}"),
                    format!("not a parameter of {}", self.physics.name()),
                ));
            }
            if !set && required.contains(&name) {
                return Err(CliError::config(format!("materials.{name}"), "required parameter is missing"));
            }
        }
        match self.physics {
            PhysicsTag::Maxwell if d != 3 => return Err(CliError::config("grid.dims", "maxwell needs a 3D grid")),
            PhysicsTag::Love if d != 1 => return Err(CliError::config("grid.dims", "love needs a 1D grid")),
            PhysicsTag::Love if self.k1.is_none() => return Err(CliError::config("k1", "love needs k1")),
            _ => {}
        }
        if self.k1.is_some() && self.physics != PhysicsTag::Love {
            return Err(CliError::config("k1", "only used by love"));
        }
        if self.omega.value().norm() == 0.0 {
            return Err(CliError::config("omega", "frequency must be nonzero"));
        }
        if let Some(b) = &self.bloch {
            if b.k0.len() != d {
                return Err(CliError::config("bloch.k0", format!("expected {d} entries")));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid, CliError> {
        build_grid(&self.grid)
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    fn read_voxel(&self, path: &Path, grid: &Grid, what: &str) -> Result<Field<f64>, CliError> {
        let full = self.resolve(path);
        if !full.exists() {
            return Err(CliError::io(&full, std::io::Error::from(std::io::ErrorKind::NotFound)));
        }
        let f: Field<f64> = uplf::read_file(&full).map_err(|e| CliError::voxel(what, e.to_string()))?;
        if f.grid().dims() != grid.dims() || f.grid().lengths() != grid.lengths() {
            return Err(CliError::voxel(
                what,
                format!(
                    "dimension mismatch: file grid {:?} x {:?}, config grid {:?} x {:?}",
                    f.grid().dims(),
                    f.grid().lengths(),
                    grid.dims(),
                    grid.lengths()
                ),
            ));
        }
        if f.representation() != Representation::Real {
            return Err(CliError::voxel(what, "voxel data must be in real space"));
        }
        Ok(f)
    }

    pub fn scalar(&self, name: &str, p: &ParamSpec, grid: &Grid) -> Result<Spatial<C64>, CliError> {
        Ok(match p {
            ParamSpec::Constant(c) => Spatial::Constant(c.value()),
            ParamSpec::Layered {
                axis,
                breakpoints,
                values,
            } => Spatial::Layered {
                axis: *axis,
                breakpoints: breakpoints.clone(),
                values: values.iter().map(|c| c.value()).collect(),
            },
            ParamSpec::Checkerboard(v) => Spatial::Checkerboard(v.iter().map(|c| c.value()).collect()),
            ParamSpec::Voxel(path) => {
                let f = self.read_voxel(path, grid, name)?;
                if f.layout().blocks() != [Block::Scalar] {
                    return Err(CliError::voxel(name, format!("expected a scalar field, found {}", f.layout())));
                }
                Spatial::PerPoint(f.into_values())
            }
        })
    }

    /// Tensor parameter: scalar descriptors mean multiples of the identity.
    pub fn tensor(&self, name: &str, p: &ParamSpec, grid: &Grid, d: usize) -> Result<Spatial<CMatrix<f64>>, CliError> {
        if let ParamSpec::Voxel(path) = p {
            let f = self.read_voxel(path, grid, name)?;
            return match f.layout().blocks() {
                [Block::Scalar] => Ok(Spatial::PerPoint(
                    f.values().iter().map(|c| CMatrix::identity(d).scale(*c)).collect(),
                )),
                [Block::Matrix(n)] if *n == d => Ok(Spatial::PerPoint(
                    f.values()
                        .chunks(d * d)
                        .map(|m| CMatrix::from_row_major(d, d, m.to_vec()))
                        .collect(),
                )),
                _ => Err(CliError::voxel(name, format!("expected scalar or matrix({d}) data, found {}", f.layout()))),
            };
        }
        Ok(self.scalar(name, p, grid)?.map(|c| CMatrix::identity(d).scale(*c)))
    }

    fn scalar_or(&self, name: &str, p: &Option<ParamSpec>, grid: &Grid) -> Result<Spatial<C64>, CliError> {
        match p {
            Some(p) => self.scalar(name, p, grid),
            None => Ok(Spatial::Constant(C64::new(1.0, 0.0))),
        }
    }

    fn tensor_or(&self, name: &str, p: &Option<ParamSpec>, grid: &Grid, d: usize) -> Result<Spatial<CMatrix<f64>>, CliError> {
        match p {
            Some(p) => self.tensor(name, p, grid, d),
            None => Ok(Spatial::Constant(CMatrix::identity(d))),
        }
    }

    /// Physics description; unspecified densities, `ε` and `μ` default to 1.
    pub fn material(&self, grid: &Grid) -> Result<MaterialSpec<f64>, CliError> {
        let d = grid.ndim();
        let m = &self.materials;
        let omega = self.omega.value();
        Ok(match self.physics {
            PhysicsTag::Acoustics => MaterialSpec::Acoustics(AcousticsSpec {
                d,
                omega,
                kappa: self.scalar_or("kappa", &m.kappa, grid)?,
                rho: self.tensor_or("rho", &m.rho, grid, d)?,
                scale_by_omega: self.scale_by_omega,
            }),
            PhysicsTag::Maxwell => MaterialSpec::Maxwell(MaxwellSpec {
                omega,
                eps: self.tensor_or("eps", &m.eps, grid, 3)?,
                mu: self.tensor_or("mu", &m.mu, grid, 3)?,
            }),
            PhysicsTag::Elastodynamics => {
                let bulk = self.scalar_or("bulk", &m.bulk, grid)?;
                let shear = self.scalar_or("shear", &m.shear, grid)?;
                let stiffness = if bulk.is_constant() && shear.is_constant() {
                    Spatial::Constant(isotropic_stiffness(d, bulk.at(grid, 0), shear.at(grid, 0)))
                } else {
                    bulk.validate(grid).map_err(|e| CliError::config("materials.bulk", e.to_string()))?;
                    shear.validate(grid).map_err(|e| CliError::config("materials.shear", e.to_string()))?;
                    Spatial::PerPoint(
                        (0..grid.num_points())
                            .map(|p| isotropic_stiffness(d, bulk.at(grid, p), shear.at(grid, p)))
                            .collect(),
                    )
                };
                MaterialSpec::Elastodynamics(ElastodynamicsSpec {
                    d,
                    omega,
                    stiffness,
                    rho: self.tensor_or("rho", &m.rho, grid, d)?,
                    coupling: None,
                })
            }
            PhysicsTag::Love => MaterialSpec::Love(LoveSpec {
                omega,
                k1: self.k1.unwrap_or_default(),
                mu: self.scalar_or("mu", &m.mu, grid)?,
                rho: self.scalar_or("rho", &m.rho, grid)?,
            }),
        })
    }

    /// Real-space forcing with the physics' forcing layout.
    pub fn forcing(&self, grid: &Grid, layout: &BlockLayout) -> Result<Field<f64>, CliError> {
        let nc = layout.total_components();
        let d = grid.ndim();
        let amplitudes = |a: &[Cplx], key: &str| -> Result<Vec<C64>, CliError> {
            if a.len() != nc {
                return Err(CliError::config(key, format!("expected {nc} amplitudes for forcing layout {layout}")));
            }
            Ok(a.iter().map(|c| c.value()).collect())
        };
        match &self.source {
            SourceSpec::Zero => Ok(Field::zeros(grid, layout, Representation::Real)),
            SourceSpec::PlaneWave { k_index, amplitude } => {
                if k_index.len() != d {
                    return Err(CliError::config("source.plane_wave.k_index", format!("expected {d} entries")));
                }
                let a = amplitudes(amplitude, "source.plane_wave.amplitude")?;
                let k: Vec<f64> = k_index
                    .iter()
                    .zip(grid.lengths())
                    .map(|(m, l)| 2.0 * std::f64::consts::PI * *m as f64 / l)
                    .collect();
                Ok(Field::from_fn(grid, layout, |x: &[f64], v| {
                    let phase = C64::new(0.0, k.iter().zip(x).map(|(k, x)| k * x).sum()).exp();
                    for (vi, ai) in v.iter_mut().zip(&a) {
                        *vi = ai * phase;
                    }
                }))
            }
            SourceSpec::Bump {
                center,
                width,
                amplitude,
            } => {
                if center.len() != d {
                    return Err(CliError::config("source.bump.center", format!("expected {d} entries")));
                }
                if !(*width > 0.0) {
                    return Err(CliError::config("source.bump.width", "width must be positive"));
                }
                let a = amplitudes(amplitude, "source.bump.amplitude")?;
                let lengths = grid.lengths().to_vec();
                Ok(Field::from_fn(grid, layout, |x: &[f64], v| {
                    let r2: f64 = (0..d)
                        .map(|i| {
                            let dx = (x[i] - center[i]).rem_euclid(lengths[i]);
                            let dx = dx.min(lengths[i] - dx);
                            dx * dx
                        })
                        .sum();
                    let g = (-r2 / (width * width)).exp();
                    for (vi, ai) in v.iter_mut().zip(&a) {
                        *vi = ai * g;
                    }
                }))
            }
            SourceSpec::Voxel(path) => {
                let f = self.read_voxel(path, grid, "source")?;
                if f.layout() != layout {
                    return Err(CliError::voxel("source", format!("layout {} but expected {layout}", f.layout())));
                }
                Ok(f)
            }
        }
    }

    /// `α_f` as a real-space scalar field.
    pub fn alpha(&self, grid: &Grid) -> Result<Field<f64>, CliError> {
        let spec = self.bloch.as_ref().and_then(|b| b.alpha.as_ref());
        let values = match spec {
            None => vec![C64::new(0.0, 0.0); grid.num_points()],
            Some(p) => {
                let s = self.scalar("bloch.alpha", p, grid)?;
                s.validate(grid).map_err(|e| CliError::config("bloch.alpha", e.to_string()))?;
                (0..grid.num_points()).map(|i| s.at(grid, i)).collect()
            }
        };
        Field::from_vec(grid, &BlockLayout::scalar(), Representation::Real, values)
            .map_err(|e| CliError::config("bloch.alpha", e.to_string()))
    }
}
