//! `schrodinger` subcommand: first-order response of a discrete eigenstate.

use std::path::{Path, PathBuf};

use gamma_solve::fermionic::{
    perturbation_solve, FermionError, MultiElectronGrid, SchrodingerSystem, DENSE_LIMIT,
};
use gamma_solve::linalg::CMatrix;
use gamma_solve::solver::SolveError;
use gamma_solve::tensorfield::uplf;
use gamma_solve::{BlockLayout, Field, Grid, Representation, C64};
use serde::Deserialize;
use serde_json::json;

use crate::commands::{out_dir, write_field, write_json};
use crate::config::{from_json, read_text, SolverSpec};
use crate::{Cli, CliError};

/// `-∇·A∇` with `A = a I` or a full matrix over all position axes.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Kinetic {
    Scalar(f64),
    Matrix(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Potential {
    Constant(f64),
    /// `scale · Σ (x_i - center)^power` over every position axis.
    Monomial { center: f64, power: i32, scale: f64 },
    /// Row-major values on the configuration grid.
    Values(Vec<f64>),
    Voxel(PathBuf),
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
pub enum EnergyMode {
    #[serde(rename = "solve-dense")]
    SolveDense,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum EnergySpec {
    Value(f64),
    Mode(EnergyMode),
}

impl Default for EnergySpec {
    fn default() -> Self {
        EnergySpec::Mode(EnergyMode::SolveDense)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchrodingerConfig {
    pub electrons: usize,
    #[serde(default = "one")]
    pub d_space: usize,
    pub points: usize,
    pub length: f64,
    /// Defaults to `1/2`.
    pub a: Option<Kinetic>,
    pub potential: Potential,
    pub v_prime: Potential,
    /// A number, or `"solve-dense"` to take eigenstate `state` of the dense
    /// antisymmetric spectrum.
    #[serde(default)]
    pub energy: EnergySpec,
    #[serde(default)]
    pub state: usize,
    /// Eigenstate file; required with a numeric energy above the dense limit.
    pub psi: Option<PathBuf>,
    #[serde(default)]
    pub solver: SolverSpec,
    pub output: Option<PathBuf>,
}

fn one() -> usize {
    1
}

fn fermion(e: FermionError) -> CliError {
    match e {
        FermionError::Solve(SolveError::NotConverged(r)) => {
            CliError::not_converged(format!("residual {:.3e} after {} iterations", r.residual, r.iterations))
        }
        e @ (FermionError::NotEigenvalue { .. } | FermionError::Degenerate { .. }) => CliError::new("E_EIGEN", 1, e.to_string()),
        e => CliError::setup(e),
    }
}

fn potential(p: &Potential, grid: &Grid, base: &Path, key: &str) -> Result<Field<f64>, CliError> {
    let layout = BlockLayout::scalar();
    match p {
        Potential::Constant(c) => Ok(Field::from_fn(grid, &layout, |_: &[f64], v| v[0] = C64::new(*c, 0.0))),
        Potential::Monomial { center, power, scale } => Ok(Field::from_fn(grid, &layout, |x: &[f64], v| {
            v[0] = C64::new(scale * x.iter().map(|xi| (xi - center).powi(*power)).sum::<f64>(), 0.0)
        })),
        Potential::Values(vals) => {
            if vals.len() != grid.num_points() {
                return Err(CliError::config(key, format!("{} values for {} grid points", vals.len(), grid.num_points())));
            }
            Field::from_vec(grid, &layout, Representation::Real, vals.iter().map(|v| C64::new(*v, 0.0)).collect())
                .map_err(|e| CliError::config(key, e.to_string()))
        }
        Potential::Voxel(path) => read_scalar(&base.join(path), grid, key),
    }
}

fn read_scalar(path: &Path, grid: &Grid, key: &str) -> Result<Field<f64>, CliError> {
    if !path.exists() {
        return Err(CliError::io(path, std::io::Error::from(std::io::ErrorKind::NotFound)));
    }
    let f: Field<f64> = uplf::read_file(path).map_err(|e| CliError::voxel(key, e.to_string()))?;
    if f.grid() != grid || f.ncomp() != 1 || f.representation() != Representation::Real {
        return Err(CliError::voxel(key, "dimension mismatch: expected a real-space scalar on the configuration grid"));
    }
    Ok(f)
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::usage("schrodinger needs --config PATH"))?;
    let cfg: SchrodingerConfig = from_json(&read_text(path)?)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let out = out_dir(cli, cfg.output.as_deref())?;

    let mg = MultiElectronGrid::new(cfg.electrons, cfg.d_space, false, cfg.points, cfg.length)
        .map_err(|e| CliError::config(".", e.to_string()))?;
    let grid = mg.grid().clone();
    let n = grid.ndim();
    let a = match cfg.a.clone().unwrap_or(Kinetic::Scalar(0.5)) {
        Kinetic::Scalar(s) => CMatrix::identity(n).scale(C64::new(s, 0.0)),
        Kinetic::Matrix(rows) => {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(CliError::config("a", format!("expected a {n}x{n} matrix")));
            }
            CMatrix::from_fn(n, n, |i, j| C64::new(rows[i][j], 0.0))
        }
    };
    let v = potential(&cfg.potential, &grid, &base, "potential")?;
    let v_prime = potential(&cfg.v_prime, &grid, &base, "v_prime")?;
    let system = SchrodingerSystem::new(mg, a, v).map_err(fermion)?;

    let (energy, psi) = match (cfg.energy, &cfg.psi) {
        (EnergySpec::Value(e), Some(p)) => {
            let psi = read_scalar(&base.join(p), &grid, "psi")?;
            (e, gamma_solve::fermionic::normalize(&psi).map_err(fermion)?)
        }
        (_, _) if grid.num_points() > DENSE_LIMIT => {
            return Err(CliError::config(
                "psi",
                format!("grids above {DENSE_LIMIT} points need a numeric energy and a psi file"),
            ))
        }
        (EnergySpec::Mode(EnergyMode::SolveDense), _) => system.dense_eigenstate(cfg.state).map_err(fermion)?,
        (EnergySpec::Value(e), None) => {
            let (values, _) = system.antisymmetric_spectrum().map_err(fermion)?;
            let idx = values
                .iter()
                .enumerate()
                .min_by(|x, y| (x.1 - e).abs().total_cmp(&(y.1 - e).abs()))
                .map(|(i, _)| i)
                .ok_or_else(|| CliError::new("E_EIGEN", 1, "no antisymmetric states on this grid"))?;
            let (_, psi) = system.dense_eigenstate(idx).map_err(fermion)?;
            (e, psi)
        }
    };

    let opts = cfg.solver.options(cli.tol)?;
    let first = perturbation_solve(&system, &psi, energy, &v_prime, &opts).map_err(fermion)?;
    write_field(&out.join("psi.uplf"), &psi)?;
    write_field(&out.join("psi_prime.uplf"), &first.psi_prime)?;
    write_json(
        &out.join("perturbation.json"),
        &json!({
            "command": "schrodinger",
            "electrons": cfg.electrons,
            "d_space": cfg.d_space,
            "grid": {"dims": grid.dims(), "lengths": grid.lengths()},
            "energy": energy,
            "e_prime": first.e_prime,
            "orthogonality": first.orthogonality,
            "residual": first.residual,
            "iterations": first.iterations,
            "converged": true,
            "tol": opts.tol,
            "seed": cli.seed,
        }),
    )?;
    println!("E = {energy:.12e}, E' = {:.12e}; results in {}", first.e_prime, out.display());
    Ok(())
}
