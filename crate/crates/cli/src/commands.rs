use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use gamma_solve::linalg::CMatrix;
use gamma_solve::models::{
    effective_mass, love_dispersion_roots, love_resonance_scan, LoveProfile, LoveScanOptions, ModelError,
    ResonatorSpec,
};
use gamma_solve::projectors::{
    apply_gamma2, apply_projector, Brinkman, FirstIndex, Helmholtz, Maxwell, Projector, Surface, Thermoacoustic,
};
use gamma_solve::quasiperiodic::{effective_tensors, QuasiError};
use gamma_solve::solver::{self, write_history_csv, Method, Problem, SolveError, SolveOptions, SolveResult};
use gamma_solve::tensorfield::uplf;
use gamma_solve::{Field, Grid, Representation, C64};
use serde_json::{json, Value};

use crate::config::{load_config, RunConfig};
use crate::{Cli, CliError, DispersionArgs, Model, ProjectArgs, ProjectorKind};

pub(crate) fn config(cli: &Cli) -> Result<RunConfig, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::usage("this command needs --config PATH"))?;
    load_config(path)
}

pub(crate) fn out_dir(cli: &Cli, from_config: Option<&Path>) -> Result<PathBuf, CliError> {
    let dir = cli
        .out
        .clone()
        .or_else(|| from_config.map(Path::to_path_buf))
        .unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    Ok(dir)
}

pub(crate) fn write_json(path: &Path, v: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(v).expect("serializable");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub(crate) fn write_field(path: &Path, f: &Field<f64>) -> Result<(), CliError> {
    uplf::write_file(f, path).map_err(|e| CliError::new("E_IO", 1, format!("{}: {e}", path.display())))
}

pub(crate) fn write_history(path: &Path, history: &[f64]) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_history_csv(history, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(path, e))
}

pub(crate) fn cplx(z: C64) -> Value {
    json!([z.re, z.im])
}

fn matrix(m: &CMatrix<f64>) -> Value {
    Value::Array(
        (0..m.rows())
            .map(|i| Value::Array((0..m.cols()).map(|j| cplx(m[(i, j)])).collect()))
            .collect(),
    )
}

fn grid_json(g: &Grid) -> Value {
    json!({"dims": g.dims(), "lengths": g.lengths()})
}

pub(crate) fn method_name(o: &SolveOptions<f64>) -> &'static str {
    match o.method {
        Method::Krylov { .. } => "krylov",
        Method::FixedPoint { .. } => "fixed_point",
    }
}

fn assemble(cfg: &RunConfig, tol: Option<f64>) -> Result<(Grid, Problem<f64>, &'static str), CliError> {
    let grid = cfg.grid()?;
    let spec = cfg.material(&grid)?;
    let l = spec.build(&grid).map_err(CliError::setup)?;
    let forcing = cfg.forcing(&grid, &spec.forcing_layout())?;
    let s = spec.source(&l, &forcing).map_err(CliError::setup)?;
    let opts = cfg.solver.options(tol)?;
    let p = Problem::new(l, spec.projector(grid.ndim()), s, opts).map_err(CliError::setup)?;
    Ok((grid, p, spec.name()))
}

pub fn solve(cli: &Cli) -> Result<(), CliError> {
    let t0 = Instant::now();
    let cfg = config(cli)?;
    let out = out_dir(cli, cfg.output.as_deref())?;
    let (grid, problem, physics) = assemble(&cfg, cli.tol)?;
    let setup_s = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let (result, failure): (Option<SolveResult<f64>>, Option<CliError>) = match solver::solve(&problem) {
        Ok(r) => (Some(r), None),
        Err(SolveError::NotConverged(r)) => {
            let msg = format!("residual {:.3e} after {} iterations (tol {:e})", r.residual, r.iterations, problem.options().tol);
            (Some(*r), Some(CliError::not_converged(msg)))
        }
        Err(e @ SolveError::SingularOperator { .. }) => {
            if let SolveError::SingularOperator { history, .. } = &e {
                write_history(&out.join("residual_history.csv"), history)?;
            }
            (None, Some(CliError::not_converged(e)))
        }
        Err(e) => return Err(CliError::setup(e)),
    };
    let solve_s = t1.elapsed().as_secs_f64();

    let t2 = Instant::now();
    let mut summary = json!({
        "command": "solve",
        "physics": physics,
        "grid": grid_json(&grid),
        "omega": cplx(cfg.omega.value()),
        "method": method_name(problem.options()),
        "tol": problem.options().tol,
        "seed": cli.seed,
    });
    if let Some(r) = &result {
        write_field(&out.join("E.uplf"), &r.e)?;
        write_field(&out.join("J.uplf"), &r.j)?;
        write_history(&out.join("residual_history.csv"), &r.history)?;
        summary["residual"] = json!(r.residual);
        summary["iterations"] = json!(r.iterations);
        summary["converged"] = json!(r.converged && failure.is_none());
    } else {
        summary["converged"] = json!(false);
    }
    summary["timings"] = json!({"setup_s": setup_s, "solve_s": solve_s, "write_s": t2.elapsed().as_secs_f64()});
    write_json(&out.join("summary.json"), &summary)?;
    match failure {
        Some(e) => Err(e),
        None => {
            let r = result.expect("converged result");
            println!("converged: residual {:.3e} in {} iterations; results in {}", r.residual, r.iterations, out.display());
            Ok(())
        }
    }
}

pub fn effective(cli: &Cli) -> Result<(), CliError> {
    let cfg = config(cli)?;
    let bloch = cfg
        .bloch
        .as_ref()
        .ok_or_else(|| CliError::config("bloch", "effective needs a bloch section with k0"))?;
    let out = out_dir(cli, cfg.output.as_deref())?;
    let grid = cfg.grid()?;
    let spec = cfg.material(&grid)?;
    let l = spec.build(&grid).map_err(CliError::setup)?;
    let alpha = cfg.alpha(&grid)?;
    let opts = cfg.solver.options(cli.tol)?;
    let omega = cfg.omega.value();
    let t = effective_tensors(&l, spec.projector(grid.ndim()), &bloch.k0, &alpha, omega.re, &opts).map_err(|e| {
        let resonant = match &e {
            QuasiError::NearResonance { .. } => true,
            QuasiError::Partial { first, .. } => matches!(**first, QuasiError::NearResonance { .. }),
            _ => false,
        };
        if resonant {
            CliError::not_converged(e)
        } else {
            CliError::setup(e)
        }
    })?;
    let doc = json!({
        "command": "effective",
        "physics": spec.name(),
        "grid": grid_json(&grid),
        "omega": cplx(omega),
        "k0": t.k0,
        "tol": opts.tol,
        "seed": cli.seed,
        "l_e": matrix(&t.l_e),
        "l_j": matrix(&t.l_j),
    });
    write_json(&out.join("effective.json"), &doc)?;
    println!("effective tensors ({}x{}) written to {}", t.l_e.rows(), t.l_e.cols(), out.join("effective.json").display());
    Ok(())
}

/// Parses `start:stop:steps` into `steps` evenly spaced samples.
pub fn parse_scan(s: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || CliError::usage(format!("--scan expects start:stop:steps, got `{s}`"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if n < 2 || !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(CliError::usage(format!("--scan `{s}` needs start < stop and at least 2 steps")));
    }
    Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect())
}

fn model_error(e: ModelError) -> CliError {
    match e {
        ModelError::Parameter(m) => CliError::usage(m),
        e => CliError::setup(e),
    }
}

pub fn dispersion(cli: &Cli, a: &DispersionArgs) -> Result<(), CliError> {
    let out = out_dir(cli, None)?;
    let path = out.join("dispersion.csv");
    let mut csv = String::new();
    match a.model {
        Model::Effmass => {
            let r = ResonatorSpec::isotropic(a.bar_mass, a.cavities, a.mass, C64::new(a.spring, a.spring_im), 1);
            r.validate().map_err(model_error)?;
            let omegas = match &a.scan {
                Some(s) => parse_scan(s)?,
                None => parse_scan(&format!("0:{}:301", 3.0 * r.axes[0].resonance()))?,
            };
            csv.push_str("omega,re,im\n");
            for w in omegas {
                match effective_mass(C64::new(w, 0.0), &r) {
                    Ok(m) => csv.push_str(&format!("{w:e},{:e},{:e}\n", m[0].re, m[0].im)),
                    Err(ModelError::Pole { .. }) => csv.push_str(&format!("{w:e},NaN,NaN\n")),
                    Err(e) => return Err(model_error(e)),
                }
            }
            println!("effective mass scan written to {} (resonance at {:e})", path.display(), r.axes[0].resonance());
        }
        Model::Love => {
            let p = LoveProfile {
                h: a.h,
                mu1: a.mu1,
                rho1: a.rho1,
                mu2: a.mu2,
                rho2: a.rho2,
            };
            let roots = love_dispersion_roots(&p, a.omega).map_err(model_error)?;
            let (lo, hi) = p.wavenumber_range(a.omega);
            let ks = match &a.scan {
                Some(s) => parse_scan(s)?,
                None => {
                    if !(lo < hi) {
                        return Err(CliError::usage("no guided waves: the layer must be slower than the halfspace"));
                    }
                    let pad = 1e-3 * (hi - lo);
                    parse_scan(&format!("{}:{}:256", lo + pad, hi - pad))?
                }
            };
            let mut opts = LoveScanOptions::new(a.points, a.cell.unwrap_or(4.0 * a.h));
            opts.loss = a.loss;
            opts.samples = ks.len();
            let scan = love_resonance_scan(&p, a.omega, (ks[0], ks[ks.len() - 1]), &opts).map_err(model_error)?;
            csv.push_str("k1,response\n");
            for (k, r) in scan.k1.iter().zip(&scan.response) {
                csv.push_str(&format!("{k:e},{r:e}\n"));
            }
            write_json(
                &out.join("dispersion.json"),
                &json!({
                    "command": "dispersion",
                    "model": "love",
                    "omega": a.omega,
                    "roots": roots,
                    "peaks": scan.peaks,
                    "loss": scan.loss,
                    "points": a.points,
                }),
            )?;
            println!(
                "love scan written to {}: {} peak(s), {} guided mode(s)",
                path.display(),
                scan.peaks.len(),
                roots.len()
            );
        }
    }
    std::fs::write(&path, csv).map_err(|e| CliError::io(&path, e))
}

fn projector_for(kind: ProjectorKind, d: usize, k1: f64) -> Arc<dyn Projector<f64>> {
    match kind {
        ProjectorKind::Helmholtz => Arc::new(Helmholtz { d }),
        ProjectorKind::Maxwell => Arc::new(Maxwell),
        ProjectorKind::FirstIndex => Arc::new(FirstIndex { d }),
        ProjectorKind::Brinkman => Arc::new(Brinkman { d }),
        ProjectorKind::Thermoacoustic => Arc::new(Thermoacoustic { d }),
        ProjectorKind::Love => Arc::new(Surface::love(k1)),
    }
}

pub fn project(cli: &Cli, a: &ProjectArgs) -> Result<(), CliError> {
    if !a.field.exists() {
        return Err(CliError::io(&a.field, std::io::Error::from(std::io::ErrorKind::NotFound)));
    }
    let f: Field<f64> = uplf::read_file(&a.field).map_err(|e| CliError::new("E_FIELD", 1, format!("{}: {e}", a.field.display())))?;
    let grid = f.grid().clone();
    let gamma = projector_for(a.projector, grid.ndim(), a.k1);
    if gamma.wave_dim() != grid.ndim() {
        return Err(CliError::new(
            "E_LAYOUT",
            1,
            format!("{} expects a {}-axis grid, field has {}", gamma.name(), gamma.wave_dim(), grid.ndim()),
        ));
    }
    if f.layout() != &gamma.layout() {
        return Err(CliError::new(
            "E_LAYOUT",
            1,
            format!("{} acts on layout {}, field has {}", gamma.name(), gamma.layout(), f.layout()),
        ));
    }
    let real = f.representation() == Representation::Real;
    let hat = if real { f.to_fourier() } else { Ok(f.clone()) }.map_err(CliError::setup)?;
    let projected = if a.complement {
        apply_gamma2(gamma, &hat, None)
    } else {
        apply_projector(gamma, &hat, None)
    }
    .map_err(CliError::setup)?;
    let result = if real { projected.to_real().map_err(CliError::setup)? } else { projected };
    let out = out_dir(cli, None)?;
    let path = out.join("projected.uplf");
    write_field(&path, &result)?;
    println!("{} written ({})", path.display(), if a.complement { "gamma2" } else { "gamma1" });
    Ok(())
}

pub fn verify(cli: &Cli) -> Result<(), CliError> {
    let report = gamma_solve::verify::verify(cli.seed);
    print!("{}", report.table());
    if report.passed() {
        Ok(())
    } else {
        let names: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
        Err(CliError::new("E_VERIFY", 2, format!("{} check(s) failed: {}", names.len(), names.join(", "))))
    }
}
