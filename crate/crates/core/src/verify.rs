//! Self-check suite: projector algebra, closed-form cross-checks, transform
//! and file round trips, and small dense-oracle solves.

use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::CMatrix;
use crate::physics::{AcousticsSpec, MaterialSpec, MaxwellSpec, Spatial};
use crate::projectors::{
    Brinkman, DSymbol, FromD, Helmholtz, HelmholtzD, Maxwell, MaxwellD, Projector, Schrodinger, Surface, SurfaceD,
    Thermoacoustic,
};
use crate::real::{clit, C};
use crate::solver::{solve, Problem, SolveOptions};
use crate::tensorfield::{uplf, BlockLayout, Field, Grid, Representation};

/// One row of the report.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    /// Worst observed error; `NaN` when the check could not run.
    pub value: f64,
    pub tol: f64,
    pub passed: bool,
    pub note: String,
}

impl Check {
    fn measured(name: impl Into<String>, value: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tol,
            passed: value <= tol,
            note: String::new(),
        }
    }

    fn failed(name: impl Into<String>, note: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            value: f64::NAN,
            tol: 0.0,
            passed: false,
            note: note.into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
    pub seconds: f64,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// Fixed-width pass/fail table.
    pub fn table(&self) -> String {
        let w = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(4).max(5);
        let mut s = format!("{:<w$}  {:>10}  {:>8}  result\n", "check", "error", "tol");
        for c in &self.checks {
            let verdict = if c.passed { "PASS" } else { "FAIL" };
            let _ = write!(s, "{:<w$}  {:>10.3e}  {:>8.1e}  {verdict}", c.name, c.value, c.tol);
            if !c.note.is_empty() {
                let _ = write!(s, "  ({})", c.note);
            }
            s.push('\n');
        }
        let _ = writeln!(
            s,
            "{} of {} checks passed in {:.2} s",
            self.checks.iter().filter(|c| c.passed).count(),
            self.checks.len(),
            self.seconds
        );
        s
    }
}

/// The projector builders and closed-form pairs exercised by [`VerifySuite::run`].
///
/// Builders are injectable so that tests can confirm a corrupted symbol is
/// caught.
#[derive(Clone)]
pub struct VerifySuite {
    pub builders: Vec<(String, Arc<dyn Projector<f64>>)>,
    /// Closed form vs the same projector built from its symbol.
    pub closed_forms: Vec<(String, Arc<dyn Projector<f64>>, Arc<dyn DSymbol<f64>>)>,
    pub samples: usize,
    pub seed: u64,
}

impl VerifySuite {
    pub fn standard(seed: u64) -> Self {
        let maxwell: Arc<dyn Projector<f64>> = Arc::new(Maxwell);
        let helm: Arc<dyn Projector<f64>> = Arc::new(Helmholtz { d: 3 });
        let schr: Arc<dyn Projector<f64>> = Arc::new(Schrodinger { electrons: 2, d_space: 2 });
        let love: Arc<dyn Projector<f64>> = Arc::new(Surface::love(0.8));
        let maxwell_d: Arc<dyn DSymbol<f64>> = Arc::new(MaxwellD);
        Self {
            builders: vec![
                ("helmholtz".into(), helm.clone()),
                ("maxwell".into(), maxwell.clone()),
                ("brinkman".into(), Arc::new(Brinkman { d: 3 })),
                ("surface".into(), Arc::new(Surface::with_base(0.8, maxwell.clone()))),
                ("thermoacoustic".into(), Arc::new(Thermoacoustic { d: 3 })),
                ("schrodinger".into(), schr.clone()),
                ("from-d".into(), Arc::new(FromD::new(maxwell_d.clone()))),
            ],
            closed_forms: vec![
                ("helmholtz".into(), helm, Arc::new(HelmholtzD { d: 3 })),
                ("maxwell".into(), maxwell, maxwell_d),
                ("schrodinger".into(), schr, Arc::new(HelmholtzD { d: 4 })),
                ("surface".into(), love, Arc::new(SurfaceD { k1: 0.8, base: Arc::new(LoveBase) })),
            ],
            samples: 100,
            seed,
        }
    }

    /// Replaces the builder called `name` everywhere it is used.
    pub fn with_builder(mut self, name: &str, b: Arc<dyn Projector<f64>>) -> Self {
        for (n, slot) in &mut self.builders {
            if n == name {
                *slot = b.clone();
            }
        }
        for (n, slot, _) in &mut self.closed_forms {
            if n == name {
                *slot = b.clone();
            }
        }
        self
    }

    fn builder(&self, name: &str) -> Option<Arc<dyn Projector<f64>>> {
        self.builders.iter().find(|(n, _)| n == name).map(|(_, b)| b.clone())
    }

    pub fn run(&self) -> VerifyReport {
        let start = Instant::now();
        let mut checks = Vec::new();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        for (name, b) in &self.builders {
            checks.extend(projector_algebra(name, b.as_ref(), self.samples, &mut rng));
        }
        for (name, closed, d) in &self.closed_forms {
            checks.push(closed_form(name, closed.as_ref(), d.as_ref(), self.samples, &mut rng));
        }
        checks.extend(transforms(self.seed));
        checks.push(uplf_round_trip(self.seed));
        checks.push(dense_acoustics(self.seed));
        match self.builder("maxwell") {
            Some(m) => checks.push(dense_maxwell(m, self.seed)),
            None => checks.push(Check::failed("dense/maxwell", "no maxwell builder")),
        }
        VerifyReport {
            checks,
            seconds: start.elapsed().as_secs_f64(),
        }
    }
}

/// `(∂₃, 1)` read from the third wavevector component.
struct LoveBase;

impl DSymbol<f64> for LoveBase {
    fn name(&self) -> String {
        "love-base".into()
    }
    fn layout(&self) -> BlockLayout {
        BlockLayout::vector_scalar(1)
    }
    fn wave_dim(&self) -> usize {
        3
    }
    fn potential_components(&self) -> usize {
        1
    }
    fn eval(&self, k: &[f64]) -> CMatrix<f64> {
        DSymbol::<f64>::eval(&HelmholtzD { d: 1 }, &k[2..3])
    }
}

fn random_k(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.gen_range(-8.0..8.0)).collect()
}

fn projector_algebra(name: &str, b: &dyn Projector<f64>, samples: usize, rng: &mut ChaCha8Rng) -> Vec<Check> {
    let (mut idem, mut adj, mut comp) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..samples {
        let k = random_k(rng, b.wave_dim());
        let g1 = b.gamma1(&k);
        let g2 = b.gamma2(&k);
        let n = g1.frobenius_norm().max(f64::MIN_POSITIVE);
        idem = idem.max((&(&g1 * &g1) - &g1).frobenius_norm() / n);
        adj = adj.max((&g1 - &g1.adjoint()).frobenius_norm() / n);
        comp = comp.max((&g1 * &g2).frobenius_norm());
    }
    vec![
        Check::measured(format!("projector/{name}/idempotent"), idem, 1e-12),
        Check::measured(format!("projector/{name}/self-adjoint"), adj, 1e-12),
        Check::measured(format!("projector/{name}/complementary"), comp, 1e-12),
    ]
}

fn closed_form(name: &str, closed: &dyn Projector<f64>, d: &dyn DSymbol<f64>, samples: usize, rng: &mut ChaCha8Rng) -> Check {
    let label = format!("from-d/{name}");
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let k = random_k(rng, closed.wave_dim());
        match crate::projectors::gamma_from_d(d, &k) {
            Ok(g) => worst = worst.max((&g - &closed.gamma1(&k)).max_abs()),
            Err(e) => return Check::failed(label, e.to_string()),
        }
    }
    Check::measured(label, worst, 1e-12)
}

fn random_field(grid: &Grid, layout: &BlockLayout, seed: u64) -> Field<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.num_points() * layout.total_components();
    let data = (0..n).map(|_| clit(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    Field::from_vec(grid, layout, Representation::Real, data).expect("shape")
}

fn transforms(seed: u64) -> Vec<Check> {
    let grid = Grid::new(vec![12, 10, 6], vec![1.0, 2.0, 0.5]).expect("grid");
    let f = random_field(&grid, &BlockLayout::vector_scalar(3), seed);
    let run = || -> Result<(f64, f64), crate::FieldError> {
        let hat = f.to_fourier()?;
        let back = hat.to_real()?;
        let scale = f.values().iter().map(|z| z.norm()).fold(0.0, f64::max);
        let roundtrip = back.max_abs_diff(&f) / scale;
        let plancherel = (hat.norm() - f.norm()).abs() / f.norm();
        Ok((roundtrip, plancherel))
    };
    match run() {
        Ok((r, p)) => vec![
            Check::measured("fft/round-trip", r, 1e-13),
            Check::measured("fft/plancherel", p, 1e-12),
        ],
        Err(e) => vec![Check::failed("fft/round-trip", e.to_string())],
    }
}

fn uplf_round_trip(seed: u64) -> Check {
    let grid = Grid::new(vec![5, 4], vec![1.0, 3.0]).expect("grid");
    let f = random_field(&grid, &BlockLayout::matrix_vector(2), seed ^ 0x55);
    let run = || -> Result<bool, crate::FieldError> {
        let mut a = Vec::new();
        uplf::write(&f, &mut a)?;
        let g: Field<f64> = uplf::read(a.as_slice())?;
        let mut b = Vec::new();
        uplf::write(&g, &mut b)?;
        Ok(a == b && g.values() == f.values())
    };
    match run() {
        Ok(true) => Check::measured("uplf/byte-round-trip", 0.0, 0.0),
        Ok(false) => Check::failed("uplf/byte-round-trip", "bytes differ"),
        Err(e) => Check::failed("uplf/byte-round-trip", e.to_string()),
    }
}

/// Solves `Γ F L F† Γ x + (I - Γ) x = Γ F s` densely and compares with the
/// iterative solution mapped to Fourier space.
fn dense_compare(name: &str, p: &Problem<f64>) -> Check {
    let label = format!("dense/{name}");
    let r = match solve(p) {
        Ok(r) => r,
        Err(e) => return Check::failed(label, e.to_string()),
    };
    let g = p.grid();
    let nc = p.material().ncomp();
    let np = g.num_points();
    let n = np * nc;
    let mut gam = CMatrix::zeros(n, n);
    let mut lmat = CMatrix::zeros(n, n);
    let mut k = vec![0.0; g.ndim()];
    for q in 0..np {
        g.wavevector_flat(q, &mut k);
        let gk = p.projector().builder().gamma1(&k);
        let lq = p.material().at(q);
        for a in 0..nc {
            for b in 0..nc {
                gam[(q * nc + a, q * nc + b)] = gk[(a, b)];
                lmat[(q * nc + a, q * nc + b)] = lq[(a, b)];
            }
        }
    }
    let mut ia = vec![0; g.ndim()];
    let mut ib = vec![0; g.ndim()];
    let mut f = CMatrix::zeros(n, n);
    for kp in 0..np {
        g.multi_index(kp, &mut ia);
        for xp in 0..np {
            g.multi_index(xp, &mut ib);
            let phase: f64 = (0..g.ndim()).map(|ax| (ia[ax] * ib[ax]) as f64 / g.dims()[ax] as f64).sum();
            let w = C::from_polar(1.0 / (np as f64).sqrt(), -2.0 * std::f64::consts::PI * phase);
            for c in 0..nc {
                f[(kp * nc + c, xp * nc + c)] = w;
            }
        }
    }
    let fi = f.adjoint();
    let a = &(&(&(&gam * &f) * &lmat) * &fi) * &gam;
    let a = &a + &(&CMatrix::identity(n) - &gam);
    let b = (&gam * &f).matvec(p.source().values());
    let x = match a.solve(&b) {
        Ok(x) => x,
        Err(e) => return Check::failed(label, e.to_string()),
    };
    let want = fi.matvec(&x);
    let diff: f64 = r.e.values().iter().zip(&want).map(|(u, v)| (u - v).norm_sqr()).sum::<f64>().sqrt();
    let norm: f64 = want.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    Check::measured(label, diff / norm.max(f64::MIN_POSITIVE), 1e-8)
}

fn tight() -> SolveOptions<f64> {
    SolveOptions {
        tol: 1e-11,
        ..SolveOptions::default()
    }
}

fn dense_acoustics(seed: u64) -> Check {
    let grid = Grid::new(vec![4, 4], vec![1.0, 1.0]).expect("grid");
    let spec = MaterialSpec::Acoustics(AcousticsSpec {
        d: 2,
        omega: clit(5.0, 0.0),
        kappa: Spatial::Checkerboard(vec![clit(1.0, 0.0), clit(2.0, 0.5)]),
        rho: CMatrix::identity(2).into(),
        scale_by_omega: false,
    });
    let run = || -> Result<Problem<f64>, String> {
        let l = spec.build(&grid).map_err(|e| e.to_string())?;
        let s = spec
            .source(&l, &random_field(&grid, &spec.forcing_layout(), seed ^ 0xa0))
            .map_err(|e| e.to_string())?;
        Problem::new(l, spec.projector(2), s, tight()).map_err(|e| e.to_string())
    };
    match run() {
        Ok(p) => dense_compare("acoustics", &p),
        Err(e) => Check::failed("dense/acoustics", e),
    }
}

fn dense_maxwell(gamma: Arc<dyn Projector<f64>>, seed: u64) -> Check {
    let grid = Grid::cube(3, 3, 2.0).expect("grid");
    let eps = Spatial::Checkerboard(vec![CMatrix::identity(3), CMatrix::identity(3).scale(clit(3.0, 0.4))]);
    let spec = MaterialSpec::Maxwell(MaxwellSpec {
        omega: clit(1.7, 0.0),
        eps,
        mu: CMatrix::identity(3).into(),
    });
    let run = || -> Result<Problem<f64>, String> {
        let l = spec.build(&grid).map_err(|e| e.to_string())?;
        let s = spec
            .source(&l, &random_field(&grid, &spec.forcing_layout(), seed ^ 0xb0))
            .map_err(|e| e.to_string())?;
        Problem::new(l, gamma, s, tight()).map_err(|e| e.to_string())
    };
    match run() {
        Ok(p) => dense_compare("maxwell", &p),
        Err(e) => Check::failed("dense/maxwell", e),
    }
}

/// Runs the standard suite.
pub fn verify(seed: u64) -> VerifyReport {
    VerifySuite::standard(seed).run()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Maxwell symbol with one off-diagonal block negated.
    struct Corrupted;

    impl Projector<f64> for Corrupted {
        fn name(&self) -> String {
            "corrupted-maxwell".into()
        }
        fn layout(&self) -> BlockLayout {
            Projector::<f64>::layout(&Maxwell)
        }
        fn wave_dim(&self) -> usize {
            3
        }
        fn gamma1(&self, k: &[f64]) -> CMatrix<f64> {
            let mut g = Projector::<f64>::gamma1(&Maxwell, k);
            for a in 0..3 {
                for b in 3..6 {
                    g[(a, b)] = -g[(a, b)];
                }
            }
            g
        }
    }

    #[test]
    fn pristine_suite_passes() {
        let r = verify(42);
        assert!(r.passed(), "{}", r.table());
        assert!(r.checks.len() >= 7 * 3 + 4 + 4);
    }

    #[test]
    fn sign_flip_is_caught() {
        let r = VerifySuite::standard(42).with_builder("maxwell", Arc::new(Corrupted)).run();
        let failed: Vec<&str> = r.failures().map(|c| c.name.as_str()).collect();
        assert!(failed.contains(&"projector/maxwell/idempotent"), "{failed:?}");
        assert!(r.table().contains("FAIL"));
    }
}
