use std::sync::Arc;

use gamma_solve::fermionic::{lambda_a, MultiElectronGrid, Permutation};
use gamma_solve::linalg::CMatrix;
use gamma_solve::models::{effective_mass, love_dispersion_roots, LoveProfile, ResonatorSpec};
use gamma_solve::projectors::{Brinkman, FirstIndex, Helmholtz, Maxwell, Projector, Surface, Thermoacoustic};
use gamma_solve::tensorfield::uplf;
use gamma_solve::{BlockLayout, Field, Grid, Representation, C64};
use proptest::prelude::*;

fn field(grid: &Grid, layout: &BlockLayout, vals: &[(f64, f64)]) -> Field<f64> {
    let n = grid.num_points() * layout.total_components();
    let data = (0..n).map(|i| {
        let (re, im) = vals[i % vals.len()];
        C64::new(re + i as f64 * 1e-3, im)
    });
    Field::from_vec(grid, layout, Representation::Real, data.collect()).unwrap()
}

fn defect(g: &CMatrix<f64>) -> f64 {
    let sq = g * g;
    (&sq - g).max_abs().max((g - &g.adjoint()).max_abs())
}

fn builders() -> Vec<Arc<dyn Projector<f64>>> {
    vec![
        Arc::new(Helmholtz { d: 3 }),
        Arc::new(Maxwell),
        Arc::new(FirstIndex { d: 2 }),
        Arc::new(Brinkman { d: 3 }),
        Arc::new(Thermoacoustic { d: 2 }),
        Arc::new(Surface::love(1.3)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projectors_are_orthogonal_projections(k in prop::collection::vec(-20.0f64..20.0, 3)) {
        for b in builders() {
            let g = b.gamma1(&k[..b.wave_dim()]);
            prop_assert!(defect(&g) <= 1e-12, "{}", b.name());
            let g2 = b.gamma2(&k[..b.wave_dim()]);
            prop_assert!((&g * &g2).max_abs() <= 1e-12);
        }
    }

    #[test]
    fn fft_is_unitary(
        dims in prop::collection::vec(2usize..7, 1..4),
        vals in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..16),
    ) {
        let g = Grid::new(dims.clone(), vec![1.0; dims.len()]).unwrap();
        let f = field(&g, &BlockLayout::vector_scalar(1), &vals);
        let fh = f.to_fourier().unwrap();
        prop_assert!(fh.to_real().unwrap().max_abs_diff(&f) <= 1e-13);
        let a: f64 = f.values().iter().map(|z| z.norm_sqr()).sum();
        let b: f64 = fh.values().iter().map(|z| z.norm_sqr()).sum();
        prop_assert!((a - b).abs() <= 1e-12 * a);
        // inner products survive the transform
        let ip = f.inner_product(&f).unwrap();
        prop_assert!((ip.re - fh.inner_product(&fh).unwrap().re).abs() <= 1e-12 * ip.re);
    }

    #[test]
    fn uplf_round_trip_is_exact(
        dims in prop::collection::vec(2usize..5, 1..4),
        vals in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 1..8),
        fourier in any::<bool>(),
    ) {
        let g = Grid::new(dims.clone(), vec![0.5; dims.len()]).unwrap();
        let mut f = field(&g, &BlockLayout::matrix_vector(2), &vals);
        if fourier {
            f = f.to_fourier().unwrap();
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.uplf");
        uplf::write_file(&f, &path).unwrap();
        let back: Field<f64> = uplf::read_file(&path).unwrap();
        prop_assert_eq!(back.representation(), f.representation());
        prop_assert_eq!(back.layout(), f.layout());
        prop_assert!(back.values().iter().zip(f.values()).all(|(a, b)| a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits()));
        let mut again = Vec::new();
        uplf::write(&back, &mut again).unwrap();
        prop_assert_eq!(again, std::fs::read(&path).unwrap());
    }

    #[test]
    fn permutation_sign_is_a_homomorphism(a in 0usize..120, b in 0usize..120) {
        let all = Permutation::all(5);
        let (p, q) = (&all[a], &all[b]);
        prop_assert_eq!(p.compose(q).sign(), p.sign() * q.sign());
        prop_assert_eq!(p.inverse().sign(), p.sign());
        prop_assert_eq!(p.compose(&p.inverse()), Permutation::identity(5));
    }

    #[test]
    fn effective_mass_limits(
        m0 in 0.1f64..10.0,
        n in 1usize..5,
        m in 0.1f64..5.0,
        k in 0.1f64..5.0,
        damping in 0.0f64..1.0,
        frac in 0.01f64..0.99,
    ) {
        let lossless = ResonatorSpec::isotropic(m0, n, m, C64::new(k, 0.0), 2);
        let stat = effective_mass(C64::new(0.0, 0.0), &lossless).unwrap();
        prop_assert!(stat.iter().all(|v| *v == C64::new(m0 + n as f64 * m, 0.0)));
        // real below resonance, and heavier than the bar
        let w = frac * (2.0 * k / m).sqrt();
        let below = effective_mass(C64::new(w, 0.0), &lossless).unwrap();
        prop_assert!(below.iter().all(|v| v.im == 0.0 && v.re > m0));
        let damped = ResonatorSpec::isotropic(m0, n, m, C64::new(k, -damping), 1);
        let v = effective_mass(C64::new(w * 1.7, 0.0), &damped).unwrap()[0];
        prop_assert!(v.im >= 0.0);
    }

    #[test]
    fn antisymmetrizer_is_idempotent(
        electrons in 2usize..4,
        points in 2usize..5,
        vals in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 3..40),
    ) {
        let g = MultiElectronGrid::new(electrons, 1, false, points, 1.0).unwrap();
        let phi = field(g.grid(), &BlockLayout::scalar(), &vals);
        let once = lambda_a(&phi, &g, false).unwrap();
        let twice = lambda_a(&once, &g, true).unwrap();
        prop_assert!(twice.max_abs_diff(&once) <= 1e-13);
    }

    #[test]
    fn love_roots_solve_the_relation(
        h in 0.2f64..2.0,
        mu1 in 0.5f64..2.0,
        contrast in 1.5f64..6.0,
        omega in 1.0f64..10.0,
    ) {
        let p = LoveProfile { h, mu1, rho1: 1.0, mu2: mu1 * contrast, rho2: 1.0 };
        let (lo, hi) = p.wavenumber_range(omega);
        for k in love_dispersion_roots(&p, omega).unwrap() {
            prop_assert!(k > lo && k < hi);
            let q1 = (omega * omega / mu1 - k * k).sqrt();
            let q2 = (k * k - omega * omega / p.mu2).sqrt();
            let scale = mu1 * q1 + p.mu2 * q2;
            prop_assert!(p.relation(omega, k).abs() <= 1e-8 * scale);
        }
    }
}
