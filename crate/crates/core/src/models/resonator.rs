use super::ModelError;
use crate::linalg::CMatrix;
use crate::real::{Real, C};

/// Hidden-mass cavities along one axis: `n` cavities, each holding mass `m`
/// between two springs of constant `K`. Damping enters as `Im K < 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisResonator<T: Real> {
    pub cavities: usize,
    pub mass: T,
    pub spring: C<T>,
}

impl<T: Real> AxisResonator<T> {
    /// `ω* = √(2 Re K / m)`.
    pub fn resonance(&self) -> T {
        (T::lit(2.0) * self.spring.re / self.mass).sqrt()
    }
}

/// A bar of mass `M₀` with per-axis hidden resonators.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonatorSpec<T: Real> {
    pub bar_mass: T,
    pub axes: Vec<AxisResonator<T>>,
}

impl<T: Real> ResonatorSpec<T> {
    pub fn isotropic(bar_mass: T, cavities: usize, mass: T, spring: C<T>, d: usize) -> Self {
        Self {
            bar_mass,
            axes: vec![AxisResonator { cavities, mass, spring }; d],
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.bar_mass > T::zero()) {
            return Err(ModelError::Parameter("bar mass must be positive".into()));
        }
        if self.axes.is_empty() {
            return Err(ModelError::Parameter("at least one axis is required".into()));
        }
        for (i, a) in self.axes.iter().enumerate() {
            if a.cavities == 0 || !(a.mass > T::zero()) || !(a.spring.re > T::zero()) || !a.spring.im.is_finite() {
                return Err(ModelError::Parameter(format!(
                    "axis {i}: need n >= 1, m > 0 and Re K > 0"
                )));
            }
        }
        Ok(())
    }
}

/// `M = M₀ + 2Knm / (2K - mω²)` per axis.
pub fn effective_mass<T: Real>(omega: C<T>, r: &ResonatorSpec<T>) -> Result<Vec<C<T>>, ModelError> {
    r.validate()?;
    let two = T::lit(2.0);
    r.axes
        .iter()
        .map(|a| {
            let two_k = a.spring.scale(two);
            let denom = two_k - omega * omega * a.mass;
            if denom.norm() <= T::epsilon() * T::lit(16.0) * two_k.norm() {
                return Err(ModelError::Pole {
                    omega_star: a.resonance().to_f64_lossy(),
                });
            }
            let n = T::count(a.cavities);
            // ratio first so that ω = 0 gives exactly M₀ + nm
            Ok(C::new(r.bar_mass, T::zero()) + (two_k / denom) * (n * a.mass))
        })
        .collect()
}

/// Diagonal effective density `diag(M_i) / volume`.
pub fn build_resonator_density<T: Real>(
    omega: C<T>,
    r: &ResonatorSpec<T>,
    volume: T,
) -> Result<CMatrix<T>, ModelError> {
    if !(volume > T::zero()) {
        return Err(ModelError::Parameter("reference volume must be positive".into()));
    }
    let m = effective_mass(omega, r)?;
    let inv = T::one() / volume;
    Ok(CMatrix::from_diagonal(&m.iter().map(|x| x.scale(inv)).collect::<Vec<_>>()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::{passivity_check, AcousticsSpec, MaterialSpec};
    use crate::real::clit;
    use crate::tensorfield::Grid;

    fn unit(spring: C<f64>) -> ResonatorSpec<f64> {
        ResonatorSpec::isotropic(1.0, 1, 1.0, spring, 1)
    }

    #[test]
    fn caption_examples() {
        let r = unit(clit(1.0, 0.0));
        assert!((effective_mass(clit(1.0, 0.0), &r).unwrap()[0] - clit(3.0, 0.0)).norm() < 1e-15);
        let star = 2f64.sqrt();
        assert!(effective_mass(clit(1.4143, 0.0), &r).unwrap()[0].re < 0.0);
        assert!(effective_mass(clit(star * 0.999, 0.0), &r).unwrap()[0].re > 0.0);
        let r3 = ResonatorSpec::isotropic(2.0, 3, 0.5, clit(4.0, 0.0), 1);
        assert_eq!(effective_mass(clit(0.0, 0.0), &r3).unwrap()[0], clit(3.5, 0.0));
        assert!(matches!(effective_mass(clit(star, 0.0), &r), Err(ModelError::Pole { .. })));
        let exact = ResonatorSpec::isotropic(1.0, 1, 2.0, clit(4.0, 0.0), 1);
        assert!(matches!(effective_mass(clit(2.0, 0.0), &exact), Err(ModelError::Pole { .. })));
        assert!(unit(clit(-1.0, 0.0)).validate().is_err());
    }

    #[test]
    fn damping_gives_positive_imaginary_mass() {
        let r = unit(clit(1.0, -0.1));
        for i in 1..300 {
            let w = 3.0 * i as f64 / 300.0;
            assert!(effective_mass(clit(w, 0.0), &r).unwrap()[0].im > 0.0, "{w}");
        }
        let real = unit(clit(1.0, 0.0));
        assert_eq!(effective_mass(clit(0.7, 0.0), &real).unwrap()[0].im, 0.0);
    }

    #[test]
    fn anisotropic_density() {
        let same = ResonatorSpec::isotropic(1.0, 2, 1.0, clit(1.0, 0.0), 3);
        let d = build_resonator_density(clit(0.5, 0.0), &same, 2.0).unwrap();
        assert!((&d - &CMatrix::identity(3).scale(d[(0, 0)])).max_abs() < 1e-15);
        // stiff vertical springs: horizontal axes above resonance, vertical below
        let mut r = ResonatorSpec::isotropic(1.0, 1, 1.0, clit(1.0, 0.0), 2);
        r.axes[1].spring = clit(10.0, 0.0);
        let d = build_resonator_density(clit(1.6, 0.0), &r, 1.0).unwrap();
        assert!(d[(0, 0)].re < 0.0 && d[(1, 1)].re > 0.0);
    }

    #[test]
    fn lossy_density_is_passive_in_acoustics() {
        let r = ResonatorSpec::isotropic(1.0, 1, 1.0, clit(1.0, -0.05), 2);
        let g = Grid::new(vec![2, 2], vec![1.0, 1.0]).unwrap();
        let star = r.axes[0].resonance();
        for i in 1..60 {
            let w = 3.0 * i as f64 / 60.0;
            if (w - star).abs() < 1e-3 * star {
                continue;
            }
            let rho = build_resonator_density(clit(w, 0.0), &r, 1.0).unwrap();
            let l = MaterialSpec::Acoustics(AcousticsSpec {
                d: 2,
                omega: clit(w, 0.0),
                kappa: clit(1.0, 0.0).into(),
                rho: rho.into(),
                scale_by_omega: false,
            })
            .build(&g)
            .unwrap();
            assert!(passivity_check(&l).passes(), "{w}");
        }
    }
}
