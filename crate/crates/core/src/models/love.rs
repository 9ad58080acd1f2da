use rayon::prelude::*;

use super::ModelError;
use crate::linalg::CMatrix;
use crate::real::{Real, C};

/// Layer of thickness `h` over a halfspace, both in antiplane shear.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoveProfile<T: Real> {
    pub h: T,
    pub mu1: T,
    pub rho1: T,
    pub mu2: T,
    pub rho2: T,
}

impl<T: Real> LoveProfile<T> {
    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, v) in [("h", self.h), ("mu1", self.mu1), ("rho1", self.rho1), ("mu2", self.mu2), ("rho2", self.rho2)] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(ModelError::Parameter(format!("{name} must be positive and finite")));
            }
        }
        Ok(())
    }

    /// `(ω/β₂, ω/β₁)` with shear speeds `β = √(μ/ρ)`; empty when `β₁ ≥ β₂`.
    pub fn wavenumber_range(&self, omega: T) -> (T, T) {
        (omega * (self.rho2 / self.mu2).sqrt(), omega * (self.rho1 / self.mu1).sqrt())
    }

    /// `g(k₁) = μ₁q₁ sin(q₁h) - μ₂q̂₂ cos(q₁h)`, zero exactly on the Love
    /// relation `tan(q₁h) = μ₂q̂₂/(μ₁q₁)` and free of its poles.
    pub fn relation(&self, omega: T, k1: T) -> T {
        let q1 = (omega * omega * self.rho1 / self.mu1 - k1 * k1).max(T::zero()).sqrt();
        let q2 = (k1 * k1 - omega * omega * self.rho2 / self.mu2).max(T::zero()).sqrt();
        self.mu1 * q1 * (q1 * self.h).sin() - self.mu2 * q2 * (q1 * self.h).cos()
    }
}

/// Guided-mode wavenumbers, fundamental (largest `k₁`) first.
///
/// Sign changes of [`LoveProfile::relation`] are bracketed on a sampling
/// that resolves its oscillation and refined by bisection to a relative
/// tolerance of `1e-10`.
pub fn love_dispersion_roots<T: Real>(p: &LoveProfile<T>, omega: T) -> Result<Vec<T>, ModelError> {
    p.validate()?;
    if !(omega > T::zero()) {
        return Err(ModelError::Parameter("omega must be positive".into()));
    }
    let (lo, hi) = p.wavenumber_range(omega);
    if !(lo < hi) {
        return Ok(Vec::new());
    }
    let qmax = omega * (p.rho1 / p.mu1 - p.rho2 / p.mu2).sqrt() * p.h;
    let samples = 2000usize.max((qmax.to_f64_lossy() * 64.0) as usize);
    let f = |k: T| p.relation(omega, k);
    let at = |i: usize| lo + (hi - lo) * T::count(i) / T::count(samples);
    let mut roots = Vec::new();
    let mut prev = (at(1), f(at(1)));
    for i in 2..samples {
        let k = at(i);
        let v = f(k);
        if v.is_zero() {
            roots.push(k);
        } else if prev.1.signum() * v.signum() < T::zero() {
            let (mut a, mut fa, mut b) = (prev.0, prev.1, k);
            while (b - a) > T::lit(1e-10) * b.abs() * T::lit(0.5) {
                let m = (a + b) * T::lit(0.5);
                let fm = f(m);
                if fm.signum() == fa.signum() {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
            }
            roots.push((a + b) * T::lit(0.5));
        }
        prev = (k, v);
    }
    roots.reverse();
    Ok(roots)
}

/// Discretization of the periodic slab model used by [`love_resonance_scan`].
#[derive(Debug, Clone, PartialEq)]
pub struct LoveScanOptions<T: Real> {
    /// Grid points across the cell.
    pub points: usize,
    /// Cell length; the cell holds a symmetric layer slab of width `2h`.
    pub cell: T,
    /// Artificial loss, `μ → μ(1 + i·loss)`.
    pub loss: T,
    /// Number of `k₁` samples across the scanned range.
    pub samples: usize,
    /// Width of the Gaussian source bumps placed at both interfaces.
    pub source_width: T,
}

impl<T: Real> LoveScanOptions<T> {
    pub fn new(points: usize, cell: T) -> Self {
        Self {
            points,
            cell,
            loss: T::lit(1e-6),
            samples: 256,
            source_width: cell / T::lit(64.0),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoveScan<T: Real> {
    pub k1: Vec<T>,
    /// `‖E‖ / ‖s‖` at each sample.
    pub response: Vec<T>,
    /// Refined local maxima of the response, ascending in `k₁`.
    pub peaks: Vec<T>,
    pub loss: T,
}

/// Solves the one-dimensional layered problem `J = L E - s`,
/// `L = diag(μ, k₁²μ - ω²ρ)`, `E = (u′, u)`, on a periodic cell with a
/// symmetric layer slab, for each `k₁` in `range`.
///
/// The slab's symmetric modes are the Love modes of a layer over a
/// halfspace; the source is symmetric so antisymmetric modes stay silent.
pub fn love_resonance_scan<T: Real>(
    p: &LoveProfile<T>,
    omega: T,
    range: (T, T),
    opts: &LoveScanOptions<T>,
) -> Result<LoveScan<T>, ModelError> {
    p.validate()?;
    let n = opts.points;
    if n < 8 || opts.samples < 3 || !(range.0 < range.1) {
        return Err(ModelError::Parameter("need >= 8 points, >= 3 samples and an increasing range".into()));
    }
    if !(opts.cell > T::lit(2.0) * p.h) {
        return Err(ModelError::Parameter("cell must be longer than the slab 2h".into()));
    }
    if T::count(n) * p.h / opts.cell < T::lit(16.0) {
        return Err(ModelError::Parameter("grid must resolve the layer with at least 16 points".into()));
    }
    let model = SlabModel::new(p, omega, opts);
    let k1: Vec<T> = (0..opts.samples)
        .map(|i| range.0 + (range.1 - range.0) * T::count(i) / T::count(opts.samples - 1))
        .collect();
    let response: Vec<T> = k1.par_iter().map(|&k| model.response(k)).collect::<Result<_, _>>()?;
    let mut peaks = Vec::new();
    for i in 1..response.len() - 1 {
        if response[i] > response[i - 1] && response[i] >= response[i + 1] {
            peaks.push(golden_max(|k| model.response(k), k1[i - 1], k1[i + 1])?);
        }
    }
    Ok(LoveScan {
        k1,
        response,
        peaks,
        loss: opts.loss,
    })
}

struct SlabModel<T: Real> {
    n: usize,
    k: Vec<T>,
    mu_hat: Vec<C<T>>,
    rho_hat: Vec<C<T>>,
    f_hat: Vec<C<T>>,
    f_norm: T,
    omega: T,
}

/// Unitary DFT of a real-space sample vector (direct sums; `n` is small).
fn dft<T: Real>(x: &[C<T>]) -> Vec<C<T>> {
    let n = x.len();
    let scale = T::one() / T::count(n).sqrt();
    (0..n)
        .map(|m| {
            x.iter()
                .enumerate()
                .map(|(j, v)| {
                    let ang = -T::lit(2.0 * std::f64::consts::PI) * T::count((m * j) % n) / T::count(n);
                    *v * C::new(ang.cos(), ang.sin())
                })
                .fold(C::new(T::zero(), T::zero()), |a, b| a + b)
                .scale(scale)
        })
        .collect()
}

impl<T: Real> SlabModel<T> {
    fn new(p: &LoveProfile<T>, omega: T, opts: &LoveScanOptions<T>) -> Self {
        let n = opts.points;
        let dx = opts.cell / T::count(n);
        let centre = opts.cell * T::lit(0.5);
        let xs: Vec<T> = (0..n).map(|i| T::count(i) * dx).collect();
        let in_layer = |x: T| (x - centre).abs() < p.h;
        let lossy = C::new(T::one(), opts.loss);
        let mu: Vec<C<T>> = xs.iter().map(|&x| lossy.scale(if in_layer(x) { p.mu1 } else { p.mu2 })).collect();
        let rho: Vec<C<T>> = xs.iter().map(|&x| C::new(if in_layer(x) { p.rho1 } else { p.rho2 }, T::zero())).collect();
        let w2 = opts.source_width * opts.source_width;
        let f: Vec<C<T>> = xs
            .iter()
            .map(|&x| {
                let bump = |c: T| {
                    // periodic distance
                    let mut d = (x - c).abs();
                    d = d.min(opts.cell - d);
                    (-(d * d) / w2).exp()
                };
                C::new(bump(centre - p.h) + bump(centre + p.h), T::zero())
            })
            .collect();
        // circulant symbols: (F a F⁻¹)_{ij} = â_{i-j} / √n with unitary â
        let sqrt_n = T::count(n).sqrt();
        let mu_hat = dft(&mu).into_iter().map(|z| z.unscale(sqrt_n)).collect();
        let rho_hat = dft(&rho).into_iter().map(|z| z.unscale(sqrt_n)).collect();
        let f_hat = dft(&f);
        let f_norm = f.iter().map(|z| z.norm_sqr()).fold(T::zero(), |a, b| a + b).sqrt();
        let two_pi = T::lit(2.0 * std::f64::consts::PI);
        let k = (0..n)
            .map(|m| {
                let s = if 2 * m < n { m as f64 } else { m as f64 - n as f64 };
                two_pi * T::lit(s) / opts.cell
            })
            .collect();
        Self {
            n,
            k,
            mu_hat,
            rho_hat,
            f_hat,
            f_norm,
            omega,
        }
    }

    /// `‖(u′, u)‖ / ‖s‖` from the dense Fourier system `D†LD û = f̂`.
    fn response(&self, k1: T) -> Result<T, ModelError> {
        let n = self.n;
        let w2 = self.omega * self.omega;
        let m = CMatrix::from_fn(n, n, |i, j| {
            let d = (i + n - j) % n;
            self.mu_hat[d].scale(self.k[i] * self.k[j] + k1 * k1) - self.rho_hat[d].scale(w2)
        });
        let u = m.solve(&self.f_hat).map_err(|e| ModelError::Solve(e.to_string()))?;
        let e2 = u
            .iter()
            .zip(&self.k)
            .map(|(z, k)| z.norm_sqr() * (*k * *k + T::one()))
            .fold(T::zero(), |a, b| a + b);
        Ok(e2.sqrt() / self.f_norm)
    }
}

/// Golden-section search for the maximum of a unimodal function on `[a, b]`.
fn golden_max<T: Real>(f: impl Fn(T) -> Result<T, ModelError>, mut a: T, mut b: T) -> Result<T, ModelError> {
    let r = T::lit((5f64.sqrt() - 1.0) / 2.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while (b - a) > T::lit(1e-12) * (a.abs() + b.abs()) {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
    }
    Ok((a + b) * T::lit(0.5))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn contrast() -> LoveProfile<f64> {
        LoveProfile {
            h: 1.0,
            mu1: 1.0,
            rho1: 1.0,
            mu2: 4.0,
            rho2: 1.0,
        }
    }

    #[test]
    fn roots_satisfy_the_relation() {
        let p = contrast();
        let roots = love_dispersion_roots(&p, 6.0).unwrap();
        assert!(!roots.is_empty());
        for &k in &roots {
            let q1 = (36.0 - k * k).sqrt();
            let q2 = (k * k - 9.0).sqrt();
            let scale = p.mu1 * q1 + p.mu2 * q2;
            assert!(p.relation(6.0, k).abs() <= 1e-9 * scale);
            // tan form wherever it is defined
            if (q1 * p.h).cos().abs() > 1e-3 {
                assert!(((q1 * p.h).tan() - p.mu2 * q2 / (p.mu1 * q1)).abs() < 1e-6 * (1.0 + (q1 * p.h).tan().abs()));
            }
        }
        assert!(roots.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn mode_count_grows_with_frequency() {
        let p = contrast();
        let counts: Vec<usize> = [0.5, 1.0, 2.0, 4.0, 8.0, 12.0]
            .iter()
            .map(|&w| love_dispersion_roots(&p, w).unwrap().len())
            .collect();
        assert!(counts.windows(2).all(|c| c[0] <= c[1]), "{counts:?}");
        assert!(*counts.last().unwrap() >= 3);
    }

    #[test]
    fn no_contrast_no_modes() {
        let p = LoveProfile {
            h: 1.0,
            mu1: 2.0,
            rho1: 1.0,
            mu2: 2.0,
            rho2: 1.0,
        };
        assert!(love_dispersion_roots(&p, 3.0).unwrap().is_empty());
    }

    #[test]
    fn scan_peaks_near_the_fundamental_root() {
        let p = contrast();
        let omega = 6.0;
        let root = love_dispersion_roots(&p, omega).unwrap()[0];
        let (lo, hi) = p.wavenumber_range(omega);
        let mut opts = LoveScanOptions::new(64, 4.0);
        opts.samples = 64;
        let scan = love_resonance_scan(&p, omega, (lo + 0.05, hi - 0.05), &opts).unwrap();
        assert!(scan.response.iter().all(|r| r.is_finite() && *r > 0.0));
        let peak = *scan.peaks.last().unwrap();
        assert!((peak - root).abs() < 0.05 * root, "{peak} vs {root}");
        assert!(love_resonance_scan(&p, omega, (lo, hi), &LoveScanOptions::new(32, 4.0)).is_err());
    }
}
