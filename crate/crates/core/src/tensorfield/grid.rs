use std::f64::consts::PI;

use super::FieldError;
use crate::real::Real;

/// Periodic cell sampled on a uniform tensor-product grid.
///
/// Point order is row-major: the last axis varies fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dims: Vec<usize>,
    lengths: Vec<f64>,
}

impl Grid {
    pub fn new(dims: Vec<usize>, lengths: Vec<f64>) -> Result<Self, FieldError> {
        if dims.is_empty() {
            return Err(FieldError::Shape("grid needs at least one axis".into()));
        }
        if dims.len() != lengths.len() {
            return Err(FieldError::Shape(format!(
                "{} dims but {} lengths",
                dims.len(),
                lengths.len()
            )));
        }
        if let Some(n) = dims.iter().find(|&&n| n < 2) {
            return Err(FieldError::Shape(format!("axis with {n} points; need at least 2")));
        }
        if let Some(l) = lengths.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(FieldError::Shape(format!("cell length {l} is not positive")));
        }
        Ok(Self { dims, lengths })
    }

    /// Cube of side `length` with `n` points per axis.
    pub fn cube(dim: usize, n: usize, length: f64) -> Result<Self, FieldError> {
        Self::new(vec![n; dim], vec![length; dim])
    }

    #[inline]
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    #[inline]
    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    /// Number of axes.
    #[inline]
    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    #[inline]
    pub fn num_points(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn volume(&self) -> f64 {
        self.lengths.iter().product()
    }

    /// Quadrature weight of one grid point.
    pub fn point_weight(&self) -> f64 {
        self.volume() / self.num_points() as f64
    }

    /// Row-major strides in points.
    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.dims.len()];
        for a in (0..self.dims.len().saturating_sub(1)).rev() {
            s[a] = s[a + 1] * self.dims[a + 1];
        }
        s
    }

    pub fn flat_index(&self, index: &[usize]) -> Result<usize, FieldError> {
        if index.len() != self.dims.len() {
            return Err(FieldError::Bounds(format!(
                "index has {} entries for a {}-axis grid",
                index.len(),
                self.dims.len()
            )));
        }
        let mut p = 0;
        for (a, (&m, &n)) in index.iter().zip(&self.dims).enumerate() {
            if m >= n {
                return Err(FieldError::Bounds(format!("index {m} on axis {a} of size {n}")));
            }
            p = p * n + m;
        }
        Ok(p)
    }

    pub fn multi_index(&self, mut p: usize, out: &mut [usize]) {
        for a in (0..self.dims.len()).rev() {
            out[a] = p % self.dims[a];
            p /= self.dims[a];
        }
    }

    /// Signed integer frequency of index `m` on an axis of `n` points, in `[-n/2, n/2)`.
    #[inline]
    pub fn signed_frequency(m: usize, n: usize) -> i64 {
        if 2 * m < n {
            m as i64
        } else {
            m as i64 - n as i64
        }
    }

    /// Wavevector of a Fourier index tuple.
    pub fn wavevector<T: Real>(&self, index: &[usize]) -> Result<Vec<T>, FieldError> {
        let p = self.flat_index(index)?;
        let mut k = vec![T::zero(); self.ndim()];
        self.wavevector_flat(p, &mut k);
        Ok(k)
    }

    /// Wavevector of the flat Fourier index `p`, written into `k`.
    #[inline]
    pub fn wavevector_flat<T: Real>(&self, mut p: usize, k: &mut [T]) {
        for a in (0..self.dims.len()).rev() {
            let n = self.dims[a];
            let m = p % n;
            p /= n;
            let s = Self::signed_frequency(m, n) as f64;
            k[a] = T::lit(2.0 * PI * s / self.lengths[a]);
        }
    }

    /// Coordinates of real-space point `p`, starting at the origin.
    pub fn position<T: Real>(&self, mut p: usize, x: &mut [T]) {
        for a in (0..self.dims.len()).rev() {
            let n = self.dims[a];
            let m = p % n;
            p /= n;
            x[a] = T::lit(self.lengths[a] * m as f64 / n as f64);
        }
    }

    /// Flat index of the Fourier mode `-m` (modulo the grid).
    pub fn negated_flat(&self, p: usize) -> usize {
        let mut idx = vec![0; self.ndim()];
        self.multi_index(p, &mut idx);
        let mut q = 0;
        for (m, &n) in idx.iter().zip(&self.dims) {
            q = q * n + (n - m) % n;
        }
        q
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(vec![], vec![]).is_err());
        assert!(Grid::new(vec![1], vec![1.0]).is_err());
        assert!(Grid::new(vec![4], vec![0.0]).is_err());
        assert!(Grid::new(vec![4, 4], vec![1.0]).is_err());
    }

    #[test]
    fn wavevector_folding() {
        let g = Grid::new(vec![8], vec![2.0 * PI]).unwrap();
        assert_eq!(g.wavevector::<f64>(&[0]).unwrap(), vec![0.0]);
        assert!((g.wavevector::<f64>(&[1]).unwrap()[0] - 1.0).abs() < 1e-15);
        assert!((g.wavevector::<f64>(&[7]).unwrap()[0] + 1.0).abs() < 1e-15);
        assert!((g.wavevector::<f64>(&[4]).unwrap()[0] + 4.0).abs() < 1e-15);
        assert!(g.wavevector::<f64>(&[8]).is_err());
    }

    #[test]
    fn wavevector_is_odd_away_from_nyquist() {
        let g = Grid::new(vec![6, 5], vec![1.0, 3.0]).unwrap();
        let mut k = [0.0f64; 2];
        let mut kn = [0.0f64; 2];
        for p in 0..g.num_points() {
            let mut idx = [0; 2];
            g.multi_index(p, &mut idx);
            if idx[0] == 3 {
                continue;
            }
            g.wavevector_flat(p, &mut k);
            g.wavevector_flat(g.negated_flat(p), &mut kn);
            assert!((k[0] + kn[0]).abs() < 1e-14 && (k[1] + kn[1]).abs() < 1e-14);
        }
    }

    #[test]
    fn flat_and_multi_index_agree() {
        let g = Grid::new(vec![3, 4, 2], vec![1.0; 3]).unwrap();
        let mut idx = [0; 3];
        for p in 0..g.num_points() {
            g.multi_index(p, &mut idx);
            assert_eq!(g.flat_index(&idx).unwrap(), p);
        }
        assert_eq!(g.strides(), vec![8, 2, 1]);
    }
}
