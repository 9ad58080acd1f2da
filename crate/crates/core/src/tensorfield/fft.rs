//! Unitary multi-dimensional DFT over point-major, component-minor storage.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::{Fft, FftDirection, FftPlanner};

use super::Grid;
use crate::real::{Real, C};

/// Lines per rayon task when transforming along one axis.
const LINE_CHUNK: usize = 64;

/// Precomputed per-axis transforms for one grid shape.
///
/// Cheap to clone; solvers build one and reuse it for every iteration.
#[derive(Clone)]
pub struct FftPlan<T: Real> {
    dims: Vec<usize>,
    forward: Vec<Arc<dyn Fft<T>>>,
    inverse: Vec<Arc<dyn Fft<T>>>,
    /// Applied after each transform so both directions are unitary.
    norm: T,
}

impl<T: Real> FftPlan<T> {
    pub fn new(grid: &Grid) -> Self {
        let mut planner = FftPlanner::<T>::new();
        let forward = grid
            .dims()
            .iter()
            .map(|&n| planner.plan_fft(n, FftDirection::Forward))
            .collect();
        let inverse = grid
            .dims()
            .iter()
            .map(|&n| planner.plan_fft(n, FftDirection::Inverse))
            .collect();
        Self {
            dims: grid.dims().to_vec(),
            forward,
            inverse,
            norm: T::one() / T::count(grid.num_points()).sqrt(),
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Real-space samples to Fourier coefficients, in place.
    pub fn forward(&self, data: &mut [C<T>], ncomp: usize) {
        self.run(data, ncomp, &self.forward);
    }

    /// Fourier coefficients to real-space samples, in place.
    pub fn inverse(&self, data: &mut [C<T>], ncomp: usize) {
        self.run(data, ncomp, &self.inverse);
    }

    fn run(&self, data: &mut [C<T>], ncomp: usize, plans: &[Arc<dyn Fft<T>>]) {
        let npts: usize = self.dims.iter().product();
        assert_eq!(data.len(), npts * ncomp, "buffer does not match plan");
        for (axis, plan) in plans.iter().enumerate() {
            let n = self.dims[axis];
            let inner: usize = self.dims[axis + 1..].iter().product::<usize>() * ncomp;
            let slab = n * inner;
            let outer = data.len() / slab;
            if outer >= rayon::current_num_threads() * 2 {
                data.par_chunks_mut(slab)
                    .for_each(|s| transform_slab(s, n, inner, plan.as_ref(), false));
            } else {
                for s in data.chunks_mut(slab) {
                    transform_slab(s, n, inner, plan.as_ref(), true);
                }
            }
        }
        let norm = self.norm;
        data.par_iter_mut().for_each(|z| *z = z.scale(norm));
    }
}

/// Transforms the `inner` interleaved lines of length `n` held in `slab`.
fn transform_slab<T: Real>(slab: &mut [C<T>], n: usize, inner: usize, fft: &dyn Fft<T>, parallel: bool) {
    if inner == 1 {
        let mut scratch = vec![C::new(T::zero(), T::zero()); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(slab, &mut scratch);
        return;
    }
    let mut lines = vec![C::new(T::zero(), T::zero()); slab.len()];
    let src: &[C<T>] = slab;
    let gather = |(c, chunk): (usize, &mut [C<T>])| {
        let first = c * LINE_CHUNK;
        for (l, line) in chunk.chunks_mut(n).enumerate() {
            let i = first + l;
            for (m, z) in line.iter_mut().enumerate() {
                *z = src[m * inner + i];
            }
        }
        let mut scratch = vec![C::new(T::zero(), T::zero()); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(chunk, &mut scratch);
    };
    if parallel {
        lines
            .par_chunks_mut(LINE_CHUNK * n)
            .enumerate()
            .for_each(gather);
    } else {
        lines.chunks_mut(LINE_CHUNK * n).enumerate().for_each(gather);
    }
    let scatter = |(m, row): (usize, &mut [C<T>])| {
        for (i, z) in row.iter_mut().enumerate() {
            *z = lines[i * n + m];
        }
    };
    if parallel {
        slab.par_chunks_mut(inner).enumerate().for_each(scatter);
    } else {
        slab.chunks_mut(inner).enumerate().for_each(scatter);
    }
}
