use rayon::prelude::*;

use super::FermionError;
use crate::tensorfield::Grid;

/// A permutation of electron labels acting on arguments:
/// `(R_σ φ)(x₁, …, x_N) = φ(x_{σ(1)}, …, x_{σ(N)})`, so `R_σ R_τ = R_{σ∘τ}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn new(map: Vec<usize>) -> Result<Self, FermionError> {
        let mut seen = vec![false; map.len()];
        for &m in &map {
            if m >= map.len() || std::mem::replace(&mut seen[m], true) {
                return Err(FermionError::Setup(format!("{map:?} is not a permutation")));
            }
        }
        Ok(Self { map })
    }

    pub fn identity(n: usize) -> Self {
        Self { map: (0..n).collect() }
    }

    pub fn transposition(n: usize, i: usize, j: usize) -> Self {
        let mut map: Vec<usize> = (0..n).collect();
        map.swap(i, j);
        Self { map }
    }

    /// All `n!` permutations in lexicographic order.
    pub fn all(n: usize) -> Vec<Self> {
        fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Permutation>) {
            if prefix.len() == used.len() {
                out.push(Permutation { map: prefix.clone() });
                return;
            }
            for i in 0..used.len() {
                if !used[i] {
                    used[i] = true;
                    prefix.push(i);
                    rec(prefix, used, out);
                    prefix.pop();
                    used[i] = false;
                }
            }
        }
        let mut out = Vec::new();
        rec(&mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
        out
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn apply(&self, i: usize) -> usize {
        self.map[i]
    }

    /// `(-1)^(inversions)`.
    pub fn sign(&self) -> i32 {
        let n = self.map.len();
        let inv = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.map[i] > self.map[j])
            .count();
        if inv % 2 == 0 {
            1
        } else {
            -1
        }
    }

    pub fn inverse(&self) -> Self {
        let mut map = vec![0; self.map.len()];
        for (i, &m) in self.map.iter().enumerate() {
            map[m] = i;
        }
        Self { map }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            map: other.map.iter().map(|&i| self.map[i]).collect(),
        }
    }
}

/// Configuration grid of `N` electrons with identical per-electron grids.
///
/// Axis order: one 2-point spin axis per electron (when spin is on), then
/// `d_space` position axes per electron, electron by electron.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiElectronGrid {
    electrons: usize,
    d_space: usize,
    spin: bool,
    grid: Grid,
}

/// Spin axes use length 2 so each spin state carries unit quadrature weight.
pub const SPIN_AXIS_LENGTH: f64 = 2.0;

impl MultiElectronGrid {
    pub fn new(electrons: usize, d_space: usize, spin: bool, points: usize, length: f64) -> Result<Self, FermionError> {
        let mut dims = Vec::new();
        let mut lengths = Vec::new();
        if spin {
            dims.extend(std::iter::repeat_n(2, electrons));
            lengths.extend(std::iter::repeat_n(SPIN_AXIS_LENGTH, electrons));
        }
        dims.extend(std::iter::repeat_n(points, electrons * d_space));
        lengths.extend(std::iter::repeat_n(length, electrons * d_space));
        let grid = Grid::new(dims, lengths).map_err(|e| FermionError::Setup(e.to_string()))?;
        Self::from_grid(grid, electrons, d_space, spin)
    }

    pub fn from_grid(grid: Grid, electrons: usize, d_space: usize, spin: bool) -> Result<Self, FermionError> {
        if electrons == 0 || d_space == 0 {
            return Err(FermionError::Setup("need at least one electron and one spatial axis".into()));
        }
        let lead = if spin { electrons } else { 0 };
        if grid.ndim() != lead + electrons * d_space {
            return Err(FermionError::Setup(format!(
                "grid has {} axes, expected {}",
                grid.ndim(),
                lead + electrons * d_space
            )));
        }
        if grid.dims()[..lead].iter().any(|&n| n != 2) {
            return Err(FermionError::Setup("spin axes must have 2 points".into()));
        }
        let first = &grid.dims()[lead..lead + d_space];
        let first_len = &grid.lengths()[lead..lead + d_space];
        for e in 1..electrons {
            let r = lead + e * d_space..lead + (e + 1) * d_space;
            if &grid.dims()[r.clone()] != first || &grid.lengths()[r] != first_len {
                return Err(FermionError::Setup(format!("electron {e} has a different per-electron grid")));
            }
        }
        if grid.lengths()[..lead].iter().any(|&l| l != grid.lengths()[0]) {
            return Err(FermionError::Setup("spin axes must share one length".into()));
        }
        Ok(Self {
            electrons,
            d_space,
            spin,
            grid,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn electrons(&self) -> usize {
        self.electrons
    }

    pub fn d_space(&self) -> usize {
        self.d_space
    }

    pub fn spin(&self) -> bool {
        self.spin
    }

    /// Grid axes belonging to electron `e`: its spin axis (if any) then its
    /// position axes.
    pub fn axes_of(&self, e: usize) -> Vec<usize> {
        let lead = if self.spin { self.electrons } else { 0 };
        let mut axes = Vec::with_capacity(self.d_space + 1);
        if self.spin {
            axes.push(e);
        }
        axes.extend(lead + e * self.d_space..lead + (e + 1) * self.d_space);
        axes
    }

    /// `table[p]` is the flat index read by `R_σ` at point `p`.
    pub fn permutation_table(&self, sigma: &Permutation) -> Vec<usize> {
        assert_eq!(sigma.len(), self.electrons, "permutation size");
        let grid = &self.grid;
        let strides = grid.strides();
        let axes: Vec<Vec<usize>> = (0..self.electrons).map(|e| self.axes_of(e)).collect();
        (0..grid.num_points())
            .into_par_iter()
            .map_init(
                || vec![0usize; grid.ndim()],
                |idx, p| {
                    grid.multi_index(p, idx);
                    // slot m of the source reads electron σ(m)'s coordinates
                    let mut q = 0;
                    for (m, slot_axes) in axes.iter().enumerate() {
                        for (a_dst, a_src) in slot_axes.iter().zip(&axes[sigma.apply(m)]) {
                            q += idx[*a_src] * strides[*a_dst];
                        }
                    }
                    q
                },
            )
            .collect()
    }
}
