use super::PhysicsError;
use crate::real::Real;
use crate::tensorfield::Grid;

/// How a material parameter varies over the cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Spatial<V> {
    Constant(V),
    /// Piecewise constant along `axis`: `values[i]` holds on
    /// `[breakpoints[i-1], breakpoints[i])`, so `values.len() == breakpoints.len() + 1`.
    Layered {
        axis: usize,
        breakpoints: Vec<f64>,
        values: Vec<V>,
    },
    /// Cell halved along every axis; sub-cells cycle through `values` by the
    /// parity-like sum of their half indices.
    Checkerboard(Vec<V>),
    /// One value per grid point, row-major.
    PerPoint(Vec<V>),
}

impl<V: Clone> Spatial<V> {
    pub fn validate(&self, grid: &Grid) -> Result<(), PhysicsError> {
        match self {
            Spatial::Constant(_) => Ok(()),
            Spatial::Layered {
                axis,
                breakpoints,
                values,
            } => {
                if *axis >= grid.ndim() {
                    return Err(PhysicsError::Parameter(format!(
                        "layer axis {axis} on a {}-axis grid",
                        grid.ndim()
                    )));
                }
                if values.len() != breakpoints.len() + 1 {
                    return Err(PhysicsError::Parameter(format!(
                        "{} layer values for {} breakpoints",
                        values.len(),
                        breakpoints.len()
                    )));
                }
                if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(PhysicsError::Parameter("breakpoints must increase".into()));
                }
                Ok(())
            }
            Spatial::Checkerboard(v) if v.is_empty() => {
                Err(PhysicsError::Parameter("checkerboard needs at least one value".into()))
            }
            Spatial::Checkerboard(_) => Ok(()),
            Spatial::PerPoint(v) if v.len() != grid.num_points() => Err(PhysicsError::Parameter(format!(
                "{} per-point values for {} grid points",
                v.len(),
                grid.num_points()
            ))),
            Spatial::PerPoint(_) => Ok(()),
        }
    }

    /// Value at grid point `p`. Call [`Spatial::validate`] first.
    pub fn at(&self, grid: &Grid, p: usize) -> V {
        match self {
            Spatial::Constant(v) => v.clone(),
            Spatial::PerPoint(v) => v[p].clone(),
            Spatial::Layered {
                axis,
                breakpoints,
                values,
            } => {
                let mut x = vec![0.0f64; grid.ndim()];
                grid.position::<f64>(p, &mut x);
                let i = breakpoints.iter().take_while(|&&b| b <= x[*axis]).count();
                values[i].clone()
            }
            Spatial::Checkerboard(values) => {
                let mut idx = vec![0; grid.ndim()];
                grid.multi_index(p, &mut idx);
                let s: usize = idx
                    .iter()
                    .zip(grid.dims())
                    .map(|(&m, &n)| (2 * m) / n)
                    .sum();
                values[s % values.len()].clone()
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Spatial::Constant(_))
    }

    pub fn map<W>(&self, f: impl Fn(&V) -> W) -> Spatial<W> {
        match self {
            Spatial::Constant(v) => Spatial::Constant(f(v)),
            Spatial::Layered {
                axis,
                breakpoints,
                values,
            } => Spatial::Layered {
                axis: *axis,
                breakpoints: breakpoints.clone(),
                values: values.iter().map(&f).collect(),
            },
            Spatial::Checkerboard(v) => Spatial::Checkerboard(v.iter().map(&f).collect()),
            Spatial::PerPoint(v) => Spatial::PerPoint(v.iter().map(&f).collect()),
        }
    }
}

impl<V> From<V> for Spatial<V> {
    fn from(v: V) -> Self {
        Spatial::Constant(v)
    }
}

/// Samples a closure of position into a per-point table.
pub fn sample<T: Real, V>(grid: &Grid, f: impl Fn(&[T]) -> V) -> Spatial<V> {
    let mut x = vec![T::zero(); grid.ndim()];
    let values = (0..grid.num_points())
        .map(|p| {
            grid.position(p, &mut x);
            f(&x)
        })
        .collect();
    Spatial::PerPoint(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layered_and_checkerboard() {
        let g = Grid::new(vec![8, 4], vec![4.0, 1.0]).unwrap();
        let layered = Spatial::Layered {
            axis: 0,
            breakpoints: vec![1.0, 3.0],
            values: vec![10, 20, 30],
        };
        layered.validate(&g).unwrap();
        // x0 = 0, 0.5, 1.0, ..., 3.5
        let got: Vec<i32> = (0..8).map(|i| layered.at(&g, i * 4)).collect();
        assert_eq!(got, vec![10, 10, 20, 20, 20, 20, 30, 30]);
        let cb = Spatial::Checkerboard(vec![0, 1]);
        assert_eq!(cb.at(&g, 0), 0);
        assert_eq!(cb.at(&g, 2), 1); // second half along axis 1
        assert_eq!(cb.at(&g, 4 * 4), 1); // second half along axis 0
        assert_eq!(cb.at(&g, 4 * 4 + 2), 0);
    }

    #[test]
    fn validation_errors() {
        let g = Grid::new(vec![4], vec![1.0]).unwrap();
        assert!(Spatial::PerPoint(vec![1, 2]).validate(&g).is_err());
        let bad = Spatial::Layered {
            axis: 1,
            breakpoints: vec![],
            values: vec![1],
        };
        assert!(bad.validate(&g).is_err());
    }
}
