//! Decision-boundary grids for two-feature models.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{softmax_rows, Matrix, Network};

/// One grid point: coordinates, predicted class, and the maximum softmax
/// probability at that point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub x1: f64,
    pub x2: f64,
    pub pred: usize,
    pub confidence: f64,
}

/// Evaluates the model over a `resolution x resolution` grid spanning the
/// given ranges (endpoints included). Rows iterate `x1` in the outer loop.
pub fn decision_boundary_grid(
    net: &Network,
    x_range: (f64, f64),
    y_range: (f64, f64),
    resolution: usize,
) -> Result<Vec<BoundaryPoint>> {
    if net.input_dim() != 2 {
        return Err(Error::DimMismatch {
            context: "decision_boundary_grid",
            expected: "a 2-feature model".into(),
            actual: format!("{} input features", net.input_dim()),
        });
    }
    if resolution == 0 {
        return Err(Error::InvalidConfig("grid resolution must be positive".into()));
    }
    let coord = |range: (f64, f64), i: usize| {
        if resolution == 1 {
            (range.0 + range.1) / 2.0
        } else {
            range.0 + (range.1 - range.0) * i as f64 / (resolution - 1) as f64
        }
    };

    let mut grid = Matrix::zeros(resolution * resolution, 2);
    let mut row = 0;
    for i in 0..resolution {
        let x1 = coord(x_range, i);
        for j in 0..resolution {
            grid.set(row, 0, x1);
            grid.set(row, 1, coord(y_range, j));
            row += 1;
        }
    }

    let probs = softmax_rows(&net.forward(&grid)?);
    let mut points = Vec::with_capacity(grid.rows());
    for r in 0..grid.rows() {
        let p = probs.row(r);
        let mut pred = 0;
        for (k, &v) in p.iter().enumerate() {
            if v > p[pred] {
                pred = k;
            }
        }
        points.push(BoundaryPoint {
            x1: grid.get(r, 0),
            x2: grid.get(r, 1),
            pred,
            confidence: p[pred],
        });
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_has_resolution_squared_rows() {
        let net = Network::zeros(&[2, 2]).unwrap();
        let grid = decision_boundary_grid(&net, (-1.0, 1.0), (-1.0, 1.0), 17).unwrap();
        assert_eq!(grid.len(), 17 * 17);
    }

    #[test]
    fn zero_network_has_uniform_confidence() {
        let net = Network::zeros(&[2, 2]).unwrap();
        let grid = decision_boundary_grid(&net, (-2.0, 2.0), (-2.0, 2.0), 9).unwrap();
        for p in grid {
            assert!((p.confidence - 0.5).abs() < 1e-12);
            assert_eq!(p.pred, 0);
        }
    }

    #[test]
    fn linear_separator_crosses_where_the_algebra_says() {
        // logits = (0, 4*x1 - 2): the classes flip exactly at x1 = 0.5.
        let w = Matrix::from_rows(&[vec![0.0, 4.0], vec![0.0, 0.0]]).unwrap();
        let net = Network::from_parts(vec![w], vec![vec![0.0, -2.0]]).unwrap();
        let resolution = 101;
        let grid = decision_boundary_grid(&net, (-1.0, 1.0), (-1.0, 1.0), resolution).unwrap();
        let cell = 2.0 / (resolution - 1) as f64;
        for p in grid {
            if p.x1 > 0.5 + cell {
                assert_eq!(p.pred, 1, "x1 = {}", p.x1);
            }
            if p.x1 < 0.5 - cell {
                assert_eq!(p.pred, 0, "x1 = {}", p.x1);
            }
        }
    }

    #[test]
    fn non_planar_model_is_rejected() {
        let net = Network::zeros(&[3, 2]).unwrap();
        assert!(decision_boundary_grid(&net, (0.0, 1.0), (0.0, 1.0), 4).is_err());
    }
}
