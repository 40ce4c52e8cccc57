use crate::linalg::Matrix;
use serde::{Deserialize, Serialize};

/// Components of `X = Rᵀ A R = ξ + θ + ζ`: `ξ` diagonal, `θ` antisymmetric
/// (built from the strict lower triangle of `X`), `ζ` strictly upper
/// triangular with `ζ_ij = X_ij + X_ji` for `i < j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IwasawaGenerator {
    pub xi: Vec<f64>,
    pub theta: Vec<f64>,
    pub zeta: Vec<f64>,
}

impl IwasawaGenerator {
    pub fn zeros(dim: usize) -> Self {
        Self {
            xi: vec![0.0; dim],
            theta: vec![0.0; dim * dim],
            zeta: vec![0.0; dim * dim],
        }
    }

    pub(crate) fn assign(&mut self, x: &[f64], d: usize) {
        for i in 0..d {
            self.xi[i] = x[i * d + i];
            for j in 0..d {
                let (theta, zeta) = if i > j {
                    (x[i * d + j], 0.0)
                } else if i < j {
                    (-x[j * d + i], x[i * d + j] + x[j * d + i])
                } else {
                    (0.0, 0.0)
                };
                self.theta[i * d + j] = theta;
                self.zeta[i * d + j] = zeta;
            }
        }
    }

    /// `ξ + θ + ζ` as a matrix.
    pub fn recombine(&self) -> Matrix {
        let d = self.xi.len();
        let mut m = Matrix::zeros(d);
        for i in 0..d {
            for j in 0..d {
                m[(i, j)] = self.theta[i * d + j] + self.zeta[i * d + j] + if i == j { self.xi[i] } else { 0.0 };
            }
        }
        m
    }
}

pub fn split_generator(x: &Matrix) -> IwasawaGenerator {
    let mut g = IwasawaGenerator::zeros(x.dim());
    g.assign(x.as_slice(), x.dim());
    g
}
