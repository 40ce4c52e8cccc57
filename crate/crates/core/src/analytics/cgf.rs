use super::convex::is_convex;
use super::eta0;
use crate::error::{invalid, Error, Result};
use crate::estimators::GleEstimate;
use crate::processes::telegraph_cgf_oracle;
use serde::{Deserialize, Serialize};

/// Relative slack when deciding whether a point lies on the table grid.
const GRID_TOL: f64 = 1e-12;

/// A scaled cumulant-generating function `w(η)` of a vector argument.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CgfModel {
    /// `linear·η + ½ ηᵀ H η`, `H` row-major.
    Quadratic { linear: Vec<f64>, hessian: Vec<f64> },
    /// Scalar `±σ` telegraph process switching at rate `ν`.
    Telegraph { sigma: f64, nu: f64 },
    /// `Σ_k w_k(η_k)` for independent scalar components.
    Separable { components: Vec<CgfModel> },
    Table(CgfTable),
}

impl CgfModel {
    pub fn dim(&self) -> usize {
        match self {
            Self::Quadratic { linear, .. } => linear.len(),
            Self::Telegraph { .. } => 1,
            Self::Separable { components } => components.len(),
            Self::Table(t) => t.axes.len(),
        }
    }

    fn check_dim(&self, eta: &[f64]) -> Result<()> {
        if eta.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: eta.len(),
            });
        }
        Ok(())
    }

    pub fn eval(&self, eta: &[f64]) -> Result<f64> {
        self.check_dim(eta)?;
        Ok(match self {
            Self::Quadratic { linear, hessian } => {
                let d = linear.len();
                let mut v: f64 = linear.iter().zip(eta).map(|(l, e)| l * e).sum();
                for i in 0..d {
                    for j in 0..d {
                        v += 0.5 * hessian[i * d + j] * eta[i] * eta[j];
                    }
                }
                v
            }
            Self::Telegraph { sigma, nu } => telegraph_cgf_oracle(*sigma, *nu, eta[0]),
            Self::Separable { components } => {
                let mut v = 0.0;
                for (c, e) in components.iter().zip(eta) {
                    v += c.eval(&[*e])?;
                }
                v
            }
            Self::Table(t) => t.eval(eta)?,
        })
    }

    /// Closed form where available; central differences on tables with the
    /// finest grid spacing, one-sided at the table boundary.
    pub fn gradient(&self, eta: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(eta)?;
        match self {
            Self::Quadratic { linear, hessian } => {
                let d = linear.len();
                Ok((0..d)
                    .map(|i| linear[i] + (0..d).map(|j| 0.5 * (hessian[i * d + j] + hessian[j * d + i]) * eta[j]).sum::<f64>())
                    .collect())
            }
            Self::Telegraph { sigma, nu } => {
                let x = sigma * eta[0];
                Ok(vec![sigma * x / (nu * nu + x * x).sqrt()])
            }
            Self::Separable { components } => {
                let mut g = Vec::with_capacity(components.len());
                for (c, e) in components.iter().zip(eta) {
                    g.push(c.gradient(&[*e])?[0]);
                }
                Ok(g)
            }
            Self::Table(t) => t.gradient(eta),
        }
    }

    /// Convex along the table axes (closed forms are convex by construction
    /// when valid).
    pub fn is_convex(&self) -> bool {
        match self {
            Self::Table(t) => t.convex,
            Self::Separable { components } => components.iter().all(CgfModel::is_convex),
            _ => true,
        }
    }
}

/// `w` tabulated on a product grid, interpolated multilinearly. Evaluation
/// outside the grid is refused.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CgfTable {
    pub axes: Vec<Vec<f64>>,
    /// Row-major over `axes`, last axis fastest.
    pub values: Vec<f64>,
    pub convex: bool,
}

impl CgfTable {
    pub fn new(axes: Vec<Vec<f64>>, values: Vec<f64>) -> Result<Self> {
        if axes.is_empty() || axes.iter().any(|a| a.len() < 2 || a.windows(2).any(|w| !(w[1] > w[0]))) {
            return Err(invalid("axes", "each axis needs at least two strictly increasing points"));
        }
        let n: usize = axes.iter().map(Vec::len).product();
        if values.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: values.len(),
            });
        }
        let mut table = Self {
            axes,
            values,
            convex: true,
        };
        table.convex = table.axis_lines_convex();
        Ok(table)
    }

    pub fn from_fn(axes: Vec<Vec<f64>>, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let nodes = product_nodes(&axes);
        let values = nodes.iter().map(|x| f(x)).collect();
        Self::new(axes, values)
    }

    /// Rebuilds the product grid from the estimate's points; every node of
    /// the product of the distinct coordinates must be present.
    pub fn from_estimate(gle: &GleEstimate) -> Result<Self> {
        let d = gle.dim;
        let mut axes: Vec<Vec<f64>> = vec![Vec::new(); d];
        for eta in &gle.eta_grid {
            for (k, &v) in eta.iter().enumerate() {
                if !axes[k].iter().any(|a| (a - v).abs() <= GRID_TOL) {
                    axes[k].push(v);
                }
            }
        }
        for a in &mut axes {
            a.sort_by(f64::total_cmp);
        }
        let nodes = product_nodes(&axes);
        let mut values = Vec::with_capacity(nodes.len());
        for node in nodes {
            match gle.value_at(&node) {
                Some(v) => values.push(v),
                None => return Err(Error::MissingStencil { point: node }),
            }
        }
        Self::new(axes, values)
    }

    fn strides(&self) -> Vec<usize> {
        let d = self.axes.len();
        let mut s = vec![1; d];
        for k in (0..d.saturating_sub(1)).rev() {
            s[k] = s[k + 1] * self.axes[k + 1].len();
        }
        s
    }

    fn locate(&self, eta: &[f64]) -> Result<Vec<(usize, f64)>> {
        eta.iter()
            .zip(&self.axes)
            .map(|(&x, axis)| {
                let (lo, hi) = (axis[0], axis[axis.len() - 1]);
                let tol = GRID_TOL * (hi - lo);
                if !(x >= lo - tol && x <= hi + tol) {
                    return Err(Error::OutOfDomain { point: eta.to_vec() });
                }
                let x = x.clamp(lo, hi);
                let i = axis.partition_point(|a| *a <= x).clamp(1, axis.len() - 1) - 1;
                Ok((i, (x - axis[i]) / (axis[i + 1] - axis[i])))
            })
            .collect()
    }

    pub fn eval(&self, eta: &[f64]) -> Result<f64> {
        let cell = self.locate(eta)?;
        let strides = self.strides();
        let d = self.axes.len();
        let mut v = 0.0;
        for corner in 0..(1usize << d) {
            let mut weight = 1.0;
            let mut offset = 0;
            for (k, &(i, f)) in cell.iter().enumerate() {
                let up = corner >> k & 1 == 1;
                weight *= if up { f } else { 1.0 - f };
                offset += (i + up as usize) * strides[k];
            }
            if weight != 0.0 {
                v += weight * self.values[offset];
            }
        }
        Ok(v)
    }

    pub fn gradient(&self, eta: &[f64]) -> Result<Vec<f64>> {
        self.locate(eta)?;
        let mut g = Vec::with_capacity(eta.len());
        for (k, axis) in self.axes.iter().enumerate() {
            let h = axis.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
            let (lo, hi) = (axis[0], axis[axis.len() - 1]);
            let mut plus = eta.to_vec();
            let mut minus = eta.to_vec();
            plus[k] = (eta[k] + h).min(hi);
            minus[k] = (eta[k] - h).max(lo);
            g.push((self.eval(&plus)? - self.eval(&minus)?) / (plus[k] - minus[k]));
        }
        Ok(g)
    }

    fn axis_lines_convex(&self) -> bool {
        let strides = self.strides();
        let total = self.values.len();
        for (k, axis) in self.axes.iter().enumerate() {
            let n = axis.len();
            for start in 0..total {
                // a line starts where the k-th index is zero
                if !(start / strides[k]).is_multiple_of(n) {
                    continue;
                }
                let line: Vec<f64> = (0..n).map(|i| self.values[start + i * strides[k]]).collect();
                let scale = line.iter().fold(1.0f64, |m, v| m.max(v.abs()));
                if !is_convex(axis, &line, 1e-9 * scale) {
                    return false;
                }
            }
        }
        true
    }
}

pub(crate) fn product_nodes(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n: usize = axes.iter().map(Vec::len).product();
    let d = axes.len();
    let mut idx = vec![0usize; d];
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(idx.iter().enumerate().map(|(k, &i)| axes[k][i]).collect());
        for k in (0..d).rev() {
            idx[k] += 1;
            if idx[k] < axes[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
    out
}

/// `w_ξ(η) = w_α(η + η₀) - w_α(η₀)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftedCgf {
    pub base: CgfModel,
    pub eta0: Vec<f64>,
    /// `w_α(η₀)`.
    pub offset: f64,
}

impl ShiftedCgf {
    fn shifted(&self, eta: &[f64]) -> Result<Vec<f64>> {
        if eta.len() != self.eta0.len() {
            return Err(Error::DimensionMismatch {
                expected: self.eta0.len(),
                got: eta.len(),
            });
        }
        Ok(eta.iter().zip(&self.eta0).map(|(a, b)| a + b).collect())
    }

    pub fn eval(&self, eta: &[f64]) -> Result<f64> {
        Ok(self.base.eval(&self.shifted(eta)?)? - self.offset)
    }

    pub fn gradient(&self, eta: &[f64]) -> Result<Vec<f64>> {
        self.base.gradient(&self.shifted(eta)?)
    }
}

pub fn gle_shift(w_alpha: &CgfModel, d: usize) -> Result<ShiftedCgf> {
    if w_alpha.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: w_alpha.dim(),
        });
    }
    let e0 = eta0(d).values;
    let offset = w_alpha.eval(&e0)?;
    Ok(ShiftedCgf {
        base: w_alpha.clone(),
        eta0: e0,
        offset,
    })
}
