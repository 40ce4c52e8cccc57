use crate::error::{invalid, Error, Result};
use serde::{Deserialize, Serialize};

/// Vertices (indices into `xs`) of the lower convex hull of the finite
/// points `(xs[i], fs[i])`; `xs` must be strictly increasing.
pub fn lower_hull_vertices(xs: &[f64], fs: &[f64]) -> Vec<usize> {
    let mut hull: Vec<usize> = Vec::new();
    for i in (0..xs.len()).filter(|&i| fs[i].is_finite()) {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            // drop b when it lies on or above the chord a -> i
            let cross = (xs[b] - xs[a]) * (fs[i] - fs[a]) - (fs[b] - fs[a]) * (xs[i] - xs[a]);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    hull
}

/// The lower convex envelope evaluated at every grid point; points outside
/// the finite range keep `+∞`.
pub fn convex_hull_values(xs: &[f64], fs: &[f64]) -> Vec<f64> {
    let hull = lower_hull_vertices(xs, fs);
    let mut out = vec![f64::INFINITY; xs.len()];
    if hull.is_empty() {
        return out;
    }
    for w in hull.windows(2) {
        let (a, b) = (w[0], w[1]);
        for (i, o) in out.iter_mut().enumerate().take(b + 1).skip(a) {
            let f = (xs[i] - xs[a]) / (xs[b] - xs[a]);
            *o = fs[a] + f * (fs[b] - fs[a]);
        }
    }
    let last = *hull.last().unwrap();
    out[last] = fs[last];
    out
}

/// True when the finite values are convex to within `tol`.
pub fn is_convex(xs: &[f64], fs: &[f64], tol: f64) -> bool {
    convex_hull_values(xs, fs)
        .iter()
        .zip(fs)
        .all(|(h, f)| !f.is_finite() || f - h <= tol)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegendreTable {
    pub query: Vec<f64>,
    #[serde(with = "crate::estimators::float_serde")]
    pub values: Vec<f64>,
    /// Supremum attained at a boundary vertex with the query slope beyond
    /// the last chord: the value is a lower bound only.
    pub extrapolated: Vec<bool>,
    /// The grid abscissa attaining the supremum.
    pub argmax: Vec<f64>,
    /// The input had to be hull-regularized.
    pub regularized: bool,
}

fn check_grid(xs: &[f64], fs: &[f64]) -> Result<()> {
    if xs.len() != fs.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            got: fs.len(),
        });
    }
    if xs.is_empty() || fs.iter().all(|f| !f.is_finite()) {
        return Err(invalid("grid", "needs at least one finite point"));
    }
    if xs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("grid", "abscissae must be strictly increasing"));
    }
    if fs.iter().any(|f| f.is_nan() || *f == f64::NEG_INFINITY) {
        return Err(invalid("grid", "values must be finite or +inf"));
    }
    Ok(())
}

/// `g(q) = sup_x (q x - f(x))` over the grid. Exact for the piecewise-linear
/// interpolant of the hull of `f`, hence exact at grid vertices.
pub fn legendre_transform(xs: &[f64], fs: &[f64], query: &[f64]) -> Result<LegendreTable> {
    check_grid(xs, fs)?;
    let regularized = !is_convex(xs, fs, 1e-12 * fs.iter().filter(|f| f.is_finite()).fold(1.0f64, |m, f| m.max(f.abs())));
    if regularized {
        log::warn!("legendre_transform: input is not convex; using its convex hull");
    }
    let hull = lower_hull_vertices(xs, fs);
    let (first, last) = (hull[0], *hull.last().unwrap());
    let slope = |a: usize, b: usize| (fs[b] - fs[a]) / (xs[b] - xs[a]);
    let lo_slope = if hull.len() >= 2 { slope(first, hull[1]) } else { f64::INFINITY };
    let hi_slope = if hull.len() >= 2 { slope(hull[hull.len() - 2], last) } else { f64::NEG_INFINITY };
    let mut values = Vec::with_capacity(query.len());
    let mut argmax = Vec::with_capacity(query.len());
    let mut extrapolated = Vec::with_capacity(query.len());
    for &q in query {
        let (mut best, mut at) = (f64::NEG_INFINITY, first);
        for &i in &hull {
            let v = q * xs[i] - fs[i];
            if v > best {
                best = v;
                at = i;
            }
        }
        values.push(best);
        argmax.push(xs[at]);
        extrapolated.push((at == first && q < lo_slope) || (at == last && q > hi_slope));
    }
    Ok(LegendreTable {
        query: query.to_vec(),
        values,
        extrapolated,
        argmax,
        regularized,
    })
}

/// Worst-case gap between a convex table and its double transform taken
/// through the dual grid `query`: for every primal cell, the cell width
/// times the spread of dual slopes it straddles.
pub fn secant_bound(xs: &[f64], fs: &[f64], query: &[f64]) -> f64 {
    let hull = convex_hull_values(xs, fs);
    let dq = query.windows(2).map(|w| w[1] - w[0]).fold(0.0f64, f64::max);
    let mut bound = 0.0f64;
    for i in 1..xs.len() {
        if hull[i].is_finite() && hull[i - 1].is_finite() {
            bound = bound.max((xs[i] - xs[i - 1]) * dq);
        }
    }
    bound
}

/// Transform of a function tabulated on a product grid (row-major over
/// `axes`) at arbitrary query points, by exhaustive scan of the nodes.
pub fn legendre_transform_product(axes: &[Vec<f64>], values: &[f64], query: &[Vec<f64>]) -> Result<Vec<f64>> {
    let d = axes.len();
    let n: usize = axes.iter().map(Vec::len).product();
    if values.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: values.len(),
        });
    }
    let mut nodes = Vec::with_capacity(n);
    let mut idx = vec![0usize; d];
    for _ in 0..n {
        nodes.push(idx.iter().enumerate().map(|(k, &i)| axes[k][i]).collect::<Vec<f64>>());
        for k in (0..d).rev() {
            idx[k] += 1;
            if idx[k] < axes[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
    query
        .iter()
        .map(|q| {
            if q.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: q.len(),
                });
            }
            Ok(nodes
                .iter()
                .zip(values)
                .filter(|(_, f)| f.is_finite())
                .map(|(x, f)| x.iter().zip(q).map(|(a, b)| a * b).sum::<f64>() - f)
                .fold(f64::NEG_INFINITY, f64::max))
        })
        .collect()
}
