use crate::error::{invalid, Result};
use crate::estimators::EmpiricalCumulants;
use crate::processes::{cumulant_integrals, CumulantIntegral, CumulantTensor, ProcessKind, ProcessSpec};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum OrderSource {
    ClosedForm {
        tensor: CumulantTensor,
    },
    /// Only the `A_11` component is estimated.
    Empirical {
        value: f64,
        ci_low: f64,
        ci_high: f64,
        ess: f64,
    },
    Refused {
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaOrder {
    pub order: usize,
    #[serde(flatten)]
    pub source: OrderSource,
}

/// White-noise description reached in the Wong–Zakai limit: the Stratonovich
/// equation `dQ = (M dt + dW) Q` with `⟨dW_ij dW_kp⟩ = K_(ij)(kp) dt`, and
/// the equivalent Itô drift `M + ½ Σ_j K_(ij)(jp)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratonovichLimit {
    pub dim: usize,
    /// Row-major `d×d` mean generator `w⁽¹⁾`.
    pub drift: Vec<f64>,
    /// `w⁽²⁾`, row-major `d² × d²`.
    pub diffusion: Vec<f64>,
    /// Row-major `d×d`.
    pub ito_drift: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveDeltaModel {
    pub spec: ProcessSpec,
    pub orders: Vec<DeltaOrder>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stratonovich: Option<StratonovichLimit>,
}

impl EffectiveDeltaModel {
    pub fn order(&self, n: usize) -> Option<&DeltaOrder> {
        self.orders.iter().find(|o| o.order == n)
    }
}

/// The δ-correlated process with cumulants `w⁽ⁿ⁾ δ(t₂-t₁)…δ(tₙ-t₁)`, which
/// has the same generalized exponents as `spec`.
///
/// Orders without a closed form are taken from `empirical` when its ESS
/// clears `ess_floor`, and refused otherwise.
pub fn effective_delta_model(
    spec: &ProcessSpec,
    max_order: usize,
    empirical: Option<&EmpiricalCumulants>,
    ess_floor: f64,
) -> Result<EffectiveDeltaModel> {
    if max_order == 0 {
        return Err(invalid("max_order", "must be at least 1"));
    }
    let integrals = cumulant_integrals(spec, max_order)?;
    let orders = integrals
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            let order = i + 1;
            let source = match c {
                CumulantIntegral::Exact(tensor) => OrderSource::ClosedForm { tensor },
                CumulantIntegral::EstimateEmpirically { .. } => match empirical.and_then(|e| e.orders.iter().find(|o| o.order == order)) {
                    Some(o) if o.ess >= ess_floor => OrderSource::Empirical {
                        value: o.value,
                        ci_low: o.ci_low,
                        ci_high: o.ci_high,
                        ess: o.ess,
                    },
                    Some(o) => OrderSource::Refused {
                        reason: format!("ESS {:.1} below {ess_floor}", o.ess),
                    },
                    None => OrderSource::Refused {
                        reason: "no closed form; supply an empirical estimate".into(),
                    },
                },
            };
            DeltaOrder { order, source }
        })
        .collect();

    let d = spec.dim();
    let ident = |scale: f64| (0..d * d).map(|i| if i / d == i % d { scale } else { 0.0 }).collect::<Vec<f64>>();
    let stratonovich = match &spec.kind {
        ProcessKind::GaussianIsotropicMatrix { kernel, shape, .. } => {
            let k = kernel.covariance(d).into_iter().map(|v| v * shape.integral()).collect();
            let drift = ident(0.0);
            let ito = ident(0.5 * (kernel.b - kernel.a + kernel.c * d as f64) * shape.integral());
            Some(StratonovichLimit {
                dim: d,
                drift,
                diffusion: k,
                ito_drift: ito,
            })
        }
        ProcessKind::ScalarOu {
            mean, variance_integral, ..
        } => Some(StratonovichLimit {
            dim: 1,
            drift: vec![*mean],
            diffusion: vec![*variance_integral],
            ito_drift: vec![mean + 0.5 * variance_integral],
        }),
        _ => None,
    };
    Ok(EffectiveDeltaModel {
        spec: spec.clone(),
        orders,
        stratonovich,
    })
}
