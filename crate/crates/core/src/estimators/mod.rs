//! Monte Carlo estimators for Lyapunov exponents, generalized Lyapunov
//! exponents, scalar cumulant-generating functions and rate functions.
//!
//! Every reduction runs over realization indices in a fixed order, so an
//! estimate is bit-identical however many workers produced the ensemble.

mod cumulants;
mod gle;
mod le;
mod rate;
mod sim;

pub use cumulants::{estimate_cumulant_integrals, EmpiricalCumulant, EmpiricalCumulants};
pub use gle::{
    estimate_gle, estimate_scalar_cgf, extrapolate_inverse_t, gle_from_samples, log_sum_exp_with_ess,
    lyapunov_from_gle, GleEstimate, GleOptions, ONE_SIGMA,
};
pub use le::{estimate_le, le_from_samples, LeEstimate, LeOptions};
pub use rate::{empirical_rate_function, RateFunctionTable, MIN_BINS};
pub use sim::{
    simulate_diagonal_integrals, simulate_log_d, Exclusion, HorizonSamples, MAX_EXCLUSION_FRACTION,
};

use crate::evolution::SchemeKind;
use crate::processes::ProcessSpec;
use serde::{Deserialize, Serialize};

/// Everything needed to re-derive an estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool_version: String,
    pub rng_version: String,
    pub spec: ProcessSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<SchemeKind>,
    pub dt: f64,
    #[serde(rename = "T_list")]
    pub horizons: Vec<f64>,
    pub n_realizations: usize,
    pub master_seed: u64,
}

impl Provenance {
    pub fn new(spec: &ProcessSpec, scheme: Option<SchemeKind>, dt: f64, horizons: Vec<f64>, n_realizations: usize) -> Self {
        Self {
            tool_version: crate::VERSION_TAG.to_string(),
            rng_version: crate::rng::RNG_VERSION.to_string(),
            spec: spec.clone(),
            scheme,
            dt,
            horizons,
            n_realizations,
            master_seed: spec.master_seed,
        }
    }
}

/// Shortest round-tripping decimal form; non-finite values as `nan`/`inf`.
pub(crate) fn csv_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// JSON has no non-finite numbers; these serialize as the strings
/// `"nan"`, `"inf"` and `"-inf"`.
pub mod float_serde {
    use serde::de::{self, Deserializer, Visitor};
    use serde::ser::{SerializeSeq, Serializer};
    use serde::Deserialize;
    use std::fmt;

    struct F(f64);

    impl serde::Serialize for F {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            if self.0.is_finite() {
                s.serialize_f64(self.0)
            } else {
                s.serialize_str(&super::csv_f64(self.0))
            }
        }
    }

    impl<'de> Deserialize<'de> for F {
        fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
            struct V;
            impl Visitor<'_> for V {
                type Value = F;
                fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                    f.write_str("a number or one of \"nan\", \"inf\", \"-inf\"")
                }
                fn visit_f64<E: de::Error>(self, v: f64) -> Result<F, E> {
                    Ok(F(v))
                }
                fn visit_i64<E: de::Error>(self, v: i64) -> Result<F, E> {
                    Ok(F(v as f64))
                }
                fn visit_u64<E: de::Error>(self, v: u64) -> Result<F, E> {
                    Ok(F(v as f64))
                }
                fn visit_str<E: de::Error>(self, v: &str) -> Result<F, E> {
                    match v {
                        "nan" => Ok(F(f64::NAN)),
                        "inf" => Ok(F(f64::INFINITY)),
                        "-inf" => Ok(F(f64::NEG_INFINITY)),
                        other => Err(E::invalid_value(de::Unexpected::Str(other), &self)),
                    }
                }
            }
            d.deserialize_any(V)
        }
    }

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for x in v {
            seq.serialize_element(&F(*x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Ok(Vec::<F>::deserialize(d)?.into_iter().map(|f| f.0).collect())
    }

    pub mod scalar {
        use super::F;
        use serde::{Deserialize, Deserializer, Serialize, Serializer};

        pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
            F(*v).serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
            Ok(F::deserialize(d)?.0)
        }
    }
}
