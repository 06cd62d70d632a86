//! The probability-rule pipeline: equiprobability from twins, counting on a
//! fine-grained purification, continuity, closest eigenstates and the trace
//! rule.

mod closest;
mod continuity;
mod finegrain;
mod rational;
mod rule;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::hilbert::{CMatrix, CVector};
use crate::json;

pub use closest::{
    closest_eigenstate_density, closest_oracle, lueders_state, selective_lueders,
    ClosestEigenstate, OracleResult,
};
pub use continuity::{
    continuity_sequence, decade_grid, isolated_state_limit, ContinuitySequence, ContinuityTerm,
    IsolatedLimit, IsolatedTerm,
};
pub use finegrain::{
    counting_probabilities, finegrain_state, finegrain_unitary, CountingReport, FinegrainDims,
    FinegrainUnitary, TripartiteState,
};
pub use rational::{best_rational, rational_spectrum, RationalSpectrum};
pub use rule::{
    additivity_check, born_probability, mixture_probability, random_decomposition,
    stage_one_certificate, AdditivityReport, StageOneCertificate,
};

/// A reduced fraction `num/den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Fraction {
    pub num: u64,
    pub den: u64,
}

impl Fraction {
    pub fn new(num: u64, den: u64) -> Self {
        assert!(den > 0, "zero denominator");
        let g = num_integer::gcd(num, den).max(1);
        Self { num: num / g, den: den / g }
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// How a probability value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Route {
    /// Counting equal-amplitude branches of a fine-grained purification.
    #[serde(rename = "stage-one-counting")]
    Counting,
    /// Eigenvector of the density: the probability is its eigenvalue.
    #[serde(rename = "eigenvalue-rule")]
    Eigenvalue,
    /// Eigenvalue of the closest density having the event as an eigenvector.
    #[serde(rename = "closest-eigenstate")]
    ClosestEigenstate,
    /// `<phi|rho|phi>` for an arbitrary state vector.
    #[serde(rename = "expectation-rule")]
    Expectation,
    /// `tr(rho E)` for a projector.
    #[serde(rename = "trace-rule")]
    TraceRule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Event {
    Vector {
        #[serde(with = "json::vector")]
        vector: CVector,
    },
    Projector {
        #[serde(with = "json::matrix")]
        matrix: CMatrix,
    },
    Label {
        label: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityReport {
    pub event: Event,
    pub value: f64,
    pub route: Route,
    pub residuals: BTreeMap<String, f64>,
    /// `"m/M"` whenever the value is known as an exact rational.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub exact_rational: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rational: Option<[u64; 2]>,
    /// Slot for a further, unidentified argument of the probability. The
    /// pipeline never fills it.
    #[serde(default)]
    pub unknown: Option<String>,
}

impl ProbabilityReport {
    pub(crate) fn new(event: Event, value: f64, route: Route) -> Self {
        Self {
            event,
            value,
            route,
            residuals: BTreeMap::new(),
            exact_rational: None,
            rational: None,
            unknown: None,
        }
    }

    pub(crate) fn with_fraction(mut self, f: Fraction) -> Self {
        self.exact_rational = Some(f.to_string());
        self.rational = Some([f.num, f.den]);
        self
    }

    pub(crate) fn with_residual(mut self, name: &str, value: f64) -> Self {
        self.residuals.insert(name.to_string(), value);
        self
    }

    pub fn fraction(&self) -> Option<Fraction> {
        self.rational.map(|[n, d]| Fraction { num: n, den: d })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fractions_reduce() {
        let f = Fraction::new(4, 6);
        assert_eq!((f.num, f.den), (2, 3));
        assert_eq!(f.to_string(), "2/3");
        assert_eq!(Fraction::new(0, 5).to_string(), "0/1");
    }

    #[test]
    fn report_json_shape() {
        let r = ProbabilityReport::new(Event::Label { label: "block 0".into() }, 0.5, Route::Counting)
            .with_fraction(Fraction::new(1, 2))
            .with_residual("x", 0.0);
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        assert_eq!(v["route"], "stage-one-counting");
        assert_eq!(v["exact_rational"], "1/2");
        assert_eq!(v["rational"], serde_json::json!([1, 2]));
        assert!(v["unknown"].is_null());
        assert_eq!(v["event"]["kind"], "label");
    }
}
