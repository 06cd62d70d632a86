//! Numerical thresholds shared by every module.
//!
//! Every operation takes a `&Tolerances`; the defaults below are the values
//! the certification suites are pinned to.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Unit-norm and trace-one checks.
    pub tol_norm: f64,
    /// Operator identities (unitarity, idempotence, hermiticity).
    pub tol_op: f64,
    /// Most negative eigenvalue accepted in a density operator.
    pub tol_psd: f64,
    /// Reconstruction residuals.
    pub tol_recon: f64,
    /// Eigenvalues closer than this share an eigen-subspace.
    pub eps_cluster: f64,
    /// Eigenvalues below this belong to the null space.
    pub eps_rank: f64,
    /// Correlation-operator uniqueness certificate.
    pub tol_unique: f64,
    /// Twin-pair certification.
    pub tol_twin: f64,
    /// Commutation with a reduced density operator.
    pub tol_commute: f64,
    /// Slack granted to the closest-state search oracle.
    pub tol_oracle: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tol_norm: 1e-10,
            tol_op: 1e-10,
            tol_psd: 1e-10,
            tol_recon: 1e-9,
            eps_cluster: 1e-8,
            eps_rank: 1e-10,
            tol_unique: 1e-8,
            tol_twin: 1e-9,
            tol_commute: 1e-9,
            tol_oracle: 1e-6,
        }
    }
}

impl Tolerances {
    pub const NAMES: [&'static str; 10] = [
        "tol_norm",
        "tol_op",
        "tol_psd",
        "tol_recon",
        "eps_cluster",
        "eps_rank",
        "tol_unique",
        "tol_twin",
        "tol_commute",
        "tol_oracle",
    ];

    fn slot(&mut self, name: &str) -> Option<&mut f64> {
        let key = name.trim();
        let key = if key.starts_with("tol_") || key.starts_with("eps_") {
            key.to_string()
        } else if key == "cluster" || key == "rank" {
            format!("eps_{key}")
        } else {
            format!("tol_{key}")
        };
        Some(match key.as_str() {
            "tol_norm" => &mut self.tol_norm,
            "tol_op" => &mut self.tol_op,
            "tol_psd" => &mut self.tol_psd,
            "tol_recon" => &mut self.tol_recon,
            "eps_cluster" => &mut self.eps_cluster,
            "eps_rank" => &mut self.eps_rank,
            "tol_unique" => &mut self.tol_unique,
            "tol_twin" => &mut self.tol_twin,
            "tol_commute" => &mut self.tol_commute,
            "tol_oracle" => &mut self.tol_oracle,
            _ => return None,
        })
    }

    /// Overrides one threshold. Accepts full names (`tol_twin`) or the
    /// short form (`twin`, `cluster`).
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if !(value.is_finite() && value >= 0.0) {
            return Err(Error::Precondition(format!(
                "tolerance `{name}` must be a finite nonnegative number"
            )));
        }
        let slot = self
            .slot(name)
            .ok_or_else(|| Error::UnknownTolerance(name.to_string()))?;
        *slot = value;
        Ok(())
    }

    pub fn with(mut self, name: &str, value: f64) -> Result<Self> {
        self.set(name, value)?;
        Ok(self)
    }

    pub fn apply_overrides(&mut self, overrides: &BTreeMap<String, f64>) -> Result<()> {
        for (name, value) in overrides {
            self.set(name, *value)?;
        }
        Ok(())
    }

    /// Parses `name=value[,name=value...]`.
    pub fn apply_assignments(&mut self, text: &str) -> Result<()> {
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (name, value) = part.split_once('=').ok_or_else(|| {
                Error::Precondition(format!("expected name=value, got `{part}`"))
            })?;
            let value: f64 = value.trim().parse().map_err(|_| {
                Error::Precondition(format!("tolerance `{name}` has a non-numeric value"))
            })?;
            self.set(name, value)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_and_long_names() {
        let mut t = Tolerances::default();
        t.set("twin", 1e-7).unwrap();
        t.set("eps_rank", 1e-12).unwrap();
        t.set("cluster", 1e-6).unwrap();
        assert_eq!(t.tol_twin, 1e-7);
        assert_eq!(t.eps_rank, 1e-12);
        assert_eq!(t.eps_cluster, 1e-6);
        assert!(matches!(t.set("bogus", 1.0), Err(Error::UnknownTolerance(_))));
        assert!(t.set("twin", -1.0).is_err());
    }

    #[test]
    fn assignment_lists() {
        let mut t = Tolerances::default();
        t.apply_assignments("tol_op=1e-9, recon=2e-9").unwrap();
        assert_eq!(t.tol_op, 1e-9);
        assert_eq!(t.tol_recon, 2e-9);
        assert!(t.apply_assignments("tol_op").is_err());
    }
}
