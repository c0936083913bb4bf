//! Experiment configuration: JSON documents with a schema-version field.

use serde::Deserialize;

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// The ten experiment kinds.
pub const KINDS: &[&str] = &[
    "divdiff-oracle",
    "torus-expansion",
    "moi-bound",
    "cayley-check",
    "split-partition",
    "scaling-law",
    "toeplitz-bound",
    "pinching",
    "besov-scaling",
    "main-theorem-probe",
];

/// Kinds that draw random cases and therefore require a seed.
pub const RANDOMIZED_KINDS: &[&str] = &[
    "divdiff-oracle",
    "torus-expansion",
    "moi-bound",
    "cayley-check",
    "scaling-law",
    "toeplitz-bound",
    "pinching",
    "main-theorem-probe",
];

#[derive(Clone, Debug, Deserialize)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub name: String,
    pub kind: String,
    #[serde(default)]
    pub parameters: serde_json::Value,
    #[serde(default)]
    pub output_path: Option<String>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::ConfigInvalid(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if !KINDS.contains(&self.kind.as_str()) {
            return Err(Error::ConfigInvalid(format!(
                "unknown kind '{}'; see list-kinds",
                self.kind
            )));
        }
        if RANDOMIZED_KINDS.contains(&self.kind.as_str()) && self.seed().is_none() {
            return Err(Error::ConfigInvalid(format!(
                "kind '{}' is randomized and requires parameters.seed",
                self.kind
            )));
        }
        if let Some(exps) = self.f64_list("exponents") {
            crate::schatten::ExponentTuple::new(exps)?;
        }
        Ok(())
    }

    pub fn seed(&self) -> Option<u64> {
        self.parameters.get("seed").and_then(|v| v.as_u64())
    }

    pub fn u64_or(&self, key: &str, default: u64) -> u64 {
        self.parameters
            .get(key)
            .and_then(|v| v.as_u64())
            .unwrap_or(default)
    }

    pub fn i64_or(&self, key: &str, default: i64) -> i64 {
        self.parameters
            .get(key)
            .and_then(|v| v.as_i64())
            .unwrap_or(default)
    }

    pub fn f64_or(&self, key: &str, default: f64) -> f64 {
        self.parameters
            .get(key)
            .and_then(|v| v.as_f64())
            .unwrap_or(default)
    }

    pub fn f64_list(&self, key: &str) -> Option<Vec<f64>> {
        self.parameters.get(key).and_then(|v| {
            v.as_array()
                .map(|a| a.iter().filter_map(|x| x.as_f64()).collect())
        })
    }

    pub fn usize_list_or(&self, key: &str, default: &[usize]) -> Vec<usize> {
        self.parameters
            .get(key)
            .and_then(|v| v.as_array())
            .map(|a| a.iter().filter_map(|x| x.as_u64().map(|u| u as usize)).collect())
            .unwrap_or_else(|| default.to_vec())
    }
}

/// Parameter schema for `describe <kind>`.
pub fn describe(kind: &str) -> Result<String> {
    let body = match kind {
        "divdiff-oracle" => {
            "confluent divided-difference table vs direct recursion and node shuffles\n\
             parameters:\n\
             seed: u64 (required)\n\
             cases: usize = 200    random (function, nodes) pairs\n\
             max_order: usize = 4  highest divided-difference order\n\
             tol: f64 = 1e-9       relative tolerance"
        }
        "torus-expansion" => {
            "monomial divided-difference expansions vs direct circle evaluation\n\
             parameters:\n\
             seed: u64 (required)\n\
             max_order: usize = 3\n\
             k_max: i64 = 12\n\
             trials: usize = 50    random node tuples per (n, k)\n\
             tol: f64 = 1e-8"
        }
        "moi-bound" => {
            "lp bound of the U-twisted multiple operator integral\n\
             parameters:\n\
             seed: u64 (required)\n\
             n_grid: usize = 16    matrix size\n\
             trials: usize = 100\n\
             k_support: i64 = 2    coefficient cube half-width\n\
             terms: usize = 12     nonzero coefficients per trial\n\
             exponent_sets: [[f64]] = [[2,2],[1,2],[2,1]]\n\
             tol: f64 = 1e-8"
        }
        "cayley-check" => {
            "Cayley transfer identity for divided differences of a bump\n\
             parameters:\n\
             seed: u64 (required)\n\
             orders: [usize] = [1,2,3]\n\
             trials: usize = 50\n\
             tol_rel: f64 = 1e-6"
        }
        "split-partition" => {
            "inductive symbol decomposition sums back to f^[n]\n\
             parameters:\n\
             functions: [string] = [\"sin\",\"bump\",\"cubic\"]\n\
             orders: [usize] = [2,3]\n\
             n_grid: usize = 16\n\
             grid_range: f64 = 8.0\n\
             r_values: [f64] = [0.5,1,2]\n\
             tol: f64 = 1e-9"
        }
        "scaling-law" => {
            "dilation law: pointwise lambda^n identity and estimator scaling\n\
             parameters:\n\
             seed: u64 (required)\n\
             lambdas: [f64] = [0.5,2]\n\
             order: usize = 2      divided-difference order n\n\
             n_grid: usize = 24\n\
             exponents: [f64] = [2,2]\n\
             restarts: usize = 6\n\
             max_iters: usize = 120\n\
             tol_pointwise: f64 = 1e-9\n\
             tol_factor: f64 = 0.02"
        }
        "toeplitz-bound" => {
            "Fourier L1 majorant for Toeplitz symbols rho_R and (1-rho_R)/t\n\
             parameters:\n\
             seed: u64 (required)\n\
             r: f64 = 1.0\n\
             n_grid: usize = 32\n\
             grid_range: f64 = 16.0\n\
             p_values: [f64] = [1,2]\n\
             restarts: usize = 16\n\
             max_iters: usize = 150\n\
             resolution: usize = 16384\n\
             tol: f64 = 1e-6"
        }
        "pinching" => {
            "quasi-triangle, Hoelder, pinching contraction, unitary invariance\n\
             parameters:\n\
             seed: u64 (required)\n\
             n_grid: usize = 16\n\
             trials: usize = 100\n\
             tol: f64 = 1e-9"
        }
        "besov-scaling" => {
            "dyadic dilation law of the truncated Besov norm\n\
             parameters:\n\
             order: usize = 2      n (s = n - 1 + 1/p)\n\
             p: f64 = 1            Hoelder combination p\n\
             wavelet_m: usize = 4\n\
             depth: u32 = 12\n\
             m_shifts: [i64] = [1,2]\n\
             j_lo: i64 = -14, j_hi: i64 = 6\n\
             tol: f64 = 1e-8"
        }
        "main-theorem-probe" => {
            "lower-bound trend for ||f^[n]||_m vs the derivative + Besov majorant\n\
             parameters:\n\
             seed: u64 (required)\n\
             n_grids: [usize] = [16,32,64]\n\
             order: usize = 2\n\
             exponents: [f64] = [2,2]\n\
             wavelet_m: usize = 6\n\
             depth: u32 = 12\n\
             restarts: usize = 6\n\
             max_iters: usize = 120\n\
             growth_cap: f64 = 2.0"
        }
        _ => {
            return Err(Error::ConfigInvalid(format!(
                "unknown kind '{kind}'; see list-kinds"
            )))
        }
    };
    Ok(format!("kind: {kind}\n{body}\n"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_minimal_valid_config() {
        let cfg = ExperimentConfig::from_json(
            r#"{"schema_version":1,"name":"x","kind":"pinching","parameters":{"seed":7}}"#,
        )
        .unwrap();
        assert_eq!(cfg.seed(), Some(7));
    }

    #[test]
    fn rejects_missing_seed_for_randomized_kind() {
        let err = ExperimentConfig::from_json(
            r#"{"schema_version":1,"name":"x","kind":"moi-bound","parameters":{}}"#,
        )
        .unwrap_err();
        assert!(matches!(err, Error::ConfigInvalid(_)));
    }

    #[test]
    fn rejects_unknown_kind_and_bad_schema() {
        assert!(ExperimentConfig::from_json(
            r#"{"schema_version":1,"name":"x","kind":"nope","parameters":{}}"#
        )
        .is_err());
        assert!(ExperimentConfig::from_json(
            r#"{"schema_version":2,"name":"x","kind":"pinching","parameters":{"seed":1}}"#
        )
        .is_err());
    }

    #[test]
    fn validates_exponents_through_tuple() {
        let err = ExperimentConfig::from_json(
            r#"{"schema_version":1,"name":"x","kind":"scaling-law",
               "parameters":{"seed":1,"exponents":[2.0,-1.0]}}"#,
        )
        .unwrap_err();
        assert!(matches!(err, Error::ConfigInvalid(_)));
    }

    #[test]
    fn describe_covers_all_kinds() {
        for k in KINDS {
            assert!(describe(k).unwrap().contains(k));
        }
        assert!(describe("bogus").is_err());
    }
}
