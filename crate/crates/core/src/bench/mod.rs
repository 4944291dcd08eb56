//! Named verification experiments.
//!
//! Each experiment reads an [`ExperimentConfig`] and returns one
//! [`InequalityVerdict`] per checked instance. Exact paths (closed forms,
//! lattice enumeration, moment algebra) are used whenever every quantity in a
//! verdict has one; otherwise all quantities of the verdict come from one
//! paired Monte Carlo run, so their errors are correlated and the slack's
//! standard error is small.

mod algebraic;
mod dyadic;
mod fisher;
mod mc;
mod multivariate;
mod oracle;
mod univariate;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dist::DistributionSpec;
use crate::error::{Error, Result};
use crate::rng::{SeededStream, DEFAULT_SEED};
use crate::verdict::{InequalityVerdict, Quantity, Status};

pub use dyadic::{dyadic_split, dyadic_strong_components, DyadicDraw};
pub use mc::{discretize, exact_variance};
pub use oracle::midrange_variance_quadrature;

pub const DEFAULT_TOL: f64 = 1e-10;

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

/// Input of one experiment. Fields an experiment does not use are ignored;
/// fields it needs but are missing produce a configuration error naming them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    #[serde(default)]
    pub populations: Vec<DistributionSpec>,
    /// Extra populations for trend and quadrature probes.
    #[serde(default)]
    pub probes: Vec<DistributionSpec>,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub n_values: Vec<usize>,
    #[serde(default, rename = "N")]
    pub big_n: Option<usize>,
    #[serde(default, rename = "N_values")]
    pub big_n_values: Vec<usize>,
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default)]
    pub k: Option<u32>,
    #[serde(default)]
    pub k_values: Vec<u32>,
    /// Group sample sizes for pooled-sample experiments.
    #[serde(default)]
    pub sizes: Vec<usize>,
    #[serde(default)]
    pub lambda_grid: Vec<f64>,
    pub reps: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Cells of the midpoint lattice replacing bounded continuous laws.
    #[serde(default)]
    pub discretize: Option<usize>,
    #[serde(default)]
    pub depth: Option<u32>,
    /// Number of random instances.
    #[serde(default)]
    pub instances: Option<usize>,
    #[serde(default)]
    pub max_support: Option<usize>,
    /// Also run the Monte Carlo path where an exact one exists.
    #[serde(default)]
    pub confirm_mc: bool,
}

impl ExperimentConfig {
    pub fn new(experiment: &str, reps: usize) -> Self {
        Self {
            experiment: experiment.to_string(),
            populations: Vec::new(),
            probes: Vec::new(),
            n: None,
            n_values: Vec::new(),
            big_n: None,
            big_n_values: Vec::new(),
            m: None,
            k: None,
            k_values: Vec::new(),
            sizes: Vec::new(),
            lambda_grid: Vec::new(),
            reps,
            seed: DEFAULT_SEED,
            tol: DEFAULT_TOL,
            discretize: None,
            depth: None,
            instances: None,
            max_support: None,
            confirm_mc: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if find(&self.experiment).is_none() {
            return Err(Error::config("/experiment", format!("unknown experiment `{}`", self.experiment)));
        }
        for (i, p) in self.populations.iter().enumerate() {
            p.validate()
                .map_err(|e| Error::config(format!("/populations/{i}"), e.to_string()))?;
        }
        for (i, p) in self.probes.iter().enumerate() {
            p.validate().map_err(|e| Error::config(format!("/probes/{i}"), e.to_string()))?;
        }
        if !(self.tol >= 0.0) {
            return Err(Error::config("/tol", "tolerance must be nonnegative"));
        }
        Ok(())
    }

    pub(crate) fn population(&self, i: usize) -> Result<&DistributionSpec> {
        self.populations
            .get(i)
            .ok_or_else(|| Error::config(format!("/populations/{i}"), "population required"))
    }

    pub(crate) fn require_n(&self) -> Result<usize> {
        match self.n {
            Some(n) if n >= 1 => Ok(n),
            Some(_) => Err(Error::config("/n", "must be at least 1")),
            None => Err(Error::config("/n", "required")),
        }
    }

    /// `n_values`, or `[n]` when only `n` is given.
    pub(crate) fn n_list(&self) -> Result<Vec<usize>> {
        let mut v = if self.n_values.is_empty() { vec![self.require_n()?] } else { self.n_values.clone() };
        if v.contains(&0) {
            return Err(Error::config("/n_values", "sample sizes must be at least 1"));
        }
        v.sort_unstable();
        v.dedup();
        Ok(v)
    }

    pub(crate) fn big_n_list(&self) -> Result<Vec<usize>> {
        let mut v = if self.big_n_values.is_empty() {
            vec![self.big_n.ok_or_else(|| Error::config("/N_values", "required"))?]
        } else {
            self.big_n_values.clone()
        };
        if v.contains(&0) {
            return Err(Error::config("/N_values", "group counts must be at least 1"));
        }
        v.sort_unstable();
        v.dedup();
        Ok(v)
    }

    pub(crate) fn k_list(&self) -> Result<Vec<u32>> {
        let mut v = if self.k_values.is_empty() {
            vec![self.k.ok_or_else(|| Error::config("/k", "required"))?]
        } else {
            self.k_values.clone()
        };
        if v.contains(&0) {
            return Err(Error::config("/k_values", "degrees must be at least 1"));
        }
        v.sort_unstable();
        v.dedup();
        Ok(v)
    }

    pub(crate) fn require_mc_reps(&self) -> Result<usize> {
        if self.reps < 100 {
            return Err(Error::config("/reps", "Monte Carlo paths need at least 100 replications"));
        }
        Ok(self.reps)
    }
}

type Runner = fn(&ExperimentConfig, &SeededStream) -> Result<Vec<InequalityVerdict>>;

pub struct Experiment {
    pub name: &'static str,
    pub description: &'static str,
    run: Runner,
}

static REGISTRY: &[Experiment] = &[
    Experiment {
        name: "convolution_superadditivity",
        description: "var(t_n) of F_1*...*F_N against the averaged m-subset convolutions",
        run: univariate::convolution_superadditivity,
    },
    Experiment {
        name: "additive_superadditivity",
        description: "var(t_n) of a sum of independent populations against the sum of variances",
        run: univariate::additive_superadditivity,
    },
    Experiment {
        name: "group_monotonicity",
        description: "var(t_n) of the N-fold convolution divided by N is nondecreasing in N",
        run: univariate::group_monotonicity,
    },
    Experiment {
        name: "dissipation",
        description: "N var E(mean_1 | R_1+...+R_N) is nonincreasing in N",
        run: univariate::dissipation,
    },
    Experiment {
        name: "combine",
        description: "inverse variance of the pooled estimator against averaged subset pools",
        run: univariate::combine,
    },
    Experiment {
        name: "sample_monotonicity",
        description: "n var(t_n) is nonincreasing in n",
        run: univariate::sample_monotonicity,
    },
    Experiment {
        name: "final_corollary",
        description: "n var E(mean_n | residuals) is nondecreasing in n",
        run: univariate::final_corollary,
    },
    Experiment {
        name: "lambda_monotonicity",
        description: "var(t_n) of F * lambda G is monotone in |lambda| for Gaussian G",
        run: univariate::lambda_monotonicity,
    },
    Experiment {
        name: "gaussian_equality_characterization",
        description: "equality for Gaussian populations, a strict gap otherwise",
        run: univariate::gaussian_equality_characterization,
    },
    Experiment {
        name: "fisher_counterparts",
        description: "Stam's inequality, monotone Fisher information of sums, n var(t_n) I trend",
        run: fisher::fisher_counterparts,
    },
    Experiment {
        name: "multivariate_monotonicity",
        description: "Loewner monotonicity of n V_n and of pooled inverse covariances",
        run: multivariate::multivariate_monotonicity,
    },
    Experiment {
        name: "variance_drop",
        description: "variance drop inequality on random and constructed finite instances",
        run: algebraic::variance_drop,
    },
    Experiment {
        name: "poly_monotonicity",
        description: "n var of the polynomial Pitman estimator is nonincreasing in n",
        run: algebraic::poly_monotonicity,
    },
    Experiment {
        name: "tau_counterexample_search",
        description: "reports the n-trend of the central-moment analog without asserting it",
        run: algebraic::tau_counterexample_search,
    },
    Experiment {
        name: "probe_score_monotonicity",
        description: "reports the n-trend of the score estimator variance without asserting it",
        run: algebraic::probe_score_monotonicity,
    },
    Experiment {
        name: "dyadic_strong_components",
        description: "interleaved binary digits are recovered from their sum",
        run: dyadic::dyadic_experiment,
    },
    Experiment {
        name: "uniform_oracle_chain",
        description: "order-statistics oracle, fine-lattice enumeration and Monte Carlo for Uniform",
        run: oracle::uniform_oracle_chain,
    },
];

pub fn experiments() -> &'static [Experiment] {
    REGISTRY
}

pub fn experiment_names() -> Vec<&'static str> {
    REGISTRY.iter().map(|e| e.name).collect()
}

fn find(name: &str) -> Option<&'static Experiment> {
    REGISTRY.iter().find(|e| e.name == name)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub experiment: String,
    pub seed: u64,
    pub verdicts: Vec<InequalityVerdict>,
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let exp = find(&cfg.experiment).expect("validated");
    let stream = SeededStream::new(cfg.seed).fork_named(exp.name);
    let verdicts = (exp.run)(cfg, &stream)?;
    Ok(Report {
        experiment: exp.name.to_string(),
        seed: cfg.seed,
        verdicts,
    })
}

/// First 16 hex digits of the SHA-256 of the canonical instance JSON.
pub fn instance_hash(instance: &serde_json::Value) -> String {
    let digest = Sha256::digest(instance.to_string().as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

fn quantity_cell(q: &Quantity) -> String {
    match q {
        Quantity::Scalar(x) => format!("{x}"),
        Quantity::Matrix(_) => serde_json::to_string(q).expect("finite matrix serializes"),
    }
}

impl Report {
    pub fn has_failures(&self) -> bool {
        self.verdicts.iter().any(|v| v.status == Status::Fail)
    }

    pub fn count(&self, status: Status) -> usize {
        self.verdicts.iter().filter(|v| v.status == status).count()
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Numerical(format!("csv: {e}"));
        w.write_record(["name", "instance_hash", "lhs", "rhs", "slack", "uncertainty", "status"])
            .map_err(io)?;
        for v in &self.verdicts {
            w.write_record([
                v.name.clone(),
                instance_hash(&v.instance),
                quantity_cell(&v.lhs),
                quantity_cell(&v.rhs),
                format!("{}", v.slack),
                format!("{}", v.uncertainty),
                v.status.as_str().to_string(),
            ])
            .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Numerical(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_names_are_unique() {
        let mut names = experiment_names();
        let len = names.len();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), len);
        assert_eq!(len, 17);
    }

    #[test]
    fn config_requires_reps() {
        let r: std::result::Result<ExperimentConfig, _> =
            serde_json::from_str(r#"{"experiment": "sample_monotonicity", "n_values": [1, 2]}"#);
        assert!(r.unwrap_err().to_string().contains("reps"));
    }

    #[test]
    fn config_defaults() {
        let c: ExperimentConfig = serde_json::from_str(r#"{"experiment": "dissipation", "reps": 100}"#).unwrap();
        assert_eq!(c.seed, 0xC0FFEE);
        assert_eq!(c.tol, 1e-10);
    }

    #[test]
    fn unknown_experiment_is_a_config_error() {
        let c = ExperimentConfig::new("nope", 100);
        assert!(matches!(run_experiment(&c), Err(Error::Config { pointer, .. }) if pointer == "/experiment"));
    }

    #[test]
    fn instance_hash_is_stable() {
        let v = serde_json::json!({"b": 1, "a": [1, 2]});
        assert_eq!(instance_hash(&v), instance_hash(&serde_json::json!({"a": [1, 2], "b": 1})));
        assert_eq!(instance_hash(&v).len(), 16);
    }
}
