//! Serializable run reports.

use ddsolve_core::{Certificate, Diagnostics, Status, StatusReport, VerificationReport};
use serde::{Deserialize, Serialize};

/// Non-finite floats are written as the strings `"inf"`, `"-inf"` and `"nan"`
/// so that reports round-trip through JSON.
mod lossless {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Number(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("not a float: {other}"))),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    #[serde(with = "lossless")]
    pub value: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationSummary {
    pub kind: String,
    pub passed: bool,
    pub checks: Vec<CheckReport>,
}

impl From<&VerificationReport> for VerificationSummary {
    fn from(v: &VerificationReport) -> Self {
        Self {
            kind: v.kind.to_string(),
            passed: v.passed(),
            checks: v
                .checks
                .iter()
                .map(|c| CheckReport {
                    name: c.name.to_string(),
                    value: c.value,
                    passed: c.passed,
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CertificateReport {
    Infeasibility {
        y: Vec<f64>,
        strict: bool,
        eps: f64,
    },
    Unboundedness {
        x: Vec<f64>,
        tau: f64,
        strict: bool,
        eps: f64,
    },
    OptimalPair {
        x: Vec<f64>,
        y_scaled: Vec<f64>,
        tau: f64,
        eps: f64,
    },
    FeasiblePair {
        x: Vec<f64>,
        y_scaled: Vec<f64>,
        tau: f64,
        objective_estimate: f64,
    },
}

impl From<&Certificate> for CertificateReport {
    fn from(c: &Certificate) -> Self {
        let v = |d: &nalgebra::DVector<f64>| d.as_slice().to_vec();
        match c {
            Certificate::Infeasibility { y, strict, eps } => Self::Infeasibility {
                y: v(y),
                strict: *strict,
                eps: *eps,
            },
            Certificate::Unboundedness { x, tau, strict, eps } => Self::Unboundedness {
                x: v(x),
                tau: *tau,
                strict: *strict,
                eps: *eps,
            },
            Certificate::OptimalPair {
                x,
                y_scaled,
                tau,
                eps,
            } => Self::OptimalPair {
                x: v(x),
                y_scaled: v(y_scaled),
                tau: *tau,
                eps: *eps,
            },
            Certificate::FeasiblePair {
                x,
                y_scaled,
                tau,
                objective_estimate,
            } => Self::FeasiblePair {
                x: v(x),
                y_scaled: v(y_scaled),
                tau: *tau,
                objective_estimate: *objective_estimate,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub iterations: usize,
    #[serde(with = "lossless")]
    pub mu: f64,
    #[serde(with = "lossless")]
    pub tau: f64,
    #[serde(with = "lossless")]
    pub proximity: f64,
    #[serde(with = "lossless")]
    pub gap: f64,
    #[serde(with = "lossless")]
    pub p_feas: f64,
    #[serde(with = "lossless")]
    pub d_feas: f64,
    #[serde(with = "lossless")]
    pub log_mu_slope: f64,
}

impl From<&Diagnostics> for DiagnosticsReport {
    fn from(d: &Diagnostics) -> Self {
        Self {
            iterations: d.iterations,
            mu: d.mu,
            tau: d.tau,
            proximity: d.proximity,
            gap: d.gap,
            p_feas: d.p_feas,
            d_feas: d.d_feas,
            log_mu_slope: d.log_mu_slope,
        }
    }
}

/// The machine-readable outcome of one solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub status: String,
    pub exit_code: i32,
    pub x: Option<Vec<f64>>,
    pub y_scaled: Option<Vec<f64>>,
    pub objective: Option<f64>,
    pub objective_estimate: Option<f64>,
    pub certificate: Option<CertificateReport>,
    pub diagnostics: DiagnosticsReport,
    pub verification: Option<VerificationSummary>,
    pub message: Option<String>,
}

/// Process exit code for a terminal status.
pub fn exit_code(status: Status) -> i32 {
    match status {
        Status::EpsSolution => 0,
        Status::InfeasibilityCertificate => 1,
        Status::UnboundednessCertificate => 2,
        Status::IllConditioned => 3,
        Status::NumericalFailure | Status::IterationLimit => 5,
    }
}

impl RunReport {
    pub fn new(report: &StatusReport, objective: Option<f64>) -> Self {
        Self {
            status: report.status.to_string(),
            exit_code: exit_code(report.status),
            x: report.x.as_ref().map(|x| x.as_slice().to_vec()),
            y_scaled: report.y_scaled.as_ref().map(|y| y.as_slice().to_vec()),
            objective,
            objective_estimate: report.objective_estimate,
            certificate: report.certificate.as_ref().map(CertificateReport::from),
            diagnostics: DiagnosticsReport::from(&report.diagnostics),
            verification: report.verification.as_ref().map(VerificationSummary::from),
            message: report.message.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}
