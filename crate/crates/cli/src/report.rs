//! The versioned JSON report.

use std::collections::BTreeMap;

use kgstab::geometry::GccReport;
use kgstab::ratefit::FitReport;
use kgstab::resolvent::ResolventPoint;
use kgstab::theory::{ClassTag, Classification, ConstantLedger, StabilityClass};
use serde::Serialize;

use crate::config::RawScenario;

pub const SCHEMA_VERSION: &str = "kgstab-report/1";

/// Conventions referenced by the `convention` tags.
pub fn conventions() -> BTreeMap<&'static str, &'static str> {
    BTreeMap::from([
        ("semigroup_rate", "decay exponent of the solution operator: omega in ||T(t)|| <= M e^{-omega t}, or 1/p in ||T(t)A^{-1}|| <= M (1+t)^{-1/p} resp. (log(e+t))^{-1/p}"),
        ("energy_rate", "decay exponent of the energy E(t) = ||T(t)x||^2; twice the semigroup rate"),
        ("resolvent_constant", "1/sigma_min of the operator, in the H^{s/2} x L^2 norm for the generator and L^2 otherwise; combined (l2) right-hand side"),
        ("sum_form_constant", "sharp constant with the right-hand side written as a sum of norms"),
        ("length", "spatial units of the box [-L/2, L/2)^d"),
        ("time", "time units of the evolution"),
    ])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Tagged {
    pub value: f64,
    pub convention: &'static str,
}

impl Tagged {
    pub fn new(value: f64, convention: &'static str) -> Self {
        Self { value, convention }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome<T> {
    Ok(T),
    Error { error: String },
}

impl<T> Outcome<T> {
    pub fn ok(&self) -> Option<&T> {
        match self {
            Outcome::Ok(t) => Some(t),
            Outcome::Error { .. } => None,
        }
    }

    pub fn is_ok(&self) -> bool {
        matches!(self, Outcome::Ok(_))
    }
}

impl<T> From<Result<T, String>> for Outcome<T> {
    fn from(r: Result<T, String>) -> Self {
        match r {
            Ok(t) => Outcome::Ok(t),
            Err(error) => Outcome::Error { error },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitSummary {
    #[serde(flatten)]
    pub fit: FitReport,
    pub semigroup_rate: Tagged,
    pub energy_rate: Tagged,
}

impl From<FitReport> for FitSummary {
    fn from(fit: FitReport) -> Self {
        let semigroup_rate = Tagged::new(fit.rate, "semigroup_rate");
        let energy_rate = Tagged::new(2.0 * fit.rate, "energy_rate");
        Self { fit, semigroup_rate, energy_rate }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulateReport {
    pub method: String,
    pub horizon: Tagged,
    pub samples: usize,
    pub smooth: bool,
    pub max_step: Option<f64>,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub selected: FitSummary,
    pub candidates: Vec<FitSummary>,
    pub csv: String,
    pub plot: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub operator: &'static str,
    pub lambda_max: f64,
    pub points: Vec<ResolventPoint<f64>>,
    pub sup_constant: Tagged,
    pub argmax_lambda: f64,
    pub symbol_max: f64,
    pub tail_monotone: Option<bool>,
    /// The sweep only samples `[0, lambda_max]`; chains below read its supremum as uniform.
    pub truncation_note: &'static str,
    pub ledger: Option<ConstantLedger>,
    pub csv: String,
    pub plot: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnnihilationPoint {
    pub lambda: f64,
    pub sigma_count: usize,
    pub s_count: usize,
    pub clipped: bool,
    pub two_sided: Option<Tagged>,
    pub sum_form_interval: Option<[f64; 2]>,
    pub sum_form_sharp: Option<Tagged>,
    pub one_sided: Option<Tagged>,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnnihilationReport {
    pub epsilon: f64,
    pub mu: f64,
    pub sublevel_measure: Tagged,
    pub points: Vec<AnnihilationPoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GccSection {
    pub epsilon: f64,
    pub zero: GccReport<f64>,
    pub d: GccReport<f64>,
    pub one: GccReport<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Extrapolated {
    pub s: f64,
    pub class: StabilityClass<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassifyReport {
    /// Where each fact came from: `config`, `gcc_check` or `damping`.
    pub fact_sources: BTreeMap<&'static str, &'static str>,
    pub classification: Classification<f64>,
    pub predicted_rate: Option<Tagged>,
    pub extrapolations: Vec<Extrapolated>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConformanceStatus {
    Consistent,
    Inconsistent,
    NotApplicable,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Conformance {
    pub status: ConformanceStatus,
    pub predicted: Option<ClassTag>,
    pub fitted: Option<ClassTag>,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrderRun {
    pub s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulate: Option<Outcome<SimulateReport>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolvent_sweep: Option<Outcome<SweepReport>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub annihilation: Option<Outcome<AnnihilationReport>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gcc_check: Option<Outcome<GccSection>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classify: Option<Outcome<ClassifyReport>>,
    pub conformance: Conformance,
    pub warnings: Vec<String>,
}

impl OrderRun {
    pub fn completed(&self) -> bool {
        self.simulate.as_ref().is_none_or(Outcome::is_ok)
            && self.resolvent_sweep.as_ref().is_none_or(Outcome::is_ok)
            && self.annihilation.as_ref().is_none_or(Outcome::is_ok)
            && self.gcc_check.as_ref().is_none_or(Outcome::is_ok)
            && self.classify.as_ref().is_none_or(Outcome::is_ok)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub schema_version: &'static str,
    pub scenario: RawScenario,
    pub seed: u64,
    pub conventions: BTreeMap<&'static str, &'static str>,
    pub runs: Vec<OrderRun>,
    pub completed: bool,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
