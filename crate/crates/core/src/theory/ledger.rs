use std::f64::consts::{FRAC_PI_2, SQRT_2};

use serde::Serialize;

use crate::error::{invalid, Error, Result};

/// Implications between constants of equivalent stability statements.
///
/// Input and output names follow the statements: `C0` is the constant of
/// the hypothesis, `C` the constant of the conclusion, `B_norm` is the
/// operator norm of the damping factor (`‖a‖∞^{1/2}` for `B = √a`),
/// `a_norm` is `‖a‖∞`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum ChainRule {
    /// `(M0, omega0) → C = M0/omega0`.
    SemigroupToResolvent,
    /// `C0 → (M, omega) = (e^{π/2}, 1/C0)`.
    ResolventToSemigroup,
    /// `(C0, B_norm) → (C1, C2) = (C0, C0·B_norm/√2)`.
    ResolventToHalfwave,
    /// `(C1, C2, B_norm, lambda) → C3, C`.
    HalfwaveToResolvent,
    /// `(C1, C2) → (C, mu) = (2·C2, 1/(2·C1))`.
    HalfwaveToSpectralObservability,
    /// `(C0, mu0, B_norm) → (C1, C2) = (μ0⁻¹(1 + C0·B_norm), C0)`.
    SpectralObservabilityToHalfwave,
    /// `(C1, C2) → C = C2`.
    ProjectionFormToObservability,
    /// `(C0, B_norm) → (C1, C2) = (1 + C0·B_norm, C0)`.
    ObservabilityToProjectionForm,
    /// `(C1, C2, eps, lambda, a_norm) → C3, C` for the sublevel-set form.
    SetHalfwaveToResolvent,
    /// `(C0, a_norm) → (C, eps, mu)`.
    ResolventToAnnihilation,
    /// `(C0, eps0, mu0, a_norm) → (C1, C2, eps, C)`.
    AnnihilationToResolvent,
    /// `(C0, eps0, mu0, a_norm) → (M, omega0)`.
    AnnihilationToSemigroup,
    /// `p0 → (p1, p2) = (p0, 0)`.
    PolyStabilityToHalfwave,
    /// `p0 → (p1, p2) = (p0, p0)`.
    PolyStabilityToObservability,
    /// `(p1, p2) → p = 2(p1 + p2)`.
    PolyResolventToStability,
    /// `p0 → p1 = p2 = p3 = p0`.
    PolyStabilityToAnnihilation,
    /// `(p1, p2, p3) → p = max{p1, 2p2} + 2p3`.
    PolyAnnihilationToStability,
    /// `(s, s0, p) → q = (1+p)s0/s − 1`.
    ExtrapolationExponent,
}

impl ChainRule {
    pub const ALL: [ChainRule; 18] = [
        ChainRule::SemigroupToResolvent,
        ChainRule::ResolventToSemigroup,
        ChainRule::ResolventToHalfwave,
        ChainRule::HalfwaveToResolvent,
        ChainRule::HalfwaveToSpectralObservability,
        ChainRule::SpectralObservabilityToHalfwave,
        ChainRule::ProjectionFormToObservability,
        ChainRule::ObservabilityToProjectionForm,
        ChainRule::SetHalfwaveToResolvent,
        ChainRule::ResolventToAnnihilation,
        ChainRule::AnnihilationToResolvent,
        ChainRule::AnnihilationToSemigroup,
        ChainRule::PolyStabilityToHalfwave,
        ChainRule::PolyStabilityToObservability,
        ChainRule::PolyResolventToStability,
        ChainRule::PolyStabilityToAnnihilation,
        ChainRule::PolyAnnihilationToStability,
        ChainRule::ExtrapolationExponent,
    ];

    pub fn inputs(self) -> &'static [&'static str] {
        use ChainRule::*;
        match self {
            SemigroupToResolvent => &["M0", "omega0"],
            ResolventToSemigroup => &["C0"],
            ResolventToHalfwave => &["C0", "B_norm"],
            HalfwaveToResolvent => &["C1", "C2", "B_norm", "lambda"],
            HalfwaveToSpectralObservability => &["C1", "C2"],
            SpectralObservabilityToHalfwave => &["C0", "mu0", "B_norm"],
            ProjectionFormToObservability => &["C1", "C2"],
            ObservabilityToProjectionForm => &["C0", "B_norm"],
            SetHalfwaveToResolvent => &["C1", "C2", "eps", "lambda", "a_norm"],
            ResolventToAnnihilation => &["C0", "a_norm"],
            AnnihilationToResolvent | AnnihilationToSemigroup => &["C0", "eps0", "mu0", "a_norm"],
            PolyStabilityToHalfwave | PolyStabilityToObservability | PolyStabilityToAnnihilation => &["p0"],
            PolyResolventToStability => &["p1", "p2"],
            PolyAnnihilationToStability => &["p1", "p2", "p3"],
            ExtrapolationExponent => &["s", "s0", "p"],
        }
    }

    /// Values that must be strictly positive because they are inverted.
    fn positive_inputs(self) -> &'static [&'static str] {
        use ChainRule::*;
        match self {
            SemigroupToResolvent => &["omega0"],
            ResolventToSemigroup | ResolventToAnnihilation => &["C0"],
            HalfwaveToSpectralObservability => &["C1"],
            SpectralObservabilityToHalfwave => &["mu0"],
            SetHalfwaveToResolvent => &["eps"],
            AnnihilationToResolvent | AnnihilationToSemigroup => &["eps0", "mu0"],
            ExtrapolationExponent => &["s", "s0"],
            _ => &[],
        }
    }

    fn derive(self, x: &[f64]) -> Vec<(&'static str, f64, &'static str)> {
        use ChainRule::*;
        match self {
            SemigroupToResolvent => vec![("C", x[0] / x[1], "C = M0 / omega0")],
            ResolventToSemigroup => vec![
                ("M", FRAC_PI_2.exp(), "M = e^{π/2}"),
                ("omega", 1.0 / x[0], "omega = 1 / C0"),
            ],
            ResolventToHalfwave => vec![
                ("C1", x[0], "C1 = C0"),
                ("C2", x[0] * x[1] / SQRT_2, "C2 = C0 B_norm / √2"),
            ],
            HalfwaveToResolvent => {
                let (c1, c2, b, lambda) = (x[0], x[1], x[2], x[3]);
                let c3 = c1.max((1.0 + c2 * b) / (1.0 + lambda.abs()));
                vec![
                    ("C3", c3, "C3 = max{C1, (1 + C2 B_norm)/(1 + |lambda|)}"),
                    (
                        "C",
                        2.0 * (SQRT_2 * c3 + 2.0 * (c2 + c3 * b).powi(2)),
                        "C = 2(√2 C3 + 2(C2 + C3 B_norm)^2)",
                    ),
                ]
            }
            HalfwaveToSpectralObservability => vec![
                ("C", 2.0 * x[1], "C = 2 C2"),
                ("mu", 1.0 / (2.0 * x[0]), "mu = 1/(2 C1)"),
            ],
            SpectralObservabilityToHalfwave => vec![
                ("C1", (1.0 + x[0] * x[2]) / x[1], "C1 = (1 + C0 B_norm)/mu0"),
                ("C2", x[0], "C2 = C0"),
            ],
            ProjectionFormToObservability => vec![("C", x[1], "C = C2")],
            ObservabilityToProjectionForm => vec![
                ("C1", 1.0 + x[0] * x[1], "C1 = 1 + C0 B_norm"),
                ("C2", x[0], "C2 = C0"),
            ],
            SetHalfwaveToResolvent => {
                let (c1, c2, eps, lambda, a) = (x[0], x[1], x[2], x[3], x[4]);
                let c3 = c1.max((1.0 + c2) / (1.0 + lambda.abs()));
                vec![
                    ("C3", c3, "C3 = max{C1, (1 + C2)/(1 + |lambda|)}"),
                    (
                        "C",
                        2.0 * (SQRT_2 * c3 + 2.0 * (c2 / eps.sqrt() + c3 * a.sqrt()).powi(2)),
                        "C = 2(√2 C3 + 2(eps^{-1/2} C2 + C3 a_norm^{1/2})^2)",
                    ),
                ]
            }
            ResolventToAnnihilation => vec![
                ("C", 2.0 * (1.0 + SQRT_2 * x[0] * x[1]), "C = 2(1 + √2 C0 a_norm)"),
                ("eps", 1.0 / (2.0 * SQRT_2 * x[0]), "eps = 1/(2√2 C0)"),
                ("mu", 1.0 / (2.0 * x[0]), "mu = 1/(2 C0)"),
            ],
            AnnihilationToResolvent => {
                let (c, eps0, mu0, a) = (x[0], x[1], x[2], x[3]);
                vec![
                    ("C1", c / mu0, "C1 = C0 / mu0"),
                    ("C2", c, "C2 = C0"),
                    ("eps", eps0, "eps = eps0"),
                    (
                        "C",
                        8.0 * (1.0 + 1.0 / mu0).powi(2) * (1.0 + 1.0 / eps0 + a) * (1.0 + c).powi(2),
                        "C = 8(1 + 1/mu0)^2 (1 + 1/eps0 + a_norm)(1 + C0)^2",
                    ),
                ]
            }
            AnnihilationToSemigroup => {
                let (c, eps0, mu0, a) = (x[0], x[1], x[2], x[3]);
                let inv = 8.0 * (1.0 + 1.0 / eps0 + a) * (1.0 + 1.0 / mu0).powi(2) * (1.0 + c);
                vec![
                    ("M", FRAC_PI_2.exp(), "M = e^{π/2}"),
                    ("omega0", 1.0 / inv, "1/omega0 = 8(1 + 1/eps0 + a_norm)(1 + 1/mu0)^2 (1 + C0)"),
                ]
            }
            PolyStabilityToHalfwave => vec![("p1", x[0], "p1 = p0"), ("p2", 0.0, "p2 = 0")],
            PolyStabilityToObservability => vec![("p1", x[0], "p1 = p0"), ("p2", x[0], "p2 = p0")],
            PolyResolventToStability => vec![("p", 2.0 * (x[0] + x[1]), "p = 2(p1 + p2)")],
            PolyStabilityToAnnihilation => vec![
                ("p1", x[0], "p1 = p0"),
                ("p2", x[0], "p2 = p0"),
                ("p3", x[0], "p3 = p0"),
            ],
            PolyAnnihilationToStability => {
                vec![("p", x[0].max(2.0 * x[1]) + 2.0 * x[2], "p = max{p1, 2 p2} + 2 p3")]
            }
            ExtrapolationExponent => vec![("q", (1.0 + x[2]) * x[1] / x[0] - 1.0, "q = (1 + p) s0 / s - 1")],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Origin {
    Input { note: String },
    Alias { of: String },
    Derived { rule: ChainRule, formula: &'static str, inputs: Vec<(String, f64)> },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LedgerEntry {
    pub name: String,
    pub value: f64,
    pub origin: Origin,
}

/// Append-only record of named constants. Lookups return the latest entry
/// with a given name.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ConstantLedger {
    entries: Vec<LedgerEntry>,
}

impl ConstantLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.insert(name, value, "input");
        self
    }

    pub fn insert(&mut self, name: &str, value: f64, note: &str) {
        self.entries.push(LedgerEntry {
            name: name.to_string(),
            value,
            origin: Origin::Input { note: note.to_string() },
        });
    }

    /// Re-exposes the latest value of `from` under the name `to`.
    pub fn alias(&mut self, to: &str, from: &str) -> Result<()> {
        let value = self.get(from).ok_or_else(|| Error::MissingInputs(vec![from.to_string()]))?;
        self.entries.push(LedgerEntry {
            name: to.to_string(),
            value,
            origin: Origin::Alias { of: from.to_string() },
        });
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.entry(name).map(|e| e.value)
    }

    pub fn entry(&self, name: &str) -> Option<&LedgerEntry> {
        self.entries.iter().rev().find(|e| e.name == name)
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn apply(&mut self, rule: ChainRule) -> Result<&mut Self> {
        let names = rule.inputs();
        let missing: Vec<String> =
            names.iter().filter(|n| self.get(n).is_none()).map(|n| n.to_string()).collect();
        if !missing.is_empty() {
            return Err(Error::MissingInputs(missing));
        }
        let values: Vec<f64> = names.iter().map(|n| self.get(n).unwrap_or(f64::NAN)).collect();
        for (n, v) in names.iter().zip(&values) {
            if !v.is_finite() || *v < 0.0 && *n != "lambda" {
                return Err(invalid("ledger", format!("input {n} = {v} must be finite and nonnegative")));
            }
        }
        for n in rule.positive_inputs() {
            if self.get(n).is_some_and(|v| v <= 0.0) {
                return Err(invalid("ledger", format!("input {n} must be positive")));
            }
        }
        let inputs: Vec<(String, f64)> = names.iter().map(|n| n.to_string()).zip(values.iter().copied()).collect();
        for (name, value, formula) in rule.derive(&values) {
            self.entries.push(LedgerEntry {
                name: name.to_string(),
                value,
                origin: Origin::Derived { rule, formula, inputs: inputs.clone() },
            });
        }
        Ok(self)
    }
}

/// Applies `rule` to a copy of `ledger`.
pub fn constant_chain(ledger: &ConstantLedger, rule: ChainRule) -> Result<ConstantLedger> {
    let mut out = ledger.clone();
    out.apply(rule)?;
    Ok(out)
}
