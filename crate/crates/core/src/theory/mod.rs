//! Stability classes, the fact-based classifier, the order extrapolation
//! calculus and the constant ledger.

use std::cmp::Ordering;

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::scalar::Rate;

mod classify;
mod extrapolation;
pub mod inequalities;
mod ledger;

pub use classify::{classify, Classification, Exclusion, Facts, GccFacts, StructuralFacts, Truth};
pub use extrapolation::{exponent_q, extrapolate, strong_poly_rule};
pub use ledger::{constant_chain, ChainRule, ConstantLedger, LedgerEntry, Origin};

/// Decay classes, ordered from weakest to strongest.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ClassTag {
    Unknown,
    SmallO,
    Logarithmic,
    Polynomial,
    Exponential,
}

impl ClassTag {
    pub fn name(self) -> &'static str {
        match self {
            ClassTag::Unknown => "unknown",
            ClassTag::SmallO => "o(1)",
            ClassTag::Logarithmic => "logarithmic",
            ClassTag::Polynomial => "polynomial",
            ClassTag::Exponential => "exponential",
        }
    }
}

/// A rule identifier together with the statement it applied.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Citation {
    pub rule: &'static str,
    pub statement: String,
}

impl Citation {
    pub fn new(rule: &'static str, statement: impl Into<String>) -> Self {
        Self { rule, statement: statement.into() }
    }
}

/// Constants of an exponential bound `‖T(t)‖ ≤ M e^{-ωt}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GrowthBound {
    pub m: f64,
    pub omega: f64,
}

/// A decay class with its semigroup-level rate.
///
/// For polynomial and logarithmic classes `rate` is the exponent `1/p` in
/// `‖T(t)A⁻¹‖ ≤ M(1+t)^{-1/p}` resp. `M(log(e+t))^{-1/p}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityClass<R> {
    pub tag: ClassTag,
    pub rate: Option<R>,
    pub bound: Option<GrowthBound>,
    pub provenance: Vec<Citation>,
}

impl<R: Rate> StabilityClass<R> {
    fn bare(tag: ClassTag, rate: Option<R>) -> Self {
        Self { tag, rate, bound: None, provenance: Vec::new() }
    }

    pub fn exponential() -> Self {
        Self::bare(ClassTag::Exponential, None)
    }

    pub fn polynomial(rate: R) -> Result<Self> {
        check_rate(&rate)?;
        Ok(Self::bare(ClassTag::Polynomial, Some(rate)))
    }

    pub fn logarithmic(rate: R) -> Result<Self> {
        check_rate(&rate)?;
        Ok(Self::bare(ClassTag::Logarithmic, Some(rate)))
    }

    pub fn small_o() -> Self {
        Self::bare(ClassTag::SmallO, None)
    }

    pub fn unknown() -> Self {
        Self::bare(ClassTag::Unknown, None)
    }

    pub fn with_bound(mut self, m: f64, omega: f64) -> Self {
        self.bound = Some(GrowthBound { m, omega });
        self
    }

    pub fn cite(mut self, rule: &'static str, statement: impl Into<String>) -> Self {
        self.provenance.push(Citation::new(rule, statement));
        self
    }

    /// The exponent `p` with `rate = 1/p`.
    pub fn p(&self) -> Option<R> {
        self.rate.clone().map(|r| R::one() / r)
    }

    /// Strength comparison in the class lattice. Rates break ties inside
    /// the polynomial and logarithmic classes.
    pub fn strength_cmp(&self, other: &Self) -> Ordering {
        match self.tag.cmp(&other.tag) {
            Ordering::Equal => match (&self.rate, &other.rate) {
                (Some(a), Some(b)) => a.partial_cmp(b).unwrap_or(Ordering::Equal),
                _ => Ordering::Equal,
            },
            o => o,
        }
    }

    pub fn at_least_as_strong(&self, other: &Self) -> bool {
        self.strength_cmp(other) != Ordering::Less
    }

    /// Rate as f64, when present.
    pub fn rate_f64(&self) -> Option<f64> {
        self.rate.as_ref().and_then(|r| r.to_f64())
    }
}

fn check_rate<R: Rate>(rate: &R) -> Result<()> {
    if *rate > R::zero() {
        Ok(())
    } else {
        Err(invalid("rate", format!("must be positive, got {rate}")))
    }
}
