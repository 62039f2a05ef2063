use serde::Serialize;

use super::{Citation, ClassTag, StabilityClass};
use crate::error::{invalid, Error, Result};
use crate::scalar::Rate;

/// Three-valued truth for hypotheses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize)]
pub enum Truth {
    Holds,
    Fails,
    #[default]
    Unknown,
}

impl Truth {
    pub fn holds(self) -> bool {
        self == Truth::Holds
    }

    pub fn fails(self) -> bool {
        self == Truth::Fails
    }

    pub fn from_bool(b: bool) -> Self {
        if b {
            Truth::Holds
        } else {
            Truth::Fails
        }
    }
}

/// Geometric control facts for the complement of some sublevel set `{a < ε}`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct GccFacts {
    pub zero: Truth,
    pub one: Truth,
    pub dd: Truth,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct StructuralFacts {
    pub finite_measure_sublevel: Truth,
    pub periodic_superset: Truth,
    pub uniformly_continuous: Truth,
    pub continuous: Truth,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Facts<R> {
    pub d: usize,
    pub s: R,
    pub gcc: GccFacts,
    pub structural: StructuralFacts,
}

/// Sets `slot` to `value`, failing when it already holds the opposite.
fn force(slot: &mut Truth, value: Truth, what: &str, changed: &mut bool) -> Result<()> {
    match (*slot, value) {
        (_, Truth::Unknown) => Ok(()),
        (Truth::Unknown, v) => {
            *slot = v;
            *changed = true;
            Ok(())
        }
        (a, b) if a == b => Ok(()),
        _ => Err(Error::Contradiction(what.to_string())),
    }
}

impl<R: Rate> Facts<R> {
    pub fn new(d: usize, s: R) -> Self {
        Self { d, s, gcc: GccFacts::default(), structural: StructuralFacts::default() }
    }

    pub fn with_gcc(mut self, zero: Truth, one: Truth, dd: Truth) -> Self {
        self.gcc = GccFacts { zero, one, dd };
        self
    }

    pub fn with_structural(mut self, structural: StructuralFacts) -> Self {
        self.structural = structural;
        self
    }

    /// Closes the facts under the implications between hypotheses and
    /// rejects inconsistent patterns.
    pub fn complete(&self) -> Result<Self> {
        if self.d == 0 {
            return Err(invalid("d", "dimension must be at least 1"));
        }
        if self.s <= R::zero() {
            return Err(invalid("s", format!("must be positive, got {}", self.s)));
        }
        let mut f = self.clone();
        loop {
            let mut changed = false;
            let g = &mut f.gcc;
            let st = &mut f.structural;
            if g.zero.holds() {
                force(&mut g.one, Truth::Holds, "0-GCC holds but 1-GCC fails", &mut changed)?;
            }
            if g.one.holds() {
                force(&mut g.dd, Truth::Holds, "1-GCC holds but d-GCC fails", &mut changed)?;
            }
            if g.dd.fails() {
                force(&mut g.one, Truth::Fails, "d-GCC fails but 1-GCC holds", &mut changed)?;
            }
            if g.one.fails() {
                force(&mut g.zero, Truth::Fails, "1-GCC fails but 0-GCC holds", &mut changed)?;
            }
            if f.d == 1 {
                let (one, dd) = (g.one, g.dd);
                force(&mut g.one, dd, "in one dimension 1-GCC and d-GCC coincide", &mut changed)?;
                force(&mut g.dd, one, "in one dimension 1-GCC and d-GCC coincide", &mut changed)?;
            }
            if st.finite_measure_sublevel.holds() || st.periodic_superset.holds() {
                force(
                    &mut g.dd,
                    Truth::Holds,
                    "a finite-measure or periodic proper sublevel set has a thick complement",
                    &mut changed,
                )?;
            }
            if st.uniformly_continuous.holds() {
                force(&mut st.continuous, Truth::Holds, "uniformly continuous but not continuous", &mut changed)?;
            }
            if st.continuous.fails() {
                force(
                    &mut st.uniformly_continuous,
                    Truth::Fails,
                    "discontinuous but uniformly continuous",
                    &mut changed,
                )?;
            }
            if !changed {
                return Ok(f);
            }
        }
    }
}

/// A negative certificate: the semigroup is not stable in class `tag`
/// (nor in any stronger class).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Exclusion {
    pub tag: ClassTag,
    pub citation: Citation,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Classification<R> {
    /// Completed facts the rules were applied to.
    pub facts: Facts<R>,
    /// Strongest class derivable from the facts.
    pub class: StabilityClass<R>,
    pub excluded: Vec<Exclusion>,
    pub notes: Vec<String>,
}

impl<R: Rate> Classification<R> {
    /// Strongest class not ruled out by a negative certificate.
    pub fn ceiling(&self) -> ClassTag {
        self.excluded
            .iter()
            .map(|e| e.tag)
            .min()
            .map(|t| match t {
                ClassTag::Exponential => ClassTag::Polynomial,
                ClassTag::Polynomial => ClassTag::Logarithmic,
                ClassTag::Logarithmic => ClassTag::SmallO,
                _ => ClassTag::Unknown,
            })
            .unwrap_or(ClassTag::Exponential)
    }

    pub fn excludes(&self, tag: ClassTag) -> bool {
        self.excluded.iter().any(|e| e.tag <= tag)
    }
}

fn poly_or_exp<R: Rate>(exp: bool, rate: impl FnOnce() -> R) -> Result<StabilityClass<R>> {
    if exp {
        Ok(StabilityClass::exponential())
    } else {
        StabilityClass::polynomial(rate())
    }
}

/// Strongest stability class derivable from `facts`, with negative
/// certificates from the necessary directions.
pub fn classify<R: Rate>(facts: &Facts<R>) -> Result<Classification<R>> {
    let f = facts.complete()?;
    let s = f.s.clone();
    let two = R::int(2);
    let four = R::int(4);
    let d = R::int(f.d as i64);
    let g = f.gcc;
    let st = f.structural;
    let mut candidates: Vec<StabilityClass<R>> = Vec::new();
    let mut notes = Vec::new();

    if g.zero.holds() {
        candidates.push(StabilityClass::exponential().cite(
            "uniform-damping",
            "a ≥ ε almost everywhere gives exponential stability for every s > 0",
        ));
    }
    if g.one.holds() {
        let line_rate = || s.clone() / (four.clone() - two.clone() * s.clone());
        if f.d == 1 {
            candidates.push(poly_or_exp(s >= two, line_rate)?.cite(
                "segment-control-line",
                "in one dimension, 1-GCC gives exponential stability for s ≥ 2 and s/(4-2s)-polynomial stability below",
            ));
        } else if st.uniformly_continuous.holds() {
            candidates.push(poly_or_exp(s >= two, line_rate)?.cite(
                "segment-control-uniformly-continuous",
                "1-GCC with uniformly continuous damping gives exponential stability for s ≥ 2 and s/(4-2s)-polynomial stability below",
            ));
        } else {
            notes.push(
                "1-GCC holds, but without uniform continuity of the damping the segment-control rule does not apply"
                    .to_string(),
            );
        }
    }
    if g.dd.holds() {
        candidates.push(StabilityClass::logarithmic(s.clone() / two.clone())?.cite(
            "thick-complement",
            "d-GCC of the sublevel complement is equivalent to (s/2)-logarithmic stability",
        ));
    }
    if st.finite_measure_sublevel.holds() {
        let threshold = two.clone() * d.clone();
        let rate = || R::one() / (four.clone() * d.clone() / s.clone() - two.clone());
        candidates.push(poly_or_exp(s >= threshold, rate)?.cite(
            "finite-measure-sublevel",
            "a finite-measure sublevel set gives exponential stability for s ≥ 2d and (4d/s-2)^{-1}-polynomial stability below",
        ));
    }
    if st.periodic_superset.holds() {
        let rate = || R::one() / (R::int(8) / s.clone() - two.clone());
        candidates.push(poly_or_exp(s >= four, rate)?.cite(
            "periodic-superset",
            "a sublevel set inside a closed periodic proper subset gives exponential stability for s ≥ 4 and (8/s-2)^{-1}-polynomial stability below",
        ));
    }

    let mut excluded = Vec::new();
    if g.dd.fails() {
        excluded.push(Exclusion {
            tag: ClassTag::SmallO,
            citation: Citation::new(
                "thick-complement-necessary",
                "o(1) stability for some order forces d-GCC of a sublevel complement",
            ),
        });
    }
    if g.zero.fails() && s < two {
        excluded.push(Exclusion {
            tag: ClassTag::Exponential,
            citation: Citation::new(
                "uniform-damping-necessary",
                "exponential stability for some 0 < s < 2 forces a ≥ ε almost everywhere",
            ),
        });
    }
    if f.d >= 2 && s == two && g.one.fails() {
        if st.continuous.holds() {
            excluded.push(Exclusion {
                tag: ClassTag::Exponential,
                citation: Citation::new(
                    "segment-control-necessary",
                    "for continuous damping at s = 2, exponential stability forces 1-GCC",
                ),
            });
        } else {
            notes.push(
                "1-GCC fails at s = 2, but continuity of the damping is not established, so exponential stability is not excluded"
                    .to_string(),
            );
        }
    }

    let mut best = StabilityClass::unknown();
    for c in &candidates {
        if c.strength_cmp(&best) == std::cmp::Ordering::Greater {
            best = StabilityClass { provenance: Vec::new(), ..c.clone() };
        }
    }
    for c in &candidates {
        if c.strength_cmp(&best) == std::cmp::Ordering::Equal && c.tag == best.tag {
            best.provenance.extend(c.provenance.iter().cloned());
        }
    }

    if let Some(e) = excluded.iter().find(|e| best.tag >= e.tag && best.tag != ClassTag::Unknown) {
        return Err(Error::Contradiction(format!(
            "derived {} stability but {}",
            best.tag.name(),
            e.citation.statement
        )));
    }
    if best.tag == ClassTag::Logarithmic && !excluded.iter().any(|e| e.tag == ClassTag::Exponential) {
        notes.push(
            "whether d-GCC alone gives exponential stability for large s is open; only the logarithmic class is claimed"
                .to_string(),
        );
    }
    if best.tag == ClassTag::Unknown && g.dd.fails() {
        notes.push("no decay class is possible".to_string());
    }

    Ok(Classification { facts: f, class: best, excluded, notes })
}
