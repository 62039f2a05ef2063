use super::StabilityClass;
use crate::error::{invalid, Result};
use crate::scalar::Rate;

/// `q = (1+p) s₀ / s − 1`.
pub fn exponent_q<R: Rate>(s: R, s0: R, p: R) -> R {
    (R::one() + p) * s0 / s - R::one()
}

fn positive<R: Rate>(name: &'static str, x: &R) -> Result<()> {
    if *x > R::zero() {
        Ok(())
    } else {
        Err(invalid(name, format!("must be positive, got {x}")))
    }
}

fn two<R: Rate>() -> R {
    R::int(2)
}

fn poly_from_q<R: Rate>(q: R) -> Result<StabilityClass<R>> {
    StabilityClass::polynomial(R::one() / (two::<R>() * q))
}

/// Transfers a class known at order `s0` to order `s`.
pub fn extrapolate<R: Rate>(class: &StabilityClass<R>, s0: R, s: R) -> Result<StabilityClass<R>> {
    positive("s0", &s0)?;
    positive("s", &s)?;
    use super::ClassTag::*;
    let out = match class.tag {
        Exponential if s >= s0 => StabilityClass::exponential(),
        Exponential => poly_from_q(exponent_q(s.clone(), s0.clone(), R::zero()))?,
        Polynomial => {
            let p = class.p().ok_or_else(|| invalid("rate", "polynomial class without rate"))?;
            if s >= s0 {
                StabilityClass::polynomial(s.clone() / (two::<R>() * s0.clone() * p))?
            } else {
                poly_from_q(exponent_q(s.clone(), s0.clone(), two::<R>() * p))?
            }
        }
        Logarithmic => {
            let p = class.p().ok_or_else(|| invalid("rate", "logarithmic class without rate"))?;
            StabilityClass::logarithmic(s.clone() / (s0.clone() * p))?
        }
        SmallO => StabilityClass::small_o(),
        Unknown => return Ok(StabilityClass::unknown()),
    };
    let mut out = out;
    out.provenance = class.provenance.clone();
    Ok(out.cite(
        "order-extrapolation",
        format!("{} stability at order {s0} transfers to order {s}", class.tag.name()),
    ))
}

/// Exponential stability at order `s ≥ (1+p)s₀` from a resolvent bound with
/// polynomial weight `(1+λ)^p` on the half-wave term at order `s₀`.
pub fn strong_poly_rule<R: Rate>(p: R, s0: R, s: R) -> Result<StabilityClass<R>> {
    positive("s0", &s0)?;
    positive("s", &s)?;
    if p < R::zero() {
        return Err(invalid("p", format!("must be nonnegative, got {p}")));
    }
    let threshold = (R::one() + p.clone()) * s0.clone();
    let out = if s >= threshold {
        StabilityClass::exponential()
    } else {
        poly_from_q(exponent_q(s.clone(), s0.clone(), p.clone()))?
    };
    Ok(out.cite(
        "weighted-halfwave-resolvent",
        format!("half-wave resolvent with weight (1+λ)^{p} at order {s0}, evaluated at order {s}"),
    ))
}
