//! Elementary power inequalities behind the order extrapolation, and the
//! pointwise symbol estimates and annulus inclusions they imply.

use crate::error::{invalid, Result};
use crate::scalar::Real;

/// Both sides of an inequality `lhs ≤ rhs`. `scale` is the magnitude of
/// the terms whose difference forms `lhs`, which bounds its rounding error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bound<T> {
    pub lhs: T,
    pub rhs: T,
    pub scale: T,
}

impl<T: Real> Bound<T> {
    /// `lhs ≤ rhs + rel_tol · max(rhs, scale)`.
    pub fn holds(&self, rel_tol: T) -> bool {
        self.lhs <= self.rhs + rel_tol * self.rhs.max(self.scale)
    }
}

fn check_nonneg<T: Real>(name: &'static str, x: T) -> Result<()> {
    if x >= T::zero() && x.is_finite_value() {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite and nonnegative, got {x}")))
    }
}

/// `|a₁^r − a₂^r| ≤ ((a₁+a₂)/2)^{r−1} |a₁ − a₂|` for `0 < r ≤ 1`.
pub fn concave_power<T: Real>(a1: T, a2: T, r: T) -> Result<Bound<T>> {
    check_nonneg("a1", a1)?;
    check_nonneg("a2", a2)?;
    if !(r > T::zero() && r <= T::one()) {
        return Err(invalid("r", format!("must lie in (0, 1], got {r}")));
    }
    if a1 + a2 == T::zero() {
        return Err(invalid("a1", "a1 and a2 must not both vanish"));
    }
    let mid = (a1 + a2) / T::lit(2.0);
    let (p1, p2) = (a1.powf(r), a2.powf(r));
    Ok(Bound {
        lhs: (p1 - p2).abs(),
        rhs: mid.powf(r - T::one()) * (a1 - a2).abs(),
        scale: p1.max(p2),
    })
}

/// `|a₁^r − a₂^r| ≤ r max{a₁, a₂}^{r−1} |a₁ − a₂|` for `r > 1`.
pub fn convex_power<T: Real>(a1: T, a2: T, r: T) -> Result<Bound<T>> {
    check_nonneg("a1", a1)?;
    check_nonneg("a2", a2)?;
    if !(r > T::one()) {
        return Err(invalid("r", format!("must exceed 1, got {r}")));
    }
    let hi = if a1 > a2 { a1 } else { a2 };
    let (p1, p2) = (a1.powf(r), a2.powf(r));
    Ok(Bound {
        lhs: (p1 - p2).abs(),
        rhs: r * hi.powf(r - T::one()) * (a1 - a2).abs(),
        scale: p1.max(p2),
    })
}

fn symbol<T: Real>(xi_sq: T, s: T) -> T {
    (xi_sq + T::one()).powf(s / T::lit(4.0))
}

/// For `s ≥ s₀`: `|⟨ξ⟩^{s₀/2} − λ^{s₀/s}| ≤ ((1+λ)/2)^{s₀/s−1} |⟨ξ⟩^{s/2} − λ|`.
pub fn higher_order_symbol<T: Real>(xi_sq: T, lambda: T, s: T, s0: T) -> Result<Bound<T>> {
    check_nonneg("xi_sq", xi_sq)?;
    check_nonneg("lambda", lambda)?;
    if !(s0 > T::zero() && s >= s0) {
        return Err(invalid("s", format!("need s ≥ s0 > 0, got s = {s}, s0 = {s0}")));
    }
    let r = s0 / s;
    let half = (T::one() + lambda) / T::lit(2.0);
    let (a, b) = (symbol(xi_sq, s0), lambda.powf(r));
    Ok(Bound {
        lhs: (a - b).abs(),
        rhs: half.powf(r - T::one()) * (symbol(xi_sq, s) - lambda).abs(),
        scale: a.max(b),
    })
}

/// Membership of `ξ` in the two annuli of the lower-order inclusion
/// `Σ(λ, s, μ(1+λ)^{-q}) ⊂ Σ(λ^{s₀/s}, s₀, μ₀(1+λ^{s₀/s})^{-p})`
/// with `μ = min{μ₀ s/s₀, 1}` and `q = (1+p)s₀/s − 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Inclusion<T> {
    pub in_inner: bool,
    /// Distance and radius for the outer annulus.
    pub outer: Bound<T>,
}

impl<T: Real> Inclusion<T> {
    pub fn holds(&self, rel_tol: T) -> bool {
        !self.in_inner || self.outer.holds(rel_tol)
    }
}

pub fn lower_order_inclusion<T: Real>(xi_sq: T, lambda: T, s: T, s0: T, p: T, mu0: T) -> Result<Inclusion<T>> {
    check_nonneg("xi_sq", xi_sq)?;
    check_nonneg("lambda", lambda)?;
    check_nonneg("p", p)?;
    if !(s > T::zero() && s < s0) {
        return Err(invalid("s", format!("need 0 < s < s0, got s = {s}, s0 = {s0}")));
    }
    if !(mu0 > T::zero()) {
        return Err(invalid("mu0", format!("must be positive, got {mu0}")));
    }
    let mu = (mu0 * s / s0).min(T::one());
    let q = (T::one() + p) * s0 / s - T::one();
    let inner_radius = mu * (T::one() + lambda).powf(-q);
    let in_inner = (symbol(xi_sq, s) - lambda).abs() < inner_radius;
    let lambda0 = lambda.powf(s0 / s);
    let sym0 = symbol(xi_sq, s0);
    Ok(Inclusion {
        in_inner,
        outer: Bound {
            lhs: (sym0 - lambda0).abs(),
            rhs: mu0 * (T::one() + lambda0).powf(-p),
            scale: sym0.max(lambda0),
        },
    })
}
