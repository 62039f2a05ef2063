//! Sharp constants as reciprocal smallest singular values.

use rayon::prelude::*;
use serde::Serialize;

use crate::damping::SublevelMask;
use crate::error::{Error, Result};
use crate::evolution::Generator;
use crate::linalg::{assemble, sigma_min, sum_form_minimum, LinearOperator, SolveMethod, SolveStatus, SolverOptions};
use crate::scalar::{czero, Complex, Real};
use crate::spectral::{annulus, AnnulusSet, Fourier, TorusGrid};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    FullA,
    Halfwave,
    OneSided,
    TwoSided,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ResolventPoint<T> {
    pub lambda: T,
    pub sigma_min: T,
    /// `1/σ_min`, infinite when `σ_min = 0`.
    pub constant: T,
    pub operator: OperatorKind,
    pub method: SolveMethod,
    pub status: SolveStatus,
}

fn reciprocal<T: Real>(sigma: T) -> T {
    if sigma > T::zero() {
        T::one() / sigma
    } else {
        T::lit(f64::INFINITY)
    }
}

fn point<T: Real, L: LinearOperator<T>>(op: &L, lambda: T, kind: OperatorKind, opts: &SolverOptions) -> ResolventPoint<T> {
    let (sigma, method, status) = sigma_min(op, opts);
    ResolventPoint { lambda, sigma_min: sigma, constant: reciprocal(sigma), operator: kind, method, status }
}

/// `K − iλ` in weighted frequency coordinates.
pub struct ShiftedGenerator<'a, T: Real> {
    pub gen: &'a Generator<T>,
    pub lambda: T,
}

impl<T: Real> LinearOperator<T> for ShiftedGenerator<'_, T> {
    fn nrows(&self) -> usize {
        self.gen.order_of_system()
    }
    fn ncols(&self) -> usize {
        self.gen.order_of_system()
    }
    fn apply(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        let il = Complex::new(T::zero(), self.lambda);
        self.gen.apply_weighted(x).into_iter().zip(x).map(|(k, v)| k - il * *v).collect()
    }
    fn apply_adjoint(&self, y: &[Complex<T>]) -> Vec<Complex<T>> {
        self.gen.apply_weighted_shifted_adjoint(y, self.lambda)
    }
}

/// `f̂ ↦ ((ω − λ) f̂, b · ℱ⁻¹ f̂)` for a pointwise multiplier `b`.
pub struct Halfwave<'a, T: Real> {
    pub omega: &'a [T],
    pub multiplier: &'a [T],
    pub fourier: &'a Fourier<T>,
    pub lambda: T,
}

impl<T: Real> LinearOperator<T> for Halfwave<'_, T> {
    fn nrows(&self) -> usize {
        2 * self.omega.len()
    }
    fn ncols(&self) -> usize {
        self.omega.len()
    }
    fn apply(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut out: Vec<_> = x.iter().zip(self.omega).map(|(v, w)| v.scale(*w - self.lambda)).collect();
        let mut space = x.to_vec();
        self.fourier.inverse(&mut space);
        out.extend(space.iter().zip(self.multiplier).map(|(v, b)| v.scale(*b)));
        out
    }
    fn apply_adjoint(&self, y: &[Complex<T>]) -> Vec<Complex<T>> {
        let m = self.omega.len();
        let mut back: Vec<_> = y[m..].iter().zip(self.multiplier).map(|(v, b)| v.scale(*b)).collect();
        self.fourier.forward(&mut back);
        (0..m).map(|k| y[k].scale(self.omega[k] - self.lambda) + back[k]).collect()
    }
}

/// `x ↦ b · ℱ⁻¹(x embedded on the modes of Σ)`.
pub struct OneSided<'a, T: Real> {
    pub modes: Vec<usize>,
    pub multiplier: &'a [T],
    pub fourier: &'a Fourier<T>,
}

impl<T: Real> LinearOperator<T> for OneSided<'_, T> {
    fn nrows(&self) -> usize {
        self.multiplier.len()
    }
    fn ncols(&self) -> usize {
        self.modes.len()
    }
    fn apply(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut buf = vec![czero(); self.multiplier.len()];
        for (v, &k) in x.iter().zip(&self.modes) {
            buf[k] = *v;
        }
        self.fourier.inverse(&mut buf);
        buf.iter().zip(self.multiplier).map(|(v, b)| v.scale(*b)).collect()
    }
    fn apply_adjoint(&self, y: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut buf: Vec<_> = y.iter().zip(self.multiplier).map(|(v, b)| v.scale(*b)).collect();
        self.fourier.forward(&mut buf);
        self.modes.iter().map(|&k| buf[k]).collect()
    }
}

/// `f ↦ ((I − Π_Σ) ℱ f, 1_{S^c} f)` on spatial values.
pub struct TwoSided<'a, T: Real> {
    pub sigma_mask: &'a [bool],
    pub s_mask: &'a [bool],
    pub fourier: &'a Fourier<T>,
}

impl<T: Real> TwoSided<'_, T> {
    fn blocks(&self) -> (OffSigma<'_, T>, OffS<'_>) {
        (OffSigma { sigma_mask: self.sigma_mask, fourier: self.fourier }, OffS { s_mask: self.s_mask })
    }
}

impl<T: Real> LinearOperator<T> for TwoSided<'_, T> {
    fn nrows(&self) -> usize {
        2 * self.s_mask.len()
    }
    fn ncols(&self) -> usize {
        self.s_mask.len()
    }
    fn apply(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        let (a, b) = self.blocks();
        let mut out = a.apply(x);
        out.extend(LinearOperator::<T>::apply(&b, x));
        out
    }
    fn apply_adjoint(&self, y: &[Complex<T>]) -> Vec<Complex<T>> {
        let m = self.s_mask.len();
        let (a, b) = self.blocks();
        let first = a.apply_adjoint(&y[..m]);
        let second = LinearOperator::<T>::apply_adjoint(&b, &y[m..]);
        first.into_iter().zip(second).map(|(p, q)| p + q).collect()
    }
}

/// `f ↦ (I − Π_Σ) ℱ f`.
pub struct OffSigma<'a, T: Real> {
    pub sigma_mask: &'a [bool],
    pub fourier: &'a Fourier<T>,
}

impl<T: Real> LinearOperator<T> for OffSigma<'_, T> {
    fn nrows(&self) -> usize {
        self.sigma_mask.len()
    }
    fn ncols(&self) -> usize {
        self.sigma_mask.len()
    }
    fn apply(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut buf = x.to_vec();
        self.fourier.forward(&mut buf);
        for (v, inside) in buf.iter_mut().zip(self.sigma_mask) {
            if *inside {
                *v = czero();
            }
        }
        buf
    }
    fn apply_adjoint(&self, y: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut buf: Vec<_> = y.iter().zip(self.sigma_mask).map(|(v, inside)| if *inside { czero() } else { *v }).collect();
        self.fourier.inverse(&mut buf);
        buf
    }
}

/// `f ↦ 1_{S^c} f`.
pub struct OffS<'a> {
    pub s_mask: &'a [bool],
}

impl<T: Real> LinearOperator<T> for OffS<'_> {
    fn nrows(&self) -> usize {
        self.s_mask.len()
    }
    fn ncols(&self) -> usize {
        self.s_mask.len()
    }
    fn apply(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        x.iter().zip(self.s_mask).map(|(v, inside)| if *inside { czero() } else { *v }).collect()
    }
    fn apply_adjoint(&self, y: &[Complex<T>]) -> Vec<Complex<T>> {
        LinearOperator::<T>::apply(self, y)
    }
}

/// Sharp `C` in `‖F‖ ≤ C ‖(A − iλ) F‖` for the weighted norm.
pub fn resolvent_constant_full<T: Real>(gen: &Generator<T>, lambda: T, opts: &SolverOptions) -> Result<ResolventPoint<T>> {
    let op = ShiftedGenerator { gen, lambda };
    Ok(point(&op, lambda, OperatorKind::FullA, opts))
}

/// Sharp combined constant for `‖f‖ ≤ C ‖(((1−Δ)^{s/4} − λ) f, √a f)‖`.
pub fn halfwave_constant<T: Real>(gen: &Generator<T>, lambda: T, opts: &SolverOptions) -> Result<ResolventPoint<T>> {
    let op = Halfwave { omega: gen.half_symbols(), multiplier: gen.sqrt_damping(), fourier: gen.fourier(), lambda };
    Ok(point(&op, lambda, OperatorKind::Halfwave, opts))
}

/// Half-wave constant with the observation `1_{S^c}` in place of `√a`.
pub fn halfwave_set_constant<T: Real>(
    gen: &Generator<T>,
    sublevel: &SublevelMask<T>,
    lambda: T,
    opts: &SolverOptions,
) -> Result<ResolventPoint<T>> {
    gen.grid().same_as(&sublevel.grid)?;
    let b = sublevel.complement_indicator();
    let op = Halfwave { omega: gen.half_symbols(), multiplier: &b, fourier: gen.fourier(), lambda };
    Ok(point(&op, lambda, OperatorKind::Halfwave, opts))
}

/// The pointwise observation used by the one-sided constant.
pub enum Observation<'a, T> {
    /// `√a` at the nodes.
    SqrtDamping(&'a [T]),
    /// `1_{S^c}`.
    Complement(&'a SublevelMask<T>),
}

/// Sharp `C` in `‖f‖ ≤ C ‖B f‖` for `f` with spectrum in `Σ`.
pub fn annihilation_one_sided<T: Real>(
    grid: &TorusGrid<T>,
    observation: Observation<'_, T>,
    sigma: &AnnulusSet<T>,
    opts: &SolverOptions,
) -> Result<ResolventPoint<T>> {
    if sigma.mask.len() != grid.len() {
        return Err(Error::GridMismatch("frequency set does not match the grid".into()));
    }
    let modes: Vec<usize> = (0..grid.len()).filter(|k| sigma.mask[*k]).collect();
    if modes.is_empty() {
        return Err(Error::EmptySpectralSet);
    }
    let owned;
    let multiplier: &[T] = match observation {
        Observation::SqrtDamping(b) => {
            if b.len() != grid.len() {
                return Err(Error::GridMismatch("observation does not match the grid".into()));
            }
            b
        }
        Observation::Complement(mask) => {
            grid.same_as(&mask.grid)?;
            owned = mask.complement_indicator();
            &owned
        }
    };
    let fourier = grid.fourier();
    let op = OneSided { modes, multiplier, fourier: &fourier };
    Ok(point(&op, sigma.lambda, OperatorKind::OneSided, opts))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AnnihilationResult<T> {
    pub s_count: usize,
    pub sigma_count: usize,
    pub sigma_min: T,
    /// Sharp constant for `‖f‖ ≤ C (‖f̂‖²_{Σ^c} + ‖f‖²_{S^c})^{1/2}`.
    pub combined_constant: T,
    /// Interval holding the sharp constant for `‖f‖ ≤ C (‖f̂‖_{Σ^c} + ‖f‖_{S^c})`.
    pub sum_form_bounds: [T; 2],
    pub method: SolveMethod,
    pub status: SolveStatus,
}

/// `[C/√2, C]`: since `√(x²+y²) ≤ x + y ≤ √2 √(x²+y²)`.
pub fn sum_form_interval<T: Real>(combined: T) -> [T; 2] {
    [combined / T::lit(2.0).sqrt(), combined]
}

pub fn annihilation_two_sided<T: Real>(
    s: &SublevelMask<T>,
    sigma: &AnnulusSet<T>,
    opts: &SolverOptions,
) -> Result<AnnihilationResult<T>> {
    if sigma.mask.len() != s.grid.len() {
        return Err(Error::GridMismatch("frequency set does not match the grid".into()));
    }
    let fourier = s.grid.fourier();
    let op = TwoSided { sigma_mask: &sigma.mask, s_mask: &s.mask, fourier: &fourier };
    let (sig, method, status) = sigma_min(&op, opts);
    let c = reciprocal(sig);
    Ok(AnnihilationResult {
        s_count: s.count(),
        sigma_count: sigma.count(),
        sigma_min: sig,
        combined_constant: c,
        sum_form_bounds: sum_form_interval(c),
        method,
        status,
    })
}

/// Sharp sum-form constant of the pair, by dense brute force.
pub fn annihilation_sum_form<T: Real>(s: &SublevelMask<T>, sigma: &AnnulusSet<T>, cap: usize) -> Result<T> {
    let m = s.grid.len();
    if m > cap {
        return Err(Error::DenseCap { order: m, cap });
    }
    let fourier = s.grid.fourier();
    let op = TwoSided { sigma_mask: &sigma.mask, s_mask: &s.mask, fourier: &fourier };
    let (a, b) = op.blocks();
    let x = assemble(&a);
    let y = assemble::<T, _>(&b);
    Ok(reciprocal(sum_form_minimum(&x, &y, T::one(), T::one())))
}

/// Which constant a sweep evaluates.
#[derive(Clone, Copy)]
pub enum SweepKind<'a, T: Real> {
    FullA(&'a Generator<T>),
    Halfwave(&'a Generator<T>),
    /// Two-sided pair `(S, Σ(λ, s, μ))` at each `λ`.
    TwoSided { sublevel: &'a SublevelMask<T>, s: T, mu: T },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult<T> {
    pub points: Vec<ResolventPoint<T>>,
    pub sup_constant: T,
    pub argmax_lambda: T,
    pub lambda_max: T,
    /// Largest half symbol on the grid.
    pub symbol_max: T,
    /// Whether constants are nonincreasing for `λ` beyond `symbol_max`; `None` without such points.
    pub tail_monotone: Option<bool>,
}

pub fn lambda_sweep<T: Real>(kind: SweepKind<'_, T>, lambda_max: T, n_points: usize, opts: &SolverOptions) -> Result<SweepResult<T>> {
    if !(lambda_max > T::zero()) {
        return Err(crate::error::invalid("lambda_max", "must be positive"));
    }
    if n_points < 2 {
        return Err(crate::error::invalid("n_points", "at least two points are required"));
    }
    let lambdas: Vec<T> = (0..n_points).map(|i| lambda_max * T::count(i) / T::count(n_points - 1)).collect();
    let points: Vec<ResolventPoint<T>> = lambdas
        .par_iter()
        .map(|&lambda| match kind {
            SweepKind::FullA(gen) => resolvent_constant_full(gen, lambda, opts),
            SweepKind::Halfwave(gen) => halfwave_constant(gen, lambda, opts),
            SweepKind::TwoSided { sublevel, s, mu } => {
                let set = annulus(lambda, s, mu, &sublevel.grid)?;
                let r = annihilation_two_sided(sublevel, &set, opts)?;
                Ok(ResolventPoint {
                    lambda,
                    sigma_min: r.sigma_min,
                    constant: r.combined_constant,
                    operator: OperatorKind::TwoSided,
                    method: r.method,
                    status: r.status,
                })
            }
        })
        .collect::<Result<_>>()?;
    let symbol_max = match kind {
        SweepKind::FullA(gen) | SweepKind::Halfwave(gen) => {
            gen.half_symbols().iter().copied().fold(T::zero(), |a, b| a.max(b))
        }
        SweepKind::TwoSided { sublevel, s, .. } => (0..sublevel.grid.len())
            .map(|k| crate::spectral::half_symbol_sq(s, sublevel.grid.xi_sq(k)))
            .fold(T::zero(), |a, b| a.max(b)),
    };
    let (mut sup, mut arg) = (points[0].constant, points[0].lambda);
    for p in &points {
        if p.constant > sup || (p.constant.to_f64_lossy().is_nan() && !sup.to_f64_lossy().is_nan()) {
            sup = p.constant;
            arg = p.lambda;
        }
    }
    let tail: Vec<&ResolventPoint<T>> = points.iter().filter(|p| p.lambda > symbol_max).collect();
    let tail_monotone = (tail.len() >= 2).then(|| {
        tail.windows(2).all(|w| w[1].constant <= w[0].constant * (T::one() + T::lit(1e-9)))
    });
    Ok(SweepResult { points, sup_constant: sup, argmax_lambda: arg, lambda_max, symbol_max, tail_monotone })
}
