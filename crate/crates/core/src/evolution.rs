//! The damped generator, time evolution and energy.
//!
//! Internally states live in weighted frequency coordinates
//! `z = (ω û, v̂)` with `ω = (|ξ|²+1)^{s/4}`, where the generator becomes
//! `K = [[0, ω], [-ω, -D_a]]` and the energy is `|z|²`.

use std::collections::HashMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::damping::DampingSpec;
use crate::error::{invalid, Error, Result};
use crate::scalar::{czero, norm_sq, Complex, Real};
use crate::spectral::{full_symbol_sq, half_symbol_sq, Fourier, Representation, SpectralField, TorusGrid};

/// Default limit on the order of dense matrices.
pub const DEFAULT_DENSE_CAP: usize = 4096;

/// Displacement and velocity on a common grid.
#[derive(Clone, Debug, PartialEq)]
pub struct StatePair<T: Real> {
    pub u: SpectralField<T>,
    pub v: SpectralField<T>,
}

impl<T: Real> StatePair<T> {
    pub fn new(u: SpectralField<T>, v: SpectralField<T>) -> Result<Self> {
        u.grid.same_as(&v.grid)?;
        if u.representation != v.representation {
            return Err(Error::Representation { expected: "matching representations", found: "mixed" });
        }
        Ok(Self { u, v })
    }

    pub fn zeros(grid: &TorusGrid<T>) -> Self {
        Self {
            u: SpectralField::zeros(grid, Representation::Space),
            v: SpectralField::zeros(grid, Representation::Space),
        }
    }

    pub fn grid(&self) -> &TorusGrid<T> {
        &self.u.grid
    }

    pub fn to_frequency(&self) -> Self {
        Self { u: self.u.to_frequency(), v: self.v.to_frequency() }
    }

    pub fn to_space(&self) -> Self {
        Self { u: self.u.to_space(), v: self.v.to_space() }
    }
}

/// `Σ (|ξ|²+1)^{s/2} |û|² + Σ |v̂|²` with the unitary transform.
pub fn energy<T: Real>(state: &StatePair<T>, s: T) -> Result<T> {
    state.u.grid.same_as(&state.v.grid)?;
    let f = state.to_frequency();
    let grid = state.grid();
    let mut e = T::zero();
    for k in 0..grid.len() {
        e += full_symbol_sq(s, grid.xi_sq(k)) * f.u.values[k].norm_sqr() + f.v.values[k].norm_sqr();
    }
    Ok(e)
}

/// Pseudo-random real initial data with entries uniform in `[-1, 1]`.
pub fn random_state<T: Real>(grid: &TorusGrid<T>, seed: u64) -> StatePair<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut field = || {
        let values = (0..grid.len()).map(|_| Complex::new(T::lit(rng.random_range(-1.0..1.0)), T::zero())).collect();
        SpectralField { grid: grid.clone(), values, representation: Representation::Space }
    };
    let u = field();
    let v = field();
    StatePair { u, v }
}

/// Pseudo-random complex vector with entries in the unit square.
pub fn random_complex<T: Real>(len: usize, rng: &mut impl Rng) -> Vec<Complex<T>> {
    (0..len)
        .map(|_| Complex::new(T::lit(rng.random_range(-1.0..1.0)), T::lit(rng.random_range(-1.0..1.0))))
        .collect()
}

/// The discretized operator `A(f₁, f₂) = (f₂, −(1−Δ)^{s/2} f₁ − a f₂)`.
#[derive(Clone, Debug)]
pub struct Generator<T: Real> {
    grid: TorusGrid<T>,
    s: T,
    damping: DampingSpec<T>,
    a: Vec<T>,
    sqrt_a: Vec<T>,
    omega: Vec<T>,
    fourier: Fourier<T>,
}

impl<T: Real> Generator<T> {
    pub fn new(grid: &TorusGrid<T>, s: T, damping: &DampingSpec<T>) -> Result<Self> {
        if !(s > T::zero()) || !s.is_finite_value() {
            return Err(invalid("s", format!("fractional order must be positive, got {s}")));
        }
        let a = damping.samples(grid)?;
        let sqrt_a = a.iter().map(|x| x.sqrt()).collect();
        let omega = (0..grid.len()).map(|k| half_symbol_sq(s, grid.xi_sq(k))).collect();
        Ok(Self { grid: grid.clone(), s, damping: damping.clone(), a, sqrt_a, omega, fourier: grid.fourier() })
    }

    pub fn grid(&self) -> &TorusGrid<T> {
        &self.grid
    }

    pub fn order(&self) -> T {
        self.s
    }

    pub fn damping(&self) -> &DampingSpec<T> {
        &self.damping
    }

    /// Damping samples at the nodes.
    pub fn damping_samples(&self) -> &[T] {
        &self.a
    }

    pub fn sqrt_damping(&self) -> &[T] {
        &self.sqrt_a
    }

    /// Half symbol per frequency, in FFT order.
    pub fn half_symbols(&self) -> &[T] {
        &self.omega
    }

    pub fn fourier(&self) -> &Fourier<T> {
        &self.fourier
    }

    /// Number of unknowns, `2 N^d`.
    pub fn order_of_system(&self) -> usize {
        2 * self.grid.len()
    }

    pub fn to_weighted(&self, state: &StatePair<T>) -> Result<Vec<Complex<T>>> {
        self.grid.same_as(state.grid())?;
        let f = state.to_frequency();
        let m = self.grid.len();
        let mut z = Vec::with_capacity(2 * m);
        z.extend((0..m).map(|k| f.u.values[k].scale(self.omega[k])));
        z.extend_from_slice(&f.v.values);
        Ok(z)
    }

    pub fn from_weighted(&self, z: &[Complex<T>]) -> StatePair<T> {
        let m = self.grid.len();
        let u: Vec<_> = (0..m).map(|k| z[k].unscale(self.omega[k])).collect();
        let v = z[m..].to_vec();
        StatePair {
            u: SpectralField { grid: self.grid.clone(), values: u, representation: Representation::Frequency },
            v: SpectralField { grid: self.grid.clone(), values: v, representation: Representation::Frequency },
        }
        .to_space()
    }

    /// `D_a y = ℱ(a · ℱ⁻¹ y)`.
    pub fn damping_in_frequency(&self, y: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut buf = y.to_vec();
        self.fourier.inverse(&mut buf);
        for (b, a) in buf.iter_mut().zip(&self.a) {
            *b = b.scale(*a);
        }
        self.fourier.forward(&mut buf);
        buf
    }

    /// `K z` in weighted coordinates.
    pub fn apply_weighted(&self, z: &[Complex<T>]) -> Vec<Complex<T>> {
        let m = self.grid.len();
        let da = self.damping_in_frequency(&z[m..]);
        let mut out = Vec::with_capacity(2 * m);
        out.extend((0..m).map(|k| z[m + k].scale(self.omega[k])));
        out.extend((0..m).map(|k| -z[k].scale(self.omega[k]) - da[k]));
        out
    }

    /// `(K − iλ)^* z`.
    pub fn apply_weighted_shifted_adjoint(&self, z: &[Complex<T>], lambda: T) -> Vec<Complex<T>> {
        let m = self.grid.len();
        let da = self.damping_in_frequency(&z[m..]);
        let il = Complex::new(T::zero(), lambda);
        let mut out = Vec::with_capacity(2 * m);
        out.extend((0..m).map(|k| -z[m + k].scale(self.omega[k]) + il * z[k]));
        out.extend((0..m).map(|k| z[k].scale(self.omega[k]) - da[k] + il * z[m + k]));
        out
    }

    pub fn apply(&self, state: &StatePair<T>) -> Result<StatePair<T>> {
        self.grid.same_as(state.grid())?;
        let sp = state.to_space();
        let f1 = sp.u.to_frequency();
        let lap = f1.apply_multiplier(|xi| full_symbol_sq(self.s, xi[0] * xi[0] + xi[1] * xi[1]))?.to_space();
        let v: Vec<_> = (0..self.grid.len()).map(|k| -lap.values[k] - sp.v.values[k].scale(self.a[k])).collect();
        Ok(StatePair {
            u: sp.v.clone(),
            v: SpectralField { grid: self.grid.clone(), values: v, representation: Representation::Space },
        })
    }

    /// `A⁻¹(g₁, g₂) = (−(1−Δ)^{−s/2}(g₂ + a g₁), g₁)`.
    pub fn invert(&self, state: &StatePair<T>) -> Result<StatePair<T>> {
        self.grid.same_as(state.grid())?;
        let sp = state.to_space();
        let rhs: Vec<_> = (0..self.grid.len()).map(|k| sp.v.values[k] + sp.u.values[k].scale(self.a[k])).collect();
        let rhs = SpectralField { grid: self.grid.clone(), values: rhs, representation: Representation::Space };
        let u = rhs
            .to_frequency()
            .apply_multiplier(|xi| -T::one() / full_symbol_sq(self.s, xi[0] * xi[0] + xi[1] * xi[1]))?
            .to_space();
        Ok(StatePair { u, v: sp.u })
    }

    /// `2 Σ a |v|²` over nodes: the energy loss rate.
    pub fn dissipation(&self, state: &StatePair<T>) -> T {
        let v = state.v.to_space();
        T::lit(2.0) * v.values.iter().zip(&self.a).fold(T::zero(), |acc, (z, a)| acc + *a * z.norm_sqr())
    }

    /// Returns `(Re⟨(K−iλ)z, z⟩, ‖√a f₂‖²)`; the two agree up to sign.
    pub fn skew_identity(&self, state: &StatePair<T>, lambda: T) -> Result<(T, T)> {
        let z = self.to_weighted(state)?;
        let kz = self.apply_weighted(&z);
        let il = Complex::new(T::zero(), lambda);
        let re = kz.iter().zip(&z).fold(T::zero(), |acc, (k, x)| acc + ((*k - il * *x) * x.conj()).re);
        Ok((re, self.dissipation(state) / T::lit(2.0)))
    }

    fn check_dense(&self, cap: usize) -> Result<()> {
        let order = self.order_of_system();
        if order > cap {
            Err(Error::DenseCap { order, cap })
        } else {
            Ok(())
        }
    }

    /// Dense `D_a` in the unitary frequency basis.
    pub fn damping_matrix(&self) -> DMatrix<Complex<T>> {
        let m = self.grid.len();
        let mut d = DMatrix::zeros(m, m);
        let mut e = vec![czero(); m];
        for j in 0..m {
            e[j] = Complex::new(T::one(), T::zero());
            let col = self.damping_in_frequency(&e);
            for i in 0..m {
                d[(i, j)] = col[i];
            }
            e[j] = czero();
        }
        d
    }

    /// Dense `K = W A W⁻¹` in weighted frequency coordinates.
    pub fn dense_weighted(&self, cap: usize) -> Result<DMatrix<Complex<T>>> {
        self.check_dense(cap)?;
        let m = self.grid.len();
        let mut k = DMatrix::zeros(2 * m, 2 * m);
        let da = self.damping_matrix();
        for i in 0..m {
            k[(i, m + i)] = Complex::new(self.omega[i], T::zero());
            k[(m + i, i)] = Complex::new(-self.omega[i], T::zero());
        }
        k.view_mut((m, m), (m, m)).copy_from(&(-da));
        Ok(k)
    }

    /// Dense `A` acting on `(û, v̂)` in frequency coordinates, without weights.
    pub fn dense_frequency(&self, cap: usize) -> Result<DMatrix<Complex<T>>> {
        self.check_dense(cap)?;
        let m = self.grid.len();
        let mut a = DMatrix::zeros(2 * m, 2 * m);
        let da = self.damping_matrix();
        for i in 0..m {
            a[(i, m + i)] = Complex::new(T::one(), T::zero());
            a[(m + i, i)] = Complex::new(-self.omega[i] * self.omega[i], T::zero());
        }
        a.view_mut((m, m), (m, m)).copy_from(&(-da));
        Ok(a)
    }
}

/// The block diagonalizer of the undamped generator at spectral parameter `λ`.
#[derive(Clone, Debug)]
pub struct Diagonalizer<T: Real> {
    pub p: DMatrix<Complex<T>>,
    pub p_inv: DMatrix<Complex<T>>,
    /// Expected diagonal of `P (A₀ − iλ) P⁻¹`.
    pub diagonal: Vec<Complex<T>>,
}

/// `P = 2^{-1/2} [[Λ, −iσ], [Λ, iσ]]`, `σ = sgn λ` with `sgn 0 = 1`, in frequency coordinates.
pub fn diagonalizer<T: Real>(grid: &TorusGrid<T>, s: T, lambda: T, cap: usize) -> Result<Diagonalizer<T>> {
    let m = grid.len();
    if 2 * m > cap {
        return Err(Error::DenseCap { order: 2 * m, cap });
    }
    let sg = if lambda < T::zero() { -T::one() } else { T::one() };
    let r = T::one() / T::lit(2.0).sqrt();
    let mut p = DMatrix::zeros(2 * m, 2 * m);
    let mut p_inv = DMatrix::zeros(2 * m, 2 * m);
    let mut diagonal = vec![czero(); 2 * m];
    for k in 0..m {
        let w = half_symbol_sq(s, grid.xi_sq(k));
        p[(k, k)] = Complex::new(r * w, T::zero());
        p[(k, m + k)] = Complex::new(T::zero(), -r * sg);
        p[(m + k, k)] = Complex::new(r * w, T::zero());
        p[(m + k, m + k)] = Complex::new(T::zero(), r * sg);
        p_inv[(k, k)] = Complex::new(r / w, T::zero());
        p_inv[(k, m + k)] = Complex::new(r / w, T::zero());
        p_inv[(m + k, k)] = Complex::new(T::zero(), r * sg);
        p_inv[(m + k, m + k)] = Complex::new(T::zero(), -r * sg);
        diagonal[k] = Complex::new(T::zero(), sg * (w - lambda.abs()));
        diagonal[m + k] = Complex::new(T::zero(), -sg * (w + lambda.abs()));
    }
    Ok(Diagonalizer { p, p_inv, diagonal })
}

/// Time integrator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method<T> {
    DenseExpm,
    StrangSplit { dt: T },
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory<T: Real> {
    pub times: Vec<T>,
    pub energies: Vec<T>,
    #[serde(skip)]
    pub states: Option<Vec<StatePair<T>>>,
    pub method: Method<T>,
    /// Largest step actually taken by the splitting.
    pub max_step: Option<T>,
    pub smooth: bool,
}

fn mat_vec<T: Real>(m: &DMatrix<Complex<T>>, x: &[Complex<T>]) -> Vec<Complex<T>> {
    let n = m.nrows();
    let mut y = vec![czero(); n];
    for (j, xj) in x.iter().enumerate() {
        if *xj == czero() {
            continue;
        }
        let col = m.column(j);
        for i in 0..n {
            y[i] += col[i] * *xj;
        }
    }
    y
}

/// Evolves `state0` from `t = 0` and records the energy at each of `times`.
pub fn evolve<T: Real>(
    gen: &Generator<T>,
    state0: &StatePair<T>,
    times: &[T],
    method: Method<T>,
    keep_states: bool,
    dense_cap: usize,
) -> Result<Trajectory<T>> {
    if times.is_empty() {
        return Err(invalid("times", "at least one sample time is required"));
    }
    if times[0] < T::zero() || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("times", "sample times must be nonnegative and strictly increasing"));
    }
    let mut z = gen.to_weighted(state0)?;
    let mut energies = Vec::with_capacity(times.len());
    let mut states = keep_states.then(Vec::new);
    let mut max_step = None;
    let mut stepper: Box<dyn FnMut(&mut Vec<Complex<T>>, T) -> Option<T>> = match method {
        Method::DenseExpm => {
            let k = gen.dense_weighted(dense_cap)?;
            let mut cache: HashMap<u64, DMatrix<Complex<T>>> = HashMap::new();
            Box::new(move |z: &mut Vec<Complex<T>>, dt: T| {
                let key = dt.to_f64_lossy().to_bits();
                let e = cache.entry(key).or_insert_with(|| (&k * Complex::new(dt, T::zero())).exp());
                *z = mat_vec(e, z);
                None
            })
        }
        Method::StrangSplit { dt } => {
            if !(dt > T::zero()) {
                return Err(invalid("dt", "step must be positive"));
            }
            Box::new(move |z: &mut Vec<Complex<T>>, span: T| {
                let steps = (span / dt).ceil().to_f64_lossy().max(1.0) as usize;
                let h = span / T::count(steps);
                strang(gen, z, h, steps);
                Some(h)
            })
        }
    };
    let mut t = T::zero();
    for (i, &ti) in times.iter().enumerate() {
        let span = ti - t;
        if span > T::zero() {
            if let Some(h) = stepper(&mut z, span) {
                max_step = Some(match max_step {
                    Some(m) if m > h => m,
                    _ => h,
                });
            }
        }
        t = ti;
        let e = norm_sq(&z);
        if !e.is_finite_value() {
            return Err(Error::NonFinite { time: ti.to_f64_lossy(), step: i });
        }
        energies.push(e);
        if let Some(st) = states.as_mut() {
            st.push(gen.from_weighted(&z));
        }
    }
    Ok(Trajectory { times: times.to_vec(), energies, states, method, max_step, smooth: false })
}

/// `steps` Strang steps of size `h`: exact free rotation for `h/2`, exact
/// pointwise damping for `h`, rotation for `h/2`. Adjacent half rotations are merged.
fn strang<T: Real>(gen: &Generator<T>, z: &mut [Complex<T>], h: T, steps: usize) {
    let m = gen.grid.len();
    let rot = |z: &mut [Complex<T>], tau: T| {
        for k in 0..m {
            let (sn, cs) = (gen.omega[k] * tau).sin_cos();
            let z1 = z[k];
            let z2 = z[m + k];
            z[k] = z1.scale(cs) + z2.scale(sn);
            z[m + k] = z2.scale(cs) - z1.scale(sn);
        }
    };
    let decay: Vec<T> = gen.a.iter().map(|a| (-*a * h).exp()).collect();
    let half = h / T::lit(2.0);
    rot(z, half);
    for step in 0..steps {
        let v = &mut z[m..];
        gen.fourier.inverse(v);
        for (x, f) in v.iter_mut().zip(&decay) {
            *x = x.scale(*f);
        }
        gen.fourier.forward(v);
        rot(z, if step + 1 == steps { half } else { h });
    }
}

/// Energy samples on `n` uniform times in `[0, T]`; `smooth` first applies `A⁻¹`.
pub fn decay_curve<T: Real>(
    gen: &Generator<T>,
    state0: &StatePair<T>,
    horizon: T,
    n: usize,
    smooth: bool,
    method: Method<T>,
    dense_cap: usize,
) -> Result<Trajectory<T>> {
    if !(horizon > T::zero()) {
        return Err(invalid("T", "horizon must be positive"));
    }
    if n < 2 {
        return Err(invalid("n", "at least two samples are required"));
    }
    let times: Vec<T> = (0..n).map(|i| horizon * T::count(i) / T::count(n - 1)).collect();
    let start = if smooth { gen.invert(state0)? } else { state0.clone() };
    let mut traj = evolve(gen, &start, &times, method, false, dense_cap)?;
    traj.smooth = smooth;
    Ok(traj)
}

/// `e^{-bt} cosh(κt)` and `e^{-bt} sinh(κt)/κ` with `κ² = b² − σ`, real for every sign of `κ²`.
pub(crate) fn damped_pair<T: Real>(b: T, sigma: T, t: T) -> (T, T) {
    let z = (b * b - sigma) * t * t;
    let e = (-b * t).exp();
    if z.abs() < T::lit(1e-3) {
        let c = T::one() + z / T::lit(2.0) + z * z / T::lit(24.0) + z * z * z / T::lit(720.0)
            + z * z * z * z / T::lit(40320.0);
        let s = T::one() + z / T::lit(6.0) + z * z / T::lit(120.0) + z * z * z / T::lit(5040.0)
            + z * z * z * z / T::lit(362880.0);
        (e * c, e * t * s)
    } else if z > T::zero() {
        let r = z.sqrt();
        let plus = (r - b * t).exp();
        let minus = (-r - b * t).exp();
        let half = T::lit(0.5);
        (half * (plus + minus), half * t * (plus - minus) / r)
    } else {
        let r = (-z).sqrt();
        (e * r.cos(), e * t * r.sin() / r)
    }
}

/// Exact solution of `û'' + a₀ û' + σ û = 0` for one mode.
pub fn mode_solution<T: Real>(a0: T, sigma: T, u0: Complex<T>, v0: Complex<T>, t: T) -> (Complex<T>, Complex<T>) {
    let b = a0 / T::lit(2.0);
    let (c, ts) = damped_pair(b, sigma, t);
    let u = u0.scale(c) + (v0 + u0.scale(b)).scale(ts);
    let v = v0.scale(c) - (u0.scale(sigma) + v0.scale(b)).scale(ts);
    (u, v)
}

/// Solution at time `t` for constant damping `a₀`, mode by mode.
pub fn constant_damping_closed_form<T: Real>(a0: T, s: T, state0: &StatePair<T>, t: T) -> Result<StatePair<T>> {
    if a0 < T::zero() {
        return Err(invalid("a0", "damping must be nonnegative"));
    }
    if t < T::zero() {
        return Err(invalid("t", "time must be nonnegative"));
    }
    if !(s > T::zero()) {
        return Err(invalid("s", "fractional order must be positive"));
    }
    let f = state0.to_frequency();
    let grid = state0.grid().clone();
    let mut u = f.u.clone();
    let mut v = f.v.clone();
    for k in 0..grid.len() {
        let sigma = full_symbol_sq(s, grid.xi_sq(k));
        let (uk, vk) = mode_solution(a0, sigma, f.u.values[k], f.v.values[k], t);
        u.values[k] = uk;
        v.values[k] = vk;
    }
    let out = StatePair { u, v };
    Ok(match state0.u.representation {
        Representation::Space => out.to_space(),
        Representation::Frequency => out,
    })
}
