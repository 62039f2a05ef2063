//! Periodic grids, unitary Fourier transforms, the fractional symbols and
//! the resonant frequency sets.

use std::sync::Arc;

use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::scalar::{czero, norm_sq, Complex, Real};

/// A point in the box. Unused coordinates are zero when `d = 1`.
pub type Point<T> = [T; 2];

/// Uniform grid on the torus `[-L/2, L/2)^d`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TorusGrid<T> {
    d: usize,
    length: T,
    n: usize,
}

impl<T: Real> TorusGrid<T> {
    pub fn new(d: usize, length: T, n: usize) -> Result<Self> {
        if d != 1 && d != 2 {
            return Err(invalid("d", format!("dimension must be 1 or 2, got {d}")));
        }
        if !(length > T::zero()) || !length.is_finite_value() {
            return Err(invalid("L", format!("box length must be positive, got {length}")));
        }
        if n < 4 || !n.is_power_of_two() {
            return Err(invalid("N", format!("points per axis must be a power of two >= 4, got {n}")));
        }
        Ok(Self { d, length, n })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn length(&self) -> T {
        self.length
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    /// Total node count `N^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> T {
        self.length / T::count(self.n)
    }

    /// Volume of one grid cell, `h^d`.
    pub fn cell_volume(&self) -> T {
        let h = self.spacing();
        if self.d == 1 {
            h
        } else {
            h * h
        }
    }

    /// Axis indices of a linear index (row-major, axis 0 slowest).
    pub fn axes(&self, k: usize) -> [usize; 2] {
        if self.d == 1 {
            [k, 0]
        } else {
            [k / self.n, k % self.n]
        }
    }

    pub fn linear(&self, axes: [usize; 2]) -> usize {
        if self.d == 1 {
            axes[0]
        } else {
            axes[0] * self.n + axes[1]
        }
    }

    pub fn node(&self, k: usize) -> Point<T> {
        let h = self.spacing();
        let half = self.length / T::lit(2.0);
        let a = self.axes(k);
        let mut x = [T::zero(); 2];
        for i in 0..self.d {
            x[i] = -half + h * T::count(a[i]);
        }
        x
    }

    pub fn nodes(&self) -> Vec<Point<T>> {
        (0..self.len()).map(|k| self.node(k)).collect()
    }

    /// Signed wavenumber of an axis index in FFT order; the Nyquist index maps to `-N/2`.
    pub fn wavenumber(&self, j: usize) -> i64 {
        let n = self.n as i64;
        let j = j as i64;
        if j < n / 2 {
            j
        } else {
            j - n
        }
    }

    pub fn wavenumbers(&self, k: usize) -> [i64; 2] {
        let a = self.axes(k);
        let mut w = [0i64; 2];
        for i in 0..self.d {
            w[i] = self.wavenumber(a[i]);
        }
        w
    }

    /// Linear index of the mode with the given signed wavenumbers (taken modulo `N`).
    pub fn mode_index(&self, w: [i64; 2]) -> usize {
        let n = self.n as i64;
        let mut a = [0usize; 2];
        for i in 0..self.d {
            a[i] = w[i].rem_euclid(n) as usize;
        }
        self.linear(a)
    }

    /// Frequency spacing `2π/L`.
    pub fn frequency_step(&self) -> T {
        T::two_pi() / self.length
    }

    pub fn frequency(&self, k: usize) -> Point<T> {
        let w = self.wavenumbers(k);
        let step = self.frequency_step();
        let mut xi = [T::zero(); 2];
        for i in 0..self.d {
            xi[i] = step * T::lit(w[i] as f64);
        }
        xi
    }

    pub fn xi_sq(&self, k: usize) -> T {
        let xi = self.frequency(k);
        xi[0] * xi[0] + xi[1] * xi[1]
    }

    /// Largest `|ξ|` reached along a coordinate axis.
    pub fn nyquist_radius(&self) -> T {
        self.frequency_step() * T::count(self.n / 2)
    }

    /// Wraps a point into the fundamental box.
    pub fn wrap(&self, x: Point<T>) -> Point<T> {
        wrap_point(x, self.length, self.d)
    }

    pub fn in_box(&self, x: &Point<T>) -> bool {
        let half = self.length / T::lit(2.0);
        (0..self.d).all(|i| x[i] >= -half && x[i] < half)
    }

    /// Index of the node nearest to `x` on the torus.
    pub fn nearest_node(&self, x: &Point<T>) -> usize {
        let h = self.spacing();
        let half = self.length / T::lit(2.0);
        let n = self.n as i64;
        let mut a = [0usize; 2];
        for i in 0..self.d {
            let t = ((x[i] + half) / h).round().to_f64_lossy() as i64;
            a[i] = t.rem_euclid(n) as usize;
        }
        self.linear(a)
    }

    pub fn fourier(&self) -> Fourier<T> {
        Fourier::new(self.d, self.n)
    }

    pub fn same_as(&self, other: &Self) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "(d={}, L={}, N={}) vs (d={}, L={}, N={})",
                self.d, self.length, self.n, other.d, other.length, other.n
            )))
        }
    }
}

pub(crate) fn wrap_point<T: Real>(x: Point<T>, period: T, d: usize) -> Point<T> {
    let mut y = x;
    let half = period / T::lit(2.0);
    for yi in y.iter_mut().take(d) {
        let shifted = *yi + half;
        let m = (shifted / period).floor();
        *yi = shifted - m * period - half;
        if *yi >= half {
            *yi -= period;
        }
        if *yi < -half {
            *yi = -half;
        }
    }
    y
}

/// Unitary FFT plans for one grid shape. Scratch space is allocated per call.
#[derive(Clone)]
pub struct Fourier<T: Real> {
    d: usize,
    n: usize,
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
    scale: T,
}

impl<T: Real> std::fmt::Debug for Fourier<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fourier").field("d", &self.d).field("n", &self.n).finish()
    }
}

impl<T: Real> Fourier<T> {
    pub fn new(d: usize, n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let total = n.pow(d as u32);
        Self {
            d,
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
            scale: T::one() / T::count(total).sqrt(),
        }
    }

    pub fn forward(&self, buf: &mut [Complex<T>]) {
        self.run(buf, &self.fwd);
    }

    pub fn inverse(&self, buf: &mut [Complex<T>]) {
        self.run(buf, &self.inv);
    }

    fn run(&self, buf: &mut [Complex<T>], plan: &Arc<dyn Fft<T>>) {
        assert_eq!(buf.len(), self.n.pow(self.d as u32), "buffer length does not match the grid");
        plan.process(buf);
        if self.d == 2 {
            transpose_square(buf, self.n);
            plan.process(buf);
            transpose_square(buf, self.n);
        }
        for z in buf.iter_mut() {
            *z = z.scale(self.scale);
        }
    }
}

fn transpose_square<X>(buf: &mut [X], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            buf.swap(i * n + j, j * n + i);
        }
    }
}

/// Which side of the transform a field lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    Space,
    Frequency,
}

impl Representation {
    fn name(self) -> &'static str {
        match self {
            Representation::Space => "space",
            Representation::Frequency => "frequency",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Complex samples over grid nodes or grid frequencies.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField<T: Real> {
    pub grid: TorusGrid<T>,
    pub values: Vec<Complex<T>>,
    pub representation: Representation,
}

impl<T: Real> SpectralField<T> {
    pub fn new(grid: TorusGrid<T>, values: Vec<Complex<T>>, representation: Representation) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid with {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values, representation })
    }

    pub fn zeros(grid: &TorusGrid<T>, representation: Representation) -> Self {
        Self { values: vec![czero(); grid.len()], grid: grid.clone(), representation }
    }

    pub fn from_fn(grid: &TorusGrid<T>, f: impl Fn(&Point<T>) -> Complex<T>) -> Self {
        let values = (0..grid.len()).map(|k| f(&grid.node(k))).collect();
        Self { grid: grid.clone(), values, representation: Representation::Space }
    }

    /// Unit-norm field carrying a single Fourier mode, in frequency representation.
    pub fn single_mode(grid: &TorusGrid<T>, w: [i64; 2]) -> Self {
        let mut f = Self::zeros(grid, Representation::Frequency);
        f.values[grid.mode_index(w)] = Complex::new(T::one(), T::zero());
        f
    }

    pub fn transform(&self, direction: Direction) -> Result<Self> {
        let (expected, target) = match direction {
            Direction::Forward => (Representation::Space, Representation::Frequency),
            Direction::Inverse => (Representation::Frequency, Representation::Space),
        };
        self.expect(expected)?;
        let mut values = self.values.clone();
        let plan = self.grid.fourier();
        match direction {
            Direction::Forward => plan.forward(&mut values),
            Direction::Inverse => plan.inverse(&mut values),
        }
        Ok(Self { grid: self.grid.clone(), values, representation: target })
    }

    pub fn to_frequency(&self) -> Self {
        match self.representation {
            Representation::Frequency => self.clone(),
            Representation::Space => self.transform(Direction::Forward).expect("representation checked"),
        }
    }

    pub fn to_space(&self) -> Self {
        match self.representation {
            Representation::Space => self.clone(),
            Representation::Frequency => self.transform(Direction::Inverse).expect("representation checked"),
        }
    }

    /// Multiplies each frequency coefficient by `m(ξ)`.
    pub fn apply_multiplier(&self, m: impl Fn(&Point<T>) -> T) -> Result<Self> {
        self.expect(Representation::Frequency)?;
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(k, z)| z.scale(m(&self.grid.frequency(k))))
            .collect();
        Ok(Self { grid: self.grid.clone(), values, representation: self.representation })
    }

    /// Multiplies by `e^{i x·ξ₀}` for the grid frequency with wavenumbers `w`.
    /// In frequency representation this is a cyclic shift of the coefficients.
    pub fn modulate(&self, w: [i64; 2]) -> Self {
        let spectrum = self.to_frequency();
        let mut values = vec![czero(); spectrum.values.len()];
        for (k, z) in spectrum.values.iter().enumerate() {
            let src = self.grid.wavenumbers(k);
            let dst = self.grid.mode_index([src[0] + w[0], src[1] + w[1]]);
            values[dst] = *z;
        }
        let out = Self { grid: self.grid.clone(), values, representation: Representation::Frequency };
        match self.representation {
            Representation::Space => out.to_space(),
            Representation::Frequency => out,
        }
    }

    pub fn norm(&self) -> T {
        norm_sq(&self.values).sqrt()
    }

    fn expect(&self, r: Representation) -> Result<()> {
        if self.representation == r {
            Ok(())
        } else {
            Err(Error::Representation { expected: r.name(), found: self.representation.name() })
        }
    }
}

fn check_order<T: Real>(s: T) -> Result<()> {
    if s > T::zero() && s.is_finite_value() {
        Ok(())
    } else {
        Err(invalid("s", format!("fractional order must be positive, got {s}")))
    }
}

/// `(|ξ|²+1)^{s/4}`.
pub fn half_symbol<T: Real>(s: T, xi: &[T]) -> Result<T> {
    check_order(s)?;
    Ok(half_symbol_sq(s, xi.iter().fold(T::zero(), |a, x| a + *x * *x)))
}

/// `(|ξ|²+1)^{s/2}`.
pub fn full_symbol<T: Real>(s: T, xi: &[T]) -> Result<T> {
    check_order(s)?;
    Ok(full_symbol_sq(s, xi.iter().fold(T::zero(), |a, x| a + *x * *x)))
}

pub(crate) fn half_symbol_sq<T: Real>(s: T, xi_sq: T) -> T {
    (xi_sq + T::one()).powf(s / T::lit(4.0))
}

pub(crate) fn full_symbol_sq<T: Real>(s: T, xi_sq: T) -> T {
    (xi_sq + T::one()).powf(s / T::lit(2.0))
}

/// Geometry of `{ξ : |(|ξ|²+1)^{s/4} − λ| < μ}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnnulusShape<T> {
    Empty,
    Ball { r_outer: T },
    Annulus { r_inner: T, r_outer: T },
}

impl<T: Real> AnnulusShape<T> {
    pub fn outer(&self) -> Option<T> {
        match *self {
            AnnulusShape::Empty => None,
            AnnulusShape::Ball { r_outer } | AnnulusShape::Annulus { r_outer, .. } => Some(r_outer),
        }
    }

    /// Radial thickness; a ball counts its full radius.
    pub fn width(&self) -> T {
        match *self {
            AnnulusShape::Empty => T::zero(),
            AnnulusShape::Ball { r_outer } => r_outer,
            AnnulusShape::Annulus { r_inner, r_outer } => r_outer - r_inner,
        }
    }

    pub fn contains_radius(&self, r: T) -> bool {
        match *self {
            AnnulusShape::Empty => false,
            AnnulusShape::Ball { r_outer } => r < r_outer,
            AnnulusShape::Annulus { r_inner, r_outer } => r > r_inner && r < r_outer,
        }
    }

    /// Lebesgue measure in `ℝ^d`.
    pub fn measure(&self, d: usize) -> T {
        let unit = unit_ball_volume::<T>(d);
        let pow = |r: T| if d == 1 { r } else { r * r };
        match *self {
            AnnulusShape::Empty => T::zero(),
            AnnulusShape::Ball { r_outer } => unit * pow(r_outer),
            AnnulusShape::Annulus { r_inner, r_outer } => unit * (pow(r_outer) - pow(r_inner)),
        }
    }
}

pub fn unit_ball_volume<T: Real>(d: usize) -> T {
    if d == 1 {
        T::lit(2.0)
    } else {
        T::pi()
    }
}

/// Radius at which the half symbol equals `level ≥ 1`.
fn symbol_radius<T: Real>(level: T, s: T) -> T {
    let r2 = level.powf(T::lit(4.0) / s) - T::one();
    if r2 > T::zero() {
        r2.sqrt()
    } else {
        T::zero()
    }
}

/// Analytic shape of the resonant set; `λ` enters through `|λ|`.
pub fn annulus_shape<T: Real>(lambda: T, s: T, mu: T) -> Result<AnnulusShape<T>> {
    check_order(s)?;
    if !(mu > T::zero()) {
        return Err(invalid("mu", format!("half-width must be positive, got {mu}")));
    }
    let lambda = lambda.abs();
    let one = T::one();
    Ok(if lambda + mu <= one {
        AnnulusShape::Empty
    } else if lambda - mu < one {
        AnnulusShape::Ball { r_outer: symbol_radius(lambda + mu, s) }
    } else {
        AnnulusShape::Annulus { r_inner: symbol_radius(lambda - mu, s), r_outer: symbol_radius(lambda + mu, s) }
    })
}

/// The resonant frequency set restricted to the grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnnulusSet<T> {
    pub lambda: T,
    pub s: T,
    pub mu: T,
    pub shape: AnnulusShape<T>,
    #[serde(skip)]
    pub mask: Vec<bool>,
    /// The analytic outer radius lies beyond the Nyquist shell.
    pub clipped: bool,
    /// Grid frequencies where the membership test and the radius test disagree
    /// by more than rounding.
    pub shape_mismatches: usize,
}

impl<T: Real> AnnulusSet<T> {
    pub fn count(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    /// Builds a set from an explicit mask, as used for arbitrary frequency sets.
    pub fn from_mask(mask: Vec<bool>) -> Self {
        Self {
            lambda: T::zero(),
            s: T::one(),
            mu: T::one(),
            shape: AnnulusShape::Empty,
            mask,
            clipped: false,
            shape_mismatches: 0,
        }
    }
}

pub fn annulus<T: Real>(lambda: T, s: T, mu: T, grid: &TorusGrid<T>) -> Result<AnnulusSet<T>> {
    let shape = annulus_shape(lambda, s, mu)?;
    let lambda = lambda.abs();
    let mut mismatches = 0;
    let tol = T::lit(1e-9);
    let mask: Vec<bool> = (0..grid.len())
        .map(|k| {
            let xi_sq = grid.xi_sq(k);
            let inside = (half_symbol_sq(s, xi_sq) - lambda).abs() < mu;
            let r = xi_sq.sqrt();
            if inside != shape.contains_radius(r) {
                let near_edge = match shape {
                    AnnulusShape::Empty => false,
                    AnnulusShape::Ball { r_outer } => (r - r_outer).abs() <= tol * (T::one() + r_outer),
                    AnnulusShape::Annulus { r_inner, r_outer } => {
                        (r - r_outer).abs() <= tol * (T::one() + r_outer)
                            || (r - r_inner).abs() <= tol * (T::one() + r_inner)
                    }
                };
                if !near_edge {
                    mismatches += 1;
                }
            }
            inside
        })
        .collect();
    let clipped = shape.outer().is_some_and(|r| r > grid.nyquist_radius());
    Ok(AnnulusSet { lambda, s, mu, shape, mask, clipped, shape_mismatches: mismatches })
}

/// A ball placed inside a resonant annulus.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BallInAnnulus<T> {
    pub lambda: T,
    pub center: Point<T>,
    pub radius: T,
    pub shape: AnnulusShape<T>,
}

/// For `0 < s < 2`, finds `λ` and `a = c·e₁` with `B(a, r) ⊂ Σ(λ, s, μ)`.
///
/// Doubles `λ` from `1 + μ` until the annulus is thicker than `2r`, then
/// centres the ball on the mid radius.
pub fn ball_in_annulus<T: Real>(s: T, mu: T, r: T) -> Result<BallInAnnulus<T>> {
    check_order(s)?;
    if s >= T::lit(2.0) {
        return Err(invalid("s", "annulus thickness is bounded in lambda for s >= 2"));
    }
    if !(r > T::zero()) {
        return Err(invalid("r", "radius must be positive"));
    }
    let mut lambda = T::one() + mu;
    for _ in 0..400 {
        let shape = annulus_shape(lambda, s, mu)?;
        if let AnnulusShape::Annulus { r_inner, r_outer } = shape {
            if r_outer - r_inner > T::lit(2.0) * r * (T::one() + T::lit(1e-6)) {
                let c = (r_inner + r_outer) / T::lit(2.0);
                return Ok(BallInAnnulus { lambda, center: [c, T::zero()], radius: r, shape });
            }
        }
        lambda *= T::lit(2.0);
        if !lambda.is_finite_value() {
            break;
        }
    }
    Err(invalid("r", "no annulus thick enough within floating point range"))
}
