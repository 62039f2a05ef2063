//! Damping coefficients `a(x) ≥ 0` and their sublevel sets.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;
use crate::spectral::{wrap_point, Point, TorusGrid};

/// Closed shape used by the indicator and pattern variants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape<T> {
    Ball { center: Point<T>, radius: T },
    Box { center: Point<T>, half_widths: Point<T> },
}

impl<T: Real> Shape<T> {
    /// Membership with minimal-image displacement on a torus of side `period`.
    pub fn contains_periodic(&self, x: &Point<T>, period: T, d: usize) -> bool {
        let center = match self {
            Shape::Ball { center, .. } | Shape::Box { center, .. } => center,
        };
        let mut disp = [T::zero(); 2];
        for i in 0..d {
            disp[i] = x[i] - center[i];
        }
        let disp = wrap_point(disp, period, d);
        match self {
            Shape::Ball { radius, .. } => {
                let r2 = (0..d).fold(T::zero(), |a, i| a + disp[i] * disp[i]);
                r2 <= *radius * *radius
            }
            Shape::Box { half_widths, .. } => (0..d).all(|i| disp[i].abs() <= half_widths[i]),
        }
    }

    fn validate(&self, d: usize) -> Result<()> {
        let ok = match self {
            Shape::Ball { radius, .. } => *radius > T::zero(),
            Shape::Box { half_widths, .. } => (0..d).all(|i| half_widths[i] > T::zero()),
        };
        if ok {
            Ok(())
        } else {
            Err(invalid("shapes", "shape extents must be positive"))
        }
    }
}

/// Which part of a periodic cell carries the damping.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternSide {
    Inside,
    Outside,
}

/// Smooth dip `1 − φ(|x−c|/r)` with `φ(ρ) = exp(1 − 1/(1−ρ²))` on `ρ < 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dip<T> {
    pub center: Point<T>,
    pub radius: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum DampingKind<T> {
    Constant { a0: T },
    /// `a = level` outside the union of shapes, `0` inside.
    IndicatorComplement { shapes: Vec<Shape<T>>, level: T },
    /// Shapes given in cell coordinates `[-ℓ/2, ℓ/2)^d`, repeated with period `ℓ`.
    PeriodicPattern { cell: T, shapes: Vec<Shape<T>>, level: T, damped: PatternSide },
    SmoothBump { base: T, dips: Vec<Dip<T>> },
    GridSampled { n: usize, values: Vec<T> },
}

/// A damping coefficient on the box `[-L/2, L/2)^d`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DampingSpec<T> {
    d: usize,
    length: T,
    kind: DampingKind<T>,
    bound: T,
}

/// Structural facts a spec can certify about its sublevel sets.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct StructuralHints {
    pub finite_measure_sublevel: Option<bool>,
    pub periodic_superset: Option<bool>,
    pub uniformly_continuous: Option<bool>,
    pub continuous: Option<bool>,
}

fn nonneg<T: Real>(name: &'static str, v: T) -> Result<()> {
    if v >= T::zero() && v.is_finite_value() {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite and nonnegative, got {v}")))
    }
}

impl<T: Real> DampingSpec<T> {
    pub fn new(d: usize, length: T, kind: DampingKind<T>) -> Result<Self> {
        if d != 1 && d != 2 {
            return Err(invalid("d", format!("dimension must be 1 or 2, got {d}")));
        }
        if !(length > T::zero()) {
            return Err(invalid("L", "box length must be positive"));
        }
        let bound = match &kind {
            DampingKind::Constant { a0 } => {
                nonneg("a0", *a0)?;
                *a0
            }
            DampingKind::IndicatorComplement { shapes, level } => {
                nonneg("level", *level)?;
                for sh in shapes {
                    sh.validate(d)?;
                }
                *level
            }
            DampingKind::PeriodicPattern { cell, shapes, level, .. } => {
                nonneg("level", *level)?;
                if !(*cell > T::zero()) {
                    return Err(invalid("cell", "cell length must be positive"));
                }
                let ratio = (length / *cell).to_f64_lossy();
                if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) || ratio.round() < 1.0 {
                    return Err(invalid("cell", format!("box length {length} is not a multiple of the cell {cell}")));
                }
                for sh in shapes {
                    sh.validate(d)?;
                }
                *level
            }
            DampingKind::SmoothBump { base, dips } => {
                nonneg("base", *base)?;
                if dips.iter().any(|dip| !(dip.radius > T::zero())) {
                    return Err(invalid("dips", "dip radii must be positive"));
                }
                *base
            }
            DampingKind::GridSampled { n, values } => {
                if *n < 4 || !n.is_power_of_two() || values.len() != n.pow(d as u32) {
                    return Err(invalid("values", "grid samples must match an N^d power-of-two grid"));
                }
                let mut max = T::zero();
                for v in values {
                    nonneg("values", *v)?;
                    if *v > max {
                        max = *v;
                    }
                }
                max
            }
        };
        Ok(Self { d, length, kind, bound })
    }

    pub fn constant(d: usize, length: T, a0: T) -> Result<Self> {
        Self::new(d, length, DampingKind::Constant { a0 })
    }

    /// `a = level` outside `[-half_gap, half_gap]`, in one dimension.
    pub fn interval_gap(length: T, half_gap: T, level: T) -> Result<Self> {
        Self::new(
            1,
            length,
            DampingKind::IndicatorComplement {
                shapes: vec![Shape::Box { center: [T::zero(); 2], half_widths: [half_gap, T::zero()] }],
                level,
            },
        )
    }

    /// `a = level` on balls of the given radius centred on a square lattice; zero between them.
    pub fn lattice_of_balls(length: T, spacing: T, radius: T, level: T) -> Result<Self> {
        Self::new(
            2,
            length,
            DampingKind::PeriodicPattern {
                cell: spacing,
                shapes: vec![Shape::Ball { center: [T::zero(); 2], radius }],
                level,
                damped: PatternSide::Inside,
            },
        )
    }

    /// `a = level` on a square grid of strips of the given half thickness.
    pub fn grid_lines(length: T, spacing: T, half_thickness: T, level: T) -> Result<Self> {
        let half = spacing / T::lit(2.0);
        Self::new(
            2,
            length,
            DampingKind::PeriodicPattern {
                cell: spacing,
                shapes: vec![
                    Shape::Box { center: [T::zero(); 2], half_widths: [half_thickness, half] },
                    Shape::Box { center: [T::zero(); 2], half_widths: [half, half_thickness] },
                ],
                level,
                damped: PatternSide::Inside,
            },
        )
    }

    /// `a = level` outside one ball at the origin, so the sublevel set has finite measure.
    pub fn finite_measure(d: usize, length: T, radius: T, level: T) -> Result<Self> {
        Self::new(
            d,
            length,
            DampingKind::IndicatorComplement {
                shapes: vec![Shape::Ball { center: [T::zero(); 2], radius }],
                level,
            },
        )
    }

    /// Smooth coefficient equal to `base` away from one dip that touches zero at the origin.
    pub fn smooth_dip(d: usize, length: T, radius: T, base: T) -> Result<Self> {
        Self::new(
            d,
            length,
            DampingKind::SmoothBump { base, dips: vec![Dip { center: [T::zero(); 2], radius }] },
        )
    }

    pub fn from_samples(grid: &TorusGrid<T>, values: Vec<T>) -> Result<Self> {
        Self::new(
            grid.dim(),
            grid.length(),
            DampingKind::GridSampled { n: grid.points_per_axis(), values },
        )
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn length(&self) -> T {
        self.length
    }

    pub fn kind(&self) -> &DampingKind<T> {
        &self.kind
    }

    /// `‖a‖_∞`.
    pub fn bound(&self) -> T {
        self.bound
    }

    /// Intrinsic period of the coefficient: the cell for patterns, the box otherwise.
    pub fn period(&self) -> T {
        match &self.kind {
            DampingKind::PeriodicPattern { cell, .. } => *cell,
            _ => self.length,
        }
    }

    pub fn is_grid_sampled(&self) -> bool {
        matches!(self.kind, DampingKind::GridSampled { .. })
    }

    pub fn eval(&self, x: &Point<T>) -> Result<T> {
        let half = self.length / T::lit(2.0);
        let inside = (0..self.d).all(|i| x[i] >= -half && x[i] < half);
        if !inside && !self.is_grid_sampled() {
            return Err(Error::OutsideBox(x.iter().take(self.d).map(|v| v.to_f64_lossy()).collect()));
        }
        Ok(self.eval_wrapped(x))
    }

    /// Evaluation of the periodic extension at any point.
    pub fn eval_wrapped(&self, x: &Point<T>) -> T {
        let d = self.d;
        match &self.kind {
            DampingKind::Constant { a0 } => *a0,
            DampingKind::IndicatorComplement { shapes, level } => {
                if shapes.iter().any(|sh| sh.contains_periodic(x, self.length, d)) {
                    T::zero()
                } else {
                    *level
                }
            }
            DampingKind::PeriodicPattern { cell, shapes, level, damped } => {
                let hit = shapes.iter().any(|sh| sh.contains_periodic(x, *cell, d));
                let on = match damped {
                    PatternSide::Inside => hit,
                    PatternSide::Outside => !hit,
                };
                if on {
                    *level
                } else {
                    T::zero()
                }
            }
            DampingKind::SmoothBump { base, dips } => {
                let mut v = *base;
                for dip in dips {
                    let mut disp = [T::zero(); 2];
                    for i in 0..d {
                        disp[i] = x[i] - dip.center[i];
                    }
                    let disp = wrap_point(disp, self.length, d);
                    let rho2 = (disp[0] * disp[0] + disp[1] * disp[1]) / (dip.radius * dip.radius);
                    if rho2 < T::one() {
                        let phi = (T::one() - T::one() / (T::one() - rho2)).exp();
                        v *= T::one() - phi;
                    }
                }
                v
            }
            DampingKind::GridSampled { n, values } => {
                let grid = TorusGrid::new(d, self.length, *n).expect("validated at construction");
                values[grid.nearest_node(x)]
            }
        }
    }

    /// Values at the grid nodes.
    pub fn samples(&self, grid: &TorusGrid<T>) -> Result<Vec<T>> {
        self.check_grid(grid)?;
        Ok((0..grid.len()).map(|k| self.eval_wrapped(&grid.node(k))).collect())
    }

    pub fn check_grid(&self, grid: &TorusGrid<T>) -> Result<()> {
        let same_len = (grid.length() - self.length).abs() <= T::lit(1e-12) * self.length;
        if grid.dim() != self.d || !same_len {
            return Err(Error::GridMismatch(format!(
                "damping on d={}, L={} used with grid d={}, L={}",
                self.d,
                self.length,
                grid.dim(),
                grid.length()
            )));
        }
        Ok(())
    }

    pub fn structural_hints(&self) -> StructuralHints {
        let t = Some(true);
        let f = Some(false);
        match &self.kind {
            DampingKind::Constant { a0 } => {
                let positive = Some(*a0 > T::zero());
                StructuralHints { finite_measure_sublevel: positive, periodic_superset: positive, uniformly_continuous: t, continuous: t }
            }
            DampingKind::IndicatorComplement { level, .. } => {
                let positive = Some(*level > T::zero());
                StructuralHints { finite_measure_sublevel: positive, periodic_superset: positive, uniformly_continuous: f, continuous: f }
            }
            DampingKind::PeriodicPattern { shapes, level, .. } => StructuralHints {
                finite_measure_sublevel: f,
                periodic_superset: Some(*level > T::zero() && !shapes.is_empty()),
                uniformly_continuous: f,
                continuous: f,
            },
            DampingKind::SmoothBump { base, .. } => {
                let positive = Some(*base > T::zero());
                StructuralHints { finite_measure_sublevel: positive, periodic_superset: positive, uniformly_continuous: t, continuous: t }
            }
            DampingKind::GridSampled { .. } => StructuralHints::default(),
        }
    }
}

/// The sublevel set `S(a, ε) = {a < ε}` on grid nodes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SublevelMask<T> {
    pub grid: TorusGrid<T>,
    pub epsilon: T,
    #[serde(skip)]
    pub mask: Vec<bool>,
}

impl<T: Real> SublevelMask<T> {
    pub fn from_mask(grid: &TorusGrid<T>, epsilon: T, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != grid.len() {
            return Err(Error::GridMismatch(format!("mask of length {} on {} nodes", mask.len(), grid.len())));
        }
        Ok(Self { grid: grid.clone(), epsilon, mask })
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }

    /// Fraction of nodes in the set.
    pub fn fraction(&self) -> T {
        T::count(self.count()) / T::count(self.mask.len())
    }

    /// Node-count estimate of the Lebesgue measure.
    pub fn measure(&self) -> T {
        T::count(self.count()) * self.grid.cell_volume()
    }

    /// Indicator of the complement, as multiplier values.
    pub fn complement_indicator(&self) -> Vec<T> {
        self.mask.iter().map(|m| if *m { T::zero() } else { T::one() }).collect()
    }
}

pub fn sublevel_mask<T: Real>(spec: &DampingSpec<T>, grid: &TorusGrid<T>, epsilon: T) -> Result<SublevelMask<T>> {
    if !(epsilon > T::zero()) {
        return Err(invalid("epsilon", format!("level must be positive, got {epsilon}")));
    }
    let samples = spec.samples(grid)?;
    let mask = samples.iter().map(|a| *a < epsilon).collect();
    Ok(SublevelMask { grid: grid.clone(), epsilon, mask })
}
