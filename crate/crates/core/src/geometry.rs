//! Sampled estimators for the geometric control conditions.

use rayon::prelude::*;
use serde::Serialize;

use crate::damping::{DampingSpec, SublevelMask};
use crate::error::{invalid, Result};
use crate::scalar::Real;
use crate::spectral::{unit_ball_volume, wrap_point, Point, TorusGrid};

/// A measurable subset of the box, extended periodically.
pub trait Region<T: Real>: Sync {
    fn dim(&self) -> usize;
    /// Side of the box the region lives in.
    fn extent(&self) -> T;
    /// Side of the smallest cell over which the region repeats.
    fn period(&self) -> T {
        self.extent()
    }
    /// False for regions known only through samples, where wrapping across
    /// the box edge is an artifact rather than a symmetry.
    fn intrinsically_periodic(&self) -> bool {
        true
    }
    fn contains(&self, x: &Point<T>) -> bool;
}

/// `{x : a(x) ≥ ε}`, the complement of the sublevel set.
pub struct Controlled<'a, T> {
    pub spec: &'a DampingSpec<T>,
    pub epsilon: T,
}

impl<T: Real> Region<T> for Controlled<'_, T> {
    fn dim(&self) -> usize {
        self.spec.dim()
    }
    fn extent(&self) -> T {
        self.spec.length()
    }
    fn period(&self) -> T {
        self.spec.period()
    }
    fn intrinsically_periodic(&self) -> bool {
        !self.spec.is_grid_sampled()
    }
    fn contains(&self, x: &Point<T>) -> bool {
        self.spec.eval_wrapped(x) >= self.epsilon
    }
}

/// Region given by a closure on the fundamental cell `[-P/2, P/2)^d`.
pub struct Predicate<T, F> {
    pub d: usize,
    pub extent: T,
    pub period: T,
    pub f: F,
}

impl<T: Real, F: Fn(&Point<T>) -> bool + Sync> Region<T> for Predicate<T, F> {
    fn dim(&self) -> usize {
        self.d
    }
    fn extent(&self) -> T {
        self.extent
    }
    fn period(&self) -> T {
        self.period
    }
    fn contains(&self, x: &Point<T>) -> bool {
        (self.f)(&wrap_point(*x, self.period, self.d))
    }
}

/// Region given by node membership, looked up at the nearest node.
pub struct NodeMask<'a, T> {
    pub grid: &'a TorusGrid<T>,
    pub mask: &'a [bool],
}

impl<T: Real> Region<T> for NodeMask<'_, T> {
    fn dim(&self) -> usize {
        self.grid.dim()
    }
    fn extent(&self) -> T {
        self.grid.length()
    }
    fn intrinsically_periodic(&self) -> bool {
        false
    }
    fn contains(&self, x: &Point<T>) -> bool {
        self.mask[self.grid.nearest_node(x)]
    }
}

pub struct Complement<R>(pub R);

impl<T: Real, R: Region<T>> Region<T> for Complement<R> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn extent(&self) -> T {
        self.0.extent()
    }
    fn period(&self) -> T {
        self.0.period()
    }
    fn intrinsically_periodic(&self) -> bool {
        self.0.intrinsically_periodic()
    }
    fn contains(&self, x: &Point<T>) -> bool {
        !self.0.contains(x)
    }
}

/// Sampling densities for the infimum searches.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SamplingPlan {
    pub centers_per_axis: usize,
    pub directions: usize,
    pub offsets_per_axis: usize,
    /// Quadrature points per ball radius and axis.
    pub ball_quadrature: usize,
    /// Quadrature points along a segment.
    pub segment_quadrature: usize,
}

impl Default for SamplingPlan {
    fn default() -> Self {
        Self { centers_per_axis: 32, directions: 64, offsets_per_axis: 32, ball_quadrature: 16, segment_quadrature: 256 }
    }
}

impl SamplingPlan {
    pub fn doubled(&self) -> Self {
        Self {
            centers_per_axis: 2 * self.centers_per_axis,
            directions: 2 * self.directions,
            offsets_per_axis: 2 * self.offsets_per_axis,
            ball_quadrature: 2 * self.ball_quadrature,
            segment_quadrature: 2 * self.segment_quadrature,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GccKind {
    Zero,
    One,
    D,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Witness<T> {
    pub point: Point<T>,
    pub direction: Option<Point<T>>,
    pub measure: T,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GccReport<T> {
    pub kind: GccKind,
    /// Ball radius or segment length.
    pub parameter: Option<T>,
    pub infimum_estimate: T,
    /// Measure of the full ball or segment, the scale for the verdict tolerance.
    pub reference: T,
    pub witness: Option<Witness<T>>,
    pub sample_count: usize,
    pub verdict: Verdict,
    /// The minimizing sample crosses the box edge of a non-periodic region.
    pub witness_crosses_boundary: bool,
}

/// Relative tolerance for a "holds" verdict.
pub const VERDICT_TOLERANCE: f64 = 1e-6;

fn verdict<T: Real>(estimate: T, reference: T) -> Verdict {
    if estimate > T::lit(VERDICT_TOLERANCE) * reference {
        Verdict::Holds
    } else if estimate == T::zero() {
        Verdict::Fails
    } else {
        Verdict::Inconclusive
    }
}

fn downgrade(v: Verdict, crosses: bool) -> Verdict {
    if crosses && v == Verdict::Holds {
        Verdict::Inconclusive
    } else {
        v
    }
}

/// Full-measure condition for `{a ≥ ε}` at grid resolution.
pub fn check_zero_gcc<T: Real>(spec: &DampingSpec<T>, grid: &TorusGrid<T>, epsilon: T) -> Result<GccReport<T>> {
    if !(epsilon > T::zero()) {
        return Err(invalid("epsilon", "level must be positive"));
    }
    let samples = spec.samples(grid)?;
    let (kmin, amin) = samples
        .iter()
        .enumerate()
        .fold((0, samples[0]), |(bk, bv), (k, v)| if *v < bv { (k, *v) } else { (bk, bv) });
    let holds = amin >= epsilon;
    let witness = (!holds).then(|| Witness { point: grid.node(kmin), direction: None, measure: T::zero() });
    Ok(GccReport {
        kind: GccKind::Zero,
        parameter: None,
        infimum_estimate: amin,
        reference: epsilon,
        witness,
        sample_count: samples.len(),
        verdict: if holds { Verdict::Holds } else { Verdict::Fails },
        witness_crosses_boundary: false,
    })
}

fn cell_points<T: Real>(d: usize, period: T, per_axis: usize) -> Vec<Point<T>> {
    let half = period / T::lit(2.0);
    let step = period / T::count(per_axis);
    let coord = |i: usize| -half + step * T::count(i);
    if d == 1 {
        (0..per_axis).map(|i| [coord(i), T::zero()]).collect()
    } else {
        (0..per_axis * per_axis).map(|k| [coord(k / per_axis), coord(k % per_axis)]).collect()
    }
}

fn crosses_box<T: Real>(x: &Point<T>, d: usize, extent: T) -> bool {
    let half = extent / T::lit(2.0);
    (0..d).any(|i| x[i] < -half || x[i] >= half)
}

/// Sampled `inf_a |B(a, r) ∩ Ω|`.
pub fn check_d_gcc<T: Real, R: Region<T>>(omega: &R, r: T, plan: &SamplingPlan) -> Result<GccReport<T>> {
    let d = omega.dim();
    if !(r > T::zero()) {
        return Err(invalid("r", "radius must be positive"));
    }
    if r > omega.extent() / T::lit(2.0) {
        return Err(invalid("r", format!("radius {r} exceeds half the box {}", omega.extent())));
    }
    let q = plan.ball_quadrature.max(1);
    let step = r / T::count(q);
    let offsets: Vec<Point<T>> = {
        let coord = |i: usize| step * (T::count(i) + T::lit(0.5)) - r;
        let m = 2 * q;
        let mut v = Vec::new();
        if d == 1 {
            v.extend((0..m).map(|i| [coord(i), T::zero()]));
        } else {
            for i in 0..m {
                for j in 0..m {
                    let y = [coord(i), coord(j)];
                    if y[0] * y[0] + y[1] * y[1] <= r * r {
                        v.push(y);
                    }
                }
            }
        }
        v
    };
    let cell_volume = if d == 1 { step } else { step * step };
    let centers = cell_points(d, omega.period(), plan.centers_per_axis);
    let results: Vec<(usize, T, bool)> = centers
        .par_iter()
        .enumerate()
        .map(|(ci, c)| {
            let mut hits = 0usize;
            let mut crosses = false;
            for y in &offsets {
                let x = [c[0] + y[0], c[1] + y[1]];
                crosses |= crosses_box(&x, d, omega.extent());
                if omega.contains(&x) {
                    hits += 1;
                }
            }
            (ci, T::count(hits) * cell_volume, crosses)
        })
        .collect();
    let (ci, est, crosses) = results
        .iter()
        .copied()
        .fold(results[0], |best, cur| if cur.1 < best.1 { cur } else { best });
    let crosses = crosses && !omega.intrinsically_periodic();
    let reference = unit_ball_volume::<T>(d) * if d == 1 { r } else { r * r };
    Ok(GccReport {
        kind: GccKind::D,
        parameter: Some(r),
        infimum_estimate: est,
        reference,
        witness: Some(Witness { point: centers[ci], direction: None, measure: est }),
        sample_count: centers.len() * offsets.len(),
        verdict: downgrade(verdict(est, reference), crosses),
        witness_crosses_boundary: crosses,
    })
}

/// Sampled `inf_{a,e} H¹(L(a, e, ℓ) ∩ Ω)` over segments `a + [0, ℓ]e`.
pub fn check_one_gcc<T: Real, R: Region<T>>(omega: &R, ell: T, plan: &SamplingPlan) -> Result<GccReport<T>> {
    let d = omega.dim();
    if !(ell > T::zero()) {
        return Err(invalid("ell", "segment length must be positive"));
    }
    let directions: Vec<Point<T>> = if d == 1 {
        vec![[T::one(), T::zero()]]
    } else {
        (0..plan.directions.max(1))
            .map(|k| {
                let th = T::pi() * T::count(k) / T::count(plan.directions.max(1));
                [th.cos(), th.sin()]
            })
            .collect()
    };
    let starts = cell_points(d, omega.period(), plan.offsets_per_axis);
    let m = plan.segment_quadrature.max(1);
    let dt = ell / T::count(m);
    let pairs: Vec<(usize, usize)> =
        (0..directions.len()).flat_map(|i| (0..starts.len()).map(move |j| (i, j))).collect();
    let results: Vec<(usize, usize, T, bool)> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let e = directions[i];
            let a = starts[j];
            let mut hits = 0usize;
            let mut crosses = false;
            for k in 0..m {
                let t = dt * (T::count(k) + T::lit(0.5));
                let x = [a[0] + t * e[0], a[1] + t * e[1]];
                crosses |= crosses_box(&x, d, omega.extent());
                if omega.contains(&x) {
                    hits += 1;
                }
            }
            (i, j, T::count(hits) * dt, crosses)
        })
        .collect();
    let (i, j, est, crosses) = results
        .iter()
        .copied()
        .fold(results[0], |best, cur| if cur.2 < best.2 { cur } else { best });
    let crosses = crosses && !omega.intrinsically_periodic();
    Ok(GccReport {
        kind: GccKind::One,
        parameter: Some(ell),
        infimum_estimate: est,
        reference: ell,
        witness: Some(Witness { point: starts[j], direction: Some(directions[i]), measure: est }),
        sample_count: pairs.len() * m,
        verdict: downgrade(verdict(est, ell), crosses),
        witness_crosses_boundary: crosses,
    })
}

/// `S_δ`: nodes of `S` whose distance to every node outside `S` is at least `δ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShrunkSet<T> {
    pub delta: T,
    #[serde(skip)]
    pub base: Vec<bool>,
    #[serde(skip)]
    pub mask: Vec<bool>,
}

impl<T: Real> ShrunkSet<T> {
    pub fn contains(&self, k: usize) -> bool {
        self.mask[k]
    }
}

/// Shrinks a node set by `δ` in the torus metric.
pub fn shrink<T: Real>(grid: &TorusGrid<T>, base: &[bool], delta: T) -> Result<ShrunkSet<T>> {
    if !(delta > T::zero()) {
        return Err(invalid("delta", "shrink distance must be positive"));
    }
    if base.len() != grid.len() {
        return Err(crate::Error::GridMismatch("mask length differs from the grid".into()));
    }
    let h = grid.spacing();
    let n = grid.points_per_axis() as i64;
    let w = ((delta / h).ceil().to_f64_lossy() as i64).min(n / 2);
    let d = grid.dim();
    let mask: Vec<bool> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            if !base[k] {
                return false;
            }
            let a = grid.axes(k);
            let range1 = if d == 2 { -w..=w } else { 0..=0 };
            for di in -w..=w {
                for dj in range1.clone() {
                    let dist = h * (T::lit((di * di + dj * dj) as f64)).sqrt();
                    if dist >= delta {
                        continue;
                    }
                    let i = (a[0] as i64 + di).rem_euclid(n) as usize;
                    let j = (a[1] as i64 + dj).rem_euclid(n) as usize;
                    if !base[grid.linear([i, j])] {
                        return false;
                    }
                }
            }
            true
        })
        .collect();
    Ok(ShrunkSet { delta, base: base.to_vec(), mask })
}

/// Convenience: `ℝ^d ∖ S(a, ε)` restricted to nodes, as a region.
pub fn controlled_nodes<T: Real>(mask: &SublevelMask<T>) -> Vec<bool> {
    mask.mask.iter().map(|m| !m).collect()
}
