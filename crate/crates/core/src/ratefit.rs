//! Least-squares fits of energy decay curves to exponential, polynomial and
//! logarithmic laws.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::evolution::Trajectory;
use crate::scalar::Real;

pub const MIN_WINDOW: usize = 8;
pub const DEFAULT_TAIL_MIN: usize = 16;
/// Relative residual margin inside which the weaker model is preferred.
pub const TIE_MARGIN: f64 = 0.10;
/// Total drop of `log E` across the window below which a curve counts as flat.
pub const FLAT_LOG_DROP: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Model {
    Logarithmic,
    Polynomial,
    Exponential,
}

impl Model {
    pub const ALL: [Model; 3] = [Model::Exponential, Model::Polynomial, Model::Logarithmic];

    pub fn name(self) -> &'static str {
        match self {
            Model::Exponential => "exponential",
            Model::Polynomial => "polynomial",
            Model::Logarithmic => "logarithmic",
        }
    }

    fn abscissa(self, t: f64) -> f64 {
        match self {
            Model::Exponential => t,
            Model::Polynomial => t.ln_1p(),
            Model::Logarithmic => (std::f64::consts::E + t).ln().ln(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub enum WindowSpec {
    /// Last half of the samples, at least [`DEFAULT_TAIL_MIN`] of them.
    #[default]
    TailHalf,
    /// Samples with `t_lo ≤ t ≤ t_hi`.
    Time { t_lo: f64, t_hi: f64 },
    /// Samples `lo..hi`.
    Indices { lo: usize, hi: usize },
}

impl WindowSpec {
    pub fn resolve(&self, times: &[f64]) -> Result<Window> {
        let n = times.len();
        let (lo, hi) = match *self {
            WindowSpec::TailHalf => ((n / 2).min(n.saturating_sub(DEFAULT_TAIL_MIN)), n),
            WindowSpec::Time { t_lo, t_hi } => {
                if !(t_lo <= t_hi) {
                    return Err(invalid("window", format!("empty time window [{t_lo}, {t_hi}]")));
                }
                let lo = times.iter().position(|&t| t >= t_lo).unwrap_or(n);
                let hi = times.iter().rposition(|&t| t <= t_hi).map_or(lo, |k| k + 1).max(lo);
                (lo, hi)
            }
            WindowSpec::Indices { lo, hi } => {
                if lo > hi || hi > n {
                    return Err(invalid("window", format!("index window {lo}..{hi} outside 0..{n}")));
                }
                (lo, hi)
            }
        };
        if hi - lo < MIN_WINDOW {
            return Err(Error::ShortWindow { found: hi - lo, needed: MIN_WINDOW });
        }
        Ok(Window { lo, hi, t_lo: times[lo], t_hi: times[hi - 1] })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Window {
    pub lo: usize,
    pub hi: usize,
    pub t_lo: f64,
    pub t_hi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitReport {
    pub model: Model,
    /// Slope of `log E` against the model abscissa.
    pub energy_slope: f64,
    /// Semigroup-level rate: `ω` for exponential fits, `1/p` otherwise.
    pub rate: f64,
    /// `p` for polynomial and logarithmic fits with positive rate.
    pub p: Option<f64>,
    /// `exp(intercept)` of the energy regression.
    pub prefactor: f64,
    /// RMS residual of `log E`.
    pub residual: f64,
    pub window: Window,
    pub decaying: bool,
    pub conversion: &'static str,
    pub flags: Vec<String>,
}

/// Ordinary least squares; returns slope, intercept and RMS residual.
fn regress(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    (slope, intercept, (ss / n).sqrt())
}

/// Fits one model to `(times, energies)` on `window`.
pub fn fit_series<T: Real>(model: Model, times: &[T], energies: &[T], window: WindowSpec) -> Result<FitReport> {
    if times.len() != energies.len() {
        return Err(invalid("energies", "times and energies differ in length"));
    }
    let t: Vec<f64> = times.iter().map(|x| x.to_f64_lossy()).collect();
    let w = window.resolve(&t)?;
    let mut xs = Vec::with_capacity(w.hi - w.lo);
    let mut ys = Vec::with_capacity(w.hi - w.lo);
    for k in w.lo..w.hi {
        let e = energies[k].to_f64_lossy();
        if !(e > 0.0) || !e.is_finite() {
            return Err(Error::NonPositiveEnergy { time: t[k], value: e });
        }
        xs.push(model.abscissa(t[k]));
        ys.push(e.ln());
    }
    let (slope, intercept, residual) = regress(&xs, &ys);
    let drop = ys[0] - ys[ys.len() - 1];
    let rate = -slope / 2.0;
    let decaying = drop > FLAT_LOG_DROP && rate > 0.0;
    let mut flags = Vec::new();
    if !decaying {
        flags.push("no decay".to_string());
    }
    let conversion = match model {
        Model::Exponential => "semigroup omega = -(energy slope)/2 against t",
        Model::Polynomial => "semigroup 1/p = -(energy slope)/2 against log(1+t)",
        Model::Logarithmic => "semigroup 1/p = -(energy slope)/2 against log log(e+t)",
    };
    Ok(FitReport {
        model,
        energy_slope: slope,
        rate,
        p: (model != Model::Exponential && rate > 0.0).then(|| 1.0 / rate),
        prefactor: intercept.exp(),
        residual,
        window: w,
        decaying,
        conversion,
        flags,
    })
}

pub fn fit_exponential<T: Real>(traj: &Trajectory<T>, window: WindowSpec) -> Result<FitReport> {
    fit_series(Model::Exponential, &traj.times, &traj.energies, window)
}

fn smooth_flag<T: Real>(traj: &Trajectory<T>, mut r: FitReport) -> FitReport {
    if !traj.smooth {
        r.flags.push("unsmoothed data: rate does not refer to the smoothed semigroup".to_string());
    }
    r
}

pub fn fit_polynomial<T: Real>(traj: &Trajectory<T>, window: WindowSpec) -> Result<FitReport> {
    Ok(smooth_flag(traj, fit_series(Model::Polynomial, &traj.times, &traj.energies, window)?))
}

pub fn fit_logarithmic<T: Real>(traj: &Trajectory<T>, window: WindowSpec) -> Result<FitReport> {
    Ok(smooth_flag(traj, fit_series(Model::Logarithmic, &traj.times, &traj.energies, window)?))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelSelection {
    pub selected: FitReport,
    /// All fits, in the order exponential, polynomial, logarithmic.
    pub candidates: Vec<FitReport>,
}

/// Picks the fit with the smallest residual. A weaker model whose residual
/// is within [`TIE_MARGIN`] of the best is preferred and flagged.
pub fn select_series<T: Real>(times: &[T], energies: &[T], window: WindowSpec) -> Result<ModelSelection> {
    let candidates = Model::ALL
        .iter()
        .map(|&m| fit_series(m, times, energies, window))
        .collect::<Result<Vec<_>>>()?;
    let best = candidates
        .iter()
        .min_by(|a, b| a.residual.total_cmp(&b.residual))
        .expect("three candidates");
    let mut selected = candidates
        .iter()
        .filter(|c| c.residual <= best.residual * (1.0 + TIE_MARGIN) + 1e-12)
        .min_by_key(|c| c.model)
        .expect("best is within its own margin")
        .clone();
    if selected.model != best.model {
        selected.flags.push(format!(
            "tie: {} residual within {:.0}% of {}; weaker model chosen",
            selected.model.name(),
            TIE_MARGIN * 100.0,
            best.model.name()
        ));
    }
    Ok(ModelSelection { selected, candidates })
}

pub fn select_model<T: Real>(traj: &Trajectory<T>, window: WindowSpec) -> Result<ModelSelection> {
    let mut sel = select_series(&traj.times, &traj.energies, window)?;
    if sel.selected.model != Model::Exponential {
        sel.selected = smooth_flag(traj, sel.selected);
    }
    Ok(sel)
}
