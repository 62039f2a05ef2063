//! Orchestration of a validated scenario into files and a report.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use kgstab::damping::{sublevel_mask, SublevelMask};
use kgstab::evolution::{decay_curve, random_state, Generator, Method};
use kgstab::geometry::{check_d_gcc, check_one_gcc, check_zero_gcc, Controlled, Verdict};
use kgstab::ratefit::{select_model, Model};
use kgstab::resolvent::{
    annihilation_one_sided, annihilation_sum_form, annihilation_two_sided, lambda_sweep, Observation, SweepKind,
};
use kgstab::spectral::annulus;
use kgstab::theory::{
    classify, extrapolate, ChainRule, ClassTag, ConstantLedger, Facts, StructuralFacts, Truth,
};
use rayon::prelude::*;

use crate::config::{Analysis, ConfigError, MethodName, Scenario, SweepOperator};
use crate::plot::{emit_plot, Series};
use crate::report::*;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot write {path}: {reason}")]
    Io { path: PathBuf, reason: String },
}

/// Horizon below which a logarithmic hypothesis triggers a warning.
pub const LOG_HORIZON: f64 = 1e3;

fn order_tag(s: f64) -> String {
    format!("s{s}")
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<(), String> {
    let err = |e: csv::Error| format!("cannot write {}: {e}", path.display());
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    w.write_record(header).map_err(err)?;
    for row in rows {
        w.write_record(row.iter().map(|v| format!("{v:.16e}"))).map_err(err)?;
    }
    w.flush().map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn file_name(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

fn simulate(scn: &Scenario, s: f64, dir: &Path, warnings: &mut Vec<String>) -> Result<SimulateReport, String> {
    let cfg = &scn.raw.simulate;
    let gen = Generator::new(&scn.grid, s, &scn.damping).map_err(|e| e.to_string())?;
    let x0 = random_state(&scn.grid, scn.seed);
    let method = match cfg.method {
        MethodName::DenseExpm => Method::DenseExpm,
        MethodName::Strang => Method::StrangSplit { dt: cfg.dt },
    };
    let traj = decay_curve(&gen, &x0, cfg.horizon, cfg.n, cfg.smooth, method, scn.solver.dense_cap)
        .map_err(|e| e.to_string())?;
    let sel = select_model(&traj, cfg.window_spec()).map_err(|e| e.to_string())?;

    let tag = order_tag(s);
    let csv = dir.join(format!("trajectory_{tag}.csv"));
    write_csv(&csv, &["t", "energy"], traj.times.iter().zip(&traj.energies).map(|(t, e)| vec![*t, *e]))?;
    let svg = dir.join(format!("energy_{tag}.svg"));
    let title = format!("energy decay, s = {s}");
    let series =
        Series { title: &title, x_label: "t", y_label: "E(t)", x: &traj.times, y: &traj.energies, log_y: true };
    let plot = match emit_plot(&series, &svg) {
        Ok(()) => file_name(&svg),
        Err(e) => {
            warnings.push(format!("energy plot skipped: {e}"));
            String::new()
        }
    };
    Ok(SimulateReport {
        method: match cfg.method {
            MethodName::DenseExpm => "dense_expm".into(),
            MethodName::Strang => format!("strang(dt = {})", cfg.dt),
        },
        horizon: Tagged::new(cfg.horizon, "time"),
        samples: traj.times.len(),
        smooth: traj.smooth,
        max_step: traj.max_step,
        initial_energy: traj.energies[0],
        final_energy: traj.energies[traj.energies.len() - 1],
        selected: sel.selected.into(),
        candidates: sel.candidates.into_iter().map(FitSummary::from).collect(),
        csv: file_name(&csv),
        plot,
    })
}

fn sweep(scn: &Scenario, s: f64, dir: &Path, warnings: &mut Vec<String>) -> Result<SweepReport, String> {
    let cfg = &scn.raw.resolvent_sweep;
    let an = &scn.raw.annihilation;
    let gen = Generator::new(&scn.grid, s, &scn.damping).map_err(|e| e.to_string())?;
    let sublevel;
    let (kind, name) = match cfg.operator {
        SweepOperator::Full => (SweepKind::FullA(&gen), "full"),
        SweepOperator::Halfwave => (SweepKind::Halfwave(&gen), "halfwave"),
        SweepOperator::TwoSided => {
            sublevel = sublevel_mask(&scn.damping, &scn.grid, an.epsilon).map_err(|e| e.to_string())?;
            (SweepKind::TwoSided { sublevel: &sublevel, s, mu: an.mu }, "two_sided")
        }
    };
    let res = lambda_sweep(kind, cfg.lambda_max, cfg.points, &scn.solver).map_err(|e| e.to_string())?;
    let sup = res.sup_constant;
    let a_norm = scn.damping.bound();
    let ledger = sup.is_finite().then(|| -> kgstab::Result<ConstantLedger> {
        let mut l = ConstantLedger::new();
        match cfg.operator {
            SweepOperator::Full => {
                l.insert("C0", sup, "sup of measured resolvent constants");
                l.apply(ChainRule::ResolventToSemigroup)?;
            }
            SweepOperator::Halfwave => {
                l.insert("C1", sup, "sup of measured half-wave constants");
                l.insert("C2", sup, "sup of measured half-wave constants");
                l.insert("B_norm", a_norm.sqrt(), "sup of sqrt(a)");
                l.insert("lambda", 0.0, "worst case of the lambda-dependent term");
                l.apply(ChainRule::HalfwaveToResolvent)?;
                l.alias("C0", "C")?;
                l.apply(ChainRule::ResolventToSemigroup)?;
            }
            SweepOperator::TwoSided => {
                l.insert("C0", sup, "sup of measured two-sided constants (bounds the sum form)");
                l.insert("eps0", an.epsilon, "sublevel threshold");
                l.insert("mu0", an.mu, "annulus half width");
                l.insert("a_norm", a_norm, "sup of a");
                l.apply(ChainRule::AnnihilationToSemigroup)?;
            }
        }
        Ok(l)
    });
    let ledger = match ledger {
        Some(Ok(l)) => Some(l),
        Some(Err(e)) => {
            warnings.push(format!("constant chain skipped: {e}"));
            None
        }
        None => None,
    };

    let tag = order_tag(s);
    let csv = dir.join(format!("sweep_{name}_{tag}.csv"));
    write_csv(
        &csv,
        &["lambda", "sigma_min", "constant"],
        res.points.iter().map(|p| vec![p.lambda, p.sigma_min, p.constant]),
    )?;
    let svg = dir.join(format!("sweep_{name}_{tag}.svg"));
    let xs: Vec<f64> = res.points.iter().map(|p| p.lambda).collect();
    let ys: Vec<f64> = res.points.iter().map(|p| p.constant).collect();
    let title = format!("{name} constant, s = {s}");
    let series = Series { title: &title, x_label: "lambda", y_label: "constant", x: &xs, y: &ys, log_y: true };
    let plot = match emit_plot(&series, &svg) {
        Ok(()) => file_name(&svg),
        Err(e) => {
            warnings.push(format!("sweep plot skipped: {e}"));
            String::new()
        }
    };
    Ok(SweepReport {
        operator: name,
        lambda_max: res.lambda_max,
        sup_constant: Tagged::new(sup, "resolvent_constant"),
        argmax_lambda: res.argmax_lambda,
        symbol_max: res.symbol_max,
        tail_monotone: res.tail_monotone,
        truncation_note: "lambda is sampled on [0, lambda_max] only; a finite supremum does not certify a uniform bound",
        points: res.points,
        ledger,
        csv: file_name(&csv),
        plot,
    })
}

fn annihilation(scn: &Scenario, s: f64) -> Result<AnnihilationReport, String> {
    let cfg = &scn.raw.annihilation;
    let sub: SublevelMask<f64> = sublevel_mask(&scn.damping, &scn.grid, cfg.epsilon).map_err(|e| e.to_string())?;
    let points = cfg
        .lambdas
        .par_iter()
        .map(|&lambda| -> Result<AnnihilationPoint, String> {
            let set = annulus(lambda, s, cfg.mu, &scn.grid).map_err(|e| e.to_string())?;
            let mut p = AnnihilationPoint {
                lambda,
                sigma_count: set.count(),
                s_count: sub.count(),
                clipped: set.clipped,
                two_sided: None,
                sum_form_interval: None,
                sum_form_sharp: None,
                one_sided: None,
                note: None,
            };
            if set.is_empty() {
                p.note = Some("empty frequency set on this grid; the estimates hold vacuously".into());
                return Ok(p);
            }
            let two = annihilation_two_sided(&sub, &set, &scn.solver).map_err(|e| e.to_string())?;
            p.two_sided = Some(Tagged::new(two.combined_constant, "resolvent_constant"));
            p.sum_form_interval = Some(two.sum_form_bounds);
            let one = annihilation_one_sided(&scn.grid, Observation::Complement(&sub), &set, &scn.solver)
                .map_err(|e| e.to_string())?;
            p.one_sided = Some(Tagged::new(one.constant, "resolvent_constant"));
            if cfg.brute_force && scn.grid.len() <= scn.solver.dense_cap {
                let sharp = annihilation_sum_form(&sub, &set, scn.solver.dense_cap).map_err(|e| e.to_string())?;
                p.sum_form_sharp = Some(Tagged::new(sharp, "sum_form_constant"));
            }
            Ok(p)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(AnnihilationReport {
        epsilon: cfg.epsilon,
        mu: cfg.mu,
        sublevel_measure: Tagged::new(sub.measure(), "length"),
        points,
    })
}

fn gcc(scn: &Scenario) -> Result<GccSection, String> {
    let cfg = &scn.raw.gcc_check;
    let plan = cfg.plan();
    let zero = check_zero_gcc(&scn.damping, &scn.grid, cfg.epsilon).map_err(|e| e.to_string())?;
    let omega = Controlled { spec: &scn.damping, epsilon: cfg.epsilon };
    let d = check_d_gcc(&omega, cfg.r, &plan).map_err(|e| e.to_string())?;
    let one = check_one_gcc(&omega, cfg.ell, &plan).map_err(|e| e.to_string())?;
    Ok(GccSection { epsilon: cfg.epsilon, zero, d, one })
}

/// A sampled check at one radius, length or threshold only certifies the
/// positive statement; a failure there says nothing about other parameters.
fn measured_truth(v: Verdict) -> Truth {
    match v {
        Verdict::Holds => Truth::Holds,
        Verdict::Fails | Verdict::Inconclusive => Truth::Unknown,
    }
}

fn needs_gcc(scn: &Scenario) -> bool {
    let f = &scn.raw.facts;
    scn.runs(Analysis::GccCheck)
        || (scn.runs(Analysis::Classify) && (f.zero_gcc.is_none() || f.one_gcc.is_none() || f.d_gcc.is_none()))
}

fn classify_order(scn: &Scenario, s: f64, gcc: Option<&Result<GccSection, String>>) -> Result<ClassifyReport, String> {
    let f = &scn.raw.facts;
    let mut sources = BTreeMap::new();
    let measured = match gcc {
        Some(Ok(g)) => Some(g),
        Some(Err(e)) => {
            if f.zero_gcc.is_none() || f.one_gcc.is_none() || f.d_gcc.is_none() {
                return Err(format!("geometric checks failed: {e}"));
            }
            None
        }
        None => None,
    };
    let mut discarded = Vec::new();
    let mut pick = |key: &'static str, given: Option<bool>, verdict: Option<Verdict>| match (given, verdict) {
        (Some(b), _) => {
            sources.insert(key, "config");
            Truth::from_bool(b)
        }
        (None, Some(v)) => {
            let t = measured_truth(v);
            if t == Truth::Unknown {
                discarded.push(key);
            } else {
                sources.insert(key, "gcc_check");
            }
            t
        }
        (None, None) => Truth::Unknown,
    };
    let zero = pick("zero_gcc", f.zero_gcc, measured.map(|g| g.zero.verdict));
    let one = pick("one_gcc", f.one_gcc, measured.map(|g| g.one.verdict));
    let dd = pick("d_gcc", f.d_gcc, measured.map(|g| g.d.verdict));

    let hints = scn.damping.structural_hints();
    let mut structural = |key: &'static str, given: Option<bool>, hint: Option<bool>| match (given, hint) {
        (Some(b), _) => {
            sources.insert(key, "config");
            Truth::from_bool(b)
        }
        (None, Some(b)) if f.infer_from_damping => {
            sources.insert(key, "damping");
            Truth::from_bool(b)
        }
        _ => Truth::Unknown,
    };
    let st = StructuralFacts {
        finite_measure_sublevel: structural(
            "finite_measure_sublevel",
            f.finite_measure_sublevel,
            hints.finite_measure_sublevel,
        ),
        periodic_superset: structural("periodic_superset", f.periodic_superset, hints.periodic_superset),
        uniformly_continuous: structural("uniformly_continuous", f.uniformly_continuous, hints.uniformly_continuous),
        continuous: structural("continuous", f.continuous, hints.continuous),
    };
    let facts = Facts::new(scn.grid.dim(), s).with_gcc(zero, one, dd).with_structural(st);
    let mut classification = classify(&facts).map_err(|e| e.to_string())?;
    for key in discarded {
        classification
            .notes
            .push(format!("{key} not certified at the sampled parameter; left unknown (set it under [facts] to assert it)"));
    }
    let extrapolations = scn
        .raw
        .classify
        .extrapolate_to
        .iter()
        .map(|&t| {
            extrapolate(&classification.class, s, t).map(|class| Extrapolated { s: t, class }).map_err(|e| e.to_string())
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ClassifyReport {
        fact_sources: sources,
        predicted_rate: classification.class.rate.map(|r| Tagged::new(r, "semigroup_rate")),
        classification,
        extrapolations,
    })
}

fn fitted_tag(fit: &FitSummary) -> ClassTag {
    if !fit.fit.decaying {
        return ClassTag::Unknown;
    }
    match fit.fit.model {
        Model::Exponential => ClassTag::Exponential,
        Model::Polynomial => ClassTag::Polynomial,
        Model::Logarithmic => ClassTag::Logarithmic,
    }
}

fn conformance(run: &OrderRun) -> Conformance {
    let cls = run.classify.as_ref().and_then(Outcome::ok);
    let fit = run.simulate.as_ref().and_then(Outcome::ok);
    let predicted = cls.map(|c| c.classification.class.tag);
    let fitted = fit.map(|f| fitted_tag(&f.selected));
    match (predicted, fitted) {
        (Some(p), Some(f)) => {
            let mut note = "the prediction is a lower bound; a fitted class at least as strong is consistent".to_string();
            if cls.is_some_and(|c| c.classification.excludes(f)) {
                note.push_str("; the fit reaches a class excluded by a necessary condition, which a finite-horizon fit cannot test");
            }
            Conformance {
                status: if f >= p { ConformanceStatus::Consistent } else { ConformanceStatus::Inconsistent },
                predicted,
                fitted,
                note,
            }
        }
        _ => Conformance {
            status: ConformanceStatus::NotApplicable,
            predicted,
            fitted,
            note: "requires both simulate and classify".into(),
        },
    }
}

fn run_order(scn: &Scenario, s: f64, dir: &Path, gcc: Option<&Result<GccSection, String>>) -> OrderRun {
    let mut warnings = Vec::new();
    let simulate = scn.runs(Analysis::Simulate).then(|| simulate(scn, s, dir, &mut warnings).into());
    let resolvent_sweep = scn.runs(Analysis::ResolventSweep).then(|| sweep(scn, s, dir, &mut warnings).into());
    let annihilation = scn.runs(Analysis::Annihilation).then(|| annihilation(scn, s).into());
    let gcc_check = scn.runs(Analysis::GccCheck).then(|| gcc.cloned().expect("computed when requested").into());
    let classify = scn.runs(Analysis::Classify).then(|| classify_order(scn, s, gcc).into());
    let mut run = OrderRun {
        s,
        simulate,
        resolvent_sweep,
        annihilation,
        gcc_check,
        classify,
        conformance: Conformance {
            status: ConformanceStatus::NotApplicable,
            predicted: None,
            fitted: None,
            note: String::new(),
        },
        warnings,
    };
    run.conformance = conformance(&run);
    if let Some(Outcome::Ok(sim)) = &run.simulate {
        let log_hypothesis = sim.selected.fit.model == Model::Logarithmic
            || run.conformance.predicted == Some(ClassTag::Logarithmic);
        if log_hypothesis && sim.horizon.value < LOG_HORIZON {
            run.warnings.push(format!(
                "logarithmic hypothesis with horizon T = {} < {LOG_HORIZON}: logarithmic and polynomial fits are hard to separate",
                sim.horizon.value
            ));
        }
    }
    run
}

/// Runs every requested analysis, or only those in `only` when given.
pub fn run_scenario_with(scn: &Scenario, only: Option<&[Analysis]>) -> Result<Report, RunError> {
    let mut scn = scn.clone();
    if let Some(only) = only {
        scn.analyses = only.to_vec();
    }
    let dir = scn.output.clone();
    std::fs::create_dir_all(&dir).map_err(|e| RunError::Io { path: dir.clone(), reason: e.to_string() })?;
    let body = || {
        let gcc = needs_gcc(&scn).then(|| gcc(&scn));
        scn.orders.par_iter().map(|&s| run_order(&scn, s, &dir, gcc.as_ref())).collect::<Vec<_>>()
    };
    let runs = match scn.workers()? {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| RunError::Io { path: dir.clone(), reason: format!("thread pool: {e}") })?
            .install(body),
        None => body(),
    };
    let report = Report {
        schema_version: SCHEMA_VERSION,
        scenario: scn.raw.clone(),
        seed: scn.seed,
        conventions: conventions(),
        completed: runs.iter().all(OrderRun::completed),
        runs,
    };
    let path = dir.join("report.json");
    std::fs::write(&path, report.to_json() + "\n").map_err(|e| RunError::Io { path, reason: e.to_string() })?;
    Ok(report)
}

pub fn run_scenario(scn: &Scenario) -> Result<Report, RunError> {
    run_scenario_with(scn, None)
}
