//! Acceptance run: prints one PASS/FAIL line per criterion.
//!
//! The process fails when a check that is attainable fails. A criterion whose
//! stated bound cannot hold prints FAIL with the attainable part in its detail.

use std::f64::consts::{PI, SQRT_2};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use kgstab::damping::{sublevel_mask, DampingSpec, SublevelMask};
use kgstab::evolution::{
    constant_damping_closed_form, decay_curve, diagonalizer, evolve, random_state, Generator, Method, StatePair,
    DEFAULT_DENSE_CAP,
};
use kgstab::geometry::{check_d_gcc, check_one_gcc, check_zero_gcc, Controlled, SamplingPlan, Verdict};
use kgstab::linalg::{assemble, sum_form_minimum, SolverOptions};
use kgstab::ratefit::{fit_exponential, Model, WindowSpec};
use kgstab::resolvent::{
    annihilation_one_sided, annihilation_sum_form, annihilation_two_sided, halfwave_constant, halfwave_set_constant,
    resolvent_constant_full, Halfwave, Observation, TwoSided,
};
use kgstab::spectral::{annulus, annulus_shape, ball_in_annulus, half_symbol, unit_ball_volume, AnnulusSet, AnnulusShape, TorusGrid};
use kgstab::theory::inequalities::{concave_power, convex_power, higher_order_symbol, lower_order_inclusion};
use kgstab::theory::{
    classify, constant_chain, exponent_q, extrapolate, strong_poly_rule, ChainRule, ClassTag, Classification,
    ConstantLedger, Facts, StabilityClass, StructuralFacts, Truth,
};
use kgstab::Complex;
use kgstab_cli::config::parse_str;
use kgstab_cli::report::ConformanceStatus;
use kgstab_cli::run::run_scenario;
use nalgebra::DMatrix;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type C = Complex<f64>;
type Q = Ratio<i64>;

struct Outcome {
    passed: bool,
    /// False when only a part that cannot hold as stated failed.
    blocking: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: String) -> Self {
        Self { passed, blocking: !passed, detail }
    }
}

/// Collects named sub-checks and reports the first failures.
#[derive(Default)]
struct Tally {
    total: usize,
    failed: Vec<String>,
}

impl Tally {
    fn check(&mut self, ok: bool, label: impl FnOnce() -> String) {
        self.total += 1;
        if !ok {
            self.failed.push(label());
        }
    }

    fn ok(&self) -> bool {
        self.failed.is_empty()
    }

    fn summary(&self) -> String {
        if self.failed.is_empty() {
            format!("{} checks", self.total)
        } else {
            let shown: Vec<&str> = self.failed.iter().take(3).map(String::as_str).collect();
            format!("{} of {} checks failed: {}", self.failed.len(), self.total, shown.join("; "))
        }
    }
}

fn rel_err(a: &StatePair<f64>, b: &StatePair<f64>) -> f64 {
    let (a, b) = (a.to_space(), b.to_space());
    let mut num = 0.0;
    let mut den = 0.0;
    for k in 0..a.u.values.len() {
        num += (a.u.values[k] - b.u.values[k]).norm_sqr() + (a.v.values[k] - b.v.values[k]).norm_sqr();
        den += b.u.values[k].norm_sqr() + b.v.values[k].norm_sqr();
    }
    (num / den).sqrt()
}

fn closed_form_oracle() -> Outcome {
    let start = Instant::now();
    let grid = TorusGrid::<f64>::new(1, 40.0, 64).unwrap();
    let spec = DampingSpec::constant(1, 40.0, 1.0).unwrap();
    let gen = Generator::new(&grid, 2.0, &spec).unwrap();
    let x0 = random_state(&grid, 11);
    let times: Vec<f64> = (0..=20).map(|i| 0.5 * i as f64).collect();
    let dense = evolve(&gen, &x0, &times, Method::DenseExpm, true, DEFAULT_DENSE_CAP).unwrap();
    let split = evolve(&gen, &x0, &times, Method::StrangSplit { dt: 1e-3 }, true, DEFAULT_DENSE_CAP).unwrap();
    let (mut ed, mut es) = (0.0f64, 0.0f64);
    for (i, &t) in times.iter().enumerate() {
        let exact = constant_damping_closed_form(1.0, 2.0, &x0, t).unwrap();
        ed = ed.max(rel_err(&dense.states.as_ref().unwrap()[i], &exact));
        es = es.max(rel_err(&split.states.as_ref().unwrap()[i], &exact));
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome::new(
        ed <= 1e-8 && es <= 1e-4 && secs <= 10.0,
        format!("dense {ed:.1e} (<= 1e-8), strang {es:.1e} (<= 1e-4), {secs:.2} s (<= 10 s)"),
    )
}

/// Every catalog profile on a small grid, with its grid.
fn catalog(seed: u64) -> Vec<(&'static str, TorusGrid<f64>, DampingSpec<f64>)> {
    let g1 = TorusGrid::<f64>::new(1, 8.0, 16).unwrap();
    let g2 = TorusGrid::<f64>::new(2, 4.0, 8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples1: Vec<f64> = (0..g1.len()).map(|_| rng.random_range(0.0..1.5)).collect();
    let samples2: Vec<f64> = (0..g2.len()).map(|_| rng.random_range(0.0..1.5)).collect();
    vec![
        ("constant 1d", g1.clone(), DampingSpec::constant(1, 8.0, 0.7).unwrap()),
        ("interval_gap", g1.clone(), DampingSpec::interval_gap(8.0, 1.5, 1.0).unwrap()),
        ("finite_measure 1d", g1.clone(), DampingSpec::finite_measure(1, 8.0, 1.5, 1.2).unwrap()),
        ("smooth_dip 1d", g1.clone(), DampingSpec::smooth_dip(1, 8.0, 2.0, 1.0).unwrap()),
        ("samples 1d", g1.clone(), DampingSpec::from_samples(&g1, samples1).unwrap()),
        ("constant 2d", g2.clone(), DampingSpec::constant(2, 4.0, 0.5).unwrap()),
        ("lattice_of_balls", g2.clone(), DampingSpec::lattice_of_balls(4.0, 2.0, 0.6, 1.5).unwrap()),
        ("grid_lines", g2.clone(), DampingSpec::grid_lines(4.0, 2.0, 0.3, 1.0).unwrap()),
        ("finite_measure 2d", g2.clone(), DampingSpec::finite_measure(2, 4.0, 1.0, 1.0).unwrap()),
        ("smooth_dip 2d", g2.clone(), DampingSpec::smooth_dip(2, 4.0, 1.5, 1.0).unwrap()),
        ("samples 2d", g2.clone(), DampingSpec::from_samples(&g2, samples2).unwrap()),
    ]
}

fn dissipation_and_contraction() -> Outcome {
    let h = 1e-3;
    let times: Vec<f64> = (0..=1000).map(|i| h * i as f64).collect();
    let mut tally = Tally::default();
    let (mut worst_step, mut worst_identity) = (0.0f64, 0.0f64);
    for (name, grid, spec) in catalog(3) {
        for s in [1.0, 2.0, 4.0] {
            let gen = Generator::new(&grid, s, &spec).unwrap();
            let x0 = random_state(&grid, 5);
            let tr = evolve(&gen, &x0, &times, Method::DenseExpm, true, DEFAULT_DENSE_CAP).unwrap();
            let e = &tr.energies;
            let states = tr.states.as_ref().unwrap();
            let rise = e.windows(2).map(|w| (w[1] - w[0]) / w[0]).fold(f64::NEG_INFINITY, f64::max);
            worst_step = worst_step.max(rise);
            tally.check(rise <= 1e-9, || format!("{name} s={s}: energy rises by {rise:.1e}"));
            // Simpson on pairs of steps; its error is h^5/90 times the fourth derivative,
            // which the spectral radius bound of the generator controls.
            let dis: Vec<f64> = states.iter().map(|x| gen.dissipation(x)).collect();
            let a_max = gen.damping_samples().iter().copied().fold(0.0, f64::max);
            let w_max = gen.half_symbols().iter().copied().fold(0.0, f64::max);
            let step_term = h.powi(5) / 90.0 * (2.0 * (w_max + a_max)).powi(4) * 2.0 * a_max * e[0];
            let mut k = 0;
            while k + 2 < e.len() {
                let resid = e[k + 2] - e[k] + h / 3.0 * (dis[k] + 4.0 * dis[k + 1] + dis[k + 2]);
                let tol = 1e-6 * e[0] + step_term;
                worst_identity = worst_identity.max(resid.abs() / e[0]);
                tally.check(resid.abs() <= tol, || format!("{name} s={s} t={}: residual {resid:.1e}", times[k]));
                k += 2;
            }
        }
    }
    Outcome::new(
        tally.ok(),
        format!(
            "{}; largest relative rise {worst_step:.1e}, largest identity residual {worst_identity:.1e} of E(0)",
            tally.summary()
        ),
    )
}

fn constant_damping_rate() -> Outcome {
    let grid = TorusGrid::<f64>::new(1, 40.0, 64).unwrap();
    let spec = DampingSpec::constant(1, 40.0, 1.0).unwrap();
    let gen = Generator::new(&grid, 2.0, &spec).unwrap();
    let x0 = random_state(&grid, 1);
    let tr = decay_curve(&gen, &x0, 20.0, 201, false, Method::DenseExpm, DEFAULT_DENSE_CAP).unwrap();
    let fit = fit_exponential(&tr, WindowSpec::Time { t_lo: 10.0, t_hi: 20.0 }).unwrap();
    let slope = fit.energy_slope;
    Outcome::new((slope + 1.0).abs() <= 0.1, format!("energy slope {slope:.4} on [10, 20], target -1 within 10%"))
}

fn skew_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let cat = catalog(4);
    let mut worst = 0.0f64;
    let mut tally = Tally::default();
    for i in 0..100u64 {
        let (name, grid, spec) = &cat[rng.random_range(0..cat.len())];
        let s = rng.random_range(0.5..4.0);
        let lambda = rng.random_range(-10.0..10.0);
        let gen = Generator::new(grid, s, spec).unwrap();
        let x = random_state(grid, 100 + i);
        let wf: f64 = gen.to_weighted(&x).unwrap().iter().map(|z| z.norm_sqr()).sum();
        let (re, dis) = gen.skew_identity(&x, lambda).unwrap();
        worst = worst.max((re + dis).abs() / wf);
        tally.check((re + dis).abs() <= 1e-10 * wf, || format!("{name} s={s:.2} λ={lambda:.2}: {:.1e}", re + dis));
    }
    Outcome::new(tally.ok(), format!("{}; largest ratio {worst:.1e} (<= 1e-10)", tally.summary()))
}

fn diagonalization_residual() -> Outcome {
    let mut tally = Tally::default();
    let mut worst = 0.0f64;
    for &(d, n) in &[(1usize, 8usize), (1, 16), (1, 32), (2, 4), (2, 8)] {
        let length = n as f64;
        let grid = TorusGrid::<f64>::new(d, length, n).unwrap();
        let spec = DampingSpec::constant(d, length, 0.0).unwrap();
        for s in [0.5, 1.0, 2.0, 3.0, 4.0] {
            let gen = Generator::new(&grid, s, &spec).unwrap();
            let a = gen.dense_frequency(DEFAULT_DENSE_CAP).unwrap();
            let id = DMatrix::<C>::identity(a.nrows(), a.ncols());
            for lambda in [-3.0, 0.0, 2.0] {
                let dg = diagonalizer(&grid, s, lambda, DEFAULT_DENSE_CAP).unwrap();
                let conj = &dg.p * (&a - &id * C::new(0.0, lambda)) * &dg.p_inv;
                let mut r = 0.0f64;
                for i in 0..conj.nrows() {
                    for j in 0..conj.ncols() {
                        let want = if i == j { dg.diagonal[i] } else { C::new(0.0, 0.0) };
                        r = r.max((conj[(i, j)] - want).norm());
                    }
                }
                r = r.max((&dg.p * &dg.p_inv - &id).camax());
                worst = worst.max(r);
                tally.check(r <= 1e-10, || format!("d={d} N={n} s={s} λ={lambda}: {r:.1e}"));
            }
        }
    }
    Outcome::new(tally.ok(), format!("{}; largest entry {worst:.1e} (<= 1e-10)", tally.summary()))
}

fn random_instance(rng: &mut ChaCha8Rng) -> (String, TorusGrid<f64>, DampingSpec<f64>) {
    let level = rng.random_range(0.5..2.0);
    if rng.random_bool(0.5) {
        let n = if rng.random_bool(0.5) { 16 } else { 32 };
        let length = [8.0, 12.0, 16.0][rng.random_range(0..3)];
        let grid = TorusGrid::<f64>::new(1, length, n).unwrap();
        let quarter = length / 4.0;
        let (name, spec) = match rng.random_range(0..4) {
            0 => ("constant", DampingSpec::constant(1, length, level)),
            1 => ("interval_gap", DampingSpec::interval_gap(length, rng.random_range(0.5..quarter), level)),
            2 => ("finite_measure", DampingSpec::finite_measure(1, length, rng.random_range(0.5..quarter), level)),
            _ => ("smooth_dip", DampingSpec::smooth_dip(1, length, rng.random_range(1.0..quarter), level)),
        };
        (format!("{name} d=1 N={n} L={length}"), grid, spec.unwrap())
    } else {
        let length = [4.0, 6.0][rng.random_range(0..2)];
        let grid = TorusGrid::<f64>::new(2, length, 8).unwrap();
        let spacing = length / 2.0;
        let (name, spec) = match rng.random_range(0..5) {
            0 => ("constant", DampingSpec::constant(2, length, level)),
            1 => ("lattice_of_balls", DampingSpec::lattice_of_balls(length, spacing, rng.random_range(0.6..1.0), level)),
            2 => ("grid_lines", DampingSpec::grid_lines(length, spacing, rng.random_range(0.2..0.5), level)),
            3 => ("finite_measure", DampingSpec::finite_measure(2, length, rng.random_range(0.5..1.2), level)),
            _ => ("smooth_dip", DampingSpec::smooth_dip(2, length, rng.random_range(0.8..1.5), level)),
        };
        (format!("{name} d=2 N=8 L={length}"), grid, spec.unwrap())
    }
}

fn split_rows(m: &DMatrix<C>, n: usize) -> (DMatrix<C>, DMatrix<C>) {
    (m.rows(0, n).into_owned(), m.rows(n, n).into_owned())
}

fn ledger(pairs: &[(&str, f64)], rule: ChainRule) -> ConstantLedger {
    let base = pairs.iter().fold(ConstantLedger::new(), |l, (k, v)| l.with(k, *v));
    constant_chain(&base, rule).unwrap()
}

const REL: f64 = 1e-9;

fn le(a: f64, b: f64) -> bool {
    a <= b * (1.0 + REL) + 1e-12
}

fn constant_chains() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let opts = SolverOptions::default();
    let mut tally = Tally::default();
    let mut vacuous = 0usize;
    for inst in 0..20 {
        let (name, grid, spec) = random_instance(&mut rng);
        let s = rng.random_range(0.5..4.0);
        let lambda = rng.random_range(0.0..10.0);
        let tag = format!("#{inst} {name} s={s:.2} λ={lambda:.2}");
        let gen = Generator::new(&grid, s, &spec).unwrap();
        let n = grid.len();
        let a_norm = gen.damping_samples().iter().copied().fold(0.0, f64::max);
        let b_norm = a_norm.sqrt();
        let ca = resolvent_constant_full(&gen, lambda, &opts).unwrap().constant;
        let ch = halfwave_constant(&gen, lambda, &opts).unwrap().constant;
        let hw = assemble(&Halfwave { omega: gen.half_symbols(), multiplier: gen.sqrt_damping(), fourier: gen.fourier(), lambda });
        let (x, y) = split_rows(&hw, n);

        // Generator resolvent to the half-wave sum form.
        if ca.is_finite() {
            let m = sum_form_minimum(&x, &y, ca, ca * b_norm / SQRT_2);
            tally.check(m >= 1.0 - 1e-8, || format!("{tag}: resolvent to half-wave, min {m}"));
        } else {
            vacuous += 1;
        }

        // Half-wave sum form to the generator resolvent.
        if ch.is_finite() {
            let l = ledger(&[("C1", ch), ("C2", ch), ("B_norm", b_norm), ("lambda", lambda)], ChainRule::HalfwaveToResolvent);
            let c = l.get("C").unwrap();
            tally.check(le(ca, c), || format!("{tag}: half-wave to resolvent, {ca} > {c}"));

            // Half-wave to spectral observability.
            let l = ledger(&[("C1", ch), ("C2", ch)], ChainRule::HalfwaveToSpectralObservability);
            let (c, mu) = (l.get("C").unwrap(), l.get("mu").unwrap());
            let sigma = annulus(lambda, s, mu, &grid).unwrap();
            if sigma.is_empty() {
                vacuous += 1;
            } else {
                let c0 = annihilation_one_sided(&grid, Observation::SqrtDamping(gen.sqrt_damping()), &sigma, &opts)
                    .unwrap()
                    .constant;
                tally.check(le(c0, c), || format!("{tag}: half-wave to observability, {c0} > {c}"));
            }
        } else {
            vacuous += 1;
        }

        // Spectral observability to the half-wave sum form.
        let mu0 = rng.random_range(0.25..2.0);
        let sigma0 = annulus(lambda, s, mu0, &grid).unwrap();
        let c0 = if sigma0.is_empty() {
            0.0
        } else {
            annihilation_one_sided(&grid, Observation::SqrtDamping(gen.sqrt_damping()), &sigma0, &opts).unwrap().constant
        };
        if c0.is_finite() {
            let l = ledger(&[("C0", c0), ("mu0", mu0), ("B_norm", b_norm)], ChainRule::SpectralObservabilityToHalfwave);
            let (c1, c2) = (l.get("C1").unwrap(), l.get("C2").unwrap());
            let m = sum_form_minimum(&x, &y, c1, c2);
            tally.check(m >= 1.0 - 1e-8, || format!("{tag}: observability to half-wave, min {m}"));
        } else {
            vacuous += 1;
        }

        // The mixed estimate comparing the damped and undamped generators.
        let undamped = Generator::new(&grid, s, &DampingSpec::constant(grid.dim(), grid.length(), 0.0).unwrap()).unwrap();
        let il = C::new(0.0, lambda);
        for k in 0..4u64 {
            let st = random_state(&grid, 1000 * inst as u64 + k);
            let z = gen.to_weighted(&st).unwrap();
            let norm = |v: &[C]| v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            let shifted = |g: &Generator<f64>| {
                let kz = g.apply_weighted(&z);
                kz.iter().zip(&z).map(|(a, b)| a - il * b).collect::<Vec<C>>()
            };
            let r0 = norm(&shifted(&undamped));
            let r = norm(&shifted(&gen));
            let bf2 = (gen.dissipation(&st) / 2.0).sqrt();
            let (c1, c2) = (rng.random_range(0.1..5.0), rng.random_range(0.1..5.0));
            let delta: f64 = 10f64.powf(rng.random_range(-1.5..1.5));
            let lhs = SQRT_2 * c1 * r0 + SQRT_2 * c2 * bf2;
            let w = c1 * b_norm + c2;
            let rhs = (SQRT_2 * c1 + w / delta) * r + delta * w * norm(&z);
            tally.check(le(lhs, rhs), || format!("{tag}: mixed generator estimate {lhs} > {rhs}"));
        }

        // Projection form and one-sided observability, for B = 1_{S^c} and B = √a.
        let eps = rng.random_range(0.05..1.0) * a_norm.max(1e-3);
        let mu = rng.random_range(0.5..3.0);
        let sub = sublevel_mask(&spec, &grid, eps).unwrap();
        let sigma = annulus(lambda, s, mu, &grid).unwrap();
        let fourier = grid.fourier();
        let ts = assemble(&TwoSided { sigma_mask: &sigma.mask, s_mask: &sub.mask, fourier: &fourier });
        let (off_sigma, off_s) = split_rows(&ts, n);
        let sqrt_a = DMatrix::<C>::from_diagonal(&nalgebra::DVector::from_iterator(
            n,
            gen.sqrt_damping().iter().map(|b| C::new(*b, 0.0)),
        ));
        let two = annihilation_two_sided(&sub, &sigma, &opts).unwrap().combined_constant;
        for (label, obs, b, y_obs) in [
            ("1_{S^c}", Observation::Complement(&sub), 1.0, &off_s),
            ("√a", Observation::SqrtDamping(gen.sqrt_damping()), b_norm, &sqrt_a),
        ] {
            let one = if sigma.is_empty() { 0.0 } else { annihilation_one_sided(&grid, obs, &sigma, &opts).unwrap().constant };
            if label == "1_{S^c}" && two.is_finite() {
                let l = ledger(&[("C1", two), ("C2", two)], ChainRule::ProjectionFormToObservability);
                let c = l.get("C").unwrap();
                tally.check(le(one, c), || format!("{tag}: projection form to observability, {one} > {c}"));
            }
            if one.is_finite() {
                let l = ledger(&[("C0", one), ("B_norm", b)], ChainRule::ObservabilityToProjectionForm);
                let (c1, c2) = (l.get("C1").unwrap(), l.get("C2").unwrap());
                let m = sum_form_minimum(&off_sigma, y_obs, c1, c2);
                tally.check(m >= 1.0 - 1e-8, || format!("{tag}: observability to projection form ({label}), min {m}"));
            } else {
                vacuous += 1;
            }
        }

        // Sublevel-set half-wave form to the generator resolvent.
        let chs = halfwave_set_constant(&gen, &sub, lambda, &opts).unwrap().constant;
        if chs.is_finite() {
            let l = ledger(
                &[("C1", chs), ("C2", chs), ("eps", eps), ("lambda", lambda), ("a_norm", a_norm)],
                ChainRule::SetHalfwaveToResolvent,
            );
            let c = l.get("C").unwrap();
            tally.check(le(ca, c), || format!("{tag}: sublevel half-wave to resolvent, {ca} > {c}"));
        } else {
            vacuous += 1;
        }

        // Generator resolvent to strong annihilation.
        if ca.is_finite() {
            let l = ledger(&[("C0", ca), ("a_norm", a_norm)], ChainRule::ResolventToAnnihilation);
            let (c, e, m) = (l.get("C").unwrap(), l.get("eps").unwrap(), l.get("mu").unwrap());
            let sub_e = sublevel_mask(&spec, &grid, e).unwrap();
            let sig_m = annulus(lambda, s, m, &grid).unwrap();
            let k = annihilation_sum_form(&sub_e, &sig_m, DEFAULT_DENSE_CAP).unwrap();
            tally.check(le(k, c), || format!("{tag}: resolvent to annihilation, {k} > {c}"));
        }

        // Strong annihilation to the generator resolvent.
        let eps0 = rng.random_range(0.05..1.0) * a_norm.max(1e-3);
        let mu0 = rng.random_range(0.25..2.0);
        let sub0 = sublevel_mask(&spec, &grid, eps0).unwrap();
        let sig0 = annulus(lambda, s, mu0, &grid).unwrap();
        let k = annihilation_sum_form(&sub0, &sig0, DEFAULT_DENSE_CAP).unwrap();
        if k.is_finite() {
            let l = ledger(
                &[("C0", k), ("eps0", eps0), ("mu0", mu0), ("a_norm", a_norm)],
                ChainRule::AnnihilationToResolvent,
            );
            let c = l.get("C").unwrap();
            tally.check(le(ca, c), || format!("{tag}: annihilation to resolvent, {ca} > {c}"));
            let (c1, c2) = (l.get("C1").unwrap(), l.get("C2").unwrap());
            let hs = assemble(&Halfwave { omega: gen.half_symbols(), multiplier: &sub0.complement_indicator(), fourier: gen.fourier(), lambda });
            let (xs, ys) = split_rows(&hs, n);
            let m = sum_form_minimum(&xs, &ys, c1, c2);
            tally.check(m >= 1.0 - 1e-8, || format!("{tag}: annihilation to sublevel half-wave, min {m}"));
        } else {
            vacuous += 1;
        }
    }
    Outcome::new(tally.ok(), format!("{}; {vacuous} vacuous implications skipped", tally.summary()))
}

fn elementary_inequalities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut tally = Tally::default();
    let sample_a = |rng: &mut ChaCha8Rng| if rng.random_bool(0.05) { 0.0 } else { 10f64.powf(rng.random_range(-6.0..3.0)) };
    for _ in 0..100_000 {
        let (a1, a2) = (sample_a(&mut rng), sample_a(&mut rng));
        if a1 + a2 == 0.0 {
            continue;
        }
        let r = rng.random_range(1e-4..=1.0);
        let b = concave_power(a1, a2, r).unwrap();
        tally.check(b.holds(1e-12), || format!("concave a1={a1} a2={a2} r={r}: {b:?}"));
    }
    for _ in 0..100_000 {
        let (a1, a2) = (rng.random_range(0.0..100.0), rng.random_range(0.0..100.0));
        let r = rng.random_range(1.0..6.0);
        if r <= 1.0 {
            continue;
        }
        let b = convex_power(a1, a2, r).unwrap();
        tally.check(b.holds(1e-12), || format!("convex a1={a1} a2={a2} r={r}: {b:?}"));
    }
    let mut exercised = 0usize;
    for _ in 0..10_000 {
        let lambda: f64 = rng.random_range(0.0..30.0);
        let s0: f64 = rng.random_range(0.1..4.0);
        let s = s0 * rng.random_range(1.0..4.0);
        let xi = rng.random_range(0.0..50.0);
        let b = higher_order_symbol(xi * xi, lambda, s, s0).unwrap();
        tally.check(b.holds(1e-12), || format!("higher order ξ={xi} λ={lambda} s={s} s0={s0}: {b:?}"));

        let s: f64 = rng.random_range(0.1..4.0);
        let s0 = s * rng.random_range(1.01..4.0);
        let p: f64 = rng.random_range(0.0..3.0);
        let mu0: f64 = rng.random_range(0.01..3.0);
        let q = (1.0 + p) * s0 / s - 1.0;
        let mu = (mu0 * s / s0).min(1.0);
        // ξ near the inner annulus so that membership is exercised.
        let target = (lambda + rng.random_range(-1.0..1.0) * mu * (1.0 + lambda).powf(-q)).max(1.0);
        let xi_sq = (target.powf(4.0 / s) - 1.0).max(0.0);
        let inc = lower_order_inclusion(xi_sq, lambda, s, s0, p, mu0).unwrap();
        exercised += usize::from(inc.in_inner);
        tally.check(inc.holds(1e-12), || format!("lower order λ={lambda} s={s} s0={s0} p={p}: {inc:?}"));
    }
    Outcome::new(tally.ok(), format!("{}; {exercised} inclusion samples inside the inner annulus", tally.summary()))
}

/// Unitary DFT matrix for a 1-d grid, entry by entry.
fn dft(n: usize) -> DMatrix<C> {
    DMatrix::from_fn(n, n, |j, k| {
        let th = -2.0 * PI * (j * k) as f64 / n as f64;
        C::new(th.cos(), th.sin()) / (n as f64).sqrt()
    })
}

fn svd_min(m: &DMatrix<C>) -> f64 {
    if m.nrows() < m.ncols() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.min()
}

fn annihilation_brute_force() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let opts = SolverOptions::default();
    let mut tally = Tally::default();
    let (mut stated_ok, mut stated_total, mut one_sided, mut worst) = (0usize, 0usize, 0usize, 0.0f64);
    for n in [8usize, 16] {
        let grid = TorusGrid::<f64>::new(1, n as f64 / 2.0, n).unwrap();
        let f = dft(n);
        let finv = f.adjoint();
        for pair in 0..50 {
            let s_mask: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
            let sig: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
            let sub = SublevelMask::from_mask(&grid, 0.5, s_mask.clone()).unwrap();
            let sigma = AnnulusSet::from_mask(sig.clone());

            let mut m = DMatrix::<C>::zeros(2 * n, n);
            for j in 0..n {
                if !sig[j] {
                    for k in 0..n {
                        m[(j, k)] = f[(j, k)];
                    }
                }
                if !s_mask[j] {
                    m[(n + j, j)] = C::new(1.0, 0.0);
                }
            }
            let oracle = svd_min(&m);
            let r = annihilation_two_sided(&sub, &sigma, &opts).unwrap();
            worst = worst.max((r.sigma_min - oracle).abs());
            tally.check((r.sigma_min - oracle).abs() <= 1e-8, || format!("N={n} #{pair} two-sided {} vs {oracle}", r.sigma_min));

            let modes: Vec<usize> = (0..n).filter(|k| sig[*k]).collect();
            if !modes.is_empty() {
                let b = DMatrix::from_fn(n, modes.len(), |i, j| if s_mask[i] { C::new(0.0, 0.0) } else { finv[(i, modes[j])] });
                let oracle = svd_min(&b);
                let p = annihilation_one_sided(&grid, Observation::Complement(&sub), &sigma, &opts).unwrap();
                worst = worst.max((p.sigma_min - oracle).abs());
                one_sided += 1;
                tally.check((p.sigma_min - oracle).abs() <= 1e-8, || format!("N={n} #{pair} one-sided {} vs {oracle}", p.sigma_min));
            }

            if r.sigma_min > 1e-6 {
                let c = r.combined_constant;
                let k = annihilation_sum_form(&sub, &sigma, DEFAULT_DENSE_CAP).unwrap();
                tally.check(k >= c / SQRT_2 * (1.0 - REL) && k <= c * (1.0 + REL), || {
                    format!("N={n} #{pair} sum form {k} outside [{}, {c}]", c / SQRT_2)
                });
                stated_total += 1;
                if k >= c * (1.0 - REL) && k <= SQRT_2 * c * (1.0 + REL) {
                    stated_ok += 1;
                }
            }
        }
    }
    let stated = stated_ok == stated_total;
    let detail = format!(
        "brute force: {} ({one_sided} one-sided), largest σ gap {worst:.1e}; sharp sum-form constant in [C/√2, C] for all \
         invertible pairs; stated interval [C, √2 C] holds for {stated_ok} of {stated_total} (it needs the sum form to dominate \
         the combined constant, but x + y >= (x² + y²)^{{1/2}} makes it at most C)",
        tally.summary()
    );
    Outcome { passed: tally.ok() && stated, blocking: !tally.ok(), detail }
}

fn annulus_geometry() -> Outcome {
    let mut tally = Tally::default();
    let w: f64 = annulus_shape(100.0, 2.0, 1.0).unwrap().width();
    tally.check((w - 2.0).abs() <= 0.02, || format!("width {w} at λ=100"));

    for r in [1.0, 10.0] {
        let b = ball_in_annulus(1.0f64, 1.0, r).unwrap();
        match b.shape {
            AnnulusShape::Annulus { r_inner, r_outer } => {
                let c = b.center[0].hypot(b.center[1]);
                tally.check(c - r > r_inner && c + r < r_outer, || format!("r={r}: radial interval"));
            }
            other => tally.check(false, || format!("r={r}: shape {other:?}")),
        }
        let mut inside = true;
        for i in 0..=64 {
            let rho = r * i as f64 / 64.0;
            for j in 0..128 {
                let th = 2.0 * PI * j as f64 / 128.0;
                let xi = [b.center[0] + rho * th.cos(), b.center[1] + rho * th.sin()];
                inside &= (half_symbol(1.0, &xi).unwrap() - b.lambda).abs() < 1.0;
            }
        }
        tally.check(inside, || format!("r={r}: a sampled point of the ball leaves the annulus"));
    }

    let mut sup = [0.0f64; 2];
    for d in 1..=2usize {
        for i in 0..=400 {
            let lambda = 2.0 * 500f64.powf(i as f64 / 400.0);
            let m = annulus_shape(lambda, 2.0 * d as f64, 1.0).unwrap().measure(d);
            let e = 2.0 / d as f64;
            let formula = (((lambda + 1.0).powf(e) - 1.0).powf(d as f64 / 2.0) - ((lambda - 1.0).powf(e) - 1.0).powf(d as f64 / 2.0))
                * unit_ball_volume::<f64>(d);
            tally.check((m - formula).abs() <= 1e-9 * formula, || format!("d={d} λ={lambda}: {m} vs {formula}"));
            sup[d - 1] = sup[d - 1].max(formula);
        }
    }
    // The limits as λ → ∞ are 4 in one dimension and 2π in two.
    tally.check(sup[0] <= 4.0 * 1.5 && sup[1] <= 2.0 * PI * 1.5, || format!("measure not bounded: {sup:?}"));
    Outcome::new(
        tally.ok(),
        format!("{}; width {w:.4} at λ=100, largest measure {:.3} (d=1) and {:.3} (d=2)", tally.summary(), sup[0], sup[1]),
    )
}

fn gcc_catalog() -> Outcome {
    let mut tally = Tally::default();
    let plan = SamplingPlan::default();
    let fine = plan.doubled();
    let balls = DampingSpec::<f64>::lattice_of_balls(10.0, 1.0, 0.25, 1.0).unwrap();
    let lines = DampingSpec::<f64>::grid_lines(10.0, 1.0, 0.1, 1.0).unwrap();
    let full = DampingSpec::<f64>::constant(2, 10.0, 1.0).unwrap();
    let eps = 0.5;
    let on_balls = Controlled { spec: &balls, epsilon: eps };
    let on_lines = Controlled { spec: &lines, epsilon: eps };

    for (label, p) in [("default", &plan), ("doubled", &fine)] {
        let dd = check_d_gcc(&on_balls, 1.0, p).unwrap();
        tally.check(dd.verdict == Verdict::Holds, || format!("{label}: balls d-GCC {:?}", dd.verdict));
        let one = check_one_gcc(&on_balls, 5.0, p).unwrap();
        tally.check(one.verdict == Verdict::Fails, || format!("{label}: balls 1-GCC {:?}", one.verdict));
        match one.witness.and_then(|w| w.direction.map(|e| (w.point, e))) {
            Some((x, e)) => {
                // The whole line through the witness avoids the damped set.
                let mut clear = true;
                for i in 0..=4000 {
                    let t = -10.0 + 20.0 * i as f64 / 4000.0;
                    clear &= balls.eval_wrapped(&[x[0] + t * e[0], x[1] + t * e[1]]) < eps;
                }
                tally.check(clear, || format!("{label}: witness line meets a ball"));
            }
            None => tally.check(false, || format!("{label}: no line witness")),
        }
        let l1 = check_one_gcc(&on_lines, 5.0, p).unwrap();
        tally.check(l1.verdict == Verdict::Holds, || format!("{label}: lines 1-GCC {:?}", l1.verdict));
    }
    for n in [32usize, 64] {
        let grid = TorusGrid::<f64>::new(2, 10.0, n).unwrap();
        let z = check_zero_gcc(&full, &grid, eps).unwrap();
        tally.check(z.verdict == Verdict::Holds, || format!("N={n}: full damping 0-GCC {:?}", z.verdict));
    }
    Outcome::new(tally.ok(), format!("{}; verdicts equal at default and doubled sampling", tally.summary()))
}

fn q(n: i64, d: i64) -> Q {
    Ratio::new(n, d)
}

fn golden_tables() -> Outcome {
    use Truth::{Fails as F, Holds as H, Unknown as U};
    let facts = |d: usize, s: Q, zero: Truth, one: Truth, dd: Truth| Facts::new(d, s).with_gcc(zero, one, dd);
    let with = |f: Facts<Q>, edit: &dyn Fn(&mut StructuralFacts)| {
        let mut st = f.structural;
        edit(&mut st);
        f.with_structural(st)
    };
    let run = |f: &Facts<Q>| -> Classification<Q> { classify(f).expect("consistent facts") };
    let is = |c: &Classification<Q>, tag: ClassTag, rate: Option<Q>| c.class.tag == tag && (rate.is_none() || c.class.rate == rate);
    let uc = |st: &mut StructuralFacts| st.uniformly_continuous = H;
    let cont = |st: &mut StructuralFacts| st.continuous = H;
    let mut t = Tally::default();

    for s in [q(1, 2), q(1, 1), q(3, 2)] {
        let poly = Some(s / (q(4, 1) - s * 2));
        t.check(is(&run(&facts(1, s, H, U, U)), ClassTag::Exponential, None), || format!("1d s={s}: 0-GCC"));
        t.check(run(&facts(1, s, F, U, U)).excludes(ClassTag::Exponential), || format!("1d s={s}: no 0-GCC"));
        t.check(is(&run(&facts(1, s, U, H, U)), ClassTag::Polynomial, poly), || format!("1d s={s}: 1-GCC"));
        t.check(run(&facts(1, s, U, F, U)).excludes(ClassTag::SmallO), || format!("1d s={s}: no 1-GCC"));
        let crossed = run(&facts(1, s, F, H, U));
        t.check(is(&crossed, ClassTag::Polynomial, poly) && crossed.excludes(ClassTag::Exponential), || {
            format!("1d s={s}: 1-GCC without 0-GCC")
        });
    }
    for s in [q(2, 1), q(3, 1), q(5, 1)] {
        let c = run(&facts(1, s, U, H, U));
        t.check(
            is(&c, ClassTag::Exponential, None) && c.class.provenance.iter().any(|p| p.rule == "segment-control-line"),
            || format!("1d s={s}: 1-GCC"),
        );
        t.check(run(&facts(1, s, U, F, U)).excludes(ClassTag::SmallO), || format!("1d s={s}: no 1-GCC"));
        t.check(is(&run(&facts(1, s, U, U, H)), ClassTag::Exponential, None), || format!("1d s={s}: d-GCC"));
    }
    for s in [q(1, 2), q(1, 1), q(3, 2)] {
        t.check(is(&run(&facts(2, s, H, U, U)), ClassTag::Exponential, None), || format!("2d s={s}: 0-GCC"));
        t.check(run(&facts(2, s, F, U, U)).excludes(ClassTag::Exponential), || format!("2d s={s}: no 0-GCC"));
        let c = run(&with(facts(2, s, F, H, U), &uc));
        t.check(is(&c, ClassTag::Polynomial, Some(s / (q(4, 1) - s * 2))), || format!("2d s={s}: 1-GCC, continuous"));
        t.check(is(&run(&facts(2, s, F, H, U)), ClassTag::Logarithmic, Some(s / 2)), || format!("2d s={s}: 1-GCC only"));
        t.check(is(&run(&facts(2, s, U, U, H)), ClassTag::Logarithmic, Some(s / 2)), || format!("2d s={s}: d-GCC"));
        t.check(run(&facts(2, s, U, U, F)).excludes(ClassTag::SmallO), || format!("2d s={s}: no d-GCC"));
        let c = run(&facts(2, s, F, F, H));
        t.check(is(&c, ClassTag::Logarithmic, Some(s / 2)) && !c.excludes(ClassTag::Logarithmic), || {
            format!("2d s={s}: d-GCC without 1-GCC")
        });
    }
    {
        let s = q(2, 1);
        t.check(is(&run(&with(facts(2, s, U, H, U), &uc)), ClassTag::Exponential, None), || "2d s=2: 1-GCC".into());
        t.check(run(&with(facts(2, s, U, F, U), &cont)).excludes(ClassTag::Exponential), || "2d s=2: no 1-GCC".into());
        let c = run(&with(facts(2, s, F, F, H), &cont));
        t.check(
            is(&c, ClassTag::Logarithmic, Some(q(1, 1)))
                && c.excludes(ClassTag::Exponential)
                && c.class.provenance.iter().any(|p| p.rule == "thick-complement"),
            || "2d s=2: d-GCC without 1-GCC".into(),
        );
        t.check(run(&facts(2, s, U, U, F)).excludes(ClassTag::SmallO), || "2d s=2: no d-GCC".into());
    }
    for s in [q(5, 2), q(3, 1), q(4, 1)] {
        t.check(is(&run(&with(facts(2, s, U, H, U), &uc)), ClassTag::Exponential, None), || format!("2d s={s}: 1-GCC"));
        t.check(is(&run(&facts(2, s, U, U, H)), ClassTag::Logarithmic, Some(s / 2)), || format!("2d s={s}: d-GCC"));
        t.check(run(&facts(2, s, U, U, F)).excludes(ClassTag::SmallO), || format!("2d s={s}: no d-GCC"));
        t.check(!run(&with(facts(2, s, U, F, H), &cont)).excludes(ClassTag::Exponential), || {
            format!("2d s={s}: failing 1-GCC does not exclude exponential")
        });
    }
    for s in [q(4, 1), q(5, 1), q(8, 1)] {
        t.check(is(&run(&with(facts(2, s, U, H, U), &uc)), ClassTag::Exponential, None), || format!("s={s}: 1-GCC"));
        let c = run(&with(facts(2, s, F, F, U), &|st: &mut StructuralFacts| st.periodic_superset = H));
        t.check(
            is(&c, ClassTag::Exponential, None)
                && c.excluded.is_empty()
                && c.class.provenance.iter().any(|p| p.rule == "periodic-superset"),
            || format!("s={s}: exponential without 1-GCC"),
        );
    }
    Outcome::new(t.ok(), t.summary())
}

fn extrapolation_specializations() -> Outcome {
    let mut t = Tally::default();
    let exp = StabilityClass::<Q>::exponential();
    let one = Q::from_integer(1);
    for k in 1..=64 {
        let s = q(k, 8);
        for d in 1..=2i64 {
            if s < q(2 * d, 1) {
                let c = extrapolate(&exp, q(2 * d, 1), s).unwrap();
                t.check(c.rate == Some(one / (q(4 * d, 1) / s - 2)), || format!("(4d/s-2)^-1 d={d} s={s}: {:?}", c.rate));
            }
            t.check(q(2, 1) * exponent_q(s, q(2 * d, 1), q(0, 1)) == q(4 * d, 1) / s - 2, || format!("2q d={d} s={s}"));
        }
        if s < q(4, 1) {
            let c = extrapolate(&exp, q(4, 1), s).unwrap();
            t.check(c.rate == Some(one / (q(8, 1) / s - 2)), || format!("(8/s-2)^-1 s={s}: {:?}", c.rate));
            let via_rule = strong_poly_rule(q(0, 1), q(4, 1), s).unwrap();
            t.check(via_rule.rate == c.rate, || format!("strong rule s={s}"));
        } else {
            t.check(extrapolate(&exp, q(4, 1), s).unwrap().tag == ClassTag::Exponential, || format!("s={s} >= 4"));
        }
        if s < q(2, 1) {
            let c = extrapolate(&exp, q(2, 1), s).unwrap();
            t.check(c.rate == Some(s / (q(4, 1) - s * 2)), || format!("s/(4-2s) s={s}: {:?}", c.rate));
        }
    }
    Outcome::new(t.ok(), format!("{} over s = k/8, k = 1..64", t.summary()))
}

fn end_to_end_smoke() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        r#"
name = "smoke"
s = [2.0, 4.0]
output = "{}"
analyses = ["simulate", "gcc_check", "classify"]

[grid]
d = 2
L = 8.0
N = 32

[damping]
kind = "lattice_of_balls"
spacing = 2.0
radius = 0.75
level = 2.0

[facts]
infer_from_damping = true

[gcc_check]
r = 1.5
ell = 4.0

[simulate]
T = 200.0
n = 401
method = "strang"
dt = 0.01
smooth = true
"#,
        dir.path().display()
    );
    let scn = parse_str(&text).unwrap();
    let report = run_scenario(&scn).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let mut t = Tally::default();
    let mut parts = Vec::new();
    for run in &report.runs {
        let sim = run.simulate.as_ref().and_then(|o| o.ok());
        let Some(sim) = sim else {
            t.check(false, || format!("s={}: simulation failed", run.s));
            continue;
        };
        let fit = &sim.selected.fit;
        parts.push(format!("s={} fitted {:?} rate {:.3e}, {:?}", run.s, fit.model, fit.rate, run.conformance.status));
        if run.s == 4.0 {
            t.check(fit.model == Model::Exponential && fit.rate > 0.0, || format!("s=4 fitted {:?}", fit.model));
        } else {
            t.check(sim.smooth && matches!(fit.model, Model::Exponential | Model::Polynomial), || {
                format!("s={} fitted {:?}", run.s, fit.model)
            });
        }
        t.check(run.conformance.status == ConformanceStatus::Consistent, || format!("s={}: {:?}", run.s, run.conformance));
    }
    t.check(secs <= 300.0, || format!("{secs:.1} s"));
    Outcome::new(
        t.ok(),
        format!("qualitative class check only; {}; {}; {secs:.1} s (<= 300 s)", t.summary(), parts.join(", ")),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("closed-form oracle equivalence", closed_form_oracle),
        ("dissipation and contraction", dissipation_and_contraction),
        ("constant-damping decay rate", constant_damping_rate),
        ("skew-adjoint identity", skew_identity),
        ("diagonalization residual", diagonalization_residual),
        ("constant-chain conformance", constant_chains),
        ("elementary inequalities", elementary_inequalities),
        ("annihilation brute-force equivalence", annihilation_brute_force),
        ("annulus geometry", annulus_geometry),
        ("GCC catalog", gcc_catalog),
        ("classifier golden tables", golden_tables),
        ("extrapolation consistency", extrapolation_specializations),
        ("end-to-end smoke", end_to_end_smoke),
    ];
    let mut blocking = 0;
    for (i, (title, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome::new(false, format!("panicked: {msg}"))
        });
        let word = if outcome.passed { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {word}: {title} ({:.1} s): {}", i + 1, start.elapsed().as_secs_f64(), outcome.detail);
        if outcome.blocking {
            blocking += 1;
        }
    }
    if blocking == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
