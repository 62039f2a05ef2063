//! Fast built-in checks of the numerical core against independent formulas.

use kgstab::damping::{sublevel_mask, DampingSpec};
use kgstab::evolution::{constant_damping_closed_form, decay_curve, energy, random_state, Generator, Method};
use kgstab::linalg::SolverOptions;
use kgstab::ratefit::{select_series, Model, WindowSpec};
use kgstab::resolvent::{annihilation_sum_form, annihilation_two_sided};
use kgstab::spectral::{annulus, TorusGrid};
use kgstab::theory::inequalities::concave_power;
use kgstab::theory::{classify, ClassTag, Facts, Truth};

pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, f: impl FnOnce() -> kgstab::Result<(bool, String)>) -> Check {
    match f() {
        Ok((passed, detail)) => Check { name, passed, detail },
        Err(e) => Check { name, passed: false, detail: format!("error: {e}") },
    }
}

pub fn run_selftest() -> Vec<Check> {
    vec![
        check("constant damping matches the closed form", || {
            let grid = TorusGrid::<f64>::new(1, 8.0, 16)?;
            let spec = DampingSpec::constant(1, 8.0, 1.0)?;
            let gen = Generator::new(&grid, 2.0, &spec)?;
            let x0 = random_state(&grid, 1);
            let traj = decay_curve(&gen, &x0, 4.0, 9, false, Method::DenseExpm, 4096)?;
            let mut worst = 0.0f64;
            for (t, e) in traj.times.iter().zip(&traj.energies) {
                let exact = energy(&constant_damping_closed_form(1.0, 2.0, &x0, *t)?, 2.0)?;
                worst = worst.max((e - exact).abs() / exact);
            }
            Ok((worst < 1e-8, format!("max relative error {worst:.2e}")))
        }),
        check("energy identity of the generator", || {
            let grid = TorusGrid::<f64>::new(2, 6.0, 8)?;
            let spec = DampingSpec::finite_measure(2, 6.0, 1.5, 2.0)?;
            let gen = Generator::new(&grid, 1.5, &spec)?;
            let x = random_state(&grid, 2);
            let (re, loss) = gen.skew_identity(&x, 0.7)?;
            let err = (re + loss).abs() / loss.max(1e-300);
            Ok((err < 1e-10, format!("relative mismatch {err:.2e}")))
        }),
        check("power difference inequality", || {
            let b = concave_power(3.0, 0.5, 0.4)?.holds(1e-12);
            Ok((b, "a1 = 3, a2 = 0.5, r = 0.4".into()))
        }),
        check("classifier on uniformly damped torus", || {
            let facts = Facts::new(2, 2.0).with_gcc(Truth::Holds, Truth::Holds, Truth::Holds);
            let c = classify(&facts)?;
            Ok((c.class.tag == ClassTag::Exponential, format!("class {}", c.class.tag.name())))
        }),
        check("sum-form constant inside its interval", || {
            let grid = TorusGrid::<f64>::new(1, 16.0, 32)?;
            let spec = DampingSpec::interval_gap(16.0, 2.0, 1.0)?;
            let sub = sublevel_mask(&spec, &grid, 0.5)?;
            let set = annulus(3.0, 2.0, 1.0, &grid)?;
            let two = annihilation_two_sided(&sub, &set, &SolverOptions::default())?;
            let sharp = annihilation_sum_form(&sub, &set, 4096)?;
            let [lo, hi] = two.sum_form_bounds;
            let ok = sharp >= lo * (1.0 - 1e-8) && sharp <= hi * (1.0 + 1e-8);
            Ok((ok, format!("{sharp:.4} in [{lo:.4}, {hi:.4}]")))
        }),
        check("rate fit recovers a synthetic exponential", || {
            let times: Vec<f64> = (0..101).map(|i| i as f64 * 0.2).collect();
            let energies: Vec<f64> = times.iter().map(|t| 3.0 * (-0.8 * t).exp()).collect();
            let sel = select_series(&times, &energies, WindowSpec::TailHalf)?;
            let ok = sel.selected.model == Model::Exponential && (sel.selected.rate - 0.4).abs() < 1e-6;
            Ok((ok, format!("{} rate {:.6}", sel.selected.model.name(), sel.selected.rate)))
        }),
    ]
}
