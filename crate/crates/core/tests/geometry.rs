use kgstab::damping::*;
use kgstab::geometry::*;
use kgstab::spectral::{unit_ball_volume, Point, TorusGrid};
use proptest::prelude::*;

fn everything(d: usize) -> Predicate<f64, impl Fn(&Point<f64>) -> bool + Sync> {
    Predicate { d, extent: 10.0, period: 10.0, f: |_: &Point<f64>| true }
}

fn nothing(d: usize) -> Predicate<f64, impl Fn(&Point<f64>) -> bool + Sync> {
    Predicate { d, extent: 10.0, period: 10.0, f: |_: &Point<f64>| false }
}

#[test]
fn zero_gcc_examples() {
    let g = TorusGrid::<f64>::new(2, 10.0, 32).unwrap();
    let c = DampingSpec::<f64>::constant(2, 10.0, 1.0).unwrap();
    let r = check_zero_gcc(&c, &g, 0.5).unwrap();
    assert_eq!(r.verdict, Verdict::Holds);
    assert_eq!(r.infimum_estimate, 1.0);
    assert!(r.witness.is_none());
    let ball = DampingSpec::<f64>::finite_measure(2, 10.0, 1.0, 1.0).unwrap();
    let r = check_zero_gcc(&ball, &g, 0.5).unwrap();
    assert_eq!(r.verdict, Verdict::Fails);
    let w = r.witness.unwrap().point;
    assert!(w[0].hypot(w[1]) <= 1.0);
    assert!(check_zero_gcc(&c, &g, 0.0).is_err());
}

#[test]
fn d_gcc_examples() {
    let plan = SamplingPlan::default();
    for d in 1..=2 {
        let r = check_d_gcc(&everything(d), 1.0, &plan).unwrap();
        assert_eq!(r.verdict, Verdict::Holds);
        let vol = unit_ball_volume::<f64>(d);
        assert!((r.infimum_estimate - vol).abs() < 0.05 * vol, "{d} {}", r.infimum_estimate);
        let r = check_d_gcc(&nothing(d), 1.0, &plan).unwrap();
        assert_eq!(r.verdict, Verdict::Fails);
        assert_eq!(r.infimum_estimate, 0.0);
    }
    let balls = DampingSpec::<f64>::lattice_of_balls(10.0, 1.0, 0.3, 1.0).unwrap();
    let damped = Controlled { spec: &balls, epsilon: 0.5 };
    assert_eq!(check_d_gcc(&damped, 1.0, &plan).unwrap().verdict, Verdict::Holds);
    assert_eq!(check_d_gcc(&Complement(damped), 1.0, &plan).unwrap().verdict, Verdict::Holds);
    assert!(check_d_gcc(&everything(2), 6.0, &plan).is_err());
    assert!(check_d_gcc(&everything(2), 0.0, &plan).is_err());
}

#[test]
fn one_gcc_examples() {
    let plan = SamplingPlan::default();
    let r = check_one_gcc(&everything(2), 5.0, &plan).unwrap();
    assert_eq!(r.verdict, Verdict::Holds);
    assert!((r.infimum_estimate - 5.0).abs() < 1e-12);

    let balls = DampingSpec::<f64>::lattice_of_balls(10.0, 1.0, 0.25, 1.0).unwrap();
    let r = check_one_gcc(&Controlled { spec: &balls, epsilon: 0.5 }, 5.0, &plan).unwrap();
    assert_eq!(r.verdict, Verdict::Fails);
    let w = r.witness.unwrap();
    let e = w.direction.unwrap();
    let axis_aligned = e[1].abs() < 1e-12 || e[0].abs() < 1e-12;
    assert!(axis_aligned, "{e:?}");
    // The line misses every ball, so its offset sits between lattice rows.
    let off = if e[1].abs() < 1e-12 { w.point[1] } else { w.point[0] };
    let frac = off - off.round();
    assert!(frac.abs() > 0.25 - 1e-12, "{off}");

    let lines = DampingSpec::<f64>::grid_lines(10.0, 1.0, 0.1, 1.0).unwrap();
    let r = check_one_gcc(&Controlled { spec: &lines, epsilon: 0.5 }, 5.0, &plan).unwrap();
    assert_eq!(r.verdict, Verdict::Holds);

    let slabs = Predicate { d: 1, extent: 10.0, period: 2.0, f: |x: &Point<f64>| x[0].abs() < 0.3 };
    let r = check_one_gcc(&slabs, 5.0, &plan).unwrap();
    assert_eq!(r.verdict, Verdict::Holds);
    assert!((r.infimum_estimate - 1.2).abs() < 0.05, "{}", r.infimum_estimate);
    assert!(check_one_gcc(&slabs, 0.0, &plan).is_err());
}

#[test]
fn verdicts_stable_under_refinement() {
    let plan = SamplingPlan::default();
    let fine = plan.doubled();
    let balls = DampingSpec::<f64>::lattice_of_balls(10.0, 1.0, 0.25, 1.0).unwrap();
    let lines = DampingSpec::<f64>::grid_lines(10.0, 1.0, 0.1, 1.0).unwrap();
    for spec in [&balls, &lines] {
        let omega = Controlled { spec, epsilon: 0.5 };
        let a = check_one_gcc(&omega, 5.0, &plan).unwrap();
        let b = check_one_gcc(&omega, 5.0, &fine).unwrap();
        assert_eq!(a.verdict, b.verdict);
        let a = check_d_gcc(&omega, 1.0, &plan).unwrap();
        let b = check_d_gcc(&omega, 1.0, &fine).unwrap();
        assert_eq!(a.verdict, b.verdict);
        assert!((a.infimum_estimate - b.infimum_estimate).abs() < 0.1 * a.reference);
    }
}

#[test]
fn grid_sampled_region_flags_boundary() {
    let g = TorusGrid::<f64>::new(2, 8.0, 32).unwrap();
    let mask: Vec<bool> = (0..g.len()).map(|k| g.node(k)[0] >= 3.0).collect();
    let r = check_one_gcc(&NodeMask { grid: &g, mask: &mask }, 2.0, &SamplingPlan::default()).unwrap();
    assert_ne!(r.verdict, Verdict::Holds);
}

#[test]
fn shrink_ball() {
    let g = TorusGrid::<f64>::new(2, 8.0, 64).unwrap();
    let base: Vec<bool> = (0..g.len()).map(|k| {
        let x = g.node(k);
        x[0].hypot(x[1]) <= 1.0
    }).collect();
    let s = shrink(&g, &base, 0.25).unwrap();
    let h = g.spacing();
    for k in 0..g.len() {
        let x = g.node(k);
        let r = x[0].hypot(x[1]);
        assert!(!s.contains(k) || base[k]);
        if r <= 0.75 - 2.0 * h {
            assert!(s.contains(k), "{r}");
        }
        if r > 0.75 + h {
            assert!(!s.contains(k), "{r}");
        }
    }
    assert!(shrink(&g, &base, 0.0).is_err());
    assert!(shrink(&g, &base[1..], 0.1).is_err());
}

proptest! {
    #[test]
    fn shrink_is_monotone(d1 in 0.05f64..1.0, extra in 0.0f64..1.0, radius in 0.5f64..3.0) {
        let g = TorusGrid::<f64>::new(2, 8.0, 32).unwrap();
        let spec = DampingSpec::<f64>::finite_measure(2, 8.0, radius, 1.0).unwrap();
        let base = sublevel_mask(&spec, &g, 0.5).unwrap();
        let a = shrink(&g, &base.mask, d1).unwrap();
        let b = shrink(&g, &base.mask, d1 + extra).unwrap();
        for k in 0..g.len() {
            prop_assert!(!a.contains(k) || base.mask[k]);
            prop_assert!(!b.contains(k) || a.contains(k));
        }
        let ctrl = controlled_nodes(&base);
        prop_assert!(ctrl.iter().zip(&base.mask).all(|(c, m)| c != m));
    }
}
