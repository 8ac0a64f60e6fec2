//! Structural properties of the discrete flow and the cascade on small grids.

use heisenberg_lab::cascade::{
    bounded_perturbation_compare, comparison_in_potential, potential_field, run_cascade, weighted_mass_check,
    CascadeConfig, InitialData, SourceData, Verdict, ORDER_TOL,
};
use heisenberg_lab::grid::{assemble_sublaplacian, evolve, EvolveOptions, GridField, GridSpec};
use heisenberg_lab::group::{BoundedPart, GroupPoint, PotentialSpec};
use proptest::prelude::*;

fn small(c: f64) -> CascadeConfig {
    CascadeConfig {
        grid: GridSpec::symmetric(1, 1.0, 1.0, 12).unwrap(),
        n_schedule: vec![1, 3, 10, 30],
        u0: InitialData::Bump { radius: 0.6, mass: 1.0 },
        t_final: 0.1,
        samples: 5,
        probes: vec![
            GroupPoint::new(vec![0.25], vec![0.0], 0.0).unwrap(),
            GroupPoint::new(vec![0.0], vec![0.3], 0.1).unwrap(),
        ],
        ..CascadeConfig::reference(c)
    }
}

fn quick() -> ProptestConfig {
    ProptestConfig {
        cases: 6,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(quick())]

    #[test]
    fn cascade_is_monotone_in_n(c in 0.0f64..6.0, amp in 0.0f64..2.0) {
        let mut cfg = small(c);
        cfg.source = SourceData::Bump { radius: 0.5, amplitude: amp };
        let r = run_cascade(&cfg).unwrap();
        for run in &r.runs {
            prop_assert!(run.monotonicity_margin.unwrap_or(0.0) >= -ORDER_TOL);
            prop_assert!(run.free_flow_margin >= -ORDER_TOL);
            prop_assert!(run.samples.iter().all(|s| s.min_value >= 0.0));
        }
    }

    #[test]
    fn solutions_are_ordered_by_the_coefficient(c in 0.0f64..3.0, dc in 0.0f64..3.0) {
        let cfg = small(c);
        prop_assert!(comparison_in_potential(&cfg, c + dc).unwrap() >= -1e-10);
    }

    #[test]
    fn bounded_perturbations_are_dominated(amp in 0.1f64..2.0, seed in 0u64..1000) {
        let mut cfg = small(0.5);
        cfg.bounded_part = Some(BoundedPart::Hashed { amplitude: amp, seed, cell: 0.2 });
        let r = bounded_perturbation_compare(&cfg, None).unwrap();
        prop_assert!(r.worst <= 1e-10, "{:?}", r);
    }

    #[test]
    fn potential_scales_like_the_sub_laplacian(x in -1.0f64..1.0, y in -1.0f64..1.0, l in -1.0f64..1.0, lam in 0.2f64..5.0) {
        let w = GroupPoint::new(vec![x], vec![y], l).unwrap();
        prop_assume!(w.gauge() > 1e-3);
        let v = PotentialSpec::hardy(0.7);
        let lhs = v.eval(&w.dilate(lam).unwrap());
        let rhs = v.eval(&w) / (lam * lam);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
        prop_assert!((w.dilate(lam).unwrap().gauge() - lam * w.gauge()).abs() <= 1e-12 * lam);
    }
}

#[test]
fn constant_perturbation_is_an_exact_factor() {
    let mut cfg = small(0.5);
    let b = 0.8;
    cfg.bounded_part = Some(BoundedPart::Constant { value: b });
    let r = bounded_perturbation_compare(&cfg, Some(b)).unwrap();
    assert!(r.worst.abs() <= 1e-10, "{r:?}");
}

#[test]
fn free_flow_does_not_gain_mass() {
    let cfg = small(0.0);
    let r = run_cascade(&cfg).unwrap();
    let u0 = cfg.u0.field(&cfg.grid).unwrap();
    let m0: f64 = u0.values.iter().sum();
    for &n in &cfg.n_schedule {
        let m: f64 = r.final_field(n).unwrap().values.iter().sum();
        assert!(m <= m0 * (1.0 + 1e-12), "n = {n}: {m} > {m0}");
    }
}

#[test]
fn inconsistent_alpha_is_rejected() {
    let mut cfg = small(0.75);
    cfg.alpha_override = Some(0.3);
    let r = run_cascade(&cfg).unwrap();
    assert!(weighted_mass_check(&r, &cfg).is_err());
}

#[test]
fn cascade_is_reproducible() {
    let cfg = small(2.0);
    let a = run_cascade(&cfg).unwrap();
    let b = run_cascade(&cfg).unwrap();
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    for (x, y) in a.final_fields.iter().zip(&b.final_fields) {
        assert!(x.values.iter().zip(&y.values).all(|(p, q)| p.to_bits() == q.to_bits()));
    }
}

#[test]
fn short_schedule_is_indeterminate() {
    let mut cfg = small(0.5);
    cfg.n_schedule = vec![1, 10];
    let r = run_cascade(&cfg).unwrap();
    assert_eq!(r.classification.verdict, Verdict::Indeterminate);
    assert!(!r.classification.notes.is_empty());
}

#[test]
fn critical_coefficient_is_flagged() {
    let r = run_cascade(&small(1.0)).unwrap();
    assert!(r.classification.critical);
}

#[test]
fn identical_levels_are_reused() {
    let r = run_cascade(&small(0.5)).unwrap();
    // The grid maximum of V is below 3, so every later level repeats n = 3.
    assert!(r.grid_sup_potential < 3.0);
    assert_eq!(r.run(10).unwrap().reused_from, Some(3));
    assert_eq!(r.run(30).unwrap().reused_from, Some(3));
}

#[test]
fn solution_dominates_free_flow_with_source() {
    let spec = GridSpec::symmetric(1, 1.0, 1.0, 10).unwrap();
    let a = assemble_sublaplacian(&spec).unwrap();
    let u0 = GridField::from_fn(&spec, |p| (1.0 - p.gauge()).max(0.0));
    let v = potential_field(&spec, &PotentialSpec::hardy(2.0).truncated(5));
    let f = GridField::constant(&spec, 0.3);
    let zero = GridField::zeros(&spec);
    let mut opts = EvolveOptions::new(0.01, 0.2);
    opts.keep_snapshots = true;
    let u = evolve(&u0, &a, &v, &f, &opts).unwrap();
    let free = evolve(&u0, &a, &zero, &zero, &opts).unwrap();
    for (s, t) in u.snapshots.iter().zip(&free.snapshots) {
        assert!(s.values.iter().zip(&t.values).all(|(p, q)| p - q >= -1e-12));
    }
}
