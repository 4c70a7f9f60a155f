//! The slab scheme against direct solves on data with a nonzero rough part.

use lpnls::data::{power_law, random_smooth};
use lpnls::decomposition::d_class_decompose;
use lpnls::globalization::{globalize, l2_growth_audit, make_plan, run_scheme, SchemeOptions};
use lpnls::norms::sup_l2_distance;
use lpnls::solver::{solve_difference, solve_nls_sampled, Scheme, SolverConfig};
use lpnls::GridSpec;

#[test]
fn v_plus_w_solves_the_full_problem() {
    // Direct solve of φ + ψ versus v(φ) + w(v, ψ) on the same mesh.
    let g = GridSpec::new(1024, 40.0).unwrap();
    let phi = random_smooth(g, 11, 1.0).unwrap();
    let psi = random_smooth(g, 12, 2.0).unwrap().scale(0.2.into());
    let times: Vec<f64> = (0..=10).map(|i| 0.05 * i as f64).collect();
    let cfg = SolverConfig::new(1e-3);
    let v = solve_nls_sampled(&phi, &times, &cfg).unwrap().trajectory;
    let w = solve_difference(&v, &psi, &cfg).unwrap();
    let u = solve_nls_sampled(&phi.add(&psi).unwrap(), &times, &cfg).unwrap().trajectory;
    assert!(sup_l2_distance(&v.add(&w).unwrap(), &u).unwrap() < 1e-10);
}

#[test]
fn picard_scheme_tracks_direct_solve() {
    let g = GridSpec::new(1024, 100.0).unwrap();
    let f = power_law(g, 0.49, 1.0).unwrap();
    let pair = d_class_decompose(&f, 2.9, 0.18125, 4.0).unwrap();
    let plan = make_plan(2.9, 0.18125, 4.0, 4.0, pair.c0_fit, 1.0).unwrap();
    let cfg = SolverConfig::new(1e-3).with_scheme(Scheme::PicardDuhamel);
    let run = run_scheme(&pair, &plan, &cfg, &SchemeOptions::default()).unwrap();
    assert!(run.completed());
    let direct = solve_nls_sampled(&f, run.u.times(), &SolverConfig::new(1e-3)).unwrap();
    assert!(sup_l2_distance(&run.u, &direct.trajectory).unwrap() < 1e-8);
    assert!(l2_growth_audit(&run.records, &plan).unwrap().ratio_ok);
}

#[test]
fn budget_violation_escalates_m() {
    // A C₀ far below the fitted constant breaks the first φ budget; doubling
    // M does not repair it, so every attempt is logged and the last returned.
    let g = GridSpec::new(512, 100.0).unwrap();
    let f = power_law(g, 0.49, 1.0).unwrap();
    let pair = d_class_decompose(&f, 2.9, 0.18125, 4.0).unwrap();
    let plan = make_plan(2.9, 0.18125, 4.0, 4.0, 0.1, 1.0).unwrap();
    let out = globalize(&pair, &plan, &SolverConfig::new(1e-3), &SchemeOptions::default(), 2).unwrap();
    assert_eq!(out.escalations, 2);
    assert_eq!(out.attempts.iter().map(|a| a.0).collect::<Vec<_>>(), [4.0, 8.0, 16.0]);
    assert_eq!(out.run.halted_at, Some(1));
    assert!(!out.run.records[0].phi_budget_ok);
}
