//! The acceptance suite: one check per criterion, each returning a
//! [`CheckOutcome`] with the measured numbers.

use std::collections::BTreeMap;

use num_complex::Complex64;
use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::{random_smooth, soliton_profile};
use crate::decomposition::{d_class_decompose, decomposition_sweep, loglog_slope, p_theta_exact, theta_from_target_exact};
use crate::error::Result;
use crate::experiment::{run_evolve, run_globalize, ExperimentConfig};
use crate::exponents::q_exponent_exact;
use crate::globalization::{
    dilate, globalcond_threshold_exact, globalize, make_plan, strichartz_ratio, strichartz_single,
    uniqueness_overlap, SchemeOptions, StrichartzFlavor, StrichartzOptions,
};
use crate::report::{CheckOutcome, RunReport, Table};
use crate::solver::{difference_nonlinearity, factorization_check, factorization_residual, solve_nls, SolverConfig};
use crate::spectral::{fourier_lp_norm, free_propagate, relative_l2_distance, Field, GridSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct AcceptanceOptions {
    /// Multiplies grid points and divides time steps.
    pub scale: f64,
    pub seed: u64,
    /// Ensemble size for the random-field checks.
    pub ensemble: usize,
}

impl Default for AcceptanceOptions {
    fn default() -> Self {
        Self {
            scale: 1.0,
            seed: 0,
            ensemble: 100,
        }
    }
}

impl AcceptanceOptions {
    fn grid(&self) -> Result<GridSpec> {
        GridSpec::new((4096.0 * self.scale) as usize, 100.0)
    }

    fn dt(&self) -> f64 {
        1e-4 / self.scale
    }

    fn config(&self) -> Result<ExperimentConfig> {
        ExperimentConfig::builtin("default")
            .expect("built-in default exists")
            .with_resolution_scale(self.scale)
    }

    fn fields(&self, grid: GridSpec, offset: u64, count: usize) -> Result<Vec<Field>> {
        (0..count as u64)
            .into_par_iter()
            .map(|i| random_smooth(grid, self.seed + offset + i, 2.0))
            .collect()
    }
}

fn outcome(id: u8, name: &str, passed: bool, values: &[(&str, f64)], detail: String) -> CheckOutcome {
    CheckOutcome {
        id,
        name: name.into(),
        passed,
        detail,
        values: values.iter().map(|&(k, v)| (k.to_string(), v)).collect(),
    }
}

pub fn check_exponent_ledger() -> Result<CheckOutcome> {
    let q = |n, d| Rational64::new(n, d);
    let i = Rational64::from_integer;
    let qs = [
        (q_exponent_exact(i(2), i(6))?, i(6)),
        (q_exponent_exact(i(3), i(6))?, i(4)),
        (q_exponent_exact(i(3), i(4))?, q(24, 5)),
        (q_exponent_exact(i(2), i(4))?, i(8)),
    ];
    let q_ok = qs.iter().all(|(a, b)| a == b);
    let threshold = globalcond_threshold_exact(i(3));
    let (theta, alpha) = theta_from_target_exact(q(13, 6), i(3))?;
    let p_theta = p_theta_exact(theta, i(3));
    let passed = q_ok && threshold == q(3, 10) && p_theta == q(13, 6) && alpha == threshold;
    Ok(outcome(
        1,
        "exponent ledger",
        passed,
        &[],
        format!(
            "Q values {} ; threshold(3) = {threshold} ; theta = {theta}, p_theta = {p_theta}, alpha = {alpha}",
            qs.iter().map(|(a, _)| a.to_string()).collect::<Vec<_>>().join(", ")
        ),
    ))
}

/// `U(t)e^{-x²} = (1+4it)^{-1/2} e^{-x²/(1+4it)}`.
fn gaussian_free(x: f64, t: f64) -> Complex64 {
    let d = Complex64::new(1.0, 4.0 * t);
    (-(x * x) / d).exp() / d.sqrt()
}

pub fn check_spectral(opts: &AcceptanceOptions) -> Result<CheckOutcome> {
    let grid = opts.grid()?;
    let fields = opts.fields(grid, 0, opts.ensemble)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let times: Vec<(f64, f64)> = (0..fields.len())
        .map(|_| (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)))
        .collect();
    let errs = fields
        .par_iter()
        .zip(&times)
        .map(|(f, &(t, s))| -> Result<[f64; 4]> {
            let n = f.l2_norm();
            let ut = free_propagate(f, t)?;
            let plancherel = (fourier_lp_norm(f, 2.0)? - n).abs() / n;
            let unitarity = (ut.l2_norm() - n).abs() / n;
            let group = relative_l2_distance(&free_propagate(&ut, s)?, &free_propagate(f, t + s)?)?;
            let back = relative_l2_distance(&free_propagate(&ut, -t)?, f)?;
            Ok([plancherel, unitarity, group, back])
        })
        .collect::<Result<Vec<_>>>()?;
    let worst = |k: usize| errs.iter().map(|e| e[k]).fold(0.0, f64::max);
    let (pl, un, gr, rv) = (worst(0), worst(1), worst(2), worst(3));

    let g = Field::from_real_fn(grid, |x| (-x * x).exp())?;
    let mut gauss = 0.0f64;
    for &t in &[0.5, 1.0, 2.0] {
        let num = free_propagate(&g, t)?;
        let exact = Field::from_fn(grid, |x| gaussian_free(x, t))?;
        gauss = gauss.max(num.sub(&exact)?.max_abs());
    }
    let passed = pl < 1e-10 && un < 1e-10 && gr < 1e-10 && rv < 1e-10 && gauss < 1e-8;
    Ok(outcome(
        2,
        "spectral core",
        passed,
        &[
            ("plancherel", pl),
            ("unitarity", un),
            ("group_law", gr),
            ("reversibility", rv),
            ("gaussian_max_error", gauss),
        ],
        format!(
            "{} fields: plancherel {pl:.1e}, unitarity {un:.1e}, group {gr:.1e}, reversibility {rv:.1e} (< 1e-10); gaussian {gauss:.1e} (< 1e-8)",
            fields.len()
        ),
    ))
}

fn soliton_error(grid: GridSpec, dt: f64) -> Result<(f64, f64)> {
    let phi = Field::from_real_fn(grid, soliton_profile)?;
    let u = solve_nls(&phi, 0.0, 1.0, &SolverConfig::new(dt).with_record_every(100))?;
    let exact = phi.scale(Complex64::from_polar(1.0, 1.0));
    let err = relative_l2_distance(u.last(), &exact)?;
    let m0 = phi.l2_norm();
    let drift = u
        .slice_norms(2.0)?
        .iter()
        .map(|m| (m - m0).abs() / m0)
        .fold(0.0, f64::max);
    Ok((err, drift))
}

pub fn check_solver(opts: &AcceptanceOptions) -> Result<CheckOutcome> {
    let grid = opts.grid()?;
    let (err, drift) = soliton_error(grid, opts.dt())?;
    let (e1, _) = soliton_error(grid, 0.01)?;
    let (e2, _) = soliton_error(grid, 0.005)?;
    let ratio = e1 / e2;

    let fields = opts.fields(grid, 1000, 8)?;
    let mut g_err = 0.0f64;
    for pair in fields.chunks(2) {
        let (v, w) = (&pair[0], &pair[1].scale(Complex64::new(0.3, 0.0)));
        let cubic = |z: &Field| z.map(|_, c| c * c.norm_sqr());
        let direct = cubic(&v.add(w)?).sub(&cubic(v))?;
        let expanded = difference_nonlinearity(v, w)?;
        g_err = g_err.max(expanded.sub(&direct)?.max_abs() / direct.max_abs());
    }
    let passed = err < 1e-6 && drift < 1e-8 && (3.5..=4.5).contains(&ratio) && g_err < 1e-12;
    Ok(outcome(
        3,
        "solver",
        passed,
        &[
            ("soliton_error", err),
            ("mass_drift", drift),
            ("dt_halving_ratio", ratio),
            ("g_expansion_error", g_err),
        ],
        format!(
            "soliton {err:.1e} (< 1e-6), mass drift {drift:.1e} (< 1e-8), dt-halving ratio {ratio:.3} (in [3.5, 4.5]), G expansion {g_err:.1e} (< 1e-12)"
        ),
    ))
}

pub fn check_factorization(opts: &AcceptanceOptions) -> Result<CheckOutcome> {
    let grid = opts.grid()?;
    let t_min = 0.1;
    let fit_fields = opts.fields(grid, 2000, 3)?;
    let fit = factorization_check(&fit_fields[0], &fit_fields[1], &fit_fields[2], 1.0, t_min)?;
    let c = fit.fitted_c;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed + 2000);
    let ts: Vec<f64> = (0..20).map(|_| rng.gen_range(0.5..=2.0)).collect();
    let fresh = opts.fields(grid, 3000, 60)?;
    let worst = fresh
        .par_chunks(3)
        .zip(&ts)
        .map(|(z, &t)| factorization_residual(&z[0], &z[1], &z[2], t, c, t_min))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(outcome(
        4,
        "factorization identity",
        worst < 1e-6,
        &[("fitted_c_re", c.re), ("fitted_c_im", c.im), ("worst_relative_error", worst)],
        format!(
            "fitted c = {:.9}{:+.1e}i; worst residual on 20 fresh triples {worst:.1e} (< 1e-6)",
            c.re, c.im
        ),
    ))
}

pub const SWEEP_NS: [f64; 8] = [2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0];

pub fn check_decomposition(opts: &AcceptanceOptions) -> Result<CheckOutcome> {
    let cfg = opts.config()?;
    let f = cfg.initial_data.sample(cfg.grid.spec()?)?;
    let (p0, alpha) = (cfg.plan.p0, cfg.alpha()?);
    let mut exact = true;
    for &n in &SWEEP_NS {
        let pair = d_class_decompose(&f, p0, alpha, n)?;
        exact &= pair.recombined()? == f;
    }
    let rows = decomposition_sweep(&f, p0, alpha, &SWEEP_NS)?;
    let phi: Vec<f64> = rows.iter().map(|r| r.l2_norm_phi).collect();
    let psi: Vec<f64> = rows.iter().map(|r| r.lp0_norm_psi).collect();
    let s_phi = loglog_slope(&SWEEP_NS, &phi)?;
    let s_psi = loglog_slope(&SWEEP_NS, &psi)?;
    let passed = exact && (s_psi + 1.0).abs() <= 0.1 && (s_phi - alpha).abs() <= 0.1 * alpha;
    Ok(outcome(
        5,
        "decomposition",
        passed,
        &[("slope_psi_lp0", s_psi), ("slope_phi_l2", s_phi), ("alpha", alpha)],
        format!(
            "re-summation exact: {exact}; psi slope {s_psi:.4} (target -1 +- 0.1); phi slope {s_phi:.4} (target {alpha:.5} +- {:.4})",
            0.1 * alpha
        ),
    ))
}

pub fn check_globalization(opts: &AcceptanceOptions) -> Result<CheckOutcome> {
    let cfg = opts.config()?;
    let r = run_globalize(&cfg)?;
    let runs = &r.tables["runs"];
    let max_esc = runs.column("escalations").unwrap().into_iter().fold(0.0, f64::max);
    let gap = r.scalars["max_gap_sup_l2"];
    let ratio = r.scalars["max_audit_ratio"];
    let completed = r.flags["all_completed"];
    let passed = completed && gap < 1e-4 && ratio <= 2.0 && max_esc <= 2.0;
    Ok(outcome(
        6,
        "globalization vs direct",
        passed,
        &[("max_gap_sup_l2", gap), ("max_audit_ratio", ratio), ("max_escalations", max_esc)],
        format!(
            "N = {:?}: all budgets met {completed}, gap {gap:.1e} (< 1e-4), audit ratio {ratio:.3} (<= 2), escalations {max_esc}",
            cfg.plan.ns
        ),
    ))
}

pub fn check_uniqueness(opts: &AcceptanceOptions) -> Result<CheckOutcome> {
    let cfg = opts.config()?;
    let pc = &cfg.plan;
    let f = cfg.initial_data.sample(cfg.grid.spec()?)?;
    let alpha = cfg.alpha()?;
    let ns = [8.0, 16.0];
    let c0 = decomposition_sweep(&f, pc.p0, alpha, &ns)?
        .iter()
        .map(|r| r.c0_fit)
        .fold(0.0, f64::max);
    let plans = ns
        .iter()
        .map(|&n| make_plan(pc.p0, alpha, n, pc.m, c0, pc.c_small))
        .collect::<Result<Vec<_>>>()?;
    let horizon = plans.iter().map(|p| p.t_n).fold(pc.t_cap, f64::min);
    let sopts = SchemeOptions {
        t_cap: pc.t_cap,
        steps_per_slab: pc.steps_per_slab,
        keep_interior: false,
        extra_times: (1..=10).map(|i| horizon * i as f64 / 10.0).collect(),
    };
    let runs = ns
        .par_iter()
        .zip(&plans)
        .map(|(&n, plan)| {
            let pair = d_class_decompose(&f, pc.p0, alpha, n)?;
            globalize(&pair, plan, &cfg.solver, &sopts, pc.max_escalations)
        })
        .collect::<Result<Vec<_>>>()?;
    let a = runs[0].run.u.restrict(0.0, horizon)?;
    let b = runs[1].run.u.restrict(0.0, horizon)?;
    let o = uniqueness_overlap(&a, &b)?;
    let passed = o.sup_relative_l2 < 1e-4 && runs.iter().all(|r| r.run.completed());
    Ok(outcome(
        7,
        "uniqueness on overlap",
        passed,
        &[
            ("sup_relative_l2", o.sup_relative_l2),
            ("l4_l6", o.l4_l6.unwrap_or(0.0)),
            ("shared_horizon", horizon),
            ("common_slices", o.common_slices as f64),
        ],
        format!(
            "N = 8 vs 16 on [0, {horizon:.3e}] ({} common slices): sup relative L2 {:.1e} (< 1e-4)",
            o.common_slices, o.sup_relative_l2
        ),
    ))
}

/// Also returns the persistence curves.
pub fn check_persistence(opts: &AcceptanceOptions) -> Result<(CheckOutcome, Table)> {
    let mut cfg = opts.config()?;
    cfg.exponents.p = Some(2.1);
    let r = run_evolve(&cfg)?;
    let nl = r.scalars["twisted_lp_spread"];
    let free = r.scalars["free_twisted_lp_spread"];
    let passed = nl <= 0.2 && free < 1e-12;
    Ok((
        outcome(
            8,
            "persistence",
            passed,
            &[("nonlinear_twisted_spread", nl), ("free_twisted_spread", free)],
            format!(
                "over [0, {}]: twisted L^2.1 spread {nl:.2e} (<= 0.2), free flow spread {free:.1e} (< 1e-12)",
                cfg.run.horizon
            ),
        ),
        r.tables["persistence"].clone(),
    ))
}

pub const DILATIONS: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];

pub fn check_strichartz(opts: &AcceptanceOptions) -> Result<CheckOutcome> {
    let flavor = StrichartzFlavor::FourierLp { p: 2.0, r: 6.0 };
    let sopts = StrichartzOptions::default();
    let base = opts.grid()?;
    let fine = GridSpec::new(base.n_points() * 2, base.half_width())?;
    let coarse = strichartz_ratio(&opts.fields(base, 5000, opts.ensemble)?, &flavor, &sopts)?;
    let refined = strichartz_ratio(&opts.fields(fine, 5000, opts.ensemble)?, &flavor, &sopts)?;
    let change = (refined.max_over_min - coarse.max_over_min).abs() / coarse.max_over_min;

    let dil = DILATIONS
        .par_iter()
        .map(|&l| {
            let phi = dilate(base, |x| Complex64::new((-4.0 * x * x).exp(), 0.0), l)?;
            strichartz_single(&phi, &flavor, &sopts)
        })
        .collect::<Result<Vec<_>>>()?;
    let (lo, hi) = dil.iter().fold((f64::MAX, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
    let variation = hi / lo - 1.0;
    let finite = coarse.max_over_min.is_finite() && refined.max_over_min.is_finite();
    let passed = finite && change < 0.1 && variation < 0.25;
    Ok(outcome(
        9,
        "strichartz ratios",
        passed,
        &[
            ("max_over_min", coarse.max_over_min),
            ("max_over_min_refined", refined.max_over_min),
            ("refinement_change", change),
            ("max_ratio", coarse.max_ratio),
            ("dilation_variation", variation),
        ],
        format!(
            "(2,6,6): max/min {:.4} -> {:.4} under refinement (change {change:.1e} < 0.1); dilation variation {variation:.3} (< 0.25)",
            coarse.max_over_min, refined.max_over_min
        ),
    ))
}

fn as_failure(id: u8, name: &str, e: crate::error::Error) -> CheckOutcome {
    outcome(id, name, false, &[], format!("error: {e}"))
}

/// Every check, in order, collected into a report. A check that errors is
/// recorded as a failure carrying the error text.
pub fn run_all(opts: &AcceptanceOptions) -> RunReport {
    let mut report = RunReport::new("acceptance", "verify");
    report.seed = Some(opts.seed);
    report.scalar("resolution_scale", opts.scale);
    let mut tables = BTreeMap::new();
    let mut checks = vec![
        check_exponent_ledger().unwrap_or_else(|e| as_failure(1, "exponent ledger", e)),
        check_spectral(opts).unwrap_or_else(|e| as_failure(2, "spectral core", e)),
        check_solver(opts).unwrap_or_else(|e| as_failure(3, "solver", e)),
        check_factorization(opts).unwrap_or_else(|e| as_failure(4, "factorization identity", e)),
        check_decomposition(opts).unwrap_or_else(|e| as_failure(5, "decomposition", e)),
        check_globalization(opts).unwrap_or_else(|e| as_failure(6, "globalization vs direct", e)),
        check_uniqueness(opts).unwrap_or_else(|e| as_failure(7, "uniqueness on overlap", e)),
    ];
    match check_persistence(opts) {
        Ok((c, t)) => {
            checks.push(c);
            tables.insert("persistence".to_string(), t);
        }
        Err(e) => checks.push(as_failure(8, "persistence", e)),
    }
    checks.push(check_strichartz(opts).unwrap_or_else(|e| as_failure(9, "strichartz ratios", e)));
    report.checks = checks;
    report.tables = tables;
    report
}
