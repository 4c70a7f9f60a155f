//! Experiment configuration (TOML) and the runners behind the CLI subcommands.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::InitialData;
use crate::decomposition::{d_class_decompose, decomposition_sweep, loglog_slope, theta_from_target};
use crate::error::{Error, Result};
use crate::exponents::ExponentSet;
use crate::globalization::{
    globalize, l2_growth_audit, life_span_exponent, make_plan, persistence_report, repeat_exponent,
    strichartz_single, GlobalizationPlan, SchemeOptions, StrichartzFlavor, StrichartzOptions,
};
use crate::norms::{mixed_norm, sup_l2_distance, twist, SpaceTimeField};
use crate::report::{RunReport, Table};
use crate::solver::{solve_difference, solve_nls_sampled, SolverConfig};
use crate::spectral::{free_propagate, lp_norm, GridSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub n_points: usize,
    pub half_width: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n_points: 4096,
            half_width: 100.0,
        }
    }
}

impl GridConfig {
    pub fn spec(&self) -> Result<GridSpec> {
        GridSpec::new(self.n_points, self.half_width)
    }
}

/// Inputs to the decomposition sweep and the globalization plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlanConfig {
    /// Target data space `L^p`; `alpha` is derived from it when not given.
    pub p: Option<f64>,
    pub p0: f64,
    pub alpha: Option<f64>,
    /// `N` values for `globalize`.
    pub ns: Vec<f64>,
    /// `N` values for `split` and for the `T_N` sweep.
    pub sweep_ns: Vec<f64>,
    pub m: f64,
    /// Defaults to the largest fitted decomposition constant over
    /// `ns` and `sweep_ns` (it has to be uniform in `N`).
    pub c0: Option<f64>,
    pub c_small: f64,
    pub t_cap: f64,
    pub max_escalations: usize,
    pub steps_per_slab: usize,
}

impl Default for PlanConfig {
    fn default() -> Self {
        Self {
            p: None,
            p0: 2.9,
            alpha: None,
            ns: vec![4.0, 8.0, 16.0],
            sweep_ns: (1..=8).map(|k| 2f64.powi(k)).collect(),
            m: 4.0,
            c0: None,
            c_small: 1.0,
            t_cap: 1.0,
            max_escalations: 2,
            steps_per_slab: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Physical end time for `propagate` and `evolve`.
    pub horizon: f64,
    /// Number of output intervals on `[0, horizon]`.
    pub n_samples: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            horizon: 1.0,
            n_samples: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    Csv,
    JsonReport,
}

fn default_outputs() -> Vec<OutputKind> {
    vec![OutputKind::Csv, OutputKind::JsonReport]
}

fn default_solver() -> SolverConfig {
    SolverConfig::new(1e-4)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub initial_data: InitialData,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default = "default_solver")]
    pub solver: SolverConfig,
    #[serde(default)]
    pub exponents: ExponentSet,
    #[serde(default)]
    pub plan: PlanConfig,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default = "default_outputs")]
    pub outputs: Vec<OutputKind>,
}

pub const BUILTIN_NAMES: [&str; 5] = ["default", "powerlaw_p2.1", "soliton", "gaussian", "random_smooth"];

impl ExperimentConfig {
    fn base(name: &str, initial_data: InitialData) -> Self {
        let plan = PlanConfig {
            p: Some(2.1),
            ..PlanConfig::default()
        };
        Self {
            name: name.into(),
            initial_data,
            grid: GridConfig::default(),
            solver: default_solver(),
            exponents: ExponentSet::default(),
            plan,
            run: RunConfig::default(),
            outputs: default_outputs(),
        }
    }

    pub fn builtin(name: &str) -> Option<Self> {
        let power = InitialData::PowerLaw {
            beta: 0.49,
            amplitude: 1.0,
        };
        let cfg = match name {
            "default" => Self::base(name, power),
            "powerlaw_p2.1" => {
                let mut c = Self::base(name, power);
                c.exponents.p = Some(2.1);
                c
            }
            "soliton" => {
                let mut c = Self::base(name, InitialData::Soliton {});
                c.plan.p = None;
                c.plan.alpha = Some(0.3);
                c
            }
            "gaussian" => {
                let mut c = Self::base(name, InitialData::Gaussian { a: 1.0, amplitude: 1.0 });
                c.plan.p = None;
                c.plan.alpha = Some(0.3);
                c
            }
            "random_smooth" => {
                let mut c = Self::base(name, InitialData::RandomSmooth { seed: 0, cutoff: 2.0 });
                c.plan.p = None;
                c.plan.alpha = Some(0.3);
                c.exponents.p = Some(2.0);
                c.exponents.r = Some(6.0);
                c
            }
            _ => return None,
        };
        Some(cfg)
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&s).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// A built-in name or a path to a TOML file.
    pub fn resolve(name_or_path: &str) -> Result<Self> {
        match Self::builtin(name_or_path) {
            Some(c) => Ok(c),
            None => {
                let p = Path::new(name_or_path);
                if p.exists() {
                    Self::load(p)
                } else {
                    Err(Error::Config(format!(
                        "`{name_or_path}` is neither a file nor a built-in ({})",
                        BUILTIN_NAMES.join(", ")
                    )))
                }
            }
        }
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.spec()?;
        self.solver.validate()?;
        let bad = |m: String| Err(Error::Config(m));
        if self.name.is_empty() {
            return bad("name must not be empty".into());
        }
        if !(self.run.horizon > 0.0 && self.run.horizon.is_finite()) || self.run.n_samples < 2 {
            return bad("run.horizon must be positive and run.n_samples >= 2".into());
        }
        let plan = &self.plan;
        if plan.p.is_some() == plan.alpha.is_some() {
            return bad("set exactly one of plan.p and plan.alpha".into());
        }
        if plan.ns.is_empty() || plan.sweep_ns.len() < 2 {
            return bad("plan.ns needs one value and plan.sweep_ns two".into());
        }
        if plan.ns.iter().chain(&plan.sweep_ns).any(|&n| !(n > 1.0)) {
            return bad("every N must be > 1".into());
        }
        if plan.steps_per_slab < 2 || !(plan.t_cap > 0.0) {
            return bad("plan.steps_per_slab must be >= 2 and plan.t_cap > 0".into());
        }
        self.alpha()?;
        if let (Some(p), InitialData::PowerLaw { beta, .. }) = (plan.p, &self.initial_data) {
            if !(*beta > 1.0 / p && *beta < 0.5) {
                return bad(format!(
                    "power_law beta = {beta} is outside (1/p, 1/2) = ({}, 0.5) for p = {p}",
                    1.0 / p
                ));
            }
        }
        make_plan(plan.p0, self.alpha()?, plan.ns[0], plan.m, plan.c0.unwrap_or(1.0), plan.c_small)?;
        Ok(())
    }

    /// `α` as configured, or from the θ-interpolation for the target `p`.
    pub fn alpha(&self) -> Result<f64> {
        match (self.plan.alpha, self.plan.p) {
            (Some(a), _) => Ok(a),
            (None, Some(p)) => Ok(theta_from_target(p, self.plan.p0)?.alpha),
            (None, None) => Err(Error::Config("plan.p or plan.alpha is required".into())),
        }
    }

    /// Multiply `n_points` and divide `dt` by `scale`.
    pub fn with_resolution_scale(mut self, scale: f64) -> Result<Self> {
        let n = self.grid.n_points as f64 * scale;
        if !(n.fract() == 0.0 && n >= 4.0 && (n as usize).is_power_of_two()) {
            return Err(Error::Config(format!(
                "resolution scale {scale} takes n_points {} to {n}, not a power of two",
                self.grid.n_points
            )));
        }
        self.grid.n_points = n as usize;
        self.solver.dt /= scale;
        self.validate()?;
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        if let InitialData::RandomSmooth { seed: s, .. } = &mut self.initial_data {
            *s = seed;
        }
        self
    }

    pub fn seed(&self) -> Option<u64> {
        match self.initial_data {
            InitialData::RandomSmooth { seed, .. } => Some(seed),
            _ => None,
        }
    }

    pub fn persistence_p(&self) -> f64 {
        self.exponents.p.or(self.plan.p).unwrap_or(2.0)
    }

    pub fn strichartz_flavor(&self) -> StrichartzFlavor {
        let e = &self.exponents;
        match (e.rho, e.gamma, e.sigma) {
            (Some(rho), Some(gamma), Some(sigma)) => StrichartzFlavor::Kato { rho, gamma, sigma },
            _ => StrichartzFlavor::FourierLp {
                p: e.p.unwrap_or(2.0),
                r: e.r.unwrap_or(6.0),
            },
        }
    }

    fn output_times(&self) -> Vec<f64> {
        let n = self.run.n_samples;
        (0..=n).map(|i| self.run.horizon * i as f64 / n as f64).collect()
    }

    fn report(&self, command: &str) -> RunReport {
        let mut r = RunReport::new(&self.name, command);
        r.seed = self.seed();
        r.config = Some(self.clone());
        r
    }
}

fn persistence_table(u: &SpaceTimeField, p: f64) -> Result<Table> {
    let mut t = Table::new(["t", "twisted_lp", "untwisted_lp", "duhamel_lp", "control"]);
    for row in persistence_report(u, p)? {
        t.push(vec![row.t, row.twisted_lp, row.untwisted_lp, row.duhamel_lp, row.control])?;
    }
    Ok(t)
}

fn relative_spread(xs: &[f64]) -> f64 {
    let x0 = xs[0];
    xs.iter().map(|x| (x - x0).abs()).fold(0.0, f64::max) / x0
}

/// Linear flow: twisted and untwisted `L^p` curves and the Strichartz ratio.
pub fn run_propagate(cfg: &ExperimentConfig) -> Result<RunReport> {
    let grid = cfg.grid.spec()?;
    let phi = cfg.initial_data.sample(grid)?;
    let u = SpaceTimeField::from_fn(0.0, cfg.run.horizon, cfg.run.n_samples + 1, |t| free_propagate(&phi, t))?;
    let p = cfg.persistence_p();
    let table = persistence_table(&u, p)?;
    let mut r = cfg.report("propagate");
    r.scalar("p", p);
    r.scalar("twisted_lp_spread", relative_spread(&table.column("twisted_lp").unwrap()));
    r.scalar("untwisted_lp_spread", relative_spread(&table.column("untwisted_lp").unwrap()));
    r.scalar("l4_l6_norm", mixed_norm(&u, 4.0, 6.0)?);
    let flavor = cfg.strichartz_flavor();
    let (q, rr) = flavor.exponents()?;
    r.scalar("strichartz_q", q);
    r.scalar("strichartz_r", rr);
    r.scalar(
        "strichartz_ratio",
        strichartz_single(
            &phi,
            &flavor,
            &StrichartzOptions {
                horizon: cfg.run.horizon,
                ..Default::default()
            },
        )?,
    );
    r.tables.insert("linear_flow".into(), table);
    Ok(r)
}

/// Decomposition sweep over `plan.sweep_ns` with fitted log-log slopes.
pub fn run_split(cfg: &ExperimentConfig) -> Result<RunReport> {
    let grid = cfg.grid.spec()?;
    let f = cfg.initial_data.sample(grid)?;
    let alpha = cfg.alpha()?;
    let rows = decomposition_sweep(&f, cfg.plan.p0, alpha, &cfg.plan.sweep_ns)?;
    let mut t = Table::new(["N", "l2_norm_phi", "lp0_norm_psi", "c0_fit", "cut"]);
    for row in &rows {
        t.push(vec![row.n, row.l2_norm_phi, row.lp0_norm_psi, row.c0_fit, row.cut])?;
    }
    let ns: Vec<f64> = rows.iter().map(|r| r.n).collect();
    let mut r = cfg.report("split");
    r.scalar("alpha", alpha);
    r.scalar("p0", cfg.plan.p0);
    r.scalar("slope_l2_phi", loglog_slope(&ns, &t.column("l2_norm_phi").unwrap())?);
    let psi = t.column("lp0_norm_psi").unwrap();
    if psi.iter().all(|&x| x > 0.0) {
        r.scalar("slope_lp0_psi", loglog_slope(&ns, &psi)?);
    }
    r.scalar("c0_max", rows.iter().map(|r| r.c0_fit).fold(0.0, f64::max));
    r.tables.insert("sweep".into(), t);
    Ok(r)
}

/// One NLS solve with persistence curves, plus the `(v, w)` split at the
/// first `N` of the plan compared against it.
pub fn run_evolve(cfg: &ExperimentConfig) -> Result<RunReport> {
    let grid = cfg.grid.spec()?;
    let f = cfg.initial_data.sample(grid)?;
    let times = cfg.output_times();
    let sol = solve_nls_sampled(&f, &times, &cfg.solver)?;
    let u = &sol.trajectory;
    let p = cfg.persistence_p();
    let mut table = persistence_table(u, p)?;
    table.columns.push("free_twisted_lp".into());
    let free = twist(&SpaceTimeField::from_fn(0.0, cfg.run.horizon, times.len(), |t| free_propagate(&f, t))?)?;
    for (row, s) in table.rows.iter_mut().zip(free.slices()) {
        row.push(lp_norm(s, p)?);
    }

    let pair = d_class_decompose(&f, cfg.plan.p0, cfg.alpha()?, cfg.plan.ns[0])?;
    let v = solve_nls_sampled(&pair.phi_n, &times, &cfg.solver)?.trajectory;
    let w = solve_difference(&v, &pair.psi_n, &cfg.solver)?;
    let split_gap = sup_l2_distance(&v.add(&w)?, u)?;

    let masses = u.slice_norms(2.0)?;
    let mut r = cfg.report("evolve");
    r.scalar("p", p);
    r.scalar("mass_drift", relative_spread(&masses));
    r.scalar("twisted_lp_spread", relative_spread(&table.column("twisted_lp").unwrap()));
    r.scalar("free_twisted_lp_spread", relative_spread(&table.column("free_twisted_lp").unwrap()));
    r.scalar("split_gap_sup_l2", split_gap);
    r.scalar("split_n", cfg.plan.ns[0]);
    r.scalar("steps", sol.stats.steps as f64);
    r.scalar("max_amplitude", sol.stats.max_amplitude);
    r.tables.insert("persistence".into(), table);
    Ok(r)
}

struct NRun {
    n: f64,
    plan: GlobalizationPlan,
    escalations: usize,
    records: Vec<crate::globalization::SlabRecord>,
    completed: bool,
    gap: f64,
    audit_ratio: f64,
    duhamel_sum: f64,
}

/// The full slab scheme for every `N` in `plan.ns`, audited against a direct
/// solve, plus a plan-only `T_N` sweep over `plan.sweep_ns`.
pub fn run_globalize(cfg: &ExperimentConfig) -> Result<RunReport> {
    let grid = cfg.grid.spec()?;
    let f = cfg.initial_data.sample(grid)?;
    let alpha = cfg.alpha()?;
    let pc = &cfg.plan;
    let opts = SchemeOptions {
        t_cap: pc.t_cap,
        steps_per_slab: pc.steps_per_slab,
        ..Default::default()
    };

    let rows = decomposition_sweep(&f, pc.p0, alpha, &pc.sweep_ns)?;
    let c0 = match pc.c0 {
        Some(c) => c,
        None => {
            let at_ns = decomposition_sweep(&f, pc.p0, alpha, &pc.ns)?;
            rows.iter().chain(&at_ns).map(|r| r.c0_fit).fold(0.0, f64::max)
        }
    };
    let runs = pc
        .ns
        .par_iter()
        .map(|&n| -> Result<NRun> {
            let pair = d_class_decompose(&f, pc.p0, alpha, n)?;
            let plan = make_plan(pc.p0, alpha, n, pc.m, c0, pc.c_small)?;
            let out = globalize(&pair, &plan, &cfg.solver, &opts, pc.max_escalations)?;
            let direct = solve_nls_sampled(&f, out.run.u.times(), &cfg.solver)?;
            let gap = sup_l2_distance(&out.run.u, &direct.trajectory)?;
            let audit = l2_growth_audit(&out.run.records, &out.plan)?;
            Ok(NRun {
                n,
                plan: out.plan,
                escalations: out.escalations,
                completed: out.run.completed(),
                records: out.run.records,
                gap,
                audit_ratio: audit.max_ratio,
                duhamel_sum: audit.duhamel_sum,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut r = cfg.report("globalize");
    r.scalar("alpha", alpha);
    r.scalar("p0", pc.p0);
    r.scalar("t_n_exponent", life_span_exponent(pc.p0, alpha));
    r.scalar("n0_exponent", repeat_exponent(pc.p0, alpha));
    let plan0 = make_plan(pc.p0, alpha, pc.sweep_ns[0], pc.m, 1.0, pc.c_small)?;
    r.flag("globalcond", plan0.globalcond);

    let mut runs_t = Table::new([
        "N", "M", "C0", "delta_n", "n0", "t_n", "slabs_run", "escalations", "completed", "gap_sup_l2", "audit_ratio",
        "duhamel_sum",
    ]);
    let mut slabs = Table::new([
        "N", "k", "t_start", "t_end", "phi_k_l2", "w_y_seminorm", "duhamel_l2", "psi_k_l2", "psi_k_lp0", "phi_budget_ok",
        "w_budget_ok",
    ]);
    let b = |x: bool| if x { 1.0 } else { 0.0 };
    for run in &runs {
        runs_t.push(vec![
            run.n,
            run.plan.m,
            run.plan.c0,
            run.plan.delta_n,
            run.plan.n0 as f64,
            run.plan.t_n,
            run.records.len() as f64,
            run.escalations as f64,
            b(run.completed),
            run.gap,
            run.audit_ratio,
            run.duhamel_sum,
        ])?;
        for s in &run.records {
            slabs.push(vec![
                run.n,
                s.k as f64,
                s.t_start,
                s.t_end,
                s.phi_k_l2,
                s.w_y_seminorm,
                s.duhamel_l2,
                s.psi_k_l2,
                s.psi_k_lp0,
                b(s.phi_budget_ok),
                b(s.w_budget_ok),
            ])?;
        }
    }
    r.flag("all_completed", runs.iter().all(|x| x.completed));
    r.scalar("max_gap_sup_l2", runs.iter().map(|x| x.gap).fold(0.0, f64::max));
    r.scalar("max_audit_ratio", runs.iter().map(|x| x.audit_ratio).fold(0.0, f64::max));

    r.scalar("c0", c0);
    let mut sweep = Table::new(["N", "c0_fit", "delta_n", "n0", "t_n"]);
    let mut t_ns = Vec::new();
    for row in &rows {
        let plan = make_plan(pc.p0, alpha, row.n, pc.m, c0, pc.c_small)?;
        sweep.push(vec![row.n, row.c0_fit, plan.delta_n, plan.n0 as f64, plan.t_n])?;
        t_ns.push(plan.t_n);
    }
    r.flag("t_n_increasing", t_ns.windows(2).all(|w| w[1] > w[0]));

    r.tables.insert("runs".into(), runs_t);
    r.tables.insert("slabs".into(), slabs);
    r.tables.insert("t_n_sweep".into(), sweep);
    Ok(r)
}
