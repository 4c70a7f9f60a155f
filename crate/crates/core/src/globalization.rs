//! The slab-by-slab globalization scheme: plan arithmetic, the coupled
//! `(v, w)` evolution with its norm budgets, and the audits run on the
//! result (L² growth, uniqueness on overlaps, persistence, Strichartz ratios).

use num_complex::Complex64;
use num_rational::Rational64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decomposition::DecompositionPair;
use crate::error::{Error, Result};
use crate::exponents::{admissibility_window, conjugate_exponent, q_exponent};
use crate::norms::{mixed_norm, trapezoid, twist, y_seminorm, SpaceTimeField};
use crate::solver::{solve_difference_detailed, solve_nls_sampled, SolveStats, SolverConfig};
use crate::spectral::{fourier_lp_norm, free_propagate, lp_norm, Field};

/// Exponent of `N` in `T_N`: `(-8p₀α + 4α + 2p₀)/(3p₀ - 2)`.
pub fn life_span_exponent(p0: f64, alpha: f64) -> f64 {
    (-8.0 * p0 * alpha + 4.0 * alpha + 2.0 * p0) / (3.0 * p0 - 2.0)
}

pub fn life_span_exponent_exact(p0: Rational64, alpha: Rational64) -> Rational64 {
    (Rational64::from_integer(-8) * p0 * alpha + alpha * 4 + p0 * 2) / (p0 * 3 - 2)
}

/// Exponent of `N` in `n₀`: `(2p₀/(3p₀-2))(2α + 1 - 2α/p₀)`.
pub fn repeat_exponent(p0: f64, alpha: f64) -> f64 {
    (2.0 * p0 / (3.0 * p0 - 2.0)) * (2.0 * alpha + 1.0 - 2.0 * alpha / p0)
}

pub fn repeat_exponent_exact(p0: Rational64, alpha: Rational64) -> Rational64 {
    (p0 * 2 / (p0 * 3 - 2)) * (alpha * 2 + 1 - alpha * 2 / p0)
}

/// `p₀/(2(2p₀-1))`: the scheme gains time with `N` iff `α` is below this.
pub fn globalcond_threshold(p0: f64) -> f64 {
    p0 / (2.0 * (2.0 * p0 - 1.0))
}

pub fn globalcond_threshold_exact(p0: Rational64) -> Rational64 {
    p0 / ((p0 * 2 - 1) * 2)
}

/// `δ_N = (M · 2C₀N^α)^{-4}` with `N^α` supplied exactly.
pub fn delta_exact(m: Rational64, c0: Rational64, n_pow_alpha: Rational64) -> Rational64 {
    let base = m * c0 * n_pow_alpha * 2;
    (base * base * base * base).recip()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalizationPlan {
    pub p0: f64,
    pub alpha: f64,
    pub n: f64,
    pub m: f64,
    pub c0: f64,
    pub c_small: f64,
    pub delta_n: f64,
    pub n0: u64,
    pub t_n: f64,
    pub globalcond: bool,
}

impl GlobalizationPlan {
    /// `2C₀N^α`.
    pub fn phi_budget(&self) -> f64 {
        2.0 * self.c0 * self.n.powf(self.alpha)
    }

    /// `N^{-1+4α/p₀}`.
    pub fn w_budget(&self) -> f64 {
        self.n.powf(-1.0 + 4.0 * self.alpha / self.p0)
    }
}

pub fn make_plan(p0: f64, alpha: f64, n: f64, m: f64, c0: f64, c_small: f64) -> Result<GlobalizationPlan> {
    if !(2.0..3.0).contains(&p0) {
        return Err(Error::ExponentOutOfRange {
            name: "p0",
            value: p0,
            range: "2 <= p0 < 3",
        });
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::BadPlan(format!("alpha must be finite and >= 0, got {alpha}")));
    }
    if !(n > 1.0 && n.is_finite()) {
        return Err(Error::BadPlan(format!("N must be > 1, got {n}")));
    }
    if !(m >= 1.0 && m.is_finite()) {
        return Err(Error::BadPlan(format!("M must be >= 1, got {m}")));
    }
    if !(c0 > 0.0 && c0.is_finite()) {
        return Err(Error::BadPlan(format!("C0 must be > 0, got {c0}")));
    }
    if !(c_small > 0.0 && c_small.is_finite()) {
        return Err(Error::BadPlan(format!("c_small must be > 0, got {c_small}")));
    }
    let delta_n = (m * 2.0 * c0 * n.powf(alpha)).powi(-4);
    let n0 = (c_small * n.powf(repeat_exponent(p0, alpha))).floor() as u64;
    Ok(GlobalizationPlan {
        p0,
        alpha,
        n,
        m,
        c0,
        c_small,
        delta_n,
        n0,
        t_n: n0 as f64 * delta_n,
        globalcond: alpha < globalcond_threshold(p0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlabRecord {
    pub k: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub phi_k_l2: f64,
    /// `‖w^{(k)}‖_{Ỹ^{p₀}_{p₀'}}` on the slab.
    pub w_y_seminorm: f64,
    /// `‖w^{(k)}(t_end) - U(δ)ψ^{(k)}‖₂`, the increment folded into `φ^{(k+1)}`.
    pub duhamel_l2: f64,
    pub psi_k_l2: f64,
    pub psi_k_lp0: f64,
    pub phi_budget_ok: bool,
    pub w_budget_ok: bool,
}

impl SlabRecord {
    pub fn budgets_ok(&self) -> bool {
        self.phi_budget_ok && self.w_budget_ok
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeOptions {
    /// Physical-time cap on the run.
    pub t_cap: f64,
    /// Mesh nodes per slab handed to the solvers (at least 2).
    pub steps_per_slab: usize,
    /// Keep every solver node instead of only slab endpoints.
    pub keep_interior: bool,
    /// Additional output times, inserted into the slab meshes they fall in.
    pub extra_times: Vec<f64>,
}

impl Default for SchemeOptions {
    fn default() -> Self {
        Self {
            t_cap: 1.0,
            steps_per_slab: 4,
            keep_interior: false,
            extra_times: Vec::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SchemeRun {
    /// `u = v^{(k)} + w^{(k)}` on the union of slabs.
    pub u: SpaceTimeField,
    pub records: Vec<SlabRecord>,
    pub slabs_planned: usize,
    /// First slab whose budget check failed, if any.
    pub halted_at: Option<usize>,
    pub stats: SolveStats,
}

impl SchemeRun {
    pub fn completed(&self) -> bool {
        self.halted_at.is_none()
    }
}

/// Number of slabs actually run: `min(n₀, ⌊t_cap/δ_N⌋)`, at least one.
pub fn slabs_to_run(plan: &GlobalizationPlan, t_cap: f64) -> Result<usize> {
    if plan.n0 == 0 {
        return Err(Error::BadPlan("n0 = 0: no slab fits the plan".into()));
    }
    let by_cap = (t_cap / plan.delta_n * (1.0 + 1e-12)).floor().max(1.0);
    Ok((plan.n0 as f64).min(by_cap) as usize)
}

fn slab_nodes(a: f64, b: f64, opts: &SchemeOptions) -> Vec<f64> {
    let steps = opts.steps_per_slab.max(2);
    let mut nodes: Vec<f64> = (0..=steps)
        .map(|i| if i == steps { b } else { a + (b - a) * i as f64 / steps as f64 })
        .collect();
    let tol = 1e-9 * (b - a);
    for &t in &opts.extra_times {
        if t > a + tol && t < b - tol && nodes.iter().all(|&s| (s - t).abs() > tol) {
            nodes.push(t);
        }
    }
    nodes.sort_by(|x, y| x.partial_cmp(y).unwrap());
    nodes
}

/// Run the coupled scheme from `(φ_N, ψ_N)` for up to `n₀` slabs of length `δ_N`.
pub fn run_scheme(
    pair: &DecompositionPair,
    plan: &GlobalizationPlan,
    cfg: &SolverConfig,
    opts: &SchemeOptions,
) -> Result<SchemeRun> {
    let n_slabs = slabs_to_run(plan, opts.t_cap)?;
    let delta = plan.delta_n;
    let p0c = conjugate_exponent(plan.p0)?;
    let (phi_budget, w_budget) = (plan.phi_budget(), plan.w_budget());

    let mut phi_k = pair.phi_n.clone();
    let mut times = Vec::new();
    let mut slices = Vec::new();
    let mut records = Vec::with_capacity(n_slabs);
    let mut stats = SolveStats::default();
    let mut halted_at = None;

    for k in 1..=n_slabs {
        let (a, b) = ((k - 1) as f64 * delta, k as f64 * delta);
        let psi_k = free_propagate(&pair.psi_n, a)?;
        let nodes = slab_nodes(a, b, opts);
        let v = solve_nls_sampled(&phi_k, &nodes, cfg)?;
        let w = solve_difference_detailed(&v.trajectory, &psi_k, cfg)?;
        stats.absorb(&v.stats);
        stats.absorb(&w.stats);
        let (v, w) = (v.trajectory, w.trajectory);

        let w_semi = y_seminorm(&w, plan.p0, p0c, 0.0)?;
        let duhamel = w.last().sub(&free_propagate(&psi_k, delta)?)?;
        let phi_l2 = phi_k.l2_norm();
        let rec = SlabRecord {
            k,
            t_start: a,
            t_end: b,
            phi_k_l2: phi_l2,
            w_y_seminorm: w_semi,
            duhamel_l2: duhamel.l2_norm(),
            psi_k_l2: psi_k.l2_norm(),
            psi_k_lp0: lp_norm(&psi_k, plan.p0)?,
            phi_budget_ok: phi_l2 <= phi_budget,
            w_budget_ok: w_semi <= w_budget,
        };

        let u = v.add(&w)?;
        // a lone slab keeps its interior so the trajectory has enough slices
        let keep_all = opts.keep_interior || (k == 1 && (n_slabs == 1 || !rec.budgets_ok()));
        let skip = usize::from(k > 1);
        for (i, (&t, s)) in u.times().iter().zip(u.slices()).enumerate().skip(skip) {
            let endpoint = i == 0 || i + 1 == u.len();
            let extra = opts
                .extra_times
                .iter()
                .any(|&e| (e - t).abs() <= 1e-9 * delta);
            if endpoint || extra || keep_all {
                times.push(t);
                slices.push(s.clone());
            }
        }
        records.push(rec);
        if !rec.budgets_ok() {
            halted_at = Some(k);
            break;
        }
        phi_k = v.last().add(&duhamel)?;
    }

    Ok(SchemeRun {
        u: SpaceTimeField::new(times, slices)?,
        records,
        slabs_planned: n_slabs,
        halted_at,
        stats,
    })
}

#[derive(Debug, Clone)]
pub struct GlobalizeOutcome {
    pub plan: GlobalizationPlan,
    pub run: SchemeRun,
    pub escalations: usize,
    /// `(M, first failing slab or None)` for every attempt.
    pub attempts: Vec<(f64, Option<usize>)>,
}

/// [`run_scheme`] with `M ← 2M` retries on a budget violation or a Picard
/// failure, at most `max_escalations` times.
pub fn globalize(
    pair: &DecompositionPair,
    plan: &GlobalizationPlan,
    cfg: &SolverConfig,
    opts: &SchemeOptions,
    max_escalations: usize,
) -> Result<GlobalizeOutcome> {
    let mut plan = *plan;
    let mut attempts = Vec::new();
    for esc in 0..=max_escalations {
        let last = esc == max_escalations;
        match run_scheme(pair, &plan, cfg, opts) {
            Ok(run) => {
                attempts.push((plan.m, run.halted_at));
                if run.completed() || last {
                    return Ok(GlobalizeOutcome {
                        plan,
                        run,
                        escalations: esc,
                        attempts,
                    });
                }
            }
            Err(e @ Error::PicardNotConverged { .. }) => {
                if last {
                    return Err(e);
                }
                attempts.push((plan.m, None));
            }
            Err(e) => return Err(e),
        }
        plan = make_plan(plan.p0, plan.alpha, plan.n, 2.0 * plan.m, plan.c0, plan.c_small)?;
    }
    unreachable!("loop returns on the last attempt")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct L2Audit {
    /// `max_k ‖φ^{(k)}‖₂ / (C₀N^α)`.
    pub max_ratio: f64,
    /// `Σ_k duhamel_l2`.
    pub duhamel_sum: f64,
    /// `C₀N^α/3`.
    pub duhamel_budget: f64,
    pub ratio_ok: bool,
    pub duhamel_ok: bool,
}

pub fn l2_growth_audit(records: &[SlabRecord], plan: &GlobalizationPlan) -> Result<L2Audit> {
    if records.is_empty() {
        return Err(Error::Empty("slab records"));
    }
    let scale = plan.c0 * plan.n.powf(plan.alpha);
    let max_ratio = records
        .iter()
        .map(|r| r.phi_k_l2 / scale)
        .fold(0.0, f64::max);
    let duhamel_sum: f64 = records.iter().map(|r| r.duhamel_l2).sum();
    let duhamel_budget = scale / 3.0;
    Ok(L2Audit {
        max_ratio,
        duhamel_sum,
        duhamel_budget,
        ratio_ok: max_ratio <= 2.0,
        duhamel_ok: duhamel_sum <= duhamel_budget,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Overlap {
    pub common_slices: usize,
    pub t_end: f64,
    /// `sup_t ‖u₁ - u₂‖₂ / ‖u₂‖₂` over common slices.
    pub sup_relative_l2: f64,
    /// `‖u₁ - u₂‖_{L⁴_t L⁶_x}` on the common slices (needs three of them).
    pub l4_l6: Option<f64>,
}

/// Compare two trajectories on the slices whose times agree.
pub fn uniqueness_overlap(u1: &SpaceTimeField, u2: &SpaceTimeField) -> Result<Overlap> {
    if u1.grid() != u2.grid() {
        return Err(Error::GridMismatch);
    }
    let scale = u1.end().abs().max(u2.end().abs()).max(1.0);
    let tol = 1e-12 * scale;
    let mut pairs = Vec::new();
    for (i, &t) in u1.times().iter().enumerate() {
        if let Some(j) = u2.index_of(t, tol) {
            pairs.push((t, i, j));
        }
    }
    if pairs.is_empty() {
        return Err(Error::DisjointTrajectories);
    }
    let mut sup = 0.0f64;
    let mut diffs = Vec::with_capacity(pairs.len());
    for &(_, i, j) in &pairs {
        let (a, b) = (&u1.slices()[i], &u2.slices()[j]);
        sup = sup.max(crate::spectral::relative_l2_distance(a, b)?);
        diffs.push(a.sub(b)?);
    }
    let times: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let t_end = *times.last().unwrap();
    let l4_l6 = if times.len() >= 3 {
        Some(mixed_norm(&SpaceTimeField::new(times, diffs)?, 4.0, 6.0)?)
    } else {
        None
    };
    Ok(Overlap {
        common_slices: pairs.len(),
        t_end,
        sup_relative_l2: sup,
        l4_l6,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PersistenceRow {
    pub t: f64,
    /// `‖U(-t)u(t)‖_p`.
    pub twisted_lp: f64,
    /// `‖u(t)‖_p`.
    pub untwisted_lp: f64,
    /// `‖U(-t)u(t) - u(0)‖_p`, the Duhamel part.
    pub duhamel_lp: f64,
    /// `t^{1/(6p)} ‖u‖³_{L^{24/5}([0,t]; L⁴)}`.
    pub control: f64,
}

pub fn persistence_report(u: &SpaceTimeField, p: f64) -> Result<Vec<PersistenceRow>> {
    if !(2.0..4.0).contains(&p) {
        return Err(Error::ExponentOutOfRange {
            name: "p",
            value: p,
            range: "2 <= p < 4",
        });
    }
    let v = twist(u)?;
    let v0 = v.first().clone();
    let q = q_exponent(3.0, 4.0)?;
    let l4 = u.slice_norms(4.0)?;
    let g: Vec<f64> = l4.iter().map(|x| x.powf(q)).collect();
    let t0 = u.start();
    (0..u.len())
        .into_par_iter()
        .map(|i| {
            let vi = &v.slices()[i];
            let t = u.times()[i];
            let mixed = trapezoid(&u.times()[..=i], &g[..=i]).powf(1.0 / q);
            Ok(PersistenceRow {
                t,
                twisted_lp: lp_norm(vi, p)?,
                untwisted_lp: lp_norm(&u.slices()[i], p)?,
                duhamel_lp: lp_norm(&vi.sub(&v0)?, p)?,
                control: (t - t0).powf(1.0 / (6.0 * p)) * mixed.powi(3),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StrichartzFlavor {
    /// `‖U(t)φ‖_{L^{Q_p(r)}_t L^r_x} / ‖φ̂‖_{L^p}`.
    FourierLp { p: f64, r: f64 },
    /// `‖U(t)φ‖_{L^γ_t L^σ_x} / ‖φ‖_{L^ρ}` with `2/γ + 1/σ = 1/ρ`.
    Kato { rho: f64, gamma: f64, sigma: f64 },
}

impl StrichartzFlavor {
    /// `(q, r)` of the space-time norm after validating the exponents.
    pub fn exponents(&self) -> Result<(f64, f64)> {
        match *self {
            StrichartzFlavor::FourierLp { p, r } => {
                if !admissibility_window(p, r) {
                    return Err(Error::ExponentOutOfRange {
                        name: "(p, r)",
                        value: p,
                        range: "0 < 1/Q_p(r) < min(1/4, 1/2 - 1/r)",
                    });
                }
                Ok((q_exponent(p, r)?, r))
            }
            StrichartzFlavor::Kato { rho, gamma, sigma } => {
                if !(rho > 1.0 && rho <= 2.0) {
                    return Err(Error::ExponentOutOfRange {
                        name: "rho",
                        value: rho,
                        range: "1 < rho <= 2",
                    });
                }
                if ((2.0 / gamma + 1.0 / sigma) - 1.0 / rho).abs() > 1e-12 {
                    return Err(Error::DegenerateExponent("2/gamma + 1/sigma must equal 1/rho"));
                }
                if !(1.0 / gamma + 1.0 / sigma < 0.5) {
                    return Err(Error::DegenerateExponent("1/gamma + 1/sigma must be < 1/2"));
                }
                Ok((gamma, sigma))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrichartzOptions {
    pub horizon: f64,
    pub n_times: usize,
    /// Time nodes `T(i/(n-1))^grading`, clustering near `t = 0`.
    pub grading: f64,
}

impl Default for StrichartzOptions {
    fn default() -> Self {
        Self {
            horizon: 1.0,
            n_times: 257,
            grading: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrichartzReport {
    pub q: f64,
    pub r: f64,
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    pub min_ratio: f64,
    pub max_over_min: f64,
}

fn graded_times(opts: &StrichartzOptions) -> Vec<f64> {
    let n = opts.n_times.max(3);
    (0..n)
        .map(|i| opts.horizon * (i as f64 / (n - 1) as f64).powf(opts.grading))
        .collect()
}

/// Space-time norm of the free flow over one data set divided by the data norm.
pub fn strichartz_single(phi: &Field, flavor: &StrichartzFlavor, opts: &StrichartzOptions) -> Result<f64> {
    let (q, r) = flavor.exponents()?;
    let times = graded_times(opts);
    let slices = times
        .iter()
        .map(|&t| free_propagate(phi, t))
        .collect::<Result<Vec<_>>>()?;
    let num = mixed_norm(&SpaceTimeField::new(times, slices)?, q, r)?;
    let den = match *flavor {
        StrichartzFlavor::FourierLp { p, .. } => fourier_lp_norm(phi, p)?,
        StrichartzFlavor::Kato { rho, .. } => lp_norm(phi, rho)?,
    };
    if den == 0.0 {
        return Err(Error::Empty("zero data in a Strichartz ratio"));
    }
    Ok(num / den)
}

pub fn strichartz_ratio(
    fields: &[Field],
    flavor: &StrichartzFlavor,
    opts: &StrichartzOptions,
) -> Result<StrichartzReport> {
    if fields.is_empty() {
        return Err(Error::Empty("field family"));
    }
    let (q, r) = flavor.exponents()?;
    let ratios = fields
        .par_iter()
        .map(|f| strichartz_single(f, flavor, opts))
        .collect::<Result<Vec<_>>>()?;
    let max_ratio = ratios.iter().copied().fold(f64::MIN, f64::max);
    let min_ratio = ratios.iter().copied().fold(f64::MAX, f64::min);
    Ok(StrichartzReport {
        q,
        r,
        max_over_min: max_ratio / min_ratio,
        ratios,
        max_ratio,
        min_ratio,
    })
}

/// `x ↦ φ(λx)` resampled from a closure.
pub fn dilate(grid: crate::spectral::GridSpec, f: impl Fn(f64) -> Complex64, lambda: f64) -> Result<Field> {
    Field::from_fn(grid, |x| f(lambda * x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{power_law, random_smooth};
    use crate::decomposition::d_class_decompose;
    use crate::norms::sup_l2_distance;
    use crate::solver::solve_nls_sampled;
    use crate::spectral::GridSpec;

    fn q(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    #[test]
    fn plan_arithmetic() {
        assert_eq!(globalcond_threshold_exact(q(3, 1)), q(3, 10));
        assert!((globalcond_threshold(3.0) - 0.3).abs() < 1e-15);
        assert_eq!(delta_exact(q(1, 1), q(1, 1), q(2, 1)), q(1, 256));
        let plan = make_plan(2.5, 0.5, 4.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(plan.delta_n, 1.0 / 256.0);
        assert_eq!(life_span_exponent_exact(q(3, 1), q(1, 4)), q(1, 7));
        assert!((life_span_exponent(3.0, 0.25) - 1.0 / 7.0).abs() < 1e-15);
        for &(p0, a) in &[(q(29, 10), q(29, 160)), (q(5, 2), q(1, 5)), (q(3, 1), q(1, 4))] {
            assert_eq!(repeat_exponent_exact(p0, a) - a * 4, life_span_exponent_exact(p0, a));
        }
        assert!(make_plan(3.0, 0.2, 4.0, 1.0, 1.0, 1.0).is_err());
        assert!(make_plan(1.9, 0.2, 4.0, 1.0, 1.0, 1.0).is_err());
        assert!(matches!(make_plan(2.5, 0.2, 1.0, 1.0, 1.0, 1.0), Err(Error::BadPlan(_))));
    }

    #[test]
    fn plan_fields_are_consistent() {
        let plan = make_plan(2.9, 0.18125, 16.0, 4.0, 3.0, 1.0).unwrap();
        let expect_delta = (4.0 * 2.0 * 3.0 * 16f64.powf(0.18125)).powi(-4);
        assert!((plan.delta_n - expect_delta).abs() < 1e-15 * expect_delta);
        assert_eq!(plan.n0, 16f64.powf(repeat_exponent(2.9, 0.18125)).floor() as u64);
        assert_eq!(plan.t_n, plan.n0 as f64 * plan.delta_n);
        assert!(plan.globalcond);
    }

    #[test]
    fn life_span_monotone_iff_globalcond() {
        let ns: Vec<f64> = (1..=12).map(|k| 2f64.powi(k) * 8.0).collect();
        let t = |alpha: f64| -> Vec<f64> {
            ns.iter()
                .map(|&n| make_plan(2.9, alpha, n, 4.0, 1.0, 1.0).unwrap().t_n)
                .collect()
        };
        let good = t(0.18125);
        assert!(good.windows(2).all(|w| w[1] > w[0]), "{good:?}");
        let above = globalcond_threshold(2.9) + 0.05;
        assert!(life_span_exponent(2.9, above) <= 0.0);
        assert!(!make_plan(2.9, above, 8.0, 4.0, 1.0, 1.0).unwrap().globalcond);
    }

    fn gaussian_pair(n: f64) -> DecompositionPair {
        let g = GridSpec::new(512, 40.0).unwrap();
        let f = Field::from_real_fn(g, |x| (-x * x).exp()).unwrap();
        d_class_decompose(&f, 2.9, 0.3, n).unwrap()
    }

    #[test]
    fn pure_l2_data_has_no_w() {
        let pair = gaussian_pair(4.0);
        assert_eq!(pair.psi_lp0().unwrap(), 0.0);
        let plan = make_plan(2.9, 0.3, 4.0, 4.0, pair.c0_fit, 1.0).unwrap();
        let cfg = SolverConfig::new(1e-5);
        let run = run_scheme(&pair, &plan, &cfg, &SchemeOptions::default()).unwrap();
        assert!(run.completed());
        assert_eq!(run.records.len(), plan.n0 as usize);
        for r in &run.records {
            assert_eq!(r.duhamel_l2, 0.0);
            assert_eq!(r.w_y_seminorm, 0.0);
        }
        let direct = solve_nls_sampled(&pair.phi_n, run.u.times(), &cfg).unwrap();
        assert!(sup_l2_distance(&run.u, &direct.trajectory).unwrap() < 1e-6);
        let audit = l2_growth_audit(&run.records, &plan).unwrap();
        assert_eq!(audit.duhamel_sum, 0.0);
        assert!(audit.ratio_ok);
    }

    #[test]
    fn zero_data_gives_zero() {
        let g = GridSpec::new(256, 20.0).unwrap();
        let pair = d_class_decompose(&Field::zeros(g), 2.9, 0.3, 4.0).unwrap();
        let plan = make_plan(2.9, 0.3, 4.0, 4.0, 1.0, 1.0).unwrap();
        let run = run_scheme(&pair, &plan, &SolverConfig::new(1e-3), &SchemeOptions::default()).unwrap();
        assert!(run.u.slices().iter().all(|s| s.max_abs() == 0.0));
        assert!(run.records.iter().all(|r| r.budgets_ok()));
    }

    #[test]
    fn power_law_scheme_matches_direct_solve() {
        let g = GridSpec::new(1024, 100.0).unwrap();
        let f = power_law(g, 0.49, 1.0).unwrap();
        let pair = d_class_decompose(&f, 2.9, 0.18125, 4.0).unwrap();
        assert!(pair.psi_lp0().unwrap() > 0.0);
        let plan = make_plan(2.9, 0.18125, 4.0, 4.0, pair.c0_fit, 1.0).unwrap();
        let cfg = SolverConfig::new(1e-3);
        let run = run_scheme(&pair, &plan, &cfg, &SchemeOptions::default()).unwrap();
        assert!(run.completed());
        let psi_l2 = run.records[0].psi_k_l2;
        for r in &run.records {
            assert!((r.psi_k_l2 - psi_l2).abs() < 1e-10 * psi_l2);
        }
        let direct = solve_nls_sampled(&f, run.u.times(), &cfg).unwrap();
        assert!(sup_l2_distance(&run.u, &direct.trajectory).unwrap() < 1e-10);
    }

    #[test]
    fn audit_needs_records() {
        let plan = make_plan(2.9, 0.3, 4.0, 4.0, 1.0, 1.0).unwrap();
        assert!(matches!(l2_growth_audit(&[], &plan), Err(Error::Empty(_))));
    }

    #[test]
    fn overlap_metric() {
        let g = GridSpec::new(256, 20.0).unwrap();
        let f = random_smooth(g, 1, 1.0).unwrap();
        let p = random_smooth(g, 2, 1.0).unwrap();
        let u = SpaceTimeField::from_fn(0.0, 1.0, 6, |t| free_propagate(&f, t)).unwrap();
        let o = uniqueness_overlap(&u, &u).unwrap();
        assert_eq!(o.sup_relative_l2, 0.0);
        assert_eq!(o.l4_l6, Some(0.0));
        let eps = 1e-3;
        let pert = u.map_slices(|t, s| s.axpby(1.0.into(), &free_propagate(&p, t)?, (eps * f.l2_norm() / p.l2_norm()).into())).unwrap();
        let o = uniqueness_overlap(&pert, &u).unwrap();
        assert!((o.sup_relative_l2 - eps).abs() < 1e-9);
        let later = SpaceTimeField::from_fn(2.0, 3.0, 4, |t| free_propagate(&f, t)).unwrap();
        assert_eq!(uniqueness_overlap(&u, &later).unwrap_err(), Error::DisjointTrajectories);
    }

    #[test]
    fn persistence_of_linear_flow_is_flat() {
        let g = GridSpec::new(512, 40.0).unwrap();
        let f = random_smooth(g, 3, 1.0).unwrap();
        let u = SpaceTimeField::from_fn(0.0, 1.0, 9, |t| free_propagate(&f, t)).unwrap();
        let rows = persistence_report(&u, 2.1).unwrap();
        let base = lp_norm(&f, 2.1).unwrap();
        for r in &rows {
            assert!((r.twisted_lp - base).abs() < 1e-10 * base);
            assert!(r.duhamel_lp < 1e-10);
        }
        assert_eq!(rows[0].control, 0.0);
        assert!(persistence_report(&u, 4.0).is_err());
    }

    #[test]
    fn strichartz_flavors() {
        assert!((StrichartzFlavor::FourierLp { p: 2.0, r: 6.0 }.exponents().unwrap().0 - 6.0).abs() < 1e-12);
        assert!(StrichartzFlavor::FourierLp { p: 3.0, r: 6.0 }.exponents().is_err());
        // ρ = 2: 2/γ + 1/σ = 1/2 and 1/γ + 1/σ < 1/2
        assert!(StrichartzFlavor::Kato { rho: 1.5, gamma: 6.0, sigma: 3.0 }.exponents().is_err());
        let k = StrichartzFlavor::Kato { rho: 2.0, gamma: 6.0, sigma: 6.0 };
        assert_eq!(k.exponents().unwrap(), (6.0, 6.0));

        let g = GridSpec::new(1024, 60.0).unwrap();
        let f = random_smooth(g, 5, 1.0).unwrap();
        let flavor = StrichartzFlavor::FourierLp { p: 2.0, r: 6.0 };
        let opts = StrichartzOptions { n_times: 65, ..Default::default() };
        let a = strichartz_single(&f, &flavor, &opts).unwrap();
        let b = strichartz_single(&f.scale(Complex64::new(2.0, 0.0)), &flavor, &opts).unwrap();
        assert!((a - b).abs() < 1e-12 * a);
    }
}
