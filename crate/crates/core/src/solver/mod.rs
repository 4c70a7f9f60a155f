//! Integrators for `i u_t + u_xx + |u|²u = 0`, the difference equation
//! `i w_t + w_xx + G(v, w) = 0`, and the trilinear Duhamel form.
//!
//! Both schemes march on a mesh whose nodes include every requested output
//! time, so trajectories from different solves line up slice by slice.

mod picard;
mod splitstep;
pub mod trilinear;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::norms::{y_seminorm, SpaceTimeField, MIN_SLICES};
use crate::spectral::{fourier, inverse_fourier, Field};
use picard::picard_window;
use splitstep::{strang_step, strang_step_pair, Linear};

pub use trilinear::{factorization_check, factorization_residual, trilinear_d, FactorizationCheck, TrilinearResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    StrangSplitstep,
    PicardDuhamel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub dt: f64,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default = "default_picard_max_iter")]
    pub picard_max_iter: usize,
    #[serde(default = "default_picard_tol")]
    pub picard_tol: f64,
    /// Mesh steps per Picard window.
    #[serde(default = "default_picard_window")]
    pub picard_window: usize,
    /// Keep every `record_every`-th step of a trajectory (endpoints always kept).
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    /// Abort when `sup|u|` exceeds this multiple of the initial `sup|u|`.
    #[serde(default = "default_blowup_factor")]
    pub blowup_factor: f64,
}

fn default_picard_max_iter() -> usize {
    50
}
fn default_picard_tol() -> f64 {
    1e-10
}
fn default_picard_window() -> usize {
    32
}
fn default_record_every() -> usize {
    10
}
fn default_blowup_factor() -> f64 {
    1e6
}

impl SolverConfig {
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            scheme: Scheme::default(),
            picard_max_iter: default_picard_max_iter(),
            picard_tol: default_picard_tol(),
            picard_window: default_picard_window(),
            record_every: default_record_every(),
            blowup_factor: default_blowup_factor(),
        }
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_record_every(mut self, k: usize) -> Self {
        self.record_every = k;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::BadSolverConfig(m.to_string()));
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad("dt must be positive and finite");
        }
        if !(self.picard_tol > 0.0) {
            return bad("picard_tol must be positive");
        }
        if self.picard_max_iter == 0 || self.picard_window == 0 || self.record_every == 0 {
            return bad("picard_max_iter, picard_window and record_every must be >= 1");
        }
        if !(self.blowup_factor > 0.0) {
            return bad("blowup_factor must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub steps: usize,
    /// Most Picard iterations needed by any window.
    pub picard_iterations: usize,
    /// Largest observed ratio of successive Picard changes.
    pub picard_contraction: f64,
    pub max_amplitude: f64,
}

impl SolveStats {
    /// Combine statistics of consecutive solves.
    pub fn absorb(&mut self, other: &SolveStats) {
        self.steps += other.steps;
        self.picard_iterations = self.picard_iterations.max(other.picard_iterations);
        self.picard_contraction = self.picard_contraction.max(other.picard_contraction);
        self.max_amplitude = self.max_amplitude.max(other.max_amplitude);
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub trajectory: SpaceTimeField,
    pub stats: SolveStats,
}

fn substeps(a: f64, b: f64, dt: f64) -> usize {
    (((b - a) / dt) - 1e-9).ceil().max(1.0) as usize
}

/// Mesh through every time in `times`, with steps no longer than `dt`.
/// Returns the mesh and, for each mesh node, whether it is one of `times`.
fn mesh_through(times: &[f64], dt: f64) -> (Vec<f64>, Vec<bool>) {
    let mut mesh = vec![times[0]];
    let mut keep = vec![true];
    for w in times.windows(2) {
        let k = substeps(w[0], w[1], dt);
        let h = (w[1] - w[0]) / k as f64;
        for i in 1..k {
            mesh.push(w[0] + i as f64 * h);
            keep.push(false);
        }
        mesh.push(w[1]);
        keep.push(true);
    }
    (mesh, keep)
}

/// Uniform mesh on `[t1, t2]` with at least two steps, recording every
/// `stride`-th node (reduced so that at least three slices are kept).
fn uniform_mesh(t1: f64, t2: f64, cfg: &SolverConfig) -> (Vec<f64>, Vec<bool>) {
    let n = substeps(t1, t2, cfg.dt).max(2);
    let h = (t2 - t1) / n as f64;
    let stride = cfg.record_every.min(n / 2).max(1);
    let mesh: Vec<f64> = (0..=n)
        .map(|k| if k == n { t2 } else { t1 + k as f64 * h })
        .collect();
    let keep = (0..=n).map(|k| k % stride == 0 || k == n).collect();
    (mesh, keep)
}

struct Guard {
    ceiling: f64,
    max_seen: f64,
}

impl Guard {
    fn new(cfg: &SolverConfig, sup0: f64) -> Self {
        Self {
            ceiling: cfg.blowup_factor * sup0,
            max_seen: sup0,
        }
    }

    fn check(&mut self, buf: &[Complex64], t: f64) -> Result<()> {
        let mut m = 0.0f64;
        for z in buf {
            if !z.is_finite() {
                return Err(Error::NonFinite("time stepping"));
            }
            m = m.max(z.norm());
        }
        self.max_seen = self.max_seen.max(m);
        if m > self.ceiling {
            return Err(Error::BlowUp {
                t,
                amplitude: m,
                ceiling: self.ceiling,
            });
        }
        Ok(())
    }
}

fn cubic(u: &[Complex64]) -> Vec<Complex64> {
    u.iter().map(|z| z * z.norm_sqr()).collect()
}

/// March `u' = NLS(u)` over `mesh`, keeping the flagged nodes.
fn march_nls(phi: &Field, mesh: &[f64], keep: &[bool], cfg: &SolverConfig) -> Result<Solution> {
    cfg.validate()?;
    let grid = *phi.grid();
    let mut lin = Linear::new(grid);
    let mut guard = Guard::new(cfg, phi.max_abs());
    let mut stats = SolveStats::default();
    let mut times = vec![mesh[0]];
    let mut slices = vec![phi.clone()];
    let mut buf = phi.samples().to_vec();

    match cfg.scheme {
        Scheme::StrangSplitstep => {
            for k in 1..mesh.len() {
                strang_step(&mut lin, &mut buf, mesh[k] - mesh[k - 1]);
                guard.check(&buf, mesh[k])?;
                if keep[k] {
                    times.push(mesh[k]);
                    slices.push(Field::from_raw(grid, buf.clone()));
                }
            }
        }
        Scheme::PicardDuhamel => {
            let mut s = 0;
            while s + 1 < mesh.len() {
                let e = (s + cfg.picard_window).min(mesh.len() - 1);
                let out = picard_window(
                    &mut lin,
                    &buf,
                    &mesh[s..=e],
                    cfg.picard_max_iter,
                    cfg.picard_tol,
                    |_, u| cubic(u),
                )?;
                stats.picard_iterations = stats.picard_iterations.max(out.iterations);
                stats.picard_contraction = stats.picard_contraction.max(out.contraction);
                for (j, f) in out.fields.into_iter().enumerate().skip(1) {
                    guard.check(&f, mesh[s + j])?;
                    if keep[s + j] {
                        times.push(mesh[s + j]);
                        slices.push(Field::from_raw(grid, f.clone()));
                    }
                    if s + j == e {
                        buf = f;
                    }
                }
                s = e;
            }
        }
    }
    stats.steps = mesh.len() - 1;
    stats.max_amplitude = guard.max_seen;
    Ok(Solution {
        trajectory: SpaceTimeField::new(times, slices)?,
        stats,
    })
}

/// NLS trajectory on `[t1, t2]` with detailed statistics.
pub fn solve_nls_detailed(phi: &Field, t1: f64, t2: f64, cfg: &SolverConfig) -> Result<Solution> {
    if !(t2 > t1) || !t1.is_finite() || !t2.is_finite() {
        return Err(Error::BadInterval(t1, t2));
    }
    cfg.validate()?;
    let (mesh, keep) = uniform_mesh(t1, t2, cfg);
    march_nls(phi, &mesh, &keep, cfg)
}

/// NLS trajectory on `[t1, t2]` starting from `phi` at `t1`.
pub fn solve_nls(phi: &Field, t1: f64, t2: f64, cfg: &SolverConfig) -> Result<SpaceTimeField> {
    Ok(solve_nls_detailed(phi, t1, t2, cfg)?.trajectory)
}

/// NLS trajectory recorded exactly at `times` (`phi` is the state at `times[0]`).
pub fn solve_nls_sampled(phi: &Field, times: &[f64], cfg: &SolverConfig) -> Result<Solution> {
    if times.len() < MIN_SLICES {
        return Err(Error::TooFewSlices {
            needed: MIN_SLICES,
            got: times.len(),
        });
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::TimesNotIncreasing);
    }
    cfg.validate()?;
    let (mesh, keep) = mesh_through(times, cfg.dt);
    march_nls(phi, &mesh, &keep, cfg)
}

#[derive(Debug, Clone)]
pub struct L2Local {
    pub trajectory: SpaceTimeField,
    /// `T₀ = (k₂‖φ‖₂)^{-4}`.
    pub t0_len: f64,
    /// `‖v‖_{Ỹ²₂}` on `[t₀, t₀+T₀]`.
    pub y_seminorm: f64,
    /// `y_seminorm / ‖φ‖₂³`, an empirical lower bound for `K₁`.
    pub k1_ratio: f64,
    pub stats: SolveStats,
}

/// Solve on `[t₀, t₀ + (k₂‖φ‖₂)^{-4}]`.
pub fn solve_l2_local(phi: &Field, t0: f64, k2: f64, cfg: &SolverConfig) -> Result<L2Local> {
    let mass = phi.l2_norm();
    if !(mass > 0.0) {
        return Err(Error::Empty("data with zero L2 norm"));
    }
    if !(k2 > 0.0) {
        return Err(Error::BadSolverConfig("k2 must be positive".into()));
    }
    let t0_len = (k2 * mass).powi(-4);
    let sol = solve_nls_detailed(phi, t0, t0 + t0_len, cfg)?;
    let y = y_seminorm(&sol.trajectory, 2.0, 2.0, 0.0)?;
    Ok(L2Local {
        trajectory: sol.trajectory,
        t0_len,
        y_seminorm: y,
        k1_ratio: y / mass.powi(3),
        stats: sol.stats,
    })
}

/// `G(v, w) = v²w̄ + 2|v|²w + 2v|w|² + v̄w² + |w|²w`, which equals
/// `|v+w|²(v+w) - |v|²v`.
pub fn difference_nonlinearity(v: &Field, w: &Field) -> Result<Field> {
    if v.grid() != w.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(Field::from_raw(
        *v.grid(),
        g_raw(v.samples(), w.samples()),
    ))
}

fn g_raw(v: &[Complex64], w: &[Complex64]) -> Vec<Complex64> {
    v.iter()
        .zip(w)
        .map(|(&a, &b)| {
            let (na, nb) = (a.norm_sqr(), b.norm_sqr());
            a * a * b.conj() + 2.0 * na * b + 2.0 * a * nb + a.conj() * b * b + nb * b
        })
        .collect()
}

/// `v` at mesh time `s` by linear interpolation of the twisted variable
/// between the bracketing slices of `v_traj`.
fn interpolate_twisted(lin: &mut Linear, v_traj: &SpaceTimeField, s: f64) -> Vec<Complex64> {
    let times = v_traj.times();
    let i = times.partition_point(|&t| t <= s).clamp(1, times.len() - 1);
    let (a, b) = (times[i - 1], times[i]);
    if s == a {
        return v_traj.slices()[i - 1].samples().to_vec();
    }
    if s == b {
        return v_traj.slices()[i].samples().to_vec();
    }
    let lam = (s - a) / (b - a);
    let mut vb = v_traj.slices()[i].samples().to_vec();
    lin.apply(&mut vb, a - b);
    let mut mix: Vec<Complex64> = v_traj.slices()[i - 1]
        .samples()
        .iter()
        .zip(&vb)
        .map(|(x, y)| (1.0 - lam) * x + lam * y)
        .collect();
    lin.apply(&mut mix, s - a);
    mix
}

/// `w` on the mesh of `v_traj` with `w(T₁) = ψ`, solving
/// `i w_t + w_xx + G(v, w) = 0`.
pub fn solve_difference_detailed(
    v_traj: &SpaceTimeField,
    psi: &Field,
    cfg: &SolverConfig,
) -> Result<Solution> {
    cfg.validate()?;
    if v_traj.grid() != psi.grid() {
        return Err(Error::GridMismatch);
    }
    let grid = *psi.grid();
    let (mesh, keep) = mesh_through(v_traj.times(), cfg.dt);
    let mut lin = Linear::new(grid);
    let mut guard = Guard::new(cfg, psi.max_abs().max(v_traj.first().max_abs()));
    let mut stats = SolveStats::default();
    let mut slices = vec![psi.clone()];
    let mut w = psi.samples().to_vec();

    match cfg.scheme {
        Scheme::StrangSplitstep => {
            let mut v = Vec::new();
            let mut slot = 0;
            for k in 1..mesh.len() {
                if keep[k - 1] {
                    v = v_traj.slices()[slot].samples().to_vec();
                    slot += 1;
                }
                strang_step_pair(&mut lin, &mut v, &mut w, mesh[k] - mesh[k - 1]);
                guard.check(&w, mesh[k])?;
                if keep[k] {
                    slices.push(Field::from_raw(grid, w.clone()));
                }
            }
        }
        Scheme::PicardDuhamel => {
            let mut s = 0;
            while s + 1 < mesh.len() {
                let e = (s + cfg.picard_window).min(mesh.len() - 1);
                let vs: Vec<Vec<Complex64>> = mesh[s..=e]
                    .iter()
                    .map(|&t| interpolate_twisted(&mut lin, v_traj, t))
                    .collect();
                let out = picard_window(
                    &mut lin,
                    &w,
                    &mesh[s..=e],
                    cfg.picard_max_iter,
                    cfg.picard_tol,
                    |j, wj| g_raw(&vs[j], wj),
                )?;
                stats.picard_iterations = stats.picard_iterations.max(out.iterations);
                stats.picard_contraction = stats.picard_contraction.max(out.contraction);
                for (j, f) in out.fields.into_iter().enumerate().skip(1) {
                    guard.check(&f, mesh[s + j])?;
                    if keep[s + j] {
                        slices.push(Field::from_raw(grid, f.clone()));
                    }
                    if s + j == e {
                        w = f;
                    }
                }
                s = e;
            }
        }
    }
    stats.steps = mesh.len() - 1;
    stats.max_amplitude = guard.max_seen;
    Ok(Solution {
        trajectory: SpaceTimeField::new(v_traj.times().to_vec(), slices)?,
        stats,
    })
}

pub fn solve_difference(v_traj: &SpaceTimeField, psi: &Field, cfg: &SolverConfig) -> Result<SpaceTimeField> {
    Ok(solve_difference_detailed(v_traj, psi, cfg)?.trajectory)
}

/// Relative residual `max_t ‖i u_t + u_xx + |u|²u‖₂ / max_t ‖u‖₂` over the
/// interior slices, with `u_t` by second-order differences.
pub fn pde_residual(u: &SpaceTimeField) -> Result<f64> {
    let du = crate::norms::time_derivative(u)?;
    let i = Complex64::new(0.0, 1.0);
    let mut worst = 0.0f64;
    let mut size = 0.0f64;
    for k in 1..u.len() - 1 {
        let f = &u.slices()[k];
        let mut spec = fourier(f)?;
        let grid = *f.grid();
        for (j, z) in spec.samples_mut().iter_mut().enumerate() {
            let xi = grid.xi(j);
            *z *= -xi * xi;
        }
        let uxx = inverse_fourier(&spec)?;
        let r: Vec<Complex64> = du.slices()[k]
            .samples()
            .iter()
            .zip(uxx.samples())
            .zip(f.samples())
            .map(|((&dt, &xx), &z)| i * dt + xx + z * z.norm_sqr())
            .collect();
        worst = worst.max(Field::from_raw(grid, r).l2_norm());
        size = size.max(f.l2_norm());
    }
    Ok(if size == 0.0 { worst } else { worst / size })
}
