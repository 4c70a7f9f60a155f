//! Fields on a truncated periodic line and the free Schrödinger group.
//!
//! Fourier convention (used everywhere in the crate): unitary, angular
//! frequency,
//!
//! ```text
//! f̂(ξ) = (2π)^{-1/2} ∫ f(x) e^{-ixξ} dx,     f(x) = (2π)^{-1/2} ∫ f̂(ξ) e^{ixξ} dξ.
//! ```
//!
//! The free flow `U(t) = e^{it∂²}` is the multiplier `e^{-itξ²}`. On the grid
//! `x_j = -L + j·dx` the transform is the DFT rescaled by `dx/√(2π)` with the
//! phase `e^{iξ_k L} = (-1)^k` absorbed, so `Σ|f̂|²dξ = Σ|f|²dx` exactly.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub(crate) fn forward_plan(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n))
}

pub(crate) fn inverse_plan(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n))
}

/// Uniform periodic grid on `[-L, L)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GridSpec {
    n_points: usize,
    half_width: f64,
}

impl GridSpec {
    pub fn new(n_points: usize, half_width: f64) -> Result<Self> {
        if n_points < 4 || !n_points.is_power_of_two() {
            return Err(Error::BadPointCount(n_points));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::BadHalfWidth(half_width));
        }
        Ok(Self {
            n_points,
            half_width,
        })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.n_points as f64
    }

    /// Spacing of the angular frequency grid, `π/L`.
    pub fn dxi(&self) -> f64 {
        PI / self.half_width
    }

    pub fn x(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.dx()
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(|j| self.x(j))
    }

    /// Signed wavenumber index of FFT bin `k` (standard FFT ordering).
    pub fn mode_index(&self, k: usize) -> i64 {
        let n = self.n_points as i64;
        let k = k as i64;
        if k < n / 2 {
            k
        } else {
            k - n
        }
    }

    /// Angular frequency of FFT bin `k`: `ξ = π·m/L`.
    pub fn xi(&self, k: usize) -> f64 {
        self.mode_index(k) as f64 * self.dxi()
    }

    pub fn xis(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(|k| self.xi(k))
    }

    /// Index of the grid point nearest to `x` (clamped to the grid).
    pub fn nearest_index(&self, x: f64) -> usize {
        let j = ((x + self.half_width) / self.dx()).round();
        j.clamp(0.0, (self.n_points - 1) as f64) as usize
    }

    /// Same physical window, `factor` times as many points.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::new(self.n_points * factor, self.half_width)
    }
}

/// Complex samples of a function on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: GridSpec,
    samples: Vec<Complex64>,
}

impl Field {
    pub fn new(grid: GridSpec, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.n_points() {
            return Err(Error::LengthMismatch {
                expected: grid.n_points(),
                got: samples.len(),
            });
        }
        if samples.iter().any(|z| !z.is_finite()) {
            return Err(Error::NonFinite("Field::new"));
        }
        Ok(Self { grid, samples })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            samples: vec![Complex64::new(0.0, 0.0); grid.n_points()],
        }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        Self::new(grid, grid.xs().map(f).collect())
    }

    pub fn from_real_fn(grid: GridSpec, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    /// Caller guarantees the length invariant.
    pub(crate) fn from_raw(grid: GridSpec, samples: Vec<Complex64>) -> Self {
        debug_assert_eq!(samples.len(), grid.n_points());
        Self { grid, samples }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|z| z.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, c: Complex64) -> Field {
        Field::from_raw(self.grid, self.samples.iter().map(|z| z * c).collect())
    }

    pub fn conj(&self) -> Field {
        Field::from_raw(self.grid, self.samples.iter().map(|z| z.conj()).collect())
    }

    pub fn map(&self, f: impl Fn(f64, Complex64) -> Complex64) -> Field {
        let samples = self
            .samples
            .iter()
            .enumerate()
            .map(|(j, &z)| f(self.grid.x(j), z))
            .collect();
        Field::from_raw(self.grid, samples)
    }

    fn zip_with(
        &self,
        other: &Field,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Field> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Field::from_raw(self.grid, samples))
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a * b)
    }

    /// `a·self + b·other`.
    pub fn axpby(&self, a: Complex64, other: &Field, b: Complex64) -> Result<Field> {
        self.zip_with(other, |x, y| a * x + b * y)
    }

    /// Discrete L² inner product `Σ conj(self)·other dx`.
    pub fn inner(&self, other: &Field) -> Result<Complex64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let s: Complex64 = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(s * self.grid.dx())
    }

    pub fn l2_norm(&self) -> f64 {
        lp_sum(&self.samples, 2.0, self.grid.dx())
    }
}

/// Samples of `f̂` at the frequencies `ξ_k`, in FFT bin order.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: GridSpec,
    samples: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(grid: GridSpec, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.n_points() {
            return Err(Error::LengthMismatch {
                expected: grid.n_points(),
                got: samples.len(),
            });
        }
        Ok(Self { grid, samples })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [Complex64] {
        &mut self.samples
    }

    /// Value at the bin with signed wavenumber index `m`.
    pub fn at_mode(&self, m: i64) -> Complex64 {
        let n = self.grid.n_points() as i64;
        self.samples[m.rem_euclid(n) as usize]
    }
}

#[inline]
fn parity(m: i64) -> f64 {
    if m.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

fn check_finite(samples: &[Complex64], what: &'static str) -> Result<()> {
    if samples.iter().all(|z| z.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

pub fn fourier(field: &Field) -> Result<Spectrum> {
    let grid = field.grid;
    let n = grid.n_points();
    let mut buf = field.samples.clone();
    forward_plan(n).process(&mut buf);
    let scale = grid.dx() / (2.0 * PI).sqrt();
    for (k, z) in buf.iter_mut().enumerate() {
        *z *= scale * parity(grid.mode_index(k));
    }
    check_finite(&buf, "fourier")?;
    Ok(Spectrum { grid, samples: buf })
}

pub fn inverse_fourier(spectrum: &Spectrum) -> Result<Field> {
    let grid = spectrum.grid;
    let n = grid.n_points();
    let mut buf: Vec<Complex64> = spectrum
        .samples
        .iter()
        .enumerate()
        .map(|(k, &z)| z * parity(grid.mode_index(k)))
        .collect();
    inverse_plan(n).process(&mut buf);
    let scale = grid.dxi() / (2.0 * PI).sqrt();
    for z in buf.iter_mut() {
        *z *= scale;
    }
    check_finite(&buf, "inverse_fourier")?;
    Ok(Field { grid, samples: buf })
}

/// Multiplier table `e^{-itξ_k²}/n` in FFT order, ready to be applied
/// between an unnormalized forward and inverse FFT.
pub(crate) fn propagator_table(grid: &GridSpec, t: f64) -> Vec<Complex64> {
    let inv_n = 1.0 / grid.n_points() as f64;
    grid.xis()
        .map(|xi| Complex64::from_polar(inv_n, -t * xi * xi))
        .collect()
}

/// Apply `U(t)` in place using a precomputed [`propagator_table`].
pub(crate) fn apply_table(
    samples: &mut [Complex64],
    table: &[Complex64],
    fwd: &dyn Fft<f64>,
    inv: &dyn Fft<f64>,
) {
    fwd.process(samples);
    for (z, m) in samples.iter_mut().zip(table) {
        *z *= m;
    }
    inv.process(samples);
}

/// `U(t)·field`, i.e. the multiplier `e^{-itξ²}`.
pub fn free_propagate(field: &Field, t: f64) -> Result<Field> {
    if t == 0.0 {
        return Ok(field.clone());
    }
    let grid = field.grid;
    let n = grid.n_points();
    let table = propagator_table(&grid, t);
    let mut buf = field.samples.clone();
    apply_table(&mut buf, &table, &*forward_plan(n), &*inverse_plan(n));
    check_finite(&buf, "free_propagate")?;
    Ok(Field { grid, samples: buf })
}

fn lp_sum(samples: &[Complex64], p: f64, measure: f64) -> f64 {
    if p == 2.0 {
        let s: f64 = samples.iter().map(|z| z.norm_sqr()).sum();
        return (s * measure).sqrt();
    }
    // Scale by the max to keep |z|^p away from overflow/underflow.
    let m = samples.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if m == 0.0 {
        return 0.0;
    }
    let s: f64 = samples.iter().map(|z| (z.norm() / m).powf(p)).sum();
    m * (s * measure).powf(1.0 / p)
}

/// `(Σ|f_j|^p dx)^{1/p}`.
pub fn lp_norm(field: &Field, p: f64) -> Result<f64> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::BadLebesgueExponent(p));
    }
    Ok(lp_sum(&field.samples, p, field.grid.dx()))
}

/// `sup_j |f_j|`.
pub fn sup_norm(field: &Field) -> f64 {
    field.max_abs()
}

/// `(Σ|f̂_k|^p dξ)^{1/p}`.
pub fn fourier_lp_norm(field: &Field, p: f64) -> Result<f64> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::BadLebesgueExponent(p));
    }
    let spec = fourier(field)?;
    Ok(lp_sum(&spec.samples, p, field.grid.dxi()))
}

/// Fraction of `‖f‖₂²` carried within `L/4` of the periodic boundary.
pub fn boundary_mass_fraction(field: &Field) -> f64 {
    let grid = field.grid;
    let edge = 0.75 * grid.half_width();
    let mut outer = 0.0;
    let mut total = 0.0;
    for (j, z) in field.samples.iter().enumerate() {
        let m = z.norm_sqr();
        total += m;
        if grid.x(j).abs() > edge {
            outer += m;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        outer / total
    }
}

/// Relative L² distance `‖a-b‖₂/‖b‖₂` (absolute when `b = 0`).
pub fn relative_l2_distance(a: &Field, b: &Field) -> Result<f64> {
    let d = a.sub(b)?.l2_norm();
    let r = b.l2_norm();
    Ok(if r == 0.0 { d } else { d / r })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec::new(1024, 40.0).unwrap()
    }

    #[test]
    fn grid_rejects_bad_sizes() {
        assert_eq!(GridSpec::new(2, 1.0), Err(Error::BadPointCount(2)));
        assert_eq!(GridSpec::new(12, 1.0), Err(Error::BadPointCount(12)));
        assert!(matches!(GridSpec::new(16, 0.0), Err(Error::BadHalfWidth(_))));
        let g = GridSpec::new(16, 2.0).unwrap();
        assert_eq!(g.dx() * 16.0, 4.0);
        assert_eq!(g.xi(0), 0.0);
        assert_eq!(g.mode_index(8), -8);
        assert!((g.xi(1) - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn field_rejects_nan_and_wrong_length() {
        let g = GridSpec::new(4, 1.0).unwrap();
        assert!(matches!(
            Field::new(g, vec![Complex64::new(0.0, 0.0); 3]),
            Err(Error::LengthMismatch { .. })
        ));
        let mut s = vec![Complex64::new(0.0, 0.0); 4];
        s[2] = Complex64::new(f64::NAN, 0.0);
        assert_eq!(Field::new(g, s), Err(Error::NonFinite("Field::new")));
    }

    #[test]
    fn inverse_pair() {
        let g = grid();
        let f = Field::from_fn(g, |x| {
            Complex64::new((-x * x / 3.0).exp(), (x / 2.0).sin() * (-x * x / 8.0).exp())
        })
        .unwrap();
        let back = inverse_fourier(&fourier(&f).unwrap()).unwrap();
        assert!(relative_l2_distance(&back, &f).unwrap() < 1e-12);
    }

    #[test]
    fn constant_goes_to_dc() {
        let g = grid();
        let f = Field::from_real_fn(g, |_| 1.0).unwrap();
        let s = fourier(&f).unwrap();
        let dc = s.at_mode(0).norm();
        // ∫_{-L}^{L} 1 dx / √(2π)
        assert!((dc - 2.0 * g.half_width() / (2.0 * PI).sqrt()).abs() < 1e-10);
        for k in 1..g.n_points() {
            assert!(s.samples()[k].norm() < 1e-10 * dc);
        }
    }

    #[test]
    fn gaussian_spectrum_matches_closed_form() {
        // ∫ e^{-x²} e^{-ixξ} dx = √π e^{-ξ²/4}; unitary scaling gives e^{-ξ²/4}/√2.
        let g = grid();
        let f = Field::from_real_fn(g, |x| (-x * x).exp()).unwrap();
        let s = fourier(&f).unwrap();
        let err = g
            .xis()
            .zip(s.samples())
            .map(|(xi, z)| (z - Complex64::new((-xi * xi / 4.0).exp() / 2f64.sqrt(), 0.0)).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-13, "err = {err:e}");
    }

    #[test]
    fn free_flow_of_single_mode() {
        let g = GridSpec::new(256, 10.0).unwrap();
        let xi = g.xi(7);
        let f = Field::from_fn(g, |x| Complex64::from_polar(1.0, xi * x)).unwrap();
        let t = 0.37;
        let out = free_propagate(&f, t).unwrap();
        let expect = f.scale(Complex64::from_polar(1.0, -xi * xi * t));
        assert!(relative_l2_distance(&out, &expect).unwrap() < 1e-12);
        assert_eq!(free_propagate(&f, 0.0).unwrap(), f);
    }

    #[test]
    fn gaussian_free_flow_matches_analytic() {
        // i u_t + u_xx = 0 from e^{-x²}: u = (1+4it)^{-1/2} exp(-x²/(1+4it)).
        let g = GridSpec::new(4096, 100.0).unwrap();
        let f = Field::from_real_fn(g, |x| (-x * x).exp()).unwrap();
        for &t in &[0.25, 1.0, 2.0, -0.5] {
            let out = free_propagate(&f, t).unwrap();
            let a = Complex64::new(1.0, 4.0 * t);
            let err = g
                .xs()
                .zip(out.samples())
                .map(|(x, z)| (z - a.powf(-0.5) * (-x * x / a).exp()).norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-8, "t = {t}: err = {err:e}");
        }
    }

    #[test]
    fn indicator_has_unit_norm_for_every_p() {
        let g = GridSpec::new(512, 8.0).unwrap();
        let (a, b) = (g.nearest_index(0.0), g.nearest_index(1.0));
        let samples = (0..g.n_points())
            .map(|j| Complex64::new(if j >= a && j < b { 1.0 } else { 0.0 }, 0.0))
            .collect();
        let f = Field::new(g, samples).unwrap();
        for &p in &[1.0, 1.5, 2.0, 3.0, 7.5] {
            assert!((lp_norm(&f, p).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn lp_norm_rejects_small_exponent() {
        let f = Field::zeros(grid());
        assert_eq!(lp_norm(&f, 0.5), Err(Error::BadLebesgueExponent(0.5)));
        assert_eq!(fourier_lp_norm(&f, 0.9), Err(Error::BadLebesgueExponent(0.9)));
        assert_eq!(lp_norm(&f, 3.0).unwrap(), 0.0);
    }

    #[test]
    fn gaussian_l2_norm() {
        let f = Field::from_real_fn(grid(), |x| (-x * x).exp()).unwrap();
        let expect = (PI / 2.0).powf(0.25);
        assert!((lp_norm(&f, 2.0).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn fourier_lp_of_gaussian_and_single_mode() {
        let g = grid();
        let f = Field::from_real_fn(g, |x| (-x * x).exp()).unwrap();
        // ∫ (e^{-ξ²/4}/√2)^p dξ = 2^{-p/2} √(4π/p)
        let p = 3.0;
        let expect = (2f64.powf(-p / 2.0) * (4.0 * PI / p).sqrt()).powf(1.0 / p);
        assert!((fourier_lp_norm(&f, p).unwrap() - expect).abs() < 1e-10);

        let xi = g.xi(5);
        let amp = 0.7;
        let m = Field::from_fn(g, |x| Complex64::from_polar(amp, xi * x)).unwrap();
        let bin = amp * 2.0 * g.half_width() / (2.0 * PI).sqrt();
        let expect = bin * g.dxi().powf(1.0 / p);
        assert!((fourier_lp_norm(&m, p).unwrap() - expect).abs() < 1e-10 * expect);
    }

    #[test]
    fn boundary_fraction_of_centered_bump_is_tiny() {
        let f = Field::from_real_fn(grid(), |x| (-x * x).exp()).unwrap();
        assert!(boundary_mass_fraction(&f) < 1e-100);
        assert_eq!(boundary_mass_fraction(&Field::zeros(grid())), 0.0);
    }
}
