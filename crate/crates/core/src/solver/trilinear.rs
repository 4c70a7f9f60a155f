//! The trilinear form `𝒟_{t₀}(Z₁,Z₂,Z₃)(t) = ∫_{t₀}^t U(-s)[U(s)Z₁ · conj(U(s)Z₂) · U(s)Z₃] ds`
//! and the pointwise factorization of its integrand.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::norms::SpaceTimeField;
use crate::spectral::{fourier, free_propagate, inverse_fourier, Field, Spectrum};

#[derive(Debug, Clone)]
pub struct TrilinearResult {
    pub value: SpaceTimeField,
    pub t0: f64,
    pub fitted_c: Option<Complex64>,
}

fn product3(a: &Field, b: &Field, c: &Field) -> Result<Field> {
    if a.grid() != b.grid() || a.grid() != c.grid() {
        return Err(Error::GridMismatch);
    }
    let s = a
        .samples()
        .iter()
        .zip(b.samples())
        .zip(c.samples())
        .map(|((&x, &y), &z)| x * y.conj() * z)
        .collect();
    Ok(Field::from_raw(*a.grid(), s))
}

/// `U(-s)[U(s)Z₁ · conj(U(s)Z₂) · U(s)Z₃]`.
pub fn trilinear_integrand(z1: &Field, z2: &Field, z3: &Field, s: f64) -> Result<Field> {
    let (a, b, c) = (
        free_propagate(z1, s)?,
        free_propagate(z2, s)?,
        free_propagate(z3, s)?,
    );
    free_propagate(&product3(&a, &b, &c)?, -s)
}

/// Trapezoid quadrature of [`trilinear_integrand`] on the common mesh,
/// anchored at the mesh time `t0`.
pub fn trilinear_d(
    z1: &SpaceTimeField,
    z2: &SpaceTimeField,
    z3: &SpaceTimeField,
    t0: f64,
) -> Result<TrilinearResult> {
    if z1.times() != z2.times() || z1.times() != z3.times() {
        return Err(Error::LengthMismatch {
            expected: z1.len(),
            got: z2.len().min(z3.len()),
        });
    }
    if z1.grid() != z2.grid() || z1.grid() != z3.grid() {
        return Err(Error::GridMismatch);
    }
    let times = z1.times();
    let tol = 1e-12 * (1.0 + t0.abs());
    let i0 = z1.index_of(t0, tol).ok_or(Error::TimeNotOnMesh(t0))?;
    let integrand: Vec<Field> = (0..times.len())
        .into_par_iter()
        .map(|k| {
            trilinear_integrand(
                &z1.slices()[k],
                &z2.slices()[k],
                &z3.slices()[k],
                times[k],
            )
        })
        .collect::<Result<_>>()?;

    let grid = *z1.grid();
    let mut value = vec![Field::zeros(grid); times.len()];
    let half = Complex64::new(0.5, 0.0);
    for k in i0 + 1..times.len() {
        let h = Complex64::new(times[k] - times[k - 1], 0.0);
        let step = integrand[k - 1].axpby(half * h, &integrand[k], half * h)?;
        value[k] = value[k - 1].add(&step)?;
    }
    for k in (0..i0).rev() {
        let h = Complex64::new(times[k + 1] - times[k], 0.0);
        let step = integrand[k].axpby(half * h, &integrand[k + 1], half * h)?;
        value[k] = value[k + 1].sub(&step)?;
    }
    Ok(TrilinearResult {
        value: SpaceTimeField::new(times.to_vec(), value)?,
        t0: times[i0],
        fitted_c: None,
    })
}

#[derive(Debug, Clone)]
pub struct FactorizationCheck {
    pub lhs: Field,
    pub rhs: Field,
    pub fitted_c: Complex64,
    pub relative_error: f64,
}

/// `M_t f = e^{ix²/4t} f`, or its inverse.
fn chirp(f: &Field, t: f64, inverse: bool) -> Field {
    let sign = if inverse { -1.0 } else { 1.0 };
    f.map(|x, z| z * Complex64::from_polar(1.0, sign * x * x / (4.0 * t)))
}

/// Both sides of
///
/// ```text
/// U(-t)[UZ₁ · conj(UZ₂) · UZ₃] = c t^{-1} M_t^{-1} ℱ^{-1}[ℱM_tZ₁ · conj(ℱM_tZ₂) · ℱM_tZ₃]
/// ```
///
/// as `(lhs, rhs)` with `rhs` computed for `c = 1`.
fn factorization_sides(z1: &Field, z2: &Field, z3: &Field, t: f64, t_min: f64) -> Result<(Field, Field)> {
    if !(t.abs() >= t_min) {
        return Err(Error::TimeTooSmall { t, t_min });
    }
    let lhs = trilinear_integrand(z1, z2, z3, t)?;
    let (a, b, c) = (
        fourier(&chirp(z1, t, false))?,
        fourier(&chirp(z2, t, false))?,
        fourier(&chirp(z3, t, false))?,
    );
    let prod: Vec<Complex64> = a
        .samples()
        .iter()
        .zip(b.samples())
        .zip(c.samples())
        .map(|((&x, &y), &z)| x * y.conj() * z / t)
        .collect();
    let inner = inverse_fourier(&Spectrum::new(*z1.grid(), prod)?)?;
    Ok((lhs, chirp(&inner, t, true)))
}

/// Relative residual `‖lhs - c·rhs‖₂ / ‖lhs‖₂` for a given `c`
/// (absolute when `lhs = 0`).
pub fn factorization_residual(
    z1: &Field,
    z2: &Field,
    z3: &Field,
    t: f64,
    c: Complex64,
    t_min: f64,
) -> Result<f64> {
    let (lhs, rhs) = factorization_sides(z1, z2, z3, t, t_min)?;
    relative_misfit(&lhs, &rhs, c)
}

fn relative_misfit(lhs: &Field, rhs: &Field, c: Complex64) -> Result<f64> {
    let d = lhs.axpby(Complex64::new(1.0, 0.0), rhs, -c)?.l2_norm();
    let n = lhs.l2_norm();
    Ok(if n == 0.0 { d } else { d / n })
}

/// Least-squares `c` for the factorization identity and the residual after fitting.
pub fn factorization_check(
    z1: &Field,
    z2: &Field,
    z3: &Field,
    t: f64,
    t_min: f64,
) -> Result<FactorizationCheck> {
    let (lhs, rhs) = factorization_sides(z1, z2, z3, t, t_min)?;
    let rr = rhs.inner(&rhs)?.re;
    let fitted_c = if rr == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        rhs.inner(&lhs)? / rr
    };
    let relative_error = relative_misfit(&lhs, &rhs, fitted_c)?;
    Ok(FactorizationCheck {
        lhs,
        rhs,
        fitted_c,
        relative_error,
    })
}
