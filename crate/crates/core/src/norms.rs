//! Trajectories and the norms measured on them: mixed `L^q_t L^r_x`,
//! power-weighted variants, the twisted variable `U(-t)u(t)`, and the
//! X/Y (semi)norms built from `s^θ ‖∂_s v(s)‖_p`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exponents::conjugate_exponent;
use crate::spectral::{free_propagate, lp_norm, Field, GridSpec};

pub const MIN_SLICES: usize = 3;

/// Ordered time slices of [`Field`]s on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    grid: GridSpec,
    times: Vec<f64>,
    slices: Vec<Field>,
}

impl SpaceTimeField {
    pub fn new(times: Vec<f64>, slices: Vec<Field>) -> Result<Self> {
        if times.len() != slices.len() {
            return Err(Error::LengthMismatch {
                expected: times.len(),
                got: slices.len(),
            });
        }
        if times.len() < MIN_SLICES {
            return Err(Error::TooFewSlices {
                needed: MIN_SLICES,
                got: times.len(),
            });
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite("trajectory times"));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::TimesNotIncreasing);
        }
        let grid = *slices[0].grid();
        if slices.iter().any(|s| *s.grid() != grid) {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            grid,
            times,
            slices,
        })
    }

    /// `n` equally spaced slices on `[t1, t2]`, each produced by `f(t)`.
    pub fn from_fn(
        t1: f64,
        t2: f64,
        n: usize,
        f: impl Fn(f64) -> Result<Field>,
    ) -> Result<Self> {
        if !(t2 > t1) {
            return Err(Error::BadInterval(t1, t2));
        }
        let n = n.max(MIN_SLICES);
        let times: Vec<f64> = (0..n)
            .map(|i| t1 + (t2 - t1) * i as f64 / (n - 1) as f64)
            .collect();
        let slices = times.iter().map(|&t| f(t)).collect::<Result<Vec<_>>>()?;
        Self::new(times, slices)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn slices(&self) -> &[Field] {
        &self.slices
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn first(&self) -> &Field {
        &self.slices[0]
    }

    pub fn last(&self) -> &Field {
        self.slices.last().unwrap()
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<Field>) {
        (self.times, self.slices)
    }

    /// Index of the slice at time `t` (within `tol`), if any.
    pub fn index_of(&self, t: f64, tol: f64) -> Option<usize> {
        let i = self.times.partition_point(|&s| s < t - tol);
        (i < self.times.len() && (self.times[i] - t).abs() <= tol).then_some(i)
    }

    pub fn map_slices(&self, f: impl Fn(f64, &Field) -> Result<Field> + Sync) -> Result<Self> {
        let slices = self
            .times
            .par_iter()
            .zip(&self.slices)
            .map(|(&t, s)| f(t, s))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.times.clone(), slices)
    }

    /// Slice-wise `self - other` on identical meshes.
    pub fn sub(&self, other: &SpaceTimeField) -> Result<Self> {
        if self.times != other.times {
            return Err(Error::LengthMismatch {
                expected: self.times.len(),
                got: other.times.len(),
            });
        }
        let slices = self
            .slices
            .iter()
            .zip(&other.slices)
            .map(|(a, b)| a.sub(b))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.times.clone(), slices)
    }

    pub fn add(&self, other: &SpaceTimeField) -> Result<Self> {
        if self.times != other.times {
            return Err(Error::LengthMismatch {
                expected: self.times.len(),
                got: other.times.len(),
            });
        }
        let slices = self
            .slices
            .iter()
            .zip(&other.slices)
            .map(|(a, b)| a.add(b))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.times.clone(), slices)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            grid: self.grid,
            times: self.times.clone(),
            slices: self.slices.iter().map(|s| s.scale(c)).collect(),
        }
    }

    /// Restriction to slices with `a <= t <= b`.
    pub fn restrict(&self, a: f64, b: f64) -> Result<Self> {
        let (times, slices): (Vec<f64>, Vec<Field>) = self
            .times
            .iter()
            .zip(&self.slices)
            .filter(|(&t, _)| t >= a && t <= b)
            .map(|(&t, s)| (t, s.clone()))
            .unzip();
        Self::new(times, slices)
    }

    /// Per-slice `‖u(t)‖_r`.
    pub fn slice_norms(&self, r: f64) -> Result<Vec<f64>> {
        self.slices.par_iter().map(|s| lp_norm(s, r)).collect()
    }
}

/// Composite trapezoid of `g_i` on the mesh `t_i`.
pub(crate) fn trapezoid(times: &[f64], g: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(g.windows(2))
        .map(|(t, y)| 0.5 * (t[1] - t[0]) * (y[0] + y[1]))
        .sum()
}

fn check_time_exponent(q: f64) -> Result<()> {
    if q.is_nan() || q < 1.0 {
        return Err(Error::BadLebesgueExponent(q));
    }
    Ok(())
}

/// `L^q` in time of the values `g_i`; `q = ∞` is the max over slices.
fn time_lq(times: &[f64], g: &[f64], q: f64) -> f64 {
    if q.is_infinite() {
        return g.iter().copied().fold(0.0, f64::max);
    }
    let m = g.iter().copied().fold(0.0, f64::max);
    if m == 0.0 {
        return 0.0;
    }
    let powered: Vec<f64> = g.iter().map(|x| (x / m).powf(q)).collect();
    m * trapezoid(times, &powered).powf(1.0 / q)
}

/// `(∫_I ‖u(t)‖_r^q dt)^{1/q}`; `q = f64::INFINITY` gives `max_t ‖u(t)‖_r`.
pub fn mixed_norm(u: &SpaceTimeField, q: f64, r: f64) -> Result<f64> {
    check_time_exponent(q)?;
    let g = u.slice_norms(r)?;
    Ok(time_lq(&u.times, &g, q))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedNorm {
    pub value: f64,
    /// The `t = 0` slice was dropped because the weight is singular there.
    pub origin_skipped: bool,
}

/// `(∫_I ‖u(t)‖_r^ρ t^α dt)^{1/ρ}`.
pub fn weighted_mixed_norm(
    u: &SpaceTimeField,
    rho: f64,
    alpha: f64,
    r: f64,
) -> Result<WeightedNorm> {
    check_time_exponent(rho)?;
    if rho.is_infinite() {
        return Err(Error::BadLebesgueExponent(rho));
    }
    if u.start() < 0.0 {
        return Err(Error::BadInterval(u.start(), u.end()));
    }
    let touches_origin = u.start() == 0.0;
    if touches_origin && alpha <= -1.0 {
        return Err(Error::SingularWeight { alpha });
    }
    let skip = usize::from(touches_origin && alpha < 0.0);
    let times = &u.times[skip..];
    let norms = u.slices[skip..]
        .par_iter()
        .map(|s| lp_norm(s, r))
        .collect::<Result<Vec<_>>>()?;
    let g: Vec<f64> = times
        .iter()
        .zip(&norms)
        .map(|(&t, &n)| n * weight(t, alpha).powf(1.0 / rho))
        .collect();
    Ok(WeightedNorm {
        value: time_lq(times, &g, rho),
        origin_skipped: skip == 1,
    })
}

fn weight(t: f64, a: f64) -> f64 {
    if a == 0.0 {
        1.0
    } else {
        t.powf(a)
    }
}

/// `v(t) = U(-t)u(t)` slice by slice.
pub fn twist(u: &SpaceTimeField) -> Result<SpaceTimeField> {
    u.map_slices(|t, s| free_propagate(s, -t))
}

/// `u(t) = U(t)v(t)` slice by slice.
pub fn untwist(v: &SpaceTimeField) -> Result<SpaceTimeField> {
    v.map_slices(|t, s| free_propagate(s, t))
}

/// Second-order finite-difference weights for `∂_t` at slice `i` on a
/// nonuniform mesh, as `(offset of first node, [w0, w1, w2])`.
fn derivative_stencil(times: &[f64], i: usize) -> (usize, [f64; 3]) {
    let n = times.len();
    if i == 0 {
        let (h1, h2) = (times[1] - times[0], times[2] - times[1]);
        let s = h1 + h2;
        (0, [-(2.0 * h1 + h2) / (h1 * s), s / (h1 * h2), -h1 / (h2 * s)])
    } else if i == n - 1 {
        let (h1, h2) = (times[n - 2] - times[n - 3], times[n - 1] - times[n - 2]);
        let s = h1 + h2;
        (n - 3, [h2 / (h1 * s), -s / (h1 * h2), (2.0 * h2 + h1) / (h2 * s)])
    } else {
        let (h1, h2) = (times[i] - times[i - 1], times[i + 1] - times[i]);
        let s = h1 + h2;
        (i - 1, [-h2 / (h1 * s), (h2 - h1) / (h1 * h2), h1 / (h2 * s)])
    }
}

/// Finite-difference `∂_t v` at every slice.
pub fn time_derivative(v: &SpaceTimeField) -> Result<SpaceTimeField> {
    let slices: Vec<Field> = (0..v.len())
        .into_par_iter()
        .map(|i| {
            let (o, w) = derivative_stencil(&v.times, i);
            let (a, b, c) = (&v.slices[o], &v.slices[o + 1], &v.slices[o + 2]);
            let samples = a
                .samples()
                .iter()
                .zip(b.samples())
                .zip(c.samples())
                .map(|((&x, &y), &z)| x * w[0] + y * w[1] + z * w[2])
                .collect();
            Field::from_raw(v.grid, samples)
        })
        .collect();
    SpaceTimeField::new(v.times.clone(), slices)
}

/// `(∫ (s^θ ‖∂_s v(s)‖_p)^q ds)^{1/q}`.
pub fn x_seminorm(v: &SpaceTimeField, p: f64, q: f64, theta: f64) -> Result<f64> {
    check_time_exponent(q)?;
    let touches_origin = v.start() <= 0.0;
    if touches_origin && theta < 0.0 {
        let ok = q > 1.0 && conjugate_exponent(q)? * theta > -1.0;
        if !ok {
            return Err(Error::SingularWeight { alpha: theta });
        }
    }
    let dv = time_derivative(v)?;
    let norms = dv.slice_norms(p)?;
    let skip = usize::from(touches_origin && theta < 0.0 && v.start() == 0.0);
    let g: Vec<f64> = v.times[skip..]
        .iter()
        .zip(&norms[skip..])
        .map(|(&s, &n)| weight(s, theta) * n)
        .collect();
    Ok(time_lq(&v.times[skip..], &g, q))
}

/// `‖v(T₁)‖_p + x_seminorm(v)`.
pub fn x_norm(v: &SpaceTimeField, p: f64, q: f64, theta: f64) -> Result<f64> {
    Ok(lp_norm(v.first(), p)? + x_seminorm(v, p, q, theta)?)
}

/// `x_norm` of the twisted variable.
pub fn y_norm(u: &SpaceTimeField, p: f64, q: f64, theta: f64) -> Result<f64> {
    x_norm(&twist(u)?, p, q, theta)
}

/// Seminorm part of [`y_norm`].
pub fn y_seminorm(u: &SpaceTimeField, p: f64, q: f64, theta: f64) -> Result<f64> {
    x_seminorm(&twist(u)?, p, q, theta)
}

/// Sup over slices of `‖a(t) - b(t)‖₂ / ‖b(t)‖₂` on identical meshes.
pub fn sup_relative_l2(a: &SpaceTimeField, b: &SpaceTimeField) -> Result<f64> {
    if a.times.len() != b.times.len() {
        return Err(Error::LengthMismatch {
            expected: b.times.len(),
            got: a.times.len(),
        });
    }
    let mut worst = 0.0f64;
    for (x, y) in a.slices.iter().zip(&b.slices) {
        worst = worst.max(crate::spectral::relative_l2_distance(x, y)?);
    }
    Ok(worst)
}

/// `sup_t ‖a(t) - b(t)‖₂` on identical meshes.
pub fn sup_l2_distance(a: &SpaceTimeField, b: &SpaceTimeField) -> Result<f64> {
    mixed_norm(&a.sub(b)?, f64::INFINITY, 2.0)
}
