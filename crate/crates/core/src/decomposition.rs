//! Height truncation of L^p data into a tall (square-integrable) part and a
//! short part small in `L^{p₀}`, indexed by `N`.

use num_complex::Complex64;
use num_rational::Rational64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::ratio_to_f64;
use crate::spectral::{lp_norm, Field};

pub const CUT_REL_TOL: f64 = 1e-10;
pub const CUT_MAX_ITER: usize = 200;

/// `(f·1_{|f|>λ}, f·1_{|f|≤λ})`.
pub fn height_split(f: &Field, lambda: f64) -> (Field, Field) {
    let zero = Complex64::new(0.0, 0.0);
    let (tall, short): (Vec<_>, Vec<_>) = f
        .samples()
        .iter()
        .map(|&z| if z.norm() > lambda { (z, zero) } else { (zero, z) })
        .unzip();
    (
        Field::from_raw(*f.grid(), tall),
        Field::from_raw(*f.grid(), short),
    )
}

fn tall_l2(f: &Field, lambda: f64) -> f64 {
    let s: f64 = f
        .samples()
        .iter()
        .filter(|z| z.norm() > lambda)
        .map(|z| z.norm_sqr())
        .sum();
    (s * f.grid().dx()).sqrt()
}

/// Height `λ` with `‖tall(λ)‖₂` as close to `target` as the grid allows.
///
/// `‖tall(λ)‖₂` is a nonincreasing step function of `λ`. Bisection keeps
/// `‖tall(lo)‖₂ >= target`; the returned `λ` is the smallest height giving
/// the same tall set as the final `lo`.
pub fn choose_cut(f: &Field, target: f64) -> Result<f64> {
    let total = f.l2_norm();
    if !(target > 0.0) || target > total {
        return Err(Error::TargetUnreachable { target, max: total });
    }
    let tol = CUT_REL_TOL * total;
    let (mut lo, mut hi) = (0.0, f.max_abs());
    for _ in 0..CUT_MAX_ITER {
        if tall_l2(f, lo) - target <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if tall_l2(f, mid) >= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(f.samples()
        .iter()
        .map(|z| z.norm())
        .filter(|&a| a <= lo)
        .fold(0.0, f64::max))
}

/// A `(φ_N, ψ_N)` pair with `φ_N + ψ_N = f`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionPair {
    pub phi_n: Field,
    pub psi_n: Field,
    pub n: f64,
    pub alpha: f64,
    pub p0: f64,
    /// Smallest `C₀` with `‖φ_N‖₂ <= C₀N^α` and `‖ψ_N‖_{p₀} <= C₀/N`.
    pub c0_fit: f64,
    pub cut: f64,
}

impl DecompositionPair {
    pub fn phi_l2(&self) -> f64 {
        self.phi_n.l2_norm()
    }

    pub fn psi_lp0(&self) -> Result<f64> {
        lp_norm(&self.psi_n, self.p0)
    }

    pub fn recombined(&self) -> Result<Field> {
        self.phi_n.add(&self.psi_n)
    }
}

/// Split `f` so that `‖φ_N‖₂ = N^α` (up to the grid), with the remainder in
/// `ψ_N`. Data already smaller than `N^α` in `L²` goes entirely to `φ_N`.
pub fn d_class_decompose(f: &Field, p0: f64, alpha: f64, n: f64) -> Result<DecompositionPair> {
    if !(n > 1.0) {
        return Err(Error::ExponentOutOfRange {
            name: "N",
            value: n,
            range: "N > 1",
        });
    }
    if !(p0 >= 1.0) {
        return Err(Error::BadLebesgueExponent(p0));
    }
    let target = n.powf(alpha);
    let (phi_n, psi_n, cut) = if target >= f.l2_norm() {
        (f.clone(), Field::zeros(*f.grid()), 0.0)
    } else {
        let cut = choose_cut(f, target)?;
        let (tall, short) = height_split(f, cut);
        (tall, short, cut)
    };
    let c0_fit = f64::max(phi_n.l2_norm() / target, n * lp_norm(&psi_n, p0)?);
    Ok(DecompositionPair {
        phi_n,
        psi_n,
        n,
        alpha,
        p0,
        c0_fit,
        cut,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: f64,
    pub l2_norm_phi: f64,
    pub lp0_norm_psi: f64,
    pub c0_fit: f64,
    pub cut: f64,
}

/// [`d_class_decompose`] over a list of `N`, in parallel.
pub fn decomposition_sweep(f: &Field, p0: f64, alpha: f64, ns: &[f64]) -> Result<Vec<SweepRow>> {
    ns.par_iter()
        .map(|&n| {
            let d = d_class_decompose(f, p0, alpha, n)?;
            Ok(SweepRow {
                n,
                l2_norm_phi: d.phi_l2(),
                lp0_norm_psi: d.psi_lp0()?,
                c0_fit: d.c0_fit,
                cut: d.cut,
            })
        })
        .collect()
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            expected: xs.len(),
            got: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::Empty("slope fit needs two points"));
    }
    if xs.iter().chain(ys).any(|&v| !(v > 0.0)) {
        return Err(Error::NonFinite("log of a nonpositive value"));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateExponent("all abscissae coincide"));
    }
    Ok(sxy / sxx)
}

/// Interpolation parameters with `1/p_θ = (1-θ)/p₀ + θ/2` and `α = (1-θ)/θ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaParams {
    pub theta: f64,
    pub p_theta: f64,
    pub p0: f64,
    pub alpha: f64,
}

pub fn p_theta(theta: f64, p0: f64) -> f64 {
    1.0 / ((1.0 - theta) / p0 + theta / 2.0)
}

pub fn theta_from_target(p: f64, p0: f64) -> Result<ThetaParams> {
    if !(p0 > 2.0) {
        return Err(Error::ExponentOutOfRange {
            name: "p0",
            value: p0,
            range: "p0 > 2",
        });
    }
    if !(p > 2.0 && p < p0) {
        return Err(Error::ExponentOutOfRange {
            name: "p",
            value: p,
            range: "2 < p < p0",
        });
    }
    let theta = (1.0 / p - 1.0 / p0) / (0.5 - 1.0 / p0);
    Ok(ThetaParams {
        theta,
        p_theta: p,
        p0,
        alpha: (1.0 - theta) / theta,
    })
}

/// Exact `(θ, α)` for rational `p`, `p₀`.
pub fn theta_from_target_exact(p: Rational64, p0: Rational64) -> Result<(Rational64, Rational64)> {
    let two = Rational64::from_integer(2);
    if p0 <= two {
        return Err(Error::ExponentOutOfRange {
            name: "p0",
            value: ratio_to_f64(p0),
            range: "p0 > 2",
        });
    }
    if p <= two || p >= p0 {
        return Err(Error::ExponentOutOfRange {
            name: "p",
            value: ratio_to_f64(p),
            range: "2 < p < p0",
        });
    }
    let theta = (p.recip() - p0.recip()) / (Rational64::new(1, 2) - p0.recip());
    let alpha = (Rational64::from_integer(1) - theta) / theta;
    Ok((theta, alpha))
}

pub fn p_theta_exact(theta: Rational64, p0: Rational64) -> Rational64 {
    ((Rational64::from_integer(1) - theta) / p0 + theta / 2).recip()
}
