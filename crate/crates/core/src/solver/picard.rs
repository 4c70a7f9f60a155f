//! Fixed-point iteration of the Duhamel map in the twisted variable on a
//! window of mesh nodes `s_0 < … < s_W`:
//!
//! ```text
//! V(s) = V(s_0) + i ∫_{s_0}^{s} U(-(σ-s_0)) N(σ, U(σ-s_0)V(σ)) dσ
//! ```
//!
//! with the integral replaced by a cumulative trapezoid. `V` and the
//! integrand are kept as raw DFT coefficients.

use num_complex::Complex64;

use super::splitstep::Linear;
use crate::error::{Error, Result};

pub(crate) struct WindowOutcome {
    /// Physical-space solution at every node, including `s_0`.
    pub fields: Vec<Vec<Complex64>>,
    pub iterations: usize,
    /// Largest ratio of successive relative changes seen.
    pub contraction: f64,
}

fn l2(buf: &[Complex64]) -> f64 {
    buf.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn picard_window(
    lin: &mut Linear,
    w0: &[Complex64],
    nodes: &[f64],
    max_iter: usize,
    tol: f64,
    nonlinearity: impl Fn(usize, &[Complex64]) -> Vec<Complex64>,
) -> Result<WindowOutcome> {
    let n = w0.len();
    let m = nodes.len();
    let a = nodes[0];
    let inv_n = 1.0 / n as f64;
    let xis: Vec<f64> = lin.grid().xis().collect();
    // e^{-iτ_j ξ²}; U(τ) on raw coefficients is this times 1/n after the IDFT.
    let phases: Vec<Vec<Complex64>> = nodes
        .iter()
        .map(|&s| {
            let tau = s - a;
            xis.iter()
                .map(|xi| Complex64::from_polar(1.0, -tau * xi * xi))
                .collect()
        })
        .collect();

    let mut r0 = w0.to_vec();
    lin.forward(&mut r0);
    let mut coeffs = vec![r0.clone(); m];
    let mut integrand = vec![vec![Complex64::new(0.0, 0.0); n]; m];
    let mut buf = vec![Complex64::new(0.0, 0.0); n];

    let to_physical = |lin: &Linear, r: &[Complex64], ph: &[Complex64], out: &mut Vec<Complex64>| {
        out.clear();
        out.extend(r.iter().zip(ph).map(|(c, e)| c * e * inv_n));
        lin.inverse(out);
    };

    let mut last_change = f64::INFINITY;
    let mut contraction = 0.0f64;
    for it in 1..=max_iter {
        let mut diff = 0.0;
        let mut size = 0.0;
        for j in 0..m {
            to_physical(lin, &coeffs[j], &phases[j], &mut buf);
            let mut f = nonlinearity(j, &buf);
            lin.forward(&mut f);
            for (z, e) in f.iter_mut().zip(&phases[j]) {
                *z *= e.conj();
            }
            let d: f64 = f
                .iter()
                .zip(&integrand[j])
                .map(|(x, y)| (x - y).norm_sqr())
                .sum::<f64>()
                .sqrt();
            let wt = node_weight(nodes, j);
            diff += wt * d;
            size += wt * l2(&f);
            integrand[j] = f;
        }
        let i = Complex64::new(0.0, 1.0);
        coeffs[0].clone_from(&r0);
        for j in 1..m {
            let h = 0.5 * (nodes[j] - nodes[j - 1]);
            let (done, rest) = coeffs.split_at_mut(j);
            for (k, c) in rest[0].iter_mut().enumerate() {
                *c = done[j - 1][k] + i * h * (integrand[j - 1][k] + integrand[j][k]);
            }
        }
        let change = if size == 0.0 { 0.0 } else { diff / size };
        if it >= 3 && last_change > 0.0 {
            contraction = contraction.max(change / last_change);
        }
        last_change = change;
        if change < tol {
            let fields = coeffs
                .iter()
                .zip(&phases)
                .map(|(r, ph)| {
                    let mut out = Vec::with_capacity(n);
                    to_physical(lin, r, ph, &mut out);
                    out
                })
                .collect();
            return Ok(WindowOutcome {
                fields,
                iterations: it,
                contraction,
            });
        }
    }
    Err(Error::PicardNotConverged {
        iterations: max_iter,
        last_change,
    })
}

/// Trapezoid weight of node `j` (used for the Ỹ¹-type change measure).
fn node_weight(nodes: &[f64], j: usize) -> f64 {
    let left = if j > 0 { nodes[j] - nodes[j - 1] } else { 0.0 };
    let right = if j + 1 < nodes.len() {
        nodes[j + 1] - nodes[j]
    } else {
        0.0
    };
    0.5 * (left + right)
}
