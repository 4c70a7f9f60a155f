use std::sync::Arc;

use num_complex::Complex64;
use rustfft::Fft;

use crate::spectral::{forward_plan, inverse_plan, GridSpec};

const TABLE_CACHE: usize = 8;

/// Free flow on raw sample buffers with cached multiplier tables.
pub(crate) struct Linear {
    grid: GridSpec,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    tables: Vec<(u64, Vec<Complex64>)>,
}

impl Linear {
    pub fn new(grid: GridSpec) -> Self {
        let n = grid.n_points();
        Self {
            grid,
            fwd: forward_plan(n),
            inv: inverse_plan(n),
            tables: Vec::new(),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// `e^{-itξ²}/n`, cached by the bit pattern of `t`.
    pub fn table(&mut self, t: f64) -> &[Complex64] {
        let key = t.to_bits();
        if let Some(i) = self.tables.iter().position(|(k, _)| *k == key) {
            return &self.tables[i].1;
        }
        if self.tables.len() == TABLE_CACHE {
            self.tables.remove(0);
        }
        self.tables
            .push((key, crate::spectral::propagator_table(&self.grid, t)));
        &self.tables.last().unwrap().1
    }

    /// `buf <- U(t) buf`.
    pub fn apply(&mut self, buf: &mut [Complex64], t: f64) {
        let (fwd, inv) = (self.fwd.clone(), self.inv.clone());
        let table = self.table(t);
        crate::spectral::apply_table(buf, table, &*fwd, &*inv);
    }

    /// Unnormalized forward DFT in place.
    pub fn forward(&self, buf: &mut [Complex64]) {
        self.fwd.process(buf);
    }

    /// Unnormalized inverse DFT in place.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.inv.process(buf);
    }
}

/// Exact flow of `i u_t + |u|²u = 0` for time `tau`: `u <- e^{i|u|²τ}u`.
pub(crate) fn rotate(buf: &mut [Complex64], tau: f64) {
    for z in buf.iter_mut() {
        *z *= Complex64::from_polar(1.0, z.norm_sqr() * tau);
    }
}

/// The same sub-flow applied to `v` and to `v + w`, with `w` updated as the
/// difference without cancellation:
/// `w' = e^{i|v|²τ}(e^{id}w + (e^{id} - 1)v)`, `d = (2Re(v̄w) + |w|²)τ`.
pub(crate) fn rotate_pair(v: &mut [Complex64], w: &mut [Complex64], tau: f64) {
    for (a, b) in v.iter_mut().zip(w.iter_mut()) {
        let base = Complex64::from_polar(1.0, a.norm_sqr() * tau);
        let d = (2.0 * (a.conj() * *b).re + b.norm_sqr()) * tau;
        let (s, c) = d.sin_cos();
        let half = (0.5 * d).sin();
        let em1 = Complex64::new(-2.0 * half * half, s);
        let ed = Complex64::new(c, s);
        *b = base * (ed * *b + em1 * *a);
        *a *= base;
    }
}

/// One Strang step: half nonlinear, full linear, half nonlinear.
pub(crate) fn strang_step(lin: &mut Linear, buf: &mut [Complex64], h: f64) {
    rotate(buf, 0.5 * h);
    lin.apply(buf, h);
    rotate(buf, 0.5 * h);
}

/// One Strang step of the pair `(v, w)`; `v + w` follows [`strang_step`].
pub(crate) fn strang_step_pair(
    lin: &mut Linear,
    v: &mut [Complex64],
    w: &mut [Complex64],
    h: f64,
) {
    rotate_pair(v, w, 0.5 * h);
    lin.apply(v, h);
    lin.apply(w, h);
    rotate_pair(v, w, 0.5 * h);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_rotation_matches_direct_difference() {
        let v: Vec<Complex64> = (0..64)
            .map(|k| Complex64::new((k as f64 * 0.3).sin(), (k as f64 * 0.17).cos()))
            .collect();
        let w: Vec<Complex64> = (0..64)
            .map(|k| Complex64::new(0.4 * (k as f64 * 0.7).cos(), -0.2))
            .collect();
        let tau = 0.37;
        let (mut a, mut b) = (v.clone(), w.clone());
        rotate_pair(&mut a, &mut b, tau);
        let mut rv = v.clone();
        rotate(&mut rv, tau);
        let mut rz: Vec<Complex64> = v.iter().zip(&w).map(|(x, y)| x + y).collect();
        rotate(&mut rz, tau);
        for k in 0..64 {
            assert!((a[k] - rv[k]).norm() < 1e-15);
            assert!((b[k] - (rz[k] - rv[k])).norm() < 1e-14);
        }
    }

    #[test]
    fn rotation_preserves_modulus() {
        let mut b: Vec<Complex64> = (0..16).map(|k| Complex64::new(k as f64, 1.0)).collect();
        let before: Vec<f64> = b.iter().map(|z| z.norm()).collect();
        rotate(&mut b, 0.9);
        for (z, m) in b.iter().zip(before) {
            assert!((z.norm() - m).abs() < 1e-13 * m.max(1.0));
        }
    }
}
