//! Initial-data profiles and the smooth plateau window.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::spectral::{Field, GridSpec};

/// C^∞ step: 0 for `s <= 0`, 1 for `s >= 1`.
fn smooth_step(s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    if s >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / s).exp();
    let b = (-1.0 / (1.0 - s)).exp();
    a / (a + b)
}

/// Window equal to 1 on `[-L/2, L/2]`, decaying smoothly to exactly 0 at
/// `|x| = 3L/4` so the boundary monitor zone starts empty.
pub fn plateau_cutoff(grid: &GridSpec, x: f64) -> f64 {
    let l = grid.half_width();
    let (inner, outer) = (0.5 * l, 0.75 * l);
    1.0 - smooth_step((x.abs() - inner) / (outer - inner))
}

/// Initial data families used by the experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    /// `amplitude · e^{-a x²}`.
    Gaussian {
        a: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `√2 sech(x)`, the standing wave `√2 sech(x) e^{it}`.
    Soliton {},
    /// `amplitude · (1+|x|)^{-β}` times the plateau window.
    PowerLaw {
        beta: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// Sum of a few Gaussian wave packets with carriers `|k| <= cutoff`.
    RandomSmooth { seed: u64, cutoff: f64 },
}

fn one() -> f64 {
    1.0
}

impl InitialData {
    pub fn sample(&self, grid: GridSpec) -> Result<Field> {
        match *self {
            InitialData::Gaussian { a, amplitude } => {
                Field::from_real_fn(grid, |x| amplitude * (-a * x * x).exp())
            }
            InitialData::Soliton {} => Field::from_real_fn(grid, soliton_profile),
            InitialData::PowerLaw { beta, amplitude } => power_law(grid, beta, amplitude),
            InitialData::RandomSmooth { seed, cutoff } => random_smooth(grid, seed, cutoff),
        }
    }

    pub fn label(&self) -> String {
        match self {
            InitialData::Gaussian { a, amplitude } => format!("gaussian(a={a}, amp={amplitude})"),
            InitialData::Soliton {} => "soliton".into(),
            InitialData::PowerLaw { beta, amplitude } => {
                format!("power_law(beta={beta}, amp={amplitude})")
            }
            InitialData::RandomSmooth { seed, cutoff } => {
                format!("random_smooth(seed={seed}, cutoff={cutoff})")
            }
        }
    }
}

pub fn soliton_profile(x: f64) -> f64 {
    2f64.sqrt() / x.cosh()
}

pub fn power_law(grid: GridSpec, beta: f64, amplitude: f64) -> Result<Field> {
    Field::from_real_fn(grid, |x| {
        amplitude * (1.0 + x.abs()).powf(-beta) * plateau_cutoff(&grid, x)
    })
}

pub fn random_smooth(grid: GridSpec, seed: u64, cutoff: f64) -> Result<Field> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let packets: Vec<(f64, f64, f64, f64, f64)> = (0..3)
        .map(|_| {
            (
                rng.gen_range(0.3..1.0),   // amplitude
                rng.gen_range(0.0..2.0 * PI), // phase
                rng.gen_range(-5.0..5.0),  // center
                rng.gen_range(0.7..2.0),   // width
                rng.gen_range(-cutoff..=cutoff), // carrier
            )
        })
        .collect();
    Field::from_fn(grid, |x| {
        packets
            .iter()
            .map(|&(amp, phase, c, w, k)| {
                let y = (x - c) / w;
                Complex64::from_polar(amp * (-0.5 * y * y).exp(), phase + k * x)
            })
            .sum()
    })
}
