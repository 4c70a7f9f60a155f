//! Fixtures shared by the kernel benchmarks.

use lpnls::data::{power_law, random_smooth};
use lpnls::norms::SpaceTimeField;
use lpnls::spectral::free_propagate;
use lpnls::{Field, GridSpec};

pub fn grid(n: usize) -> GridSpec {
    GridSpec::new(n, 100.0).unwrap()
}

pub fn smooth(n: usize) -> Field {
    random_smooth(grid(n), 1, 2.0).unwrap()
}

pub fn rough(n: usize) -> Field {
    power_law(grid(n), 0.49, 1.0).unwrap()
}

/// Free flow of [`smooth`] on `slices` equally spaced times in `[0, 1]`.
pub fn linear_trajectory(n: usize, slices: usize) -> SpaceTimeField {
    let f = smooth(n);
    SpaceTimeField::from_fn(0.0, 1.0, slices, |t| free_propagate(&f, t)).unwrap()
}
