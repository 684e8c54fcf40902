//! Shared fixtures for the benchmarks.

use topoft::lattice::{Boundary, Lattice3D};
use topoft::noise::{trial_rng, ErrorConfiguration, NoiseModel, Sampler};

/// A periodic lattice of side `l` with `n` sampled configurations.
pub fn samples(l: usize, model: NoiseModel, n: u64) -> (Lattice3D, Vec<ErrorConfiguration>) {
    let lat = Lattice3D::build([l, l, l], Boundary::Periodic).expect("valid size");
    let sampler = Sampler::new(&lat);
    let errors = (0..n)
        .map(|t| sampler.sample(&lat, &model, &mut trial_rng(1, t), false).expect("valid model"))
        .collect();
    (lat, errors)
}
