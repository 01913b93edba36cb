//! Synthetic noisy measurements.
//!
//! Noise is additive and scaled per field by the field's own peak value:
//! `u_h = u_e + omega * p * max|u_e|`, with one independent standard-normal
//! deviate per node, and likewise for v. The discrepancy level
//! `epsilon = (|u_h - u_e|^2 + |v_h - v_e|^2) / 2` (Simpson norms) is stored
//! in the returned [`Measurement`] so the optimizer's stopping rule can use
//! it directly.
//!
//! Stream order is part of the contract: one [`GaussianStream`] seeded with
//! `seed` supplies deviates for the u-field nodes 0..=N first, then the
//! v-field nodes 0..=N. Boundary nodes are re-zeroed after the injection so
//! the data stay compatible with the homogeneous Dirichlet conditions the
//! adjoint final data must satisfy.

use crate::error::{Error, Result};
use crate::grid::{l2_norm_sq, Grid1D, NodalFunction};
use crate::objective::Measurement;
use crate::rng::GaussianStream;

/// Perturb exact final-time data with seeded nodewise Gaussian noise.
pub fn add_noise(
    u_exact: &NodalFunction,
    v_exact: &NodalFunction,
    noise_fraction: f64,
    seed: u64,
    grid: &Grid1D,
) -> Result<Measurement> {
    if noise_fraction < 0.0 {
        return Err(Error::NegativeNoise(noise_fraction));
    }
    for field in [u_exact, v_exact] {
        if field.len() != grid.n_nodes() {
            return Err(Error::LengthMismatch {
                expected: grid.n_nodes(),
                got: field.len(),
            });
        }
    }
    if noise_fraction == 0.0 {
        return Ok(Measurement::noiseless(u_exact.clone(), v_exact.clone()));
    }

    let mut stream = GaussianStream::new(seed);
    let u_noisy = perturb(u_exact, noise_fraction, &mut stream);
    let v_noisy = perturb(v_exact, noise_fraction, &mut stream);

    let epsilon = 0.5
        * (l2_norm_sq(&u_noisy.sub(u_exact)?, grid)? + l2_norm_sq(&v_noisy.sub(v_exact)?, grid)?);
    Ok(Measurement::with_noise(
        u_noisy,
        v_noisy,
        noise_fraction,
        epsilon,
        seed,
    ))
}

fn perturb(exact: &NodalFunction, p: f64, stream: &mut GaussianStream) -> NodalFunction {
    let scale = p * exact.max_abs();
    let n = exact.len();
    let mut values: Vec<f64> = exact
        .values()
        .iter()
        .map(|&v| v + scale * stream.next())
        .collect();
    values[0] = 0.0;
    values[n - 1] = 0.0;
    NodalFunction::from_values(values).expect("noise injection produced non-finite values")
}
