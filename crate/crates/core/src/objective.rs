//! The regularized output least-squares objective.
//!
//! For a coefficient `d` and measured final-time data (m1, m2),
//!
//! ```text
//! J(d) = 1/2 |u(., T; d) - m1|^2 + 1/2 |v(., T; d) - m2|^2
//!        + gamma/2 |d|_{H1}^2,
//! ```
//!
//! with every norm evaluated by the Simpson-based inner products of
//! [`crate::grid`]. Evaluation runs the forward solver; callers that also
//! need the trajectory (the optimizer solves the adjoint on it) use
//! [`evaluate_parts`], which returns both so nothing is solved twice.

use crate::direct::{solve_direct, CoefficientField, Trajectory};
use crate::error::{Error, Result};
use crate::grid::{h1_norm_sq, l2_norm_sq, Grid1D, NodalFunction};

/// Final-time measurement pair plus noise metadata.
#[derive(Debug, Clone)]
pub struct Measurement {
    m1: NodalFunction,
    m2: NodalFunction,
    noise_level: f64,
    epsilon: f64,
    seed: Option<u64>,
}

impl Measurement {
    /// Clean synthetic measurement: zero noise, zero discrepancy level.
    pub fn noiseless(m1: NodalFunction, m2: NodalFunction) -> Self {
        Self {
            m1,
            m2,
            noise_level: 0.0,
            epsilon: 0.0,
            seed: None,
        }
    }

    pub(crate) fn with_noise(
        m1: NodalFunction,
        m2: NodalFunction,
        noise_level: f64,
        epsilon: f64,
        seed: u64,
    ) -> Self {
        Self {
            m1,
            m2,
            noise_level,
            epsilon,
            seed: Some(seed),
        }
    }

    pub fn m1(&self) -> &NodalFunction {
        &self.m1
    }

    pub fn m2(&self) -> &NodalFunction {
        &self.m2
    }

    /// Noise fraction p used to synthesize the data (0 for clean data).
    pub fn noise_level(&self) -> f64 {
        self.noise_level
    }

    /// Discrepancy level: half the squared distance between noisy and exact
    /// data. Zero exactly when the data are clean.
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }
}

/// Decomposition of one objective evaluation.
#[derive(Debug, Clone, Copy)]
pub struct ObjectiveParts {
    pub u_misfit: f64,
    pub v_misfit: f64,
    pub regularizer: f64,
}

impl ObjectiveParts {
    pub fn misfit(&self) -> f64 {
        self.u_misfit + self.v_misfit
    }

    pub fn total(&self) -> f64 {
        self.u_misfit + self.v_misfit + self.regularizer
    }
}

/// Evaluate the objective and hand back the forward trajectory it required.
pub fn evaluate_parts(
    coeff: &CoefficientField,
    measurement: &Measurement,
    grid: &Grid1D,
    gamma: f64,
    u0: &NodalFunction,
    v0: &NodalFunction,
) -> Result<(ObjectiveParts, Trajectory)> {
    if gamma < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "regularization weight must be non-negative, got {gamma}"
        )));
    }
    let traj = solve_direct(grid, coeff, u0, v0, None, None)?;
    let parts = parts_for_trajectory(coeff, measurement, grid, gamma, &traj)?;
    Ok((parts, traj))
}

/// Objective decomposition for an already computed trajectory.
pub(crate) fn parts_for_trajectory(
    coeff: &CoefficientField,
    measurement: &Measurement,
    grid: &Grid1D,
    gamma: f64,
    traj: &Trajectory,
) -> Result<ObjectiveParts> {
    let (u_final, v_final) = traj.final_state();
    let du = u_final.sub(measurement.m1())?;
    let dv = v_final.sub(measurement.m2())?;
    Ok(ObjectiveParts {
        u_misfit: 0.5 * l2_norm_sq(&du, grid)?,
        v_misfit: 0.5 * l2_norm_sq(&dv, grid)?,
        regularizer: 0.5 * gamma * h1_norm_sq(coeff.values(), grid)?,
    })
}

/// The objective value J(d).
pub fn evaluate(
    coeff: &CoefficientField,
    measurement: &Measurement,
    grid: &Grid1D,
    gamma: f64,
    u0: &NodalFunction,
    v0: &NodalFunction,
) -> Result<f64> {
    evaluate_parts(coeff, measurement, grid, gamma, u0, v0).map(|(p, _)| p.total())
}

/// The two misfit halves (u part, v part), without the regularizer.
pub fn misfit_parts(
    coeff: &CoefficientField,
    measurement: &Measurement,
    grid: &Grid1D,
    u0: &NodalFunction,
    v0: &NodalFunction,
) -> Result<(f64, f64)> {
    evaluate_parts(coeff, measurement, grid, 0.0, u0, v0)
        .map(|(p, _)| (p.u_misfit, p.v_misfit))
}
