//! Linearized (sensitivity) solver.
//!
//! For a coefficient perturbation `delta_d` around a base solve with
//! coefficient `d` and heat field `v`, the pair (du, dv) satisfies
//!
//! ```text
//! du_t + du_xxxx = dv              du = du_xx = 0 at x = 0, 1
//! dv_t - (d dv_x)_x = (delta_d v_x)_x    dv = 0   at x = 0, 1
//! ```
//!
//! with zero initial data. The right-hand side is discretized in the same
//! control-volume form as the diffusion operator and evaluated at the
//! implicit time level, exactly where the v-equation evaluates its own
//! diffusion flux; with that choice the computed pair is the exact
//! directional derivative of the discrete forward map (the cross-equation
//! coupling dv feeding du stays lagged, as in the forward scheme). The same
//! system doubles as the first-variation problem for any direction, so the
//! optimizer calls it with `delta_d` equal to the descent direction and
//! trusts the resulting line-search step.

use crate::direct::{flux_divergence, CoefficientField, DiffusionStepper, FourthOrderStepper, Trajectory};
use crate::error::{Error, Result};
use crate::grid::{Grid1D, NodalFunction};

/// Solve the sensitivity system; `v_traj` is the base trajectory whose heat
/// field drives the source term. Returns (du, dv) in the trajectory's
/// (u, v) slots.
pub fn solve_sensitivity(
    grid: &Grid1D,
    coeff: &CoefficientField,
    v_traj: &Trajectory,
    delta_d: &NodalFunction,
) -> Result<Trajectory> {
    if delta_d.len() != grid.n_nodes() {
        return Err(Error::LengthMismatch {
            expected: grid.n_nodes(),
            got: delta_d.len(),
        });
    }
    if v_traj.n_levels() != grid.n_levels() || v_traj.v_at(0).len() != grid.n_nodes() {
        return Err(Error::LengthMismatch {
            expected: grid.n_levels(),
            got: v_traj.n_levels(),
        });
    }
    coeff.require_solvable(grid)?;

    let heat = DiffusionStepper::new(grid, coeff.values().values());
    let beam = FourthOrderStepper::new(grid);

    let levels = grid.n_levels();
    let mut du_rows = Vec::with_capacity(levels);
    let mut dv_rows = Vec::with_capacity(levels);
    du_rows.push(NodalFunction::zeros(grid.n_nodes()));
    dv_rows.push(NodalFunction::zeros(grid.n_nodes()));

    for j in 0..grid.n_steps() {
        let source = flux_divergence(delta_d.values(), v_traj.v_at(j + 1).values(), grid.dx());
        let dv_next = heat.step(&dv_rows[j], Some(&source))?;
        let du_next = beam.step(&du_rows[j], Some(dv_rows[j].values()))?;
        dv_rows.push(dv_next);
        du_rows.push(du_next);
    }

    Ok(Trajectory::from_rows(du_rows, dv_rows, *grid))
}
