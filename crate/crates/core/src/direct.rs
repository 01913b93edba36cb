//! Forward solver for the cascade system
//!
//! ```text
//! u_t + u_xxxx = v          u = u_xx = 0 at x = 0, 1
//! v_t - (d(x) v_x)_x = 0    v = 0        at x = 0, 1
//! ```
//!
//! Both equations are advanced implicitly: the heat step solves a tridiagonal
//! control-volume system with face-averaged coefficients, the fourth-order
//! step solves a pentadiagonal system whose boundary stencils come from the
//! simply-supported ghost closure `u_{-1} = -u_1` (the second difference of u
//! vanishes at the wall). The coupling term enters the u-step lagged at the
//! previous time level, so each step is two independent banded solves.

use crate::banded::{solve_pentadiagonal, solve_tridiagonal};
use crate::error::{Error, Result};
use crate::grid::{h1_norm_sq, Grid1D, NodalFunction};

/// Optional space-time source, evaluated as `f(x, t)`.
pub type SourceFn<'a> = Option<&'a dyn Fn(f64, f64) -> f64>;

/// Admissibility bounds for a dissipative coefficient: pointwise lower and
/// upper bounds plus an H1-norm bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissibleBounds {
    pub alpha0: f64,
    pub alpha1: f64,
    pub alpha2: f64,
}

/// Spatially varying dissipative coefficient `d(x)` with optional bounds
/// metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    values: NodalFunction,
    bounds: Option<AdmissibleBounds>,
}

impl CoefficientField {
    pub fn new(values: NodalFunction) -> Self {
        Self {
            values,
            bounds: None,
        }
    }

    pub fn with_bounds(values: NodalFunction, bounds: AdmissibleBounds) -> Self {
        Self {
            values,
            bounds: Some(bounds),
        }
    }

    pub fn values(&self) -> &NodalFunction {
        &self.values
    }

    pub fn into_values(self) -> NodalFunction {
        self.values
    }

    pub fn bounds(&self) -> Option<&AdmissibleBounds> {
        self.bounds.as_ref()
    }

    /// Check the declared bounds: `alpha0 <= d(x_i) <= alpha1` at every node
    /// and `|d|_{H1}^2 <= alpha2^2`. No-op when no bounds were attached.
    pub fn check_admissible(&self, grid: &Grid1D) -> Result<()> {
        let Some(b) = self.bounds else {
            return Ok(());
        };
        for (i, &v) in self.values.values().iter().enumerate() {
            if v < b.alpha0 || v > b.alpha1 {
                return Err(Error::Inadmissible(format!(
                    "node {i}: {v} outside [{}, {}]",
                    b.alpha0, b.alpha1
                )));
            }
        }
        let h1 = h1_norm_sq(&self.values, grid)?;
        if h1 > b.alpha2 * b.alpha2 {
            return Err(Error::Inadmissible(format!(
                "H1 norm squared {h1} exceeds bound {}",
                b.alpha2 * b.alpha2
            )));
        }
        Ok(())
    }

    /// Reject coefficients the implicit diffusion step cannot handle: every
    /// face average `(d_i + d_{i+1})/2` must be positive, which holds exactly
    /// when interior nodes are strictly positive and boundary nodes are
    /// non-negative. (An admissible coefficient may vanish at the walls.)
    pub(crate) fn require_solvable(&self, grid: &Grid1D) -> Result<()> {
        let v = self.values.values();
        if v.len() != grid.n_nodes() {
            return Err(Error::LengthMismatch {
                expected: grid.n_nodes(),
                got: v.len(),
            });
        }
        for (i, &d) in v.iter().enumerate() {
            let interior = i > 0 && i + 1 < v.len();
            if d < 0.0 || (interior && d == 0.0) {
                return Err(Error::NonPositiveCoefficient { node: i, value: d });
            }
        }
        Ok(())
    }
}

/// Full space-time history of a field pair on a grid.
///
/// The two slots are named after the forward variables; the adjoint and
/// sensitivity solvers reuse the type with (p, q) and (du, dv) in the same
/// slots. Row `j` is the state at time `t_j`, row 0 the initial data.
#[derive(Debug, Clone)]
pub struct Trajectory {
    u: Vec<NodalFunction>,
    v: Vec<NodalFunction>,
    grid: Grid1D,
}

impl Trajectory {
    pub(crate) fn from_rows(u: Vec<NodalFunction>, v: Vec<NodalFunction>, grid: Grid1D) -> Self {
        debug_assert_eq!(u.len(), grid.n_levels());
        debug_assert_eq!(v.len(), grid.n_levels());
        Self { u, v, grid }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn n_levels(&self) -> usize {
        self.u.len()
    }

    pub fn u_at(&self, level: usize) -> &NodalFunction {
        &self.u[level]
    }

    pub fn v_at(&self, level: usize) -> &NodalFunction {
        &self.v[level]
    }

    /// Final-time pair `(u(., T), v(., T))` — the measured outputs for
    /// noiseless synthetic data.
    pub fn final_state(&self) -> (NodalFunction, NodalFunction) {
        (
            self.u.last().expect("trajectory has rows").clone(),
            self.v.last().expect("trajectory has rows").clone(),
        )
    }
}

/// Free-function form of [`Trajectory::final_state`].
pub fn final_state(traj: &Trajectory) -> (NodalFunction, NodalFunction) {
    traj.final_state()
}

/// Implicit control-volume step for `w_t - (c(x) w_x)_x = g` with
/// homogeneous Dirichlet conditions. The matrix depends only on the
/// coefficient, so one stepper serves every time level.
pub(crate) struct DiffusionStepper {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    n_nodes: usize,
    dt: f64,
}

impl DiffusionStepper {
    pub(crate) fn new(grid: &Grid1D, coeff: &[f64]) -> Self {
        let n = grid.n_nodes();
        let m = n - 2;
        let r = grid.dt() / (grid.dx() * grid.dx());
        let face = |i: usize| 0.5 * (coeff[i] + coeff[i + 1]); // c_{i+1/2}
        let mut lower = vec![0.0; m.saturating_sub(1)];
        let mut diag = vec![0.0; m];
        let mut upper = vec![0.0; m.saturating_sub(1)];
        for k in 0..m {
            let i = k + 1;
            diag[k] = 1.0 + r * (face(i - 1) + face(i));
            if k + 1 < m {
                upper[k] = -r * face(i);
                lower[k] = -r * face(i);
            }
        }
        Self {
            lower,
            diag,
            upper,
            n_nodes: n,
            dt: grid.dt(),
        }
    }

    /// Advance one level: `source` holds nodal values of g at the time level
    /// the caller chose (the schemes here always lag it).
    pub(crate) fn step(&self, prev: &NodalFunction, source: Option<&[f64]>) -> Result<NodalFunction> {
        let m = self.n_nodes - 2;
        let mut rhs = vec![0.0; m];
        for k in 0..m {
            let i = k + 1;
            rhs[k] = prev[i] + self.dt * source.map_or(0.0, |s| s[i]);
        }
        let interior = solve_tridiagonal(&self.lower, &self.diag, &self.upper, &rhs)?;
        Ok(assemble_with_zero_boundary(interior, self.n_nodes))
    }
}

/// Implicit step for `w_t + w_xxxx = g` with simply-supported conditions
/// (`w = w_xx = 0`); the ghost closure folds into a 5 on the first and last
/// interior diagonal entries.
pub(crate) struct FourthOrderStepper {
    l2: Vec<f64>,
    l1: Vec<f64>,
    d0: Vec<f64>,
    u1: Vec<f64>,
    u2: Vec<f64>,
    n_nodes: usize,
    dt: f64,
}

impl FourthOrderStepper {
    pub(crate) fn new(grid: &Grid1D) -> Self {
        let n = grid.n_nodes();
        let m = n - 2;
        let dx2 = grid.dx() * grid.dx();
        let s = grid.dt() / (dx2 * dx2);
        let d0: Vec<f64> = (0..m)
            .map(|k| {
                if k == 0 || k == m - 1 {
                    1.0 + 5.0 * s
                } else {
                    1.0 + 6.0 * s
                }
            })
            .collect();
        Self {
            l2: vec![s; m.saturating_sub(2)],
            l1: vec![-4.0 * s; m.saturating_sub(1)],
            d0,
            u1: vec![-4.0 * s; m.saturating_sub(1)],
            u2: vec![s; m.saturating_sub(2)],
            n_nodes: n,
            dt: grid.dt(),
        }
    }

    pub(crate) fn step(&self, prev: &NodalFunction, source: Option<&[f64]>) -> Result<NodalFunction> {
        let m = self.n_nodes - 2;
        let mut rhs = vec![0.0; m];
        for k in 0..m {
            let i = k + 1;
            rhs[k] = prev[i] + self.dt * source.map_or(0.0, |s| s[i]);
        }
        let interior = solve_pentadiagonal(&self.l2, &self.l1, &self.d0, &self.u1, &self.u2, &rhs)?;
        Ok(assemble_with_zero_boundary(interior, self.n_nodes))
    }
}

fn assemble_with_zero_boundary(interior: Vec<f64>, n_nodes: usize) -> NodalFunction {
    let mut row = vec![0.0; n_nodes];
    row[1..n_nodes - 1].copy_from_slice(&interior);
    NodalFunction::from_values(row).expect("banded solve produced non-finite values")
}

/// Control-volume divergence `((c w_x)_x)_i` of a nodal row, zero at the
/// boundary nodes. Shared by the diffusion right-hand sides of the
/// sensitivity and stability machinery.
pub(crate) fn flux_divergence(coeff: &[f64], w: &[f64], dx: f64) -> Vec<f64> {
    let n = w.len();
    let mut out = vec![0.0; n];
    let inv_dx2 = 1.0 / (dx * dx);
    for i in 1..n - 1 {
        let c_right = 0.5 * (coeff[i] + coeff[i + 1]);
        let c_left = 0.5 * (coeff[i - 1] + coeff[i]);
        out[i] = inv_dx2 * (c_right * (w[i + 1] - w[i]) - c_left * (w[i] - w[i - 1]));
    }
    out
}

/// Solve the forward system from initial data `(u0, v0)`.
///
/// The optional sources exist for manufactured-solution verification: `f_src`
/// adds to the u-equation, `g_src` to the v-equation, both evaluated at the
/// lagged time level. With both absent the scheme is exactly the production
/// discretization.
pub fn solve_direct(
    grid: &Grid1D,
    coeff: &CoefficientField,
    u0: &NodalFunction,
    v0: &NodalFunction,
    f_src: SourceFn,
    g_src: SourceFn,
) -> Result<Trajectory> {
    for field in [u0, v0] {
        if field.len() != grid.n_nodes() {
            return Err(Error::LengthMismatch {
                expected: grid.n_nodes(),
                got: field.len(),
            });
        }
        field.require_boundary_zero()?;
    }
    coeff.require_solvable(grid)?;

    let heat = DiffusionStepper::new(grid, coeff.values().values());
    let beam = FourthOrderStepper::new(grid);

    let levels = grid.n_levels();
    let mut u_rows = Vec::with_capacity(levels);
    let mut v_rows = Vec::with_capacity(levels);
    u_rows.push(u0.clone());
    v_rows.push(v0.clone());

    let mut source_row = vec![0.0; grid.n_nodes()];
    for j in 0..grid.n_steps() {
        let t_j = grid.time(j);
        let v_prev = &v_rows[j];
        let u_prev = &u_rows[j];

        let v_next = match g_src {
            Some(g) => {
                for (i, s) in source_row.iter_mut().enumerate() {
                    *s = g(grid.node(i), t_j);
                }
                heat.step(v_prev, Some(&source_row))?
            }
            None => heat.step(v_prev, None)?,
        };

        // u-equation source: the lagged coupling v^j plus any manufactured term.
        for (i, s) in source_row.iter_mut().enumerate() {
            *s = v_prev[i] + f_src.map_or(0.0, |f| f(grid.node(i), t_j));
        }
        let u_next = beam.step(u_prev, Some(&source_row))?;

        v_rows.push(v_next);
        u_rows.push(u_next);
    }

    Ok(Trajectory::from_rows(u_rows, v_rows, *grid))
}
