//! Uniform space-time grid, nodal fields, quadrature, and inner products.
//!
//! The spatial domain is always the unit interval (0, 1); every field in the
//! crate lives on the `n_cells + 1` equispaced nodes of a [`Grid1D`]. All
//! spatial integrals go through composite Simpson quadrature, so the discrete
//! L2 and H1 inner products defined here are the single source of truth for
//! norms used by the objective, the gradient, and the optimizer.

use crate::error::{Error, Result};

/// Uniform discretization of (0,1) x (0,T).
///
/// The standard constructor ties the number of time steps to the number of
/// spatial cells (`dt = t_final / n_cells`), which is the discretization the
/// reconstruction pipeline runs on. [`Grid1D::with_time_steps`] decouples the
/// two for convergence studies that refine time alone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    n_cells: usize,
    n_steps: usize,
    dx: f64,
    dt: f64,
    t_final: f64,
}

impl Grid1D {
    /// Grid with `n_cells` spatial cells and the same number of time steps.
    pub fn new(n_cells: usize, t_final: f64) -> Result<Self> {
        Self::with_time_steps(n_cells, n_cells, t_final)
    }

    /// Grid with independently chosen time-step count.
    pub fn with_time_steps(n_cells: usize, n_steps: usize, t_final: f64) -> Result<Self> {
        if n_cells < 4 {
            return Err(Error::GridTooCoarse(n_cells));
        }
        if n_steps == 0 {
            return Err(Error::InvalidGrid("need at least one time step".into()));
        }
        if !(t_final > 0.0) || !t_final.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "final time must be positive and finite, got {t_final}"
            )));
        }
        Ok(Self {
            n_cells,
            n_steps,
            dx: 1.0 / n_cells as f64,
            dt: t_final / n_steps as f64,
            t_final,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    /// Number of spatial nodes, `n_cells + 1`.
    pub fn n_nodes(&self) -> usize {
        self.n_cells + 1
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Number of stored time levels, `n_steps + 1`.
    pub fn n_levels(&self) -> usize {
        self.n_steps + 1
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    /// Coordinate of node `i`, computed as `i / n_cells` so that breakpoints
    /// such as 0.05 or 0.45 compare exactly against literals.
    pub fn node(&self, i: usize) -> f64 {
        i as f64 / self.n_cells as f64
    }

    /// Time of level `j`.
    pub fn time(&self, j: usize) -> f64 {
        self.t_final * (j as f64 / self.n_steps as f64)
    }

    /// Evaluate `f` at every node.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> NodalFunction {
        NodalFunction {
            values: (0..self.n_nodes()).map(|i| f(self.node(i))).collect(),
        }
    }

    /// Evaluate `f` at every node, forcing the two boundary nodes to exactly
    /// zero. Dirichlet data sampled from closed forms like `sin(pi x)` pick
    /// up O(1e-16) residue at x = 1 otherwise.
    pub fn sample_zero_boundary(&self, f: impl Fn(f64) -> f64) -> NodalFunction {
        let mut g = self.sample(f);
        let n = g.values.len();
        g.values[0] = 0.0;
        g.values[n - 1] = 0.0;
        g
    }
}

/// Real-valued field given by one value per grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalFunction {
    values: Vec<f64>,
}

impl NodalFunction {
    /// Wrap raw nodal values, rejecting NaN and infinities.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { values })
    }

    pub fn zeros(n_nodes: usize) -> Self {
        Self {
            values: vec![0.0; n_nodes],
        }
    }

    pub fn constant(value: f64, n_nodes: usize) -> Self {
        Self {
            values: vec![value; n_nodes],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `self + c * other`, nodewise.
    pub fn add_scaled(&self, other: &Self, c: f64) -> Result<Self> {
        check_same_len(self, other)?;
        Ok(Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + c * b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add_scaled(other, -1.0)
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    /// True when both boundary entries are exactly zero.
    pub fn vanishes_on_boundary(&self) -> bool {
        match (self.values.first(), self.values.last()) {
            (Some(&a), Some(&b)) => a == 0.0 && b == 0.0,
            _ => false,
        }
    }

    pub(crate) fn require_boundary_zero(&self) -> Result<()> {
        if let Some(&v) = self.values.first() {
            if v != 0.0 {
                return Err(Error::BoundaryNotZero { node: 0, value: v });
            }
        }
        if let Some(&v) = self.values.last() {
            if v != 0.0 {
                return Err(Error::BoundaryNotZero {
                    node: self.values.len() - 1,
                    value: v,
                });
            }
        }
        Ok(())
    }
}

impl std::ops::Index<usize> for NodalFunction {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

fn check_same_len(f: &NodalFunction, g: &NodalFunction) -> Result<()> {
    if f.len() != g.len() {
        return Err(Error::LengthMismatch {
            expected: f.len(),
            got: g.len(),
        });
    }
    Ok(())
}

fn check_on_grid(f: &NodalFunction, grid: &Grid1D) -> Result<()> {
    if f.len() != grid.n_nodes() {
        return Err(Error::LengthMismatch {
            expected: grid.n_nodes(),
            got: f.len(),
        });
    }
    Ok(())
}

/// Composite Simpson quadrature of `f` over (0,1).
///
/// For an odd cell count the last interval is handled by the trapezoid rule
/// and Simpson covers the remaining even count; the same rule is therefore
/// usable on every grid the crate accepts.
pub fn simpson_integrate(f: &NodalFunction, grid: &Grid1D) -> Result<f64> {
    check_on_grid(f, grid)?;
    Ok(simpson_slice(f.values(), grid.dx()))
}

pub(crate) fn simpson_slice(v: &[f64], dx: f64) -> f64 {
    let w = quadrature_weights_for(v.len(), dx);
    v.iter().zip(&w).map(|(a, b)| a * b).sum()
}

/// Nodal quadrature weights realizing [`simpson_integrate`]: composite
/// Simpson weights, with a trapezoid tail on the last interval when the cell
/// count is odd. The misfit derivative in [`crate::gradient`] weights adjoint
/// data with exactly these numbers, which keeps the assembled gradient the
/// exact derivative of the quadrature-based objective.
pub fn quadrature_weights(grid: &Grid1D) -> Vec<f64> {
    quadrature_weights_for(grid.n_nodes(), grid.dx())
}

fn quadrature_weights_for(n_nodes: usize, dx: f64) -> Vec<f64> {
    let n = n_nodes - 1; // interval count
    let mut w = vec![0.0; n_nodes];
    let simpson_n = if n % 2 == 0 { n } else { n - 1 };
    if simpson_n > 0 {
        w[0] += dx / 3.0;
        w[simpson_n] += dx / 3.0;
        for (i, wi) in w.iter_mut().enumerate().take(simpson_n).skip(1) {
            *wi += if i % 2 == 1 { 4.0 * dx / 3.0 } else { 2.0 * dx / 3.0 };
        }
    }
    if n % 2 == 1 {
        w[n - 1] += 0.5 * dx;
        w[n] += 0.5 * dx;
    }
    w
}

/// Discrete L2 inner product: Simpson quadrature of the pointwise product.
pub fn l2_inner(f: &NodalFunction, g: &NodalFunction, grid: &Grid1D) -> Result<f64> {
    check_on_grid(f, grid)?;
    check_on_grid(g, grid)?;
    let prod: Vec<f64> = f
        .values()
        .iter()
        .zip(g.values())
        .map(|(a, b)| a * b)
        .collect();
    Ok(simpson_slice(&prod, grid.dx()))
}

pub fn l2_norm_sq(f: &NodalFunction, grid: &Grid1D) -> Result<f64> {
    l2_inner(f, f, grid)
}

pub fn l2_norm(f: &NodalFunction, grid: &Grid1D) -> Result<f64> {
    Ok(l2_norm_sq(f, grid)?.max(0.0).sqrt())
}

/// Nodal finite-difference derivative: central differences at interior nodes,
/// second-order one-sided stencils at the two boundary nodes.
pub fn nodal_derivative(f: &NodalFunction, grid: &Grid1D) -> Result<NodalFunction> {
    check_on_grid(f, grid)?;
    let v = f.values();
    let n = v.len();
    let dx = grid.dx();
    let mut d = vec![0.0; n];
    d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dx);
    for i in 1..n - 1 {
        d[i] = (v[i + 1] - v[i - 1]) / (2.0 * dx);
    }
    d[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * dx);
    Ok(NodalFunction { values: d })
}

/// Discrete H1 inner product: `l2_inner(f, g) + l2_inner(f', g')` with the
/// derivative of [`nodal_derivative`].
pub fn h1_inner(f: &NodalFunction, g: &NodalFunction, grid: &Grid1D) -> Result<f64> {
    let df = nodal_derivative(f, grid)?;
    let dg = nodal_derivative(g, grid)?;
    Ok(l2_inner(f, g, grid)? + l2_inner(&df, &dg, grid)?)
}

pub fn h1_norm_sq(f: &NodalFunction, grid: &Grid1D) -> Result<f64> {
    h1_inner(f, f, grid)
}

/// Unweighted sum of squared nodal values, `sum_i f_i^2`.
///
/// This is the raw vector norm squared (what `norm(f)^2` returns in matrix
/// languages). For a field vanishing at the boundary it approximates
/// `n_cells` times the L2 integral; the built-in stability tables quote
/// final-state data norms in this convention.
pub fn nodal_sum_sq(f: &NodalFunction) -> f64 {
    f.values().iter().map(|v| v * v).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn grid(n: usize) -> Grid1D {
        Grid1D::new(n, 1.0).unwrap()
    }

    #[test]
    fn grid_invariants() {
        let g = grid(100);
        assert!((g.dx() * g.n_cells() as f64 - 1.0).abs() < 1e-12);
        assert!((g.dt() * g.n_steps() as f64 - g.t_final()).abs() < 1e-12);
        assert_eq!(g.n_nodes(), 101);
        assert_eq!(g.node(0), 0.0);
        assert_eq!(g.node(100), 1.0);
        // Nodes at table breakpoints must compare exactly.
        assert_eq!(g.node(5), 0.05);
        assert_eq!(g.node(45), 0.45);
        assert_eq!(g.node(50), 0.5);
        assert!(Grid1D::new(3, 1.0).is_err());
        assert!(Grid1D::new(10, 0.0).is_err());
        assert!(Grid1D::with_time_steps(10, 0, 1.0).is_err());
    }

    #[test]
    fn simpson_constant_is_exact() {
        for n in [4, 10, 100] {
            let g = grid(n);
            let one = g.sample(|_| 1.0);
            assert!((simpson_integrate(&one, &g).unwrap() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn simpson_quadratic_is_exact() {
        let g = grid(100);
        let f = g.sample(|x| x * x);
        assert!((simpson_integrate(&f, &g).unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn simpson_matches_closed_form_for_decaying_sine_squared() {
        // integral of exp(-2x) sin^2(pi x) over (0,1):
        // (1 - e^{-2})/4 - (1 - e^{-2}) / (4 (1 + pi^2))
        let exact = (1.0 - (-2.0f64).exp()) / 4.0 * (PI * PI) / (1.0 + PI * PI);
        let g = grid(100);
        let f = g.sample(|x| (-2.0 * x).exp() * (PI * x).sin().powi(2));
        let got = simpson_integrate(&f, &g).unwrap();
        assert!((got - exact).abs() < 1e-8, "got {got}, exact {exact}");
        assert!((got - 0.1963).abs() < 1e-4);
    }

    #[test]
    fn simpson_fourth_order_convergence() {
        let exact = (1.0 - (-2.0f64).exp()) / 4.0 * (PI * PI) / (1.0 + PI * PI);
        let errs: Vec<f64> = [50usize, 100, 200]
            .iter()
            .map(|&n| {
                let g = grid(n);
                let f = g.sample(|x| (-2.0 * x).exp() * (PI * x).sin().powi(2));
                (simpson_integrate(&f, &g).unwrap() - exact).abs()
            })
            .collect();
        let r1 = errs[0] / errs[1];
        let r2 = errs[1] / errs[2];
        assert!(r1 > 12.0 && r1 < 20.0, "ratio {r1}");
        assert!(r2 > 12.0 && r2 < 20.0, "ratio {r2}");
    }

    #[test]
    fn odd_cell_count_falls_back_to_trapezoid_on_last_interval() {
        let g = Grid1D::new(101, 1.0).unwrap();
        let one = g.sample(|_| 1.0);
        assert!((simpson_integrate(&one, &g).unwrap() - 1.0).abs() < 1e-14);
        let f = g.sample(|x| x * x);
        // Trapezoid tail degrades the rule to second order locally but the
        // value must stay within the tail's O(dx^3) error.
        assert!((simpson_integrate(&f, &g).unwrap() - 1.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn l2_inner_examples() {
        let g = grid(100);
        let zero = NodalFunction::zeros(g.n_nodes());
        assert_eq!(l2_inner(&zero, &zero, &g).unwrap(), 0.0);

        let s = g.sample(|x| (PI * x).sin());
        assert!((l2_inner(&s, &s, &g).unwrap() - 0.5).abs() < 1e-6);

        let c = g.sample(|x| (PI * x).cos());
        assert!(l2_inner(&s, &c, &g).unwrap().abs() < 1e-10);
    }

    #[test]
    fn l2_inner_rejects_mismatched_lengths() {
        let g = grid(100);
        let short = NodalFunction::zeros(5);
        let ok = NodalFunction::zeros(g.n_nodes());
        assert!(matches!(
            l2_inner(&short, &ok, &g),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn h1_inner_examples() {
        let g = grid(100);
        let c = NodalFunction::constant(3.0, g.n_nodes());
        assert!((h1_inner(&c, &c, &g).unwrap() - 9.0).abs() < 1e-12);

        let x = g.sample(|x| x);
        assert!((h1_inner(&x, &x, &g).unwrap() - 4.0 / 3.0).abs() < 1e-3);

        let one = NodalFunction::constant(1.0, g.n_nodes());
        assert!((h1_inner(&x, &one, &g).unwrap() - 0.5).abs() < 1e-6);
    }

    #[test]
    fn derivative_is_exact_for_linear_fields() {
        let g = grid(10);
        let f = g.sample(|x| 2.0 * x - 0.7);
        let d = nodal_derivative(&f, &g).unwrap();
        for &v in d.values() {
            assert!((v - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn from_values_rejects_non_finite() {
        assert!(matches!(
            NodalFunction::from_values(vec![0.0, f64::NAN]),
            Err(Error::NonFinite(1))
        ));
        assert!(NodalFunction::from_values(vec![0.0, 1.0]).is_ok());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        // Simpson reproduces cubic polynomials exactly on even cell counts.
        #[test]
        fn simpson_exact_for_cubics(
            c0 in -1.0f64..1.0,
            c1 in -1.0f64..1.0,
            c2 in -1.0f64..1.0,
            c3 in -1.0f64..1.0,
            half_n in 2usize..40,
        ) {
            let g = grid(2 * half_n);
            let f = g.sample(|x| c0 + x * (c1 + x * (c2 + x * c3)));
            let exact = c0 + c1 / 2.0 + c2 / 3.0 + c3 / 4.0;
            prop_assert!((simpson_integrate(&f, &g).unwrap() - exact).abs() < 1e-12);
        }

        // Symmetry, bilinearity, positivity of the L2 product; H1 dominates L2.
        #[test]
        fn inner_product_laws(seed in 0u64..1000, a in -2.0f64..2.0, b in -2.0f64..2.0) {
            let g = grid(32);
            let mut rng = crate::rng::SplitMix64::new(seed);
            let f = NodalFunction::from_values(
                (0..g.n_nodes()).map(|_| rng.next_closed_open() - 0.5).collect()).unwrap();
            let h = NodalFunction::from_values(
                (0..g.n_nodes()).map(|_| rng.next_closed_open() - 0.5).collect()).unwrap();
            let w = NodalFunction::from_values(
                (0..g.n_nodes()).map(|_| rng.next_closed_open() - 0.5).collect()).unwrap();

            let fg = l2_inner(&f, &h, &g).unwrap();
            let gf = l2_inner(&h, &f, &g).unwrap();
            prop_assert!((fg - gf).abs() < 1e-12);

            let combo = f.scale(a).add_scaled(&h, b).unwrap();
            let lhs = l2_inner(&combo, &w, &g).unwrap();
            let rhs = a * l2_inner(&f, &w, &g).unwrap() + b * l2_inner(&h, &w, &g).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-10);

            prop_assert!(l2_norm_sq(&f, &g).unwrap() >= 0.0);
            prop_assert!(h1_inner(&f, &f, &g).unwrap() >= l2_inner(&f, &f, &g).unwrap() - 1e-14);
        }
    }

    #[test]
    fn l2_norm_zero_iff_all_nodes_zero() {
        let g = grid(8);
        let zero = NodalFunction::zeros(g.n_nodes());
        assert_eq!(l2_norm_sq(&zero, &g).unwrap(), 0.0);
        // A single nonzero node must register: Simpson weights never vanish.
        for i in 0..g.n_nodes() {
            let mut v = vec![0.0; g.n_nodes()];
            v[i] = 1.0;
            let f = NodalFunction::from_values(v).unwrap();
            assert!(l2_norm_sq(&f, &g).unwrap() > 0.0, "node {i} invisible");
        }
    }
}
