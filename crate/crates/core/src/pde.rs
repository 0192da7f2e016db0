//! Finite-difference heat equation on the unit hypercube.
//!
//! `d rho/dt = Laplacian(rho)` with one of three boundary conditions picked
//! by the slow parameter:
//!
//! * `theta in [0,1)` — Dirichlet: `rho = g` on the boundary;
//! * `theta = 1`      — Robin: one-sided normal derivative relaxes the
//!   boundary value toward `g` at speed `c` (`d+ rho = c (rho - g)` on the
//!   low face of an axis, `d- rho = c (g - rho)` on the high face);
//! * `theta > 1`      — Neumann: zero one-sided derivatives.
//!
//! Spatial discretization is the second-order central Laplacian with ghost
//! nodes eliminated through the boundary conditions; corner and edge nodes
//! apply each axis' face condition independently. Time stepping is explicit
//! Euler with a step keeping every update a convex combination of old node
//! values (and `g`), which makes the discrete solution obey the maximum
//! principle exactly up to roundoff.

use crate::catalog::ProfileFn;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Uniform grid on the closed hypercube: nodes `(j_1 h, ..., j_d h)` with
/// `j in {0, ..., m+1}` and `h = 1/(m+1)`; `m` interior points per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct Grid {
    d: usize,
    m: usize,
}

impl Grid {
    pub fn new(d: usize, m: usize) -> Result<Self> {
        if d < 1 || m < 3 {
            return Err(Error::InvalidParameter(format!(
                "grid needs d >= 1 and m >= 3 interior points, got d={d}, m={m}"
            )));
        }
        Ok(Self { d, m })
    }

    #[inline]
    pub fn dimension(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn interior_per_axis(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn nodes_per_axis(&self) -> usize {
        self.m + 2
    }

    pub fn node_count(&self) -> usize {
        self.nodes_per_axis().pow(self.d as u32)
    }

    pub fn spacing<F: Scalar>(&self) -> F {
        F::one() / F::of_usize(self.m + 1)
    }

    /// Strides of the row-major node layout (axis 0 slowest).
    pub fn strides(&self) -> Vec<usize> {
        let npa = self.nodes_per_axis();
        let mut s = vec![1usize; self.d];
        for a in (0..self.d.saturating_sub(1)).rev() {
            s[a] = s[a + 1] * npa;
        }
        s
    }

    pub fn node_indices(&self, flat: usize) -> Vec<usize> {
        let npa = self.nodes_per_axis();
        let mut c = vec![0usize; self.d];
        let mut rem = flat;
        for a in (0..self.d).rev() {
            c[a] = rem % npa;
            rem /= npa;
        }
        c
    }

    pub fn node_point<F: Scalar>(&self, indices: &[usize]) -> Vec<F> {
        let h = self.spacing::<F>();
        indices.iter().map(|&j| F::of_usize(j) * h).collect()
    }

    /// Flattened per-node axis indices (`node_count * d` entries), the hot
    /// lookup table for the stepper.
    fn index_table(&self) -> Vec<u32> {
        let npa = self.nodes_per_axis();
        let mut table = vec![0u32; self.node_count() * self.d];
        for flat in 0..self.node_count() {
            let mut rem = flat;
            for a in (0..self.d).rev() {
                table[flat * self.d + a] = (rem % npa) as u32;
                rem /= npa;
            }
        }
        table
    }
}

/// Density field on a [`Grid`] at a fixed time, evaluable anywhere on the
/// closed hypercube by multilinear interpolation.
#[derive(Debug, Clone)]
pub struct MacroField<F: Scalar> {
    grid: Grid,
    time: F,
    values: Vec<F>,
}

impl<F: Scalar> MacroField<F> {
    pub fn from_fn(grid: Grid, time: F, f: impl Fn(&[F]) -> F) -> Self {
        let values = (0..grid.node_count())
            .map(|flat| f(&grid.node_point::<F>(&grid.node_indices(flat))))
            .collect();
        Self { grid, time, values }
    }

    pub fn from_values(grid: Grid, time: F, values: Vec<F>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::InvalidParameter(format!(
                "field has {} values for a grid of {} nodes",
                values.len(),
                grid.node_count()
            )));
        }
        Ok(Self { grid, time, values })
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn time(&self) -> F {
        self.time
    }

    #[inline]
    pub fn values(&self) -> &[F] {
        &self.values
    }

    pub fn min_value(&self) -> F {
        self.values.iter().copied().fold(F::infinity(), F::min)
    }

    pub fn max_value(&self) -> F {
        self.values.iter().copied().fold(F::neg_infinity(), F::max)
    }

    /// Multilinear interpolation at `u` in the closed hypercube.
    pub fn eval(&self, u: &[F]) -> F {
        debug_assert_eq!(u.len(), self.grid.d);
        let h = self.grid.spacing::<F>();
        let strides = self.grid.strides();
        let mut cell = vec![0usize; self.grid.d];
        let mut frac = vec![F::zero(); self.grid.d];
        for a in 0..self.grid.d {
            let x = (u[a].max(F::zero()).min(F::one())) / h;
            let mut j = x.floor().to_f64_lossy() as usize;
            if j > self.grid.m {
                j = self.grid.m; // u = 1 falls into the last cell
            }
            cell[a] = j;
            frac[a] = x - F::of_usize(j);
        }
        let mut acc = F::zero();
        for corner in 0..(1usize << self.grid.d) {
            let mut w = F::one();
            let mut flat = 0usize;
            for a in 0..self.grid.d {
                let hi = corner >> a & 1 == 1;
                w *= if hi { frac[a] } else { F::one() - frac[a] };
                flat += (cell[a] + usize::from(hi)) * strides[a];
            }
            acc += w * self.values[flat];
        }
        acc
    }

    /// Pointwise `log(rho / (1 - rho))`; fails if any value leaves `(0, 1)`.
    pub fn logit(&self) -> Result<MacroField<F>> {
        let mut values = Vec::with_capacity(self.values.len());
        for &v in &self.values {
            if !(v > F::zero() && v < F::one()) {
                return Err(Error::FieldOutOfRange {
                    value: v.to_f64_lossy(),
                });
            }
            values.push((v / (F::one() - v)).ln());
        }
        Ok(MacroField {
            grid: self.grid,
            time: self.time,
            values,
        })
    }

    /// CSV export: one row per node, `u_1, ..., u_d, value`.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        write!(w, "{}", (1..=self.grid.d).map(|a| format!("u{a}")).collect::<Vec<_>>().join(","))?;
        writeln!(w, ",value")?;
        for flat in 0..self.grid.node_count() {
            let point = self.grid.node_point::<F>(&self.grid.node_indices(flat));
            for x in &point {
                write!(w, "{x},")?;
            }
            writeln!(w, "{}", self.values[flat])?;
        }
        Ok(())
    }

    /// Compact binary export: magic, `d`, `m`, time, then node values as
    /// little-endian f64 in flat order.
    pub fn write_binary<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        w.write_all(b"SSEPGRD1")?;
        w.write_all(&(self.grid.d as u32).to_le_bytes())?;
        w.write_all(&(self.grid.m as u32).to_le_bytes())?;
        w.write_all(&self.time.to_f64_lossy().to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_f64_lossy().to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: std::io::Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != b"SSEPGRD1" {
            return Err(Error::Config("bad field magic".into()));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        let d = u32::from_le_bytes(b4) as usize;
        r.read_exact(&mut b4)?;
        let m = u32::from_le_bytes(b4) as usize;
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let time = F::of(f64::from_le_bytes(b8));
        let grid = Grid::new(d, m)?;
        let mut values = Vec::with_capacity(grid.node_count());
        for _ in 0..grid.node_count() {
            r.read_exact(&mut b8)?;
            values.push(F::of(f64::from_le_bytes(b8)));
        }
        MacroField::from_values(grid, time, values)
    }
}

/// Boundary condition of the hydrodynamic equation.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub enum BoundaryCondition<F: Scalar> {
    Dirichlet { g: ProfileFn<F> },
    Robin { c: F, g: ProfileFn<F> },
    Neumann,
}

impl<F: Scalar> BoundaryCondition<F> {
    /// The trichotomy: Dirichlet for `theta < 1`, Robin at `theta = 1`,
    /// Neumann beyond.
    pub fn from_theta(theta: F, c: F, g: ProfileFn<F>) -> Self {
        if theta < F::one() {
            BoundaryCondition::Dirichlet { g }
        } else if theta == F::one() {
            BoundaryCondition::Robin { c, g }
        } else {
            BoundaryCondition::Neumann
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            BoundaryCondition::Dirichlet { .. } => "dirichlet",
            BoundaryCondition::Robin { .. } => "robin",
            BoundaryCondition::Neumann => "neumann",
        }
    }
}

/// Worst mismatch between the initial profile and the boundary condition.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct CompatibilityReport<F: Scalar> {
    pub max_defect: F,
    pub tolerance: F,
    pub compatible: bool,
}

/// Measure how far `rho0` is from satisfying the boundary condition at
/// `t = 0`. One-sided derivatives are approximated by second-order
/// finite differences at the grid spacing, so the warn tolerance carries an
/// `O(h^2)` budget on top of the `1e-6` base.
pub fn check_compatibility<F: Scalar>(
    rho0: impl Fn(&[F]) -> F,
    bc: &BoundaryCondition<F>,
    grid: &Grid,
) -> CompatibilityReport<F> {
    let h = grid.spacing::<F>();
    let d = grid.dimension();
    let top = grid.m + 1;
    let mut max_defect = F::zero();
    for flat in 0..grid.node_count() {
        let idx = grid.node_indices(flat);
        for a in 0..d {
            if idx[a] != 0 && idx[a] != top {
                continue;
            }
            let u = grid.node_point::<F>(&idx);
            let defect = match bc {
                BoundaryCondition::Dirichlet { g } => (rho0(&u) - g.eval(&u)).abs(),
                BoundaryCondition::Robin { c, g } => {
                    let dv = one_sided_derivative(&rho0, &u, a, h, idx[a] == 0);
                    let target = if idx[a] == 0 {
                        *c * (rho0(&u) - g.eval(&u))
                    } else {
                        *c * (g.eval(&u) - rho0(&u))
                    };
                    (dv - target).abs()
                }
                BoundaryCondition::Neumann => {
                    one_sided_derivative(&rho0, &u, a, h, idx[a] == 0).abs()
                }
            };
            max_defect = max_defect.max(defect);
        }
    }
    let fd_budget = match bc {
        BoundaryCondition::Dirichlet { .. } => F::zero(),
        _ => F::of(10.0) * h * h,
    };
    let tolerance = F::of(1e-6) + fd_budget;
    CompatibilityReport {
        max_defect,
        tolerance,
        compatible: max_defect <= tolerance,
    }
}

/// Second-order one-sided derivative along `axis` at a face point, stepping
/// into the domain.
fn one_sided_derivative<F: Scalar>(
    f: &impl Fn(&[F]) -> F,
    u: &[F],
    axis: usize,
    h: F,
    low_face: bool,
) -> F {
    let mut u1 = u.to_vec();
    let mut u2 = u.to_vec();
    let step = if low_face { h } else { -h };
    u1[axis] += step;
    u2[axis] = u2[axis] + step + step;
    let three = F::of(3.0);
    let four = F::of(4.0);
    // (-3 f0 + 4 f1 - f2) / (2h) oriented along the step
    (-three * f(u) + four * f(&u1) - f(&u2)) / (F::of(2.0) * step)
}

/// Result of [`solve`]: snapshot fields plus the running extrema observed
/// over every time step (not just the snapshots).
#[derive(Debug, Clone)]
pub struct HeatSolution<F: Scalar> {
    pub snapshots: Vec<MacroField<F>>,
    pub compatibility: CompatibilityReport<F>,
    pub min_seen: F,
    pub max_seen: F,
    pub dt: F,
    pub steps: u64,
}

/// March the heat equation to `horizon`, recording fields at the requested
/// times. Snapshot times must be sorted and lie within `[0, horizon]`.
pub fn solve<F: Scalar>(
    rho0: impl Fn(&[F]) -> F,
    bc: &BoundaryCondition<F>,
    horizon: F,
    snapshot_times: &[F],
    grid: Grid,
) -> Result<HeatSolution<F>> {
    if snapshot_times.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidParameter("snapshot times not sorted".into()));
    }
    if snapshot_times
        .iter()
        .any(|&t| t < F::zero() || t > horizon)
    {
        return Err(Error::InvalidParameter(
            "snapshot times outside [0, horizon]".into(),
        ));
    }
    let compatibility = check_compatibility(&rho0, bc, &grid);

    let d = grid.dimension();
    let h = grid.spacing::<F>();
    let top = (grid.m + 1) as u32;
    let index_table = grid.index_table();
    let strides = grid.strides();

    // Face data: g on boundary nodes, and the Dirichlet pin mask.
    let (robin_c, g_fn): (F, Option<&ProfileFn<F>>) = match bc {
        BoundaryCondition::Dirichlet { g } => (F::zero(), Some(g)),
        BoundaryCondition::Robin { c, g } => (*c, Some(g)),
        BoundaryCondition::Neumann => (F::zero(), None),
    };
    let dirichlet = matches!(bc, BoundaryCondition::Dirichlet { .. });
    let n_nodes = grid.node_count();
    let mut on_face = vec![false; n_nodes];
    let mut g_node = vec![F::zero(); n_nodes];
    for flat in 0..n_nodes {
        let idx = &index_table[flat * d..(flat + 1) * d];
        if idx.iter().any(|&j| j == 0 || j == top) {
            on_face[flat] = true;
            if let Some(g) = g_fn {
                let coords = grid.node_point::<F>(
                    &idx.iter().map(|&j| j as usize).collect::<Vec<_>>(),
                );
                g_node[flat] = g.eval(&coords);
            }
        }
    }

    // Initial data; Dirichlet pins face nodes to g from the start.
    let mut values: Vec<F> = (0..n_nodes)
        .map(|flat| {
            let idx = &index_table[flat * d..(flat + 1) * d];
            if dirichlet && on_face[flat] {
                g_node[flat]
            } else {
                let coords: Vec<usize> = idx.iter().map(|&j| j as usize).collect();
                rho0(&grid.node_point::<F>(&coords))
            }
        })
        .collect();

    // Convexity bound on the time step: the worst diagonal entry is a
    // corner node, 2d/h^2 plus the Robin relaxation 2dc/h, and we stay at
    // half of its inverse. For Dirichlet and Neumann this is exactly
    // h^2 / (4d).
    let two = F::of(2.0);
    let inv_h2 = F::one() / (h * h);
    let worst_diag = F::of_usize(2 * d) * inv_h2
        + if matches!(bc, BoundaryCondition::Robin { .. }) {
            F::of_usize(2 * d) * robin_c / h
        } else {
            F::zero()
        };
    let dt = F::one() / (two * worst_diag);

    let mut min_seen = values.iter().copied().fold(F::infinity(), F::min);
    let mut max_seen = values.iter().copied().fold(F::neg_infinity(), F::max);
    let mut next = values.clone();
    let mut snapshots = Vec::with_capacity(snapshot_times.len());
    let mut steps = 0u64;
    let mut t = F::zero();

    let step_once = |values: &mut Vec<F>, next: &mut Vec<F>, tau: F| {
        for flat in 0..n_nodes {
            if dirichlet && on_face[flat] {
                next[flat] = values[flat];
                continue;
            }
            let idx = &index_table[flat * d..(flat + 1) * d];
            let v = values[flat];
            let mut lap = F::zero();
            for a in 0..d {
                let s = strides[a];
                let j = idx[a];
                if j == 0 {
                    lap += two * (values[flat + s] - v) * inv_h2;
                    if robin_c > F::zero() {
                        lap -= two * robin_c * (v - g_node[flat]) / h;
                    }
                } else if j == top {
                    lap += two * (values[flat - s] - v) * inv_h2;
                    if robin_c > F::zero() {
                        lap += two * robin_c * (g_node[flat] - v) / h;
                    }
                } else {
                    lap += (values[flat - s] - two * v + values[flat + s]) * inv_h2;
                }
            }
            next[flat] = v + tau * lap;
        }
        std::mem::swap(values, next);
    };

    let emit = |values: &[F], time: F, snaps: &mut Vec<MacroField<F>>| -> Result<()> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("heat solve at t={time}")));
        }
        snaps.push(MacroField {
            grid,
            time,
            values: values.to_vec(),
        });
        Ok(())
    };

    for &target in snapshot_times {
        while t < target {
            let tau = dt.min(target - t);
            step_once(&mut values, &mut next, tau);
            steps += 1;
            for &v in values.iter() {
                min_seen = min_seen.min(v);
                max_seen = max_seen.max(v);
            }
            t = if tau < dt { target } else { t + tau };
        }
        emit(&values, target, &mut snapshots)?;
    }
    Ok(HeatSolution {
        snapshots,
        compatibility,
        min_seen,
        max_seen,
        dt,
        steps,
    })
}

/// Envelope check from the parabolic maximum principle: Dirichlet and Robin
/// solutions live between the extrema of the initial profile and of `g`;
/// Neumann solutions between the extrema of the initial profile alone.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct ExtremumReport<F: Scalar> {
    pub observed_min: F,
    pub observed_max: F,
    pub envelope_min: F,
    pub envelope_max: F,
    pub slack: F,
    pub pass: bool,
}

pub fn assert_extremum_principle<F: Scalar>(
    solution: &HeatSolution<F>,
    rho0_range: (F, F),
    g_range: Option<(F, F)>,
    bc: &BoundaryCondition<F>,
) -> ExtremumReport<F> {
    let (mut lo, mut hi) = rho0_range;
    if !matches!(bc, BoundaryCondition::Neumann) {
        if let Some((glo, ghi)) = g_range {
            lo = lo.min(glo);
            hi = hi.max(ghi);
        }
    }
    let slack = F::of(1e-6);
    let pass = solution.min_seen >= lo - slack && solution.max_seen <= hi + slack;
    ExtremumReport {
        observed_min: solution.min_seen,
        observed_max: solution.max_seen,
        envelope_min: lo,
        envelope_max: hi,
        slack,
        pass,
    }
}

/// Trapezoid weight of a node (tensorized 1/2 on faces), including `h^d`.
pub fn trapezoid_weight<F: Scalar>(grid: &Grid, indices: &[usize]) -> F {
    let h = grid.spacing::<F>();
    let top = grid.m + 1;
    let mut w = F::one();
    for &j in indices {
        w *= h;
        if j == 0 || j == top {
            w *= F::of(0.5);
        }
    }
    w
}

/// Composite trapezoid rule for a function sampled on the grid nodes.
pub fn trapezoid_integral<F: Scalar>(grid: &Grid, f: impl Fn(&[F]) -> F) -> F {
    let mut acc = F::zero();
    for flat in 0..grid.node_count() {
        let idx = grid.node_indices(flat);
        acc += trapezoid_weight::<F>(grid, &idx) * f(&grid.node_point::<F>(&idx));
    }
    acc
}

/// `integral of G * rho` over the hypercube by the trapezoid rule on the
/// field's grid.
pub fn integrate_against<F: Scalar>(field: &MacroField<F>, g: impl Fn(&[F]) -> F) -> F {
    let grid = field.grid();
    let mut acc = F::zero();
    for flat in 0..grid.node_count() {
        let idx = grid.node_indices(flat);
        acc += trapezoid_weight::<F>(grid, &idx)
                * g(&grid.node_point::<F>(&idx))
                * field.values()[flat];
    }
    acc
}

/// Leading-order trapezoid error estimate `h^2/12 * sum_i |int d2_i f|`,
/// with the second derivatives taken from second differences of the
/// integrand samples.
pub fn trapezoid_error_estimate<F: Scalar>(grid: &Grid, samples: &[F]) -> F {
    let h = grid.spacing::<F>();
    let inv_h2 = F::one() / (h * h);
    let strides = grid.strides();
    let top = grid.m + 1;
    let two = F::of(2.0);
    let mut total = F::zero();
    for a in 0..grid.dimension() {
        let mut axis_acc = F::zero();
        for flat in 0..grid.node_count() {
            let idx = grid.node_indices(flat);
            let j = idx[a];
            // copy the nearest interior second difference onto the faces
            let center = if j == 0 {
                flat + strides[a]
            } else if j == top {
                flat - strides[a]
            } else {
                flat
            };
            let d2 = (samples[center - strides[a]] - two * samples[center]
                + samples[center + strides[a]])
                * inv_h2;
            axis_acc += trapezoid_weight::<F>(grid, &idx) * d2;
        }
        total += axis_acc.abs();
    }
    h * h / F::of(12.0) * total
}

/// Max residual of the identity `grad log(rho/(1-rho)) = grad rho / (rho(1-rho))`
/// over interior nodes, both sides taken by central differences. Decays at
/// `O(h^2)` for smooth positive fields.
pub fn logit_gradient_residual<F: Scalar>(field: &MacroField<F>) -> Result<F> {
    let logit = field.logit()?;
    let grid = field.grid();
    let strides = grid.strides();
    let h = grid.spacing::<F>();
    let two_h = F::of(2.0) * h;
    let top = grid.m + 1;
    let mut worst = F::zero();
    for flat in 0..grid.node_count() {
        let idx = grid.node_indices(flat);
        if idx.iter().any(|&j| j == 0 || j == top) {
            continue;
        }
        let rho = field.values()[flat];
        for (a, &s) in strides.iter().enumerate() {
            let _ = a;
            let dh = (logit.values()[flat + s] - logit.values()[flat - s]) / two_h;
            let dr = (field.values()[flat + s] - field.values()[flat - s]) / two_h;
            let res = (dh - dr / (rho * (F::one() - rho))).abs();
            worst = worst.max(res);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    const PI: f64 = std::f64::consts::PI;

    fn grid(d: usize, m: usize) -> Grid {
        Grid::new(d, m).unwrap()
    }

    fn sup_error(field: &MacroField<f64>, exact: impl Fn(&[f64]) -> f64) -> f64 {
        let g = field.grid();
        (0..g.node_count())
            .map(|flat| {
                let p = g.node_point::<f64>(&g.node_indices(flat));
                (field.values()[flat] - exact(&p)).abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn constant_solution_is_constant_for_all_bcs() {
        let alpha = 0.37;
        let g = ProfileFn::constant(alpha);
        for bc in [
            BoundaryCondition::Dirichlet { g: g.clone() },
            BoundaryCondition::Robin { c: 2.0, g: g.clone() },
            BoundaryCondition::Neumann,
        ] {
            let sol = solve(|_: &[f64]| alpha, &bc, 0.05, &[0.05], grid(2, 12)).unwrap();
            assert!(sol.compatibility.compatible);
            let err = sup_error(&sol.snapshots[0], |_| alpha);
            assert!(err < 1e-12, "{} err={err}", bc.kind_name());
        }
    }

    #[test]
    fn neumann_cosine_mode_decays_analytically() {
        let rho0 = |u: &[f64]| 0.5 + 0.25 * (PI * u[0]).cos();
        let t = 0.1;
        let sol = solve(rho0, &BoundaryCondition::Neumann, t, &[t], grid(2, 32)).unwrap();
        assert!(sol.compatibility.compatible);
        let exact = |u: &[f64]| 0.5 + 0.25 * (-PI * PI * t).exp() * (PI * u[0]).cos();
        let err = sup_error(&sol.snapshots[0], exact);
        assert!(err < 1e-3, "sup error {err}");
    }

    #[test]
    fn dirichlet_product_mode_decays_analytically() {
        // In d = 2 the time-independent-Dirichlet separable solution is the
        // product mode, decaying at exp(-2 pi^2 t).
        let rho0 =
            |u: &[f64]| 0.5 + 0.25 * (PI * u[0]).sin() * (PI * u[1]).sin();
        let bc = BoundaryCondition::Dirichlet { g: ProfileFn::constant(0.5) };
        let t = 0.1;
        let sol = solve(rho0, &bc, t, &[t], grid(2, 32)).unwrap();
        assert!(sol.compatibility.compatible);
        let exact = |u: &[f64]| {
            0.5 + 0.25 * (-2.0 * PI * PI * t).exp() * (PI * u[0]).sin() * (PI * u[1]).sin()
        };
        let err = sup_error(&sol.snapshots[0], exact);
        assert!(err < 1e-3, "sup error {err}");
    }

    #[test]
    fn dirichlet_single_mode_decays_in_one_dimension() {
        let rho0 = |u: &[f64]| 0.5 + 0.25 * (PI * u[0]).sin();
        let bc = BoundaryCondition::Dirichlet { g: ProfileFn::constant(0.5) };
        let t = 0.1;
        let sol = solve(rho0, &bc, t, &[t], grid(1, 64)).unwrap();
        let exact = |u: &[f64]| 0.5 + 0.25 * (-PI * PI * t).exp() * (PI * u[0]).sin();
        let err = sup_error(&sol.snapshots[0], exact);
        assert!(err < 1e-4, "sup error {err}");
    }

    #[test]
    fn compatibility_reports() {
        let g = grid(2, 16);
        // matching constants: compatible under all three conditions
        let bc = BoundaryCondition::Dirichlet { g: ProfileFn::constant(0.5) };
        assert!(check_compatibility(|_: &[f64]| 0.5, &bc, &g).compatible);
        let bc = BoundaryCondition::Robin { c: 1.5, g: ProfileFn::constant(0.5) };
        assert!(check_compatibility(|_: &[f64]| 0.5, &bc, &g).compatible);
        assert!(
            check_compatibility(|_: &[f64]| 0.5, &BoundaryCondition::Neumann, &g).compatible
        );

        // cosine bump has zero normal derivative at the faces
        let rho0 = |u: &[f64]| 0.5 + 0.25 * (PI * u[0]).cos();
        let rep = check_compatibility(rho0, &BoundaryCondition::Neumann, &g);
        assert!(rep.compatible, "defect {}", rep.max_defect);

        // Dirichlet mismatch of 0.2 reported, not rejected
        let bc = BoundaryCondition::Dirichlet { g: ProfileFn::constant(0.3) };
        let rep = check_compatibility(|_: &[f64]| 0.5, &bc, &g);
        assert!(!rep.compatible);
        assert!((rep.max_defect - 0.2).abs() < 1e-12);
    }

    #[test]
    fn spatial_order_is_second() {
        let t = 0.05;
        let exact = move |u: &[f64]| 0.5 + 0.25 * (-PI * PI * t).exp() * (PI * u[0]).cos();
        let mut errs = Vec::new();
        for m in [16usize, 32] {
            let sol = solve(
                |u: &[f64]| 0.5 + 0.25 * (PI * u[0]).cos(),
                &BoundaryCondition::Neumann,
                t,
                &[t],
                grid(2, m),
            )
            .unwrap();
            errs.push(sup_error(&sol.snapshots[0], exact));
        }
        let ratio = errs[0] / errs[1];
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn neumann_conserves_trapezoid_mass() {
        let rho0 = |u: &[f64]| 0.5 + 0.2 * (PI * u[0]).cos() - 0.1 * (PI * u[1]).cos();
        let times = [0.0, 0.02, 0.1, 0.3];
        let sol = solve(rho0, &BoundaryCondition::Neumann, 0.3, &times, grid(2, 20)).unwrap();
        let masses: Vec<f64> = sol
            .snapshots
            .iter()
            .map(|f| integrate_against(f, |_| 1.0))
            .collect();
        for m in &masses[1..] {
            assert!((m - masses[0]).abs() < 1e-8, "mass drift {masses:?}");
        }
    }

    #[test]
    fn dirichlet_relaxes_to_constant_boundary_data() {
        let alpha = 0.6;
        let rho0 = move |u: &[f64]| alpha + 0.25 * (PI * u[0]).sin() * (PI * u[1]).sin();
        let bc = BoundaryCondition::Dirichlet { g: ProfileFn::constant(alpha) };
        let sol = solve(rho0, &bc, 1.0, &[1.0], grid(2, 16)).unwrap();
        let err = sup_error(&sol.snapshots[0], |_| alpha);
        assert!(err < 1e-3, "residual {err}");
    }

    #[test]
    fn robin_with_huge_c_approaches_dirichlet() {
        let rho0 = |u: &[f64]| 0.5 + 0.25 * (PI * u[0]).sin() * (PI * u[1]).sin();
        let t = 0.1;
        let g = ProfileFn::constant(0.5);
        let dir = solve(
            rho0,
            &BoundaryCondition::Dirichlet { g: g.clone() },
            t,
            &[t],
            grid(2, 24),
        )
        .unwrap();
        let rob = solve(
            rho0,
            &BoundaryCondition::Robin { c: 1e3, g },
            t,
            &[t],
            grid(2, 24),
        )
        .unwrap();
        let diff = dir.snapshots[0]
            .values()
            .iter()
            .zip(rob.snapshots[0].values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(diff < 5e-2, "robin/dirichlet gap {diff}");
    }

    #[test]
    fn extremum_principle_on_robin_case() {
        // Robin, rho0 = 0.6, g = 0.4: solution stays inside [0.4, 0.6].
        let g = ProfileFn::constant(0.4);
        let bc = BoundaryCondition::Robin { c: 2.0, g };
        let sol = solve(|_: &[f64]| 0.6, &bc, 0.5, &[0.5], grid(2, 12)).unwrap();
        let rep = assert_extremum_principle(&sol, (0.6, 0.6), Some((0.4, 0.4)), &bc);
        assert!(rep.pass, "{rep:?}");
        assert!(sol.min_seen >= 0.4 - 1e-9 && sol.max_seen <= 0.6 + 1e-9);
        // and the boundary value actually moved toward g
        let near_face = sol.snapshots[0].eval(&[0.0, 0.5]);
        assert!(near_face < 0.58, "face value {near_face}");
    }

    #[test]
    fn logit_examples_and_gradient_identity() {
        let g = grid(2, 16);
        let field = MacroField::from_fn(g, 0.0, |u| 0.5 + 0.25 * (PI * u[0]).cos());
        let h = field.logit().unwrap();
        // rho = 1/2 -> H = 0 at u1 = 1/2
        let mid = h.eval(&[0.5, 0.5]);
        assert!(mid.abs() < 1e-12, "logit at half {mid}");
        // rho = e/(1+e) -> H = 1
        let e = std::f64::consts::E;
        let field = MacroField::from_fn(g, 0.0, |_| e / (1.0 + e));
        assert!((field.logit().unwrap().values()[0] - 1.0).abs() < 1e-12);
        // out-of-range detection
        let field = MacroField::from_fn(g, 0.0, |u| u[0] * 1.2 - 0.1);
        assert!(field.logit().is_err());

        // gradient identity residual decays at second order
        let res: Vec<f64> = [16usize, 32]
            .iter()
            .map(|&m| {
                let f = MacroField::from_fn(grid(2, m), 0.0, |u| {
                    0.5 + 0.25 * (PI * u[0]).cos()
                });
                logit_gradient_residual(&f).unwrap()
            })
            .collect();
        let ratio = res[0] / res[1];
        assert!((3.0..=5.0).contains(&ratio), "residual ratio {ratio}");
    }

    #[test]
    fn interpolation_is_exact_on_multilinear_data() {
        let g = grid(2, 8);
        let field = MacroField::from_fn(g, 0.0, |u: &[f64]| 0.2 + 0.3 * u[0] - 0.1 * u[1]);
        for u in [[0.13, 0.77], [0.0, 1.0], [0.999, 0.001]] {
            let want = 0.2 + 0.3 * u[0] - 0.1 * u[1];
            assert!((field.eval(&u) - want).abs() < 1e-14);
        }
    }

    #[test]
    fn trapezoid_matches_analytic_integrals() {
        let g = grid(2, 40);
        let val = trapezoid_integral(&g, |u: &[f64]| u[0] * u[1]);
        assert!((val - 0.25).abs() < 1e-6);
        let val = trapezoid_integral(&g, |u: &[f64]| (PI * u[0]).sin());
        assert!((val - 2.0 / PI).abs() < 1e-3);
        // error estimate brackets the true trapezoid error for the sine
        let samples: Vec<f64> = (0..g.node_count())
            .map(|flat| {
                let p = g.node_point::<f64>(&g.node_indices(flat));
                (PI * p[0]).sin()
            })
            .collect();
        let est = trapezoid_error_estimate(&g, &samples);
        let true_err = (val - 2.0 / PI).abs();
        assert!(est >= true_err * 0.3 && est <= true_err * 3.0, "est {est} true {true_err}");
    }

    #[test]
    fn binary_round_trip() {
        let g = grid(2, 5);
        let field = MacroField::from_fn(g, 0.25, |u| u[0] + 2.0 * u[1]);
        let mut buf = Vec::new();
        field.write_binary(&mut buf).unwrap();
        let back = MacroField::<f64>::read_binary(buf.as_slice()).unwrap();
        assert_eq!(back.grid(), field.grid());
        assert_eq!(back.time(), field.time());
        assert_eq!(back.values(), field.values());
    }

    #[test]
    fn snapshot_time_validation() {
        let bc = BoundaryCondition::Neumann;
        assert!(solve(|_: &[f64]| 0.5, &bc, 0.1, &[0.2], grid(2, 4)).is_err());
        assert!(solve(|_: &[f64]| 0.5, &bc, 0.1, &[0.05, 0.01], grid(2, 4)).is_err());
        // t = 0 snapshot returns the initial data
        let sol = solve(|u: &[f64]| 0.4 + 0.1 * u[0], &bc, 0.1, &[0.0], grid(2, 4)).unwrap();
        assert_eq!(sol.steps, 0);
        assert!((sol.snapshots[0].eval(&[0.5, 0.5]) - 0.45).abs() < 1e-12);
    }
}
