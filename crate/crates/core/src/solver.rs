//! First-order finite-volume scheme for
//!
//! ```text
//! dR/dt + div(R u) = 0
//! dQ/dt + div(Q u) = 0
//! dm/dt + div(m (x) u) + grad p = 0,    m = (R + Q) u
//! ```
//!
//! Rusanov (local Lax-Friedrichs) interface fluxes, forward Euler in time and
//! dimensional splitting (x sweep then y sweep) in 2D. Cells hitting the
//! vacuum floor abort the run instead of being clipped.

use rayon::prelude::*;

use crate::closure::{MixtureState, PressureLaw};
use crate::energy::total_energy;
use crate::error::{ensure_finite, Error, Result};
use crate::grid::{pairwise_sum, Grid};

/// Partial densities at or below this value abort the run.
pub const VACUUM_FLOOR: f64 = 1e-12;

/// Conserved variables of one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cons {
    pub r: f64,
    pub q: f64,
    pub m: [f64; 3],
}

impl Cons {
    pub fn from_primitive(r: f64, q: f64, u: [f64; 3]) -> Self {
        let rho = r + q;
        Self {
            r,
            q,
            m: [rho * u[0], rho * u[1], rho * u[2]],
        }
    }

    pub fn rho(&self) -> f64 {
        self.r + self.q
    }

    pub fn velocity(&self) -> [f64; 3] {
        let rho = self.rho();
        [self.m[0] / rho, self.m[1] / rho, self.m[2] / rho]
    }

    pub fn mixture(&self) -> MixtureState {
        MixtureState { r: self.r, q: self.q }
    }

    fn as_array(&self) -> [f64; 5] {
        [self.r, self.q, self.m[0], self.m[1], self.m[2]]
    }

    fn from_array(a: [f64; 5]) -> Self {
        Self {
            r: a[0],
            q: a[1],
            m: [a[2], a[3], a[4]],
        }
    }
}

/// Cell averages of `(R, Q, m)` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ConservedField {
    pub grid: Grid,
    pub cells: Vec<Cons>,
}

impl ConservedField {
    pub fn new(grid: Grid, cells: Vec<Cons>) -> Result<Self> {
        if cells.len() != grid.len() {
            return Err(Error::Shape(format!(
                "{} cells for a grid of {}",
                cells.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, cells })
    }

    pub fn constant(grid: Grid, state: Cons) -> Self {
        Self {
            grid,
            cells: vec![state; grid.len()],
        }
    }

    pub fn mass_r(&self) -> f64 {
        let values: Vec<f64> = self.cells.iter().map(|c| c.r).collect();
        pairwise_sum(&values) * self.grid.cell_volume()
    }

    pub fn mass_q(&self) -> f64 {
        let values: Vec<f64> = self.cells.iter().map(|c| c.q).collect();
        pairwise_sum(&values) * self.grid.cell_volume()
    }

    /// Vacuum and NaN monitor.
    pub fn check_admissible(&self, t: f64) -> Result<()> {
        for (cell, c) in self.cells.iter().enumerate() {
            let a = c.as_array();
            if a.iter().any(|v| v.is_nan()) {
                return Err(Error::NotANumber { cell, t });
            }
            if c.r <= VACUUM_FLOOR || c.q <= VACUUM_FLOOR {
                return Err(Error::Vacuum {
                    cell,
                    r: c.r,
                    q: c.q,
                    floor: VACUUM_FLOOR,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Impermeable walls, `u.n = 0`.
    Reflecting,
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FluxKind {
    Rusanov,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub cfl: f64,
    pub t_end: f64,
    pub flux: FluxKind,
    pub bc: Boundary,
    pub law: PressureLaw,
    /// Number of uniform output intervals on `[0, t_end]`.
    pub snapshots: usize,
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "cfl must lie in (0, 1] (got {})",
                self.cfl
            )));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "t_end must be positive (got {})",
                self.t_end
            )));
        }
        if self.snapshots == 0 {
            return Err(Error::InvalidParameter("snapshots must be at least 1".into()));
        }
        Ok(())
    }
}

/// One rectangular patch of piecewise-constant initial data.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub label: String,
    pub x: (f64, f64),
    /// Ignored on one-dimensional grids.
    pub y: (f64, f64),
    pub r: f64,
    pub q: f64,
    pub u: [f64; 3],
}

impl Patch {
    fn contains(&self, p: [f64; 2], dim: usize) -> bool {
        let in_x = p[0] >= self.x.0 && p[0] < self.x.1;
        in_x && (dim == 1 || (p[1] >= self.y.0 && p[1] < self.y.1))
    }

    pub fn overlaps(&self, other: &Patch, dim: usize) -> bool {
        let ox = self.x.1.min(other.x.1) - self.x.0.max(other.x.0);
        let oy = self.y.1.min(other.y.1) - self.y.0.max(other.y.0);
        ox > 0.0 && (dim == 1 || oy > 0.0)
    }
}

/// Piecewise-constant initial data with bounded, strictly positive densities.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PiecewiseConstantIC {
    pub patches: Vec<Patch>,
}

impl PiecewiseConstantIC {
    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.patches.is_empty() {
            return Err(Error::Empty("no initial-data patches".into()));
        }
        for p in &self.patches {
            for (name, v) in [("r", p.r), ("q", p.q), ("ux", p.u[0]), ("uy", p.u[1]), ("uz", p.u[2])] {
                ensure_finite(&format!("{} {name}", p.label), v)?;
            }
            if !(p.r > 0.0 && p.q > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{}: densities must be strictly positive (r = {}, q = {})",
                    p.label, p.r, p.q
                )));
            }
            if !(p.x.1 > p.x.0) || (dim == 2 && !(p.y.1 > p.y.0)) {
                return Err(Error::InvalidParameter(format!("{}: empty extent", p.label)));
            }
        }
        for (i, a) in self.patches.iter().enumerate() {
            for b in &self.patches[i + 1..] {
                if a.overlaps(b, dim) {
                    return Err(Error::InvalidParameter(format!(
                        "patches {} and {} overlap",
                        a.label, b.label
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Samples piecewise-constant data at the cell centers.
pub fn make_piecewise_ic(spec: &PiecewiseConstantIC, grid: &Grid) -> Result<ConservedField> {
    spec.validate(grid.dim)?;
    let mut cells = Vec::with_capacity(grid.len());
    for cell in 0..grid.len() {
        let center = grid.center(cell);
        let patch = spec
            .patches
            .iter()
            .find(|p| p.contains(center, grid.dim))
            .ok_or(Error::Uncovered { cell, center })?;
        cells.push(Cons::from_primitive(patch.r, patch.q, patch.u));
    }
    ConservedField::new(*grid, cells)
}

/// `(R u.n, Q u.n, m (u.n) + p n)` together with the pressure and sound speed.
pub fn physical_flux_with_thermo(cell: &Cons, n: [f64; 3], law: &PressureLaw) -> Result<([f64; 5], f64, f64)> {
    if !(cell.r > 0.0 && cell.q > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "flux evaluated at a vacuum cell (R = {}, Q = {})",
            cell.r, cell.q
        )));
    }
    let thermo = law.thermo(cell.mixture())?;
    let u = cell.velocity();
    let un = u[0] * n[0] + u[1] * n[1] + u[2] * n[2];
    let p = thermo.p;
    let flux = [
        cell.r * un,
        cell.q * un,
        cell.m[0] * un + p * n[0],
        cell.m[1] * un + p * n[1],
        cell.m[2] * un + p * n[2],
    ];
    Ok((flux, p, thermo.c2.sqrt()))
}

pub fn physical_flux(cell: &Cons, n: [f64; 3], law: &PressureLaw) -> Result<[f64; 5]> {
    Ok(physical_flux_with_thermo(cell, n, law)?.0)
}

/// Ghost state behind a wall with normal along `axis`.
pub fn reflecting_ghost(interior: &Cons, axis: usize) -> Cons {
    let mut ghost = *interior;
    ghost.m[axis] = -ghost.m[axis];
    ghost
}

/// Ghost cells `(left, right)` of one grid line.
pub fn apply_reflecting_bc(line: &[Cons], axis: usize) -> (Cons, Cons) {
    (
        reflecting_ghost(&line[0], axis),
        reflecting_ghost(&line[line.len() - 1], axis),
    )
}

#[derive(Debug, Clone, Copy)]
struct CellFlux {
    flux: [f64; 5],
    /// `|u.n| + c`
    speed: f64,
    state: [f64; 5],
}

fn cell_flux(cell: &Cons, axis: usize, law: &PressureLaw) -> Result<CellFlux> {
    let mut n = [0.0; 3];
    n[axis] = 1.0;
    let (flux, _, c) = physical_flux_with_thermo(cell, n, law)?;
    Ok(CellFlux {
        flux,
        speed: (cell.m[axis] / cell.rho()).abs() + c,
        state: cell.as_array(),
    })
}

fn rusanov(left: &CellFlux, right: &CellFlux) -> [f64; 5] {
    let s = left.speed.max(right.speed);
    let mut f = [0.0; 5];
    for k in 0..5 {
        f[k] = 0.5 * (left.flux[k] + right.flux[k]) - 0.5 * s * (right.state[k] - left.state[k]);
    }
    f
}

/// Advances one grid line along `axis` by `dt`.
fn update_line(line: &[Cons], axis: usize, dt: f64, h: f64, bc: Boundary, law: &PressureLaw) -> Result<Vec<Cons>> {
    let n = line.len();
    let (ghost_l, ghost_r) = match bc {
        Boundary::Periodic => (line[n - 1], line[0]),
        Boundary::Reflecting => apply_reflecting_bc(line, axis),
    };
    let mut fluxes = Vec::with_capacity(n + 2);
    fluxes.push(cell_flux(&ghost_l, axis, law)?);
    for c in line {
        fluxes.push(cell_flux(c, axis, law)?);
    }
    fluxes.push(cell_flux(&ghost_r, axis, law)?);

    // interface j sits between extended cells j and j+1
    let interfaces: Vec<[f64; 5]> = fluxes.windows(2).map(|w| rusanov(&w[0], &w[1])).collect();
    let lambda = dt / h;
    Ok(line
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let mut u = c.as_array();
            for k in 0..5 {
                u[k] -= lambda * (interfaces[i + 1][k] - interfaces[i][k]);
            }
            Cons::from_array(u)
        })
        .collect())
}

fn line_indices(grid: &Grid, axis: usize, line: usize) -> Vec<usize> {
    if axis == 0 {
        (0..grid.nx).map(|ix| grid.index(ix, line)).collect()
    } else {
        (0..grid.ny).map(|iy| grid.index(line, iy)).collect()
    }
}

fn sweep(field: &mut ConservedField, axis: usize, dt: f64, config: &SolverConfig) -> Result<()> {
    let grid = field.grid;
    let lines = if axis == 0 { grid.ny } else { grid.nx };
    let h = grid.spacing(axis);
    let updated: Vec<(Vec<usize>, Vec<Cons>)> = (0..lines)
        .into_par_iter()
        .map(|line| {
            let idx = line_indices(&grid, axis, line);
            let cells: Vec<Cons> = idx.iter().map(|&i| field.cells[i]).collect();
            let new = update_line(&cells, axis, dt, h, config.bc, &config.law)?;
            Ok((idx, new))
        })
        .collect::<Result<_>>()?;
    for (idx, new) in updated {
        for (i, c) in idx.into_iter().zip(new) {
            field.cells[i] = c;
        }
    }
    Ok(())
}

/// Largest `(|u_a| + c) / h_a` over cells and axes.
pub fn max_wave_rate(field: &ConservedField, law: &PressureLaw) -> Result<f64> {
    let grid = field.grid;
    let rates: Vec<f64> = field
        .cells
        .par_iter()
        .map(|cell| {
            let thermo = law.thermo(cell.mixture())?;
            let c = thermo.c2.sqrt();
            let u = cell.velocity();
            let mut rate = 0.0_f64;
            for axis in 0..grid.dim {
                rate = rate.max((u[axis].abs() + c) / grid.spacing(axis));
            }
            Ok(rate)
        })
        .collect::<Result<_>>()?;
    Ok(rates.into_iter().fold(0.0, f64::max))
}

/// CFL-limited time step.
pub fn stable_dt(field: &ConservedField, config: &SolverConfig) -> Result<f64> {
    let rate = max_wave_rate(field, &config.law)?;
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::InvalidParameter(format!("degenerate wave speed rate {rate}")));
    }
    Ok(config.cfl / rate)
}

/// Advances by exactly `dt` (no CFL check).
pub fn step_with_dt(field: &ConservedField, dt: f64, config: &SolverConfig) -> Result<ConservedField> {
    let mut next = field.clone();
    for axis in 0..field.grid.dim {
        sweep(&mut next, axis, dt, config)?;
    }
    Ok(next)
}

/// One CFL-limited Rusanov step.
pub fn rusanov_step(field: &ConservedField, config: &SolverConfig) -> Result<(ConservedField, f64)> {
    let dt = stable_dt(field, config)?;
    let next = step_with_dt(field, dt, config)?;
    Ok((next, dt))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub field: ConservedField,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub mass_r: f64,
    pub mass_q: f64,
    /// Total energy; NaN for pressure laws without an energy functional here.
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub snapshots: Vec<Snapshot>,
    pub trace: Vec<TraceRow>,
}

fn trace_row(step: usize, t: f64, dt: f64, field: &ConservedField, law: &PressureLaw) -> Result<TraceRow> {
    let energy = match law.phase_params() {
        Some(params) => total_energy(field, params)?.total,
        None => f64::NAN,
    };
    Ok(TraceRow {
        step,
        t,
        dt,
        mass_r: field.mass_r(),
        mass_q: field.mass_q(),
        energy,
    })
}

/// Integrates to `t_end`, landing exactly on the uniform snapshot times.
pub fn run(initial: ConservedField, config: &SolverConfig) -> Result<RunOutput> {
    config.validate()?;
    initial.grid.validate()?;
    initial.check_admissible(0.0)?;

    let mut field = initial;
    let mut t = 0.0;
    let mut step = 0;
    let mut snapshots = vec![Snapshot {
        t,
        field: field.clone(),
    }];
    let mut trace = vec![trace_row(0, t, 0.0, &field, &config.law)?];

    for k in 1..=config.snapshots {
        let t_out = config.t_end * k as f64 / config.snapshots as f64;
        while t < t_out {
            let mut dt = stable_dt(&field, config)?;
            let last = t + dt >= t_out;
            if last {
                dt = t_out - t;
            }
            field = step_with_dt(&field, dt, config)?;
            t = if last { t_out } else { t + dt };
            step += 1;
            field.check_admissible(t)?;
            trace.push(trace_row(step, t, dt, &field, &config.law)?);
        }
        snapshots.push(Snapshot {
            t,
            field: field.clone(),
        });
    }
    Ok(RunOutput { snapshots, trace })
}

/// Scalar test function `phi(t, x)`.
pub type ScalarTestFn<'a> = &'a dyn Fn(f64, [f64; 2]) -> f64;
/// Vector test function `phi(t, x)`, with `phi.n = 0` on walls.
pub type VectorTestFn<'a> = &'a dyn Fn(f64, [f64; 2]) -> [f64; 3];

/// Weak-form residuals of the two continuity equations and the momentum
/// equation, one entry per test function.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WeakResidual {
    pub continuity_r: Vec<f64>,
    pub continuity_q: Vec<f64>,
    pub momentum: Vec<f64>,
}

impl WeakResidual {
    pub fn max_abs(&self) -> f64 {
        self.continuity_r
            .iter()
            .chain(&self.continuity_q)
            .chain(&self.momentum)
            .fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }
}

/// Face-difference gradient of `phi` at the center of `cell`.
fn discrete_gradient(grid: &Grid, cell: usize, f: &dyn Fn([f64; 2]) -> f64) -> [f64; 2] {
    let x = grid.center(cell);
    let mut g = [0.0; 2];
    for axis in 0..grid.dim {
        let h = grid.spacing(axis);
        let mut hi = x;
        let mut lo = x;
        hi[axis] += 0.5 * h;
        lo[axis] -= 0.5 * h;
        g[axis] = (f(hi) - f(lo)) / h;
    }
    g
}

/// Space-time quadrature of the weak formulation on uniformly spaced snapshots.
///
/// Time derivatives of the test functions are snapshot differences paired with
/// snapshot-averaged fields; spatial derivatives are face differences. Both
/// telescope, so constant states give residuals at rounding level.
pub fn weak_residual(
    snapshots: &[Snapshot],
    law: &PressureLaw,
    scalar_tests: &[ScalarTestFn],
    vector_tests: &[VectorTestFn],
) -> Result<WeakResidual> {
    if snapshots.len() < 2 {
        return Err(Error::Empty("weak residual needs at least two snapshots".into()));
    }
    let grid = snapshots[0].field.grid;
    for s in snapshots {
        if !s.field.grid.same_shape(&grid) || s.field.cells.len() != grid.len() {
            return Err(Error::Shape("snapshot grids differ".into()));
        }
    }
    let dt = snapshots[1].t - snapshots[0].t;
    for w in snapshots.windows(2) {
        let gap = w[1].t - w[0].t;
        if !(gap > 0.0) || (gap - dt).abs() > 1e-9 * dt.max(1e-300) {
            return Err(Error::Shape("snapshots are not uniformly spaced in time".into()));
        }
    }
    let vol = grid.cell_volume();

    // pressure per snapshot and cell
    let pressures: Vec<Vec<f64>> = snapshots
        .iter()
        .map(|s| {
            s.field
                .cells
                .iter()
                .map(|c| law.pressure(c.mixture()))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;

    let mut out = WeakResidual::default();
    for phi in scalar_tests {
        let mut acc_r = Vec::new();
        let mut acc_q = Vec::new();
        for (k, snap) in snapshots.iter().enumerate() {
            // trapezoid weight of the flux term at this snapshot
            let w = if k == 0 || k + 1 == snapshots.len() {
                0.5 * dt
            } else {
                dt
            };
            for (cell, c) in snap.field.cells.iter().enumerate() {
                let t = snap.t;
                let grad = discrete_gradient(&grid, cell, &|x| phi(t, x));
                let u = c.velocity();
                let u_grad = u[0] * grad[0] + u[1] * grad[1];
                acc_r.push(w * c.r * u_grad * vol);
                acc_q.push(w * c.q * u_grad * vol);
                if k == 0 {
                    let x = grid.center(cell);
                    acc_r.push(c.r * phi(t, x) * vol);
                    acc_q.push(c.q * phi(t, x) * vol);
                }
            }
        }
        for w in snapshots.windows(2) {
            for (cell, (a, b)) in w[0].field.cells.iter().zip(&w[1].field.cells).enumerate() {
                let x = grid.center(cell);
                let dphi = phi(w[1].t, x) - phi(w[0].t, x);
                acc_r.push(0.5 * (a.r + b.r) * dphi * vol);
                acc_q.push(0.5 * (a.q + b.q) * dphi * vol);
            }
        }
        out.continuity_r.push(pairwise_sum(&acc_r));
        out.continuity_q.push(pairwise_sum(&acc_q));
    }

    for phi in vector_tests {
        let mut acc = Vec::new();
        for (k, snap) in snapshots.iter().enumerate() {
            let w = if k == 0 || k + 1 == snapshots.len() {
                0.5 * dt
            } else {
                dt
            };
            let t = snap.t;
            for (cell, c) in snap.field.cells.iter().enumerate() {
                let u = c.velocity();
                let mut flux_term = 0.0;
                let mut div = 0.0;
                for a in 0..3 {
                    let grad = discrete_gradient(&grid, cell, &|x| phi(t, x)[a]);
                    flux_term += c.m[a] * (u[0] * grad[0] + u[1] * grad[1]);
                    if a < grid.dim {
                        div += grad[a];
                    }
                }
                acc.push(w * (flux_term + pressures[k][cell] * div) * vol);
                if k == 0 {
                    let v = phi(t, grid.center(cell));
                    acc.push((c.m[0] * v[0] + c.m[1] * v[1] + c.m[2] * v[2]) * vol);
                }
            }
        }
        for w in snapshots.windows(2) {
            for (cell, (a, b)) in w[0].field.cells.iter().zip(&w[1].field.cells).enumerate() {
                let x = grid.center(cell);
                let (p1, p0) = (phi(w[1].t, x), phi(w[0].t, x));
                for d in 0..3 {
                    acc.push(0.5 * (a.m[d] + b.m[d]) * (p1[d] - p0[d]) * vol);
                }
            }
        }
        out.momentum.push(pairwise_sum(&acc));
    }
    Ok(out)
}

/// Smooth time cutoff `cos^2(pi t / 2T)`: one at `t = 0`, vanishing with its
/// derivative at `t = T`.
pub fn time_cutoff(t: f64, t_end: f64) -> f64 {
    let c = (std::f64::consts::FRAC_PI_2 * t / t_end).cos();
    if t >= t_end {
        0.0
    } else {
        c * c
    }
}

/// Trigonometric test functions compatible with both periodic and wall
/// boundaries: scalar `cos`-modes and vector `sin`-modes whose normal
/// component vanishes on the box faces.
pub struct StandardTests {
    grid: Grid,
    t_end: f64,
    modes: Vec<(f64, f64)>,
}

impl StandardTests {
    pub fn new(grid: Grid, t_end: f64) -> Self {
        let modes = if grid.dim == 1 {
            vec![(1.0, 0.0), (2.0, 0.0), (3.0, 0.0)]
        } else {
            vec![(1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (2.0, 1.0)]
        };
        Self { grid, t_end, modes }
    }

    fn xi(&self, x: [f64; 2]) -> [f64; 2] {
        [
            (x[0] - self.grid.x_min) / (self.grid.x_max - self.grid.x_min),
            (x[1] - self.grid.y_min) / (self.grid.y_max - self.grid.y_min),
        ]
    }

    pub fn scalar(&self, mode: usize, t: f64, x: [f64; 2]) -> f64 {
        let (kx, ky) = self.modes[mode];
        let xi = self.xi(x);
        let tau = std::f64::consts::TAU;
        time_cutoff(t, self.t_end) * (tau * kx * xi[0]).cos() * (tau * ky * xi[1]).cos()
            + time_cutoff(t, self.t_end) * 0.5
    }

    pub fn vector(&self, mode: usize, t: f64, x: [f64; 2]) -> [f64; 3] {
        let (kx, ky) = self.modes[mode];
        let xi = self.xi(x);
        let tau = std::f64::consts::TAU;
        let eta = time_cutoff(t, self.t_end);
        let kx = kx.max(1.0);
        let ky = ky.max(1.0);
        let vx = eta
            * (tau * kx * xi[0]).sin()
            * if self.grid.dim == 2 {
                (tau * ky * xi[1]).cos()
            } else {
                1.0
            };
        let vy = if self.grid.dim == 2 {
            eta * (tau * ky * xi[1]).sin() * (tau * kx * xi[0]).cos()
        } else {
            0.0
        };
        let vz = eta * (tau * kx * xi[0]).cos();
        [vx, vy, vz]
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Runs [`weak_residual`] with every mode.
    pub fn residual(&self, snapshots: &[Snapshot], law: &PressureLaw) -> Result<WeakResidual> {
        let scalars: Vec<_> = (0..self.len()).map(|m| move |t, x| self.scalar(m, t, x)).collect();
        let vectors: Vec<_> = (0..self.len()).map(|m| move |t, x| self.vector(m, t, x)).collect();
        let s: Vec<ScalarTestFn> = scalars.iter().map(|f| f as ScalarTestFn).collect();
        let v: Vec<VectorTestFn> = vectors.iter().map(|f| f as VectorTestFn).collect();
        weak_residual(snapshots, law, &s, &v)
    }
}
