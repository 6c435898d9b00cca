//! Helmholtz splitting on box domains.
//!
//! Two discrete operators share one conjugate-gradient core:
//!
//! * [`solve_neumann`] uses the compact cell-centered Laplacian (3-point in
//!   1D, 5-point in 2D) with mirrored ghost cells, i.e. `dPsi/dn = 0`.
//! * [`decompose`] uses `D G`, where `G` averages face gradients to cell
//!   centers and `D` differences face-averaged values. `D = -G^T`, so
//!   `v = w - G Psi` is discretely divergence free and orthogonal to `G Psi`
//!   up to the solver tolerance.
//!
//! Boundary faces carry zero normal flux in both operators.

use crate::error::{Error, Result};
use crate::grid::{pairwise_sum, Grid};

/// Default relative residual of the conjugate-gradient solves.
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub grid: Grid,
    /// Components beyond the grid dimension are carried along untouched.
    pub values: Vec<[f64; 3]>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape(format!(
                "{} values for {} cells",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.center(i))).collect();
        Self { grid, values }
    }

    /// `∫ f dx`.
    pub fn integral(&self) -> f64 {
        pairwise_sum(&self.values) * self.grid.cell_volume()
    }

    pub fn mean(&self) -> f64 {
        pairwise_sum(&self.values) / self.values.len() as f64
    }

    /// Discrete L2 norm `(∫ f^2 dx)^(1/2)`.
    pub fn norm(&self) -> f64 {
        norm(&self.values, self.grid.cell_volume())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
    }
}

impl VectorField {
    pub fn new(grid: Grid, values: Vec<[f64; 3]>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape(format!(
                "{} values for {} cells",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![[0.0; 3]; grid.len()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> [f64; 3]) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.center(i))).collect();
        Self { grid, values }
    }

    pub fn norm(&self) -> f64 {
        let sq: Vec<f64> = self.values.iter().map(|v| dot(v, v)).collect();
        (pairwise_sum(&sq) * self.grid.cell_volume()).sqrt()
    }

    /// `∫ a . b dx`.
    pub fn inner(&self, other: &VectorField) -> f64 {
        let prods: Vec<f64> = self.values.iter().zip(&other.values).map(|(a, b)| dot(a, b)).collect();
        pairwise_sum(&prods) * self.grid.cell_volume()
    }

    pub fn sub(&self, other: &VectorField) -> VectorField {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| [a[0] - b[0], a[1] - b[1], a[2] - b[2]])
            .collect();
        VectorField {
            grid: self.grid,
            values,
        }
    }
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(values: &[f64], vol: f64) -> f64 {
    let sq: Vec<f64> = values.iter().map(|v| v * v).collect();
    (pairwise_sum(&sq) * vol).sqrt()
}

fn remove_mean(values: &mut [f64]) {
    let mean = pairwise_sum(values) / values.len() as f64;
    for v in values.iter_mut() {
        *v -= mean;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    /// Relative residual target.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: 20_000,
        }
    }
}

/// `-Delta Psi = f` with homogeneous Neumann data and zero mean.
#[derive(Debug, Clone, PartialEq)]
pub struct NeumannProblem {
    pub rhs: ScalarField,
    pub options: CgOptions,
}

impl NeumannProblem {
    pub fn new(rhs: ScalarField) -> Self {
        Self {
            rhs,
            options: CgOptions::default(),
        }
    }

    /// `|∫ f| <= tol ||f|| |Omega|^(1/2)`.
    pub fn check_compatibility(&self) -> Result<()> {
        let grid = self.rhs.grid;
        let measure = grid.cell_volume() * grid.len() as f64;
        let bound = self.options.tol * self.rhs.norm() * measure.sqrt();
        let sum = self.rhs.integral();
        if sum.abs() > bound && sum.abs() > f64::MIN_POSITIVE {
            return Err(Error::Incompatible { sum: sum.abs(), bound });
        }
        Ok(())
    }
}

/// Compact Neumann Laplacian `Delta_h Psi`.
pub fn laplacian(grid: &Grid, psi: &[f64], out: &mut [f64]) {
    let (nx, ny) = (grid.nx, grid.ny);
    let idx2 = 1.0 / (grid.dx() * grid.dx());
    let idy2 = 1.0 / (grid.dy() * grid.dy());
    for iy in 0..ny {
        for ix in 0..nx {
            let i = grid.index(ix, iy);
            let c = psi[i];
            let l = if ix > 0 { psi[i - 1] } else { c };
            let r = if ix + 1 < nx { psi[i + 1] } else { c };
            let mut lap = (l - 2.0 * c + r) * idx2;
            if grid.dim == 2 {
                let d = if iy > 0 { psi[i - nx] } else { c };
                let u = if iy + 1 < ny { psi[i + nx] } else { c };
                lap += (d - 2.0 * c + u) * idy2;
            }
            out[i] = lap;
        }
    }
}

/// Cell-centered gradient: average of the two face gradients, zero on walls.
pub fn gradient(psi: &ScalarField) -> VectorField {
    let grid = psi.grid;
    let mut out = vec![[0.0; 3]; grid.len()];
    for axis in 0..grid.dim {
        let h = grid.spacing(axis);
        for_each_line(&grid, axis, |idx| {
            let n = idx.len();
            for k in 0..n {
                let lo = if k > 0 {
                    (psi.values[idx[k]] - psi.values[idx[k - 1]]) / h
                } else {
                    0.0
                };
                let hi = if k + 1 < n {
                    (psi.values[idx[k + 1]] - psi.values[idx[k]]) / h
                } else {
                    0.0
                };
                out[idx[k]][axis] = 0.5 * (lo + hi);
            }
        });
    }
    VectorField { grid, values: out }
}

/// Divergence from face-averaged normal components, zero flux through walls.
pub fn divergence(w: &VectorField) -> ScalarField {
    let grid = w.grid;
    let mut out = vec![0.0; grid.len()];
    for axis in 0..grid.dim {
        let h = grid.spacing(axis);
        for_each_line(&grid, axis, |idx| {
            let n = idx.len();
            for k in 0..n {
                let face = |a: usize, b: usize| 0.5 * (w.values[a][axis] + w.values[b][axis]);
                let lo = if k > 0 { face(idx[k - 1], idx[k]) } else { 0.0 };
                let hi = if k + 1 < n { face(idx[k], idx[k + 1]) } else { 0.0 };
                out[idx[k]] += (hi - lo) / h;
            }
        });
    }
    ScalarField { grid, values: out }
}

fn for_each_line(grid: &Grid, axis: usize, mut f: impl FnMut(&[usize])) {
    if axis == 0 {
        for iy in 0..grid.ny {
            let idx: Vec<usize> = (0..grid.nx).map(|ix| grid.index(ix, iy)).collect();
            f(&idx);
        }
    } else {
        for ix in 0..grid.nx {
            let idx: Vec<usize> = (0..grid.ny).map(|iy| grid.index(ix, iy)).collect();
            f(&idx);
        }
    }
}

/// Result of a conjugate-gradient solve.
#[derive(Debug, Clone, PartialEq)]
pub struct CgReport {
    pub iterations: usize,
    /// Final `||b - A x|| / ||b||`.
    pub relative_residual: f64,
}

/// Conjugate gradients for a symmetric positive semi-definite `A` whose
/// null space contains the constants; iterates are kept at zero mean.
fn conjugate_gradient(
    apply: impl Fn(&[f64], &mut [f64]),
    b: &[f64],
    options: &CgOptions,
) -> Result<(Vec<f64>, CgReport)> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    remove_mean(&mut r);
    let b_norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    if b_norm == 0.0 {
        return Ok((
            x,
            CgReport {
                iterations: 0,
                relative_residual: 0.0,
            },
        ));
    }
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr = r.iter().map(|v| v * v).sum::<f64>();
    for it in 1..=options.max_iter {
        apply(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if !(pap > 0.0) {
            return Err(Error::CgNoConvergence {
                iterations: it,
                residual: rr.sqrt() / b_norm,
            });
        }
        let alpha = rr / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        remove_mean(&mut r);
        let rr_new = r.iter().map(|v| v * v).sum::<f64>();
        if rr_new.sqrt() <= options.tol * b_norm {
            remove_mean(&mut x);
            // true residual, not the recursively updated one
            apply(&x, &mut ap);
            let mut true_res: Vec<f64> = b.iter().zip(&ap).map(|(bi, ai)| bi - ai).collect();
            remove_mean(&mut true_res);
            let rel = true_res.iter().map(|v| v * v).sum::<f64>().sqrt() / b_norm;
            return Ok((
                x,
                CgReport {
                    iterations: it,
                    relative_residual: rel,
                },
            ));
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for k in 0..n {
            p[k] = r[k] + beta * p[k];
        }
    }
    Err(Error::CgNoConvergence {
        iterations: options.max_iter,
        residual: rr.sqrt() / b_norm,
    })
}

/// Solves `-Delta_h Psi = f`, `dPsi/dn = 0`, `∫ Psi = 0`.
pub fn solve_neumann(problem: &NeumannProblem) -> Result<(ScalarField, CgReport)> {
    problem.check_compatibility()?;
    let grid = problem.rhs.grid;
    let apply = |x: &[f64], out: &mut [f64]| {
        laplacian(&grid, x, out);
        for v in out.iter_mut() {
            *v = -*v;
        }
    };
    let (psi, report) = conjugate_gradient(apply, &problem.rhs.values, &problem.options)?;
    Ok((ScalarField { grid, values: psi }, report))
}

/// Extrapolated boundary normal component relative to `max |w|` above which
/// [`decompose`] rejects its input.
pub const BOUNDARY_NORMAL_TOL: f64 = 0.1;

/// Largest normal component at the walls, linearly extrapolated from the two
/// nearest cells, as `(cell, value)`.
pub fn boundary_normal(w: &VectorField) -> (usize, f64) {
    let grid = w.grid;
    let mut worst = (0, 0.0_f64);
    for axis in 0..grid.dim {
        for_each_line(&grid, axis, |idx| {
            let n = idx.len();
            if n < 2 {
                return;
            }
            let ends = [(idx[0], idx[1]), (idx[n - 1], idx[n - 2])];
            for (a, b) in ends {
                let value = 1.5 * w.values[a][axis] - 0.5 * w.values[b][axis];
                if value.abs() > worst.1.abs() {
                    worst = (a, value);
                }
            }
        });
    }
    worst
}

/// Solenoidal part, potential and diagnostics of one decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub v: VectorField,
    pub psi: ScalarField,
    pub grad_psi: VectorField,
    pub report: CgReport,
}

impl Decomposition {
    /// `||div_h v||`.
    pub fn divergence_defect(&self) -> f64 {
        divergence(&self.v).norm()
    }

    /// `|∫ v . grad Psi| / (||v|| ||grad Psi||)`, zero when either part vanishes.
    pub fn orthogonality_defect(&self) -> f64 {
        let denom = self.v.norm() * self.grad_psi.norm();
        if denom == 0.0 {
            0.0
        } else {
            self.v.inner(&self.grad_psi).abs() / denom
        }
    }
}

/// `w = v + grad Psi` with `div v = 0`; `w . n = 0` on the walls is required.
pub fn decompose(w: &VectorField, options: &CgOptions) -> Result<Decomposition> {
    let grid = w.grid;
    let scale = w.values.iter().fold(0.0_f64, |a, v| a.max(v[0].abs()).max(v[1].abs()));
    let (cell, value) = boundary_normal(w);
    if value.abs() > BOUNDARY_NORMAL_TOL * scale {
        return Err(Error::BoundaryNormal { cell, value });
    }
    let rhs = divergence(w);
    let apply = |x: &[f64], out: &mut [f64]| {
        let field = ScalarField {
            grid,
            values: x.to_vec(),
        };
        let dg = divergence(&gradient(&field));
        for (o, v) in out.iter_mut().zip(dg.values) {
            *o = -v;
        }
    };
    // -D G Psi = -D w
    let b: Vec<f64> = rhs.values.iter().map(|v| -v).collect();
    let (psi, report) = conjugate_gradient(apply, &b, options)?;
    let psi = ScalarField { grid, values: psi };
    let grad_psi = gradient(&psi);
    let v = w.sub(&grad_psi);
    Ok(Decomposition {
        v,
        psi,
        grad_psi,
        report,
    })
}

/// Time derivative of a uniformly sampled series: centered inside,
/// second-order one-sided at the ends.
pub fn time_derivative(times: &[f64], fields: &[ScalarField]) -> Result<Vec<ScalarField>> {
    if fields.len() < 3 || times.len() != fields.len() {
        return Err(Error::Empty("time derivative needs at least three snapshots".into()));
    }
    let grid = fields[0].grid;
    if fields.iter().any(|f| !f.grid.same_shape(&grid)) {
        return Err(Error::Shape("snapshot grids differ".into()));
    }
    let dt = times[1] - times[0];
    for w in times.windows(2) {
        if !(dt > 0.0) || ((w[1] - w[0]) - dt).abs() > 1e-9 * dt {
            return Err(Error::Shape("snapshots are not uniformly spaced in time".into()));
        }
    }
    let n = fields.len();
    // Written with differences so that a constant history gives exact zeros.
    let combine = |terms: &[(usize, usize, f64)]| {
        let values = (0..grid.len())
            .map(|i| {
                terms
                    .iter()
                    .map(|&(hi, lo, c)| c * (fields[hi].values[i] - fields[lo].values[i]))
                    .sum::<f64>()
                    / dt
            })
            .collect();
        ScalarField { grid, values }
    };
    Ok((0..n)
        .map(|k| {
            if k == 0 {
                combine(&[(1, 0, 2.0), (2, 0, -0.5)])
            } else if k == n - 1 {
                combine(&[(n - 1, n - 2, 2.0), (n - 1, n - 3, -0.5)])
            } else {
                combine(&[(k + 1, k - 1, 0.5)])
            }
        })
        .collect())
}

/// `Psi_1(t)` solving `-Delta Psi_1 = dR/dt` at every snapshot time.
///
/// `∫ dR/dt` vanishes only up to the rounding of the differenced densities,
/// so compatibility is judged against `||R|| / dt` and the residual mean is
/// projected out before the solve.
pub fn potential_from_run(times: &[f64], densities: &[ScalarField], options: &CgOptions) -> Result<Vec<ScalarField>> {
    let rates = time_derivative(times, densities)?;
    let dt = times[1] - times[0];
    let grid = densities[0].grid;
    let measure_sqrt = (grid.cell_volume() * grid.len() as f64).sqrt();
    let scale = densities.iter().map(ScalarField::norm).fold(0.0, f64::max) / dt;
    rates
        .into_iter()
        .map(|mut rate| {
            let sum = rate.integral();
            let bound = options.tol * (rate.norm() + scale) * measure_sqrt;
            if sum.abs() > bound {
                return Err(Error::Incompatible { sum: sum.abs(), bound });
            }
            remove_mean(&mut rate.values);
            let problem = NeumannProblem {
                rhs: rate,
                options: *options,
            };
            Ok(solve_neumann(&problem)?.0)
        })
        .collect()
}
