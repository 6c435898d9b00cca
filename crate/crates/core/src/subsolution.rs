//! Pointwise algebra of subsolutions.
//!
//! A sample `(v, grad Psi, dPsi/dt, R, Q, U, Lambda)` is a strict subsolution
//! where
//!
//! ```text
//! 3/2 lambda_max[(w (x) w)/rho - U] < e,   e = Lambda - 3/2 (Z^g+ + dPsi/dt)
//! ```
//!
//! with `w = v + grad Psi` and `rho = R + Q`. For traceless `U` the left side is
//! never below `|w|^2 / (2 rho)`, with equality exactly at the traceless part
//! of `w (x) w / rho`.

use std::f64::consts::PI;

use crate::closure::{solve_z, MixtureState, PhaseParams};
use crate::error::{ensure_finite, Error, Result};
use crate::grid::{pairwise_sum, Grid};
use crate::linalg::{asymmetry, symmetric_eigenvalues};

pub type Sym3 = [[f64; 3]; 3];

/// Default relative margin turning "sufficiently large" into a strict inequality.
pub const DEFAULT_MARGIN: f64 = 1e-6;

/// Below this distance of `det(B)/2` from `-1` the two largest eigenvalues are
/// nearly equal and the trigonometric formula loses digits.
const NEAR_DOUBLE_ROOT: f64 = 1e-4;

/// Symmetric trace-free 3x3 matrix; `zz = -(xx + yy)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TracelessSym3 {
    pub xx: f64,
    pub yy: f64,
    pub xy: f64,
    pub xz: f64,
    pub yz: f64,
}

impl TracelessSym3 {
    pub fn zz(&self) -> f64 {
        -(self.xx + self.yy)
    }

    pub fn to_matrix(&self) -> Sym3 {
        [
            [self.xx, self.xy, self.xz],
            [self.xy, self.yy, self.yz],
            [self.xz, self.yz, self.zz()],
        ]
    }

    /// Trace-free part of the symmetric part of `m`.
    pub fn projection(m: &Sym3) -> Self {
        let mean = (m[0][0] + m[1][1] + m[2][2]) / 3.0;
        Self {
            xx: m[0][0] - mean,
            yy: m[1][1] - mean,
            xy: 0.5 * (m[0][1] + m[1][0]),
            xz: 0.5 * (m[0][2] + m[2][0]),
            yz: 0.5 * (m[1][2] + m[2][1]),
        }
    }

    /// The equality case `w (x) w / rho - |w|^2/(3 rho) I`.
    pub fn from_rank_one(w: [f64; 3], rho: f64) -> Self {
        Self::projection(&outer_over(w, rho))
    }
}

/// `w (x) w / rho`.
pub fn outer_over(w: [f64; 3], rho: f64) -> Sym3 {
    let mut m = [[0.0; 3]; 3];
    for r in 0..3 {
        for c in 0..3 {
            m[r][c] = w[r] * w[c] / rho;
        }
    }
    m
}

fn sub(a: &Sym3, b: &Sym3) -> Sym3 {
    let mut m = *a;
    for r in 0..3 {
        for c in 0..3 {
            m[r][c] -= b[r][c];
        }
    }
    m
}

/// Eigenvalues of a symmetric 3x3 matrix, ascending, by the trigonometric
/// solution of the characteristic cubic.
pub fn eigenvalues_sym3(m: &Sym3) -> [f64; 3] {
    let off = m[0][1] * m[0][1] + m[0][2] * m[0][2] + m[1][2] * m[1][2];
    if off == 0.0 {
        let mut d = [m[0][0], m[1][1], m[2][2]];
        d.sort_by(f64::total_cmp);
        return d;
    }
    let q = (m[0][0] + m[1][1] + m[2][2]) / 3.0;
    let (d0, d1, d2) = (m[0][0] - q, m[1][1] - q, m[2][2] - q);
    let p = ((d0 * d0 + d1 * d1 + d2 * d2 + 2.0 * off) / 6.0).sqrt();
    // det((M - qI)/p) / 2
    let det = d0 * (d1 * d2 - m[1][2] * m[1][2]) - m[0][1] * (m[0][1] * d2 - m[1][2] * m[0][2])
        + m[0][2] * (m[0][1] * m[1][2] - d1 * m[0][2]);
    let r = (det / (2.0 * p * p * p)).clamp(-1.0, 1.0);
    if r + 1.0 < NEAR_DOUBLE_ROOT {
        return symmetric_eigenvalues(*m);
    }
    let phi = r.acos() / 3.0;
    let hi = q + 2.0 * p * phi.cos();
    let lo = q + 2.0 * p * (phi + 2.0 * PI / 3.0).cos();
    let mid = 3.0 * q - hi - lo;
    [lo, mid.clamp(lo, hi), hi]
}

/// Largest eigenvalue of a symmetric 3x3 matrix.
pub fn lambda_max(m: &Sym3) -> Result<f64> {
    let scale = m.iter().flatten().fold(0.0_f64, |a, v| a.max(v.abs()));
    if m.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix entry".into()));
    }
    let skew = asymmetry(m);
    if skew > 1e-14 * scale {
        return Err(Error::NotSymmetric(skew));
    }
    Ok(eigenvalues_sym3(m)[2])
}

/// `E(v, U) = lambda_max(v (x) v - U)`, convex in `(v, U)`.
pub fn convex_energy(v: [f64; 3], u: &TracelessSym3) -> f64 {
    eigenvalues_sym3(&sub(&outer_over(v, 1.0), &u.to_matrix()))[2]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubsolutionSample {
    pub v: [f64; 3],
    pub grad_psi: [f64; 3],
    pub dt_psi: f64,
    pub r: f64,
    pub q: f64,
    pub u: TracelessSym3,
    pub lambda: f64,
}

impl SubsolutionSample {
    pub fn validate(&self) -> Result<()> {
        for (name, x) in [
            ("dt_psi", self.dt_psi),
            ("R", self.r),
            ("Q", self.q),
            ("Lambda", self.lambda),
        ] {
            ensure_finite(name, x)?;
        }
        for x in self.v.iter().chain(&self.grad_psi) {
            ensure_finite("velocity component", *x)?;
        }
        if !(self.r >= 0.0 && self.q >= 0.0 && self.r + self.q > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sample needs R, Q >= 0 and R + Q > 0 (R = {}, Q = {})",
                self.r, self.q
            )));
        }
        Ok(())
    }

    /// `v + grad Psi`.
    pub fn w(&self) -> [f64; 3] {
        [
            self.v[0] + self.grad_psi[0],
            self.v[1] + self.grad_psi[1],
            self.v[2] + self.grad_psi[2],
        ]
    }

    pub fn rho(&self) -> f64 {
        self.r + self.q
    }

    /// `|w|^2 / (2 rho)`.
    pub fn kinetic(&self) -> f64 {
        let w = self.w();
        0.5 * (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]) / self.rho()
    }

    /// `e = Lambda - 3/2 (Z^g+ + dPsi/dt)`.
    pub fn e(&self, params: &PhaseParams) -> Result<f64> {
        let z = solve_z(MixtureState::new(self.r, self.q)?, params)?.z;
        Ok(self.lambda - 1.5 * (z.powf(params.gamma_plus()) + self.dt_psi))
    }

    /// `3/2 lambda_max[(w (x) w)/rho - U]`.
    pub fn flux_term(&self) -> f64 {
        1.5 * eigenvalues_sym3(&sub(&outer_over(self.w(), self.rho()), &self.u.to_matrix()))[2]
    }
}

/// `e - 3/2 lambda_max[(w (x) w)/rho - U]`; positive for a strict subsolution.
pub fn subsolution_gap(sample: &SubsolutionSample, params: &PhaseParams) -> Result<f64> {
    sample.validate()?;
    Ok(sample.e(params)? - sample.flux_term())
}

/// Cell fields entering the selection of `Lambda`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsolutionFields {
    pub grid: Grid,
    pub v: Vec<[f64; 3]>,
    pub grad_psi: Vec<[f64; 3]>,
    pub dt_psi: Vec<f64>,
    pub r: Vec<f64>,
    pub q: Vec<f64>,
}

impl SubsolutionFields {
    pub fn validate(&self) -> Result<()> {
        let n = self.grid.len();
        if n == 0 {
            return Err(Error::Empty("subsolution fields on an empty grid".into()));
        }
        let lens = [
            self.v.len(),
            self.grad_psi.len(),
            self.dt_psi.len(),
            self.r.len(),
            self.q.len(),
        ];
        if lens.iter().any(|&l| l != n) {
            return Err(Error::Shape(format!("field lengths {lens:?} for {n} cells")));
        }
        Ok(())
    }

    /// Sample at `cell` with `U = 0`.
    pub fn sample(&self, cell: usize, lambda: f64) -> SubsolutionSample {
        SubsolutionSample {
            v: self.v[cell],
            grad_psi: self.grad_psi[cell],
            dt_psi: self.dt_psi[cell],
            r: self.r[cell],
            q: self.q[cell],
            u: TracelessSym3::default(),
            lambda,
        }
    }
}

/// Per cell, the smallest `Lambda` with zero gap at `U = 0`.
pub fn lambda_needed(fields: &SubsolutionFields, params: &PhaseParams) -> Result<Vec<f64>> {
    fields.validate()?;
    (0..fields.grid.len())
        .map(|cell| {
            let s = fields.sample(cell, 0.0);
            s.validate()?;
            Ok(s.flux_term() - s.e(params)?)
        })
        .collect()
}

/// `(1 + margin) max_x lambda_needed(x)`.
///
/// When that maximum is not positive the margin is applied additively,
/// `max + margin max(|max|, 1)`, so the gap still comes out strictly positive.
pub fn min_lambda(fields: &SubsolutionFields, params: &PhaseParams, margin: f64) -> Result<f64> {
    ensure_finite("margin", margin)?;
    if margin < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "margin must be non-negative (got {margin})"
        )));
    }
    let needed = lambda_needed(fields, params)?;
    let max = needed.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(if max > 0.0 {
        (1.0 + margin) * max
    } else {
        max + margin * max.abs().max(1.0)
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapRow {
    pub center: [f64; 2],
    pub gap: f64,
    pub lambda_needed: f64,
    pub e: f64,
}

/// Gap, needed `Lambda` and `e` per cell at `U = 0`.
pub fn gap_report(fields: &SubsolutionFields, params: &PhaseParams, lambda: f64) -> Result<Vec<GapRow>> {
    let needed = lambda_needed(fields, params)?;
    (0..fields.grid.len())
        .map(|cell| {
            let s = fields.sample(cell, lambda);
            let e = s.e(params)?;
            Ok(GapRow {
                center: fields.grid.center(cell),
                gap: e - s.flux_term(),
                lambda_needed: needed[cell],
                e,
            })
        })
        .collect()
}

/// One time level of the gap functional.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSlice {
    pub t: f64,
    pub fields: SubsolutionFields,
}

/// `I = ∫∫ |v + grad Psi|^2 / (2 rho) - e`, trapezoidal in time and midpoint in space.
pub fn gap_functional_i(slices: &[TimeSlice], params: &PhaseParams, lambda: f64) -> Result<f64> {
    if slices.len() < 2 {
        return Err(Error::Empty("the gap functional needs at least two time levels".into()));
    }
    let mut spatial = Vec::with_capacity(slices.len());
    for slice in slices {
        slice.fields.validate()?;
        let integrand = (0..slice.fields.grid.len())
            .map(|cell| {
                let s = slice.fields.sample(cell, lambda);
                s.validate()?;
                Ok(s.kinetic() - s.e(params)?)
            })
            .collect::<Result<Vec<f64>>>()?;
        spatial.push(pairwise_sum(&integrand) * slice.fields.grid.cell_volume());
    }
    let terms: Vec<f64> = slices
        .windows(2)
        .zip(spatial.windows(2))
        .map(|(t, s)| 0.5 * (t[1].t - t[0].t) * (s[0] + s[1]))
        .collect();
    Ok(pairwise_sum(&terms))
}

/// `3/2 Z^g+(R, Q)`, the least admissible `chi` for a constant state.
pub fn chi_threshold(state: MixtureState, params: &PhaseParams) -> Result<f64> {
    Ok(1.5 * solve_z(state, params)?.z.powf(params.gamma_plus()))
}

/// `|m0| = (2 rho (chi - 3/2 Z^g+))^(1/2)`.
pub fn chi_and_m0(state: MixtureState, params: &PhaseParams, chi: f64) -> Result<f64> {
    ensure_finite("chi", chi)?;
    let threshold = chi_threshold(state, params)?;
    if chi < threshold {
        return Err(Error::ChiTooSmall { chi, threshold });
    }
    Ok((2.0 * state.total_density() * (chi - threshold)).sqrt())
}

/// One `chi` serving every patch: `(1 + margin) max_i 3/2 Z^g+(R_i, Q_i)`.
pub fn uniform_chi(states: &[MixtureState], params: &PhaseParams, margin: f64) -> Result<f64> {
    if states.is_empty() {
        return Err(Error::Empty("no patches".into()));
    }
    let thresholds = states
        .iter()
        .map(|s| chi_threshold(*s, params))
        .collect::<Result<Vec<f64>>>()?;
    let chi = (1.0 + margin) * thresholds.iter().copied().fold(0.0, f64::max);
    for (state, threshold) in states.iter().zip(&thresholds) {
        if chi < *threshold {
            return Err(Error::ChiTooSmall {
                chi,
                threshold: *threshold,
            });
        }
        chi_and_m0(*state, params, chi)?;
    }
    Ok(chi)
}
