//! Algebraic pressure closure.
//!
//! Both phases share one pressure, `p = Z^gamma_plus`, where `Z` (the density
//! of fluid "+") is the unique solution of
//!
//! ```text
//! Q = (1 - R/Z) Z^gamma,   gamma = gamma_plus / gamma_minus,   R <= Z.
//! ```
//!
//! The root is computed in terms of the excess `d = Z - R >= 0`, i.e. from
//! `G(d) = d (R + d)^(gamma - 1) - Q = 0`. `G` has the same derivative as
//! `F(Z) = (1 - R/Z) Z^gamma - Q`, but stays well conditioned when `Z` is
//! within a few ulps of `R` (large `R`, tiny `Q`), where `Z` itself cannot
//! resolve the root.
//!
//! The module also carries the two alternative pressure laws (liquid-gas and
//! fluid-particle) and a [`PressureLaw`] selector used by the solver.

use crate::error::{ensure_finite, Error, Result};

/// Relative residual accepted for the closure relation.
pub const RESIDUAL_TOL: f64 = 1e-12;
/// Iteration cap of the safeguarded Newton iteration.
pub const MAX_ITERATIONS: usize = 200;

/// Adiabatic exponents of the two phases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseParams {
    gamma_plus: f64,
    gamma_minus: f64,
    gamma: f64,
}

impl PhaseParams {
    pub fn new(gamma_plus: f64, gamma_minus: f64) -> Result<Self> {
        ensure_finite("gamma_plus", gamma_plus)?;
        ensure_finite("gamma_minus", gamma_minus)?;
        if gamma_plus <= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "gamma_plus must exceed 1 (got {gamma_plus})"
            )));
        }
        if gamma_minus <= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "gamma_minus must exceed 1 (got {gamma_minus})"
            )));
        }
        Ok(Self {
            gamma_plus,
            gamma_minus,
            gamma: gamma_plus / gamma_minus,
        })
    }

    pub fn gamma_plus(&self) -> f64 {
        self.gamma_plus
    }

    pub fn gamma_minus(&self) -> f64 {
        self.gamma_minus
    }

    /// `gamma_plus / gamma_minus`.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

/// Partial densities `R = alpha_+ rho_+` and `Q = alpha_- rho_-`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureState {
    pub r: f64,
    pub q: f64,
}

impl MixtureState {
    pub fn new(r: f64, q: f64) -> Result<Self> {
        let state = Self { r, q };
        state.validate()?;
        Ok(state)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("R", self.r)?;
        ensure_finite("Q", self.q)?;
        if self.r < 0.0 || self.q < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "partial densities must be non-negative (R = {}, Q = {})",
                self.r, self.q
            )));
        }
        Ok(())
    }

    pub fn total_density(&self) -> f64 {
        self.r + self.q
    }
}

/// Everything downstream of the implicit closure relation at one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosureResult {
    /// Density of fluid "+".
    pub z: f64,
    /// `Z - R`, resolved to full relative precision.
    pub excess: f64,
    /// Pressure `Z^gamma_plus`.
    pub p: f64,
    pub dz_dr: f64,
    pub dz_dq: f64,
    /// `dp/drho` at fixed `s = R/Q`; the squared sound speed.
    pub dp_drho_at_fixed_s: f64,
    /// Volume fraction `R/Z` of fluid "+".
    pub alpha: f64,
}

impl ClosureResult {
    /// `1 - alpha`, computed from the excess without cancellation.
    pub fn one_minus_alpha(&self) -> f64 {
        self.excess / self.z
    }

    pub fn sound_speed(&self) -> f64 {
        self.dp_drho_at_fixed_s.sqrt()
    }
}

/// Pointwise upper bound `max{2R, (2Q)^(1/gamma)}` for `Z`.
pub fn z_upper_bound(r: f64, q: f64, params: &PhaseParams) -> f64 {
    (2.0 * r).max((2.0 * q).powf(1.0 / params.gamma))
}

/// `F(Z) = (1 - R/Z) Z^gamma - Q`, the closure residual in its original form.
pub fn closure_residual(r: f64, q: f64, z: f64, params: &PhaseParams) -> f64 {
    (1.0 - r / z) * z.powf(params.gamma) - q
}

/// `F'(Z) = gamma Z^(gamma-1) - (gamma-1) R Z^(gamma-2)`, positive for `Z >= R`.
fn closure_slope(r: f64, z: f64, gamma: f64) -> f64 {
    z.powf(gamma - 2.0) * (gamma * z - (gamma - 1.0) * r)
}

/// Residual of the closure relation at a solved state, `(Z - R) Z^(gamma-1) - Q`
/// with `Z - R` taken from the stored excess rather than from the rounded `Z`.
pub fn solved_residual(r: f64, q: f64, res: &ClosureResult, params: &PhaseParams) -> f64 {
    excess_residual(r, q, res.excess, params.gamma)
}

/// `G(d) = d (R + d)^(gamma-1) - Q`.
fn excess_residual(r: f64, q: f64, d: f64, gamma: f64) -> f64 {
    d * (r + d).powf(gamma - 1.0) - q
}

/// Solves the closure relation for `Z(R, Q)` and populates all derivatives.
pub fn solve_z(state: MixtureState, params: &PhaseParams) -> Result<ClosureResult> {
    state.validate()?;
    let MixtureState { r, q } = state;
    if r == 0.0 && q == 0.0 {
        return Err(Error::TotalVacuum);
    }
    let gamma = params.gamma;

    let excess = if q == 0.0 {
        0.0
    } else if r == 0.0 {
        q.powf(1.0 / gamma)
    } else {
        solve_excess(r, q, params)?
    };
    let z = r + excess;

    let slope = closure_slope(r, z, gamma);
    let dz_dr = z.powf(gamma - 1.0) / slope;
    let dz_dq = 1.0 / slope;
    let gp = params.gamma_plus;
    let p = z.powf(gp);
    let dp_dz = gp * z.powf(gp - 1.0);
    // Chain rule through R = rho s/(1+s), Q = rho/(1+s): dR/drho = R/rho, dQ/drho = Q/rho.
    let rho = r + q;
    let dp_drho = dp_dz * (r * dz_dr + q * dz_dq) / rho;
    if !(dp_drho > 0.0 && dp_drho.is_finite()) {
        return Err(Error::NonPositiveSoundSpeed { r, q, value: dp_drho });
    }

    Ok(ClosureResult {
        z,
        excess,
        p,
        dz_dr,
        dz_dq,
        dp_drho_at_fixed_s: dp_drho,
        alpha: r / z,
    })
}

/// Safeguarded Newton on `G(d)` within `[0, Z_hi - R]`.
///
/// `G` is convex for `gamma >= 1` and concave for `gamma < 1`; the start point
/// is chosen on the side from which Newton converges monotonically, so the
/// bisection fallback only triggers on rounding-level overshoot.
fn solve_excess(r: f64, q: f64, params: &PhaseParams) -> Result<f64> {
    let gamma = params.gamma;
    let mut lo = 0.0_f64;
    let mut hi = z_upper_bound(r, q, params) - r;

    let g_hi = excess_residual(r, q, hi, gamma);
    if g_hi < -RESIDUAL_TOL * q.max(1.0) {
        return Err(Error::NotBracketed { r, q, f_hi: g_hi });
    }

    // Asymptotic roots of the small- and large-excess regimes.
    let small = q / r.powf(gamma - 1.0);
    let large = q.powf(1.0 / gamma);
    let mut d = if gamma >= 1.0 {
        small.min(large).min(hi)
    } else {
        small.max(large).min(hi)
    };
    if !(d > 0.0) {
        d = 0.5 * hi;
    }

    for _ in 0..MAX_ITERATIONS {
        let g = excess_residual(r, q, d, gamma);
        if g == 0.0 {
            return Ok(d);
        }
        if g > 0.0 {
            hi = hi.min(d);
        } else {
            lo = lo.max(d);
        }
        let slope = closure_slope(r, r + d, gamma);
        let mut next = d - g / slope;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - d).abs() <= 2.0 * f64::EPSILON * d || hi - lo <= 2.0 * f64::EPSILON * hi {
            return finish(r, q, next, gamma);
        }
        d = next;
    }
    let residual = excess_residual(r, q, d, gamma);
    Err(Error::NoConvergence {
        r,
        q,
        iterations: MAX_ITERATIONS,
        residual,
    })
}

fn finish(r: f64, q: f64, d: f64, gamma: f64) -> Result<f64> {
    let residual = excess_residual(r, q, d, gamma);
    if residual.abs() > RESIDUAL_TOL * q.max(1.0) {
        return Err(Error::NoConvergence {
            r,
            q,
            iterations: MAX_ITERATIONS,
            residual,
        });
    }
    Ok(d)
}

/// Maximum relative deviation between the implicit-differentiation
/// derivatives and centered differences taken through full closure solves.
///
/// Each variable is perturbed by `h` times the total density. `dZ/dR` and
/// `dZ/dQ` are differenced on the excess `Z - R`, which carries the same
/// information as `Z` with less rounding.
pub fn closure_derivatives_fd_check(state: MixtureState, params: &PhaseParams, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("step h must be positive (got {h})")));
    }
    if !(state.r > 0.0 && state.q > 0.0) {
        return Err(Error::InvalidParameter(
            "finite-difference check needs R > 0 and Q > 0".into(),
        ));
    }
    let base = solve_z(state, params)?;
    let MixtureState { r, q } = state;
    let rho = r + q;
    let step = h * rho;
    if step >= 0.5 * r.min(q) {
        return Err(Error::InvalidParameter(format!(
            "step {step:e} is not small relative to R = {r}, Q = {q}"
        )));
    }

    let excess_at = |r: f64, q: f64| -> Result<f64> { Ok(solve_z(MixtureState::new(r, q)?, params)?.excess) };
    let fd_dz_dr = 1.0 + (excess_at(r + step, q)? - excess_at(r - step, q)?) / (2.0 * step);
    let fd_dz_dq = (excess_at(r, q + step)? - excess_at(r, q - step)?) / (2.0 * step);

    let s = r / q;
    let pressure_at = |rho: f64| -> Result<f64> {
        let state = MixtureState::new(rho * s / (1.0 + s), rho / (1.0 + s))?;
        Ok(solve_z(state, params)?.p)
    };
    let fd_dp = (pressure_at(rho + step)? - pressure_at(rho - step)?) / (2.0 * step);

    let rel = |exact: f64, approx: f64| (exact - approx).abs() / exact.abs();
    Ok(rel(base.dz_dr, fd_dz_dr)
        .max(rel(base.dz_dq, fd_dz_dq))
        .max(rel(base.dp_drho_at_fixed_s, fd_dp)))
}

/// Constants of the liquid-gas pressure law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiquidGasParams {
    pub c_const: f64,
    pub k0: f64,
    pub a0: f64,
}

impl LiquidGasParams {
    pub fn new(c_const: f64, k0: f64, a0: f64) -> Result<Self> {
        for (name, v) in [("c_const", c_const), ("k0", k0), ("a0", a0)] {
            ensure_finite(name, v)?;
            if v <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be strictly positive (got {v})"
                )));
            }
        }
        Ok(Self { c_const, k0, a0 })
    }
}

/// Exponents of the fluid-particle pressure law `R^gamma + Q^beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluidParticleParams {
    pub gamma: f64,
    pub beta: f64,
}

impl FluidParticleParams {
    pub fn new(gamma: f64, beta: f64) -> Result<Self> {
        ensure_finite("gamma", gamma)?;
        ensure_finite("beta", beta)?;
        if gamma < 1.0 {
            return Err(Error::InvalidParameter(format!(
                "gamma must be at least 1 (got {gamma})"
            )));
        }
        if beta < 1.0 {
            return Err(Error::InvalidParameter(format!("beta must be at least 1 (got {beta})")));
        }
        Ok(Self { gamma, beta })
    }
}

/// `C (-b + sqrt(b^2 + c))` with `b = k0 - R - a0 Q`, `c = 4 k0 a0 Q`.
pub fn pressure_liquid_gas(state: MixtureState, lg: &LiquidGasParams) -> Result<f64> {
    state.validate()?;
    let (b, c) = liquid_gas_bc(state, lg);
    let root = (b * b + c).sqrt();
    // Rationalized when b > 0 so small c does not cancel.
    let p = if b > 0.0 { c / (b + root) } else { root - b };
    Ok(lg.c_const * p)
}

fn liquid_gas_bc(state: MixtureState, lg: &LiquidGasParams) -> (f64, f64) {
    let b = lg.k0 - state.r - lg.a0 * state.q;
    let c = 4.0 * lg.k0 * lg.a0 * state.q;
    (b, c)
}

/// Partial derivatives `(dp/dR, dp/dQ)` of the liquid-gas law.
fn liquid_gas_gradient(state: MixtureState, lg: &LiquidGasParams) -> (f64, f64) {
    let (b, c) = liquid_gas_bc(state, lg);
    let root = (b * b + c).sqrt();
    if root == 0.0 {
        // b = c = 0: one-sided limit from the admissible side.
        return (lg.c_const, lg.c_const * 2.0 * lg.a0);
    }
    let dp_dr = lg.c_const * (1.0 - b / root);
    let dp_dq = lg.c_const * (lg.a0 + (2.0 * lg.k0 * lg.a0 - lg.a0 * b) / root);
    (dp_dr, dp_dq)
}

/// `R^gamma + Q^beta`.
pub fn pressure_fluid_particle(state: MixtureState, fp: &FluidParticleParams) -> Result<f64> {
    state.validate()?;
    Ok(state.r.powf(fp.gamma) + state.q.powf(fp.beta))
}

/// The pressure law driving the conservative system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PressureLaw {
    TwoFluid(PhaseParams),
    LiquidGas(LiquidGasParams),
    FluidParticle(FluidParticleParams),
}

/// Pressure and squared sound speed at one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thermo {
    pub p: f64,
    pub c2: f64,
}

impl PressureLaw {
    pub fn pressure(&self, state: MixtureState) -> Result<f64> {
        match self {
            PressureLaw::TwoFluid(params) => Ok(solve_z(state, params)?.p),
            PressureLaw::LiquidGas(lg) => pressure_liquid_gas(state, lg),
            PressureLaw::FluidParticle(fp) => pressure_fluid_particle(state, fp),
        }
    }

    /// Pressure together with `c^2 = (R dp/dR + Q dp/dQ) / (R + Q)`.
    pub fn thermo(&self, state: MixtureState) -> Result<Thermo> {
        let rho = state.total_density();
        match self {
            PressureLaw::TwoFluid(params) => {
                let res = solve_z(state, params)?;
                Ok(Thermo {
                    p: res.p,
                    c2: res.dp_drho_at_fixed_s,
                })
            }
            PressureLaw::LiquidGas(lg) => {
                let p = pressure_liquid_gas(state, lg)?;
                let (dp_dr, dp_dq) = liquid_gas_gradient(state, lg);
                Ok(Thermo {
                    p,
                    c2: (state.r * dp_dr + state.q * dp_dq) / rho,
                })
            }
            PressureLaw::FluidParticle(fp) => {
                let p = pressure_fluid_particle(state, fp)?;
                let dp_dr = fp.gamma * state.r.powf(fp.gamma - 1.0);
                let dp_dq = fp.beta * state.q.powf(fp.beta - 1.0);
                Ok(Thermo {
                    p,
                    c2: (state.r * dp_dr + state.q * dp_dq) / rho,
                })
            }
        }
    }

    pub fn phase_params(&self) -> Option<&PhaseParams> {
        match self {
            PressureLaw::TwoFluid(params) => Some(params),
            _ => None,
        }
    }
}
