//! Symmetric hyperbolic form in the variables `U = (p, u1, u2, u3, s)`.
//!
//! With `rho = R + Q` and `s = R/Q` the system reads
//! `A0 dU/dt + sum_i Ai dU/dx_i = 0` with
//!
//! ```text
//! A0 = diag(1/(rho c^2), rho, rho, rho, 1)
//! Ai = u_i A0 + e_0 e_i^T + e_i e_0^T
//! ```
//!
//! where `c^2 = dp/drho` at fixed `s` comes from the closure.

use crate::closure::{solve_z, MixtureState, PhaseParams};
use crate::error::{ensure_finite, Error, Result};
use crate::linalg::{asymmetry, cholesky, symmetric_eigenvalues};

pub type Mat5 = [[f64; 5]; 5];

/// `(rho, s) = (R + Q, R/Q)`.
pub fn to_rho_s(state: MixtureState) -> Result<(f64, f64)> {
    state.validate()?;
    if state.q == 0.0 {
        return Err(Error::InvalidParameter("s = R/Q is undefined for Q = 0".into()));
    }
    Ok((state.r + state.q, state.r / state.q))
}

/// Inverse of [`to_rho_s`]: `R = rho s/(1+s)`, `Q = rho/(1+s)`.
pub fn from_rho_s(rho: f64, s: f64) -> Result<MixtureState> {
    MixtureState::new(rho * s / (1.0 + s), rho / (1.0 + s))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrimitiveState {
    pub p: f64,
    pub u: [f64; 3],
    pub s: f64,
    pub rho: f64,
}

impl PrimitiveState {
    pub fn validate(&self) -> Result<()> {
        ensure_finite("p", self.p)?;
        ensure_finite("s", self.s)?;
        ensure_finite("rho", self.rho)?;
        for (i, ui) in self.u.iter().enumerate() {
            ensure_finite(&format!("u{}", i + 1), *ui)?;
        }
        if !(self.rho > 0.0 && self.s > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "symmetrization needs rho > 0 and s > 0 (rho = {}, s = {})",
                self.rho, self.s
            )));
        }
        Ok(())
    }
}

/// The four matrices of the symmetric system at one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetricSystem {
    pub a0: Mat5,
    pub a: [Mat5; 3],
}

pub fn assemble(state: &PrimitiveState, dp_drho: f64) -> Result<SymmetricSystem> {
    state.validate()?;
    ensure_finite("dp_drho", dp_drho)?;
    if !(dp_drho > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "dp_drho must be positive (got {dp_drho})"
        )));
    }
    let rho = state.rho;
    let diag = [1.0 / (rho * dp_drho), rho, rho, rho, 1.0];
    let mut a0 = [[0.0; 5]; 5];
    for (k, d) in diag.iter().enumerate() {
        a0[k][k] = *d;
    }
    let mut a = [[[0.0; 5]; 5]; 3];
    for (i, ai) in a.iter_mut().enumerate() {
        for (k, d) in diag.iter().enumerate() {
            ai[k][k] = state.u[i] * d;
        }
        ai[0][i + 1] = 1.0;
        ai[i + 1][0] = 1.0;
    }
    Ok(SymmetricSystem { a0, a })
}

/// Primitive state and symmetric system of the two-fluid model at `(R, Q, u)`.
pub fn system_at(
    state: MixtureState,
    u: [f64; 3],
    params: &PhaseParams,
) -> Result<(PrimitiveState, SymmetricSystem, f64)> {
    let (rho, s) = to_rho_s(state)?;
    let closure = solve_z(state, params)?;
    let prim = PrimitiveState {
        p: closure.p,
        u,
        s,
        rho,
    };
    let sys = assemble(&prim, closure.dp_drho_at_fixed_s)?;
    Ok((prim, sys, closure.dp_drho_at_fixed_s))
}

impl SymmetricSystem {
    /// `sum_i n_i A_i`.
    pub fn directional(&self, n: [f64; 3]) -> Mat5 {
        let mut m = [[0.0; 5]; 5];
        for (ni, ai) in n.iter().zip(self.a.iter()) {
            for r in 0..5 {
                for c in 0..5 {
                    m[r][c] += ni * ai[r][c];
                }
            }
        }
        m
    }

    /// Largest asymmetry over all five matrices.
    pub fn max_asymmetry(&self) -> f64 {
        self.a.iter().map(asymmetry).fold(asymmetry(&self.a0), f64::max)
    }

    /// Eigenvalues of `A0`, ascending.
    pub fn a0_eigenvalues(&self) -> [f64; 5] {
        symmetric_eigenvalues(self.a0)
    }

    /// Symmetric with positive-definite `A0`.
    pub fn is_symmetric_hyperbolic(&self) -> bool {
        self.max_asymmetry() == 0.0 && cholesky(&self.a0).is_some()
    }
}

/// Roots `lambda` of `det(sum_i n_i A_i - lambda A0) = 0`, ascending.
///
/// Reduced to a standard symmetric problem `L^-1 A_n L^-T` with the Cholesky
/// factor `L` of `A0`.
pub fn char_speeds(sys: &SymmetricSystem, n: [f64; 3]) -> Result<[f64; 5]> {
    let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    if !((norm - 1.0).abs() <= 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "direction must be a unit vector (|n| = {norm})"
        )));
    }
    let l = cholesky(&sys.a0).ok_or_else(|| Error::Singular("A0 is not positive definite".into()))?;
    let an = sys.directional(n);
    // M = L^-1 A_n L^-T = (L^-1 X^T)^T with X = L^-1 A_n.
    let x = forward_solve(&l, &an);
    let mut xt = [[0.0; 5]; 5];
    for r in 0..5 {
        for c in 0..5 {
            xt[r][c] = x[c][r];
        }
    }
    let mut m = forward_solve(&l, &xt);
    // Exact symmetry up to rounding of the two triangular solves.
    for r in 0..5 {
        for c in (r + 1)..5 {
            let avg = 0.5 * (m[r][c] + m[c][r]);
            m[r][c] = avg;
            m[c][r] = avg;
        }
    }
    Ok(symmetric_eigenvalues(m))
}

/// `L^-1 B` for lower-triangular `L`.
fn forward_solve(l: &Mat5, b: &Mat5) -> Mat5 {
    let mut x = [[0.0; 5]; 5];
    for c in 0..5 {
        for r in 0..5 {
            let mut sum = b[r][c];
            for k in 0..r {
                sum -= l[r][k] * x[k][c];
            }
            x[r][c] = sum / l[r][r];
        }
    }
    x
}

/// The expected speeds `{u.n - c, u.n, u.n, u.n, u.n + c}`.
pub fn expected_speeds(u: [f64; 3], n: [f64; 3], dp_drho: f64) -> [f64; 5] {
    let un = u[0] * n[0] + u[1] * n[1] + u[2] * n[2];
    let c = dp_drho.sqrt();
    [un - c, un, un, un, un + c]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prim(u: [f64; 3], rho: f64) -> PrimitiveState {
        PrimitiveState { p: 1.0, u, s: 1.0, rho }
    }

    #[test]
    fn rho_s_examples() {
        assert_eq!(to_rho_s(MixtureState::new(1.0, 1.0).unwrap()).unwrap(), (2.0, 1.0));
        assert_eq!(to_rho_s(MixtureState::new(2.0, 1.0).unwrap()).unwrap(), (3.0, 2.0));
        assert!(to_rho_s(MixtureState::new(1.0, 0.0).unwrap()).is_err());
    }

    #[test]
    fn at_rest_unit_state() {
        let sys = assemble(&prim([0.0; 3], 1.0), 1.0).unwrap();
        for r in 0..5 {
            for c in 0..5 {
                assert_eq!(sys.a0[r][c], if r == c { 1.0 } else { 0.0 });
                let expected = if (r, c) == (0, 1) || (r, c) == (1, 0) { 1.0 } else { 0.0 };
                assert_eq!(sys.a[0][r][c], expected);
            }
        }
        let speeds = char_speeds(&sys, [1.0, 0.0, 0.0]).unwrap();
        let expected = [-1.0, 0.0, 0.0, 0.0, 1.0];
        for (a, b) in speeds.iter().zip(expected) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn shifted_speeds() {
        let sys = assemble(&prim([2.0, 0.0, 0.0], 1.0), 4.0).unwrap();
        let speeds = char_speeds(&sys, [1.0, 0.0, 0.0]).unwrap();
        for (a, b) in speeds.iter().zip([0.0, 2.0, 2.0, 2.0, 4.0]) {
            assert!((a - b).abs() < 1e-12, "{speeds:?}");
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(assemble(&prim([0.0; 3], 0.0), 1.0).is_err());
        assert!(assemble(&prim([0.0; 3], 1.0), 0.0).is_err());
        let sys = assemble(&prim([0.0; 3], 1.0), 1.0).unwrap();
        assert!(char_speeds(&sys, [1.0, 1.0, 0.0]).is_err());
        let mut singular = sys;
        singular.a0[4][4] = 0.0;
        assert!(matches!(
            char_speeds(&singular, [1.0, 0.0, 0.0]),
            Err(Error::Singular(_))
        ));
    }

    #[test]
    fn gamma_one_sound_speed() {
        let params = PhaseParams::new(1.4, 1.4).unwrap();
        let (prim, sys, c2) = system_at(MixtureState::new(0.7, 1.3).unwrap(), [0.0; 3], &params).unwrap();
        let rho = prim.rho;
        assert!((c2 - 1.4 * rho.powf(0.4)).abs() < 1e-10 * c2);
        assert!(sys.is_symmetric_hyperbolic());
    }
}
