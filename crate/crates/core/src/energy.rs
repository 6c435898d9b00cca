//! Total energy of the two-fluid mixture,
//!
//! ```text
//! E = ∫ 1/2 (R+Q)|u|^2 + (R/alpha)^g+ alpha / (g+ - 1) + (Q/(1-alpha))^g- (1-alpha) / (g- - 1)
//! ```
//!
//! with `alpha = R/Z`, evaluated by the midpoint rule on the cell averages.

use crate::closure::{solve_z, PhaseParams};
use crate::error::{Error, Result};
use crate::grid::pairwise_sum;
use crate::solver::{Cons, ConservedField, Snapshot, TraceRow};

/// Relative per-step increase of the total energy reported as a defect.
pub const INCREASE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyBreakdown {
    pub kinetic: f64,
    pub internal_plus: f64,
    pub internal_minus: f64,
    pub total: f64,
    /// `internal_minus` through `Q/(1-alpha) = Z^gamma`, i.e. `Z^g+ (1 - R/Z) / (g- - 1)`.
    pub internal_minus_closure: f64,
}

/// Energy densities of one cell: `(kinetic, internal_plus, internal_minus, internal_minus_closure)`.
pub fn cell_energy(cell: &Cons, params: &PhaseParams) -> Result<[f64; 4]> {
    if !(cell.r > 0.0 && cell.q > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "energy needs R > 0 and Q > 0 (R = {}, Q = {})",
            cell.r, cell.q
        )));
    }
    let closure = solve_z(cell.mixture(), params)?;
    let alpha = closure.alpha;
    let one_minus_alpha = closure.one_minus_alpha();
    if alpha >= 1.0 || !(one_minus_alpha > 0.0) {
        return Err(Error::VolumeFraction { alpha, q: cell.q });
    }
    let (gp, gm) = (params.gamma_plus(), params.gamma_minus());
    let m2 = cell.m.iter().map(|m| m * m).sum::<f64>();
    let kinetic = 0.5 * m2 / cell.rho();
    let internal_plus = (cell.r / alpha).powf(gp) * alpha / (gp - 1.0);
    let internal_minus = (cell.q / one_minus_alpha).powf(gm) * one_minus_alpha / (gm - 1.0);
    let closure_form = closure.z.powf(gp) * one_minus_alpha / (gm - 1.0);
    Ok([kinetic, internal_plus, internal_minus, closure_form])
}

pub fn total_energy(field: &ConservedField, params: &PhaseParams) -> Result<EnergyBreakdown> {
    let n = field.cells.len();
    let mut parts = [
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    ];
    for cell in &field.cells {
        let e = cell_energy(cell, params)?;
        for (acc, v) in parts.iter_mut().zip(e) {
            acc.push(v);
        }
    }
    let vol = field.grid.cell_volume();
    let [kinetic, internal_plus, internal_minus, closure_form] = parts.map(|p| pairwise_sum(&p) * vol);
    Ok(EnergyBreakdown {
        kinetic,
        internal_plus,
        internal_minus,
        total: kinetic + internal_plus + internal_minus,
        internal_minus_closure: closure_form,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRow {
    pub t: f64,
    pub energy: EnergyBreakdown,
}

/// Energy breakdown per snapshot.
pub fn energy_trace(snapshots: &[Snapshot], params: &PhaseParams) -> Result<Vec<EnergyRow>> {
    snapshots
        .iter()
        .map(|s| {
            Ok(EnergyRow {
                t: s.t,
                energy: total_energy(&s.field, params)?,
            })
        })
        .collect()
}

/// Indices `k` where `total[k]` exceeds `total[k-1]` by more than
/// [`INCREASE_TOL`] relative.
pub fn energy_increases(totals: &[f64]) -> Vec<usize> {
    totals
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1] - w[0] > INCREASE_TOL * w[0].abs())
        .map(|(k, _)| k + 1)
        .collect()
}

/// [`energy_increases`] over the per-step solver trace.
pub fn flag_trace_increases(trace: &[TraceRow]) -> Vec<usize> {
    let totals: Vec<f64> = trace.iter().map(|r| r.energy).collect();
    energy_increases(&totals).into_iter().map(|k| trace[k].step).collect()
}
