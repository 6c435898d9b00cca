//! CSV output with 17 significant digits and '.' decimals, and the readers
//! for the tool's own files.

use std::path::Path;

use twofluid::closure::{solve_z, PressureLaw};
use twofluid::energy::EnergyRow;
use twofluid::grid::Grid;
use twofluid::solver::{Cons, ConservedField, Snapshot, TraceRow};
use twofluid::subsolution::GapRow;

use crate::error::CliError;

/// Round-trips through `str::parse::<f64>` bit for bit.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let io = |e: csv::Error| CliError::csv(path, e);
    let mut writer = csv::Writer::from_path(path).map_err(io)?;
    writer.write_record(header).map_err(io)?;
    for row in rows {
        writer.write_record(&row).map_err(io)?;
    }
    writer.flush().map_err(|e| CliError::io(path, e))
}

/// A numeric CSV file: header plus rows of floats.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

pub fn read_table(path: &Path) -> Result<Table, CliError> {
    let io = |e: csv::Error| CliError::csv(path, e);
    let mut reader = csv::Reader::from_path(path).map_err(io)?;
    let header: Vec<String> = reader.headers().map_err(io)?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record.map_err(io)?;
        let row = record
            .iter()
            .map(|field| {
                field.trim().parse::<f64>().map_err(|_| {
                    CliError::Input(format!("{}: row {}: '{field}' is not a number", path.display(), k + 2))
                })
            })
            .collect::<Result<Vec<f64>, CliError>>()?;
        rows.push(row);
    }
    Ok(Table { header, rows })
}

/// `t,x[,y],R,Q,mx[,my],p,Z`; `Z` is NaN for laws without the closure.
pub fn write_snapshots(path: &Path, snapshots: &[Snapshot], law: &PressureLaw) -> Result<(), CliError> {
    let Some(first) = snapshots.first() else {
        return Err(CliError::Input("no snapshots to write".into()));
    };
    let two_d = first.field.grid.dim == 2;
    let header: &[&str] = if two_d {
        &["t", "x", "y", "R", "Q", "mx", "my", "p", "Z"]
    } else {
        &["t", "x", "R", "Q", "mx", "p", "Z"]
    };
    let mut rows = Vec::new();
    for snap in snapshots {
        let grid = snap.field.grid;
        for (cell, c) in snap.field.cells.iter().enumerate() {
            let state = c.mixture();
            let p = law.pressure(state)?;
            let z = match law.phase_params() {
                Some(params) => solve_z(state, params)?.z,
                None => f64::NAN,
            };
            let [x, y] = grid.center(cell);
            let mut row = vec![num(snap.t), num(x)];
            if two_d {
                row.push(num(y));
            }
            row.extend([num(c.r), num(c.q), num(c.m[0])]);
            if two_d {
                row.push(num(c.m[1]));
            }
            row.extend([num(p), num(z)]);
            rows.push(row);
        }
    }
    write_csv(path, header, rows)
}

fn axis_extent(centers: &[f64], what: &str) -> Result<(f64, f64), CliError> {
    let n = centers.len();
    if n < 2 {
        return Err(CliError::Input(format!("need at least two cells along {what}")));
    }
    let h = (centers[n - 1] - centers[0]) / (n - 1) as f64;
    if !(h > 0.0) {
        return Err(CliError::Input(format!("cell centers along {what} are not increasing")));
    }
    Ok((centers[0] - 0.5 * h, centers[n - 1] + 0.5 * h))
}

/// Reads a file written by [`write_snapshots`]. The third momentum component
/// is not part of the format and comes back as zero.
pub fn read_snapshots(path: &Path) -> Result<Vec<Snapshot>, CliError> {
    let table = read_table(path)?;
    let col = |name: &str| {
        table
            .column(name)
            .ok_or_else(|| CliError::Input(format!("{}: missing column {name}", path.display())))
    };
    let (t, x, r, q, mx) = (col("t")?, col("x")?, col("R")?, col("Q")?, col("mx")?);
    let two_d = table.column("y").is_some();
    let (y, my) = if two_d {
        (Some(col("y")?), Some(col("my")?))
    } else {
        (None, None)
    };

    let mut groups: Vec<(f64, Vec<&Vec<f64>>)> = Vec::new();
    for row in &table.rows {
        match groups.last_mut() {
            Some((time, rows)) if *time == row[t] => rows.push(row),
            _ => groups.push((row[t], vec![row])),
        }
    }
    let Some((_, first)) = groups.first() else {
        return Err(CliError::Input(format!("{}: no rows", path.display())));
    };
    let grid = if let Some(y) = y {
        let ny = first.iter().filter(|row| row[x] == first[0][x]).count();
        let nx = first.len() / ny.max(1);
        if nx * ny != first.len() {
            return Err(CliError::Input(format!("{}: rows do not form a grid", path.display())));
        }
        let xs: Vec<f64> = first[..nx].iter().map(|row| row[x]).collect();
        let ys: Vec<f64> = first.iter().step_by(nx).map(|row| row[y]).collect();
        Grid::new_2d(nx, ny, axis_extent(&xs, "x")?, axis_extent(&ys, "y")?)?
    } else {
        let xs: Vec<f64> = first.iter().map(|row| row[x]).collect();
        let (x0, x1) = axis_extent(&xs, "x")?;
        Grid::new_1d(xs.len(), x0, x1)?
    };

    groups
        .into_iter()
        .map(|(time, rows)| {
            if rows.len() != grid.len() {
                return Err(CliError::Input(format!(
                    "{}: snapshot at t = {time} has {} rows, expected {}",
                    path.display(),
                    rows.len(),
                    grid.len()
                )));
            }
            let cells = rows
                .iter()
                .map(|row| Cons {
                    r: row[r],
                    q: row[q],
                    m: [row[mx], my.map_or(0.0, |c| row[c]), 0.0],
                })
                .collect();
            Ok(Snapshot {
                t: time,
                field: ConservedField::new(grid, cells)?,
            })
        })
        .collect()
}

/// `step,t,dt,mass_R,mass_Q,energy`.
pub fn write_trace(path: &Path, trace: &[TraceRow]) -> Result<(), CliError> {
    let rows = trace.iter().map(|r| {
        vec![
            r.step.to_string(),
            num(r.t),
            num(r.dt),
            num(r.mass_r),
            num(r.mass_q),
            num(r.energy),
        ]
    });
    write_csv(path, &["step", "t", "dt", "mass_R", "mass_Q", "energy"], rows)
}

/// `t,kinetic,internal_plus,internal_minus,total`.
pub fn write_energy(path: &Path, rows: &[EnergyRow]) -> Result<(), CliError> {
    let rows = rows.iter().map(|r| {
        let e = r.energy;
        vec![
            num(r.t),
            num(e.kinetic),
            num(e.internal_plus),
            num(e.internal_minus),
            num(e.total),
        ]
    });
    write_csv(
        path,
        &["t", "kinetic", "internal_plus", "internal_minus", "total"],
        rows,
    )
}

/// `x[,y],gap,lambda_needed,e`.
pub fn write_gap_report(path: &Path, dim: usize, rows: &[GapRow]) -> Result<(), CliError> {
    let header: &[&str] = if dim == 2 {
        &["x", "y", "gap", "lambda_needed", "e"]
    } else {
        &["x", "gap", "lambda_needed", "e"]
    };
    let rows = rows.iter().map(|r| {
        let mut row = vec![num(r.center[0])];
        if dim == 2 {
            row.push(num(r.center[1]));
        }
        row.extend([num(r.gap), num(r.lambda_needed), num(r.e)]);
        row
    });
    write_csv(path, header, rows)
}
