//! Subcommands.

use std::f64::consts::{PI, TAU};
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use twofluid::closure::{solve_z, MixtureState, PhaseParams, PressureLaw};
use twofluid::energy::{energy_increases, energy_trace, flag_trace_increases};
use twofluid::grid::Grid;
use twofluid::helmholtz::{
    decompose, gradient, potential_from_run, solve_neumann, time_derivative, CgOptions, NeumannProblem, ScalarField,
    VectorField,
};
use twofluid::solver::{make_piecewise_ic, run, Snapshot, StandardTests};
use twofluid::subsolution::{gap_report, min_lambda, SubsolutionFields, DEFAULT_MARGIN};
use twofluid::symmetric_form::{char_speeds, expected_speeds, system_at};

use crate::config::{parse_config, RunConfig, Setup};
use crate::error::CliError;
use crate::tables::{num, read_snapshots, write_csv, write_energy, write_gap_report, write_snapshots, write_trace};

/// Speed deviation accepted by `symmetry-check`, relative to `max(1, |u.n| + c)`.
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Decomposition defects accepted by `helmholtz-test`.
pub const HELMHOLTZ_TOL: f64 = 1e-8;

#[derive(Debug, Parser)]
#[command(name = "twofluid", version, about = "Two-fluid flow with algebraic pressure closure")]
pub struct Cli {
    /// Scenario file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Output directory (overrides [output] dir; default '.').
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Seed for random-sample audits.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Only report errors.
    #[arg(long, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate Z, p and c over a log-spaced (R, Q) grid.
    ClosureTable(ClosureTableArgs),
    /// Run the finite-volume solver on the scenario.
    Riemann,
    /// Energy per snapshot; flags increases.
    EnergyTrace(InputArgs),
    /// Manufactured-solution battery for the Neumann solver and the splitting.
    HelmholtzTest(HelmholtzArgs),
    /// Select Lambda on the initial data and report the gap per cell.
    SubsolutionCheck(SubsolutionArgs),
    /// Audit symmetry, A0 positivity and characteristic speeds at random states.
    SymmetryCheck(SymmetryArgs),
    /// Weak-form residuals of a snapshot trace.
    WeakResidual(WeakArgs),
}

#[derive(Debug, Args)]
pub struct GammaArgs {
    /// Used when no --config is given.
    #[arg(long)]
    pub gamma_plus: Option<f64>,
    #[arg(long)]
    pub gamma_minus: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ClosureTableArgs {
    #[command(flatten)]
    pub gammas: GammaArgs,
    #[arg(long, default_value_t = 1e-3)]
    pub r_min: f64,
    #[arg(long, default_value_t = 1e3)]
    pub r_max: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub q_min: f64,
    #[arg(long, default_value_t = 1e3)]
    pub q_max: f64,
    /// Points per axis.
    #[arg(long, default_value_t = 13)]
    pub points: usize,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Snapshot CSV to read instead of running the scenario.
    #[arg(long, value_name = "CSV")]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HelmholtzArgs {
    /// Cells per axis, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [16usize, 32, 64, 128])]
    pub sizes: Vec<usize>,
}

#[derive(Debug, Args)]
pub struct SubsolutionArgs {
    #[arg(long, default_value_t = DEFAULT_MARGIN)]
    pub margin: f64,
}

#[derive(Debug, Args)]
pub struct SymmetryArgs {
    #[command(flatten)]
    pub gammas: GammaArgs,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
}

#[derive(Debug, Args)]
pub struct WeakArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Fail when the largest residual exceeds this value.
    #[arg(long)]
    pub max_residual: Option<f64>,
}

struct Context {
    config: Option<RunConfig>,
    out: PathBuf,
    seed: u64,
    quiet: bool,
}

impl Context {
    fn say(&self, message: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", message.as_ref());
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn config(&self) -> Result<&RunConfig, CliError> {
        self.config
            .as_ref()
            .ok_or_else(|| CliError::Usage("this subcommand needs --config".into()))
    }

    fn setup(&self) -> Result<&Setup, CliError> {
        self.config()?
            .setup
            .as_ref()
            .ok_or_else(|| CliError::Usage("the scenario has no [grid], [ic.patch.N] and [solver] sections".into()))
    }

    fn phase_params(&self, flags: &GammaArgs) -> Result<PhaseParams, CliError> {
        if let (Some(gp), Some(gm)) = (flags.gamma_plus, flags.gamma_minus) {
            return Ok(PhaseParams::new(gp, gm)?);
        }
        if flags.gamma_plus.is_some() || flags.gamma_minus.is_some() {
            return Err(CliError::Usage("give both --gamma-plus and --gamma-minus".into()));
        }
        two_fluid(&self.config()?.law)
    }

    fn snapshots(&self, input: &InputArgs) -> Result<Vec<Snapshot>, CliError> {
        match &input.input {
            Some(path) => read_snapshots(path),
            None => {
                let setup = self.setup()?;
                let initial = make_piecewise_ic(&setup.ic, &setup.grid)?;
                Ok(run(initial, &setup.solver)?.snapshots)
            }
        }
    }
}

fn two_fluid(law: &PressureLaw) -> Result<PhaseParams, CliError> {
    law.phase_params()
        .copied()
        .ok_or_else(|| CliError::Usage("this subcommand needs law = two_fluid".into()))
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(parse_config(&text)?)
}

/// Runs one invocation; the caller maps errors to exit codes.
pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let config = cli.config.as_deref().map(load_config).transpose()?;
    let out = cli
        .out
        .clone()
        .or_else(|| config.as_ref().and_then(|c| c.output_dir.clone()))
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
    let ctx = Context {
        config,
        out,
        seed: cli.seed,
        quiet: cli.quiet,
    };
    match &cli.command {
        Command::ClosureTable(args) => closure_table(&ctx, args),
        Command::Riemann => riemann(&ctx),
        Command::EnergyTrace(args) => energy(&ctx, args),
        Command::HelmholtzTest(args) => helmholtz_test(&ctx, args),
        Command::SubsolutionCheck(args) => subsolution_check(&ctx, args),
        Command::SymmetryCheck(args) => symmetry_check(&ctx, args),
        Command::WeakResidual(args) => weak_residual(&ctx, args),
    }
}

fn log_space(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>, CliError> {
    if !(lo > 0.0 && hi >= lo && n >= 1) {
        return Err(CliError::Usage(format!("invalid range [{lo}, {hi}] with {n} points")));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.ln(), hi.ln());
    let mut points: Vec<f64> = (0..n)
        .map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp())
        .collect();
    points[0] = lo;
    points[n - 1] = hi;
    Ok(points)
}

fn closure_table(ctx: &Context, args: &ClosureTableArgs) -> Result<(), CliError> {
    let params = ctx.phase_params(&args.gammas)?;
    let rs = log_space(args.r_min, args.r_max, args.points)?;
    let qs = log_space(args.q_min, args.q_max, args.points)?;
    let mut rows = Vec::with_capacity(rs.len() * qs.len());
    for &r in &rs {
        for &q in &qs {
            let res = solve_z(MixtureState::new(r, q)?, &params)?;
            rows.push(vec![num(r), num(q), num(res.z), num(res.p), num(res.sound_speed())]);
        }
    }
    let path = ctx.path("closure_table.csv");
    let count = rows.len();
    write_csv(&path, &["R", "Q", "Z", "p", "c"], rows)?;
    ctx.say(format!("{count} states written to {}", path.display()));
    Ok(())
}

fn riemann(ctx: &Context) -> Result<(), CliError> {
    let config = ctx.config()?;
    let setup = ctx.setup()?;
    let initial = make_piecewise_ic(&setup.ic, &setup.grid)?;
    let output = run(initial, &setup.solver)?;
    write_snapshots(&ctx.path("snapshots.csv"), &output.snapshots, &setup.solver.law)?;
    write_trace(&ctx.path("trace.csv"), &output.trace)?;
    let (first, last) = (&output.trace[0], &output.trace[output.trace.len() - 1]);
    ctx.say(format!(
        "{}: {} steps to t = {}, mass drift R {:.3e}, Q {:.3e}",
        config.scenario,
        last.step,
        last.t,
        (last.mass_r - first.mass_r) / first.mass_r,
        (last.mass_q - first.mass_q) / first.mass_q,
    ));
    let increases = flag_trace_increases(&output.trace);
    if !increases.is_empty() {
        ctx.say(format!(
            "energy increased at {} steps (first: step {})",
            increases.len(),
            increases[0]
        ));
    }
    Ok(())
}

fn energy(ctx: &Context, args: &InputArgs) -> Result<(), CliError> {
    let params = two_fluid(&ctx.config()?.law)?;
    let snapshots = ctx.snapshots(args)?;
    let rows = energy_trace(&snapshots, &params)?;
    let path = ctx.path("energy.csv");
    write_energy(&path, &rows)?;
    let totals: Vec<f64> = rows.iter().map(|r| r.energy.total).collect();
    ctx.say(format!(
        "{} snapshots, total energy {} -> {}",
        rows.len(),
        totals[0],
        totals[totals.len() - 1]
    ));
    let increases = energy_increases(&totals);
    if increases.is_empty() {
        Ok(())
    } else {
        let times: Vec<String> = increases.iter().map(|&k| rows[k].t.to_string()).collect();
        Err(CliError::Check(format!(
            "total energy increased at t = {}",
            times.join(", ")
        )))
    }
}

/// Errors and defects of the manufactured battery at one resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatteryRow {
    pub n: usize,
    /// Max error of `-Delta Psi = 2 pi^2 cos(pi x) cos(pi y)` against `cos(pi x) cos(pi y)`.
    pub neumann_error: f64,
    pub divergence: f64,
    pub orthogonality: f64,
    /// `|v| / |w|` for a discrete gradient input.
    pub gradient_residue: f64,
}

pub fn helmholtz_battery(n: usize) -> Result<BatteryRow, CliError> {
    let grid = Grid::new_2d(n, n, (0.0, 1.0), (0.0, 1.0))?;
    let exact = |[x, y]: [f64; 2]| (PI * x).cos() * (PI * y).cos();
    let f = ScalarField::from_fn(grid, |c| 2.0 * PI * PI * exact(c));
    let (psi, _) = solve_neumann(&NeumannProblem::new(f))?;
    let neumann_error = (0..grid.len())
        .map(|i| (psi.values[i] - exact(grid.center(i))).abs())
        .fold(0.0, f64::max);

    let phi = ScalarField::from_fn(grid, |[x, y]| (PI * x).cos() * (TAU * y).cos() + (PI * y).cos());
    let grad = gradient(&phi);
    let mixed = VectorField::new(
        grid,
        (0..grid.len())
            .map(|i| {
                let [x, y] = grid.center(i);
                let (sx, sy) = ((PI * x).sin(), (PI * y).sin());
                let g = grad.values[i];
                [
                    sx * sx * PI * (TAU * y).sin() + g[0],
                    -PI * (TAU * x).sin() * sy * sy + g[1],
                    0.0,
                ]
            })
            .collect(),
    )?;
    let opts = CgOptions::default();
    let split = decompose(&mixed, &opts)?;
    let removed = decompose(&grad, &opts)?;
    Ok(BatteryRow {
        n,
        neumann_error,
        divergence: split.divergence_defect(),
        orthogonality: split.orthogonality_defect(),
        gradient_residue: removed.v.norm() / grad.norm(),
    })
}

fn helmholtz_test(ctx: &Context, args: &HelmholtzArgs) -> Result<(), CliError> {
    if args.sizes.iter().any(|&n| n < 4) {
        return Err(CliError::Usage("sizes must be at least 4".into()));
    }
    let rows = args
        .sizes
        .iter()
        .map(|&n| helmholtz_battery(n))
        .collect::<Result<Vec<_>, _>>()?;
    let mut failures = Vec::new();
    let mut csv_rows = Vec::new();
    for (k, row) in rows.iter().enumerate() {
        let order = if k == 0 {
            f64::NAN
        } else {
            let prev = &rows[k - 1];
            (prev.neumann_error / row.neumann_error).ln() / (row.n as f64 / prev.n as f64).ln()
        };
        ctx.say(format!(
            "n = {:4}: Neumann error {:.3e} (order {order:.3}), div v {:.1e}, orthogonality {:.1e}, gradient residue {:.1e}",
            row.n, row.neumann_error, row.divergence, row.orthogonality, row.gradient_residue
        ));
        if k > 0 && !(order > 1.8) {
            failures.push(format!("Neumann order {order:.3} at n = {}", row.n));
        }
        for (name, v) in [
            ("div v", row.divergence),
            ("orthogonality", row.orthogonality),
            ("gradient residue", row.gradient_residue),
        ] {
            if !(v <= HELMHOLTZ_TOL) {
                failures.push(format!("{name} {v:.1e} at n = {}", row.n));
            }
        }
        csv_rows.push(vec![
            row.n.to_string(),
            num(row.neumann_error),
            num(order),
            num(row.divergence),
            num(row.orthogonality),
            num(row.gradient_residue),
        ]);
    }
    write_csv(
        &ctx.path("helmholtz.csv"),
        &[
            "n",
            "neumann_error",
            "order",
            "divergence",
            "orthogonality",
            "gradient_residue",
        ],
        csv_rows,
    )?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Check(failures.join("; ")))
    }
}

fn scalar_field(grid: Grid, values: impl Iterator<Item = f64>) -> ScalarField {
    ScalarField {
        grid,
        values: values.collect(),
    }
}

fn subsolution_check(ctx: &Context, args: &SubsolutionArgs) -> Result<(), CliError> {
    let params = two_fluid(&ctx.config()?.law)?;
    let setup = ctx.setup()?;
    let grid = setup.grid;
    let initial = make_piecewise_ic(&setup.ic, &grid)?;
    let output = run(initial.clone(), &setup.solver)?;
    if output.snapshots.len() < 3 {
        return Err(CliError::Usage(
            "subsolution-check needs snapshots >= 2 in [solver]".into(),
        ));
    }
    let times: Vec<f64> = output.snapshots.iter().map(|s| s.t).collect();
    let densities: Vec<ScalarField> = output
        .snapshots
        .iter()
        .map(|s| scalar_field(grid, s.field.cells.iter().map(|c| c.rho())))
        .collect();
    let opts = CgOptions::default();
    let potentials = potential_from_run(&times, &densities, &opts)?;
    let dt_psi = time_derivative(&times, &potentials)?.swap_remove(0);

    let momentum = VectorField::new(grid, initial.cells.iter().map(|c| c.m).collect())?;
    let split = decompose(&momentum, &opts)?;
    let fields = SubsolutionFields {
        grid,
        v: split.v.values,
        grad_psi: split.grad_psi.values,
        dt_psi: dt_psi.values,
        r: initial.cells.iter().map(|c| c.r).collect(),
        q: initial.cells.iter().map(|c| c.q).collect(),
    };
    let lambda = min_lambda(&fields, &params, args.margin)?;
    let report = gap_report(&fields, &params, lambda)?;
    write_gap_report(&ctx.path("subsolution.csv"), grid.dim, &report)?;
    let min_gap = report.iter().map(|r| r.gap).fold(f64::INFINITY, f64::min);
    ctx.say(format!("Lambda = {}", num(lambda)));
    ctx.say(format!("min gap = {min_gap:.6e} over {} cells", report.len()));
    if min_gap > 0.0 {
        Ok(())
    } else {
        Err(CliError::Check(format!("gap {min_gap:e} is not positive everywhere")))
    }
}

fn random_unit(rng: &mut impl Rng) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 0.1 && n <= 1.0 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

fn symmetry_check(ctx: &Context, args: &SymmetryArgs) -> Result<(), CliError> {
    let params = ctx.phase_params(&args.gammas)?;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let mut rows = Vec::with_capacity(args.samples);
    let mut failures = 0;
    let mut worst = 0.0_f64;
    for _ in 0..args.samples {
        let r = (rng.random_range(0.1_f64.ln()..10.0_f64.ln())).exp();
        let q = (rng.random_range(0.1_f64.ln()..10.0_f64.ln())).exp();
        let u = [
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
        ];
        let n = random_unit(&mut rng);
        let (_, sys, c2) = system_at(MixtureState::new(r, q)?, u, &params)?;
        let speeds = char_speeds(&sys, n)?;
        let expected = expected_speeds(u, n, c2);
        let scale = expected[0].abs().max(expected[4].abs()).max(1.0);
        let error = speeds
            .iter()
            .zip(expected)
            .map(|(a, b)| (a - b).abs() / scale)
            .fold(0.0, f64::max);
        let asymmetry = sys.max_asymmetry();
        let min_a0 = sys.a0_eigenvalues()[0];
        worst = worst.max(error);
        if asymmetry != 0.0 || !(min_a0 > 0.0) || !(error <= SYMMETRY_TOL) {
            failures += 1;
        }
        let mut row: Vec<String> = [r, q, u[0], u[1], u[2], n[0], n[1], n[2], c2.sqrt()].map(num).to_vec();
        row.extend([num(asymmetry), num(min_a0), num(error)]);
        rows.push(row);
    }
    write_csv(
        &ctx.path("symmetry.csv"),
        &[
            "R",
            "Q",
            "u1",
            "u2",
            "u3",
            "n1",
            "n2",
            "n3",
            "c",
            "asymmetry",
            "min_a0",
            "speed_error",
        ],
        rows,
    )?;
    ctx.say(format!(
        "{} states, worst speed deviation {worst:.2e}, failures {failures}",
        args.samples
    ));
    if failures == 0 {
        Ok(())
    } else {
        Err(CliError::Check(format!("{failures} of {} states failed", args.samples)))
    }
}

fn weak_residual(ctx: &Context, args: &WeakArgs) -> Result<(), CliError> {
    let law = ctx.config()?.law;
    let snapshots = ctx.snapshots(&args.input)?;
    if snapshots.len() < 2 {
        return Err(CliError::Input("the weak residual needs at least two snapshots".into()));
    }
    let grid = snapshots[0].field.grid;
    let t_end = snapshots[snapshots.len() - 1].t;
    let tests = StandardTests::new(grid, t_end);
    let residual = tests.residual(&snapshots, &law)?;
    let rows = (0..tests.len()).map(|k| {
        vec![
            k.to_string(),
            num(residual.continuity_r[k]),
            num(residual.continuity_q[k]),
            num(residual.momentum[k]),
        ]
    });
    write_csv(
        &ctx.path("weak_residual.csv"),
        &["mode", "continuity_R", "continuity_Q", "momentum"],
        rows,
    )?;
    let max = residual.max_abs();
    ctx.say(format!(
        "max weak residual {max:.6e} over {} snapshots",
        snapshots.len()
    ));
    match args.max_residual {
        Some(limit) if !(max <= limit) => Err(CliError::Check(format!("residual {max:e} exceeds {limit:e}"))),
        _ => Ok(()),
    }
}
