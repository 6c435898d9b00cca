//! Scenario files: INI-style sections with `key = value` lines.
//!
//! ```text
//! scenario = sod
//!
//! [eos]
//! law = two_fluid
//! gamma_plus = 1.4
//! gamma_minus = 1.4
//!
//! [grid]
//! nx = 256
//!
//! [ic.patch.1]
//! x_max = 0.5
//! r = 0.5
//! q = 0.5
//!
//! [ic.patch.2]
//! x_min = 0.5
//! r = 0.0625
//! q = 0.0625
//!
//! [solver]
//! t_end = 0.2
//! ```
//!
//! Lines starting with `#` or `;` are comments. Every error carries the line
//! it was found on; all errors of a file are reported together.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use twofluid::closure::{FluidParticleParams, LiquidGasParams, PhaseParams, PressureLaw};
use twofluid::grid::Grid;
use twofluid::solver::{make_piecewise_ic, Boundary, FluxKind, Patch, PiecewiseConstantIC, SolverConfig};

pub const DEFAULT_CFL: f64 = 0.9;
pub const DEFAULT_SNAPSHOTS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    /// 1-based; `None` for file-level problems.
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// Every problem found in one file.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, e) in self.0.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

/// Grid, initial data and solver settings of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Setup {
    pub grid: Grid,
    pub ic: PiecewiseConstantIC,
    pub solver: SolverConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: String,
    pub law: PressureLaw,
    /// Absent for files that only describe an equation of state.
    pub setup: Option<Setup>,
    pub output_dir: Option<PathBuf>,
}

struct Entry {
    value: String,
    line: usize,
    used: bool,
}

struct Section {
    name: String,
    line: usize,
    entries: BTreeMap<String, Entry>,
}

impl Section {
    fn new(name: &str, line: usize) -> Self {
        Self {
            name: name.to_string(),
            line,
            entries: BTreeMap::new(),
        }
    }
}

/// Typed access to one section, collecting errors instead of stopping.
struct Reader<'a> {
    section: &'a mut Section,
    errors: &'a mut Vec<ConfigError>,
}

impl Reader<'_> {
    fn raw(&mut self, key: &str) -> Option<(String, usize)> {
        self.section.entries.get_mut(key).map(|e| {
            e.used = true;
            (e.value.clone(), e.line)
        })
    }

    fn line_of(&self, key: &str) -> usize {
        self.section.entries.get(key).map_or(self.section.line, |e| e.line)
    }

    fn fail(&mut self, line: usize, message: String) {
        self.errors.push(ConfigError {
            line: Some(line),
            message,
        });
    }

    fn parsed<T: std::str::FromStr>(&mut self, key: &str, what: &str) -> Option<T> {
        let (value, line) = self.raw(key)?;
        match value.parse::<T>() {
            Ok(v) => Some(v),
            Err(_) => {
                let section = self.section.name.clone();
                self.fail(line, format!("[{section}] {key}: expected {what}, got '{value}'"));
                None
            }
        }
    }

    fn float(&mut self, key: &str) -> Option<f64> {
        let v = self.parsed::<f64>(key, "a number")?;
        if v.is_finite() {
            Some(v)
        } else {
            let line = self.line_of(key);
            self.fail(line, format!("{key} must be finite"));
            None
        }
    }

    fn float_or(&mut self, key: &str, default: f64) -> Option<f64> {
        if self.section.entries.contains_key(key) {
            self.float(key)
        } else {
            Some(default)
        }
    }

    fn required_float(&mut self, key: &str) -> Option<f64> {
        if !self.section.entries.contains_key(key) {
            let (line, section) = (self.section.line, self.section.name.clone());
            self.fail(line, format!("[{section}] is missing required key {key}"));
            return None;
        }
        self.float(key)
    }

    fn count(&mut self, key: &str) -> Option<usize> {
        self.parsed::<usize>(key, "a non-negative integer")
    }

    fn text(&mut self, key: &str) -> Option<String> {
        self.raw(key).map(|(v, _)| v)
    }
}

fn strip_comment(line: &str) -> &str {
    let trimmed = line.trim();
    if trimmed.starts_with('#') || trimmed.starts_with(';') {
        return "";
    }
    match trimmed.find(" #") {
        Some(pos) => trimmed[..pos].trim_end(),
        None => trimmed,
    }
}

fn is_snake_case(key: &str) -> bool {
    !key.is_empty()
        && key.starts_with(|c: char| c.is_ascii_lowercase())
        && key
            .chars()
            .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

fn known_section(name: &str) -> bool {
    matches!(name, "eos" | "grid" | "solver" | "output") || patch_number(name).is_some()
}

fn patch_number(name: &str) -> Option<u32> {
    name.strip_prefix("ic.patch.")?.parse().ok()
}

fn lex(text: &str, errors: &mut Vec<ConfigError>) -> Vec<Section> {
    // The unnamed leading section holds top-level keys.
    let mut sections = vec![Section::new("", 1)];
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = strip_comment(raw);
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else {
                errors.push(ConfigError {
                    line: Some(line),
                    message: format!("malformed section header '{content}'"),
                });
                continue;
            };
            let name = name.trim();
            if !known_section(name) {
                errors.push(ConfigError {
                    line: Some(line),
                    message: format!("unknown section [{name}]"),
                });
            } else if sections.iter().any(|s| s.name == name) {
                errors.push(ConfigError {
                    line: Some(line),
                    message: format!("duplicate section [{name}]"),
                });
            }
            sections.push(Section::new(name, line));
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            errors.push(ConfigError {
                line: Some(line),
                message: format!("expected 'key = value', got '{content}'"),
            });
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        if !is_snake_case(key) {
            errors.push(ConfigError {
                line: Some(line),
                message: format!("invalid key '{key}' (lowercase snake_case expected)"),
            });
            continue;
        }
        let section = sections.last_mut().expect("leading section");
        if section.entries.contains_key(key) {
            errors.push(ConfigError {
                line: Some(line),
                message: format!("duplicate key {key}"),
            });
            continue;
        }
        section.entries.insert(
            key.to_string(),
            Entry {
                value: value.to_string(),
                line,
                used: false,
            },
        );
    }
    sections
}

fn parse_law(section: Option<&mut Section>, errors: &mut Vec<ConfigError>) -> Option<PressureLaw> {
    let Some(section) = section else {
        errors.push(ConfigError {
            line: None,
            message: "missing [eos] section".into(),
        });
        return None;
    };
    let header = section.line;
    let mut r = Reader { section, errors };
    let law = r.text("law").unwrap_or_else(|| "two_fluid".into());
    let built = match law.as_str() {
        "two_fluid" => {
            let (gp, gm) = (r.required_float("gamma_plus"), r.required_float("gamma_minus"));
            let (gp, gm) = (gp?, gm?);
            PhaseParams::new(gp, gm).map(PressureLaw::TwoFluid).map_err(|e| {
                let key = if gp <= 1.0 { "gamma_plus" } else { "gamma_minus" };
                (r.line_of(key), e)
            })
        }
        "liquid_gas" => {
            let (c, k0, a0) = (
                r.required_float("c_const"),
                r.required_float("k0"),
                r.required_float("a0"),
            );
            LiquidGasParams::new(c?, k0?, a0?)
                .map(PressureLaw::LiquidGas)
                .map_err(|e| (header, e))
        }
        "fluid_particle" => {
            let (g, b) = (r.required_float("gamma"), r.required_float("beta"));
            FluidParticleParams::new(g?, b?)
                .map(PressureLaw::FluidParticle)
                .map_err(|e| (header, e))
        }
        other => {
            let line = r.line_of("law");
            r.fail(
                line,
                format!("unknown law '{other}' (two_fluid, liquid_gas or fluid_particle)"),
            );
            return None;
        }
    };
    match built {
        Ok(law) => Some(law),
        Err((line, e)) => {
            r.fail(line, inner_message(&e));
            None
        }
    }
}

/// The message of a core error without its category prefix.
fn inner_message(e: &twofluid::Error) -> String {
    match e {
        twofluid::Error::InvalidParameter(m) => m.clone(),
        other => other.to_string(),
    }
}

fn parse_grid(section: &mut Section, errors: &mut Vec<ConfigError>) -> Option<Grid> {
    let header = section.line;
    let mut r = Reader { section, errors };
    let nx = match r.count("nx") {
        Some(n) => Some(n),
        None => {
            if !r.section.entries.contains_key("nx") {
                r.fail(header, "[grid] is missing required key nx".into());
            }
            None
        }
    };
    let x = (r.float_or("x_min", 0.0), r.float_or("x_max", 1.0));
    let two_d = r.section.entries.contains_key("ny");
    let grid = if two_d {
        let ny = r.count("ny");
        let y = (r.float_or("y_min", 0.0), r.float_or("y_max", 1.0));
        Grid::new_2d(nx?, ny?, (x.0?, x.1?), (y.0?, y.1?))
    } else {
        for key in ["y_min", "y_max"] {
            if r.section.entries.contains_key(key) {
                let line = r.line_of(key);
                r.raw(key);
                r.fail(line, format!("{key} needs ny (one-dimensional grid)"));
            }
        }
        Grid::new_1d(nx?, x.0?, x.1?)
    };
    grid.map_err(|e| r.fail(header, inner_message(&e))).ok()
}

fn parse_patch(section: &mut Section, grid: Option<&Grid>, errors: &mut Vec<ConfigError>) -> Option<Patch> {
    let label = format!("[{}]", section.name);
    let (x0, x1, y0, y1) = grid.map_or((0.0, 1.0, 0.0, 1.0), |g| (g.x_min, g.x_max, g.y_min, g.y_max));
    let mut r = Reader { section, errors };
    let x = (r.float_or("x_min", x0), r.float_or("x_max", x1));
    let y = (r.float_or("y_min", y0), r.float_or("y_max", y1));
    let (rr, q) = (r.required_float("r"), r.required_float("q"));
    let u = [r.float_or("ux", 0.0), r.float_or("uy", 0.0), r.float_or("uz", 0.0)];
    Some(Patch {
        label,
        x: (x.0?, x.1?),
        y: (y.0?, y.1?),
        r: rr?,
        q: q?,
        u: [u[0]?, u[1]?, u[2]?],
    })
}

fn parse_solver(
    section: &mut Section,
    law: Option<PressureLaw>,
    errors: &mut Vec<ConfigError>,
) -> Option<SolverConfig> {
    let header = section.line;
    let mut r = Reader { section, errors };
    let t_end = r.required_float("t_end");
    let cfl = r.float_or("cfl", DEFAULT_CFL);
    let flux = match r.text("flux").as_deref() {
        None | Some("rusanov") => Some(FluxKind::Rusanov),
        Some(other) => {
            let line = r.line_of("flux");
            r.fail(line, format!("unknown flux '{other}' (rusanov)"));
            None
        }
    };
    let bc = match r.text("bc").as_deref() {
        None | Some("reflecting") => Some(Boundary::Reflecting),
        Some("periodic") => Some(Boundary::Periodic),
        Some(other) => {
            let line = r.line_of("bc");
            r.fail(line, format!("unknown bc '{other}' (reflecting or periodic)"));
            None
        }
    };
    let snapshots = if r.section.entries.contains_key("snapshots") {
        r.count("snapshots")
    } else {
        Some(DEFAULT_SNAPSHOTS)
    };
    let config = SolverConfig {
        cfl: cfl?,
        t_end: t_end?,
        flux: flux?,
        bc: bc?,
        law: law?,
        snapshots: snapshots?,
    };
    match config.validate() {
        Ok(()) => Some(config),
        Err(e) => {
            r.fail(header, inner_message(&e));
            None
        }
    }
}

/// Parses and validates a scenario file.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigErrors> {
    let mut errors = Vec::new();
    let mut sections = lex(text, &mut errors);

    let scenario = {
        let top = &mut sections[0];
        let mut r = Reader {
            section: top,
            errors: &mut errors,
        };
        r.text("scenario").unwrap_or_else(|| "unnamed".into())
    };
    let law = parse_law(sections.iter_mut().find(|s| s.name == "eos"), &mut errors);

    let grid = sections
        .iter_mut()
        .find(|s| s.name == "grid")
        .and_then(|s| parse_grid(s, &mut errors));
    let has_grid = sections.iter().any(|s| s.name == "grid");

    let mut patch_sections: Vec<&mut Section> = sections
        .iter_mut()
        .filter(|s| patch_number(&s.name).is_some())
        .collect();
    patch_sections.sort_by_key(|s| patch_number(&s.name));
    let patch_lines: Vec<usize> = patch_sections.iter().map(|s| s.line).collect();
    let patches: Vec<Option<Patch>> = patch_sections
        .into_iter()
        .map(|s| parse_patch(s, grid.as_ref(), &mut errors))
        .collect();

    let solver = sections
        .iter_mut()
        .find(|s| s.name == "solver")
        .and_then(|s| parse_solver(s, law, &mut errors));
    let has_solver = sections.iter().any(|s| s.name == "solver");

    let output_dir = sections.iter_mut().find(|s| s.name == "output").and_then(|s| {
        let mut r = Reader {
            section: s,
            errors: &mut errors,
        };
        r.text("dir").map(PathBuf::from)
    });

    let wants_setup = has_grid || has_solver || !patches.is_empty();
    if wants_setup {
        if !has_grid {
            errors.push(ConfigError {
                line: None,
                message: "missing [grid] section".into(),
            });
        }
        if !has_solver {
            errors.push(ConfigError {
                line: None,
                message: "missing [solver] section".into(),
            });
        }
        if patches.is_empty() {
            errors.push(ConfigError {
                line: None,
                message: "no [ic.patch.N] sections".into(),
            });
        }
    }

    for section in &sections {
        for (key, entry) in &section.entries {
            if !entry.used {
                let place = if section.name.is_empty() {
                    "top level".to_string()
                } else {
                    format!("[{}]", section.name)
                };
                errors.push(ConfigError {
                    line: Some(entry.line),
                    message: format!("unknown key {key} in {place}"),
                });
            }
        }
    }

    let mut setup = None;
    if let (Some(grid), Some(solver)) = (grid, solver) {
        if patches.iter().all(Option::is_some) && !patches.is_empty() {
            let ic = PiecewiseConstantIC {
                patches: patches.into_iter().flatten().collect(),
            };
            match make_piecewise_ic(&ic, &grid) {
                Ok(_) => setup = Some(Setup { grid, ic, solver }),
                Err(e) => errors.push(ConfigError {
                    line: patch_lines.first().copied(),
                    message: inner_message(&e),
                }),
            }
        }
    }

    if !errors.is_empty() {
        errors.sort_by_key(|e| e.line.unwrap_or(usize::MAX));
        return Err(ConfigErrors(errors));
    }
    Ok(RunConfig {
        scenario,
        law: law.expect("law parsed without errors"),
        setup,
        output_dir,
    })
}
