//! Experiment configuration: flat sectioned `key = value` text.
//!
//! ```text
//! # Unconstrained t^2 with a linear datum.
//! [phi]
//! family = power
//! p = 2
//!
//! [domain]
//! shape = rectangle
//! min = 0, 0
//! max = 1, 1
//! h = 1/64
//!
//! [problem]
//! boundary = 0.3 + 1.7*x - 0.6*y
//! ```
//!
//! `#` starts a comment. Numbers accept constant expressions, points are
//! comma-separated coordinates and point lists separate points with `;`.
//! Unknown sections and keys are errors so that typos do not pass silently.

use std::path::{Path, PathBuf};

use orlicz_obstacle::grid::{Point, Shape};
use orlicz_obstacle::solver::Method;
use orlicz_obstacle::{Error, Result};

use crate::expr::Expr;

const SECTIONS: &[&str] = &[
    "phi",
    "domain",
    "problem",
    "solver",
    "diagnostics",
    "conditions",
    "capacity",
    "output",
    "run",
];

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    key: String,
    value: String,
    line: usize,
    key_column: usize,
    value_column: usize,
}

#[derive(Debug, Clone, PartialEq)]
struct RawSection {
    name: String,
    line: usize,
    entries: Vec<Entry>,
}

fn parse_error(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

fn raw_sections(text: &str) -> Result<Vec<RawSection>> {
    let mut sections: Vec<RawSection> = Vec::new();
    for (i, full) in text.lines().enumerate() {
        let line = i + 1;
        let content = full.split('#').next().unwrap_or("");
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = content.chars().take_while(|c| c.is_whitespace()).count();
        if let Some(rest) = trimmed.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| {
                    parse_error(line, indent + trimmed.chars().count() + 1, "expected `]`")
                })?
                .trim();
            if !SECTIONS.contains(&name) {
                return Err(parse_error(
                    line,
                    indent + 2,
                    format!("unknown section `{name}`"),
                ));
            }
            if sections.iter().any(|s| s.name == name) {
                return Err(parse_error(
                    line,
                    indent + 2,
                    format!("duplicate section `{name}`"),
                ));
            }
            sections.push(RawSection {
                name: name.to_string(),
                line,
                entries: Vec::new(),
            });
            continue;
        }
        let eq = content.find('=').ok_or_else(|| {
            parse_error(line, indent + 1, "expected `key = value` or `[section]`")
        })?;
        let key = content[..eq].trim();
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(parse_error(
                line,
                indent + 1,
                format!("invalid key `{key}`"),
            ));
        }
        let section = sections
            .last_mut()
            .ok_or_else(|| parse_error(line, indent + 1, "key outside of any section"))?;
        if section.entries.iter().any(|e| e.key == key) {
            return Err(parse_error(
                line,
                indent + 1,
                format!("duplicate key `{key}`"),
            ));
        }
        let after = &content[eq + 1..];
        let value = after.trim();
        let value_column = content[..eq + 1].chars().count()
            + after.chars().take_while(|c| c.is_whitespace()).count()
            + 1;
        if value.is_empty() {
            return Err(parse_error(
                line,
                value_column,
                format!("`{key}` has no value"),
            ));
        }
        section.entries.push(Entry {
            key: key.to_string(),
            value: value.to_string(),
            line,
            key_column: indent + 1,
            value_column,
        });
    }
    Ok(sections)
}

/// Entries of one section; every key must be consumed before `finish`.
struct Section {
    name: String,
    line: usize,
    entries: Vec<(Entry, bool)>,
}

impl Section {
    fn new(raw: Option<RawSection>, name: &str) -> Self {
        match raw {
            Some(r) => Self {
                name: r.name,
                line: r.line,
                entries: r.entries.into_iter().map(|e| (e, false)).collect(),
            },
            None => Self {
                name: name.to_string(),
                line: 0,
                entries: Vec::new(),
            },
        }
    }

    fn present(&self) -> bool {
        self.line > 0
    }

    fn take(&mut self, key: &str) -> Option<Entry> {
        self.entries
            .iter_mut()
            .find(|(e, _)| e.key == key)
            .map(|(e, used)| {
                *used = true;
                e.clone()
            })
    }

    fn require(&mut self, key: &str) -> Result<Entry> {
        self.take(key).ok_or_else(|| {
            parse_error(
                self.line.max(1),
                1,
                format!("[{}] needs `{key}`", self.name),
            )
        })
    }

    fn finish(self) -> Result<()> {
        match self.entries.into_iter().find(|(_, used)| !used) {
            Some((e, _)) => Err(parse_error(
                e.line,
                e.key_column,
                format!("unknown key `{}` in [{}]", e.key, self.name),
            )),
            None => Ok(()),
        }
    }

    fn number(&mut self, key: &str) -> Result<Option<f64>> {
        self.take(key)
            .map(|e| constant(&e.value, e.line, e.value_column))
            .transpose()
    }

    fn number_or(&mut self, key: &str, default: f64) -> Result<f64> {
        Ok(self.number(key)?.unwrap_or(default))
    }

    fn positive(&mut self, key: &str) -> Result<Option<f64>> {
        match self.take(key) {
            None => Ok(None),
            Some(e) => {
                let v = constant(&e.value, e.line, e.value_column)?;
                if v > 0.0 {
                    Ok(Some(v))
                } else {
                    Err(parse_error(
                        e.line,
                        e.value_column,
                        format!("`{key}` must be positive, got {v}"),
                    ))
                }
            }
        }
    }

    fn integer(&mut self, key: &str) -> Result<Option<u64>> {
        self.take(key)
            .map(|e| {
                e.value.parse::<u64>().map_err(|_| {
                    parse_error(
                        e.line,
                        e.value_column,
                        format!("`{key}` needs a nonnegative integer"),
                    )
                })
            })
            .transpose()
    }

    fn list(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        self.take(key)
            .map(|e| {
                split_top(&e.value, ',')
                    .into_iter()
                    .map(|(offset, item)| constant(item, e.line, e.value_column + offset))
                    .collect()
            })
            .transpose()
    }

    fn positive_list(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        let line = self
            .entries
            .iter()
            .find(|(e, _)| e.key == key)
            .map(|(e, _)| (e.line, e.value_column));
        match self.list(key)? {
            Some(v) if v.iter().any(|x| !(*x > 0.0)) => {
                let (l, c) = line.expect("entry exists");
                Err(parse_error(
                    l,
                    c,
                    format!("`{key}` entries must be positive"),
                ))
            }
            other => Ok(other),
        }
    }

    fn point(&mut self, key: &str, dim: usize) -> Result<Option<Point>> {
        self.take(key)
            .map(|e| point(&e.value, e.line, e.value_column, dim))
            .transpose()
    }

    fn points(&mut self, key: &str, dim: usize) -> Result<Option<Vec<Point>>> {
        self.take(key)
            .map(|e| {
                split_top(&e.value, ';')
                    .into_iter()
                    .map(|(offset, item)| point(item, e.line, e.value_column + offset, dim))
                    .collect()
            })
            .transpose()
    }

    fn expr(&mut self, key: &str, dim: usize) -> Result<Option<Expr>> {
        self.take(key).map(|e| expression(&e, dim)).transpose()
    }

    fn word(&mut self, key: &str) -> Option<(String, usize, usize)> {
        self.take(key).map(|e| (e.value, e.line, e.value_column))
    }
}

/// Splits at `sep` outside parentheses; yields the character offset of
/// each trimmed piece.
fn split_top(text: &str, sep: char) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut depth = 0i64;
    let mut start = 0;
    let mut start_chars = 0;
    for (chars, (pos, c)) in text.char_indices().enumerate() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            c if c == sep && depth == 0 => {
                out.push((start_chars, &text[start..pos]));
                start = pos + c.len_utf8();
                start_chars = chars + 1;
            }
            _ => {}
        }
    }
    out.push((start_chars, &text[start..]));
    out.into_iter()
        .map(|(offset, piece)| {
            let lead = piece.chars().take_while(|c| c.is_whitespace()).count();
            (offset + lead, piece.trim())
        })
        .collect()
}

fn constant(text: &str, line: usize, column: usize) -> Result<f64> {
    let e = Expr::parse_at(text, line, column)?;
    if e.arity() > 0 {
        return Err(parse_error(
            line,
            column,
            "expected a constant, found a coordinate",
        ));
    }
    let v = e.eval(&[]);
    if !v.is_finite() {
        return Err(parse_error(line, column, format!("`{text}` is not finite")));
    }
    Ok(v)
}

fn point(text: &str, line: usize, column: usize, dim: usize) -> Result<Point> {
    let parts = split_top(text, ',');
    if parts.len() != dim {
        return Err(parse_error(
            line,
            column,
            format!("expected {dim} coordinate(s), got {}", parts.len()),
        ));
    }
    let mut p = [0.0; 2];
    for (k, (offset, item)) in parts.into_iter().enumerate() {
        p[k] = constant(item, line, column + offset)?;
    }
    Ok(p)
}

fn expression(e: &Entry, dim: usize) -> Result<Expr> {
    let expr = Expr::parse_at(&e.value, e.line, e.value_column)?;
    if expr.arity() > dim {
        return Err(parse_error(
            e.line,
            e.value_column,
            format!("`{}` uses `y` but the domain is one-dimensional", e.key),
        ));
    }
    Ok(expr)
}

/// A coefficient field: an expression or a grid file.
#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientSource {
    Expr(Expr),
    File(PathBuf),
}

fn coefficient(section: &mut Section, key: &str, dim: usize) -> Result<Option<CoefficientSource>> {
    match section.take(key) {
        None => Ok(None),
        Some(e) => match e.value.strip_prefix("file:") {
            Some(path) if !path.trim().is_empty() => {
                Ok(Some(CoefficientSource::File(PathBuf::from(path.trim()))))
            }
            Some(_) => Err(parse_error(e.line, e.value_column, "`file:` needs a path")),
            None => Ok(Some(CoefficientSource::Expr(expression(&e, dim)?))),
        },
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PhiConfig {
    Power {
        p: f64,
    },
    DoublePhase {
        p: f64,
        q: f64,
        a: CoefficientSource,
    },
    VariableExponent {
        exponent: CoefficientSource,
        p_lower: f64,
        q_upper: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainConfig {
    pub shape: Shape,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub method: Method,
    pub tol: f64,
    pub max_iters: usize,
    pub gauss_seidel_sweeps: usize,
    pub contact_tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Check {
    InteriorK,
    InteriorMean,
    BoundaryCaccioppoli,
    Gehring,
    Continuity,
}

impl Check {
    pub const ALL: [Check; 5] = [
        Check::InteriorK,
        Check::InteriorMean,
        Check::BoundaryCaccioppoli,
        Check::Gehring,
        Check::Continuity,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Check::InteriorK => "interior-k",
            Check::InteriorMean => "interior-mean",
            Check::BoundaryCaccioppoli => "boundary",
            Check::Gehring => "gehring",
            Check::Continuity => "continuity",
        }
    }

    pub fn from_name(name: &str) -> Option<Check> {
        Check::ALL.into_iter().find(|c| c.name() == name)
    }

    /// Parses a comma-separated list; `all` selects every check.
    pub fn parse_list(text: &str) -> std::result::Result<Vec<Check>, String> {
        let mut out = Vec::new();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            if item == "all" {
                out.extend(Check::ALL);
                continue;
            }
            out.push(Check::from_name(item).ok_or_else(|| {
                format!(
                    "unknown check `{item}`; expected one of all, {}",
                    Check::ALL.map(|c| c.name()).join(", ")
                )
            })?);
        }
        out.sort();
        out.dedup();
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Reference {
    Expr(Expr),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsConfig {
    pub checks: Vec<Check>,
    pub reference: Option<Reference>,
    pub reference_tol: f64,
    /// Interior ball centers; defaults to the bounding-box centre.
    pub centers: Option<Vec<Point>>,
    /// Radii for the level-set form (outer radius) and the mean form.
    pub radii: Vec<f64>,
    pub level: Option<f64>,
    /// Boundary ball centers; defaults to 16 evenly spread halo nodes.
    pub boundary_centers: Option<Vec<Point>>,
    pub boundary_radii: Vec<f64>,
    pub max_spread: f64,
    pub epsilon: Vec<f64>,
    pub levels: usize,
    pub boundary_point: Option<Point>,
    pub continuity_radii: Vec<f64>,
    pub continuity_tol: f64,
    pub fat_threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditionModes {
    A1,
    A1n,
    Both,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionsConfig {
    /// Exponents for (aInc) and (aDec); default to the declared bounds.
    pub inc: Option<f64>,
    pub dec: Option<f64>,
    pub t_min: f64,
    pub t_max: f64,
    pub t_points: usize,
    /// Largest sampled (A1) radius; defaults to a quarter of the diameter.
    pub radius: Option<f64>,
    pub levels: usize,
    pub modes: ConditionModes,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityConfig {
    /// Compact set whose capacity relative to the domain is computed.
    pub set: Option<Shape>,
    pub expected: Option<f64>,
    pub expected_tol: f64,
    pub boundary_point: Option<Point>,
    pub radii: Vec<f64>,
    pub fat_threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub phi: PhiConfig,
    pub domain: DomainConfig,
    pub boundary: Expr,
    pub obstacle: Option<Expr>,
    pub solver: SolverConfig,
    pub diagnostics: DiagnosticsConfig,
    pub conditions: ConditionsConfig,
    pub capacity: Option<CapacityConfig>,
    pub output: PathBuf,
    pub seed: Option<u64>,
    /// Directory that relative paths are resolved against.
    pub base_dir: PathBuf,
}

fn parse_shape(section: &mut Section) -> Result<Option<Shape>> {
    let Some((tag, line, column)) = section.word("shape") else {
        return Ok(None);
    };
    let origin = [0.0, 0.0];
    let need = |s: &mut Section, key: &str| -> Result<f64> {
        let e = s.require(key)?;
        constant(&e.value, e.line, e.value_column)
    };
    let need_point = |s: &mut Section, key: &str| -> Result<Point> {
        let e = s.require(key)?;
        point(&e.value, e.line, e.value_column, 2)
    };
    let shape = match tag.as_str() {
        "interval" => Shape::Interval {
            a: need(section, "a")?,
            b: need(section, "b")?,
        },
        "rectangle" => Shape::Rectangle {
            min: need_point(section, "min")?,
            max: need_point(section, "max")?,
        },
        "disk" => Shape::Disk {
            center: section.point("center", 2)?.unwrap_or(origin),
            radius: need(section, "radius")?,
        },
        "lshape" => Shape::LShape {
            center: section.point("center", 2)?.unwrap_or(origin),
            half: need(section, "half")?,
        },
        "slit_disk" => Shape::DiskMinusSlit {
            center: section.point("center", 2)?.unwrap_or(origin),
            radius: need(section, "radius")?,
        },
        "cusp" => Shape::SquareMinusCusp {
            min: need_point(section, "min")?,
            max: need_point(section, "max")?,
            tip: need_point(section, "tip")?,
            coeff: need(section, "coeff")?,
            power: need(section, "power")?,
        },
        other => {
            return Err(parse_error(
                line,
                column,
                format!("unknown shape `{other}`; expected interval, rectangle, disk, lshape, slit_disk or cusp"),
            ))
        }
    };
    Ok(Some(shape))
}

impl ExperimentConfig {
    /// Reads a config file; relative paths inside it resolve against its
    /// directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base)
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut raw = raw_sections(text)?;
        let mut take = |name: &str| {
            Section::new(
                raw.iter()
                    .position(|s| s.name == name)
                    .map(|i| raw.remove(i)),
                name,
            )
        };

        let mut domain = take("domain");
        if !domain.present() {
            return Err(parse_error(1, 1, "missing [domain] section"));
        }
        let shape_line = domain.line;
        let shape = parse_shape(&mut domain)?
            .ok_or_else(|| parse_error(shape_line, 1, "[domain] needs `shape`"))?;
        let dim = shape.dim();
        let h = domain
            .positive("h")?
            .ok_or_else(|| parse_error(shape_line, 1, "[domain] needs `h`"))?;
        domain.finish()?;

        let mut phi = take("phi");
        if !phi.present() {
            return Err(parse_error(1, 1, "missing [phi] section"));
        }
        let (family, fline, fcol) = phi
            .word("family")
            .ok_or_else(|| parse_error(phi.line, 1, "[phi] needs `family`"))?;
        let phi_config = match family.as_str() {
            "power" => PhiConfig::Power {
                p: phi
                    .number("p")?
                    .ok_or_else(|| parse_error(fline, 1, "power needs `p`"))?,
            },
            "double_phase" => PhiConfig::DoublePhase {
                p: phi
                    .number("p")?
                    .ok_or_else(|| parse_error(fline, 1, "double_phase needs `p`"))?,
                q: phi
                    .number("q")?
                    .ok_or_else(|| parse_error(fline, 1, "double_phase needs `q`"))?,
                a: coefficient(&mut phi, "a", dim)?
                    .ok_or_else(|| parse_error(fline, 1, "double_phase needs `a`"))?,
            },
            "variable_exponent" => PhiConfig::VariableExponent {
                exponent: coefficient(&mut phi, "exponent", dim)?
                    .ok_or_else(|| parse_error(fline, 1, "variable_exponent needs `exponent`"))?,
                p_lower: phi
                    .number("p_lower")?
                    .ok_or_else(|| parse_error(fline, 1, "variable_exponent needs `p_lower`"))?,
                q_upper: phi
                    .number("q_upper")?
                    .ok_or_else(|| parse_error(fline, 1, "variable_exponent needs `q_upper`"))?,
            },
            other => {
                return Err(parse_error(
                    fline,
                    fcol,
                    format!(
                    "unknown family `{other}`; expected power, double_phase or variable_exponent"
                ),
                ))
            }
        };
        phi.finish()?;

        let mut problem = take("problem");
        let boundary = problem
            .expr("boundary", dim)?
            .ok_or_else(|| parse_error(problem.line.max(1), 1, "[problem] needs `boundary`"))?;
        let obstacle = match problem.take("obstacle") {
            Some(e) if e.value == "none" => None,
            Some(e) => Some(expression(&e, dim)?),
            None => None,
        };
        problem.finish()?;

        let mut solver = take("solver");
        let method = match solver.word("method") {
            None => Method::ProjectedNewton,
            Some((m, line, column)) => match m.as_str() {
                "newton" => Method::ProjectedNewton,
                "gradient" => Method::ProjectedGradient,
                "gauss_seidel" => Method::GaussSeidel,
                other => {
                    return Err(parse_error(
                        line,
                        column,
                        format!(
                            "unknown method `{other}`; expected newton, gradient or gauss_seidel"
                        ),
                    ))
                }
            },
        };
        let solver_config = SolverConfig {
            method,
            tol: solver.positive("tol")?.unwrap_or(1e-9),
            max_iters: solver.integer("max_iters")?.unwrap_or(500) as usize,
            gauss_seidel_sweeps: solver.integer("sweeps")?.unwrap_or(0) as usize,
            contact_tol: solver.number("contact_tol")?,
        };
        solver.finish()?;

        let mut diag = take("diagnostics");
        let checks = match diag.take("checks") {
            None => Vec::new(),
            Some(e) => {
                Check::parse_list(&e.value).map_err(|m| parse_error(e.line, e.value_column, m))?
            }
        };
        let reference = match diag.take("reference") {
            None => None,
            Some(e) => match e.value.strip_prefix("file:") {
                Some(path) if !path.trim().is_empty() => {
                    Some(Reference::File(PathBuf::from(path.trim())))
                }
                Some(_) => return Err(parse_error(e.line, e.value_column, "`file:` needs a path")),
                None => Some(Reference::Expr(expression(&e, dim)?)),
            },
        };
        let diagnostics = DiagnosticsConfig {
            checks,
            reference,
            reference_tol: diag.positive("reference_tol")?.unwrap_or(1e-6),
            centers: diag.points("centers", dim)?,
            radii: diag
                .positive_list("radii")?
                .unwrap_or_else(|| vec![0.2, 0.1, 0.05, 0.025]),
            level: diag.number("level")?,
            boundary_centers: diag.points("boundary_centers", dim)?,
            boundary_radii: diag
                .positive_list("boundary_radii")?
                .unwrap_or_else(|| vec![0.16, 0.08, 0.04, 0.02]),
            max_spread: diag.positive("max_spread")?.unwrap_or(10.0),
            epsilon: diag
                .positive_list("epsilon")?
                .unwrap_or_else(|| vec![0.25, 0.5, 1.0, 1.5, 3.0]),
            levels: diag.integer("levels")?.unwrap_or(3) as usize,
            boundary_point: diag.point("boundary_point", dim)?,
            continuity_radii: diag.positive_list("continuity_radii")?.unwrap_or_default(),
            continuity_tol: diag.number_or("continuity_tol", 1e-3)?,
            fat_threshold: diag.number_or("fat_threshold", 0.05)?,
        };
        diag.finish()?;

        let mut cond = take("conditions");
        let modes = match cond.word("mode") {
            None => ConditionModes::A1,
            Some((m, line, column)) => match m.as_str() {
                "a1" => ConditionModes::A1,
                "a1n" => ConditionModes::A1n,
                "both" => ConditionModes::Both,
                other => {
                    return Err(parse_error(
                        line,
                        column,
                        format!("unknown mode `{other}`; expected a1, a1n or both"),
                    ))
                }
            },
        };
        let conditions = ConditionsConfig {
            inc: cond.positive("inc")?,
            dec: cond.positive("dec")?,
            t_min: cond.positive("t_min")?.unwrap_or(1e-4),
            t_max: cond.positive("t_max")?.unwrap_or(1e4),
            t_points: cond.integer("t_points")?.unwrap_or(81) as usize,
            radius: cond.positive("radius")?,
            levels: cond.integer("levels")?.unwrap_or(3) as usize,
            modes,
        };
        cond.finish()?;

        let mut cap = take("capacity");
        let capacity = if cap.present() {
            let settings = CapacityConfig {
                set: parse_shape(&mut cap)?,
                expected: cap.number("expected")?,
                expected_tol: cap.positive("expected_tol")?.unwrap_or(0.05),
                boundary_point: cap.point("boundary_point", dim)?,
                radii: cap.positive_list("radii")?.unwrap_or_default(),
                fat_threshold: cap.number_or("fat_threshold", 0.05)?,
            };
            if settings.set.as_ref().is_some_and(|s| s.dim() != dim) {
                return Err(parse_error(
                    cap.line,
                    1,
                    "[capacity] shape dimension differs from the domain",
                ));
            }
            cap.finish()?;
            Some(settings)
        } else {
            None
        };

        let mut output = take("output");
        let out_dir = output
            .word("dir")
            .map(|w| PathBuf::from(w.0))
            .unwrap_or_else(|| PathBuf::from("out"));
        output.finish()?;

        let mut run = take("run");
        let seed = run.integer("seed")?;
        run.finish()?;

        Ok(Self {
            phi: phi_config,
            domain: DomainConfig { shape, h },
            boundary,
            obstacle,
            solver: solver_config,
            diagnostics,
            conditions,
            capacity,
            output: out_dir,
            seed,
            base_dir: base_dir.to_path_buf(),
        })
    }

    /// `path` relative to the config file's directory unless absolute.
    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }
}
