//! Text serialization: the flat grid format for fields and domains, and the
//! `key = value` sidecar that accompanies solutions.
//!
//! Grid format:
//!
//! ```text
//! n 2
//! dims 3 2
//! h 0.5
//! origin 0 0
//! values
//! 0 0.5 1
//! 0.5 1 1.5
//! ```
//!
//! One line per lattice row, `dims[0]` values each. Blank lines and lines
//! starting with `#` are ignored. Floats are written in shortest round-trip
//! form, so writing is deterministic and reading restores exact values.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::grid::{Domain, Lattice, ScalarField};
use crate::solver::Solution;

fn parse_error(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

/// Non-blank, non-comment lines with their 1-based line numbers and the
/// 1-based column and text of each whitespace-separated token.
fn tokens(text: &str) -> impl Iterator<Item = (usize, Vec<(usize, &str)>)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let trimmed = line.trim_start();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            return None;
        }
        let mut out = Vec::new();
        let mut start = None;
        for (pos, ch) in line
            .char_indices()
            .chain(std::iter::once((line.len(), ' ')))
        {
            match (ch.is_whitespace(), start) {
                (false, None) => start = Some(pos),
                (true, Some(s)) => {
                    out.push((line[..s].chars().count() + 1, &line[s..pos]));
                    start = None;
                }
                _ => {}
            }
        }
        Some((i + 1, out))
    })
}

fn number<T: std::str::FromStr>(
    line: usize,
    (column, text): (usize, &str),
    what: &str,
) -> Result<T> {
    text.parse()
        .map_err(|_| parse_error(line, column, format!("expected {what}, found `{text}`")))
}

pub fn write_grid(field: &ScalarField) -> String {
    let l = field.lattice();
    let mut out = String::new();
    let join = |v: &mut String, items: Vec<String>| v.push_str(&items.join(" "));
    let _ = writeln!(out, "n {}", l.dim());
    out.push_str("dims ");
    join(&mut out, l.dims().iter().map(|d| d.to_string()).collect());
    let _ = write!(out, "\nh {}\norigin ", l.h());
    join(&mut out, l.origin().iter().map(|o| o.to_string()).collect());
    out.push_str("\nvalues\n");
    for row in field.values().chunks(l.dims()[0]) {
        join(&mut out, row.iter().map(|v| v.to_string()).collect());
        out.push('\n');
    }
    out
}

struct Header<'a, I: Iterator<Item = (usize, Vec<(usize, &'a str)>)>> {
    lines: I,
    last_line: usize,
}

impl<'a, I: Iterator<Item = (usize, Vec<(usize, &'a str)>)>> Header<'a, I> {
    /// The tokens after `key` on the next line.
    fn entry(&mut self, key: &str) -> Result<(usize, Vec<(usize, &'a str)>)> {
        let (line, toks) = self
            .lines
            .next()
            .ok_or_else(|| parse_error(self.last_line + 1, 1, format!("missing `{key}` line")))?;
        self.last_line = line;
        match toks.first() {
            Some(&(_, k)) if k == key => Ok((line, toks[1..].to_vec())),
            Some(&(col, k)) => Err(parse_error(
                line,
                col,
                format!("expected `{key}`, found `{k}`"),
            )),
            None => Err(parse_error(line, 1, format!("expected `{key}`"))),
        }
    }

    fn values<T: std::str::FromStr>(
        &mut self,
        key: &str,
        count: usize,
        what: &str,
    ) -> Result<(usize, Vec<T>)> {
        let (line, toks) = self.entry(key)?;
        if toks.len() != count {
            return Err(parse_error(
                line,
                toks.get(count).map_or(1, |t| t.0),
                format!("`{key}` takes {count} value(s), got {}", toks.len()),
            ));
        }
        let v = toks
            .iter()
            .map(|t| number(line, *t, what))
            .collect::<Result<Vec<T>>>()?;
        Ok((line, v))
    }
}

/// Maximum number of nodes accepted by [`read_grid`].
pub const MAX_GRID_NODES: usize = 1 << 24;

pub fn read_grid(text: &str) -> Result<ScalarField> {
    let mut header = Header {
        lines: tokens(text),
        last_line: 0,
    };
    let (line, n) = header.values::<usize>("n", 1, "the dimension")?;
    let dim = n[0];
    if dim != 1 && dim != 2 {
        return Err(parse_error(
            line,
            3,
            format!("dimension must be 1 or 2, got {dim}"),
        ));
    }
    let (line, dims) = header.values::<usize>("dims", dim, "a node count")?;
    if dims.iter().any(|&d| d < 2)
        || dims
            .iter()
            .try_fold(1usize, |a, &d| a.checked_mul(d))
            .is_none_or(|t| t > MAX_GRID_NODES)
    {
        return Err(parse_error(
            line,
            1,
            format!("node counts must be at least 2 with at most {MAX_GRID_NODES} nodes"),
        ));
    }
    let (line, h) = header.values::<f64>("h", 1, "the cell size")?;
    let (origin_line, origin) = header.values::<f64>("origin", dim, "a coordinate")?;
    let lattice = Lattice::new(dim, &dims, h[0], &origin)
        .map_err(|e| parse_error(line.max(origin_line), 1, e.to_string()))?;
    let (line, rest) = header.entry("values")?;
    if let Some(&(col, _)) = rest.first() {
        return Err(parse_error(line, col, "`values` stands on its own line"));
    }
    let row_len = dims[0];
    let rows = lattice.len() / row_len;
    let mut values = Vec::with_capacity(lattice.len().min(text.len()));
    for r in 0..rows {
        let (line, toks) = header.lines.next().ok_or_else(|| {
            parse_error(
                header.last_line + 1,
                1,
                format!("missing value row {} of {rows}", r + 1),
            )
        })?;
        header.last_line = line;
        if toks.len() != row_len {
            return Err(parse_error(
                line,
                toks.get(row_len).map_or(1, |t| t.0),
                format!("row needs {row_len} values, got {}", toks.len()),
            ));
        }
        for t in toks {
            let v: f64 = number(line, t, "a value")?;
            if !v.is_finite() {
                return Err(parse_error(line, t.0, "values must be finite"));
            }
            values.push(v);
        }
    }
    if let Some((line, toks)) = header.lines.next() {
        return Err(parse_error(
            line,
            toks[0].0,
            "trailing data after the last row",
        ));
    }
    ScalarField::new(lattice, values)
}

/// The inside mask as a grid of 0/1 values.
pub fn write_domain(domain: &Domain) -> String {
    let mask = domain
        .inside_mask()
        .iter()
        .map(|&b| if b { 1.0 } else { 0.0 })
        .collect();
    write_grid(&ScalarField::new(domain.lattice().clone(), mask).expect("mask matches its lattice"))
}

/// Reads a 0/1 mask grid; any other value is rejected.
pub fn read_domain(text: &str) -> Result<Domain> {
    let field = read_grid(text)?;
    if let Some(v) = field.values().iter().find(|&&v| v != 0.0 && v != 1.0) {
        return Err(Error::Argument(format!(
            "domain masks hold 0 or 1, found {v}"
        )));
    }
    let mask = field.values().iter().map(|&v| v == 1.0).collect();
    Domain::from_mask(field.lattice().clone(), mask)
}

/// CSV with columns `x,y,value` for every lattice node (`y = 0` in 1-D).
pub fn field_to_csv(field: &ScalarField) -> Result<String> {
    let l = field.lattice();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["x", "y", "value"])?;
    for (k, v) in field.values().iter().enumerate() {
        let p = l.position(k);
        w.write_record([p[0].to_string(), p[1].to_string(), v.to_string()])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

/// Ordered `key = value` metadata. Keys are unique and made of ASCII
/// letters, digits, `_`, `-` and `.`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Sidecar {
    entries: Vec<(String, String)>,
}

fn valid_key(key: &str) -> bool {
    !key.is_empty()
        && key
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

impl Sidecar {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sets `key`, replacing an earlier value in place.
    pub fn set(&mut self, key: &str, value: impl ToString) -> Result<()> {
        if !valid_key(key) {
            return Err(Error::Argument(format!("invalid sidecar key `{key}`")));
        }
        let value = value.to_string();
        if value.contains('\n') || value.contains('\r') {
            return Err(Error::Argument(format!(
                "sidecar value for `{key}` spans lines"
            )));
        }
        let value = value.trim().to_string();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(entry) => entry.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>> {
        self.get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| Error::Argument(format!("`{key}` is not a number: `{v}`")))
            })
            .transpose()
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut out = Self::new();
        for (i, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let indent = line.len() - line.trim_start().len();
            let eq = line
                .find('=')
                .ok_or_else(|| parse_error(i + 1, indent + 1, "expected `key = value`"))?;
            let key = line[..eq].trim();
            if !valid_key(key) {
                return Err(parse_error(
                    i + 1,
                    indent + 1,
                    format!("invalid key `{key}`"),
                ));
            }
            if out.get(key).is_some() {
                return Err(parse_error(
                    i + 1,
                    indent + 1,
                    format!("duplicate key `{key}`"),
                ));
            }
            out.entries
                .push((key.to_string(), line[eq + 1..].trim().to_string()));
        }
        Ok(out)
    }

    /// The standard entries for a solution.
    pub fn for_solution(solution: &Solution) -> Self {
        let mut out = Self::new();
        let entries: [(&str, String); 6] = [
            ("energy", solution.energy.to_string()),
            ("iterations", solution.iterations.to_string()),
            ("converged", solution.converged.to_string()),
            ("kkt_residual", solution.kkt_residual.to_string()),
            ("contact_nodes", solution.contact.len().to_string()),
            ("contact_tol", solution.contact_tol.to_string()),
        ];
        for (k, v) in entries {
            out.set(k, v).expect("fixed keys are valid");
        }
        out
    }
}

impl std::fmt::Display for Sidecar {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Shape;

    #[test]
    fn grid_round_trip_is_exact() {
        let d = Domain::from_shape(
            &Shape::Disk {
                center: [0.1, 0.0],
                radius: 0.5,
            },
            1.0 / 16.0,
        )
        .unwrap();
        let f = ScalarField::from_fn(d.lattice(), |x| (3.0 * x[0]).sin() / 7.0 + x[1]).unwrap();
        let text = write_grid(&f);
        let back = read_grid(&text).unwrap();
        assert_eq!(back, f);
        assert_eq!(write_grid(&back), text);
    }

    #[test]
    fn reads_the_documented_example() {
        let f =
            read_grid("n 2\ndims 3 2\nh 0.5\norigin 0 0\nvalues\n0 0.5 1\n0.5 1 1.5\n").unwrap();
        assert_eq!(f.values(), &[0.0, 0.5, 1.0, 0.5, 1.0, 1.5]);
        assert_eq!(f.lattice().position(4), [0.5, 0.5]);
    }

    #[test]
    fn one_dimensional_grid() {
        let f =
            read_grid("# interval\nn 1\ndims 4\nh 0.25\norigin -0.25\nvalues\n1 2 3 4\n").unwrap();
        assert_eq!(f.lattice().dim(), 1);
        assert_eq!(f.get(3), 4.0);
    }

    #[test]
    fn errors_carry_positions() {
        let cases = [
            ("n 3\n", 1, 3),
            ("n 2\ndims 3\n", 2, 1),
            (
                "n 2\ndims 3 2\nh 0.5\norigin 0 0\nvalues\n0 0.5 x\n0 0 0\n",
                6,
                7,
            ),
            (
                "n 2\ndims 3 2\nh 0.5\norigin 0 0\nvalues\n0 0.5 1 2\n",
                6,
                9,
            ),
            ("n 2\ndims 3 2\nh 0.5\norigin 0 0\nvalues\n0 0 0\n", 7, 1),
            ("n 2\nsize 3 2\n", 2, 1),
            ("n 2\ndims 3 2\nh -1\norigin 0 0\nvalues\n", 4, 1),
            ("n 1\ndims 2\nh 1\norigin 0\nvalues\n1 inf\n", 6, 3),
            ("n 1\ndims 2\nh 1\norigin 0\nvalues\n1 1\n1\n", 7, 1),
        ];
        for (text, line, column) in cases {
            match read_grid(text) {
                Err(Error::Parse {
                    line: l, column: c, ..
                }) => assert_eq!((l, c), (line, column), "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn domain_round_trip() {
        let d = Domain::from_shape(
            &Shape::LShape {
                center: [0.0, 0.0],
                half: 1.0,
            },
            0.25,
        )
        .unwrap();
        let back = read_domain(&write_domain(&d)).unwrap();
        assert_eq!(back.inside_nodes(), d.inside_nodes());
        assert_eq!(back.halo(), d.halo());
        assert!(read_domain("n 1\ndims 2\nh 1\norigin 0\nvalues\n0 2\n").is_err());
    }

    #[test]
    fn sidecar_round_trip() {
        let mut s = Sidecar::new();
        s.set("energy", 1.25).unwrap();
        s.set("phi.family", "double_phase").unwrap();
        s.set("energy", 2.5).unwrap();
        assert!(s.set("bad key", 1).is_err());
        let text = s.to_string();
        assert_eq!(text, "energy = 2.5\nphi.family = double_phase\n");
        let back = Sidecar::parse(&format!("# header\n{text}")).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.get_f64("energy").unwrap(), Some(2.5));
        assert!(back.get_f64("phi.family").is_err());
    }

    #[test]
    fn sidecar_errors() {
        for (text, line) in [("a = 1\nb\n", 2), ("a = 1\na = 2\n", 2), (" = 3\n", 1)] {
            match Sidecar::parse(text) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line),
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn csv_lists_every_node() {
        let f = read_grid("n 1\ndims 3\nh 0.5\norigin 0\nvalues\n1 2 3\n").unwrap();
        assert_eq!(
            field_to_csv(&f).unwrap(),
            "x,y,value\n0,0,1\n0.5,0,2\n1,0,3\n"
        );
    }
}
