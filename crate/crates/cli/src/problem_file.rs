//! Plain-text problem files.
//!
//! ```text
//! # Running example with a known mean.
//! [variables]
//! rho
//!
//! [matrix]
//! 2
//! rho - 1, 0
//! 0, -1
//!
//! [delta]
//! rho in [0, 1]
//!
//! [region]
//! left_half_plane_closure
//!
//! [moments]
//! E[rho] = 0.5
//!
//! [options]
//! tau = 2
//! ```
//!
//! `#` starts a comment. Matrix entries are separated by commas or line
//! breaks. `[delta]` takes `name in [lo, hi]` bounds and constraints
//! `lhs >= rhs`, `lhs <= rhs`, `lhs = rhs`; `[region]` takes a preset name or
//! constraints over `lre` and `lim`. `[parameters]` declares named constants
//! (`k = 0.5`) that may appear anywhere in the file; sweeps and bisection
//! substitute other values for them.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::path::Path;

use dstab_core::poly::{parse_polynomial, PolyError, Polynomial};
use dstab_core::problem::{
    DStabilityProblem, EigenSpace, LambdaBound, MomentConstraint, MomentRelation, UncertainMatrix,
};
use dstab_core::relax::EqualityEncoding;
use dstab_core::sets::{lambda_vars, Constraint, RegionPreset, Relation, SemialgebraicSet, StabilityRegionComplement};

#[derive(Debug, Clone, PartialEq)]
pub struct FileError {
    pub line: usize,
    pub column: usize,
    pub section: Option<String>,
    pub message: String,
}

impl fmt::Display for FileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line > 0 {
            write!(f, "line {}, column {}", self.line, self.column)?;
        } else {
            write!(f, "problem file")?;
        }
        if let Some(s) = &self.section {
            write!(f, " [{s}]")?;
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for FileError {}

/// Run settings stored alongside the problem. All optional.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FileOptions {
    pub tau: Option<usize>,
    pub tau_max: Option<usize>,
    pub margin: Option<f64>,
    pub feasibility_tol: Option<f64>,
    pub gap_tol: Option<f64>,
    pub max_iterations: Option<usize>,
    pub encoding: Option<EqualityEncoding>,
    pub rescale: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemFile {
    pub problem: DStabilityProblem,
    pub options: FileOptions,
    /// Declared parameters with their default values, in file order.
    pub parameters: Vec<(String, f64)>,
}

/// A source line with its 1-based number and the column of its first byte.
#[derive(Debug, Clone)]
struct Line<'a> {
    number: usize,
    text: &'a str,
    column: usize,
}

struct Ctx<'a> {
    section: &'a str,
}

impl Ctx<'_> {
    fn err(&self, line: &Line, offset: usize, message: impl Into<String>) -> FileError {
        FileError {
            line: line.number,
            column: line.column + offset,
            section: Some(self.section.to_string()),
            message: message.into(),
        }
    }

    fn whole(&self, message: impl Into<String>) -> FileError {
        FileError {
            line: 0,
            column: 0,
            section: Some(self.section.to_string()),
            message: message.into(),
        }
    }

    fn poly(&self, line: &Line, offset: usize, text: &str, vars: &[String]) -> Result<Polynomial, FileError> {
        parse_polynomial(text, vars).map_err(|e| {
            let pos = match &e {
                PolyError::Syntax { pos, .. }
                | PolyError::UnknownIdentifier { pos, .. }
                | PolyError::BadExponent { pos, .. } => *pos,
                _ => 0,
            };
            let lead = text.len() - text.trim_start().len();
            self.err(line, offset + pos.max(lead), e.to_string())
        })
    }

    fn constant(&self, line: &Line, offset: usize, text: &str) -> Result<f64, FileError> {
        eval_constant(text).map_err(|(pos, msg)| self.err(line, offset + pos, msg))
    }
}

const SECTIONS: [&str; 7] = ["variables", "parameters", "matrix", "delta", "region", "moments", "options"];

/// Parses a problem file, with parameters at their declared defaults.
pub fn parse_problem(text: &str) -> Result<ProblemFile, FileError> {
    parse_with(text, &BTreeMap::new())
}

/// Parses with some parameters overridden.
pub fn parse_with(text: &str, overrides: &BTreeMap<String, f64>) -> Result<ProblemFile, FileError> {
    let sections = split_sections(text)?;
    let get = |name: &str| sections.get(name).map(|v| v.as_slice()).unwrap_or(&[]);

    // Parameters first: they are substituted everywhere else.
    let ctx = Ctx { section: "parameters" };
    let mut parameters = Vec::new();
    for line in get("parameters") {
        let (name, value) = split_assignment(&ctx, line)?;
        if !is_identifier(name) {
            return Err(ctx.err(line, 0, format!("invalid parameter name `{name}`")));
        }
        if parameters.iter().any(|(n, _)| n == name) {
            return Err(ctx.err(line, 0, format!("parameter `{name}` declared twice")));
        }
        let offset = line.text.find('=').map_or(0, |i| i + 1);
        let v = ctx.constant(line, offset, value)?;
        parameters.push((name.to_string(), v));
    }
    for name in overrides.keys() {
        if !parameters.iter().any(|(n, _)| n == name) {
            return Err(FileError {
                line: 0,
                column: 0,
                section: Some("parameters".into()),
                message: format!("unknown parameter `{name}`"),
            });
        }
    }
    let values: Vec<(String, f64)> = parameters
        .iter()
        .map(|(n, v)| (n.clone(), overrides.get(n).copied().unwrap_or(*v)))
        .collect();
    let subst = |s: &str| substitute(s, &values);

    let ctx = Ctx { section: "variables" };
    let mut variables: Vec<String> = Vec::new();
    for line in get("variables") {
        for name in line.text.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()) {
            let col = line.text.find(name).unwrap_or(0);
            if !is_identifier(name) {
                return Err(ctx.err(line, col, format!("invalid variable name `{name}`")));
            }
            if variables.iter().any(|v| v == name) || values.iter().any(|(n, _)| n == name) {
                return Err(ctx.err(line, col, format!("`{name}` declared twice")));
            }
            variables.push(name.to_string());
        }
    }
    if variables.is_empty() {
        return Err(ctx.whole("no variables declared"));
    }

    let matrix = parse_matrix(get("matrix"), &variables, &subst)?;
    let delta = parse_delta(get("delta"), &variables, &subst)?;
    let region = parse_region(get("region"), &subst)?;

    let ctx = Ctx { section: "problem" };
    let mut problem = DStabilityProblem::new(matrix, delta, region).map_err(|e| ctx.whole(e.to_string()))?;

    let ctx = Ctx { section: "moments" };
    for line in get("moments") {
        let c = parse_moment(&ctx, line, &variables, &subst)?;
        problem.add_moment(c).map_err(|e| ctx.err(line, 0, e.to_string()))?;
    }

    let ctx = Ctx { section: "options" };
    let mut options = FileOptions::default();
    let mut eigen: Option<EigenSpace> = None;
    let mut force_real = false;
    for line in get("options") {
        let (key, value) = split_assignment(&ctx, line)?;
        let value = subst(value);
        let bad = |what: &str| ctx.err(line, 0, format!("`{key}` expects {what}, got `{value}`"));
        let value = value.trim();
        match key {
            "eigen_space" => {
                eigen = Some(match value {
                    "real" => EigenSpace::Real,
                    "complex" => EigenSpace::Complex,
                    _ => return Err(bad("real or complex")),
                })
            }
            "force_real" => force_real = value.parse().map_err(|_| bad("true or false"))?,
            "lambda_bound" => {
                let b = match value {
                    "auto" => LambdaBound::Auto,
                    "off" => LambdaBound::Off,
                    v => LambdaBound::Radius(v.parse().map_err(|_| bad("auto, off or a radius"))?),
                };
                problem = problem.with_lambda_bound(b);
            }
            "tau" => options.tau = Some(value.parse().map_err(|_| bad("an integer"))?),
            "tau_max" => options.tau_max = Some(value.parse().map_err(|_| bad("an integer"))?),
            "margin" => options.margin = Some(value.parse().map_err(|_| bad("a number"))?),
            "feasibility_tol" => options.feasibility_tol = Some(value.parse().map_err(|_| bad("a number"))?),
            "gap_tol" => options.gap_tol = Some(value.parse().map_err(|_| bad("a number"))?),
            "max_iterations" => options.max_iterations = Some(value.parse().map_err(|_| bad("an integer"))?),
            "encoding" => {
                options.encoding = Some(match value {
                    "zero_localizer" => EqualityEncoding::ZeroLocalizer,
                    "inequality_pair" => EqualityEncoding::InequalityPair,
                    _ => return Err(bad("zero_localizer or inequality_pair")),
                })
            }
            "rescale" => options.rescale = Some(value.parse().map_err(|_| bad("true or false"))?),
            _ => return Err(ctx.err(line, 0, format!("unknown option `{key}`"))),
        }
    }
    if eigen.is_some() || force_real {
        let space = eigen.unwrap_or(problem.eigen_space());
        if space == EigenSpace::Real && !problem.matrix().is_symmetric() && !force_real {
            return Err(ctx.whole("eigen_space = real on a non-symmetric matrix needs force_real = true"));
        }
        problem = problem.with_eigen_space(space, force_real);
    }
    Ok(ProblemFile {
        problem,
        options,
        parameters,
    })
}

pub fn load_problem(path: &Path) -> Result<ProblemFile, LoadError> {
    let text = std::fs::read_to_string(path).map_err(|e| LoadError::Io(path.display().to_string(), e))?;
    parse_problem(&text).map_err(|e| LoadError::Parse(path.display().to_string(), e))
}

#[derive(Debug)]
pub enum LoadError {
    Io(String, std::io::Error),
    Parse(String, FileError),
}

impl fmt::Display for LoadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LoadError::Io(p, e) => write!(f, "cannot read {p}: {e}"),
            LoadError::Parse(p, e) => write!(f, "{p}: {e}"),
        }
    }
}

impl std::error::Error for LoadError {}

fn split_sections(text: &str) -> Result<BTreeMap<String, Vec<Line<'_>>>, FileError> {
    let mut out: BTreeMap<String, Vec<Line>> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap_or("");
        let trimmed = body.trim();
        if trimmed.is_empty() {
            continue;
        }
        let column = body.len() - body.trim_start().len() + 1;
        let number = i + 1;
        if let Some(name) = trimmed.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let name = name.trim().to_string();
            if !SECTIONS.contains(&name.as_str()) {
                return Err(FileError {
                    line: number,
                    column,
                    section: None,
                    message: format!("unknown section [{name}]"),
                });
            }
            if out.contains_key(&name) {
                return Err(FileError {
                    line: number,
                    column,
                    section: Some(name.clone()),
                    message: "section appears twice".into(),
                });
            }
            out.insert(name.clone(), Vec::new());
            current = Some(name);
            continue;
        }
        let Some(sec) = &current else {
            return Err(FileError {
                line: number,
                column,
                section: None,
                message: "content before the first section".into(),
            });
        };
        out.get_mut(sec).expect("inserted on header").push(Line {
            number,
            text: trimmed,
            column,
        });
    }
    for required in ["variables", "matrix", "delta", "region"] {
        if !out.contains_key(required) {
            return Err(FileError {
                line: 0,
                column: 0,
                section: Some(required.into()),
                message: "missing section".into(),
            });
        }
    }
    Ok(out)
}

fn is_identifier(s: &str) -> bool {
    let mut c = s.chars();
    matches!(c.next(), Some(ch) if ch.is_ascii_alphabetic() || ch == '_')
        && c.all(|ch| ch.is_ascii_alphanumeric() || ch == '_')
}

fn split_assignment<'a>(ctx: &Ctx, line: &Line<'a>) -> Result<(&'a str, &'a str), FileError> {
    let (k, v) = line
        .text
        .split_once('=')
        .ok_or_else(|| ctx.err(line, 0, "expected `name = value`"))?;
    Ok((k.trim(), v.trim()))
}

/// Replaces whole-word occurrences of each parameter by its value.
fn substitute(text: &str, values: &[(String, f64)]) -> String {
    if values.is_empty() {
        return text.to_string();
    }
    let mut out = String::with_capacity(text.len());
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let starts_word = (c.is_ascii_alphabetic() || c == '_')
            && (i == 0 || !(bytes[i - 1] as char).is_ascii_alphanumeric() && bytes[i - 1] != b'_' && bytes[i - 1] != b'.');
        if starts_word {
            let end = text[i..]
                .find(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '_'))
                .map_or(text.len(), |e| i + e);
            let word = &text[i..end];
            match values.iter().find(|(n, _)| n == word) {
                Some((_, v)) => {
                    let _ = write!(out, "({v:?})");
                }
                None => out.push_str(word),
            }
            i = end;
        } else {
            out.push(c);
            i += 1;
        }
    }
    out
}

fn parse_matrix(
    lines: &[Line],
    vars: &[String],
    subst: &dyn Fn(&str) -> String,
) -> Result<UncertainMatrix, FileError> {
    let ctx = Ctx { section: "matrix" };
    let Some((first, rest)) = lines.split_first() else {
        return Err(ctx.whole("expected the dimension and the entries"));
    };
    let mut first_tokens = first.text.splitn(2, [',', ' ', '\t']);
    let n_text = first_tokens.next().unwrap_or("");
    let n: usize = n_text
        .parse()
        .map_err(|_| ctx.err(first, 0, format!("expected the matrix dimension, got `{n_text}`")))?;
    if n == 0 {
        return Err(ctx.err(first, 0, "dimension must be positive"));
    }
    let mut pieces: Vec<(&Line, usize, &str)> = Vec::new();
    if let Some(tail) = first_tokens.next() {
        if !tail.trim().is_empty() {
            return Err(ctx.err(first, n_text.len(), "put the entries on the lines after the dimension"));
        }
    }
    for line in rest {
        let mut offset = 0;
        for part in line.text.split(',') {
            if !part.trim().is_empty() {
                pieces.push((line, offset, part));
            }
            offset += part.len() + 1;
        }
    }
    if pieces.len() != n * n {
        let at = pieces.last().map(|p| p.0).unwrap_or(first);
        return Err(ctx.err(at, 0, format!("expected {} entries, found {}", n * n, pieces.len())));
    }
    let mut entries = Vec::with_capacity(n * n);
    for (line, offset, text) in pieces {
        let text = subst(text);
        entries.push(ctx.poly(line, offset, &text, vars)?);
    }
    UncertainMatrix::new(vars.to_vec(), n, entries).map_err(|e| ctx.whole(e.to_string()))
}

/// `lhs (>=|<=|=|==) rhs` as a constraint `p ≥ 0` or `p = 0` over `vars`.
fn parse_constraint(
    ctx: &Ctx,
    line: &Line,
    text: &str,
    vars: &[String],
) -> Result<Constraint, FileError> {
    for (op, rel, flip) in [
        (">=", Relation::GreaterEqualZero, false),
        ("<=", Relation::GreaterEqualZero, true),
        ("==", Relation::EqualZero, false),
        ("=", Relation::EqualZero, false),
    ] {
        if let Some(at) = text.find(op) {
            let lhs = ctx.poly(line, 0, &text[..at], vars)?;
            let rhs_off = at + op.len();
            let rhs = ctx.poly(line, rhs_off, &text[rhs_off..], vars)?;
            let p = if flip { &rhs - &lhs } else { &lhs - &rhs };
            return Ok(Constraint { poly: p, relation: rel });
        }
    }
    Err(ctx.err(line, 0, "expected a constraint with >=, <= or ="))
}

fn parse_delta(lines: &[Line], vars: &[String], subst: &dyn Fn(&str) -> String) -> Result<SemialgebraicSet, FileError> {
    let ctx = Ctx { section: "delta" };
    let mut set = SemialgebraicSet::new(vars.to_vec());
    let n = vars.len();
    for line in lines {
        let text = subst(line.text);
        if let Some((name, range)) = split_bound(&text) {
            let i = vars
                .iter()
                .position(|v| v == name)
                .ok_or_else(|| ctx.err(line, 0, format!("unknown variable `{name}`")))?;
            let inner = range
                .trim()
                .strip_prefix('[')
                .and_then(|s| s.strip_suffix(']'))
                .ok_or_else(|| ctx.err(line, 0, "expected `name in [lo, hi]`"))?;
            let (lo, hi) = inner
                .split_once(',')
                .ok_or_else(|| ctx.err(line, 0, "expected `name in [lo, hi]`"))?;
            let lo = ctx.constant(line, 0, lo)?;
            let hi = ctx.constant(line, 0, hi)?;
            if lo > hi {
                return Err(ctx.err(line, 0, format!("empty interval [{lo}, {hi}]")));
            }
            let v = Polynomial::var(n, i);
            set.push(Constraint::geq(v.add_constant(-lo)))
                .map_err(|e| ctx.err(line, 0, e.to_string()))?;
            set.push(Constraint::geq((-&v).add_constant(hi)))
                .map_err(|e| ctx.err(line, 0, e.to_string()))?;
        } else {
            let c = parse_constraint(&ctx, line, &text, vars)?;
            set.push(c).map_err(|e| ctx.err(line, 0, e.to_string()))?;
        }
    }
    if set.constraints().is_empty() {
        return Err(ctx.whole("the uncertainty set needs at least one constraint"));
    }
    Ok(set)
}

fn split_bound(text: &str) -> Option<(&str, &str)> {
    let (name, rest) = text.split_once(char::is_whitespace)?;
    let rest = rest.trim_start().strip_prefix("in")?;
    rest.starts_with(|c: char| c.is_whitespace() || c == '[')
        .then(|| (name.trim(), rest))
}

fn parse_region(lines: &[Line], subst: &dyn Fn(&str) -> String) -> Result<StabilityRegionComplement, FileError> {
    let ctx = Ctx { section: "region" };
    if let [line] = lines {
        if is_identifier(line.text) && !line.text.contains(['=', '<', '>']) {
            return line
                .text
                .parse::<RegionPreset>()
                .map(StabilityRegionComplement::preset)
                .map_err(|e| ctx.err(line, 0, e.to_string()));
        }
    }
    if lines.is_empty() {
        return Err(ctx.whole("expected a preset name or constraints over lre, lim"));
    }
    let vars = lambda_vars();
    let mut set = SemialgebraicSet::new(vars.clone());
    for line in lines {
        let c = parse_constraint(&ctx, line, &subst(line.text), &vars)?;
        set.push(c).map_err(|e| ctx.err(line, 0, e.to_string()))?;
    }
    StabilityRegionComplement::custom(set).map_err(|e| ctx.whole(e.to_string()))
}

fn parse_moment(
    ctx: &Ctx,
    line: &Line,
    vars: &[String],
    subst: &dyn Fn(&str) -> String,
) -> Result<MomentConstraint, FileError> {
    let text = subst(line.text);
    let body = text
        .strip_prefix("E[")
        .ok_or_else(|| ctx.err(line, 0, "expected `E[expr] = value`"))?;
    let close = matching_bracket(body).ok_or_else(|| ctx.err(line, 0, "unclosed `E[`"))?;
    let f = ctx.poly(line, 2, &body[..close], vars)?;
    let rest = body[close + 1..].trim();
    let (rel, value) = if let Some(v) = rest.strip_prefix("<=") {
        (MomentRelation::Le, v)
    } else if let Some(v) = rest.strip_prefix(">=") {
        (MomentRelation::Ge, v)
    } else if let Some(v) = rest.strip_prefix("==").or_else(|| rest.strip_prefix('=')) {
        (MomentRelation::Eq, v)
    } else {
        return Err(ctx.err(line, 0, "expected =, <= or >= after `E[...]`"));
    };
    let target = ctx.constant(line, 0, value)?;
    Ok(MomentConstraint::new(f, rel, target))
}

fn matching_bracket(s: &str) -> Option<usize> {
    let mut depth = 0i32;
    for (i, c) in s.char_indices() {
        match c {
            '[' => depth += 1,
            ']' if depth == 0 => return Some(i),
            ']' => depth -= 1,
            _ => {}
        }
    }
    None
}

/// Evaluates a numeric expression with `+ - * / ^` and parentheses. Errors
/// carry a byte offset into `text`.
pub fn eval_constant(text: &str) -> Result<f64, (usize, String)> {
    struct P<'a> {
        s: &'a [u8],
        i: usize,
    }
    impl P<'_> {
        fn ws(&mut self) {
            while self.i < self.s.len() && self.s[self.i].is_ascii_whitespace() {
                self.i += 1;
            }
        }
        fn peek(&mut self) -> Option<u8> {
            self.ws();
            self.s.get(self.i).copied()
        }
        fn expr(&mut self) -> Result<f64, (usize, String)> {
            let mut v = self.term()?;
            while let Some(c @ (b'+' | b'-')) = self.peek() {
                self.i += 1;
                let t = self.term()?;
                v = if c == b'+' { v + t } else { v - t };
            }
            Ok(v)
        }
        fn term(&mut self) -> Result<f64, (usize, String)> {
            let mut v = self.unary()?;
            while let Some(c @ (b'*' | b'/')) = self.peek() {
                self.i += 1;
                let t = self.unary()?;
                v = if c == b'*' { v * t } else { v / t };
            }
            Ok(v)
        }
        fn unary(&mut self) -> Result<f64, (usize, String)> {
            match self.peek() {
                Some(b'-') => {
                    self.i += 1;
                    Ok(-self.unary()?)
                }
                Some(b'+') => {
                    self.i += 1;
                    self.unary()
                }
                _ => self.power(),
            }
        }
        fn power(&mut self) -> Result<f64, (usize, String)> {
            let base = self.atom()?;
            if self.peek() == Some(b'^') {
                self.i += 1;
                let e = self.unary()?;
                return Ok(base.powf(e));
            }
            Ok(base)
        }
        fn atom(&mut self) -> Result<f64, (usize, String)> {
            match self.peek() {
                Some(b'(') => {
                    self.i += 1;
                    let v = self.expr()?;
                    if self.peek() != Some(b')') {
                        return Err((self.i, "expected `)`".into()));
                    }
                    self.i += 1;
                    Ok(v)
                }
                Some(c) if c.is_ascii_digit() || c == b'.' => {
                    let start = self.i;
                    while self.i < self.s.len() && (self.s[self.i].is_ascii_digit() || self.s[self.i] == b'.') {
                        self.i += 1;
                    }
                    if self.i < self.s.len() && matches!(self.s[self.i], b'e' | b'E') {
                        let save = self.i;
                        self.i += 1;
                        if self.i < self.s.len() && matches!(self.s[self.i], b'+' | b'-') {
                            self.i += 1;
                        }
                        let digits = self.i;
                        while self.i < self.s.len() && self.s[self.i].is_ascii_digit() {
                            self.i += 1;
                        }
                        if self.i == digits {
                            self.i = save;
                        }
                    }
                    let lit = std::str::from_utf8(&self.s[start..self.i]).unwrap_or("");
                    lit.parse().map_err(|_| (start, format!("bad number `{lit}`")))
                }
                Some(_) => Err((self.i, "expected a number".into())),
                None => Err((self.i, "unexpected end of expression".into())),
            }
        }
    }
    let mut p = P { s: text.as_bytes(), i: 0 };
    let v = p.expr()?;
    if p.peek().is_some() {
        return Err((p.i, format!("unexpected `{}`", &text[p.i..])));
    }
    if !v.is_finite() {
        return Err((0, format!("`{}` is not finite", text.trim())));
    }
    Ok(v)
}

/// Writes a problem file that [`parse_problem`] reads back to an equal value.
pub fn to_text(file: &ProblemFile) -> String {
    let p = &file.problem;
    let vars = p.variables();
    let mut s = String::new();
    let _ = writeln!(s, "[variables]\n{}\n", vars.join(" "));
    let n = p.matrix().size();
    let _ = writeln!(s, "[matrix]\n{n}");
    for i in 0..n {
        let row: Vec<String> = (0..n).map(|j| p.matrix().entry(i, j).display(vars).to_string()).collect();
        let _ = writeln!(s, "{}", row.join(", "));
    }
    let _ = writeln!(s, "\n[delta]");
    for c in p.delta().constraints() {
        let _ = writeln!(s, "{}", constraint_text(c, vars));
    }
    let _ = writeln!(s, "\n[region]");
    match p.region().preset_kind() {
        Some(preset) => {
            let _ = writeln!(s, "{}", preset.name());
        }
        None => {
            for c in p.region().set().constraints() {
                let _ = writeln!(s, "{}", constraint_text(c, &lambda_vars()));
            }
        }
    }
    if !p.moment_constraints().is_empty() {
        let _ = writeln!(s, "\n[moments]");
        for m in p.moment_constraints() {
            let _ = writeln!(s, "E[{}] {} {:?}", m.f.display(vars), m.relation.symbol(), m.target);
        }
    }
    let _ = writeln!(s, "\n[options]");
    let space = match p.eigen_space() {
        EigenSpace::Real => "real",
        EigenSpace::Complex => "complex",
    };
    let _ = writeln!(s, "eigen_space = {space}");
    let _ = writeln!(s, "force_real = {}", p.force_real());
    let _ = match p.lambda_bound() {
        LambdaBound::Auto => writeln!(s, "lambda_bound = auto"),
        LambdaBound::Off => writeln!(s, "lambda_bound = off"),
        LambdaBound::Radius(r) => writeln!(s, "lambda_bound = {r:?}"),
    };
    let o = &file.options;
    if let Some(v) = o.tau {
        let _ = writeln!(s, "tau = {v}");
    }
    if let Some(v) = o.tau_max {
        let _ = writeln!(s, "tau_max = {v}");
    }
    if let Some(v) = o.margin {
        let _ = writeln!(s, "margin = {v:?}");
    }
    if let Some(v) = o.feasibility_tol {
        let _ = writeln!(s, "feasibility_tol = {v:?}");
    }
    if let Some(v) = o.gap_tol {
        let _ = writeln!(s, "gap_tol = {v:?}");
    }
    if let Some(v) = o.max_iterations {
        let _ = writeln!(s, "max_iterations = {v}");
    }
    if let Some(e) = o.encoding {
        let name = match e {
            EqualityEncoding::ZeroLocalizer => "zero_localizer",
            EqualityEncoding::InequalityPair => "inequality_pair",
        };
        let _ = writeln!(s, "encoding = {name}");
    }
    if let Some(v) = o.rescale {
        let _ = writeln!(s, "rescale = {v}");
    }
    s
}

fn constraint_text(c: &Constraint, vars: &[String]) -> String {
    let op = match c.relation {
        Relation::GreaterEqualZero => ">=",
        Relation::EqualZero => "=",
    };
    format!("{} {op} 0", c.poly.display(vars))
}

pub fn save_problem(file: &ProblemFile, path: &Path) -> std::io::Result<()> {
    std::fs::write(path, to_text(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substitution_is_whole_word() {
        let v = vec![("k".to_string(), 0.5)];
        assert_eq!(substitute("k*rho + kk - k2 + 1e-3*k", &v), "(0.5)*rho + kk - k2 + 1e-3*(0.5)");
    }

    #[test]
    fn constants() {
        assert_eq!(eval_constant("(2 - 0.5)/(9 + 0.5)"), Ok(1.5 / 9.5));
        assert_eq!(eval_constant("-2^2"), Ok(-4.0));
        assert_eq!(eval_constant(" 1e-3 * 4 "), Ok(4e-3));
        assert_eq!(eval_constant("2*(3"), Err((4, "expected `)`".into())));
        assert!(eval_constant("1/0").is_err());
        assert!(eval_constant("rho").is_err());
    }

    #[test]
    fn bound_lines() {
        assert_eq!(split_bound("rho in [0, 1]"), Some(("rho", " [0, 1]")));
        assert_eq!(split_bound("rho in[0, 1]"), Some(("rho", "[0, 1]")));
        assert_eq!(split_bound("rho - 1 >= 0"), None);
        assert_eq!(split_bound("rho index >= 0"), None);
    }
}
