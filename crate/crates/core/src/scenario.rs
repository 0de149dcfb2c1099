//! Line-oriented scenario files: a small declarative surface that sets up a
//! space, a bundle metric, reference-metric symbol declarations, and named
//! weights, then lists compute requests. Parsing is strict with per-line
//! diagnostics, and a parsed scenario renders back to canonical text that
//! reparses to an identical structure.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::ambient::{Ambient, BasePoint, CoordNames};
use crate::current::{Coeff, SmoothFactor};
use crate::metric::{MetricForm, MetricSpec, SegreSymbol, Substitution, SymbolRules};
use crate::weight::{Weight, WeightAtom};

/// A parse diagnostic with its 1-based source line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for ParseError {}

type PResult<T> = std::result::Result<T, ParseError>;

fn err<T>(line: usize, message: impl Into<String>) -> PResult<T> {
    Err(ParseError { line, message: message.into() })
}

/// A constructible-set expression attached to one factor of a generalized
/// product. Cycles are base cycles given by their vanishing coordinate sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SetExpr {
    /// Complement of the factor weight's own unbounded locus.
    Auto,
    /// The whole space.
    All,
    /// Complement of the union of the listed cycles.
    Off(Vec<BTreeSet<usize>>),
    /// The union of the listed cycles.
    On(Vec<BTreeSet<usize>>),
}

/// A coordinate-adapted point expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PointExpr {
    Origin,
    Generic,
    /// Explicit per-coordinate pattern, `true` = vanishes.
    Pattern(Vec<bool>),
}

impl PointExpr {
    pub fn to_point(&self, n: usize) -> BasePoint {
        match self {
            PointExpr::Origin => BasePoint::origin(n),
            PointExpr::Generic => BasePoint::generic(n),
            PointExpr::Pattern(zs) => BasePoint { zero: zs.clone() },
        }
    }
}

/// One compute request.
#[derive(Debug, Clone, PartialEq)]
pub enum Request {
    MaPower { weight: String, k: usize },
    /// Ordered factors, innermost (applied first) listed first.
    GeneralizedProduct { factors: Vec<(String, SetExpr)> },
    BracketPower { weight: String, alpha: Vec<SmoothFactor>, m: usize },
    Segre { k: usize },
    Chern { k: usize },
    /// Segre-product degrees, outermost factor first.
    SegreProduct { ks: Vec<usize> },
    Lelong { target: Box<Request>, point: PointExpr },
    OracleCheck { name: String, tolerance: Option<f64> },
}

/// A fully parsed scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioFile {
    pub base_dim: usize,
    pub names: CoordNames,
    /// Declared named smooth forms and their degrees, in declaration order.
    pub forms: Vec<(String, usize)>,
    pub metric: Option<MetricSpec>,
    pub rules: SymbolRules,
    pub weights: Vec<(String, Weight)>,
    pub requests: Vec<Request>,
}

impl ScenarioFile {
    pub fn weight(&self, name: &str) -> Option<&Weight> {
        self.weights.iter().find(|(n, _)| n == name).map(|(_, w)| w)
    }

    pub fn form_degree(&self, name: &str) -> Option<usize> {
        self.forms.iter().find(|(n, _)| n == name).map(|(_, d)| *d)
    }
}

// ---------------------------------------------------------------------------
// Lexical helpers
// ---------------------------------------------------------------------------

/// Split at top-level occurrences of `sep`, ignoring separators nested in
/// parentheses or brackets.
fn split_top(s: &str, sep: char) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    for (i, c) in s.char_indices() {
        match c {
            '(' | '[' => depth += 1,
            ')' | ']' => depth = depth.saturating_sub(1),
            c if c == sep && depth == 0 => {
                parts.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts
}

fn is_ident(s: &str) -> bool {
    !s.is_empty()
        && s.chars().next().unwrap().is_ascii_alphabetic()
        && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn parse_usize(s: &str, line: usize, what: &str) -> PResult<usize> {
    s.trim()
        .parse::<usize>()
        .map_err(|_| ParseError { line, message: format!("expected {}, found '{}'", what, s.trim()) })
}

fn parse_coeff(s: &str) -> Option<Coeff> {
    Coeff::from_str(s.trim()).ok()
}

/// `name` or `name^k` against the declared form table.
fn parse_form_power(
    piece: &str,
    forms: &[(String, usize)],
    line: usize,
) -> PResult<Vec<SmoothFactor>> {
    let piece = piece.trim();
    let (name, count) = match piece.split_once('^') {
        Some((n, k)) => (n.trim(), parse_usize(k, line, "a power")?),
        None => (piece, 1),
    };
    let Some(degree) = forms.iter().find(|(n, _)| n == name).map(|(_, d)| *d) else {
        return err(line, format!("undeclared form '{}'", name));
    };
    Ok(vec![SmoothFactor::named(name, degree); count])
}

/// A product of declared named forms, `1` for the empty product.
fn parse_smooth_expr(
    expr: &str,
    forms: &[(String, usize)],
    line: usize,
) -> PResult<Vec<SmoothFactor>> {
    let expr = expr.trim();
    if expr == "1" {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for piece in split_top(expr, '*') {
        out.extend(parse_form_power(piece, forms, line)?);
    }
    out.sort();
    Ok(out)
}

/// `[x1=0,x2=0]` against the base coordinate names.
fn parse_base_cycle(s: &str, names: &CoordNames, line: usize) -> PResult<BTreeSet<usize>> {
    let s = s.trim();
    let Some(inner) = s.strip_prefix('[').and_then(|t| t.strip_suffix(']')) else {
        return err(line, format!("expected a cycle like [x1=0], found '{}'", s));
    };
    let mut out = BTreeSet::new();
    for part in inner.split(',') {
        let Some(name) = part.trim().strip_suffix("=0") else {
            return err(line, format!("expected 'coordinate=0', found '{}'", part.trim()));
        };
        let name = name.trim();
        let Some(i) = names.base.iter().position(|n| n == name) else {
            return err(line, format!("unknown base coordinate '{}'", name));
        };
        out.insert(i + 1);
    }
    if out.is_empty() {
        return err(line, "empty cycle literal");
    }
    Ok(out)
}

/// `xi_2` / `xi2` to a fiber coordinate index.
fn parse_fiber_coord(s: &str, line: usize) -> PResult<usize> {
    let t = s.trim();
    let rest = t
        .strip_prefix("xi_")
        .or_else(|| t.strip_prefix("xi"))
        .ok_or(ParseError {
            line,
            message: format!("expected a fiber coordinate like xi_2, found '{}'", t),
        })?;
    parse_usize(rest, line, "a fiber coordinate index")
}

// ---------------------------------------------------------------------------
// Weight expressions
// ---------------------------------------------------------------------------

/// `log|x1*x2^2|^2`, `log|x1,x2|^2`, `fs`, `section(xi_2)`, `smooth(name)`,
/// joined by `+`, each with an optional rational prefix `c*`.
fn parse_weight_expr(
    expr: &str,
    ambient: &Ambient,
    names: &CoordNames,
    line: usize,
) -> PResult<Vec<WeightAtom>> {
    let mut atoms = Vec::new();
    for piece in split_top(expr, '+') {
        let piece = piece.trim();
        if piece.is_empty() {
            return err(line, "empty weight summand");
        }
        // optional rational coefficient prefix
        let (coeff, core) = match piece.split_once('*') {
            Some((head, tail)) if parse_coeff(head).is_some() && !head.contains('|') => {
                (parse_coeff(head).unwrap(), tail.trim())
            }
            _ => (Coeff::from_integer(1.into()), piece),
        };
        let one = coeff == Coeff::from_integer(1.into());
        if let Some(inner) = core.strip_prefix("log|").and_then(|t| t.strip_suffix("|^2")) {
            if inner.contains(',') {
                let mut coords = BTreeSet::new();
                for part in inner.split(',') {
                    let name = part.trim();
                    let Some(i) = names.base.iter().position(|n| n == name) else {
                        return err(line, format!("unknown base coordinate '{}'", name));
                    };
                    coords.insert(i + 1);
                }
                atoms.push(WeightAtom::NormLog { coords, coeff });
            } else {
                let mut exponents = vec![0u32; ambient.base_dim];
                for part in inner.split('*') {
                    let part = part.trim();
                    let (name, e) = match part.split_once('^') {
                        Some((n, e)) => (n.trim(), parse_usize(e, line, "an exponent")? as u32),
                        None => (part, 1),
                    };
                    let Some(i) = names.base.iter().position(|n| n == name) else {
                        return err(line, format!("unknown base coordinate '{}'", name));
                    };
                    exponents[i] += e;
                }
                atoms.push(WeightAtom::MonomialLog { exponents, coeff });
            }
        } else if core == "fs" {
            if !one {
                return err(line, "fs takes no coefficient");
            }
            atoms.push(WeightAtom::FiberFs { factor: 1 });
        } else if let Some(inner) = core.strip_prefix("section(").and_then(|t| t.strip_suffix(')')) {
            if !one {
                return err(line, "section takes no coefficient");
            }
            atoms.push(WeightAtom::FiberSectionLog {
                factor: 1,
                coord: parse_fiber_coord(inner, line)?,
            });
        } else if let Some(inner) = core.strip_prefix("smooth(").and_then(|t| t.strip_suffix(')')) {
            if !one {
                return err(line, "smooth takes no coefficient");
            }
            let name = inner.trim();
            if !is_ident(name) {
                return err(line, format!("bad smooth-form name '{}'", name));
            }
            atoms.push(WeightAtom::Smooth { name: name.to_string() });
        } else {
            return err(line, format!("unrecognized weight atom '{}'", core));
        }
    }
    Ok(atoms)
}

fn render_coeff(c: &Coeff) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

fn render_weight_expr(w: &Weight, names: &CoordNames) -> String {
    let one = Coeff::from_integer(1.into());
    let parts: Vec<String> = w
        .atoms
        .iter()
        .map(|a| match a {
            WeightAtom::MonomialLog { exponents, coeff } => {
                let mono: Vec<String> = exponents
                    .iter()
                    .enumerate()
                    .filter(|(_, &e)| e > 0)
                    .map(|(i, &e)| {
                        if e == 1 {
                            names.base_name(i + 1).to_string()
                        } else {
                            format!("{}^{}", names.base_name(i + 1), e)
                        }
                    })
                    .collect();
                let body = format!("log|{}|^2", mono.join("*"));
                if *coeff == one { body } else { format!("{}*{}", render_coeff(coeff), body) }
            }
            WeightAtom::NormLog { coords, coeff } => {
                let inner: Vec<&str> = coords.iter().map(|&i| names.base_name(i)).collect();
                let body = format!("log|{}|^2", inner.join(","));
                if *coeff == one { body } else { format!("{}*{}", render_coeff(coeff), body) }
            }
            WeightAtom::FiberSectionLog { coord, .. } => format!("section(xi_{})", coord),
            WeightAtom::FiberFs { .. } => "fs".to_string(),
            WeightAtom::Smooth { name } => format!("smooth({})", name),
        })
        .collect();
    parts.join(" + ")
}

fn render_smooth_expr(factors: &[SmoothFactor]) -> String {
    if factors.is_empty() {
        return "1".to_string();
    }
    let mut parts = Vec::new();
    let mut i = 0;
    while i < factors.len() {
        let mut k = 1;
        while i + k < factors.len() && factors[i + k] == factors[i] {
            k += 1;
        }
        let name = match &factors[i] {
            SmoothFactor::Named { name, .. } => name.clone(),
            other => format!("{:?}", other),
        };
        parts.push(if k == 1 { name } else { format!("{}^{}", name, k) });
        i += k;
    }
    parts.join("*")
}

// ---------------------------------------------------------------------------
// Requests
// ---------------------------------------------------------------------------

fn parse_point(s: &str, n: usize, line: usize) -> PResult<PointExpr> {
    let s = s.trim();
    match s {
        "origin" => Ok(PointExpr::Origin),
        "generic" => Ok(PointExpr::Generic),
        _ => {
            let Some(inner) = s.strip_prefix('(').and_then(|t| t.strip_suffix(')')) else {
                return err(line, format!("expected a point, found '{}'", s));
            };
            let mut zs = Vec::new();
            for part in inner.split(',') {
                match part.trim() {
                    "0" => zs.push(true),
                    "*" => zs.push(false),
                    other => return err(line, format!("point entries are 0 or *, found '{}'", other)),
                }
            }
            if zs.len() != n {
                return err(line, format!("point has {} entries, space has {}", zs.len(), n));
            }
            Ok(PointExpr::Pattern(zs))
        }
    }
}

fn render_point(p: &PointExpr) -> String {
    match p {
        PointExpr::Origin => "origin".to_string(),
        PointExpr::Generic => "generic".to_string(),
        PointExpr::Pattern(zs) => {
            let parts: Vec<&str> = zs.iter().map(|z| if *z { "0" } else { "*" }).collect();
            format!("({})", parts.join(", "))
        }
    }
}

fn parse_set_expr(s: &str, names: &CoordNames, line: usize) -> PResult<SetExpr> {
    let s = s.trim();
    if s == "auto" {
        return Ok(SetExpr::Auto);
    }
    if s == "all" {
        return Ok(SetExpr::All);
    }
    let (kind, rest) = if let Some(rest) = s.strip_prefix("off") {
        ("off", rest)
    } else if let Some(rest) = s.strip_prefix("on") {
        ("on", rest)
    } else {
        return err(line, format!("expected a set (auto, all, off ..., on ...), found '{}'", s));
    };
    let mut cycles = Vec::new();
    for part in split_top(rest.trim(), ',') {
        cycles.push(parse_base_cycle(part, names, line)?);
    }
    Ok(match kind {
        "off" => SetExpr::Off(cycles),
        _ => SetExpr::On(cycles),
    })
}

fn render_set_expr(s: &SetExpr, names: &CoordNames) -> String {
    let cycles = |cs: &[BTreeSet<usize>]| -> String {
        cs.iter()
            .map(|c| {
                let parts: Vec<String> =
                    c.iter().map(|&i| format!("{}=0", names.base_name(i))).collect();
                format!("[{}]", parts.join(","))
            })
            .collect::<Vec<_>>()
            .join(",")
    };
    match s {
        SetExpr::Auto => "auto".to_string(),
        SetExpr::All => "all".to_string(),
        SetExpr::Off(cs) => format!("off {}", cycles(cs)),
        SetExpr::On(cs) => format!("on {}", cycles(cs)),
    }
}

struct RequestContext<'a> {
    names: &'a CoordNames,
    base_dim: usize,
    forms: &'a [(String, usize)],
    weight_names: &'a [String],
    has_metric: bool,
}

fn parse_request(s: &str, ctx: &RequestContext, line: usize) -> PResult<Request> {
    let s = s.trim();
    let check_weight = |name: &str| -> PResult<String> {
        if ctx.weight_names.iter().any(|n| n == name) {
            Ok(name.to_string())
        } else {
            err(line, format!("undeclared weight '{}'", name))
        }
    };
    let need_metric = |what: &str| -> PResult<()> {
        if ctx.has_metric {
            Ok(())
        } else {
            err(line, format!("{} requires a metric declaration", what))
        }
    };
    if let Some(rest) = s.strip_prefix("segre_product") {
        let rest = rest.trim();
        let Some(inner) = rest.strip_prefix('[').and_then(|t| t.strip_suffix(']')) else {
            return err(line, "segre_product expects a bracketed degree list");
        };
        need_metric("segre_product")?;
        let mut ks = Vec::new();
        for part in inner.split(',') {
            ks.push(parse_usize(part, line, "a degree")?);
        }
        if ks.is_empty() {
            return err(line, "segre_product needs at least one degree");
        }
        return Ok(Request::SegreProduct { ks });
    }
    if let Some(rest) = s.strip_prefix("segre ") {
        need_metric("segre")?;
        return Ok(Request::Segre { k: parse_usize(rest, line, "a degree")? });
    }
    if let Some(rest) = s.strip_prefix("chern ") {
        need_metric("chern")?;
        return Ok(Request::Chern { k: parse_usize(rest, line, "a degree")? });
    }
    if let Some(inner) = s.strip_prefix("ma_power(").and_then(|t| t.strip_suffix(')')) {
        let args = split_top(inner, ',');
        if args.len() != 2 {
            return err(line, "ma_power takes (weight, k)");
        }
        return Ok(Request::MaPower {
            weight: check_weight(args[0].trim())?,
            k: parse_usize(args[1], line, "a power")?,
        });
    }
    if let Some(inner) = s.strip_prefix("generalized_product(").and_then(|t| t.strip_suffix(')')) {
        let mut factors = Vec::new();
        for part in split_top(inner, ';') {
            let Some((name, set)) = part.split_once('@') else {
                return err(line, format!("factor '{}' needs the shape 'weight @ set'", part.trim()));
            };
            factors.push((
                check_weight(name.trim())?,
                parse_set_expr(set, ctx.names, line)?,
            ));
        }
        if factors.is_empty() {
            return err(line, "generalized_product needs at least one factor");
        }
        return Ok(Request::GeneralizedProduct { factors });
    }
    if let Some(inner) = s.strip_prefix("bracket_power(").and_then(|t| t.strip_suffix(')')) {
        let args = split_top(inner, ',');
        if args.len() != 3 {
            return err(line, "bracket_power takes (weight, alpha, m)");
        }
        return Ok(Request::BracketPower {
            weight: check_weight(args[0].trim())?,
            alpha: parse_smooth_expr(args[1], ctx.forms, line)?,
            m: parse_usize(args[2], line, "a power")?,
        });
    }
    if let Some(inner) = s.strip_prefix("lelong(").and_then(|t| t.strip_suffix(')')) {
        let args = split_top(inner, ',');
        if args.len() != 2 {
            return err(line, "lelong takes (target request, point)");
        }
        let target = parse_request(args[0], ctx, line)?;
        if matches!(target, Request::Lelong { .. } | Request::OracleCheck { .. }) {
            return err(line, "lelong target must produce a current");
        }
        return Ok(Request::Lelong {
            target: Box::new(target),
            point: parse_point(args[1], ctx.base_dim, line)?,
        });
    }
    if let Some(inner) = s.strip_prefix("oracle_check(").and_then(|t| t.strip_suffix(')')) {
        let args = split_top(inner, ',');
        if args.is_empty() || args.len() > 2 {
            return err(line, "oracle_check takes (name) or (name, tolerance)");
        }
        let name = args[0].trim();
        if !is_ident(name) {
            return err(line, format!("bad oracle check name '{}'", name));
        }
        let tolerance = match args.get(1) {
            None => None,
            Some(t) => Some(t.trim().parse::<f64>().map_err(|_| ParseError {
                line,
                message: format!("bad tolerance '{}'", t.trim()),
            })?),
        };
        return Ok(Request::OracleCheck { name: name.to_string(), tolerance });
    }
    err(line, format!("unrecognized request '{}'", s))
}

pub fn render_request(r: &Request, names: &CoordNames) -> String {
    match r {
        Request::MaPower { weight, k } => format!("ma_power({}, {})", weight, k),
        Request::GeneralizedProduct { factors } => {
            let parts: Vec<String> = factors
                .iter()
                .map(|(w, s)| format!("{} @ {}", w, render_set_expr(s, names)))
                .collect();
            format!("generalized_product({})", parts.join("; "))
        }
        Request::BracketPower { weight, alpha, m } => {
            format!("bracket_power({}, {}, {})", weight, render_smooth_expr(alpha), m)
        }
        Request::Segre { k } => format!("segre {}", k),
        Request::Chern { k } => format!("chern {}", k),
        Request::SegreProduct { ks } => {
            let parts: Vec<String> = ks.iter().map(|k| k.to_string()).collect();
            format!("segre_product [{}]", parts.join(", "))
        }
        Request::Lelong { target, point } => {
            format!("lelong({}, {})", render_request(target, names), render_point(point))
        }
        Request::OracleCheck { name, tolerance } => match tolerance {
            None => format!("oracle_check({})", name),
            Some(t) => format!("oracle_check({}, {})", name, t),
        },
    }
}

// ---------------------------------------------------------------------------
// Scenario parsing
// ---------------------------------------------------------------------------

enum MetricKind {
    Conformal,
    O1Weight,
    Line,
}

pub fn parse_scenario(text: &str) -> PResult<ScenarioFile> {
    let mut base_dim: Option<usize> = None;
    let mut names = CoordNames { base: Vec::new() };
    let mut rank: Option<usize> = None;
    let mut theta_tag: Option<String> = None;
    let mut forms: Vec<(String, usize)> = Vec::new();
    let mut metric: Option<MetricSpec> = None;
    let mut segre_decls: Vec<(usize, SegreSymbol)> = Vec::new();
    let mut substitutions: Vec<Substitution> = Vec::new();
    let mut weights: Vec<(String, Weight)> = Vec::new();
    let mut requests: Vec<Request> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = match raw.split_once('#') {
            Some((before, _)) => before.trim(),
            None => raw.trim(),
        };
        if line.is_empty() {
            continue;
        }

        let need_space = |base_dim: &Option<usize>| -> PResult<usize> {
            base_dim.ok_or(ParseError {
                line: lineno,
                message: "space must be declared first".into(),
            })
        };

        if let Some(rest) = line.strip_prefix("space") {
            let Some(rest) = rest.trim_start().strip_prefix('=') else {
                return err(lineno, "expected 'space = <dim>'");
            };
            if base_dim.is_some() {
                return err(lineno, "space declared twice");
            }
            let rest = rest.trim();
            let (dim_str, name_list) = match rest.split_once('(') {
                Some((d, tail)) => {
                    let Some(inner) = tail.strip_suffix(')') else {
                        return err(lineno, "unclosed coordinate name list");
                    };
                    (d.trim(), Some(inner))
                }
                None => (rest, None),
            };
            let n = parse_usize(dim_str, lineno, "a dimension")?;
            if n == 0 {
                return err(lineno, "dimension must be positive");
            }
            let coord_names = match name_list {
                None => (1..=n).map(|i| format!("x{}", i)).collect::<Vec<_>>(),
                Some(inner) => {
                    let ns: Vec<String> =
                        inner.split(',').map(|s| s.trim().to_string()).collect();
                    if ns.len() != n || ns.iter().any(|s| !is_ident(s)) {
                        return err(lineno, "coordinate name list must give one identifier per dimension");
                    }
                    ns
                }
            };
            base_dim = Some(n);
            names = CoordNames { base: coord_names };
        } else if let Some(rest) = line.strip_prefix("bundle") {
            let Some(rest) = rest.trim_start().strip_prefix('=') else {
                return err(lineno, "expected 'bundle = <rank>'");
            };
            if rank.is_some() {
                return err(lineno, "bundle declared twice");
            }
            let r = parse_usize(rest, lineno, "a rank")?;
            if r == 0 {
                return err(lineno, "rank must be positive");
            }
            rank = Some(r);
        } else if let Some(rest) = line.strip_prefix("theta") {
            let Some(rest) = rest.trim_start().strip_prefix('=') else {
                return err(lineno, "expected 'theta = <tag>'");
            };
            let tag = rest.trim();
            if !is_ident(tag) {
                return err(lineno, format!("bad theta tag '{}'", tag));
            }
            if theta_tag.is_some() {
                return err(lineno, "theta declared twice");
            }
            theta_tag = Some(tag.to_string());
        } else if let Some(rest) = line.strip_prefix("form ") {
            let Some((name, deg)) = rest.split_once('=') else {
                return err(lineno, "expected 'form <name> = <degree>'");
            };
            let name = name.trim();
            if !is_ident(name) {
                return err(lineno, format!("bad form name '{}'", name));
            }
            if forms.iter().any(|(n, _)| n == name) {
                return err(lineno, format!("form '{}' declared twice", name));
            }
            let d = parse_usize(deg, lineno, "a degree")?;
            if d == 0 {
                return err(lineno, "form degree must be positive");
            }
            forms.push((name.to_string(), d));
        } else if let Some(rest) = line.strip_prefix("metric") {
            let Some(rest) = rest.trim_start().strip_prefix('=') else {
                return err(lineno, "expected 'metric = <kind>: <weight>'");
            };
            if metric.is_some() {
                return err(lineno, "metric declared twice");
            }
            let n = need_space(&base_dim)?;
            let Some((kind_str, expr)) = rest.split_once(':') else {
                return err(lineno, "expected 'metric = <kind>: <weight>'");
            };
            let kind = match kind_str.trim() {
                "conformal" => MetricKind::Conformal,
                "o1weight" => MetricKind::O1Weight,
                "line" => MetricKind::Line,
                other => return err(lineno, format!("unknown metric kind '{}'", other)),
            };
            let spec = match kind {
                MetricKind::Line => {
                    if let Some(r) = rank {
                        if r != 1 {
                            return err(lineno, format!("line metric requires rank 1, bundle has rank {}", r));
                        }
                    }
                    rank = Some(1);
                    let amb = Ambient::base(n);
                    let atoms = parse_weight_expr(expr.trim(), &amb, &names, lineno)?;
                    let w = Weight::new(amb, atoms)
                        .map_err(|e| ParseError { line: lineno, message: e.to_string() })?;
                    MetricSpec::new(1, MetricForm::LineBundle(w))
                }
                MetricKind::Conformal => {
                    let Some(r) = rank else {
                        return err(lineno, "conformal metric requires a bundle rank");
                    };
                    let amb = Ambient::base(n);
                    let atoms = parse_weight_expr(expr.trim(), &amb, &names, lineno)?;
                    let w = Weight::new(amb, atoms)
                        .map_err(|e| ParseError { line: lineno, message: e.to_string() })?;
                    MetricSpec::new(r, MetricForm::ConformalDiagonal(w))
                }
                MetricKind::O1Weight => {
                    let Some(r) = rank else {
                        return err(lineno, "o1weight metric requires a bundle rank");
                    };
                    let amb = Ambient::with_fibers(n, 1, r);
                    let atoms = parse_weight_expr(expr.trim(), &amb, &names, lineno)?;
                    let w = Weight::new(amb, atoms)
                        .map_err(|e| ParseError { line: lineno, message: e.to_string() })?;
                    MetricSpec::new(r, MetricForm::ExplicitO1Weight(w))
                }
            }
            .map_err(|e| ParseError { line: lineno, message: e.to_string() })?;
            metric = Some(spec);
        } else if let Some(rest) = line.strip_prefix("segre ") {
            let Some((k_str, expr)) = rest.split_once('=') else {
                return err(lineno, "expected 'segre <k> = 0 | <forms>'");
            };
            let k = parse_usize(k_str, lineno, "a degree")?;
            let value = if expr.trim() == "0" {
                SegreSymbol::Zero
            } else {
                SegreSymbol::Form(parse_smooth_expr(expr, &forms, lineno)?)
            };
            segre_decls.push((k, value));
        } else if let Some(rest) = line.strip_prefix("subst ") {
            // subst theta * [xi_2=0] -> 0 | <forms>
            let Some((lhs, rhs)) = rest.split_once("->") else {
                return err(lineno, "expected 'subst theta * [cycle] -> 0 | <forms>'");
            };
            let Some(cycle_part) = lhs.trim().strip_prefix("theta").map(|t| t.trim_start()) else {
                return err(lineno, "substitution left side must start with 'theta'");
            };
            let Some(cycle_part) = cycle_part.strip_prefix('*') else {
                return err(lineno, "expected 'theta * [cycle]'");
            };
            let cp = cycle_part.trim();
            let Some(inner) = cp.strip_prefix('[').and_then(|t| t.strip_suffix(']')) else {
                return err(lineno, "expected a fiber cycle like [xi_2=0]");
            };
            let mut fiber_zero = BTreeSet::new();
            for part in inner.split(',') {
                let Some(coord) = part.trim().strip_suffix("=0") else {
                    return err(lineno, format!("expected 'xi_k=0', found '{}'", part.trim()));
                };
                fiber_zero.insert(parse_fiber_coord(coord, lineno)?);
            }
            if fiber_zero.is_empty() {
                return err(lineno, "empty substitution cycle");
            }
            let rhs = rhs.trim();
            let value = if rhs == "0" {
                None
            } else {
                Some(parse_smooth_expr(rhs, &forms, lineno)?)
            };
            substitutions.push(Substitution {
                theta_tag: theta_tag.clone().unwrap_or_else(|| "g".to_string()),
                fiber_zero,
                rhs: value,
            });
        } else if let Some(rest) = line.strip_prefix("weight ") {
            let Some((name, expr)) = rest.split_once('=') else {
                return err(lineno, "expected 'weight <name> = <expr>'");
            };
            let name = name.trim();
            if !is_ident(name) {
                return err(lineno, format!("bad weight name '{}'", name));
            }
            if weights.iter().any(|(n, _)| n == name) {
                return err(lineno, format!("weight '{}' declared twice", name));
            }
            let n = need_space(&base_dim)?;
            let amb = Ambient::base(n);
            let atoms = parse_weight_expr(expr.trim(), &amb, &names, lineno)?;
            let w = Weight::new(amb, atoms)
                .map_err(|e| ParseError { line: lineno, message: e.to_string() })?;
            weights.push((name.to_string(), w));
        } else if let Some(rest) = line.strip_prefix("compute") {
            let Some(rest) = rest.trim_start().strip_prefix('=') else {
                return err(lineno, "expected 'compute = <requests>'");
            };
            let n = need_space(&base_dim)?;
            let weight_names: Vec<String> = weights.iter().map(|(n, _)| n.clone()).collect();
            let ctx = RequestContext {
                names: &names,
                base_dim: n,
                forms: &forms,
                weight_names: &weight_names,
                has_metric: metric.is_some(),
            };
            for part in split_top(rest, ';') {
                let part = part.trim();
                if part.is_empty() {
                    continue;
                }
                requests.push(parse_request(part, &ctx, lineno)?);
            }
        } else {
            return err(lineno, format!("unrecognized statement '{}'", line));
        }
    }

    let Some(base_dim) = base_dim else {
        return err(text.lines().count().max(1), "scenario declares no space");
    };

    let tag = theta_tag.unwrap_or_else(|| "g".to_string());
    let mut rules = if segre_decls.is_empty() {
        SymbolRules::euclidean(&tag)
    } else {
        SymbolRules::new(&tag)
    };
    for (k, value) in segre_decls {
        rules
            .declare_segre(k, value)
            .map_err(|e| ParseError { line: 0, message: e.to_string() })?;
    }
    rules.substitutions = substitutions;

    Ok(ScenarioFile { base_dim, names, forms, metric, rules, weights, requests })
}

// ---------------------------------------------------------------------------
// Canonical rendering
// ---------------------------------------------------------------------------

impl ScenarioFile {
    /// Canonical text form; reparsing it yields an identical structure.
    pub fn render(&self) -> String {
        let mut out = Vec::new();
        let default_names: Vec<String> =
            (1..=self.base_dim).map(|i| format!("x{}", i)).collect();
        if self.names.base == default_names {
            out.push(format!("space = {}", self.base_dim));
        } else {
            out.push(format!("space = {} ({})", self.base_dim, self.names.base.join(", ")));
        }
        if let Some(spec) = &self.metric {
            out.push(format!("bundle = {}", spec.rank));
            let (kind, w) = match &spec.form {
                MetricForm::LineBundle(w) => ("line", w),
                MetricForm::ConformalDiagonal(w) => ("conformal", w),
                MetricForm::ExplicitO1Weight(w) => ("o1weight", w),
            };
            out.push(format!("metric = {}: {}", kind, render_weight_expr(w, &self.names)));
        }
        out.push(format!("theta = {}", self.rules.theta_tag));
        for (name, deg) in &self.forms {
            out.push(format!("form {} = {}", name, deg));
        }
        for (k, value) in &self.rules.segre_symbols {
            let rhs = match value {
                SegreSymbol::Zero => "0".to_string(),
                SegreSymbol::Form(fs) => render_smooth_expr(fs),
            };
            out.push(format!("segre {} = {}", k, rhs));
        }
        for sub in &self.rules.substitutions {
            let cycle: Vec<String> =
                sub.fiber_zero.iter().map(|c| format!("xi_{}=0", c)).collect();
            let rhs = match &sub.rhs {
                None => "0".to_string(),
                Some(fs) => render_smooth_expr(fs),
            };
            out.push(format!("subst theta * [{}] -> {}", cycle.join(","), rhs));
        }
        for (name, w) in &self.weights {
            out.push(format!("weight {} = {}", name, render_weight_expr(w, &self.names)));
        }
        for r in &self.requests {
            out.push(format!("compute = {}", render_request(r, &self.names)));
        }
        let mut text = out.join("\n");
        text.push('\n');
        text
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CONFORMAL: &str = "\
space = 2
bundle = 2
metric = conformal: log|x1,x2|^2
compute = segre 1; segre 2; chern 2
compute = lelong(segre 2, origin)
";

    #[test]
    fn parses_conformal_scenario() {
        let s = parse_scenario(CONFORMAL).unwrap();
        assert_eq!(s.base_dim, 2);
        let spec = s.metric.as_ref().unwrap();
        assert_eq!(spec.rank, 2);
        assert!(matches!(spec.form, MetricForm::ConformalDiagonal(_)));
        assert_eq!(s.requests.len(), 4);
        assert_eq!(s.requests[3], Request::Lelong {
            target: Box::new(Request::Segre { k: 2 }),
            point: PointExpr::Origin,
        });
    }

    #[test]
    fn round_trips_through_canonical_rendering() {
        let text = "\
space = 2 (z, w)
bundle = 2
metric = o1weight: log|z|^2 + section(xi_2)
theta = g
form ddc_zeta_sq = 1
segre 1 = 0
segre 2 = ddc_zeta_sq^2
subst theta * [xi_2=0] -> 0
weight u1 = log|z|^2
weight u2 = log|z*w|^2 + 1/2*log|z,w|^2
compute = segre_product [1, 2]
compute = generalized_product(u1 @ off [z=0]; u2 @ auto)
compute = bracket_power(u1, ddc_zeta_sq, 3)
compute = lelong(ma_power(u2, 2), (0, *))
compute = oracle_check(pl_mass_c1, 0.05)
";
        let parsed = parse_scenario(text).unwrap();
        let rendered = parsed.render();
        let reparsed = parse_scenario(&rendered).unwrap();
        assert_eq!(parsed, reparsed);
        // canonical rendering is a fixed point
        assert_eq!(rendered, reparsed.render());
    }

    #[test]
    fn rejects_undeclared_names_with_line_info() {
        let text = "space = 2\ncompute = ma_power(u9, 2)\n";
        let e = parse_scenario(text).unwrap_err();
        assert_eq!(e.line, 2);
        assert!(e.message.contains("u9"), "{}", e.message);

        let text = "space = 2\nsegre 1 = mystery\n";
        let e = parse_scenario(text).unwrap_err();
        assert_eq!(e.line, 2);
        assert!(e.message.contains("mystery"));
    }

    #[test]
    fn rejects_metric_requests_without_metric() {
        let text = "space = 2\ncompute = segre 1\n";
        let e = parse_scenario(text).unwrap_err();
        assert!(e.message.contains("metric"), "{}", e.message);
    }

    #[test]
    fn rejects_rank_mismatch_for_line_metric() {
        let text = "space = 1\nbundle = 2\nmetric = line: log|x1|^2\n";
        let e = parse_scenario(text).unwrap_err();
        assert!(e.message.contains("rank"), "{}", e.message);
    }

    #[test]
    fn weight_expressions_cover_all_atoms() {
        let text = "\
space = 3
bundle = 2
metric = o1weight: 2*log|x1*x2^2|^2 + log|x1,x3|^2 + section(xi_1) + fs + smooth(bg)
";
        let s = parse_scenario(text).unwrap();
        let MetricForm::ExplicitO1Weight(w) = &s.metric.unwrap().form else {
            panic!("wrong form");
        };
        assert_eq!(w.atoms.len(), 5);
        assert_eq!(
            w.atoms[0],
            WeightAtom::MonomialLog {
                exponents: vec![1, 2, 0],
                coeff: Coeff::from_integer(2.into())
            }
        );
        assert!(matches!(&w.atoms[3], WeightAtom::FiberFs { factor: 1 }));
    }

    #[test]
    fn bad_statements_report_their_line() {
        let text = "space = 2\n\n???\n";
        let e = parse_scenario(text).unwrap_err();
        assert_eq!(e.line, 3);
    }
}
