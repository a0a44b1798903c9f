//! Line-oriented problem files.
//!
//! ```text
//! [context]
//! q = 1
//! p = 1
//! n = 2
//! params = c
//!
//! [oracle]
//! seed = 7
//!
//! [fields]
//! X xi = 0
//! X phi = 1
//!
//! [twist L]
//! kind = lambda
//! lambda = c
//!
//! [twist M]
//! kind = mu
//! Lambda1 =
//!   0; 1
//!   0; 0
//!
//! [gauge G]
//! kind = scalar
//! beta = exp(u)
//!
//! [chain C]
//! fields = X
//! twist = L
//! eta = x
//! zeta = u_[1] - c*u
//!
//! [equations]
//! u_[2] = c*u_[1] + (u_[1] - c*u)^2
//!
//! [tasks]
//! check-symmetry X twist=L
//! reduce C
//! ```
//!
//! `#` starts a comment. Matrix entries are separated by `;`, one row per
//! line after a `key =` line with an empty value.

use std::collections::BTreeMap;

use crate::expr::Expr;
use crate::field::VectorField;
use crate::gauge::Direction;
use crate::jet::{Coord, Equation, JetContext, SolvedSystem};
use crate::matrix::MatrixExpr;
use crate::oracle::EqualityConfig;
use crate::prolong::TwistSpec;

use super::parser::{line_col, parse_expression};
use super::ParseDiagnostic;

#[derive(Debug, Clone)]
pub enum GaugeDecl {
    Scalar { beta: Expr, direction: Direction },
    Vector { a: MatrixExpr, direction: Direction },
    Module { gamma: MatrixExpr, direction: Direction },
    Combined { a: MatrixExpr, gamma: MatrixExpr, direction: Direction },
}

#[derive(Debug, Clone)]
pub struct ChainDecl {
    pub fields: Vec<String>,
    pub twist: Option<String>,
    pub eta: Expr,
    pub zeta: Vec<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub verb: String,
    pub args: Vec<String>,
    pub options: BTreeMap<String, String>,
    pub text: String,
    pub line: usize,
}

pub const VERBS: [&str; 10] = [
    "prolong",
    "check-symmetry",
    "check-strong",
    "check-mc",
    "gauge-verify",
    "invariants",
    "ibdp-extend",
    "reduce",
    "involution",
    "commutator-identity",
];

#[derive(Debug, Clone)]
pub struct ProblemFile {
    pub ctx: JetContext,
    pub oracle: EqualityConfig,
    pub fields: Vec<(String, VectorField)>,
    pub twists: Vec<(String, TwistSpec)>,
    pub gauges: Vec<(String, GaugeDecl)>,
    pub chains: Vec<(String, ChainDecl)>,
    pub equations: Option<SolvedSystem>,
    pub tasks: Vec<Task>,
}

impl ProblemFile {
    pub fn field(&self, name: &str) -> Option<&VectorField> {
        self.fields.iter().find(|(n, _)| n == name).map(|(_, f)| f)
    }

    pub fn twist(&self, name: &str) -> Option<&TwistSpec> {
        self.twists.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn gauge(&self, name: &str) -> Option<&GaugeDecl> {
        self.gauges.iter().find(|(n, _)| n == name).map(|(_, g)| g)
    }

    pub fn chain(&self, name: &str) -> Option<&ChainDecl> {
        self.chains.iter().find(|(n, _)| n == name).map(|(_, c)| c)
    }
}

#[derive(Debug, Clone, Copy)]
struct Line<'a> {
    text: &'a str,
    offset: usize,
    number: usize,
}

struct Section<'a> {
    kind: &'a str,
    name: Option<&'a str>,
    header: Line<'a>,
    body: Vec<Line<'a>>,
}

struct Cx<'a> {
    src: &'a str,
}

impl<'a> Cx<'a> {
    fn diag(&self, offset: usize, message: impl Into<String>) -> ParseDiagnostic {
        self.diag_expecting(offset, message, &[])
    }

    fn diag_expecting(&self, offset: usize, message: impl Into<String>, expected: &[&str]) -> ParseDiagnostic {
        let (line, col) = line_col(self.src, offset);
        ParseDiagnostic {
            offset,
            line,
            col,
            message: message.into(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Parse an expression located at `offset` in the source.
    fn expr(&self, text: &str, offset: usize, ctx: &JetContext) -> Result<Expr, ParseDiagnostic> {
        parse_expression(text, ctx).map_err(|d| {
            let mut d2 = self.diag(offset + d.offset, d.message);
            d2.expected = d.expected;
            d2
        })
    }

    fn expr_list(&self, text: &str, offset: usize, ctx: &JetContext) -> Result<Vec<Expr>, ParseDiagnostic> {
        let mut out = Vec::new();
        let mut start = 0;
        for part in text.split(';') {
            let lead = part.len() - part.trim_start().len();
            out.push(self.expr(part.trim(), offset + start + lead, ctx)?);
            start += part.len() + 1;
        }
        Ok(out)
    }
}

fn split_lines(src: &str) -> Vec<Line<'_>> {
    let mut out = Vec::new();
    let mut offset = 0;
    for (i, raw) in src.split('\n').enumerate() {
        let text = match raw.find('#') {
            Some(k) => &raw[..k],
            None => raw,
        };
        let text = text.trim_end_matches('\r');
        out.push(Line { text, offset, number: i + 1 });
        offset += raw.len() + 1;
    }
    out
}

/// `key = value` with the byte offset of the value.
fn key_value(line: Line<'_>) -> Option<(&str, &str, usize)> {
    let eq = line.text.find('=')?;
    let key = line.text[..eq].trim();
    let rest = &line.text[eq + 1..];
    let lead = rest.len() - rest.trim_start().len();
    Some((key, rest.trim(), line.offset + eq + 1 + lead))
}

fn indent(line: Line<'_>) -> usize {
    line.text.len() - line.text.trim_start().len()
}

pub fn parse_problem(src: &str) -> Result<ProblemFile, ParseDiagnostic> {
    let cx = Cx { src };
    let mut sections: Vec<Section> = Vec::new();
    for line in split_lines(src) {
        let t = line.text.trim();
        if t.is_empty() {
            continue;
        }
        if t.starts_with('[') {
            let at = line.offset + indent(line);
            let inner = t
                .strip_prefix('[')
                .and_then(|s| s.strip_suffix(']'))
                .ok_or_else(|| cx.diag_expecting(at + t.len(), "unterminated section header", &["]"]))?;
            let mut parts = inner.split_whitespace();
            let kind = parts.next().unwrap_or("");
            let name = parts.next();
            if parts.next().is_some() {
                return Err(cx.diag(at, "section header takes at most one name"));
            }
            let named = matches!(kind, "twist" | "gauge" | "chain");
            let known = named || matches!(kind, "context" | "oracle" | "fields" | "equations" | "tasks");
            if !known {
                return Err(cx.diag(at + 1, format!("unknown section `{}`", kind)));
            }
            if named != name.is_some() {
                let msg = if named { format!("section `{}` needs a name", kind) } else { format!("section `{}` takes no name", kind) };
                return Err(cx.diag(at, msg));
            }
            if !named && sections.iter().any(|s| s.kind == kind) {
                return Err(cx.diag(at, format!("duplicate section `{}`", kind)));
            }
            if named && sections.iter().any(|s| s.kind == kind && s.name == name) {
                return Err(cx.diag(at, format!("duplicate {} `{}`", kind, name.unwrap())));
            }
            sections.push(Section { kind, name, header: line, body: Vec::new() });
        } else {
            match sections.last_mut() {
                Some(s) => s.body.push(line),
                None => return Err(cx.diag_expecting(line.offset + indent(line), "expected section header", &["["])),
            }
        }
    }

    let ctx_section = sections.iter().find(|s| s.kind == "context").ok_or_else(|| cx.diag(0, "missing [context] section"))?;
    let ctx = parse_context(&cx, ctx_section)?;
    let mut oracle = EqualityConfig::default();
    if let Some(s) = sections.iter().find(|s| s.kind == "oracle") {
        oracle = parse_oracle(&cx, s)?;
    }
    let mut problem = ProblemFile {
        ctx: ctx.clone(),
        oracle,
        fields: Vec::new(),
        twists: Vec::new(),
        gauges: Vec::new(),
        chains: Vec::new(),
        equations: None,
        tasks: Vec::new(),
    };
    for s in &sections {
        match s.kind {
            "fields" => problem.fields = parse_fields(&cx, s, &ctx)?,
            "twist" => {
                let t = parse_twist(&cx, s, &ctx)?;
                problem.twists.push((s.name.unwrap().to_string(), t));
            }
            "gauge" => {
                let g = parse_gauge(&cx, s, &ctx)?;
                problem.gauges.push((s.name.unwrap().to_string(), g));
            }
            "equations" => problem.equations = Some(parse_equations(&cx, s, &ctx)?),
            _ => {}
        }
    }
    for s in sections.iter().filter(|s| s.kind == "chain") {
        let c = parse_chain(&cx, s, &ctx, &problem)?;
        problem.chains.push((s.name.unwrap().to_string(), c));
    }
    if let Some(s) = sections.iter().find(|s| s.kind == "tasks") {
        for line in &s.body {
            let task = parse_task_line(&cx, *line, &problem)?;
            problem.tasks.push(task);
        }
    }
    Ok(problem)
}

fn parse_usize(cx: &Cx<'_>, v: &str, at: usize) -> Result<usize, ParseDiagnostic> {
    v.parse().map_err(|_| cx.diag_expecting(at, format!("expected a non-negative integer, found `{}`", v), &["integer"]))
}

fn parse_context(cx: &Cx<'_>, s: &Section<'_>) -> Result<JetContext, ParseDiagnostic> {
    let (mut q, mut p, mut n) = (1, 1, None);
    let mut params: Vec<(String, usize)> = Vec::new();
    for line in &s.body {
        let (k, v, at) = key_value(*line).ok_or_else(|| cx.diag_expecting(line.offset, "expected `key = value`", &["="]))?;
        match k {
            "q" => q = parse_usize(cx, v, at)?,
            "p" => p = parse_usize(cx, v, at)?,
            "n" => n = Some(parse_usize(cx, v, at)?),
            "params" => {
                let mut off = at;
                for part in v.split(',') {
                    let lead = part.len() - part.trim_start().len();
                    params.push((part.trim().to_string(), off + lead));
                    off += part.len() + 1;
                }
            }
            _ => return Err(cx.diag(line.offset + indent(*line), format!("unknown context key `{}`", k))),
        }
    }
    let n = n.ok_or_else(|| cx.diag(s.header.offset, "context needs `n`"))?;
    let ctx = JetContext::new(q, p, n).map_err(|e| cx.diag(s.header.offset, e.to_string()))?;
    let names: Vec<&str> = params.iter().map(|(s, _)| s.as_str()).collect();
    ctx.clone().with_params(&names).map_err(|e| {
        let at = params.first().map_or(s.header.offset, |p| p.1);
        cx.diag(at, e.to_string())
    })
}

fn parse_oracle(cx: &Cx<'_>, s: &Section<'_>) -> Result<EqualityConfig, ParseDiagnostic> {
    let mut cfg = EqualityConfig::default();
    for line in &s.body {
        let (k, v, at) = key_value(*line).ok_or_else(|| cx.diag_expecting(line.offset, "expected `key = value`", &["="]))?;
        let float = |v: &str| v.parse::<f64>().map_err(|_| cx.diag_expecting(at, format!("expected a number, found `{}`", v), &["number"]));
        match k {
            "samples" => cfg.samples = parse_usize(cx, v, at)?,
            "seed" => cfg.seed = v.parse().map_err(|_| cx.diag_expecting(at, "expected an unsigned integer", &["integer"]))?,
            "rtol" => cfg.rtol = float(v)?,
            "atol" => cfg.atol = float(v)?,
            "half_width" => cfg.half_width = float(v)?,
            _ => return Err(cx.diag(line.offset + indent(*line), format!("unknown oracle key `{}`", k))),
        }
    }
    cfg.validate().map_err(|e| cx.diag(s.header.offset, e.to_string()))?;
    Ok(cfg)
}

fn parse_fields(cx: &Cx<'_>, s: &Section<'_>, ctx: &JetContext) -> Result<Vec<(String, VectorField)>, ParseDiagnostic> {
    let mut order: Vec<(String, usize)> = Vec::new();
    let mut parts: BTreeMap<String, (Option<Vec<Expr>>, Option<Vec<Expr>>)> = BTreeMap::new();
    for line in &s.body {
        let (k, v, at) = key_value(*line).ok_or_else(|| cx.diag_expecting(line.offset, "expected `NAME xi = …` or `NAME phi = …`", &["="]))?;
        let start = line.offset + indent(*line);
        let mut words = k.split_whitespace();
        let (name, comp) = match (words.next(), words.next(), words.next()) {
            (Some(n), Some(c), None) if c == "xi" || c == "phi" => (n, c),
            _ => return Err(cx.diag_expecting(start, "expected a field name followed by `xi` or `phi`", &["xi", "phi"])),
        };
        let list = cx.expr_list(v, at, ctx)?;
        let want = if comp == "xi" { ctx.q() } else { ctx.p() };
        if list.len() != want {
            return Err(cx.diag(at, format!("`{}` needs {} entries, found {}", comp, want, list.len())));
        }
        if !parts.contains_key(name) {
            order.push((name.to_string(), start));
        }
        let slot = parts.entry(name.to_string()).or_default();
        let target = if comp == "xi" { &mut slot.0 } else { &mut slot.1 };
        if target.replace(list).is_some() {
            return Err(cx.diag(start, format!("`{} {}` given twice", name, comp)));
        }
    }
    order
        .into_iter()
        .map(|(name, at)| {
            let (xi, phi) = parts.remove(&name).unwrap();
            let xi = xi.unwrap_or_else(|| vec![Expr::zero(); ctx.q()]);
            let phi = phi.unwrap_or_else(|| vec![Expr::zero(); ctx.p()]);
            let f = VectorField::new(ctx, xi, phi).map_err(|e| cx.diag(at, e.to_string()))?;
            Ok((name, f))
        })
        .collect()
}

/// `key = value` entries and `key =` matrices of a block.
struct Block<'a> {
    scalars: Vec<(&'a str, &'a str, usize, usize)>,
    matrices: Vec<(&'a str, Vec<Line<'a>>, usize)>,
}

fn collect_block<'a>(cx: &Cx<'_>, s: &Section<'a>) -> Result<Block<'a>, ParseDiagnostic> {
    let mut b = Block { scalars: Vec::new(), matrices: Vec::new() };
    let mut open = false;
    for line in &s.body {
        let start = line.offset + indent(*line);
        match key_value(*line) {
            Some((k, "", _)) => {
                b.matrices.push((k, Vec::new(), start));
                open = true;
            }
            Some((k, v, at)) => {
                b.scalars.push((k, v, at, start));
                open = false;
            }
            None if open => b.matrices.last_mut().unwrap().1.push(*line),
            None => return Err(cx.diag_expecting(start, "expected `key = value`", &["="])),
        }
    }
    Ok(b)
}

fn parse_matrix(cx: &Cx<'_>, rows: &[Line<'_>], at: usize, ctx: &JetContext) -> Result<MatrixExpr, ParseDiagnostic> {
    if rows.is_empty() {
        return Err(cx.diag(at, "matrix has no rows"));
    }
    let parsed = rows
        .iter()
        .map(|l| {
            let lead = indent(*l);
            cx.expr_list(l.text.trim(), l.offset + lead, ctx)
        })
        .collect::<Result<Vec<_>, _>>()?;
    MatrixExpr::from_rows(parsed).map_err(|e| cx.diag(at, e.to_string()))
}

fn parse_direction(cx: &Cx<'_>, v: &str, at: usize) -> Result<Direction, ParseDiagnostic> {
    match v {
        "forward" => Ok(Direction::Forward),
        "inverse" => Ok(Direction::Inverse),
        _ => Err(cx.diag_expecting(at, format!("unknown direction `{}`", v), &["forward", "inverse"])),
    }
}

fn parse_twist(cx: &Cx<'_>, s: &Section<'_>, ctx: &JetContext) -> Result<TwistSpec, ParseDiagnostic> {
    let b = collect_block(cx, s)?;
    let scalar = |key: &str| b.scalars.iter().find(|t| t.0 == key);
    let matrix = |key: &str| b.matrices.iter().find(|t| t.0 == key);
    let (kind, kind_at) = scalar("kind").map(|t| (t.1, t.2)).ok_or_else(|| cx.diag(s.header.offset, "twist needs `kind`"))?;
    let p = ctx.p();
    let square = |m: &MatrixExpr, size: Option<usize>, at: usize| -> Result<(), ParseDiagnostic> {
        if !m.is_square() || size.is_some_and(|k| m.rows() != k) {
            let want = size.map_or("a square matrix".to_string(), |k| format!("a {}x{} matrix", k, k));
            return Err(cx.diag(at, format!("expected {}", want)));
        }
        Ok(())
    };
    let get_matrix = |key: &str, size: Option<usize>| -> Result<MatrixExpr, ParseDiagnostic> {
        let (_, rows, at) = matrix(key).ok_or_else(|| cx.diag(s.header.offset, format!("twist needs matrix `{}`", key)))?;
        let m = parse_matrix(cx, rows, *at, ctx)?;
        square(&m, size, *at)?;
        Ok(m)
    };
    let spec = match kind {
        "standard" => TwistSpec::Standard,
        "lambda" => {
            let (_, v, at, _) = scalar("lambda").ok_or_else(|| cx.diag(s.header.offset, "twist needs `lambda`"))?;
            TwistSpec::Lambda(cx.expr(v, *at, ctx)?)
        }
        "mu" => {
            let mut ms = Vec::new();
            for i in 1..=ctx.q() {
                let key = if ctx.q() == 1 && matrix("Lambda").is_some() { "Lambda".to_string() } else { format!("Lambda{}", i) };
                ms.push(get_matrix(&key, Some(p))?);
            }
            TwistSpec::Mu(ms)
        }
        "sigma" => TwistSpec::Sigma(get_matrix("sigma", None)?),
        "chi" => TwistSpec::Chi(get_matrix("Lambda", Some(p))?, get_matrix("sigma", None)?),
        _ => {
            return Err(cx.diag_expecting(kind_at, format!("unknown twist kind `{}`", kind), &["standard", "lambda", "mu", "sigma", "chi"]))
        }
    };
    if matches!(kind, "lambda" | "sigma" | "chi") && ctx.q() != 1 {
        return Err(cx.diag(kind_at, format!("`{}` twists need q = 1", kind)));
    }
    spec.validate(ctx).map_err(|e| cx.diag(s.header.offset, e.to_string()))?;
    Ok(spec)
}

fn parse_gauge(cx: &Cx<'_>, s: &Section<'_>, ctx: &JetContext) -> Result<GaugeDecl, ParseDiagnostic> {
    let b = collect_block(cx, s)?;
    let scalar = |key: &str| b.scalars.iter().find(|t| t.0 == key);
    let (kind, kind_at) = scalar("kind").map(|t| (t.1, t.2)).ok_or_else(|| cx.diag(s.header.offset, "gauge needs `kind`"))?;
    let direction = match scalar("direction") {
        Some((_, v, at, _)) => parse_direction(cx, v, *at)?,
        None => Direction::Forward,
    };
    let get_matrix = |key: &str| -> Result<MatrixExpr, ParseDiagnostic> {
        let (_, rows, at) =
            b.matrices.iter().find(|t| t.0 == key).ok_or_else(|| cx.diag(s.header.offset, format!("gauge needs matrix `{}`", key)))?;
        let m = parse_matrix(cx, rows, *at, ctx)?;
        if !m.is_square() {
            return Err(cx.diag(*at, "expected a square matrix"));
        }
        Ok(m)
    };
    Ok(match kind {
        "scalar" => {
            let (_, v, at, _) = scalar("beta").ok_or_else(|| cx.diag(s.header.offset, "gauge needs `beta`"))?;
            GaugeDecl::Scalar { beta: cx.expr(v, *at, ctx)?, direction }
        }
        "vector" => GaugeDecl::Vector { a: get_matrix("A")?, direction },
        "module" => GaugeDecl::Module { gamma: get_matrix("Gamma")?, direction },
        "combined" => GaugeDecl::Combined { a: get_matrix("A")?, gamma: get_matrix("Gamma")?, direction },
        _ => {
            return Err(cx.diag_expecting(kind_at, format!("unknown gauge kind `{}`", kind), &["scalar", "vector", "module", "combined"]))
        }
    })
}

fn parse_chain(cx: &Cx<'_>, s: &Section<'_>, ctx: &JetContext, problem: &ProblemFile) -> Result<ChainDecl, ParseDiagnostic> {
    let b = collect_block(cx, s)?;
    let mut fields = Vec::new();
    let mut twist = None;
    let mut eta = None;
    let mut zeta = Vec::new();
    for (k, v, at, start) in &b.scalars {
        match *k {
            "fields" => {
                let mut off = *at;
                for part in v.split(',') {
                    let name = part.trim();
                    if problem.field(name).is_none() {
                        return Err(cx.diag(off + (part.len() - part.trim_start().len()), format!("unknown field `{}`", name)));
                    }
                    fields.push(name.to_string());
                    off += part.len() + 1;
                }
            }
            "twist" => {
                if *v != "standard" && problem.twist(v).is_none() {
                    return Err(cx.diag(*at, format!("unknown twist `{}`", v)));
                }
                twist = (*v != "standard").then(|| v.to_string());
            }
            "eta" => eta = Some(cx.expr(v, *at, ctx)?),
            "zeta" => zeta.extend(cx.expr_list(v, *at, ctx)?),
            _ => return Err(cx.diag(*start, format!("unknown chain key `{}`", k))),
        }
    }
    if fields.is_empty() {
        return Err(cx.diag(s.header.offset, "chain needs `fields`"));
    }
    let eta = eta.ok_or_else(|| cx.diag(s.header.offset, "chain needs `eta`"))?;
    if zeta.is_empty() {
        return Err(cx.diag(s.header.offset, "chain needs at least one `zeta`"));
    }
    Ok(ChainDecl { fields, twist, eta, zeta })
}

fn parse_equations(cx: &Cx<'_>, s: &Section<'_>, ctx: &JetContext) -> Result<SolvedSystem, ParseDiagnostic> {
    let mut eqs = Vec::new();
    for line in &s.body {
        let (k, v, at) = key_value(*line).ok_or_else(|| cx.diag_expecting(line.offset, "expected `u_[k] = …`", &["="]))?;
        let start = line.offset + indent(*line);
        let lhs = cx.expr(k, start, ctx)?;
        let (dep, lead) = match lhs.as_sym().and_then(|s| ctx.classify(s)) {
            Some(Coord::Dep(a, j)) if j.order() > 0 => (a, j),
            _ => return Err(cx.diag(start, "left-hand side must be a derivative coordinate")),
        };
        eqs.push(Equation { dep, lead, rhs: cx.expr(v, at, ctx)? });
    }
    SolvedSystem::new(ctx.clone(), eqs).map_err(|e| cx.diag(s.header.offset, e.to_string()))
}

/// Parse a single task line against the declarations of `problem`.
pub fn parse_task(text: &str, problem: &ProblemFile) -> Result<Task, ParseDiagnostic> {
    let cx = Cx { src: text };
    parse_task_line(&cx, Line { text, offset: 0, number: 1 }, problem)
}

fn parse_task_line(cx: &Cx<'_>, line: Line<'_>, problem: &ProblemFile) -> Result<Task, ParseDiagnostic> {
    let mut words: Vec<(&str, usize)> = Vec::new();
    let mut pos = 0;
    for w in line.text.split(' ') {
        if !w.trim().is_empty() {
            let lead = w.len() - w.trim_start().len();
            words.push((w.trim(), line.offset + pos + lead));
        }
        pos += w.len() + 1;
    }
    let (verb, verb_at) = words[0];
    if !VERBS.contains(&verb) {
        return Err(cx.diag_expecting(verb_at, format!("unknown task `{}`", verb), &VERBS));
    }
    let mut args = Vec::new();
    let mut options = BTreeMap::new();
    for (w, at) in &words[1..] {
        match w.split_once('=') {
            Some((k, v)) => {
                let v_at = at + k.len() + 1;
                check_option(cx, verb, k, v, *at, v_at, problem)?;
                options.insert(k.to_string(), v.to_string());
            }
            None if *w == "standard" => {
                options.insert("twist".to_string(), "standard".to_string());
            }
            None => {
                check_arg(cx, verb, args.len(), w, *at, problem)?;
                args.push(w.to_string());
            }
        }
    }
    let needs_first = matches!(verb, "check-mc" | "gauge-verify" | "ibdp-extend");
    if needs_first && args.is_empty() {
        return Err(cx.diag(verb_at + verb.len(), format!("`{}` needs a name", verb)));
    }
    if verb == "reduce" && args.is_empty() && !options.contains_key("v") {
        return Err(cx.diag(verb_at + verb.len(), "`reduce` needs a chain name or `v=`"));
    }
    Ok(Task { verb: verb.to_string(), args, options, text: line.text.trim().to_string(), line: line.number })
}

fn check_arg(cx: &Cx<'_>, verb: &str, index: usize, w: &str, at: usize, problem: &ProblemFile) -> Result<(), ParseDiagnostic> {
    let (what, ok) = match (verb, index) {
        ("check-mc", 0) => ("twist", problem.twist(w).is_some()),
        ("gauge-verify", 0) => ("gauge", problem.gauge(w).is_some()),
        ("ibdp-extend", 0) | ("reduce", 0) => ("chain", problem.chain(w).is_some()),
        ("check-mc", _) | ("ibdp-extend", _) | ("reduce", _) => ("argument", false),
        _ => ("field", problem.field(w).is_some()),
    };
    if ok {
        Ok(())
    } else {
        Err(cx.diag(at, format!("unknown {} `{}`", what, w)))
    }
}

fn check_option(
    cx: &Cx<'_>,
    verb: &str,
    k: &str,
    v: &str,
    at: usize,
    v_at: usize,
    problem: &ProblemFile,
) -> Result<(), ParseDiagnostic> {
    let allowed: &[&str] = match verb {
        "prolong" => &["twist", "lambda", "n"],
        "check-symmetry" | "check-strong" => &["twist", "lambda"],
        "invariants" => &["twist", "lambda", "degree"],
        "commutator-identity" => &["twist", "lambda", "n", "basket"],
        "gauge-verify" => &["n", "direction"],
        "ibdp-extend" => &["levels"],
        "reduce" => &["degree", "v"],
        _ => &[],
    };
    if !allowed.contains(&k) {
        return Err(cx.diag_expecting(at, format!("unknown option `{}` for `{}`", k, verb), allowed));
    }
    match k {
        "twist" if v != "standard" && problem.twist(v).is_none() => Err(cx.diag(v_at, format!("unknown twist `{}`", v))),
        "lambda" => cx.expr(v, v_at, &problem.ctx).map(|_| ()),
        "n" | "degree" | "levels" | "basket" => parse_usize(cx, v, v_at).map(|_| ()),
        "direction" => parse_direction(cx, v, v_at).map(|_| ()),
        "v" => match problem.ctx.canonical_name(v).and_then(|c| problem.ctx.classify(&crate::expr::Symbol::new(&c))) {
            Some(Coord::Dep(_, j)) if j.order() == 0 => Ok(()),
            _ => Err(cx.diag(v_at, format!("`{}` is not a dependent variable", v))),
        },
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SRC: &str = "[context]\nn = 2\nparams = c\n\n[fields]\nX phi = 1\n\n[twist L]\nkind = lambda\nlambda = c\n\n[tasks]\nprolong X twist=L\n";

    #[test]
    fn parses_minimal_file() {
        let p = parse_problem(SRC).unwrap();
        assert_eq!(p.fields.len(), 1);
        assert!(p.field("X").unwrap().xi()[0].is_zero());
        assert_eq!(p.tasks[0].verb, "prolong");
        assert_eq!(p.tasks[0].options["twist"], "L");
    }

    #[test]
    fn diagnostics_point_into_source() {
        let bad = SRC.replace("lambda = c", "lambda = 2c");
        let d = parse_problem(&bad).unwrap_err();
        assert_eq!(d.message, "expected operator");
        assert_eq!(&bad[d.offset..d.offset + 1], "c");
        let bad = SRC.replace("prolong X", "prolong Y");
        let d = parse_problem(&bad).unwrap_err();
        assert_eq!(d.message, "unknown field `Y`");
        assert_eq!(d.line, 13);
    }

    #[test]
    fn matrices() {
        let src = "[context]\np = 2\nn = 1\n[twist M]\nkind = mu\nLambda1 =\n  0; 1\n  0; 0\n";
        let p = parse_problem(src).unwrap();
        match p.twist("M").unwrap() {
            TwistSpec::Mu(ms) => assert!(ms[0].get(0, 1).is_one()),
            _ => panic!("wrong kind"),
        }
        let bad = src.replace("  0; 0\n", "");
        assert!(parse_problem(&bad).is_err());
    }
}
