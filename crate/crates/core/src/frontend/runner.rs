//! Task execution and reports.

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::expr::{expand, Expr};
use crate::field::{check_involution_with, VectorField};
use crate::gauge::{verify_gauge_chi, verify_gauge_lambda, verify_gauge_mu, verify_gauge_sigma, Direction};
use crate::jet::{Coord, SolvedSystem};
use crate::oracle::EqualityConfig;
use crate::prolong::{
    check_maurer_cartan, commutator_identity_report, prolong_chi, prolong_lambda, prolong_mu_with, prolong_sigma_fields,
    prolong_with, ProlongedField, TwistSpec,
};
use crate::reduction::{
    check_strong_symmetry, check_symmetry, find_first_invariants, reduce_adapted, reduce_by_invariants_with, InvariantChain,
};

use super::parser::parse_expression;
use super::problem::{GaugeDecl, ProblemFile, Task};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    /// Computation finished; nothing to verify.
    Ok,
    Pass,
    Fail,
    Error,
}

#[derive(Debug, Clone, Serialize)]
pub struct TaskResult {
    pub index: usize,
    pub line: usize,
    pub task: String,
    pub status: Status,
    /// Exit code this result contributes.
    pub code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(skip)]
    pub lines: Vec<String>,
    pub result: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub seed: u64,
    pub oracle: EqualityConfig,
    pub tasks: Vec<TaskResult>,
    pub exit_code: i32,
}

impl Report {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("seed: {}\n", self.seed));
        out.push_str(&format!(
            "oracle: samples={} half_width={} rtol={:e} atol={:e}\n",
            self.oracle.samples, self.oracle.half_width, self.oracle.rtol, self.oracle.atol
        ));
        out.push_str(&format!("tasks: {}\n", self.tasks.len()));
        for t in &self.tasks {
            out.push_str(&format!("\n[{}] line {}: {}\n", t.index, t.line, t.task));
            out.push_str(&format!("status: {}\n", status_name(t.status)));
            if let Some(m) = &t.message {
                out.push_str(&format!("message: {}\n", m));
            }
            for l in &t.lines {
                out.push_str("  ");
                out.push_str(l);
                out.push('\n');
            }
        }
        let count = |s: Status| self.tasks.iter().filter(|t| t.status == s).count();
        out.push_str(&format!(
            "\nsummary: {} ok, {} passed, {} failed, {} errors\n",
            count(Status::Ok),
            count(Status::Pass),
            count(Status::Fail),
            count(Status::Error)
        ));
        out.push_str(&format!("exit code: {}\n", self.exit_code));
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn status_name(s: Status) -> &'static str {
    match s {
        Status::Ok => "ok",
        Status::Pass => "pass",
        Status::Fail => "fail",
        Status::Error => "error",
    }
}

/// Exit code for an error: 3 internal, 1 failed verification, 2 otherwise.
pub fn error_code(e: &Error) -> i32 {
    match e {
        Error::Internal(_) => 3,
        Error::SymmetryCheckFailed
        | Error::NotInInvolution
        | Error::CompatibilityFailure
        | Error::VerificationFailed(_)
        | Error::InputsNotInvariant
        | Error::NotExpressible { .. }
        | Error::RankDegenerate => 1,
        _ => 2,
    }
}

struct Outcome {
    status: Status,
    lines: Vec<String>,
    result: Value,
}

impl Outcome {
    fn ok(lines: Vec<String>, result: Value) -> Self {
        Outcome { status: Status::Ok, lines, result }
    }

    fn verdict(holds: bool, lines: Vec<String>, result: Value) -> Self {
        Outcome { status: if holds { Status::Pass } else { Status::Fail }, lines, result }
    }
}

/// Run every task of the problem in order.
pub fn run_problem(problem: &ProblemFile) -> Report {
    run_tasks(problem, &problem.tasks)
}

pub fn run_tasks(problem: &ProblemFile, tasks: &[Task]) -> Report {
    let mut results = Vec::new();
    for (k, task) in tasks.iter().enumerate() {
        let cfg = problem.oracle.reseeded(k as u64);
        let (status, code, message, lines, result) = match run_task(problem, task, &cfg) {
            Ok(o) => {
                let code = if o.status == Status::Fail { 1 } else { 0 };
                (o.status, code, None, o.lines, o.result)
            }
            Err(e) => {
                let code = error_code(&e);
                let status = if code == 1 { Status::Fail } else { Status::Error };
                (status, code, Some(e.to_string()), Vec::new(), error_detail(&e))
            }
        };
        results.push(TaskResult { index: k + 1, line: task.line, task: task.text.clone(), status, code, message, lines, result });
    }
    let exit_code = results.iter().map(|r| r.code).fold(0, |acc, c| match (acc, c) {
        (3, _) | (_, 3) => 3,
        (2, _) | (_, 2) => 2,
        (a, b) => a.max(b),
    });
    Report { seed: problem.oracle.seed, oracle: problem.oracle.clone(), tasks: results, exit_code }
}

fn error_detail(e: &Error) -> Value {
    match e {
        Error::NotExpressible { degree, certificate } => json!({ "degree": degree, "certificate": certificate }),
        _ => Value::Null,
    }
}

fn opt_usize(task: &Task, key: &str, default: usize) -> Result<usize> {
    match task.options.get(key) {
        Some(v) => v.parse().map_err(|_| Error::InvalidInput(format!("`{}` must be an integer", key))),
        None => Ok(default),
    }
}

fn named_fields(problem: &ProblemFile, names: &[String]) -> Result<Vec<(String, VectorField)>> {
    if names.is_empty() {
        if problem.fields.is_empty() {
            return Err(Error::InvalidInput("no fields declared".into()));
        }
        return Ok(problem.fields.clone());
    }
    names
        .iter()
        .map(|n| {
            problem.field(n).cloned().map(|f| (n.clone(), f)).ok_or_else(|| Error::InvalidInput(format!("unknown field `{}`", n)))
        })
        .collect()
}

fn task_twist(problem: &ProblemFile, task: &Task) -> Result<TwistSpec> {
    if let Some(l) = task.options.get("lambda") {
        let e = parse_expression(l, &problem.ctx).map_err(Error::Parse)?;
        return Ok(TwistSpec::Lambda(e));
    }
    named_twist(problem, task.options.get("twist").map(String::as_str))
}

fn named_twist(problem: &ProblemFile, name: Option<&str>) -> Result<TwistSpec> {
    match name {
        None | Some("standard") => Ok(TwistSpec::Standard),
        Some(n) => problem.twist(n).cloned().ok_or_else(|| Error::InvalidInput(format!("unknown twist `{}`", n))),
    }
}

/// Prolong a family of fields with one twist. σ and χ twists act on the
/// family as a whole.
pub fn prolong_family(fields: &[VectorField], twist: &TwistSpec, n: usize, cfg: &EqualityConfig) -> Result<Vec<ProlongedField>> {
    match twist {
        TwistSpec::Standard => fields.iter().map(|f| prolong_with(f, n, true, cfg)).collect(),
        TwistSpec::Lambda(l) => fields.iter().map(|f| prolong_lambda(f, l, n)).collect(),
        TwistSpec::Mu(ls) => fields.iter().map(|f| prolong_mu_with(f, ls, n, false, cfg)).collect(),
        TwistSpec::Sigma(s) => prolong_sigma_fields(fields, s, n),
        TwistSpec::Chi(l, s) => prolong_chi(fields, l, s, n),
    }
}

fn equation_line(system: &SolvedSystem) -> Vec<String> {
    let ctx = system.ctx();
    system.equations().iter().map(|e| format!("{} = {}", ctx.coord_name(e.dep, &e.lead), e.rhs)).collect()
}

fn need_system(problem: &ProblemFile) -> Result<&SolvedSystem> {
    problem.equations.as_ref().ok_or_else(|| Error::InvalidInput("no [equations] section".into()))
}

fn run_task(problem: &ProblemFile, task: &Task, cfg: &EqualityConfig) -> Result<Outcome> {
    match task.verb.as_str() {
        "prolong" => {
            let fields = named_fields(problem, &task.args)?;
            let twist = task_twist(problem, task)?;
            let n = opt_usize(task, "n", problem.ctx.n())?;
            let vfs: Vec<VectorField> = fields.iter().map(|f| f.1.clone()).collect();
            let ys = prolong_family(&vfs, &twist, n, cfg)?;
            let mut lines = vec![format!("order: {}", n)];
            let mut out = Vec::new();
            for ((name, _), y) in fields.iter().zip(&ys) {
                lines.push(format!("{}:", name));
                for e in y.table() {
                    lines.push(format!("  {} = {}", e.name, e.value));
                }
                out.push(json!({ "field": name, "table": y.table() }));
            }
            Ok(Outcome::ok(lines, json!({ "order": n, "fields": out })))
        }
        "check-symmetry" | "check-strong" => {
            let system = need_system(problem)?;
            let fields = named_fields(problem, &task.args)?;
            let twist = task_twist(problem, task)?;
            let n = system.equations().iter().map(|e| e.lead.order()).max().unwrap_or(1);
            let vfs: Vec<VectorField> = fields.iter().map(|f| f.1.clone()).collect();
            let ys = prolong_family(&vfs, &twist, n, cfg)?;
            let strong = task.verb == "check-strong";
            let v = if strong { check_strong_symmetry(system, &ys, cfg)? } else { check_symmetry(system, &ys, cfg)? };
            let mut lines = vec![format!("twist: {}", twist.name())];
            let neq = system.equations().len();
            for (k, r) in v.residuals.iter().enumerate() {
                lines.push(format!("residual[{}, eq {}] = {}", fields[k / neq].0, k % neq + 1, expand(r)));
            }
            lines.push(format!("worst residual: {:.3e}", v.worst_residual));
            let kind = if strong { "strong symmetry" } else { "symmetry" };
            lines.push(format!("verdict: {}{}", if v.holds { "" } else { "not a " }, kind));
            Ok(Outcome::verdict(v.holds, lines, serde_json::to_value(&v).expect("serializes")))
        }
        "check-mc" => {
            let twist = named_twist(problem, Some(&task.args[0]))?;
            let ls = match &twist {
                TwistSpec::Mu(ls) => ls.clone(),
                TwistSpec::Chi(l, _) => vec![l.clone()],
                _ => return Err(Error::InvalidInput("check-mc needs a mu or chi twist".into())),
            };
            let r = check_maurer_cartan(&problem.ctx, &ls, cfg)?;
            let mut lines = Vec::new();
            let mut res = Vec::new();
            for (i, j, m) in &r.residuals {
                let rows: Vec<String> = (0..m.rows())
                    .map(|a| (0..m.cols()).map(|b| m.get(a, b).to_string()).collect::<Vec<_>>().join("; "))
                    .collect();
                lines.push(format!("residual[{}, {}] =", i + 1, j + 1));
                lines.extend(rows.iter().map(|r| format!("  {}", r)));
                res.push(json!({ "i": i + 1, "j": j + 1, "rows": rows }));
            }
            lines.push(format!("verdict: {}", if r.holds { "flat" } else { "not flat" }));
            Ok(Outcome::verdict(r.holds, lines, json!({ "holds": r.holds, "residuals": res, "report": r.report })))
        }
        "gauge-verify" => {
            let gauge = problem.gauge(&task.args[0]).ok_or_else(|| Error::InvalidInput("unknown gauge".into()))?;
            let fields = named_fields(problem, &task.args[1..])?;
            let vfs: Vec<VectorField> = fields.iter().map(|f| f.1.clone()).collect();
            let n = opt_usize(task, "n", problem.ctx.n())?;
            let declared = match gauge {
                GaugeDecl::Scalar { direction, .. }
                | GaugeDecl::Vector { direction, .. }
                | GaugeDecl::Module { direction, .. }
                | GaugeDecl::Combined { direction, .. } => *direction,
            };
            let dir = match task.options.get("direction").map(String::as_str) {
                Some("inverse") => Direction::Inverse,
                Some("forward") => Direction::Forward,
                _ => declared,
            };
            let mut verdicts = Vec::new();
            match gauge {
                GaugeDecl::Scalar { beta, .. } => {
                    for f in &vfs {
                        verdicts.push(verify_gauge_lambda(f, beta, n, dir, cfg)?);
                    }
                }
                GaugeDecl::Vector { a, .. } => {
                    for f in &vfs {
                        verdicts.push(verify_gauge_mu(f, a, n, dir, cfg)?);
                    }
                }
                GaugeDecl::Module { gamma, .. } => verdicts.push(verify_gauge_sigma(&vfs, gamma, n, dir, cfg)?),
                GaugeDecl::Combined { a, gamma, .. } => verdicts.push(verify_gauge_chi(&vfs, a, gamma, n, dir, cfg)?),
            }
            let holds = verdicts.iter().all(|v| v.holds);
            let worst = verdicts.iter().map(|v| v.report.worst_ratio()).fold(0.0, f64::max);
            let mut lines = vec![format!("direction: {}", if dir == Direction::Forward { "forward" } else { "inverse" })];
            lines.push(format!("worst ratio: {:.3e}", worst));
            if let Some(d) = verdicts.iter().find_map(|v| v.distribution) {
                lines.push(format!("same distribution: {}", d));
            }
            lines.push(format!("verdict: diagram {}", if holds { "commutes" } else { "does not commute" }));
            Ok(Outcome::verdict(holds, lines, json!({ "direction": dir, "verdicts": verdicts })))
        }
        "invariants" => {
            let fields = named_fields(problem, &task.args)?;
            let twist = task_twist(problem, task)?;
            let degree = opt_usize(task, "degree", 2)?;
            let vfs: Vec<VectorField> = fields.iter().map(|f| f.1.clone()).collect();
            let ys = prolong_family(&vfs, &twist, 1, cfg)?;
            let found = find_first_invariants(&ys, degree, cfg)?;
            let mut lines = Vec::new();
            lines.extend(found.eta.iter().map(|e| format!("eta = {}", e)));
            lines.extend(found.zeta.iter().map(|e| format!("zeta = {}", e)));
            if let Some(n) = &found.note {
                lines.push(format!("note: {}", n));
            }
            Ok(Outcome::ok(lines, serde_json::to_value(&found).expect("serializes")))
        }
        "ibdp-extend" => {
            let (chain, _) = build_chain(problem, &task.args[0], cfg)?;
            let levels = opt_usize(task, "levels", 2)?;
            let mut chain = chain;
            chain.extend_to(levels, cfg)?;
            let mut lines = vec![format!("eta = {}", chain.eta())];
            let mut out = Vec::new();
            for a in 0..chain.width() {
                let zs: Vec<String> = chain.zetas(a).iter().map(Expr::to_string).collect();
                for (k, z) in zs.iter().enumerate() {
                    lines.push(format!("zeta[{}]({}) = {}", a + 1, k, z));
                }
                out.push(zs);
            }
            Ok(Outcome::ok(lines, json!({ "eta": chain.eta().to_string(), "zeta": out })))
        }
        "reduce" => {
            let system = need_system(problem)?;
            if let Some(v) = task.options.get("v") {
                let name = problem.ctx.canonical_name(v).ok_or_else(|| Error::UndeclaredSymbol(v.clone()))?;
                let dep = match problem.ctx.classify(&crate::expr::Symbol::new(&name)) {
                    Some(Coord::Dep(a, _)) => a,
                    _ => return Err(Error::InvalidInput(format!("`{}` is not a dependent variable", v))),
                };
                let r = reduce_adapted(system, dep, cfg)?;
                let mut lines = equation_line(&r.system);
                lines.push(format!("reconstruction: {}", r.quadrature));
                return Ok(Outcome::ok(
                    lines.clone(),
                    json!({ "equations": equation_line(&r.system), "reconstruction": r.quadrature }),
                ));
            }
            let (chain, _) = build_chain(problem, &task.args[0], cfg)?;
            let degree = opt_usize(task, "degree", 3)?;
            let r = reduce_by_invariants_with(system, &chain, degree, cfg)?;
            let eqs = equation_line(&r.system);
            let mut lines = vec!["reduced system (x for y, u for z):".to_string()];
            lines.extend(eqs.iter().map(|e| format!("  {}", e)));
            lines.push("auxiliary:".to_string());
            lines.extend(r.auxiliary.iter().map(|e| format!("  {}", e)));
            lines.push(format!("certificate: {}", r.certificate));
            Ok(Outcome::ok(
                lines,
                json!({ "equations": eqs, "auxiliary": r.auxiliary, "certificate": r.certificate, "symmetry": r.symmetry }),
            ))
        }
        "involution" => {
            let fields = named_fields(problem, &task.args)?;
            let vfs: Vec<VectorField> = fields.iter().map(|f| f.1.clone()).collect();
            let sys = check_involution_with(&vfs, cfg)?;
            let mut lines = Vec::new();
            let mut out = Vec::new();
            let r = sys.len();
            for a in 0..r {
                for b in a + 1..r {
                    for c in 0..r {
                        let f = sys.structure(a, b, c);
                        if !f.is_zero() {
                            lines.push(format!("f[{}, {}]^{} = {}", fields[a].0, fields[b].0, fields[c].0, f));
                            out.push(json!({ "a": fields[a].0, "b": fields[b].0, "c": fields[c].0, "value": f.to_string() }));
                        }
                    }
                }
            }
            if sys.is_commuting() {
                lines.push("commuting".to_string());
            }
            if sys.numeric_only() {
                lines.push("structure functions confirmed numerically only".to_string());
            }
            lines.push("verdict: in involution".to_string());
            Ok(Outcome::verdict(true, lines, json!({ "structure": out, "numeric_only": sys.numeric_only() })))
        }
        "commutator-identity" => {
            let fields = named_fields(problem, &task.args)?;
            let twist = task_twist(problem, task)?;
            let n = opt_usize(task, "n", problem.ctx.n())?;
            let basket = opt_usize(task, "basket", 10)?;
            let vfs: Vec<VectorField> = fields.iter().map(|f| f.1.clone()).collect();
            let ys = prolong_family(&vfs, &twist, n, cfg)?;
            let results = commutator_identity_report(&ys, basket, cfg)?;
            let holds = results.iter().all(|r| r.holds);
            let lines = results
                .iter()
                .map(|r| format!("{} ({}): {}", fields[r.field].0, r.identity, if r.holds { "holds" } else { "fails" }))
                .collect();
            Ok(Outcome::verdict(holds, lines, serde_json::to_value(&results).expect("serializes")))
        }
        other => Err(Error::InvalidInput(format!("unknown task `{}`", other))),
    }
}

fn build_chain(problem: &ProblemFile, name: &str, cfg: &EqualityConfig) -> Result<(InvariantChain, TwistSpec)> {
    let decl = problem.chain(name).ok_or_else(|| Error::InvalidInput(format!("unknown chain `{}`", name)))?;
    let vfs: Vec<VectorField> = named_fields(problem, &decl.fields)?.into_iter().map(|f| f.1).collect();
    let twist = named_twist(problem, decl.twist.as_deref())?;
    let ys = prolong_family(&vfs, &twist, 1, cfg)?;
    let chain = InvariantChain::new(&ys, decl.eta.clone(), decl.zeta.clone(), cfg)?;
    Ok((chain, twist))
}

#[cfg(test)]
mod tests {
    use super::super::problem::parse_problem;
    use super::*;

    #[test]
    fn lambda_zero_matches_standard() {
        let src = "[context]\nn = 2\n[fields]\nX xi = x\nX phi = u^2\n[tasks]\nprolong X lambda=0\nprolong X standard\n";
        let r = run_problem(&parse_problem(src).unwrap());
        assert_eq!(r.exit_code, 0);
        assert_eq!(r.tasks[0].result, r.tasks[1].result);
        assert_eq!(r.tasks[0].lines, r.tasks[1].lines);
    }

    #[test]
    fn exit_codes() {
        let src = "[context]\nn = 2\n[fields]\nU phi = 1\n[equations]\nu_[2] = u\n[tasks]\ncheck-symmetry U\n";
        let r = run_problem(&parse_problem(src).unwrap());
        assert_eq!(r.exit_code, 1);
        assert_eq!(r.tasks[0].status, Status::Fail);
        let src = "[context]\nn = 2\n[fields]\nU phi = 1\n[tasks]\ncheck-symmetry U\n";
        assert_eq!(run_problem(&parse_problem(src).unwrap()).exit_code, 2);
        let src = "[context]\nn = 1\n";
        let r = run_problem(&parse_problem(src).unwrap());
        assert_eq!((r.exit_code, r.tasks.len()), (0, 0));
    }

    #[test]
    fn reports_are_reproducible() {
        let src = "[context]\nn = 2\nparams = c\n[oracle]\nseed = 11\n[fields]\nU phi = 1\n[twist L]\nkind = lambda\nlambda = c\n[equations]\nu_[2] = c*u_[1]\n[tasks]\ncheck-symmetry U twist=L\ninvariants U twist=L\n";
        let p = parse_problem(src).unwrap();
        let a = run_problem(&p);
        let b = run_problem(&p);
        assert_eq!(a.to_text(), b.to_text());
        assert_eq!(a.to_json(), b.to_json());
        assert!(a.to_text().starts_with("seed: 11\n"));
    }
}
