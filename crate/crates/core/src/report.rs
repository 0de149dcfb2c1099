//! Scenario execution and deterministic report rendering. Requests run in
//! order; a failure in one request is recorded and does not abort the rest.

use num_traits::One;

use crate::ambient::{Ambient, ConstructibleSet, CoordCycle};
use crate::current::{Coeff, Current, Term};
use crate::error::Result;
use crate::lelong::lelong_number;
use crate::metric::{chern_current, segre_current, segre_product};
use crate::oracle::{standard_check, OracleRow, CSV_HEADER};
use crate::scenario::{render_request, Request, ScenarioFile, SetExpr};
use crate::weight::{bracket_power, generalized_product, ma_power, unbounded_locus};

/// Outcome of one request.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    /// A current, in canonical rendering.
    Current(String),
    /// An exact rational value.
    Value(String),
    /// Oracle comparison rows.
    Oracle(Vec<OracleRow>),
    /// The request failed; the engine diagnostic.
    Error(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportItem {
    pub request: String,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    /// Engine name and version.
    pub engine: String,
    /// Canonical rendering of the executed scenario.
    pub scenario: String,
    pub items: Vec<ReportItem>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    JsonLike,
}

fn render_value(c: &Coeff) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

/// Evaluate a current-producing request.
fn eval_current(s: &ScenarioFile, r: &Request) -> Result<Current> {
    match r {
        Request::Segre { k } => {
            segre_current(*k, s.metric.as_ref().expect("checked at parse"), &s.rules)
        }
        Request::Chern { k } => {
            chern_current(*k, s.metric.as_ref().expect("checked at parse"), &s.rules)
        }
        Request::SegreProduct { ks } => {
            segre_product(ks, s.metric.as_ref().expect("checked at parse"), &s.rules)
        }
        Request::MaPower { weight, k } => {
            let w = s.weight(weight).expect("checked at parse");
            ma_power(w, *k)
        }
        Request::GeneralizedProduct { factors } => {
            let mut fs = Vec::new();
            for (name, set) in factors {
                let w = s.weight(name).expect("checked at parse").clone();
                let amb = w.ambient.clone();
                let cycles = |cs: &[std::collections::BTreeSet<usize>]| -> Vec<CoordCycle> {
                    cs.iter()
                        .map(|c| CoordCycle::base(&amb, c.iter().copied()))
                        .collect()
                };
                let set = match set {
                    SetExpr::Auto => ConstructibleSet::complement_of(unbounded_locus(&w)),
                    SetExpr::All => ConstructibleSet::whole_space(),
                    SetExpr::Off(cs) => ConstructibleSet::complement_of(cycles(cs)),
                    SetExpr::On(cs) => ConstructibleSet::union_of(cycles(cs)),
                };
                fs.push((w, set));
            }
            generalized_product(&fs)
        }
        Request::BracketPower { weight, alpha, m } => {
            let w = s.weight(weight).expect("checked at parse");
            let alpha = Current::from_term(
                &w.ambient,
                Term::new(Coeff::one(), alpha.clone(), CoordCycle::trivial(&w.ambient)),
            )?;
            bracket_power(w, &alpha, *m)
        }
        Request::Lelong { .. } | Request::OracleCheck { .. } => {
            unreachable!("rejected as current targets at parse time")
        }
    }
}

fn eval_request(s: &ScenarioFile, r: &Request) -> Result<Outcome> {
    match r {
        Request::Lelong { target, point } => {
            let t = eval_current(s, target)?;
            let base = Ambient::base(s.base_dim);
            // Segre/Chern outputs live on the base already; weight requests do
            // too because scenario weights are base weights.
            debug_assert_eq!(t.ambient, base);
            let v = lelong_number(&t, &point.to_point(s.base_dim))?;
            Ok(Outcome::Value(render_value(&v)))
        }
        Request::OracleCheck { name, tolerance } => {
            Ok(Outcome::Oracle(standard_check(name, *tolerance)?))
        }
        other => Ok(Outcome::Current(eval_current(s, other)?.render(&s.names))),
    }
}

/// Execute every request in order. Engine errors are captured per request.
pub fn run_scenario(s: &ScenarioFile) -> Report {
    let items = s
        .requests
        .iter()
        .map(|r| ReportItem {
            request: render_request(r, &s.names),
            outcome: match eval_request(s, r) {
                Ok(o) => o,
                Err(e) => Outcome::Error(e.to_string()),
            },
        })
        .collect();
    Report {
        engine: format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION")),
        scenario: s.render(),
        items,
    }
}

fn render_text(r: &Report) -> String {
    let mut out = String::new();
    out.push_str(&format!("engine: {}\n", r.engine));
    out.push_str("scenario:\n");
    for line in r.scenario.lines() {
        out.push_str("  ");
        out.push_str(line);
        out.push('\n');
    }
    for item in &r.items {
        out.push('\n');
        out.push_str(&format!("request: {}\n", item.request));
        match &item.outcome {
            Outcome::Current(c) => out.push_str(&format!("result: {}\n", c)),
            Outcome::Value(v) => out.push_str(&format!("result: {}\n", v)),
            Outcome::Error(e) => out.push_str(&format!("error: {}\n", e)),
            Outcome::Oracle(rows) => {
                out.push_str(CSV_HEADER);
                out.push('\n');
                for row in rows {
                    out.push_str(&row.csv());
                    out.push('\n');
                }
            }
        }
    }
    out
}

fn render_json(r: &Report) -> String {
    use serde_json::{json, Value};
    let items: Vec<Value> = r
        .items
        .iter()
        .map(|item| {
            let (kind, value) = match &item.outcome {
                Outcome::Current(c) => ("current", json!(c)),
                Outcome::Value(v) => ("value", json!(v)),
                Outcome::Error(e) => ("error", json!(e)),
                Outcome::Oracle(rows) => (
                    "oracle",
                    Value::Array(
                        rows.iter()
                            .map(|row| {
                                json!({
                                    "quantity": row.quantity,
                                    "epsilon": format!("{:.6e}", row.epsilon),
                                    "grid": row.grid,
                                    "value": format!("{:.8}", row.value),
                                    "error_estimate": format!("{:.8}", row.error_estimate),
                                    "symbolic_value": format!("{:.8}", row.symbolic_value),
                                    "pass": row.pass,
                                })
                            })
                            .collect(),
                    ),
                ),
            };
            json!({ "request": item.request, "kind": kind, "result": value })
        })
        .collect();
    let doc = json!({
        "engine": r.engine,
        "scenario": r.scenario.lines().collect::<Vec<_>>(),
        "requests": items,
    });
    let mut out = serde_json::to_string_pretty(&doc).expect("report serialization is infallible");
    out.push('\n');
    out
}

/// Deterministic report rendering; identical input bytes give identical
/// output bytes in both formats.
pub fn render_report(r: &Report, format: ReportFormat) -> String {
    match format {
        ReportFormat::Text => render_text(r),
        ReportFormat::JsonLike => render_json(r),
    }
}
