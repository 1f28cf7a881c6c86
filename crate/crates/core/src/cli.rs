//! Command dispatch: scenario + command + flags to a [`Report`] and exit code.

use serde::Serialize;
use serde_json::{json, Value};

use crate::bundle::{connection_report, descent_residual, max_form, AnomalyMethod, CLOSEDNESS_TOL};
use crate::error::{Error, Result};
use crate::holonomy::equivariant_holonomy;
use crate::report::Report;
use crate::scenario::{bundled_text, Model, ScenarioFile};
use crate::selftest::{selftest, selftest_on, COCYCLE_TOL, DESCENT_TOL, MOMENT_TOL};
use crate::solvers::{SolverConfig, VerdictReport};

/// Anomaly values listed per Lie element in the `anomaly` report.
const LISTED_POINTS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    CheckCocycle,
    Anomaly { section: Option<String> },
    Holonomy { word: String, path: String, section: Option<String> },
    Curvature { section: Option<String> },
    Verdict { local: bool },
    Selftest,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::CheckCocycle => "check-cocycle",
            Command::Anomaly { .. } => "anomaly",
            Command::Holonomy { .. } => "holonomy",
            Command::Curvature { .. } => "curvature",
            Command::Verdict { local: false } => "verdict",
            Command::Verdict { local: true } => "verdict --local",
            Command::Selftest => "selftest",
        }
    }
}

/// Overrides of the scenario's `[solver]` settings.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Flags {
    pub seed: Option<u64>,
    /// Held-out tolerance; the fit tolerance becomes a tenth of it.
    pub tol: Option<f64>,
    /// Fit and held-out probe counts.
    pub probes: Option<usize>,
    pub max_word_len: Option<usize>,
}

impl Flags {
    pub fn resolve(&self, base: &SolverConfig) -> SolverConfig {
        let mut c = base.clone();
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(t) = self.tol {
            c.tol_holdout = t;
            c.tol_fit = t / 10.0;
        }
        if let Some(n) = self.probes {
            c.probes = n;
            c.holdout = n;
        }
        if let Some(w) = self.max_word_len {
            c.max_word_len = w;
        }
        c
    }
}

/// Reads a scenario file, falling back to a bundled scenario name.
pub fn scenario_text(arg: &str) -> Result<String> {
    match std::fs::read_to_string(arg) {
        Ok(t) => Ok(t),
        Err(e) => {
            let stem = std::path::Path::new(arg)
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or(arg);
            match bundled_text(arg).or_else(|| bundled_text(stem)) {
                Some(t) if e.kind() == std::io::ErrorKind::NotFound => Ok(t.to_string()),
                Some(_) => Err(Error::Io(e)),
                None => Err(Error::InvalidInput(format!(
                    "cannot read scenario `{arg}` ({e}) and no bundled scenario has that name"
                ))),
            }
        }
    }
}

fn section_name(s: &Option<String>) -> Option<&str> {
    s.as_deref()
}

#[derive(Serialize)]
struct AnomalyRow {
    lie: String,
    points: Vec<Vec<f64>>,
    flow_derivative: Vec<f64>,
    moment_formula: Vec<f64>,
    max_discrepancy: f64,
    descent_residual: f64,
}

fn anomaly(model: &Model, config: &SolverConfig, section: Option<&str>, report: Report) -> Result<Report> {
    let b = &model.bundle;
    let s = model.section(section)?;
    if b.action.lie.is_empty() {
        return Ok(Report {
            summary: "no Lie elements: the infinitesimal anomaly is empty".into(),
            result: json!({ "section": s.label, "lie": [] }),
            ..report
        });
    }
    let points: Vec<Vec<f64>> = model.probes(config).fit.into_iter().take(LISTED_POINTS).collect();
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for k in 0..b.action.lie.len() {
        let flow = b.infinitesimal_anomaly(&s, k, AnomalyMethod::FlowDerivative, None)?;
        let moment = b.infinitesimal_anomaly(&s, k, AnomalyMethod::MomentFormula, Some(&model.connection))?;
        let fv = points.iter().map(|p| flow.eval(p)).collect::<Result<Vec<_>>>()?;
        let mv = points.iter().map(|p| moment.eval(p)).collect::<Result<Vec<_>>>()?;
        let disc = fv.iter().zip(&mv).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let descent = max_form(&descent_residual(b, &model.connection, &s, k), &points)?;
        worst = worst.max(disc / MOMENT_TOL).max(descent / DESCENT_TOL);
        rows.push(AnomalyRow {
            lie: b.action.lie[k].label.clone(),
            points: points.clone(),
            flow_derivative: fv,
            moment_formula: mv,
            max_discrepancy: disc,
            descent_residual: descent,
        });
    }
    let summary = rows
        .iter()
        .map(|r| format!("a({}): moment formula within {:.3e}, descent {:.3e}", r.lie, r.max_discrepancy, r.descent_residual))
        .collect::<Vec<_>>()
        .join("\n");
    let report = Report {
        result: json!({ "section": s.label, "tolerances": { "moment": MOMENT_TOL, "descent": DESCENT_TOL }, "lie": rows }),
        summary,
        ..report
    };
    Ok(if worst < 1.0 {
        report
    } else {
        let summary = report.summary.clone();
        report.fail("fail", 1, summary)
    })
}

fn holonomy(model: &Model, word: &str, path: &str, section: Option<&str>, report: Report) -> Result<Report> {
    let w = model.parse_word(word)?;
    let gamma = model.path(path, &w)?;
    let s = model.section(section)?;
    let h = equivariant_holonomy(&model.bundle, &model.connection, &s, &w, &gamma, path)?;
    Ok(Report {
        summary: format!(
            "hol = {:.12} (formula; lift {:.12}, difference {:.3e})",
            h.value.value(),
            h.lift.value(),
            h.cross_check
        ),
        result: json!({ "section": s.label, "holonomy": h }),
        ..report
    })
}

fn curvature(model: &Model, config: &SolverConfig, section: Option<&str>, report: Report) -> Result<Report> {
    let b = &model.bundle;
    let s = model.section(section)?;
    let points = model.probes(config).fit;
    let rep = connection_report(b, &model.connection, &s, &points)?;
    let center = b.space.center();
    let moment = rep
        .curvature
        .moment
        .iter()
        .map(|m| m.eval(&center))
        .collect::<Result<Vec<_>>>()?;
    let descent = (0..b.action.lie.len())
        .map(|k| max_form(&descent_residual(b, &model.connection, &s, k), &points))
        .collect::<Result<Vec<_>>>()?;
    let closed = rep.closedness.max();
    let worst_descent = descent.iter().fold(0.0f64, |m, v| m.max(*v));
    let result = json!({
        "section": s.label,
        "at": center,
        "rho_s": rep.rho_s.covector(&center)?,
        "omega": two_form_matrix(&rep.curvature.omega, &center)?,
        "moment": moment,
        "closedness": rep.closedness,
        "descent_residual": descent,
        "tolerances": { "closedness": CLOSEDNESS_TOL, "descent": DESCENT_TOL },
    });
    let summary = format!("closedness residual {closed:.3e}, descent residual {worst_descent:.3e}");
    let report = Report {
        summary: summary.clone(),
        result,
        ..report
    };
    Ok(if closed < CLOSEDNESS_TOL && worst_descent < DESCENT_TOL {
        report
    } else {
        report.fail("fail", 1, summary)
    })
}

fn two_form_matrix(w: &crate::geometry::TwoForm, p: &[f64]) -> Result<Vec<Vec<f64>>> {
    let d = p.len();
    let e = |i: usize| (0..d).map(|k| if k == i { 1.0 } else { 0.0 }).collect::<Vec<f64>>();
    (0..d).map(|i| (0..d).map(|j| w.eval(p, &e(i), &e(j))).collect()).collect()
}

fn verdict_summary(v: &VerdictReport) -> String {
    let mut s = format!("verdict {}", v.verdict.as_str());
    if let Some(st) = &v.deciding_stage {
        s.push_str(&format!(" (stage {st})"));
    }
    if let Some(b) = &v.beta {
        let terms = b
            .terms
            .iter()
            .map(|t| format!("{:+.9}·{}", t.coefficient, t.label))
            .collect::<Vec<_>>()
            .join(" ");
        s.push_str(&format!("\nbeta = {terms}, covector {:?} at {:?}", b.covector_at_basepoint, b.basepoint));
    }
    if let Some(k) = &v.k_membership {
        s.push_str(&format!("\nkappa on generators = {:?}", k.kappa));
    }
    if !v.note.is_empty() {
        s.push('\n');
        s.push_str(&v.note);
    }
    s
}

fn check_cocycle(text: &str, config: &SolverConfig, tol: Option<f64>, report: Report) -> Result<Report> {
    let model = Model::build_unchecked(&ScenarioFile::parse(text)?).map_err(|e| e.in_stage("build"))?;
    let report = report.with_model(&model, config);
    let tol = tol.unwrap_or(COCYCLE_TOL);
    let rep = model.bundle.check_cocycle(config.max_word_len.max(2), config.probes, config.seed)?;
    let result = json!({ "tolerance": tol, "cocycle": rep });
    if rep.max_residual < tol {
        return Ok(Report {
            summary: format!("cocycle law holds: {} checks, max residual {:.3e}", rep.checks, rep.max_residual),
            result,
            ..report
        });
    }
    let w = rep.witness.clone().unwrap_or_else(|| crate::bundle::CocycleWitness {
        check: "none".into(),
        word: String::new(),
        point: vec![],
        residual: rep.max_residual,
    });
    let e = Error::CocycleViolation {
        residual: w.residual,
        point: w.point,
        detail: format!("{} check on {}", w.check, w.word),
    }
    .in_stage("check-cocycle");
    Ok(Report { result, ..report.errored(&e) })
}

fn dispatch(command: &Command, text: &str, flags: &Flags, report: Report) -> Result<Report> {
    if *command == Command::CheckCocycle {
        let file = ScenarioFile::parse(text)?;
        let config = flags.resolve(&crate::scenario::Model::build_unchecked(&file)?.config);
        return check_cocycle(text, &config, flags.tol, report);
    }
    let model = Model::load(text).map_err(|e| match e {
        Error::Syntax { .. } | Error::Semantic { .. } => e,
        e => e.in_stage("build"),
    })?;
    let config = flags.resolve(&model.config);
    let report = report.with_model(&model, &config);
    match command {
        Command::Anomaly { section } => anomaly(&model, &config, section_name(section), report),
        Command::Holonomy { word, path, section } => holonomy(&model, word, path, section_name(section), report),
        Command::Curvature { section } => curvature(&model, &config, section_name(section), report),
        Command::Verdict { local } => {
            let v = if *local { model.verdict_local(&config)? } else { model.verdict(&config)? };
            let summary = verdict_summary(&v);
            Ok(Report {
                outcome: v.verdict.as_str().into(),
                exit_code: v.exit_code,
                summary,
                result: serde_json::to_value(&v).unwrap_or(Value::Null),
                ..report
            })
        }
        Command::CheckCocycle | Command::Selftest => unreachable!(),
    }
}

/// Runs one command. Errors are folded into the report with exit code 1.
///
/// `scenario` is a file path or a bundled scenario name. `selftest` takes
/// an optional bundled name restricting the suites to that scenario.
pub fn run(command: &Command, scenario: Option<&str>, flags: &Flags) -> Report {
    let report = Report::new(command.name());
    if *command == Command::Selftest {
        let seed = flags.seed.unwrap_or(SolverConfig::default().seed);
        let rep = match scenario {
            Some(name) => selftest_on([name], seed),
            None => selftest(seed),
        };
        let summary = format!(
            "{} checks over {} scenarios, {} failed",
            rep.checks.len(),
            rep.scenarios.len(),
            rep.failures
        );
        let passed = rep.passed;
        let report = Report {
            summary: summary.clone(),
            result: serde_json::to_value(&rep).unwrap_or(Value::Null),
            ..report
        };
        return if passed { report } else { report.fail("fail", 1, summary) };
    }
    let Some(arg) = scenario else {
        return report.errored(&Error::InvalidInput(format!("`{}` needs a scenario", command.name())));
    };
    let text = match scenario_text(arg) {
        Ok(t) => t,
        Err(e) => return report.errored(&e),
    };
    let fallback = report.clone();
    match dispatch(command, &text, flags, report) {
        Ok(r) => r,
        Err(e) => {
            let mut r = fallback.errored(&e);
            if let Ok(m) = ScenarioFile::parse(&text).and_then(|f| Model::build_unchecked(&f)) {
                let config = flags.resolve(&m.config);
                r = r.with_model(&m, &config);
            }
            r
        }
    }
}
