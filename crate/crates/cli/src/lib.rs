//! Command dispatch and JSON reports for the `brunoform` binary.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use brunoform::bruno::{analyticity_certificate, bruno_ideal, bruno_oracle_compare};
use brunoform::normalize::{normalize, Method, SPerturbation};
use brunoform::omega::{estimate_diagnostics, omega_sequence, radius_schedule, OmegaMode, OmegaOptions, DEFAULT_CAP};
use brunoform::parse::{parse_field, print_field, ProblemSpec};
use brunoform::scalar::set_float_epsilon;
use brunoform::{
    Automorphism, BigRational, Coeff, ComplexFloat, Gaussian, LogDerivation, Scalar, ScalarKind, Series,
    TruncatedIdeal,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

pub const SCHEMA_VERSION: u32 = 1;

/// Order used when neither `--order` nor a `truncation:` header is given.
pub const DEFAULT_ORDER: usize = 16;

#[derive(Parser, Debug)]
#[command(name = "brunoform", version, about = "Normal forms and Bruno ideals of logarithmic vector fields")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub global: GlobalOpts,
}

#[derive(Args, Debug, Clone, Default)]
pub struct GlobalOpts {
    /// Write the report to this file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Include wall-clock timings (makes the output nondeterministic).
    #[arg(long, global = true)]
    pub timing: bool,
    /// Zero tolerance for `scalars: float` inputs.
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Newton,
    Graded,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Newton => Method::Newton,
            MethodArg::Graded => Method::Graded,
        }
    }
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Normalize a field mod m^N and report the normal form and coordinate change.
    Normalize {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        order: Option<usize>,
        #[arg(long, value_enum, default_value = "newton")]
        method: MethodArg,
    },
    /// Bruno ideal generators in normalized and original coordinates.
    BrunoIdeal {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        order: Option<usize>,
        #[arg(long, value_enum, default_value = "newton")]
        method: MethodArg,
    },
    /// The table of omega_k and the Bruno-sum verdict for an eigenvalue vector.
    Omega {
        /// Comma-separated eigenvalues, e.g. "1,-1" or "1+2*i,3/2".
        #[arg(long, allow_hyphen_values = true)]
        lambda: String,
        #[arg(long, default_value_t = 8)]
        kmax: u32,
        #[arg(long, default_value = "paper")]
        mode: OmegaMode,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: u64,
        /// Disable the two-variable scan and enumerate exhaustively.
        #[arg(long)]
        no_fast_path: bool,
    },
    /// Analyticity certificate, omega verdict, radius schedule and estimate diagnostics.
    Certify {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        order: Option<usize>,
        #[arg(long = "C", default_value_t = 3.0)]
        c: f64,
        #[arg(long, default_value_t = 0)]
        k0: u32,
        #[arg(long, default_value_t = 1.0)]
        rho: f64,
        #[arg(long, default_value_t = 8)]
        kmax: u32,
        /// Number of radius-schedule steps.
        #[arg(long, default_value_t = 24)]
        steps: usize,
    },
    /// Compare the Bruno ideal with the Jordan–Chevalley jet oracle.
    OracleCompare {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 8)]
        jet: usize,
    },
    /// Run the invariant suite on an input field.
    Check {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        order: Option<usize>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Normalize { .. } => "normalize",
            Command::BrunoIdeal { .. } => "bruno-ideal",
            Command::Omega { .. } => "omega",
            Command::Certify { .. } => "certify",
            Command::OracleCompare { .. } => "oracle-compare",
            Command::Check { .. } => "check",
        }
    }

    fn echo(&self) -> Value {
        match self {
            Command::Normalize { input, order, method } | Command::BrunoIdeal { input, order, method } => json!({
                "name": self.name(),
                "input": input.display().to_string(),
                "order": order,
                "method": format!("{method:?}").to_lowercase(),
            }),
            Command::Omega {
                lambda,
                kmax,
                mode,
                cap,
                no_fast_path,
            } => json!({
                "name": self.name(),
                "lambda": lambda,
                "kmax": kmax,
                "mode": mode.to_string(),
                "cap": cap,
                "fast_path": !no_fast_path,
            }),
            Command::Certify {
                input,
                order,
                c,
                k0,
                rho,
                kmax,
                steps,
            } => json!({
                "name": self.name(),
                "input": input.display().to_string(),
                "order": order,
                "C": c,
                "k0": k0,
                "rho": rho,
                "kmax": kmax,
                "steps": steps,
            }),
            Command::OracleCompare { input, jet } => json!({
                "name": self.name(),
                "input": input.display().to_string(),
                "jet": jet,
            }),
            Command::Check { input, order } => json!({
                "name": self.name(),
                "input": input.display().to_string(),
                "order": order,
            }),
        }
    }
}

/// A finished command: the JSON document and the process exit code.
#[derive(Debug)]
pub struct Outcome {
    pub report: Value,
    pub exit_code: i32,
}

/// Runs a command and wraps the result, or the error, in a versioned report.
pub fn run(command: &Command, opts: &GlobalOpts) -> Outcome {
    if let Some(eps) = opts.epsilon {
        if !(eps.is_finite() && eps >= 0.0) {
            return failure(command, "InvalidArgument", &format!("epsilon must be finite and >= 0, got {eps}"));
        }
        set_float_epsilon(eps);
    }
    let start = Instant::now();
    match run_command(command) {
        Ok((result, passed)) => {
            let mut report = json!({
                "schema_version": SCHEMA_VERSION,
                "command": command.echo(),
                "result": result,
            });
            if opts.timing {
                report["timing"] = json!({ "total_ms": start.elapsed().as_secs_f64() * 1e3 });
            }
            Outcome {
                report,
                exit_code: if passed { 0 } else { 1 },
            }
        }
        Err(e) => {
            let kind = e.downcast_ref::<brunoform::Error>().map_or_else(
                || {
                    if e.downcast_ref::<std::io::Error>().is_some() {
                        "Io"
                    } else {
                        "InvalidArgument"
                    }
                },
                brunoform::Error::kind,
            );
            failure(command, kind, &format!("{e:#}"))
        }
    }
}

fn failure(command: &Command, kind: &str, message: &str) -> Outcome {
    Outcome {
        report: json!({
            "schema_version": SCHEMA_VERSION,
            "command": command.echo(),
            "error": { "kind": kind, "message": message },
        }),
        exit_code: 2,
    }
}

/// Serializes a report with a trailing newline.
pub fn render(report: &Value) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports are valid JSON");
    s.push('\n');
    s
}

macro_rules! dispatch {
    ($spec:expr, $f:ident($($arg:expr),*)) => {
        match $spec.scalars {
            ScalarKind::Rational => $f::<BigRational>($($arg),*)?,
            ScalarKind::Gaussian => $f::<Gaussian>($($arg),*)?,
            ScalarKind::Float => $f::<ComplexFloat>($($arg),*)?,
        }
    };
}

/// Executes a command; the flag is false when `check` finds a violation.
pub fn run_command(command: &Command) -> Result<(Value, bool)> {
    match command {
        Command::Normalize { input, order, method } => {
            let spec = load(input)?;
            let order = resolve_order(&spec, *order);
            Ok((dispatch!(spec, normalize_report(&spec, order, (*method).into())), true))
        }
        Command::BrunoIdeal { input, order, method } => {
            let spec = load(input)?;
            let order = resolve_order(&spec, *order);
            Ok((dispatch!(spec, bruno_report(&spec, order, (*method).into())), true))
        }
        Command::Omega {
            lambda,
            kmax,
            mode,
            cap,
            no_fast_path,
        } => {
            let opts = OmegaOptions {
                mode: *mode,
                cap: *cap,
                fast_path: !no_fast_path,
            };
            Ok((omega_report(lambda, *kmax, opts)?, true))
        }
        Command::Certify {
            input,
            order,
            c,
            k0,
            rho,
            kmax,
            steps,
        } => {
            let spec = load(input)?;
            let order = resolve_order(&spec, *order);
            let params = CertifyParams {
                c: *c,
                k0: *k0,
                rho: *rho,
                kmax: *kmax,
                steps: *steps,
            };
            Ok((dispatch!(spec, certify_report(&spec, order, params)), true))
        }
        Command::OracleCompare { input, jet } => {
            let spec = load(input)?;
            Ok((dispatch!(spec, oracle_report(&spec, *jet)), true))
        }
        Command::Check { input, order } => {
            let spec = load(input)?;
            let order = resolve_order(&spec, *order);
            let checks = dispatch!(spec, check_report(&spec, order));
            let passed = checks["all_passed"].as_bool().unwrap_or(false);
            Ok((checks, passed))
        }
    }
}


fn load(path: &Path) -> Result<ProblemSpec> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(parse_field(&text)?)
}

fn resolve_order(spec: &ProblemSpec, order: Option<usize>) -> usize {
    order.or(spec.truncation).unwrap_or(DEFAULT_ORDER)
}

fn perturbation<F: Coeff>(spec: &ProblemSpec, order: usize) -> Result<SPerturbation<F>> {
    if order < 2 {
        bail!(brunoform::Error::InvalidOrder(format!("order must be >= 2, got {order}")));
    }
    Ok(SPerturbation::from_field(&spec.derivation::<F>(order)?)?)
}

fn scalars<F: Coeff>(v: &[F]) -> Vec<String> {
    v.iter().map(|c| c.to_scalar().to_string()).collect()
}

fn series_json<F: Coeff>(s: &Series<F>, vars: &[String]) -> Value {
    json!({ "expression": s.to_expression(vars), "series": s })
}

fn field_json<F: Coeff>(d: &LogDerivation<F>, vars: &[String]) -> Value {
    json!({
        "lambda": scalars(&d.linear_part()),
        "text": print_field(d, vars),
        "derivation": d,
    })
}

fn automorphism_json<F: Coeff>(phi: &Automorphism<F>, vars: &[String]) -> Value {
    json!({
        "identity": phi.is_identity(),
        "images": phi.images().iter().map(|s| s.to_expression(vars)).collect::<Vec<_>>(),
    })
}

/// Drops generators already in the ideal of the earlier ones and makes
/// the first coefficient of each one equal to 1.
fn minimal_generators<F: Coeff>(ideal: &TruncatedIdeal<F>) -> Vec<Series<F>> {
    let order = ideal.order();
    let mut gens: Vec<Series<F>> = ideal.generators().iter().map(|g| g.truncate(order)).collect();
    gens.sort_by_key(|g| (g.ord().unwrap_or(usize::MAX), g.len()));
    let mut kept: Vec<Series<F>> = Vec::new();
    for g in gens {
        if g.is_zero() {
            continue;
        }
        if !TruncatedIdeal::new(ideal.nvars(), order, kept.iter().cloned()).contains(&g, order) {
            let lead = g.iter().next().map(|(_, c)| c.clone()).expect("nonzero generator");
            kept.push(g.scale(&lead.inv().expect("nonzero coefficient")));
        }
    }
    kept
}

fn ideal_json<F: Coeff>(ideal: &TruncatedIdeal<F>, vars: &[String]) -> Value {
    let gens = minimal_generators(ideal);
    json!({
        "order": ideal.order(),
        "zero": gens.is_empty(),
        "heuristic": ideal.is_heuristic(),
        "generators": gens.iter().map(|g| g.to_expression(vars)).collect::<Vec<_>>(),
        "slice_ranks": (0..ideal.order()).map(|d| ideal.slice_rank(d)).collect::<Vec<_>>(),
    })
}

fn normalize_report<F: Coeff>(spec: &ProblemSpec, order: usize, method: Method) -> Result<Value> {
    let vars = &spec.vars;
    let p = perturbation::<F>(spec, order)?;
    let out = normalize(&p, order, method)?;
    let steps: Vec<Value> = out
        .trace
        .steps
        .iter()
        .map(|s| {
            json!({
                "k": s.k,
                "pass": s.pass,
                "ord_u": s.ord_u,
                "deg_u": s.deg_u,
                "u": s.u.to_expression(vars),
                "f0": s.f0.to_expression(vars),
            })
        })
        .collect();
    Ok(json!({
        "scalars": spec.scalars,
        "order": order,
        "method": out.trace.method,
        "input": field_json(&p.field(), vars),
        "normal_form": field_json(&out.normal_form.field(), vars),
        "resonant_only": out.normal_form.is_normal_form(),
        "coordinate_change": automorphism_json(&out.coordinate_change, vars),
        "trace": {
            "steps": steps,
            "flatness": (method == Method::Newton).then(|| out.trace.flatness_holds()),
        },
    }))
}

fn bruno_report<F: Coeff>(spec: &ProblemSpec, order: usize, method: Method) -> Result<Value> {
    let vars = &spec.vars;
    let p = perturbation::<F>(spec, order)?;
    let rep = bruno_ideal(&p, order, method)?;
    Ok(json!({
        "scalars": spec.scalars,
        "order": rep.order,
        "normal_form": field_json(&rep.normalization.normal_form.field(), vars),
        "coordinate_change": automorphism_json(&rep.normalization.coordinate_change, vars),
        "orientation": rep.orientation,
        "bruno_ideal_normalized": ideal_json(&rep.ideal_normalized, vars),
        "bruno_ideal_original": ideal_json(&rep.ideal_original, vars),
        "f": series_json(&rep.f, vars),
        "f0": series_json(&rep.f0, vars),
        "f0_is_zero": rep.f0.is_zero(),
        "f_minus_f0_in_ideal": rep.f_minus_f0_in_ideal,
        "g_in_ideal": rep.g_in_ideal,
        "a_condition_holds": rep.a_condition_holds,
    }))
}

/// Parses `a,b,...` into the narrowest scalar kind holding all entries.
fn parse_lambda(text: &str) -> Result<(ScalarKind, Vec<Scalar>)> {
    let entries = text
        .split(',')
        .map(|s| s.trim().parse::<Scalar>())
        .collect::<brunoform::Result<Vec<_>>>()?;
    if entries.is_empty() {
        bail!("empty eigenvalue vector");
    }
    let kind = entries.iter().fold(ScalarKind::Rational, |acc, s| match (acc, s.kind()) {
        (ScalarKind::Float, _) | (_, ScalarKind::Float) => ScalarKind::Float,
        (ScalarKind::Gaussian, _) | (_, ScalarKind::Gaussian) => ScalarKind::Gaussian,
        _ => ScalarKind::Rational,
    });
    Ok((kind, entries))
}

fn convert<F: Coeff>(v: &[Scalar]) -> Result<Vec<F>> {
    Ok(v.iter().map(F::from_scalar).collect::<brunoform::Result<_>>()?)
}

fn omega_report(lambda: &str, kmax: u32, opts: OmegaOptions) -> Result<Value> {
    let (kind, entries) = parse_lambda(lambda)?;
    let report = match kind {
        ScalarKind::Rational => omega_sequence(&convert::<BigRational>(&entries)?, kmax, opts)?,
        ScalarKind::Gaussian => omega_sequence(&convert::<Gaussian>(&entries)?, kmax, opts)?,
        ScalarKind::Float => omega_sequence(&convert::<ComplexFloat>(&entries)?, kmax, opts)?,
    };
    Ok(json!({ "scalars": kind, "omega": report }))
}

#[derive(Clone, Copy, Debug)]
struct CertifyParams {
    c: f64,
    k0: u32,
    rho: f64,
    kmax: u32,
    steps: usize,
}

fn certify_report<F: Coeff>(spec: &ProblemSpec, order: usize, params: CertifyParams) -> Result<Value> {
    let vars = &spec.vars;
    let p = perturbation::<F>(spec, order)?;
    let rep = bruno_ideal(&p, order, Method::Newton)?;
    let nf = &rep.normalization.normal_form;
    let cert = analyticity_certificate(nf, order)?;
    let omega = omega_sequence(p.lambda(), params.kmax, OmegaOptions::default())?;
    let omegas = omega.omegas();
    let schedule = radius_schedule(&omegas, params.c, params.k0, params.rho, params.steps);
    let diagnostics = estimate_diagnostics(&p, &rep.normalization.trace, params.c, params.k0, params.rho, &omegas)?;
    Ok(json!({
        "scalars": spec.scalars,
        "order": cert.order,
        "certificate": {
            "collinearity": ideal_json(&cert.collinearity, vars),
            "commutativity": ideal_json(&cert.commutativity, vars),
            "ideal": ideal_json(&cert.ideal, vars),
            "normal_form": cert.normal_form,
            "bruno_ideal": cert.bruno.as_ref().map(|b| ideal_json(b, vars)),
            "equal": cert.equal,
        },
        "bruno_ideal_original": ideal_json(&rep.ideal_original, vars),
        "a_condition_holds": rep.a_condition_holds,
        "omega": omega,
        "radius_schedule": schedule,
        "diagnostics": diagnostics,
        "verdict": {
            "omega_condition": omega.bruno_sum.verdict,
            "certificate_matches_bruno_ideal": cert.equal,
            "a_condition_holds": rep.a_condition_holds,
            "radius_limit_positive": schedule.limit_positive,
        },
    }))
}

fn oracle_report<F: Coeff>(spec: &ProblemSpec, jet: usize) -> Result<Value> {
    let vars = &spec.vars;
    let p = perturbation::<F>(spec, jet.max(2))?;
    let cmp = bruno_oracle_compare(&p, jet)?;
    let dec = &cmp.decomposition;
    Ok(json!({
        "scalars": spec.scalars,
        "jet": cmp.jet,
        "dimension": dec.dimension,
        "newton_iterations": dec.newton_iterations,
        "squarefree_degree": dec.squarefree_degree,
        "commute": dec.commute,
        "semisimple": field_json(&dec.semisimple, vars),
        "nilpotent": field_json(&dec.nilpotent, vars),
        "chevalley_ideal": ideal_json(&cmp.chevalley_ideal, vars),
        "pullback_ideal": ideal_json(&cmp.pullback_ideal, vars),
        "chevalley_rank": cmp.chevalley_rank,
        "pullback_rank": cmp.pullback_rank,
        "equal": cmp.equal,
    }))
}

fn check_entry(name: &str, outcome: Result<bool>) -> Value {
    match outcome {
        Ok(passed) => json!({ "name": name, "passed": passed }),
        Err(e) => json!({ "name": name, "passed": false, "error": format!("{e:#}") }),
    }
}

fn check_report<F: Coeff>(spec: &ProblemSpec, order: usize) -> Result<Value> {
    let vars = &spec.vars;
    let p = perturbation::<F>(spec, order)?;
    let d = p.field();
    let mut checks = Vec::new();

    checks.push(check_entry("parse_print_round_trip", (|| {
        let again = parse_field(&print_field(&d, vars))?;
        Ok(again.derivation::<F>(order)? == d)
    })()));

    let rep = bruno_ideal(&p, order, Method::Newton);
    let rep = match rep {
        Ok(r) => Some(r),
        Err(e) => {
            checks.push(check_entry("normalization", Err(e.into())));
            None
        }
    };
    if let Some(rep) = &rep {
        let out = &rep.normalization;
        let nf = &out.normal_form;
        checks.push(check_entry("flatness", Ok(out.trace.flatness_holds())));
        checks.push(check_entry("normal_form_resonant_only", Ok(nf.is_normal_form())));
        checks.push(check_entry(
            "normal_form_commutes_with_s",
            Ok(nf.semisimple().lie_bracket(nf.nonlinear(), order).is_zero()),
        ));
        checks.push(check_entry("conjugacy", (|| {
            let theta = &out.coordinate_change;
            let delta = nf.field();
            for i in 0..p.nvars() {
                let x = Series::<F>::variable(p.nvars(), order + 1, i);
                let lhs = d.apply(&theta.pullback(&x, order + 1)?, order + 1).truncate(order);
                let rhs = theta.pullback(&delta.apply(&x, order + 1), order + 1)?.truncate(order);
                if !lhs.sub(&rhs).is_zero() {
                    return Ok(false);
                }
            }
            Ok(true)
        })()));
        checks.push(check_entry("f_minus_f0_in_ideal", Ok(rep.f_minus_f0_in_ideal)));
        checks.push(check_entry("g_in_ideal", Ok(rep.g_in_ideal.iter().all(|b| *b))));
        checks.push(check_entry("ideal_invariant", Ok(rep.ideal_original.is_invariant(&d, order))));
        checks.push(check_entry("analyticity_certificate", (|| {
            Ok(analyticity_certificate(nf, order)?.equal == Some(true))
        })()));
        if F::is_exact() {
            let jet = order.min(6);
            checks.push(check_entry("chevalley_oracle", (|| {
                let cmp = bruno_oracle_compare(&p, jet)?;
                Ok(cmp.equal && cmp.decomposition.commute)
            })()));
        }
    }
    let all_passed = checks.iter().all(|c| c["passed"] == json!(true));
    Ok(json!({
        "scalars": spec.scalars,
        "order": order,
        "checks": checks,
        "all_passed": all_passed,
    }))
}
