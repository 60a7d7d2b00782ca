mod sample;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use pva_core::hierarchies::{generate, golden_verify, HierarchyName, HierarchySpec};
use pva_core::lenard::{lenard_extend_with, LenardOptions, Mode, SolverPlan};
use pva_core::pva::{
    beltrami_bracket, check_compatible, check_pva, check_symplectic, functional_bracket, jacobi_operator_residual,
    lambda_bracket, two_form_from_potential, CheckReport,
};
use pva_core::syntax::{implied_ell, parse_expression, parse_operator, parse_vector};
use pva_core::varcalc::{exactify, frechet, integrate_total, variational_derivative};
use pva_core::{Coefficient, DiffOp, Error, Expression, LocalFunctional, MatrixDiffOp, SessionConfig, VarNames, VectorExpr};

#[derive(Parser)]
#[command(name = "pva", version, about = "Poisson vertex algebra and Lenard hierarchy toolkit")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Global {
    /// Emit JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Parameter, symbolic (`c`) or bound (`c=1/2`). Repeatable.
    #[arg(long = "param", global = true, value_name = "NAME[=VALUE]")]
    params: Vec<String>,
    /// Comma-separated variable names, e.g. `u,v`.
    #[arg(long, global = true)]
    vars: Option<String>,
    /// JSON session configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for sampled checks.
    #[arg(long, global = true, default_value_t = 20090324)]
    seed: u64,
}

#[derive(Subcommand)]
enum Cmd {
    /// Skew-adjointness and Jacobi identity of a matrix differential operator.
    CheckPva {
        #[arg(long, allow_hyphen_values = true)]
        op: String,
        /// Also evaluate the operator form of the Jacobi identity on N random pairs.
        #[arg(long, default_value_t = 0)]
        sample: usize,
    },
    /// Hamiltonian check of every linear combination of the given operators.
    CheckCompat {
        #[arg(long = "op", required = true, num_args = 1, allow_hyphen_values = true)]
        ops: Vec<String>,
    },
    /// Symplectic check of an operator, or of S_F built from a potential F.
    CheckSymplectic {
        #[arg(long, conflicts_with = "potential", required_unless_present = "potential", allow_hyphen_values = true)]
        op: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        potential: Option<String>,
    },
    /// Variational derivative of a density.
    Vder {
        #[arg(allow_hyphen_values = true)]
        density: String,
    },
    /// Frechet derivative (or its adjoint) of a vector.
    Frechet {
        #[arg(allow_hyphen_values = true)]
        vector: String,
        #[arg(long)]
        adjoint: bool,
    },
    /// Total-derivative preimage: f = g' + constant.
    Integrate {
        #[arg(allow_hyphen_values = true)]
        expr: String,
    },
    /// Density h with δh/δu = F for a closed F.
    Exactify {
        #[arg(allow_hyphen_values = true)]
        vector: String,
    },
    /// λ-bracket {f_λ g} for H (Beltrami bracket without --op).
    Bracket {
        #[arg(allow_hyphen_values = true)]
        f: String,
        #[arg(allow_hyphen_values = true)]
        g: String,
        #[arg(long, allow_hyphen_values = true)]
        op: Option<String>,
        /// Bracket of the local functionals ∫f and ∫g instead.
        #[arg(long)]
        functional: bool,
    },
    /// Lenard scheme K F^{n+1} = H F^n from explicit operators and seeds.
    Lenard {
        #[arg(long, allow_hyphen_values = true)]
        h: String,
        #[arg(long, allow_hyphen_values = true)]
        k: String,
        /// Seed vector; repeat for consecutive seeds.
        #[arg(long = "start", required = true, allow_hyphen_values = true)]
        starts: Vec<String>,
        #[arg(long, default_value_t = 3)]
        depth: u32,
        /// Index of the first seed.
        #[arg(long, default_value_t = 0)]
        first_index: u32,
        /// Conjugated-chain factors `m0, m1, …` for K = m0 ∂ m1 ∂ … ; otherwise detected.
        #[arg(long, allow_hyphen_values = true)]
        chain: Option<String>,
        /// Read (H, K) as (T, S) of a symplectic pair.
        #[arg(long)]
        symplectic: bool,
    },
    /// Generate one of the shipped hierarchies.
    Hierarchy {
        name: String,
        #[arg(long)]
        depth: Option<u32>,
        /// Compare against the shipped golden values.
        #[arg(long)]
        golden: bool,
    },
}

enum Failure {
    Check,
    Usage(String),
    Compute(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse { .. } | Error::NonmonomialDivisor(_) | Error::SizeMismatch { .. } | Error::Unsupported(_) => {
                Failure::Usage(e.to_string())
            }
            Error::AtStep { ref source, .. } if matches!(**source, Error::Parse { .. }) => Failure::Usage(e.to_string()),
            _ => Failure::Compute(e.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

struct Session {
    cfg: SessionConfig,
    bindings: BTreeMap<String, Coefficient>,
    json: bool,
    seed: u64,
}

impl Session {
    fn new(g: &Global) -> Result<Self, Failure> {
        let mut cfg = match &g.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?
            }
            None => SessionConfig::default(),
        };
        if let Some(vars) = &g.vars {
            cfg.variables = vars.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
        }
        let mut bindings = BTreeMap::new();
        for p in &g.params {
            let (name, value) = match p.split_once('=') {
                Some((n, v)) => (n.trim(), Some(v.trim())),
                None => (p.trim(), None),
            };
            if !cfg.params.iter().any(|q| q == name) {
                cfg.params.push(name.to_string());
            }
            if let Some(v) = value {
                let e = parse_expression(v, &SessionConfig { strict_params: true, ..Default::default() })?;
                let c = e.as_constant().ok_or_else(|| Failure::Usage(format!("parameter value `{v}` is not a constant")))?;
                bindings.insert(name.to_string(), c);
            }
        }
        cfg.validate()?;
        Ok(Session { cfg, bindings, json: g.json, seed: g.seed })
    }

    fn bind(&self, e: Expression) -> Expression {
        if self.bindings.is_empty() {
            e
        } else {
            e.map_coefficients(|c| c.substitute(&self.bindings))
        }
    }

    fn expr(&self, src: &str) -> Result<Expression, Failure> {
        Ok(self.bind(parse_expression(src, &self.cfg)?))
    }

    fn vector(&self, src: &str) -> Result<VectorExpr, Failure> {
        Ok(parse_vector(src, &self.cfg)?.map(|e| self.bind(e.clone())))
    }

    fn op(&self, src: &str) -> Result<MatrixDiffOp, Failure> {
        Ok(parse_operator(src, &self.cfg)?.map(|d| d.map(|e| self.bind(e.clone()))))
    }

    fn names(&self, ell: usize) -> VarNames {
        self.cfg.var_names(ell.max(self.cfg.variables.len()))
    }

    fn ell_of(&self, es: &[&Expression]) -> usize {
        implied_ell(es).max(self.cfg.variables.len())
    }

    fn emit<T: Serialize>(&self, value: &T, text: impl FnOnce() -> String) {
        let out = if self.json { serde_json::to_string_pretty(value).expect("serializable") } else { text() };
        // A closed pipe (e.g. `| head`) is not an error worth reporting.
        let _ = writeln!(std::io::stdout().lock(), "{out}");
    }
}

fn report_text(r: &CheckReport) -> String {
    let mut s = String::from(if r.passed { "PASS" } else { "FAIL" });
    for f in &r.failures {
        let at = if f.triple.is_empty() { String::new() } else { format!(" {:?}", f.triple) };
        s.push_str(&format!("\n  {}{at}: {}", f.kind, f.residual_text));
    }
    s
}

fn check_outcome(passed: bool) -> Outcome {
    if passed {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

#[derive(Serialize)]
struct SampledReport<'a> {
    #[serde(flatten)]
    report: &'a CheckReport,
    seed: u64,
    samples: usize,
    sample_failures: Vec<usize>,
}

fn run(cli: Cli) -> Outcome {
    let s = Session::new(&cli.global)?;
    match cli.cmd {
        Cmd::CheckPva { op, sample } => {
            let h = s.op(&op)?;
            let report = check_pva(&h);
            let mut sample_failures = Vec::new();
            for (i, (f, g)) in sample::pairs(h.size(), sample, s.seed).into_iter().enumerate() {
                if !jacobi_operator_residual(&h, &f, &g)?.is_zero() {
                    sample_failures.push(i);
                }
            }
            let out = SampledReport { report: &report, seed: s.seed, samples: sample, sample_failures };
            s.emit(&out, || {
                let mut t = report_text(&report);
                if sample > 0 {
                    t.push_str(&format!(
                        "\nsampled operator form: {}/{} vanish (seed {})",
                        sample - out.sample_failures.len(),
                        sample,
                        s.seed
                    ));
                }
                t
            });
            check_outcome(report.passed && out.sample_failures.is_empty())
        }
        Cmd::CheckCompat { ops } => {
            let hs = ops.iter().map(|o| s.op(o)).collect::<Result<Vec<_>, _>>()?;
            let report = check_compatible(&hs)?;
            s.emit(&report, || report_text(&report));
            check_outcome(report.passed)
        }
        Cmd::CheckSymplectic { op, potential } => {
            let op = match (op, potential) {
                (Some(o), _) => s.op(&o)?,
                (None, Some(p)) => two_form_from_potential(&s.vector(&p)?),
                (None, None) => unreachable!("clap requires one"),
            };
            let report = check_symplectic(&op);
            s.emit(&report, || format!("S = {}\n{}", op.render(&s.names(op.size())), report_text(&report)));
            check_outcome(report.passed)
        }
        Cmd::Vder { density } => {
            let f = s.expr(&density)?;
            let ell = s.ell_of(&[&f]);
            let names = s.names(ell);
            let d: Vec<String> = variational_derivative(&f, ell).iter().map(|e| names.expression(e)).collect();
            s.emit(&d, || d.join(", "));
            Ok(())
        }
        Cmd::Frechet { vector, adjoint } => {
            let f = s.vector(&vector)?;
            let d = frechet(&f, adjoint);
            let text = d.render(&s.names(f.len()));
            s.emit(&text, || text.clone());
            Ok(())
        }
        Cmd::Integrate { expr } => {
            let f = s.expr(&expr)?;
            let names = s.names(s.ell_of(&[&f]));
            let (g, c) = integrate_total(&f)?;
            #[derive(Serialize)]
            struct Out {
                antiderivative: String,
                constant: String,
            }
            let out = Out { antiderivative: names.expression(&g), constant: c.to_string() };
            s.emit(&out, || {
                if c.is_zero() {
                    out.antiderivative.clone()
                } else {
                    format!("{} + ∂⁻¹({})", out.antiderivative, out.constant)
                }
            });
            Ok(())
        }
        Cmd::Exactify { vector } => {
            let f = s.vector(&vector)?;
            let h = exactify(&f)?;
            let text = s.names(f.len()).expression(&h);
            s.emit(&text, || text.clone());
            Ok(())
        }
        Cmd::Bracket { f, g, op, functional } => {
            let (f, g) = (s.expr(&f)?, s.expr(&g)?);
            let h = op.map(|o| s.op(&o)).transpose()?;
            let ell = h.as_ref().map_or_else(|| s.ell_of(&[&f, &g]), |h| h.size());
            let names = s.names(ell);
            let text = if functional {
                let h = h.ok_or_else(|| Failure::Usage("--functional needs --op".into()))?;
                names.expression(&functional_bracket(&h, &LocalFunctional(f), &LocalFunctional(g)).0)
            } else {
                match &h {
                    Some(h) => lambda_bracket(h, &f, &g).render(&names),
                    None => beltrami_bracket(&f, &g).render(&names),
                }
            };
            s.emit(&text, || text.clone());
            Ok(())
        }
        Cmd::Lenard { h, k, starts, depth, first_index, chain, symplectic } => {
            let (h, k) = (s.op(&h)?, s.op(&k)?);
            let seeds = starts.iter().map(|v| s.vector(v)).collect::<Result<Vec<_>, _>>()?;
            let plan = match chain {
                Some(c) => SolverPlan::ConjugatedChain(s.vector(&c)?.0),
                None => detect_plan(&k)?,
            };
            let mode = if symplectic { Mode::Symplectic } else { Mode::Hamiltonian };
            let opts = LenardOptions { first_index, mode, ..Default::default() };
            let mut rec = lenard_extend_with(&h, &k, &plan, &seeds, depth, &opts)?;
            rec.name = "lenard".into();
            rec.params = s.bindings.iter().map(|(k, v)| (k.clone(), v.to_string())).collect();
            let view = rec.view(&s.names(rec.ell));
            s.emit(&view, || record_text(&view));
            check_outcome(rec.verification.all_passed())
        }
        Cmd::Hierarchy { name, depth, golden } => {
            let name: HierarchyName = name.parse()?;
            let mut spec = HierarchySpec::new(name);
            if let Some(d) = depth {
                spec = spec.depth(d);
            }
            for p in &s.cfg.params {
                if !name.param_names().contains(&p.as_str()) {
                    return Err(Failure::Usage(format!("{name} takes parameters {:?}, not `{p}`", name.param_names())));
                }
            }
            for (p, v) in &s.bindings {
                spec = spec.bind(p, v.clone())?;
            }
            let rec = generate(&spec)?;
            let view = rec.view(&s.names(rec.ell));
            let report = golden.then(|| golden_verify(&spec));
            #[derive(Serialize)]
            struct Out<'a> {
                #[serde(flatten)]
                record: &'a pva_core::lenard::RecordView,
                #[serde(skip_serializing_if = "Option::is_none")]
                golden: Option<&'a CheckReport>,
            }
            s.emit(&Out { record: &view, golden: report.as_ref() }, || {
                let mut t = record_text(&view);
                if let Some(r) = &report {
                    t.push_str(&format!("\ngolden: {}", report_text(r)));
                }
                t
            });
            check_outcome(rec.verification.all_passed() && report.is_none_or(|r| r.passed))
        }
    }
}

/// First plan among the structured ones that reproduces K.
fn detect_plan(k: &MatrixDiffOp) -> Result<SolverPlan, Failure> {
    let candidates = [SolverPlan::ComponentwiseDerivative, SolverPlan::CnwHdStructured];
    for p in candidates {
        if p.validate(k).is_ok() {
            return Ok(p);
        }
    }
    if k.size() == 1 {
        if let Some(p) = chain_of(k.get(0, 0)) {
            return Ok(p);
        }
    }
    Err(Failure::Usage("no solver plan reproduces K; pass --chain".into()))
}

/// K = m0 ∂ m1 for a first-order scalar K = a + b∂, with m1 a power of the
/// monomial part of b chosen so that m0 m1′ = a.
fn chain_of(k: &DiffOp) -> Option<SolverPlan> {
    if k.order() != Some(1) {
        return None;
    }
    let b = k.coeff(1);
    let (mono, _) = b.as_term()?;
    let base = Expression::monomial(mono.clone());
    let (dm, dc) = b.total_derivative().as_term().map(|(m, c)| (m.clone(), c.clone()))?;
    // a = r b′ when m1 = base^r
    let r = (&k.coeff(0).coefficient_of(&dm) / &dc).as_rational()?;
    let m1 = base.pow(pva_core::Exponent::new(r.numer().try_into().ok()?, r.denom().try_into().ok()?)).ok()?;
    let m0 = b.div(&m1).ok()?;
    let plan = SolverPlan::ConjugatedChain(vec![m0, m1]);
    plan.validate(&MatrixDiffOp::scalar(k.clone())).ok().map(|_| plan)
}

fn record_text(v: &pva_core::lenard::RecordView) -> String {
    let mut s = format!("{}", v.name);
    if !v.params.is_empty() {
        let ps: Vec<String> = v.params.iter().map(|(k, x)| format!("{k}={x}")).collect();
        s.push_str(&format!(" ({})", ps.join(", ")));
    }
    for st in &v.steps {
        s.push_str(&format!("\nn = {}\n  F    = ({})", st.n, st.f.join(", ")));
        match (&st.h, &st.h_error) {
            (Some(h), _) => s.push_str(&format!("\n  h    = {h}")),
            (None, Some(e)) => s.push_str(&format!("\n  h    = none ({e})")),
            (None, None) => s.push_str("\n  h    = none"),
        }
        s.push_str(&format!("\n  flow = ({})", st.flow.join(", ")));
    }
    let ver = &v.verification;
    let flag = |b: Option<bool>| match b {
        Some(true) => "pass",
        Some(false) => "FAIL",
        None => "n/a",
    };
    s.push_str(&format!(
        "\nrecursion: {}\northogonality: {}\ninvolution (H): {}\ninvolution (K): {}\nclosed: {}\ndensities: {}\nflows commute: {}",
        flag(Some(ver.recursion)),
        flag(ver.orthogonality),
        flag(ver.involution_h),
        flag(ver.involution_k),
        flag(Some(ver.closed_flags.iter().all(|&b| b))),
        flag(Some(ver.densities)),
        flag(ver.flows_commute),
    ));
    for (k, b) in &ver.extra {
        s.push_str(&format!("\n{k}: {}", flag(Some(*b))));
    }
    s
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check) => ExitCode::from(1),
        Err(Failure::Compute(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
