//! `rlam`: command-line front end for the toolkit.
//!
//! Every subcommand reads a `.rlam` source file (pragmas + one term),
//! prints a human-readable report or, with `--json`, a stable
//! `{status, result, diagnostics}` object, and exits with:
//!
//! * 0 when the analysis succeeds (well typed / Accepted / Continuous),
//! * 1 when the analysis is negative (type error, Rejected, a suspected
//!   discontinuity, a term outside the fragment the command handles) or
//!   undecided (Unknown / Inconclusive; `--permissive` downgrades these
//!   two to exit 0),
//! * 2 on usage, parse, and internal errors.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value as Json};

use rlam::autodiff::{ad_term, grad_at, AdError, DualNaming, GradError};
use rlam::continuity::{
    refine_check, Assignment, CheckConfig, Formula, RefContext, RefType, Verdict,
};
use rlam::oracles::{
    grad_fd, judgment_probe, poly_normalize, ContinuityVerdict, PolyError, ProbeConfig, FD_STEP,
};
use rlam::semantics::{default_registry, eval, GValue, PrimRegistry, SemEnv, Value};
use rlam::syntax::{
    parse_formula, parse_source_file, pretty, pretty_f64, pretty_rational, pretty_type, SourceFile,
};
use rlam::typing::typecheck;
use rlam::{SimpleType, Term, TypingContext};

const DEFAULT_PROBE_SAMPLES: usize = 64;

#[derive(Parser)]
#[command(name = "rlam", version, about = "Typecheck, run, differentiate, and certify continuity of real-valued lambda terms")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    #[command(flatten)]
    opts: GlobalOpts,
}

#[derive(Args)]
struct GlobalOpts {
    /// Emit a {status, result, diagnostics} JSON object instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Seed for every sampling pass (domain points, boundary probes).
    #[arg(long, global = true, env = "RLAM_SEED")]
    seed: Option<u64>,
    /// Probe radius halvings before a point is classified.
    #[arg(long, global = true, value_name = "K")]
    probe_depth: Option<u32>,
    /// Domain points sampled per probe or boundary check.
    #[arg(long, global = true, value_name = "K")]
    probe_seeds: Option<usize>,
    /// Exit 0 instead of 1 on Unknown / Inconclusive verdicts.
    #[arg(long, global = true)]
    permissive: bool,
    /// Compare higher-order branch results by alpha-equivalence only,
    /// never by sampling applications.
    #[arg(long, global = true)]
    strict_equiv: bool,
    /// Step used for finite-difference residuals.
    #[arg(long, global = true, value_name = "H")]
    fd_step: Option<f64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the simple type of the file's term under its context pragmas.
    Typecheck { file: PathBuf },
    /// Evaluate the term with context variables bound to --args.
    Eval {
        file: PathBuf,
        /// Comma-separated values for the context variables, in order.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        args: Vec<f64>,
    },
    /// Print the dual-number transform of the term.
    Ad { file: PathBuf },
    /// Print the gradient of the term at a point.
    Grad {
        file: PathBuf,
        /// Comma-separated coordinates, one per context variable.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        at: Vec<f64>,
        /// Also print finite-difference residuals.
        #[arg(long)]
        check_fd: bool,
    },
    /// Print the canonical polynomial the term normalizes to.
    Poly { file: PathBuf },
    /// Run the continuity refinement checker on the file's judgment.
    Check {
        file: Option<PathBuf>,
        /// Check every .rlam file under a directory.
        #[arg(long, value_name = "DIR", conflicts_with = "file")]
        all: Option<PathBuf>,
    },
    /// Sample the judgment's domain and probe each point for jumps.
    Probe {
        file: PathBuf,
        /// Overrides the file's @domain pragma.
        #[arg(long, value_name = "FORMULA")]
        domain: Option<String>,
    },
}

/// One subcommand outcome. `status` drives both the JSON field and the
/// exit code; `text` is the human rendering.
struct Report {
    status: &'static str,
    result: Json,
    diagnostics: Vec<String>,
    text: String,
}

impl Report {
    fn ok(result: Json, text: impl Into<String>) -> Self {
        Report { status: "ok", result, diagnostics: Vec::new(), text: text.into() }
    }

    fn negative(status: &'static str, result: Json, text: impl Into<String>) -> Self {
        Report { status, result, diagnostics: Vec::new(), text: text.into() }
    }

    fn with_status(mut self, status: &'static str) -> Self {
        self.status = status;
        self
    }

    fn exit_code(&self, permissive: bool) -> u8 {
        match self.status {
            "ok" | "accepted" | "continuous" => 0,
            "unknown" | "inconclusive" if permissive => 0,
            _ => 1,
        }
    }
}

/// A usage, parse, or internal failure: exit 2.
struct Failure(String);

/// Writes to stdout, tolerating a closed pipe (`rlam .. | head`).
fn emit(line: &str) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout().lock(), "{}", line);
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let reg = default_registry();
    match run(&cli.cmd, &cli.opts, &reg) {
        Ok(report) => {
            if cli.opts.json {
                let obj = json!({
                    "status": report.status,
                    "result": report.result,
                    "diagnostics": report.diagnostics,
                });
                emit(&serde_json::to_string_pretty(&obj).expect("serializable"));
            } else {
                emit(&report.text);
                for d in &report.diagnostics {
                    eprintln!("note: {}", d);
                }
            }
            ExitCode::from(report.exit_code(cli.opts.permissive))
        }
        Err(Failure(msg)) => {
            if cli.opts.json {
                let obj = json!({ "status": "error", "result": Json::Null, "diagnostics": [msg] });
                emit(&serde_json::to_string_pretty(&obj).expect("serializable"));
            } else {
                eprintln!("error: {}", msg);
            }
            ExitCode::from(2)
        }
    }
}

fn run(cmd: &Cmd, opts: &GlobalOpts, reg: &PrimRegistry) -> Result<Report, Failure> {
    match cmd {
        Cmd::Typecheck { file } => cmd_typecheck(file, reg),
        Cmd::Eval { file, args } => cmd_eval(file, args, reg),
        Cmd::Ad { file } => cmd_ad(file, reg),
        Cmd::Grad { file, at, check_fd } => cmd_grad(file, at, *check_fd, opts, reg),
        Cmd::Poly { file } => cmd_poly(file, reg),
        Cmd::Check { file: Some(file), all: None } => cmd_check(file, opts, reg),
        Cmd::Check { file: None, all: Some(dir) } => cmd_check_all(dir, opts, reg),
        Cmd::Check { .. } => Err(Failure("check needs a FILE or --all DIR".into())),
        Cmd::Probe { file, domain } => cmd_probe(file, domain.as_deref(), opts, reg),
    }
}

fn load(file: &Path, reg: &PrimRegistry) -> Result<SourceFile, Failure> {
    let src = std::fs::read_to_string(file)
        .map_err(|e| Failure(format!("cannot read {}: {}", file.display(), e)))?;
    parse_source_file(&src, reg)
        .map_err(|e| Failure(format!("{}:{}:{}: {}", file.display(), e.line, e.col, e.msg)))
}

/// The simple typing context declared by the file's pragmas.
fn simple_ctx(sf: &SourceFile) -> TypingContext {
    let binds = sf
        .vars
        .iter()
        .map(|v| {
            let ty = match (&v.simple, &v.refined) {
                (Some(st), _) => st.clone(),
                (None, Some(rt)) => rt.erase(),
                (None, None) => SimpleType::Real,
            };
            (v.name.clone(), ty)
        })
        .collect();
    TypingContext { bindings: binds }
}

/// Moves the binders of a leading lambda into the context so that
/// commands which need a first-order view (`grad`, `probe`, `eval` with
/// `--args`) accept both `@var`-style and `\x. ..`-style files.
/// Unannotated binders default to `R`.
fn open_lambda(ctx: &TypingContext, t: &Term) -> (TypingContext, Term) {
    let mut ctx = ctx.clone();
    let mut t = t.clone();
    while let Term::Lam(binders, body) = &t {
        if !binders
            .iter()
            .all(|b| matches!(b.ty.as_ref().unwrap_or(&SimpleType::Real), SimpleType::Real))
        {
            break;
        }
        for b in binders {
            ctx.bindings.push((b.name.clone(), SimpleType::Real));
        }
        t = (**body).clone();
    }
    (ctx, t)
}

fn cmd_typecheck(file: &Path, reg: &PrimRegistry) -> Result<Report, Failure> {
    let sf = load(file, reg)?;
    let ctx = simple_ctx(&sf);
    match typecheck(&ctx, &sf.term, reg) {
        Ok(ty) => {
            let rendered = pretty_type(&ty);
            Ok(Report::ok(json!({ "type": rendered }), rendered))
        }
        Err(e) => Ok(Report::negative(
            "type-error",
            json!({ "message": e.to_string() }),
            format!("type error: {}", e),
        )),
    }
}

fn value_json(v: &Value) -> Json {
    match v {
        GValue::Real(x) => json!(x),
        GValue::Pair(a, b) => json!([value_json(a), value_json(b)]),
        GValue::Fun(_) => json!("<function>"),
    }
}

fn value_text(v: &Value) -> String {
    match v {
        GValue::Real(x) => pretty_f64(*x),
        GValue::Pair(a, b) => format!("({}, {})", value_text(a), value_text(b)),
        GValue::Fun(_) => "<function>".into(),
    }
}

fn cmd_eval(file: &Path, args: &[f64], reg: &PrimRegistry) -> Result<Report, Failure> {
    let sf = load(file, reg)?;
    let declared = simple_ctx(&sf);
    let (ctx, term) = if declared.bindings.is_empty() && !args.is_empty() {
        open_lambda(&declared, &sf.term)
    } else {
        (declared, sf.term.clone())
    };
    if let Err(e) = typecheck(&ctx, &term, reg) {
        return Ok(Report::negative(
            "type-error",
            json!({ "message": e.to_string() }),
            format!("type error: {}", e),
        ));
    }
    if args.len() != ctx.bindings.len() {
        return Err(Failure(format!(
            "--args has {} values, the context has {} variables",
            args.len(),
            ctx.bindings.len()
        )));
    }
    let mut env = SemEnv::new();
    for ((name, ty), v) in ctx.bindings.iter().zip(args) {
        if !matches!(ty, SimpleType::Real) {
            return Err(Failure(format!("context variable `{}` is not of type R", name)));
        }
        env.insert(name.clone(), GValue::Real(*v));
    }
    let v = eval(&env, &term, reg).map_err(|e| Failure(format!("evaluation failed: {}", e)))?;
    Ok(Report::ok(json!({ "value": value_json(&v) }), value_text(&v)))
}

fn cmd_ad(file: &Path, reg: &PrimRegistry) -> Result<Report, Failure> {
    let sf = load(file, reg)?;
    let ctx = simple_ctx(&sf);
    if let Err(e) = typecheck(&ctx, &sf.term, reg) {
        return Ok(Report::negative(
            "type-error",
            json!({ "message": e.to_string() }),
            format!("type error: {}", e),
        ));
    }
    let naming = DualNaming::for_term(&sf.term, &ctx);
    match ad_term(&sf.term, &naming, reg) {
        Ok(d) => {
            let rendered = pretty(&d);
            Ok(Report::ok(json!({ "term": rendered }), rendered))
        }
        Err(e @ AdError::Conditional) | Err(e @ AdError::NotDifferentiable(_)) => Ok(
            Report::negative("unsupported", json!({ "message": e.to_string() }), e.to_string()),
        ),
        Err(e) => Err(Failure(e.to_string())),
    }
}

fn gradient_text(g: &[f64]) -> String {
    let parts: Vec<String> = g.iter().map(|x| pretty_f64(*x)).collect();
    format!("[{}]", parts.join(", "))
}

fn cmd_grad(
    file: &Path,
    at: &[f64],
    check_fd: bool,
    opts: &GlobalOpts,
    reg: &PrimRegistry,
) -> Result<Report, Failure> {
    let sf = load(file, reg)?;
    let declared = simple_ctx(&sf);
    let (ctx, term) = if declared.bindings.is_empty() {
        open_lambda(&declared, &sf.term)
    } else {
        (declared, sf.term.clone())
    };
    match grad_at(&ctx, &term, at, reg) {
        Ok(g) => {
            let mut result = json!({ "gradient": g });
            let mut text = gradient_text(&g);
            if check_fd {
                let h = opts.fd_step.unwrap_or(FD_STEP);
                let fd = grad_fd(&ctx, &term, at, h, reg).map_err(|e| Failure(e.to_string()))?;
                let residuals: Vec<f64> =
                    g.iter().zip(&fd).map(|(a, b)| (a - b).abs()).collect();
                let max = residuals.iter().cloned().fold(0.0, f64::max);
                result["fd"] = json!(fd);
                result["fd_residuals"] = json!(residuals);
                result["fd_max_residual"] = json!(max);
                let _ = write!(
                    text,
                    "\nfd        {}\nmax residual {:.3e}",
                    gradient_text(&fd),
                    max
                );
            }
            Ok(Report::ok(result, text))
        }
        Err(GradError::Type(e)) => Ok(Report::negative(
            "type-error",
            json!({ "message": e.to_string() }),
            format!("type error: {}", e),
        )),
        Err(GradError::Ad(e)) => Ok(Report::negative(
            "unsupported",
            json!({ "message": e.to_string() }),
            e.to_string(),
        )),
        Err(e @ GradError::PointArity { .. }) => Err(Failure(e.to_string())),
        Err(GradError::Eval(e)) => Err(Failure(format!("evaluation failed: {}", e))),
    }
}

fn cmd_poly(file: &Path, reg: &PrimRegistry) -> Result<Report, Failure> {
    let sf = load(file, reg)?;
    let ctx = simple_ctx(&sf);
    match poly_normalize(&ctx, &sf.term, reg) {
        Ok((p, names)) => {
            let rendered = p.to_string_with(&names);
            Ok(Report::ok(
                json!({
                    "polynomial": rendered,
                    "vars": names,
                    "degree": p.total_degree(),
                }),
                rendered,
            ))
        }
        Err(PolyError::Type(e)) => Ok(Report::negative(
            "type-error",
            json!({ "message": e.to_string() }),
            format!("type error: {}", e),
        )),
        Err(e @ (PolyError::Eval(_) | PolyError::NotScalar)) => Ok(Report::negative(
            "unsupported",
            json!({ "message": e.to_string() }),
            format!("not a polynomial term: {}", e),
        )),
        Err(e @ PolyError::NonGroundContext(_)) => Err(Failure(e.to_string())),
    }
}

fn check_config(opts: &GlobalOpts) -> CheckConfig {
    let mut cfg = CheckConfig::default();
    if let Some(seed) = opts.seed {
        cfg.equiv.seed = seed;
    }
    if let Some(n) = opts.probe_seeds {
        cfg.equiv.samples = n;
    }
    cfg.equiv.semantic_ho = !opts.strict_equiv;
    cfg
}

fn witness_json(w: &Assignment) -> Json {
    let m: serde_json::Map<String, Json> = w
        .iter()
        .map(|(k, v)| (k.clone(), json!(pretty_rational(v))))
        .collect();
    Json::Object(m)
}

fn witness_text(w: &Assignment) -> String {
    let parts: Vec<String> =
        w.iter().map(|(k, v)| format!("{} = {}", k, pretty_rational(v))).collect();
    parts.join(", ")
}

/// Builds the refinement judgment a `check` run needs from the file's
/// pragmas. Every context variable must carry a refined type.
fn judgment_of(sf: &SourceFile) -> Result<(RefContext, Formula, Option<Formula>, RefType), Failure> {
    let target = sf
        .target
        .clone()
        .ok_or_else(|| Failure("check needs a @target pragma".into()))?;
    let mut binds = Vec::new();
    for v in &sf.vars {
        match &v.refined {
            Some(rt) => binds.push((v.name.clone(), rt.clone())),
            None => {
                return Err(Failure(format!(
                    "check needs a refined type for `{}`, e.g. `@var {} : {{a in R}}`",
                    v.name, v.name
                )))
            }
        }
    }
    let domain = sf.domain.clone().unwrap_or(Formula::Top);
    let ctx = RefContext::of(binds).map_err(Failure)?;
    Ok((ctx, domain, sf.image.clone(), target))
}

fn check_report(verdict: &Verdict) -> Report {
    match verdict {
        Verdict::Accepted { derivation } => Report::ok(
            json!({ "verdict": "accepted", "derivation": derivation.to_string() }),
            format!("Accepted\n{}", derivation),
        )
        .with_status("accepted"),
        Verdict::Rejected { rule, message, witness } => {
            let mut text = format!("Rejected [{}]: {}", rule, message);
            if let Some(w) = witness {
                let _ = write!(text, "\n  at {}", witness_text(w));
            }
            Report::negative(
                "rejected",
                json!({
                    "verdict": "rejected",
                    "rule": rule,
                    "message": message,
                    "witness": witness.as_ref().map(witness_json),
                }),
                text,
            )
        }
        Verdict::Unknown { reason } => Report::negative(
            "unknown",
            json!({ "verdict": "unknown", "reason": reason }),
            format!("Unknown: {}", reason),
        ),
    }
}

fn cmd_check(file: &Path, opts: &GlobalOpts, reg: &PrimRegistry) -> Result<Report, Failure> {
    let sf = load(file, reg)?;
    let (ctx, domain, image, target) = judgment_of(&sf)?;
    let cfg = check_config(opts);
    match refine_check(&ctx, &domain, image.as_ref(), &sf.term, &target, reg, &cfg) {
        Ok(v) => Ok(check_report(&v)),
        Err(rlam::continuity::RefineError::Judgment(msg)) => Err(Failure(msg)),
        Err(e) => Ok(Report::negative(
            "type-error",
            json!({ "message": e.to_string() }),
            format!("type error: {}", e),
        )),
    }
}

fn cmd_check_all(dir: &Path, opts: &GlobalOpts, reg: &PrimRegistry) -> Result<Report, Failure> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Failure(format!("cannot read {}: {}", dir.display(), e)))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "rlam"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Failure(format!("no .rlam files under {}", dir.display())));
    }
    let mut rows = Vec::new();
    let mut lines = Vec::new();
    let mut worst = "accepted";
    for f in &files {
        let report = match cmd_check(f, opts, reg) {
            Ok(r) => r,
            Err(Failure(msg)) => {
                Report::negative("error", json!({ "message": msg.clone() }), msg)
            }
        };
        let first = report.text.lines().next().unwrap_or("").to_string();
        lines.push(format!("{}: {}", f.display(), first));
        rows.push(json!({ "file": f.display().to_string(), "status": report.status, "result": report.result }));
        let rank = |s: &str| match s {
            "accepted" => 0,
            "unknown" => 1,
            _ => 2,
        };
        if rank(report.status) > rank(worst) {
            worst = match report.status {
                "unknown" => "unknown",
                _ => "rejected",
            };
        }
    }
    let status: &'static str = match worst {
        "accepted" => "accepted",
        "unknown" => "unknown",
        _ => "rejected",
    };
    Ok(Report {
        status,
        result: json!({ "files": rows }),
        diagnostics: Vec::new(),
        text: lines.join("\n"),
    })
}

fn point_text(p: &[f64]) -> String {
    let parts: Vec<String> = p.iter().map(|x| pretty_f64(*x)).collect();
    format!("({})", parts.join(", "))
}

fn cmd_probe(
    file: &Path,
    domain_override: Option<&str>,
    opts: &GlobalOpts,
    reg: &PrimRegistry,
) -> Result<Report, Failure> {
    let sf = load(file, reg)?;
    let declared = simple_ctx(&sf);
    let (ctx, term) = if declared.bindings.is_empty() {
        open_lambda(&declared, &sf.term)
    } else {
        (declared, sf.term.clone())
    };
    // Logical names: the refined pragma's variable when present, the term
    // variable itself otherwise.
    let mut vars = Vec::new();
    for (name, _) in &ctx.bindings {
        let logical = sf
            .vars
            .iter()
            .find(|v| &v.name == name)
            .and_then(|v| v.refined.as_ref())
            .and_then(|rt| match rt {
                RefType::Ground { var } => Some(var.clone()),
                _ => None,
            });
        vars.push(logical.unwrap_or_else(|| name.clone()));
    }
    let domain = match domain_override {
        Some(src) => parse_formula(src, reg).map_err(|e| Failure(format!("--domain: {}", e.msg)))?,
        None => sf.domain.clone().unwrap_or(Formula::Top),
    };
    let image_slot;
    let image: Option<(&str, &Formula)> = match (&sf.image, &sf.target) {
        (Some(f), Some(RefType::Ground { var })) => {
            image_slot = (var.clone(), f.clone());
            Some((image_slot.0.as_str(), &image_slot.1))
        }
        (Some(_), _) => {
            return Err(Failure(
                "probe needs a ground @target naming the image variable when @image is set".into(),
            ))
        }
        (None, _) => None,
    };
    let mut cfg = ProbeConfig::default();
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    if let Some(k) = opts.probe_depth {
        cfg.max_halvings = k;
    }
    let samples = opts.probe_seeds.unwrap_or(DEFAULT_PROBE_SAMPLES);
    match judgment_probe(&ctx, &vars, &term, &domain, image, reg, &cfg, samples) {
        Ok(ContinuityVerdict::Continuous { points }) => Ok(Report::negative(
            "continuous",
            json!({ "verdict": "continuous", "points": points }),
            format!("Continuous at {} sampled points", points),
        )),
        Ok(ContinuityVerdict::SuspectDiscontinuity { point, probe, here, near }) => {
            Ok(Report::negative(
                "suspect",
                json!({
                    "verdict": "suspect",
                    "point": point,
                    "probe": probe,
                    "here": here,
                    "near": near,
                }),
                format!(
                    "SuspectDiscontinuity at {}: value {} vs {} approaching from {}",
                    point_text(&point),
                    pretty_f64(here),
                    pretty_f64(near),
                    point_text(&probe),
                ),
            ))
        }
        Ok(ContinuityVerdict::ImageViolation { point, value }) => Ok(Report::negative(
            "image-violation",
            json!({ "verdict": "image-violation", "point": point, "value": value }),
            format!(
                "ImageViolation at {}: value {} escapes the image",
                point_text(&point),
                pretty_f64(value),
            ),
        )),
        Ok(ContinuityVerdict::Inconclusive(reason)) => Ok(Report::negative(
            "inconclusive",
            json!({ "verdict": "inconclusive", "reason": reason }),
            format!("Inconclusive: {}", reason),
        )),
        Err(e) => Ok(Report::negative(
            "type-error",
            json!({ "message": e.to_string() }),
            format!("type error: {}", e),
        )),
    }
}
