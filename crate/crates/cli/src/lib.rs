//! Command-line front end for `normnash`.
//!
//! Every command produces a [`RunReport`]; `--json` prints it, otherwise a
//! human-readable summary with the certificate witnesses is printed.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use normnash::certify::{certify_point, feasible_grid, CertificateReport, NondegeneracyReport};
use normnash::derivcheck::{check_instance, check_reference, DerivativeReference, DerivativeReport};
use normnash::fixtures;
use normnash::instance::{GnepInstance, InstanceError};
use normnash::kkt::{normalized_consistency, Consistency, InconsistencyReason, RatioParameters};
use normnash::solver::{enumerate_normalized_kkt, rho_fixed_point_residual, OracleConfig, SolveConfig};
use normnash::sweep::{interior_family_fit, ratio_range, sweep_ratio, write_tsv};

pub mod report;

pub use report::{exit, to_json, RunReport};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("file not found: {0} (and no built-in fixture has that name)")]
    FileNotFound(PathBuf),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("bad argument: {0}")]
    BadArgument(String),
    #[error(transparent)]
    Core(#[from] normnash::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl From<InstanceError> for CliError {
    fn from(e: InstanceError) -> Self {
        CliError::Core(e.into())
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "normnash", version, about = "Normalized Nash equilibria of GNEPs with shared constraints")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Enumerate normalized KKT points by active-set Newton multistart.
    Solve(SolveArgs),
    /// Certify a point: KKT validity, constraint qualifications, nondegeneracy.
    Certify(CertifyArgs),
    /// Solve over a range of ratios r1/r2 (two players).
    Sweep(SweepArgs),
    /// Fixed-point residual of the best-response map Gamma at a point.
    Oracle(OracleArgs),
    /// Compare exact derivatives with finite differences.
    CheckDerivs(CheckDerivsArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Instance JSON file, or the name of a built-in fixture.
    pub instance: String,
    /// Constraint activity tolerance.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Print the JSON report instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct BoxArgs {
    /// Search box `lo:hi` for every coordinate, or `K=lo:hi` for coordinate
    /// K (1-based). Repeatable; later entries override earlier ones.
    #[arg(long = "box", value_name = "LO:HI", allow_hyphen_values = true)]
    pub boxes: Vec<String>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: Common,
    /// Ratio parameters, comma separated (default all ones).
    #[arg(long)]
    pub r: Option<String>,
    #[command(flatten)]
    pub bounds: BoxArgs,
    /// Grid points per coordinate for Newton starts.
    #[arg(long, default_value_t = 9)]
    pub grid: usize,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub common: Common,
    /// Point, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub point: String,
    #[arg(long)]
    pub r: Option<String>,
    /// Also sample (C3) on a feasible grid with this many points per axis.
    #[arg(long)]
    pub c3_grid: Option<usize>,
    #[command(flatten)]
    pub bounds: BoxArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    /// Ratio range `lo:hi:step`.
    #[arg(long)]
    pub ratios: String,
    #[command(flatten)]
    pub bounds: BoxArgs,
    #[arg(long, default_value_t = 9)]
    pub grid: usize,
    /// Write the TSV table here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Coordinate (1-based) used for the interior family fit; default last.
    #[arg(long)]
    pub fit_coord: Option<usize>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, allow_hyphen_values = true)]
    pub point: String,
    #[arg(long)]
    pub r: Option<String>,
    #[command(flatten)]
    pub bounds: BoxArgs,
    #[arg(long, default_value_t = 201)]
    pub grid: usize,
    /// Largest residual accepted as a fixed point.
    #[arg(long, default_value_t = 1e-3)]
    pub accept: f64,
}

#[derive(Debug, Args)]
pub struct CheckDerivsArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub bounds: BoxArgs,
    /// Hand-written gradients to compare against the exact ones.
    #[arg(long)]
    pub reference: Option<PathBuf>,
}

/// Loads a file, falling back to a built-in fixture of the same name (or
/// file stem).
pub fn load_instance(arg: &str) -> CliResult<GnepInstance> {
    let path = Path::new(arg);
    if path.is_file() {
        let bytes = std::fs::read(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        return Ok(GnepInstance::load(&bytes)?);
    }
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or(arg);
    for name in [arg, stem] {
        if let Some(src) = fixtures::fixture_source(name) {
            return Ok(GnepInstance::load(src.as_bytes())?);
        }
    }
    Err(CliError::FileNotFound(path.to_path_buf()))
}

pub fn parse_list(s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::BadArgument(format!("`{t}` in `{s}` is not a finite number")))
        })
        .collect()
}

fn parse_pair(s: &str) -> CliResult<(f64, f64)> {
    let v: Vec<&str> = s.split(':').collect();
    let [lo, hi] = v.as_slice() else {
        return Err(CliError::BadArgument(format!("expected lo:hi, got `{s}`")));
    };
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| CliError::BadArgument(format!("`{t}` in `{s}` is not a number")))
    };
    Ok((num(lo)?, num(hi)?))
}

/// Resolves repeated `--box` flags to per-coordinate bounds; `[-2, 2]` by default.
pub fn parse_boxes(entries: &[String], dim: usize) -> CliResult<(Vec<f64>, Vec<f64>)> {
    let mut lo = vec![-2.0; dim];
    let mut hi = vec![2.0; dim];
    for e in entries {
        match e.split_once('=') {
            Some((k, range)) => {
                let k: usize = k
                    .trim()
                    .parse()
                    .ok()
                    .filter(|k| (1..=dim).contains(k))
                    .ok_or_else(|| CliError::BadArgument(format!("coordinate in `{e}` must be in 1..={dim}")))?;
                (lo[k - 1], hi[k - 1]) = parse_pair(range)?;
            }
            None => {
                let (l, h) = parse_pair(e)?;
                lo.fill(l);
                hi.fill(h);
            }
        }
    }
    if lo.iter().zip(&hi).any(|(l, h)| !(l < h)) {
        return Err(CliError::BadArgument("every box needs lo < hi".into()));
    }
    Ok((lo, hi))
}

pub fn parse_range(s: &str) -> CliResult<Vec<f64>> {
    let v = s
        .split(':')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| CliError::BadArgument(format!("expected lo:hi:step, got `{s}`")))?;
    let [lo, hi, step] = v.as_slice() else {
        return Err(CliError::BadArgument(format!("expected lo:hi:step, got `{s}`")));
    };
    Ok(ratio_range(*lo, *hi, *step)?)
}

fn parse_r(s: Option<&str>, inst: &GnepInstance) -> CliResult<RatioParameters> {
    let r = match s {
        None => RatioParameters::uniform(inst.num_players()),
        Some(s) => RatioParameters::new(parse_list(s)?)?,
    };
    r.check_players(inst)?;
    Ok(r)
}

fn parse_point(s: &str, inst: &GnepInstance) -> CliResult<Vec<f64>> {
    let x = parse_list(s)?;
    inst.check_dim(&x)?;
    Ok(x)
}

/// What a command produced, before timing and rendering.
struct Outcome {
    config: serde_json::Value,
    results: serde_json::Value,
    warnings: Vec<String>,
    exit_code: i32,
    text: String,
}

fn value<T: Serialize>(v: &T) -> CliResult<serde_json::Value> {
    Ok(serde_json::to_value(v)?)
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.10}")).collect();
    format!("({})", parts.join(", "))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.6e}"))
}

fn solve(a: &SolveArgs) -> CliResult<(String, Outcome)> {
    let inst = load_instance(&a.common.instance)?;
    let r = parse_r(a.r.as_deref(), &inst)?;
    let (lo, hi) = parse_boxes(&a.bounds.boxes, inst.dim())?;
    let mut cfg = SolveConfig::with_box(lo, hi);
    cfg.grid = a.grid;
    cfg.activity_tol = a.common.tol;
    let report = enumerate_normalized_kkt(&inst, &r, &cfg)?;

    let mut warnings = Vec::new();
    for d in report.degenerate.iter().filter(|d| d.is_family()) {
        warnings.push(format!(
            "degenerate family on active set {}: {} distinct solutions (min singular value {:.3e})",
            d.label,
            d.members.len(),
            d.min_singular_value
        ));
    }
    let mut text = String::new();
    let _ = writeln!(text, "{}: {} normalized KKT point(s) for r = {}", inst.name(), report.points.len(), fmt_vec(r.values()));
    for sp in &report.points {
        let p = &sp.point;
        let _ = writeln!(
            text,
            "  x = {}  active {}  multipliers {}  min sv(DF) {:.3e}{}",
            fmt_vec(&p.x),
            p.active.label(),
            fmt_vec(&p.multipliers.flat()),
            p.newton_jacobian_min_singular_value,
            if sp.degenerate { "  [degenerate]" } else { "" }
        );
    }
    let exit_code = if report.points.is_empty() { exit::NO_SOLUTION } else { exit::OK };
    Ok((
        inst.name().to_string(),
        Outcome {
            config: value(&json!({"r": r, "solve": cfg}))?,
            results: value(&report)?,
            warnings,
            exit_code,
            text,
        },
    ))
}

fn describe_reason(reason: &InconsistencyReason) -> String {
    match reason {
        InconsistencyReason::NotKkt { player, status } => {
            format!("player {player} has no KKT multipliers ({status:?})")
        }
        InconsistencyReason::ZeroVersusPositive {
            constraint,
            zero_player,
            zero_value,
            positive_player,
            positive_value,
        } => format!(
            "{constraint} has multiplier {zero_value} for player {zero_player} but {positive_value} for player {positive_player}; no positive r equalizes them"
        ),
        InconsistencyReason::RatioMismatch { residual } => {
            format!("player multipliers admit no common ratio (residual {residual:.3e})")
        }
        InconsistencyReason::NoPositiveRatio => "no positive r gives nonnegative multipliers".into(),
    }
}

fn nondegeneracy_text(t: &mut String, nd: &NondegeneracyReport) {
    let _ = writeln!(t, "  ND1: {}", nd.nd1.holds);
    let _ = writeln!(t, "  ND2: {} (min multiplier {})", nd.nd2.holds, fmt_opt(nd.nd2.min_multiplier));
    match &nd.nd3 {
        Some(n3) if n3.tangent_dimension == 0 => {
            let _ = writeln!(t, "  ND3: vacuous (tangent dimension 0)");
        }
        Some(n3) => {
            let _ = writeln!(
                t,
                "  ND3: {} (tangent dimension {}, min sv {}, det {})",
                n3.holds,
                n3.tangent_dimension,
                fmt_opt(n3.min_singular_value),
                fmt_opt(n3.canonical_determinant)
            );
        }
        None => {
            let _ = writeln!(t, "  ND3: undefined (ND1 fails)");
        }
    }
}

fn certificate_text(inst: &GnepInstance, c: &CertificateReport, consistency: Option<&Consistency>) -> String {
    let mut t = String::new();
    let _ = writeln!(t, "{} at x = {}, r = {}", inst.name(), fmt_vec(&c.point), fmt_vec(c.r.values()));
    let _ = writeln!(t, "  active: {}", c.active);
    let _ = writeln!(t, "  multipliers: {}", fmt_vec(&c.multipliers.flat()));
    let _ = writeln!(t, "  stationarity residual: {:.3e}", c.stationarity_residual);
    for v in &c.violations {
        let _ = writeln!(t, "  violation: {v:?}");
    }
    let l = &c.gnep_licq;
    let _ = writeln!(
        t,
        "  GNEP-LICQ: {} (rank {} of {}, min sv {})",
        l.holds,
        l.rank,
        l.required_rank,
        fmt_opt(l.min_singular_value)
    );
    let _ = writeln!(t, "  GNEP-MFCQ: {} (t* = {:.3e})", c.gnep_mfcq.holds, c.gnep_mfcq.t_star);
    for p in &c.players {
        let _ = writeln!(
            t,
            "  player {}: LICQ {} (rank {} of {}), MFCQ {} (t* = {:.3e})",
            p.player, p.licq.holds, p.licq.rank, p.licq.required_rank, p.mfcq.holds, p.mfcq.t_star
        );
    }
    let nd = &c.nondegeneracy;
    if c.is_kkt() {
        nondegeneracy_text(&mut t, nd);
    }
    if let Some(c3) = &c.c3_sample {

        let _ = writeln!(
            t,
            "  (C3) on {} samples: {} (min eigenvalue {:.6e})",
            c3.samples,
            c3.verdict(),
            c3.min_eigenvalue
        );
    }
    if let Some(s) = c.slater {
        let _ = writeln!(t, "  declared Slater point strictly feasible: {s}");
    }
    match consistency {
        Some(Consistency::Inconsistent { reason }) => {
            let _ = writeln!(t, "  not normalized for any r: {}", describe_reason(reason));
        }
        Some(Consistency::Consistent { witness, .. }) => {
            let _ = writeln!(t, "  normalized for r = {}", fmt_vec(witness.values()));
        }
        None => {}
    }
    let verdict = if !c.is_kkt() {
        "NOT a normalized KKT point"
    } else if c.nondegenerate() {
        "nondegenerate"
    } else {
        "degenerate"
    };
    let _ = writeln!(t, "  verdict: {verdict}");
    t
}

fn certify(a: &CertifyArgs) -> CliResult<(String, Outcome)> {
    let inst = load_instance(&a.common.instance)?;
    let r = parse_r(a.r.as_deref(), &inst)?;
    let x = parse_point(&a.point, &inst)?;
    let tol = a.common.tol;
    let config = json!({"r": r, "point": x, "tol": tol, "c3_grid": a.c3_grid});

    if !inst.feasible(&x, tol)? {
        let values = inst.constraint_values(&x)?;
        let worst = values
            .iter()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(c, v)| format!("{c} = {v:e}"))
            .unwrap_or_default();
        return Ok((
            inst.name().to_string(),
            Outcome {
                config,
                results: json!({"feasible": false, "most_violated": worst}),
                warnings: Vec::new(),
                exit_code: exit::NOT_NORMALIZED,
                text: format!("{}: x = {} is infeasible ({worst})\n  verdict: NOT a normalized KKT point\n", inst.name(), fmt_vec(&x)),
            },
        ));
    }

    let samples = match a.c3_grid {
        Some(k) => {
            let (lo, hi) = parse_boxes(&a.bounds.boxes, inst.dim())?;
            feasible_grid(&inst, &lo, &hi, k, tol)?
        }
        None => Vec::new(),
    };
    let cert = certify_point(&inst, &x, &r, tol, &samples)?;
    let mut warnings = Vec::new();
    let consistency = match normalized_consistency(&inst, &x, tol) {
        Ok(c) => Some(c),
        Err(e) => {
            warnings.push(format!("normalized consistency undecided: {e}"));
            None
        }
    };
    let exit_code = if !cert.is_kkt() {
        exit::NOT_NORMALIZED
    } else if cert.nondegenerate() {
        exit::OK
    } else {
        exit::DEGENERATE
    };
    let text = certificate_text(&inst, &cert, consistency.as_ref());
    Ok((
        inst.name().to_string(),
        Outcome {
            config,
            results: json!({"feasible": true, "certificate": cert, "consistency": consistency}),
            warnings,
            exit_code,
            text,
        },
    ))
}

fn sweep(a: &SweepArgs) -> CliResult<(String, Outcome)> {
    let inst = load_instance(&a.common.instance)?;
    let ratios = parse_range(&a.ratios)?;
    let (lo, hi) = parse_boxes(&a.bounds.boxes, inst.dim())?;
    let mut cfg = SolveConfig::with_box(lo, hi);
    cfg.grid = a.grid;
    cfg.activity_tol = a.common.tol;
    let rows = sweep_ratio(&inst, &ratios, &cfg)?;

    let coord = match a.fit_coord {
        Some(k) if (1..=inst.dim()).contains(&k) => k - 1,
        Some(k) => return Err(CliError::BadArgument(format!("--fit-coord {k} is out of range"))),
        None => inst.dim() - 1,
    };
    let fit = interior_family_fit(&rows, coord).ok();

    let mut warnings = Vec::new();
    for row in rows.iter().filter(|r| r.degenerate_family) {
        warnings.push(format!(
            "degenerate family of equilibria at ratio {}",
            row.ratio.map_or_else(|| "?".into(), |v| v.to_string())
        ));
    }
    let mut tsv = Vec::new();
    write_tsv(&inst, &rows, &mut tsv).map_err(|source| CliError::Io {
        path: PathBuf::from("<tsv>"),
        source,
    })?;
    let tsv = String::from_utf8(tsv).expect("TSV is UTF-8");
    let mut text = String::new();
    match &a.out {
        Some(path) => {
            std::fs::write(path, &tsv).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            let _ = writeln!(text, "{}: {} ratios, table written to {}", inst.name(), rows.len(), path.display());
        }
        None => text.push_str(&tsv),
    }
    if let Some(f) = &fit {
        let _ = writeln!(
            text,
            "interior family: t = ({:.6} rho + {:.6}) / ({:.6} rho + {:.6}), residual {:.3e}",
            f.a, f.b, f.c, f.d, f.residual
        );
    }
    Ok((
        inst.name().to_string(),
        Outcome {
            config: json!({"ratios": ratios, "solve": cfg, "out": a.out}),
            results: json!({"rows": rows, "interior_fit": fit}),
            warnings,
            exit_code: exit::OK,
            text,
        },
    ))
}

fn oracle(a: &OracleArgs) -> CliResult<(String, Outcome)> {
    let inst = load_instance(&a.common.instance)?;
    let r = parse_r(a.r.as_deref(), &inst)?;
    let x = parse_point(&a.point, &inst)?;
    let (lo, hi) = parse_boxes(&a.bounds.boxes, inst.dim())?;
    let mut cfg = OracleConfig::new(lo, hi);
    cfg.grid = a.grid;
    let res = rho_fixed_point_residual(&inst, &x, &r, &cfg)?;
    let accepted = res.residual <= a.accept;
    let text = format!(
        "{}: Gamma(x) ~ {} for x = {}\n  residual {:.6e} ({} threshold {:e})\n",
        inst.name(),
        fmt_vec(&res.y),
        fmt_vec(&x),
        res.residual,
        if accepted { "within" } else { "above" },
        a.accept
    );
    Ok((
        inst.name().to_string(),
        Outcome {
            config: json!({"r": r, "point": x, "oracle": cfg, "accept": a.accept}),
            results: json!({"oracle": res, "accepted": accepted}),
            warnings: Vec::new(),
            exit_code: if accepted { exit::OK } else { exit::ORACLE_REJECT },
            text,
        },
    ))
}

/// `count` points uniform in the box, reproducible from `seed`.
pub fn sample_points(lo: &[f64], hi: &[f64], count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| lo.iter().zip(hi).map(|(l, h)| rng.gen_range(*l..*h)).collect())
        .collect()
}

fn derivative_text(title: &str, rep: &DerivativeReport) -> String {
    let mut t = format!("{title}: {} samples, max scaled error {:.3e}\n", rep.samples, rep.max_error);
    for e in &rep.expressions {
        let _ = writeln!(
            t,
            "  {:<8} gradient {:.3e}  hessian {:.3e}  {}",
            e.label,
            e.max_gradient_error,
            e.max_hessian_error,
            if e.passed { "ok" } else { "MISMATCH" }
        );
    }
    t
}

fn check_derivs(a: &CheckDerivsArgs) -> CliResult<(String, Outcome)> {
    let inst = load_instance(&a.common.instance)?;
    if a.samples == 0 {
        return Err(CliError::BadArgument("--samples must be positive".into()));
    }
    let (lo, hi) = parse_boxes(&a.bounds.boxes, inst.dim())?;
    let points = sample_points(&lo, &hi, a.samples, a.seed);
    let fd = check_instance(&inst, &points)?;
    let mut text = derivative_text("finite differences", &fd);
    let reference = match &a.reference {
        Some(path) => {
            let bytes = std::fs::read(path).map_err(|source| match source.kind() {
                std::io::ErrorKind::NotFound => CliError::FileNotFound(path.clone()),
                _ => CliError::Io {
                    path: path.clone(),
                    source,
                },
            })?;
            let parsed: DerivativeReference = serde_json::from_slice(&bytes)?;
            let rep = check_reference(&inst, &parsed, &points)?;
            text.push_str(&derivative_text("hand-written reference", &rep));
            Some(rep)
        }
        None => None,
    };
    let passed = fd.passed && reference.as_ref().map_or(true, |r| r.passed);
    Ok((
        inst.name().to_string(),
        Outcome {
            config: json!({"samples": a.samples, "seed": a.seed, "lo": lo, "hi": hi, "reference": a.reference}),
            results: json!({"finite_differences": fd, "reference": reference, "passed": passed}),
            warnings: Vec::new(),
            exit_code: if passed { exit::OK } else { exit::DERIVATIVE_MISMATCH },
            text,
        },
    ))
}

/// Rendered result of one invocation.
#[derive(Debug, Clone)]
pub struct Rendered {
    pub exit_code: i32,
    pub stdout: String,
    pub stderr: String,
    pub report: Option<RunReport>,
}

pub fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Solve(_) => "solve",
        Command::Certify(_) => "certify",
        Command::Sweep(_) => "sweep",
        Command::Oracle(_) => "oracle",
        Command::CheckDerivs(_) => "check-derivs",
    }
}

fn wants_json(c: &Command) -> bool {
    match c {
        Command::Solve(a) => a.common.json,
        Command::Certify(a) => a.common.json,
        Command::Sweep(a) => a.common.json,
        Command::Oracle(a) => a.common.json,
        Command::CheckDerivs(a) => a.common.json,
    }
}

/// Runs a parsed command. Input and configuration errors give exit code 2.
pub fn run(cli: &Cli) -> Rendered {
    let start = Instant::now();
    let result = match &cli.command {
        Command::Solve(a) => solve(a),
        Command::Certify(a) => certify(a),
        Command::Sweep(a) => sweep(a),
        Command::Oracle(a) => oracle(a),
        Command::CheckDerivs(a) => check_derivs(a),
    };
    let (instance, out) = match result {
        Ok(v) => v,
        Err(e) => {
            return Rendered {
                exit_code: exit::USAGE,
                stdout: String::new(),
                stderr: format!("error: {e}\n"),
                report: None,
            }
        }
    };
    let report = RunReport {
        command: command_name(&cli.command).to_string(),
        instance,
        config: out.config,
        results: out.results,
        warnings: out.warnings,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        exit_code: out.exit_code,
    };
    let stdout = if wants_json(&cli.command) {
        match to_json(&report) {
            Ok(s) => s + "\n",
            Err(e) => {
                return Rendered {
                    exit_code: exit::USAGE,
                    stdout: String::new(),
                    stderr: format!("error: {e}\n"),
                    report: None,
                }
            }
        }
    } else {
        out.text
    };
    let stderr = report.warnings.iter().map(|w| format!("warning: {w}\n")).collect();
    Rendered {
        exit_code: report.exit_code,
        stdout,
        stderr,
        report: Some(report),
    }
}
