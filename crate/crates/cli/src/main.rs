use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use padic_potts::analytic::exp_threshold;
use padic_potts::classify::{boundedness_verdict, classify, cross_check};
use padic_potts::gibbs::{
    build_volume, partition_and_measures, resolve_field, verify_compatibility,
    BoundaryFieldAssignment, CompatStatus, FieldChoice,
};
use padic_potts::potts::{
    contraction_trace, discriminant_analysis, norm_case_analysis, search_ti_roots_mod, solve_ti,
    Solvability,
};
use padic_potts::sampling::{random_field, rng_from_seed};
use padic_potts::{ModelError, ModelParams, PadicError, PadicNorm, SpinAction};

const THREADS_ENV: &str = "PADIC_POTTS_THREADS";

#[derive(Parser)]
#[command(
    name = "padic-potts",
    version,
    about = "p-adic Potts model on Cayley trees"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Phase-transition verdict with witnesses.
    Classify(Common),
    /// Translation-invariant fixed points, discriminant digits and norm classes.
    Roots(Common),
    /// Brute-force compatibility of V_(n-1) and V_n measures.
    VerifyCompat(FieldCommand),
    /// Every configuration of V_n with its weight and measure.
    MeasureTable(FieldCommand),
    /// Boundedness of the measure with norm evidence.
    Bounded(FieldCommand),
    /// Norm trace of the translation-invariant recursion from a random field.
    Contract {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10)]
        iters: usize,
    },
    /// Stated conditions against direct computation.
    CrossCheck(Common),
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long)]
    p: u64,
    #[arg(long)]
    q: u32,
    #[arg(long, default_value_t = 2)]
    k: u32,
    /// Coupling as an integer or ratio; defaults to p (4 for p = 2).
    #[arg(long = "J", value_name = "RATIONAL", allow_hyphen_values = true)]
    j: Option<String>,
    #[arg(long, default_value_t = 32)]
    precision: u32,
    /// Volume radius.
    #[arg(long, default_value_t = 2)]
    n: u32,
    /// Maximum number of configurations to enumerate.
    #[arg(long, default_value_t = 1_000_000)]
    cap: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct FieldCommand {
    #[command(flatten)]
    common: Common,
    /// Use the given admissible root (1-based) instead of the zero field.
    #[arg(long, conflicts_with = "perturb")]
    root: Option<usize>,
    /// Use a seeded perturbation of the first root.
    #[arg(long)]
    perturb: bool,
}

impl FieldCommand {
    fn choice(&self) -> FieldChoice {
        match (self.root, self.perturb) {
            (Some(index), _) => FieldChoice::Root { index },
            (None, true) => FieldChoice::Perturbed {
                seed: self.common.seed,
            },
            (None, false) => FieldChoice::Zero,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
    Csv,
}

enum CliError {
    Model(ModelError),
    Input(String),
    Io(std::io::Error),
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Model(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Model(ModelError::Padic(PadicError::PrecisionExhausted { .. })) => 3,
            CliError::Model(ModelError::EnumerationCap { .. }) => 4,
            CliError::Io(_) => 1,
            _ => 2,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Model(e) => e.to_string(),
            CliError::Input(s) => s.clone(),
            CliError::Io(e) => format!("cannot write output: {e}"),
        }
    }
}

/// A rendered command result.
struct Report {
    json: Value,
    table: String,
    csv: Option<String>,
}

impl Report {
    fn new<T: Serialize>(value: &T, table: String) -> Self {
        Self {
            json: serde_json::to_value(value).expect("reports serialize"),
            table,
            csv: None,
        }
    }

    fn render(&self, format: Format) -> String {
        match format {
            Format::Table => self.table.clone(),
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json).expect("valid json");
                s.push('\n');
                s
            }
            Format::Csv => self.csv.clone().unwrap_or_else(|| flatten_csv(&self.json)),
        }
    }
}

/// `path,value` rows for reports without a natural tabular shape.
fn flatten_csv(v: &Value) -> String {
    fn walk(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
        match v {
            Value::Object(m) => {
                for (k, x) in m {
                    let key = if prefix.is_empty() {
                        k.clone()
                    } else {
                        format!("{prefix}.{k}")
                    };
                    walk(&key, x, rows);
                }
            }
            Value::Array(a) if a.iter().all(|x| !x.is_object() && !x.is_array()) => {
                let joined: Vec<String> = a.iter().map(scalar).collect();
                rows.push((prefix.to_string(), joined.join(" ")));
            }
            Value::Array(a) => {
                for (i, x) in a.iter().enumerate() {
                    walk(&format!("{prefix}.{i}"), x, rows);
                }
            }
            x => rows.push((prefix.to_string(), scalar(x))),
        }
    }
    fn scalar(v: &Value) -> String {
        match v {
            Value::Null => String::new(),
            Value::String(s) => s.clone(),
            x => x.to_string(),
        }
    }
    let mut rows = Vec::new();
    walk("", v, &mut rows);
    let mut out = String::from("key,value\n");
    for (k, v) in rows {
        let v = if v.contains(',') || v.contains('"') {
            format!("\"{}\"", v.replace('"', "\"\""))
        } else {
            v
        };
        let _ = writeln!(out, "{k},{v}");
    }
    out
}

fn params(c: &Common) -> Result<ModelParams, CliError> {
    let j = match &c.j {
        Some(j) => j.clone(),
        None => c.p.pow(exp_threshold(c.p) as u32).to_string(),
    };
    Ok(ModelParams::parse(c.p, c.q, c.k, &j, c.precision)?)
}

fn norm(n: &PadicNorm, p: u64) -> String {
    n.render(p)
}

fn run_classify(c: &Common) -> Result<Report, CliError> {
    let m = params(c)?;
    let v = classify(&m)?;
    let p = m.p();
    let mut t = String::new();
    let _ = writeln!(t, "params      {m}");
    let _ = writeln!(t, "outcome     {}", v.outcome);
    let _ = writeln!(t, "basis       {}", v.basis.join(", "));
    for (i, r) in v.witnesses.roots.iter().enumerate() {
        let _ = writeln!(
            t,
            "root {}      z = {}  |z-1| = {}  residual <= {}",
            i + 1,
            r.z.to_digit_string(),
            norm(&r.distance_to_one, p),
            norm(&r.residual, p)
        );
    }
    if !v.witnesses.contraction.is_empty() {
        let trace: Vec<String> = v.witnesses.contraction.iter().map(|n| norm(n, p)).collect();
        let _ = writeln!(t, "contraction {}", trace.join(" "));
    }
    if let Some(b) = v.witnesses.boundedness {
        let _ = writeln!(t, "boundedness {b}");
    }
    for f in &v.witnesses.findings {
        let _ = writeln!(t, "finding     {f}");
    }
    Ok(Report::new(&v, t))
}

#[derive(Serialize)]
struct RootsReport {
    params: ModelParams,
    status: String,
    solution: Option<padic_potts::potts::TiSolution>,
    discriminant: Option<padic_potts::potts::DiscriminantReport>,
    norm_case: padic_potts::potts::NormReport,
    /// Residues of admissible solutions mod `p^depth` when no closed form exists.
    residues: Option<Vec<String>>,
    residue_depth: Option<u32>,
}

fn run_roots(c: &Common) -> Result<Report, CliError> {
    let m = params(c)?;
    let p = m.p();
    let norm_case = norm_case_analysis(&m);
    let clash = norm_case.solvability != Solvability::PossiblySolvable;
    let (solution, discriminant, residues, depth) = if m.k() <= 2 {
        let sol = solve_ti(&m)?;
        let disc = (m.k() == 2).then(|| discriminant_analysis(&m));
        (Some(sol), disc, None, None)
    } else {
        let depth = (1..=8)
            .rev()
            .find(|&d| p.saturating_pow(d) <= 1 << 16)
            .unwrap_or(1);
        let found = search_ti_roots_mod(&m, depth)?;
        (
            None,
            None,
            Some(found.iter().map(|r| r.to_string()).collect::<Vec<_>>()),
            Some(depth),
        )
    };
    let status = match &solution {
        Some(s) if s.admissible_count() > 0 => {
            format!("{} admissible root(s)", s.admissible_count())
        }
        Some(s) => match &s.obstruction {
            Some(o) if clash => {
                format!("no solution: {}; discriminant: {o}", norm_case.explanation)
            }
            Some(o) => format!("no solution: discriminant {o}"),
            None if clash => format!("no solution: {}", norm_case.explanation),
            None => "no solution: roots exist but are not admissible".to_string(),
        },
        None => format!(
            "{} admissible residue(s) mod {p}^{}",
            residues.as_ref().map_or(0, Vec::len),
            depth.unwrap_or(0)
        ),
    };
    let mut t = String::new();
    let _ = writeln!(t, "params  {m}");
    let _ = writeln!(t, "status  {status}");
    let _ = writeln!(
        t,
        "norms   |A| {:?}, |B| {:?}: {}",
        norm_case.a_class, norm_case.b_class, norm_case.explanation
    );
    if let Some(s) = &solution {
        for (i, r) in s.roots.iter().enumerate() {
            let _ = writeln!(
                t,
                "root {}  z = {}  |z-1| = {}  residual <= {}",
                i + 1,
                r.z.to_digit_string(),
                norm(&r.distance_to_one, p),
                norm(&r.residual, p)
            );
            if let Some(h) = &r.h {
                let _ = writeln!(t, "        h = {}", h.to_digit_string());
            }
        }
        for r in &s.inadmissible {
            let _ = writeln!(
                t,
                "inadmissible  z = {}  |z-1| = {}",
                r.z.to_digit_string(),
                norm(&r.distance_to_one, p)
            );
        }
    }
    if let Some(d) = &discriminant {
        let _ = writeln!(t, "discriminant  D = {}", d.discriminant.to_digit_string());
        let digit = |x: Option<u64>| x.map_or("?".to_string(), |d| d.to_string());
        let _ = writeln!(
            t,
            "  valuation {}  a0={} a1={} a2={}",
            d.gamma.map_or("inf".to_string(), |g| g.to_string()),
            digit(d.a0),
            digit(d.a1),
            digit(d.a2)
        );
        let _ = writeln!(
            t,
            "  even valuation: {}",
            d.gamma.is_some_and(|g| g % 2 == 0)
        );
        match &d.obstruction {
            None => {
                let _ = writeln!(t, "  square root: exists");
            }
            Some(o) => {
                let _ = writeln!(t, "  square root: none ({o})");
            }
        }
        if let Some(agrees) = d.agrees {
            let _ = writeln!(t, "  rule: {} (agrees: {agrees})", d.rule);
        }
    }
    if let Some(r) = &residues {
        let _ = writeln!(
            t,
            "residues mod {p}^{}: {}",
            depth.unwrap_or(0),
            r.join(" ")
        );
    }
    let report = RootsReport {
        params: m,
        status,
        solution,
        discriminant,
        norm_case,
        residues,
        residue_depth: depth,
    };
    Ok(Report::new(&report, t))
}

fn run_verify_compat(f: &FieldCommand) -> Result<Report, CliError> {
    let c = &f.common;
    let m = params(c)?;
    let choice = f.choice();
    let r = verify_compatibility(&m, c.n, choice, c.cap)?;
    let p = m.p();
    let status = match r.status {
        CompatStatus::Compatible => "compatible",
        CompatStatus::Incompatible => "incompatible",
        CompatStatus::Inconclusive => "inconclusive",
    };
    let mut t = String::new();
    let _ = writeln!(
        t,
        "{status}, max deviation {} at precision {p}^-{}",
        norm(&r.max_deviation.unwrap_or(PadicNorm::Zero), p),
        r.precision_digits
    );
    let _ = writeln!(
        t,
        "{} configurations, {}/{} marginal classes agree",
        r.configs, r.agreeing_classes, r.marginal_classes
    );
    #[derive(Serialize)]
    struct Out<'a> {
        params: &'a ModelParams,
        n: u32,
        field: FieldChoice,
        #[serde(flatten)]
        report: &'a padic_potts::gibbs::CompatReport,
    }
    let out = Out {
        params: &m,
        n: c.n,
        field: choice,
        report: &r,
    };
    Ok(Report::new(&out, t))
}

fn run_measure_table(f: &FieldCommand) -> Result<Report, CliError> {
    let c = &f.common;
    let m = params(c)?;
    let volume = build_volume(m.k(), c.n, m.q(), c.cap)?;
    let h = resolve_field(f.choice(), &m)?;
    let fields = BoundaryFieldAssignment::constant(&volume, &h, SpinAction::Reduced);
    let table = partition_and_measures(&volume, &fields, &m, c.cap)?;
    let p = m.p();
    let mut t = String::new();
    let _ = writeln!(t, "params  {m}  n={}", c.n);
    let _ = writeln!(t, "Z       {}", table.partition.to_digit_string());
    let _ = writeln!(t, "max |mu| {}", norm(&table.max_measure_norm(), p));
    t.push_str(&table.to_csv());
    let mut report = Report::new(&table, t);
    report.csv = Some(table.to_csv());
    Ok(report)
}

fn run_bounded(f: &FieldCommand) -> Result<Report, CliError> {
    let c = &f.common;
    let m = params(c)?;
    let h = resolve_field(f.choice(), &m)?;
    let r = boundedness_verdict(&m, &h, c.n, c.cap)?;
    let p = m.p();
    let max = r
        .volumes
        .iter()
        .map(|v| v.max_measure_norm)
        .max()
        .unwrap_or(PadicNorm::one());
    let mut t = String::new();
    let relation = if r.verdict == padic_potts::classify::Boundedness::Bounded {
        "="
    } else {
        ">="
    };
    let _ = writeln!(t, "{}, max |mu| {relation} {}", r.verdict, norm(&max, p));
    for v in &r.volumes {
        let _ = writeln!(
            t,
            "  n={} configs={} max |mu| = {}",
            v.n,
            v.configs,
            norm(&v.max_measure_norm, p)
        );
    }
    for n in &r.skipped {
        let _ = writeln!(t, "  n={n} skipped (above cap)");
    }
    let path: Vec<String> = r.path_norms.iter().map(|n| norm(n, p)).collect();
    let _ = writeln!(t, "  path norms {}", path.join(" "));
    let _ = writeln!(t, "  evidence agrees: {}", r.evidence_agrees);
    #[derive(Serialize)]
    struct Out<'a> {
        params: &'a ModelParams,
        field: FieldChoice,
        #[serde(flatten)]
        report: &'a padic_potts::classify::BoundednessReport,
    }
    let out = Out {
        params: &m,
        field: f.choice(),
        report: &r,
    };
    Ok(Report::new(&out, t))
}

fn run_contract(c: &Common, iters: usize) -> Result<Report, CliError> {
    let m = params(c)?;
    let p = m.p();
    let mut rng = rng_from_seed(c.seed);
    let h0 = random_field(&mut rng, p, m.q(), exp_threshold(p), m.working_precision());
    let trace = contraction_trace(&m, &h0, iters)?;
    let mut t = String::new();
    let _ = writeln!(t, "params {m}  seed={}", c.seed);
    for (i, n) in trace.norms.iter().enumerate() {
        let _ = writeln!(t, "step {i:>3}  |h| = {}", norm(n, p));
    }
    #[derive(Serialize)]
    struct Out<'a> {
        params: &'a ModelParams,
        seed: u64,
        iterations: usize,
        #[serde(flatten)]
        trace: &'a padic_potts::potts::ContractionTrace,
    }
    let out = Out {
        params: &m,
        seed: c.seed,
        iterations: iters,
        trace: &trace,
    };
    Ok(Report::new(&out, t))
}

fn run_cross_check(c: &Common) -> Result<Report, CliError> {
    let m = params(c)?;
    let r = cross_check(&m, c.cap)?;
    let mut t = String::new();
    let _ = writeln!(t, "params    {m}");
    let _ = writeln!(
        t,
        "stated    {}",
        r.stated.map_or("no claim".to_string(), |s| s.to_string())
    );
    let _ = writeln!(t, "computed  {}", r.computed);
    let _ = writeln!(t, "consistent {}", r.consistent);
    for d in &r.discrepancies {
        let _ = writeln!(t, "  discrepancy: {d}");
    }
    Ok(Report::new(&r, t))
}

fn common(cmd: &Command) -> &Common {
    match cmd {
        Command::Classify(c) | Command::Roots(c) | Command::CrossCheck(c) => c,
        Command::VerifyCompat(f) | Command::MeasureTable(f) | Command::Bounded(f) => &f.common,
        Command::Contract { common, .. } => common,
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::Input(format!(
            "{THREADS_ENV} must be a positive integer, got {raw:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Input(format!("cannot configure thread pool: {e}")))
}

fn run(cli: &Cli) -> Result<(), CliError> {
    configure_threads()?;
    let report = match &cli.command {
        Command::Classify(c) => run_classify(c)?,
        Command::Roots(c) => run_roots(c)?,
        Command::VerifyCompat(f) => run_verify_compat(f)?,
        Command::MeasureTable(f) => run_measure_table(f)?,
        Command::Bounded(f) => run_bounded(f)?,
        Command::Contract { common, iters } => run_contract(common, *iters)?,
        Command::CrossCheck(c) => run_cross_check(c)?,
    };
    let c = common(&cli.command);
    let text = report.render(c.format);
    match &c.out {
        Some(path) => std::fs::write(path, text).map_err(CliError::Io),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
