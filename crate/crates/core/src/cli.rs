//! Command-line front end.
//!
//! Exit codes: 0 when every certified check passed, 1 when a certified
//! check failed, 2 on precision or feasibility errors, 3 on usage errors.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use rug::Rational;

use crate::analysis::{self, AnalysisError, VerificationReport};
use crate::cantor::{self, BranchPolicy, Certificate, ConstructError, Construction, ConstructionConfig, TreeExport};
use crate::precision::{format_rational, parse_rational, BigReal, RInterval, Rounding, DEFAULT_MAX_DOUBLINGS};
use crate::sequences::{self, DensifiedPair, EpsilonSchedule, GapCheck, SequenceError, SequencePair, SequenceSpec};

/// Environment variable holding the default number of precision doublings.
pub const PRECISION_ENV: &str = "POWMOD_MAX_DOUBLINGS";

const SYNTHETIC_INTERVAL_DEPTH: usize = 14;

#[derive(Debug)]
enum CliError {
    Usage(String),
    Failed(String),
    Infeasible(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Infeasible(_) => 2,
            CliError::Usage(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Failed(m) | CliError::Infeasible(m) => m,
        }
    }
}

impl From<SequenceError> for CliError {
    fn from(e: SequenceError) -> Self {
        match e {
            SequenceError::UnknownDescriptor(_) | SequenceError::Parse { .. } | SequenceError::Io(_) | SequenceError::InvalidParameter(_) => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Infeasible(e.to_string()),
        }
    }
}

impl From<ConstructError> for CliError {
    fn from(e: ConstructError) -> Self {
        match e {
            ConstructError::InvalidConfig(_) | ConstructError::Format(_) => CliError::Usage(e.to_string()),
            ConstructError::VerificationFailed { .. } => CliError::Failed(e.to_string()),
            _ => CliError::Infeasible(e.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::InvalidInput(_) => CliError::Usage(e.to_string()),
            _ => CliError::Infeasible(e.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "powmod", version, about = "Construct and check reals whose powers approach targets modulo one")]
struct Cli {
    /// Flat `key = value` file; keys are long flag names. Flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Per-level detail on stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Densify a sequence and check the ratio bound.
    Densify(DensifyArgs),
    /// Descend to a certified α and write its certificate.
    Construct(ConstructArgs),
    /// Check ‖α^(q_n) − r_n‖ for an α or a certificate.
    Verify(VerifyArgs),
    /// Dimension lower bound from a tree export.
    Dimension(DimensionArgs),
    /// Star discrepancy of the fractional parts.
    Discrepancy(DiscrepancyArgs),
}

#[derive(Args, Debug, Clone)]
struct SeqArgs {
    /// nsq | lin | pow:K | affine:A:B | geom:B | file:PATH
    #[arg(long)]
    family: Option<String>,
    /// zero | const:K | file
    #[arg(long)]
    target: Option<String>,
    /// Densification parameter ε.
    #[arg(long)]
    densify: Option<String>,
    /// zero | const:K | copy-next
    #[arg(long)]
    fill: Option<String>,
    /// default | const:C | poly:C:K | list:V1,V2,…
    #[arg(long)]
    schedule: Option<String>,
    /// Accept prefixes whose gaps do not look divergent.
    #[arg(long)]
    lenient_gaps: bool,
}

impl SeqArgs {
    fn spec(&self, count: usize, gap_check: GapCheck) -> Result<SequenceSpec, CliError> {
        let family = self.family.as_deref().ok_or_else(|| CliError::Usage("--family is required".into()))?;
        let mut spec = SequenceSpec::new(family.parse()?, self.target.as_deref().unwrap_or("zero").parse()?, count);
        spec.densify = self.densify.as_deref().map(|e| rational("densify", e)).transpose()?;
        if let Some(f) = &self.fill {
            spec.fill = f.parse()?;
        }
        if let Some(s) = &self.schedule {
            spec.schedule = s.parse()?;
        }
        spec.gap_check = if self.lenient_gaps { GapCheck::Lenient } else { gap_check };
        Ok(spec)
    }
}

#[derive(Args, Debug)]
struct DensifyArgs {
    #[command(flatten)]
    seq: SeqArgs,
    /// Number of original terms.
    #[arg(long)]
    count: usize,
    /// ε; overrides --densify.
    #[arg(long)]
    eps: Option<String>,
    /// Output sequence file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ConstructArgs {
    #[command(flatten)]
    seq: SeqArgs,
    #[arg(long)]
    lambda: String,
    #[arg(long)]
    delta: String,
    #[arg(long)]
    eta: String,
    /// Deepest original index.
    #[arg(long)]
    depth: usize,
    /// leftmost | midmost | random
    #[arg(long)]
    branch: Option<String>,
    /// Seed for random branching; implies --branch random.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 100_000)]
    max_tree_nodes: usize,
    /// Base precision in bits (derived from the largest exponent otherwise).
    #[arg(long)]
    base_bits: Option<u32>,
    #[arg(long)]
    max_doublings: Option<u32>,
    /// Certificate output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also enumerate the tree and write an export here.
    #[arg(long)]
    tree: Option<PathBuf>,
    /// Certified digits printed for α.
    #[arg(long, default_value_t = 50)]
    digits: u32,
}

#[derive(Args, Debug)]
struct AlphaArgs {
    /// α as a decimal; enclosed at --alpha-bits.
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long, requires = "alpha_hi")]
    alpha_lo: Option<String>,
    #[arg(long, requires = "alpha_lo")]
    alpha_hi: Option<String>,
    #[arg(long, default_value_t = 256)]
    alpha_bits: u32,
    /// Certificate written by `construct`.
    #[arg(long)]
    certificate: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    alpha: AlphaArgs,
    #[command(flatten)]
    seq: SeqArgs,
    #[arg(long, default_value_t = 1)]
    from: usize,
    /// Last index checked (sequence length for --alpha input).
    #[arg(long)]
    to: Option<usize>,
    /// Report rows without thresholds.
    #[arg(long)]
    no_threshold: bool,
    #[arg(long)]
    max_doublings: Option<u32>,
    /// CSV report path.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Summary path.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DimensionArgs {
    /// Tree export written by `construct --tree`.
    #[arg(long)]
    tree: Option<PathBuf>,
    /// Built-in data instead of a file: middle-third:DEPTH
    #[arg(long)]
    synthetic: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    eta: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DiscrepancyArgs {
    #[command(flatten)]
    alpha: AlphaArgs,
    #[command(flatten)]
    seq: SeqArgs,
    #[arg(long, default_value_t = 1)]
    from: usize,
    #[arg(long)]
    to: Option<usize>,
    /// One value in [0, 1) per line instead of α and a sequence.
    #[arg(long)]
    points: Option<PathBuf>,
    #[arg(long)]
    max_doublings: Option<u32>,
}

/// Runs the tool on `argv` (including the program name) and returns the
/// exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let mut out = String::new();
    let result = parse(&argv).and_then(|cli| dispatch(cli, &mut out));
    print!("{out}");
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("powmod: {}", e.message());
            e.code()
        }
    }
}

fn parse(argv: &[OsString]) -> Result<Cli, CliError> {
    let command = Cli::command().args_override_self(true);
    let mut merged = argv.to_vec();
    if let Some(path) = config_path(argv) {
        // the subcommand is the first bare word not consumed by --config
        let mut skip = false;
        let position = argv
            .iter()
            .enumerate()
            .skip(1)
            .find(|(_, a)| {
                let a = a.to_string_lossy();
                let bare = !skip && !a.starts_with('-');
                skip = a == "--config";
                bare
            })
            .map(|(i, _)| i)
            .ok_or_else(|| CliError::Usage("missing subcommand".into()))?;
        let sub = argv[position].to_string_lossy();
        let sub_command = command
            .find_subcommand(sub.as_ref())
            .ok_or_else(|| CliError::Usage(format!("unknown subcommand {sub}")))?;
        let injected = config_args(&path, sub_command)?;
        // config values go first so explicit flags override them
        merged = argv[..=position].to_vec();
        merged.extend(injected.into_iter().map(OsString::from));
        merged.extend(argv[position + 1..].iter().cloned());
    }
    let matches = command.try_get_matches_from(merged).map_err(clap_error)?;
    Cli::from_arg_matches(&matches).map_err(clap_error)
}

fn config_path(argv: &[OsString]) -> Option<PathBuf> {
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        let a = a.to_string_lossy();
        if a == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(PathBuf::from(v));
        }
    }
    None
}

fn clap_error(e: clap::Error) -> CliError {
    use clap::error::ErrorKind;
    match e.kind() {
        ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
            print!("{e}");
            CliError::Usage(String::new())
        }
        _ => CliError::Usage(e.render().to_string().trim_end().to_string()),
    }
}

/// Reads `key = value` lines and turns them into `--key value` arguments.
fn config_args(path: &Path, sub: &clap::Command) -> Result<Vec<String>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let mut args = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |what: String| CliError::Usage(format!("{} line {}: {what}", path.display(), i + 1));
        let (key, value) = line.split_once('=').ok_or_else(|| bad("expected key = value".into()))?;
        let key = key.trim();
        let value = value.trim().trim_matches('"');
        let arg = sub
            .get_arguments()
            .find(|a| a.get_long() == Some(key))
            .ok_or_else(|| bad(format!("unknown key {key:?}")))?;
        if matches!(arg.get_action(), clap::ArgAction::SetTrue) {
            match value {
                "true" => args.push(format!("--{key}")),
                "false" => {}
                _ => return Err(bad(format!("{key} expects true or false"))),
            }
        } else {
            args.push(format!("--{key}"));
            args.push(value.to_string());
        }
    }
    Ok(args)
}

fn dispatch(cli: Cli, out: &mut String) -> Result<(), CliError> {
    match cli.command {
        Command::Densify(a) => densify_cmd(&a, out),
        Command::Construct(a) => construct_cmd(&a, cli.verbose, out),
        Command::Verify(a) => verify_cmd(&a, out),
        Command::Dimension(a) => dimension_cmd(&a, out),
        Command::Discrepancy(a) => discrepancy_cmd(&a, out),
    }
}

fn rational(name: &str, s: &str) -> Result<Rational, CliError> {
    parse_rational(s).map_err(|_| CliError::Usage(format!("--{name}: not a number: {s:?}")))
}

fn max_doublings(flag: Option<u32>) -> Result<u32, CliError> {
    if let Some(d) = flag {
        return Ok(d);
    }
    match std::env::var(PRECISION_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{PRECISION_ENV}: expected a non-negative integer, got {v:?}"))),
        Err(_) => Ok(DEFAULT_MAX_DOUBLINGS),
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn densify_cmd(a: &DensifyArgs, out: &mut String) -> Result<(), CliError> {
    let mut spec = a.seq.spec(a.count, GapCheck::Lenient)?;
    if let Some(e) = &a.eps {
        spec.densify = Some(rational("eps", e)?);
    }
    let eps = spec.densify.clone().ok_or_else(|| CliError::Usage("--eps is required".into()))?;
    let sp = spec.original()?;
    let dp = sequences::densify(&sp, &eps, &spec.fill)?;
    let header = vec![
        format!("family={} target={} count={}", spec.family, spec.target, spec.count),
        format!("eps={} fill={}", format_rational(&eps), spec.fill),
    ];
    match &a.out {
        Some(path) => sequences::write_sequence_file(path, dp.q(), dp.r(), &header)?,
        None => {
            for (q, r) in dp.q().iter().zip(dp.r()) {
                let _ = writeln!(out, "{}\t{}", format_rational(q), format_rational(r));
            }
        }
    }
    let ratio_ok = dp.ratio_bound_holds(&eps);
    let steps_ok = inserted_steps_exact(&sp, &dp, &eps);
    let origin_ok = dp.extract_original() == sp;
    let _ = writeln!(out, "# original_terms = {}", sp.len());
    let _ = writeln!(out, "# densified_terms = {}", dp.len());
    let _ = writeln!(out, "# ratio_bound = {}", ok(ratio_ok));
    let _ = writeln!(out, "# inserted_steps = {}", ok(steps_ok));
    let _ = writeln!(out, "# origin_map = {}", ok(origin_ok));
    if ratio_ok && steps_ok && origin_ok {
        Ok(())
    } else {
        Err(CliError::Failed("densification check failed".into()))
    }
}

fn ok(b: bool) -> &'static str {
    if b {
        "pass"
    } else {
        "FAIL"
    }
}

/// Every inserted run after original term `q_N` advances by exactly `ε q_N / 2`.
pub(crate) fn inserted_steps_exact(sp: &SequencePair, dp: &DensifiedPair, eps: &Rational) -> bool {
    let origin = dp.origin_map();
    origin.windows(2).enumerate().all(|(i, w)| {
        let step = Rational::from(eps * &sp.q()[i]) / 2;
        (w[0]..w[1] - 1).all(|j| Rational::from(&dp.q()[j + 1] - &dp.q()[j]) == step)
    })
}

/// Working-sequence position of original index `depth`.
fn working_depth(dp: &DensifiedPair, depth: usize) -> Result<usize, CliError> {
    dp.origin_map()
        .get(depth.wrapping_sub(1))
        .map(|&p| p + 1)
        .ok_or_else(|| CliError::Usage(format!("depth {depth} outside the sequence")))
}

fn construct_cmd(a: &ConstructArgs, verbose: bool, out: &mut String) -> Result<(), CliError> {
    let spec = a.seq.spec(a.depth + 1, GapCheck::Strict)?;
    let (_, dp, es) = spec.build()?;
    let mut cfg = ConstructionConfig::new(rational("lambda", &a.lambda)?, rational("delta", &a.delta)?, rational("eta", &a.eta)?, 1);
    cfg.depth = working_depth(&dp, a.depth)?;
    cfg.branch = match (a.branch.as_deref(), a.seed) {
        (None, Some(seed)) | (Some("random"), Some(seed)) => BranchPolicy::SeededRandom(seed),
        (Some("random"), None) => BranchPolicy::SeededRandom(0),
        (Some(b), _) => b.parse()?,
        (None, None) => BranchPolicy::Leftmost,
    };
    cfg.max_tree_nodes = a.max_tree_nodes;
    cfg.base_bits = a.base_bits;
    cfg.max_doublings = max_doublings(a.max_doublings)?;
    let construction = Construction::new(&cfg, &dp, &es)?;
    let mut cert = construction.descend()?;
    cert.sequence = Some(spec.clone());
    let alpha = cert.alpha_decimal(a.digits);
    if verbose {
        for l in &cert.levels {
            let d = l.dist.to_certified_decimal(6);
            eprintln!(
                "level {} q={} label={} dist={} eps={}",
                l.n,
                format_rational(&l.q),
                l.label,
                d.text,
                format_rational(&l.eps)
            );
        }
    }
    // without --out the certificate itself is the primary output
    let mut summary = String::new();
    let _ = writeln!(summary, "start_level = {}", cert.start_level);
    let _ = writeln!(summary, "depth = {}", cert.depth());
    let _ = writeln!(summary, "precision_bits = {}", cert.precision_bits());
    let _ = writeln!(summary, "alpha = {}", alpha.text);
    let _ = writeln!(summary, "alpha_digits = {}", alpha.digits);
    match &a.out {
        Some(path) => {
            write_file(path, &cert.to_toml(a.digits))?;
            let _ = writeln!(summary, "certificate = {}", path.display());
            out.push_str(&summary);
        }
        None => {
            out.push_str(&cert.to_toml(a.digits));
            eprint!("{summary}");
        }
    }
    if let Some(path) = &a.tree {
        let tree = construction.enumerate_tree()?;
        write_file(path, &cantor::write_tree_export(&tree, spec.densify.as_ref()))?;
        let line = format!("tree = {}\ntree_levels = {}\n", path.display(), tree.levels.len());
        if a.out.is_some() {
            out.push_str(&line);
        } else {
            eprint!("{line}");
        }
    }
    Ok(())
}

fn read_alpha(a: &AlphaArgs) -> Result<(RInterval, Option<Certificate>), CliError> {
    match (&a.certificate, &a.alpha, &a.alpha_lo, &a.alpha_hi) {
        (Some(path), None, None, None) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            let cert = Certificate::from_toml(&text)?;
            Ok((cert.alpha.clone(), Some(cert)))
        }
        (None, Some(x), None, None) => Ok((RInterval::parse_outward(x, x, a.alpha_bits).map_err(|e| CliError::Usage(e.to_string()))?, None)),
        (None, None, Some(lo), Some(hi)) => Ok((
            RInterval::parse_outward(lo, hi, a.alpha_bits).map_err(|e| CliError::Usage(e.to_string()))?,
            None,
        )),
        _ => Err(CliError::Usage("give exactly one of --alpha, --alpha-lo/--alpha-hi or --certificate".into())),
    }
}

fn verify_cmd(a: &VerifyArgs, out: &mut String) -> Result<(), CliError> {
    let doublings = max_doublings(a.max_doublings)?;
    let (alpha, cert) = read_alpha(&a.alpha)?;
    let mut reports: Vec<(&str, VerificationReport)> = Vec::new();
    match cert {
        Some(cert) => {
            let spec = match (&cert.sequence, &a.seq.family) {
                (_, Some(_)) => Some(a.seq.spec(0, GapCheck::Lenient)?),
                (Some(s), None) => Some(s.clone()),
                (None, None) => None,
            };
            match spec {
                Some(mut spec) => {
                    if a.seq.family.is_some() {
                        spec.count = cert.sequence.as_ref().map_or(cert.depth() + 1, |s| s.count);
                    }
                    let (sp, dp, es) = spec.build()?;
                    check_records(&cert, &dp, &es)?;
                    let from = cert.start_level;
                    let to = cert.depth();
                    let densified = analysis::verify(&alpha, dp.q(), dp.r(), Some(es.values()), from..=to, doublings)?;
                    let terms = analysis::inclusion_terms(sp.q(), sp.r(), &dp, &es, from, to);
                    let original = analysis::verify_terms(&alpha, &terms, doublings)?;
                    reports.push(("working", densified));
                    reports.push(("original", original));
                }
                None => reports.push(("working", cert.reverify(doublings)?)),
            }
        }
        None => {
            let to = a.to.ok_or_else(|| CliError::Usage("--to is required with --alpha".into()))?;
            let spec = a.seq.spec(to + 1, GapCheck::Lenient)?;
            let (_, dp, es) = spec.build()?;
            if a.from < 1 || a.from > to || to > dp.len() {
                return Err(CliError::Usage(format!("index range {}..={to} outside the sequence", a.from)));
            }
            let thresholds = (!a.no_threshold).then(|| es.values());
            reports.push(("working", analysis::verify(&alpha, dp.q(), dp.r(), thresholds, a.from..=to, doublings)?));
        }
    }
    let mut csv = String::new();
    let mut summary = String::new();
    let mut failed = Vec::new();
    for (name, report) in &reports {
        let _ = writeln!(csv, "# {name}");
        csv.push_str(&report.to_csv());
        let _ = writeln!(summary, "[{name}]");
        summary.push_str(&report.summary_text());
        if let Some(row) = report.first_failure() {
            failed.push(format!("{name} index {}", row.n));
        }
    }
    let d = alpha.to_certified_decimal(50);
    let _ = writeln!(out, "alpha = {}", d.text);
    let _ = writeln!(out, "alpha_digits = {}", d.digits);
    out.push_str(&summary);
    match &a.csv {
        Some(path) => write_file(path, &csv)?,
        None => out.push_str(&csv),
    }
    if let Some(path) = &a.summary {
        write_file(path, &summary)?;
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(format!("certified check failed at {}", failed.join(", "))))
    }
}

/// The certificate's recorded `(q, r, ε)` must match the regenerated sequence.
fn check_records(cert: &Certificate, dp: &DensifiedPair, es: &EpsilonSchedule) -> Result<(), CliError> {
    for l in &cert.levels {
        let matches = l.n >= 1 && l.n <= es.len() && *dp.q_at(l.n) == l.q && *dp.r_at(l.n) == l.r && *es.at(l.n) == l.eps;
        if !matches {
            return Err(CliError::Failed(format!("certificate record at level {} does not match the sequence", l.n)));
        }
    }
    Ok(())
}

fn dimension_cmd(a: &DimensionArgs, out: &mut String) -> Result<(), CliError> {
    let (export, levels) = match (&a.tree, &a.synthetic) {
        (Some(path), None) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            let export = cantor::read_tree_export(&text)?;
            let levels = export.dimension_levels();
            (export, levels)
        }
        (None, Some(s)) => match s.split_once(':') {
            Some(("middle-third", d)) => {
                let depth: usize = d.parse().map_err(|_| CliError::Usage(format!("bad depth in {s:?}")))?;
                // explicit intervals only where there are few enough of them
                let export = if depth <= SYNTHETIC_INTERVAL_DEPTH {
                    analysis::synthetic::middle_third_export(depth)
                } else {
                    TreeExport::default()
                };
                (export, analysis::synthetic::middle_third_levels(depth))
            }
            _ => return Err(CliError::Usage(format!("unknown synthetic data {s:?}"))),
        },
        _ => return Err(CliError::Usage("give exactly one of --tree or --synthetic".into())),
    };
    let param = |flag: &Option<String>, key: &str| -> Result<Option<Rational>, CliError> {
        match flag {
            Some(v) => rational(key, v).map(Some),
            None => Ok(export.config_rational(key)),
        }
    };
    let lambda = param(&a.lambda, "lambda")?;
    let delta = param(&a.delta, "delta")?;
    let eta = param(&a.eta, "eta")?;
    let eps = param(&a.eps, "eps")?;
    let upper = match (&lambda, &delta) {
        (Some(l), Some(d)) => Some(Rational::from(l + d)),
        _ => None,
    };
    let mut report = analysis::falconer_from_levels(&levels, upper.as_ref())?;
    if let (Some(l), Some(d), Some(e), Some(h)) = (&lambda, &delta, &eps, &eta) {
        report = report.with_closed_form(l, d, e, h)?;
    } else if let (Some(l), Some(d)) = (&lambda, &delta) {
        report.limit = Some(analysis::limit_bound(l, d, 128)?);
    }
    out.push_str(&report.summary_text());
    if let Some(line) = box_count_line(&export)? {
        out.push_str(&line);
    }
    match &a.csv {
        Some(path) => write_file(path, &report.to_csv())?,
        None => out.push_str(&report.to_csv()),
    }
    Ok(())
}

/// Box-counting slope over 64 log-spaced scales from half the extent down
/// to ten leaf widths, when those are three decades apart.
fn box_count_line(export: &TreeExport) -> Result<Option<String>, CliError> {
    let prec = 256;
    let Some(leaves) = export.leaves(prec) else { return Ok(None) };
    if leaves.len() < 2 {
        return Ok(None);
    }
    let lo = leaves.iter().map(|l| l.lo().clone()).reduce(BigReal::min).expect("non-empty");
    let hi = leaves.iter().map(|l| l.hi().clone()).reduce(BigReal::max).expect("non-empty");
    let extent = hi.sub(&lo, prec, Rounding::Nearest);
    let width = leaves.iter().map(|l| l.width(prec)).reduce(BigReal::min).expect("non-empty");
    let ratio = extent.div(&width, prec, Rounding::Nearest).to_f64();
    if ratio.is_nan() || ratio < 1e3 {
        return Ok(None);
    }
    // a dense grid averages out the staircase of self-similar sets
    let top = extent.to_f64().ln() - std::f64::consts::LN_2;
    let bottom = width.to_f64().ln() + std::f64::consts::LN_10;
    let k = 64;
    let scales: Vec<BigReal> = (0..k)
        .map(|i| {
            let t = top + (bottom - top) * f64::from(i) / f64::from(k - 1);
            BigReal::from_float(rug::Float::with_val(64, t).exp())
        })
        .collect();
    let est = analysis::box_count(&leaves, &scales)?;
    Ok(Some(format!("box_count_slope = {:.6}\nbox_count_residual = {:.6}\n", est.slope, est.residual)))
}

fn discrepancy_cmd(a: &DiscrepancyArgs, out: &mut String) -> Result<(), CliError> {
    let points = match &a.points {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(|l| l.parse::<f64>().map_err(|_| CliError::Usage(format!("not a number: {l:?}"))))
                .collect::<Result<Vec<_>, _>>()?
        }
        None => {
            let (alpha, cert) = read_alpha(&a.alpha)?;
            let spec = match (&cert, &a.seq.family) {
                (_, Some(_)) => a.seq.spec(a.to.unwrap_or(0) + 1, GapCheck::Lenient)?,
                (Some(c), None) => c
                    .sequence
                    .clone()
                    .ok_or_else(|| CliError::Usage("certificate has no sequence; pass --family".into()))?,
                (None, None) => return Err(CliError::Usage("--family is required".into())),
            };
            let (_, dp, _) = spec.build()?;
            let to = a.to.unwrap_or(dp.len()).min(dp.len());
            let report = analysis::verify(&alpha, dp.q(), dp.r(), None, a.from..=to, max_doublings(a.max_doublings)?)?;
            analysis::fractional_points(&report)
        }
    };
    let d = analysis::star_discrepancy(&points)?;
    let _ = writeln!(out, "points = {}", points.len());
    let _ = writeln!(out, "star_discrepancy = {d:.12}");
    Ok(())
}
