//! Command-line dispatch: one thin binary, `--command NAME`, JSON in, JSON
//! or CSV out. Every emitted rational is canonical `num/den`; decimal columns
//! are derived display only. `--jobs` sizes the worker pool and never changes
//! an output byte: work is split per sample and reassembled in input order.
//!
//! Exit codes: 0 success, 1 usage or input errors, 2 an exactly checked
//! guarantee failed on the inputs, 3 the requested accuracy exceeds the
//! configured resolution or cell cap.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constructions::{
    certify_conjugator, periodic_rigidify, refine_tower, rokhlin_tower, sample_corpus,
    ConjugatorCertificate, RokhlinTower,
};
use crate::dynamics::{SkewProduct, TranslationSkew};
use crate::error::{Error, Result};
use crate::padic::{Limits, PAdicSet};
use crate::rational::Rational;
use crate::relative::{
    category_predicates, half_fiber_set, scan_mixing, scan_rigidity, DefectReport,
};
use crate::stepfn::StepFunctionZ;

/// Exact experiments on measure-preserving skew products over p-adic bases.
#[derive(Debug, Parser)]
#[command(name = "skewlab", version)]
pub struct Cli {
    /// Experiment to run.
    #[arg(long, value_enum)]
    pub command: Command,

    /// Input JSON path (defect-scan, build-conjugator, rigidify).
    #[arg(long)]
    pub input: Option<PathBuf>,

    /// Largest time n for defect scans.
    #[arg(long, default_value_t = 16)]
    pub n_max: u64,

    /// Largest return time k for category sweeps.
    #[arg(long, default_value_t = 8)]
    pub k_max: u64,

    /// Rank bound: corpus ranks for sweeps, reference rank for certificates.
    #[arg(long, default_value_t = 3)]
    pub rank: u32,

    /// Accuracy target, written `num/den`.
    #[arg(long)]
    pub eps: Option<Rational>,

    /// Seed for the deterministic sample corpus.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Corpus size for sweeps.
    #[arg(long, default_value_t = 50)]
    pub samples: usize,

    /// Worker threads; parallelism never changes output bytes.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..=1024))]
    pub jobs: u64,

    /// Output path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Report format. Certificate commands are JSON only.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Append derived decimal columns (20 significant digits).
    #[arg(long)]
    pub decimal: bool,
}

#[derive(Debug, Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Relative mixing and rigidity defects of one skew product, n = 1..n-max.
    DefectScan,
    /// Category predicates over a seeded corpus, asserting their exclusion.
    CategorySweep,
    /// Tower-based fiberwise conjugator with a certified weak-distance bound.
    BuildConjugator,
    /// Nearest periodic rigidification Q with verified order.
    Rigidify,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::DefectScan => "defect-scan",
            Command::CategorySweep => "category-sweep",
            Command::BuildConjugator => "build-conjugator",
            Command::Rigidify => "rigidify",
        }
    }
}

#[derive(Debug, Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Parses argv and runs one command; returns the process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Maps library errors onto the exit-code contract.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Falsified(_) => 2,
        Error::CapExceeded { .. } | Error::Resolution { .. } | Error::TowerTooTall { .. } => 3,
        _ => 1,
    }
}

fn execute(cli: &Cli) -> Result<()> {
    match cli.command {
        Command::DefectScan => defect_scan(cli),
        Command::CategorySweep => category_sweep(cli),
        Command::BuildConjugator => build_conjugator(cli),
        Command::Rigidify => rigidify(cli),
    }
}

fn require_input(cli: &Cli) -> Result<&Path> {
    cli.input
        .as_deref()
        .ok_or_else(|| Error::Parse(format!("--command {} requires --input", cli.command.name())))
}

fn require_eps(cli: &Cli) -> Result<&Rational> {
    cli.eps
        .as_ref()
        .ok_or_else(|| Error::Parse(format!("--command {} requires --eps", cli.command.name())))
}

fn require_json_format(cli: &Cli) -> Result<()> {
    if cli.format == Format::Csv {
        return Err(Error::Parse(format!(
            "--command {} emits a certificate; csv is not available",
            cli.command.name()
        )));
    }
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn to_json_text<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Parse(format!("serialize: {e}")))?;
    text.push('\n');
    Ok(text)
}

fn emit(out: Option<&Path>, content: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn thread_pool(jobs: u64) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs as usize)
        .build()
        .map_err(|e| Error::Parse(format!("thread pool: {e}")))
}

/// Observable for a defect scan: a full step-function grid, or a rectangle
/// indicator given by base and fiber cell indices at one rank.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ObservableSpec {
    Step(StepFunctionZ),
    Rect {
        rank: u32,
        base: Vec<u64>,
        fiber: Vec<u64>,
    },
}

fn resolve_observable(spec: Option<ObservableSpec>, p: u32) -> Result<StepFunctionZ> {
    match spec {
        None => half_fiber_set(p),
        Some(ObservableSpec::Step(f)) => {
            if f.p() != p {
                return Err(Error::BaseMismatch {
                    left: f.p(),
                    right: p,
                });
            }
            Ok(f)
        }
        Some(ObservableSpec::Rect { rank, base, fiber }) => {
            let base = PAdicSet::new(p, rank, base)?;
            let fiber = PAdicSet::new(p, rank, fiber)?;
            StepFunctionZ::rect_indicator(&base, &fiber)
        }
    }
}

#[derive(Debug, Deserialize)]
struct ScanInput {
    skew: SkewProduct,
    f: Option<ObservableSpec>,
    g: Option<ObservableSpec>,
}

#[derive(Debug, Serialize)]
struct EntryOut {
    n: u64,
    defect_sq: Rational,
    #[serde(skip_serializing_if = "Option::is_none")]
    defect_dec: Option<String>,
}

#[derive(Debug, Serialize)]
struct ReportOut {
    kind: String,
    entries: Vec<EntryOut>,
}

#[derive(Debug, Serialize)]
struct ScanOut {
    mixing: ReportOut,
    rigidity: ReportOut,
}

fn report_out(report: &DefectReport, decimal: bool) -> ReportOut {
    ReportOut {
        kind: report.kind.clone(),
        entries: report
            .entries
            .iter()
            .map(|e| EntryOut {
                n: e.n,
                defect_sq: e.defect_sq.clone(),
                defect_dec: decimal.then(|| e.defect_sq.to_decimal(20)),
            })
            .collect(),
    }
}

fn defect_scan(cli: &Cli) -> Result<()> {
    let input: ScanInput = read_json(require_input(cli)?)?;
    let t = input.skew;
    let f = resolve_observable(input.f, t.p())?;
    let g = resolve_observable(input.g, t.p())?;
    let mixing = scan_mixing(&t, &f, &g, cli.n_max)?;
    let rigidity = scan_rigidity(&t, &f, &g, cli.n_max)?;
    match cli.format {
        Format::Json => {
            let out = ScanOut {
                mixing: report_out(&mixing, cli.decimal),
                rigidity: report_out(&rigidity, cli.decimal),
            };
            emit(cli.out.as_deref(), &to_json_text(&out)?)
        }
        Format::Csv => match cli.out.as_deref() {
            Some(path) => {
                let stem = path.display();
                emit(
                    Some(&PathBuf::from(format!("{stem}.mixing.csv"))),
                    &mixing.to_csv(cli.decimal),
                )?;
                emit(
                    Some(&PathBuf::from(format!("{stem}.rigidity.csv"))),
                    &rigidity.to_csv(cli.decimal),
                )
            }
            None => emit(
                None,
                &format!(
                    "# mixing\n{}# rigidity\n{}",
                    mixing.to_csv(cli.decimal),
                    rigidity.to_csv(cli.decimal)
                ),
            ),
        },
    }
}

#[derive(Debug, Serialize)]
struct SweepRow {
    sample: usize,
    k: u64,
    #[serde(rename = "in_P")]
    in_p: bool,
    #[serde(rename = "in_M")]
    in_m: bool,
    #[serde(rename = "mu_TkA_capA")]
    mu: Rational,
    #[serde(skip_serializing_if = "Option::is_none")]
    mu_dec: Option<String>,
}

#[derive(Debug, Serialize)]
struct SweepSummary {
    samples: usize,
    rows: usize,
    #[serde(rename = "in_P_rows")]
    in_p_rows: usize,
    #[serde(rename = "in_M_rows")]
    in_m_rows: usize,
}

#[derive(Debug, Serialize)]
struct SweepOut {
    rows: Vec<SweepRow>,
    summary: SweepSummary,
}

fn category_sweep(cli: &Cli) -> Result<()> {
    let corpus = sample_corpus(2, cli.rank, cli.samples, cli.seed)?;
    let pool = thread_pool(cli.jobs)?;
    let per_sample: Vec<Vec<crate::relative::CategoryReport>> = pool.install(|| {
        corpus
            .par_iter()
            .map(|t| {
                (1..=cli.k_max)
                    .map(|k| category_predicates(t, k))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let mut rows = Vec::with_capacity(corpus.len() * cli.k_max as usize);
    for (sample, (t, reports)) in corpus.iter().zip(per_sample.iter()).enumerate() {
        for (k, report) in (1..=cli.k_max).zip(reports.iter()) {
            if report.in_p && report.in_m {
                let witness = serde_json::to_string(t)
                    .map_err(|e| Error::Parse(format!("serialize: {e}")))?;
                return Err(Error::falsified(format!(
                    "category exclusion violated at sample {sample}, k = {k}: {witness}"
                )));
            }
            rows.push(SweepRow {
                sample,
                k,
                in_p: report.in_p,
                in_m: report.in_m,
                mu: report.mu.clone(),
                mu_dec: cli.decimal.then(|| report.mu.to_decimal(20)),
            });
        }
    }
    let summary = SweepSummary {
        samples: corpus.len(),
        rows: rows.len(),
        in_p_rows: rows.iter().filter(|r| r.in_p).count(),
        in_m_rows: rows.iter().filter(|r| r.in_m).count(),
    };

    match cli.format {
        Format::Json => emit(
            cli.out.as_deref(),
            &to_json_text(&SweepOut { rows, summary })?,
        ),
        Format::Csv => {
            let mut csv = String::from(if cli.decimal {
                "sample,k,in_P,in_M,mu_TkA_capA,mu_dec\n"
            } else {
                "sample,k,in_P,in_M,mu_TkA_capA\n"
            });
            for r in &rows {
                csv.push_str(&format!(
                    "{},{},{},{},{}",
                    r.sample, r.k, r.in_p, r.in_m, r.mu
                ));
                if let Some(dec) = &r.mu_dec {
                    csv.push(',');
                    csv.push_str(dec);
                }
                csv.push('\n');
            }
            emit(cli.out.as_deref(), &csv)
        }
    }
}

#[derive(Debug, Deserialize)]
struct ConjugatorInput {
    target: SkewProduct,
    hat: SkewProduct,
    height: Option<u64>,
}

#[derive(Debug, Serialize)]
struct ConjugatorOut {
    s: SkewProduct,
    certificate: ConjugatorCertificate,
    tower: RokhlinTower,
}

/// Smallest tower height whose a-priori bound residual + 1/n beats eps.
fn pick_height(p: u32, cells: u64, eps: &Rational) -> Result<u64> {
    for n in 1..=cells {
        let residual = Rational::new((cells % n) as i64, cells as i64)?;
        let bound = &residual + &Rational::new(1, n as i64)?;
        if &bound < eps {
            return Ok(n);
        }
    }
    // Even the full cycle (residual 0, bound 1/cells) misses eps; report the
    // base rank at which one cell is small enough.
    let inv_p = Rational::new(1, p as i64)?;
    let mut required_rank = 0u32;
    let mut cell = Rational::one();
    while !(&cell < eps) && required_rank < 128 {
        cell = &cell * &inv_p;
        required_rank += 1;
    }
    let max_rank = {
        let mut r = 0u32;
        let mut c = 1u64;
        while c < cells {
            c *= p as u64;
            r += 1;
        }
        r
    };
    Err(Error::Resolution {
        required_rank,
        max_rank,
    })
}

fn build_conjugator(cli: &Cli) -> Result<()> {
    require_json_format(cli)?;
    let input: ConjugatorInput = read_json(require_input(cli)?)?;
    let eps = require_eps(cli)?;
    let target = input.target;
    let hat = input.hat;

    let height = match input.height {
        Some(h) => h,
        None => pick_height(target.p(), target.base().cells(), eps)?,
    };
    let tower = rokhlin_tower(target.base(), height)?;
    let rank = target.base().rank().max(hat.base().rank());
    let normalized = target.normalize(rank, target.fiber_rank())?;
    let rt = refine_tower(&tower, normalized.assignment(), rank)?;
    let (s, certificate) = certify_conjugator(&target, &hat, &rt, cli.rank)?;
    if !(&certificate.weak_distance < eps) {
        return Err(Error::falsified(format!(
            "conjugator weak distance {} is not below eps {}",
            certificate.weak_distance, eps
        )));
    }
    emit(
        cli.out.as_deref(),
        &to_json_text(&ConjugatorOut {
            s,
            certificate,
            tower,
        })?,
    )
}

#[derive(Debug, Serialize)]
struct RigidifyCertOut {
    weak_distance: Rational,
    m: u32,
    order: u64,
    order_verified: bool,
}

#[derive(Debug, Serialize)]
struct RigidifyOut {
    q: SkewProduct,
    certificate: RigidifyCertOut,
}

fn rigidify(cli: &Cli) -> Result<()> {
    require_json_format(cli)?;
    let s: TranslationSkew = read_json(require_input(cli)?)?;
    let eps = require_eps(cli)?;
    let run = periodic_rigidify(&s, eps, cli.rank, Limits::default())?;
    emit(
        cli.out.as_deref(),
        &to_json_text(&RigidifyOut {
            q: run.q,
            certificate: RigidifyCertOut {
                weak_distance: run.weak_distance,
                m: run.m,
                order: run.order,
                order_verified: run.order_verified,
            },
        })?,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(args).unwrap()
    }

    #[test]
    fn flags_parse_with_defaults() {
        let cli = parse(&["skewlab", "--command", "defect-scan", "--input", "in.json"]);
        assert_eq!(cli.command, Command::DefectScan);
        assert_eq!(cli.n_max, 16);
        assert_eq!(cli.k_max, 8);
        assert_eq!(cli.rank, 3);
        assert_eq!(cli.jobs, 1);
        assert_eq!(cli.format, Format::Json);
        assert!(!cli.decimal);
        assert!(cli.eps.is_none());
    }

    #[test]
    fn eps_parses_as_exact_rational() {
        let cli = parse(&["skewlab", "--command", "rigidify", "--eps", "1/4"]);
        assert_eq!(cli.eps.unwrap(), Rational::new(1, 4).unwrap());
        let bad = Cli::try_parse_from(["skewlab", "--command", "rigidify", "--eps", "0.25"]);
        assert!(bad.is_err());
    }

    #[test]
    fn unknown_command_is_rejected() {
        assert!(Cli::try_parse_from(["skewlab", "--command", "frobnicate"]).is_err());
    }

    #[test]
    fn exit_codes_follow_error_class() {
        assert_eq!(exit_code(&Error::Parse("x".into())), 1);
        assert_eq!(exit_code(&Error::domain("x")), 1);
        assert_eq!(exit_code(&Error::falsified("x")), 2);
        assert_eq!(
            exit_code(&Error::Resolution {
                required_rank: 9,
                max_rank: 6
            }),
            3
        );
        assert_eq!(
            exit_code(&Error::TowerTooTall {
                height: 9,
                cycle: 4
            }),
            3
        );
        assert_eq!(
            exit_code(&Error::CapExceeded {
                p: 2,
                rank: 40,
                cells: 1 << 40,
                max_cells: 1 << 20
            }),
            3
        );
    }

    #[test]
    fn height_search_prefers_small_towers() {
        // 16 cells: n = 8 gives residual 0 and bound 1/8 < 1/4; nothing
        // smaller does, since residual + 1/n >= 1/4 + 1/5 for n = 5..7.
        let eps = Rational::new(1, 4).unwrap();
        assert_eq!(pick_height(2, 16, &eps).unwrap(), 8);
        // Same cells, eps = 1/10: only the full cycle bound 1/16 clears it.
        let eps = Rational::new(1, 10).unwrap();
        assert_eq!(pick_height(2, 16, &eps).unwrap(), 16);
        // eps = 1/100 cannot be met with 16 cells.
        let eps = Rational::new(1, 100).unwrap();
        match pick_height(2, 16, &eps) {
            Err(Error::Resolution {
                required_rank,
                max_rank,
            }) => {
                assert_eq!(required_rank, 7);
                assert_eq!(max_rank, 4);
            }
            other => panic!("expected resolution error, got {other:?}"),
        }
    }
}
