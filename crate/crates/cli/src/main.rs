//! `dlstrata`: command-line driver for the verification suites.
//!
//! Every subcommand produces a [`Report`]; the exit code follows its overall
//! status (0 pass, 1 fail, 3 inconclusive only). Usage errors, including
//! parameter combinations rejected by the library, exit with 2.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use dlstrata::charts::{self, ChartError, ChartSpec};
use dlstrata::latcalc::{self, InclusionConfig, LatError, RandomInstanceConfig};
use dlstrata::report::{Check, CountRow, Report, Status};
use dlstrata::space::{SpaceError, SubspaceFile};
use dlstrata::strata::{self, StrataConfig, StrataCtx, StrataError};
use dlstrata::weyl;

/// Environment variable overriding the default enumeration budget.
const BUDGET_ENV: &str = "DLSTRATA_BUDGET";

#[derive(Parser, Debug)]
#[command(name = "dlstrata", version, about = "Exhaustive finite-field verification of strata decompositions")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, global = true, default_value_t = Format::Json)]
    format: Format,
    /// Seed for randomized suites.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Enumeration budget (overrides the DLSTRATA_BUDGET environment variable).
    #[arg(long, global = true)]
    budget: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Csv,
    Md,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Point-set decompositions over finite fields.
    #[command(subcommand)]
    Strata(StrataCmd),
    /// Weyl-group words, minimality and Deligne–Lusztig dimensions.
    #[command(subcommand)]
    Weyl(WeylCmd),
    /// Affine chart point counts and reduced-locus dimensions.
    #[command(subcommand)]
    Charts(ChartsCmd),
    /// Truncated hermitian lattice calculus.
    #[command(subcommand)]
    Latcalc(LatcalcCmd),
}

#[derive(Subcommand, Debug)]
enum StrataCmd {
    /// Enumerates all members and verifies the decomposition.
    Verify(CaseArgs),
    /// Enumerates all members and tallies them by stratum label.
    Count(CaseArgs),
    /// Classifies one subspace read from a JSON file.
    Classify {
        #[command(flatten)]
        case: CaseArgs,
        /// Subspace file `{space, k, rows}`.
        #[arg(long)]
        input: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CaseName {
    Z,
    Y,
    Zy,
}

#[derive(Args, Debug)]
struct CaseArgs {
    /// Symplectic (`z`), orthogonal (`y`) or linear (`zy`) case.
    #[arg(long, value_enum)]
    case: CaseName,
    /// Residue field size.
    #[arg(long, default_value_t = 3)]
    q: u32,
    /// Level: points over `GF(q^k)`.
    #[arg(long, default_value_t = 1)]
    k: u32,
    /// Rank of the hermitian space (case `y`).
    #[arg(long)]
    n: Option<usize>,
    /// Type of the level lattice.
    #[arg(long)]
    h: Option<usize>,
    /// Type of the vertex lattice (cases `z` and `y`).
    #[arg(long)]
    t: Option<usize>,
    /// Larger vertex type (case `zy`).
    #[arg(long)]
    t1: Option<usize>,
    /// Smaller vertex type (case `zy`).
    #[arg(long)]
    t2: Option<usize>,
    /// Split (rather than non-split) even orthogonal form.
    #[arg(long)]
    split: bool,
}

#[derive(Subcommand, Debug)]
enum WeylCmd {
    /// Lengths, reducedness, minimality, diagrams and dimension tables.
    Audit {
        /// Largest rank `D` of the audited Weyl groups.
        #[arg(long, default_value_t = 6)]
        max_d: usize,
        /// Residue field size used for the empirical `w'` growth check.
        #[arg(long, default_value_t = 3)]
        q: u32,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FamilyName {
    Z,
    Y,
    Zy,
    PiModular,
}

#[derive(Subcommand, Debug)]
enum ChartsCmd {
    /// Brute-force chart counts against closed forms and predicates.
    ///
    /// Without `--family` the whole sweep (charts with at most
    /// `--max-entries` entries, `q` in {3, 5}) is run.
    Reconcile {
        /// Check a single chart of this family instead of the sweep.
        #[arg(long, value_enum)]
        family: Option<FamilyName>,
        /// Rank of the hermitian space for a single chart.
        #[arg(long)]
        n: Option<usize>,
        /// Level type for a single chart.
        #[arg(long, default_value_t = 0)]
        h: usize,
        /// Vertex type `t₁` for a single chart.
        #[arg(long, default_value_t = 0)]
        t1: usize,
        /// Vertex type `t₂` for a single chart.
        #[arg(long, default_value_t = 0)]
        t2: usize,
        /// Residue field size for a single chart.
        #[arg(long, default_value_t = 3)]
        q: u32,
        /// Sweep: largest chart size in matrix entries.
        #[arg(long, default_value_t = 10)]
        max_entries: usize,
        /// Sweep: largest rank `n`.
        #[arg(long, default_value_t = 12)]
        n_max: usize,
    },
    /// Dimension of the reduced locus; without `--n`, the full table check.
    Rzdim {
        /// Rank of the hermitian space.
        #[arg(long)]
        n: Option<usize>,
        /// Level type.
        #[arg(long, default_value_t = 0)]
        h: usize,
        /// Sign `±1` of the discriminant (matters for even `n`).
        #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
        eps: i8,
        /// Largest `n` for the full table check.
        #[arg(long, default_value_t = 12)]
        n_max: usize,
    },
}

#[derive(Subcommand, Debug)]
enum LatcalcCmd {
    /// Exhaustive rank-2 instances plus seeded random dichotomy trials.
    Dichotomy {
        /// Number of random instances to verify.
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        /// Largest rank of random instances.
        #[arg(long, default_value_t = 4)]
        max_n: usize,
        /// Skip the exhaustive rank-2 part.
        #[arg(long)]
        random_only: bool,
    },
    /// Point-set inclusions between enumerated vertex lattices.
    Inclusions {
        /// Rank of the hermitian space.
        #[arg(long, default_value_t = 4)]
        n: usize,
        /// Residue characteristic.
        #[arg(long, default_value_t = 3)]
        p: u32,
        /// Residue field degree.
        #[arg(long, default_value_t = 1)]
        s: u32,
    },
}

/// Why a command produced no report.
enum Failure {
    /// Invalid parameters or input: exit code 2.
    Usage(String),
    /// A budget or guard tripped: reported as inconclusive.
    Inconclusive(String),
}

impl From<StrataError> for Failure {
    fn from(e: StrataError) -> Self {
        match e {
            StrataError::Budget { .. } => Failure::Inconclusive(e.to_string()),
            e => Failure::Usage(e.to_string()),
        }
    }
}

impl From<ChartError> for Failure {
    fn from(e: ChartError) -> Self {
        match e {
            ChartError::Budget { .. } => Failure::Inconclusive(e.to_string()),
            e => Failure::Usage(e.to_string()),
        }
    }
}

impl From<LatError> for Failure {
    fn from(e: LatError) -> Self {
        match e {
            LatError::Budget(_) | LatError::Guard(_) => Failure::Inconclusive(e.to_string()),
            e => Failure::Usage(e.to_string()),
        }
    }
}

impl From<SpaceError> for Failure {
    fn from(e: SpaceError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<weyl::WeylError> for Failure {
    fn from(e: weyl::WeylError) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn budget_from_env(flag: Option<u64>, default: u64) -> Result<u64, Failure> {
    let budget = match flag {
        Some(b) => b,
        None => match std::env::var(BUDGET_ENV) {
            Ok(v) => v
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|b| b.is_finite() && *b >= 1.0)
                .map(|b| b as u64)
                .ok_or_else(|| Failure::Usage(format!("{BUDGET_ENV}={v:?} is not a positive number")))?,
            Err(_) => default,
        },
    };
    if budget == 0 {
        return Err(Failure::Usage("budget must be positive".into()));
    }
    Ok(budget)
}

fn need(v: Option<usize>, name: &str, case: &str) -> Result<usize, Failure> {
    v.ok_or_else(|| Failure::Usage(format!("case {case} requires --{name}")))
}

impl CaseArgs {
    fn config(&self) -> Result<StrataConfig, Failure> {
        let (q, k) = (self.q, self.k);
        let cfg = match self.case {
            CaseName::Z => StrataConfig::z(need(self.t, "t", "z")?, need(self.h, "h", "z")?, q, k),
            CaseName::Y => StrataConfig::y(
                need(self.n, "n", "y")?,
                need(self.h, "h", "y")?,
                need(self.t, "t", "y")?,
                self.split,
                q,
                k,
            ),
            CaseName::Zy => {
                StrataConfig::zy(need(self.t1, "t1", "zy")?, need(self.h, "h", "zy")?, need(self.t2, "t2", "zy")?, q, k)
            }
        };
        cfg.shape()?;
        Ok(cfg)
    }
}

fn strata_count(cfg: StrataConfig, budget: u64) -> Result<Report, Failure> {
    let ctx = StrataCtx::new(cfg)?;
    let tally = ctx.tally(budget)?;
    let counts = tally.labels.iter().map(|(l, &c)| CountRow { label: l.to_string(), count: c }).collect();
    let clean = tally.errors == 0 && tally.duplicates == 0;
    let check = Check::from_bool("enumeration", clean, || json!(tally.witnesses)).with_data(json!({
        "total": tally.total,
        "errors": tally.errors,
        "duplicates": tally.duplicates,
    }));
    Ok(Report::new("strata count", json!(cfg), counts, vec![check]))
}

fn strata_classify(cfg: StrataConfig, input: &PathBuf) -> Result<Report, Failure> {
    let text = std::fs::read_to_string(input).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", input.display())))?;
    let file: SubspaceFile =
        serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("malformed subspace file: {e}")))?;
    let ctx = StrataCtx::new(cfg)?;
    let u = file.load_into(ctx.space())?;
    let config = json!({"strata": cfg, "input": file});
    let check = match ctx.classify(&u) {
        Ok(c) => {
            let mut data = json!({
                "label": c.label.to_string(),
                "flag_dimensions": c.flag.iter().map(|f| f.dim()).collect::<Vec<_>>(),
                "member_index": c.member_index,
            });
            if let Ok(kr) = ctx.kr_class(&u) {
                data["kr_class"] = json!(kr);
            }
            Check::pass("membership").with_data(data)
        }
        Err(StrataError::NotMember | StrataError::DimensionMismatch { .. }) => {
            Check::from_bool("membership", false, || json!({"rows": file.rows}))
        }
        Err(e) => return Err(e.into()),
    };
    Ok(Report::new("strata classify", config, Vec::new(), vec![check]))
}

fn weyl_audit(max_d: usize, q: u32, budget: u64) -> Result<Report, Failure> {
    let rows = weyl::audit_rows(max_d)?;
    let mut checks = weyl::audit_checks(&rows);
    match strata::wprime_dimension_check(q, max_d, (2, 3), budget) {
        Ok(c) => checks.push(c),
        Err(StrataError::Budget { needed, budget }) => checks.push(
            Check::new("w'_rs dimension: dl_dimension = point-count growth", Status::Inconclusive)
                .with_data(json!({"needed": needed.to_string(), "budget": budget})),
        ),
        Err(e) => return Err(e.into()),
    }
    let counts = vec![CountRow { label: "words".into(), count: rows.len() as u64 }];
    Ok(Report::new("weyl audit", json!({"max_d": max_d, "q": q, "growth_levels": [2, 3]}), counts, checks))
}

#[allow(clippy::too_many_arguments)]
fn charts_reconcile(
    family: Option<FamilyName>,
    n: Option<usize>,
    h: usize,
    t1: usize,
    t2: usize,
    q: u32,
    max_entries: usize,
    n_max: usize,
    budget: u64,
) -> Result<Report, Failure> {
    let Some(family) = family else {
        return Ok(charts::sweep_report(max_entries, n_max, &[3, 5], budget)?);
    };
    let n = need(n, "n", "chart")?;
    let spec = match family {
        FamilyName::Z => ChartSpec::z(n, h, t1, q),
        FamilyName::Y => ChartSpec::y(n, h, t2, q),
        FamilyName::Zy => ChartSpec::zy(n, h, t1, t2, q),
        FamilyName::PiModular => ChartSpec::pi_modular(n, t2, q),
    };
    Ok(charts::reconcile(&spec, budget)?)
}

fn charts_rzdim(n: Option<usize>, h: usize, eps: i8, n_max: usize) -> Result<Report, Failure> {
    let Some(n) = n else {
        return Ok(charts::rz_reconcile(n_max)?);
    };
    let closed = charts::rz_dim(n, h, eps)?;
    let table = charts::rz_dim_from_table(n, h, eps)?;
    let check = Check::from_bool("rz_dim matches the vertex-type table", closed == table, || {
        json!({"closed_form": closed, "table": table})
    });
    let counts = vec![CountRow { label: "rz_dim".into(), count: closed as u64 }];
    Ok(Report::new("charts rzdim", json!({"n": n, "h": h, "eps": eps}), counts, vec![check]))
}

fn latcalc_dichotomy(trials: u64, max_n: usize, random_only: bool, seed: u64) -> Result<Report, Failure> {
    if max_n == 0 {
        return Err(Failure::Usage("--max-n must be at least 1".into()));
    }
    let cfg = RandomInstanceConfig { max_n, ..RandomInstanceConfig::default() };
    let random = latcalc::dichotomy_suite(trials, seed, &cfg, trials.saturating_mul(20).max(1));
    if random_only {
        return Ok(random);
    }
    let exhaustive = latcalc::exhaustive_rank2(&latcalc::EXHAUSTIVE_FIELDS, cfg.half_window)?;
    let prefixed = |prefix: &str, rows: Vec<CountRow>| {
        rows.into_iter().map(move |c| CountRow { label: format!("{prefix}: {}", c.label), count: c.count }).collect::<Vec<_>>()
    };
    let mut counts = prefixed("exhaustive", exhaustive.stable.counts);
    counts.extend(prefixed("random", random.stable.counts));
    let mut checks: Vec<Check> = exhaustive.stable.checks;
    checks.extend(random.stable.checks);
    let config = json!({"exhaustive": exhaustive.stable.config, "random": random.stable.config});
    Ok(Report::new("latcalc dichotomy", config, counts, checks))
}

fn run(cli: &Cli) -> Result<Report, Failure> {
    match &cli.command {
        Command::Strata(cmd) => {
            let budget = budget_from_env(cli.budget, strata::DEFAULT_BUDGET)?;
            match cmd {
                StrataCmd::Verify(a) => Ok(StrataCtx::new(a.config()?)?.verify_decomposition(budget)?),
                StrataCmd::Count(a) => strata_count(a.config()?, budget),
                StrataCmd::Classify { case, input } => strata_classify(case.config()?, input),
            }
        }
        Command::Weyl(WeylCmd::Audit { max_d, q }) => {
            weyl_audit(*max_d, *q, budget_from_env(cli.budget, strata::DEFAULT_BUDGET)?)
        }
        Command::Charts(ChartsCmd::Reconcile { family, n, h, t1, t2, q, max_entries, n_max }) => {
            let budget = budget_from_env(cli.budget, charts::DEFAULT_CHART_BUDGET)?;
            charts_reconcile(*family, *n, *h, *t1, *t2, *q, *max_entries, *n_max, budget)
        }
        Command::Charts(ChartsCmd::Rzdim { n, h, eps, n_max }) => charts_rzdim(*n, *h, *eps, *n_max),
        Command::Latcalc(LatcalcCmd::Dichotomy { trials, max_n, random_only }) => {
            latcalc_dichotomy(*trials, *max_n, *random_only, cli.seed)
        }
        Command::Latcalc(LatcalcCmd::Inclusions { n, p, s }) => {
            Ok(latcalc::inclusion_suite(&InclusionConfig::standard(*n, *p, *s))?)
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Strata(StrataCmd::Verify(_)) => "strata verify",
        Command::Strata(StrataCmd::Count(_)) => "strata count",
        Command::Strata(StrataCmd::Classify { .. }) => "strata classify",
        Command::Weyl(_) => "weyl audit",
        Command::Charts(ChartsCmd::Reconcile { .. }) => "charts reconcile",
        Command::Charts(ChartsCmd::Rzdim { .. }) => "charts rzdim",
        Command::Latcalc(LatcalcCmd::Dichotomy { .. }) => "latcalc dichotomy",
        Command::Latcalc(LatcalcCmd::Inclusions { .. }) => "latcalc inclusions",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let mut report = match run(&cli) {
        Ok(r) => r,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
        Err(Failure::Inconclusive(msg)) => Report::new(
            command_name(&cli.command),
            json!({"seed": cli.seed}),
            Vec::new(),
            vec![Check::new("budget", Status::Inconclusive).with_data(json!({"reason": msg}))],
        ),
    };
    report.wall_time_ms = Some(start.elapsed().as_millis() as u64);
    let out = match cli.format {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv(),
        Format::Md => report.to_markdown(),
    };
    println!("{}", out.trim_end());
    ExitCode::from(match report.status() {
        Status::Pass => 0,
        Status::Fail => 1,
        Status::Inconclusive => 3,
    })
}
