//! Command layer of the `schoolchoice` binary. [`run_command`] parses an
//! argument vector, runs one subcommand and returns the exit code with the
//! rendered report, so tests can drive it without a process.

mod commands;
mod report;
mod strategy;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use schoolchoice::format::parse_instance;
use schoolchoice::Instance;

pub use report::Report;

/// Exit code for a check that found a counterexample.
pub const EXIT_CHECK_FAILED: i32 = 1;
/// Exit code for bad usage, unreadable input and library errors.
pub const EXIT_ERROR: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "schoolchoice", version, about = "School-choice matching mechanisms and analyzers")]
pub struct Cli {
    /// Output layout.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    JsonLike,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run one mechanism and report the matching.
    Solve(SolveArgs),
    /// Step table of deferred acceptance.
    Trace {
        /// Tie-break seed for weak instances.
        #[arg(long, default_value_t = 0)]
        tiebreak: u64,
        file: PathBuf,
    },
    /// List a set of matchings with their preference indices.
    Enumerate {
        #[arg(long, value_enum)]
        what: EnumerateWhat,
        file: PathBuf,
    },
    /// Evaluate a given matching.
    Analyze {
        /// File with one `student: school` line per student.
        #[arg(long)]
        matching: PathBuf,
        file: PathBuf,
    },
    /// Digraph of seat envy under the deferred-acceptance outcome.
    Graph {
        /// Drop students on no cycle and no path between cycles.
        #[arg(long)]
        pruned: bool,
        file: PathBuf,
    },
    /// Incentive property checks.
    Strategy(StrategyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MechanismName {
    Da,
    Ttc,
    Eadam,
    Tadam,
    Cim,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[arg(long, value_enum)]
    pub mechanism: MechanismName,
    /// Consenting students for eadam: `all` or a comma list such as `i1,i3`.
    #[arg(long, default_value = "all")]
    pub consent: String,
    /// Clique choice for tadam: `canonical` or `seed:N`.
    #[arg(long, default_value = "canonical")]
    pub policy: String,
    /// Tie-break seed for weak instances; 0 keeps declaration order.
    #[arg(long, default_value_t = 0)]
    pub tiebreak: u64,
    /// Coalition file for cim (`loop a -> b -> a`, `accomplices c`).
    #[arg(long)]
    pub coalition: Option<PathBuf>,
    pub file: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EnumerateWhat {
    Stable,
    EfficientDominations,
    Tadam,
    Coalitions,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CheckName {
    Anonymity,
    PositiveAssociation,
    SameClass,
    Dominance,
}

#[derive(Args, Debug)]
pub struct StrategyArgs {
    #[arg(long, value_enum)]
    pub check: CheckName,
    /// Mechanism under test (cim is not available here).
    #[arg(long, value_enum, default_value_t = MechanismName::Tadam)]
    pub mechanism: MechanismName,
    #[arg(long, default_value_t = 100)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random family such as `classes=2+2,students=4,capacity=1,focal=i1`.
    #[arg(long, conflicts_with = "file")]
    pub family: Option<String>,
    /// Quality class sizes for `same-class` on a file, e.g. `2+3`.
    #[arg(long)]
    pub classes: Option<String>,
    /// Misreport for `dominance`, e.g. `s2 > s1 > s3 > s4`.
    #[arg(long)]
    pub alt: Option<String>,
    /// Directory for counterexample fixtures.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(required_unless_present = "family")]
    pub file: Option<PathBuf>,
}

/// Result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// What a command produced: a report, and whether a check failed.
pub(crate) struct Done {
    pub report: Report,
    pub failed: bool,
}

impl From<Report> for Done {
    fn from(report: Report) -> Self {
        Done { report, failed: false }
    }
}

pub fn run_command<I, T>(argv: I) -> Output
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Output { code, stdout: text, stderr: String::new() }
            } else {
                Output { code, stdout: String::new(), stderr: text }
            };
        }
    };
    match dispatch(&cli.command) {
        Ok(done) => Output {
            code: if done.failed { EXIT_CHECK_FAILED } else { 0 },
            stdout: match cli.format {
                Format::Text => done.report.render_text(),
                Format::JsonLike => done.report.render_json(),
            },
            stderr: String::new(),
        },
        Err(msg) => Output {
            code: EXIT_ERROR,
            stdout: String::new(),
            stderr: format!("error: {msg}\n"),
        },
    }
}

fn dispatch(command: &Command) -> Result<Done, String> {
    match command {
        Command::Solve(args) => commands::solve(args).map(Done::from),
        Command::Trace { tiebreak, file } => commands::trace(&load(file)?, *tiebreak).map(Done::from),
        Command::Enumerate { what, file } => commands::enumerate(&load(file)?, *what).map(Done::from),
        Command::Analyze { matching, file } => commands::analyze(&load(file)?, matching).map(Done::from),
        Command::Graph { pruned, file } => commands::graph(&load(file)?, *pruned).map(Done::from),
        Command::Strategy(args) => strategy::run(args),
    }
}

pub(crate) fn read(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

pub(crate) fn load(path: &Path) -> Result<Instance, String> {
    parse_instance(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))
}
