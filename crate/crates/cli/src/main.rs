//! `kpv`: run verification suites and expand model series.

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use kp_core::models::{
    eval_bt_remark, eval_ime_ext, eval_zn, eval_zn_ext, eval_zo2, eval_zo2_operator, BtRatio, Caps,
    ExtMode, Lambda, ModelKind, ModelResult,
};
use kp_core::ring::scalar::{int, Rational};
use kp_core::suites::{run_suite, Suite};

use crate::config::Settings;

#[derive(Parser, Debug)]
#[command(
    name = "kpv",
    version,
    about = "Exact verification of matrix-model identities"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a verification suite: appendix, lemma1, theorem2, theorem1, virasoro, section4, numeric or all.
    Verify {
        suite: String,
        #[command(flatten)]
        common: CommonArgs,
        /// Relative tolerance of the quadrature checks.
        #[arg(long)]
        tol: Option<f64>,
        /// Largest pairing count one pipeline may enumerate.
        #[arg(long)]
        pairing_budget: Option<u64>,
        /// Record per-check wall-clock times.
        #[arg(long)]
        timings: bool,
    },
    /// Expand one model and write its coefficient table.
    Expand {
        #[arg(value_enum)]
        model: Model,
        #[command(flatten)]
        common: CommonArgs,
        /// Use symbolic eigenvalues x_i = 1/lambda_i (M <= 2).
        #[arg(long)]
        symbolic: bool,
        /// Invert the determinant ratio of the rotated form.
        #[arg(long)]
        bt_inverted: bool,
    },
}

#[derive(Args, Debug, Default, Clone)]
struct CommonArgs {
    #[arg(long = "M")]
    m: Option<usize>,
    #[arg(long = "N")]
    n: Option<usize>,
    /// Comma-separated eigenvalues, each an integer or p/q.
    #[arg(long)]
    lambda: Option<String>,
    /// Epsilon cap (weight cap for the virasoro suite).
    #[arg(long)]
    depth: Option<i32>,
    #[arg(long)]
    s_cap: Option<i32>,
    #[arg(long)]
    sminus_cap: Option<i32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// key=value file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Model {
    Zn,
    Ime,
    Zo2,
    #[value(name = "zo2-operator")]
    Zo2Operator,
    Bt,
    Znext,
}

impl Model {
    fn kind(self) -> ModelKind {
        match self {
            Model::Zn => ModelKind::ZN,
            Model::Ime => ModelKind::IMe,
            Model::Zo2 => ModelKind::Zo2,
            Model::Zo2Operator => ModelKind::Zo2Operator,
            Model::Bt => ModelKind::BT,
            Model::Znext => ModelKind::ZNExt,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("kpv: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn settings(common: &CommonArgs) -> Result<Settings> {
    let mut s = match &common.config {
        Some(path) => config::read_file(path)?,
        None => Settings::default(),
    };
    s.override_with(common)?;
    Ok(s)
}

/// Returns whether the run passed.
fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Verify {
            suite,
            common,
            tol,
            pairing_budget,
            timings,
        } => {
            let suite = Suite::parse(&suite)?;
            let mut s = settings(&common)?;
            if let Some(t) = tol {
                s.tol = Some(t);
            }
            if let Some(b) = pairing_budget {
                s.pairing_budget = Some(b);
            }
            s.timings |= timings;
            let report = run_suite(suite, &s.suite_config())?;
            let text = match s.format.unwrap_or(Format::Json) {
                Format::Json => report.to_json_string(),
                Format::Csv => output::report_csv(&report)?,
            };
            output::emit(s.out.as_deref(), &text)?;
            for c in report.checks.iter().filter(|c| !c.passed()) {
                eprintln!("{}: {} ({})", c.status.as_str(), c.name, c.detail);
            }
            Ok(report.passed())
        }
        Command::Expand {
            model,
            common,
            symbolic,
            bt_inverted,
        } => {
            let s = settings(&common)?;
            let result = expand(model, &s, symbolic, bt_inverted)?;
            let text = match s.format.unwrap_or(Format::Json) {
                Format::Json => {
                    let mut t = serde_json::to_string_pretty(&result.to_json())?;
                    t.push('\n');
                    t
                }
                Format::Csv => output::model_csv(&result)?,
            };
            output::emit(s.out.as_deref(), &text)?;
            Ok(true)
        }
    }
}

fn expand(model: Model, s: &Settings, symbolic: bool, bt_inverted: bool) -> Result<ModelResult> {
    let lambda: Vec<Rational> = match (&s.lambda, s.m) {
        (Some(l), Some(m)) if l.len() != m => {
            bail!("--lambda has {} entries but --M is {m}", l.len())
        }
        (Some(l), _) => l.clone(),
        (None, m) => (1..=m.unwrap_or(1) as i64).map(int).collect(),
    };
    let m = lambda.len();
    let eps = s.depth.unwrap_or(3);
    let mut caps = Caps::new(eps).with_s(s.s_cap.unwrap_or(match model {
        Model::Bt => 3,
        _ => eps,
    }));
    if let Some(sm) = s.sminus_cap {
        caps = caps.with_sm(sm);
    }
    if bt_inverted {
        caps = caps.with_bt_ratio(BtRatio::Inverted);
    }
    let n = s.n.unwrap_or(1);
    let l = if symbolic {
        Lambda::Symbolic(m)
    } else {
        Lambda::Numeric(lambda.clone())
    };
    let r = match model.kind() {
        ModelKind::ZN => eval_zn(&l, n as u32, &caps),
        ModelKind::IMe => eval_ime_ext(&l, &caps),
        ModelKind::Zo2 => eval_zo2(&l, &caps),
        ModelKind::Zo2Operator => eval_zo2_operator(&l, &caps),
        ModelKind::BT => eval_bt_remark(&l, &caps),
        ModelKind::ZNExt => {
            if symbolic {
                bail!("znext is evaluated at numeric eigenvalues only");
            }
            eval_zn_ext(&lambda, n, &caps, ExtMode::Substituted)
        }
    };
    r.with_context(|| format!("expanding {}", model.kind()))
}
