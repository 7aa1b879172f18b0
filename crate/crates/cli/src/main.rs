use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use twrc::channel::{parse_spec, TwrcSpec};
use twrc::gf::FiniteField;
use twrc::lincode::{lemma_tests_with, simulate, CodeError, Dither, SimConfig};
use twrc::regions::{EvalConfig, Strategy};
use twrc::report::{self, CompareReport, SweepParam};
use twrc::{Error, Result};

#[derive(Parser)]
#[command(name = "twrc", version, about = "Achievable rates for two-way relay channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one strategy (or all) on a channel.
    Evaluate(EvalArgs),
    /// Evaluate and compare strategies on a channel.
    Compare(EvalArgs),
    /// Monte Carlo block error rate of the relay's functional decoder.
    Simulate(SimArgs),
    /// Compare strategies while sweeping one channel parameter.
    Sweep(SweepArgs),
    /// Ensemble tests of the dithered linear code construction.
    Lemmas(LemmaArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    FdfL,
    FdfS,
    Cdf,
    Cf,
    All,
}

impl StrategyArg {
    fn strategies(self) -> Vec<Strategy> {
        match self {
            StrategyArg::FdfL => vec![Strategy::FdfL],
            StrategyArg::FdfS => vec![Strategy::FdfS],
            StrategyArg::Cdf => vec![Strategy::Cdf],
            StrategyArg::Cf => vec![Strategy::Cf],
            StrategyArg::All => Strategy::ALL.to_vec(),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct SpecArgs {
    /// Channel spec file (JSON).
    #[arg(value_name = "SPEC")]
    spec_pos: Option<PathBuf>,
    #[arg(long, value_name = "PATH", conflicts_with = "spec_pos")]
    spec: Option<PathBuf>,
}

impl SpecArgs {
    fn load(&self) -> Result<TwrcSpec> {
        let path = self
            .spec
            .as_ref()
            .or(self.spec_pos.as_ref())
            .ok_or_else(|| Error::Channel(twrc::channel::ChannelError::Parse("no spec file given".into())))?;
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(parse_spec(&text)?)
    }
}

#[derive(Args)]
struct OutArgs {
    /// Output file; standard output if omitted.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct Knobs {
    #[arg(long, value_enum, default_value = "all")]
    strategy: StrategyArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Compress-forward random restarts.
    #[arg(long)]
    restarts: Option<usize>,
    /// Simplex grid resolution (cells per unit).
    #[arg(long)]
    grid: Option<usize>,
}

impl Knobs {
    fn config(&self) -> EvalConfig {
        let mut cfg = EvalConfig {
            seed: self.seed,
            ..EvalConfig::default()
        };
        if let Some(r) = self.restarts {
            cfg.cf.restarts = r;
        }
        if let Some(g) = self.grid {
            cfg.grid = g;
        }
        cfg
    }
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    spec: SpecArgs,
    #[command(flatten)]
    knobs: Knobs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct SimArgs {
    #[command(flatten)]
    spec: SpecArgs,
    #[arg(long, default_value_t = 2)]
    field_order: usize,
    /// Message lengths; paired with --n, a single value is reused.
    #[arg(long, value_delimiter = ',', required = true)]
    k: Vec<usize>,
    /// Block lengths.
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Run trials on one thread.
    #[arg(long)]
    serial: bool,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    spec: SpecArgs,
    #[command(flatten)]
    knobs: Knobs,
    /// rho, rho1, rho2 or uplink_mix.
    #[arg(long)]
    param: String,
    #[arg(long)]
    from: f64,
    #[arg(long)]
    to: f64,
    /// Number of intervals; values include both endpoints.
    #[arg(long)]
    steps: usize,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct LemmaArgs {
    #[arg(long, default_value_t = 2)]
    field_order: usize,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 3)]
    n: usize,
    #[arg(long, default_value_t = 100_000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Use zero dithers.
    #[arg(long)]
    no_dither: bool,
    #[command(flatten)]
    out: OutArgs,
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes `bytes` to the file or standard output.
fn emit(out: &Option<PathBuf>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => fs::write(p, bytes).map_err(io_err(p)),
        None => io::stdout().write_all(bytes).map_err(io_err(Path::new("<stdout>"))),
    }
}

fn json<T: serde::Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("output serializes");
    s.push('\n');
    s.into_bytes()
}

fn csv_bytes(write: impl FnOnce(&mut Vec<u8>) -> io::Result<()>) -> Vec<u8> {
    let mut buf = Vec::new();
    write(&mut buf).expect("writing to memory");
    buf
}

fn evaluate(args: &EvalArgs) -> Result<()> {
    let spec = args.spec.load()?;
    let report = CompareReport::run(&spec, &args.knobs.config(), &args.knobs.strategy.strategies())?;
    let bytes = match args.out.format.unwrap_or(Format::Json) {
        Format::Json => report.to_json().into_bytes(),
        Format::Csv => csv_bytes(|b| report::write_rate_csv(&report.rate_rows(spec.name()), b)),
    };
    emit(&args.out.out, &bytes)?;
    if report.results.iter().all(|e| e.error.is_some()) {
        let msg = report
            .results
            .iter()
            .filter_map(|e| e.error.as_deref())
            .collect::<Vec<_>>()
            .join("; ");
        return Err(Error::AllFailed(msg));
    }
    Ok(())
}

fn run_simulate(args: &SimArgs) -> Result<()> {
    let spec = args.spec.load()?;
    let points = args.k.len().max(args.n.len());
    let pick = |v: &[usize], i: usize| if v.len() == 1 { Some(v[0]) } else { v.get(i).copied() };
    let mut rows = Vec::with_capacity(points);
    for i in 0..points {
        let (Some(k), Some(n)) = (pick(&args.k, i), pick(&args.n, i)) else {
            return Err(CodeError::Dimension("--k and --n lists differ in length".into()).into());
        };
        let cfg = SimConfig {
            field_order: args.field_order,
            k,
            n,
            trials: args.trials,
            seed: args.seed,
            parallel: !args.serial,
        };
        rows.push(simulate(&spec, &cfg)?);
    }
    match args.out.format.unwrap_or(Format::Csv) {
        Format::Json => emit(&args.out.out, &json(&rows)),
        Format::Csv => match &args.out.out {
            // Append to an existing table.
            Some(p) => {
                let fresh = fs::metadata(p).map(|m| m.len() == 0).unwrap_or(true);
                let file = OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(p)
                    .map_err(io_err(p))?;
                report::write_sim_csv(&rows, fresh, file).map_err(io_err(p))
            }
            None => emit(&None, &csv_bytes(|b| report::write_sim_csv(&rows, true, b))),
        },
    }
}

fn run_sweep(args: &SweepArgs) -> Result<()> {
    let template = args.spec.load()?;
    let param: SweepParam = args.param.parse()?;
    let values = report::sweep_values(args.from, args.to, args.steps);
    let points = report::sweep(
        &template,
        &args.knobs.config(),
        &args.knobs.strategy.strategies(),
        param,
        &values,
    )?;
    let bytes = match args.out.format.unwrap_or(Format::Csv) {
        Format::Json => json(&points),
        Format::Csv => csv_bytes(|b| report::write_rate_csv(&report::sweep_rows(&points), b)),
    };
    emit(&args.out.out, &bytes)
}

fn run_lemmas(args: &LemmaArgs) -> Result<()> {
    let field = Arc::new(FiniteField::with_order(args.field_order)?);
    let dither = if args.no_dither {
        Dither::Disabled
    } else {
        Dither::Uniform
    };
    let r = lemma_tests_with(&field, args.k, args.n, args.trials, args.seed, dither)?;
    if args.out.format == Some(Format::Csv) {
        let rows = [
            ("uniform_codeword", &r.uniform_codeword),
            ("pairwise_independent", &r.pairwise_independent),
            ("cross_code_independent", &r.cross_code_independent),
        ];
        let mut text = String::from("test,statistic,dof,p_value,pass\n");
        for (name, t) in rows {
            text += &format!("{name},{},{},{},{}\n", t.statistic, t.dof, t.p_value, t.pass);
        }
        return emit(&args.out.out, text.as_bytes());
    }
    emit(&args.out.out, &json(&r))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Evaluate(a) | Command::Compare(a) => evaluate(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Lemmas(a) => run_lemmas(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let cat = e.category();
            eprintln!("error ({}): {e}", format!("{cat:?}").to_lowercase());
            ExitCode::from(cat.exit_code() as u8)
        }
    }
}
