//! Command-line front end: sample processes, measure them, derive and
//! reconstruct machines, verify the optimality checks, and export graphs.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage, 3 resource
//! guard, 4 data error, 5 non-determinizable horizon.

use std::fs;
use std::io::{Read, Write};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use emachine::derivation::derive_epsilon_machine;
use emachine::information::{block_entropy, excess_entropy_estimate};
use emachine::machine::EpsilonMachine;
use emachine::oracle;
use emachine::process::{Alphabet, ProcessSpec, Word};
use emachine::reconstruction::{count_windows, reconstruct};
use emachine::{Distribution, Error, JointTable};

#[derive(Parser)]
#[command(
    name = "emachine",
    version,
    about = "Causal-state models of stationary symbolic processes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DataFormat {
    /// Contiguous single-character symbols.
    Chars,
    /// Whitespace-separated symbol tokens.
    Tokens,
}

#[derive(Args)]
struct ProcessRef {
    /// Preset name (fair-coin, period2, golden-mean, even-process) or a
    /// process spec file.
    #[arg(long)]
    process: String,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a symbol sequence from a process.
    Generate {
        #[command(flatten)]
        process: ProcessRef,
        /// Number of symbols to draw.
        #[arg(short = 'n', long = "length", value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = DataFormat::Chars)]
        format: DataFormat,
        /// Output path, `-` for stdout.
        #[arg(long, default_value = "-")]
        output: String,
    },
    /// Block entropies, entropy rate differences, and excess entropy.
    Analyze {
        /// Preset name or spec file (exact analysis).
        #[arg(long, conflicts_with = "data")]
        process: Option<String>,
        /// Data file or `-` for stdin (plug-in estimates).
        #[arg(long)]
        data: Option<String>,
        #[arg(long, value_enum, default_value_t = DataFormat::Chars)]
        format: DataFormat,
        #[arg(long = "l-max", default_value_t = 6)]
        l_max: usize,
    },
    /// Derive the machine of an exactly-specified process.
    Derive {
        #[command(flatten)]
        process: ProcessRef,
        #[arg(short = 'K')]
        k: usize,
        #[arg(short = 'L')]
        l: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Machine output path, `-` for stdout.
        #[arg(long, default_value = "-")]
        output: String,
    },
    /// Reconstruct a machine from raw data.
    Reconstruct {
        /// Data file or `-` for stdin.
        #[arg(long, default_value = "-")]
        data: String,
        #[arg(long, value_enum, default_value_t = DataFormat::Chars)]
        format: DataFormat,
        #[arg(short = 'K', default_value_t = 3)]
        k: usize,
        #[arg(short = 'L', default_value_t = 3)]
        l: usize,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long = "min-count", default_value_t = 10)]
        min_count: u64,
        /// Machine output path, `-` for stdout.
        #[arg(long, default_value = "-")]
        output: String,
    },
    /// Exhaustively verify the optimality checks at one horizon.
    Verify {
        #[command(flatten)]
        process: ProcessRef,
        #[arg(short = 'K')]
        k: usize,
        #[arg(short = 'L')]
        l: usize,
    },
    /// Render a serialized machine as a DOT graph.
    Export {
        /// Machine file or `-` for stdin.
        #[arg(long)]
        machine: String,
        /// DOT output path, `-` for stdout.
        #[arg(long)]
        dot: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::BlockTooLarge { .. } | Error::TooManyHistories { .. } => 3,
            Error::NonDeterministicAtHorizon { .. } | Error::DeterminizationDiverged { .. } => 5,
            _ => 4,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::new(4, e.to_string())
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Generate {
            process,
            n,
            seed,
            format,
            output,
        } => {
            let spec = load_process(&process.process)?;
            let word = spec.sample(n as usize, seed);
            let rendered = render_word(spec.alphabet(), &word, format);
            write_output(&output, &rendered)?;
            let tokens: Vec<&str> = spec.alphabet().tokens().collect();
            eprintln!("alphabet: {}", tokens.join(" "));
            eprintln!("length: {n}");
            eprintln!("seed: {seed}");
            Ok(())
        }
        Command::Analyze {
            process,
            data,
            format,
            l_max,
        } => match (process, data) {
            (Some(name), None) => analyze_process(&name, l_max),
            (None, Some(path)) => analyze_data(&path, format, l_max),
            _ => Err(Failure::new(
                2,
                "analyze needs exactly one of --process or --data",
            )),
        },
        Command::Derive {
            process,
            k,
            l,
            tol,
            output,
        } => {
            let spec = load_process(&process.process)?;
            let machine = derive_epsilon_machine(&spec, k, l, tol)?;
            write_output(&output, &machine.to_text())?;
            eprintln!("states: {}", machine.state_count());
            eprintln!("recurrent states: {}", machine.recurrent_states().len());
            eprintln!(
                "statistical complexity: {:.6}",
                machine.statistical_complexity()
            );
            eprintln!(
                "transition entropy: {:.6}",
                machine.state_transition_entropy()
            );
            eprintln!(
                "excess entropy E({l}): {:.6}",
                excess_entropy_estimate(&spec, l)?
            );
            Ok(())
        }
        Command::Reconstruct {
            data,
            format,
            k,
            l,
            alpha,
            min_count,
            output,
        } => {
            let text = read_input(&data)?;
            let (alphabet, word) = parse_data(&text, format)?;
            let result = reconstruct(&word, &alphabet, k, l, alpha, min_count)?;
            write_output(&output, &result.machine.to_text())?;
            let d = &result.diagnostics;
            eprintln!("states: {}", result.machine.state_count());
            eprintln!(
                "statistical complexity: {:.6}",
                result.machine.statistical_complexity()
            );
            eprintln!("splits: {}", d.splits);
            eprintln!("dropped transient states: {}", d.dropped_states.len());
            for label in &d.dropped_states {
                eprintln!("  dropped {label}");
            }
            eprintln!("deferred low-count histories: {}", d.deferred_histories);
            let max_se = d
                .transition_standard_errors
                .iter()
                .cloned()
                .fold(0.0f64, f64::max);
            eprintln!("max transition standard error: {max_se:.6}");
            Ok(())
        }
        Command::Verify { process, k, l } => {
            let spec = load_process(&process.process)?;
            let report = oracle::verify_all(&spec, k, l)?;
            print!("{}", report.render(spec.alphabet()));
            if report.all_hold() {
                Ok(())
            } else {
                Err(Failure::new(1, "verification checks failed"))
            }
        }
        Command::Export { machine, dot } => {
            let text = read_input(&machine)?;
            let machine = EpsilonMachine::from_text(&text)?;
            write_output(&dot, &machine.to_dot())?;
            Ok(())
        }
    }
}

fn load_process(reference: &str) -> Result<ProcessSpec, Failure> {
    if let Some(spec) = ProcessSpec::preset(reference) {
        return Ok(spec);
    }
    let text = fs::read_to_string(reference).map_err(|e| {
        Failure::new(
            4,
            format!("{reference:?} is neither a preset nor a readable spec file: {e}"),
        )
    })?;
    Ok(ProcessSpec::from_text(&text)?)
}

fn read_input(path: &str) -> Result<String, Failure> {
    if path == "-" {
        let mut buf = String::new();
        std::io::stdin().read_to_string(&mut buf)?;
        Ok(buf)
    } else {
        Ok(fs::read_to_string(path)?)
    }
}

fn write_output(path: &str, contents: &str) -> Result<(), Failure> {
    if path == "-" {
        std::io::stdout().write_all(contents.as_bytes())?;
        Ok(())
    } else {
        fs::write(path, contents)?;
        Ok(())
    }
}

fn render_word(alphabet: &Alphabet, word: &Word, format: DataFormat) -> String {
    let tokens: Vec<&str> = word
        .symbols()
        .iter()
        .map(|&s| alphabet.token(s).unwrap_or("?"))
        .collect();
    let mut out = match format {
        DataFormat::Chars => tokens.concat(),
        DataFormat::Tokens => tokens.join(" "),
    };
    out.push('\n');
    out
}

/// Infer an alphabet from the distinct symbols of a data file (sorted), then
/// parse the sequence against it.
fn parse_data(text: &str, format: DataFormat) -> Result<(Alphabet, Word), Failure> {
    let mut tokens: Vec<String> = match format {
        DataFormat::Chars => text
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| c.to_string())
            .collect(),
        DataFormat::Tokens => text.split_whitespace().map(str::to_string).collect(),
    };
    tokens.sort();
    tokens.dedup();
    if tokens.is_empty() {
        return Err(Failure::new(4, "data contains no symbols"));
    }
    let alphabet = Alphabet::new(tokens)?;
    let word = match format {
        DataFormat::Chars => alphabet.parse_chars(text)?,
        DataFormat::Tokens => alphabet.parse_tokens(text)?,
    };
    Ok((alphabet, word))
}

fn analyze_process(reference: &str, l_max: usize) -> Result<(), Failure> {
    let spec = load_process(reference)?;
    let tokens: Vec<&str> = spec.alphabet().tokens().collect();
    println!("process: {reference}");
    println!("alphabet: {}", tokens.join(" "));
    let mut h = vec![0.0];
    let mut e = vec![0.0];
    for l in 1..=l_max {
        h.push(block_entropy(&spec, l)?);
        e.push(excess_entropy_estimate(&spec, l)?);
    }
    print_entropy_table(&h, &e, l_max);
    Ok(())
}

fn analyze_data(path: &str, format: DataFormat, l_max: usize) -> Result<(), Failure> {
    let text = read_input(path)?;
    let (alphabet, word) = parse_data(&text, format)?;
    let tokens: Vec<&str> = alphabet.tokens().collect();
    println!("data: {path} ({} symbols)", word.len());
    println!("alphabet: {}", tokens.join(" "));
    let mut h = vec![0.0];
    let mut e = vec![0.0];
    for l in 1..=l_max {
        // Plug-in block entropy over length-l windows.
        let blocks = count_windows(&word, 0, l)?;
        let futures = blocks
            .future_counts(&Word::empty())
            .expect("empty history collects every window");
        h.push(Distribution::from_counts(futures)?.entropy());
        // Plug-in E(l) from (past, future) window pairs.
        let pairs = count_windows(&word, l, l)?;
        let total = pairs.total_windows() as f64;
        let mut weights = std::collections::BTreeMap::new();
        for past in pairs.histories() {
            for (future, &c) in pairs.future_counts(past).unwrap() {
                weights.insert((past.clone(), future.clone()), c as f64 / total);
            }
        }
        e.push(JointTable::new(weights)?.mutual_information());
    }
    print_entropy_table(&h, &e, l_max);
    Ok(())
}

fn print_entropy_table(h: &[f64], e: &[f64], l_max: usize) {
    println!("L  H(L)      h(L)      E(L)      dE(L)");
    for l in 1..=l_max {
        println!(
            "{l}  {}  {}  {}  {}",
            fmt6(h[l]),
            fmt6(h[l] - h[l - 1]),
            fmt6(e[l]),
            fmt6(e[l] - e[l - 1]),
        );
    }
}

/// Six decimals with negative zero normalized away.
fn fmt6(x: f64) -> String {
    let s = format!("{x:.6}");
    if s == "-0.000000" {
        "0.000000".into()
    } else {
        s
    }
}
