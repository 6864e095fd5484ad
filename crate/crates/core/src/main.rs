use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use bb84_atmo::cli::{self, scenario, CliError, RunOverrides, Scenario, SweepParam, SweepSpec};
use bb84_atmo::protocol::Sampler;

#[derive(Parser)]
#[command(name = "bb84-atmo", version, about = "BB84 over an attenuating free-space channel")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and report QBER, loss and security verdict
    Run {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        run: RunFlags,
        #[arg(long, value_enum, default_value_t = Format::Human)]
        format: Format,
        /// Write the report here instead of standard output
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the atmosphere table with equivalent path lengths
    Table,
    /// Sweep one parameter and emit CSV plot data
    Sweep {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        run: RunFlags,
        /// transmittance, length_km, dark_rate_hz or mean_photons_per_window
        #[arg(long)]
        param: String,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long, default_value_t = 11)]
        steps: usize,
        /// Space points geometrically
        #[arg(long)]
        log: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List built-in scenarios
    Presets,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Input {
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Args)]
struct RunFlags {
    #[arg(long)]
    seed: Option<u64>,
    /// Windows per setting (scan mode) or in total (random mode)
    #[arg(long)]
    windows: Option<u64>,
    /// Number of independent random streams
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_enum)]
    sampler: Option<SamplerArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Human,
    Machine,
}

#[derive(Clone, Copy, ValueEnum)]
enum SamplerArg {
    PerWindow,
    Aggregated,
}

impl RunFlags {
    fn overrides(&self) -> RunOverrides {
        RunOverrides {
            seed: self.seed,
            windows: self.windows,
            workers: self.workers,
            sampler: self.sampler.map(|s| match s {
                SamplerArg::PerWindow => Sampler::PerWindow,
                SamplerArg::Aggregated => Sampler::Aggregated,
            }),
        }
    }
}

fn load(input: &Input) -> Result<Scenario, CliError> {
    match (&input.scenario, &input.preset) {
        (Some(path), _) => Ok(scenario::load(path, &scenario::user_profiles()?)?),
        (None, Some(name)) => cli::preset_scenario(name),
        (None, None) => Err(CliError::Validation("pass --scenario or --preset".into())),
    }
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Validation(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            input,
            run,
            format,
            out,
        } => {
            let report = cli::cmd_run(load(&input)?, &run.overrides())?;
            let text = match format {
                Format::Human => report.render_human(),
                Format::Machine => report.render_machine(),
            };
            emit(&text, out.as_ref())
        }
        Command::Table => emit(&cli::cmd_table(), None),
        Command::Sweep {
            input,
            run,
            param,
            from,
            to,
            steps,
            log,
            out,
        } => {
            let param: SweepParam = param.parse()?;
            let spec = SweepSpec {
                param,
                from,
                to,
                steps,
                log,
            };
            let rows = cli::cmd_sweep(load(&input)?, &spec, &run.overrides())?;
            emit(&cli::render_sweep(param, &rows), out.as_ref())
        }
        Command::Presets => emit(&cli::cmd_presets()?, None),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors are validation errors
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bb84-atmo: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
