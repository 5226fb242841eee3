use clap::{Parser, Subcommand, ValueEnum};
use mbqml::hea::GreedyConfig;
use mbqml::kernel::DatasetKind;
use mbqml_cli::Failure;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "mbqml", version, about = "Measurement-based QML experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Dataset {
    Circles,
    Moons,
    Blobs,
}

#[derive(Clone, Copy, ValueEnum)]
enum HeaTarget {
    TIsingxx,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write its results.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory, overriding the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a config without running it.
    Validate { config: PathBuf },
    /// Train and test the quantum kernel SVM once.
    KernelSvm {
        #[arg(long, value_enum)]
        dataset: Dataset,
        #[arg(long, default_value_t = 160)]
        n_train: usize,
        #[arg(long, default_value_t = 40)]
        n_test: usize,
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        #[arg(long, default_value_t = mbqml::kernel::DEFAULT_C)]
        c: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Greedy discrete-angle search with magic-state injection.
    Hea {
        #[arg(long, value_enum, default_value = "t-isingxx")]
        target: HeaTarget,
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
        #[arg(long, default_value_t = 4)]
        lmax: usize,
        #[arg(long, default_value_t = 1e-3)]
        delta: f64,
        #[arg(long, default_value_t = 5)]
        resets: usize,
        #[arg(long, default_value_t = 7)]
        n_train: usize,
        #[arg(long, default_value_t = 3)]
        n_test: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn dispatch(cmd: Command) -> Result<String, Failure> {
    match cmd {
        Command::Run { config, seed, out } => mbqml_cli::run(&config, seed, out),
        Command::Validate { config } => mbqml_cli::validate(&config),
        Command::KernelSvm { dataset, n_train, n_test, noise, c, seed, out } => {
            let d = match dataset {
                Dataset::Circles => DatasetKind::Circles,
                Dataset::Moons => DatasetKind::Moons,
                Dataset::Blobs => DatasetKind::Blobs,
            };
            mbqml_cli::kernel_svm(d, n_train, n_test, noise, c, seed, &out)
        }
        Command::Hea { target: HeaTarget::TIsingxx, epsilon, lmax, delta, resets, n_train, n_test, seed, out } => {
            let cfg = GreedyConfig { epsilon, n_reset: resets, l_max: lmax, delta };
            mbqml_cli::hea(cfg, n_train, n_test, seed, &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(line) => {
            println!("{line}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("{f}");
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
