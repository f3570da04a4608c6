//! Command-line front end: `detect`, `simulate` and `calibrate`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use hidim::mcd_detector::calibration::{FALLBACK_REPLICATES, FALLBACK_STARTS};
use hidim::mcd_detector::{
    consistency_factor, default_h, simulate_calibration, wishart_df, McdOptions,
};
use hidim::sim::{run_experiment, write_summary, ArtifactKind, ExperimentConfig, Setup};
use hidim::{load_matrix, write_report, DetectConfig, Error, MatrixFormat, Methods, OrderBounds};

const EXIT_INPUT: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "hidim", version, about = "Outlier detection for wide data matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Bin,
}

#[derive(Subcommand)]
enum Command {
    /// Flag outlying rows of a T×V matrix.
    Detect {
        #[arg(long = "in")]
        input: PathBuf,
        /// JSON report path; the per-time-point CSV is written next to it.
        #[arg(long)]
        out: PathBuf,
        /// Input format; inferred from the extension when omitted.
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
        #[arg(long, default_value_t = 3.0)]
        alpha: f64,
        #[arg(long, default_value_t = 0.001)]
        gamma: f64,
        #[arg(long, default_value_t = 15)]
        order_min: usize,
        #[arg(long, default_value_t = 50)]
        order_max: usize,
        /// MCD subset size as a fraction of T.
        #[arg(long)]
        h_ratio: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "leverage,distance")]
        methods: Methods,
    },
    /// Run the artifact simulation and write summary tables.
    Simulate {
        #[arg(long, default_value_t = 1000)]
        iterations: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        setups: Vec<Setup>,
        #[arg(long, value_delimiter = ',', default_value = "none,spike,motion,banding,ghosting")]
        artifacts: Vec<ArtifactKind>,
        #[arg(long, value_delimiter = ',', default_value = "0.025,0.05,0.075,0.1,0.2,0.4,0.6,0.8,1.0")]
        snr_grid: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "141,171,89")]
        scans: Vec<usize>,
        /// Output directory for summary.csv and summary.json.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Print closed-form and simulated distance calibration constants.
    Calibrate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: usize,
        /// Subset size; defaults to ⌊(n + p + 1) / 2⌋.
        #[arg(long)]
        h: Option<usize>,
        #[arg(long, default_value_t = FALLBACK_REPLICATES)]
        replicates: usize,
        #[arg(long, default_value_t = FALLBACK_STARTS)]
        starts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_INPUT);
    }
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { EXIT_INPUT } else { EXIT_NUMERICAL })
        }
    }
}

/// `HIDIM_THREADS` caps the worker pool; 0 or unset means one per core.
fn configure_threads() -> Result<(), Error> {
    let Ok(raw) = std::env::var("HIDIM_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("HIDIM_THREADS must be a count, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(e.to_string()))
}

fn execute(command: Command) -> Result<(), Error> {
    match command {
        Command::Detect { input, out, format, alpha, gamma, order_min, order_max, h_ratio, seed, methods } => {
            let format = match format {
                Some(FormatArg::Csv) => MatrixFormat::Csv,
                Some(FormatArg::Bin) => MatrixFormat::FlatBinary,
                None => MatrixFormat::from_path(&input),
            };
            let cfg = DetectConfig {
                alpha,
                gamma,
                order_bounds: OrderBounds { lo: order_min, hi: order_max },
                h_ratio,
                seed,
                methods,
                mcd: McdOptions::default(),
            };
            cfg.validate()?;
            let y = load_matrix(&input, format)?;
            let report = hidim::detect(&y, &cfg)?;
            write_report(&report, &out)?;
            if report.leverage_flags.is_some() {
                println!("leverage: {}", join(&report.leverage_outliers()));
            }
            if report.distance_flags.is_some() {
                println!("distance: {}", join(&report.distance_outliers()));
            }
            Ok(())
        }
        Command::Simulate { iterations, seed, setups, artifacts, snr_grid, scans, out } => {
            let cfg = ExperimentConfig {
                iterations,
                seed,
                setups,
                artifacts,
                snr_grid,
                scans,
                detect: DetectConfig { seed, ..DetectConfig::default() },
                ..ExperimentConfig::default()
            };
            let summary = run_experiment(&cfg)?;
            write_summary(&summary, &out, "summary")?;
            println!(
                "wrote {} rows to {}",
                summary.rows.len(),
                out.join("summary.{csv,json}").display()
            );
            Ok(())
        }
        Command::Calibrate { n, p, h, replicates, starts, seed } => {
            if p == 0 || p >= n {
                return Err(Error::Config(format!("need 0 < p < n, got n = {n}, p = {p}")));
            }
            let h = h.unwrap_or_else(|| default_h(n, p));
            if h < default_h(n, p) || h > n {
                return Err(Error::Config(format!(
                    "h must lie in [{}, {n}], got {h}",
                    default_h(n, p)
                )));
            }
            let ratio = h as f64 / n as f64;
            println!("n = {n}, p = {p}, h = {h}, h/n = {ratio}");
            println!("{:<12} {:>14} {:>14}", "source", "c", "m");
            let c = consistency_factor(p, ratio);
            if h == n {
                println!("{:<12} {:>14.6} {:>14}", "closed-form", c, "n/a");
                return Ok(());
            }
            match wishart_df(n, p, ratio) {
                Ok(m) => println!("{:<12} {:>14.6} {:>14.6}", "closed-form", c, m),
                Err(e) => println!("{:<12} {:>14.6} {:>14}", "closed-form", c, format!("({e})")),
            }
            let opts = McdOptions { n_starts: starts, ..McdOptions::default() };
            let sim = simulate_calibration(n, p, h, replicates, seed, &opts)?;
            println!("{:<12} {:>14.6} {:>14.6}", "simulation", sim.c, sim.m);
            Ok(())
        }
    }
}

fn join(idx: &[usize]) -> String {
    idx.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
}
