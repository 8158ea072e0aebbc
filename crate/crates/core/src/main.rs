use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ising_infer::coupling::{
    default_row_tol, limiting_spectrum, read_text, spectrum, validate_assumptions, write_text,
    CouplingMatrix, Family,
};
use ising_infer::harness::{
    emit, run_experiment, CalibrationMode, ExperimentConfig, ExperimentKind, Format, Table,
};
use ising_infer::inference::{mle_exact, mle_stochastic, mple, EstimateResult, McConfig};
use ising_infer::sampler::{
    exact_enumerate, read_spins_csv, write_sample_csv, write_spins_csv, SampleRow,
    SpinConfiguration,
};
use ising_infer::seed::derive_seed;
use ising_infer::testing::{ModelSampler, TestKind};
use ising_infer::theory::{sample_v_set, CriticalLaw};
use ising_infer::{Error, Result};

#[derive(Parser)]
#[command(
    name = "ising-infer",
    version,
    about = "Estimation, testing and limit laws for dense Ising models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a TOML config file.
    Run {
        config: PathBuf,
        /// Override the output format of the config.
        #[arg(long)]
        format: Option<FormatArg>,
    },
    /// Finite and limiting spectrum of a coupling matrix, as JSON.
    Spectra {
        #[command(flatten)]
        matrix: MatrixArgs,
        /// Also write the matrix in the plain text format.
        #[arg(long)]
        matrix_out: Option<PathBuf>,
    },
    /// Draw configurations and write one summary row per replication.
    Sample {
        #[command(flatten)]
        matrix: MatrixArgs,
        #[arg(long)]
        theta: f64,
        #[arg(long, default_value_t = 100)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Summary CSV; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the spins, one configuration per line.
        #[arg(long)]
        spins_out: Option<PathBuf>,
    },
    /// Exact enumeration of a small model, as JSON.
    Enumerate {
        #[command(flatten)]
        matrix: MatrixArgs,
        #[arg(long)]
        theta: f64,
    },
    /// Estimate theta for every configuration of a spins CSV.
    Estimate {
        /// Spins CSV: seed, then n entries of 1 or -1 per line.
        #[arg(long)]
        samples: PathBuf,
        /// Matrix in the plain text format; otherwise use --family and --n.
        #[arg(long)]
        matrix_file: Option<PathBuf>,
        #[command(flatten)]
        matrix: OptionalMatrixArgs,
        #[arg(long, value_enum, default_value_t = MethodArg::All)]
        method: MethodArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Empirical and asymptotic power curves of the MS, NP and PL tests.
    Power {
        #[command(flatten)]
        matrix: MatrixArgs,
        #[arg(long)]
        theta0: f64,
        /// Comma-separated h values.
        #[arg(long, value_delimiter = ',', default_value = "0,0.5,1,2,4")]
        h: Vec<f64>,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 1000)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = CalibrationArg::MonteCarlo)]
        calibration: CalibrationArg,
        #[arg(long, default_value_t = 10_000)]
        calibration_reps: usize,
        #[arg(long, default_value_t = 1_000_000)]
        limit_draws: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tables of the critical limit law and draws of the limit series.
    Limits {
        #[arg(long, allow_hyphen_values = true)]
        h: f64,
        /// CSV of u, pdf, cdf; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write S, T, V draws for the family's limiting spectrum.
        #[arg(long)]
        samples_out: Option<PathBuf>,
        #[arg(long, default_value = "complete")]
        family: String,
        #[arg(long)]
        q: Option<usize>,
        #[arg(long, default_value_t = 100_000)]
        draws: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct MatrixArgs {
    #[arg(long, default_value = "complete")]
    family: String,
    #[arg(long)]
    n: usize,
    /// Class count for q-partite and cyclic families.
    #[arg(long)]
    q: Option<usize>,
    /// Degree for random-regular.
    #[arg(long)]
    degree: Option<usize>,
    /// Seed of a random regular graph.
    #[arg(long)]
    graph_seed: Option<u64>,
}

impl MatrixArgs {
    fn build(&self) -> Result<CouplingMatrix> {
        let family = Family::parse(&self.family, self.q, self.degree)?;
        CouplingMatrix::build(family, self.n, Some(self.graph_seed.unwrap_or(0)))
    }
}

#[derive(Args)]
struct OptionalMatrixArgs {
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    q: Option<usize>,
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long)]
    graph_seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Mple,
    Mle,
    MleStochastic,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum CalibrationArg {
    MonteCarlo,
    Asymptotic,
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| Error::Io {
            path: p.to_path_buf(),
            source: e,
        })?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn io_err(path: Option<&Path>) -> impl Fn(io::Error) -> Error + '_ {
    move |e| Error::Io {
        path: path.map_or_else(|| PathBuf::from("<stdout>"), Path::to_path_buf),
        source: e,
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let s = serde_json::to_string_pretty(value).map_err(|e| Error::Numeric(e.to_string()))?;
    println!("{s}");
    Ok(())
}

#[derive(Serialize)]
struct SpectraReport {
    family: String,
    n: usize,
    spectrum: ising_infer::coupling::SpectralSummary,
    validation: ising_infer::coupling::ValidationReport,
}

fn estimate_rows(results: &[(u64, EstimateResult)], out: Option<&Path>) -> Result<()> {
    let mut w = open_out(out)?;
    let err = io_err(out);
    writeln!(
        w,
        "seed,method,value,exists,residual,mc_stderr,iterations,flags"
    )
    .map_err(&err)?;
    for (seed, r) in results {
        let diag = |k: &str| r.diagnostics.get(k).copied().unwrap_or(f64::NAN);
        writeln!(
            w,
            "{},{},{:.16e},{},{:.16e},{:.16e},{},{}",
            seed,
            r.method.name(),
            r.value,
            r.exists,
            diag("residual"),
            diag("mc_stderr"),
            r.iterations,
            r.flags.join(";")
        )
        .map_err(&err)?;
    }
    w.flush().map_err(&err)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, format } => {
            let cfg = ExperimentConfig::load(&config)?;
            let format = match format {
                Some(FormatArg::Csv) => Format::Csv,
                Some(FormatArg::Json) => Format::Json,
                None => cfg.format,
            };
            let out = run_experiment(&cfg)?;
            for p in emit(&out, &cfg, format)? {
                println!("{}", p.display());
            }
        }
        Command::Spectra { matrix, matrix_out } => {
            let q = matrix.build()?;
            if let Some(p) = &matrix_out {
                let f = File::create(p).map_err(|e| Error::Io {
                    path: p.clone(),
                    source: e,
                })?;
                write_text(&q, BufWriter::new(f)).map_err(io_err(Some(p)))?;
            }
            print_json(&SpectraReport {
                family: q.family().name(),
                n: q.n(),
                spectrum: spectrum(&q)?,
                validation: validate_assumptions(&q, default_row_tol(q.n()), 1e-8),
            })?;
        }
        Command::Sample {
            matrix,
            theta,
            reps,
            seed,
            out,
            spins_out,
        } => {
            let q = matrix.build()?;
            let sampler = ModelSampler::new(&q, theta)?;
            let mut rows = Vec::with_capacity(reps);
            let mut spins = Vec::new();
            for i in 0..reps {
                let x = sampler.sample(seed, i)?;
                let x = SpinConfiguration::new(&q, x.spins().to_vec())?;
                let s = derive_seed(seed, i as u64);
                rows.push(SampleRow::new(&q, &x, s, theta)?);
                if spins_out.is_some() {
                    spins.push((s, x.spins().to_vec()));
                }
            }
            let mut w = open_out(out.as_deref())?;
            write_sample_csv(&rows, &mut w).map_err(io_err(out.as_deref()))?;
            w.flush().map_err(io_err(out.as_deref()))?;
            if let Some(p) = &spins_out {
                let mut w = open_out(Some(p))?;
                write_spins_csv(&spins, &mut w).map_err(io_err(Some(p)))?;
                w.flush().map_err(io_err(Some(p)))?;
            }
        }
        Command::Enumerate { matrix, theta } => {
            let q = matrix.build()?;
            print_json(&exact_enumerate(&q, theta)?)?;
        }
        Command::Estimate {
            samples,
            matrix_file,
            matrix,
            method,
            seed,
            out,
        } => {
            let text_err = |e| Error::Io {
                path: samples.clone(),
                source: e,
            };
            let configs = read_spins_csv(BufReader::new(File::open(&samples).map_err(text_err)?))?;
            let n_in = configs.first().map(|c| c.1.len()).unwrap_or(0);
            let q = match (&matrix_file, &matrix.family) {
                (Some(p), _) => {
                    let f = File::open(p).map_err(|e| Error::Io {
                        path: p.clone(),
                        source: e,
                    })?;
                    read_text(BufReader::new(f))?
                }
                (None, family) => {
                    let family = Family::parse(
                        family.as_deref().unwrap_or("complete"),
                        matrix.q,
                        matrix.degree,
                    )?;
                    CouplingMatrix::build(
                        family,
                        matrix.n.unwrap_or(n_in),
                        Some(matrix.graph_seed.unwrap_or(0)),
                    )?
                }
            };
            let mut results = Vec::new();
            for (i, (s, spins)) in configs.into_iter().enumerate() {
                let x = SpinConfiguration::new(&q, spins)?;
                if matches!(method, MethodArg::Mple | MethodArg::All) {
                    results.push((s, mple(&x)));
                }
                if matches!(method, MethodArg::Mle | MethodArg::All) {
                    match mle_exact(&x, &q) {
                        Ok(r) => results.push((s, r)),
                        Err(Error::Capacity { .. }) if method == MethodArg::All => {
                            let mc = McConfig {
                                seed: derive_seed(seed, i as u64),
                                ..McConfig::default()
                            };
                            results.push((s, mle_stochastic(&x, &q, &mc)?));
                        }
                        Err(e) => return Err(e),
                    }
                }
                if method == MethodArg::MleStochastic {
                    let mc = McConfig {
                        seed: derive_seed(seed, i as u64),
                        ..McConfig::default()
                    };
                    results.push((s, mle_stochastic(&x, &q, &mc)?));
                }
            }
            estimate_rows(&results, out.as_deref())?;
        }
        Command::Power {
            matrix,
            theta0,
            h,
            alpha,
            reps,
            seed,
            calibration,
            calibration_reps,
            limit_draws,
            out,
        } => {
            let cfg = ExperimentConfig {
                experiment: ExperimentKind::PowerCurve,
                family: matrix.family.clone(),
                q: matrix.q,
                degree: matrix.degree,
                graph_seed: matrix.graph_seed,
                n: Some(matrix.n),
                n_grid: None,
                theta0,
                h: None,
                h_grid: Some(h),
                alpha,
                reps: Some(reps),
                master_seed: seed,
                output_path: PathBuf::from("power"),
                format: Format::Csv,
                calibration: match calibration {
                    CalibrationArg::MonteCarlo => CalibrationMode::MonteCarlo,
                    CalibrationArg::Asymptotic => CalibrationMode::Asymptotic,
                },
                calibration_reps,
                boundary: ising_infer::testing::Boundary::Randomized,
                tests: TestKind::ALL.to_vec(),
                limit_draws,
                grid_points: 2,
                mle: false,
            };
            let result = run_experiment(&cfg)?;
            let s = &result.summary;
            let keep = [
                "h",
                "kind",
                "empirical_power",
                "asymptotic_power",
                "mc_stderr",
            ];
            let mut t = Table::new(&keep);
            for row in &s.rows {
                t.push(
                    keep.iter()
                        .map(|c| row[s.column(c).expect("summary column")].clone())
                        .collect(),
                );
            }
            let mut w = open_out(out.as_deref())?;
            write!(w, "{}", t.to_csv()).map_err(io_err(out.as_deref()))?;
            w.flush().map_err(io_err(out.as_deref()))?;
        }
        Command::Limits {
            h,
            out,
            samples_out,
            family,
            q,
            draws,
            seed,
        } => {
            let law = CriticalLaw::new(h)?;
            let mut w = open_out(out.as_deref())?;
            law.write_csv(&mut w).map_err(io_err(out.as_deref()))?;
            w.flush().map_err(io_err(out.as_deref()))?;
            if let Some(p) = &samples_out {
                let family = Family::parse(&family, q, None)?;
                let n = q.unwrap_or(2) * 2;
                let limit = limiting_spectrum(family, n)?;
                let set = sample_v_set(h, limit.tail(), limit.kappa, draws, seed)?;
                let mut w = open_out(Some(p))?;
                set.write_csv(&mut w).map_err(io_err(Some(p)))?;
                w.flush().map_err(io_err(Some(p)))?;
            }
            if out.is_some() {
                eprintln!(
                    "log_normalizer={:.16e} moment2={:.16e} moment4={:.16e}",
                    law.log_normalizer(),
                    law.moment2(),
                    law.moment4()
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
