use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use fmap_core::harness::{
    self, BenchConfig, KRange, Precision, DEFAULT_MEM_CAP_BYTES,
};
use fmap_core::mask::DEFAULT_SIGMA;
use fmap_core::metrics::{sweep_ratio, Predictor};
use fmap_core::solver::DEFAULT_LAMBDA;
use fmap_core::MaskKind;

#[derive(Parser)]
#[command(name = "fmap", version, about = "Functional-map solver verification and benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check that the row-wise, batched and dense solvers agree.
    Verify {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Time the row-wise and batched solvers across k.
    Bench {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Tabulate the analytic memory of the batched solve.
    Memory {
        #[command(flatten)]
        range: RangeArgs,
        #[arg(long, default_value_t = 1)]
        batch: usize,
        /// Both precisions when omitted.
        #[arg(long, value_enum)]
        precision: Option<PrecisionArg>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Metric values of the degenerate predictors over the overlap ratio.
    MetricsSweep {
        #[arg(long, default_value_t = 10_000.0)]
        n: f64,
        #[arg(long, default_value_t = 101)]
        steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Algebraic checks of the two gradient-feature variants.
    GradfeatCheck {
        #[arg(long, default_value_t = 8)]
        channels: usize,
        #[arg(long, default_value_t = 64)]
        vertices: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct RangeArgs {
    #[arg(long)]
    k_start: Option<usize>,
    #[arg(long)]
    k_stop: Option<usize>,
    #[arg(long)]
    k_step: Option<usize>,
}

impl RangeArgs {
    fn resolve(&self, default: (usize, usize, usize)) -> Result<KRange> {
        Ok(KRange::new(
            self.k_start.unwrap_or(default.0),
            self.k_stop.unwrap_or(default.1),
            self.k_step.unwrap_or(default.2),
        )?)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    range: RangeArgs,
    /// Descriptor channels; defaults to 2k.
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, default_value_t = 1)]
    batch: usize,
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    lambda: f64,
    #[arg(long, value_enum, default_value_t = MaskArg::Comm)]
    mask: MaskArg,
    #[arg(long, default_value_t = DEFAULT_SIGMA)]
    sigma: f64,
    #[arg(long, default_value_t = 10)]
    reps: usize,
    #[arg(long, default_value_t = 3)]
    warmup: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = PrecisionArg::F64)]
    precision: PrecisionArg,
    #[arg(long, default_value_t = DEFAULT_MEM_CAP_BYTES)]
    mem_cap_bytes: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn config(&self, default_range: (usize, usize, usize)) -> Result<BenchConfig> {
        let cfg = BenchConfig {
            k: self.range.resolve(default_range)?,
            d: self.d,
            batch: self.batch,
            lambda: self.lambda,
            mask: match self.mask {
                MaskArg::Comm => MaskKind::Commutativity,
                MaskArg::Resolvent => MaskKind::Resolvent { sigma: self.sigma },
            },
            reps: self.reps,
            warmup: self.warmup,
            seed: self.seed,
            precision: self.precision.into(),
            mem_cap_bytes: self.mem_cap_bytes,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MaskArg {
    Comm,
    Resolvent,
}

#[derive(Clone, Copy, ValueEnum)]
enum PrecisionArg {
    F32,
    F64,
}

impl From<PrecisionArg> for Precision {
    fn from(p: PrecisionArg) -> Self {
        match p {
            PrecisionArg::F32 => Precision::F32,
            PrecisionArg::F64 => Precision::F64,
        }
    }
}

const VERIFY_RANGE: (usize, usize, usize) = (4, 32, 4);
const SWEEP_RANGE: (usize, usize, usize) = (20, 300, 10);

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot write {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Verify { run, inject_fault } => {
            let cfg = run.config(VERIFY_RANGE)?;
            let report = harness::verify(&cfg, inject_fault)?;
            let mut out = output(&run.out)?;
            report.write_csv(&mut out, cfg.precision)?;
            out.flush()?;
            let failed = report.rows.iter().filter(|r| !r.passed()).count();
            eprintln!(
                "verify: {} comparisons, {} above tolerance {:e}",
                report.rows.len(),
                failed,
                cfg.precision.tolerance()
            );
            Ok(report.passed())
        }
        Command::Bench { run } => {
            let cfg = run.config(SWEEP_RANGE)?;
            let mut out = output(&run.out)?;
            for line in harness::bench_report_header(&cfg) {
                writeln!(out, "{line}")?;
            }
            writeln!(out, "{}", harness::BENCH_HEADER)?;
            let mut io_err = None;
            harness::bench_with(&cfg, |rows| {
                for r in rows {
                    if let Err(e) = harness::write_bench_row(&mut out, cfg.precision, r) {
                        io_err.get_or_insert(e);
                    }
                }
                let _ = out.flush();
                if let Some(speedup) = rows[1].speedup {
                    eprintln!("k={:>4}  speedup {speedup:.2}", rows[0].k);
                }
            })?;
            if let Some(e) = io_err {
                return Err(e.into());
            }
            out.flush()?;
            Ok(true)
        }
        Command::Memory {
            range,
            batch,
            precision,
            out,
        } => {
            let precisions = match precision {
                Some(p) => vec![p.into()],
                None => vec![Precision::F32, Precision::F64],
            };
            anyhow::ensure!(batch >= 1, "batch must be at least 1");
            let rows = harness::memory_table(range.resolve(SWEEP_RANGE)?, batch, &precisions);
            let mut out = output(&out)?;
            harness::write_memory_csv(&mut out, &rows)?;
            out.flush()?;
            Ok(true)
        }
        Command::MetricsSweep { n, steps, out } => {
            let rows = sweep_ratio(&Predictor::degenerate(), n, steps)?;
            let mut out = output(&out)?;
            harness::write_sweep_csv(&mut out, &rows)?;
            out.flush()?;
            Ok(true)
        }
        Command::GradfeatCheck {
            channels,
            vertices,
            seed,
        } => {
            let report = harness::gradfeat_check(channels, vertices, seed)?;
            for c in &report.checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            Ok(report.passed())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
