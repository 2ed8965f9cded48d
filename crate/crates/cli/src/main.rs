use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use randgcc::classes::{enumerate_separations, separations_bruteforce, PointSet};
use randgcc::ell::{dense_sweep, estimate_ell, CandidatePolicy};
use randgcc::experiment::{run_convergence, run_variance_study, ConvergenceConfig};
use randgcc::largedev::{tail_exact, tail_probability, WeightedSumSpec, TAIL_CSV_HEADER};
use randgcc::render::render_board;
use randgcc::{traverse, Checkerboard, Error, Geodesic, GridSpec, Result};

#[derive(Parser)]
#[command(name = "randgcc", version, about = "Random checkerboards and geodesics on the torus")]
struct Cli {
    /// Worker threads (defaults to RAYON_NUM_THREADS or the core count).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a checkerboard and write its document.
    Sample {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Decompose a geodesic into cells and write the segment table.
    Traverse {
        #[arg(long)]
        board: PathBuf,
        #[arg(long, value_parser = parse_vector)]
        origin: Coords,
        /// Any nonzero vector; it is rescaled to unit length.
        #[arg(long, value_parser = parse_vector)]
        dir: Coords,
        #[arg(long = "T")]
        horizon: f64,
        #[arg(long)]
        out: PathBuf,
        /// Also write the hyperplane crossing table here.
        #[arg(long)]
        crossings: Option<PathBuf>,
    },
    /// Estimate the infimum of the occupation fraction over geodesics.
    Ell(EllArgs),
    /// List the line-separable bipartitions of a planar point set.
    Separations {
        #[arg(long)]
        points: PathBuf,
        #[arg(long)]
        bruteforce: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Tail of a weighted Bernoulli sum; prints one CSV row.
    Largedev {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        c: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        exact: bool,
    },
    /// Run the convergence study described by a config file.
    Converge {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Variance of the occupation fraction for random geodesics.
    Variance {
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long)]
        n: u64,
        #[arg(long = "T")]
        horizon: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 100)]
        geodesics: usize,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw a planar board and geodesics as SVG.
    Render {
        #[arg(long)]
        board: PathBuf,
        /// `x,y,dx,dy`; may be repeated.
        #[arg(long = "geodesic", value_parser = parse_vector)]
        geodesics: Vec<Coords>,
        #[arg(long = "T")]
        horizon: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct EllArgs {
    #[arg(long)]
    board: PathBuf,
    #[arg(long = "T")]
    horizon: f64,
    /// Use the tensor-grid sweep instead of the candidate search.
    #[arg(long)]
    dense: bool,
    #[arg(long, default_value_t = 64, requires = "dense")]
    steps: usize,
    #[arg(long, default_value_t = 128, requires = "dense")]
    angles: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

/// Comma-separated real components.
#[derive(Debug, Clone)]
struct Coords(Vec<f64>);

fn parse_vector(s: &str) -> std::result::Result<Coords, String> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<std::result::Result<_, _>>()
        .map(Coords)
}

fn read(path: &Path) -> Result<String> {
    Ok(fs::read_to_string(path)?)
}

fn write(path: &Path, text: &str) -> Result<()> {
    Ok(fs::write(path, text)?)
}

fn load_board(path: &Path) -> Result<Checkerboard> {
    Checkerboard::from_document(&read(path)?)
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Sample { d, n, eps, seed, out } => {
            let board = Checkerboard::sample(GridSpec::new(d, n)?, eps, seed)?;
            write(&out, &board.to_document())
        }
        Command::Traverse {
            board,
            origin,
            dir,
            horizon,
            out,
            crossings,
        } => {
            let board = load_board(&board)?;
            let g = Geodesic::normalized(&origin.0, &dir.0)?;
            let tr = traverse(&g, board.grid(), horizon)?;
            write(&out, &tr.segments_csv())?;
            if let Some(path) = crossings {
                write(&path, &tr.crossings_csv())?;
            }
            Ok(())
        }
        Command::Ell(a) => {
            let board = load_board(&a.board)?;
            let est = if a.dense {
                dense_sweep(&board, a.horizon, a.steps, a.angles)?
            } else {
                let policy = CandidatePolicy::default_for(board.grid(), a.horizon);
                estimate_ell(&board, a.horizon, &policy, a.seed)?
            };
            write(&a.out, &est.to_document())
        }
        Command::Separations {
            points,
            bruteforce,
            out,
        } => {
            let set = PointSet::from_csv(&read(&points)?)?;
            let family = if bruteforce {
                separations_bruteforce(&set)?
            } else {
                enumerate_separations(&set)
            };
            write(&out, &family.to_text())
        }
        Command::Largedev {
            m,
            c,
            eps,
            delta,
            trials,
            seed,
            exact,
        } => {
            let spec = WeightedSumSpec::ramp(m, c, eps)?;
            let mut est = tail_probability(&spec, delta, trials, seed)?;
            if exact {
                est.exact = Some(tail_exact(&spec, delta)?);
            }
            println!("{TAIL_CSV_HEADER}");
            println!("{}", est.csv_row());
            Ok(())
        }
        Command::Converge { config, out_dir } => {
            let cfg = ConvergenceConfig::from_toml(&read(&config)?)?;
            let report = run_convergence(&cfg)?;
            fs::create_dir_all(&out_dir)?;
            write(&out_dir.join("convergence.csv"), &report.summary_csv())?;
            write(&out_dir.join("histogram.csv"), &report.histogram_csv())?;
            write(&out_dir.join("trials.csv"), &report.trials_csv())?;
            for row in &report.rows {
                eprintln!("n = {}: {:.3} s", row.n, row.wall_time.as_secs_f64());
            }
            Ok(())
        }
        Command::Variance {
            d,
            n,
            horizon,
            eps,
            geodesics,
            trials,
            seed,
            out,
        } => {
            let grid = GridSpec::new(d, n)?;
            let study = run_variance_study(&grid, horizon, eps, geodesics, trials, seed)?;
            write(&out, &study.to_csv())
        }
        Command::Render {
            board,
            geodesics,
            horizon,
            out,
        } => {
            let board = load_board(&board)?;
            let lines = geodesics
                .iter()
                .map(|Coords(v)| {
                    if v.len() != 4 {
                        return Err(Error::InvalidGeodesic(format!(
                            "expected x,y,dx,dy, got {} values",
                            v.len()
                        )));
                    }
                    Geodesic::normalized(&v[..2], &v[2..])
                })
                .collect::<Result<Vec<_>>>()?;
            write(&out, &render_board(&board, &lines, horizon)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 3 })
        }
    }
}
