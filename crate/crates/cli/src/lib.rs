//! Command-line front end: scenario in, CSV/JSON out.
//!
//! Every subcommand is deterministic; `--threads` changes wall time only.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use raylaunch_core::accel::{build_bvh, Bvh};
use raylaunch_core::analysis::{grid_sweep, rmse_with_floor, GridSpec, DEFAULT_FLOOR_DBM};
use raylaunch_core::io::{
    grid_rows, load_scenario, load_trace_csv, path_rows, read_results, result_rows, write_grid, write_paths,
    write_paths_to, write_results, Receivers, Scenario, TraceColumns,
};
use raylaunch_core::sim::{simulate, simulate_per_transmitter};
use raylaunch_core::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_INTERNAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "raylaunch", version, about = "Deterministic shooting-and-bouncing-rays coverage simulator")]
struct Cli {
    /// Worker threads (default: all cores). Outputs do not depend on it.
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate every receiver of a scenario and write a results CSV.
    Simulate {
        scenario: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Evaluate a receiver grid and write a grid CSV.
    Sweep {
        scenario: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Compare a results CSV against a measurement trace; prints a JSON report.
    Compare {
        results: PathBuf,
        trace: PathBuf,
        /// Report raw residuals without removing the mean offset.
        #[arg(long)]
        no_fit: bool,
        /// Power substituted for receivers without coverage, dBm.
        #[arg(long, default_value_t = DEFAULT_FLOOR_DBM, allow_hyphen_values = true)]
        floor: f64,
        #[arg(long, default_value = "lat")]
        lat_column: String,
        #[arg(long, default_value = "lon")]
        lon_column: String,
        #[arg(long, default_value = "power_dbm")]
        power_column: String,
        /// Write the report here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Dump every path reaching one receiver, per transmitter.
    Paths {
        scenario: PathBuf,
        /// Receiver index in scenario order (row-major for grids).
        #[arg(long)]
        rx: usize,
        /// Ignore the scenario's path filters.
        #[arg(long)]
        unfiltered: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Load and check a scenario without simulating.
    Validate { scenario: PathBuf },
}

/// Grid override for `sweep`; all three or none.
#[derive(Debug, Args)]
struct GridArgs {
    /// South-west corner, east/north metres.
    #[arg(long, num_args = 2, value_names = ["X", "Y"], allow_hyphen_values = true, requires_all = ["max", "spacing"])]
    min: Option<Vec<f64>>,
    /// North-east corner, east/north metres.
    #[arg(long, num_args = 2, value_names = ["X", "Y"], allow_hyphen_values = true, requires_all = ["min", "spacing"])]
    max: Option<Vec<f64>>,
    #[arg(long, requires_all = ["min", "max"])]
    spacing: Option<f64>,
    /// Receiver height above ground, metres.
    #[arg(long)]
    height: Option<f64>,
}

/// Run the command line and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let outcome = match cli.threads {
        None => execute(cli.command),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n as usize).build() {
            Ok(pool) => pool.install(|| execute(cli.command)),
            Err(e) => Err(Error::Invariant(format!("cannot start worker pool: {e}"))),
        },
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Invariant(_) => EXIT_INTERNAL,
        _ => EXIT_INPUT,
    }
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Simulate { scenario, output } => cmd_simulate(&scenario, &output),
        Command::Sweep { scenario, output, grid } => cmd_sweep(&scenario, &output, &grid),
        Command::Compare {
            results,
            trace,
            no_fit,
            floor,
            lat_column,
            lon_column,
            power_column,
            output,
        } => {
            let cols = TraceColumns {
                lat: lat_column,
                lon: lon_column,
                power: power_column,
                ..TraceColumns::default()
            };
            cmd_compare(&results, &trace, !no_fit, floor, &cols, output.as_deref())
        }
        Command::Paths {
            scenario,
            rx,
            unfiltered,
            output,
        } => cmd_paths(&scenario, rx, unfiltered, output.as_deref()),
        Command::Validate { scenario } => cmd_validate(&scenario),
    }
}

fn prepare(path: &Path) -> Result<(Scenario, Bvh)> {
    let t = Instant::now();
    let sc = load_scenario(path)?;
    let bvh = build_bvh(&sc.scene)?;
    eprintln!(
        "loaded {}: {} triangles, {} edges, {} transmitters in {:.3} s",
        sc.name,
        sc.scene.triangle_count(),
        sc.scene.edges().len(),
        sc.transmitters.len(),
        t.elapsed().as_secs_f64()
    );
    Ok((sc, bvh))
}

fn report_timing(sc: &Scenario, receivers: usize, start: Instant) {
    let secs = start.elapsed().as_secs_f64();
    let rays = sc.config.ray_count as f64 * sc.transmitters.len() as f64;
    eprintln!(
        "traced {} rays x {} transmitters for {receivers} receivers in {secs:.3} s ({:.0} rays/s)",
        sc.config.ray_count,
        sc.transmitters.len(),
        rays / secs.max(1e-9)
    );
}

fn cmd_simulate(path: &Path, output: &Path) -> Result<()> {
    let (sc, bvh) = prepare(path)?;
    let rx = sc.receiver_points()?;
    let start = Instant::now();
    let results = simulate(
        &sc.scene,
        &bvh,
        &sc.transmitters,
        &sc.rx_antenna,
        &rx,
        &sc.config,
        &sc.filter,
    )?;
    report_timing(&sc, rx.len(), start);
    write_results(output, &result_rows(&results, &rx, sc.origin()))
}

fn cmd_sweep(path: &Path, output: &Path, args: &GridArgs) -> Result<()> {
    let (sc, bvh) = prepare(path)?;
    let mut grid = match (&args.min, &args.max, args.spacing) {
        (Some(min), Some(max), Some(spacing)) => GridSpec {
            min: [min[0], min[1]],
            max: [max[0], max[1]],
            spacing,
            height: match &sc.receivers {
                Receivers::Grid(g) => g.height,
                Receivers::Points(p) => p.first().map_or(raylaunch_core::analysis::RX_HEIGHT, |p| p.z),
            },
        },
        _ => match &sc.receivers {
            Receivers::Grid(g) => g.clone(),
            Receivers::Points(_) => {
                return Err(Error::InvalidInput(
                    "scenario has no receiver grid; pass --min, --max and --spacing".into(),
                ))
            }
        },
    };
    if let Some(h) = args.height {
        grid.height = h;
    }
    let (rows, cols) = grid.shape()?;
    let start = Instant::now();
    let result = grid_sweep(
        &sc.scene,
        &bvh,
        &sc.transmitters,
        &sc.rx_antenna,
        &grid,
        &sc.config,
        &sc.filter,
    )?;
    report_timing(&sc, rows * cols, start);
    write_grid(output, &grid_rows(&result, sc.origin()))
}

fn cmd_compare(
    results: &Path,
    trace: &Path,
    fit: bool,
    floor: f64,
    cols: &TraceColumns,
    output: Option<&Path>,
) -> Result<()> {
    let rows = read_results(results)?;
    let measured = load_trace_csv(trace, cols)?;
    if rows.len() != measured.samples.len() {
        return Err(Error::InvalidInput(format!(
            "{} has {} rows but {} has {} samples; rows are paired by order",
            results.display(),
            rows.len(),
            trace.display(),
            measured.samples.len()
        )));
    }
    let simulated: Vec<f64> = rows.iter().map(|r| r.power_dbm.unwrap_or(f64::NEG_INFINITY)).collect();
    let report = rmse_with_floor(&simulated, &measured.powers(), fit, floor)?;
    let mut text = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::Invariant(format!("report serialisation: {e}")))?;
    text.push('\n');
    eprintln!(
        "{} positions, rmse {:.2} dB after offset {:.2} dB ({:.2} dB raw), {} clamped",
        report.n_positions, report.rmse_db, report.fitted_offset_db, report.rmse_unfitted_db, report.clamped
    );
    emit(output, text.as_bytes())
}

fn cmd_paths(path: &Path, rx: usize, unfiltered: bool, output: Option<&Path>) -> Result<()> {
    let (sc, bvh) = prepare(path)?;
    let points = sc.receiver_points()?;
    let Some(&point) = points.get(rx) else {
        return Err(Error::InvalidInput(format!(
            "receiver index {rx} out of range; scenario has {} receivers",
            points.len()
        )));
    };
    let filter = if unfiltered { Default::default() } else { sc.filter.clone() };
    let start = Instant::now();
    let mut per_tx = simulate_per_transmitter(
        &sc.scene,
        &bvh,
        &sc.transmitters,
        &sc.rx_antenna,
        &[point],
        &sc.config,
        &filter,
    )?;
    report_timing(&sc, 1, start);
    let mut results: Vec<_> = per_tx.iter_mut().map(|r| r.remove(0)).collect();
    for r in &mut results {
        r.rx_index = rx;
    }
    let rows = path_rows(&results);
    match output {
        Some(p) => write_paths(p, &rows),
        None => {
            let stdout = std::io::stdout();
            write_paths_to(stdout.lock(), Path::new("<stdout>"), &rows)
        }
    }
}

fn cmd_validate(path: &Path) -> Result<()> {
    let sc = load_scenario(path)?;
    build_bvh(&sc.scene)?;
    let receivers = match &sc.receivers {
        Receivers::Points(p) => format!("{} route points", p.len()),
        Receivers::Grid(g) => {
            let (r, c) = g.shape()?;
            format!("{r}x{c} grid")
        }
    };
    let text = format!(
        "{}: ok\n  meshes: {}\n  triangles: {}\n  diffraction edges: {}\n  transmitters: {}\n  receivers: {}\n  rays: {}\n  filter rules: {}\n",
        path.display(),
        sc.scene.meshes().len(),
        sc.scene.triangle_count(),
        sc.scene.edges().len(),
        sc.transmitters.len(),
        receivers,
        sc.config.ray_count,
        sc.filter.rules.len()
    );
    emit(None, text.as_bytes())
}

fn emit(output: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match output {
        Some(p) => std::fs::write(p, bytes).map_err(|e| Error::Io {
            path: p.to_path_buf(),
            source: e,
        }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)
                .and_then(|_| out.flush())
                .map_err(|e| Error::Io {
                    path: "<stdout>".into(),
                    source: e,
                })
        }
    }
}
