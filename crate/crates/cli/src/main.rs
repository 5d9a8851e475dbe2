use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use simple_pinn::checkpoint::{write_atomic, Checkpoint};
use simple_pinn::config::{case_to_toml, RunFile, RunSettings};
use simple_pinn::error::{CliError, Result};
use simple_pinn::evaluate::evaluate;
use simple_pinn::export::{sample_fields, write_csv, write_vtk};
use simple_pinn::reference::Reference;
use simple_pinn::run::{default_export, default_run_dir, execute};
use simple_pinn_core::cases::{build_case, registry, CaseId, Overrides};
use simple_pinn_core::geometry::{GridSpec, Rect, TimeGrid};
use simple_pinn_core::training::BatchMode;

#[derive(Parser)]
#[command(name = "simple-pinn", version, about = "Train and evaluate SIMPLE-PINN flow solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a case and write checkpoint, metrics, fields and manifest.
    Run(RunArgs),
    /// Sample a checkpoint on a regular grid.
    Export(ExportArgs),
    /// Compare a checkpoint with reference data.
    Evaluate(EvaluateArgs),
    /// List the registered cases, or print one case's default config.
    Cases {
        #[arg(long, value_name = "CASE")]
        dump: Option<String>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Config file (TOML). Flags override its values.
    #[arg(long, conflicts_with = "case")]
    config: Option<PathBuf>,
    /// Registered case to start from.
    #[arg(long, required_unless_present = "config")]
    case: Option<String>,
    #[arg(long)]
    re: Option<f64>,
    /// Angle of attack in degrees (airfoil).
    #[arg(long)]
    aoa: Option<f64>,
    /// Spatial grid, `NXxNY`.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<GridSpec>,
    /// Time grid, `T_END:LAYERS`.
    #[arg(long, value_parser = parse_time)]
    time: Option<TimeGrid>,
    #[arg(long)]
    max_iter: Option<u64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Weight of the correction losses; 0 gives the plain FVM-PINN baseline.
    #[arg(long)]
    rc_weight: Option<f64>,
    /// `full` or `FVM,AD,BC,IC` batch sizes.
    #[arg(long, value_parser = parse_batch)]
    batch: Option<BatchMode>,
    #[arg(long)]
    snapshot_every: Option<u64>,
    #[arg(long)]
    log_every: Option<u64>,
    /// Run directory; defaults to a hashed name under $SIMPLE_PINN_RUNS (or ./runs).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Do not echo metric lines.
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Sampling lattice, `NXxNY`; defaults to the case grid.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<GridSpec>,
    /// `X0,X1,Y0,Y1`; defaults to the case evaluation window or domain.
    #[arg(long, value_parser = parse_window)]
    window: Option<Rect>,
    /// Comma separated times (unsteady models); defaults to the final time.
    #[arg(long, value_delimiter = ',')]
    times: Vec<f64>,
    #[arg(long)]
    out: PathBuf,
    /// Also write legacy VTK next to the CSV.
    #[arg(long)]
    vtk: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    reference: PathBuf,
    /// Report path; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_grid(s: &str) -> std::result::Result<GridSpec, String> {
    let (a, b) = s.split_once(['x', 'X']).ok_or("expected NXxNY")?;
    Ok(GridSpec {
        nx: a.trim().parse().map_err(|_| "bad NX")?,
        ny: b.trim().parse().map_err(|_| "bad NY")?,
    })
}

fn parse_time(s: &str) -> std::result::Result<TimeGrid, String> {
    let (a, b) = s.split_once(':').ok_or("expected T_END:LAYERS")?;
    Ok(TimeGrid {
        t_end: a.trim().parse().map_err(|_| "bad T_END")?,
        layers: b.trim().parse().map_err(|_| "bad LAYERS")?,
    })
}

fn parse_window(s: &str) -> std::result::Result<Rect, String> {
    let v: Vec<f64> = s.split(',').map(|x| x.trim().parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|e| e.to_string())?;
    match v[..] {
        [x0, x1, y0, y1] => Ok(Rect::new(x0, x1, y0, y1)),
        _ => Err("expected X0,X1,Y0,Y1".into()),
    }
}

fn parse_batch(s: &str) -> std::result::Result<BatchMode, String> {
    if s == "full" {
        return Ok(BatchMode::Full);
    }
    let v: Vec<usize> = s.split(',').map(|x| x.trim().parse::<usize>()).collect::<std::result::Result<_, _>>().map_err(|e| e.to_string())?;
    match v[..] {
        [fvm, ad, bc, ic] => Ok(BatchMode::Mini { fvm, ad, bc, ic }),
        _ => Err("expected `full` or FVM,AD,BC,IC".into()),
    }
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let overrides = Overrides {
        re: a.re,
        aoa_deg: a.aoa,
        grid: a.grid,
        time: a.time,
        max_iter: a.max_iter,
        lr: a.lr,
        alpha: a.alpha,
        seed: a.seed,
        rc_weight: a.rc_weight,
        batch: a.batch,
        snapshot_every: a.snapshot_every,
        ..Default::default()
    };
    let mut file = match (&a.config, &a.case) {
        (Some(path), _) => {
            let mut f = RunFile::load(path)?;
            f.case.apply(&overrides)?;
            f.case.validate()?;
            f
        }
        (None, Some(id)) => RunFile {
            case: build_case(CaseId::parse(id)?, &overrides)?,
            run: RunSettings::default(),
        },
        (None, None) => return Err(CliError::Config("either --config or --case is required".into())),
    };
    if let Some(n) = a.log_every {
        if n == 0 {
            return Err(CliError::Config("--log-every must be at least 1".into()));
        }
        file.run.log_every = n;
    }
    let dir = a.out.unwrap_or_else(|| default_run_dir(&file.case));
    eprintln!("run directory: {}", dir.display());
    let quiet = a.quiet;
    let m = execute(&file, &dir, |line| {
        if !quiet {
            // A closed pipe only silences the echo; the run continues.
            let _ = writeln!(std::io::stdout(), "{line}");
        }
    })?;
    eprintln!("{:?} after {} steps, config hash {}", m.status, m.steps, m.config_hash);
    Ok(())
}

fn cmd_export(a: ExportArgs) -> Result<()> {
    let ckpt = Checkpoint::load(&a.checkpoint)?;
    let cfg = ckpt.model.config();
    let mut spec = match &ckpt.case {
        Some(c) => default_export(c),
        None => {
            let [ix, iy] = cfg.spatial_inputs();
            simple_pinn::export::ExportSpec {
                nx: 101,
                ny: 101,
                window: Rect::new(cfg.input_lower[ix], cfg.input_upper[ix], cfg.input_lower[iy], cfg.input_upper[iy]),
                times: cfg.time_input().map(|t| vec![cfg.input_upper[t]]).unwrap_or_default(),
                p_inf: None,
            }
        }
    };
    if let Some(g) = a.grid {
        spec.nx = g.nx;
        spec.ny = g.ny;
    }
    if let Some(w) = a.window {
        spec.window = w;
    }
    if !a.times.is_empty() {
        spec.times = a.times;
    }
    let table = sample_fields(&ckpt.model, &spec)?;
    write_csv(&table, &a.out)?;
    if a.vtk {
        for p in write_vtk(&table, &spec, &a.out)? {
            eprintln!("wrote {}", p.display());
        }
    }
    eprintln!("wrote {} rows to {}", table.n_rows(), a.out.display());
    Ok(())
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<()> {
    let ckpt = Checkpoint::load(&a.checkpoint)?;
    let reference = Reference::load(&a.reference)?;
    let p_inf = ckpt.case.as_ref().filter(|c| !c.geometry.solids.is_empty()).map(|c| c.p_inf);
    let report = evaluate(&ckpt.model, &reference, p_inf)?;
    let json = serde_json::to_string_pretty(&report).expect("reports serialise") + "\n";
    match a.out {
        Some(p) => write_atomic(&p, json.as_bytes()),
        None => {
            let _ = std::io::stdout().write_all(json.as_bytes());
            Ok(())
        }
    }
}

fn cmd_cases(dump: Option<String>) -> Result<()> {
    match dump {
        Some(id) => print!("{}", case_to_toml(&build_case(CaseId::parse(&id)?, &Overrides::default())?)),
        None => {
            for (id, desc) in registry() {
                println!("{:<18} {desc}", id.name());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Export(a) => cmd_export(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Cases { dump } => cmd_cases(dump),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
