use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::{error, info};

use magfrac::config::{preset_names, CaseConfig};
use magfrac::driver::Runner;
use magfrac::mesh::gmsh;
use magfrac::{mms, output};

const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;

#[derive(Parser)]
#[command(name = "magfrac", version, about = "Magnetostriction-driven phase-field fracture in 2D")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a case and write the time series and VTK snapshots.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Manufactured-solution convergence study of the magnetic operator.
    Mms {
        #[arg(long, default_value_t = 1)]
        order: usize,
        #[arg(long, default_value_t = 4)]
        levels: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Mesh inspection.
    Mesh {
        #[command(subcommand)]
        command: MeshCommand,
    },
    /// Built-in case presets.
    Presets {
        #[command(subcommand)]
        command: PresetCommand,
    },
}

#[derive(Subcommand)]
enum MeshCommand {
    /// Print counts, subdomains and edge lengths of a Gmsh file.
    Info { file: PathBuf },
}

#[derive(Subcommand)]
enum PresetCommand {
    /// List preset names.
    List,
    /// Print the resolved configuration of a preset.
    Show { name: String },
}

enum Failure {
    Config(String),
    Solver(String),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Run { config, out } => run(&config, &out),
        Command::Mms { order, levels, out } => run_mms(order, levels, &out),
        Command::Mesh {
            command: MeshCommand::Info { file },
        } => mesh_info(&file),
        Command::Presets {
            command: PresetCommand::List,
        } => {
            for name in preset_names() {
                println!("{name}");
            }
            Ok(())
        }
        Command::Presets {
            command: PresetCommand::Show { name },
        } => CaseConfig::preset(&name)
            .map(|c| print!("{}", c.to_toml()))
            .map_err(|e| Failure::Config(e.to_string())),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            error!("{msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Solver(msg)) => {
            error!("{msg}");
            ExitCode::from(EXIT_SOLVER)
        }
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| Failure::Solver(format!("cannot write {}: {e}", path.display()))
}

fn run(config: &Path, out: &Path) -> Result<(), Failure> {
    let cfg = CaseConfig::from_file(config).map_err(|e| Failure::Config(e.to_string()))?;
    let case = cfg.into_case().map_err(|e| Failure::Config(e.to_string()))?;
    info!(
        "mesh: {} nodes, {} cells; {} steps of {} s",
        case.mesh.num_nodes(),
        case.mesh.num_cells(),
        cfg.solver.num_steps(),
        cfg.solver.dt
    );
    let mut runner = Runner::new(&case, cfg.solver.clone()).map_err(|e| Failure::Config(e.to_string()))?;
    let every = if cfg.output.vtk { cfg.output.every } else { 0 };
    let result = runner.run_with(every, |view| {
        let d = view.diagnostics;
        info!(
            "step {} t={:.4e} stagger={} A_ave={:.4e} max_d={:.4}",
            d.step, d.t, d.stagger_iters, d.a_ave_solid, d.max_d
        );
    });
    std::fs::create_dir_all(out).map_err(io_err(out))?;
    std::fs::write(out.join("config.toml"), cfg.to_toml()).map_err(io_err(out))?;
    if cfg.output.csv {
        let p = out.join("timeseries.csv");
        output::write_timeseries(&result.diagnostics, &p).map_err(io_err(&p))?;
    }
    if cfg.output.vtk {
        for s in &result.snapshots {
            let p = out.join(format!("step_{:05}.vtk", s.step));
            output::write_vtk(&case.mesh, s, &cfg.output.fields, &p).map_err(io_err(&p))?;
        }
    }
    match result.failure {
        Some(e) => Err(Failure::Solver(e.to_string())),
        None => Ok(()),
    }
}

fn run_mms(order: usize, levels: usize, out: &Path) -> Result<(), Failure> {
    let table = mms::mms_study(order, levels).map_err(|e| match e {
        mms::MmsError::Magnetics(e) => Failure::Solver(e.to_string()),
        other => Failure::Config(other.to_string()),
    })?;
    let csv = mms::to_csv(&table);
    print!("{csv}");
    output::write_atomic(out, csv.as_bytes()).map_err(io_err(out))
}

fn mesh_info(file: &Path) -> Result<(), Failure> {
    let mesh = gmsh::load_mesh(file).map_err(|e| Failure::Config(e.to_string()))?;
    let (lo, hi) = mesh.edge_length_range();
    println!("order: {}", mesh.order());
    println!("nodes: {}", mesh.num_nodes());
    println!("cells: {}", mesh.num_cells());
    println!("boundary edges: {}", mesh.boundary_edges().len());
    println!("edge length: min {lo:.6e}, max {hi:.6e}");
    for tag in mesh.subdomains() {
        let n = mesh.cell_tags().iter().filter(|&&t| t == tag).count();
        println!("subdomain {tag}: {n} cells, area {:.6e}", mesh.area_of(tag));
    }
    Ok(())
}
