use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};

use boltzmann_core::bench::{bench_collision, format_bench_csv, write_bench_csv};
use boltzmann_core::collision::CollisionOperator;
use boltzmann_core::config::{parse_config, SolverConfig};
use boltzmann_core::run::{obtain_table, Simulation};
use boltzmann_core::weights::{read_header, GenerationMethod, WeightTable};
use boltzmann_core::{Error, Result};

#[derive(Parser)]
#[command(name = "boltzmann", version, about = "Conservative spectral Boltzmann solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured scenario and write CSV output.
    Solve {
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Generate the weight table and save it to `weight_cache`.
    GenWeights { config: PathBuf },
    /// Time single collision evaluations for several worker counts.
    Bench {
        config: PathBuf,
        /// Comma-separated worker counts.
        #[arg(long, value_delimiter = ',', default_value = "1")]
        workers: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        repetitions: usize,
        /// Also write the table to this CSV file.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print the header of a weight cache file.
    InspectWeights { cache: PathBuf },
}

fn load_config(path: &Path) -> Result<SolverConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    parse_config(&text)
}

fn solve(path: &Path, output_dir: Option<PathBuf>) -> Result<()> {
    let mut config = load_config(path)?;
    if let Some(dir) = output_dir {
        config.output_dir = dir;
    }
    let dir = config.output_dir.clone();
    let sim = Simulation::new(config)?;
    if let Some(record) = sim.run()? {
        record.write(&dir)?;
        println!(
            "{} steps of dt = {:e} on {} rank(s) x {} worker(s); mean step {:.3e} s; max mass residual {:.3e}",
            record.steps,
            record.dt,
            record.ranks,
            record.workers,
            record.mean_step_seconds(),
            record.max_mass_residual()
        );
        println!("output written to {}", dir.display());
    }
    Ok(())
}

fn gen_weights(path: &Path) -> Result<()> {
    let config = load_config(path)?;
    let cache = config
        .weight_cache
        .clone()
        .ok_or_else(|| Error::MissingKeys("weight_cache (needed by gen-weights)".into()))?;
    if cache.exists() {
        std::fs::remove_file(&cache).map_err(|e| Error::Io {
            path: cache.clone(),
            source: e,
        })?;
    }
    let table = obtain_table(&config)?;
    println!(
        "wrote {} ({} entries, {:.1} MiB)",
        cache.display(),
        table.values().len(),
        WeightTable::required_bytes(table.n()) as f64 / (1024.0 * 1024.0)
    );
    Ok(())
}

fn bench(path: &Path, workers: &[usize], repetitions: usize, output: Option<PathBuf>) -> Result<()> {
    let config = load_config(path)?;
    let grid = config.velocity_grid()?;
    let table = Arc::new(obtain_table(&config)?);
    let f = config.scenario()?.initial.sample(&grid)?;
    let operator = CollisionOperator::new(grid, table)?;
    let rows = bench_collision(&operator, &f, workers, repetitions)?;
    print!("{}", format_bench_csv(&rows));
    if let Some(out) = output {
        write_bench_csv(&rows, out)?;
    }
    Ok(())
}

fn inspect(path: &Path) -> Result<()> {
    let h = read_header(path)?;
    println!("version          {}", h.version);
    println!("N                {}", h.n);
    println!("L                {:?}", h.half_width);
    println!("lambda           {:?}", h.lambda);
    println!("beta             {:?}", h.beta);
    println!("cut-off radius   {:?}", h.r0);
    match h.method {
        GenerationMethod::ClosedForm => println!("method           closed form"),
        GenerationMethod::Quadrature { nodes } => println!("method           quadrature, {nodes} radial nodes"),
    }
    println!("entries          {}", h.count);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve { config, output_dir } => solve(&config, output_dir),
        Command::GenWeights { config } => gen_weights(&config),
        Command::Bench {
            config,
            workers,
            repetitions,
            output,
        } => bench(&config, &workers, repetitions, output),
        Command::InspectWeights { cache } => inspect(&cache),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let category = e.category();
            eprintln!("error [{}]: {e}", category.name());
            ExitCode::from(category.code() as u8)
        }
    }
}
