use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use blockcount::{
    load_edge_list, report_fit, run_replications, run_sensitivity, select_k, summarize,
    write_summary_csv, Design, EdgeListFormat, FitOptions, ModelConfig, SelectionConfig,
    SimulationConfig, SummaryRow, ThetaLaw,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(
    name = "blockcount",
    version,
    about = "Estimate the number of communities in a network"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate K for an edge-list network.
    Estimate(EstimateArgs),
    /// Replicate generate-then-estimate runs and summarise them.
    Simulate(SimulateArgs),
    /// Like `simulate`, summarised at several threshold constants.
    Sensitivity(SensitivityArgs),
}

#[derive(Args)]
struct SelectionArgs {
    #[arg(long, default_value_t = 10)]
    kmax: usize,
    #[arg(long, default_value_t = 0.05)]
    c_eta: f64,
    #[arg(long, default_value_t = 1.0)]
    c_h: f64,
    /// Regulariser; defaults to the average degree.
    #[arg(long)]
    tau: Option<f64>,
    /// Floor for block edge counts, to keep zero blocks from aborting a fit.
    #[arg(long)]
    epsilon_floor: Option<f64>,
    #[arg(long, default_value_t = 20)]
    restarts: usize,
    /// Minimum size of a freshly split group, as a fraction of n. 0 disables.
    #[arg(long, default_value_t = 0.0)]
    min_group_frac: f64,
}

impl SelectionArgs {
    fn config(&self) -> SelectionConfig {
        SelectionConfig {
            k_max: self.kmax,
            c_eta: self.c_eta,
            c_h: self.c_h,
            tau: self.tau,
            restarts: self.restarts,
            min_group_frac: self.min_group_frac,
            fit: FitOptions {
                epsilon_floor: self.epsilon_floor,
            },
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Whitespace,
    Csv,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Whitespace)]
    format: Format,
    #[command(flatten)]
    selection: SelectionArgs,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Also write eigenvalues and the embedding rows used at K2.
    #[arg(long)]
    dump_spectrum: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum DesignArg {
    S1,
    S2,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Sbm,
    Dcsbm,
}

#[derive(Clone, Copy, ValueEnum)]
enum ThetaArg {
    Uniform,
    Pareto,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    design: DesignArg,
    #[arg(long, value_enum)]
    model: ModelArg,
    /// Degree parameter law for the DCSBM.
    #[arg(long, value_enum, default_value_t = ThetaArg::Uniform)]
    theta_law: ThetaArg,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    k0: usize,
    #[arg(long, default_value_t = 50)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Draw one design-2 block matrix for all replications.
    #[arg(long)]
    fixed_block: bool,
    #[command(flatten)]
    selection: SelectionArgs,
    #[arg(long)]
    out: PathBuf,
}

impl SimulateArgs {
    fn config(&self) -> anyhow::Result<SimulationConfig> {
        let design = match self.design {
            DesignArg::S1 => Design::S1,
            DesignArg::S2 => Design::S2,
        };
        if matches!(design, Design::S1) && self.rho.is_none() {
            bail!("--rho is required for design s1");
        }
        let theta_law = match (self.model, self.theta_law) {
            (ModelArg::Sbm, _) => ThetaLaw::Constant,
            (ModelArg::Dcsbm, ThetaArg::Uniform) => ThetaLaw::Uniform,
            (ModelArg::Dcsbm, ThetaArg::Pareto) => ThetaLaw::Pareto,
        };
        Ok(SimulationConfig {
            model: ModelConfig {
                design,
                k0: self.k0,
                n: self.n,
                rho: self.rho,
                theta_law,
                membership_probs: None,
                seed: self.seed,
                redraw_block: !self.fixed_block,
            },
            replications: self.reps,
            selection: self.selection.config(),
        })
    }
}

#[derive(Args)]
struct SensitivityArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    c_h_grid: Vec<f64>,
    #[command(flatten)]
    simulate: SimulateArgs,
}

fn create(dir: &Path, name: &str) -> anyhow::Result<BufWriter<File>> {
    let path = dir.join(name);
    let file = File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn estimate(args: &EstimateArgs) -> anyhow::Result<()> {
    let format = match args.format {
        Format::Whitespace => EdgeListFormat::Whitespace,
        Format::Csv => EdgeListFormat::Csv,
    };
    let graph = load_edge_list(&args.input, format)?;
    let adj = &graph.adjacency;
    log::info!("loaded {} nodes and {} edges", adj.n(), adj.edge_count());
    let cfg = args.selection.config();
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let trace = select_k(adj, &cfg, &mut rng)?;

    fs::create_dir_all(&args.out)
        .with_context(|| format!("cannot create {}", args.out.display()))?;
    trace.write_json(create(&args.out, "trace.json")?)?;
    graph
        .nodes
        .write_json(create(&args.out, "node_map.json")?)?;
    let partition = trace
        .partition(trace.k2)
        .with_context(|| format!("no partition recorded for K = {}", trace.k2))?;
    partition.write_csv(create(&args.out, "partition.csv")?, Some(&graph.nodes))?;
    report_fit(adj, partition)?.write_csv(create(&args.out, "block_matrix.csv")?)?;
    if args.dump_spectrum {
        let tau = trace.tau;
        let embedding = blockcount::eigendecompose(&blockcount::regularized_laplacian(adj, tau)?)?;
        embedding.write_eigenvalues_csv(create(&args.out, "eigenvalues.csv")?)?;
        embedding
            .embedding_rows(trace.k2)?
            .write_csv(create(&args.out, "embedding.csv")?)?;
    }
    println!("K1={} K2={}", trace.k1, trace.k2);
    Ok(())
}

fn write_rows(rows: &[SummaryRow], dir: &Path, name: &str) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    write_summary_csv(rows, create(dir, name)?)?;
    for r in rows {
        println!(
            "{} c_h={} mean={:.3} prop={:.3} failures={}/{}",
            r.estimator, r.c_h, r.mean, r.prop, r.failures, r.replications
        );
    }
    Ok(())
}

fn simulate(args: &SimulateArgs) -> anyhow::Result<()> {
    let cfg = args.config()?;
    let outcomes = run_replications(&cfg)?;
    let rows = summarize(&cfg, &outcomes, cfg.selection.c_h)?;
    write_rows(&rows, &args.out, "summary.csv")
}

fn sensitivity(args: &SensitivityArgs) -> anyhow::Result<()> {
    let cfg = args.simulate.config()?;
    let rows = run_sensitivity(&cfg, &args.c_h_grid)?;
    write_rows(&rows, &args.simulate.out, "summary.csv")
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(value) = std::env::var("BLOCKCOUNT_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .with_context(|| format!("BLOCKCOUNT_THREADS must be a positive integer, got {value:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()?;
    Ok(())
}

/// Missing or unreadable input is a usage error.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<blockcount::Error>() {
        Some(blockcount::Error::Io { .. }) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::Estimate(a) => estimate(a),
        Command::Simulate(a) => simulate(a),
        Command::Sensitivity(a) => sensitivity(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
