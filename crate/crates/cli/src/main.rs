use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use sfa_core::experiment::{run_tables, ExperimentPlan};
use sfa_core::lab::{
    align, correlation, driving_force, embed, load_series, logistic_series, write_columns_csv,
    write_series_csv, EmbeddingSpec, Forcing, LogisticConfig,
};
use sfa_core::sfa::{
    apply_model, load_model, prepare, save_model, train_from, Method, PreprocessOptions,
    TrainOptions,
};
use sfa_core::spectra::DEFAULT_EPSILON;
use sfa_core::SfaError;

#[derive(Parser)]
#[command(name = "sfa", version, about = "Slow feature analysis on driven logistic-map series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a driven logistic-map series as `t,value` CSV
    Gen(GenArgs),
    /// Embed a series, train a model and save it
    Train(TrainArgs),
    /// Apply a saved model to a series
    Apply(ApplyArgs),
    /// Run the parameter sweeps and write the CSV tables
    Tables(TablesArgs),
}

#[derive(Args)]
struct MapArgs {
    #[arg(long, default_value_t = 1.2)]
    q: f64,
    #[arg(long, default_value_t = 6000)]
    length: usize,
    #[arg(long = "burn-in", default_value_t = LogisticConfig::default().burn_in)]
    burn_in: usize,
    #[arg(long, default_value_t = LogisticConfig::default().w0)]
    w0: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    map: MapArgs,
    /// Standard deviation of additive Gaussian noise
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Output file; standard output when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 1)]
    tau: usize,
    #[arg(long, default_value = "svd", value_parser = ["gen", "svd"])]
    method: String,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    eps: f64,
    /// Preprocessed dimension; defaults to every input direction above the floor
    #[arg(long)]
    n: Option<usize>,
    /// Model file
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ApplyArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 1)]
    tau: usize,
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Append the driving force aligned to y1
    #[arg(long)]
    align: bool,
    /// Output file; standard output when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write `t,y1,gamma_aligned` traces to this file
    #[arg(long = "plot-data")]
    plot_data: Option<PathBuf>,
}

#[derive(Args)]
struct TablesArgs {
    #[command(flatten)]
    map: MapArgs,
    #[arg(long, default_value_t = 1)]
    tau: usize,
    /// Embedding dimensions (repeatable)
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    m: Vec<usize>,
    /// Noise amplitudes (repeatable)
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    noise: Vec<f64>,
    /// Cutoff; further values are compared against the first in epsilon.csv
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    eps: Vec<f64>,
    /// Methods (repeatable)
    #[arg(long, num_args = 1.., value_delimiter = ',', value_parser = ["gen", "svd"])]
    method: Vec<String>,
    /// Output directory
    #[arg(long, default_value = "tables")]
    out: PathBuf,
}

fn method(name: &str) -> Result<Method> {
    Ok(name.parse::<Method>()?)
}

fn open_out(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn map_config(map: &MapArgs, noise: f64) -> LogisticConfig {
    LogisticConfig {
        q: map.q,
        length: map.length,
        w0: map.w0,
        burn_in: map.burn_in,
        noise_sigma: noise,
        seed: map.seed,
        forcing: Forcing::Sine,
    }
}

fn cmd_gen(args: GenArgs) -> Result<()> {
    let cfg = map_config(&args.map, args.noise);
    let series = logistic_series(&cfg)?;
    let echo = format!(
        "q={} length={} burn_in={} w0={} noise={} seed={}",
        cfg.q, cfg.length, cfg.burn_in, cfg.w0, cfg.noise_sigma, cfg.seed
    );
    let mut out = open_out(&args.out)?;
    write_series_csv(&series, &mut out)?;
    out.flush()?;
    match &args.out {
        Some(p) => println!("{echo}\nwrote {} samples to {}", series.len(), p.display()),
        None => eprintln!("{echo}"),
    }
    Ok(())
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let method = method(&args.method)?;
    let series = load_series(&args.input)
        .with_context(|| format!("cannot read series {}", args.input.display()))?;
    let emb = embed(&series.values, EmbeddingSpec::new(args.m, args.tau)?)?;
    let opts = TrainOptions {
        method,
        epsilon: args.eps,
        preprocess: PreprocessOptions {
            dim: args.n,
            ..Default::default()
        },
        chunk_len: None,
    };
    let (pre, moments) = prepare(&emb.vectors, &opts)?;
    let model = train_from(&pre, &moments, method, args.eps)?;
    save_model(&model, &args.out)
        .with_context(|| format!("cannot write model {}", args.out.display()))?;

    let label = match method {
        Method::SvdSfa => "P",
        Method::GenEig => "N_G",
    };
    println!("method={} eps={:e} m={} tau={}", model.method, model.epsilon, args.m, args.tau);
    println!("n={} M={}", pre.output_dim(), model.expanded_dim());
    println!(
        "rank(B)={} rank_eps(B)={}",
        model.machine_rank, model.rank_of_b
    );
    println!("{label}={}", model.components());
    let lambdas: Vec<String> = model
        .eigenvalues
        .iter()
        .take(5)
        .map(|l| format!("{l:.6e}"))
        .collect();
    println!("lambda_1..5={}", lambdas.join(","));
    println!(
        "stability={}",
        if model.unstable {
            "UNSTABLE (rank-deficient B)"
        } else {
            "ok"
        }
    );
    println!("model written to {}", args.out.display());
    Ok(())
}

fn cmd_apply(args: ApplyArgs) -> Result<()> {
    let model = load_model(&args.model)
        .with_context(|| format!("cannot load model {}", args.model.display()))?;
    let series = load_series(&args.input)
        .with_context(|| format!("cannot read series {}", args.input.display()))?;
    let emb = embed(&series.values, EmbeddingSpec::new(model.input_dim(), args.tau)?)?;
    let y = apply_model(&model, &emb.vectors, args.k)?;

    let mut names: Vec<String> = (1..=args.k).map(|j| format!("y{j}")).collect();
    let mut columns = y.clone();
    let needs_alignment = args.align || args.plot_data.is_some();
    let alignment = if needs_alignment {
        let force: Vec<f64> = emb.centers.iter().map(|&t| driving_force(t as f64)).collect();
        let y1: Vec<f64> = y.column(0).iter().copied().collect();
        let al = align(&force, &y1)?;
        let corr = correlation(&force, &y1)?;
        Some((al, corr))
    } else {
        None
    };

    if let (true, Some((al, _))) = (args.align, &alignment) {
        names.push("gamma_aligned".into());
        columns = columns.insert_column(args.k, 0.0);
        columns.column_mut(args.k).copy_from_slice(&al.aligned);
    }
    let mut out = open_out(&args.out)?;
    write_columns_csv(&mut out, &names, &emb.centers, &columns)?;
    out.flush()?;
    drop(out);

    if let Some(path) = &args.plot_data {
        let (al, _) = alignment.as_ref().expect("alignment computed for plot data");
        let trace = DMatrix::from_fn(y.nrows(), 2, |t, c| if c == 0 { y[(t, 0)] } else { al.aligned[t] });
        let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
        write_columns_csv(
            BufWriter::new(file),
            &["y1".into(), "gamma_aligned".into()],
            &emb.centers,
            &trace,
        )?;
    }
    if let Some((al, corr)) = alignment {
        let msg = format!("a={:.6e} b={:.6e} mse={:.6e} corr={:.6}", al.a, al.b, al.mse, corr);
        if args.out.is_some() {
            println!("{msg}");
        } else {
            eprintln!("{msg}");
        }
    }
    Ok(())
}

fn cmd_tables(args: TablesArgs) -> Result<()> {
    let mut plan = ExperimentPlan {
        q: args.map.q,
        length: args.map.length,
        burn_in: args.map.burn_in,
        w0: args.map.w0,
        seed: args.map.seed,
        tau: args.tau,
        ..Default::default()
    };
    if !args.m.is_empty() {
        plan.m_list = args.m;
    }
    if !args.noise.is_empty() {
        plan.sigma_list = args.noise;
    }
    if let Some((&first, rest)) = args.eps.split_first() {
        plan.epsilon = first;
        if !rest.is_empty() {
            plan.epsilon_list = rest.to_vec();
        }
    }
    if !args.method.is_empty() {
        plan.methods = args.method.iter().map(|m| method(m)).collect::<Result<_>>()?;
    }
    let tables = run_tables(&plan)?;
    tables
        .write_to(&args.out)
        .with_context(|| format!("cannot write tables to {}", args.out.display()))?;
    for (name, _) in tables.files() {
        println!("{}", args.out.join(name).display());
    }
    Ok(())
}

/// Validation failures exit with 2, everything else with 1.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<SfaError>() {
        Some(
            SfaError::InvalidParameter(_)
            | SfaError::TooManyComponents { .. }
            | SfaError::DimensionMismatch { .. }
            | SfaError::UnachievableDimension { .. },
        ) => 2,
        _ => 1,
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        let io = c.downcast_ref::<std::io::Error>().or_else(|| match c.downcast_ref::<SfaError>() {
            Some(SfaError::Io(io)) => Some(io),
            _ => None,
        });
        io.is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Train(a) => cmd_train(a),
        Command::Apply(a) => cmd_apply(a),
        Command::Tables(a) => cmd_tables(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
