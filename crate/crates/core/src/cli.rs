//! Command-line front end. Each subcommand is one pipeline stage and reads
//! or writes the CSV formats from [`crate::io`].

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::eval::{derive_seed, grid_search, sample_labeled_mask, TrialSpec};
use crate::graph::{build_knn_graph, graph_diagnostics};
use crate::io::{
    load_feature_table, load_heatmap, load_label_table, load_predictions, write_adjacency,
    write_feature_table, write_heatmap, write_predictions, LabeledDataset,
};
use crate::pca::{pca_fit, pca_transform};
use crate::pcc::{pcc_init, PccConfig};
use crate::synth::{gen_blobs, gen_moons};

#[derive(Debug, Parser)]
#[command(
    name = "pcc",
    version,
    about = "Particle competition and cooperation classifier"
)]
pub struct Cli {
    /// Worker threads for grid search and graph construction (default: all cores).
    #[arg(long, global = true, env = "PCC_THREADS")]
    threads: Option<usize>,

    /// Print the effective particle configuration as JSON.
    #[arg(long, global = true)]
    print_config: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit PCA on all rows and write the reduced Feature CSV.
    Pca(PcaArgs),
    /// Build the k-NN graph and report degrees and components.
    Graph(GraphArgs),
    /// Label the unlabeled rows (or, for a fully labeled file, a hidden subset).
    Classify(ClassifyArgs),
    /// Mean accuracy over a (p, k) grid, written as a heatmap.
    GridSearch(GridArgs),
    /// Generate a synthetic Feature CSV.
    #[command(subcommand)]
    Synth(SynthCommand),
    /// Summarize a heatmap or score a prediction file.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Feature CSV (`id,label,f0,...`).
    #[arg(long)]
    features: PathBuf,

    /// Optional `id,label` CSV replacing the labels of the feature file.
    #[arg(long)]
    labels_from: Option<PathBuf>,
}

impl InputArgs {
    fn load(&self) -> anyhow::Result<LabeledDataset> {
        let dataset = load_feature_table(&self.features).context("loading features")?;
        match &self.labels_from {
            Some(path) => {
                let table = load_label_table(path).context("loading labels")?;
                dataset.relabel(&table).context("applying labels")
            }
            None => Ok(dataset),
        }
    }
}

#[derive(Debug, Args)]
struct DynamicsArgs {
    /// RNG seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Probability of the greedy movement rule.
    #[arg(long, default_value_t = PccConfig::default().p_grd)]
    pgrd: f64,
    /// Domination change rate.
    #[arg(long, default_value_t = PccConfig::default().delta_v)]
    deltav: f64,
    /// Exponent of the inverse distance-to-home factor.
    #[arg(long, default_value_t = PccConfig::default().dist_exponent)]
    dist_exponent: f64,
    /// Sweep cap [default: ceil(500000 / particles), at least 10000].
    #[arg(long)]
    max_sweeps: Option<usize>,
    /// Convergence threshold on the change of mean max domination.
    #[arg(long, default_value_t = PccConfig::default().conv_epsilon)]
    conv_eps: f64,
    /// Sweeps between convergence checks.
    #[arg(long, default_value_t = PccConfig::default().conv_check_interval)]
    conv_interval: usize,
}

impl DynamicsArgs {
    fn config(&self) -> PccConfig {
        PccConfig {
            p_grd: self.pgrd,
            delta_v: self.deltav,
            dist_exponent: self.dist_exponent,
            max_sweeps: self.max_sweeps,
            conv_epsilon: self.conv_eps,
            conv_check_interval: self.conv_interval,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Args)]
struct PcaArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Number of principal components to keep.
    #[arg(long, default_value_t = 10)]
    p: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct GraphArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Reduce to this many principal components first (default: raw features).
    #[arg(long)]
    p: Option<usize>,
    /// Neighbors per node.
    #[arg(long, default_value_t = 7)]
    k: usize,
    /// Adjacency dump (`id: n1 n2 ...`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ClassifyArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Principal components used for the graph.
    #[arg(long, default_value_t = 10)]
    p: usize,
    /// Neighbors per node.
    #[arg(long, default_value_t = 7)]
    k: usize,
    /// Share of each class kept labeled when the input is fully labeled.
    #[arg(long, default_value_t = 0.1)]
    fraction: f64,
    #[command(flatten)]
    dynamics: DynamicsArgs,
    /// Newline-delimited JSON trace, one record per sweep.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Prediction CSV.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct GridArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Share of each class given as labeled seeds.
    #[arg(long, default_value_t = 0.1)]
    fraction: f64,
    /// Trials per cell.
    #[arg(long, default_value_t = 100)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    pmin: usize,
    #[arg(long, default_value_t = 20)]
    pmax: usize,
    #[arg(long, default_value_t = 1)]
    kmin: usize,
    #[arg(long, default_value_t = 20)]
    kmax: usize,
    /// Feature-extractor name used in the summary line.
    #[arg(long, default_value = "features")]
    tag: String,
    #[command(flatten)]
    dynamics: DynamicsArgs,
    /// Heatmap CSV of mean accuracy.
    #[arg(long)]
    out: PathBuf,
    /// Optional JSON dump with per-cell mean, stddev and repetitions.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum SynthCommand {
    /// Isotropic Gaussian clusters.
    Blobs {
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        classes: usize,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// Center distance in units of sigma.
        #[arg(long, default_value_t = 6.0)]
        separation: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Two interleaved half-circles.
    Moons {
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long, default_value_t = 0.05)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Heatmap CSV to summarize.
    #[arg(long)]
    heatmap: Option<PathBuf>,
    /// Prediction CSV to score.
    #[arg(long)]
    predictions: Option<PathBuf>,
    /// Feature CSV supplying ground truth for `--predictions`.
    #[arg(long)]
    features: Option<PathBuf>,
}

/// Parses `argv` (including the program name), runs it, and returns the exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn execute(cli: Cli) -> anyhow::Result<()> {
    if cli.print_config {
        let config = match &cli.command {
            Some(Command::Classify(a)) => a.dynamics.config(),
            Some(Command::GridSearch(a)) => a.dynamics.config(),
            _ => PccConfig::default(),
        };
        println!("{}", serde_json::to_string_pretty(&config)?);
    }
    let Some(command) = cli.command else {
        if cli.print_config {
            return Ok(());
        }
        bail!("no subcommand given (see --help)");
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(threads) = cli.threads {
        if threads == 0 {
            bail!("--threads must be at least 1");
        }
        pool = pool.num_threads(threads);
    }
    let pool = pool.build().context("starting thread pool")?;
    pool.install(|| match command {
        Command::Pca(args) => pca(args),
        Command::Graph(args) => graph(args),
        Command::Classify(args) => classify(args),
        Command::GridSearch(args) => grid(args),
        Command::Synth(args) => synth(args),
        Command::Report(args) => report(args),
    })
}

/// Fits PCA and projects, clamping `p` to what the data supports.
fn reduce(dataset: &LabeledDataset, p: usize) -> anyhow::Result<LabeledDataset> {
    let model = pca_fit(&dataset.features, p).context("pca")?;
    if model.p_max() < p {
        log::warn!("p = {p} exceeds the {} available components", model.p_max());
    }
    let z = pca_transform(&model, &dataset.features, p.min(model.p_max())).context("pca")?;
    Ok(dataset.with_features(z)?)
}

fn pca(args: PcaArgs) -> anyhow::Result<()> {
    let dataset = args.input.load()?;
    let model = pca_fit(&dataset.features, args.p).context("pca")?;
    let p = args.p.min(model.p_max());
    let reduced = dataset.with_features(pca_transform(&model, &dataset.features, p)?)?;
    write_feature_table(&reduced, &args.out).context("writing reduced features")?;
    let variance: Vec<String> = model
        .explained_variance()
        .iter()
        .map(|v| format!("{v:.6}"))
        .collect();
    println!(
        "components={p} explained_variance=[{}]",
        variance.join(", ")
    );
    Ok(())
}

fn graph(args: GraphArgs) -> anyhow::Result<()> {
    let mut dataset = args.input.load()?;
    if let Some(p) = args.p {
        dataset = reduce(&dataset, p)?;
    }
    let g = build_knn_graph(&dataset.features, args.k).context("graph")?;
    if let Some(path) = &args.out {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let mut out = BufWriter::new(file);
        write_adjacency(&g, Some(dataset.features.ids()), &mut out)?;
        out.flush()?;
    }
    println!("{}", graph_diagnostics(&g));
    Ok(())
}

fn open_trace(path: &Path) -> anyhow::Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn classify(args: ClassifyArgs) -> anyhow::Result<()> {
    let dataset = args.input.load()?;
    let reduced = reduce(&dataset, args.p)?;
    let g = build_knn_graph(&reduced.features, args.k).context("graph")?;
    let report = graph_diagnostics(&g);
    if report.component_count() > 1 {
        log::warn!("k-NN graph has {} components", report.component_count());
    }

    let base = args.dynamics.config();
    // a fully labeled file is scored by hiding all but a stratified subset
    let (labels, truth, config) = if dataset.is_fully_labeled() {
        let truth = dataset.truth()?;
        let mask = sample_labeled_mask(
            &truth,
            dataset.num_classes(),
            args.fraction,
            derive_seed(base.seed, &[0]),
        )?;
        let labels = truth
            .iter()
            .zip(&mask)
            .map(|(&c, &m)| m.then_some(c))
            .collect();
        let config = PccConfig {
            seed: derive_seed(base.seed, &[1]),
            ..base
        };
        (labels, Some((truth, mask)), config)
    } else {
        (dataset.labels.clone(), None, base)
    };

    let mut state = pcc_init(&g, &labels, dataset.num_classes(), &config).context("pcc")?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let prediction = match &args.trace {
        Some(path) => {
            let mut out = open_trace(path)?;
            state.run(&mut rng, Some(&mut out))
        }
        None => state.run(&mut rng, None),
    }
    .context("pcc")?;
    write_predictions(&dataset, &prediction, &args.out).context("writing predictions")?;

    let seeds = labels.iter().filter(|l| l.is_some()).count();
    print!(
        "items={} labeled={} sweeps={} converged={}",
        dataset.n(),
        seeds,
        prediction.sweeps,
        prediction.converged
    );
    if let Some((truth, mask)) = truth {
        let acc = crate::eval::accuracy(&prediction, &truth, &mask)?;
        print!(" accuracy={acc:.4}");
    }
    println!();
    Ok(())
}

fn grid(args: GridArgs) -> anyhow::Result<()> {
    let dataset = args.input.load()?;
    let spec = TrialSpec {
        labeled_fraction: args.fraction,
        repetitions: args.reps,
        p_range: args.pmin..=args.pmax,
        k_range: args.kmin..=args.kmax,
        base_seed: args.dynamics.seed,
    };
    let result = grid_search(&dataset, &spec, &args.dynamics.config()).context("grid search")?;
    write_heatmap(&result, &args.out).context("writing heatmap")?;
    if let Some(path) = &args.json {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        serde_json::to_writer_pretty(BufWriter::new(file), &result)?;
    }
    println!("{}", result.summary_line(args.fraction, &args.tag));
    Ok(())
}

fn synth(command: SynthCommand) -> anyhow::Result<()> {
    let (dataset, out) = match command {
        SynthCommand::Blobs {
            n,
            classes,
            dim,
            separation,
            sigma,
            seed,
            out,
        } => (gen_blobs(n, classes, dim, separation, sigma, seed)?, out),
        SynthCommand::Moons {
            n,
            noise,
            seed,
            out,
        } => (gen_moons(n, noise, seed)?, out),
    };
    write_feature_table(&dataset, &out).context("writing features")?;
    println!(
        "items={} classes={} dim={}",
        dataset.n(),
        dataset.num_classes(),
        dataset.features.dim()
    );
    Ok(())
}

fn report(args: ReportArgs) -> anyhow::Result<()> {
    if args.heatmap.is_none() && args.predictions.is_none() {
        bail!("report needs --heatmap and/or --predictions");
    }
    if let Some(path) = &args.heatmap {
        let heatmap = load_heatmap(path).context("loading heatmap")?;
        let (p, k, mean) = heatmap.best().context("empty heatmap")?;
        println!(
            "grid={}x{} best p={p} k={k} accuracy={:.2}%",
            heatmap.p_values.len(),
            heatmap.k_values.len(),
            mean * 100.0
        );
    }
    if let Some(path) = &args.predictions {
        let table = load_predictions(path).context("loading predictions")?;
        let Some(features) = &args.features else {
            println!("items={}", table.ids.len());
            return Ok(());
        };
        let truth = load_feature_table(features).context("loading features")?;
        let by_id: std::collections::HashMap<&str, &str> = table
            .ids
            .iter()
            .map(String::as_str)
            .zip(table.labels.iter().map(String::as_str))
            .collect();
        let (mut correct, mut total) = (0usize, 0usize);
        for (id, label) in truth.features.ids().iter().zip(&truth.labels) {
            let Some(class) = label else { continue };
            let predicted = by_id
                .get(id.as_str())
                .with_context(|| format!("no prediction for {id:?}"))?;
            total += 1;
            correct += usize::from(*predicted == truth.classes[*class]);
        }
        if total == 0 {
            bail!("feature file has no labels to compare against");
        }
        println!(
            "items={total} agreement={:.4}",
            correct as f64 / total as f64
        );
    }
    Ok(())
}
