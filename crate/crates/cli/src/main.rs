use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use mvghash_core::experiments::{self, ALPHA_BETA_GRID};
use mvghash_core::io::{self, DatasetManifest, LoadOptions, NeighborCacheMeta, RunRecord, ViewPaths};
use mvghash_core::model::{HyperParams, MultiViewGraphDataset, SimilarityKind};
use mvghash_core::retrieval::{self, DEFAULT_CUTOFFS};
use mvghash_core::synthetic::{sbm_dataset, SbmConfig};
use mvghash_core::trainer::{self, TrainConfig, TrainOutcome};
use mvghash_core::{smooth, GradientMode, NeighborSets, NormalizedLaplacian};
use serde::Serialize;

/// Multi-view graph hashing: learn binary node codes and evaluate retrieval.
#[derive(Parser)]
#[command(name = "mvghash", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write graph-filtered attributes of every view.
    Filter {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        hp: HpArgs,
        #[command(flatten)]
        weights: SweptParams,
        /// Output directory; files are named view<v>.<ext>.
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, value_enum, default_value_t = FeatureFormat::Bin)]
        format: FeatureFormat,
    },
    /// Build per-view kNN sets and store them as a neighbor cache.
    Knn {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        hp: HpArgs,
        #[command(flatten)]
        weights: SweptParams,
        #[arg(long)]
        out: PathBuf,
        /// Use raw attributes instead of filtered ones.
        #[arg(long)]
        no_filter: bool,
    },
    /// Train and write codes, a run record and a JSON-lines training log.
    Train(TrainArgs),
    /// Train and write only the codes.
    Encode(TrainArgs),
    /// mAP@all and precision@r of stored codes.
    Eval {
        #[arg(long)]
        codes: PathBuf,
        #[command(flatten)]
        labels: LabelArgs,
        /// Comma-separated precision cutoffs.
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_CUTOFFS)]
        cutoffs: Vec<usize>,
    },
    /// Top-r nodes by Hamming distance for the given queries, one JSON line each.
    Retrieve {
        #[arg(long)]
        codes: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        query: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        top: usize,
    },
    /// Train the four ablation variants and print a CSV table.
    Ablate {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        hp: HpArgs,
        #[command(flatten)]
        weights: SweptParams,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Grid over alpha, beta and code length; prints a CSV.
    Sweep {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        hp: HpArgs,
        #[arg(long, value_delimiter = ',', default_values_t = ALPHA_BETA_GRID)]
        alpha: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = ALPHA_BETA_GRID)]
        beta: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [16usize])]
        bits: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a planted-partition dataset with a manifest.
    Synth {
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 3)]
        blocks: usize,
        #[arg(long, default_value_t = 50)]
        block_size: usize,
        #[arg(long, default_value_t = 0.3)]
        p_in: f64,
        #[arg(long, default_value_t = 0.02)]
        p_out: f64,
        #[arg(long, default_value_t = 2)]
        views: usize,
        #[arg(long, default_value_t = 8)]
        dim: usize,
        #[arg(long, default_value_t = 1.5)]
        noise_ratio: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FeatureFormat {
    Bin,
    Csv,
}

#[derive(Args)]
struct DataArgs {
    /// Dataset manifest (JSON).
    #[arg(long)]
    manifest: PathBuf,
    /// Scale attribute rows to unit L2 norm on load.
    #[arg(long)]
    row_normalize: bool,
}

impl DataArgs {
    fn options(&self) -> LoadOptions {
        LoadOptions {
            row_normalize: self.row_normalize,
        }
    }

    fn load(&self) -> Result<MultiViewGraphDataset> {
        io::load_dataset(&self.manifest, self.options())
            .with_context(|| format!("loading {}", self.manifest.display()))
    }
}

#[derive(Args)]
struct LabelArgs {
    /// Labels file, one integer per line.
    #[arg(long, conflicts_with = "manifest")]
    labels: Option<PathBuf>,
    /// Take labels from this dataset manifest.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

impl LabelArgs {
    fn load(&self) -> Result<Vec<u32>> {
        if let Some(path) = &self.labels {
            return Ok(io::read_labels(path)?);
        }
        let Some(manifest) = &self.manifest else {
            bail!("either --labels or --manifest is required");
        };
        let m = DatasetManifest::read(manifest)?;
        let Some(labels) = m.labels else {
            bail!("{} lists no labels file", manifest.display());
        };
        Ok(io::read_labels(&manifest.parent().unwrap_or(Path::new("")).join(labels))?)
    }
}

/// Hyperparameters. Flags override `--config`, which overrides defaults.
#[derive(Args)]
struct HpArgs {
    /// JSON file with any subset of the hyperparameter fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    sim: Option<SimilarityKind>,
    #[arg(long)]
    epochs_max: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Follow only the anchor terms of the contrastive gradient.
    #[arg(long)]
    anchor_only: bool,
}

/// The hyperparameters `sweep` takes as lists.
#[derive(Args, Default)]
struct SweptParams {
    /// Quantization loss weight.
    #[arg(long)]
    alpha: Option<f64>,
    /// Bit-balance loss weight.
    #[arg(long)]
    beta: Option<f64>,
    /// Code length.
    #[arg(long)]
    bits: Option<usize>,
}

impl HpArgs {
    fn hyperparams(&self, weights: &SweptParams) -> Result<HyperParams> {
        let mut hp = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            None => HyperParams::default(),
        };
        macro_rules! set {
            ($($f:ident = $src:expr),*) => {$(if let Some(v) = $src { hp.$f = v; })*};
        }
        set!(m = self.m, s = self.s, k = self.k, tau = self.tau, gamma = self.gamma, eta = self.eta,
             sim_kind = self.sim,
             epochs_max = self.epochs_max, tol = self.tol, lr = self.lr, seed = self.seed);
        if let Some(a) = weights.alpha {
            hp.alpha = a;
        }
        if let Some(b) = weights.beta {
            hp.beta = b;
        }
        if let Some(k) = weights.bits {
            hp.bits = k;
        }
        hp.validate()?;
        Ok(hp)
    }

    fn train_config(&self, weights: &SweptParams) -> Result<TrainConfig> {
        let mut cfg = TrainConfig::new(self.hyperparams(weights)?);
        if self.anchor_only {
            cfg.gradient = GradientMode::AnchorOnly;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    hp: HpArgs,
    #[command(flatten)]
    weights: SweptParams,
    /// Output code file.
    #[arg(long)]
    out: PathBuf,
    /// Reuse a neighbor cache written by `knn`.
    #[arg(long)]
    neighbors: Option<PathBuf>,
    /// Run record path (default: <out>.run.json).
    #[arg(long)]
    record: Option<PathBuf>,
    /// Training log path (default: <out>.log.jsonl).
    #[arg(long)]
    log: Option<PathBuf>,
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn csv_sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn load_neighbor_cache(path: &Path, cfg: &TrainConfig, ds: &MultiViewGraphDataset) -> Result<NeighborSets> {
    let (nbrs, meta) = io::load_neighbors(path)?;
    let want = NeighborCacheMeta {
        m: cfg.hp.m,
        s: cfg.hp.s,
        k: cfg.hp.k,
        filtered: cfg.use_filter,
    };
    if meta != want {
        bail!("neighbor cache {} was built with {meta:?}, training needs {want:?}", path.display());
    }
    if nbrs.n_views() != ds.n_views() {
        bail!("neighbor cache has {} views, dataset has {}", nbrs.n_views(), ds.n_views());
    }
    Ok(nbrs)
}

fn run_train(args: &TrainArgs, codes_only: bool) -> Result<()> {
    let started = Instant::now();
    let ds = args.data.load()?;
    let cfg = args.hp.train_config(&args.weights)?;
    let nbrs = match &args.neighbors {
        Some(p) => load_neighbor_cache(p, &cfg, &ds)?,
        None => trainer::prepare_neighbors(&ds, &cfg)?,
    };
    let mut log = if codes_only {
        None
    } else {
        let path = args.log.clone().unwrap_or_else(|| with_suffix(&args.out, ".log.jsonl"));
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        Some((path, BufWriter::new(file)))
    };
    let mut log_error = None;
    let out: TrainOutcome = trainer::train_on_neighbors(&ds, &nbrs, &cfg, |e| {
        if let Some((_, w)) = log.as_mut() {
            if let Err(err) = serde_json::to_writer(&mut *w, e).map_err(std::io::Error::from).and_then(|_| writeln!(w)) {
                log_error.get_or_insert(err);
            }
        }
    })?;
    if let Some(err) = log_error {
        return Err(err).context("writing training log");
    }
    io::save_codes(&out.codes, &args.out)?;
    let epochs = out.state.history.len();
    eprintln!(
        "trained {} nodes, {} bits in {epochs} epochs (converged: {})",
        ds.n_nodes, cfg.hp.bits, out.converged
    );
    if codes_only {
        return print_json(&serde_json::json!({ "codes": args.out, "epochs": epochs, "converged": out.converged }));
    }
    let (log_path, mut w) = log.take().expect("log opened for train");
    w.flush()?;
    let metrics = match &ds.labels {
        Some(labels) => Some(retrieval::evaluate(&out.codes, labels, &DEFAULT_CUTOFFS)?),
        None => None,
    };
    let record = RunRecord {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        manifest: args.data.manifest.clone(),
        dataset_digest: io::dataset_digest(&args.data.manifest)?,
        load_options: args.data.options(),
        config: cfg,
        codes_path: Some(args.out.clone()),
        log_path: Some(log_path),
        metrics,
        epochs,
        converged: out.converged,
        final_objective: out.state.history.last().map_or(f64::NAN, |b| b.weighted_total),
        lambda: out.state.lambda.clone(),
        wall_ms: started.elapsed().as_secs_f64() * 1e3,
    };
    let record_path = args.record.clone().unwrap_or_else(|| with_suffix(&args.out, ".run.json"));
    record.write(&record_path)?;
    print_json(&record)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Filter { data, hp, weights, out_dir, format } => {
            let ds = data.load()?;
            let hp = hp.hyperparams(&weights)?;
            std::fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
            let mut files = Vec::new();
            for (v, view) in ds.views.iter().enumerate() {
                let lap = NormalizedLaplacian::build(&view.adjacency)?;
                let sv = smooth(&view.attributes, &lap, hp.s, hp.m)?;
                let path = match format {
                    FeatureFormat::Bin => out_dir.join(format!("view{v}.mvgf")),
                    FeatureFormat::Csv => out_dir.join(format!("view{v}.csv")),
                };
                io::write_attributes(&path, &sv)?;
                files.push(path);
            }
            print_json(&serde_json::json!({ "files": files, "m": hp.m, "s": hp.s }))
        }
        Command::Knn { data, hp, weights, out, no_filter } => {
            let ds = data.load()?;
            let mut cfg = hp.train_config(&weights)?;
            cfg.use_filter = !no_filter;
            let nbrs = trainer::prepare_neighbors(&ds, &cfg)?;
            let meta = NeighborCacheMeta {
                m: cfg.hp.m,
                s: cfg.hp.s,
                k: cfg.hp.k,
                filtered: cfg.use_filter,
            };
            io::save_neighbors(&out, &nbrs, &meta)?;
            print_json(&serde_json::json!({ "neighbors": out, "views": nbrs.n_views(), "meta": meta }))
        }
        Command::Train(args) => run_train(&args, false),
        Command::Encode(args) => run_train(&args, true),
        Command::Eval { codes, labels, cutoffs } => {
            let codes = io::load_codes(&codes)?;
            let report = retrieval::evaluate(&codes, &labels.load()?, &cutoffs)?;
            if report.skipped_queries > 0 {
                eprintln!("skipped {} queries with no other member of their class", report.skipped_queries);
            }
            print_json(&report)
        }
        Command::Retrieve { codes, query, top } => {
            let codes = io::load_codes(&codes)?;
            for q in query {
                let mut r = retrieval::rank_all(&codes, q)?;
                r.ranked.truncate(top);
                print_json(&r)?;
            }
            Ok(())
        }
        Command::Ablate { data, hp, weights, out } => {
            let ds = data.load()?;
            let rows = experiments::ablation_table(&ds, &hp.train_config(&weights)?)?;
            experiments::write_csv(csv_sink(out.as_deref())?, &rows)?;
            Ok(())
        }
        Command::Sweep { data, hp, alpha, beta, bits, out } => {
            let ds = data.load()?;
            let rows = experiments::sweep(&ds, &hp.train_config(&SweptParams::default())?, &alpha, &beta, &bits)?;
            for r in rows.iter().filter(|r| r.status != "ok") {
                eprintln!("alpha={} beta={} bits={}: {}", r.alpha, r.beta, r.bits, r.status);
            }
            if let Some(best) = experiments::best_row(&rows) {
                eprintln!("best: alpha={} beta={} bits={} mAP@all={:.4}", best.alpha, best.beta, best.bits, best.map_at_all);
            }
            experiments::write_csv(csv_sink(out.as_deref())?, &rows)?;
            Ok(())
        }
        Command::Synth { out_dir, blocks, block_size, p_in, p_out, views, dim, noise_ratio, seed } => {
            let ds = sbm_dataset(&SbmConfig {
                blocks,
                block_size,
                p_in,
                p_out,
                n_views: views,
                dim,
                separation: 1.0,
                noise_ratio,
                seed,
            })?;
            std::fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
            let mut view_paths = Vec::new();
            for (v, view) in ds.views.iter().enumerate() {
                let paths = ViewPaths {
                    attributes: PathBuf::from(format!("view{v}.csv")),
                    adjacency: PathBuf::from(format!("view{v}.mtx")),
                };
                io::write_attributes_csv(&out_dir.join(&paths.attributes), &view.attributes)?;
                io::write_matrix_market(&out_dir.join(&paths.adjacency), &view.adjacency)?;
                view_paths.push(paths);
            }
            io::write_labels(&out_dir.join("labels.txt"), ds.labels.as_deref().unwrap_or_default())?;
            let manifest = DatasetManifest {
                name: ds.name.clone(),
                n_nodes: ds.n_nodes,
                views: view_paths,
                labels: Some(PathBuf::from("labels.txt")),
                format_version: io::MANIFEST_VERSION,
            };
            let path = out_dir.join("manifest.json");
            manifest.write(&path)?;
            print_json(&serde_json::json!({ "manifest": path, "n_nodes": ds.n_nodes, "views": ds.n_views() }))
        }
    }
}

/// Caps the global worker pool from `MVGHASH_THREADS` (0 or unset = automatic).
fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("MVGHASH_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .with_context(|| format!("MVGHASH_THREADS must be a nonnegative integer, got {raw:?}"))?;
    #[cfg(feature = "parallel")]
    if threads > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match configure_threads().and_then(|_| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
