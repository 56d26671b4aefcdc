//! Command-line front end: `fit`, `generate`, `score`, `icl`, `bench`, `render`.

use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{parse_edge_list, write_edge_list_with_header, DirectedGraph};
use crate::greedy::FitOptions;
use crate::init::{fit_with_restarts, InitConfig, InitMethod, RestartSummary};
use crate::io::{read_partition, write_partition};
use crate::metrics::{entropy, mutual_information, nmi};
use crate::partition::Partition;
use crate::render::{render_blocks, DEFAULT_MAX_NODES};
use crate::stats::{compute_stats, icl_asymptotic, icl_exact, Priors};
use crate::synth::{beta_grid, make_setting, sample_sbm, SbmParams, SettingConfig};

#[derive(Debug, Parser)]
#[command(name = "greedy-icl", version, about = "Stochastic block model clustering of directed graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cluster the nodes of an edge list.
    Fit(FitCmd),
    /// Sample a benchmark graph and its planted partition.
    Generate(GenerateCmd),
    /// Compare two partition files.
    Score(ScoreCmd),
    /// Evaluate the ICL criteria of a given partition.
    Icl(IclCmd),
    /// Run the fit protocol over a beta grid of a benchmark setting.
    Bench(BenchCmd),
    /// Write the block-sorted adjacency matrix as a PGM image.
    Render(RenderCmd),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DocFormat {
    Toml,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Table,
    Toml,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct PriorArgs {
    #[arg(long, default_value_t = 1.0)]
    pub prior_n0: f64,
    #[arg(long, default_value_t = 1.0)]
    pub prior_eta0: f64,
    #[arg(long, default_value_t = 1.0)]
    pub prior_zeta0: f64,
}

impl PriorArgs {
    pub fn priors(&self) -> Result<Priors> {
        Priors::new(self.prior_n0, self.prior_eta0, self.prior_zeta0)
    }
}

#[derive(Debug, Clone, Args)]
pub struct SearchArgs {
    /// Independent restarts; the best final ICL wins.
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    #[arg(long, value_enum, default_value_t = InitMethod::Kmeans)]
    pub init: InitMethod,
    #[arg(long, default_value_t = 5)]
    pub kmeans_iters: usize,
    /// Stop after swap convergence without merging clusters.
    #[arg(long)]
    pub no_merge_phase: bool,
    /// Run one merge pass instead of alternating merges and sweeps.
    #[arg(long, conflicts_with = "no_merge_phase")]
    pub single_merge_pass: bool,
    #[arg(long, default_value_t = FitOptions::default().max_sweeps)]
    pub max_sweeps: usize,
    #[command(flatten)]
    pub priors: PriorArgs,
}

impl SearchArgs {
    pub fn options(&self) -> FitOptions {
        FitOptions {
            merge: !self.no_merge_phase,
            alternate: !self.single_merge_pass,
            max_sweeps: self.max_sweeps,
        }
    }

    pub fn init_config(&self, k_up: usize, seed: u64) -> InitConfig {
        InitConfig {
            k_up,
            method: self.init,
            kmeans_iters: self.kmeans_iters,
            restarts: self.restarts,
            seed,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct FitCmd {
    /// Edge list, one `src dst` pair per line.
    pub graph: PathBuf,
    /// Starting (and maximal) number of clusters.
    #[arg(long, default_value_t = 20)]
    pub k_up: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Result document path; standard output when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Partition file path. Defaults to the result path with a
    /// `.partition` extension when `--output` is given.
    #[arg(long)]
    pub partition_output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = DocFormat::Toml)]
    pub format: DocFormat,
    /// Include wall time in the result document.
    #[arg(long)]
    pub report_timing: bool,
}

#[derive(Debug, Clone, Args)]
pub struct GenerateCmd {
    /// Benchmark setting 1-4.
    #[arg(long, required_unless_present = "params", conflicts_with = "params")]
    pub setting: Option<u8>,
    /// TOML file with explicit `alpha`, `pi` and `n_nodes`.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub n_nodes: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Edge list path.
    #[arg(long, short)]
    pub output: PathBuf,
    /// Planted partition path; defaults to the edge list path with a
    /// `.planted` extension.
    #[arg(long)]
    pub planted: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ScoreCmd {
    pub partition_a: PathBuf,
    pub partition_b: PathBuf,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = DocFormat::Toml)]
    pub format: DocFormat,
}

#[derive(Debug, Clone, Args)]
pub struct IclCmd {
    pub graph: PathBuf,
    pub partition: PathBuf,
    #[command(flatten)]
    pub priors: PriorArgs,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = DocFormat::Toml)]
    pub format: DocFormat,
}

#[derive(Debug, Clone, Args)]
pub struct BenchCmd {
    #[arg(long, default_value_t = 1)]
    pub setting: u8,
    /// Comma-separated beta values; defaults to 0.45, 0.43, ..., 0.01.
    #[arg(long, value_delimiter = ',')]
    pub betas: Option<Vec<f64>>,
    #[arg(long, default_value_t = 20)]
    pub replicates: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub n_nodes: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    /// Defaults to 100 for setting 4 and 20 otherwise.
    #[arg(long)]
    pub k_up: Option<usize>,
    #[command(flatten)]
    pub search: SearchArgs,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = TableFormat::Table)]
    pub format: TableFormat,
}

#[derive(Debug, Clone, Args)]
pub struct RenderCmd {
    pub graph: PathBuf,
    pub partition: PathBuf,
    #[arg(long, short)]
    pub output: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MAX_NODES)]
    pub max_nodes: usize,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::file(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::file(path, e))
}

pub fn load_graph(path: &Path) -> Result<DirectedGraph> {
    let file = fs::File::open(path).map_err(|e| Error::file(path, e))?;
    let parsed = parse_edge_list(BufReader::new(file))?;
    info!(
        "{}: {} nodes, {} edges",
        path.display(),
        parsed.graph.n_nodes(),
        parsed.graph.n_edges()
    );
    Ok(parsed.graph)
}

pub fn load_partition(path: &Path, n_nodes: Option<usize>) -> Result<Partition> {
    let file = fs::File::open(path).map_err(|e| Error::file(path, e))?;
    read_partition(BufReader::new(file), n_nodes)
}

fn render_doc<T: Serialize>(value: &T, format: DocFormat) -> Result<String> {
    match format {
        DocFormat::Toml => {
            toml::to_string(value).map_err(|e| Error::invalid(format!("serializing result: {e}")))
        }
        DocFormat::Json => serde_json::to_string_pretty(value)
            .map(|s| s + "\n")
            .map_err(|e| Error::invalid(format!("serializing result: {e}"))),
    }
}

fn emit(out: &mut dyn Write, path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write_bytes(p, text.as_bytes()),
        None => {
            out.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FitConfigEcho {
    pub k_up: usize,
    pub restarts: usize,
    pub init: InitMethod,
    pub kmeans_iters: usize,
    pub merge_phase: bool,
    pub alternate_merges: bool,
    pub max_sweeps: usize,
    pub priors: Priors,
}

/// Result document of `fit`.
#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub graph: String,
    pub n_nodes: usize,
    pub n_edges: usize,
    pub k: usize,
    pub icl_exact: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub icl_asymptotic: Option<f64>,
    pub seed: u64,
    pub best_restart: usize,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_seconds: Option<f64>,
    pub assignment: Vec<usize>,
    pub config: FitConfigEcho,
    pub restarts: Vec<RestartSummary>,
}

pub fn fit_report(cmd: &FitCmd, g: &DirectedGraph) -> Result<(FitReport, Partition)> {
    let priors = cmd.search.priors.priors()?;
    let cfg = cmd.search.init_config(cmd.k_up, cmd.seed);
    let opts = cmd.search.options();
    let start = Instant::now();
    let result = fit_with_restarts(g, &priors, &cfg, &opts)?;
    let elapsed = start.elapsed().as_secs_f64();
    let partition = result.partition().clone();
    let stats = compute_stats(g, &partition)?;
    let report = FitReport {
        graph: cmd.graph.display().to_string(),
        n_nodes: g.n_nodes(),
        n_edges: g.n_edges(),
        k: partition.k(),
        icl_exact: icl_exact(&stats, &priors),
        icl_asymptotic: icl_asymptotic(g, &partition).ok(),
        seed: cmd.seed,
        best_restart: result.best_index,
        converged: result.best.converged,
        wall_time_seconds: cmd.report_timing.then_some(elapsed),
        assignment: partition.labels().to_vec(),
        config: FitConfigEcho {
            k_up: cmd.k_up,
            restarts: cfg.restarts,
            init: cfg.method,
            kmeans_iters: cfg.kmeans_iters,
            merge_phase: opts.merge,
            alternate_merges: opts.alternate,
            max_sweeps: opts.max_sweeps,
            priors,
        },
        restarts: result.restarts,
    };
    Ok((report, partition))
}

fn cmd_fit(cmd: &FitCmd, out: &mut dyn Write) -> Result<()> {
    let g = load_graph(&cmd.graph)?;
    let (report, partition) = fit_report(cmd, &g)?;
    info!("K = {}, ICL = {}", report.k, report.icl_exact);
    emit(out, cmd.output.as_deref(), &render_doc(&report, cmd.format)?)?;
    let partition_path = cmd
        .partition_output
        .clone()
        .or_else(|| cmd.output.as_ref().map(|p| p.with_extension("partition")));
    if let Some(path) = partition_path {
        write_bytes(&path, write_partition(&partition).as_bytes())?;
    }
    Ok(())
}

fn generate_params(cmd: &GenerateCmd) -> Result<SbmParams> {
    if let Some(path) = &cmd.params {
        let mut params: SbmParams = toml::from_str(&read_text(path)?)
            .map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
        if let Some(n) = cmd.n_nodes {
            params.n_nodes = n;
        }
        params.seed = cmd.seed;
        return Ok(params);
    }
    let id = cmd.setting.ok_or_else(|| Error::invalid("either --setting or --params is required"))?;
    let mut cfg = SettingConfig::new(id)?.with_seed(cmd.seed);
    if let Some(b) = cmd.beta {
        cfg.beta = b;
    }
    if let Some(e) = cmd.epsilon {
        cfg.epsilon = e;
    }
    if let Some(n) = cmd.n_nodes {
        cfg.n_nodes = n;
    }
    if let Some(k) = cmd.k {
        cfg.k = k;
    }
    make_setting(&cfg)
}

fn cmd_generate(cmd: &GenerateCmd) -> Result<()> {
    let params = generate_params(cmd)?;
    let (g, planted) = sample_sbm(&params)?;
    info!("sampled {} nodes, {} edges, K = {}", g.n_nodes(), g.n_edges(), planted.k());
    write_bytes(&cmd.output, write_edge_list_with_header(&g).as_bytes())?;
    let planted_path = cmd
        .planted
        .clone()
        .unwrap_or_else(|| cmd.output.with_extension("planted"));
    write_bytes(&planted_path, write_partition(&planted).as_bytes())
}

#[derive(Debug, Clone, Serialize)]
pub struct ScoreReport {
    pub n_nodes: usize,
    pub k_a: usize,
    pub k_b: usize,
    pub nmi: f64,
    pub mutual_information: f64,
    pub entropy_a: f64,
    pub entropy_b: f64,
}

fn cmd_score(cmd: &ScoreCmd, out: &mut dyn Write) -> Result<()> {
    let a = load_partition(&cmd.partition_a, None)?;
    let b = load_partition(&cmd.partition_b, None)?;
    let report = ScoreReport {
        n_nodes: a.n_nodes(),
        k_a: a.k(),
        k_b: b.k(),
        nmi: nmi(&a, &b)?,
        mutual_information: mutual_information(&a, &b)?,
        entropy_a: entropy(&a),
        entropy_b: entropy(&b),
    };
    emit(out, cmd.output.as_deref(), &render_doc(&report, cmd.format)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct IclReport {
    pub n_nodes: usize,
    pub n_edges: usize,
    pub k: usize,
    pub icl_exact: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub icl_asymptotic: Option<f64>,
    pub priors: Priors,
}

fn cmd_icl(cmd: &IclCmd, out: &mut dyn Write) -> Result<()> {
    let g = load_graph(&cmd.graph)?;
    let z = load_partition(&cmd.partition, Some(g.n_nodes()))?;
    let priors = cmd.priors.priors()?;
    let report = IclReport {
        n_nodes: g.n_nodes(),
        n_edges: g.n_edges(),
        k: z.k(),
        icl_exact: icl_exact(&compute_stats(&g, &z)?, &priors),
        icl_asymptotic: icl_asymptotic(&g, &z).ok(),
        priors,
    };
    emit(out, cmd.output.as_deref(), &render_doc(&report, cmd.format)?)
}

/// One beta value of a benchmark sweep.
#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub beta: f64,
    pub replicates: usize,
    pub mean_nmi: f64,
    /// Sample standard deviation; absent with a single replicate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_nmi: Option<f64>,
    pub mean_k: f64,
    pub mean_seconds: f64,
    pub nmi: Vec<f64>,
    pub k: Vec<usize>,
}

impl BenchRow {
    /// Most frequent recovered K; ties go to the smaller K.
    pub fn modal_k(&self) -> usize {
        let mut ks = self.k.clone();
        ks.sort_unstable();
        let mut best = (0, 0);
        let mut i = 0;
        while i < ks.len() {
            let j = ks[i..].iter().take_while(|&&v| v == ks[i]).count();
            if j > best.1 {
                best = (ks[i], j);
            }
            i += j;
        }
        best.0
    }
}

/// Protocol shared by the `bench` command: replicate `r` samples its graph
/// with seed `seed + r` and fits it with the same base seed for its restarts.
#[derive(Debug, Clone)]
pub struct BenchPlan {
    pub setting: SettingConfig,
    pub betas: Vec<f64>,
    pub replicates: usize,
    pub seed: u64,
    pub init: InitConfig,
    pub options: FitOptions,
    pub priors: Priors,
}

pub fn run_bench(plan: &BenchPlan) -> Result<Vec<BenchRow>> {
    if plan.replicates < 1 {
        return Err(Error::invalid("replicates must be at least 1"));
    }
    plan.init.validate()?;
    plan.betas
        .iter()
        .map(|&beta| {
            let runs: Vec<(f64, usize, f64)> = (0..plan.replicates)
                .into_par_iter()
                .map(|r| {
                    let seed = plan.seed.wrapping_add(r as u64);
                    let cfg = plan.setting.with_beta(beta).with_seed(seed);
                    let (g, planted) = sample_sbm(&make_setting(&cfg)?)?;
                    let init = InitConfig { seed, ..plan.init };
                    let start = Instant::now();
                    let fit = fit_with_restarts(&g, &plan.priors, &init, &plan.options)?;
                    let secs = start.elapsed().as_secs_f64();
                    Ok((nmi(fit.partition(), &planted)?, fit.k(), secs))
                })
                .collect::<Result<_>>()?;
            let n = runs.len() as f64;
            let nmis: Vec<f64> = runs.iter().map(|r| r.0).collect();
            let mean_nmi = nmis.iter().sum::<f64>() / n;
            let std_nmi = (runs.len() > 1).then(|| {
                (nmis.iter().map(|v| (v - mean_nmi).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            });
            let row = BenchRow {
                beta,
                replicates: runs.len(),
                mean_nmi,
                std_nmi,
                mean_k: runs.iter().map(|r| r.1 as f64).sum::<f64>() / n,
                mean_seconds: runs.iter().map(|r| r.2).sum::<f64>() / n,
                nmi: nmis,
                k: runs.iter().map(|r| r.1).collect(),
            };
            info!("beta {beta}: mean NMI {:.4}, mean K {:.2}", row.mean_nmi, row.mean_k);
            Ok(row)
        })
        .collect()
}

pub fn bench_table(rows: &[BenchRow]) -> String {
    let mut out = String::from("beta\tmean_nmi\tstd_nmi\tmean_k\tmean_seconds\n");
    for r in rows {
        let std = r.std_nmi.map_or_else(|| "-".to_string(), |s| format!("{s:.4}"));
        out.push_str(&format!(
            "{:.2}\t{:.4}\t{}\t{:.2}\t{:.3}\n",
            r.beta, r.mean_nmi, std, r.mean_k, r.mean_seconds
        ));
    }
    out
}

fn cmd_bench(cmd: &BenchCmd, out: &mut dyn Write) -> Result<()> {
    let mut setting = SettingConfig::new(cmd.setting)?;
    if let Some(e) = cmd.epsilon {
        setting.epsilon = e;
    }
    if let Some(n) = cmd.n_nodes {
        setting.n_nodes = n;
    }
    if let Some(k) = cmd.k {
        setting.k = k;
    }
    let k_up = cmd.k_up.unwrap_or(if cmd.setting == 4 { 100 } else { 20 });
    let plan = BenchPlan {
        setting,
        betas: cmd.betas.clone().unwrap_or_else(beta_grid),
        replicates: cmd.replicates,
        seed: cmd.seed,
        init: cmd.search.init_config(k_up, cmd.seed),
        options: cmd.search.options(),
        priors: cmd.search.priors.priors()?,
    };
    let rows = run_bench(&plan)?;
    #[derive(Serialize)]
    struct Doc<'a> {
        rows: &'a [BenchRow],
    }
    let text = match cmd.format {
        TableFormat::Table => bench_table(&rows),
        TableFormat::Toml => render_doc(&Doc { rows: &rows }, DocFormat::Toml)?,
        TableFormat::Json => render_doc(&Doc { rows: &rows }, DocFormat::Json)?,
    };
    emit(out, cmd.output.as_deref(), &text)
}

fn cmd_render(cmd: &RenderCmd) -> Result<()> {
    let g = load_graph(&cmd.graph)?;
    let z = load_partition(&cmd.partition, Some(g.n_nodes()))?;
    let image = render_blocks(&g, &z, cmd.max_nodes)?;
    write_bytes(&cmd.output, &image.to_pgm())
}

/// Runs a parsed command, writing documents without an `--output` path to
/// `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Fit(c) => cmd_fit(c, out),
        Command::Generate(c) => cmd_generate(c),
        Command::Score(c) => cmd_score(c, out),
        Command::Icl(c) => cmd_icl(c, out),
        Command::Bench(c) => cmd_bench(c, out),
        Command::Render(c) => cmd_render(c),
    }
}
