mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use linkinit::{
    alpha_scan, degrade_temporal, hamming_similarity, load_matrix, run_chain, synth_planted, Averaging,
    ChainConfig, Error, ObservationSequence, Observations, Priors, SpParams,
};

use output::{RunManifest, RunWriter};

#[derive(Parser)]
#[command(name = "linkinit", version, about = "Infer influence graphs and initiators from binary occurrence matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample graphs and initiators for one observation matrix.
    Infer {
        #[arg(long)]
        matrix: PathBuf,
        #[command(flatten)]
        chain: ChainArgs,
    },
    /// Sample graphs and per-timestep initiators for a monotone sequence.
    InferTemporal {
        /// Observation matrices in time order.
        #[arg(long, value_delimiter = ',', required = true)]
        matrices: Vec<PathBuf>,
        #[command(flatten)]
        chain: ChainArgs,
    },
    /// Run one chain per alpha and keep the one with the highest final-block posterior.
    AlphaScan {
        #[arg(long, conflicts_with = "matrices", required_unless_present = "matrices")]
        matrix: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        matrices: Option<Vec<PathBuf>>,
        /// `start:stop:step` or a comma-separated list.
        #[arg(long, default_value = "0.1:0.9:0.1")]
        grid: String,
        #[command(flatten)]
        chain: ChainArgs,
    },
    /// Draw a planted instance and write G.csv, N.csv, M.csv.
    Generate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        edges: usize,
        #[arg(long, default_value_t = 1)]
        initiators_per_signal: usize,
        #[arg(long, default_value_t = 0.9)]
        alpha: f64,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Thin a matrix into a monotone sequence M_1..M_T with M_T equal to the input.
    Degrade {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long = "t")]
        t_steps: usize,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Row similarity 1 / (1 + Hamming distance).
    Similarity {
        #[arg(long)]
        matrix: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// Integer seed, or `random` to draw one.
    #[arg(long, default_value = "0")]
    seed: String,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Also write a P2 graymap next to every averaged matrix.
    #[arg(long)]
    emit_heatmap: bool,
}

#[derive(Args)]
struct ChainArgs {
    #[arg(long, default_value_t = 0.9)]
    alpha: f64,
    #[arg(long, default_value_t = 2.0)]
    c1: f64,
    #[arg(long, default_value_t = 9.0)]
    c2: f64,
    #[arg(long, default_value_t = 200_000)]
    steps: u64,
    #[arg(long, default_value_t = 100_000)]
    burnin: u64,
    #[arg(long, default_value_t = 10_000)]
    snapshot_every: u64,
    /// Average every post-burn-in sample instead of disjoint blocks.
    #[arg(long)]
    cumulative: bool,
    #[command(flatten)]
    common: CommonArgs,
}

impl ChainArgs {
    fn config(&self, seed: u64) -> linkinit::Result<ChainConfig> {
        let mut cfg = ChainConfig::new(SpParams::new(self.alpha)?)
            .steps(self.steps, self.burnin, self.snapshot_every)
            .priors(Priors::new(self.c1, self.c2)?)
            .seed(seed);
        if self.cumulative {
            cfg.averaging = Averaging::Cumulative;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_seed(s: &str) -> linkinit::Result<u64> {
    if s == "random" {
        return Ok(rand::random());
    }
    s.parse()
        .map_err(|_| Error::Config(format!("seed must be an unsigned integer or `random`, got `{s}`")))
}

fn parse_grid(s: &str) -> linkinit::Result<Vec<f64>> {
    let bad = || Error::Config(format!("invalid alpha grid `{s}`"));
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
    let parts: Vec<&str> = s.split(':').collect();
    let grid = match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if step.is_nan() || step <= 0.0 || stop < start {
                return Err(bad());
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            (0..count)
                .map(|k| ((start + k as f64 * step) * 1e10).round() / 1e10)
                .collect()
        }
        [list] => list.split(',').map(num).collect::<linkinit::Result<Vec<_>>>()?,
        _ => return Err(bad()),
    };
    if grid.is_empty() {
        return Err(bad());
    }
    for &a in &grid {
        SpParams::new(a)?;
    }
    Ok(grid)
}

fn load_sequence(paths: &[PathBuf]) -> Result<ObservationSequence> {
    let mats = paths
        .iter()
        .map(|p| load_matrix(p).with_context(|| format!("reading {}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    Ok(ObservationSequence::new(mats)?)
}

fn load(path: &Path) -> Result<linkinit::BinaryMatrix> {
    load_matrix(path).with_context(|| format!("reading {}", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    let start = Instant::now();
    match cli.command {
        Command::Infer { matrix, chain } => {
            let seed = parse_seed(&chain.common.seed)?;
            let cfg = chain.config(seed)?;
            let data = Observations::from(load(&matrix)?);
            let result = run_chain(&data, &cfg)?;
            let w = RunWriter::create(&chain.common.out, chain.common.emit_heatmap)?;
            w.chain_outputs(&result)?;
            let mut manifest = RunManifest::chain("infer", &cfg, &[matrix])?;
            manifest.record_result(&result);
            w.manifest(manifest, start)?;
        }
        Command::InferTemporal { matrices, chain } => {
            let seed = parse_seed(&chain.common.seed)?;
            let cfg = chain.config(seed)?;
            let data = Observations::from(load_sequence(&matrices)?);
            let result = run_chain(&data, &cfg)?;
            let w = RunWriter::create(&chain.common.out, chain.common.emit_heatmap)?;
            w.chain_outputs(&result)?;
            let mut manifest = RunManifest::chain("infer-temporal", &cfg, &matrices)?;
            manifest.record_result(&result);
            w.manifest(manifest, start)?;
        }
        Command::AlphaScan {
            matrix,
            matrices,
            grid,
            chain,
        } => {
            let seed = parse_seed(&chain.common.seed)?;
            let grid = parse_grid(&grid)?;
            let template = chain.config(seed)?;
            let (data, inputs) = match (matrix, matrices) {
                (Some(p), _) => (Observations::from(load(&p)?), vec![p]),
                (None, Some(ps)) => (Observations::from(load_sequence(&ps)?), ps),
                (None, None) => unreachable!("clap requires one input"),
            };
            let scan = alpha_scan(&data, &grid, &template)?;
            let w = RunWriter::create(&chain.common.out, chain.common.emit_heatmap)?;
            w.scan_table(&scan)?;
            let (alpha, best) = scan
                .runs
                .iter()
                .find(|(a, _)| *a == scan.selected_alpha)
                .expect("selected alpha is on the grid");
            w.chain_outputs(best)?;
            let index = grid.iter().position(|a| a == alpha).unwrap_or(0);
            let mut cfg = template.clone();
            cfg.alpha = SpParams::new(*alpha)?;
            cfg.seed = template.seed.wrapping_add(index as u64);
            let mut manifest = RunManifest::chain("alpha-scan", &cfg, &inputs)?;
            manifest.record_result(best);
            manifest.selected_alpha = Some(scan.selected_alpha);
            manifest.grid = Some(grid);
            w.manifest(manifest, start)?;
        }
        Command::Generate {
            n,
            m,
            edges,
            initiators_per_signal,
            alpha,
            common,
        } => {
            let seed = parse_seed(&common.seed)?;
            let inst = synth_planted(n, m, edges, initiators_per_signal, SpParams::new(alpha)?, seed)?;
            let w = RunWriter::create(&common.out, common.emit_heatmap)?;
            w.planted(&inst, initiators_per_signal)?;
            let mut manifest = RunManifest::plain("generate", seed, &[])?;
            manifest.alpha = Some(alpha);
            w.manifest(manifest, start)?;
        }
        Command::Degrade { matrix, t_steps, common } => {
            let seed = parse_seed(&common.seed)?;
            let seq = degrade_temporal(&load(&matrix)?, t_steps, seed)?;
            let w = RunWriter::create(&common.out, common.emit_heatmap)?;
            for (t, m) in seq.matrices().iter().enumerate() {
                w.binary(&format!("M_{}.csv", t + 1), m)?;
            }
            w.manifest(RunManifest::plain("degrade", seed, &[matrix])?, start)?;
        }
        Command::Similarity { matrix, common } => {
            let seed = parse_seed(&common.seed)?;
            let s = hamming_similarity(&load(&matrix)?);
            let w = RunWriter::create(&common.out, common.emit_heatmap)?;
            w.real("S.csv", &s)?;
            w.manifest(RunManifest::plain("similarity", seed, &[matrix])?, start)?;
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return if e.is_input_error() { 1 } else { 2 };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 1;
        }
    }
    1
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
