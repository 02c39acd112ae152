//! Run directories: averaged matrices, correlation reports, traces and the manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use linkinit::{pearson_matrix, AlphaScan, Averaging, BinaryMatrix, ChainConfig, ChainResult, PlantedInstance, RealMatrix};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to reproduce a run. Fields serialize in declaration
/// order; parameters a command does not use are `null`.
#[derive(Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub alpha: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub steps: Option<u64>,
    pub burnin: Option<u64>,
    pub snapshot_every: Option<u64>,
    pub averaging: Option<String>,
    pub seed: u64,
    pub inputs: Vec<InputDigest>,
    pub grid: Option<Vec<f64>>,
    pub selected_alpha: Option<f64>,
    pub acceptance_rate: Option<f64>,
    pub mean_final_block_log_posterior: Option<f64>,
    pub wall_time_seconds: f64,
}

fn digest(path: &Path) -> Result<InputDigest> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let hash = Sha256::digest(&bytes);
    Ok(InputDigest {
        path: path.display().to_string(),
        sha256: hash.iter().map(|b| format!("{b:02x}")).collect(),
    })
}

impl RunManifest {
    pub fn plain(command: &str, seed: u64, inputs: &[PathBuf]) -> Result<Self> {
        Ok(Self {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            alpha: None,
            c1: None,
            c2: None,
            steps: None,
            burnin: None,
            snapshot_every: None,
            averaging: None,
            seed,
            inputs: inputs.iter().map(|p| digest(p)).collect::<Result<_>>()?,
            grid: None,
            selected_alpha: None,
            acceptance_rate: None,
            mean_final_block_log_posterior: None,
            wall_time_seconds: 0.0,
        })
    }

    pub fn chain(command: &str, cfg: &ChainConfig, inputs: &[PathBuf]) -> Result<Self> {
        let mut m = Self::plain(command, cfg.seed, inputs)?;
        m.alpha = Some(cfg.alpha.alpha());
        m.c1 = Some(cfg.priors.c1());
        m.c2 = Some(cfg.priors.c2());
        m.steps = Some(cfg.total_steps);
        m.burnin = Some(cfg.burnin_steps);
        m.snapshot_every = Some(cfg.snapshot_every);
        m.averaging = Some(
            match cfg.averaging {
                Averaging::Blockwise => "blockwise",
                Averaging::Cumulative => "cumulative",
            }
            .into(),
        );
        Ok(m)
    }

    pub fn record_result(&mut self, r: &ChainResult) {
        self.acceptance_rate = Some(r.acceptance_rate);
        self.mean_final_block_log_posterior = Some(r.mean_final_block_log_posterior());
    }
}

#[derive(Serialize)]
struct PlantedParams {
    n: usize,
    m: usize,
    edges: usize,
    initiators_per_signal: usize,
    alpha: f64,
    seed: u64,
}

pub struct RunWriter {
    dir: PathBuf,
    heatmap: bool,
}

impl RunWriter {
    pub fn create(dir: &Path, heatmap: bool) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            heatmap,
        })
    }

    fn text(&self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
    }

    pub fn binary(&self, name: &str, m: &BinaryMatrix) -> Result<()> {
        self.text(name, &m.to_text())
    }

    pub fn real(&self, name: &str, m: &RealMatrix) -> Result<()> {
        self.text(name, &m.to_text())?;
        if self.heatmap {
            let pgm = Path::new(name).with_extension("pgm");
            self.text(&pgm.to_string_lossy(), &m.to_pgm())?;
        }
        Ok(())
    }

    fn correlations(&self, prefix: &str, snapshots: &[RealMatrix], exclude_diagonal: bool) -> Result<()> {
        if snapshots.len() < 2 {
            return self.text(
                &format!("{prefix}_corr.txt"),
                "correlations unavailable: fewer than 2 snapshots\n",
            );
        }
        match pearson_matrix(snapshots, exclude_diagonal) {
            Ok(report) => {
                self.text(&format!("{prefix}_corr.csv"), &report.coefficients.to_text())?;
                self.text(&format!("{prefix}_corr.txt"), &format!("{}\n", report.summary()))
            }
            Err(e) => self.text(&format!("{prefix}_corr.txt"), &format!("correlations unavailable: {e}\n")),
        }
    }

    pub fn chain_outputs(&self, r: &ChainResult) -> Result<()> {
        let overall = r.overall_initiator_snapshots();
        for (b, (g, n)) in r.graph_snapshots.iter().zip(&overall).enumerate() {
            self.real(&format!("G_avg_{}.csv", b + 1), g)?;
            self.real(&format!("N_avg_{}.csv", b + 1), n)?;
        }
        self.real("G_avg.csv", r.average_graph())?;
        self.real("N_avg.csv", overall.last().expect("at least one block"))?;
        if r.temporal {
            for (t, n) in r.average_initiators().iter().enumerate() {
                self.real(&format!("N_t{}_avg.csv", t + 1), n)?;
            }
            self.real("N_all_avg.csv", overall.last().expect("at least one block"))?;
        }
        self.correlations("G", &r.graph_snapshots, true)?;
        self.correlations("N", &overall, false)?;

        let mut trace = String::from("step,log_posterior\n");
        for (s, lp) in &r.trace {
            trace.push_str(&format!("{s},{lp}\n"));
        }
        self.text("trace.csv", &trace)?;

        let mut blocks = String::from("block,mean_log_posterior\n");
        for (b, lp) in r.block_mean_log_posterior.iter().enumerate() {
            blocks.push_str(&format!("{},{lp}\n", b + 1));
        }
        self.text("blocks.csv", &blocks)
    }

    pub fn scan_table(&self, scan: &AlphaScan) -> Result<()> {
        let mut s = String::from("alpha,mean_final_block_log_posterior,acceptance_rate\n");
        for (a, r) in &scan.runs {
            s.push_str(&format!("{a},{},{}\n", r.mean_final_block_log_posterior(), r.acceptance_rate));
        }
        self.text("scan.csv", &s)
    }

    pub fn planted(&self, inst: &PlantedInstance, initiators_per_signal: usize) -> Result<()> {
        self.binary("G.csv", &inst.true_graph.to_matrix())?;
        self.binary("N.csv", &inst.true_initiators)?;
        self.binary("M.csv", &inst.observed)?;
        let (n, m) = inst.observed.shape();
        let params = PlantedParams {
            n,
            m,
            edges: inst.true_graph.edge_count(),
            initiators_per_signal,
            alpha: inst.params.alpha(),
            seed: inst.seed,
        };
        self.text("params.json", &format!("{}\n", serde_json::to_string_pretty(&params)?))
    }

    pub fn manifest(&self, mut m: RunManifest, start: Instant) -> Result<()> {
        m.wall_time_seconds = start.elapsed().as_secs_f64();
        self.text("manifest.json", &format!("{}\n", serde_json::to_string_pretty(&m)?))
    }
}
