use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::config::{PipelineConfig, TaskKind};
use super::store::{self, ExprRecord, GeneratedRecord, PathRecord, QueryRecord};
use super::{PipelineError, Stage};

pub const REPORT_DIR: &str = "report";
const HIST_BINS: usize = 30;

#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new(values: &[f64], bins: usize) -> Option<Self> {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if values.is_empty() || !lo.is_finite() || !hi.is_finite() {
            return None;
        }
        let mut counts = vec![0u64; bins];
        let width = (hi - lo) / bins as f64;
        for &v in values {
            let b = if width > 0.0 {
                (((v - lo) / width) as usize).min(bins - 1)
            } else {
                0
            };
            counts[b] += 1;
        }
        Some(Self { lo, hi, counts })
    }

    pub fn bin_edges(&self, i: usize) -> (f64, f64) {
        let w = (self.hi - self.lo) / self.counts.len() as f64;
        (self.lo + w * i as f64, self.lo + w * (i + 1) as f64)
    }

    fn to_csv(&self) -> String {
        let mut out = String::from("bin_lo,bin_hi,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            let (a, b) = self.bin_edges(i);
            let _ = writeln!(out, "{a},{b},{c}");
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TracePoint {
    pub query: usize,
    pub id: usize,
    pub energy: f64,
    pub best_so_far: f64,
    pub solved: bool,
}

/// Ebit counts of circuits surviving each stage.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EbitsByStage {
    pub generated: Vec<u32>,
    pub path_filtered: Vec<u32>,
    pub expr_filtered: Vec<u32>,
}

fn mean(v: &[u32]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().map(|&x| x as f64).sum::<f64>() / v.len() as f64)
}

impl EbitsByStage {
    pub fn means(&self) -> [Option<f64>; 3] {
        [
            mean(&self.generated),
            mean(&self.path_filtered),
            mean(&self.expr_filtered),
        ]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineReport {
    pub dir: PathBuf,
    pub task: String,
    pub method: String,
    pub n_gates: usize,
    pub completed: Vec<Stage>,
    pub ground_energy: f64,
    pub path_counts: Vec<f64>,
    pub expressibility: Vec<f64>,
    pub ebits: EbitsByStage,
    pub trace: Vec<TracePoint>,
    pub n_solutions: usize,
    /// Fewest ebits among solving circuits.
    pub min_ebits_solved: Option<u32>,
    pub best_energy: Option<f64>,
}

impl PipelineReport {
    pub fn is_complete(&self, stage: Stage) -> bool {
        self.completed.contains(&stage)
    }

    pub fn gap(&self) -> Option<f64> {
        self.best_energy.map(|e| e - self.ground_energy)
    }

    /// Sample skewness of the path-count distribution.
    pub fn path_skewness(&self) -> Option<f64> {
        skewness(&self.path_counts)
    }

    pub fn summary_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "pipeline state in {}", self.dir.display());
        for s in Stage::ALL {
            let status = if self.is_complete(s) {
                "done"
            } else {
                "pending"
            };
            let detail = match s {
                Stage::Generate => format!("{} circuits", self.ebits.generated.len()),
                Stage::Paths => format!("{} kept", self.ebits.path_filtered.len()),
                Stage::Expressibility => format!("{} kept", self.ebits.expr_filtered.len()),
                Stage::Train => format!("{} queries", self.trace.len()),
            };
            let _ = writeln!(out, "  {:<15} {:<8} {}", s.name(), status, detail);
        }
        let _ = writeln!(out, "ground energy: {:.6}", self.ground_energy);
        let _ = writeln!(out);
        let fmt_opt = |v: Option<String>| v.unwrap_or_else(|| "-".into());
        let _ = writeln!(
            out,
            "| task | method | N_g | queries | #solution | gap | #ebit |"
        );
        let _ = writeln!(out, "|---|---|---|---|---|---|---|");
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} | {} |",
            self.task,
            self.method,
            self.n_gates,
            self.trace.len(),
            if self.is_complete(Stage::Train) || !self.trace.is_empty() {
                self.n_solutions.to_string()
            } else {
                "pending".into()
            },
            fmt_opt(self.gap().map(|g| format!("{g:.4}"))),
            fmt_opt(self.min_ebits_solved.map(|e| e.to_string())),
        );
        out
    }
}

pub fn skewness(v: &[f64]) -> Option<f64> {
    if v.len() < 3 {
        return None;
    }
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let m2 = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    let m3 = v.iter().map(|x| (x - m).powi(3)).sum::<f64>() / n;
    (m2 > 0.0).then(|| m3 / m2.powf(1.5))
}

fn task_label(cfg: &PipelineConfig) -> String {
    let n = cfg.task.n.unwrap_or(cfg.n_logical);
    match cfg.task.kind {
        TaskKind::Tfim => format!("TFIM-{n}"),
        TaskKind::Heisenberg => format!("Heisenberg-{n}"),
        TaskKind::File => cfg
            .task
            .path
            .as_ref()
            .and_then(|p| p.file_stem())
            .map_or_else(|| "file".into(), |s| s.to_string_lossy().into_owned()),
    }
}

fn read_if<T: serde::de::DeserializeOwned>(
    dir: &Path,
    done: bool,
    file: &str,
) -> Result<Vec<T>, PipelineError> {
    if done {
        store::read_records(&dir.join(file))
    } else {
        Ok(Vec::new())
    }
}

/// Loads whatever stages are on disk.
pub fn build_report(dir: &Path) -> Result<PipelineReport, PipelineError> {
    let manifest = store::read_manifest(dir)?.ok_or_else(|| {
        PipelineError::MissingState(format!(
            "no pipeline state in {} (missing {}); run `dqas pipeline --config <file>` first",
            dir.display(),
            store::MANIFEST
        ))
    })?;
    let cfg: PipelineConfig = toml::from_str(&manifest.config)
        .map_err(|e| PipelineError::Config(format!("manifest config: {e}")))?;
    let completed: Vec<Stage> = Stage::ALL
        .into_iter()
        .filter(|s| manifest.completed.iter().any(|c| c == s.name()))
        .collect();
    let done = |s| completed.contains(&s);

    let gen: Vec<GeneratedRecord> = read_if(dir, done(Stage::Generate), store::STAGE1)?;
    let paths: Vec<PathRecord> = read_if(dir, done(Stage::Paths), store::STAGE2)?;
    let expr: Vec<ExprRecord> = read_if(dir, done(Stage::Expressibility), store::STAGE3)?;
    let queries: Vec<QueryRecord> = if dir.join(store::STAGE4).exists() {
        store::read_records(&dir.join(store::STAGE4))?
    } else {
        Vec::new()
    };

    let ebits_of = |id: usize| gen.get(id).map_or(0, |g| g.ebits);
    let ebits = EbitsByStage {
        generated: gen.iter().map(|g| g.ebits).collect(),
        path_filtered: paths
            .iter()
            .filter(|p| p.selected)
            .map(|p| ebits_of(p.id))
            .collect(),
        expr_filtered: expr
            .iter()
            .filter(|e| e.selected)
            .map(|e| ebits_of(e.id))
            .collect(),
    };
    let trace: Vec<TracePoint> = queries
        .iter()
        .map(|q| TracePoint {
            query: q.query,
            id: q.id,
            energy: q.best_energy,
            best_so_far: q.best_so_far,
            solved: q.solved,
        })
        .collect();
    Ok(PipelineReport {
        dir: dir.to_path_buf(),
        task: task_label(&cfg),
        method: cfg.method.to_string(),
        n_gates: cfg.n_gates,
        completed,
        ground_energy: manifest.ground_energy,
        path_counts: paths
            .iter()
            .map(|p| p.paths.parse::<f64>().unwrap_or(f64::INFINITY))
            .collect(),
        expressibility: expr.iter().map(|e| e.expressibility).collect(),
        ebits,
        n_solutions: queries.iter().filter(|q| q.solved).count(),
        min_ebits_solved: queries.iter().filter(|q| q.solved).map(|q| q.ebits).min(),
        best_energy: queries.last().map(|q| q.best_so_far),
        trace,
    })
}

/// Writes CSVs and the summary under `<dir>/report/`; returns the files written.
pub fn write_report(report: &PipelineReport) -> Result<Vec<PathBuf>, PipelineError> {
    let out = report.dir.join(REPORT_DIR);
    std::fs::create_dir_all(&out).map_err(|e| PipelineError::Io {
        path: out.clone(),
        source: e,
    })?;
    let mut files = Vec::new();
    let mut put = |name: &str, text: String| -> Result<(), PipelineError> {
        let p = out.join(name);
        store::write_atomic(&p, &text)?;
        files.push(p);
        Ok(())
    };

    if let Some(h) = Histogram::new(&report.path_counts, HIST_BINS) {
        put("hist_paths.csv", h.to_csv())?;
    }
    if let Some(h) = Histogram::new(&report.expressibility, HIST_BINS) {
        put("hist_expressibility.csv", h.to_csv())?;
    }
    if !report.ebits.generated.is_empty() {
        let e = &report.ebits;
        let max = e.generated.iter().copied().max().unwrap_or(0);
        let count = |v: &[u32], k: u32| v.iter().filter(|&&x| x == k).count();
        let mut csv = String::from("ebits,generated,path_filtered,expr_filtered\n");
        for k in 0..=max {
            let _ = writeln!(
                csv,
                "{k},{},{},{}",
                count(&e.generated, k),
                count(&e.path_filtered, k),
                count(&e.expr_filtered, k)
            );
        }
        put("hist_ebits.csv", csv)?;
    }
    if !report.trace.is_empty() {
        let mut csv = String::from("query,id,energy,best_so_far,solved\n");
        for t in &report.trace {
            let _ = writeln!(
                csv,
                "{},{},{},{},{}",
                t.query, t.id, t.energy, t.best_so_far, t.solved
            );
        }
        put("query_trace.csv", csv)?;
    }
    let opt = |v: Option<String>| v.unwrap_or_default();
    let summary = format!(
        "task,method,n_gates,queries,solutions,gap,ebit\n{},{},{},{},{},{},{}\n",
        report.task,
        report.method,
        report.n_gates,
        report.trace.len(),
        report.n_solutions,
        opt(report.gap().map(|g| g.to_string())),
        opt(report.min_ebits_solved.map(|e| e.to_string())),
    );
    put("summary.csv", summary)?;
    put("summary.md", report.summary_table())?;
    Ok(files)
}
