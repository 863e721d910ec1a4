use std::cmp::Ordering;
use std::path::Path;
use std::time::Instant;

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::PipelineConfig;
use super::report::{build_report, PipelineReport};
use super::store::{
    self, ExprRecord, GeneratedRecord, Manifest, PathRecord, QueryRecord, TimingRecord,
};
use super::{PipelineError, Stage};
use crate::circuit::Circuit;
use crate::circuitgen::{GenRequest, Generator};
use crate::dag::path_count;
use crate::device::DeviceGraph;
use crate::expressibility::estimate_expressibility;
use crate::hamiltonian::PauliHamiltonian;
use crate::rng::{self, Purpose};
use crate::vqe::{train_query, TrainConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunOptions {
    /// Last stage to run.
    pub until: Stage,
    /// Stop after appending this many new query records (simulates an interruption).
    pub max_new_queries: Option<usize>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            until: Stage::Train,
            max_new_queries: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunStatus {
    pub completed: Vec<Stage>,
    pub queries_done: usize,
    pub ground_energy: f64,
}

struct Ctx<'a> {
    cfg: &'a PipelineConfig,
    dir: &'a Path,
    device: &'a DeviceGraph,
    generator: Generator<'a>,
    h: &'a PauliHamiltonian,
    ground: f64,
}

/// Runs every stage and renders the report.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineReport, PipelineError> {
    run(cfg, RunOptions::default())?;
    build_report(&cfg.output_dir)
}

pub fn run(cfg: &PipelineConfig, opts: RunOptions) -> Result<RunStatus, PipelineError> {
    cfg.validate()?;
    let device = cfg.load_device()?;
    if cfg.n_logical > device.num_data_qubits() {
        return Err(PipelineError::Config(format!(
            "n_logical {} exceeds the device's {} data qubits",
            cfg.n_logical,
            device.num_data_qubits()
        )));
    }
    let h = cfg.load_hamiltonian()?;
    let ground = h.exact_ground_energy()?;
    let dir = cfg.output_dir.as_path();
    std::fs::create_dir_all(dir).map_err(|e| PipelineError::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;

    let fingerprint = cfg.fingerprint(&device, &h);
    let mut manifest = match store::read_manifest(dir)? {
        Some(m) if m.fingerprint != fingerprint => {
            return Err(PipelineError::FingerprintMismatch {
                dir: dir.to_path_buf(),
                expected: fingerprint,
                found: m.fingerprint,
            })
        }
        Some(m) => m,
        None => {
            let m = Manifest {
                format: store::FORMAT_VERSION,
                fingerprint,
                device_fingerprint: device.fingerprint(),
                ground_energy: ground,
                config: cfg.to_toml_string(),
                completed: Vec::new(),
            };
            store::write_manifest(dir, &m)?;
            m
        }
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| PipelineError::Workers(e.to_string()))?;
    let ctx = Ctx {
        cfg,
        dir,
        device: &device,
        generator: Generator::new(&device),
        h: &h,
        ground,
    };

    let mut queries_done = 0;
    pool.install(|| -> Result<(), PipelineError> {
        for stage in Stage::ALL.into_iter().filter(|s| *s <= opts.until) {
            if manifest.completed.iter().any(|c| c == stage.name()) {
                continue;
            }
            let finished = match stage {
                Stage::Generate => ctx.stage_generate().map(|_| true)?,
                Stage::Paths => ctx.stage_paths().map(|_| true)?,
                Stage::Expressibility => ctx.stage_expressibility().map(|_| true)?,
                Stage::Train => {
                    let (done, finished) = ctx.stage_train(opts.max_new_queries)?;
                    queries_done = done;
                    finished
                }
            };
            if !finished {
                return Ok(());
            }
            manifest.completed.push(stage.name().to_string());
            store::write_manifest(dir, &manifest)?;
        }
        Ok(())
    })?;
    if queries_done == 0 && dir.join(store::STAGE4).exists() {
        queries_done = store::read_appended::<QueryRecord>(&dir.join(store::STAGE4))?.len();
    }

    let completed = Stage::ALL
        .into_iter()
        .filter(|s| manifest.completed.iter().any(|c| c == s.name()))
        .collect();
    Ok(RunStatus {
        completed,
        queries_done,
        ground_energy: ground,
    })
}

impl Ctx<'_> {
    fn regenerate(&self, rec: &GeneratedRecord) -> Result<Circuit, PipelineError> {
        self.generator
            .generate(&GenRequest {
                n_gates: self.cfg.n_gates,
                gate_dist: rec.gate_dist,
                p_nonlocal: rec.p_nonlocal,
                method: self.cfg.method,
                n_logical: self.cfg.n_logical,
                seed: rec.seed,
            })
            .map_err(|source| PipelineError::Generation { id: rec.id, source })
    }

    fn stage_generate(&self) -> Result<(), PipelineError> {
        let cfg = self.cfg;
        let records = (0..cfg.k_all)
            .into_par_iter()
            .map(|id| {
                let seed = rng::sub_seed(cfg.master_seed, Purpose::Generate, id as u64);
                let mut pick = ChaCha8Rng::seed_from_u64(seed);
                let gate_dist = cfg.gate_dists[pick.random_range(0..cfg.gate_dists.len())];
                let p_nonlocal =
                    cfg.p_nonlocal_choices[pick.random_range(0..cfg.p_nonlocal_choices.len())];
                let mut rec = GeneratedRecord {
                    id,
                    seed,
                    gate_dist,
                    p_nonlocal,
                    ebits: 0,
                    n_params: 0,
                };
                let c = self.regenerate(&rec)?;
                rec.ebits = c.ebits();
                rec.n_params = c.n_params();
                Ok(rec)
            })
            .collect::<Result<Vec<_>, PipelineError>>()?;
        store::write_records(&self.dir.join(store::STAGE1), &records)
    }

    fn read<T: serde::de::DeserializeOwned>(&self, stage: Stage) -> Result<Vec<T>, PipelineError> {
        store::read_records(&self.dir.join(stage.file()))
    }

    fn stage_paths(&self) -> Result<(), PipelineError> {
        let gen: Vec<GeneratedRecord> = self.read(Stage::Generate)?;
        let wires = self.device.num_qubits();
        let counts = gen
            .par_iter()
            .map(|rec| Ok(path_count(&self.regenerate(rec)?, wires)))
            .collect::<Result<Vec<BigUint>, PipelineError>>()?;
        let mut order: Vec<usize> = (0..gen.len()).collect();
        // Stable: ties keep generation order.
        order.sort_by(|&a, &b| counts[b].cmp(&counts[a]));
        let mut rank = vec![0; gen.len()];
        for (r, &i) in order.iter().enumerate() {
            rank[i] = r;
        }
        let records: Vec<PathRecord> = gen
            .iter()
            .enumerate()
            .map(|(i, rec)| PathRecord {
                id: rec.id,
                paths: counts[i].to_string(),
                rank: rank[i],
                selected: rank[i] < self.cfg.k_paths,
            })
            .collect();
        store::write_records(&self.dir.join(store::STAGE2), &records)
    }

    fn stage_expressibility(&self) -> Result<(), PipelineError> {
        let gen: Vec<GeneratedRecord> = self.read(Stage::Generate)?;
        let paths: Vec<PathRecord> = self.read(Stage::Paths)?;
        let mut chosen: Vec<&PathRecord> = paths.iter().filter(|p| p.selected).collect();
        chosen.sort_by_key(|p| p.rank);
        let cfg = self.cfg;
        let mut records = chosen
            .par_iter()
            .map(|p| {
                let rec = gen.get(p.id).filter(|g| g.id == p.id).ok_or_else(|| {
                    PipelineError::MissingState(format!("stage 1 has no circuit {}", p.id))
                })?;
                let c = self.regenerate(rec)?;
                let seed = rng::sub_seed(cfg.master_seed, Purpose::Expressibility, p.id as u64);
                let est = estimate_expressibility(
                    &c,
                    &cfg.expressibility,
                    &mut ChaCha8Rng::seed_from_u64(seed),
                )
                .map_err(|source| PipelineError::Expressibility { id: p.id, source })?;
                Ok(ExprRecord {
                    id: p.id,
                    expressibility: est.value,
                    n_samples: est.n_samples,
                    n_bins: est.n_bins,
                    seed,
                    path_rank: p.rank,
                    rank: 0,
                    selected: false,
                })
            })
            .collect::<Result<Vec<_>, PipelineError>>()?;
        // Stable ascending sort over path-rank order.
        let mut order: Vec<usize> = (0..records.len()).collect();
        order.sort_by(|&a, &b| {
            records[a]
                .expressibility
                .partial_cmp(&records[b].expressibility)
                .unwrap_or(Ordering::Equal)
        });
        for (r, &i) in order.iter().enumerate() {
            records[i].rank = r;
            records[i].selected = r < cfg.k_expr;
        }
        records.sort_by_key(|r| r.id);
        store::write_records(&self.dir.join(store::STAGE3), &records)
    }

    /// Returns the number of query records on disk and whether the stage finished.
    fn stage_train(&self, max_new: Option<usize>) -> Result<(usize, bool), PipelineError> {
        let gen: Vec<GeneratedRecord> = self.read(Stage::Generate)?;
        let expr: Vec<ExprRecord> = self.read(Stage::Expressibility)?;
        let mut queue: Vec<&ExprRecord> = expr.iter().filter(|e| e.selected).collect();
        queue.sort_by_key(|e| e.rank);
        queue.truncate(self.cfg.query_budget());

        let qpath = self.dir.join(store::STAGE4);
        let tpath = self.dir.join(store::TIMINGS);
        let done: Vec<QueryRecord> = store::read_appended(&qpath)?;
        store::truncate_lines(&tpath, done.len())?;
        for (q, rec) in done.iter().enumerate() {
            if rec.query != q || queue.get(q).map(|e| e.id) != Some(rec.id) {
                return Err(PipelineError::Corrupt {
                    path: qpath,
                    line: q + 1,
                    message: "query record does not match the candidate order".into(),
                });
            }
        }

        let mut best = done.last().map_or(f64::INFINITY, |r| r.best_so_far);
        let mut solved = done.iter().filter(|r| r.solved).count();
        let stop_at = self.cfg.stop_after_solutions.unwrap_or(usize::MAX);
        let train_cfg = TrainConfig {
            target_energy: Some(self.ground),
            ..self.cfg.train.clone()
        };
        let mut next = done.len();
        let mut appended = 0;
        let limit = max_new.unwrap_or(usize::MAX);
        let chunk = rayon::current_num_threads().max(1);

        while next < queue.len() && solved < stop_at && appended < limit {
            let end = (next + chunk)
                .min(queue.len())
                .min(next.saturating_add(limit - appended));
            let results = queue[next..end]
                .par_iter()
                .map(|e| {
                    let rec = gen.get(e.id).filter(|g| g.id == e.id).ok_or_else(|| {
                        PipelineError::MissingState(format!("stage 1 has no circuit {}", e.id))
                    })?;
                    let c = self.regenerate(rec)?;
                    let seed = rng::sub_seed(self.cfg.master_seed, Purpose::Training, e.id as u64);
                    let start = Instant::now();
                    let r =
                        train_query(&c, self.h, &train_cfg, &mut ChaCha8Rng::seed_from_u64(seed))
                            .map_err(|source| PipelineError::Training { id: e.id, source })?;
                    Ok((c.ebits(), r, start.elapsed().as_secs_f64()))
                })
                .collect::<Result<Vec<_>, PipelineError>>()?;
            for (offset, (ebits, r, wall)) in results.into_iter().enumerate() {
                let q = next + offset;
                best = best.min(r.best_energy);
                solved += usize::from(r.solved);
                let id = queue[q].id;
                store::append_record(
                    &qpath,
                    &QueryRecord {
                        query: q,
                        id,
                        ebits,
                        restart_energies: r.restart_energies,
                        iterations: r.iterations_used,
                        best_energy: r.best_energy,
                        solved: r.solved,
                        best_so_far: best,
                    },
                )?;
                store::append_record(
                    &tpath,
                    &TimingRecord {
                        query: q,
                        id,
                        wall_seconds: wall,
                    },
                )?;
                appended += 1;
                // Stopping point must not depend on the chunk size.
                if solved >= stop_at {
                    return Ok((q + 1, true));
                }
            }
            next = end;
        }
        let finished = next >= queue.len() || solved >= stop_at;
        Ok((next, finished))
    }
}
