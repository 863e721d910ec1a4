use std::fs;
use std::path::Path;

use dqas::pipeline::store::{self, ExprRecord, GeneratedRecord, PathRecord, QueryRecord};
use dqas::pipeline::{
    build_report, run, run_pipeline, write_report, PipelineConfig, PipelineError, RunOptions, Stage,
};
use num_bigint::BigUint;

const SMALL: &str = r#"
output_dir = "out"
master_seed = 11
n_gates = 24
method = "both"
n_logical = 6
k_all = 60
k_paths = 12
k_expr = 5
query_budget = 5

[task]
kind = "tfim"

[expressibility]
n_samples = 200
n_bins = 30

[train]
max_iters = 120
n_restarts = 2
"#;

fn config(dir: &Path, extra: &str) -> PipelineConfig {
    PipelineConfig::from_toml_str(&format!("{extra}\n{SMALL}"), dir).unwrap()
}

fn read(dir: &Path, file: &str) -> String {
    fs::read_to_string(dir.join(file)).unwrap()
}

#[test]
fn output_does_not_depend_on_worker_count() {
    let t = tempfile::tempdir().unwrap();
    let a = t.path().join("a");
    let b = t.path().join("b");
    fs::create_dir_all(&a).unwrap();
    fs::create_dir_all(&b).unwrap();
    run_pipeline(&config(&a, "workers = 1")).unwrap();
    run_pipeline(&config(&b, "workers = 3")).unwrap();
    for stage in Stage::ALL {
        assert_eq!(
            read(&a.join("out"), stage.file()),
            read(&b.join("out"), stage.file()),
            "{stage} differs"
        );
    }
}

#[test]
fn filters_keep_the_right_candidates() {
    let t = tempfile::tempdir().unwrap();
    let cfg = config(t.path(), "");
    run(&cfg, RunOptions::default()).unwrap();
    let out = &cfg.output_dir;
    let gen: Vec<GeneratedRecord> = store::read_records(&out.join(store::STAGE1)).unwrap();
    let paths: Vec<PathRecord> = store::read_records(&out.join(store::STAGE2)).unwrap();
    let expr: Vec<ExprRecord> = store::read_records(&out.join(store::STAGE3)).unwrap();
    let queries: Vec<QueryRecord> = store::read_records(&out.join(store::STAGE4)).unwrap();
    assert_eq!(gen.len(), 60);
    assert_eq!(paths.len(), 60);

    // No unselected circuit has more paths than a selected one.
    let count = |p: &PathRecord| p.paths.parse::<BigUint>().unwrap();
    let kept: Vec<_> = paths.iter().filter(|p| p.selected).collect();
    assert_eq!(kept.len(), 12);
    let min_kept = kept.iter().map(|p| count(p)).min().unwrap();
    assert!(paths
        .iter()
        .filter(|p| !p.selected)
        .all(|p| count(p) <= min_kept));

    let ids: Vec<usize> = expr.iter().map(|e| e.id).collect();
    let mut want: Vec<usize> = kept.iter().map(|p| p.id).collect();
    want.sort();
    assert_eq!(ids, want);
    let chosen: Vec<_> = expr.iter().filter(|e| e.selected).collect();
    assert_eq!(chosen.len(), 5);
    let max_chosen = chosen
        .iter()
        .map(|e| e.expressibility)
        .fold(f64::MIN, f64::max);
    assert!(expr
        .iter()
        .filter(|e| !e.selected)
        .all(|e| e.expressibility >= max_chosen));

    let mut by_rank = chosen.clone();
    by_rank.sort_by_key(|e| e.rank);
    let order: Vec<usize> = queries.iter().map(|q| q.id).collect();
    assert_eq!(order, by_rank.iter().map(|e| e.id).collect::<Vec<_>>());
    let mut best = f64::INFINITY;
    for (i, q) in queries.iter().enumerate() {
        best = best.min(q.best_energy);
        assert_eq!(q.query, i);
        assert_eq!(q.best_so_far, best);
        assert_eq!(q.ebits, gen[q.id].ebits);
    }
}

#[test]
fn interrupted_run_resumes_to_identical_output() {
    let t = tempfile::tempdir().unwrap();
    let whole = t.path().join("whole");
    let parts = t.path().join("parts");
    fs::create_dir_all(&whole).unwrap();
    fs::create_dir_all(&parts).unwrap();
    run(&config(&whole, ""), RunOptions::default()).unwrap();

    let cfg = config(&parts, "");
    let s = run(
        &cfg,
        RunOptions {
            until: Stage::Train,
            max_new_queries: Some(2),
        },
    )
    .unwrap();
    assert_eq!(s.queries_done, 2);
    assert!(!s.completed.contains(&Stage::Train));

    // A half-written record is dropped on resume.
    let q = cfg.output_dir.join(store::STAGE4);
    let mut text = fs::read_to_string(&q).unwrap();
    text.push_str("{\"query\":2,\"id\":");
    fs::write(&q, text).unwrap();

    let s = run(&cfg, RunOptions::default()).unwrap();
    assert_eq!(s.completed, Stage::ALL.to_vec());
    assert_eq!(s.queries_done, 5);
    for stage in Stage::ALL {
        assert_eq!(
            read(&whole.join("out"), stage.file()),
            read(&cfg.output_dir, stage.file())
        );
    }
    // Re-running a finished pipeline is a no-op.
    let before = read(&cfg.output_dir, store::STAGE4);
    run(&cfg, RunOptions::default()).unwrap();
    assert_eq!(before, read(&cfg.output_dir, store::STAGE4));
}

#[test]
fn staged_runs_match_a_single_run() {
    let t = tempfile::tempdir().unwrap();
    let whole = t.path().join("whole");
    let staged = t.path().join("staged");
    fs::create_dir_all(&whole).unwrap();
    fs::create_dir_all(&staged).unwrap();
    run(&config(&whole, ""), RunOptions::default()).unwrap();
    let cfg = config(&staged, "");
    for until in Stage::ALL {
        let s = run(
            &cfg,
            RunOptions {
                until,
                max_new_queries: None,
            },
        )
        .unwrap();
        assert_eq!(s.completed.last(), Some(&until));
    }
    for stage in Stage::ALL {
        assert_eq!(
            read(&whole.join("out"), stage.file()),
            read(&cfg.output_dir, stage.file())
        );
    }
}

#[test]
fn changed_config_is_refused() {
    let t = tempfile::tempdir().unwrap();
    run(
        &config(t.path(), ""),
        RunOptions {
            until: Stage::Generate,
            max_new_queries: None,
        },
    )
    .unwrap();
    let changed = PipelineConfig::from_toml_str(
        &SMALL.replace("master_seed = 11", "master_seed = 12"),
        t.path(),
    )
    .unwrap();
    let err = run(&changed, RunOptions::default()).unwrap_err();
    assert!(matches!(err, PipelineError::FingerprintMismatch { .. }));
    assert!(err.is_config_error());
    // Worker count is not part of the fingerprint.
    run(&config(t.path(), "workers = 2"), RunOptions::default()).unwrap();
}

#[test]
fn stop_after_solutions_ends_training_early() {
    let t = tempfile::tempdir().unwrap();
    // A threshold this loose makes every query a solution.
    let mut cfg = config(t.path(), "stop_after_solutions = 2");
    cfg.train.accuracy_threshold = 100.0;
    let s = run(&cfg, RunOptions::default()).unwrap();
    assert_eq!(s.queries_done, 2);
    assert!(s.completed.contains(&Stage::Train));
    let r = build_report(&cfg.output_dir).unwrap();
    assert_eq!(r.n_solutions, 2);
}

#[test]
fn report_handles_partial_and_missing_state() {
    let t = tempfile::tempdir().unwrap();
    assert!(matches!(
        build_report(&t.path().join("nothing")),
        Err(PipelineError::MissingState(_))
    ));

    let cfg = config(t.path(), "");
    run(
        &cfg,
        RunOptions {
            until: Stage::Paths,
            max_new_queries: None,
        },
    )
    .unwrap();
    let r = build_report(&cfg.output_dir).unwrap();
    assert!(r.is_complete(Stage::Paths));
    assert!(!r.is_complete(Stage::Train));
    assert!(r.trace.is_empty());
    let table = r.summary_table();
    assert!(table.contains("pending"), "{table}");
    let files = write_report(&r).unwrap();
    assert!(files.iter().all(|f| f.exists()));

    run(&cfg, RunOptions::default()).unwrap();
    let r = build_report(&cfg.output_dir).unwrap();
    assert_eq!(r.trace.len(), 5);
    assert!(r.gap().unwrap() >= -1e-9);
    write_report(&r).unwrap();
    let csv = fs::read_to_string(cfg.output_dir.join("report/query_trace.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);
}

#[test]
fn corrupt_stage_files_are_reported() {
    let t = tempfile::tempdir().unwrap();
    let cfg = config(t.path(), "");
    run(
        &cfg,
        RunOptions {
            until: Stage::Paths,
            max_new_queries: None,
        },
    )
    .unwrap();
    fs::write(cfg.output_dir.join(store::STAGE2), "{\"id\": 0}\n").unwrap();
    let err = run(&cfg, RunOptions::default()).unwrap_err();
    assert!(
        matches!(err, PipelineError::Corrupt { line: 1, .. }),
        "{err}"
    );
    assert!(!err.is_config_error());
}

#[test]
fn config_validation() {
    let t = tempfile::tempdir().unwrap();
    for (from, to) in [
        ("k_paths = 12", "k_paths = 100"),
        ("k_expr = 5", "k_expr = 0"),
        ("n_logical = 6", "n_logical = 1"),
        ("kind = \"tfim\"", "kind = \"ising\""),
        ("n_gates = 24", "n_gates = 24\nbogus = 1"),
    ] {
        let text = SMALL.replace(from, to);
        assert!(
            PipelineConfig::from_toml_str(&text, t.path()).is_err(),
            "{to}"
        );
    }
    let cfg = config(t.path(), "");
    assert_eq!(cfg.output_dir, t.path().join("out"));
    let back =
        PipelineConfig::from_toml_str(&cfg.to_toml_string(), Path::new("/elsewhere")).unwrap();
    assert_eq!(back, cfg);
}

#[test]
fn file_task_reads_hamiltonian_relative_to_config() {
    let t = tempfile::tempdir().unwrap();
    let h = dqas::hamiltonian::build_tfim(6, false).unwrap();
    fs::write(t.path().join("h.txt"), h.to_text()).unwrap();
    let text = SMALL.replace("kind = \"tfim\"", "kind = \"file\"\npath = \"h.txt\"");
    let cfg = PipelineConfig::from_toml_str(&text, t.path()).unwrap();
    let s = run(
        &cfg,
        RunOptions {
            until: Stage::Generate,
            max_new_queries: None,
        },
    )
    .unwrap();
    assert!((s.ground_energy - h.exact_ground_energy().unwrap()).abs() < 1e-12);

    let missing = SMALL.replace("kind = \"tfim\"", "kind = \"file\"");
    assert!(PipelineConfig::from_toml_str(&missing, t.path()).is_err());
}
