use std::collections::BTreeMap;
use std::path::Path;

use qem_core::bootstrap::ModelBudget;
use qem_core::error::Error;
use qem_core::harness::*;
use qem_core::opt::SearchSpace;

fn small_config() -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.seed = 17;
    c.uq.n_samples = 40;
    c.uq.sizes = vec![10, 30];
    c.uq.replicas = 3;
    c.optimizer.runs = 2;
    c.optimizer.surrogate.m_init = 4;
    c.optimizer.surrogate.m_iter = 2;
    c.optimizer.surrogate.de.max_generations = 20;
    c.transfer.count = 4;
    c.bootstrap.budget = ModelBudget::Equal { shots_per_level: 10_000 };
    c
}

/// Every persisted file except timing, keyed by relative path.
fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else if p.file_name().unwrap() != "timing.json" {
                out.insert(p.strip_prefix(root).unwrap().display().to_string(), std::fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

#[test]
fn prepare_state_writes_circuit_and_family() {
    let tmp = tempfile::tempdir().unwrap();
    let a = run_prepare_state(&small_config(), tmp.path()).unwrap();
    assert_eq!(a.summary["cnot_count"], 60);
    assert!(a.summary["ground_state"]["residual"].as_f64().unwrap() <= 1e-6);
    let fam = load_family(&tmp.path().join("family/manifest.csv")).unwrap();
    assert_eq!(fam.len(), 4);
    let base = qem_core::circuit::Circuit::load(tmp.path().join("circuit.json")).unwrap();
    assert_eq!(fam[0].circuit, base);
    assert!(tmp.path().join("timing.json").is_file());
}

#[test]
fn convergence_is_bitwise_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = small_config();
    let art = run_convergence(&cfg, a.path()).unwrap();
    run_convergence(&cfg, b.path()).unwrap();
    assert_eq!(snapshot(a.path()), snapshot(b.path()));
    // 3 replicas of 10 and of 30 mitigations, each at the full budget
    assert_eq!(art.shots.quantum, 3 * (10 + 30) * 100_000);
    let csv = std::fs::read_to_string(a.path().join("convergence.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 5 * 2 * 3);
    assert_eq!(RunArtifact::load(a.path()).unwrap(), art);
}

#[test]
fn single_replica_has_no_spread() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small_config();
    cfg.uq.replicas = 1;
    run_convergence(&cfg, tmp.path()).unwrap();
    let mut r = csv::Reader::from_path(tmp.path().join("boxplot.csv")).unwrap();
    for row in r.records() {
        let row = row.unwrap();
        assert_eq!(row[2], row[6], "{row:?}");
        assert_eq!(&row[7], "0");
    }
}

#[test]
fn invalid_config_fails_before_writing() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let mut cfg = small_config();
    cfg.uq.beta = 0.0;
    cfg.optimizer.runs = 0;
    match run_robust_design(&cfg, &out) {
        Err(Error::Config(errs)) => assert_eq!(errs.len(), 2),
        other => panic!("{other:?}"),
    }
    assert!(!out.exists());
}

#[test]
fn optimize_records_every_evaluation() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = small_config();
    let art = run_robust_design(&cfg, a.path()).unwrap();
    run_robust_design(&cfg, b.path()).unwrap();
    assert_eq!(snapshot(a.path()), snapshot(b.path()));
    let ledger = std::fs::read_to_string(a.path().join("ledger.jsonl")).unwrap();
    assert_eq!(ledger.lines().count(), 2 * 6);
    // 12 evaluations of 40 mitigations at 1e5 shots each
    assert_eq!(art.shots.quantum, 12 * 40 * 100_000);
    let runs: Vec<RunRecord> =
        std::fs::read_to_string(a.path().join("runs.jsonl")).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(runs.len(), 2);
    assert_ne!(runs[0].seed, runs[1].seed);
    for r in &runs {
        let n = r.best_params["n_levels"];
        assert!(n.fract() == 0.0 && (4.0..=10.0).contains(&n));
    }
}

#[test]
fn zero_iteration_compare_counts_only_initialization() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small_config();
    cfg.optimizer.surrogate.m_iter = 0;
    let art = run_bootstrap_compare(&cfg, tmp.path()).unwrap();
    let direct = art.summary["quantum_shots"]["direct"].as_u64().unwrap();
    let boot = art.summary["quantum_shots"]["bootstrap"].as_u64().unwrap();
    assert_eq!(direct, 2 * 4 * 40 * 100_000);
    assert_eq!(boot, 2 * 10 * 10_000);
    assert_eq!(art.shots.quantum, direct + boot);
    // matched arms share their initial designs
    let read = |name: &str| -> Vec<RunRecord> {
        std::fs::read_to_string(tmp.path().join(name)).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect()
    };
    let (d, b) = (read("runs_direct.jsonl"), read("runs_bootstrap.jsonl"));
    assert_eq!(d.iter().map(|r| r.seed).collect::<Vec<_>>(), b.iter().map(|r| r.seed).collect::<Vec<_>>());
}

#[test]
fn transfer_base_row_is_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small_config();
    cfg.optimizer.cost = CostPath::Bootstrap;
    let art = run_transfer(&cfg, tmp.path()).unwrap();
    let rows: Vec<TransferRow> = std::fs::read_to_string(tmp.path().join("transfer.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0].optimized_mean, rows[0].transferred_mean);
    assert_eq!(rows[0].optimized_sd, rows[0].transferred_sd);
    assert!(rows[0].agree);
    assert_eq!(art.summary["members"], 4);
}

#[test]
fn transfer_reads_a_prepared_family() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config();
    run_prepare_state(&cfg, &tmp.path().join("prep")).unwrap();
    let mut t = cfg.clone();
    t.circuit = CircuitSource::File { path: tmp.path().join("prep/circuit.json") };
    t.transfer.family = Some(tmp.path().join("prep/family/manifest.csv"));
    t.optimizer.surrogate.m_iter = 0;
    let a = run_transfer(&t, &tmp.path().join("a")).unwrap();
    let mut g = cfg.clone();
    g.optimizer.surrogate.m_iter = 0;
    let b = run_transfer(&g, &tmp.path().join("b")).unwrap();
    assert_eq!(a.summary, b.summary);
}

#[test]
fn cdr_design_with_generated_pool() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small_config();
    cfg.mitigation = MitigationConfig::Cdr(CdrConfig::default());
    cfg.pool.size = 30;
    cfg.pool.mcmc.tol = 0.05;
    cfg.pool.mcmc.restarts = 3;
    cfg.pool.mcmc.kept_non_clifford = 3;
    cfg.optimizer.method = OptimizerMethod::DifferentialEvolution;
    cfg.optimizer.de.population = 6;
    cfg.optimizer.de.max_generations = 2;
    cfg.uq.statistic = qem_core::uq::Statistic::Mean;
    let pool_dir = tmp.path().join("pool");
    cfg.pool.path = Some(pool_dir.clone());
    let gen = run_gen_training_pool(&cfg, &tmp.path().join("gen")).unwrap();
    assert_eq!(gen.summary["size"].as_u64().unwrap() + gen.summary["unreached"].as_u64().unwrap(), 30);
    let art = run_robust_design(&cfg, &tmp.path().join("opt")).unwrap();
    let space: SearchSpace = cfg.space();
    let y = art.summary["best_params"]["y_max"].as_f64().unwrap();
    assert!(space.contains(&[y, art.summary["best_params"]["shape"].as_f64().unwrap()]));
    // each mitigation spends the full CDR budget
    let evals = std::fs::read_to_string(tmp.path().join("opt/ledger.jsonl")).unwrap().lines().count() as u64;
    assert_eq!(art.shots.quantum, evals * 40 * 10_000);
}
