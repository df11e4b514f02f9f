use super::report::*;
use super::*;
use crate::agent::ppo::PpoConfig;

fn micro_cfg(dir: &Path) -> RunConfig {
    // tiny but complete training setup for fast tests
    let mut cfg = RunConfig::desk("C2", 77, dir.to_path_buf());
    cfg.max_fes = 12_000;
    cfg.delta = 1_000;
    cfg.epochs = 2;
    cfg.batch_size = 4;
    cfg.train_count = 8;
    cfg.test_count = 4;
    cfg.eval_runs = 2;
    cfg
}

#[test]
fn config_round_trips_through_toml() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::desk("C2", 42, dir.path().join("ckpt"));
    let path = dir.path().join("run.toml");
    cfg.save(&path).unwrap();
    let loaded = RunConfig::load(&path).unwrap();
    assert_eq!(toml::to_string(&cfg).unwrap(), toml::to_string(&loaded).unwrap());
}

#[test]
fn update_count_follows_episode_length() {
    let ppo = PpoConfig::default();
    assert_eq!(ppo.updates_for(70), 21);
    assert_eq!(ppo.updates_for(1), 1);
    assert_eq!(ppo.updates_for(10), 3);
}

#[test]
fn batch_arithmetic() {
    let order: Vec<usize> = (0..64).collect();
    assert_eq!(order.chunks(16).count(), 4);
}

#[test]
fn epoch_order_is_a_deterministic_permutation() {
    let a = epoch_order(32, 5, 3);
    let b = epoch_order(32, 5, 3);
    assert_eq!(a, b);
    let mut sorted = a.clone();
    sorted.sort_unstable();
    assert_eq!(sorted, (0..32).collect::<Vec<_>>());
    assert_ne!(epoch_order(32, 5, 4), a);
}

#[test]
fn training_resumes_bitwise_from_checkpoints() {
    let dir_full = tempfile::tempdir().unwrap();
    let dir_resume = tempfile::tempdir().unwrap();

    // uninterrupted run
    let cfg_full = micro_cfg(dir_full.path());
    train(&cfg_full).unwrap();

    // interrupted run: first epoch only, then resume to completion
    let mut cfg_first = micro_cfg(dir_resume.path());
    cfg_first.epochs = 1;
    train(&cfg_first).unwrap();
    let cfg_resume = micro_cfg(dir_resume.path());
    train(&cfg_resume).unwrap();

    let a = std::fs::read(dir_full.path().join("ckpt_epoch_002.bin")).unwrap();
    let b = std::fs::read(dir_resume.path().join("ckpt_epoch_002.bin")).unwrap();
    assert_eq!(a, b, "resumed checkpoint differs from uninterrupted run");
}

#[test]
fn evaluation_is_deterministic_and_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = micro_cfg(dir.path());
    let set = test_instances(&cfg).unwrap();
    let params = NetworkParams::new(cfg.dim, POOL_SIZE, 9);
    let env_cfg = cfg.env_config();

    let a = evaluate(&params, &set, &env_cfg, 2, cfg.seed, 0.05);
    let b = evaluate(&params, &set, &env_cfg, 2, cfg.seed, 0.05);
    assert_eq!(a.table.to_csv(), b.table.to_csv());
    assert_eq!(a.raw.to_csv(), b.raw.to_csv());

    // table consistency: descent recomputes from costs per run
    for records in &a.raw.records {
        for r in records {
            let expect = (1.0 - r.cost_end / r.cost0) * 100.0;
            assert!((r.descent_pct - expect).abs() < 1e-9);
        }
    }

    // oracle dominance per (instance, run) pair
    for k in 0..a.raw.records[0].len() {
        let star = a.raw.records[METHOD_AS_STAR][k].descent_pct;
        for m in METHOD_BACKBONE0..METHOD_BACKBONE0 + POOL_SIZE {
            assert!(star >= a.raw.records[m][k].descent_pct);
        }
    }

    // initial costs agree across methods for shared seeds
    for m in 1..METHOD_NAMES.len() {
        for (x, y) in a.raw.records[0].iter().zip(&a.raw.records[m]) {
            assert_eq!(x.cost0, y.cost0);
        }
    }
}

#[test]
fn worker_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = micro_cfg(dir.path());
    cfg.test_count = 4;
    let set = test_instances(&cfg).unwrap();
    let params = NetworkParams::new(cfg.dim, POOL_SIZE, 11);
    let env_cfg = cfg.env_config();
    let one = with_workers(Some(1), || {
        evaluate(&params, &set, &env_cfg, 2, 5, 0.05)
    });
    let two = with_workers(Some(2), || {
        evaluate(&params, &set, &env_cfg, 2, 5, 0.05)
    });
    assert_eq!(one.table.to_csv(), two.table.to_csv());
    assert_eq!(one.raw.to_csv(), two.raw.to_csv());
}

#[test]
fn transfer_on_same_set_equals_plain_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = micro_cfg(dir.path());
    let set = test_instances(&cfg).unwrap();
    let params = NetworkParams::new(cfg.dim, POOL_SIZE, 13);
    let env_cfg = cfg.env_config();
    let plain = evaluate(&params, &set, &env_cfg, 2, 3, 0.05);
    let transfer = transfer_eval(&params, &set, &env_cfg, 2, 3, 0.05);
    assert_eq!(plain.table.to_csv(), transfer.table.to_csv());
}

#[test]
fn transfer_splits_partition_the_classes() {
    let (train, test) = transfer_split(1).unwrap();
    assert_eq!(train, vec![ProblemClass::C1, ProblemClass::C2]);
    assert_eq!(test.len(), 8);
    assert_eq!(test[0], ProblemClass::C3);
    let (train, test) = transfer_split(2).unwrap();
    assert_eq!(train.len(), 5);
    assert_eq!(test.len(), 5);
    let (train, test) = transfer_split(3).unwrap();
    assert_eq!(train.len(), 8);
    assert_eq!(test, vec![ProblemClass::C9, ProblemClass::C10]);
    assert!(transfer_split(4).is_none());
}

#[test]
fn report_files_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = micro_cfg(dir.path());
    let set = test_instances(&cfg).unwrap();
    let params = NetworkParams::new(cfg.dim, POOL_SIZE, 17);
    let outcome = evaluate(&params, &set, &cfg.env_config(), 2, 7, 0.05);
    let out_dir = dir.path().join("report");
    let files = emit_report(&outcome, &out_dir).unwrap();
    assert!(files.iter().all(|f| f.exists()));

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap())
            .unwrap();
    let entries = manifest["files"].as_array().unwrap();
    assert_eq!(entries.len(), files.len() - 1);
    for e in entries {
        let name = e["name"].as_str().unwrap();
        let content = std::fs::read(out_dir.join(name)).unwrap();
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        hasher.update(&content);
        assert_eq!(format!("{:x}", hasher.finalize()), e["sha256"].as_str().unwrap());
    }

    // descent curves are non-increasing in best cost per episode
    let curves = std::fs::read_to_string(out_dir.join("descent_curves_rl.csv")).unwrap();
    let mut last: Option<(String, f64)> = None;
    for line in curves.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let key = format!("{}-{}", cols[0], cols[1]);
        let best: f64 = cols[5].parse().unwrap();
        if let Some((k, b)) = &last {
            if *k == key {
                assert!(best <= *b + 1e-15);
            }
        }
        last = Some((key, best));
    }

    // histogram rows sum to the number of evaluated episodes
    let hist = std::fs::read_to_string(out_dir.join("action_histogram.csv")).unwrap();
    for line in hist.lines().skip(1) {
        let cols: Vec<usize> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cols[1] + cols[2] + cols[3] + cols[4], cols[5]);
    }
}

#[test]
fn validation_log_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = micro_cfg(dir.path());
    let out = train(&cfg).unwrap();
    assert_eq!(out.validation.len(), 2);
    let log = std::fs::read_to_string(dir.path().join("validation.csv")).unwrap();
    assert_eq!(log.lines().count(), 3); // header + 2 epochs
    assert!(out.final_checkpoint.exists());
}
