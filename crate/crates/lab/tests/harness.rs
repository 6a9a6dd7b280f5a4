use std::fs;

use homeostat_core::geometry::{random_action, MAX_STEP_LEN};
use homeostat_core::rng::{stream, Stream};
use homeostat_core::{ExperimentConfig, Layout, RoomId, StartStrategy, Trainer};
use homeostat_lab::harness::{self, alpha_stats, sort_rows, SweepRow};
use homeostat_lab::metrics::METRICS_HEADER;
use homeostat_lab::{checkpoint, run_dir::RunDir};

fn small(episodes: u64) -> ExperimentConfig {
    ExperimentConfig {
        episodes,
        warmup: 40,
        batch_size: 16,
        validation_pool: 500,
        ..Default::default()
    }
}

#[test]
fn one_episode_accounting() {
    let r = harness::run_training(&small(1), None).unwrap();
    assert_eq!(r.trainer.buffer().len(), 10);
    assert_eq!(r.trainer.normalizer().updates(), 1);
    assert_eq!(r.trainer.env_steps(), 10);
}

#[test]
fn transitions_are_conserved_under_eviction() {
    let cfg = ExperimentConfig {
        buffer_capacity: 35,
        ..small(6)
    };
    let r = harness::run_training(&cfg, None).unwrap();
    assert_eq!(r.trainer.env_steps(), 60);
    assert_eq!(r.trainer.buffer().len(), 35);
    assert_eq!(r.trainer.normalizer().updates(), 6);
}

#[test]
fn same_seed_same_files() {
    let cfg = ExperimentConfig {
        checkpoint_interval: 3,
        ..small(8)
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    harness::run_training(&cfg, Some(a.path())).unwrap();
    harness::run_training(&cfg, Some(b.path())).unwrap();
    for name in ["metrics.csv", "forward.ckpt", "extended.ckpt", "actor.ckpt", "critic_target.ckpt", "checkpoints/episode_6/actor.ckpt"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
    let metrics = fs::read_to_string(a.path().join("metrics.csv")).unwrap();
    let lines: Vec<&str> = metrics.lines().collect();
    assert_eq!(lines[0], METRICS_HEADER);
    assert_eq!(lines.len(), 9);
    // Cumulative counts never decrease, episode indices increase.
    let mut last = (-1i64, 0u64);
    for l in &lines[1..] {
        let f: Vec<&str> = l.split(',').collect();
        let (ep, cum): (i64, u64) = (f[0].parse().unwrap(), f[8].parse().unwrap());
        assert!(ep > last.0 && cum >= last.1);
        last = (ep, cum);
    }
    assert!(a.path().join("timing.csv").exists());
    assert!(!a.path().join("checkpoints/episode_8").exists());
}

#[test]
fn different_seeds_differ() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    harness::run_training(&small(3), Some(a.path())).unwrap();
    harness::run_training(&ExperimentConfig { seed: 2, ..small(3) }, Some(b.path())).unwrap();
    assert_ne!(fs::read(a.path().join("metrics.csv")).unwrap(), fs::read(b.path().join("metrics.csv")).unwrap());
}

#[test]
fn alpha_zero_rewards_are_forward_errors() {
    let mut t = Trainer::new(ExperimentConfig { alpha: 0.0, ..small(8) }).unwrap();
    for _ in 0..8 {
        let report = t.run_episode().unwrap();
        for s in &report.steps {
            assert_eq!(s.terms.raw, s.terms.forward_error);
        }
    }
    // Logged rewards are the z-normalized forward errors.
    let n = t.normalizer();
    let raw: Vec<f64> = t.buffer().raw_values().collect();
    let z: Vec<f64> = raw.iter().map(|&r| n.normalize(r)).collect();
    let mean = z.iter().sum::<f64>() / z.len() as f64;
    assert!(mean.abs() < 1e-9);
}

#[test]
fn saved_forward_model_reproduces_validation_mse() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(6);
    let r = harness::run_training(&cfg, Some(dir.path())).unwrap();
    let net = checkpoint::load(&dir.path().join("forward.ckpt")).unwrap();
    let f = homeostat_core::world_model::ForwardModel::from_net(net, cfg.lr_forward, cfg.max_step_len).unwrap();
    let mse = homeostat_core::eval::eval_forward_mse(&f, &cfg.layout().unwrap(), cfg.max_step_len, cfg.validation_pool, cfg.seed).unwrap();
    assert_eq!(mse.to_bits(), r.validation_mse.to_bits());
}

#[test]
fn baseline_ignores_the_actor() {
    let cfg = ExperimentConfig { epsilon: 1.0, ..small(6) };
    let mut plain = Trainer::new(cfg.clone()).unwrap();
    let mut scrambled = Trainer::new(cfg).unwrap();
    for w in scrambled.agent_mut().actor_mut().net_mut().layers_mut()[0].weights_mut() {
        *w = -*w * 3.0;
    }
    for _ in 0..6 {
        let (a, b) = (plain.run_episode().unwrap(), scrambled.run_episode().unwrap());
        assert_eq!(a.states, b.states);
        assert!(a.steps.iter().all(|s| s.was_random));
    }
}

#[test]
fn baseline_is_reproducible_and_forces_epsilon() {
    let cfg = small(4);
    let a = harness::random_baseline(&cfg, None).unwrap();
    let b = harness::random_baseline(&cfg, None).unwrap();
    assert_eq!(a.trainer.epsilon(), 1.0);
    assert_eq!(a.validation_mse.to_bits(), b.validation_mse.to_bits());
    assert_eq!(a.top_room_total, b.top_room_total);
}

#[test]
fn random_walk_from_bottom_rarely_reaches_top_and_only_through_middle() {
    // Pure environment random walk, no learning: the reach rate the
    // baseline is compared against.
    let layout = Layout::three_rooms();
    let mut rng = stream(11, Stream::Env);
    let episodes = 100_000;
    let mut hits = 0;
    for _ in 0..episodes {
        let mut s = layout.reset(StartStrategy::UniformBottomRoom, &mut rng).unwrap();
        let mut seen_middle = false;
        let mut hit = false;
        for _ in 0..10 {
            s = layout.step(s, random_action(&mut rng, MAX_STEP_LEN)).next;
            match layout.room_of(s) {
                RoomId::Middle => seen_middle = true,
                RoomId::Top => {
                    assert!(seen_middle, "reached top without passing the middle room");
                    hit = true;
                }
                RoomId::Bottom => {}
            }
        }
        hits += u32::from(hit);
    }
    let rate = hits as f64 / episodes as f64;
    assert!(rate > 0.0 && rate < 1e-2, "{rate}");
}

#[test]
fn sweep_rows_and_stats() {
    let rows = harness::alpha_sweep(&small(2), &[0.0], &[1], None, 0);
    assert_eq!(rows.len(), 1);
    let (mse, top) = rows[0].outcome.clone().unwrap();
    let stats = alpha_stats(&[rows[0].clone(), rows[0].clone()]);
    assert_eq!(stats.len(), 1);
    assert_eq!((stats[0].mse_mean, stats[0].mse_std), (mse, 0.0));
    assert_eq!(stats[0].top_room_mean, top as f64);

    let row = |alpha, seed| SweepRow {
        alpha,
        seed,
        episodes: 1,
        outcome: Ok((alpha, seed)),
    };
    let mut rows = vec![row(7.0, 2), row(0.0, 3), row(7.0, 1), row(0.0, 1)];
    sort_rows(&mut rows);
    let keys: Vec<(f64, u64)> = rows.iter().map(|r| (r.alpha, r.seed)).collect();
    assert_eq!(keys, [(0.0, 1), (0.0, 3), (7.0, 1), (7.0, 2)]);
    let csv = harness::sweep_csv(&rows);
    assert!(csv.starts_with("alpha,seed,episodes,validation_mse,top_room_total\n0,1,1,0,1\n"));
}

#[test]
fn failed_runs_do_not_stop_the_sweep() {
    let dir = tempfile::tempdir().unwrap();
    // A file where the run directory parent should be makes every run fail
    // at directory creation.
    let blocker = dir.path().join("blocked");
    fs::write(&blocker, "").unwrap();
    let rows = harness::alpha_sweep(&small(1), &[0.0, 1.0], &[1], Some(&blocker), 0);
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.outcome.is_err()));
    harness::write_sweep(dir.path(), &rows).unwrap();
    assert!(dir.path().join("sweep_errors.txt").exists());
    let csv = fs::read_to_string(dir.path().join("sweep_summary.csv")).unwrap();
    assert!(csv.contains("\n0,1,1,,\n"));
}

#[test]
fn run_dir_holds_a_parsable_manifest() {
    let parent = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig { alpha: 7.0, seed: 2, ..Default::default() };
    let a = RunDir::create(parent.path(), "train", &cfg, 42).unwrap();
    let b = RunDir::create(parent.path(), "train", &cfg, 42).unwrap();
    assert!(a.path.ends_with("train_7_2_42"));
    assert_ne!(a.path, b.path);
    let text = fs::read_to_string(a.path.join("manifest.txt")).unwrap();
    assert_eq!(homeostat_lab::config_file::parse_str(&text).unwrap(), cfg);
}

#[test]
fn flowfield_csv_layout() {
    let t = Trainer::new(small(1)).unwrap();
    let cfg = ExperimentConfig { flow_grid_step: 20.0, ..small(1) };
    let (field, summary) = harness::flowfield(t.agent().actor(), &cfg).unwrap();
    let csv = harness::flowfield_csv(&field);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "x,y,dx,dy");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("20,20,"));
    assert_eq!(summary.arena_nodes, 1);
    assert!(harness::flow_report(&summary).contains("door"));
}

#[test]
fn goal_sanity_reports_a_curve() {
    let cfg = ExperimentConfig { episodes: 10, warmup: 40, batch_size: 16, ..Default::default() };
    let g = harness::goal_sanity(&cfg, homeostat_core::Point::new(30.0, 30.0), 5, 10, 0.0).unwrap();
    assert_eq!(g.curve.iter().map(|c| c.0).collect::<Vec<_>>(), [5, 10]);
    assert!(g.curve.iter().all(|c| c.1.is_finite() && c.1 >= 0.0));
    assert_eq!(g.reached_at, None);
}
