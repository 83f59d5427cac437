use std::fs;
use std::path::Path;

use haica::harness::{emit_results, replay, run_episode, run_sweep, Conditions, ExperimentConfig, Scenario};
use haica::kitchen::{builtin_layout, Layout};
use haica::par;

fn layout_dir() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/layouts"))
}

#[test]
fn shipped_layout_files_match_builtins() {
    for entry in fs::read_dir(layout_dir()).unwrap() {
        let path = entry.unwrap().path();
        let from_file = Layout::parse(&fs::read_to_string(&path).unwrap()).unwrap();
        let builtin = builtin_layout(&from_file.name).unwrap();
        assert_eq!(from_file, builtin, "{}", path.display());
    }
}

#[test]
fn layout_given_as_path_runs() {
    let path = layout_dir().join("forced.layout");
    let cfg = ExperimentConfig {
        layouts: vec![path.display().to_string()],
        sp_grid: vec![0.0],
        episodes_per_cell: 2,
        max_steps: Some(200),
        ..ExperimentConfig::default()
    };
    let r = run_sweep(&cfg, None).unwrap();
    assert_eq!(r.layouts, vec!["forced".to_string()]);
    assert!(r.results.iter().any(|e| e.record.total_reward > 0.0));
}

#[test]
fn sequential_and_parallel_maps_agree() {
    let cfg = ExperimentConfig {
        layouts: vec!["ring".into(), "spacey".into()],
        sp_grid: vec![0.0, 0.7],
        episodes_per_cell: 2,
        max_steps: Some(80),
        conditions: Conditions {
            order_blind_agent2: true,
            ..Conditions::default()
        },
        ..ExperimentConfig::default()
    };
    let scenario = Scenario::resolve(&cfg).unwrap();
    let specs = scenario.episodes();
    let run = |s: &_| run_episode(&scenario, s, false).unwrap().record;
    assert_eq!(par::map_sequential(&specs, run), par::map(&specs, None, run));
}

#[test]
fn replay_reproduces_a_salad_episode() {
    let cfg = ExperimentConfig {
        domain: haica::kitchen::DomainKind::Salad,
        layouts: vec!["partial_divider_mixed".into()],
        sp_grid: vec![0.3],
        episodes_per_cell: 3,
        seed: 9,
        ..ExperimentConfig::default()
    };
    let sweep = run_sweep(&cfg, None).unwrap();
    let dir = tempfile::tempdir().unwrap();
    emit_results(&sweep, dir.path()).unwrap();
    let again = replay(&dir.path().join("manifest.toml"), 2).unwrap();
    assert_eq!(again.record, sweep.results[2].record);
    let trace = again.trace.unwrap();
    assert_eq!(trace.len() as u32, again.record.steps_used);
    // scores in the trace are taken before each step resolves
    assert!(trace.last().unwrap().score <= again.record.total_reward);
}
