//! Batch experiments: SP grid sweeps over layouts and conditions, per-episode
//! records, aggregation and replay.

mod config;
mod output;

use std::fmt;
use std::fs;
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use config::{parse_sp_grid, sp_range, Conditions, ExperimentConfig, Gains};
pub use output::{emit_results, heatmap_tsv, load_manifest, Manifest, ManifestEpisode};

use crate::agent::{AgentConfig, AgentState};
use crate::belief::IntegrationOrder;
use crate::error::{Error, Result};
use crate::intention::{Intention, IntentionSet};
use crate::kitchen::{builtin_layout, observe, DomainKind, Item, KitchenState, Layout, LowAction, Pos};

/// A config with its layouts loaded and validated.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub config: ExperimentConfig,
    pub layouts: Vec<Arc<Layout>>,
    sets: Vec<Arc<IntentionSet>>,
}

impl Scenario {
    pub fn resolve(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let agents = if config.conditions.solo { 1 } else { 2 };
        let mut layouts = Vec::new();
        for name in config.layout_names() {
            let layout = load_layout(&name)?;
            if layout.domain != config.domain {
                return Err(Error::Scenario(format!(
                    "layout `{}` is a {:?} layout but the experiment domain is {:?}",
                    layout.name, layout.domain, config.domain
                )));
            }
            if config.task.is_some() && layout.task != config.task {
                continue;
            }
            layout.check_agents(agents)?;
            layouts.push(Arc::new(layout));
        }
        if layouts.is_empty() {
            return Err(Error::Scenario("no layouts selected".into()));
        }
        let sets = layouts
            .iter()
            .map(|l| Arc::new(IntentionSet::for_layout(l)))
            .collect();
        Ok(Self {
            config: config.clone(),
            layouts,
            sets,
        })
    }

    /// Every episode of the sweep in a fixed order: layout, SP pair, episode.
    pub fn episodes(&self) -> Vec<EpisodeSpec> {
        let label = self.config.conditions.label();
        let mut out = Vec::new();
        for (li, layout) in self.layouts.iter().enumerate() {
            for (sp_i, sp_j) in self.config.sp_pairs() {
                for episode in 0..self.config.episodes_per_cell {
                    out.push(EpisodeSpec {
                        id: out.len(),
                        layout: li,
                        sp: (sp_i, sp_j),
                        episode,
                        seed: episode_seed(self.config.seed, &layout.name, sp_i, sp_j, &label, episode),
                    });
                }
            }
        }
        out
    }

    fn agent_config(&self, sp: f64) -> AgentConfig {
        let c = &self.config;
        AgentConfig {
            sp,
            prediction_gain: c.gains.prediction,
            evidence_gain: c.gains.evidence,
            tom: c.tom,
            tom_enabled: !c.conditions.solo,
            integration: if c.conditions.swapped_integration {
                IntegrationOrder::Swapped
            } else {
                IntegrationOrder::Standard
            },
            punish: c.punish,
            affordance: c.affordance,
        }
    }
}

/// Built-in layout by name, otherwise a layout file path.
pub fn load_layout(name: &str) -> Result<Layout> {
    match builtin_layout(name) {
        Ok(l) => Ok(l),
        Err(_) if Path::new(name).exists() => {
            let text = fs::read_to_string(name).map_err(|e| Error::io(name, e))?;
            Layout::parse(&text)
        }
        Err(e) => Err(e),
    }
}

/// Per-episode seed: the first 8 bytes of SHA-256 over the base seed, the
/// layout name, the SP pair, the condition label and the episode index.
pub fn episode_seed(base: u64, layout: &str, sp_i: f64, sp_j: f64, condition: &str, episode: usize) -> u64 {
    let text = format!("{base}|{layout}|{sp_i:?}|{sp_j:?}|{condition}|{episode}");
    let digest = Sha256::digest(text.as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSpec {
    pub id: usize,
    pub layout: usize,
    /// SP of the first and second agent identity. The second identity is
    /// the order-blind one when that condition is on.
    pub sp: (f64, f64),
    pub episode: usize,
    pub seed: u64,
}

/// One row of `records.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub id: usize,
    pub layout: String,
    pub sp_agent1: f64,
    pub sp_agent2: f64,
    pub condition: String,
    pub order_blind: bool,
    pub swapped_integration: bool,
    pub solo: bool,
    pub episode: usize,
    pub seed: u64,
    /// The coin flip put agent 1 on the second spawn point.
    pub spawns_swapped: bool,
    pub total_reward: f64,
    pub success: bool,
    pub steps_used: u32,
    pub orders_completed: usize,
}

/// Wall-clock accounting, kept apart from the deterministic record.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTiming {
    pub id: usize,
    /// Mean seconds per agent decision (one agent, one step).
    pub mean_decision_time: f64,
    pub max_decision_time: f64,
    pub decisions: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepTrace {
    pub step: u32,
    pub actions: Vec<LowAction>,
    pub intentions: Vec<Intention>,
    pub positions: Vec<Pos>,
    pub held: Vec<Option<Item>>,
    pub score: f64,
}

impl fmt::Display for StepTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:>4} score={:<6}", self.step, self.score)?;
        for k in 0..self.actions.len() {
            let held = self.held[k].map(|i| i.class().short()).unwrap_or("-");
            write!(
                f,
                " | a{} ({},{}) {} {} {}",
                k + 1,
                self.positions[k].x,
                self.positions[k].y,
                held,
                self.actions[k],
                self.intentions[k]
            )?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeResult {
    pub record: EpisodeRecord,
    pub timing: EpisodeTiming,
    pub trace: Option<Vec<StepTrace>>,
}

/// Runs one episode: each step every agent observes, thinks (timed) and
/// acts, then the kitchen advances and rewards are handed out.
pub fn run_episode(scenario: &Scenario, spec: &EpisodeSpec, trace: bool) -> Result<EpisodeResult> {
    let cfg = &scenario.config;
    let layout = scenario.layouts[spec.layout].clone();
    let set = scenario.sets[spec.layout].clone();
    let solo = cfg.conditions.solo;
    let n = if solo { 1 } else { 2 };
    let fail = |e: Error| Error::Episode {
        episode: format!("{} ({} sp={:?} #{})", spec.id, layout.name, spec.sp, spec.episode),
        seed: spec.seed,
        reason: e.to_string(),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut state = KitchenState::new(layout.clone(), n, &mut rng);
    let spawns_swapped = !solo && rng.gen_bool(0.5);
    if spawns_swapped {
        state.agents.swap(0, 1);
    }
    let sps = [spec.sp.0, spec.sp.1];
    let blind = [false, cfg.conditions.order_blind_agent2];
    let mut agents = (0..n)
        .map(|k| AgentState::new(set.clone(), scenario.agent_config(sps[k])))
        .collect::<Result<Vec<_>>>()
        .map_err(fail)?;

    let limit = cfg.steps_limit();
    let mut last: Vec<Option<LowAction>> = vec![None; n];
    let mut thinking = Duration::ZERO;
    let mut slowest = Duration::ZERO;
    let mut decisions = 0u64;
    let mut steps_used = 0;
    let mut success = false;
    let mut traces = trace.then(Vec::new);
    for t in 0..limit {
        let mut actions = Vec::with_capacity(n);
        for k in 0..n {
            let obs = observe(&state, k, blind[k]);
            let partner_last = if n > 1 { last[1 - k] } else { None };
            let started = Instant::now();
            let action = agents[k].step(&obs, partner_last).map_err(fail)?;
            let took = started.elapsed();
            thinking += took;
            slowest = slowest.max(took);
            decisions += 1;
            actions.push(action);
        }
        if let Some(tr) = traces.as_mut() {
            tr.push(StepTrace {
                step: t,
                actions: actions.clone(),
                intentions: agents.iter().map(|a| a.active_intention).collect(),
                positions: state.agents.iter().map(|b| b.pos).collect(),
                held: state.agents.iter().map(|b| b.held).collect(),
                score: state.score,
            });
        }
        let outcome = match cfg.domain {
            DomainKind::Soup => state.step(&actions, &mut rng),
            DomainKind::Salad => state.step_salad(&actions, &mut rng),
        };
        for (agent, r) in agents.iter_mut().zip(&outcome.rewards) {
            agent.receive_reward(*r);
        }
        last = actions.into_iter().map(Some).collect();
        steps_used = t + 1;
        if outcome.success {
            success = true;
            break;
        }
    }

    Ok(EpisodeResult {
        record: EpisodeRecord {
            id: spec.id,
            layout: layout.name.clone(),
            sp_agent1: spec.sp.0,
            sp_agent2: if solo { 0.0 } else { spec.sp.1 },
            condition: cfg.conditions.label(),
            order_blind: cfg.conditions.order_blind_agent2,
            swapped_integration: cfg.conditions.swapped_integration,
            solo,
            episode: spec.episode,
            seed: spec.seed,
            spawns_swapped,
            total_reward: state.score,
            success,
            steps_used,
            orders_completed: state.delivered.len(),
        },
        timing: EpisodeTiming {
            id: spec.id,
            mean_decision_time: if decisions > 0 {
                thinking.as_secs_f64() / decisions as f64
            } else {
                0.0
            },
            max_decision_time: slowest.as_secs_f64(),
            decisions,
        },
        trace: traces,
    })
}

/// All episodes of a sweep, in episode-id order.
#[derive(Clone, Debug)]
pub struct SweepResults {
    pub config: ExperimentConfig,
    pub layouts: Vec<String>,
    pub specs: Vec<EpisodeSpec>,
    pub results: Vec<EpisodeResult>,
}

/// Runs every episode of the config on up to `jobs` workers. The first
/// failing episode aborts the sweep; its error names the seed.
pub fn run_sweep(config: &ExperimentConfig, jobs: Option<usize>) -> Result<SweepResults> {
    let scenario = Scenario::resolve(config)?;
    let specs = scenario.episodes();
    let results = crate::par::map(&specs, jobs, |s| run_episode(&scenario, s, false));
    let results = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(SweepResults {
        config: config.clone(),
        layouts: scenario.layouts.iter().map(|l| l.name.clone()).collect(),
        specs,
        results,
    })
}

/// Mean and standard error of one SP cell on one layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub layout: String,
    pub sp_agent1: f64,
    pub sp_agent2: f64,
    pub episodes: usize,
    pub mean_reward: f64,
    pub stderr_reward: f64,
    pub success_rate: f64,
}

pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

impl SweepResults {
    fn records_of(&self, layout: &str, sp: (f64, f64)) -> impl Iterator<Item = &EpisodeRecord> {
        let layout = layout.to_string();
        self.results
            .iter()
            .map(|r| &r.record)
            .filter(move |r| r.layout == layout && r.sp_agent1 == sp.0 && r.sp_agent2 == sp.1)
    }

    /// Per-layout, per-cell statistics in sweep order.
    pub fn cell_stats(&self) -> Vec<CellStats> {
        let mut out = Vec::new();
        for layout in &self.layouts {
            for sp in self.config.sp_pairs() {
                let recs: Vec<&EpisodeRecord> = self.records_of(layout, sp).collect();
                let rewards: Vec<f64> = recs.iter().map(|r| r.total_reward).collect();
                let (mean, se) = mean_stderr(&rewards);
                let success = recs.iter().filter(|r| r.success).count() as f64 / recs.len().max(1) as f64;
                out.push(CellStats {
                    layout: layout.clone(),
                    sp_agent1: sp.0,
                    sp_agent2: sp.1,
                    episodes: recs.len(),
                    mean_reward: mean,
                    stderr_reward: se,
                    success_rate: success,
                });
            }
        }
        out
    }

    pub fn cell(&self, layout: &str, sp: (f64, f64)) -> Option<CellStats> {
        self.cell_stats()
            .into_iter()
            .find(|c| c.layout == layout && c.sp_agent1 == sp.0 && c.sp_agent2 == sp.1)
    }

    /// Mean reward per SP cell: the mean over `layouts` (all when `None`) of
    /// each layout's episode mean. Rows are agent 1's SP, columns agent 2's.
    pub fn heatmap(&self, layouts: Option<&[String]>) -> Vec<Vec<f64>> {
        let chosen: Vec<&String> = match layouts {
            Some(ls) => self.layouts.iter().filter(|l| ls.contains(l)).collect(),
            None => self.layouts.iter().collect(),
        };
        let grid: Vec<f64> = if self.config.conditions.solo {
            vec![0.0]
        } else {
            self.config.sp_grid.clone()
        };
        grid.iter()
            .map(|a| {
                grid.iter()
                    .map(|b| {
                        let means: Vec<f64> = chosen
                            .iter()
                            .map(|l| {
                                let r: Vec<f64> = self.records_of(l, (*a, *b)).map(|r| r.total_reward).collect();
                                mean_stderr(&r).0
                            })
                            .collect();
                        mean_stderr(&means).0
                    })
                    .collect()
            })
            .collect()
    }

    pub fn mean_decision_time(&self) -> f64 {
        let total: f64 = self
            .results
            .iter()
            .map(|r| r.timing.mean_decision_time * r.timing.decisions as f64)
            .sum();
        let count: u64 = self.results.iter().map(|r| r.timing.decisions).sum();
        if count == 0 {
            0.0
        } else {
            total / count as f64
        }
    }
}

/// Re-runs one episode of a previous sweep from its manifest, with a trace.
pub fn replay(manifest_path: &Path, id: usize) -> Result<EpisodeResult> {
    let manifest = load_manifest(manifest_path)?;
    let scenario = Scenario::resolve(&manifest.config)?;
    let specs = scenario.episodes();
    let spec = specs
        .get(id)
        .ok_or_else(|| Error::Scenario(format!("manifest has no episode {id}")))?;
    if let Some(entry) = manifest.episodes.iter().find(|e| e.id == id) {
        if entry.seed != spec.seed {
            return Err(Error::Scenario(format!(
                "episode {id}: manifest seed {} differs from derived seed {}",
                entry.seed, spec.seed
            )));
        }
    }
    run_episode(&scenario, spec, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(layout: &str) -> ExperimentConfig {
        ExperimentConfig {
            layouts: vec![layout.into()],
            sp_grid: vec![0.0, 0.5],
            episodes_per_cell: 2,
            max_steps: Some(60),
            seed: 11,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn seeds_depend_on_every_component() {
        let base = episode_seed(1, "ring", 0.1, 0.2, "standard", 0);
        assert_eq!(base, episode_seed(1, "ring", 0.1, 0.2, "standard", 0));
        for other in [
            episode_seed(2, "ring", 0.1, 0.2, "standard", 0),
            episode_seed(1, "cramped", 0.1, 0.2, "standard", 0),
            episode_seed(1, "ring", 0.2, 0.1, "standard", 0),
            episode_seed(1, "ring", 0.1, 0.2, "swapped", 0),
            episode_seed(1, "ring", 0.1, 0.2, "standard", 1),
        ] {
            assert_ne!(base, other);
        }
    }

    #[test]
    fn episode_count_is_the_full_product() {
        let mut c = ExperimentConfig::default();
        c.episodes_per_cell = 20;
        let s = Scenario::resolve(&c).unwrap();
        assert_eq!(s.episodes().len(), 12_100);
    }

    #[test]
    fn episodes_are_reproducible() {
        let c = small("cramped");
        let s = Scenario::resolve(&c).unwrap();
        let spec = s.episodes()[3];
        let a = run_episode(&s, &spec, true).unwrap();
        let b = run_episode(&s, &spec, true).unwrap();
        assert_eq!(a.record, b.record);
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.trace.unwrap().len(), 60);
    }

    #[test]
    fn jobs_do_not_change_results() {
        let c = small("ring");
        let one = run_sweep(&c, Some(1)).unwrap();
        let many = run_sweep(&c, Some(4)).unwrap();
        let recs = |r: &SweepResults| r.results.iter().map(|e| e.record.clone()).collect::<Vec<_>>();
        assert_eq!(recs(&one), recs(&many));
    }

    #[test]
    fn heatmap_is_mean_of_layout_means() {
        let mut c = small("ring");
        c.layouts = vec!["ring".into(), "cramped".into()];
        let r = run_sweep(&c, None).unwrap();
        let h = r.heatmap(None);
        assert_eq!(h.len(), 2);
        let ring = r.cell("ring", (0.5, 0.0)).unwrap().mean_reward;
        let cramped = r.cell("cramped", (0.5, 0.0)).unwrap().mean_reward;
        assert!((h[1][0] - (ring + cramped) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn wrong_domain_layout_rejected() {
        let mut c = small("ring");
        c.domain = DomainKind::Salad;
        assert!(Scenario::resolve(&c).is_err());
    }

    #[test]
    fn task_filter_selects_salad_layouts() {
        let c = ExperimentConfig {
            domain: DomainKind::Salad,
            task: Some(crate::kitchen::SaladTask::Mixed),
            ..ExperimentConfig::default()
        };
        let s = Scenario::resolve(&c).unwrap();
        assert_eq!(s.layouts.len(), 3);
        assert!(s.layouts.iter().all(|l| l.name.ends_with("_mixed")));
    }

    #[test]
    fn stderr_matches_hand_computation() {
        let (m, se) = mean_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        // sample variance 5/3, n = 4
        assert!((se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_stderr(&[]), (0.0, 0.0));
    }
}
