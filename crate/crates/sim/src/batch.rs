//! Seeded batch runs: n episodes with per-episode randomization, one world
//! per worker, results ordered by episode index.

use crate::config::WorldConfig;
use crate::episode::{run_episode, AblationMode, SimError};
use crate::metrics::{aggregate, Aggregate, EpisodeMetrics};

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRow {
    pub episode: usize,
    pub seed: u64,
    pub metrics: EpisodeMetrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchResult {
    pub mode: AblationMode,
    pub rows: Vec<EpisodeRow>,
    pub aggregate: Aggregate,
}

/// Run `episodes` seeded episodes of `cfg` under `mode`. Episode `i` uses
/// seed `base_seed + i`; outputs are ordered by index regardless of worker
/// scheduling, so results are reproducible.
pub fn batch_run(
    cfg: &WorldConfig,
    mode: AblationMode,
    episodes: usize,
    base_seed: u64,
) -> Result<BatchResult, SimError> {
    assert!(episodes >= 1, "batch needs at least one episode");
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(episodes);

    let mut slots: Vec<Option<Result<EpisodeRow, SimError>>> = Vec::new();
    slots.resize_with(episodes, || None);

    if workers <= 1 {
        for (i, slot) in slots.iter_mut().enumerate() {
            *slot = Some(run_one(cfg, mode, i, base_seed));
        }
    } else {
        let chunk = episodes.div_ceil(workers);
        std::thread::scope(|scope| {
            for (w, block) in slots.chunks_mut(chunk).enumerate() {
                let cfg = &*cfg;
                scope.spawn(move || {
                    for (j, slot) in block.iter_mut().enumerate() {
                        let i = w * chunk + j;
                        *slot = Some(run_one(cfg, mode, i, base_seed));
                    }
                });
            }
        });
    }

    let mut rows = Vec::with_capacity(episodes);
    for slot in slots {
        rows.push(slot.expect("every episode slot filled")?);
    }
    let metrics: Vec<EpisodeMetrics> = rows.iter().map(|r| r.metrics).collect();
    Ok(BatchResult { mode, aggregate: aggregate(&metrics), rows })
}

fn run_one(
    cfg: &WorldConfig,
    mode: AblationMode,
    episode: usize,
    base_seed: u64,
) -> Result<EpisodeRow, SimError> {
    let seed = base_seed.wrapping_add(episode as u64);
    let (metrics, _) = run_episode(cfg, mode, seed)?;
    Ok(EpisodeRow { episode, seed, metrics })
}

/// The four ablation arms in table order.
pub fn ablation_modes(fixed_tau: f64, alpha: f64) -> [AblationMode; 4] {
    [
        AblationMode::NoBranch,
        AblationMode::FixedBranch(fixed_tau),
        AblationMode::DynamicBranch,
        AblationMode::DynamicBranchRisk(alpha),
    ]
}
