//! Monte Carlo experiment runner: sweeps, per-trial estimator execution,
//! deterministic seeding, worker-capped parallelism, and CSV emission.

use super::config::{dbm_to_watts, EstimatorKind, ExperimentConfig, SweepPoint};
use super::metrics::{self, MetricsRecord};
use crate::baseline::{estimate_cascaded_ls, simulate_baseline_uplink, user_pilots};
use crate::bs_ris::{estimate_bs_ris, simulate_fd_rx, RisAngleGrid};
use crate::channel::{assemble_channels, cascaded_channel, sample_paths, ChannelRealization};
use crate::numerics::CMat;
use crate::ris_user::{
    build_conditioned_schedule, decorrelate_user, ls_estimate_h, simulate_stage2_uplink,
    stage2_pilots,
};
use crate::scattering::{build_schedule, Stage};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] super::config::ConfigError),
    #[error(transparent)]
    Metrics(#[from] super::metrics::MetricsError),
    #[error("cannot create output directory {path}: {source}")]
    OutDir {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

/// SplitMix64 step; mixes the base seed with sweep-point and trial indices
/// so streams are independent and scheduling-order free.
fn mix_seed(base: u64, point: usize, trial: usize, lane: u64) -> u64 {
    let mut z = base
        ^ (point as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (trial as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9)
        ^ lane.wrapping_mul(0x94D0_49BB_1331_11EB);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn worker_pool() -> Result<rayon::ThreadPool, HarnessError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(threads) = std::env::var("BDRIS_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&t| t >= 1)
    {
        builder = builder.num_threads(threads);
    }
    builder
        .build()
        .map_err(|e| HarnessError::ThreadPool(e.to_string()))
}

struct TrialOutcome {
    nmse: Option<f64>,
    error_flag: String,
}

fn baseline_trial(
    cfg: &ExperimentConfig,
    point: &SweepPoint,
    ch: &ChannelRealization,
    truth: &[CMat],
    seed: u64,
) -> TrialOutcome {
    let n = point.n1 * point.n2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let power_w = dbm_to_watts(point.p_dbm);
    let schedule = match build_schedule(Stage::Baseline, n, n * n, cfg.users, &mut rng) {
        Ok(s) => s,
        Err(e) => {
            return TrialOutcome {
                nmse: None,
                error_flag: format!("baseline schedule: {e}"),
            }
        }
    };
    let pilots = user_pilots(cfg.users);
    let meas = match simulate_baseline_uplink(ch, &schedule, &pilots, power_w, cfg.noise_w(), &mut rng)
    {
        Ok(m) => m,
        Err(e) => {
            return TrialOutcome {
                nmse: None,
                error_flag: format!("baseline simulate: {e}"),
            }
        }
    };
    let estimates = match estimate_cascaded_ls(&meas) {
        Ok(e) => e,
        Err(e) => {
            return TrialOutcome {
                nmse: None,
                error_flag: format!("baseline estimate: {e}"),
            }
        }
    };
    match metrics::nmse(truth, &estimates) {
        Ok(v) => TrialOutcome {
            nmse: Some(v),
            error_flag: String::new(),
        },
        Err(e) => TrialOutcome {
            nmse: None,
            error_flag: format!("baseline nmse: {e}"),
        },
    }
}

fn proposed_trial(
    cfg: &ExperimentConfig,
    point: &SweepPoint,
    ch: &ChannelRealization,
    truth: &[CMat],
    grid: &RisAngleGrid,
    seed: u64,
) -> TrialOutcome {
    let n = point.n1 * point.n2;
    let geometry = ch.geometry;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let power_w = dbm_to_watts(point.p_dbm);

    let mut stage1 = cfg.stage1_config(&geometry);
    stage1.power_w = power_w;
    stage1.noise_w = cfg.stage1_noise_w();

    let schedule1 = match build_schedule(
        Stage::BsRis,
        n,
        stage1.subframes,
        stage1.slots_per_subframe,
        &mut rng,
    ) {
        Ok(s) => s,
        Err(e) => {
            return TrialOutcome {
                nmse: None,
                error_flag: format!("stage1 schedule: {e}"),
            }
        }
    };
    let received = match simulate_fd_rx(ch, &schedule1, &stage1, &mut rng) {
        Ok(y) => y,
        Err(e) => {
            return TrialOutcome {
                nmse: None,
                error_flag: format!("stage1 simulate: {e}"),
            }
        }
    };
    let stage1_result = match estimate_bs_ris(&received, &schedule1, &stage1, grid) {
        Ok(r) => r,
        Err(e) => {
            return TrialOutcome {
                nmse: None,
                error_flag: format!("stage1: {e}"),
            }
        }
    };

    let mut stage2 = cfg.stage2_config(&geometry);
    stage2.power_w = power_w;
    stage2.noise_w = cfg.noise_w();
    let schedule2 = match build_conditioned_schedule(&stage1_result.e_hat, &stage2, &mut rng) {
        Ok(s) => s,
        Err(e) => {
            return TrialOutcome {
                nmse: None,
                error_flag: format!("stage2 schedule: {e}"),
            }
        }
    };
    let blocks = match simulate_stage2_uplink(ch, &schedule2, &stage2, &mut rng) {
        Ok(b) => b,
        Err(e) => {
            return TrialOutcome {
                nmse: None,
                error_flag: format!("stage2 simulate: {e}"),
            }
        }
    };
    let pilots = match stage2_pilots(stage2.slots_per_subframe, cfg.users) {
        Ok(p) => p,
        Err(e) => {
            return TrialOutcome {
                nmse: None,
                error_flag: format!("stage2 pilots: {e}"),
            }
        }
    };

    let mut estimates = Vec::with_capacity(cfg.users);
    let mut rank_deficient = false;
    for k in 0..cfg.users {
        let pilot = pilots.column(k).into_owned();
        let obs: Result<Vec<_>, _> = blocks.iter().map(|b| decorrelate_user(b, &pilot)).collect();
        let obs = match obs {
            Ok(o) => o,
            Err(e) => {
                return TrialOutcome {
                    nmse: None,
                    error_flag: format!("stage2 decorrelate: {e}"),
                }
            }
        };
        match ls_estimate_h(&obs, &stage1_result.e_hat, &schedule2, &stage2) {
            Ok(est) => {
                rank_deficient |= est.rank_deficient;
                estimates.push(cascaded_channel(&est.h_hat, &stage1_result.e_hat));
            }
            Err(e) => {
                return TrialOutcome {
                    nmse: None,
                    error_flag: format!("stage2: {e}"),
                }
            }
        }
    }

    match metrics::nmse(truth, &estimates) {
        Ok(v) => TrialOutcome {
            nmse: Some(v),
            error_flag: if rank_deficient {
                "rank_deficient".into()
            } else {
                String::new()
            },
        },
        Err(e) => TrialOutcome {
            nmse: None,
            error_flag: format!("proposed nmse: {e}"),
        },
    }
}

fn run_point(
    cfg: &ExperimentConfig,
    point: &SweepPoint,
    kinds: &[EstimatorKind],
) -> Result<Vec<MetricsRecord>, HarnessError> {
    let geometry = cfg
        .geometry_for(point.n1, point.n2)
        .map_err(|e| super::config::ConfigError::Invalid(e.to_string()))?;
    let n = geometry.n();
    let m = geometry.m();

    let overheads: Vec<(EstimatorKind, u64)> = kinds
        .iter()
        .map(|&k| (k, metrics::pilot_overhead(cfg, k, point.n1, point.n2).slots))
        .collect();

    let record_stub = |trial: usize, kind: EstimatorKind, slots: u64| MetricsRecord {
        experiment_id: cfg.experiment_id.clone(),
        trial,
        m,
        n,
        k: cfg.users,
        p_dbm: point.p_dbm,
        estimator: kind.name().to_string(),
        nmse: None,
        pilot_slots: slots,
        wall_time_ms: 0,
        error_flag: String::new(),
    };

    if cfg.overhead_only {
        let mut records = Vec::new();
        for trial in 0..cfg.trials {
            for &(kind, slots) in &overheads {
                records.push(record_stub(trial, kind, slots));
            }
        }
        return Ok(records);
    }

    let needs_grid = kinds.contains(&EstimatorKind::Proposed);
    let stage1 = cfg.stage1_config(&geometry);
    let grid = needs_grid.then(|| RisAngleGrid::new(&geometry, stage1.g_iota, stage1.g_phi));
    let scenario = cfg.scenario(&geometry);

    let trial_records: Vec<Vec<MetricsRecord>> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let mut records = Vec::with_capacity(kinds.len());
            let channel_seed = mix_seed(cfg.seed, point.index, trial, 0);
            let params = match sample_paths(&scenario, &mut ChaCha8Rng::seed_from_u64(channel_seed))
            {
                Ok(p) => p,
                Err(e) => {
                    for &(kind, slots) in &overheads {
                        let mut r = record_stub(trial, kind, slots);
                        r.error_flag = format!("channel: {e}");
                        records.push(r);
                    }
                    return records;
                }
            };
            let ch = match assemble_channels(&params, &geometry) {
                Ok(c) => c,
                Err(e) => {
                    for &(kind, slots) in &overheads {
                        let mut r = record_stub(trial, kind, slots);
                        r.error_flag = format!("channel: {e}");
                        records.push(r);
                    }
                    return records;
                }
            };
            let truth: Vec<CMat> = ch
                .h_users
                .iter()
                .map(|h| cascaded_channel(h, &ch.e))
                .collect();

            for &(kind, slots) in &overheads {
                let started = Instant::now();
                let outcome = match kind {
                    EstimatorKind::Baseline => baseline_trial(
                        cfg,
                        point,
                        &ch,
                        &truth,
                        mix_seed(cfg.seed, point.index, trial, 1),
                    ),
                    EstimatorKind::Proposed => proposed_trial(
                        cfg,
                        point,
                        &ch,
                        &truth,
                        grid.as_ref().expect("grid built for proposed"),
                        mix_seed(cfg.seed, point.index, trial, 2),
                    ),
                };
                let mut record = record_stub(trial, kind, slots);
                record.nmse = outcome.nmse;
                record.error_flag = outcome.error_flag;
                record.wall_time_ms = if cfg.include_timing {
                    started.elapsed().as_millis() as u64
                } else {
                    0
                };
                records.push(record);
            }
            records
        })
        .collect();

    Ok(trial_records.into_iter().flatten().collect())
}

/// Run the whole experiment and write its CSV to
/// `<out_dir>/<experiment_id>.csv` (atomically). Returns the records and
/// the CSV path. Per-trial estimator failures become rows with an error
/// flag; they never abort the sweep.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    out_dir: &Path,
) -> Result<(Vec<MetricsRecord>, PathBuf), HarnessError> {
    cfg.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|source| HarnessError::OutDir {
        path: out_dir.to_path_buf(),
        source,
    })?;

    let kinds = cfg.estimators.kinds();
    let pool = worker_pool()?;
    let mut records = Vec::new();
    for point in cfg.sweep_points() {
        let point_records = pool.install(|| run_point(cfg, &point, &kinds))?;
        records.extend(point_records);
    }
    // Deterministic row order regardless of worker scheduling.
    records.sort_by(|a, b| {
        (a.n, a.p_dbm, a.trial, &a.estimator)
            .partial_cmp(&(b.n, b.p_dbm, b.trial, &b.estimator))
            .unwrap()
    });

    let csv_path = out_dir.join(format!("{}.csv", cfg.experiment_id));
    metrics::write_csv(&records, &csv_path)?;
    Ok((records, csv_path))
}

/// True when every simulated row failed (used for the CLI exit status).
pub fn all_trials_failed(records: &[MetricsRecord], cfg: &ExperimentConfig) -> bool {
    if cfg.overhead_only {
        return false;
    }
    !records.is_empty() && records.iter().all(|r| r.nmse.is_none())
}
