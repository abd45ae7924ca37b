//! RIS-user channel estimation (step 2): given the reconstructed BS-RIS
//! channel, each user's `h_k` is estimated by least squares from `C`
//! subframes of uplink pilots.
//!
//! The stacked regressor `F = [E Theta_1; ...; E Theta_C]` must have at
//! least `N` rows (`C M >= N`) for identifiability, but its column rank is
//! also capped by `C * rank(E)`: a sparse `E` with `L` paths has rank at
//! most `L`, so `C L < N` leaves the LS problem rank deficient no matter
//! how many antennas the BS has. The estimator surfaces that instead of
//! silently regularizing; callers that want the canonical minimum-norm
//! solution anyway (it minimizes the residual, projecting `h_k` onto the
//! reachable subspace) opt in through [`RankPolicy::MinNorm`], and the
//! deficiency stays visible on the returned estimate.

use crate::channel::ChannelRealization;
use crate::numerics::{solve_min_norm, svd, CMat, CVec, C64};
use crate::scattering::{replace_matrices, ScatteringSchedule, Stage};
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Stage2Error {
    #[error("identifiability violated: C*M = {cm} < N = {n}")]
    Identifiability { cm: usize, n: usize },
    #[error("rank deficient regressor: rank {rank} < {needed} (C*L bound binds when E is sparse)")]
    RankDeficient { rank: usize, needed: usize },
    #[error("regressor condition number {kappa:.3e} above bound {bound:.3e} after {attempts} draws")]
    IllConditioned { kappa: f64, bound: f64, attempts: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("pilots are not orthonormal (defect {0:.3e})")]
    NonOrthogonalPilots(f64),
}

/// What to do when the stacked regressor is rank deficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankPolicy {
    /// Report an error (default): deficiency means `h_k` is not identifiable.
    #[default]
    Error,
    /// Return the minimum-norm LS solution and flag the deficiency.
    MinNorm,
}

/// Stage-2 estimator configuration.
#[derive(Debug, Clone)]
pub struct Stage2Config {
    /// Subframe count `C`; `ceil(N/M)` is the minimum for identifiability.
    pub subframes: usize,
    /// Slots per subframe `T2 >= K`.
    pub slots_per_subframe: usize,
    /// Transmit power in watts.
    pub power_w: f64,
    /// Noise variance in watts.
    pub noise_w: f64,
    /// Conditioning bound on the stacked regressor.
    pub kappa_max: f64,
    pub rank_policy: RankPolicy,
}

impl Stage2Config {
    /// Minimal-overhead defaults: `C = ceil(N/M)`, `T2 = K`.
    pub fn defaults(m: usize, n: usize, users: usize) -> Self {
        Self {
            subframes: n.div_ceil(m),
            slots_per_subframe: users,
            power_w: 1.0,
            noise_w: 0.0,
            kappa_max: 1e6,
            rank_policy: RankPolicy::Error,
        }
    }
}

/// Orthonormal user pilots (`T2 x K`): the first `K` columns of the
/// `T2`-point DFT matrix.
pub fn stage2_pilots(slots: usize, users: usize) -> Result<CMat, Stage2Error> {
    if slots < users {
        return Err(Stage2Error::DimensionMismatch(format!(
            "{slots} slots cannot carry {users} orthogonal pilots"
        )));
    }
    let u = crate::numerics::dft_matrix(slots)
        .map_err(|e| Stage2Error::DimensionMismatch(e.to_string()))?;
    Ok(u.columns(0, users).into_owned())
}

/// Per-subframe uplink reception:
/// `Y_c = sum_k sqrt(P) E Theta_c h_k x_k^T + N_c`, each `M x T2`.
pub fn simulate_stage2_uplink<R: Rng + ?Sized>(
    ch: &ChannelRealization,
    schedule: &ScatteringSchedule,
    cfg: &Stage2Config,
    rng: &mut R,
) -> Result<Vec<CMat>, Stage2Error> {
    if schedule.len() != cfg.subframes {
        return Err(Stage2Error::DimensionMismatch(format!(
            "schedule has {} subframes, config says {}",
            schedule.len(),
            cfg.subframes
        )));
    }
    if schedule.n() != ch.e.ncols() {
        return Err(Stage2Error::DimensionMismatch(format!(
            "schedule n = {} but channel n = {}",
            schedule.n(),
            ch.e.ncols()
        )));
    }
    let users = ch.h_users.len();
    let pilots = stage2_pilots(cfg.slots_per_subframe, users)?;
    let defect = crate::numerics::frob(&(pilots.adjoint() * &pilots - CMat::identity(users, users)));
    if defect > 1e-12 * users as f64 {
        return Err(Stage2Error::NonOrthogonalPilots(defect));
    }

    let m = ch.e.nrows();
    let sqrt_p = C64::new(cfg.power_w.sqrt(), 0.0);
    let mut blocks = Vec::with_capacity(cfg.subframes);
    for theta in schedule.matrices() {
        let mut y = CMat::zeros(m, cfg.slots_per_subframe);
        for (k, h) in ch.h_users.iter().enumerate() {
            let s = (&ch.e * (&theta * h)) * sqrt_p;
            for t in 0..cfg.slots_per_subframe {
                let x = pilots[(t, k)];
                for row in 0..m {
                    y[(row, t)] += s[row] * x;
                }
            }
        }
        if cfg.noise_w > 0.0 {
            let scale = (cfg.noise_w / 2.0).sqrt();
            for e in y.iter_mut() {
                *e += C64::new(
                    scale * rng.sample::<f64, _>(StandardNormal),
                    scale * rng.sample::<f64, _>(StandardNormal),
                );
            }
        }
        blocks.push(y);
    }
    Ok(blocks)
}

/// Per-user decorrelation: `y_(c,k) = Y_c conj(x_k)`, removing the other
/// users and preserving the noise variance under unit-norm pilots.
pub fn decorrelate_user(block: &CMat, pilot: &CVec) -> Result<CVec, Stage2Error> {
    if block.ncols() != pilot.len() {
        return Err(Stage2Error::DimensionMismatch(format!(
            "block has {} slots, pilot {}",
            block.ncols(),
            pilot.len()
        )));
    }
    let conj = pilot.map(|e| e.conj());
    Ok(block * conj)
}

/// Stage-2 estimate for one user.
#[derive(Debug, Clone)]
pub struct Stage2Estimate {
    pub h_hat: CVec,
    /// Numerical rank of the stacked regressor.
    pub rank: usize,
    /// Set when `rank < N` and [`RankPolicy::MinNorm`] was in force.
    pub rank_deficient: bool,
}

/// LS estimate of one user's RIS-user channel from the per-subframe
/// decorrelated observations:
/// `h_k = (1/sqrt(P)) * lstsq([E Theta_1; ...; E Theta_C], stacked y)`.
///
/// Refuses to run when `C M < N`; reports rank deficiency (or returns the
/// flagged minimum-norm solution under [`RankPolicy::MinNorm`]) and checks
/// the conditioning bound on full-rank regressors.
pub fn ls_estimate_h(
    observations: &[CVec],
    e_hat: &CMat,
    schedule: &ScatteringSchedule,
    cfg: &Stage2Config,
) -> Result<Stage2Estimate, Stage2Error> {
    let m = e_hat.nrows();
    let n = e_hat.ncols();
    let c = schedule.len();
    if observations.len() != c {
        return Err(Stage2Error::DimensionMismatch(format!(
            "{} observations for {} subframes",
            observations.len(),
            c
        )));
    }
    if c * m < n {
        return Err(Stage2Error::Identifiability { cm: c * m, n });
    }

    let mut f = CMat::zeros(c * m, n);
    let mut y = CVec::zeros(c * m);
    for (ci, theta) in schedule.matrices().enumerate() {
        f.view_mut((ci * m, 0), (m, n)).copy_from(&(e_hat * theta));
        if observations[ci].len() != m {
            return Err(Stage2Error::DimensionMismatch(format!(
                "observation {ci} has {} entries, expected {m}",
                observations[ci].len()
            )));
        }
        y.rows_mut(ci * m, m).copy_from(&observations[ci]);
    }

    let rank_tol = (c * m).max(n) as f64 * f64::EPSILON;
    let (x, rank, smallest_ratio) = solve_min_norm(&f, &y, rank_tol);
    if rank < n {
        match cfg.rank_policy {
            RankPolicy::Error => {
                return Err(Stage2Error::RankDeficient { rank, needed: n });
            }
            RankPolicy::MinNorm => {
                return Ok(Stage2Estimate {
                    h_hat: x / C64::new(cfg.power_w.sqrt(), 0.0),
                    rank,
                    rank_deficient: true,
                });
            }
        }
    }
    let kappa = 1.0 / smallest_ratio;
    if kappa > cfg.kappa_max {
        return Err(Stage2Error::IllConditioned {
            kappa,
            bound: cfg.kappa_max,
            attempts: 1,
        });
    }
    Ok(Stage2Estimate {
        h_hat: x / C64::new(cfg.power_w.sqrt(), 0.0),
        rank,
        rank_deficient: false,
    })
}

/// Build a stage-2 schedule whose stacked regressor against `e_hat` meets
/// the conditioning bound, re-drawing the random unitaries up to 8 times.
/// Conditioning is measured on the achievable column space (the regressor
/// rank is capped by `C * rank(E)`), so sparse channels do not trip the
/// bound spuriously.
pub fn build_conditioned_schedule<R: Rng + ?Sized>(
    e_hat: &CMat,
    cfg: &Stage2Config,
    rng: &mut R,
) -> Result<ScatteringSchedule, Stage2Error> {
    let n = e_hat.ncols();
    let mut last_kappa = f64::INFINITY;
    for attempt in 0..8 {
        let schedule = crate::scattering::build_schedule(
            Stage::RisUser,
            n,
            cfg.subframes,
            cfg.slots_per_subframe,
            rng,
        )
        .map_err(|e| Stage2Error::DimensionMismatch(e.to_string()))?;
        let mut f = CMat::zeros(cfg.subframes * e_hat.nrows(), n);
        for (ci, theta) in schedule.matrices().enumerate() {
            f.view_mut((ci * e_hat.nrows(), 0), (e_hat.nrows(), n))
                .copy_from(&(e_hat * theta));
        }
        let svals = svd(&f).singular_values;
        let rank_tol = (cfg.subframes * e_hat.nrows()).max(n) as f64 * f64::EPSILON * svals[0];
        let kept: Vec<f64> = svals.iter().copied().filter(|&s| s > rank_tol).collect();
        let kappa = match (kept.first(), kept.last()) {
            (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
            _ => f64::INFINITY,
        };
        if kappa <= cfg.kappa_max {
            return Ok(replace_matrices(
                &schedule,
                schedule.matrices().collect(),
            ));
        }
        last_kappa = kappa;
        let _ = attempt;
    }
    Err(Stage2Error::IllConditioned {
        kappa: last_kappa,
        bound: cfg.kappa_max,
        attempts: 8,
    })
}

/// Pilot slots one estimation round consumes: `C * T2`.
pub fn stage2_pilot_slots(cfg: &Stage2Config) -> usize {
    cfg.subframes * cfg.slots_per_subframe
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{
        assemble_channels, cascaded_channel, cn_matrix, sample_paths, ArrayGeometry, Scenario,
    };
    use crate::numerics::frob;
    use crate::scattering::build_schedule;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn norm(v: &CVec) -> f64 {
        v.iter().map(|e| e.norm_sqr()).sum::<f64>().sqrt()
    }

    fn scenario(geometry: ArrayGeometry, users: usize) -> Scenario {
        Scenario {
            geometry,
            users,
            bs_ris_paths: 2,
            user_paths: 3,
            fc_ghz: 28.0,
            d_br_m: 10.0,
            d_ru_m: 50.0,
            beta_br: 2.2,
            beta_ru: 2.2,
            shadow_sigma_db: 0.0,
            on_grid: None,
        }
    }

    #[test]
    fn delta_pilot_isolates_slot() {
        // K = 1 with T2 = 1: the single slot carries sqrt(P) E Theta h.
        let geometry = ArrayGeometry::new(2, 2, 2, 2).unwrap();
        let params = sample_paths(&scenario(geometry, 1), &mut rng(1)).unwrap();
        let ch = assemble_channels(&params, &geometry).unwrap();
        let cfg = Stage2Config {
            subframes: 1,
            slots_per_subframe: 1,
            power_w: 4.0,
            ..Stage2Config::defaults(4, 4, 1)
        };
        let sched = build_schedule(Stage::RisUser, 4, 1, 1, &mut rng(2)).unwrap();
        let blocks = simulate_stage2_uplink(&ch, &sched, &cfg, &mut rng(3)).unwrap();
        let expect = (&ch.e * (&sched.matrix(0) * &ch.h_users[0])) * C64::new(2.0, 0.0);
        assert!(norm(&(blocks[0].column(0).into_owned() - expect)) < 1e-12);
    }

    #[test]
    fn cross_user_leakage_cancels() {
        let geometry = ArrayGeometry::new(2, 2, 2, 2).unwrap();
        let params = sample_paths(&scenario(geometry, 2), &mut rng(4)).unwrap();
        let ch = assemble_channels(&params, &geometry).unwrap();
        let cfg = Stage2Config {
            subframes: 2,
            slots_per_subframe: 2,
            power_w: 1.0,
            ..Stage2Config::defaults(4, 4, 2)
        };
        let sched = build_schedule(Stage::RisUser, 4, 2, 2, &mut rng(5)).unwrap();
        let blocks = simulate_stage2_uplink(&ch, &sched, &cfg, &mut rng(6)).unwrap();
        let pilots = stage2_pilots(2, 2).unwrap();
        for (c, block) in blocks.iter().enumerate() {
            let y0 = decorrelate_user(block, &pilots.column(0).into_owned()).unwrap();
            let expect = &ch.e * (&sched.matrix(c) * &ch.h_users[0]);
            assert!(norm(&(y0 - expect)) < 1e-12, "leakage at subframe {c}");
        }
        assert_eq!(stage2_pilot_slots(&cfg), 4);
    }

    #[test]
    fn decorrelation_zero_pilot_and_noise_moments() {
        let block = cn_matrix(6, 4, 1.0, &mut rng(7));
        let zero = CVec::zeros(4);
        let out = decorrelate_user(&block, &zero).unwrap();
        assert!(norm(&out) < 1e-15);

        // Unit-norm pilot keeps the noise variance.
        let pilots = stage2_pilots(4, 2).unwrap();
        let mut acc = 0.0;
        let mut count = 0;
        let mut r = rng(8);
        for _ in 0..2000 {
            let noise = cn_matrix(6, 4, 1.0, &mut r);
            let y = decorrelate_user(&noise, &pilots.column(0).into_owned()).unwrap();
            acc += y.iter().map(|e| e.norm_sqr()).sum::<f64>();
            count += y.len();
        }
        let var = acc / count as f64;
        assert!((var - 1.0).abs() < 0.05, "variance {var}");
    }

    /// Dense random `E` of full rank min(m, n) for well-posed LS scenarios.
    fn dense_channel(m: usize, n: usize, users: usize, seed: u64) -> ChannelRealization {
        let geometry = ArrayGeometry::new(m - m / 2, m / 2, 1, n).unwrap();
        let mut r = rng(seed);
        let e = cn_matrix(m, n, 1.0, &mut r);
        let h_users = (0..users)
            .map(|_| {
                let v = cn_matrix(n, 1, 1.0, &mut r);
                CVec::from_column_slice(v.as_slice())
            })
            .collect();
        ChannelRealization {
            e_r: e.rows(0, geometry.m_r).into_owned(),
            e_t: e.rows(0, geometry.m_t).into_owned(),
            e,
            h_users,
            params: crate::channel::PathParams {
                bs_ris: vec![],
                users: vec![],
            },
            geometry,
        }
    }

    #[test]
    fn exact_recovery_with_true_channel() {
        // N = 8, M = 4, C = 2: full-rank dense E stacks to a square system.
        let ch = dense_channel(4, 8, 1, 9);
        let cfg = Stage2Config {
            subframes: 2,
            slots_per_subframe: 1,
            power_w: 2.0,
            ..Stage2Config::defaults(4, 8, 1)
        };
        let sched = build_conditioned_schedule(&ch.e, &cfg, &mut rng(10)).unwrap();
        let blocks = simulate_stage2_uplink(&ch, &sched, &cfg, &mut rng(11)).unwrap();
        let pilots = stage2_pilots(1, 1).unwrap();
        let obs: Vec<CVec> = blocks
            .iter()
            .map(|b| decorrelate_user(b, &pilots.column(0).into_owned()).unwrap())
            .collect();
        let est = ls_estimate_h(&obs, &ch.e, &sched, &cfg).unwrap();
        assert!(!est.rank_deficient);
        let rel = norm(&(&est.h_hat - &ch.h_users[0])) / norm(&ch.h_users[0]);
        assert!(rel < 1e-9, "relative error {rel:.3e}");
    }

    #[test]
    fn sign_flipped_e_flips_h_and_cancels_in_cascade() {
        let ch = dense_channel(4, 8, 1, 12);
        let cfg = Stage2Config {
            subframes: 2,
            slots_per_subframe: 1,
            ..Stage2Config::defaults(4, 8, 1)
        };
        let sched = build_conditioned_schedule(&ch.e, &cfg, &mut rng(13)).unwrap();
        let blocks = simulate_stage2_uplink(&ch, &sched, &cfg, &mut rng(14)).unwrap();
        let pilots = stage2_pilots(1, 1).unwrap();
        let obs: Vec<CVec> = blocks
            .iter()
            .map(|b| decorrelate_user(b, &pilots.column(0).into_owned()).unwrap())
            .collect();
        let plus = ls_estimate_h(&obs, &ch.e, &sched, &cfg).unwrap();
        let neg_e = -ch.e.clone();
        let minus = ls_estimate_h(&obs, &neg_e, &sched, &cfg).unwrap();
        assert!(norm(&(&minus.h_hat + &plus.h_hat)) < 1e-9 * norm(&plus.h_hat));
        let big_plus = cascaded_channel(&plus.h_hat, &ch.e);
        let big_minus = cascaded_channel(&minus.h_hat, &neg_e);
        assert!(frob(&(&big_plus - &big_minus)) < 1e-9 * frob(&big_plus));
    }

    #[test]
    fn zero_channel_estimates_to_noise_level() {
        let mut ch = dense_channel(4, 8, 1, 15);
        ch.h_users[0].fill(C64::new(0.0, 0.0));
        let base = Stage2Config {
            subframes: 2,
            slots_per_subframe: 1,
            power_w: 1.0,
            ..Stage2Config::defaults(4, 8, 1)
        };
        let sched = build_conditioned_schedule(&ch.e, &base, &mut rng(16)).unwrap();
        let pilots = stage2_pilots(1, 1).unwrap();
        let mut norms = Vec::new();
        for noise_w in [1e-2, 1e-6] {
            let cfg = Stage2Config { noise_w, ..base };
            let blocks = simulate_stage2_uplink(&ch, &sched, &cfg, &mut rng(17)).unwrap();
            let obs: Vec<CVec> = blocks
                .iter()
                .map(|b| decorrelate_user(b, &pilots.column(0).into_owned()).unwrap())
                .collect();
            let est = ls_estimate_h(&obs, &ch.e, &sched, &cfg).unwrap();
            norms.push(norm(&est.h_hat));
        }
        assert!(norms[1] < norms[0] * 1e-1, "noise floor did not shrink: {norms:?}");
    }

    #[test]
    fn identifiability_gate_refuses_cm_below_n() {
        let ch = dense_channel(4, 8, 1, 18);
        let cfg = Stage2Config {
            subframes: 1, // C*M = 4 < N = 8
            slots_per_subframe: 1,
            ..Stage2Config::defaults(4, 8, 1)
        };
        let sched = build_schedule(Stage::RisUser, 8, 1, 1, &mut rng(19)).unwrap();
        let obs = vec![CVec::zeros(4)];
        assert!(matches!(
            ls_estimate_h(&obs, &ch.e, &sched, &cfg),
            Err(Stage2Error::Identifiability { cm: 4, n: 8 })
        ));
    }

    /// Rank-1 sparse channel: L = 1 path, N = 8, M = 4.
    fn sparse_rank1_channel() -> ChannelRealization {
        let geometry = ArrayGeometry::new(2, 2, 2, 4).unwrap();
        let params = crate::channel::PathParams {
            bs_ris: vec![crate::channel::BsRisPath {
                gain: C64::new(0.9, -0.3),
                bs_elevation: 1.0,
                ris_elevation: 1.2,
                ris_azimuth: 2.0,
            }],
            users: vec![vec![crate::channel::UserPath {
                gain: C64::new(0.5, 0.5),
                elevation: 0.7,
                azimuth: 1.9,
            }]],
        };
        assemble_channels(&params, &geometry).unwrap()
    }

    #[test]
    fn sparse_channel_rank_deficiency_is_reported() {
        // L = 1, N = 8, C = 2, M = 4: C*M = 8 passes the gate but
        // rank(F) <= C*L = 2 < 8.
        let ch = sparse_rank1_channel();
        let cfg = Stage2Config {
            subframes: 2,
            slots_per_subframe: 1,
            ..Stage2Config::defaults(4, 8, 1)
        };
        let sched = build_schedule(Stage::RisUser, 8, 2, 1, &mut rng(20)).unwrap();
        let blocks = simulate_stage2_uplink(&ch, &sched, &cfg, &mut rng(21)).unwrap();
        let pilots = stage2_pilots(1, 1).unwrap();
        let obs: Vec<CVec> = blocks
            .iter()
            .map(|b| decorrelate_user(b, &pilots.column(0).into_owned()).unwrap())
            .collect();
        match ls_estimate_h(&obs, &ch.e, &sched, &cfg) {
            Err(Stage2Error::RankDeficient { rank, needed }) => {
                assert_eq!(needed, 8);
                assert!(rank <= 2, "rank {rank} exceeds C*L");
            }
            other => panic!("expected rank deficiency, got {other:?}"),
        }

        // Min-norm policy returns the flagged projection solution instead.
        let cfg_mn = Stage2Config {
            rank_policy: RankPolicy::MinNorm,
            ..cfg
        };
        let est = ls_estimate_h(&obs, &ch.e, &sched, &cfg_mn).unwrap();
        assert!(est.rank_deficient);
        assert!(est.rank <= 2);
        // The residual of the fitted system is (numerically) zero: the
        // noiseless observations lie in the regressor's column space.
        let mut f = CMat::zeros(8, 8);
        for (ci, theta) in sched.matrices().enumerate() {
            f.view_mut((ci * 4, 0), (4, 8)).copy_from(&(&ch.e * theta));
        }
        let mut y = CVec::zeros(8);
        for (ci, o) in obs.iter().enumerate() {
            y.rows_mut(ci * 4, 4).copy_from(o);
        }
        let residual = norm(&(&f * &est.h_hat - &y));
        assert!(residual < 1e-9 * norm(&y), "residual {residual:.3e}");
    }

    #[test]
    fn estimator_is_linear_in_observations() {
        let ch = dense_channel(4, 8, 1, 22);
        let cfg = Stage2Config {
            subframes: 2,
            slots_per_subframe: 1,
            noise_w: 1e-4,
            ..Stage2Config::defaults(4, 8, 1)
        };
        let sched = build_conditioned_schedule(&ch.e, &cfg, &mut rng(23)).unwrap();
        let blocks = simulate_stage2_uplink(&ch, &sched, &cfg, &mut rng(24)).unwrap();
        let pilots = stage2_pilots(1, 1).unwrap();
        let obs: Vec<CVec> = blocks
            .iter()
            .map(|b| decorrelate_user(b, &pilots.column(0).into_owned()).unwrap())
            .collect();
        let a = C64::new(-0.8, 2.2);
        let scaled: Vec<CVec> = obs.iter().map(|o| o * a).collect();
        let base = ls_estimate_h(&obs, &ch.e, &sched, &cfg).unwrap();
        let est = ls_estimate_h(&scaled, &ch.e, &sched, &cfg).unwrap();
        assert!(norm(&(&est.h_hat - &base.h_hat * a)) < 1e-10 * norm(&base.h_hat));
    }

    #[test]
    fn nmse_scales_inversely_with_power() {
        // Fixed dense channel, Monte Carlo over noise: per-user NMSE of h
        // must drop ~10x per 10 dB of power.
        let ch = dense_channel(8, 8, 1, 25);
        let sched_cfg = Stage2Config {
            subframes: 1,
            slots_per_subframe: 1,
            ..Stage2Config::defaults(8, 8, 1)
        };
        let sched = build_conditioned_schedule(&ch.e, &sched_cfg, &mut rng(26)).unwrap();
        let pilots = stage2_pilots(1, 1).unwrap();
        let h_energy = norm(&ch.h_users[0]).powi(2);
        let mut r = rng(27);
        let mut nmse = [0.0f64; 2];
        for (i, p) in [1.0, 10.0].into_iter().enumerate() {
            let cfg = Stage2Config {
                power_w: p,
                noise_w: 1e-4 * h_energy,
                ..sched_cfg
            };
            let trials = 300;
            let mut acc = 0.0;
            for _ in 0..trials {
                let blocks = simulate_stage2_uplink(&ch, &sched, &cfg, &mut r).unwrap();
                let obs: Vec<CVec> = blocks
                    .iter()
                    .map(|b| decorrelate_user(b, &pilots.column(0).into_owned()).unwrap())
                    .collect();
                let est = ls_estimate_h(&obs, &ch.e, &sched, &cfg).unwrap();
                acc += norm(&(&est.h_hat - &ch.h_users[0])).powi(2) / h_energy;
            }
            nmse[i] = acc / trials as f64;
        }
        let slope = nmse[0] / nmse[1];
        assert!((8.0..12.0).contains(&slope), "slope {slope}");
    }
}
