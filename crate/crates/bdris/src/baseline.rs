//! Conventional cascaded-channel estimation: every user's `M x N^2`
//! cascaded channel `H_k = kron(h_k^T, E)` is estimated from `K * N^2`
//! uplink pilot slots.
//!
//! Slots are grouped into `N^2` blocks of `K`; the scattering matrix is
//! fixed within a block and the users transmit orthogonal `K`-length pilot
//! sequences, so per-user decorrelation of block `tau` yields
//! `y_(k,tau) = sqrt(P) * H_k * vec(Theta_tau) + noise`. Under the
//! clock-and-shift schedule the vectorizations are orthogonal with squared
//! norm `N`, so the LS solution collapses to the matched filter
//! `H_k = sum_tau y_(k,tau) * vec(Theta_tau)^H / (sqrt(P) * N)`, which is
//! exact on noiseless data and `O(N^4)` cheaper than a general
//! `N^2 x N^2` inverse.

use crate::channel::ChannelRealization;
use crate::numerics::{vec_of, CMat, CVec, C64};
use crate::scattering::ScatteringSchedule;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("schedule has {got} matrices, need n^2 = {expected}")]
    ScheduleLength { expected: usize, got: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("pilot sequences are not orthonormal (defect {0:.3e})")]
    NonOrthogonalPilots(f64),
    #[error("schedule vectorizations are not orthogonal (worst deviation {0:.3e})")]
    NonOrthogonalSchedule(f64),
}

/// Decorrelated baseline observations for all users.
#[derive(Debug, Clone)]
pub struct BaselineMeasurement {
    /// Per user: `M x N^2` matrix whose column `tau` is `y_(k,tau)`.
    pub observations: Vec<CMat>,
    pub schedule: ScatteringSchedule,
    /// Transmit power in watts.
    pub power_w: f64,
    /// Noise variance in watts.
    pub noise_w: f64,
}

impl BaselineMeasurement {
    /// Pilot slots consumed: `K * N^2`.
    pub fn pilot_slots(&self) -> usize {
        self.observations.len() * self.schedule.len()
    }
}

/// Orthonormal `K`-length user pilots: the columns of the `K`-point DFT
/// matrix.
pub fn user_pilots(users: usize) -> CMat {
    crate::numerics::dft_matrix(users).expect("users >= 1")
}

/// Simulate the `K * N^2`-slot baseline uplink and decorrelate per user.
///
/// Block `tau` holds `Theta_tau` fixed over `K` slots while all users send
/// their pilot sequences; the per-block receive matrix is
/// `Y_tau = sqrt(P) * sum_k (E Theta_tau h_k) x_k^T + noise` and user `k`'s
/// decorrelated observation is `Y_tau * conj(x_k)`.
pub fn simulate_baseline_uplink<R: Rng + ?Sized>(
    ch: &ChannelRealization,
    schedule: &ScatteringSchedule,
    pilots: &CMat,
    power_w: f64,
    noise_w: f64,
    rng: &mut R,
) -> Result<BaselineMeasurement, BaselineError> {
    let n = ch.e.ncols();
    let m = ch.e.nrows();
    let users = ch.h_users.len();
    if schedule.len() != n * n || schedule.n() != n {
        return Err(BaselineError::ScheduleLength {
            expected: n * n,
            got: schedule.len(),
        });
    }
    if pilots.nrows() != users || pilots.ncols() != users {
        return Err(BaselineError::DimensionMismatch(format!(
            "pilot matrix {}x{} but {} users",
            pilots.nrows(),
            pilots.ncols(),
            users
        )));
    }
    let gram_defect = crate::numerics::frob(&(pilots.adjoint() * pilots - CMat::identity(users, users)));
    if gram_defect > 1e-9 {
        return Err(BaselineError::NonOrthogonalPilots(gram_defect));
    }

    let sqrt_p = power_w.sqrt();
    let mut observations = vec![CMat::zeros(m, n * n); users];
    for tau in 0..schedule.len() {
        let theta = schedule.matrix(tau);
        // Noiseless per-user component at this block.
        let signals: Vec<CVec> = ch
            .h_users
            .iter()
            .map(|h| (&ch.e * (&theta * h)) * C64::new(sqrt_p, 0.0))
            .collect();
        // Received block: M x K slots, plus noise.
        let mut block = CMat::zeros(m, users);
        for (k, s) in signals.iter().enumerate() {
            for t in 0..users {
                let x = pilots[(t, k)];
                for row in 0..m {
                    block[(row, t)] += s[row] * x;
                }
            }
        }
        if noise_w > 0.0 {
            let scale = (noise_w / 2.0).sqrt();
            for e in block.iter_mut() {
                *e += C64::new(
                    scale * rng.sample::<f64, _>(StandardNormal),
                    scale * rng.sample::<f64, _>(StandardNormal),
                );
            }
        }
        // Per-user decorrelation over the block.
        for k in 0..users {
            let xk = pilots.column(k);
            for row in 0..m {
                let mut acc = C64::new(0.0, 0.0);
                for t in 0..users {
                    acc += block[(row, t)] * xk[t].conj();
                }
                observations[k][(row, tau)] = acc;
            }
        }
    }

    Ok(BaselineMeasurement {
        observations,
        schedule: schedule.clone(),
        power_w,
        noise_w,
    })
}

/// Worst vectorization-Gram deviation from `N * delta_ab` over a bounded
/// pair sample. Exhaustive for small schedules; strided otherwise so the
/// check stays `O(1e7)` regardless of `N`.
fn schedule_gram_deviation(schedule: &ScatteringSchedule) -> f64 {
    let count = schedule.len();
    let n = schedule.n() as f64;
    let vecs: Vec<CVec> = schedule.matrices().map(|m| vec_of(&m)).collect();
    let mut worst: f64 = 0.0;
    for v in &vecs {
        worst = worst.max((v.dotc(v).re - n).abs());
    }
    let budget = 20_000_000usize;
    let per_pair = vecs.first().map_or(1, |v| v.len());
    let max_pairs = (budget / per_pair).max(16);
    let total_pairs = count * (count - 1) / 2;
    let stride = (total_pairs / max_pairs).max(1);
    let mut seen = 0usize;
    let mut idx = 0usize;
    for a in 0..count {
        for b in (a + 1)..count {
            if idx % stride == 0 && seen < max_pairs {
                worst = worst.max(vecs[a].dotc(&vecs[b]).norm());
                seen += 1;
            }
            idx += 1;
        }
    }
    worst
}

/// Matched-filter LS estimate of every user's cascaded channel:
/// `H_k = sum_tau y_(k,tau) * vec(Theta_tau)^H / (sqrt(P) * N)`.
///
/// Requires the schedule's vectorization Gram to be `N * I` (clock-and-shift
/// schedules guarantee it); deviations beyond `1e-6 * N` are reported.
pub fn estimate_cascaded_ls(meas: &BaselineMeasurement) -> Result<Vec<CMat>, BaselineError> {
    let n = meas.schedule.n();
    let deviation = schedule_gram_deviation(&meas.schedule);
    if deviation > 1e-6 * n as f64 {
        return Err(BaselineError::NonOrthogonalSchedule(deviation));
    }

    let scale = C64::new(1.0 / (meas.power_w.sqrt() * n as f64), 0.0);
    let mut estimates = Vec::with_capacity(meas.observations.len());
    for obs in &meas.observations {
        let m = obs.nrows();
        let mut h_hat = CMat::zeros(m, n * n);
        for tau in 0..meas.schedule.len() {
            let v = vec_of(&meas.schedule.matrix(tau));
            let y = obs.column(tau);
            for (j, vj) in v.iter().enumerate() {
                if vj.norm_sqr() == 0.0 {
                    continue;
                }
                let w = vj.conj() * scale;
                for row in 0..m {
                    h_hat[(row, j)] += y[row] * w;
                }
            }
        }
        estimates.push(h_hat);
    }
    Ok(estimates)
}
