//! Stage-2 LS estimation of the RIS-user channels, including the two rank
//! regimes: enough subframes for a full-rank stacked regressor (exact
//! noiseless recovery) versus the paper-minimum `C = ceil(N/M)` on a sparse
//! channel, where `rank(F) <= C*L < N` and the estimator reports the
//! deficiency instead of inventing an answer.

use bdris::channel::{assemble_channels, sample_paths, ArrayGeometry, Scenario};
use bdris::numerics::CVec;
use bdris::ris_user::{
    build_conditioned_schedule, decorrelate_user, ls_estimate_h, simulate_stage2_uplink,
    stage2_pilots, RankPolicy, Stage2Config, Stage2Error,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn norm(v: &CVec) -> f64 {
    v.iter().map(|e| e.norm_sqr()).sum::<f64>().sqrt()
}

fn main() {
    let geometry = ArrayGeometry::new(4, 4, 4, 4).expect("valid geometry");
    let scenario = Scenario {
        geometry,
        users: 2,
        bs_ris_paths: 3,
        user_paths: 4,
        fc_ghz: 28.0,
        d_br_m: 10.0,
        d_ru_m: 50.0,
        beta_br: 2.2,
        beta_ru: 2.2,
        shadow_sigma_db: 0.0,
        on_grid: None,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let params = sample_paths(&scenario, &mut rng).unwrap();
    let ch = assemble_channels(&params, &geometry).unwrap();
    let n = geometry.n();
    let m = geometry.m();

    // Plenty of subframes: C*L >= N makes the stacked regressor full rank.
    let generous = Stage2Config {
        subframes: n.div_ceil(scenario.bs_ris_paths),
        slots_per_subframe: scenario.users,
        power_w: 1.0,
        noise_w: 0.0,
        kappa_max: 1e6,
        rank_policy: RankPolicy::Error,
    };
    let schedule = build_conditioned_schedule(&ch.e, &generous, &mut rng).unwrap();
    let blocks = simulate_stage2_uplink(&ch, &schedule, &generous, &mut rng).unwrap();
    let pilots = stage2_pilots(generous.slots_per_subframe, scenario.users).unwrap();
    println!(
        "generous schedule: C = {} subframes ({} pilot slots)",
        generous.subframes,
        generous.subframes * generous.slots_per_subframe
    );
    for k in 0..scenario.users {
        let pilot = pilots.column(k).into_owned();
        let obs: Vec<CVec> = blocks
            .iter()
            .map(|b| decorrelate_user(b, &pilot).unwrap())
            .collect();
        let est = ls_estimate_h(&obs, &ch.e, &schedule, &generous).unwrap();
        let rel = norm(&(&est.h_hat - &ch.h_users[k])) / norm(&ch.h_users[k]);
        println!("  user {k}: rank {} regressor, relative error {rel:.3e}", est.rank);
    }

    // Paper-minimum subframes on the sparse channel: deficiency surfaces.
    let minimal = Stage2Config {
        subframes: n.div_ceil(m),
        ..generous
    };
    let schedule = build_conditioned_schedule(&ch.e, &minimal, &mut rng).unwrap();
    let blocks = simulate_stage2_uplink(&ch, &schedule, &minimal, &mut rng).unwrap();
    let obs: Vec<CVec> = blocks
        .iter()
        .map(|b| decorrelate_user(b, &pilots.column(0).into_owned()).unwrap())
        .collect();
    println!(
        "minimal schedule: C = {} subframes, C*M = {} >= N = {n}, but C*L = {}",
        minimal.subframes,
        minimal.subframes * m,
        minimal.subframes * scenario.bs_ris_paths
    );
    match ls_estimate_h(&obs, &ch.e, &schedule, &minimal) {
        Err(Stage2Error::RankDeficient { rank, needed }) => {
            println!("  strict policy: rank {rank} < {needed} reported as an error");
        }
        other => println!("  unexpected outcome: {other:?}"),
    }
    let min_norm = Stage2Config {
        rank_policy: RankPolicy::MinNorm,
        ..minimal
    };
    let est = ls_estimate_h(&obs, &ch.e, &schedule, &min_norm).unwrap();
    let rel = norm(&(&est.h_hat - &ch.h_users[0])) / norm(&ch.h_users[0]);
    println!(
        "  min-norm policy: flagged = {}, projection residual error {rel:.3}",
        est.rank_deficient
    );
}
