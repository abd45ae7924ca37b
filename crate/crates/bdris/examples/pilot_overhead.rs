//! Pilot-overhead accounting at the full array scale (M = 80, K = 4,
//! gamma = 2): the baseline needs K*N^2 slots per round while the
//! individual estimator needs B*T + gamma*C*T2, which grows only
//! logarithmically-to-linearly in N.

use bdris::harness::{pilot_overhead, EstimatorKind, ExperimentConfig};

fn main() {
    let cfg = ExperimentConfig::preset("fig5").expect("preset");
    println!(
        "M = {}, K = {}, gamma = {}",
        cfg.geometry.m_r + cfg.geometry.m_t,
        cfg.users,
        cfg.gamma_reestimations
    );
    println!("{:>8} {:>14} {:>14} {:>10}", "N", "baseline", "proposed", "ratio");
    for &[n1, n2] in &cfg.n_sweep {
        let n = n1 * n2;
        let baseline = pilot_overhead(&cfg, EstimatorKind::Baseline, n1, n2);
        let proposed = pilot_overhead(&cfg, EstimatorKind::Proposed, n1, n2);
        println!(
            "{n:>8} {:>14} {:>14} {:>10.1}",
            baseline.slots,
            proposed.slots,
            baseline.slots as f64 / proposed.slots as f64
        );
    }
    println!(
        "\n(closed-form reference for the individual estimator at N = 10000: {:.0} slots)",
        pilot_overhead(&cfg, EstimatorKind::Proposed, 100, 100).reference
    );
}
