//! A small Monte Carlo sweep through the harness: both estimators, two RIS
//! sizes, CSV plus SVG output under `out/nmse_sweep/`.

use bdris::harness::{emit_plots, run_experiment, ExperimentConfig, FigureKind};

fn main() {
    let mut cfg = ExperimentConfig::preset("fig3").expect("preset");
    cfg.experiment_id = "nmse_sweep_demo".into();
    cfg.n_sweep = vec![[4, 4], [6, 6]];
    cfg.trials = 6;

    let out = std::path::Path::new("out/nmse_sweep");
    let (records, csv_path) = run_experiment(&cfg, out).expect("run");

    println!("{} records -> {}", records.len(), csv_path.display());
    for point_n in [16usize, 36] {
        for estimator in ["baseline", "proposed"] {
            let mut values: Vec<f64> = records
                .iter()
                .filter(|r| r.n == point_n && r.estimator == estimator)
                .filter_map(|r| r.nmse)
                .collect();
            values.sort_by(|a, b| a.partial_cmp(b).unwrap());
            if let Some(mid) = values.get(values.len() / 2) {
                println!("  N = {point_n:>2} {estimator:>9}: median NMSE {mid:.3e}");
            }
        }
    }

    let plots = emit_plots(&csv_path, FigureKind::Auto, out).expect("plots");
    for p in plots {
        println!("wrote {}", p.display());
    }
}
