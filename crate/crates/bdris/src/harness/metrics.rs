//! NMSE and pilot-overhead metrics, per-trial records, and CSV I/O.

use super::config::{EstimatorKind, ExperimentConfig};
use crate::numerics::{frob, CMat};
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("shape mismatch between true and estimated channel {0}")]
    ShapeMismatch(usize),
    #[error("true channels have zero energy; NMSE undefined")]
    ZeroDenominator,
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing column {0}")]
    MissingColumn(&'static str),
}

/// Per-trial normalized mean square error:
/// `sum_k ||H_k - Hhat_k||_F^2 / sum_k ||H_k||_F^2`.
pub fn nmse(truth: &[CMat], estimate: &[CMat]) -> Result<f64, MetricsError> {
    if truth.len() != estimate.len() {
        return Err(MetricsError::ShapeMismatch(usize::MAX));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (k, (t, e)) in truth.iter().zip(estimate).enumerate() {
        if t.shape() != e.shape() {
            return Err(MetricsError::ShapeMismatch(k));
        }
        num += frob(&(t - e)).powi(2);
        den += frob(t).powi(2);
    }
    if den <= 0.0 {
        return Err(MetricsError::ZeroDenominator);
    }
    Ok(num / den)
}

/// Pilot-slot accounting for one estimation round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PilotOverhead {
    /// Slots actually consumed by the configured schedules.
    pub slots: u64,
    /// The closed-form reference count
    /// (`K N^2` for the baseline, `L min(log2 M, log2 N^2) + gamma K ceil(N/M)`
    /// for the individual estimator), reported alongside for comparison.
    pub reference: f64,
}

/// Slot count per estimation round at one sweep point.
///
/// Baseline: `K * N^2`. Individual estimator: `B * T` for the BS-RIS stage
/// plus `gamma * C * T2` for the per-frame RIS-user rounds, using the
/// actually configured subframe counts and slot widths.
pub fn pilot_overhead(
    cfg: &ExperimentConfig,
    estimator: EstimatorKind,
    n1: usize,
    n2: usize,
) -> PilotOverhead {
    let n = n1 * n2;
    let k = cfg.users;
    match estimator {
        EstimatorKind::Baseline => PilotOverhead {
            slots: (k * n * n) as u64,
            reference: (k * n * n) as f64,
        },
        EstimatorKind::Proposed => {
            let geometry = cfg
                .geometry_for(n1, n2)
                .expect("validated configuration");
            let s1 = cfg.stage1_config(&geometry);
            let s2 = cfg.stage2_config(&geometry);
            let slots = (s1.subframes * s1.slots_per_subframe
                + cfg.gamma_reestimations * s2.subframes * s2.slots_per_subframe)
                as u64;
            let m = geometry.m() as f64;
            let nf = n as f64;
            let reference = cfg.bs_ris_paths as f64 * (m.log2()).min((nf * nf).log2())
                + (cfg.gamma_reestimations * k * n.div_ceil(geometry.m())) as f64;
            PilotOverhead { slots, reference }
        }
    }
}

/// One CSV row: a single estimator run on a single trial at one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub experiment_id: String,
    pub trial: usize,
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub p_dbm: f64,
    pub estimator: String,
    /// Empty on estimator failure.
    pub nmse: Option<f64>,
    pub pilot_slots: u64,
    pub wall_time_ms: u64,
    /// Empty when clean; a short reason otherwise. `rank_deficient` rows
    /// still carry an NMSE (minimum-norm estimate).
    pub error_flag: String,
}

pub const CSV_HEADER: [&str; 11] = [
    "experiment_id",
    "trial",
    "M",
    "N",
    "K",
    "P_dBm",
    "estimator",
    "nmse",
    "pilot_slots",
    "wall_time_ms",
    "error_flag",
];

/// Write records to `path` atomically (temp file then rename), fixed column
/// order, UTF-8, '.' decimal separator.
pub fn write_csv(records: &[MetricsRecord], path: &Path) -> Result<(), MetricsError> {
    let tmp = path.with_extension("csv.tmp");
    {
        let file = fs::File::create(&tmp).map_err(|source| MetricsError::Io {
            path: tmp.clone(),
            source,
        })?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(CSV_HEADER)?;
        for r in records {
            w.write_record(&[
                r.experiment_id.clone(),
                r.trial.to_string(),
                r.m.to_string(),
                r.n.to_string(),
                r.k.to_string(),
                format!("{}", r.p_dbm),
                r.estimator.clone(),
                r.nmse.map(|v| format!("{v:e}")).unwrap_or_default(),
                r.pilot_slots.to_string(),
                r.wall_time_ms.to_string(),
                r.error_flag.clone(),
            ])?;
        }
        w.flush().map_err(|source| MetricsError::Io {
            path: tmp.clone(),
            source,
        })?;
    }
    fs::rename(&tmp, path).map_err(|source| MetricsError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Read records back from a metrics CSV.
pub fn read_csv(path: &Path) -> Result<Vec<MetricsRecord>, MetricsError> {
    let file = fs::File::open(path).map_err(|source| MetricsError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::Reader::from_reader(file);
    let headers = reader.headers()?.clone();
    let col = |name: &'static str| -> Result<usize, MetricsError> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or(MetricsError::MissingColumn(name))
    };
    let idx: Vec<usize> = CSV_HEADER
        .iter()
        .map(|&c| col(c))
        .collect::<Result<_, _>>()?;
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row?;
        let get = |i: usize| row.get(idx[i]).unwrap_or_default();
        out.push(MetricsRecord {
            experiment_id: get(0).to_string(),
            trial: get(1).parse().unwrap_or(0),
            m: get(2).parse().unwrap_or(0),
            n: get(3).parse().unwrap_or(0),
            k: get(4).parse().unwrap_or(0),
            p_dbm: get(5).parse().unwrap_or(0.0),
            estimator: get(6).to_string(),
            nmse: {
                let s = get(7);
                if s.is_empty() {
                    None
                } else {
                    s.parse().ok()
                }
            },
            pilot_slots: get(8).parse().unwrap_or(0),
            wall_time_ms: get(9).parse().unwrap_or(0),
            error_flag: get(10).to_string(),
        });
    }
    Ok(out)
}

/// Median of a non-empty slice (averaging the middle pair on even lengths).
pub fn median(values: &mut Vec<f64>) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::C64;

    fn fill(m: usize, n: usize, v: f64) -> CMat {
        CMat::from_element(m, n, C64::new(v, 0.0))
    }

    #[test]
    fn nmse_trivial_values() {
        let truth = vec![fill(2, 3, 1.0), fill(2, 3, 2.0)];
        assert!(nmse(&truth, &truth).unwrap() < 1e-15);

        let zeros = vec![fill(2, 3, 0.0), fill(2, 3, 0.0)];
        assert!((nmse(&truth, &zeros).unwrap() - 1.0).abs() < 1e-12);

        let flipped: Vec<CMat> = truth.iter().map(|h| -h.clone()).collect();
        assert!((nmse(&truth, &flipped).unwrap() - 4.0).abs() < 1e-12);

        assert!(matches!(
            nmse(&zeros, &truth),
            Err(MetricsError::ZeroDenominator)
        ));
    }

    #[test]
    fn csv_roundtrip() {
        let records = vec![
            MetricsRecord {
                experiment_id: "t".into(),
                trial: 0,
                m: 4,
                n: 16,
                k: 2,
                p_dbm: 20.0,
                estimator: "baseline".into(),
                nmse: Some(1.25e-3),
                pilot_slots: 512,
                wall_time_ms: 7,
                error_flag: String::new(),
            },
            MetricsRecord {
                experiment_id: "t".into(),
                trial: 1,
                m: 4,
                n: 16,
                k: 2,
                p_dbm: 20.0,
                estimator: "proposed".into(),
                nmse: None,
                pilot_slots: 100,
                wall_time_ms: 3,
                error_flag: "stage1: flat correlation objective".into(),
            },
        ];
        let dir = std::env::temp_dir().join("bdris_metrics_test");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("roundtrip.csv");
        write_csv(&records, &path).unwrap();
        let back = read_csv(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].estimator, "baseline");
        assert!((back[0].nmse.unwrap() - 1.25e-3).abs() < 1e-18);
        assert_eq!(back[1].nmse, None);
        assert_eq!(back[1].error_flag, "stage1: flat correlation objective");
        fs::remove_file(&path).ok();
    }

    #[test]
    fn pilot_overhead_matches_configured_defaults() {
        // M = 32 (16/16), N = 16, K = 4, gamma = 2 with module defaults:
        // B = max(ceil(log2 32), ceil(log2 256)) = 8, T = m_t = 16,
        // C = ceil(16/32) = 1, T2 = K = 4 -> 8*16 + 2*1*4 = 136.
        let mut cfg = crate::harness::config::ExperimentConfig::preset("fig3").unwrap();
        cfg.users = 4;
        cfg.gamma_reestimations = 2;
        let baseline = pilot_overhead(&cfg, crate::harness::config::EstimatorKind::Baseline, 4, 4);
        assert_eq!(baseline.slots, 1024);
        let proposed = pilot_overhead(&cfg, crate::harness::config::EstimatorKind::Proposed, 4, 4);
        assert_eq!(proposed.slots, 136);

        // gamma = 0 leaves only the BS-RIS stage.
        cfg.gamma_reestimations = 0;
        let proposed = pilot_overhead(&cfg, crate::harness::config::EstimatorKind::Proposed, 4, 4);
        assert_eq!(proposed.slots, 128);
    }

    #[test]
    fn median_handles_parities() {
        assert_eq!(median(&mut vec![3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&mut vec![4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&mut Vec::new()), None);
    }
}
