//! Geometric channel model: ULA/UPA steering vectors, Saleh-Valenzuela
//! path sampling, log-distance path loss with lognormal shadowing, and
//! assembly of the BS-RIS and RIS-user channel matrices.
//!
//! Conventions shared with the estimators:
//! - BS steering element `m` (zero-based) is `exp(-j*2*pi*(d/lambda)*cos(iota)*m)`.
//! - RIS UPA steering is the Kronecker product of the `n1` factor (spatial
//!   frequency `sin(phi)*cos(iota)`) with the `n2` factor (`sin(iota)`).
//! - The transmit and receive subarrays both use a local index origin 0 and
//!   share per-path gains and angles, so `E_R` and `E_T` are row prefixes of
//!   the full `E`. Any fixed inter-array phase offset would be absorbed by
//!   the path gains and cancels inside the estimation pipeline.

use crate::numerics::{kron, CMat, CVec, C64};
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("angle {0} outside [0, pi]")]
    AngleOutOfRange(f64),
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("could not place {0} paths on distinct grid bins")]
    GridCollision(&'static str),
}

/// Antenna-array dimensions shared by channel generation and estimation.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ArrayGeometry {
    /// Receive-subarray size at the BS.
    pub m_r: usize,
    /// Transmit-subarray size at the BS.
    pub m_t: usize,
    /// RIS UPA dimension along the first axis.
    pub n1: usize,
    /// RIS UPA dimension along the second axis.
    pub n2: usize,
    /// Element spacing over wavelength; must lie in (0, 0.5] so that the
    /// beamspace arccos branch map stays single-valued per branch.
    pub d_over_lambda: f64,
}

impl ArrayGeometry {
    /// Half-wavelength-spaced geometry with `m = m_r + m_t` BS antennas and
    /// an `n1 x n2` RIS.
    pub fn new(m_r: usize, m_t: usize, n1: usize, n2: usize) -> Result<Self, ChannelError> {
        Self::with_spacing(m_r, m_t, n1, n2, 0.5)
    }

    pub fn with_spacing(
        m_r: usize,
        m_t: usize,
        n1: usize,
        n2: usize,
        d_over_lambda: f64,
    ) -> Result<Self, ChannelError> {
        let g = Self {
            m_r,
            m_t,
            n1,
            n2,
            d_over_lambda,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        if self.m_r == 0 || self.m_t == 0 || self.n1 == 0 || self.n2 == 0 {
            return Err(ChannelError::Geometry(
                "all antenna counts must be at least 1".into(),
            ));
        }
        if !(self.d_over_lambda > 0.0 && self.d_over_lambda <= 0.5) {
            return Err(ChannelError::Geometry(format!(
                "d_over_lambda {} outside (0, 0.5]",
                self.d_over_lambda
            )));
        }
        Ok(())
    }

    /// Total BS antenna count `m_r + m_t`.
    pub fn m(&self) -> usize {
        self.m_r + self.m_t
    }

    /// Total RIS element count `n1 * n2`.
    pub fn n(&self) -> usize {
        self.n1 * self.n2
    }
}

/// One propagation path between BS and RIS.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BsRisPath {
    pub gain: C64,
    /// Elevation at the BS, radians in [0, pi].
    pub bs_elevation: f64,
    /// Elevation at the RIS.
    pub ris_elevation: f64,
    /// Azimuth at the RIS.
    pub ris_azimuth: f64,
}

/// One propagation path between the RIS and a user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserPath {
    pub gain: C64,
    pub elevation: f64,
    pub azimuth: f64,
}

/// Sampled small-scale parameters for one channel realization.
#[derive(Debug, Clone, PartialEq)]
pub struct PathParams {
    pub bs_ris: Vec<BsRisPath>,
    /// One path set per user.
    pub users: Vec<Vec<UserPath>>,
}

/// Assembled channel matrices for one realization.
///
/// `e`, `e_r`, `e_t` share the same path parameters: `e_r` and `e_t` are
/// the row prefixes of `e` of heights `m_r` and `m_t`.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// Full BS-RIS channel, `m x n`.
    pub e: CMat,
    /// Receive-subarray BS-RIS channel, `m_r x n`.
    pub e_r: CMat,
    /// Transmit-subarray BS-RIS channel, `m_t x n`.
    pub e_t: CMat,
    /// Per-user RIS-user channels, each `n x 1`.
    pub h_users: Vec<CVec>,
    pub params: PathParams,
    pub geometry: ArrayGeometry,
}

/// Scenario parameters consumed by [`sample_paths`].
#[derive(Debug, Clone, Copy)]
pub struct Scenario {
    pub geometry: ArrayGeometry,
    /// User count `K`.
    pub users: usize,
    /// BS-RIS path count `L`.
    pub bs_ris_paths: usize,
    /// Paths per user `U_k`.
    pub user_paths: usize,
    pub fc_ghz: f64,
    /// BS-RIS distance in metres.
    pub d_br_m: f64,
    /// RIS-user distance in metres.
    pub d_ru_m: f64,
    /// Path-loss exponent of the BS-RIS link.
    pub beta_br: f64,
    /// Path-loss exponent of the RIS-user links.
    pub beta_ru: f64,
    /// Lognormal shadowing standard deviation in dB.
    pub shadow_sigma_db: f64,
    /// When set, snap BS-RIS angles onto the estimation grids (BS beamspace
    /// bins and the `(iota, phi)` search grid) with distinct bins per path.
    pub on_grid: Option<GridSnap>,
}

/// Estimation-grid resolution used for on-grid scenario construction.
#[derive(Debug, Clone, Copy)]
pub struct GridSnap {
    pub g_iota: usize,
    pub g_phi: usize,
}

fn check_angle(x: f64) -> Result<f64, ChannelError> {
    if (0.0..=PI).contains(&x) {
        Ok(x)
    } else {
        Err(ChannelError::AngleOutOfRange(x))
    }
}

/// BS ULA steering vector: element `m` is
/// `exp(-j*2*pi*d_over_lambda*cos(iota)*m)`, `m = 0..m_count`.
pub fn steering_bs(iota: f64, m_count: usize, d_over_lambda: f64) -> Result<CVec, ChannelError> {
    check_angle(iota)?;
    let freq = d_over_lambda * iota.cos();
    Ok(CVec::from_fn(m_count, |m, _| {
        C64::from_polar(1.0, -2.0 * PI * freq * m as f64)
    }))
}

/// RIS UPA steering vector: Kronecker product of the `n1` factor
/// (frequency `sin(phi)*cos(iota)`) and the `n2` factor (`sin(iota)`).
pub fn steering_ris(
    iota: f64,
    phi: f64,
    n1: usize,
    n2: usize,
    d_over_lambda: f64,
) -> Result<CVec, ChannelError> {
    check_angle(iota)?;
    check_angle(phi)?;
    let f1 = d_over_lambda * phi.sin() * iota.cos();
    let f2 = d_over_lambda * iota.sin();
    let a1 = CMat::from_fn(n1, 1, |i, _| C64::from_polar(1.0, -2.0 * PI * f1 * i as f64));
    let a2 = CMat::from_fn(n2, 1, |i, _| C64::from_polar(1.0, -2.0 * PI * f2 * i as f64));
    let k = kron(&a1, &a2);
    Ok(CVec::from_column_slice(k.as_slice()))
}

/// Log-distance path loss in dB:
/// `32.4 + 20*log10(fc_GHz) + 10*beta*log10(dist_m) + xi`,
/// `xi ~ Normal(0, shadow_sigma_db^2)`.
pub fn path_loss_db<R: Rng + ?Sized>(
    fc_ghz: f64,
    dist_m: f64,
    beta: f64,
    shadow_sigma_db: f64,
    rng: &mut R,
) -> Result<f64, ChannelError> {
    if fc_ghz <= 0.0 {
        return Err(ChannelError::NonPositive {
            name: "fc_ghz",
            value: fc_ghz,
        });
    }
    if dist_m <= 0.0 {
        return Err(ChannelError::NonPositive {
            name: "dist_m",
            value: dist_m,
        });
    }
    let shadow: f64 = if shadow_sigma_db > 0.0 {
        shadow_sigma_db * rng.sample::<f64, _>(StandardNormal)
    } else {
        0.0
    };
    Ok(32.4 + 20.0 * fc_ghz.log10() + 10.0 * beta * dist_m.log10() + shadow)
}

/// Circularly-symmetric complex Gaussian scalar with the given variance.
pub fn cn_scalar<R: Rng + ?Sized>(variance: f64, rng: &mut R) -> C64 {
    let s = (variance / 2.0).sqrt();
    C64::new(
        s * rng.sample::<f64, _>(StandardNormal),
        s * rng.sample::<f64, _>(StandardNormal),
    )
}

/// Matrix of i.i.d. CN(0, variance) entries.
pub fn cn_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, variance: f64, rng: &mut R) -> CMat {
    CMat::from_fn(rows, cols, |_, _| cn_scalar(variance, rng))
}

/// Uniform draw over the open interval (0, pi); exact endpoint draws are
/// re-sampled to avoid degenerate steering at measure-zero points.
fn uniform_angle<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let x: f64 = rng.random::<f64>() * PI;
        if x != 0.0 && x != PI {
            return x;
        }
    }
}

/// Snap a BS elevation onto the nearest beamspace bin of an `m_r`-antenna
/// receive array: `cos(iota)` becomes `m / (m_r * d_over_lambda)` for an
/// integer bin `m` in `(-m_r/2, m_r/2]`. Returns `(iota, bin)`.
fn snap_bs_elevation(iota: f64, m_r: usize, d_over_lambda: f64) -> (f64, i64) {
    let f = d_over_lambda * iota.cos();
    let mut m = (f * m_r as f64).round() as i64;
    let half = m_r as i64 / 2;
    if m <= -half {
        m = -half + 1;
    }
    if m > half {
        m = half;
    }
    let cos = (m as f64) / (m_r as f64 * d_over_lambda);
    (cos.clamp(-1.0, 1.0).acos(), m)
}

/// Snap an angle onto the nearest point of a `g`-point inclusive grid over
/// [0, pi]. Returns `(angle, index)`.
fn snap_to_grid(x: f64, g: usize) -> (f64, usize) {
    if g <= 1 {
        return (0.0, 0);
    }
    let step = PI / (g - 1) as f64;
    let idx = ((x / step).round() as usize).min(g - 1);
    (idx as f64 * step, idx)
}

/// Draw Saleh-Valenzuela path parameters for one realization.
///
/// Every angle is uniform over (0, pi); gains are CN(0, 10^(-PL/10)) with
/// one path-loss draw per link (BS-RIS, and one per user). With `on_grid`
/// set, the BS-RIS angles are snapped to the estimation grids with distinct
/// bins per path.
pub fn sample_paths<R: Rng + ?Sized>(
    scenario: &Scenario,
    rng: &mut R,
) -> Result<PathParams, ChannelError> {
    let g = scenario.geometry;
    g.validate()?;
    if scenario.bs_ris_paths == 0 || scenario.user_paths == 0 || scenario.users == 0 {
        return Err(ChannelError::Geometry(
            "path and user counts must be at least 1".into(),
        ));
    }

    let pl_b = path_loss_db(
        scenario.fc_ghz,
        scenario.d_br_m,
        scenario.beta_br,
        scenario.shadow_sigma_db,
        rng,
    )?;
    let var_b = 10f64.powf(-pl_b / 10.0);

    let bs_ris = match scenario.on_grid {
        None => (0..scenario.bs_ris_paths)
            .map(|_| BsRisPath {
                gain: cn_scalar(var_b, rng),
                bs_elevation: uniform_angle(rng),
                ris_elevation: uniform_angle(rng),
                ris_azimuth: uniform_angle(rng),
            })
            .collect(),
        Some(snap) => sample_on_grid_bs_ris(scenario, snap, var_b, rng)?,
    };

    let mut users = Vec::with_capacity(scenario.users);
    for _ in 0..scenario.users {
        let pl_k = path_loss_db(
            scenario.fc_ghz,
            scenario.d_ru_m,
            scenario.beta_ru,
            scenario.shadow_sigma_db,
            rng,
        )?;
        let var_k = 10f64.powf(-pl_k / 10.0);
        users.push(
            (0..scenario.user_paths)
                .map(|_| UserPath {
                    gain: cn_scalar(var_k, rng),
                    elevation: uniform_angle(rng),
                    azimuth: uniform_angle(rng),
                })
                .collect(),
        );
    }

    Ok(PathParams { bs_ris, users })
}

fn sample_on_grid_bs_ris<R: Rng + ?Sized>(
    scenario: &Scenario,
    snap: GridSnap,
    var_b: f64,
    rng: &mut R,
) -> Result<Vec<BsRisPath>, ChannelError> {
    let g = scenario.geometry;
    // Re-draw whole sets until all BS bins and RIS grid pairs are distinct.
    'attempt: for _ in 0..256 {
        let mut paths = Vec::with_capacity(scenario.bs_ris_paths);
        let mut bs_bins = Vec::new();
        let mut ris_cells = Vec::new();
        for _ in 0..scenario.bs_ris_paths {
            let (iota_b, bin) = snap_bs_elevation(uniform_angle(rng), g.m_r, g.d_over_lambda);
            let (iota_r, gi) = snap_to_grid(uniform_angle(rng), snap.g_iota);
            let (phi_r, gp) = snap_to_grid(uniform_angle(rng), snap.g_phi);
            if bs_bins.contains(&bin) || ris_cells.contains(&(gi, gp)) {
                continue 'attempt;
            }
            bs_bins.push(bin);
            ris_cells.push((gi, gp));
            paths.push(BsRisPath {
                gain: cn_scalar(var_b, rng),
                bs_elevation: iota_b,
                ris_elevation: iota_r,
                ris_azimuth: phi_r,
            });
        }
        return Ok(paths);
    }
    Err(ChannelError::GridCollision("BS-RIS"))
}

/// Assemble `E = B * Gamma * A^T`, its subarray prefixes, and the user
/// channels from sampled path parameters. Deterministic given `params`.
pub fn assemble_channels(
    params: &PathParams,
    geometry: &ArrayGeometry,
) -> Result<ChannelRealization, ChannelError> {
    geometry.validate()?;
    let m = geometry.m();
    let n = geometry.n();
    let l = params.bs_ris.len();

    let mut b_full = CMat::zeros(m, l);
    let mut a = CMat::zeros(n, l);
    let mut gamma = CMat::zeros(l, l);
    for (idx, path) in params.bs_ris.iter().enumerate() {
        let b = steering_bs(path.bs_elevation, m, geometry.d_over_lambda)?;
        let av = steering_ris(
            path.ris_elevation,
            path.ris_azimuth,
            geometry.n1,
            geometry.n2,
            geometry.d_over_lambda,
        )?;
        b_full.set_column(idx, &b);
        a.set_column(idx, &av);
        gamma[(idx, idx)] = path.gain;
    }
    let e = &b_full * &gamma * a.transpose();
    let e_r = e.rows(0, geometry.m_r).into_owned();
    let e_t = e.rows(0, geometry.m_t).into_owned();

    let mut h_users = Vec::with_capacity(params.users.len());
    for paths in &params.users {
        let mut h = CVec::zeros(n);
        for p in paths {
            let av = steering_ris(
                p.elevation,
                p.azimuth,
                geometry.n1,
                geometry.n2,
                geometry.d_over_lambda,
            )?;
            h += av * p.gain;
        }
        h_users.push(h);
    }

    Ok(ChannelRealization {
        e,
        e_r,
        e_t,
        h_users,
        params: params.clone(),
        geometry: *geometry,
    })
}

/// Cascaded BS-RIS-user channel `H_k = kron(h_k^T, E)`, shape `m x n^2`,
/// acting on `vec(Theta)`.
pub fn cascaded_channel(h_k: &CVec, e: &CMat) -> CMat {
    let row = CMat::from_fn(1, h_k.len(), |_, j| h_k[j]);
    kron(&row, e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{frob, vec_of};
    use crate::scattering::random_unitary;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn steering_bs_broadside_is_all_ones() {
        let v = steering_bs(PI / 2.0, 4, 0.5).unwrap();
        for e in v.iter() {
            assert!((e - C64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn steering_bs_endfire_alternates() {
        let v = steering_bs(0.0, 4, 0.5).unwrap();
        let expect = [1.0, -1.0, 1.0, -1.0];
        for (e, x) in v.iter().zip(expect) {
            assert!((e - C64::new(x, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn steering_bs_matches_scalar_loop_oracle() {
        let iota = PI / 3.0;
        let v = steering_bs(iota, 8, 0.5).unwrap();
        for m in 0..8 {
            let phase = -2.0 * PI * 0.5 * iota.cos() * m as f64;
            assert!((v[m] - C64::new(phase.cos(), phase.sin())).norm() < 1e-12);
        }
    }

    #[test]
    fn steering_rejects_out_of_range_angles() {
        assert!(steering_bs(-0.1, 4, 0.5).is_err());
        assert!(steering_bs(PI + 0.1, 4, 0.5).is_err());
        assert!(steering_ris(0.1, 4.0, 2, 2, 0.5).is_err());
    }

    #[test]
    fn steering_ris_degenerate_factors() {
        // iota = 0 zeroes the n2 spatial frequency: n2 factor all ones.
        let v = steering_ris(0.0, 1.0, 2, 3, 0.5).unwrap();
        for blk in 0..2 {
            let first = v[blk * 3];
            for i in 0..3 {
                assert!((v[blk * 3 + i] - first).norm() < 1e-12);
            }
        }
        // phi = 0 zeroes the n1 frequency: n1 factor all ones.
        let v = steering_ris(1.0, 0.0, 3, 2, 0.5).unwrap();
        for i in 0..2 {
            for blk in 1..3 {
                assert!((v[blk * 2 + i] - v[i]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn steering_ris_matches_elementwise_oracle() {
        let (iota, phi) = (PI / 4.0, PI / 3.0);
        let v = steering_ris(iota, phi, 2, 2, 0.5).unwrap();
        let f1 = 0.5 * phi.sin() * iota.cos();
        let f2 = 0.5 * iota.sin();
        for i1 in 0..2 {
            for i2 in 0..2 {
                let phase = -2.0 * PI * (f1 * i1 as f64 + f2 * i2 as f64);
                let expect = C64::new(phase.cos(), phase.sin());
                assert!((v[i1 * 2 + i2] - expect).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn steering_vectors_unit_modulus() {
        let mut r = rng(5);
        for _ in 0..20 {
            let iota = uniform_angle(&mut r);
            let phi = uniform_angle(&mut r);
            for e in steering_bs(iota, 6, 0.5).unwrap().iter() {
                assert!((e.norm() - 1.0).abs() < 1e-12);
            }
            for e in steering_ris(iota, phi, 3, 2, 0.5).unwrap().iter() {
                assert!((e.norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn path_loss_hand_evaluations() {
        let mut r = rng(1);
        let pl10 = path_loss_db(28.0, 10.0, 2.2, 0.0, &mut r).unwrap();
        assert!((pl10 - 83.34).abs() < 0.01, "got {pl10}");
        let pl50 = path_loss_db(28.0, 50.0, 2.2, 0.0, &mut r).unwrap();
        assert!((pl50 - 98.72).abs() < 0.01, "got {pl50}");
        // A 10x distance increase adds exactly 10*beta dB without shadowing.
        let pl100 = path_loss_db(28.0, 100.0, 2.2, 0.0, &mut r).unwrap();
        assert!((pl100 - pl10 - 22.0).abs() < 1e-9);
        assert!(path_loss_db(28.0, 0.0, 2.2, 0.0, &mut r).is_err());
        assert!(path_loss_db(-1.0, 10.0, 2.2, 0.0, &mut r).is_err());
    }

    fn test_scenario() -> Scenario {
        Scenario {
            geometry: ArrayGeometry::new(8, 8, 4, 4).unwrap(),
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
        }
    }

    #[test]
    fn sample_paths_deterministic_per_seed() {
        let scenario = test_scenario();
        let a = sample_paths(&scenario, &mut rng(77)).unwrap();
        let b = sample_paths(&scenario, &mut rng(77)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sampled_angles_uniform_mean() {
        let mut scenario = test_scenario();
        scenario.bs_ris_paths = 1;
        scenario.users = 1;
        scenario.user_paths = 1;
        let mut r = rng(13);
        let n = 10_000;
        let mean: f64 = (0..n)
            .map(|_| sample_paths(&scenario, &mut r).unwrap().bs_ris[0].bs_elevation)
            .sum::<f64>()
            / n as f64;
        // Uniform(0,pi) mean pi/2, sigma_mean = pi/sqrt(12 n).
        let three_sigma = 3.0 * PI / (12.0 * n as f64).sqrt();
        assert!(
            (mean - PI / 2.0).abs() < three_sigma,
            "mean {mean} outside 3 sigma {three_sigma}"
        );
    }

    #[test]
    fn gain_variance_matches_path_loss() {
        let scenario = test_scenario();
        let mut r = rng(29);
        let pl = 32.4 + 20.0 * 28f64.log10() + 22.0 * 10f64.log10();
        let expect = 10f64.powf(-pl / 10.0);
        let n = 10_000;
        let reps = n / scenario.bs_ris_paths;
        let mut acc = 0.0;
        for _ in 0..reps {
            let p = sample_paths(&scenario, &mut r).unwrap();
            acc += p.bs_ris.iter().map(|x| x.gain.norm_sqr()).sum::<f64>();
        }
        let mean = acc / (reps * scenario.bs_ris_paths) as f64;
        assert!(
            (mean / expect - 1.0).abs() < 0.05,
            "E|alpha|^2 {mean:.3e} vs {expect:.3e}"
        );
    }

    #[test]
    fn assemble_single_path_is_rank_one_outer_product() {
        let geometry = ArrayGeometry::new(4, 4, 2, 2).unwrap();
        let params = PathParams {
            bs_ris: vec![BsRisPath {
                gain: C64::new(1.0, 0.0),
                bs_elevation: 1.1,
                ris_elevation: 0.7,
                ris_azimuth: 2.0,
            }],
            users: vec![],
        };
        let ch = assemble_channels(&params, &geometry).unwrap();
        let b = steering_bs(1.1, 8, 0.5).unwrap();
        let a = steering_ris(0.7, 2.0, 2, 2, 0.5).unwrap();
        let outer = CMat::from_fn(8, 4, |i, j| b[i] * a[j]);
        assert!(frob(&(&ch.e - outer)) < 1e-12);
        let svals = crate::numerics::svd(&ch.e).singular_values;
        assert!(svals[1] < 1e-10 * svals[0], "rank exceeds 1");
    }

    #[test]
    fn subarray_channels_are_row_prefixes() {
        let geometry = ArrayGeometry::new(5, 3, 2, 3).unwrap();
        let params = sample_paths(
            &Scenario {
                geometry,
                ..test_scenario()
            },
            &mut rng(3),
        )
        .unwrap();
        let ch = assemble_channels(&params, &geometry).unwrap();
        assert!(frob(&(&ch.e_r - ch.e.rows(0, 5).into_owned())) < 1e-14);
        assert!(frob(&(&ch.e_t - ch.e.rows(0, 3).into_owned())) < 1e-14);
    }

    #[test]
    fn assemble_matches_factor_oracle() {
        let geometry = ArrayGeometry::new(6, 4, 3, 2).unwrap();
        let scenario = Scenario {
            geometry,
            ..test_scenario()
        };
        let params = sample_paths(&scenario, &mut rng(9)).unwrap();
        let ch = assemble_channels(&params, &geometry).unwrap();
        // Factor-and-multiply oracle: per-path outer products summed.
        let mut e = CMat::zeros(10, 6);
        for p in &params.bs_ris {
            let b = steering_bs(p.bs_elevation, 10, 0.5).unwrap();
            let a = steering_ris(p.ris_elevation, p.ris_azimuth, 3, 2, 0.5).unwrap();
            e += CMat::from_fn(10, 6, |i, j| p.gain * b[i] * a[j]);
        }
        assert!(frob(&(&ch.e - e)) < 1e-12);
    }

    #[test]
    fn cascaded_channel_basis_vector_places_e_in_first_block() {
        let geometry = ArrayGeometry::new(3, 2, 2, 2).unwrap();
        let params = sample_paths(
            &Scenario {
                geometry,
                ..test_scenario()
            },
            &mut rng(15),
        )
        .unwrap();
        let ch = assemble_channels(&params, &geometry).unwrap();
        let mut h = CVec::zeros(4);
        h[0] = C64::new(1.0, 0.0);
        let big = cascaded_channel(&h, &ch.e);
        assert_eq!(big.shape(), (5, 16));
        assert!(frob(&(big.columns(0, 4).into_owned() - &ch.e)) < 1e-14);
        assert!(frob(&big.columns(4, 12).into_owned()) < 1e-14);
    }

    #[test]
    fn cascaded_channel_norm_identity() {
        let geometry = ArrayGeometry::new(3, 2, 2, 2).unwrap();
        let scenario = Scenario {
            geometry,
            ..test_scenario()
        };
        let params = sample_paths(&scenario, &mut rng(21)).unwrap();
        let ch = assemble_channels(&params, &geometry).unwrap();
        let h = &ch.h_users[0];
        let big = cascaded_channel(h, &ch.e);
        let hn = h.iter().map(|e| e.norm_sqr()).sum::<f64>().sqrt();
        assert!((frob(&big) - hn * frob(&ch.e)).abs() < 1e-10);
    }

    #[test]
    fn cascaded_channel_acts_on_vec_theta() {
        // E*Theta*h == kron(h^T, E)*vec(Theta) for 100 random unitary Theta.
        let geometry = ArrayGeometry::new(3, 2, 2, 2).unwrap();
        let scenario = Scenario {
            geometry,
            ..test_scenario()
        };
        let params = sample_paths(&scenario, &mut rng(33)).unwrap();
        let ch = assemble_channels(&params, &geometry).unwrap();
        let h = &ch.h_users[0];
        let big = cascaded_channel(h, &ch.e);
        let mut r = rng(34);
        for _ in 0..100 {
            let theta = random_unitary(4, &mut r);
            let lhs = &ch.e * &theta * h;
            let rhs = &big * vec_of(&theta);
            let diff = (lhs - rhs).iter().map(|e| e.norm()).fold(0.0, f64::max);
            assert!(diff < 1e-10);
        }
    }

    #[test]
    fn on_grid_snapping_lands_on_bins_and_grid() {
        let mut scenario = test_scenario();
        scenario.on_grid = Some(GridSnap {
            g_iota: 60,
            g_phi: 60,
        });
        let g = scenario.geometry;
        let params = sample_paths(&scenario, &mut rng(91)).unwrap();
        let mut bins = Vec::new();
        for p in &params.bs_ris {
            let f = g.d_over_lambda * p.bs_elevation.cos();
            let scaled = f * g.m_r as f64;
            assert!(
                (scaled - scaled.round()).abs() < 1e-9,
                "cos not on a beamspace bin"
            );
            bins.push(scaled.round() as i64);
            let step = PI / 59.0;
            assert!((p.ris_elevation / step - (p.ris_elevation / step).round()).abs() < 1e-9);
            assert!((p.ris_azimuth / step - (p.ris_azimuth / step).round()).abs() < 1e-9);
        }
        bins.sort_unstable();
        bins.dedup();
        assert_eq!(bins.len(), params.bs_ris.len(), "BS bins not distinct");
    }
}
