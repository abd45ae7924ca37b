//! Full-duplex BS-RIS channel estimation (step 1 of the individual
//! estimation framework).
//!
//! The bistatic BS sounds the RIS with an orthogonal pilot matrix from its
//! transmit subarray and receives the reflections on its receive subarray,
//! one fixed scattering matrix per subframe. Estimation proceeds in stages:
//!
//! 1. Pilot decorrelation `Z_b = Y_b S^H`.
//! 2. DFT beamspace projection of the stacked blocks; the receive-side
//!    steering concentrates path power in a few rows, giving coarse BS
//!    elevation bins.
//! 3. Angular-rotation refinement: a diagonal phase ramp shifts the bin
//!    grid by `nu` in `[-1/(2 M_R), 1/(2 M_R)]`; a grid search over `nu`
//!    aligns the bin with the off-grid spatial frequency.
//! 4. Projection onto the detected path domain via steering pseudo-inverses
//!    turns each block into `sqrt(P) * Gamma A^T Theta_b A Gamma`.
//! 5. RIS elevation/azimuth pairs by normalized-correlation search of the
//!    diagonal sequences against a `(iota, phi)` dictionary, using
//!    `a^T Theta a' = vec(Theta)^T (a' kron a)` under column-major vec.
//! 6. Pairwise gain products by per-entry LS, then a rank-1 resolution of
//!    the gain vector from the symmetrized product matrix; the global sign
//!    stays ambiguous and cancels in the cascaded channel.

use crate::channel::{steering_bs, steering_ris, ArrayGeometry, ChannelRealization};
use crate::numerics::{dft_matrix, pinv, svd, CMat, CVec, C64};
use crate::scattering::ScatteringSchedule;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Stage1Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("all beamspace row powers sit at the numerical floor")]
    ZeroSignal,
    #[error("flat correlation objective (best {best:.3e}): upstream estimates unusable")]
    FlatObjective { best: f64 },
    #[error("reconstructed steering matrix is rank deficient")]
    RankDeficientSteering,
    #[error("numerical floor reached in {0}")]
    NumericalFloor(&'static str),
}

/// Stage-1 estimator configuration.
#[derive(Debug, Clone)]
pub struct FdStage1Config {
    pub geometry: ArrayGeometry,
    /// Subframe count `B`.
    pub subframes: usize,
    /// Slots per subframe `T` (pilot matrix width).
    pub slots_per_subframe: usize,
    /// Transmit power in watts.
    pub power_w: f64,
    /// Effective noise variance in watts (AWGN plus residual
    /// self-interference, folded into one figure).
    pub noise_w: f64,
    /// Grid sizes of the `(iota, phi)` correlation search over [0, pi].
    pub g_iota: usize,
    pub g_phi: usize,
    /// Rotation-search step.
    pub epsilon: f64,
    /// Peak-detection threshold in (0, 1): keep local maxima whose row
    /// power reaches `rho * max`.
    pub rho: f64,
    /// Fixed path count; `None` enables threshold detection.
    pub known_paths: Option<usize>,
}

impl FdStage1Config {
    /// Defaults sized for the sparse-recovery pilot budget:
    /// `B = max(ceil(log2 M), ceil(log2 N^2))`, `T = max(M_T, L)`,
    /// `epsilon = 1/(16 M_R)`, 180-point angle grids, `rho = 0.2`.
    pub fn defaults(geometry: ArrayGeometry, bs_ris_paths: usize) -> Self {
        let m = geometry.m() as f64;
        let n2 = (geometry.n() * geometry.n()) as f64;
        let subframes = (m.log2().ceil() as usize).max(n2.log2().ceil() as usize).max(1);
        Self {
            geometry,
            subframes,
            slots_per_subframe: geometry.m_t.max(bs_ris_paths),
            power_w: 1.0,
            noise_w: 0.0,
            g_iota: 180,
            g_phi: 180,
            epsilon: 1.0 / (16.0 * geometry.m_r as f64),
            rho: 0.2,
            known_paths: None,
        }
    }

    pub fn validate(&self) -> Result<(), Stage1Error> {
        if self.geometry.m_r < 2 {
            return Err(Stage1Error::Config("m_r must be at least 2".into()));
        }
        if self.slots_per_subframe < self.geometry.m_t {
            return Err(Stage1Error::Config(format!(
                "T = {} below m_t = {}: pilot decorrelation needs T >= m_t",
                self.slots_per_subframe, self.geometry.m_t
            )));
        }
        if self.subframes == 0 {
            return Err(Stage1Error::Config("subframe count must be positive".into()));
        }
        if !(0.0 < self.rho && self.rho < 1.0) {
            return Err(Stage1Error::Config(format!("rho {} outside (0,1)", self.rho)));
        }
        // The default step is 1/(16 m_r); anything up to the half-range
        // 1/(2 m_r) still yields a valid (if coarse) rotation grid.
        let max_eps = 1.0 / (2.0 * self.geometry.m_r as f64);
        if self.epsilon <= 0.0 || self.epsilon > max_eps + 1e-15 {
            return Err(Stage1Error::Config(format!(
                "epsilon {} outside (0, {max_eps}]",
                self.epsilon
            )));
        }
        if self.g_iota < 2 || self.g_phi < 2 {
            return Err(Stage1Error::Config("angle grids need at least 2 points".into()));
        }
        Ok(())
    }
}

/// Orthogonal pilot matrix `S` (`m_t x t`): the first `m_t` rows of the
/// `t`-point DFT matrix, so `S S^H = I` exactly. Needs `t >= m_t`.
pub fn pilot_matrix(m_t: usize, t: usize) -> Result<CMat, Stage1Error> {
    if t < m_t {
        return Err(Stage1Error::Config(format!(
            "pilot width {t} below transmit subarray size {m_t}"
        )));
    }
    let u = dft_matrix(t).map_err(|e| Stage1Error::Config(e.to_string()))?;
    Ok(u.rows(0, m_t).into_owned())
}

/// Per-subframe full-duplex reception:
/// `Y_b = sqrt(P) * E_R Theta_b E_T^T S + N_b`, each `m_r x t`.
pub fn simulate_fd_rx<R: Rng + ?Sized>(
    ch: &ChannelRealization,
    schedule: &ScatteringSchedule,
    cfg: &FdStage1Config,
    rng: &mut R,
) -> Result<Vec<CMat>, Stage1Error> {
    cfg.validate()?;
    if schedule.len() != cfg.subframes {
        return Err(Stage1Error::DimensionMismatch(format!(
            "schedule has {} subframes, config says {}",
            schedule.len(),
            cfg.subframes
        )));
    }
    if schedule.n() != ch.e.ncols() {
        return Err(Stage1Error::DimensionMismatch(format!(
            "schedule is for n = {}, channel has n = {}",
            schedule.n(),
            ch.e.ncols()
        )));
    }
    let s = pilot_matrix(cfg.geometry.m_t, cfg.slots_per_subframe)?;
    let sqrt_p = C64::new(cfg.power_w.sqrt(), 0.0);
    let mut blocks = Vec::with_capacity(cfg.subframes);
    for theta in schedule.matrices() {
        let mut y = (&ch.e_r * theta * ch.e_t.transpose()) * &s * sqrt_p;
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

/// Pilot decorrelation: `Z_b = Y_b S^H = sqrt(P) E_R Theta_b E_T^T + noise`.
/// The rows of `S` are orthonormal, so the per-entry noise variance is
/// preserved.
pub fn decorrelate_pilots(received: &[CMat], s: &CMat) -> Result<Vec<CMat>, Stage1Error> {
    let sh = s.adjoint();
    received
        .iter()
        .map(|y| {
            if y.ncols() != s.ncols() {
                return Err(Stage1Error::DimensionMismatch(format!(
                    "block has {} slots, pilot matrix {}",
                    y.ncols(),
                    s.ncols()
                )));
            }
            Ok(y * &sh)
        })
        .collect()
}

/// Coarse BS-elevation detection result.
#[derive(Debug, Clone)]
pub struct Detection {
    /// Zero-based beamspace bins, strongest first.
    pub bins: Vec<usize>,
    /// Beamspace row powers (diagnostic).
    pub row_power: Vec<f64>,
}

fn stack_blocks(blocks: &[CMat]) -> Result<CMat, Stage1Error> {
    let rows = blocks
        .first()
        .ok_or_else(|| Stage1Error::DimensionMismatch("no blocks".into()))?
        .nrows();
    let cols: usize = blocks.iter().map(|z| z.ncols()).sum();
    let mut out = CMat::zeros(rows, cols);
    let mut at = 0;
    for z in blocks {
        if z.nrows() != rows {
            return Err(Stage1Error::DimensionMismatch("ragged block heights".into()));
        }
        out.view_mut((0, at), (rows, z.ncols())).copy_from(z);
        at += z.ncols();
    }
    Ok(out)
}

/// Project stacked blocks into DFT beamspace and pick elevation bins from
/// the row-power profile: circular local maxima at or above `rho * max`,
/// strongest first. With `known_paths` set, exactly that many bins are
/// returned (padded by strongest remaining rows if maxima run short).
pub fn detect_bs_elevations(
    blocks: &[CMat],
    cfg: &FdStage1Config,
) -> Result<Detection, Stage1Error> {
    let z = stack_blocks(blocks)?;
    let m_r = z.nrows();
    let u = dft_matrix(m_r).map_err(|e| Stage1Error::Config(e.to_string()))?;
    let beam = u.adjoint() * &z;
    let row_power: Vec<f64> = (0..m_r)
        .map(|m| beam.row(m).iter().map(|e| e.norm_sqr()).sum())
        .collect();

    let max_p = row_power.iter().cloned().fold(0.0, f64::max);
    if max_p <= f64::MIN_POSITIVE * 1e16 {
        return Err(Stage1Error::ZeroSignal);
    }

    let is_peak = |m: usize| {
        let prev = row_power[(m + m_r - 1) % m_r];
        let next = row_power[(m + 1) % m_r];
        row_power[m] >= prev && row_power[m] >= next
    };
    let mut candidates: Vec<usize> = (0..m_r)
        .filter(|&m| is_peak(m) && row_power[m] >= cfg.rho * max_p)
        .collect();
    candidates.sort_by(|&a, &b| {
        row_power[b]
            .partial_cmp(&row_power[a])
            .unwrap()
            .then(a.cmp(&b))
    });

    if let Some(l) = cfg.known_paths {
        if candidates.len() > l {
            candidates.truncate(l);
        } else if candidates.len() < l {
            let mut rest: Vec<usize> = (0..m_r).filter(|m| !candidates.contains(m)).collect();
            rest.sort_by(|&a, &b| {
                row_power[b]
                    .partial_cmp(&row_power[a])
                    .unwrap()
                    .then(a.cmp(&b))
            });
            candidates.extend(rest.into_iter().take(l - candidates.len()));
        }
    }
    if candidates.is_empty() {
        return Err(Stage1Error::ZeroSignal);
    }
    Ok(Detection {
        bins: candidates,
        row_power,
    })
}

/// One refined elevation estimate.
#[derive(Debug, Clone)]
pub struct Refinement {
    /// Best rotation coefficient.
    pub nu: f64,
    /// Refined elevation in radians.
    pub iota: f64,
    /// True when the best `nu` sat on the search boundary, which usually
    /// means the coarse bin straddles the true spatial frequency.
    pub boundary: bool,
    /// `(nu, objective)` trace of the search (diagnostic).
    pub trace: Vec<(f64, f64)>,
}

/// Map a beamspace bin and rotation to an elevation via the two-branch
/// arccos; the branch test is `bin / m_r <= d_over_lambda`.
fn bin_to_elevation(bin: usize, nu: f64, m_r: usize, d_over_lambda: f64) -> f64 {
    let frac = bin as f64 / m_r as f64;
    let shifted = if frac <= d_over_lambda {
        frac - nu
    } else {
        frac - 1.0 - nu
    };
    (shifted / d_over_lambda).clamp(-1.0, 1.0).acos()
}

/// Rotation-refined elevation estimate for one detected bin: grid-search
/// `nu` over `[-1/(2 m_r), 1/(2 m_r)]` in steps of `cfg.epsilon`,
/// maximizing the power of beamspace row `bin` of the rotated stack.
/// Ties break toward the smallest grid index.
pub fn refine_elevation(
    blocks: &[CMat],
    bin: usize,
    cfg: &FdStage1Config,
) -> Result<Refinement, Stage1Error> {
    let z = stack_blocks(blocks)?;
    let m_r = z.nrows();
    if bin >= m_r {
        return Err(Stage1Error::DimensionMismatch(format!(
            "bin {bin} outside 0..{m_r}"
        )));
    }
    let half = 1.0 / (2.0 * m_r as f64);
    let steps = ((2.0 * half) / cfg.epsilon).round() as usize;
    let mut best = (0usize, f64::NEG_INFINITY);
    let mut trace = Vec::with_capacity(steps + 1);
    for i in 0..=steps {
        let nu = -half + i as f64 * cfg.epsilon;
        // Row `bin` of U^H Lambda(nu)^H Z is (Lambda(nu) u_bin)^H Z.
        let scale = 1.0 / (m_r as f64).sqrt();
        let probe = CVec::from_fn(m_r, |mx, _| {
            let phase =
                2.0 * std::f64::consts::PI * (mx as f64) * (bin as f64 / m_r as f64 - nu);
            C64::from_polar(scale, phase)
        });
        // probe[mx] = conj(Lambda[mx] * u_bin[mx]); row = probe^T Z.
        let mut obj = 0.0;
        for c in 0..z.ncols() {
            let mut acc = C64::new(0.0, 0.0);
            for mx in 0..m_r {
                acc += probe[mx] * z[(mx, c)];
            }
            obj += acc.norm_sqr();
        }
        trace.push((nu, obj));
        if obj > best.1 {
            best = (i, obj);
        }
    }
    let nu = -half + best.0 as f64 * cfg.epsilon;
    Ok(Refinement {
        nu,
        iota: bin_to_elevation(bin, nu, m_r, cfg.geometry.d_over_lambda),
        boundary: best.0 == 0 || best.0 == steps,
        trace,
    })
}

/// Truncated steering matrices at the refined elevations:
/// `B_R` is `m_r x L`, `B_T` is `m_t x L`, both with local index origin 0.
pub fn reconstruct_subarray_steering(
    iotas: &[f64],
    geometry: &ArrayGeometry,
) -> Result<(CMat, CMat), Stage1Error> {
    if iotas.is_empty() {
        return Err(Stage1Error::DimensionMismatch("no elevations".into()));
    }
    let mut b_r = CMat::zeros(geometry.m_r, iotas.len());
    let mut b_t = CMat::zeros(geometry.m_t, iotas.len());
    for (idx, &iota) in iotas.iter().enumerate() {
        let vr = steering_bs(iota, geometry.m_r, geometry.d_over_lambda)
            .map_err(|e| Stage1Error::Config(e.to_string()))?;
        let vt = steering_bs(iota, geometry.m_t, geometry.d_over_lambda)
            .map_err(|e| Stage1Error::Config(e.to_string()))?;
        b_r.set_column(idx, &vr);
        b_t.set_column(idx, &vt);
    }
    Ok((b_r, b_t))
}

/// Project decorrelated blocks onto the detected path domain:
/// `Ytilde_b = pinv(B_R) Z_b pinv(B_T^T)`, approximating
/// `sqrt(P) * Gamma A^T Theta_b A Gamma` (each `L x L`).
pub fn project_to_path_domain(
    blocks: &[CMat],
    b_r_hat: &CMat,
    b_t_hat: &CMat,
) -> Result<Vec<CMat>, Stage1Error> {
    let l = b_r_hat.ncols();
    for m in [b_r_hat, b_t_hat] {
        let s = svd(m).singular_values;
        if s.is_empty() || s[s.len() - 1] <= 1e-10 * s[0] {
            return Err(Stage1Error::RankDeficientSteering);
        }
    }
    let left = pinv(b_r_hat, None);
    let right = pinv(&b_t_hat.transpose(), None);
    blocks
        .iter()
        .map(|z| {
            if z.nrows() != b_r_hat.nrows() || z.ncols() != b_t_hat.nrows() {
                return Err(Stage1Error::DimensionMismatch(format!(
                    "block {}x{} incompatible with steering {}x{} / {}x{}",
                    z.nrows(),
                    z.ncols(),
                    b_r_hat.nrows(),
                    l,
                    b_t_hat.nrows(),
                    l
                )));
            }
            Ok(&left * z * &right)
        })
        .collect()
}

/// Precomputed `(iota, phi)` search dictionary: every pair on the inclusive
/// `g_iota x g_phi` grid over [0, pi] and its RIS steering vector.
/// Reusable across trials that share a geometry.
#[derive(Debug, Clone)]
pub struct RisAngleGrid {
    pub iotas: Vec<f64>,
    pub phis: Vec<f64>,
    /// `n x (g_iota * g_phi)`; column `i * g_phi + j` is `a(iota_i, phi_j)`.
    pub vectors: CMat,
}

impl RisAngleGrid {
    pub fn new(geometry: &ArrayGeometry, g_iota: usize, g_phi: usize) -> Self {
        let lin = |g: usize| -> Vec<f64> {
            (0..g)
                .map(|i| std::f64::consts::PI * i as f64 / (g - 1) as f64)
                .collect()
        };
        let iotas = lin(g_iota);
        let phis = lin(g_phi);
        let n = geometry.n();
        let mut vectors = CMat::zeros(n, g_iota * g_phi);
        for (i, &iota) in iotas.iter().enumerate() {
            for (j, &phi) in phis.iter().enumerate() {
                let a = steering_ris(iota, phi, geometry.n1, geometry.n2, geometry.d_over_lambda)
                    .expect("grid angles in range");
                vectors.set_column(i * phis.len() + j, &a);
            }
        }
        Self { iotas, phis, vectors }
    }

    pub fn len(&self) -> usize {
        self.iotas.len() * self.phis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Angle pair of dictionary column `g`.
    pub fn pair(&self, g: usize) -> (f64, f64) {
        (self.iotas[g / self.phis.len()], self.phis[g % self.phis.len()])
    }
}

/// Dictionary of diagonal responses `c[g, b] = a_g^T Theta_b a_g`. This is
/// exactly `Phi * (a_g kron a_g)` per subframe under column-major vec, so
/// the correlation search never materializes the `B x N^2` row stack.
pub fn correlation_dictionary(schedule: &ScatteringSchedule, grid: &RisAngleGrid) -> CMat {
    let g_total = grid.len();
    let n = grid.vectors.nrows();
    let mut c = CMat::zeros(g_total, schedule.len());
    let chunk = 2048usize.min(g_total.max(1));
    for (bi, theta) in schedule.matrices().enumerate() {
        let mut start = 0;
        while start < g_total {
            let width = chunk.min(g_total - start);
            let w = &theta * grid.vectors.columns(start, width);
            for col in 0..width {
                let mut acc = C64::new(0.0, 0.0);
                for i in 0..n {
                    acc += grid.vectors[(i, start + col)] * w[(i, col)];
                }
                c[(start + col, bi)] = acc;
            }
            start += width;
        }
    }
    c
}

/// Per-path RIS angle estimation: maximize the normalized correlation
/// between the diagonal sequence `q_m = [Ytilde_b[m,m]]_b` and the
/// dictionary response over all grid pairs. Ties break toward the smaller
/// grid index. Returns the pairs and their peak correlations.
pub fn estimate_ris_angles(
    path_blocks: &[CMat],
    dictionary: &CMat,
    grid: &RisAngleGrid,
) -> Result<(Vec<(f64, f64)>, Vec<f64>), Stage1Error> {
    let l = path_blocks
        .first()
        .ok_or_else(|| Stage1Error::DimensionMismatch("no blocks".into()))?
        .nrows();
    let b = path_blocks.len();
    if dictionary.ncols() != b {
        return Err(Stage1Error::DimensionMismatch(format!(
            "dictionary spans {} subframes, data {}",
            dictionary.ncols(),
            b
        )));
    }
    // Column norms of the dictionary rows (per grid point).
    let col_norm: Vec<f64> = (0..grid.len())
        .map(|g| dictionary.row(g).iter().map(|e| e.norm_sqr()).sum::<f64>().sqrt())
        .collect();

    let mut pairs = Vec::with_capacity(l);
    let mut peaks = Vec::with_capacity(l);
    for m in 0..l {
        let q: Vec<C64> = path_blocks.iter().map(|y| y[(m, m)]).collect();
        let qn = q.iter().map(|e| e.norm_sqr()).sum::<f64>().sqrt();
        let mut best = (0usize, -1.0f64);
        if qn > 0.0 {
            for g in 0..grid.len() {
                if col_norm[g] <= 0.0 {
                    continue;
                }
                let mut acc = C64::new(0.0, 0.0);
                for (bi, qb) in q.iter().enumerate() {
                    acc += qb.conj() * dictionary[(g, bi)];
                }
                let corr = acc.norm() / (qn * col_norm[g]);
                if corr > best.1 {
                    best = (g, corr);
                }
            }
        }
        if best.1 < 0.1 {
            return Err(Stage1Error::FlatObjective { best: best.1.max(0.0) });
        }
        pairs.push(grid.pair(best.0));
        peaks.push(best.1);
    }
    Ok((pairs, peaks))
}

/// Pairwise gain products: for every `(m, n)`,
/// `D[m,n] = pinv(sqrt(P) * g_mn) * q_mn` where
/// `g_mn[b] = a_m^T Theta_b a_n` at the diagonal-estimated angle pairs and
/// `q_mn` collects entry `(m, n)` across subframes. The diagonal pairs
/// determine all angle vectors, so off-diagonal searches are unnecessary.
pub fn estimate_gain_products(
    path_blocks: &[CMat],
    schedule: &ScatteringSchedule,
    ris_pairs: &[(f64, f64)],
    power_w: f64,
    geometry: &ArrayGeometry,
) -> Result<CMat, Stage1Error> {
    let l = ris_pairs.len();
    let b = path_blocks.len();
    if schedule.len() != b {
        return Err(Stage1Error::DimensionMismatch(
            "schedule and block counts differ".into(),
        ));
    }
    let vectors: Vec<CVec> = ris_pairs
        .iter()
        .map(|&(iota, phi)| {
            steering_ris(iota, phi, geometry.n1, geometry.n2, geometry.d_over_lambda)
                .map_err(|e| Stage1Error::Config(e.to_string()))
        })
        .collect::<Result<_, _>>()?;

    // theta_applied[b][n] = Theta_b * a_n, shared across row indices.
    let applied: Vec<Vec<CVec>> = schedule
        .matrices()
        .map(|theta| vectors.iter().map(|a| &theta * a).collect())
        .collect();

    let sqrt_p = power_w.sqrt();
    let mut d = CMat::zeros(l, l);
    for m in 0..l {
        for n in 0..l {
            let mut num = C64::new(0.0, 0.0);
            let mut den = 0.0;
            for (bi, block) in path_blocks.iter().enumerate() {
                let g_b = vectors[m].dot(&applied[bi][n]) * C64::new(sqrt_p, 0.0);
                num += g_b.conj() * block[(m, n)];
                den += g_b.norm_sqr();
            }
            if den <= f64::MIN_POSITIVE * 1e16 {
                return Err(Stage1Error::NumericalFloor("gain-product projection"));
            }
            d[(m, n)] = num / C64::new(den, 0.0);
        }
    }
    Ok(d)
}

/// Resolve the gain vector from the product matrix `D ~ alpha alpha^T`.
///
/// Symmetrizes, takes the dominant singular pair, and fixes the vector's
/// quadratic phase so that `alpha alpha^T` reproduces the symmetrized
/// matrix. The output is determined up to a global sign, matching the
/// product data; the sign cancels in the cascaded channel.
pub fn resolve_gains_svd(d_hat: &CMat) -> Result<CVec, Stage1Error> {
    let l = d_hat.nrows();
    if d_hat.ncols() != l {
        return Err(Stage1Error::DimensionMismatch("gain matrix not square".into()));
    }
    let sym = (d_hat + d_hat.transpose()) * C64::new(0.5, 0.0);
    let dec = svd(&sym);
    let sigma = dec.singular_values[0];
    if sigma <= f64::MIN_POSITIVE * 1e16 {
        return Err(Stage1Error::NumericalFloor("gain singular value"));
    }
    let u1 = dec.u.column(0).into_owned();
    // Quadratic phase of the rank-1 fit: sym ~ e^(2j psi) sigma u1 u1^T.
    let u1_conj = u1.map(|e| e.conj());
    let c = u1.adjoint() * &sym * &u1_conj;
    let psi = 0.5 * c[(0, 0)].arg();
    let scale = C64::from_polar(sigma.sqrt(), psi);
    Ok(u1 * scale)
}

/// Assemble `E = B Gamma A^T` with full-length (`m`) BS steering columns.
pub fn reconstruct_e(
    iotas: &[f64],
    ris_pairs: &[(f64, f64)],
    gains: &CVec,
    geometry: &ArrayGeometry,
) -> Result<CMat, Stage1Error> {
    let l = iotas.len();
    if ris_pairs.len() != l || gains.len() != l {
        return Err(Stage1Error::DimensionMismatch(
            "angle and gain counts differ".into(),
        ));
    }
    let m = geometry.m();
    let n = geometry.n();
    let mut e = CMat::zeros(m, n);
    for idx in 0..l {
        let b = steering_bs(iotas[idx], m, geometry.d_over_lambda)
            .map_err(|err| Stage1Error::Config(err.to_string()))?;
        let (iota, phi) = ris_pairs[idx];
        let a = steering_ris(iota, phi, geometry.n1, geometry.n2, geometry.d_over_lambda)
            .map_err(|err| Stage1Error::Config(err.to_string()))?;
        let g = gains[idx];
        for j in 0..n {
            let aj = a[j] * g;
            for i in 0..m {
                e[(i, j)] += b[i] * aj;
            }
        }
    }
    Ok(e)
}

/// Diagnostics carried alongside the stage-1 estimate.
#[derive(Debug, Clone)]
pub struct Stage1Diagnostics {
    pub row_power: Vec<f64>,
    /// Per-path `(nu, objective)` refinement traces.
    pub refinement_traces: Vec<Vec<(f64, f64)>>,
    /// Paths whose rotation search peaked on the boundary.
    pub boundary_paths: Vec<usize>,
    /// Peak normalized correlations of the RIS angle search.
    pub peak_correlations: Vec<f64>,
}

/// Stage-1 output: detected path parameters and the reconstructed channel.
#[derive(Debug, Clone)]
pub struct Stage1Result {
    pub bs_elevations: Vec<f64>,
    pub ris_angles: Vec<(f64, f64)>,
    /// Estimated gains; the global sign is ambiguous as a set.
    pub gains: CVec,
    /// Reconstructed `m x n` BS-RIS channel `B Gamma A^T`.
    pub e_hat: CMat,
    pub diagnostics: Stage1Diagnostics,
}

impl Stage1Result {
    pub fn detected_paths(&self) -> usize {
        self.bs_elevations.len()
    }
}

/// Run the whole stage-1 pipeline on raw subframe receptions.
///
/// `grid` may be shared across calls with the same geometry and grid sizes.
pub fn estimate_bs_ris(
    received: &[CMat],
    schedule: &ScatteringSchedule,
    cfg: &FdStage1Config,
    grid: &RisAngleGrid,
) -> Result<Stage1Result, Stage1Error> {
    cfg.validate()?;
    let s = pilot_matrix(cfg.geometry.m_t, cfg.slots_per_subframe)?;
    let blocks = decorrelate_pilots(received, &s)?;
    let detection = detect_bs_elevations(&blocks, cfg)?;

    let mut iotas = Vec::with_capacity(detection.bins.len());
    let mut traces = Vec::new();
    let mut boundary_paths = Vec::new();
    for (idx, &bin) in detection.bins.iter().enumerate() {
        let refined = refine_elevation(&blocks, bin, cfg)?;
        if refined.boundary {
            boundary_paths.push(idx);
        }
        iotas.push(refined.iota);
        traces.push(refined.trace);
    }

    let (b_r_hat, b_t_hat) = reconstruct_subarray_steering(&iotas, &cfg.geometry)?;
    let path_blocks = project_to_path_domain(&blocks, &b_r_hat, &b_t_hat)?;

    let dictionary = correlation_dictionary(schedule, grid);
    let (ris_pairs, peaks) = estimate_ris_angles(&path_blocks, &dictionary, grid)?;
    let d_hat = estimate_gain_products(
        &path_blocks,
        schedule,
        &ris_pairs,
        cfg.power_w,
        &cfg.geometry,
    )?;
    let gains = resolve_gains_svd(&d_hat)?;
    let e_hat = reconstruct_e(&iotas, &ris_pairs, &gains, &cfg.geometry)?;

    Ok(Stage1Result {
        bs_elevations: iotas,
        ris_angles: ris_pairs,
        gains,
        e_hat,
        diagnostics: Stage1Diagnostics {
            row_power: detection.row_power,
            refinement_traces: traces,
            boundary_paths,
            peak_correlations: peaks,
        },
    })
}
