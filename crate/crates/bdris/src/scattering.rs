//! Unitary scattering-matrix designs and per-stage schedules.
//!
//! The baseline cascaded estimator needs `N^2` unitary matrices whose
//! vectorizations are pairwise orthogonal, which makes its LS step a matched
//! filter. The clock-and-shift family `Theta_(p,q) = D^p * Pi^q` (with `D`
//! the diagonal of `N`-th roots of unity and `Pi` the cyclic shift)
//! satisfies both the per-matrix unitarity constraint of a fully-connected
//! RIS and that vectorization orthogonality: `trace(Theta_a^H Theta_b) =
//! N * delta_ab`. The two estimation stages of the individual estimator fix
//! one scattering matrix per subframe and only need generic unitaries, so
//! they draw seeded Haar-like random ones.
//!
//! Baseline schedules generate their matrices on demand: materializing all
//! `N^2` dense `N x N` matrices is memory-prohibitive already at `N = 64`.

use crate::numerics::{CMat, C64};
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScatteringError {
    #[error("{stage:?} schedule needs {expected} matrices, got {got}")]
    CountMismatch {
        stage: Stage,
        expected: usize,
        got: usize,
    },
    #[error("RIS size must be at least 1")]
    ZeroSize,
}

/// Which phase of the estimation protocol a schedule drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    /// Cascaded-LS baseline: `N^2` clock-and-shift matrices, one per block.
    Baseline,
    /// BS-RIS estimation subframes (full-duplex sounding).
    BsRis,
    /// RIS-user estimation subframes.
    RisUser,
}

/// An ordered sequence of `N x N` unitary scattering matrices, each held
/// for `slot_span` consecutive time slots.
#[derive(Debug, Clone)]
pub struct ScatteringSchedule {
    stage: Stage,
    n: usize,
    slot_span: usize,
    source: Source,
}

#[derive(Debug, Clone)]
enum Source {
    /// The full clock-and-shift family in `(p, q)` order, built on demand.
    ClockShift,
    Explicit(Vec<CMat>),
}

impl ScatteringSchedule {
    pub fn stage(&self) -> Stage {
        self.stage
    }

    /// RIS element count `N`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of matrices in the schedule.
    pub fn len(&self) -> usize {
        match &self.source {
            Source::ClockShift => self.n * self.n,
            Source::Explicit(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Time slots each matrix is held for.
    pub fn slot_span(&self) -> usize {
        self.slot_span
    }

    /// Total pilot slots the schedule occupies.
    pub fn total_slots(&self) -> usize {
        self.len() * self.slot_span
    }

    /// The `idx`-th scattering matrix.
    pub fn matrix(&self, idx: usize) -> CMat {
        match &self.source {
            Source::ClockShift => {
                let (p, q) = (idx / self.n, idx % self.n);
                clock_shift_matrix(self.n, p, q)
            }
            Source::Explicit(v) => v[idx].clone(),
        }
    }

    pub fn matrices(&self) -> impl Iterator<Item = CMat> + '_ {
        (0..self.len()).map(|i| self.matrix(i))
    }
}

/// Clock-and-shift matrix `D^p * Pi^q`: entry `(i, j)` is
/// `omega^(p*i)` when `i = (j + q) mod n` and zero otherwise,
/// `omega = exp(j*2*pi/n)`.
pub fn clock_shift_matrix(n: usize, p: usize, q: usize) -> CMat {
    let mut m = CMat::zeros(n, n);
    for j in 0..n {
        let i = (j + q) % n;
        let phase = 2.0 * PI * (p as f64) * (i as f64) / (n as f64);
        m[(i, j)] = C64::from_polar(1.0, phase);
    }
    m
}

/// The full clock-and-shift family of `n^2` unitary matrices in `(p, q)`
/// order (`p` outer, `q` inner). Materializes every matrix; intended for
/// small `n` — schedules generate members on demand instead.
pub fn weyl_heisenberg_basis(n: usize) -> Result<Vec<CMat>, ScatteringError> {
    if n == 0 {
        return Err(ScatteringError::ZeroSize);
    }
    let mut family = Vec::with_capacity(n * n);
    for p in 0..n {
        for q in 0..n {
            family.push(clock_shift_matrix(n, p, q));
        }
    }
    Ok(family)
}

/// Haar-like random unitary: QR of a complex Ginibre matrix with the phase
/// of `diag(R)` folded into `Q`.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    let g = CMat::from_fn(n, n, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for i in 0..n {
        let d = r[(i, i)];
        let phase = if d.norm() > 0.0 {
            d / C64::new(d.norm(), 0.0)
        } else {
            C64::new(1.0, 0.0)
        };
        for row in 0..n {
            q[(row, i)] *= phase;
        }
    }
    q
}

/// Build a stage schedule.
///
/// - `Baseline`: `count` must equal `n^2`; the clock-and-shift family in
///   fixed `(p, q)` order.
/// - `BsRis` / `RisUser`: `count` independent seeded random unitaries.
pub fn build_schedule<R: Rng + ?Sized>(
    stage: Stage,
    n: usize,
    count: usize,
    slot_span: usize,
    rng: &mut R,
) -> Result<ScatteringSchedule, ScatteringError> {
    if n == 0 {
        return Err(ScatteringError::ZeroSize);
    }
    match stage {
        Stage::Baseline => {
            if count != n * n {
                return Err(ScatteringError::CountMismatch {
                    stage,
                    expected: n * n,
                    got: count,
                });
            }
            Ok(ScatteringSchedule {
                stage,
                n,
                slot_span,
                source: Source::ClockShift,
            })
        }
        Stage::BsRis | Stage::RisUser => {
            if count == 0 {
                return Err(ScatteringError::CountMismatch {
                    stage,
                    expected: 1,
                    got: 0,
                });
            }
            let mats = (0..count).map(|_| random_unitary(n, rng)).collect();
            Ok(ScatteringSchedule {
                stage,
                n,
                slot_span,
                source: Source::Explicit(mats),
            })
        }
    }
}

/// Replace the matrices of an explicit schedule (used when a stage-2 draw
/// has to be re-taken for conditioning). Panics on a baseline schedule.
pub fn replace_matrices(schedule: &ScatteringSchedule, mats: Vec<CMat>) -> ScatteringSchedule {
    assert!(
        !matches!(schedule.source, Source::ClockShift),
        "baseline schedules are fixed"
    );
    ScatteringSchedule {
        stage: schedule.stage,
        n: schedule.n,
        slot_span: schedule.slot_span,
        source: Source::Explicit(mats),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{frob, vec_of};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn unitarity_defect(m: &CMat) -> f64 {
        let n = m.ncols();
        frob(&(m.adjoint() * m - CMat::identity(n, n)))
    }

    #[test]
    fn clock_shift_n1_is_one() {
        let fam = weyl_heisenberg_basis(1).unwrap();
        assert_eq!(fam.len(), 1);
        assert!((fam[0][(0, 0)] - C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn clock_shift_n2_family() {
        // (p, q) order gives {I, Pi, D, D*Pi} with D = diag(1, -1).
        let fam = weyl_heisenberg_basis(2).unwrap();
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let eye = CMat::identity(2, 2);
        let pi = CMat::from_row_slice(2, 2, &[zero, one, one, zero]);
        let d = CMat::from_row_slice(2, 2, &[one, zero, zero, -one]);
        assert!(frob(&(&fam[0] - &eye)) < 1e-12);
        assert!(frob(&(&fam[1] - &pi)) < 1e-12);
        assert!(frob(&(&fam[2] - &d)) < 1e-12);
        assert!(frob(&(&fam[3] - &d * &pi)) < 1e-12);

        // 4x4 Gram oracle over the vectorizations.
        for (i, a) in fam.iter().enumerate() {
            for (j, b) in fam.iter().enumerate() {
                let g = vec_of(a).dotc(&vec_of(b));
                let expect = if i == j { 2.0 } else { 0.0 };
                assert!((g - C64::new(expect, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn clock_shift_n4_gram_is_scaled_identity() {
        // Brute-force Gram of the 16 vectorizations: must be 4*I_16.
        let fam = weyl_heisenberg_basis(4).unwrap();
        for (i, a) in fam.iter().enumerate() {
            assert!(unitarity_defect(a) < 1e-10, "member {i} not unitary");
            for (j, b) in fam.iter().enumerate() {
                let g = vec_of(a).dotc(&vec_of(b));
                let expect = if i == j { 4.0 } else { 0.0 };
                assert!(
                    (g - C64::new(expect, 0.0)).norm() < 1e-10,
                    "Gram({i},{j}) = {g}"
                );
            }
        }
    }

    #[test]
    fn random_unitary_properties() {
        let mut r = rng(42);
        let u1 = random_unitary(1, &mut r);
        assert!((u1[(0, 0)].norm() - 1.0).abs() < 1e-12);

        for n in [2usize, 5, 16] {
            let u = random_unitary(n, &mut r);
            assert!(unitarity_defect(&u) < 1e-9, "defect at n={n}");
        }

        let a = random_unitary(6, &mut rng(7));
        let b = random_unitary(6, &mut rng(7));
        assert!(frob(&(&a - &b)) < 1e-15, "same seed must reproduce");
    }

    #[test]
    fn baseline_schedule_is_lazy_clock_shift_family() {
        let mut r = rng(1);
        let sched = build_schedule(Stage::Baseline, 4, 16, 2, &mut r).unwrap();
        assert_eq!(sched.len(), 16);
        assert_eq!(sched.total_slots(), 32);
        let fam = weyl_heisenberg_basis(4).unwrap();
        for (i, expect) in fam.iter().enumerate() {
            assert!(frob(&(&sched.matrix(i) - expect)) < 1e-14);
        }
    }

    #[test]
    fn baseline_schedule_rejects_count_mismatch() {
        let mut r = rng(2);
        assert!(matches!(
            build_schedule(Stage::Baseline, 4, 15, 1, &mut r),
            Err(ScatteringError::CountMismatch { .. })
        ));
    }

    #[test]
    fn stage_schedules_have_requested_counts() {
        let mut r = rng(3);
        let s1 = build_schedule(Stage::BsRis, 4, 6, 3, &mut r).unwrap();
        assert_eq!(s1.len(), 6);
        for m in s1.matrices() {
            assert!(unitarity_defect(&m) < 1e-10);
        }
        // ceil(N/M) with N = 16, M = 8 gives 2 subframes.
        let s2 = build_schedule(Stage::RisUser, 16, 16usize.div_ceil(8), 4, &mut r).unwrap();
        assert_eq!(s2.len(), 2);
        for m in s2.matrices() {
            assert!(unitarity_defect(&m) < 1e-10);
        }
    }
}
