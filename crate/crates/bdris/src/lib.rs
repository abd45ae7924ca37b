//! Simulation library for individual (separate BS-RIS and RIS-user) channel
//! estimation in beyond-diagonal RIS (BD-RIS) networks, together with the
//! conventional cascaded least-squares baseline and a Monte Carlo experiment
//! harness.
//!
//! A BD-RIS applies a full unitary scattering matrix `Θ` to impinging
//! signals, so the cascaded BS-RIS-user channel `H_k = h_kᵀ ⊗ E` acts on
//! `vec(Θ)` and direct LS estimation needs `K·N²` pilot slots. The two-stage
//! estimator implemented here instead recovers the sparse BS-RIS channel `E`
//! with a full-duplex DFT-beamspace sweep (elevation bins, angular-rotation
//! refinement, RIS angle/gain recovery by correlation search plus an SVD
//! gain-sign resolution), then estimates each RIS-user channel `h_k` by LS
//! against the reconstructed `Ê`.
//!
//! Modules:
//! - [`numerics`]: complex dense linear algebra contracts (DFT matrix,
//!   Kronecker product, column-major vectorization, SVD, pseudo-inverse,
//!   least squares with rank reporting).
//! - [`channel`]: steering vectors, Saleh-Valenzuela path sampling, path
//!   loss, channel assembly, cascaded-channel construction.
//! - [`scattering`]: unitary scattering-matrix designs and per-stage
//!   schedules (clock-and-shift family for the baseline, seeded random
//!   unitaries for the two proposed stages).
//! - [`baseline`]: cascaded-channel LS estimation from `K·N²` pilot slots.
//! - [`bs_ris`]: stage 1, full-duplex estimation of the BS-RIS channel.
//! - [`ris_user`]: stage 2, per-user LS estimation of the RIS-user channels.
//! - [`harness`]: experiment configs, Monte Carlo runner, NMSE/pilot-slot
//!   metrics, CSV output and SVG plots.
//!
//! The `examples/` directory has one runnable example per capability; the
//! `bdris` binary wraps the harness behind `run`, `plot`, and
//! `validate-config` subcommands.

pub mod baseline;
pub mod bs_ris;
pub mod channel;
pub mod harness;
pub mod numerics;
pub mod ris_user;
pub mod scattering;

pub use channel::{ArrayGeometry, ChannelRealization, PathParams};
pub use harness::{ExperimentConfig, MetricsRecord};
pub use numerics::{CMat, CVec, C64};
pub use scattering::{ScatteringSchedule, Stage};

