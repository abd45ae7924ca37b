//! The scattering-matrix designs behind each estimation phase: the
//! clock-and-shift family with orthogonal vectorizations (baseline) and
//! seeded random unitaries (both stages of the individual estimator).

use bdris::numerics::{frob, vec_of, CMat};
use bdris::scattering::{build_schedule, random_unitary, weyl_heisenberg_basis, Stage};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let n = 4;
    let family = weyl_heisenberg_basis(n).expect("n >= 1");
    println!("clock-and-shift family for N = {n}: {} matrices", family.len());

    // Unitarity and the vectorization Gram, the property that turns the
    // baseline LS into a matched filter.
    let mut worst_unitarity: f64 = 0.0;
    let mut worst_gram: f64 = 0.0;
    for (i, a) in family.iter().enumerate() {
        let defect = frob(&(a.adjoint() * a - CMat::identity(n, n)));
        worst_unitarity = worst_unitarity.max(defect);
        for (j, b) in family.iter().enumerate() {
            let g = vec_of(a).dotc(&vec_of(b)).norm();
            let expect = if i == j { n as f64 } else { 0.0 };
            worst_gram = worst_gram.max((g - expect).abs());
        }
    }
    println!("  worst unitarity defect:        {worst_unitarity:.3e}");
    println!("  worst Gram deviation from N*I: {worst_gram:.3e}");

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let u = random_unitary(6, &mut rng);
    println!(
        "random unitary (N = 6) defect:   {:.3e}",
        frob(&(u.adjoint() * &u - CMat::identity(6, 6)))
    );

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let baseline = build_schedule(Stage::Baseline, n, n * n, 2, &mut rng).unwrap();
    let stage1 = build_schedule(Stage::BsRis, n, 6, 8, &mut rng).unwrap();
    let stage2 = build_schedule(Stage::RisUser, n, 2, 4, &mut rng).unwrap();
    for (label, sched) in [
        ("baseline", &baseline),
        ("BS-RIS stage", &stage1),
        ("RIS-user stage", &stage2),
    ] {
        println!(
            "{label:>14}: {} matrices x {} slots = {} pilot slots",
            sched.len(),
            sched.slot_span(),
            sched.total_slots()
        );
    }
}
