//! Sample a Saleh-Valenzuela realization, assemble the BS-RIS and RIS-user
//! channels, and check the cascaded-channel identity
//! `E * Theta * h == kron(h^T, E) * vec(Theta)`.

use bdris::channel::{
    assemble_channels, cascaded_channel, path_loss_db, sample_paths, ArrayGeometry, Scenario,
};
use bdris::numerics::{frob, vec_of};
use bdris::scattering::random_unitary;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let geometry = ArrayGeometry::new(8, 8, 4, 4).expect("valid geometry");
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
        shadow_sigma_db: 2.0,
        on_grid: None,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(42);

    let pl = path_loss_db(28.0, 10.0, 2.2, 0.0, &mut rng).unwrap();
    println!("BS-RIS path loss at 10 m, 28 GHz: {pl:.2} dB");

    let params = sample_paths(&scenario, &mut rng).expect("sampling");
    println!("sampled {} BS-RIS paths:", params.bs_ris.len());
    for (i, p) in params.bs_ris.iter().enumerate() {
        println!(
            "  path {i}: |gain| = {:.3e}, BS elevation {:.3} rad, RIS ({:.3}, {:.3}) rad",
            p.gain.norm(),
            p.bs_elevation,
            p.ris_elevation,
            p.ris_azimuth
        );
    }

    let ch = assemble_channels(&params, &geometry).expect("assembly");
    println!(
        "E is {}x{} with ||E||_F = {:.3e} (rank <= {})",
        ch.e.nrows(),
        ch.e.ncols(),
        frob(&ch.e),
        params.bs_ris.len()
    );

    // The cascaded channel acts on vec(Theta).
    let h = &ch.h_users[0];
    let big = cascaded_channel(h, &ch.e);
    let theta = random_unitary(geometry.n(), &mut rng);
    let direct = &ch.e * &theta * h;
    let through_vec = &big * vec_of(&theta);
    let gap = (direct - through_vec)
        .iter()
        .map(|e| e.norm())
        .fold(0.0, f64::max);
    println!(
        "cascaded channel H_1 is {}x{}; identity gap = {gap:.3e}",
        big.nrows(),
        big.ncols()
    );
}
