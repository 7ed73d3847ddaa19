//! A small deterministic BLER campaign: construct a code, sweep Eb/N0,
//! and print the CSV rows the simulation harness emits. Rerunning (or
//! changing the worker count) reproduces the same bytes.

use nbpolar::channel::ebn0_to_sigma2;
use nbpolar::construction::{build_code, estimate_reliabilities, ConstructionConfig};
use nbpolar::gf::Field;
use nbpolar::sim::{ebn0_at_target_bler, Campaign, CSV_HEADER};

fn main() -> nbpolar::Result<()> {
    // N = 32 over GF(16), (5, 3) kernels, sum rate 1/2 (K = N/4 per user).
    let design_db = 6.0;
    let cons = ConstructionConfig {
        field: Field::with_default_poly(4)?,
        n: 5,
        alpha_u: 5,
        alpha_v: 3,
        m: 8,
        sigma2: ebn0_to_sigma2(design_db, 0.5)?,
        design_ebn0_db: Some(design_db),
        trials: 20_000,
        seed: 0,
    };
    let profile = estimate_reliabilities(&cons, 0)?;
    let cfg = build_code(&cons, &profile, 8)?;

    let mut campaign = Campaign::new(cfg, vec![3.0, 4.0, 5.0, 6.0, 7.0]);
    campaign.min_block_errors = 50;
    campaign.max_blocks = 20_000;
    campaign.seed = 0;
    campaign.workers = 0; // one thread per core; the output is identical either way

    println!("{CSV_HEADER}");
    let mut curve = Vec::new();
    for i in 0..campaign.ebn0_grid_db.len() {
        let p = campaign.run_point(i)?;
        println!("{}", p.csv_row());
        curve.push((p.ebn0_db, p.bler_joint));
    }

    if let Some(db) = ebn0_at_target_bler(&curve, 1e-2) {
        println!("\nBLER 1e-2 crossed near {db:.2} dB (log-linear interpolation)");
    }
    Ok(())
}
