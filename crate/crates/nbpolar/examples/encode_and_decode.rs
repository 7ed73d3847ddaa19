//! One end-to-end block: construct frozen sets, encode both users, push the
//! summed BPSK signals through Gaussian noise, and jointly decode.

use nbpolar::channel::{symbols_to_bits, transmit, ChannelParams};
use nbpolar::construction::{build_code, estimate_reliabilities, ConstructionConfig};
use nbpolar::decoder::JointScDecoder;
use nbpolar::gf::Field;
use nbpolar::polar::User;

fn main() -> nbpolar::Result<()> {
    // N = 32 over GF(16), kernel factors (5, 3), stage split M = N/4 = 8,
    // and K = 16 information symbols per user (rate 1/2).
    let field = Field::with_default_poly(4)?;
    let params = ChannelParams::from_ebn0_db(6.0, 0.5)?;
    let cons = ConstructionConfig {
        field: field.clone(),
        n: 5,
        alpha_u: 5,
        alpha_v: 3,
        m: 8,
        sigma2: params.sigma2,
        design_ebn0_db: params.ebn0_db,
        trials: 20_000,
        seed: 1,
    };
    let profile = estimate_reliabilities(&cons, 0)?;
    let cfg = build_code(&cons, &profile, 16)?;
    println!(
        "code: N={}, K={} per user, M={}, frozen_u={:?}",
        cfg.block_len(),
        cfg.info_len(),
        cfg.stage_split(),
        cfg.frozen_positions(User::User1),
    );

    // Fixed messages for reproducibility: any K field symbols per user.
    let info_u: Vec<u8> = (0..16).map(|i| (i * 7 + 3) as u8 % 16).collect();
    let info_v: Vec<u8> = (0..16).map(|i| (i * 11 + 1) as u8 % 16).collect();
    let u = cfg.insert_frozen(User::User1, &info_u)?;
    let v = cfg.insert_frozen(User::User2, &info_v)?;
    let x = cfg.encode(User::User1, &u)?;
    let y = cfg.encode(User::User2, &v)?;

    // The receiver sees one real sample per bit: BPSK(x) + BPSK(y) + noise.
    let rx = transmit(
        &symbols_to_bits(&field, &x),
        &symbols_to_bits(&field, &y),
        &params,
        field.r() as usize,
        42,
    )?;
    println!(
        "channel: Eb/N0 = {} dB, sigma^2 = {:.4}, {} samples",
        params.ebn0_db.unwrap(),
        params.sigma2,
        rx.block_len() * rx.bits_per_symbol()
    );

    let mut dec = JointScDecoder::new(cfg.clone());
    let out = dec.decode(&rx, &params)?;
    let got_u = cfg.extract_info(User::User1, &out.u_hat);
    let got_v = cfg.extract_info(User::User2, &out.v_hat);

    println!("sent  u: {info_u:?}");
    println!("got   u: {got_u:?}");
    println!("sent  v: {info_v:?}");
    println!("got   v: {got_v:?}");
    println!(
        "block {}",
        if got_u == info_u && got_v == info_v {
            "decoded correctly"
        } else {
            "had errors"
        }
    );
    Ok(())
}
