//! The decoder's decision trace: every commitment as a `stage,index,symbol`
//! line, showing the three-stage schedule — user 1 up to the split M,
//! all of user 2, then user 1's remainder.

use nbpolar::channel::{symbols_to_bits, transmit, ChannelParams};
use nbpolar::decoder::JointScDecoder;
use nbpolar::gf::Field;
use nbpolar::polar::{CodeConfig, User};

fn main() -> nbpolar::Result<()> {
    // Tiny code so the whole trace fits on screen: N=8 over GF(4),
    // M=2, three info symbols per user.
    let field = Field::with_default_poly(2)?;
    let cfg = CodeConfig::new(field.clone(), 3, 2, 3, &[0, 1, 2, 4, 5], &[0, 1, 2, 4, 5], 2)?;
    let params = ChannelParams::from_ebn0_db(8.0, 3.0 / 8.0)?;

    let u = cfg.insert_frozen(User::User1, &[1, 2, 3])?;
    let v = cfg.insert_frozen(User::User2, &[3, 1, 2])?;
    let x = cfg.encode(User::User1, &u)?;
    let y = cfg.encode(User::User2, &v)?;
    let rx = transmit(
        &symbols_to_bits(&field, &x),
        &symbols_to_bits(&field, &y),
        &params,
        field.r() as usize,
        7,
    )?;

    let mut dec = JointScDecoder::new(cfg.clone());
    dec.enable_trace(true);
    let out = dec.decode(&rx, &params)?;

    println!("stage,index,symbol");
    for entry in out.trace.as_deref().unwrap_or(&[]) {
        println!("{entry}");
    }
    println!();
    println!("u sent {:?} -> decoded {:?}", u, out.u_hat);
    println!("v sent {:?} -> decoded {:?}", v, out.v_hat);
    println!(
        "schedule: stage 1 covers u[0..{m}], stage 2 covers all of v, stage 3 the rest of u",
        m = cfg.stage_split()
    );
    Ok(())
}
