//! Tour of GF(2^r): construction from a primitive polynomial, the
//! generator's power table, arithmetic, and the symbol/bit mapping used on
//! the channel.

use nbpolar::gf::Field;

fn main() -> nbpolar::Result<()> {
    // GF(16) with the default primitive polynomial x^4 + x + 1 (bit mask
    // 0b1_0011 = 19). Symbols are 0..16, addition is XOR, multiplication
    // runs over log/antilog tables built from the generator gamma = x.
    let f = Field::with_default_poly(4)?;
    println!(
        "GF({}) over poly {:#07b}, generator gamma = {}",
        f.q(),
        f.poly(),
        f.gamma()
    );

    println!("\npowers of gamma:");
    for k in 0..f.q() - 1 {
        print!(" g^{k}={}", f.pow_gamma(k));
    }
    println!();

    let (a, b) = (5, 3);
    println!("\narithmetic with a={a}, b={b}:");
    println!("  a + b = {}", f.add(a, b));
    println!("  a * b = {}", f.mul(a, b));
    println!("  a^-1  = {}  (check: a * a^-1 = {})", f.inv(a), f.mul(a, f.inv(a)));
    println!("  log_g(a) = {:?}", f.log(a));

    // Bit order matters on the channel: bit 0 of the integer is the first
    // serialized bit.
    let bits = f.symbol_to_bits(a);
    println!("\nsymbol {a} serializes to bits {bits:?} (LSB first)");
    println!("round trip: {}", f.bits_to_symbol(&bits)?);

    // A non-primitive polynomial is rejected: x^4 + x^2 + 1 factors.
    let err = Field::new(4, 0b1_0101).unwrap_err();
    println!("\nx^4 + x^2 + 1 rejected: {err}");

    // The alternate primitive polynomial for GF(16): x^4 + x^3 + 1.
    let g = Field::new(4, 0b1_1001)?;
    println!(
        "alternate GF(16) over poly {:#07b}: 5 * 3 = {} there",
        g.poly(),
        g.mul(5, 3)
    );
    Ok(())
}
