//! GF(2^r) arithmetic via log/antilog tables, 1 <= r <= 8.
//!
//! Elements are stored as unsigned integers in `[0, 2^r)`: bit `t` of the
//! integer is the coefficient of `x^t`, and bit 0 is the first bit on the
//! serial (channel) side. Addition is bitwise XOR; multiplication goes
//! through discrete-log tables built from a primitive polynomial, whose
//! primitivity is verified at construction time by checking that the powers
//! of `x` cycle through all `q - 1` nonzero elements.

use crate::{Error, Result};

/// A field element. Only values below the field size `q` are meaningful.
pub type Symbol = u8;

/// Sentinel stored in the log table at index 0 (log of zero is undefined).
const LOG_ZERO: u8 = 0xff;

/// Default primitive polynomials per extension degree `r` (standard table
/// choices). Encoded with bit `i` = coefficient of `x^i`, so e.g.
/// `x^4 + x + 1` is `0b1_0011`.
const DEFAULT_POLYS: [u32; 8] = [
    0b11,          // r=1: x + 1
    0b111,         // r=2: x^2 + x + 1
    0b1011,        // r=3: x^3 + x + 1
    0b1_0011,      // r=4: x^4 + x + 1
    0b10_0101,     // r=5: x^5 + x^2 + 1
    0b100_0011,    // r=6: x^6 + x + 1
    0b1000_1001,   // r=7: x^7 + x^3 + 1
    0b1_0001_1101, // r=8: x^8 + x^4 + x^3 + x^2 + 1
];

/// GF(2^r) with precomputed log, antilog, and multiplication tables.
#[derive(Debug, Clone)]
pub struct Field {
    r: u32,
    q: usize,
    poly: u32,
    /// `antilog[k] = x^k` for `0 <= k < q - 1`.
    antilog: Vec<u8>,
    /// `log[a] = k` such that `x^k = a`, for `a != 0`; `LOG_ZERO` at index 0.
    log: Vec<u8>,
    /// Flat `q*q` multiplication table, `mul_table[a*q + b] = a*b`.
    mul_table: Vec<u8>,
}

impl Field {
    /// Builds GF(2^r) from an explicit degree-`r` polynomial over GF(2).
    ///
    /// Fails with [`Error::DegreeMismatch`] if the polynomial's degree is not
    /// exactly `r`, and with [`Error::NotPrimitive`] if the powers of `x`
    /// modulo the polynomial do not enumerate every nonzero element exactly
    /// once (this also rejects reducible polynomials).
    pub fn new(r: u32, poly: u32) -> Result<Field> {
        if r == 0 || r > 8 {
            return Err(Error::InvalidParameter(format!(
                "field degree r={r} outside supported range 1..=8"
            )));
        }
        let q = 1usize << r;
        if poly >> r != 1 {
            return Err(Error::DegreeMismatch { poly, r });
        }

        // Generate x^0, x^1, ... by shifting and reducing. For a primitive
        // polynomial this walks all q-1 nonzero elements and returns to 1.
        let mask = (q - 1) as u32;
        let mut antilog = Vec::with_capacity(q - 1);
        let mut seen = vec![false; q];
        let mut v: u32 = 1;
        for _ in 0..q - 1 {
            if v == 0 || seen[v as usize] {
                return Err(Error::NotPrimitive { poly });
            }
            seen[v as usize] = true;
            antilog.push(v as u8);
            let carry = v >> (r - 1) & 1 == 1;
            v = (v << 1) & mask;
            if carry {
                v ^= poly & mask;
            }
        }
        if v != 1 {
            return Err(Error::NotPrimitive { poly });
        }

        let mut log = vec![LOG_ZERO; q];
        for (k, &a) in antilog.iter().enumerate() {
            log[a as usize] = k as u8;
        }

        let mut mul_table = vec![0u8; q * q];
        let modulus = (q - 1) as usize;
        for a in 1..q {
            for b in 1..q {
                let k = (log[a] as usize + log[b] as usize) % modulus;
                mul_table[a * q + b] = antilog[k];
            }
        }

        Ok(Field {
            r,
            q,
            poly,
            antilog,
            log,
            mul_table,
        })
    }

    /// Builds GF(2^r) with the crate's default primitive polynomial.
    pub fn with_default_poly(r: u32) -> Result<Field> {
        let poly = Self::default_poly(r).ok_or_else(|| {
            Error::InvalidParameter(format!("no default polynomial for r={r}"))
        })?;
        Field::new(r, poly)
    }

    /// The default primitive polynomial for degree `r`, if `1 <= r <= 8`.
    pub fn default_poly(r: u32) -> Option<u32> {
        DEFAULT_POLYS.get(r.checked_sub(1)? as usize).copied()
    }

    /// Extension degree `r` (bits per symbol).
    pub fn r(&self) -> u32 {
        self.r
    }

    /// Field size `q = 2^r`.
    pub fn q(&self) -> usize {
        self.q
    }

    /// The polynomial this field was built from.
    pub fn poly(&self) -> u32 {
        self.poly
    }

    /// The primitive element `x` (i.e. `antilog[1]`; equal to 1 when q = 2).
    pub fn gamma(&self) -> Symbol {
        self.antilog[1 % self.antilog.len()]
    }

    /// Field addition (= subtraction): bitwise XOR.
    #[inline]
    pub fn add(&self, a: Symbol, b: Symbol) -> Symbol {
        debug_assert!((a as usize) < self.q && (b as usize) < self.q);
        a ^ b
    }

    /// Field multiplication via the precomputed table.
    #[inline]
    pub fn mul(&self, a: Symbol, b: Symbol) -> Symbol {
        debug_assert!((a as usize) < self.q && (b as usize) < self.q);
        self.mul_table[a as usize * self.q + b as usize]
    }

    /// Multiplicative inverse. Panics on zero.
    pub fn inv(&self, a: Symbol) -> Symbol {
        assert!(a != 0, "zero has no multiplicative inverse");
        let m = self.antilog.len();
        self.antilog[(m - self.log[a as usize] as usize) % m]
    }

    /// `x^k` (exponent taken modulo `q - 1`).
    pub fn pow_gamma(&self, k: usize) -> Symbol {
        self.antilog[k % self.antilog.len()]
    }

    /// Discrete log base `x`, or `None` for the zero element.
    pub fn log(&self, a: Symbol) -> Option<u32> {
        debug_assert!((a as usize) < self.q);
        match self.log[a as usize] {
            LOG_ZERO => None,
            k => Some(k as u32),
        }
    }

    /// All nonzero field elements in increasing integer order.
    pub fn nonzero_symbols(&self) -> impl Iterator<Item = Symbol> + '_ {
        (1..self.q).map(|a| a as Symbol)
    }

    /// Serializes a symbol to `r` bits, bit 0 of the integer first.
    pub fn symbol_to_bits(&self, a: Symbol) -> Vec<u8> {
        debug_assert!((a as usize) < self.q);
        (0..self.r).map(|t| (a >> t) & 1).collect()
    }

    /// Parses `r` bits (bit 0 of the integer first) back into a symbol.
    pub fn bits_to_symbol(&self, bits: &[u8]) -> Result<Symbol> {
        if bits.len() != self.r as usize {
            return Err(Error::LengthMismatch {
                what: "bit slice",
                got: bits.len(),
                expected: self.r as usize,
            });
        }
        let mut a = 0u8;
        for (t, &b) in bits.iter().enumerate() {
            if b > 1 {
                return Err(Error::InvalidParameter(format!("bit value {b} at position {t}")));
            }
            a |= b << t;
        }
        Ok(a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent oracle: carry-less polynomial multiplication followed by
    /// reduction modulo `poly`, no tables involved.
    fn poly_mul_mod(a: u32, b: u32, poly: u32, r: u32) -> u8 {
        let mut prod: u64 = 0;
        for t in 0..32 {
            if b >> t & 1 == 1 {
                prod ^= (a as u64) << t;
            }
        }
        // Reduce from the top down.
        for t in (r..64).rev() {
            if prod >> t & 1 == 1 {
                prod ^= (poly as u64) << (t - r);
            }
        }
        prod as u8
    }

    /// Oracle: is `poly` primitive of degree `r`? Checks irreducibility by
    /// trial division and that `x` has multiplicative order `2^r - 1`.
    fn is_primitive(poly: u32, r: u32) -> bool {
        if poly >> r != 1 {
            return false;
        }
        // Trial division by every polynomial of degree 1..r (cheap at these
        // sizes).
        let degree = |x: u64| 63 - x.leading_zeros();
        for d in 1..r {
            for div in (1u64 << d)..(1u64 << (d + 1)) {
                let mut rem = poly as u64;
                while rem != 0 && degree(rem) >= d {
                    rem ^= div << (degree(rem) - d);
                }
                if rem == 0 {
                    return false;
                }
            }
        }
        // Order of x must be exactly q - 1.
        let q1 = (1u32 << r) - 1;
        let mut v = 1u8;
        for k in 1..=q1 {
            v = poly_mul_mod(v as u32, 2, poly, r);
            if v == 1 {
                return k == q1;
            }
        }
        false
    }

    #[test]
    fn default_polys_are_primitive_per_oracle() {
        for r in 1..=8 {
            let poly = Field::default_poly(r).unwrap();
            assert!(is_primitive(poly, r), "default poly for r={r} failed oracle");
            assert!(Field::new(r, poly).is_ok());
        }
    }

    #[test]
    fn mul_matches_polynomial_oracle_exhaustively() {
        for r in 1..=4 {
            let f = Field::with_default_poly(r).unwrap();
            for a in 0..f.q() as u8 {
                for b in 0..f.q() as u8 {
                    let want = poly_mul_mod(a as u32, b as u32, f.poly(), r);
                    assert_eq!(f.mul(a, b), want, "r={r} a={a} b={b}");
                }
            }
        }
    }

    #[test]
    fn mul_matches_polynomial_oracle_gf256() {
        let f = Field::with_default_poly(8).unwrap();
        for a in 0..=255u8 {
            for b in 0..=255u8 {
                assert_eq!(f.mul(a, b), poly_mul_mod(a as u32, b as u32, f.poly(), 8));
            }
        }
    }

    #[test]
    fn field_axioms_exhaustive_up_to_gf16() {
        for r in [1, 2, 3, 4] {
            let f = Field::with_default_poly(r).unwrap();
            let q = f.q() as u8;
            for a in 0..q {
                assert_eq!(f.add(a, 0), a);
                assert_eq!(f.mul(a, 1), a);
                assert_eq!(f.mul(a, 0), 0);
                assert_eq!(f.add(a, a), 0, "characteristic 2");
                if a != 0 {
                    assert_eq!(f.mul(a, f.inv(a)), 1);
                }
                for b in 0..q {
                    assert_eq!(f.add(a, b), f.add(b, a));
                    assert_eq!(f.mul(a, b), f.mul(b, a));
                    for c in 0..q {
                        assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                        assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
                        assert_eq!(
                            f.mul(a, f.add(b, c)),
                            f.add(f.mul(a, b), f.mul(a, c)),
                            "distributivity r={r}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn known_values_gf16() {
        let f = Field::new(4, 0b1_0011).unwrap();
        assert_eq!(f.gamma(), 2);
        assert_eq!(f.add(5, 10), 15);
        assert_eq!(f.mul(5, 7), 8);
        // Antilog cycle has full length: all 15 nonzero elements distinct.
        let mut seen = [false; 16];
        for k in 0..15 {
            let v = f.pow_gamma(k);
            assert!(!seen[v as usize]);
            seen[v as usize] = true;
        }
        assert_eq!(f.pow_gamma(15), 1);
    }

    #[test]
    fn non_primitive_poly_rejected() {
        // x^4 + x^2 + 1 = (x^2 + x + 1)^2 is reducible.
        match Field::new(4, 0b1_0101) {
            Err(Error::NotPrimitive { poly }) => assert_eq!(poly, 0b1_0101),
            other => panic!("expected NotPrimitive, got {other:?}"),
        }
        assert!(!is_primitive(0b1_0101, 4));
        // x^4 + x^3 + x^2 + x + 1 is irreducible but x has order 5.
        assert!(matches!(
            Field::new(4, 0b1_1111),
            Err(Error::NotPrimitive { .. })
        ));
        assert!(!is_primitive(0b1_1111, 4));
    }

    #[test]
    fn degree_mismatch_rejected() {
        assert!(matches!(
            Field::new(4, 0b10_0101),
            Err(Error::DegreeMismatch { .. })
        ));
        assert!(matches!(Field::new(4, 0b101), Err(Error::DegreeMismatch { .. })));
    }

    #[test]
    fn bit_serialization_round_trip() {
        let f = Field::with_default_poly(4).unwrap();
        assert_eq!(f.symbol_to_bits(5), vec![1, 0, 1, 0]);
        for a in 0..16u8 {
            assert_eq!(f.bits_to_symbol(&f.symbol_to_bits(a)).unwrap(), a);
        }
        assert!(f.bits_to_symbol(&[1, 0]).is_err());

        let f2 = Field::with_default_poly(1).unwrap();
        assert_eq!(f2.symbol_to_bits(1), vec![1]);
        assert_eq!(f2.gamma(), 1);
    }

    #[test]
    fn inverse_and_log_tables_consistent() {
        for r in [2, 4, 8] {
            let f = Field::with_default_poly(r).unwrap();
            assert_eq!(f.log(1), Some(0));
            assert_eq!(f.log(0), None);
            for a in f.nonzero_symbols() {
                let k = f.log(a).unwrap();
                assert_eq!(f.pow_gamma(k as usize), a);
            }
        }
    }
}
