//! Polar encoding over GF(2^r) with the kernel `[[1, 0], [alpha, 1]]`.
//!
//! A length-`N = 2^n` message `u` maps to the codeword `x = u * G_N` where
//! `G_N = B_N * F^{(x) n}` (`B_N` the bit-reversal permutation, `F^{(x) n}`
//! the n-fold Kronecker power of the kernel). Since `B_N` commutes with the
//! Kronecker power, we realize encoding as the natural-order butterfly
//! [`transform`] followed by a bit-reversal shuffle of the code symbols;
//! the decoder works entirely in the natural butterfly order and undoes the
//! shuffle when it ingests channel observations.

use crate::gf::{Field, Symbol};
use crate::{Error, Result};

/// Which of the two users a message belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum User {
    User1,
    User2,
}

/// Everything that defines one two-user code instance.
#[derive(Debug, Clone)]
pub struct CodeConfig {
    field: Field,
    n: u32,
    alpha_u: Symbol,
    alpha_v: Symbol,
    /// Frozen masks, one flag per position (0-based).
    frozen_u: Vec<bool>,
    frozen_v: Vec<bool>,
    /// Stage split: user 1 decodes positions `1..=m` before user 2 starts.
    m: usize,
}

impl CodeConfig {
    /// Builds a configuration and validates every structural invariant.
    ///
    /// `frozen_u` / `frozen_v` are 0-based position sets; both users must
    /// freeze `N - k` positions where `k` is the common information length.
    /// `m` is the stage split in `1..=N`.
    pub fn new(
        field: Field,
        n: u32,
        alpha_u: Symbol,
        alpha_v: Symbol,
        frozen_u: &[usize],
        frozen_v: &[usize],
        m: usize,
    ) -> Result<CodeConfig> {
        if n == 0 || n > 20 {
            return Err(Error::InvalidParameter(format!(
                "block exponent n={n} outside supported range 1..=20"
            )));
        }
        let big_n = 1usize << n;
        let q = field.q();
        if alpha_u == 0 || alpha_u as usize >= q || alpha_v == 0 || alpha_v as usize >= q {
            return Err(Error::InvalidParameter(format!(
                "kernel factors must be nonzero field elements, got ({alpha_u}, {alpha_v})"
            )));
        }
        if m == 0 || m > big_n {
            return Err(Error::InvalidParameter(format!(
                "stage split M={m} outside 1..={big_n}"
            )));
        }
        if frozen_u.len() != frozen_v.len() {
            return Err(Error::InvalidParameter(format!(
                "users freeze different counts ({} vs {})",
                frozen_u.len(),
                frozen_v.len()
            )));
        }
        let mask = |set: &[usize]| -> Result<Vec<bool>> {
            let mut mask = vec![false; big_n];
            for &i in set {
                if i >= big_n {
                    return Err(Error::InvalidParameter(format!(
                        "frozen index {i} outside 0..{big_n}"
                    )));
                }
                if mask[i] {
                    return Err(Error::InvalidParameter(format!("duplicate frozen index {i}")));
                }
                mask[i] = true;
            }
            Ok(mask)
        };
        Ok(CodeConfig {
            frozen_u: mask(frozen_u)?,
            frozen_v: mask(frozen_v)?,
            field,
            n,
            alpha_u,
            alpha_v,
            m,
        })
    }

    /// Information length for a rate `r` under the per-user reading
    /// (`k = round(r * N)`) or the sum-rate reading (`k = round(r * N / 2)`,
    /// what the simulation tools use for their `R` parameter: both users
    /// together carry `r` information symbols per channel use).
    pub fn info_len_for_rate(big_n: usize, rate: f64, per_user: bool) -> Result<usize> {
        if !(0.0..=1.0).contains(&rate) {
            return Err(Error::InvalidParameter(format!("rate {rate} outside [0, 1]")));
        }
        let k = if per_user {
            (rate * big_n as f64).round() as usize
        } else {
            (rate * big_n as f64 / 2.0).round() as usize
        };
        Ok(k.min(big_n))
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// Block length `N = 2^n`.
    pub fn block_len(&self) -> usize {
        1 << self.n
    }

    /// Information symbols per user.
    pub fn info_len(&self) -> usize {
        self.block_len() - self.frozen_u.iter().filter(|&&f| f).count()
    }

    /// Stage split: how many user-1 symbols are decoded before user 2.
    pub fn stage_split(&self) -> usize {
        self.m
    }

    pub fn alpha(&self, user: User) -> Symbol {
        match user {
            User::User1 => self.alpha_u,
            User::User2 => self.alpha_v,
        }
    }

    /// Per-position frozen mask (0-based) for one user.
    pub fn frozen_mask(&self, user: User) -> &[bool] {
        match user {
            User::User1 => &self.frozen_u,
            User::User2 => &self.frozen_v,
        }
    }

    /// Sorted 0-based frozen positions for one user.
    pub fn frozen_positions(&self, user: User) -> Vec<usize> {
        self.frozen_mask(user)
            .iter()
            .enumerate()
            .filter_map(|(i, &f)| f.then_some(i))
            .collect()
    }

    /// Scatters information symbols into a full block, zeros at frozen
    /// positions.
    pub fn insert_frozen(&self, user: User, info: &[Symbol]) -> Result<Vec<Symbol>> {
        let mask = self.frozen_mask(user);
        if info.len() != self.info_len() {
            return Err(Error::LengthMismatch {
                what: "information block",
                got: info.len(),
                expected: self.info_len(),
            });
        }
        let mut full = vec![0; self.block_len()];
        let mut it = info.iter();
        for (slot, &frozen) in full.iter_mut().zip(mask) {
            if !frozen {
                *slot = *it.next().unwrap();
            }
        }
        Ok(full)
    }

    /// Extracts the information symbols of a full block (inverse of
    /// [`CodeConfig::insert_frozen`]).
    pub fn extract_info(&self, user: User, full: &[Symbol]) -> Vec<Symbol> {
        full.iter()
            .zip(self.frozen_mask(user))
            .filter_map(|(&s, &frozen)| (!frozen).then_some(s))
            .collect()
    }

    /// Encodes a full symbol block for one user.
    pub fn encode(&self, user: User, u: &[Symbol]) -> Result<Vec<Symbol>> {
        encode(&self.field, self.alpha(user), u)
    }
}

/// Bit-reversal permutation of `0..2^n`: index `i` maps to `i` with its
/// `n`-bit binary representation reversed.
pub fn bit_reversal_permutation(n: u32) -> Vec<usize> {
    let big_n = 1usize << n;
    (0..big_n)
        .map(|i| {
            let mut r = 0usize;
            for t in 0..n {
                r |= ((i >> t) & 1) << (n - 1 - t);
            }
            r
        })
        .collect()
}

/// In-place n-fold kernel butterfly in natural order (no bit reversal):
/// stage distances N/2, N/4, ..., 1, each pair updated as
/// `(a, b) -> (a + alpha*b, b)`.
pub fn transform_in_place(field: &Field, alpha: Symbol, u: &mut [Symbol]) {
    let n = u.len();
    debug_assert!(n.is_power_of_two());
    let mut h = n / 2;
    while h >= 1 {
        let mut start = 0;
        while start < n {
            for i in start..start + h {
                u[i] = field.add(u[i], field.mul(alpha, u[i + h]));
            }
            start += 2 * h;
        }
        h /= 2;
    }
}

/// The natural-order transform `u -> u * F^{(x) n}` (no bit reversal).
pub fn transform(field: &Field, alpha: Symbol, u: &[Symbol]) -> Result<Vec<Symbol>> {
    check_block(field, alpha, u)?;
    let mut out = u.to_vec();
    transform_in_place(field, alpha, &mut out);
    Ok(out)
}

/// Full polar encoding `x = u * B_N * F^{(x) n}`: the natural-order
/// butterfly followed by the bit-reversal shuffle of code symbols.
pub fn encode(field: &Field, alpha: Symbol, u: &[Symbol]) -> Result<Vec<Symbol>> {
    let c = transform(field, alpha, u)?;
    let rev = bit_reversal_permutation(c.len().trailing_zeros());
    Ok((0..c.len()).map(|j| c[rev[j]]).collect())
}

fn check_block(field: &Field, alpha: Symbol, u: &[Symbol]) -> Result<()> {
    if u.is_empty() || !u.len().is_power_of_two() {
        return Err(Error::InvalidParameter(format!(
            "block length {} is not a power of two",
            u.len()
        )));
    }
    if alpha == 0 || alpha as usize >= field.q() {
        return Err(Error::InvalidParameter(format!("kernel factor {alpha} invalid")));
    }
    if let Some(&s) = u.iter().find(|&&s| s as usize >= field.q()) {
        return Err(Error::InvalidParameter(format!(
            "symbol {s} outside field of size {}",
            field.q()
        )));
    }
    Ok(())
}

/// Explicit generator matrix `G_N = B_N * F^{(x) n}`, row-major
/// (`g[i][j]` = coefficient of `u_i` in `x_j`). Intended for testing and
/// small N; cost is quadratic in N.
pub fn build_generator(field: &Field, alpha: Symbol, n: u32) -> Result<Vec<Vec<Symbol>>> {
    if n == 0 || n > 10 {
        return Err(Error::InvalidParameter(format!(
            "generator matrix only built for n in 1..=10, got {n}"
        )));
    }
    if alpha == 0 || alpha as usize >= field.q() {
        return Err(Error::InvalidParameter(format!("kernel factor {alpha} invalid")));
    }
    // Kronecker power of F = [[1, 0], [alpha, 1]].
    let mut g: Vec<Vec<Symbol>> = vec![vec![1]];
    for _ in 0..n {
        let sz = g.len();
        let mut next = vec![vec![0; 2 * sz]; 2 * sz];
        for i in 0..sz {
            for j in 0..sz {
                let a = g[i][j];
                if a == 0 {
                    continue;
                }
                // F[0][0] = 1, F[1][0] = alpha, F[1][1] = 1.
                next[i][j] = a;
                next[sz + i][j] = field.mul(alpha, a);
                next[sz + i][sz + j] = a;
            }
        }
        g = next;
    }
    // Left-multiply by B_N: row i of G is row bitrev(i) of the power.
    let rev = bit_reversal_permutation(n);
    Ok((0..g.len()).map(|i| g[rev[i]].clone()).collect())
}

/// Row-vector-times-matrix product over the field (testing helper).
pub fn mat_vec_encode(field: &Field, g: &[Vec<Symbol>], u: &[Symbol]) -> Vec<Symbol> {
    let n = g.len();
    assert_eq!(u.len(), n);
    let mut x = vec![0; n];
    for (i, &ui) in u.iter().enumerate() {
        if ui == 0 {
            continue;
        }
        for (j, xj) in x.iter_mut().enumerate() {
            *xj = field.add(*xj, field.mul(ui, g[i][j]));
        }
    }
    x
}
