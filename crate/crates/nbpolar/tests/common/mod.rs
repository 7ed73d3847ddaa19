//! Shared helpers for the integration and acceptance suites: an exhaustive
//! split-channel posterior oracle, Monte Carlo maximum-likelihood kernel
//! detectors, and confidence-aware threshold readers.

#![allow(dead_code)]

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use nbpolar::channel::{symbols_to_bits, transmit, ChannelParams, RxBlock};
use nbpolar::decoder::TraceEntry;
use nbpolar::gf::{Field, Symbol};
use nbpolar::polar::{encode, CodeConfig, User};
use nbpolar::sim::BlerPoint;

/// Draws random information blocks for both users, inserts frozen zeros,
/// encodes, and transmits one block. Returns the full input blocks and the
/// received samples.
pub fn random_block(
    cfg: &CodeConfig,
    params: &ChannelParams,
    seed: u64,
) -> (Vec<Symbol>, Vec<Symbol>, RxBlock) {
    let field = cfg.field();
    let q = field.q();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = cfg.info_len();
    let msg = |rng: &mut ChaCha8Rng| -> Vec<Symbol> {
        (0..k).map(|_| rng.gen_range(0..q) as Symbol).collect()
    };
    let u = cfg.insert_frozen(User::User1, &msg(&mut rng)).unwrap();
    let v = cfg.insert_frozen(User::User2, &msg(&mut rng)).unwrap();
    let x = cfg.encode(User::User1, &u).unwrap();
    let y = cfg.encode(User::User2, &v).unwrap();
    let rx = transmit(
        &symbols_to_bits(field, &x),
        &symbols_to_bits(field, &y),
        params,
        field.r() as usize,
        seed ^ 0xABCD,
    )
    .unwrap();
    (u, v, rx)
}

/// Exhaustive reference for the three-stage joint decision rule.
///
/// Enumerates every pair of input blocks (q^N each), computes the exact
/// channel likelihood of the received samples for each pair, and answers
/// posterior queries for any decision point by brute-force summation over
/// the pairs consistent with the decisions made so far. Feasible for the
/// tiny codes the equivalence check runs on (q^2N <= 65536).
pub struct ExhaustiveOracle {
    q: usize,
    big_n: usize,
    /// likes[iu * q^N + iv] = P(received | u-index iu, v-index iv).
    likes: Vec<f64>,
    /// digits[i][pos] = symbol at `pos` of the i-th enumerated block.
    digits: Vec<Vec<Symbol>>,
    /// Row sums over all iv, fixed u (stage-1 marginal).
    row_sums: Vec<f64>,
    /// Which u-indices are consistent with the commitments so far.
    allowed_u: Vec<bool>,
    allowed_v: Vec<bool>,
    /// Column sums of `likes` restricted to the currently allowed u set.
    col_sums_allowed_u: Vec<f64>,
    committed_v: Vec<Option<Symbol>>,
}

impl ExhaustiveOracle {
    /// Builds the likelihood table for one received block.
    pub fn new(cfg: &CodeConfig, rx: &RxBlock, params: &ChannelParams) -> ExhaustiveOracle {
        let field = cfg.field();
        let q = field.q();
        let big_n = cfg.block_len();
        let r = field.r() as usize;
        let count = q.pow(big_n as u32);
        assert!(count * count <= 1 << 20, "oracle blow-up: q^2N too large");

        // Enumerate blocks in base-q order and cache encoded bit streams.
        let mut digits = Vec::with_capacity(count);
        let mut x_bits = Vec::with_capacity(count);
        let mut y_bits = Vec::with_capacity(count);
        for i in 0..count {
            let mut u = vec![0 as Symbol; big_n];
            let mut rem = i;
            for d in u.iter_mut() {
                *d = (rem % q) as Symbol;
                rem /= q;
            }
            let x = encode(field, cfg.alpha(User::User1), &u).unwrap();
            let y = encode(field, cfg.alpha(User::User2), &u).unwrap();
            x_bits.push(symbols_to_bits(field, &x));
            y_bits.push(symbols_to_bits(field, &y));
            digits.push(u);
        }

        // Per-sample likelihood of each (x bit, y bit) combination.
        let samples = rx.samples();
        let inv = 1.0 / (2.0 * params.sigma2);
        let mut per_sample = vec![[0.0f64; 4]; samples.len()];
        for (t, &z) in samples.iter().enumerate() {
            for xb in 0..2 {
                for yb in 0..2 {
                    let s = (1.0 - 2.0 * xb as f64) + (1.0 - 2.0 * yb as f64);
                    per_sample[t][xb * 2 + yb] = (-(z - s) * (z - s) * inv).exp();
                }
            }
        }

        let mut likes = vec![0.0f64; count * count];
        for iu in 0..count {
            let xb = &x_bits[iu];
            for iv in 0..count {
                let yb = &y_bits[iv];
                let mut l = 1.0;
                for t in 0..big_n * r {
                    l *= per_sample[t][(xb[t] as usize) * 2 + yb[t] as usize];
                }
                likes[iu * count + iv] = l;
            }
        }
        let row_sums: Vec<f64> = (0..count)
            .map(|iu| likes[iu * count..(iu + 1) * count].iter().sum())
            .collect();
        let col_sums_allowed_u: Vec<f64> = (0..count)
            .map(|iv| (0..count).map(|iu| likes[iu * count + iv]).sum())
            .collect();
        ExhaustiveOracle {
            q,
            big_n,
            likes,
            digits,
            row_sums,
            allowed_u: vec![true; count],
            allowed_v: vec![true; count],
            col_sums_allowed_u,
            committed_v: vec![None; big_n],
        }
    }

    fn count(&self) -> usize {
        self.digits.len()
    }

    /// Posterior over candidates for the next decision (before committing
    /// it), given everything committed so far.
    pub fn posterior(&self, stage: u8, pos0: usize) -> Vec<f64> {
        let count = self.count();
        let mut w = vec![0.0f64; self.q];
        match stage {
            1 => {
                for iu in 0..count {
                    if self.allowed_u[iu] {
                        w[self.digits[iu][pos0] as usize] += self.row_sums[iu];
                    }
                }
            }
            2 => {
                for iv in 0..count {
                    if self.allowed_v[iv] {
                        w[self.digits[iv][pos0] as usize] += self.col_sums_allowed_u[iv];
                    }
                }
            }
            3 => {
                // User 2 is fully committed by now: exactly one iv remains.
                let iv = (0..count)
                    .find(|&iv| self.allowed_v[iv])
                    .expect("stage 3 requires a fully committed v block");
                for iu in 0..count {
                    if self.allowed_u[iu] {
                        w[self.digits[iu][pos0] as usize] += self.likes[iu * count + iv];
                    }
                }
            }
            _ => panic!("stage {stage} out of range"),
        }
        w
    }

    /// Commits one decision, shrinking the consistent set.
    pub fn commit(&mut self, stage: u8, pos0: usize, symbol: Symbol) {
        let count = self.count();
        if stage == 2 {
            for iv in 0..count {
                if self.allowed_v[iv] && self.digits[iv][pos0] != symbol {
                    self.allowed_v[iv] = false;
                }
            }
            self.committed_v[pos0] = Some(symbol);
        } else {
            for iu in 0..count {
                if self.allowed_u[iu] && self.digits[iu][pos0] != symbol {
                    self.allowed_u[iu] = false;
                }
            }
            // The u-restricted column sums feed stage-2 posteriors.
            for iv in 0..count {
                let mut s = 0.0;
                for iu in 0..count {
                    if self.allowed_u[iu] {
                        s += self.likes[iu * count + iv];
                    }
                }
                self.col_sums_allowed_u[iv] = s;
            }
        }
    }
}

/// Outcome of replaying one decoded block against the oracle.
#[derive(Debug, Default, Clone, Copy)]
pub struct ReplayStats {
    pub decisions: u64,
    /// Decisions where the posterior had multiple maximizers (within
    /// relative 1e-9) and the decoder picked one of them.
    pub ties: u64,
    /// Decisions where the decoder's pick was strictly dominated.
    pub mismatches: u64,
}

impl ReplayStats {
    pub fn absorb(&mut self, o: ReplayStats) {
        self.decisions += o.decisions;
        self.ties += o.ties;
        self.mismatches += o.mismatches;
    }
}

/// Replays a decode trace decision by decision: at every step the decoder's
/// committed symbol must be a maximizer of the exhaustive posterior.
/// Frozen positions are commitments, not decisions: they are fed to the
/// oracle but not checked (the decoder pins them to zero by construction).
pub fn replay_trace(
    cfg: &CodeConfig,
    rx: &RxBlock,
    params: &ChannelParams,
    trace: &[TraceEntry],
) -> ReplayStats {
    let mut oracle = ExhaustiveOracle::new(cfg, rx, params);
    let mut stats = ReplayStats::default();
    for e in trace {
        let pos0 = e.index - 1;
        let user = if e.stage == 2 { User::User2 } else { User::User1 };
        if cfg.frozen_mask(user)[pos0] {
            assert_eq!(e.symbol, 0, "frozen positions carry zero");
            oracle.commit(e.stage, pos0, 0);
            continue;
        }
        let w = oracle.posterior(e.stage, pos0);
        let best = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let tol = best * 1e-9;
        let maximizers = w.iter().filter(|&&x| x >= best - tol).count();
        stats.decisions += 1;
        if w[e.symbol as usize] < best - tol {
            stats.mismatches += 1;
        } else if maximizers > 1 {
            stats.ties += 1;
        }
        oracle.commit(e.stage, pos0, e.symbol);
    }
    stats
}

/// Monte Carlo maximum-likelihood symbol-error rate of the single-user
/// basic structure: u = (0, u2) encoded with factor `alpha`, BPSK over
/// AWGN, exact ML detection of u2.
pub fn mc_single_user_error(field: &Field, alpha: Symbol, sigma: f64, trials: u64, seed: u64) -> f64 {
    let q = field.q();
    let r = field.r() as usize;
    // Candidate signal vectors: serialize (alpha*a, a).
    let signals: Vec<Vec<f64>> = (0..q as u8)
        .map(|a| {
            let syms = [field.mul(alpha, a), a];
            symbols_to_bits(field, &syms)
                .iter()
                .map(|&b| 1.0 - 2.0 * b as f64)
                .collect()
        })
        .collect();
    let len = 2 * r;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).unwrap();
    let mut errors = 0u64;
    let mut z = vec![0.0f64; len];
    for _ in 0..trials {
        let truth = rng.gen_range(0..q) as u8;
        for (t, zt) in z.iter_mut().enumerate() {
            *zt = signals[truth as usize][t] + normal.sample(&mut rng);
        }
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (a, sig) in signals.iter().enumerate() {
            let d: f64 = sig.iter().zip(&z).map(|(s, zt)| (zt - s) * (zt - s)).sum();
            if d < best_d {
                best_d = d;
                best = a;
            }
        }
        if best as u8 != truth {
            errors += 1;
        }
    }
    errors as f64 / trials as f64
}

/// Monte Carlo maximum-likelihood symbol-error rate of the combined
/// structure: u = (0, u2) with `alpha_u`, v = (0, v2) with `alpha_v`, both
/// on the adder AWGN channel; joint ML over (u2, v2); an error is a wrong
/// v2 regardless of u2.
pub fn mc_two_user_error(
    field: &Field,
    alpha_u: Symbol,
    alpha_v: Symbol,
    sigma: f64,
    trials: u64,
    seed: u64,
) -> f64 {
    let q = field.q();
    let r = field.r() as usize;
    let len = 2 * r;
    let serialize = |alpha: Symbol, w: u8| -> Vec<f64> {
        let syms = [field.mul(alpha, w), w];
        symbols_to_bits(field, &syms)
            .iter()
            .map(|&b| 1.0 - 2.0 * b as f64)
            .collect()
    };
    let x_sig: Vec<Vec<f64>> = (0..q as u8).map(|c| serialize(alpha_u, c)).collect();
    let y_sig: Vec<Vec<f64>> = (0..q as u8).map(|b| serialize(alpha_v, b)).collect();
    // Joint hypothesis signals, indexed c * q + b.
    let mut sums = vec![0.0f64; q * q * len];
    for c in 0..q {
        for b in 0..q {
            for t in 0..len {
                sums[(c * q + b) * len + t] = x_sig[c][t] + y_sig[b][t];
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).unwrap();
    let mut errors = 0u64;
    let mut z = vec![0.0f64; len];
    for _ in 0..trials {
        let u2 = rng.gen_range(0..q);
        let v2 = rng.gen_range(0..q);
        for t in 0..len {
            z[t] = x_sig[u2][t] + y_sig[v2][t] + normal.sample(&mut rng);
        }
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for h in 0..q * q {
            let sig = &sums[h * len..(h + 1) * len];
            let mut d = 0.0;
            for t in 0..len {
                let diff = z[t] - sig[t];
                d += diff * diff;
            }
            if d < best_d {
                best_d = d;
                best = h;
            }
        }
        if best % q != v2 {
            errors += 1;
        }
    }
    errors as f64 / trials as f64
}

/// Interpolated Eb/N0 at a target BLER for the measured curve and for its
/// Wilson-interval edges: (optimistic, central, pessimistic). `None` when
/// the respective curve never brackets the target.
pub fn threshold_band(points: &[BlerPoint], target: f64) -> (Option<f64>, Option<f64>, Option<f64>) {
    let curve = |shift: f64| -> Vec<(f64, f64)> {
        points
            .iter()
            .map(|p| {
                let b = (p.bler_joint + shift * p.ci_halfwidth).max(1e-12);
                (p.ebn0_db, b)
            })
            .collect()
    };
    (
        nbpolar::sim::ebn0_at_target_bler(&curve(-1.0), target),
        nbpolar::sim::ebn0_at_target_bler(&curve(0.0), target),
        nbpolar::sim::ebn0_at_target_bler(&curve(1.0), target),
    )
}
