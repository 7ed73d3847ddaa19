//! Analytic kernel-factor evaluation and ranking.
//!
//! The decisive error events of the three-stage decoder happen inside a
//! single 2x2 kernel: stage three sees the single-user basic structure
//! (`x_1 = u_1 + alpha_u * u_2`, `x_2 = u_2`, user 2 fully known) and stage
//! two sees the combined structure where the other user's second symbol is
//! still unresolved. For each candidate kernel factor this module computes
//! a closed-form estimate of the symbol-error rate of that one decision
//! under maximum-likelihood detection and a pairwise-independence
//! approximation: for the true transmit vector and each rival, the
//! log-likelihood difference is a Gaussian whose mean is the squared
//! Euclidean distance between the (real-valued) noiseless signals, so each
//! pairwise correct-decision probability is a standard normal CDF value
//! and the overall correct probability is approximated by their product.
//!
//! For the two-user structure the rival likelihood is a sum over the q
//! own-user completions consistent with `u_1`; it is approximated by its
//! dominant term, the completion whose noiseless channel sums lie nearest
//! to the transmitted ones. When that nearest rival coincides with the
//! transmitted signal exactly (possible only for `alpha_u = alpha_v`), the
//! pairwise probability degenerates to a fair coin, producing the error
//! floor that makes equal kernel factors the worst choice.
//!
//! Two variance conventions for the pairwise Gaussian are provided (see
//! [`VarianceForm`]); they differ only in positions where both compared
//! bits are one.

use crate::gf::{Field, Symbol};
use crate::{Error, Result};
use libm::erfc;

/// Standard normal CDF via the complementary error function.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Variance convention for the pairwise log-likelihood-difference
/// Gaussian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VarianceForm {
    /// `sigma_q^2 = sum (x_true^2 + x_rival^2) * sigma^2`. The default.
    #[default]
    SumOfSquares,
    /// `sigma_q^2 = sum (x_true - x_rival)^2 * sigma^2`, the variance that
    /// falls out of differencing the two exponents directly.
    SquaredDifference,
}

/// One pairwise true-vs-rival comparison.
#[derive(Debug, Clone, Copy)]
pub struct PairwiseErrorTerm {
    /// Mean of the decision statistic: squared distance between the
    /// noiseless signal vectors.
    pub mu_q: f64,
    /// Variance of the decision statistic under the chosen convention.
    pub sigma_q2: f64,
    /// Probability the true hypothesis beats this rival.
    pub prob_correct_term: f64,
}

/// Evaluates one true-vs-rival comparison between two real-valued
/// noiseless signal vectors observed through Gaussian noise of standard
/// deviation `sigma` per sample.
pub fn pairwise_error_term(
    tx_true: &[f64],
    tx_rival: &[f64],
    sigma: f64,
    form: VarianceForm,
) -> PairwiseErrorTerm {
    debug_assert_eq!(tx_true.len(), tx_rival.len());
    let mut mu_q = 0.0;
    let mut var_sum = 0.0;
    for (&t, &r) in tx_true.iter().zip(tx_rival) {
        let d = t - r;
        mu_q += d * d;
        var_sum += match form {
            VarianceForm::SumOfSquares => t * t + r * r,
            VarianceForm::SquaredDifference => d * d,
        };
    }
    let sigma_q2 = var_sum * sigma * sigma;
    let prob_correct_term = if sigma_q2 > 0.0 {
        std_normal_cdf(mu_q / sigma_q2.sqrt())
    } else if mu_q > 0.0 {
        1.0
    } else {
        // Identical signals: the comparison is a fair coin.
        0.5
    };
    PairwiseErrorTerm {
        mu_q,
        sigma_q2,
        prob_correct_term,
    }
}

fn check_alpha(field: &Field, alpha: Symbol) -> Result<()> {
    if alpha == 0 || alpha as usize >= field.q() {
        return Err(Error::InvalidParameter(format!(
            "kernel factor {alpha} must be a nonzero element of GF({})",
            field.q()
        )));
    }
    Ok(())
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "noise standard deviation {sigma} must be positive"
        )));
    }
    Ok(())
}

/// Serializes the kernel outputs `(alpha*w, w)` of one symbol `w` as `2r`
/// real bit values.
fn kernel_bits(field: &Field, alpha: Symbol, w: Symbol, out: &mut Vec<f64>) {
    out.clear();
    let r = field.r();
    let first = field.mul(alpha, w);
    for t in 0..r {
        out.push(((first >> t) & 1) as f64);
    }
    for t in 0..r {
        out.push(((w >> t) & 1) as f64);
    }
}

/// Both error figures for one candidate factor: the symbol-error estimate
/// (one minus the product of pairwise correct probabilities) and the
/// union-bound bit-error estimate (each rival's error weighted by the
/// fraction of message bits it flips).
#[derive(Debug, Clone, Copy)]
pub struct ErrorFigures {
    pub symbol: f64,
    pub per_bit: f64,
}

/// Single-user basic-structure decision figures (the stage-three kernel):
/// with `u_1 = 0`, the second symbol `u_2` is detected against all q-1
/// rivals, averaged over every transmitted value.
pub fn single_user_figures(
    field: &Field,
    alpha: Symbol,
    sigma: f64,
    form: VarianceForm,
) -> Result<ErrorFigures> {
    check_alpha(field, alpha)?;
    check_sigma(sigma)?;
    let q = field.q();
    let r = field.r() as f64;
    let mut tx_true = Vec::new();
    let mut tx_rival = Vec::new();
    let mut err_sum = 0.0;
    let mut bit_sum = 0.0;
    for s in 0..q as u8 {
        kernel_bits(field, alpha, s, &mut tx_true);
        let mut p_correct = 1.0;
        let mut bits = 0.0;
        for a in 0..q as u8 {
            if a == s {
                continue;
            }
            kernel_bits(field, alpha, a, &mut tx_rival);
            let term = pairwise_error_term(&tx_true, &tx_rival, sigma, form).prob_correct_term;
            p_correct *= term;
            bits += ((s ^ a).count_ones() as f64 / r) * (1.0 - term);
        }
        err_sum += 1.0 - p_correct;
        bit_sum += bits;
    }
    Ok(ErrorFigures {
        symbol: err_sum / q as f64,
        per_bit: bit_sum / q as f64,
    })
}

/// Average symbol-error estimate of the single-user basic-structure
/// decision. See [`single_user_figures`].
pub fn single_user_error(
    field: &Field,
    alpha: Symbol,
    sigma: f64,
    form: VarianceForm,
) -> Result<f64> {
    Ok(single_user_figures(field, alpha, sigma, form)?.symbol)
}

/// Combined-structure decision figures (the stage-two kernel): with
/// `u_1 = v_1 = 0`, user 2's second symbol `v_2` is detected while user
/// 1's `u_2` is still open. Each rival hypothesis is represented by its
/// dominant own-user completion: the consistent `(x_1, x_2) =
/// (alpha_u*c, c)` minimizing the squared distance between the noiseless
/// two-user channel sums (bitwise real sums in {0,1,2}), ties broken
/// toward the smallest completion symbol.
pub fn two_user_figures(
    field: &Field,
    alpha_u: Symbol,
    alpha_v: Symbol,
    sigma: f64,
    form: VarianceForm,
) -> Result<ErrorFigures> {
    check_alpha(field, alpha_u)?;
    check_alpha(field, alpha_v)?;
    check_sigma(sigma)?;
    let q = field.q();
    let r = field.r() as f64;
    // Precompute the bit serializations of every symbol's kernel output.
    let mut x_out: Vec<Vec<f64>> = Vec::with_capacity(q);
    let mut y_out: Vec<Vec<f64>> = Vec::with_capacity(q);
    for w in 0..q as u8 {
        let mut bx = Vec::new();
        kernel_bits(field, alpha_u, w, &mut bx);
        x_out.push(bx);
        let mut by = Vec::new();
        kernel_bits(field, alpha_v, w, &mut by);
        y_out.push(by);
    }
    let len = 2 * field.r() as usize;
    let mut w_true = vec![0.0; len];
    let mut w_rival = vec![0.0; len];
    let mut w_best = vec![0.0; len];
    let mut err_sum = 0.0;
    let mut bit_sum = 0.0;
    for u2 in 0..q {
        for v2 in 0..q {
            for i in 0..len {
                w_true[i] = x_out[u2][i] + y_out[v2][i];
            }
            let mut p_correct = 1.0;
            let mut bits = 0.0;
            for rv in 0..q {
                if rv == v2 {
                    continue;
                }
                // Dominant completion for this rival.
                let mut best_d = f64::INFINITY;
                for c in 0..q {
                    let mut d = 0.0;
                    for i in 0..len {
                        w_rival[i] = x_out[c][i] + y_out[rv][i];
                        let diff = w_true[i] - w_rival[i];
                        d += diff * diff;
                    }
                    if d < best_d {
                        best_d = d;
                        w_best.copy_from_slice(&w_rival);
                    }
                }
                let term =
                    pairwise_error_term(&w_true, &w_best, sigma, form).prob_correct_term;
                p_correct *= term;
                bits += ((v2 as u8 ^ rv as u8).count_ones() as f64 / r) * (1.0 - term);
            }
            err_sum += 1.0 - p_correct;
            bit_sum += bits;
        }
    }
    Ok(ErrorFigures {
        symbol: err_sum / (q * q) as f64,
        per_bit: bit_sum / (q * q) as f64,
    })
}

/// Average symbol-error estimate of the combined-structure decision. See
/// [`two_user_figures`].
pub fn two_user_error(
    field: &Field,
    alpha_u: Symbol,
    alpha_v: Symbol,
    sigma: f64,
    form: VarianceForm,
) -> Result<f64> {
    Ok(two_user_figures(field, alpha_u, alpha_v, sigma, form)?.symbol)
}

/// Which kernel decision a ranking evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankMode {
    /// Stage-three single-user structure; candidates are `alpha_u`.
    Single,
    /// Stage-two combined structure with a fixed `alpha_u`; candidates are
    /// `alpha_v`.
    Joint,
}

impl std::fmt::Display for RankMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RankMode::Single => "single",
            RankMode::Joint => "joint",
        })
    }
}

/// One ranked candidate.
#[derive(Debug, Clone, Copy)]
pub struct KernelEntry {
    pub alpha: Symbol,
    /// Symbol-error estimate of the kernel decision; the ranking key.
    pub error: f64,
    /// Union-bound bit-error estimate: each rival's error term weighted by
    /// the fraction of the r message bits it flips. A bound, not a
    /// probability — it can exceed 1 at high noise.
    pub error_per_bit: f64,
}

/// Ranking of every nonzero kernel factor at one noise level, ascending by
/// error.
#[derive(Debug, Clone)]
pub struct KernelReport {
    pub r: u32,
    pub poly: u32,
    pub sigma: f64,
    pub mode: RankMode,
    pub fixed_alpha_u: Option<Symbol>,
    pub form: VarianceForm,
    pub entries: Vec<KernelEntry>,
}

impl KernelReport {
    /// Best candidate (smallest error).
    pub fn best(&self) -> Symbol {
        self.entries[0].alpha
    }

    /// The `k` best candidates in ranking order.
    pub fn top(&self, k: usize) -> Vec<Symbol> {
        self.entries.iter().take(k).map(|e| e.alpha).collect()
    }

    /// CSV rendering: comment header describing the evaluation, then
    /// `alpha,error,error_per_bit` rows in ranking order.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("# field: GF({}) poly={}\n", 1u32 << self.r, self.poly));
        s.push_str(&format!("# sigma: {}\n", self.sigma));
        match self.fixed_alpha_u {
            Some(au) => s.push_str(&format!("# mode: {} (alpha_u={au})\n", self.mode)),
            None => s.push_str(&format!("# mode: {}\n", self.mode)),
        }
        s.push_str("alpha,error,error_per_bit\n");
        for e in &self.entries {
            s.push_str(&format!("{},{},{}\n", e.alpha, e.error, e.error_per_bit));
        }
        s
    }
}

/// Evaluates every nonzero kernel factor at one noise level and ranks
/// ascending by error (ties toward the smaller factor). `Joint` mode
/// requires the fixed user-1 factor.
pub fn rank_kernels(
    field: &Field,
    sigma: f64,
    mode: RankMode,
    fixed_alpha_u: Option<Symbol>,
    form: VarianceForm,
) -> Result<KernelReport> {
    check_sigma(sigma)?;
    if mode == RankMode::Joint && fixed_alpha_u.is_none() {
        return Err(Error::InvalidParameter(
            "joint ranking requires a fixed alpha_u".into(),
        ));
    }
    let mut entries = Vec::with_capacity(field.q() - 1);
    for alpha in field.nonzero_symbols() {
        let figures = match mode {
            RankMode::Single => single_user_figures(field, alpha, sigma, form)?,
            RankMode::Joint => {
                two_user_figures(field, fixed_alpha_u.unwrap(), alpha, sigma, form)?
            }
        };
        entries.push(KernelEntry {
            alpha,
            error: figures.symbol,
            error_per_bit: figures.per_bit,
        });
    }
    entries.sort_by(|a, b| a.error.total_cmp(&b.error).then(a.alpha.cmp(&b.alpha)));
    Ok(KernelReport {
        r: field.r(),
        poly: field.poly(),
        sigma,
        mode,
        fixed_alpha_u: if mode == RankMode::Joint { fixed_alpha_u } else { None },
        form,
        entries,
    })
}
