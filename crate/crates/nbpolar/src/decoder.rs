//! Joint successive-cancellation decoding of both users' polar codes.
//!
//! The decoder runs one binary tree per user. A node at depth `d` (root =
//! depth 1) holds `rho = 2^(n-d+1)` probability matrices `Phi`; entry
//! `Phi[l]` is a q-by-q likelihood table over the pair (own user's partial
//! sum, other user's partial sum) at that tree position. Leaves correspond
//! to message symbols `u_1..u_N` in natural order; the root entries are the
//! per-position channel likelihoods, indexed bit-reversed so the whole tree
//! works in the natural butterfly order of [`crate::polar::transform`].
//!
//! Descending computes children from parents ([`f_step`] left, [`g_step`]
//! right), ascending re-encodes decided leaves into partial sums `beta`
//! ([`update_beta`]). What makes the two-user decoder different from two
//! independent ones is `theta`: once the *other* user's decided prefix
//! fully determines its partial sum at a tree position, that value is
//! pinned in every later probability update instead of being marginalized.
//! Both `f` and `g` therefore come in four variants, selected by which of
//! the two child positions carry a known `theta`.
//!
//! Decoding runs in three stages: the first `M` symbols of user 1 (no
//! `theta` anywhere), all of user 2 (`theta` from user 1's prefix), then
//! the rest of user 1 (`theta` from the full user-2 decision vector),
//! resuming the user-1 tree exactly where stage one paused. All
//! probabilities live in the linear domain; every computed matrix is
//! normalized to sum one, which never changes an argmax.

use crate::channel::{ChannelParams, RxBlock};
use crate::gf::{Field, Symbol};
use crate::polar::{bit_reversal_permutation, CodeConfig, User};
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Probability matrices
// ---------------------------------------------------------------------------

/// A q-by-q likelihood table; entry `(a, b)` is proportional to the
/// likelihood of (own-user symbol `a`, other-user symbol `b`) at one tree
/// position.
#[derive(Debug, Clone)]
pub struct ProbMatrix {
    q: usize,
    data: Vec<f64>,
}

impl ProbMatrix {
    /// The uniform matrix (all entries equal, summing to one).
    pub fn uniform(q: usize) -> ProbMatrix {
        ProbMatrix {
            q,
            data: vec![1.0 / (q * q) as f64; q * q],
        }
    }

    /// Wraps a row-major `q*q` buffer of nonnegative entries.
    pub fn from_data(q: usize, data: Vec<f64>) -> Result<ProbMatrix> {
        if data.len() != q * q {
            return Err(Error::LengthMismatch {
                what: "probability matrix buffer",
                got: data.len(),
                expected: q * q,
            });
        }
        if data.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidParameter(
                "probability entries must be finite and nonnegative".into(),
            ));
        }
        Ok(ProbMatrix { q, data })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    #[inline]
    pub fn get(&self, a: Symbol, b: Symbol) -> f64 {
        self.data[a as usize * self.q + b as usize]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Scales the matrix to sum one (or resets to uniform if degenerate).
    pub fn normalize(&mut self) {
        normalize(&mut self.data);
    }
}

/// Clamp tiny negative round-off to zero and scale to unit sum. A matrix
/// whose mass underflowed to zero everywhere carries no information and
/// becomes uniform.
fn normalize(m: &mut [f64]) {
    let mut sum = 0.0;
    for p in m.iter_mut() {
        if *p < 0.0 {
            *p = 0.0;
        }
        sum += *p;
    }
    if sum > 0.0 && sum.is_finite() {
        let inv = 1.0 / sum;
        for p in m.iter_mut() {
            *p *= inv;
        }
    } else {
        let u = 1.0 / m.len() as f64;
        for p in m.iter_mut() {
            *p = u;
        }
    }
}

/// Argmax over the own-user axis of the column-summed matrix, ties broken
/// toward the smallest symbol value.
fn argmax_row_marginal(m: &[f64], q: usize) -> Symbol {
    let mut best = 0usize;
    let mut best_val = f64::NEG_INFINITY;
    for a in 0..q {
        let s: f64 = m[a * q..(a + 1) * q].iter().sum();
        if s > best_val {
            best_val = s;
            best = a;
        }
    }
    best as Symbol
}

/// Stage-one decision: argmax over the own-user symbol after summing out
/// the (entirely unknown) other-user axis.
pub fn decide_stage1(phi: &ProbMatrix) -> Symbol {
    argmax_row_marginal(&phi.data, phi.q)
}

/// Stage-two/three decision: same argmax over the own-user axis. When the
/// other-user axis has been pinned by a known partial sum the column sum
/// reads exactly the pinned column; otherwise it marginalizes as in stage
/// one.
pub fn decide_stage23(phi: &ProbMatrix) -> Symbol {
    argmax_row_marginal(&phi.data, phi.q)
}

// ---------------------------------------------------------------------------
// Probability updates (f: left child, g: right child)
// ---------------------------------------------------------------------------

/// Precomputed per-tree constants for the hot update loops.
struct StepCtx {
    q: usize,
    /// `mo[c] = alpha_own * c`, `mt[d] = alpha_other * d`.
    mo: Vec<u8>,
    mt: Vec<u8>,
    /// Index permutation realizing `p2[inv(alpha_own)*c'][inv(alpha_other)*d']`
    /// for the transform-based convolution.
    p2_perm: Vec<u32>,
    /// Use the Walsh-Hadamard convolution for the full marginalization;
    /// only worthwhile once q*q dominates the transform overhead.
    use_wht: bool,
}

impl StepCtx {
    fn new(field: &Field, alpha_own: Symbol, alpha_other: Symbol) -> StepCtx {
        let q = field.q();
        let mo: Vec<u8> = (0..q).map(|c| field.mul(alpha_own, c as u8)).collect();
        let mt: Vec<u8> = (0..q).map(|d| field.mul(alpha_other, d as u8)).collect();
        let io = field.inv(alpha_own);
        let it = field.inv(alpha_other);
        let mut p2_perm = Vec::with_capacity(q * q);
        for cp in 0..q {
            let row = field.mul(io, cp as u8) as usize * q;
            for dp in 0..q {
                p2_perm.push((row + field.mul(it, dp as u8) as usize) as u32);
            }
        }
        StepCtx {
            q,
            mo,
            mt,
            p2_perm,
            use_wht: q >= 8,
        }
    }
}

/// Scratch buffers reused across updates.
struct Workspace {
    a: Vec<f64>,
    b: Vec<f64>,
    col: Vec<f64>,
}

impl Workspace {
    fn new(q: usize) -> Workspace {
        Workspace {
            a: vec![0.0; q * q],
            b: vec![0.0; q * q],
            col: vec![0.0; q],
        }
    }
}

/// In-place Walsh-Hadamard transform (unnormalized; self-inverse up to a
/// factor of the length).
fn wht_in_place(v: &mut [f64]) {
    let n = v.len();
    let mut h = 1;
    while h < n {
        let mut start = 0;
        while start < n {
            for i in start..start + h {
                let x = v[i];
                let y = v[i + h];
                v[i] = x + y;
                v[i + h] = x - y;
            }
            start += 2 * h;
        }
        h *= 2;
    }
}

fn wht_2d(m: &mut [f64], q: usize, col: &mut [f64]) {
    for row in m.chunks_mut(q) {
        wht_in_place(row);
    }
    for c in 0..q {
        for r in 0..q {
            col[r] = m[r * q + c];
        }
        wht_in_place(col);
        for r in 0..q {
            m[r * q + c] = col[r];
        }
    }
}

/// Full marginalization `out[a][b] = sum_{c,d} p1[a + mo[c]][b + mt[d]] *
/// p2[c][d]`, directly.
fn f0_direct_into(out: &mut [f64], p1: &[f64], p2: &[f64], ctx: &StepCtx) {
    let q = ctx.q;
    for a in 0..q {
        for b in 0..q {
            let mut s = 0.0;
            for c in 0..q {
                let row = (a ^ ctx.mo[c] as usize) * q;
                let p2row = c * q;
                for d in 0..q {
                    s += p1[row + (b ^ ctx.mt[d] as usize)] * p2[p2row + d];
                }
            }
            out[a * q + b] = s;
        }
    }
}

/// Same sum as [`f0_direct_into`] via the dyadic convolution theorem:
/// after index-scaling `p2`, the sum is an XOR-convolution over the group
/// GF(2)^(2r), diagonalized by the Walsh-Hadamard transform.
fn f0_wht_into(out: &mut [f64], p1: &[f64], p2: &[f64], ctx: &StepCtx, ws: &mut Workspace) {
    let q = ctx.q;
    ws.a.copy_from_slice(p1);
    for (dst, &src) in ws.b.iter_mut().zip(&ctx.p2_perm) {
        *dst = p2[src as usize];
    }
    wht_2d(&mut ws.a, q, &mut ws.col);
    wht_2d(&mut ws.b, q, &mut ws.col);
    for (x, &y) in ws.a.iter_mut().zip(&ws.b) {
        *x *= y;
    }
    wht_2d(&mut ws.a, q, &mut ws.col);
    // Scaling by 1/(q*q) is left to normalization; round-off can leave
    // tiny negatives which normalize() clamps.
    out.copy_from_slice(&ws.a);
}

/// Left-child probability update.
///
/// `p1`/`p2` are the parent entries at offsets `l` and `l + rho/2`; their
/// axes hold the one-stage-combined partial sums, so hypotheses (own left
/// `a`, own right `c`, other left `b`, other right `d`) address
/// `p1[a + alpha_own*c][b + alpha_other*d]` and `p2[c][d]`. `theta_dot` /
/// `theta_ddot` pin the other user's left / right child value when its
/// decided prefix determines them; unknown values are marginalized
/// uniformly. The output ranges over (own left `a`, other left `b`).
fn f_step_into(
    out: &mut [f64],
    p1: &[f64],
    p2: &[f64],
    ctx: &StepCtx,
    theta_dot: Option<Symbol>,
    theta_ddot: Option<Symbol>,
    ws: &mut Workspace,
) {
    let q = ctx.q;
    match (theta_dot, theta_ddot) {
        (None, None) => {
            if ctx.use_wht {
                f0_wht_into(out, p1, p2, ctx, ws);
            } else {
                f0_direct_into(out, p1, p2, ctx);
            }
        }
        (Some(b0), None) => {
            // Other user's left value known: pin the output column, still
            // marginalizing its unknown right value inside p1's column
            // index.
            out.fill(0.0);
            let b0 = b0 as usize;
            for a in 0..q {
                let mut s = 0.0;
                for c in 0..q {
                    let row = (a ^ ctx.mo[c] as usize) * q;
                    let p2row = c * q;
                    for d in 0..q {
                        s += p1[row + (b0 ^ ctx.mt[d] as usize)] * p2[p2row + d];
                    }
                }
                out[a * q + b0] = s;
            }
        }
        (None, Some(d0)) => {
            // Other user's right value known: its left value stays an open
            // output axis.
            let d0 = d0 as usize;
            let off = ctx.mt[d0] as usize;
            for a in 0..q {
                for b in 0..q {
                    let col = b ^ off;
                    let mut s = 0.0;
                    for c in 0..q {
                        s += p1[(a ^ ctx.mo[c] as usize) * q + col] * p2[c * q + d0];
                    }
                    out[a * q + b] = s;
                }
            }
        }
        (Some(b0), Some(d0)) => {
            // Both known: single pinned column on both parents.
            out.fill(0.0);
            let b0 = b0 as usize;
            let d0 = d0 as usize;
            let col = b0 ^ ctx.mt[d0] as usize;
            for a in 0..q {
                let mut s = 0.0;
                for c in 0..q {
                    s += p1[(a ^ ctx.mo[c] as usize) * q + col] * p2[c * q + d0];
                }
                out[a * q + b0] = s;
            }
        }
    }
    normalize(out);
}

/// Right-child probability update; `u_hat` is the own user's already
/// decided left-child value. Output ranges over (own right `c`, other
/// right `d`).
fn g_step_into(
    out: &mut [f64],
    p1: &[f64],
    p2: &[f64],
    ctx: &StepCtx,
    u_hat: Symbol,
    theta_dot: Option<Symbol>,
    theta_ddot: Option<Symbol>,
    ws: &mut Workspace,
) {
    let q = ctx.q;
    let u = u_hat as usize;
    match (theta_dot, theta_ddot) {
        (None, None) => {
            // Summing p1's column over the unknown other-left value sweeps
            // every column regardless of d, so it collapses to p1's row
            // marginal.
            let rm = &mut ws.col;
            for s in 0..q {
                rm[s] = p1[s * q..(s + 1) * q].iter().sum();
            }
            for c in 0..q {
                let w = rm[u ^ ctx.mo[c] as usize];
                let p2row = c * q;
                for d in 0..q {
                    out[c * q + d] = w * p2[p2row + d];
                }
            }
        }
        (Some(b0), None) => {
            let b0 = b0 as usize;
            for c in 0..q {
                let row = (u ^ ctx.mo[c] as usize) * q;
                let p2row = c * q;
                for d in 0..q {
                    out[c * q + d] = p1[row + (b0 ^ ctx.mt[d] as usize)] * p2[p2row + d];
                }
            }
        }
        (None, Some(d0)) => {
            out.fill(0.0);
            let d0 = d0 as usize;
            let rm = &mut ws.col;
            for s in 0..q {
                rm[s] = p1[s * q..(s + 1) * q].iter().sum();
            }
            for c in 0..q {
                out[c * q + d0] = rm[u ^ ctx.mo[c] as usize] * p2[c * q + d0];
            }
        }
        (Some(b0), Some(d0)) => {
            out.fill(0.0);
            let b0 = b0 as usize;
            let d0 = d0 as usize;
            let col = b0 ^ ctx.mt[d0] as usize;
            for c in 0..q {
                out[c * q + d0] = p1[(u ^ ctx.mo[c] as usize) * q + col] * p2[c * q + d0];
            }
        }
    }
    normalize(out);
}

/// Public left-child update on [`ProbMatrix`] values. `theta_dot` /
/// `theta_ddot` are the other user's left-branch / right-branch partial
/// sums at this position when already determined by its decided prefix.
pub fn f_step(
    field: &Field,
    p1: &ProbMatrix,
    p2: &ProbMatrix,
    alpha_own: Symbol,
    alpha_other: Symbol,
    theta_dot: Option<Symbol>,
    theta_ddot: Option<Symbol>,
) -> ProbMatrix {
    let ctx = StepCtx::new(field, alpha_own, alpha_other);
    let mut ws = Workspace::new(ctx.q);
    let mut out = vec![0.0; ctx.q * ctx.q];
    f_step_into(&mut out, &p1.data, &p2.data, &ctx, theta_dot, theta_ddot, &mut ws);
    ProbMatrix { q: ctx.q, data: out }
}

/// Public right-child update on [`ProbMatrix`] values; `u_hat` is the own
/// user's decided left-branch value.
#[allow(clippy::too_many_arguments)]
pub fn g_step(
    field: &Field,
    p1: &ProbMatrix,
    p2: &ProbMatrix,
    alpha_own: Symbol,
    alpha_other: Symbol,
    u_hat: Symbol,
    theta_dot: Option<Symbol>,
    theta_ddot: Option<Symbol>,
) -> ProbMatrix {
    let ctx = StepCtx::new(field, alpha_own, alpha_other);
    let mut ws = Workspace::new(ctx.q);
    let mut out = vec![0.0; ctx.q * ctx.q];
    g_step_into(&mut out, &p1.data, &p2.data, &ctx, u_hat, theta_dot, theta_ddot, &mut ws);
    ProbMatrix { q: ctx.q, data: out }
}

// ---------------------------------------------------------------------------
// Partial sums
// ---------------------------------------------------------------------------

/// Re-encodes two completed child partial-sum vectors into their parent's:
/// `(left[l] + alpha * right[l])` over the first half, `right[l]` over the
/// second (one butterfly stage).
pub fn update_beta(field: &Field, alpha: Symbol, left: &[Symbol], right: &[Symbol]) -> Vec<Symbol> {
    assert_eq!(left.len(), right.len());
    let mut parent = Vec::with_capacity(2 * left.len());
    for (&l, &r) in left.iter().zip(right) {
        parent.push(field.add(l, field.mul(alpha, r)));
    }
    parent.extend_from_slice(right);
    parent
}

/// Known other-user partial sums per tree node, or `None` where the
/// decided prefix does not determine them.
#[derive(Debug, Clone)]
pub struct ThetaMap {
    n: u32,
    /// Heap-indexed: node ids `1..2N`, id 1 = root, leaves `N..2N`.
    nodes: Vec<Option<Vec<Symbol>>>,
}

impl ThetaMap {
    /// Partial sums at the node addressed by depth (1-based, root = 1) and
    /// position within the depth (0-based).
    pub fn node(&self, depth: u32, pos: usize) -> Option<&[Symbol]> {
        let id = (1usize << (depth - 1)) + pos;
        self.nodes.get(id)?.as_deref()
    }

    /// Root partial sums (present only once the full block is decided).
    pub fn root(&self) -> Option<&[Symbol]> {
        self.node(1, 0)
    }

    pub fn n(&self) -> u32 {
        self.n
    }
}

/// Computes every partial sum of `alpha`-encoded user data that a decided
/// prefix determines: a node's vector is present exactly when all leaves
/// under it are decided, and then equals the butterfly re-encoding of
/// those leaves. With the full block decided, the root equals
/// [`crate::polar::transform`] of the decisions.
pub fn compute_theta(field: &Field, alpha: Symbol, n: u32, prefix: &[Symbol]) -> Result<ThetaMap> {
    let big_n = 1usize << n;
    if prefix.len() > big_n {
        return Err(Error::LengthMismatch {
            what: "decided prefix",
            got: prefix.len(),
            expected: big_n,
        });
    }
    let mut nodes: Vec<Option<Vec<Symbol>>> = vec![None; 2 * big_n];
    for (i, &s) in prefix.iter().enumerate() {
        nodes[big_n + i] = Some(vec![s]);
    }
    for id in (1..big_n).rev() {
        if let (Some(l), Some(r)) = (&nodes[2 * id], &nodes[2 * id + 1]) {
            nodes[id] = Some(update_beta(field, alpha, l, r));
        }
    }
    Ok(ThetaMap { n, nodes })
}

// ---------------------------------------------------------------------------
// Channel-side initialization
// ---------------------------------------------------------------------------

/// Which user owns the row axis of a tree's matrices.
#[derive(Clone, Copy)]
enum RootAxes {
    OwnIsUser1,
    OwnIsUser2,
}

/// Per-position channel likelihood table: entry `(x, y)` proportional to
/// `prod_t exp(-(z_t + 2*x_t + 2*y_t - 2)^2 / (2 sigma^2))` for the `r`
/// samples of one receive position. Returned in tree order, i.e. entry `l`
/// is built from receive position `bitrev(l)`.
pub fn init_root(rx: &RxBlock, params: &ChannelParams, field: &Field) -> Result<Vec<ProbMatrix>> {
    let n = rx.block_len().trailing_zeros();
    if rx.block_len() != 1 << n {
        return Err(Error::InvalidParameter("receive block length not a power of two".into()));
    }
    let q = field.q();
    let rev = bit_reversal_permutation(n);
    let mut out = Vec::with_capacity(rx.block_len());
    let mut buf = vec![0.0; q * q];
    for l in 0..rx.block_len() {
        root_entry_into(&mut buf, rx.symbol_samples(rev[l]), params.sigma2, field, RootAxes::OwnIsUser1);
        out.push(ProbMatrix { q, data: buf.clone() });
    }
    Ok(out)
}

/// Fills one root likelihood table from the `r` samples of a position.
fn root_entry_into(out: &mut [f64], samples: &[f64], sigma2: f64, field: &Field, axes: RootAxes) {
    let q = field.q();
    let r = field.r() as usize;
    debug_assert_eq!(samples.len(), r);
    // Per bit position, the exponent term only depends on x_t + y_t in
    // {0, 1, 2}. Shift by the per-bit minimum so the best joint hypothesis
    // has weight exactly 1 (underflow-safe at tiny sigma^2).
    let mut w = [[0.0f64; 3]; 8];
    let inv = 1.0 / (2.0 * sigma2);
    for (t, &z) in samples.iter().enumerate() {
        let mut e = [0.0f64; 3];
        for (s, es) in e.iter_mut().enumerate() {
            let v = z + 2.0 * s as f64 - 2.0;
            *es = v * v * inv;
        }
        let m = e[0].min(e[1]).min(e[2]);
        for s in 0..3 {
            w[t][s] = (-(e[s] - m)).exp();
        }
    }
    for x in 0..q {
        for y in 0..q {
            let mut p = 1.0;
            for (t, wt) in w.iter().enumerate().take(r) {
                let s = ((x >> t) & 1) + ((y >> t) & 1);
                p *= wt[s];
            }
            let idx = match axes {
                RootAxes::OwnIsUser1 => x * q + y,
                RootAxes::OwnIsUser2 => y * q + x,
            };
            out[idx] = p;
        }
    }
    normalize(out);
}

// ---------------------------------------------------------------------------
// Decode trees and the three-stage schedule
// ---------------------------------------------------------------------------

/// One decision in decode order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceEntry {
    /// 1 = user-1 prefix, 2 = user 2, 3 = user-1 remainder.
    pub stage: u8,
    /// 1-based position within the owning user's block.
    pub index: usize,
    pub symbol: Symbol,
}

impl std::fmt::Display for TraceEntry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{},{},{}", self.stage, self.index, self.symbol)
    }
}

/// Joint decode output: full estimated blocks (frozen zeros included) and
/// the optional decision trace.
#[derive(Debug, Clone)]
pub struct DecodeResult {
    pub u_hat: Vec<Symbol>,
    pub v_hat: Vec<Symbol>,
    pub trace: Option<Vec<TraceEntry>>,
}

/// Genie-aided decode outcome: which positions the decoder would have
/// gotten wrong when every earlier decision is corrected to the truth.
#[derive(Debug, Clone)]
pub struct GenieOutcome {
    pub err_u: Vec<bool>,
    pub err_v: Vec<bool>,
}

/// One user's decode tree, heap-indexed (root id 1, leaf `i` at `N + i`).
struct Tree {
    n: u32,
    q: usize,
    phi: Vec<Vec<f64>>,
    beta: Vec<Vec<Symbol>>,
    beta_set: Vec<bool>,
    theta: Vec<Option<Vec<Symbol>>>,
    /// Children not yet fully decoded (2/1/0); always 0 at leaves.
    pending: Vec<u8>,
    cursor: usize,
    decided: usize,
    ctx: StepCtx,
    ws: Workspace,
}

impl Tree {
    fn new(field: &Field, n: u32, alpha_own: Symbol, alpha_other: Symbol) -> Tree {
        let big_n = 1usize << n;
        let q = field.q();
        let node_count = 2 * big_n;
        let mut phi = Vec::with_capacity(node_count);
        let mut beta = Vec::with_capacity(node_count);
        phi.push(Vec::new()); // id 0 unused
        beta.push(Vec::new());
        for id in 1..node_count {
            let rho = big_n >> (usize::BITS - 1 - id.leading_zeros());
            phi.push(vec![0.0; rho * q * q]);
            beta.push(vec![0; rho]);
        }
        Tree {
            n,
            q,
            phi,
            beta,
            beta_set: vec![false; node_count],
            theta: vec![None; node_count],
            pending: vec![0; node_count],
            cursor: 1,
            decided: 0,
            ctx: StepCtx::new(field, alpha_own, alpha_other),
            ws: Workspace::new(q),
        }
    }

    fn big_n(&self) -> usize {
        1 << self.n
    }

    fn reset(&mut self) {
        let big_n = self.big_n();
        for id in 1..2 * big_n {
            self.beta_set[id] = false;
            self.theta[id] = None;
            self.pending[id] = if id < big_n { 2 } else { 0 };
        }
        self.cursor = 1;
        self.decided = 0;
    }

    fn rho(&self, id: usize) -> usize {
        self.big_n() >> (usize::BITS - 1 - id.leading_zeros())
    }

    fn install_theta(&mut self, map: ThetaMap) {
        debug_assert_eq!(map.n, self.n);
        self.theta = map.nodes;
    }

    /// Recomputes soft information along the active path (root to cursor)
    /// after newly installed other-user knowledge. Matrices computed before
    /// the install marginalized over values that are now pinned, so any
    /// still-to-be-read node must be refreshed; partial sums and pending
    /// counters track hard decisions and stay valid.
    fn refresh_path(&mut self) {
        let mut path = Vec::with_capacity(self.n as usize);
        let mut id = self.cursor;
        while id > 1 {
            path.push(id);
            id /= 2;
        }
        let qq = self.q * self.q;
        for &child in path.iter().rev() {
            let id = child / 2;
            let half = self.rho(id) / 2;
            let is_left = child % 2 == 0;
            let (pa, ch) = {
                let (lo, hi) = self.phi.split_at_mut(child);
                (&lo[id], &mut hi[0])
            };
            for l in 0..half {
                let p1 = &pa[l * qq..(l + 1) * qq];
                let p2 = &pa[(l + half) * qq..(l + half + 1) * qq];
                let out = &mut ch[l * qq..(l + 1) * qq];
                let t_dot = self.theta[2 * id].as_ref().map(|v| v[l]);
                let t_ddot = self.theta[2 * id + 1].as_ref().map(|v| v[l]);
                if is_left {
                    f_step_into(out, p1, p2, &self.ctx, t_dot, t_ddot, &mut self.ws);
                } else {
                    debug_assert!(self.beta_set[2 * id]);
                    let u_hat = self.beta[2 * id][l];
                    g_step_into(out, p1, p2, &self.ctx, u_hat, t_dot, t_ddot, &mut self.ws);
                }
            }
        }
    }

    fn init_root(&mut self, rx: &RxBlock, sigma2: f64, rev: &[usize], field: &Field, axes: RootAxes) {
        let qq = self.q * self.q;
        for l in 0..self.big_n() {
            let phi = &mut self.phi[1][l * qq..(l + 1) * qq];
            root_entry_into(phi, rx.symbol_samples(rev[l]), sigma2, field, axes);
        }
    }

    /// Walks the tree until the next leaf decision, applying
    /// `decide_commit(position, tentative) -> committed` there, and leaves
    /// the cursor at the deepest ancestor still missing a child (ready for
    /// the next call).
    fn advance(&mut self, frozen: &[bool], decide_commit: &mut dyn FnMut(usize, Symbol) -> Symbol) {
        let big_n = self.big_n();
        let qq = self.q * self.q;
        loop {
            let id = self.cursor;
            if id >= big_n {
                // Leaf: decide, commit, re-encode upward.
                let pos = id - big_n;
                let tentative = if frozen[pos] {
                    0
                } else {
                    argmax_row_marginal(&self.phi[id], self.q)
                };
                let committed = decide_commit(pos, tentative);
                self.beta[id][0] = committed;
                self.beta_set[id] = true;
                self.decided += 1;
                self.ascend_from(id);
                return;
            }
            let half = self.rho(id) / 2;
            let (child, is_left) = match self.pending[id] {
                2 => (2 * id, true),
                1 => (2 * id + 1, false),
                _ => unreachable!("descending into a completed node"),
            };
            // Split borrows: parent phi is read, child phi written.
            let (pa, ch) = {
                let (lo, hi) = self.phi.split_at_mut(child);
                (&lo[id], &mut hi[0])
            };
            for l in 0..half {
                let p1 = &pa[l * qq..(l + 1) * qq];
                let p2 = &pa[(l + half) * qq..(l + half + 1) * qq];
                let out = &mut ch[l * qq..(l + 1) * qq];
                let t_dot = self.theta[2 * id].as_ref().map(|v| v[l]);
                let t_ddot = self.theta[2 * id + 1].as_ref().map(|v| v[l]);
                if is_left {
                    f_step_into(out, p1, p2, &self.ctx, t_dot, t_ddot, &mut self.ws);
                } else {
                    let u_hat = self.beta[2 * id][l];
                    g_step_into(out, p1, p2, &self.ctx, u_hat, t_dot, t_ddot, &mut self.ws);
                }
            }
            self.cursor = child;
        }
    }

    /// Propagates completion from a finished subtree toward the root,
    /// combining partial sums, and parks the cursor at the first ancestor
    /// that still has a pending child.
    fn ascend_from(&mut self, mut id: usize) {
        while id > 1 {
            let parent = id / 2;
            self.pending[parent] -= 1;
            if self.pending[parent] > 0 {
                self.cursor = parent;
                return;
            }
            let (l, r) = (&self.beta[2 * parent], &self.beta[2 * parent + 1]);
            debug_assert!(self.beta_set[2 * parent] && self.beta_set[2 * parent + 1]);
            let mut combined = Vec::with_capacity(2 * l.len());
            for (&a, &b) in l.iter().zip(r.iter()) {
                combined.push(a ^ self.ctx.mo[b as usize]);
            }
            combined.extend_from_slice(r);
            self.beta[parent] = combined;
            self.beta_set[parent] = true;
            id = parent;
        }
        self.cursor = 1;
    }
}

/// Reusable joint decoder for one code configuration. Buffers are
/// allocated once and reused across blocks.
pub struct JointScDecoder {
    cfg: CodeConfig,
    tree_u: Tree,
    tree_v: Tree,
    rev: Vec<usize>,
    trace_enabled: bool,
}

impl JointScDecoder {
    pub fn new(cfg: CodeConfig) -> JointScDecoder {
        let n = cfg.n();
        let field = cfg.field();
        let (au, av) = (cfg.alpha(User::User1), cfg.alpha(User::User2));
        JointScDecoder {
            tree_u: Tree::new(field, n, au, av),
            tree_v: Tree::new(field, n, av, au),
            rev: bit_reversal_permutation(n),
            trace_enabled: false,
            cfg,
        }
    }

    /// Record a `stage,index,symbol` entry per decision (diagnostics).
    pub fn enable_trace(&mut self, on: bool) {
        self.trace_enabled = on;
    }

    pub fn config(&self) -> &CodeConfig {
        &self.cfg
    }

    /// Joint three-stage decode of one received block.
    pub fn decode(&mut self, rx: &RxBlock, params: &ChannelParams) -> Result<DecodeResult> {
        let mut commit = |_: User, _: usize, tentative: Symbol| tentative;
        let (u_hat, v_hat, trace) = self.run(rx, params, &mut commit)?;
        Ok(DecodeResult { u_hat, v_hat, trace })
    }

    /// Genie-aided decode: every decision is compared against the
    /// transmitted truth, the mismatch recorded, and the decision replaced
    /// by the truth before decoding continues. Used by code construction.
    pub fn decode_genie(
        &mut self,
        rx: &RxBlock,
        params: &ChannelParams,
        true_u: &[Symbol],
        true_v: &[Symbol],
    ) -> Result<GenieOutcome> {
        let big_n = self.cfg.block_len();
        if true_u.len() != big_n || true_v.len() != big_n {
            return Err(Error::LengthMismatch {
                what: "genie truth block",
                got: true_u.len().min(true_v.len()),
                expected: big_n,
            });
        }
        let mut err_u = vec![false; big_n];
        let mut err_v = vec![false; big_n];
        {
            let mut commit = |user: User, pos: usize, tentative: Symbol| {
                let truth = match user {
                    User::User1 => true_u[pos],
                    User::User2 => true_v[pos],
                };
                if tentative != truth {
                    match user {
                        User::User1 => err_u[pos] = true,
                        User::User2 => err_v[pos] = true,
                    }
                }
                truth
            };
            self.run(rx, params, &mut commit)?;
        }
        Ok(GenieOutcome { err_u, err_v })
    }

    fn run(
        &mut self,
        rx: &RxBlock,
        params: &ChannelParams,
        commit: &mut dyn FnMut(User, usize, Symbol) -> Symbol,
    ) -> Result<(Vec<Symbol>, Vec<Symbol>, Option<Vec<TraceEntry>>)> {
        let cfg = &self.cfg;
        let big_n = cfg.block_len();
        let field = cfg.field();
        if rx.block_len() != big_n {
            return Err(Error::LengthMismatch {
                what: "receive block",
                got: rx.block_len(),
                expected: big_n,
            });
        }
        if rx.bits_per_symbol() != field.r() as usize {
            return Err(Error::LengthMismatch {
                what: "samples per position",
                got: rx.bits_per_symbol(),
                expected: field.r() as usize,
            });
        }
        let m = cfg.stage_split();
        let mut trace = self.trace_enabled.then(Vec::new);
        let mut u_hat = vec![0 as Symbol; big_n];
        let mut v_hat = vec![0 as Symbol; big_n];

        // Stage one: user 1 up to the split, no other-user knowledge.
        self.tree_u.reset();
        self.tree_u
            .init_root(rx, params.sigma2, &self.rev, field, RootAxes::OwnIsUser1);
        let frozen_u = cfg.frozen_mask(User::User1);
        for _ in 0..m {
            let trace_ref = &mut trace;
            let u_ref = &mut u_hat;
            self.tree_u.advance(frozen_u, &mut |pos, tentative| {
                let sym = commit(User::User1, pos, tentative);
                u_ref[pos] = sym;
                if let Some(t) = trace_ref.as_mut() {
                    t.push(TraceEntry { stage: 1, index: pos + 1, symbol: sym });
                }
                sym
            });
        }

        // Stage two: all of user 2, pinning user-1 partial sums wherever
        // the length-M prefix determines them.
        self.tree_v.reset();
        self.tree_v
            .init_root(rx, params.sigma2, &self.rev, field, RootAxes::OwnIsUser2);
        self.tree_v.install_theta(compute_theta(
            field,
            cfg.alpha(User::User1),
            cfg.n(),
            &u_hat[..m],
        )?);
        let frozen_v = cfg.frozen_mask(User::User2);
        for _ in 0..big_n {
            let trace_ref = &mut trace;
            let v_ref = &mut v_hat;
            self.tree_v.advance(frozen_v, &mut |pos, tentative| {
                let sym = commit(User::User2, pos, tentative);
                v_ref[pos] = sym;
                if let Some(t) = trace_ref.as_mut() {
                    t.push(TraceEntry { stage: 2, index: pos + 1, symbol: sym });
                }
                sym
            });
        }

        // Stage three: resume user 1 where stage one paused; every user-2
        // partial sum is now known, so each fresh probability update pins
        // the full theta column.
        self.tree_u
            .install_theta(compute_theta(field, cfg.alpha(User::User2), cfg.n(), &v_hat)?);
        self.tree_u.refresh_path();
        for _ in m..big_n {
            let trace_ref = &mut trace;
            let u_ref = &mut u_hat;
            self.tree_u.advance(frozen_u, &mut |pos, tentative| {
                let sym = commit(User::User1, pos, tentative);
                u_ref[pos] = sym;
                if let Some(t) = trace_ref.as_mut() {
                    t.push(TraceEntry { stage: 3, index: pos + 1, symbol: sym });
                }
                sym
            });
        }

        Ok((u_hat, v_hat, trace))
    }

    /// Root partial sums of the user-1 tree after a full decode (equals
    /// the natural-order transform of the decisions). Testing hook.
    pub fn root_beta_user1(&self) -> Option<&[Symbol]> {
        self.tree_u.beta_set[1].then(|| self.tree_u.beta[1].as_slice())
    }
}

/// One-shot convenience wrapper around [`JointScDecoder`].
pub fn decode(rx: &RxBlock, cfg: &CodeConfig, params: &ChannelParams) -> Result<DecodeResult> {
    JointScDecoder::new(cfg.clone()).decode(rx, params)
}
