//! Monte Carlo block-error-rate campaigns over an Eb/N0 sweep.
//!
//! A campaign runs one point per grid entry: random information blocks for
//! both users are encoded, sent through the two-user adder channel, and
//! jointly decoded; a block error is counted jointly when either user's
//! information symbols come back wrong (per-user tallies are kept too).
//! Points stop adaptively once enough joint block errors accumulate, or at
//! the block cap.
//!
//! Reproducibility is a hard guarantee, not best effort: every block's RNG
//! seed is derived from (campaign seed, grid index, block index), blocks
//! are processed in fixed-size batches whose stop decisions fall on batch
//! boundaries, and per-block outcomes are combined by summing counters.
//! None of that depends on thread scheduling, so a rerun with any worker
//! count reproduces the output byte for byte.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{derive_seed, symbols_to_bits, transmit_with_rng, ChannelParams};
use crate::decoder::JointScDecoder;
use crate::gf::Symbol;
use crate::polar::{CodeConfig, User};
use crate::{Error, Result};

pub const DEFAULT_MIN_BLOCK_ERRORS: u64 = 100;
pub const DEFAULT_MAX_BLOCKS: u64 = 2_000_000;

/// Blocks per scheduling batch. Adaptive stopping is evaluated only at
/// batch boundaries, which quantizes the block count identically for every
/// worker count.
pub const BATCH_BLOCKS: u64 = 512;

/// One full sweep specification.
#[derive(Debug, Clone)]
pub struct Campaign {
    pub cfg: CodeConfig,
    /// Eb/N0 grid in dB, ascending.
    pub ebn0_grid_db: Vec<f64>,
    /// Rate used for the Eb/N0 to noise-variance conversion.
    pub rate: f64,
    pub min_block_errors: u64,
    pub max_blocks: u64,
    pub seed: u64,
    /// Worker threads (0 = one per core).
    pub workers: usize,
}

/// Measurements at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct BlerPoint {
    pub ebn0_db: f64,
    pub blocks: u64,
    pub blkerr_u: u64,
    pub blkerr_v: u64,
    pub blkerr_joint: u64,
    pub bler_joint: f64,
    /// 95% Wilson interval half-width on the joint BLER.
    pub ci_halfwidth: f64,
    /// Per-user symbol error rates over information positions.
    pub ser_u: f64,
    pub ser_v: f64,
}

/// CSV column order used by [`BlerPoint::csv_row`].
pub const CSV_HEADER: &str =
    "ebn0_db,blocks,blkerr_u,blkerr_v,blkerr_joint,bler_joint,ci_halfwidth,ser_u,ser_v";

impl BlerPoint {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.ebn0_db,
            self.blocks,
            self.blkerr_u,
            self.blkerr_v,
            self.blkerr_joint,
            self.bler_joint,
            self.ci_halfwidth,
            self.ser_u,
            self.ser_v
        )
    }
}

/// Everything needed to reproduce a campaign, serialized alongside its CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CampaignProvenance {
    pub tool_version: String,
    pub field_r: u32,
    pub field_poly: u32,
    pub n: u32,
    pub block_len: usize,
    pub info_len: usize,
    pub alpha_u: Symbol,
    pub alpha_v: Symbol,
    pub stage_split: usize,
    pub frozen_u: Vec<usize>,
    pub frozen_v: Vec<usize>,
    pub rate: f64,
    pub ebn0_grid_db: Vec<f64>,
    pub min_block_errors: u64,
    pub max_blocks: u64,
    pub batch_blocks: u64,
    pub seed: u64,
    pub workers: usize,
}

#[derive(Debug, Clone, Copy, Default)]
struct Counts {
    blocks: u64,
    be_u: u64,
    be_v: u64,
    be_joint: u64,
    se_u: u64,
    se_v: u64,
}

impl Counts {
    fn add(mut self, o: Counts) -> Counts {
        self.blocks += o.blocks;
        self.be_u += o.be_u;
        self.be_v += o.be_v;
        self.be_joint += o.be_joint;
        self.se_u += o.se_u;
        self.se_v += o.se_v;
        self
    }
}

/// 95% Wilson score interval half-width for `errors` successes in
/// `trials`.
pub fn wilson_halfwidth(errors: u64, trials: u64) -> f64 {
    if trials == 0 {
        return 0.0;
    }
    let z = 1.959_963_984_540_054_f64;
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n)
}

impl Campaign {
    /// Campaign with default stopping rules and a grid; the conversion
    /// rate defaults to the code's information rate `K/N`.
    pub fn new(cfg: CodeConfig, ebn0_grid_db: Vec<f64>) -> Campaign {
        let rate = cfg.info_len() as f64 / cfg.block_len() as f64;
        Campaign {
            cfg,
            ebn0_grid_db,
            rate,
            min_block_errors: DEFAULT_MIN_BLOCK_ERRORS,
            max_blocks: DEFAULT_MAX_BLOCKS,
            seed: 0,
            workers: 1,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.min_block_errors == 0 {
            return Err(Error::InvalidParameter("min_block_errors must be at least 1".into()));
        }
        if self.max_blocks == 0 {
            return Err(Error::InvalidParameter("max_blocks must be at least 1".into()));
        }
        if self.ebn0_grid_db.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "Eb/N0 grid must be strictly ascending".into(),
            ));
        }
        Ok(())
    }

    pub fn provenance(&self) -> CampaignProvenance {
        CampaignProvenance {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            field_r: self.cfg.field().r(),
            field_poly: self.cfg.field().poly(),
            n: self.cfg.n(),
            block_len: self.cfg.block_len(),
            info_len: self.cfg.info_len(),
            alpha_u: self.cfg.alpha(User::User1),
            alpha_v: self.cfg.alpha(User::User2),
            stage_split: self.cfg.stage_split(),
            frozen_u: self.cfg.frozen_positions(User::User1),
            frozen_v: self.cfg.frozen_positions(User::User2),
            rate: self.rate,
            ebn0_grid_db: self.ebn0_grid_db.clone(),
            min_block_errors: self.min_block_errors,
            max_blocks: self.max_blocks,
            batch_blocks: BATCH_BLOCKS,
            seed: self.seed,
            workers: self.workers,
        }
    }

    fn build_pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))
    }

    /// One transmit-decode round; infallible because the campaign's own
    /// validated configuration produced every input.
    fn run_block(&self, dec: &mut JointScDecoder, params: &ChannelParams, point_idx: usize, block_idx: u64) -> Counts {
        let cfg = &self.cfg;
        let field = cfg.field();
        let q = field.q();
        let k = cfg.info_len();
        let mut rng =
            ChaCha8Rng::seed_from_u64(derive_seed(self.seed, point_idx as u64, block_idx));
        let info_u: Vec<Symbol> = (0..k).map(|_| rng.gen_range(0..q) as Symbol).collect();
        let info_v: Vec<Symbol> = (0..k).map(|_| rng.gen_range(0..q) as Symbol).collect();
        let u = cfg.insert_frozen(User::User1, &info_u).expect("validated config");
        let v = cfg.insert_frozen(User::User2, &info_v).expect("validated config");
        let x = cfg.encode(User::User1, &u).expect("validated config");
        let y = cfg.encode(User::User2, &v).expect("validated config");
        let rx = transmit_with_rng(
            &symbols_to_bits(field, &x),
            &symbols_to_bits(field, &y),
            params,
            field.r() as usize,
            &mut rng,
        )
        .expect("validated config");
        let out = dec.decode(&rx, params).expect("validated config");
        let got_u = cfg.extract_info(User::User1, &out.u_hat);
        let got_v = cfg.extract_info(User::User2, &out.v_hat);
        let se_u = info_u.iter().zip(&got_u).filter(|(a, b)| a != b).count() as u64;
        let se_v = info_v.iter().zip(&got_v).filter(|(a, b)| a != b).count() as u64;
        Counts {
            blocks: 1,
            be_u: (se_u > 0) as u64,
            be_v: (se_v > 0) as u64,
            be_joint: (se_u > 0 || se_v > 0) as u64,
            se_u,
            se_v,
        }
    }

    fn run_point_on(
        &self,
        pool: &rayon::ThreadPool,
        point_idx: usize,
        ebn0_db: f64,
    ) -> Result<BlerPoint> {
        let params = ChannelParams::from_ebn0_db(ebn0_db, self.rate)?;
        let mut total = Counts::default();
        while total.blocks < self.max_blocks && total.be_joint < self.min_block_errors {
            let batch = BATCH_BLOCKS.min(self.max_blocks - total.blocks);
            let start = total.blocks;
            let batch_counts = pool.install(|| {
                (start..start + batch)
                    .into_par_iter()
                    .fold(
                        || (None::<JointScDecoder>, Counts::default()),
                        |(mut dec, acc), b| {
                            let d = dec
                                .get_or_insert_with(|| JointScDecoder::new(self.cfg.clone()));
                            let c = self.run_block(d, &params, point_idx, b);
                            (dec, acc.add(c))
                        },
                    )
                    .map(|(_, acc)| acc)
                    .reduce(Counts::default, Counts::add)
            });
            total = total.add(batch_counts);
        }
        let blocks = total.blocks;
        let sym_trials = blocks * self.cfg.info_len() as u64;
        let rate_of = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        Ok(BlerPoint {
            ebn0_db,
            blocks,
            blkerr_u: total.be_u,
            blkerr_v: total.be_v,
            blkerr_joint: total.be_joint,
            bler_joint: rate_of(total.be_joint, blocks),
            ci_halfwidth: wilson_halfwidth(total.be_joint, blocks),
            ser_u: rate_of(total.se_u, sym_trials),
            ser_v: rate_of(total.se_v, sym_trials),
        })
    }

    /// Runs a single grid point (the grid index determines block seeds).
    pub fn run_point(&self, point_idx: usize) -> Result<BlerPoint> {
        self.validate()?;
        let db = *self
            .ebn0_grid_db
            .get(point_idx)
            .ok_or_else(|| Error::InvalidParameter(format!("no grid point {point_idx}")))?;
        self.run_point_on(&self.build_pool()?, point_idx, db)
    }

    /// Runs every grid point, invoking `on_point` as each completes (for
    /// incremental output).
    pub fn run_with(&self, mut on_point: impl FnMut(&BlerPoint)) -> Result<Vec<BlerPoint>> {
        self.validate()?;
        let pool = self.build_pool()?;
        let mut out = Vec::with_capacity(self.ebn0_grid_db.len());
        for (i, &db) in self.ebn0_grid_db.iter().enumerate() {
            let point = self.run_point_on(&pool, i, db)?;
            on_point(&point);
            out.push(point);
        }
        Ok(out)
    }

    /// Runs every grid point.
    pub fn run(&self) -> Result<Vec<BlerPoint>> {
        self.run_with(|_| {})
    }

    /// Full CSV document (header plus one row per point).
    pub fn to_csv(points: &[BlerPoint]) -> String {
        let mut s = String::with_capacity(64 * (points.len() + 1));
        s.push_str(CSV_HEADER);
        s.push('\n');
        for p in points {
            s.push_str(&p.csv_row());
            s.push('\n');
        }
        s
    }
}

/// Interpolates the Eb/N0 (dB) at which the BLER crosses `target`,
/// linearly on the (dB, log10 BLER) plane, scanning ascending dB for the
/// first bracketing pair. Zero-BLER points cannot be placed on the log
/// axis and are skipped. Returns `None` when the sweep never crosses the
/// target.
pub fn ebn0_at_target_bler(points: &[(f64, f64)], target: f64) -> Option<f64> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|&&(_, bler)| bler > 0.0)
        .map(|&(db, bler)| (db, bler.log10()))
        .collect();
    let lt = target.log10();
    for w in usable.windows(2) {
        let (db0, l0) = w[0];
        let (db1, l1) = w[1];
        if (l0 >= lt && lt >= l1) || (l1 >= lt && lt >= l0) {
            if (l0 - l1).abs() < 1e-12 {
                return Some(db0);
            }
            let t = (l0 - lt) / (l0 - l1);
            return Some(db0 + t * (db1 - db0));
        }
    }
    None
}
