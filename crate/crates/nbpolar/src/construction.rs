//! Monte Carlo selection of frozen sets under the joint decoding order.
//!
//! Reliability of each position is estimated genie-aided: random messages
//! for both users are transmitted at a design noise level and decoded with
//! every position treated as information; after each symbol decision the
//! decoder's choice is compared against the truth (counting a per-position
//! error on mismatch) and then replaced by the truth, so downstream
//! decisions see a clean history and each position's error rate is
//! measured in isolation. The least reliable positions become the frozen
//! set.
//!
//! Estimation is deterministic for a given seed and worker count agnostic:
//! each trial derives its own RNG stream, and trial counters are summed,
//! so any partition of trials across threads yields identical profiles.
//! Profiles can be cached to a versioned plain-text file keyed by every
//! parameter that affects them.

use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{derive_seed, transmit_with_rng, symbols_to_bits, ChannelParams};
use crate::decoder::JointScDecoder;
use crate::gf::{Field, Symbol};
use crate::polar::{encode, CodeConfig, User};
use crate::{Error, Result};

/// Stream tag separating construction trials from other consumers of
/// [`derive_seed`] on the same base seed.
const CONSTRUCTION_STREAM: u64 = 0xC0DE;

/// Everything that determines a reliability profile.
#[derive(Debug, Clone)]
pub struct ConstructionConfig {
    pub field: Field,
    pub n: u32,
    pub alpha_u: Symbol,
    pub alpha_v: Symbol,
    /// Stage split of the decoding order.
    pub m: usize,
    /// Design noise variance per real sample.
    pub sigma2: f64,
    /// The design Eb/N0 this variance came from, for reporting.
    pub design_ebn0_db: Option<f64>,
    pub trials: u64,
    pub seed: u64,
}

impl ConstructionConfig {
    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "design sigma^2 = {} must be positive",
                self.sigma2
            )));
        }
        Ok(())
    }

    /// The all-information code the genie decodes (no frozen positions).
    pub fn open_code(&self) -> Result<CodeConfig> {
        CodeConfig::new(
            self.field.clone(),
            self.n,
            self.alpha_u,
            self.alpha_v,
            &[],
            &[],
            self.m,
        )
    }

    /// Cache header line identifying this profile.
    fn cache_key(&self) -> String {
        format!(
            "r={} poly={} n={} alpha_u={} alpha_v={} m={} sigma2={} trials={} seed={}",
            self.field.r(),
            self.field.poly(),
            self.n,
            self.alpha_u,
            self.alpha_v,
            self.m,
            self.sigma2,
            self.trials,
            self.seed
        )
    }
}

/// Per-position genie-aided symbol-error estimates for both users.
#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityProfile {
    pub err_u: Vec<f64>,
    pub err_v: Vec<f64>,
    pub trials: u64,
    pub design_ebn0_db: Option<f64>,
}

/// Error counts accumulated over a range of trials.
fn run_trials(cfg: &ConstructionConfig, range: std::ops::Range<u64>) -> Result<(Vec<u64>, Vec<u64>)> {
    let code = cfg.open_code()?;
    let big_n = code.block_len();
    let q = cfg.field.q();
    let r = cfg.field.r() as usize;
    let params = ChannelParams {
        sigma2: cfg.sigma2,
        ebn0_db: cfg.design_ebn0_db,
    };
    let mut decoder = JointScDecoder::new(code);
    let mut count_u = vec![0u64; big_n];
    let mut count_v = vec![0u64; big_n];
    let mut u = vec![0 as Symbol; big_n];
    let mut v = vec![0 as Symbol; big_n];
    for trial in range {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, CONSTRUCTION_STREAM, trial));
        for s in u.iter_mut() {
            *s = rng.gen_range(0..q) as Symbol;
        }
        for s in v.iter_mut() {
            *s = rng.gen_range(0..q) as Symbol;
        }
        let x = encode(&cfg.field, cfg.alpha_u, &u)?;
        let y = encode(&cfg.field, cfg.alpha_v, &v)?;
        let rx = transmit_with_rng(
            &symbols_to_bits(&cfg.field, &x),
            &symbols_to_bits(&cfg.field, &y),
            &params,
            r,
            &mut rng,
        )?;
        let outcome = decoder.decode_genie(&rx, &params, &u, &v)?;
        for (c, &e) in count_u.iter_mut().zip(&outcome.err_u) {
            *c += e as u64;
        }
        for (c, &e) in count_v.iter_mut().zip(&outcome.err_v) {
            *c += e as u64;
        }
    }
    Ok((count_u, count_v))
}

/// Estimates the reliability profile, splitting trials across the given
/// rayon pool. Results are identical for any worker count.
pub fn estimate_reliabilities_on(
    pool: &rayon::ThreadPool,
    cfg: &ConstructionConfig,
) -> Result<ReliabilityProfile> {
    cfg.validate()?;
    let big_n = 1usize << cfg.n;
    // Chunks sized for decent load balance without rebuilding decoders
    // too often; any chunking gives the same sums.
    let chunk: u64 = (cfg.trials / (8 * pool.current_num_threads() as u64)).clamp(1, 4096);
    let ranges: Vec<std::ops::Range<u64>> = (0..cfg.trials)
        .step_by(chunk as usize)
        .map(|lo| lo..(lo + chunk).min(cfg.trials))
        .collect();
    let (count_u, count_v) = pool.install(|| {
        ranges
            .into_par_iter()
            .map(|range| run_trials(cfg, range))
            .try_reduce(
                || (vec![0u64; big_n], vec![0u64; big_n]),
                |(mut au, mut av), (bu, bv)| {
                    for (a, b) in au.iter_mut().zip(&bu) {
                        *a += b;
                    }
                    for (a, b) in av.iter_mut().zip(&bv) {
                        *a += b;
                    }
                    Ok((au, av))
                },
            )
    })?;
    let to_rate = |counts: Vec<u64>| -> Vec<f64> {
        counts.into_iter().map(|c| c as f64 / cfg.trials as f64).collect()
    };
    Ok(ReliabilityProfile {
        err_u: to_rate(count_u),
        err_v: to_rate(count_v),
        trials: cfg.trials,
        design_ebn0_db: cfg.design_ebn0_db,
    })
}

/// Estimates the reliability profile on a private pool of `workers`
/// threads (0 = one thread per core).
pub fn estimate_reliabilities(cfg: &ConstructionConfig, workers: usize) -> Result<ReliabilityProfile> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?;
    estimate_reliabilities_on(&pool, cfg)
}

/// Frozen set for one user: the `N - k` positions with the largest error
/// estimates. Ties go to the larger index (the later position is frozen),
/// so among equally reliable positions the earlier ones carry information.
pub fn select_frozen(err: &[f64], info_len: usize) -> Result<Vec<usize>> {
    if info_len > err.len() {
        return Err(Error::InvalidParameter(format!(
            "information length {info_len} exceeds block length {}",
            err.len()
        )));
    }
    let mut order: Vec<usize> = (0..err.len()).collect();
    order.sort_by(|&a, &b| err[a].total_cmp(&err[b]).then(a.cmp(&b)));
    let mut frozen: Vec<usize> = order[info_len..].to_vec();
    frozen.sort_unstable();
    Ok(frozen)
}

/// Frozen sets for both users at a common information length.
pub fn select_frozen_pair(
    profile: &ReliabilityProfile,
    info_len: usize,
) -> Result<(Vec<usize>, Vec<usize>)> {
    Ok((
        select_frozen(&profile.err_u, info_len)?,
        select_frozen(&profile.err_v, info_len)?,
    ))
}

/// Builds the decodable code: the construction parameters plus the frozen
/// sets chosen from a profile at the given information length.
pub fn build_code(
    cfg: &ConstructionConfig,
    profile: &ReliabilityProfile,
    info_len: usize,
) -> Result<CodeConfig> {
    let (fu, fv) = select_frozen_pair(profile, info_len)?;
    CodeConfig::new(
        cfg.field.clone(),
        cfg.n,
        cfg.alpha_u,
        cfg.alpha_v,
        &fu,
        &fv,
        cfg.m,
    )
}

const CACHE_VERSION_LINE: &str = "nbpolar reliability cache v1";

/// Writes a profile to a plain-text cache file: a version line, the
/// parameter key, then one `index err_u err_v` line per position.
pub fn save_profile(path: &Path, cfg: &ConstructionConfig, profile: &ReliabilityProfile) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{CACHE_VERSION_LINE}")?;
    writeln!(w, "{}", cfg.cache_key())?;
    for i in 0..profile.err_u.len() {
        writeln!(w, "{} {} {}", i, profile.err_u[i], profile.err_v[i])?;
    }
    w.flush()?;
    Ok(())
}

/// Loads a cached profile if the file exists and its key matches `cfg`
/// exactly; returns `Ok(None)` when absent or keyed differently (caller
/// recomputes), `Err` only on malformed content.
pub fn load_profile(path: &Path, cfg: &ConstructionConfig) -> Result<Option<ReliabilityProfile>> {
    let file = match std::fs::File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let bad = |reason: &str| Error::BadFile {
        path: path.display().to_string(),
        reason: reason.to_string(),
    };
    let mut lines = std::io::BufReader::new(file).lines();
    match lines.next().transpose()? {
        Some(l) if l == CACHE_VERSION_LINE => {}
        _ => return Ok(None),
    }
    match lines.next().transpose()? {
        Some(l) if l == cfg.cache_key() => {}
        Some(_) => return Ok(None),
        None => return Err(bad("missing parameter line")),
    }
    let big_n = 1usize << cfg.n;
    let mut err_u = vec![0.0; big_n];
    let mut err_v = vec![0.0; big_n];
    let mut seen = 0usize;
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let idx: usize = parts
            .next()
            .ok_or_else(|| bad("empty data line"))?
            .parse()
            .map_err(|_| bad("unparsable position index"))?;
        if idx >= big_n {
            return Err(bad("position index out of range"));
        }
        let eu: f64 = parts
            .next()
            .ok_or_else(|| bad("missing user-1 estimate"))?
            .parse()
            .map_err(|_| bad("unparsable user-1 estimate"))?;
        let ev: f64 = parts
            .next()
            .ok_or_else(|| bad("missing user-2 estimate"))?
            .parse()
            .map_err(|_| bad("unparsable user-2 estimate"))?;
        err_u[idx] = eu;
        err_v[idx] = ev;
        seen += 1;
    }
    if seen != big_n {
        return Err(bad("wrong number of data lines"));
    }
    Ok(Some(ReliabilityProfile {
        err_u,
        err_v,
        trials: cfg.trials,
        design_ebn0_db: cfg.design_ebn0_db,
    }))
}

/// Returns the cached profile when present, otherwise estimates and caches
/// it. The cache file name encodes nothing; the key line inside does.
pub fn load_or_estimate(
    path: &Path,
    cfg: &ConstructionConfig,
    workers: usize,
) -> Result<(ReliabilityProfile, bool)> {
    if let Some(p) = load_profile(path, cfg)? {
        return Ok((p, true));
    }
    let p = estimate_reliabilities(cfg, workers)?;
    save_profile(path, cfg, &p)?;
    Ok((p, false))
}

/// Convenience: which user a profile vector belongs to.
pub fn profile_errors<'a>(profile: &'a ReliabilityProfile, user: User) -> &'a [f64] {
    match user {
        User::User1 => &profile.err_u,
        User::User2 => &profile.err_v,
    }
}

const FROZEN_VERSION_LINE: &str = "nbpolar frozen sets v1";

/// A persisted frozen-set choice together with the parameters that
/// produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct FrozenSetsFile {
    pub r: u32,
    pub poly: u32,
    pub n: u32,
    pub alpha_u: Symbol,
    pub alpha_v: Symbol,
    pub m: usize,
    pub info_len: usize,
    pub sigma2: f64,
    pub trials: u64,
    pub seed: u64,
    pub frozen_u: Vec<usize>,
    pub frozen_v: Vec<usize>,
}

/// Writes chosen frozen sets with full provenance: a version line, the
/// parameter key, then one `u:`/`v:` line of ascending positions each.
pub fn save_frozen_sets(
    path: &Path,
    cfg: &ConstructionConfig,
    info_len: usize,
    frozen_u: &[usize],
    frozen_v: &[usize],
) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{FROZEN_VERSION_LINE}")?;
    writeln!(w, "{} k={}", cfg.cache_key(), info_len)?;
    let join = |set: &[usize]| {
        set.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ")
    };
    writeln!(w, "u: {}", join(frozen_u))?;
    writeln!(w, "v: {}", join(frozen_v))?;
    w.flush()?;
    Ok(())
}

/// Reads a frozen-set file written by [`save_frozen_sets`].
pub fn load_frozen_sets(path: &Path) -> Result<FrozenSetsFile> {
    let bad = |reason: String| Error::BadFile {
        path: path.display().to_string(),
        reason,
    };
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    if lines.next() != Some(FROZEN_VERSION_LINE) {
        return Err(bad("missing or unknown version line".into()));
    }
    let key = lines.next().ok_or_else(|| bad("missing parameter line".into()))?;
    let mut fields = std::collections::HashMap::new();
    for kv in key.split_whitespace() {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| bad(format!("malformed parameter entry {kv:?}")))?;
        fields.insert(k, v);
    }
    fn field<T: std::str::FromStr>(
        fields: &std::collections::HashMap<&str, &str>,
        name: &str,
        bad: impl Fn(String) -> Error,
    ) -> Result<T> {
        fields
            .get(name)
            .ok_or_else(|| bad(format!("missing parameter {name}")))?
            .parse()
            .map_err(|_| bad(format!("unparsable parameter {name}")))
    }
    let parse_set = |line: Option<&str>, tag: &str| -> Result<Vec<usize>> {
        let line = line.ok_or_else(|| bad(format!("missing {tag} line")))?;
        let rest = line
            .strip_prefix(tag)
            .ok_or_else(|| bad(format!("expected a {tag} line, got {line:?}")))?;
        rest.split_whitespace()
            .map(|s| s.parse().map_err(|_| bad(format!("unparsable position {s:?}"))))
            .collect()
    };
    let out = FrozenSetsFile {
        r: field(&fields, "r", bad)?,
        poly: field(&fields, "poly", bad)?,
        n: field(&fields, "n", bad)?,
        alpha_u: field(&fields, "alpha_u", bad)?,
        alpha_v: field(&fields, "alpha_v", bad)?,
        m: field(&fields, "m", bad)?,
        info_len: field(&fields, "k", bad)?,
        sigma2: field(&fields, "sigma2", bad)?,
        trials: field(&fields, "trials", bad)?,
        seed: field(&fields, "seed", bad)?,
        frozen_u: parse_set(lines.next(), "u:")?,
        frozen_v: parse_set(lines.next(), "v:")?,
    };
    let expect = (1usize << out.n) - out.info_len;
    if out.frozen_u.len() != expect || out.frozen_v.len() != expect {
        return Err(bad(format!(
            "frozen set sizes {}/{} do not match N-k = {expect}",
            out.frozen_u.len(),
            out.frozen_v.len()
        )));
    }
    Ok(out)
}
