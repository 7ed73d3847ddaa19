//! End-to-end tests of the `nbpolar` binary: argument handling, config
//! overlays, output files, caching, determinism, and exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_nbpolar"));
    // Tests control the seed explicitly; a leaked environment seed would
    // change output file names.
    c.env_remove("NBPOLAR_SEED");
    c
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin()
        .args(args)
        .args(["--out", dir.to_str().unwrap()])
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("no signal")
}

fn ls(dir: &Path, prefix: &str) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| {
            p.file_name()
                .map(|n| n.to_string_lossy().starts_with(prefix))
                .unwrap_or(false)
        })
        .collect();
    v.sort();
    v
}

#[test]
fn help_version_and_usage_errors() {
    let help = bin().arg("--help").output().unwrap();
    assert_eq!(code(&help), 0);
    for sub in ["rank-kernels", "construct", "simulate", "plotdata"] {
        assert!(
            stdout(&help).contains(sub),
            "help should mention {sub}"
        );
    }
    let version = bin().arg("--version").output().unwrap();
    assert_eq!(code(&version), 0);

    // No subcommand, unknown subcommand, unknown flag: usage errors.
    assert_eq!(code(&bin().output().unwrap()), 2);
    assert_eq!(code(&bin().arg("frobnicate").output().unwrap()), 2);
    assert_eq!(
        code(&bin().args(["simulate", "--bogus"]).output().unwrap()),
        2
    );
}

#[test]
fn domain_usage_errors_exit_2() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    // Field size not a power of two.
    let o = run(&["construct", "--q", "15", "--n", "3", "--trials", "10"], d);
    assert_eq!(code(&o), 2, "stderr: {}", stderr(&o));
    // Malformed sweep.
    let o = run(&["simulate", "--q", "4", "--n", "3", "--sweep", "5:4:3"], d);
    assert_eq!(code(&o), 2);
    // Malformed stage split.
    let o = run(
        &["construct", "--q", "4", "--n", "3", "--M", "N/0", "--trials", "10"],
        d,
    );
    assert_eq!(code(&o), 2);
    // Non-primitive polynomial.
    let o = run(
        &["construct", "--q", "16", "--poly", "21", "--n", "3", "--trials", "10"],
        d,
    );
    assert_eq!(code(&o), 2);
}

#[test]
fn rank_kernels_writes_matrix_csv() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    let o = run(
        &["rank-kernels", "--q", "4", "--sigma-sweep", "0.5:0.7:2"],
        d,
    );
    assert_eq!(code(&o), 0, "stderr: {}", stderr(&o));
    let csv = std::fs::read_to_string(d.join("rank_single.csv")).unwrap();
    assert!(csv.contains("alpha,sigma=0.5,sigma=0.7"));
    // One row per nonzero factor of GF(4).
    let rows: Vec<&str> = csv
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("alpha"))
        .collect();
    assert_eq!(rows.len(), 3);
    assert!(stdout(&o).contains("best"));

    // Joint mode writes its own file and needs a valid fixed factor.
    let o = run(
        &[
            "rank-kernels",
            "--q",
            "4",
            "--mode",
            "joint",
            "--alpha-u",
            "2",
            "--sigma-sweep",
            "0.6:0.6:1",
        ],
        d,
    );
    assert_eq!(code(&o), 0, "stderr: {}", stderr(&o));
    assert!(d.join("rank_joint.csv").exists());

    let o = run(&["rank-kernels", "--q", "4", "--mode", "sideways"], d);
    assert_eq!(code(&o), 2);
}

#[test]
fn construct_writes_and_caches() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    let args = [
        "construct", "--q", "4", "--n", "3", "--alpha-u", "2", "--alpha-v", "3",
        "--trials", "200", "--design-snr", "2", "--seed", "5",
    ];
    let first = run(&args, d);
    assert_eq!(code(&first), 0, "stderr: {}", stderr(&first));
    assert!(stdout(&first).contains("estimated"));
    let rel = ls(d, "reliability_");
    let froz = ls(d, "frozen_");
    assert_eq!(rel.len(), 1);
    assert_eq!(froz.len(), 1);
    // The cache key embeds the seed.
    assert!(rel[0].to_string_lossy().contains("_s5"));
    let rel_bytes = std::fs::read(&rel[0]).unwrap();
    let froz_bytes = std::fs::read(&froz[0]).unwrap();

    // Second identical run reuses the reliability cache and reproduces the
    // frozen sets byte for byte.
    let second = run(&args, d);
    assert_eq!(code(&second), 0);
    assert!(stdout(&second).contains("cached"));
    assert_eq!(std::fs::read(&rel[0]).unwrap(), rel_bytes);
    assert_eq!(std::fs::read(&froz[0]).unwrap(), froz_bytes);

    // A different seed is a different cache entry.
    let third = run(
        &[
            "construct", "--q", "4", "--n", "3", "--alpha-u", "2", "--alpha-v", "3",
            "--trials", "200", "--design-snr", "2", "--seed", "6",
        ],
        d,
    );
    assert_eq!(code(&third), 0);
    assert!(stdout(&third).contains("estimated"));
    assert_eq!(ls(d, "reliability_").len(), 2);
}

#[test]
fn rate_flag_controls_information_length() {
    let t = tempfile::tempdir().unwrap();
    // Sum-rate default: K = R*N/2 = 2 at N=8.
    let a = t.path().join("sum");
    std::fs::create_dir(&a).unwrap();
    let o = run(
        &["construct", "--q", "4", "--n", "3", "--alpha-u", "2", "--alpha-v", "3", "--trials", "50"],
        &a,
    );
    assert_eq!(code(&o), 0, "stderr: {}", stderr(&o));
    assert!(stdout(&o).contains("k=2 of N=8"));

    // Per-user reading: K = R*N = 4.
    let b = t.path().join("per_user");
    std::fs::create_dir(&b).unwrap();
    let o = run(
        &[
            "construct", "--q", "4", "--n", "3", "--alpha-u", "2", "--alpha-v", "3",
            "--trials", "50", "--rate-per-user",
        ],
        &b,
    );
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("k=4 of N=8"));
}

#[test]
fn simulate_auto_constructs_and_is_worker_invariant() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    let base = [
        "simulate", "--q", "4", "--n", "3", "--alpha-u", "2", "--alpha-v", "3",
        "--sweep=-2:0:2", "--trials", "200", "--min-errors", "5",
        "--max-blocks", "512", "--seed", "7", "--label", "tiny",
    ];
    let mut one = base.to_vec();
    one.extend(["--workers", "1"]);
    let o1 = run(&one, d);
    assert_eq!(code(&o1), 0, "stderr: {}", stderr(&o1));
    let csv = d.join("bler_tiny.csv");
    let json = d.join("bler_tiny.json");
    assert!(csv.exists() && json.exists());
    let bytes1 = std::fs::read(&csv).unwrap();
    let text1 = String::from_utf8(bytes1.clone()).unwrap();
    assert!(text1.starts_with("ebn0_db,blocks,"));
    assert_eq!(text1.lines().count(), 3, "header + two sweep points");

    // Same campaign on two workers: byte-identical CSV.
    let mut two = base.to_vec();
    two.extend(["--workers", "2"]);
    let o2 = run(&two, d);
    assert_eq!(code(&o2), 0, "stderr: {}", stderr(&o2));
    assert_eq!(std::fs::read(&csv).unwrap(), bytes1);

    // The provenance sidecar records the construction design point.
    let prov = std::fs::read_to_string(&json).unwrap();
    assert!(prov.contains("\"design_ebn0_db\""));
    assert!(prov.contains("\"seed\": 7"));
}

#[test]
fn simulate_uses_frozen_file_and_validates_it() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    let o = run(
        &[
            "construct", "--q", "4", "--n", "3", "--alpha-u", "2", "--alpha-v", "3",
            "--trials", "200", "--design-snr", "0", "--seed", "5",
        ],
        d,
    );
    assert_eq!(code(&o), 0, "stderr: {}", stderr(&o));
    let froz = ls(d, "frozen_")[0].clone();
    let froz_s = froz.to_str().unwrap();

    // Matching parameters: runs without auto-construction.
    let o = run(
        &[
            "simulate", "--q", "4", "--n", "3", "--alpha-u", "2", "--alpha-v", "3",
            "--sweep=-2:0:2", "--min-errors", "5", "--max-blocks", "512",
            "--seed", "7", "--frozen-file", froz_s, "--label", "fromfile",
        ],
        d,
    );
    assert_eq!(code(&o), 0, "stderr: {}", stderr(&o));
    assert!(!stderr(&o).contains("construction:"), "no auto-construction");
    assert!(d.join("bler_fromfile.csv").exists());

    // Mismatched kernel factor: runtime failure.
    let o = run(
        &[
            "simulate", "--q", "4", "--n", "3", "--alpha-u", "1", "--alpha-v", "3",
            "--sweep=-2:0:2", "--frozen-file", froz_s,
        ],
        d,
    );
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("different code parameters"));

    // No file and auto-construction disabled: runtime failure.
    let o = run(
        &[
            "simulate", "--q", "4", "--n", "3", "--sweep=-2:0:2",
            "--no-auto-construct",
        ],
        d,
    );
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("auto-construction is disabled"));
}

#[test]
fn zero_error_points_warn_and_strict_aborts() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    // 40 dB on a low-rate binary code constructed noiselessly: no block
    // errors within one batch. (Tiny codes over larger fields can keep
    // structurally ambiguous positions at any SNR, so this uses the
    // known-exact binary configuration.)
    let base = [
        "simulate", "--q", "2", "--n", "3", "--alpha-u", "1", "--alpha-v", "1",
        "--sweep", "40:40:1", "--trials", "400", "--design-snr", "60",
        "--min-errors", "5", "--max-blocks", "512", "--seed", "7",
    ];
    let o = run(&base, d);
    assert_eq!(code(&o), 1, "zero-error sweep exits 1");
    assert!(stderr(&o).contains("warning: no block errors"));

    let mut strict = base.to_vec();
    strict.extend(["--strict", "--label", "strictrun"]);
    let o = run(&strict, d);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("aborting (strict)"));
}

#[test]
fn config_file_overlay_and_seed_precedence() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    let cfg = d.join("run.conf");
    std::fs::write(
        &cfg,
        "# tiny code\nq = 4\nn = 3\nalpha_u = 2\nalpha-v = 3\ntrials = 50\ndesign-snr = 2\nseed = 9\n",
    )
    .unwrap();
    let cfg_s = cfg.to_str().unwrap();

    // Config supplies everything; seed 9 lands in the cache key.
    let o = run(&["construct", "--config", cfg_s], d);
    assert_eq!(code(&o), 0, "stderr: {}", stderr(&o));
    assert_eq!(ls(d, "reliability_").len(), 1);
    assert!(ls(d, "reliability_")[0].to_string_lossy().contains("_s9"));

    // Explicit flag beats the config value.
    let o = run(&["construct", "--config", cfg_s, "--seed", "3"], d);
    assert_eq!(code(&o), 0);
    assert!(ls(d, "reliability_").iter().any(|p| p.to_string_lossy().contains("_s3")));

    // Config beats the environment variable.
    let o = bin()
        .args(["construct", "--config", cfg_s, "--out", d.to_str().unwrap()])
        .env("NBPOLAR_SEED", "11")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(!ls(d, "reliability_").iter().any(|p| p.to_string_lossy().contains("_s11")));

    // Environment is the fallback when neither flag nor config give a seed.
    let cfg2 = d.join("noseed.conf");
    std::fs::write(
        &cfg2,
        "q = 4\nn = 3\nalpha-u = 2\nalpha-v = 3\ntrials = 50\ndesign-snr = 2\n",
    )
    .unwrap();
    let o = bin()
        .args([
            "construct", "--config", cfg2.to_str().unwrap(),
            "--out", d.to_str().unwrap(),
        ])
        .env("NBPOLAR_SEED", "11")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(ls(d, "reliability_").iter().any(|p| p.to_string_lossy().contains("_s11")));

    // A malformed environment seed is a usage error.
    let o = bin()
        .args([
            "construct", "--config", cfg2.to_str().unwrap(),
            "--out", d.to_str().unwrap(),
        ])
        .env("NBPOLAR_SEED", "eleven")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn config_file_rejects_unknown_and_duplicate_keys() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    let bad = d.join("bad.conf");
    std::fs::write(&bad, "qq = 4\n").unwrap();
    let o = run(&["construct", "--config", bad.to_str().unwrap()], d);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("unknown key"));

    std::fs::write(&bad, "q = 4\nq = 8\n").unwrap();
    let o = run(&["construct", "--config", bad.to_str().unwrap()], d);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("duplicate key"));

    let o = run(&["construct", "--config", d.join("absent.conf").to_str().unwrap()], d);
    assert_eq!(code(&o), 2);
}

#[test]
fn plotdata_merges_verbatim_and_validates_inputs() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    let header = "ebn0_db,blocks,blkerr_u,blkerr_v,blkerr_joint,bler_joint,ci_halfwidth,ser_u,ser_v";
    let a = d.join("bler_sysA.csv");
    std::fs::write(
        &a,
        format!("{header}\n3,512,4,5,7,0.013671875,0.0101,0.002,0.0031\n"),
    )
    .unwrap();
    let b = d.join("other.csv");
    std::fs::write(
        &b,
        format!("{header}\n4,1024,1,2,3,0.0029296875,0.0033,0.0005,0.001\n"),
    )
    .unwrap();

    let o = run(&["plotdata", a.to_str().unwrap(), b.to_str().unwrap()], d);
    assert_eq!(code(&o), 0, "stderr: {}", stderr(&o));
    let merged = std::fs::read_to_string(d.join("plotdata.csv")).unwrap();
    let lines: Vec<&str> = merged.lines().collect();
    assert_eq!(lines[0], "system_label,ebn0_db,bler,ci");
    // Labels come from the file stems (the bler_ prefix is dropped) and the
    // numeric fields are copied without reformatting.
    assert_eq!(lines[1], "sysA,3,0.013671875,0.0101");
    assert_eq!(lines[2], "other,4,0.0029296875,0.0033");

    // Not a campaign CSV: runtime failure.
    let bad = d.join("bad.csv");
    std::fs::write(&bad, "except,wrong,header\n1,2,3\n").unwrap();
    let o = run(&["plotdata", bad.to_str().unwrap()], d);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("missing header"));

    // Wrong column count: runtime failure naming the row.
    let short = d.join("short.csv");
    std::fs::write(&short, format!("{header}\n1,2,3\n")).unwrap();
    let o = run(&["plotdata", short.to_str().unwrap()], d);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("expected 9 columns"));

    // No inputs at all: usage error.
    let o = run(&["plotdata"], d);
    assert_eq!(code(&o), 2);
}
