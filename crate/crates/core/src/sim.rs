//! AWGN/BPSK Monte-Carlo experiments.
//!
//! Every frame draws from its own generator keyed by
//! `(seed, snr index, frame index)`, and early stopping is checked only
//! between fixed-size batches, so results do not depend on thread count.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::exec::Execution;
use crate::kernelproc::Llr;
use crate::mkpolar::{encode, sc_decode, scl_decode, CodeError, CodeSpec};

pub const CSV_HEADER: &str = "snr_db,frames,frame_errors,bit_errors,fer,ber,wall_time_s";
pub const DEFAULT_MAX_ERRORS: u64 = 100;
pub const DEFAULT_BATCH: u64 = 256;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {msg}")]
    Csv { path: PathBuf, line: usize, msg: String },
    #[error(transparent)]
    Code(#[from] CodeError),
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Generator for one frame: the key picks a ChaCha key, the frame index
/// selects the stream.
pub fn frame_rng(seed: u64, snr_index: u64, frame: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix(seed) ^ splitmix(snr_index.wrapping_add(0x5EED)));
    rng.set_stream(frame);
    rng
}

/// Noise standard deviation for BPSK at `Eb/N0 = snr_db` and code rate `rate`.
pub fn noise_sigma(snr_db: f64, rate: f64) -> f64 {
    (1.0 / (2.0 * rate * 10f64.powf(snr_db / 10.0))).sqrt()
}

/// BPSK (`0 -> +1`, `1 -> -1`) over AWGN; returns `2 y / sigma^2`.
pub fn awgn_llrs<R: Rng>(codeword: &[u8], snr_db: f64, rate: f64, rng: &mut R) -> Vec<Llr> {
    assert!(rate > 0.0 && rate <= 1.0, "rate must be in (0, 1]");
    let sigma = noise_sigma(snr_db, rate);
    let scale = 2.0 / (sigma * sigma);
    codeword
        .iter()
        .map(|&c| {
            let z: f64 = rng.sample(StandardNormal);
            let x = if c & 1 == 0 { 1.0 } else { -1.0 };
            Llr(scale * (x + sigma * z))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub snr_db: Vec<f64>,
    pub list: usize,
    pub max_frames: u64,
    /// Stop a point after this many frame errors; zero runs `max_frames`.
    pub max_errors: u64,
    pub seed: u64,
    pub batch: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            snr_db: vec![0.0],
            list: 8,
            max_frames: 10_000,
            max_errors: DEFAULT_MAX_ERRORS,
            seed: 1,
            batch: DEFAULT_BATCH,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.snr_db.is_empty() {
            return Err(SimError::Config("empty SNR grid".into()));
        }
        if self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(SimError::Config("SNR values must be finite".into()));
        }
        if self.list == 0 || self.max_frames == 0 || self.batch == 0 {
            return Err(SimError::Config("list size, frame budget and batch must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub snr_db: f64,
    pub frames: u64,
    pub frame_errors: u64,
    pub bit_errors: u64,
    pub fer: f64,
    pub ber: f64,
    pub wall_time_s: f64,
}

impl ResultRow {
    /// Equality on everything except the wall time.
    pub fn same_counts(&self, other: &ResultRow) -> bool {
        (self.snr_db, self.frames, self.frame_errors, self.bit_errors, self.fer, self.ber)
            == (other.snr_db, other.frames, other.frame_errors, other.bit_errors, other.fer, other.ber)
    }

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.snr_db, self.frames, self.frame_errors, self.bit_errors, self.fer, self.ber, self.wall_time_s
        )
    }

    pub fn from_csv(line: &str) -> Result<Self, String> {
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != 7 {
            return Err(format!("expected 7 fields, got {}", f.len()));
        }
        let float = |i: usize| f[i].parse::<f64>().map_err(|_| format!("bad number {:?}", f[i]));
        let int = |i: usize| f[i].parse::<u64>().map_err(|_| format!("bad count {:?}", f[i]));
        Ok(ResultRow {
            snr_db: float(0)?,
            frames: int(1)?,
            frame_errors: int(2)?,
            bit_errors: int(3)?,
            fer: float(4)?,
            ber: float(5)?,
            wall_time_s: float(6)?,
        })
    }
}

/// Parses CSV text with the fixed header.
pub fn parse_csv(text: &str, path: &Path) -> Result<Vec<ResultRow>, SimError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        Some((i, h)) => {
            return Err(SimError::Csv {
                path: path.into(),
                line: i + 1,
                msg: format!("unexpected header {h:?}"),
            })
        }
        None => return Ok(Vec::new()),
    }
    lines
        .map(|(i, l)| {
            ResultRow::from_csv(l).map_err(|msg| SimError::Csv {
                path: path.into(),
                line: i + 1,
                msg,
            })
        })
        .collect()
}

pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>, SimError> {
    let text = fs::read_to_string(path).map_err(|source| SimError::Io {
        path: path.into(),
        source,
    })?;
    parse_csv(&text, path)
}

/// Statistics of one frame: (frame error, bit errors).
fn run_frame(spec: &CodeSpec, cfg: &ExperimentConfig, snr_index: u64, snr: f64, frame: u64) -> (u64, u64) {
    let mut rng = frame_rng(cfg.seed, snr_index, frame);
    let info: Vec<u8> = (0..spec.k()).map(|_| rng.random_range(0..2u8)).collect();
    let x = encode(spec, &info).expect("k bits");
    let y = awgn_llrs(&x, snr, spec.rate(), &mut rng);
    let decoded = if cfg.list == 1 {
        sc_decode(spec, &y)
    } else {
        scl_decode(spec, &y, cfg.list)
    }
    .expect("n LLRs");
    let bits = decoded.info.iter().zip(&info).filter(|(a, b)| a != b).count() as u64;
    ((bits > 0) as u64, bits)
}

/// Simulates one SNR point.
pub fn run_point(spec: &CodeSpec, cfg: &ExperimentConfig, snr_index: usize, exec: Execution) -> ResultRow {
    let start = Instant::now();
    let snr = cfg.snr_db[snr_index];
    let (mut frames, mut frame_errors, mut bit_errors) = (0u64, 0u64, 0u64);
    while frames < cfg.max_frames && (cfg.max_errors == 0 || frame_errors < cfg.max_errors) {
        let end = (frames + cfg.batch).min(cfg.max_frames);
        let stats = exec.map_range(frames, end, |f| run_frame(spec, cfg, snr_index as u64, snr, f));
        for (fe, be) in stats {
            frame_errors += fe;
            bit_errors += be;
        }
        frames = end;
    }
    let k = spec.k().max(1) as f64;
    ResultRow {
        snr_db: snr,
        frames,
        frame_errors,
        bit_errors,
        fer: frame_errors as f64 / frames as f64,
        ber: bit_errors as f64 / (frames as f64 * k),
        wall_time_s: start.elapsed().as_secs_f64(),
    }
}

/// Runs every SNR point not already in `done`, calling `emit` after each.
pub fn run_experiment(
    spec: &CodeSpec,
    cfg: &ExperimentConfig,
    exec: Execution,
    done: &[ResultRow],
    mut emit: impl FnMut(&ResultRow) -> Result<(), SimError>,
) -> Result<Vec<ResultRow>, SimError> {
    cfg.validate()?;
    if spec.k() == 0 {
        return Err(SimError::Config("the code has no information bits".into()));
    }
    let mut rows = Vec::with_capacity(cfg.snr_db.len());
    for (i, &snr) in cfg.snr_db.iter().enumerate() {
        if let Some(prev) = done.iter().find(|r| r.snr_db == snr) {
            rows.push(prev.clone());
            continue;
        }
        let row = run_point(spec, cfg, i, exec);
        emit(&row)?;
        rows.push(row);
    }
    Ok(rows)
}

/// Runs the experiment writing CSV to `out`. With `resume`, rows already
/// in the file are kept and their points skipped.
pub fn run_to_csv(
    spec: &CodeSpec,
    cfg: &ExperimentConfig,
    exec: Execution,
    out: &Path,
    resume: bool,
) -> Result<Vec<ResultRow>, SimError> {
    let io = |source| SimError::Io {
        path: out.into(),
        source,
    };
    let done = if resume && out.exists() { read_csv(out)? } else { Vec::new() };
    let mut file = if done.is_empty() {
        let mut f = fs::File::create(out).map_err(io)?;
        writeln!(f, "{CSV_HEADER}").map_err(io)?;
        f
    } else {
        fs::OpenOptions::new().append(true).open(out).map_err(io)?
    };
    run_experiment(spec, cfg, exec, &done, |row| {
        writeln!(file, "{}", row.to_csv()).map_err(io)?;
        file.flush().map_err(io)
    })
}

/// Parses `A:B:STEP` (inclusive) or a comma-separated list.
pub fn parse_snr_grid(s: &str) -> Result<Vec<f64>, SimError> {
    let bad = || SimError::Config(format!("bad SNR grid {s:?}; use A:B:STEP or a comma list"));
    let parts: Vec<&str> = s.split(':').collect();
    let grid = match parts.as_slice() {
        [a, b, step] => {
            let (a, b, step): (f64, f64, f64) = (
                a.trim().parse().map_err(|_| bad())?,
                b.trim().parse().map_err(|_| bad())?,
                step.trim().parse().map_err(|_| bad())?,
            );
            if !(step > 0.0) || b < a {
                return Err(bad());
            }
            let count = ((b - a) / step + 1e-9).floor() as usize + 1;
            // round to suppress accumulation noise in the printed values
            (0..count).map(|i| ((a + i as f64 * step) * 1e9).round() / 1e9).collect()
        }
        [list] => list
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>, _>>()?,
        _ => return Err(bad()),
    };
    if grid.is_empty() {
        return Err(bad());
    }
    Ok(grid)
}

/// Flat `key = value` experiment file; values use the command-line syntax.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, SimError> {
    let mut map = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| SimError::Config(format!("config line {}: expected key = value", no + 1)))?;
        map.insert(k.trim().replace('_', "-"), v.trim().to_string());
    }
    Ok(map)
}

/// Summary table for terminals.
pub fn format_rows(rows: &[ResultRow]) -> String {
    let mut s = String::from("  Eb/N0    frames  errors        FER          BER    time\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{:>7.2} {:>9} {:>7} {:>10.3e} {:>12.3e} {:>6.1}s",
            r.snr_db, r.frames, r.frame_errors, r.fer, r.ber, r.wall_time_s
        );
    }
    s
}
