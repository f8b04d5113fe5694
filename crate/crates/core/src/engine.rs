//! Monte Carlo SNR sweeps.
//!
//! Each frame draws its own random stream from `(seed, snr_index,
//! frame_index)`: the ChaCha stream id is the SNR index and the frame index
//! selects a disjoint window of the keystream. Frames are therefore
//! independent work units, and a sweep gives the same numbers regardless of
//! the number of workers or the order in which frames complete.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{abep_bound, bpcu};
use crate::channel::{draw_channel, transmit};
use crate::detect::{ls_estimate, Detector, HypothesisMap, PilotSchedule};
use crate::modem::{build_constellation, Constellation, ModKind};
use crate::spatial::{build_tac_table, TacTable};
use crate::txframe::{
    blocks_per_frame, build_frame_with, make_power_allocation, PowerAllocation, REFERENCE_SYMBOL,
};
use crate::{bits, Cf64, Error, Result};

/// Environment variable capping the number of sweep workers.
pub const THREADS_ENV: &str = "DGSM_THREADS";

/// Default stopping rule: bit errors per SNR point.
pub const DEFAULT_MIN_ERRORS: u64 = 200;
/// Default stopping rule: frame cap per SNR point.
pub const DEFAULT_MAX_FRAMES: u64 = 200_000;

/// Largest hypothesis label width the detectors will enumerate.
const MAX_MAP_BITS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Dgsm,
    Dmgsm,
    Gdsm,
    Gsm1,
    Gsm2,
}

impl Scheme {
    pub fn is_coherent(self) -> bool {
        matches!(self, Scheme::Gsm1 | Scheme::Gsm2)
    }

    pub fn has_bound(self) -> bool {
        matches!(self, Scheme::Dgsm | Scheme::Dmgsm)
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Dgsm => "dgsm",
            Scheme::Dmgsm => "dmgsm",
            Scheme::Gdsm => "gdsm",
            Scheme::Gsm1 => "gsm1",
            Scheme::Gsm2 => "gsm2",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "dgsm" => Ok(Scheme::Dgsm),
            "dmgsm" => Ok(Scheme::Dmgsm),
            "gdsm" => Ok(Scheme::Gdsm),
            "gsm1" => Ok(Scheme::Gsm1),
            "gsm2" => Ok(Scheme::Gsm2),
            _ => Err(Error::config("scheme", format!("unknown scheme `{s}`"))),
        }
    }
}

/// Channel knowledge used by the detector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Csi {
    /// Received reference block (differential schemes only).
    Differential,
    /// True channel matrix.
    Perfect,
    /// Least-squares estimate from `4 Mt` pilot slots.
    Ls,
}

impl FromStr for Csi {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "differential" | "diff" => Ok(Csi::Differential),
            "perfect" | "p-csi" | "pcsi" => Ok(Csi::Perfect),
            "ls" => Ok(Csi::Ls),
            _ => Err(Error::config("csi", format!("unknown CSI mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SystemConfig {
    pub scheme: Scheme,
    pub mt: usize,
    pub mr: usize,
    pub mu: usize,
    pub mod_kind: ModKind,
    /// Modulation order `M`.
    pub order: usize,
    /// Normal symbols per frame.
    pub k: usize,
    pub power_allocation: bool,
    /// Divide normal-slot power equally over the active antennas.
    pub split_mu_power: bool,
    pub csi: Csi,
    pub seed: u64,
}

impl SystemConfig {
    /// `K = 100`, equal power, no per-antenna split, seed 0, and the CSI
    /// mode natural to the scheme.
    pub fn new(
        scheme: Scheme,
        mt: usize,
        mr: usize,
        mu: usize,
        mod_kind: ModKind,
        order: usize,
    ) -> Self {
        SystemConfig {
            scheme,
            mt,
            mr,
            mu,
            mod_kind,
            order,
            k: 100,
            power_allocation: false,
            split_mu_power: false,
            csi: if scheme.is_coherent() {
                Csi::Perfect
            } else {
                Csi::Differential
            },
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mt == 0 || self.mt > 32 {
            return Err(Error::config("mt", "must be between 1 and 32"));
        }
        if self.mr == 0 {
            return Err(Error::config("mr", "must be at least 1"));
        }
        if self.mu == 0 || self.mu > self.mt {
            return Err(Error::config("mu", format!("must be in 1..={}", self.mt)));
        }
        if self.scheme == Scheme::Gdsm {
            if self.mu != 1 {
                return Err(Error::config("mu", "GD-SM activates exactly one antenna"));
            }
            if !self.mt.is_power_of_two() {
                return Err(Error::config(
                    "mt",
                    "GD-SM needs a power-of-two antenna count",
                ));
            }
        }
        build_constellation(self.mod_kind, self.order)
            .map_err(|e| Error::config("order", e.to_string()))?;
        if self.bits_per_symbol() > MAX_MAP_BITS {
            return Err(Error::config(
                "order",
                format!(
                    "{} bits per symbol exceeds the {MAX_MAP_BITS}-bit search limit",
                    self.bits_per_symbol()
                ),
            ));
        }
        if self.power_allocation {
            if self.scheme.is_coherent() {
                return Err(Error::config(
                    "power_allocation",
                    "reference/normal power split applies to differential schemes only",
                ));
            }
            if self.k == 0 || !self.k.is_multiple_of(self.mt) {
                return Err(Error::config(
                    "k",
                    format!(
                        "must be a positive multiple of Mt = {} with power allocation",
                        self.mt
                    ),
                ));
            }
        }
        match (self.scheme.is_coherent(), self.csi) {
            (false, Csi::Differential) | (true, Csi::Perfect | Csi::Ls) => Ok(()),
            (false, _) => Err(Error::config(
                "csi",
                "differential schemes detect from the reference block",
            )),
            (true, _) => Err(Error::config(
                "csi",
                "coherent schemes need `perfect` or `ls`",
            )),
        }
    }

    pub fn tac_table(&self) -> Result<TacTable> {
        build_tac_table(self.mt, self.mu)
    }

    pub fn constellation(&self) -> Result<Constellation> {
        build_constellation(self.mod_kind, self.order)
    }

    /// Information bits per normal symbol.
    pub fn bits_per_symbol(&self) -> usize {
        bpcu(self.scheme, self.mt, self.mu, self.order).round() as usize
    }

    /// Amplitude applied to every non-zero normal-slot entry.
    pub fn antenna_amplitude(&self) -> f64 {
        if self.split_mu_power {
            (self.mu as f64).sqrt().recip()
        } else {
            1.0
        }
    }

    /// Blocks per frame used by the power split.
    pub fn blocks(&self) -> usize {
        if self.power_allocation {
            blocks_per_frame(self.k, self.mt)
        } else {
            1 + self.k.div_ceil(self.mt).max(1)
        }
    }

    /// Noise variances at `snr_db`. Coherent schemes always see `1 / rho`.
    pub fn power(&self, snr_db: f64) -> Result<PowerAllocation> {
        let rho = 10f64.powf(snr_db / 10.0);
        let enabled = self.power_allocation && !self.scheme.is_coherent();
        make_power_allocation(rho, self.blocks(), enabled)
    }
}

/// Noise setting for one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Noise {
    SnrDb(f64),
    /// Debug hook: no noise on any slot.
    Off,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FrameOutcome {
    pub bits: u64,
    pub errors: u64,
}

/// Per-configuration state shared read-only by all frames.
#[derive(Debug, Clone)]
pub struct Simulator {
    cfg: SystemConfig,
    tac: TacTable,
    constellation: Constellation,
    map: Arc<HypothesisMap>,
}

impl Simulator {
    pub fn new(cfg: &SystemConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Simulator {
            cfg: *cfg,
            tac: cfg.tac_table()?,
            constellation: cfg.constellation()?,
            map: Arc::new(HypothesisMap::for_config(cfg)?),
        })
    }

    pub fn config(&self) -> &SystemConfig {
        &self.cfg
    }

    pub fn map(&self) -> &HypothesisMap {
        &self.map
    }

    /// Generates, transmits and detects one frame, returning bit counts.
    pub fn run_frame<R: Rng + ?Sized>(&self, noise: Noise, rng: &mut R) -> Result<FrameOutcome> {
        let cfg = &self.cfg;
        let m = cfg.bits_per_symbol();
        let bits: Vec<u8> = (0..cfg.k * m)
            .map(|_| u8::from(rng.gen::<bool>()))
            .collect();
        let frame = build_frame_with(&bits, cfg, &self.tac, &self.constellation)?;
        let ch = draw_channel(cfg.mr, cfg.mt, rng);
        let pa = match noise {
            Noise::SnrDb(snr) => cfg.power(snr)?,
            Noise::Off => PowerAllocation::noiseless(cfg.blocks()),
        };
        let rx = transmit(&frame, &ch, &pa, rng)?;
        let basis: DMatrix<Cf64> = match cfg.csi {
            Csi::Differential => rx.yr.unscale(REFERENCE_SYMBOL),
            Csi::Perfect => ch.h.clone(),
            Csi::Ls => ls_estimate(&rx.yr, &PilotSchedule::new(cfg.mt))?,
        };
        let det = Detector::new(&basis, &self.map)?;
        let mut errors = 0u64;
        if m > 0 {
            for (y, sent) in rx.yn.iter().zip(bits.chunks(m)) {
                let got = det.detect(y);
                errors += u64::from(bits::hamming(got, bits::to_index(sent)));
            }
        }
        Ok(FrameOutcome {
            bits: (cfg.k * m) as u64,
            errors,
        })
    }
}

/// Convenience wrapper building a [`Simulator`] for a single frame.
pub fn run_frame<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    snr_db: f64,
    rng: &mut R,
) -> Result<FrameOutcome> {
    Simulator::new(cfg)?.run_frame(Noise::SnrDb(snr_db), rng)
}

/// Random stream for frame `frame_index` of SNR point `snr_index`.
pub fn frame_rng(seed: u64, snr_index: usize, frame_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(snr_index as u64);
    // 2^32 words per frame.
    rng.set_word_pos(u128::from(frame_index) << 32);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BerPoint {
    pub snr_db: f64,
    pub frames_run: u64,
    pub bits_total: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub min_errors: u64,
    pub max_frames: u64,
    /// Worker threads; `None` uses `DGSM_THREADS` or all cores.
    pub workers: Option<usize>,
    /// Replace every SNR point by a noiseless run (debug hook).
    pub noiseless: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            min_errors: DEFAULT_MIN_ERRORS,
            max_frames: DEFAULT_MAX_FRAMES,
            workers: None,
            noiseless: false,
        }
    }
}

fn worker_count(requested: Option<usize>) -> Option<usize> {
    requested.or_else(|| {
        std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&n| n > 0)
    })
}

/// Runs frames at each SNR until `min_errors` bit errors have accumulated
/// or `max_frames` frames have run.
pub fn run_sweep(
    cfg: &SystemConfig,
    snr_list: &[f64],
    min_errors: u64,
    max_frames: u64,
) -> Result<Vec<BerPoint>> {
    run_sweep_with(
        cfg,
        snr_list,
        &SweepOptions {
            min_errors,
            max_frames,
            ..SweepOptions::default()
        },
    )
}

pub fn run_sweep_with(
    cfg: &SystemConfig,
    snr_list: &[f64],
    opts: &SweepOptions,
) -> Result<Vec<BerPoint>> {
    if snr_list.is_empty() {
        return Err(Error::EmptySnrList);
    }
    if opts.min_errors == 0 {
        return Err(Error::MinErrors);
    }
    let sim = Simulator::new(cfg)?;
    let run = || -> Result<Vec<BerPoint>> {
        snr_list
            .iter()
            .enumerate()
            .map(|(i, &snr)| sweep_point(&sim, i, snr, opts))
            .collect()
    };
    match worker_count(opts.workers) {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::config("workers", e.to_string()))?
            .install(run),
        None => run(),
    }
}

fn sweep_point(
    sim: &Simulator,
    snr_index: usize,
    snr_db: f64,
    opts: &SweepOptions,
) -> Result<BerPoint> {
    let cfg = sim.config();
    let noise = if opts.noiseless {
        Noise::Off
    } else {
        Noise::SnrDb(snr_db)
    };
    let mut frames = 0u64;
    let mut bits_total = 0u64;
    let mut errors = 0u64;
    let mut batch = 16u64;
    'outer: while frames < opts.max_frames && errors < opts.min_errors {
        let n = batch.min(opts.max_frames - frames);
        let outcomes = (frames..frames + n)
            .into_par_iter()
            .map(|f| sim.run_frame(noise, &mut frame_rng(cfg.seed, snr_index, f)))
            .collect::<Result<Vec<_>>>()?;
        // Consume in frame order so the stopping point is exact.
        for o in outcomes {
            frames += 1;
            bits_total += o.bits;
            errors += o.errors;
            if errors >= opts.min_errors {
                break 'outer;
            }
        }
        batch = (batch * 2).min(4096);
    }
    let bound = if cfg.scheme.has_bound() {
        Some(abep_bound(cfg, snr_db)?.raw)
    } else {
        None
    };
    Ok(BerPoint {
        snr_db,
        frames_run: frames,
        bits_total,
        bit_errors: errors,
        ber: if bits_total == 0 {
            0.0
        } else {
            errors as f64 / bits_total as f64
        },
        bound,
    })
}

/// SNR in dB at which a BER curve crosses `target`, by linear interpolation
/// of `log10(BER)` between the bracketing points. `None` if the curve never
/// crosses.
pub fn snr_at_ber(points: &[BerPoint], target: f64) -> Option<f64> {
    let lt = target.log10();
    points.windows(2).find_map(|w| {
        let (a, b) = (&w[0], &w[1]);
        if a.ber >= target && b.ber <= target && b.ber > 0.0 {
            let (la, lb) = (a.ber.log10(), b.ber.log10());
            if (la - lb).abs() < f64::EPSILON {
                return Some(a.snr_db);
            }
            Some(a.snr_db + (la - lt) / (la - lb) * (b.snr_db - a.snr_db))
        } else {
            None
        }
    })
}
