//! Closed-form analytics: pairwise error probability, the union bound on
//! the average bit error probability, detector flop counts, spectral
//! efficiency and frame throughput.

use num_integer::binomial;
use rayon::prelude::*;

use crate::bits;
use crate::detect::HypothesisMap;
use crate::engine::{Scheme, SystemConfig};
use crate::spatial::floor_log2;
use crate::txframe::SymbolVector;
use crate::{Error, Result};

/// Product of the integers of the same parity as `n` down to 1 or 2, with
/// `0!! = (-1)!! = 1`.
pub fn semifactorial(n: i64) -> Result<u128> {
    if n < -1 {
        return Err(Error::NegativeSemifactorial(n));
    }
    Ok((1..=n.max(0)).rev().step_by(2).map(|k| k as u128).product())
}

/// Non-zero structure of a symbol difference `x~ - x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffStats {
    /// Number of non-zero entries.
    pub beta: usize,
    /// Sum of their squared magnitudes.
    pub d2: f64,
}

impl DiffStats {
    pub fn between(x: &SymbolVector, xt: &SymbolVector) -> Self {
        let mut beta = 0;
        let mut d2 = 0.0;
        for (a, b) in x.entries().iter().zip(xt.entries()) {
            let e = (b - a).norm_sqr();
            if e > 0.0 {
                beta += 1;
                d2 += e;
            }
        }
        DiffStats { beta, d2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PepParams {
    pub sigma2_n: f64,
    pub sigma2_r: f64,
    pub mu: usize,
    pub mr: usize,
    /// Mean power per active antenna of a normal symbol: 1 with unit
    /// symbols, `1 / Mu` when the normal-slot power is split.
    pub antenna_energy: f64,
}

impl PepParams {
    pub fn new(sigma2_n: f64, sigma2_r: f64, mu: usize, mr: usize) -> Self {
        PepParams {
            sigma2_n,
            sigma2_r,
            mu,
            mr,
            antenna_energy: 1.0,
        }
    }

    /// Variance of the effective noise `n - N_r x`.
    pub fn effective_noise(&self) -> f64 {
        self.sigma2_n + self.mu as f64 * self.antenna_energy * self.sigma2_r
    }

    /// `(2 s^2)^Mr 2^Mr (2Mr-1)!! / (2 (2Mr)!!)`; the PEP is this over
    /// `d2^Mr`.
    pub fn numerator(&self) -> f64 {
        let mr = self.mr as i32;
        let odd = semifactorial(2 * self.mr as i64 - 1).unwrap_or(1) as f64;
        let even = semifactorial(2 * self.mr as i64).unwrap_or(1) as f64;
        (2.0 * self.effective_noise()).powi(mr) * 2f64.powi(mr) * odd / (2.0 * even)
    }
}

/// High-SNR upper bound on `P(x -> x~)`. Not clipped: at low SNR it can
/// exceed one.
pub fn pep(x: &SymbolVector, xt: &SymbolVector, p: &PepParams) -> Result<f64> {
    let d = DiffStats::between(x, xt);
    if d.beta == 0 {
        return Err(Error::IdenticalSymbols);
    }
    Ok(pep_from_distance(d.d2, p))
}

pub fn pep_from_distance(d2: f64, p: &PepParams) -> f64 {
    p.numerator() / d2.powi(p.mr as i32)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbepBound {
    pub raw: f64,
    /// `min(raw, 0.5)`, for plotting.
    pub clipped: f64,
}

/// PEP parameters matching the simulator's noise and symbol scaling.
pub fn pep_params(cfg: &SystemConfig, snr_db: f64) -> Result<PepParams> {
    let pa = cfg.power(snr_db)?;
    let amp = cfg.antenna_amplitude();
    Ok(PepParams {
        sigma2_n: pa.sigma2_n,
        sigma2_r: pa.sigma2_r,
        mu: cfg.mu,
        mr: cfg.mr,
        antenna_energy: amp * amp,
    })
}

/// Union bound over every ordered pair of the symbol map.
pub fn abep_bound(cfg: &SystemConfig, snr_db: f64) -> Result<AbepBound> {
    if !cfg.scheme.has_bound() {
        return Err(Error::UnsupportedScheme(cfg.scheme.to_string()));
    }
    cfg.validate()?;
    let map = HypothesisMap::for_config(cfg)?;
    let p = pep_params(cfg, snr_db)?;
    Ok(union_bound(&map, &p))
}

pub fn union_bound(map: &HypothesisMap, p: &PepParams) -> AbepBound {
    let m = map.bits();
    let vs = map.vectors();
    let num = p.numerator();
    let mr = p.mr as i32;
    // Row sums in parallel, then a fixed-order reduction.
    let rows: Vec<f64> = (0..vs.len())
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            for j in 0..vs.len() {
                if i == j {
                    continue;
                }
                let d2 = DiffStats::between(&vs[i], &vs[j]).d2;
                acc += f64::from(bits::hamming(i, j)) * num / d2.powi(mr);
            }
            acc
        })
        .collect();
    let raw = rows.iter().sum::<f64>() / (m as f64 * (1u64 << m) as f64);
    AbepBound {
        raw,
        clipped: raw.min(0.5),
    }
}

/// Least-squares slope of `log10(bound)` against `snr_db / 10` over the
/// given SNR points. A diversity order of `d` shows up as slope `-d`.
pub fn bound_slope(cfg: &SystemConfig, snr_db: &[f64]) -> Result<f64> {
    let pts = snr_db
        .iter()
        .map(|&s| abep_bound(cfg, s).map(|b| (s / 10.0, b.raw.log10())))
        .collect::<Result<Vec<_>>>()?;
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// `N = 2^floor(log2 C(Mt, Mu))`, the number of usable antenna combinations.
pub fn usable_combinations(mt: usize, mu: usize) -> u64 {
    1 << floor_log2(binomial(mt as u64, mu as u64))
}

/// Pilot length of the coherent baselines.
pub fn pilot_length(mt: usize) -> usize {
    4 * mt
}

/// Real additions plus multiplications to detect `K` symbols.
///
/// The D-MGSM and GSM-2 counts take `2^Mu * M * N` hypotheses, as in the
/// closed forms; this equals the real map size `M^Mu * N` only
/// when `M = 2^(Mu/(Mu-1))`, i.e. `M = 4` for `Mu = 2`.
pub fn flops(
    scheme: Scheme,
    mt: usize,
    mr: usize,
    mu: usize,
    m: usize,
    k: usize,
    pl: usize,
) -> u64 {
    let (mt, mr, mu, m, k, pl) = (
        mt as i64, mr as i64, mu as i64, m as i64, k as i64, pl as i64,
    );
    let n = usable_combinations(mt as usize, mu as usize) as i64;
    let ls = pl * (6 * mr + 12) + 6 * mt;
    let shared = m * n * (2 * mr * mu + 6 * mr * k + 4 * mr - k);
    let distinct = (1 << mu) * m * n * (8 * mr * mu + 6 * mr * k - 2 * mr - k);
    let c = match scheme {
        Scheme::Gdsm => mt * m * (6 * mr + 6 * mr * k - k),
        Scheme::Gsm1 => shared + ls,
        Scheme::Gsm2 => distinct + ls,
        Scheme::Dmgsm => distinct,
        Scheme::Dgsm => shared,
    };
    c as u64
}

/// Percentage decrease of `proposed` relative to `reference`; negative
/// values are increases.
pub fn percent_change(reference: u64, proposed: u64) -> f64 {
    100.0 * (reference as f64 - proposed as f64) / reference as f64
}

/// Bits per channel use of a scheme.
pub fn bpcu(scheme: Scheme, mt: usize, mu: usize, m: usize) -> f64 {
    let lm = floor_log2(m as u64) as f64;
    let tac = || floor_log2(binomial(mt as u64, mu as u64)) as f64;
    match scheme {
        Scheme::Dgsm | Scheme::Gsm1 => tac() + lm,
        Scheme::Dmgsm | Scheme::Gsm2 => tac() + mu as f64 * lm,
        Scheme::Gdsm => floor_log2(mt as u64) as f64 + lm,
    }
}

fn floor_log2_factorial(mt: usize) -> f64 {
    // Exact integer factorial up to 20!, which covers practical Mt.
    let f: u128 = (1..=mt as u128).product();
    (127 - f.leading_zeros()) as f64
}

/// Conventional DSM rate.
pub fn dsm_bpcu(mt: usize, m: usize) -> f64 {
    (floor_log2_factorial(mt) + mt as f64 * (m as f64).log2()) / mt as f64
}

/// High-rate APSK-DSM rate.
pub fn apsk_dsm_bpcu(mt: usize, m: usize) -> f64 {
    (floor_log2_factorial(mt) + mt as f64 * (m as f64).log2() + 2.0 * mt as f64) / mt as f64
}

/// Fraction of a differential frame carrying information, `K / (K + Mt)`.
pub fn throughput(k: usize, mt: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    k as f64 / (k + mt) as f64
}

/// Coherent frames spend `P_l = 4 Mt` slots on pilots.
pub fn coherent_throughput(k: usize, mt: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    k as f64 / (k + pilot_length(mt)) as f64
}
