//! Transmit side: symbol-vector encoders, frame construction and the
//! reference/normal power split.
//!
//! A differential frame carries a reference block of `Mt` slots, in which
//! antenna `i` alone sends the constant reference symbol in slot `i`,
//! followed by `K` normal slots carrying information. Power allocation is
//! expressed as per-slot-type noise variances with unit-amplitude symbols.

use nalgebra::DMatrix;

use crate::engine::{Scheme, SystemConfig};
use crate::modem::Constellation;
use crate::spatial::{build_tac_table, TacTable};
use crate::{Cf64, Error, Result};

/// Reference symbol sent on each antenna in the reference block.
pub const REFERENCE_SYMBOL: f64 = 1.0;

/// Each antenna sends this many unit pilots in a coherent frame.
pub const PILOTS_PER_ANTENNA: usize = 4;

/// Transmitted spatial-modulation vector: `Mt` entries, non-zero only at
/// the active antennas.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolVector {
    entries: Vec<Cf64>,
    active: Vec<usize>,
}

impl SymbolVector {
    /// Places `symbols[i]` on antenna `active[i]`.
    pub fn new(mt: usize, active: &[usize], symbols: &[Cf64]) -> Self {
        debug_assert_eq!(active.len(), symbols.len());
        let mut entries = vec![Cf64::new(0.0, 0.0); mt];
        for (&a, &s) in active.iter().zip(symbols) {
            entries[a] = s;
        }
        SymbolVector {
            entries,
            active: active.to_vec(),
        }
    }

    pub fn entries(&self) -> &[Cf64] {
        &self.entries
    }

    /// Active antenna indices, increasing.
    pub fn active(&self) -> &[usize] {
        &self.active
    }

    /// Symbols on the active antennas, in antenna order.
    pub fn active_symbols(&self) -> impl Iterator<Item = Cf64> + '_ {
        self.active.iter().map(|&a| self.entries[a])
    }

    pub fn mt(&self) -> usize {
        self.entries.len()
    }

    pub fn energy(&self) -> f64 {
        self.entries.iter().map(|e| e.norm_sqr()).sum()
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        for e in &mut self.entries {
            *e *= factor;
        }
        self
    }
}

fn check_len(bits: &[u8], expected: usize) -> Result<()> {
    if bits.len() != expected {
        return Err(Error::BitLength {
            expected,
            got: bits.len(),
        });
    }
    Ok(())
}

/// D-GSM: TAC bits first, then one symbol repeated on every active antenna.
pub fn encode_dgsm(bits: &[u8], tac: &TacTable, c: &Constellation) -> Result<SymbolVector> {
    let nt = tac.bits_per_tac();
    check_len(bits, nt + c.bits_per_symbol())?;
    let active = tac.bits_to_tac(&bits[..nt])?;
    let x = c.map_bits(&bits[nt..])?;
    Ok(SymbolVector::new(tac.mt(), active, &vec![x; active.len()]))
}

/// D-MGSM: TAC bits first, then one `log2(M)`-bit group per active antenna
/// in increasing antenna order.
pub fn encode_dmgsm(bits: &[u8], tac: &TacTable, c: &Constellation) -> Result<SymbolVector> {
    let nt = tac.bits_per_tac();
    let nb = c.bits_per_symbol();
    check_len(bits, nt + tac.mu() * nb)?;
    let active = tac.bits_to_tac(&bits[..nt])?;
    let symbols = bits[nt..]
        .chunks(nb)
        .map(|g| c.map_bits(g))
        .collect::<Result<Vec<_>>>()?;
    Ok(SymbolVector::new(tac.mt(), active, &symbols))
}

/// GD-SM: `floor(log2 Mt)` antenna-index bits, then one symbol.
pub fn encode_gdsm(bits: &[u8], mt: usize, c: &Constellation) -> Result<SymbolVector> {
    let tac = build_tac_table(mt, 1)?;
    encode_dgsm(bits, &tac, c)
}

/// Encodes one normal symbol for any scheme. GSM-1 and GSM-2 share the
/// symbol structure of D-GSM and D-MGSM respectively.
pub fn encode_symbol(
    scheme: Scheme,
    bits: &[u8],
    tac: &TacTable,
    c: &Constellation,
) -> Result<SymbolVector> {
    match scheme {
        Scheme::Dgsm | Scheme::Gsm1 | Scheme::Gdsm => encode_dgsm(bits, tac, c),
        Scheme::Dmgsm | Scheme::Gsm2 => encode_dmgsm(bits, tac, c),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TxFrame {
    /// `Mt x slots` matrix of the leading known block: `s^r * I` for the
    /// differential schemes, `[I I I I]` unit pilots for coherent ones.
    pub reference: DMatrix<Cf64>,
    pub normals: Vec<SymbolVector>,
    pub bits: Vec<u8>,
}

impl TxFrame {
    pub fn reference_slots(&self) -> usize {
        self.reference.ncols()
    }

    /// Total slots `L`.
    pub fn slots(&self) -> usize {
        self.reference_slots() + self.normals.len()
    }
}

/// Differential reference block.
pub fn reference_block(mt: usize) -> DMatrix<Cf64> {
    DMatrix::identity(mt, mt) * Cf64::new(REFERENCE_SYMBOL, 0.0)
}

/// Coherent pilot block: antenna `i` alone sends a unit pilot in slots
/// `i, i + Mt, i + 2Mt, i + 3Mt`.
pub fn pilot_block(mt: usize) -> DMatrix<Cf64> {
    DMatrix::from_fn(mt, PILOTS_PER_ANTENNA * mt, |r, c| {
        if c % mt == r {
            Cf64::new(1.0, 0.0)
        } else {
            Cf64::new(0.0, 0.0)
        }
    })
}

/// Blocks per frame, `B = 1 + K / Mt`.
pub fn blocks_per_frame(k: usize, mt: usize) -> usize {
    1 + k / mt
}

/// Builds a frame from `K * bpcu` information bits.
pub fn build_frame(bits: &[u8], cfg: &SystemConfig) -> Result<TxFrame> {
    cfg.validate()?;
    let tac = cfg.tac_table()?;
    let c = cfg.constellation()?;
    build_frame_with(bits, cfg, &tac, &c)
}

pub(crate) fn build_frame_with(
    bits: &[u8],
    cfg: &SystemConfig,
    tac: &TacTable,
    c: &Constellation,
) -> Result<TxFrame> {
    let per_symbol = cfg.bits_per_symbol();
    check_len(bits, cfg.k * per_symbol)?;
    let scale = cfg.antenna_amplitude();
    let normals = if per_symbol == 0 {
        Vec::new()
    } else {
        bits.chunks(per_symbol)
            .map(|b| encode_symbol(cfg.scheme, b, tac, c).map(|v| v.scaled(scale)))
            .collect::<Result<Vec<_>>>()?
    };
    let reference = if cfg.scheme.is_coherent() {
        pilot_block(cfg.mt)
    } else {
        reference_block(cfg.mt)
    };
    Ok(TxFrame {
        reference,
        normals,
        bits: bits.to_vec(),
    })
}

/// Noise variances for the reference and normal slots of one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerAllocation {
    pub rho_bar: f64,
    pub blocks: usize,
    pub sigma2_r: f64,
    pub sigma2_n: f64,
    pub enabled: bool,
}

/// Splits the frame power budget `B * rho_bar` between one reference block
/// and `B - 1` normal blocks. Disabled, both slot types see `1 / rho_bar`.
pub fn make_power_allocation(
    rho_bar: f64,
    blocks: usize,
    enabled: bool,
) -> Result<PowerAllocation> {
    if blocks < 2 {
        return Err(Error::TooFewBlocks(blocks));
    }
    if rho_bar.is_nan() || rho_bar <= 0.0 {
        return Err(Error::NonPositivePower(rho_bar));
    }
    let (sigma2_r, sigma2_n) = if enabled {
        let b = blocks as f64;
        let root = (b - 1.0).sqrt();
        (
            (1.0 + root) / (b * rho_bar),
            (b - 1.0 + root) / (b * rho_bar),
        )
    } else {
        (rho_bar.recip(), rho_bar.recip())
    };
    Ok(PowerAllocation {
        rho_bar,
        blocks,
        sigma2_r,
        sigma2_n,
        enabled,
    })
}

impl PowerAllocation {
    /// Zero noise on every slot.
    pub fn noiseless(blocks: usize) -> Self {
        PowerAllocation {
            rho_bar: f64::INFINITY,
            blocks,
            sigma2_r: 0.0,
            sigma2_n: 0.0,
            enabled: false,
        }
    }

    /// Power per reference symbol.
    pub fn reference_symbol_power(&self) -> f64 {
        if self.enabled {
            let b = self.blocks as f64;
            b * self.rho_bar / (1.0 + (b - 1.0).sqrt())
        } else {
            self.rho_bar
        }
    }

    /// Power per normal symbol.
    pub fn normal_symbol_power(&self) -> f64 {
        if self.enabled {
            let b = self.blocks as f64;
            b * self.rho_bar / (b - 1.0 + (b - 1.0).sqrt())
        } else {
            self.rho_bar
        }
    }

    /// Power per active antenna of a normal symbol with `mu` active antennas.
    pub fn normal_antenna_power(&self, mu: usize) -> f64 {
        self.normal_symbol_power() / mu as f64
    }
}
