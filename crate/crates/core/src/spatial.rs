//! Transmit antenna combination (TAC) tables.
//!
//! Out of `C(Mt, Mu)` ways to pick the active antennas only the first
//! `2^floor(log2 C(Mt, Mu))` combinations in lexicographic order are used,
//! so that a whole number of bits selects the combination. Antenna indices
//! are zero-based in this API.

use itertools::Itertools;
use num_integer::binomial;

use crate::bits;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TacTable {
    mt: usize,
    mu: usize,
    combos: Vec<Vec<usize>>,
    bits_per_tac: usize,
}

/// `floor(log2(n))` for `n >= 1`.
pub(crate) fn floor_log2(n: u64) -> usize {
    debug_assert!(n >= 1);
    (63 - n.leading_zeros()) as usize
}

pub fn build_tac_table(mt: usize, mu: usize) -> Result<TacTable> {
    if mu == 0 || mu > mt || mt > 63 {
        return Err(Error::InvalidAntennas { mt, mu });
    }
    let total = binomial(mt as u64, mu as u64);
    let bits_per_tac = floor_log2(total);
    let combos: Vec<Vec<usize>> = (0..mt).combinations(mu).take(1 << bits_per_tac).collect();
    Ok(TacTable {
        mt,
        mu,
        combos,
        bits_per_tac,
    })
}

impl TacTable {
    pub fn mt(&self) -> usize {
        self.mt
    }

    pub fn mu(&self) -> usize {
        self.mu
    }

    pub fn bits_per_tac(&self) -> usize {
        self.bits_per_tac
    }

    /// Valid combinations, position `i` labelled by the binary encoding of `i`.
    pub fn combos(&self) -> &[Vec<usize>] {
        &self.combos
    }

    pub fn len(&self) -> usize {
        self.combos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.combos.is_empty()
    }

    pub fn combo(&self, index: usize) -> &[usize] {
        &self.combos[index]
    }

    pub fn index_of(&self, combo: &[usize]) -> Result<usize> {
        // Sorted lexicographically, so a binary search is valid.
        self.combos
            .binary_search_by(|c| c.as_slice().cmp(combo))
            .map_err(|_| Error::UnknownCombination(combo.to_vec()))
    }

    pub fn bits_to_tac(&self, bits: &[u8]) -> Result<&[usize]> {
        if bits.len() != self.bits_per_tac {
            return Err(Error::BitLength {
                expected: self.bits_per_tac,
                got: bits.len(),
            });
        }
        Ok(&self.combos[bits::to_index(bits)])
    }

    pub fn tac_to_bits(&self, combo: &[usize]) -> Result<Vec<u8>> {
        Ok(bits::from_index(self.index_of(combo)?, self.bits_per_tac))
    }
}
