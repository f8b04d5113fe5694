//! Complex baseband constellations.
//!
//! MPSK and square/rectangular MQAM with Gray labeling and unit average
//! symbol energy. Points are stored indexed by their label value, so the
//! label of `points()[i]` is the `log2(M)`-bit binary encoding of `i`.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bits;
use crate::{Cf64, Error, Result};

/// Constellation family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModKind {
    Psk,
    Qam,
}

impl fmt::Display for ModKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModKind::Psk => write!(f, "psk"),
            ModKind::Qam => write!(f, "qam"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    kind: ModKind,
    order: usize,
    bits_per_symbol: usize,
    points: Vec<Cf64>,
}

fn gray(n: usize) -> usize {
    n ^ (n >> 1)
}

/// One Gray-labeled PAM axis with `levels` points at odd integers
/// `-(L-1), ..., L-1`. Returns amplitudes indexed by label.
fn pam_axis(levels: usize) -> Vec<f64> {
    let mut axis = vec![0.0; levels];
    for pos in 0..levels {
        axis[gray(pos)] = (2 * pos) as f64 - (levels - 1) as f64;
    }
    axis
}

/// Builds a constellation of the given family and order.
///
/// PSK point `k` sits at angle `2*pi*k/M` and carries the Gray label of
/// `k`. QAM uses independent Gray labels on the I axis (high bits) and the
/// Q axis (low bits); odd `log2(M)` gives a rectangular grid with twice as
/// many I levels as Q levels.
pub fn build_constellation(kind: ModKind, order: usize) -> Result<Constellation> {
    let kind_name = match kind {
        ModKind::Psk => "PSK",
        ModKind::Qam => "QAM",
    };
    let invalid = Error::InvalidOrder {
        kind: kind_name,
        order,
    };
    if order < 2 || !order.is_power_of_two() {
        return Err(invalid);
    }
    let bits_per_symbol = order.trailing_zeros() as usize;
    let points = match kind {
        ModKind::Psk => {
            let mut pts = vec![Cf64::new(0.0, 0.0); order];
            for k in 0..order {
                let angle = 2.0 * PI * k as f64 / order as f64;
                pts[gray(k)] = Cf64::from_polar(1.0, angle);
            }
            // Snap the exact axis points so BPSK/QPSK have no 1e-17 residue.
            for p in &mut pts {
                p.re = snap(p.re);
                p.im = snap(p.im);
            }
            pts
        }
        ModKind::Qam => {
            if order < 4 {
                return Err(invalid);
            }
            let q_bits = bits_per_symbol / 2;
            let i_bits = bits_per_symbol - q_bits;
            let i_axis = pam_axis(1 << i_bits);
            let q_axis = pam_axis(1 << q_bits);
            let mut pts: Vec<Cf64> = (0..order)
                .map(|label| {
                    Cf64::new(i_axis[label >> q_bits], q_axis[label & ((1 << q_bits) - 1)])
                })
                .collect();
            let energy = pts.iter().map(|p| p.norm_sqr()).sum::<f64>() / order as f64;
            let scale = energy.sqrt().recip();
            for p in &mut pts {
                *p *= scale;
            }
            pts
        }
    };
    Ok(Constellation {
        kind,
        order,
        bits_per_symbol,
        points,
    })
}

fn snap(v: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() < 1e-15 {
        r
    } else {
        v
    }
}

impl Constellation {
    pub fn kind(&self) -> ModKind {
        self.kind
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    /// Points indexed by label value.
    pub fn points(&self) -> &[Cf64] {
        &self.points
    }

    pub fn point(&self, label: usize) -> Cf64 {
        self.points[label]
    }

    pub fn label_bits(&self, label: usize) -> Vec<u8> {
        bits::from_index(label, self.bits_per_symbol)
    }

    pub fn map_bits(&self, bits: &[u8]) -> Result<Cf64> {
        if bits.len() != self.bits_per_symbol {
            return Err(Error::BitLength {
                expected: self.bits_per_symbol,
                got: bits.len(),
            });
        }
        Ok(self.points[bits::to_index(bits)])
    }

    /// Label of the nearest point; ties go to the lowest label value.
    pub fn demap_label(&self, x: Cf64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (label, p) in self.points.iter().enumerate() {
            let d = (x - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = label;
            }
        }
        best
    }

    pub fn demap_point(&self, x: Cf64) -> Vec<u8> {
        self.label_bits(self.demap_label(x))
    }

    /// Mean of `|x|^2` over the points.
    pub fn mean_energy(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.order as f64
    }
}

impl fmt::Display for Constellation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.order, self.kind.to_string().to_uppercase())
    }
}
