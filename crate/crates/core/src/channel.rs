//! Quasi-static Rayleigh block fading with AWGN.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::txframe::{PowerAllocation, TxFrame};
use crate::{Cf64, Error, Result};

/// One `Mr x Mt` channel matrix, held fixed over a whole frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h: DMatrix<Cf64>,
}

/// Received frame: the known leading block and the `K` normal slots.
#[derive(Debug, Clone, PartialEq)]
pub struct RxFrame {
    /// `Mr x slots` reception of the reference (or pilot) block.
    pub yr: DMatrix<Cf64>,
    pub yn: Vec<DVector<Cf64>>,
}

/// Circularly-symmetric complex Gaussian sample with variance `var`,
/// built from two real normals of variance `var / 2`.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Cf64 {
    let s = (0.5 * var).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Cf64::new(s * re, s * im)
}

pub fn draw_channel<R: Rng + ?Sized>(mr: usize, mt: usize, rng: &mut R) -> ChannelRealization {
    ChannelRealization {
        h: DMatrix::from_fn(mr, mt, |_, _| complex_normal(rng, 1.0)),
    }
}

fn add_noise<R: Rng + ?Sized>(m: &mut [Cf64], var: f64, rng: &mut R) {
    if var > 0.0 {
        for v in m {
            *v += complex_normal(rng, var);
        }
    }
}

/// Passes a frame through `H`. The leading block sees noise variance
/// `sigma2_r`, the normal slots `sigma2_n`.
pub fn transmit<R: Rng + ?Sized>(
    frame: &TxFrame,
    ch: &ChannelRealization,
    pa: &PowerAllocation,
    rng: &mut R,
) -> Result<RxFrame> {
    let h = &ch.h;
    if h.ncols() != frame.reference.nrows() {
        return Err(Error::Dimension(format!(
            "channel has {} columns, frame has {} transmit antennas",
            h.ncols(),
            frame.reference.nrows()
        )));
    }
    let mut yr = h * &frame.reference;
    add_noise(yr.as_mut_slice(), pa.sigma2_r, rng);
    let mut yn = Vec::with_capacity(frame.normals.len());
    for x in &frame.normals {
        if x.mt() != h.ncols() {
            return Err(Error::Dimension(format!(
                "symbol vector of length {} for {} transmit antennas",
                x.mt(),
                h.ncols()
            )));
        }
        let mut y = DVector::zeros(h.nrows());
        for &a in x.active() {
            y.axpy(x.entries()[a], &h.column(a), Cf64::new(1.0, 0.0));
        }
        add_noise(y.as_mut_slice(), pa.sigma2_n, rng);
        yn.push(y);
    }
    Ok(RxFrame { yr, yn })
}
