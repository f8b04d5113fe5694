//! Maximum-likelihood detectors and the LS channel estimator.
//!
//! Every detector here is the same exhaustive search: given a basis matrix
//! whose columns stand in for the channel (the received reference block for
//! the differential schemes, an estimate or the true `H` for the coherent
//! ones), pick the hypothesis `x` that minimizes `||y - basis * x||^2`.
//! Products `basis * x` are computed once per frame and reused for all `K`
//! normal symbols.
//!
//! Real additions and multiplications can be tallied through [`OpCount`].
//! The tally follows the usual accounting: a complex multiply is four real
//! multiplies and two real adds, a complex add is two real adds, and the
//! squared norm of an `Mr`-vector is `2Mr` multiplies and `2Mr - 1` adds.

use nalgebra::{DMatrix, DVector};

use crate::engine::{Scheme, SystemConfig};
use crate::modem::Constellation;
use crate::spatial::TacTable;
use crate::txframe::{encode_dgsm, encode_dmgsm, SymbolVector, PILOTS_PER_ANTENNA};
use crate::{bits, Cf64, Error, Result};

/// How a hypothesis places symbols on its active antennas.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapKind {
    /// One symbol repeated on all active antennas (D-GSM, GSM-1, GD-SM).
    Shared,
    /// Independent symbols per active antenna (D-MGSM, GSM-2).
    Distinct,
}

/// Full symbol map. Entry `i` carries label `i`, so map index order is
/// label order.
#[derive(Debug, Clone)]
pub struct HypothesisMap {
    kind: MapKind,
    bits: usize,
    vectors: Vec<SymbolVector>,
}

impl HypothesisMap {
    /// Builds the map by running the encoder over every label, scaling each
    /// vector by `amplitude`.
    pub fn new(kind: MapKind, tac: &TacTable, c: &Constellation, amplitude: f64) -> Result<Self> {
        let bits = tac.bits_per_tac()
            + c.bits_per_symbol()
                * match kind {
                    MapKind::Shared => 1,
                    MapKind::Distinct => tac.mu(),
                };
        let vectors = (0..1usize << bits)
            .map(|label| {
                let b = bits::from_index(label, bits);
                match kind {
                    MapKind::Shared => encode_dgsm(&b, tac, c),
                    MapKind::Distinct => encode_dmgsm(&b, tac, c),
                }
                .map(|v| v.scaled(amplitude))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(HypothesisMap {
            kind,
            bits,
            vectors,
        })
    }

    pub fn for_config(cfg: &SystemConfig) -> Result<Self> {
        let kind = match cfg.scheme {
            Scheme::Dgsm | Scheme::Gsm1 | Scheme::Gdsm => MapKind::Shared,
            Scheme::Dmgsm | Scheme::Gsm2 => MapKind::Distinct,
        };
        HypothesisMap::new(
            kind,
            &cfg.tac_table()?,
            &cfg.constellation()?,
            cfg.antenna_amplitude(),
        )
    }

    pub fn kind(&self) -> MapKind {
        self.kind
    }

    /// Bits per hypothesis label (`m`, the bpcu).
    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vector(&self, label: usize) -> &SymbolVector {
        &self.vectors[label]
    }

    pub fn vectors(&self) -> &[SymbolVector] {
        &self.vectors
    }

    pub fn label_bits(&self, label: usize) -> Vec<u8> {
        bits::from_index(label, self.bits)
    }

    pub fn mean_energy(&self) -> f64 {
        self.vectors.iter().map(SymbolVector::energy).sum::<f64>() / self.len() as f64
    }
}

/// Sink for real-operation counts.
pub trait OpCount {
    fn adds(&mut self, n: u64);
    fn muls(&mut self, n: u64);
}

impl OpCount for () {
    #[inline]
    fn adds(&mut self, _: u64) {}
    #[inline]
    fn muls(&mut self, _: u64) {}
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FlopCounter {
    pub real_adds: u64,
    pub real_muls: u64,
}

impl FlopCounter {
    pub fn total(&self) -> u64 {
        self.real_adds + self.real_muls
    }
}

impl OpCount for FlopCounter {
    fn adds(&mut self, n: u64) {
        self.real_adds += n;
    }
    fn muls(&mut self, n: u64) {
        self.real_muls += n;
    }
}

/// ML detector bound to one frame's basis matrix.
#[derive(Debug, Clone)]
pub struct Detector {
    mr: usize,
    /// `len x Mr`, row `i` is `basis * x_i`.
    candidates: Vec<Cf64>,
}

impl Detector {
    pub fn new(basis: &DMatrix<Cf64>, map: &HypothesisMap) -> Result<Self> {
        Self::with_counter(basis, map, &mut ())
    }

    pub fn with_counter<C: OpCount>(
        basis: &DMatrix<Cf64>,
        map: &HypothesisMap,
        ops: &mut C,
    ) -> Result<Self> {
        let mr = basis.nrows();
        if let Some(v) = map.vectors.first() {
            if v.mt() != basis.ncols() {
                return Err(Error::Dimension(format!(
                    "basis has {} columns, hypotheses have {} entries",
                    basis.ncols(),
                    v.mt()
                )));
            }
        }
        let m = mr as u64;
        let mut candidates = Vec::with_capacity(map.len() * mr);
        let mut acc = vec![Cf64::new(0.0, 0.0); mr];
        for v in &map.vectors {
            let active = v.active();
            let nu = active.len() as u64;
            match map.kind {
                MapKind::Shared => {
                    // (sum of active columns) * x
                    let x = v.entries()[active[0]];
                    acc.copy_from_slice(basis.column(active[0]).as_slice());
                    for &a in &active[1..] {
                        for (s, b) in acc.iter_mut().zip(basis.column(a).iter()) {
                            *s += b;
                        }
                    }
                    for s in &mut acc {
                        *s *= x;
                    }
                    ops.adds(2 * m * (nu - 1) + 2 * m);
                    ops.muls(4 * m);
                }
                MapKind::Distinct => {
                    acc.fill(Cf64::new(0.0, 0.0));
                    for (i, &a) in active.iter().enumerate() {
                        let x = v.entries()[a];
                        for (s, b) in acc.iter_mut().zip(basis.column(a).iter()) {
                            if i == 0 {
                                *s = b * x;
                            } else {
                                *s += b * x;
                            }
                        }
                    }
                    ops.adds(2 * m * nu + 2 * m * (nu - 1));
                    ops.muls(4 * m * nu);
                }
            }
            candidates.extend_from_slice(&acc);
        }
        Ok(Detector { mr, candidates })
    }

    pub fn len(&self) -> usize {
        self.candidates.len() / self.mr.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    /// `||y - basis * x_label||^2`.
    pub fn metric(&self, y: &DVector<Cf64>, label: usize) -> f64 {
        let row = &self.candidates[label * self.mr..(label + 1) * self.mr];
        y.iter().zip(row).map(|(a, b)| (a - b).norm_sqr()).sum()
    }

    /// Label of the minimum-metric hypothesis; ties go to the lowest label.
    pub fn detect(&self, y: &DVector<Cf64>) -> usize {
        self.detect_counted(y, &mut ())
    }

    pub fn detect_counted<C: OpCount>(&self, y: &DVector<Cf64>, ops: &mut C) -> usize {
        let m = self.mr as u64;
        let y = y.as_slice();
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (label, row) in self.candidates.chunks_exact(self.mr).enumerate() {
            let mut d = 0.0;
            for (a, b) in y.iter().zip(row) {
                let e = a - b;
                d += e.re * e.re + e.im * e.im;
            }
            if d < best_d {
                best_d = d;
                best = label;
            }
        }
        let n = self.len() as u64;
        // subtraction, then squared norm
        ops.adds(n * (2 * m + 2 * m - 1));
        ops.muls(n * 2 * m);
        best
    }
}

fn check_rows(y: &DVector<Cf64>, basis: &DMatrix<Cf64>) {
    debug_assert_eq!(
        y.len(),
        basis.nrows(),
        "received vector length vs basis rows"
    );
}

/// D-GSM ML detection of one normal symbol against the received
/// reference block.
pub fn detect_dgsm(yn: &DVector<Cf64>, yr: &DMatrix<Cf64>, map: &HypothesisMap) -> Result<Vec<u8>> {
    check_rows(yn, yr);
    Ok(map.label_bits(Detector::new(yr, map)?.detect(yn)))
}

/// D-MGSM ML detection; identical search over the distinct-symbol map.
pub fn detect_dmgsm(
    yn: &DVector<Cf64>,
    yr: &DMatrix<Cf64>,
    map: &HypothesisMap,
) -> Result<Vec<u8>> {
    check_rows(yn, yr);
    Ok(map.label_bits(Detector::new(yr, map)?.detect(yn)))
}

/// GD-SM: single active antenna, `min ||yn - yr_l x||^2`.
pub fn detect_gdsm(
    yn: &DVector<Cf64>,
    yr_cols: &DMatrix<Cf64>,
    map: &HypothesisMap,
) -> Result<Vec<u8>> {
    check_rows(yn, yr_cols);
    Ok(map.label_bits(Detector::new(yr_cols, map)?.detect(yn)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GsmVariant {
    /// Same symbol on every active antenna.
    Gsm1,
    /// Distinct symbols on the active antennas.
    Gsm2,
}

/// Coherent GSM detection with a channel estimate (or the true channel).
pub fn detect_gsm_coherent(
    y: &DVector<Cf64>,
    hhat: &DMatrix<Cf64>,
    map: &HypothesisMap,
    variant: GsmVariant,
) -> Result<Vec<u8>> {
    let expected = match variant {
        GsmVariant::Gsm1 => MapKind::Shared,
        GsmVariant::Gsm2 => MapKind::Distinct,
    };
    // With one active antenna both variants describe plain SM.
    let single = map.vectors.first().is_some_and(|v| v.active().len() == 1);
    if map.kind != expected && !single {
        return Err(Error::UnsupportedScheme(format!(
            "{variant:?} with a {:?} hypothesis map",
            map.kind
        )));
    }
    check_rows(y, hhat);
    Ok(map.label_bits(Detector::new(hhat, map)?.detect(y)))
}

/// Orthogonal-in-time pilot layout: antenna `i` sends a unit pilot alone in
/// slots `i + r * Mt` for `r = 0..repeats`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PilotSchedule {
    pub mt: usize,
    pub repeats: usize,
}

impl PilotSchedule {
    pub fn new(mt: usize) -> Self {
        PilotSchedule {
            mt,
            repeats: PILOTS_PER_ANTENNA,
        }
    }

    /// Pilot length `P_l`.
    pub fn len(&self) -> usize {
        self.mt * self.repeats
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn slots_for(&self, antenna: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.repeats).map(move |r| r * self.mt + antenna)
    }
}

/// Least-squares channel estimate: column `i` is the mean of the received
/// vectors in antenna `i`'s pilot slots.
pub fn ls_estimate(ypilot: &DMatrix<Cf64>, schedule: &PilotSchedule) -> Result<DMatrix<Cf64>> {
    if ypilot.ncols() != schedule.len() || schedule.repeats == 0 {
        return Err(Error::Dimension(format!(
            "pilot block has {} slots, schedule expects {}",
            ypilot.ncols(),
            schedule.len()
        )));
    }
    let scale = (schedule.repeats as f64).recip();
    let mut hhat = DMatrix::zeros(ypilot.nrows(), schedule.mt);
    for i in 0..schedule.mt {
        let mut col = hhat.column_mut(i);
        for s in schedule.slots_for(i) {
            col += ypilot.column(s);
        }
        col *= Cf64::new(scale, 0.0);
    }
    Ok(hhat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{complex_normal, draw_channel, transmit};
    use crate::modem::{build_constellation, ModKind};
    use crate::spatial::build_tac_table;
    use crate::txframe::{pilot_block, reference_block, PowerAllocation, TxFrame};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn map(kind: MapKind, mt: usize, mu: usize, mk: ModKind, order: usize) -> HypothesisMap {
        let tac = build_tac_table(mt, mu).unwrap();
        let c = build_constellation(mk, order).unwrap();
        HypothesisMap::new(kind, &tac, &c, 1.0).unwrap()
    }

    fn noiseless_rx(
        rng: &mut ChaCha8Rng,
        mr: usize,
        x: &SymbolVector,
    ) -> (DMatrix<Cf64>, DVector<Cf64>) {
        let ch = draw_channel(mr, x.mt(), rng);
        let frame = TxFrame {
            reference: reference_block(x.mt()),
            normals: vec![x.clone()],
            bits: Vec::new(),
        };
        let rx = transmit(&frame, &ch, &PowerAllocation::noiseless(2), rng).unwrap();
        (rx.yr, rx.yn[0].clone())
    }

    #[test]
    fn map_sizes() {
        let m = map(MapKind::Shared, 5, 2, ModKind::Psk, 4);
        assert_eq!(m.len(), 8 * 4);
        assert_eq!(m.bits(), 5);
        let m = map(MapKind::Distinct, 5, 2, ModKind::Qam, 4);
        assert_eq!(m.len(), 8 * 16);
        assert_eq!(m.bits(), 7);
        let m = map(MapKind::Shared, 4, 1, ModKind::Psk, 2);
        assert_eq!(m.len(), 8);
    }

    #[test]
    fn worked_example_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = map(MapKind::Shared, 5, 2, ModKind::Psk, 2);
        let label = bits::to_index(&bits::parse("1100"));
        let (yr, yn) = noiseless_rx(&mut rng, 2, m.vector(label));
        assert_eq!(bits::format(&detect_dgsm(&yn, &yr, &m).unwrap()), "1100");
        let det = Detector::new(&yr, &m).unwrap();
        assert!(det.metric(&yn, label) < 1e-24);
    }

    #[test]
    fn noiseless_recovery_all_kinds() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let cases = [
            (MapKind::Shared, 4, 2, ModKind::Qam, 4, 2),
            (MapKind::Shared, 5, 2, ModKind::Qam, 16, 2),
            (MapKind::Distinct, 5, 2, ModKind::Qam, 4, 2),
            (MapKind::Distinct, 4, 2, ModKind::Qam, 8, 3),
            (MapKind::Shared, 4, 1, ModKind::Psk, 8, 2),
        ];
        for (kind, mt, mu, mk, order, mr) in cases {
            let m = map(kind, mt, mu, mk, order);
            for _ in 0..1000 {
                let label = rng.gen_range(0..m.len());
                let (yr, yn) = noiseless_rx(&mut rng, mr, m.vector(label));
                let det = Detector::new(&yr, &m).unwrap();
                assert_eq!(det.detect(&yn), label);
                assert!(det.metric(&yn, label) < 1e-20);
                for l in 0..m.len() {
                    assert!(det.metric(&yn, l) >= 0.0);
                }
            }
        }
    }

    #[test]
    fn gdsm_exhaustive_small_map() {
        // Mt = 2, BPSK: four hypotheses, brute-force the argmin directly.
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let m = map(MapKind::Shared, 2, 1, ModKind::Psk, 2);
        assert_eq!(m.len(), 4);
        for _ in 0..1000 {
            let yr = DMatrix::from_fn(2, 2, |_, _| complex_normal(&mut rng, 1.0));
            let yn = DVector::from_fn(2, |_, _| complex_normal(&mut rng, 1.0));
            let brute = (0..4)
                .map(|l| {
                    let v = m.vector(l);
                    let a = v.active()[0];
                    let r: f64 = (0..2)
                        .map(|i| (yn[i] - yr[(i, a)] * v.entries()[a]).norm_sqr())
                        .sum();
                    (l, r)
                })
                .fold((0, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b })
                .0;
            assert_eq!(detect_gdsm(&yn, &yr, &m).unwrap(), m.label_bits(brute));
        }
    }

    #[test]
    fn single_antenna_distinct_map_matches_gdsm() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let shared = map(MapKind::Shared, 4, 1, ModKind::Qam, 16);
        let distinct = map(MapKind::Distinct, 4, 1, ModKind::Qam, 16);
        for _ in 0..500 {
            let yr = DMatrix::from_fn(2, 4, |_, _| complex_normal(&mut rng, 1.0));
            let yn = DVector::from_fn(2, |_, _| complex_normal(&mut rng, 1.0));
            assert_eq!(
                detect_dmgsm(&yn, &yr, &distinct).unwrap(),
                detect_gdsm(&yn, &yr, &shared).unwrap()
            );
            assert_eq!(
                detect_gsm_coherent(&yn, &yr, &distinct, GsmVariant::Gsm2).unwrap(),
                detect_gsm_coherent(&yn, &yr, &shared, GsmVariant::Gsm1).unwrap()
            );
        }
    }

    #[test]
    fn coherent_perfect_csi_recovery() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for (kind, variant) in [
            (MapKind::Shared, GsmVariant::Gsm1),
            (MapKind::Distinct, GsmVariant::Gsm2),
        ] {
            let m = map(kind, 5, 2, ModKind::Psk, 4);
            for _ in 0..1000 {
                let h = draw_channel(2, 5, &mut rng).h;
                let label = rng.gen_range(0..m.len());
                let y = &h * DVector::from_column_slice(m.vector(label).entries());
                assert_eq!(
                    detect_gsm_coherent(&y, &h, &m, variant).unwrap(),
                    m.label_bits(label)
                );
            }
        }
        let m = map(MapKind::Shared, 5, 2, ModKind::Psk, 4);
        let h = draw_channel(2, 5, &mut rng).h;
        let y = DVector::zeros(2);
        assert!(detect_gsm_coherent(&y, &h, &m, GsmVariant::Gsm2).is_err());
    }

    #[test]
    fn argmin_is_scale_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let m = map(MapKind::Distinct, 5, 2, ModKind::Qam, 4);
        for _ in 0..500 {
            let yr = DMatrix::from_fn(2, 5, |_, _| complex_normal(&mut rng, 1.0));
            let yn = DVector::from_fn(2, |_, _| complex_normal(&mut rng, 2.0));
            let c = complex_normal(&mut rng, 1.0) + Cf64::new(0.1, 0.0);
            let a = detect_dmgsm(&yn, &yr, &m).unwrap();
            let b = detect_dmgsm(&(&yn * c), &(&yr * c), &m).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn ls_estimate_noiseless_and_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let sched = PilotSchedule::new(4);
        assert_eq!(sched.len(), 16);
        let h = draw_channel(2, 4, &mut rng).h;
        let yp = &h * pilot_block(4);
        assert!((ls_estimate(&yp, &sched).unwrap() - &h).norm() < 1e-12);

        let sigma2 = 0.5;
        let trials = 20_000;
        let mut err = 0.0;
        for _ in 0..trials {
            let mut yp = &h * pilot_block(4);
            for v in yp.iter_mut() {
                *v += complex_normal(&mut rng, sigma2);
            }
            let hhat = ls_estimate(&yp, &sched).unwrap();
            err += (hhat - &h).iter().map(|e| e.norm_sqr()).sum::<f64>();
        }
        let per_entry = err / (trials * 8) as f64;
        assert!(
            (per_entry / (sigma2 / 4.0) - 1.0).abs() < 0.1,
            "{per_entry}"
        );

        assert!(ls_estimate(&DMatrix::zeros(2, 15), &sched).is_err());
    }

    #[test]
    fn op_counts_per_hypothesis() {
        // Shared symbol: 2MrMu + 4Mr per hypothesis; distinct: 8MrMu - 2Mr.
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let yr = DMatrix::from_fn(3, 5, |_, _| complex_normal(&mut rng, 1.0));
        let shared = map(MapKind::Shared, 5, 2, ModKind::Psk, 2);
        let mut ops = FlopCounter::default();
        Detector::with_counter(&yr, &shared, &mut ops).unwrap();
        assert_eq!(ops.total(), 16 * (2 * 3 * 2 + 4 * 3));
        let distinct = map(MapKind::Distinct, 5, 2, ModKind::Psk, 2);
        let mut ops = FlopCounter::default();
        let det = Detector::with_counter(&yr, &distinct, &mut ops).unwrap();
        assert_eq!(ops.total(), 32 * (8 * 3 * 2 - 2 * 3));
        let mut ops = FlopCounter::default();
        det.detect_counted(&DVector::zeros(3), &mut ops);
        assert_eq!(ops.total(), 32 * (6 * 3 - 1));
    }
}
