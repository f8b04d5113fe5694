//! Complexity and throughput comparison tables, regenerated from the
//! closed forms in [`crate::analysis`].

use std::fmt::Write as _;

use crate::analysis::{coherent_throughput, flops, percent_change, pilot_length, throughput};
use crate::engine::Scheme;
use crate::spatial::floor_log2;
use crate::{Error, Result};

use num_integer::binomial;

const MR: usize = 2;
const MU: usize = 2;
const FRAME_LENGTHS: [usize; 2] = [100, 400];

/// One row of a complexity comparison: percentage decrease in flops of the
/// proposed detector relative to the reference detector, for `K = 100`
/// and `K = 400`. Negative values are increases.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityRow {
    pub se: usize,
    pub reference: String,
    pub proposed: String,
    pub change: [f64; 2],
}

fn tac_bits(mt: usize, mu: usize) -> usize {
    floor_log2(binomial(mt as u64, mu as u64))
}

fn complexity_row(
    se: usize,
    reference: (Scheme, usize, usize),
    proposed: (Scheme, usize, usize),
) -> ComplexityRow {
    let describe = |(s, mt, m): (Scheme, usize, usize)| format!("{s} {mt}x{MR} M={m}");
    let change = FRAME_LENGTHS.map(|k| {
        let cost = |(s, mt, m): (Scheme, usize, usize)| {
            let (mu, pl) = match s {
                Scheme::Gdsm => (1, 0),
                Scheme::Gsm1 | Scheme::Gsm2 => (MU, pilot_length(mt)),
                _ => (MU, 0),
            };
            flops(s, mt, MR, mu, m, k, pl)
        };
        percent_change(cost(reference), cost(proposed))
    });
    ComplexityRow {
        se,
        reference: describe(reference),
        proposed: describe(proposed),
        change,
    }
}

/// Complexity tables 4 (D-GSM vs GSM-1), 5 (D-MGSM vs GSM-2) and 6
/// (D-MGSM vs GD-SM).
pub fn complexity_table(id: u32) -> Result<Vec<ComplexityRow>> {
    let rows = match id {
        4 => [(5, 4), (6, 5), (7, 5), (8, 5)]
            .into_iter()
            .map(|(se, mt)| {
                let m = 1 << (se - tac_bits(mt, MU));
                complexity_row(se, (Scheme::Gsm1, mt, m), (Scheme::Dgsm, mt, m))
            })
            .collect(),
        5 => [(5, 5), (6, 4), (7, 5), (8, 4)]
            .into_iter()
            .map(|(se, mt)| {
                let m = 1 << ((se - tac_bits(mt, MU)) / MU);
                complexity_row(se, (Scheme::Gsm2, mt, m), (Scheme::Dmgsm, mt, m))
            })
            .collect(),
        6 => [
            (5, (4, 8), (5, 2)),
            (6, (4, 16), (4, 4)),
            (7, (4, 32), (5, 4)),
            (8, (8, 32), (4, 8)),
            (9, (8, 64), (5, 8)),
            (10, (16, 64), (7, 8)),
        ]
        .into_iter()
        .map(|(se, (gmt, gm), (dmt, dm))| {
            complexity_row(se, (Scheme::Gdsm, gmt, gm), (Scheme::Dmgsm, dmt, dm))
        })
        .collect(),
        _ => return Err(Error::UnknownTable(id)),
    };
    Ok(rows)
}

/// Throughput comparison row, percentages for `K = 100` and `K = 400`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputRow {
    pub reference: String,
    pub reference_pct: [f64; 2],
    pub proposed: String,
    pub proposed_pct: [f64; 2],
}

/// Throughput tables 8 (coherent GSM with `4 Mt` pilots) and 9 (GD-SM).
pub fn throughput_table(id: u32) -> Result<Vec<ThroughputRow>> {
    let pct = |f: fn(usize, usize) -> f64, mt| FRAME_LENGTHS.map(|k| 100.0 * f(k, mt));
    let rows = match id {
        8 => [4, 5]
            .into_iter()
            .map(|mt| ThroughputRow {
                reference: format!("GSM-1/GSM-2 Mt={mt} Pl={}", pilot_length(mt)),
                reference_pct: pct(coherent_throughput, mt),
                proposed: format!("D-GSM/D-MGSM Mt={mt}"),
                proposed_pct: pct(throughput, mt),
            })
            .collect(),
        9 => [(4, 4), (8, 5), (16, 6)]
            .into_iter()
            .map(|(gmt, pmt)| ThroughputRow {
                reference: format!("GD-SM Mt={gmt}"),
                reference_pct: pct(throughput, gmt),
                proposed: format!("D-GSM/D-MGSM Mt={pmt} Mu={MU}"),
                proposed_pct: pct(throughput, pmt),
            })
            .collect(),
        _ => return Err(Error::UnknownTable(id)),
    };
    Ok(rows)
}

/// Truncates to one decimal place, the way the throughput tables print.
pub fn truncate_1dp(pct: f64) -> f64 {
    (pct * 10.0 + 1e-9).floor() / 10.0
}

pub fn complexity_csv(id: u32) -> Result<String> {
    let rows = complexity_table(id)?;
    let mut out = String::from("se_bpcu,reference,proposed,change_pct_k100,change_pct_k400\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{:.4},{:.4}",
            r.se, r.reference, r.proposed, r.change[0], r.change[1]
        );
    }
    Ok(out)
}

pub fn throughput_csv(id: u32) -> Result<String> {
    let rows = throughput_table(id)?;
    let mut out = String::from(
        "reference,reference_k100,reference_k400,proposed,proposed_k100,proposed_k400\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{},{:.1},{:.1},{},{:.1},{:.1}",
            r.reference,
            truncate_1dp(r.reference_pct[0]),
            truncate_1dp(r.reference_pct[1]),
            r.proposed,
            truncate_1dp(r.proposed_pct[0]),
            truncate_1dp(r.proposed_pct[1])
        );
    }
    Ok(out)
}
