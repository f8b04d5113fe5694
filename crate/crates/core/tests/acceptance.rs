//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line.
//!
//! Run with `cargo test --test acceptance -- --nocapture --include-ignored`
//! to see every line. The ignored tests check statements that do not hold
//! as written (table entries that do not follow from their own formulas,
//! or bounds too tight to beat sampling noise) and fail by design.

use dgsm::analysis::{bound_slope, flops, pep_from_distance, PepParams};
use dgsm::channel::draw_channel;
use dgsm::detect::{Detector, FlopCounter, HypothesisMap};
use dgsm::engine::{
    run_sweep, run_sweep_with, snr_at_ber, BerPoint, Csi, Scheme, SweepOptions, SystemConfig,
};
use dgsm::modem::ModKind;
use dgsm::tables::{complexity_table, throughput_table, truncate_1dp};
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn report(name: &str, ok: bool, detail: impl AsRef<str>) {
    println!(
        "{} {name}: {}",
        if ok { "PASS" } else { "FAIL" },
        detail.as_ref()
    );
}

fn cfg(
    scheme: Scheme,
    mt: usize,
    mr: usize,
    mu: usize,
    kind: ModKind,
    order: usize,
) -> SystemConfig {
    let mut c = SystemConfig::new(scheme, mt, mr, mu, kind, order);
    c.seed = 11;
    c
}

fn snr_grid(lo: f64, hi: f64) -> Vec<f64> {
    (0..)
        .map(|i| lo + i as f64)
        .take_while(|&s| s <= hi)
        .collect()
}

/// SNR at BER 1e-3, from a 1 dB sweep. Errors cluster within a frame
/// (shared channel and reference noise), so points need far more than the
/// default 200 errors for a gap accurate to a few tenths of a dB.
/// The sweep stops at the first point below the target.
fn snr_1e3(c: &SystemConfig, lo: f64, hi: f64) -> f64 {
    let mut pts = Vec::new();
    for snr in snr_grid(lo, hi) {
        let p = run_sweep(c, &[snr], 5000, 1_000_000).unwrap()[0];
        pts.push(p);
        if p.ber < 1e-3 {
            break;
        }
    }
    snr_at_ber(&pts, 1e-3).unwrap_or_else(|| panic!("{c:?} never crossed 1e-3: {pts:?}"))
}

#[test]
fn noiseless_round_trip() {
    let start = Instant::now();
    let mut configs = Vec::new();
    for scheme in [
        Scheme::Dgsm,
        Scheme::Dmgsm,
        Scheme::Gdsm,
        Scheme::Gsm1,
        Scheme::Gsm2,
    ] {
        for mt in [4, 5, 6] {
            for mr in [2, 3, 4] {
                let mus: &[usize] = if scheme == Scheme::Gdsm {
                    &[1]
                } else {
                    &[2, 3]
                };
                for &mu in mus {
                    for kind in [ModKind::Psk, ModKind::Qam] {
                        for order in [4, 8, 16, 32, 64] {
                            let mut c = cfg(scheme, mt, mr, mu, kind, order);
                            c.power_allocation = !scheme.is_coherent();
                            // Largest spectral efficiency simulated is 8 bpcu.
                            if c.validate().is_ok() && c.bits_per_symbol() <= 8 {
                                configs.push(c);
                            }
                        }
                    }
                }
            }
        }
    }
    let opts = SweepOptions {
        min_errors: u64::MAX,
        max_frames: 1000,
        noiseless: true,
        ..SweepOptions::default()
    };
    let mut bad = Vec::new();
    for c in &configs {
        let p = run_sweep_with(c, &[0.0], &opts).unwrap()[0];
        assert_eq!(p.frames_run, 1000);
        if p.bit_errors != 0 {
            bad.push((
                c.scheme,
                c.mt,
                c.mr,
                c.mu,
                c.mod_kind,
                c.order,
                p.bit_errors,
            ));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let ok = bad.is_empty() && secs < 60.0;
    report(
        "noiseless round trip",
        ok,
        format!(
            "{} configurations x 1000 frames, {} with errors, {secs:.1} s",
            configs.len(),
            bad.len()
        ),
    );
    assert!(bad.is_empty(), "bit errors without noise: {bad:?}");
    assert!(secs < 60.0, "took {secs:.1} s");
}

fn dgsm_4x2_pa() -> SystemConfig {
    let mut c = cfg(Scheme::Dgsm, 4, 2, 2, ModKind::Psk, 4);
    c.power_allocation = true;
    c
}

/// Sweep at 200 errors per point, as specified. The bound sits within a
/// few percent of the true BER at high SNR while a 200-error estimate
/// (errors cluster by frame) scatters by tens of percent, so some points
/// land above the bound.
#[test]
#[ignore = "200-error estimates scatter well beyond the bound's few-percent margin"]
fn bound_is_tight_for_dgsm() {
    let pts = run_sweep(&dgsm_4x2_pa(), &snr_grid(0.0, 30.0), 200, 200_000).unwrap();
    let mut ok = true;
    let mut worst_ratio: f64 = 0.0;
    let mut above = Vec::new();
    for p in &pts {
        let bound = p.bound.unwrap();
        if p.bit_errors == 0 {
            continue;
        }
        if p.ber <= 1e-2 && p.ber > bound {
            ok = false;
            above.push(p.snr_db);
        }
        if p.ber <= 1e-3 {
            worst_ratio = worst_ratio.max(bound / p.ber);
            if bound > 3.0 * p.ber {
                ok = false;
            }
        }
    }
    let covered = pts.iter().any(|p| p.ber <= 1e-3 && p.bit_errors > 0);
    report(
        "bound tightness (200 errors)",
        ok && covered,
        format!(
            "bound/BER at most {worst_ratio:.2} where BER <= 1e-3; BER above bound at {above:?} dB"
        ),
    );
    assert!(covered && ok);
}

/// Same comparison with 20000 errors per point at the high-SNR end.
#[test]
fn bound_is_tight_for_dgsm_high_confidence() {
    let pts = run_sweep(&dgsm_4x2_pa(), &[12.0, 16.0, 20.0, 24.0], 20_000, 2_000_000).unwrap();
    let mut ok = true;
    let mut detail = Vec::new();
    for p in &pts {
        let bound = p.bound.unwrap();
        assert!(p.bit_errors >= 20_000, "{p:?}");
        ok &= p.ber <= bound && bound <= 3.0 * p.ber;
        detail.push(format!("{} dB {:.3}", p.snr_db, p.ber / bound));
    }
    report(
        "bound tightness (20000 errors)",
        ok,
        format!("BER/bound: {}", detail.join(", ")),
    );
    assert!(ok);
}

#[test]
fn coherent_penalty_at_most_one_db() {
    let mut d = cfg(Scheme::Dgsm, 4, 2, 2, ModKind::Psk, 4);
    d.power_allocation = true;
    let mut g = cfg(Scheme::Gsm1, 4, 2, 2, ModKind::Psk, 4);
    g.csi = Csi::Ls;
    let (sd, sg) = (snr_1e3(&d, 8.0, 28.0), snr_1e3(&g, 8.0, 28.0));
    let gap = sd - sg;
    report(
        "coherent penalty",
        gap <= 1.0,
        format!("D-GSM {sd:.2} dB, GSM-1 (LS) {sg:.2} dB, gap {gap:.2} dB"),
    );
    assert!(gap <= 1.0);
}

#[test]
fn power_allocation_gain() {
    let mut pa = cfg(Scheme::Dmgsm, 5, 2, 2, ModKind::Qam, 4);
    pa.split_mu_power = true;
    pa.power_allocation = true;
    let mut eq = pa;
    eq.power_allocation = false;
    assert_eq!(pa.bits_per_symbol(), 7);
    let (sp, se) = (snr_1e3(&pa, 12.0, 34.0), snr_1e3(&eq, 12.0, 34.0));
    let gain = se - sp;
    let ok = (gain - 1.0).abs() <= 0.5;
    report(
        "power allocation gain",
        ok,
        format!("unequal {sp:.2} dB, equal {se:.2} dB, gain {gain:.2} dB"),
    );
    assert!(ok);
}

#[test]
fn dmgsm_beats_gdsm_at_8_bpcu() {
    let mut d = cfg(Scheme::Dmgsm, 4, 2, 2, ModKind::Qam, 8);
    d.split_mu_power = true;
    d.power_allocation = true;
    let mut g = cfg(Scheme::Gdsm, 4, 2, 1, ModKind::Qam, 64);
    g.power_allocation = true;
    assert_eq!(d.bits_per_symbol(), 8);
    assert_eq!(g.bits_per_symbol(), 8);
    let (sd, sg) = (snr_1e3(&d, 14.0, 36.0), snr_1e3(&g, 14.0, 36.0));
    let gain = sg - sd;
    report(
        "D-MGSM 8-QAM vs GD-SM 64-QAM",
        gain >= 0.5,
        format!("D-MGSM {sd:.2} dB, GD-SM {sg:.2} dB, gain {gain:.2} dB"),
    );
    assert!(gain >= 0.5);
}

#[test]
fn bound_diversity_order() {
    let snr: Vec<f64> = (25..=35).map(f64::from).collect();
    let mut ok = true;
    let mut detail = Vec::new();
    for scheme in [Scheme::Dgsm, Scheme::Dmgsm] {
        for mr in [2, 3, 4] {
            let mut c = cfg(scheme, 4, mr, 2, ModKind::Qam, 4);
            c.power_allocation = true;
            let slope = bound_slope(&c, &snr).unwrap();
            let rel = (slope + mr as f64).abs() / mr as f64;
            ok &= rel <= 0.05;
            detail.push(format!("{scheme} Mr={mr}: {slope:.3}"));
        }
    }
    report("bound diversity order", ok, detail.join(", "));
    assert!(ok);
}

/// True when `value` agrees with a table entry printed with `decimals`
/// places, allowing one unit in the last printed place.
fn matches_displayed(value: f64, shown: f64, decimals: i32) -> bool {
    (value - shown).abs() <= 10f64.powi(-decimals) + 1e-9
}

fn check_complexity(id: u32, expected: &[[(f64, i32); 2]]) -> (bool, String) {
    let rows = complexity_table(id).unwrap();
    assert_eq!(rows.len(), expected.len());
    let mut ok = true;
    let mut detail = Vec::new();
    for (r, e) in rows.iter().zip(expected) {
        for (k, &(shown, dp)) in e.iter().enumerate() {
            let hit = matches_displayed(r.change[k], shown, dp);
            ok &= hit;
            let mark = if hit { "" } else { " MISMATCH" };
            detail.push(format!(
                "{} bpcu K={}: {:.3} vs {shown}{mark}",
                r.se,
                [100, 400][k],
                r.change[k]
            ));
        }
    }
    (ok, detail.join("; "))
}

#[test]
fn throughput_tables() {
    let t8 = throughput_table(8).unwrap();
    let t9 = throughput_table(9).unwrap();
    let got8: Vec<f64> = t8
        .iter()
        .flat_map(|r| [r.reference_pct, r.proposed_pct].concat())
        .map(truncate_1dp)
        .collect();
    let got9: Vec<f64> = t9
        .iter()
        .flat_map(|r| [r.reference_pct, r.proposed_pct].concat())
        .map(truncate_1dp)
        .collect();
    let want8 = [86.2, 96.1, 96.1, 99.0, 83.3, 95.2, 95.2, 98.7];
    let want9 = [
        96.1, 99.0, 96.1, 99.0, 92.5, 98.0, 95.2, 98.7, 86.2, 96.1, 94.3, 98.5,
    ];
    let ok = got8 == want8 && got9 == want9;
    report("throughput tables", ok, format!("{got8:?} {got9:?}"));
    assert_eq!(got8, want8);
    assert_eq!(got9, want9);
}

#[test]
fn complexity_table_gdsm() {
    // Percentages of change; increases are negative.
    let (ok, detail) = check_complexity(
        6,
        &[
            [(-102.0, 0), (-100.0, 0)],
            [(-1.4, 1), (-0.36, 2)],
            [(-1.4, 1), (-0.36, 2)],
            [(49.3, 1), (49.8, 1)],
            [(49.3, 1), (49.8, 1)],
            [(49.3, 1), (49.8, 1)],
        ],
    );
    report("complexity vs GD-SM", ok, detail);
    assert!(ok);
}

#[test]
#[ignore = "table entries do not follow from the closed forms"]
fn complexity_table_gsm1() {
    let (ok, detail) = check_complexity(
        4,
        &[
            [(3.0, 0), (0.8, 1)],
            [(2.0, 0), (0.5, 1)],
            [(0.9, 1), (0.2, 1)],
            [(0.5, 1), (0.12, 2)],
        ],
    );
    report("complexity vs GSM-1", ok, detail);
    assert!(ok);
}

#[test]
#[ignore = "one table entry does not follow from the closed forms"]
fn complexity_table_gsm2() {
    let (ok, detail) = check_complexity(
        5,
        &[
            [(0.7, 1), (0.2, 1)],
            [(0.56, 2), (0.15, 2)],
            [(0.35, 2), (0.07, 2)],
            [(0.3, 1), (0.07, 2)],
        ],
    );
    report("complexity vs GSM-2", ok, detail);
    assert!(ok);
}

fn counted_flops(c: &SystemConfig) -> u64 {
    let map = HypothesisMap::for_config(c).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let basis = draw_channel(c.mr, c.mt, &mut rng).h;
    let mut ops = FlopCounter::default();
    let det = Detector::with_counter(&basis, &map, &mut ops).unwrap();
    for k in 0..c.k {
        let y = basis.clone() * DVector::from_column_slice(map.vector(k % map.len()).entries());
        det.detect_counted(&y, &mut ops);
    }
    ops.total()
}

fn flop_case(scheme: Scheme, mt: usize, m: usize) -> (bool, String) {
    let c = cfg(scheme, mt, 2, 2, ModKind::Psk, m);
    let got = counted_flops(&c);
    let want = flops(scheme, mt, 2, 2, m, c.k, 0);
    (
        got == want,
        format!("{scheme} ({mt},2,2,{m},100): counted {got}, closed form {want}"),
    )
}

#[test]
fn flop_counters_match_closed_forms() {
    let cases = [
        flop_case(Scheme::Dgsm, 4, 2),
        flop_case(Scheme::Dgsm, 5, 4),
        flop_case(Scheme::Dmgsm, 5, 4),
    ];
    let ok = cases.iter().all(|c| c.0);
    let detail: Vec<_> = cases.iter().map(|c| c.1.clone()).collect();
    report("flop counters", ok, detail.join("; "));
    assert!(ok);
}

#[test]
#[ignore = "closed form assumes 2^Mu*M hypotheses per combination; M^Mu differs for M=2"]
fn flop_counter_dmgsm_bpsk() {
    let (ok, detail) = flop_case(Scheme::Dmgsm, 4, 2);
    report("flop counter D-MGSM M=2", ok, detail);
    assert!(ok);
}

fn two_hypothesis_system() -> SystemConfig {
    let mut c = cfg(Scheme::Dgsm, 2, 2, 2, ModKind::Psk, 2);
    c.k = 1;
    c
}

/// Oracle: closed-form PEP of the two-hypothesis system, `x = [1, 1]` vs
/// `[-1, -1]` with equal power. Per receive antenna the decision statistic
/// `Re(u* y)` is an indefinite Hermitian form in `u = Yr x` and `y`; its
/// eigenvalues `(c +- sqrt(ab)) / 2` turn the error event into a ratio of
/// two Gamma(Mr) variables, i.e. a regularized incomplete Beta `I_p(2, 2)`.
fn exact_pep(rho: f64) -> f64 {
    let s = 1.0 / rho;
    let (a, b, c) = (2.0 + 2.0 * s, 2.0 + s, 2.0);
    let r = (a * b).sqrt();
    let p = (r - c) / (2.0 * r);
    3.0 * p * p * (1.0 - p) + p.powi(3)
}

/// Effective noise `2(sigma_n^2 + 2 sigma_r^2) = 6/rho`, squared distance 8,
/// Mr = 2: `(6/rho)^2 * 4 * 3 / (2 * 8^2 * 8)`.
fn pep_oracle(rho: f64) -> f64 {
    0.421875 / (rho * rho)
}

fn check_library_pep(rho: f64) {
    let lib = pep_from_distance(8.0, &PepParams::new(1.0 / rho, 1.0 / rho, 2, 2));
    assert!(
        (lib - pep_oracle(rho)).abs() <= 1e-12 * lib,
        "{lib} vs {}",
        pep_oracle(rho)
    );
}

/// Literal check on 2e6 frames. The closed form exceeds the true PEP by
/// only 6%, 2% and 0.6% at 15, 20 and 25 dB, which is inside the sampling
/// error of the 20 and 25 dB estimates.
#[test]
#[ignore = "the PEP expression is within sampling error of the true rate at 20 and 25 dB"]
fn pep_bounds_pairwise_error_rate() {
    let frames = 2_000_000;
    let pts: Vec<BerPoint> = run_sweep(
        &two_hypothesis_system(),
        &[15.0, 20.0, 25.0],
        u64::MAX,
        frames,
    )
    .unwrap();
    let mut ok = true;
    let mut detail = Vec::new();
    for p in &pts {
        assert_eq!(p.frames_run, frames);
        let rho = 10f64.powf(p.snr_db / 10.0);
        check_library_pep(rho);
        ok &= p.ber <= pep_oracle(rho);
        detail.push(format!(
            "{} dB: {:.3e} vs {:.3e}",
            p.snr_db,
            p.ber,
            pep_oracle(rho)
        ));
    }
    report(
        "PEP upper-bounds measured pairwise errors",
        ok,
        detail.join(", "),
    );
    assert!(ok);
}

/// The closed form upper-bounds the exact PEP, and the simulator matches
/// the exact PEP to within four standard errors.
#[test]
fn pep_bounds_exact_pairwise_error_probability() {
    let frames = 2_000_000;
    let pts: Vec<BerPoint> = run_sweep(
        &two_hypothesis_system(),
        &[15.0, 20.0, 25.0],
        u64::MAX,
        frames,
    )
    .unwrap();
    let mut ok = true;
    let mut detail = Vec::new();
    for snr in (0..=40).map(f64::from) {
        let rho = 10f64.powf(snr / 10.0);
        check_library_pep(rho);
        assert!(exact_pep(rho) <= pep_oracle(rho), "{snr} dB");
    }
    for p in &pts {
        let rho = 10f64.powf(p.snr_db / 10.0);
        let expected = exact_pep(rho) * frames as f64;
        let z = (p.bit_errors as f64 - expected) / expected.sqrt();
        ok &= z.abs() <= 4.0;
        detail.push(format!(
            "{} dB: exact {:.3e} <= {:.3e}, measured {:.3e} (z = {z:.1})",
            p.snr_db,
            exact_pep(rho),
            pep_oracle(rho),
            p.ber
        ));
    }
    report(
        "PEP upper-bounds exact pairwise error probability",
        ok,
        detail.join(", "),
    );
    assert!(ok);
}
