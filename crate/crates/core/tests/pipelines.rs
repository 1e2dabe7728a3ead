//! End-to-end runs through the public API.

use std::f64::consts::FRAC_PI_2;

use qkdsim_core::attacks::ClonerSpec;
use qkdsim_core::noise::ChannelSpec;
use qkdsim_core::qec::{circuit_422, exact_422, run_422, Sampling};
use qkdsim_core::qkd::{
    correlation, qber_abort_check, run_bb84, run_bbm92, sift, write_rounds_csv, Pair, QkdSetup, ABORT_QBER,
};
use qkdsim_core::sidechannel::{
    inject_sidechannel, BiasModel, DetectorModel, SideChannel, DEFAULT_B_EXPOSURE_US,
};
use qkdsim_core::stats::{binomial_stderr, mutual_information_bits};

#[test]
fn clean_channel_gives_identical_sifted_keys() {
    for records in [
        run_bb84(2000, &QkdSetup::default(), 1, 1).unwrap(),
        run_bbm92(2000, &QkdSetup::default(), 1, 1).unwrap(),
    ] {
        let s = sift(&records);
        assert!(s.len() > 800);
        let q = qber_abort_check(&s, ABORT_QBER).unwrap();
        assert_eq!(q.qber, 0.0);
        assert!(!q.abort);
        assert!(records.iter().all(|r| r.x_e.is_none() && !r.herald));
    }
}

#[test]
fn depolarizing_channel_qber_is_two_thirds_p() {
    let p = 0.15;
    let setup = QkdSetup::default().with_channel(ChannelSpec::Depolarizing1(p));
    let s = sift(&run_bb84(40_000, &setup, 2, 1).unwrap());
    let q = qber_abort_check(&s, ABORT_QBER).unwrap().qber;
    let want = 2.0 * p / 3.0;
    assert!((q - want).abs() < 4.0 * binomial_stderr(want, s.len() as u64), "{q} vs {want}");
}

#[test]
fn balanced_pccm_just_trips_the_abort_threshold() {
    // QBER = (1 − cos(π/4))/2 ≈ 0.1464 sits just above 0.145.
    let setup = QkdSetup::attack(ClonerSpec::Pccm { theta: FRAC_PI_2 });
    let s = sift(&run_bb84(200_000, &setup, 3, 1).unwrap());
    let q = qber_abort_check(&s, ABORT_QBER).unwrap();
    let want = (1.0 - (FRAC_PI_2 / 2.0).cos()) / 2.0;
    assert!((q.qber - want).abs() < 4.0 * binomial_stderr(want, s.len() as u64));
    assert!(q.abort);
}

#[test]
fn records_export_one_csv_line_per_round() {
    let setup = QkdSetup::attack(ClonerSpec::Pccm { theta: 1.0 });
    let records = run_bb84(50, &setup, 4, 1).unwrap();
    let mut buf = Vec::new();
    write_rounds_csv(&mut buf, &records).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 51);
    for line in text.lines().skip(1) {
        assert_eq!(line.split(',').count(), 8);
    }
}

#[test]
fn long_eve_exposure_leaks_about_one_bit() {
    let records = run_bb84(10_000, &QkdSetup::default(), 5, 1).unwrap();
    let leak = SideChannel::Leakage {
        detector: DetectorModel::default(),
        b_exposure_us: DEFAULT_B_EXPOSURE_US,
        e_exposure_us: 2000.0,
    };
    let aug = inject_sidechannel(&records, &leak, 6).unwrap();
    let mi = mutual_information_bits(aug.iter().map(|a| (a.record.x_b, a.e_leak.unwrap())));
    assert!(mi > 0.95, "I = {mi}");
    let short = SideChannel::Leakage {
        detector: DetectorModel::default(),
        b_exposure_us: DEFAULT_B_EXPOSURE_US,
        e_exposure_us: 5.0,
    };
    let aug = inject_sidechannel(&records, &short, 6).unwrap();
    let mi_short = mutual_information_bits(aug.iter().map(|a| (a.record.x_b, a.e_leak.unwrap())));
    assert!(mi_short < mi);
}

#[test]
fn bias_extremes_on_the_sifted_key() {
    let records = run_bb84(20_000, &QkdSetup::default(), 7, 1).unwrap();
    let qber_with = |ch: SideChannel| {
        let aug = inject_sidechannel(&records, &ch, 8).unwrap();
        let bob: Vec<_> = aug.into_iter().map(|a| a.record).collect();
        qber_abort_check(&sift(&bob), ABORT_QBER).unwrap().qber
    };
    let neutral = qber_with(SideChannel::Bias {
        model: BiasModel::quench(),
        duration_us: 0.0,
    });
    assert!(neutral < 0.005, "{neutral}");
    let pumped = qber_with(SideChannel::Bias {
        model: BiasModel::pump(),
        duration_us: 100.0,
    });
    assert!((pumped - 0.5).abs() < 0.03, "{pumped}");
}

#[test]
fn bbm92_with_pccm_matches_bb84_ab_correlation() {
    let theta = 1.2;
    let setup = QkdSetup::attack(ClonerSpec::Pccm { theta });
    let a = correlation(&sift(&run_bb84(20_000, &setup, 9, 1).unwrap()), Pair::AB, None).unwrap();
    let b = correlation(&sift(&run_bbm92(20_000, &setup, 10, 1).unwrap()), Pair::AB, None).unwrap();
    let tol = 4.0 * (a.std_err.powi(2) + b.std_err.powi(2)).sqrt();
    assert!((a.value - b.value).abs() < tol);
    assert!((a.value - (theta / 2.0).cos()).abs() < 4.0 * a.std_err);
}

#[test]
fn sampled_422_agrees_with_enumeration_under_depolarizing_noise() {
    let ch = ChannelSpec::Depolarizing1(0.08);
    let exact = exact_422(&ch, 2).unwrap();
    let r = run_422(&ch, 2, None, Sampling { shots: 200_000, seed: 11, workers: 1 }).unwrap();
    assert!((r.acceptance_rate - exact.acceptance).abs() < 4.0 * r.acceptance_stderr());
    assert!((r.flip_rate_lq1 - exact.flip[0]).abs() < 4.0 * r.flip_stderr_lq1());
    assert!((r.flip_rate_lq2 - exact.flip[1]).abs() < 4.0 * r.flip_stderr_lq2());
    let text = circuit_422(&ch, 2, None).unwrap().to_text();
    assert_eq!(text.lines().filter(|l| l.starts_with("MZ")).count(), 6);
}
