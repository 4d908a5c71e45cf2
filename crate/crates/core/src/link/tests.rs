use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::field::PhaseState;
use crate::geometry::ArrayConfig;
use crate::temporal::{interleave, program_evm, PhaseSequence, SlotProgram};

fn cfg(slot_width: f64) -> LinkConfig {
    LinkConfig {
        slot_width,
        data_bits: 3000,
        seed: 5,
        ..LinkConfig::default()
    }
}

fn pts(scheme: Modulation, n: usize, seed: u64) -> (Vec<usize>, Vec<Symbol>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..scheme.order())).collect();
    let syms = labels.iter().map(|&l| scheme.point(l)).collect();
    (labels, syms)
}

const EF: C64 = C64::new(3.0, -4.0);
const EN: C64 = C64::new(-1.0, 2.0);

#[test]
fn four_slots_per_symbol() {
    let c = cfg(2e-6);
    let slots = vec![
        SlotSelector::Focus,
        SlotSelector::Null(PhaseState::Deg90),
        SlotSelector::Focus,
        SlotSelector::Null(PhaseState::Deg180),
        SlotSelector::Focus,
    ];
    let mut s = SlotStream::repeat(SlotProgram::new(slots.clone(), 2e-6).unwrap());
    let mixes = symbol_mixes(&mut s, 5, &c).unwrap();
    let fields = PointFields { focus: EF, null: EN };
    let flat: Vec<SlotSelector> = slots.iter().cycle().take(20).copied().collect();
    for (k, m) in mixes.iter().enumerate() {
        let want: C64 = flat[4 * k..4 * k + 4].iter().map(|s| s.field(EF, EN)).sum::<C64>() / 4.0;
        assert!((m.gain(fields) - want).norm() < 1e-14, "{k}");
    }
}

#[test]
fn fractional_overlap_is_time_weighted() {
    // 3 us slots against 8 us symbols.
    let c = cfg(3e-6);
    let slots = vec![SlotSelector::Focus, SlotSelector::Null(PhaseState::Deg0)];
    let mut s = SlotStream::repeat(SlotProgram::new(slots, 3e-6).unwrap());
    let m = symbol_mixes(&mut s, 3, &c).unwrap();
    // Symbol 0: F 0-3, N 3-6, F 6-8.
    assert!((m[0].focus - 5.0 / 8.0).abs() < 1e-15);
    assert!((m[0].null - C64::new(3.0 / 8.0, 0.0)).norm() < 1e-15);
    // Symbol 1: F 8-9, N 9-12, F 12-15, N 15-16.
    assert!((m[1].focus - 4.0 / 8.0).abs() < 1e-15);
    let total: f64 = m.iter().map(|x| x.focus + x.null.re).sum();
    assert!((total - 3.0).abs() < 1e-14);
}

#[test]
fn one_slot_per_symbol_sign_flips() {
    let c = cfg(8e-6);
    let slots = vec![SlotSelector::Focus, SlotSelector::Null(PhaseState::Deg180)];
    let mut s = SlotStream::repeat(SlotProgram::new(slots, 8e-6).unwrap());
    let mixes = symbol_mixes(&mut s, 6, &c).unwrap();
    let f = PointFields { focus: EF, null: EF };
    let (_, syms) = pts(Modulation::Qpsk, 6, 1);
    let rx = simulate_rx_mixed(f, &mixes, &syms, 1, 0.0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    for k in 0..6 {
        let want = if k % 2 == 0 { syms[k][0] * EF } else { -syms[k][0] * EF };
        assert_eq!(rx[k][0], want);
    }
}

#[test]
fn constant_program_exact() {
    let scn = Scenario::new(
        ArrayConfig::new(3, 4, 0.03, 0.03, 5.8e9).unwrap(),
        CartesianPoint::new(0.0, 0.0, 0.5),
    )
    .unwrap();
    let focus = PhaseMatrix::from_fn(3, 4, |r, c| PhaseState::from_quarter_turns((r + 2 * c) as u8));
    let null = PhaseMatrix::uniform(3, 4, PhaseState::Deg90);
    let target = CartesianPoint::new(0.1, 0.0, 1.2);
    let c = cfg(2e-6);
    let mut s = SlotStream::repeat(SlotProgram::focus_only(1, 2e-6).unwrap());
    let (labels, syms) = pts(Modulation::Psk8, 40, 2);
    let rx = simulate_rx(&scn, &mut s, &focus, &null, &target, &syms, Modulation::Psk8, &c, None).unwrap();
    let e = ChannelVector::new(&scn, &target).unwrap().field(&focus);
    for (y, x) in rx.iter().zip(&syms) {
        assert_eq!(y[0], x[0] * e);
    }
    let d = demodulate(&rx, Modulation::Psk8, &LinkConfig { preamble: 5, ..c }, &labels).unwrap();
    assert_eq!(d.labels, labels);
}

#[test]
fn slot_width_mismatch_rejected() {
    let mut s = SlotStream::repeat(SlotProgram::focus_only(1, 1e-6).unwrap());
    assert!(symbol_mixes(&mut s, 3, &cfg(2e-6)).is_err());
}

#[test]
fn config_validation() {
    assert!(LinkConfig::default().validate().is_ok());
    for bad in [
        LinkConfig { slot_width: 0.0, ..Default::default() },
        LinkConfig { symbol_rate: -1.0, ..Default::default() },
        LinkConfig { tracking_window: 0, ..Default::default() },
        LinkConfig { preamble: 0, ..Default::default() },
        LinkConfig { frame: 50, ..Default::default() },
        LinkConfig { slot_width: 1e-14, ..Default::default() },
    ] {
        assert!(bad.validate().is_err(), "{bad:?}");
    }
}

#[test]
fn frame_layout() {
    let c = LinkConfig { preamble: 2, frame: 5, ..Default::default() };
    let pilots: Vec<bool> = (0..10).map(|k| c.is_pilot(k)).collect();
    assert_eq!(pilots, [true, true, false, false, false, true, true, false, false, false]);
    assert_eq!(c.total_symbols(3), 5);
    assert_eq!(c.total_symbols(4), 8);
    assert_eq!(LinkConfig { preamble: 7, ..c }.total_symbols(0), 7);
    for payload in 1..40 {
        let n = c.total_symbols(payload);
        assert_eq!((0..n).filter(|&k| !c.is_pilot(k)).count(), payload);
        assert!(!c.is_pilot(n - 1));
    }
}

#[test]
fn fixed_rotation_absorbed() {
    let c = LinkConfig { preamble: 10, ..cfg(2e-6) };
    for scheme in Modulation::ALL {
        let (labels, syms) = pts(scheme, 400, 3);
        let rx: Vec<Symbol> = syms.iter().map(|s| [s[0] * C64::i(), s[1] * C64::i()]).collect();
        let d = demodulate(&rx, scheme, &c, &labels).unwrap();
        assert_eq!(d.labels, labels, "{scheme}");
        assert!(!d.fallback);
    }
}

#[test]
fn slow_phase_drift_tracked() {
    let c = LinkConfig { preamble: 20, tracking_window: 20, ..cfg(2e-6) };
    let (labels, syms) = pts(Modulation::Psk8, 2000, 4);
    let rx: Vec<Symbol> = syms
        .iter()
        .enumerate()
        .map(|(k, s)| [s[0] * C64::from_polar(2.0, 0.002 * k as f64), C64::new(0.0, 0.0)])
        .collect();
    let d = demodulate(&rx, Modulation::Psk8, &c, &labels).unwrap();
    assert_eq!(d.labels, labels);
}

#[test]
fn pure_noise_guesses() {
    let c = LinkConfig { preamble: 50, ..cfg(2e-6) };
    for scheme in Modulation::ALL {
        let n = 40_000;
        let (labels, _) = pts(scheme, n, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rx: Vec<Symbol> = (0..n).map(|_| [complex_noise(1.0, &mut rng), complex_noise(1.0, &mut rng)]).collect();
        let d = demodulate(&rx, scheme, &c, &labels).unwrap();
        let tx = labels_to_bits(&labels[50..], scheme);
        let got = labels_to_bits(&d.labels[50..], scheme);
        let b = ber(&tx, &got).unwrap();
        // Decision-directed on noise is biased toward whichever point the
        // estimate drifts to; the guess rate still holds to a few percent.
        assert!((b - random_guess_ber(scheme)).abs() < 0.05, "{scheme}: {b}");
    }
}

#[test]
fn uniform_guess_matches_random_guess_ber() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for scheme in Modulation::ALL {
        let n = 200_000;
        let tx: Vec<usize> = (0..n).map(|_| rng.random_range(0..scheme.order())).collect();
        let rx: Vec<usize> = (0..n).map(|_| rng.random_range(0..scheme.order())).collect();
        let bits = (n * scheme.bits_per_symbol()) as f64;
        let b = ber(&labels_to_bits(&tx, scheme), &labels_to_bits(&rx, scheme)).unwrap();
        let p = random_guess_ber(scheme);
        let sigma = (p * (1.0 - p) / bits).sqrt();
        assert!((b - p).abs() < 3.0 * sigma, "{scheme}: {b}");
    }
}

#[test]
fn zero_channel_falls_back() {
    let c = LinkConfig { preamble: 3, ..cfg(2e-6) };
    let rx = vec![[C64::new(0.0, 0.0); 2]; 10];
    let d = demodulate(&rx, Modulation::Qpsk, &c, &[0; 10]).unwrap();
    assert!(d.fallback);
    assert!(demodulate_fixed(&rx, Modulation::Qpsk, C64::new(0.0, 0.0)).unwrap().fallback);
    assert!(demodulate(&[], Modulation::Qpsk, &c, &[]).is_err());
    assert!(demodulate(&rx, Modulation::Qpsk, &c, &[0; 3]).is_err());
}

#[test]
fn noise_power_calibration() {
    let c = LinkConfig { snr_db: 20.0, ..Default::default() };
    assert!((c.noise_power(10.0) - 1.0).abs() < 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 100_000;
    let p: f64 = (0..n).map(|_| complex_noise(2.0, &mut rng).norm_sqr()).sum::<f64>() / n as f64;
    assert!((p - 2.0).abs() < 0.05, "{p}");
}

#[test]
fn transmission_noiseless_error_free() {
    let c = LinkConfig { data_bits: 3001, preamble: 10, frame: 100, ..cfg(2e-6) };
    let mut s = SlotStream::repeat(SlotProgram::focus_only(4, 2e-6).unwrap());
    let t = Transmission::new(Modulation::Psk8, &c, &mut s).unwrap();
    assert_eq!(t.payload_bits().len(), 3003);
    let r = t.receive(PointFields { focus: EF, null: EN }, 0.0, 0).unwrap();
    assert_eq!(r.ber, 0.0);
    assert_eq!(r.bits, 3003);
    assert!(r.evm_measured < 1e-12);
    assert_eq!(r.rx_constellation.len(), CONSTELLATION_SAMPLES);
}

#[test]
fn transmission_deterministic_per_stream() {
    let c = cfg(2e-6);
    let seq = PhaseSequence::perturbed(vec![PhaseState::Deg90, PhaseState::Deg270], 2e-6).unwrap();
    let prog = interleave(&seq, 3).unwrap();
    let t = Transmission::new(Modulation::Qpsk, &c, &mut SlotStream::repeat(prog)).unwrap();
    let f = PointFields { focus: EF, null: EN };
    let a = t.receive(f, 1.0, 4).unwrap();
    assert_eq!(a, t.receive(f, 1.0, 4).unwrap());
    assert_ne!(a, t.receive(f, 1.0, 5).unwrap());
}

#[test]
fn jammed_symbols_raise_ber() {
    let c = LinkConfig { data_bits: 30_000, ..cfg(2e-6) };
    let seq = PhaseSequence::random(64, 2e-6, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
    let prog = interleave(&seq, 1).unwrap();
    let t = Transmission::new(Modulation::Psk8, &c, &mut SlotStream::repeat(prog)).unwrap();
    let clean = t.receive(PointFields { focus: EF, null: EN * 0.01 }, 0.0, 0).unwrap();
    let jammed = t.receive(PointFields { focus: EF, null: EN * 10.0 }, 0.0, 0).unwrap();
    assert_eq!(clean.ber, 0.0);
    assert!(jammed.ber > 0.3, "{}", jammed.ber);
    assert!(jammed.secrecy_bits > clean.secrecy_bits);
}

#[test]
fn noise_only_on_used_tones() {
    let mixes = vec![SymbolMix { focus: 1.0, null: C64::new(0.0, 0.0) }; 4];
    let f = PointFields { focus: EF, null: EN };
    let (_, syms) = pts(Modulation::Qpsk, 4, 1);
    let rx = simulate_rx_mixed(f, &mixes, &syms, 1, 1.0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    assert!(rx.iter().all(|y| y[1] == C64::new(0.0, 0.0)));
    let rx = simulate_rx_mixed(f, &mixes, &syms, 2, 1.0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    assert!(rx.iter().all(|y| y[1] != C64::new(0.0, 0.0)));
    assert!(simulate_rx_mixed(f, &mixes, &syms, 3, 1.0, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
}

#[test]
fn measured_evm_checks() {
    let s = [[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]];
    assert_eq!(measured_evm(&s, &s).unwrap(), 0.0);
    assert!(measured_evm(&s, &[]).is_err());
    let z = [[C64::new(0.0, 0.0); 2]];
    assert!(measured_evm(&s, &z).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn untracked_evm_matches_direct(
        codes in prop::collection::vec(0u8..4, 1..16),
        ratio in 1u32..6,
        ef in (0.5f64..3.0, -3.2f64..3.2),
        en in (0.0f64..5.0, -3.2f64..3.2),
        seed in any::<u64>(),
    ) {
        let states: Vec<PhaseState> = codes.into_iter().map(PhaseState::from_quarter_turns).collect();
        let seq = PhaseSequence::perturbed(states, 8e-6).unwrap();
        let prog = interleave(&seq, ratio).unwrap();
        let n = prog.len();
        let c = cfg(8e-6);
        let mixes = symbol_mixes(&mut SlotStream::repeat(prog.clone()), n, &c).unwrap();
        let f = PointFields { focus: C64::from_polar(ef.0, ef.1), null: C64::from_polar(en.0, en.1) };
        let (_, syms) = pts(Modulation::Psk8, n, seed);
        let rx = simulate_rx_mixed(f, &mixes, &syms, 1, 0.0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let d = demodulate_fixed(&rx, Modulation::Psk8, f.focus).unwrap();
        let got = measured_evm(&d.equalized, &syms).unwrap();
        let want = program_evm(&prog, f.focus, f.null, f.focus).unwrap();
        prop_assert!((got - want).abs() <= 1e-9 * want.max(1.0), "{} vs {}", got, want);
    }

    #[test]
    fn mixes_partition_time(tau_ns in 100u64..40_000, n in 1usize..50) {
        let tau = tau_ns as f64 * 1e-9;
        let c = cfg(tau);
        let seq = PhaseSequence::perturbed(vec![PhaseState::Deg0, PhaseState::Deg180], tau).unwrap();
        let mixes = symbol_mixes(&mut SlotStream::repeat(interleave(&seq, 2).unwrap()), n, &c).unwrap();
        for m in &mixes {
            let w = m.focus + m.null.norm();
            prop_assert!(m.focus >= 0.0 && m.focus <= 1.0 + 1e-12);
            prop_assert!(w <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn noiseless_constant_ber_zero(re in -5.0f64..5.0, im in -5.0f64..5.0, seed in any::<u64>()) {
        prop_assume!(re.hypot(im) > 1e-3);
        let c = LinkConfig { data_bits: 600, seed, preamble: 10, ..cfg(2e-6) };
        for scheme in Modulation::ALL {
            let t = Transmission::new(scheme, &c, &mut SlotStream::repeat(SlotProgram::focus_only(1, 2e-6).unwrap())).unwrap();
            let r = t.receive(PointFields { focus: C64::new(re, im), null: C64::new(1.0, 0.0) }, 0.0, 0).unwrap();
            prop_assert_eq!(r.ber, 0.0);
        }
    }
}
