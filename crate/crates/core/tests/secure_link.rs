use slm_core::link::{PointFields, Transmission};
use slm_core::nulling::ZoneLayout;
use slm_core::temporal::{
    build_library, evm_interleaved_closed, EvmContext, RatioPolicy, SequenceLibrary, SlmPipeline, SlotProgram,
    SlotStream,
};
use slm_core::*;

struct Paper {
    scn: Scenario,
    bob: PolarPoint,
    focus: PhaseMatrix,
    null: PhaseMatrix,
    zones: ZoneModel,
}

fn paper() -> Paper {
    let cfg = ArrayConfig::new(14, 56, 0.0278, 0.0278, 5.8e9).unwrap();
    let scn = Scenario::new(cfg, PolarPoint::horizontal_deg(0.8, 0.0).unwrap().to_cartesian()).unwrap();
    let bob = PolarPoint::horizontal_deg(1.6, 0.0).unwrap();
    let offsets = [0.3, 0.3, 6f64.to_radians(), 6f64.to_radians()];
    let focus = focus_matrix(&scn, &bob.to_cartesian()).unwrap();
    let null = null_matrix(&scn, &NullSpec::equal_weights(bob, offsets).unwrap()).unwrap();
    let zones = ZoneModel::around(bob, offsets, &ZoneLayout::standard()).unwrap();
    Paper {
        scn,
        bob,
        focus,
        null,
        zones,
    }
}

fn library(p: &Paper) -> SequenceLibrary {
    let ctx = EvmContext::new(
        &p.scn,
        &p.bob.to_cartesian(),
        &p.focus,
        &p.null,
        &p.zones.eve_points(),
        &p.zones.bob_points(),
    )
    .unwrap();
    build_library(&ctx, 0.251, 32, 64, 2e-6, 7).unwrap()
}

#[test]
fn library_golden_and_round_trip() {
    let p = paper();
    let lib = library(&p);
    assert_eq!(lib.len(), 32);
    assert_eq!(lib.attempts, 32);
    assert_eq!(lib.acceptance_rate(), 1.0);
    assert_eq!(SequenceLibrary::from_text(&lib.to_text()).unwrap(), lib);
}

#[test]
fn every_segment_meets_the_bounds() {
    let lib = library(&paper());
    let mut pipe = SlmPipeline::new(lib.clone(), RatioPolicy::Bounds, 5).unwrap();
    for _ in 0..500 {
        let s = pipe.next_segment();
        let stats = lib.entries[s.entry].stats;
        let k_null = s.program.k_null();
        let k_focus = s.program.k_focus();
        assert_eq!(k_focus, s.ratio as usize * k_null);
        let bob = evm_interleaved_closed(stats.bob, k_focus, k_null).unwrap();
        let eve = evm_interleaved_closed(stats.eve, k_focus, k_null).unwrap();
        assert!(bob < lib.evm0 && lib.evm0 < eve, "entry {} ratio {}", s.entry, s.ratio);
    }
}

#[test]
fn random_guess_matches_pairwise_oracle() {
    for scheme in Modulation::ALL {
        let m = scheme.order();
        let k = scheme.bits_per_symbol() as f64;
        let mut total = 0.0;
        for a in 0..m {
            for b in 0..m {
                total += (a ^ b).count_ones() as f64 / k;
            }
        }
        assert_eq!(random_guess_ber(scheme), total / (m * m) as f64, "{scheme}");
    }
    assert_eq!(random_guess_ber(Modulation::Qpsk), 0.5);
}

fn link(seed: u64) -> LinkConfig {
    LinkConfig {
        data_bits: 30_000,
        seed,
        ..LinkConfig::default()
    }
}

#[test]
fn bob_decodes_while_lobe_points_are_disturbed() {
    let p = paper();
    let lib = library(&p);
    let cfg = link(1);
    let mut stream = SlotStream::pipeline(SlmPipeline::new(lib, RatioPolicy::Bounds, 1).unwrap());
    let tx = Transmission::new(Modulation::Psk8, &cfg, &mut stream).unwrap();
    let reference = compute_field(&p.scn, &p.focus, &p.bob.to_cartesian()).unwrap().norm();
    let n0 = cfg.noise_power(reference);

    let bob = tx
        .receive(PointFields::new(&p.scn, &p.focus, &p.null, &p.bob.to_cartesian()).unwrap(), n0, 0)
        .unwrap();
    assert_eq!(bob.ber, 0.0);

    // Points inside the focus lobe are readable without jamming.
    let strong: Vec<PointFields> = p
        .zones
        .eve_points()
        .iter()
        .map(|e| PointFields::new(&p.scn, &p.focus, &p.null, &e.to_cartesian()).unwrap())
        .filter(|f| f.focus.norm() >= 0.4 * reference)
        .collect();
    assert!(strong.len() >= 15);
    let errors = |tx: &Transmission| -> usize {
        strong
            .iter()
            .enumerate()
            .map(|(i, f)| tx.receive(*f, n0, i as u64 + 1).unwrap().bit_errors)
            .sum()
    };
    let mut plain = SlotStream::repeat(SlotProgram::focus_only(1, cfg.slot_width).unwrap());
    assert_eq!(errors(&Transmission::new(Modulation::Psk8, &cfg, &mut plain).unwrap()), 0);
    assert!(errors(&tx) > 0);
}

#[test]
fn focus_only_is_readable_everywhere_near_bob() {
    let p = paper();
    let cfg = link(2);
    let mut stream = SlotStream::repeat(SlotProgram::focus_only(1, cfg.slot_width).unwrap());
    let tx = Transmission::new(Modulation::Qpsk, &cfg, &mut stream).unwrap();
    let reference = compute_field(&p.scn, &p.focus, &p.bob.to_cartesian()).unwrap().norm();
    for (i, e) in p.zones.eve_points().iter().enumerate().take(8) {
        let f = PointFields::new(&p.scn, &p.focus, &p.null, &e.to_cartesian()).unwrap();
        let again = tx.receive(f, cfg.noise_power(reference), i as u64 + 1).unwrap();
        if f.focus.norm() > 0.5 * reference {
            assert_eq!(again.ber, 0.0);
        }
        assert_eq!(again, tx.receive(f, cfg.noise_power(reference), i as u64 + 1).unwrap());
    }
}
