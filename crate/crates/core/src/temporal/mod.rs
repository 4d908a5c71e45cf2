//! Time-domain phase sequences, the slot-level EVM algebra and the
//! time-slot ratio bounds.

mod library;
mod pipeline;

pub use library::{build_library, EvmContext, EvmStats, LibraryEntry, SequenceLibrary};
pub use pipeline::{RatioPolicy, Segment, SlmPipeline, SlotStream};

use num_complex::Complex;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ChannelVector, PhaseMatrix, PhaseState, Scenario};
use crate::geometry::CartesianPoint;

type C64 = Complex<f64>;

/// Demodulability thresholds (EVM fraction) per modulation.
pub mod evm0 {
    pub const BPSK: f64 = 0.562;
    pub const QPSK: f64 = 0.316;
    /// Not an 802.11 rate; a local configuration constant.
    pub const PSK8: f64 = 0.251;
    pub const QAM16: f64 = 0.158;
    pub const QAM64: f64 = 0.079;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SequenceKind {
    Constant,
    Perturbed,
    Interleaved,
}

/// Per-slot global phase factors with a common slot width.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseSequence {
    slots: Vec<PhaseState>,
    slot_width: f64,
    kind: SequenceKind,
}

impl PhaseSequence {
    fn checked(slots: Vec<PhaseState>, slot_width: f64, kind: SequenceKind) -> Result<Self> {
        if slots.is_empty() {
            return Err(Error::InvalidArgument("phase sequence must not be empty".into()));
        }
        if !(slot_width > 0.0 && slot_width.is_finite()) {
            return Err(Error::InvalidArgument(format!("slot width {slot_width}")));
        }
        Ok(Self {
            slots,
            slot_width,
            kind,
        })
    }

    /// All slots at phase factor 1.
    pub fn constant(len: usize, slot_width: f64) -> Result<Self> {
        Self::checked(vec![PhaseState::Deg0; len], slot_width, SequenceKind::Constant)
    }

    pub fn perturbed(slots: Vec<PhaseState>, slot_width: f64) -> Result<Self> {
        Self::checked(slots, slot_width, SequenceKind::Perturbed)
    }

    /// I.i.d. uniform states.
    pub fn random<R: Rng + ?Sized>(len: usize, slot_width: f64, rng: &mut R) -> Result<Self> {
        let slots = (0..len)
            .map(|_| PhaseState::from_quarter_turns(rng.random_range(0..4)))
            .collect();
        Self::perturbed(slots, slot_width)
    }

    pub fn slots(&self) -> &[PhaseState] {
        &self.slots
    }

    pub fn slot_width(&self) -> f64 {
        self.slot_width
    }

    pub fn kind(&self) -> SequenceKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Slots as `1`, `J`, `M`, `K` characters.
    pub fn codes(&self) -> String {
        self.slots.iter().map(|s| s.code()).collect()
    }
}

/// Which reflection pattern a slot realises.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SlotSelector {
    /// The focusing matrix, phase factor 1.
    Focus,
    /// The nulling matrix times a global phase factor.
    Null(PhaseState),
}

impl SlotSelector {
    /// Realised field given the focusing and nulling fields at a point.
    #[inline]
    pub fn field(self, e_focus: C64, e_null: C64) -> C64 {
        match self {
            SlotSelector::Focus => e_focus,
            SlotSelector::Null(s) => s.apply(e_null),
        }
    }
}

/// Per-slot matrix selection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlotProgram {
    slots: Vec<SlotSelector>,
    slot_width: f64,
}

impl SlotProgram {
    pub fn new(slots: Vec<SlotSelector>, slot_width: f64) -> Result<Self> {
        if slots.is_empty() {
            return Err(Error::InvalidArgument("slot program must not be empty".into()));
        }
        if !(slot_width > 0.0 && slot_width.is_finite()) {
            return Err(Error::InvalidArgument(format!("slot width {slot_width}")));
        }
        Ok(Self { slots, slot_width })
    }

    /// Constant focusing for `len` slots.
    pub fn focus_only(len: usize, slot_width: f64) -> Result<Self> {
        Self::new(vec![SlotSelector::Focus; len], slot_width)
    }

    /// Every slot from the nulling matrix, rotated per the sequence.
    pub fn null_only(seq: &PhaseSequence) -> Self {
        Self {
            slots: seq.slots.iter().map(|&s| SlotSelector::Null(s)).collect(),
            slot_width: seq.slot_width,
        }
    }

    pub fn slots(&self) -> &[SlotSelector] {
        &self.slots
    }

    pub fn slot_width(&self) -> f64 {
        self.slot_width
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn k_focus(&self) -> usize {
        self.slots.iter().filter(|s| **s == SlotSelector::Focus).count()
    }

    pub fn k_null(&self) -> usize {
        self.len() - self.k_focus()
    }

    /// Phase factors of the null slots, in order.
    pub fn null_states(&self) -> Vec<PhaseState> {
        self.slots
            .iter()
            .filter_map(|s| match s {
                SlotSelector::Null(p) => Some(*p),
                SlotSelector::Focus => None,
            })
            .collect()
    }
}

/// `E_k = R_k * E(target)` for every slot of `seq`.
pub fn field_sequence(
    scn: &Scenario,
    matrix: &PhaseMatrix,
    seq: &PhaseSequence,
    target: &CartesianPoint,
) -> Result<Vec<C64>> {
    scn.check_dims(matrix)?;
    let e = ChannelVector::new(scn, target)?.field(matrix);
    Ok(seq.slots.iter().map(|s| s.apply(e)).collect())
}

/// RMS error of `samples` against `reference`, relative to `|reference|`.
pub fn evm(samples: &[C64], reference: C64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("EVM of an empty sample set".into()));
    }
    let p = reference.norm_sqr();
    if p == 0.0 {
        return Err(Error::ZeroReference);
    }
    let err: f64 = samples.iter().map(|s| (s - reference).norm_sqr()).sum();
    Ok((err / (samples.len() as f64 * p)).sqrt())
}

/// `1 / evm^2`.
pub fn evm_to_snr(evm: f64) -> Result<f64> {
    if evm.is_nan() || evm <= 0.0 {
        return Err(Error::InvalidArgument(format!("EVM must be positive, got {evm}")));
    }
    Ok(1.0 / (evm * evm))
}

/// `ratio` focus slots before every perturbed slot.
pub fn interleave(perturbed: &PhaseSequence, ratio: u32) -> Result<SlotProgram> {
    if ratio < 1 {
        return Err(Error::InvalidArgument("time-slot ratio must be at least 1".into()));
    }
    let mut slots = Vec::with_capacity(perturbed.len() * (ratio as usize + 1));
    for &s in &perturbed.slots {
        slots.extend(std::iter::repeat_n(SlotSelector::Focus, ratio as usize));
        slots.push(SlotSelector::Null(s));
    }
    SlotProgram::new(slots, perturbed.slot_width)
}

/// EVM of a program's realised slot fields given the two pattern fields.
pub fn program_evm(program: &SlotProgram, e_focus: C64, e_null: C64, reference: C64) -> Result<f64> {
    let samples: Vec<C64> = program.slots.iter().map(|s| s.field(e_focus, e_null)).collect();
    evm(&samples, reference)
}

/// EVM of `program` at `target`, evaluating every slot's field.
pub fn evm_interleaved_direct(
    scn: &Scenario,
    program: &SlotProgram,
    focus: &PhaseMatrix,
    null: &PhaseMatrix,
    target: &CartesianPoint,
    reference: C64,
) -> Result<f64> {
    scn.check_dims(focus)?;
    scn.check_dims(null)?;
    let h = ChannelVector::new(scn, target)?;
    program_evm(program, h.field(focus), h.field(null), reference)
}

/// `sqrt(k_null / (k_focus + k_null)) * evm_null`.
pub fn evm_interleaved_closed(evm_null: f64, k_focus: usize, k_null: usize) -> Result<f64> {
    if k_null == 0 {
        return Err(Error::InvalidArgument("k_null must be at least 1".into()));
    }
    Ok((k_null as f64 / (k_focus + k_null) as f64).sqrt() * evm_null)
}

/// Open interval of admissible time-slot ratios.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioRange {
    pub lower: f64,
    pub upper: f64,
}

impl RatioRange {
    /// Positive integers strictly inside the interval.
    pub fn integers(&self) -> std::ops::RangeInclusive<u32> {
        let lo = if self.lower < 0.0 { 1.0 } else { self.lower.floor() + 1.0 };
        let hi = self.upper.ceil() - 1.0;
        if hi < lo || hi < 1.0 {
            #[allow(clippy::reversed_empty_ranges)]
            return 1..=0;
        }
        (lo.min(u32::MAX as f64) as u32)..=(hi.min(u32::MAX as f64) as u32)
    }

    pub fn contains(&self, ratio: u32) -> bool {
        let r = ratio as f64;
        ratio >= 1 && r > self.lower && r < self.upper
    }

    pub fn is_empty(&self) -> bool {
        self.integers().is_empty()
    }
}

/// Ratios keeping bob's slot EVM under `evm0` and eve's over it.
pub fn ratio_bounds(evm_null_bob: f64, evm_null_eve: f64, evm0: f64) -> Result<RatioRange> {
    for (name, v) in [("bob", evm_null_bob), ("eve", evm_null_eve), ("evm0", evm0)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidArgument(format!("{name} EVM must be positive, got {v}")));
        }
    }
    Ok(RatioRange {
        lower: (evm_null_bob / evm0).powi(2) - 1.0,
        upper: (evm_null_eve / evm0).powi(2) - 1.0,
    })
}

/// A perturbed sequence is usable iff eve's mean EVM exceeds both bob's and `evm0`.
pub fn validate_perturbed(evm_null_bob: f64, evm_null_eve_mean: f64, evm0: f64) -> bool {
    evm_null_eve_mean > evm_null_bob.max(evm0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ArrayConfig;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const J: C64 = C64::new(0.0, 1.0);

    #[test]
    fn sequence_fields() {
        let cfg = ArrayConfig::new(2, 2, 0.02, 0.02, 5.8e9).unwrap();
        let scn = Scenario::new(cfg, CartesianPoint::new(0.0, 0.0, 0.5)).unwrap();
        let m = PhaseMatrix::uniform(2, 2, PhaseState::Deg0);
        let t = CartesianPoint::new(0.1, 0.0, 1.0);
        let c = field_sequence(&scn, &m, &PhaseSequence::constant(5, 2e-6).unwrap(), &t).unwrap();
        assert!(c.iter().all(|e| *e == c[0]));
        let seq = PhaseSequence::perturbed(PhaseState::ALL.to_vec(), 2e-6).unwrap();
        let r = field_sequence(&scn, &m, &seq, &t).unwrap();
        for k in 1..4 {
            assert!((r[k] - r[k - 1] * J).norm() < 1e-12 * r[0].norm());
            assert!((r[k].norm() - r[0].norm()).abs() < 1e-12 * r[0].norm());
        }
    }

    #[test]
    fn evm_examples() {
        let e = C64::new(0.3, -1.2);
        assert_eq!(evm(&[e, e, e], e).unwrap(), 0.0);
        assert!((evm(&[-e], e).unwrap() - 2.0).abs() < 1e-15);
        assert!((evm(&[e, J * e], e).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(evm(&[e], C64::new(0.0, 0.0)), Err(Error::ZeroReference)));
        assert!(evm(&[], e).is_err());
    }

    #[test]
    fn evm_snr_examples() {
        assert_eq!(evm_to_snr(1.0).unwrap(), 1.0);
        assert!((evm_to_snr(0.1).unwrap() - 100.0).abs() < 1e-12);
        assert!((evm_to_snr(0.316).unwrap() - 10.0).abs() < 0.02);
        assert!(evm_to_snr(0.0).is_err());
    }

    #[test]
    fn interleave_layout() {
        use PhaseState::*;
        let seq = PhaseSequence::perturbed(vec![Deg90, Deg180], 1e-6).unwrap();
        let p = interleave(&seq, 3).unwrap();
        let f = SlotSelector::Focus;
        assert_eq!(
            p.slots(),
            &[f, f, f, SlotSelector::Null(Deg90), f, f, f, SlotSelector::Null(Deg180)]
        );
        assert_eq!((p.k_focus(), p.k_null()), (6, 2));
        let one = PhaseSequence::perturbed(vec![Deg270], 1e-6).unwrap();
        assert_eq!(interleave(&one, 1).unwrap().slots(), &[f, SlotSelector::Null(Deg270)]);
        assert!(interleave(&seq, 0).is_err());
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(evm_interleaved_closed(0.7, 0, 5).unwrap(), 0.7);
        assert!((evm_interleaved_closed(0.8, 12, 4).unwrap() - 0.4).abs() < 1e-15);
        assert!((evm_interleaved_closed(0.6, 3, 1).unwrap() - 0.30).abs() < 1e-15);
        assert!(evm_interleaved_closed(0.6, 3, 0).is_err());
    }

    #[test]
    fn direct_special_cases() {
        let ef = C64::new(2.0, 1.0);
        let en = C64::new(-0.4, 0.9);
        let all_focus = SlotProgram::focus_only(7, 1e-6).unwrap();
        assert_eq!(program_evm(&all_focus, ef, en, ef).unwrap(), 0.0);
        let single = SlotProgram::new(vec![SlotSelector::Null(PhaseState::Deg90)], 1e-6).unwrap();
        assert_eq!(
            program_evm(&single, ef, en, ef).unwrap(),
            evm(&[J * en], ef).unwrap()
        );
    }

    #[test]
    fn ratio_bound_examples() {
        let r = ratio_bounds(0.20, 0.80, 0.25).unwrap();
        assert!((r.lower + 0.36).abs() < 1e-12 && (r.upper - 9.24).abs() < 1e-12);
        assert_eq!(r.integers(), 1..=9);
        assert!(ratio_bounds(0.2, 0.25, 0.25).unwrap().is_empty());
        assert!(ratio_bounds(0.2, 0.2, 0.25).unwrap().is_empty());
        assert!(ratio_bounds(0.5, 0.5, 0.25).unwrap().is_empty());
        // Integer endpoints are excluded.
        let r = RatioRange { lower: 2.0, upper: 5.0 };
        assert_eq!(r.integers(), 3..=4);
        assert!(!r.contains(2) && !r.contains(5) && r.contains(3));
        assert!(ratio_bounds(0.0, 0.5, 0.25).is_err());
    }

    #[test]
    fn validation_examples() {
        assert!(validate_perturbed(0.20, 0.80, 0.25));
        assert!(!validate_perturbed(0.20, 0.22, 0.25));
        assert!(!validate_perturbed(0.35, 0.30, 0.25));
    }

    fn arb_c64() -> impl Strategy<Value = C64> {
        (-10.0..10.0f64, -10.0..10.0f64).prop_map(|(a, b)| C64::new(a, b))
    }

    proptest! {
        #[test]
        fn closed_matches_direct(seed in any::<u64>(), k_null in 1usize..64, ratio in 1u32..10, ef in arb_c64(), en in arb_c64()) {
            prop_assume!(ef.norm() > 1e-3);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let seq = PhaseSequence::random(k_null, 2e-6, &mut rng).unwrap();
            let prog = interleave(&seq, ratio).unwrap();
            let direct = program_evm(&prog, ef, en, ef).unwrap();
            let null_only = program_evm(&SlotProgram::null_only(&seq), ef, en, ef).unwrap();
            let closed = evm_interleaved_closed(null_only, prog.k_focus(), prog.k_null()).unwrap();
            prop_assert!((direct - closed).abs() <= 1e-12 * closed.max(1e-300));
        }

        #[test]
        fn evm_invariant_to_global_rotation(seed in any::<u64>(), e in arb_c64(), phase in 0.0..std::f64::consts::TAU) {
            prop_assume!(e.norm() > 1e-3);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let seq = PhaseSequence::random(16, 1e-6, &mut rng).unwrap();
            let s: Vec<C64> = seq.slots().iter().map(|p| p.apply(e * 0.7)).collect();
            let g = C64::from_polar(1.0, phase);
            let rotated: Vec<C64> = s.iter().map(|x| x * g).collect();
            let a = evm(&s, e).unwrap();
            let b = evm(&rotated, e * g).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }

        #[test]
        fn constant_sequence_has_zero_evm(e in arb_c64(), len in 1usize..32) {
            prop_assume!(e.norm() > 0.0);
            let seq = PhaseSequence::constant(len, 1e-6).unwrap();
            let s: Vec<C64> = seq.slots().iter().map(|p| p.apply(e)).collect();
            prop_assert_eq!(evm(&s, e).unwrap(), 0.0);
        }

        #[test]
        fn ratios_inside_bounds_satisfy_both_inequalities(bob in 0.01..2.0f64, eve in 0.01..5.0f64, e0 in 0.05..0.6f64) {
            let r = ratio_bounds(bob, eve, e0).unwrap();
            for k in r.integers().take(200) {
                let b = evm_interleaved_closed(bob, k as usize, 1).unwrap();
                let e = evm_interleaved_closed(eve, k as usize, 1).unwrap();
                prop_assert!(b < e0 && e0 < e);
            }
        }
    }
}
