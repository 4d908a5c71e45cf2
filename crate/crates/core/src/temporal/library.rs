use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ratio_bounds, validate_perturbed, PhaseSequence, RatioRange};
use crate::error::{Error, Result};
use crate::field::{hex_digest, ChannelVector, PhaseMatrix, PhaseState, Scenario};
use crate::geometry::{CartesianPoint, PolarPoint};

type C64 = Complex<f64>;

/// Points whose reference field is below this fraction of the field at the
/// focus are skipped: their EVM is dominated by the vanishing denominator.
pub const REFERENCE_FLOOR: f64 = 1e-6;

/// Mean null-slot EVM at the legitimate and eavesdropper sample points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvmStats {
    pub bob: f64,
    pub eve: f64,
}

/// Reference (focusing) and nulling fields at the validation sample points.
#[derive(Clone, Debug)]
pub struct EvmContext {
    bob: Vec<(C64, C64)>,
    eve: Vec<(C64, C64)>,
    excluded_bob: usize,
    excluded_eve: usize,
    hash: String,
}

impl EvmContext {
    pub fn new(
        scn: &Scenario,
        focus_point: &CartesianPoint,
        focus: &PhaseMatrix,
        null: &PhaseMatrix,
        eve_points: &[PolarPoint],
        bob_points: &[PolarPoint],
    ) -> Result<Self> {
        scn.check_dims(focus)?;
        scn.check_dims(null)?;
        let peak = ChannelVector::new(scn, focus_point)?.field(focus).norm();
        if peak == 0.0 {
            return Err(Error::ZeroReference);
        }
        let floor = REFERENCE_FLOOR * peak;
        let fields = |pts: &[PolarPoint]| -> Result<(Vec<(C64, C64)>, usize)> {
            let all = pts
                .par_iter()
                .map(|p| {
                    let h = ChannelVector::new(scn, &p.to_cartesian())?;
                    Ok((h.field(focus), h.field(null)))
                })
                .collect::<Result<Vec<_>>>()?;
            let n = all.len();
            let kept: Vec<_> = all.into_iter().filter(|(r, _)| r.norm() >= floor).collect();
            let excluded = n - kept.len();
            Ok((kept, excluded))
        };
        let (bob, excluded_bob) = fields(bob_points)?;
        let (eve, excluded_eve) = fields(eve_points)?;
        if bob.is_empty() || eve.is_empty() {
            return Err(Error::InvalidArgument(
                "no usable bob or eve sample points above the reference floor".into(),
            ));
        }
        let mut h = Sha256::new();
        h.update(scn.canonical().as_bytes());
        h.update(focus.fingerprint().as_bytes());
        h.update(null.fingerprint().as_bytes());
        for p in bob_points.iter().chain(eve_points) {
            for v in [p.r(), p.theta(), p.phi()] {
                h.update(v.to_le_bytes());
            }
        }
        Ok(Self {
            bob,
            eve,
            excluded_bob,
            excluded_eve,
            hash: hex_digest(&h.finalize()),
        })
    }

    /// Context from precomputed `(reference, null)` field pairs.
    pub fn from_fields(bob: Vec<(C64, C64)>, eve: Vec<(C64, C64)>) -> Result<Self> {
        if bob.is_empty() || eve.is_empty() {
            return Err(Error::InvalidArgument("empty sample set".into()));
        }
        if bob.iter().chain(&eve).any(|(r, _)| r.norm_sqr() == 0.0) {
            return Err(Error::ZeroReference);
        }
        let mut h = Sha256::new();
        for (a, b) in bob.iter().chain(&eve) {
            for v in [a.re, a.im, b.re, b.im] {
                h.update(v.to_le_bytes());
            }
        }
        Ok(Self {
            bob,
            eve,
            excluded_bob: 0,
            excluded_eve: 0,
            hash: hex_digest(&h.finalize()),
        })
    }

    pub fn bob_fields(&self) -> &[(C64, C64)] {
        &self.bob
    }

    pub fn eve_fields(&self) -> &[(C64, C64)] {
        &self.eve
    }

    /// Sample points dropped by the reference floor (bob, eve).
    pub fn excluded(&self) -> (usize, usize) {
        (self.excluded_bob, self.excluded_eve)
    }

    /// SHA-256 over scenario, both matrices and the sample points.
    pub fn hash(&self) -> &str {
        &self.hash
    }

    /// Mean null-slot EVM of `seq` over each point set.
    pub fn stats(&self, seq: &PhaseSequence) -> EvmStats {
        let mut counts = [0usize; 4];
        for s in seq.slots() {
            counts[s.quarter_turns() as usize] += 1;
        }
        let k = seq.len() as f64;
        let mean = |set: &[(C64, C64)]| {
            set.iter().map(|(r, n)| null_evm(&counts, k, *r, *n)).sum::<f64>() / set.len() as f64
        };
        EvmStats {
            bob: mean(&self.bob),
            eve: mean(&self.eve),
        }
    }
}

/// EVM of the null-slot samples `R_k * e_null` against `reference`, from the
/// occupancy of each phase state.
fn null_evm(counts: &[usize; 4], k: f64, reference: C64, e_null: C64) -> f64 {
    let err: f64 = PhaseState::ALL
        .iter()
        .zip(counts)
        .map(|(s, &c)| c as f64 * (s.apply(e_null) - reference).norm_sqr())
        .sum();
    (err / (k * reference.norm_sqr())).sqrt()
}

/// One accepted perturbed sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LibraryEntry {
    pub sequence: PhaseSequence,
    pub stats: EvmStats,
}

/// Validated perturbed sequences for one scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceLibrary {
    pub seed: u64,
    pub scenario_hash: String,
    pub evm0: f64,
    pub slot_width: f64,
    pub length: usize,
    /// Candidates examined before the library was complete.
    pub attempts: usize,
    pub entries: Vec<LibraryEntry>,
}

const HEADER: &str = "# slm-library v1";

impl SequenceLibrary {
    pub fn acceptance_rate(&self) -> f64 {
        self.entries.len() as f64 / self.attempts as f64
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Admissible time-slot ratios of entry `i`.
    pub fn ratio_range(&self, i: usize) -> Result<RatioRange> {
        let s = self.entries[i].stats;
        ratio_bounds(s.bob, s.eve, self.evm0)
    }

    /// Recompute every entry's statistics in `ctx` and require exact equality
    /// and validity.
    pub fn revalidate(&self, ctx: &EvmContext) -> Result<()> {
        if ctx.hash() != self.scenario_hash {
            return Err(Error::InvalidArgument(
                "library was built for a different scenario".into(),
            ));
        }
        for (i, e) in self.entries.iter().enumerate() {
            let s = ctx.stats(&e.sequence);
            if s != e.stats || !validate_perturbed(s.bob, s.eve, self.evm0) {
                return Err(Error::LibraryParse {
                    line: i + 2,
                    msg: format!("statistics {s:?} do not reproduce stored {:?}", e.stats),
                });
            }
        }
        Ok(())
    }

    /// Header line then one `codes<TAB>bob<TAB>eve` line per entry.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{HEADER} seed={} scenario={} evm0={} slot_width={} length={} attempts={}\n",
            self.seed, self.scenario_hash, self.evm0, self.slot_width, self.length, self.attempts
        );
        for e in &self.entries {
            out.push_str(&format!("{}\t{}\t{}\n", e.sequence.codes(), e.stats.bob, e.stats.eve));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let err = |line: usize, msg: &str| Error::LibraryParse {
            line,
            msg: msg.to_string(),
        };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (_, head) = lines.next().ok_or_else(|| err(1, "empty input"))?;
        let fields = head
            .strip_prefix(HEADER)
            .ok_or_else(|| err(1, "missing library header"))?;
        let mut kv = std::collections::HashMap::new();
        for tok in fields.split_whitespace() {
            let (k, v) = tok.split_once('=').ok_or_else(|| err(1, "malformed header field"))?;
            kv.insert(k, v);
        }
        let get = |k: &str| kv.get(k).copied().ok_or_else(|| err(1, &format!("header lacks {k}")));
        let num = |k: &str| -> Result<f64> {
            get(k)?.parse::<f64>().map_err(|_| err(1, &format!("bad {k}")))
        };
        let int = |k: &str| -> Result<u64> {
            get(k)?.parse::<u64>().map_err(|_| err(1, &format!("bad {k}")))
        };
        let slot_width = num("slot_width")?;
        let length = int("length")? as usize;
        let mut entries = Vec::new();
        for (n, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split('\t').collect();
            if parts.len() != 3 {
                return Err(err(n, "expected codes, bob EVM and eve EVM"));
            }
            let slots = parts[0]
                .chars()
                .map(|c| PhaseState::from_code(c).ok_or_else(|| err(n, &format!("bad state {c:?}"))))
                .collect::<Result<Vec<_>>>()?;
            if slots.len() != length {
                return Err(err(n, "sequence length differs from header"));
            }
            let f = |s: &str| s.parse::<f64>().map_err(|_| err(n, &format!("bad number {s:?}")));
            entries.push(LibraryEntry {
                sequence: PhaseSequence::perturbed(slots, slot_width).map_err(|e| err(n, &e.to_string()))?,
                stats: EvmStats {
                    bob: f(parts[1])?,
                    eve: f(parts[2])?,
                },
            });
        }
        Ok(Self {
            seed: int("seed")?,
            scenario_hash: get("scenario")?.to_string(),
            evm0: num("evm0")?,
            slot_width,
            length,
            attempts: int("attempts")? as usize,
            entries,
        })
    }
}

const BATCH: usize = 256;

/// Draw i.i.d. uniform sequences (candidate `i` from stream `i` of `seed`)
/// and keep the first `count` passing [`validate_perturbed`].
///
/// Gives up after `1000 * count` candidates; if none passed by then the
/// null is too shallow or `evm0` too high for this scenario.
pub fn build_library(
    ctx: &EvmContext,
    evm0: f64,
    count: usize,
    length: usize,
    slot_width: f64,
    seed: u64,
) -> Result<SequenceLibrary> {
    if count == 0 {
        return Err(Error::InvalidArgument("library size must be at least 1".into()));
    }
    if length < 2 {
        return Err(Error::InvalidArgument("sequence length must be at least 2".into()));
    }
    if evm0.is_nan() || evm0 <= 0.0 {
        return Err(Error::InvalidArgument(format!("evm0 {evm0}")));
    }
    PhaseSequence::constant(1, slot_width)?;
    let max_attempts = count.saturating_mul(1000);
    let mut entries = Vec::with_capacity(count);
    let mut attempts = 0;
    let mut start = 0;
    while entries.len() < count && start < max_attempts {
        let end = (start + BATCH).min(max_attempts);
        let batch: Vec<(PhaseSequence, EvmStats)> = (start..end)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                let seq = PhaseSequence::random(length, slot_width, &mut rng)?;
                let stats = ctx.stats(&seq);
                Ok((seq, stats))
            })
            .collect::<Result<_>>()?;
        for (i, (sequence, stats)) in batch.into_iter().enumerate() {
            attempts = start + i + 1;
            if validate_perturbed(stats.bob, stats.eve, evm0) {
                entries.push(LibraryEntry { sequence, stats });
                if entries.len() == count {
                    break;
                }
            }
        }
        start = end;
    }
    if entries.is_empty() {
        return Err(Error::LibraryExhausted { attempts });
    }
    Ok(SequenceLibrary {
        seed,
        scenario_hash: ctx.hash().to_string(),
        evm0,
        slot_width,
        length,
        attempts,
        entries,
    })
}
