use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{interleave, SequenceLibrary, SlotProgram, SlotSelector};
use crate::error::{Error, Result};

/// How each segment's time-slot ratio is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RatioPolicy {
    /// Uniform over the entry's admissible integers; entries without any are skipped.
    Bounds,
    /// The same ratio for every entry, admissible or not.
    Fixed(u32),
}

/// One emitted block: a library entry interleaved at a ratio.
#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    pub entry: usize,
    pub ratio: u32,
    pub program: SlotProgram,
}

/// Endless seeded stream of segments drawn from a library.
#[derive(Clone, Debug)]
pub struct SlmPipeline {
    library: SequenceLibrary,
    /// Usable entries with their inclusive ratio range.
    choices: Vec<(usize, u32, u32)>,
    rng: ChaCha8Rng,
}

impl SlmPipeline {
    pub fn new(library: SequenceLibrary, policy: RatioPolicy, seed: u64) -> Result<Self> {
        let mut choices = Vec::new();
        for i in 0..library.len() {
            match policy {
                RatioPolicy::Fixed(0) => {
                    return Err(Error::InvalidArgument("time-slot ratio must be at least 1".into()))
                }
                RatioPolicy::Fixed(r) => choices.push((i, r, r)),
                RatioPolicy::Bounds => {
                    let ints = library.ratio_range(i)?.integers();
                    if !ints.is_empty() {
                        choices.push((i, *ints.start(), *ints.end()));
                    }
                }
            }
        }
        if choices.is_empty() {
            return Err(Error::EmptyRatioSet);
        }
        Ok(Self {
            library,
            choices,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn library(&self) -> &SequenceLibrary {
        &self.library
    }

    /// Entries that can be emitted, with their ratio range.
    pub fn choices(&self) -> &[(usize, u32, u32)] {
        &self.choices
    }

    pub fn next_segment(&mut self) -> Segment {
        let (entry, lo, hi) = self.choices[self.rng.random_range(0..self.choices.len())];
        let ratio = if lo == hi { lo } else { self.rng.random_range(lo..=hi) };
        let program = interleave(&self.library.entries[entry].sequence, ratio)
            .expect("library sequences are non-empty and ratio >= 1");
        Segment {
            entry,
            ratio,
            program,
        }
    }
}

impl Iterator for SlmPipeline {
    type Item = Segment;

    fn next(&mut self) -> Option<Segment> {
        Some(self.next_segment())
    }
}

/// Endless slot-by-slot source for the link simulator.
#[derive(Clone, Debug)]
pub enum SlotStream {
    /// A fixed program repeated forever.
    Repeat { program: SlotProgram, pos: usize },
    /// Consecutive pipeline segments.
    Pipeline {
        pipeline: Box<SlmPipeline>,
        current: SlotProgram,
        pos: usize,
    },
}

impl SlotStream {
    pub fn repeat(program: SlotProgram) -> Self {
        SlotStream::Repeat { program, pos: 0 }
    }

    pub fn pipeline(mut pipeline: SlmPipeline) -> Self {
        let current = pipeline.next_segment().program;
        SlotStream::Pipeline {
            pipeline: Box::new(pipeline),
            current,
            pos: 0,
        }
    }

    pub fn slot_width(&self) -> f64 {
        match self {
            SlotStream::Repeat { program, .. } => program.slot_width(),
            SlotStream::Pipeline { current, .. } => current.slot_width(),
        }
    }

    pub fn next_slot(&mut self) -> SlotSelector {
        match self {
            SlotStream::Repeat { program, pos } => {
                let s = program.slots()[*pos];
                *pos = (*pos + 1) % program.len();
                s
            }
            SlotStream::Pipeline {
                pipeline,
                current,
                pos,
            } => {
                if *pos == current.len() {
                    *current = pipeline.next_segment().program;
                    *pos = 0;
                }
                let s = current.slots()[*pos];
                *pos += 1;
                s
            }
        }
    }
}
