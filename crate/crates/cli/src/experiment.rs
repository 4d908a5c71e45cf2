//! The synthesis chain and the experiments built on it.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use slm_core::link::{LinkConfig, LinkResult, Modulation, PointFields, Transmission};
use slm_core::nulling::{baseline_objective, solve_snm, NullSpec, SnmSolution, ZoneMode, ZoneModel};
use slm_core::temporal::{
    build_library, EvmContext, RatioPolicy, SequenceLibrary, SlmPipeline, SlotProgram, SlotStream,
};
use slm_core::{focus_matrix, null_matrix, ChannelVector, Error, PhaseMatrix, PhaseState, PolarPoint, Scenario};

use crate::preset::Preset;
use crate::CliError;

type C64 = Complex<f64>;

/// Array, feed, Bob and the focusing configuration toward Bob.
#[derive(Clone, Debug)]
pub struct Scene {
    pub preset: Preset,
    pub scn: Scenario,
    pub bob: PolarPoint,
    pub focus: PhaseMatrix,
    /// Focus field at Bob.
    pub reference: C64,
}

impl Scene {
    pub fn new(preset: &Preset) -> Result<Self, CliError> {
        preset.validate()?;
        let scn = Scenario::new(preset.array_config()?, preset.feed()?)?;
        let bob = preset.bob()?;
        let focus = focus_matrix(&scn, &bob.to_cartesian())?;
        let reference = ChannelVector::new(&scn, &bob.to_cartesian())?.field(&focus);
        Ok(Self {
            preset: preset.clone(),
            scn,
            bob,
            focus,
            reference,
        })
    }

    /// Nominal-offset zones around Bob.
    pub fn nominal_zones(&self) -> Result<ZoneModel, CliError> {
        Ok(ZoneModel::around(self.bob, self.preset.nominal_offsets(), &self.preset.layout())?)
    }

    /// Focus-field magnitude at `p` relative to Bob's, in dB.
    pub fn reference_db(&self, p: &PolarPoint) -> Result<f64, CliError> {
        let e = ChannelVector::new(&self.scn, &p.to_cartesian())?.field(&self.focus);
        Ok(20.0 * (e.norm() / self.reference.norm()).log10())
    }
}

/// Plain-text record of a nulling design, enough to rebuild it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NullRecord {
    pub seed: Option<u64>,
    /// Front, back (m), left, right (rad).
    pub offsets: [f64; 4],
    pub weights: [f64; 4],
    pub objective: f64,
    pub baseline: f64,
    pub per_zone: [f64; 4],
    pub feasible: bool,
    pub generations: usize,
    pub evaluations: usize,
    pub center_db: f64,
    pub matrix_sha256: String,
}

impl NullRecord {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("plain data")
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("null design: {e}")))
    }
}

/// A nulling configuration with the zones it is judged on.
#[derive(Clone, Debug)]
pub struct NullDesign {
    pub spec: NullSpec,
    pub zones: ZoneModel,
    pub matrix: PhaseMatrix,
    pub record: NullRecord,
    pub solution: Option<Box<SnmSolution>>,
}

fn center_db(scene: &Scene, spec: &NullSpec, matrix: &PhaseMatrix) -> Result<f64, CliError> {
    let center = ChannelVector::new(&scene.scn, &scene.bob.to_cartesian())?.field(matrix).norm();
    let focal = slm_core::focal_points(spec)?;
    let mut mean = 0.0;
    for p in &focal {
        mean += ChannelVector::new(&scene.scn, &p.to_cartesian())?.field(matrix).norm() / 4.0;
    }
    Ok(20.0 * (center / mean).log10())
}

impl NullDesign {
    fn from_solution(scene: &Scene, sol: SnmSolution, seed: u64) -> Result<Self, CliError> {
        let baseline = baseline_objective(&scene.scn, &scene.nominal_zones()?)?;
        let record = NullRecord {
            seed: Some(seed),
            offsets: sol.spec.offsets(),
            weights: sol.spec.weights(),
            objective: sol.depth,
            baseline,
            per_zone: sol.per_zone,
            feasible: sol.feasible,
            generations: sol.generations,
            evaluations: sol.evaluations,
            center_db: center_db(scene, &sol.spec, &sol.matrix)?,
            matrix_sha256: sol.matrix.fingerprint(),
        };
        Ok(Self {
            spec: sol.spec,
            zones: sol.zones.clone(),
            matrix: sol.matrix.clone(),
            record,
            solution: Some(Box::new(sol)),
        })
    }

    /// Run the genetic search. An infeasible outcome is returned as
    /// [`CliError::Infeasible`] carrying the best design found.
    pub fn solve(scene: &Scene, seed: u64) -> Result<Self, CliError> {
        let zones = scene.nominal_zones()?;
        match solve_snm(&scene.scn, &scene.bob, &zones, &scene.preset.snm_config(), seed) {
            Ok(sol) => Self::from_solution(scene, sol, seed),
            Err(Error::Infeasible(sol)) => Err(CliError::Infeasible(Box::new(Self::from_solution(scene, *sol, seed)?))),
            Err(e) => Err(e.into()),
        }
    }

    /// Rebuild a design from its record, checking the matrix digest.
    pub fn from_record(scene: &Scene, record: &NullRecord) -> Result<Self, CliError> {
        let spec = NullSpec::new(scene.bob, record.offsets, record.weights)?;
        let matrix = null_matrix(&scene.scn, &spec)?;
        if matrix.fingerprint() != record.matrix_sha256 {
            return Err(CliError::Config(
                "null design does not match this scenario (matrix digest differs)".into(),
            ));
        }
        let zones = match scene.preset.zones.mode {
            ZoneMode::Focal => ZoneModel::around(scene.bob, record.offsets, &scene.preset.layout())?,
            ZoneMode::Fixed => scene.nominal_zones()?,
        };
        Ok(Self {
            spec,
            zones,
            matrix,
            record: record.clone(),
            solution: None,
        })
    }
}

/// How the surface is driven during a link run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Program {
    /// Every element in the 0-degree state; no focusing.
    RisOff,
    /// The focusing configuration throughout.
    FocusOnly,
    /// Focus slots interleaved with perturbed null slots.
    Slm(RatioPolicy),
}

impl Program {
    pub fn name(self) -> &'static str {
        match self {
            Program::RisOff => "ris_off",
            Program::FocusOnly => "focus_only",
            Program::Slm(_) => "slm",
        }
    }
}

/// Link outcome at one location.
#[derive(Clone, Debug, PartialEq)]
pub struct PointOutcome {
    pub point: PolarPoint,
    /// Focus field relative to Bob's (dB).
    pub reference_db: f64,
    pub result: LinkResult,
}

/// Bob plus a set of other receivers under one transmission.
#[derive(Clone, Debug, PartialEq)]
pub struct Survey {
    pub bob: LinkResult,
    pub points: Vec<PointOutcome>,
}

impl Survey {
    pub fn mean_ber(&self) -> f64 {
        mean(self.points.iter().map(|p| p.result.ber))
    }

    pub fn fraction_at_least(&self, ber: f64) -> f64 {
        self.points.iter().filter(|p| p.result.ber >= ber).count() as f64 / self.points.len() as f64
    }

    pub fn mean_evm(&self) -> f64 {
        mean(self.points.iter().map(|p| p.result.evm_measured))
    }

    /// Points whose focus field is within `db` of Bob's.
    pub fn strong(&self, db: f64) -> Vec<&PointOutcome> {
        self.points.iter().filter(|p| p.reference_db >= db).collect()
    }

    pub fn strong_mean_ber(&self, db: f64) -> f64 {
        mean(self.strong(db).into_iter().map(|p| p.result.ber))
    }
}

fn mean(it: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = it.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

/// Scene plus nulling design: everything fixed before a link run.
#[derive(Clone, Debug)]
pub struct System {
    pub scene: Scene,
    pub null: NullDesign,
}

impl System {
    pub fn new(scene: Scene, null: NullDesign) -> Self {
        Self { scene, null }
    }

    pub fn preset(&self) -> &Preset {
        &self.scene.preset
    }

    /// Eavesdropper sample points: high-gain and outer sub-zones.
    pub fn eve_points(&self) -> Vec<PolarPoint> {
        self.null.zones.eve_points()
    }

    pub fn context(&self) -> Result<EvmContext, CliError> {
        let s = &self.scene;
        Ok(EvmContext::new(
            &s.scn,
            &s.bob.to_cartesian(),
            &s.focus,
            &self.null.matrix,
            &self.eve_points(),
            &self.null.zones.bob_points(),
        )?)
    }

    pub fn library(&self, evm0: f64, slot_width: f64, seed: u64) -> Result<SequenceLibrary, CliError> {
        let t = &self.preset().temporal;
        Ok(build_library(
            &self.context()?,
            evm0,
            t.library_count,
            t.library_length,
            slot_width,
            seed,
        )?)
    }

    /// The preset's library for `scheme` at the configured slot width.
    pub fn default_library(&self, scheme: Modulation, slot_width: f64) -> Result<SequenceLibrary, CliError> {
        let p = self.preset();
        let evm0 = if scheme == p.temporal.modulation { p.evm0() } else { scheme.evm0() };
        self.library(evm0, slot_width, p.temporal.library_seed)
    }

    pub fn fields(&self, program: Program, p: &PolarPoint) -> Result<PointFields, CliError> {
        let s = &self.scene;
        let h = ChannelVector::new(&s.scn, &p.to_cartesian())?;
        Ok(match program {
            Program::RisOff => {
                let off = PhaseMatrix::uniform(s.focus.rows(), s.focus.cols(), PhaseState::Deg0);
                let e = h.field(&off);
                PointFields { focus: e, null: e }
            }
            _ => PointFields {
                focus: h.field(&s.focus),
                null: h.field(&self.null.matrix),
            },
        })
    }

    pub fn transmission(
        &self,
        scheme: Modulation,
        link: &LinkConfig,
        program: Program,
        library: Option<&SequenceLibrary>,
    ) -> Result<Transmission, CliError> {
        let mut stream = match program {
            Program::RisOff | Program::FocusOnly => SlotStream::repeat(SlotProgram::focus_only(1, link.slot_width)?),
            Program::Slm(policy) => {
                let lib = library.ok_or_else(|| CliError::Config("SLM runs need a sequence library".into()))?;
                SlotStream::pipeline(SlmPipeline::new(lib.clone(), policy, link.seed)?)
            }
        };
        Ok(Transmission::new(scheme, link, &mut stream)?)
    }

    /// Noise powers at Bob and at every other receiver.
    pub fn noise(&self, link: &LinkConfig) -> (f64, f64) {
        let bob = link.noise_power(self.scene.reference.norm());
        (bob, bob * 10f64.powf(self.preset().link.eve_noise_db / 10.0))
    }

    /// Receive at Bob (noise stream 0) and at `points` (streams 1, 2, ...).
    pub fn survey(
        &self,
        scheme: Modulation,
        link: &LinkConfig,
        program: Program,
        library: Option<&SequenceLibrary>,
        points: &[PolarPoint],
    ) -> Result<Survey, CliError> {
        let tx = self.transmission(scheme, link, program, library)?;
        let (n_bob, n_eve) = self.noise(link);
        let bob = tx.receive(self.fields(program, &self.scene.bob)?, n_bob, 0)?;
        let points = points
            .par_iter()
            .enumerate()
            .map(|(i, p)| {
                Ok(PointOutcome {
                    point: *p,
                    reference_db: self.scene.reference_db(p)?,
                    result: tx.receive(self.fields(program, p)?, n_eve, i as u64 + 1)?,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        Ok(Survey { bob, points })
    }

    /// Survey of the eavesdropper sample points.
    pub fn security(
        &self,
        scheme: Modulation,
        link: &LinkConfig,
        program: Program,
        library: Option<&SequenceLibrary>,
    ) -> Result<Survey, CliError> {
        self.survey(scheme, link, program, library, &self.eve_points())
    }
}

/// Null-slot and interleaved EVM at a point for one library entry.
pub fn point_evm(fields: PointFields, library: &SequenceLibrary, entry: usize, ratio: u32) -> Result<(f64, f64), CliError> {
    use slm_core::temporal::{evm, evm_interleaved_closed};
    let seq = &library.entries[entry].sequence;
    let samples: Vec<C64> = seq.slots().iter().map(|s| s.apply(fields.null)).collect();
    let null = evm(&samples, fields.focus)?;
    let k_null = seq.len();
    Ok((null, evm_interleaved_closed(null, ratio as usize * k_null, k_null)?))
}
