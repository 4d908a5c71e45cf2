use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::optimizer::{run_search, Bounds, Evaluation, GaConfig, GeneticSearch, SearchStrategy};
use super::{null_matrix, DepthReport, Feasibility, NullSpec, ZoneEvaluator, ZoneModel};
use crate::error::{Error, Result};
use crate::field::{PhaseMatrix, Scenario};
use crate::geometry::PolarPoint;

/// Search box for the focal offsets.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnmBounds {
    /// Front/back offset range (m).
    pub range: (f64, f64),
    /// Left/right offset range (rad).
    pub angle: (f64, f64),
}

impl Default for SnmBounds {
    fn default() -> Self {
        Self {
            range: (0.05, 0.6),
            angle: (2f64.to_radians(), 25f64.to_radians()),
        }
    }
}

/// How the zone samples relate to a candidate's focal offsets.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZoneMode {
    /// Zones are rebuilt around every candidate's offsets with the layout of
    /// the supplied model, so high-gain bands stay centred on the focal points.
    #[default]
    Focal,
    /// The supplied zone samples are used unchanged for every candidate.
    Fixed,
}

/// Solver settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SnmConfig {
    pub ga: GaConfig,
    pub bounds: SnmBounds,
    /// Fitness penalty per unit of constraint violation.
    pub penalty: f64,
    pub zone_mode: ZoneMode,
    /// Extra starting guesses as `(offsets, weights)`.
    pub initial: Vec<([f64; 4], [f64; 4])>,
}

impl Default for SnmConfig {
    fn default() -> Self {
        Self {
            ga: GaConfig::default(),
            bounds: SnmBounds::default(),
            penalty: 10.0,
            zone_mode: ZoneMode::Focal,
            initial: Vec::new(),
        }
    }
}

/// Result of a nulling synthesis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnmSolution {
    pub spec: NullSpec,
    pub matrix: PhaseMatrix,
    /// Zone samples the solution was scored on.
    pub zones: ZoneModel,
    /// Objective: summed per-zone null depth.
    pub depth: f64,
    pub per_zone: [f64; 4],
    pub feasibility: Feasibility,
    pub feasible: bool,
    /// Penalised objective of the returned candidate.
    pub fitness: f64,
    pub trace: Vec<f64>,
    pub generations: usize,
    pub evaluations: usize,
}

fn min_offsets(zones: &ZoneModel, cfg: &SnmConfig) -> [f64; 4] {
    match cfg.zone_mode {
        ZoneMode::Focal => ZoneModel::min_offsets(zones.layout()),
        ZoneMode::Fixed => [0.0; 4],
    }
}

/// Objective of equal weights at the zones' nominal offsets.
pub fn baseline_objective(scn: &Scenario, zones: &ZoneModel) -> Result<f64> {
    let spec = NullSpec::equal_weights(*zones.center(), zones.nominal())?;
    let m = null_matrix(scn, &spec)?;
    Ok(ZoneEvaluator::new(scn, zones)?.depth(&m)?.objective)
}

struct Encoding {
    center: PolarPoint,
    bounds: Bounds,
}

impl Encoding {
    fn new(center: PolarPoint, b: &SnmBounds, min: [f64; 4]) -> Result<Self> {
        let lo = [
            b.range.0.max(min[0]),
            b.range.0.max(min[1]),
            b.angle.0.max(min[2]),
            b.angle.0.max(min[3]),
        ];
        // Keep the front focal point in front of the array.
        let front_hi = b.range.1.min(center.r() - 1e-3);
        let hi = [front_hi, b.range.1, b.angle.1, b.angle.1];
        if lo.iter().zip(&hi).any(|(l, h)| l > h) {
            return Err(Error::InvalidArgument(format!(
                "empty offset search box: lower {lo:?}, upper {hi:?}"
            )));
        }
        let lo = lo.into_iter().chain([0.0; 4]).collect();
        let hi = hi.into_iter().chain([1.0; 4]).collect();
        Ok(Self {
            center,
            bounds: Bounds::new(lo, hi)?,
        })
    }

    fn decode(&self, g: &[f64]) -> Result<NullSpec> {
        let offsets = [g[0], g[1], g[2], g[3]];
        let sum: f64 = g[4..8].iter().sum();
        let weights = if sum > 0.0 {
            [g[4] / sum, g[5] / sum, g[6] / sum, g[7] / sum]
        } else {
            [0.25; 4]
        };
        NullSpec::new(self.center, offsets, weights)
    }

    fn encode(offsets: [f64; 4], weights: [f64; 4]) -> Vec<f64> {
        offsets.into_iter().chain(weights).collect()
    }
}

struct Scored {
    matrix: PhaseMatrix,
    zones: ZoneModel,
    depth: DepthReport,
    feas: Feasibility,
    fitness: f64,
}

/// Scores candidates under one zone mode.
enum Scorer<'a> {
    Fixed(&'a ZoneModel, Box<ZoneEvaluator>),
    Focal(&'a ZoneModel),
}

impl Scorer<'_> {
    fn score(&self, scn: &Scenario, spec: &NullSpec, penalty: f64) -> Result<Scored> {
        let matrix = null_matrix(scn, spec)?;
        let (zones, (depth, feas)) = match self {
            Scorer::Fixed(z, eval) => ((*z).clone(), eval.evaluate(&matrix)?),
            Scorer::Focal(z) => {
                let zones = z.with_offsets(spec.offsets())?;
                let r = ZoneEvaluator::new(scn, &zones)?.evaluate(&matrix)?;
                (zones, r)
            }
        };
        let fitness = depth.objective + penalty * feas.violation();
        Ok(Scored {
            matrix,
            zones,
            depth,
            feas,
            fitness,
        })
    }
}

/// Synthesise a nulling matrix around `center` with the genetic search.
///
/// Returns [`Error::Infeasible`] carrying the best candidate when no
/// candidate met the peak constraints within the budget.
pub fn solve_snm(
    scn: &Scenario,
    center: &PolarPoint,
    zones: &ZoneModel,
    cfg: &SnmConfig,
    seed: u64,
) -> Result<SnmSolution> {
    let mut seeds = vec![Encoding::encode(zones.nominal(), [0.25; 4])];
    seeds.extend(cfg.initial.iter().map(|(o, w)| Encoding::encode(*o, *w)));
    let enc = Encoding::new(*center, &cfg.bounds, min_offsets(zones, cfg))?;
    let mut ga = GeneticSearch::new(cfg.ga.clone(), enc.bounds.clone(), seeds)?;
    solve_snm_with(scn, center, zones, cfg, &mut ga, seed)
}

/// As [`solve_snm`] with a caller-supplied search strategy over the 8-gene
/// encoding `[front, back, left, right offsets, four raw weights]`.
pub fn solve_snm_with<S: SearchStrategy + ?Sized>(
    scn: &Scenario,
    center: &PolarPoint,
    zones: &ZoneModel,
    cfg: &SnmConfig,
    strategy: &mut S,
    seed: u64,
) -> Result<SnmSolution> {
    let boundary = scn.config().fraunhofer_distance();
    if center.r() >= boundary {
        return Err(Error::NotNearField {
            r: center.r(),
            boundary,
        });
    }
    if !(cfg.penalty >= 0.0 && cfg.penalty.is_finite()) {
        return Err(Error::InvalidArgument(format!("penalty {}", cfg.penalty)));
    }
    if zones.center() != center {
        return Err(Error::InvalidArgument("zone model is centred elsewhere".into()));
    }
    let enc = Encoding::new(*center, &cfg.bounds, min_offsets(zones, cfg))?;
    let scorer = match cfg.zone_mode {
        ZoneMode::Fixed => Scorer::Fixed(zones, Box::new(ZoneEvaluator::new(scn, zones)?)),
        ZoneMode::Focal => Scorer::Focal(zones),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let run = run_search(strategy, cfg.ga.generations, cfg.ga.stagnation, &mut rng, |g| {
        match enc.decode(g).and_then(|s| scorer.score(scn, &s, cfg.penalty)) {
            Ok(s) => Evaluation {
                fitness: s.fitness,
                feasible: s.feas.satisfied(),
            },
            Err(_) => Evaluation {
                fitness: f64::INFINITY,
                feasible: false,
            },
        }
    })?;
    let spec = enc.decode(&run.best)?;
    let s = scorer.score(scn, &spec, cfg.penalty)?;
    let solution = SnmSolution {
        spec,
        matrix: s.matrix,
        zones: s.zones,
        depth: s.depth.objective,
        per_zone: s.depth.per_zone,
        feasible: s.feas.satisfied(),
        feasibility: s.feas,
        fitness: s.fitness,
        trace: run.trace,
        generations: run.generations,
        evaluations: run.evaluations,
    };
    if solution.feasible {
        Ok(solution)
    } else {
        Err(Error::Infeasible(Box::new(solution)))
    }
}
