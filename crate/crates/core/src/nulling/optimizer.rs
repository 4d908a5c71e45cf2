//! Box-constrained black-box minimisation used by the nulling solver.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-gene box bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Bounds {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::LengthMismatch {
                left: lo.len(),
                right: hi.len(),
            });
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a.is_finite() && b.is_finite() && a <= b)) {
            return Err(Error::InvalidArgument(format!("bad bounds {lo:?} / {hi:?}")));
        }
        Ok(Self { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for ((v, lo), hi) in x.iter_mut().zip(&self.lo).zip(&self.hi) {
            *v = if v.is_nan() { *lo } else { v.clamp(*lo, *hi) };
        }
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(lo, hi)| if lo == hi { *lo } else { rng.random_range(*lo..*hi) })
            .collect()
    }
}

/// A population-based or sampling search. Lower fitness is better.
pub trait SearchStrategy {
    /// Next batch of candidates to evaluate.
    fn propose(&mut self, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>>;
    /// Fitness of the batch returned by the last `propose`, in order.
    fn observe(&mut self, candidates: &[Vec<f64>], fitness: &[f64]);
}

/// Genetic algorithm settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub population: usize,
    pub tournament: usize,
    pub crossover_rate: f64,
    /// Probability that a gene is perturbed.
    pub mutation_rate: f64,
    /// Perturbation standard deviation as a fraction of the gene range.
    pub mutation_sigma: f64,
    pub elitism: usize,
    pub generations: usize,
    /// Stop after this many generations without improvement (0 disables).
    pub stagnation: usize,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population: 64,
            tournament: 3,
            crossover_rate: 0.9,
            mutation_rate: 0.25,
            mutation_sigma: 0.1,
            elitism: 2,
            generations: 200,
            stagnation: 30,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(format!("GA config: {msg}")));
        if self.population < 2 {
            return bad("population must be at least 2");
        }
        if self.tournament == 0 {
            return bad("tournament size must be positive");
        }
        if self.elitism >= self.population {
            return bad("elitism must be smaller than the population");
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) || !(0.0..=1.0).contains(&self.mutation_rate) {
            return bad("rates must lie in [0, 1]");
        }
        if !(self.mutation_sigma >= 0.0 && self.mutation_sigma.is_finite()) {
            return bad("mutation sigma must be non-negative");
        }
        if self.generations == 0 {
            return bad("generation budget must be positive");
        }
        Ok(())
    }
}

/// Tournament selection, uniform crossover, Gaussian mutation and elitism.
#[derive(Clone, Debug)]
pub struct GeneticSearch {
    cfg: GaConfig,
    bounds: Bounds,
    seeds: Vec<Vec<f64>>,
    population: Vec<(Vec<f64>, f64)>,
    elites: Vec<(Vec<f64>, f64)>,
}

impl GeneticSearch {
    /// `seeds` are injected into the first generation ahead of random members.
    pub fn new(cfg: GaConfig, bounds: Bounds, seeds: Vec<Vec<f64>>) -> Result<Self> {
        cfg.validate()?;
        if let Some(s) = seeds.iter().find(|s| s.len() != bounds.dim()) {
            return Err(Error::LengthMismatch {
                left: s.len(),
                right: bounds.dim(),
            });
        }
        Ok(Self {
            cfg,
            bounds,
            seeds,
            population: Vec::new(),
            elites: Vec::new(),
        })
    }

    fn tournament<'a>(&'a self, rng: &mut ChaCha8Rng) -> &'a [f64] {
        let n = self.population.len();
        let mut best = rng.random_range(0..n);
        for _ in 1..self.cfg.tournament {
            let i = rng.random_range(0..n);
            if self.population[i].1 < self.population[best].1 {
                best = i;
            }
        }
        &self.population[best].0
    }
}

impl SearchStrategy for GeneticSearch {
    fn propose(&mut self, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
        if self.population.is_empty() {
            let mut out: Vec<Vec<f64>> = self
                .seeds
                .iter()
                .take(self.cfg.population)
                .map(|s| {
                    let mut s = s.clone();
                    self.bounds.clamp(&mut s);
                    s
                })
                .collect();
            while out.len() < self.cfg.population {
                out.push(self.bounds.sample(rng));
            }
            return out;
        }
        let mut ranked = self.population.clone();
        ranked.sort_by(|a, b| a.1.total_cmp(&b.1));
        self.elites = ranked.into_iter().take(self.cfg.elitism).collect();

        let sigma: Vec<f64> = self
            .bounds
            .lo()
            .iter()
            .zip(self.bounds.hi())
            .map(|(lo, hi)| (hi - lo) * self.cfg.mutation_sigma)
            .collect();
        let children = self.cfg.population - self.elites.len();
        (0..children)
            .map(|_| {
                let a = self.tournament(rng);
                let b = self.tournament(rng);
                let mut child: Vec<f64> = if rng.random::<f64>() < self.cfg.crossover_rate {
                    a.iter()
                        .zip(b)
                        .map(|(x, y)| if rng.random::<bool>() { *x } else { *y })
                        .collect()
                } else {
                    a.to_vec()
                };
                for (g, s) in child.iter_mut().zip(&sigma) {
                    if *s > 0.0 && rng.random::<f64>() < self.cfg.mutation_rate {
                        *g += Normal::new(0.0, *s).expect("finite sigma").sample(rng);
                    }
                }
                self.bounds.clamp(&mut child);
                child
            })
            .collect()
    }

    fn observe(&mut self, candidates: &[Vec<f64>], fitness: &[f64]) {
        let mut next = std::mem::take(&mut self.elites);
        next.extend(candidates.iter().cloned().zip(fitness.iter().copied()));
        self.population = next;
    }
}

/// Uniform sampling of the box; a baseline for the genetic search.
#[derive(Clone, Debug)]
pub struct RandomSearch {
    bounds: Bounds,
    batch: usize,
}

impl RandomSearch {
    pub fn new(bounds: Bounds, batch: usize) -> Result<Self> {
        if batch == 0 {
            return Err(Error::InvalidArgument("batch size must be positive".into()));
        }
        Ok(Self { bounds, batch })
    }
}

impl SearchStrategy for RandomSearch {
    fn propose(&mut self, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
        (0..self.batch).map(|_| self.bounds.sample(rng)).collect()
    }

    fn observe(&mut self, _: &[Vec<f64>], _: &[f64]) {}
}

/// Score of one candidate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    /// Penalised objective; lower is better.
    pub fitness: f64,
    pub feasible: bool,
}

/// Outcome of [`run_search`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchRun {
    /// Best feasible candidate if one was seen, otherwise best overall.
    pub best: Vec<f64>,
    pub best_fitness: f64,
    pub feasible: bool,
    /// Best reported fitness after each generation.
    pub trace: Vec<f64>,
    pub evaluations: usize,
    pub generations: usize,
}

/// Drive `strategy` for up to `generations` batches. Candidates of a batch are
/// evaluated in parallel; all randomness is drawn serially from `rng`, so the
/// result does not depend on the thread count.
pub fn run_search<S, F>(
    strategy: &mut S,
    generations: usize,
    stagnation: usize,
    rng: &mut ChaCha8Rng,
    eval: F,
) -> Result<SearchRun>
where
    S: SearchStrategy + ?Sized,
    F: Fn(&[f64]) -> Evaluation + Sync,
{
    if generations == 0 {
        return Err(Error::InvalidArgument("generation budget must be positive".into()));
    }
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut best_feasible: Option<(Vec<f64>, f64)> = None;
    let mut trace = Vec::with_capacity(generations);
    let mut evaluations = 0;
    let mut stale = 0;
    for _ in 0..generations {
        let batch = strategy.propose(rng);
        let scores: Vec<Evaluation> = batch.par_iter().map(|c| eval(c)).collect();
        evaluations += batch.len();
        let fitness: Vec<f64> = scores
            .iter()
            .map(|e| if e.fitness.is_nan() { f64::INFINITY } else { e.fitness })
            .collect();

        let before = (best.as_ref().map(|b| b.1), best_feasible.as_ref().map(|b| b.1));
        for ((cand, f), e) in batch.iter().zip(&fitness).zip(&scores) {
            if best.as_ref().is_none_or(|b| *f < b.1) {
                best = Some((cand.clone(), *f));
            }
            if e.feasible && best_feasible.as_ref().is_none_or(|b| *f < b.1) {
                best_feasible = Some((cand.clone(), *f));
            }
        }
        strategy.observe(&batch, &fitness);

        let after = (best.as_ref().map(|b| b.1), best_feasible.as_ref().map(|b| b.1));
        let reported = best_feasible.as_ref().or(best.as_ref()).map_or(f64::INFINITY, |b| b.1);
        trace.push(reported);
        if after == before {
            stale += 1;
            if stagnation > 0 && stale >= stagnation {
                break;
            }
        } else {
            stale = 0;
        }
    }
    let feasible = best_feasible.is_some();
    let (best, best_fitness) = best_feasible
        .or(best)
        .ok_or_else(|| Error::InvalidArgument("search strategy proposed no candidates".into()))?;
    Ok(SearchRun {
        best,
        best_fitness,
        feasible,
        generations: trace.len(),
        trace,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;

    fn sphere(x: &[f64]) -> Evaluation {
        Evaluation {
            fitness: x.iter().map(|v| (v - 0.3) * (v - 0.3)).sum(),
            feasible: true,
        }
    }

    fn bounds(d: usize) -> Bounds {
        Bounds::new(vec![-1.0; d], vec![1.0; d]).unwrap()
    }

    #[test]
    fn ga_minimises_sphere() {
        let cfg = GaConfig {
            generations: 150,
            stagnation: 0,
            ..GaConfig::default()
        };
        let mut ga = GeneticSearch::new(cfg, bounds(4), vec![]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let run = run_search(&mut ga, 150, 0, &mut rng, sphere).unwrap();
        assert!(run.best_fitness < 1e-3, "{}", run.best_fitness);
        assert_eq!(run.generations, 150);
        assert_eq!(run.evaluations, 64 + 149 * 62);
    }

    #[test]
    fn ga_beats_random_search_at_equal_budget() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut ga = GeneticSearch::new(GaConfig::default(), bounds(8), vec![]).unwrap();
        let g = run_search(&mut ga, 60, 0, &mut rng, sphere).unwrap();
        let mut rs = RandomSearch::new(bounds(8), 64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = run_search(&mut rs, 60, 0, &mut rng, sphere).unwrap();
        assert!(g.best_fitness < r.best_fitness);
    }

    #[test]
    fn seeds_are_used_and_budget_of_one_returns_best_seed() {
        let mut ga = GeneticSearch::new(GaConfig::default(), bounds(2), vec![vec![0.3, 0.3]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let run = run_search(&mut ga, 1, 30, &mut rng, sphere).unwrap();
        assert_eq!(run.best, vec![0.3, 0.3]);
        assert_eq!(run.best_fitness, 0.0);
        assert_eq!(run.trace.len(), 1);
    }

    #[test]
    fn stagnation_stops_early() {
        let flat = |_: &[f64]| Evaluation {
            fitness: 1.0,
            feasible: true,
        };
        let mut ga = GeneticSearch::new(GaConfig::default(), bounds(3), vec![]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let run = run_search(&mut ga, 200, 30, &mut rng, flat).unwrap();
        assert_eq!(run.generations, 31);
    }

    #[test]
    fn feasible_candidate_preferred_over_lower_penalised_fitness() {
        // Feasible only when x0 > 0.5, fitness otherwise lower near zero.
        let eval = |x: &[f64]| Evaluation {
            fitness: x[0].abs(),
            feasible: x[0] > 0.5,
        };
        let mut rs = RandomSearch::new(bounds(1), 32).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let run = run_search(&mut rs, 5, 0, &mut rng, eval).unwrap();
        assert!(run.feasible);
        assert!(run.best[0] > 0.5);
    }

    #[test]
    fn nan_fitness_never_wins() {
        let eval = |x: &[f64]| Evaluation {
            fitness: if x[0] < 0.0 { f64::NAN } else { x[0] },
            feasible: true,
        };
        let mut rs = RandomSearch::new(bounds(1), 16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let run = run_search(&mut rs, 3, 0, &mut rng, eval).unwrap();
        assert!(run.best[0] >= 0.0);
    }

    #[test]
    fn config_validation() {
        assert!(GaConfig { population: 1, ..GaConfig::default() }.validate().is_err());
        assert!(GaConfig { elitism: 64, ..GaConfig::default() }.validate().is_err());
        assert!(GaConfig { generations: 0, ..GaConfig::default() }.validate().is_err());
        assert!(Bounds::new(vec![1.0], vec![0.0]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn trace_is_monotone_and_deterministic(seed in any::<u64>()) {
            let go = || {
                let mut ga = GeneticSearch::new(GaConfig { population: 16, ..GaConfig::default() }, bounds(3), vec![]).unwrap();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                run_search(&mut ga, 20, 0, &mut rng, sphere).unwrap()
            };
            let a = go();
            prop_assert!(a.trace.windows(2).all(|w| w[1] <= w[0]));
            prop_assert_eq!(a, go());
        }
    }
}
