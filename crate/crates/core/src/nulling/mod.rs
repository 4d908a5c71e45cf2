//! Squeeze nulling: four focal points placed around a null centre, combined
//! by a weighted sum of their focusing coefficients and quantized to 2 bits.
//! The offsets and weights (8 parameters) are tuned by a seeded search.

mod optimizer;
mod solve;
mod zones;

pub use optimizer::{
    run_search, Bounds, Evaluation, GaConfig, GeneticSearch, RandomSearch, SearchRun, SearchStrategy,
};
pub use solve::{
    baseline_objective, solve_snm, solve_snm_with, SnmBounds, SnmConfig, SnmSolution, ZoneMode,
};
pub use zones::{ZoneEvaluator, ZoneLayout, ZoneModel, ZoneSamples};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{quantize_complex, PhaseMatrix, Scenario};
use crate::focusing::ideal_focus_phases;
use crate::geometry::PolarPoint;
use crate::scalar::Real;

/// Lower and upper bound on pairwise ratios of the per-zone high-gain peaks.
pub const PEAK_BALANCE: (f64, f64) = (0.9, 1.1);

/// Main zones around the null centre.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Zone {
    /// Towards the array (smaller range).
    Front,
    /// Away from the array (larger range).
    Back,
    /// Smaller azimuth.
    Left,
    /// Larger azimuth.
    Right,
}

impl Zone {
    pub const ALL: [Zone; 4] = [Zone::Front, Zone::Back, Zone::Left, Zone::Right];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Zone::Front => "front",
            Zone::Back => "back",
            Zone::Left => "left",
            Zone::Right => "right",
        }
    }

    /// Whether the zone extends along range (otherwise along azimuth).
    pub fn is_radial(self) -> bool {
        matches!(self, Zone::Front | Zone::Back)
    }

    /// Point at axial distance `s` from `center` inside this zone
    /// (metres for radial zones, radians for angular ones).
    pub fn displaced<T: Real>(self, center: &PolarPoint<T>, s: T) -> Result<PolarPoint<T>> {
        let (r, t, p) = (center.r(), center.theta(), center.phi());
        match self {
            Zone::Front => PolarPoint::new(r - s, t, p),
            Zone::Back => PolarPoint::new(r + s, t, p),
            Zone::Left => PolarPoint::new(r, t - s, p),
            Zone::Right => PolarPoint::new(r, t + s, p),
        }
    }
}

/// Null centre, focal offsets and focal weights.
///
/// `offsets` and `weights` are ordered front, back, left, right. Radial
/// offsets are in metres, angular offsets in radians.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NullSpec<T = f64> {
    center: PolarPoint<T>,
    offsets: [T; 4],
    weights: [T; 4],
}

impl<T: Real> NullSpec<T> {
    pub fn new(center: PolarPoint<T>, offsets: [T; 4], weights: [T; 4]) -> Result<Self> {
        if offsets.iter().any(|o| !(o.is_finite() && *o > T::zero())) {
            return Err(Error::InvalidNullSpec(format!(
                "offsets must be positive, got {offsets:?}"
            )));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= T::zero())) {
            return Err(Error::InvalidNullSpec(format!(
                "weights must be non-negative, got {weights:?}"
            )));
        }
        let sum: T = weights.iter().copied().sum();
        if (sum - T::one()).abs() > T::lit(1e3) * T::epsilon() {
            return Err(Error::InvalidNullSpec(format!("weights must sum to 1, got {sum}")));
        }
        Ok(Self {
            center,
            offsets,
            weights,
        })
    }

    pub fn equal_weights(center: PolarPoint<T>, offsets: [T; 4]) -> Result<Self> {
        Self::new(center, offsets, [T::lit(0.25); 4])
    }

    pub fn center(&self) -> &PolarPoint<T> {
        &self.center
    }

    pub fn offsets(&self) -> [T; 4] {
        self.offsets
    }

    pub fn weights(&self) -> [T; 4] {
        self.weights
    }

    pub fn offset(&self, zone: Zone) -> T {
        self.offsets[zone.index()]
    }

    pub fn weight(&self, zone: Zone) -> T {
        self.weights[zone.index()]
    }
}

/// Focal point of each zone (front, back, left, right).
pub fn focal_points<T: Real>(spec: &NullSpec<T>) -> Result<[PolarPoint<T>; 4]> {
    let c = spec.center();
    if c.r() - spec.offset(Zone::Front) <= T::zero() {
        return Err(Error::InvalidNullSpec(format!(
            "front offset {} reaches past the array (centre range {})",
            spec.offset(Zone::Front),
            c.r()
        )));
    }
    let pts = Zone::ALL.map(|z| z.displaced(c, spec.offset(z)));
    let [a, b, l, r] = pts;
    Ok([a?, b?, l?, r?])
}

/// Weighted-sum nulling matrix: each element takes the 2-bit state nearest
/// to `sum_q w_q exp(j phi_q)`, `phi_q` being that element's focusing phase
/// for focal point `q`.
pub fn null_matrix<T: Real>(scn: &Scenario<T>, spec: &NullSpec<T>) -> Result<PhaseMatrix> {
    let cfg = scn.config();
    let foci = focal_points(spec)?;
    let mut acc = vec![Complex::new(T::zero(), T::zero()); cfg.element_count()];
    for (focus, w) in foci.iter().zip(spec.weights()) {
        if w == T::zero() {
            continue;
        }
        let phases = ideal_focus_phases(scn, &focus.to_cartesian())?;
        for (a, phi) in acc.iter_mut().zip(phases) {
            let (s, c) = phi.sin_cos();
            *a += Complex::new(c * w, s * w);
        }
    }
    quantize_sums(cfg.rows(), cfg.cols(), acc)
}

fn quantize_sums<T: Real>(rows: usize, cols: usize, acc: Vec<Complex<T>>) -> Result<PhaseMatrix> {
    let tiny = T::lit(16.0) * T::epsilon();
    let states = acc
        .into_iter()
        .enumerate()
        .map(|(idx, a)| {
            if a.norm() <= tiny {
                return Err(Error::DegenerateWeights {
                    m: idx / cols + 1,
                    n: idx % cols + 1,
                });
            }
            quantize_complex(a)
        })
        .collect::<Result<Vec<_>>>()?;
    PhaseMatrix::from_states(rows, cols, states)
}

/// Per-zone null depth (mean nulling |E| over mean high-gain |E|) and their sum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthReport<T = f64> {
    pub per_zone: [T; 4],
    pub objective: T,
}

/// Peak-position and peak-balance constraint status.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Feasibility<T = f64> {
    /// High-gain peak at least the outer peak, per zone.
    pub peak_position: [bool; 4],
    /// All pairwise high-gain peak ratios inside [`PEAK_BALANCE`].
    pub peak_balance: bool,
    pub high_peaks: [T; 4],
    pub outer_peaks: [T; 4],
}

impl<T: Real> Feasibility<T> {
    pub fn satisfied(&self) -> bool {
        self.peak_balance && self.peak_position.iter().all(|&ok| ok)
    }

    /// Total constraint violation in ratio units; zero when satisfied.
    pub fn violation(&self) -> T {
        let (lo, hi) = (T::lit(PEAK_BALANCE.0), T::lit(PEAK_BALANCE.1));
        let mut v = T::zero();
        for (h, o) in self.high_peaks.iter().zip(&self.outer_peaks) {
            if *o > T::zero() && h < o {
                v += T::one() - *h / *o;
            }
        }
        let max = self.high_peaks.iter().copied().fold(T::zero(), T::max);
        let min = self.high_peaks.iter().copied().fold(T::infinity(), T::min);
        if min > T::zero() {
            v += (max / min - hi).max(T::zero()) + (lo - min / max).max(T::zero());
        } else {
            v += T::one();
        }
        v
    }
}

/// Null depth of `matrix` over the zone sample points.
pub fn null_depth<T: Real>(
    scn: &Scenario<T>,
    matrix: &PhaseMatrix,
    zones: &ZoneModel<T>,
) -> Result<DepthReport<T>> {
    ZoneEvaluator::new(scn, zones)?.depth(matrix)
}

/// Constraint status of `matrix` over the zone sample points.
pub fn snm_constraints<T: Real>(
    scn: &Scenario<T>,
    matrix: &PhaseMatrix,
    zones: &ZoneModel<T>,
) -> Result<Feasibility<T>> {
    ZoneEvaluator::new(scn, zones)?.feasibility(matrix)
}

/// Depth and constraint checks from precomputed zone magnitudes.
pub(crate) fn depth_from_magnitudes<T: Real>(
    nulling: &[Vec<T>; 4],
    high: &[Vec<T>; 4],
) -> Result<DepthReport<T>> {
    let mean = |v: &[T]| v.iter().copied().sum::<T>() / T::from_usize_lossy(v.len());
    let mut per_zone = [T::zero(); 4];
    for z in 0..4 {
        let h = mean(&high[z]);
        if h <= T::zero() {
            return Err(Error::DegeneratePattern(format!(
                "zero mean high-gain field in the {} zone",
                Zone::ALL[z].name()
            )));
        }
        per_zone[z] = mean(&nulling[z]) / h;
    }
    Ok(DepthReport {
        per_zone,
        objective: per_zone.iter().copied().sum(),
    })
}

pub(crate) fn feasibility_from_magnitudes<T: Real>(
    high: &[Vec<T>; 4],
    outer: &[Vec<T>; 4],
) -> Feasibility<T> {
    let peak = |v: &[T]| v.iter().copied().fold(T::zero(), T::max);
    let high_peaks = [0, 1, 2, 3].map(|z| peak(&high[z]));
    let outer_peaks = [0, 1, 2, 3].map(|z| peak(&outer[z]));
    let peak_position = [0, 1, 2, 3].map(|z| high_peaks[z] >= outer_peaks[z]);
    let (lo, hi) = (T::lit(PEAK_BALANCE.0), T::lit(PEAK_BALANCE.1));
    let mut peak_balance = true;
    for a in &high_peaks {
        for b in &high_peaks {
            if *b <= T::zero() {
                peak_balance = false;
                continue;
            }
            let ratio = *a / *b;
            if ratio < lo || ratio > hi {
                peak_balance = false;
            }
        }
    }
    Feasibility {
        peak_position,
        peak_balance,
        high_peaks,
        outer_peaks,
    }
}
