//! Polar sweep grids in the horizontal plane.

use serde::{Deserialize, Serialize};
use slm_core::PolarPoint;

use crate::CliError;

/// Inclusive `min..=max` by `step`, snapped to a 1e-9 lattice so that
/// accumulated rounding never creates near-duplicates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

fn snap(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

impl Axis {
    pub fn new(min: f64, max: f64, step: f64) -> Result<Self, CliError> {
        let a = Self { min, max, step };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.step > 0.0 && self.step.is_finite() && self.min.is_finite() && self.max.is_finite()) {
            return Err(CliError::Config(format!("bad axis step {}", self.step)));
        }
        if self.max < self.min {
            return Err(CliError::Config(format!("axis {}..{} is empty", self.min, self.max)));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let n = ((self.max - self.min) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| snap(self.min + i as f64 * self.step)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Patch {
    pub r_m: Axis,
    pub theta_deg: Axis,
}

impl Patch {
    fn cells(&self) -> Vec<(f64, f64)> {
        let th = self.theta_deg.values();
        self.r_m
            .values()
            .into_iter()
            .flat_map(|r| th.iter().map(move |&t| (r, t)))
            .collect()
    }
}

/// A coarse patch with an optional refined patch, typically around Bob.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepGrid {
    pub coarse: Patch,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refined: Option<Patch>,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            coarse: Patch {
                r_m: Axis { min: 1.0, max: 3.0, step: 0.2 },
                theta_deg: Axis { min: -90.0, max: 90.0, step: 10.0 },
            },
            refined: Some(Patch {
                r_m: Axis { min: 1.4, max: 1.8, step: 0.1 },
                theta_deg: Axis { min: -20.0, max: 20.0, step: 5.0 },
            }),
        }
    }
}

impl SweepGrid {
    pub fn validate(&self) -> Result<(), CliError> {
        for p in std::iter::once(&self.coarse).chain(&self.refined) {
            p.r_m.validate()?;
            p.theta_deg.validate()?;
            if p.r_m.min <= 0.0 {
                return Err(CliError::Config("sweep ranges must be positive".into()));
            }
        }
        Ok(())
    }

    /// `(r, theta_deg)` pairs sorted by range then angle, without duplicates.
    pub fn cells(&self) -> Vec<(f64, f64)> {
        let mut v = self.coarse.cells();
        if let Some(p) = &self.refined {
            v.extend(p.cells());
        }
        v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        v.dedup();
        v
    }

    pub fn points(&self) -> Result<Vec<PolarPoint>, CliError> {
        self.cells()
            .into_iter()
            .map(|(r, t)| PolarPoint::horizontal_deg(r, t).map_err(CliError::from))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_grid_size() {
        let g = SweepGrid::default();
        // 11 ranges x 19 angles, plus 5 x 9 refined minus the 3 x 5 shared cells.
        assert_eq!(g.coarse.cells().len(), 209);
        assert_eq!(g.refined.unwrap().cells().len(), 45);
        assert_eq!(g.cells().len(), 209 + 45 - 15);
    }

    #[test]
    fn axis_values_snap() {
        let v = Axis::new(1.0, 3.0, 0.2).unwrap().values();
        assert_eq!(v.len(), 11);
        assert_eq!(v[1], 1.2);
        assert_eq!(v[10], 3.0);
        assert_eq!(Axis::new(0.0, 1.0, 0.3).unwrap().values(), vec![0.0, 0.3, 0.6, 0.9]);
        assert!(Axis::new(1.0, 0.0, 0.1).is_err());
        assert!(Axis::new(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn cells_sorted_unique() {
        let c = SweepGrid::default().cells();
        assert!(c.windows(2).all(|w| w[0].0 < w[1].0 || (w[0].0 == w[1].0 && w[0].1 < w[1].1)));
    }
}
