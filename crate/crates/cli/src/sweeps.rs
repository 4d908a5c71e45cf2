//! Spatial and parameter sweeps.

use rayon::prelude::*;
use slm_core::link::{LinkConfig, Modulation};
use slm_core::temporal::{RatioPolicy, SequenceLibrary};
use slm_core::{ChannelVector, PhaseMatrix, PolarPoint};

use crate::experiment::{point_evm, Program, Scene, Survey, System};
use crate::grid::SweepGrid;
use crate::output::{CurveRow, HeatmapRow};
use crate::CliError;

fn row(p: &PolarPoint, metric: &str, value: f64, seed: Option<u64>) -> HeatmapRow {
    HeatmapRow {
        r_m: (p.r() * 1e9).round() / 1e9,
        theta_deg: (p.theta_deg() * 1e9).round() / 1e9,
        metric: metric.into(),
        value,
        seed,
    }
}

fn field_rows(scene: &Scene, m: &PhaseMatrix, grid: &SweepGrid, metric: &str) -> Result<Vec<HeatmapRow>, CliError> {
    let reference = scene.reference.norm();
    grid.points()?
        .par_iter()
        .map(|p| {
            let e = ChannelVector::new(&scene.scn, &p.to_cartesian())?.field(m).norm();
            Ok(row(p, metric, 20.0 * (e / reference).log10(), None))
        })
        .collect()
}

/// Focus field over the grid in dB relative to the field at Bob.
pub fn focus_heatmap(scene: &Scene, grid: &SweepGrid) -> Result<Vec<HeatmapRow>, CliError> {
    field_rows(scene, &scene.focus, grid, "focus_db")
}

/// Null field over the grid, relative to the focus field at Bob.
pub fn null_heatmap(system: &System, grid: &SweepGrid) -> Result<Vec<HeatmapRow>, CliError> {
    field_rows(&system.scene, &system.null.matrix, grid, "null_db")
}

/// Per point: mean null-slot EVM over the library, and the interleaved EVM
/// at each entry's ratio under `policy` (lowest admissible ratio for
/// [`RatioPolicy::Bounds`]).
pub fn evm_heatmap(
    system: &System,
    library: &SequenceLibrary,
    policy: RatioPolicy,
    grid: &SweepGrid,
    seed: u64,
) -> Result<Vec<HeatmapRow>, CliError> {
    let mut ratios = Vec::new();
    for i in 0..library.len() {
        let r = match policy {
            RatioPolicy::Fixed(r) => Some(r),
            RatioPolicy::Bounds => {
                let ints = library.ratio_range(i)?.integers();
                (!ints.is_empty()).then(|| *ints.start())
            }
        };
        if let Some(r) = r {
            ratios.push((i, r));
        }
    }
    if ratios.is_empty() {
        return Err(slm_core::Error::EmptyRatioSet.into());
    }
    let rows: Vec<Vec<HeatmapRow>> = grid
        .points()?
        .par_iter()
        .map(|p| {
            let f = system.fields(Program::FocusOnly, p)?;
            if f.focus.norm() == 0.0 {
                return Ok(Vec::new());
            }
            let (mut null, mut slm) = (0.0, 0.0);
            for &(i, r) in &ratios {
                let (n, s) = point_evm(f, library, i, r)?;
                null += n;
                slm += s;
            }
            let k = ratios.len() as f64;
            Ok(vec![
                row(p, "evm_null", null / k, Some(seed)),
                row(p, "evm_slm", slm / k, Some(seed)),
            ])
        })
        .collect::<Result<_, CliError>>()?;
    Ok(rows.into_iter().flatten().collect())
}

/// Link BER at every grid point.
pub fn ber_heatmap(
    system: &System,
    scheme: Modulation,
    link: &LinkConfig,
    program: Program,
    library: Option<&SequenceLibrary>,
    grid: &SweepGrid,
) -> Result<Vec<HeatmapRow>, CliError> {
    let points = grid.points()?;
    let s = system.survey(scheme, link, program, library, &points)?;
    Ok(s.points
        .iter()
        .map(|o| row(&o.point, "ber", o.result.ber, Some(link.seed)))
        .collect())
}

/// Bob and eavesdropper surveys for the three surface modes.
#[derive(Clone, Debug, PartialEq)]
pub struct Ablation {
    pub ris_off: Survey,
    pub focus_only: Survey,
    pub slm: Survey,
}

pub fn ablation(
    system: &System,
    scheme: Modulation,
    link: &LinkConfig,
    library: &SequenceLibrary,
    policy: RatioPolicy,
) -> Result<Ablation, CliError> {
    Ok(Ablation {
        ris_off: system.security(scheme, link, Program::RisOff, None)?,
        focus_only: system.security(scheme, link, Program::FocusOnly, None)?,
        slm: system.security(scheme, link, Program::Slm(policy), Some(library))?,
    })
}

impl Ablation {
    pub fn rows(&self, bob: &PolarPoint, seed: u64) -> Vec<HeatmapRow> {
        let mut rows = Vec::new();
        for (name, s) in [("ris_off", &self.ris_off), ("focus_only", &self.focus_only), ("slm", &self.slm)] {
            let metric = format!("{name}_ber");
            rows.push(row(bob, &metric, s.bob.ber, Some(seed)));
            rows.extend(s.points.iter().map(|o| row(&o.point, &metric, o.result.ber, Some(seed))));
        }
        rows.push(row(bob, "reference_db", 0.0, Some(seed)));
        rows.extend(
            self.slm
                .points
                .iter()
                .map(|o| row(&o.point, "reference_db", o.reference_db, Some(seed))),
        );
        rows
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TauPoint {
    pub tau: f64,
    pub bob_ber: f64,
    pub eve_ber_mean: f64,
    pub eve_ber_strong: f64,
}

/// Slot-width sweep under SLM. The library is rebuilt at each slot width.
pub fn tau_sweep(
    system: &System,
    scheme: Modulation,
    link: &LinkConfig,
    policy: RatioPolicy,
    taus: &[f64],
) -> Result<Vec<TauPoint>, CliError> {
    let strong = system.preset().link.strong_eve_db;
    taus.iter()
        .map(|&tau| {
            let link = LinkConfig { slot_width: tau, ..link.clone() };
            let lib = system.default_library(scheme, tau)?;
            let s = system.security(scheme, &link, Program::Slm(policy), Some(&lib))?;
            Ok(TauPoint {
                tau,
                bob_ber: s.bob.ber,
                eve_ber_mean: s.mean_ber(),
                eve_ber_strong: s.strong_mean_ber(strong),
            })
        })
        .collect()
}

impl TauPoint {
    pub fn rows(points: &[TauPoint], seed: u64) -> Vec<CurveRow> {
        points
            .iter()
            .flat_map(|p| {
                [
                    ("bob_ber", p.bob_ber),
                    ("eve_ber_mean", p.eve_ber_mean),
                    ("eve_ber_strong", p.eve_ber_strong),
                ]
                .map(|(m, v)| CurveRow {
                    parameter: "tau_s".into(),
                    x: p.tau,
                    metric: m.into(),
                    value: v,
                    seed: Some(seed),
                })
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RatioPoint {
    pub ratio: u32,
    pub bob_ber: f64,
    pub eve_ber_mean: f64,
    pub eve_evm_mean: f64,
}

/// Fixed-ratio sweep under SLM with one library.
pub fn ratio_sweep(
    system: &System,
    scheme: Modulation,
    link: &LinkConfig,
    library: &SequenceLibrary,
    ratios: &[u32],
) -> Result<Vec<RatioPoint>, CliError> {
    ratios
        .iter()
        .map(|&r| {
            let s = system.security(scheme, link, Program::Slm(RatioPolicy::Fixed(r)), Some(library))?;
            Ok(RatioPoint {
                ratio: r,
                bob_ber: s.bob.ber,
                eve_ber_mean: s.mean_ber(),
                eve_evm_mean: s.mean_evm(),
            })
        })
        .collect()
}

impl RatioPoint {
    pub fn rows(points: &[RatioPoint], seed: u64) -> Vec<CurveRow> {
        points
            .iter()
            .map(|p| CurveRow {
                parameter: "ratio".into(),
                x: p.ratio as f64,
                metric: "eve_ber_mean".into(),
                value: p.eve_ber_mean,
                seed: Some(seed),
            })
            .collect()
    }
}
