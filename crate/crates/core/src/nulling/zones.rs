use serde::{Deserialize, Serialize};

use super::{depth_from_magnitudes, feasibility_from_magnitudes, DepthReport, Feasibility, Zone};
use crate::error::{Error, Result};
use crate::field::{ChannelVector, PhaseMatrix, Scenario};
use crate::geometry::PolarPoint;
use crate::scalar::Real;

/// Sub-zone extents shared by all four zones.
///
/// Along its axis each zone is split into a nulling sub-zone `[0, null]`
/// around the centre, a high-gain band `offset +/- band`, a transition between
/// them and an outer sub-zone from the band edge out to twice the offset.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZoneLayout<T = f64> {
    /// Radial extent of the nulling sub-zone (m).
    pub null_radius: T,
    /// Angular extent of the nulling sub-zone (rad).
    pub null_halfwidth: T,
    /// Radial half-width of the high-gain band (m).
    pub band_radius: T,
    /// Angular half-width of the high-gain band (rad).
    pub band_halfwidth: T,
    /// Sample points per sub-zone.
    pub samples: usize,
}

impl<T: Real> ZoneLayout<T> {
    /// 0.05 m radially and 1 degree angularly for both the nulling extent and
    /// the band half-width, 9 samples each. One degree is about half the
    /// angular beamwidth of the paper-sized aperture at 1.6 m.
    pub fn standard() -> Self {
        let one_deg = T::lit(1.0f64.to_radians());
        Self {
            null_radius: T::lit(0.05),
            null_halfwidth: one_deg,
            band_radius: T::lit(0.05),
            band_halfwidth: one_deg,
            samples: 9,
        }
    }

    fn extents(&self, zone: Zone) -> (T, T) {
        if zone.is_radial() {
            (self.null_radius, self.band_radius)
        } else {
            (self.null_halfwidth, self.band_halfwidth)
        }
    }
}

impl Default for ZoneLayout<f64> {
    fn default() -> Self {
        Self::standard()
    }
}

/// Sample points of one zone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZoneSamples<T = f64> {
    pub nulling: Vec<PolarPoint<T>>,
    pub transition: Vec<PolarPoint<T>>,
    pub high_gain: Vec<PolarPoint<T>>,
    pub outer: Vec<PolarPoint<T>>,
}

/// Fixed sampling of the four zones around a null centre.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZoneModel<T = f64> {
    center: PolarPoint<T>,
    nominal: [T; 4],
    layout: ZoneLayout<T>,
    zones: [ZoneSamples<T>; 4],
}

impl<T: Real> ZoneModel<T> {
    /// Zones with high-gain bands centred at the nominal offsets
    /// (front, back, left, right; metres then radians).
    pub fn around(center: PolarPoint<T>, nominal: [T; 4], layout: &ZoneLayout<T>) -> Result<Self> {
        if layout.samples < 2 {
            return Err(Error::InvalidArgument("zone layout needs at least 2 samples".into()));
        }
        let n = layout.samples;
        let nf = T::from_usize_lossy(n);
        let build = |zone: Zone| -> Result<ZoneSamples<T>> {
            let o = nominal[zone.index()];
            let (null, band) = layout.extents(zone);
            if !(null > T::zero() && band > T::zero() && o.is_finite() && o - band >= null) {
                return Err(Error::InvalidArgument(format!(
                    "{} zone: offset {o} leaves no room for nulling extent {null} and band {band}",
                    zone.name()
                )));
            }
            let at = |s: T| zone.displaced(&center, s);
            let lin = |a: T, b: T| -> Result<Vec<PolarPoint<T>>> {
                (0..n)
                    .map(|i| at(a + (b - a) * T::from_usize_lossy(i) / (nf - T::one())))
                    .collect()
            };
            let gap = o - band - null;
            let transition = if gap > T::zero() {
                (0..n)
                    .map(|i| at(null + gap * T::from_usize_lossy(i + 1) / (nf + T::one())))
                    .collect::<Result<_>>()?
            } else {
                Vec::new()
            };
            let start = o + band;
            let span = o - band;
            let outer = (0..n)
                .map(|i| at(start + span * T::from_usize_lossy(i + 1) / nf))
                .collect::<Result<_>>()?;
            Ok(ZoneSamples {
                nulling: lin(T::zero(), null)?,
                transition,
                high_gain: lin(o - band, o + band)?,
                outer,
            })
        };
        let [a, b, c, d] = Zone::ALL.map(build);
        Ok(Self {
            center,
            nominal,
            layout: *layout,
            zones: [a?, b?, c?, d?],
        })
    }

    pub fn center(&self) -> &PolarPoint<T> {
        &self.center
    }

    /// Offsets the high-gain bands are centred on.
    pub fn nominal(&self) -> [T; 4] {
        self.nominal
    }

    pub fn layout(&self) -> &ZoneLayout<T> {
        &self.layout
    }

    /// Same layout re-centred on other offsets.
    pub fn with_offsets(&self, nominal: [T; 4]) -> Result<Self> {
        Self::around(self.center, nominal, &self.layout)
    }

    /// Smallest offsets this layout accepts (front, back, left, right).
    pub fn min_offsets(layout: &ZoneLayout<T>) -> [T; 4] {
        let r = layout.null_radius + layout.band_radius;
        let a = layout.null_halfwidth + layout.band_halfwidth;
        [r, r, a, a]
    }

    /// Eavesdropper sample points: every high-gain and outer sample.
    pub fn eve_points(&self) -> Vec<PolarPoint<T>> {
        self.zones
            .iter()
            .flat_map(|z| z.high_gain.iter().chain(&z.outer).copied())
            .collect()
    }

    /// Legitimate-receiver sample points: every nulling sample.
    /// The centre, shared by all four nulling segments, appears once.
    pub fn bob_points(&self) -> Vec<PolarPoint<T>> {
        let mut out: Vec<PolarPoint<T>> = Vec::new();
        for p in self.zones.iter().flat_map(|z| &z.nulling) {
            if !out.contains(p) {
                out.push(*p);
            }
        }
        out
    }

    pub fn zone(&self, zone: Zone) -> &ZoneSamples<T> {
        &self.zones[zone.index()]
    }

    pub fn zones(&self) -> &[ZoneSamples<T>; 4] {
        &self.zones
    }
}

/// Channel vectors of every zone sample, so that scoring a candidate matrix
/// is a handful of signed sums.
#[derive(Clone, Debug)]
pub struct ZoneEvaluator<T = f64> {
    dims: (usize, usize),
    nulling: [Vec<ChannelVector<T>>; 4],
    high: [Vec<ChannelVector<T>>; 4],
    outer: [Vec<ChannelVector<T>>; 4],
}

impl<T: Real> ZoneEvaluator<T> {
    pub fn new(scn: &Scenario<T>, zones: &ZoneModel<T>) -> Result<Self> {
        let vectors = |pick: fn(&ZoneSamples<T>) -> &Vec<PolarPoint<T>>| -> Result<[Vec<ChannelVector<T>>; 4]> {
            let [a, b, c, d] = zones.zones.each_ref().map(|z| {
                pick(z)
                    .iter()
                    .map(|p| ChannelVector::new(scn, &p.to_cartesian()))
                    .collect::<Result<Vec<_>>>()
            });
            Ok([a?, b?, c?, d?])
        };
        let cfg = scn.config();
        Ok(Self {
            dims: (cfg.rows(), cfg.cols()),
            nulling: vectors(|z| &z.nulling)?,
            high: vectors(|z| &z.high_gain)?,
            outer: vectors(|z| &z.outer)?,
        })
    }

    fn magnitudes(set: &[Vec<ChannelVector<T>>; 4], m: &PhaseMatrix) -> [Vec<T>; 4] {
        set.each_ref().map(|v| v.iter().map(|h| h.field(m).norm()).collect())
    }

    fn check(&self, m: &PhaseMatrix) -> Result<()> {
        if m.dims() != self.dims {
            return Err(Error::DimensionMismatch {
                expected: self.dims,
                actual: m.dims(),
            });
        }
        Ok(())
    }

    pub fn depth(&self, m: &PhaseMatrix) -> Result<DepthReport<T>> {
        self.check(m)?;
        depth_from_magnitudes(&Self::magnitudes(&self.nulling, m), &Self::magnitudes(&self.high, m))
    }

    pub fn feasibility(&self, m: &PhaseMatrix) -> Result<Feasibility<T>> {
        self.check(m)?;
        Ok(feasibility_from_magnitudes(
            &Self::magnitudes(&self.high, m),
            &Self::magnitudes(&self.outer, m),
        ))
    }

    pub fn evaluate(&self, m: &PhaseMatrix) -> Result<(DepthReport<T>, Feasibility<T>)> {
        self.check(m)?;
        let high = Self::magnitudes(&self.high, m);
        let depth = depth_from_magnitudes(&Self::magnitudes(&self.nulling, m), &high)?;
        let feas = feasibility_from_magnitudes(&high, &Self::magnitudes(&self.outer, m));
        Ok((depth, feas))
    }
}
