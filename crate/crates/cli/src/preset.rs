//! Scenario presets and their TOML form.

use serde::{Deserialize, Serialize};
use slm_core::link::{LinkConfig, Modulation};
use slm_core::nulling::{GaConfig, SnmBounds, SnmConfig, ZoneMode};
use slm_core::temporal::RatioPolicy;
use slm_core::{ArrayConfig, CartesianPoint, PolarPoint, ZoneLayout};

use crate::grid::SweepGrid;
use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArraySection {
    pub rows: usize,
    pub cols: usize,
    pub dx_m: f64,
    pub dy_m: f64,
    pub frequency_hz: f64,
}

impl Default for ArraySection {
    fn default() -> Self {
        Self {
            rows: 14,
            cols: 56,
            dx_m: 0.0278,
            dy_m: 0.0278,
            frequency_hz: 5.8e9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneSection {
    pub feed_r_m: f64,
    pub feed_theta_deg: f64,
    pub bob_r_m: f64,
    pub bob_theta_deg: f64,
}

impl Default for SceneSection {
    fn default() -> Self {
        Self {
            feed_r_m: 0.8,
            feed_theta_deg: 0.0,
            bob_r_m: 1.6,
            bob_theta_deg: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ZoneSection {
    /// Nominal focal offsets: front, back (m), left, right (deg).
    pub front_m: f64,
    pub back_m: f64,
    pub left_deg: f64,
    pub right_deg: f64,
    pub null_radius_m: f64,
    pub null_halfwidth_deg: f64,
    pub band_radius_m: f64,
    pub band_halfwidth_deg: f64,
    pub samples: usize,
    pub mode: ZoneMode,
}

impl Default for ZoneSection {
    fn default() -> Self {
        Self {
            front_m: 0.3,
            back_m: 0.3,
            left_deg: 6.0,
            right_deg: 6.0,
            null_radius_m: 0.05,
            null_halfwidth_deg: 1.0,
            band_radius_m: 0.05,
            band_halfwidth_deg: 1.0,
            samples: 9,
            mode: ZoneMode::Focal,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SnmSection {
    pub seed: u64,
    pub generations: usize,
    pub population: usize,
    pub tournament: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub mutation_sigma: f64,
    pub elitism: usize,
    pub stagnation: usize,
    pub penalty: f64,
    pub range_min_m: f64,
    pub range_max_m: f64,
    pub angle_min_deg: f64,
    pub angle_max_deg: f64,
}

impl Default for SnmSection {
    fn default() -> Self {
        let ga = GaConfig::default();
        Self {
            seed: 42,
            generations: ga.generations,
            population: ga.population,
            tournament: ga.tournament,
            crossover_rate: ga.crossover_rate,
            mutation_rate: ga.mutation_rate,
            mutation_sigma: ga.mutation_sigma,
            elitism: ga.elitism,
            stagnation: ga.stagnation,
            penalty: 10.0,
            range_min_m: 0.05,
            range_max_m: 0.6,
            angle_min_deg: 2.0,
            angle_max_deg: 25.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TemporalSection {
    pub modulation: Modulation,
    /// Demodulability threshold; the modulation's default when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evm0: Option<f64>,
    pub library_count: usize,
    pub library_length: usize,
    pub library_seed: u64,
    /// Focus-to-null slot ratio; 0 draws each segment's ratio from its bounds.
    pub ratio: u32,
}

impl Default for TemporalSection {
    fn default() -> Self {
        Self {
            modulation: Modulation::Psk8,
            evm0: None,
            library_count: 32,
            library_length: 64,
            library_seed: 7,
            ratio: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkSection {
    pub symbol_rate_hz: f64,
    pub slot_width_s: f64,
    pub snr_db: f64,
    pub tracking_window: usize,
    pub data_bits: usize,
    pub preamble: usize,
    pub frame: usize,
    /// Eavesdropper noise floor relative to Bob's (dB).
    pub eve_noise_db: f64,
    /// Eve points whose focus field is at least this far from Bob's (dB)
    /// count as strong.
    pub strong_eve_db: f64,
}

impl Default for LinkSection {
    fn default() -> Self {
        Self {
            symbol_rate_hz: 125e3,
            slot_width_s: 2e-6,
            snr_db: 30.0,
            tracking_window: 50,
            data_bits: 1_000_000,
            preamble: 20,
            frame: 200,
            eve_noise_db: 0.0,
            strong_eve_db: -14.0,
        }
    }
}

/// Everything an experiment needs. The default is the `paper` preset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Preset {
    pub name: String,
    pub array: ArraySection,
    pub scene: SceneSection,
    pub zones: ZoneSection,
    pub snm: SnmSection,
    pub temporal: TemporalSection,
    pub link: LinkSection,
    pub sweep: SweepGrid,
}

impl Default for Preset {
    fn default() -> Self {
        Self {
            name: "paper".into(),
            array: ArraySection::default(),
            scene: SceneSection::default(),
            zones: ZoneSection::default(),
            snm: SnmSection::default(),
            temporal: TemporalSection::default(),
            link: LinkSection::default(),
            sweep: SweepGrid::default(),
        }
    }
}

pub const PRESET_NAMES: [&str; 1] = ["paper"];

impl Preset {
    pub fn paper() -> Self {
        Self::default()
    }

    pub fn named(name: &str) -> Result<Self, CliError> {
        match name {
            "paper" => Ok(Self::paper()),
            _ => Err(CliError::Config(format!(
                "unknown preset {name:?}; available: {}",
                PRESET_NAMES.join(", ")
            ))),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("presets are plain data")
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let p: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.array_config()?;
        self.feed()?;
        self.bob()?;
        if self.zones.samples == 0 {
            return Err(CliError::Config("zone samples must be positive".into()));
        }
        self.snm_config().ga.validate().map_err(CliError::from)?;
        self.link_config(0).validate().map_err(CliError::from)?;
        self.sweep.validate()?;
        if self.temporal.library_count == 0 || self.temporal.library_length == 0 {
            return Err(CliError::Config("library count and length must be positive".into()));
        }
        if let Some(e) = self.temporal.evm0 {
            if !(e > 0.0 && e.is_finite()) {
                return Err(CliError::Config(format!("evm0 {e}")));
            }
        }
        if !self.link.eve_noise_db.is_finite() || !self.link.strong_eve_db.is_finite() {
            return Err(CliError::Config("noise offsets must be finite".into()));
        }
        Ok(())
    }

    pub fn array_config(&self) -> Result<ArrayConfig, CliError> {
        let a = &self.array;
        Ok(ArrayConfig::new(a.rows, a.cols, a.dx_m, a.dy_m, a.frequency_hz)?)
    }

    pub fn feed(&self) -> Result<CartesianPoint, CliError> {
        Ok(PolarPoint::horizontal_deg(self.scene.feed_r_m, self.scene.feed_theta_deg)?.to_cartesian())
    }

    pub fn bob(&self) -> Result<PolarPoint, CliError> {
        Ok(PolarPoint::horizontal_deg(self.scene.bob_r_m, self.scene.bob_theta_deg)?)
    }

    /// Nominal offsets in solver units (m, m, rad, rad).
    pub fn nominal_offsets(&self) -> [f64; 4] {
        let z = &self.zones;
        [z.front_m, z.back_m, z.left_deg.to_radians(), z.right_deg.to_radians()]
    }

    pub fn layout(&self) -> ZoneLayout {
        let z = &self.zones;
        ZoneLayout {
            null_radius: z.null_radius_m,
            null_halfwidth: z.null_halfwidth_deg.to_radians(),
            band_radius: z.band_radius_m,
            band_halfwidth: z.band_halfwidth_deg.to_radians(),
            samples: z.samples,
        }
    }

    pub fn snm_config(&self) -> SnmConfig {
        let s = &self.snm;
        SnmConfig {
            ga: GaConfig {
                population: s.population,
                tournament: s.tournament,
                crossover_rate: s.crossover_rate,
                mutation_rate: s.mutation_rate,
                mutation_sigma: s.mutation_sigma,
                elitism: s.elitism,
                generations: s.generations,
                stagnation: s.stagnation,
            },
            bounds: SnmBounds {
                range: (s.range_min_m, s.range_max_m),
                angle: (s.angle_min_deg.to_radians(), s.angle_max_deg.to_radians()),
            },
            penalty: s.penalty,
            zone_mode: self.zones.mode,
            initial: Vec::new(),
        }
    }

    pub fn evm0(&self) -> f64 {
        self.temporal.evm0.unwrap_or_else(|| self.temporal.modulation.evm0())
    }

    pub fn ratio_policy(&self) -> RatioPolicy {
        match self.temporal.ratio {
            0 => RatioPolicy::Bounds,
            r => RatioPolicy::Fixed(r),
        }
    }

    pub fn link_config(&self, seed: u64) -> LinkConfig {
        let l = &self.link;
        LinkConfig {
            symbol_rate: l.symbol_rate_hz,
            slot_width: l.slot_width_s,
            snr_db: l.snr_db,
            tracking_window: l.tracking_window,
            data_bits: l.data_bits,
            seed,
            preamble: l.preamble,
            frame: l.frame,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_round_trips() {
        let p = Preset::paper();
        let text = p.to_toml();
        assert_eq!(Preset::from_toml(&text).unwrap(), p);
        assert_eq!(Preset::from_toml(&text).unwrap().to_toml(), text);
    }

    #[test]
    fn partial_config_overlays_paper() {
        let p = Preset::from_toml("[link]\nsnr_db = 20.0\n[temporal]\nmodulation = \"QPSK\"\n").unwrap();
        assert_eq!(p.link.snr_db, 20.0);
        assert_eq!(p.temporal.modulation, Modulation::Qpsk);
        assert_eq!(p.array, Preset::paper().array);
        assert_eq!(p.evm0(), Modulation::Qpsk.evm0());
    }

    #[test]
    fn bad_configs_rejected() {
        assert!(Preset::from_toml("[link]\nbogus = 1\n").is_err());
        assert!(Preset::from_toml("[array]\nrows = 0\n").is_err());
        assert!(Preset::from_toml("[link]\nslot_width_s = -1.0\n").is_err());
        assert!(Preset::from_toml("[temporal]\nmodulation = \"9PSK\"\n").is_err());
        assert!(Preset::named("lab").is_err());
    }

    #[test]
    fn paper_values() {
        let p = Preset::paper();
        let a = p.array_config().unwrap();
        assert_eq!((a.rows(), a.cols()), (14, 56));
        assert!((p.bob().unwrap().r() - 1.6).abs() < 1e-15);
        assert_eq!(p.ratio_policy(), RatioPolicy::Fixed(3));
        assert_eq!(p.link_config(1).symbol_duration(), 8e-6);
        assert_eq!(p.evm0(), 0.251);
    }
}
