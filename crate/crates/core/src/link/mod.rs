//! Symbol-level link simulation through the time-varying surface.

mod modulation;
mod receiver;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ChannelVector, PhaseMatrix, Scenario};
use crate::geometry::CartesianPoint;
use crate::temporal::{SlotSelector, SlotStream};

pub use modulation::{
    ber, bits_to_labels, labels_to_bits, modulate, random_guess_ber, secrecy_capacity, Modulation,
    Symbol,
};
pub use receiver::{demodulate, demodulate_fixed, Demodulated};

type C64 = Complex<f64>;

const PS_PER_S: f64 = 1e12;

/// Number of equalised samples kept in a [`LinkResult`].
pub const CONSTELLATION_SAMPLES: usize = 512;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinkConfig {
    /// Symbols per second.
    pub symbol_rate: f64,
    /// Surface slot width τ (s).
    pub slot_width: f64,
    /// SNR at the reference point (dB).
    pub snr_db: f64,
    /// Symbols in the channel estimate.
    pub tracking_window: usize,
    /// Payload bits per run, rounded up to whole symbols.
    pub data_bits: usize,
    pub seed: u64,
    /// Known symbols opening each frame.
    pub preamble: usize,
    /// Symbols per frame including the preamble; 0 means a single frame.
    pub frame: usize,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            symbol_rate: 125e3,
            slot_width: 2e-6,
            snr_db: 30.0,
            tracking_window: 50,
            data_bits: 1_000_000,
            seed: 0,
            preamble: 50,
            frame: 0,
        }
    }
}

impl LinkConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.symbol_rate > 0.0 && self.symbol_rate.is_finite()) {
            return bad(format!("symbol rate {}", self.symbol_rate));
        }
        if !(self.slot_width > 0.0 && self.slot_width.is_finite()) {
            return bad(format!("slot width {}", self.slot_width));
        }
        if !self.snr_db.is_finite() {
            return bad(format!("SNR {} dB", self.snr_db));
        }
        if self.tracking_window == 0 {
            return bad("tracking window must be at least one symbol".into());
        }
        if self.preamble == 0 {
            return bad("preamble must be at least one symbol".into());
        }
        if self.frame != 0 && self.frame <= self.preamble {
            return bad(format!("frame of {} symbols leaves no room after a {}-symbol preamble", self.frame, self.preamble));
        }
        if self.data_bits == 0 {
            return bad("no payload bits".into());
        }
        self.symbol_ticks()?;
        self.slot_ticks()?;
        Ok(())
    }

    pub fn symbol_duration(&self) -> f64 {
        1.0 / self.symbol_rate
    }

    fn ticks(seconds: f64, what: &str) -> Result<u64> {
        let t = (seconds * PS_PER_S).round();
        if t < 1.0 || t > u64::MAX as f64 / 4.0 {
            return Err(Error::InvalidArgument(format!("{what} {seconds} s is not representable in picoseconds")));
        }
        Ok(t as u64)
    }

    fn symbol_ticks(&self) -> Result<u64> {
        Self::ticks(self.symbol_duration(), "symbol duration")
    }

    fn slot_ticks(&self) -> Result<u64> {
        Self::ticks(self.slot_width, "slot width")
    }

    /// Whether symbol `k` is a known preamble symbol.
    pub fn is_pilot(&self, k: usize) -> bool {
        let pos = if self.frame == 0 { k } else { k % self.frame };
        pos < self.preamble
    }

    /// Total symbols (preambles included) needed to carry `payload` data symbols.
    pub fn total_symbols(&self, payload: usize) -> usize {
        if self.frame == 0 || payload == 0 {
            return self.preamble + payload;
        }
        let per = self.frame - self.preamble;
        let frames = payload.div_ceil(per);
        let last = payload - (frames - 1) * per;
        (frames - 1) * self.frame + self.preamble + last
    }

    /// Noise power giving `snr_db` at a point of field magnitude `reference`.
    pub fn noise_power(&self, reference: f64) -> f64 {
        reference * reference / 10f64.powf(self.snr_db / 10.0)
    }
}

/// Per-symbol channel as a mix of the two configurations: the received gain
/// is `focus * E_focus + null * E_null` at any point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymbolMix {
    pub focus: f64,
    pub null: C64,
}

impl SymbolMix {
    pub fn gain(&self, f: PointFields) -> C64 {
        f.focus * self.focus + f.null * self.null
    }
}

/// Fields at one point under the focus and null configurations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointFields {
    pub focus: C64,
    pub null: C64,
}

impl PointFields {
    pub fn new(scn: &Scenario, focus: &PhaseMatrix, null: &PhaseMatrix, target: &CartesianPoint) -> Result<Self> {
        let h = ChannelVector::new(scn, target)?;
        Ok(Self {
            focus: h.field(focus),
            null: h.field(null),
        })
    }
}

/// Time-weighted slot mixes for `n` consecutive symbols.
pub fn symbol_mixes(stream: &mut SlotStream, n: usize, cfg: &LinkConfig) -> Result<Vec<SymbolMix>> {
    cfg.validate()?;
    let tol = 1e-9 * cfg.slot_width;
    if (stream.slot_width() - cfg.slot_width).abs() > tol {
        return Err(Error::InvalidArgument(format!(
            "stream slot width {} s differs from configured {} s",
            stream.slot_width(),
            cfg.slot_width
        )));
    }
    let sym = cfg.symbol_ticks()?;
    let slot = cfg.slot_ticks()?;
    let mut out = Vec::with_capacity(n);
    let mut current = stream.next_slot();
    let mut left = slot;
    for _ in 0..n {
        let mut need = sym;
        let mut mix = SymbolMix {
            focus: 0.0,
            null: C64::new(0.0, 0.0),
        };
        while need > 0 {
            let take = need.min(left);
            let w = if take == sym { 1.0 } else { take as f64 / sym as f64 };
            match current {
                SlotSelector::Focus => mix.focus += w,
                SlotSelector::Null(s) => mix.null += s.reflection::<f64>() * w,
            }
            need -= take;
            left -= take;
            if left == 0 {
                current = stream.next_slot();
                left = slot;
            }
        }
        out.push(mix);
    }
    Ok(out)
}

fn complex_noise<R: Rng + ?Sized>(n0: f64, rng: &mut R) -> C64 {
    let d = Normal::new(0.0, (n0 / 2.0).sqrt()).expect("finite non-negative noise");
    C64::new(d.sample(rng), d.sample(rng))
}

/// Received samples at a point: each symbol times its mixed gain, plus
/// complex Gaussian noise of power `n0` on each of the first `tones` tones.
pub fn simulate_rx_mixed<R: Rng + ?Sized>(
    fields: PointFields,
    mixes: &[SymbolMix],
    symbols: &[Symbol],
    tones: usize,
    n0: f64,
    rng: &mut R,
) -> Result<Vec<Symbol>> {
    if mixes.len() != symbols.len() {
        return Err(Error::LengthMismatch {
            left: mixes.len(),
            right: symbols.len(),
        });
    }
    if !(n0 >= 0.0 && n0.is_finite()) {
        return Err(Error::InvalidArgument(format!("noise power {n0}")));
    }
    if !(1..=2).contains(&tones) {
        return Err(Error::InvalidArgument(format!("{tones} tones")));
    }
    Ok(mixes
        .iter()
        .zip(symbols)
        .map(|(m, s)| {
            let g = m.gain(fields);
            let mut y = [s[0] * g, s[1] * g];
            if n0 > 0.0 {
                for v in y.iter_mut().take(tones) {
                    *v += complex_noise(n0, rng);
                }
            }
            y
        })
        .collect())
}

/// Received samples at `target`, with noise calibrated so that a point of
/// field magnitude `reference` sees `cfg.snr_db`. `None` disables noise.
#[allow(clippy::too_many_arguments)]
pub fn simulate_rx(
    scn: &Scenario,
    stream: &mut SlotStream,
    focus: &PhaseMatrix,
    null: &PhaseMatrix,
    target: &CartesianPoint,
    symbols: &[Symbol],
    scheme: Modulation,
    cfg: &LinkConfig,
    reference: Option<f64>,
) -> Result<Vec<Symbol>> {
    let fields = PointFields::new(scn, focus, null, target)?;
    let mixes = symbol_mixes(stream, symbols.len(), cfg)?;
    let n0 = reference.map_or(0.0, |r| cfg.noise_power(r));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    simulate_rx_mixed(fields, &mixes, symbols, scheme.tones(), n0, &mut rng)
}

/// EVM of equalised samples against the transmitted points.
pub fn measured_evm(equalized: &[Symbol], sent: &[Symbol]) -> Result<f64> {
    if equalized.len() != sent.len() {
        return Err(Error::LengthMismatch {
            left: equalized.len(),
            right: sent.len(),
        });
    }
    let (mut err, mut pow) = (0.0, 0.0);
    for (y, s) in equalized.iter().zip(sent) {
        err += (y[0] - s[0]).norm_sqr() + (y[1] - s[1]).norm_sqr();
        pow += s[0].norm_sqr() + s[1].norm_sqr();
    }
    if pow == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok((err / pow).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkResult {
    pub ber: f64,
    pub bit_errors: usize,
    pub bits: usize,
    /// Payload EVM against the transmitted points.
    pub evm_measured: f64,
    /// Leading equalised payload samples (first tone).
    pub rx_constellation: Vec<C64>,
    /// Secrecy capacity of the configured SNR over this point's EVM-implied SNR.
    pub secrecy_bits: f64,
    /// Some symbols were demapped without equalisation.
    pub fallback: bool,
}

/// A transmission shared by every receiver location: payload, preambles and
/// the per-symbol surface mix.
#[derive(Clone, Debug)]
pub struct Transmission {
    scheme: Modulation,
    cfg: LinkConfig,
    labels: Vec<usize>,
    symbols: Vec<Symbol>,
    mixes: Vec<SymbolMix>,
    payload_bits: Vec<u8>,
}

impl Transmission {
    pub fn new(scheme: Modulation, cfg: &LinkConfig, stream: &mut SlotStream) -> Result<Self> {
        cfg.validate()?;
        let bps = scheme.bits_per_symbol();
        let payload = cfg.data_bits.div_ceil(bps);
        let total = cfg.total_symbols(payload);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let labels: Vec<usize> = (0..total).map(|_| rng.random_range(0..scheme.order())).collect();
        let symbols = labels.iter().map(|&l| scheme.point(l)).collect();
        let data: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(k, _)| !cfg.is_pilot(*k))
            .map(|(_, &l)| l)
            .collect();
        debug_assert_eq!(data.len(), payload);
        let payload_bits = labels_to_bits(&data, scheme);
        let mixes = symbol_mixes(stream, total, cfg)?;
        Ok(Self {
            scheme,
            cfg: cfg.clone(),
            labels,
            symbols,
            mixes,
            payload_bits,
        })
    }

    pub fn scheme(&self) -> Modulation {
        self.scheme
    }

    pub fn config(&self) -> &LinkConfig {
        &self.cfg
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn mixes(&self) -> &[SymbolMix] {
        &self.mixes
    }

    pub fn payload_bits(&self) -> &[u8] {
        &self.payload_bits
    }

    /// Receive at one point. `n0` is the noise power there and `stream`
    /// selects an independent noise sequence.
    pub fn receive(&self, fields: PointFields, n0: f64, stream: u64) -> Result<LinkResult> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(stream.wrapping_add(1));
        let rx = simulate_rx_mixed(fields, &self.mixes, &self.symbols, self.scheme.tones(), n0, &mut rng)?;
        let d = demodulate(&rx, self.scheme, &self.cfg, &self.labels)?;
        let data: Vec<usize> = (0..rx.len()).filter(|&k| !self.cfg.is_pilot(k)).collect();
        let rx_labels: Vec<usize> = data.iter().map(|&k| d.labels[k]).collect();
        let rx_bits = labels_to_bits(&rx_labels, self.scheme);
        let bit_errors = rx_bits.iter().zip(&self.payload_bits).filter(|(a, b)| a != b).count();
        let eq: Vec<Symbol> = data.iter().map(|&k| d.equalized[k]).collect();
        let sent: Vec<Symbol> = data.iter().map(|&k| self.symbols[k]).collect();
        let evm_measured = measured_evm(&eq, &sent)?;
        let snr_eve = if evm_measured > 0.0 { evm_measured.powi(-2) } else { f64::INFINITY };
        let snr_bob = 10f64.powf(self.cfg.snr_db / 10.0);
        let secrecy_bits = if snr_eve.is_finite() { secrecy_capacity(snr_bob, snr_eve)? } else { 0.0 };
        Ok(LinkResult {
            ber: bit_errors as f64 / rx_bits.len() as f64,
            bit_errors,
            bits: rx_bits.len(),
            evm_measured,
            rx_constellation: eq.iter().take(CONSTELLATION_SAMPLES).map(|s| s[0]).collect(),
            secrecy_bits,
            fallback: d.fallback,
        })
    }
}

#[cfg(test)]
mod tests;
