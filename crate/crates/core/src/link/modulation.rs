use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::temporal::evm0;

type C64 = Complex<f64>;

/// A transmitted or received symbol. Single-carrier schemes use only the
/// first component; BFSK puts one tone on each.
pub type Symbol = [C64; 2];

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Modulation {
    #[serde(rename = "BPSK")]
    Bpsk,
    #[serde(rename = "QPSK")]
    Qpsk,
    #[serde(rename = "8PSK")]
    Psk8,
    /// On-off keying.
    #[serde(rename = "2ASK")]
    Ask2,
    /// Unipolar 4-level amplitude keying.
    #[serde(rename = "4ASK")]
    Ask4,
    /// Orthogonal two-tone keying, noncoherent detection.
    #[serde(rename = "BFSK")]
    Bfsk,
    #[serde(rename = "16QAM")]
    Qam16,
}

fn inverse_gray(mut g: usize) -> usize {
    let mut i = g;
    while g > 1 {
        g >>= 1;
        i ^= g;
    }
    i
}

fn pam4(two_bits: usize) -> f64 {
    // Gray: 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3.
    (2 * inverse_gray(two_bits) as i32 - 3) as f64
}

impl Modulation {
    pub const ALL: [Modulation; 7] = [
        Modulation::Bpsk,
        Modulation::Qpsk,
        Modulation::Psk8,
        Modulation::Ask2,
        Modulation::Ask4,
        Modulation::Bfsk,
        Modulation::Qam16,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Modulation::Bpsk => "BPSK",
            Modulation::Qpsk => "QPSK",
            Modulation::Psk8 => "8PSK",
            Modulation::Ask2 => "2ASK",
            Modulation::Ask4 => "4ASK",
            Modulation::Bfsk => "BFSK",
            Modulation::Qam16 => "16QAM",
        }
    }

    pub fn bits_per_symbol(self) -> usize {
        match self {
            Modulation::Bpsk | Modulation::Ask2 | Modulation::Bfsk => 1,
            Modulation::Qpsk | Modulation::Ask4 => 2,
            Modulation::Psk8 => 3,
            Modulation::Qam16 => 4,
        }
    }

    pub fn order(self) -> usize {
        1 << self.bits_per_symbol()
    }

    /// Default demodulability threshold. Amplitude and frequency keying have
    /// no 802.11 figure and reuse the value of the PSK scheme of equal order.
    pub fn evm0(self) -> f64 {
        match self {
            Modulation::Bpsk | Modulation::Ask2 | Modulation::Bfsk => evm0::BPSK,
            Modulation::Qpsk | Modulation::Ask4 => evm0::QPSK,
            Modulation::Psk8 => evm0::PSK8,
            Modulation::Qam16 => evm0::QAM16,
        }
    }

    /// Constellation point of bit label `label` (first bit most significant).
    pub fn point(self, label: usize) -> Symbol {
        debug_assert!(label < self.order());
        let one = |c: C64| [c, ZERO];
        match self {
            Modulation::Bpsk => one(C64::new(if label == 0 { 1.0 } else { -1.0 }, 0.0)),
            Modulation::Qpsk => {
                let re = if label & 2 == 0 { 1.0 } else { -1.0 };
                let im = if label & 1 == 0 { 1.0 } else { -1.0 };
                one(C64::new(re, im) * FRAC_1_SQRT_2)
            }
            Modulation::Psk8 => one(C64::from_polar(1.0, 2.0 * PI * inverse_gray(label) as f64 / 8.0)),
            Modulation::Ask2 => one(C64::new(if label == 0 { 0.0 } else { 2f64.sqrt() }, 0.0)),
            Modulation::Ask4 => one(C64::new(inverse_gray(label) as f64 / 3.5f64.sqrt(), 0.0)),
            Modulation::Bfsk => {
                if label == 0 {
                    [C64::new(1.0, 0.0), ZERO]
                } else {
                    [ZERO, C64::new(1.0, 0.0)]
                }
            }
            Modulation::Qam16 => {
                let s = 10f64.sqrt();
                one(C64::new(pam4(label >> 2) / s, pam4(label & 3) / s))
            }
        }
    }

    /// All points, indexed by label.
    pub fn constellation(self) -> Vec<Symbol> {
        (0..self.order()).map(|l| self.point(l)).collect()
    }

    /// Carriers per symbol.
    pub fn tones(self) -> usize {
        if self == Modulation::Bfsk {
            2
        } else {
            1
        }
    }

    /// Whether detection ignores the channel phase (energy detection).
    pub fn is_noncoherent(self) -> bool {
        self == Modulation::Bfsk
    }

    /// Nearest label to an equalised sample.
    pub fn decide(self, y: &Symbol) -> usize {
        if self.is_noncoherent() {
            return usize::from(y[1].norm_sqr() > y[0].norm_sqr());
        }
        let mut best = (f64::INFINITY, 0);
        for l in 0..self.order() {
            let p = self.point(l);
            let d = (y[0] - p[0]).norm_sqr() + (y[1] - p[1]).norm_sqr();
            if d < best.0 {
                best = (d, l);
            }
        }
        best.1
    }

    /// Expected BER of guessing labels uniformly at random.
    pub fn random_guess_ber(self) -> f64 {
        random_guess_ber(self)
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Modulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase().replace(['-', '_'], "");
        Modulation::ALL
            .into_iter()
            .find(|m| m.name() == norm || (norm == "PSK8" && *m == Modulation::Psk8) || (norm == "QAM16" && *m == Modulation::Qam16))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown modulation {s:?}")))
    }
}

/// Labels from bits (0/1, most significant first within each symbol).
pub fn bits_to_labels(bits: &[u8], scheme: Modulation) -> Result<Vec<usize>> {
    let b = scheme.bits_per_symbol();
    if !bits.len().is_multiple_of(b) {
        return Err(Error::InvalidArgument(format!(
            "{} bits do not fill whole {scheme} symbols of {b} bits",
            bits.len()
        )));
    }
    bits.chunks(b)
        .map(|c| {
            c.iter().try_fold(0usize, |acc, &bit| match bit {
                0 | 1 => Ok(acc << 1 | bit as usize),
                _ => Err(Error::InvalidArgument(format!("bit value {bit}"))),
            })
        })
        .collect()
}

pub fn labels_to_bits(labels: &[usize], scheme: Modulation) -> Vec<u8> {
    let b = scheme.bits_per_symbol();
    labels
        .iter()
        .flat_map(|&l| (0..b).rev().map(move |i| ((l >> i) & 1) as u8))
        .collect()
}

/// Gray-mapped unit-average-power symbols.
pub fn modulate(bits: &[u8], scheme: Modulation) -> Result<Vec<Symbol>> {
    Ok(bits_to_labels(bits, scheme)?.into_iter().map(|l| scheme.point(l)).collect())
}

/// Mean bit distance between two uniformly drawn labels.
pub fn random_guess_ber(scheme: Modulation) -> f64 {
    let m = scheme.order();
    let total: u32 = (0..m)
        .flat_map(|a| (0..m).map(move |b| (a ^ b).count_ones()))
        .sum();
    total as f64 / (m * m * scheme.bits_per_symbol()) as f64
}

/// Fraction of differing bits.
pub fn ber(tx: &[u8], rx: &[u8]) -> Result<f64> {
    if tx.len() != rx.len() {
        return Err(Error::LengthMismatch {
            left: tx.len(),
            right: rx.len(),
        });
    }
    if tx.is_empty() {
        return Err(Error::InvalidArgument("BER of zero bits".into()));
    }
    let errors = tx.iter().zip(rx).filter(|(a, b)| a != b).count();
    Ok(errors as f64 / tx.len() as f64)
}

/// `max(0, log2(1 + snr_bob) - log2(1 + snr_eve))` in bit/s/Hz.
pub fn secrecy_capacity(snr_bob: f64, snr_eve: f64) -> Result<f64> {
    if !(snr_bob >= 0.0 && snr_eve >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "SNRs must be non-negative, got {snr_bob} and {snr_eve}"
        )));
    }
    Ok(((1.0 + snr_bob).log2() - (1.0 + snr_eve).log2()).max(0.0))
}
