//! 2-bit phase quantization and the single-bounce ray-optics field sum.
//!
//! The normalized field at a point `p` is
//! `E(p) = sum_mn G_mn / (rf_mn * rr_mn) * exp(-j k (rf_mn + rr_mn))`
//! where `rf` is the feed-to-element distance and `rr` the element-to-point
//! distance. Element amplitudes are fixed at one; only the four 2-bit phase
//! states are available.

use std::fmt;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{ArrayConfig, CartesianPoint, PolarPoint};
use crate::scalar::Real;

/// Complex field value at one point.
pub type FieldSample<T = f64> = Complex<T>;

/// One of the four reflection states of a 2-bit element.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum PhaseState {
    /// Reflection `1`.
    Deg0 = 0,
    /// Reflection `j`.
    Deg90 = 1,
    /// Reflection `-1`.
    Deg180 = 2,
    /// Reflection `-j`.
    Deg270 = 3,
}

impl PhaseState {
    pub const ALL: [PhaseState; 4] = [Self::Deg0, Self::Deg90, Self::Deg180, Self::Deg270];

    pub fn from_quarter_turns(q: u8) -> Self {
        Self::ALL[(q & 3) as usize]
    }

    pub fn quarter_turns(self) -> u8 {
        self as u8
    }

    pub fn radians<T: Real>(self) -> T {
        T::FRAC_PI_2() * T::lit(self as u8 as f64)
    }

    pub fn reflection<T: Real>(self) -> Complex<T> {
        self.apply(Complex::new(T::one(), T::zero()))
    }

    /// Multiplies `c` by this state's reflection value without a complex product.
    #[inline]
    pub fn apply<T: Real>(self, c: Complex<T>) -> Complex<T> {
        match self {
            Self::Deg0 => c,
            Self::Deg90 => Complex::new(-c.im, c.re),
            Self::Deg180 => Complex::new(-c.re, -c.im),
            Self::Deg270 => Complex::new(c.im, -c.re),
        }
    }

    /// Product of two states (phase addition modulo 2 pi).
    pub fn compose(self, other: Self) -> Self {
        Self::from_quarter_turns(self as u8 + other as u8)
    }

    /// Text code used by the sequence library: `1`, `J`, `M`, `K`.
    pub fn code(self) -> char {
        match self {
            Self::Deg0 => '1',
            Self::Deg90 => 'J',
            Self::Deg180 => 'M',
            Self::Deg270 => 'K',
        }
    }

    pub fn from_code(c: char) -> Option<Self> {
        match c {
            '1' => Some(Self::Deg0),
            'J' => Some(Self::Deg90),
            'M' => Some(Self::Deg180),
            'K' => Some(Self::Deg270),
            _ => None,
        }
    }
}

impl fmt::Display for PhaseState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Deg0 => "1",
            Self::Deg90 => "j",
            Self::Deg180 => "-1",
            Self::Deg270 => "-j",
        };
        f.write_str(s)
    }
}

/// Quantizes an ideal compensation phase to the nearest 2-bit state.
///
/// Bins are half-open with inclusive lower edge: `[-pi/4, pi/4) -> 1`,
/// `[pi/4, 3pi/4) -> j`, `[3pi/4, 5pi/4) -> -1`, otherwise `-j`, after
/// wrapping the input into `[-pi/4, 7pi/4)`. Phases within a few ulps of a
/// bin edge are snapped onto the edge so that `x + 2 pi k` lands in the same
/// bin as `x`.
pub fn quantize_2bit<T: Real>(phase: T) -> Result<PhaseState> {
    if !phase.is_finite() {
        return Err(Error::NonFinitePhase(phase.as_f64()));
    }
    let tau = T::TAU();
    let shifted = phase + T::FRAC_PI_4();
    let mut w = shifted - tau * (shifted / tau).floor();

    let half = T::FRAC_PI_2();
    let edges = [T::zero(), half, T::PI(), T::PI() + half, tau];
    let tol = T::lit(64.0) * T::epsilon() * phase.abs().max(T::one());
    for &e in &edges {
        if (w - e).abs() <= tol {
            w = e;
        }
    }
    if w >= tau {
        w = T::zero();
    }

    let q = if w < half {
        0
    } else if w < T::PI() {
        1
    } else if w < T::PI() + half {
        2
    } else {
        3
    };
    Ok(PhaseState::from_quarter_turns(q))
}

/// Quantizes the argument of a non-zero complex value.
pub fn quantize_complex<T: Real>(c: Complex<T>) -> Result<PhaseState> {
    if c.re == T::zero() && c.im == T::zero() {
        return Err(Error::ZeroQuantization);
    }
    quantize_2bit(c.im.atan2(c.re))
}

/// Quantized phase state of every element for one time slot.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PhaseMatrix {
    rows: usize,
    cols: usize,
    states: Vec<PhaseState>,
}

impl PhaseMatrix {
    pub fn uniform(rows: usize, cols: usize, state: PhaseState) -> Self {
        Self {
            rows,
            cols,
            states: vec![state; rows * cols],
        }
    }

    /// Row-major states.
    pub fn from_states(rows: usize, cols: usize, states: Vec<PhaseState>) -> Result<Self> {
        if states.len() != rows * cols {
            return Err(Error::LengthMismatch {
                left: rows * cols,
                right: states.len(),
            });
        }
        Ok(Self { rows, cols, states })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> PhaseState) -> Self {
        let states = (0..rows)
            .flat_map(|r| (0..cols).map(move |c| (r, c)))
            .map(|(r, c)| f(r, c))
            .collect();
        Self { rows, cols, states }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn states(&self) -> &[PhaseState] {
        &self.states
    }

    /// Zero-based access.
    pub fn get(&self, row: usize, col: usize) -> PhaseState {
        self.states[row * self.cols + col]
    }

    /// Applies a common global phase factor to every element.
    pub fn rotated(&self, by: PhaseState) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            states: self.states.iter().map(|s| s.compose(by)).collect(),
        }
    }

    pub fn reflections<T: Real>(&self) -> Vec<Complex<T>> {
        self.states.iter().map(|s| s.reflection()).collect()
    }

    /// SHA-256 of the dimensions and state codes, hex encoded.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.rows as u64).to_le_bytes());
        h.update((self.cols as u64).to_le_bytes());
        h.update(self.states.iter().map(|s| *s as u8).collect::<Vec<_>>());
        hex_digest(&h.finalize())
    }

    /// One line per row, one code character per element.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.states.len() + self.rows);
        for row in self.states.chunks(self.cols) {
            out.extend(row.iter().map(|s| s.code()));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut states = Vec::new();
        let mut rows = 0;
        let mut cols = None;
        for (i, line) in text.lines().filter(|l| !l.trim().is_empty()).enumerate() {
            let row: Vec<_> = line
                .trim()
                .chars()
                .map(|c| {
                    PhaseState::from_code(c).ok_or_else(|| Error::LibraryParse {
                        line: i + 1,
                        msg: format!("bad state code {c:?}"),
                    })
                })
                .collect::<Result<_>>()?;
            match cols {
                None => cols = Some(row.len()),
                Some(c) if c != row.len() => {
                    return Err(Error::LibraryParse {
                        line: i + 1,
                        msg: "ragged matrix".into(),
                    })
                }
                _ => {}
            }
            states.extend(row);
            rows += 1;
        }
        Self::from_states(rows, cols.unwrap_or(0), states)
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Array plus feed position (Alice).
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario<T = f64> {
    cfg: ArrayConfig<T>,
    feed: CartesianPoint<T>,
    feed_paths: Vec<T>,
}

impl<T: Real> Scenario<T> {
    pub fn new(cfg: ArrayConfig<T>, feed: CartesianPoint<T>) -> Result<Self> {
        if !feed.is_finite() || feed.z == T::zero() {
            return Err(Error::InvalidPoint("feed must be finite and off the array plane".into()));
        }
        let feed_paths = cfg.element_positions().map(|p| p.distance(&feed)).collect();
        Ok(Self { cfg, feed, feed_paths })
    }

    pub fn config(&self) -> &ArrayConfig<T> {
        &self.cfg
    }

    pub fn feed(&self) -> &CartesianPoint<T> {
        &self.feed
    }

    /// Feed-to-element distances, row-major.
    pub fn feed_paths(&self) -> &[T] {
        &self.feed_paths
    }

    /// Feed-to-centre distance.
    pub fn feed_center_path(&self) -> T {
        self.feed.norm()
    }

    pub(crate) fn check_dims(&self, m: &PhaseMatrix) -> Result<()> {
        let expected = (self.cfg.rows(), self.cfg.cols());
        if m.dims() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: m.dims(),
            });
        }
        Ok(())
    }

    /// Canonical text used for hashing.
    pub fn canonical(&self) -> String {
        format!(
            "{}x{} dx={} dy={} f={} feed=({},{},{})",
            self.cfg.rows(),
            self.cfg.cols(),
            self.cfg.dx(),
            self.cfg.dy(),
            self.cfg.frequency(),
            self.feed.x,
            self.feed.y,
            self.feed.z
        )
    }
}

/// Per-element propagation factors towards one fixed target.
///
/// `E = sum_e G_e * h_e`; precomputing `h` turns every subsequent field
/// evaluation for that target into a signed, swapped accumulation.
#[derive(Clone, Debug)]
pub struct ChannelVector<T = f64> {
    h: Vec<Complex<T>>,
}

impl<T: Real> ChannelVector<T> {
    pub fn new(scn: &Scenario<T>, target: &CartesianPoint<T>) -> Result<Self> {
        let cfg = scn.config();
        let k = cfg.wavenumber();
        let cols = cfg.cols();
        let h = cfg
            .element_positions()
            .zip(scn.feed_paths())
            .enumerate()
            .map(|(idx, (p, &rf))| {
                let rr = p.distance(target);
                if rr <= T::zero() {
                    return Err(Error::CoincidentElement {
                        m: idx / cols + 1,
                        n: idx % cols + 1,
                    });
                }
                let amp = (rf * rr).recip();
                let (s, c) = (-(k * (rf + rr))).sin_cos();
                Ok(Complex::new(amp * c, amp * s))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { h })
    }

    pub fn coefficients(&self) -> &[Complex<T>] {
        &self.h
    }

    /// Field under a quantized matrix. Dimensions must already match.
    #[inline]
    pub fn field(&self, matrix: &PhaseMatrix) -> Complex<T> {
        let mut acc = Complex::new(T::zero(), T::zero());
        for (s, h) in matrix.states().iter().zip(&self.h) {
            acc += s.apply(*h);
        }
        acc
    }

    /// Field under arbitrary complex reflection coefficients.
    pub fn field_complex(&self, coeffs: &[Complex<T>]) -> Complex<T> {
        coeffs.iter().zip(&self.h).map(|(g, h)| g * h).sum()
    }

    /// Upper bound on `|E|` over all unit-amplitude configurations.
    pub fn coherent_gain(&self) -> T {
        self.h.iter().map(|h| h.norm()).sum()
    }
}

/// Field of `refl` at `target`.
pub fn compute_field<T: Real>(
    scn: &Scenario<T>,
    refl: &PhaseMatrix,
    target: &CartesianPoint<T>,
) -> Result<FieldSample<T>> {
    scn.check_dims(refl)?;
    Ok(ChannelVector::new(scn, target)?.field(refl))
}

/// [`compute_field`] over a list of polar points; evaluated in parallel,
/// returned in input order.
pub fn compute_field_grid<T: Real>(
    scn: &Scenario<T>,
    refl: &PhaseMatrix,
    grid: &[PolarPoint<T>],
) -> Result<Vec<FieldSample<T>>> {
    scn.check_dims(refl)?;
    grid.par_iter()
        .map(|p| ChannelVector::new(scn, &p.to_cartesian()).map(|h| h.field(refl)))
        .collect()
}
