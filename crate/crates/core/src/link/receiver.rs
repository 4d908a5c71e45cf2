use std::collections::VecDeque;

use num_complex::Complex;

use super::{LinkConfig, Modulation, Symbol};
use crate::error::{Error, Result};

type C64 = Complex<f64>;

#[derive(Clone, Debug, PartialEq)]
pub struct Demodulated {
    /// Decided label per received symbol, preambles included.
    pub labels: Vec<usize>,
    /// Equalised samples.
    pub equalized: Vec<Symbol>,
    /// Set when some symbol had no usable channel estimate.
    pub fallback: bool,
}

fn inner(y: &Symbol, d: &Symbol) -> C64 {
    y[0] * d[0].conj() + y[1] * d[1].conj()
}

fn energy(d: &Symbol) -> f64 {
    d[0].norm_sqr() + d[1].norm_sqr()
}

/// Least-squares channel estimate over a sliding window of (sample, decision)
/// pairs.
struct Tracker {
    window: usize,
    pairs: VecDeque<(C64, f64)>,
    num: C64,
    den: f64,
    pushes: usize,
}

impl Tracker {
    fn new(window: usize) -> Self {
        Self {
            window,
            pairs: VecDeque::with_capacity(window + 1),
            num: C64::new(0.0, 0.0),
            den: 0.0,
            pushes: 0,
        }
    }

    fn clear(&mut self) {
        self.pairs.clear();
        self.num = C64::new(0.0, 0.0);
        self.den = 0.0;
    }

    fn push(&mut self, y: &Symbol, d: &Symbol) {
        let p = (inner(y, d), energy(d));
        self.pairs.push_back(p);
        self.num += p.0;
        self.den += p.1;
        if self.pairs.len() > self.window {
            let (n, e) = self.pairs.pop_front().expect("non-empty");
            self.num -= n;
            self.den -= e;
        }
        self.pushes += 1;
        // Drop accumulated cancellation error.
        if self.pushes.is_multiple_of(self.window) {
            self.num = self.pairs.iter().map(|p| p.0).sum();
            self.den = self.pairs.iter().map(|p| p.1).sum();
        }
    }

    fn estimate(&self) -> Option<C64> {
        let h = self.num / self.den;
        (self.den > 0.0 && h.norm() > 0.0 && h.is_finite()).then_some(h)
    }
}

/// Decision-directed demodulation with preamble-aided initialisation.
///
/// `reference` holds the transmitted labels; only entries at preamble
/// positions are read. Each frame's preamble restarts the estimate.
pub fn demodulate(
    received: &[Symbol],
    scheme: Modulation,
    cfg: &LinkConfig,
    reference: &[usize],
) -> Result<Demodulated> {
    cfg.validate()?;
    if received.is_empty() {
        return Err(Error::InvalidArgument("nothing to demodulate".into()));
    }
    if reference.len() != received.len() {
        return Err(Error::LengthMismatch {
            left: received.len(),
            right: reference.len(),
        });
    }
    let mut tracker = Tracker::new(cfg.tracking_window);
    let mut labels = Vec::with_capacity(received.len());
    let mut equalized = Vec::with_capacity(received.len());
    let mut fallback = false;
    for (k, y) in received.iter().enumerate() {
        if cfg.frame != 0 && k % cfg.frame == 0 {
            tracker.clear();
        }
        let h = tracker.estimate();
        let eq = match h {
            Some(h) => [y[0] / h, y[1] / h],
            None => {
                fallback |= !cfg.is_pilot(k);
                *y
            }
        };
        let label = if cfg.is_pilot(k) {
            let l = reference[k];
            if l >= scheme.order() {
                return Err(Error::InvalidArgument(format!("label {l} outside {scheme}")));
            }
            l
        } else if scheme.is_noncoherent() {
            scheme.decide(y)
        } else {
            scheme.decide(&eq)
        };
        tracker.push(y, &scheme.point(label));
        labels.push(label);
        equalized.push(eq);
    }
    Ok(Demodulated {
        labels,
        equalized,
        fallback,
    })
}

/// Demodulation with a fixed, known channel and no tracking.
pub fn demodulate_fixed(received: &[Symbol], scheme: Modulation, h: C64) -> Result<Demodulated> {
    if received.is_empty() {
        return Err(Error::InvalidArgument("nothing to demodulate".into()));
    }
    let usable = h.norm() > 0.0 && h.is_finite();
    let equalized: Vec<Symbol> = received
        .iter()
        .map(|y| if usable { [y[0] / h, y[1] / h] } else { *y })
        .collect();
    let labels = received
        .iter()
        .zip(&equalized)
        .map(|(y, e)| scheme.decide(if scheme.is_noncoherent() { y } else { e }))
        .collect();
    Ok(Demodulated {
        labels,
        equalized,
        fallback: !usable,
    })
}
