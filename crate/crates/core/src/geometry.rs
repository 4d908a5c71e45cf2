//! Array geometry, coordinate frames and the near/far-field boundary.
//!
//! Frame convention: the array lies in the `xoy` plane centred on the origin
//! with boresight along `+z`. Columns run along `x` (the long side of the
//! 14 x 56 array), rows along `y`. Polar points use
//! `x = r sin(theta) cos(phi)`, `y = r sin(phi)`, `z = r cos(theta) cos(phi)`,
//! so `phi = 0` is the horizontal `xoz` plane and `theta` is the azimuth
//! measured from boresight towards `+x`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Geometry and carrier of a rectangular RIS.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArrayConfig<T = f64> {
    rows: usize,
    cols: usize,
    dx: T,
    dy: T,
    frequency: T,
}

impl<T: Real> ArrayConfig<T> {
    /// `rows` x `cols` elements with pitch `dx` (along x) and `dy` (along y).
    pub fn new(rows: usize, cols: usize, dx: T, dy: T, frequency: T) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArray(format!(
                "array must have at least one element, got {rows}x{cols}"
            )));
        }
        let positive = |v: T| v.is_finite() && v > T::zero();
        if !positive(dx) || !positive(dy) {
            return Err(Error::InvalidArray(format!(
                "element pitch must be positive, got dx={dx} dy={dy}"
            )));
        }
        if !positive(frequency) {
            return Err(Error::InvalidArray(format!(
                "frequency must be positive, got {frequency}"
            )));
        }
        Ok(Self {
            rows,
            cols,
            dx,
            dy,
            frequency,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dx(&self) -> T {
        self.dx
    }

    pub fn dy(&self) -> T {
        self.dy
    }

    pub fn frequency(&self) -> T {
        self.frequency
    }

    pub fn element_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn wavelength(&self) -> T {
        T::lit(SPEED_OF_LIGHT) / self.frequency
    }

    /// Free-space wavenumber `2 pi / lambda`.
    pub fn wavenumber(&self) -> T {
        T::TAU() / self.wavelength()
    }

    pub fn aperture_width(&self) -> T {
        T::from_usize_lossy(self.cols) * self.dx
    }

    pub fn aperture_height(&self) -> T {
        T::from_usize_lossy(self.rows) * self.dy
    }

    pub fn aperture_diagonal(&self) -> T {
        self.aperture_width().hypot(self.aperture_height())
    }

    /// Centre of element `(m, n)`, with `m` in `1..=rows` and `n` in `1..=cols`.
    pub fn element_position(&self, m: usize, n: usize) -> Result<CartesianPoint<T>> {
        if m == 0 || n == 0 || m > self.rows || n > self.cols {
            return Err(Error::IndexOutOfRange {
                m,
                n,
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok(self.position_unchecked(m - 1, n - 1))
    }

    /// Zero-based variant used by the hot loops.
    #[inline]
    pub(crate) fn position_unchecked(&self, row: usize, col: usize) -> CartesianPoint<T> {
        let half = T::lit(0.5);
        let x = (T::from_usize_lossy(col) - T::from_usize_lossy(self.cols - 1) * half) * self.dx;
        let y = (T::from_usize_lossy(row) - T::from_usize_lossy(self.rows - 1) * half) * self.dy;
        CartesianPoint::new(x, y, T::zero())
    }

    /// All element centres in row-major order.
    pub fn element_positions(&self) -> impl Iterator<Item = CartesianPoint<T>> + '_ {
        (0..self.rows).flat_map(move |r| (0..self.cols).map(move |c| self.position_unchecked(r, c)))
    }

    /// Near/far-field boundary `2 L^2 / lambda`, `L` being the aperture diagonal.
    pub fn fraunhofer_distance(&self) -> T {
        let l = self.aperture_diagonal();
        T::lit(2.0) * l * l / self.wavelength()
    }

    pub fn cast<U: Real>(&self) -> ArrayConfig<U> {
        ArrayConfig {
            rows: self.rows,
            cols: self.cols,
            dx: U::lit(self.dx.as_f64()),
            dy: U::lit(self.dy.as_f64()),
            frequency: U::lit(self.frequency.as_f64()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct CartesianPoint<T = f64> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> CartesianPoint<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn origin() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    #[inline]
    pub fn distance(&self, other: &Self) -> T {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    pub fn norm(&self) -> T {
        self.distance(&Self::origin())
    }
}

/// Spherical point around the array centre; angles in radians.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarPoint<T = f64> {
    r: T,
    theta: T,
    phi: T,
}

impl<T: Real> PolarPoint<T> {
    pub fn new(r: T, theta: T, phi: T) -> Result<Self> {
        if !(r.is_finite() && r > T::zero()) {
            return Err(Error::InvalidPoint(format!("radius must be positive, got {r}")));
        }
        if !theta.is_finite() || !phi.is_finite() {
            return Err(Error::InvalidPoint("non-finite angle".into()));
        }
        Ok(Self { r, theta, phi })
    }

    /// Point in the horizontal `xoz` plane, azimuth in degrees.
    pub fn horizontal_deg(r: T, theta_deg: T) -> Result<Self> {
        Self::new(r, theta_deg.to_radians(), T::zero())
    }

    pub fn r(&self) -> T {
        self.r
    }

    pub fn theta(&self) -> T {
        self.theta
    }

    pub fn phi(&self) -> T {
        self.phi
    }

    pub fn theta_deg(&self) -> T {
        self.theta.to_degrees()
    }

    pub fn to_cartesian(&self) -> CartesianPoint<T> {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        CartesianPoint::new(self.r * st * cp, self.r * sp, self.r * ct * cp)
    }
}

/// See [`ArrayConfig::element_position`].
pub fn element_position<T: Real>(cfg: &ArrayConfig<T>, m: usize, n: usize) -> Result<CartesianPoint<T>> {
    cfg.element_position(m, n)
}

pub fn polar_to_cartesian<T: Real>(p: &PolarPoint<T>) -> CartesianPoint<T> {
    p.to_cartesian()
}

pub fn path_length<T: Real>(a: &CartesianPoint<T>, b: &CartesianPoint<T>) -> T {
    a.distance(b)
}

pub fn fraunhofer_distance<T: Real>(cfg: &ArrayConfig<T>) -> T {
    cfg.fraunhofer_distance()
}
