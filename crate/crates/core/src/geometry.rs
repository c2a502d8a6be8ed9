//! Planar bistatic geometry.
//!
//! Angles in a node's local frame are measured counter-clockwise from the
//! array boresight. The local x axis points along boresight and the array
//! elements lie on the local y axis.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::SPEED_OF_LIGHT;

/// A point or a vector in the global plane, in meters (or m/s for velocities).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

pub type Vec2 = Point2;

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn from_polar(range: f64, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Point2::new(range * c, range * s)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    pub fn bearing(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn rotate(self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Point2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

impl From<[f64; 2]> for Point2 {
    fn from(v: [f64; 2]) -> Self {
        Point2::new(v[0], v[1])
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, rhs: f64) -> Point2 {
        Point2::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

pub fn baseline(tx: Point2, rx: Point2) -> f64 {
    tx.distance(rx)
}

/// Tx-to-point plus point-to-Rx path length.
pub fn bistatic_range(tx: Point2, rx: Point2, point: Point2) -> f64 {
    point.distance(tx) + point.distance(rx)
}

/// Bistatic Doppler shift in Hz. Positive when the total path is shrinking.
pub fn bistatic_doppler(
    tx: Point2,
    rx: Point2,
    point: Point2,
    velocity: Vec2,
    carrier_hz: f64,
) -> Result<f64> {
    let to_tx = point - tx;
    let to_rx = point - rx;
    let (dt, dr) = (to_tx.norm(), to_rx.norm());
    if dt == 0.0 || dr == 0.0 {
        return Err(Error::Geometry(
            "Doppler undefined for a scatterer coincident with a node".into(),
        ));
    }
    let range_rate = velocity.dot(to_tx * (1.0 / dt)) + velocity.dot(to_rx * (1.0 / dr));
    Ok(-carrier_hz / SPEED_OF_LIGHT * range_rate)
}

/// Converts a bistatic range into the target-to-Rx distance.
///
/// `baseline_angle` is the angle at the receiver between the ray towards the
/// target and the ray towards the transmitter.
pub fn bistatic_to_rx_range(r_bis: f64, baseline_angle: f64, baseline: f64) -> Result<f64> {
    if baseline == 0.0 {
        return Ok(0.5 * r_bis);
    }
    let excess = r_bis - baseline;
    if excess <= 0.0 {
        return Err(Error::Geometry(format!(
            "bistatic range {r_bis} m does not exceed the baseline {baseline} m"
        )));
    }
    // R - L cos(beta), written to avoid cancellation near the baseline
    let half = 0.5 * baseline_angle;
    let denom = 2.0 * (excess + 2.0 * baseline * half.sin() * half.sin());
    if !(denom > 0.0) {
        return Err(Error::Geometry(format!(
            "non-positive denominator {denom} in range conversion"
        )));
    }
    Ok(excess * (r_bis + baseline) / denom)
}

/// Position and orientation of a node's array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalFrame {
    pub origin: Point2,
    pub boresight: f64,
}

impl LocalFrame {
    pub fn new(origin: Point2, boresight: f64) -> Self {
        LocalFrame { origin, boresight }
    }

    pub fn to_global(&self, range: f64, angle: f64) -> Point2 {
        local_to_global(self.origin, self.boresight, range, angle)
    }

    pub fn to_local(&self, point: Point2) -> (f64, f64) {
        global_to_local(self.origin, self.boresight, point)
    }

    /// Local angle of a global point, in (-pi, pi].
    pub fn angle_of(&self, point: Point2) -> f64 {
        self.to_local(point).1
    }
}

pub fn local_to_global(origin: Point2, boresight: f64, range: f64, angle: f64) -> Point2 {
    origin + Point2::from_polar(range, angle).rotate(boresight)
}

/// Returns `(range, angle)` of `point` in the frame at `origin` facing `boresight`.
pub fn global_to_local(origin: Point2, boresight: f64, point: Point2) -> (f64, f64) {
    let d = (point - origin).rotate(-boresight);
    (d.norm(), d.bearing())
}

/// One transmitter/receiver pairing with its range gate.
#[derive(Debug, Clone, PartialEq)]
pub struct BistaticPair {
    pub tx_index: usize,
    pub rx_index: usize,
    pub tx_frame: LocalFrame,
    pub rx_frame: LocalFrame,
    pub baseline_m: f64,
    pub max_bistatic_range_m: f64,
    pub min_bistatic_range_m: f64,
    pub range_resolution_m: f64,
    /// First gated periodogram bin (inclusive).
    pub first_bin: usize,
    /// End of the gate (exclusive).
    pub last_bin: usize,
    /// Direction of the Tx in the Rx local frame.
    pub tx_bearing_at_rx: f64,
}

impl BistaticPair {
    /// Builds the pair and its range gate.
    ///
    /// `range_resolution_m` is `c / (K_p * delta_f)`. The maximum bistatic
    /// range sits one bin inside the guard-time limit `c * T_g + L`.
    pub fn new(
        tx_index: usize,
        rx_index: usize,
        tx_frame: LocalFrame,
        rx_frame: LocalFrame,
        guard_time_s: f64,
        range_resolution_m: f64,
    ) -> Result<Self> {
        let baseline_m = baseline(tx_frame.origin, rx_frame.origin);
        let max_bistatic_range_m = SPEED_OF_LIGHT * guard_time_s + baseline_m - range_resolution_m;
        let first_bin = (baseline_m / range_resolution_m).ceil() as usize;
        let last_bin = (max_bistatic_range_m / range_resolution_m).floor() as usize;
        if first_bin >= last_bin {
            return Err(Error::Geometry(format!(
                "empty range gate for pair ({tx_index}, {rx_index}): bins {first_bin}..{last_bin}"
            )));
        }
        let tx_bearing_at_rx = if baseline_m > 0.0 {
            rx_frame.angle_of(tx_frame.origin)
        } else {
            0.0
        };
        Ok(BistaticPair {
            tx_index,
            rx_index,
            tx_frame,
            rx_frame,
            baseline_m,
            max_bistatic_range_m,
            min_bistatic_range_m: baseline_m + range_resolution_m,
            range_resolution_m,
            first_bin,
            last_bin,
            tx_bearing_at_rx,
        })
    }

    pub fn gated_bins(&self) -> usize {
        self.last_bin - self.first_bin
    }

    pub fn bin_range(&self, bin: usize) -> f64 {
        bin as f64 * self.range_resolution_m
    }

    /// Angle between the Rx->target ray at local angle `scan_angle` and the Rx->Tx ray.
    pub fn baseline_angle(&self, scan_angle: f64) -> f64 {
        wrap_angle(scan_angle - self.tx_bearing_at_rx).abs()
    }

    pub fn rx_range(&self, r_bis: f64, scan_angle: f64) -> Result<f64> {
        bistatic_to_rx_range(r_bis, self.baseline_angle(scan_angle), self.baseline_m)
    }

    /// Global position for a bistatic range observed along a local scan angle.
    pub fn locate(&self, r_bis: f64, scan_angle: f64) -> Result<Point2> {
        let rr = self.rx_range(r_bis, scan_angle)?;
        Ok(self.rx_frame.to_global(rr, scan_angle))
    }

    /// Forward geometry: `(bistatic range, Rx local angle)` of a global point.
    pub fn observe(&self, point: Point2) -> (f64, f64) {
        (
            bistatic_range(self.tx_frame.origin, self.rx_frame.origin, point),
            self.rx_frame.angle_of(point),
        )
    }
}
