//! Single-cycle pulses described by their displacement vector.
//!
//! For `tau = t - t_start` inside the window `[0, T]`, `T = 4 pi / omega`:
//!
//! ```text
//! alpha(tau) = sign * [sin(4 w tau)/128 - sin(2 w tau)/32 + 3 w tau/32] * E0 / (4 w^2)
//! A(tau)     = d alpha / d tau = sign * E0 / (128 w) * (cos 4 w tau - 2 cos 2 w tau + 3)
//! ```
//!
//! `A` is zero outside the window and `alpha` is clamped to `alpha(T)` after
//! it, so a finished pulse leaves a net displacement
//! `alpha(T) = (3 pi / 8) U_p` with `U_p = E0 / (4 w^2)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Intensity (W/cm^2) of a field of one atomic unit.
pub const ATOMIC_UNIT_INTENSITY: f64 = 3.50945e16;

/// `alpha(T) / U_p` for the single-cycle window.
pub const DISPLACEMENT_FACTOR: f64 = 3.0 * PI / 8.0;

/// Below this `omega / dE` the pulse is advised to distort the wavepacket.
pub const DISTORTION_THRESHOLD: f64 = 5.0;

/// Direction of the displacement along z.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Positive,
    Negative,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Positive => 1.0,
            Direction::Negative => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleCyclePulse {
    pub e0: f64,
    pub omega: f64,
    pub t_start: f64,
    pub direction: Direction,
}

impl SingleCyclePulse {
    pub fn new(e0: f64, omega: f64, t_start: f64, direction: Direction) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "omega must be positive, got {omega}"
            )));
        }
        if !(e0.is_finite() && e0 >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "E0 must be non-negative, got {e0}"
            )));
        }
        if !t_start.is_finite() {
            return Err(Error::InvalidParameter("t_start must be finite".into()));
        }
        Ok(SingleCyclePulse {
            e0,
            omega,
            t_start,
            direction,
        })
    }

    /// Pulse from peak intensity in W/cm^2.
    pub fn from_intensity(
        intensity: f64,
        omega: f64,
        t_start: f64,
        direction: Direction,
    ) -> Result<Self> {
        Self::new(intensity_to_field(intensity)?, omega, t_start, direction)
    }

    /// Window length `4 pi / omega`.
    pub fn duration(&self) -> f64 {
        4.0 * PI / self.omega
    }

    pub fn t_end(&self) -> f64 {
        self.t_start + self.duration()
    }

    /// `E0 / (4 omega^2)`.
    pub fn ponderomotive(&self) -> f64 {
        self.e0 / (4.0 * self.omega * self.omega)
    }

    pub fn intensity(&self) -> f64 {
        field_to_intensity(self.e0)
    }

    pub fn with_start(mut self, t_start: f64) -> Self {
        self.t_start = t_start;
        self
    }

    /// `alpha(t)`: 0 before the window, `alpha(T)` after it.
    pub fn displacement(&self, t: f64) -> f64 {
        let tau = (t - self.t_start).clamp(0.0, self.duration());
        let wt = self.omega * tau;
        let shape = (4.0 * wt).sin() / 128.0 - (2.0 * wt).sin() / 32.0 + 3.0 * wt / 32.0;
        self.direction.sign() * shape * self.ponderomotive()
    }

    /// `A(t) = d alpha / dt`, zero outside the window.
    pub fn vector_potential(&self, t: f64) -> f64 {
        let tau = t - self.t_start;
        if !(0.0..=self.duration()).contains(&tau) {
            return 0.0;
        }
        let wt = self.omega * tau;
        self.direction.sign() * self.e0 / (128.0 * self.omega)
            * ((4.0 * wt).cos() - 2.0 * (2.0 * wt).cos() + 3.0)
    }

    /// `E(t) = -dA/dt`, zero outside the window.
    pub fn electric_field(&self, t: f64) -> f64 {
        let tau = t - self.t_start;
        if !(0.0..=self.duration()).contains(&tau) {
            return 0.0;
        }
        let wt = self.omega * tau;
        self.direction.sign() * self.e0 / 32.0 * ((4.0 * wt).sin() - (2.0 * wt).sin())
    }

    /// `alpha(T) = (3 pi / 8) U_p`, signed.
    pub fn final_displacement(&self) -> f64 {
        self.direction.sign() * DISPLACEMENT_FACTOR * self.ponderomotive()
    }

    /// `omega / dE` with the distortion advisory.
    pub fn distortion_ratio(&self, delta_e: f64) -> Result<DistortionAdvice> {
        distortion_ratio(self.omega, delta_e)
    }
}

/// Pulse whose completed window displaces by `alpha_target` at frequency
/// `omega`, starting at `t_start`.
pub fn design_for_displacement(
    alpha_target: f64,
    omega: f64,
    t_start: f64,
) -> Result<SingleCyclePulse> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "omega must be positive, got {omega}"
        )));
    }
    if !alpha_target.is_finite() || alpha_target == 0.0 {
        return Err(Error::InvalidParameter(
            "target displacement must be finite and non-zero".into(),
        ));
    }
    let e0 = alpha_target.abs() * 4.0 * omega * omega / DISPLACEMENT_FACTOR;
    let direction = if alpha_target > 0.0 {
        Direction::Positive
    } else {
        Direction::Negative
    };
    SingleCyclePulse::new(e0, omega, t_start, direction)
}

/// Peak field (a.u.) of an intensity in W/cm^2.
pub fn intensity_to_field(intensity: f64) -> Result<f64> {
    if !(intensity.is_finite() && intensity >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "intensity must be non-negative, got {intensity}"
        )));
    }
    Ok((intensity / ATOMIC_UNIT_INTENSITY).sqrt())
}

/// Intensity (W/cm^2) of a peak field in a.u.
pub fn field_to_intensity(e0: f64) -> f64 {
    e0 * e0 * ATOMIC_UNIT_INTENSITY
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistortionAdvice {
    pub ratio: f64,
    /// `ratio < DISTORTION_THRESHOLD`.
    pub distortion_prone: bool,
}

pub fn distortion_ratio(omega: f64, delta_e: f64) -> Result<DistortionAdvice> {
    if !(delta_e.is_finite() && delta_e > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "energy gap must be positive, got {delta_e}"
        )));
    }
    let ratio = omega / delta_e;
    Ok(DistortionAdvice {
        ratio,
        distortion_prone: ratio < DISTORTION_THRESHOLD,
    })
}

/// Ordered, non-overlapping pulses separated by field-free gaps.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PulseTrain {
    pulses: Vec<SingleCyclePulse>,
}

impl PulseTrain {
    pub fn new(mut pulses: Vec<SingleCyclePulse>) -> Result<Self> {
        pulses.sort_by(|a, b| a.t_start.total_cmp(&b.t_start));
        for pair in pulses.windows(2) {
            if pair[1].t_start < pair[0].t_end() {
                return Err(Error::InvalidParameter(format!(
                    "pulse windows overlap: [{}, {}] and [{}, {}]",
                    pair[0].t_start,
                    pair[0].t_end(),
                    pair[1].t_start,
                    pair[1].t_end()
                )));
            }
        }
        Ok(PulseTrain { pulses })
    }

    pub fn empty() -> Self {
        PulseTrain { pulses: Vec::new() }
    }

    pub fn single(pulse: SingleCyclePulse) -> Self {
        PulseTrain {
            pulses: vec![pulse],
        }
    }

    /// Back-to-back pulses with the given target displacements, all at
    /// `omega`, the first starting at `t_start`, separated by `gap`.
    pub fn from_displacements(targets: &[f64], omega: f64, t_start: f64, gap: f64) -> Result<Self> {
        if gap < 0.0 {
            return Err(Error::InvalidParameter("gap must be non-negative".into()));
        }
        let mut t = t_start;
        let mut pulses = Vec::with_capacity(targets.len());
        for &target in targets {
            let p = design_for_displacement(target, omega, t)?;
            t = p.t_end() + gap;
            pulses.push(p);
        }
        PulseTrain::new(pulses)
    }

    pub fn pulses(&self) -> &[SingleCyclePulse] {
        &self.pulses
    }

    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty()
    }

    pub fn vector_potential(&self, t: f64) -> f64 {
        self.pulses.iter().map(|p| p.vector_potential(t)).sum()
    }

    pub fn displacement(&self, t: f64) -> f64 {
        self.pulses.iter().map(|p| p.displacement(t)).sum()
    }

    pub fn electric_field(&self, t: f64) -> f64 {
        self.pulses.iter().map(|p| p.electric_field(t)).sum()
    }

    /// `int_{t0}^{t1} A dt`, exact.
    pub fn displacement_between(&self, t0: f64, t1: f64) -> f64 {
        self.pulses
            .iter()
            .map(|p| p.displacement(t1) - p.displacement(t0))
            .sum()
    }

    pub fn final_displacement(&self) -> f64 {
        self.pulses.iter().map(|p| p.final_displacement()).sum()
    }

    /// End of the last window (0 for an empty train).
    pub fn t_end(&self) -> f64 {
        self.pulses.last().map_or(0.0, |p| p.t_end())
    }

    pub fn max_omega(&self) -> Option<f64> {
        self.pulses.iter().map(|p| p.omega).reduce(f64::max)
    }

    /// Whether `t` lies inside any window.
    pub fn is_active(&self, t: f64) -> bool {
        self.pulses.iter().any(|p| t > p.t_start && t < p.t_end())
    }
}
