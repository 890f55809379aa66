//! Time-parameterized LiDAR scan patterns.
//!
//! Three families:
//!
//! * `Rotating`: a spinning head with fixed channel elevations. Column `c` of
//!   a frame starting at `t` fires at `t + c·P/C` and points at azimuth
//!   `2π·(rpm/60)·(t + c·P/C)`.
//! * `NonRepetitive`: a dual Risley-prism rosette. Two wedges spinning at
//!   incommensurate rates `ω1`, `ω2` deflect the beam to
//!   `p(s) = ½(cos ω1 s + cos ω2 s, sin ω1 s + sin ω2 s)`, a point of the
//!   unit disk. A forward-looking sensor maps the disk linearly onto its
//!   field of view; a panoramic one (horizontal FOV of a full turn) maps the
//!   polar angle of `p` to azimuth and its radius to elevation. Successive
//!   frames trace different parts of the rosette, so coverage accumulates.
//! * `Grid`: a fixed azimuth × elevation lattice at cell centres, the same
//!   every frame. Stands in for flash/solid-state sensors and for tests.
//!
//! Directions are unit vectors in the sensor frame (+x forward, +z up).
//! Azimuth is measured from +x towards +y, elevation up from the x-y plane.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Vec3;

#[derive(Debug, Error, PartialEq)]
pub enum PatternError {
    #[error("invalid pattern spec: {0}")]
    InvalidSpec(String),
    #[error("unknown pattern preset {0:?}")]
    UnknownPreset(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PatternKind {
    Rotating {
        /// Channel elevations, radians.
        channel_elevations: Vec<f64>,
        rpm: f64,
    },
    NonRepetitive {
        /// Prism angular speeds, rad/s.
        prism_rates: [f64; 2],
        /// `[min, max]` azimuth, radians.
        fov_horizontal: [f64; 2],
        /// `[min, max]` elevation, radians.
        fov_vertical: [f64; 2],
    },
    Grid {
        azimuth: [f64; 2],
        elevation: [f64; 2],
        n_azimuth: usize,
        n_elevation: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub rays_per_frame: usize,
    /// Seconds.
    pub frame_period: f64,
    #[serde(flatten)]
    pub kind: PatternKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RayBundle {
    pub directions: Vec<Vec3>,
    /// Offsets from the frame start, seconds, nondecreasing.
    pub timestamps: Vec<f64>,
}

impl RayBundle {
    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }
}

pub const PRESET_NAMES: &[&str] = &[
    "mid360-like",
    "avia-like",
    "vlp32-like",
    "hdl64-like",
    "ouster64-like",
    "grid",
];

fn linspace_deg(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).to_radians())
        .collect()
}

impl PatternSpec {
    /// Named presets. Field-of-view numbers follow public datasheets; the
    /// scan trajectories are parametric stand-ins, not vendor tables.
    pub fn preset(name: &str) -> Result<Self, PatternError> {
        let rotating = |channels: Vec<f64>, columns: usize| PatternKind::Rotating {
            channel_elevations: channels,
            rpm: 600.0,
        }
        .with_rays(columns);
        let (rays, kind) = match name {
            "mid360-like" => (
                20_000,
                PatternKind::NonRepetitive {
                    prism_rates: [TAU * 200.0 * std::f64::consts::SQRT_2, -TAU * 61.0 * 5.0f64.sqrt()],
                    fov_horizontal: [-PI, PI],
                    fov_vertical: [(-7.0f64).to_radians(), 52.0f64.to_radians()],
                },
            ),
            "avia-like" => (
                24_000,
                PatternKind::NonRepetitive {
                    prism_rates: [TAU * 3.0f64.sqrt() * 97.0, -TAU * 7.0f64.sqrt() * 53.0],
                    fov_horizontal: [(-35.2f64).to_radians(), 35.2f64.to_radians()],
                    fov_vertical: [(-38.6f64).to_radians(), 38.6f64.to_radians()],
                },
            ),
            "vlp32-like" => rotating(linspace_deg(-25.0, 15.0, 32), 1024),
            "hdl64-like" => rotating(linspace_deg(-24.9, 2.0, 64), 1024),
            "ouster64-like" => rotating(linspace_deg(-22.5, 22.5, 64), 1024),
            "grid" => (
                64 * 16,
                PatternKind::Grid {
                    azimuth: [-PI, PI],
                    elevation: [(-30.0f64).to_radians(), 30.0f64.to_radians()],
                    n_azimuth: 64,
                    n_elevation: 16,
                },
            ),
            other => return Err(PatternError::UnknownPreset(other.to_owned())),
        };
        let spec = Self {
            name: Some(name.to_owned()),
            rays_per_frame: rays,
            frame_period: 0.1,
            kind,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Same pattern with a different ray budget. Rotating patterns keep their
    /// channels and change the column count; grids keep their aspect and need
    /// `n` to factor as `n_elevation × k`.
    pub fn with_rays_per_frame(mut self, n: usize) -> Result<Self, PatternError> {
        self.rays_per_frame = n;
        if let PatternKind::Grid {
            n_azimuth,
            n_elevation,
            ..
        } = &mut self.kind
        {
            if *n_elevation > 0 && n % *n_elevation == 0 {
                *n_azimuth = n / *n_elevation;
            }
        }
        self.validate()?;
        Ok(self)
    }

    /// A single grid of `n_azimuth × n_elevation` cell-centre rays.
    pub fn grid(azimuth: [f64; 2], elevation: [f64; 2], n_azimuth: usize, n_elevation: usize) -> Self {
        Self {
            name: None,
            rays_per_frame: n_azimuth * n_elevation,
            frame_period: 0.1,
            kind: PatternKind::Grid {
                azimuth,
                elevation,
                n_azimuth,
                n_elevation,
            },
        }
    }

    pub fn validate(&self) -> Result<(), PatternError> {
        let bad = |m: &str| Err(PatternError::InvalidSpec(m.to_owned()));
        let range_ok = |r: &[f64; 2]| r[0].is_finite() && r[1].is_finite() && r[0] < r[1];
        if self.rays_per_frame == 0 {
            return bad("rays_per_frame must be >= 1");
        }
        if !(self.frame_period.is_finite() && self.frame_period > 0.0) {
            return bad("frame_period must be positive");
        }
        match &self.kind {
            PatternKind::Rotating {
                channel_elevations,
                rpm,
            } => {
                if channel_elevations.is_empty() {
                    return bad("rotating pattern needs at least one channel");
                }
                if !channel_elevations.iter().all(|e| e.is_finite() && e.abs() <= PI / 2.0) {
                    return bad("channel elevations must lie in [-pi/2, pi/2]");
                }
                if !(rpm.is_finite() && *rpm > 0.0) {
                    return bad("rpm must be positive");
                }
                if self.rays_per_frame % channel_elevations.len() != 0 {
                    return bad("rays_per_frame must be a multiple of the channel count");
                }
            }
            PatternKind::NonRepetitive {
                prism_rates,
                fov_horizontal,
                fov_vertical,
            } => {
                if !prism_rates.iter().all(|w| w.is_finite() && *w != 0.0) || prism_rates[0] == prism_rates[1] {
                    return bad("prism rates must be finite, non-zero and distinct");
                }
                if !range_ok(fov_horizontal) || fov_horizontal[1] - fov_horizontal[0] > TAU + 1e-9 {
                    return bad("horizontal fov must satisfy min < max, width <= 2pi");
                }
                if !range_ok(fov_vertical) || fov_vertical[0] < -PI / 2.0 || fov_vertical[1] > PI / 2.0 {
                    return bad("vertical fov must satisfy -pi/2 <= min < max <= pi/2");
                }
            }
            PatternKind::Grid {
                azimuth,
                elevation,
                n_azimuth,
                n_elevation,
            } => {
                if !range_ok(azimuth) || !range_ok(elevation) {
                    return bad("grid extents must satisfy min < max");
                }
                if n_azimuth * n_elevation != self.rays_per_frame {
                    return bad("grid needs rays_per_frame = n_azimuth * n_elevation");
                }
            }
        }
        Ok(())
    }

    /// `([az_min, az_max], [el_min, el_max])` in radians.
    pub fn fov(&self) -> ([f64; 2], [f64; 2]) {
        match &self.kind {
            PatternKind::Rotating {
                channel_elevations, ..
            } => {
                let lo = channel_elevations.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = channel_elevations.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                ([-PI, PI], [lo, hi])
            }
            PatternKind::NonRepetitive {
                fov_horizontal,
                fov_vertical,
                ..
            } => (*fov_horizontal, *fov_vertical),
            PatternKind::Grid {
                azimuth, elevation, ..
            } => (*azimuth, *elevation),
        }
    }

    /// Ratio of the two prism speeds, for non-repetitive patterns.
    pub fn prism_rate_ratio(&self) -> Option<f64> {
        match &self.kind {
            PatternKind::NonRepetitive { prism_rates, .. } => Some(prism_rates[1] / prism_rates[0]),
            _ => None,
        }
    }

    /// The bundle of rays fired in the frame starting at time `t` (seconds).
    pub fn generate(&self, t: f64) -> Result<RayBundle, PatternError> {
        self.validate()?;
        if !(t.is_finite() && t >= 0.0) {
            return Err(PatternError::InvalidSpec("time must be finite and >= 0".into()));
        }
        let n = self.rays_per_frame;
        let period = self.frame_period;
        let mut directions = Vec::with_capacity(n);
        let mut timestamps = Vec::with_capacity(n);
        match &self.kind {
            PatternKind::Rotating {
                channel_elevations,
                rpm,
            } => {
                let columns = n / channel_elevations.len();
                let rev_per_s = rpm / 60.0;
                let base = (rev_per_s * t).rem_euclid(1.0);
                for c in 0..columns {
                    let dt = c as f64 * period / columns as f64;
                    let az = TAU * snap_turns(base + rev_per_s * dt);
                    for &el in channel_elevations {
                        directions.push(spherical_dir(az, el));
                        timestamps.push(dt);
                    }
                }
            }
            PatternKind::NonRepetitive {
                prism_rates: [w1, w2],
                fov_horizontal: h,
                fov_vertical: v,
            } => {
                let panoramic = h[1] - h[0] >= TAU - 1e-9;
                for i in 0..n {
                    let dt = i as f64 * period / n as f64;
                    let s = t + dt;
                    let (a1, a2) = (w1 * s, w2 * s);
                    let u = 0.5 * (a1.cos() + a2.cos());
                    let w = 0.5 * (a1.sin() + a2.sin());
                    let (az, el) = if panoramic {
                        let r = u.hypot(w).min(1.0);
                        let ang = w.atan2(u);
                        (h[0] + (ang + PI) / TAU * (h[1] - h[0]), v[0] + r * (v[1] - v[0]))
                    } else {
                        (
                            0.5 * (h[0] + h[1]) + u * 0.5 * (h[1] - h[0]),
                            0.5 * (v[0] + v[1]) + w * 0.5 * (v[1] - v[0]),
                        )
                    };
                    directions.push(spherical_dir(az, el));
                    timestamps.push(dt);
                }
            }
            PatternKind::Grid {
                azimuth,
                elevation,
                n_azimuth,
                n_elevation,
            } => {
                let mut i = 0;
                for ia in 0..*n_azimuth {
                    let az = azimuth[0] + (ia as f64 + 0.5) * (azimuth[1] - azimuth[0]) / *n_azimuth as f64;
                    for ie in 0..*n_elevation {
                        let el =
                            elevation[0] + (ie as f64 + 0.5) * (elevation[1] - elevation[0]) / *n_elevation as f64;
                        directions.push(spherical_dir(az, el));
                        timestamps.push(i as f64 * period / n as f64);
                        i += 1;
                    }
                }
            }
        }
        Ok(RayBundle {
            directions,
            timestamps,
        })
    }
}

impl PatternKind {
    fn with_rays(self, columns: usize) -> (usize, PatternKind) {
        let channels = match &self {
            PatternKind::Rotating {
                channel_elevations, ..
            } => channel_elevations.len(),
            _ => 1,
        };
        (channels * columns, self)
    }
}

/// Wraps a revolution count into `[0, 1)` and rounds it onto a 2^-40 grid, so
/// frames whole revolutions apart produce bit-identical azimuths.
fn snap_turns(turns: f64) -> f64 {
    const GRID: f64 = (1u64 << 40) as f64;
    let t = ((turns.rem_euclid(1.0)) * GRID).round() / GRID;
    if t >= 1.0 {
        0.0
    } else {
        t
    }
}

#[inline]
pub fn spherical_dir(azimuth: f64, elevation: f64) -> Vec3 {
    let (sa, ca) = azimuth.sin_cos();
    let (se, ce) = elevation.sin_cos();
    Vec3::new(ce * ca, ce * sa, se)
}

/// `(azimuth in (-π, π], elevation in [-π/2, π/2])` of a direction.
#[inline]
pub fn direction_angles(d: &Vec3) -> (f64, f64) {
    let n = d.norm();
    (d.y.atan2(d.x), (d.z / n).clamp(-1.0, 1.0).asin())
}

/// Fraction of `bin_deg × bin_deg` angular cells of the pattern's FOV hit by
/// at least one ray across `frames` consecutive frames starting at `t = 0`.
pub fn coverage_fraction(spec: &PatternSpec, frames: usize, bin_deg: f64) -> Result<f64, PatternError> {
    if frames == 0 || !(bin_deg.is_finite() && bin_deg > 0.0) {
        return Err(PatternError::InvalidSpec("need frames >= 1 and bin_deg > 0".into()));
    }
    let ([h0, h1], [v0, v1]) = spec.fov();
    let bin = bin_deg.to_radians();
    let cells = |lo: f64, hi: f64| (((hi - lo) / bin) - 1e-9).ceil().max(1.0) as usize;
    let (nh, nv) = (cells(h0, h1), cells(v0, v1));
    let mut touched = vec![false; nh * nv];
    for k in 0..frames {
        let bundle = spec.generate(k as f64 * spec.frame_period)?;
        for d in &bundle.directions {
            let (az, el) = direction_angles(d);
            let ih = (((az - h0) / bin).floor().max(0.0) as usize).min(nh - 1);
            let iv = (((el - v0) / bin).floor().max(0.0) as usize).min(nv - 1);
            touched[iv * nh + ih] = true;
        }
    }
    Ok(touched.iter().filter(|&&b| b).count() as f64 / touched.len() as f64)
}
