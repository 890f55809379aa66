//! Sector-based avoidance velocity and reward terms.
//!
//! All functions are pure. Weighted terms are summed in a fixed order so a
//! breakdown is reproducible to the last bit.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Vec3;
use crate::perception::partition;
use crate::sensor::ScanFrame;

#[derive(Debug, Error, PartialEq)]
pub enum RewardError {
    #[error("r_rays needs at least one ray")]
    EmptyRays,
    #[error("length mismatch: {what} has {actual} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("invalid risk config: {0}")]
    InvalidConfig(&'static str),
}

/// Where sector 0 sits relative to the base +x axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SectorOrigin {
    /// Sector `j` spans `[j·w, (j+1)·w)`.
    #[default]
    Edge,
    /// Sector `j` spans `[(j-½)·w, (j+½)·w)`, so sector 0 is centred on +x.
    Center,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RiskConfig {
    pub n_sec: usize,
    pub d_thresh: f64,
    pub alpha_avoid: f64,
    pub beta_va: f64,
    /// Sector sentinel and `r_rays` cap, metres.
    pub d_max: f64,
    /// Distal rays sampled for `r_rays` by [`evaluate_frame`].
    pub n_rays: usize,
    /// Magnitude cap on the summed avoidance velocity; `None` disables it.
    pub v_avoid_max: Option<f64>,
    /// Base-frame height band of points considered obstacles.
    pub z_band: [f64; 2],
    pub sector_origin: SectorOrigin,
}

impl Default for RiskConfig {
    fn default() -> Self {
        Self {
            n_sec: 36,
            d_thresh: 1.0,
            alpha_avoid: 3.0,
            beta_va: 4.0,
            d_max: 10.0,
            n_rays: 64,
            v_avoid_max: Some(1.5),
            z_band: [-0.2, 1.0],
            sector_origin: SectorOrigin::Edge,
        }
    }
}

impl RiskConfig {
    pub fn validate(&self) -> Result<(), RewardError> {
        if self.n_sec == 0 {
            return Err(RewardError::InvalidConfig("n_sec must be >= 1"));
        }
        if !(self.d_thresh > 0.0 && self.d_max > 0.0 && self.d_max.is_finite()) {
            return Err(RewardError::InvalidConfig("d_thresh and d_max must be positive"));
        }
        if self.v_avoid_max.is_some_and(|v| !(v >= 0.0)) {
            return Err(RewardError::InvalidConfig("v_avoid_max must be >= 0"));
        }
        Ok(())
    }

    pub fn sector_width(&self) -> f64 {
        TAU / self.n_sec as f64
    }

    /// Angular centre of sector `j`.
    pub fn sector_center(&self, j: usize) -> f64 {
        let w = self.sector_width();
        match self.sector_origin {
            SectorOrigin::Edge => (j as f64 + 0.5) * w,
            SectorOrigin::Center => j as f64 * w,
        }
    }

    /// Unit vectors toward each sector centre. With an even sector count,
    /// opposite sectors get exactly opposite vectors.
    pub fn sector_directions(&self) -> Vec<Vec3> {
        let n = self.n_sec;
        let mut u: Vec<Vec3> = (0..n)
            .map(|j| {
                let (s, c) = self.sector_center(j).sin_cos();
                Vec3::new(c, s, 0.0)
            })
            .collect();
        if n % 2 == 0 {
            for j in n / 2..n {
                u[j] = -u[j - n / 2];
            }
        }
        u
    }

    /// Sector holding azimuth `phi` (radians, any branch).
    pub fn sector_of(&self, phi: f64) -> usize {
        let w = self.sector_width();
        let shifted = match self.sector_origin {
            SectorOrigin::Edge => phi,
            SectorOrigin::Center => phi + 0.5 * w,
        };
        ((shifted.rem_euclid(TAU) / w).floor() as usize).min(self.n_sec - 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorDistances(pub Vec<f64>);

/// Minimum horizontal distance per sector, `d_max` where a sector is empty.
/// Points at zero horizontal distance have no azimuth and are skipped.
pub fn sector_min_distances(points: &[Vec3], cfg: &RiskConfig) -> SectorDistances {
    let mut d = vec![cfg.d_max; cfg.n_sec];
    for p in points {
        let r = p.x.hypot(p.y);
        if r == 0.0 || !r.is_finite() {
            continue;
        }
        let j = cfg.sector_of(p.y.atan2(p.x));
        d[j] = d[j].min(r);
    }
    SectorDistances(d)
}

/// Keeps points whose base-frame height lies inside `cfg.z_band`.
pub fn z_band_filter(points: &[Vec3], cfg: &RiskConfig) -> Vec<Vec3> {
    let [lo, hi] = cfg.z_band;
    points.iter().copied().filter(|p| p.z >= lo && p.z <= hi).collect()
}

/// `Σ exp(-d_j·α)·(-u_j)` over sectors closer than `d_thresh`, then capped
/// at `v_avoid_max` if set.
pub fn avoidance_velocity(d: &SectorDistances, cfg: &RiskConfig) -> Vec3 {
    let mut v = Vec3::zeros();
    for (dj, u) in d.0.iter().zip(cfg.sector_directions()) {
        if *dj < cfg.d_thresh {
            v -= u * (-dj * cfg.alpha_avoid).exp();
        }
    }
    if let Some(cap) = cfg.v_avoid_max {
        let n = v.norm();
        if n > cap {
            v *= cap / n;
        }
    }
    v
}

/// `exp(-β·‖v - (v_cmd + V_avoid)‖²)`.
pub fn reward_vel_avoid(v: &Vec3, v_cmd: &Vec3, v_avoid: &Vec3, cfg: &RiskConfig) -> f64 {
    (-cfg.beta_va * (v - (v_cmd + v_avoid)).norm_squared()).exp()
}

/// Mean of `min(d_i, d_max) / d_max`.
pub fn reward_rays(ranges: &[f64], cfg: &RiskConfig) -> Result<f64, RewardError> {
    if ranges.is_empty() {
        return Err(RewardError::EmptyRays);
    }
    // Each term is at most 1 after rounding, so the mean never exceeds 1.
    let sum: f64 = ranges.iter().map(|d| d.min(cfg.d_max) / cfg.d_max).sum();
    Ok(sum / ranges.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardWeights {
    pub vel_avoid: f64,
    pub rays: f64,
    pub z_velocity: f64,
    pub foot_stumble: f64,
    pub link_collision: f64,
    pub joint_limit: f64,
    pub joint_torques: f64,
    pub joint_velocities: f64,
    pub joint_accelerations: f64,
    pub action_smoothing: f64,
    pub action_smoothing_rate: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            vel_avoid: 2.0,
            rays: 1.5,
            z_velocity: -3e-4,
            foot_stumble: -2e-2,
            link_collision: -0.02,
            joint_limit: -0.2,
            joint_torques: -1e-6,
            joint_velocities: -1e-6,
            joint_accelerations: -2.5e-7,
            action_smoothing: -5e-3,
            action_smoothing_rate: -5e-3,
        }
    }
}

/// Robot quantities the reward terms read. Forces are 3-vectors; only
/// their x-y components enter the penalties.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobotStateSlice {
    pub v: Vec3,
    pub v_cmd: Vec3,
    pub v_z: f64,
    pub foot_forces: Vec<Vec3>,
    pub link_forces: Vec<Vec3>,
    pub q: Vec<f64>,
    pub q_dot: Vec<f64>,
    pub q_ddot: Vec<f64>,
    /// `[min, max]` per joint.
    pub q_limits: Vec<[f64; 2]>,
    pub tau: Vec<f64>,
    pub action: Vec<f64>,
    pub action_prev: Vec<f64>,
    pub action_prev2: Vec<f64>,
}

impl RobotStateSlice {
    fn check_lengths(&self) -> Result<(), RewardError> {
        let n = self.q.len();
        let joint = [
            ("q_dot", self.q_dot.len()),
            ("q_ddot", self.q_ddot.len()),
            ("q_limits", self.q_limits.len()),
            ("tau", self.tau.len()),
        ];
        let a = self.action.len();
        let act = [("action_prev", self.action_prev.len()), ("action_prev2", self.action_prev2.len())];
        for (what, actual) in joint {
            if actual != n {
                return Err(RewardError::LengthMismatch { what, expected: n, actual });
            }
        }
        for (what, actual) in act {
            if actual != a {
                return Err(RewardError::LengthMismatch { what, expected: a, actual });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardTerm {
    pub name: String,
    pub raw: f64,
    pub weight: f64,
    pub weighted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub terms: Vec<RewardTerm>,
    pub total: f64,
}

impl RewardBreakdown {
    pub fn term(&self, name: &str) -> Option<&RewardTerm> {
        self.terms.iter().find(|t| t.name == name)
    }
}

fn sq_norm(v: impl Iterator<Item = f64>) -> f64 {
    v.map(|x| x * x).sum()
}

/// Every auxiliary term, plus `vel_avoid` and `rays` when given, weighted
/// and summed in table order.
pub fn auxiliary_rewards(
    state: &RobotStateSlice,
    w: &RewardWeights,
    r_vel_avoid: Option<f64>,
    r_rays: Option<f64>,
) -> Result<RewardBreakdown, RewardError> {
    state.check_lengths()?;
    let xy = |f: &[Vec3]| sq_norm(f.iter().flat_map(|v| [v.x, v.y]));
    let joint_limit = state
        .q
        .iter()
        .zip(&state.q_limits)
        .filter(|(q, [lo, hi])| **q > *hi || **q < *lo)
        .count() as f64;
    let smoothing = sq_norm(state.action_prev.iter().zip(&state.action).map(|(p, a)| p - a));
    let rate = sq_norm(
        state
            .action_prev2
            .iter()
            .zip(&state.action_prev)
            .zip(&state.action)
            .map(|((p2, p1), a)| p2 - 2.0 * p1 + a),
    );

    let mut raw: Vec<(&str, f64, f64)> = Vec::new();
    if let Some(r) = r_vel_avoid {
        raw.push(("vel_avoid", r, w.vel_avoid));
    }
    if let Some(r) = r_rays {
        raw.push(("rays", r, w.rays));
    }
    raw.extend([
        ("z_velocity", state.v_z * state.v_z, w.z_velocity),
        ("foot_stumble", xy(&state.foot_forces), w.foot_stumble),
        ("link_collision", xy(&state.link_forces), w.link_collision),
        ("joint_limit", joint_limit, w.joint_limit),
        ("joint_torques", sq_norm(state.tau.iter().copied()), w.joint_torques),
        ("joint_velocities", sq_norm(state.q_dot.iter().copied()), w.joint_velocities),
        ("joint_accelerations", sq_norm(state.q_ddot.iter().copied()), w.joint_accelerations),
        ("action_smoothing", smoothing, w.action_smoothing),
        ("action_smoothing_rate", rate, w.action_smoothing_rate),
    ]);
    let terms: Vec<RewardTerm> = raw
        .into_iter()
        .map(|(name, raw, weight)| RewardTerm {
            name: name.to_owned(),
            raw,
            weight,
            weighted: weight * raw,
        })
        .collect();
    let total = terms.iter().map(|t| t.weighted).sum();
    Ok(RewardBreakdown { terms, total })
}

/// Evenly strided subset of `n` values (all of them when `n >= len`).
pub fn representative_ranges(ranges: &[f64], n: usize) -> Vec<f64> {
    if n >= ranges.len() {
        return ranges.to_vec();
    }
    (0..n).map(|i| ranges[i * ranges.len() / n]).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRewards {
    pub sectors: SectorDistances,
    pub v_avoid: Vec3,
    pub breakdown: RewardBreakdown,
}

/// Full reward evaluation for one frame: hit points in the z band feed the
/// sectors, `n_rays` strided distal ranges feed `r_rays`.
pub fn evaluate_frame(
    frame: &ScanFrame,
    state: &RobotStateSlice,
    risk: &RiskConfig,
    theta_threshold: f64,
    weights: &RewardWeights,
) -> Result<FrameRewards, RewardError> {
    risk.validate()?;
    let hits: Vec<Vec3> = frame
        .points_base
        .iter()
        .zip(&frame.hit_flags)
        .filter(|(_, h)| **h)
        .map(|(p, _)| *p)
        .collect();
    let sectors = sector_min_distances(&z_band_filter(&hits, risk), risk);
    let v_avoid = avoidance_velocity(&sectors, risk);
    let r_va = reward_vel_avoid(&state.v, &state.v_cmd, &v_avoid, risk);
    let (_, distal) = partition(frame, theta_threshold);
    let distal: Vec<f64> = distal.iter().map(|p| p.range).collect();
    let r_rays = reward_rays(&representative_ranges(&distal, risk.n_rays), risk)?;
    let breakdown = auxiliary_rewards(state, weights, Some(r_va), Some(r_rays))?;
    Ok(FrameRewards {
        sectors,
        v_avoid,
        breakdown,
    })
}
