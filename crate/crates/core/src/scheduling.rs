//! User placement under spatial-frequency guard intervals.
//!
//! A guard of `x` bins means every pair of users is more than `x·2π/N`
//! apart in circular spatial-frequency distance.

use std::f64::consts::{PI, TAU};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::array::{wrap_angle, ArrayConfig, SpatialFrequency};
use crate::channel::{DominantSpacing, UserChannel, WidebandConfig};
use crate::error::{Error, Result};

/// Frequency at which separations are measured.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GuardReference {
    /// Reference (carrier) spatial frequencies.
    Narrowband,
    /// Spatial frequencies at `f = -B/2`, where squint brings rays closest.
    LowestFrequency,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GuardPolicy {
    pub guard_bins: f64,
    pub reference: GuardReference,
}

impl GuardPolicy {
    pub fn new(guard_bins: f64, reference: GuardReference) -> Result<Self> {
        if !(guard_bins >= 0.0 && guard_bins.is_finite()) {
            return Err(Error::InvalidParameter(format!("guard {guard_bins} bins")));
        }
        Ok(Self {
            guard_bins,
            reference,
        })
    }

    pub fn narrowband(guard_bins: f64) -> Result<Self> {
        Self::new(guard_bins, GuardReference::Narrowband)
    }

    /// Guard width in radians for an `n`-antenna array.
    pub fn guard_radians(&self, n: usize) -> f64 {
        self.guard_bins * TAU / n as f64
    }

    /// Spacing rule for the synthetic dominant-path generator.
    pub fn dominant_spacing(&self, n: usize, wcfg: &WidebandConfig) -> DominantSpacing {
        DominantSpacing {
            min_separation: self.guard_radians(n),
            frequency_scale: match self.reference {
                GuardReference::Narrowband => 1.0,
                GuardReference::LowestFrequency => wcfg.lowest_frequency_scale(),
            },
        }
    }
}

pub fn circular_distance(a: f64, b: f64) -> f64 {
    wrap_angle(a - b).abs()
}

/// Largest number of users that fit with strict pairwise guards, or `None`
/// when the guard is zero.
pub fn max_users(n: usize, guard_bins: f64) -> Option<usize> {
    if guard_bins <= 0.0 {
        return None;
    }
    // K users need K gaps each strictly wider than g
    let ratio = n as f64 / guard_bins;
    Some(ratio.ceil() as usize - 1)
}

/// Draws `k` spatial frequencies uniformly on the circle conditioned on all
/// pairwise circular distances exceeding the guard.
///
/// Uses the spacing transform (uniform points on a circle shortened by
/// `k·g`, re-expanded by one guard per gap, randomly rotated), which has the
/// same law as rejecting whole i.i.d. tuples until the guard holds. The
/// output order is a random permutation.
pub fn sample_user_frequencies<R: Rng + ?Sized>(
    rng: &mut R,
    k: usize,
    cfg: &ArrayConfig,
    policy: &GuardPolicy,
) -> Result<Vec<SpatialFrequency>> {
    if policy.reference != GuardReference::Narrowband {
        return Err(Error::InvalidParameter(
            "wideband guards are enforced by the multipath generator".into(),
        ));
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    let g = policy.guard_radians(cfg.n_antennas());
    if let Some(k_max) = max_users(cfg.n_antennas(), policy.guard_bins) {
        if k > k_max {
            return Err(Error::Infeasible {
                requested: k,
                achieved: k_max,
                reason: format!(
                    "{} bins of guard on a {}-bin circle fits at most {k_max} users",
                    policy.guard_bins,
                    cfg.n_antennas()
                ),
            });
        }
    }
    let slack = TAU - k as f64 * g;
    let mut xs: Vec<f64> = (0..k).map(|_| rng.random::<f64>() * slack).collect();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rotation = rng.random::<f64>() * TAU;
    let mut out: Vec<SpatialFrequency> = xs
        .iter()
        .enumerate()
        .map(|(i, x)| SpatialFrequency::new(x + i as f64 * g + rotation))
        .collect();
    out.shuffle(rng);
    Ok(out)
}

/// Closed arc `[start, start + len]` (radians, modulo 2π) that draws avoid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExclusionZone {
    pub start: f64,
    pub len: f64,
}

impl ExclusionZone {
    /// `[center - half_width, center + half_width]`.
    pub fn around(center: f64, half_width: f64) -> Self {
        Self {
            start: center - half_width,
            len: 2.0 * half_width,
        }
    }

    pub fn contains(&self, omega: f64) -> bool {
        let off = (omega - self.start).rem_euclid(TAU);
        off <= self.len
    }
}

/// Uniform draw on `[-π, π)` outside `zone`.
pub fn sample_outside<R: Rng + ?Sized>(rng: &mut R, zone: &ExclusionZone) -> SpatialFrequency {
    let free = TAU - zone.len;
    loop {
        let t = rng.random::<f64>() * free;
        if t > 0.0 || zone.len == 0.0 {
            return SpatialFrequency::new(zone.start + zone.len + t);
        }
    }
}

/// One interferer, uniform outside the guard around the desired user.
/// Interferers are not spaced from each other.
pub fn sample_interferer<R: Rng + ?Sized>(
    rng: &mut R,
    omega_desired: SpatialFrequency,
    cfg: &ArrayConfig,
    guard_bins: f64,
) -> Result<SpatialFrequency> {
    let g = guard_bins * cfg.bin_width();
    if !(0.0..PI).contains(&g) {
        return Err(Error::InvalidParameter(format!(
            "guard of {guard_bins} bins leaves no room for interferers"
        )));
    }
    Ok(sample_outside(rng, &ExclusionZone::around(omega_desired.radians(), g)))
}

/// Largest `|θ|` for which `|Ω(B/2)| < π`: `asin(1/(1 + B/(2 f_c)))`.
pub fn fov_bound(bandwidth_hz: f64, carrier_hz: f64) -> f64 {
    (1.0 / (1.0 + bandwidth_hz / (2.0 * carrier_hz))).asin()
}

pub fn check_field_of_view(theta: f64, bandwidth_hz: f64, carrier_hz: f64) -> bool {
    theta.abs() < fov_bound(bandwidth_hz, carrier_hz)
}

/// Dominant paths pairwise separated by more than the guard at the policy's
/// reference frequency, and all inside the field of view.
pub fn wideband_guard_ok(
    users: &[UserChannel],
    n: usize,
    wcfg: &WidebandConfig,
    policy: &GuardPolicy,
) -> bool {
    let spacing = policy.dominant_spacing(n, wcfg);
    let doms: Vec<_> = users.iter().map(|u| *u.dominant()).collect();
    if !doms
        .iter()
        .all(|p| check_field_of_view(p.aoa, wcfg.bandwidth_hz, wcfg.carrier_hz))
    {
        return false;
    }
    for (i, a) in doms.iter().enumerate() {
        for b in &doms[i + 1..] {
            let d = circular_distance(
                a.omega_ref() * spacing.frequency_scale,
                b.omega_ref() * spacing.frequency_scale,
            );
            if d <= spacing.min_separation {
                return false;
            }
        }
    }
    true
}
