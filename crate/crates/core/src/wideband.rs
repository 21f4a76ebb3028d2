//! Spectral efficiency of per-subcarrier beamspace LMMSE against the
//! full-array and unconstrained benchmarks.
//!
//! At each SNR point every user is rescaled so its dominant path has the
//! requested beamformed SNR.

use std::f64::consts::LN_2;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

use crate::array::{
    place_window, transform_matrix, ArrayConfig, BeamspaceWindow, ComplexMatrix, ComplexVector,
};
use crate::channel::{
    channel_at, normalize_dominant_snr, spatial_frequency_at, synth_multipath, SynthConfig,
    UserChannel, WidebandConfig,
};
use crate::error::{Error, Result};
use crate::linalg::HermitianMatrix;
use crate::receiver::noise_covariance;
use crate::scheduling::{fov_bound, GuardPolicy, GuardReference};
use crate::stochastic::from_db;

/// Where each user's window sits at subcarrier `f`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum WindowAnchoring {
    /// Around the dominant path's squinted spatial frequency `Ω(f)`.
    #[default]
    TrackSquint,
    /// Around the dominant path's carrier spatial frequency.
    Fixed,
}

/// `H(f) = [h_1(f) … h_K(f)]`.
pub fn channel_matrix(users: &[UserChannel], f: f64, n: usize, wcfg: &WidebandConfig) -> ComplexMatrix {
    let cols: Vec<ComplexVector> = users.iter().map(|u| channel_at(u, f, n, wcfg)).collect();
    DMatrix::from_columns(&cols)
}

/// Window for user `user` at subcarrier frequency `f`.
pub fn user_window(
    user: &UserChannel,
    f: f64,
    cfg: &ArrayConfig,
    wcfg: &WidebandConfig,
    w: usize,
    anchoring: WindowAnchoring,
) -> Result<BeamspaceWindow> {
    let om = user.dominant().omega_ref();
    let anchor = match anchoring {
        WindowAnchoring::TrackSquint => spatial_frequency_at(om, f, wcfg.carrier_hz),
        WindowAnchoring::Fixed => spatial_frequency_at(om, 0.0, wcfg.carrier_hz),
    };
    place_window(anchor, cfg, w)
}

fn check_inputs(users: &[UserChannel], snr_grid: &[f64]) -> Result<()> {
    if users.is_empty() {
        return Err(Error::InvalidParameter("no users".into()));
    }
    if snr_grid.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidParameter("non-finite SNR grid point".into()));
    }
    Ok(())
}

// Users rescaled to 0 dB dominant beamformed SNR; an SNR of `s` dB then
// scales every channel by sqrt(10^(s/10)).
fn unit_snr_users(users: &[UserChannel], n: usize, wcfg: &WidebandConfig) -> Result<Vec<UserChannel>> {
    normalize_dominant_snr(users, 0.0, n, wcfg.noise_var)
}

// Runs `per_subcarrier(f)` for every subcarrier in parallel and averages the
// returned per-SNR values in subcarrier order.
fn average_over_subcarriers<F>(wcfg: &WidebandConfig, n_points: usize, per_subcarrier: F) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Result<Vec<f64>> + Sync,
{
    let parts: Vec<Vec<f64>> = wcfg
        .subcarrier_frequencies()
        .into_par_iter()
        .map(|f| per_subcarrier(f))
        .collect::<Result<_>>()?;
    let mut acc = vec![0.0; n_points];
    for p in &parts {
        for (a, v) in acc.iter_mut().zip(p) {
            *a += v;
        }
    }
    let m = wcfg.n_subcarriers as f64;
    Ok(acc.into_iter().map(|a| a / m).collect())
}

/// `(1/(K M)) Σ_m log2 det(I + H(f_m) H^H(f_m) / noise_var)`, bits/s/Hz per
/// user.
pub fn unconstrained_se(
    users: &[UserChannel],
    cfg: &ArrayConfig,
    wcfg: &WidebandConfig,
    snr_grid_db: &[f64],
) -> Result<Vec<f64>> {
    check_inputs(users, snr_grid_db)?;
    let n = cfg.n_antennas();
    let base = unit_snr_users(users, n, wcfg)?;
    let k = users.len();
    average_over_subcarriers(wcfg, snr_grid_db.len(), |f| {
        let h = channel_matrix(&base, f, n, wcfg);
        // det(I_N + s H H^H) = det(I_K + s H^H H)
        let gram = HermitianMatrix::symmetrized(h.adjoint() * &h);
        snr_grid_db
            .iter()
            .map(|&s| {
                let m = gram
                    .scale(from_db(s) / wcfg.noise_var)
                    .add(&HermitianMatrix::scaled_identity(k, 1.0));
                Ok(m.ln_det()? / LN_2 / k as f64)
            })
            .collect()
    })
}

// Mean over users of log2(1 + SINR_k) for signatures `sigs` (columns) with
// noise covariance `noise`, at channel power scale `s`.
fn lmmse_rate(sigs: &ComplexMatrix, k: usize, s: f64, noise: &HermitianMatrix) -> Result<f64> {
    let mut r = noise.clone();
    for j in 0..sigs.ncols() {
        if j != k {
            r.add_outer(&sigs.column(j).into_owned(), s);
        }
    }
    let sinr = s * r.inverse_quadratic_form(&sigs.column(k).into_owned())?;
    Ok((1.0 + sinr).log2())
}

/// Antenna-space LMMSE per user and subcarrier, averaged `log2(1 + SINR)`.
pub fn full_array_lmmse_se(
    users: &[UserChannel],
    cfg: &ArrayConfig,
    wcfg: &WidebandConfig,
    snr_grid_db: &[f64],
) -> Result<Vec<f64>> {
    check_inputs(users, snr_grid_db)?;
    let n = cfg.n_antennas();
    let base = unit_snr_users(users, n, wcfg)?;
    let k_users = users.len();
    let noise = HermitianMatrix::scaled_identity(n, wcfg.noise_var);
    average_over_subcarriers(wcfg, snr_grid_db.len(), |f| {
        let h = channel_matrix(&base, f, n, wcfg);
        snr_grid_db
            .iter()
            .map(|&s| {
                let mut total = 0.0;
                for k in 0..k_users {
                    total += lmmse_rate(&h, k, from_db(s), &noise)?;
                }
                Ok(total / k_users as f64)
            })
            .collect()
    })
}

/// Beamspace LMMSE: each user is detected from its own `w`-bin window.
pub fn beamspace_lmmse_se(
    users: &[UserChannel],
    cfg: &ArrayConfig,
    wcfg: &WidebandConfig,
    w: usize,
    anchoring: WindowAnchoring,
    snr_grid_db: &[f64],
) -> Result<Vec<f64>> {
    check_inputs(users, snr_grid_db)?;
    let n = cfg.n_antennas();
    let base = unit_snr_users(users, n, wcfg)?;
    let k_users = users.len();
    average_over_subcarriers(wcfg, snr_grid_db.len(), |f| {
        let h = channel_matrix(&base, f, n, wcfg);
        let mut totals = vec![0.0; snr_grid_db.len()];
        for (k, user) in base.iter().enumerate() {
            let win = user_window(user, f, cfg, wcfg, w, anchoring)?;
            let sigs = transform_matrix(cfg, &win) * &h;
            let noise = noise_covariance(cfg, &win, wcfg.noise_var)?;
            for (t, &s) in totals.iter_mut().zip(snr_grid_db) {
                *t += lmmse_rate(&sigs, k, from_db(s), &noise)?;
            }
        }
        Ok(totals.into_iter().map(|t| t / k_users as f64).collect())
    })
}

const RANK_TOL: f64 = 1e-10;

/// Noise-free windowed SIR of `user_idx` at every subcarrier, with all users
/// at equal dominant-path power. `None` marks an infinite SIR: no
/// interference, or interference that leaves the window rank deficient.
pub fn sir_trace(
    user_idx: usize,
    users: &[UserChannel],
    cfg: &ArrayConfig,
    wcfg: &WidebandConfig,
    w: usize,
    anchoring: WindowAnchoring,
) -> Result<Vec<Option<f64>>> {
    if user_idx >= users.len() {
        return Err(Error::InvalidParameter(format!(
            "user {user_idx} of {}",
            users.len()
        )));
    }
    let n = cfg.n_antennas();
    let base = unit_snr_users(users, n, wcfg)?;
    wcfg.subcarrier_frequencies()
        .into_par_iter()
        .map(|f| {
            let win = user_window(&base[user_idx], f, cfg, wcfg, w, anchoring)?;
            let sigs = transform_matrix(cfg, &win) * channel_matrix(&base, f, n, wcfg);
            let mut r = HermitianMatrix::zeros(w);
            for j in (0..base.len()).filter(|&j| j != user_idx) {
                r.add_outer(&sigs.column(j).into_owned(), 1.0);
            }
            let (vals, _) = r.eigen_descending()?;
            let top = vals.first().copied().unwrap_or(0.0);
            if top <= 0.0 || vals[w - 1] <= RANK_TOL * top {
                return Ok(None);
            }
            Ok(Some(r.inverse_quadratic_form(&sigs.column(user_idx).into_owned())?))
        })
        .collect()
}

/// All three curves plus the SIR trace of every user.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralEfficiencyReport {
    pub snr_db: Vec<f64>,
    pub unconstrained: Vec<f64>,
    pub full_array: Vec<f64>,
    pub beamspace: Vec<f64>,
    pub sir_traces: Vec<Vec<Option<f64>>>,
}

pub fn spectral_efficiency_report(
    users: &[UserChannel],
    cfg: &ArrayConfig,
    wcfg: &WidebandConfig,
    w: usize,
    anchoring: WindowAnchoring,
    snr_grid_db: &[f64],
) -> Result<SpectralEfficiencyReport> {
    Ok(SpectralEfficiencyReport {
        snr_db: snr_grid_db.to_vec(),
        unconstrained: unconstrained_se(users, cfg, wcfg, snr_grid_db)?,
        full_array: full_array_lmmse_se(users, cfg, wcfg, snr_grid_db)?,
        beamspace: beamspace_lmmse_se(users, cfg, wcfg, w, anchoring, snr_grid_db)?,
        sir_traces: (0..users.len())
            .map(|k| sir_trace(k, users, cfg, wcfg, w, anchoring))
            .collect::<Result<_>>()?,
    })
}

/// Synthetic multipath ensemble whose dominant paths respect `guard_bins` at
/// the lowest subcarrier frequency and lie inside the field of view.
pub fn bench_ensemble<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    k_users: usize,
    wcfg: &WidebandConfig,
    guard_bins: f64,
    paths_per_user: std::ops::RangeInclusive<usize>,
) -> Result<Vec<UserChannel>> {
    let policy = GuardPolicy::new(guard_bins, GuardReference::LowestFrequency)?;
    // stay strictly inside the open field-of-view bound
    let fov = fov_bound(wcfg.bandwidth_hz, wcfg.carrier_hz) * (1.0 - 1e-9);
    let mut synth = SynthConfig::new(k_users, paths_per_user, fov);
    synth.spacing = Some(policy.dominant_spacing(n, wcfg));
    synth_multipath(rng, &synth)
}
