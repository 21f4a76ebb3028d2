//! Mean interference covariance and the SINR predictions built on it.
//!
//! Signatures follow the normalized convention of
//! [`normalized_signature`]: `u(Ω) = T a(Ω)/sqrt(N)`, so powers are
//! beamformed SNRs and the noise covariance is `T T^H`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::array::{
    locate_on, place_window, ArrayConfig, BeamspaceWindow, ComplexVector, GridPosition,
    SpatialFrequency,
};
use crate::error::{Error, Result};
use crate::linalg::HermitianMatrix;
use crate::montecarlo::{derive_seed, map_chunks};
use crate::receiver::{
    lmmse_sinr, noise_covariance, normalized_signature, ReceiverScene,
};
use crate::scheduling::{max_users, sample_interferer, sample_user_frequencies, GuardPolicy};

pub const MIN_MC_SAMPLES: usize = 1000;
pub const DEFAULT_MC_SAMPLES: usize = 200_000;

pub fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn from_db(x: f64) -> f64 {
    10f64.powf(x / 10.0)
}

/// Monte-Carlo estimate of `M_I = E[u(Ω) u(Ω)^H]` over interferers drawn
/// uniformly outside the guard around the desired user.
#[derive(Clone, Debug)]
pub struct MeanInterferenceModel {
    pub m_i: HermitianMatrix,
    pub n_samples: usize,
    pub guard_bins: f64,
    pub anchor: GridPosition,
    pub zp_factor: usize,
    pub desired: SpatialFrequency,
    pub window: BeamspaceWindow,
    pub cfg: ArrayConfig,
}

impl MeanInterferenceModel {
    /// Normalized signature of the desired user in the model's window.
    pub fn desired_signature(&self) -> ComplexVector {
        normalized_signature(self.desired.radians(), &self.cfg, &self.window)
    }

    /// Unit-power noise covariance `T T^H` of the model's window.
    pub fn unit_noise(&self) -> HermitianMatrix {
        noise_covariance(&self.cfg, &self.window, 1.0).expect("window built for this array")
    }
}

pub fn estimate_mean_interference<R: Rng + ?Sized>(
    omega_desired: SpatialFrequency,
    cfg: &ArrayConfig,
    w: usize,
    guard_bins: f64,
    rng: &mut R,
    n_samples: usize,
) -> Result<MeanInterferenceModel> {
    if n_samples < MIN_MC_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "{n_samples} Monte-Carlo samples, need at least {MIN_MC_SAMPLES}"
        )));
    }
    let window = place_window(omega_desired, cfg, w)?;
    let g = guard_bins * cfg.bin_width();
    if !(0.0..std::f64::consts::PI).contains(&g) {
        return Err(Error::InvalidParameter(format!(
            "guard of {guard_bins} bins leaves no room for interferers"
        )));
    }
    let seed = derive_seed(rng);
    let partials = map_chunks(seed, n_samples, |rng, count| {
        let mut acc = DMatrix::<Complex64>::zeros(w, w);
        let one = Complex64::new(1.0, 0.0);
        for _ in 0..count {
            let om = sample_interferer(rng, omega_desired, cfg, guard_bins)
                .expect("guard checked above");
            let u = normalized_signature(om.radians(), cfg, &window);
            acc.ger(one, &u, &u.conjugate(), one);
        }
        acc
    });
    let mut sum = DMatrix::<Complex64>::zeros(w, w);
    for p in &partials {
        sum += p;
    }
    let m_i = HermitianMatrix::symmetrized(sum * Complex64::new(1.0 / n_samples as f64, 0.0));
    Ok(MeanInterferenceModel {
        m_i,
        n_samples,
        guard_bins,
        anchor: locate_on(omega_desired, cfg.n_antennas()),
        zp_factor: cfg.zp_factor(),
        desired: omega_desired,
        window,
        cfg: *cfg,
    })
}

/// `P_tot M_I + C_n`.
pub fn mean_total_covariance(
    model: &MeanInterferenceModel,
    p_tot: f64,
    noise_cov: &HermitianMatrix,
) -> Result<HermitianMatrix> {
    if noise_cov.dim() != model.m_i.dim() {
        return Err(Error::LengthMismatch {
            expected: model.m_i.dim(),
            actual: noise_cov.dim(),
        });
    }
    if !(p_tot >= 0.0 && p_tot.is_finite()) {
        return Err(Error::InvalidParameter(format!("total interference power {p_tot}")));
    }
    Ok(model.m_i.scale(p_tot).add(noise_cov))
}

/// `u₁^H M_I^{-1} u₁` (linear).
pub fn sir_margin(u1: &ComplexVector, model: &MeanInterferenceModel) -> Result<f64> {
    model.m_i.inverse_quadratic_form(u1)
}

/// `P₁ u₁^H (P_tot M_I + C_n)^{-1} u₁` (linear).
pub fn expected_sinr_lower_bound(
    u1: &ComplexVector,
    p1: f64,
    model: &MeanInterferenceModel,
    p_tot: f64,
    noise_cov: &HermitianMatrix,
) -> Result<f64> {
    Ok(p1 * mean_total_covariance(model, p_tot, noise_cov)?.inverse_quadratic_form(u1)?)
}

/// `margin_dB - 10 log10(K-1)`.
pub fn predicted_sinr_equal_power(margin: f64, k_users: usize) -> Result<f64> {
    predicted_sinr_min_power(margin, k_users, 1.0)
}

/// `10 log10(p_min/(K-1)) + margin_dB`, with powers normalized to unit mean.
pub fn predicted_sinr_min_power(margin: f64, k_users: usize, p_min: f64) -> Result<f64> {
    if k_users < 2 {
        return Err(Error::InvalidParameter(format!(
            "prediction needs at least one interferer, got K={k_users}"
        )));
    }
    if !(p_min > 0.0) {
        return Err(Error::InvalidParameter(format!("minimum power {p_min}")));
    }
    Ok(db(p_min / (k_users - 1) as f64) + db(margin))
}

#[derive(Clone, Debug)]
pub struct EigenReport {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<ComplexVector>,
    pub cumulative_shares: Vec<f64>,
    /// `|q_i^H u₁|²`.
    pub projections: Vec<f64>,
}

impl EigenReport {
    /// Margin as `Σ |q_i^H u₁|² / λ_i`.
    pub fn margin(&self) -> f64 {
        self.projections
            .iter()
            .zip(&self.eigenvalues)
            .map(|(p, l)| p / l)
            .sum()
    }

    pub fn total_db(&self) -> f64 {
        db(self.eigenvalues.iter().sum())
    }
}

pub fn eigen_report(model: &MeanInterferenceModel, u1: &ComplexVector) -> Result<EigenReport> {
    let (eigenvalues, eigenvectors) = model.m_i.eigen_descending()?;
    let total: f64 = eigenvalues.iter().sum();
    let cumulative_shares = eigenvalues
        .iter()
        .scan(0.0, |acc, l| {
            *acc += l;
            Some(*acc / total)
        })
        .collect();
    let projections = eigenvectors.iter().map(|q| q.dotc(u1).norm_sqr()).collect();
    Ok(EigenReport {
        eigenvalues,
        eigenvectors,
        cumulative_shares,
        projections,
    })
}

/// `(u^H E[R]^{-1} u, mean_i u^H R_i^{-1} u)` over an ensemble.
pub fn jensen_gap(ensemble: &[HermitianMatrix], u: &ComplexVector) -> Result<(f64, f64)> {
    let first = ensemble
        .first()
        .ok_or_else(|| Error::InvalidParameter("empty ensemble".into()))?;
    let k = ensemble.len() as f64;
    let mut mean = HermitianMatrix::zeros(first.dim());
    let mut rhs = 0.0;
    for r in ensemble {
        mean = mean.add(r);
        rhs += r.inverse_quadratic_form(u)?;
    }
    let lhs = mean.scale(1.0 / k).inverse_quadratic_form(u)?;
    Ok((lhs, rhs / k))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JensenReport {
    pub ensembles: usize,
    pub checks: usize,
    pub violations: usize,
    /// Largest `(lhs - rhs)/rhs`; nonpositive when the inequality holds.
    pub max_relative_gap: f64,
    /// Smallest eigenvalue of `E[R^{-1}] - E[R]^{-1}` relative to its
    /// largest; nonnegative up to roundoff.
    pub min_operator_gap: f64,
}

pub const JENSEN_TOL: f64 = 1e-9;

fn random_pd<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> HermitianMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let a = DMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(
            rng.sample::<f64, _>(StandardNormal) * s,
            rng.sample::<f64, _>(StandardNormal) * s,
        )
    });
    let eps = 0.01 + rng.random::<f64>();
    HermitianMatrix::symmetrized(
        a.adjoint() * &a * Complex64::new(1.0 / dim as f64, 0.0)
            + DMatrix::identity(dim, dim) * Complex64::new(eps, 0.0),
    )
}

/// Checks `u^H E[R]^{-1} u ≤ E[u^H R^{-1} u]` on random Wishart-plus-load
/// ensembles (`R = A^H A/dim + εI`).
pub fn verify_operator_jensen<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    n_ensembles: usize,
    ensemble_size: usize,
    n_vectors: usize,
) -> Result<JensenReport> {
    if dim == 0 || ensemble_size == 0 {
        return Err(Error::InvalidParameter("empty Jensen ensemble".into()));
    }
    let seed = derive_seed(rng);
    let partials = map_chunks(seed, n_ensembles, |rng, count| -> Result<JensenReport> {
        let mut rep = JensenReport {
            ensembles: count,
            checks: 0,
            violations: 0,
            max_relative_gap: f64::NEG_INFINITY,
            min_operator_gap: f64::INFINITY,
        };
        for _ in 0..count {
            let ens: Vec<_> = (0..ensemble_size).map(|_| random_pd(rng, dim)).collect();
            for _ in 0..n_vectors {
                let u = ComplexVector::from_fn(dim, |_, _| {
                    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
                });
                let (lhs, rhs) = jensen_gap(&ens, &u)?;
                let gap = (lhs - rhs) / rhs;
                rep.checks += 1;
                if gap > JENSEN_TOL {
                    rep.violations += 1;
                }
                rep.max_relative_gap = rep.max_relative_gap.max(gap);
            }
            let k = ensemble_size as f64;
            let mut mean = HermitianMatrix::zeros(dim);
            let mut mean_inv = HermitianMatrix::zeros(dim);
            for r in &ens {
                mean = mean.add(r);
                mean_inv = mean_inv.add(&r.inverse()?);
            }
            let diff = mean_inv
                .scale(1.0 / k)
                .add(&mean.scale(1.0 / k).inverse()?.scale(-1.0));
            let (vals, _) = diff.eigen_descending()?;
            let top = vals[0].abs().max(f64::MIN_POSITIVE);
            rep.min_operator_gap = rep.min_operator_gap.min(vals[dim - 1] / top);
        }
        Ok(rep)
    });
    partials.into_iter().try_fold(
        JensenReport {
            ensembles: 0,
            checks: 0,
            violations: 0,
            max_relative_gap: f64::NEG_INFINITY,
            min_operator_gap: f64::INFINITY,
        },
        |acc, p| {
            let p = p?;
            Ok(JensenReport {
                ensembles: acc.ensembles + p.ensembles,
                checks: acc.checks + p.checks,
                violations: acc.violations + p.violations,
                max_relative_gap: acc.max_relative_gap.max(p.max_relative_gap),
                min_operator_gap: acc.min_operator_gap.min(p.min_operator_gap),
            })
        },
    )
}

/// Per-user LMMSE SINRs (linear) for a user layout, each user detected in
/// its own window. `power(k, j)` is user `j`'s beamformed SNR when `k` is
/// the desired user.
pub fn layout_sinrs<F>(
    omegas: &[SpatialFrequency],
    cfg: &ArrayConfig,
    w: usize,
    power: F,
) -> Result<Vec<f64>>
where
    F: Fn(usize, usize) -> f64 + Sync,
{
    (0..omegas.len())
        .into_par_iter()
        .map(|k| {
            let win = place_window(omegas[k], cfg, w)?;
            let sig = |j: usize| normalized_signature(omegas[j].radians(), cfg, &win);
            let interferers = (0..omegas.len())
                .filter(|&j| j != k)
                .map(|j| (sig(j), power(k, j)))
                .collect();
            let scene = ReceiverScene::new(sig(k), power(k, k), interferers, noise_covariance(cfg, &win, 1.0)?)?;
            lmmse_sinr(&scene)
        })
        .collect()
}

/// Desired user at fractional offset `delta` from bin 0 of the base grid.
pub fn desired_at_offset(delta: f64, n: usize) -> SpatialFrequency {
    SpatialFrequency::from_bins(delta, n)
}

/// Margin in dB against `delta` for one array configuration.
pub fn margin_sweep<R: Rng + ?Sized>(
    rng: &mut R,
    cfg: &ArrayConfig,
    w: usize,
    guard_bins: f64,
    deltas: &[f64],
    n_samples: usize,
) -> Result<Vec<(f64, f64)>> {
    deltas
        .iter()
        .map(|&d| {
            let model = estimate_mean_interference(desired_at_offset(d, cfg.n_antennas()), cfg, w, guard_bins, rng, n_samples)?;
            Ok((d, db(sir_margin(&model.desired_signature(), &model)?)))
        })
        .collect()
}

/// Desired SNR and an alternating high/low interferer split, all in dB of
/// beamformed SNR.
#[derive(Clone, Debug, PartialEq)]
pub struct SinrScenario {
    pub label: String,
    pub desired_snr_db: f64,
    pub high_snr_db: f64,
    pub low_snr_db: f64,
}

impl SinrScenario {
    pub fn equal(snr_db: f64) -> Self {
        Self {
            label: format!("{snr_db} dB, equal power"),
            desired_snr_db: snr_db,
            high_snr_db: snr_db,
            low_snr_db: snr_db,
        }
    }

    /// Power of the interferer with position `rank` among the desired
    /// user's interferers: even ranks high, odd ranks low.
    pub fn interferer_snr(&self, rank: usize) -> f64 {
        from_db(if rank.is_multiple_of(2) {
            self.high_snr_db
        } else {
            self.low_snr_db
        })
    }

    pub fn total_interference(&self, n_interferers: usize) -> f64 {
        (0..n_interferers).map(|r| self.interferer_snr(r)).sum()
    }

    /// Beamformed SNR of user `j` when `k` is desired.
    pub fn power(&self, k: usize, j: usize) -> f64 {
        match j.cmp(&k) {
            std::cmp::Ordering::Equal => from_db(self.desired_snr_db),
            std::cmp::Ordering::Less => self.interferer_snr(j),
            std::cmp::Ordering::Greater => self.interferer_snr(j - 1),
        }
    }
}

/// Equal power at 10, 30 and 60 dB plus two half-split mixes.
pub fn table1_scenarios() -> Vec<SinrScenario> {
    vec![
        SinrScenario::equal(10.0),
        SinrScenario {
            label: "10 dB, half of interferers +10 dB".into(),
            desired_snr_db: 10.0,
            high_snr_db: 20.0,
            low_snr_db: 10.0,
        },
        SinrScenario {
            label: "20 dB, half of interferers -10 dB".into(),
            desired_snr_db: 20.0,
            high_snr_db: 20.0,
            low_snr_db: 10.0,
        },
        SinrScenario::equal(30.0),
        SinrScenario::equal(60.0),
    ]
}

#[derive(Clone, Debug, PartialEq)]
pub struct SinrTableConfig {
    pub n: usize,
    pub w: usize,
    pub guard_bins: f64,
    pub k_users: usize,
    pub delta: f64,
    pub mc_samples: usize,
    pub zp_factors: Vec<usize>,
    pub simulate: bool,
}

impl Default for SinrTableConfig {
    fn default() -> Self {
        Self {
            n: 128,
            w: 5,
            guard_bins: 2.0,
            k_users: 61,
            delta: 0.25,
            mc_samples: DEFAULT_MC_SAMPLES,
            zp_factors: vec![1, 2],
            simulate: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SinrTableRow {
    pub label: String,
    pub zp_factor: usize,
    pub prediction_db: f64,
    pub sim_min_db: Option<f64>,
    pub sim_mean_db: Option<f64>,
}

fn min_mean_db(sinrs: &[f64]) -> (f64, f64) {
    let dbs: Vec<f64> = sinrs.iter().map(|&s| db(s)).collect();
    let min = dbs.iter().copied().fold(f64::INFINITY, f64::min);
    (min, dbs.iter().sum::<f64>() / dbs.len() as f64)
}

/// Expected-SINR predictions and, optionally, simulated per-user LMMSE SINRs
/// on one guard-respecting layout (shared across zero-padding factors).
/// The simulated mean is the mean of per-user dB values.
pub fn sinr_table<R: Rng + ?Sized>(
    rng: &mut R,
    cfg: &SinrTableConfig,
    scenarios: &[SinrScenario],
) -> Result<Vec<SinrTableRow>> {
    if cfg.k_users < 2 {
        return Err(Error::InvalidParameter("need at least two users".into()));
    }
    let base = ArrayConfig::new(cfg.n, 1)?;
    let layout = if cfg.simulate {
        Some(sample_user_frequencies(rng, cfg.k_users, &base, &GuardPolicy::narrowband(cfg.guard_bins)?)?)
    } else {
        None
    };
    let mut rows = Vec::new();
    for &zp in &cfg.zp_factors {
        let acfg = ArrayConfig::new(cfg.n, zp)?;
        let model = estimate_mean_interference(
            desired_at_offset(cfg.delta, cfg.n),
            &acfg,
            cfg.w,
            cfg.guard_bins,
            rng,
            cfg.mc_samples,
        )?;
        let u1 = model.desired_signature();
        let noise = model.unit_noise();
        for sc in scenarios {
            let p_tot = sc.total_interference(cfg.k_users - 1);
            let pred = expected_sinr_lower_bound(&u1, from_db(sc.desired_snr_db), &model, p_tot, &noise)?;
            let (sim_min_db, sim_mean_db) = match &layout {
                Some(oms) => {
                    let sinrs = layout_sinrs(oms, &acfg, cfg.w, |k, j| sc.power(k, j))?;
                    let (lo, mean) = min_mean_db(&sinrs);
                    (Some(lo), Some(mean))
                }
                None => (None, None),
            };
            rows.push(SinrTableRow {
                label: sc.label.clone(),
                zp_factor: zp,
                prediction_db: db(pred),
                sim_min_db,
                sim_mean_db,
            });
        }
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingConfig {
    pub n_list: Vec<usize>,
    pub w: usize,
    pub guard_bins: f64,
    pub delta: f64,
    pub mc_samples: usize,
    /// Users per antenna in the simulated run.
    pub load: f64,
    pub snr_per_antenna_db: f64,
    pub simulate: bool,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self {
            n_list: vec![32, 64, 128, 256],
            w: 5,
            guard_bins: 2.0,
            delta: 0.25,
            mc_samples: DEFAULT_MC_SAMPLES,
            load: 0.48,
            snr_per_antenna_db: 40.0,
            simulate: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingRow {
    pub n: usize,
    pub k_users: usize,
    pub margin_db: f64,
    pub predicted_db: f64,
    pub sim_min_db: Option<f64>,
    pub sim_mean_db: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingStudy {
    pub rows: Vec<ScalingRow>,
    /// Least-squares slope of margin_dB against 10 log10 N.
    pub slope: f64,
}

pub fn regression_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

pub fn scaling_study<R: Rng + ?Sized>(rng: &mut R, cfg: &ScalingConfig) -> Result<ScalingStudy> {
    if cfg.n_list.len() < 2 || cfg.n_list.windows(2).any(|p| p[0] >= p[1]) {
        return Err(Error::InvalidParameter(
            "array sizes must be strictly increasing, at least two".into(),
        ));
    }
    let mut rows = Vec::new();
    for &n in &cfg.n_list {
        let acfg = ArrayConfig::new(n, 1)?;
        let model = estimate_mean_interference(desired_at_offset(cfg.delta, n), &acfg, cfg.w, cfg.guard_bins, rng, cfg.mc_samples)?;
        let margin = sir_margin(&model.desired_signature(), &model)?;
        let mut k_users = ((cfg.load * n as f64).floor() as usize).max(2);
        if let Some(k_max) = max_users(n, cfg.guard_bins) {
            k_users = k_users.min(k_max);
        }
        let (sim_min_db, sim_mean_db) = if cfg.simulate {
            let oms = sample_user_frequencies(rng, k_users, &acfg, &GuardPolicy::narrowband(cfg.guard_bins)?)?;
            let p = from_db(cfg.snr_per_antenna_db) * n as f64;
            let (lo, mean) = min_mean_db(&layout_sinrs(&oms, &acfg, cfg.w, |_, _| p)?);
            (Some(lo), Some(mean))
        } else {
            (None, None)
        };
        rows.push(ScalingRow {
            n,
            k_users,
            margin_db: db(margin),
            predicted_db: predicted_sinr_equal_power(margin, k_users)?,
            sim_min_db,
            sim_mean_db,
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| db(r.n as f64)).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.margin_db).collect();
    Ok(ScalingStudy {
        slope: regression_slope(&xs, &ys),
        rows,
    })
}
