//! Linear receivers on windowed beamspace signatures.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::array::{
    dirichlet, place_window, steering_vector, transform_matrix, window_response, ArrayConfig,
    BeamspaceWindow, ComplexMatrix, ComplexVector, SpatialFrequency,
};
use crate::error::{Error, Result};
use crate::linalg::HermitianMatrix;
use crate::montecarlo::{derive_seed, map_chunks, RunningStats};
use crate::scheduling::{sample_outside, ExclusionZone};

/// `noise_var · T T^H` for the windowed transform `T`. Exactly
/// `noise_var · I` without zero-padding.
pub fn noise_covariance(
    cfg: &ArrayConfig,
    win: &BeamspaceWindow,
    noise_var: f64,
) -> Result<HermitianMatrix> {
    if !(noise_var >= 0.0 && noise_var.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise variance {noise_var}")));
    }
    if win.n_fft() != cfg.n_fft() {
        return Err(Error::InvalidWindow("window and array disagree on N_FFT".into()));
    }
    if cfg.zp_factor() == 1 {
        return Ok(HermitianMatrix::scaled_identity(win.width(), noise_var));
    }
    let t = transform_matrix(cfg, win);
    Ok(HermitianMatrix::symmetrized(&t * t.adjoint()).scale(noise_var))
}

/// Desired user, interferers and noise as seen in one window.
#[derive(Clone, Debug)]
pub struct ReceiverScene {
    desired: ComplexVector,
    desired_power: f64,
    interferers: Vec<(ComplexVector, f64)>,
    noise_cov: HermitianMatrix,
}

impl ReceiverScene {
    pub fn new(
        desired: ComplexVector,
        desired_power: f64,
        interferers: Vec<(ComplexVector, f64)>,
        noise_cov: HermitianMatrix,
    ) -> Result<Self> {
        let w = noise_cov.dim();
        for u in std::iter::once(&desired).chain(interferers.iter().map(|(u, _)| u)) {
            if u.len() != w {
                return Err(Error::LengthMismatch {
                    expected: w,
                    actual: u.len(),
                });
            }
        }
        for p in std::iter::once(desired_power).chain(interferers.iter().map(|(_, p)| *p)) {
            if !(p > 0.0 && p.is_finite()) {
                return Err(Error::InvalidParameter(format!("power {p}")));
            }
        }
        Ok(Self {
            desired,
            desired_power,
            interferers,
            noise_cov,
        })
    }

    pub fn desired(&self) -> &ComplexVector {
        &self.desired
    }

    pub fn desired_power(&self) -> f64 {
        self.desired_power
    }

    pub fn interferers(&self) -> &[(ComplexVector, f64)] {
        &self.interferers
    }

    pub fn noise_cov(&self) -> &HermitianMatrix {
        &self.noise_cov
    }

    pub fn with_interferer(mut self, u: ComplexVector, p: f64) -> Result<Self> {
        self.interferers.push((u, p));
        Self::new(self.desired, self.desired_power, self.interferers, self.noise_cov)
    }
}

/// Windowed signature of a unit-gain plane wave, scaled by `1/sqrt(N)` so
/// that its squared norm is the captured energy fraction.
pub fn normalized_signature(omega: f64, cfg: &ArrayConfig, win: &BeamspaceWindow) -> ComplexVector {
    let scale = Complex64::new(1.0 / (cfg.n_antennas() as f64).sqrt(), 0.0);
    window_response(omega, cfg, win) * scale
}

/// `R = Σ P_k u_k u_k^H + C_n`.
pub fn scene_covariance(scene: &ReceiverScene) -> HermitianMatrix {
    let mut r = scene.noise_cov.clone();
    for (u, p) in &scene.interferers {
        r.add_outer(u, *p);
    }
    r
}

/// Linear LMMSE SINR `P₁ u₁^H R^{-1} u₁`.
pub fn lmmse_sinr(scene: &ReceiverScene) -> Result<f64> {
    let r = scene_covariance(scene);
    Ok(scene.desired_power * r.inverse_quadratic_form(&scene.desired)?)
}

/// `c = R^{-1} u₁`.
pub fn lmmse_weights(scene: &ReceiverScene) -> Result<ComplexVector> {
    scene_covariance(scene).solve(&scene.desired)
}

/// SINR of an arbitrary combiner `c`: `P₁|c^H u₁|² / c^H R c`.
pub fn output_sinr(c: &ComplexVector, scene: &ReceiverScene) -> Result<f64> {
    if c.len() != scene.desired.len() {
        return Err(Error::LengthMismatch {
            expected: scene.desired.len(),
            actual: c.len(),
        });
    }
    let den = scene_covariance(scene).quadratic_form(c);
    if den <= 0.0 {
        return Err(Error::Singular("combiner sees no interference or noise".into()));
    }
    Ok(scene.desired_power * c.dotc(&scene.desired).norm_sqr() / den)
}

// Orthonormal basis (columns, N×r) of the row space of `t`.
fn row_space_basis(t: &ComplexMatrix) -> Result<ComplexMatrix> {
    let svd = t.adjoint().svd(true, false);
    let u = svd
        .u
        .ok_or_else(|| Error::Eigen("SVD did not return singular vectors".into()))?;
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > 1e-10 * smax)
        .collect();
    Ok(DMatrix::from_fn(u.nrows(), keep.len(), |r, c| u[(r, keep[c])]))
}

/// Orthogonal projector `T^H (T T^H)^{-1} T` onto the row space of the
/// windowed transform (pseudo-inverse when `T T^H` is rank deficient).
pub fn projector(cfg: &ArrayConfig, win: &BeamspaceWindow) -> Result<ComplexMatrix> {
    let q = row_space_basis(&transform_matrix(cfg, win))?;
    Ok(&q * q.adjoint())
}

/// Whitened-matched-filter SNR in the window relative to full-array
/// combining, `v^H P v / ‖v‖²` with `v = a(Ω)`.
pub fn noise_limited_capture(omega: SpatialFrequency, cfg: &ArrayConfig, w: usize) -> Result<f64> {
    let win = place_window(omega, cfg, w)?;
    noise_limited_capture_in(omega, cfg, &win)
}

pub fn noise_limited_capture_in(
    omega: SpatialFrequency,
    cfg: &ArrayConfig,
    win: &BeamspaceWindow,
) -> Result<f64> {
    let v = steering_vector(omega.radians(), cfg.n_antennas());
    let q = row_space_basis(&transform_matrix(cfg, win))?;
    Ok((q.adjoint() * &v).norm_squared() / v.norm_squared())
}

/// Two-bin response `[D_N(Ω), D_N(Ω - 2π/N)]` on bins 0 and 1.
pub fn two_bin_response(omega: f64, n: usize) -> [Complex64; 2] {
    [dirichlet(omega, n), dirichlet(omega - 2.0 * PI / n as f64, n)]
}

/// Fixed combiner `[1, -e^{jπ/N}]`; it adds the desired user's two bins
/// coherently for any `Ω₁ ∈ [0, 2π/N]`.
pub fn two_bin_filter(n: usize) -> [Complex64; 2] {
    [
        Complex64::new(1.0, 0.0),
        -Complex64::from_polar(1.0, PI / n as f64),
    ]
}

/// `|c^H u(Ω)|` for the two-bin combiner.
pub fn two_bin_output(omega: f64, n: usize) -> f64 {
    let u = two_bin_response(omega, n);
    let c = two_bin_filter(n);
    (c[0].conj() * u[0] + c[1].conj() * u[1]).norm()
}

/// Interferer exclusion `[-0.5π/N, 2.5π/N]` around the two-bin window.
pub fn two_bin_exclusion(n: usize) -> ExclusionZone {
    let nf = n as f64;
    ExclusionZone {
        start: -0.5 * PI / nf,
        len: 3.0 * PI / nf,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoBinStats {
    pub n: usize,
    /// `|c^H u₁|²`.
    pub signal_energy: f64,
    /// Monte-Carlo estimate of `E[Z²]`.
    pub mean_interference_energy: f64,
    pub std_error: f64,
    pub n_samples: usize,
}

impl TwoBinStats {
    /// Lower bound on `E[SIR]·P_tot/P₁`.
    pub fn sir_ratio(&self) -> f64 {
        self.signal_energy / self.mean_interference_energy
    }
}

pub fn two_bin_mf_stats<R: Rng + ?Sized>(
    omega_desired: f64,
    n: usize,
    rng: &mut R,
    n_samples: usize,
) -> Result<TwoBinStats> {
    if n < 2 {
        return Err(Error::InvalidArray(format!("need at least 2 antennas, got {n}")));
    }
    if !(0.0..=2.0 * PI / n as f64).contains(&omega_desired) {
        return Err(Error::InvalidParameter(format!(
            "desired spatial frequency {omega_desired} outside [0, 2π/N]"
        )));
    }
    if n_samples == 0 {
        return Err(Error::InvalidParameter("no Monte-Carlo samples".into()));
    }
    let zone = two_bin_exclusion(n);
    let seed = derive_seed(rng);
    let stats = map_chunks(seed, n_samples, |rng, count| {
        let mut s = RunningStats::default();
        for _ in 0..count {
            let om = sample_outside(rng, &zone).radians();
            s.push(two_bin_output(om, n).powi(2));
        }
        s
    })
    .iter()
    .fold(RunningStats::default(), |acc, s| acc.merge(s));
    Ok(TwoBinStats {
        n,
        signal_energy: two_bin_output(omega_desired, n).powi(2),
        mean_interference_energy: stats.mean,
        std_error: stats.std_error(),
        n_samples,
    })
}
