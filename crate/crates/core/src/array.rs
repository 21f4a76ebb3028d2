//! Array-processing primitives for a half-wavelength uniform linear array.
//!
//! Covers the steering vector, the Dirichlet kernel, locating a spatial
//! frequency on the DFT grid, beamspace window placement, the (optionally
//! zero-padded) windowed DFT, and the sinc-based energy capture bounds.
//!
//! The DFT is unitary throughout: `F[m, n] = exp(-j 2π m n / N_FFT) / sqrt(N_FFT)`.

use std::f64::consts::{PI, TAU};
use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

pub type ComplexVector = DVector<Complex64>;
pub type ComplexMatrix = DMatrix<Complex64>;

/// Number of antennas and DFT size of the beamspace transform.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ArrayConfig {
    n_antennas: usize,
    zp_factor: usize,
}

impl ArrayConfig {
    pub fn new(n_antennas: usize, zp_factor: usize) -> Result<Self> {
        if n_antennas < 2 {
            return Err(Error::InvalidArray(format!(
                "need at least 2 antennas, got {n_antennas}"
            )));
        }
        if !(1..=2).contains(&zp_factor) {
            return Err(Error::InvalidArray(format!(
                "unsupported zero-pad factor {zp_factor} (expected 1 or 2)"
            )));
        }
        Ok(Self {
            n_antennas,
            zp_factor,
        })
    }

    pub fn n_antennas(&self) -> usize {
        self.n_antennas
    }

    pub fn zp_factor(&self) -> usize {
        self.zp_factor
    }

    pub fn n_fft(&self) -> usize {
        self.n_antennas * self.zp_factor
    }

    /// Width of one base-grid DFT bin in radians, `2π/N`.
    pub fn bin_width(&self) -> f64 {
        TAU / self.n_antennas as f64
    }
}

/// Wraps an angle into `[-π, π)`.
pub fn wrap_angle(x: f64) -> f64 {
    let mut r = x - TAU * ((x + PI) / TAU).floor();
    if r >= PI {
        r -= TAU;
    }
    if r < -PI {
        r += TAU;
    }
    r
}

/// Phase progression per array element, wrapped into `[-π, π)`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct SpatialFrequency(f64);

impl SpatialFrequency {
    pub fn new(omega: f64) -> Self {
        Self(wrap_angle(omega))
    }

    /// `2π·nu/grid`, i.e. a continuous bin index on a `grid`-point DFT.
    pub fn from_bins(nu: f64, grid: usize) -> Self {
        Self::new(TAU * nu / grid as f64)
    }

    /// Reference spatial frequency `π sin θ` of an arrival angle.
    pub fn from_aoa(theta: f64) -> Self {
        Self::new(PI * theta.sin())
    }

    pub fn radians(self) -> f64 {
        self.0
    }
}

impl From<SpatialFrequency> for f64 {
    fn from(s: SpatialFrequency) -> f64 {
        s.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sign::Plus => f.write_str("+"),
            Sign::Minus => f.write_str("-"),
        }
    }
}

/// `Ω = 2π(n0 ± δ)/grid` with `n0` the nearest grid point and `δ ∈ [0, 0.5]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridPosition {
    pub n0: i64,
    pub delta: f64,
    pub sign: Sign,
}

impl GridPosition {
    pub fn new(n0: i64, delta: f64, sign: Sign) -> Result<Self> {
        if !(0.0..=0.5).contains(&delta) {
            return Err(Error::InvalidParameter(format!(
                "fractional offset {delta} outside [0, 0.5]"
            )));
        }
        Ok(Self { n0, delta, sign })
    }

    /// `n0 ± δ`.
    pub fn continuous_index(&self) -> f64 {
        self.n0 as f64 + self.sign.factor() * self.delta
    }

    pub fn omega(&self, grid: usize) -> SpatialFrequency {
        SpatialFrequency::from_bins(self.continuous_index(), grid)
    }
}

// Nearest integer to `nu`, without wrapping. Exact half-way ties resolve to
// floor with sign +.
fn split_index(nu: f64) -> (i64, f64, Sign) {
    let f = nu.floor();
    let r = nu - f;
    if r <= 0.5 {
        (f as i64, r, Sign::Plus)
    } else {
        (f as i64 + 1, (f + 1.0) - nu, Sign::Minus)
    }
}

/// Locates `omega` on a `grid`-point DFT grid, with `n0` wrapped into
/// `{-grid/2, …, grid - grid/2 - 1}`.
pub fn locate_on(omega: SpatialFrequency, grid: usize) -> GridPosition {
    let nu = omega.radians() * grid as f64 / TAU;
    let (n0, delta, sign) = split_index(nu);
    let half = (grid / 2) as i64;
    let n0 = (n0 + half).rem_euclid(grid as i64) - half;
    GridPosition { n0, delta, sign }
}

/// Position of `omega` on the base `N`-point grid.
pub fn locate_on_grid(omega: SpatialFrequency, cfg: &ArrayConfig) -> GridPosition {
    locate_on(omega, cfg.n_antennas())
}

/// `W` contiguous DFT bins (modulo `N_FFT`) selected for one user.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BeamspaceWindow {
    indices: Vec<usize>,
    n_fft: usize,
}

impl BeamspaceWindow {
    pub fn new(indices: Vec<usize>, n_fft: usize) -> Result<Self> {
        let w = indices.len();
        if w == 0 || w > n_fft {
            return Err(Error::WindowWidth { width: w, n_fft });
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= n_fft) {
            return Err(Error::InvalidWindow(format!(
                "bin {bad} outside 0..{n_fft}"
            )));
        }
        for pair in indices.windows(2) {
            if pair[1] != (pair[0] + 1) % n_fft {
                return Err(Error::InvalidWindow(format!(
                    "bins {} and {} are not contiguous modulo {n_fft}",
                    pair[0], pair[1]
                )));
            }
        }
        Ok(Self { indices, n_fft })
    }

    /// Bins `start, start+1, …, start+width-1`, each reduced modulo `n_fft`.
    pub fn from_start(start: i64, width: usize, n_fft: usize) -> Result<Self> {
        if width == 0 || width > n_fft {
            return Err(Error::WindowWidth { width, n_fft });
        }
        let indices = (0..width as i64)
            .map(|i| (start + i).rem_euclid(n_fft as i64) as usize)
            .collect();
        Ok(Self { indices, n_fft })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn width(&self) -> usize {
        self.indices.len()
    }

    pub fn n_fft(&self) -> usize {
        self.n_fft
    }

    pub fn contains(&self, bin: i64) -> bool {
        let b = bin.rem_euclid(self.n_fft as i64) as usize;
        self.indices.contains(&b)
    }
}

// First (unwrapped) bin of a W-wide window anchored at `pos`.
fn window_start(pos: &GridPosition, w: usize) -> i64 {
    let k = (w / 2) as i64;
    if w % 2 == 1 {
        pos.n0 - k
    } else {
        match pos.sign {
            Sign::Plus => pos.n0 - k + 1,
            Sign::Minus => pos.n0 - k,
        }
    }
}

/// Places a `w`-bin window around a position on an `n_fft`-point grid.
///
/// Odd `w = 2K+1` gives `{n0-K, …, n0+K}`; even `w = 2K` gives
/// `{n0-K+1, …, n0+K}` for sign `+` and `{n0-K, …, n0+K-1}` for sign `-`.
pub fn place_window_at(pos: &GridPosition, n_fft: usize, w: usize) -> Result<BeamspaceWindow> {
    BeamspaceWindow::from_start(window_start(pos, w), w, n_fft)
}

/// Places the window for `omega`. With zero-padding the anchor is the
/// nearest bin of the finer `N_FFT`-point grid.
pub fn place_window(
    omega: SpatialFrequency,
    cfg: &ArrayConfig,
    w: usize,
) -> Result<BeamspaceWindow> {
    let pos = locate_on(omega, cfg.n_fft());
    place_window_at(&pos, cfg.n_fft(), w)
}

/// `a(Ω) = [1, e^{jΩ}, …, e^{j(n-1)Ω}]^T`.
pub fn steering_vector(omega: f64, n: usize) -> ComplexVector {
    DVector::from_iterator(n, (0..n).map(|m| Complex64::from_polar(1.0, omega * m as f64)))
}

/// Normalized Dirichlet kernel `(1/n) Σ_{k<n} e^{jωk}`.
pub fn dirichlet(omega: f64, n: usize) -> Complex64 {
    let w = wrap_angle(omega);
    let nf = n as f64;
    let phase = Complex64::from_polar(1.0, (nf - 1.0) * w / 2.0);
    let den = (w / 2.0).sin();
    let ratio = if w.abs() < 1e-8 {
        1.0 - (nf * nf - 1.0) * w * w / 24.0
    } else {
        (nf * w / 2.0).sin() / (nf * den)
    };
    phase * ratio
}

/// `sin(πx)/(πx)` with `sinc(0) = 1`.
pub fn sinc(x: f64) -> f64 {
    let px = PI * x;
    if x.abs() < 1e-8 {
        1.0 - px * px / 6.0
    } else {
        px.sin() / px
    }
}

/// Explicit `W×N` matrix of the windowed, zero-padded unitary DFT.
pub fn transform_matrix(cfg: &ArrayConfig, win: &BeamspaceWindow) -> ComplexMatrix {
    let n = cfg.n_antennas();
    let n_fft = cfg.n_fft() as f64;
    let scale = 1.0 / n_fft.sqrt();
    DMatrix::from_fn(win.width(), n, |r, m| {
        let k = win.indices()[r] as f64;
        Complex64::from_polar(scale, -TAU * k * m as f64 / n_fft)
    })
}

fn check_window(cfg: &ArrayConfig, win: &BeamspaceWindow) -> Result<()> {
    if win.n_fft() != cfg.n_fft() {
        return Err(Error::InvalidWindow(format!(
            "window built for N_FFT={}, array uses N_FFT={}",
            win.n_fft(),
            cfg.n_fft()
        )));
    }
    Ok(())
}

/// Zero-pads `x` to `N_FFT`, applies the unitary DFT and keeps the window rows.
pub fn beamspace_transform(
    x: &ComplexVector,
    cfg: &ArrayConfig,
    win: &BeamspaceWindow,
) -> Result<ComplexVector> {
    if x.len() != cfg.n_antennas() {
        return Err(Error::LengthMismatch {
            expected: cfg.n_antennas(),
            actual: x.len(),
        });
    }
    check_window(cfg, win)?;
    let n_fft = cfg.n_fft();
    let mut buf = vec![Complex64::new(0.0, 0.0); n_fft];
    buf[..x.len()].copy_from_slice(x.as_slice());
    let fft = FftPlanner::new().plan_fft_forward(n_fft);
    fft.process(&mut buf);
    let scale = 1.0 / (n_fft as f64).sqrt();
    Ok(DVector::from_iterator(
        win.width(),
        win.indices().iter().map(|&k| buf[k] * scale),
    ))
}

/// Closed-form windowed response to a steering vector:
/// `(T a(Ω))_n = N/sqrt(N_FFT) · D_N(Ω - 2πn/N_FFT)`.
pub fn window_response(
    omega: f64,
    cfg: &ArrayConfig,
    win: &BeamspaceWindow,
) -> ComplexVector {
    let n = cfg.n_antennas();
    let n_fft = cfg.n_fft() as f64;
    let gain = n as f64 / n_fft.sqrt();
    DVector::from_iterator(
        win.width(),
        win.indices()
            .iter()
            .map(|&k| dirichlet(omega - TAU * k as f64 / n_fft, n) * gain),
    )
}

/// Fraction of a steering vector's energy landing in the window placed for it.
pub fn energy_capture(omega: SpatialFrequency, cfg: &ArrayConfig, w: usize) -> Result<f64> {
    let win = place_window(omega, cfg, w)?;
    let resp = window_response(omega.radians(), cfg, &win);
    Ok(resp.norm_squared() / cfg.n_antennas() as f64)
}

/// Sinc lower bound on [`energy_capture`] for the window placed at `pos`
/// (a base-grid position).
///
/// Without zero-padding the bound is `Σ sinc²(n - ν)`; with `2×` padding it
/// is `½ Σ sinc²(n/2 - ν)` over the window on the `2N` grid, where
/// `ν = n0 ± δ`.
pub fn capture_lower_bound(w: usize, pos: &GridPosition, zp_factor: usize) -> Result<f64> {
    if !(1..=2).contains(&zp_factor) {
        return Err(Error::InvalidArray(format!(
            "unsupported zero-pad factor {zp_factor}"
        )));
    }
    if w == 0 {
        return Err(Error::WindowWidth { width: w, n_fft: 0 });
    }
    let zp = zp_factor as f64;
    let nu = pos.continuous_index();
    let (n0, delta, sign) = split_index(nu * zp);
    let start = window_start(&GridPosition { n0, delta, sign }, w);
    let sum: f64 = (start..start + w as i64)
        .map(|n| sinc(n as f64 / zp - nu).powi(2))
        .sum();
    Ok(sum / zp)
}
