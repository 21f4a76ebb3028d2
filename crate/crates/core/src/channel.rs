//! Narrowband and wideband per-user channels built from propagation paths.
//!
//! Path datasets are read from and written to a CSV file with the header
//!
//! ```text
//! user_id,path_id,gain_db,phase_rad,delay_ns,aoa_deg
//! ```
//!
//! where the complex gain is `10^(gain_db/20) · e^{j phase_rad}`.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fs::File;
use std::io::{Read, Write};
use std::ops::RangeInclusive;
use std::path::Path;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;

use crate::array::{steering_vector, wrap_angle, ComplexVector, SpatialFrequency};
use crate::error::{Error, Result};

pub const PATH_CSV_HEADER: [&str; 6] = [
    "user_id",
    "path_id",
    "gain_db",
    "phase_rad",
    "delay_ns",
    "aoa_deg",
];

/// One propagation ray.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathRecord {
    pub gain: Complex64,
    /// Seconds.
    pub delay: f64,
    /// Angle of arrival in radians, `|aoa| ≤ π/2`.
    pub aoa: f64,
}

impl PathRecord {
    pub fn new(gain: Complex64, delay: f64, aoa: f64) -> Result<Self> {
        if !gain.re.is_finite() || !gain.im.is_finite() {
            return Err(Error::InvalidParameter("path gain is not finite".into()));
        }
        if !(delay >= 0.0 && delay.is_finite()) {
            return Err(Error::InvalidParameter(format!("invalid path delay {delay}")));
        }
        if !(aoa.abs() <= FRAC_PI_2) {
            return Err(Error::InvalidParameter(format!(
                "angle of arrival {:.3} deg outside [-90, 90]",
                aoa.to_degrees()
            )));
        }
        Ok(Self { gain, delay, aoa })
    }

    /// `π sin θ`, in `[-π, π]` (not wrapped).
    pub fn omega_ref(&self) -> f64 {
        PI * self.aoa.sin()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct UserChannel {
    pub user_id: u32,
    pub paths: Vec<PathRecord>,
}

impl UserChannel {
    pub fn new(user_id: u32, paths: Vec<PathRecord>) -> Result<Self> {
        if paths.is_empty() {
            return Err(Error::InvalidParameter(format!("user {user_id} has no paths")));
        }
        Ok(Self { user_id, paths })
    }

    /// Index of the strongest path; ties go to the lowest index.
    pub fn dominant_index(&self) -> usize {
        let mut best = 0;
        for (i, p) in self.paths.iter().enumerate().skip(1) {
            if p.gain.norm() > self.paths[best].gain.norm() {
                best = i;
            }
        }
        best
    }

    pub fn dominant(&self) -> &PathRecord {
        &self.paths[self.dominant_index()]
    }

    /// Same user keeping only the dominant path.
    pub fn dominant_only(&self) -> Self {
        Self {
            user_id: self.user_id,
            paths: vec![*self.dominant()],
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            user_id: self.user_id,
            paths: self
                .paths
                .iter()
                .map(|p| PathRecord {
                    gain: p.gain * s,
                    ..*p
                })
                .collect(),
        }
    }
}

/// Carrier, bandwidth and subcarrier grid of a wideband system.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WidebandConfig {
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub n_subcarriers: usize,
    /// Noise variance per complex dimension, `2σ²`.
    pub noise_var: f64,
}

impl WidebandConfig {
    pub fn new(carrier_hz: f64, bandwidth_hz: f64, n_subcarriers: usize, noise_var: f64) -> Result<Self> {
        if !(carrier_hz > 0.0) {
            return Err(Error::InvalidParameter(format!("carrier {carrier_hz} Hz")));
        }
        if !(bandwidth_hz >= 0.0 && bandwidth_hz < 2.0 * carrier_hz) {
            return Err(Error::InvalidParameter(format!(
                "bandwidth {bandwidth_hz} Hz must lie in [0, 2·f_c)"
            )));
        }
        if n_subcarriers == 0 {
            return Err(Error::InvalidParameter("need at least one subcarrier".into()));
        }
        if !(noise_var > 0.0) {
            return Err(Error::InvalidParameter(format!("noise variance {noise_var}")));
        }
        Ok(Self {
            carrier_hz,
            bandwidth_hz,
            n_subcarriers,
            noise_var,
        })
    }

    /// `B = fraction·f_c`.
    pub fn fractional(carrier_hz: f64, fraction: f64, n_subcarriers: usize, noise_var: f64) -> Result<Self> {
        Self::new(carrier_hz, fraction * carrier_hz, n_subcarriers, noise_var)
    }

    /// Midpoint of the m-th of M equal slices of `[-B/2, B/2]`.
    pub fn subcarrier_frequency(&self, m: usize) -> f64 {
        let b = self.bandwidth_hz;
        -b / 2.0 + b * (m as f64 + 0.5) / self.n_subcarriers as f64
    }

    pub fn subcarrier_frequencies(&self) -> Vec<f64> {
        (0..self.n_subcarriers)
            .map(|m| self.subcarrier_frequency(m))
            .collect()
    }

    /// `1 - B/(2 f_c)`: spatial-frequency scale at the lowest frequency.
    pub fn lowest_frequency_scale(&self) -> f64 {
        1.0 - self.bandwidth_hz / (2.0 * self.carrier_hz)
    }
}

/// Per-user receive powers.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerProfile(Vec<f64>);

impl PowerProfile {
    pub fn new(powers: Vec<f64>) -> Result<Self> {
        if let Some(p) = powers.iter().find(|p| !(**p > 0.0 && p.is_finite())) {
            return Err(Error::InvalidParameter(format!("receive power {p} must be positive")));
        }
        Ok(Self(powers))
    }

    pub fn equal(k: usize, p: f64) -> Result<Self> {
        Self::new(vec![p; k])
    }

    pub fn powers(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Beam squint: `Ω(f) = Ω_ref (1 + f/f_c)`, wrapped.
pub fn spatial_frequency_at(omega_ref: f64, f: f64, carrier_hz: f64) -> SpatialFrequency {
    SpatialFrequency::new(omega_ref * (1.0 + f / carrier_hz))
}

/// `h(f) = Σ_l α_l a(Ω_l(f)) e^{-j2π(f_c+f)τ_l}`.
pub fn channel_at(user: &UserChannel, f: f64, n: usize, wcfg: &WidebandConfig) -> ComplexVector {
    let mut h = DVector::zeros(n);
    for p in &user.paths {
        if p.gain == Complex64::new(0.0, 0.0) {
            continue;
        }
        let omega = spatial_frequency_at(p.omega_ref(), f, wcfg.carrier_hz).radians();
        // reduce the delay phase before forming the exponential
        let cycles = (wcfg.carrier_hz + f) * p.delay;
        let phase = -TAU * (cycles - cycles.round());
        let coef = p.gain * Complex64::from_polar(1.0, phase);
        h += steering_vector(omega, n) * coef;
    }
    h
}

fn parse_err(path: &Path, line: u64, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

/// Reads a path CSV from any reader; `name` labels errors.
pub fn parse_paths<R: Read>(reader: R, name: &Path) -> Result<Vec<UserChannel>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        None => return Err(Error::EmptyFile(name.to_path_buf())),
        Some(h) => h?,
    };
    let names: Vec<&str> = header.iter().collect();
    if names != PATH_CSV_HEADER {
        return Err(parse_err(
            name,
            1,
            format!("expected header `{}`, got `{}`", PATH_CSV_HEADER.join(","), names.join(",")),
        ));
    }

    let mut users: BTreeMap<u32, Vec<PathRecord>> = BTreeMap::new();
    for rec in records {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() != PATH_CSV_HEADER.len() {
            return Err(parse_err(
                name,
                line,
                format!("expected {} fields, got {}", PATH_CSV_HEADER.len(), rec.len()),
            ));
        }
        let field = |i: usize| -> Result<f64> {
            rec[i].parse::<f64>().map_err(|_| {
                parse_err(name, line, format!("{}: cannot parse `{}`", PATH_CSV_HEADER[i], &rec[i]))
            })
        };
        let user_id: u32 = rec[0]
            .parse()
            .map_err(|_| parse_err(name, line, format!("user_id: cannot parse `{}`", &rec[0])))?;
        rec[1]
            .parse::<u32>()
            .map_err(|_| parse_err(name, line, format!("path_id: cannot parse `{}`", &rec[1])))?;
        let gain_db = field(2)?;
        let phase = field(3)?;
        let delay_ns = field(4)?;
        let aoa_deg = field(5)?;
        if gain_db.is_nan() || gain_db == f64::INFINITY || !phase.is_finite() {
            return Err(parse_err(name, line, "gain must be finite"));
        }
        if !(aoa_deg.abs() <= 90.0) {
            return Err(parse_err(name, line, format!("aoa_deg {aoa_deg} outside [-90, 90]")));
        }
        let gain = Complex64::from_polar(10f64.powf(gain_db / 20.0), phase);
        let record = PathRecord::new(gain, delay_ns * 1e-9, aoa_deg.to_radians())
            .map_err(|e| parse_err(name, line, e.to_string()))?;
        users.entry(user_id).or_default().push(record);
    }
    if users.is_empty() {
        return Err(Error::EmptyFile(name.to_path_buf()));
    }
    users
        .into_iter()
        .map(|(id, paths)| UserChannel::new(id, paths))
        .collect()
}

pub fn load_paths(path: impl AsRef<Path>) -> Result<Vec<UserChannel>> {
    let path = path.as_ref();
    let file = File::open(path)?;
    parse_paths(file, path)
}

pub fn write_paths<W: Write>(writer: W, users: &[UserChannel]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(PATH_CSV_HEADER)?;
    for u in users {
        for (i, p) in u.paths.iter().enumerate() {
            w.write_record([
                u.user_id.to_string(),
                i.to_string(),
                (20.0 * p.gain.norm().log10()).to_string(),
                p.gain.arg().to_string(),
                (p.delay * 1e9).to_string(),
                p.aoa.to_degrees().to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn save_paths(path: impl AsRef<Path>, users: &[UserChannel]) -> Result<()> {
    write_paths(File::create(path)?, users)
}

/// Minimum circular spacing between dominant spatial frequencies, measured
/// after scaling every `Ω_ref` by `frequency_scale`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DominantSpacing {
    pub min_separation: f64,
    pub frequency_scale: f64,
}

/// Parameters of the synthetic multipath generator.
///
/// Each user gets a 0 dB dominant path at zero delay with AoA uniform in
/// `[-fov, fov]`, plus secondary paths whose gains are uniform in dB over
/// `[-secondary_floor_db, -dominant_margin_db]` relative to it, with uniform
/// AoA in the same field of view, uniform delays in `[0, delay_spread]` and
/// uniform phases. A margin at or beyond the floor puts every secondary path
/// at exactly `-dominant_margin_db` (an infinite margin silences them).
#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub n_users: usize,
    pub paths_per_user: RangeInclusive<usize>,
    pub dominant_margin_db: f64,
    pub secondary_floor_db: f64,
    /// Seconds.
    pub delay_spread: f64,
    /// Half-width of the field of view in radians.
    pub fov: f64,
    pub spacing: Option<DominantSpacing>,
}

impl SynthConfig {
    pub fn new(n_users: usize, paths_per_user: RangeInclusive<usize>, fov: f64) -> Self {
        Self {
            n_users,
            paths_per_user,
            dominant_margin_db: 6.0,
            secondary_floor_db: 40.0,
            delay_spread: 100e-9,
            fov,
            spacing: None,
        }
    }
}

const MAX_ATTEMPTS: usize = 10_000;
const MAX_RESTARTS: usize = 100;

fn circular_distance(a: f64, b: f64) -> f64 {
    wrap_angle(a - b).abs()
}

fn draw_dominant_aoas<R: Rng + ?Sized>(rng: &mut R, cfg: &SynthConfig) -> Result<Vec<f64>> {
    let mut best = 0;
    for _ in 0..MAX_RESTARTS {
        let mut aoas: Vec<f64> = Vec::with_capacity(cfg.n_users);
        'user: while aoas.len() < cfg.n_users {
            for _ in 0..MAX_ATTEMPTS {
                let theta = rng.random_range(-cfg.fov..=cfg.fov);
                let ok = match cfg.spacing {
                    None => true,
                    Some(s) => {
                        let om = PI * theta.sin() * s.frequency_scale;
                        aoas.iter().all(|&t| {
                            circular_distance(om, PI * t.sin() * s.frequency_scale) > s.min_separation
                        })
                    }
                };
                if ok {
                    aoas.push(theta);
                    continue 'user;
                }
            }
            best = best.max(aoas.len());
            break;
        }
        if aoas.len() == cfg.n_users {
            return Ok(aoas);
        }
    }
    Err(Error::Infeasible {
        requested: cfg.n_users,
        achieved: best,
        reason: "dominant-path spacing in the field of view".into(),
    })
}

/// Seeded synthetic stand-in for a measured multipath dataset.
pub fn synth_multipath<R: Rng + ?Sized>(rng: &mut R, cfg: &SynthConfig) -> Result<Vec<UserChannel>> {
    let (lo, hi) = (*cfg.paths_per_user.start(), *cfg.paths_per_user.end());
    if lo < 1 || hi > 64 || lo > hi {
        return Err(Error::InvalidParameter(format!(
            "paths per user {lo}..={hi} must lie within 1..=64"
        )));
    }
    if !(cfg.fov > 0.0 && cfg.fov <= FRAC_PI_2) {
        return Err(Error::FieldOfView(format!(
            "half-width {:.2} deg must lie in (0, 90]",
            cfg.fov.to_degrees()
        )));
    }
    if !(cfg.dominant_margin_db >= 0.0) {
        return Err(Error::InvalidParameter("dominant margin must be >= 0 dB".into()));
    }
    if !(cfg.delay_spread >= 0.0) {
        return Err(Error::InvalidParameter("delay spread must be >= 0".into()));
    }
    let aoas = draw_dominant_aoas(rng, cfg)?;
    let mut users = Vec::with_capacity(cfg.n_users);
    for (k, theta) in aoas.into_iter().enumerate() {
        let n_paths = rng.random_range(lo..=hi);
        let mut paths = Vec::with_capacity(n_paths);
        paths.push(PathRecord {
            gain: Complex64::from_polar(1.0, rng.random_range(0.0..TAU)),
            delay: 0.0,
            aoa: theta,
        });
        for _ in 1..n_paths {
            let db = if cfg.dominant_margin_db >= cfg.secondary_floor_db {
                -cfg.dominant_margin_db
            } else {
                -rng.random_range(cfg.dominant_margin_db..cfg.secondary_floor_db)
            };
            let mag = 10f64.powf(db / 20.0);
            paths.push(PathRecord {
                gain: Complex64::from_polar(mag, rng.random_range(0.0..TAU)),
                delay: rng.random_range(0.0..=cfg.delay_spread),
                aoa: rng.random_range(-cfg.fov..=cfg.fov),
            });
        }
        users.push(UserChannel::new(k as u32, paths)?);
    }
    Ok(users)
}

/// Rescales each user so its dominant path has beamformed SNR
/// `|α_dom|² N / noise_var` equal to `target_snr_db`.
pub fn normalize_dominant_snr(
    users: &[UserChannel],
    target_snr_db: f64,
    n: usize,
    noise_var: f64,
) -> Result<Vec<UserChannel>> {
    let target = 10f64.powf(target_snr_db / 10.0);
    users
        .iter()
        .map(|u| {
            let g2 = u.dominant().gain.norm_sqr();
            if !(g2 > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "user {} has zero dominant gain",
                    u.user_id
                )));
            }
            Ok(u.scaled((target * noise_var / (n as f64 * g2)).sqrt()))
        })
        .collect()
}

/// Beamformed SNR of the dominant path, linear.
pub fn dominant_snr(user: &UserChannel, n: usize, noise_var: f64) -> f64 {
    user.dominant().gain.norm_sqr() * n as f64 / noise_var
}
