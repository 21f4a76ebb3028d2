//! Experiment configuration: a flat JSON object whose keys mirror the CLI
//! flags. Every field is optional so that files, presets and flags can be
//! layered; [`Settings::resolve`] fills in per-experiment defaults.

use std::fmt;
use std::path::{Path, PathBuf};

use beamspace_core::array::ArrayConfig;
use beamspace_core::scheduling::{fov_bound, max_users};
use beamspace_core::stochastic::MIN_MC_SAMPLES;
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    EnergyCapture,
    NoiseCapture,
    CosineSim,
    EigenConcentration,
    SirMargin,
    Scaling,
    SinrTable,
    WidebandSe,
    JensenCheck,
    MfScaling,
}

impl Experiment {
    pub fn id(self) -> &'static str {
        match self {
            Self::EnergyCapture => "energy-capture",
            Self::NoiseCapture => "noise-capture",
            Self::CosineSim => "cosine-sim",
            Self::EigenConcentration => "eigen-concentration",
            Self::SirMargin => "sir-margin",
            Self::Scaling => "scaling",
            Self::SinrTable => "sinr-table",
            Self::WidebandSe => "wideband-se",
            Self::JensenCheck => "jensen-check",
            Self::MfScaling => "mf-scaling",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Anchoring {
    #[default]
    Track,
    Fixed,
}

/// Layerable experiment parameters. The same struct is parsed from JSON and
/// from command-line flags.
#[derive(Clone, Debug, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[arg(skip)]
    pub experiment: Option<Experiment>,

    /// Antennas.
    #[arg(long)]
    pub n: Option<usize>,
    /// Antenna counts, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub n_list: Option<Vec<usize>>,
    /// Zero-padding factor (1 or 2).
    #[arg(long)]
    pub zp: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub zp_list: Option<Vec<usize>>,
    /// Window width in bins.
    #[arg(long)]
    pub w: Option<usize>,
    /// Guard interval in base-grid bins.
    #[arg(long)]
    pub guard: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub guard_list: Option<Vec<f64>>,
    /// Desired-user offset from the grid, in bins.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub delta_list: Option<Vec<f64>>,
    /// Sweep resolution.
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub k_users: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub mc_samples: Option<usize>,
    /// Skip the simulated-layout columns.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub no_simulate: Option<bool>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub snr_grid_db: Option<Vec<f64>>,
    #[arg(long)]
    pub snr_per_antenna_db: Option<f64>,
    /// Users per antenna in the scaling study.
    #[arg(long)]
    pub load: Option<f64>,
    /// Matrix dimension for jensen-check.
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub ensembles: Option<usize>,
    #[arg(long)]
    pub ensemble_size: Option<usize>,
    #[arg(long)]
    pub vectors: Option<usize>,
    #[arg(long)]
    pub carrier_hz: Option<f64>,
    /// Bandwidth as a fraction of the carrier.
    #[arg(long)]
    pub bandwidth_frac: Option<f64>,
    #[arg(long)]
    pub subcarriers: Option<usize>,
    #[arg(long)]
    pub noise_var: Option<f64>,
    #[arg(long)]
    pub paths_min: Option<usize>,
    #[arg(long)]
    pub paths_max: Option<usize>,
    /// Path-list CSV replacing the synthetic wideband ensemble.
    #[arg(long)]
    pub paths_file: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub anchoring: Option<Anchoring>,
    /// Emit the per-subcarrier SIR of this user instead of spectral efficiency.
    #[arg(long)]
    pub trace_user: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

macro_rules! layer {
    ($top:expr, $base:expr, $($f:ident),* $(,)?) => {
        ExperimentConfig { $($f: $top.$f.or($base.$f)),* }
    };
}

impl ExperimentConfig {
    pub fn from_json(text: &str, origin: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("{origin}: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text, &path.display().to_string())
    }

    /// Values set in `self` win over those in `base`. A scalar such as `n`
    /// set in `self` also hides a list (`n_list`) inherited from `base`.
    pub fn over(self, base: Self) -> Self {
        let hide = [
            self.n.is_some() && self.n_list.is_none(),
            self.zp.is_some() && self.zp_list.is_none(),
            self.guard.is_some() && self.guard_list.is_none(),
            self.delta.is_some() && self.delta_list.is_none(),
        ];
        let mut base = base;
        if hide[0] {
            base.n_list = None;
        }
        if hide[1] {
            base.zp_list = None;
        }
        if hide[2] {
            base.guard_list = None;
        }
        if hide[3] {
            base.delta_list = None;
        }
        layer!(
            self, base, experiment, n, n_list, zp, zp_list, w, guard, guard_list, delta,
            delta_list, points, k_users, seed, mc_samples, no_simulate, snr_grid_db,
            snr_per_antenna_db, load, dim, ensembles, ensemble_size, vectors, carrier_hz,
            bandwidth_frac, subcarriers, noise_var, paths_min, paths_max, paths_file,
            anchoring, trace_user, out, format,
        )
    }
}

pub const PRESETS: [(&str, &str); 5] = [
    ("table1", include_str!("../presets/table1.json")),
    ("fig5", include_str!("../presets/fig5.json")),
    ("fig6", include_str!("../presets/fig6.json")),
    ("fig8", include_str!("../presets/fig8.json")),
    ("fig10", include_str!("../presets/fig10.json")),
];

pub fn preset(name: &str) -> Result<ExperimentConfig, CliError> {
    let (_, text) = PRESETS.iter().find(|(k, _)| *k == name).ok_or_else(|| {
        let names: Vec<&str> = PRESETS.iter().map(|(k, _)| *k).collect();
        CliError::Config(format!("unknown preset {name:?} (available: {})", names.join(", ")))
    })?;
    ExperimentConfig::from_json(text, &format!("preset {name}"))
}

fn defaults(exp: Experiment) -> ExperimentConfig {
    let mut d = ExperimentConfig {
        experiment: Some(exp),
        n: Some(128),
        zp: Some(1),
        w: Some(5),
        guard: Some(2.0),
        delta: Some(0.25),
        points: Some(101),
        seed: Some(1),
        mc_samples: Some(200_000),
        no_simulate: Some(false),
        snr_grid_db: Some((0..=8).map(|i| 5.0 * i as f64).collect()),
        snr_per_antenna_db: Some(40.0),
        load: Some(0.48),
        dim: Some(5),
        ensembles: Some(10_000),
        ensemble_size: Some(8),
        vectors: Some(4),
        carrier_hz: Some(28e9),
        bandwidth_frac: Some(0.2),
        subcarriers: Some(64),
        noise_var: Some(1.0),
        paths_min: Some(24),
        paths_max: Some(36),
        anchoring: Some(Anchoring::Track),
        format: Some(Format::Csv),
        ..Default::default()
    };
    match exp {
        Experiment::EnergyCapture => d.w = Some(4),
        Experiment::NoiseCapture => {
            d.w = Some(8);
            d.delta = Some(0.3);
        }
        Experiment::CosineSim => d.points = Some(2048),
        Experiment::Scaling => d.n_list = Some(vec![32, 64, 128, 256]),
        Experiment::SinrTable => {
            d.k_users = Some(61);
            d.zp_list = Some(vec![1, 2]);
        }
        Experiment::WidebandSe => {
            d.n = Some(32);
            d.k_users = Some(16);
            d.guard = Some(0.95);
        }
        Experiment::MfScaling => {
            d.n_list = Some(vec![32, 64, 128, 256]);
            d.mc_samples = Some(1_000_000);
        }
        Experiment::SirMargin | Experiment::EigenConcentration | Experiment::JensenCheck => {}
    }
    d
}

/// Fully resolved parameters for one run.
#[derive(Clone, Debug, PartialEq)]
pub struct Settings {
    pub experiment: Experiment,
    pub n_list: Vec<usize>,
    pub zp_list: Vec<usize>,
    pub w: usize,
    pub guard_list: Vec<f64>,
    pub delta_list: Vec<f64>,
    pub points: usize,
    pub k_users: Option<usize>,
    pub seed: u64,
    pub mc_samples: usize,
    pub simulate: bool,
    pub snr_grid_db: Vec<f64>,
    pub snr_per_antenna_db: f64,
    pub load: f64,
    pub dim: usize,
    pub ensembles: usize,
    pub ensemble_size: usize,
    pub vectors: usize,
    pub carrier_hz: f64,
    pub bandwidth_frac: f64,
    pub subcarriers: usize,
    pub noise_var: f64,
    pub paths_min: usize,
    pub paths_max: usize,
    pub paths_file: Option<PathBuf>,
    pub anchoring: Anchoring,
    pub trace_user: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Format,
}

impl Settings {
    pub fn resolve(cfg: &ExperimentConfig) -> Result<Self, CliError> {
        let exp = cfg
            .experiment
            .ok_or_else(|| CliError::Config("no experiment given".into()))?;
        let c = cfg.clone().over(defaults(exp));
        let list_or = |list: Option<Vec<usize>>, one: Option<usize>| list.unwrap_or_else(|| one.into_iter().collect());
        let flist_or = |list: Option<Vec<f64>>, one: Option<f64>| list.unwrap_or_else(|| one.into_iter().collect());
        let n_list = list_or(c.n_list, c.n);
        let zp_list = list_or(c.zp_list, c.zp);
        Ok(Self {
            experiment: exp,
            n_list,
            zp_list,
            w: c.w.unwrap_or(5),
            guard_list: flist_or(c.guard_list, c.guard),
            delta_list: flist_or(c.delta_list, c.delta),
            points: c.points.unwrap_or(101),
            k_users: c.k_users,
            seed: c.seed.unwrap_or(1),
            mc_samples: c.mc_samples.unwrap_or(200_000),
            simulate: !c.no_simulate.unwrap_or(false),
            snr_grid_db: c.snr_grid_db.unwrap_or_default(),
            snr_per_antenna_db: c.snr_per_antenna_db.unwrap_or(40.0),
            load: c.load.unwrap_or(0.48),
            dim: c.dim.unwrap_or(5),
            ensembles: c.ensembles.unwrap_or(10_000),
            ensemble_size: c.ensemble_size.unwrap_or(8),
            vectors: c.vectors.unwrap_or(4),
            carrier_hz: c.carrier_hz.unwrap_or(28e9),
            bandwidth_frac: c.bandwidth_frac.unwrap_or(0.2),
            subcarriers: c.subcarriers.unwrap_or(64),
            noise_var: c.noise_var.unwrap_or(1.0),
            paths_min: c.paths_min.unwrap_or(24),
            paths_max: c.paths_max.unwrap_or(36),
            paths_file: c.paths_file,
            anchoring: c.anchoring.unwrap_or_default(),
            trace_user: c.trace_user,
            out: c.out,
            format: c.format.unwrap_or_default(),
        })
    }
}

/// Problems that would stop `cfg` from running. Empty iff runnable.
pub fn validate(cfg: &ExperimentConfig) -> Vec<String> {
    let s = match Settings::resolve(cfg) {
        Ok(s) => s,
        Err(e) => return vec![e.to_string()],
    };
    let mut diags = Vec::new();
    let exp = s.experiment;
    let uses_mc = matches!(
        exp,
        Experiment::EigenConcentration | Experiment::SirMargin | Experiment::Scaling | Experiment::SinrTable | Experiment::MfScaling
    );
    let uses_window = !matches!(exp, Experiment::JensenCheck | Experiment::MfScaling);
    let uses_guard = matches!(
        exp,
        Experiment::EigenConcentration | Experiment::SirMargin | Experiment::Scaling | Experiment::SinrTable | Experiment::WidebandSe
    );

    if s.n_list.is_empty() {
        diags.push("no array size given".into());
    }
    for &n in &s.n_list {
        if n < 2 {
            diags.push(format!("array size {n} too small, need at least 2 antennas"));
        }
    }
    if s.zp_list.is_empty() {
        diags.push("no zero-pad factor given".into());
    }
    for &zp in &s.zp_list {
        if !(1..=2).contains(&zp) {
            diags.push(format!("unsupported zero-pad factor {zp} (supported: 1, 2)"));
        }
    }
    if uses_window {
        for &n in &s.n_list {
            for &zp in s.zp_list.iter().filter(|z| (1..=2).contains(*z)) {
                if let Ok(a) = ArrayConfig::new(n, zp) {
                    if s.w == 0 || s.w > a.n_fft() {
                        diags.push(format!("window width {} out of range 1..={} for N={n}, zp={zp}", s.w, a.n_fft()));
                    }
                }
            }
        }
    }
    if s.delta_list.is_empty() {
        diags.push("no grid offset given".into());
    }
    for &d in &s.delta_list {
        if !(-0.5..=0.5).contains(&d) {
            diags.push(format!("grid offset {d} outside [-0.5, 0.5]"));
        }
    }
    if uses_guard {
        if s.guard_list.is_empty() {
            diags.push("no guard interval given".into());
        }
        for &g in &s.guard_list {
            if !(g >= 0.0 && g.is_finite()) {
                diags.push(format!("guard interval {g} must be a finite non-negative bin count"));
                continue;
            }
            for &n in s.n_list.iter().filter(|&&n| n >= 2) {
                if 2.0 * g >= n as f64 {
                    diags.push(format!("guard of {g} bins leaves no room for interferers at N={n}"));
                }
            }
        }
    }
    if uses_mc && s.mc_samples < MIN_MC_SAMPLES {
        diags.push(format!("mc_samples {} below the minimum of {MIN_MC_SAMPLES}", s.mc_samples));
    }
    if matches!(exp, Experiment::SinrTable | Experiment::WidebandSe) {
        match s.k_users {
            None => diags.push("k_users is required".into()),
            Some(k) if k < 2 && exp == Experiment::SinrTable => diags.push(format!("k_users {k} too small, need at least 2")),
            Some(0) => diags.push("k_users must be positive".into()),
            Some(k) => {
                for &g in &s.guard_list {
                    for &n in &s.n_list {
                        if let Some(k_max) = max_users(n, g) {
                            if k > k_max {
                                diags.push(format!(
                                    "K={k} users cannot respect a {g}-bin guard on N={n}: K_max = {k_max}"
                                ));
                            }
                        }
                    }
                }
            }
        }
    }
    if exp == Experiment::Scaling {
        if s.n_list.len() < 2 || s.n_list.windows(2).any(|p| p[0] >= p[1]) {
            diags.push("scaling needs at least two strictly increasing array sizes".into());
        }
        if !(s.load > 0.0 && s.load.is_finite()) {
            diags.push(format!("load {} must be positive", s.load));
        }
    }
    if exp == Experiment::SinrTable && s.delta_list.len() != 1 {
        diags.push("sinr-table takes a single grid offset".into());
    }
    if matches!(exp, Experiment::EnergyCapture | Experiment::CosineSim) && s.points < 2 {
        diags.push(format!("points {} too small, need at least 2", s.points));
    }
    if exp == Experiment::JensenCheck && [s.dim, s.ensemble_size, s.vectors, s.ensembles].contains(&0) {
        diags.push("dim, ensembles, ensemble_size and vectors must be positive".into());
    }
    if exp == Experiment::MfScaling && s.mc_samples == 0 {
        diags.push("mc_samples must be positive".into());
    }
    if exp == Experiment::WidebandSe {
        if s.snr_grid_db.is_empty() || s.snr_grid_db.iter().any(|x| !x.is_finite()) {
            diags.push("snr_grid_db must be a non-empty list of finite values".into());
        }
        if !(s.carrier_hz > 0.0 && s.carrier_hz.is_finite()) {
            diags.push(format!("carrier_hz {} must be positive", s.carrier_hz));
        }
        if !(0.0..2.0).contains(&s.bandwidth_frac) {
            diags.push(format!("bandwidth_frac {} outside [0, 2)", s.bandwidth_frac));
        }
        if s.subcarriers == 0 {
            diags.push("subcarriers must be positive".into());
        }
        if !(s.noise_var > 0.0 && s.noise_var.is_finite()) {
            diags.push(format!("noise_var {} must be positive", s.noise_var));
        }
        if s.paths_min == 0 || s.paths_min > s.paths_max {
            diags.push(format!("paths range {}..={} is empty", s.paths_min, s.paths_max));
        }
        if s.n_list.len() != 1 || s.zp_list.len() != 1 || s.guard_list.len() != 1 {
            diags.push("wideband-se takes a single n, zp and guard".into());
        }
        if let (Some(u), Some(k)) = (s.trace_user, s.k_users) {
            if s.paths_file.is_none() && u >= k {
                diags.push(format!("trace_user {u} out of range for {k} users"));
            }
        }
        if let Some(p) = &s.paths_file {
            if !p.is_file() {
                diags.push(format!("paths_file {} not found", p.display()));
            }
        }
        let fov = fov_bound(s.carrier_hz * s.bandwidth_frac, s.carrier_hz);
        if !(fov > 0.0) {
            diags.push("bandwidth leaves an empty field of view".into());
        }
    }
    diags
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with(exp: Experiment) -> ExperimentConfig {
        ExperimentConfig { experiment: Some(exp), ..Default::default() }
    }

    #[test]
    fn presets_parse_and_validate() {
        for (name, _) in PRESETS {
            let cfg = preset(name).unwrap();
            assert!(cfg.experiment.is_some(), "{name}");
            assert_eq!(validate(&cfg), Vec::<String>::new(), "{name}");
        }
    }

    #[test]
    fn defaults_validate_for_every_experiment() {
        for exp in Experiment::value_variants() {
            assert_eq!(validate(&with(*exp)), Vec::<String>::new(), "{exp}");
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = ExperimentConfig::from_json(r#"{"experiment":"scaling","nn":3}"#, "t").unwrap_err();
        assert!(err.to_string().contains("unknown field"), "{err}");
    }

    #[test]
    fn zero_pad_three_is_diagnosed() {
        let cfg = ExperimentConfig { zp: Some(3), ..with(Experiment::EnergyCapture) };
        let d = validate(&cfg);
        assert!(d.iter().any(|m| m.contains("unsupported zero-pad factor")), "{d:?}");
    }

    #[test]
    fn too_many_users_cites_k_max() {
        let cfg = ExperimentConfig { k_users: Some(70), ..with(Experiment::SinrTable) };
        let d = validate(&cfg);
        assert!(d.iter().any(|m| m.contains("K_max = 63")), "{d:?}");
    }

    #[test]
    fn flags_override_file_values() {
        let file = ExperimentConfig { n: Some(64), w: Some(3), ..with(Experiment::SirMargin) };
        let flags = ExperimentConfig { n: Some(32), ..Default::default() };
        let s = Settings::resolve(&flags.over(file)).unwrap();
        assert_eq!(s.n_list, vec![32]);
        assert_eq!(s.w, 3);
    }

    #[test]
    fn scalar_overrides_default_list() {
        let cfg = ExperimentConfig { zp: Some(2), ..with(Experiment::SinrTable) };
        assert_eq!(Settings::resolve(&cfg).unwrap().zp_list, vec![2]);
        assert_eq!(Settings::resolve(&with(Experiment::SinrTable)).unwrap().zp_list, vec![1, 2]);
        let flags = ExperimentConfig { zp: Some(1), ..Default::default() };
        let layered = flags.over(preset("table1").unwrap());
        assert_eq!(Settings::resolve(&layered).unwrap().zp_list, vec![1]);
    }

    #[test]
    fn missing_experiment_is_a_diagnostic() {
        assert_eq!(validate(&ExperimentConfig::default()).len(), 1);
    }
}
