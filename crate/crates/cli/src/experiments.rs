//! One function per experiment, each turning resolved [`Settings`] into a
//! [`ResultTable`].

use std::f64::consts::{PI, TAU};

use beamspace_core::array::{
    capture_lower_bound, energy_capture, locate_on, place_window, ArrayConfig, SpatialFrequency,
};
use beamspace_core::channel::{load_paths, UserChannel, WidebandConfig};
use beamspace_core::receiver::{noise_limited_capture, normalized_signature, two_bin_mf_stats};
use beamspace_core::stochastic::{
    db, desired_at_offset, eigen_report, estimate_mean_interference, scaling_study, sinr_table,
    sir_margin, table1_scenarios, verify_operator_jensen, ScalingConfig, SinrTableConfig,
};
use beamspace_core::wideband::{
    bench_ensemble, beamspace_lmmse_se, full_array_lmmse_se, sir_trace, unconstrained_se,
    WindowAnchoring,
};
use beamspace_core::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{Anchoring, Experiment, Settings};
use crate::output::{Cell, ResultTable};

pub fn run_experiment(s: &Settings) -> Result<ResultTable> {
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    match s.experiment {
        Experiment::EnergyCapture => energy_capture_table(s),
        Experiment::NoiseCapture => noise_capture_table(s),
        Experiment::CosineSim => cosine_sim_table(s),
        Experiment::EigenConcentration => eigen_table(s, &mut rng),
        Experiment::SirMargin => sir_margin_table(s, &mut rng),
        Experiment::Scaling => scaling_table(s, &mut rng),
        Experiment::SinrTable => sinr_table_rows(s, &mut rng),
        Experiment::WidebandSe => wideband_table(s, &mut rng),
        Experiment::JensenCheck => jensen_table(s, &mut rng),
        Experiment::MfScaling => mf_table(s, &mut rng),
    }
}

fn grid(points: usize, lo: f64, hi: f64, closed: bool) -> Vec<f64> {
    let steps = if closed { points - 1 } else { points };
    (0..points).map(|i| lo + (hi - lo) * i as f64 / steps as f64).collect()
}

fn energy_capture_table(s: &Settings) -> Result<ResultTable> {
    let mut t = ResultTable::new(s.experiment, s.seed, &["n", "zp", "w", "delta", "capture", "bound"]);
    for &n in &s.n_list {
        for &zp in &s.zp_list {
            let cfg = ArrayConfig::new(n, zp)?;
            for d in grid(s.points, 0.0, 0.5, true) {
                let om = SpatialFrequency::from_bins(d, n);
                let cap = energy_capture(om, &cfg, s.w)?;
                let bound = capture_lower_bound(s.w, &locate_on(om, n), zp)?;
                t.push(vec![n.into(), zp.into(), s.w.into(), d.into(), cap.into(), bound.into()]);
            }
        }
    }
    Ok(t)
}

fn noise_capture_table(s: &Settings) -> Result<ResultTable> {
    let mut t = ResultTable::new(s.experiment, s.seed, &["n", "zp", "delta", "w", "eta"]);
    for &n in &s.n_list {
        for &zp in &s.zp_list {
            let cfg = ArrayConfig::new(n, zp)?;
            for &d in &s.delta_list {
                let om = SpatialFrequency::from_bins(d, n);
                for w in 1..=s.w {
                    let eta = noise_limited_capture(om, &cfg, w)?;
                    t.push(vec![n.into(), zp.into(), d.into(), w.into(), eta.into()]);
                }
            }
        }
    }
    Ok(t)
}

fn cosine_sim_table(s: &Settings) -> Result<ResultTable> {
    let mut t = ResultTable::new(s.experiment, s.seed, &["n", "zp", "w", "delta", "omega", "cosine"]);
    for &n in &s.n_list {
        for &zp in &s.zp_list {
            let cfg = ArrayConfig::new(n, zp)?;
            for &d in &s.delta_list {
                let desired = desired_at_offset(d, n);
                let win = place_window(desired, &cfg, s.w)?;
                let u1 = normalized_signature(desired.radians(), &cfg, &win);
                for om in grid(s.points, -PI, PI, false) {
                    let u = normalized_signature(om, &cfg, &win);
                    let den = u1.norm() * u.norm();
                    let cos = if den > 0.0 { u1.dotc(&u).norm() / den } else { 0.0 };
                    t.push(vec![n.into(), zp.into(), s.w.into(), d.into(), om.into(), cos.into()]);
                }
            }
        }
    }
    Ok(t)
}

fn eigen_table(s: &Settings, rng: &mut ChaCha8Rng) -> Result<ResultTable> {
    let mut t = ResultTable::new(
        s.experiment,
        s.seed,
        &["n", "zp", "w", "guard_bins", "delta", "mode", "eigenvalue", "cumulative_share", "projection", "total_db"],
    );
    for &n in &s.n_list {
        for &zp in &s.zp_list {
            let cfg = ArrayConfig::new(n, zp)?;
            for &g in &s.guard_list {
                for &d in &s.delta_list {
                    let model = estimate_mean_interference(desired_at_offset(d, n), &cfg, s.w, g, rng, s.mc_samples)?;
                    let rep = eigen_report(&model, &model.desired_signature())?;
                    let total = rep.total_db();
                    for i in 0..rep.eigenvalues.len() {
                        t.push(vec![
                            n.into(),
                            zp.into(),
                            s.w.into(),
                            g.into(),
                            d.into(),
                            (i + 1).into(),
                            rep.eigenvalues[i].into(),
                            rep.cumulative_shares[i].into(),
                            rep.projections[i].into(),
                            total.into(),
                        ]);
                    }
                }
            }
        }
    }
    Ok(t)
}

fn sir_margin_table(s: &Settings, rng: &mut ChaCha8Rng) -> Result<ResultTable> {
    let mut t = ResultTable::new(s.experiment, s.seed, &["n", "zp", "w", "guard_bins", "delta", "margin_db"]);
    for &n in &s.n_list {
        for &zp in &s.zp_list {
            let cfg = ArrayConfig::new(n, zp)?;
            for &g in &s.guard_list {
                for &d in &s.delta_list {
                    let model = estimate_mean_interference(desired_at_offset(d, n), &cfg, s.w, g, rng, s.mc_samples)?;
                    let margin = db(sir_margin(&model.desired_signature(), &model)?);
                    t.push(vec![n.into(), zp.into(), s.w.into(), g.into(), d.into(), margin.into()]);
                }
            }
        }
    }
    Ok(t)
}

fn scaling_table(s: &Settings, rng: &mut ChaCha8Rng) -> Result<ResultTable> {
    let mut t = ResultTable::new(
        s.experiment,
        s.seed,
        &["n", "w", "guard_bins", "delta", "k_users", "margin_db", "predicted_db", "sim_min_db", "sim_mean_db", "slope"],
    );
    for &g in &s.guard_list {
        for &d in &s.delta_list {
            let cfg = ScalingConfig {
                n_list: s.n_list.clone(),
                w: s.w,
                guard_bins: g,
                delta: d,
                mc_samples: s.mc_samples,
                load: s.load,
                snr_per_antenna_db: s.snr_per_antenna_db,
                simulate: s.simulate,
            };
            let study = scaling_study(rng, &cfg)?;
            for r in &study.rows {
                t.push(vec![
                    r.n.into(),
                    s.w.into(),
                    g.into(),
                    d.into(),
                    r.k_users.into(),
                    r.margin_db.into(),
                    r.predicted_db.into(),
                    r.sim_min_db.into(),
                    r.sim_mean_db.into(),
                    study.slope.into(),
                ]);
            }
        }
    }
    Ok(t)
}

fn sinr_table_rows(s: &Settings, rng: &mut ChaCha8Rng) -> Result<ResultTable> {
    let mut t = ResultTable::new(
        s.experiment,
        s.seed,
        &[
            "n", "w", "guard_bins", "k_users", "delta", "label", "zp", "desired_snr_db", "prediction_db", "sim_min_db",
            "sim_mean_db",
        ],
    );
    let scenarios = table1_scenarios();
    let k = s.k_users.unwrap_or(61);
    for &n in &s.n_list {
        for &g in &s.guard_list {
            let cfg = SinrTableConfig {
                n,
                w: s.w,
                guard_bins: g,
                k_users: k,
                delta: s.delta_list[0],
                mc_samples: s.mc_samples,
                zp_factors: s.zp_list.clone(),
                simulate: s.simulate,
            };
            for r in sinr_table(rng, &cfg, &scenarios)? {
                let sc = scenarios.iter().find(|sc| sc.label == r.label).expect("row from scenario list");
                t.push(vec![
                    n.into(),
                    s.w.into(),
                    g.into(),
                    k.into(),
                    cfg.delta.into(),
                    r.label.as_str().into(),
                    r.zp_factor.into(),
                    sc.desired_snr_db.into(),
                    r.prediction_db.into(),
                    r.sim_min_db.into(),
                    r.sim_mean_db.into(),
                ]);
            }
        }
    }
    Ok(t)
}

fn wideband_users(s: &Settings, rng: &mut ChaCha8Rng, wcfg: &WidebandConfig) -> Result<Vec<UserChannel>> {
    match &s.paths_file {
        Some(p) => load_paths(p),
        None => bench_ensemble(
            rng,
            s.n_list[0],
            s.k_users.unwrap_or(16),
            wcfg,
            s.guard_list[0],
            s.paths_min..=s.paths_max,
        ),
    }
}

fn wideband_table(s: &Settings, rng: &mut ChaCha8Rng) -> Result<ResultTable> {
    let n = s.n_list[0];
    let cfg = ArrayConfig::new(n, s.zp_list[0])?;
    let wcfg = WidebandConfig::fractional(s.carrier_hz, s.bandwidth_frac, s.subcarriers, s.noise_var)?;
    let anchoring = match s.anchoring {
        Anchoring::Track => WindowAnchoring::TrackSquint,
        Anchoring::Fixed => WindowAnchoring::Fixed,
    };
    let multipath = wideband_users(s, rng, &wcfg)?;
    let dominant: Vec<UserChannel> = multipath.iter().map(|u| u.dominant_only()).collect();
    let ensembles = [("multipath", &multipath), ("dominant", &dominant)];

    if let Some(user) = s.trace_user {
        let mut t = ResultTable::new(s.experiment, s.seed, &["n", "w", "channel", "user", "subcarrier", "freq_offset_hz", "sir_db"]);
        for (name, users) in ensembles {
            let trace = sir_trace(user, users, &cfg, &wcfg, s.w, anchoring)?;
            for (m, (f, sir)) in wcfg.subcarrier_frequencies().into_iter().zip(trace).enumerate() {
                t.push(vec![n.into(), s.w.into(), name.into(), user.into(), m.into(), f.into(), sir.map(db).into()]);
            }
        }
        return Ok(t);
    }

    let mut t = ResultTable::new(
        s.experiment,
        s.seed,
        &["n", "k_users", "w", "channel", "snr_db", "unconstrained", "full_array", "beamspace"],
    );
    for (name, users) in ensembles {
        let unc = unconstrained_se(users, &cfg, &wcfg, &s.snr_grid_db)?;
        let full = full_array_lmmse_se(users, &cfg, &wcfg, &s.snr_grid_db)?;
        let bs = beamspace_lmmse_se(users, &cfg, &wcfg, s.w, anchoring, &s.snr_grid_db)?;
        for (i, &snr) in s.snr_grid_db.iter().enumerate() {
            t.push(vec![
                n.into(),
                users.len().into(),
                s.w.into(),
                name.into(),
                snr.into(),
                unc[i].into(),
                full[i].into(),
                bs[i].into(),
            ]);
        }
    }
    Ok(t)
}

fn jensen_table(s: &Settings, rng: &mut ChaCha8Rng) -> Result<ResultTable> {
    let rep = verify_operator_jensen(rng, s.dim, s.ensembles, s.ensemble_size, s.vectors)?;
    let mut t = ResultTable::new(
        s.experiment,
        s.seed,
        &["dim", "ensembles", "ensemble_size", "checks", "violations", "max_relative_gap", "min_operator_gap"],
    );
    t.push(vec![
        s.dim.into(),
        rep.ensembles.into(),
        s.ensemble_size.into(),
        rep.checks.into(),
        rep.violations.into(),
        rep.max_relative_gap.into(),
        rep.min_operator_gap.into(),
    ]);
    Ok(t)
}

fn mf_table(s: &Settings, rng: &mut ChaCha8Rng) -> Result<ResultTable> {
    let mut t = ResultTable::new(
        s.experiment,
        s.seed,
        &["n", "samples", "signal_energy", "mean_z2", "std_error", "n_mean_z2", "sir_ratio_db"],
    );
    for &n in &s.n_list {
        // desired user midway between the two bins
        let st = two_bin_mf_stats(TAU / (2 * n) as f64, n, rng, s.mc_samples)?;
        t.push(vec![
            n.into(),
            st.n_samples.into(),
            st.signal_energy.into(),
            st.mean_interference_energy.into(),
            st.std_error.into(),
            (n as f64 * st.mean_interference_energy).into(),
            Cell::from(db(st.sir_ratio())),
        ]);
    }
    Ok(t)
}
