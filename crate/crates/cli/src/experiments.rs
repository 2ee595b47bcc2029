use std::f64::consts::{FRAC_PI_2, PI};

use eqlab_core::dynamics::{
    accessible_region, eigensystem, rabi_frequency, rabi_window, rebound_fraction, steady_state, DriveParams,
    HardwarePreset, Propagator,
};
use eqlab_core::electron::{equal_comb, two_sideband_comb};
use eqlab_core::oracle::{evolve_joint, joint_distance, magnus_second_order, LatticeModel};
use eqlab_core::phaselock::{detect_lock, kappa, lag_winding, simulate, slip_period, LockParams};
use eqlab_core::scatter::{
    apply_smatrix, event_map, max_purity_loss, worst_case_purity_loss, CouplingStrength, JointState,
};
use eqlab_core::tomography::{
    reconstruct, reconstruct_monochromatic, sample_shots, spectrum_monochromatic, spectrum_two_sideband, Spectrum,
};
use eqlab_core::{ElectronComb, QubitState};
use num_complex::Complex64 as C64;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::config::{self, ExperimentConfig, Params, SweepParameter};
use crate::error::RunError;
use crate::output::{linspace, logspace, loglog_fit, Cell, Sink};
use crate::row;

type Rows = Vec<Vec<Cell>>;

/// Core errors caused by user-supplied values are configuration errors.
fn input<T>(r: eqlab_core::Result<T>, what: &str) -> Result<T, RunError> {
    r.map_err(|e| RunError::Schema(format!("params.{what}: {e}")))
}

fn state(v: [f64; 3], what: &str) -> Result<QubitState, RunError> {
    input(QubitState::new(v[0], v[1], v[2]), what)
}

pub fn run(cfg: &ExperimentConfig, sink: &mut Sink) -> Result<(), RunError> {
    match &cfg.params {
        Params::Fig1Maps(p) => fig1_maps(p, sink),
        Params::Fig1dScaling(p) => fig1d_scaling(p, sink),
        Params::Fig2Region(p) => fig2_region(p, sink),
        Params::Fig3Eigenmaps(p) => fig3_eigenmaps(p, sink),
        Params::Fig3Trajectories(p) => fig3_trajectories(p, sink),
        Params::Fig3Hardware(p) => fig3_hardware(p, sink),
        Params::Fig4Tomography(p) => fig4_tomography(p, cfg.seed, sink),
        Params::Sweep(p) => sweep(p, sink),
        Params::OracleCheck(p) => oracle_check(p, sink),
    }
}

fn fig1_maps(p: &config::Fig1Maps, sink: &mut Sink) -> Result<(), RunError> {
    let thetas = linspace(0.0, FRAC_PI_2, p.theta_points);
    let betas = linspace(0.0, p.beta_max, p.beta_points);
    let mut rows = Rows::new();
    for &n in &p.comb_sizes {
        let ov = input(equal_comb(n, p.phi), "comb_sizes")?.overlaps();
        let block: Vec<Rows> = thetas
            .par_iter()
            .map(|&theta| {
                let s = QubitState::from_angles(theta, p.gamma);
                betas
                    .iter()
                    .map(|&beta| {
                        let out = event_map(&s, &ov, beta);
                        row![n, theta, s.ground_population(), beta, out.ground_population(), out.norm(), out.purity()]
                    })
                    .collect()
            })
            .collect();
        rows.extend(block.into_iter().flatten());
    }
    sink.csv(
        "fig1_maps.csv",
        &["n[1]", "theta[rad]", "ground_pop_initial[1]", "beta[rad]", "ground_prob[1]", "bloch_radius[1]", "purity[1]"],
        &rows,
    )
}

fn fig1d_scaling(p: &config::Fig1dScaling, sink: &mut Sink) -> Result<(), RunError> {
    let thetas = linspace(0.0, FRAC_PI_2, p.grid);
    let betas = linspace(0.0, FRAC_PI_2, p.grid);
    let results: Vec<Result<Vec<Cell>, RunError>> = p
        .sizes
        .par_iter()
        .map(|&n| {
            let worst = worst_case_purity_loss(n, p.grid)?;
            let ov = equal_comb(n, 0.0)?.overlaps();
            let mut sum = 0.0;
            for &theta in &thetas {
                let s = QubitState::from_angles(theta, p.gamma);
                for &beta in &betas {
                    sum += 1.0 - event_map(&s, &ov, beta).norm();
                }
            }
            let mean = sum / (thetas.len() * betas.len()) as f64;
            let at_half = max_purity_loss(n, FRAC_PI_2, p.grid)?.loss;
            Ok(row![n, worst.loss, worst.beta, worst.theta, worst.gamma, at_half, mean, 2.0 / n as f64])
        })
        .collect();
    let rows = results.into_iter().collect::<Result<Rows, _>>()?;
    sink.csv(
        "fig1d_scaling.csv",
        &[
            "n[1]",
            "worst_loss[1]",
            "worst_beta[rad]",
            "worst_theta[rad]",
            "worst_gamma[rad]",
            "loss_at_half_pi[1]",
            "mean_loss_fixed_gamma[1]",
            "bound[1]",
        ],
        &rows,
    )?;
    let (ns, losses): (Vec<f64>, Vec<f64>) = p
        .sizes
        .iter()
        .zip(&rows)
        .filter(|(&n, _)| n >= p.fit_min_n)
        .map(|(&n, r)| match r[1] {
            Cell::F(v) => (n as f64, v),
            _ => unreachable!(),
        })
        .unzip();
    let fit = loglog_fit(&ns, &losses);
    sink.json(
        "fig1d_fit.json",
        &json!({
            "fit_min_n": p.fit_min_n,
            "points": ns.len(),
            "slope": fit.map(|f| f.0),
            "prefactor": fit.map(|f| f.1.exp()),
        }),
    )
}

fn fig2_region(p: &config::Fig2Region, sink: &mut Sink) -> Result<(), RunError> {
    let regions = p
        .gamma_ratios
        .par_iter()
        .map(|&r| accessible_region(r, p.points, p.sphere_samples))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows = Rows::new();
    let mut spheres = Vec::new();
    for reg in &regions {
        for s in &reg.points {
            rows.push(row![reg.gamma_ratio, s.x, s.y, s.z, s.x.hypot(s.y)]);
        }
        spheres.push(json!({
            "gamma_ratio": reg.gamma_ratio,
            "r_s": reg.r_s,
            "z_s": reg.z_s,
            "max_gap": reg.max_gap,
            "covered": reg.covers(p.tolerance),
        }));
    }
    sink.csv("fig2_points.csv", &["gamma_ratio[1]", "x[1]", "y[1]", "z[1]", "rho[1]"], &rows)?;
    sink.json("fig2_spheres.json", &json!({ "tolerance": p.tolerance, "spheres": spheres }))
}

fn eigen_cells(p: &DriveParams) -> Vec<Cell> {
    let es = eigensystem(p);
    let mut cells = Vec::with_capacity(15);
    for k in 0..3 {
        cells.push(Cell::F(es.values[k].re));
        cells.push(Cell::F(es.values[k].im));
    }
    for v in &es.vectors {
        for c in v.iter() {
            cells.push(Cell::F(c.norm_sqr()));
        }
    }
    cells
}

const EIGEN_HEADERS: [&str; 15] = [
    "lambda0_re[1/s]",
    "lambda0_im[1/s]",
    "lambda1_re[1/s]",
    "lambda1_im[1/s]",
    "lambda2_re[1/s]",
    "lambda2_im[1/s]",
    "v0_x2[1]",
    "v0_y2[1]",
    "v0_z2[1]",
    "v1_x2[1]",
    "v1_y2[1]",
    "v1_z2[1]",
    "v2_x2[1]",
    "v2_y2[1]",
    "v2_z2[1]",
];

fn fig3_eigenmaps(p: &config::Fig3Eigenmaps, sink: &mut Sink) -> Result<(), RunError> {
    let inorms = linspace(0.0, 1.0, p.inorm_points);
    let betas = linspace(0.0, p.beta_max, p.beta_points);
    let blocks = inorms
        .par_iter()
        .map(|&a| {
            let i = C64::new(a, 0.0);
            betas
                .iter()
                .map(|&beta| {
                    let d = input(DriveParams::new(beta, p.gamma_e, p.gamma_0, i, i), "beta_max")?;
                    let mut r = row![a, beta];
                    r.extend(eigen_cells(&d));
                    Ok(r)
                })
                .collect::<Result<Rows, RunError>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut headers = vec!["inorm[1]", "beta[rad]"];
    headers.extend(EIGEN_HEADERS);
    sink.csv("fig3_eigenmaps.csv", &headers, &blocks.into_iter().flatten().collect::<Rows>())
}

fn fig3_trajectories(p: &config::Fig3Trajectories, sink: &mut Sink) -> Result<(), RunError> {
    let mut rows = Rows::new();
    let mut summary = Vec::new();
    for c in &p.cases {
        let beta = c.beta.unwrap_or(p.beta);
        let drive = input(
            DriveParams::new(
                beta,
                p.gamma_e,
                p.gamma_0,
                C64::from_polar(c.i1_abs, c.theta1),
                C64::from_polar(c.i2_abs, c.theta2),
            ),
            "cases",
        )?;
        let s0 = state(c.initial, "cases.initial")?;
        let omega = rabi_frequency(&drive).unwrap_or(0.0);
        // Without coherent drive the time axis falls back to the relaxation scale.
        let scale = if omega > 0.0 { 2.0 * PI / omega } else { 1.0 / (drive.g1() + drive.gamma_0).max(drive.gamma_e) };
        let dt = p.periods * scale / p.samples as f64;
        for (k, s) in Propagator::new(&drive).sample(&s0, dt, p.samples).iter().enumerate() {
            rows.push(row![c.label.as_str(), k as f64 * dt, s.x, s.y, s.z, s.norm()]);
        }
        summary.push(json!({ "label": c.label, "beta": beta, "rabi_frequency": omega, "time_unit": scale }));
    }
    sink.csv("fig3_trajectories.csv", &["case", "t[s]", "x[1]", "y[1]", "z[1]", "bloch_radius[1]"], &rows)?;

    let l = &p.lock;
    let mut lock_rows = Rows::new();
    let mut locks = Vec::new();
    for &k in &l.kappas {
        let lp = input(LockParams::new(l.g1, l.i2_abs, k * 2.0 * l.g1 * l.i2_abs, l.theta2_0), "lock")?;
        let t_end = l.duration / (2.0 * l.g1 * l.i2_abs);
        let samples = simulate(&lp, l.r0, l.theta0, t_end, l.dt, l.record_every)?;
        for s in &samples {
            lock_rows.push(row![k, s.t, s.r, s.theta, s.theta2, s.delta]);
        }
        locks.push(json!({
            "kappa": kappa(&lp)?,
            "locked": detect_lock(&lp, &samples)?,
            "lag_winding": lag_winding(&samples),
            "slip_period": slip_period(&lp).ok(),
        }));
    }
    sink.csv(
        "fig3_phaselock.csv",
        &["kappa[1]", "t[s]", "r[1]", "theta[rad]", "theta2[rad]", "lag[rad]"],
        &lock_rows,
    )?;
    sink.json("fig3_trajectories.json", &json!({ "cases": summary, "lock": locks }))
}

fn fig3_hardware(p: &config::Fig3Hardware, sink: &mut Sink) -> Result<(), RunError> {
    let (i1, i2) = (C64::new(p.i1_abs, 0.0), C64::new(p.i2_abs, 0.0));
    let mut rows = Rows::new();
    let mut windows = Vec::new();
    for name in &p.presets {
        let hw = HardwarePreset::by_name(name).expect("preset names are validated");
        let predicted = rabi_window(&input(hw.drive(0.0, i1, i2), "i1_abs")?)?;
        let betas = logspace(predicted.beta_min / 10.0, FRAC_PI_2, p.beta_points);
        let steps = (p.periods * p.samples_per_period as f64).ceil() as usize;
        let per_beta = betas
            .par_iter()
            .map(|&beta| {
                let drive = hw.drive(beta, i1, i2)?;
                let period = 2.0 * PI / rabi_frequency(&drive)?;
                let dt = p.periods * period / steps as f64;
                let zs: Vec<f64> = Propagator::new(&drive)
                    .sample(&QubitState::ground(), dt, steps)
                    .iter()
                    .map(|s| s.z)
                    .collect();
                let osc = rebound_fraction(&zs).is_some_and(|r| r >= p.min_rebound);
                Ok::<_, eqlab_core::Error>((beta, dt / period, zs, osc))
            })
            .collect::<Result<Vec<_>, _>>()?;
        for (beta, step, zs, _) in &per_beta {
            for (k, z) in zs.iter().enumerate() {
                rows.push(row![hw.name, *beta, k as f64 * step, *z]);
            }
        }
        let detected: Vec<f64> = per_beta.iter().filter(|r| r.3).map(|r| r.0).collect();
        windows.push(json!({
            "preset": hw.name,
            "gamma_0": hw.gamma_0,
            "gamma_e": hw.gamma_e,
            "predicted": { "beta_min": predicted.beta_min, "beta_max": predicted.beta_max },
            "detected": {
                "beta_min": detected.first(),
                "beta_max": detected.last(),
                "count": detected.len(),
            },
        }));
    }
    sink.csv("fig3_hardware.csv", &["preset", "beta[rad]", "t_over_tr[1]", "z[1]"], &rows)?;
    sink.json("fig3_hardware_windows.json", &json!({ "min_rebound": p.min_rebound, "windows": windows }))
}

fn fig4_tomography(p: &config::Fig4Tomography, seed: u64, sink: &mut Sink) -> Result<(), RunError> {
    let rho = state(p.state, "state")?;
    let tw = input(two_sideband_comb(p.f0, p.f1, 0.0), "f0")?;
    let probes: [(&str, Spectrum, Spectrum); 3] = [
        ("mono", spectrum_monochromatic(rho.z, 0.0)?, spectrum_monochromatic(rho.z, p.beta)?),
        (
            "phi1",
            spectrum_two_sideband(&rho, tw.alpha0, tw.alpha1, 0.0, p.phi1)?,
            spectrum_two_sideband(&rho, tw.alpha0, tw.alpha1, p.beta, p.phi1)?,
        ),
        (
            "phi2",
            spectrum_two_sideband(&rho, tw.alpha0, tw.alpha1, 0.0, p.phi2)?,
            spectrum_two_sideband(&rho, tw.alpha0, tw.alpha1, p.beta, p.phi2)?,
        ),
    ];
    let mut measured = Vec::new();
    for (k, (_, _, after)) in probes.iter().enumerate() {
        measured.push(match p.shots {
            Some(n) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(k as u64);
                sample_shots(after, n, &mut rng)?
            }
            None => after.clone(),
        });
    }
    let mut rows = Rows::new();
    for ((name, before, _), after) in probes.iter().zip(&measured) {
        let (lo, hi) = span(before, after);
        for j in lo..=hi {
            rows.push(row![*name, j, before.get(j), after.get(j)]);
        }
    }
    sink.csv("fig4_spectra.csv", &["probe", "j[1]", "before[1]", "after[1]"], &rows)?;

    let two_phase = match reconstruct(&measured[1], p.phi1, &measured[2], p.phi2, tw.alpha0, tw.alpha1) {
        Ok(r) => json!({ "ok": true, "report": r.report() }),
        Err(e) => json!({ "ok": false, "error": e.to_string() }),
    };
    let mono = match reconstruct_monochromatic(&measured[0]) {
        Ok((z, beta)) => json!({ "ok": true, "z": z, "beta": beta }),
        Err(e) => json!({ "ok": false, "error": e.to_string() }),
    };
    sink.json(
        "fig4_reconstruction.json",
        &json!({
            "true_state": { "x": rho.x, "y": rho.y, "z": rho.z },
            "beta": p.beta,
            "alpha0": tw.alpha0,
            "alpha1": tw.alpha1,
            "shots": p.shots,
            "two_phase": two_phase,
            "monochromatic": mono,
        }),
    )
}

fn span(a: &Spectrum, b: &Spectrum) -> (i64, i64) {
    let keys = a.peaks().keys().chain(b.peaks().keys());
    let lo = keys.clone().min().copied().unwrap_or(0);
    let hi = keys.max().copied().unwrap_or(0);
    (lo, hi)
}

fn sweep(p: &config::Sweep, sink: &mut Sink) -> Result<(), RunError> {
    let r = &p.range;
    let values = if r.log { logspace(r.start, r.stop, r.points) } else { linspace(r.start, r.stop, r.points) };
    let drives = values
        .iter()
        .map(|&v| {
            let mut b = p.base.clone();
            match p.parameter {
                SweepParameter::Beta => b.beta = v,
                SweepParameter::GammaE => b.gamma_e = v,
                SweepParameter::Gamma0 => b.gamma_0 = v,
                SweepParameter::I1Abs => b.i1_abs = v,
                SweepParameter::Theta1 => b.theta1 = v,
                SweepParameter::I2Abs => b.i2_abs = v,
                SweepParameter::Theta2 => b.theta2 = v,
            }
            input(
                DriveParams::new(
                    b.beta,
                    b.gamma_e,
                    b.gamma_0,
                    C64::from_polar(b.i1_abs, b.theta1),
                    C64::from_polar(b.i2_abs, b.theta2),
                ),
                "range",
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    let rows = values
        .par_iter()
        .zip(&drives)
        .map(|(&v, d)| {
            let ss = steady_state(d)?;
            let omega = rabi_frequency(d).unwrap_or(0.0);
            let in_window = rabi_window(d).is_ok_and(|w| w.contains(d.beta));
            let mut r = row![v, ss.x, ss.y, ss.z, ss.norm()];
            r.extend(eigen_cells(d));
            r.extend(row![omega, in_window]);
            Ok(r)
        })
        .collect::<Result<Rows, eqlab_core::Error>>()?;
    let name = serde_json::to_value(p.parameter)?.as_str().unwrap_or("value").to_owned();
    let first = format!("{name}[{}]", unit(p.parameter));
    let mut headers = vec![first.as_str(), "ss_x[1]", "ss_y[1]", "ss_z[1]", "ss_radius[1]"];
    headers.extend(EIGEN_HEADERS);
    headers.extend(["rabi_frequency[1/s]", "in_rabi_window"]);
    sink.csv("sweep.csv", &headers, &rows)
}

fn unit(p: SweepParameter) -> &'static str {
    match p {
        SweepParameter::Beta | SweepParameter::Theta1 | SweepParameter::Theta2 => "rad",
        SweepParameter::GammaE | SweepParameter::Gamma0 => "1/s",
        SweepParameter::I1Abs | SweepParameter::I2Abs => "1",
    }
}

fn oracle_check(p: &config::OracleCheck, sink: &mut Sink) -> Result<(), RunError> {
    let rho = state(p.state, "state")?;
    let comb = input(
        ElectronComb::from_amplitudes(
            p.profile
                .iter()
                .enumerate()
                .filter(|(_, f)| **f != 0.0)
                .map(|(n, &f)| (n as i64, C64::from_polar(f, n as f64 * p.phi))),
        ),
        "profile",
    )?;
    let j = JointState::product(&rho, &comb, JointState::DEFAULT_PAD)?;
    let (lo, hi) = LatticeModel::window_for(&j, 0);
    let window = (lo - p.window_pad, hi + p.window_pad);
    let results = p
        .betas
        .par_iter()
        .map(|&b| {
            let beta = CouplingStrength::real(b)?;
            let m = LatticeModel::resonant(beta, window, p.steps)?.with_chirp(p.chirp);
            let err = joint_distance(&evolve_joint(&m, &j)?, &apply_smatrix(&j, beta)?)?;
            Ok((b, err, magnus_second_order(&m)))
        })
        .collect::<Result<Vec<_>, eqlab_core::Error>>()?;
    let rows: Rows = results.iter().map(|&(b, e, o)| row![b, e, o]).collect();
    sink.csv("oracle_check.csv", &["beta[rad]", "error[1]", "omega2[1]"], &rows)?;
    let (bs, es): (Vec<f64>, Vec<f64>) = results.iter().map(|r| (r.0, r.1)).unzip();
    let fit = loglog_fit(&bs, &es);
    sink.json(
        "oracle_fit.json",
        &json!({ "chirp": p.chirp, "steps": p.steps, "slope": fit.map(|f| f.0), "prefactor": fit.map(|f| f.1.exp()) }),
    )
}
