//! Locking the emitter coherence to a swept `I₂` phase.
//!
//! With `I₁ = 0` and `γ₀ = 0` the coherence `r e^{iϑ}` obeys
//!
//! ```text
//! ṙ = g₁ r (−1 + |I₂| cos(θ₂ − 2ϑ))
//! ϑ̇ = g₁ |I₂| sin(θ₂ − 2ϑ)
//! ```
//!
//! For a linear sweep `θ₂ = θ₂(0) + ωt` the lag `Δ = θ₂ − 2ϑ` follows
//! `Δ̇ = ω − 2g₁|I₂| sin Δ` and settles at `asin κ` when `κ = ω/(2g₁|I₂|) ≤ 1`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of a linear `θ₂` sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LockParams {
    /// Dephasing rate `γ_e sin²β` (s⁻¹).
    pub g1: f64,
    /// `|I₂|`.
    pub i2_abs: f64,
    /// Sweep rate of `θ₂` (rad/s).
    pub omega: f64,
    /// `θ₂` at `t = 0`.
    pub theta2_0: f64,
}

impl LockParams {
    pub fn new(g1: f64, i2_abs: f64, omega: f64, theta2_0: f64) -> Result<Self> {
        if !(g1.is_finite() && g1 > 0.0) {
            return Err(Error::InvalidArgument(format!("g1 = {g1} must be > 0")));
        }
        if !(i2_abs > 0.0 && i2_abs <= 1.0) {
            return Err(Error::InvalidArgument(format!("|I2| = {i2_abs} must lie in (0, 1]")));
        }
        if !(omega.is_finite() && theta2_0.is_finite()) {
            return Err(Error::InvalidArgument("sweep parameters must be finite".into()));
        }
        Ok(Self { g1, i2_abs, omega, theta2_0 })
    }

    pub fn theta2(&self, t: f64) -> f64 {
        self.theta2_0 + self.omega * t
    }

    /// Rate at which a locked lag recovers from a perturbation,
    /// `2g₁|I₂|sqrt(1 − κ²)`; zero when no lock exists.
    pub fn relaxation_rate(&self) -> f64 {
        let k = self.omega / (2.0 * self.g1 * self.i2_abs);
        2.0 * self.g1 * self.i2_abs * (1.0 - k * k).max(0.0).sqrt()
    }
}

/// `(ṙ, ϑ̇)` at the given `θ₂`.
pub fn polar_rates(r: f64, theta: f64, p: &LockParams, theta2: f64) -> Result<(f64, f64)> {
    if r < 0.0 {
        return Err(Error::InvalidArgument(format!("radius {r} must be >= 0")));
    }
    let lag = theta2 - 2.0 * theta;
    Ok((
        p.g1 * r * (-1.0 + p.i2_abs * lag.cos()),
        p.g1 * p.i2_abs * lag.sin(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub theta: f64,
    pub stable: bool,
}

/// The four phases `(nπ + θ₂)/2` in `[0, 2π)`; even `n` is stable.
pub fn fixed_points(theta2: f64) -> Vec<FixedPoint> {
    let mut out: Vec<FixedPoint> = (0..4)
        .map(|n| FixedPoint {
            theta: ((n as f64 * PI + theta2) / 2.0).rem_euclid(2.0 * PI),
            stable: n % 2 == 0,
        })
        .collect();
    out.sort_by(|a, b| a.theta.total_cmp(&b.theta));
    out
}

/// `κ = ω/(2g₁|I₂|)`.
pub fn kappa(p: &LockParams) -> Result<f64> {
    let denom = 2.0 * p.g1 * p.i2_abs;
    if denom == 0.0 {
        return Err(Error::InvalidArgument("kappa needs g1 > 0 and |I2| > 0".into()));
    }
    Ok(p.omega / denom)
}

/// Lag `asin κ` of the locked state, or `None` when `|κ| > 1`.
pub fn locked_offset(kappa: f64) -> Option<f64> {
    (kappa.abs() <= 1.0).then(|| kappa.asin())
}

/// Linearized approach to the locked state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transient {
    pub r: f64,
    /// Lag deviation `δ = Δ − asin κ`.
    pub delta: f64,
    pub theta: f64,
}

/// Closed-form `r(t)`, `δ(t)`, `ϑ(t)` to first order in the initial lag
/// deviation `delta0`, for `κ < 1`:
///
/// ```text
/// δ(t)        = δ₀ e^{−λt},  λ = 2g₁|I₂|sqrt(1 − κ²)
/// ln(r/r₀)    = g₁(−1 + |I₂|sqrt(1 − κ²)) t − κ δ₀ (1 − e^{−λt}) / (2 sqrt(1 − κ²))
/// ϑ(t)        = (θ₂(t) − asin κ − δ(t)) / 2
/// ```
///
/// For `|I₂| = 1` and small `κ` the late-time decay is `e^{−g₁κ²t/2}` and the
/// transient rescales the purity by `e^{−κδ₀/2}`.
pub fn locked_transient(p: &LockParams, r0: f64, delta0: f64, t: f64) -> Result<Transient> {
    let k = kappa(p)?;
    if k.abs() >= 1.0 {
        return Err(Error::InvalidArgument(format!("no lock for kappa = {k}")));
    }
    let root = (1.0 - k * k).sqrt();
    let lambda = 2.0 * p.g1 * p.i2_abs * root;
    let decay = (-lambda * t).exp();
    let delta = delta0 * decay;
    let log_r = p.g1 * (-1.0 + p.i2_abs * root) * t - k * delta0 * (1.0 - decay) / (2.0 * root);
    Ok(Transient {
        r: r0 * log_r.exp(),
        delta,
        theta: 0.5 * (p.theta2(t) - k.asin() - delta),
    })
}

/// One sample of a simulated sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LockSample {
    pub t: f64,
    pub r: f64,
    /// Unwrapped coherence phase `ϑ`.
    pub theta: f64,
    pub theta2: f64,
    /// Lag `θ₂ − 2ϑ`, continuous in time.
    pub delta: f64,
}

/// Integrates the coherence in Cartesian form with RK4, reporting polar
/// coordinates every `record_every` steps.
pub fn simulate(
    p: &LockParams,
    r0: f64,
    theta0: f64,
    t_end: f64,
    dt: f64,
    record_every: usize,
) -> Result<Vec<LockSample>> {
    if !(r0 > 0.0 && r0 <= 1.0 + crate::qubit::BLOCH_EPS) {
        return Err(Error::InvalidArgument(format!("initial radius {r0} must lie in (0, 1]")));
    }
    if !(dt > 0.0 && t_end >= 0.0) || record_every == 0 {
        return Err(Error::InvalidArgument("need dt > 0, t_end >= 0, record_every >= 1".into()));
    }
    let limit = 0.05 / (p.g1 * (1.0 + p.i2_abs)).max(p.omega.abs());
    if dt > limit {
        return Err(Error::StepTooLarge { dt, limit });
    }
    let rate = |t: f64, x: f64, y: f64| -> (f64, f64) {
        let th2 = p.theta2(t);
        let (a, b) = (p.i2_abs * th2.cos(), p.i2_abs * th2.sin());
        (
            p.g1 * (-x + a * x + b * y),
            p.g1 * (-y + b * x - a * y),
        )
    };
    let steps = (t_end / dt).round() as usize;
    let (mut x, mut y) = (r0 * theta0.cos(), r0 * theta0.sin());
    let mut theta = theta0;
    let mut out = Vec::with_capacity(steps / record_every + 2);
    let sample = |t: f64, r: f64, theta: f64| LockSample {
        t,
        r,
        theta,
        theta2: p.theta2(t),
        delta: p.theta2(t) - 2.0 * theta,
    };
    out.push(sample(0.0, r0, theta));
    for k in 0..steps {
        let t = k as f64 * dt;
        let (k1x, k1y) = rate(t, x, y);
        let (k2x, k2y) = rate(t + dt / 2.0, x + k1x * dt / 2.0, y + k1y * dt / 2.0);
        let (k3x, k3y) = rate(t + dt / 2.0, x + k2x * dt / 2.0, y + k2y * dt / 2.0);
        let (k4x, k4y) = rate(t + dt, x + k3x * dt, y + k3y * dt);
        x += dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        y += dt / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        let r = x.hypot(y);
        if r > 0.0 {
            let raw = y.atan2(x);
            theta += (raw - theta + PI).rem_euclid(2.0 * PI) - PI;
        }
        if (k + 1) % record_every == 0 || k + 1 == steps {
            out.push(sample((k + 1) as f64 * dt, r, theta));
        }
    }
    Ok(out)
}

/// Whether the lag stays within `tol` of `asin κ` (modulo 2π) throughout the
/// final `hold` seconds of the record.
pub fn is_locked(samples: &[LockSample], kappa: f64, tol: f64, hold: f64) -> bool {
    let Some(target) = locked_offset(kappa) else {
        return false;
    };
    let Some(last) = samples.last() else {
        return false;
    };
    if last.t < hold {
        return false;
    }
    samples
        .iter()
        .filter(|s| s.t >= last.t - hold)
        .all(|s| ((s.delta - target + PI).rem_euclid(2.0 * PI) - PI).abs() < tol)
}

/// Lock check with the default tolerance `1e−3` held for five relaxation times.
pub fn detect_lock(p: &LockParams, samples: &[LockSample]) -> Result<bool> {
    let k = kappa(p)?;
    let rate = p.relaxation_rate();
    if rate == 0.0 {
        return Ok(false);
    }
    Ok(is_locked(samples, k, 1e-3, 5.0 / rate))
}

/// Time for one `2π` phase slip of the lag when `κ > 1`.
pub fn slip_period(p: &LockParams) -> Result<f64> {
    let k = kappa(p)?;
    if k.abs() <= 1.0 {
        return Err(Error::InvalidArgument(format!("kappa = {k} locks; no slips")));
    }
    Ok(2.0 * PI / (p.omega.abs() * (1.0 - 1.0 / (k * k)).sqrt()))
}

/// Net winding of the lag over the record, in radians.
pub fn lag_winding(samples: &[LockSample]) -> f64 {
    match (samples.first(), samples.last()) {
        (Some(a), Some(b)) => b.delta - a.delta,
        _ => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{generator, DriveParams};
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64 as C64;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn radial_rates() {
        let p = LockParams::new(2.0, 0.6, 0.0, 0.0).unwrap();
        let (dr, dth) = polar_rates(0.5, 0.0, &p, 0.0).unwrap();
        assert_abs_diff_eq!(dr, -(1.0 - 0.6) * 2.0 * 0.5, epsilon = 1e-15);
        assert_eq!(dth, 0.0);
        let (dr, _) = polar_rates(0.5, FRAC_PI_2, &p, 0.0).unwrap();
        assert_abs_diff_eq!(dr, -(1.0 + 0.6) * 2.0 * 0.5, epsilon = 1e-15);
        assert!(polar_rates(-0.1, 0.0, &p, 0.0).is_err());
    }

    #[test]
    fn fixed_point_sets() {
        let f0 = fixed_points(0.0);
        let stable: Vec<f64> = f0.iter().filter(|f| f.stable).map(|f| f.theta).collect();
        let unstable: Vec<f64> = f0.iter().filter(|f| !f.stable).map(|f| f.theta).collect();
        assert_eq!(stable, vec![0.0, PI]);
        assert_eq!(unstable, vec![FRAC_PI_2, 3.0 * FRAC_PI_2]);
        let fpi = fixed_points(PI);
        let stable: Vec<f64> = fpi.iter().filter(|f| f.stable).map(|f| f.theta).collect();
        assert_abs_diff_eq!(stable[0], FRAC_PI_2, epsilon = 1e-15);
        assert_abs_diff_eq!(stable[1], 3.0 * FRAC_PI_2, epsilon = 1e-15);
    }

    #[test]
    fn kappa_and_offsets() {
        let p = LockParams::new(1.0, 0.5, 0.0, 0.0).unwrap();
        assert_eq!(kappa(&p).unwrap(), 0.0);
        assert_eq!(locked_offset(0.0), Some(0.0));
        assert_eq!(locked_offset(1.0), Some(FRAC_PI_2));
        assert_eq!(locked_offset(2.0), None);
        assert!(LockParams::new(0.0, 0.5, 1.0, 0.0).is_err());
    }

    #[test]
    fn polar_rates_match_generator() {
        for &(r, th, th2, a2) in &[(0.7, 0.3, 1.1, 0.8), (0.2, -2.0, 0.4, 1.0), (1.0, 1.0, -0.5, 0.3)] {
            let beta: f64 = 0.4;
            let dp = DriveParams::new(beta, 3.0, 0.0, C64::new(0.0, 0.0), C64::from_polar(a2, th2)).unwrap();
            let lp = LockParams::new(dp.g1(), a2, 0.0, th2).unwrap();
            let gen = generator(&dp);
            let v = nalgebra::Vector3::new(r * f64::cos(th), r * f64::sin(th), 0.0);
            let d = gen.rate(&v);
            let (dr, dth) = polar_rates(r, th, &lp, th2).unwrap();
            let dr_cart = (v[0] * d[0] + v[1] * d[1]) / r;
            let dth_cart = (v[0] * d[1] - v[1] * d[0]) / (r * r);
            assert_abs_diff_eq!(dr, dr_cart, epsilon = 1e-12);
            assert_abs_diff_eq!(dth, dth_cart, epsilon = 1e-12);
        }
    }

    #[test]
    fn lock_and_slip() {
        let g1 = 1.0;
        let locked = LockParams::new(g1, 1.0, 0.5 * 2.0 * g1, 0.0).unwrap();
        let t_end = 30.0 / locked.relaxation_rate();
        let run = simulate(&locked, 1.0, 0.3, t_end, 1e-3, 10).unwrap();
        assert!(detect_lock(&locked, &run).unwrap());
        assert_abs_diff_eq!(run.last().unwrap().delta, 0.5f64.asin(), epsilon = 1e-6);

        let slipping = LockParams::new(g1, 1.0, 1.5 * 2.0 * g1, 0.0).unwrap();
        let period = slip_period(&slipping).unwrap();
        let run = simulate(&slipping, 1.0, 0.0, 3.0 * period, 1e-3, 10).unwrap();
        assert!(!detect_lock(&slipping, &run).unwrap());
        assert!(lag_winding(&run) > 2.0 * 2.0 * PI);
    }

    #[test]
    fn static_lock_preserves_radius() {
        let p = LockParams::new(1.0, 1.0, 0.0, 0.8).unwrap();
        let run = simulate(&p, 1.0, 0.4, 10.0, 1e-3, 100).unwrap();
        assert!(run.iter().all(|s| (s.r - 1.0).abs() < 1e-12));
        assert_eq!(locked_transient(&p, 0.9, 0.0, 5.0).unwrap().r, 0.9);
    }

    #[test]
    fn closed_form_follows_simulation() {
        let g1 = 1.0;
        let p = LockParams::new(g1, 0.99, 0.05 * 2.0 * g1 * 0.99, 0.0).unwrap();
        let target = 0.05f64.asin();
        let delta0 = 0.05;
        // ϑ₀ chosen so that the initial lag is asin κ + δ₀
        let theta0 = 0.5 * (p.theta2_0 - target - delta0);
        let t_end = 5.0 / p.relaxation_rate();
        let run = simulate(&p, 1.0, theta0, t_end, 1e-4, 50).unwrap();
        for s in &run {
            let cf = locked_transient(&p, 1.0, delta0, s.t).unwrap();
            assert!((cf.r / s.r - 1.0).abs() < 0.01);
            assert!((cf.theta - s.theta).abs() < 0.01);
        }
    }

    #[test]
    fn slow_decay_exponent() {
        let g1 = 1.0;
        let k: f64 = 0.01;
        let p = LockParams::new(g1, 1.0, k * 2.0 * g1, 0.0).unwrap();
        let (t1, t2) = (1e3, 2e3);
        let r1 = locked_transient(&p, 1.0, 0.0, t1).unwrap().r;
        let r2 = locked_transient(&p, 1.0, 0.0, t2).unwrap().r;
        let rate = -(r2 / r1).ln() / (t2 - t1);
        assert_abs_diff_eq!(rate, g1 * k * k / 2.0, epsilon = 1e-8);
    }
}
