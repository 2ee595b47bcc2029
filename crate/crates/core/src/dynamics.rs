//! Continuous driving by a stream of electrons.
//!
//! Coarse-graining single events arriving at rate `γ_e`, and adding
//! radiative decay at rate `γ₀`, gives the affine Bloch equation `ṡ = M s + c`
//! with `c = (0, 0, −γ₀)`.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubit::{QubitState, BLOCH_EPS};

/// Parameters of the driven master equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveParams {
    /// Per-event coupling `β`.
    pub beta: f64,
    /// Electron arrival rate (s⁻¹).
    pub gamma_e: f64,
    /// Radiative decay rate (s⁻¹).
    pub gamma_0: f64,
    pub i1: C64,
    pub i2: C64,
}

impl DriveParams {
    pub fn new(beta: f64, gamma_e: f64, gamma_0: f64, i1: C64, i2: C64) -> Result<Self> {
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::InvalidArgument(format!("beta = {beta} must be >= 0")));
        }
        if !(gamma_e.is_finite() && gamma_e > 0.0) {
            return Err(Error::InvalidArgument(format!("gamma_e = {gamma_e} must be > 0")));
        }
        if !(gamma_0.is_finite() && gamma_0 >= 0.0) {
            return Err(Error::InvalidArgument(format!("gamma_0 = {gamma_0} must be >= 0")));
        }
        if i1.norm() > 1.0 + 1e-12 || i2.norm() > 1.0 + 1e-12 || !(i1.is_finite() && i2.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "overlap integrals must satisfy |I| <= 1, got |I1|={}, |I2|={}",
                i1.norm(),
                i2.norm()
            )));
        }
        Ok(Self { beta, gamma_e, gamma_0, i1, i2 })
    }

    /// Dephasing rate `g₁ = γ_e sin²β`.
    pub fn g1(&self) -> f64 {
        self.gamma_e * self.beta.sin().powi(2)
    }

    /// Driving rate `g₂ = γ_e sin 2β`.
    pub fn g2(&self) -> f64 {
        self.gamma_e * (2.0 * self.beta).sin()
    }

    pub fn with_beta(&self, beta: f64) -> Self {
        Self { beta, ..*self }
    }
}

/// Emitter platform rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardwarePreset {
    pub name: &'static str,
    /// Radiative decay rate (s⁻¹).
    pub gamma_0: f64,
    /// Electron repetition rate (s⁻¹).
    pub gamma_e: f64,
}

impl HardwarePreset {
    /// Interlayer excitons in WSe₂/hBN: 200 ns lifetime, 40 MHz electrons.
    ///
    /// The resulting window for `|I₁| = 1` is `β ∈ (0.05, 1)`.
    pub const fn wse2_hbn() -> Self {
        Self { name: "wse2_hbn", gamma_0: 4.0e6, gamma_e: 4.0e7 }
    }

    /// Superconducting qubit: 500 µs lifetime, 40 MHz electrons.
    ///
    /// The resulting window for `|I₁| = 1` is `β ∈ (2.5e−5, 1)`.
    pub const fn sc_qubit() -> Self {
        Self { name: "sc_qubit", gamma_0: 2.0e3, gamma_e: 4.0e7 }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        [Self::wse2_hbn(), Self::sc_qubit()].into_iter().find(|p| p.name == name)
    }

    pub fn drive(&self, beta: f64, i1: C64, i2: C64) -> Result<DriveParams> {
        DriveParams::new(beta, self.gamma_e, self.gamma_0, i1, i2)
    }
}

/// Affine generator `ṡ = m·s + drift`; `m` already includes `−(γ₀ + g₁)·1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochGenerator {
    pub m: Matrix3<f64>,
    pub drift: Vector3<f64>,
}

impl BlochGenerator {
    pub fn rate(&self, s: &Vector3<f64>) -> Vector3<f64> {
        self.m * s + self.drift
    }

    /// Homogeneous 4×4 form acting on `(x, y, z, 1)`.
    pub fn augmented(&self) -> Matrix4<f64> {
        let mut a = Matrix4::zeros();
        a.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.m);
        a.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.drift);
        a
    }
}

pub fn generator(p: &DriveParams) -> BlochGenerator {
    let (g1, g2) = (p.g1(), p.g2());
    let (i1r, i1i) = (p.i1.re, p.i1.im);
    let (i2r, i2i) = (p.i2.re, p.i2.im);
    #[rustfmt::skip]
    let core = Matrix3::new(
        g1 * i2r,  g1 * i2i,  g2 * i1i,
        g1 * i2i, -g1 * i2r, -g2 * i1r,
       -g2 * i1i,  g2 * i1r, -g1,
    );
    BlochGenerator {
        m: core - Matrix3::identity() * (p.gamma_0 + g1),
        drift: Vector3::new(0.0, 0.0, -p.gamma_0),
    }
}

/// Unique stationary state of the driven emitter.
pub fn steady_state(p: &DriveParams) -> Result<QubitState> {
    let gen = generator(p);
    let svd = gen.m.svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smax == 0.0 || smin <= 1e-13 * smax {
        return Err(Error::SingularGenerator);
    }
    let s = gen.m.lu().solve(&(-gen.drift)).ok_or(Error::SingularGenerator)?;
    QubitState::new(s[0], s[1], s[2])
}

/// Eigenvalues and eigenvectors of the homogeneous generator.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigensystem {
    /// Sorted by real part descending, then imaginary part ascending.
    pub values: [C64; 3],
    /// Unit eigenvectors; the largest component is real and positive.
    pub vectors: [Vector3<C64>; 3],
    /// Set when a repeated eigenvalue lacks a full set of eigenvectors.
    pub degenerate: bool,
}

pub fn eigensystem(p: &DriveParams) -> Eigensystem {
    let m = generator(p).m;
    let ev = m.complex_eigenvalues();
    let mut values = [ev[0], ev[1], ev[2]];
    let scale = m.norm().max(1e-300);
    let tie = 1e-12 * scale;
    values.sort_by(|a, b| {
        if (a.re - b.re).abs() <= tie {
            a.im.total_cmp(&b.im)
        } else {
            b.re.total_cmp(&a.re)
        }
    });
    let mc: Matrix3<C64> = m.map(|v| C64::new(v, 0.0));
    let cluster = 1e-7 * scale;
    let mut vectors = [Vector3::zeros(); 3];
    let mut degenerate = false;
    let mut k = 0;
    while k < 3 {
        let mut mult = 1;
        while k + mult < 3 && (values[k + mult] - values[k]).norm() <= cluster {
            mult += 1;
        }
        let lambda = values[k..k + mult].iter().sum::<C64>() / mult as f64;
        let shifted = mc - Matrix3::identity() * lambda;
        let svd = shifted.svd(false, true);
        let v_t = svd.v_t.expect("requested right singular vectors");
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
        if mult > 1 && svd.singular_values[order[mult - 1]] > 1e-6 * scale {
            degenerate = true;
        }
        for (slot, &idx) in order.iter().take(mult).enumerate() {
            let v: Vector3<C64> = v_t.row(idx).adjoint();
            vectors[k + slot] = normalize_phase(v);
        }
        k += mult;
    }
    Eigensystem { values, vectors, degenerate }
}

fn normalize_phase(v: Vector3<C64>) -> Vector3<C64> {
    let big = v.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap();
    let rot = big.conj() / big.norm();
    let n = v.norm();
    v.map(|c| c * rot / n)
}

/// Small-`β` expansion of the three eigenvalues, ordered as
/// `[λ₁, λ₂ (+Ω), λ₃ (−Ω)]`.
pub fn weak_coupling_eigenvalues(p: &DriveParams) -> [C64; 3] {
    let (a1, a2) = (p.i1.norm(), p.i2.norm());
    let c = (2.0 * p.i1.arg() - p.i2.arg()).cos();
    let b2 = p.beta * p.beta;
    let l1 = -p.gamma_0 - p.gamma_e * b2 * (1.0 - a2 * c);
    let re = -p.gamma_0 - p.gamma_e * b2 * (3.0 + a2 * c) / 2.0;
    let im = 2.0 * a1 * p.gamma_e * p.beta;
    [C64::new(l1, 0.0), C64::new(re, im), C64::new(re, -im)]
}

/// Decay channels of the coherences when `I₁ = 0` and `γ₀ = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct I2DecayModes {
    /// Fast rate `−g₁(1 + |I₂|)`.
    pub lambda_plus: f64,
    /// Slow rate `−g₁(1 − |I₂|)`.
    pub lambda_minus: f64,
    /// In-plane direction decaying at `lambda_plus`.
    pub v_plus: [f64; 2],
    /// In-plane direction decaying at `lambda_minus`.
    pub v_minus: [f64; 2],
    /// Phase of the slow direction, `θ₂/2`.
    pub preserved_phase: f64,
}

pub fn i2_decay_modes(p: &DriveParams) -> Result<I2DecayModes> {
    if p.i1.norm() > 1e-15 || p.gamma_0 != 0.0 {
        return Err(Error::InvalidArgument("decay modes need I1 = 0 and gamma_0 = 0".into()));
    }
    let g1 = p.g1();
    let a2 = p.i2.norm();
    let half = 0.5 * p.i2.arg();
    Ok(I2DecayModes {
        lambda_plus: -g1 * (1.0 + a2),
        lambda_minus: -g1 * (1.0 - a2),
        v_plus: [-half.sin(), half.cos()],
        v_minus: [half.cos(), half.sin()],
        preserved_phase: half,
    })
}

/// Exact solution operator `s(t) = e^{Mt}s₀ + ∫e^{Mτ}c dτ` of a constant generator.
#[derive(Debug, Clone, PartialEq)]
pub struct Propagator {
    augmented: Matrix4<f64>,
}

impl Propagator {
    pub fn new(p: &DriveParams) -> Self {
        Self { augmented: generator(p).augmented() }
    }

    /// Transfer matrix over a time span, acting on `(x, y, z, 1)`.
    pub fn transfer(&self, t: f64) -> Matrix4<f64> {
        (self.augmented * t).exp()
    }

    pub fn state_at(&self, s0: &QubitState, t: f64) -> QubitState {
        apply_transfer(&self.transfer(t), s0)
    }

    /// Samples `s(k·dt)` for `k = 0..=steps` by repeated exact stepping.
    pub fn sample(&self, s0: &QubitState, dt: f64, steps: usize) -> Vec<QubitState> {
        let step = self.transfer(dt);
        let mut v = Vector4::new(s0.x, s0.y, s0.z, 1.0);
        let mut out = Vec::with_capacity(steps + 1);
        out.push(*s0);
        for _ in 0..steps {
            v = step * v;
            out.push(QubitState::new_unchecked(v[0], v[1], v[2]));
        }
        out
    }
}

fn apply_transfer(t: &Matrix4<f64>, s: &QubitState) -> QubitState {
    let v = t * Vector4::new(s.x, s.y, s.z, 1.0);
    QubitState::new_unchecked(v[0], v[1], v[2])
}

/// Largest step accepted by [`integrate`].
pub fn max_step(p: &DriveParams) -> f64 {
    let lam = eigensystem(p).values.iter().map(|l| l.norm()).fold(0.0, f64::max);
    let rate = lam.max(p.gamma_0).max(p.g2().abs());
    if rate == 0.0 {
        f64::INFINITY
    } else {
        0.01 / rate
    }
}

fn check_norm(s: QubitState) -> Result<QubitState> {
    let n = s.norm();
    if !n.is_finite() || n > 1.0 + BLOCH_EPS {
        return Err(Error::NormViolation { norm: n });
    }
    Ok(s)
}

fn time_grid(t_end: f64, dt: f64) -> Result<Vec<f64>> {
    if !(t_end >= 0.0 && dt > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidArgument(format!("need t_end >= 0 and dt > 0, got {t_end}, {dt}")));
    }
    let full = (t_end / dt).floor() as usize;
    let mut ts: Vec<f64> = (0..=full).map(|k| k as f64 * dt).collect();
    if t_end - ts[full] > 1e-12 * dt.max(t_end) {
        ts.push(t_end);
    }
    Ok(ts)
}

/// Trajectory of a constant-parameter drive sampled every `dt`.
pub fn integrate(p: &DriveParams, s0: &QubitState, t_end: f64, dt: f64) -> Result<Vec<(f64, QubitState)>> {
    let s0 = QubitState::new(s0.x, s0.y, s0.z)?;
    let limit = max_step(p);
    if dt > limit {
        return Err(Error::StepTooLarge { dt, limit });
    }
    let ts = time_grid(t_end, dt)?;
    let prop = Propagator::new(p);
    let step = prop.transfer(dt);
    let mut out = Vec::with_capacity(ts.len());
    let mut s = s0;
    out.push((0.0, s));
    for w in ts.windows(2) {
        let h = w[1] - w[0];
        s = if (h - dt).abs() <= 1e-15 * dt {
            apply_transfer(&step, &s)
        } else {
            prop.state_at(&s, h)
        };
        out.push((w[1], check_norm(s)?));
    }
    Ok(out)
}

/// Trajectory under time-dependent parameters, classical RK4 with step `dt`.
pub fn integrate_time_dependent<F>(params: F, s0: &QubitState, t_end: f64, dt: f64) -> Result<Vec<(f64, QubitState)>>
where
    F: Fn(f64) -> DriveParams,
{
    let s0 = QubitState::new(s0.x, s0.y, s0.z)?;
    let ts = time_grid(t_end, dt)?;
    let f = |t: f64, v: &Vector3<f64>| generator(&params(t)).rate(v);
    let mut v = Vector3::new(s0.x, s0.y, s0.z);
    let mut out = Vec::with_capacity(ts.len());
    out.push((0.0, s0));
    for w in ts.windows(2) {
        let (t, h) = (w[0], w[1] - w[0]);
        let limit = max_step(&params(t));
        if h > limit {
            return Err(Error::StepTooLarge { dt: h, limit });
        }
        let k1 = f(t, &v);
        let k2 = f(t + h / 2.0, &(v + k1 * (h / 2.0)));
        let k3 = f(t + h / 2.0, &(v + k2 * (h / 2.0)));
        let k4 = f(t + h, &(v + k3 * h));
        v += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        out.push((w[1], check_norm(QubitState::new_unchecked(v[0], v[1], v[2]))?));
    }
    Ok(out)
}

/// Rabi angular frequency `γ_e|I₁||sin 2β|`.
pub fn rabi_frequency(p: &DriveParams) -> Result<f64> {
    if p.i1.norm() == 0.0 {
        return Err(Error::NoRabiWindow);
    }
    Ok(p.gamma_e * p.i1.norm() * (2.0 * p.beta).sin().abs())
}

/// Range of `β` where coherent driving beats both radiative decay and
/// electron-induced dephasing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RabiWindow {
    pub beta_min: f64,
    pub beta_max: f64,
}

impl RabiWindow {
    pub fn is_empty(&self) -> bool {
        self.beta_min >= self.beta_max
    }

    pub fn contains(&self, beta: f64) -> bool {
        beta > self.beta_min && beta < self.beta_max
    }
}

/// `(γ₀/(2|I₁|γ_e), |I₁|)`. The `β` stored in `p` is ignored.
pub fn rabi_window(p: &DriveParams) -> Result<RabiWindow> {
    let a1 = p.i1.norm();
    if a1 == 0.0 {
        return Err(Error::NoRabiWindow);
    }
    Ok(RabiWindow { beta_min: p.gamma_0 / (2.0 * a1 * p.gamma_e), beta_max: a1 })
}

/// Settings for detecting Rabi oscillations in `z(t)` from the ground state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillationCriterion {
    /// Observation window in Rabi periods `2π/Ω`.
    pub periods: f64,
    /// Samples per Rabi period.
    pub samples_per_period: usize,
    /// Minimum rebound after the first extremum, relative to the first swing.
    pub min_rebound: f64,
}

impl Default for OscillationCriterion {
    fn default() -> Self {
        Self { periods: 3.0, samples_per_period: 400, min_rebound: 0.02 }
    }
}

/// Whether `z(t)` from the ground state turns back after its first extremum
/// by at least `min_rebound` of the initial swing.
pub fn shows_rabi_oscillation(p: &DriveParams, crit: &OscillationCriterion) -> Result<bool> {
    let omega = rabi_frequency(p)?;
    if omega == 0.0 {
        return Ok(false);
    }
    let period = 2.0 * PI / omega;
    let steps = (crit.periods * crit.samples_per_period as f64).ceil() as usize;
    let dt = crit.periods * period / steps as f64;
    let zs: Vec<f64> = Propagator::new(p)
        .sample(&QubitState::ground(), dt, steps)
        .iter()
        .map(|s| s.z)
        .collect();
    Ok(rebound_fraction(&zs).is_some_and(|r| r >= crit.min_rebound))
}

/// Rebound between the first two extrema of a sampled signal relative to the
/// swing from the start to the first extremum.
pub fn rebound_fraction(z: &[f64]) -> Option<f64> {
    let extrema: Vec<usize> = (1..z.len().saturating_sub(1))
        .filter(|&k| (z[k] - z[k - 1]) * (z[k + 1] - z[k]) < 0.0)
        .take(2)
        .collect();
    let first = *extrema.first()?;
    let swing = (z[first] - z[0]).abs();
    if swing == 0.0 {
        return None;
    }
    let second = extrema.get(1).copied().unwrap_or(z.len() - 1);
    Some((z[second] - z[first]).abs() / swing)
}

/// Angular frequency of the strongest spectral component of a uniformly
/// sampled signal (mean removed, zero padded, parabolic peak interpolation).
pub fn dominant_frequency(samples: &[f64], dt: f64) -> Result<f64> {
    if samples.len() < 4 || dt <= 0.0 {
        return Err(Error::InvalidArgument("need >= 4 samples and dt > 0".into()));
    }
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    let n = (samples.len() * 16).next_power_of_two();
    let mut buf: Vec<rustfft::num_complex::Complex<f64>> = samples
        .iter()
        .map(|&v| rustfft::num_complex::Complex::new(v - mean, 0.0))
        .chain(std::iter::repeat(rustfft::num_complex::Complex::new(0.0, 0.0)))
        .take(n)
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let mag: Vec<f64> = buf[..n / 2].iter().map(|c| c.norm()).collect();
    let k = (1..mag.len() - 1)
        .max_by(|&a, &b| mag[a].total_cmp(&mag[b]))
        .ok_or(Error::InvalidArgument("signal too short".into()))?;
    let (a, b, c) = (mag[k - 1], mag[k], mag[k + 1]);
    let denom = a - 2.0 * b + c;
    let shift = if denom != 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
    Ok(2.0 * PI * (k as f64 + shift) / (n as f64 * dt))
}

/// Steady states reachable by varying modulation and coupling at fixed
/// `γ₀/γ_e`, and the coverage of the inscribed sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccessibleRegion {
    pub gamma_ratio: f64,
    /// Steady states with `θ₁ = 0`; all others follow by rotation about `z`.
    pub points: Vec<QubitState>,
    /// Radius of the inscribed sphere, `γ_e/(2γ_e + γ₀)`.
    pub r_s: f64,
    /// Centre of the inscribed sphere on the `z` axis, `r_s − 1`.
    pub z_s: f64,
    /// Largest distance from a sampled sphere point to the nearest steady state.
    pub max_gap: f64,
}

impl AccessibleRegion {
    pub fn covers(&self, tol: f64) -> bool {
        self.max_gap <= tol
    }
}

/// Radical-inverse sequence value for `index` in base `base`.
pub fn halton(mut index: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

/// `n` nearly uniform points on the unit sphere.
pub fn fibonacci_sphere(n: usize) -> Vec<[f64; 3]> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|k| {
            let z = 1.0 - (2.0 * k as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let a = golden * k as f64;
            [r * a.cos(), r * a.sin(), z]
        })
        .collect()
}

/// Samples `n_points` steady states on a Halton grid over
/// `β ∈ [0, π/2]`, `|I₁|, |I₂| ∈ [0, 1]`, `θ₂ ∈ [0, 2π)` with `θ₁ = 0`, and
/// measures how well they cover `sphere_samples` points of the inscribed
/// sphere.
///
/// Rotating `(θ₁, θ₂) → (θ₁ + χ, θ₂ + 2χ)` rotates the steady state by `χ`
/// about `z`, so distances are compared in the `(sqrt(x² + y²), z)` half-plane.
pub fn accessible_region(gamma_ratio: f64, n_points: usize, sphere_samples: usize) -> Result<AccessibleRegion> {
    if !(gamma_ratio.is_finite() && gamma_ratio >= 0.0) {
        return Err(Error::InvalidArgument(format!("gamma ratio {gamma_ratio} must be >= 0")));
    }
    let mut points = Vec::with_capacity(n_points);
    for k in 1..=n_points {
        let beta = 0.5 * PI * halton(k, 2);
        let a1 = halton(k, 3);
        let a2 = halton(k, 5);
        let th2 = 2.0 * PI * halton(k, 7);
        let p = DriveParams::new(beta, 1.0, gamma_ratio, C64::new(a1, 0.0), C64::from_polar(a2, th2))?;
        match steady_state(&p) {
            Ok(s) => points.push(s),
            Err(Error::SingularGenerator) => continue,
            Err(e) => return Err(e),
        }
    }
    let r_s = 1.0 / (2.0 + gamma_ratio);
    let z_s = r_s - 1.0;
    let flat: Vec<(f64, f64)> = points.iter().map(|s| (s.x.hypot(s.y), s.z)).collect();
    let max_gap = fibonacci_sphere(sphere_samples)
        .iter()
        .map(|u| {
            let (rho, z) = (r_s * u[0].hypot(u[1]), z_s + r_s * u[2]);
            flat.iter()
                .map(|&(pr, pz)| (pr - rho).hypot(pz - z))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    Ok(AccessibleRegion { gamma_ratio, points, r_s, z_s, max_gap })
}
