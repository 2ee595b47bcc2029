//! Emitter state readout from electron energy spectra.
//!
//! Spectra are indexed by `j`, the peak at wavevector `k₀ + j·q`. Positive `j`
//! means the electron gained energy. A comb index `n` (state `|k₀ − nq⟩`)
//! lands at `j = −n`.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::electron::ElectronComb;
use crate::error::{Error, Result};
use crate::qubit::QubitState;
use crate::scatter::{apply_smatrix, CouplingStrength, JointState};

const SUM_TOL: f64 = 1e-12;

/// Occupation of each sideband peak.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum(BTreeMap<i64, f64>);

impl Spectrum {
    /// Validates normalization and non-negativity.
    pub fn new(peaks: BTreeMap<i64, f64>) -> Result<Self> {
        let total: f64 = peaks.values().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidArgument(format!("spectrum sums to {total}")));
        }
        if let Some((j, v)) = peaks.iter().find(|(_, &v)| v < -SUM_TOL || !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("occupation {v} at j={j}")));
        }
        Ok(Self(peaks))
    }

    /// Builds a spectrum from measured occupations, renormalizing them.
    pub fn from_measured(peaks: BTreeMap<i64, f64>) -> Result<Self> {
        let clamped: BTreeMap<i64, f64> = peaks.into_iter().map(|(j, v)| (j, v.max(0.0))).collect();
        let total: f64 = clamped.values().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidArgument(format!("measured spectrum sums to {total}")));
        }
        Self::new(clamped.into_iter().map(|(j, v)| (j, v / total)).collect())
    }

    pub fn get(&self, j: i64) -> f64 {
        self.0.get(&j).copied().unwrap_or(0.0)
    }

    pub fn peaks(&self) -> &BTreeMap<i64, f64> {
        &self.0
    }

    pub fn total(&self) -> f64 {
        self.0.values().sum()
    }
}

fn occupations(peaks: impl IntoIterator<Item = (i64, f64)>) -> BTreeMap<i64, f64> {
    let mut m = BTreeMap::new();
    for (j, v) in peaks {
        *m.entry(j).or_insert(0.0) += v;
    }
    m
}

/// Spectrum after one passage of a comb `c_n ∝ f_n e^{inφ}` with real `f_n`.
pub fn spectrum_general(rho: &QubitState, c: &ElectronComb, beta: f64, phi: f64) -> Result<Spectrum> {
    let rho = QubitState::new(rho.x, rho.y, rho.z)?;
    let profile: BTreeMap<i64, f64> = c.linear_phase_profile(phi)?.into_iter().collect();
    let f = |n: i64| profile.get(&n).copied().unwrap_or(0.0);
    let (lo, hi) = c.support();
    let (sb, cb) = beta.sin_cos();
    let (ss, cc) = (sb * sb, cb * cb);
    let interference = 0.5 * rho.d().norm() * (2.0 * beta).sin() * (rho.phase_d() - phi).sin();
    let z = rho.z;
    let peaks = (lo - 1..=hi + 1).map(|n| {
        let (fm, f0, fp) = (f(n - 1), f(n), f(n + 1));
        let v = cc * f0 * f0 + 0.5 * ss * (fp * fp + fm * fm + z * (fp * fp - fm * fm))
            - interference * f0 * (fp - fm);
        (-n, v)
    });
    Spectrum::new(occupations(peaks))
}

/// Spectrum of the joint state after an explicit S-matrix application.
pub fn spectrum_from_joint(rho: &QubitState, c: &ElectronComb, beta: CouplingStrength) -> Result<Spectrum> {
    let j = JointState::product(rho, c, JointState::DEFAULT_PAD)?;
    let out = apply_smatrix(&j, beta)?;
    Spectrum::new(occupations(out.electron_spectrum().into_iter().map(|(n, p)| (-n, p))))
}

/// Three-peak spectrum of a single-wavevector electron.
pub fn spectrum_monochromatic(z: f64, beta: f64) -> Result<Spectrum> {
    if z.is_nan() || z.abs() > 1.0 + crate::qubit::BLOCH_EPS {
        return Err(Error::InvalidArgument(format!("|z| = {} exceeds 1", z.abs())));
    }
    let (sb, cb) = beta.sin_cos();
    let ss = sb * sb;
    Spectrum::new(occupations([
        (-1, 0.5 * ss * (1.0 - z)),
        (0, cb * cb),
        (1, 0.5 * ss * (1.0 + z)),
    ]))
}

/// Five-peak spectrum for the comb `{k₀ − q, k₀, k₀ + q}` with weights `α₀`, `α₁`.
pub fn spectrum_two_sideband(rho: &QubitState, alpha0: f64, alpha1: f64, beta: f64, phi: f64) -> Result<Spectrum> {
    let rho = QubitState::new(rho.x, rho.y, rho.z)?;
    if (alpha0 * alpha0 + alpha1 * alpha1 - 1.0).abs() > SUM_TOL {
        return Err(Error::InvalidArgument(format!(
            "alpha0^2 + alpha1^2 = {} must be 1",
            alpha0 * alpha0 + alpha1 * alpha1
        )));
    }
    let (sb, cb) = beta.sin_cos();
    let (ss, cc) = (sb * sb, cb * cb);
    let (a0s, a1s) = (alpha0 * alpha0, alpha1 * alpha1);
    let z = rho.z;
    let cross = rho.d().norm() / (2.0 * SQRT_2) * (2.0 * beta).sin() * (rho.phase_d() - phi).sin() * alpha0 * alpha1;
    let side = |sign: f64| 0.5 * cc * a1s + 0.5 * ss * (1.0 + sign * z) * a0s - sign * cross;
    let outer = |sign: f64| 0.25 * ss * a1s * (1.0 + sign * z);
    Spectrum::new(occupations([
        (-2, outer(-1.0)),
        (-1, side(-1.0)),
        (0, cc * a0s + 0.5 * ss * a1s),
        (1, side(1.0)),
        (2, outer(1.0)),
    ]))
}

/// `(n_j^S, n_j^A) = (n_{+j} + n_{−j}, n_{+j} − n_{−j})`.
pub fn sym_antisym(s: &Spectrum, j: u32) -> (f64, f64) {
    let (p, m) = (s.get(j as i64), s.get(-(j as i64)));
    (p + m, p - m)
}

/// Interval from which the coupling candidate is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaPrior {
    pub lo: f64,
    pub hi: f64,
}

impl Default for BetaPrior {
    /// Weak interaction: `β ∈ [0, π/2]`.
    fn default() -> Self {
        Self { lo: 0.0, hi: FRAC_PI_2 }
    }
}

/// Reconstructed emitter state and coupling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reconstruction {
    pub z: f64,
    pub d: C64,
    /// `asin(sqrt(2 n₂^S)/|α₁|)`.
    pub beta0: f64,
    /// `{β₀, π − β₀, π + β₀, 2π − β₀}`.
    pub beta_candidates: [f64; 4],
    /// Candidate selected by the prior and used for `d`.
    pub beta: f64,
    pub purity: f64,
}

/// Wire form of a [`Reconstruction`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionReport {
    pub z: f64,
    pub d_re: f64,
    pub d_im: f64,
    pub beta0: f64,
    pub candidates: [f64; 4],
    pub purity: f64,
}

impl Reconstruction {
    pub fn state(&self) -> QubitState {
        QubitState::new_unchecked(self.d.re, self.d.im, self.z)
    }

    pub fn report(&self) -> ReconstructionReport {
        ReconstructionReport {
            z: self.z,
            d_re: self.d.re,
            d_im: self.d.im,
            beta0: self.beta0,
            candidates: self.beta_candidates,
            purity: self.purity,
        }
    }
}

/// Coherence estimator `γ = (√2/α₀α₁)(n₁^A − 2(α₀²/α₁²) n₂^A) = |d| sin2β sin(φ − φ_d)`.
pub fn coherence_estimator(s: &Spectrum, alpha0: f64, alpha1: f64) -> f64 {
    let (_, a1) = sym_antisym(s, 1);
    let (_, a2) = sym_antisym(s, 2);
    SQRT_2 / (alpha0 * alpha1) * (a1 - 2.0 * alpha0 * alpha0 / (alpha1 * alpha1) * a2)
}

/// Two-phase reconstruction with the default weak-coupling prior.
pub fn reconstruct(
    s1: &Spectrum,
    phi1: f64,
    s2: &Spectrum,
    phi2: f64,
    alpha0: f64,
    alpha1: f64,
) -> Result<Reconstruction> {
    reconstruct_with_prior(s1, phi1, s2, phi2, alpha0, alpha1, &BetaPrior::default())
}

pub fn reconstruct_with_prior(
    s1: &Spectrum,
    phi1: f64,
    s2: &Spectrum,
    phi2: f64,
    alpha0: f64,
    alpha1: f64,
    prior: &BetaPrior,
) -> Result<Reconstruction> {
    let sep = (phi1 - phi2).sin();
    if sep.abs() < 1e-9 {
        return Err(Error::DegeneratePhases(sep));
    }
    if alpha0 <= 0.0 || alpha1 <= 0.0 {
        return Err(Error::InvalidArgument("both alpha0 and alpha1 must be > 0".into()));
    }
    let (ns1, na1) = sym_antisym(s1, 2);
    let (ns2, na2) = sym_antisym(s2, 2);
    let ns = 0.5 * (ns1 + ns2);
    let na = 0.5 * (na1 + na2);
    if ns.is_nan() || ns <= 0.0 {
        return Err(Error::NoCouplingSignal);
    }
    let z = na / ns;
    let beta0 = ((2.0 * ns).sqrt() / alpha1).min(1.0).asin();
    let candidates = [beta0, PI - beta0, PI + beta0, 2.0 * PI - beta0];
    let beta = candidates
        .iter()
        .copied()
        .find(|b| *b >= prior.lo && *b <= prior.hi)
        .ok_or_else(|| {
            Error::InvalidArgument(format!(
                "no coupling candidate in [{}, {}] (candidates {candidates:?})",
                prior.lo, prior.hi
            ))
        })?;
    let s2b = (2.0 * beta).sin();
    if s2b.abs() < 1e-12 {
        return Err(Error::InvalidArgument("sin(2 beta) vanishes; coherences are not observable".into()));
    }
    let g1 = coherence_estimator(s1, alpha0, alpha1);
    let g2 = coherence_estimator(s2, alpha0, alpha1);
    let d = (C64::from_polar(g1, phi2) - C64::from_polar(g2, phi1)) / (s2b * sep);
    let purity = z.hypot(d.norm());
    Ok(Reconstruction { z, d, beta0, beta_candidates: candidates, beta, purity })
}

/// Population readout from a monochromatic probe: `(z, β)` with
/// `z = n₁^A/n₁^S` and `sin²β = n₁^S`. Coherences are not recoverable.
pub fn reconstruct_monochromatic(s: &Spectrum) -> Result<(f64, f64)> {
    let (ns, na) = sym_antisym(s, 1);
    if ns.is_nan() || ns <= 0.0 {
        return Err(Error::NoCouplingSignal);
    }
    Ok((na / ns, ns.min(1.0).sqrt().asin()))
}

/// `sqrt(z² + |d|²)`.
pub fn purity_from_reconstruction(r: &Reconstruction) -> f64 {
    r.z.hypot(r.d.norm())
}

/// Multiplies every occupation by `1 + level·ξ` with standard normal `ξ`, then
/// renormalizes.
pub fn apply_multiplicative_noise<R: Rng + ?Sized>(s: &Spectrum, level: f64, rng: &mut R) -> Result<Spectrum> {
    let noisy = s
        .peaks()
        .iter()
        .map(|(&j, &v)| {
            let xi: f64 = StandardNormal.sample(rng);
            (j, v * (1.0 + level * xi))
        })
        .collect();
    Spectrum::from_measured(noisy)
}

/// Empirical spectrum from `shots` electrons, drawn peak by peak as
/// conditional binomials.
pub fn sample_shots<R: Rng + ?Sized>(s: &Spectrum, shots: u64, rng: &mut R) -> Result<Spectrum> {
    if shots == 0 {
        return Err(Error::InvalidArgument("need at least one shot".into()));
    }
    let mut remaining = shots;
    let mut mass_left = 1.0f64;
    let mut counts = BTreeMap::new();
    let n_peaks = s.peaks().len();
    for (k, (&j, &p)) in s.peaks().iter().enumerate() {
        let c = if k + 1 == n_peaks || mass_left <= 0.0 {
            remaining
        } else {
            let q = (p.max(0.0) / mass_left).clamp(0.0, 1.0);
            Binomial::new(remaining, q)
                .map_err(|e| Error::InvalidArgument(e.to_string()))?
                .sample(rng)
        };
        remaining -= c;
        mass_left -= p.max(0.0);
        counts.insert(j, c as f64 / shots as f64);
    }
    Spectrum::from_measured(counts)
}
