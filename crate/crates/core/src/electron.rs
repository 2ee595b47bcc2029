//! Electron wavefunctions on the sideband lattice.
//!
//! Index `n` labels the wavevector `k₀ − n·q`; the ladder operator `b̂`
//! moves amplitude from `n` to `n + 1`. Overlap integrals are reported in the
//! convention that enters the emitter update and the Bloch generator:
//! `I_j = Σ_n c_{n+j} c̄_n`, the complex conjugate of `⟨ψ|b̂^j|ψ⟩`. An ideal
//! comb `Σ e^{inφ}|k₀ − nq⟩` therefore has `I_j → e^{ijφ}`.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::bessel::bessel_j_table;
use crate::error::{Error, Result};

const NORM_TOL: f64 = 1e-12;

/// Normalized finite set of amplitudes on the sideband lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<CombEntry>", into = "Vec<CombEntry>")]
pub struct ElectronComb {
    start: i64,
    amps: Vec<C64>,
}

/// Wire form of a single comb amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombEntry {
    pub n: i64,
    pub re: f64,
    pub im: f64,
}

impl TryFrom<Vec<CombEntry>> for ElectronComb {
    type Error = Error;

    fn try_from(v: Vec<CombEntry>) -> Result<Self> {
        ElectronComb::from_amplitudes(v.into_iter().map(|e| (e.n, C64::new(e.re, e.im))))
    }
}

impl From<ElectronComb> for Vec<CombEntry> {
    fn from(c: ElectronComb) -> Self {
        c.iter()
            .map(|(n, a)| CombEntry { n, re: a.re, im: a.im })
            .collect()
    }
}

impl ElectronComb {
    /// Normalizes arbitrary amplitudes. Repeated indices add up.
    pub fn from_amplitudes<I>(amps: I) -> Result<Self>
    where
        I: IntoIterator<Item = (i64, C64)>,
    {
        let entries: Vec<(i64, C64)> = amps.into_iter().collect();
        if entries.is_empty() {
            return Err(Error::EmptyComb);
        }
        let lo = entries.iter().map(|e| e.0).min().unwrap();
        let hi = entries.iter().map(|e| e.0).max().unwrap();
        let mut v = vec![C64::new(0.0, 0.0); (hi - lo + 1) as usize];
        for (n, a) in entries {
            if !(a.re.is_finite() && a.im.is_finite()) {
                return Err(Error::InvalidArgument(format!("non-finite amplitude at n={n}")));
            }
            v[(n - lo) as usize] += a;
        }
        Self::from_window(lo, v)
    }

    fn from_window(start: i64, mut amps: Vec<C64>) -> Result<Self> {
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::EmptyComb);
        }
        amps.iter_mut().for_each(|a| *a /= norm);
        // trim exact zeros at both ends
        let first = amps.iter().position(|a| a.norm_sqr() > 0.0).unwrap();
        let last = amps.iter().rposition(|a| a.norm_sqr() > 0.0).unwrap();
        let amps = amps[first..=last].to_vec();
        Ok(Self { start: start + first as i64, amps })
    }

    pub fn monochromatic() -> Self {
        Self { start: 0, amps: vec![C64::new(1.0, 0.0)] }
    }

    /// Lowest and highest occupied index.
    pub fn support(&self) -> (i64, i64) {
        (self.start, self.start + self.amps.len() as i64 - 1)
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn amplitude(&self, n: i64) -> C64 {
        let k = n - self.start;
        if k < 0 || k >= self.amps.len() as i64 {
            C64::new(0.0, 0.0)
        } else {
            self.amps[k as usize]
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, C64)> + '_ {
        self.amps
            .iter()
            .enumerate()
            .map(move |(k, &a)| (self.start + k as i64, a))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨ψ|b̂^j|ψ⟩ = Σ_n c̄_{n+j} c_n`, evaluated from the ladder action.
    pub fn ladder_expectation(&self, j: u32) -> C64 {
        let j = j as usize;
        if j >= self.amps.len() {
            return C64::new(0.0, 0.0);
        }
        self.amps[..self.amps.len() - j]
            .iter()
            .zip(&self.amps[j..])
            .map(|(c_n, c_nj)| c_nj.conj() * c_n)
            .sum()
    }

    /// Overlap integral `I_j`, the conjugate of [`Self::ladder_expectation`].
    pub fn overlap_integral(&self, j: u32) -> C64 {
        self.ladder_expectation(j).conj()
    }

    pub fn overlaps(&self) -> OverlapIntegrals {
        OverlapIntegrals { i1: self.overlap_integral(1), i2: self.overlap_integral(2) }
    }

    pub fn with_global_phase(&self, chi: f64) -> Self {
        let p = C64::from_polar(1.0, chi);
        Self { start: self.start, amps: self.amps.iter().map(|a| a * p).collect() }
    }

    pub fn shifted(&self, by: i64) -> Self {
        Self { start: self.start + by, amps: self.amps.clone() }
    }

    /// Decomposes the comb as `e^{iχ} f_n e^{inφ}` with real `f_n`.
    ///
    /// Fails with [`Error::NonConformingComb`] when no global phase makes the
    /// de-chirped amplitudes real.
    pub fn linear_phase_profile(&self, phi: f64) -> Result<Vec<(i64, f64)>> {
        let dechirped: Vec<(i64, C64)> = self
            .iter()
            .map(|(n, a)| (n, a * C64::from_polar(1.0, -(n as f64) * phi)))
            .collect();
        let (_, pivot) = dechirped
            .iter()
            .copied()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .expect("comb is never empty");
        let unphase = pivot.conj() / pivot.norm();
        let mut out = Vec::with_capacity(dechirped.len());
        for (n, a) in dechirped {
            let r = a * unphase;
            if r.im.abs() > 1e-10 {
                return Err(Error::NonConformingComb);
            }
            out.push((n, r.re));
        }
        Ok(out)
    }
}

/// Complex pair `(I₁, I₂)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapIntegrals {
    pub i1: C64,
    pub i2: C64,
}

impl OverlapIntegrals {
    pub fn new(i1: C64, i2: C64) -> Result<Self> {
        if i1.norm() > 1.0 + NORM_TOL || i2.norm() > 1.0 + NORM_TOL {
            return Err(Error::InvalidArgument(format!(
                "overlap integrals must satisfy |I| <= 1, got |I1|={}, |I2|={}",
                i1.norm(),
                i2.norm()
            )));
        }
        Ok(Self { i1, i2 })
    }

    pub fn zero() -> Self {
        Self { i1: C64::new(0.0, 0.0), i2: C64::new(0.0, 0.0) }
    }

    /// `I₁ = |I₁|e^{iθ₁}`, `I₂ = |I₂|e^{iθ₂}`.
    pub fn from_polar(i1_abs: f64, theta1: f64, i2_abs: f64, theta2: f64) -> Result<Self> {
        Self::new(C64::from_polar(i1_abs, theta1), C64::from_polar(i2_abs, theta2))
    }

    pub fn theta1(&self) -> f64 {
        self.i1.arg()
    }

    pub fn theta2(&self) -> f64 {
        self.i2.arg()
    }
}

/// `N` equal peaks `e^{inφ}/√N` at `n = 1..=N`.
pub fn equal_comb(n_peaks: usize, phi: f64) -> Result<ElectronComb> {
    if n_peaks == 0 {
        return Err(Error::InvalidArgument("comb needs at least one peak".into()));
    }
    let a = 1.0 / (n_peaks as f64).sqrt();
    ElectronComb::from_amplitudes(
        (1..=n_peaks as i64).map(|n| (n, C64::from_polar(a, n as f64 * phi))),
    )
}

/// Three-peak comb with `f₋₁ = f₁` and linear phase `φ`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoSidebandComb {
    pub comb: ElectronComb,
    /// Normalized weight of the central peak, `f₀/sqrt(f₀² + 2f₁²)`.
    pub alpha0: f64,
    /// Normalized weight of the side peaks, `√2 f₁/sqrt(f₀² + 2f₁²)`.
    pub alpha1: f64,
    pub phi: f64,
}

pub fn two_sideband_comb(f0: f64, f1: f64, phi: f64) -> Result<TwoSidebandComb> {
    if f0 < 0.0 || f1 < 0.0 || !(f0.is_finite() && f1.is_finite()) {
        return Err(Error::InvalidArgument("peak weights must be finite and >= 0".into()));
    }
    let total = (f0 * f0 + 2.0 * f1 * f1).sqrt();
    if total == 0.0 {
        return Err(Error::EmptyComb);
    }
    let comb = ElectronComb::from_amplitudes(
        [(-1, f1), (0, f0), (1, f1)]
            .into_iter()
            .filter(|&(_, f)| f > 0.0)
            .map(|(n, f)| (n, C64::from_polar(f, n as f64 * phi))),
    )?;
    Ok(TwoSidebandComb { comb, alpha0: f0 / total, alpha1: SQRT_2 * f1 / total, phi })
}

/// PINEM preparation followed by free drift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PinemParams {
    /// PINEM coupling magnitude `|g_L|`.
    pub gl_abs: f64,
    /// Drift phase factor `θ` (rad).
    pub theta: f64,
    /// Initial wavevector spread relative to the photon recoil, `σ_k/q₀`.
    pub sigma_ratio: f64,
    /// PINEM phase plus the drift phase offset (rad).
    pub phi0: f64,
}

impl PinemParams {
    pub fn new(gl_abs: f64, theta: f64, sigma_ratio: f64, phi0: f64) -> Result<Self> {
        if !(gl_abs >= 0.0 && gl_abs.is_finite()) {
            return Err(Error::InvalidArgument(format!("|g_L| = {gl_abs} must be >= 0")));
        }
        if !(sigma_ratio >= 0.0 && sigma_ratio.is_finite()) {
            return Err(Error::InvalidArgument(format!("sigma ratio {sigma_ratio} must be >= 0")));
        }
        if sigma_ratio >= 0.5 {
            log::warn!("sigma_k/q0 = {sigma_ratio} is not small; drift overlaps assume sigma_k << q0");
        }
        Ok(Self { gl_abs, theta, sigma_ratio, phi0 })
    }
}

/// Overlap integral `I_n` of a drifted PINEM electron as a truncated Bessel sum.
///
/// `m_cutoff` bounds the summation to `|m| <= m_cutoff`; it is rejected when
/// `|J_{m_cutoff}(2|g_L|)|` is not below `1e−16`.
pub fn pinem_drift_integral(p: &PinemParams, n: u32, m_cutoff: usize) -> Result<C64> {
    let x = 2.0 * p.gl_abs;
    let nn = n as usize;
    let table = bessel_j_table(m_cutoff + nn, x);
    let tail = table[m_cutoff].abs();
    if tail >= 1e-16 {
        return Err(Error::CutoffTooSmall { cutoff: m_cutoff, tail });
    }
    let j = |m: i64| -> f64 {
        let v = table[m.unsigned_abs() as usize];
        if m < 0 && m % 2 != 0 {
            -v
        } else {
            v
        }
    };
    let nf = n as f64;
    let m_max = m_cutoff as i64;
    let sum: C64 = (-m_max..=m_max)
        .map(|m| C64::from_polar(j(m) * j(m + n as i64), -(m as f64) * nf * p.theta))
        .sum();
    let damping = (nf * p.sigma_ratio * p.theta / SQRT_2).powi(2);
    let phase = -nf * p.phi0 - 0.5 * nf * nf * p.theta;
    Ok(sum * C64::from_polar((-damping).exp(), phase))
}

/// Smallest cutoff with `|J_m(2|g_L|)| < 1e−16` for every `m` beyond it.
pub fn pinem_cutoff(gl_abs: f64) -> usize {
    let x = 2.0 * gl_abs;
    let mut m = (x.ceil() as usize).max(4);
    loop {
        let t = bessel_j_table(m + 1, x);
        if t[m].abs() < 1e-16 && t[m + 1].abs() < 1e-16 {
            return m;
        }
        m += 2;
    }
}

/// Location and value of the largest attainable `|I₁|` for drifted PINEM
/// electrons (`θ = π`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PinemMaximum {
    pub i1_abs: f64,
    pub gl_abs: f64,
}

impl PinemMaximum {
    /// Argument of `J₁` at the optimum, `4|g_L|`.
    pub fn bessel_argument(&self) -> f64 {
        4.0 * self.gl_abs
    }
}

/// Maximizes `|I₁|` over `|g_L|` at `θ = π` for a given `σ_k/q₀`.
pub fn pinem_i1_max_with(sigma_ratio: f64) -> Result<PinemMaximum> {
    let eval = |g: f64| -> Result<f64> {
        let p = PinemParams::new(g, PI, sigma_ratio, 0.0)?;
        Ok(pinem_drift_integral(&p, 1, pinem_cutoff(g))?.norm())
    };
    // coarse bracket
    let (mut best_g, mut best) = (0.0, 0.0);
    let steps = 400;
    let span = 2.0;
    for k in 0..=steps {
        let g = span * k as f64 / steps as f64;
        let v = eval(g)?;
        if v > best {
            best = v;
            best_g = g;
        }
    }
    let h = span / steps as f64;
    let (mut a, mut b) = ((best_g - h).max(0.0), best_g + h);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (eval(c)?, eval(d)?);
    while b - a > 1e-12 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = eval(d)?;
        }
    }
    let g = 0.5 * (a + b);
    Ok(PinemMaximum { i1_abs: eval(g)?, gl_abs: g })
}

/// Upper bound on `|I₁|` for drifted PINEM electrons with vanishing spread.
pub fn pinem_i1_max() -> Result<PinemMaximum> {
    pinem_i1_max_with(0.0)
}
