//! Single electron–emitter scattering events.
//!
//! One passage of an electron is described by
//! `Ŝ = cos|β| − i sin|β| (e^{iφ_β} σ̂†b̂ + e^{−iφ_β} σ̂b̂†)`.
//! [`apply_smatrix`] acts with it on an explicit joint state, while
//! [`qe_after_interaction`] is the closed-form emitter update in terms of the
//! overlap integrals of the incoming comb.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::electron::{ElectronComb, OverlapIntegrals};
use crate::error::{Error, Result};
use crate::qubit::{concurrence_from_reduced, QubitState};

const ZERO: C64 = C64::new(0.0, 0.0);
const PURE_TOL: f64 = 1e-9;

/// Integrated interaction strength `β = |β| e^{iφ_β}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingStrength {
    pub beta_abs: f64,
    pub beta_phase: f64,
}

impl CouplingStrength {
    pub fn new(beta_abs: f64, beta_phase: f64) -> Result<Self> {
        if !(beta_abs >= 0.0 && beta_abs.is_finite() && beta_phase.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "coupling must be finite with |beta| >= 0, got |beta|={beta_abs}, phase={beta_phase}"
            )));
        }
        if beta_abs >= PI {
            log::warn!("|beta| = {beta_abs} is beyond pi; second-order propagator is not accurate there");
        }
        Ok(Self { beta_abs, beta_phase })
    }

    /// Real coupling. Negative values are stored as `|β|` with phase `π`.
    pub fn real(beta: f64) -> Result<Self> {
        if beta < 0.0 {
            Self::new(-beta, PI)
        } else {
            Self::new(beta, 0.0)
        }
    }

    pub fn complex(&self) -> C64 {
        C64::from_polar(self.beta_abs, self.beta_phase)
    }
}

/// One pure joint state on a contiguous sideband window.
#[derive(Debug, Clone, PartialEq)]
pub struct JointBranch {
    /// Sideband index of the first slot.
    pub start: i64,
    /// Amplitudes with the emitter in `|g⟩`.
    pub g: Vec<C64>,
    /// Amplitudes with the emitter in `|e⟩`.
    pub e: Vec<C64>,
}

impl JointBranch {
    pub fn norm_sqr(&self) -> f64 {
        self.g.iter().chain(&self.e).map(|a| a.norm_sqr()).sum()
    }

    fn end(&self) -> i64 {
        self.start + self.g.len() as i64 - 1
    }

    fn pad(&mut self, k: usize) {
        let mut g = vec![ZERO; self.g.len() + 2 * k];
        let mut e = g.clone();
        g[k..k + self.g.len()].copy_from_slice(&self.g);
        e[k..k + self.e.len()].copy_from_slice(&self.e);
        self.g = g;
        self.e = e;
        self.start -= k as i64;
    }

    /// Emitter reduced state of this branch.
    pub fn reduced_qe(&self) -> (f64, f64, C64) {
        let pg: f64 = self.g.iter().map(|a| a.norm_sqr()).sum();
        let pe: f64 = self.e.iter().map(|a| a.norm_sqr()).sum();
        let rho_ge: C64 = self.g.iter().zip(&self.e).map(|(g, e)| g * e.conj()).sum();
        (pg, pe, rho_ge)
    }
}

/// Joint emitter–electron state as a classical mixture of pure branches.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    branches: Vec<(f64, JointBranch)>,
}

impl JointState {
    /// Default padding added around the comb support.
    pub const DEFAULT_PAD: usize = 2;

    /// Product state `ρ_QE ⊗ |ψ⟩⟨ψ|` with `pad` empty slots on either side.
    pub fn product(qe: &QubitState, comb: &ElectronComb, pad: usize) -> Result<Self> {
        let qe = QubitState::new(qe.x, qe.y, qe.z)?;
        let (lo, hi) = comb.support();
        let len = (hi - lo + 1) as usize + 2 * pad;
        let start = lo - pad as i64;
        let branches = qe
            .pure_branches()
            .into_iter()
            .map(|(w, [ag, ae])| {
                let mut g = vec![ZERO; len];
                let mut e = vec![ZERO; len];
                for (n, c) in comb.iter() {
                    let k = (n - start) as usize;
                    g[k] = ag * c;
                    e[k] = ae * c;
                }
                (w, JointBranch { start, g, e })
            })
            .collect();
        Ok(Self { branches })
    }

    pub fn from_branches(branches: Vec<(f64, JointBranch)>) -> Result<Self> {
        let wsum: f64 = branches.iter().map(|b| b.0).sum();
        if branches.is_empty() || (wsum - 1.0).abs() > 1e-12 || branches.iter().any(|b| b.0 < 0.0) {
            return Err(Error::InvalidArgument(format!("mixture weights sum to {wsum}")));
        }
        for (_, b) in &branches {
            if b.g.len() != b.e.len() || b.g.is_empty() {
                return Err(Error::InvalidArgument("branch windows must match".into()));
            }
            let n = b.norm_sqr();
            if (n - 1.0).abs() > 1e-12 {
                return Err(Error::NormViolation { norm: n.sqrt() });
            }
        }
        Ok(Self { branches })
    }

    pub fn branches(&self) -> &[(f64, JointBranch)] {
        &self.branches
    }

    /// Total norm `Σ w_k ‖ψ_k‖²`.
    pub fn norm_sqr(&self) -> f64 {
        self.branches.iter().map(|(w, b)| w * b.norm_sqr()).sum()
    }

    /// Extends every branch window so that at least `k` empty slots border
    /// the occupied support on both sides.
    pub fn ensure_padding(&mut self, k: usize) {
        for (_, b) in &mut self.branches {
            let lead = leading_empty(b);
            let trail = trailing_empty(b);
            let need = k.saturating_sub(lead.min(trail));
            if need > 0 {
                b.pad(need);
            }
        }
    }

    pub fn reduced_qe(&self) -> QubitState {
        let (mut pg, mut pe, mut ge) = (0.0, 0.0, ZERO);
        for (w, b) in &self.branches {
            let (g, e, c) = b.reduced_qe();
            pg += w * g;
            pe += w * e;
            ge += c * *w;
        }
        let d = ge * 2.0;
        QubitState::new_unchecked(d.re, d.im, pe - pg)
    }

    /// Occupation of each sideband index, `⟨n̂_k⟩`.
    pub fn electron_spectrum(&self) -> BTreeMap<i64, f64> {
        let mut out = BTreeMap::new();
        for (w, b) in &self.branches {
            for (k, (g, e)) in b.g.iter().zip(&b.e).enumerate() {
                let p = w * (g.norm_sqr() + e.norm_sqr());
                if p > 0.0 {
                    *out.entry(b.start + k as i64).or_insert(0.0) += p;
                }
            }
        }
        out
    }

    /// `Tr{(ρ^e)²}` of the reduced electron state.
    pub fn electron_purity_trace(&self) -> f64 {
        // ρ^e = Σ w |u⟩⟨u| over the g- and e-parts of every branch
        let mut vecs: Vec<(f64, i64, &[C64])> = Vec::new();
        for (w, b) in &self.branches {
            vecs.push((*w, b.start, &b.g));
            vecs.push((*w, b.start, &b.e));
        }
        let inner = |(s1, u): (i64, &[C64]), (s2, v): (i64, &[C64])| -> C64 {
            let lo = s1.max(s2);
            let hi = (s1 + u.len() as i64).min(s2 + v.len() as i64);
            (lo..hi)
                .map(|n| u[(n - s1) as usize].conj() * v[(n - s2) as usize])
                .sum()
        };
        let mut tr = 0.0;
        for &(wa, sa, ua) in &vecs {
            for &(wb, sb, ub) in &vecs {
                tr += wa * wb * inner((sa, ua), (sb, ub)).norm_sqr();
            }
        }
        tr
    }
}

fn leading_empty(b: &JointBranch) -> usize {
    b.g.iter()
        .zip(&b.e)
        .take_while(|(g, e)| g.norm_sqr() + e.norm_sqr() == 0.0)
        .count()
}

fn trailing_empty(b: &JointBranch) -> usize {
    b.g.iter()
        .zip(&b.e)
        .rev()
        .take_while(|(g, e)| g.norm_sqr() + e.norm_sqr() == 0.0)
        .count()
}

/// Applies the scattering matrix branchwise.
///
/// Every branch must keep its outermost slots empty; otherwise amplitude
/// would be pushed out of the window and the call fails with
/// [`Error::WindowUnderflow`].
pub fn apply_smatrix(j: &JointState, beta: CouplingStrength) -> Result<JointState> {
    let (s, c) = beta.beta_abs.sin_cos();
    let up = C64::new(0.0, -s) * C64::from_polar(1.0, beta.beta_phase);
    let down = C64::new(0.0, -s) * C64::from_polar(1.0, -beta.beta_phase);
    let mut branches = Vec::with_capacity(j.branches.len());
    for (w, b) in &j.branches {
        let len = b.g.len();
        let edge_g = b.g[0].norm_sqr() + b.e[0].norm_sqr();
        let edge_e = b.g[len - 1].norm_sqr() + b.e[len - 1].norm_sqr();
        if edge_g > 0.0 {
            return Err(Error::WindowUnderflow { index: b.start });
        }
        if edge_e > 0.0 {
            return Err(Error::WindowUnderflow { index: b.end() });
        }
        let mut g = vec![ZERO; len];
        let mut e = vec![ZERO; len];
        for k in 0..len {
            // σ̂b̂† lowers the emitter and moves n+1 -> n
            let from_e = if k + 1 < len { b.e[k + 1] } else { ZERO };
            // σ̂†b̂ raises the emitter and moves n-1 -> n
            let from_g = if k > 0 { b.g[k - 1] } else { ZERO };
            g[k] = b.g[k] * c + down * from_e;
            e[k] = b.e[k] * c + up * from_g;
        }
        branches.push((*w, JointBranch { start: b.start, g, e }));
    }
    Ok(JointState { branches })
}

/// Closed-form emitter update for real, non-negative `β`.
///
/// With `I₁ = a + ib`, `I₂ = p + iq` and `s² = sin²β` the Bloch vector moves by
///
/// ```text
/// Δx =  sin2β z b + s²(−x + p x + q y)
/// Δy = −sin2β z a + s²(−y − p y + q x)
/// Δz =  sin2β(a y − b x) − 2 s² z
/// ```
pub fn event_map(s: &QubitState, ov: &OverlapIntegrals, beta: f64) -> QubitState {
    let (a, b) = (ov.i1.re, ov.i1.im);
    let (p, q) = (ov.i2.re, ov.i2.im);
    let s2b = (2.0 * beta).sin();
    let ss = beta.sin().powi(2);
    let (x, y, z) = (s.x, s.y, s.z);
    QubitState::new_unchecked(
        x + s2b * z * b + ss * (-x + p * x + q * y),
        y - s2b * z * a + ss * (-y - p * y + q * x),
        z + s2b * (a * y - b * x) - 2.0 * ss * z,
    )
}

/// Emitter state after one electron passage, from the closed-form update.
///
/// A complex `β` is handled by rotating the coherence into the frame where
/// the coupling is real and back.
pub fn qe_after_interaction(
    rho0: &QubitState,
    c: &ElectronComb,
    beta: CouplingStrength,
) -> Result<QubitState> {
    let rho0 = QubitState::new(rho0.x, rho0.y, rho0.z)?;
    Ok(qe_after_overlaps(&rho0, &c.overlaps(), beta))
}

/// As [`qe_after_interaction`], with the overlap integrals given directly.
pub fn qe_after_overlaps(rho0: &QubitState, ov: &OverlapIntegrals, beta: CouplingStrength) -> QubitState {
    let phase = beta.beta_phase;
    let rotated = rho0.rotate_coherence(phase);
    event_map(&rotated, ov, beta.beta_abs).rotate_coherence(-phase)
}

/// Ground-state population after an ideal comb with phase `φ`, starting from
/// `cos θ|g⟩ + sin θ e^{−iγ}|e⟩`.
pub fn ground_state_prob_ideal(theta: f64, gamma: f64, phi: f64, beta: f64) -> Result<f64> {
    let p = theta.cos().powi(2) - beta.sin().powi(2) * (2.0 * theta).cos()
        + 0.5 * (phi - gamma).sin() * (2.0 * theta).sin() * (2.0 * beta).sin();
    if !(-1e-12..=1.0 + 1e-12).contains(&p) {
        return Err(Error::InvalidArgument(format!("population {p} outside [0, 1]")));
    }
    Ok(p.clamp(0.0, 1.0))
}

/// `1 − (1/N) sqrt((N − 2 sin²β)² + sin²2β)`.
///
/// Exact purity loss of an `N`-peak equal comb acting on the states
/// `(0, ±1, 0)`. For `β = π/2` it equals the worst case over all pure states
/// (`2/N` for `N ≥ 2`).
pub fn purity_loss_bound(n: usize, beta: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("N must be >= 1".into()));
    }
    let nf = n as f64;
    let s2 = beta.sin().powi(2);
    Ok(1.0 - ((nf - 2.0 * s2).powi(2) + (2.0 * beta).sin().powi(2)).sqrt() / nf)
}

/// Location and size of a purity-loss maximum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PurityLossPoint {
    pub loss: f64,
    pub theta: f64,
    pub gamma: f64,
    pub beta: f64,
}

fn equal_comb_overlaps(n: usize) -> OverlapIntegrals {
    let nf = n as f64;
    OverlapIntegrals {
        i1: C64::new(((nf - 1.0) / nf).max(0.0), 0.0),
        i2: C64::new(((nf - 2.0) / nf).max(0.0), 0.0),
    }
}

fn grid(k: usize, lo: f64, hi: f64, closed: bool) -> impl Iterator<Item = f64> {
    let denom = if closed { (k.max(2) - 1) as f64 } else { k.max(1) as f64 };
    (0..k.max(1)).map(move |i| lo + (hi - lo) * i as f64 / denom)
}

/// Largest purity loss `1 − 𝒫` of an initially pure emitter after one
/// `N`-peak equal comb, over a `grid × grid` lattice of `θ ∈ [0, π/2]`,
/// `γ ∈ [0, 2π)`.
pub fn max_purity_loss(n: usize, beta: f64, grid_points: usize) -> Result<PurityLossPoint> {
    if n == 0 || grid_points < 2 {
        return Err(Error::InvalidArgument("need N >= 1 and at least 2 grid points".into()));
    }
    let ov = equal_comb_overlaps(n);
    let mut best = PurityLossPoint { loss: f64::NEG_INFINITY, theta: 0.0, gamma: 0.0, beta };
    for theta in grid(grid_points, 0.0, FRAC_PI_2, true) {
        for gamma in grid(grid_points, 0.0, 2.0 * PI, false) {
            let s = QubitState::from_angles(theta, gamma);
            let loss = 1.0 - event_map(&s, &ov, beta).norm();
            if loss > best.loss {
                best = PurityLossPoint { loss, theta, gamma, beta };
            }
        }
    }
    Ok(best)
}

/// Worst purity loss over `θ`, `γ` and `β ∈ [0, π/2]`.
pub fn worst_case_purity_loss(n: usize, grid_points: usize) -> Result<PurityLossPoint> {
    let mut best: Option<PurityLossPoint> = None;
    for beta in grid(grid_points, 0.0, FRAC_PI_2, true) {
        let p = max_purity_loss(n, beta, grid_points)?;
        if best.is_none_or(|b| p.loss > b.loss) {
            best = Some(p);
        }
    }
    best.ok_or_else(|| Error::InvalidArgument("empty grid".into()))
}

/// Emitter–electron concurrence after one passage, from the closed-form
/// expansion in `Ĩ_j = Σ_n f_{n+j} f_n` for a comb `c_n ∝ f_n e^{inφ}`.
///
/// The emitter must be pure; the comb must have a linear phase `φ`.
pub fn concurrence_after(rho0: &QubitState, c: &ElectronComb, beta: f64, phi: f64) -> Result<f64> {
    let purity = rho0.norm();
    if (purity - 1.0).abs() > PURE_TOL {
        return Err(Error::MixedState { purity });
    }
    c.linear_phase_profile(phi)?;
    let it1 = (c.overlap_integral(1) * C64::from_polar(1.0, -phi)).re;
    let it2 = (c.overlap_integral(2) * C64::from_polar(1.0, -2.0 * phi)).re;
    Ok(concurrence_closed_form(rho0, it1, it2, beta, phi))
}

/// Closed-form concurrence for a pure emitter state and real overlaps `Ĩ₁`, `Ĩ₂`.
pub fn concurrence_closed_form(rho0: &QubitState, it1: f64, it2: f64, beta: f64, phi: f64) -> f64 {
    let z = rho0.z;
    let d2 = rho0.x * rho0.x + rho0.y * rho0.y;
    let dabs = d2.sqrt();
    let dphi = phi - rho0.phase_d();
    let (sb, cb) = beta.sin_cos();
    let c2 = sb * sb
        * (2.0 * (2.0 - d2) * (1.0 - it1 * it1) * cb * cb
            + (1.0 - z * z) * (1.0 - it2 * it2) * sb * sb
            + 2.0 * z * dabs * dphi.sin() * (2.0 * beta).sin() * it1 * (it2 - 1.0)
            + 2.0 * (it1 * it1 - it2) * d2 * (2.0 * dphi).cos() * cb * cb);
    c2.max(0.0).sqrt()
}

/// Concurrence from an explicit joint evolution and partial trace.
pub fn concurrence_brute_force(rho0: &QubitState, c: &ElectronComb, beta: CouplingStrength) -> Result<f64> {
    let purity = rho0.norm();
    if (purity - 1.0).abs() > PURE_TOL {
        return Err(Error::MixedState { purity });
    }
    let pure = QubitState::new_unchecked(rho0.x / purity, rho0.y / purity, rho0.z / purity);
    let j = JointState::product(&pure, c, JointState::DEFAULT_PAD)?;
    let out = apply_smatrix(&j, beta)?;
    concurrence_from_reduced(out.electron_purity_trace().min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::electron::equal_comb;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state(rng: &mut impl Rng) -> QubitState {
        let r: f64 = rng.random::<f64>().cbrt();
        let z: f64 = rng.random_range(-1.0..1.0);
        let ph: f64 = rng.random_range(0.0..2.0 * PI);
        let rho = (1.0 - z * z).sqrt();
        QubitState::new_unchecked(r * rho * ph.cos(), r * rho * ph.sin(), r * z)
    }

    fn random_comb(rng: &mut impl Rng, max_peaks: usize) -> ElectronComb {
        let n = rng.random_range(1..=max_peaks);
        let start: i64 = rng.random_range(-3..3);
        ElectronComb::from_amplitudes((0..n as i64).map(|k| {
            (start + k, C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        }))
        .unwrap()
    }

    #[test]
    fn identity_at_zero_coupling() {
        let comb = equal_comb(3, 0.4).unwrap();
        let s = QubitState::from_angles(0.3, 1.1);
        let j = JointState::product(&s, &comb, 2).unwrap();
        let out = apply_smatrix(&j, CouplingStrength::real(0.0).unwrap()).unwrap();
        assert_eq!(out, j);
    }

    #[test]
    fn full_flip_of_ground_state() {
        let j = JointState::product(&QubitState::ground(), &ElectronComb::monochromatic(), 1).unwrap();
        let out = apply_smatrix(&j, CouplingStrength::real(FRAC_PI_2).unwrap()).unwrap();
        let (_, b) = &out.branches()[0];
        // |g, n=0⟩ -> −i|e, n=1⟩, i.e. wavevector k₀ − q
        let k = (1 - b.start) as usize;
        assert_abs_diff_eq!((b.e[k] - C64::new(0.0, -1.0)).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out.norm_sqr(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn window_underflow_rejected() {
        let j = JointState::product(&QubitState::ground(), &equal_comb(2, 0.0).unwrap(), 0).unwrap();
        assert!(matches!(
            apply_smatrix(&j, CouplingStrength::real(0.3).unwrap()),
            Err(Error::WindowUnderflow { .. })
        ));
        let mut padded = j.clone();
        padded.ensure_padding(1);
        assert!(apply_smatrix(&padded, CouplingStrength::real(0.3).unwrap()).is_ok());
    }

    #[test]
    fn closed_form_matches_joint_evolution() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut worst = 0.0f64;
        for _ in 0..1000 {
            let s = random_state(&mut rng);
            let comb = random_comb(&mut rng, 8);
            let beta = CouplingStrength::new(rng.random_range(0.0..FRAC_PI_2), rng.random_range(-PI..PI))
                .unwrap();
            let j = JointState::product(&s, &comb, 1).unwrap();
            let out = apply_smatrix(&j, beta).unwrap();
            assert_abs_diff_eq!(out.norm_sqr(), 1.0, epsilon = 1e-12);
            let brute = out.reduced_qe();
            let closed = qe_after_interaction(&s, &comb, beta).unwrap();
            let dev = (brute.x - closed.x)
                .abs()
                .max((brute.y - closed.y).abs())
                .max((brute.z - closed.z).abs());
            worst = worst.max(dev);
        }
        assert!(worst < 1e-10, "worst deviation {worst:e}");
    }

    #[test]
    fn ideal_comb_rotation() {
        // ground state, ideal comb: Ŝ acts as a rotation and the product form survives
        let phi = 0.6;
        let comb = equal_comb(2000, phi).unwrap();
        let beta = 0.7;
        let out = qe_after_interaction(&QubitState::ground(), &comb, CouplingStrength::real(beta).unwrap()).unwrap();
        let pg = ground_state_prob_ideal(0.0, 0.0, phi, beta).unwrap();
        assert_abs_diff_eq!(out.ground_population(), pg, epsilon = 1e-3);
        assert!(1.0 - out.norm() <= 1e-3);
    }

    #[test]
    fn monochromatic_ground_state() {
        for &beta in &[0.0, 0.3, 1.0, FRAC_PI_2] {
            let out = qe_after_interaction(
                &QubitState::ground(),
                &ElectronComb::monochromatic(),
                CouplingStrength::real(beta).unwrap(),
            )
            .unwrap();
            assert_abs_diff_eq!(out.z, -(2.0 * beta).cos(), epsilon = 1e-15);
            assert_eq!((out.x, out.y), (0.0, 0.0));
        }
    }

    #[test]
    fn single_peak_keeps_balanced_population() {
        let comb = equal_comb(1, 0.0).unwrap();
        for &beta in &[0.2, 0.9, 1.4] {
            for &gamma in &[0.0, 1.0, 2.5] {
                let s = QubitState::from_angles(PI / 4.0, gamma);
                let out = qe_after_interaction(&s, &comb, CouplingStrength::real(beta).unwrap()).unwrap();
                assert_abs_diff_eq!(out.ground_population(), 0.5, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn ground_prob_examples() {
        for &beta in &[0.1, 0.8, 1.5] {
            assert_abs_diff_eq!(
                ground_state_prob_ideal(0.0, 0.4, 1.0, beta).unwrap(),
                beta.cos().powi(2),
                epsilon = 1e-15
            );
            assert_abs_diff_eq!(
                ground_state_prob_ideal(PI / 4.0, 0.4, 0.4, beta).unwrap(),
                0.5,
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn bound_is_exact_for_equatorial_y_states() {
        for &n in &[2usize, 5, 10, 40] {
            let ov = equal_comb_overlaps(n);
            for &beta in &[0.2, 0.7, 1.2, FRAC_PI_2] {
                for &y in &[1.0, -1.0] {
                    let s = QubitState::new_unchecked(0.0, y, 0.0);
                    let loss = 1.0 - event_map(&s, &ov, beta).norm();
                    assert_abs_diff_eq!(loss, purity_loss_bound(n, beta).unwrap(), epsilon = 1e-13);
                }
            }
        }
    }

    #[test]
    fn bound_exceeded_away_from_the_equator_at_fixed_beta() {
        let beta = 0.9;
        let bound = purity_loss_bound(10, beta).unwrap();
        let worst = max_purity_loss(10, beta, 51).unwrap();
        assert!(worst.loss > bound + 0.04, "{worst:?} vs {bound}");
        assert!((worst.theta - PI / 4.0).abs() > 0.1);
    }

    #[test]
    fn worst_case_is_two_over_n() {
        for &n in &[2usize, 5, 20, 100] {
            let w = worst_case_purity_loss(n, 51).unwrap();
            assert_abs_diff_eq!(w.loss, 2.0 / n as f64, epsilon = 1e-12);
            assert_abs_diff_eq!(purity_loss_bound(n, FRAC_PI_2).unwrap(), 2.0 / n as f64, epsilon = 1e-15);
        }
    }

    #[test]
    fn single_peak_can_fully_mix() {
        let p = max_purity_loss(1, FRAC_PI_2, 51).unwrap();
        assert_abs_diff_eq!(p.loss, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.theta, PI / 4.0, epsilon = 1e-12);
        assert!(max_purity_loss(7, 0.0, 11).unwrap().loss.abs() < 1e-15);
    }

    #[test]
    fn concurrence_examples() {
        let s = QubitState::from_angles(PI / 4.0, 0.3);
        let mono = ElectronComb::monochromatic();
        assert_abs_diff_eq!(concurrence_after(&s, &mono, FRAC_PI_2, 0.0).unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(concurrence_after(&s, &mono, 0.0, 0.0).unwrap(), 0.0);
        let big = equal_comb(2000, 0.2).unwrap();
        assert!(concurrence_after(&s, &big, 0.8, 0.2).unwrap() < 0.05);
        assert!(matches!(
            concurrence_after(&QubitState::maximally_mixed(), &mono, 1.0, 0.0),
            Err(Error::MixedState { .. })
        ));
    }

    #[test]
    fn concurrence_matches_partial_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..300 {
            let s = QubitState::from_angles(rng.random_range(0.0..PI), rng.random_range(-PI..PI));
            let n = rng.random_range(1..=8);
            let phi = rng.random_range(-PI..PI);
            let comb = ElectronComb::from_amplitudes((0..n as i64).map(|k| {
                (k, C64::from_polar(rng.random_range(0.1..1.0), k as f64 * phi))
            }))
            .unwrap();
            let beta = rng.random_range(0.0..FRAC_PI_2);
            let closed = concurrence_after(&s, &comb, beta, phi).unwrap();
            let brute = concurrence_brute_force(&s, &comb, CouplingStrength::real(beta).unwrap()).unwrap();
            assert_abs_diff_eq!(closed, brute, epsilon = 1e-8);
        }
    }

    #[test]
    fn complex_beta_is_a_coherence_rotation() {
        let comb = equal_comb(4, 0.3).unwrap();
        let s = QubitState::from_angles(0.5, 0.2);
        let b = CouplingStrength::new(0.6, 1.1).unwrap();
        let direct = qe_after_interaction(&s, &comb, b).unwrap();
        let via_real = event_map(&s.rotate_coherence(1.1), &comb.overlaps(), 0.6).rotate_coherence(-1.1);
        assert_abs_diff_eq!(direct.x, via_real.x, epsilon = 1e-15);
        assert_abs_diff_eq!(direct.y, via_real.y, epsilon = 1e-15);
        assert_abs_diff_eq!(direct.z, via_real.z, epsilon = 1e-15);
    }

    #[test]
    fn spectrum_and_mixed_inputs() {
        let comb = equal_comb(3, 0.0).unwrap();
        let mixed = QubitState::new(0.1, 0.0, 0.2).unwrap();
        let j = JointState::product(&mixed, &comb, 2).unwrap();
        assert_eq!(j.branches().len(), 2);
        let out = apply_smatrix(&j, CouplingStrength::real(0.4).unwrap()).unwrap();
        let total: f64 = out.electron_spectrum().values().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        let brute = out.reduced_qe();
        let closed = qe_after_interaction(&mixed, &comb, CouplingStrength::real(0.4).unwrap()).unwrap();
        assert_abs_diff_eq!(brute.x, closed.x, epsilon = 1e-12);
        assert_abs_diff_eq!(brute.z, closed.z, epsilon = 1e-12);
    }
}
