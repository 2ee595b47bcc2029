//! Brute-force reference: time-ordered integration of the interaction
//! Hamiltonian on a truncated sideband window.
//!
//! In the interaction picture the resonant coupling acts as
//! `H(t) = G(t)* σ₋ b̂† + G(t) σ₊ b̂`, with
//! `G(t) = g w(t) exp(i[(ω − v₀q)(t − t_c) + χ (2u/τ)²])`,
//! a raised-cosine transit envelope `w` of duration `τ = L/v₀` (normalized so
//! `∫ g w dt = g L/v₀`) and an optional even chirp `χ` that makes the
//! propagator differ from its second-order Magnus truncation.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::electron::OverlapIntegrals;
use crate::error::{Error, Result};
use crate::qubit::QubitState;
use crate::scatter::{qe_after_overlaps, CouplingStrength, JointBranch, JointState};

const LEAK_TOL: f64 = 1e-10;
const NORM_TOL: f64 = 1e-10;
const STEP_LIMIT: f64 = 1e-3;

/// Truncated lattice and coupling schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeModel {
    /// Inclusive range of sideband indices held in memory.
    pub k_window: (i64, i64),
    pub q: f64,
    pub v0: f64,
    pub omega: f64,
    /// Interaction length; transit time is `length / v0`.
    pub length: f64,
    /// Peak-normalized coupling amplitude.
    pub g: C64,
    /// Quadratic phase across the transit, in radians at the envelope edge.
    pub chirp: f64,
    pub t_span: f64,
    pub dt: f64,
}

impl LatticeModel {
    /// Resonant, unchirped schedule with `∫G dt = β`, unit transit time and
    /// a 25% margin on each side.
    pub fn resonant(beta: CouplingStrength, k_window: (i64, i64), steps: usize) -> Result<Self> {
        if k_window.0 > k_window.1 {
            return Err(Error::InvalidArgument(format!("empty window {k_window:?}")));
        }
        if steps == 0 {
            return Err(Error::InvalidArgument("steps must be positive".into()));
        }
        let t_span = 1.5;
        Ok(Self {
            k_window,
            q: 1.0,
            v0: 1.0,
            omega: 1.0,
            length: 1.0,
            g: beta.complex(),
            chirp: 0.0,
            t_span,
            dt: t_span / steps as f64,
        })
    }

    /// Window covering the support of `j` plus `pad` slots.
    pub fn window_for(j: &JointState, pad: usize) -> (i64, i64) {
        let mut lo = i64::MAX;
        let mut hi = i64::MIN;
        for (_, b) in j.branches() {
            lo = lo.min(b.start);
            hi = hi.max(b.start + b.g.len() as i64 - 1);
        }
        (lo - pad as i64, hi + pad as i64)
    }

    /// Sets the chirp and rescales `g` so the integrated coupling is unchanged.
    pub fn with_chirp(self, chirp: f64) -> Self {
        let before = self.integrated_coupling();
        let mut m = Self { chirp, ..self };
        let after = m.integrated_coupling();
        if after.norm() > 0.0 {
            m.g *= before / after;
        }
        m
    }

    pub fn transit_time(&self) -> f64 {
        self.length / self.v0
    }

    pub fn detuning(&self) -> f64 {
        self.omega - self.v0 * self.q
    }

    pub fn steps(&self) -> usize {
        (self.t_span / self.dt).round() as usize
    }

    /// Coupling `G(t)`.
    pub fn coupling(&self, t: f64) -> C64 {
        let tau = self.transit_time();
        let u = t - 0.5 * self.t_span;
        if u.abs() > 0.5 * tau {
            return C64::new(0.0, 0.0);
        }
        let w = 1.0 + (2.0 * PI * u / tau).cos();
        let s = 2.0 * u / tau;
        self.g * w * C64::from_polar(1.0, self.detuning() * u + self.chirp * s * s)
    }

    /// `∫G dt` by composite Simpson over the transit, where `G` is smooth.
    pub fn integrated_coupling(&self) -> C64 {
        let n = 2 * self.steps().max(1);
        let tau = self.transit_time();
        let a = 0.5 * (self.t_span - tau);
        let h = tau / n as f64;
        let mut acc = self.coupling(a) + self.coupling(a + tau);
        for i in 1..n {
            let wgt = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += self.coupling(a + i as f64 * h) * wgt;
        }
        acc * (h / 3.0)
    }

    /// Coupling of the second-order propagator built from this schedule.
    pub fn effective_beta(&self) -> Result<CouplingStrength> {
        let b = self.integrated_coupling();
        CouplingStrength::new(b.norm(), b.arg())
    }

    fn validate(&self) -> Result<()> {
        let tau = self.transit_time();
        if !(tau > 0.0 && tau <= self.t_span) {
            return Err(Error::InvalidArgument(format!(
                "transit time {tau} must be positive and fit in t_span {}",
                self.t_span
            )));
        }
        let h_max = 2.0 * self.g.norm();
        if self.dt * h_max > STEP_LIMIT {
            return Err(Error::StepTooLarge { dt: self.dt, limit: STEP_LIMIT / h_max });
        }
        Ok(())
    }
}

struct Slab {
    g: Vec<C64>,
    e: Vec<C64>,
}

fn derivative(coupling: C64, s: &Slab, out: &mut Slab) {
    // i∂ψ/∂t = Hψ: g_m ← G* e_{m+1}, e_m ← G g_{m−1}
    let n = s.g.len();
    let mi = C64::new(0.0, -1.0);
    for m in 0..n {
        out.g[m] = if m + 1 < n { mi * coupling.conj() * s.e[m + 1] } else { C64::new(0.0, 0.0) };
        out.e[m] = if m > 0 { mi * coupling * s.g[m - 1] } else { C64::new(0.0, 0.0) };
    }
}

fn axpy(base: &Slab, k: &Slab, h: f64, out: &mut Slab) {
    for i in 0..base.g.len() {
        out.g[i] = base.g[i] + k.g[i] * h;
        out.e[i] = base.e[i] + k.e[i] * h;
    }
}

fn evolve_branch(m: &LatticeModel, b: &JointBranch) -> Result<JointBranch> {
    let (lo, hi) = m.k_window;
    let len = (hi - lo + 1) as usize;
    let b_end = b.start + b.g.len() as i64 - 1;
    let zero = C64::new(0.0, 0.0);
    let mut s = Slab { g: vec![zero; len], e: vec![zero; len] };
    for (k, (g, e)) in b.g.iter().zip(&b.e).enumerate() {
        let n = b.start + k as i64;
        if n < lo || n > hi {
            if g.norm_sqr() + e.norm_sqr() > 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "initial support [{}, {b_end}] exceeds window [{lo}, {hi}]",
                    b.start
                )));
            }
            continue;
        }
        let i = (n - lo) as usize;
        s.g[i] = *g;
        s.e[i] = *e;
    }
    let norm0: f64 = s.g.iter().chain(&s.e).map(|a| a.norm_sqr()).sum();
    let mk = || Slab { g: vec![zero; len], e: vec![zero; len] };
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (mk(), mk(), mk(), mk(), mk());
    let dt = m.dt;
    for step in 0..m.steps() {
        let t = step as f64 * dt;
        let (c0, ch, c1) = (m.coupling(t), m.coupling(t + 0.5 * dt), m.coupling(t + dt));
        derivative(c0, &s, &mut k1);
        axpy(&s, &k1, 0.5 * dt, &mut tmp);
        derivative(ch, &tmp, &mut k2);
        axpy(&s, &k2, 0.5 * dt, &mut tmp);
        derivative(ch, &tmp, &mut k3);
        axpy(&s, &k3, dt, &mut tmp);
        derivative(c1, &tmp, &mut k4);
        for i in 0..len {
            s.g[i] += (k1.g[i] + k2.g[i] * 2.0 + k3.g[i] * 2.0 + k4.g[i]) * (dt / 6.0);
            s.e[i] += (k1.e[i] + k2.e[i] * 2.0 + k3.e[i] * 2.0 + k4.e[i]) * (dt / 6.0);
        }
        let edge = [s.g[0], s.e[0], s.g[len - 1], s.e[len - 1]]
            .iter()
            .map(|a| a.norm())
            .fold(0.0, f64::max);
        if edge > LEAK_TOL {
            return Err(Error::BoundaryLeak { amplitude: edge });
        }
    }
    let norm1: f64 = s.g.iter().chain(&s.e).map(|a| a.norm_sqr()).sum();
    if (norm1 - norm0).abs() > NORM_TOL {
        return Err(Error::NormViolation { norm: norm1.sqrt() });
    }
    Ok(JointBranch { start: lo, g: s.g, e: s.e })
}

/// Integrates every pure branch of `psi0` over `m.t_span` with classical RK4.
pub fn evolve_joint(m: &LatticeModel, psi0: &JointState) -> Result<JointState> {
    m.validate()?;
    let branches = psi0
        .branches()
        .iter()
        .map(|(w, b)| Ok((*w, evolve_branch(m, b)?)))
        .collect::<Result<Vec<_>>>()?;
    JointState::from_branches(branches)
}

/// Norm of the second Magnus term, `|∫∫_{t₁>t₂} Im G(t₁)G*(t₂)|`, by
/// trapezoid double sum on the step grid.
pub fn magnus_second_order(m: &LatticeModel) -> f64 {
    let n = m.steps();
    let dt = m.dt;
    let mut running = C64::new(0.0, 0.0);
    let mut acc = 0.0;
    for i in 0..=n {
        let w = if i == 0 || i == n { 0.5 * dt } else { dt };
        let gi = m.coupling(i as f64 * dt);
        acc += w * (gi * running.conj()).im;
        running += gi * w;
    }
    acc.abs()
}

/// Largest amplitude difference between two joint states with matching
/// branch decompositions, after aligning their windows.
pub fn joint_distance(a: &JointState, b: &JointState) -> Result<f64> {
    if a.branches().len() != b.branches().len() {
        return Err(Error::InvalidArgument("branch counts differ".into()));
    }
    let mut worst = 0.0f64;
    for ((wa, ba), (wb, bb)) in a.branches().iter().zip(b.branches()) {
        if (wa - wb).abs() > 1e-12 {
            return Err(Error::InvalidArgument("branch weights differ".into()));
        }
        let lo = ba.start.min(bb.start);
        let hi = (ba.start + ba.g.len() as i64).max(bb.start + bb.g.len() as i64);
        let at = |br: &JointBranch, n: i64| -> (C64, C64) {
            let k = n - br.start;
            if k < 0 || k >= br.g.len() as i64 {
                (C64::new(0.0, 0.0), C64::new(0.0, 0.0))
            } else {
                (br.g[k as usize], br.e[k as usize])
            }
        };
        let d2: f64 = (lo..hi)
            .map(|n| {
                let (ga, ea) = at(ba, n);
                let (gb, eb) = at(bb, n);
                (ga - gb).norm_sqr() + (ea - eb).norm_sqr()
            })
            .sum();
        worst = worst.max(d2.sqrt());
    }
    Ok(worst)
}

/// Stroboscopic emitter trajectory under repeated single-electron events
/// separated by `1/γ_e`, each followed by exact radiative relaxation.
///
/// Entry `k` is the state at `t = k/γ_e`, just before electron `k + 1` arrives.
pub fn collision_model(
    rho0: &QubitState,
    ov: &OverlapIntegrals,
    beta: CouplingStrength,
    gamma_e: f64,
    gamma_0: f64,
    n_events: usize,
) -> Result<Vec<(f64, QubitState)>> {
    if !(gamma_e > 0.0 && gamma_0 >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need gamma_e > 0 and gamma_0 >= 0, got {gamma_e}, {gamma_0}"
        )));
    }
    let mut s = QubitState::new(rho0.x, rho0.y, rho0.z)?;
    let tau = 1.0 / gamma_e;
    let decay = (-gamma_0 * tau).exp();
    let mut out = Vec::with_capacity(n_events + 1);
    out.push((0.0, s));
    for k in 1..=n_events {
        let a = qe_after_overlaps(&s, ov, beta);
        s = QubitState::new_unchecked(a.x * decay, a.y * decay, -1.0 + (a.z + 1.0) * decay);
        out.push((k as f64 * tau, s));
    }
    Ok(out)
}
