//! Two-level emitter states.
//!
//! The emitter lives in the basis `{|g⟩, |e⟩}` (index 0 is the ground state).
//! Pauli operators follow
//!
//! ```text
//! σ₁ = |e⟩⟨g| + |g⟩⟨e|,   σ₂ = −i|e⟩⟨g| + i|g⟩⟨e|,   σ₃ = |e⟩⟨e| − |g⟩⟨g|
//! ```
//!
//! so that `ρ = (1 + xσ₁ + yσ₂ + zσ₃)/2`, the ground state sits at `z = −1`,
//! and the coherence `d ≡ x + iy` equals `2⟨g|ρ|e⟩`.

use nalgebra::Matrix2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack on the Bloch-vector norm. Absorbs integrator round-off.
pub const BLOCH_EPS: f64 = 1e-9;

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const EIGEN_TOL: f64 = 1e-10;

const I: C64 = C64::new(0.0, 1.0);
const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

pub fn sigma_1() -> Matrix2<C64> {
    Matrix2::new(ZERO, ONE, ONE, ZERO)
}

pub fn sigma_2() -> Matrix2<C64> {
    Matrix2::new(ZERO, I, -I, ZERO)
}

pub fn sigma_3() -> Matrix2<C64> {
    Matrix2::new(-ONE, ZERO, ZERO, ONE)
}

/// Emitter state as a Bloch vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl QubitState {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let s = Self { x, y, z };
        let norm = s.norm();
        if !norm.is_finite() || norm > 1.0 + BLOCH_EPS {
            return Err(Error::NonPhysicalState { norm });
        }
        Ok(s)
    }

    /// Builds a state without the norm check. Callers must guarantee physicality.
    pub(crate) const fn new_unchecked(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub const fn ground() -> Self {
        Self::new_unchecked(0.0, 0.0, -1.0)
    }

    pub const fn excited() -> Self {
        Self::new_unchecked(0.0, 0.0, 1.0)
    }

    pub const fn maximally_mixed() -> Self {
        Self::new_unchecked(0.0, 0.0, 0.0)
    }

    /// The pure state `cos θ|g⟩ + sin θ e^{−iγ}|e⟩`.
    pub fn from_angles(theta: f64, gamma: f64) -> Self {
        let s2 = (2.0 * theta).sin();
        Self::new_unchecked(s2 * gamma.cos(), s2 * gamma.sin(), -(2.0 * theta).cos())
    }

    /// Builds a state from its population inversion and coherence `d = x + iy`.
    pub fn from_zd(z: f64, d: C64) -> Result<Self> {
        Self::new(d.re, d.im, z)
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Coherence `d = x + iy`.
    pub fn d(&self) -> C64 {
        C64::new(self.x, self.y)
    }

    /// Phase of the coherence, `arg d`.
    pub fn phase_d(&self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn purity(&self) -> f64 {
        purity(self)
    }

    pub fn ground_population(&self) -> f64 {
        0.5 * (1.0 - self.z)
    }

    pub fn excited_population(&self) -> f64 {
        0.5 * (1.0 + self.z)
    }

    /// Rotates the coherence, `d → d·e^{iχ}`, leaving `z` untouched.
    pub fn rotate_coherence(&self, chi: f64) -> Self {
        let d = self.d() * C64::from_polar(1.0, chi);
        Self::new_unchecked(d.re, d.im, self.z)
    }

    pub fn to_density(&self) -> DensityMatrix2 {
        bloch_to_density(self).expect("QubitState invariants guarantee a valid density matrix")
    }

    /// Amplitudes `(a_g, a_e)` of the pure state along this Bloch direction.
    ///
    /// The vector is normalized first; the zero vector maps to the ground state.
    pub fn pure_amplitudes(&self) -> [C64; 2] {
        let n = self.norm();
        if n < 1e-300 {
            return [ONE, ZERO];
        }
        let (nz, d) = (self.z / n, self.d() / n);
        if nz >= 0.0 {
            let ae = (0.5 * (1.0 + nz)).sqrt();
            [d / (2.0 * ae), C64::new(ae, 0.0)]
        } else {
            let ag = (0.5 * (1.0 - nz)).sqrt();
            [C64::new(ag, 0.0), d.conj() / (2.0 * ag)]
        }
    }

    /// Spectral decomposition into at most two weighted pure branches.
    pub fn pure_branches(&self) -> Vec<(f64, [C64; 2])> {
        let r = self.norm().min(1.0);
        if r < 1e-300 {
            return vec![(0.5, [ONE, ZERO]), (0.5, [ZERO, ONE])];
        }
        let up = self.pure_amplitudes();
        let down = Self::new_unchecked(-self.x, -self.y, -self.z).pure_amplitudes();
        let w = 0.5 * (1.0 + r);
        if 1.0 - w < 1e-15 {
            vec![(1.0, up)]
        } else {
            vec![(w, up), (1.0 - w, down)]
        }
    }
}

/// Validated 2×2 density matrix in the `{|g⟩, |e⟩}` basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix2(Matrix2<C64>);

impl DensityMatrix2 {
    pub fn new(m: Matrix2<C64>) -> Result<Self> {
        let herm = (m - m.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max);
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "not Hermitian (deviation {herm:e})"
            )));
        }
        let tr = m.trace();
        if (tr - ONE).norm() > TRACE_TOL {
            return Err(Error::InvalidDensityMatrix(format!("trace is {tr}")));
        }
        // eigenvalues of a Hermitian 2x2 with unit trace: (1 ± |r|)/2
        let a = m[(0, 0)].re;
        let b = m[(1, 1)].re;
        let off = m[(0, 1)].norm();
        let disc = (0.25 * (a - b) * (a - b) + off * off).sqrt();
        let lmin = 0.5 * (a + b) - disc;
        if lmin < -EIGEN_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "negative eigenvalue {lmin:e}"
            )));
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &Matrix2<C64> {
        &self.0
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.0[(row, col)]
    }

    /// `Tr(ρ²)`.
    pub fn purity_trace(&self) -> f64 {
        (self.0 * self.0).trace().re
    }
}

pub fn bloch_to_density(s: &QubitState) -> Result<DensityMatrix2> {
    let s = QubitState::new(s.x, s.y, s.z)?;
    let m = (Matrix2::identity() + sigma_1() * C64::from(s.x) + sigma_2() * C64::from(s.y)
        + sigma_3() * C64::from(s.z))
        * C64::from(0.5);
    DensityMatrix2::new(m)
}

pub fn density_to_bloch(rho: &DensityMatrix2) -> Result<QubitState> {
    // re-validate: the wrapper may have been built from a matrix that drifted
    let rho = DensityMatrix2::new(*rho.matrix())?;
    let m = rho.matrix();
    let x = (m * sigma_1()).trace().re;
    let y = (m * sigma_2()).trace().re;
    let z = (m * sigma_3()).trace().re;
    QubitState::new(x, y, z)
}

/// Purity `sqrt(2 Tr ρ² − 1)`, equal to the Bloch-vector length.
pub fn purity(s: &QubitState) -> f64 {
    s.norm()
}

/// Concurrence of a bipartite pure state from the purity trace of either
/// reduced state, `C = sqrt(2(1 − Tr ρ²))`.
///
/// For a two-dimensional reduced state with Bloch length `P` this is
/// `sqrt(1 − P²)`.
pub fn concurrence_from_reduced(purity_trace: f64) -> Result<f64> {
    if !(0.0..=1.0 + TRACE_TOL).contains(&purity_trace) {
        return Err(Error::InvalidArgument(format!(
            "purity trace {purity_trace} outside [0, 1]"
        )));
    }
    Ok((2.0 * (1.0 - purity_trace)).max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn assert_matrix(rho: &DensityMatrix2, expect: [[f64; 2]; 2]) {
        for (r, row) in expect.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                assert_abs_diff_eq!(rho.get(r, c).re, v, epsilon = 1e-15);
                assert_abs_diff_eq!(rho.get(r, c).im, 0.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn bloch_to_density_examples() {
        let g = bloch_to_density(&QubitState::ground()).unwrap();
        assert_matrix(&g, [[1.0, 0.0], [0.0, 0.0]]);
        let mm = bloch_to_density(&QubitState::maximally_mixed()).unwrap();
        assert_matrix(&mm, [[0.5, 0.0], [0.0, 0.5]]);
        let plus = bloch_to_density(&QubitState::new(1.0, 0.0, 0.0).unwrap()).unwrap();
        assert_matrix(&plus, [[0.5, 0.5], [0.5, 0.5]]);
    }

    #[test]
    fn bloch_rejects_outside_ball() {
        let s = QubitState { x: 1.0, y: 0.1, z: 0.0 };
        assert!(matches!(bloch_to_density(&s), Err(Error::NonPhysicalState { .. })));
        assert!(QubitState::new(0.0, 0.0, 1.0 + 0.5 * BLOCH_EPS).is_ok());
    }

    #[test]
    fn density_to_bloch_examples() {
        let g = DensityMatrix2::new(Matrix2::new(ONE, ZERO, ZERO, ZERO)).unwrap();
        assert_eq!(density_to_bloch(&g).unwrap().as_array(), [0.0, 0.0, -1.0]);
        let mm = DensityMatrix2::new(Matrix2::identity() * C64::from(0.5)).unwrap();
        assert_eq!(density_to_bloch(&mm).unwrap().as_array(), [0.0, 0.0, 0.0]);
        let s = QubitState::new(0.3, -0.4, 0.5).unwrap();
        let back = density_to_bloch(&bloch_to_density(&s).unwrap()).unwrap();
        assert_abs_diff_eq!(back.x, 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(back.y, -0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(back.z, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn density_rejects_bad_matrices() {
        let non_herm = Matrix2::new(C64::from(0.5), ONE, ZERO, C64::from(0.5));
        assert!(DensityMatrix2::new(non_herm).is_err());
        let bad_trace = Matrix2::new(ONE, ZERO, ZERO, ONE);
        assert!(DensityMatrix2::new(bad_trace).is_err());
        let negative = Matrix2::new(C64::from(1.5), ZERO, ZERO, C64::from(-0.5));
        assert!(DensityMatrix2::new(negative).is_err());
    }

    #[test]
    fn purity_examples() {
        assert_eq!(purity(&QubitState::ground()), 1.0);
        assert_eq!(purity(&QubitState::maximally_mixed()), 0.0);
        // sqrt(2 Tr ρ² − 1) on the explicit matrix [[.5,.3],[.3,.5]]
        let rho = bloch_to_density(&QubitState::new(0.6, 0.0, 0.0).unwrap()).unwrap();
        let from_matrix = (2.0 * rho.purity_trace() - 1.0).sqrt();
        assert_abs_diff_eq!(from_matrix, 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(purity(&QubitState::new(0.6, 0.0, 0.0).unwrap()), 0.6);
    }

    #[test]
    fn concurrence_examples() {
        assert_eq!(concurrence_from_reduced(1.0).unwrap(), 0.0);
        assert_abs_diff_eq!(concurrence_from_reduced(0.5).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            concurrence_from_reduced(0.75).unwrap(),
            std::f64::consts::FRAC_1_SQRT_2,
            epsilon = 1e-15
        );
        assert!(concurrence_from_reduced(1.5).is_err());
        assert!(concurrence_from_reduced(-0.1).is_err());
    }

    #[test]
    fn concurrence_of_explicit_bell_like_state() {
        // cos a|g,0⟩ + sin a|e,1⟩: reduced electron state diag(cos², sin²)
        for a in [0.1, 0.4, std::f64::consts::FRAC_PI_4] {
            let tr = a.cos().powi(4) + a.sin().powi(4);
            let c = concurrence_from_reduced(tr).unwrap();
            assert_abs_diff_eq!(c, (2.0 * a).sin().abs(), epsilon = 1e-14);
        }
    }

    #[test]
    fn angles_and_amplitudes_agree() {
        for &(theta, gamma) in &[(0.3, 1.1), (1.2, -2.0), (0.0, 0.0), (1.57, 0.4)] {
            let s = QubitState::from_angles(theta, gamma);
            let [ag, ae] = s.pure_amplitudes();
            // same ray as cos θ|g⟩ + sin θ e^{−iγ}|e⟩
            let overlap = ag.conj() * theta.cos()
                + ae.conj() * C64::from_polar(theta.sin(), -gamma);
            assert_abs_diff_eq!(overlap.norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn pure_branches_reconstruct_state() {
        let s = QubitState::new(0.2, -0.5, 0.1).unwrap();
        let mut m = Matrix2::<C64>::zeros();
        for (w, [ag, ae]) in s.pure_branches() {
            let v = nalgebra::Vector2::new(ag, ae);
            m += v * v.adjoint() * C64::from(w);
        }
        let back = density_to_bloch(&DensityMatrix2::new(m).unwrap()).unwrap();
        assert_abs_diff_eq!(back.x, s.x, epsilon = 1e-14);
        assert_abs_diff_eq!(back.y, s.y, epsilon = 1e-14);
        assert_abs_diff_eq!(back.z, s.z, epsilon = 1e-14);
    }
}
