//! PT-symmetric two-level model `H = [[-v, iγ], [iγ, v]]`, its exact
//! spectrum and the closed-form transmission probability for a linear sweep
//! through both exceptional points.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::error::{require_finite, require_positive, Error, Result};
use crate::propagator::StateVector2;

pub type Vector2 = [C64; 2];
pub type Matrix2 = [[C64; 2]; 2];

/// Default tolerance on the discriminant: a point is treated as exceptional
/// when `|v² − γ²| < DEFAULT_EP_TOLERANCE²`.
pub const DEFAULT_EP_TOLERANCE: f64 = 1e-8;

/// Off-diagonal coupling used when building the 2×2 Hamiltonian.
///
/// `PtImaginary` is the physical model. `HermitianReal` replaces `iγ` with a
/// real `γ` and gives the ordinary Landau–Zener problem, which is used as a
/// control for the integrator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CouplingMode {
    #[default]
    PtImaginary,
    HermitianReal,
}

impl CouplingMode {
    pub fn coupling(self, gamma: f64) -> C64 {
        match self {
            CouplingMode::PtImaginary => C64::new(0.0, gamma),
            CouplingMode::HermitianReal => C64::new(gamma, 0.0),
        }
    }

    /// `v² + c²` for the coupling `c`, written as a product where possible so
    /// that cancellation near the exceptional points stays exact.
    fn discriminant(self, v: f64, gamma: f64) -> f64 {
        match self {
            CouplingMode::PtImaginary => (v - gamma) * (v + gamma),
            CouplingMode::HermitianReal => v.mul_add(v, gamma * gamma),
        }
    }
}

/// Sweep parameters for `v = αt` running from `v_initial` to `v_final`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelParams {
    pub gamma: f64,
    pub alpha: f64,
    pub v_initial: f64,
    pub v_final: f64,
}

impl TwoLevelParams {
    /// Validates that the sweep brackets both exceptional points.
    pub fn new(gamma: f64, alpha: f64, v_initial: f64, v_final: f64) -> Result<Self> {
        require_positive("gamma", gamma)?;
        require_positive("alpha", alpha)?;
        require_finite("v_initial", v_initial)?;
        require_finite("v_final", v_final)?;
        if v_initial >= -gamma {
            return Err(Error::invalid(
                "v_initial",
                format!("must lie below the lower exceptional point -{gamma}, got {v_initial}"),
            ));
        }
        if v_final <= gamma {
            return Err(Error::invalid(
                "v_final",
                format!("must lie above the upper exceptional point {gamma}, got {v_final}"),
            ));
        }
        Ok(Self { gamma, alpha, v_initial, v_final })
    }

    /// Symmetric sweep over `[-20γ, 20γ]`.
    pub fn with_default_range(gamma: f64, alpha: f64) -> Result<Self> {
        Self::new(gamma, alpha, -20.0 * gamma, 20.0 * gamma)
    }

    pub fn t_initial(&self) -> f64 {
        self.v_initial / self.alpha
    }

    pub fn t_final(&self) -> f64 {
        self.v_final / self.alpha
    }
}

/// `[[-v, iγ], [iγ, v]]`.
pub fn hamiltonian(v: f64, gamma: f64) -> Result<Matrix2> {
    require_finite("v", v)?;
    require_finite("gamma", gamma)?;
    Ok(hamiltonian_with_mode(v, gamma, CouplingMode::PtImaginary))
}

pub fn hamiltonian_with_mode(v: f64, gamma: f64, mode: CouplingMode) -> Matrix2 {
    let c = mode.coupling(gamma);
    [[C64::new(-v, 0.0), c], [c, C64::new(v, 0.0)]]
}

/// Exceptional points `v = ±γ`.
pub fn exceptional_points(gamma: f64) -> Result<(f64, f64)> {
    require_positive("gamma", gamma)?;
    Ok((-gamma, gamma))
}

/// Eigen-decomposition of the two-level Hamiltonian at one value of `v`.
///
/// Index 0 is the `+` branch and index 1 the `−` branch. Right eigenvectors
/// have unit Euclidean norm with the first nonzero component real and
/// positive. Left eigenvectors are row vectors `l` with `l H = λ l`, scaled so
/// that `l_i · R_j = δ_ij` (plain bilinear product, no conjugation). Both are
/// `None` at an exceptional point.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    pub v: f64,
    pub gamma: f64,
    pub eigenvalues: [C64; 2],
    pub right_eigenvectors: Option<[Vector2; 2]>,
    pub left_eigenvectors: Option<[Vector2; 2]>,
    pub overlap: f64,
    pub at_exceptional_point: bool,
}

impl SpectralData {
    pub fn lambda_plus(&self) -> C64 {
        self.eigenvalues[0]
    }

    pub fn lambda_minus(&self) -> C64 {
        self.eigenvalues[1]
    }

    /// Biorthogonal expansion coefficients `(l₊·ψ, l₋·ψ)`.
    pub fn project(&self, psi: &Vector2) -> Result<[C64; 2]> {
        let left = self
            .left_eigenvectors
            .ok_or(Error::ExceptionalPoint { v: self.v, gamma: self.gamma })?;
        Ok([dot(&left[0], psi), dot(&left[1], psi)])
    }

    /// Normalised populations `|l_i·ψ|² / Σ_j |l_j·ψ|²` of a raw vector.
    pub fn populations_of(&self, psi: &Vector2) -> Result<(f64, f64)> {
        let [cp, cm] = self.project(psi)?;
        let (wp, wm) = (cp.norm_sqr(), cm.norm_sqr());
        let total = wp + wm;
        if total == 0.0 || !total.is_finite() {
            return Err(Error::ZeroState);
        }
        Ok((wp / total, wm / total))
    }
}

fn dot(a: &Vector2, b: &Vector2) -> C64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Eigenvalues `λ± = ±√(v² − γ²)` with `Re λ₊ ≥ 0` on the real branch and
/// `Im λ₊ > 0` on the imaginary branch.
pub fn spectrum(v: f64, gamma: f64, ep_tolerance: f64) -> Result<SpectralData> {
    spectrum_with_mode(v, gamma, ep_tolerance, CouplingMode::PtImaginary)
}

pub fn spectrum_with_mode(
    v: f64,
    gamma: f64,
    ep_tolerance: f64,
    mode: CouplingMode,
) -> Result<SpectralData> {
    require_finite("v", v)?;
    require_finite("gamma", gamma)?;
    require_positive("ep_tolerance", ep_tolerance)?;
    Ok(spectrum_unchecked(v, gamma, ep_tolerance, mode))
}

pub(crate) fn spectrum_unchecked(
    v: f64,
    gamma: f64,
    ep_tolerance: f64,
    mode: CouplingMode,
) -> SpectralData {
    let disc = mode.discriminant(v, gamma);
    if disc.abs() < ep_tolerance * ep_tolerance {
        return SpectralData {
            v,
            gamma,
            eigenvalues: [C64::new(0.0, 0.0); 2],
            right_eigenvectors: None,
            left_eigenvectors: None,
            overlap: 1.0,
            at_exceptional_point: true,
        };
    }
    let lambda_plus = if disc > 0.0 {
        C64::new(disc.sqrt(), 0.0)
    } else {
        C64::new(0.0, (-disc).sqrt())
    };
    let eigenvalues = [lambda_plus, -lambda_plus];

    let c = mode.coupling(gamma);
    let right = eigenvalues.map(|lambda| right_eigenvector(v, c, lambda));
    let left = right.map(|r| {
        let s = dot(&r, &r);
        [r[0] / s, r[1] / s]
    });
    let overlap = (right[0][0].conj() * right[1][0] + right[0][1].conj() * right[1][1])
        .norm()
        .min(1.0);

    SpectralData {
        v,
        gamma,
        eigenvalues,
        right_eigenvectors: Some(right),
        left_eigenvectors: Some(left),
        overlap,
        at_exceptional_point: false,
    }
}

fn right_eigenvector(v: f64, c: C64, lambda: C64) -> Vector2 {
    // Null vectors of the first and second rows of H − λ; keep the
    // better-conditioned one.
    let from_first = [c, lambda + v];
    let from_second = [lambda - v, c];
    let n1 = from_first[0].norm_sqr() + from_first[1].norm_sqr();
    let n2 = from_second[0].norm_sqr() + from_second[1].norm_sqr();
    let (r, n) = if n1 >= n2 { (from_first, n1) } else { (from_second, n2) };
    let n = n.sqrt();
    let lead = if r[0].norm() > 0.0 { r[0] } else { r[1] };
    let phase = lead.conj() / lead.norm();
    [r[0] * phase / n, r[1] * phase / n]
}

/// `(p₊, p₋)` obtained by projecting the state onto the left eigenvectors.
pub fn instantaneous_populations(state: &StateVector2, spectral: &SpectralData) -> Result<(f64, f64)> {
    if spectral.at_exceptional_point {
        return Err(Error::ExceptionalPoint { v: spectral.v, gamma: spectral.gamma });
    }
    if state.c1.norm_sqr() + state.c2.norm_sqr() == 0.0 {
        return Err(Error::ZeroState);
    }
    spectral.populations_of(&state.components())
}

/// Closed-form transmission through both exceptional points.
///
/// Asymptotic amplitudes are kept as natural logarithms because `e^{2πβ}`
/// overflows once `β = γ²/2α` exceeds about 113.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmissionResult {
    pub p_tr: f64,
    pub beta: f64,
    /// `ln(e^{2πβ} − 1)`
    pub log_mod_psi1_sq: f64,
    /// `ln(e^{2πβ}) = 2πβ`
    pub log_mod_psi2_sq: f64,
}

impl TransmissionResult {
    /// `e^{2πβ} − 1`; `+∞` when saturated.
    pub fn asymptotic_mod_psi1_sq(&self) -> f64 {
        self.log_mod_psi1_sq.exp()
    }

    /// `e^{2πβ}`; `+∞` when saturated.
    pub fn asymptotic_mod_psi2_sq(&self) -> f64 {
        self.log_mod_psi2_sq.exp()
    }

    /// Amplitudes are beyond the range of `f64` and only their logarithms
    /// are meaningful.
    pub fn saturated(&self) -> bool {
        self.log_mod_psi2_sq > f64::MAX.ln()
    }
}

/// `P_tr = (2 − e^{−πγ²/α})^{-1}` together with the asymptotic amplitudes
/// `|ψ₁|² = e^{2πβ} − 1` and `|ψ₂|² = e^{2πβ}`.
pub fn analytic_transmission(gamma: f64, alpha: f64) -> Result<TransmissionResult> {
    require_positive("gamma", gamma)?;
    require_positive("alpha", alpha)?;
    let beta = gamma * gamma / (2.0 * alpha);
    let x = 2.0 * PI * beta;
    let log_mod_psi2_sq = x;
    let log_mod_psi1_sq = x + (-(-x).exp_m1()).ln();
    // |ψ₂|²/(|ψ₁|² + |ψ₂|²) with the ratio formed in log space
    let p_tr = 1.0 / (1.0 + (log_mod_psi1_sq - log_mod_psi2_sq).exp());
    Ok(TransmissionResult { p_tr, beta, log_mod_psi1_sq, log_mod_psi2_sq })
}
