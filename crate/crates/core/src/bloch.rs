//! Quasimomentum picture of the gain/loss chain.
//!
//! With the two-site unit cell the Bloch Hamiltonian on the reduced zone
//! `[−π/2, π/2)` couples `ψ(k)` and `ψ(k + π)`:
//!
//! `h(k) = [[−2cos k, iΓ], [iΓ, 2cos k]]`,  `E± = ±√(4cos²k − Γ²)`,
//!
//! which is the two-level model at `v = 2cos k`. A force `F` drives
//! `k(t) = k₀ − F t`, so near a band exceptional point the sweep rate is
//! `|dv/dt| ≈ 2F sin k`, giving the effective sweep parameters of
//! [`effective_sweep`].

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;

use crate::error::{require_finite, require_positive, Error, Result};
use crate::lattice::{GaussianBeam, LatticeState};
use crate::two_level::{
    analytic_transmission, hamiltonian_with_mode, spectrum_unchecked, CouplingMode, Matrix2,
};

/// `|E|` below which a momentum counts as a band exceptional point.
pub const BAND_EP_TOLERANCE: f64 = 1e-10;

/// Uniform grid `k_m = −π + 2πm/n_k`, `m = 0..n_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MomentumGrid {
    n_k: usize,
}

impl MomentumGrid {
    pub fn new(n_k: usize) -> Result<Self> {
        if n_k == 0 || !n_k.is_multiple_of(2) {
            return Err(Error::OddGrid(n_k));
        }
        Ok(Self { n_k })
    }

    pub fn len(&self) -> usize {
        self.n_k
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn k(&self, m: usize) -> f64 {
        -PI + 2.0 * PI * m as f64 / self.n_k as f64
    }

    pub fn k_values(&self) -> Vec<f64> {
        (0..self.n_k).map(|m| self.k(m)).collect()
    }

    /// Indices of grid points in the reduced zone `[−π/2, π/2)`.
    pub fn reduced_indices(&self) -> std::ops::Range<usize> {
        let start = self.n_k.div_ceil(4);
        start..start + self.n_k / 2
    }

    /// Index of `k_m + π` (mod 2π).
    pub fn shifted_by_pi(&self, m: usize) -> usize {
        (m + self.n_k / 2) % self.n_k
    }
}

/// `ψ(k_m) = (2π)^{-1/2} Σ_j e^{−i k_m j} ψ(j)` on the full zone, with `j`
/// the absolute site index. Requires `n_k ≥` the number of sites so the
/// transform is invertible.
pub fn to_quasimomentum(state: &LatticeState, grid: &MomentumGrid) -> Result<Vec<C64>> {
    let n_sites = state.amplitudes.len();
    let n_k = grid.len();
    if n_k < n_sites {
        return Err(Error::GridTooCoarse { n_k, n_sites });
    }
    // e^{−i k_m j} with j = offset + l factorises into
    // e^{iπ offset} (−1)^l · e^{−2πi m offset/n_k} · e^{−2πi m l/n_k}.
    let mut buf = vec![C64::new(0.0, 0.0); n_k];
    for (l, (b, a)) in buf.iter_mut().zip(&state.amplitudes).enumerate() {
        *b = if l % 2 == 0 { *a } else { -*a };
    }
    FftPlanner::new().plan_fft_forward(n_k).process(&mut buf);

    let offset = state.site_offset;
    let sign = if offset.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let scale = sign / (2.0 * PI).sqrt();
    let off_mod = offset.rem_euclid(n_k as i64) as u128;
    for (m, b) in buf.iter_mut().enumerate() {
        let r = (m as u128 * off_mod % n_k as u128) as f64;
        *b *= C64::from_polar(scale, -2.0 * PI * r / n_k as f64);
    }
    Ok(buf)
}

/// `(Ψ₁(k), Ψ₂(k)) = (ψ(k), ψ(k + π))` on the reduced zone.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoComponentMomentumState {
    pub k_values: Vec<f64>,
    pub psi1: Vec<C64>,
    pub psi2: Vec<C64>,
}

pub fn split_two_component(full_zone: &[C64], grid: &MomentumGrid) -> Result<TwoComponentMomentumState> {
    if full_zone.len() != grid.len() {
        return Err(Error::invalid("full_zone", "length differs from the grid"));
    }
    let idx = grid.reduced_indices();
    Ok(TwoComponentMomentumState {
        k_values: idx.clone().map(|m| grid.k(m)).collect(),
        psi1: idx.clone().map(|m| full_zone[m]).collect(),
        psi2: idx.map(|m| full_zone[grid.shifted_by_pi(m)]).collect(),
    })
}

impl TwoComponentMomentumState {
    /// Inverse of [`split_two_component`].
    pub fn reassemble(&self, grid: &MomentumGrid) -> Result<Vec<C64>> {
        if self.psi1.len() != grid.len() / 2 || self.psi2.len() != self.psi1.len() {
            return Err(Error::invalid("state", "component lengths do not match the grid"));
        }
        let mut out = vec![C64::new(0.0, 0.0); grid.len()];
        for (i, m) in grid.reduced_indices().enumerate() {
            out[m] = self.psi1[i];
            out[grid.shifted_by_pi(m)] = self.psi2[i];
        }
        Ok(out)
    }

    /// `Σ (|Ψ₁|² + |Ψ₂|²) Δk` with `Δk = 2π/n_k`.
    pub fn norm_sqr(&self) -> f64 {
        let dk = PI / self.psi1.len() as f64;
        self.psi1.iter().chain(&self.psi2).map(|c| c.norm_sqr()).sum::<f64>() * dk
    }
}

pub fn momentum_state(state: &LatticeState, grid: &MomentumGrid) -> Result<TwoComponentMomentumState> {
    split_two_component(&to_quasimomentum(state, grid)?, grid)
}

pub fn bloch_hamiltonian(k: f64, gamma_lattice: f64) -> Matrix2 {
    hamiltonian_with_mode(2.0 * k.cos(), gamma_lattice, CouplingMode::PtImaginary)
}

/// `[E₊(k), E₋(k)]`, exactly zero within [`BAND_EP_TOLERANCE`] of a band
/// exceptional point.
pub fn dispersion(k: f64, gamma_lattice: f64) -> [C64; 2] {
    spectrum_unchecked(2.0 * k.cos(), gamma_lattice, BAND_EP_TOLERANCE, CouplingMode::PtImaginary).eigenvalues
}

/// `k = ±arccos(Γ/2)` in the reduced zone, or `None` for `Γ ≥ 2`.
pub fn band_exceptional_points(gamma_lattice: f64) -> Option<(f64, f64)> {
    (0.0..2.0).contains(&gamma_lattice).then(|| {
        let k = (gamma_lattice / 2.0).acos();
        (-k, k)
    })
}

/// A complex number `mantissa · e^{ln_scale}` kept apart so that very large
/// or very small magnitudes survive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogComplex {
    pub ln_scale: f64,
    pub mantissa: C64,
}

impl LogComplex {
    pub fn to_complex(self) -> C64 {
        self.mantissa * self.ln_scale.exp()
    }

    pub fn ln(self) -> C64 {
        self.mantissa.ln() + self.ln_scale
    }
}

/// Arguments for Jacobi theta functions with nome `q = e^{nome_log}`,
/// `nome_log < 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaArguments {
    pub z: C64,
    pub nome_log: f64,
}

/// `Σ_n exp(nome_log (n+s)² + 2i(n+s) z)` for `s ∈ {0, 1/2}`.
///
/// The term magnitudes are log-concave in `n`, so the sum starts at the
/// dominant term and walks outwards in both directions. Once the term ratio
/// `r` drops below one the remaining tail is bounded by `|t_n| / (1 − r)`,
/// and the walk stops when that bound is below `tolerance` relative to the
/// dominant term. This stays well defined when `Im z` is large enough that
/// the terms first grow.
fn theta_sum(args: &ThetaArguments, shift: f64, tolerance: f64) -> Result<LogComplex> {
    require_finite("nome_log", args.nome_log)?;
    require_positive("tolerance", tolerance)?;
    if args.nome_log.is_nan() || args.nome_log >= 0.0 {
        return Err(Error::invalid("nome_log", "must be negative"));
    }
    if !(args.z.re.is_finite() && args.z.im.is_finite()) {
        return Err(Error::invalid("z", "must be finite"));
    }
    let a = args.nome_log;
    let y = args.z.im;
    let log_mag = |n: i64| {
        let m = n as f64 + shift;
        a * m * m - 2.0 * m * y
    };
    // a m² − 2 m y peaks at m = y/a.
    let centre = (y / a - shift).round() as i64;
    let peak = log_mag(centre).max(log_mag(centre - 1)).max(log_mag(centre + 1));
    let term = |n: i64| {
        let m = n as f64 + shift;
        C64::from_polar((log_mag(n) - peak).exp(), 2.0 * m * args.z.re)
    };
    let mut mantissa = term(centre);
    for step in [-1i64, 1] {
        let mut n = centre + step;
        loop {
            let rel = log_mag(n) - peak;
            let log_ratio = log_mag(n + step) - log_mag(n);
            if log_ratio < 0.0 && rel - (-log_ratio.exp()).ln_1p() < tolerance.ln() {
                break;
            }
            mantissa += term(n);
            n += step;
        }
    }
    Ok(LogComplex { ln_scale: peak, mantissa })
}

/// `θ₃(z, q) = Σ_n q^{n²} e^{2inz}` in scaled form.
pub fn theta3_scaled(args: &ThetaArguments, tolerance: f64) -> Result<LogComplex> {
    theta_sum(args, 0.0, tolerance)
}

/// `θ₂(z, q) = Σ_n q^{(n+½)²} e^{i(2n+1)z}` in scaled form.
pub fn theta2_scaled(args: &ThetaArguments, tolerance: f64) -> Result<LogComplex> {
    theta_sum(args, 0.5, tolerance)
}

pub fn theta3(args: &ThetaArguments, tolerance: f64) -> Result<C64> {
    theta3_scaled(args, tolerance).map(LogComplex::to_complex)
}

pub fn theta2(args: &ThetaArguments, tolerance: f64) -> Result<C64> {
    theta2_scaled(args, tolerance).map(LogComplex::to_complex)
}

/// Relative truncation tolerance used for the analytic beam amplitudes.
pub const BEAM_THETA_TOLERANCE: f64 = 1e-18;

/// Closed-form two-component momentum amplitudes of a lattice-sampled
/// Gaussian beam, `(ψ(k), ψ(k + π))`, normalised like [`to_quasimomentum`]
/// applied to the unit-norm beam state.
///
/// Both components are theta functions with `q = e^{−2π²σ²}` and
/// `z = iπσ²(k − k₀) − πq₀`, multiplied by `e^{−σ²(k−k₀)²/2 − i q₀ k}` and
/// divided by `√θ₃(−πq₀, q^{1/2})` (principal root; the argument is real
/// and positive for real `q₀`). Everything is combined in log space since
/// the theta values and the Gaussian factor separately overflow for broad
/// beams.
pub fn gaussian_momentum_analytic(beam: &GaussianBeam, k: f64) -> Result<(C64, C64)> {
    require_finite("k", k)?;
    let s2 = beam.sigma_sq;
    let nome_log = -2.0 * PI * PI * s2;
    let dk = k - beam.k0;
    let args = ThetaArguments { z: C64::new(-PI * beam.q0, PI * s2 * dk), nome_log };
    let norm = theta3_scaled(
        &ThetaArguments { z: C64::new(-PI * beam.q0, 0.0), nome_log: nome_log / 2.0 },
        BEAM_THETA_TOLERANCE,
    )?;
    let ln_prefactor = C64::new(0.5 * s2.sqrt().ln() - 0.25 * PI.ln() - 0.5 * s2 * dk * dk, -beam.q0 * k)
        - 0.5 * norm.ln();
    let assemble = |t: LogComplex| (ln_prefactor + t.ln_scale).exp() * t.mantissa;
    Ok((
        assemble(theta3_scaled(&args, BEAM_THETA_TOLERANCE)?),
        assemble(theta2_scaled(&args, BEAM_THETA_TOLERANCE)?),
    ))
}

/// Mean quasimomentum of one snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KExpectation {
    pub time: f64,
    /// Unwrapped modulo π so the series is continuous in time.
    pub k_mean: f64,
    pub k_spread: f64,
    /// Set when the full width `2·k_spread` exceeds half the reduced zone,
    /// where the unwrap reference is no longer reliable.
    pub ambiguous: bool,
}

/// `⟨k⟩_t = ∫ k Ψ†Ψ dk / ∫ Ψ†Ψ dk` over the reduced zone.
///
/// `k` is periodic with period π there. The first sample uses the circular
/// mean; each later one averages over the π-window centred on the previous
/// mean, which keeps the series continuous as `k` crosses the zone edge.
pub fn k_expectation_series(samples: &[LatticeState], grid: &MomentumGrid) -> Result<Vec<KExpectation>> {
    if samples.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let mut out = Vec::with_capacity(samples.len());
    let mut previous: Option<f64> = None;
    for s in samples {
        let two = momentum_state(s, grid)?;
        let w: Vec<f64> = two.psi1.iter().zip(&two.psi2).map(|(a, b)| a.norm_sqr() + b.norm_sqr()).collect();
        let total: f64 = w.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::ZeroState);
        }
        let ks = &two.k_values;
        let centre = previous.unwrap_or_else(|| {
            let (sn, cs) = ks
                .iter()
                .zip(&w)
                .fold((0.0, 0.0), |(sn, cs), (k, wi)| (sn + wi * (2.0 * k).sin(), cs + wi * (2.0 * k).cos()));
            0.5 * sn.atan2(cs)
        });
        let unwrap = |k: f64| centre + (k - centre + PI / 2.0).rem_euclid(PI) - PI / 2.0;
        let mean = ks.iter().zip(&w).map(|(k, wi)| wi * unwrap(*k)).sum::<f64>() / total;
        let var = ks.iter().zip(&w).map(|(k, wi)| wi * (unwrap(*k) - mean).powi(2)).sum::<f64>() / total;
        let spread = var.sqrt();
        out.push(KExpectation { time: s.time, k_mean: mean, k_spread: spread, ambiguous: 2.0 * spread > PI / 2.0 });
        previous = Some(mean);
    }
    Ok(out)
}

/// Two-level sweep equivalent to one passage of a band exceptional-point
/// pair, with its transmission `(2 − e^{−πΓ²/2F})⁻¹`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveSweep {
    /// `Γ/F`
    pub gamma: f64,
    /// `2/F`
    pub alpha: f64,
    pub p_tr: f64,
}

pub fn effective_lz_params(gamma_lattice: f64, force: f64) -> Result<EffectiveSweep> {
    require_finite("gamma_lattice", gamma_lattice)?;
    require_finite("force", force)?;
    if gamma_lattice < 0.0 {
        return Err(Error::invalid("gamma_lattice", "must be non-negative"));
    }
    if force == 0.0 {
        return Err(Error::ZeroForce);
    }
    if force < 0.0 {
        return Err(Error::invalid("force", "must be positive"));
    }
    let (gamma, alpha) = (gamma_lattice / force, 2.0 / force);
    // without gain and loss the bands never meet and everything is transmitted
    let p_tr = if gamma == 0.0 { 1.0 } else { analytic_transmission(gamma, alpha)?.p_tr };
    Ok(EffectiveSweep { gamma, alpha, p_tr })
}
