//! Time integration of the driven two-level system with `v = αt`.

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{require_finite, Error, Result};
use crate::ode::{integrate_linear, EventKind, IntegratorConfig};
use crate::two_level::{
    analytic_transmission, spectrum_unchecked, CouplingMode, SpectralData, TwoLevelParams,
    Vector2, DEFAULT_EP_TOLERANCE,
};

/// Two-component amplitude kept at unit norm; the physical amplitudes are
/// `(c1, c2) · e^{log_norm}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVector2 {
    pub c1: C64,
    pub c2: C64,
    pub log_norm: f64,
}

/// Which instantaneous eigenstate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    fn index(self) -> usize {
        match self {
            Branch::Plus => 0,
            Branch::Minus => 1,
        }
    }
}

impl StateVector2 {
    /// Normalises `(c1, c2)` and stores the removed scale in `log_norm`.
    pub fn from_components(c1: C64, c2: C64) -> Result<Self> {
        let n2 = c1.norm_sqr() + c2.norm_sqr();
        if !n2.is_finite() {
            return Err(Error::invalid("state", "components must be finite"));
        }
        if n2 == 0.0 {
            return Err(Error::ZeroState);
        }
        let n = n2.sqrt();
        Ok(Self { c1: c1 / n, c2: c2 / n, log_norm: n.ln() })
    }

    pub fn diabatic_1() -> Self {
        Self { c1: C64::new(1.0, 0.0), c2: C64::new(0.0, 0.0), log_norm: 0.0 }
    }

    pub fn diabatic_2() -> Self {
        Self { c1: C64::new(0.0, 0.0), c2: C64::new(1.0, 0.0), log_norm: 0.0 }
    }

    /// Unit state whose four real coordinates are independent standard
    /// normals drawn from a ChaCha8 stream seeded with `seed`.
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
        let c1 = C64::new(draw(), draw());
        let c2 = C64::new(draw(), draw());
        // four independent normals are almost surely not all zero
        Self::from_components(c1, c2).expect("nonzero gaussian draw")
    }

    /// Right eigenvector of the Hamiltonian at detuning `v`.
    pub fn eigenstate(v: f64, gamma: f64, branch: Branch, mode: CouplingMode) -> Result<Self> {
        require_finite("v", v)?;
        require_finite("gamma", gamma)?;
        let spectral = spectrum_unchecked(v, gamma, DEFAULT_EP_TOLERANCE, mode);
        let right = spectral
            .right_eigenvectors
            .ok_or(Error::ExceptionalPoint { v, gamma })?;
        let r = right[branch.index()];
        Self::from_components(r[0], r[1])
    }

    pub fn components(&self) -> Vector2 {
        [self.c1, self.c2]
    }

    /// `(ln|ψ₁|², ln|ψ₂|²)` of the physical amplitudes.
    pub fn log_mod_sq(&self) -> [f64; 2] {
        [
            self.c1.norm_sqr().ln() + 2.0 * self.log_norm,
            self.c2.norm_sqr().ln() + 2.0 * self.log_norm,
        ]
    }
}

/// Instantaneous eigenstate at `v_initial` that turns into the diabatic
/// state `(0, 1)` as `v → −∞`.
///
/// At any finite `v_initial` the eigenstate differs from `(0, 1)` by an
/// admixture of order `γ/2|v|`; starting from it removes that truncation
/// error from transmission runs.
pub fn transmission_initial_state(params: &TwoLevelParams, mode: CouplingMode) -> Result<StateVector2> {
    StateVector2::eigenstate(params.v_initial, params.gamma, Branch::Minus, mode)
}

/// Record of one sweep. All sequences have one entry per accepted step,
/// including the initial point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTrace {
    pub params: TwoLevelParams,
    pub mode: CouplingMode,
    pub times: Vec<f64>,
    pub v_values: Vec<f64>,
    /// `(p₊, p₋)`; `None` within the exceptional-point tolerance.
    pub populations: Vec<Option<(f64, f64)>>,
    pub log_norm: Vec<f64>,
    /// `(ln|ψ₁|², ln|ψ₂|²)` in physical scale.
    pub diabatic_log_mod_sq: Vec<[f64; 2]>,
    pub final_state: StateVector2,
}

impl SweepTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn final_spectral(&self) -> Result<SpectralData> {
        let v = *self.v_values.last().ok_or(Error::EmptyTrace)?;
        let s = spectrum_unchecked(v, self.params.gamma, DEFAULT_EP_TOLERANCE, self.mode);
        if s.at_exceptional_point {
            return Err(Error::ExceptionalPoint { v, gamma: self.params.gamma });
        }
        Ok(s)
    }
}

fn sweep_rhs(alpha: f64, coupling: C64) -> impl FnMut(f64, &[C64], &mut [C64]) {
    let minus_i = C64::new(0.0, -1.0);
    move |t, y, dy| {
        let v = alpha * t;
        // ψ̇ = −i H ψ with H = [[−v, c], [c, v]]
        dy[0] = minus_i * (y[0] * (-v) + coupling * y[1]);
        dy[1] = minus_i * (coupling * y[0] + y[1] * v);
    }
}

/// Integrates `i ψ̇₁ = −αt ψ₁ + c ψ₂`, `i ψ̇₂ = c ψ₁ + αt ψ₂` from
/// `v_initial/α` to `v_final/α`, where `c = iγ` (PT) or `c = γ` (Hermitian).
pub fn propagate_sweep(
    params: &TwoLevelParams,
    initial: &StateVector2,
    config: &IntegratorConfig,
    mode: CouplingMode,
) -> Result<SweepTrace> {
    let TwoLevelParams { gamma, alpha, .. } = *params;
    let mut trace = SweepTrace {
        params: *params,
        mode,
        times: Vec::new(),
        v_values: Vec::new(),
        populations: Vec::new(),
        log_norm: Vec::new(),
        diabatic_log_mod_sq: Vec::new(),
        final_state: *initial,
    };

    let solution = integrate_linear(
        sweep_rhs(alpha, mode.coupling(gamma)),
        params.t_initial(),
        params.t_final(),
        vec![initial.c1, initial.c2],
        initial.log_norm,
        config,
        &[],
        |ev| {
            let v = alpha * ev.time;
            let psi = [ev.state[0], ev.state[1]];
            let spectral = spectrum_unchecked(v, gamma, DEFAULT_EP_TOLERANCE, mode);
            let pops = if spectral.at_exceptional_point {
                None
            } else {
                spectral.populations_of(&psi).ok()
            };
            trace.times.push(ev.time);
            trace.v_values.push(v);
            trace.populations.push(pops);
            trace.log_norm.push(ev.log_norm);
            trace.diabatic_log_mod_sq.push([
                psi[0].norm_sqr().ln() + 2.0 * ev.log_norm,
                psi[1].norm_sqr().ln() + 2.0 * ev.log_norm,
            ]);
            debug_assert!(matches!(ev.kind, EventKind::Start | EventKind::Step));
            Ok(())
        },
    )?;

    trace.final_state = StateVector2 {
        c1: solution.state[0],
        c2: solution.state[1],
        log_norm: solution.log_norm,
    };
    Ok(trace)
}

/// Estimates `(ln|ψ₁(+∞)|², ln|ψ₂(+∞)|²)` from the final state.
///
/// Far from the exceptional points the instantaneous eigenstates coincide
/// with the diabatic basis (`R₋ → (1, 0)`, `R₊ → (0, 1)` for `v → +∞`), so
/// the biorthogonal coefficients at `v_final` are the asymptotic diabatic
/// amplitudes without the `O(γ/v)` mixing that the raw components carry.
pub fn asymptotic_log_mod_sq(trace: &SweepTrace) -> Result<[f64; 2]> {
    let spectral = trace.final_spectral()?;
    let psi = trace.final_state.components();
    let [c_plus, c_minus] = spectral.project(&psi)?;
    let ln = 2.0 * trace.final_state.log_norm;
    Ok([c_minus.norm_sqr().ln() + ln, c_plus.norm_sqr().ln() + ln])
}

/// Relative asymptotic populations `(|ψ₁|², |ψ₂|²) / Σ` at `t → +∞`.
pub fn asymptotic_populations(trace: &SweepTrace) -> Result<(f64, f64)> {
    let [l1, l2] = asymptotic_log_mod_sq(trace)?;
    let p2 = 1.0 / (1.0 + (l1 - l2).exp());
    let p1 = 1.0 / (1.0 + (l2 - l1).exp());
    Ok((p1, p2))
}

/// `|ψ₂(+∞)|² / (|ψ₁(+∞)|² + |ψ₂(+∞)|²)` for a PT sweep.
pub fn numerical_transmission(trace: &SweepTrace) -> Result<f64> {
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    if trace.mode != CouplingMode::PtImaginary {
        return Err(Error::invalid("trace", "transmission is defined for PT sweeps only"));
    }
    asymptotic_populations(trace).map(|(_, p2)| p2)
}

/// `|ψ₂|² / (|ψ₁|² + |ψ₂|²)` from the raw components at the last sample,
/// which still contains the finite-range mixing of order `γ/v_final`.
pub fn diabatic_transmission(trace: &SweepTrace) -> Result<f64> {
    let [l1, l2] = *trace.diabatic_log_mod_sq.last().ok_or(Error::EmptyTrace)?;
    Ok(1.0 / (1.0 + (l1 - l2).exp()))
}

/// Final instantaneous populations `(p₊, p₋)` after a PT sweep.
///
/// Redistribution to `(½, ½)` is expected once `πγ²/α` is large (≳ 5); the
/// function does not enforce this so that the fast-driving limit can be
/// inspected with the same call.
pub fn adiabatic_redistribution_check(
    params: &TwoLevelParams,
    initial: &StateVector2,
    config: &IntegratorConfig,
) -> Result<(f64, f64)> {
    let trace = propagate_sweep(params, initial, config, CouplingMode::PtImaginary)?;
    let spectral = trace.final_spectral()?;
    spectral.populations_of(&trace.final_state.components())
}

/// Result of [`converged_transmission`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergedTransmission {
    pub p_tr: f64,
    /// Half-width of the final sweep range in units of γ.
    pub range_in_gamma: f64,
    pub last_change: f64,
    pub converged: bool,
}

/// Runs PT transmission sweeps over `[−Rγ, Rγ]` with `R = 20, 40, 80, …`
/// until successive results differ by less than `tolerance` or
/// `max_doublings` is exhausted.
pub fn converged_transmission(
    gamma: f64,
    alpha: f64,
    config: &IntegratorConfig,
    tolerance: f64,
    max_doublings: usize,
) -> Result<ConvergedTransmission> {
    let run = |range: f64| -> Result<f64> {
        let params = TwoLevelParams::new(gamma, alpha, -range * gamma, range * gamma)?;
        let initial = transmission_initial_state(&params, CouplingMode::PtImaginary)?;
        let trace = propagate_sweep(&params, &initial, config, CouplingMode::PtImaginary)?;
        numerical_transmission(&trace)
    };
    let mut range = 20.0;
    let mut previous = run(range)?;
    let mut last_change = f64::INFINITY;
    for _ in 0..max_doublings {
        range *= 2.0;
        let current = run(range)?;
        last_change = (current - previous).abs();
        previous = current;
        if last_change < tolerance {
            return Ok(ConvergedTransmission { p_tr: current, range_in_gamma: range, last_change, converged: true });
        }
    }
    Ok(ConvergedTransmission { p_tr: previous, range_in_gamma: range, last_change, converged: false })
}

/// Convenience: numerical minus closed-form transmission at the default range.
pub fn transmission_error(gamma: f64, alpha: f64, config: &IntegratorConfig) -> Result<(f64, f64)> {
    let params = TwoLevelParams::with_default_range(gamma, alpha)?;
    let initial = transmission_initial_state(&params, CouplingMode::PtImaginary)?;
    let trace = propagate_sweep(&params, &initial, config, CouplingMode::PtImaginary)?;
    let numeric = numerical_transmission(&trace)?;
    let analytic = analytic_transmission(gamma, alpha)?.p_tr;
    Ok((numeric, analytic))
}
