//! Explicit Runge–Kutta integration of linear complex systems `ẏ = A(t) y`
//! with the state renormalised to unit norm after every accepted step.
//!
//! The discarded scale is accumulated in `log_norm`, so the physical state is
//! `y · e^{log_norm}`. This is exact only because the right-hand side is
//! linear in `y`.

use num_complex::Complex64 as C64;

use crate::error::{require_positive, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    /// Dormand–Prince 5(4) with local error control.
    #[default]
    AdaptiveEmbeddedRk45,
    /// Classic RK4 with constant step `initial_step`.
    FixedRk4,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub rel_tolerance: f64,
    pub abs_tolerance: f64,
    pub max_step: f64,
    pub initial_step: f64,
    pub method: Method,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tolerance: 1e-9,
            abs_tolerance: 1e-12,
            max_step: 1.0,
            initial_step: 1e-3,
            method: Method::AdaptiveEmbeddedRk45,
        }
    }
}

impl IntegratorConfig {
    pub fn fixed_rk4(step: f64) -> Self {
        Self { initial_step: step, max_step: step, method: Method::FixedRk4, ..Self::default() }
    }

    pub fn with_tolerances(rel_tolerance: f64, abs_tolerance: f64) -> Self {
        Self { rel_tolerance, abs_tolerance, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("rel_tolerance", self.rel_tolerance)?;
        require_positive("abs_tolerance", self.abs_tolerance)?;
        require_positive("max_step", self.max_step)?;
        require_positive("initial_step", self.initial_step)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Start,
    Step,
    /// The step landed on `stops[i]`.
    Stop(usize),
}

#[derive(Debug)]
pub struct StepEvent<'a> {
    pub time: f64,
    pub state: &'a [C64],
    pub log_norm: f64,
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub state: Vec<C64>,
    pub log_norm: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b − b̂ (fifth minus fourth order weights)
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

struct Workspace {
    k: [Vec<C64>; 7],
    tmp: Vec<C64>,
    next: Vec<C64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        let z = vec![C64::new(0.0, 0.0); n];
        Self {
            k: [z.clone(), z.clone(), z.clone(), z.clone(), z.clone(), z.clone(), z.clone()],
            tmp: z.clone(),
            next: z,
        }
    }
}

fn combine(out: &mut [C64], y: &[C64], h: f64, terms: &[(f64, &[C64])]) {
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = C64::new(0.0, 0.0);
        for (coef, k) in terms {
            acc += k[i] * *coef;
        }
        *o = y[i] + acc * h;
    }
}

/// Rescales `y` to unit Euclidean norm and returns `ln` of the old norm.
fn renormalize(y: &mut [C64], t: f64) -> Result<f64> {
    let norm = y.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if !norm.is_finite() || norm == 0.0 {
        return Err(Error::NonFinite { t });
    }
    let inv = 1.0 / norm;
    y.iter_mut().for_each(|c| *c *= inv);
    Ok(norm.ln())
}

/// Integrates `ẏ = rhs(t, y)` from `t_start` to `t_end` (forward in time).
///
/// `stops` are intermediate times (sorted, inside `(t_start, t_end]`) that
/// the step sequence hits exactly. `observer` sees the initial state, every
/// accepted step, and each stop; an error from it aborts the integration.
#[allow(clippy::too_many_arguments)]
pub fn integrate_linear<R, O>(
    mut rhs: R,
    t_start: f64,
    t_end: f64,
    initial: Vec<C64>,
    log_norm: f64,
    config: &IntegratorConfig,
    stops: &[f64],
    mut observer: O,
) -> Result<Solution>
where
    R: FnMut(f64, &[C64], &mut [C64]),
    O: FnMut(StepEvent<'_>) -> Result<()>,
{
    config.validate()?;
    if !(t_start.is_finite() && t_end.is_finite() && t_end > t_start) {
        return Err(Error::invalid(
            "t_end",
            format!("integration interval [{t_start}, {t_end}] must be finite and forward"),
        ));
    }
    if stops.windows(2).any(|w| w[1] < w[0]) || stops.iter().any(|&s| s <= t_start || s > t_end) {
        return Err(Error::invalid("stops", "must be sorted and inside (t_start, t_end]"));
    }

    let mut y = initial;
    let mut log_norm = log_norm + renormalize(&mut y, t_start)?;
    observer(StepEvent { time: t_start, state: &y, log_norm, kind: EventKind::Start })?;

    let mut targets: Vec<f64> = stops.to_vec();
    if targets.last() != Some(&t_end) {
        targets.push(t_end);
    }
    let n_stops = stops.len();

    match config.method {
        Method::AdaptiveEmbeddedRk45 => {
            dopri(&mut rhs, t_start, y, log_norm, config, &targets, n_stops, &mut observer)
        }
        Method::FixedRk4 => {
            let mut ws = Workspace::new(y.len());
            let mut t = t_start;
            let mut accepted = 0;
            for (idx, &target) in targets.iter().enumerate() {
                let n = ((target - t) / config.initial_step).ceil().max(1.0) as usize;
                let t0 = t;
                let h = (target - t0) / n as f64;
                for s in 0..n {
                    rk4_step(&mut rhs, t, h, &y, &mut ws);
                    std::mem::swap(&mut y, &mut ws.next);
                    t = if s + 1 == n { target } else { t0 + (s + 1) as f64 * h };
                    log_norm += renormalize(&mut y, t)?;
                    accepted += 1;
                    let kind = if s + 1 == n && idx < n_stops { EventKind::Stop(idx) } else { EventKind::Step };
                    observer(StepEvent { time: t, state: &y, log_norm, kind })?;
                }
            }
            Ok(Solution { state: y, log_norm, accepted_steps: accepted, rejected_steps: 0 })
        }
    }
}

fn rk4_step<R>(rhs: &mut R, t: f64, h: f64, y: &[C64], ws: &mut Workspace)
where
    R: FnMut(f64, &[C64], &mut [C64]),
{
    let [k1, k2, k3, k4, ..] = &mut ws.k;
    rhs(t, y, k1);
    combine(&mut ws.tmp, y, h, &[(0.5, k1)]);
    rhs(t + 0.5 * h, &ws.tmp, k2);
    combine(&mut ws.tmp, y, h, &[(0.5, k2)]);
    rhs(t + 0.5 * h, &ws.tmp, k3);
    combine(&mut ws.tmp, y, h, &[(1.0, k3)]);
    rhs(t + h, &ws.tmp, k4);
    combine(&mut ws.next, y, h, &[(1.0 / 6.0, k1), (1.0 / 3.0, k2), (1.0 / 3.0, k3), (1.0 / 6.0, k4)]);
}

#[allow(clippy::too_many_arguments)]
fn dopri<R, O>(
    rhs: &mut R,
    t_start: f64,
    mut y: Vec<C64>,
    mut log_norm: f64,
    config: &IntegratorConfig,
    targets: &[f64],
    n_stops: usize,
    observer: &mut O,
) -> Result<Solution>
where
    R: FnMut(f64, &[C64], &mut [C64]),
    O: FnMut(StepEvent<'_>) -> Result<()>,
{
    let n = y.len();
    let mut ws = Workspace::new(n);
    let mut t = t_start;
    let mut h = config.initial_step.min(config.max_step);
    let mut accepted = 0;
    let mut rejected = 0;

    rhs(t, &y, &mut ws.k[0]);
    let mut target_idx = 0;

    while target_idx < targets.len() {
        let target = targets[target_idx];
        let remaining = target - t;
        let hits_target = h >= remaining * (1.0 - 1e-12);
        let step = if hits_target { remaining } else { h };

        if step <= 4.0 * f64::EPSILON * t.abs().max(1.0) {
            return Err(Error::StepSizeUnderflow { t, h: step });
        }

        {
            let [k1, k2, k3, k4, k5, k6, k7] = &mut ws.k;
            combine(&mut ws.tmp, &y, step, &[(A21, k1)]);
            rhs(t + C2 * step, &ws.tmp, k2);
            combine(&mut ws.tmp, &y, step, &[(A31, k1), (A32, k2)]);
            rhs(t + C3 * step, &ws.tmp, k3);
            combine(&mut ws.tmp, &y, step, &[(A41, k1), (A42, k2), (A43, k3)]);
            rhs(t + C4 * step, &ws.tmp, k4);
            combine(&mut ws.tmp, &y, step, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]);
            rhs(t + C5 * step, &ws.tmp, k5);
            combine(&mut ws.tmp, &y, step, &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)]);
            rhs(t + step, &ws.tmp, k6);
            combine(&mut ws.next, &y, step, &[(B1, k1), (B3, k3), (B4, k4), (B5, k5), (B6, k6)]);
            rhs(t + step, &ws.next, k7);

            let mut err_sq = 0.0;
            for i in 0..n {
                let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7)
                    * step;
                let scale = config.abs_tolerance
                    + config.rel_tolerance * y[i].norm().max(ws.next[i].norm());
                err_sq += (e.norm() / scale).powi(2);
            }
            let err = (err_sq / n as f64).sqrt();
            if !err.is_finite() {
                return Err(Error::NonFinite { t });
            }

            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err > 1.0 {
                rejected += 1;
                h = step * factor.min(1.0);
                continue;
            }

            t = if hits_target { target } else { t + step };
            std::mem::swap(&mut y, &mut ws.next);
            let ln_scale = renormalize(&mut y, t)?;
            log_norm += ln_scale;
            // first-same-as-last: k7 = f(t, y) before rescaling
            let inv = (-ln_scale).exp();
            for (k1i, k7i) in k1.iter_mut().zip(k7.iter()) {
                *k1i = *k7i * inv;
            }
            accepted += 1;
            if !hits_target {
                h = (step * factor).min(config.max_step);
            } else {
                // keep the step the controller wanted before clamping
                h = h.max(step * factor).min(config.max_step);
            }
        }

        let kind = if hits_target {
            let idx = target_idx;
            target_idx += 1;
            if idx < n_stops { EventKind::Stop(idx) } else { EventKind::Step }
        } else {
            EventKind::Step
        };
        observer(StepEvent { time: t, state: &y, log_norm, kind })?;
    }

    Ok(Solution { state: y, log_norm, accepted_steps: accepted, rejected_steps: rejected })
}
