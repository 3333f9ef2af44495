//! Tight-binding chain with alternating gain and loss and a static force:
//!
//! `(Hψ)_j = −ψ_{j+1} − ψ_{j−1} + (iΓ(−1)^j + F j) ψ_j`
//!
//! with open boundaries. Site `j` is the absolute integer index, so even
//! sites carry gain `+iΓ` and odd sites loss `−iΓ`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::error::{require_finite, require_positive, Error, Result};
use crate::ode::{integrate_linear, EventKind, IntegratorConfig};

/// Sites within this distance of either end are watched by the edge guard.
pub const EDGE_GUARD_SITES: usize = 5;
/// Largest renormalised density tolerated inside the edge zone.
pub const EDGE_GUARD_DENSITY: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeParams {
    pub gamma_lattice: f64,
    pub force: f64,
    pub n_sites: usize,
    /// Absolute index of the first site; the chain is
    /// `site_offset .. site_offset + n_sites`.
    pub site_offset: i64,
}

impl LatticeParams {
    pub fn new(gamma_lattice: f64, force: f64, n_sites: usize, site_offset: i64) -> Result<Self> {
        require_finite("gamma_lattice", gamma_lattice)?;
        require_finite("force", force)?;
        if gamma_lattice < 0.0 {
            return Err(Error::invalid("gamma_lattice", "must be non-negative"));
        }
        if force < 0.0 {
            return Err(Error::invalid("force", "must be non-negative"));
        }
        if n_sites == 0 || !n_sites.is_multiple_of(2) {
            return Err(Error::invalid("n_sites", format!("must be even and positive, got {n_sites}")));
        }
        Ok(Self { gamma_lattice, force, n_sites, site_offset })
    }

    /// Smallest chain that holds the beam's `±6σ` support plus the ballistic
    /// light cone `2 t_final` (hopping speed is at most 2), plus the
    /// edge-guard zone. The first site is even so unit cells are `(2m, 2m+1)`.
    pub fn for_beam(gamma_lattice: f64, force: f64, beam: &GaussianBeam, t_final: f64) -> Result<Self> {
        require_finite("t_final", t_final)?;
        let reach = 6.0 * beam.sigma() + 2.0 * t_final.max(0.0) + (EDGE_GUARD_SITES + 1) as f64;
        let low = ((beam.q0 - reach) / 2.0).floor() as i64 * 2;
        let high = (beam.q0 + reach).ceil() as i64;
        let mut n = (high - low + 1) as usize;
        n += n % 2;
        Self::new(gamma_lattice, force, n, low)
    }

    pub fn first_site(&self) -> i64 {
        self.site_offset
    }

    pub fn last_site(&self) -> i64 {
        self.site_offset + self.n_sites as i64 - 1
    }

    pub fn sites(&self) -> impl Iterator<Item = i64> {
        self.site_offset..self.site_offset + self.n_sites as i64
    }

    /// With `Γ ≥ 2` the bands are purely imaginary and there are no band
    /// exceptional points to sweep through.
    pub fn beyond_band_exceptional_points(&self) -> bool {
        self.gamma_lattice >= 2.0
    }
}

/// On-site term `iΓ(−1)^j + F j`.
pub fn onsite(gamma_lattice: f64, force: f64, site: i64) -> C64 {
    let parity = if site.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    C64::new(force * site as f64, gamma_lattice * parity)
}

/// Matrix-free application of the chain Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianAction {
    params: LatticeParams,
    diagonal: Vec<C64>,
}

pub fn build_hamiltonian_action(params: &LatticeParams) -> HamiltonianAction {
    let diagonal = params
        .sites()
        .map(|j| onsite(params.gamma_lattice, params.force, j))
        .collect();
    HamiltonianAction { params: *params, diagonal }
}

impl HamiltonianAction {
    pub fn params(&self) -> &LatticeParams {
        &self.params
    }

    pub fn diagonal(&self) -> &[C64] {
        &self.diagonal
    }

    pub fn apply(&self, psi: &[C64], out: &mut [C64]) {
        let n = self.diagonal.len();
        assert_eq!(psi.len(), n);
        assert_eq!(out.len(), n);
        for i in 0..n {
            let mut acc = self.diagonal[i] * psi[i];
            if i > 0 {
                acc -= psi[i - 1];
            }
            if i + 1 < n {
                acc -= psi[i + 1];
            }
            out[i] = acc;
        }
    }

    /// Dense `n × n` matrix, row-major. Meant for small chains in checks.
    pub fn dense_matrix(&self) -> Vec<Vec<C64>> {
        let n = self.diagonal.len();
        let mut m = vec![vec![C64::new(0.0, 0.0); n]; n];
        for i in 0..n {
            m[i][i] = self.diagonal[i];
            if i + 1 < n {
                m[i][i + 1] = C64::new(-1.0, 0.0);
                m[i + 1][i] = C64::new(-1.0, 0.0);
            }
        }
        m
    }
}

/// `ψ(j) ∝ exp(−(j − q₀)²/2σ² + i k₀ (j − q₀))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianBeam {
    pub q0: f64,
    pub k0: f64,
    pub sigma_sq: f64,
}

impl GaussianBeam {
    pub fn new(q0: f64, k0: f64, sigma_sq: f64) -> Result<Self> {
        require_finite("q0", q0)?;
        require_finite("k0", k0)?;
        require_positive("sigma_sq", sigma_sq)?;
        if k0.abs() > PI {
            return Err(Error::invalid("k0", format!("must lie in [-pi, pi], got {k0}")));
        }
        Ok(Self { q0, k0, sigma_sq })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma_sq.sqrt()
    }

    /// `(q₀ − 6σ, q₀ + 6σ)`
    pub fn support(&self) -> (f64, f64) {
        let w = 6.0 * self.sigma();
        (self.q0 - w, self.q0 + w)
    }
}

/// Unit-norm amplitudes on the chain, with the physical scale in `log_norm`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeState {
    pub amplitudes: Vec<C64>,
    pub log_norm: f64,
    pub time: f64,
    pub site_offset: i64,
}

impl LatticeState {
    /// `|ψ_j|² / Σ|ψ|²`
    pub fn density(&self) -> Vec<f64> {
        let d: Vec<f64> = self.amplitudes.iter().map(|c| c.norm_sqr()).collect();
        let total: f64 = d.iter().sum();
        d.into_iter().map(|x| x / total).collect()
    }

    pub fn sites(&self) -> impl Iterator<Item = i64> {
        self.site_offset..self.site_offset + self.amplitudes.len() as i64
    }

    /// Largest renormalised density within `EDGE_GUARD_SITES` of either end.
    pub fn edge_density(&self) -> f64 {
        edge_density(&self.amplitudes)
    }
}

fn edge_density(amplitudes: &[C64]) -> f64 {
    let n = amplitudes.len();
    let total: f64 = amplitudes.iter().map(|c| c.norm_sqr()).sum();
    let k = EDGE_GUARD_SITES.min(n);
    amplitudes[..k]
        .iter()
        .chain(&amplitudes[n - k..])
        .map(|c| c.norm_sqr() / total)
        .fold(0.0, f64::max)
}

pub fn gaussian_beam_state(beam: &GaussianBeam, params: &LatticeParams) -> Result<LatticeState> {
    let (low, high) = beam.support();
    if low < params.first_site() as f64 || high > params.last_site() as f64 {
        return Err(Error::BeamOutsideChain {
            low,
            high,
            first: params.first_site(),
            last: params.last_site(),
        });
    }
    let amplitudes: Vec<C64> = params
        .sites()
        .map(|j| {
            let x = j as f64 - beam.q0;
            C64::from_polar((-x * x / (2.0 * beam.sigma_sq)).exp(), beam.k0 * x)
        })
        .collect();
    let norm = amplitudes.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    Ok(LatticeState {
        amplitudes: amplitudes.into_iter().map(|c| c / norm).collect(),
        log_norm: 0.0,
        time: 0.0,
        site_offset: params.site_offset,
    })
}

/// Integrates `i ψ̇ = Hψ` from `state.time` to `t_final`, returning the
/// initial state and snapshots every `sample_every` (the last one exactly at
/// `t_final`).
///
/// Fails with [`Error::EdgeDensity`] as soon as an accepted step puts more
/// than `EDGE_GUARD_DENSITY` on any of the outermost `EDGE_GUARD_SITES` sites.
pub fn evolve(
    state: &LatticeState,
    params: &LatticeParams,
    t_final: f64,
    config: &IntegratorConfig,
    sample_every: f64,
) -> Result<Vec<LatticeState>> {
    require_finite("t_final", t_final)?;
    require_positive("sample_every", sample_every)?;
    if state.amplitudes.len() != params.n_sites || state.site_offset != params.site_offset {
        return Err(Error::invalid("state", "does not match the chain geometry"));
    }
    let t0 = state.time;
    if t_final <= t0 {
        return Err(Error::invalid("t_final", format!("must exceed the start time {t0}")));
    }
    let start_edge = state.edge_density();
    if start_edge >= EDGE_GUARD_DENSITY {
        return Err(Error::EdgeDensity { time: t0, density: start_edge });
    }

    let mut stops = Vec::new();
    let mut m = 1;
    loop {
        let t = t0 + m as f64 * sample_every;
        if t >= t_final * (1.0 - 1e-12) {
            break;
        }
        stops.push(t);
        m += 1;
    }
    stops.push(t_final);

    let action = build_hamiltonian_action(params);
    let minus_i = C64::new(0.0, -1.0);
    let rhs = |_t: f64, y: &[C64], dy: &mut [C64]| {
        action.apply(y, dy);
        dy.iter_mut().for_each(|d| *d *= minus_i);
    };

    let mut samples = Vec::with_capacity(stops.len() + 1);
    integrate_linear(
        rhs,
        t0,
        t_final,
        state.amplitudes.clone(),
        state.log_norm,
        config,
        &stops,
        |ev| {
            let edge = edge_density(ev.state);
            if edge >= EDGE_GUARD_DENSITY {
                return Err(Error::EdgeDensity { time: ev.time, density: edge });
            }
            if matches!(ev.kind, EventKind::Start | EventKind::Stop(_)) {
                samples.push(LatticeState {
                    amplitudes: ev.state.to_vec(),
                    log_norm: ev.log_norm,
                    time: ev.time,
                    site_offset: params.site_offset,
                });
            }
            Ok(())
        },
    )?;
    Ok(samples)
}

/// Bloch period `2π/F`.
pub fn bloch_period(force: f64) -> Result<f64> {
    require_finite("force", force)?;
    if force == 0.0 {
        return Err(Error::ZeroForce);
    }
    Ok(2.0 * PI / force.abs())
}

/// Peak-detection settings for [`BranchPolicy::MinimumBetweenPeaks`].
///
/// Detection works on the density summed over unit cells `(2m, 2m+1)` and
/// smoothed with a Gaussian of `smoothing_cells` cells, which removes the
/// sublattice modulation. Population sums always use the raw density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakCriteria {
    /// Minimum prominence relative to the global maximum.
    pub min_relative_prominence: f64,
    /// Minimum distance between accepted peaks, in sites.
    pub min_separation: f64,
    pub smoothing_cells: f64,
}

impl PeakCriteria {
    /// 1% prominence and `4σ/3` separation for a beam of width `σ`.
    pub fn for_beam(beam: &GaussianBeam) -> Self {
        Self { min_relative_prominence: 0.01, min_separation: 4.0 * beam.sigma() / 3.0, smoothing_cells: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BranchPolicy {
    MinimumBetweenPeaks(PeakCriteria),
    /// Sites `>= site` form the upper branch.
    FixedSplit(i64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchPopulations {
    pub upper_fraction: f64,
    pub lower_fraction: f64,
    /// First site of the upper branch.
    pub split_index: i64,
}

/// Splits a density profile into a lower (smaller site index) and an upper
/// branch and returns their weights.
pub fn branch_populations(density: &[f64], first_site: i64, policy: &BranchPolicy) -> Result<BranchPopulations> {
    if density.is_empty() {
        return Err(Error::invalid("density", "is empty"));
    }
    let total: f64 = density.iter().sum();
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::invalid("density", "must have positive finite total weight"));
    }
    let split_index = match *policy {
        BranchPolicy::FixedSplit(site) => site,
        BranchPolicy::MinimumBetweenPeaks(criteria) => find_split(density, first_site, &criteria)?,
    };
    let upper: f64 = density
        .iter()
        .enumerate()
        .filter(|(i, _)| first_site + *i as i64 >= split_index)
        .map(|(_, d)| d)
        .sum::<f64>()
        / total;
    Ok(BranchPopulations { upper_fraction: upper, lower_fraction: 1.0 - upper, split_index })
}

fn find_split(density: &[f64], first_site: i64, criteria: &PeakCriteria) -> Result<i64> {
    let first_cell = first_site.div_euclid(2);
    let last_cell = (first_site + density.len() as i64 - 1).div_euclid(2);
    let mut cells = vec![0.0; (last_cell - first_cell + 1) as usize];
    for (i, d) in density.iter().enumerate() {
        cells[((first_site + i as i64).div_euclid(2) - first_cell) as usize] += d;
    }
    let smooth = gaussian_smooth(&cells, criteria.smoothing_cells);
    let global_max = smooth.iter().cloned().fold(0.0, f64::max);

    let mut peaks: Vec<(usize, f64)> = (1..smooth.len().saturating_sub(1))
        .filter(|&i| smooth[i] > smooth[i - 1] && smooth[i] >= smooth[i + 1])
        .filter(|&i| prominence(&smooth, i) >= criteria.min_relative_prominence * global_max)
        .map(|i| (i, smooth[i]))
        .collect();
    peaks.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut kept: Vec<usize> = Vec::new();
    for (i, _) in peaks {
        if kept.iter().all(|&k| (2 * i.abs_diff(k)) as f64 >= criteria.min_separation) {
            kept.push(i);
        }
    }
    if kept.len() != 2 {
        return Err(Error::PeakDetection { found: kept.len() });
    }
    let (a, b) = (kept[0].min(kept[1]), kept[0].max(kept[1]));
    let min_cell = (a..=b)
        .min_by(|&x, &y| smooth[x].total_cmp(&smooth[y]))
        .expect("non-empty range");
    Ok(2 * (first_cell + min_cell as i64))
}

/// Height above the higher of the two lowest points separating the peak
/// from any taller part of the profile.
fn prominence(y: &[f64], peak: usize) -> f64 {
    let h = y[peak];
    let mut left_min = h;
    for &v in y[..peak].iter().rev() {
        if v > h {
            break;
        }
        left_min = left_min.min(v);
    }
    let mut right_min = h;
    for &v in &y[peak + 1..] {
        if v > h {
            break;
        }
        right_min = right_min.min(v);
    }
    h - left_min.max(right_min)
}

fn gaussian_smooth(y: &[f64], width: f64) -> Vec<f64> {
    if width <= 0.0 {
        return y.to_vec();
    }
    let half = (4.0 * width).ceil() as isize;
    let kernel: Vec<f64> = (-half..=half)
        .map(|x| (-(x as f64).powi(2) / (2.0 * width * width)).exp())
        .collect();
    let norm: f64 = kernel.iter().sum();
    let n = y.len() as isize;
    (0..n)
        .map(|i| {
            (-half..=half)
                .filter(|&o| (0..n).contains(&(i + o)))
                .map(|o| y[(i + o) as usize] * kernel[(o + half) as usize])
                .sum::<f64>()
                / norm
        })
        .collect()
}

/// Outcome of evolving a beam for half a Bloch period.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfPeriodRun {
    pub params: LatticeParams,
    pub samples: Vec<LatticeState>,
    pub branches: Result<BranchPopulations>,
}

/// Prepares `beam` on an automatically sized chain, evolves it to `T/2` and
/// splits the final density with [`PeakCriteria::for_beam`].
///
/// Integration failures are returned as `Err`; a failed branch split is
/// reported inside the run so the density can still be inspected.
pub fn run_half_period(
    gamma_lattice: f64,
    force: f64,
    beam: &GaussianBeam,
    config: &IntegratorConfig,
    n_samples: usize,
) -> Result<HalfPeriodRun> {
    let t_half = bloch_period(force)? / 2.0;
    let params = LatticeParams::for_beam(gamma_lattice, force, beam, t_half)?;
    let initial = gaussian_beam_state(beam, &params)?;
    let samples = evolve(&initial, &params, t_half, config, t_half / n_samples.max(1) as f64)?;
    let last = samples.last().expect("evolve returns at least the initial state");
    let branches = branch_populations(
        &last.density(),
        params.site_offset,
        &BranchPolicy::MinimumBetweenPeaks(PeakCriteria::for_beam(beam)),
    );
    Ok(HalfPeriodRun { params, samples, branches })
}
