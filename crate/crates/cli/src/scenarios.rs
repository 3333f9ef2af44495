//! One function per scenario, each turning a [`RunConfig`] into tables.

use std::f64::consts::PI;

use rayon::prelude::*;

use ptlz::bloch::{dispersion, effective_lz_params, BAND_EP_TOLERANCE};
use ptlz::lattice::{
    bloch_period, branch_populations, evolve, gaussian_beam_state, run_half_period, BranchPolicy,
    GaussianBeam, LatticeParams, LatticeState, PeakCriteria,
};
use ptlz::propagator::{
    numerical_transmission, propagate_sweep, transmission_initial_state, Branch, StateVector2,
};
use ptlz::two_level::{analytic_transmission, spectrum, CouplingMode, TwoLevelParams};
use ptlz::{Error, IntegratorConfig};

use crate::config::{RunConfig, Scenario};
use crate::error::{CliError, Result};
use crate::output::{sibling_path, Artifact, Table};

pub fn run(config: &RunConfig) -> Result<Vec<Artifact>> {
    match config.scenario {
        Scenario::SpectrumScan => spectrum_scan(config),
        Scenario::TwoLevelSweep => two_level_sweep(config),
        Scenario::PtrCurve => ptr_curve(config),
        Scenario::LatticeEvolution => lattice_evolution(config),
        Scenario::DispersionScan => dispersion_scan(config),
        Scenario::LatticeTransmissionScan => lattice_transmission_scan(config),
    }
}

fn table(config: &RunConfig, columns: &[&str]) -> Table {
    let mut t = Table::new(columns);
    t.meta("generator", concat!("ptlz ", env!("CARGO_PKG_VERSION")));
    t.meta("scenario", config.scenario);
    for (k, v) in &config.parameters {
        t.meta(k.clone(), v);
    }
    t
}

fn single(config: &RunConfig, table: Table) -> Vec<Artifact> {
    vec![Artifact { path: config.output_path.clone(), table }]
}

fn integrator(config: &RunConfig) -> IntegratorConfig {
    IntegratorConfig::with_tolerances(config.number("rel_tolerance"), config.number("abs_tolerance"))
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| match i {
            0 => lo,
            _ if i == n - 1 => hi,
            _ => (a + (b - a) * i as f64 / (n - 1) as f64).exp(),
        })
        .collect()
}

fn ordered_range(config: &RunConfig, lo: &str, hi: &str) -> Result<(f64, f64)> {
    let (a, b) = (config.number(lo), config.number(hi));
    if a > b {
        return Err(CliError::validation(format!("{lo} = {a} exceeds {hi} = {b}")));
    }
    Ok((a, b))
}

fn spectrum_scan(config: &RunConfig) -> Result<Vec<Artifact>> {
    let gamma = config.number("gamma");
    let tol = config.number("ep_tolerance");
    let (v_min, v_max) = ordered_range(config, "v_min", "v_max")?;
    let n = config.count("n_points");
    if n < 2 && v_min != v_max {
        return Err(CliError::validation("n_points must be at least 2 unless v_min = v_max"));
    }
    let mut t = table(
        config,
        &["v", "re_lambda_plus", "im_lambda_plus", "re_lambda_minus", "im_lambda_minus", "overlap"],
    );
    t.meta("exceptional_points", format!("{},{}", -gamma, gamma));
    for v in linspace(v_min, v_max, n) {
        let s = spectrum(v, gamma, tol)?;
        let (p, m) = (s.lambda_plus(), s.lambda_minus());
        t.push(vec![v, p.re, p.im, m.re, m.im, s.overlap]);
    }
    Ok(single(config, t))
}

fn two_level_sweep(config: &RunConfig) -> Result<Vec<Artifact>> {
    let params = TwoLevelParams::new(
        config.number("gamma"),
        config.number("alpha"),
        config.number("v_initial"),
        config.number("v_final"),
    )?;
    let mode = match config.keyword("mode") {
        "hermitian_real" => CouplingMode::HermitianReal,
        _ => CouplingMode::PtImaginary,
    };
    let initial_kind = config.keyword("initial");
    let initial = match initial_kind {
        "eigenstate_plus" => StateVector2::eigenstate(params.v_initial, params.gamma, Branch::Plus, mode)?,
        "eigenstate_minus" => transmission_initial_state(&params, mode)?,
        "diabatic_2" => StateVector2::diabatic_2(),
        _ => StateVector2::random(config.seed()),
    };
    let trace = propagate_sweep(&params, &initial, &integrator(config), mode)?;
    let transmission = if initial_kind == "diabatic_2" && mode == CouplingMode::PtImaginary {
        numerical_transmission(&trace)?
    } else {
        f64::NAN
    };

    let mut t = table(config, &["t", "v", "p_plus", "p_minus", "log_norm", "numerical_transmission"]);
    let last = trace.len() - 1;
    for i in 0..trace.len() {
        let (pp, pm) = trace.populations[i].unwrap_or((f64::NAN, f64::NAN));
        let tr = if i == last { transmission } else { f64::NAN };
        t.push(vec![trace.times[i], trace.v_values[i], pp, pm, trace.log_norm[i], tr]);
    }
    Ok(single(config, t))
}

fn ptr_curve(config: &RunConfig) -> Result<Vec<Artifact>> {
    let gamma = config.number("gamma");
    let (a_min, a_max) = ordered_range(config, "alpha_min", "alpha_max")?;
    let alphas = logspace(a_min, a_max, config.count("n_points"));
    let numeric = config.keyword("mode") != "analytic";
    let range = config.number("range_in_gamma");
    let integrator = integrator(config);

    let rows: Vec<Vec<f64>> = alphas
        .par_iter()
        .map(|&alpha| -> Result<Vec<f64>> {
            let exact = analytic_transmission(gamma, alpha)?.p_tr;
            if !numeric {
                return Ok(vec![alpha, exact]);
            }
            let params = TwoLevelParams::new(gamma, alpha, -range * gamma, range * gamma)?;
            let init = transmission_initial_state(&params, CouplingMode::PtImaginary)?;
            let trace = propagate_sweep(&params, &init, &integrator, CouplingMode::PtImaginary)?;
            let num = numerical_transmission(&trace)?;
            Ok(vec![alpha, exact, num, (num - exact).abs()])
        })
        .collect::<Result<_>>()?;

    let columns: &[&str] = if numeric {
        &["alpha", "p_tr_analytic", "p_tr_numeric", "abs_diff"]
    } else {
        &["alpha", "p_tr_analytic"]
    };
    let mut t = table(config, columns);
    if numeric {
        let worst = rows.iter().map(|r| r[3]).fold(0.0, f64::max);
        t.meta("max_abs_diff", crate::output::format_number(worst));
    }
    rows.into_iter().for_each(|r| t.push(r));
    Ok(single(config, t))
}

fn beam(config: &RunConfig) -> Result<GaussianBeam> {
    Ok(GaussianBeam::new(config.number("q0"), config.number("k0"), config.number("sigma_sq"))?)
}

fn lattice_evolution(config: &RunConfig) -> Result<Vec<Artifact>> {
    let gamma = config.number("gamma_lattice");
    let force = config.number("force");
    let beam = beam(config)?;
    let t_half = if force > 0.0 { Some(bloch_period(force)? / 2.0) } else { None };
    let t_final = match (config.optional_number("t_final"), t_half) {
        (Some(t), _) => t,
        (None, Some(h)) => h,
        (None, None) => return Err(CliError::validation("t_final is required when force = 0")),
    };
    let params = match (config.optional_count("n_sites"), config.optional_integer("site_offset")) {
        (Some(n), Some(offset)) => LatticeParams::new(gamma, force, n, offset)?,
        (None, None) => LatticeParams::for_beam(gamma, force, &beam, t_final)?,
        _ => return Err(CliError::validation("n_sites and site_offset must be given together")),
    };
    if params.beyond_band_exceptional_points() {
        eprintln!("warning: gamma_lattice = {gamma} >= 2, the bands have no exceptional points");
    }
    let integrator = integrator(config);
    let sample_every = t_final / config.count("n_samples") as f64;
    let initial = gaussian_beam_state(&beam, &params)?;

    // the branch readout needs a sample exactly at T/2
    let mut samples: Vec<LatticeState>;
    let mut at_half: Option<LatticeState> = None;
    match t_half {
        Some(h) if h < t_final => {
            samples = evolve(&initial, &params, h, &integrator, sample_every)?;
            let mid = samples.last().expect("non-empty").clone();
            let rest = evolve(&mid, &params, t_final, &integrator, sample_every)?;
            samples.extend(rest.into_iter().skip(1));
            at_half = Some(mid);
        }
        _ => {
            samples = evolve(&initial, &params, t_final, &integrator, sample_every)?;
            if t_half == Some(t_final) {
                at_half = samples.last().cloned();
            }
        }
    }

    let mut density = table(config, &["time", "site", "density"]);
    density.meta("site_offset", params.site_offset).meta("n_sites", params.n_sites);
    for s in &samples {
        for (site, d) in s.sites().zip(s.density()) {
            density.push(vec![s.time, site as f64, d]);
        }
    }

    let mut summary = table(config, &["force", "gamma_lattice", "upper_fraction", "p_tr_formula", "abs_diff"]);
    summary.meta("final_log_norm", crate::output::format_number(samples.last().expect("non-empty").log_norm));
    let formula = if force > 0.0 { effective_lz_params(gamma, force)?.p_tr } else { f64::NAN };
    let upper = match &at_half {
        None => {
            summary.meta("branch_detection", "no sample at T/2");
            f64::NAN
        }
        Some(state) => {
            let policy = BranchPolicy::MinimumBetweenPeaks(PeakCriteria::for_beam(&beam));
            match branch_populations(&state.density(), params.site_offset, &policy) {
                Ok(b) => {
                    summary.meta("branch_detection", "ok").meta("split_index", b.split_index);
                    b.upper_fraction
                }
                Err(e @ Error::PeakDetection { .. }) => {
                    eprintln!("warning: {e}");
                    summary.meta("branch_detection", e);
                    f64::NAN
                }
                Err(e) => return Err(e.into()),
            }
        }
    };
    summary.push(vec![force, gamma, upper, formula, (upper - formula).abs()]);

    Ok(vec![
        Artifact { path: config.output_path.clone(), table: density },
        Artifact { path: sibling_path(&config.output_path, "summary"), table: summary },
    ])
}

fn dispersion_scan(config: &RunConfig) -> Result<Vec<Artifact>> {
    let gamma = config.number("gamma_lattice");
    let n = config.count("n_k");
    let mut t = table(
        config,
        &["k", "re_E_plus", "im_E_plus", "re_E_minus", "im_E_minus", "re_E_taylor_plus", "im_E_taylor_plus"],
    );
    for m in 0..n {
        let k = -PI + 2.0 * PI * m as f64 / n as f64;
        let [ep, em] = dispersion(k, gamma);
        // linearisation of 2cos k about π/2
        let taylor = spectrum(2.0 * (k - PI / 2.0), gamma, BAND_EP_TOLERANCE)?.lambda_plus();
        t.push(vec![k, ep.re, ep.im, em.re, em.im, taylor.re, taylor.im]);
    }
    Ok(single(config, t))
}

fn lattice_transmission_scan(config: &RunConfig) -> Result<Vec<Artifact>> {
    let gamma = config.number("gamma_lattice");
    let (f_min, f_max) = ordered_range(config, "f_min", "f_max")?;
    let forces = logspace(f_min, f_max, config.count("n_points"));
    let beam = beam(config)?;
    let integrator = integrator(config);

    let rows: Vec<Vec<f64>> = forces
        .par_iter()
        .map(|&force| -> Result<Vec<f64>> {
            let formula = effective_lz_params(gamma, force)?.p_tr;
            let run = run_half_period(gamma, force, &beam, &integrator, 1)?;
            Ok(match run.branches {
                Ok(b) => vec![force, b.upper_fraction, formula, (b.upper_fraction - formula).abs(), b.split_index as f64],
                Err(Error::PeakDetection { .. }) => vec![force, f64::NAN, formula, f64::NAN, f64::NAN],
                Err(e) => return Err(e.into()),
            })
        })
        .collect::<Result<_>>()?;

    let mut t = table(config, &["force", "upper_fraction", "p_tr_formula", "abs_diff", "split_index"]);
    let unresolved = rows.iter().filter(|r| r[1].is_nan()).count();
    t.meta("unresolved_branches", unresolved);
    rows.into_iter().for_each(|r| t.push(r));
    Ok(single(config, t))
}
