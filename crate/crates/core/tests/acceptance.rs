//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use ptlz::bloch::{
    bloch_hamiltonian, effective_lz_params, gaussian_momentum_analytic, k_expectation_series, momentum_state,
    MomentumGrid,
};
use ptlz::lattice::{
    bloch_period, build_hamiltonian_action, evolve, gaussian_beam_state, run_half_period, GaussianBeam,
    LatticeParams,
};
use ptlz::propagator::{
    adiabatic_redistribution_check, asymptotic_log_mod_sq, asymptotic_populations, propagate_sweep,
    transmission_error, transmission_initial_state, StateVector2,
};
use ptlz::two_level::{
    analytic_transmission, hamiltonian, spectrum, CouplingMode, TwoLevelParams, DEFAULT_EP_TOLERANCE,
};
use ptlz::IntegratorConfig;

struct Outcome {
    pass: bool,
    detail: String,
}

fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// |P_num − P_closed| < 2e-3 for γ ∈ {0.5, 1, 2}, 20 log-spaced α ∈ [0.05, 50].
fn closed_form_transmission() -> Outcome {
    let cases: Vec<(f64, f64)> = [0.5, 1.0, 2.0]
        .iter()
        .flat_map(|&g| log_spaced(0.05, 50.0, 20).into_iter().map(move |a| (g, a)))
        .collect();
    let results: Vec<_> = cases
        .par_iter()
        .map(|&(g, a)| (g, a, transmission_error(g, a, &IntegratorConfig::default())))
        .collect();
    let mut worst = (0.0, 0.0, 0.0);
    let mut errors = Vec::new();
    for (g, a, r) in results {
        match r {
            Ok((num, exact)) => {
                let d = (num - exact).abs();
                if d > worst.2 {
                    worst = (g, a, d);
                }
            }
            Err(e) => errors.push(format!("gamma={g} alpha={a}: {e}")),
        }
    }
    Outcome {
        pass: errors.is_empty() && worst.2 < 2e-3,
        detail: format!(
            "60 sweeps, max |diff| = {:.3e} at gamma={}, alpha={:.4}{}",
            worst.2,
            worst.0,
            worst.1,
            if errors.is_empty() { String::new() } else { format!("; errors: {errors:?}") }
        ),
    }
}

/// |ψ₁(∞)|² ≈ e^{2π} − 1 and |ψ₂(∞)|² ≈ e^{2π} within 1% at γ=1, α=0.5.
fn asymptotic_amplitudes() -> Outcome {
    let run = || -> ptlz::Result<(f64, f64)> {
        let params = TwoLevelParams::with_default_range(1.0, 0.5)?;
        let init = transmission_initial_state(&params, CouplingMode::PtImaginary)?;
        let trace = propagate_sweep(&params, &init, &IntegratorConfig::default(), CouplingMode::PtImaginary)?;
        let [l1, l2] = asymptotic_log_mod_sq(&trace)?;
        Ok((l1.exp(), l2.exp()))
    };
    let expected = analytic_transmission(1.0, 0.5).unwrap();
    let (e1, e2) = (expected.asymptotic_mod_psi1_sq(), expected.asymptotic_mod_psi2_sq());
    match run() {
        Ok((m1, m2)) => {
            let (r1, r2) = ((m1 / e1 - 1.0).abs(), (m2 / e2 - 1.0).abs());
            Outcome {
                pass: r1 < 0.01 && r2 < 0.01,
                detail: format!("|psi1|^2 = {m1:.3} vs {e1:.3} ({r1:.2e}), |psi2|^2 = {m2:.3} vs {e2:.3} ({r2:.2e})"),
            }
        }
        Err(e) => Outcome { pass: false, detail: e.to_string() },
    }
}

/// Eigenstate and 10 seeded random states end within 0.05 of (½, ½).
fn adiabatic_redistribution() -> Outcome {
    let params = TwoLevelParams::new(1.0, 0.5, -5.0, 5.0).unwrap();
    let mut initials = vec![("eigenstate".to_string(), transmission_initial_state(&params, CouplingMode::PtImaginary).unwrap())];
    initials.extend((1..=10u64).map(|seed| (format!("random({seed})"), StateVector2::random(seed))));
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for (name, init) in &initials {
        match adiabatic_redistribution_check(&params, init, &IntegratorConfig::default()) {
            Ok((pp, pm)) => {
                let d = (pp - 0.5).abs().max((pm - 0.5).abs());
                worst = worst.max(d);
                if d >= 0.05 {
                    failures.push(format!("{name}: ({pp:.4}, {pm:.4})"));
                }
            }
            Err(e) => failures.push(format!("{name}: {e}")),
        }
    }
    Outcome {
        pass: failures.is_empty(),
        detail: format!("11 initial states, max |p - 1/2| = {worst:.3e}{}", listed(&failures)),
    }
}

/// Real coupling reproduces e^{−πΔ²/α} within 1e-3.
fn hermitian_landau_zener() -> Outcome {
    let mut worst = 0.0f64;
    let mut errors = Vec::new();
    let config = IntegratorConfig::with_tolerances(1e-11, 1e-14);
    for delta in [0.25, 0.5] {
        for alpha in [0.25, 1.0] {
            let run = || -> ptlz::Result<f64> {
                let params = TwoLevelParams::new(delta, alpha, -20.0, 20.0)?;
                let init = transmission_initial_state(&params, CouplingMode::HermitianReal)?;
                let trace = propagate_sweep(&params, &init, &config, CouplingMode::HermitianReal)?;
                Ok(asymptotic_populations(&trace)?.1)
            };
            match run() {
                Ok(p) => worst = worst.max((p - (-PI * delta * delta / alpha).exp()).abs()),
                Err(e) => errors.push(format!("delta={delta} alpha={alpha}: {e}")),
            }
        }
    }
    Outcome {
        pass: errors.is_empty() && worst < 1e-3,
        detail: format!("4 sweeps, max |survival - exp(-pi d^2/a)| = {worst:.3e}{}", listed(&errors)),
    }
}

/// Upper-branch fraction at T/2 within 0.02 of (2 − e^{−πΓ²/2F})⁻¹ for 15 F.
fn lattice_transmission() -> Outcome {
    let gamma = 0.2;
    let beam = GaussianBeam::new(-15.0, PI, 20.0).unwrap();
    let forces = log_spaced(0.02, 0.5, 15);
    let rows: Vec<_> = forces
        .par_iter()
        .map(|&f| {
            let expected = effective_lz_params(gamma, f).unwrap().p_tr;
            let measured = run_half_period(gamma, f, &beam, &IntegratorConfig::default(), 1)
                .and_then(|run| run.branches)
                .map(|b| b.upper_fraction);
            (f, expected, measured)
        })
        .collect();
    let mut lines = Vec::new();
    let mut pass = true;
    for (f, expected, measured) in rows {
        match measured {
            Ok(m) => {
                let ok = (m - expected).abs() < 0.02;
                pass &= ok;
                lines.push(format!("F={f:.4} upper={m:.4} formula={expected:.4} {}", if ok { "ok" } else { "MISS" }));
            }
            Err(e) => {
                pass = false;
                lines.push(format!("F={f:.4} formula={expected:.4} MISS: {e}"));
            }
        }
    }
    let misses = lines.iter().filter(|l| l.contains("MISS")).count();
    Outcome { pass, detail: format!("{}/15 within 0.02\n    {}", 15 - misses, lines.join("\n    ")) }
}

/// d⟨k⟩/dt = −F within 2% for Γ=0.2, F=0.1 and a broad beam.
fn acceleration_theorem() -> Outcome {
    let force = 0.1;
    let run = || -> ptlz::Result<(f64, bool)> {
        let beam = GaussianBeam::new(-15.0, PI, 100.0)?;
        let t_half = bloch_period(force)? / 2.0;
        let params = LatticeParams::for_beam(0.2, force, &beam, t_half)?;
        let state = gaussian_beam_state(&beam, &params)?;
        let samples = evolve(&state, &params, t_half, &IntegratorConfig::default(), t_half / 40.0)?;
        let n_k = (2 * params.n_sites).next_power_of_two();
        let series = k_expectation_series(&samples, &MomentumGrid::new(n_k)?)?;
        let t: Vec<f64> = series.iter().map(|e| e.time).collect();
        let k: Vec<f64> = series.iter().map(|e| e.k_mean).collect();
        Ok((least_squares_slope(&t, &k), series.iter().any(|e| e.ambiguous)))
    };
    match run() {
        Ok((slope, ambiguous)) => {
            let rel = (slope / -force - 1.0).abs();
            Outcome {
                pass: rel < 0.02 && !ambiguous,
                detail: format!("slope = {slope:.6} vs {:.6} (rel {rel:.2e}), unwrap ambiguous: {ambiguous}", -force),
            }
        }
        Err(e) => Outcome { pass: false, detail: e.to_string() },
    }
}

/// Closed-form momentum amplitudes match the DFT to 1e-8 for σ² ∈ {5, 20, 80}.
fn theta_oracle() -> Outcome {
    let params = LatticeParams::new(0.2, 0.1, 400, -216).unwrap();
    let grid = MomentumGrid::new(512).unwrap();
    let mut worst = 0.0f64;
    let mut errors = Vec::new();
    for sigma_sq in [5.0, 20.0, 80.0] {
        let run = || -> ptlz::Result<f64> {
            let beam = GaussianBeam::new(-15.0, PI, sigma_sq)?;
            let two = momentum_state(&gaussian_beam_state(&beam, &params)?, &grid)?;
            let mut diff = 0.0f64;
            let mut scale = 0.0f64;
            for (i, &k) in two.k_values.iter().enumerate() {
                let (a1, a2) = gaussian_momentum_analytic(&beam, k)?;
                diff = diff.max((a1 - two.psi1[i]).norm()).max((a2 - two.psi2[i]).norm());
                scale = scale.max(a1.norm()).max(a2.norm());
            }
            Ok(diff / scale)
        };
        match run() {
            Ok(r) => worst = worst.max(r),
            Err(e) => errors.push(format!("sigma^2={sigma_sq}: {e}")),
        }
    }
    Outcome {
        pass: errors.is_empty() && worst < 1e-8,
        detail: format!("max |analytic - dft| / max |psi| = {worst:.3e}{}", listed(&errors)),
    }
}

/// Symmetry, spectral, biorthogonality, norm and transmission-formula properties.
fn property_suites() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut failures: Vec<String> = Vec::new();
    let mut check = |ok: bool, what: &str| {
        if !ok && !failures.iter().any(|f| f == what) {
            failures.push(what.to_string());
        }
    };
    let sz_conj_sz = |h: [[C64; 2]; 2]| {
        let s = [1.0, -1.0];
        let mut out = h;
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = h[i][j].conj() * s[i] * s[j];
            }
        }
        out
    };

    for _ in 0..1000 {
        let gamma: f64 = rng.random_range(1e-3..10.0);
        let v: f64 = rng.random_range(-30.0..30.0);
        let h = hamiltonian(v, gamma).unwrap();
        check(sz_conj_sz(h) == h, "two-level PT identity");
        let k: f64 = rng.random_range(-PI..PI);
        let hk = bloch_hamiltonian(k, gamma);
        check(sz_conj_sz(hk) == hk, "Bloch PT identity");

        let s = spectrum(v, gamma, DEFAULT_EP_TOLERANCE).unwrap();
        if v.abs() > gamma {
            check(s.eigenvalues.iter().all(|l| l.im.abs() < 1e-12 * l.norm()), "real spectrum for |v| > gamma");
        } else if !s.at_exceptional_point {
            check(s.lambda_plus() == s.lambda_minus().conj(), "conjugate pair for |v| < gamma");
        }
        if (v * v - gamma * gamma).abs() > 1e-4 {
            let (l, r) = (s.left_eigenvectors.unwrap(), s.right_eigenvectors.unwrap());
            for i in 0..2 {
                for j in 0..2 {
                    let d = l[i][0] * r[j][0] + l[i][1] * r[j][1];
                    check((d - if i == j { 1.0 } else { 0.0 }).norm() < 1e-10, "biorthogonality");
                }
            }
        }
    }

    for half in [1usize, 7, 30] {
        let gamma_lattice: f64 = rng.random_range(0.0..3.0);
        let p = LatticeParams::new(gamma_lattice, 0.0, 2 * half, 1 - half as i64).unwrap();
        let h = build_hamiltonian_action(&p).dense_matrix();
        let n = h.len();
        let ok = (0..n).all(|a| (0..n).all(|b| h[n - 1 - a][n - 1 - b].conj() == h[a][b]));
        check(ok, "bond-centred lattice identity");
    }

    let tight = IntegratorConfig::with_tolerances(1e-11, 1e-14);
    for (delta, alpha) in [(0.25, 0.25), (0.5, 1.0), (1.0, 0.5)] {
        let params = TwoLevelParams::new(delta, alpha, -20.0, 20.0).unwrap();
        let init = transmission_initial_state(&params, CouplingMode::HermitianReal).unwrap();
        let trace = propagate_sweep(&params, &init, &tight, CouplingMode::HermitianReal).unwrap();
        check(trace.log_norm.last().unwrap().abs() < 1e-8, "Hermitian two-level norm conservation");
    }
    {
        let force = 0.1;
        let period = bloch_period(force).unwrap();
        let beam = GaussianBeam::new(-15.0, PI, 20.0).unwrap();
        let params = LatticeParams::for_beam(0.0, force, &beam, period).unwrap();
        let state = gaussian_beam_state(&beam, &params).unwrap();
        let samples = evolve(&state, &params, period, &tight, period / 4.0).unwrap();
        check(samples.iter().all(|s| s.log_norm.abs() < 1e-8), "Hermitian lattice norm conservation");
    }

    for gamma in [0.1, 0.5, 1.0, 2.0] {
        let ps: Vec<f64> = log_spaced(0.1 * gamma * gamma, 1e3 * gamma * gamma, 100)
            .into_iter()
            .map(|a| analytic_transmission(gamma, a).unwrap().p_tr)
            .collect();
        check(ps.windows(2).all(|w| w[1] > w[0]), "transmission monotone in alpha");
    }
    check(analytic_transmission(1.0, 1e-4).unwrap().p_tr == 0.5, "slow-sweep limit 1/2");
    check((analytic_transmission(1.0, 1e9).unwrap().p_tr - 1.0).abs() < 1e-8, "fast-sweep limit 1");

    Outcome {
        pass: failures.is_empty(),
        detail: if failures.is_empty() {
            "PT identities, spectra, biorthogonality, norm conservation, transmission limits".to_string()
        } else {
            format!("violated: {failures:?}")
        },
    }
}

fn listed<T: std::fmt::Debug>(items: &[T]) -> String {
    if items.is_empty() { String::new() } else { format!("; {items:?}") }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("closed-form transmission vs integrator", closed_form_transmission),
        ("asymptotic amplitudes", asymptotic_amplitudes),
        ("adiabatic redistribution", adiabatic_redistribution),
        ("Hermitian Landau-Zener oracle", hermitian_landau_zener),
        ("lattice branch transmission", lattice_transmission),
        ("acceleration theorem", acceleration_theorem),
        ("theta-function momentum oracle", theta_oracle),
        ("property suites", property_suites),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        println!(
            "criterion {} {}: {} ({:.1}s) {}",
            i + 1,
            name,
            if outcome.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            outcome.detail
        );
        if !outcome.pass {
            failed += 1;
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
