//! Acceptance suite: one PASS/FAIL line per criterion.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use frlab::bilinear::{a_coef, b_coef, b_coef as b_m, bilinear_b, verify_appendix_interactions, InteractionTable};
use frlab::diagnostics::{
    blowup_f, check_lyapunov_trajectory, energy_ladder, euler_blowup_bound, fit_blowup_rate, hypo_lyapunov_criterion, origin_strain_lambda, r_upper,
    saturation_time,
};
use frlab::dyadic::{delta0, geometric, DyadicSystem, Model};
use frlab::evolve::{galerkin_psi, h1_norm, integrate_dyadic, integrate_galerkin, BlowupVerdict, SimConfig, Termination};
use frlab::field::{random_field, s_from_tilde, symmetric_field, SpectralField, DEFAULT_SYMMETRY_TOL};
use frlab::lattice::{verify_lattice_identities, ShellTable};
use frlab::physical::{
    default_sheet_truncation, enstrophy_identities, origin_matrix, sym_eigenvalues, vortex_sheet, Bump, GeneralSpectralField,
};

// Pinned tolerances.
const C1_MAX_SHELL: usize = 20;
const C1_PAIR_SHELL: usize = 6;
const C1_SECONDS: f64 = 5.0;
const C2_MAX_M: usize = 10;
const C2_TOL: f64 = 1e-12;
const C2_SECONDS: f64 = 10.0;
const C3_SAMPLES: usize = 50;
const C3_SHELLS: usize = 12;
const C3_RHS_TOL: f64 = 1e-12;
const C3_TRAJ_TOL: f64 = 1e-8;
const C3_SECONDS: f64 = 60.0;
const C4_ENERGY_DRIFT: f64 = 1e-8;
const C4_HYPO_BALANCE: f64 = 1e-7;
const C4_POSITIVITY: f64 = -1e-10;
const C5_SHELLS: usize = 30;
const C5_R: f64 = 0.4;
const C5_EXPONENT: (f64, f64) = (0.8, 1.2);
const C5_SECONDS: f64 = 120.0;
const C6_GRID: usize = 1_000_000;
const C6_TOL: f64 = 1e-8;
const C6_H1: f64 = 1e6;
const C7_ALPHA_TILDE: f64 = 0.2;
const C7_GAMMA: f64 = 0.2;
const C7_FD_TOL: f64 = 1e-4;
const C8_TOL: f64 = 1e-10;
const C8_ISOMETRY: f64 = 1e-12;
const C8_IDENTITY: f64 = 1e-6;
const C9_FIELDS: usize = 100;
const C9_DECAY_TOL: f64 = 1e-6;
const C10_TOL: f64 = 1e-8;
const C10_HELICITY: f64 = 1e-12;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn euler_cfg(n: usize, t_end: f64) -> SimConfig {
    let mut c = SimConfig::new(Model::Euler, n, t_end);
    c.rtol = 1e-12;
    c.atol = 1e-14;
    c
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let rep = verify_lattice_identities(C1_MAX_SHELL, C1_PAIR_SHELL);
    let secs = start.elapsed().as_secs_f64();
    match rep {
        Ok(r) => outcome(
            r.passed && secs < C1_SECONDS,
            format!(
                "{} frequencies, {} sum pairs found = {} catalogued, {:.2}s",
                r.frequencies_checked, r.sum_pairs_found, r.catalogue_pairs, secs
            ),
        ),
        Err(e) => outcome(false, e.to_string()),
    }
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let rep = verify_appendix_interactions(C2_MAX_M, C2_TOL);
    let secs = start.elapsed().as_secs_f64();
    let a0 = rel(a_coef(0), 2.0 * PI);
    let b0 = rel(b_coef(0), 12.0 * PI / 11f64.sqrt());
    match rep {
        Ok(r) => {
            let exact = r.cases.iter().all(|c| c.exact_square_match);
            outcome(
                r.passed && exact && a0 < 1e-15 && b0 < 1e-15 && secs < C2_SECONDS,
                format!("{} cases, max rel err {:.2e}, exact squares {exact}, a_0/b_0 fixtures ok, {:.2}s", r.cases.len(), r.max_relative_error, secs),
            )
        }
        Err(e) => outcome(false, e.to_string()),
    }
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let table = Arc::new(ShellTable::new(C3_SHELLS).unwrap());
    let inter = InteractionTable::galerkin(table.clone()).unwrap();
    let sys = DyadicSystem::new(Model::Euler, C3_SHELLS);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut max_rhs: f64 = 0.0;
    for _ in 0..C3_SAMPLES {
        let psi: Vec<f64> = (0..=C3_SHELLS).map(|n| rng.gen_range(0.0..1.0) * 0.6f64.powi(n as i32)).collect();
        let u = SpectralField::from_psi(table.clone(), &psi).unwrap();
        let b = bilinear_b(&inter, &u, &u);
        let got = match b.to_psi(1e-9) {
            Ok(p) => p,
            Err(e) => return outcome(false, format!("B(u,u) left the symmetric class: {e}")),
        };
        let mut want = vec![0.0; psi.len()];
        sys.nonlinear(&psi, &mut want);
        let scale = want.iter().map(|x| x.abs()).fold(0.0, f64::max);
        for n in 0..psi.len() {
            max_rhs = max_rhs.max((got[n] - want[n]).abs() / scale);
        }
    }
    let t_half = 0.5 * euler_blowup_bound(1.0).unwrap().t_star;
    let cfg = euler_cfg(C3_SHELLS, t_half);
    let (_, dy) = integrate_dyadic(&delta0(C3_SHELLS), &cfg).unwrap();
    let u0 = SpectralField::from_psi(table, &delta0(C3_SHELLS)).unwrap();
    let (gsys, gt) = integrate_galerkin(&u0, &cfg).unwrap();
    let gpsi = match galerkin_psi(&gsys, &gt, 1e-8) {
        Ok(p) => p,
        Err(e) => return outcome(false, format!("Galerkin run left the symmetric class: {e}")),
    };
    let mut max_traj: f64 = 0.0;
    for (t, p) in gt.ts.iter().zip(&gpsi) {
        let d = dy.dense(*t);
        for n in 0..p.len() {
            max_traj = max_traj.max((p[n] - d[n]).abs());
        }
    }
    let reached = gt.termination == Termination::ReachedTEnd && dy.termination == Termination::ReachedTEnd;
    let secs = start.elapsed().as_secs_f64();
    outcome(
        max_rhs < C3_RHS_TOL && max_traj < C3_TRAJ_TOL && reached && secs < C3_SECONDS,
        format!("rhs max rel err {max_rhs:.2e}; Galerkin vs dyadic sup err {max_traj:.2e} on [0, {t_half:.3}]; {secs:.1}s"),
    )
}

fn criterion_4() -> Outcome {
    let n = 20;
    let (_, tr) = integrate_dyadic(&delta0(n), &euler_cfg(n, 1.0)).unwrap();
    let e0 = DyadicSystem::shell_energy(&tr.ys[0], 0);
    let drift = tr.ys.iter().map(|y| rel(DyadicSystem::shell_energy(y, 0), e0)).fold(0.0, f64::max);
    let min_psi = tr.ys.iter().flat_map(|y| y.iter()).cloned().fold(f64::INFINITY, f64::min);
    let mut monotone = true;
    for w in tr.ys.windows(2) {
        for k in 1..=n {
            let (a, b) = (DyadicSystem::shell_energy(&w[0], k), DyadicSystem::shell_energy(&w[1], k));
            if b < a - 1e-15 * e0 {
                monotone = false;
            }
        }
    }
    let model = Model::Hypo { alpha: 0.3, nu: 0.05 };
    let mut cfg = euler_cfg(n, 1.0);
    cfg.model = model;
    let psi0 = geometric(0.5, n);
    let (sys, ht) = integrate_dyadic(&psi0, &cfg).unwrap();
    let diss = ht.integral(|y, f| {
        let g: f64 = (0..y.len()).map(|i| 2.0 * sys.decay[i] * y[i] * y[i]).sum();
        let dg: f64 = (0..y.len()).map(|i| 4.0 * sys.decay[i] * y[i] * f[i]).sum();
        (g, dg)
    });
    let he0 = DyadicSystem::shell_energy(&psi0, 0);
    let balance = ht
        .ys
        .iter()
        .zip(&diss)
        .map(|(y, d)| rel(DyadicSystem::shell_energy(y, 0) + d, he0))
        .fold(0.0, f64::max);
    let hmin = ht.ys.iter().flat_map(|y| y.iter()).cloned().fold(f64::INFINITY, f64::min);
    outcome(
        drift < C4_ENERGY_DRIFT && balance < C4_HYPO_BALANCE && min_psi >= C4_POSITIVITY && hmin >= C4_POSITIVITY && monotone,
        format!("Euler drift {drift:.2e}; hypo balance {balance:.2e}; min psi {:.2e}; E_n monotone {monotone}", min_psi.min(hmin)),
    )
}

fn blowup_run(n: usize) -> (DyadicSystem, frlab::evolve::Trajectory) {
    let t_star = euler_blowup_bound(1.0).unwrap().t_star;
    let mut cfg = euler_cfg(n, t_star);
    // Past 2·10⁶ the truncated run only oscillates at the top shell.
    cfg.blowup_threshold = 2.0 * C6_H1;
    integrate_dyadic(&delta0(n), &cfg).unwrap()
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let (_, tr) = blowup_run(C5_SHELLS);
    let ladder = match energy_ladder(&tr, C5_R, 1e-10) {
        Ok(l) => l,
        Err(e) => return outcome(false, e.to_string()),
    };
    let sat = saturation_time(&tr).unwrap_or(tr.t_last());
    let fit = fit_blowup_rate(&tr, Some(euler_blowup_bound(1.0).unwrap().t_star));
    let secs = start.elapsed().as_secs_f64();
    let (p, t_est) = match &fit {
        BlowupVerdict::Signature(r) => (r.rate_exponent, r.t_est),
        BlowupVerdict::NoSignature { .. } => (f64::NAN, f64::NAN),
    };
    let in_range = p >= C5_EXPONENT.0 && p <= C5_EXPONENT.1;
    outcome(
        ladder.all_reliable_hold && ladder.reliable_rows > 5 && in_range && secs < C5_SECONDS,
        format!(
            "{} ladder rows before saturation (t_sat = {sat:.6}), all t_n <= T_n: {}; fitted exponent {p:.4}, T_est {t_est:.6}; {secs:.1}s",
            ladder.reliable_rows, ladder.all_reliable_hold
        ),
    )
}

fn criterion_6() -> Outcome {
    let b = euler_blowup_bound(1.0).unwrap();
    let (lo, hi) = (1.0 / 3.0, r_upper());
    let mut best = f64::INFINITY;
    for i in 1..C6_GRID {
        best = best.min(blowup_f(lo + (hi - lo) * i as f64 / C6_GRID as f64));
    }
    let grid_t = 3f64.sqrt() / (2f64.sqrt() * PI) * best;
    let err = rel(b.t_star, grid_t);
    let (_, dy) = blowup_run(C5_SHELLS);
    let t_dy = dy.first_crossing(C6_H1, h1_norm);
    let table = Arc::new(ShellTable::new(C5_SHELLS).unwrap());
    let u0 = SpectralField::from_psi(table, &delta0(C5_SHELLS)).unwrap();
    let mut cfg = euler_cfg(C5_SHELLS, b.t_star);
    cfg.rtol = 1e-10;
    cfg.atol = 1e-12;
    // ‖u‖_{Ḣ^{log3/(2log2)}} is about 23‖ψ‖_{ℋ¹}.
    cfg.blowup_threshold = 1e8;
    let (gsys, gt) = integrate_galerkin(&u0, &cfg).unwrap();
    let t_gal = gt.first_crossing(C6_H1, |y| h1_norm(&gsys.unpack(y).to_psi(1e-6).unwrap_or_default()));
    let ok = |t: Option<f64>| t.map_or(false, |t| t < b.t_star);
    outcome(
        err < C6_TOL && ok(t_dy) && ok(t_gal),
        format!(
            "T* = {:.10} (r* = {:.6}), grid oracle rel err {err:.2e}; H1 > 1e6 at t = {:?} (dyadic), {:?} (Galerkin)",
            b.t_star, b.r_star, t_dy, t_gal
        ),
    )
}

fn criterion_7() -> Outcome {
    let n = C5_SHELLS;
    let psi0 = delta0(n);
    let probe = hypo_lyapunov_criterion(&psi0, C7_GAMMA, C7_ALPHA_TILDE, 1.0).unwrap();
    // threshold ∝ ν²; take ν at a tenth of the largest admissible value.
    let nu = 0.1 * (probe.h0 / probe.threshold).sqrt();
    let crit = hypo_lyapunov_criterion(&psi0, C7_GAMMA, C7_ALPHA_TILDE, nu).unwrap();
    let t_bound = crit.t_max_bound.unwrap();
    let mut cfg = euler_cfg(n, t_bound);
    cfg.model = Model::Hypo { alpha: s_from_tilde(C7_ALPHA_TILDE), nu };
    cfg.blowup_threshold = 0.1 * 3f64.sqrt().powi(n as i32);
    let (sys, tr) = integrate_dyadic(&psi0, &cfg).unwrap();
    let sat = saturation_time(&tr).unwrap_or(tr.t_last());
    let chk = check_lyapunov_trajectory(&sys, &tr, C7_GAMMA, crit.kappa, sat, C7_FD_TOL).unwrap();
    outcome(
        crit.qualifies && chk.lower_bound_holds && chk.differential_holds && chk.max_fd_relative_error < C7_FD_TOL && chk.samples_checked > 10,
        format!(
            "nu = {nu:.4e}, H0 = {:.4} >= threshold {:.4e}, kappa = {:.5}; {} samples to t_sat = {sat:.5}: min H/lower {:.6}, min dH/(2kH^1.5) {:.4}, FD err {:.2e}",
            crit.h0, crit.threshold, crit.kappa, chk.samples_checked, chk.min_lower_bound_ratio, chk.min_differential_ratio, chk.max_fd_relative_error
        ),
    )
}

fn criterion_8() -> Outcome {
    let n = 6;
    let table = Arc::new(ShellTable::new(n).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut max_grad: f64 = 0.0;
    let mut max_eig: f64 = 0.0;
    for trial in 0..20 {
        let psi: Vec<f64> = if trial == 0 { delta0(n) } else { (0..=n).map(|_| rng.gen_range(0.0..1.0)).collect() };
        let f = GeneralSpectralField::from_spectral(&SpectralField::from_psi(table.clone(), &psi).unwrap());
        let s = f.evaluate([0.0; 3]);
        let lam = origin_strain_lambda(&psi);
        let want = origin_matrix(lam);
        for i in 0..3 {
            for j in 0..3 {
                max_grad = max_grad.max((s.grad[i][j] - want[i][j]).abs() / lam);
            }
        }
        let e = sym_eigenvalues(&s.strain);
        for (a, b) in e.iter().zip([-2.0 * lam, lam, lam]) {
            max_eig = max_eig.max((a - b).abs() / lam);
        }
    }
    let fixture = rel(origin_strain_lambda(&delta0(3)), 12.0 * PI * 1.2f64.sqrt());

    // Identities along a symmetric Euler run and a generic hypodissipative run.
    let small = Arc::new(ShellTable::new(3).unwrap());
    let mut iso: f64 = 0.0;
    let mut ident: f64 = 0.0;
    let mut exact = true;
    let u_sym = SpectralField::from_psi(small.clone(), &[1.0, 0.5, 0.25, 0.125]).unwrap();
    let u_gen = random_field(small, &mut rng);
    for (u, model) in [(u_sym, Model::Euler), (u_gen, Model::Hypo { alpha: 0.4, nu: 0.2 })] {
        let mut cfg = euler_cfg(3, 0.05);
        cfg.model = model;
        let (sys, tr) = integrate_galerkin(&u, &cfg).unwrap();
        let rep = enstrophy_identities(&sys, &tr, None, 6);
        iso = iso.max(rep.max_isometry_residual);
        ident = ident.max(rep.max_identity_residual);
        exact &= rep.quadrature_exact;
    }
    outcome(
        max_grad < C8_TOL && max_eig < C8_TOL && fixture < 1e-14 && iso < C8_ISOMETRY && ident < C8_IDENTITY && exact,
        format!("grad(0) rel err {max_grad:.2e}, eigenvalues {max_eig:.2e}, fixture {fixture:.1e}; isometry {iso:.2e}, enstrophy identity {ident:.2e}"),
    )
}

fn criterion_9() -> Outcome {
    let n = 7;
    let table = Arc::new(ShellTable::new(n).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut agree = 0;
    for i in 0..C9_FIELDS {
        let phi: Vec<f64> = (0..=n / 2).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let eta: Vec<f64> = (0..=n / 2).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let zeta: Vec<f64> = if i % 2 == 0 { eta.clone() } else { (0..=n / 2).map(|_| rng.gen_range(-1.0..1.0)).collect() };
        let f = symmetric_field(table.clone(), &phi, &eta, &zeta);
        let flags = f.symmetry_classify(DEFAULT_SYMMETRY_TOL);
        if flags.mirror_parity_consistent() && flags.hj_parity == (i % 2 == 0) {
            agree += 1;
        }
    }

    // Broken parity: ρ_m(t) = ρ_m(0) exp(−b_m ∫φ_{m+1}).
    let phi = [1.0, 0.4, 0.1, 0.02];
    let eta = [0.3, 0.2, 0.05, 0.0];
    let zeta = [0.1, 0.05, 0.01, 0.0];
    let u0 = symmetric_field(table.clone(), &phi, &eta, &zeta);
    let (gsys, gt) = integrate_galerkin(&u0, &euler_cfg(n, 0.2)).unwrap();
    let mut decay_err: f64 = 0.0;
    let mut printed_err: f64 = 0.0;
    for m in 0..3 {
        let idx = 2 * m + 2;
        let ints = gt.integral(|y, f| {
            let a = gsys.unpack(y).phi_eta_zeta().0[idx / 2].re;
            let b = gsys.unpack(f).phi_eta_zeta().0[idx / 2].re;
            (a, b)
        });
        let rho0 = eta[m] - zeta[m];
        for (y, i) in gt.ys.iter().zip(&ints) {
            let (_, e, z) = gsys.unpack(y).phi_eta_zeta();
            let rho = (e[m] - z[m]).re;
            // Integrating ρ̇ = b_m φ_{m+1} ρ, which follows from the h/j mode equations.
            let want = rho0 * (b_m(m) * i).exp();
            let printed = rho0 * (-b_m(m) * i).exp();
            decay_err = decay_err.max((rho - want).abs() / rho0.abs());
            printed_err = printed_err.max((rho - printed).abs() / rho0.abs());
        }
    }

    // Global-regularity regime.
    let alpha_reg = 3f64.ln() / (4.0 * 2f64.ln());
    let mut cfg = SimConfig::new(Model::Hypo { alpha: alpha_reg, nu: 0.05 }, 20, 20.0);
    cfg.rtol = 1e-10;
    let (_, rt) = integrate_dyadic(&delta0(20), &cfg).unwrap();
    let h1: Vec<f64> = rt.ys.iter().map(|y| h1_norm(y)).collect();
    let h1_max = h1.iter().cloned().fold(0.0, f64::max);
    let half = rt.ts.iter().position(|t| *t >= 10.0).unwrap_or(0);
    let late_max = h1[half..].iter().cloned().fold(0.0, f64::max);
    let bounded = rt.termination == Termination::ReachedTEnd && late_max <= h1_max && h1_max < 1e3;

    // Small data: Ḣ^s nonincreasing for s = s_c and s = 1.
    let alpha = 0.25;
    let s_c = 3f64.ln() / (2.0 * 2f64.ln()) - 2.0 * alpha;
    let small_n = 10;
    let st = Arc::new(ShellTable::new(small_n).unwrap());
    let mut cfg = SimConfig::new(Model::Hypo { alpha, nu: 1.0 }, small_n, 2.0);
    cfg.rtol = 1e-11;
    let psi0: Vec<f64> = geometric(0.4, small_n).iter().map(|x| 1e-3 * x).collect();
    let (_, st_tr) = integrate_dyadic(&psi0, &cfg).unwrap();
    let mut monotone = true;
    for s in [s_c, 1.0] {
        let norms: Vec<f64> = st_tr.ys.iter().map(|y| SpectralField::from_psi(st.clone(), y).unwrap().sobolev_norm(s)).collect();
        monotone &= norms.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-13));
    }
    outcome(
        agree == C9_FIELDS && decay_err < C9_DECAY_TOL && bounded && monotone,
        format!(
            "{agree}/{C9_FIELDS} classifications agree; parity defect vs exp(+b int phi) err {decay_err:.2e} (vs exp(-b int phi): {printed_err:.2e}); alpha = log3/(4log2) max H1 {h1_max:.3} (late {late_max:.3}); small-data norms nonincreasing {monotone}"
        ),
    )
}

fn criterion_10() -> Outcome {
    let g = Bump::default();
    let mut worst: f64 = 0.0;
    let mut hel: f64 = 0.0;
    let mut mirror = f64::INFINITY;
    for eps in [0.5, 0.2, 0.1] {
        let sheet = vortex_sheet(eps, &g, default_sheet_truncation(eps)).unwrap();
        let d0 = -4.0 * sheet.field.evaluate([0.0; 3]).det_strain();
        let d1 = -4.0 * sheet.field.evaluate([0.0, 1.0 / 3.0, 1.0 / 3.0]).det_strain();
        worst = worst.max(rel(d0, sheet.origin_target())).max(rel(d1, sheet.offset_target()));
        hel = hel.max(sheet.field.helicity().abs());
        mirror = mirror.min(sheet.field.sigma_mirror_deviation());
    }
    outcome(
        worst < C10_TOL && hel < C10_HELICITY && mirror > 0.1,
        format!("det identities max rel err {worst:.2e}; |helicity| {hel:.1e}; sigma-mirror deviation {mirror:.3}"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("lattice identities", criterion_1),
        ("interaction oracle", criterion_2),
        ("reduction correctness", criterion_3),
        ("conservation and positivity", criterion_4),
        ("blowup ladder", criterion_5),
        ("Euler blowup bound", criterion_6),
        ("Lyapunov criterion", criterion_7),
        ("strain geometry", criterion_8),
        ("symmetry dynamics", criterion_9),
        ("vortex sheet", criterion_10),
    ];
    let filter: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.contains(&(i + 1)) {
            continue;
        }
        let start = Instant::now();
        let o = f();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] criterion {:>2} {name}: {} ({:.1}s)", i + 1, o.detail, start.elapsed().as_secs_f64());
        if !o.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
