//! Acceptance suite: one line per criterion, non-zero exit if any fails.

mod common;

use std::time::Instant;

use common::*;
use formconv::cli::{cli_main, EXIT_HYPOTHESIS};
use formconv::convergence::{self, check_hypotheses, check_unif_est, legacy_core_check, RunOptions};
use formconv::experiments::{self, Mesh1D};
use formconv::forms::{self, FormInH, Sector};
use formconv::lax_milgram::{self, CoerciveFormOnV, GalerkinPair};
use formconv::linalg::{self, c64, cr, CMatrix, CVector};
use formconv::random::{self, SeededRng};
use formconv::relation;
use formconv::semigroup::{self, DegenerateSemigroup};
use rand::Rng;

/// `‖(λ+A_k)⁻¹ − (λ+A)⁻¹‖₂` at k = 64, d = 511, λ = 1, from the direct
/// stiffness/mass solves in `tests/common` (`regenerate_frozen_values`).
const DIRICHLET_OP_ERR_LAST: f64 = 7.371_892_487_831_631_5e-3;
/// Rotating subspaces: the oracle gives 6.5e-17 at n = N (the last member
/// spans V); the threshold leaves room for rounding.
const ROTATING_STRONG_ERR_THRESHOLD: f64 = 1e-10;
/// Absorption with θ₀ = 0.4 ≤ θ = 0.6: the oracle gives 5.2602e-4 at n = 16;
/// threshold is 1% above it.
const ABSORPTION_OP_ERR_THRESHOLD: f64 = 5.313e-4;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Option<f64>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn sub(a: &CMatrix, b: &CMatrix) -> CMatrix {
    linalg::axpy(a.as_ref(), cr(-1.0), b.as_ref())
}

fn norm2(a: &CMatrix) -> f64 {
    linalg::spectral_norm(a.as_ref())
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

/// `x^H F x` on raw row-major data.
fn quad(f: &[c64], x: &[c64]) -> c64 {
    let n = x.len();
    let mut acc = c64::new(0.0, 0.0);
    for i in 0..n {
        let mut row = c64::new(0.0, 0.0);
        for j in 0..n {
            row += f[i * n + j] * x[j];
        }
        acc += x[i].conj() * row;
    }
    acc
}

/// Random quasi-sectorial-or-not form with a random sector: a mix of
/// instances built inside the sector, just outside it and generic ones.
fn random_sector_instance(rng: &mut SeededRng) -> (FormInH, Sector) {
    let m = 6;
    let d = rng.gen_range(1..=6);
    let j = random::random_matrix(rng, d, m);
    let theta: f64 = rng.gen_range(0.0..1.3);
    let gamma = rng.gen_range(-1.0..1.0);
    let rank = rng.gen_range(1..=m);
    let inside = rng.gen_range(0.0..=theta);
    let outside = (theta + rng.gen_range(0.01..0.3)).min(1.55);
    let core = match rng.gen_range(0..4) {
        0 => random::random_sectorial(rng, m, rank, inside),
        1 => random::random_sectorial(rng, m, rank, outside),
        2 => random::random_matrix(rng, m, m),
        _ => random::random_psd(rng, m, rank),
    };
    let jj = linalg::adj_mul(j.as_ref(), j.as_ref());
    let f = linalg::axpy(core.as_ref(), cr(gamma), jj.as_ref());
    (FormInH::new(f, j).unwrap(), Sector::new(theta, gamma).unwrap())
}

fn sector_soundness() -> Outcome {
    let mut rng = random::rng(1);
    let (mut passed, mut failed) = (0, 0);
    for inst in 0..500 {
        let (form, sector) = random_sector_instance(&mut rng);
        let rep = forms::sector_verify(&form, sector);
        let fp = form.shifted(-sector.gamma).f;
        let fnorm = norm2(&form.f);
        if rep.passes {
            passed += 1;
            let data: Vec<c64> = (0..36).map(|k| fp[(k / 6, k % 6)]).collect();
            let mut worst = 0.0f64;
            for _ in 0..10_000 {
                let x = random::random_unit_vector(&mut rng, 6);
                let xs: Vec<c64> = (0..6).map(|i| x[i]).collect();
                worst = worst.max(forms::sector_violation(quad(&data, &xs), sector.theta));
            }
            ensure(worst <= 1e-9, || format!("instance {inst}: passing form violates by {worst:e}"))?;
        } else {
            failed += 1;
            let w = rep.witness.ok_or(format!("instance {inst}: failure without witness"))?;
            let z = linalg::sesq(fp.as_ref(), &w, &w);
            let v = forms::sector_violation(z, sector.theta);
            ensure(v >= 1e-12 * fnorm, || {
                format!("instance {inst}: witness violation {v:e} below 1e-12·‖F‖ = {:e}", 1e-12 * fnorm)
            })?;
        }
    }
    ensure(passed > 50 && failed > 50, || format!("unbalanced sample: {passed} pass, {failed} fail"))?;
    Ok(format!("{passed} passing and {failed} failing forms checked"))
}

fn random_coercive(rng: &mut SeededRng, n: usize) -> CMatrix {
    let theta = rng.gen_range(0.0..1.4);
    let s = random::random_sectorial(rng, n, n, theta);
    let shift = rng.gen_range(0.05..1.0);
    linalg::axpy(s.as_ref(), cr(shift), linalg::identity(n).as_ref())
}

fn cea_bound() -> Outcome {
    let mut rng = random::rng(2);
    let mut worst_ratio = 0.0f64;
    for inst in 0..1000 {
        let r = rng.gen_range(1..=12);
        let rc = rng.gen_range(1..=12);
        let big = CoerciveFormOnV::new(random_coercive(&mut rng, r)).map_err(|e| e.to_string())?;
        let jmap = random::random_matrix(&mut rng, r, rc);
        let pulled = linalg::adj_mul(jmap.as_ref(), linalg::matmul(big.atilde.as_ref(), jmap.as_ref()).as_ref());
        let defect_theta = rng.gen_range(0.0..1.4);
        let defect_rank = rng.gen_range(1..=rc);
        let defect = random::random_sectorial(&mut rng, rc, defect_rank, defect_theta);
        // keeps ǎ coercive when J is not injective
        let small_shift = rng.gen_range(0.01..0.5);
        let small_mat = linalg::axpy(
            linalg::axpy(pulled.as_ref(), cr(1.0), defect.as_ref()).as_ref(),
            cr(small_shift),
            linalg::identity(rc).as_ref(),
        );
        let small = CoerciveFormOnV::new(small_mat).map_err(|e| e.to_string())?;
        let pair = GalerkinPair::new(big, small, jmap, None).map_err(|e| format!("instance {inst}: {e}"))?;
        let eta = random::random_vector(&mut rng, r);
        let (u, ucheck) = lax_milgram::galerkin_solution(&pair, &eta).map_err(|e| e.to_string())?;
        let mut candidates = lax_milgram::default_candidates(&pair, &u, &ucheck);
        while candidates.len() < 20 {
            let v = random::random_vector(&mut rng, rc);
            let t = rng.gen_range(0.0..1.0);
            candidates.push(faer::Col::from_fn(rc, |i| ucheck[i] + v[i] * t));
        }
        let rep = lax_milgram::cea_error_bound(&pair, &eta, &candidates).map_err(|e| e.to_string())?;
        for (k, b) in rep.bounds.iter().enumerate() {
            ensure(rep.exact_sq <= b.abs_bound + 1e-9 * rep.scale, || {
                format!("instance {inst}, candidate {k}: {:e} > {:e}", rep.exact_sq, b.abs_bound)
            })?;
            ensure(b.re_bound <= b.abs_bound, || format!("instance {inst}: re_bound above abs_bound"))?;
        }
        worst_ratio = worst_ratio.max(rep.exact_sq / rep.best_abs_bound().max(f64::MIN_POSITIVE));
    }
    Ok(format!("1000 instances x 20 candidates, max exact/best bound = {worst_ratio:.3}"))
}

fn random_quasi_sectorial(rng: &mut SeededRng) -> (FormInH, Sector) {
    let m = rng.gen_range(1..=6);
    let d = rng.gen_range(1..=6);
    let jrank = rng.gen_range(1..=m.min(d));
    let j = linalg::matmul(
        random::random_matrix(rng, d, jrank).as_ref(),
        random::random_matrix(rng, jrank, m).as_ref(),
    );
    let theta: f64 = rng.gen_range(0.0..1.3);
    let gamma = rng.gen_range(-0.9..1.0);
    let rank = rng.gen_range(0..=m);
    let s = random::random_sectorial(rng, m, rank, theta);
    let jj = linalg::adj_mul(j.as_ref(), j.as_ref());
    let f = linalg::axpy(s.as_ref(), cr(gamma), jj.as_ref());
    (FormInH::new(f, j).unwrap(), Sector::new(theta, gamma).unwrap())
}

fn resolvent_oracle() -> Outcome {
    let mut rng = random::rng(3);
    let (mut worst_angle, mut worst_identity) = (0.0f64, 0.0f64);
    for inst in 0..200 {
        let (form, sector) = random_quasi_sectorial(&mut rng);
        let err = |e: formconv::Error| format!("instance {inst}: {e}");
        let r1 = relation::resolvent(&form, sector, 1.0).map_err(err)?;
        let from_r = linalg::column_space(relation::graph_from_resolvent(&r1, 1.0).as_ref(), 1e-12);
        let oracle = relation::graph_oracle(&form, sector).map_err(err)?;
        ensure(from_r.ncols() == oracle.basis.ncols(), || {
            format!("instance {inst}: graph dimensions {} vs {}", from_r.ncols(), oracle.basis.ncols())
        })?;
        if from_r.ncols() > 0 {
            let angles = linalg::principal_angles(from_r.as_ref(), oracle.basis.as_ref());
            let a = angles.iter().copied().fold(0.0, f64::max);
            worst_angle = worst_angle.max(a);
            ensure(a <= 1e-8, || format!("instance {inst}: principal angle {a:e}"))?;
        }
        let lams = [0.5, 1.0, 2.0];
        let rs: Vec<CMatrix> = lams
            .iter()
            .map(|&l| relation::resolvent(&form, sector, l - sector.gamma))
            .collect::<Result<_, _>>()
            .map_err(err)?;
        for a in 0..3 {
            for b in 0..3 {
                let lhs = sub(&rs[a], &rs[b]);
                let rhs = linalg::scaled(
                    linalg::matmul(rs[a].as_ref(), rs[b].as_ref()).as_ref(),
                    cr(lams[b] - lams[a]),
                );
                let res = norm2(&sub(&lhs, &rhs));
                let scale = norm2(&rs[a]).max(norm2(&rs[b])).powi(2);
                worst_identity = worst_identity.max(res / scale.max(f64::MIN_POSITIVE));
                ensure(res <= 1e-9 * scale, || format!("instance {inst}: resolvent identity residual {res:e}"))?;
            }
        }
    }
    Ok(format!(
        "200 instances, max principal angle {worst_angle:.1e}, max identity residual / ‖R‖² {worst_identity:.1e}"
    ))
}

fn semigroup_invariants(sg: &DegenerateSemigroup, inst: usize) -> Result<f64, String> {
    let p = &sg.p;
    let scale_p = norm2(p).max(1.0);
    let mut worst = norm2(&sub(&linalg::matmul(p.as_ref(), p.as_ref()), p)) / scale_p;
    worst = worst.max(norm2(&sub(&linalg::adjoint(p.as_ref()), p)) / scale_p);
    for (t, s) in [(0.0, 0.3), (0.2, 0.5), (0.7, 0.3), (1.0, 1.0)] {
        let tt = sg.evaluate(t).map_err(|e| e.to_string())?;
        let scale = norm2(&tt).max(1.0);
        let law = semigroup::semigroup_law_residual(sg, t, s).map_err(|e| e.to_string())?;
        let tts = norm2(&sg.evaluate(t + s).map_err(|e| e.to_string())?).max(1.0);
        worst = worst.max(law / (scale * tts));
        worst = worst.max(norm2(&sub(&linalg::matmul(p.as_ref(), tt.as_ref()), &tt)) / scale);
        worst = worst.max(norm2(&sub(&linalg::matmul(tt.as_ref(), p.as_ref()), &tt)) / scale);
    }
    ensure(worst <= 1e-9, || format!("instance {inst}: semigroup invariant residual {worst:e}"))?;
    Ok(worst)
}

fn semigroup_exactness() -> Outcome {
    let j = linalg::from_real_fn(2, 1, |i, _| if i == 0 { 1.0 } else { 0.0 });
    let form = FormInH::new(linalg::identity(1), j).unwrap();
    let rep = relation::associated_relation(&form, Sector::new(0.0, 1.0).unwrap()).map_err(|e| e.to_string())?;
    let sg = semigroup::from_relation(&rep);
    let mut exact = 0.0f64;
    for t in [0.0, 0.5, 1.0] {
        let tt = sg.evaluate(t).map_err(|e| e.to_string())?;
        let want = linalg::real_diag(&[(-t).exp(), 0.0]);
        let e = linalg::frob(sub(&tt, &want).as_ref());
        exact = exact.max(e);
        ensure(e <= 1e-12, || format!("t = {t}: |T(t) - diag(e^-t, 0)| = {e:e}"))?;
    }
    let mut rng = random::rng(3);
    let mut worst = 0.0f64;
    for inst in 0..200 {
        let (form, sector) = random_quasi_sectorial(&mut rng);
        let rep = relation::associated_relation(&form, sector).map_err(|e| format!("instance {inst}: {e}"))?;
        worst = worst.max(semigroup_invariants(&semigroup::from_relation(&rep), inst)?);
    }
    Ok(format!("example error {exact:.1e}, max invariant residual {worst:.1e} over 200 instances"))
}

fn dirichlet_experiment() -> Outcome {
    let start = Instant::now();
    let mesh = Mesh1D::uniform(DIRICHLET_D, 1.0).map_err(|e| e.to_string())?;
    let schedule = experiments::symmetric_schedule(&mesh, DIRICHLET_K_MAX).map_err(|e| e.to_string())?;
    let problem = experiments::dirichlet_subdomain_problem(&mesh, &schedule).map_err(|e| e.to_string())?;
    let opts = RunOptions {
        lambda: 1.0,
        probes: Vec::new(),
        defects: false,
        cea: false,
    };
    let errs = convergence::run(&problem, &opts).map_err(|e| e.to_string())?.op_norm_errors();
    let last = *errs.last().unwrap();
    let rel = (last - DIRICHLET_OP_ERR_LAST).abs() / DIRICHLET_OP_ERR_LAST;
    ensure(rel <= 0.01, || format!("k = 64 error {last:e} vs frozen {DIRICHLET_OP_ERR_LAST:e}"))?;
    let fem = experiments::assemble_dirichlet_1d(&mesh).map_err(|e| e.to_string())?;
    let ev = experiments::smallest_generalized_eigenvalue(&fem).map_err(|e| e.to_string())?;
    let pi2 = std::f64::consts::PI.powi(2);
    let ev_rel = (ev - pi2).abs() / pi2;
    ensure(ev_rel <= 1e-3, || format!("smallest eigenvalue {ev} vs pi^2"))?;
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 60.0, || format!("took {secs:.1} s"))?;
    let summary = format!(
        "k = 64 error {last:.6e} ({rel:.1e} rel. to frozen), eigenvalue rel. error {ev_rel:.1e}, {secs:.1} s"
    );
    // Consecutive Ω_k that contain the same hats give the same member form,
    // hence equal errors.
    let ties: Vec<String> = (1..errs.len())
        .filter(|&i| errs[i] >= errs[i - 1])
        .map(|i| {
            let same = problem.members[i].iota == problem.members[i - 1].iota;
            format!("k={}->{}{}", 2 * i, 2 * i + 2, if same { " (same hats)" } else { "" })
        })
        .collect();
    ensure(ties.is_empty(), || {
        format!(
            "op-norm error not strictly decreasing at {}; with h = 1/{} the shift 1/k - 1/(k+2) is below h there; {summary}",
            ties.join(", "),
            DIRICHLET_D + 1
        )
    })?;
    Ok(format!("{} members strictly decreasing, {summary}", errs.len()))
}

fn rotating_subspaces() -> Outcome {
    let problem = rotating_problem();
    let n = problem.len();
    let mut min_angle = f64::INFINITY;
    for a in 0..n {
        for b in a + 1..n {
            let ang = linalg::principal_angles(problem.members[a].iota.as_ref(), problem.members[b].iota.as_ref());
            min_angle = min_angle.min(ang.iter().copied().fold(f64::INFINITY, f64::min));
        }
    }
    ensure(min_angle > 1e-6, || format!("members intersect: smallest principal angle {min_angle:e}"))?;
    let probes = experiments::probes(problem.base.d(), PROBES, PROBE_SEED);
    let opts = RunOptions {
        lambda: 1.0,
        probes,
        defects: false,
        cea: false,
    };
    let errs = convergence::run(&problem, &opts).map_err(|e| e.to_string())?.strong_err_max();
    ensure(strictly_decreasing(&errs), || format!("strong errors not decreasing: {errs:?}"))?;
    let last = *errs.last().unwrap();
    ensure(last <= ROTATING_STRONG_ERR_THRESHOLD, || format!("final strong error {last:e}"))?;
    let legacy = legacy_core_check(&problem, 2).map_err(|e| e.to_string())?;
    ensure(!legacy.passes, || format!("legacy core condition unexpectedly holds: {legacy:?}"))?;
    let hyp = check_hypotheses(&problem, 1e-8).map_err(|e| e.to_string())?;
    ensure(hyp.passes, || format!("hypotheses fail: {hyp:?}"))?;
    Ok(format!(
        "min pairwise angle {min_angle:.2e}, final strong error {last:.1e}, legacy core rank {}/{} (fails), hypotheses pass",
        legacy.core_rank, legacy.r
    ))
}

fn semigroup_convergence() -> Outcome {
    let (d, k_max) = (127, 16);
    let mesh = Mesh1D::uniform(d, 1.0).map_err(|e| e.to_string())?;
    let schedule = experiments::symmetric_schedule(&mesh, k_max).map_err(|e| e.to_string())?;
    let grid = semigroup::default_grid();
    let problem = experiments::dirichlet_subdomain_problem(&mesh, &schedule).map_err(|e| e.to_string())?;
    let probes = experiments::probes(d, PROBES, PROBE_SEED);
    let conv = semigroup::semigroup_convergence(&problem, &probes, &grid).map_err(|e| e.to_string())?;
    for p in 0..PROBES {
        let series: Vec<f64> = (1..=problem.len()).map(|n| conv.errors_for(n)[p]).collect();
        ensure(strictly_decreasing(&series), || format!("probe {p}: {series:?}"))?;
    }
    let last_max = conv.errors_for(problem.len()).into_iter().fold(0.0, f64::max);

    // H carries every hat while the base form only uses those inside Ω_K.
    let base_interval = *schedule.last().unwrap();
    let partial = experiments::dirichlet_partial_base_problem(&mesh, base_interval, &schedule)
        .map_err(|e| e.to_string())?;
    let ran_j = linalg::column_space(partial.base.j.as_ref(), 1e-12);
    let perp = linalg::orthogonal_complement(ran_j.as_ref(), 1e-12);
    ensure(perp.ncols() > 0, || "ran(j) is dense".into())?;
    let mut rng = random::rng(PROBE_SEED);
    let perp_probes: Vec<CVector> = (0..PROBES)
        .map(|_| {
            let c = random::random_unit_vector(&mut rng, perp.ncols());
            linalg::matvec(perp.as_ref(), &c)
        })
        .collect();
    let pc = semigroup::semigroup_convergence(&partial, &perp_probes, &grid).map_err(|e| e.to_string())?;
    let perp_max = pc.rows.iter().map(|r| r.sup_err).fold(0.0, f64::max);
    ensure(perp_max <= 1e-14, || format!("ran(j)^perp probes: max error {perp_max:e}"))?;
    Ok(format!(
        "{} members, 5 probes strictly decreasing to {last_max:.2e}; ran(j)^perp max error {perp_max:.1e}",
        problem.len()
    ))
}

fn hypothesis_honesty() -> Outcome {
    let bad = absorption_problem(0.9);
    let all_fail = (1..=bad.len()).all(|n| !check_unif_est(&bad, n).unwrap().passes);
    ensure(all_fail, || "theta0 > theta: check_unif_est passed for some member".into())?;
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = cli_main(
        [
            "formconv", "demo", "absorption", "--d", "15", "--n", "4", "--theta", "0.6", "--theta0", "0.9", "--fast",
            "--quiet",
        ],
        &mut out,
        &mut err,
    );
    ensure(code == EXIT_HYPOTHESIS, || {
        format!("CLI exit code {code}, stderr: {}", String::from_utf8_lossy(&err))
    })?;

    let good = absorption_problem(ABSORPTION_THETA0);
    let all_pass = (1..=good.len()).all(|n| check_unif_est(&good, n).unwrap().passes);
    ensure(all_pass, || "theta0 <= theta: check_unif_est failed".into())?;
    let errs = convergence::resolvent_errors(&good, 1.0, &[])
        .map_err(|e| e.to_string())?
        .op_norm_errors();
    ensure(strictly_decreasing(&errs), || format!("errors not decreasing: {errs:?}"))?;
    let last = *errs.last().unwrap();
    ensure(last <= ABSORPTION_OP_ERR_THRESHOLD, || format!("final error {last:e}"))?;
    Ok(format!("violation exits {EXIT_HYPOTHESIS}; admissible schedule decays to {last:.4e}"))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("sector criterion soundness", sector_soundness, Some(10.0)),
        ("extended Cea bound", cea_bound, Some(30.0)),
        ("resolvent / graph oracle equivalence", resolvent_oracle, None),
        ("degenerate semigroup exactness", semigroup_exactness, None),
        ("Dirichlet subdomain experiment", dirichlet_experiment, Some(60.0)),
        ("non-monotone Galerkin", rotating_subspaces, None),
        ("semigroup convergence", semigroup_convergence, None),
        ("hypothesis-violation honesty", hypothesis_honesty, None),
    ];
    let mut failures = 0;
    for (name, run, budget) in criteria {
        let start = Instant::now();
        let mut outcome = run();
        let secs = start.elapsed().as_secs_f64();
        if let (Ok(_), Some(limit)) = (&outcome, budget) {
            if secs >= limit {
                outcome = Err(format!("runtime {secs:.1} s exceeds {limit} s"));
            }
        }
        match outcome {
            Ok(msg) => println!("PASS  {name} ({secs:.1} s): {msg}"),
            Err(msg) => {
                failures += 1;
                println!("FAIL  {name} ({secs:.1} s): {msg}");
            }
        }
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
