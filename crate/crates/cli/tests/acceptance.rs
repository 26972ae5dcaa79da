//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero on any
//! failure. Each criterion must also finish inside its time budget.

use std::process::Command;
use std::time::{Duration, Instant};

use cocontact::dynamics::energy_law_residual;
use cocontact::geometry::jacobi_bracket;
use cocontact::hamilton_jacobi::{action_identity_check, coisotropy_residual, reconstruct_t, GeneratingFunction, SectionTZ};
use cocontact::quantities::{conserved_drift, dissipated_drift, involution_expansion, involution_residual, noether_symmetry};
use cocontact::sampling::{Grid, PhaseBox, DEFAULT_SAMPLES, DEFAULT_SEED};
use cocontact::systems::{
    build_system_with_defaults, ParamValue, SystemParams, SystemSpec, DEFAULT_T_RANGE, SYSTEM_NAMES,
};
use cocontact::{integrate, Params, PhasePoint, QuantityKind, ScalarField, Scheme};

type Outcome = Result<(bool, String), String>;

fn defaults(name: &str) -> Result<SystemSpec, String> {
    build_system_with_defaults(name, &SystemParams::new(), DEFAULT_T_RANGE).map_err(|e| e.to_string())
}

fn with(name: &str, params: &[(&str, ParamValue)]) -> Result<SystemSpec, String> {
    let p: SystemParams = params.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
    build_system_with_defaults(name, &p, DEFAULT_T_RANGE).map_err(|e| e.to_string())
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn darboux_table() -> Outcome {
    let mut worst = 0.0f64;
    for n in [1, 2, 3] {
        let coord = |slot| ScalarField::coordinate(slot, n);
        let z = coord(2 * n + 1);
        for x in PhaseBox::default_for(n).sample(1000, DEFAULT_SEED).map_err(err)? {
            for i in 0..n {
                let (qi, pi) = (coord(1 + i), coord(1 + n + i));
                let mut check = |f: &ScalarField, g: &ScalarField, expected: f64| -> Result<(), String> {
                    worst = worst.max((jacobi_bracket(f, g, &x).map_err(err)? - expected).abs());
                    Ok(())
                };
                check(&qi, &z, -x.q[i])?;
                check(&pi, &z, -2.0 * x.p[i])?;
                for j in 0..n {
                    let (qj, pj) = (coord(1 + j), coord(1 + n + j));
                    check(&qi, &pj, if i == j { 1.0 } else { 0.0 })?;
                    check(&qi, &qj, 0.0)?;
                    check(&pi, &pj, 0.0)?;
                }
            }
        }
    }
    Ok((worst < 1e-9, format!("sup error {worst:.3e} over 1000 points, n = 1,2,3 (tol 1e-9)")))
}

fn energy_law() -> Outcome {
    let mut worst = 0.0f64;
    for name in SYSTEM_NAMES {
        let sys = defaults(name)?;
        let traj = integrate(&sys.hamiltonian, &sys.default_init, 2.0, Scheme::rk4(1e-3)).map_err(err)?;
        worst = worst.max(energy_law_residual(&sys.hamiltonian, &traj).map_err(err)?);
    }
    Ok((worst < 1e-5, format!("max relative residual {worst:.3e} over four systems (tol 1e-5)")))
}

fn closed_forms() -> Outcome {
    let sys = with("free_particle_autonomous", &[("kappa", ParamValue::Number(2.0))])?;
    let x0 = PhasePoint::new(0.0, vec![1.0], vec![2.0], 2.0).map_err(err)?;
    let traj = integrate(&sys.hamiltonian, &x0, 1.0, Scheme::rk4(1e-3)).map_err(err)?;
    let mut worst = 0.0f64;
    for x in &traj.samples {
        let e = (2.0 * x.t).exp();
        worst = worst.max((x.q[0] - e).abs()).max((x.p[0] - 2.0 * e).abs()).max((x.z - e - e * e).abs());
    }
    Ok((worst < 1e-6, format!("sup error {worst:.3e} on [0,1], rk4 h = 1e-3 (tol 1e-6)")))
}

fn hj_residuals() -> Outcome {
    // Closed-form cases are held to 1e-9, quadrature-backed ones to 1e-6.
    let cases = [
        (with("free_particle_autonomous", &[])?, 1e-9),
        (
            with("free_particle_tm", &[("mass_law", ParamValue::Choice("constant".into()))])?,
            1e-9,
        ),
        (defaults("free_particle_tm")?, 1e-6),
        (defaults("falling_particle")?, 1e-6),
        (defaults("damped_oscillator")?, 1e-6),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (sys, tol) in &cases {
        let grid = Grid::default_t();
        let r = sys.hj_report(&sys.default_lambda, &grid, *tol).map_err(err)?;
        ok &= r.verdict && r.skipped == 0;
        let law = match sys.params.get("mass_law") {
            Some(ParamValue::Choice(l)) => format!("[{l}]"),
            _ => String::new(),
        };
        parts.push(format!("{}{law} {:.1e}/{tol:.0e}", sys.name, r.sup));
    }
    Ok((ok, parts.join(", ")))
}

fn registry() -> Outcome {
    let mut ok = true;
    let (mut box_worst, mut cons, mut diss) = (0.0f64, 0.0f64, 0.0f64);
    for name in SYSTEM_NAMES {
        let sys = defaults(name)?;
        for r in sys.self_test().map_err(err)? {
            ok &= r.verdict;
            box_worst = box_worst.max(r.max);
        }
        let traj = integrate(&sys.hamiltonian, &sys.default_init, 2.0, Scheme::rk4(1e-3)).map_err(err)?;
        for q in &sys.quantities {
            match q.kind {
                QuantityKind::Conserved => cons = cons.max(conserved_drift(&q.field, &traj).map_err(err)?),
                _ => diss = diss.max(dissipated_drift(&q.field, &sys.hamiltonian, &traj).map_err(err)?),
            }
        }
    }
    ok &= box_worst < 1e-6 && cons < 1e-6 && diss < 1e-5;
    Ok((
        ok,
        format!("box residual {box_worst:.1e} (1e-6), conserved drift {cons:.1e} (1e-6), dissipated drift {diss:.1e} (1e-5)"),
    ))
}

fn noether_round_trip() -> Outcome {
    let points = PhaseBox::default_for(1).sample(DEFAULT_SAMPLES, DEFAULT_SEED).map_err(err)?;
    let (mut eta, mut tau, mut rec) = (0.0f64, 0.0f64, 0.0f64);
    for (name, quantity) in [("falling_particle", "k"), ("damped_oscillator", "f")] {
        let sys = defaults(name)?;
        let f = &sys.quantity(quantity).map_err(err)?.field;
        let y = noether_symmetry(f, &sys.hamiltonian);
        for x in &points {
            let (e, t) = y.residual(x).map_err(err)?;
            eta = eta.max(e);
            tau = tau.max(t);
            rec = rec.max(y.reconstruction_residual(x).map_err(err)?.abs());
        }
    }
    Ok((
        eta < 1e-5 && tau < 1e-5 && rec < 1e-10,
        format!("eta {eta:.1e}, tau {tau:.1e} (1e-5); -eta(Y) vs f {rec:.1e} (1e-10); 200 points"),
    ))
}

fn involution() -> Outcome {
    let sys = defaults("free_particle_autonomous")?;
    let h = &sys.hamiltonian;
    let f1 = &sys.quantity("f1").map_err(err)?.field;
    let one = ScalarField::constant(1.0, 1);
    let (mut worst, mut cross) = (0.0f64, 0.0f64);
    for x in PhaseBox::default_for(1).sample(DEFAULT_SAMPLES, DEFAULT_SEED).map_err(err)? {
        let r = involution_residual(f1, &one, h, &x)
            .map_err(err)?
            .ok_or("H is not autonomous")?;
        worst = worst.max(r.abs());
        cross = cross.max((involution_expansion(f1, &one, h, &x).map_err(err)? - r).abs());
    }
    Ok((
        worst < 1e-8 && cross < 1e-10,
        format!("|{{H f1, H}}| {worst:.1e} (1e-8), expansion difference {cross:.1e} (1e-10)"),
    ))
}

fn reconstruction(check_action: bool) -> Outcome {
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for name in ["free_particle_tm", "free_particle_autonomous"] {
        let sys = defaults(name)?;
        let x0 = &sys.default_init;
        let scheme = Scheme::rk4(1e-3);
        let rec = reconstruct_t(sys.solution(), &sys.hamiltonian, &sys.default_lambda, 0.0, &x0.q, 1.0, scheme)
            .map_err(err)?;
        let value = if check_action {
            let sec = sys.solution().section_t(&sys.default_lambda).map_err(err)?;
            action_identity_check(&GeneratingFunction::new(sec.action), &sys.hamiltonian, &rec).map_err(err)?
        } else {
            let direct = integrate(&sys.hamiltonian, rec.first(), 1.0, scheme).map_err(err)?;
            rec.sup_distance(&direct).map_err(err)?
        };
        worst = worst.max(value);
        parts.push(format!("{name} {value:.1e}"));
    }
    let tol = if check_action { 1e-5 } else { 1e-6 };
    Ok((worst < tol, format!("{} (tol {tol:.0e})", parts.join(", "))))
}

fn coisotropy() -> Outcome {
    let params = Params::new();
    let field = |src: &str, n| ScalarField::parse(src, n, &params).map_err(err);
    let mut one_dim_exact = true;
    for src in ["q1*z + t", "exp(z)*sin(q1*t)", "q1^3 - z^2*t", "cosh(q1 + z)"] {
        let sec = SectionTZ::new(vec![field(src, 1)?]).map_err(err)?;
        for x in PhaseBox::default_for(1).sample(DEFAULT_SAMPLES, 3).map_err(err)? {
            one_dim_exact &= coisotropy_residual(&sec, x.t, &x.q, x.z).map_err(err)? == vec![vec![0.0]];
        }
    }
    let mut gradient = 0.0f64;
    for src in ["q1^2*q2 + sin(q1*t)*q2^3", "exp(q1 - q2)*cos(t)", "q1*q2*t + log(2 + q2^2)"] {
        let s = field(src, 2)?;
        let sec = SectionTZ::new(vec![s.partial(1), s.partial(2)]).map_err(err)?;
        for x in PhaseBox::default_for(2).sample(DEFAULT_SAMPLES, 5).map_err(err)? {
            let r = coisotropy_residual(&sec, x.t, &x.q, x.z).map_err(err)?;
            gradient = gradient.max(r[0][1].abs()).max(r[1][0].abs());
        }
    }
    let counter = SectionTZ::new(vec![field("q2", 2)?, field("0", 2)?]).map_err(err)?;
    let r = coisotropy_residual(&counter, 0.3, &[0.5, -0.5], 0.1).map_err(err)?;
    let detected = r[0][1].abs();
    Ok((
        one_dim_exact && gradient < 1e-10 && detected == 1.0,
        format!(
            "n=1 exact zero: {one_dim_exact}; n=2 gradient sections {gradient:.1e} (1e-10); counterexample {detected}"
        ),
    ))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(err)?;
    let runs: [&[&str]; 3] = [
        &["simulate", "--system", "damped_oscillator", "--t-end", "1"],
        &["bracket", "--f", "q1*z + sin(p1)", "--g", "exp(q1)*p1", "--seed", "11"],
        &["hj-check", "--system", "falling_particle", "--grid", "0:2:20,-2:2:20,-1:1:3"],
    ];
    let mut identical = true;
    for (k, args) in runs.iter().enumerate() {
        let mut seen = Vec::new();
        for rep in 0..2 {
            let csv = dir.path().join(format!("{k}-{rep}.csv"));
            let out = Command::new(env!("CARGO_BIN_EXE_cocontact"))
                .args(*args)
                .arg("--out")
                .arg(&csv)
                .output()
                .map_err(err)?;
            if !out.status.success() {
                return Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)));
            }
            seen.push((out.stdout, std::fs::read(&csv).map_err(err)?));
        }
        identical &= seen[0] == seen[1];
    }
    Ok((identical, "simulate, bracket, hj-check: CSV and JSON byte-identical across runs".into()))
}

fn main() {
    type Check = Box<dyn Fn() -> Outcome>;
    let criteria: Vec<(&str, u64, Check)> = vec![
        ("darboux bracket table", 1, Box::new(darboux_table)),
        ("energy law", 2, Box::new(energy_law)),
        ("autonomous particle closed forms", 1, Box::new(closed_forms)),
        ("hamilton-jacobi residuals", 2, Box::new(hj_residuals)),
        ("conserved/dissipated registry", 3, Box::new(registry)),
        ("noether round trip", 2, Box::new(noether_round_trip)),
        ("involution", 1, Box::new(involution)),
        ("reconstruction equivalence", 1, Box::new(|| reconstruction(false))),
        ("variational identity", 1, Box::new(|| reconstruction(true))),
        ("coisotropy", 1, Box::new(coisotropy)),
        ("determinism", 1, Box::new(determinism)),
    ];
    let mut failed = 0;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let in_time = elapsed < Duration::from_secs(*budget);
        let (pass, detail) = match result {
            Ok((ok, detail)) => (ok && in_time, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{} {:>2} {name}: {detail} [{:.3} s, budget {budget} s]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            elapsed.as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
