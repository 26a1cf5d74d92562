//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Criteria listed in `KNOWN_FAILURES` are reported but do not fail the run.
//! The QGSO chaos check is slow; it runs unless `IVPSUITE_SKIP_SLOW` is set.

use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ivpsuite::analysis::{check_jacobian, check_products, convergence_order, lyapunov_spectrum, LyapunovOptions};
use ivpsuite::integrators::{
    integrate_adaptive, integrate_fixed_with, integrate_implicit, integrate_with_events, FixedMethod, IntegratorOptions,
    Record,
};
use ivpsuite::pde::arakawa;
use ivpsuite::pde::helmholtz::Multigrid;
use ivpsuite::pde::{Grid2D, Helmholtz, LinearSolverKind};
use ivpsuite::problems::bouncingball::reflect_velocity;
use ivpsuite::{build_preset, canonical, families, ParamValue, Parameters, Problem};

type Outcome = Result<String, String>;

const KNOWN_FAILURES: &[&str] = &["QGSO chaos qualitative check"];

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm2(&d) / norm2(a)
}

fn with(pairs: &[(&str, ParamValue)]) -> Parameters {
    pairs.iter().fold(Parameters::new(), |p, (k, v)| p.with(k, v.clone()))
}

fn lorenz63_spectrum() -> Result<(Vec<f64>, f64, f64), String> {
    let p = canonical("lorenz63").map_err(|e| e.to_string())?;
    let start = Instant::now();
    let r = lyapunov_spectrum(&p, &LyapunovOptions::default()).map_err(|e| e.to_string())?;
    Ok((r.exponents, r.fractal_dimension, start.elapsed().as_secs_f64()))
}

fn lyapunov_reproduction(les: &[f64], dim: f64, secs: f64) -> Outcome {
    let reference = [0.9102, 0.0027, -14.5891];
    let tol = [0.02, 0.02, 0.3];
    let ok = les.len() == 3
        && (0..3).all(|i| (les[i] - reference[i]).abs() <= tol[i])
        && (dim - 2.0626).abs() <= 0.02
        && secs <= 300.0;
    check(ok, format!("exponents {les:.4?}, dimension {dim:.4}, {secs:.1} s"))
}

fn trace_identity(les: &[f64]) -> Outcome {
    let p = canonical("lorenz63").map_err(|e| e.to_string())?;
    let q = p.parameters();
    let s = |k| q.scalar(k).unwrap();
    let trace = -(s("sigma") + 1.0 + s("beta"));
    let sum: f64 = les.iter().sum();
    let rel = ((sum - trace) / trace).abs();
    check(rel <= 0.005, format!("sum {sum:.4} vs {trace:.4}, relative {rel:.2e}"))
}

fn convergence_orders() -> Outcome {
    let p = canonical("linear").map_err(|e| e.to_string())?;
    let rk4 = convergence_order(&p, FixedMethod::Rk4, &[8, 16, 32, 64]).map_err(|e| e.to_string())?;
    let euler = convergence_order(&p, FixedMethod::Euler, &[128, 256, 512, 1024, 2048]).map_err(|e| e.to_string())?;
    let opts = IntegratorOptions::with_tolerances(1e-10, 1e-10);
    let traj = integrate_adaptive(&p, &opts).map_err(|e| e.to_string())?;
    let exact = p.exact_solution(p.time_span().1).map_err(|e| e.to_string())?;
    let err = max_abs(&[traj.last_state()[0] - exact[0]]);
    let ok = (rk4.order - 4.0).abs() <= 0.2 && (euler.order - 1.0).abs() <= 0.1 && err <= 1e-8;
    check(ok, format!("rk4 {:.3}, euler {:.3}, adaptive endpoint error {err:.2e}", rk4.order, euler.order))
}

fn derivative_oracle() -> Outcome {
    let mut problems: Vec<Problem> = Vec::new();
    for family in families() {
        match family.name {
            "qgso" => {}
            "grayscott" => problems.push(
                build_preset("grayscott", "Canonical", &with(&[("n", ParamValue::Scalar(16.0))]))
                    .map_err(|e| e.to_string())?,
            ),
            name => {
                for preset in family.presets {
                    problems.push(build_preset(name, preset.name, &Parameters::new()).map_err(|e| e.to_string())?);
                }
            }
        }
    }
    let mut worst: (f64, String) = (0.0, String::new());
    let mut checked = 0;
    for p in problems.iter().filter(|p| p.rhs().has_jacobian()) {
        let err = check_jacobian(p, 50, 7).map_err(|e| format!("{}/{}: {e}", p.name(), p.preset()))?;
        checked += 1;
        if err >= worst.0 {
            worst = (err, format!("{}/{}", p.name(), p.preset()));
        }
    }
    let qgso = build_preset("qgso", "Canonical", &with(&[("n", ParamValue::Scalar(31.0))])).map_err(|e| e.to_string())?;
    let products = check_products(&qgso, 5, 11).map_err(|e| e.to_string())?;
    let ok = worst.0 <= 1e-6 && products.adjoint_error <= 1e-10;
    check(
        ok,
        format!(
            "{checked} presets, worst jacobian error {:.2e} ({}), qgso 31x31 adjoint {:.2e}, jvp {:.2e}",
            worst.0, worst.1, products.adjoint_error, products.jvp_error
        ),
    )
}

fn splitting_identity() -> Outcome {
    let p = canonical("brusselator").map_err(|e| e.to_string())?;
    let rhs = p.rhs();
    let (lin, non) = (rhs.partition("linear").ok_or("no linear part")?, rhs.partition("nonlinear").ok_or("no nonlinear part")?);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let y = p.sample_state(&mut rng);
        let t = rng.gen_range(p.time_span().0..p.time_span().1);
        let f = rhs.eval(t, &y).map_err(|e| e.to_string())?;
        let (a, b) = (lin.eval(t, &y).map_err(|e| e.to_string())?, non.eval(t, &y).map_err(|e| e.to_string())?);
        let d: Vec<f64> = (0..f.len()).map(|i| a[i] + b[i] - f[i]).collect();
        worst = worst.max(max_abs(&d) / max_abs(&f).max(f64::MIN_POSITIVE));
    }
    check(worst <= 8.0 * f64::EPSILON, format!("worst relative mismatch {worst:.2e}"))
}

fn lorenz96_fixed_point() -> Outcome {
    let p = canonical("lorenz96").map_err(|e| e.to_string())?;
    let f = p.f(0.0, &vec![8.0; p.num_vars()]).map_err(|e| e.to_string())?;
    check(p.num_vars() == 40 && f.iter().all(|&v| v == 0.0), format!("N = {}, max |f| = {:e}", p.num_vars(), max_abs(&f)))
}

fn hires_first_integral() -> Outcome {
    let p = canonical("hires").map_err(|e| e.to_string())?;
    let opts = IntegratorOptions::with_tolerances(1e-8, 1e-8);
    let traj = integrate_implicit(&p, &opts).map_err(|e| e.to_string())?;
    let drift = traj.states.iter().map(|y| (y[6] + y[7] - 0.0057).abs()).fold(0.0, f64::max);
    let oracle = integrate_fixed_with(&p, 10_000_000, FixedMethod::Rk4, false).map_err(|e| e.to_string())?;
    let (a, b) = (traj.last_state(), oracle.last_state());
    let rel = (0..a.len()).map(|i| (a[i] - b[i]).abs() / b[i].abs()).fold(0.0, f64::max);
    check(drift <= 1e-9 && rel <= 1e-5, format!("y7+y8 drift {drift:.2e}, endpoint vs rk4 oracle {rel:.2e}"))
}

/// Direct average of Arakawa's three second-order forms at interior point `(ix, iy)`.
fn arakawa_stencil(g: &Grid2D, a: &[f64], b: &[f64], ix: usize, iy: usize) -> f64 {
    let at = |f: &[f64], dx: isize, dy: isize| -> f64 {
        let (x, y) = (ix as isize + dx, iy as isize + dy);
        if x < 0 || y < 0 || x >= g.nx as isize || y >= g.ny as isize {
            0.0
        } else {
            f[g.index(x as usize, y as usize)]
        }
    };
    let pp = (at(a, 1, 0) - at(a, -1, 0)) * (at(b, 0, 1) - at(b, 0, -1)) - (at(a, 0, 1) - at(a, 0, -1)) * (at(b, 1, 0) - at(b, -1, 0));
    let px = at(a, 1, 0) * (at(b, 1, 1) - at(b, 1, -1)) - at(a, -1, 0) * (at(b, -1, 1) - at(b, -1, -1))
        - at(a, 0, 1) * (at(b, 1, 1) - at(b, -1, 1))
        + at(a, 0, -1) * (at(b, 1, -1) - at(b, -1, -1));
    let xp = at(b, 0, 1) * (at(a, 1, 1) - at(a, -1, 1)) - at(b, 0, -1) * (at(a, 1, -1) - at(a, -1, -1))
        - at(b, 1, 0) * (at(a, 1, 1) - at(a, 1, -1))
        + at(b, -1, 0) * (at(a, -1, 1) - at(a, -1, -1));
    (pp + px + xp) / (12.0 * g.hx * g.hy)
}

fn arakawa_properties() -> Outcome {
    let n = 15;
    let g = Grid2D::dirichlet(n, 1.0);
    // the same fields inside a grid one point wider, zero on its outer ring
    let wide = Grid2D::dirichlet(n + 2, (n + 3) as f64 / (n + 1) as f64);
    let embed = |f: &[f64]| {
        let mut w = vec![0.0; wide.len()];
        for ix in 0..n {
            for iy in 0..n {
                w[wide.index(ix + 1, iy + 1)] = f[g.index(ix, iy)];
            }
        }
        w
    };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut field = || (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>();
    let (mut worst_sum, mut worst_stencil) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let (a, b) = (field(), field());
        if !arakawa::jacobian(&g, &a, &a).iter().all(|&v| v == 0.0) {
            return Err("J(a, a) is not exactly zero".into());
        }
        let (ab, ba) = (arakawa::jacobian(&g, &a, &b), arakawa::jacobian(&g, &b, &a));
        if !ab.iter().zip(&ba).all(|(x, y)| *x == -*y) {
            return Err("J(a, b) != -J(b, a)".into());
        }
        for ix in 0..n {
            for iy in 0..n {
                let direct = arakawa_stencil(&g, &a, &b, ix, iy);
                worst_stencil = worst_stencil.max((ab[g.index(ix, iy)] - direct).abs() / max_abs(&ab));
            }
        }
        let jw = arakawa::jacobian(&wide, &embed(&a), &embed(&b));
        let scale: f64 = jw.iter().map(|v| v.abs()).sum();
        worst_sum = worst_sum.max(jw.iter().sum::<f64>().abs() / (64.0 * f64::EPSILON * scale));
    }
    check(
        worst_sum <= 1.0 && worst_stencil <= 1e-14,
        format!("exact zero and antisymmetry, stencil oracle {worst_stencil:.2e}, domain sum at {worst_sum:.3} of the 64 eps bound"),
    )
}

fn helmholtz_agreement() -> Outcome {
    let g = Grid2D::dirichlet(63, 1.0);
    let f = 1600.0;
    let solvers: Vec<Helmholtz> = LinearSolverKind::NAMES
        .iter()
        .map(|k| Helmholtz::new(g, f, 2, LinearSolverKind::parse(k).unwrap(), 1e-8))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    for _ in 0..3 {
        let r: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let xs: Vec<Vec<f64>> = solvers.iter().map(|s| s.solve(&r)).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
        for i in 0..xs.len() {
            for j in i + 1..xs.len() {
                worst = worst.max(rel_diff(&xs[i], &xs[j]));
            }
        }
    }
    let mg = Multigrid::new(g, f, 2).map_err(|e| e.to_string())?;
    let b: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut x = vec![0.0; g.len()];
    let mut worst_rate = 0.0f64;
    let mut r = mg.residual_norm(&x, &b);
    for _ in 0..8 {
        mg.v_cycle(&mut x, &b);
        let next = mg.residual_norm(&x, &b);
        worst_rate = worst_rate.max(next / r);
        r = next;
    }
    check(worst <= 1e-6 && worst_rate <= 0.2, format!("pairwise {worst:.2e}, worst V-cycle reduction {worst_rate:.3}"))
}

fn qgso_chaos() -> Outcome {
    let endpoint = |solver: &str, tf: f64| -> Result<Vec<f64>, String> {
        let o = with(&[("linearsolver", ParamValue::Text(solver.into())), ("linearsolvertol", ParamValue::Scalar(1e-8))]);
        let mut p = build_preset("qgso", "GC-small", &o).map_err(|e| e.to_string())?;
        p.set_time_span(0.0, tf).map_err(|e| e.to_string())?;
        let opts = IntegratorOptions { record: Record::Endpoints, ..Default::default() };
        Ok(integrate_adaptive(&p, &opts).map_err(|e| e.to_string())?.last_state().to_vec())
    };
    let start = Instant::now();
    let early = rel_diff(&endpoint("cholesky", 1.0)?, &endpoint("multigrid", 1.0)?);
    let late = rel_diff(&endpoint("cholesky", 5000.0)?, &endpoint("multigrid", 5000.0)?);
    let secs = start.elapsed().as_secs_f64();
    check(
        early <= 1e-5 && late >= 0.1 && secs <= 1800.0,
        format!("cholesky vs multigrid: {early:.2e} at t=1, {late:.2e} at t=5000, {secs:.0} s"),
    )
}

fn event_mechanics() -> Outcome {
    let p = canonical("bouncingball").map_err(|e| e.to_string())?;
    let traj = integrate_with_events(&p, &IntegratorOptions::default()).map_err(|e| e.to_string())?;
    let ev = traj.events.first().ok_or("no bounce")?;
    let t_err = (ev.time - (2.0f64 / 9.8).sqrt()).abs();
    let speed = |y: &[f64]| (y[2] * y[2] + y[3] * y[3]).sqrt();
    let speed_err = (speed(&ev.post) - speed(&ev.pre)).abs();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut involution = 0.0f64;
    for _ in 0..1000 {
        let (s, vx, vy) = (rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
        let (a, b) = reflect_velocity(s, vx, vy).map_err(|e| e.to_string())?;
        let (c, d) = reflect_velocity(s, a, b).map_err(|e| e.to_string())?;
        involution = involution.max((c - vx).abs().max((d - vy).abs()) / f64::hypot(vx, vy));
    }
    check(
        t_err <= 1e-6 && speed_err <= 1e-9 && involution <= 1e-14,
        format!("bounce time error {t_err:.2e}, speed change {speed_err:.2e}, involution {involution:.2e}"),
    )
}

fn validation_contract() -> Outcome {
    let msg = |v: ParamValue| match build_preset("lorenz63", "Canonical", &with(&[("rho", v)])) {
        Ok(_) => String::new(),
        Err(e) => e.to_string(),
    };
    let (neg, vec) = (msg(ParamValue::Scalar(-1.0)), msg(ParamValue::Vector(vec![1.0, 1.0])));
    check(
        neg.contains("The field rho does not satisfy nonnegative") && vec.contains("does not satisfy scalar"),
        format!("{neg:?}; {vec:?}"),
    )
}

fn bpe_linear_modes() -> Outcome {
    let n = 15;
    let o = with(&[("n", ParamValue::Scalar(n as f64)), ("alpha", ParamValue::Scalar(0.0)), ("beta2", ParamValue::Scalar(0.0))]);
    let mut p = build_preset("bpe", "Canonical", &o).map_err(|e| e.to_string())?;
    let beta1 = p.parameters().scalar("beta1").map_err(|e| e.to_string())?;
    let model = ivpsuite::problems::bpe::Bpe::from_parameters(p.parameters()).map_err(|e| e.to_string())?;
    let lap = model.laplacian();
    let dense = DMatrix::from_fn(n, n, |i, j| {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        lap.mul_vec(&e)[i]
    });
    let eig = dense.symmetric_eigen();
    let mut worst = 0.0f64;
    for k in 0..n {
        let lambda = eig.eigenvalues[k];
        let v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
        let omega2 = -lambda / (1.0 - beta1 * lambda);
        // a quarter period, where the displacement crosses zero
        let quarter = 0.5 * std::f64::consts::PI / omega2.sqrt();
        let mut y0 = v.clone();
        y0.extend(vec![0.0; n]);
        p.set_y0(y0).map_err(|e| e.to_string())?;
        p.set_time_span(0.0, quarter).map_err(|e| e.to_string())?;
        let opts = IntegratorOptions { record: Record::Endpoints, ..IntegratorOptions::with_tolerances(1e-14, 1e-13) };
        let y = integrate_adaptive(&p, &opts).map_err(|e| e.to_string())?.last_state().to_vec();
        let c: f64 = (0..n).map(|i| v[i] * y[i]).sum();
        let ct: f64 = (0..n).map(|i| v[i] * y[n + i]).sum();
        let simulated = ct * ct / (1.0 - c * c);
        worst = worst.max(((simulated - omega2) / omega2).abs());
    }
    check(worst <= 1e-8, format!("{n} modes, worst relative omega^2 error {worst:.2e}"))
}

fn main() {
    let skip_slow = std::env::var_os("IVPSUITE_SKIP_SLOW").is_some();
    let spectrum = lorenz63_spectrum();
    let from_spectrum = |f: &dyn Fn(&[f64], f64, f64) -> Outcome| match &spectrum {
        Ok((les, dim, secs)) => f(les, *dim, *secs),
        Err(e) => Err(e.clone()),
    };
    let mut results: Vec<(&str, Option<Outcome>)> = vec![
        ("Lyapunov reproduction", Some(from_spectrum(&lyapunov_reproduction))),
        ("Trace identity", Some(from_spectrum(&|les, _, _| trace_identity(les)))),
        ("Convergence orders", Some(convergence_orders())),
        ("Derivative oracle", Some(derivative_oracle())),
        ("Splitting identity", Some(splitting_identity())),
        ("Lorenz '96 fixed point", Some(lorenz96_fixed_point())),
        ("HIRES first integral", Some(hires_first_integral())),
        ("Arakawa properties", Some(arakawa_properties())),
        ("Helmholtz solver agreement", Some(helmholtz_agreement())),
    ];
    results.push(("QGSO chaos qualitative check", if skip_slow { None } else { Some(qgso_chaos()) }));
    results.extend([
        ("Event mechanics", Some(event_mechanics())),
        ("Validation contract", Some(validation_contract())),
        ("BPE linear-mode check", Some(bpe_linear_modes())),
    ]);

    let mut unexpected = 0;
    for (name, outcome) in &results {
        match outcome {
            None => println!("SKIP {name}: slow (IVPSUITE_SKIP_SLOW set)"),
            Some(Ok(detail)) => println!("PASS {name}: {detail}"),
            Some(Err(detail)) if KNOWN_FAILURES.contains(name) => println!("FAIL {name}: {detail} (known)"),
            Some(Err(detail)) => {
                unexpected += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    if unexpected > 0 {
        std::process::exit(1);
    }
}
