//! Acceptance criteria, one line each. Run with
//! `cargo test -p phi-debruijn --test acceptance -- --nocapture`.
//!
//! Oracles here are closed forms or plain composite Simpson sums written
//! independently of the library's quadrature.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use phi_debruijn::densities::{ChannelInput, Density};
use phi_debruijn::functionals::EntropicFunctional;
use phi_debruijn::identities::{
    check_identity, named_suite, pde_gate, pde_pairs, run_suite, CheckResult, IdentitySpec,
    SUITE_NAMES,
};
use phi_debruijn::measures::Channel;

// Pinned tolerances.
const C1_CLOSED_REL: f64 = 1e-6;
const C1_SIDES_REL: f64 = 1e-5;
const C1_RUNTIME: Duration = Duration::from_secs(1);
const C2_REL: f64 = 1e-5;
const C2_RUNTIME: Duration = Duration::from_secs(1);
const C3_REL: f64 = 1e-5;
const C4_REL: f64 = 1e-3;
const C4_DISPLAYED_RESIDUAL: f64 = 2.0;
const C5_REL: f64 = 1e-3;
const C5_DISPLAYED_RESIDUAL: f64 = 4.0;
const C6_ISO_REL: f64 = 1e-4;
const C6_HCDT_REL: f64 = 1e-3;
const C6_RUNTIME: Duration = Duration::from_secs(30);
const C7_GAUSS_REL: f64 = 1e-4;
const C7_BINARY_REL: f64 = 1e-3;
const C7_ORACLE_ABS: f64 = 1e-5;
const C7_QUOTED_MSE: f64 = 0.2547;
const C8_SELF_DIV_ABS: f64 = 1e-10;
const C8_JS_REL: f64 = 1e-6;
const C8_CURVATURE_REL: f64 = 0.02;
const C8_AFFINE: f64 = 1e-8;
const C9_RESIDUAL: f64 = 1e-10;
const C10_ROUNDING: f64 = 1e-12;
const SUITE_RUNTIME: Duration = Duration::from_secs(180);
const DISPLAYED: &str = "displayed_convention";

struct Line {
    id: &'static str,
    pass: bool,
    detail: String,
    /// Set when the criterion cannot be met by a correct implementation.
    unattainable: Option<&'static str>,
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + h * i as f64);
    }
    s * h / 3.0
}

fn normal(y: f64, m: f64, v: f64) -> f64 {
    (-(y - m) * (y - m) / (2.0 * v)).exp() / (2.0 * PI * v).sqrt()
}

fn sides(r: &CheckResult) -> (f64, f64) {
    (
        r.lhs_scalar().unwrap_or(f64::NAN),
        r.rhs_scalar().unwrap_or(f64::NAN),
    )
}

fn sh() -> EntropicFunctional {
    EntropicFunctional::shannon()
}

fn hcdt(a: f64) -> EntropicFunctional {
    EntropicFunctional::with_param("hcdt", a).unwrap()
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed())
}

fn c1() -> Line {
    let (results, dt) = timed(|| {
        [0.5, 1.0, 2.0].map(|t| {
            (
                t,
                check_identity(&IdentitySpec::entropy(Density::gaussian_1d(), sh(), t)),
            )
        })
    });
    let mut pass = dt < C1_RUNTIME;
    let mut worst = (0.0f64, 0.0f64);
    for (t, r) in &results {
        let (l, rh) = sides(r);
        let closed = 1.0 / (2.0 * t);
        worst.0 = worst.0.max(rel(l, closed)).max(rel(rh, closed));
        worst.1 = worst.1.max(r.rel_err.unwrap_or(f64::INFINITY));
        pass &= r.pass && rel(l, closed) <= C1_CLOSED_REL && rel(rh, closed) <= C1_CLOSED_REL;
        pass &= r.rel_err.is_some_and(|e| e <= C1_SIDES_REL);
    }
    Line {
        id: "1 gaussian scalar de Bruijn",
        pass,
        detail: format!(
            "θ∈{{.5,1,2}}: max rel vs 1/(2θ) {:.1e} (≤{C1_CLOSED_REL:.0e}), LHS/RHS {:.1e} (≤{C1_SIDES_REL:.0e}), {:.0} ms (<{} ms)",
            worst.0,
            worst.1,
            dt.as_secs_f64() * 1e3,
            C1_RUNTIME.as_millis()
        ),
        unattainable: None,
    }
}

fn c2() -> Line {
    let (r, dt) = timed(|| {
        check_identity(&IdentitySpec::entropy(
            Density::gaussian_1d(),
            hcdt(2.0),
            1.0,
        ))
    });
    let (l, rh) = sides(&r);
    let closed = 1.0 / (4.0 * PI.sqrt());
    let pass = r.pass && rel(l, closed) <= C2_REL && rel(rh, closed) <= C2_REL && dt < C2_RUNTIME;
    Line {
        id: "2 hcdt α=2 gaussian",
        pass,
        detail: format!(
            "LHS {l:.7} RHS {rh:.7} vs 1/(4√π) = {closed:.7}, rel {:.1e}/{:.1e} (≤{C2_REL:.0e}), {:.0} ms",
            rel(l, closed),
            rel(rh, closed),
            dt.as_secs_f64() * 1e3
        ),
        unattainable: None,
    }
}

fn c3() -> Line {
    let p1 = Density::gaussian_1d().with_offset(1.0).unwrap();
    let r = check_identity(&IdentitySpec::divergence(
        p1,
        Density::gaussian_1d(),
        sh(),
        1.0,
    ));
    let (l, rh) = sides(&r);
    let pass = r.pass && rel(l, -0.25) <= C3_REL && rel(rh, -0.25) <= C3_REL;
    Line {
        id: "3 divergence de Bruijn (KL pair)",
        pass,
        detail: format!(
            "dD/dθ {l:.8} −½J {rh:.8} vs −0.25, rel {:.1e}/{:.1e} (≤{C3_REL:.0e})",
            rel(l, -0.25),
            rel(rh, -0.25)
        ),
        unattainable: None,
    }
}

fn heavy(id: &'static str, p: Density, target: f64, tol: f64, residual: f64) -> Line {
    let r = check_identity(&IdentitySpec::entropy(p, sh(), 1.0));
    let (l, rh) = sides(&r);
    let note = r.note(DISPLAYED).map(|n| n.residual);
    let pass = r.pass
        && rel(l, target) <= tol
        && rel(rh, target) <= tol
        && note.is_some_and(|n| (n - residual).abs() <= 1e-2 * residual);
    Line {
        id,
        pass,
        detail: format!(
            "LHS {l:.5} RHS {rh:.5} vs {target}, rel {:.1e} (≤{tol:.0e}); displayed-sign residual {} (expected {residual}, i.e. that reading fails)",
            r.rel_err.unwrap_or(f64::NAN),
            note.map_or("missing".into(), |n| format!("{n:.4}"))
        ),
        unattainable: None,
    }
}

fn c6() -> Line {
    let ((iso, diag), dt) = timed(|| {
        let iso = check_identity(&IdentitySpec::entropy(
            Density::gaussian(&[0.0, 0.0], DMatrix::identity(2, 2)).unwrap(),
            sh(),
            1.0,
        ));
        let r = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 4.0]));
        let diag = check_identity(&IdentitySpec::entropy(
            Density::gaussian(&[0.0, 0.0], r).unwrap(),
            hcdt(2.0),
            1.0,
        ));
        (iso, diag)
    });
    let (l, rh) = sides(&iso);
    let (dl, drh) = sides(&diag);
    // H = 1 − ∫p² for α = 2; the oracle sums ∫p² on a tensor Simpson grid
    // and differentiates the closed form θ ↦ ∫p²(θ) ∝ 1/θ.
    let p2 = |x: f64, y: f64| (normal(x, 0.0, 1.0) * normal(y, 0.0, 4.0)).powi(2);
    let int_p2 = simpson(
        |x| simpson(|y| p2(x, y), -20.0, 20.0, 800),
        -12.0,
        12.0,
        800,
    );
    let h_oracle = 1.0 - int_p2;
    let dh_oracle = int_p2; // d/dθ (1 − c/θ) at θ = 1
    let h_lib = diag
        .diagnostics
        .values
        .get("H")
        .copied()
        .unwrap_or(f64::NAN);
    let pass = iso.pass
        && rel(l, 1.0) <= C6_ISO_REL
        && rel(rh, 1.0) <= C6_ISO_REL
        && diag.rel_err.is_some_and(|e| e <= C6_HCDT_REL)
        && rel(dl, dh_oracle) <= C6_HCDT_REL
        && rel(h_lib, h_oracle) <= 1e-8
        && dt < C6_RUNTIME;
    Line {
        id: "6 multivariate gaussian d=2",
        pass,
        detail: format!(
            "R=I shannon: {l:.6}/{rh:.6} vs 1 (≤{C6_ISO_REL:.0e}); R=diag(1,4) hcdt2: LHS {dl:.7} RHS {drh:.7} rel {:.1e} (≤{C6_HCDT_REL:.0e}), oracle dH/dθ {dh_oracle:.7}, H {h_lib:.9} vs {h_oracle:.9}; {:.2} s (<30 s)",
            diag.rel_err.unwrap_or(f64::NAN),
            dt.as_secs_f64()
        ),
        unattainable: None,
    }
}

/// Binary ±1 through `y = x + n`, `n ~ N(0,1)`: MMSE and I (nats).
fn binary_awgn_oracle() -> (f64, f64) {
    let out = |y: f64| 0.5 * (normal(y, 1.0, 1.0) + normal(y, -1.0, 1.0));
    let mmse = 1.0 - simpson(|y| y.tanh().powi(2) * out(y), -40.0, 40.0, 40_000);
    let info = 1.0
        - simpson(
            |z| (1.0 + z).cosh().ln() * normal(z, 0.0, 1.0),
            -40.0,
            40.0,
            40_000,
        );
    (mmse, info)
}

fn c7() -> Vec<Line> {
    let awgn = |x: ChannelInput| Channel::new(x, Density::gaussian_1d(), 1.0).unwrap();
    let g = check_identity(&IdentitySpec::guo(
        awgn(ChannelInput::gaussian(0.0, 1.0).unwrap()),
        sh(),
        vec![1.0],
    ));
    let b = check_identity(&IdentitySpec::guo(
        awgn(ChannelInput::binary(1.0)),
        sh(),
        vec![1.0],
    ));
    let (gl, grh) = sides(&g);
    let (bl, brh) = sides(&b);
    let v = &b.diagnostics.values;
    let (mse, info) = (v["mse_trace"], v["I"]);
    let (mse_o, info_o) = binary_awgn_oracle();
    let pass = g.pass
        && rel(gl, 0.5) <= C7_GAUSS_REL
        && rel(grh, 0.5) <= C7_GAUSS_REL
        && b.rel_err.is_some_and(|e| e <= C7_BINARY_REL)
        && (mse - mse_o).abs() <= C7_ORACLE_ABS
        && (info - info_o).abs() <= C7_ORACLE_ABS;
    let quoted = rel(mse, C7_QUOTED_MSE) <= 1e-3;
    vec![
        Line {
            id: "7 guo identity",
            pass,
            detail: format!(
                "gaussian input {gl:.6}/{grh:.6} vs 0.5 (≤{C7_GAUSS_REL:.0e}); binary LHS {bl:.6} RHS {brh:.6} rel {:.1e} (≤{C7_BINARY_REL:.0e}); MSE {mse:.7} vs oracle {mse_o:.7}, I {info:.7} vs oracle {info_o:.7} (±{C7_ORACLE_ABS:.0e})",
                b.rel_err.unwrap_or(f64::NAN)
            ),
            unattainable: None,
        },
        Line {
            id: "7b quoted binary MSE ≈ 0.2547",
            pass: quoted,
            detail: format!("computed {mse:.5}; the independent oracle gives {mse_o:.5}"),
            unattainable: Some(
                "the quoted value (and I ≈ 0.3689) match no channel convention: MMSE 0.2547 is reached at SNR 3.52, I 0.3689 at SNR 1.15; at SNR 1 both implementation and oracle give 0.44960 / 0.33683",
            ),
        },
    ]
}

fn c8() -> Line {
    let checks = named_suite("properties", &[0.5, 1.0, 2.0]).unwrap();
    let out = run_suite("properties", &checks);
    let kind = |k: &str| {
        out.results
            .iter()
            .filter(move |r| r.kind.starts_with(k))
            .collect::<Vec<_>>()
    };
    let all = |rs: &[&CheckResult]| !rs.is_empty() && rs.iter().all(|r| r.pass);
    let psd = kind("property:psd");
    let sym = psd.iter().all(|r| {
        r.diagnostics
            .values
            .get("asymmetry")
            .is_some_and(|a| *a == 0.0)
    });
    let selfd = kind("property:self_divergence");
    let selfd_ok = selfd
        .iter()
        .all(|r| r.abs_err.is_some_and(|e| e <= C8_SELF_DIV_ABS));
    let js = kind("property:jensen_fisher");
    let js_ok = js.iter().all(|r| r.rel_err.is_some_and(|e| e <= C8_JS_REL));
    let curv = kind("property:curvature_two_sided");
    let curv_ok = curv
        .iter()
        .all(|r| r.rel_err.is_some_and(|e| e <= C8_CURVATURE_REL));
    let affine = kind("property:affine_");
    let affine_ok = affine.iter().all(|r| {
        r.abs_err.is_some_and(|e| e <= C8_AFFINE) || r.rel_err.is_some_and(|e| e <= C8_AFFINE)
    });
    let quarter = affine
        .iter()
        .filter(|r| r.kind.ends_with("fisher_nonparam"))
        .map(|r| r.lhs_scalar().unwrap_or(f64::NAN))
        .fold(0.0f64, |a, v| a.max((v - 0.25).abs()));
    let pass = all(&psd)
        && sym
        && all(&selfd)
        && selfd_ok
        && all(&js)
        && js_ok
        && all(&curv)
        && curv_ok
        && all(&affine)
        && affine_ok
        && quarter <= C8_AFFINE;
    let worst_curv = curv.iter().filter_map(|r| r.rel_err).fold(0.0, f64::max);
    Line {
        id: "8 property suite",
        pass,
        detail: format!(
            "{} PSD symmetric={sym}; {} self-divergences (≤{C8_SELF_DIV_ABS:.0e}); jensen-fisher rel {:.1e} (≤{C8_JS_REL:.0e}); curvature Δ∈{{1e-1,1e-2,1e-3}} worst {:.2}% (≤2%); {} affine (≤{C8_AFFINE:.0e}), nonparam factor |·−¼| {quarter:.1e}",
            psd.len(),
            selfd.len(),
            js.iter().filter_map(|r| r.rel_err).fold(0.0, f64::max),
            worst_curv * 100.0,
            affine.len()
        ),
        unattainable: None,
    }
}

fn c9() -> Line {
    let pairs = pde_pairs().unwrap();
    let mut worst = (0.0f64, String::new());
    let mut pass = true;
    for (p, pde, theta) in &pairs {
        match pde_gate(p, pde, theta) {
            Ok(r) => {
                if r > worst.0 {
                    worst = (r, format!("{} / {}", p.label(), pde.name()));
                }
                pass &= r <= C9_RESIDUAL;
            }
            Err(e) => {
                pass = false;
                worst = (f64::INFINITY, format!("{}: {e}", p.label()));
            }
        }
    }
    Line {
        id: "9 PDE residual gates",
        pass,
        detail: format!(
            "{} density/PDE pairs, max residual {:.1e} (≤{C9_RESIDUAL:.0e}) at {}",
            pairs.len(),
            worst.0,
            worst.1
        ),
        unattainable: None,
    }
}

fn c10() -> Line {
    let checks = named_suite("appendix_bounds", &[0.5, 1.0, 2.0]).unwrap();
    let out = run_suite("appendix_bounds", &checks);
    let bounds: Vec<_> = out
        .results
        .iter()
        .filter(|r| r.kind.starts_with("property:bound"))
        .collect();
    let tails: Vec<_> = out
        .results
        .iter()
        .filter(|r| r.kind == "property:tail_decay")
        .collect();
    let dims: std::collections::BTreeSet<_> = bounds
        .iter()
        .filter_map(|r| r.family.split("d=").nth(1).and_then(|s| s.chars().next()))
        .collect();
    let pass = !bounds.is_empty()
        && bounds
            .iter()
            .all(|r| r.pass && r.rel_err.is_some_and(|e| e <= C10_ROUNDING))
        && dims.len() == 2
        && tails.len() == 4
        && tails.iter().all(|r| r.pass);
    // bounds are attained, so the excess is rounding only
    let excess = bounds
        .iter()
        .filter_map(|r| r.rel_err)
        .fold(0.0f64, f64::max);
    let verdicts: Vec<String> = tails
        .iter()
        .map(|r| {
            format!(
                "{} {}→{}",
                r.functional,
                r.family,
                r.lhs_scalar() == Some(1.0)
            )
        })
        .collect();
    Line {
        id: "10 domination bounds + tail decay",
        pass,
        detail: format!(
            "{} bound scans (d∈{{1,2}}, θ∈{{.5,1,2}}, 4 bounds), worst relative excess {excess:.1e} (≤{C10_ROUNDING:.0e}); tail decay: {}",
            bounds.len(),
            verdicts.join(", ")
        ),
        unattainable: None,
    }
}

fn full_suite() -> Line {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let ((total, failed), dt) = timed(|| {
        pool.install(|| {
            SUITE_NAMES.iter().fold((0, 0), |(t, f), name| {
                let out = run_suite(name, &named_suite(name, &[0.5, 1.0, 2.0]).unwrap());
                (
                    t + out.summary.total,
                    f + out.summary.total - out.summary.passed,
                )
            })
        })
    });
    Line {
        id: "S full default suite, single-threaded",
        pass: failed == 0 && dt < SUITE_RUNTIME,
        detail: format!(
            "{total} checks, {failed} not passing, {:.1} s (<{} s)",
            dt.as_secs_f64(),
            SUITE_RUNTIME.as_secs()
        ),
        unattainable: None,
    }
}

#[test]
fn acceptance() {
    println!();
    let mut lines = vec![c1(), c2(), c3()];
    lines.push(heavy(
        "4 cauchy identity",
        Density::cauchy_1d(),
        -1.0,
        C4_REL,
        C4_DISPLAYED_RESIDUAL,
    ));
    lines.push(heavy(
        "5 lévy identity",
        Density::levy(0.0).unwrap(),
        -2.0,
        C5_REL,
        C5_DISPLAYED_RESIDUAL,
    ));
    lines.push(c6());
    lines.extend(c7());
    lines.extend([c8(), c9(), c10(), full_suite()]);
    let mut blocking = Vec::new();
    for l in &lines {
        let tag = match (l.pass, l.unattainable) {
            (true, _) => "PASS",
            (false, None) => "FAIL",
            (false, Some(_)) => "FAIL (unattainable)",
        };
        println!("[{tag}] {}: {}", l.id, l.detail);
        if let (false, Some(why)) = (l.pass, l.unattainable) {
            println!("        reason: {why}");
        }
        if !l.pass && l.unattainable.is_none() {
            blocking.push(l.id);
        }
    }
    assert!(blocking.is_empty(), "failing criteria: {blocking:?}");
}
