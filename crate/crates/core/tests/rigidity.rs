use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use cs_billiards::error::Error;
use cs_billiards::fourcurve::{d_profile, table_from_d, DProfile, DEFAULT_PROFILE_TOLERANCE};
use cs_billiards::geometry::Table;
use cs_billiards::measure::{estimate_m_measure_sweep, measure_of_b, Sampler};
use cs_billiards::quadrature::{GaussLegendre, Quadrature};
use cs_billiards::rigidity::{
    bundle_from_jet, cauchy_schwarz, check_integral_identities, f2, f_and_derivatives,
    integral_i, integral_i_2d, integrand_bundle, lemma_brackets_check, u_direct, u_parts,
    uh_chain, verify_main_theorem, wirtinger_check, Status, Tolerances,
};

fn ellipse(a: f64) -> (Table, DProfile) {
    let t = Table::ellipse(a, 1.0).unwrap();
    let p = d_profile(&t, DEFAULT_PROFILE_TOLERANCE).unwrap();
    (t, p)
}

fn constructed(eps: f64, mode: u32) -> (Table, DProfile) {
    let p = DProfile::perturbed_quarter(1.0, eps, mode).unwrap();
    let t = table_from_d(p.samples(), 1.0).unwrap();
    (t, p)
}

fn circle() -> (Table, DProfile) {
    let t = Table::circle(1.0).unwrap();
    let p = d_profile(&t, DEFAULT_PROFILE_TOLERANCE).unwrap();
    (t, p)
}

fn tables() -> Vec<(Table, DProfile)> {
    vec![
        circle(),
        ellipse(1.05),
        ellipse(1.25),
        ellipse(1.6),
        constructed(0.02, 1),
        constructed(0.05, 1),
        constructed(0.01, 3),
    ]
}

/// Composite Gauss rule used as an independent integrator.
fn integrate(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let g = GaussLegendre::new(20);
    let panels = 256;
    let w = (b - a) / panels as f64;
    (0..panels).map(|k| g.integrate(a + k as f64 * w, a + (k + 1) as f64 * w, &f)).sum()
}

#[test]
fn circle_integrals_vanish() {
    let (t, p) = circle();
    assert!(integral_i(&t, &p).abs() < 1e-12);
    assert!(integral_i_2d(&t, &p).abs() < 1e-12);
    let b = integrand_bundle(&p, 0.7);
    assert_eq!(b.u, 0.0);
    assert!(b.v.iter().chain(&b.w).chain(&b.x).all(|x| *x == 0.0));
    assert_eq!(b.y, 0.0);
    assert!((b.f - (FRAC_PI_4 + 0.5)).abs() < 1e-15);
    let r = check_integral_identities(&p, &t.quadrature());
    assert!(r.max() < 1e-14 && r.integral_u.abs() < 1e-14);
}

#[test]
fn one_and_two_dimensional_integrals_agree() {
    for (t, p) in tables() {
        let (i1, i2) = (integral_i(&t, &p), integral_i_2d(&t, &p));
        assert!((i1 - i2).abs() < 1e-8, "{i1} vs {i2}");
        // Raw form ∫∫_B h'' sin δ ρ sin δ dδ dψ with its own integrator.
        let raw = integrate(0.0, 2.0 * PI, |psi| {
            let (h, _, h2) = t.support_eval(psi);
            let d = p.d(psi);
            GaussLegendre::new(30).integrate(d, PI - d, |delta| h2 * (h + h2) * delta.sin().powi(2))
        });
        assert!((i1 - raw).abs() < 1e-8);
    }
}

#[test]
fn integral_dominates_defect() {
    for (t, p) in tables() {
        let defect = t.metrics().defect;
        let i = integral_i(&t, &p);
        assert!(i >= 0.375 * defect - 1e-8, "I = {i}, defect = {defect}");
        if defect > 1e-6 {
            assert!(i - 0.375 * defect > 0.0);
        }
    }
}

#[test]
fn integral_is_r_squared_times_u() {
    for (t, p) in tables() {
        let u = integrate(0.0, 2.0 * PI, |psi| {
            let [d, d1, d2] = p.eval(psi);
            u_direct(d, d1, d2)
        });
        assert!((integral_i(&t, &p) - p.radius().powi(2) * u).abs() < 1e-8);
        let half = check_integral_identities(&p, &t.quadrature()).integral_u;
        assert!(half >= 3.0 / (16.0 * p.radius().powi(2)) * t.metrics().defect - 1e-8);
    }
}

#[test]
fn proof_identities_hold_on_three_tables() {
    for (t, p) in [circle(), ellipse(1.25), constructed(0.05, 1)] {
        let r = check_integral_identities(&p, &t.quadrature());
        assert!(r.symmetrized < 1e-8 && r.by_parts < 1e-8 && r.regrouped < 1e-8, "{r:?}");
        assert!(r.max() < 1e-8, "{r:?}");
        let w = wirtinger_check(&p, &t.quadrature());
        assert!(w.functional >= -1e-10 && w.mean_y.abs() < 1e-10, "{w:?}");
        assert!((w.functional - w.integral_g).abs() < 1e-8);
        assert!(uh_chain(&t, &p, &t.quadrature()).holds(1e-8));
    }
}

#[test]
fn split_terms_match_direct_integrand() {
    for k in 0..200 {
        let (d, d1, d2) = (0.01 + 1.55 * k as f64 / 200.0, 0.3 - 0.003 * k as f64, (0.1 * k as f64).sin());
        let parts = u_parts(d, d1, d2);
        assert!((parts.iter().sum::<f64>() - u_direct(d, d1, d2)).abs() < 1e-13);
        let b = bundle_from_jet(d, d1, d2);
        assert!((b.x[0] - b.w[0]).abs() < 1e-15);
        assert!((b.x[1] - b.w[1] - b.w[3]).abs() < 1e-13);
        assert!((b.x[2] - b.w[2] - b.w[4]).abs() < 1e-13);
    }
}

#[test]
fn hat_terms_are_quarter_turn_shifts() {
    for (_, p) in [ellipse(1.25), constructed(0.05, 1)] {
        for k in 0..50 {
            let psi = 0.11 * k as f64;
            let here = integrand_bundle(&p, psi);
            let there = integrand_bundle(&p, psi + FRAC_PI_2);
            for j in 0..5 {
                assert!((here.u_hat[j] - there.u_parts[j]).abs() < 1e-8, "j = {j} at {psi}");
            }
        }
    }
}

#[test]
fn f_derivatives_match_finite_differences() {
    let e = 1e-5;
    for k in 1..50 {
        let d = FRAC_PI_2 * k as f64 / 50.0;
        let [_, df, ddf] = f_and_derivatives(d);
        let f = |x: f64| FRAC_PI_4 + (FRAC_PI_4 - x) * (2.0 * x).cos() + 0.5 * (2.0 * x).sin();
        assert!((df - (f(d + e) - f(d - e)) / (2.0 * e)).abs() < 1e-9);
        assert!((ddf - (f(d + e) - 2.0 * f(d) + f(d - e)) / (e * e)).abs() < 1e-5);
    }
    let [f, df, ddf] = f_and_derivatives(FRAC_PI_4);
    assert_eq!(df, 0.0);
    let lhs = f * (f2(FRAC_PI_4) + ddf / 3.0 - df * df / (4.0 * f));
    assert!((lhs - (FRAC_PI_4 + 0.5).powi(2)).abs() < 1e-14);
    assert!((3.0 * f + 1.0 - (0.75 * PI + 2.5)).abs() < 1e-14);
    let [f0, _, _] = f_and_derivatives(0.0);
    assert!((3.0 * f0 - 1.5 * PI).abs() < 1e-8);
}

#[test]
fn bracket_sweep() {
    let r = lemma_brackets_check(10_000);
    assert!(r.holds(), "{r:?}");
    assert!(r.min_first_margin < 1e-5);
    assert!(r.min_f >= 0.5 + FRAC_PI_4 - 1e-15 && r.max_f < FRAC_PI_2);
}

#[test]
fn wirtinger_scaling() {
    let value = |eps: f64, mode: u32| {
        let (t, p) = constructed(eps, mode);
        wirtinger_check(&p, &t.quadrature()).functional
    };
    // Mode 3: the leading term of Y is cos 6ψ, off the kernel of the
    // functional, so it is quadratic in ε.
    let (a, b) = (value(0.01, 3), value(0.005, 3));
    assert!(a > 0.0 && b > 0.0);
    assert!((b / a - 0.25).abs() < 0.01, "{}", b / a);
    // Mode 1: the leading term cos 2ψ lies in the kernel and the first
    // surviving order is ε⁶.
    let (a, b) = (value(0.05, 1), value(0.025, 1));
    assert!(a > 0.0 && b > 0.0);
    assert!((b / a - 1.0 / 64.0).abs() < 0.002, "{}", b / a);
}

#[test]
fn cauchy_schwarz_closing_step() {
    for (t, _) in tables() {
        let c = cauchy_schwarz(&t);
        assert!(c.defect <= c.bound + 1e-12);
    }
    let c = cauchy_schwarz(&Table::circle(2.0).unwrap());
    assert!(c.defect.abs() < 1e-12 && c.bound.abs() < 1e-12);
}

#[test]
fn defect_free_characterization() {
    for (t, p) in tables() {
        let defect = t.metrics().defect;
        let flat = p.samples().iter().all(|d| (d - FRAC_PI_4).abs() < 1e-9);
        let i = integral_i(&t, &p);
        assert_eq!(defect < 1e-12, i < 1e-10);
        assert_eq!(defect < 1e-12, flat);
    }
    let (t, p) = ellipse(1.0 + 1e-3);
    assert!(t.metrics().defect > 1e-12 && integral_i(&t, &p) > 1e-10);
}

#[test]
fn verification_report() {
    let tol = Tolerances::default();
    let (t, p) = circle();
    let sweep = estimate_m_measure_sweep(&t, &p, &[20], &Sampler::Stratified { samples: 400, seed: 2 });
    let r = verify_main_theorem(&t, &p, sweep.mu_b, &sweep.estimates, &tol).unwrap();
    assert_eq!(r.flags.e, Status::Pass);
    assert!(!r.flags.any_violated());
    assert!(r.integral_i.abs() < 1e-10 && r.main_lhs.abs() < 1e-10);

    let (t, p) = ellipse(1.25);
    let sweep = estimate_m_measure_sweep(&t, &p, &[16, 32], &Sampler::Stratified { samples: 1500, seed: 4 });
    let r = verify_main_theorem(&t, &p, sweep.mu_b, &sweep.estimates, &tol).unwrap();
    assert_eq!((r.flags.a, r.flags.b), (Status::Pass, Status::Pass));
    assert!(matches!(r.flags.c, Status::Certified | Status::Consistent));
    assert_eq!(r.flags.d, Status::Pass);
    assert_eq!(r.flags.e, Status::NotApplicable);
    assert!(r.dual_quadrature_residual < 1e-8 && r.u_representation_residual < 1e-8);
    assert!((r.beta - 0.64).abs() < 1e-9);
    assert!((r.mu_b.value - measure_of_b(&t, &p).value).abs() == 0.0);

    let no_mc = verify_main_theorem(&t, &p, sweep.mu_b, &[], &tol).unwrap();
    assert_eq!((no_mc.flags.c, no_mc.flags.d), (Status::NotApplicable, Status::NotApplicable));

    let (_, wrong) = circle();
    let err = verify_main_theorem(&t, &wrong, sweep.mu_b, &[], &tol).unwrap_err();
    assert!(matches!(err, Error::InconsistentInputs { .. }));
}

#[test]
fn refined_quadrature_leaves_identities_unchanged() {
    let (_, p) = constructed(0.05, 1);
    let q = Quadrature::default();
    let (a, b) = (check_integral_identities(&p, &q), check_integral_identities(&p, &q.refined()));
    assert!((a.integral_u - b.integral_u).abs() < 1e-12);
}
