//! The integral `I`, the integrands used to bound it from below, and the
//! inequality chain relating the isoperimetric defect to `μ(Δ_B)`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourcurve::DProfile;
use crate::geometry::{Table, TWO_PI};
use crate::measure::{HorizonEstimate, MeasureEstimate};
use crate::quadrature::{GaussLegendre, Quadrature};

const D_CLAMP: f64 = 1e-9;

/// `f(d) = π/4 + (π/4 − d) cos 2d + ½ sin 2d` and its derivatives in `d`.
pub fn f_and_derivatives(d: f64) -> [f64; 3] {
    let d = d.clamp(D_CLAMP, FRAC_PI_2 - D_CLAMP);
    let (s, c) = (2.0 * d).sin_cos();
    let e = FRAC_PI_4 - d;
    [FRAC_PI_4 + e * c + 0.5 * s, -2.0 * e * s, -4.0 * e * c + 2.0 * s]
}

/// `f₂(d) = π/4 − ⅓(d − π/4) cos 2d − ⅙ sin 2d`.
pub fn f2(d: f64) -> f64 {
    let (s, c) = (2.0 * d).sin_cos();
    FRAC_PI_4 - (d - FRAC_PI_4) * c / 3.0 - s / 6.0
}

/// `f₃(d) = sin 2d − f(d)`.
pub fn f3(d: f64) -> f64 {
    (2.0 * d).sin() - f_and_derivatives(d)[0]
}

/// Every integrand of the lower bound for `∫U`, at one `ψ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegrandBundle {
    pub u: f64,
    pub u_parts: [f64; 5],
    pub u_hat: [f64; 5],
    pub v: [f64; 5],
    pub w: [f64; 5],
    pub x: [f64; 3],
    pub f: f64,
    pub df: f64,
    pub ddf: f64,
    pub f2: f64,
    pub f3: f64,
    pub y: f64,
    pub dy: f64,
    /// `f d''² − f'' d'⁴/3 + f'² d'⁴/(4f) − 4 f d'²`.
    pub g: f64,
}

/// `U₁ … U₅` for given `(d, d', d'')`.
pub fn u_parts(d: f64, d1: f64, d2: f64) -> [f64; 5] {
    let (s, c) = d.sin_cos();
    let m = FRAC_PI_2 - d + 0.5 * (2.0 * d).sin();
    let q = d1 * d1;
    [
        d2 * d2 * c * c * m,
        -2.0 * d2 * q * s * c * m,
        d2 * s * c * m,
        q * q * s * s * m,
        -q * s * s * m,
    ]
}

/// `U = (sin d − sin d d'² + cos d d'')(−sin d d'² + cos d d'')(π/2 − d + ½ sin 2d)`.
pub fn u_direct(d: f64, d1: f64, d2: f64) -> f64 {
    let (s, c) = d.sin_cos();
    let q = d1 * d1;
    (s - s * q + c * d2) * (-s * q + c * d2) * (FRAC_PI_2 - d + 0.5 * (2.0 * d).sin())
}

pub fn integrand_bundle(profile: &DProfile, psi: f64) -> IntegrandBundle {
    let [d, d1, d2] = profile.eval(psi);
    bundle_from_jet(d, d1, d2)
}

/// [`integrand_bundle`] for an explicit jet `(d, d', d'')`.
pub fn bundle_from_jet(d: f64, d1: f64, d2: f64) -> IntegrandBundle {
    let u_parts = u_parts(d, d1, d2);
    let u_hat = self::u_parts(FRAC_PI_2 - d, -d1, -d2);
    let v: [f64; 5] = std::array::from_fn(|j| u_parts[j] + u_hat[j]);
    let (s2, c2) = (2.0 * d).sin_cos();
    let e = d - FRAC_PI_4;
    let q = d1 * d1;
    let [f, df, ddf] = f_and_derivatives(d);
    let fbar = FRAC_PI_4 + e * c2 + 0.5 * s2;
    let w = [
        d2 * d2 * f,
        q * q * (-4.0 / 3.0 * c2 * e - 2.0 / 3.0 * s2),
        q * (2.0 * c2 * e + s2),
        q * q * fbar,
        -q * fbar,
    ];
    let (f2v, f3v) = (f2(d), f3(d));
    let x = [w[0], q * q * f2v, q * f3v];
    let root = f.sqrt();
    IntegrandBundle {
        u: u_direct(d, d1, d2),
        u_parts,
        u_hat,
        v,
        w,
        x,
        f,
        df,
        ddf,
        f2: f2v,
        f3: f3v,
        y: d1 * root,
        dy: root * d2 + df * q / (2.0 * root),
        g: f * d2 * d2 - ddf * q * q / 3.0 + df * df * q * q / (4.0 * f) - 4.0 * f * q,
    }
}

/// `I = ∫ h''(h + h'') (π/2 − d + ½ sin 2d) dψ` over `[0, 2π]`.
pub fn integral_i(table: &Table, profile: &DProfile) -> f64 {
    table.integrate_period(|psi| {
        let (h, _, h2) = table.support_eval(psi);
        let d = profile.d(psi);
        h2 * (h + h2) * (FRAC_PI_2 - d + 0.5 * (2.0 * d).sin())
    })
}

/// `I = ∫∫_B h''(ψ) sin δ dμ` by a product Gauss rule over B.
pub fn integral_i_2d(table: &Table, profile: &DProfile) -> f64 {
    let inner = GaussLegendre::new(24);
    table.integrate_period(|psi| {
        let (h, _, h2) = table.support_eval(psi);
        let d = profile.d(psi);
        inner.integrate(d, PI - d, |delta| h2 * (h + h2) * delta.sin() * delta.sin())
    })
}

/// Residuals of the integral identities over `[0, π]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityResiduals {
    pub integral_u: f64,
    /// `|∫U − Σ∫U_j|`.
    pub split: f64,
    /// `|∫U − ½∫ΣV|`.
    pub symmetrized: f64,
    /// `|∫U − ½∫ΣW|`.
    pub by_parts: f64,
    /// `|∫U − ½∫ΣX|`.
    pub regrouped: f64,
    /// `|∫₀^{2π}U − 2∫₀^πU|`.
    pub doubling: f64,
    /// `max_j |∫U_j − ∫Û_j|`.
    pub hat_swap: f64,
}

impl IdentityResiduals {
    pub fn max(&self) -> f64 {
        [
            self.split,
            self.symmetrized,
            self.by_parts,
            self.regrouped,
            self.doubling,
            self.hat_swap,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

fn integrate_bundles<const K: usize>(
    profile: &DProfile,
    quadrature: &Quadrature,
    a: f64,
    b: f64,
    pick: impl Fn(&IntegrandBundle) -> [f64; K],
) -> [f64; K] {
    let mut acc = [0.0; K];
    for (psi, w) in quadrature.points(a, b) {
        let vals = pick(&integrand_bundle(profile, psi));
        for k in 0..K {
            acc[k] += w * vals[k];
        }
    }
    acc
}

pub fn check_integral_identities(profile: &DProfile, quadrature: &Quadrature) -> IdentityResiduals {
    let [u, vs, ws, xs] = integrate_bundles(profile, quadrature, 0.0, PI, |b| {
        [b.u, b.v.iter().sum(), b.w.iter().sum(), b.x.iter().sum()]
    });
    let parts = integrate_bundles(profile, quadrature, 0.0, PI, |b| b.u_parts);
    let hats = integrate_bundles(profile, quadrature, 0.0, PI, |b| b.u_hat);
    let [u_full] = integrate_bundles(profile, quadrature, 0.0, TWO_PI, |b| [b.u]);
    IdentityResiduals {
        integral_u: u,
        split: (u - parts.iter().sum::<f64>()).abs(),
        symmetrized: (u - 0.5 * vs).abs(),
        by_parts: (u - 0.5 * ws).abs(),
        regrouped: (u - 0.5 * xs).abs(),
        doubling: (u_full - 2.0 * u).abs(),
        hat_swap: parts
            .iter()
            .zip(&hats)
            .map(|(p, h)| (p - h).abs())
            .fold(0.0, f64::max),
    }
}

/// Pointwise sweep over `d ∈ (ε, π/2 − ε)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BracketsReport {
    pub grid: usize,
    /// `min (3f + sin 2d) − 3π/2`.
    pub min_first_margin: f64,
    /// `min (f₂ + f''/3 − f'²/(4f))`.
    pub min_second_bracket: f64,
    /// `max |f(f₂ + f''/3 − f'²/(4f)) − [(π/4 + ½ sin 2d)² − (d − π/4)²]|`.
    pub max_reduction_residual: f64,
    /// `min [(π/4 + ½ sin 2d)² − (d − π/4)²]`.
    pub min_reduced: f64,
    pub min_f: f64,
    pub max_f: f64,
}

impl BracketsReport {
    pub fn holds(&self) -> bool {
        self.min_first_margin >= -1e-12
            && self.max_reduction_residual <= 1e-12
            && self.min_second_bracket > 0.0
            && self.min_reduced > 0.0
            && self.min_f >= 0.5 + FRAC_PI_4 - 1e-15
            && self.max_f < FRAC_PI_2
    }
}

pub fn lemma_brackets_check(grid: usize) -> BracketsReport {
    let eps = 1e-6;
    let mut r = BracketsReport {
        grid,
        min_first_margin: f64::INFINITY,
        min_second_bracket: f64::INFINITY,
        max_reduction_residual: 0.0,
        min_reduced: f64::INFINITY,
        min_f: f64::INFINITY,
        max_f: f64::NEG_INFINITY,
    };
    for i in 0..grid {
        let d = eps + (FRAC_PI_2 - 2.0 * eps) * i as f64 / (grid.max(2) - 1) as f64;
        let [f, df, ddf] = f_and_derivatives(d);
        let s2 = (2.0 * d).sin();
        let second = f2(d) + ddf / 3.0 - df * df / (4.0 * f);
        let reduced = (FRAC_PI_4 + 0.5 * s2).powi(2) - (d - FRAC_PI_4).powi(2);
        r.min_first_margin = r.min_first_margin.min(3.0 * f + s2 - 1.5 * PI);
        r.min_second_bracket = r.min_second_bracket.min(second);
        r.max_reduction_residual = r.max_reduction_residual.max((f * second - reduced).abs());
        r.min_reduced = r.min_reduced.min(reduced);
        r.min_f = r.min_f.min(f);
        r.max_f = r.max_f.max(f);
    }
    r
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WirtingerReport {
    /// `∫₀^π (Y'² − 4Y²) dψ`.
    pub functional: f64,
    /// `∫₀^π g dψ`, equal to the functional after integrating by parts.
    pub integral_g: f64,
    /// `∫₀^π Y dψ`.
    pub mean_y: f64,
}

impl WirtingerReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.functional >= -tol && self.mean_y.abs() < tol
    }
}

pub fn wirtinger_check(profile: &DProfile, quadrature: &Quadrature) -> WirtingerReport {
    let [functional, integral_g, mean_y] = integrate_bundles(profile, quadrature, 0.0, PI, |b| {
        [b.dy * b.dy - 4.0 * b.y * b.y, b.g, b.y]
    });
    WirtingerReport {
        functional,
        integral_g,
        mean_y,
    }
}

/// The terms of
/// `2∫U ≥ ∫d'²(sin 2d + 3f) ≥ (3π/2)∫d'² ≥ (3π/2)∫cos²d d'² = (3π/(2R²))∫h'²`
/// over `[0, π]`, with `h'` taken from the table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UhChain {
    pub terms: [f64; 5],
}

impl UhChain {
    pub fn holds(&self, tol: f64) -> bool {
        let t = self.terms;
        t[0] >= t[1] - tol && t[1] >= t[2] - tol && t[2] >= t[3] - tol && (t[3] - t[4]).abs() <= tol
    }
}

pub fn uh_chain(table: &Table, profile: &DProfile, quadrature: &Quadrature) -> UhChain {
    let mut sums = [0.0; 5];
    for (psi, w) in quadrature.points(0.0, PI) {
        let [d, d1, d2] = profile.eval(psi);
        let f = f_and_derivatives(d)[0];
        let q = d1 * d1;
        sums[0] += w * u_direct(d, d1, d2);
        sums[1] += w * q * ((2.0 * d).sin() + 3.0 * f);
        sums[2] += w * q;
        sums[3] += w * d.cos().powi(2) * q;
        sums[4] += w * table.support_eval(psi).1.powi(2);
    }
    let k = 1.5 * PI;
    UhChain {
        terms: [
            2.0 * sums[0],
            sums[1],
            k * sums[2],
            k * sums[3],
            k / profile.radius().powi(2) * sums[4],
        ],
    }
}

/// `P² − 4πA ≤ 2π ∫₀^{2π} h'²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CauchySchwarz {
    pub defect: f64,
    pub bound: f64,
}

pub fn cauchy_schwarz(table: &Table) -> CauchySchwarz {
    CauchySchwarz {
        defect: table.metrics().defect,
        bound: TWO_PI * table.h_prime_sq_integral(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Certified,
    Consistent,
    Violated,
    NotApplicable,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Slack for deterministic inequalities and identities.
    pub deterministic: f64,
    /// Allowed `|I₁ − I₂|` between the two quadratures of `I`.
    pub dual_quadrature: f64,
    /// Width of the Monte-Carlo band in standard errors.
    pub sigmas: f64,
    /// Threshold for "equal to zero" in the circle diagnostics.
    pub equality: f64,
    /// Allowed `max |R sin d − h|`.
    pub profile_mismatch: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            deterministic: 1e-8,
            dual_quadrature: 1e-8,
            sigmas: 3.0,
            equality: 1e-10,
            profile_mismatch: 1e-8,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Flags {
    /// `I ≥ (3/8) defect`.
    pub a: Status,
    /// `∫₀^π U ≥ 3/(16R²) defect`.
    pub b: Status,
    /// `(3β/16) defect ≤ μ_Δ`.
    pub c: Status,
    /// `I ≤ (2/β)(μ_Δ + undecided + kσ)`.
    pub d: Status,
    /// All quantities vanish when the defect does.
    pub e: Status,
}

impl Flags {
    pub fn any_violated(&self) -> bool {
        [self.a, self.b, self.c, self.d, self.e].contains(&Status::Violated)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RigidityReport {
    pub perimeter: f64,
    pub area: f64,
    pub defect: f64,
    pub beta: f64,
    pub diameter: f64,
    #[serde(rename = "R")]
    pub radius: f64,
    #[serde(rename = "I")]
    pub integral_i: f64,
    #[serde(rename = "I_2d")]
    pub integral_i_2d: f64,
    pub dual_quadrature_residual: f64,
    /// `|I − R² ∫₀^{2π} U|`.
    pub u_representation_residual: f64,
    pub lower_bound_i: f64,
    pub integral_u: f64,
    pub lower_bound_u: f64,
    pub main_lhs: f64,
    pub mu_b: MeasureEstimate,
    pub mu_delta: Option<MeasureEstimate>,
    pub undecided_mass: f64,
    pub sandwich_rhs: f64,
    pub sandwich_rhs_with_errors: f64,
    /// Smallest horizon whose `μ_Δ` estimate alone exceeds `main_lhs`.
    pub smallest_certifying_horizon: Option<usize>,
    pub identities: IdentityResiduals,
    pub wirtinger: WirtingerReport,
    pub uh_chain: UhChain,
    pub cauchy_schwarz: CauchySchwarz,
    pub flags: Flags,
    pub tolerances: Tolerances,
}

/// Evaluate the whole chain for `table`. `estimates` are the `μ_Δ`
/// estimates for increasing horizons; the last one drives flags (c) and (d).
pub fn verify_main_theorem(
    table: &Table,
    profile: &DProfile,
    mu_b: MeasureEstimate,
    estimates: &[HorizonEstimate],
    tol: &Tolerances,
) -> Result<RigidityReport> {
    let mismatch = profile.mismatch(table);
    if mismatch > tol.profile_mismatch * profile.radius() {
        return Err(Error::InconsistentInputs { mismatch });
    }
    let m = *table.metrics();
    let quadrature = table.quadrature();
    let beta = m.min_curvature;
    let r2 = profile.radius().powi(2);

    let i1 = integral_i(table, profile);
    let i2 = integral_i_2d(table, profile);
    let identities = check_integral_identities(profile, &quadrature);
    let u_full = quadrature.integrate(0.0, TWO_PI, |psi| integrand_bundle(profile, psi).u);
    let lower_bound_i = 0.375 * m.defect;
    let lower_bound_u = 3.0 / (16.0 * r2) * m.defect;
    let main_lhs = 3.0 * beta / 16.0 * m.defect;

    let last = estimates.last();
    let mu_delta = last.map(|e| e.mu_delta);
    let undecided_mass = last.map_or(0.0, |e| e.undecided_mass);
    let sandwich_rhs = mu_delta.map_or(f64::NAN, |e| 2.0 / beta * e.value);
    let sandwich_rhs_with_errors = mu_delta.map_or(f64::NAN, |e| {
        2.0 / beta * (e.value + undecided_mass + tol.sigmas * e.error)
    });
    let smallest_certifying_horizon = estimates
        .iter()
        .filter(|e| e.mu_delta.value >= main_lhs)
        .map(|e| e.horizon)
        .min();

    let check = |ok: bool| if ok { Status::Pass } else { Status::Violated };
    let a = check(i1 >= lower_bound_i - tol.deterministic);
    let b = check(identities.integral_u >= lower_bound_u - tol.deterministic);
    let c = match mu_delta {
        None => Status::NotApplicable,
        Some(e) if e.value >= main_lhs => Status::Certified,
        Some(e) if main_lhs <= e.value + tol.sigmas * e.error => Status::Consistent,
        Some(_) => Status::Violated,
    };
    let d = match mu_delta {
        None => Status::NotApplicable,
        Some(_) => check(i1 <= sandwich_rhs_with_errors + tol.deterministic),
    };
    let e = if m.defect < 1e-12 {
        let quantities = [i1, i2, identities.integral_u, main_lhs, mu_delta.map_or(0.0, |e| e.value)];
        check(quantities.iter().all(|q| q.abs() < tol.equality))
    } else {
        Status::NotApplicable
    };

    Ok(RigidityReport {
        perimeter: m.perimeter,
        area: m.area,
        defect: m.defect,
        beta,
        diameter: m.diameter,
        radius: profile.radius(),
        integral_i: i1,
        integral_i_2d: i2,
        dual_quadrature_residual: (i1 - i2).abs(),
        u_representation_residual: (i1 - r2 * u_full).abs(),
        lower_bound_i,
        integral_u: identities.integral_u,
        lower_bound_u,
        main_lhs,
        mu_b,
        mu_delta,
        undecided_mass,
        sandwich_rhs,
        sandwich_rhs_with_errors,
        smallest_certifying_horizon,
        identities,
        wirtinger: wirtinger_check(profile, &quadrature),
        uh_chain: uh_chain(table, profile, &quadrature),
        cauchy_schwarz: cauchy_schwarz(table),
        flags: Flags { a, b, c, d, e },
        tolerances: *tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_range_and_endpoints() {
        assert!((f_and_derivatives(FRAC_PI_4)[0] - (FRAC_PI_4 + 0.5)).abs() < 1e-15);
        assert!((f_and_derivatives(0.0)[0] - FRAC_PI_2).abs() < 1e-8);
        assert_eq!(f_and_derivatives(FRAC_PI_4)[1], 0.0);
    }

    #[test]
    fn f_derivatives_match_finite_differences() {
        let e = 1e-5;
        for d in [0.2, 0.7, 1.1] {
            let [_, df, ddf] = f_and_derivatives(d);
            let fd = (f_and_derivatives(d + e)[0] - f_and_derivatives(d - e)[0]) / (2.0 * e);
            let fdd = (f_and_derivatives(d + e)[1] - f_and_derivatives(d - e)[1]) / (2.0 * e);
            assert!((df - fd).abs() < 1e-9 && (ddf - fdd).abs() < 1e-9);
        }
    }

    #[test]
    fn circle_bundle_vanishes() {
        let b = bundle_from_jet(FRAC_PI_4, 0.0, 0.0);
        assert_eq!(b.u, 0.0);
        assert!(b.v.iter().chain(&b.w).chain(&b.x).all(|v| *v == 0.0));
        assert_eq!(b.y, 0.0);
        assert!((b.f - (FRAC_PI_4 + 0.5)).abs() < 1e-15);
        let lhs = b.f * (b.f2 + b.ddf / 3.0 - b.df * b.df / (4.0 * b.f));
        assert!((lhs - (FRAC_PI_4 + 0.5).powi(2)).abs() < 1e-14);
    }

    #[test]
    fn split_and_regrouping_hold_pointwise() {
        let b = bundle_from_jet(0.6, 0.3, -0.8);
        assert!((b.u - b.u_parts.iter().sum::<f64>()).abs() < 1e-15);
        assert!((b.x[1] - (b.w[1] + b.w[3])).abs() < 1e-15);
        assert!((b.x[2] - (b.w[2] + b.w[4])).abs() < 1e-15);
        // X₁ + X₂ + X₃ = g + d'⁴(second bracket) + d'²(3f + sin 2d).
        let q = 0.09;
        let second = b.f2 + b.ddf / 3.0 - b.df * b.df / (4.0 * b.f);
        let rhs = b.g + q * q * second + q * (3.0 * b.f + (1.2f64).sin());
        assert!((b.x.iter().sum::<f64>() - rhs).abs() < 1e-14);
    }

    #[test]
    fn brackets_hold_on_a_grid() {
        let r = lemma_brackets_check(1000);
        assert!(r.holds(), "{r:?}");
        assert!(r.min_first_margin < 1e-5);
    }
}
