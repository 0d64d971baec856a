//! Centrally symmetric convex curves given by their support function.
//!
//! A curve is described by `h(ψ)`, the distance from the centre to the
//! supporting line with outer normal `n(ψ) = (cos ψ, sin ψ)`. Central symmetry
//! means only even harmonics appear, and the radius of curvature is
//! `ρ = h + h''`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::FourierSeries;
use crate::quadrature::Quadrature;

pub const TWO_PI: f64 = 2.0 * PI;

/// Default threshold on odd harmonics and on isoperimetric round-off.
pub const DEFAULT_TOLERANCE: f64 = 1e-12;

/// Grid used to validate positivity and convexity.
pub const VALIDATION_GRID: usize = 4096;

/// Support function as a truncated Fourier series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportFunction {
    series: FourierSeries,
}

impl SupportFunction {
    /// Coefficients indexed by harmonic number (`sin[0]` is ignored).
    pub fn new(cos: Vec<f64>, sin: Vec<f64>) -> Self {
        SupportFunction {
            series: FourierSeries::new(cos, sin),
        }
    }

    /// `cos_even[m]` is the coefficient of `cos 2mψ`, `sin_even[m]` the
    /// coefficient of `sin 2(m+1)ψ`.
    pub fn from_even_harmonics(cos_even: &[f64], sin_even: &[f64]) -> Self {
        let len = (2 * cos_even.len()).max(2 * sin_even.len() + 2).max(1);
        let mut cos = vec![0.0; len + 1];
        let mut sin = vec![0.0; len + 1];
        for (m, &c) in cos_even.iter().enumerate() {
            cos[2 * m] = c;
        }
        for (m, &s) in sin_even.iter().enumerate() {
            sin[2 * (m + 1)] = s;
        }
        SupportFunction::new(cos, sin)
    }

    pub fn from_series(series: FourierSeries) -> Self {
        SupportFunction { series }
    }

    pub fn circle(radius: f64) -> Self {
        SupportFunction::new(vec![radius], vec![0.0])
    }

    /// Projection of the support function of the axis-aligned ellipse with
    /// semi-axes `a` (along x) and `b` onto harmonics up to `max_harmonic`.
    pub fn ellipse(a: f64, b: f64, max_harmonic: usize) -> Self {
        let n = 1024;
        let samples: Vec<f64> = (0..n)
            .map(|j| {
                let psi = j as f64 * PI / n as f64;
                (a * a * psi.cos().powi(2) + b * b * psi.sin().powi(2)).sqrt()
            })
            .collect();
        SupportFunction::from_series(FourierSeries::from_pi_periodic_samples(
            &samples,
            0.0,
            Some(max_harmonic),
        ))
    }

    pub fn series(&self) -> &FourierSeries {
        &self.series
    }

    pub fn value(&self, psi: f64) -> f64 {
        self.series.value(psi)
    }

    /// `[h, h', h'']`.
    pub fn eval(&self, psi: f64) -> [f64; 3] {
        self.series.eval(psi)
    }

    fn normalized(self) -> Self {
        SupportFunction {
            series: self.series.normalized(),
        }
    }
}

/// Scalar invariants of a table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub perimeter: f64,
    pub area: f64,
    /// Minimal curvature β = 1 / max ρ.
    pub min_curvature: f64,
    pub diameter: f64,
    /// Isoperimetric defect P² − 4πA.
    pub defect: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    pub h_max: f64,
}

/// A validated centrally symmetric, strictly convex billiard table.
///
/// Immutable after construction.
#[derive(Clone, Debug)]
pub struct Table {
    support: SupportFunction,
    tolerance: f64,
    quadrature: Quadrature,
    metrics: Metrics,
}

/// Validate a support function and compute its metrics with the default quadrature.
pub fn build_table(support: SupportFunction, tolerance: f64) -> Result<Table> {
    Table::with_quadrature(support, tolerance, Quadrature::default())
}

impl Table {
    pub fn new(support: SupportFunction, tolerance: f64) -> Result<Table> {
        build_table(support, tolerance)
    }

    pub fn with_quadrature(
        support: SupportFunction,
        tolerance: f64,
        quadrature: Quadrature,
    ) -> Result<Table> {
        if !(tolerance.is_finite() && tolerance > 0.0) {
            return Err(Error::InvalidInput(format!(
                "tolerance must be positive, got {tolerance}"
            )));
        }
        if quadrature.panels == 0 || quadrature.order == 0 {
            return Err(Error::InvalidInput("quadrature must have nodes".into()));
        }
        let series = support.series();
        let mut cos = series.cos_coeffs().to_vec();
        let mut sin = series.sin_coeffs().to_vec();
        if cos.iter().chain(&sin).any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("coefficients must be finite".into()));
        }
        for k in (1..cos.len()).step_by(2) {
            let magnitude = cos[k].hypot(sin[k]);
            if magnitude > tolerance {
                return Err(Error::NotCentrallySymmetric {
                    harmonic: k,
                    magnitude,
                });
            }
            cos[k] = 0.0;
            sin[k] = 0.0;
        }
        if cos[0] <= 0.0 {
            return Err(Error::NonPositive {
                psi: 0.0,
                value: cos[0],
            });
        }
        let support = SupportFunction::new(cos, sin).normalized();

        let h = |psi: f64| support.value(psi);
        let rho = |psi: f64| {
            let [v, _, d2] = support.eval(psi);
            v + d2
        };
        let (psi, value) = extremum(h, false);
        if value <= 0.0 {
            return Err(Error::NonPositive { psi, value });
        }
        let (psi, rho_min) = extremum(rho, false);
        if rho_min <= 0.0 {
            return Err(Error::NotConvex { psi, rho: rho_min });
        }
        let (_, rho_max) = extremum(rho, true);
        let (_, h_max) = extremum(h, true);

        let perimeter = quadrature.integrate(0.0, TWO_PI, h);
        let area = 0.5
            * quadrature.integrate(0.0, TWO_PI, |psi| {
                let [v, d1, _] = support.eval(psi);
                v * v - d1 * d1
            });
        // P² − 4πA = 2π ∫ (h'² − (h − h̄)²), free of the cancellation in P² − 4πA.
        let mean = perimeter / TWO_PI;
        let defect = TWO_PI
            * quadrature.integrate(0.0, TWO_PI, |psi| {
                let [v, d1, _] = support.eval(psi);
                d1 * d1 - (v - mean) * (v - mean)
            });
        let metrics = Metrics {
            perimeter,
            area,
            min_curvature: 1.0 / rho_max,
            diameter: 2.0 * h_max,
            defect,
            rho_min,
            rho_max,
            h_max,
        };
        Ok(Table {
            support,
            tolerance,
            quadrature,
            metrics,
        })
    }

    pub fn circle(radius: f64) -> Result<Table> {
        build_table(SupportFunction::circle(radius), DEFAULT_TOLERANCE)
    }

    /// Ellipse with semi-axes `a` (x) and `b` (y), projected onto even
    /// harmonics up to 32.
    pub fn ellipse(a: f64, b: f64) -> Result<Table> {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::InvalidInput("ellipse semi-axes must be positive".into()));
        }
        build_table(SupportFunction::ellipse(a, b, 32), DEFAULT_TOLERANCE)
    }

    pub fn support(&self) -> &SupportFunction {
        &self.support
    }

    pub fn metrics(&self) -> &Metrics {
        &self.metrics
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn quadrature(&self) -> Quadrature {
        self.quadrature
    }

    /// `(h, h', h'')` at `psi`.
    pub fn support_eval(&self, psi: f64) -> (f64, f64, f64) {
        let [h, d1, d2] = self.support.eval(psi);
        (h, d1, d2)
    }

    pub fn h(&self, psi: f64) -> f64 {
        self.support.value(psi)
    }

    /// Radius of curvature `ρ = h + h''`.
    pub fn rho(&self, psi: f64) -> f64 {
        let [h, _, d2] = self.support.eval(psi);
        h + d2
    }

    /// Point of the curve with outer normal angle `psi`:
    /// `γ(ψ) = h n(ψ) + h' t(ψ)`.
    pub fn boundary_point(&self, psi: f64) -> [f64; 2] {
        let [h, d1, _] = self.support.eval(psi);
        let (s, c) = psi.sin_cos();
        [h * c - d1 * s, h * s + d1 * c]
    }

    /// Arclength from `ψ = 0`, exact: `s(ψ) = h'(ψ) − h'(0) + ∫_0^ψ h`.
    pub fn arclength(&self, psi: f64) -> f64 {
        let series = self.support.series();
        series.eval(psi)[1] - series.eval(0.0)[1] + series.integral_from_zero(psi)
    }

    /// Inverse of [`Table::arclength`], for any real `s`.
    pub fn psi_at_arclength(&self, s: f64) -> f64 {
        let perimeter = self.metrics.perimeter;
        let turns = (s / perimeter).floor();
        let target = s - turns * perimeter;
        let (mut lo, mut hi) = (0.0, TWO_PI);
        let mut psi = TWO_PI * target / perimeter;
        for _ in 0..200 {
            let f = self.arclength(psi) - target;
            if f > 0.0 {
                hi = psi;
            } else {
                lo = psi;
            }
            let step = f / self.rho(psi);
            let mut next = psi - step;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            let done = (next - psi).abs() < 1e-15 * (1.0 + psi.abs()) || hi - lo < 1e-15;
            psi = next;
            if done {
                break;
            }
        }
        psi + turns * TWO_PI
    }

    /// `∫_0^{2π} g(ψ) dψ` with the table's quadrature rule.
    pub fn integrate_period<F: FnMut(f64) -> f64>(&self, g: F) -> f64 {
        self.quadrature.integrate(0.0, TWO_PI, g)
    }

    /// `∫_0^{2π} h'² dψ`.
    pub fn h_prime_sq_integral(&self) -> f64 {
        self.integrate_period(|psi| self.support.eval(psi)[1].powi(2))
    }

    /// `∫_0^{2π} h² dψ`.
    pub fn h_sq_integral(&self) -> f64 {
        self.integrate_period(|psi| self.support.value(psi).powi(2))
    }

    /// `max_ψ (ρ + h + |h'|)`, the bound used for the E. Hopf function.
    pub fn hopf_bound(&self) -> f64 {
        grid(VALIDATION_GRID)
            .map(|psi| {
                let [h, d1, d2] = self.support.eval(psi);
                (h + d2) + h + d1.abs()
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn support_eval(table: &Table, psi: f64) -> (f64, f64, f64) {
    table.support_eval(psi)
}

pub fn boundary_point(table: &Table, psi: f64) -> [f64; 2] {
    table.boundary_point(psi)
}

pub fn metrics(table: &Table) -> Metrics {
    *table.metrics()
}

fn grid(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| TWO_PI * i as f64 / n as f64)
}

/// Global minimum (or maximum) over the validation grid, refined by
/// golden-section search between the neighbours of the best grid node.
fn extremum<F: Fn(f64) -> f64>(f: F, maximize: bool) -> (f64, f64) {
    let sign = if maximize { -1.0 } else { 1.0 };
    let g = |x: f64| sign * f(x);
    let step = TWO_PI / VALIDATION_GRID as f64;
    let (mut best_x, mut best) = (0.0, f64::INFINITY);
    for x in grid(VALIDATION_GRID) {
        let v = g(x);
        if v < best {
            best = v;
            best_x = x;
        }
    }
    let (mut a, mut b) = (best_x - step, best_x + step);
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let (mut f1, mut f2) = (g(x1), g(x2));
    for _ in 0..80 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = g(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = g(x2);
        }
    }
    let (x, v) = if f1 < f2 { (x1, f1) } else { (x2, f2) };
    if v < best {
        (x, sign * v)
    } else {
        (best_x, sign * best)
    }
}

/// One harmonic term outside the even-harmonic lists of a table file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarmonicTerm {
    pub k: usize,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

fn default_file_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}

/// On-disk table description:
/// `{ "cos": [c0, c2, c4, ...], "sin": [s2, s4, ...], "tolerance": t }`.
///
/// Harmonic numbers are implied by position. The optional `extra` list adds
/// terms at explicit harmonic numbers (which is the only way to express an
/// odd harmonic, and is rejected at build time unless below tolerance).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableFile {
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
    #[serde(default = "default_file_tolerance")]
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub extra: Vec<HarmonicTerm>,
}

impl TableFile {
    pub fn from_json(text: &str) -> Result<TableFile> {
        serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table file serializes")
    }

    pub fn support(&self) -> SupportFunction {
        let even = SupportFunction::from_even_harmonics(&self.cos, &self.sin);
        let mut cos = even.series().cos_coeffs().to_vec();
        let mut sin = even.series().sin_coeffs().to_vec();
        for term in &self.extra {
            if term.k >= cos.len() {
                cos.resize(term.k + 1, 0.0);
                sin.resize(term.k + 1, 0.0);
            }
            cos[term.k] += term.cos;
            sin[term.k] += term.sin;
        }
        SupportFunction::new(cos, sin)
    }

    pub fn build(&self, quadrature: Quadrature) -> Result<Table> {
        Table::with_quadrature(self.support(), self.tolerance, quadrature)
    }

    pub fn from_table(table: &Table) -> TableFile {
        let series = table.support().series();
        let cos = series.cos_coeffs().iter().step_by(2).copied().collect();
        let sin = series.sin_coeffs().iter().skip(2).step_by(2).copied().collect();
        TableFile {
            cos,
            sin,
            tolerance: table.tolerance(),
            extra: Vec::new(),
        }
    }
}
