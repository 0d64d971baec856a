//! The invariant curve α of 4-periodic orbits and the region B between α and ᾱ.
//!
//! In the incidence chart α is the graph `δ = d(ψ)` with
//! `tan d(ψ) = h(ψ) / h(ψ + π/2)`. Such a curve can only exist when
//! `h(ψ)² + h(ψ + π/2)² = R²` is constant, and then `h = R sin d`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::FourierSeries;
use crate::geometry::{build_table, SupportFunction, Table, DEFAULT_TOLERANCE, TWO_PI};
use crate::phasemap::{chart_to_incidence, incidence_to_chart, iterate, Incidence, PhasePoint};
use crate::quadrature::Quadrature;

/// Number of uniform samples of `d` on `[0, π)`.
pub const PROFILE_GRID: usize = 1024;

/// Allowed relative variation of `h(ψ)² + h(ψ + π/2)²`.
pub const DEFAULT_PROFILE_TOLERANCE: f64 = 1e-8;

/// Allowed violation of `d(ψ + π/2) = π/2 − d(ψ)` for sampled profiles.
pub const SYMMETRY_TOLERANCE: f64 = 1e-9;

const COEFFICIENT_FLOOR: f64 = 1e-15;

/// The angle function `d(ψ)` of α together with the orthoptic radius `R`.
///
/// Stored as samples at `ψ_j = jπ/n` and their trigonometric interpolant;
/// `d'` and `d''` come from the interpolant.
#[derive(Clone, Debug)]
pub struct DProfile {
    radius: f64,
    samples: Vec<f64>,
    series: FourierSeries,
}

impl DProfile {
    pub fn from_samples(radius: f64, samples: Vec<f64>) -> Result<DProfile> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidInput(format!("radius must be positive, got {radius}")));
        }
        let n = samples.len();
        if n < 8 || n % 2 != 0 {
            return Err(Error::InvalidInput(format!(
                "profile needs an even number (>= 8) of samples, got {n}"
            )));
        }
        if let Some(bad) = samples.iter().find(|d| !(d.is_finite() && **d > 0.0 && **d < FRAC_PI_2)) {
            return Err(Error::InvalidInput(format!("profile value {bad} outside (0, pi/2)")));
        }
        let violation = (0..n / 2)
            .map(|j| (samples[j + n / 2] - (FRAC_PI_2 - samples[j])).abs())
            .fold(0.0, f64::max);
        if violation > SYMMETRY_TOLERANCE {
            return Err(Error::ProfileSymmetryViolated { violation });
        }
        let series = FourierSeries::from_pi_periodic_samples(&samples, COEFFICIENT_FLOOR, None);
        Ok(DProfile {
            radius,
            samples,
            series,
        })
    }

    /// `d(ψ) = π/4 + ε sin(2·mode·ψ)` sampled on the profile grid.
    pub fn perturbed_quarter(radius: f64, eps: f64, mode: u32) -> Result<DProfile> {
        let samples = (0..PROFILE_GRID)
            .map(|j| {
                let psi = grid_psi(j, PROFILE_GRID);
                PI / 4.0 + eps * (2.0 * mode as f64 * psi).sin()
            })
            .collect();
        DProfile::from_samples(radius, samples)
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn series(&self) -> &FourierSeries {
        &self.series
    }

    pub fn d(&self, psi: f64) -> f64 {
        self.series.value(psi)
    }

    /// `[d, d', d'']`.
    pub fn eval(&self, psi: f64) -> [f64; 3] {
        self.series.eval(psi)
    }

    /// Radius of curvature implied by `h = R sin d`.
    pub fn rho(&self, psi: f64) -> f64 {
        let [d, d1, d2] = self.eval(psi);
        let (s, c) = d.sin_cos();
        self.radius * (s - s * d1 * d1 + c * d2)
    }

    /// `h = R sin d` projected onto a Fourier series.
    pub fn support_function(&self) -> SupportFunction {
        let h: Vec<f64> = self.samples.iter().map(|d| self.radius * d.sin()).collect();
        SupportFunction::from_series(FourierSeries::from_pi_periodic_samples(
            &h,
            COEFFICIENT_FLOOR * self.radius,
            None,
        ))
    }

    /// `α` or `ᾱ` bounds: `d(ψ) ≤ δ ≤ π − d(ψ)`.
    pub fn contains(&self, incidence: Incidence) -> bool {
        let d = self.d(incidence.psi);
        incidence.delta >= d && incidence.delta <= PI - d
    }

    /// Largest `|R sin d(ψ) − h(ψ)|` on a grid.
    pub fn mismatch(&self, table: &Table) -> f64 {
        (0..PROFILE_GRID)
            .map(|j| {
                let psi = grid_psi(j, PROFILE_GRID) + 0.5 * PI / PROFILE_GRID as f64;
                (self.radius * self.d(psi).sin() - table.h(psi)).abs()
            })
            .fold(0.0, f64::max)
    }
}

fn grid_psi(j: usize, n: usize) -> f64 {
    PI * j as f64 / n as f64
}

/// The 4-periodic invariant-curve profile of `table`, or `NoFourPeriodicCurve`
/// when `h(ψ)² + h(ψ+π/2)²` varies by more than `tolerance` (relative).
pub fn d_profile(table: &Table, tolerance: f64) -> Result<DProfile> {
    let n = PROFILE_GRID;
    let mut samples = Vec::with_capacity(n);
    let (mut lo, mut hi, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    for j in 0..n {
        let psi = grid_psi(j, n);
        let (h, h2) = (table.h(psi), table.h(psi + FRAC_PI_2));
        let r2 = h * h + h2 * h2;
        lo = lo.min(r2);
        hi = hi.max(r2);
        sum += r2;
        samples.push(h.atan2(h2));
    }
    let mean = sum / n as f64;
    let variation = (hi - lo) / mean;
    if variation > tolerance {
        return Err(Error::NoFourPeriodicCurve {
            variation,
            tolerance,
        });
    }
    DProfile::from_samples(mean.sqrt(), samples)
}

/// `[d, d', d'']` from the defining formula `d = atan(h(ψ) / h(ψ + π/2))`.
pub fn exact_d_derivatives(table: &Table, psi: f64) -> [f64; 3] {
    let (h, h1, hh) = table.support_eval(psi);
    let (g, g1, gg) = table.support_eval(psi + FRAC_PI_2);
    let num = h1 * g - h * g1;
    let den = h * h + g * g;
    let num1 = hh * g - h * gg;
    let den1 = 2.0 * (h * h1 + g * g1);
    [h.atan2(g), num / den, (num1 * den - num * den1) / (den * den)]
}

/// Table with support `h = R sin d` for a sampled profile.
pub fn table_from_d(d_samples: &[f64], radius: f64) -> Result<Table> {
    let profile = DProfile::from_samples(radius, d_samples.to_vec())?;
    build_table(profile.support_function(), DEFAULT_TOLERANCE)
}

/// Region between α and ᾱ with its invariant measure.
#[derive(Clone, Debug)]
pub struct RegionB {
    profile: DProfile,
    measure: f64,
}

/// `μ(B) = ∫ ρ(ψ) 2 cos d(ψ) dψ`, with `ρ` taken from the profile itself.
pub fn region_b(profile: &DProfile) -> RegionB {
    let measure = Quadrature::default().integrate(0.0, TWO_PI, |psi| {
        2.0 * profile.rho(psi) * profile.d(psi).cos()
    });
    RegionB {
        profile: profile.clone(),
        measure,
    }
}

impl RegionB {
    pub fn measure(&self) -> f64 {
        self.measure
    }

    pub fn profile(&self) -> &DProfile {
        &self.profile
    }

    pub fn contains(&self, incidence: Incidence) -> bool {
        self.profile.contains(incidence)
    }

    pub fn contains_line(&self, table: &Table, z: PhasePoint) -> Result<bool> {
        Ok(self.contains(chart_to_incidence(table, z)?))
    }
}

/// Closure and shape errors of the orbits started on α.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourPeriodicReport {
    pub samples: usize,
    pub failures: usize,
    /// `max |T⁴z − z|` in `(p, φ)`, with `φ` advanced by one full turn.
    pub max_closure_error: f64,
    /// Mismatch of opposite sides of the inscribed quadrilateral.
    pub max_parallelogram_error: f64,
    /// `max |cos(ψ_{k+1} − ψ_k)|`: zero when consecutive tangents are perpendicular.
    pub max_rectangle_error: f64,
    /// `max |δ_k − d(ψ_k)|` along the orbits (invariance of α).
    pub max_curve_deviation: f64,
}

impl FourPeriodicReport {
    pub fn closes(&self, tol: f64) -> bool {
        self.failures == 0 && self.max_closure_error < tol
    }
}

pub fn validate_four_periodic(table: &Table, profile: &DProfile, samples: usize) -> FourPeriodicReport {
    let mut report = FourPeriodicReport {
        samples,
        failures: 0,
        max_closure_error: 0.0,
        max_parallelogram_error: 0.0,
        max_rectangle_error: 0.0,
        max_curve_deviation: 0.0,
    };
    for j in 0..samples {
        let psi = TWO_PI * j as f64 / samples as f64;
        let orbit = incidence_to_chart(table, Incidence::new(psi, profile.d(psi)))
            .and_then(|z| iterate(table, z, 4));
        let Ok(orbit) = orbit else {
            report.failures += 1;
            continue;
        };
        let (z0, z4) = (orbit.points[0], orbit.points[4]);
        let closure = (z4.p - z0.p).hypot(z4.phi - z0.phi - TWO_PI);
        report.max_closure_error = report.max_closure_error.max(closure);

        let v: Vec<[f64; 2]> = orbit.incidences[..4]
            .iter()
            .map(|inc| table.boundary_point(inc.psi))
            .collect();
        let side = |a: usize, b: usize| [v[b][0] - v[a][0], v[b][1] - v[a][1]];
        let mismatch = |x: [f64; 2], y: [f64; 2]| (x[0] + y[0]).hypot(x[1] + y[1]);
        let para = mismatch(side(0, 1), side(2, 3)).max(mismatch(side(1, 2), side(3, 0)));
        report.max_parallelogram_error = report.max_parallelogram_error.max(para);

        for k in 0..4 {
            let turn = orbit.incidences[k + 1].psi - orbit.incidences[k].psi;
            report.max_rectangle_error = report.max_rectangle_error.max(turn.cos().abs());
        }
        for inc in &orbit.incidences {
            let dev = (inc.delta - profile.d(inc.psi)).abs();
            report.max_curve_deviation = report.max_curve_deviation.max(dev);
        }
    }
    report
}

/// On-disk profile: `{ "R": r, "d_samples": [...] }` at `ψ_j = jπ/n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileFile {
    #[serde(rename = "R")]
    pub radius: f64,
    pub d_samples: Vec<f64>,
}

impl ProfileFile {
    pub fn from_profile(profile: &DProfile) -> Self {
        ProfileFile {
            radius: profile.radius(),
            d_samples: profile.samples().to_vec(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("profile serializes")
    }

    pub fn to_profile(&self) -> Result<DProfile> {
        DProfile::from_samples(self.radius, self.d_samples.clone())
    }
}
