//! Second variation of the length functional along orbit segments,
//! discrete Jacobi fields, conjugate points and the function ω on α.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fourcurve::DProfile;
use crate::geometry::{Table, TWO_PI};
use crate::phasemap::{
    centered_segment, chart_to_incidence, chord_partials_at, incidence_to_chart, iterate,
    reflect_with_incidence, s_derivatives, wrap_angle, Incidence, OrbitSegment, PhasePoint,
};

/// Pivots with magnitude below this are treated as numerically zero.
pub const PIVOT_UNDERFLOW: f64 = 1e-14;

/// Coefficients of the discrete Jacobi equation
/// `b_{k−1} δφ_{k−1} + a_k δφ_k + b_k δφ_{k+1} = 0` along a segment `z_0 … z_n`.
///
/// `diag[i]` is `a_{i+1}` (the interior lines are `1 … n−1`) and
/// `coupling[k]` is `b_k = S₁₂` at the reflection between `z_k` and `z_{k+1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JacobiCoefficients {
    pub diag: Vec<f64>,
    pub coupling: Vec<f64>,
}

impl JacobiCoefficients {
    /// Diagonal and off-diagonal of the second variation with the lines
    /// `lo` and `hi` held fixed.
    pub fn window(&self, lo: usize, hi: usize) -> (&[f64], &[f64]) {
        assert!(lo + 2 <= hi && hi <= self.coupling.len(), "window {lo}..{hi} out of range");
        (&self.diag[lo..hi - 1], &self.coupling[lo + 1..hi - 1])
    }
}

pub fn jacobi_coefficients(table: &Table, segment: &OrbitSegment) -> Result<JacobiCoefficients> {
    let n = segment.len().saturating_sub(1);
    if n < 2 {
        return Err(crate::error::Error::InvalidInput(format!(
            "segment needs at least 3 lines, got {}",
            segment.len()
        )));
    }
    let derivs = segment.incidences[..n]
        .iter()
        .map(|inc| s_derivatives(table, inc.psi, inc.delta))
        .collect::<Result<Vec<_>>>()?;
    let diag = (1..n).map(|k| derivs[k - 1].s22 + derivs[k].s11).collect();
    let coupling = derivs.iter().map(|d| d.s12).collect();
    Ok(JacobiCoefficients { diag, coupling })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Maximizing,
    NotMaximizing,
    Undecided,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Maximizing => "maximizing",
            Verdict::NotMaximizing => "not_maximizing",
            Verdict::Undecided => "undecided",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaxClassification {
    pub verdict: Verdict,
    pub horizon: usize,
    /// 1-based index of the first non-positive (or vanishing) pivot.
    pub first_bad_index: Option<usize>,
}

impl MaxClassification {
    fn undecided(horizon: usize) -> Self {
        MaxClassification {
            verdict: Verdict::Undecided,
            horizon,
            first_bad_index: None,
        }
    }
}

/// Classify the symmetric tridiagonal matrix with diagonal `diag` and
/// off-diagonal `off` by the pivots of its negation.
///
/// `horizon` is recorded in the result; it is not used otherwise.
pub fn second_variation_negative_definite(
    diag: &[f64],
    off: &[f64],
    horizon: usize,
) -> MaxClassification {
    assert_eq!(off.len() + 1, diag.len().max(1), "off-diagonal length mismatch");
    let mut u = 0.0;
    for (j, &a) in diag.iter().enumerate() {
        u = if j == 0 { -a } else { -a - off[j - 1] * off[j - 1] / u };
        if !u.is_finite() || u.abs() < PIVOT_UNDERFLOW {
            return MaxClassification {
                verdict: Verdict::Undecided,
                horizon,
                first_bad_index: Some(j + 1),
            };
        }
        if u < 0.0 {
            return MaxClassification {
                verdict: Verdict::NotMaximizing,
                horizon,
                first_bad_index: Some(j + 1),
            };
        }
    }
    MaxClassification {
        verdict: Verdict::Maximizing,
        horizon,
        first_bad_index: None,
    }
}

/// Classification of the window `T^{−N} z … T^N z`.
pub fn is_locally_maximizing(table: &Table, z: PhasePoint, horizon: usize) -> MaxClassification {
    classify_horizons(table, z, &[horizon])[0]
}

/// Classifications for several horizons from one orbit computation.
pub fn classify_horizons(table: &Table, z: PhasePoint, horizons: &[usize]) -> Vec<MaxClassification> {
    let Some(&max_n) = horizons.iter().max() else {
        return Vec::new();
    };
    let coeffs = (max_n >= 1)
        .then(|| centered_segment(table, z, max_n, max_n))
        .and_then(|s| s.ok())
        .and_then(|s| jacobi_coefficients(table, &s).ok());
    horizons
        .iter()
        .map(|&n| match &coeffs {
            Some(c) if n >= 1 => {
                let (diag, off) = c.window(max_n - n, max_n + n);
                second_variation_negative_definite(diag, off, n)
            }
            _ => MaxClassification::undecided(n),
        })
        .collect()
}

/// Same classification using the chord-length functional `Σ L(s_k, s_{k+1})`
/// over the reflection points of the window, with the end points fixed.
pub fn classify_by_chord_length(table: &Table, z: PhasePoint, horizon: usize) -> MaxClassification {
    let result = (|| -> Result<MaxClassification> {
        let seg = centered_segment(table, z, horizon, horizon)?;
        let q: Vec<f64> = seg.incidences.iter().map(|inc| inc.psi).collect();
        let parts = q
            .windows(2)
            .map(|w| chord_partials_at(table, w[0], w[1]))
            .collect::<Result<Vec<_>>>()?;
        let diag: Vec<f64> = (1..parts.len()).map(|k| parts[k - 1].l22 + parts[k].l11).collect();
        let off: Vec<f64> = (1..parts.len() - 1).map(|k| parts[k].l12).collect();
        Ok(second_variation_negative_definite(&diag, &off, horizon))
    })();
    result.unwrap_or(MaxClassification::undecided(horizon))
}

/// Jacobi field with `δφ₀ = 0`, `δφ₁ = 1` propagated by the Jacobi equation
/// over the whole segment.
pub fn jacobi_field(coeffs: &JacobiCoefficients) -> Vec<f64> {
    let mut field = vec![0.0, 1.0];
    for (i, &a) in coeffs.diag.iter().enumerate() {
        let k = i + 1;
        let next = -(a * field[k] + coeffs.coupling[k - 1] * field[k - 1]) / coeffs.coupling[k];
        field.push(next);
    }
    field
}

/// The vertical Jacobi field `δφ₀ = 0, δφ₁ = 1` along the forward orbit of
/// `z`, stopped at the first `n ≥ 2` with `δφ_n ≤ 0`. Values are rescaled to
/// avoid overflow, so only their signs are meaningful.
fn vertical_field_sign_change(table: &Table, z: PhasePoint, max_n: usize) -> Result<Option<usize>> {
    let (mut inc_prev, mut current) = reflect_with_incidence(table, z)?;
    let (mut prev, mut cur) = (0.0_f64, 1.0_f64);
    for n in 1..max_n {
        let (inc, next) = reflect_with_incidence(table, current)?;
        let d_prev = s_derivatives(table, inc_prev.psi, inc_prev.delta)?;
        let d_cur = s_derivatives(table, inc.psi, inc.delta)?;
        let a = d_prev.s22 + d_cur.s11;
        let following = -(a * cur + d_prev.s12 * prev) / d_cur.s12;
        if following <= 0.0 {
            return Ok(Some(n + 1));
        }
        prev = cur;
        cur = following;
        let scale = cur.abs().max(prev.abs());
        if scale > 1e100 {
            prev /= scale;
            cur /= scale;
        }
        inc_prev = inc;
        current = next;
    }
    Ok(None)
}

/// Smallest `n ≥ 2` (up to `max_n`) at which the image of the vertical
/// direction at `z` under `DTⁿ` has non-positive `φ`-component.
pub fn find_conjugate_point(table: &Table, z: PhasePoint, max_n: usize) -> Result<Option<usize>> {
    vertical_field_sign_change(table, z, max_n)
}

/// `δφ_n` of the vertical Jacobi field (`δφ₀ = 0`, `δφ₁ = 1`) at `z`, unscaled.
pub fn vertical_jacobi_component(table: &Table, z: PhasePoint, n: usize) -> Result<f64> {
    let seg = iterate(table, z, n.max(2))?;
    let field = jacobi_field(&jacobi_coefficients(table, &seg)?);
    Ok(field[n])
}

/// Move `z` along its vertical fiber (fixed `φ`) until the vertical Jacobi
/// field vanishes exactly at step `n`, so that `DTⁿ` maps the vertical
/// direction to itself. `span` bounds the search in `p`.
pub fn refine_conjugate_point(
    table: &Table,
    z: PhasePoint,
    n: usize,
    span: f64,
) -> Result<Option<PhasePoint>> {
    let g = |p: f64| vertical_jacobi_component(table, PhasePoint::new(p, z.phi), n);
    let g0 = g(z.p)?;
    if g0 == 0.0 {
        return Ok(Some(z));
    }
    let mut bracket = None;
    let mut step = span / 64.0;
    while step <= span && bracket.is_none() {
        for p in [z.p - step, z.p + step] {
            if let Ok(v) = g(p) {
                if v.signum() != g0.signum() {
                    bracket = Some((z.p.min(p), z.p.max(p)));
                    break;
                }
            }
        }
        step *= 2.0;
    }
    let Some((mut lo, mut hi)) = bracket else {
        return Ok(None);
    };
    let g_lo = g(lo)?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = g(mid)?;
        if v == 0.0 {
            return Ok(Some(PhasePoint::new(mid, z.phi)));
        }
        if v.signum() == g_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(PhasePoint::new(0.5 * (lo + hi), z.phi)))
}

/// Finite-difference image of the vertical unit vector under `DTⁿ`.
pub fn vertical_image(table: &Table, z: PhasePoint, n: usize, eps: f64) -> Result<[f64; 2]> {
    let end = |dp: f64| -> Result<PhasePoint> {
        let seg = iterate(table, PhasePoint::new(z.p + dp, z.phi), n)?;
        Ok(seg.points[n])
    };
    let (plus, minus) = (end(eps)?, end(-eps)?);
    Ok([(plus.p - minus.p) / (2.0 * eps), (plus.phi - minus.phi) / (2.0 * eps)])
}

/// `ω = δp/δφ` along α: the slope of α in the `(p, φ)` chart.
pub fn omega_on_alpha_at(table: &Table, profile: &DProfile, psi: f64) -> f64 {
    let (h, h1, h2) = table.support_eval(psi);
    let [d, d1, _] = profile.eval(psi);
    let (s, c) = d.sin_cos();
    let dp = h1 * c - h * s * d1 - h2 * s - h1 * c * d1;
    dp / (1.0 - d1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OmegaReport {
    pub samples: usize,
    pub failures: usize,
    /// `min [ω(Tz) − ω(z) − 2h''(ψ) sin δ]` over the samples.
    pub min_step_margin: f64,
    pub max_abs_omega: f64,
    /// `max (ρ + h + |h'|)`.
    pub bound: f64,
}

impl OmegaReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.failures == 0 && self.min_step_margin >= -tol && self.max_abs_omega < self.bound
    }
}

pub fn omega_on_alpha(table: &Table, profile: &DProfile, samples: usize) -> OmegaReport {
    let mut report = OmegaReport {
        samples,
        failures: 0,
        min_step_margin: f64::INFINITY,
        max_abs_omega: 0.0,
        bound: table.hopf_bound(),
    };
    for j in 0..samples {
        let psi = TWO_PI * j as f64 / samples as f64;
        let step = incidence_to_chart(table, Incidence::new(psi, profile.d(psi)))
            .and_then(|z| reflect_with_incidence(table, z))
            .and_then(|(inc, next)| Ok((inc, chart_to_incidence(table, next)?)));
        let Ok((inc, next)) = step else {
            report.failures += 1;
            continue;
        };
        let w0 = omega_on_alpha_at(table, profile, inc.psi);
        let w1 = omega_on_alpha_at(table, profile, next.psi);
        let (_, _, h2) = table.support_eval(inc.psi);
        let margin = w1 - w0 - 2.0 * h2 * inc.delta.sin();
        report.min_step_margin = report.min_step_margin.min(margin);
        report.max_abs_omega = report.max_abs_omega.max(w0.abs());
    }
    report
}

/// One row of the classification dump.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifiedPoint {
    pub incidence: Incidence,
    pub classification: MaxClassification,
}

pub fn write_classification_csv<W: Write>(rows: &[ClassifiedPoint], mut out: W) -> std::io::Result<()> {
    writeln!(out, "psi,delta,N,verdict,first_bad_index")?;
    for row in rows {
        let bad = row
            .classification
            .first_bad_index
            .map(|i| i.to_string())
            .unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{}",
            wrap_angle(row.incidence.psi),
            row.incidence.delta,
            row.classification.horizon,
            row.classification.verdict.as_str(),
            bad
        )?;
    }
    Ok(())
}
