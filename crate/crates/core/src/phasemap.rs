//! The billiard map on oriented lines.
//!
//! An oriented line is stored as `(p, φ)`: `φ` is the angle of its right unit
//! normal `n_φ` and `p` the signed distance, so the line is
//! `{x : ⟨x, n_φ⟩ = p}` traversed in direction `(−sin φ, cos φ)`.
//!
//! The line ends at the boundary point with outer normal angle `ψ`, where it
//! meets the tangent at angle `δ ∈ (0, π)`; the pair `(ψ, δ)` is the
//! incidence chart. The map is generated by `S(φ, φ₁) = 2 h(ψ) sin δ` with
//! `ψ = (φ + φ₁)/2`, `δ = (φ₁ − φ)/2`:
//!
//! ```text
//! p  = −S₁ = h(ψ) cos δ − h'(ψ) sin δ
//! p₁ =  S₂ = h(ψ) cos δ + h'(ψ) sin δ
//! ```
//!
//! Angles are kept lifted: `reflect` returns `φ₁ ∈ (φ, φ + 2π)`.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Table, TWO_PI};

/// Incidence angles outside `[MIN_DELTA, π − MIN_DELTA]` are degenerate.
pub const MIN_DELTA: f64 = 1e-9;

/// Lines with `h(φ) − |p| ≤ GLANCING_GAP · h(φ)` are treated as tangent.
pub const GLANCING_GAP: f64 = 1e-12;

const SOLVER_MAX_ITER: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub p: f64,
    pub phi: f64,
}

impl PhasePoint {
    pub fn new(p: f64, phi: f64) -> Self {
        PhasePoint { p, phi }
    }

    /// The same line with the opposite orientation.
    pub fn reversed(&self) -> PhasePoint {
        PhasePoint {
            p: -self.p,
            phi: self.phi + PI,
        }
    }

    /// Euclidean distance in `(p, φ)` with `φ` compared modulo 2π.
    pub fn distance(&self, other: &PhasePoint) -> f64 {
        (self.p - other.p).hypot(angle_difference(self.phi, other.phi))
    }
}

/// Boundary point reached by a line and the angle it makes with the tangent there.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Incidence {
    pub psi: f64,
    pub delta: f64,
}

impl Incidence {
    pub fn new(psi: f64, delta: f64) -> Self {
        Incidence { psi, delta }
    }
}

/// Second partials of `S` at a chord `(φ, φ₁)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratingDerivatives {
    pub s11: f64,
    pub s22: f64,
    pub s12: f64,
}

/// `a − b` reduced to `(−π, π]`.
pub fn angle_difference(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TWO_PI);
    if d > PI {
        d - TWO_PI
    } else {
        d
    }
}

/// Angle reduced to `[0, 2π)`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TWO_PI);
    if w >= TWO_PI {
        0.0
    } else {
        w
    }
}

/// `S(φ, φ₁) = 2 h(ψ) sin δ`.
pub fn generating_function(table: &Table, phi: f64, phi1: f64) -> f64 {
    let psi = 0.5 * (phi + phi1);
    let delta = 0.5 * (phi1 - phi);
    2.0 * table.h(psi) * delta.sin()
}

pub fn s_derivatives(table: &Table, psi: f64, delta: f64) -> Result<GeneratingDerivatives> {
    let (s, c) = delta.sin_cos();
    if s < 1e-12 {
        return Err(Error::DegenerateChord(format!("sin δ = {s:e} at δ = {delta}")));
    }
    let (h, d1, d2) = table.support_eval(psi);
    Ok(GeneratingDerivatives {
        s11: 0.5 * (d2 - h) * s - d1 * c,
        s22: 0.5 * (d2 - h) * s + d1 * c,
        s12: 0.5 * (d2 + h) * s,
    })
}

fn check_delta(delta: f64) -> Result<()> {
    if (MIN_DELTA..=PI - MIN_DELTA).contains(&delta) {
        Ok(())
    } else {
        Err(Error::DegenerateChord(format!("incidence angle δ = {delta:e}")))
    }
}

/// The line arriving at boundary normal `ψ` with incidence angle `δ`.
pub fn incidence_to_chart(table: &Table, incidence: Incidence) -> Result<PhasePoint> {
    check_delta(incidence.delta)?;
    let (h, d1, _) = table.support_eval(incidence.psi);
    let (s, c) = incidence.delta.sin_cos();
    Ok(PhasePoint {
        p: h * c - d1 * s,
        phi: incidence.psi - incidence.delta,
    })
}

/// Incidence of the point where `z` meets the boundary (with lifted `ψ = φ + δ`).
pub fn chart_to_incidence(table: &Table, z: PhasePoint) -> Result<Incidence> {
    let delta = solve_incidence_angle(table, z)?;
    Ok(Incidence {
        psi: z.phi + delta,
        delta,
    })
}

/// Solve `p = h(φ+δ) cos δ − h'(φ+δ) sin δ` for `δ ∈ (0, π)`.
///
/// The right-hand side is strictly decreasing in `δ` with derivative
/// `−ρ(ψ) sin δ`, so the root is unique; a bracketed Newton iteration
/// falls back to bisection whenever a step leaves the bracket.
fn solve_incidence_angle(table: &Table, z: PhasePoint) -> Result<f64> {
    if !(z.p.is_finite() && z.phi.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite line ({}, {})", z.p, z.phi)));
    }
    let h_phi = table.h(z.phi);
    if h_phi - z.p.abs() <= GLANCING_GAP * h_phi {
        return Err(Error::DegenerateChord(format!(
            "line (p = {}, phi = {}) does not cross the table interior (h(phi) = {h_phi})",
            z.p, z.phi
        )));
    }
    let residual = |delta: f64| -> (f64, f64) {
        let [h, d1, d2] = table.support().eval(z.phi + delta);
        let (s, c) = delta.sin_cos();
        (h * c - d1 * s - z.p, -(h + d2) * s)
    };
    let mut lo = 0.5 * MIN_DELTA;
    let mut hi = PI - 0.5 * MIN_DELTA;
    if residual(lo).0 <= 0.0 || residual(hi).0 >= 0.0 {
        return Err(Error::RootNotBracketed { p: z.p, phi: z.phi });
    }
    let mut x = (z.p / h_phi).clamp(-1.0, 1.0).acos().clamp(lo, hi);
    let mut converged = false;
    for _ in 0..SOLVER_MAX_ITER {
        let (g, dg) = residual(x);
        if g == 0.0 {
            converged = true;
            break;
        }
        if g > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let mut next = x - g / dg;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let step = (next - x).abs();
        x = next;
        if step < 1e-14 || hi - lo < 1e-15 {
            converged = true;
            break;
        }
    }
    let g = residual(x).0;
    if !converged || g.abs() > 1e-10 * h_phi.max(1.0) {
        return Err(Error::NoConvergence {
            p: z.p,
            phi: z.phi,
            residual: g,
        });
    }
    check_delta(x)?;
    Ok(x)
}

/// The billiard map `T(p, φ) = (p₁, φ₁)`.
pub fn reflect(table: &Table, z: PhasePoint) -> Result<PhasePoint> {
    reflect_with_incidence(table, z).map(|(_, next)| next)
}

/// `T(z)` together with the incidence of `z` (the reflection point).
pub fn reflect_with_incidence(table: &Table, z: PhasePoint) -> Result<(Incidence, PhasePoint)> {
    let delta = solve_incidence_angle(table, z)?;
    let psi = z.phi + delta;
    let (h, d1, _) = table.support_eval(psi);
    let (s, c) = delta.sin_cos();
    Ok((
        Incidence { psi, delta },
        PhasePoint {
            p: h * c + d1 * s,
            phi: z.phi + 2.0 * delta,
        },
    ))
}

/// `T⁻¹(z) = R T R (z)` with `R` the orientation reversal. Returns the
/// preimage (lifted so that `φ₋₁ ∈ (φ − 2π, φ)`) and its incidence, i.e. the
/// point where `z` starts.
pub fn reflect_backward(table: &Table, z: PhasePoint) -> Result<(Incidence, PhasePoint)> {
    let image = reflect(table, z.reversed())?;
    let prev = PhasePoint {
        p: -image.p,
        phi: image.phi - 3.0 * PI,
    };
    let incidence = Incidence {
        psi: 0.5 * (z.phi + prev.phi),
        delta: 0.5 * (z.phi - prev.phi),
    };
    check_delta(incidence.delta)?;
    Ok((incidence, prev))
}

/// Consecutive lines `z₀ … z_n` with the incidence of each line; chord `k`
/// (from `z_k` to `z_{k+1}`) is `incidences[k]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitSegment {
    pub points: Vec<PhasePoint>,
    pub incidences: Vec<Incidence>,
}

impl OrbitSegment {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Incidences of the chords `z_k → z_{k+1}`.
    pub fn chords(&self) -> &[Incidence] {
        &self.incidences[..self.points.len().saturating_sub(1)]
    }
}

/// `z, T z, …, Tⁿ z`.
pub fn iterate(table: &Table, z: PhasePoint, n: usize) -> Result<OrbitSegment> {
    if n == 0 {
        return Err(Error::InvalidInput("orbit length must be at least 1".into()));
    }
    centered_segment(table, z, 0, n)
}

/// `T^{−back} z, …, z, …, T^{fwd} z`.
pub fn centered_segment(
    table: &Table,
    z: PhasePoint,
    back: usize,
    fwd: usize,
) -> Result<OrbitSegment> {
    let mut before = Vec::with_capacity(back);
    let mut current = z;
    for step in 0..back {
        let (incidence, prev) = reflect_backward(table, current).map_err(|e| e.at_step(step))?;
        before.push((prev, incidence));
        current = prev;
    }
    let mut points = Vec::with_capacity(back + fwd + 1);
    let mut incidences = Vec::with_capacity(back + fwd + 1);
    for (point, incidence) in before.into_iter().rev() {
        points.push(point);
        incidences.push(incidence);
    }
    let mut current = z;
    for step in 0..fwd {
        let (incidence, next) =
            reflect_with_incidence(table, current).map_err(|e| e.at_step(step))?;
        points.push(current);
        incidences.push(incidence);
        current = next;
    }
    let last = chart_to_incidence(table, current).map_err(|e| e.at_step(fwd))?;
    points.push(current);
    incidences.push(last);
    Ok(OrbitSegment { points, incidences })
}

/// Write `step,p,phi,psi,delta` rows with angles reduced to `[0, 2π)`.
pub fn write_orbit_csv<W: Write>(segment: &OrbitSegment, mut out: W) -> std::io::Result<()> {
    writeln!(out, "step,p,phi,psi,delta")?;
    for (step, (z, inc)) in segment.points.iter().zip(&segment.incidences).enumerate() {
        writeln!(
            out,
            "{step},{},{},{},{}",
            z.p,
            wrap_angle(z.phi),
            wrap_angle(inc.psi),
            inc.delta
        )?;
    }
    Ok(())
}

/// Derivatives of the chord length `L` between boundary points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChordPartials {
    pub length: f64,
    pub l1: f64,
    pub l2: f64,
    pub l11: f64,
    pub l22: f64,
    pub l12: f64,
}

/// `L(s, s₁) = |γ(s) − γ(s₁)|` and its partials in arclength.
pub fn chord_length_partials(table: &Table, s: f64, s1: f64) -> Result<ChordPartials> {
    let perimeter = table.metrics().perimeter;
    let gap = (s1 - s).rem_euclid(perimeter);
    if gap < 1e-12 * perimeter || perimeter - gap < 1e-12 * perimeter {
        return Err(Error::CoincidentPoints);
    }
    chord_partials_at(table, table.psi_at_arclength(s), table.psi_at_arclength(s1))
}

/// Same as [`chord_length_partials`] with endpoints given by normal angles.
pub fn chord_partials_at(table: &Table, psi0: f64, psi1: f64) -> Result<ChordPartials> {
    let g0 = table.boundary_point(psi0);
    let g1 = table.boundary_point(psi1);
    let dx = [g1[0] - g0[0], g1[1] - g0[1]];
    let length = dx[0].hypot(dx[1]);
    if length <= 1e-13 * table.metrics().h_max {
        return Err(Error::CoincidentPoints);
    }
    let u = [dx[0] / length, dx[1] / length];
    let u_perp = [-u[1], u[0]];
    let dot = |a: [f64; 2], b: [f64; 2]| a[0] * b[0] + a[1] * b[1];
    let frame = |psi: f64| {
        let (s, c) = psi.sin_cos();
        ([c, s], [-s, c])
    };
    let (n0, t0) = frame(psi0);
    let (n1, t1) = frame(psi1);
    let (rho0, rho1) = (table.rho(psi0), table.rho(psi1));
    let (q0, q1) = (dot(t0, u_perp), dot(t1, u_perp));
    Ok(ChordPartials {
        length,
        l1: -dot(u, t0),
        l2: dot(u, t1),
        l11: q0 * q0 / length + dot(u, n0) / rho0,
        l22: q1 * q1 / length - dot(u, n1) / rho1,
        l12: -q0 * q1 / length,
    })
}

/// Finite-difference Jacobian `∂(p₁, φ₁)/∂(p, φ)` of the map (fourth-order
/// central stencil with step `eps`).
pub fn map_jacobian(table: &Table, z: PhasePoint, eps: f64) -> Result<[[f64; 2]; 2]> {
    let image = |dp: f64, dphi: f64| reflect(table, PhasePoint::new(z.p + dp, z.phi + dphi));
    let column = |dp: f64, dphi: f64| -> Result<[f64; 2]> {
        let (p1, m1) = (image(dp, dphi)?, image(-dp, -dphi)?);
        let (p2, m2) = (image(2.0 * dp, 2.0 * dphi)?, image(-2.0 * dp, -2.0 * dphi)?);
        let stencil = |a1: f64, b1: f64, a2: f64, b2: f64| (8.0 * (a1 - b1) - (a2 - b2)) / (12.0 * eps);
        Ok([
            stencil(p1.p, m1.p, p2.p, m2.p),
            stencil(p1.phi, m1.phi, p2.phi, m2.phi),
        ])
    };
    let (dp, dphi) = (column(eps, 0.0)?, column(0.0, eps)?);
    Ok([[dp[0], dphi[0]], [dp[1], dphi[1]]])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle() -> Table {
        Table::circle(1.0).unwrap()
    }

    #[test]
    fn circle_s_derivatives_at_right_angle() {
        let d = s_derivatives(&circle(), 0.3, PI / 2.0).unwrap();
        assert!((d.s11 + 0.5).abs() < 1e-15);
        assert!((d.s22 + 0.5).abs() < 1e-15);
        assert!((d.s12 - 0.5).abs() < 1e-15);
        assert!(matches!(
            s_derivatives(&circle(), 0.3, 0.0),
            Err(Error::DegenerateChord(_))
        ));
    }

    #[test]
    fn circle_diameter_and_chord_reflections() {
        let t = circle();
        let z = reflect(&t, PhasePoint::new(0.0, 0.0)).unwrap();
        assert!(z.p.abs() < 1e-14 && (z.phi - PI).abs() < 1e-13);
        let z = reflect(&t, PhasePoint::new(0.5, 0.0)).unwrap();
        assert!((z.p - 0.5).abs() < 1e-14 && (z.phi - 2.0 * PI / 3.0).abs() < 1e-13);
    }

    #[test]
    fn circle_incidence_chart() {
        let t = circle();
        let inc = chart_to_incidence(&t, PhasePoint::new((PI / 3.0).cos(), 0.0)).unwrap();
        assert!((inc.psi - PI / 3.0).abs() < 1e-13);
        assert!((inc.delta - PI / 3.0).abs() < 1e-13);
        let back = incidence_to_chart(&t, inc).unwrap();
        assert!((back.p - 0.5).abs() < 1e-14 && back.phi.abs() < 1e-13);
    }

    #[test]
    fn circle_orbit_advances_by_constant_angle() {
        let seg = iterate(&circle(), PhasePoint::new(0.5, 0.0), 3).unwrap();
        assert_eq!(seg.len(), 4);
        for (k, z) in seg.points.iter().enumerate() {
            assert!((z.p - 0.5).abs() < 1e-13);
            assert!((z.phi - 2.0 * PI / 3.0 * k as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn glancing_and_outside_lines_are_rejected() {
        let t = circle();
        assert!(matches!(
            reflect(&t, PhasePoint::new(1.0 - 1e-15, 0.0)),
            Err(Error::DegenerateChord(_))
        ));
        assert!(reflect(&t, PhasePoint::new(1.5, 0.0)).is_err());
        assert!(matches!(
            incidence_to_chart(&t, Incidence::new(0.0, 1e-12)),
            Err(Error::DegenerateChord(_))
        ));
    }

    #[test]
    fn backward_step_inverts_forward_step() {
        let t = Table::ellipse(1.25, 1.0).unwrap();
        let z = PhasePoint::new(0.2, 0.7);
        let (inc, next) = reflect_with_incidence(&t, z).unwrap();
        let (inc_back, prev) = reflect_backward(&t, next).unwrap();
        assert!((prev.p - z.p).abs() < 1e-12 && (prev.phi - z.phi).abs() < 1e-12);
        assert!((inc_back.psi - inc.psi).abs() < 1e-12);
        assert!((inc_back.delta - inc.delta).abs() < 1e-12);
    }

    #[test]
    fn orbit_csv_has_header_and_rows() {
        let seg = iterate(&circle(), PhasePoint::new(0.0, 0.0), 2).unwrap();
        let mut buf = Vec::new();
        write_orbit_csv(&seg, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "step,p,phi,psi,delta");
        assert_eq!(lines.len(), 4);
    }

    #[test]
    fn antipodal_chord_on_unit_circle() {
        let t = circle();
        let c = chord_length_partials(&t, 0.0, PI).unwrap();
        assert!((c.length - 2.0).abs() < 1e-13);
        assert!(matches!(
            chord_length_partials(&t, 1.0, 1.0 + TWO_PI),
            Err(Error::CoincidentPoints)
        ));
    }
}
