//! The invariant measure `dμ = ρ(ψ) sin δ dψ dδ` and estimates of the
//! measure of the maximizing part of B.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fourcurve::DProfile;
use crate::geometry::{Table, TWO_PI};
use crate::phasemap::{incidence_to_chart, map_jacobian, reflect_with_incidence, wrap_angle, Incidence};
use crate::variational::{classify_horizons, ClassifiedPoint, Verdict};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Quadrature,
    MonteCarlo,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureEstimate {
    pub value: f64,
    /// Quadrature refinement difference or Monte-Carlo standard error.
    pub error: f64,
    pub method: Method,
    pub horizon: Option<usize>,
    pub samples: usize,
    pub seed: Option<u64>,
}

/// `μ(B) = ∫ ρ(ψ) 2 cos d(ψ) dψ` with the table's quadrature; the error is
/// the change under panel doubling.
pub fn measure_of_b(table: &Table, profile: &DProfile) -> MeasureEstimate {
    let integrand = |psi: f64| 2.0 * table.rho(psi) * profile.d(psi).cos();
    let q = table.quadrature();
    let value = q.integrate(0.0, TWO_PI, integrand);
    let refined = q.refined().integrate(0.0, TWO_PI, integrand);
    MeasureEstimate {
        value,
        error: (refined - value).abs(),
        method: Method::Quadrature,
        horizon: None,
        samples: q.panels * q.order,
        seed: None,
    }
}

/// How points of B are chosen. Both samplers work in `(ψ, t)` with
/// `δ = d(ψ) + t (π − 2d(ψ))`, `t ∈ [0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Sampler {
    /// Cell midpoints of an `n_psi × n_delta` product grid.
    Grid { n_psi: usize, n_delta: usize },
    /// One uniformly jittered point per cell of a grid with about
    /// `samples` cells, each cell with its own random stream.
    Stratified { samples: usize, seed: u64 },
}

impl Sampler {
    /// `(n_psi, n_delta)`.
    pub fn grid_shape(&self) -> (usize, usize) {
        match *self {
            Sampler::Grid { n_psi, n_delta } => (n_psi, n_delta),
            Sampler::Stratified { samples, .. } => {
                let n_delta = ((samples as f64 / 2.0).sqrt().round() as usize).max(1);
                (samples.div_ceil(n_delta).max(1), n_delta)
            }
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match *self {
            Sampler::Grid { .. } => None,
            Sampler::Stratified { seed, .. } => Some(seed),
        }
    }
}

/// A point of B with its importance weight `ρ sin δ (π − 2d)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedSample {
    pub incidence: Incidence,
    pub weight: f64,
}

pub fn sample_region(table: &Table, profile: &DProfile, sampler: &Sampler) -> Vec<WeightedSample> {
    let (n_psi, n_delta) = sampler.grid_shape();
    (0..n_psi * n_delta)
        .into_par_iter()
        .map(|cell| {
            let (i, j) = (cell / n_delta, cell % n_delta);
            let (u, v) = match *sampler {
                Sampler::Grid { .. } => (0.5, 0.5),
                Sampler::Stratified { seed, .. } => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(cell as u64);
                    (rng.gen::<f64>(), rng.gen::<f64>())
                }
            };
            let psi = TWO_PI * (i as f64 + u) / n_psi as f64;
            let t = (j as f64 + v) / n_delta as f64;
            let d = profile.d(psi);
            let width = PI - 2.0 * d;
            let delta = d + t * width;
            WeightedSample {
                incidence: Incidence::new(psi, delta),
                weight: table.rho(psi) * delta.sin() * width,
            }
        })
        .collect()
}

/// Classify every sample at each horizon, in sample order.
pub fn classify_samples(
    table: &Table,
    samples: &[WeightedSample],
    horizons: &[usize],
) -> Vec<Vec<ClassifiedPoint>> {
    samples
        .par_iter()
        .map(|s| {
            let classes = match incidence_to_chart(table, s.incidence) {
                Ok(z) => classify_horizons(table, z, horizons),
                Err(_) => horizons
                    .iter()
                    .map(|&n| crate::variational::MaxClassification {
                        verdict: Verdict::Undecided,
                        horizon: n,
                        first_bad_index: None,
                    })
                    .collect(),
            };
            classes
                .into_iter()
                .map(|classification| ClassifiedPoint {
                    incidence: s.incidence,
                    classification,
                })
                .collect()
        })
        .collect()
}

/// Estimates at one horizon. `mu_m + mu_delta + undecided_mass = μ(B)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HorizonEstimate {
    pub horizon: usize,
    pub mu_m: MeasureEstimate,
    pub mu_delta: MeasureEstimate,
    pub undecided_mass: f64,
    pub not_maximizing_count: usize,
    pub undecided_count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureSweep {
    pub mu_b: MeasureEstimate,
    pub estimates: Vec<HorizonEstimate>,
    /// `points[k]` holds the classification of sample `k` at every horizon.
    pub points: Vec<Vec<ClassifiedPoint>>,
}

/// Weighted fraction `Σ w x / Σ w` and its ratio-estimator standard error.
fn weighted_fraction(weights: &[f64], hits: impl Fn(usize) -> bool) -> (f64, f64) {
    let n = weights.len();
    let total: f64 = weights.iter().sum();
    if n == 0 || total <= 0.0 {
        return (0.0, 0.0);
    }
    let r = weights
        .iter()
        .enumerate()
        .filter(|(k, _)| hits(*k))
        .map(|(_, w)| w)
        .fold(0.0, |acc, w| acc + w)
        / total;
    if n < 2 {
        return (r, 0.0);
    }
    let mean_w = total / n as f64;
    let ss: f64 = weights
        .iter()
        .enumerate()
        .map(|(k, w)| {
            let x = if hits(k) { 1.0 } else { 0.0 };
            (w * (x - r)).powi(2)
        })
        .sum();
    (r, (ss / (n as f64 * (n as f64 - 1.0))).sqrt() / mean_w)
}

pub fn estimate_m_measure_sweep(
    table: &Table,
    profile: &DProfile,
    horizons: &[usize],
    sampler: &Sampler,
) -> MeasureSweep {
    let mu_b = measure_of_b(table, profile);
    let samples = sample_region(table, profile, sampler);
    let points = classify_samples(table, &samples, horizons);
    let weights: Vec<f64> = samples.iter().map(|s| s.weight).collect();
    let estimates = horizons
        .iter()
        .enumerate()
        .map(|(h, &horizon)| {
            let verdict = |k: usize| points[k][h].classification.verdict;
            let (f_m, se_m) = weighted_fraction(&weights, |k| verdict(k) == Verdict::Maximizing);
            let (f_d, se_d) = weighted_fraction(&weights, |k| verdict(k) == Verdict::NotMaximizing);
            let (f_u, _) = weighted_fraction(&weights, |k| verdict(k) == Verdict::Undecided);
            let estimate = |f: f64, se: f64| MeasureEstimate {
                value: mu_b.value * f,
                error: mu_b.value * se + mu_b.error * f,
                method: Method::MonteCarlo,
                horizon: Some(horizon),
                samples: samples.len(),
                seed: sampler.seed(),
            };
            HorizonEstimate {
                horizon,
                mu_m: estimate(f_m, se_m),
                mu_delta: estimate(f_d, se_d),
                undecided_mass: mu_b.value * f_u,
                not_maximizing_count: (0..samples.len())
                    .filter(|&k| verdict(k) == Verdict::NotMaximizing)
                    .count(),
                undecided_count: (0..samples.len())
                    .filter(|&k| verdict(k) == Verdict::Undecided)
                    .count(),
            }
        })
        .collect();
    MeasureSweep {
        mu_b,
        estimates,
        points,
    }
}

/// `(μ_M, μ_Δ)` at a single horizon.
pub fn estimate_m_measure(
    table: &Table,
    profile: &DProfile,
    horizon: usize,
    sampler: &Sampler,
) -> (MeasureEstimate, MeasureEstimate) {
    let sweep = estimate_m_measure_sweep(table, profile, &[horizon], sampler);
    (sweep.estimates[0].mu_m, sweep.estimates[0].mu_delta)
}

/// The on-disk estimate report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    #[serde(rename = "mu_B")]
    pub mu_b: f64,
    #[serde(rename = "mu_M")]
    pub mu_m: f64,
    #[serde(rename = "mu_Delta")]
    pub mu_delta: f64,
    pub undecided_mass: f64,
    #[serde(rename = "N")]
    pub horizon: usize,
    pub samples: usize,
    pub seed: Option<u64>,
    pub stderr: f64,
}

impl EstimateReport {
    pub fn new(mu_b: &MeasureEstimate, estimate: &HorizonEstimate) -> Self {
        EstimateReport {
            mu_b: mu_b.value,
            mu_m: estimate.mu_m.value,
            mu_delta: estimate.mu_delta.value,
            undecided_mass: estimate.undecided_mass,
            horizon: estimate.horizon,
            samples: estimate.mu_delta.samples,
            seed: estimate.mu_delta.seed,
            stderr: estimate.mu_delta.error,
        }
    }
}

/// A rectangle in the incidence chart, `ψ` read modulo `2π`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseBox {
    pub psi_min: f64,
    pub psi_max: f64,
    pub delta_min: f64,
    pub delta_max: f64,
}

impl PhaseBox {
    pub fn contains(&self, inc: Incidence) -> bool {
        let psi = wrap_angle(inc.psi);
        psi >= self.psi_min && psi <= self.psi_max && inc.delta >= self.delta_min && inc.delta <= self.delta_max
    }

    /// Exact `μ(box) = (cos δ_min − cos δ_max)(s(ψ_max) − s(ψ_min))`.
    pub fn measure(&self, table: &Table) -> f64 {
        (self.delta_min.cos() - self.delta_max.cos())
            * (table.arclength(self.psi_max) - table.arclength(self.psi_min))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxCheck {
    pub phase_box: PhaseBox,
    pub exact: f64,
    /// Monte-Carlo estimate of `μ(T⁻¹ box)`.
    pub preimage: f64,
    pub stderr: f64,
}

impl BoxCheck {
    pub fn sigmas(&self) -> f64 {
        if self.stderr > 0.0 {
            (self.preimage - self.exact).abs() / self.stderr
        } else if self.preimage == self.exact {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreservationReport {
    pub boxes: Vec<BoxCheck>,
    pub jacobian_points: usize,
    pub max_det_error: f64,
}

/// Draws `samples` lines from `μ` for every box, counts those whose image
/// lands in the box, and checks `det DT = 1` at `samples.min(1000)` points.
pub fn check_measure_preservation(
    table: &Table,
    boxes: &[PhaseBox],
    samples: usize,
    seed: u64,
) -> PreservationReport {
    let perimeter = table.metrics().perimeter;
    let total = 2.0 * perimeter;
    let draw = |rng: &mut ChaCha8Rng| {
        let psi = table.psi_at_arclength(rng.gen::<f64>() * perimeter);
        let delta = (1.0 - 2.0 * rng.gen::<f64>()).acos();
        Incidence::new(psi, delta)
    };
    let checks = boxes
        .iter()
        .enumerate()
        .map(|(b, phase_box)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let draws: Vec<Incidence> = (0..samples).map(|_| draw(&mut rng)).collect();
            let hits = draws
                .par_iter()
                .filter(|inc| {
                    incidence_to_chart(table, **inc)
                        .and_then(|z| reflect_with_incidence(table, z))
                        .and_then(|(_, next)| crate::phasemap::chart_to_incidence(table, next))
                        .map(|next| phase_box.contains(next))
                        .unwrap_or(false)
                })
                .count();
            let f = hits as f64 / samples.max(1) as f64;
            BoxCheck {
                phase_box: *phase_box,
                exact: phase_box.measure(table),
                preimage: total * f,
                stderr: total * (f * (1.0 - f) / samples.max(1) as f64).sqrt(),
            }
        })
        .collect();

    let jacobian_points = samples.min(1000);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX);
    let points: Vec<Incidence> = (0..jacobian_points)
        .map(|_| Incidence::new(TWO_PI * rng.gen::<f64>(), 0.05 + (PI - 0.1) * rng.gen::<f64>()))
        .collect();
    let max_det_error = points
        .par_iter()
        .filter_map(|inc| {
            let z = incidence_to_chart(table, *inc).ok()?;
            let j = map_jacobian(table, z, 1e-6).ok()?;
            Some((j[0][0] * j[1][1] - j[0][1] * j[1][0] - 1.0).abs())
        })
        .reduce(|| 0.0, f64::max);
    PreservationReport {
        boxes: checks,
        jacobian_points,
        max_det_error,
    }
}
