//! Real trigonometric series `f(x) = Σ_k a_k cos kx + b_k sin kx` with exact derivatives.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierSeries {
    cos: Vec<f64>,
    sin: Vec<f64>,
    /// 2 when every odd coefficient vanishes, letting evaluation skip them.
    #[serde(skip, default = "default_stride")]
    stride: usize,
}

fn default_stride() -> usize {
    1
}

impl FourierSeries {
    /// Coefficients indexed by harmonic number. `sin[0]` is ignored.
    pub fn new(mut cos: Vec<f64>, mut sin: Vec<f64>) -> Self {
        let len = cos.len().max(sin.len()).max(1);
        cos.resize(len, 0.0);
        sin.resize(len, 0.0);
        sin[0] = 0.0;
        while cos.len() > 1 && cos[cos.len() - 1] == 0.0 && sin[sin.len() - 1] == 0.0 {
            cos.pop();
            sin.pop();
        }
        let even_only = cos
            .iter()
            .zip(&sin)
            .enumerate()
            .all(|(k, (a, b))| k % 2 == 0 || (*a == 0.0 && *b == 0.0));
        FourierSeries {
            cos,
            sin,
            stride: if even_only { 2 } else { 1 },
        }
    }

    pub fn constant(c: f64) -> Self {
        FourierSeries::new(vec![c], vec![0.0])
    }

    pub fn cos_coeffs(&self) -> &[f64] {
        &self.cos
    }

    pub fn sin_coeffs(&self) -> &[f64] {
        &self.sin
    }

    pub fn max_harmonic(&self) -> usize {
        self.cos.len() - 1
    }

    /// Recompute the evaluation stride, e.g. after deserialization.
    pub(crate) fn normalized(self) -> Self {
        FourierSeries::new(self.cos, self.sin)
    }

    pub fn value(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        self.for_each_term(x, |_, a, b, c, s| acc += a * c + b * s);
        acc
    }

    /// `[f, f', f'']` at `x`.
    pub fn eval(&self, x: f64) -> [f64; 3] {
        let mut out = [0.0; 3];
        self.for_each_term(x, |k, a, b, c, s| {
            let even = a * c + b * s;
            let odd = b * c - a * s;
            out[0] += even;
            out[1] += k * odd;
            out[2] -= k * k * even;
        });
        out
    }

    /// `[f, f', f'', f''']` at `x`.
    pub fn eval3(&self, x: f64) -> [f64; 4] {
        let mut out = [0.0; 4];
        self.for_each_term(x, |k, a, b, c, s| {
            let even = a * c + b * s;
            let odd = b * c - a * s;
            out[0] += even;
            out[1] += k * odd;
            out[2] -= k * k * even;
            out[3] -= k * k * k * odd;
        });
        out
    }

    /// `∫_0^x f(t) dt`, exact.
    pub fn integral_from_zero(&self, x: f64) -> f64 {
        let mut acc = self.cos[0] * x;
        self.for_each_term(x, |k, a, b, c, s| {
            if k > 0.0 {
                acc += (a * s + b * (1.0 - c)) / k;
            }
        });
        acc
    }

    #[inline]
    fn for_each_term<F: FnMut(f64, f64, f64, f64, f64)>(&self, x: f64, mut f: F) {
        let stride = self.stride;
        let (s1, c1) = (stride as f64 * x).sin_cos();
        let (mut c, mut s) = (1.0, 0.0);
        let mut k = 0;
        while k < self.cos.len() {
            f(k as f64, self.cos[k], self.sin[k], c, s);
            let cn = c * c1 - s * s1;
            s = s * c1 + c * s1;
            c = cn;
            k += stride;
        }
    }

    /// Trigonometric interpolant of a π-periodic function sampled at
    /// `x_j = j π / n`, `j = 0..n`. Only even harmonics appear. Coefficients
    /// with magnitude at most `drop_below` are set to zero; `max_harmonic`
    /// caps the retained harmonic number.
    pub fn from_pi_periodic_samples(
        samples: &[f64],
        drop_below: f64,
        max_harmonic: Option<usize>,
    ) -> Self {
        let n = samples.len();
        assert!(n >= 2, "need at least two samples");
        let mut buf: Vec<Complex<f64>> = samples.iter().map(|&v| Complex::new(v, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        // Keep m strictly below the Nyquist index.
        let m_max = (n - 1) / 2;
        let mut cos = vec![0.0; 2 * m_max + 1];
        let mut sin = vec![0.0; 2 * m_max + 1];
        let scale = 1.0 / n as f64;
        cos[0] = buf[0].re * scale;
        for m in 1..=m_max {
            let k = 2 * m;
            if max_harmonic.is_some_and(|cap| k > cap) {
                break;
            }
            let a = 2.0 * buf[m].re * scale;
            let b = -2.0 * buf[m].im * scale;
            cos[k] = if a.abs() > drop_below { a } else { 0.0 };
            sin[k] = if b.abs() > drop_below { b } else { 0.0 };
        }
        FourierSeries::new(cos, sin)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn derivatives_are_exact_for_a_single_harmonic() {
        let f = FourierSeries::new(vec![0.0, 0.0, 0.0, 2.0], vec![0.0, 0.0, 0.0, 0.5]);
        let x = 0.37;
        let [v, d1, d2, d3] = f.eval3(x);
        assert!((v - (2.0 * (3.0 * x).cos() + 0.5 * (3.0 * x).sin())).abs() < 1e-15);
        assert!((d1 - (-6.0 * (3.0 * x).sin() + 1.5 * (3.0 * x).cos())).abs() < 1e-14);
        assert!((d2 + 9.0 * v).abs() < 1e-13);
        assert!((d3 + 9.0 * d1).abs() < 1e-13);
    }

    #[test]
    fn interpolation_recovers_even_series() {
        let target = FourierSeries::new(
            vec![1.0, 0.0, 0.1, 0.0, -0.02, 0.0, 0.003],
            vec![0.0, 0.0, 0.05, 0.0, 0.0, 0.0, 0.001],
        );
        let n = 64;
        let samples: Vec<f64> = (0..n).map(|j| target.value(j as f64 * PI / n as f64)).collect();
        let fit = FourierSeries::from_pi_periodic_samples(&samples, 1e-15, None);
        for i in 0..50 {
            let x = 0.123 * i as f64;
            let a = target.eval(x);
            let b = fit.eval(x);
            for c in 0..3 {
                assert!((a[c] - b[c]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn antiderivative_matches_quadrature() {
        let f = FourierSeries::new(vec![1.0, 0.0, 0.2], vec![0.0, 0.0, -0.1]);
        let x = 2.4;
        let q = crate::quadrature::Quadrature::default().integrate(0.0, x, |t| f.value(t));
        assert!((f.integral_from_zero(x) - q).abs() < 1e-13);
    }
}
