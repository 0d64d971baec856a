//! Composite Gauss–Legendre quadrature.

use serde::{Deserialize, Serialize};

/// Nodes and weights of the `order`-point Gauss–Legendre rule on [-1, 1].
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss-Legendre order must be positive");
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess for the i-th root, then Newton.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p, dp)
}

/// Composite rule: `panels` equal sub-intervals with an `order`-point rule each.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quadrature {
    pub panels: usize,
    pub order: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature {
            panels: 256,
            order: 8,
        }
    }
}

impl Quadrature {
    pub fn new(panels: usize, order: usize) -> Self {
        Quadrature { panels, order }
    }

    /// Same rule with twice as many panels.
    pub fn refined(&self) -> Self {
        Quadrature {
            panels: 2 * self.panels,
            order: self.order,
        }
    }

    /// All (node, weight) pairs of the composite rule on [a, b].
    pub fn points(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        let rule = GaussLegendre::new(self.order);
        let width = (b - a) / self.panels as f64;
        let half = 0.5 * width;
        let mut out = Vec::with_capacity(self.panels * self.order);
        for panel in 0..self.panels {
            let mid = a + (panel as f64 + 0.5) * width;
            for (&x, &w) in rule.nodes().iter().zip(rule.weights()) {
                out.push((mid + half * x, w * half));
            }
        }
        out
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.points(a, b).into_iter().map(|(x, w)| w * f(x)).sum()
    }
}
