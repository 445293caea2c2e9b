//! Composite Gauss–Legendre quadrature on intervals and on ordered regions
//! `a < y_1 < y_2 < ... < y_m < b`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::CompensatedSum;

/// Nodes and weights on [-1, 1].
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
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                // Legendre recurrence for P_n(x) and P'_n(x).
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let pn = if n == 1 { x } else { p1 };
                let pn1 = if n == 1 { 1.0 } else { p0 };
                dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
                let dx = pn / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            if n == 1 {
                x = 0.0;
                dp = 1.0;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n == 1 {
            weights[0] = 2.0;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights of the composite rule with `panels` equal panels on [a, b].
    pub fn composite_points(&self, a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
        let h = (b - a) / panels as f64;
        let mut out = Vec::with_capacity(panels * self.order());
        for p in 0..panels {
            let mid = a + (p as f64 + 0.5) * h;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                out.push((mid + 0.5 * h * x, 0.5 * h * w));
            }
        }
        out
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, panels: usize, f: F) -> f64 {
        self.composite_points(a, b, panels)
            .into_iter()
            .map(|(x, w)| w * f(x))
            .collect::<CompensatedSum>()
            .value()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct AdaptiveOptions {
    pub order: usize,
    pub initial_panels: usize,
    pub max_panels: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        AdaptiveOptions {
            order: 10,
            initial_panels: 4,
            max_panels: 256,
            rel_tol: 1e-11,
            abs_tol: 1e-14,
        }
    }
}

/// Doubles the panel count until successive composite results agree.
///
/// The returned value is the finer of the final pair; the error is their difference.
pub fn adaptive<F>(opts: &AdaptiveOptions, mut rule: F) -> Result<Estimate>
where
    F: FnMut(usize) -> f64,
{
    let mut panels = opts.initial_panels.max(1);
    let mut coarse = rule(panels);
    let mut last_err = f64::INFINITY;
    while panels * 2 <= opts.max_panels {
        panels *= 2;
        let fine = rule(panels);
        let err = (fine - coarse).abs();
        let tol = opts.abs_tol.max(opts.rel_tol * fine.abs());
        if err <= tol {
            return Ok(Estimate {
                value: fine,
                error: err,
            });
        }
        coarse = fine;
        last_err = err;
    }
    Err(Error::Convergence {
        estimate: last_err,
        tolerance: opts.abs_tol.max(opts.rel_tol * coarse.abs()),
    })
}

pub fn integrate_interval<F>(a: f64, b: f64, opts: &AdaptiveOptions, f: F) -> Result<Estimate>
where
    F: Fn(f64) -> f64,
{
    let gl = GaussLegendre::new(opts.order);
    adaptive(opts, |panels| gl.integrate(a, b, panels, &f))
}

/// `∫_{a < y_1 < ... < y_m < b} f(y) dy` by nested composite Gauss–Legendre.
///
/// Each coordinate is integrated over `[y_{previous}, b]` with the same panel
/// count. The outermost level runs in parallel; partial sums are combined in
/// node order, so the result does not depend on the thread count.
pub fn ordered_region<F>(
    dims: usize,
    a: f64,
    b: f64,
    gl: &GaussLegendre,
    panels: usize,
    f: &F,
) -> f64
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    assert!(dims >= 1);
    let outer = gl.composite_points(a, b, panels);
    let parts: Vec<f64> = outer
        .par_iter()
        .map(|&(x, w)| {
            let mut y = vec![0.0; dims];
            y[0] = x;
            w * nested(1, dims, b, gl, panels, &mut y, f)
        })
        .collect();
    parts.into_iter().collect::<CompensatedSum>().value()
}

fn nested<F>(
    level: usize,
    dims: usize,
    b: f64,
    gl: &GaussLegendre,
    panels: usize,
    y: &mut [f64],
    f: &F,
) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    if level == dims {
        return f(y);
    }
    let lower = y[level - 1];
    let mut acc = CompensatedSum::default();
    for (x, w) in gl.composite_points(lower, b, panels) {
        y[level] = x;
        acc.add(w * nested(level + 1, dims, b, gl, panels, y, f));
    }
    acc.value()
}

pub fn integrate_ordered<F>(
    dims: usize,
    a: f64,
    b: f64,
    opts: &AdaptiveOptions,
    f: &F,
) -> Result<Estimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let gl = GaussLegendre::new(opts.order);
    adaptive(opts, |panels| ordered_region(dims, a, b, &gl, panels, f))
}
