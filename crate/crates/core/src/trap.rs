//! Single-particle eigenstates of 1D traps.
//!
//! Harmonic (`V = x²/2`) and box (`0 ≤ x ≤ L`, hard walls) traps are analytic.
//! Custom traps are sampled on a uniform grid with hard walls at both grid
//! ends and solved with second-order central finite differences; the grid
//! eigenvectors are interpolated by natural cubic splines.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, tridiagonal_lowest, CompensatedSum};
use crate::quadrature::{Estimate, GaussLegendre};

/// Amplitude below which a state is treated as vanished when truncating the domain.
pub const SUPPORT_CUTOFF: f64 = 1e-10;

/// Step of the five-point derivative used for grid-sampled states.
pub const FD_STEP: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TrapSpec {
    Harmonic,
    Box {
        #[serde(rename = "L")]
        length: f64,
    },
    Custom {
        x: Vec<f64>,
        #[serde(rename = "V")]
        v: Vec<f64>,
    },
}

impl TrapSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            TrapSpec::Harmonic => Ok(()),
            TrapSpec::Box { length } => {
                if !(length.is_finite() && *length > 0.0) {
                    return Err(Error::domain(format!(
                        "box length must be positive, got {length}"
                    )));
                }
                Ok(())
            }
            TrapSpec::Custom { x, v } => {
                if x.len() != v.len() {
                    return Err(Error::domain(format!(
                        "grid has {} points but {} potential values",
                        x.len(),
                        v.len()
                    )));
                }
                if x.len() < 5 {
                    return Err(Error::domain("custom grid needs at least 5 points"));
                }
                if x.iter().chain(v).any(|a| !a.is_finite()) {
                    return Err(Error::domain("custom grid contains non-finite values"));
                }
                let dx = (x[x.len() - 1] - x[0]) / (x.len() - 1) as f64;
                if dx <= 0.0 {
                    return Err(Error::domain("custom grid must be strictly increasing"));
                }
                for w in x.windows(2) {
                    let step = w[1] - w[0];
                    if step <= 0.0 {
                        return Err(Error::domain("custom grid must be strictly increasing"));
                    }
                    if (step - dx).abs()
                        > 1e-12 * dx.max(x[0].abs().max(x[x.len() - 1].abs()) * 1e-3)
                    {
                        return Err(Error::domain(format!(
                            "custom grid is not uniform: step {step} vs {dx}"
                        )));
                    }
                }
                Ok(())
            }
        }
    }
}

/// Natural cubic spline on a uniform grid.
#[derive(Clone, Debug)]
struct CubicSpline {
    x0: f64,
    h: f64,
    y: Vec<f64>,
    second: Vec<f64>,
}

impl CubicSpline {
    fn new(x0: f64, h: f64, y: Vec<f64>) -> Self {
        let n = y.len();
        let mut second = vec![0.0; n];
        if n > 2 {
            // M_{i-1} + 4 M_i + M_{i+1} = 6 (y_{i+1} - 2 y_i + y_{i-1}) / h², M_0 = M_{n-1} = 0.
            let m = n - 2;
            let rhs: Vec<f64> = (1..n - 1)
                .map(|i| 6.0 * (y[i + 1] - 2.0 * y[i] + y[i - 1]) / (h * h))
                .collect();
            let mut c = vec![0.0; m];
            let mut d = vec![0.0; m];
            c[0] = 1.0 / 4.0;
            d[0] = rhs[0] / 4.0;
            for i in 1..m {
                let denom = 4.0 - c[i - 1];
                c[i] = 1.0 / denom;
                d[i] = (rhs[i] - d[i - 1]) / denom;
            }
            second[m] = d[m - 1];
            for i in (0..m - 1).rev() {
                second[i + 1] = d[i] - c[i] * second[i + 2];
            }
        }
        CubicSpline { x0, h, y, second }
    }

    fn eval(&self, x: f64) -> f64 {
        let n = self.y.len();
        let s = (x - self.x0) / self.h;
        if !(0.0..=(n - 1) as f64).contains(&s) {
            return 0.0;
        }
        let i = (s.floor() as usize).min(n - 2);
        let t = s - i as f64;
        let u = 1.0 - t;
        u * self.y[i]
            + t * self.y[i + 1]
            + self.h * self.h / 6.0
                * ((u * u * u - u) * self.second[i] + (t * t * t - t) * self.second[i + 1])
    }
}

#[derive(Clone, Debug)]
enum States {
    Harmonic,
    Box {
        length: f64,
    },
    Grid {
        x0: f64,
        x1: f64,
        splines: Vec<CubicSpline>,
    },
}

/// Eigenenergies `ε_0 < ε_1 < ... < ε_{n_max}` and evaluable eigenfunctions.
#[derive(Clone, Debug)]
pub struct SingleParticleBasis {
    states: States,
    energies: Vec<f64>,
    symmetric: bool,
}

/// `ψ_0..=ψ_upto` at `x` by the normalized Hermite-function recurrence.
///
/// The polynomial part is rescaled whenever it grows past 1e150 and the
/// accumulated log-scale is folded into the Gaussian factor, so large `n`
/// and `|x|` neither overflow nor lose the ratio between neighbours.
pub fn hermite_functions(x: f64, upto: usize, out: &mut [f64]) {
    const BIG: f64 = 1e150;
    let gauss_log = -0.5 * x * x;
    let mut log_scale = 0.0_f64;
    let mut prev = 0.0;
    let mut cur = std::f64::consts::PI.powf(-0.25);
    out[0] = cur * gauss_log.exp();
    for n in 0..upto {
        let next =
            (2.0 / (n as f64 + 1.0)).sqrt() * x * cur - (n as f64 / (n as f64 + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > BIG {
            cur /= BIG;
            prev /= BIG;
            log_scale += BIG.ln();
        }
        out[n + 1] = cur * (gauss_log + log_scale).exp();
    }
}

impl SingleParticleBasis {
    pub fn n_max(&self) -> usize {
        self.energies.len() - 1
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Whether the states are spline interpolants of a sampled potential.
    pub fn is_grid(&self) -> bool {
        matches!(self.states, States::Grid { .. })
    }

    /// Whether the states vanish outside a finite interval (hard walls).
    pub fn is_bounded(&self) -> bool {
        !matches!(self.states, States::Harmonic)
    }

    /// Whether the trap is reflection symmetric about its centre.
    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Interval on which the basis lives; the harmonic trap reports its
    /// truncated support for the full basis.
    pub fn domain(&self) -> (f64, f64) {
        match &self.states {
            States::Harmonic => self.support(self.n_max()),
            States::Box { length } => (0.0, *length),
            States::Grid { x0, x1, .. } => (*x0, *x1),
        }
    }

    /// Reflection centre for symmetric traps.
    pub fn centre(&self) -> f64 {
        let (a, b) = match &self.states {
            States::Harmonic => return 0.0,
            _ => self.domain(),
        };
        0.5 * (a + b)
    }

    fn check_index(&self, n: usize) -> Result<()> {
        if n > self.n_max() {
            return Err(Error::domain(format!(
                "state {n} outside basis 0..={}",
                self.n_max()
            )));
        }
        Ok(())
    }

    pub fn evaluate(&self, n: usize, x: f64) -> Result<f64> {
        self.check_index(n)?;
        let mut v = vec![0.0; n + 2];
        self.values_upto(x, n, &mut v);
        Ok(v[n])
    }

    pub fn derivative(&self, n: usize, x: f64) -> Result<f64> {
        self.check_index(n)?;
        let mut v = vec![0.0; n + 2];
        let mut d = vec![0.0; n + 2];
        self.values_and_derivatives_upto(x, n, &mut v, &mut d);
        Ok(d[n])
    }

    /// Fills `out[0..=upto]` with `φ_n(x)`; `out` needs `upto + 2` slots.
    pub fn values_upto(&self, x: f64, upto: usize, out: &mut [f64]) {
        match &self.states {
            States::Harmonic => hermite_functions(x, upto, out),
            States::Box { length } => {
                let inside = (0.0..=*length).contains(&x);
                let norm = (2.0 / length).sqrt();
                for (n, o) in out.iter_mut().enumerate().take(upto + 1) {
                    let k = (n + 1) as f64 * std::f64::consts::PI / length;
                    *o = if inside { norm * (k * x).sin() } else { 0.0 };
                }
            }
            States::Grid { splines, .. } => {
                for (o, s) in out.iter_mut().zip(splines).take(upto + 1) {
                    *o = s.eval(x);
                }
            }
        }
    }

    /// Values and first derivatives of states `0..=upto`. Slices need `upto + 2` slots.
    pub fn values_and_derivatives_upto(
        &self,
        x: f64,
        upto: usize,
        val: &mut [f64],
        der: &mut [f64],
    ) {
        match &self.states {
            States::Harmonic => {
                hermite_functions(x, upto + 1, val);
                for n in 0..=upto {
                    let down = if n > 0 {
                        (n as f64 / 2.0).sqrt() * val[n - 1]
                    } else {
                        0.0
                    };
                    der[n] = down - ((n as f64 + 1.0) / 2.0).sqrt() * val[n + 1];
                }
            }
            States::Box { length } => {
                let inside = (0.0..=*length).contains(&x);
                let norm = (2.0 / length).sqrt();
                for n in 0..=upto {
                    let k = (n + 1) as f64 * std::f64::consts::PI / length;
                    let (s, c) = (k * x).sin_cos();
                    val[n] = if inside { norm * s } else { 0.0 };
                    der[n] = if inside { norm * k * c } else { 0.0 };
                }
            }
            States::Grid { splines, .. } => {
                let h = FD_STEP;
                for n in 0..=upto {
                    let s = &splines[n];
                    val[n] = s.eval(x);
                    der[n] = (-s.eval(x + 2.0 * h) + 8.0 * s.eval(x + h) - 8.0 * s.eval(x - h)
                        + s.eval(x - 2.0 * h))
                        / (12.0 * h);
                }
            }
        }
    }

    /// Interval outside which every state `0..=upto` is below [`SUPPORT_CUTOFF`].
    pub fn support(&self, upto: usize) -> (f64, f64) {
        match &self.states {
            States::Harmonic => {
                let mut buf = vec![0.0; upto + 2];
                let mut x = 60.0_f64;
                while x > 0.0 {
                    hermite_functions(x, upto, &mut buf);
                    if buf[..=upto].iter().any(|v| v.abs() >= SUPPORT_CUTOFF) {
                        break;
                    }
                    x -= 0.25;
                }
                let edge = (x + 0.25).ceil();
                (-edge, edge)
            }
            _ => self.domain(),
        }
    }

    /// Quadrature points on the support of states `0..=upto`, refined `2^level` times.
    ///
    /// Grid states are piecewise cubic, so each grid cell gets its own
    /// Gauss–Legendre rule (8 nodes integrate products of four splines exactly).
    pub fn quadrature_points(&self, upto: usize, level: u32) -> Vec<(f64, f64)> {
        match &self.states {
            States::Grid { x0, splines, .. } => {
                let gl = GaussLegendre::new(4 << level.min(3));
                let s = &splines[0];
                let cells = s.y.len() - 1;
                let mut pts = Vec::with_capacity(cells * gl.order());
                for c in 0..cells {
                    let a = x0 + c as f64 * s.h;
                    pts.extend(gl.composite_points(a, a + s.h, 1));
                }
                pts
            }
            States::Box { length } => {
                // Products of four sines oscillate up to 2(upto+1) times across the box.
                let gl = GaussLegendre::new(16);
                gl.composite_points(0.0, *length, (2 * (upto + 1)).max(4) << level)
            }
            States::Harmonic => {
                let (a, b) = self.support(upto);
                let gl = GaussLegendre::new(16);
                let base = ((b - a) * (1.0 + upto as f64 / 8.0)).ceil().max(4.0) as usize;
                gl.composite_points(a, b, base << level)
            }
        }
    }

    /// `∫ f(x) dx` over the support of states `0..=upto`, refining until two
    /// successive rules agree to `rel_tol`.
    pub fn integrate<F: Fn(f64) -> f64>(
        &self,
        upto: usize,
        rel_tol: f64,
        f: F,
    ) -> Result<Estimate> {
        let rule = |level| {
            self.quadrature_points(upto, level)
                .into_iter()
                .map(|(x, w)| w * f(x))
                .collect::<CompensatedSum>()
                .value()
        };
        let mut coarse = rule(0);
        let mut err = f64::INFINITY;
        for level in 1..=4 {
            let fine = rule(level);
            err = (fine - coarse).abs();
            if err <= rel_tol * fine.abs().max(1e-300) || err < 1e-15 {
                return Ok(Estimate {
                    value: fine,
                    error: err,
                });
            }
            coarse = fine;
        }
        Err(Error::Convergence {
            estimate: err,
            tolerance: rel_tol * coarse.abs(),
        })
    }

    /// `⟨φ_m|φ_n⟩` for all pairs, by the basis' own quadrature.
    pub fn overlap_matrix(&self) -> Vec<Vec<f64>> {
        gram(self, self.n_max())
    }
}

fn gram(basis: &SingleParticleBasis, upto: usize) -> Vec<Vec<f64>> {
    let pts = basis.quadrature_points(upto, 1);
    let mut vals = vec![0.0; upto + 2];
    let mut g = vec![vec![CompensatedSum::default(); upto + 1]; upto + 1];
    for (x, w) in pts {
        basis.values_upto(x, upto, &mut vals);
        for m in 0..=upto {
            for n in m..=upto {
                g[m][n].add(w * vals[m] * vals[n]);
            }
        }
    }
    let mut out = vec![vec![0.0; upto + 1]; upto + 1];
    for m in 0..=upto {
        for n in m..=upto {
            out[m][n] = g[m][n].value();
            out[n][m] = out[m][n];
        }
    }
    out
}

fn is_symmetric_grid(x: &[f64], v: &[f64]) -> bool {
    let n = x.len();
    let centre = 0.5 * (x[0] + x[n - 1]);
    let scale = v.iter().fold(1.0_f64, |a, b| a.max(b.abs()));
    (0..n).all(|i| {
        let j = n - 1 - i;
        ((x[i] - centre) + (x[j] - centre)).abs() < 1e-9 * (x[n - 1] - x[0])
            && (v[i] - v[j]).abs() < 1e-12 * scale
    })
}

/// Eigenenergies and eigenfunctions of states `0..=n_max`.
pub fn eigenbasis(trap: &TrapSpec, n_max: usize) -> Result<SingleParticleBasis> {
    trap.validate()?;
    if n_max < 1 {
        return Err(Error::domain("n_max must be at least 1"));
    }
    match trap {
        TrapSpec::Harmonic => Ok(SingleParticleBasis {
            states: States::Harmonic,
            energies: (0..=n_max).map(|n| n as f64 + 0.5).collect(),
            symmetric: true,
        }),
        TrapSpec::Box { length } => Ok(SingleParticleBasis {
            states: States::Box { length: *length },
            energies: (0..=n_max)
                .map(|n| {
                    let k = (n + 1) as f64 * std::f64::consts::PI;
                    k * k / (2.0 * length * length)
                })
                .collect(),
            symmetric: true,
        }),
        TrapSpec::Custom { x, v } => grid_basis(x, v, n_max),
    }
}

fn grid_basis(x: &[f64], v: &[f64], n_max: usize) -> Result<SingleParticleBasis> {
    let n = x.len();
    let h = (x[n - 1] - x[0]) / (n - 1) as f64;
    let interior = n - 2;
    let count = n_max + 1;
    if interior < 10 * count {
        return Err(Error::Resolution(format!(
            "{interior} interior grid points cannot resolve {count} states"
        )));
    }
    let kinetic = 1.0 / (h * h);
    let diag: Vec<f64> = (1..n - 1).map(|i| kinetic + v[i]).collect();
    let off = vec![-0.5 * kinetic; interior - 1];
    let (energies, vectors) = tridiagonal_lowest(&diag, &off, count)?;

    let wall = v[0].min(v[n - 1]);
    if energies[n_max] >= wall {
        return Err(Error::Resolution(format!(
            "state {n_max} at energy {:.6} is not bound below the grid-edge potential {wall:.6}",
            energies[n_max]
        )));
    }
    let allowed = v.iter().filter(|&&vi| vi < energies[n_max]).count();
    if allowed < 10 * count {
        return Err(Error::Resolution(format!(
            "only {allowed} grid points in the classically allowed region of state {n_max}; need {}",
            10 * count
        )));
    }
    for w in energies.windows(2) {
        if w[1] - w[0] <= 1e-10 * w[1].abs().max(1.0) {
            return Err(Error::Resolution("grid spectrum is degenerate".into()));
        }
    }

    let with_walls = |vec: &[f64]| {
        let mut y = Vec::with_capacity(n);
        y.push(0.0);
        y.extend_from_slice(vec);
        y.push(0.0);
        y
    };
    let raw: Vec<Vec<f64>> = vectors.iter().map(|vec| with_walls(vec)).collect();
    let provisional = SingleParticleBasis {
        states: States::Grid {
            x0: x[0],
            x1: x[n - 1],
            splines: raw
                .iter()
                .map(|y| CubicSpline::new(x[0], h, y.clone()))
                .collect(),
        },
        energies: energies.clone(),
        symmetric: false,
    };

    // Symmetric orthonormalization of the interpolants in the continuum inner product.
    let g = gram(&provisional, n_max);
    let gm = Mat::from_fn(count, count, |i, j| g[i][j]);
    let eig = symmetric_eigen(&gm)?;
    if eig.values[0] <= 0.0 {
        return Err(Error::Resolution(
            "interpolated grid states are linearly dependent".into(),
        ));
    }
    let inv_sqrt = Mat::from_fn(count, count, |i, j| {
        (0..count)
            .map(|k| eig.vectors[(i, k)] * eig.vectors[(j, k)] / eig.values[k].sqrt())
            .sum::<f64>()
    });
    let mut splines = Vec::with_capacity(count);
    for m in 0..count {
        let mut y: Vec<f64> = (0..n)
            .map(|i| (0..count).map(|k| inv_sqrt[(m, k)] * raw[k][i]).sum())
            .collect();
        if leftmost_antinode(&y) < 0.0 {
            y.iter_mut().for_each(|a| *a = -*a);
        }
        splines.push(CubicSpline::new(x[0], h, y));
    }
    Ok(SingleParticleBasis {
        states: States::Grid {
            x0: x[0],
            x1: x[n - 1],
            splines,
        },
        energies,
        symmetric: is_symmetric_grid(x, v),
    })
}

/// Value at the first local maximum of `|y|` that exceeds 1% of the peak.
fn leftmost_antinode(y: &[f64]) -> f64 {
    let peak = y.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
    for i in 1..y.len() - 1 {
        let a = y[i].abs();
        if a >= 0.01 * peak && a >= y[i - 1].abs() && a >= y[i + 1].abs() {
            return y[i];
        }
    }
    y[y.len() / 2]
}

/// Uniform grid `[a, b]` with `points` samples of `v`.
pub fn sample_trap<F: Fn(f64) -> f64>(a: f64, b: f64, points: usize, v: F) -> TrapSpec {
    let h = (b - a) / (points - 1) as f64;
    let x: Vec<f64> = (0..points).map(|i| a + i as f64 * h).collect();
    let v = x.iter().map(|&xi| v(xi)).collect();
    TrapSpec::Custom { x, v }
}
