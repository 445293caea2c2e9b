//! The fermionized multiplet wavefunction and bond coupling coefficients.
//!
//! At infinite repulsion a multiplet is built from one Slater determinant
//! `Φ(x) = det[φ_{n_i}(x_j)]` of distinct trap states. Its restriction to
//! any ordering domain has unit norm. To first order in `1/g` the level
//! splits through tunneling across the domain boundaries. The coefficient of
//! bond class `k` is
//!
//! ```text
//! t_k = (1/g) ∫_{y_1 < ... < y_{N-1}} |∂Φ/∂x_k|² at x = (y_1, .., y_k, y_k, .., y_{N-1})
//! ```
//!
//! i.e. the normal derivative of `Φ` on the surface where the particles at
//! ordered positions `k` and `k+1` meet. With the fully normalized
//! `Φ/√N!` this reads `(N!/g) ∫ |∂(Φ/√N!)|²`. In that convention the
//! well-basis energy shift of a state with domain amplitudes `a_w` is
//! `-Σ_edges t_k (a_w + a_w')²`, which is the tunneling operator of
//! [`crate::tunneling`] plus its antisymmetric shift.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{determinant_in_place, CompensatedSum};
use crate::perm::{factorial, Ordering};
use crate::quadrature::{integrate_ordered, AdaptiveOptions, Estimate};
use crate::trap::SingleParticleBasis;
use crate::tunneling::RateVector;

/// Particle numbers for which coupling coefficients are computed.
pub const COUPLING_PARTICLES: std::ops::RangeInclusive<usize> = 2..=4;

pub const BOND_CONVENTION: &str =
    "t[k] is the boundary integral on the surface where the particles at ordered \
positions k and k+1 coincide; it multiplies the edges that swap positions k and k+1";

/// A multiplet: `N` distinct single-particle quanta in increasing order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LevelIndex {
    pub quanta: Vec<usize>,
    /// Rank by unitary-limit energy, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
}

impl LevelIndex {
    pub fn new(quanta: Vec<usize>) -> Result<Self> {
        if quanta.len() < 2 {
            return Err(Error::domain("a multiplet needs at least two particles"));
        }
        if quanta.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::domain(format!(
                "quanta {quanta:?} must be strictly increasing (distinct states)"
            )));
        }
        Ok(LevelIndex { quanta, rank: None })
    }

    /// The lowest multiplet `{0, 1, .., N-1}`.
    pub fn ground(n: usize) -> Self {
        LevelIndex {
            quanta: (0..n).collect(),
            rank: Some(0),
        }
    }

    pub fn n_particles(&self) -> usize {
        self.quanta.len()
    }

    pub fn max_quantum(&self) -> usize {
        *self.quanta.last().expect("non-empty")
    }

    /// Unitary-limit energy `E_∞ = Σ ε_{n_i}`.
    pub fn energy(&self, basis: &SingleParticleBasis) -> Result<f64> {
        self.check(basis)?;
        Ok(self.quanta.iter().map(|&q| basis.energies()[q]).sum())
    }

    fn check(&self, basis: &SingleParticleBasis) -> Result<()> {
        if self.max_quantum() > basis.n_max() {
            return Err(Error::domain(format!(
                "level {:?} needs states up to {} but the basis stops at {}",
                self.quanta,
                self.max_quantum(),
                basis.n_max()
            )));
        }
        Ok(())
    }
}

fn combinations(pool: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    if k > pool {
        return out;
    }
    loop {
        out.push(cur.clone());
        let mut i = k;
        while i > 0 && cur[i - 1] == pool - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        cur[i - 1] += 1;
        for j in i..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// The lowest `count` multiplets available in `basis`, by ascending `E_∞`.
///
/// Ties (exact for box traps) are broken lexicographically on the quanta.
pub fn enumerate_levels(basis: &SingleParticleBasis, n: usize, count: usize) -> Vec<LevelIndex> {
    let e = basis.energies();
    let scale = e.iter().fold(1.0_f64, |a, b| a.max(b.abs()));
    let mut levels: Vec<(f64, Vec<usize>)> = combinations(basis.len(), n)
        .into_iter()
        .map(|q| (q.iter().map(|&i| e[i]).sum(), q))
        .collect();
    levels.sort_by(|(ea, qa), (eb, qb)| {
        if (ea - eb).abs() <= 1e-12 * scale * n as f64 {
            qa.cmp(qb)
        } else {
            ea.total_cmp(eb)
        }
    });
    levels
        .into_iter()
        .take(count)
        .enumerate()
        .map(|(rank, (_, quanta))| LevelIndex {
            quanta,
            rank: Some(rank),
        })
        .collect()
}

/// `det[φ_{n_i}(x_j)]`.
pub fn slater_eval(level: &LevelIndex, basis: &SingleParticleBasis, x: &[f64]) -> Result<f64> {
    level.check(basis)?;
    let n = level.n_particles();
    if x.len() != n {
        return Err(Error::domain(format!(
            "expected {n} coordinates, got {}",
            x.len()
        )));
    }
    let upto = level.max_quantum();
    let mut vals = vec![0.0; upto + 2];
    let mut m = vec![0.0; n * n];
    for (j, &xj) in x.iter().enumerate() {
        basis.values_upto(xj, upto, &mut vals);
        for (i, &q) in level.quanta.iter().enumerate() {
            m[i * n + j] = vals[q];
        }
    }
    Ok(determinant_in_place(&mut m, n))
}

/// `Φ = det[φ_{n_i}(x_j)]` for one multiplet in one basis.
#[derive(Clone, Copy, Debug)]
pub struct SlaterWavefunction<'a> {
    pub level: &'a LevelIndex,
    pub basis: &'a SingleParticleBasis,
}

impl<'a> SlaterWavefunction<'a> {
    pub fn new(level: &'a LevelIndex, basis: &'a SingleParticleBasis) -> Result<Self> {
        level.check(basis)?;
        Ok(SlaterWavefunction { level, basis })
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        slater_eval(self.level, self.basis, x)
    }

    /// `∫ |Φ|²` over the domain `x_1 < ... < x_N`.
    pub fn domain_norm(&self, opts: &AdaptiveOptions) -> Result<Estimate> {
        let n = self.level.n_particles();
        let (a, b) = self.basis.support(self.level.max_quantum());
        let f = |x: &[f64]| slater_eval(self.level, self.basis, x).map_or(f64::NAN, |v| v * v);
        integrate_ordered(n, a, b, opts, &f)
    }
}

/// Evaluates `|∂Φ/∂x_p|²` on the boundary between the domain `w` and the
/// domain with positions `k, k+1` swapped, where `p` is the particle at
/// position `k` (all 0-based).
struct BoundaryIntegrand<'a> {
    level: &'a LevelIndex,
    basis: &'a SingleParticleBasis,
    domain: Vec<usize>,
    position: usize,
}

impl BoundaryIntegrand<'_> {
    /// `y` holds the N-1 distinct ordered coordinates; `y[position]` is the meeting point.
    fn eval(&self, y: &[f64]) -> f64 {
        let n = self.level.n_particles();
        let upto = self.level.max_quantum();
        let mut vals = vec![0.0; upto + 3];
        let mut ders = vec![0.0; upto + 3];
        let mut m = [0.0; 64];
        let m = &mut m[..n * n];
        for (slot, &yj) in y.iter().enumerate() {
            self.basis
                .values_and_derivatives_upto(yj, upto, &mut vals, &mut ders);
            // Positions occupied by this coordinate.
            let positions: &[usize] = if slot < self.position {
                &[slot]
            } else if slot == self.position {
                &[slot, slot + 1]
            } else {
                &[slot + 1]
            };
            for &pos in positions {
                let col = self.domain[pos];
                let differentiate = pos == self.position;
                for (i, &q) in self.level.quanta.iter().enumerate() {
                    m[i * n + col] = if differentiate { ders[q] } else { vals[q] };
                }
            }
        }
        let d = determinant_in_place(m, n);
        d * d
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CouplingOptions {
    pub quadrature: AdaptiveOptions,
}

impl Default for CouplingOptions {
    fn default() -> Self {
        CouplingOptions {
            quadrature: AdaptiveOptions {
                order: 10,
                initial_panels: 4,
                max_panels: 64,
                rel_tol: 1e-9,
                abs_tol: 1e-300,
            },
        }
    }
}

impl CouplingOptions {
    /// Options suited to the basis: grid-sampled states are only piecewise
    /// smooth, so their integrals are converged to a looser tolerance.
    pub fn for_basis(basis: &SingleParticleBasis, n: usize) -> Self {
        let mut o = Self::default();
        if basis.is_grid() {
            o.quadrature.rel_tol = 1e-6;
        }
        if n >= 4 {
            o.quadrature.max_panels = 32;
        }
        o
    }
}

fn check_bond(level: &LevelIndex, k: usize) -> Result<()> {
    let n = level.n_particles();
    if !COUPLING_PARTICLES.contains(&n) {
        return Err(Error::domain(format!(
            "coupling coefficients are computed for N in {COUPLING_PARTICLES:?}, got N={n}"
        )));
    }
    if k == 0 || k >= n {
        return Err(Error::domain(format!(
            "bond class {k} outside 1..={}",
            n - 1
        )));
    }
    Ok(())
}

/// `∫ |∂Φ|²` over the class-`k` boundary of domain `w` (1-based `k`), without the `1/g` factor.
pub fn boundary_integral_at(
    level: &LevelIndex,
    basis: &SingleParticleBasis,
    w: &Ordering,
    k: usize,
    opts: &CouplingOptions,
) -> Result<Estimate> {
    level.check(basis)?;
    check_bond(level, k)?;
    let n = level.n_particles();
    if w.len() != n {
        return Err(Error::domain(
            "domain ordering has the wrong particle number",
        ));
    }
    let integrand = BoundaryIntegrand {
        level,
        basis,
        domain: w.seq().to_vec(),
        position: k - 1,
    };
    let (a, b) = basis.support(level.max_quantum());
    integrate_ordered(n - 1, a, b, &opts.quadrature, &|y: &[f64]| {
        integrand.eval(y)
    })
}

/// Boundary integral of class `k` on the boundary of the identity domain.
pub fn boundary_integral(
    level: &LevelIndex,
    basis: &SingleParticleBasis,
    k: usize,
    opts: &CouplingOptions,
) -> Result<Estimate> {
    let identity = Ordering::from_zero_based((0..level.n_particles()).collect())?;
    boundary_integral_at(level, basis, &identity, k, opts)
}

fn check_g(g: f64) -> Result<()> {
    if !(g.is_finite() && g > 0.0) {
        return Err(Error::domain(format!(
            "interaction strength g must be positive, got {g}"
        )));
    }
    Ok(())
}

/// Coupling coefficient `t_k` at interaction strength `g`.
pub fn bond_coefficient(
    level: &LevelIndex,
    basis: &SingleParticleBasis,
    k: usize,
    g: f64,
    opts: &CouplingOptions,
) -> Result<Estimate> {
    check_g(g)?;
    let est = boundary_integral(level, basis, k, opts)?;
    Ok(Estimate {
        value: est.value / g,
        error: est.error / g,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingCoefficients {
    pub level: LevelIndex,
    pub g: f64,
    /// `t[k-1]` for bond classes `k = 1..N-1`.
    pub values: Vec<f64>,
    pub quadrature_error: Vec<f64>,
    pub convention: String,
}

impl CouplingCoefficients {
    pub fn rates(&self) -> Result<RateVector> {
        RateVector::new(self.values.clone())
    }

    /// Coefficients at another interaction strength (exact `1/g` scaling).
    pub fn rescaled(&self, g: f64) -> Result<Self> {
        check_g(g)?;
        let f = self.g / g;
        Ok(CouplingCoefficients {
            level: self.level.clone(),
            g,
            values: self.values.iter().map(|v| v * f).collect(),
            quadrature_error: self.quadrature_error.iter().map(|v| v * f).collect(),
            convention: self.convention.clone(),
        })
    }
}

pub fn all_bond_coefficients(
    level: &LevelIndex,
    basis: &SingleParticleBasis,
    g: f64,
    opts: &CouplingOptions,
) -> Result<CouplingCoefficients> {
    check_g(g)?;
    level.check(basis)?;
    check_bond(level, 1)?;
    let n = level.n_particles();
    let mut values = Vec::with_capacity(n - 1);
    let mut errors = Vec::with_capacity(n - 1);
    for k in 1..n {
        let est = bond_coefficient(level, basis, k, g, opts)?;
        values.push(est.value);
        errors.push(est.error);
    }
    Ok(CouplingCoefficients {
        level: level.clone(),
        g,
        values,
        quadrature_error: errors,
        convention: BOND_CONVENTION.to_string(),
    })
}

/// Monte Carlo estimate of a boundary integral with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: u64,
}

const MC_CHUNK: u64 = 1 << 16;
const MC_FD_STEP: f64 = 1e-4;

/// Samples the class-`k` boundary integral (no `1/g`) independently of the
/// quadrature path: coordinates are drawn i.i.d. and sorted, and the normal
/// derivative is a central difference of [`slater_eval`].
///
/// Chunks use separate ChaCha streams of `seed`, so the estimate is
/// independent of the thread count.
pub fn monte_carlo_boundary_integral(
    level: &LevelIndex,
    basis: &SingleParticleBasis,
    k: usize,
    samples: u64,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    level.check(basis)?;
    check_bond(level, k)?;
    if samples < 2 {
        return Err(Error::domain("Monte Carlo needs at least two samples"));
    }
    let n = level.n_particles();
    let dims = n - 1;
    let (a, b) = basis.support(level.max_quantum());
    // Unbounded (harmonic) traps are sampled from a Gaussian wider than the states.
    let proposal = if basis.is_bounded() {
        Proposal::Uniform { a, b }
    } else {
        Proposal::Gaussian {
            centre: basis.centre(),
            sigma: (b - a) / 6.0,
        }
    };
    let ordered_factor = factorial(dims) as f64;
    let chunks = samples.div_ceil(MC_CHUNK);
    let partials: Vec<Result<(CompensatedSum, CompensatedSum)>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let count = MC_CHUNK.min(samples - c * MC_CHUNK);
            let mut s1 = CompensatedSum::default();
            let mut s2 = CompensatedSum::default();
            let mut y = vec![0.0; dims];
            let mut x = vec![0.0; n];
            for _ in 0..count {
                let mut density = ordered_factor;
                for yi in y.iter_mut() {
                    let (v, p) = proposal.draw(&mut rng);
                    *yi = v;
                    density *= p;
                }
                y.sort_by(f64::total_cmp);
                // x = (y_1, .., y_k, y_k, .., y_{N-1}); differentiate in the left one of the pair.
                for (pos, xp) in x.iter_mut().enumerate() {
                    *xp = if pos < k { y[pos] } else { y[pos - 1] };
                }
                let centre = x[k - 1];
                x[k - 1] = centre + MC_FD_STEP;
                let plus = slater_eval(level, basis, &x)?;
                x[k - 1] = centre - MC_FD_STEP;
                let minus = slater_eval(level, basis, &x)?;
                let d = (plus - minus) / (2.0 * MC_FD_STEP);
                let f = d * d / density;
                s1.add(f);
                s2.add(f * f);
            }
            Ok((s1, s2))
        })
        .collect();
    let mut s1 = CompensatedSum::default();
    let mut s2 = CompensatedSum::default();
    for p in partials {
        let (a1, a2) = p?;
        s1.add(a1.value());
        s2.add(a2.value());
    }
    let m = samples as f64;
    let mean = s1.value() / m;
    let var = (s2.value() / m - mean * mean).max(0.0) * m / (m - 1.0);
    Ok(MonteCarloEstimate {
        value: mean,
        std_error: (var / m).sqrt(),
        samples,
    })
}

enum Proposal {
    Uniform { a: f64, b: f64 },
    Gaussian { centre: f64, sigma: f64 },
}

impl Proposal {
    fn draw<R: Rng>(&self, rng: &mut R) -> (f64, f64) {
        match *self {
            Proposal::Uniform { a, b } => (rng.random_range(a..b), 1.0 / (b - a)),
            Proposal::Gaussian { centre, sigma } => {
                let v = Normal::new(centre, sigma)
                    .expect("positive width")
                    .sample(rng);
                let z = (v - centre) / sigma;
                let p = (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt());
                (v, p)
            }
        }
    }
}
