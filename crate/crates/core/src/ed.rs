//! Exact diagonalization of `H = Σ h_i + g Σ_{i<j} δ(x_i - x_j)` for a few
//! distinguishable particles, used to check the near-unitary predictions.
//!
//! The basis is the product of the lowest `M` trap states per particle, so
//! all `N!` members of a multiplet appear together. Convergence in `M` is
//! slow for contact interactions and is reported rather than corrected.

use std::collections::BTreeMap;
use std::ops::Range;

use faer::Mat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::irreps::character_table;
use crate::linalg::{symmetric_eigen, CompensatedSum};
use crate::perm::{factorial, Permutation};
use crate::slater::{all_bond_coefficients, enumerate_levels, CouplingOptions, LevelIndex};
use crate::trap::{eigenbasis, SingleParticleBasis, TrapSpec};
use crate::tunneling::{
    build_tunneling, cluster_values, spectral_report, IrrepContent, Parity, RateVector,
    ReportOptions, SpectralReport,
};

/// Largest product-basis dimension accepted for dense diagonalization.
pub const MAX_DIMENSION: usize = 10_000;
/// The cutoff must exceed the highest occupied state by this many states.
pub const CUTOFF_MARGIN: usize = 4;
pub const ED_PARTICLES: std::ops::RangeInclusive<usize> = 2..=3;
/// Default isolation requirement: the multiplet spread must stay below this
/// fraction of the gap to the adjacent levels.
pub const ISOLATION_FRACTION: f64 = 1.0;

const OVERLAP_TOL: f64 = 1e-10;
const LABEL_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdConfig {
    pub trap: TrapSpec,
    pub n_particles: usize,
    pub g: f64,
    /// Single-particle cutoff `M`; the product basis has `M^N` states.
    pub cutoff: usize,
    pub target: LevelIndex,
    /// Further cutoffs at which the comparison is repeated to estimate basis truncation error.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub systematic_cutoffs: Vec<usize>,
    #[serde(default = "default_isolation")]
    pub isolation_fraction: f64,
}

fn default_isolation() -> f64 {
    ISOLATION_FRACTION
}

impl EdConfig {
    pub fn new(trap: TrapSpec, target: LevelIndex, g: f64, cutoff: usize) -> Self {
        EdConfig {
            trap,
            n_particles: target.n_particles(),
            g,
            cutoff,
            target,
            systematic_cutoffs: Vec::new(),
            isolation_fraction: ISOLATION_FRACTION,
        }
    }

    pub fn dimension(&self) -> usize {
        self.cutoff.saturating_pow(self.n_particles as u32)
    }

    pub fn validate(&self) -> Result<()> {
        self.trap.validate()?;
        let n = self.n_particles;
        if !ED_PARTICLES.contains(&n) {
            return Err(Error::domain(format!(
                "exact diagonalization supports N in {ED_PARTICLES:?}, got {n}"
            )));
        }
        if self.target.n_particles() != n {
            return Err(Error::domain(format!(
                "target level {:?} has {} particles, config has {n}",
                self.target.quanta,
                self.target.n_particles()
            )));
        }
        if !(self.isolation_fraction > 0.0 && self.isolation_fraction <= 1.0) {
            return Err(Error::domain(format!(
                "isolation fraction must lie in (0, 1], got {}",
                self.isolation_fraction
            )));
        }
        if !(self.g.is_finite() && self.g >= 0.0) {
            return Err(Error::domain(format!(
                "g must be finite and non-negative, got {}",
                self.g
            )));
        }
        for m in std::iter::once(self.cutoff).chain(self.systematic_cutoffs.iter().copied()) {
            let need = self.target.max_quantum() + CUTOFF_MARGIN;
            if m < need {
                return Err(Error::domain(format!(
                    "cutoff M={m} must be at least {need} for level {:?}",
                    self.target.quanta
                )));
            }
            let dim = m.saturating_pow(n as u32);
            if dim > MAX_DIMENSION {
                return Err(Error::domain(format!(
                    "product basis dimension {m}^{n} = {dim} exceeds {MAX_DIMENSION}"
                )));
            }
        }
        Ok(())
    }

    fn with_cutoff(&self, cutoff: usize) -> EdConfig {
        EdConfig {
            cutoff,
            systematic_cutoffs: Vec::new(),
            ..self.clone()
        }
    }
}

/// `∫ φ_a φ_b φ_c φ_d dx` by the basis' own adaptive quadrature.
pub fn overlap4(
    basis: &SingleParticleBasis,
    a: usize,
    b: usize,
    c: usize,
    d: usize,
) -> Result<f64> {
    let upto = a.max(b).max(c).max(d);
    if upto > basis.n_max() {
        return Err(Error::domain(format!(
            "state {upto} outside basis 0..={}",
            basis.n_max()
        )));
    }
    let est = basis.integrate(upto, 1e-12, |x| {
        let mut v = vec![0.0; upto + 2];
        basis.values_upto(x, upto, &mut v);
        v[a] * v[b] * v[c] * v[d]
    });
    // Integrals that vanish by symmetry have no relative accuracy to speak of.
    match est {
        Ok(e) => Ok(e.value),
        Err(Error::Convergence { estimate, .. }) if estimate < OVERLAP_TOL => {
            let pts = basis.quadrature_points(upto, 4);
            let mut buf = vec![0.0; upto + 2];
            Ok(pts
                .into_iter()
                .map(|(x, w)| {
                    basis.values_upto(x, upto, &mut buf);
                    w * buf[a] * buf[b] * buf[c] * buf[d]
                })
                .collect::<CompensatedSum>()
                .value())
        }
        Err(e) => Err(e),
    }
}

/// All four-fold overlaps of states `0..m`.
#[derive(Clone, Debug)]
pub struct Overlap4Table {
    m: usize,
    data: Vec<f64>,
    /// Largest change between two quadrature refinements.
    pub error: f64,
}

impl Overlap4Table {
    pub fn new(basis: &SingleParticleBasis, m: usize) -> Result<Self> {
        if m == 0 || m > basis.len() {
            return Err(Error::domain(format!(
                "table size {m} outside basis of {} states",
                basis.len()
            )));
        }
        let coarse = Self::at_level(basis, m, 0);
        let fine = Self::at_level(basis, m, 1);
        let error = coarse
            .iter()
            .zip(&fine)
            .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()));
        if error > OVERLAP_TOL {
            return Err(Error::Convergence {
                estimate: error,
                tolerance: OVERLAP_TOL,
            });
        }
        Ok(Overlap4Table {
            m,
            data: fine,
            error,
        })
    }

    fn at_level(basis: &SingleParticleBasis, m: usize, level: u32) -> Vec<f64> {
        let upto = m - 1;
        let pts = basis.quadrature_points(upto, level);
        // values[n][p] = φ_n(x_p)
        let mut values = vec![vec![0.0; pts.len()]; m];
        let mut buf = vec![0.0; m + 1];
        for (p, &(x, _)) in pts.iter().enumerate() {
            basis.values_upto(x, upto, &mut buf);
            for n in 0..m {
                values[n][p] = buf[n];
            }
        }
        // Only sorted quadruples are integrated; the rest follow by symmetry.
        let pairs: Vec<(usize, usize)> = (0..m).flat_map(|a| (a..m).map(move |b| (a, b))).collect();
        let weighted: Vec<Vec<f64>> = pairs
            .iter()
            .map(|&(a, b)| {
                values[a]
                    .iter()
                    .zip(&values[b])
                    .zip(&pts)
                    .map(|((x, y), (_, w))| w * x * y)
                    .collect()
            })
            .collect();
        let sorted: Vec<[usize; 4]> = (0..m)
            .flat_map(|a| {
                (a..m)
                    .flat_map(move |b| (b..m).flat_map(move |c| (c..m).map(move |d| [a, b, c, d])))
            })
            .collect();
        let pair_index = |a: usize, b: usize| a * m - a * (a + 1) / 2 + b;
        let unique: Vec<f64> = sorted
            .par_iter()
            .map(|&[a, b, c, d]| {
                let wab = &weighted[pair_index(a, b)];
                wab.iter()
                    .zip(values[c].iter().zip(&values[d]))
                    .map(|(w, (x, y))| w * x * y)
                    .collect::<CompensatedSum>()
                    .value()
            })
            .collect();
        let mut data = vec![0.0; m * m * m * m];
        let perms = Permutation::all(4);
        for (q, v) in sorted.iter().zip(unique) {
            for p in &perms {
                let i = p.image();
                let (a, b, c, d) = (q[i[0]], q[i[1]], q[i[2]], q[i[3]]);
                data[((a * m + b) * m + c) * m + d] = v;
            }
        }
        data
    }

    pub fn size(&self) -> usize {
        self.m
    }

    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        let m = self.m;
        self.data[((a * m + b) * m + c) * m + d]
    }
}

/// The product-basis Hamiltonian split as `H = diag(E_0) + g V`.
pub struct EdSystem {
    pub n_particles: usize,
    pub cutoff: usize,
    pub basis: SingleParticleBasis,
    /// Non-interacting energy of each product state.
    pub one_body: Vec<f64>,
    /// Interaction matrix per unit `g`.
    pub interaction: Mat<f64>,
}

impl EdSystem {
    pub fn new(trap: &TrapSpec, n_particles: usize, cutoff: usize) -> Result<Self> {
        if cutoff < 2 {
            return Err(Error::domain("cutoff must be at least 2"));
        }
        let dim = cutoff.saturating_pow(n_particles as u32);
        if dim > MAX_DIMENSION {
            return Err(Error::domain(format!(
                "product basis dimension {dim} exceeds {MAX_DIMENSION}"
            )));
        }
        let basis = eigenbasis(trap, cutoff - 1)?;
        let table = Overlap4Table::new(&basis, cutoff)?;
        let m = cutoff;
        let n = n_particles;
        let one_body = (0..dim)
            .map(|i| digits(i, n, m).iter().map(|&a| basis.energies()[a]).sum())
            .collect();

        let rows: Vec<Vec<(usize, f64)>> = (0..dim)
            .into_par_iter()
            .map(|row| {
                let a = digits(row, n, m);
                let mut entries = Vec::new();
                for i in 0..n {
                    for j in i + 1..n {
                        let mut b = a.clone();
                        for bi in 0..m {
                            for bj in 0..m {
                                b[i] = bi;
                                b[j] = bj;
                                let v = table.get(a[i], a[j], bi, bj);
                                if v != 0.0 {
                                    entries.push((index_of(&b, m), v));
                                }
                            }
                        }
                    }
                }
                entries
            })
            .collect();
        let mut interaction = Mat::<f64>::zeros(dim, dim);
        for (row, entries) in rows.into_iter().enumerate() {
            for (col, v) in entries {
                interaction[(row, col)] += v;
            }
        }
        Ok(EdSystem {
            n_particles,
            cutoff,
            basis,
            one_body,
            interaction,
        })
    }

    pub fn dimension(&self) -> usize {
        self.one_body.len()
    }

    pub fn hamiltonian(&self, g: f64) -> Mat<f64> {
        let dim = self.dimension();
        Mat::from_fn(dim, dim, |i, j| {
            let d = if i == j { self.one_body[i] } else { 0.0 };
            d + g * self.interaction[(i, j)]
        })
    }

    /// Product-state index after relabelling particle `i` as `p(i)`.
    pub fn permute_index(&self, index: usize, p: &Permutation) -> usize {
        let a = digits(index, self.n_particles, self.cutoff);
        let mut b = vec![0; a.len()];
        for (i, &ai) in a.iter().enumerate() {
            b[p.apply(i)] = ai;
        }
        index_of(&b, self.cutoff)
    }

    /// Sign of a product state under reflection of a symmetric trap.
    pub fn reflection_sign(&self, index: usize) -> f64 {
        let s: usize = digits(index, self.n_particles, self.cutoff).iter().sum();
        if s.is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }
}

fn digits(mut index: usize, n: usize, m: usize) -> Vec<usize> {
    let mut d = vec![0; n];
    for slot in d.iter_mut().rev() {
        *slot = index % m;
        index /= m;
    }
    d
}

fn index_of(d: &[usize], m: usize) -> usize {
    d.iter().fold(0, |acc, &x| acc * m + x)
}

/// How many of the lowest eigenvalues [`ed_spectrum`] reports.
pub fn reported_count(n: usize) -> usize {
    2 * factorial(n) + 10
}

/// Lowest `2 N! + 10` eigenvalues, ascending.
pub fn ed_spectrum(config: &EdConfig) -> Result<Vec<f64>> {
    config.validate()?;
    let system = EdSystem::new(&config.trap, config.n_particles, config.cutoff)?;
    let eig = symmetric_eigen(&system.hamiltonian(config.g))?;
    Ok(eig
        .values
        .into_iter()
        .take(reported_count(config.n_particles))
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdCluster {
    /// `E_∞` plus the shifted tunneling eigenvalue.
    pub predicted_energy: f64,
    pub multiplicity: usize,
    pub ed_energies: Vec<f64>,
    pub irreps: IrrepContent,
    pub parity: Parity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultipletSample {
    pub g: f64,
    pub coefficients: Vec<f64>,
    /// Lowest eigenvalues of the full problem.
    pub raw_eigenvalues: Vec<f64>,
    /// ED multiplet matched state by state to `predicted` through symmetry labels.
    pub ed_energies: Vec<f64>,
    /// `E_∞` plus the shifted tunneling spectrum, ascending.
    pub predicted: Vec<f64>,
    pub spread: f64,
    pub isolation_gap: f64,
    pub centroid: f64,
    /// Distance of each state below the state matched to the highest prediction, in predicted order from the top.
    pub ed_gaps: Vec<f64>,
    pub predicted_gaps: Vec<f64>,
    /// Least-squares ratio of ED gaps to predicted gaps.
    pub scale_ratio: f64,
    /// `|ed/scale - predicted| / predicted` for each nonzero predicted gap.
    pub gap_errors: Vec<Option<f64>>,
    pub clusters: Vec<EdCluster>,
}

/// Comparison of the first-order slopes `dE/d(1/g)` across the g samples.
///
/// A truncated product basis shifts the effective `1/g` of the whole
/// multiplet by a cutoff-dependent constant; slopes are insensitive to it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeAnalysis {
    /// Fitted `dE/d(1/g)` per state, in predicted order (ascending).
    pub ed_slopes: Vec<f64>,
    pub predicted_slopes: Vec<f64>,
    /// `ed / predicted` per state; `None` where the prediction is zero.
    pub slope_ratios: Vec<Option<f64>>,
    /// Slope gaps below the top state, from the top.
    pub ed_gaps: Vec<f64>,
    pub predicted_gaps: Vec<f64>,
    pub scale_ratio: f64,
    pub gap_errors: Vec<Option<f64>>,
    /// Gap slopes in units of the mean coefficient at `g = 1`, after removing the fitted scale.
    pub fingerprint: Vec<f64>,
    pub predicted_fingerprint: Vec<f64>,
}

impl SlopeAnalysis {
    pub fn max_gap_error(&self) -> f64 {
        self.gap_errors
            .iter()
            .flatten()
            .fold(0.0_f64, |a, &b| a.max(b))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len() as f64;
    if x.len() < 2 || x.len() != y.len() {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Some(LinearFit {
        intercept: my - slope * mx,
        slope,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffSummary {
    pub cutoff: usize,
    /// Multiplet centroid extrapolated linearly in `1/g` to `1/g = 0`.
    pub centroid_intercept: Option<f64>,
    pub ed_gaps: Vec<Vec<f64>>,
    pub scale_ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Systematic {
    /// Ascending cutoffs, including the primary one.
    pub cutoffs: Vec<CutoffSummary>,
    /// Largest gap change between consecutive cutoffs, relative to the largest predicted gap.
    pub gap_changes: Vec<f64>,
    pub monotone: bool,
    /// Centroid intercepts extrapolated linearly in `1/√M` to `M → ∞`.
    pub unitary_limit: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultipletComparison {
    pub trap: TrapSpec,
    pub n_particles: usize,
    pub cutoff: usize,
    pub level: LevelIndex,
    pub e_infinity: f64,
    pub bond_convention: String,
    pub samples: Vec<MultipletSample>,
    /// Present with two or more g samples.
    pub slopes: Option<SlopeAnalysis>,
    pub centroid_fit: Option<LinearFit>,
    /// From the slope analysis when available, else the worst single sample.
    pub max_gap_error: f64,
    pub scale_deviation: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub systematic: Option<Systematic>,
}

/// Runs ED at each `g` and compares the target multiplet with the
/// first-order prediction from the boundary-integral coefficients.
pub fn multiplet_comparison(config: &EdConfig, g_samples: &[f64]) -> Result<MultipletComparison> {
    config.validate()?;
    if g_samples.is_empty() {
        return Err(Error::domain("no g samples given"));
    }
    if let Some(g) = g_samples.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
        return Err(Error::Isolation(format!(
            "the multiplet is degenerate with its neighbours at g = {g}; near-unitary samples need g > 0"
        )));
    }
    let primary = compare_at_cutoff(config, g_samples)?;
    let systematic = if config.systematic_cutoffs.is_empty() {
        None
    } else {
        let mut runs = vec![primary.clone()];
        for &m in &config.systematic_cutoffs {
            if m != config.cutoff {
                runs.push(compare_at_cutoff(&config.with_cutoff(m), g_samples)?);
            }
        }
        runs.sort_by_key(|r| r.cutoff);
        Some(systematic_from(&runs))
    };
    Ok(MultipletComparison {
        systematic,
        ..primary
    })
}

fn systematic_from(runs: &[MultipletComparison]) -> Systematic {
    let cutoffs: Vec<CutoffSummary> = runs
        .iter()
        .map(|r| CutoffSummary {
            cutoff: r.cutoff,
            centroid_intercept: r.centroid_fit.map(|f| f.intercept),
            ed_gaps: r.samples.iter().map(|s| s.ed_gaps.clone()).collect(),
            scale_ratio: r.slopes.as_ref().map(|s| s.scale_ratio),
        })
        .collect();
    let mut gap_changes = Vec::new();
    for pair in runs.windows(2) {
        let mut worst = 0.0_f64;
        for (a, b) in pair[0].samples.iter().zip(&pair[1].samples) {
            let scale = b.predicted_gaps.iter().fold(0.0_f64, |m, v| m.max(*v));
            for (x, y) in a.ed_gaps.iter().zip(&b.ed_gaps) {
                worst = worst.max((x - y).abs() / scale);
            }
        }
        gap_changes.push(worst);
    }
    let monotone = gap_changes.windows(2).all(|w| w[1] <= w[0]);
    let points: Vec<(f64, f64)> = cutoffs
        .iter()
        .filter_map(|c| {
            c.centroid_intercept
                .map(|e| (1.0 / (c.cutoff as f64).sqrt(), e))
        })
        .collect();
    let unitary_limit = if points.len() == cutoffs.len() {
        let (x, y): (Vec<f64>, Vec<f64>) = points.into_iter().unzip();
        linear_fit(&x, &y).map(|f| f.intercept)
    } else {
        None
    };
    Systematic {
        cutoffs,
        gap_changes,
        monotone,
        unitary_limit,
    }
}

fn compare_at_cutoff(config: &EdConfig, g_samples: &[f64]) -> Result<MultipletComparison> {
    let n = config.n_particles;
    let system = EdSystem::new(&config.trap, n, config.cutoff)?;
    let level = &config.target;
    let e_inf = level.energy(&system.basis)?;
    let others: Vec<f64> = enumerate_levels(&system.basis, n, 64)
        .into_iter()
        .filter(|l| l.quanta != level.quanta)
        .map(|l| l.energy(&system.basis))
        .collect::<Result<_>>()?;
    let opts = CouplingOptions::for_basis(&system.basis, n);
    let unit = all_bond_coefficients(level, &system.basis, 1.0, &opts)?;
    let unit_report = prediction(n, &unit.values)?;

    let mut samples = Vec::with_capacity(g_samples.len());
    for &g in g_samples {
        let coeffs = unit.rescaled(g)?;
        let report = prediction(n, &coeffs.values)?;
        samples.push(analyse(
            &system,
            g,
            config.isolation_fraction,
            &coeffs.values,
            &report,
            e_inf,
            &others,
        )?);
    }

    let inv_g: Vec<f64> = samples.iter().map(|s| 1.0 / s.g).collect();
    let centroids: Vec<f64> = samples.iter().map(|s| s.centroid).collect();
    let mean_unit = unit.values.iter().sum::<f64>() / unit.values.len() as f64;
    let slopes = slope_analysis(&samples, &unit_report.eigenvalues(), mean_unit);
    let (max_gap_error, scale_deviation) = match &slopes {
        Some(s) => (s.max_gap_error(), (s.scale_ratio - 1.0).abs()),
        None => (
            samples
                .iter()
                .flat_map(|s| s.gap_errors.iter().flatten())
                .fold(0.0_f64, |a, &b| a.max(b)),
            samples
                .iter()
                .fold(0.0_f64, |a, s| a.max((s.scale_ratio - 1.0).abs())),
        ),
    };
    Ok(MultipletComparison {
        trap: config.trap.clone(),
        n_particles: n,
        cutoff: config.cutoff,
        level: level.clone(),
        e_infinity: e_inf,
        bond_convention: unit.convention.clone(),
        samples,
        slopes,
        centroid_fit: linear_fit(&inv_g, &centroids),
        max_gap_error,
        scale_deviation,
        systematic: None,
    })
}

fn prediction(n: usize, coefficients: &[f64]) -> Result<SpectralReport> {
    let rates = RateVector::new(coefficients.to_vec())?;
    let t = build_tunneling(n, &rates)?;
    spectral_report(
        &t,
        &rates,
        ReportOptions {
            cluster_tol: None,
            with_shift: true,
        },
    )
}

/// Distances below the last entry, listed from the last entry down.
fn gaps_from_top(values: &[f64]) -> Vec<f64> {
    let top = values[values.len() - 1];
    values.iter().rev().map(|v| top - v).collect()
}

/// Least-squares scale of `ed` onto `predicted` and the per-entry relative residuals.
fn fit_gaps(ed: &[f64], predicted: &[f64]) -> (f64, Vec<Option<f64>>) {
    let num: f64 = ed.iter().zip(predicted).map(|(a, b)| a * b).sum();
    let den: f64 = predicted.iter().map(|b| b * b).sum();
    let scale = num / den;
    let tiny = 1e-9 * predicted.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
    let errors = ed
        .iter()
        .zip(predicted)
        .map(|(a, b)| (b.abs() > tiny).then(|| (a / scale - b).abs() / b.abs()))
        .collect();
    (scale, errors)
}

fn slope_analysis(
    samples: &[MultipletSample],
    unit_shifts: &[f64],
    unit: f64,
) -> Option<SlopeAnalysis> {
    if samples.len() < 2 {
        return None;
    }
    let x: Vec<f64> = samples.iter().map(|s| 1.0 / s.g).collect();
    let ed_slopes: Vec<f64> = (0..unit_shifts.len())
        .map(|i| {
            let y: Vec<f64> = samples.iter().map(|s| s.ed_energies[i]).collect();
            linear_fit(&x, &y).map(|f| f.slope)
        })
        .collect::<Option<_>>()?;
    let predicted_slopes = unit_shifts.to_vec();
    let tiny = 1e-9 * predicted_slopes.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
    let slope_ratios = ed_slopes
        .iter()
        .zip(&predicted_slopes)
        .map(|(e, p)| (p.abs() > tiny).then(|| e / p))
        .collect();
    let ed_gaps = gaps_from_top(&ed_slopes);
    let predicted_gaps = gaps_from_top(&predicted_slopes);
    let (scale_ratio, gap_errors) = fit_gaps(&ed_gaps, &predicted_gaps);
    Some(SlopeAnalysis {
        fingerprint: ed_gaps.iter().map(|a| a / (scale_ratio * unit)).collect(),
        predicted_fingerprint: predicted_gaps.iter().map(|b| b / unit).collect(),
        ed_slopes,
        predicted_slopes,
        slope_ratios,
        ed_gaps,
        predicted_gaps,
        scale_ratio,
        gap_errors,
    })
}

/// Picks the window of `size` consecutive levels whose spread is below
/// `fraction` of the gap to the adjacent levels and whose centroid is closer
/// to `target` than to any other unitary-limit energy.
pub fn extract_multiplet(
    values: &[f64],
    size: usize,
    target: f64,
    others: &[f64],
    fraction: f64,
) -> Result<Range<usize>> {
    if values.len() < size {
        return Err(Error::Isolation(format!(
            "only {} levels available, multiplet needs {size}",
            values.len()
        )));
    }
    let mut best: Option<(f64, Range<usize>)> = None;
    let mut nearest_failure: Option<(f64, String)> = None;
    for start in 0..=values.len() - size {
        let end = start + size;
        let spread = values[end - 1] - values[start];
        let below = if start > 0 {
            values[start] - values[start - 1]
        } else {
            f64::INFINITY
        };
        let above = if end < values.len() {
            values[end] - values[end - 1]
        } else {
            f64::INFINITY
        };
        let gap = below.min(above);
        let centroid = values[start..end].iter().sum::<f64>() / size as f64;
        let distance = (centroid - target).abs();
        let closest_other = others
            .iter()
            .map(|e| (centroid - e).abs())
            .fold(f64::INFINITY, f64::min);
        if closest_other <= distance {
            continue;
        }
        if spread >= fraction * gap {
            if nearest_failure.as_ref().is_none_or(|(d, _)| distance < *d) {
                nearest_failure = Some((
                    distance,
                    format!("levels {start}..{end} spread {spread:.4e} but the neighbouring gap is only {gap:.4e}"),
                ));
            }
            continue;
        }
        if best.as_ref().is_none_or(|(d, _)| distance < *d) {
            best = Some((distance, start..end));
        }
    }
    match best {
        Some((_, r)) => Ok(r),
        None => Err(Error::Isolation(match nearest_failure {
            Some((_, why)) => format!("no isolated multiplet near E = {target}: {why}"),
            None => format!("no multiplet of {size} levels near E = {target}"),
        })),
    }
}

struct LabelledGroup {
    energies: Vec<f64>,
    irreps: IrrepContent,
    parity: Parity,
}

#[allow(clippy::too_many_arguments)]
fn analyse(
    system: &EdSystem,
    g: f64,
    isolation: f64,
    coefficients: &[f64],
    report: &SpectralReport,
    e_inf: f64,
    others: &[f64],
) -> Result<MultipletSample> {
    let n = system.n_particles;
    let size = factorial(n);
    let predicted: Vec<f64> = report.eigenvalues().iter().map(|v| e_inf + v).collect();
    let eig = symmetric_eigen(&system.hamiltonian(g))?;
    let window = extract_multiplet(&eig.values, size, e_inf, others, isolation)?;
    let values = &eig.values[window.clone()];
    let spread = values[size - 1] - values[0];
    let below = if window.start > 0 {
        values[0] - eig.values[window.start - 1]
    } else {
        f64::INFINITY
    };
    let above = eig
        .values
        .get(window.end)
        .map_or(f64::INFINITY, |v| v - values[size - 1]);

    // Label the ED eigenspaces inside the window.
    let symmetric = system.basis.is_symmetric()
        && report
            .clusters
            .iter()
            .all(|c| matches!(c.parity, Parity::Even | Parity::Odd));
    let tol = 1e-8 * (1.0 + values.iter().fold(0.0_f64, |a, v| a.max(v.abs())));
    let mut groups = Vec::new();
    for range in cluster_values(values, tol)? {
        let vectors: Vec<Vec<f64>> = range
            .clone()
            .map(|j| {
                (0..system.dimension())
                    .map(|i| eig.vectors[(i, window.start + j)])
                    .collect()
            })
            .collect();
        groups.push(LabelledGroup {
            energies: values[range].to_vec(),
            irreps: ed_irreps(system, &vectors)?,
            parity: if symmetric {
                ed_parity(system, &vectors)?
            } else {
                Parity::NotApplicable
            },
        });
    }

    // Pair ED groups with predicted clusters carrying the same labels, in energy order.
    let mut used = vec![false; groups.len()];
    let mut clusters = Vec::with_capacity(report.clusters.len());
    let mut ed_energies = Vec::with_capacity(size);
    for c in &report.clusters {
        let parity = if symmetric {
            c.parity.clone()
        } else {
            Parity::NotApplicable
        };
        let slot = groups
            .iter()
            .enumerate()
            .position(|(k, gr)| !used[k] && gr.irreps == c.irreps && gr.parity == parity && gr.energies.len() == c.multiplicity)
            .ok_or_else(|| {
                let found: Vec<String> = groups.iter().map(|gr| format!("{:?}/{:?}", gr.irreps, gr.parity)).collect();
                Error::consistency(format!(
                    "irrep mismatch at g = {g}: no ED eigenspace carries {:?}/{parity:?} (found {})",
                    c.irreps,
                    found.join(", ")
                ))
            })?;
        used[slot] = true;
        ed_energies.extend_from_slice(&groups[slot].energies);
        clusters.push(EdCluster {
            predicted_energy: e_inf + c.eigenvalue,
            multiplicity: c.multiplicity,
            ed_energies: groups[slot].energies.clone(),
            irreps: c.irreps.clone(),
            parity,
        });
    }

    let ed_gaps = gaps_from_top(&ed_energies);
    let predicted_gaps = gaps_from_top(&predicted);
    let (scale_ratio, gap_errors) = fit_gaps(&ed_gaps, &predicted_gaps);
    Ok(MultipletSample {
        g,
        coefficients: coefficients.to_vec(),
        raw_eigenvalues: eig.values.iter().take(reported_count(n)).copied().collect(),
        centroid: values.iter().sum::<f64>() / size as f64,
        ed_energies,
        predicted,
        spread,
        isolation_gap: below.min(above),
        ed_gaps,
        predicted_gaps,
        scale_ratio,
        gap_errors,
        clusters,
    })
}

/// Irrep content of the span of `vectors` under particle relabelling.
pub fn ed_irreps(system: &EdSystem, vectors: &[Vec<f64>]) -> Result<IrrepContent> {
    let n = system.n_particles;
    let table =
        character_table(n).ok_or_else(|| Error::domain(format!("no character table for N={n}")))?;
    let chars: Vec<f64> = table
        .representatives()
        .iter()
        .map(|p| {
            vectors
                .iter()
                .map(|v| {
                    (0..v.len())
                        .map(|i| v[i] * v[system.permute_index(i, p)])
                        .collect::<CompensatedSum>()
                        .value()
                })
                .sum()
        })
        .collect();
    let order = table.group_order() as f64;
    let mut out = BTreeMap::new();
    for (label, chi) in &table.irreps {
        let m: f64 = chars
            .iter()
            .zip(chi)
            .zip(&table.class_sizes)
            .map(|((x, &c), &s)| s as f64 * x * c as f64)
            .sum::<f64>()
            / order;
        let rounded = m.round();
        if (m - rounded).abs() > LABEL_TOL || rounded < 0.0 {
            return Err(Error::consistency(format!(
                "ED states are not a representation: multiplicity of {label} is {m}"
            )));
        }
        if rounded > 0.0 {
            out.insert(label.clone(), rounded as usize);
        }
    }
    Ok(IrrepContent::Labeled(out))
}

fn ed_parity(system: &EdSystem, vectors: &[Vec<f64>]) -> Result<Parity> {
    let trace: f64 = vectors
        .iter()
        .map(|v| {
            v.iter()
                .enumerate()
                .map(|(i, x)| x * x * system.reflection_sign(i))
                .sum::<f64>()
        })
        .sum();
    let k = vectors.len() as f64;
    let even = (k + trace) / 2.0;
    if (even - even.round()).abs() > LABEL_TOL {
        return Err(Error::consistency(format!(
            "ED states are not parity eigenstates (trace {trace})"
        )));
    }
    let even = even.round() as usize;
    let odd = vectors.len() - even;
    Ok(match (even, odd) {
        (_, 0) => Parity::Even,
        (0, _) => Parity::Odd,
        (even, odd) => Parity::Mixed { even, odd },
    })
}
