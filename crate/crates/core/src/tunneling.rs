//! Tunneling operators on the graph of orderings and their labelled spectra.
//!
//! Two orderings are joined by a bond of class `k` when they differ by
//! exchanging the particles at positions `k` and `k+1`. The tunneling operator
//! is `T = -Σ_k t_k Σ_{edges e of class k} P̂(e)`, where `P̂(e)` swaps the two
//! wells of `e` and fixes all others. Every well has exactly one bond of each
//! class, so `Σ_{e in k} P̂(e) = A_k + (N!/2 - 1) I` with `A_k` the class-k
//! adjacency matrix.

use std::collections::BTreeMap;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::irreps::character_table;
use crate::linalg::{dot, max_abs, max_asymmetry, symmetric_eigen};
use crate::perm::{
    all_orderings, factorial, hexagon_ordering, Ordering, Permutation, WellOperator,
    DEFAULT_MAX_PARTICLES, HEXAGON_LETTERS,
};

/// Largest N whose tunneling operator is assembled and diagonalized densely.
pub const DENSE_CEILING: usize = 5;

/// Relative tolerance used to decide whether a rate vector is palindromic.
pub const PALINDROME_RTOL: f64 = 1e-8;

/// Residual allowed when checking that a cluster is an invariant subspace.
pub const INVARIANCE_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BondEdge {
    pub a: Ordering,
    pub b: Ordering,
    /// Bond class, 1-based: the swapped positions are `bond` and `bond + 1`.
    pub bond: usize,
}

/// All edges of the ordering graph, each listed once with `a` the lower index.
pub fn bond_edges(n: usize) -> Result<Vec<BondEdge>> {
    let wells = all_orderings(n)?;
    let mut edges = Vec::with_capacity(wells.len() * (n - 1) / 2);
    for a in &wells {
        for k in 0..n - 1 {
            let b = a.swap_adjacent(k);
            if b.index() > a.index() {
                edges.push(BondEdge {
                    a: a.clone(),
                    b,
                    bond: k + 1,
                });
            }
        }
    }
    Ok(edges)
}

/// Wells, edges and (for N = 3) the hexagon letters of the ordering graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderingGraph {
    pub n_particles: usize,
    /// Lexicographic, so entry `i` is the well with index `i`.
    pub wells: Vec<Ordering>,
    pub edges: Vec<BondEdge>,
    /// Number of edges in each bond class, class 1 first.
    pub class_sizes: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub letters: Option<BTreeMap<char, Ordering>>,
}

pub fn ordering_graph(n: usize) -> Result<OrderingGraph> {
    let wells = all_orderings(n)?;
    let edges = bond_edges(n)?;
    let mut class_sizes = vec![0; n - 1];
    for e in &edges {
        class_sizes[e.bond - 1] += 1;
    }
    let letters = (n == 3).then(|| {
        HEXAGON_LETTERS
            .iter()
            .map(|(c, _)| (*c, hexagon_ordering(*c).expect("letter in table")))
            .collect()
    });
    Ok(OrderingGraph {
        n_particles: n,
        wells,
        edges,
        class_sizes,
        letters,
    })
}

/// Per-bond-class tunneling rates `t_1..t_{N-1}`, in energy units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct RateVector(Vec<f64>);

impl RateVector {
    pub fn new(rates: Vec<f64>) -> Result<Self> {
        if rates.is_empty() {
            return Err(Error::domain("rate vector must have at least one entry"));
        }
        if let Some(bad) = rates.iter().find(|t| !t.is_finite() || **t < 0.0) {
            return Err(Error::domain(format!(
                "tunneling rates must be finite and >= 0, got {bad}"
            )));
        }
        Ok(RateVector(rates))
    }

    /// N equal rates `t` for an N-particle system.
    pub fn uniform(n_particles: usize, t: f64) -> Result<Self> {
        Self::new(vec![t; n_particles.saturating_sub(1)])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn n_particles(&self) -> usize {
        self.0.len() + 1
    }

    /// Rate of bond class `k` (1-based).
    pub fn bond(&self, k: usize) -> f64 {
        self.0[k - 1]
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    /// `t[k] = t[N-k]` for all k, to [`PALINDROME_RTOL`] relative.
    pub fn is_palindromic(&self) -> bool {
        let scale = self.0.iter().fold(0.0_f64, |a, &b| a.max(b));
        self.0
            .iter()
            .zip(self.0.iter().rev())
            .all(|(a, b)| (a - b).abs() <= PALINDROME_RTOL * scale)
    }
}

impl TryFrom<Vec<f64>> for RateVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        RateVector::new(v)
    }
}

impl From<RateVector> for Vec<f64> {
    fn from(r: RateVector) -> Self {
        r.0
    }
}

fn check_rates(n: usize, rates: &RateVector) -> Result<()> {
    if rates.values().len() + 1 != n {
        return Err(Error::domain(format!(
            "N={n} needs {} rates, got {}",
            n.saturating_sub(1),
            rates.values().len()
        )));
    }
    Ok(())
}

/// Dense `N! × N!` tunneling operator.
pub fn build_tunneling(n: usize, rates: &RateVector) -> Result<Mat<f64>> {
    if !(2..=DENSE_CEILING).contains(&n) {
        return Err(Error::domain(format!(
            "dense tunneling operator supports 2 <= N <= {DENSE_CEILING}, got {n}"
        )));
    }
    check_rates(n, rates)?;
    let dim = factorial(n);
    let non_incident = (dim / 2 - 1) as f64;
    let diagonal = -rates.total() * non_incident;
    let mut t = Mat::zeros(dim, dim);
    for i in 0..dim {
        t[(i, i)] = diagonal;
    }
    for e in bond_edges(n)? {
        let (i, j) = (e.a.index(), e.b.index());
        let v = -rates.bond(e.bond);
        t[(i, j)] += v;
        t[(j, i)] += v;
    }
    Ok(t)
}

/// Identity shift that places the totally antisymmetric level at zero.
///
/// The alternating vector `sign(w)` has eigenvalue `-1` under every `A_k`, so
/// its energy under `T` is `-Σ_k t_k (N!/2 - 2)`. For N = 3 the shift is `t_1 + t_2`.
pub fn antisymmetric_shift(rates: &RateVector) -> f64 {
    let half = (factorial(rates.n_particles()) / 2) as f64;
    rates.total() * (half - 2.0)
}

/// `max |T P - P T|` entrywise for a well permutation `P`.
pub fn commutator_norm(t: &Mat<f64>, p: &WellOperator) -> f64 {
    let dim = p.dim();
    let inv = p.transpose();
    let mut worst = 0.0_f64;
    for j in 0..dim {
        for i in 0..dim {
            // (T P)[i,j] = T[i, p(j)],  (P T)[i,j] = T[p⁻¹(i), j]
            let d = t[(i, p.image_of(j))] - t[(inv.image_of(i), j)];
            worst = worst.max(d.abs());
        }
    }
    worst
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Parity {
    Even,
    Odd,
    /// A Π-invariant cluster containing both parities (accidental degeneracy).
    Mixed {
        even: usize,
        odd: usize,
    },
    NotApplicable,
}

/// Irrep content of a cluster; N ≥ 5 is left unlabelled.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IrrepContent {
    Labeled(BTreeMap<String, usize>),
    Unlabeled(UnlabeledTag),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnlabeledTag {
    Unlabeled,
}

impl IrrepContent {
    pub fn get(&self, label: &str) -> usize {
        match self {
            IrrepContent::Labeled(m) => m.get(label).copied().unwrap_or(0),
            IrrepContent::Unlabeled(_) => 0,
        }
    }

    /// The single irrep, if the cluster is irreducible.
    pub fn only(&self) -> Option<&str> {
        match self {
            IrrepContent::Labeled(m) if m.len() == 1 && m.values().all(|&c| c == 1) => {
                m.keys().next().map(String::as_str)
            }
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub eigenvalue: f64,
    pub multiplicity: usize,
    pub irreps: IrrepContent,
    pub parity: Parity,
    /// Orthonormal basis of the eigenspace, one vector per entry.
    pub eigenvectors: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub n_particles: usize,
    pub rates: RateVector,
    /// Multiple of the identity added to every eigenvalue.
    pub shift: f64,
    /// Ascending in eigenvalue.
    pub clusters: Vec<Cluster>,
}

impl SpectralReport {
    /// All eigenvalues with repetition, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.clusters
            .iter()
            .flat_map(|c| std::iter::repeat_n(c.eigenvalue, c.multiplicity))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ReportOptions {
    /// Absolute gap above which neighbouring eigenvalues belong to different
    /// clusters. Defaults to `1e-9 (max|λ| + 1)`.
    pub cluster_tol: Option<f64>,
    pub with_shift: bool,
}

/// Splits ascending values into runs separated by gaps larger than `tol`.
///
/// Gaps within a factor 10 of `tol` are ambiguous and rejected.
pub fn cluster_values(values: &[f64], tol: f64) -> Result<Vec<std::ops::Range<usize>>> {
    if tol <= 0.0 || !tol.is_finite() {
        return Err(Error::domain(format!(
            "cluster tolerance must be positive, got {tol}"
        )));
    }
    let mut ranges = Vec::new();
    let mut start = 0;
    let mut ambiguous = Vec::new();
    for i in 1..values.len() {
        let gap = values[i] - values[i - 1];
        if gap > tol / 10.0 && gap <= 10.0 * tol {
            ambiguous.push((i - 1, gap));
        }
        if gap > tol {
            ranges.push(start..i);
            start = i;
        }
    }
    if !values.is_empty() {
        ranges.push(start..values.len());
    }
    if !ambiguous.is_empty() {
        let listing: Vec<String> = ambiguous
            .iter()
            .map(|(i, g)| format!("gap {g:.3e} after eigenvalue #{i} ({:.12})", values[*i]))
            .collect();
        return Err(Error::consistency(format!(
            "clustering ambiguous at tolerance {tol:.3e}: {}",
            listing.join("; ")
        )));
    }
    Ok(ranges)
}

pub fn default_cluster_tol(values: &[f64]) -> f64 {
    let scale = values.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
    1e-9 * (scale + 1.0)
}

/// Diagonalizes `t`, clusters degenerate levels and labels each cluster.
pub fn spectral_report(
    t: &Mat<f64>,
    rates: &RateVector,
    opts: ReportOptions,
) -> Result<SpectralReport> {
    let n = rates.n_particles();
    if t.nrows() != t.ncols() || t.nrows() != factorial(n) {
        return Err(Error::domain(format!(
            "operator of size {}x{} does not act on the {} wells of N={n}",
            t.nrows(),
            t.ncols(),
            factorial(n)
        )));
    }
    if n > DENSE_CEILING {
        return Err(Error::domain(format!(
            "dense spectra are limited to N <= {DENSE_CEILING}"
        )));
    }
    let asym = max_asymmetry(t);
    if asym > 1e-12 * (max_abs(t) + 1.0) {
        return Err(Error::domain(format!(
            "operator is not symmetric (max asymmetry {asym:.3e})"
        )));
    }
    let eig = symmetric_eigen(t)?;
    let tol = opts
        .cluster_tol
        .unwrap_or_else(|| default_cluster_tol(&eig.values));
    let shift = if opts.with_shift {
        antisymmetric_shift(rates)
    } else {
        0.0
    };

    let mut clusters = Vec::new();
    for range in cluster_values(&eig.values, tol)? {
        let members = &eig.values[range.clone()];
        let mean = members.iter().sum::<f64>() / members.len() as f64;
        let vectors: Vec<Vec<f64>> = range
            .clone()
            .map(|j| (0..t.nrows()).map(|i| eig.vectors[(i, j)]).collect())
            .collect();
        let irreps = irrep_multiplicities(&vectors, n)?;
        let parity = parity_label(&vectors, rates)?;
        clusters.push(Cluster {
            eigenvalue: mean + shift,
            multiplicity: members.len(),
            irreps,
            parity,
            eigenvectors: vectors,
        });
    }
    Ok(SpectralReport {
        n_particles: n,
        rates: rates.clone(),
        shift,
        clusters,
    })
}

/// Largest residual of `op v` outside `span(vectors)`, over all `v`.
fn invariance_residual(vectors: &[Vec<f64>], op: &WellOperator) -> f64 {
    let mut worst = 0.0_f64;
    for v in vectors {
        let mut r = op.apply(v);
        for u in vectors {
            let c = dot(u, &r);
            r.iter_mut().zip(u).for_each(|(x, y)| *x -= c * y);
        }
        worst = worst.max(dot(&r, &r).sqrt());
    }
    worst
}

/// `tr(P_E R(p)) = Σ_c Σ_w v_c[w] v_c[p(w)]` for the projector onto the cluster.
fn projected_character(vectors: &[Vec<f64>], op: &WellOperator) -> f64 {
    vectors
        .iter()
        .map(|v| {
            v.iter()
                .enumerate()
                .map(|(w, x)| x * v[op.image_of(w)])
                .sum::<f64>()
        })
        .sum()
}

/// Decomposes the span of `vectors` under particle permutations into S_N irreps.
pub fn irrep_multiplicities(vectors: &[Vec<f64>], n: usize) -> Result<IrrepContent> {
    if vectors.is_empty() {
        return Err(Error::domain("empty cluster"));
    }
    if n > DEFAULT_MAX_PARTICLES || vectors.iter().any(|v| v.len() != factorial(n)) {
        return Err(Error::domain(format!(
            "vectors do not live on the {} wells of N={n}",
            factorial(n)
        )));
    }
    for k in 0..n - 1 {
        let gen = WellOperator::particle(&Permutation::transposition(n, k, k + 1))?;
        let res = invariance_residual(vectors, &gen);
        if res > INVARIANCE_TOL {
            return Err(Error::consistency(format!(
                "cluster is not invariant under particle swap ({} {}): residual {res:.3e}",
                k + 1,
                k + 2
            )));
        }
    }
    let Some(table) = character_table(n) else {
        return Ok(IrrepContent::Unlabeled(UnlabeledTag::Unlabeled));
    };
    let chars: Vec<f64> = table
        .representatives()
        .iter()
        .map(|p| WellOperator::particle(p).map(|op| projected_character(vectors, &op)))
        .collect::<Result<_>>()?;
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
        if (m - rounded).abs() > INVARIANCE_TOL || rounded < 0.0 {
            return Err(Error::consistency(format!(
                "multiplicity of {label} is {m}, not a non-negative integer"
            )));
        }
        if rounded > 0.0 {
            out.insert(label.clone(), rounded as usize);
        }
    }
    Ok(IrrepContent::Labeled(out))
}

/// Reflection parity of a cluster; only defined for palindromic rates.
pub fn parity_label(vectors: &[Vec<f64>], rates: &RateVector) -> Result<Parity> {
    if !rates.is_palindromic() {
        return Ok(Parity::NotApplicable);
    }
    let n = rates.n_particles();
    let pi = WellOperator::parity(n)?;
    let res = invariance_residual(vectors, &pi);
    if res > INVARIANCE_TOL {
        return Err(Error::consistency(format!(
            "rates are palindromic but the cluster is not parity invariant (residual {res:.3e})"
        )));
    }
    let trace = projected_character(vectors, &pi);
    let k = vectors.len() as f64;
    let even = ((k + trace) / 2.0).round() as usize;
    let odd = vectors.len() - even.min(vectors.len());
    Ok(match (even, odd) {
        (_, 0) => Parity::Even,
        (0, _) => Parity::Odd,
        (even, odd) => Parity::Mixed { even, odd },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::irreps::{sign_label, standard_label, trivial_label};
    use crate::perm::hexagon_ordering;

    fn rates(v: &[f64]) -> RateVector {
        RateVector::new(v.to_vec()).unwrap()
    }

    fn letter_pair(e: &BondEdge) -> String {
        let l = |w: &Ordering| crate::perm::hexagon_letter(w).unwrap();
        let mut p = [l(&e.a), l(&e.b)];
        p.sort_unstable();
        p.iter().collect()
    }

    #[test]
    fn ordering_graph_counts() {
        for (n, wells, edges) in [(2, 2, 1), (3, 6, 6), (4, 24, 36)] {
            let g = ordering_graph(n).unwrap();
            assert_eq!((g.wells.len(), g.edges.len()), (wells, edges));
            assert!(g.class_sizes.iter().all(|&c| c == wells / 2));
            assert_eq!(g.letters.is_some(), n == 3);
        }
        let g = ordering_graph(3).unwrap();
        assert_eq!(g.letters.as_ref().unwrap()[&'A'].labels(), vec![1, 2, 3]);
        assert_eq!(g.letters.as_ref().unwrap()[&'E'].labels(), vec![2, 3, 1]);
    }

    #[test]
    fn n3_edges_form_hexagon() {
        let edges = bond_edges(3).unwrap();
        assert_eq!(edges.len(), 6);
        let mut bond1: Vec<String> = edges
            .iter()
            .filter(|e| e.bond == 1)
            .map(letter_pair)
            .collect();
        let mut bond2: Vec<String> = edges
            .iter()
            .filter(|e| e.bond == 2)
            .map(letter_pair)
            .collect();
        bond1.sort();
        bond2.sort();
        assert_eq!(bond1, vec!["AF", "BC", "DE"]);
        assert_eq!(bond2, vec!["AB", "CD", "EF"]);
    }

    #[test]
    fn edge_counts() {
        assert_eq!(bond_edges(2).unwrap().len(), 1);
        let e4 = bond_edges(4).unwrap();
        assert_eq!(e4.len(), 36);
        let mut degree = [0; 24];
        for e in &e4 {
            degree[e.a.index()] += 1;
            degree[e.b.index()] += 1;
        }
        assert!(degree.iter().all(|&d| d == 3));
        for n in 2..=6 {
            assert_eq!(bond_edges(n).unwrap().len(), factorial(n) * (n - 1) / 2);
        }
    }

    /// The operator as a literal sum of well-swap matrices.
    fn tunneling_from_well_swaps(n: usize, r: &RateVector) -> Mat<f64> {
        let dim = factorial(n);
        let mut t = Mat::<f64>::zeros(dim, dim);
        for e in bond_edges(n).unwrap() {
            let m = WellOperator::well_swap(&e.a, &e.b).unwrap().matrix();
            for j in 0..dim {
                for i in 0..dim {
                    t[(i, j)] -= r.bond(e.bond) * m[(i, j)];
                }
            }
        }
        t
    }

    #[test]
    fn assembly_matches_sum_of_well_swaps() {
        for (n, r) in [
            (2, vec![0.7]),
            (3, vec![0.3, 1.1]),
            (4, vec![0.5, 0.2, 0.9]),
        ] {
            let r = rates(&r);
            let fast = build_tunneling(n, &r).unwrap();
            let slow = tunneling_from_well_swaps(n, &r);
            for j in 0..fast.ncols() {
                for i in 0..fast.nrows() {
                    assert!((fast[(i, j)] - slow[(i, j)]).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn equal_rates_hexagon_structure() {
        // T = -t (4 I + A_hex) for N = 3.
        let t = build_tunneling(3, &rates(&[1.0, 1.0])).unwrap();
        let edges = bond_edges(3).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let adj = edges.iter().any(|e| {
                    (e.a.index(), e.b.index()) == (i, j) || (e.a.index(), e.b.index()) == (j, i)
                });
                let expect = if i == j {
                    -4.0
                } else if adj {
                    -1.0
                } else {
                    0.0
                };
                assert_eq!(t[(i, j)], expect);
            }
        }
    }

    #[test]
    fn zero_rates_give_zero_operator() {
        let t = build_tunneling(3, &rates(&[0.0, 0.0])).unwrap();
        assert_eq!(max_abs(&t), 0.0);
    }

    #[test]
    fn rate_validation() {
        assert!(RateVector::new(vec![]).is_err());
        assert!(RateVector::new(vec![1.0, -0.1]).is_err());
        assert!(RateVector::new(vec![f64::NAN]).is_err());
        assert!(build_tunneling(3, &rates(&[1.0])).is_err());
        assert!(build_tunneling(6, &rates(&[1.0; 5])).is_err());
        assert!(rates(&[1.0, 2.0, 1.0]).is_palindromic());
        assert!(!rates(&[1.0, 2.0]).is_palindromic());
        assert!(serde_json::from_str::<RateVector>("[1.0, -2.0]").is_err());
    }

    #[test]
    fn symmetric_n3_report() {
        let t = build_tunneling(3, &rates(&[1.0, 1.0])).unwrap();
        let rep = spectral_report(&t, &rates(&[1.0, 1.0]), ReportOptions::default()).unwrap();
        let levels: Vec<(f64, usize)> = rep
            .clusters
            .iter()
            .map(|c| (c.eigenvalue, c.multiplicity))
            .collect();
        let expect = [(-6.0, 1), (-5.0, 2), (-3.0, 2), (-2.0, 1)];
        assert_eq!(levels.len(), 4);
        for ((v, m), (ev, em)) in levels.iter().zip(expect) {
            assert!((v - ev).abs() < 1e-12);
            assert_eq!(*m, em);
        }
        let parities: Vec<&Parity> = rep.clusters.iter().map(|c| &c.parity).collect();
        assert_eq!(
            parities,
            [&Parity::Even, &Parity::Odd, &Parity::Even, &Parity::Odd]
        );
        assert_eq!(
            rep.clusters[0].irreps.only(),
            Some(trivial_label(3).as_str())
        );
        assert_eq!(
            rep.clusters[1].irreps.only(),
            Some(standard_label(3).as_str())
        );
        assert_eq!(
            rep.clusters[2].irreps.only(),
            Some(standard_label(3).as_str())
        );
        assert_eq!(rep.clusters[3].irreps.only(), Some(sign_label(3).as_str()));
        let lowest = &rep.clusters[0].eigenvectors[0];
        let overlap: f64 = lowest.iter().sum::<f64>() / 6f64.sqrt();
        assert!((overlap.abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shifted_n3_levels() {
        let r = rates(&[1.0, 1.0]);
        let t = build_tunneling(3, &r).unwrap();
        let rep = spectral_report(
            &t,
            &r,
            ReportOptions {
                with_shift: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(rep.shift, 2.0);
        let ev = rep.eigenvalues();
        for (a, b) in ev.iter().zip([-4.0, -3.0, -3.0, -1.0, -1.0, 0.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((ev[5] - ev[0] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn antisymmetric_level_is_pinned_for_every_n() {
        for (n, r) in [
            (2, vec![0.4]),
            (3, vec![0.4, 0.9]),
            (4, vec![0.2, 0.7, 0.3]),
        ] {
            let r = rates(&r);
            let t = build_tunneling(n, &r).unwrap();
            let rep = spectral_report(
                &t,
                &r,
                ReportOptions {
                    with_shift: true,
                    ..Default::default()
                },
            )
            .unwrap();
            let top = rep.clusters.last().unwrap();
            assert!(top.eigenvalue.abs() < 1e-12, "N={n}: {}", top.eigenvalue);
            assert_eq!(top.irreps.only(), Some(sign_label(n).as_str()));
        }
    }

    #[test]
    fn n2_parity() {
        let r = rates(&[1.0]);
        let t = build_tunneling(2, &r).unwrap();
        let rep = spectral_report(&t, &r, ReportOptions::default()).unwrap();
        assert_eq!(rep.clusters[0].parity, Parity::Even);
        assert_eq!(rep.clusters[1].parity, Parity::Odd);
        assert!((rep.clusters[0].eigenvalue + 1.0).abs() < 1e-14);
    }

    #[test]
    fn asymmetric_rates_have_no_parity() {
        let r = rates(&[1.0, 2.0]);
        let t = build_tunneling(3, &r).unwrap();
        let rep = spectral_report(&t, &r, ReportOptions::default()).unwrap();
        assert!(rep
            .clusters
            .iter()
            .all(|c| c.parity == Parity::NotApplicable));
    }

    #[test]
    fn non_invariant_subspace_rejected() {
        let mut v = vec![0.0; 6];
        v[hexagon_ordering('A').unwrap().index()] = 1.0;
        assert!(matches!(
            irrep_multiplicities(&[v.clone()], 3),
            Err(Error::Consistency(_))
        ));
        assert!(matches!(
            parity_label(&[v], &rates(&[1.0, 1.0])),
            Err(Error::Consistency(_))
        ));
    }

    #[test]
    fn clustering() {
        let r = cluster_values(&[0.0, 1e-15, 1.0, 2.0, 2.0], 1e-9).unwrap();
        assert_eq!(r, vec![0..2, 2..3, 3..5]);
        assert!(matches!(
            cluster_values(&[0.0, 2e-9, 1.0], 1e-9),
            Err(Error::Consistency(_))
        ));
        assert!(cluster_values(&[0.0], 0.0).is_err());
    }

    #[test]
    fn non_symmetric_input_rejected() {
        let mut t = build_tunneling(3, &rates(&[1.0, 1.0])).unwrap();
        t[(0, 1)] += 1e-3;
        assert!(matches!(
            spectral_report(&t, &rates(&[1.0, 1.0]), ReportOptions::default()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn n5_is_unlabeled() {
        let r = rates(&[1.0, 0.5, 0.5, 1.0]);
        let t = build_tunneling(5, &r).unwrap();
        let rep = spectral_report(&t, &r, ReportOptions::default()).unwrap();
        assert_eq!(rep.eigenvalues().len(), 120);
        assert!(rep
            .clusters
            .iter()
            .all(|c| c.irreps == IrrepContent::Unlabeled(UnlabeledTag::Unlabeled)));
        let json = serde_json::to_string(&rep.clusters[0].irreps).unwrap();
        assert_eq!(json, "\"unlabeled\"");
    }
}
