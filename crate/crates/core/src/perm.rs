//! Symmetric-group combinatorics on particle orderings.
//!
//! An [`Ordering`] names one domain of N-particle configuration space: the
//! region where the particles sit left to right in the listed order. The N!
//! orderings, sorted lexicographically, index the "well basis" on which every
//! operator in this crate acts.
//!
//! Two commuting copies of S_N act on orderings:
//!
//! * particle permutations relabel particles wherever they stand,
//!   `⟨ijk⟩ → ⟨p(i) p(j) p(k)⟩`;
//! * ordering permutations move entries between positions irrespective of
//!   which particle occupies them, `(12): ⟨ijk⟩ → ⟨jik⟩`.
//!
//! Particle labels are 1-based in text and JSON and 0-based in memory.

use std::fmt;

use faer::Mat;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest particle number for which ordering tables are built.
pub const DEFAULT_MAX_PARTICLES: usize = 8;

pub fn factorial(n: usize) -> usize {
    (1..=n).product()
}

fn check_bijection(image: &[usize]) -> bool {
    let mut seen = vec![false; image.len()];
    for &i in image {
        if i >= image.len() || seen[i] {
            return false;
        }
        seen[i] = true;
    }
    true
}

/// Advances `seq` to its lexicographic successor; returns false at the last permutation.
fn next_lexicographic(seq: &mut [usize]) -> bool {
    let n = seq.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && seq[i - 1] >= seq[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while seq[j] <= seq[i - 1] {
        j -= 1;
    }
    seq.swap(i - 1, j);
    seq[i..].reverse();
    true
}

/// A bijection on `{0..N-1}`, stored as its image list.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    image: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation {
            image: (0..n).collect(),
        }
    }

    pub fn from_zero_based(image: Vec<usize>) -> Result<Self> {
        if !check_bijection(&image) {
            return Err(Error::domain(format!(
                "{image:?} is not a bijection on 0..{}",
                image.len()
            )));
        }
        Ok(Permutation { image })
    }

    /// Builds from a 1-based image list, `image[i-1] = p(i)`.
    pub fn from_one_based(image: &[usize]) -> Result<Self> {
        if image.contains(&0) {
            return Err(Error::domain("1-based permutation images must be positive"));
        }
        Self::from_zero_based(image.iter().map(|&i| i - 1).collect())
    }

    /// Swap of `a` and `b` (0-based).
    pub fn transposition(n: usize, a: usize, b: usize) -> Self {
        let mut image: Vec<usize> = (0..n).collect();
        image.swap(a, b);
        Permutation { image }
    }

    /// Reversal `k → N-1-k`.
    pub fn reversal(n: usize) -> Self {
        Permutation {
            image: (0..n).rev().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.image.len()
    }

    pub fn is_empty(&self) -> bool {
        self.image.is_empty()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.image[i]
    }

    pub fn image(&self) -> &[usize] {
        &self.image
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.image.iter().map(|&i| i + 1).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.image.iter().enumerate().all(|(i, &j)| i == j)
    }

    /// `self ∘ other`, i.e. apply `other` first.
    pub fn compose(&self, other: &Permutation) -> Result<Permutation> {
        if self.len() != other.len() {
            return Err(Error::domain(format!(
                "cannot compose permutations of size {} and {}",
                self.len(),
                other.len()
            )));
        }
        Ok(Permutation {
            image: other.image.iter().map(|&i| self.image[i]).collect(),
        })
    }

    pub fn inverse(&self) -> Permutation {
        let mut image = vec![0; self.len()];
        for (i, &j) in self.image.iter().enumerate() {
            image[j] = i;
        }
        Permutation { image }
    }

    /// Disjoint cycles, each starting at its smallest element, including fixed points.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.len()];
        let mut out = Vec::new();
        for start in 0..self.len() {
            if seen[start] {
                continue;
            }
            let mut cycle = vec![start];
            seen[start] = true;
            let mut i = self.image[start];
            while i != start {
                seen[i] = true;
                cycle.push(i);
                i = self.image[i];
            }
            out.push(cycle);
        }
        out
    }

    /// Cycle lengths in non-increasing order (a partition of N).
    pub fn cycle_type(&self) -> Vec<usize> {
        let mut lens: Vec<usize> = self.cycles().iter().map(Vec::len).collect();
        lens.sort_unstable_by(|a, b| b.cmp(a));
        lens
    }

    /// +1 for even, -1 for odd permutations.
    pub fn sign(&self) -> i32 {
        let transpositions: usize = self.cycles().iter().map(|c| c.len() - 1).sum();
        if transpositions.is_multiple_of(2) {
            1
        } else {
            -1
        }
    }

    /// All of S_n in lexicographic order of image lists.
    pub fn all(n: usize) -> Vec<Permutation> {
        let mut cur: Vec<usize> = (0..n).collect();
        let mut out = Vec::with_capacity(factorial(n));
        loop {
            out.push(Permutation { image: cur.clone() });
            if !next_lexicographic(&mut cur) {
                break;
            }
        }
        out
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cycles: Vec<_> = self.cycles().into_iter().filter(|c| c.len() > 1).collect();
        if cycles.is_empty() {
            return write!(f, "()");
        }
        let sep = if self.len() > 9 { "," } else { "" };
        for c in cycles {
            let body: Vec<String> = c.iter().map(|i| (i + 1).to_string()).collect();
            write!(f, "({})", body.join(sep))?;
        }
        Ok(())
    }
}

/// Parses cycle notation such as `"(12)(3)"` or `"(1 2 3)"` over `{1..n}`.
///
/// Each digit is one symbol; whitespace and commas are ignored. Cycles must be
/// disjoint and omitted symbols are fixed.
pub fn parse_cycles(text: &str, n: usize) -> Result<Permutation> {
    let err = |position: usize, message: String| Error::Parse { position, message };
    if n == 0 || n > 9 {
        return Err(Error::domain(format!(
            "cycle notation supports 1 <= n <= 9, got {n}"
        )));
    }
    let mut image: Vec<usize> = (0..n).collect();
    let mut used = vec![false; n];
    let mut current: Option<Vec<usize>> = None;
    let mut last_pos = 0;

    for (pos, ch) in text.chars().enumerate() {
        last_pos = pos;
        match (ch, current.as_mut()) {
            (c, _) if c.is_whitespace() => {}
            ('(', None) => current = Some(Vec::new()),
            ('(', Some(_)) => return Err(err(pos, "nested '('".into())),
            (')', None) => return Err(err(pos, "unmatched ')'".into())),
            (')', Some(cycle)) => {
                let len = cycle.len();
                for (i, &s) in cycle.iter().enumerate() {
                    image[s] = cycle[(i + 1) % len];
                }
                current = None;
            }
            (',', Some(_)) => {}
            (c, Some(cycle)) if c.is_ascii_digit() => {
                let sym = c.to_digit(10).unwrap() as usize;
                if sym == 0 || sym > n {
                    return Err(err(pos, format!("symbol {sym} out of range 1..={n}")));
                }
                if used[sym - 1] {
                    return Err(err(pos, format!("symbol {sym} repeated")));
                }
                used[sym - 1] = true;
                cycle.push(sym - 1);
            }
            (c, Some(_)) => {
                return Err(err(pos, format!("unexpected character {c:?} inside cycle")))
            }
            (c, None) => return Err(err(pos, format!("expected '(' but found {c:?}"))),
        }
    }
    if current.is_some() {
        return Err(err(last_pos + 1, "unclosed '('".into()));
    }
    Ok(Permutation { image })
}

/// A left-to-right arrangement of N distinct particles.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ordering {
    seq: Vec<usize>,
}

impl Ordering {
    pub fn from_zero_based(seq: Vec<usize>) -> Result<Self> {
        if !check_bijection(&seq) {
            return Err(Error::domain(format!(
                "{seq:?} is not an arrangement of 0..{}",
                seq.len()
            )));
        }
        Ok(Ordering { seq })
    }

    /// From 1-based particle labels, e.g. `[1, 3, 2]` for ⟨132⟩.
    pub fn from_labels(labels: &[usize]) -> Result<Self> {
        if labels.contains(&0) {
            return Err(Error::domain("particle labels are 1-based"));
        }
        Self::from_zero_based(labels.iter().map(|&l| l - 1).collect())
    }

    pub fn len(&self) -> usize {
        self.seq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seq.is_empty()
    }

    /// 0-based particle at each position.
    pub fn seq(&self) -> &[usize] {
        &self.seq
    }

    pub fn labels(&self) -> Vec<usize> {
        self.seq.iter().map(|&l| l + 1).collect()
    }

    /// Lexicographic rank among all orderings of the same N.
    pub fn index(&self) -> usize {
        let n = self.seq.len();
        let mut rank = 0;
        for i in 0..n {
            let smaller_later = self.seq[i + 1..]
                .iter()
                .filter(|&&x| x < self.seq[i])
                .count();
            rank += smaller_later * factorial(n - 1 - i);
        }
        rank
    }

    pub fn from_index(n: usize, index: usize) -> Result<Self> {
        if index >= factorial(n) {
            return Err(Error::domain(format!(
                "ordering index {index} out of range for N={n}"
            )));
        }
        let mut pool: Vec<usize> = (0..n).collect();
        let mut rest = index;
        let mut seq = Vec::with_capacity(n);
        for i in 0..n {
            let f = factorial(n - 1 - i);
            seq.push(pool.remove(rest / f));
            rest %= f;
        }
        Ok(Ordering { seq })
    }

    pub fn reversed(&self) -> Ordering {
        Ordering {
            seq: self.seq.iter().rev().copied().collect(),
        }
    }

    /// Exchanges the particles at positions `k` and `k+1` (0-based).
    pub fn swap_adjacent(&self, k: usize) -> Ordering {
        let mut seq = self.seq.clone();
        seq.swap(k, k + 1);
        Ordering { seq }
    }
}

impl fmt::Display for Ordering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sep = if self.len() > 9 { "," } else { "" };
        let body: Vec<String> = self.labels().iter().map(usize::to_string).collect();
        write!(f, "⟨{}⟩", body.join(sep))
    }
}

impl Serialize for Ordering {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.labels().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Ordering {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let labels = Vec::<usize>::deserialize(d)?;
        Ordering::from_labels(&labels).map_err(serde::de::Error::custom)
    }
}

fn check_particle_count(n: usize, ceiling: usize) -> Result<()> {
    if n < 2 || n > ceiling {
        return Err(Error::domain(format!(
            "particle number N={n} outside 2..={ceiling}"
        )));
    }
    Ok(())
}

/// All N! orderings in lexicographic order; list position is the well index.
pub fn all_orderings(n: usize) -> Result<Vec<Ordering>> {
    all_orderings_with_ceiling(n, DEFAULT_MAX_PARTICLES)
}

pub fn all_orderings_with_ceiling(n: usize, ceiling: usize) -> Result<Vec<Ordering>> {
    check_particle_count(n, ceiling)?;
    Ok(Permutation::all(n)
        .into_iter()
        .map(|p| Ordering { seq: p.image })
        .collect())
}

fn check_sizes(p: &Permutation, w: &Ordering) -> Result<()> {
    if p.len() != w.len() {
        return Err(Error::domain(format!(
            "permutation on {} symbols applied to ordering of {} particles",
            p.len(),
            w.len()
        )));
    }
    Ok(())
}

/// Relabels particles in place: entry k becomes `p(w[k])`.
pub fn particle_action(p: &Permutation, w: &Ordering) -> Result<Ordering> {
    check_sizes(p, w)?;
    Ok(Ordering {
        seq: w.seq.iter().map(|&l| p.apply(l)).collect(),
    })
}

/// Moves the entry at position k to position `q(k)`.
pub fn ordering_action(q: &Permutation, w: &Ordering) -> Result<Ordering> {
    check_sizes(q, w)?;
    let mut seq = vec![0; w.len()];
    for (k, &l) in w.seq.iter().enumerate() {
        seq[q.apply(k)] = l;
    }
    Ok(Ordering { seq })
}

/// Well labels for N = 3: A=⟨123⟩, B=⟨132⟩, C=⟨312⟩, D=⟨321⟩, E=⟨231⟩, F=⟨213⟩.
///
/// Going A→F traces the hexagon of orderings joined by adjacent swaps.
pub const HEXAGON_LETTERS: [(char, [usize; 3]); 6] = [
    ('A', [1, 2, 3]),
    ('B', [1, 3, 2]),
    ('C', [3, 1, 2]),
    ('D', [3, 2, 1]),
    ('E', [2, 3, 1]),
    ('F', [2, 1, 3]),
];

pub fn hexagon_letter(w: &Ordering) -> Option<char> {
    let labels = w.labels();
    HEXAGON_LETTERS
        .iter()
        .find(|(_, l)| labels == l)
        .map(|(c, _)| *c)
}

pub fn hexagon_ordering(letter: char) -> Option<Ordering> {
    HEXAGON_LETTERS
        .iter()
        .find(|(c, _)| *c == letter.to_ascii_uppercase())
        .map(|(_, l)| Ordering::from_labels(l).expect("letter table is valid"))
}

/// A permutation of the N! wells, acting on the lexicographic well basis.
///
/// Stored as the index map `w ↦ f(w)`; [`WellOperator::matrix`] gives the
/// 0/1 matrix with `M[f(w), w] = 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct WellOperator {
    n_particles: usize,
    map: Vec<usize>,
}

impl WellOperator {
    pub fn identity(n: usize) -> Result<Self> {
        check_particle_count(n, DEFAULT_MAX_PARTICLES)?;
        Ok(WellOperator {
            n_particles: n,
            map: (0..factorial(n)).collect(),
        })
    }

    /// Realizes a bijection on orderings. Fails if `f` is not bijective.
    pub fn from_fn<F>(n: usize, f: F) -> Result<Self>
    where
        F: Fn(&Ordering) -> Result<Ordering>,
    {
        let wells = all_orderings(n)?;
        let mut map = Vec::with_capacity(wells.len());
        for w in &wells {
            let image = f(w)?;
            if image.len() != n {
                return Err(Error::domain(format!(
                    "map sends {w} to {image} of a different N"
                )));
            }
            map.push(image.index());
        }
        if !check_bijection(&map) {
            return Err(Error::domain("well map is not a bijection"));
        }
        Ok(WellOperator {
            n_particles: n,
            map,
        })
    }

    pub fn from_index_map(n: usize, map: Vec<usize>) -> Result<Self> {
        check_particle_count(n, DEFAULT_MAX_PARTICLES)?;
        if map.len() != factorial(n) || !check_bijection(&map) {
            return Err(Error::domain(
                "well index map is not a bijection on N! wells",
            ));
        }
        Ok(WellOperator {
            n_particles: n,
            map,
        })
    }

    pub fn particle(p: &Permutation) -> Result<Self> {
        Self::from_fn(p.len(), |w| particle_action(p, w))
    }

    pub fn ordering(q: &Permutation) -> Result<Self> {
        Self::from_fn(q.len(), |w| ordering_action(q, w))
    }

    /// Exchange of two wells, everything else fixed: `P̂(WW')`.
    pub fn well_swap(a: &Ordering, b: &Ordering) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::domain("wells belong to different N"));
        }
        let mut op = Self::identity(a.len())?;
        op.map.swap(a.index(), b.index());
        Ok(op)
    }

    /// Spatial reflection: reverses every ordering.
    pub fn parity(n: usize) -> Result<Self> {
        Self::from_fn(n, |w| Ok(w.reversed()))
    }

    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn dim(&self) -> usize {
        self.map.len()
    }

    /// Index of the well that `w` is sent to.
    pub fn image_of(&self, w: usize) -> usize {
        self.map[w]
    }

    pub fn index_map(&self) -> &[usize] {
        &self.map
    }

    /// `self · other` as operators (apply `other` first).
    pub fn compose(&self, other: &WellOperator) -> Result<WellOperator> {
        if self.dim() != other.dim() {
            return Err(Error::domain("well operators of different dimension"));
        }
        Ok(WellOperator {
            n_particles: self.n_particles,
            map: other.map.iter().map(|&i| self.map[i]).collect(),
        })
    }

    pub fn transpose(&self) -> WellOperator {
        let mut map = vec![0; self.dim()];
        for (i, &j) in self.map.iter().enumerate() {
            map[j] = i;
        }
        WellOperator {
            n_particles: self.n_particles,
            map,
        }
    }

    /// Number of fixed wells.
    pub fn trace(&self) -> usize {
        self.map
            .iter()
            .enumerate()
            .filter(|(i, &j)| *i == j)
            .count()
    }

    pub fn determinant(&self) -> i32 {
        Permutation {
            image: self.map.clone(),
        }
        .sign()
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(i, &j)| i == j)
    }

    pub fn matrix(&self) -> Mat<f64> {
        let n = self.dim();
        let mut m = Mat::zeros(n, n);
        for (w, &fw) in self.map.iter().enumerate() {
            m[(fw, w)] = 1.0;
        }
        m
    }

    /// Moves amplitude from well `w` to well `f(w)`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for (w, &fw) in self.map.iter().enumerate() {
            out[fw] = v[w];
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ord(labels: &[usize]) -> Ordering {
        Ordering::from_labels(labels).unwrap()
    }

    fn letter(c: char) -> usize {
        hexagon_ordering(c).unwrap().index()
    }

    #[test]
    fn orderings_are_lexicographic() {
        let n3: Vec<Vec<usize>> = all_orderings(3)
            .unwrap()
            .iter()
            .map(Ordering::labels)
            .collect();
        assert_eq!(
            n3,
            vec![
                vec![1, 2, 3],
                vec![1, 3, 2],
                vec![2, 1, 3],
                vec![2, 3, 1],
                vec![3, 1, 2],
                vec![3, 2, 1]
            ]
        );
        let n2: Vec<Vec<usize>> = all_orderings(2)
            .unwrap()
            .iter()
            .map(Ordering::labels)
            .collect();
        assert_eq!(n2, vec![vec![1, 2], vec![2, 1]]);
        assert_eq!(all_orderings(4).unwrap().len(), 24);
    }

    #[test]
    fn ordering_count_guard() {
        assert!(matches!(all_orderings(1), Err(Error::Domain(_))));
        assert!(matches!(all_orderings(9), Err(Error::Domain(_))));
        assert_eq!(all_orderings_with_ceiling(9, 9).unwrap().len(), 362_880);
    }

    #[test]
    fn index_round_trip() {
        for n in 2..=5 {
            for (i, w) in all_orderings(n).unwrap().iter().enumerate() {
                assert_eq!(w.index(), i);
                assert_eq!(&Ordering::from_index(n, i).unwrap(), w);
            }
        }
        assert!(Ordering::from_index(3, 6).is_err());
    }

    #[test]
    fn letter_indices() {
        let idx: Vec<usize> = "ABFECD".chars().map(letter).collect();
        assert_eq!(idx, vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn particle_action_examples() {
        let swap12 = parse_cycles("(12)", 3).unwrap();
        assert_eq!(
            particle_action(&swap12, &ord(&[1, 2, 3])).unwrap(),
            ord(&[2, 1, 3])
        );
        let cyc = parse_cycles("(123)", 3).unwrap();
        assert_eq!(
            particle_action(&cyc, &ord(&[1, 2, 3])).unwrap(),
            ord(&[2, 3, 1])
        );
        let id = Permutation::identity(3);
        for w in all_orderings(3).unwrap() {
            assert_eq!(particle_action(&id, &w).unwrap(), w);
        }
    }

    #[test]
    fn particle_swap_exchanges_af_be_cd() {
        let op = WellOperator::particle(&parse_cycles("(12)", 3).unwrap()).unwrap();
        for (x, y) in [('A', 'F'), ('B', 'E'), ('C', 'D')] {
            assert_eq!(op.image_of(letter(x)), letter(y));
            assert_eq!(op.image_of(letter(y)), letter(x));
        }
    }

    #[test]
    fn ordering_action_examples() {
        let q12 = parse_cycles("(12)", 3).unwrap();
        assert_eq!(
            ordering_action(&q12, &ord(&[1, 2, 3])).unwrap(),
            ord(&[2, 1, 3])
        );
        let q23 = parse_cycles("(23)", 3).unwrap();
        assert_eq!(
            ordering_action(&q23, &ord(&[3, 1, 2])).unwrap(),
            ord(&[3, 2, 1])
        );

        let op = WellOperator::ordering(&q12).unwrap();
        for (x, y) in [('A', 'F'), ('B', 'C'), ('D', 'E')] {
            assert_eq!(op.image_of(letter(x)), letter(y));
            assert_eq!(op.image_of(letter(y)), letter(x));
        }
    }

    #[test]
    fn position_swap_matches_enumeration() {
        // Exchanging positions 2 and 3 by hand, for every well.
        let q23 = parse_cycles("(23)", 3).unwrap();
        for w in all_orderings(3).unwrap() {
            let l = w.labels();
            assert_eq!(
                ordering_action(&q23, &w).unwrap().labels(),
                vec![l[0], l[2], l[1]]
            );
        }
    }

    #[test]
    fn size_mismatch_is_domain_error() {
        let p = Permutation::identity(4);
        assert!(particle_action(&p, &ord(&[1, 2, 3])).is_err());
        assert!(ordering_action(&p, &ord(&[1, 2, 3])).is_err());
    }

    #[test]
    fn well_swap_matrix() {
        let m = WellOperator::well_swap(
            &hexagon_ordering('A').unwrap(),
            &hexagon_ordering('B').unwrap(),
        )
        .unwrap()
        .matrix();
        let (a, b) = (letter('A'), letter('B'));
        for i in 0..6 {
            for j in 0..6 {
                let expect = match (i, j) {
                    _ if (i, j) == (a, b) || (i, j) == (b, a) => 1.0,
                    _ if i == j && i != a && i != b => 1.0,
                    _ => 0.0,
                };
                assert_eq!(m[(i, j)], expect);
            }
        }
        let id = WellOperator::from_fn(3, |w| Ok(w.clone())).unwrap();
        assert!(id.is_identity());
        assert_eq!(id.trace(), 6);
    }

    #[test]
    fn particle_swap_is_product_of_three_well_swaps() {
        let op = WellOperator::particle(&parse_cycles("(12)", 3).unwrap()).unwrap();
        let sw = |x, y| {
            WellOperator::well_swap(&hexagon_ordering(x).unwrap(), &hexagon_ordering(y).unwrap())
                .unwrap()
        };
        let prod = sw('A', 'F')
            .compose(&sw('B', 'E'))
            .unwrap()
            .compose(&sw('C', 'D'))
            .unwrap();
        assert_eq!(op, prod);
        assert_eq!(op.trace(), 0);
        assert_eq!(op.determinant(), -1);
    }

    #[test]
    fn parity_is_ad_be_cf() {
        let pi = WellOperator::parity(3).unwrap();
        for (x, y) in [('A', 'D'), ('B', 'E'), ('C', 'F')] {
            assert_eq!(pi.image_of(letter(x)), letter(y));
        }
    }

    #[test]
    fn non_bijective_map_rejected() {
        let first = all_orderings(3).unwrap()[0].clone();
        assert!(WellOperator::from_fn(3, |_| Ok(first.clone())).is_err());
    }

    #[test]
    fn parse_examples() {
        assert_eq!(parse_cycles("(12)", 3).unwrap().one_based(), vec![2, 1, 3]);
        assert!(parse_cycles("()", 4).unwrap().is_identity());
        assert_eq!(
            parse_cycles("(123)(4)", 4).unwrap().one_based(),
            vec![2, 3, 1, 4]
        );
        assert_eq!(
            parse_cycles(" ( 1 2 ) ( 3,4 )", 4).unwrap().one_based(),
            vec![2, 1, 4, 3]
        );
        assert_eq!(parse_cycles("", 2).unwrap(), Permutation::identity(2));
    }

    #[test]
    fn parse_errors_carry_position() {
        let pos = |s: &str, n| match parse_cycles(s, n) {
            Err(Error::Parse { position, .. }) => position,
            other => panic!("expected parse error for {s:?}, got {other:?}"),
        };
        assert_eq!(pos("(121)", 3), 3);
        assert_eq!(pos("(14)", 3), 2);
        assert_eq!(pos("(12", 3), 3);
        assert_eq!(pos("12)", 3), 0);
        assert_eq!(pos("(1(2))", 3), 2);
        assert_eq!(pos("(12))", 3), 4);
        assert_eq!(pos("(1x)", 3), 2);
    }

    #[test]
    fn display_round_trip() {
        for p in Permutation::all(4) {
            assert_eq!(parse_cycles(&p.to_string(), 4).unwrap(), p);
        }
        assert_eq!(ord(&[3, 1, 2]).to_string(), "⟨312⟩");
    }

    #[test]
    fn ordering_json_is_one_based() {
        let w = ord(&[2, 3, 1]);
        assert_eq!(serde_json::to_string(&w).unwrap(), "[2,3,1]");
        assert_eq!(serde_json::from_str::<Ordering>("[2,3,1]").unwrap(), w);
        assert!(serde_json::from_str::<Ordering>("[1,1,2]").is_err());
    }
}
