//! Character tables of S_2, S_3 and S_4, indexed by cycle type.
//!
//! Irreps are labelled by their partition: `[N]` is the trivial irrep,
//! `[1,...,1]` the sign irrep and `[N-1,1]` the standard irrep.

use crate::perm::{factorial, Permutation};

#[derive(Clone, Debug)]
pub struct CharacterTable {
    pub n: usize,
    /// Cycle types of the conjugacy classes, in column order.
    pub classes: Vec<Vec<usize>>,
    pub class_sizes: Vec<usize>,
    /// `(label, characters per class)`.
    pub irreps: Vec<(String, Vec<i64>)>,
}

impl CharacterTable {
    pub fn group_order(&self) -> usize {
        factorial(self.n)
    }

    pub fn dimension(&self, label: &str) -> Option<usize> {
        self.irreps
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, chi)| chi[0] as usize)
    }

    /// A representative permutation of each class.
    pub fn representatives(&self) -> Vec<Permutation> {
        self.classes
            .iter()
            .map(|shape| {
                let mut image = Vec::with_capacity(self.n);
                let mut start = 0;
                for &len in shape {
                    for i in 0..len {
                        image.push(start + (i + 1) % len);
                    }
                    start += len;
                }
                Permutation::from_zero_based(image).expect("cycle shape partitions n")
            })
            .collect()
    }
}

fn table(n: usize, classes: &[(&[usize], usize)], irreps: &[(&str, &[i64])]) -> CharacterTable {
    CharacterTable {
        n,
        classes: classes.iter().map(|(c, _)| c.to_vec()).collect(),
        class_sizes: classes.iter().map(|(_, s)| *s).collect(),
        irreps: irreps
            .iter()
            .map(|(l, c)| (l.to_string(), c.to_vec()))
            .collect(),
    }
}

/// Returns `None` for N outside 2..=4.
pub fn character_table(n: usize) -> Option<CharacterTable> {
    match n {
        2 => Some(table(
            2,
            &[(&[1, 1], 1), (&[2], 1)],
            &[("[2]", &[1, 1]), ("[1,1]", &[1, -1])],
        )),
        3 => Some(table(
            3,
            &[(&[1, 1, 1], 1), (&[2, 1], 3), (&[3], 2)],
            &[
                ("[3]", &[1, 1, 1]),
                ("[2,1]", &[2, 0, -1]),
                ("[1,1,1]", &[1, -1, 1]),
            ],
        )),
        4 => Some(table(
            4,
            &[
                (&[1, 1, 1, 1], 1),
                (&[2, 1, 1], 6),
                (&[2, 2], 3),
                (&[3, 1], 8),
                (&[4], 6),
            ],
            &[
                ("[4]", &[1, 1, 1, 1, 1]),
                ("[3,1]", &[3, 1, -1, 0, -1]),
                ("[2,2]", &[2, 0, 2, -1, 0]),
                ("[2,1,1]", &[3, -1, -1, 0, 1]),
                ("[1,1,1,1]", &[1, -1, 1, 1, -1]),
            ],
        )),
        _ => None,
    }
}

pub fn trivial_label(n: usize) -> String {
    format!("[{n}]")
}

pub fn sign_label(n: usize) -> String {
    format!("[{}]", vec!["1"; n].join(","))
}

pub fn standard_label(n: usize) -> String {
    format!("[{},1]", n - 1)
}
