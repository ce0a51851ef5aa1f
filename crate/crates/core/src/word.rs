//! Words in a finitely generated group.
//!
//! A letter is `+(k+1)` for generator `k` and `-(k+1)` for its inverse.

use serde::{Deserialize, Serialize};
use std::fmt;

pub type Letter = i16;

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Word(pub Vec<Letter>);

/// Letter for generator `k`, inverted if `inverse`.
pub fn letter(k: usize, inverse: bool) -> Letter {
    let l = (k + 1) as Letter;
    if inverse {
        -l
    } else {
        l
    }
}

/// Generator index of a letter.
pub fn generator_index(l: Letter) -> usize {
    (l.unsigned_abs() - 1) as usize
}

/// Total order on letters used for canonical representatives.
fn rank(l: Letter) -> u32 {
    2 * generator_index(l) as u32 + u32::from(l < 0)
}

impl Word {
    pub fn identity() -> Self {
        Word(Vec::new())
    }

    pub fn single(l: Letter) -> Self {
        Word(vec![l])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn inverse(&self) -> Self {
        Word(self.0.iter().rev().map(|l| -l).collect())
    }

    /// Free reduction of the concatenation `self * other`.
    pub fn concat(&self, other: &Word) -> Self {
        let mut out = self.0.clone();
        for &l in &other.0 {
            if out.last() == Some(&-l) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Word(out)
    }

    pub fn is_reduced(&self) -> bool {
        self.0.windows(2).all(|w| w[0] != -w[1])
    }

    pub fn is_cyclically_reduced(&self) -> bool {
        self.is_reduced() && (self.0.len() < 2 || self.0[0] != -self.0[self.0.len() - 1])
    }

    /// Freely and cyclically reduces, returning the core and the
    /// conjugator `p` with `self = p * core * p^-1`.
    pub fn cyclic_reduce(&self) -> (Word, Word) {
        let reduced = Word::identity().concat(self);
        let v = &reduced.0;
        let mut k = 0;
        while v.len() >= 2 * k + 2 && v[k] == -v[v.len() - 1 - k] {
            k += 1;
        }
        (Word(v[k..v.len() - k].to_vec()), Word(v[..k].to_vec()))
    }

    pub fn rotate(&self, k: usize) -> Self {
        let n = self.0.len();
        if n == 0 {
            return self.clone();
        }
        let k = k % n;
        Word(self.0[k..].iter().chain(self.0[..k].iter()).copied().collect())
    }

    fn rank_cmp(a: &[Letter], b: &[Letter]) -> std::cmp::Ordering {
        a.iter().map(|&l| rank(l)).cmp(b.iter().map(|&l| rank(l)))
    }

    /// Least rotation (in letter rank order).
    pub fn min_rotation(&self) -> Word {
        (0..self.0.len().max(1)).map(|k| self.rotate(k)).min_by(|a, b| Self::rank_cmp(&a.0, &b.0)).unwrap_or_default()
    }

    /// Representative of the class under rotation and inversion.
    pub fn class_representative(&self) -> Word {
        let a = self.min_rotation();
        let b = self.inverse().min_rotation();
        if Self::rank_cmp(&b.0, &a.0).is_lt() {
            b
        } else {
            a
        }
    }

    /// True when `self` and `other` are rotations of each other (equal
    /// oriented conjugacy classes in a free group for cyclically reduced
    /// words).
    pub fn is_rotation_of(&self, other: &Word) -> bool {
        self.len() == other.len() && self.min_rotation() == other.min_rotation()
    }

    /// True unless the word is a proper power `v^k`, `k >= 2`.
    pub fn is_primitive(&self) -> bool {
        let n = self.0.len();
        (1..n).filter(|p| n.is_multiple_of(*p)).all(|p| self.0.chunks(p).any(|c| c != &self.0[..p]))
    }

    pub fn display_with(&self, labels: &[String]) -> String {
        if self.0.is_empty() {
            return "e".to_string();
        }
        self.0
            .iter()
            .map(|&l| {
                let name = &labels[generator_index(l)];
                if l < 0 {
                    format!("{name}^-1")
                } else {
                    name.clone()
                }
            })
            .collect::<Vec<_>>()
            .join(".")
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels: Vec<String> =
            (0..self.0.iter().map(|&l| generator_index(l) + 1).max().unwrap_or(0)).map(|k| format!("g{}", k + 1)).collect();
        f.write_str(&self.display_with(&labels))
    }
}
