//! Difference-bound zones over exact rationals.
//!
//! A [`Dbm`] over `n` variables constrains remaining-firing-time variables
//! `x_1..x_n` (index 0 is the constant-zero reference) with bounds of the
//! form `x_i - x_j <= c` or `< c`. Zones are kept in canonical (all-pairs
//! tightest) form via shortest-path closure, so structural equality is
//! semantic equality and hashing is stable.

use crate::time::Rat;
use num_traits::Zero;
use std::cmp::Ordering;

/// One constraint bound: strict, non-strict, or absent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Bound {
    /// `x - y < c`
    Lt(Rat),
    /// `x - y <= c`
    Le(Rat),
    Inf,
}

impl Bound {
    pub fn le_zero() -> Bound {
        Bound::Le(Rat::zero())
    }

    pub fn value(&self) -> Option<Rat> {
        match self {
            Bound::Lt(c) | Bound::Le(c) => Some(*c),
            Bound::Inf => None,
        }
    }

    pub fn is_strict(&self) -> bool {
        matches!(self, Bound::Lt(_))
    }

    /// Bound addition: `(x-y <= a) + (y-z <= b)` gives `x-z <= a+b`,
    /// strict if either side is strict.
    pub fn add(self, other: Bound) -> Bound {
        match (self, other) {
            (Bound::Inf, _) | (_, Bound::Inf) => Bound::Inf,
            (Bound::Le(a), Bound::Le(b)) => Bound::Le(a + b),
            (Bound::Lt(a), Bound::Le(b))
            | (Bound::Le(a), Bound::Lt(b))
            | (Bound::Lt(a), Bound::Lt(b)) => Bound::Lt(a + b),
        }
    }
}

impl PartialOrd for Bound {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Bound {
    /// Tighter bounds are smaller; `< c` is tighter than `<= c`; `Inf` is
    /// the greatest element.
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Bound::Inf, Bound::Inf) => Ordering::Equal,
            (Bound::Inf, _) => Ordering::Greater,
            (_, Bound::Inf) => Ordering::Less,
            (a, b) => {
                let (av, bv) = (a.value().unwrap(), b.value().unwrap());
                av.cmp(&bv).then_with(|| match (a.is_strict(), b.is_strict()) {
                    (true, false) => Ordering::Less,
                    (false, true) => Ordering::Greater,
                    _ => Ordering::Equal,
                })
            }
        }
    }
}

/// Difference-bound matrix over `dim` entries (reference variable plus
/// `dim - 1` real variables). Entry `(i, j)` bounds `x_i - x_j`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Dbm {
    dim: usize,
    entries: Vec<Bound>,
}

impl Dbm {
    /// Unconstrained DBM over `vars` variables (plus the reference).
    pub fn unconstrained(vars: usize) -> Dbm {
        let dim = vars + 1;
        let mut entries = vec![Bound::Inf; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = Bound::le_zero();
        }
        Dbm { dim, entries }
    }

    pub fn vars(&self) -> usize {
        self.dim - 1
    }

    pub fn get(&self, i: usize, j: usize) -> Bound {
        self.entries[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, b: Bound) {
        self.entries[i * self.dim + j] = b;
    }

    /// Tightens entry `(i, j)` to at most `b`.
    pub fn tighten(&mut self, i: usize, j: usize, b: Bound) {
        let cur = self.get(i, j);
        if b < cur {
            self.set(i, j, b);
        }
    }

    /// All-pairs shortest-path closure. Returns false iff the zone became
    /// empty (a negative cycle exists).
    pub fn close(&mut self) -> bool {
        let n = self.dim;
        for k in 0..n {
            for i in 0..n {
                let d_ik = self.get(i, k);
                if d_ik == Bound::Inf {
                    continue;
                }
                for j in 0..n {
                    let via = d_ik.add(self.get(k, j));
                    if via < self.get(i, j) {
                        self.set(i, j, via);
                    }
                }
            }
        }
        for i in 0..n {
            if self.get(i, i) < Bound::le_zero() {
                return false;
            }
        }
        true
    }

    /// True iff some diagonal entry witnesses emptiness. Only meaningful
    /// after [`close`](Self::close).
    pub fn is_empty(&self) -> bool {
        (0..self.dim).any(|i| self.get(i, i) < Bound::le_zero())
    }
}
