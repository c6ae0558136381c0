//! Integer sets, arithmetic progressions inside them, and the
//! second-difference constraint matrix of a set.

use std::fmt;

use num_bigint::BigInt;
use num_traits::Zero;

use crate::error::{Error, Result};

/// A finite set of distinct integers, stored sorted ascending.
///
/// Elements are arbitrary-precision; constructing a set sorts and
/// deduplicates the input values.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IntSet {
    elems: Vec<BigInt>,
}

impl IntSet {
    pub fn new(values: impl IntoIterator<Item = BigInt>) -> Self {
        let mut elems: Vec<BigInt> = values.into_iter().collect();
        elems.sort();
        elems.dedup();
        IntSet { elems }
    }

    pub fn from_i64s(values: &[i64]) -> Self {
        Self::new(values.iter().map(|&v| BigInt::from(v)))
    }

    /// The segment {lo, lo+1, ..., hi}.
    pub fn segment(lo: i64, hi: i64) -> Self {
        assert!(lo <= hi, "empty segment");
        IntSet {
            elems: (lo..=hi).map(BigInt::from).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn elements(&self) -> &[BigInt] {
        &self.elems
    }

    pub fn iter(&self) -> std::slice::Iter<'_, BigInt> {
        self.elems.iter()
    }

    pub fn contains(&self, v: &BigInt) -> bool {
        self.elems.binary_search(v).is_ok()
    }

    pub fn index_of(&self, v: &BigInt) -> Option<usize> {
        self.elems.binary_search(v).ok()
    }

    pub fn min(&self) -> Option<&BigInt> {
        self.elems.first()
    }

    pub fn max(&self) -> Option<&BigInt> {
        self.elems.last()
    }

    /// max - min, zero for sets with fewer than two elements.
    pub fn span(&self) -> BigInt {
        match (self.elems.first(), self.elems.last()) {
            (Some(lo), Some(hi)) => hi - lo,
            _ => BigInt::zero(),
        }
    }

    pub fn translate(&self, offset: &BigInt) -> IntSet {
        IntSet {
            elems: self.elems.iter().map(|e| e + offset).collect(),
        }
    }

    pub fn intersection(&self, other: &IntSet) -> IntSet {
        IntSet {
            elems: self
                .elems
                .iter()
                .filter(|e| other.contains(e))
                .cloned()
                .collect(),
        }
    }

    pub fn difference(&self, other: &IntSet) -> IntSet {
        IntSet {
            elems: self
                .elems
                .iter()
                .filter(|e| !other.contains(e))
                .cloned()
                .collect(),
        }
    }

    pub fn is_subset_of(&self, other: &IntSet) -> bool {
        self.elems.iter().all(|e| other.contains(e))
    }

    /// True when the elements form a run of consecutive integers.
    pub fn is_contiguous(&self) -> bool {
        self.elems
            .windows(2)
            .all(|w| &w[1] - &w[0] == BigInt::from(1))
    }
}

impl fmt::Display for IntSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, e) in self.elems.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, "}}")
    }
}

impl FromIterator<BigInt> for IntSet {
    fn from_iter<T: IntoIterator<Item = BigInt>>(iter: T) -> Self {
        IntSet::new(iter)
    }
}

/// A k-term arithmetic progression inside a set, in ascending canonical
/// form: values strictly increasing with common difference >= 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Progression {
    values: Vec<BigInt>,
    difference: BigInt,
}

impl Progression {
    fn new(values: Vec<BigInt>, difference: BigInt) -> Self {
        debug_assert!(difference > BigInt::zero());
        debug_assert!(values.windows(2).all(|w| &w[1] - &w[0] == difference));
        Progression { values, difference }
    }

    pub fn values(&self) -> &[BigInt] {
        &self.values
    }

    pub fn difference(&self) -> &BigInt {
        &self.difference
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl fmt::Display for Progression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.values.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

/// Every k-term arithmetic progression contained in `x`, each exactly once
/// in ascending canonical form, sorted by (difference, first value).
///
/// A progression and its reversal are the same object. The ordering
/// matches row order of [`second_difference_matrix`]: all progressions of
/// difference 1 first, then difference 2, and so on.
pub fn enumerate_progressions(x: &IntSet, k: usize) -> Result<Vec<Progression>> {
    if k < 3 {
        return Err(Error::InvalidParameter(format!(
            "progression length k must be at least 3, got {k}"
        )));
    }
    let elems = x.elements();
    let n = elems.len();
    let mut found: Vec<Progression> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let d = &elems[j] - &elems[i];
            let mut vals = Vec::with_capacity(k);
            vals.push(elems[i].clone());
            vals.push(elems[j].clone());
            let mut next = &elems[j] + &d;
            let mut ok = true;
            while vals.len() < k {
                if x.contains(&next) {
                    vals.push(next.clone());
                    next += &d;
                } else {
                    ok = false;
                    break;
                }
            }
            if ok {
                found.push(Progression::new(vals, d));
            }
        }
    }
    found.sort_by(|a, b| {
        (a.difference(), &a.values()[0]).cmp(&(b.difference(), &b.values()[0]))
    });
    Ok(found)
}

/// True iff `x` contains no nontrivial k-term arithmetic progression.
pub fn is_progression_free(x: &IntSet, k: usize) -> Result<bool> {
    if k < 3 {
        return Err(Error::InvalidParameter(format!(
            "progression length k must be at least 3, got {k}"
        )));
    }
    let elems = x.elements();
    let n = elems.len();
    if n < k {
        return Ok(true);
    }
    for i in 0..n {
        'pairs: for j in (i + 1)..n {
            let d = &elems[j] - &elems[i];
            let mut next = &elems[j] + &d;
            for _ in 2..k {
                if !x.contains(&next) {
                    continue 'pairs;
                }
                next += &d;
            }
            return Ok(false);
        }
    }
    Ok(true)
}

/// The constraint matrix encoding all 3-term progressions of a set: one
/// row per progression, +1 in the columns of the outer elements and -2 in
/// the middle element's column. Columns follow the sorted order of the
/// set, rows the order of [`enumerate_progressions`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintMatrix {
    cols: usize,
    /// (lo, mid, hi) column indices per row.
    triples: Vec<[usize; 3]>,
}

impl ConstraintMatrix {
    pub fn row_count(&self) -> usize {
        self.triples.len()
    }

    pub fn col_count(&self) -> usize {
        self.cols
    }

    pub fn triples(&self) -> &[[usize; 3]] {
        &self.triples
    }

    pub fn entry(&self, row: usize, col: usize) -> i64 {
        let [lo, mid, hi] = self.triples[row];
        if col == mid {
            -2
        } else if col == lo || col == hi {
            1
        } else {
            0
        }
    }

    pub fn dense(&self) -> Vec<Vec<i64>> {
        self.triples
            .iter()
            .map(|&[lo, mid, hi]| {
                let mut row = vec![0i64; self.cols];
                row[lo] = 1;
                row[mid] = -2;
                row[hi] = 1;
                row
            })
            .collect()
    }

    /// Matrix-vector product over arbitrary-precision integers.
    pub fn mul_vec(&self, x: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(x.len(), self.cols);
        self.triples
            .iter()
            .map(|&[lo, mid, hi]| &x[lo] + &x[hi] - BigInt::from(2) * &x[mid])
            .collect()
    }
}

/// Second-difference matrix of `x`: A * sorted(x) = 0 exactly, with one
/// row per nontrivial 3-term progression of `x`.
pub fn second_difference_matrix(x: &IntSet) -> ConstraintMatrix {
    let progressions = enumerate_progressions(x, 3).expect("k = 3 is always valid");
    let triples = progressions
        .iter()
        .map(|p| {
            let v = p.values();
            [
                x.index_of(&v[0]).expect("progression value in set"),
                x.index_of(&v[1]).expect("progression value in set"),
                x.index_of(&v[2]).expect("progression value in set"),
            ]
        })
        .collect();
    ConstraintMatrix {
        cols: x.len(),
        triples,
    }
}
