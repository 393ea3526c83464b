//! Truncated free tensor algebra over `R^d`: words, dense truncated tensors,
//! linear forms and the shuffle product.
//!
//! Coefficients of level `k` are stored contiguously in lexicographic word
//! order, so the word `(i_1, ..., i_k)` (letters `1..=d`) lives at offset
//! `sum_j (i_j - 1) * d^(k - j)` inside its level. Levels are concatenated,
//! giving `sum_{k=0}^{n} d^k` coefficients in total.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A multi-index over the alphabet `{1, ..., d}`.
///
/// Words order by length first, then lexicographically, which is also the
/// order in which coefficients are laid out in a [`TruncatedTensor`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Word(Vec<usize>);

impl Word {
    pub fn new(letters: Vec<usize>, dim: usize) -> Result<Self> {
        if let Some(&letter) = letters.iter().find(|&&l| l == 0 || l > dim) {
            return Err(Error::LetterOutOfRange { letter, dim });
        }
        Ok(Word(letters))
    }

    /// The empty word `()`.
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn letters(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Largest letter, 0 for the empty word.
    pub fn max_letter(&self) -> usize {
        self.0.iter().copied().max().unwrap_or(0)
    }

    /// Offset of this word inside its level.
    pub fn level_offset(&self, dim: usize) -> usize {
        self.0.iter().fold(0, |acc, &l| acc * dim + (l - 1))
    }

    /// Inverse of [`Word::level_offset`].
    pub fn from_level_offset(len: usize, mut offset: usize, dim: usize) -> Self {
        let mut letters = vec![0; len];
        for slot in letters.iter_mut().rev() {
            *slot = offset % dim + 1;
            offset /= dim;
        }
        Word(letters)
    }

    /// Concatenation `self` followed by `other`.
    pub fn concat(&self, other: &Word) -> Word {
        let mut letters = self.0.clone();
        letters.extend_from_slice(&other.0);
        Word(letters)
    }

    /// Appends a single letter.
    pub fn push(&self, letter: usize) -> Word {
        let mut letters = self.0.clone();
        letters.push(letter);
        Word(letters)
    }

    /// All words of length `0..=degree`, in storage order.
    pub fn all(dim: usize, degree: usize) -> Vec<Word> {
        let mut words = Vec::with_capacity(tensor_size(dim, degree));
        for k in 0..=degree {
            for off in 0..dim.pow(k as u32) {
                words.push(Word::from_level_offset(k, off, dim));
            }
        }
        words
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, ")")
    }
}

/// Number of coefficients of a tensor truncated at `degree`: `sum_k d^k`.
pub fn tensor_size(dim: usize, degree: usize) -> usize {
    (0..=degree).map(|k| dim.pow(k as u32)).sum()
}

fn level_start(dim: usize, k: usize) -> usize {
    tensor_size(dim, k) - dim.pow(k as u32)
}

/// An element of the truncated tensor algebra `T^n(R^d)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TensorRepr", into = "TensorRepr")]
pub struct TruncatedTensor {
    dim: usize,
    degree: usize,
    coeffs: Vec<f64>,
}

/// JSON layout: `{"d": .., "n": .., "levels": [[level 0], [level 1], ...]}`,
/// each level in lexicographic word order.
#[derive(Serialize, Deserialize)]
struct TensorRepr {
    d: usize,
    n: usize,
    levels: Vec<Vec<f64>>,
}

impl TryFrom<TensorRepr> for TruncatedTensor {
    type Error = Error;

    fn try_from(repr: TensorRepr) -> Result<Self> {
        if repr.levels.len() != repr.n + 1 {
            return Err(Error::InvalidArgument(format!(
                "expected {} levels, found {}",
                repr.n + 1,
                repr.levels.len()
            )));
        }
        TruncatedTensor::from_levels(repr.d, repr.levels)
    }
}

impl From<TruncatedTensor> for TensorRepr {
    fn from(t: TruncatedTensor) -> Self {
        TensorRepr {
            d: t.dim,
            n: t.degree,
            levels: (0..=t.degree).map(|k| t.level(k).to_vec()).collect(),
        }
    }
}

impl TruncatedTensor {
    pub fn zeros(dim: usize, degree: usize) -> Self {
        assert!(dim > 0, "tensor dimension must be positive");
        TruncatedTensor {
            dim,
            degree,
            coeffs: vec![0.0; tensor_size(dim, degree)],
        }
    }

    /// The unit `(1, 0, 0, ...)`.
    pub fn one(dim: usize, degree: usize) -> Self {
        let mut t = Self::zeros(dim, degree);
        t.coeffs[0] = 1.0;
        t
    }

    pub fn from_levels(dim: usize, levels: Vec<Vec<f64>>) -> Result<Self> {
        if dim == 0 || levels.is_empty() {
            return Err(Error::InvalidArgument(
                "tensor needs a positive dimension and at least level 0".into(),
            ));
        }
        let degree = levels.len() - 1;
        let mut coeffs = Vec::with_capacity(tensor_size(dim, degree));
        for (k, level) in levels.into_iter().enumerate() {
            if level.len() != dim.pow(k as u32) {
                return Err(Error::InvalidArgument(format!(
                    "level {k} has {} entries, expected {}",
                    level.len(),
                    dim.pow(k as u32)
                )));
            }
            coeffs.extend(level);
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Numerical("non-finite tensor coefficient".into()));
        }
        Ok(TruncatedTensor {
            dim,
            degree,
            coeffs,
        })
    }

    /// Builds a tensor from its flat coefficient vector (storage order).
    pub fn from_flat(dim: usize, degree: usize, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != tensor_size(dim, degree) {
            return Err(Error::InvalidArgument(format!(
                "expected {} coefficients, found {}",
                tensor_size(dim, degree),
                coeffs.len()
            )));
        }
        Ok(TruncatedTensor {
            dim,
            degree,
            coeffs,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Flat coefficients in storage (graded lexicographic) order.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn level(&self, k: usize) -> &[f64] {
        let start = level_start(self.dim, k);
        &self.coeffs[start..start + self.dim.pow(k as u32)]
    }

    pub fn level_mut(&mut self, k: usize) -> &mut [f64] {
        let start = level_start(self.dim, k);
        let len = self.dim.pow(k as u32);
        &mut self.coeffs[start..start + len]
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim || self.degree != other.degree {
            return Err(Error::ShapeMismatch(
                self.dim,
                self.degree,
                other.dim,
                other.degree,
            ));
        }
        Ok(())
    }

    fn check_word(&self, w: &Word) -> Result<()> {
        if w.len() > self.degree {
            return Err(Error::WordTooLong {
                len: w.len(),
                degree: self.degree,
            });
        }
        if w.max_letter() > self.dim {
            return Err(Error::LetterOutOfRange {
                letter: w.max_letter(),
                dim: self.dim,
            });
        }
        Ok(())
    }

    /// Coefficient of the word `w`, i.e. `pi^w(self)`.
    pub fn project(&self, w: &Word) -> Result<f64> {
        self.check_word(w)?;
        Ok(self.coeffs[level_start(self.dim, w.len()) + w.level_offset(self.dim)])
    }

    /// Convenience wrapper around [`TruncatedTensor::project`] taking raw letters.
    pub fn coeff(&self, letters: &[usize]) -> Result<f64> {
        self.project(&Word::new(letters.to_vec(), self.dim)?)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + b)
            .collect();
        Ok(TruncatedTensor {
            coeffs,
            ..self.clone()
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a - b)
            .collect();
        Ok(TruncatedTensor {
            coeffs,
            ..self.clone()
        })
    }

    pub fn scale(&self, s: f64) -> Self {
        TruncatedTensor {
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
            ..self.clone()
        }
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &Self) -> Result<()> {
        self.check_same_shape(other)?;
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += s * b;
        }
        Ok(())
    }

    /// Truncated tensor product: level `k` of the result is
    /// `sum_{j=0}^{k} a_j ⊗ b_{k-j}`; levels above the degree are dropped.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let d = self.dim;
        let mut out = Self::zeros(d, self.degree);
        for k in 0..=self.degree {
            let start_k = level_start(d, k);
            for j in 0..=k {
                let a = self.level(j);
                let b = other.level(k - j);
                let width = b.len();
                for (ia, &av) in a.iter().enumerate() {
                    if av == 0.0 {
                        continue;
                    }
                    let row = &mut out.coeffs[start_k + ia * width..start_k + (ia + 1) * width];
                    for (o, &bv) in row.iter_mut().zip(b) {
                        *o += av * bv;
                    }
                }
            }
        }
        Ok(out)
    }

    /// `sum_{k=0}^{n} v^{⊗k} / k!` for a level-one vector `v`.
    pub fn exp(v: &[f64], degree: usize) -> Self {
        let d = v.len();
        let mut out = Self::one(d, degree);
        for k in 1..=degree {
            let (prev, cur) = out.coeffs.split_at_mut(level_start(d, k));
            let prev = &prev[level_start(d, k - 1)..];
            let inv_k = 1.0 / k as f64;
            for (ip, &pv) in prev.iter().enumerate() {
                for (iv, &vv) in v.iter().enumerate() {
                    cur[ip * d + iv] = pv * vv * inv_k;
                }
            }
        }
        out
    }

    /// In-place `self ← self ⊗ exp(v)` via a Horner scheme, descending over
    /// levels so lower levels are still the old values when they are read.
    pub fn mul_exp_in_place(&mut self, v: &[f64]) {
        let d = self.dim;
        assert_eq!(v.len(), d, "increment dimension mismatch");
        if v.iter().all(|&x| x == 0.0) {
            return;
        }
        let mut acc: Vec<f64> = Vec::new();
        let mut next: Vec<f64> = Vec::new();
        for k in (1..=self.degree).rev() {
            // acc = a_0 ⊗ v / k, then acc = (acc + a_j) ⊗ v / (k - j)
            acc.clear();
            acc.push(self.coeffs[0]);
            for j in 0..k {
                if j > 0 {
                    for (x, y) in acc.iter_mut().zip(self.level(j)) {
                        *x += y;
                    }
                }
                let f = 1.0 / (k - j) as f64;
                next.clear();
                next.reserve(acc.len() * d);
                for &x in &acc {
                    for &vi in v {
                        next.push(x * vi * f);
                    }
                }
                std::mem::swap(&mut acc, &mut next);
            }
            for (x, y) in self.level_mut(k).iter_mut().zip(&acc) {
                *x += y;
            }
        }
    }

    /// Copy of levels `0..=m`.
    pub fn truncate(&self, m: usize) -> Result<Self> {
        if m > self.degree {
            return Err(Error::DegreeTooLow {
                requested: m,
                available: self.degree,
            });
        }
        Ok(TruncatedTensor {
            dim: self.dim,
            degree: m,
            coeffs: self.coeffs[..tensor_size(self.dim, m)].to_vec(),
        })
    }

    /// Words in storage order, paired with their coefficients.
    pub fn iter_words(&self) -> impl Iterator<Item = (Word, f64)> + '_ {
        Word::all(self.dim, self.degree)
            .into_iter()
            .zip(self.coeffs.iter().copied())
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// A finite linear combination of coordinate forms `pi^I`, acting on tensors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearForm {
    dim: usize,
    terms: BTreeMap<Word, f64>,
}

impl LinearForm {
    pub fn zero(dim: usize) -> Self {
        LinearForm {
            dim,
            terms: BTreeMap::new(),
        }
    }

    /// `pi^{()}`, the unit for the shuffle product.
    pub fn unit(dim: usize) -> Self {
        Self::word(Word::empty(), dim)
    }

    /// `pi^w`.
    pub fn word(w: Word, dim: usize) -> Self {
        let mut f = Self::zero(dim);
        f.add_term(w, 1.0);
        f
    }

    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = (Word, f64)>) -> Result<Self> {
        let mut f = Self::zero(dim);
        for (w, c) in terms {
            if w.max_letter() > dim {
                return Err(Error::LetterOutOfRange {
                    letter: w.max_letter(),
                    dim,
                });
            }
            f.add_term(w, c);
        }
        Ok(f)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &BTreeMap<Word, f64> {
        &self.terms
    }

    pub fn coefficient(&self, w: &Word) -> f64 {
        self.terms.get(w).copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Length of the longest word carrying a coefficient.
    pub fn max_len(&self) -> usize {
        self.terms.keys().map(Word::len).max().unwrap_or(0)
    }

    fn add_term(&mut self, w: Word, c: f64) {
        use std::collections::btree_map::Entry;
        if c == 0.0 {
            return;
        }
        match self.terms.entry(w) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if *e.get() == 0.0 {
                    e.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (w, &c) in &other.terms {
            out.add_term(w.clone(), c);
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = Self::zero(self.dim);
        for (w, &c) in &self.terms {
            out.add_term(w.clone(), c * s);
        }
        out
    }

    /// Bilinear extension of [`shuffle_words`].
    pub fn shuffle(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.dim);
        for (wi, &ci) in &self.terms {
            for (wj, &cj) in &other.terms {
                for (w, m) in shuffle_words(wi, wj, self.dim).terms {
                    out.add_term(w, ci * cj * m);
                }
            }
        }
        out
    }

    /// `sum_w c_w * pi^w(a)`.
    pub fn apply(&self, a: &TruncatedTensor) -> Result<f64> {
        if self.dim != a.dim() {
            return Err(Error::ShapeMismatch(self.dim, self.max_len(), a.dim(), a.degree()));
        }
        self.terms
            .iter()
            .try_fold(0.0, |acc, (w, &c)| Ok(acc + c * a.project(w)?))
    }
}

/// Shuffle product of two words as a formal sum with multiplicities.
///
/// Uses the recursion `(ua)⧢(vb) = ((u)⧢(vb))a + ((ua)⧢(v))b` tabulated over
/// prefix lengths, since every subproblem is a pair of prefixes.
pub fn shuffle_words(left: &Word, right: &Word, dim: usize) -> LinearForm {
    let (a, b) = (left.letters(), right.letters());
    // table[i][j] = shuffle of a[..i] and b[..j]
    let mut prev_row: Vec<BTreeMap<Vec<usize>, f64>> = Vec::with_capacity(b.len() + 1);
    for j in 0..=b.len() {
        prev_row.push(BTreeMap::from([(b[..j].to_vec(), 1.0)]));
    }
    for i in 1..=a.len() {
        let mut row: Vec<BTreeMap<Vec<usize>, f64>> = Vec::with_capacity(b.len() + 1);
        row.push(BTreeMap::from([(a[..i].to_vec(), 1.0)]));
        for j in 1..=b.len() {
            let mut cell = BTreeMap::new();
            for (w, &m) in &prev_row[j] {
                let mut w = w.clone();
                w.push(a[i - 1]);
                *cell.entry(w).or_insert(0.0) += m;
            }
            for (w, &m) in &row[j - 1] {
                let mut w = w.clone();
                w.push(b[j - 1]);
                *cell.entry(w).or_insert(0.0) += m;
            }
            row.push(cell);
        }
        prev_row = row;
    }
    let cell = prev_row.pop().expect("table has at least one column");
    LinearForm {
        dim,
        terms: cell.into_iter().map(|(w, m)| (Word(w), m)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(letters: &[usize]) -> Word {
        Word(letters.to_vec())
    }

    #[test]
    fn word_offsets_round_trip() {
        for word in Word::all(3, 4) {
            let off = word.level_offset(3);
            assert_eq!(Word::from_level_offset(word.len(), off, 3), word);
        }
        assert_eq!(w(&[2, 1]).level_offset(2), 2);
    }

    #[test]
    fn word_rejects_bad_letters() {
        assert!(Word::new(vec![0], 2).is_err());
        assert!(Word::new(vec![3], 2).is_err());
        assert!(Word::new(vec![1, 2], 2).is_ok());
    }

    #[test]
    fn word_order_is_graded() {
        assert!(w(&[2]) < w(&[1, 1]));
        assert!(w(&[]) < w(&[1]));
        assert!(w(&[1, 2]) < w(&[2, 1]));
    }

    #[test]
    fn add_disjoint_supports() {
        let a = TruncatedTensor::from_levels(2, vec![vec![1.0], vec![0.0, 0.0], vec![0.0; 4]]).unwrap();
        let b = TruncatedTensor::from_levels(2, vec![vec![0.0], vec![3.0, 4.0], vec![0.0; 4]]).unwrap();
        let c = a.add(&b).unwrap();
        assert_eq!(c.level(0), &[1.0]);
        assert_eq!(c.level(1), &[3.0, 4.0]);
        let zero = TruncatedTensor::zeros(2, 2);
        assert_eq!(c.add(&zero).unwrap(), c);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let a = TruncatedTensor::zeros(2, 2);
        let b = TruncatedTensor::zeros(2, 3);
        assert!(matches!(a.add(&b), Err(Error::ShapeMismatch(..))));
        assert!(a.mul(&b).is_err());
    }

    #[test]
    fn mul_unit_and_level_two() {
        let u = [1.5, -2.0];
        let v = [0.25, 3.0];
        let a = TruncatedTensor::from_levels(2, vec![vec![1.0], u.to_vec(), vec![0.0; 4]]).unwrap();
        let b = TruncatedTensor::from_levels(2, vec![vec![1.0], v.to_vec(), vec![0.0; 4]]).unwrap();
        let one = TruncatedTensor::one(2, 2);
        assert_eq!(one.mul(&a).unwrap(), a);
        let c = a.mul(&b).unwrap();
        assert_eq!(c.level(1), &[u[0] + v[0], u[1] + v[1]]);
        let expected: Vec<f64> = vec![u[0] * v[0], u[0] * v[1], u[1] * v[0], u[1] * v[1]];
        assert_eq!(c.level(2), expected.as_slice());
    }

    #[test]
    fn exp_examples() {
        let e = TruncatedTensor::exp(&[2.0], 3);
        assert_eq!(e.coeffs(), &[1.0, 2.0, 2.0, 8.0 / 6.0]);
        let z = TruncatedTensor::exp(&[0.0, 0.0], 3);
        assert_eq!(z, TruncatedTensor::one(2, 3));
        let e2 = TruncatedTensor::exp(&[1.0, 2.0], 2);
        assert_eq!(e2.level(2), &[0.5, 1.0, 1.0, 2.0]);
        assert_eq!(e2.coeff(&[1, 2]).unwrap(), 1.0);
    }

    #[test]
    fn mul_exp_in_place_matches_generic_product() {
        let a = TruncatedTensor::exp(&[0.3, -1.2], 5)
            .mul(&TruncatedTensor::exp(&[2.0, 0.7], 5))
            .unwrap();
        let v = [-0.4, 1.1];
        let expected = a.mul(&TruncatedTensor::exp(&v, 5)).unwrap();
        let mut got = a.clone();
        got.mul_exp_in_place(&v);
        assert!(got.max_abs_diff(&expected).unwrap() < 1e-13);
    }

    #[test]
    fn truncate_examples() {
        let e6 = TruncatedTensor::exp(&[0.5, -1.0], 6);
        assert_eq!(e6.truncate(6).unwrap(), e6);
        let e2 = TruncatedTensor::exp(&[0.5, -1.0], 2);
        assert!(e6.truncate(2).unwrap().max_abs_diff(&e2).unwrap() < 1e-15);
        assert!(matches!(e6.truncate(7), Err(Error::DegreeTooLow { .. })));
    }

    #[test]
    fn project_errors() {
        let e = TruncatedTensor::exp(&[1.0, 2.0], 2);
        assert_eq!(e.project(&Word::empty()).unwrap(), 1.0);
        assert!(matches!(e.project(&w(&[1, 1, 1])), Err(Error::WordTooLong { .. })));
        assert!(matches!(e.project(&w(&[3])), Err(Error::LetterOutOfRange { .. })));
    }

    #[test]
    fn exp_non_commutative_unless_parallel() {
        let u = [1.0, 0.0];
        let v = [0.0, 1.0];
        let lhs = TruncatedTensor::exp(&u, 3).mul(&TruncatedTensor::exp(&v, 3)).unwrap();
        let rhs = TruncatedTensor::exp(&[1.0, 1.0], 3);
        assert!(lhs.max_abs_diff(&rhs).unwrap() > 0.1);
        assert_eq!(lhs.coeff(&[1, 2]).unwrap(), 1.0);
        assert_eq!(lhs.coeff(&[2, 1]).unwrap(), 0.0);

        let p = [0.5, 1.5];
        let q = [1.0, 3.0];
        let lhs = TruncatedTensor::exp(&p, 4).mul(&TruncatedTensor::exp(&q, 4)).unwrap();
        let rhs = TruncatedTensor::exp(&[1.5, 4.5], 4);
        assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-12);
    }

    #[test]
    fn shuffle_examples() {
        let s = shuffle_words(&w(&[1]), &w(&[2]), 2);
        assert_eq!(s.terms().len(), 2);
        assert_eq!(s.coefficient(&w(&[1, 2])), 1.0);
        assert_eq!(s.coefficient(&w(&[2, 1])), 1.0);

        let s = shuffle_words(&w(&[1]), &w(&[1]), 2);
        assert_eq!(s.terms().len(), 1);
        assert_eq!(s.coefficient(&w(&[1, 1])), 2.0);

        let j = w(&[2, 1, 2]);
        let s = shuffle_words(&Word::empty(), &j, 2);
        assert_eq!(s, LinearForm::word(j.clone(), 2));
        assert_eq!(shuffle_words(&j, &Word::empty(), 2), LinearForm::word(j, 2));
    }

    #[test]
    fn shuffle_multiplicity_is_binomial() {
        let i = w(&[1, 2, 1]);
        let j = w(&[2, 2]);
        let total: f64 = shuffle_words(&i, &j, 2).terms().values().sum();
        assert_eq!(total, 10.0);
        let s = shuffle_words(&w(&[1, 2]), &w(&[2]), 2);
        // (1,2,2) arises twice, (2,1,2) once
        assert_eq!(s.coefficient(&w(&[1, 2, 2])), 2.0);
        assert_eq!(s.coefficient(&w(&[2, 1, 2])), 1.0);
    }

    #[test]
    fn linear_form_prunes_zeros_and_applies() {
        let f = LinearForm::word(w(&[1]), 2).add(&LinearForm::word(w(&[1]), 2).scale(-1.0));
        assert!(f.is_zero());
        let e = TruncatedTensor::exp(&[1.0, 2.0], 2);
        assert_eq!(f.apply(&e).unwrap(), 0.0);
        assert_eq!(LinearForm::unit(2).apply(&e).unwrap(), 1.0);
        let g = LinearForm::from_terms(2, [(w(&[1, 2]), 2.0), (w(&[2]), -1.0)]).unwrap();
        assert_eq!(g.apply(&e).unwrap(), 0.0);
        let too_long = LinearForm::word(w(&[1, 1, 1]), 2);
        assert!(too_long.apply(&e).is_err());
    }

    #[test]
    fn json_layout() {
        let e = TruncatedTensor::exp(&[1.0, 2.0], 2);
        let js = serde_json::to_value(&e).unwrap();
        assert_eq!(js["d"], 2);
        assert_eq!(js["n"], 2);
        assert_eq!(js["levels"][2], serde_json::json!([0.5, 1.0, 1.0, 2.0]));
        let back: TruncatedTensor = serde_json::from_value(js).unwrap();
        assert_eq!(back, e);
        let bad = serde_json::json!({"d": 2, "n": 1, "levels": [[1.0], [1.0]]});
        assert!(serde_json::from_value::<TruncatedTensor>(bad).is_err());
        assert_eq!(serde_json::to_string(&w(&[1, 2])).unwrap(), "[1,2]");
    }
}
