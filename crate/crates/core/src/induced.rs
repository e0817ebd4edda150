//! Induced substitutions on legal `ell`-words and the word frequencies they
//! determine.
//!
//! The induced substitution sends a legal word `w` to the sequence of
//! sliding windows `v[k..k+ell]`, `0 <= k < |zeta_m(w_0)|`, of a random image
//! `v` of `w`. Its expected-occurrence matrix is primitive for generic
//! choosing probabilities, and the statistically normalised right
//! Perron-Frobenius eigenvector assigns each legal word its frequency, the
//! value of the shift-invariant measure on the corresponding cylinder set.

use std::collections::BTreeMap;

use crate::words::{iterate_seed_patch, legal_words, Letter, ProbVector, Word};
use crate::{Error, Result};

/// Expected-occurrence matrix of the induced substitution on `D_{m,ell}`.
///
/// `entry(i, j)` is the expected number of occurrences of `words[i]` among
/// the first `|zeta_m(w_j[0])|` sliding windows of a random image of
/// `words[j]`.
#[derive(Debug, Clone)]
pub struct InducedMatrix {
    m: u32,
    ell: usize,
    words: Vec<Word>,
    entries: Vec<Vec<f64>>,
}

impl InducedMatrix {
    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn dim(&self) -> usize {
        self.words.len()
    }

    /// Row/column labels, in sorted (lexicographic) order.
    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.entries[row][col]
    }

    pub fn column_sum(&self, col: usize) -> f64 {
        (0..self.dim()).map(|row| self.entries[row][col]).sum()
    }

    fn apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| self.entries[i][j] * v[j]).sum())
            .collect()
    }
}

/// Word frequencies, summing to 1 over a fixed length stratum.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyVector {
    map: BTreeMap<Word, f64>,
}

impl FrequencyVector {
    pub fn new(map: BTreeMap<Word, f64>) -> Self {
        FrequencyVector { map }
    }

    /// Frequency of `w`, zero when the word never occurs.
    pub fn get(&self, w: &Word) -> f64 {
        self.map.get(w).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Word, f64)> {
        self.map.iter().map(|(w, &f)| (w, f))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.map.values().sum()
    }
}

/// All images of `w` under the induced substitution, with probabilities.
///
/// Each item is the window sequence of one branch combination together with
/// the product of the per-`a` branch probabilities; the probabilities sum
/// to 1. Errors when `w` is not legal.
pub fn induced_images(w: &Word, m: u32, p: &ProbVector) -> Result<Vec<(Vec<Word>, f64)>> {
    assert_eq!(p.m(), m, "probability vector does not match family m");
    if !legal_words(m, w.len())?.contains(w) {
        return Err(Error::IllegalWord(w.to_string()));
    }
    Ok(induced_images_unchecked(w, p))
}

fn induced_images_unchecked(w: &Word, p: &ProbVector) -> Vec<(Vec<Word>, f64)> {
    let m = p.m();
    let ell = w.len();
    let head = match w.letters()[0] {
        Letter::A => m as usize + 1,
        Letter::B => 1,
    };
    let mut results = Vec::new();
    // (image prefix, probability) pairs grown letter by letter
    let mut partial: Vec<(Vec<Letter>, f64)> = vec![(Vec::new(), 1.0)];
    for &l in w.letters() {
        match l {
            Letter::B => {
                for (img, _) in &mut partial {
                    img.push(Letter::A);
                }
            }
            Letter::A => {
                let mut next = Vec::with_capacity(partial.len() * (m as usize + 1));
                for (img, prob) in &partial {
                    for i in 0..=m {
                        let mut e = img.clone();
                        e.extend(crate::words::branch_image(m, i, Letter::A));
                        next.push((e, prob * p.get(i)));
                    }
                }
                partial = next;
            }
        }
    }
    for (img, prob) in partial {
        let windows: Vec<Word> = (0..head)
            .map(|k| Word::new(img[k..k + ell].to_vec()))
            .collect();
        results.push((windows, prob));
    }
    results
}

/// The induced substitution matrix `M_{m,ell}`, by direct enumeration of
/// branch combinations. Word order is lexicographic (`aa, ab, ba, bb` for
/// `ell = 2`).
pub fn induced_matrix(m: u32, ell: usize, p: &ProbVector) -> Result<InducedMatrix> {
    assert_eq!(p.m(), m, "probability vector does not match family m");
    let words: Vec<Word> = legal_words(m, ell)?.into_iter().collect();
    let index: BTreeMap<&Word, usize> = words.iter().zip(0..).collect();
    let dim = words.len();
    let mut entries = vec![vec![0.0f64; dim]; dim];
    for (col, w) in words.iter().enumerate() {
        for (windows, prob) in induced_images_unchecked(w, p) {
            for window in windows {
                let row = *index
                    .get(&window)
                    .unwrap_or_else(|| panic!("window {window} of a legal word must be legal"));
                entries[row][col] += prob;
            }
        }
    }
    Ok(InducedMatrix {
        m,
        ell,
        words,
        entries,
    })
}

/// Dominant eigenpair of the matrix by power iteration, the eigenvector
/// normalised to sum 1. Converges for primitive matrices; degenerate
/// probability vectors that destroy primitivity surface as
/// [`Error::NonConvergence`].
pub fn pf_eigenpair(matrix: &InducedMatrix, tol: f64) -> Result<(f64, Vec<f64>)> {
    const MAX_ITER: usize = 100_000;
    let dim = matrix.dim();
    let mut v = vec![1.0 / dim as f64; dim];
    let mut residual = f64::INFINITY;
    for _ in 0..MAX_ITER {
        let w = matrix.apply(&v);
        let eigenvalue: f64 = w.iter().sum();
        if eigenvalue <= 0.0 {
            return Err(Error::NonConvergence {
                iterations: MAX_ITER,
                residual,
            });
        }
        let next: Vec<f64> = w.iter().map(|x| x / eigenvalue).collect();
        residual = w
            .iter()
            .zip(&v)
            .map(|(wi, vi)| (wi - eigenvalue * vi).abs())
            .fold(0.0, f64::max);
        v = next;
        if residual <= tol {
            return Ok((eigenvalue, v));
        }
    }
    Err(Error::NonConvergence {
        iterations: MAX_ITER,
        residual,
    })
}

/// Word frequencies as the statistically normalised right PF eigenvector.
pub fn pf_frequencies(matrix: &InducedMatrix, tol: f64) -> Result<FrequencyVector> {
    let (_, v) = pf_eigenpair(matrix, tol)?;
    Ok(FrequencyVector::new(
        matrix.words.iter().cloned().zip(v).collect(),
    ))
}

/// Sliding-window relative frequencies over a generated random patch.
///
/// Realises the Birkhoff averages of the cylinder indicators; for patches of
/// length `10^4` and more these settle onto the PF frequencies.
pub fn empirical_frequencies(p: &ProbVector, ell: usize, steps: u32, seed: u64) -> FrequencyVector {
    let patch = iterate_seed_patch(p, steps, seed).concatenated();
    let mut counts: BTreeMap<Word, u64> = BTreeMap::new();
    let windows = patch.len().saturating_sub(ell - 1);
    for start in 0..windows {
        *counts.entry(patch.subword(start, ell)).or_insert(0) += 1;
    }
    FrequencyVector::new(
        counts
            .into_iter()
            .map(|(w, c)| (w, c as f64 / windows as f64))
            .collect(),
    )
}
