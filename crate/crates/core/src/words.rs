//! Words over `{a, b}`, the deterministic branches `zeta_{m,i}` and the
//! random substitution `zeta_m`, plus exact- and legal-word enumeration.
//!
//! Branch images of `a` are `a^i b a^(m-i)` for `0 <= i <= m`; `b` always
//! maps to `a`. The random engine draws the branch for every `a`
//! independently, so each letter of a word is substituted on its own.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

/// Default cap on enumerated word sets.
pub const DEFAULT_WORD_CAP: usize = 10_000_000;

/// Budget on per-word branch combinations in the legal-word closure.
const BRANCH_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    A,
    B,
}

impl Letter {
    pub fn as_char(self) -> char {
        match self {
            Letter::A => 'a',
            Letter::B => 'b',
        }
    }
}

/// A finite word over `{a, b}`; ordering is lexicographic with `a < b`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn new(letters: Vec<Letter>) -> Self {
        Word(letters)
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    /// The one-letter word `a`.
    pub fn a() -> Self {
        Word(vec![Letter::A])
    }

    /// The one-letter word `b`.
    pub fn b() -> Self {
        Word(vec![Letter::B])
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

    /// Occurrence counts `(#a, #b)`.
    pub fn counts(&self) -> (u64, u64) {
        let a = self.0.iter().filter(|&&l| l == Letter::A).count() as u64;
        (a, self.0.len() as u64 - a)
    }

    pub fn subword(&self, start: usize, len: usize) -> Word {
        Word(self.0[start..start + len].to_vec())
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                'a' => Ok(Letter::A),
                'b' => Ok(Letter::B),
                other => Err(Error::InvalidArgument(format!(
                    "invalid letter {other:?} in word (expected only `a` and `b`)"
                ))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Word)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.0 {
            write!(f, "{}", l.as_char())?;
        }
        Ok(())
    }
}

/// Choosing probabilities `(p_0, ..., p_m)`.
///
/// Accepted when the entries lie in `[0, 1]` and sum to 1 within `1e-9`;
/// the stored vector is renormalised so the sum is exact to machine
/// precision. Generic vectors (`p_j > 0` for all `j`) keep every induced
/// substitution matrix primitive.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector {
    probs: Vec<f64>,
}

impl ProbVector {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::InvalidProbVector(format!(
                "need at least 2 entries (m >= 1), got {}",
                probs.len()
            )));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0 || *p > 1.0) {
            return Err(Error::InvalidProbVector(format!(
                "entries must lie in [0, 1], got {probs:?}"
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidProbVector(format!(
                "entries must sum to 1 within 1e-9, got sum = {sum}"
            )));
        }
        Ok(ProbVector {
            probs: probs.iter().map(|p| p / sum).collect(),
        })
    }

    /// The degenerate vector `e_i` selecting branch `i` with certainty.
    pub fn deterministic(m: u32, branch: u32) -> Result<Self> {
        if branch > m {
            return Err(Error::BranchOutOfRange { m, branch });
        }
        let mut probs = vec![0.0; m as usize + 1];
        probs[branch as usize] = 1.0;
        Ok(ProbVector { probs })
    }

    pub fn uniform(m: u32) -> Self {
        ProbVector {
            probs: vec![1.0 / (m as f64 + 1.0); m as usize + 1],
        }
    }

    /// Family parameter: the vector has `m + 1` entries.
    pub fn m(&self) -> u32 {
        (self.probs.len() - 1) as u32
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, branch: u32) -> f64 {
        self.probs[branch as usize]
    }

    pub fn is_generic(&self) -> bool {
        self.probs.iter().all(|&p| p > 0.0)
    }

    /// `(p_0, p_1)` when `m = 1`.
    pub fn as_pair(&self) -> Option<(f64, f64)> {
        if self.probs.len() == 2 {
            Some((self.probs[0], self.probs[1]))
        } else {
            None
        }
    }
}

/// A finite two-sided patch `left | right` with the marker between the
/// halves. Both halves are stored in reading order; substitution acts on
/// each half independently, so the marker never moves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwoSidedPatch {
    left: Word,
    right: Word,
}

impl TwoSidedPatch {
    pub fn new(left: Word, right: Word) -> Self {
        TwoSidedPatch { left, right }
    }

    /// The seed `(a | a)`.
    pub fn seed() -> Self {
        TwoSidedPatch {
            left: Word::a(),
            right: Word::a(),
        }
    }

    pub fn left(&self) -> &Word {
        &self.left
    }

    pub fn right(&self) -> &Word {
        &self.right
    }

    /// The patch read as a single word `left . right`.
    pub fn concatenated(&self) -> Word {
        self.left.concat(&self.right)
    }

    pub fn len(&self) -> usize {
        self.left.len() + self.right.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl fmt::Display for TwoSidedPatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|{}", self.left, self.right)
    }
}

/// Image of one letter under the deterministic branch `zeta_{m,i}`.
pub(crate) fn branch_image(m: u32, branch: u32, letter: Letter) -> Vec<Letter> {
    match letter {
        Letter::B => vec![Letter::A],
        Letter::A => {
            let mut v = Vec::with_capacity(m as usize + 1);
            v.extend(std::iter::repeat(Letter::A).take(branch as usize));
            v.push(Letter::B);
            v.extend(std::iter::repeat(Letter::A).take((m - branch) as usize));
            v
        }
    }
}

/// Letterwise image under `zeta_{m,i}`: `a -> a^i b a^(m-i)`, `b -> a`.
pub fn apply_deterministic(w: &Word, m: u32, branch: u32) -> Result<Word> {
    if branch > m {
        return Err(Error::BranchOutOfRange { m, branch });
    }
    let mut out = Vec::with_capacity(w.len() * (m as usize + 1));
    for &l in w.letters() {
        out.extend(branch_image(m, branch, l));
    }
    Ok(Word::new(out))
}

// Counter-based branch selection: every letter's draw is a pure hash of
// (seed, stream, generation, position), so results do not depend on
// traversal order and are reproducible bit-for-bit.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn branch_unit(seed: u64, stream: u64, generation: u32, position: u64) -> f64 {
    let mut h = mix64(seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    h = mix64(h ^ stream.wrapping_mul(0xd134_2543_de82_ef95));
    h = mix64(h ^ (generation as u64).wrapping_mul(0xca5a_8268_55bc_8b41));
    h = mix64(h ^ position);
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn pick_branch(p: &ProbVector, unit: f64) -> u32 {
    let mut acc = 0.0;
    for (i, &pi) in p.probs().iter().enumerate() {
        acc += pi;
        if unit < acc {
            return i as u32;
        }
    }
    p.m()
}

fn apply_random_keyed(w: &Word, p: &ProbVector, seed: u64, stream: u64, generation: u32) -> Word {
    let m = p.m();
    let mut out = Vec::with_capacity(w.len() * (m as usize + 1));
    for (pos, &l) in w.letters().iter().enumerate() {
        match l {
            Letter::B => out.push(Letter::A),
            Letter::A => {
                let branch = pick_branch(p, branch_unit(seed, stream, generation, pos as u64));
                out.extend(branch_image(m, branch, Letter::A));
            }
        }
    }
    Word::new(out)
}

/// One application of the random substitution `zeta_m`: every `a` is
/// replaced by `zeta_{m,i}(a)` with probability `p_i`, drawn independently
/// per letter; every `b` becomes `a`. Deterministic for a fixed seed.
pub fn apply_random(w: &Word, p: &ProbVector, seed: u64) -> Word {
    apply_random_keyed(w, p, seed, 0, 0)
}

/// Iterates `zeta_m` on the seed patch `(a | a)`, substituting the halves
/// independently and keeping the marker fixed. After `k` steps each half is
/// a random image of `a` under `zeta_m^k`, of length `ell_{m,k+2}`.
pub fn iterate_seed_patch(p: &ProbVector, steps: u32, seed: u64) -> TwoSidedPatch {
    let mut patch = TwoSidedPatch::seed();
    for g in 0..steps {
        patch = TwoSidedPatch {
            left: apply_random_keyed(&patch.left, p, seed, 1, g),
            right: apply_random_keyed(&patch.right, p, seed, 2, g),
        };
    }
    patch
}

/// Exact-word length `ell_{m,k} = m*ell_{m,k-1} + ell_{m,k-2}` with
/// `ell_{m,1} = ell_{m,2} = 1`.
pub fn word_length(m: u32, k: u32) -> u64 {
    assert!(m >= 1 && k >= 1);
    let (mut prev, mut cur) = (1u64, 1u64);
    for _ in 2..k {
        let next = (m as u64)
            .checked_mul(cur)
            .and_then(|x| x.checked_add(prev))
            .expect("word_length overflow");
        prev = cur;
        cur = next;
    }
    if k == 1 {
        prev
    } else {
        cur
    }
}

/// The set `G_{m,k}` of exact substitution words, built by the
/// concatenation rule
/// `G_{m,k} = union_i prod_j G_{m, k-1-delta_ij}` from the base cases
/// `G_{m,1} = {b}`, `G_{m,2} = {a}`.
///
/// Fails with [`Error::CapExceeded`] as soon as a level outgrows `cap`.
pub fn exact_words(m: u32, k: u32, cap: usize) -> Result<BTreeSet<Word>> {
    assert!(m >= 1 && k >= 1);
    let mut prev: BTreeSet<Word> = [Word::b()].into();
    let mut cur: BTreeSet<Word> = [Word::a()].into();
    if k == 1 {
        return Ok(prev);
    }
    for _ in 3..=k {
        let mut next = BTreeSet::new();
        for i in 0..=m {
            let factors: Vec<&BTreeSet<Word>> = (0..=m)
                .map(|j| if j == i { &prev } else { &cur })
                .collect();
            let mut buf = Vec::new();
            product_into(&factors, &mut buf, &mut next, cap)?;
        }
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

fn product_into(
    factors: &[&BTreeSet<Word>],
    prefix: &mut Vec<Letter>,
    out: &mut BTreeSet<Word>,
    cap: usize,
) -> Result<()> {
    match factors.split_first() {
        None => {
            out.insert(Word::new(prefix.clone()));
            if out.len() > cap {
                return Err(Error::CapExceeded { cap });
            }
        }
        Some((first, rest)) => {
            for w in first.iter() {
                let mark = prefix.len();
                prefix.extend_from_slice(w.letters());
                product_into(rest, prefix, out, cap)?;
                prefix.truncate(mark);
            }
        }
    }
    Ok(())
}

/// All per-letter branch combinations of `w` under `zeta_m`, without
/// probabilities. The number of images is `(m+1)^(#a)`.
pub(crate) fn all_random_images(m: u32, w: &Word) -> Vec<Word> {
    let mut images: Vec<Vec<Letter>> = vec![Vec::new()];
    for &l in w.letters() {
        match l {
            Letter::B => {
                for img in &mut images {
                    img.push(Letter::A);
                }
            }
            Letter::A => {
                let mut next = Vec::with_capacity(images.len() * (m as usize + 1));
                for img in &images {
                    for i in 0..=m {
                        let mut e = img.clone();
                        e.extend(branch_image(m, i, Letter::A));
                        next.push(e);
                    }
                }
                images = next;
            }
        }
    }
    images.into_iter().map(Word::new).collect()
}

/// The stratum `D_{m,len}` of legal words, computed by closure.
///
/// Starting from `{b}`, repeatedly take every branch-combination image of
/// every known word and collect all subwords of length at most `len`, until
/// nothing new appears. Because the substitution is non-erasing, any
/// length-`len` subword of an image already arises from a subword of length
/// at most `len` of the preimage, so working on all lengths `<= len`
/// simultaneously is complete.
pub fn legal_words(m: u32, len: usize) -> Result<BTreeSet<Word>> {
    assert!(m >= 1 && len >= 1);
    let budget = (m as u64 + 1).checked_pow(len as u32);
    if budget.is_none() || budget.unwrap() > BRANCH_BUDGET {
        return Err(Error::CapExceeded {
            cap: BRANCH_BUDGET as usize,
        });
    }
    let mut pool: BTreeSet<Word> = BTreeSet::new();
    let mut queue: VecDeque<Word> = VecDeque::new();
    pool.insert(Word::b());
    queue.push_back(Word::b());
    while let Some(w) = queue.pop_front() {
        for image in all_random_images(m, &w) {
            for start in 0..image.len() {
                let max_len = len.min(image.len() - start);
                for l in 1..=max_len {
                    let sub = image.subword(start, l);
                    if pool.insert(sub.clone()) {
                        queue.push_back(sub);
                    }
                }
            }
        }
    }
    Ok(pool.into_iter().filter(|w| w.len() == len).collect())
}
