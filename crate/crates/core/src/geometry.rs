//! Geometric realisation of words as point sets on the line, the
//! cut-and-project windows in internal space, and model-set generation.
//!
//! Letters `a` and `b` stand for intervals of lengths `lambda_m` and `1`;
//! the left endpoints of the tiles form the point set. Under the star map
//! the points of any generating random patch land inside the superwindow
//! `W_m = [lambda' - 1, 1 - lambda']`; the deterministic branches fill the
//! smaller translated windows `W_{m,i}`. Window membership of lattice points
//! is decided in exact `Z[lambda_m]` arithmetic whenever the endpoints lie
//! in the ring, so boundary cases cannot be misclassified by rounding.

use std::fmt;

use crate::algebra::{lambda_conj_value, sqrt_disc, QuadInt};
use crate::words::{Letter, TwoSidedPatch, Word};
use crate::{Error, Result};

/// A finite, strictly increasing set of left endpoints in `Z[lambda_m]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointSet {
    m: u32,
    points: Vec<QuadInt>,
}

impl PointSet {
    /// Builds a point set, sorting and deduplicating exactly.
    pub fn new(m: u32, mut points: Vec<QuadInt>) -> Self {
        points.sort();
        points.dedup();
        PointSet { m, points }
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[QuadInt] {
        &self.points
    }

    pub fn float_positions(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value()).collect()
    }

    /// Distance from first to last point, exact.
    pub fn span(&self) -> Option<QuadInt> {
        match self.points.as_slice() {
            [] => None,
            [first, .., last] => Some(*last - *first),
            [_] => Some(QuadInt::zero(self.m)),
        }
    }
}

/// Total length of the interval a word tiles: `#b + #a * lambda_m`, exact.
pub fn word_span(w: &Word, m: u32) -> QuadInt {
    let (a, b) = w.counts();
    QuadInt::new(m, b as i64, a as i64)
}

/// Left endpoints of the tiles of `w`, starting at `anchor`.
pub fn realize_word(w: &Word, m: u32, anchor: QuadInt) -> PointSet {
    let mut pos = anchor;
    let mut points = Vec::with_capacity(w.len());
    for &l in w.letters() {
        points.push(pos);
        pos = pos
            + match l {
                Letter::A => QuadInt::lambda(m),
                Letter::B => QuadInt::one(m),
            };
    }
    PointSet { m, points }
}

/// Realisation of a two-sided patch with the marker at the origin: the
/// right half starts at 0, the left half ends at 0.
pub fn realize_patch(patch: &TwoSidedPatch, m: u32) -> PointSet {
    let left_span = word_span(patch.left(), m);
    realize_word(&patch.concatenated(), m, -left_span)
}

/// Values of the star map on every point, in order.
pub fn star_project(ps: &PointSet) -> Vec<f64> {
    ps.points().iter().map(|p| p.star_value()).collect()
}

/// One endpoint of a window: exact when it lies in `Z[lambda_m]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Endpoint {
    Exact(QuadInt),
    Real(f64),
}

impl Endpoint {
    pub fn value(&self) -> f64 {
        match self {
            Endpoint::Exact(q) => q.value(),
            Endpoint::Real(x) => *x,
        }
    }
}

/// An interval in internal space with per-endpoint closure flags.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    lo: Endpoint,
    hi: Endpoint,
    lo_closed: bool,
    hi_closed: bool,
}

impl Window {
    pub fn new(lo: Endpoint, hi: Endpoint, lo_closed: bool, hi_closed: bool) -> Self {
        assert!(lo.value() < hi.value(), "window endpoints must satisfy lo < hi");
        Window {
            lo,
            hi,
            lo_closed,
            hi_closed,
        }
    }

    pub fn closed_exact(lo: QuadInt, hi: QuadInt) -> Self {
        Window::new(Endpoint::Exact(lo), Endpoint::Exact(hi), true, true)
    }

    pub fn closed_real(lo: f64, hi: f64) -> Self {
        Window::new(Endpoint::Real(lo), Endpoint::Real(hi), true, true)
    }

    pub fn lo(&self) -> Endpoint {
        self.lo
    }

    pub fn hi(&self) -> Endpoint {
        self.hi
    }

    pub fn lo_value(&self) -> f64 {
        self.lo.value()
    }

    pub fn hi_value(&self) -> f64 {
        self.hi.value()
    }

    pub fn length(&self) -> f64 {
        self.hi_value() - self.lo_value()
    }

    /// Whether `star(x)` lies in the window; exact against exact endpoints.
    pub fn contains_star(&self, x: &QuadInt) -> bool {
        let star = x.star();
        let lo_ok = match self.lo {
            Endpoint::Exact(q) => {
                let ord = star.cmp(&q);
                ord == std::cmp::Ordering::Greater || (self.lo_closed && ord == std::cmp::Ordering::Equal)
            }
            Endpoint::Real(v) => {
                if self.lo_closed {
                    star.value() >= v
                } else {
                    star.value() > v
                }
            }
        };
        let hi_ok = match self.hi {
            Endpoint::Exact(q) => {
                let ord = star.cmp(&q);
                ord == std::cmp::Ordering::Less || (self.hi_closed && ord == std::cmp::Ordering::Equal)
            }
            Endpoint::Real(v) => {
                if self.hi_closed {
                    star.value() <= v
                } else {
                    star.value() < v
                }
            }
        };
        lo_ok && hi_ok
    }

    /// Float membership test for external data (closure respected, no slack).
    pub fn contains_value(&self, v: f64) -> bool {
        let lo_ok = if self.lo_closed {
            v >= self.lo_value()
        } else {
            v > self.lo_value()
        };
        let hi_ok = if self.hi_closed {
            v <= self.hi_value()
        } else {
            v < self.hi_value()
        };
        lo_ok && hi_ok
    }

    /// How far `v` lies outside, 0 when inside (closure ignored).
    pub fn excess(&self, v: f64) -> f64 {
        (self.lo_value() - v).max(v - self.hi_value()).max(0.0)
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{:.6}, {:.6}{}",
            if self.lo_closed { '[' } else { '(' },
            self.lo_value(),
            self.hi_value(),
            if self.hi_closed { ']' } else { ')' },
        )
    }
}

/// The superwindow `W_m = [lambda' - 1, 1 - lambda']`, closed, with exact
/// endpoints. Star images of every generating random patch stay inside.
pub fn superwindow(m: u32) -> Window {
    // lambda' - 1 = (m - 1) - lambda, 1 - lambda' = (1 - m) + lambda
    Window::closed_exact(
        QuadInt::new(m, m as i64 - 1, -1),
        QuadInt::new(m, 1 - m as i64, 1),
    )
}

/// Legal two-letter seeds distinguishing the singular windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedPair {
    /// `(a | a)`
    AA,
    /// `(a | b)`
    AB,
    /// `(b | a)`
    BA,
}

impl SeedPair {
    fn name(self) -> &'static str {
        match self {
            SeedPair::AA => "(a|a)",
            SeedPair::AB => "(a|b)",
            SeedPair::BA => "(b|a)",
        }
    }
}

/// The window `W_{m,i}` of the deterministic branch `zeta_{m,i}`.
///
/// For `0 < i < m` this is the closed interval `i*tau_m + [lambda', 1]` with
/// `tau_m = -(lambda' + 1)/m`; the seed is ignored. The singular branches
/// `i = 0` and `i = m` split into half-open windows distinguished by the
/// legal two-letter seed, and the seed must be supplied.
pub fn deterministic_window(m: u32, i: u32, seed: Option<SeedPair>) -> Result<Window> {
    if i > m {
        return Err(Error::BranchOutOfRange { m, branch: i });
    }
    let conj = lambda_conj_value(m);
    if i > 0 && i < m {
        let shift = -(i as f64) * (conj + 1.0) / m as f64;
        return Ok(Window::closed_real(shift + conj, shift + 1.0));
    }
    // exact endpoints: lambda' = m - lambda, so +-1 and +-lambda' are in the ring
    let conj_exact = QuadInt::new(m, m as i64, -1);
    let one = QuadInt::one(m);
    match (i, seed) {
        (0, Some(SeedPair::AA)) => Ok(Window::new(
            Endpoint::Exact(conj_exact),
            Endpoint::Exact(one),
            true,
            false,
        )),
        (0, Some(SeedPair::AB)) => Ok(Window::new(
            Endpoint::Exact(conj_exact),
            Endpoint::Exact(one),
            false,
            true,
        )),
        (_, Some(SeedPair::AA)) if i == m => Ok(Window::new(
            Endpoint::Exact(-one),
            Endpoint::Exact(-conj_exact),
            false,
            true,
        )),
        (_, Some(SeedPair::BA)) if i == m => Ok(Window::new(
            Endpoint::Exact(-one),
            Endpoint::Exact(-conj_exact),
            true,
            false,
        )),
        (_, Some(s)) => Err(Error::IllegalSeed {
            branch: i,
            seed: s.name(),
        }),
        (_, None) => Err(Error::IllegalSeed {
            branch: i,
            seed: "(none)",
        }),
    }
}

/// Result of checking a point set against a window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowCheckReport {
    pub all_inside: bool,
    /// Worst distance outside the window, in internal-space units.
    pub max_violation: f64,
    pub violations: usize,
    pub checked: usize,
}

/// Checks `star(ps)` against the window, respecting closure flags.
pub fn window_check(ps: &PointSet, w: &Window) -> WindowCheckReport {
    let mut violations = 0;
    let mut max_violation = 0.0f64;
    for p in ps.points() {
        if !w.contains_star(p) {
            violations += 1;
            max_violation = max_violation.max(w.excess(p.star_value()));
        }
    }
    WindowCheckReport {
        all_inside: violations == 0,
        max_violation,
        violations,
        checked: ps.len(),
    }
}

/// Outcome of the six-condition invariance check for a candidate pair
/// `A = [alpha, beta]`, `B = [gamma, delta]` of letter windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuperwindowConditions {
    /// The six non-redundant inclusion conditions, in order.
    pub conditions: [bool; 6],
    /// Minimality of `[gamma, beta]`: `lambda'(beta + m) = gamma`.
    pub minimality: bool,
}

impl SuperwindowConditions {
    pub fn all(&self) -> bool {
        self.conditions.iter().all(|&c| c) && self.minimality
    }
}

/// Evaluates the six inequalities that make the letter windows invariant
/// under every branch, plus the minimality equation. Tolerance `1e-9`.
pub fn superwindow_conditions_report(a: &Window, b: &Window, m: u32) -> SuperwindowConditions {
    const EPS: f64 = 1e-9;
    let conj = lambda_conj_value(m);
    let (alpha, beta) = (a.lo_value(), a.hi_value());
    let (gamma, delta) = (b.lo_value(), b.hi_value());
    let mf = m as f64;
    let conditions = [
        conj * (beta + mf - 1.0) >= alpha - EPS,
        conj * delta >= alpha - EPS,
        conj * gamma <= beta + EPS,
        conj * (beta + mf) >= gamma - EPS,
        conj * alpha + 1.0 <= beta + EPS,
        conj * alpha <= delta + EPS,
    ];
    SuperwindowConditions {
        conditions,
        minimality: (conj * (beta + mf) - gamma).abs() <= EPS,
    }
}

/// True iff the pair satisfies all six conditions and minimality.
pub fn superwindow_conditions_check(a: &Window, b: &Window, m: u32) -> bool {
    superwindow_conditions_report(a, b, m).all()
}

/// The letter windows `A = [-1, 1 - lambda']` and `B = [lambda' - 1,
/// -lambda']` that solve the invariance system; their union is `W_m`.
pub fn letter_windows(m: u32) -> (Window, Window) {
    let one = QuadInt::one(m);
    let conj_exact = QuadInt::new(m, m as i64, -1);
    (
        Window::closed_exact(-one, one - conj_exact),
        Window::closed_exact(conj_exact - one, -conj_exact),
    )
}

/// All `x = a + b*lambda_m` with `|x| <= radius` and `star(x)` inside the
/// window.
///
/// Candidate coefficients come from inverting the embedding
/// `(x, x*) = (a + b*lambda, a + b*lambda')`; membership is then decided
/// exactly, so no point near the window boundary is lost to rounding.
pub fn model_set(m: u32, w: &Window, radius: f64) -> PointSet {
    assert!(radius >= 0.0);
    let lambda = crate::algebra::lambda_value(m);
    let conj = lambda_conj_value(m);
    let disc = sqrt_disc(m);
    let (lo, hi) = (w.lo_value(), w.hi_value());
    // x - x* = b * sqrt(disc)
    let b_min = ((-radius - hi) / disc).floor() as i64 - 1;
    let b_max = ((radius - lo) / disc).ceil() as i64 + 1;
    let mut points = Vec::new();
    for b in b_min..=b_max {
        let bf = b as f64;
        let a_lo = (-radius - bf * lambda).max(lo - bf * conj).floor() as i64 - 1;
        let a_hi = (radius - bf * lambda).min(hi - bf * conj).ceil() as i64 + 1;
        for a in a_lo..=a_hi {
            let x = QuadInt::new(m, a, b);
            if x.value().abs() <= radius && w.contains_star(&x) {
                points.push(x);
            }
        }
    }
    PointSet::new(m, points)
}

/// Minimum positive gap of the point set: the smallest positive element of
/// the finite difference set, a uniform-discreteness witness.
pub fn meyer_witness(ps: &PointSet) -> Option<f64> {
    ps.points()
        .windows(2)
        .map(|w| w[1] - w[0])
        .min()
        .map(|gap| gap.value())
}

/// Half the largest gap between consecutive points: the covering radius of
/// the patch as a subset of its convex hull.
pub fn covering_radius(ps: &PointSet) -> Option<f64> {
    ps.points()
        .windows(2)
        .map(|w| w[1] - w[0])
        .max()
        .map(|gap| gap.value() / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::lambda_value;
    use crate::words::{apply_random, iterate_seed_patch, word_length, ProbVector};
    use approx::assert_abs_diff_eq;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    #[test]
    fn realize_basics() {
        let ps = realize_word(&w("ab"), 1, QuadInt::zero(1));
        assert_eq!(ps.points(), &[QuadInt::zero(1), QuadInt::lambda(1)]);
        let ps = realize_word(&w("ba"), 1, QuadInt::zero(1));
        assert_eq!(ps.points(), &[QuadInt::zero(1), QuadInt::one(1)]);
    }

    #[test]
    fn iterated_span_is_lambda_power() {
        // the interval [0, x] maps to lambda * [0, x] under every branch
        for m in 1..=2u32 {
            let mut word = Word::b();
            let mut expected = QuadInt::one(m);
            for _ in 0..6 {
                word = apply_random(&word, &ProbVector::uniform(m), 11);
                expected = expected * QuadInt::lambda(m);
            }
            assert_eq!(word_span(&word, m), expected);
        }
    }

    #[test]
    fn random_image_scales_span_exactly() {
        let p = ProbVector::uniform(1);
        let src = w("abaab");
        for seed in 0..10 {
            let img = apply_random(&src, &p, seed);
            assert_eq!(
                word_span(&img, 1),
                word_span(&src, 1) * QuadInt::lambda(1)
            );
        }
    }

    #[test]
    fn star_projection_values() {
        let ps = PointSet::new(1, vec![QuadInt::zero(1)]);
        assert_eq!(star_project(&ps), vec![0.0]);
        let ps = PointSet::new(1, vec![QuadInt::lambda(1)]);
        assert_abs_diff_eq!(star_project(&ps)[0], 1.0 - lambda_value(1), epsilon = 1e-12);
    }

    #[test]
    fn superwindow_endpoints() {
        let w1 = superwindow(1);
        assert_abs_diff_eq!(w1.lo_value(), -lambda_value(1), epsilon = 1e-12);
        assert_abs_diff_eq!(w1.hi_value(), lambda_value(1), epsilon = 1e-12);
        let w2 = superwindow(2);
        assert_abs_diff_eq!(w2.hi_value(), 2f64.sqrt(), epsilon = 1e-12);
        // symmetric about 0
        for m in 1..=5 {
            let win = superwindow(m);
            assert_abs_diff_eq!(win.lo_value(), -win.hi_value(), epsilon = 1e-12);
        }
    }

    #[test]
    fn deterministic_windows() {
        // generic: i = 1, m = 2 -> tau_2 + [lambda'_2, 1]
        let win = deterministic_window(2, 1, None).unwrap();
        let conj = 2.0 - lambda_value(2);
        let tau = -(conj + 1.0) / 2.0;
        assert_abs_diff_eq!(tau, -0.292_893_218_813, epsilon = 1e-9);
        assert_abs_diff_eq!(win.lo_value(), tau + conj, epsilon = 1e-12);
        assert_abs_diff_eq!(win.hi_value(), tau + 1.0, epsilon = 1e-12);

        // singular i = 0, seed (a|a): [lambda', 1)
        let win = deterministic_window(1, 0, Some(SeedPair::AA)).unwrap();
        assert!(win.contains_star(&QuadInt::lambda(1))); // star = lambda' exactly
        assert!(!win.contains_star(&QuadInt::one(1).star())); // star(1) = 1, excluded

        // singular i = m, seed (b|a): [-1, -lambda')
        let win = deterministic_window(1, 1, Some(SeedPair::BA)).unwrap();
        assert!(win.contains_star(&(-QuadInt::one(1))));
        assert!(!win.contains_star(&(-QuadInt::lambda(1))));

        assert!(matches!(
            deterministic_window(1, 0, Some(SeedPair::BA)),
            Err(Error::IllegalSeed { .. })
        ));
        assert!(matches!(
            deterministic_window(1, 1, None),
            Err(Error::IllegalSeed { .. })
        ));
        assert!(matches!(
            deterministic_window(2, 3, None),
            Err(Error::BranchOutOfRange { .. })
        ));
    }

    #[test]
    fn random_patches_stay_inside_superwindow() {
        let p = ProbVector::new(vec![0.5, 0.5]).unwrap();
        let win = superwindow(1);
        for seed in 0..20 {
            let patch = iterate_seed_patch(&p, 12, seed);
            let ps = realize_patch(&patch, 1);
            assert_eq!(ps.len() as u64, 2 * word_length(1, 14));
            let report = window_check(&ps, &win);
            assert!(report.all_inside, "seed {seed}: {report:?}");
        }
    }

    #[test]
    fn deterministic_patch_fits_generic_window() {
        let mut word = Word::a();
        for _ in 0..6 {
            word = crate::words::apply_deterministic(&word, 2, 1).unwrap();
        }
        let ps = realize_word(&word, 2, QuadInt::zero(2));
        let win = deterministic_window(2, 1, None).unwrap();
        let report = window_check(&ps, &win);
        assert!(report.all_inside, "{report:?}");
    }

    #[test]
    fn illegal_constant_word_escapes() {
        let ps = realize_word(&w("aaaaaaaaaa"), 1, QuadInt::zero(1));
        let report = window_check(&ps, &superwindow(1));
        assert!(!report.all_inside);
        assert!(report.max_violation > 1.0);
        assert!(report.violations >= 6);
    }

    #[test]
    fn six_conditions_accept_paper_solution() {
        for m in 1..=4 {
            let (a, b) = letter_windows(m);
            let report = superwindow_conditions_report(&a, &b, m);
            assert!(report.all(), "m = {m}: {report:?}");
            // minimality holds exactly: lambda'(beta + m) = gamma
            let conj = lambda_conj_value(m);
            assert_abs_diff_eq!(
                conj * (a.hi_value() + m as f64),
                b.lo_value(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn six_conditions_reject_perturbations() {
        let m = 1;
        let (a, b) = letter_windows(m);
        // shrink A on the left by 0.1
        let shrunk = Window::closed_real(a.lo_value() + 0.1, a.hi_value());
        let report = superwindow_conditions_report(&shrunk, &b, m);
        assert!(!report.all());
        assert!(!report.conditions[0], "condition (1) must fail: {report:?}");
        // grow B on the right: minimality still holds but condition (6)...
        // widening delta keeps the inequalities; shifting gamma left breaks minimality
        let shifted = Window::closed_real(b.lo_value() - 0.1, b.hi_value());
        let report = superwindow_conditions_report(&a, &shifted, m);
        assert!(!report.minimality);
    }

    #[test]
    fn model_set_contains_origin_and_matches_density() {
        let win = superwindow(1);
        let ps = model_set(1, &win, 500.0);
        assert!(ps.points().contains(&QuadInt::zero(1)));
        let density = ps.len() as f64 / 1000.0;
        let expected = 2.0 * (1.0 - lambda_conj_value(1)) / 5f64.sqrt();
        assert!(
            (density - expected).abs() / expected < 0.01,
            "density {density} vs {expected}"
        );
        // all points inside the window and radius
        for p in ps.points() {
            assert!(win.contains_star(p));
            assert!(p.value().abs() <= 500.0);
        }
    }

    #[test]
    fn meyer_and_covering_witnesses() {
        let p = ProbVector::new(vec![0.5, 0.5]).unwrap();
        let patch = iterate_seed_patch(&p, 10, 5);
        let ps = realize_patch(&patch, 1);
        assert_abs_diff_eq!(meyer_witness(&ps).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            covering_radius(&ps).unwrap(),
            lambda_value(1) / 2.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn difference_set_star_bounded() {
        let p = ProbVector::new(vec![0.5, 0.5]).unwrap();
        let patch = iterate_seed_patch(&p, 8, 21);
        let ps = realize_patch(&patch, 1);
        let width = 2.0 * (1.0 - lambda_conj_value(1));
        for x in ps.points().iter().step_by(7) {
            for y in ps.points().iter().step_by(11) {
                let diff = *x - *y;
                assert!(diff.star_value().abs() <= width + 1e-9);
            }
        }
    }
}
