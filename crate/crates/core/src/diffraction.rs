//! Diffraction of noble means sets.
//!
//! Deterministic branches produce a pure point measure with amplitudes
//! `A_{m,i}(k) = dens * exp(-pi i k* (lambda'+1)(1-2i/m)) * sinc(pi k* (1-lambda'))`
//! supported on the Fourier module `Z[lambda_m]/sqrt(m^2+4)`.
//!
//! In the random case (analytic recursions fixed to `m = 1`, general `m` is
//! covered by the Monte Carlo estimator) the exponential sum
//! `X_n(k) = sum_x exp(-2 pi i k x)` over a level-`n` patch satisfies a
//! two-branch recursion; splitting its second moment yields the pure-point
//! part `|E_n|^2 / L_n^2` and the absolutely continuous density
//! `phi(k) = (2 p0 p1 lambda/sqrt(5)) * sum_i lambda^{-i} Psi_i(k)`.
//!
//! Phase handling: the factors `e_n = exp(-2 pi i k L_n)` with `L_n =
//! lambda^n` are built multiplicatively as `e_n = e_{n-1} * e_{n-2}`, which
//! keeps the algebraic identities between the recursions exact in floating
//! point at any order. Against the ideal real `k` the phases drift like
//! `F_n * ulp(k)`, which is negligible for every order used here (`n <~ 60`);
//! direct evaluation of `lambda^n mod 1` would be meaningless much earlier.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::algebra::{lambda_conj_value, lambda_value, sqrt_disc, FourierModulePoint};
use crate::words::ProbVector;
use crate::{Error, Result};

/// Tolerance for the internal agreement of the two `Psi` routes.
const PSI_AGREEMENT_TOL: f64 = 1e-10;

/// Hard cap on recursion depth; see the module notes on phase accuracy.
const MAX_ORDER: u32 = 80;

/// Moments of `X_n(k)` at one recursion level.
#[derive(Debug, Clone, Copy)]
pub struct MomentState {
    pub n: u32,
    pub k: f64,
    /// `E_n = E(X_n(k))`.
    pub mean: Complex64,
    /// `V_n = E(|X_n|^2) - |E_n|^2`, nonnegative.
    pub variance: f64,
    /// System size `L_n = lambda_1^n`.
    pub scale: f64,
}

/// One row of a spectrum export: pure-point estimate and a.c. density.
#[derive(Debug, Clone, Copy)]
pub struct SpectrumSample {
    pub k: f64,
    pub pp: f64,
    pub ac: f64,
}

/// Point density of every deterministic noble means set:
/// `(1 - lambda'_m) / sqrt(m^2 + 4)`.
pub fn density_det(m: u32) -> f64 {
    (1.0 - lambda_conj_value(m)) / sqrt_disc(m)
}

fn sinc(z: f64) -> f64 {
    if z.abs() < 1e-12 {
        1.0
    } else {
        z.sin() / z
    }
}

/// The Bragg amplitude `A_{m,i}(k)` of the deterministic branch `zeta_{m,i}`
/// at the Fourier module point `k`.
///
/// Computed as `dens / vol(W) * FT(indicator of W)` at the conjugate point,
/// with the branch window `W_{m,i}` (the seed-specific windows for the
/// singular branches `i in {0, m}`; their half-open boundaries do not affect
/// the transform). For `0 < i < m` this equals the closed form with phase
/// `exp(-pi i k* (lambda'+1)(1 - 2i/m))`, and the singular windows extend
/// the same expression to `i = 0` and `i = m`.
pub fn amplitude_det(m: u32, i: u32, k: &FourierModulePoint) -> Result<Complex64> {
    if i > m {
        return Err(Error::BranchOutOfRange { m, branch: i });
    }
    assert_eq!(
        k.numerator().family(),
        m,
        "Fourier module point does not match family m"
    );
    let conj = lambda_conj_value(m);
    // endpoint sum lo + hi of W_{m,i}; width is always 1 - lambda'
    let endpoint_sum = (conj + 1.0) * (1.0 - 2.0 * i as f64 / m as f64);
    let width = 1.0 - conj;
    let kstar = k.star_value();
    let phase = Complex64::from_polar(1.0, -std::f64::consts::PI * kstar * endpoint_sum);
    Ok(density_det(m) * phase * sinc(std::f64::consts::PI * kstar * width))
}

/// `L_n = lambda_1^n`.
pub fn system_scale(n: u32) -> f64 {
    lambda_value(1).powi(n as i32)
}

/// Phase factors `e_j = exp(-2 pi i k L_j)` for `j = 0..=n`, built
/// multiplicatively so `e_j = e_{j-1} e_{j-2}` holds exactly.
fn phase_factors(k: f64, n: u32) -> Vec<Complex64> {
    let tau = -2.0 * std::f64::consts::PI * k;
    let mut e = Vec::with_capacity(n as usize + 1);
    e.push(Complex64::from_polar(1.0, tau));
    if n >= 1 {
        e.push(Complex64::from_polar(1.0, tau * lambda_value(1)));
    }
    for j in 2..=n as usize {
        let next = e[j - 1] * e[j - 2];
        e.push(next);
    }
    e
}

struct Recursion {
    mean: Vec<Complex64>,
    variance: Vec<f64>,
    /// `Psi_n` for `n >= 2` (entries 0 and 1 unused).
    psi: Vec<f64>,
}

fn run_recursion(k: f64, n_max: u32, p0: f64, p1: f64) -> Recursion {
    assert!(n_max <= MAX_ORDER, "recursion order capped at {MAX_ORDER}");
    let e = phase_factors(k, n_max.max(1));
    let mut mean = vec![e[0], e[1]];
    let mut variance = vec![0.0, 0.0];
    let mut psi = vec![0.0, 0.0];
    for n in 2..=n_max as usize {
        let quad = (Complex64::new(1.0, 0.0) - e[n - 2]) * mean[n - 1]
            - (Complex64::new(1.0, 0.0) - e[n - 1]) * mean[n - 2];
        let psi_n = 0.5 * quad.norm_sqr();
        psi.push(psi_n);
        variance.push(variance[n - 1] + variance[n - 2] + 2.0 * p0 * p1 * psi_n);
        let next = (p1 + p0 * e[n - 2]) * mean[n - 1] + (p0 + p1 * e[n - 1]) * mean[n - 2];
        mean.push(next);
    }
    mean.truncate(n_max as usize + 1);
    variance.truncate(n_max as usize + 1);
    Recursion {
        mean,
        variance,
        psi,
    }
}

fn pair(p: &ProbVector) -> (f64, f64) {
    p.as_pair()
        .expect("the analytic recursions are implemented for m = 1 (two probabilities)")
}

/// Mean and variance of `X_n(k)` for `n = 0..=n_max`, by the two-branch
/// recursion with `E_0 = exp(-2 pi i k)`, `E_1 = exp(-2 pi i k lambda)` and
/// `V_0 = V_1 = 0`.
pub fn moment_recursion(k: f64, n_max: u32, p: &ProbVector) -> Vec<MomentState> {
    let (p0, p1) = pair(p);
    let rec = run_recursion(k, n_max, p0, p1);
    (0..=n_max)
        .map(|n| MomentState {
            n,
            k,
            mean: rec.mean[n as usize],
            variance: rec.variance[n as usize],
            scale: system_scale(n),
        })
        .collect()
}

/// `Psi_n(k)` by the quadratic form
/// `(1/2) |(1 - e_{n-2}) E_{n-1} - (1 - e_{n-1}) E_{n-2}|^2`.
pub fn psi_quadratic(k: f64, n: u32, p: &ProbVector) -> f64 {
    assert!(n >= 2);
    let (p0, p1) = pair(p);
    run_recursion(k, n, p0, p1).psi[n as usize]
}

/// `Psi_n(k)` via the product representation
/// `psi_n = +- psi_2 * prod_{j=1}^{n-2} (p0 + p1 e_j)`.
pub fn psi_product(k: f64, n: u32, p: &ProbVector) -> f64 {
    assert!(n >= 2);
    let (p0, p1) = pair(p);
    let e = phase_factors(k, n.max(2));
    let mut prod = e[1] - e[0]; // psi_2
    for j in 1..=(n as usize - 2) {
        prod *= p0 + p1 * e[j];
    }
    0.5 * prod.norm_sqr()
}

/// `Psi_n(k)` for `n = 2..=n_max` in one recursion pass; entries 0 and 1
/// of the returned vector are zero.
pub fn psi_sequence(k: f64, n_max: u32, p: &ProbVector) -> Vec<f64> {
    assert!(n_max >= 2);
    let (p0, p1) = pair(p);
    run_recursion(k, n_max, p0, p1).psi
}

/// `Psi_n(k)`, computed by both routes; they must agree to `1e-10` or the
/// call fails with a phase-precision fault.
pub fn psi(k: f64, n: u32, p: &ProbVector) -> Result<f64> {
    let quad = psi_quadratic(k, n, p);
    let prod = psi_product(k, n, p);
    let disagreement = (quad - prod).abs();
    if disagreement > PSI_AGREEMENT_TOL {
        return Err(Error::PhaseFault {
            n,
            k,
            disagreement,
        });
    }
    Ok(quad)
}

/// Truncation order for [`phi`]: smallest `N` with analytic tail below
/// `tol`, from `Psi <= 2` and the geometric weights.
pub fn phi_truncation_order(p: &ProbVector, tol: f64) -> u32 {
    assert!(tol > 0.0);
    let (p0, p1) = pair(p);
    let lambda = lambda_value(1);
    let prefactor = 2.0 * p0 * p1 * lambda / 5f64.sqrt();
    if prefactor == 0.0 {
        return 2;
    }
    let mut n = 2u32;
    while n < MAX_ORDER {
        // tail = prefactor * 2 * sum_{i > N} lambda^-i
        let tail = prefactor * 2.0 * lambda.powi(-(n as i32)) / (lambda - 1.0);
        if tail <= tol {
            break;
        }
        n += 1;
    }
    n
}

/// The Radon-Nikodym density of the absolutely continuous diffraction part,
/// `phi(k) = (2 p0 p1 lambda/sqrt5) sum_{i>=2} lambda^{-i} Psi_i(k)`,
/// truncated once the tail bound drops below `tol`.
///
/// Vanishes exactly on `lambda Z` and is bounded by `4 p0 p1 lambda/sqrt5`;
/// identically zero in the deterministic limits `p0 in {0, 1}`.
pub fn phi(k: f64, p: &ProbVector, tol: f64) -> f64 {
    let (p0, p1) = pair(p);
    if p0 == 0.0 || p1 == 0.0 {
        return 0.0;
    }
    let n = phi_truncation_order(p, tol);
    let rec = run_recursion(k, n, p0, p1);
    let lambda = lambda_value(1);
    let sum: f64 = (2..=n as usize)
        .map(|i| lambda.powi(-(i as i32)) * rec.psi[i])
        .sum();
    2.0 * p0 * p1 * lambda / 5f64.sqrt() * sum
}

/// The finite-size density `phi_n(k) = V(X_n(k)) / L_n`, via the exact
/// Fibonacci-weighted sum `(2 p0 p1 / L_n) sum_{i=2}^n ell_{1,n+1-i} Psi_i`.
pub fn phi_partial(k: f64, n: u32, p: &ProbVector) -> f64 {
    assert!(n >= 2);
    let (p0, p1) = pair(p);
    let rec = run_recursion(k, n, p0, p1);
    // Fibonacci weights ell_{1,j}: 1, 1, 2, 3, 5, ...
    let mut ell = vec![0.0; n as usize + 2];
    ell[1] = 1.0;
    if n >= 1 {
        ell[2] = 1.0;
    }
    for j in 3..ell.len() {
        ell[j] = ell[j - 1] + ell[j - 2];
    }
    let sum: f64 = (2..=n as usize)
        .map(|i| ell[n as usize + 1 - i] * rec.psi[i])
        .sum();
    2.0 * p0 * p1 * sum / system_scale(n)
}

/// `phi_n(k)` read directly off the variance recursion, `V_n / L_n`.
/// Must agree with [`phi_partial`] to machine precision.
pub fn phi_partial_from_variance(k: f64, n: u32, p: &ProbVector) -> f64 {
    let (p0, p1) = pair(p);
    run_recursion(k, n, p0, p1).variance[n as usize] / system_scale(n)
}

/// Finite-`n` pure-point intensity `|E_n(k)|^2 / L_n^2` (Hof's limit gives
/// the Bragg intensity at `k` as `n` grows).
pub fn pp_intensity(k: f64, n: u32, p: &ProbVector) -> f64 {
    let (p0, p1) = pair(p);
    let rec = run_recursion(k, n, p0, p1);
    let ratio = rec.mean[n as usize].norm() / system_scale(n);
    ratio * ratio
}

/// `f_j(k) = |p0 + p1 exp(-2 pi i k L_j)|^2`, one factor of the product
/// representation of `psi`.
pub fn f_j(k: f64, j: u32, p: &ProbVector) -> f64 {
    let (p0, p1) = pair(p);
    p0 * p0 + p1 * p1 + 2.0 * p0 * p1 * (2.0 * std::f64::consts::PI * k * system_scale(j)).cos()
}

/// The roots of `f_j`, in closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RootSet {
    /// `f_j` has no real roots; its minimum is `(p0 - p1)^2`.
    Empty { min_value: f64 },
    /// Roots `(+-theta + 2 pi q) / (2 pi L_j)`, `q` integer.
    Progressions {
        /// `arccos((2 p0 p1 - 1) / (2 p0 p1))`.
        theta: f64,
        /// `1 / L_j`, the period of the root pattern.
        spacing: f64,
    },
}

impl RootSet {
    /// All roots inside `[lo, hi]`, sorted.
    pub fn roots_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        match *self {
            RootSet::Empty { .. } => Vec::new(),
            RootSet::Progressions { theta, spacing } => {
                let offset = theta / (2.0 * std::f64::consts::PI) * spacing;
                let mut roots = Vec::new();
                let q_lo = ((lo - offset) / spacing).floor() as i64 - 1;
                let q_hi = ((hi + offset) / spacing).ceil() as i64 + 1;
                for q in q_lo..=q_hi {
                    for root in [q as f64 * spacing - offset, q as f64 * spacing + offset] {
                        if root >= lo && root <= hi {
                            roots.push(root);
                        }
                    }
                }
                roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
                roots.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
                roots
            }
        }
    }
}

/// Closed-form root set `R_j` of `f_j`: empty unless `p0 p1 >= 1/4`, which
/// on the simplex happens only at `p = (1/2, 1/2)`.
pub fn root_set_fj(j: u32, p: &ProbVector) -> RootSet {
    let (p0, p1) = pair(p);
    let prod = 2.0 * p0 * p1;
    if prod == 0.0 || (prod - 1.0) / prod < -1.0 {
        return RootSet::Empty {
            min_value: (p0 - p1) * (p0 - p1),
        };
    }
    RootSet::Progressions {
        theta: ((prod - 1.0) / prod).acos(),
        spacing: 1.0 / system_scale(j),
    }
}

/// Sample statistics of `X_n(k)` over independent realisations.
#[derive(Debug, Clone, Copy)]
pub struct McMoments {
    pub mean: Complex64,
    pub variance: f64,
    /// Standard error of the complex mean (`sqrt(variance / samples)`).
    pub mean_stderr: f64,
    /// Standard error of the variance estimate, from batch spread.
    pub var_stderr: f64,
    pub samples: u64,
}

fn sample_x(n: usize, p0: f64, rng: &mut ChaCha8Rng, e: &[Complex64]) -> Complex64 {
    match n {
        0 => e[0],
        1 => e[1],
        _ => {
            // fresh independent sub-realisations on both branches; no
            // memoisation, the independence is what the variance split uses
            if rng.gen::<f64>() < p0 {
                let tail = sample_x(n - 2, p0, rng, e);
                let head = sample_x(n - 1, p0, rng, e);
                tail + e[n - 2] * head
            } else {
                let head = sample_x(n - 1, p0, rng, e);
                let tail = sample_x(n - 2, p0, rng, e);
                head + e[n - 1] * tail
            }
        }
    }
}

/// Monte Carlo estimate of mean and variance of `X_n(k)` from `samples`
/// independent realisations, drawn in seeded batches (one RNG stream per
/// batch, so the result is independent of thread scheduling).
pub fn monte_carlo_moments(
    k: f64,
    n: u32,
    p: &ProbVector,
    samples: u64,
    seed: u64,
) -> McMoments {
    assert!(samples >= 1);
    let (p0, _) = pair(p);
    let e = phase_factors(k, n.max(1));
    let batches: u64 = if samples >= 1000 { 100 } else { samples.min(10) };
    let base = samples / batches;
    let extra = samples % batches;

    let stats: Vec<(Complex64, f64, u64)> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b);
            let count = base + u64::from(b < extra);
            let mut sum = Complex64::new(0.0, 0.0);
            let mut sq_sum = 0.0;
            for _ in 0..count {
                let x = sample_x(n as usize, p0, &mut rng, &e);
                sum += x;
                sq_sum += x.norm_sqr();
            }
            (sum, sq_sum, count)
        })
        .collect();

    let total: u64 = stats.iter().map(|s| s.2).sum();
    let sum: Complex64 = stats.iter().map(|s| s.0).sum();
    let sq_sum: f64 = stats.iter().map(|s| s.1).sum();
    let mean = sum / total as f64;
    let variance = (sq_sum / total as f64 - mean.norm_sqr()).max(0.0);

    let batch_vars: Vec<f64> = stats
        .iter()
        .filter(|s| s.2 > 1)
        .map(|(s, sq, c)| {
            let bm = s / *c as f64;
            (sq / *c as f64 - bm.norm_sqr()).max(0.0)
        })
        .collect();
    let var_stderr = if batch_vars.len() > 1 {
        let bmean = batch_vars.iter().sum::<f64>() / batch_vars.len() as f64;
        let spread = batch_vars
            .iter()
            .map(|v| (v - bmean) * (v - bmean))
            .sum::<f64>()
            / (batch_vars.len() - 1) as f64;
        (spread / batch_vars.len() as f64).sqrt()
    } else {
        f64::NAN
    };

    McMoments {
        mean,
        variance,
        mean_stderr: (variance / total as f64).sqrt(),
        var_stderr,
        samples: total,
    }
}

/// Evaluates pure-point intensity and a.c. density on the grid
/// `k = k_lo, k_lo + step, ..., <= k_hi`.
pub fn spectrum_scan(
    k_lo: f64,
    k_hi: f64,
    step: f64,
    n: u32,
    p: &ProbVector,
    tol: f64,
) -> Vec<SpectrumSample> {
    assert!(step > 0.0 && k_hi >= k_lo);
    let count = ((k_hi - k_lo) / step + 1e-9).floor() as usize + 1;
    (0..count)
        .into_par_iter()
        .map(|i| {
            let k = k_lo + i as f64 * step;
            SpectrumSample {
                k,
                pp: pp_intensity(k, n, p),
                ac: phi(k, p, tol),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::QuadInt;
    use approx::assert_abs_diff_eq;

    fn p(v: &[f64]) -> ProbVector {
        ProbVector::new(v.to_vec()).unwrap()
    }

    fn half() -> ProbVector {
        p(&[0.5, 0.5])
    }

    #[test]
    fn densities() {
        assert_abs_diff_eq!(density_det(1), 0.723_606_797_75, epsilon = 1e-10);
        assert_abs_diff_eq!(density_det(2), 0.5, epsilon = 1e-12);
        // reciprocal density = mean tile length freq_a * lambda + freq_b
        for m in 1..=3 {
            let lambda = lambda_value(m);
            let freq_a = lambda / (lambda + 1.0);
            let mean_tile = freq_a * lambda + (1.0 - freq_a);
            assert_abs_diff_eq!(1.0 / density_det(m), mean_tile, epsilon = 1e-9);
        }
    }

    #[test]
    fn amplitude_at_zero_is_density() {
        for m in 1..=3 {
            for i in 0..=m {
                let k0 = FourierModulePoint::from_coeffs(m, 0, 0);
                let a = amplitude_det(m, i, &k0).unwrap();
                assert_abs_diff_eq!(a.re, density_det(m), epsilon = 1e-12);
                assert_abs_diff_eq!(a.im, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn amplitude_bounded_by_density() {
        for coeff in [(1i64, 0i64), (0, 1), (1, 1), (-2, 3), (5, -3)] {
            let k = FourierModulePoint::from_coeffs(1, coeff.0, coeff.1);
            let a = amplitude_det(1, 0, &k).unwrap();
            assert!(a.norm() <= density_det(1) + 1e-12);
        }
    }

    #[test]
    fn amplitude_matches_lemma_closed_form_generic() {
        // window-transform route vs the closed form, generic branch
        let m = 2;
        let k = FourierModulePoint::from_coeffs(m, 1, 1);
        let kstar = k.star_value();
        let conj = lambda_conj_value(m);
        let i = 1;
        let expected = density_det(m)
            * Complex64::from_polar(
                1.0,
                -std::f64::consts::PI * kstar * (conj + 1.0) * (1.0 - 2.0 * i as f64 / m as f64),
            )
            * sinc(std::f64::consts::PI * kstar * (1.0 - conj));
        let got = amplitude_det(m, i, &k).unwrap();
        assert_abs_diff_eq!(got.re, expected.re, epsilon = 1e-12);
        assert_abs_diff_eq!(got.im, expected.im, epsilon = 1e-12);
    }

    #[test]
    fn moments_at_k_zero_are_fibonacci() {
        let states = moment_recursion(0.0, 12, &half());
        let mut fib = (1.0, 1.0);
        for (n, s) in states.iter().enumerate() {
            assert_abs_diff_eq!(s.mean.im, 0.0, epsilon = 1e-12);
            let expected = match n {
                0 | 1 => 1.0,
                _ => {
                    let next = fib.0 + fib.1;
                    fib = (fib.1, next);
                    next
                }
            };
            assert_abs_diff_eq!(s.mean.re, expected, epsilon = 1e-9 * expected);
            assert_abs_diff_eq!(s.variance, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn psi_two_closed_form() {
        // Psi_2(k) = 1 - cos(2 pi k (1 - lambda))
        let lambda = lambda_value(1);
        for k in [0.1, 0.37, 1.3, 2.22] {
            let expected = 1.0 - (2.0 * std::f64::consts::PI * k * (1.0 - lambda)).cos();
            assert_abs_diff_eq!(psi(k, 2, &half()).unwrap(), expected, epsilon = 1e-12);
        }
        // argument pi at k = 1/(2(lambda - 1)) gives the maximum 2
        let k = 1.0 / (2.0 * (lambda - 1.0));
        assert_abs_diff_eq!(psi(k, 2, &half()).unwrap(), 2.0, epsilon = 1e-10);
    }

    #[test]
    fn psi_routes_agree_and_decrease() {
        let pv = p(&[0.3, 0.7]);
        for i in 0..200 {
            let k = i as f64 * 0.017 + 0.003;
            let mut prev = f64::INFINITY;
            for n in 2..=25 {
                let quad = psi_quadratic(k, n, &pv);
                let prod = psi_product(k, n, &pv);
                assert!(
                    (quad - prod).abs() <= 1e-10,
                    "k={k} n={n}: {quad} vs {prod}"
                );
                assert!(quad <= 2.0 + 1e-12);
                assert!(quad <= prev + 1e-12, "Psi must be non-increasing in n");
                prev = quad;
            }
        }
    }

    #[test]
    fn psi_vanishes_at_lambda_multiples() {
        let lambda = lambda_value(1);
        for q in [-3i32, -1, 1, 2, 5] {
            let k = q as f64 * lambda;
            for n in 2..=10 {
                assert!(psi(k, n, &half()).unwrap() < 1e-18);
            }
        }
    }

    #[test]
    fn variance_is_monotone_in_n() {
        let states = moment_recursion(0.37, 20, &half());
        for n in 2..states.len() {
            assert!(
                states[n].variance >= states[n - 1].variance + states[n - 2].variance - 1e-12
            );
        }
    }

    #[test]
    fn phi_roots_bound_and_truncation() {
        let pv = half();
        let lambda = lambda_value(1);
        let bound = 4.0 * 0.25 * lambda / 5f64.sqrt();
        for q in -20i32..=20 {
            let k = q as f64 * lambda;
            assert!(phi(k, &pv, 1e-10) <= 1e-9, "phi must vanish at {q} lambda");
        }
        for i in 0..500 {
            let k = i as f64 * 0.007;
            let v = phi(k, &pv, 1e-8);
            assert!(v >= 0.0 && v <= bound + 1e-9);
        }
        // positive between consecutive roots
        assert!(phi(0.5 * lambda, &pv, 1e-10) > 0.1);
        assert!(phi(1.5 * lambda, &pv, 1e-10) > 0.1);
        // deterministic limit: prefactor kills the density
        assert_eq!(phi(0.37, &p(&[1.0, 0.0]), 1e-10), 0.0);
    }

    #[test]
    fn phi_partial_routes_agree() {
        let pv = p(&[0.4, 0.6]);
        for k in [0.37, 1.0, 2.2] {
            for n in [2u32, 5, 12] {
                let weighted = phi_partial(k, n, &pv);
                let direct = phi_partial_from_variance(k, n, &pv);
                assert_abs_diff_eq!(weighted, direct, epsilon = 1e-10);
            }
        }
        // n = 2 closed form: 2 p0 p1 Psi_2 / lambda^2
        let k = 0.9;
        let expected = 2.0 * 0.4 * 0.6 * psi_quadratic(k, 2, &pv) / system_scale(2);
        assert_abs_diff_eq!(phi_partial(k, 2, &pv), expected, epsilon = 1e-13);
    }

    #[test]
    fn phi_partial_converges_to_phi() {
        let pv = half();
        let phi_inf: Vec<f64> = (0..40)
            .map(|i| phi(i as f64 * 0.1 + 0.05, &pv, 1e-12))
            .collect();
        let mut prev_sup = f64::INFINITY;
        for n in [6u32, 10, 14, 18, 22] {
            let sup = (0..40)
                .map(|i| (phi_partial(i as f64 * 0.1 + 0.05, n, &pv) - phi_inf[i]).abs())
                .fold(0.0, f64::max);
            assert!(sup <= prev_sup + 1e-12, "sup|phi_n - phi| must not grow");
            prev_sup = sup;
        }
        assert!(prev_sup < 1e-3);
    }

    #[test]
    fn pp_intensity_limits() {
        let pv = half();
        // k = 0: (f_n / lambda^n)^2 -> dens^2
        assert_abs_diff_eq!(
            pp_intensity(0.0, 25, &pv),
            density_det(1) * density_det(1),
            epsilon = 1e-4
        );
        // generic k decays
        assert!(pp_intensity(0.37, 25, &pv) < 1e-6);
        assert!(pp_intensity(0.37, 25, &pv) < pp_intensity(0.37, 5, &pv));
    }

    #[test]
    fn root_sets() {
        // p = (1/2, 1/2): roots at odd multiples of 1/(2 L_j)
        let roots = root_set_fj(1, &half());
        match roots {
            RootSet::Progressions { theta, spacing } => {
                assert_abs_diff_eq!(theta, std::f64::consts::PI, epsilon = 1e-12);
                assert_abs_diff_eq!(spacing, 1.0 / lambda_value(1), epsilon = 1e-12);
            }
            _ => panic!("expected roots"),
        }
        for r in roots.roots_in(0.0, 3.0) {
            assert!(f_j(r, 1, &half()) <= 1e-10, "f_1({r}) must vanish");
        }
        // p = (0.9, 0.1): argument below -1, no roots, minimum (p0-p1)^2
        match root_set_fj(2, &p(&[0.9, 0.1])) {
            RootSet::Empty { min_value } => {
                assert_abs_diff_eq!(min_value, 0.64, epsilon = 1e-12)
            }
            _ => panic!("expected empty root set"),
        }
        let mut min_seen = f64::INFINITY;
        for i in 0..10_000 {
            min_seen = min_seen.min(f_j(i as f64 * 3e-4, 2, &p(&[0.9, 0.1])));
        }
        assert!(min_seen >= 0.64 - 1e-9);
    }

    #[test]
    fn monte_carlo_brackets_recursion() {
        let pv = half();
        let k = 0.37;
        let n = 6;
        let states = moment_recursion(k, n, &pv);
        let mc = monte_carlo_moments(k, n, &pv, 40_000, 42);
        let exact = states[n as usize];
        assert!(
            (mc.mean - exact.mean).norm() <= 4.0 * mc.mean_stderr,
            "mean {} vs {} (se {})",
            mc.mean,
            exact.mean,
            mc.mean_stderr
        );
        assert!(
            (mc.variance - exact.variance).abs() <= 4.0 * mc.var_stderr,
            "variance {} vs {} (se {})",
            mc.variance,
            exact.variance,
            mc.var_stderr
        );
    }

    #[test]
    fn monte_carlo_deterministic_p_has_zero_variance() {
        let mc = monte_carlo_moments(0.37, 6, &p(&[1.0, 0.0]), 500, 7);
        assert_eq!(mc.variance, 0.0);
    }

    #[test]
    fn monte_carlo_is_reproducible() {
        let a = monte_carlo_moments(0.2, 6, &half(), 5_000, 9);
        let b = monte_carlo_moments(0.2, 6, &half(), 5_000, 9);
        assert_eq!(a.mean, b.mean);
        assert_eq!(a.variance, b.variance);
    }

    #[test]
    fn scan_grid_is_refinement_stable() {
        let pv = half();
        let coarse = spectrum_scan(0.0, 0.2, 0.01, 5, &pv, 1e-6);
        let fine = spectrum_scan(0.0, 0.2, 0.005, 5, &pv, 1e-6);
        for (i, c) in coarse.iter().enumerate() {
            let f = &fine[2 * i];
            assert_eq!(c.k, f.k);
            assert_eq!(c.pp, f.pp);
            assert_eq!(c.ac, f.ac);
        }
        // includes lambda with vanishing ac, and k = 0 with pp near dens^2
        let scan = spectrum_scan(0.0, 2.0, 0.25, 6, &pv, 1e-8);
        assert_abs_diff_eq!(scan[0].k, 0.0);
        assert!(scan[0].pp > 0.5);
    }

    #[test]
    fn reversed_reading_order_preserves_mean_modulus() {
        // reading every patch right-to-left swaps the branch pairing and
        // starts from X~_0 = X~_1 = 1; the mean modulus must be unchanged
        for (p0, k) in [(0.3, 0.37), (0.3, 1.7), (0.85, 0.2), (0.5, 2.913)] {
            let p1 = 1.0 - p0;
            let e = phase_factors(k, 20);
            let mut fwd = vec![e[0], e[1]];
            let mut rev = vec![Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)];
            for n in 2..=20usize {
                fwd.push((p1 + p0 * e[n - 2]) * fwd[n - 1] + (p0 + p1 * e[n - 1]) * fwd[n - 2]);
                rev.push((p0 + p1 * e[n - 2]) * rev[n - 1] + (p1 + p0 * e[n - 1]) * rev[n - 2]);
            }
            for n in 0..=20usize {
                assert_abs_diff_eq!(fwd[n].norm(), rev[n].norm(), epsilon = 1e-9);
            }
        }
    }
}
