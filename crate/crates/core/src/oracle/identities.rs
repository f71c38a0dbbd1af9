//! Randomized identity checks of the symmetric-function kernels.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::brute::{newton_delta, sigma_eig, subset_sum, DELTA_LIMIT};
use super::sample::{random_negative_cone, random_positive_cone, random_psd, random_symmetric};
use crate::symfun::{newton_transform, sigma, signed_root, Expansion, SymMatrix};

/// Default seed of the randomized checks.
pub const DEFAULT_SEED: u64 = 20240611;

/// Margin used when drawing cone samples.
const SAMPLE_MARGIN: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    SigmaVsEigen,
    NewtonVsDelta,
    Contraction,
    Trace,
    Derivative,
    Positivity,
    Concavity,
    Monotonicity,
}

impl Family {
    pub const ALL: [Family; 8] = [
        Family::SigmaVsEigen,
        Family::NewtonVsDelta,
        Family::Contraction,
        Family::Trace,
        Family::Derivative,
        Family::Positivity,
        Family::Concavity,
        Family::Monotonicity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::SigmaVsEigen => "sigma-vs-eigenvalues",
            Family::NewtonVsDelta => "newton-vs-kronecker-delta",
            Family::Contraction => "contraction",
            Family::Trace => "trace",
            Family::Derivative => "derivative",
            Family::Positivity => "positivity",
            Family::Concavity => "concavity",
            Family::Monotonicity => "monotonicity",
        }
    }

    /// Pass threshold on the family's error measure.
    pub fn tolerance(self) -> f64 {
        match self {
            Family::SigmaVsEigen | Family::NewtonVsDelta => 1e-11,
            Family::Contraction | Family::Trace | Family::Concavity | Family::Monotonicity => 1e-12,
            Family::Positivity => 1e-12,
            // observed order window is checked separately
            Family::Derivative => 0.7,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FamilyResult {
    pub family: Family,
    pub checks: usize,
    pub failures: usize,
    /// Largest error measure seen.
    pub worst: f64,
    pub counterexample: Option<String>,
}

impl FamilyResult {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

impl fmt::Display for FamilyResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<28} {:>4} checks={:<8} failures={:<6} worst={:.3e} tol={:.1e}",
            self.family.name(),
            if self.passed() { "PASS" } else { "FAIL" },
            self.checks,
            self.failures,
            self.worst,
            self.family.tolerance()
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdentityReport {
    pub seed: u64,
    pub families: Vec<FamilyResult>,
}

impl IdentityReport {
    pub fn all_passed(&self) -> bool {
        self.families.iter().all(FamilyResult::passed)
    }
}

impl fmt::Display for IdentityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "seed={}", self.seed)?;
        for r in &self.families {
            writeln!(f, "{r}")?;
            if let Some(c) = &r.counterexample {
                writeln!(f, "  counterexample: {c}")?;
            }
        }
        Ok(())
    }
}

/// Runs every family with `trials` samples per `(n, k)`, `n` in `3..=nmax`.
pub fn check_identities(trials: usize, seed: u64, nmax: usize) -> IdentityReport {
    let dims: Vec<usize> = (3..=nmax.min(crate::symfun::MAX_DIM)).collect();
    IdentityReport {
        seed,
        families: Family::ALL
            .iter()
            .map(|&fam| run_family(fam, trials, seed, &dims))
            .collect(),
    }
}

struct Tally {
    checks: usize,
    failures: usize,
    worst: f64,
    counterexample: Option<String>,
}

impl Tally {
    fn record(&mut self, err: f64, ok: bool, describe: impl FnOnce() -> String) {
        self.checks += 1;
        if err.is_finite() {
            self.worst = self.worst.max(err);
        }
        if !ok {
            self.failures += 1;
            if self.counterexample.is_none() {
                self.counterexample = Some(describe());
            }
        }
    }
}

/// Size of `sigma_k(A)` together with its sensitivity to eigenvalue
/// perturbations of order `|A|`: `sigma_k(|l|) + |A| sigma_{k-1}(|l|)`.
fn magnitude(a: &SymMatrix, k: usize) -> f64 {
    let ev: Vec<f64> = a.eigenvalues().iter().map(|x| x.abs()).collect();
    let norm = ev.iter().cloned().fold(0.0, f64::max);
    let lower = if k == 0 { 0.0 } else { subset_sum(&ev, k - 1).unwrap() };
    (subset_sum(&ev, k).unwrap() + norm * lower).max(f64::MIN_POSITIVE)
}

fn dump(ms: &[&SymMatrix]) -> String {
    ms.iter()
        .map(|m| format!("{:?}", m.rows()))
        .collect::<Vec<_>>()
        .join(" ; ")
}

/// Runs one family over the given dimensions.
pub fn run_family(family: Family, trials: usize, seed: u64, dims: &[usize]) -> FamilyResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (family as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let mut t = Tally {
        checks: 0,
        failures: 0,
        worst: 0.0,
        counterexample: None,
    };
    let tol = family.tolerance();
    for &n in dims {
        if family == Family::NewtonVsDelta && n > DELTA_LIMIT {
            continue;
        }
        for k in 1..=n {
            for _ in 0..trials {
                check_one(family, &mut rng, n, k, tol, &mut t);
            }
        }
    }
    FamilyResult {
        family,
        checks: t.checks,
        failures: t.failures,
        worst: t.worst,
        counterexample: t.counterexample,
    }
}

fn check_one(family: Family, rng: &mut ChaCha8Rng, n: usize, k: usize, tol: f64, t: &mut Tally) {
    match family {
        Family::SigmaVsEigen => {
            let a = random_symmetric(rng, n, 1.0);
            let fast = sigma(&a, k).unwrap();
            let slow = sigma_eig(&a, k).unwrap();
            let err = (fast - slow).abs() / magnitude(&a, k);
            t.record(err, err <= tol, || format!("k={k} fast={fast} eig={slow} A={}", dump(&[&a])));
        }
        Family::NewtonVsDelta => {
            let a = random_symmetric(rng, n, 1.0);
            let q = k - 1;
            let fast = newton_transform(&a, q).unwrap();
            let slow = newton_delta(&a, q).unwrap();
            let err = (fast - slow).max_abs();
            t.record(err, err <= tol, || format!("q={q} A={}", dump(&[&a])));
        }
        Family::Contraction => {
            let a = random_symmetric(rng, n, 1.0);
            let tk = newton_transform(&a, k - 1).unwrap();
            let lhs = tk.contract(&a);
            let rhs = k as f64 * sigma_eig(&a, k).unwrap();
            let err = (lhs - rhs).abs() / (k as f64 * magnitude(&a, k));
            t.record(err, err <= tol, || format!("k={k} tr(TA)={lhs} k*sigma={rhs} A={}", dump(&[&a])));
        }
        Family::Trace => {
            let a = random_symmetric(rng, n, 1.0);
            let tk = newton_transform(&a, k - 1).unwrap();
            let lhs = tk.trace();
            let c = (n - k + 1) as f64;
            let rhs = c * sigma_eig(&a, k - 1).unwrap();
            let err = (lhs - rhs).abs() / (c * magnitude(&a, k - 1));
            t.record(err, err <= tol, || format!("k={k} tr(T)={lhs} expected={rhs} A={}", dump(&[&a])));
        }
        Family::Derivative => {
            let a = random_symmetric(rng, n, 1.0);
            let b = random_symmetric(rng, n, 1.0);
            let (ok, err) = derivative_check(&a, &b, k);
            t.record(err, ok, || format!("k={k} measure={err} A={}", dump(&[&a, &b])));
        }
        Family::Positivity => {
            // T_{k-1}(-A) = (-1)^{k-1} T_{k-1}(A): on the negative cone the
            // definite sign alternates with k
            let negative = rng.random_bool(0.5);
            let a = if negative {
                random_negative_cone(rng, n, k, SAMPLE_MARGIN)
            } else {
                random_positive_cone(rng, n, k, SAMPLE_MARGIN)
            };
            let tk = newton_transform(&a, k - 1).unwrap();
            let sign = if negative && k % 2 == 0 { -1.0 } else { 1.0 };
            let low = tk.scale(sign).min_eigenvalue();
            let err = (-low / tk.max_abs().max(1.0)).max(0.0);
            t.record(err, low > -tol * tk.max_abs().max(1.0), || {
                format!("k={k} negative={negative} min eigenvalue={low} A={}", dump(&[&a]))
            });
        }
        Family::Concavity => {
            let a = random_positive_cone(rng, n, k, SAMPLE_MARGIN);
            let b = random_positive_cone(rng, n, k, SAMPLE_MARGIN);
            let s: f64 = rng.random_range(0.0..=1.0);
            let mix = a.scale(1.0 - s) + b.scale(s);
            let ra = signed_root(&a, k).unwrap();
            let rb = signed_root(&b, k).unwrap();
            let lhs = signed_root(&mix, k).unwrap();
            let rhs = (1.0 - s) * ra + s * rb;
            let err = (rhs - lhs).max(0.0);
            t.record(err, lhs >= rhs - tol, || format!("k={k} s={s} A,B={}", dump(&[&a, &b])));
        }
        Family::Monotonicity => {
            let b = random_positive_cone(rng, n, k, SAMPLE_MARGIN);
            let p = random_psd(rng, n);
            let sb = sigma(&b, k).unwrap();
            let scale = magnitude(&b, k).max(magnitude(&(b + p), k));
            if rng.random_bool(0.5) {
                let up = sigma(&(b + p), k).unwrap();
                let err = ((sb - up) / scale).max(0.0);
                t.record(err, up >= sb - tol * scale, || format!("k={k} +P: B,P={}", dump(&[&b, &p])));
            } else {
                // negative semidefinite perturbation kept inside the cone
                let mut c = 1.0;
                let mut m = b - p;
                while !Expansion::new(&m, k).classify(0.0).is_positive() {
                    c *= 0.5;
                    m = b - p.scale(c);
                }
                let down = sigma(&m, k).unwrap();
                let err = ((down - sb) / scale).max(0.0);
                t.record(err, down <= sb + tol * scale, || format!("k={k} -P: B,P={}", dump(&[&b, &p.scale(c)])));
            }
        }
    }
}

/// Central-difference check of `d/de sigma_k(A + eB) = tr(T_{k-1}(A) B)`.
///
/// Returns the pass flag and the measure compared: for `k <= 2` the
/// relative error (differences are exact for quadratics), otherwise the
/// deviation of the error ratio under step halving from 4.
pub fn derivative_check(a: &SymMatrix, b: &SymMatrix, k: usize) -> (bool, f64) {
    let exact = newton_transform(a, k - 1).unwrap().contract(b);
    let scale = magnitude(&(a.scale(1.0) + b.scale(1.0)), k).max(magnitude(a, k)).max(1.0);
    let fd = |e: f64| (sigma(&(*a + b.scale(e)), k).unwrap() - sigma(&(*a - b.scale(e)), k).unwrap()) / (2.0 * e);
    let e1 = (fd(1e-3) - exact).abs();
    let e2 = (fd(5e-4) - exact).abs();
    if k <= 2 {
        let rel = e1 / scale;
        return (rel <= 1e-9, rel);
    }
    if e1 <= 1e-9 * scale {
        // third derivative along B nearly vanishes; nothing to resolve
        return (true, 0.0);
    }
    let ratio = e1 / e2;
    ((3.3..=4.7).contains(&ratio), (ratio - 4.0).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_run_passes() {
        let r = check_identities(20, DEFAULT_SEED, 5);
        assert!(r.all_passed(), "{r}");
        assert_eq!(r.families.len(), 8);
    }

    #[test]
    fn zero_trials_is_vacuous() {
        let r = check_identities(0, 1, 5);
        assert!(r.all_passed());
        assert!(r.families.iter().all(|f| f.checks == 0));
    }

    #[test]
    fn deterministic() {
        assert_eq!(check_identities(5, 9, 4), check_identities(5, 9, 4));
    }
}
