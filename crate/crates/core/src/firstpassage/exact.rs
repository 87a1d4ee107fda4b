//! Exact walk probabilities as dyadic rationals.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::{Error, Result};

/// A probability `numerator / 2^k`, kept in lowest terms.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ExactProb {
    numerator: BigUint,
    log2_denominator: u64,
}

impl ExactProb {
    pub fn new(numerator: BigUint, log2_denominator: u64) -> Self {
        let mut p = ExactProb { numerator, log2_denominator };
        p.reduce();
        p
    }

    pub fn zero() -> Self {
        ExactProb { numerator: BigUint::zero(), log2_denominator: 0 }
    }

    pub fn one() -> Self {
        ExactProb { numerator: BigUint::one(), log2_denominator: 0 }
    }

    fn reduce(&mut self) {
        if self.numerator.is_zero() {
            self.log2_denominator = 0;
            return;
        }
        let tz = self.numerator.trailing_zeros().unwrap_or(0).min(self.log2_denominator);
        self.numerator >>= tz;
        self.log2_denominator -= tz;
    }

    pub fn numerator(&self) -> &BigUint {
        &self.numerator
    }

    pub fn denominator(&self) -> BigUint {
        BigUint::one() << self.log2_denominator
    }

    pub fn log2_denominator(&self) -> u64 {
        self.log2_denominator
    }

    pub fn is_zero(&self) -> bool {
        self.numerator.is_zero()
    }

    /// Numerator over the larger denominator `2^k`, `k >= log2_denominator`.
    pub fn numerator_over(&self, k: u64) -> BigUint {
        assert!(k >= self.log2_denominator, "cannot express 2^-{} over 2^-{}", self.log2_denominator, k);
        &self.numerator << (k - self.log2_denominator)
    }

    pub fn to_f64(&self) -> f64 {
        if self.numerator.is_zero() {
            return 0.0;
        }
        let bits = self.numerator.bits();
        let shift = bits.saturating_sub(64);
        let mant = (&self.numerator >> shift).to_u64().expect("at most 64 bits") as f64;
        let e = shift as i64 - self.log2_denominator as i64;
        scale_pow2(mant, e)
    }
}

fn scale_pow2(mut v: f64, mut e: i64) -> f64 {
    while e > 0 {
        let s = e.min(1000);
        v *= 2f64.powi(s as i32);
        e -= s;
    }
    while e < 0 {
        let s = (-e).min(1000);
        v *= 2f64.powi(-(s as i32));
        e += s;
    }
    v
}

impl Add for &ExactProb {
    type Output = ExactProb;
    fn add(self, rhs: &ExactProb) -> ExactProb {
        let k = self.log2_denominator.max(rhs.log2_denominator);
        ExactProb::new(self.numerator_over(k) + rhs.numerator_over(k), k)
    }
}

impl Add for ExactProb {
    type Output = ExactProb;
    fn add(self, rhs: ExactProb) -> ExactProb {
        &self + &rhs
    }
}

impl Mul for &ExactProb {
    type Output = ExactProb;
    fn mul(self, rhs: &ExactProb) -> ExactProb {
        ExactProb::new(&self.numerator * &rhs.numerator, self.log2_denominator + rhs.log2_denominator)
    }
}

impl std::iter::Sum for ExactProb {
    fn sum<I: Iterator<Item = ExactProb>>(iter: I) -> Self {
        iter.fold(ExactProb::zero(), |a, b| a + b)
    }
}

impl fmt::Display for ExactProb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.log2_denominator == 0 {
            write!(f, "{}", self.numerator)
        } else {
            write!(f, "{}/{}", self.numerator, self.denominator())
        }
    }
}

impl Serialize for ExactProb {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// `C(n, k)`, zero outside `0..=n`.
pub fn binomial(n: u64, k: i64) -> BigUint {
    if k < 0 || k as u64 > n {
        return BigUint::zero();
    }
    let k = (k as u64).min(n - k as u64);
    let mut c = BigUint::one();
    for i in 0..k {
        c *= n - i;
        c /= i + 1;
    }
    c
}

/// Pascal's triangle up to row `n_max`, for bulk exact work.
pub struct BinomialTable {
    rows: Vec<Vec<BigUint>>,
}

impl BinomialTable {
    pub fn new(n_max: u64) -> Self {
        let mut rows: Vec<Vec<BigUint>> = Vec::with_capacity(n_max as usize + 1);
        rows.push(vec![BigUint::one()]);
        for n in 1..=n_max as usize {
            let prev = &rows[n - 1];
            let mut row = Vec::with_capacity(n + 1);
            row.push(BigUint::one());
            for k in 1..n {
                row.push(&prev[k - 1] + &prev[k]);
            }
            row.push(BigUint::one());
            rows.push(row);
        }
        BinomialTable { rows }
    }

    pub fn n_max(&self) -> u64 {
        self.rows.len() as u64 - 1
    }

    pub fn get(&self, n: u64, k: i64) -> BigUint {
        if k < 0 || k as u64 > n {
            return BigUint::zero();
        }
        match self.rows.get(n as usize) {
            Some(row) => row[k as usize].clone(),
            None => binomial(n, k),
        }
    }
}

trait Binom {
    fn c(&self, n: u64, k: i64) -> BigUint;
}

struct Direct;

impl Binom for Direct {
    fn c(&self, n: u64, k: i64) -> BigUint {
        binomial(n, k)
    }
}

impl Binom for BinomialTable {
    fn c(&self, n: u64, k: i64) -> BigUint {
        self.get(n, k)
    }
}

/// `(a)/2` when `a` is even, else `None`.
fn half(a: i64) -> Option<i64> {
    (a.rem_euclid(2) == 0).then_some(a / 2)
}

fn walk_count(b: &impl Binom, n: u64, m: i64) -> BigUint {
    match half(n as i64 + m) {
        Some(k) => b.c(n, k),
        None => BigUint::zero(),
    }
}

fn surviving_count(b: &impl Binom, n: u64, m: i64, d: i64) -> BigUint {
    if m >= 0 || d <= 0 {
        return BigUint::zero();
    }
    match (half(n as i64 + m + d), half(n as i64 + m - d)) {
        (Some(k1), Some(k2)) => b.c(n, k1) - b.c(n, k2),
        _ => BigUint::zero(),
    }
}

fn first_arrival_count(b: &impl Binom, n: u64, d: i64) -> BigUint {
    if n == 0 {
        return if d == 0 { BigUint::one() } else { BigUint::zero() };
    }
    if d <= 0 {
        return BigUint::zero();
    }
    match half(n as i64 + d) {
        Some(k) => {
            let num = b.c(n, k) * d as u64;
            debug_assert!((&num % n).is_zero(), "ballot count must divide exactly");
            num / n
        }
        None => BigUint::zero(),
    }
}

/// Probability that an `n`-step walk ends displaced by `m`.
pub fn walk_probability(n: u64, m: i64) -> ExactProb {
    ExactProb::new(walk_count(&Direct, n, m), n)
}

/// Probability that a walk from `-d` is at `m < 0` after `n` steps without
/// having touched the origin (reflection principle).
pub fn surviving_probability(n: u64, m: i64, d: i64) -> ExactProb {
    ExactProb::new(surviving_count(&Direct, n, m, d), n)
}

/// Probability that a walk from `-d` first reaches the origin at step `n`.
/// `F_0 = 1` when starting on the detector.
pub fn first_arrival_probability(n: u64, d: i64) -> ExactProb {
    ExactProb::new(first_arrival_count(&Direct, n, d), n)
}

/// Same quantity via the last step: `F_n = G_{n-1,-1} / 2`.
pub fn first_arrival_probability_dual(n: u64, d: i64) -> ExactProb {
    if n == 0 || d <= 0 {
        return first_arrival_probability(n, d);
    }
    ExactProb::new(surviving_count(&Direct, n - 1, -1, d), n)
}

/// Table-backed variants for bulk evaluation.
impl BinomialTable {
    pub fn walk_probability(&self, n: u64, m: i64) -> ExactProb {
        ExactProb::new(walk_count(self, n, m), n)
    }

    pub fn surviving_probability(&self, n: u64, m: i64, d: i64) -> ExactProb {
        ExactProb::new(surviving_count(self, n, m, d), n)
    }

    pub fn first_arrival_probability(&self, n: u64, d: i64) -> ExactProb {
        ExactProb::new(first_arrival_count(self, n, d), n)
    }

    /// `sum_m G_{n,m} + sum_{k<=n} F_k`, which must be exactly one.
    pub fn conservation_total(&self, n: u64, d: i64) -> ExactProb {
        let mut num = BigUint::zero();
        for m in -(n as i64) - d..0 {
            num += surviving_count(self, n, m, d);
        }
        for k in 0..=n {
            num += first_arrival_count(self, k, d) << (n - k);
        }
        ExactProb::new(num, n)
    }
}

fn ln_binomial(n: u64, k: u64) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Floating-point `P_{n,m}` through log-gamma, for `n` beyond exact range.
pub fn walk_probability_f64(n: u64, m: i64) -> f64 {
    match half(n as i64 + m) {
        Some(k) if k >= 0 && k as u64 <= n => (ln_binomial(n, k as u64) - n as f64 * std::f64::consts::LN_2).exp(),
        _ => 0.0,
    }
}

/// Floating-point `F_n`.
pub fn first_arrival_probability_f64(n: u64, d: i64) -> f64 {
    if n == 0 || d <= 0 {
        return first_arrival_probability(n, d).to_f64();
    }
    d as f64 / n as f64 * walk_probability_f64(n, d)
}

/// Largest step count handled in exact arithmetic by
/// [`first_arrival_distribution`].
pub const EXACT_STEP_LIMIT: u64 = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WalkSpec {
    pub d: i64,
    pub n_max: u64,
    pub exact: bool,
}

impl WalkSpec {
    pub fn new(d: i64, n_max: u64, exact: bool) -> Result<Self> {
        if d < 0 {
            return Err(Error::InvalidInput(format!("start offset must be non-negative, got {d}")));
        }
        Ok(WalkSpec { d, n_max, exact })
    }
}

/// `F_0 ..= F_{n_max}` as floats; exact arithmetic up to
/// [`EXACT_STEP_LIMIT`] when requested.
pub fn first_arrival_distribution(spec: &WalkSpec) -> Vec<f64> {
    (0..=spec.n_max)
        .map(|n| {
            if spec.exact && n <= EXACT_STEP_LIMIT {
                first_arrival_probability(n, spec.d).to_f64()
            } else {
                first_arrival_probability_f64(n, spec.d)
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Boundary {
    Free,
    /// Site 0 absorbs: mass arriving there is moved to the absorbed tally in
    /// the same step.
    AbsorbingAtOrigin,
}

#[derive(Debug, Clone, Serialize)]
pub struct StepRecord {
    pub step: u64,
    pub mass: ExactProb,
    pub absorbed: ExactProb,
}

#[derive(Debug, Clone, Serialize)]
pub struct Evolution {
    pub distribution: BTreeMap<i64, ExactProb>,
    /// One record per step, step 0 included.
    pub history: Vec<StepRecord>,
}

impl Evolution {
    pub fn total_absorbed(&self) -> ExactProb {
        self.history.iter().map(|r| r.absorbed.clone()).sum()
    }
}

/// Apply `P_{n+1,m} = (P_{n,m-1} + P_{n,m+1}) / 2` `n` times.
pub fn recursion_evolve(initial: &BTreeMap<i64, ExactProb>, n: u64, boundary: Boundary) -> Result<Evolution> {
    let total: ExactProb = initial.values().cloned().sum();
    if total != ExactProb::one() {
        return Err(Error::InvalidInput(format!("initial distribution has mass {total}, expected 1")));
    }
    let (Some(&lo), Some(&hi)) = (initial.keys().next(), initial.keys().next_back()) else {
        return Err(Error::InvalidInput("empty initial distribution".into()));
    };
    let k0 = initial.values().map(|p| p.log2_denominator()).max().unwrap_or(0);
    let min_site = lo - n as i64;
    let width = (hi - lo) as usize + 2 * n as usize + 1;
    let mut cur = vec![BigUint::zero(); width];
    for (&m, p) in initial {
        cur[(m - min_site) as usize] = p.numerator_over(k0);
    }
    let origin = (-min_site >= 0 && (-min_site as usize) < width).then_some((-min_site) as usize);
    let absorbing = boundary == Boundary::AbsorbingAtOrigin;
    let mut history = Vec::with_capacity(n as usize + 1);

    let mut absorbed0 = ExactProb::zero();
    if let (true, Some(o)) = (absorbing, origin) {
        absorbed0 = ExactProb::new(std::mem::take(&mut cur[o]), k0);
    }
    let mass_of = |v: &[BigUint], k: u64| ExactProb::new(v.iter().sum(), k);
    history.push(StepRecord { step: 0, mass: mass_of(&cur, k0), absorbed: absorbed0 });

    for step in 1..=n {
        let mut next = vec![BigUint::zero(); width];
        for i in 0..width {
            let left = if i > 0 { Some(&cur[i - 1]) } else { None };
            let right = cur.get(i + 1);
            let mut v = BigUint::zero();
            if let Some(l) = left {
                v += l;
            }
            if let Some(r) = right {
                v += r;
            }
            next[i] = v;
        }
        let k = k0 + step;
        let mut absorbed = ExactProb::zero();
        if let (true, Some(o)) = (absorbing, origin) {
            absorbed = ExactProb::new(std::mem::take(&mut next[o]), k);
        }
        cur = next;
        history.push(StepRecord { step, mass: mass_of(&cur, k), absorbed });
    }
    let k = k0 + n;
    let distribution = cur
        .into_iter()
        .enumerate()
        .filter(|(_, v)| !v.is_zero())
        .map(|(i, v)| (min_site + i as i64, ExactProb::new(v, k)))
        .collect();
    Ok(Evolution { distribution, history })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frac(num: u64, log2: u64) -> ExactProb {
        ExactProb::new(BigUint::from(num), log2)
    }

    #[test]
    fn reduction_and_display() {
        assert_eq!(frac(4, 4).to_string(), "1/4");
        assert_eq!(frac(8, 3), ExactProb::one());
        assert_eq!(frac(0, 9), ExactProb::zero());
        assert_eq!((&frac(1, 2) + &frac(1, 1)).to_string(), "3/4");
        assert_eq!(frac(3, 2).to_f64(), 0.75);
    }

    #[test]
    fn to_f64_survives_huge_denominators() {
        let p = walk_probability(4000, 0);
        let expected = walk_probability_f64(4000, 0);
        assert!((p.to_f64() / expected - 1.0).abs() < 1e-10);
    }

    #[test]
    fn table_matches_direct() {
        let t = BinomialTable::new(40);
        for n in 0..=40u64 {
            for k in -2..=42i64 {
                assert_eq!(t.get(n, k), binomial(n, k));
            }
        }
    }

    #[test]
    fn rejects_unnormalized_initial() {
        let init: BTreeMap<i64, ExactProb> = [(0, frac(1, 1))].into_iter().collect();
        assert!(recursion_evolve(&init, 3, Boundary::Free).is_err());
    }

    #[test]
    fn float_path_tracks_exact() {
        for &(n, d) in &[(50u64, 2i64), (199, 7), (200, 10)] {
            let e = first_arrival_probability(n, d).to_f64();
            let f = first_arrival_probability_f64(n, d);
            assert!((e - f).abs() <= 1e-12 * e.max(1e-300), "n={n} d={d}: {e} vs {f}");
        }
    }
}
