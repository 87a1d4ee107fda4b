//! Adaptive Gauss-Kronrod quadrature for real and complex integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::{Error, Result};

/// Values that can be integrated: closed under addition and real scaling.
pub trait QuadValue: Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn magnitude(&self) -> f64;
}

impl QuadValue for f64 {
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { abs: 1e-13, rel: 1e-10, max_intervals: 4000 }
    }
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Tolerance { abs, rel, ..Default::default() }
    }

    pub fn with_max_intervals(mut self, n: usize) -> Self {
        self.max_intervals = n;
        self
    }

    fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Integral<T> {
    pub value: T,
    pub error: f64,
    pub evaluations: usize,
}

// 15-point Kronrod nodes on [0, 1) with the embedded 7-point Gauss rule.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// One Gauss-Kronrod 7/15 panel: (Kronrod estimate, |Kronrod - Gauss|).
pub fn gk15<T: QuadValue, F: Fn(f64) -> T>(f: &F, a: f64, b: f64) -> (T, f64) {
    let (k, err, _) = gk15_abs(f, a, b);
    (k, err)
}

/// As [`gk15`], plus the Kronrod estimate of `int |f|`. The error estimate
/// is the QUADPACK one: `|K - G|` rescaled by the spread of `f` about its
/// mean, which is far less pessimistic once the panel is resolved, and
/// never below the rounding of the panel sum.
fn gk15_abs<T: QuadValue, F: Fn(f64) -> T>(f: &F, a: f64, b: f64) -> (T, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut fv = [T::default(); 15];
    fv[7] = f(c);
    for j in 0..7 {
        let dx = h * XGK[j];
        fv[j] = f(c - dx);
        fv[14 - j] = f(c + dx);
    }
    let weight = |i: usize| WGK[if i <= 7 { i } else { 14 - i }];
    let mut k = T::default();
    let mut abs = 0.0;
    for (i, v) in fv.iter().enumerate() {
        k = k + *v * weight(i);
        abs += v.magnitude() * weight(i);
    }
    let mut g = fv[7] * WG[3];
    for j in (1..7).step_by(2) {
        g = g + (fv[j] + fv[14 - j]) * WG[j / 2];
    }
    let mean = k * 0.5;
    let asc: f64 = fv.iter().enumerate().map(|(i, v)| (*v - mean).magnitude() * weight(i)).sum();
    let (k, g) = (k * h, g * h);
    let (abs, asc) = (abs * h.abs(), asc * h.abs());
    let mut err = (k - g).magnitude();
    if asc > 0.0 && err > 0.0 {
        err = asc * (200.0 * err / asc).powf(1.5).min(1.0);
    }
    if abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * abs);
    }
    (k, err, abs)
}

/// Rounding floor of a sum whose terms add up to `abs_total` in magnitude.
/// Strongly oscillating integrands cannot be resolved below it once the
/// per-panel rounding of many thousands of panels has accumulated.
fn rounding_floor(abs_total: f64) -> f64 {
    100.0 * f64::EPSILON * abs_total
}

struct Segment<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
    abs: f64,
}

impl<T> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T> Eq for Segment<T> {}
impl<T> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive integration of `f` over `[a, b]`, always bisecting the
/// segment with the largest error estimate.
pub fn integrate<T: QuadValue, F: Fn(f64) -> T>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Integral<T>> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::NonFinite("integration limits"));
    }
    if a == b {
        return Ok(Integral { value: T::default(), error: 0.0, evaluations: 0 });
    }
    let (value, error, abs) = gk15_abs(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error, abs });
    let mut total = value;
    let mut total_err = error;
    let mut abs_total = abs;
    let mut evaluations = 15;
    loop {
        if total_err <= tol.target(total.magnitude()).max(rounding_floor(abs_total)) {
            break;
        }
        if heap.len() >= tol.max_intervals {
            return Err(Error::NonConvergence { what: "adaptive quadrature".into(), residual: total_err });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // cannot split further in floating point
            return Err(Error::NonConvergence { what: "adaptive quadrature".into(), residual: total_err });
        }
        let (v1, e1, a1) = gk15_abs(&f, worst.a, mid);
        let (v2, e2, a2) = gk15_abs(&f, mid, worst.b);
        evaluations += 30;
        total = total - worst.value + v1 + v2;
        total_err += e1 + e2 - worst.error;
        abs_total += a1 + a2 - worst.abs;
        heap.push(Segment { a: worst.a, b: mid, value: v1, error: e1, abs: a1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, error: e2, abs: a2 });
    }
    // re-sum to shed accumulated cancellation in the running totals
    let mut value = T::default();
    let mut error = 0.0;
    for s in heap.iter() {
        value = value + s.value;
        error += s.error;
    }
    Ok(Integral { value, error, evaluations })
}

/// Integral of `f` over `[a, inf)` as a sum of panels of geometrically
/// growing width (`scale`, `2 scale`, `4 scale`, ...). Once successive panel
/// ratios settle, the remaining tail is summed as a geometric series.
pub fn integrate_to_infinity<T: QuadValue, F: Fn(f64) -> T>(f: F, a: f64, scale: f64, tol: Tolerance) -> Result<Integral<T>> {
    if !(a.is_finite() && scale.is_finite() && scale > 0.0) {
        return Err(Error::InvalidInput("semi-infinite integration needs finite start and positive scale".into()));
    }
    const MAX_PANELS: usize = 400;
    let mut total = T::default();
    let mut error = 0.0;
    let mut evaluations = 0;
    let mut lo = a;
    let mut width = scale;
    let mut prev: Option<T> = None;
    let mut prev_ratio: Option<f64> = None;
    for k in 0..MAX_PANELS {
        let hi = lo + width;
        let panel_tol = Tolerance { abs: tol.target(total.magnitude()) * 0.05, ..tol };
        let part = integrate(&f, lo, hi, panel_tol)?;
        total = total + part.value;
        error += part.error;
        evaluations += part.evaluations;
        let target = tol.target(total.magnitude());
        let mag = part.value.magnitude();
        if k >= 2 && mag <= 1e-3 * target {
            return Ok(Integral { value: total, error: error + mag, evaluations });
        }
        if let Some(p) = prev {
            let pm = p.magnitude();
            if pm > 0.0 {
                let r = mag / pm;
                if let Some(r_old) = prev_ratio {
                    let settled = (r - r_old).abs() <= 1e-4 * r.max(1e-300);
                    if k >= 6 && r < 0.95 && settled {
                        let tail = part.value * (r / (1.0 - r));
                        let tail_err = tail.magnitude() * 1e-3;
                        if tail_err <= target {
                            return Ok(Integral { value: total + tail, error: error + tail_err, evaluations });
                        }
                    }
                }
                prev_ratio = Some(r);
            }
        }
        prev = Some(part.value);
        lo = hi;
        width *= 2.0;
    }
    Err(Error::NonConvergence { what: "semi-infinite quadrature".into(), residual: prev.map_or(f64::NAN, |p| p.magnitude()) })
}

/// Trapezoid rule for samples on a uniform grid.
pub fn trapezoid_uniform<T: QuadValue>(values: &[T], dx: f64) -> T {
    match values.len() {
        0 | 1 => T::default(),
        n => {
            let mut s = (values[0] + values[n - 1]) * 0.5;
            for v in &values[1..n - 1] {
                s = s + *v;
            }
            s * dx
        }
    }
}

/// Trapezoid rule for samples on an arbitrary monotone grid.
pub fn trapezoid<T: QuadValue>(xs: &[f64], ys: &[T]) -> T {
    assert_eq!(xs.len(), ys.len(), "trapezoid: abscissae and ordinates differ in length");
    let mut s = T::default();
    for i in 1..xs.len() {
        s = s + (ys[i] + ys[i - 1]) * (0.5 * (xs[i] - xs[i - 1]));
    }
    s
}
