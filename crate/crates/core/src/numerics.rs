//! Log-domain arithmetic, special functions, quadrature, root finding and
//! scalar maximization.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::{LN_2, PI};
use std::ops::{Add, Mul};
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Representation of ln 0. Anything at or below it (including −∞) is zero.
pub const LN_ZERO: f64 = f64::MIN;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[inline]
pub fn is_ln_zero(x: f64) -> bool {
    x <= LN_ZERO
}

/// ln(e^a + e^b) with zero-sentinel handling.
#[inline]
pub fn ln_add(a: f64, b: f64) -> f64 {
    if is_ln_zero(a) {
        return if is_ln_zero(b) { LN_ZERO } else { b };
    }
    if is_ln_zero(b) {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// ln(e^a − e^b) for a ≥ b. Returns the zero sentinel when the difference vanishes.
#[inline]
pub fn ln_sub(a: f64, b: f64) -> f64 {
    if is_ln_zero(b) {
        return a;
    }
    if b >= a {
        return LN_ZERO;
    }
    a + ln_one_minus_exp(b - a)
}

/// ln(1 − e^x) for x < 0, accurate near both ends.
#[inline]
pub fn ln_one_minus_exp(x: f64) -> f64 {
    if x >= 0.0 {
        LN_ZERO
    } else if x > -LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

/// Streaming log-sum-exp. The value is `max + ln(1 + rest)` where `rest`
/// collects every other term scaled by the running maximum.
#[derive(Clone, Copy, Debug)]
pub struct LnSum {
    max: f64,
    rest: f64,
}

impl Default for LnSum {
    fn default() -> Self {
        Self::new()
    }
}

impl LnSum {
    pub fn new() -> Self {
        LnSum { max: LN_ZERO, rest: 0.0 }
    }

    #[inline]
    pub fn push(&mut self, x: f64) {
        if is_ln_zero(x) {
            return;
        }
        if is_ln_zero(self.max) {
            self.max = x;
            self.rest = 0.0;
        } else if x <= self.max {
            self.rest += (x - self.max).exp();
        } else {
            self.rest = (self.rest + 1.0) * (self.max - x).exp();
            self.max = x;
        }
    }

    pub fn value(&self) -> f64 {
        if is_ln_zero(self.max) {
            LN_ZERO
        } else {
            self.max + self.rest.ln_1p()
        }
    }
}

/// ln Σ exp(xᵢ). Zero sentinels are skipped.
pub fn max_star(xs: &[f64]) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::Usage("max_star of an empty list".into()));
    }
    if let Some(x) = xs.iter().find(|x| x.is_nan() || **x == f64::INFINITY) {
        return Err(Error::Domain(format!("max_star entry {x}")));
    }
    let mut acc = LnSum::new();
    for &x in xs {
        acc.push(x);
    }
    Ok(acc.value())
}

/// A non-negative real carried as its natural logarithm.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct LogValue {
    ln_val: f64,
}

impl LogValue {
    pub const ZERO: LogValue = LogValue { ln_val: LN_ZERO };
    pub const ONE: LogValue = LogValue { ln_val: 0.0 };

    pub fn from_ln(ln_val: f64) -> Self {
        if is_ln_zero(ln_val) {
            Self::ZERO
        } else {
            LogValue { ln_val }
        }
    }

    pub fn from_linear(v: f64) -> Result<Self> {
        if !(v >= 0.0) || v.is_infinite() {
            return Err(Error::Domain(format!("LogValue needs a finite non-negative value, got {v}")));
        }
        Ok(if v == 0.0 { Self::ZERO } else { LogValue { ln_val: v.ln() } })
    }

    pub fn ln(self) -> f64 {
        self.ln_val
    }

    pub fn is_zero(self) -> bool {
        is_ln_zero(self.ln_val)
    }

    /// Linear value; underflows to 0 for tiny quantities.
    pub fn to_linear(self) -> f64 {
        if self.is_zero() {
            0.0
        } else {
            self.ln_val.exp()
        }
    }

    pub fn log10(self) -> f64 {
        if self.is_zero() {
            f64::NEG_INFINITY
        } else {
            self.ln_val / std::f64::consts::LN_10
        }
    }
}

impl Mul for LogValue {
    type Output = LogValue;
    fn mul(self, rhs: LogValue) -> LogValue {
        if self.is_zero() || rhs.is_zero() {
            LogValue::ZERO
        } else {
            LogValue::from_ln(self.ln_val + rhs.ln_val)
        }
    }
}

impl Add for LogValue {
    type Output = LogValue;
    fn add(self, rhs: LogValue) -> LogValue {
        LogValue::from_ln(ln_add(self.ln_val, rhs.ln_val))
    }
}

impl std::iter::Sum for LogValue {
    fn sum<I: Iterator<Item = LogValue>>(iter: I) -> LogValue {
        let mut acc = LnSum::new();
        for v in iter {
            acc.push(v.ln_val);
        }
        LogValue::from_ln(acc.value())
    }
}

// ---------------------------------------------------------------------------
// Gamma family

fn zeta_table() -> &'static [f64; 32] {
    static TABLE: OnceLock<[f64; 32]> = OnceLock::new();
    TABLE.get_or_init(|| {
        // Euler-Maclaurin with 49 explicit terms; remainder below 1e-17 for k ≥ 2.
        let mut t = [0.0; 32];
        let n = 50.0f64;
        for (k, slot) in t.iter_mut().enumerate().skip(2) {
            let kf = k as f64;
            let mut s = 0.0;
            for i in (1..50).rev() {
                s += (i as f64).powf(-kf);
            }
            let nk = n.powf(-kf);
            let b2 = kf / 12.0 * nk / n;
            let b4 = -kf * (kf + 1.0) * (kf + 2.0) / 720.0 * nk / n.powi(3);
            let b6 = kf * (kf + 1.0) * (kf + 2.0) * (kf + 3.0) * (kf + 4.0) / 30240.0 * nk / n.powi(5);
            *slot = s + n * nk / (kf - 1.0) + 0.5 * nk + b2 + b4 + b6;
        }
        t
    })
}

/// ln Γ(1 + z) for |z| ≤ 0.25 by the zeta series.
fn ln_gamma_1p_small(z: f64) -> f64 {
    let zeta = zeta_table();
    let mut sum = -EULER_GAMMA * z;
    let mut pow = z;
    for (k, &zv) in zeta.iter().enumerate().skip(2) {
        pow *= z;
        let term = zv * pow / k as f64;
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
        if term.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

/// Stirling remainder lnΓ(a) − [(a−½)ln a − a + ½ln 2π], valid for a ≥ 10.
fn stirling_correction(a: f64) -> f64 {
    let r = 1.0 / a;
    let r2 = r * r;
    r * (1.0 / 12.0
        + r2 * (-1.0 / 360.0
            + r2 * (1.0 / 1260.0 + r2 * (-1.0 / 1680.0 + r2 * (1.0 / 1188.0 + r2 * (-691.0 / 360360.0 + r2 / 156.0))))))
}

/// ln Γ(a) for a > 0.
pub fn ln_gamma(a: f64) -> Result<f64> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::Domain(format!("ln_gamma needs a > 0, got {a}")));
    }
    Ok(ln_gamma_unchecked(a))
}

pub(crate) fn ln_gamma_unchecked(a: f64) -> f64 {
    if a >= 10.0 {
        return (a - 0.5) * a.ln() - a + LN_SQRT_2PI + stirling_correction(a);
    }
    if (a - 1.0).abs() <= 0.25 {
        return ln_gamma_1p_small(a - 1.0);
    }
    if (a - 2.0).abs() <= 0.25 {
        let z = a - 2.0;
        return z.ln_1p() + ln_gamma_1p_small(z);
    }
    let mut prod = 1.0;
    let mut b = a;
    while b < 10.0 {
        prod *= b;
        b += 1.0;
    }
    (b - 0.5) * b.ln() - b + LN_SQRT_2PI + stirling_correction(b) - prod.ln()
}

/// a·ln x − x − ln Γ(a), computed without cancelling large terms when a ≈ x.
fn ln_gamma_prefix(a: f64, x: f64) -> f64 {
    if a >= 10.0 {
        let t = (x - a) / a;
        a * (t.ln_1p() - t) + 0.5 * a.ln() - LN_SQRT_2PI - stirling_correction(a)
    } else {
        a * x.ln() - x - ln_gamma_unchecked(a)
    }
}

const GAMMA_EPS: f64 = 1e-17;

/// (ln P(a,x), ln Q(a,x)) for the regularized lower/upper incomplete gamma.
pub fn ln_gamma_pq(a: f64, x: f64) -> Result<(f64, f64)> {
    if !(a > 0.0) || !(x >= 0.0) {
        return Err(Error::Domain(format!("incomplete gamma needs a > 0, x ≥ 0, got a={a}, x={x}")));
    }
    if x == 0.0 {
        return Ok((LN_ZERO, 0.0));
    }
    if x.is_infinite() {
        return Ok((0.0, LN_ZERO));
    }
    let max_iter = 1000 + (50.0 * a.sqrt()) as usize + (2.0 * x) as usize;
    if x < a + 1.0 {
        // series: P = x^a e^{−x}/Γ(a+1) Σ xⁿ/((a+1)…(a+n))
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut ap = a;
        let mut converged = false;
        for _ in 0..max_iter {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term < sum * GAMMA_EPS {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::numerical(format!("incomplete gamma series stalled at a={a}, x={x}")));
        }
        let ln_p = ln_gamma_prefix(a, x) - a.ln() + sum.ln();
        let ln_q = if ln_p > -LN_2 { (-ln_p.exp_m1()).ln() } else { (-ln_p.exp()).ln_1p() };
        Ok((ln_p, ln_q))
    } else {
        // modified Lentz continued fraction for Q
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        let mut converged = false;
        for i in 1..max_iter {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < GAMMA_EPS.max(f64::EPSILON) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::numerical(format!("incomplete gamma fraction stalled at a={a}, x={x}")));
        }
        let ln_q = ln_gamma_prefix(a, x) + h.ln();
        Ok((ln_one_minus_exp(ln_q), ln_q))
    }
}

/// ln[1 + (−1)^j γ̃((j+1)/2, x²/2)] with γ̃ the regularized lower incomplete gamma.
/// Odd j goes straight to the upper function.
pub fn ln_gamma_parity_factor(j: u64, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("parity factor needs x ≥ 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let (ln_p, ln_q) = ln_gamma_pq((j as f64 + 1.0) / 2.0, 0.5 * x * x)?;
    if j.is_multiple_of(2) {
        Ok(if is_ln_zero(ln_p) { 0.0 } else { ln_p.exp().ln_1p() })
    } else {
        Ok(ln_q)
    }
}

/// ln Q(x), Q the standard Gaussian tail.
pub fn ln_q(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        let t = ln_q(-x);
        return ln_one_minus_exp(t);
    }
    let z = 0.5 * x * x;
    if !z.is_finite() {
        return LN_ZERO;
    }
    match ln_gamma_pq(0.5, z) {
        Ok((_, lq)) => lq - LN_2,
        Err(_) => -z - x.ln() - LN_SQRT_2PI,
    }
}

// ---------------------------------------------------------------------------
// Quadrature

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    /// Absolute error target, as a natural log. The sentinel disables it.
    pub abs_tol_ln: f64,
    pub max_subdivisions: usize,
    pub truncation_sigmas: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { rel_tol: 1e-10, abs_tol_ln: LN_ZERO, max_subdivisions: 4000, truncation_sigmas: 12.0 }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) {
            return Err(Error::Usage(format!("rel_tol must be positive, got {}", self.rel_tol)));
        }
        if self.max_subdivisions < 1 {
            return Err(Error::Usage("max_subdivisions must be at least 1".into()));
        }
        if !(self.truncation_sigmas >= 8.0) {
            return Err(Error::Usage(format!("truncation_sigmas must be at least 8, got {}", self.truncation_sigmas)));
        }
        Ok(())
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for GK_NODES[1], [3], [5], [7]
const G_WEIGHTS: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

struct Panel {
    a: f64,
    b: f64,
    ln_k: f64,
    ln_err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.ln_err.total_cmp(&other.ln_err).then_with(|| other.a.total_cmp(&self.a))
    }
}

fn eval_panel<F: Fn(f64) -> f64>(f_ln: &F, a: f64, b: f64) -> Result<Panel> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut k = LnSum::new();
    let mut g = LnSum::new();
    for i in 0..8 {
        let nodes: &[f64] = if i == 7 { &[0.0] } else { &[-1.0, 1.0] };
        for &sgn in nodes {
            let t = c + sgn * h * GK_NODES[i];
            let v = f_ln(t);
            if v.is_nan() || v == f64::INFINITY {
                return Err(Error::Numerical {
                    message: format!("integrand returned {v} at {t}"),
                    estimate: f64::NAN,
                    error_bound: f64::NAN,
                });
            }
            if is_ln_zero(v) {
                continue;
            }
            k.push(GK_WEIGHTS[i].ln() + v);
            if i % 2 == 1 {
                g.push(G_WEIGHTS[i / 2].ln() + v);
            }
        }
    }
    let ln_h = h.ln();
    let ln_k = k.value();
    if is_ln_zero(ln_k) {
        return Ok(Panel { a, b, ln_k: LN_ZERO, ln_err: LN_ZERO });
    }
    let ln_k = ln_k + ln_h;
    let ln_g = if is_ln_zero(g.value()) { LN_ZERO } else { g.value() + ln_h };
    let rel = if is_ln_zero(ln_g) { 1.0 } else { (ln_g - ln_k).exp_m1().abs() };
    let ln_err = if rel == 0.0 { LN_ZERO } else { ln_k + rel.ln() };
    Ok(Panel { a, b, ln_k, ln_err })
}

/// ln ∫ₐᵇ exp(f_ln(t)) dt by adaptive Gauss-Kronrod (7/15) subdivision.
pub fn integrate_ln<F: Fn(f64) -> f64>(f_ln: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<f64> {
    integrate_ln_panels(f_ln, a, b, spec, 1)
}

/// As [`integrate_ln`], starting from `initial_panels` equal panels.
pub fn integrate_ln_panels<F: Fn(f64) -> f64>(
    f_ln: F,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
    initial_panels: usize,
) -> Result<f64> {
    spec.validate()?;
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::Usage(format!("integration interval [{a}, {b}] is invalid")));
    }
    let n0 = initial_panels.max(1);
    let mut heap = BinaryHeap::with_capacity(n0 * 4);
    let width = (b - a) / n0 as f64;
    for i in 0..n0 {
        let lo = a + width * i as f64;
        let hi = if i + 1 == n0 { b } else { a + width * (i + 1) as f64 };
        heap.push(eval_panel(&f_ln, lo, hi)?);
    }
    let ln_rel = spec.rel_tol.ln();
    let mut splits = 0usize;
    loop {
        let (ln_total, ln_err) = totals(&heap);
        if is_ln_zero(ln_total) {
            return Ok(LN_ZERO);
        }
        if is_ln_zero(ln_err) || ln_err <= ln_total + ln_rel || ln_err <= spec.abs_tol_ln {
            return Ok(ln_total);
        }
        if splits >= spec.max_subdivisions {
            return Err(Error::Numerical {
                message: format!("quadrature on [{a}, {b}] did not converge in {splits} subdivisions"),
                estimate: ln_total,
                error_bound: ln_err,
            });
        }
        let worst = heap.pop().expect("non-empty panel set");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // panel cannot be split further; accept its estimate
            heap.push(Panel { ln_err: LN_ZERO, ..worst });
            continue;
        }
        heap.push(eval_panel(&f_ln, worst.a, mid)?);
        heap.push(eval_panel(&f_ln, mid, worst.b)?);
        splits += 1;
    }
}

fn totals(heap: &BinaryHeap<Panel>) -> (f64, f64) {
    let mut panels: Vec<&Panel> = heap.iter().collect();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let mut total = LnSum::new();
    let mut err = LnSum::new();
    for p in panels {
        total.push(p.ln_k);
        err.push(p.ln_err);
    }
    (total.value(), err.value())
}

/// Gauss-Legendre nodes and weights on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

// ---------------------------------------------------------------------------
// Root finding and maximization

/// A sign-change bracket for a scalar function.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub f_lo: f64,
    pub f_hi: f64,
}

impl Bracket {
    pub fn new(lo: f64, hi: f64, f_lo: f64, f_hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::Usage(format!("bracket needs lo < hi, got [{lo}, {hi}]")));
        }
        if f_lo.is_nan() || f_hi.is_nan() || f_lo.signum() == f_hi.signum() && f_lo != 0.0 && f_hi != 0.0 {
            return Err(Error::Usage(format!("bracket [{lo}, {hi}] has no sign change (f = {f_lo}, {f_hi})")));
        }
        Ok(Bracket { lo, hi, f_lo, f_hi })
    }

    pub fn from_fn<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64) -> Result<Self> {
        let (flo, fhi) = (f(lo), f(hi));
        Bracket::new(lo, hi, flo, fhi)
    }

    pub fn f_lo_sign(&self) -> f64 {
        self.f_lo.signum()
    }

    pub fn f_hi_sign(&self) -> f64 {
        self.f_hi.signum()
    }
}

/// Brent's method: inverse quadratic / secant steps with bisection fallback.
pub fn find_root<F: FnMut(f64) -> f64>(mut f: F, bracket: &Bracket, tol: f64) -> Result<f64> {
    let (mut a, mut b) = (bracket.lo, bracket.hi);
    let (mut fa, mut fb) = (bracket.f_lo, bracket.f_hi);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    let (mut c, mut fc) = (b, fb);
    let (mut d, mut e) = (b - a, b - a);
    for _ in 0..300 {
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
        if fb.is_nan() {
            return Err(Error::numerical(format!("root function returned NaN at {b}")));
        }
    }
    Err(Error::numerical("root finder exceeded its iteration budget"))
}

const GRID_POINTS: usize = 200;
const INV_PHI: f64 = 0.618_033_988_749_894_9;

fn finite_or_neg_inf(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

/// Grid scan (log-spaced when lo > 0) followed by golden-section refinement.
pub fn maximize_scalar<F: FnMut(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<(f64, f64)> {
    maximize_scalar_grid(f, lo, hi, tol, GRID_POINTS)
}

pub fn scan_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n)
        .map(|i| {
            if i == n - 1 {
                return hi;
            }
            let t = i as f64 / (n - 1) as f64;
            if lo > 0.0 {
                lo * (hi / lo).powf(t)
            } else {
                lo + (hi - lo) * t
            }
        })
        .collect()
}

pub fn maximize_scalar_grid<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    tol: f64,
    n_grid: usize,
) -> Result<(f64, f64)> {
    if !(lo < hi) {
        return Err(Error::Usage(format!("maximize_scalar needs lo < hi, got [{lo}, {hi}]")));
    }
    let grid = scan_grid(lo, hi, n_grid);
    let vals: Vec<f64> = grid.iter().map(|&t| finite_or_neg_inf(f(t))).collect();
    let mut best = 0;
    for i in 1..vals.len() {
        if vals[i] > vals[best] {
            best = i;
        }
    }
    if vals.iter().all(|&v| v == vals[0]) {
        return Ok((lo, vals[0]));
    }
    if vals[best] == f64::NEG_INFINITY {
        return Ok((grid[best], vals[best]));
    }
    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(grid.len() - 1)];
    let (x, v) = golden_section(&mut f, a, b, tol);
    if v > vals[best] {
        Ok((x, v))
    } else {
        Ok((grid[best], vals[best]))
    }
}

/// Golden-section search for a maximum on [a, b].
pub fn golden_section<F: FnMut(f64) -> f64>(f: &mut F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = finite_or_neg_inf(f(c));
    let mut fd = finite_or_neg_inf(f(d));
    for _ in 0..200 {
        if (b - a).abs() <= tol * (1.0 + 0.5 * (a.abs() + b.abs())) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = finite_or_neg_inf(f(c));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = finite_or_neg_inf(f(d));
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// ln of the binomial coefficient C(n, k).
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k == 0 || k == n {
        return 0.0;
    }
    ln_gamma_unchecked(n as f64 + 1.0) - ln_gamma_unchecked(k as f64 + 1.0) - ln_gamma_unchecked((n - k) as f64 + 1.0)
}
