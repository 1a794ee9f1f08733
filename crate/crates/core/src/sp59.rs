//! The 1959 sphere-packing bound for equal-energy signals on the AWGN channel.
//!
//! The error probability of any code is bounded below by the probability that
//! the received vector leaves a circular cone around the transmitted signal whose
//! solid angle is a fraction e^{−NR} of the whole space. Everything is evaluated
//! in the log domain, so block lengths of 10⁵ dimensions and more are routine.

use std::f64::consts::{FRAC_PI_2, LN_2, PI};

use crate::error::{Error, Result};
use crate::numerics::{
    find_root, integrate_ln, integrate_ln_panels, ln_add, ln_gamma, ln_gamma_parity_factor, ln_gamma_unchecked, ln_q,
    maximize_scalar, Bracket, LnSum, QuadratureSpec, LN_ZERO,
};

const LN_2PI: f64 = 1.837_877_066_409_345_5;
const LN_PI: f64 = 1.144_729_885_849_400_2;
/// Terms more than this many nats below the leading one are dropped from max*.
const PRUNE_NATS: f64 = 45.0;
pub const RECURSION_MAX_N: u64 = 200;

/// Code parameters in signal-space terms: N real dimensions, R nats per dimension,
/// and A = √(2Es/N0) with Es the energy per dimension.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sp59Params {
    pub n_dims: u64,
    pub rate_nats_per_dim: f64,
    pub a: f64,
}

impl Sp59Params {
    pub fn new(n_dims: u64, rate_nats_per_dim: f64, a: f64) -> Result<Self> {
        if n_dims < 2 {
            return Err(Error::Usage(format!("need at least 2 dimensions, got {n_dims}")));
        }
        if !(rate_nats_per_dim > 0.0) || !rate_nats_per_dim.is_finite() {
            return Err(Error::Usage(format!("rate must be positive, got {rate_nats_per_dim}")));
        }
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::Usage(format!("A must be positive, got {a}")));
        }
        Ok(Sp59Params { n_dims, rate_nats_per_dim, a })
    }

    /// From Eb/N0 in dB and the rate in bits per real dimension.
    pub fn from_ebn0_db(n_dims: u64, rate_bits_per_dim: f64, ebn0_db: f64) -> Result<Self> {
        let a = (2.0 * rate_bits_per_dim * 10f64.powf(ebn0_db / 10.0)).sqrt();
        Sp59Params::new(n_dims, rate_bits_per_dim * LN_2, a)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ConeMode {
    /// Exact solid angle equal to e^{−NR}.
    #[default]
    ExactTheta1,
    /// Shannon's lower bound on the solid angle set equal to e^{−NR}.
    ShannonThetaStar,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConeSolution {
    pub theta: f64,
    pub mode: ConeMode,
    /// Exact ln[Ω_N(θ)/Ω_N(π)] at the returned θ.
    pub ln_solid_angle_ratio: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sp59Method {
    ExactLogDomain,
    AsymptoticLower,
    ShannonApprox,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sp59Result {
    pub ln_pe_lower: f64,
    pub cone: ConeSolution,
    pub method: Sp59Method,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolidAngleBounds {
    pub lower: f64,
    pub exact: f64,
    pub upper: f64,
}

fn ln_gamma_ratio_half(n: f64) -> f64 {
    // lnΓ(N/2) − lnΓ((N+1)/2)
    ln_gamma_unchecked(n / 2.0) - ln_gamma_unchecked((n + 1.0) / 2.0)
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta < FRAC_PI_2) {
        return Err(Error::Domain(format!("cone half-angle must lie in (0, π/2), got {theta}")));
    }
    Ok(())
}

/// Exact ln[Ω_N(θ)/Ω_N(π)] for θ ∈ (0, π/2].
fn ln_ratio_exact(n: u64, theta: f64, spec: &QuadratureSpec) -> Result<f64> {
    if n == 2 {
        return Ok((theta / PI).ln());
    }
    let nf = n as f64;
    let pre = ln_gamma(nf / 2.0)? - ln_gamma((nf - 1.0) / 2.0)? - 0.5 * LN_PI;
    let e = nf - 2.0;
    let integral = integrate_ln(|phi| e * phi.sin().ln(), 0.0, theta, spec)?;
    Ok(pre + integral)
}

/// Shannon's upper bound ln[Γ(N/2) sin^{N−1}θ / (2Γ((N+1)/2)√π cos θ)].
fn ln_ratio_upper(nf: f64, theta: f64) -> f64 {
    ln_gamma_ratio_half(nf) + (nf - 1.0) * theta.sin().ln() - LN_2 - 0.5 * LN_PI - theta.cos().ln()
}

fn ln_ratio_lower(nf: f64, theta: f64) -> f64 {
    let t = theta.tan();
    let corr = 1.0 - t * t / nf;
    if corr <= 0.0 {
        return f64::NEG_INFINITY;
    }
    ln_ratio_upper(nf, theta) + corr.ln()
}

/// ln of the solid-angle fraction of a circular cone, with Shannon's sandwich.
pub fn ln_solid_angle_ratio(n: u64, theta: f64) -> Result<SolidAngleBounds> {
    ln_solid_angle_ratio_with(n, theta, &QuadratureSpec::default())
}

pub fn ln_solid_angle_ratio_with(n: u64, theta: f64, spec: &QuadratureSpec) -> Result<SolidAngleBounds> {
    if n < 2 {
        return Err(Error::Usage(format!("need at least 2 dimensions, got {n}")));
    }
    check_theta(theta)?;
    let nf = n as f64;
    Ok(SolidAngleBounds {
        lower: ln_ratio_lower(nf, theta),
        exact: ln_ratio_exact(n, theta, spec)?,
        upper: ln_ratio_upper(nf, theta),
    })
}

pub fn solve_cone_angle(n: u64, rate_nats_per_dim: f64, mode: ConeMode) -> Result<ConeSolution> {
    solve_cone_angle_with(n, rate_nats_per_dim, mode, &QuadratureSpec::default())
}

pub fn solve_cone_angle_with(
    n: u64,
    rate_nats_per_dim: f64,
    mode: ConeMode,
    spec: &QuadratureSpec,
) -> Result<ConeSolution> {
    if n < 2 {
        return Err(Error::Usage(format!("need at least 2 dimensions, got {n}")));
    }
    let target = -(n as f64) * rate_nats_per_dim;
    if !(target < -LN_2) {
        return Err(Error::RateTooLow(format!(
            "e^(-NR) = e^({target}) is not below 1/2, so no cone with half-angle under π/2 exists"
        )));
    }
    let nf = n as f64;
    let theta = match mode {
        ConeMode::ExactTheta1 => {
            let mut err = None;
            let mut f = |t: f64| match ln_ratio_exact(n, t, spec) {
                Ok(v) => v - target,
                Err(e) => {
                    err.get_or_insert(e);
                    f64::NAN
                }
            };
            let hi = FRAC_PI_2;
            let mut lo = 0.5;
            while f(lo) > 0.0 {
                lo *= 0.5;
                if lo < 1e-300 {
                    return Err(Error::numerical("cone angle underflows"));
                }
            }
            let br = Bracket::from_fn(&mut f, lo, hi)?;
            let t = find_root(&mut f, &br, 1e-13);
            if let Some(e) = err {
                return Err(e);
            }
            t?
        }
        ConeMode::ShannonThetaStar => {
            // the lower bound rises from −∞ at 0 and falls back to −∞ at tan θ = √N
            let t_max = nf.sqrt().atan();
            let (peak, vmax) = maximize_scalar(|t| ln_ratio_lower(nf, t), 1e-12, t_max, 1e-14)?;
            if vmax < target {
                return Err(Error::RateTooLow(format!(
                    "Shannon's solid-angle bound peaks at {vmax}, below -NR = {target}"
                )));
            }
            let f = |t: f64| ln_ratio_lower(nf, t) - target;
            let mut lo = 0.5 * peak;
            while f(lo) > 0.0 {
                lo *= 0.5;
                if lo < 1e-300 {
                    return Err(Error::numerical("cone angle underflows"));
                }
            }
            let br = Bracket::from_fn(f, lo, peak)?;
            find_root(f, &br, 1e-13)?
        }
    };
    if !(theta > 0.0 && theta < FRAC_PI_2) {
        return Err(Error::RateTooLow(format!("cone half-angle {theta} is not below π/2")));
    }
    Ok(ConeSolution { theta, mode, ln_solid_angle_ratio: ln_ratio_exact(n, theta, spec)? })
}

/// Precomputed Gamma terms of the exponents d(N, j, x), reusable across x.
#[derive(Clone, Debug)]
pub struct LnFn {
    n: u64,
    ln_gamma_n2: f64,
    // lnΓ(j/2 + 1) + lnΓ(N − j)
    ln_gamma_j: Vec<f64>,
}

impl LnFn {
    pub fn new(n: u64) -> Result<Self> {
        if n < 1 {
            return Err(Error::Usage("f_N needs N ≥ 1".into()));
        }
        let nf = n as f64;
        let ln_gamma_j = (0..n)
            .map(|j| Ok(ln_gamma(j as f64 / 2.0 + 1.0)? + ln_gamma((n - j) as f64)?))
            .collect::<Result<Vec<_>>>()?;
        Ok(LnFn { n, ln_gamma_n2: ln_gamma(nf / 2.0)?, ln_gamma_j })
    }

    /// d(N, j, x) without the parity factor, which lies in (−∞, ln 2].
    fn base(&self, j: usize, x: f64, ln_sqrt2x: f64) -> f64 {
        let k = (self.n as usize - 1 - j) as f64;
        0.5 * x * x + self.ln_gamma_n2 - self.ln_gamma_j[j] + k * ln_sqrt2x - 0.5 * LN_2
    }

    /// d(N, j, x) for one j, for inspecting the max* assembly.
    pub fn d(&self, j: u64, x: f64) -> Result<f64> {
        if j >= self.n {
            return Err(Error::Usage(format!("j must be below N = {}, got {j}", self.n)));
        }
        if x == 0.0 {
            return Ok(if j == self.n - 1 { self.eval(0.0)? } else { LN_ZERO });
        }
        Ok(self.base(j as usize, x, (2f64.sqrt() * x).ln()) + ln_gamma_parity_factor(j, x)?)
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) || !x.is_finite() {
            return Err(Error::Domain(format!("f_N is only evaluated at finite x ≥ 0, got {x}")));
        }
        let n = self.n as usize;
        if x == 0.0 {
            // only j = N−1 survives; its power of x is x⁰ = 1 and γ̃(0, ·) = 0
            return Ok(self.ln_gamma_n2 - self.ln_gamma_j[n - 1] - 0.5 * LN_2);
        }
        let lx = (2f64.sqrt() * x).ln();
        let base: Vec<f64> = (0..n).map(|j| self.base(j, x, lx)).collect();
        let lead = base.iter().step_by(2).cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut acc = LnSum::new();
        for (j, &b) in base.iter().enumerate() {
            if b + LN_2 < lead - PRUNE_NATS {
                continue;
            }
            acc.push(b + ln_gamma_parity_factor(j as u64, x)?);
        }
        Ok(acc.value())
    }
}

/// ln f_N(x) as the max* of the exponents d(N, j, x), j = 0..N−1.
pub fn ln_f_n(n: u64, x: f64) -> Result<f64> {
    LnFn::new(n)?.eval(x)
}

/// f_N(x) from the polynomial recursion. Only a cross-check: the recursion loses
/// its dominant coefficients to underflow for large N, so N above 200 is refused.
pub fn f_n_recursive(n: u64, x: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Usage("f_N needs N ≥ 1".into()));
    }
    if n > RECURSION_MAX_N {
        return Err(Error::Domain(format!(
            "the recursion is unreliable beyond N = {RECURSION_MAX_N} (got {n}); use ln_f_n"
        )));
    }
    let c = (2.0 / PI).sqrt();
    let x2 = x * x;
    let mut p = vec![0.0, 0.0, c, 0.5 * x, c * (2.0 + x2) / 3.0];
    let mut q = vec![0.0, 1.0, c * x, 0.5 * (1.0 + x2), c * (3.0 * x + x2 * x) / 3.0];
    for k in 5..=n as usize {
        let kf = k as f64;
        let a = (2.0 * kf - 5.0 + x2) / (kf - 1.0);
        let b = (kf - 4.0) / (kf - 1.0);
        p.push(a * p[k - 2] - b * p[k - 4]);
        q.push(a * q[k - 2] - b * q[k - 4]);
    }
    let k = n as usize;
    // e^{x²/2} ∫_{−∞}^x e^{−t²/2} dt = √(2π) e^{x²/2} Φ(x)
    let tail = (0.5 * x2 + 0.5 * LN_2PI + ln_q(-x)).exp();
    Ok(p[k] + q[k] * tail)
}

fn check_a(a: f64) -> Result<()> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::Domain(format!("A must be positive and finite, got {a}")));
    }
    Ok(())
}

/// ln P_SPB(N, θ, A): the probability of leaving the cone, by log-domain quadrature.
pub fn ln_p_spb(n: u64, theta: f64, a: f64, spec: &QuadratureSpec) -> Result<f64> {
    if n < 2 {
        return Err(Error::Usage(format!("need at least 2 dimensions, got {n}")));
    }
    check_theta(theta)?;
    check_a(a)?;
    let nf = n as f64;
    let table = LnFn::new(n)?;
    let sa = nf.sqrt() * a;
    let c = (nf - 1.0).ln() - 0.5 * nf * a * a - 0.5 * LN_2PI;
    let e = nf - 2.0;
    let err = std::cell::RefCell::new(None);
    let integrand = |phi: f64| {
        let x = (sa * phi.cos()).max(0.0);
        match table.eval(x) {
            Ok(v) => c + if e > 0.0 { e * phi.sin().ln() } else { 0.0 } + v,
            Err(er) => {
                err.borrow_mut().get_or_insert(er);
                f64::NAN
            }
        }
    };
    let integral = integrate_ln_panels(integrand, theta, FRAC_PI_2, spec, 64);
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    Ok(ln_add(integral?, ln_q(sa)))
}

pub fn sp59_bound(params: &Sp59Params, mode: ConeMode) -> Result<Sp59Result> {
    sp59_bound_with(params, mode, &QuadratureSpec::default())
}

pub fn sp59_bound_with(params: &Sp59Params, mode: ConeMode, spec: &QuadratureSpec) -> Result<Sp59Result> {
    let p = Sp59Params::new(params.n_dims, params.rate_nats_per_dim, params.a)?;
    let cone = solve_cone_angle_with(p.n_dims, p.rate_nats_per_dim, mode, spec)?;
    let ln_pe_lower = ln_p_spb(p.n_dims, cone.theta, p.a, spec)?.min(0.0);
    Ok(Sp59Result { ln_pe_lower, cone, method: Sp59Method::ExactLogDomain })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AsymptoticMode {
    /// A lower bound on P_SPB valid for every N.
    Lower,
    /// Shannon's approximation, accurate for large N but not a bound.
    Approx,
}

fn g_and_el(theta: f64, a: f64) -> (f64, f64) {
    let c = theta.cos();
    let g = 0.5 * (a * c + (a * a * c * c + 4.0).sqrt());
    let el = 0.5 * (a * a - a * g * c - 2.0 * (g * theta.sin()).ln());
    (g, el)
}

/// G(θ) = (A cos θ + √(A² cos² θ + 4))/2.
pub fn sp59_g(theta: f64, a: f64) -> f64 {
    g_and_el(theta, a).0
}

/// The exponent E_L(θ) of the asymptotic forms.
pub fn sp59_exponent(theta: f64, a: f64) -> f64 {
    g_and_el(theta, a).1
}

pub fn sp59_asymptotic(n: u64, theta: f64, a: f64, mode: AsymptoticMode) -> Result<f64> {
    if n < 2 {
        return Err(Error::Usage(format!("need at least 2 dimensions, got {n}")));
    }
    check_theta(theta)?;
    check_a(a)?;
    let nf = n as f64;
    let (g, el) = g_and_el(theta, a);
    match mode {
        AsymptoticMode::Lower => {
            Ok(0.5 * (nf - 1.0).ln() - (6.0 * nf * (a + 1.0)).ln() - 0.5 * ((a + 1.0).powi(2) + 3.0) - nf * el)
        }
        AsymptoticMode::Approx => {
            if theta <= (1.0 / a).atan() {
                return Err(Error::Domain(format!(
                    "the approximation needs θ > arccot(A) = {}, got {theta}",
                    (1.0 / a).atan()
                )));
            }
            let s = theta.sin();
            let inner = a * g * s * s - theta.cos();
            let ln_alpha = -(0.5 * (PI * (1.0 + g * g)).ln() + s.ln() + inner.ln());
            Ok(ln_alpha - nf * el - 0.5 * nf.ln())
        }
    }
}

/// SP59 evaluated by the chosen method at the cone angle of `mode`.
pub fn sp59_evaluate(
    params: &Sp59Params,
    mode: ConeMode,
    method: Sp59Method,
    spec: &QuadratureSpec,
) -> Result<Sp59Result> {
    match method {
        Sp59Method::ExactLogDomain => sp59_bound_with(params, mode, spec),
        _ => {
            let p = Sp59Params::new(params.n_dims, params.rate_nats_per_dim, params.a)?;
            let cone = solve_cone_angle_with(p.n_dims, p.rate_nats_per_dim, mode, spec)?;
            let am = if method == Sp59Method::AsymptoticLower { AsymptoticMode::Lower } else { AsymptoticMode::Approx };
            let v = sp59_asymptotic(p.n_dims, cone.theta, p.a, am)?;
            Ok(Sp59Result { ln_pe_lower: v.min(0.0), cone, method })
        }
    }
}
