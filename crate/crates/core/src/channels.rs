//! Symmetric memoryless channels: M-PSK over AWGN and the binary erasure channel.
//!
//! Every channel exposes the μ₀ triplet of the optimal tilting measure, the
//! Gallager function E₀ for the uniform input, the VF moments ν¹/ν², the
//! tilting density and the capacity. Rates are in nats.

use std::f64::consts::{LN_2, PI};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numerics::{gauss_legendre, integrate_ln_panels, is_ln_zero, ln_add, LnSum, QuadratureSpec, LN_ZERO};

const S_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TiltingEvaluation {
    pub s: f64,
    pub mu0: f64,
    pub mu0_prime: f64,
    pub mu0_double_prime: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InputDistribution {
    weights: Vec<f64>,
}

impl InputDistribution {
    pub fn uniform(k: usize) -> Self {
        InputDistribution { weights: vec![1.0 / k as f64; k] }
    }

    pub fn new(weights: Vec<f64>) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if weights.is_empty() || weights.iter().any(|w| !(*w >= 0.0)) || (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Usage("input weights must be non-negative and sum to 1".into()));
        }
        Ok(InputDistribution { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

pub trait SymmetricChannel: Send + Sync {
    /// Input alphabet size K.
    fn input_size(&self) -> usize;

    /// μ₀(s), ∂μ₀/∂s, ∂²μ₀/∂s² with the tilting measure held at f_s.
    fn mu0_triplet(&self, s: f64) -> Result<TiltingEvaluation>;

    /// E₀(ρ) for the uniform input.
    fn e0(&self, rho: f64) -> Result<f64>;

    /// Mutual information with the uniform input, in nats per channel use.
    fn capacity(&self) -> Result<f64>;

    /// (ν¹(ρ), ν²(ρ)) built from the normalized β weights for input 0.
    fn vf_moments(&self, rho: f64) -> Result<(f64, f64)>;

    /// ln Σ_y P(y|0)^{1−s} f_{s0}(y)^s: μ at s with the tilting measure frozen at s0.
    fn mu0_fixed_tilt(&self, s0: f64, s: f64) -> Result<f64>;

    /// (ν¹, ν², E₀) at ρ in one call; channels that share work between them override this.
    fn vf_terms(&self, rho: f64) -> Result<(f64, f64, f64)> {
        let (n1, n2) = self.vf_moments(rho)?;
        Ok((n1, n2, self.e0(rho)?))
    }

    /// μ(s0 + ds; f_{s0}) − μ(s0; f_{s0}) = ln E_Q[e^{ds·D}], evaluated without cancellation.
    fn mu0_fixed_tilt_increment(&self, s0: f64, ds: f64) -> Result<f64>;

    /// Smallest nonzero transition probability. `None` for continuous output.
    fn min_transition(&self) -> Option<f64>;

    /// Whether the output lives in a Euclidean signal space.
    fn is_euclidean(&self) -> bool;

    fn describe(&self) -> String;
}

fn check_s(s: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Domain(format!("tilting parameter s must lie in (0,1), got {s}")));
    }
    Ok(s.clamp(S_EPS, 1.0 - S_EPS))
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho >= 0.0) || !rho.is_finite() {
        return Err(Error::Domain(format!("rho must be finite and non-negative, got {rho}")));
    }
    Ok(())
}

#[inline]
fn ln0(x: f64) -> f64 {
    if x > 0.0 {
        x.ln()
    } else {
        LN_ZERO
    }
}

// ---------------------------------------------------------------------------
// Discrete memoryless channels

/// E₀(ρ, q) = −ln Σ_j (Σ_k q_k P(j|k)^{1/(1+ρ)})^{1+ρ} for a transition matrix `p[k][j]`.
pub fn dmc_e0(p: &[Vec<f64>], q: &InputDistribution, rho: f64) -> Result<f64> {
    check_rho(rho)?;
    if p.len() != q.weights().len() {
        return Err(Error::Usage("input distribution size does not match the channel".into()));
    }
    let a = 1.0 / (1.0 + rho);
    let outputs = p[0].len();
    let mut total = LnSum::new();
    for j in 0..outputs {
        let mut inner = LnSum::new();
        for (k, row) in p.iter().enumerate() {
            let w = q.weights()[k];
            if w > 0.0 && row[j] > 0.0 {
                inner.push(w.ln() + a * row[j].ln());
            }
        }
        let v = inner.value();
        if !is_ln_zero(v) {
            total.push((1.0 + rho) * v);
        }
    }
    Ok(-total.value())
}

/// ν¹, ν² of the VF bound for input `k` with uniform q_ρ.
pub fn dmc_vf_moments(p: &[Vec<f64>], rho: f64, k: usize) -> Result<(f64, f64)> {
    check_rho(rho)?;
    let kk = p.len() as f64;
    let a = 1.0 / (1.0 + rho);
    let outputs = p[0].len();
    let mut ln_beta = Vec::with_capacity(outputs);
    let mut ln_ratio = Vec::with_capacity(outputs);
    for j in 0..outputs {
        if p[k][j] <= 0.0 {
            continue;
        }
        let mut alpha = LnSum::new();
        for row in p {
            if row[j] > 0.0 {
                alpha.push(-kk.ln() + a * row[j].ln());
            }
        }
        let lb = a * p[k][j].ln() + rho * alpha.value();
        ln_beta.push(lb);
        ln_ratio.push(lb - p[k][j].ln());
    }
    let mut norm = LnSum::new();
    for &b in &ln_beta {
        norm.push(b);
    }
    let ln_norm = norm.value();
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    for (b, r) in ln_beta.iter().zip(&ln_ratio) {
        let w = (b - ln_norm).exp();
        m1 += w * r;
        m2 += w * r * r;
    }
    Ok((m1, (m2 - m1 * m1).max(0.0)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BecOutput {
    Zero,
    One,
    Erasure,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BecChannel {
    p: f64,
}

impl BecChannel {
    pub fn new(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!("erasure probability must lie in [0,1], got {p}")));
        }
        Ok(BecChannel { p })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Rows indexed by input, columns by output (0, 1, ℰ).
    pub fn transition_matrix(&self) -> Vec<Vec<f64>> {
        let p = self.p;
        vec![vec![1.0 - p, 0.0, p], vec![0.0, 1.0 - p, p]]
    }

    /// ln(1 − p + 2^ρ p)
    fn ln_l(&self, rho: f64) -> f64 {
        ln_add(ln0(1.0 - self.p), ln0(self.p) + rho * LN_2)
    }

    /// Q_{0,s}(ℰ) = 2^ρ p / (1 − p + 2^ρ p)
    fn erasure_weight(&self, rho: f64) -> f64 {
        if self.p == 0.0 {
            return 0.0;
        }
        (ln0(self.p) + rho * LN_2 - self.ln_l(rho)).exp()
    }

    pub fn ln_tilting_density(&self, s: f64, y: BecOutput) -> Result<f64> {
        let s = check_s(s)?;
        let ln_d = ln_add(LN_2 + ln0(1.0 - self.p), ln0(self.p) + LN_2 / (1.0 - s));
        Ok(match y {
            BecOutput::Zero | BecOutput::One => {
                if self.p == 1.0 {
                    LN_ZERO
                } else {
                    ln0(1.0 - self.p) - ln_d
                }
            }
            BecOutput::Erasure => {
                if self.p == 0.0 {
                    LN_ZERO
                } else {
                    ln0(self.p) + LN_2 / (1.0 - s) - ln_d
                }
            }
        })
    }
}

impl SymmetricChannel for BecChannel {
    fn input_size(&self) -> usize {
        2
    }

    fn mu0_triplet(&self, s: f64) -> Result<TiltingEvaluation> {
        let s = check_s(s)?;
        let rho = s / (1.0 - s);
        let l = self.ln_l(rho);
        let w = self.erasure_weight(rho);
        let c = LN_2 / (1.0 - s);
        Ok(TiltingEvaluation {
            s,
            mu0: (1.0 - s) * l - s * LN_2,
            mu0_prime: -LN_2 - l + w * c,
            mu0_double_prime: w * (1.0 - w) * c * c,
        })
    }

    fn e0(&self, rho: f64) -> Result<f64> {
        check_rho(rho)?;
        if rho == 0.0 {
            return Ok(0.0);
        }
        Ok(rho * LN_2 - self.ln_l(rho))
    }

    fn capacity(&self) -> Result<f64> {
        Ok((1.0 - self.p) * LN_2)
    }

    fn vf_moments(&self, rho: f64) -> Result<(f64, f64)> {
        dmc_vf_moments(&self.transition_matrix(), rho, 0)
    }

    fn mu0_fixed_tilt(&self, s0: f64, s: f64) -> Result<f64> {
        let mut acc = LnSum::new();
        let row = &self.transition_matrix()[0];
        for (j, y) in [BecOutput::Zero, BecOutput::One, BecOutput::Erasure].into_iter().enumerate() {
            if row[j] > 0.0 {
                acc.push((1.0 - s) * row[j].ln() + s * self.ln_tilting_density(s0, y)?);
            }
        }
        Ok(acc.value())
    }

    fn mu0_fixed_tilt_increment(&self, s0: f64, ds: f64) -> Result<f64> {
        let t = check_s(s0)?;
        let w = self.erasure_weight(t / (1.0 - t));
        let row = &self.transition_matrix()[0];
        let mut acc = 0.0;
        for (j, (y, q)) in [(BecOutput::Zero, 1.0 - w), (BecOutput::Erasure, w)].into_iter().enumerate() {
            let pj = row[if j == 0 { 0 } else { 2 }];
            if q > 0.0 && pj > 0.0 {
                let d = self.ln_tilting_density(t, y)? - pj.ln();
                acc += q * (ds * d).exp_m1();
            }
        }
        Ok(acc.ln_1p())
    }

    fn min_transition(&self) -> Option<f64> {
        [1.0 - self.p, self.p].into_iter().filter(|v| *v > 0.0).reduce(f64::min)
    }

    fn is_euclidean(&self) -> bool {
        false
    }

    fn describe(&self) -> String {
        format!("BEC(p={})", self.p)
    }
}

// ---------------------------------------------------------------------------
// M-PSK over AWGN

/// Panel layout of the fixed tensor-product rule used for the M-PSK moments.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PskQuadrature {
    pub truncation_sigmas: f64,
    /// Panel width in units of σ.
    pub panel_sigmas: f64,
    /// Gauss-Legendre points per panel.
    pub order: usize,
    /// Relative tolerance for adaptive evaluations (BPSK/QPSK E₀).
    pub rel_tol: f64,
}

impl Default for PskQuadrature {
    fn default() -> Self {
        PskQuadrature { truncation_sigmas: 12.0, panel_sigmas: 1.5, order: 10, rel_tol: 1e-11 }
    }
}

impl PskQuadrature {
    pub fn from_spec(spec: &QuadratureSpec) -> Self {
        PskQuadrature {
            truncation_sigmas: spec.truncation_sigmas,
            rel_tol: spec.rel_tol.min(1e-11),
            ..Default::default()
        }
    }
}

/// Point set for E_{p0}[·] with the log-likelihood offsets u_k = ⟨y, x_k − x₀⟩/σ², k ≥ 1.
#[derive(Debug)]
struct MomentGrid {
    ln_w: Vec<f64>,
    u: Vec<f64>,
    stride: usize,
    ln_m: f64,
}

#[derive(Clone, Copy, Debug)]
struct Moments {
    ln_theta: f64,
    mean_g: f64,
    var_g: f64,
}

fn composite_nodes(lo: f64, hi: f64, panels: usize, order: usize) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(order);
    let h = (hi - lo) / panels as f64;
    let mut out = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let a = lo + h * p as f64;
        for (xi, wi) in x.iter().zip(&w) {
            out.push((a + 0.5 * h * (xi + 1.0), 0.5 * h * wi));
        }
    }
    out
}

impl MomentGrid {
    /// One antipodal pair ±amp along a line, noise σ.
    fn antipodal(amp: f64, sigma: f64, q: &PskQuadrature) -> Self {
        let lo = -amp - q.truncation_sigmas * sigma;
        let hi = amp + q.truncation_sigmas * sigma;
        let panels = ((hi - lo) / (q.panel_sigmas * sigma)).ceil().max(1.0) as usize;
        let s2 = sigma * sigma;
        let ln_norm = -0.5 * (2.0 * PI * s2).ln();
        let mut ln_w = Vec::new();
        let mut u = Vec::new();
        for (t, w) in composite_nodes(lo, hi, panels, q.order) {
            ln_w.push(w.ln() + ln_norm - (t - amp) * (t - amp) / (2.0 * s2));
            u.push(-2.0 * amp * t / s2);
        }
        MomentGrid { ln_w, u, stride: 1, ln_m: LN_2 }
    }

    /// Polar grid for M-PSK with panels aligned to the decision sectors.
    fn polar(m: usize, sigma: f64, q: &PskQuadrature) -> Self {
        let pts = constellation(m);
        let s2 = sigma * sigma;
        let r_lo = (1.0 - q.truncation_sigmas * sigma).max(0.0);
        let r_hi = 1.0 + q.truncation_sigmas * sigma;
        let r_panels = ((r_hi - r_lo) / (q.panel_sigmas * sigma)).ceil().max(1.0) as usize;
        let sector = 2.0 * PI / m as f64;
        let per_sector = (sector / (q.panel_sigmas * sigma)).ceil().max(1.0) as usize;
        let radial = composite_nodes(r_lo, r_hi, r_panels, q.order);
        let angular = composite_nodes(0.0, 2.0 * PI, per_sector * m, q.order);
        let ln_norm = -(2.0 * PI * s2).ln();
        let stride = m - 1;
        let mut ln_w = Vec::with_capacity(radial.len() * angular.len());
        let mut u = Vec::with_capacity(radial.len() * angular.len() * stride);
        let (x0, y0) = pts[0];
        for &(r, wr) in &radial {
            for &(phi, wp) in &angular {
                let (y1, y2) = (r * phi.cos(), r * phi.sin());
                let d2 = (y1 - x0).powi(2) + (y2 - y0).powi(2);
                ln_w.push((wr * wp * r).ln() + ln_norm - d2 / (2.0 * s2));
                for &(xk, yk) in &pts[1..] {
                    u.push((y1 * (xk - x0) + y2 * (yk - y0)) / s2);
                }
            }
        }
        MomentGrid { ln_w, u, stride, ln_m: (m as f64).ln() }
    }

    fn len(&self) -> usize {
        self.ln_w.len()
    }

    #[inline]
    fn g(&self, i: usize, one_minus_s: f64) -> f64 {
        let us = &self.u[i * self.stride..(i + 1) * self.stride];
        let mut mx = 0.0f64;
        for &v in us {
            mx = mx.max(one_minus_s * v);
        }
        let mut sum = (-mx).exp();
        for &v in us {
            sum += (one_minus_s * v - mx).exp();
        }
        mx + sum.ln() - self.ln_m
    }

    fn moments(&self, s: f64) -> Moments {
        let oms = 1.0 - s;
        let rho = s / oms;
        let n = self.len();
        let mut g = Vec::with_capacity(n);
        let mut max_a = f64::NEG_INFINITY;
        let mut max_b = f64::NEG_INFINITY;
        let mut arg_b = 0;
        for i in 0..n {
            let gi = self.g(i, oms);
            g.push(gi);
            max_a = max_a.max(self.ln_w[i] + gi / oms);
            let b = self.ln_w[i] + rho * gi;
            if b > max_b {
                max_b = b;
                arg_b = i;
            }
        }
        let shift = g[arg_b];
        let (mut sa, mut sb, mut s1, mut s2) = (0.0, 0.0, 0.0, 0.0);
        for (&gi, &lw) in g.iter().zip(&self.ln_w) {
            sa += (lw + gi / oms - max_a).exp();
            let wb = (lw + rho * gi - max_b).exp();
            sb += wb;
            let d = gi - shift;
            s1 += wb * d;
            s2 += wb * d * d;
        }
        let mean_d = s1 / sb;
        Moments { ln_theta: max_a + sa.ln(), mean_g: shift + mean_d, var_g: (s2 / sb - mean_d * mean_d).max(0.0) }
    }

    /// −E_{p0}[g at s = 0], the mutual information of the reduced model.
    fn mutual_information(&self) -> f64 {
        let mut acc = 0.0;
        let mut wsum = 0.0;
        for i in 0..self.len() {
            let w = self.ln_w[i].exp();
            acc += w * self.g(i, 1.0);
            wsum += w;
        }
        -acc / wsum
    }

    fn fixed_tilt(&self, s0: f64, s: f64) -> f64 {
        let m0 = self.moments(s0);
        let oms0 = 1.0 - s0;
        let mut acc = LnSum::new();
        for i in 0..self.len() {
            let d = self.g(i, oms0) / oms0 - m0.ln_theta;
            acc.push(self.ln_w[i] + s * d);
        }
        acc.value()
    }

    fn fixed_tilt_increment(&self, s0: f64, ds: f64) -> f64 {
        let m0 = self.moments(s0);
        let oms0 = 1.0 - s0;
        let d: Vec<f64> = (0..self.len()).map(|i| self.g(i, oms0) / oms0 - m0.ln_theta).collect();
        let lq: Vec<f64> = (0..self.len()).map(|i| self.ln_w[i] + s0 * d[i]).collect();
        let mx = lq.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..self.len() {
            let q = (lq[i] - mx).exp();
            num += q * (ds * d[i]).exp_m1();
            den += q;
        }
        (num / den).ln_1p()
    }
}

pub fn constellation(m: usize) -> Vec<(f64, f64)> {
    (0..m)
        .map(|k| {
            let th = (2 * k + 1) as f64 * PI / m as f64;
            (th.cos(), th.sin())
        })
        .collect()
}

/// M-PSK with unit-energy symbols over real AWGN of standard deviation σ per dimension.
#[derive(Clone, Debug)]
pub struct MPskAwgnChannel {
    m: usize,
    sigma: f64,
    quad: PskQuadrature,
    grid: Arc<MomentGrid>,
    /// BPSK and QPSK reduce to products of antipodal components.
    components: f64,
}

impl MPskAwgnChannel {
    pub fn new(m: usize, sigma: f64) -> Result<Self> {
        Self::with_quadrature(m, sigma, PskQuadrature::default())
    }

    pub fn with_quadrature(m: usize, sigma: f64, quad: PskQuadrature) -> Result<Self> {
        if m < 2 || !m.is_power_of_two() {
            return Err(Error::Domain(format!("modulation order must be a power of two ≥ 2, got {m}")));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::Domain(format!("sigma must be positive, got {sigma}")));
        }
        if !(quad.truncation_sigmas >= 8.0) || quad.order < 2 || !(quad.panel_sigmas > 0.0) {
            return Err(Error::Usage("invalid M-PSK quadrature layout".into()));
        }
        let (grid, components) = match m {
            2 => (MomentGrid::antipodal(1.0, sigma, &quad), 1.0),
            4 => (MomentGrid::antipodal(std::f64::consts::FRAC_1_SQRT_2, sigma, &quad), 2.0),
            _ => (MomentGrid::polar(m, sigma, &quad), 1.0),
        };
        Ok(MPskAwgnChannel { m, sigma, quad, grid: Arc::new(grid), components })
    }

    /// Polar-grid evaluation for any M, bypassing the product reduction.
    pub fn polar_reference(m: usize, sigma: f64, quad: PskQuadrature) -> Result<Self> {
        let mut ch = Self::with_quadrature(m, sigma, quad)?;
        ch.grid = Arc::new(MomentGrid::polar(m, sigma, &quad));
        ch.components = 1.0;
        Ok(ch)
    }

    /// Channel at a given Eb/N0 (dB) for a code carrying `rate_bits` information bits per symbol.
    pub fn from_ebn0_db(m: usize, ebn0_db: f64, rate_bits: f64) -> Result<Self> {
        Self::with_quadrature(m, sigma_from_ebn0_db(ebn0_db, rate_bits)?, PskQuadrature::default())
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn esn0(&self) -> f64 {
        1.0 / (2.0 * self.sigma * self.sigma)
    }

    /// Real signal-space dimensions per channel use.
    pub fn dims_per_symbol(&self) -> usize {
        if self.m == 2 {
            1
        } else {
            2
        }
    }

    fn ln_theta(&self, s: f64) -> f64 {
        self.components * self.grid.moments(s).ln_theta
    }

    pub fn ln_tilting_density(&self, s: f64, y: (f64, f64)) -> Result<f64> {
        self.tilting_density(s)?.ln_density(y)
    }

    /// f_s with its normalizer evaluated once, for repeated point queries.
    pub fn tilting_density(&self, s: f64) -> Result<TiltingDensity> {
        let s = check_s(s)?;
        Ok(TiltingDensity { s, sigma: self.sigma, points: constellation(self.m), ln_theta: self.ln_theta(s) })
    }

    /// E₀ for one antipodal component, by adaptive quadrature independent of the moment grid.
    fn e0_antipodal(&self, amp: f64, rho: f64) -> Result<f64> {
        let s2 = self.sigma * self.sigma;
        let a = 1.0 / (1.0 + rho);
        let ln_norm = -0.5 * (2.0 * PI * s2).ln();
        let f = |t: f64| {
            let l0 = ln_norm - (t - amp) * (t - amp) / (2.0 * s2);
            let l1 = ln_norm - (t + amp) * (t + amp) / (2.0 * s2);
            (1.0 + rho) * (ln_add(a * l0, a * l1) - LN_2)
        };
        let half = amp + self.quad.truncation_sigmas * self.sigma;
        let spec = QuadratureSpec { rel_tol: self.quad.rel_tol, ..QuadratureSpec::default() };
        let panels = ((2.0 * half) / self.sigma).ceil() as usize;
        Ok(-integrate_ln_panels(f, -half, half, &spec, panels.max(4))?)
    }
}

/// The tilting density f_s of an M-PSK channel at a fixed s.
#[derive(Clone, Debug)]
pub struct TiltingDensity {
    s: f64,
    sigma: f64,
    points: Vec<(f64, f64)>,
    ln_theta: f64,
}

impl TiltingDensity {
    pub fn ln_density(&self, y: (f64, f64)) -> Result<f64> {
        if !y.0.is_finite() || !y.1.is_finite() {
            return Err(Error::Usage("output point must be finite".into()));
        }
        let s2 = self.sigma * self.sigma;
        let x0 = self.points[0];
        let mut acc = LnSum::new();
        for &xk in &self.points {
            acc.push((1.0 - self.s) * (y.0 * (xk.0 - x0.0) + y.1 * (xk.1 - x0.1)) / s2);
        }
        let g = acc.value() - (self.points.len() as f64).ln();
        let ln_p0 = -((y.0 - x0.0).powi(2) + (y.1 - x0.1).powi(2)) / (2.0 * s2) - (2.0 * PI * s2).ln();
        Ok(ln_p0 + g / (1.0 - self.s) - self.ln_theta)
    }
}

/// σ from Eb/N0 in dB: Es/N0 = R_b·Eb/N0 = 1/(2σ²).
pub fn sigma_from_ebn0_db(ebn0_db: f64, rate_bits: f64) -> Result<f64> {
    if !(rate_bits > 0.0) || !ebn0_db.is_finite() {
        return Err(Error::Domain(format!("invalid operating point Eb/N0={ebn0_db} dB, rate {rate_bits} bits")));
    }
    let esn0 = rate_bits * 10f64.powf(ebn0_db / 10.0);
    Ok((1.0 / (2.0 * esn0)).sqrt())
}

impl SymmetricChannel for MPskAwgnChannel {
    fn input_size(&self) -> usize {
        self.m
    }

    fn mu0_triplet(&self, s: f64) -> Result<TiltingEvaluation> {
        let s = check_s(s)?;
        let mo = self.grid.moments(s);
        let c = self.components;
        let oms = 1.0 - s;
        Ok(TiltingEvaluation {
            s,
            mu0: c * oms * mo.ln_theta,
            mu0_prime: c * (mo.mean_g / oms - mo.ln_theta),
            mu0_double_prime: c * mo.var_g / (oms * oms),
        })
    }

    fn e0(&self, rho: f64) -> Result<f64> {
        check_rho(rho)?;
        if rho == 0.0 {
            return Ok(0.0);
        }
        match self.m {
            2 => self.e0_antipodal(1.0, rho),
            4 if self.components == 2.0 => Ok(2.0 * self.e0_antipodal(std::f64::consts::FRAC_1_SQRT_2, rho)?),
            _ => {
                // −ln E_{p0}[(1/M Σ_k (p_k/p_0)^{1/(1+ρ)})^{1+ρ}]
                let s = rho / (1.0 + rho);
                Ok(-self.ln_theta(s))
            }
        }
    }

    fn capacity(&self) -> Result<f64> {
        Ok(self.components * self.grid.mutual_information())
    }

    fn vf_moments(&self, rho: f64) -> Result<(f64, f64)> {
        check_rho(rho)?;
        // ln(β/P(y|x₀)) = ρ·g(y) up to the normalization, and β ∝ p₀·e^{ρg}.
        let s = rho / (1.0 + rho);
        let mo = self.grid.moments(s);
        let c = self.components;
        Ok((c * rho * mo.mean_g, c * rho * rho * mo.var_g))
    }

    fn vf_terms(&self, rho: f64) -> Result<(f64, f64, f64)> {
        check_rho(rho)?;
        let s = rho / (1.0 + rho);
        let mo = self.grid.moments(s);
        let c = self.components;
        Ok((c * rho * mo.mean_g, c * rho * rho * mo.var_g, -c * mo.ln_theta))
    }

    fn mu0_fixed_tilt(&self, s0: f64, s: f64) -> Result<f64> {
        let s0 = check_s(s0)?;
        Ok(self.components * self.grid.fixed_tilt(s0, s))
    }

    fn mu0_fixed_tilt_increment(&self, s0: f64, ds: f64) -> Result<f64> {
        let s0 = check_s(s0)?;
        Ok(self.components * self.grid.fixed_tilt_increment(s0, ds))
    }

    fn min_transition(&self) -> Option<f64> {
        None
    }

    fn is_euclidean(&self) -> bool {
        true
    }

    fn describe(&self) -> String {
        format!("{}-PSK/AWGN(sigma={})", self.m, self.sigma)
    }
}

/// A channel chosen at run time.
#[derive(Clone, Debug)]
pub enum Channel {
    MPsk(MPskAwgnChannel),
    Bec(BecChannel),
}

impl Channel {
    fn inner(&self) -> &dyn SymmetricChannel {
        match self {
            Channel::MPsk(c) => c,
            Channel::Bec(c) => c,
        }
    }
}

impl SymmetricChannel for Channel {
    fn input_size(&self) -> usize {
        self.inner().input_size()
    }
    fn mu0_triplet(&self, s: f64) -> Result<TiltingEvaluation> {
        self.inner().mu0_triplet(s)
    }
    fn e0(&self, rho: f64) -> Result<f64> {
        self.inner().e0(rho)
    }
    fn capacity(&self) -> Result<f64> {
        self.inner().capacity()
    }
    fn vf_moments(&self, rho: f64) -> Result<(f64, f64)> {
        self.inner().vf_moments(rho)
    }
    fn vf_terms(&self, rho: f64) -> Result<(f64, f64, f64)> {
        self.inner().vf_terms(rho)
    }
    fn mu0_fixed_tilt(&self, s0: f64, s: f64) -> Result<f64> {
        self.inner().mu0_fixed_tilt(s0, s)
    }
    fn mu0_fixed_tilt_increment(&self, s0: f64, ds: f64) -> Result<f64> {
        self.inner().mu0_fixed_tilt_increment(s0, ds)
    }
    fn min_transition(&self) -> Option<f64> {
        self.inner().min_transition()
    }
    fn is_euclidean(&self) -> bool {
        self.inner().is_euclidean()
    }
    fn describe(&self) -> String {
        self.inner().describe()
    }
}

/// Family of channels indexed by an operating point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChannelFamily {
    MPsk { m: usize },
    Bec,
}

impl ChannelFamily {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "bpsk-awgn" => Ok(ChannelFamily::MPsk { m: 2 }),
            "qpsk-awgn" => Ok(ChannelFamily::MPsk { m: 4 }),
            "8psk-awgn" => Ok(ChannelFamily::MPsk { m: 8 }),
            "bec" => Ok(ChannelFamily::Bec),
            other => match other.strip_prefix("mpsk-awgn:") {
                Some(m) => {
                    let m: usize = m.parse().map_err(|_| Error::Usage(format!("bad modulation order in '{other}'")))?;
                    if m < 2 || !m.is_power_of_two() {
                        return Err(Error::Usage(format!("modulation order must be a power of two ≥ 2, got {m}")));
                    }
                    Ok(ChannelFamily::MPsk { m })
                }
                None => Err(Error::Usage(format!(
                    "unknown channel '{other}' (expected bpsk-awgn, qpsk-awgn, 8psk-awgn, mpsk-awgn:m, bec)"
                ))),
            },
        }
    }

    pub fn name(&self) -> String {
        match self {
            ChannelFamily::MPsk { m: 2 } => "bpsk-awgn".into(),
            ChannelFamily::MPsk { m: 4 } => "qpsk-awgn".into(),
            ChannelFamily::MPsk { m: 8 } => "8psk-awgn".into(),
            ChannelFamily::MPsk { m } => format!("mpsk-awgn:{m}"),
            ChannelFamily::Bec => "bec".into(),
        }
    }

    pub fn input_size(&self) -> usize {
        match self {
            ChannelFamily::MPsk { m } => *m,
            ChannelFamily::Bec => 2,
        }
    }

    pub fn is_awgn(&self) -> bool {
        matches!(self, ChannelFamily::MPsk { .. })
    }

    /// Instantiate at an operating point: Eb/N0 in dB for AWGN, erasure probability for the BEC.
    /// `rate_nats` is the code rate per channel use, used to map Eb/N0 to σ.
    pub fn at(&self, point: f64, rate_nats: f64, quad: &QuadratureSpec) -> Result<Channel> {
        match self {
            ChannelFamily::MPsk { m } => {
                let sigma = sigma_from_ebn0_db(point, rate_nats / LN_2)?;
                Ok(Channel::MPsk(MPskAwgnChannel::with_quadrature(*m, sigma, PskQuadrature::from_spec(quad))?))
            }
            ChannelFamily::Bec => Ok(Channel::Bec(BecChannel::new(point)?)),
        }
    }
}
