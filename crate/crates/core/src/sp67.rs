//! Lower bounds of the 1967 sphere-packing lineage for symmetric memoryless channels:
//! the improved sphere-packing bound (ISP), the Valembois–Fossorier refinement (VF),
//! the classical bound with its explicit O(ln N / N) terms, and the exponent E_sp.
//!
//! ISP and VF share one evaluation engine. For a free parameter x > √2/2 the tilting
//! parameter s is the root of a residual built from the μ₀ triplet; the exponent is
//! then minimized over x, since every x yields a valid bound.

use std::f64::consts::{FRAC_1_SQRT_2, LN_2};

use crate::channels::SymmetricChannel;
use crate::error::{Error, Result};
use crate::numerics::{find_root, golden_section, ln_binomial, maximize_scalar, scan_grid, Bracket};

const LN_4: f64 = 2.0 * LN_2;
const LN_8: f64 = 3.0 * LN_2;

/// Block length, rate and list size of a code. The rate is R = ln(M/L)/N in nats.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CodeParams {
    pub n: u64,
    pub rate_nats: f64,
    pub list_size: u64,
}

impl CodeParams {
    pub fn new(n: u64, rate_nats: f64) -> Result<Self> {
        let c = CodeParams { n, rate_nats, list_size: 1 };
        c.validate()?;
        Ok(c)
    }

    pub fn from_bits(n: u64, rate_bits: f64) -> Result<Self> {
        CodeParams::new(n, rate_bits * LN_2)
    }

    /// A code of ln M nats of messages decoded to lists of size L.
    pub fn from_ln_codebook(n: u64, ln_m: f64, list_size: u64) -> Result<Self> {
        if list_size == 0 {
            return Err(Error::Usage("list size must be at least 1".into()));
        }
        let c = CodeParams { n, rate_nats: (ln_m - (list_size as f64).ln()) / n.max(1) as f64, list_size };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Usage("block length must be at least 1".into()));
        }
        if self.list_size == 0 {
            return Err(Error::Usage("list size must be at least 1".into()));
        }
        if !(self.rate_nats > 0.0) || !self.rate_nats.is_finite() {
            return Err(Error::Usage(format!("rate must be positive and finite, got {}", self.rate_nats)));
        }
        Ok(())
    }

    fn nf(&self) -> f64 {
        self.n as f64
    }
}

/// A bound either exists or degenerates to P_e ≥ 0.
#[derive(Clone, Debug, PartialEq)]
pub enum BoundOutcome<T> {
    Bound(T),
    Trivial,
}

impl<T> BoundOutcome<T> {
    pub fn bound(&self) -> Option<&T> {
        match self {
            BoundOutcome::Bound(b) => Some(b),
            BoundOutcome::Trivial => None,
        }
    }

    pub fn is_trivial(&self) -> bool {
        matches!(self, BoundOutcome::Trivial)
    }
}

pub trait LnPe {
    fn ln_pe_lower(&self) -> f64;
}

impl<T: LnPe> BoundOutcome<T> {
    /// ln of the bound, with the trivial outcome mapped to ln 0 = −∞.
    pub fn ln_pe(&self) -> f64 {
        self.bound().map_or(f64::NEG_INFINITY, LnPe::ln_pe_lower)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IspResult {
    pub ln_pe_lower: f64,
    pub x_opt: f64,
    pub s_opt: f64,
    pub rho_opt: f64,
    pub exponent: f64,
    pub o1: f64,
    pub o2: f64,
    /// The optimum sits at the upper end of the x search domain.
    pub x_capped: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VfResult {
    pub ln_pe_lower: f64,
    pub x_opt: f64,
    pub rho_opt: f64,
    pub exponent: f64,
    pub composition_penalty: f64,
    pub x_capped: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sp67Result {
    pub ln_pe_lower: f64,
    pub p_min: f64,
    pub rho_opt: f64,
}

impl LnPe for IspResult {
    fn ln_pe_lower(&self) -> f64 {
        self.ln_pe_lower
    }
}
impl LnPe for VfResult {
    fn ln_pe_lower(&self) -> f64 {
        self.ln_pe_lower
    }
}
impl LnPe for Sp67Result {
    fn ln_pe_lower(&self) -> f64 {
        self.ln_pe_lower
    }
}

/// Constant in O₁ of the VF bound.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum VfConstant {
    /// ln 8 / N.
    #[default]
    Corrected,
    /// ln 4 / N as originally published.
    Original,
}

/// Search grids for the s-root and the x optimization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchOptions {
    pub s_scan: usize,
    pub x_grid: usize,
    pub x_max: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { s_scan: 512, x_grid: 200, x_max: 1e3 }
    }
}

pub const X_MIN: f64 = FRAC_1_SQRT_2 + 1e-6;

/// Per-s coefficients. The residual at x is a + b·x/√N − (R − O₁(x)) and the
/// exponent is e0 − ρ(R − O₁) + c·x/√N + (c₂ − ln(2 − 1/x²))/N.
#[derive(Clone, Copy, Debug)]
struct Profile {
    a: f64,
    b: f64,
    c: f64,
    e0: f64,
}

impl Profile {
    fn lerp(&self, o: &Profile, t: f64) -> Profile {
        let l = |u: f64, v: f64| u + t * (v - u);
        Profile { a: l(self.a, o.a), b: l(self.b, o.b), c: l(self.c, o.c), e0: l(self.e0, o.e0) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Kind {
    Isp,
    Vf,
}

#[derive(Clone, Copy, Debug)]
struct Candidate {
    x: f64,
    s: f64,
    exponent: f64,
    o1: f64,
    o2: f64,
}

struct Engine<'a, C: ?Sized> {
    channel: &'a C,
    kind: Kind,
    n: f64,
    rate: f64,
    c1: f64,
    c2: f64,
    s: Vec<f64>,
    prof: Vec<Profile>,
}

impl<'a, C: SymmetricChannel + ?Sized> Engine<'a, C> {
    fn new(channel: &'a C, kind: Kind, code: &CodeParams, c1: f64, c2: f64, opts: &SearchOptions) -> Result<Self> {
        code.validate()?;
        if opts.s_scan < 2 || opts.x_grid < 2 || !(opts.x_max > X_MIN) {
            return Err(Error::Usage("search grids need at least two points and x_max > √2/2".into()));
        }
        let mut e = Engine { channel, kind, n: code.nf(), rate: code.rate_nats, c1, c2, s: vec![], prof: vec![] };
        e.s = scan_grid(1e-6, 1.0 - 1e-6, opts.s_scan);
        e.prof = e.s.iter().map(|&s| e.profile(s)).collect::<Result<_>>()?;
        Ok(e)
    }

    fn profile(&self, s: f64) -> Result<Profile> {
        let oms = 1.0 - s;
        match self.kind {
            Kind::Isp => {
                let t = self.channel.mu0_triplet(s)?;
                let v = t.mu0_double_prime.max(0.0);
                Ok(Profile {
                    a: -t.mu0 - oms * t.mu0_prime,
                    b: oms * (2.0 * v).sqrt(),
                    c: s * (8.0 * v).sqrt(),
                    e0: -t.mu0 / oms,
                })
            }
            Kind::Vf => {
                let rho = s / oms;
                let (nu1, nu2, e0) = self.channel.vf_terms(rho)?;
                let nu2 = nu2.max(0.0);
                Ok(Profile { a: -nu1 / rho, b: (2.0 * nu2).sqrt() / rho, c: (8.0 * nu2).sqrt(), e0 })
            }
        }
    }

    fn ln_corr(x: f64) -> f64 {
        (2.0 - 1.0 / (x * x)).ln()
    }

    fn o1(&self, x: f64) -> f64 {
        (self.c1 - Self::ln_corr(x)) / self.n
    }

    fn residual(&self, p: &Profile, x: f64) -> f64 {
        p.a + p.b * x / self.n.sqrt() - (self.rate - self.o1(x))
    }

    fn candidate(&self, p: &Profile, s: f64, x: f64) -> Candidate {
        let o1 = self.o1(x);
        let o2 = p.c * x / self.n.sqrt() + (self.c2 - Self::ln_corr(x)) / self.n;
        let rho = s / (1.0 - s);
        Candidate { x, s, exponent: p.e0 - rho * (self.rate - o1) + o2, o1, o2 }
    }

    fn sign_changes(&self, x: f64) -> Vec<(usize, f64, f64)> {
        let r: Vec<f64> = self.prof.iter().map(|p| self.residual(p, x)).collect();
        (0..r.len() - 1)
            .filter(|&i| r[i].is_finite() && r[i + 1].is_finite() && (r[i] > 0.0) != (r[i + 1] > 0.0))
            .map(|i| (i, r[i], r[i + 1]))
            .collect()
    }

    fn best(cands: impl Iterator<Item = Candidate>) -> Option<Candidate> {
        cands.filter(|c| c.exponent.is_finite()).min_by(|a, b| a.exponent.total_cmp(&b.exponent))
    }

    /// Roots located by linear interpolation inside the scan cell.
    fn approx(&self, x: f64) -> Option<Candidate> {
        Self::best(self.sign_changes(x).into_iter().map(|(i, r0, r1)| {
            let t = r0 / (r0 - r1);
            let s = self.s[i] + t * (self.s[i + 1] - self.s[i]);
            self.candidate(&self.prof[i].lerp(&self.prof[i + 1], t), s, x)
        }))
    }

    fn exact(&self, x: f64) -> Result<Option<Candidate>> {
        let mut out = Vec::new();
        for (i, r0, r1) in self.sign_changes(x) {
            let br = Bracket::new(self.s[i], self.s[i + 1], r0, r1)?;
            let mut err = None;
            let s = find_root(
                |s| match self.profile(s) {
                    Ok(p) => self.residual(&p, x),
                    Err(e) => {
                        err.get_or_insert(e);
                        f64::NAN
                    }
                },
                &br,
                1e-14,
            );
            if let Some(e) = err {
                return Err(e);
            }
            let s = s?;
            out.push(self.candidate(&self.profile(s)?, s, x));
        }
        Ok(Self::best(out.into_iter()))
    }

    fn optimize(&self, opts: &SearchOptions) -> Result<Option<(Candidate, bool)>> {
        let xs: Vec<f64> =
            scan_grid(1e-6, opts.x_max - FRAC_1_SQRT_2, opts.x_grid).into_iter().map(|d| FRAC_1_SQRT_2 + d).collect();
        let coarse: Vec<Option<Candidate>> = xs.iter().map(|&x| self.approx(x)).collect();
        let Some(k) = (0..xs.len())
            .filter(|&i| coarse[i].is_some())
            .min_by(|&i, &j| coarse[i].unwrap().exponent.total_cmp(&coarse[j].unwrap().exponent))
        else {
            return Ok(None);
        };
        let lo = xs[k.saturating_sub(2)];
        let hi = xs[(k + 2).min(xs.len() - 1)];
        let mut best = self.exact(xs[k])?;
        let mut err = None;
        let mut f = |x: f64| match self.exact(x) {
            Ok(Some(c)) => -c.exponent,
            Ok(None) => f64::NEG_INFINITY,
            Err(e) => {
                err.get_or_insert(e);
                f64::NEG_INFINITY
            }
        };
        let (xg, _) = golden_section(&mut f, lo, hi, 1e-9);
        if let Some(e) = err {
            return Err(e);
        }
        if let Some(c) = self.exact(xg)? {
            if best.is_none_or(|b| c.exponent < b.exponent) {
                best = Some(c);
            }
        }
        let capped = k + 1 == xs.len();
        Ok(best.map(|c| (c, capped)))
    }
}

fn clamp_exponent(e: f64) -> f64 {
    // a lower bound above 1 carries no information; report P_e ≥ 1 rather than more
    e.max(0.0)
}

pub fn isp_bound<C: SymmetricChannel + ?Sized>(channel: &C, code: &CodeParams) -> Result<BoundOutcome<IspResult>> {
    isp_bound_with(channel, code, &SearchOptions::default())
}

pub fn isp_bound_with<C: SymmetricChannel + ?Sized>(
    channel: &C,
    code: &CodeParams,
    opts: &SearchOptions,
) -> Result<BoundOutcome<IspResult>> {
    let engine = Engine::new(channel, Kind::Isp, code, LN_4, LN_4, opts)?;
    Ok(match engine.optimize(opts)? {
        None => BoundOutcome::Trivial,
        Some((c, x_capped)) => {
            let exponent = clamp_exponent(c.exponent);
            BoundOutcome::Bound(IspResult {
                ln_pe_lower: -code.nf() * exponent,
                x_opt: c.x,
                s_opt: c.s,
                rho_opt: c.s / (1.0 - c.s),
                exponent,
                o1: c.o1,
                o2: c.o2,
                x_capped,
            })
        }
    })
}

/// ISP exponent at each given x (`None` where the s-equation has no root), without optimizing.
pub fn isp_exponent_curve<C: SymmetricChannel + ?Sized>(
    channel: &C,
    code: &CodeParams,
    xs: &[f64],
) -> Result<Vec<Option<f64>>> {
    let opts = SearchOptions::default();
    let engine = Engine::new(channel, Kind::Isp, code, LN_4, LN_4, &opts)?;
    xs.iter()
        .map(|&x| {
            if !(x > FRAC_1_SQRT_2) {
                return Err(Error::Domain(format!("x must exceed √2/2, got {x}")));
            }
            Ok(engine.exact(x)?.map(|c| c.exponent))
        })
        .collect()
}

/// ln C(N+K−1, K−1) / N, the penalty for passing from fixed-composition codes to arbitrary codes.
pub fn composition_penalty(n: u64, k: usize) -> f64 {
    ln_binomial(n + k as u64 - 1, k as u64 - 1) / n as f64
}

pub fn vf_bound<C: SymmetricChannel + ?Sized>(
    channel: &C,
    code: &CodeParams,
    k: usize,
    constant: VfConstant,
) -> Result<BoundOutcome<VfResult>> {
    vf_bound_with(channel, code, k, constant, &SearchOptions::default())
}

pub fn vf_bound_with<C: SymmetricChannel + ?Sized>(
    channel: &C,
    code: &CodeParams,
    k: usize,
    constant: VfConstant,
    opts: &SearchOptions,
) -> Result<BoundOutcome<VfResult>> {
    if k < 2 {
        return Err(Error::Usage(format!("input alphabet size must be at least 2, got {k}")));
    }
    if k != channel.input_size() {
        return Err(Error::Usage(format!(
            "input alphabet size {k} does not match the channel ({})",
            channel.input_size()
        )));
    }
    code.validate()?;
    let penalty = composition_penalty(code.n, k);
    let base = match constant {
        VfConstant::Corrected => LN_8,
        VfConstant::Original => LN_4,
    };
    let engine = Engine::new(channel, Kind::Vf, code, base + code.nf() * penalty, LN_8, opts)?;
    Ok(match engine.optimize(opts)? {
        None => BoundOutcome::Trivial,
        Some((c, x_capped)) => {
            let exponent = clamp_exponent(c.exponent);
            BoundOutcome::Bound(VfResult {
                ln_pe_lower: -code.nf() * exponent,
                x_opt: c.x,
                rho_opt: c.s / (1.0 - c.s),
                exponent,
                composition_penalty: penalty,
                x_capped,
            })
        }
    })
}

/// O₁ of the classical bound: ln 8/N + K ln N/N.
pub fn sp67_o1(n: u64, k: usize) -> f64 {
    let nf = n as f64;
    (LN_8 + k as f64 * nf.ln()) / nf
}

/// O₂ of the classical bound: √(8/N)·ln(e/√P_min) + ln 8/N.
pub fn sp67_o2(n: u64, p_min: f64) -> f64 {
    let nf = n as f64;
    (8.0 / nf).sqrt() * (1.0 - 0.5 * p_min.ln()) + LN_8 / nf
}

pub fn sp67_classic<C: SymmetricChannel + ?Sized>(
    channel: &C,
    code: &CodeParams,
    k: usize,
) -> Result<BoundOutcome<Sp67Result>> {
    code.validate()?;
    let Some(p_min) = channel.min_transition() else {
        return Err(Error::UnsupportedChannel(format!(
            "the classical bound needs a finite output alphabet; {} has continuous output",
            channel.describe()
        )));
    };
    let r = code.rate_nats - sp67_o1(code.n, k);
    if r <= 0.0 {
        return Ok(BoundOutcome::Trivial);
    }
    let (e, rho) = e_sp_argmax(channel, r)?;
    if !e.is_finite() {
        return Ok(BoundOutcome::Trivial);
    }
    let exponent = e + sp67_o2(code.n, p_min);
    Ok(BoundOutcome::Bound(Sp67Result { ln_pe_lower: -code.nf() * exponent, p_min, rho_opt: rho }))
}

/// Sphere-packing exponent sup_{ρ≥0} E₀(ρ) − ρR. Returns +∞ when the supremum diverges.
pub fn e_sp<C: SymmetricChannel + ?Sized>(channel: &C, rate_nats: f64) -> Result<f64> {
    Ok(e_sp_argmax(channel, rate_nats)?.0)
}

/// E_sp together with the maximizing ρ (ρ = ∞ when the supremum diverges).
pub fn e_sp_argmax<C: SymmetricChannel + ?Sized>(channel: &C, rate_nats: f64) -> Result<(f64, f64)> {
    if !(rate_nats > 0.0) {
        return Err(Error::Domain(format!("rate must be positive, got {rate_nats}")));
    }
    if rate_nats >= channel.capacity()? {
        return Ok((0.0, 0.0));
    }
    let mut err = None;
    let mut rho_max: f64 = 1e3;
    loop {
        let u_max = rho_max.ln_1p();
        let f = |u: f64| {
            let rho = u.exp_m1();
            match channel.e0(rho) {
                Ok(e) => e - rho * rate_nats,
                Err(e) => {
                    err.get_or_insert(e);
                    f64::NAN
                }
            }
        };
        let (u, v) = maximize_scalar(f, 0.0, u_max, 1e-12)?;
        if let Some(e) = err.take() {
            return Err(e);
        }
        // concave in ρ, so an interior maximizer is global
        if u < u_max * (1.0 - 1e-3) {
            return Ok((v.max(0.0), u.exp_m1()));
        }
        if rho_max >= 1e12 {
            return Ok((f64::INFINITY, f64::INFINITY));
        }
        rho_max *= 1e3;
    }
}
