//! Reference bounds and inverse problems: Gallager's random-coding upper bound,
//! the capacity limit, crossing points, minimal block lengths and the map of
//! which converse bound is tightest over a grid of rates and block lengths.

use std::f64::consts::LN_2;

use rayon::prelude::*;
use serde::Serialize;

use crate::channels::{ChannelFamily, SymmetricChannel};
use crate::error::{Error, Result};
use crate::numerics::{find_root, golden_section, Bracket, QuadratureSpec};
use crate::sp59::{sp59_bound_with, ConeMode, Sp59Params, Sp59Result};
use crate::sp67::{
    isp_bound, sp67_classic, vf_bound, BoundOutcome, CodeParams, IspResult, Sp67Result, VfConstant, VfResult,
};

pub const N_MAX: u64 = 10_000_000;
/// Crossing points are solved to this many dB (or units of erasure probability).
pub const CROSSING_TOL: f64 = 1e-5;
/// Crossings closer than this count as ties in the dominance map.
pub const TIE_TOL_DB: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    Isp,
    Vf,
    Sp67,
    Sp59,
    Rcb,
    Clb,
}

impl BoundKind {
    pub const ALL: [BoundKind; 6] =
        [BoundKind::Isp, BoundKind::Vf, BoundKind::Sp67, BoundKind::Sp59, BoundKind::Rcb, BoundKind::Clb];

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "isp" => Ok(BoundKind::Isp),
            "vf" => Ok(BoundKind::Vf),
            "sp67" => Ok(BoundKind::Sp67),
            "sp59" => Ok(BoundKind::Sp59),
            "rcb" => Ok(BoundKind::Rcb),
            "clb" => Ok(BoundKind::Clb),
            other => Err(Error::Usage(format!("unknown bound '{other}' (expected isp, vf, sp67, sp59, rcb, clb)"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BoundKind::Isp => "isp",
            BoundKind::Vf => "vf",
            BoundKind::Sp67 => "sp67",
            BoundKind::Sp59 => "sp59",
            BoundKind::Rcb => "rcb",
            BoundKind::Clb => "clb",
        }
    }

    /// Lower bounds exclude block lengths; the random-coding bound certifies them.
    pub fn is_converse(&self) -> bool {
        !matches!(self, BoundKind::Rcb)
    }

    /// Reject combinations that have no meaning before doing any work.
    pub fn check_family(&self, family: ChannelFamily) -> Result<()> {
        match (self, family) {
            (BoundKind::Sp59, ChannelFamily::Bec) => Err(Error::UnsupportedChannel(
                "sp59 needs a Euclidean signal space; the erasure channel has none".into(),
            )),
            (BoundKind::Sp67, ChannelFamily::MPsk { .. }) => {
                Err(Error::UnsupportedChannel("sp67 needs a finite output alphabet; AWGN output is continuous".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalOptions {
    pub quad: QuadratureSpec,
    pub vf_constant: VfConstant,
    pub cone: ConeMode,
    pub list_size: u64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            quad: QuadratureSpec::default(),
            vf_constant: VfConstant::Corrected,
            cone: ConeMode::ExactTheta1,
            list_size: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum BoundDetail {
    Isp(IspResult),
    Vf(VfResult),
    Sp67(Sp67Result),
    Sp59(Sp59Result),
    Rcb {
        exponent: f64,
        rho: f64,
    },
    /// The operating point is beyond the capacity limit at `threshold`.
    Clb {
        threshold: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub enum BoundValue {
    Value { ln_pe: f64, detail: BoundDetail },
    Trivial,
}

impl BoundValue {
    pub fn ln_pe(&self) -> Option<f64> {
        match self {
            BoundValue::Value { ln_pe, .. } => Some(*ln_pe),
            BoundValue::Trivial => None,
        }
    }

    fn from_outcome<T: Clone>(o: BoundOutcome<T>, ln: impl Fn(&T) -> f64, wrap: impl Fn(T) -> BoundDetail) -> Self {
        match o {
            BoundOutcome::Bound(b) => BoundValue::Value { ln_pe: ln(&b), detail: wrap(b) },
            BoundOutcome::Trivial => BoundValue::Trivial,
        }
    }
}

/// max_{0≤ρ≤1} E₀(ρ) − ρR and its maximizer.
pub fn random_coding_exponent<C: SymmetricChannel + ?Sized>(channel: &C, rate_nats: f64) -> Result<(f64, f64)> {
    if !(rate_nats >= 0.0) {
        return Err(Error::Domain(format!("rate must be non-negative, got {rate_nats}")));
    }
    let mut err = None;
    let mut f = |rho: f64| match channel.e0(rho) {
        Ok(e) => e - rho * rate_nats,
        Err(e) => {
            err.get_or_insert(e);
            f64::NAN
        }
    };
    let (mut rho, mut v) = golden_section(&mut f, 0.0, 1.0, 1e-10);
    let v1 = f(1.0);
    if v1 >= v {
        (rho, v) = (1.0, v1);
    }
    if let Some(e) = err {
        return Err(e);
    }
    if v <= 0.0 {
        return Ok((0.0, 0.0));
    }
    Ok((v, rho))
}

/// ln of Gallager's random-coding upper bound. List decoding is bounded by ML
/// decoding of the same M codewords, i.e. at rate R + ln L / N.
pub fn gallager_rcb<C: SymmetricChannel + ?Sized>(channel: &C, code: &CodeParams) -> Result<f64> {
    code.validate()?;
    let r = code.rate_nats + (code.list_size as f64).ln() / code.n as f64;
    let (e, _) = random_coding_exponent(channel, r)?;
    Ok(-(code.n as f64) * e)
}

fn max_rate(family: ChannelFamily) -> f64 {
    match family {
        ChannelFamily::MPsk { m } => (m as f64).ln(),
        ChannelFamily::Bec => LN_2,
    }
}

/// The operating point at which capacity equals the rate: Eb/N0 in dB for AWGN,
/// erasure probability for the BEC.
pub fn capacity_limit(family: ChannelFamily, rate_nats: f64, quad: &QuadratureSpec) -> Result<f64> {
    if !(rate_nats > 0.0) {
        return Err(Error::Domain(format!("rate must be positive, got {rate_nats}")));
    }
    if rate_nats >= max_rate(family) {
        return Err(Error::Infeasible(format!(
            "rate {rate_nats} nats is not below the input entropy {} nats of {}",
            max_rate(family),
            family.name()
        )));
    }
    match family {
        ChannelFamily::Bec => Ok(1.0 - rate_nats / LN_2),
        ChannelFamily::MPsk { .. } => {
            let mut err = None;
            let mut f = |db: f64| match family.at(db, rate_nats, quad).and_then(|c| c.capacity()) {
                Ok(c) => c - rate_nats,
                Err(e) => {
                    err.get_or_insert(e);
                    f64::NAN
                }
            };
            // below −1.6 dB no input achieves any positive rate per unit energy
            let lo = -1.6;
            let mut hi = 2.0;
            while f(hi) < 0.0 {
                hi += 5.0;
                if hi > 80.0 {
                    return Err(Error::numerical("capacity limit beyond 80 dB"));
                }
            }
            let br = Bracket::from_fn(&mut f, lo, hi)?;
            let r = find_root(&mut f, &br, 1e-9);
            if let Some(e) = err {
                return Err(e);
            }
            r
        }
    }
}

/// Evaluate one bound at an operating point (Eb/N0 in dB, or erasure probability)
/// for n channel uses at the given rate in nats per channel use.
pub fn evaluate_bound(
    kind: BoundKind,
    family: ChannelFamily,
    point: f64,
    n: u64,
    rate_nats: f64,
    opts: &EvalOptions,
) -> Result<BoundValue> {
    kind.check_family(family)?;
    let code = CodeParams { n, rate_nats, list_size: opts.list_size };
    code.validate()?;
    if kind == BoundKind::Clb {
        let threshold = capacity_limit(family, rate_nats, &opts.quad)?;
        let beyond = match family {
            ChannelFamily::Bec => point > threshold,
            ChannelFamily::MPsk { .. } => point < threshold,
        };
        return Ok(if beyond {
            BoundValue::Value { ln_pe: 0.0, detail: BoundDetail::Clb { threshold } }
        } else {
            BoundValue::Trivial
        });
    }
    if kind == BoundKind::Sp59 {
        let ChannelFamily::MPsk { m } = family else { unreachable!() };
        let dims = if m == 2 { 1 } else { 2 };
        if n * dims < 2 {
            return Ok(BoundValue::Trivial);
        }
        let rate_bits_dim = rate_nats / LN_2 / dims as f64;
        let params = Sp59Params::from_ebn0_db(n * dims, rate_bits_dim, point)?;
        let r = sp59_bound_with(&params, opts.cone, &opts.quad)?;
        return Ok(BoundValue::Value { ln_pe: r.ln_pe_lower, detail: BoundDetail::Sp59(r) });
    }
    let channel = family.at(point, rate_nats, &opts.quad)?;
    Ok(match kind {
        BoundKind::Isp => BoundValue::from_outcome(isp_bound(&channel, &code)?, |b| b.ln_pe_lower, BoundDetail::Isp),
        BoundKind::Vf => BoundValue::from_outcome(
            vf_bound(&channel, &code, family.input_size(), opts.vf_constant)?,
            |b| b.ln_pe_lower,
            BoundDetail::Vf,
        ),
        BoundKind::Sp67 => BoundValue::from_outcome(
            sp67_classic(&channel, &code, family.input_size())?,
            |b| b.ln_pe_lower,
            BoundDetail::Sp67,
        ),
        BoundKind::Rcb => {
            let r = rate_nats + (opts.list_size as f64).ln() / n as f64;
            let (exponent, rho) = random_coding_exponent(&channel, r)?;
            BoundValue::Value { ln_pe: -(n as f64) * exponent, detail: BoundDetail::Rcb { exponent, rho } }
        }
        BoundKind::Sp59 | BoundKind::Clb => unreachable!(),
    })
}

/// Operating point at which the bound equals `target_ln_pe`: the Eb/N0 (dB) below
/// which a converse bound exceeds the target, or the erasure probability above
/// which it does. For `clb` this is the capacity limit itself.
pub fn crossing_point(
    kind: BoundKind,
    family: ChannelFamily,
    n: u64,
    rate_nats: f64,
    target_ln_pe: f64,
    opts: &EvalOptions,
) -> Result<f64> {
    if !(target_ln_pe < 0.0) {
        return Err(Error::Usage(format!("target ln P_e must be negative, got {target_ln_pe}")));
    }
    kind.check_family(family)?;
    let clb = capacity_limit(family, rate_nats, &opts.quad)?;
    if kind == BoundKind::Clb {
        return Ok(clb);
    }
    // positive where the bound exceeds the target; trivial outcomes count as far below it
    let floor = target_ln_pe - 1e6;
    let gap = |pt: f64| -> Result<f64> {
        let v = evaluate_bound(kind, family, pt, n, rate_nats, opts)?.ln_pe().unwrap_or(floor).max(floor);
        Ok(match family {
            ChannelFamily::MPsk { .. } => v - target_ln_pe,
            ChannelFamily::Bec => target_ln_pe - v,
        })
    };
    let (lo, hi) = match family {
        ChannelFamily::MPsk { .. } => {
            let mut lo = clb;
            while !(gap(lo)? > 0.0) {
                lo -= 2.0;
                if lo < clb - 30.0 {
                    return Err(Error::Infeasible(format!("{} stays below the target at every SNR", kind.name())));
                }
            }
            let mut step = 1.0;
            let mut hi = clb + step;
            while gap(hi)? > 0.0 {
                step *= 2.0;
                hi = clb + step;
                if step > 64.0 {
                    return Err(Error::Infeasible(format!("{} does not reach the target below {hi} dB", kind.name())));
                }
            }
            (lo, hi)
        }
        ChannelFamily::Bec => {
            // the gap is decreasing in p here
            let mut hi = clb;
            while !(gap(hi)? < 0.0) {
                hi = 0.5 * (hi + 1.0);
                if hi > 1.0 - 1e-12 {
                    return Err(Error::Infeasible(format!("{} stays below the target at every p", kind.name())));
                }
            }
            let lo = 1e-12;
            if !(gap(lo)? > 0.0) {
                return Err(Error::Infeasible(format!("{} exceeds the target even at p = {lo}", kind.name())));
            }
            (lo, hi)
        }
    };
    let mut err = None;
    let mut f = |pt: f64| match gap(pt) {
        Ok(v) => v,
        Err(e) => {
            err.get_or_insert(e);
            f64::NAN
        }
    };
    let br = Bracket::from_fn(&mut f, lo, hi)?;
    let x = find_root(&mut f, &br, CROSSING_TOL);
    if let Some(e) = err {
        return Err(e);
    }
    x
}

#[derive(Clone, Debug, PartialEq)]
pub struct MinLenQuery {
    pub bound: BoundKind,
    pub family: ChannelFamily,
    pub rate_nats: f64,
    pub target_ln_pe: f64,
    /// Eb/N0 in dB for AWGN, erasure probability for the BEC.
    pub point: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MinLenResult {
    pub n: u64,
    /// Largest block length the bound rules out (0 if none).
    pub largest_excluded: u64,
    pub evaluations: usize,
    /// The bound was not monotone in N around the threshold and a linear scan was used.
    pub linear_scan: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Verdict {
    Excluded,
    Allowed,
    Vacuous,
}

/// Smallest block length not ruled out by a converse bound (or, for `rcb`, the
/// smallest block length at which random codes provably meet the target).
pub fn min_blocklength(q: &MinLenQuery, opts: &EvalOptions) -> Result<MinLenResult> {
    if q.bound == BoundKind::Clb {
        return Err(Error::Usage("clb has no block length; choose isp, vf, sp67, sp59 or rcb".into()));
    }
    if !(q.target_ln_pe < 0.0) {
        return Err(Error::Usage(format!("target ln P_e must be negative, got {}", q.target_ln_pe)));
    }
    q.bound.check_family(q.family)?;
    if !(q.rate_nats > 0.0) {
        return Err(Error::Usage(format!("rate must be positive, got {}", q.rate_nats)));
    }
    let clb = capacity_limit(q.family, q.rate_nats, &opts.quad)?;
    let beyond = match q.family {
        ChannelFamily::MPsk { .. } => q.point <= clb,
        ChannelFamily::Bec => q.point >= clb,
    };
    if beyond {
        return Err(Error::Infeasible(format!(
            "operating point {} is at or beyond the capacity limit {clb:.6}; no block length reaches the target",
            q.point
        )));
    }
    let mut evaluations = 0;
    let mut verdict = |n: u64| -> Result<Verdict> {
        evaluations += 1;
        let v = match evaluate_bound(q.bound, q.family, q.point, n, q.rate_nats, opts) {
            Ok(v) => v,
            // the bound does not apply at this length (e.g. e^{−NR} ≥ 1/2); it excludes nothing
            Err(Error::RateTooLow(_)) => return Ok(Verdict::Vacuous),
            Err(e) => return Err(e),
        };
        Ok(match v.ln_pe() {
            None => Verdict::Vacuous,
            Some(ln) if ln > q.target_ln_pe => Verdict::Excluded,
            Some(_) => Verdict::Allowed,
        })
    };
    let excluded = |v: Verdict| v == Verdict::Excluded;
    // doubling until the bound first permits the target
    let mut last_excluded = 0u64;
    let mut n = 1u64;
    loop {
        match verdict(n)? {
            Verdict::Excluded => last_excluded = n,
            Verdict::Allowed => break,
            Verdict::Vacuous => {}
        }
        if n >= N_MAX {
            return Err(Error::Infeasible(format!(
                "{} still excludes the target at N = {N_MAX} (largest excluded N = {last_excluded})",
                q.bound.name()
            )));
        }
        n = (2 * n).min(N_MAX);
    }
    if last_excluded == 0 {
        return Ok(MinLenResult { n: 1, largest_excluded: 0, evaluations, linear_scan: false });
    }
    // bisection for the last excluded length in [last_excluded, n)
    let (mut lo, mut hi) = (last_excluded, n);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if excluded(verdict(mid)?) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // verification: lo must be excluded and lo+1, lo+2 not
    let mut linear_scan = false;
    let ok = !excluded(verdict(lo + 1)?) && (lo + 2 > n || !excluded(verdict(lo + 2)?));
    if !ok {
        linear_scan = true;
        let span = n - last_excluded;
        if span > 100_000 {
            return Err(Error::numerical(format!(
                "bound is not monotone in N near {lo} and the bracket is too wide for a linear scan"
            )));
        }
        lo = last_excluded;
        for m in last_excluded + 1..n {
            if excluded(verdict(m)?) {
                lo = m;
            }
        }
    }
    Ok(MinLenResult { n: lo + 1, largest_excluded: lo, evaluations, linear_scan })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Winner {
    Sp59,
    IspOrVf,
    Clb,
}

impl Winner {
    pub fn name(&self) -> &'static str {
        match self {
            Winner::Sp59 => "sp59",
            Winner::IspOrVf => "isp_or_vf",
            Winner::Clb => "clb",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegionCell {
    pub rate: f64,
    pub n: u64,
    pub winner: Option<Winner>,
    pub sp59_db: Option<f64>,
    pub isp_or_vf_db: Option<f64>,
    pub clb_db: Option<f64>,
    pub diagnostics: Vec<String>,
}

/// Which member of the SP67 lineage competes in the dominance map.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Contender {
    #[default]
    Isp,
    Vf,
}

impl Contender {
    fn kind(&self) -> BoundKind {
        match self {
            Contender::Isp => BoundKind::Isp,
            Contender::Vf => BoundKind::Vf,
        }
    }
}

/// Tightest converse at one (rate, N): the highest required Eb/N0 wins. Ties within
/// 1e-3 dB go to sp59, then to the isp/vf contender, then to the capacity limit.
pub fn region_cell(
    rate_nats: f64,
    n: u64,
    target_ln_pe: f64,
    family: ChannelFamily,
    contender: Contender,
    opts: &EvalOptions,
) -> RegionCell {
    let mut diagnostics = vec![];
    let mut solve = |kind: BoundKind| match crossing_point(kind, family, n, rate_nats, target_ln_pe, opts) {
        Ok(x) => Some(x),
        Err(e) => {
            diagnostics.push(format!("{}: {e}", kind.name()));
            None
        }
    };
    let sp59 = solve(BoundKind::Sp59);
    let isp = solve(contender.kind());
    let clb = solve(BoundKind::Clb);
    let mut winner: Option<(Winner, f64)> = None;
    for (w, v) in [(Winner::Sp59, sp59), (Winner::IspOrVf, isp), (Winner::Clb, clb)] {
        if let Some(v) = v {
            if winner.is_none_or(|(_, b)| v > b + TIE_TOL_DB) {
                winner = Some((w, v));
            }
        }
    }
    RegionCell {
        rate: rate_nats,
        n,
        winner: winner.map(|w| w.0),
        sp59_db: sp59,
        isp_or_vf_db: isp,
        clb_db: clb,
        diagnostics,
    }
}

/// Dominance map over a rate × block-length grid (AWGN only). Cells are evaluated
/// in parallel; the output is in row-major grid order.
pub fn dominance_region(
    rate_grid: &[f64],
    n_grid: &[u64],
    target_ln_pe: f64,
    family: ChannelFamily,
    contender: Contender,
    opts: &EvalOptions,
) -> Result<Vec<RegionCell>> {
    if rate_grid.is_empty() || n_grid.is_empty() {
        return Err(Error::Usage("rate and block-length grids must be non-empty".into()));
    }
    if !family.is_awgn() {
        return Err(Error::UnsupportedChannel("dominance maps compare against sp59 and need an AWGN family".into()));
    }
    let cells: Vec<(f64, u64)> = rate_grid.iter().flat_map(|&r| n_grid.iter().map(move |&n| (r, n))).collect();
    Ok(cells.par_iter().map(|&(r, n)| region_cell(r, n, target_ln_pe, family, contender, opts)).collect())
}

/// Smallest N in [n_lo, n_hi] at which the contender's crossing exceeds sp59's,
/// assuming a single sign change. `None` if the contender never wins in the range.
pub fn dominance_boundary(
    rate_nats: f64,
    target_ln_pe: f64,
    family: ChannelFamily,
    contender: Contender,
    n_lo: u64,
    n_hi: u64,
    opts: &EvalOptions,
) -> Result<Option<u64>> {
    if !(n_lo >= 1 && n_lo < n_hi) {
        return Err(Error::Usage(format!("need 1 ≤ n_lo < n_hi, got [{n_lo}, {n_hi}]")));
    }
    let wins = |n: u64| -> Result<bool> {
        let a = crossing_point(contender.kind(), family, n, rate_nats, target_ln_pe, opts)?;
        let b = crossing_point(BoundKind::Sp59, family, n, rate_nats, target_ln_pe, opts)?;
        Ok(a > b)
    };
    if wins(n_lo)? {
        return Ok(Some(n_lo));
    }
    if !wins(n_hi)? {
        return Ok(None);
    }
    let (mut lo, mut hi) = (n_lo, n_hi);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if wins(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}
