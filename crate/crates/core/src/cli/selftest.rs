//! Invariant suites run by `spherebound selftest`, at reduced grid sizes.

use std::f64::consts::{LN_2, PI};

use clap::ValueEnum;

use crate::channels::{BecChannel, MPskAwgnChannel, SymmetricChannel, TiltingEvaluation};
use crate::compare::gallager_rcb;
use crate::error::Result;
use crate::numerics::{
    find_root, gauss_legendre, integrate_ln, ln_add, ln_gamma, ln_q, ln_sub, Bracket, QuadratureSpec,
};
use crate::sp59::{f_n_recursive, ln_f_n, ln_solid_angle_ratio};
use crate::sp67::{isp_bound, sp67_classic, vf_bound, CodeParams, VfConstant};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Numerics,
    Channels,
    Ordering,
    #[value(name = "sp59-oracle")]
    Sp59Oracle,
    #[value(name = "solid-angle")]
    SolidAngle,
}

impl Suite {
    pub const ALL: [Suite; 5] =
        [Suite::Numerics, Suite::Channels, Suite::Ordering, Suite::Sp59Oracle, Suite::SolidAngle];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Numerics => "numerics",
            Suite::Channels => "channels",
            Suite::Ordering => "ordering",
            Suite::Sp59Oracle => "sp59-oracle",
            Suite::SolidAngle => "solid-angle",
        }
    }
}

/// Deliberate defects used to check that the suites can fail.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Fault {
    /// Report −μ₀ instead of μ₀.
    #[value(name = "mu0-sign")]
    Mu0Sign,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub suite: Suite,
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

struct FlipMu0(Box<dyn SymmetricChannel>);

impl SymmetricChannel for FlipMu0 {
    fn input_size(&self) -> usize {
        self.0.input_size()
    }
    fn mu0_triplet(&self, s: f64) -> Result<TiltingEvaluation> {
        let t = self.0.mu0_triplet(s)?;
        Ok(TiltingEvaluation { mu0: -t.mu0, ..t })
    }
    fn e0(&self, rho: f64) -> Result<f64> {
        self.0.e0(rho)
    }
    fn capacity(&self) -> Result<f64> {
        self.0.capacity()
    }
    fn vf_moments(&self, rho: f64) -> Result<(f64, f64)> {
        self.0.vf_moments(rho)
    }
    fn mu0_fixed_tilt(&self, s0: f64, s: f64) -> Result<f64> {
        self.0.mu0_fixed_tilt(s0, s)
    }
    fn vf_terms(&self, rho: f64) -> Result<(f64, f64, f64)> {
        self.0.vf_terms(rho)
    }
    fn mu0_fixed_tilt_increment(&self, s0: f64, ds: f64) -> Result<f64> {
        self.0.mu0_fixed_tilt_increment(s0, ds)
    }
    fn min_transition(&self) -> Option<f64> {
        self.0.min_transition()
    }
    fn is_euclidean(&self) -> bool {
        self.0.is_euclidean()
    }
    fn describe(&self) -> String {
        self.0.describe()
    }
}

fn wrap(ch: Box<dyn SymmetricChannel>, fault: Option<Fault>) -> Box<dyn SymmetricChannel> {
    match fault {
        Some(Fault::Mu0Sign) => Box::new(FlipMu0(ch)),
        None => ch,
    }
}

type Check = std::result::Result<String, String>;

fn close(what: &str, got: f64, want: f64, tol: f64) -> Check {
    if (got - want).abs() <= tol {
        Ok(format!("{what}: |{got:.6e} − {want:.6e}| ≤ {tol:e}"))
    } else {
        Err(format!("{what}: got {got:.12e}, want {want:.12e} (tol {tol:e})"))
    }
}

fn all(parts: Vec<Check>) -> Check {
    let n = parts.len();
    for p in parts {
        p?;
    }
    Ok(format!("{n} cases"))
}

fn numerics_suite() -> Vec<(&'static str, Check)> {
    let spec = QuadratureSpec::default();
    vec![
        (
            "log-sum",
            all(vec![
                close("ln_add", ln_add(2f64.ln(), 3f64.ln()), 5f64.ln(), 1e-15),
                close("ln_sub", ln_sub(5f64.ln(), 3f64.ln()), LN_2, 1e-15),
            ]),
        ),
        (
            "ln-gamma",
            all(vec![
                close("Γ(1/2)", ln_gamma(0.5).unwrap_or(f64::NAN), 0.5 * PI.ln(), 1e-14),
                close("Γ(10)", ln_gamma(10.0).unwrap_or(f64::NAN), 362_880f64.ln(), 1e-13),
            ]),
        ),
        (
            "ln-q",
            all(vec![
                close("Q(0)", ln_q(0.0), -LN_2, 1e-15),
                close("Q(5)", ln_q(5.0), 2.866_515_718_791_939e-7f64.ln(), 1e-12),
                close("Q(−3)", ln_q(-3.0), 0.998_650_101_968_369_9f64.ln(), 1e-15),
            ]),
        ),
        ("quadrature", {
            let v = integrate_ln(|x: f64| 2.0 * x.ln(), 0.0, 1.0, &spec).unwrap_or(f64::NAN);
            let (x, w) = gauss_legendre(16);
            let gl: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
            all(vec![close("∫x²", v, (1.0f64 / 3.0).ln(), 1e-10), close("GL16 x¹⁰", gl, 2.0 / 11.0, 1e-14)])
        }),
        ("root-finding", {
            let r = Bracket::from_fn(f64::cos, 1.0, 2.0).and_then(|b| find_root(f64::cos, &b, 1e-14));
            close("cos root", r.unwrap_or(f64::NAN), PI / 2.0, 1e-12)
        }),
    ]
}

fn channel_set(fault: Option<Fault>) -> Vec<Box<dyn SymmetricChannel>> {
    let raw: Vec<Box<dyn SymmetricChannel>> = vec![
        Box::new(BecChannel::new(0.3).expect("valid p")),
        Box::new(MPskAwgnChannel::new(2, 0.8).expect("valid σ")),
        Box::new(MPskAwgnChannel::new(4, 0.7).expect("valid σ")),
        Box::new(MPskAwgnChannel::new(8, 0.4).expect("valid σ")),
    ];
    raw.into_iter().map(|c| wrap(c, fault)).collect()
}

fn channels_suite(fault: Option<Fault>) -> Vec<(&'static str, Check)> {
    let chans = channel_set(fault);
    let ss = [0.1, 0.3, 0.5, 0.7, 0.9];
    let identity = {
        let mut parts = vec![];
        for ch in &chans {
            for &s in &ss {
                let r =
                    (|| -> Result<(f64, f64)> { Ok((ch.mu0_triplet(s)?.mu0, -(1.0 - s) * ch.e0(s / (1.0 - s))?)) })();
                parts.push(match r {
                    Ok((a, b)) => close(&format!("{} s={s}", ch.describe()), a, b, 1e-8),
                    Err(e) => Err(e.to_string()),
                });
            }
        }
        all(parts)
    };
    let h = 1e-5;
    let fd = {
        let mut parts = vec![];
        for ch in &chans {
            for &s in &ss {
                let r = (|| -> Result<(TiltingEvaluation, f64, f64)> {
                    let t = ch.mu0_triplet(s)?;
                    Ok((t, ch.mu0_fixed_tilt_increment(s, h)?, ch.mu0_fixed_tilt_increment(s, -h)?))
                })();
                parts.push(match r {
                    Ok((t, dp, dm)) => {
                        let d1 = (dp - dm) / (2.0 * h);
                        let d2 = (dp + dm) / (h * h);
                        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);
                        if rel(d1, t.mu0_prime) > 1e-5 {
                            Err(format!("{} s={s}: μ′ {d1} vs {}", ch.describe(), t.mu0_prime))
                        } else if t.mu0_double_prime > 1e-8 && rel(d2, t.mu0_double_prime) > 1e-5 {
                            Err(format!("{} s={s}: μ″ {d2} vs {}", ch.describe(), t.mu0_double_prime))
                        } else {
                            Ok(String::new())
                        }
                    }
                    Err(e) => Err(e.to_string()),
                });
            }
        }
        all(parts)
    };
    let convex = {
        let mut parts = vec![];
        for ch in &chans {
            for &s in &ss {
                parts.push(match ch.mu0_triplet(s) {
                    Ok(t) if t.mu0_double_prime >= 0.0 => Ok(String::new()),
                    Ok(t) => Err(format!("{} s={s}: μ″ = {}", ch.describe(), t.mu0_double_prime)),
                    Err(e) => Err(e.to_string()),
                });
            }
        }
        all(parts)
    };
    vec![("mu0-e0-identity", identity), ("finite-differences", fd), ("mu0-convexity", convex)]
}

fn ordering_suite(fault: Option<Fault>) -> Vec<(&'static str, Check)> {
    let mut parts = vec![];
    for p in [0.1, 0.3] {
        let ch = wrap(Box::new(BecChannel::new(p).expect("valid p")), fault);
        for n in [100u64, 500] {
            for rb in [0.3, 0.5] {
                let r = (|| -> Result<[f64; 4]> {
                    let code = CodeParams::new(n, rb * LN_2)?;
                    Ok([
                        sp67_classic(ch.as_ref(), &code, 2)?.ln_pe(),
                        vf_bound(ch.as_ref(), &code, 2, VfConstant::Corrected)?.ln_pe(),
                        isp_bound(ch.as_ref(), &code)?.ln_pe(),
                        gallager_rcb(ch.as_ref(), &code)?,
                    ])
                })();
                parts.push(match r {
                    Ok(v) if v.windows(2).all(|w| w[0] <= w[1] + 1e-9) => Ok(String::new()),
                    Ok(v) => Err(format!("p={p} N={n} R={rb} bits: sp67, vf, isp, rcb = {v:?}")),
                    Err(e) => Err(e.to_string()),
                });
            }
        }
    }
    vec![("sp67<=vf<=isp<=rcb", all(parts))]
}

fn sp59_oracle_suite() -> Vec<(&'static str, Check)> {
    let mut worst: f64 = 0.0;
    let mut failure = None;
    'outer: for n in 1..=200u64 {
        for x in [0.0, 0.5, 1.0, 2.0, 5.0, 0.3 * (n as f64).sqrt()] {
            match (ln_f_n(n, x), f_n_recursive(n, x)) {
                (Ok(a), Ok(b)) => {
                    let rel = (a.exp() - b).abs() / b.abs();
                    worst = worst.max(rel);
                    if !(rel <= 1e-9) {
                        failure = Some(format!("n={n} x={x}: relative error {rel:e}"));
                        break 'outer;
                    }
                }
                (Err(e), _) | (_, Err(e)) => {
                    failure = Some(format!("n={n} x={x}: {e}"));
                    break 'outer;
                }
            }
        }
    }
    let check = match failure {
        Some(f) => Err(f),
        None => Ok(format!("1200 cases, worst relative error {worst:.2e}")),
    };
    vec![("log-domain-vs-recursion", check)]
}

fn solid_angle_suite() -> Vec<(&'static str, Check)> {
    let mut parts = vec![];
    for i in 0..50u64 {
        let n = 2 + (i * 97) % 4999;
        let theta = 0.01 + 1.54 * i as f64 / 49.0;
        parts.push(match ln_solid_angle_ratio(n, theta) {
            Ok(r) if r.lower <= r.exact + 1e-12 && r.exact <= r.upper + 1e-12 => Ok(String::new()),
            Ok(r) => Err(format!("n={n} θ={theta}: {r:?}")),
            Err(e) => Err(e.to_string()),
        });
    }
    vec![("sandwich", all(parts))]
}

pub fn run_suites(suites: &[Suite], fault: Option<Fault>) -> Vec<CheckResult> {
    let mut out = vec![];
    for &suite in suites {
        let checks = match suite {
            Suite::Numerics => numerics_suite(),
            Suite::Channels => channels_suite(fault),
            Suite::Ordering => ordering_suite(fault),
            Suite::Sp59Oracle => sp59_oracle_suite(),
            Suite::SolidAngle => solid_angle_suite(),
        };
        for (name, c) in checks {
            let (pass, detail) = match c {
                Ok(d) => (true, d),
                Err(d) => (false, d),
            };
            out.push(CheckResult { suite, name: name.to_string(), pass, detail });
        }
    }
    out
}
