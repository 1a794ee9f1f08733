use proptest::prelude::*;
use spherebound::channels::{BecChannel, ChannelFamily, SymmetricChannel};
use spherebound::compare::*;
use spherebound::numerics::QuadratureSpec;
use spherebound::sp67::{isp_bound, CodeParams};
use spherebound::Error;
use std::f64::consts::LN_2;

const BPSK: ChannelFamily = ChannelFamily::MPsk { m: 2 };

fn bec_e0(p: f64, rho: f64) -> f64 {
    -(p + (1.0 - p) * 2f64.powf(-rho)).ln()
}

#[test]
fn rcb_matches_rho_grid_on_bec() {
    for (p, rb, n) in [(0.2, 0.5, 200u64), (0.1, 0.75, 1000), (0.4, 0.3, 50), (0.05, 0.2, 400)] {
        let ch = BecChannel::new(p).unwrap();
        let r = rb * LN_2;
        let best = (0..=100_000)
            .map(|i| {
                let rho = i as f64 / 100_000.0;
                bec_e0(p, rho) - rho * r
            })
            .fold(0.0, f64::max);
        let got = gallager_rcb(&ch, &CodeParams::new(n, r).unwrap()).unwrap();
        assert!((got + n as f64 * best).abs() < 1e-8 * n as f64, "p={p}: {got} vs {}", -(n as f64) * best);
    }
}

#[test]
fn rcb_is_zero_above_capacity() {
    let ch = BecChannel::new(0.5).unwrap();
    assert_eq!(gallager_rcb(&ch, &CodeParams::new(100, 0.6 * LN_2).unwrap()).unwrap(), 0.0);
    let (e, rho) = random_coding_exponent(&ch, 0.6 * LN_2).unwrap();
    assert_eq!((e, rho), (0.0, 0.0));
}

#[test]
fn rcb_uses_ml_rate_for_lists() {
    let ch = BecChannel::new(0.2).unwrap();
    let with_list = gallager_rcb(&ch, &CodeParams { n: 100, rate_nats: 0.3, list_size: 4 }).unwrap();
    let ml = gallager_rcb(&ch, &CodeParams::new(100, 0.3 + 4f64.ln() / 100.0).unwrap()).unwrap();
    assert!((with_list - ml).abs() < 1e-12);
}

#[test]
fn isp_below_rcb_on_grid() {
    let opts = EvalOptions::default();
    let mut checked = 0;
    for &(fam, pts) in &[(ChannelFamily::Bec, [0.05, 0.2, 0.35]), (BPSK, [1.0, 2.5, 4.0])] {
        for pt in pts {
            for (n, rb) in [(64u64, 0.3), (128, 0.45), (256, 0.5), (512, 0.6), (1024, 0.4)] {
                let r = rb * LN_2;
                let isp = evaluate_bound(BoundKind::Isp, fam, pt, n, r, &opts).unwrap();
                let rcb = evaluate_bound(BoundKind::Rcb, fam, pt, n, r, &opts).unwrap();
                if let Some(l) = isp.ln_pe() {
                    assert!(l <= rcb.ln_pe().unwrap() + 1e-9, "{fam:?} pt={pt} n={n} rb={rb}");
                }
                checked += 1;
            }
        }
    }
    assert_eq!(checked, 30);
}

#[test]
fn capacity_limit_examples() {
    let q = QuadratureSpec::default();
    let p = capacity_limit(ChannelFamily::Bec, 0.75 * LN_2, &q).unwrap();
    assert!((p - 0.25).abs() < 1e-15);
    let db = capacity_limit(BPSK, 0.5 * LN_2, &q).unwrap();
    assert!((db - 0.19).abs() < 0.02, "{db}");
    // at the limit the constrained capacity equals the rate
    for (fam, rb) in [(BPSK, 0.8), (ChannelFamily::MPsk { m: 4 }, 1.5)] {
        let db = capacity_limit(fam, rb * LN_2, &q).unwrap();
        let c = fam.at(db, rb * LN_2, &q).unwrap().capacity().unwrap();
        assert!((c - rb * LN_2).abs() < 1e-8, "{fam:?}");
    }
    assert!(matches!(capacity_limit(BPSK, LN_2, &q), Err(Error::Infeasible(_))));
    assert!(matches!(capacity_limit(ChannelFamily::Bec, 0.0, &q), Err(Error::Domain(_))));
}

#[test]
fn capacity_limit_approaches_shannon_limit_at_low_rate() {
    let db = capacity_limit(BPSK, 1e-3, &QuadratureSpec::default()).unwrap();
    let shannon = 10.0 * LN_2.log10();
    assert!(db > shannon && db < shannon + 0.01, "{db}");
}

#[test]
fn unsupported_combinations() {
    let o = EvalOptions::default();
    assert!(matches!(
        evaluate_bound(BoundKind::Sp59, ChannelFamily::Bec, 0.1, 100, 0.3, &o),
        Err(Error::UnsupportedChannel(_))
    ));
    assert!(matches!(evaluate_bound(BoundKind::Sp67, BPSK, 2.0, 100, 0.3, &o), Err(Error::UnsupportedChannel(_))));
    assert!(BoundKind::parse("sp60").is_err());
    for k in BoundKind::ALL {
        assert_eq!(BoundKind::parse(k.name()).unwrap(), k);
    }
}

#[test]
fn clb_column_flags_points_beyond_capacity() {
    let o = EvalOptions::default();
    let v = evaluate_bound(BoundKind::Clb, ChannelFamily::Bec, 0.3, 100, 0.75 * LN_2, &o).unwrap();
    assert_eq!(v.ln_pe(), Some(0.0));
    let v = evaluate_bound(BoundKind::Clb, ChannelFamily::Bec, 0.2, 100, 0.75 * LN_2, &o).unwrap();
    assert_eq!(v, BoundValue::Trivial);
}

#[test]
fn crossing_hits_target() {
    let o = EvalOptions::default();
    let t = 1e-4f64.ln();
    for k in [BoundKind::Isp, BoundKind::Vf, BoundKind::Sp59, BoundKind::Rcb] {
        let x = crossing_point(k, BPSK, 200, 0.5 * LN_2, t, &o).unwrap();
        let below = evaluate_bound(k, BPSK, x - 1e-3, 200, 0.5 * LN_2, &o).unwrap().ln_pe().unwrap();
        let above = evaluate_bound(k, BPSK, x + 1e-3, 200, 0.5 * LN_2, &o).unwrap().ln_pe().unwrap();
        assert!(below > t && above < t, "{k:?} at {x}");
    }
    let p = crossing_point(BoundKind::Isp, ChannelFamily::Bec, 500, 0.5 * LN_2, t, &o).unwrap();
    let v = evaluate_bound(BoundKind::Isp, ChannelFamily::Bec, p, 500, 0.5 * LN_2, &o).unwrap();
    assert!((v.ln_pe().unwrap() - t).abs() < 1e-2);
    assert!(p < 0.5);
    let clb = crossing_point(BoundKind::Clb, BPSK, 200, 0.5 * LN_2, t, &o).unwrap();
    let rcb = crossing_point(BoundKind::Rcb, BPSK, 200, 0.5 * LN_2, t, &o).unwrap();
    let isp = crossing_point(BoundKind::Isp, BPSK, 200, 0.5 * LN_2, t, &o).unwrap();
    assert!(clb < isp && isp < rcb);
}

#[test]
fn minlen_collapses_for_loose_target() {
    let o = EvalOptions::default();
    for (k, fam, pt) in [(BoundKind::Isp, ChannelFamily::Bec, 0.2), (BoundKind::Sp59, BPSK, 2.0)] {
        let q = MinLenQuery { bound: k, family: fam, rate_nats: 0.5 * LN_2, target_ln_pe: -1e-12, point: pt };
        assert_eq!(min_blocklength(&q, &o).unwrap().n, 1, "{k:?}");
    }
}

#[test]
fn minlen_matches_exhaustive_sweep() {
    let o = EvalOptions::default();
    let (p, r, t) = (0.2, 0.75 * LN_2, 1e-5f64.ln());
    let q = MinLenQuery { bound: BoundKind::Isp, family: ChannelFamily::Bec, rate_nats: r, target_ln_pe: t, point: p };
    let got = min_blocklength(&q, &o).unwrap();
    let ch = BecChannel::new(p).unwrap();
    let mut last = 0;
    for n in 1..=got.n + 200 {
        if let Some(b) = isp_bound(&ch, &CodeParams::new(n, r).unwrap()).unwrap().bound() {
            if b.ln_pe_lower > t {
                last = n;
            }
        }
    }
    assert_eq!(got.largest_excluded, last);
    assert_eq!(got.n, last + 1);
}

#[test]
fn achievability_needs_more_length_than_converse() {
    let o = EvalOptions::default();
    for (fam, pt) in [(ChannelFamily::Bec, 0.2), (BPSK, 2.5)] {
        let q = |k| MinLenQuery { bound: k, family: fam, rate_nats: 0.5 * LN_2, target_ln_pe: 1e-5f64.ln(), point: pt };
        let isp = min_blocklength(&q(BoundKind::Isp), &o).unwrap().n;
        let rcb = min_blocklength(&q(BoundKind::Rcb), &o).unwrap().n;
        assert!(rcb >= isp, "{fam:?}: rcb {rcb} isp {isp}");
    }
}

#[test]
fn minlen_rejects_points_beyond_capacity() {
    let o = EvalOptions::default();
    let q = MinLenQuery {
        bound: BoundKind::Isp,
        family: ChannelFamily::Bec,
        rate_nats: 0.5 * LN_2,
        target_ln_pe: -10.0,
        point: 0.55,
    };
    assert!(matches!(min_blocklength(&q, &o), Err(Error::Infeasible(_))));
    let q = MinLenQuery { bound: BoundKind::Clb, point: 0.2, ..q };
    assert!(matches!(min_blocklength(&q, &o), Err(Error::Usage(_))));
}

#[test]
fn region_winner_is_deterministic_and_tightest() {
    let o = EvalOptions::default();
    let rates = [0.5 * LN_2, 0.8 * LN_2];
    let ns = [100u64, 1000];
    let t = 1e-5f64.ln();
    let a = dominance_region(&rates, &ns, t, BPSK, Contender::Isp, &o).unwrap();
    let b = dominance_region(&rates, &ns, t, BPSK, Contender::Isp, &o).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 4);
    for (i, c) in a.iter().enumerate() {
        assert_eq!((c.rate, c.n), (rates[i / 2], ns[i % 2]));
        assert!(c.diagnostics.is_empty(), "{:?}", c.diagnostics);
        let vals = [c.sp59_db.unwrap(), c.isp_or_vf_db.unwrap(), c.clb_db.unwrap()];
        let w = match c.winner.unwrap() {
            Winner::Sp59 => vals[0],
            Winner::IspOrVf => vals[1],
            Winner::Clb => vals[2],
        };
        for v in vals {
            assert!(w >= v - TIE_TOL_DB);
        }
    }
    // short codes favour sp59, long high-rate codes the isp bound
    assert_eq!(a[0].winner, Some(Winner::Sp59));
    assert_eq!(a[3].winner, Some(Winner::IspOrVf));
}

#[test]
fn region_reports_cell_errors_without_aborting() {
    let o = EvalOptions::default();
    // rate above ln 2 is infeasible for BPSK
    let cells = dominance_region(&[0.3, 0.9], &[200], -10.0, BPSK, Contender::Vf, &o).unwrap();
    assert!(cells[0].winner.is_some());
    assert!(cells[1].winner.is_none() && !cells[1].diagnostics.is_empty());
    assert!(dominance_region(&[0.3], &[200], -10.0, ChannelFamily::Bec, Contender::Isp, &o).is_err());
    assert!(dominance_region(&[], &[200], -10.0, BPSK, Contender::Isp, &o).is_err());
}

#[test]
fn boundary_is_non_increasing_in_rate() {
    let o = EvalOptions::default();
    let t = 1e-6f64.ln();
    let mut prev = u64::MAX;
    for i in 0..10 {
        let rb = 0.74 + 0.01 * i as f64;
        let n = dominance_boundary(rb * LN_2, t, BPSK, Contender::Isp, 100, 1500, &o).unwrap().unwrap();
        assert!(n <= prev, "R={rb}: {n} after {prev}");
        prev = n;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(30))]

    #[test]
    fn bec_capacity_limit_inverts(rb in 0.01f64..0.99) {
        let p = capacity_limit(ChannelFamily::Bec, rb * LN_2, &QuadratureSpec::default()).unwrap();
        let c = BecChannel::new(p).unwrap().capacity().unwrap();
        prop_assert!((c - rb * LN_2).abs() < 1e-12);
    }

    #[test]
    fn rcb_exponent_is_non_increasing_in_rate(p in 0.01f64..0.6, r1 in 0.0f64..0.6, dr in 0.0f64..0.1) {
        let ch = BecChannel::new(p).unwrap();
        let (a, _) = random_coding_exponent(&ch, r1).unwrap();
        let (b, _) = random_coding_exponent(&ch, r1 + dr).unwrap();
        prop_assert!(b <= a + 1e-12);
    }
}
