use altcsit::channel::sample_channel;
use altcsit::csit::{
    access_rule, census, enumerate_patterns, is_synergistic, match_scheme, CsitPattern, CsitState, CsitView,
    DenyReason, Timing, DISPATCH_ORDER,
};
use altcsit::schemes::SchemeId;
use num_rational::Rational64;
use proptest::prelude::*;

fn state() -> impl Strategy<Value = CsitState> {
    prop_oneof![Just(CsitState::P), Just(CsitState::D), Just(CsitState::N)]
}

fn pattern(max_slots: usize, max_rx: usize) -> impl Strategy<Value = CsitPattern> {
    (1..=max_slots, 1..=max_rx).prop_flat_map(|(slots, rx)| {
        prop::collection::vec(prop::collection::vec(state(), rx), slots)
            .prop_map(|rows| CsitPattern::new(rows).unwrap())
    })
}

/// Pattern of the same shape, pointwise no worse.
fn lift(p: &CsitPattern, bumps: &[bool]) -> CsitPattern {
    let rows = p
        .rows()
        .enumerate()
        .map(|(t, row)| {
            row.iter()
                .enumerate()
                .map(|(i, &s)| {
                    if bumps[(t * p.n_rx() + i) % bumps.len()] {
                        match s {
                            CsitState::N => CsitState::D,
                            _ => CsitState::P,
                        }
                    } else {
                        s
                    }
                })
                .collect()
        })
        .collect();
    CsitPattern::new(rows).unwrap()
}

proptest! {
    #[test]
    fn text_round_trip(p in pattern(6, 4)) {
        let back: CsitPattern = p.to_string().parse().unwrap();
        prop_assert_eq!(&back, &p);
        let lower: CsitPattern = p.to_string().to_lowercase().parse().unwrap();
        prop_assert_eq!(&lower, &p);
    }

    #[test]
    fn dominance_is_a_partial_order(p in pattern(4, 3), bumps in prop::collection::vec(any::<bool>(), 1..8)) {
        let q = lift(&p, &bumps);
        prop_assert!(p.dominates(&p));
        prop_assert!(q.dominates(&p));
        if p.dominates(&q) {
            prop_assert_eq!(&p, &q);
        }
    }

    #[test]
    fn lambda_sums_to_one(p in pattern(6, 4)) {
        let l = p.lambda();
        prop_assert_eq!(l.p + l.d + l.n, Rational64::from_integer(1));
    }

    #[test]
    fn dispatch_is_monotone(bumps in prop::collection::vec(any::<bool>(), 6), code in 0usize..729) {
        let p = enumerate_patterns(3, 2).nth(code).unwrap();
        if match_scheme(&p).is_some() {
            prop_assert!(match_scheme(&lift(&p, &bumps)).is_some());
        }
    }

    #[test]
    fn view_agrees_with_rule(
        p in pattern(5, 3),
        seed in any::<u64>(),
        tx in 0usize..3,
        now in 0usize..5,
        rx in 0usize..4,
        col in 0usize..3,
        slot in 0usize..6,
    ) {
        let ch = sample_channel(p.n_rx(), 3, p.n_slots(), seed).unwrap();
        prop_assume!(now < p.n_slots());
        let view = CsitView::new(&p, &ch, tx, now).unwrap();
        let got = view.query_entry(rx, col, slot);
        let legal = col == tx
            && rx < p.n_rx()
            && slot < p.n_slots()
            && ((slot == now && p.state(slot, rx) == CsitState::P)
                || (slot < now && p.state(slot, rx) != CsitState::N));
        prop_assert_eq!(got.is_ok(), legal);
        if let Ok(g) = got {
            prop_assert_eq!(g.value, ch.h(rx, tx, slot));
            let want = if slot == now { Timing::Instantaneous } else { Timing::Delayed };
            prop_assert_eq!(g.timing, want);
        }
        prop_assert_eq!(got.is_ok(), access_rule(&p, tx, now, rx, col, slot).is_ok());
    }
}

#[test]
fn parse_rejects_garbage() {
    for bad in ["", "DD,P", "DQ,PN", "DD,,NP"] {
        assert!(bad.parse::<CsitPattern>().is_err(), "{bad:?}");
    }
    let p: CsitPattern = " (dd, pn, np) ".parse().unwrap();
    assert_eq!(p.to_string(), "DD,PN,NP");
}

#[test]
fn delayed_csit_arrives_one_slot_late() {
    let p: CsitPattern = "DD,NN".parse().unwrap();
    assert_eq!(access_rule(&p, 0, 0, 0, 0, 0), Err(DenyReason::DelayedNotYetAvailable));
    assert_eq!(access_rule(&p, 0, 1, 0, 0, 0), Ok(Timing::Delayed));
    assert_eq!(access_rule(&p, 0, 1, 0, 0, 1), Err(DenyReason::NoCsitAtSlot));
}

#[test]
fn census_of_three_slots() {
    let c = census(3).unwrap();
    assert_eq!(c.total, 729);

    // recount from scratch
    let mut syn = 0;
    let mut counts = [0usize; 6];
    for p in enumerate_patterns(3, 2) {
        syn += is_synergistic(&p).unwrap() as usize;
        if let Some(id) = match_scheme(&p) {
            counts[DISPATCH_ORDER.iter().position(|&d| d == id).unwrap()] += 1;
        }
    }
    assert_eq!(c.synergistic, syn);
    assert_eq!(c.dispatched, counts.iter().sum::<usize>());
    let hist: Vec<usize> = c.histogram.iter().map(|h| h.1).collect();
    assert_eq!(hist, counts);
    assert_eq!(
        c.synergistic - c.synergistic_only + c.dispatched_only,
        c.dispatched
    );
    // each minimal pattern dispatches to its own scheme
    for id in DISPATCH_ORDER {
        assert_eq!(match_scheme(&id.minimal_pattern().unwrap()), Some(id));
    }
}

#[test]
fn census_edge_lengths() {
    let one = census(1).unwrap();
    assert_eq!((one.total, one.synergistic), (9, 0));
    assert!(one.histogram.is_empty());
    assert_eq!(census(2).unwrap().total, 81);
    assert!(census(0).is_err());
}

#[test]
fn mirrored_scheme3_carries_its_table_name() {
    let p: CsitPattern = "ND,DP,PN".parse().unwrap();
    let id = match_scheme(&p).unwrap();
    assert_eq!(id, SchemeId::Scheme3M);
    assert_eq!(id.table_label(), SchemeId::Scheme3);
}
