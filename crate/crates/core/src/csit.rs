//! CSIT availability states and patterns.
//!
//! A pattern is a grid `S[t][i]` giving, for every slot `t` and receiver `i`,
//! what the transmitters know about the channels into receiver `i`:
//! perfect and instantaneous (`P`), one slot late (`D`) or nothing (`N`).
//! [`CsitView`] is the only way scheme code reads channel coefficients, and it
//! enforces exactly that access rule.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use num_rational::Rational64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::ChannelProcess;
use crate::error::{Error, Result};
use crate::schemes::SchemeId;

/// CSIT state, ordered `N < D < P`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CsitState {
    N,
    D,
    P,
}

impl CsitState {
    pub const ALL: [CsitState; 3] = [CsitState::P, CsitState::D, CsitState::N];

    pub fn dominates(self, other: CsitState) -> bool {
        self >= other
    }

    pub fn as_char(self) -> char {
        match self {
            CsitState::P => 'P',
            CsitState::D => 'D',
            CsitState::N => 'N',
        }
    }

    fn from_char(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'P' => Some(CsitState::P),
            'D' => Some(CsitState::D),
            'N' => Some(CsitState::N),
            _ => None,
        }
    }
}

/// `a ⪰ b` in the order `P ≻ D ≻ N`.
pub fn dominates(a: CsitState, b: CsitState) -> bool {
    a.dominates(b)
}

/// Rectangular `slots x receivers` grid of CSIT states.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CsitPattern {
    n_rx: usize,
    states: Vec<CsitState>,
}

impl CsitPattern {
    pub fn new(rows: Vec<Vec<CsitState>>) -> Result<Self> {
        let n_rx = rows.first().map_or(0, Vec::len);
        if n_rx == 0 {
            return Err(Error::dim("a pattern needs at least one slot and one receiver"));
        }
        if let Some((t, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != n_rx) {
            return Err(Error::dim(format!(
                "slot {} has {} receivers, slot 1 has {n_rx}",
                t + 1,
                row.len()
            )));
        }
        Ok(CsitPattern {
            n_rx,
            states: rows.into_iter().flatten().collect(),
        })
    }

    /// Every entry set to `state`.
    pub fn uniform(n_slots: usize, n_rx: usize, state: CsitState) -> Result<Self> {
        Self::new(vec![vec![state; n_rx]; n_slots])
    }

    pub fn n_rx(&self) -> usize {
        self.n_rx
    }

    pub fn n_slots(&self) -> usize {
        self.states.len() / self.n_rx
    }

    /// State of receiver `rx`'s channels in slot `slot` (both zero-based).
    pub fn state(&self, slot: usize, rx: usize) -> CsitState {
        assert!(rx < self.n_rx && slot < self.n_slots());
        self.states[slot * self.n_rx + rx]
    }

    pub fn slot(&self, slot: usize) -> &[CsitState] {
        &self.states[slot * self.n_rx..(slot + 1) * self.n_rx]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[CsitState]> {
        self.states.chunks(self.n_rx)
    }

    /// Receiver `rx`'s state sequence over all slots.
    pub fn receiver(&self, rx: usize) -> Vec<CsitState> {
        self.rows().map(|r| r[rx]).collect()
    }

    /// Entrywise dominance; patterns of different shape never dominate.
    pub fn dominates(&self, other: &CsitPattern) -> bool {
        self.n_rx == other.n_rx
            && self.states.len() == other.states.len()
            && self
                .states
                .iter()
                .zip(&other.states)
                .all(|(a, b)| a.dominates(*b))
    }

    pub fn lambda(&self) -> LambdaDistribution {
        lambda_of(self)
    }
}

impl fmt::Display for CsitPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (t, row) in self.rows().enumerate() {
            if t > 0 {
                f.write_str(",")?;
            }
            for s in row {
                write!(f, "{}", s.as_char())?;
            }
        }
        Ok(())
    }
}

impl FromStr for CsitPattern {
    type Err = Error;

    /// Parses `"DD,PN,NP"`: slots separated by commas, one letter per
    /// receiver, case-insensitive, surrounding whitespace ignored.
    fn from_str(s: &str) -> Result<Self> {
        let parse_err = |detail: String| Error::Parse {
            what: "CSIT pattern",
            detail,
        };
        let rows = s
            .trim()
            .trim_start_matches('(')
            .trim_end_matches(')')
            .split(',')
            .map(|slot| {
                slot.trim()
                    .chars()
                    .map(|c| {
                        CsitState::from_char(c)
                            .ok_or_else(|| parse_err(format!("unexpected character {c:?} in {s:?}")))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        CsitPattern::new(rows).map_err(|e| parse_err(format!("{s:?}: {e}")))
    }
}

impl Serialize for CsitPattern {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CsitPattern {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Fractions of (slot, receiver) entries in each state; exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LambdaDistribution {
    pub p: Rational64,
    pub d: Rational64,
    pub n: Rational64,
}

impl LambdaDistribution {
    pub fn new(p: Rational64, d: Rational64, n: Rational64) -> Self {
        LambdaDistribution { p, d, n }
    }
}

impl fmt::Display for LambdaDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Λ({}, {}, {})", self.p, self.d, self.n)
    }
}

pub fn lambda_of(pattern: &CsitPattern) -> LambdaDistribution {
    let total = pattern.states.len() as i64;
    let count = |s: CsitState| pattern.states.iter().filter(|&&x| x == s).count() as i64;
    LambdaDistribution {
        p: Rational64::new(count(CsitState::P), total),
        d: Rational64::new(count(CsitState::D), total),
        n: Rational64::new(count(CsitState::N), total),
    }
}

/// Which of the three synergy requirements a two-receiver pattern meets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SynergyCheck {
    /// Each receiver sees some CSIT (`D` or better) strictly before a `P`.
    pub delayed_then_perfect: bool,
    /// No slot is `NN`.
    pub no_blind_slot: bool,
    /// Some receiver is `P` in the final slot.
    pub perfect_at_end: bool,
}

impl SynergyCheck {
    pub fn holds(&self) -> bool {
        self.delayed_then_perfect && self.no_blind_slot && self.perfect_at_end
    }
}

/// Evaluates the three requirements on a two-receiver pattern of any length.
/// The final-slot requirement reads "slot 3" for the three-slot case.
pub fn synergy_requirements(pattern: &CsitPattern) -> Result<SynergyCheck> {
    if pattern.n_rx() != 2 {
        return Err(Error::dim(format!(
            "synergy is defined for two receivers, pattern has {}",
            pattern.n_rx()
        )));
    }
    let delayed_then_perfect = (0..2).all(|rx| {
        let seq = pattern.receiver(rx);
        // earliest slot with D or better, then any later P
        seq.iter()
            .position(|s| s.dominates(CsitState::D))
            .is_some_and(|first| seq[first + 1..].contains(&CsitState::P))
    });
    let no_blind_slot = pattern.rows().all(|r| r.iter().any(|&s| s != CsitState::N));
    let last = pattern.n_slots() - 1;
    let perfect_at_end = pattern.slot(last).contains(&CsitState::P);
    Ok(SynergyCheck {
        delayed_then_perfect,
        no_blind_slot,
        perfect_at_end,
    })
}

/// Sufficient condition for 4/3 DoF over a three-slot extension.
pub fn is_synergistic(pattern: &CsitPattern) -> Result<bool> {
    if pattern.n_slots() != 3 || pattern.n_rx() != 2 {
        return Err(Error::dim(format!(
            "synergy classification needs 3 slots and 2 receivers, got {} and {}",
            pattern.n_slots(),
            pattern.n_rx()
        )));
    }
    Ok(synergy_requirements(pattern)?.holds())
}

/// Dispatch order: the three minimal patterns, then their mirrored variants.
pub const DISPATCH_ORDER: [SchemeId; 6] = [
    SchemeId::Scheme1,
    SchemeId::Scheme2,
    SchemeId::Scheme3,
    SchemeId::Scheme1M,
    SchemeId::Scheme2M,
    SchemeId::Scheme3M,
];

/// First two-user scheme (in [`DISPATCH_ORDER`]) whose minimal pattern the
/// input dominates. Patterns of the wrong shape match nothing.
pub fn match_scheme(pattern: &CsitPattern) -> Option<SchemeId> {
    if pattern.n_slots() != 3 || pattern.n_rx() != 2 {
        return None;
    }
    DISPATCH_ORDER.into_iter().find(|id| {
        id.minimal_pattern()
            .is_ok_and(|minimal| pattern.dominates(&minimal))
    })
}

/// All `3^(n_rx * n_slots)` patterns in lexicographic order (`P < D < N`).
pub fn enumerate_patterns(n_slots: usize, n_rx: usize) -> impl Iterator<Item = CsitPattern> {
    let cells = n_slots * n_rx;
    let total = 3usize.pow(cells as u32);
    (0..total).map(move |mut code| {
        let mut states = vec![CsitState::N; cells];
        for cell in (0..cells).rev() {
            states[cell] = CsitState::ALL[code % 3];
            code /= 3;
        }
        CsitPattern { n_rx, states }
    })
}

/// Counts over every two-receiver pattern of a given length.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Census {
    pub n_slots: usize,
    pub total: usize,
    pub synergistic: usize,
    /// Patterns dispatched to some scheme (three-slot case only).
    pub dispatched: usize,
    /// Synergistic but not dispatched, and the reverse.
    pub synergistic_only: usize,
    pub dispatched_only: usize,
    /// `(scheme, count)` in dispatch order; empty unless `n_slots == 3`.
    pub histogram: Vec<(SchemeId, usize)>,
}

pub fn census(n_slots: usize) -> Result<Census> {
    if n_slots == 0 {
        return Err(Error::dim("census needs at least one slot"));
    }
    let mut c = Census {
        n_slots,
        total: 0,
        synergistic: 0,
        dispatched: 0,
        synergistic_only: 0,
        dispatched_only: 0,
        histogram: if n_slots == 3 {
            DISPATCH_ORDER.iter().map(|&id| (id, 0)).collect()
        } else {
            Vec::new()
        },
    };
    for pattern in enumerate_patterns(n_slots, 2) {
        c.total += 1;
        let syn = synergy_requirements(&pattern)?.holds();
        let dispatched = match_scheme(&pattern);
        c.synergistic += syn as usize;
        if let Some(id) = dispatched {
            c.dispatched += 1;
            if let Some(slot) = c.histogram.iter_mut().find(|(s, _)| *s == id) {
                slot.1 += 1;
            }
        }
        match (syn, dispatched.is_some()) {
            (true, false) => c.synergistic_only += 1,
            (false, true) => c.dispatched_only += 1,
            _ => {}
        }
    }
    Ok(c)
}

/// Why a coefficient request was refused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DenyReason {
    FutureSlot,
    NoCsitAtSlot,
    DelayedNotYetAvailable,
    ForeignColumn,
    UnknownReceiver,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("transmitter {tx} at slot {now} may not read h[{rx},{col}]({slot}): {reason:?}")]
pub struct AccessDenied {
    pub reason: DenyReason,
    pub tx: usize,
    pub now: usize,
    pub rx: usize,
    pub col: usize,
    pub slot: usize,
}

/// How a granted coefficient was known.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Timing {
    /// Current slot, perfect CSIT.
    Instantaneous,
    /// Past slot with `P` or `D` state.
    Delayed,
}

/// A coefficient released by a [`CsitView`], with where it came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grant {
    pub rx: usize,
    pub tx: usize,
    pub slot: usize,
    pub timing: Timing,
    #[serde(with = "crate::serde_complex")]
    pub value: Complex64,
}

/// The access rule: transmitter `tx` acting in slot `now` may learn
/// `h[rx, col](slot)` iff `col == tx` and either `slot == now` with state `P`,
/// or `slot < now` with state `P` or `D`.
pub fn access_rule(
    pattern: &CsitPattern,
    tx: usize,
    now: usize,
    rx: usize,
    col: usize,
    slot: usize,
) -> std::result::Result<Timing, DenyReason> {
    if col != tx {
        return Err(DenyReason::ForeignColumn);
    }
    if rx >= pattern.n_rx() {
        return Err(DenyReason::UnknownReceiver);
    }
    if slot > now || slot >= pattern.n_slots() {
        return Err(DenyReason::FutureSlot);
    }
    let state = pattern.state(slot, rx);
    if slot == now {
        match state {
            CsitState::P => Ok(Timing::Instantaneous),
            CsitState::D => Err(DenyReason::DelayedNotYetAvailable),
            CsitState::N => Err(DenyReason::NoCsitAtSlot),
        }
    } else {
        match state {
            CsitState::P | CsitState::D => Ok(Timing::Delayed),
            CsitState::N => Err(DenyReason::NoCsitAtSlot),
        }
    }
}

/// What transmitter `tx` is allowed to know while forming its slot-`now` signal.
#[derive(Debug, Clone, Copy)]
pub struct CsitView<'a> {
    pattern: &'a CsitPattern,
    channel: &'a ChannelProcess,
    tx: usize,
    now: usize,
}

impl<'a> CsitView<'a> {
    pub fn new(
        pattern: &'a CsitPattern,
        channel: &'a ChannelProcess,
        tx: usize,
        now: usize,
    ) -> Result<Self> {
        if pattern.n_rx() != channel.n_rx() {
            return Err(Error::dim(format!(
                "pattern has {} receivers, channel has {}",
                pattern.n_rx(),
                channel.n_rx()
            )));
        }
        if pattern.n_slots() > channel.n_slots() {
            return Err(Error::dim(format!(
                "pattern spans {} slots, channel only {}",
                pattern.n_slots(),
                channel.n_slots()
            )));
        }
        if tx >= channel.n_tx() {
            return Err(Error::dim(format!("no transmitter {tx}")));
        }
        if now >= pattern.n_slots() {
            return Err(Error::SlotOutOfRange {
                slot: now,
                n_slots: pattern.n_slots(),
            });
        }
        Ok(CsitView {
            pattern,
            channel,
            tx,
            now,
        })
    }

    pub fn tx(&self) -> usize {
        self.tx
    }

    pub fn now(&self) -> usize {
        self.now
    }

    /// `h[rx, own column](slot)`, if the pattern allows it.
    pub fn query(&self, rx: usize, slot: usize) -> std::result::Result<Grant, AccessDenied> {
        self.query_entry(rx, self.tx, slot)
    }

    /// Any coefficient; requests outside the own column are always refused.
    pub fn query_entry(
        &self,
        rx: usize,
        col: usize,
        slot: usize,
    ) -> std::result::Result<Grant, AccessDenied> {
        let deny = |reason| AccessDenied {
            reason,
            tx: self.tx,
            now: self.now,
            rx,
            col,
            slot,
        };
        let timing = access_rule(self.pattern, self.tx, self.now, rx, col, slot).map_err(deny)?;
        Ok(Grant {
            rx,
            tx: self.tx,
            slot,
            timing,
            value: self.channel.h(rx, col, slot),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pat(s: &str) -> CsitPattern {
        s.parse().unwrap()
    }

    fn r(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    #[test]
    fn lambda_examples() {
        assert_eq!(
            lambda_of(&pat("DD,PN,NP")),
            LambdaDistribution::new(r(1, 3), r(1, 3), r(1, 3))
        );
        assert_eq!(
            lambda_of(&pat("NN,NN,NN")),
            LambdaDistribution::new(r(0, 1), r(0, 1), r(1, 1))
        );
        assert_eq!(
            lambda_of(&pat("NDD,DND,DDN,PPN,PNP,NPP")),
            LambdaDistribution::new(r(1, 3), r(1, 3), r(1, 3))
        );
    }

    #[test]
    fn state_dominance() {
        assert!(dominates(CsitState::P, CsitState::D));
        assert!(!dominates(CsitState::N, CsitState::D));
        assert!(pat("DD,PP,PP").dominates(&pat("DN,ND,PP")));
        assert!(!pat("DD,PP").dominates(&pat("DN,ND,PP")));
    }

    #[test]
    fn synergy_examples() {
        assert!(is_synergistic(&pat("DD,PN,NP")).unwrap());
        assert!(!is_synergistic(&pat("PP,DD,NN")).unwrap());
        assert!(!is_synergistic(&pat("DD,PP,NN")).unwrap());
        assert!(matches!(
            is_synergistic(&pat("DD,PN")),
            Err(Error::InvalidDimension(_))
        ));
    }

    #[test]
    fn dispatch_examples() {
        assert_eq!(match_scheme(&pat("DD,PN,NP")), Some(SchemeId::Scheme1));
        assert_eq!(match_scheme(&pat("DD,DD,PP")), Some(SchemeId::Scheme2));
        assert_eq!(match_scheme(&pat("ND,DP,PN")), Some(SchemeId::Scheme3M));
        assert_eq!(match_scheme(&pat("NN,NN,NN")), None);
        assert_eq!(match_scheme(&pat("DD,PN")), None);
    }

    #[test]
    fn single_slot_census() {
        let c = census(1).unwrap();
        assert_eq!(c.total, 9);
        assert_eq!(c.synergistic, 0);
        assert!(c.histogram.is_empty());
    }

    #[test]
    fn parse_is_case_insensitive_and_round_trips() {
        let p = pat(" dd, Pn ,nP ");
        assert_eq!(p.to_string(), "DD,PN,NP");
        assert_eq!(pat("(NDD,DND,DDN,PPN,PNP,NPP)").n_rx(), 3);
        assert!("DD,PX".parse::<CsitPattern>().is_err());
        assert!("DD,P".parse::<CsitPattern>().is_err());
        assert!("".parse::<CsitPattern>().is_err());
    }

    #[test]
    fn view_examples() {
        let pattern = pat("DD,PN,NP");
        let ch = ChannelProcess::sample(2, 2, 3, 5).unwrap();
        // transmitter 1, slot 2 (zero-based 0 and 1)
        let view = CsitView::new(&pattern, &ch, 0, 1).unwrap();
        let g = view.query(0, 1).unwrap();
        assert_eq!(g.value, ch.h(0, 0, 1));
        assert_eq!(g.timing, Timing::Instantaneous);
        assert_eq!(view.query(0, 2).unwrap_err().reason, DenyReason::FutureSlot);
        assert_eq!(view.query(1, 1).unwrap_err().reason, DenyReason::NoCsitAtSlot);
        assert_eq!(
            view.query_entry(0, 1, 0).unwrap_err().reason,
            DenyReason::ForeignColumn
        );
        assert_eq!(view.query(1, 0).unwrap().timing, Timing::Delayed);
        let at_start = CsitView::new(&pattern, &ch, 0, 0).unwrap();
        assert_eq!(
            at_start.query(0, 0).unwrap_err().reason,
            DenyReason::DelayedNotYetAvailable
        );
    }
}
