//! Declarative slot-by-slot description of each scheme.
//!
//! A layout says, for every slot, which symbols go out raw and which past
//! interference terms get resurrected at which receiver. It carries no channel
//! values; [`crate::schemes::build_plan`] turns it into coefficients through
//! [`crate::csit::CsitView`].

use serde::{Deserialize, Serialize};

use super::{SchemeId, SymbolId};
use crate::csit::{CsitPattern, CsitState};
use crate::error::{Error, Result};

/// One additive piece of a slot's transmit signals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Component {
    /// Each symbol is sent unprecoded by its own transmitter.
    Raw(Vec<SymbolId>),
    /// Transmitter `j` sends `h_rx,j(now)^-1 * h_rx,j(from) * s` for each
    /// of its symbols `s` in `group`, so receiver `rx` hears again exactly
    /// what `group` contributed there in slot `from`.
    Resurrect {
        rx: usize,
        from: usize,
        group: Vec<SymbolId>,
    },
}

impl Component {
    pub fn symbols(&self) -> &[SymbolId] {
        match self {
            Component::Raw(g) | Component::Resurrect { group: g, .. } => g,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    scheme: Option<SchemeId>,
    n_rx: usize,
    n_tx: usize,
    symbols: Vec<SymbolId>,
    slots: Vec<Vec<Component>>,
}

impl Layout {
    /// Validates a hand-built layout.
    ///
    /// Every referenced symbol must be declared, indices must fit the
    /// network, and a resurrected group must have gone out raw in its
    /// source slot, which must lie in the past.
    pub fn new(
        scheme: Option<SchemeId>,
        n_rx: usize,
        n_tx: usize,
        symbols: Vec<SymbolId>,
        slots: Vec<Vec<Component>>,
    ) -> Result<Self> {
        if n_rx == 0 || n_tx == 0 {
            return Err(Error::dim("a layout needs at least one receiver and transmitter"));
        }
        for (k, s) in symbols.iter().enumerate() {
            if s.rx >= n_rx || s.tx >= n_tx {
                return Err(Error::dim(format!("symbol {s} outside a {n_rx}x{n_tx} network")));
            }
            if symbols[..k].contains(s) {
                return Err(Error::dim(format!("symbol {s} declared twice")));
            }
        }
        for (t, comps) in slots.iter().enumerate() {
            for c in comps {
                if let Some(s) = c.symbols().iter().find(|s| !symbols.contains(s)) {
                    return Err(Error::dim(format!("slot {} uses undeclared symbol {s}", t + 1)));
                }
                if let Component::Resurrect { rx, from, group } = c {
                    if *rx >= n_rx || *from >= t {
                        return Err(Error::dim(format!(
                            "slot {} resurrects at receiver {} from slot {}",
                            t + 1,
                            rx + 1,
                            from + 1
                        )));
                    }
                    let sent = slots[*from]
                        .iter()
                        .filter(|c| matches!(c, Component::Raw(_)))
                        .flat_map(Component::symbols)
                        .collect::<Vec<_>>();
                    if let Some(s) = group.iter().find(|s| !sent.contains(s)) {
                        return Err(Error::dim(format!(
                            "slot {} resurrects {s}, which was not sent raw in slot {}",
                            t + 1,
                            from + 1
                        )));
                    }
                }
            }
        }
        Ok(Layout {
            scheme,
            n_rx,
            n_tx,
            symbols,
            slots,
        })
    }

    pub fn scheme(&self) -> Option<SchemeId> {
        self.scheme
    }

    pub fn n_rx(&self) -> usize {
        self.n_rx
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    pub fn n_slots(&self) -> usize {
        self.slots.len()
    }

    pub fn symbols(&self) -> &[SymbolId] {
        &self.symbols
    }

    pub fn slot(&self, t: usize) -> &[Component] {
        &self.slots[t]
    }

    pub fn slots(&self) -> &[Vec<Component>] {
        &self.slots
    }

    /// Symbols intended for `rx`.
    pub fn desired(&self, rx: usize) -> Vec<SymbolId> {
        self.symbols.iter().copied().filter(|s| s.rx == rx).collect()
    }

    /// The least CSIT under which every resurrection is legal: `P` for the
    /// target receiver in the resurrection slot, at least `D` for it in the
    /// source slot, `N` everywhere else.
    pub fn minimal_pattern(&self) -> CsitPattern {
        let mut rows = vec![vec![CsitState::N; self.n_rx]; self.slots.len()];
        for (t, comps) in self.slots.iter().enumerate() {
            for c in comps {
                if let Component::Resurrect { rx, from, .. } = *c {
                    rows[t][rx] = CsitState::P;
                    rows[from][rx] = rows[from][rx].max(CsitState::D);
                }
            }
        }
        CsitPattern::new(rows).expect("layout dimensions are nonzero")
    }

    /// Drops every slot from `n_slots` on, and any resurrection whose source
    /// no longer exists (none can, since sources are in the past).
    pub fn truncated(&self, n_slots: usize) -> Layout {
        let mut out = self.clone();
        out.slots.truncate(n_slots);
        out
    }
}

fn sym(rx: usize, tx: usize, index: usize) -> SymbolId {
    SymbolId { rx, tx, index }
}

fn raw(g: &[SymbolId]) -> Component {
    Component::Raw(g.to_vec())
}

fn res(rx: usize, from: usize, g: &[SymbolId]) -> Component {
    Component::Resurrect {
        rx,
        from,
        group: g.to_vec(),
    }
}

fn collect_symbols(slots: &[Vec<Component>]) -> Vec<SymbolId> {
    let mut out: Vec<SymbolId> = Vec::new();
    for s in slots.iter().flatten().flat_map(Component::symbols) {
        if !out.contains(s) {
            out.push(*s);
        }
    }
    out.sort();
    out
}

fn finish(scheme: SchemeId, n_rx: usize, n_tx: usize, slots: Vec<Vec<Component>>) -> Layout {
    let symbols = collect_symbols(&slots);
    Layout::new(Some(scheme), n_rx, n_tx, symbols, slots).expect("built-in layouts are valid")
}

/// The six two-user three-slot schemes.
pub(super) fn two_user(scheme: SchemeId) -> Layout {
    // u: symbols for R1 from T1, T2; v: symbols for R2.
    let u = [sym(0, 0, 0), sym(0, 1, 0)];
    let v = [sym(1, 0, 0), sym(1, 1, 0)];
    let slots = match scheme {
        SchemeId::Scheme1 => vec![
            vec![raw(&u), raw(&v)],
            vec![res(0, 0, &v)],
            vec![res(1, 0, &u)],
        ],
        SchemeId::Scheme1M => vec![
            vec![raw(&u), raw(&v)],
            vec![res(1, 0, &u)],
            vec![res(0, 0, &v)],
        ],
        SchemeId::Scheme2 => vec![
            vec![raw(&u)],
            vec![raw(&v)],
            vec![res(1, 0, &u), res(0, 1, &v)],
        ],
        SchemeId::Scheme2M => vec![
            vec![raw(&v)],
            vec![raw(&u)],
            vec![res(1, 1, &u), res(0, 0, &v)],
        ],
        SchemeId::Scheme3 => vec![
            vec![raw(&v)],
            vec![raw(&u), res(0, 0, &v)],
            vec![res(1, 1, &u)],
        ],
        SchemeId::Scheme3M => vec![
            vec![raw(&u)],
            vec![raw(&v), res(1, 0, &u)],
            vec![res(0, 1, &v)],
        ],
        other => unreachable!("{other} is not a two-user scheme"),
    };
    finish(scheme, 2, 2, slots)
}

/// K x K network: slot `k < K` sends every symbol meant for receiver `k`;
/// then one slot per receiver pair `(a, b)` resurrects, at `b`, what `a`'s
/// symbols caused there and, at `a`, what `b`'s symbols caused there.
pub(super) fn k_user(scheme: SchemeId, k: usize) -> Layout {
    let group = |rx: usize| (0..k).map(|tx| sym(rx, tx, 0)).collect::<Vec<_>>();
    let mut slots: Vec<Vec<Component>> = (0..k).map(|rx| vec![raw(&group(rx))]).collect();
    for a in 0..k {
        for b in a + 1..k {
            slots.push(vec![res(b, a, &group(a)), res(a, b, &group(b))]);
        }
    }
    finish(scheme, k, k, slots)
}

/// Symbol allocator: hands out the next unused index for each (rx, tx).
struct Counter {
    next: Vec<Vec<usize>>,
}

impl Counter {
    fn new(n_rx: usize, n_tx: usize) -> Self {
        Counter {
            next: vec![vec![0; n_tx]; n_rx],
        }
    }

    fn take(&mut self, rx: usize, tx: usize) -> SymbolId {
        let index = self.next[rx][tx];
        self.next[rx][tx] += 1;
        sym(rx, tx, index)
    }
}

/// K x 2 network. Even K: batch `b` sends a two-symbol group for R1 from
/// transmitters `(2b, 2b+1)` and one for R2 from `(2b+1, 2b+2 mod K)`;
/// K/2 resurrection slots at R1 follow, then K/2 at R2. Odd K puts the
/// dedicated three-transmitter block first and the even construction on
/// the remaining transmitters after it.
pub(super) fn k_by_two(scheme: SchemeId, k: usize) -> Layout {
    let mut c = Counter::new(2, k);
    let mut slots = Vec::new();
    let even_from = if k % 2 == 1 {
        three_by_two_block(&mut c, &mut slots);
        3
    } else {
        0
    };
    let txs: Vec<usize> = (even_from..k).collect();
    if !txs.is_empty() {
        even_by_two_block(&mut c, &mut slots, &txs);
    }
    finish(scheme, 2, k, slots)
}

fn even_by_two_block(c: &mut Counter, slots: &mut Vec<Vec<Component>>, txs: &[usize]) {
    let m = txs.len();
    let base = slots.len();
    let mut u_groups = Vec::new();
    let mut v_groups = Vec::new();
    for b in 0..m / 2 {
        let u = [c.take(0, txs[2 * b]), c.take(0, txs[2 * b + 1])];
        let v = [c.take(1, txs[2 * b + 1]), c.take(1, txs[(2 * b + 2) % m])];
        slots.push(vec![raw(&u), raw(&v)]);
        u_groups.push(u);
        v_groups.push(v);
    }
    for (b, v) in v_groups.iter().enumerate() {
        slots.push(vec![res(0, base + b, v)]);
    }
    for (b, u) in u_groups.iter().enumerate() {
        slots.push(vec![res(1, base + b, u)]);
    }
}

/// 12 symbols over 9 slots on three transmitters: three all-delayed
/// creation slots, three resurrections at R1, three at R2.
fn three_by_two_block(c: &mut Counter, slots: &mut Vec<Vec<Component>>) {
    let base = slots.len();
    // (R1 group transmitters, R2 group transmitters) per creation slot
    let batches = [((0, 2), (0, 1)), ((0, 1), (1, 2)), ((1, 2), (0, 2))];
    let mut u_groups = Vec::new();
    let mut v_groups = Vec::new();
    for ((ua, ub), (va, vb)) in batches {
        let u = [c.take(0, ua), c.take(0, ub)];
        let v = [c.take(1, va), c.take(1, vb)];
        slots.push(vec![raw(&u), raw(&v)]);
        u_groups.push(u);
        v_groups.push(v);
    }
    for (b, v) in v_groups.iter().enumerate() {
        slots.push(vec![res(0, base + b, v)]);
    }
    for (b, u) in u_groups.iter().enumerate() {
        slots.push(vec![res(1, base + b, u)]);
    }
}

/// 2 x K network built from receiver pairs. Each pair `(a, b)` gets a slot
/// carrying a two-symbol group for `a`, one for `b`, and later one joint
/// resurrection slot. Even K pairs `(0,1), (2,3), ...`; odd K chains
/// `(0,1), (1,2)` and pairs the rest.
pub(super) fn two_by_k(scheme: SchemeId, k: usize) -> Layout {
    let mut pairs = Vec::new();
    let mut start = 0;
    if k % 2 == 1 {
        pairs.extend([(0, 1), (1, 2)]);
        start = 3;
    }
    pairs.extend((start..k).step_by(2).map(|a| (a, a + 1)));

    let mut c = Counter::new(k, 2);
    let mut slots = Vec::new();
    let mut sent = Vec::new();
    for &(a, b) in &pairs {
        let ga = [c.take(a, 0), c.take(a, 1)];
        slots.push(vec![raw(&ga)]);
        let gb = [c.take(b, 0), c.take(b, 1)];
        slots.push(vec![raw(&gb)]);
        sent.push((slots.len() - 2, ga, slots.len() - 1, gb));
    }
    for (&(a, b), (ta, ga, tb, gb)) in pairs.iter().zip(&sent) {
        slots.push(vec![res(b, *ta, ga), res(a, *tb, gb)]);
    }
    finish(scheme, k, 2, slots)
}
