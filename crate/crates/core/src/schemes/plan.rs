use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Component, Layout, SchemeId, SymbolGrid, SymbolId};
use crate::channel::{ChannelProcess, PowerConfig};
use crate::csit::{CsitPattern, CsitView, Grant, Timing};
use crate::error::{Error, Result};

/// One granted coefficient inside a precoder, possibly inverted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    pub grant: Grant,
    pub inverse: bool,
}

impl Factor {
    fn value(&self) -> Complex64 {
        if self.inverse {
            self.grant.value.inv()
        } else {
            self.grant.value
        }
    }
}

/// `coeff * symbol` inside one transmitter's signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub symbol: SymbolId,
    #[serde(with = "crate::serde_complex")]
    pub coeff: Complex64,
    /// Every coefficient read to form `coeff`; their product is `coeff`.
    pub provenance: Vec<Factor>,
}

impl Term {
    /// Symbolic form of the coefficient, e.g. `h[1,1]^-1(2)*h[1,1](1)`, with
    /// 1-based receiver, transmitter and slot numbers. Raw symbols give `1`.
    pub fn coeff_expr(&self) -> String {
        if self.provenance.is_empty() {
            return "1".into();
        }
        self.provenance
            .iter()
            .map(|f| {
                let g = &f.grant;
                let inv = if f.inverse { "^-1" } else { "" };
                format!("h[{},{}]{inv}({})", g.rx + 1, g.tx + 1, g.slot + 1)
            })
            .collect::<Vec<_>>()
            .join("*")
    }
}

/// Per-slot, per-transmitter linear combinations of data symbols.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmitPlan {
    layout: Layout,
    symbols: SymbolGrid,
    // terms[t][tx]
    terms: Vec<Vec<Vec<Term>>>,
    // common amplitude applied to every transmitter in slot t
    scale: Vec<f64>,
}

/// Builds the plan of a named scheme with unit power and no precoder
/// normalization.
pub fn build_plan(
    scheme: SchemeId,
    pattern: &CsitPattern,
    channel: &ChannelProcess,
    symbols: &SymbolGrid,
) -> Result<TransmitPlan> {
    build_plan_from_layout(&scheme.layout()?, pattern, channel, symbols, None)
}

/// Builds the plan of any layout.
///
/// With a [`PowerConfig`], every transmitter in slot `t` is scaled by the
/// same `beta(t)`: `sqrt(P)`, or with normalization `sqrt(P / max_j e_j)`
/// where `e_j` is transmitter `j`'s precoder energy. A common factor keeps
/// resurrected terms aligned with the interference they replay.
pub fn build_plan_from_layout(
    layout: &Layout,
    pattern: &CsitPattern,
    channel: &ChannelProcess,
    symbols: &SymbolGrid,
    power: Option<&PowerConfig>,
) -> Result<TransmitPlan> {
    let required = layout.minimal_pattern();
    let name = layout
        .scheme()
        .map_or_else(|| "custom layout".to_string(), |s| s.to_string());
    if pattern.n_rx() != required.n_rx()
        || pattern.n_slots() != required.n_slots()
        || !pattern.dominates(&required)
    {
        return Err(Error::PatternMismatch {
            scheme: name,
            pattern: pattern.to_string(),
            required: required.to_string(),
        });
    }
    if channel.n_rx() != layout.n_rx()
        || channel.n_tx() != layout.n_tx()
        || channel.n_slots() < layout.n_slots()
    {
        return Err(Error::dim(format!(
            "{name} needs a {}x{} channel over {} slots, got {}x{} over {}",
            layout.n_rx(),
            layout.n_tx(),
            layout.n_slots(),
            channel.n_rx(),
            channel.n_tx(),
            channel.n_slots()
        )));
    }
    if symbols.ids() != layout.symbols() {
        return Err(Error::dim(format!(
            "{name} carries {} symbols, grid has {}",
            layout.symbols().len(),
            symbols.len()
        )));
    }

    let mut terms = Vec::with_capacity(layout.n_slots());
    for (t, comps) in layout.slots().iter().enumerate() {
        let mut per_tx = vec![Vec::new(); layout.n_tx()];
        for c in comps {
            for &s in c.symbols() {
                let term = match *c {
                    Component::Raw(_) => Term {
                        symbol: s,
                        coeff: Complex64::new(1.0, 0.0),
                        provenance: Vec::new(),
                    },
                    Component::Resurrect { rx, from, .. } => {
                        let view = CsitView::new(pattern, channel, s.tx, t)?;
                        let provenance = vec![
                            Factor {
                                grant: view.query(rx, t)?,
                                inverse: true,
                            },
                            Factor {
                                grant: view.query(rx, from)?,
                                inverse: false,
                            },
                        ];
                        Term {
                            symbol: s,
                            coeff: provenance.iter().map(Factor::value).product(),
                            provenance,
                        }
                    }
                };
                per_tx[s.tx].push(term);
            }
        }
        terms.push(per_tx);
    }

    let scale = terms
        .iter()
        .map(|per_tx| match power {
            None => 1.0,
            Some(p) if !p.normalize_precoders() => p.power().sqrt(),
            Some(p) => {
                let peak = per_tx
                    .iter()
                    .map(|ts| ts.iter().map(|x| x.coeff.norm_sqr()).sum::<f64>())
                    .fold(0.0, f64::max);
                if peak > 0.0 {
                    (p.power() / peak).sqrt()
                } else {
                    p.power().sqrt()
                }
            }
        })
        .collect();

    Ok(TransmitPlan {
        layout: layout.clone(),
        symbols: symbols.clone(),
        terms,
        scale,
    })
}

impl TransmitPlan {
    /// A plan with no slots.
    pub fn empty(n_rx: usize, n_tx: usize) -> Result<Self> {
        Ok(TransmitPlan {
            layout: Layout::new(None, n_rx, n_tx, Vec::new(), Vec::new())?,
            symbols: SymbolGrid::from_values(Vec::new())?,
            terms: Vec::new(),
            scale: Vec::new(),
        })
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn scheme(&self) -> Option<SchemeId> {
        self.layout.scheme()
    }

    pub fn symbols(&self) -> &SymbolGrid {
        &self.symbols
    }

    pub fn n_rx(&self) -> usize {
        self.layout.n_rx()
    }

    pub fn n_tx(&self) -> usize {
        self.layout.n_tx()
    }

    pub fn n_slots(&self) -> usize {
        self.terms.len()
    }

    /// Terms transmitter `tx` sends in slot `t`, before the slot scale.
    pub fn terms(&self, t: usize, tx: usize) -> &[Term] {
        &self.terms[t][tx]
    }

    pub fn scale(&self, t: usize) -> f64 {
        self.scale[t]
    }

    /// Every term of every slot and transmitter, with its slot.
    pub fn all_terms(&self) -> impl Iterator<Item = (usize, &Term)> {
        self.terms
            .iter()
            .enumerate()
            .flat_map(|(t, per_tx)| per_tx.iter().flatten().map(move |x| (t, x)))
    }

    /// The signals `X_j(t)` for all transmitters.
    pub fn transmit(&self, t: usize) -> Vec<Complex64> {
        self.terms[t]
            .iter()
            .map(|ts| {
                ts.iter()
                    .map(|x| x.coeff * self.symbols.get(x.symbol).expect("grid matches layout"))
                    .sum::<Complex64>()
                    * self.scale[t]
            })
            .collect()
    }

    /// Energy `sum |coeff|^2 * scale^2` each transmitter spends in slot `t`.
    pub fn precoder_energy(&self, t: usize) -> Vec<f64> {
        self.terms[t]
            .iter()
            .map(|ts| ts.iter().map(|x| x.coeff.norm_sqr()).sum::<f64>() * self.scale[t].powi(2))
            .collect()
    }

    /// The first `n_slots` slots of the plan.
    pub fn truncated(&self, n_slots: usize) -> TransmitPlan {
        let n = n_slots.min(self.n_slots());
        TransmitPlan {
            layout: self.layout.truncated(n),
            symbols: self.symbols.clone(),
            terms: self.terms[..n].to_vec(),
            scale: self.scale[..n].to_vec(),
        }
    }

    /// `X_j(t)` as text, e.g. `h[1,1]^-1(2)*h[1,1](1)*s[R2,T1]#1`; `0` when
    /// the transmitter is silent.
    pub fn expr(&self, t: usize, tx: usize) -> String {
        let ts = &self.terms[t][tx];
        if ts.is_empty() {
            return "0".into();
        }
        ts.iter()
            .map(|x| match x.coeff_expr().as_str() {
                "1" => x.symbol.to_string(),
                e => format!("{e}*{}", x.symbol),
            })
            .collect::<Vec<_>>()
            .join(" + ")
    }

    /// Line-oriented dump: a header, then one record per slot and
    /// transmitter followed by one indented line per term.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let name = self
            .scheme()
            .map_or_else(|| "custom".to_string(), |s| s.to_string());
        let _ = writeln!(
            out,
            "plan {name} rx={} tx={} slots={} symbols={}",
            self.n_rx(),
            self.n_tx(),
            self.n_slots(),
            self.symbols.len()
        );
        for t in 0..self.n_slots() {
            for tx in 0..self.n_tx() {
                let _ = writeln!(
                    out,
                    "slot {} tx {} scale {:.12e} x = {}",
                    t + 1,
                    tx + 1,
                    self.scale[t],
                    self.expr(t, tx)
                );
                for x in &self.terms[t][tx] {
                    let timing = x
                        .provenance
                        .iter()
                        .map(|f| match f.grant.timing {
                            Timing::Instantaneous => "P",
                            Timing::Delayed => "D",
                        })
                        .collect::<String>();
                    let _ = writeln!(
                        out,
                        "  {} coeff {:+.12e} {:+.12e}i from {} via [{}]",
                        x.symbol,
                        x.coeff.re,
                        x.coeff.im,
                        x.coeff_expr(),
                        timing
                    );
                }
            }
        }
        out
    }
}
