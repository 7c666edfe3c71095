use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Component, TransmitPlan};
use crate::channel::{ChannelProcess, NoiseConfig};
use crate::error::{Error, Result};

/// What a received scalar carries for the receiver that hears it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Annotation {
    /// Only the receiver's own symbols.
    Desired,
    /// Only other receivers' symbols.
    Interference,
    Mixed,
    /// Nothing was transmitted.
    Silent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub slot: usize,
    #[serde(with = "crate::serde_complex")]
    pub value: Complex64,
    pub annotation: Annotation,
    /// Earlier slots whose contribution of some group this entry replays.
    pub resurrects: Vec<usize>,
}

/// Everything each receiver heard, one entry per slot. Receivers know the
/// channel perfectly, so decoding also takes the [`ChannelProcess`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReceiverLedger {
    entries: Vec<Vec<LedgerEntry>>,
}

impl ReceiverLedger {
    pub fn n_rx(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self, rx: usize) -> &[LedgerEntry] {
        &self.entries[rx]
    }

    pub fn values(&self, rx: usize) -> Vec<Complex64> {
        self.entries[rx].iter().map(|e| e.value).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.iter().all(Vec::is_empty)
    }

    /// Keeps only the entries `keep` accepts. For probing decodability of
    /// partial observations.
    pub fn filtered(&self, rx: usize, keep: impl Fn(&LedgerEntry) -> bool) -> ReceiverLedger {
        let mut out = self.clone();
        out.entries[rx].retain(|e| keep(e));
        out
    }
}

/// Sends every slot of `plan` through `channel`. Noise draws are keyed on
/// stream 0; see [`run_with_stream`].
pub fn run(plan: &TransmitPlan, channel: &ChannelProcess, noise: &NoiseConfig) -> Result<ReceiverLedger> {
    run_with_stream(plan, channel, noise, 0)
}

pub fn run_with_stream(
    plan: &TransmitPlan,
    channel: &ChannelProcess,
    noise: &NoiseConfig,
    stream: u64,
) -> Result<ReceiverLedger> {
    if plan.n_rx() != channel.n_rx() || plan.n_tx() != channel.n_tx() {
        return Err(Error::dim(format!(
            "plan is {}x{}, channel is {}x{}",
            plan.n_rx(),
            plan.n_tx(),
            channel.n_rx(),
            channel.n_tx()
        )));
    }
    if plan.n_slots() > channel.n_slots() {
        return Err(Error::dim(format!(
            "plan spans {} slots, channel only {}",
            plan.n_slots(),
            channel.n_slots()
        )));
    }
    let mut entries = vec![Vec::with_capacity(plan.n_slots()); plan.n_rx()];
    for t in 0..plan.n_slots() {
        let y = channel.apply(&plan.transmit(t), t, noise, stream)?;
        let comps = plan.layout().slot(t);
        for (rx, yi) in y.into_iter().enumerate() {
            let (mut own, mut other) = (false, false);
            for s in comps.iter().flat_map(Component::symbols) {
                if s.rx == rx {
                    own = true;
                } else {
                    other = true;
                }
            }
            let annotation = match (own, other) {
                (true, false) => Annotation::Desired,
                (false, true) => Annotation::Interference,
                (true, true) => Annotation::Mixed,
                (false, false) => Annotation::Silent,
            };
            let resurrects = comps
                .iter()
                .filter_map(|c| match *c {
                    Component::Resurrect { rx: r, from, .. } if r == rx => Some(from),
                    _ => None,
                })
                .collect();
            entries[rx].push(LedgerEntry {
                slot: t,
                value: yi,
                annotation,
                resurrects,
            });
        }
    }
    Ok(ReceiverLedger { entries })
}
