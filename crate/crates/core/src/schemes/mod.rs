//! Two-phase transmission schemes: interference creation, then resurrection.
//!
//! Each scheme is a [`Layout`]. [`build_plan`] turns a layout into explicit
//! per-transmitter coefficients, reading channel knowledge only through
//! [`crate::csit::CsitView`]; [`run`] pushes the plan through the channel and
//! [`decode`] recovers each receiver's symbols.

mod decode;
mod layout;
mod plan;
mod run;
mod timeshare;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use num_rational::Rational64;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::csit::CsitPattern;
use crate::error::{Error, Result};
use crate::rng::{stream_rng, tag};

pub use decode::{
    condition_number, decode, decode_recipe, interference_rank, receiver_map, Decoded,
};
pub use layout::{Component, Layout};
pub use plan::{build_plan, build_plan_from_layout, Factor, Term, TransmitPlan};
pub use run::{run, run_with_stream, Annotation, LedgerEntry, ReceiverLedger};
pub use timeshare::{time_share, Strategy};

/// The `m`-th symbol transmitter `tx` holds for receiver `rx` (all 0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SymbolId {
    pub rx: usize,
    pub tx: usize,
    pub index: usize,
}

impl fmt::Display for SymbolId {
    // 1-based, as receivers and transmitters are usually numbered
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s[R{},T{}]#{}", self.rx + 1, self.tx + 1, self.index + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SchemeId {
    Scheme1,
    Scheme1M,
    Scheme2,
    Scheme2M,
    Scheme3,
    Scheme3M,
    ThreeUser,
    KUser(usize),
    Kx2(usize),
    TwoXK(usize),
}

impl SchemeId {
    pub fn validate(self) -> Result<Self> {
        match self {
            SchemeId::KUser(k) | SchemeId::Kx2(k) | SchemeId::TwoXK(k) if k < 2 => Err(
                Error::InvalidScheme(format!("{self} needs K >= 2")),
            ),
            _ => Ok(self),
        }
    }

    /// Network size `(receivers, transmitters)`.
    pub fn dims(self) -> (usize, usize) {
        match self {
            SchemeId::ThreeUser => (3, 3),
            SchemeId::KUser(k) => (k, k),
            SchemeId::Kx2(k) => (2, k),
            SchemeId::TwoXK(k) => (k, 2),
            _ => (2, 2),
        }
    }

    pub fn layout(self) -> Result<Layout> {
        self.validate()?;
        Ok(match self {
            SchemeId::ThreeUser => layout::k_user(self, 3),
            SchemeId::KUser(k) => layout::k_user(self, k),
            SchemeId::Kx2(k) => layout::k_by_two(self, k),
            SchemeId::TwoXK(k) => layout::two_by_k(self, k),
            _ => layout::two_user(self),
        })
    }

    /// Least CSIT pattern the scheme runs under.
    pub fn minimal_pattern(self) -> Result<CsitPattern> {
        Ok(self.layout()?.minimal_pattern())
    }

    /// Number of slots one run of the scheme occupies.
    pub fn n_slots(self) -> Result<usize> {
        Ok(self.layout()?.n_slots())
    }

    /// Symbols delivered per slot, computed from the layout.
    pub fn dof_count(self) -> Result<Rational64> {
        let l = self.layout()?;
        Ok(Rational64::new(l.symbols().len() as i64, l.n_slots() as i64))
    }

    /// For the two-user schemes, the DoF delivered on each message
    /// `(W11, W12, W21, W22)`, where `Wij` goes from transmitter `j` to
    /// receiver `i`.
    pub fn message_dof(self) -> Result<[Rational64; 4]> {
        if self.dims() != (2, 2) {
            return Err(Error::InvalidScheme(format!("{self} is not a 2x2 scheme")));
        }
        let l = self.layout()?;
        let slots = l.n_slots() as i64;
        let mut out = [Rational64::from_integer(0); 4];
        for s in l.symbols() {
            out[2 * s.rx + s.tx] += Rational64::new(1, slots);
        }
        Ok(out)
    }

    /// The row name a two-user scheme carries in the classification table,
    /// where each mirrored variant is listed under its unmirrored scheme.
    pub fn table_label(self) -> SchemeId {
        match self {
            SchemeId::Scheme1M => SchemeId::Scheme1,
            SchemeId::Scheme2M => SchemeId::Scheme2,
            SchemeId::Scheme3M => SchemeId::Scheme3,
            other => other,
        }
    }

    pub fn is_mirrored(self) -> bool {
        matches!(self, SchemeId::Scheme1M | SchemeId::Scheme2M | SchemeId::Scheme3M)
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchemeId::Scheme1 => f.write_str("scheme1"),
            SchemeId::Scheme1M => f.write_str("scheme1m"),
            SchemeId::Scheme2 => f.write_str("scheme2"),
            SchemeId::Scheme2M => f.write_str("scheme2m"),
            SchemeId::Scheme3 => f.write_str("scheme3"),
            SchemeId::Scheme3M => f.write_str("scheme3m"),
            SchemeId::ThreeUser => f.write_str("three-user"),
            SchemeId::KUser(k) => write!(f, "k-user:{k}"),
            SchemeId::Kx2(k) => write!(f, "kx2:{k}"),
            SchemeId::TwoXK(k) => write!(f, "2xk:{k}"),
        }
    }
}

impl FromStr for SchemeId {
    type Err = Error;

    /// Accepts the display form, case-insensitively; `kuser:K`,
    /// `Kx2` forms such as `3x2`, and `2xK` forms such as `2x4` also parse.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse {
            what: "scheme",
            detail: format!("unknown scheme `{s}`"),
        };
        let k = |v: &str| v.trim().parse::<usize>().map_err(|_| bad());
        let t = s.trim().to_ascii_lowercase();
        let id = match t.as_str() {
            "scheme1" => SchemeId::Scheme1,
            "scheme1m" => SchemeId::Scheme1M,
            "scheme2" => SchemeId::Scheme2,
            "scheme2m" => SchemeId::Scheme2M,
            "scheme3" => SchemeId::Scheme3,
            "scheme3m" => SchemeId::Scheme3M,
            "three-user" | "threeuser" => SchemeId::ThreeUser,
            _ => {
                if let Some(v) = t.strip_prefix("k-user:").or_else(|| t.strip_prefix("kuser:")) {
                    SchemeId::KUser(k(v)?)
                } else if let Some(v) = t.strip_prefix("kx2:") {
                    SchemeId::Kx2(k(v)?)
                } else if let Some(v) = t.strip_prefix("2xk:") {
                    SchemeId::TwoXK(k(v)?)
                } else if let Some(v) = t.strip_prefix("2x") {
                    SchemeId::TwoXK(k(v)?)
                } else if let Some(v) = t.strip_suffix("x2") {
                    SchemeId::Kx2(k(v)?)
                } else {
                    return Err(bad());
                }
            }
        };
        id.validate()
    }
}

/// Symbol delivered per slot, as exact rational; same as
/// [`SchemeId::dof_count`].
pub fn dof_count(scheme: SchemeId) -> Result<Rational64> {
    scheme.dof_count()
}

/// The data symbols `s[i][j][m]` of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolGrid {
    ids: Vec<SymbolId>,
    #[serde(with = "crate::serde_complex::vec")]
    values: Vec<Complex64>,
}

impl SymbolGrid {
    /// i.i.d. `CN(0, 1)` values for the given ids, drawn from the seed's
    /// symbol stream.
    pub fn random(ids: &[SymbolId], seed: u64) -> Self {
        let mut ids = ids.to_vec();
        ids.sort();
        ids.dedup();
        let mut rng = stream_rng(seed, &[tag::SYMBOLS]);
        let values = ids
            .iter()
            .map(|_| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
            })
            .collect();
        SymbolGrid { ids, values }
    }

    /// Random symbols for every id the scheme uses.
    pub fn for_scheme(scheme: SchemeId, seed: u64) -> Result<Self> {
        Ok(Self::random(scheme.layout()?.symbols(), seed))
    }

    pub fn from_values(pairs: Vec<(SymbolId, Complex64)>) -> Result<Self> {
        let mut pairs = pairs;
        pairs.sort_by_key(|p| p.0);
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::dim("duplicate symbol id"));
        }
        let (ids, values) = pairs.into_iter().unzip();
        Ok(SymbolGrid { ids, values })
    }

    pub fn ids(&self) -> &[SymbolId] {
        &self.ids
    }

    pub fn get(&self, id: SymbolId) -> Option<Complex64> {
        self.ids.binary_search(&id).ok().map(|k| self.values[k])
    }

    /// Number of symbols transmitter `tx` holds for receiver `rx`.
    pub fn count(&self, rx: usize, tx: usize) -> usize {
        self.ids.iter().filter(|s| s.rx == rx && s.tx == tx).count()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}
