use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{ReceiverLedger, SymbolId, TransmitPlan};
use crate::channel::ChannelProcess;
use crate::error::{Error, Result};

/// Singular values below this fraction of the largest count as zero.
pub const RANK_TOL: f64 = 1e-9;
/// Largest null-space weight a desired coordinate may carry and still count
/// as identifiable.
pub const NULL_TOL: f64 = 1e-6;

type CMat = DMatrix<Complex64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decoded {
    pub rx: usize,
    pub symbols: Vec<SymbolId>,
    #[serde(with = "crate::serde_complex::vec")]
    pub values: Vec<Complex64>,
    /// `|w_k|^2` for the linear estimator `w_k` of each symbol: the
    /// estimation-error variance per unit of receiver noise variance.
    pub noise_gain: Vec<f64>,
}

impl Decoded {
    pub fn get(&self, id: SymbolId) -> Option<Complex64> {
        self.symbols.iter().position(|s| *s == id).map(|k| self.values[k])
    }
}

/// The linear map from every symbol of `plan` to receiver `rx`'s received
/// scalars, one row per slot; columns follow `plan.symbols().ids()`.
pub fn receiver_map(plan: &TransmitPlan, channel: &ChannelProcess, rx: usize) -> Result<CMat> {
    check(plan, channel, rx)?;
    let ids = plan.symbols().ids();
    let mut a = CMat::zeros(plan.n_slots(), ids.len());
    for t in 0..plan.n_slots() {
        for tx in 0..plan.n_tx() {
            let h = channel.h(rx, tx, t) * plan.scale(t);
            for term in plan.terms(t, tx) {
                let k = ids.binary_search(&term.symbol).expect("plan symbols are in its grid");
                a[(t, k)] += h * term.coeff;
            }
        }
    }
    Ok(a)
}

fn check(plan: &TransmitPlan, channel: &ChannelProcess, rx: usize) -> Result<()> {
    if rx >= plan.n_rx() {
        return Err(Error::dim(format!("no receiver {rx}")));
    }
    if plan.n_rx() != channel.n_rx()
        || plan.n_tx() != channel.n_tx()
        || plan.n_slots() > channel.n_slots()
    {
        return Err(Error::dim("plan and channel dimensions differ"));
    }
    Ok(())
}

fn columns(plan: &TransmitPlan, rx: usize) -> (Vec<usize>, Vec<usize>) {
    (0..plan.symbols().len()).partition(|&k| plan.symbols().ids()[k].rx == rx)
}

fn select_cols(a: &CMat, cols: &[usize]) -> CMat {
    CMat::from_fn(a.nrows(), cols.len(), |i, j| a[(i, cols[j])])
}

fn select_rows(a: &CMat, rows: &[usize]) -> CMat {
    CMat::from_fn(rows.len(), a.ncols(), |i, j| a[(rows[i], j)])
}

/// Pseudo-inverse and spectrum of a complex matrix. The SVD comes from
/// faer; nalgebra's SVD loses digits on some of these structured maps.
struct Pinv {
    /// `A^+`, `ncols x nrows`.
    pinv: CMat,
    /// Singular values of `A`, descending.
    sigma: Vec<f64>,
    rank: usize,
    /// `(A^+ A)_kk`: how much of `e_k` lies in the row space.
    row_weight: Vec<f64>,
}

fn pinv(a: &CMat) -> Pinv {
    let (m, n) = (a.nrows(), a.ncols());
    let empty = || Pinv {
        pinv: CMat::zeros(n, m),
        sigma: vec![0.0; m.min(n)],
        rank: 0,
        row_weight: vec![0.0; n],
    };
    if m == 0 || n == 0 {
        return empty();
    }
    let f = faer::Mat::<Complex64>::from_fn(m, n, |i, j| a[(i, j)]);
    let Ok(svd) = f.thin_svd() else {
        return empty();
    };
    let (u, v, s) = (svd.U(), svd.V(), svd.S().column_vector());
    let sigma: Vec<f64> = (0..m.min(n)).map(|i| s[i].re).collect();
    let max = sigma.iter().copied().fold(0.0, f64::max);
    let rank = sigma.iter().filter(|&&x| x > RANK_TOL * max && x > 0.0).count();
    let p = CMat::from_fn(n, m, |i, j| {
        (0..rank).map(|r| v[(i, r)] * u[(j, r)].conj() / sigma[r]).sum()
    });
    let row_weight = (0..n)
        .map(|k| (0..rank).map(|r| v[(k, r)].norm_sqr()).sum())
        .collect();
    Pinv {
        pinv: p,
        sigma,
        rank,
        row_weight,
    }
}

/// Numerical rank with the decoder's threshold.
pub fn rank(a: &CMat) -> usize {
    pinv(a).rank
}

/// Recovers receiver `rx`'s symbols from its ledger entries.
///
/// Builds the map from all symbols to the received scalars, declares a
/// desired symbol identifiable iff its unit vector has no component in the
/// map's null space, and returns the minimum-norm solution on the desired
/// coordinates.
pub fn decode(
    ledger: &ReceiverLedger,
    rx: usize,
    plan: &TransmitPlan,
    channel: &ChannelProcess,
) -> Result<Decoded> {
    let full = receiver_map(plan, channel, rx)?;
    if rx >= ledger.n_rx() {
        return Err(Error::dim(format!("ledger has no receiver {rx}")));
    }
    let entries = ledger.entries(rx);
    let rows: Vec<usize> = entries.iter().map(|e| e.slot).collect();
    if rows.iter().any(|&t| t >= plan.n_slots()) {
        return Err(Error::dim("ledger slot beyond the plan"));
    }
    let a = select_rows(&full, &rows);
    let y = CMat::from_fn(entries.len(), 1, |i, _| entries[i].value);
    let (desired, _) = columns(plan, rx);
    let ids = plan.symbols().ids();

    let s = pinv(&a);
    let bad: Vec<SymbolId> = desired
        .iter()
        .filter(|&&k| 1.0 - s.row_weight[k] > NULL_TOL)
        .map(|&k| ids[k])
        .collect();
    if !bad.is_empty() {
        return Err(Error::NotIdentifiable(bad));
    }

    let mut values = Vec::with_capacity(desired.len());
    let mut noise_gain = Vec::with_capacity(desired.len());
    for &k in &desired {
        let w = s.pinv.row(k);
        values.push((0..a.nrows()).map(|r| w[r] * y[(r, 0)]).sum());
        noise_gain.push(w.iter().map(|z| z.norm_sqr()).sum());
    }
    Ok(Decoded {
        rx,
        symbols: desired.iter().map(|&k| ids[k]).collect(),
        values,
        noise_gain,
    })
}

/// Decodes by the subtraction recipe the layout implies: each entry that
/// replays an earlier slot's interference is differenced against that slot,
/// and every interference-free row that results is solved directly.
///
/// Agrees with [`decode`] whenever the recipe yields enough rows; used to
/// cross-check it.
pub fn decode_recipe(
    ledger: &ReceiverLedger,
    rx: usize,
    plan: &TransmitPlan,
    channel: &ChannelProcess,
) -> Result<Decoded> {
    let full = receiver_map(plan, channel, rx)?;
    if rx >= ledger.n_rx() {
        return Err(Error::dim(format!("ledger has no receiver {rx}")));
    }
    let entries = ledger.entries(rx);
    let n = entries.len();
    let rows: Vec<usize> = entries.iter().map(|e| e.slot).collect();
    let a = select_rows(&full, &rows);
    let (desired, interf) = columns(plan, rx);
    let ids = plan.symbols().ids();
    let a_d = select_cols(&a, &desired);
    let a_i = select_cols(&a, &interf);
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max);

    // candidate row combinations over the ledger entries
    let mut candidates: Vec<Vec<Complex64>> = Vec::new();
    for (r, e) in entries.iter().enumerate() {
        let mut unit = vec![Complex64::new(0.0, 0.0); n];
        unit[r] = Complex64::new(1.0, 0.0);
        candidates.push(unit.clone());
        let mut all = unit.clone();
        for &f in &e.resurrects {
            if let Some(rf) = entries.iter().position(|x| x.slot == f) {
                let c = Complex64::new(plan.scale(e.slot) / plan.scale(f), 0.0);
                let mut diff = unit.clone();
                diff[rf] -= c;
                all[rf] -= c;
                candidates.push(diff);
            }
        }
        if e.resurrects.len() > 1 {
            candidates.push(all);
        }
    }

    let apply = |tau: &[Complex64], m: &CMat| -> Vec<Complex64> {
        (0..m.ncols())
            .map(|j| (0..n).map(|r| tau[r] * m[(r, j)]).sum())
            .collect()
    };
    let mut chosen: Vec<Vec<Complex64>> = Vec::new();
    let mut chosen_d: Vec<Vec<Complex64>> = Vec::new();
    // orthonormal basis of the chosen desired rows
    let mut basis: Vec<Vec<Complex64>> = Vec::new();
    for tau in candidates {
        if chosen.len() == desired.len() {
            break;
        }
        let weight: f64 = tau.iter().map(|z| z.norm()).sum();
        let tol = RANK_TOL * scale.max(f64::MIN_POSITIVE) * weight;
        let ri = apply(&tau, &a_i);
        let rd = apply(&tau, &a_d);
        if ri.iter().any(|z| z.norm() > tol) || rd.iter().all(|z| z.norm() <= tol) {
            continue;
        }
        let norm = |v: &[Complex64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let mut resid = rd.clone();
        for _ in 0..2 {
            for b in &basis {
                let dot: Complex64 = b.iter().zip(&resid).map(|(x, y)| x.conj() * y).sum();
                for (r, x) in resid.iter_mut().zip(b) {
                    *r -= dot * x;
                }
            }
        }
        let left = norm(&resid);
        if left > RANK_TOL * norm(&rd) {
            basis.push(resid.iter().map(|z| z / left).collect());
            chosen.push(tau);
            chosen_d.push(rd);
        }
    }
    if chosen.len() < desired.len() {
        let m = CMat::from_fn(chosen_d.len(), desired.len(), |i, j| chosen_d[i][j]);
        let s = pinv(&m);
        let bad = desired
            .iter()
            .enumerate()
            .filter(|&(j, _)| 1.0 - s.row_weight[j] > NULL_TOL)
            .map(|(_, &k)| ids[k])
            .collect();
        return Err(Error::NotIdentifiable(bad));
    }

    let d = desired.len();
    let m = CMat::from_fn(d, d, |i, j| chosen_d[i][j]);
    let t = CMat::from_fn(d, n, |i, r| chosen[i][r]);
    let inv = m
        .try_inverse()
        .ok_or_else(|| Error::NotIdentifiable(desired.iter().map(|&k| ids[k]).collect()))?;
    let w = inv * t;
    let y = CMat::from_fn(n, 1, |i, _| entries[i].value);
    let x = &w * y;
    Ok(Decoded {
        rx,
        symbols: desired.iter().map(|&k| ids[k]).collect(),
        values: x.iter().copied().collect(),
        noise_gain: (0..d)
            .map(|k| w.row(k).iter().map(|z| z.norm_sqr()).sum())
            .collect(),
    })
}

/// Rank of the columns of undesired symbols in receiver `rx`'s map.
pub fn interference_rank(plan: &TransmitPlan, channel: &ChannelProcess, rx: usize) -> Result<usize> {
    let a = receiver_map(plan, channel, rx)?;
    let (_, interf) = columns(plan, rx);
    Ok(rank(&select_cols(&a, &interf)))
}

/// Condition number of receiver `rx`'s effective desired system: the ratio
/// of extreme singular values of the desired columns after projecting out
/// the interference subspace. Infinite when the projected system is rank
/// deficient.
pub fn condition_number(plan: &TransmitPlan, channel: &ChannelProcess, rx: usize) -> Result<f64> {
    let a = receiver_map(plan, channel, rx)?;
    let (desired, interf) = columns(plan, rx);
    if desired.is_empty() {
        return Ok(1.0);
    }
    let a_d = select_cols(&a, &desired);
    let a_i = select_cols(&a, &interf);
    let proj = &a_d - &a_i * (pinv(&a_i).pinv * &a_d);
    if proj.nrows() < proj.ncols() {
        return Ok(f64::INFINITY);
    }
    let s = pinv(&proj);
    let max = s.sigma.iter().copied().fold(0.0, f64::max);
    let min = s.sigma.iter().copied().fold(f64::INFINITY, f64::min);
    if s.rank < desired.len() || min <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(max / min)
}
