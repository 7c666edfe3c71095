//! Monte-Carlo checks: decode success, conditioning, and DoF as the slope of
//! sum rate against `log2 P`.

use num_rational::Rational64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelProcess, NoiseConfig, PowerConfig};
use crate::csit::CsitPattern;
use crate::error::{Error, Result};
use crate::rng::{substream, tag};
use crate::schemes::{
    build_plan, build_plan_from_layout, condition_number, decode, decode_recipe, run, SchemeId,
    SymbolGrid,
};

/// Largest relative decoding error a noiseless trial may show.
pub const NOISELESS_TOL: f64 = 1e-8;
/// A noisy estimate counts as correct within this many standard deviations
/// of its estimation error.
pub const NOISY_SIGMAS: f64 = 6.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub scheme: SchemeId,
    /// Pattern the plans were built under.
    pub pattern: CsitPattern,
    pub seed: u64,
    pub noise_variance: f64,
    pub trials: usize,
    /// Trials in which every receiver recovered every desired symbol.
    pub successes: usize,
    /// Largest `|s_hat - s| / |s|` over receivers and trials, vectors taken
    /// per receiver.
    pub max_residual: f64,
    /// `(p50, p95, max)` of the per-receiver condition numbers.
    pub condition_quantiles: (f64, f64, f64),
    /// Receiver decodes that reported unresolvable symbols.
    pub identifiability_failures: usize,
    /// Receiver decodes where the subtraction recipe disagreed with the
    /// generic solver (noiseless runs only).
    pub recipe_mismatches: usize,
    /// Plans that failed to build; any nonzero count is a defect.
    pub plan_failures: usize,
}

impl TrialReport {
    pub fn success_rate(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }

    /// True when nothing that should never happen did.
    pub fn clean(&self) -> bool {
        self.identifiability_failures == 0 && self.recipe_mismatches == 0 && self.plan_failures == 0
    }
}

#[derive(Default)]
struct TrialOutcome {
    success: bool,
    residual: f64,
    conds: Vec<f64>,
    not_identifiable: usize,
    recipe_mismatch: usize,
    plan_failed: bool,
}

/// Seed of trial `k`; drives its channel and symbols.
pub fn trial_seed(seed: u64, k: usize) -> u64 {
    substream(seed, &[tag::TRIAL, k as u64])
}

fn one_trial(id: SchemeId, pattern: &CsitPattern, noise: &NoiseConfig, seed: u64) -> TrialOutcome {
    let mut out = TrialOutcome::default();
    let built = (|| {
        let layout = id.layout()?;
        let (n_rx, n_tx) = id.dims();
        let channel = ChannelProcess::sample(n_rx, n_tx, layout.n_slots(), seed)?;
        let symbols = SymbolGrid::random(layout.symbols(), seed);
        let plan = build_plan(id, pattern, &channel, &symbols)?;
        let ledger = run(&plan, &channel, noise)?;
        Ok::<_, Error>((channel, plan, ledger))
    })();
    let Ok((channel, plan, ledger)) = built else {
        out.plan_failed = true;
        return out;
    };
    let sigma = noise.variance().sqrt();
    out.success = true;
    for rx in 0..plan.n_rx() {
        if let Ok(c) = condition_number(&plan, &channel, rx) {
            out.conds.push(c);
        }
        let d = match decode(&ledger, rx, &plan, &channel) {
            Ok(d) => d,
            Err(_) => {
                out.not_identifiable += 1;
                out.success = false;
                continue;
            }
        };
        let truth: Vec<_> = d
            .symbols
            .iter()
            .map(|s| plan.symbols().get(*s).expect("decoded symbols exist"))
            .collect();
        let err2: f64 = d.values.iter().zip(&truth).map(|(a, b)| (a - b).norm_sqr()).sum();
        let ref2: f64 = truth.iter().map(|b| b.norm_sqr()).sum();
        if ref2 > 0.0 {
            out.residual = out.residual.max((err2 / ref2).sqrt());
        }
        let ok = if noise.enabled() {
            d.values
                .iter()
                .zip(&truth)
                .zip(&d.noise_gain)
                .all(|((a, b), g)| (a - b).norm() <= NOISY_SIGMAS * sigma * g.sqrt())
        } else {
            ref2 == 0.0 || (err2 / ref2).sqrt() <= NOISELESS_TOL
        };
        out.success &= ok;
        if !noise.enabled() {
            let agree = decode_recipe(&ledger, rx, &plan, &channel).is_ok_and(|r| {
                let diff: f64 = r.values.iter().zip(&d.values).map(|(a, b)| (a - b).norm_sqr()).sum();
                ref2 == 0.0 || (diff / ref2).sqrt() <= NOISELESS_TOL
            });
            if !agree {
                out.recipe_mismatch += 1;
            }
        }
    }
    out
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let k = ((sorted.len() - 1) as f64 * p).round() as usize;
    sorted[k]
}

/// Runs `trials` independent seeded trials of `scheme` under its minimal
/// CSIT pattern. Trials run in parallel; the report depends only on the
/// arguments.
pub fn run_trials(scheme: SchemeId, trials: usize, noise: &NoiseConfig, seed: u64) -> Result<TrialReport> {
    let pattern = scheme.validate()?.minimal_pattern()?;
    run_trials_under(scheme, &pattern, trials, noise, seed)
}

/// [`run_trials`] under a given pattern, which must dominate the scheme's
/// minimal pattern.
pub fn run_trials_under(
    scheme: SchemeId,
    pattern: &CsitPattern,
    trials: usize,
    noise: &NoiseConfig,
    seed: u64,
) -> Result<TrialReport> {
    if trials == 0 {
        return Err(Error::dim("trials must be at least 1"));
    }
    let minimal = scheme.validate()?.minimal_pattern()?;
    if !pattern.dominates(&minimal) {
        return Err(Error::PatternMismatch {
            scheme: scheme.to_string(),
            pattern: pattern.to_string(),
            required: minimal.to_string(),
        });
    }
    let outcomes: Vec<TrialOutcome> = (0..trials)
        .into_par_iter()
        .map(|k| one_trial(scheme, pattern, noise, trial_seed(seed, k)))
        .collect();
    let mut conds: Vec<f64> = outcomes.iter().flat_map(|o| o.conds.iter().copied()).collect();
    conds.sort_by(f64::total_cmp);
    Ok(TrialReport {
        scheme,
        pattern: pattern.clone(),
        seed,
        noise_variance: noise.variance(),
        trials,
        successes: outcomes.iter().filter(|o| o.success).count(),
        max_residual: outcomes.iter().map(|o| o.residual).fold(0.0, f64::max),
        condition_quantiles: (
            quantile(&conds, 0.5),
            quantile(&conds, 0.95),
            conds.last().copied().unwrap_or(f64::NAN),
        ),
        identifiability_failures: outcomes.iter().map(|o| o.not_identifiable).sum(),
        recipe_mismatches: outcomes.iter().map(|o| o.recipe_mismatch).sum(),
        plan_failures: outcomes.iter().filter(|o| o.plan_failed).count(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeEstimate {
    pub scheme: SchemeId,
    pub seed: u64,
    pub trials_per_point: usize,
    /// `(P, mean sum rate in bits per slot)`.
    pub snr_points: Vec<(f64, f64)>,
    /// Standard deviation of the per-trial sum rate at each point.
    pub rate_std: Vec<f64>,
    pub slope: f64,
    pub r_squared: f64,
    /// How many of the highest-power points entered the fit.
    pub fit_points: usize,
}

/// Checks a power sweep: at least three positive, strictly increasing
/// points covering at least three decades.
pub fn check_sweep(powers: &[f64]) -> Result<()> {
    if powers.len() < 3 {
        return Err(Error::InvalidSweep(format!("need at least 3 points, got {}", powers.len())));
    }
    if powers.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
        return Err(Error::InvalidSweep("powers must be positive and finite".into()));
    }
    if powers.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidSweep("powers must be strictly increasing".into()));
    }
    if powers[powers.len() - 1] / powers[0] < 1e3 * (1.0 - 1e-12) {
        return Err(Error::InvalidSweep("sweep must span at least 3 decades".into()));
    }
    Ok(())
}

/// Least-squares line through `(x, y)`; returns `(slope, r_squared)`.
pub fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    (slope, r2)
}

/// Noise gains of every desired stream in one trial with unit transmit
/// power and normalized precoders; `None` if some receiver cannot decode.
fn stream_gains(id: SchemeId, seed: u64) -> Result<Option<Vec<f64>>> {
    let layout = id.layout()?;
    let (n_rx, n_tx) = id.dims();
    let channel = ChannelProcess::sample(n_rx, n_tx, layout.n_slots(), seed)?;
    let symbols = SymbolGrid::random(layout.symbols(), seed);
    let unit = PowerConfig::new(1.0, true)?;
    let plan = build_plan_from_layout(&layout, &layout.minimal_pattern(), &channel, &symbols, Some(&unit))?;
    let ledger = run(&plan, &channel, &NoiseConfig::noiseless())?;
    let mut gains = Vec::new();
    for rx in 0..n_rx {
        match decode(&ledger, rx, &plan, &channel) {
            Ok(d) => gains.extend(d.noise_gain),
            Err(Error::NotIdentifiable(_)) => return Ok(None),
            Err(e) => return Err(e),
        }
    }
    Ok(Some(gains))
}

/// Estimates the DoF of `scheme` as the slope of mean sum rate against
/// `log2 P`.
///
/// Each trial draws one channel and reuses it at every power, so all points
/// share their randomness. Per stream, the rate is `log2(1 + P / g)` with
/// `g` the stream's noise gain under unit power and unit noise; the sum
/// over streams is divided by the slot count. If the fit over all points
/// has `r^2 < 0.99`, only the three highest powers are fitted.
pub fn rate_slope(scheme: SchemeId, powers: &[f64], trials_per_point: usize, seed: u64) -> Result<SlopeEstimate> {
    check_sweep(powers)?;
    if trials_per_point == 0 {
        return Err(Error::dim("trials_per_point must be at least 1"));
    }
    let slots = scheme.n_slots()? as f64;
    let gains: Vec<Vec<f64>> = (0..trials_per_point)
        .into_par_iter()
        .map(|k| stream_gains(scheme, trial_seed(seed, k)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .map(|g| g.ok_or_else(|| Error::NotIdentifiable(Vec::new())))
        .collect::<Result<_>>()?;

    let mut snr_points = Vec::with_capacity(powers.len());
    let mut rate_std = Vec::with_capacity(powers.len());
    for &p in powers {
        let rates: Vec<f64> = gains
            .iter()
            .map(|g| g.iter().map(|gk| (1.0 + p / gk).log2()).sum::<f64>() / slots)
            .collect();
        let n = rates.len() as f64;
        let mean = rates.iter().sum::<f64>() / n;
        let var = rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        snr_points.push((p, mean));
        rate_std.push(var.sqrt());
    }
    let x: Vec<f64> = powers.iter().map(|p| p.log2()).collect();
    let y: Vec<f64> = snr_points.iter().map(|p| p.1).collect();
    let (mut slope, mut r_squared) = fit_line(&x, &y);
    let mut fit_points = x.len();
    if r_squared < 0.99 {
        let k = x.len() - 3;
        (slope, r_squared) = fit_line(&x[k..], &y[k..]);
        fit_points = 3;
    }
    Ok(SlopeEstimate {
        scheme,
        seed,
        trials_per_point,
        snr_points,
        rate_std,
        slope,
        r_squared,
        fit_points,
    })
}

/// Sum DoF of the K-user scheme next to the best known delayed-CSIT bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Baseline {
    pub k: usize,
    /// `2K / (K + 1)`.
    pub scheme: Rational64,
    /// `4/3 - 2 / (3 (3K - 1))`.
    pub delayed: Rational64,
}

pub fn compare_baselines(k: usize) -> Result<Baseline> {
    if k < 2 {
        return Err(Error::InvalidScheme(format!("K = {k}, need K >= 2")));
    }
    let ki = k as i64;
    Ok(Baseline {
        k,
        scheme: Rational64::new(2 * ki, ki + 1),
        delayed: Rational64::new(4, 3) - Rational64::new(2, 3 * (3 * ki - 1)),
    })
}
