//! Fast-fading channel realizations and the received-signal equation
//! `Y_i(t) = sum_j h_ij(t) X_j(t) + N_i(t)`.
//!
//! Coefficients are i.i.d. over receivers, transmitters and slots. The default
//! distribution is circularly symmetric complex Gaussian with unit variance;
//! any coefficient whose magnitude falls below [`MAGNITUDE_FLOOR`] is redrawn,
//! since the resurrection precoders divide by current coefficients.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, tag};

/// Coefficients with `|h|` below this are resampled.
pub const MAGNITUDE_FLOOR: f64 = 1e-6;

/// Distribution of a single fading coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Fading {
    /// `CN(0, 1)`.
    Gaussian,
    /// Uniform over the annulus `inner <= |h| <= outer` with uniform phase.
    /// Used to spot-check that results do not hinge on the Gaussian choice.
    Annulus { inner: f64, outer: f64 },
}

impl Fading {
    /// The unit-power annulus `0.5 <= |h| <= sqrt(1.75)`.
    pub fn unit_annulus() -> Self {
        Fading::Annulus {
            inner: 0.5,
            outer: 1.75f64.sqrt(),
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        match *self {
            Fading::Gaussian => {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
            }
            Fading::Annulus { inner, outer } => {
                let r2 = rng.random_range(inner * inner..=outer * outer);
                let phase = rng.random_range(0.0..std::f64::consts::TAU);
                Complex64::from_polar(r2.sqrt(), phase)
            }
        }
    }
}

/// Every coefficient `h_ij(t)` of a run. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelProcess {
    n_rx: usize,
    n_tx: usize,
    n_slots: usize,
    seed: u64,
    // index: (t * n_rx + i) * n_tx + j
    coeffs: Vec<Complex64>,
}

impl ChannelProcess {
    pub fn sample(n_rx: usize, n_tx: usize, n_slots: usize, seed: u64) -> Result<Self> {
        Self::sample_with(n_rx, n_tx, n_slots, seed, Fading::Gaussian)
    }

    pub fn sample_with(
        n_rx: usize,
        n_tx: usize,
        n_slots: usize,
        seed: u64,
        fading: Fading,
    ) -> Result<Self> {
        check_dims(n_rx, n_tx, n_slots)?;
        let mut rng = stream_rng(seed, &[tag::CHANNEL]);
        let coeffs = (0..n_rx * n_tx * n_slots)
            .map(|_| loop {
                let h = fading.draw(&mut rng);
                if h.norm() >= MAGNITUDE_FLOOR {
                    break h;
                }
            })
            .collect();
        Ok(ChannelProcess {
            n_rx,
            n_tx,
            n_slots,
            seed,
            coeffs,
        })
    }

    /// Builds a process from explicit coefficients laid out as
    /// `coeffs[t][i][j]` flattened. Useful for fixtures.
    pub fn from_coefficients(
        n_rx: usize,
        n_tx: usize,
        n_slots: usize,
        coeffs: Vec<Complex64>,
    ) -> Result<Self> {
        check_dims(n_rx, n_tx, n_slots)?;
        if coeffs.len() != n_rx * n_tx * n_slots {
            return Err(Error::dim(format!(
                "expected {} coefficients, got {}",
                n_rx * n_tx * n_slots,
                coeffs.len()
            )));
        }
        if let Some(bad) = coeffs
            .iter()
            .find(|h| !h.is_finite() || h.norm() < MAGNITUDE_FLOOR)
        {
            return Err(Error::dim(format!(
                "coefficient {bad} is not finite or lies below the magnitude floor"
            )));
        }
        Ok(ChannelProcess {
            n_rx,
            n_tx,
            n_slots,
            seed: 0,
            coeffs,
        })
    }

    pub fn n_rx(&self) -> usize {
        self.n_rx
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    pub fn n_slots(&self) -> usize {
        self.n_slots
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `h_{rx,tx}(slot)`. Panics when an index is out of range.
    pub fn h(&self, rx: usize, tx: usize, slot: usize) -> Complex64 {
        self.get(rx, tx, slot).unwrap_or_else(|| {
            panic!(
                "coefficient ({rx},{tx},{slot}) outside a {}x{}x{} process",
                self.n_rx, self.n_tx, self.n_slots
            )
        })
    }

    pub fn get(&self, rx: usize, tx: usize, slot: usize) -> Option<Complex64> {
        (rx < self.n_rx && tx < self.n_tx && slot < self.n_slots)
            .then(|| self.coeffs[(slot * self.n_rx + rx) * self.n_tx + tx])
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Received vector for transmit vector `x` in slot `t`.
    ///
    /// Noise samples come from a stream keyed on `(seed, stream, t)`, so a
    /// noisy and a noiseless run over the same process see the same channel.
    pub fn apply(
        &self,
        x: &[Complex64],
        t: usize,
        noise: &NoiseConfig,
        stream: u64,
    ) -> Result<Vec<Complex64>> {
        if t >= self.n_slots {
            return Err(Error::SlotOutOfRange {
                slot: t,
                n_slots: self.n_slots,
            });
        }
        if x.len() != self.n_tx {
            return Err(Error::dim(format!(
                "transmit vector has {} entries, process has {} transmitters",
                x.len(),
                self.n_tx
            )));
        }
        let mut y: Vec<Complex64> = (0..self.n_rx)
            .map(|i| (0..self.n_tx).map(|j| self.h(i, j, t) * x[j]).sum())
            .collect();
        if noise.enabled() {
            let mut rng = stream_rng(self.seed, &[tag::NOISE, stream, t as u64]);
            let scale = noise.variance().sqrt();
            for yi in &mut y {
                *yi += Fading::Gaussian.draw(&mut rng) * scale;
            }
        }
        Ok(y)
    }
}

fn check_dims(n_rx: usize, n_tx: usize, n_slots: usize) -> Result<()> {
    if n_rx == 0 || n_tx == 0 || n_slots == 0 {
        return Err(Error::dim(format!(
            "all dimensions must be at least 1 (got {n_rx} rx, {n_tx} tx, {n_slots} slots)"
        )));
    }
    Ok(())
}

/// Same as [`ChannelProcess::sample`].
pub fn sample_channel(n_rx: usize, n_tx: usize, n_slots: usize, seed: u64) -> Result<ChannelProcess> {
    ChannelProcess::sample(n_rx, n_tx, n_slots, seed)
}

/// Same as [`ChannelProcess::apply`].
pub fn apply_channel(
    process: &ChannelProcess,
    x: &[Complex64],
    t: usize,
    noise: &NoiseConfig,
    rng_stream: u64,
) -> Result<Vec<Complex64>> {
    process.apply(x, t, noise, rng_stream)
}

/// Additive receiver noise. Variance is zero exactly when noise is disabled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    variance: f64,
}

impl NoiseConfig {
    pub fn noiseless() -> Self {
        NoiseConfig { variance: 0.0 }
    }

    pub fn awgn(variance: f64) -> Result<Self> {
        if !(variance.is_finite() && variance > 0.0) {
            return Err(Error::dim(format!(
                "noise variance must be positive and finite, got {variance}"
            )));
        }
        Ok(NoiseConfig { variance })
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn enabled(&self) -> bool {
        self.variance > 0.0
    }
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self::noiseless()
    }
}

/// Per-transmitter power budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerConfig {
    power: f64,
    normalize_precoders: bool,
}

impl PowerConfig {
    pub fn new(power: f64, normalize_precoders: bool) -> Result<Self> {
        if !(power.is_finite() && power > 0.0) {
            return Err(Error::dim(format!("power must be positive, got {power}")));
        }
        Ok(PowerConfig {
            power,
            normalize_precoders,
        })
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn normalize_precoders(&self) -> bool {
        self.normalize_precoders
    }
}
