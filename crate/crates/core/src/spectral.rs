//! Harmonic content of a sinusoidally driven diode.
//!
//! A pure tone pushed through the I-V law picks up components at integer
//! multiples of the drive frequency; counting those above a dBc threshold
//! measures how strongly the device is operating nonlinearly.

use std::io::{Read, Write};

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::device::DeviceParams;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_FREQUENCY: f64 = 1.0;
pub const DEFAULT_SAMPLE_RATE: f64 = 1000.0;
pub const DEFAULT_DURATION: f64 = 10.0;
pub const DEFAULT_THRESHOLD_DBC: f64 = -60.0;
/// Magnitudes below this (linear) read as the -200 dB floor.
pub const MAGNITUDE_FLOOR: f64 = 1e-10;
pub const FLOOR_DB: f64 = -200.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Signal<T> {
    samples: Vec<T>,
    sample_rate: T,
    /// Drive frequency, when the signal was synthesized from one.
    fundamental: Option<T>,
}

impl<T: Scalar> Signal<T> {
    pub fn new(samples: Vec<T>, sample_rate: T) -> Result<Self> {
        if !(sample_rate > T::zero()) || !sample_rate.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sample rate must be positive, got {sample_rate}"
            )));
        }
        Ok(Signal {
            samples,
            sample_rate,
            fundamental: None,
        })
    }

    pub fn with_fundamental(mut self, freq: T) -> Self {
        self.fundamental = Some(freq);
        self
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn sample_rate(&self) -> T {
        self.sample_rate
    }

    pub fn fundamental(&self) -> Option<T> {
        self.fundamental
    }

    /// Seconds.
    pub fn duration(&self) -> T {
        T::from_usize_lossy(self.samples.len()) / self.sample_rate
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    #[default]
    Rectangular,
    Hann,
}

impl std::str::FromStr for Window {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rectangular" => Ok(Window::Rectangular),
            "hann" => Ok(Window::Hann),
            other => Err(Error::Config(format!("unknown window `{other}`"))),
        }
    }
}

/// One-sided amplitude spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<T> {
    pub freqs: Vec<T>,
    /// Linear amplitudes; a sine of amplitude `A` on a bin reads `A`.
    pub magnitudes: Vec<T>,
    /// `20 log10(magnitude)`, floored at [`FLOOR_DB`].
    pub mags_db: Vec<T>,
    pub fundamental: Option<T>,
}

impl<T: Scalar> Spectrum<T> {
    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    /// Frequency resolution (Hz).
    pub fn bin_width(&self) -> T {
        if self.freqs.len() > 1 {
            self.freqs[1] - self.freqs[0]
        } else {
            T::zero()
        }
    }

    /// CSV columns `freq_hz,mag_db`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["freq_hz", "mag_db"])?;
        for (f, m) in self.freqs.iter().zip(&self.mags_db) {
            w.write_record([f.to_string(), m.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    /// Reads `freq_hz,mag_db` back as `(freqs, mags_db)`.
    pub fn read_csv<R: Read>(reader: R) -> Result<(Vec<T>, Vec<T>)> {
        let mut r = csv::Reader::from_reader(reader);
        let mut freqs = Vec::new();
        let mut mags = Vec::new();
        for record in r.records() {
            let record = record?;
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map(T::lit)
                    .map_err(|_| Error::Config(format!("not a number: `{s}`")))
            };
            freqs.push(parse(&record[0])?);
            mags.push(parse(&record[1])?);
        }
        Ok((freqs, mags))
    }
}

/// `amplitude · sin(2π f t / fs)` over a whole number of periods.
pub fn sine<T: Scalar>(freq: T, amplitude: T, sample_rate: T, duration: T) -> Result<Signal<T>> {
    if !(freq > T::zero()) || !freq.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "frequency must be positive, got {freq}"
        )));
    }
    if !amplitude.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "amplitude must be finite, got {amplitude}"
        )));
    }
    if !(sample_rate >= T::lit(20.0) * freq) || !sample_rate.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "sample rate {sample_rate} Hz is below 20x the {freq} Hz drive"
        )));
    }
    let periods = duration * freq;
    if !(duration > T::zero()) || (periods - periods.round()).abs() > T::lit(1e-9) * periods.max(T::one()) {
        return Err(Error::InvalidParameter(format!(
            "duration {duration} s is not a whole number of {freq} Hz periods"
        )));
    }
    let n = (sample_rate * duration)
        .round()
        .to_usize()
        .ok_or_else(|| Error::InvalidParameter("sample count overflows".into()))?;
    let w = T::TAU() * freq / sample_rate;
    let samples = (0..n)
        .map(|t| amplitude * (w * T::from_usize_lossy(t)).sin())
        .collect();
    Ok(Signal::new(samples, sample_rate)?.with_fundamental(freq))
}

/// Passes every sample through the I-V law.
pub fn drive_device<T: Scalar>(sig: &Signal<T>, params: &DeviceParams<T>) -> Signal<T> {
    Signal {
        samples: params.total_current_batch(&sig.samples),
        sample_rate: sig.sample_rate,
        fundamental: sig.fundamental,
    }
}

fn window_coefficients<T: Scalar>(window: Window, n: usize) -> Vec<T> {
    match window {
        Window::Rectangular => vec![T::one(); n],
        Window::Hann => {
            let half = T::lit(0.5);
            let step = T::TAU() / T::from_usize_lossy(n);
            (0..n)
                .map(|i| half - half * (step * T::from_usize_lossy(i)).cos())
                .collect()
        }
    }
}

pub fn to_db<T: Scalar>(magnitude: T) -> T {
    T::lit(20.0) * magnitude.max(T::lit(MAGNITUDE_FLOOR)).log10()
}

/// One-sided amplitude spectrum, normalized by the window's coherent gain.
pub fn magnitude_spectrum<T: Scalar>(sig: &Signal<T>, window: Window) -> Result<Spectrum<T>> {
    let n = sig.samples.len();
    if n == 0 {
        return Err(Error::Empty("signal has no samples".into()));
    }
    let coeffs: Vec<T> = window_coefficients(window, n);
    let gain: T = coeffs.iter().copied().sum();
    let mut buf: Vec<Complex<T>> = sig
        .samples
        .iter()
        .zip(&coeffs)
        .map(|(&x, &w)| Complex::new(x * w, T::zero()))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);

    let bins = n / 2 + 1;
    let two = T::lit(2.0);
    let df = sig.sample_rate / T::from_usize_lossy(n);
    let mut freqs = Vec::with_capacity(bins);
    let mut magnitudes = Vec::with_capacity(bins);
    for (k, c) in buf.iter().take(bins).enumerate() {
        // DC and Nyquist have no mirror image.
        let one_sided = k == 0 || (n.is_multiple_of(2) && k == n / 2);
        let scale = if one_sided { T::one() } else { two };
        freqs.push(df * T::from_usize_lossy(k));
        magnitudes.push(scale * c.norm() / gain);
    }
    let mags_db = magnitudes.iter().map(|&m| to_db(m)).collect();
    Ok(Spectrum {
        freqs,
        magnitudes,
        mags_db,
        fundamental: sig.fundamental,
    })
}

/// Counts harmonics `n >= 2` of the fundamental that sit above
/// `fundamental_db + threshold_dbc`, up to Nyquist.
pub fn count_harmonics<T: Scalar>(spec: &Spectrum<T>, threshold_dbc: T) -> Result<usize> {
    if !(threshold_dbc < T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "harmonic threshold must be negative dBc, got {threshold_dbc}"
        )));
    }
    Ok(harmonic_levels(spec)?
        .into_iter()
        .skip(1)
        .filter(|&(_, dbc)| dbc > threshold_dbc)
        .count())
}

/// `(harmonic number, level in dBc)` for every multiple of the fundamental
/// below Nyquist, starting at the fundamental itself.
pub fn harmonic_levels<T: Scalar>(spec: &Spectrum<T>) -> Result<Vec<(usize, T)>> {
    let f0 = spec
        .fundamental
        .ok_or_else(|| Error::InvalidParameter("spectrum has no fundamental".into()))?;
    if !(f0 > T::zero() && f0.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "fundamental {f0} Hz must be positive"
        )));
    }
    let df = spec.bin_width();
    if !(df > T::zero()) {
        return Err(Error::InvalidParameter("spectrum needs at least two bins".into()));
    }
    let bin = (f0 / df)
        .round()
        .to_usize()
        .filter(|&b| b > 0 && b < spec.len())
        .ok_or_else(|| Error::InvalidParameter(format!("fundamental {f0} Hz outside the spectrum")))?;
    let reference = spec.mags_db[bin];
    if reference <= T::lit(FLOOR_DB) {
        return Err(Error::BelowNoiseFloor {
            frequency: f0.as_f64(),
            floor_db: FLOOR_DB,
        });
    }
    Ok((1..)
        .map(|h| (h, h * bin))
        .take_while(|&(_, b)| b < spec.len())
        .map(|(h, b)| (h, spec.mags_db[b] - reference))
        .collect())
}

/// Settings for the sine-drive experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumConfig {
    pub frequency: f64,
    pub sample_rate: f64,
    pub duration: f64,
    pub window: Window,
    pub threshold_dbc: f64,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        SpectrumConfig {
            frequency: DEFAULT_FREQUENCY,
            sample_rate: DEFAULT_SAMPLE_RATE,
            duration: DEFAULT_DURATION,
            window: Window::Rectangular,
            threshold_dbc: DEFAULT_THRESHOLD_DBC,
        }
    }
}

/// Spectrum of the device current under a sine of the given amplitude,
/// with its harmonic count (0 for a spectrum with no fundamental above the
/// floor).
pub fn device_response<T: Scalar>(
    amplitude: T,
    params: &DeviceParams<T>,
    config: &SpectrumConfig,
) -> Result<(Spectrum<T>, usize)> {
    let drive = sine(
        T::lit(config.frequency),
        amplitude,
        T::lit(config.sample_rate),
        T::lit(config.duration),
    )?;
    let spec = magnitude_spectrum(&drive_device(&drive, params), config.window)?;
    let count = match count_harmonics(&spec, T::lit(config.threshold_dbc)) {
        Ok(c) => c,
        Err(Error::BelowNoiseFloor { .. }) => 0,
        Err(e) => return Err(e),
    };
    Ok((spec, count))
}
