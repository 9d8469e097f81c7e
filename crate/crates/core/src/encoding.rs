//! Pixel-to-voltage encoding and one-hot targets.
//!
//! Row `i` of an `n x m` image becomes the `m`-pulse voltage train driving
//! diode `i`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_THRESHOLD: f64 = 0.5;
pub const DEFAULT_V_MAX: f64 = 5.0;

/// Grayscale image, row-major, intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage<T> {
    width: usize,
    height: usize,
    pixels: Vec<T>,
}

impl<T: Scalar> GrayImage<T> {
    pub fn new(width: usize, height: usize, pixels: Vec<T>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        if let Some(p) = pixels.iter().find(|&&p| !(p >= T::zero() && p <= T::one())) {
            return Err(Error::InvalidParameter(format!(
                "pixel intensity {p} outside [0, 1]"
            )));
        }
        Ok(GrayImage {
            width,
            height,
            pixels,
        })
    }

    /// 8-bit pixels normalized as `value / 255`.
    pub fn from_u8(width: usize, height: usize, bytes: &[u8]) -> Result<Self> {
        let scale = T::lit(255.0);
        let pixels = bytes.iter().map(|&b| T::lit(f64::from(b)) / scale).collect();
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[T] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        self.pixels[row * self.width + col]
    }
}

/// Drive voltages: one row per diode, one column per pulse.
#[derive(Debug, Clone, PartialEq)]
pub struct VoltageFrame<T> {
    rows: usize,
    cols: usize,
    volts: Vec<T>,
}

impl<T: Scalar> VoltageFrame<T> {
    pub fn new(rows: usize, cols: usize, volts: Vec<T>) -> Result<Self> {
        if rows == 0 || cols == 0 || volts.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} voltages for a {rows}x{cols} frame",
                volts.len()
            )));
        }
        Ok(VoltageFrame { rows, cols, volts })
    }

    /// Number of diodes.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Pulse-train length.
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn volts(&self) -> &[T] {
        &self.volts
    }

    /// Pulse train for diode `i`.
    pub fn row(&self, i: usize) -> &[T] {
        &self.volts[i * self.cols..(i + 1) * self.cols]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EncodingMode {
    /// `0 -> -v_max`, `1 -> +v_max` on a binarized image.
    #[default]
    BinaryBipolar,
    /// `p -> (2p - 1) v_max`.
    LinearBipolar,
}

impl std::str::FromStr for EncodingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary_bipolar" => Ok(EncodingMode::BinaryBipolar),
            "linear_bipolar" => Ok(EncodingMode::LinearBipolar),
            other => Err(Error::Config(format!("unknown encoding mode `{other}`"))),
        }
    }
}

/// Thresholds every pixel: `p < threshold -> 0`, otherwise `1`.
pub fn binarize<T: Scalar>(img: &GrayImage<T>, threshold: T) -> Result<GrayImage<T>> {
    if !(threshold > T::zero() && threshold < T::one()) {
        return Err(Error::InvalidParameter(format!(
            "binarization threshold must lie in (0, 1), got {threshold}"
        )));
    }
    let pixels = img
        .pixels
        .iter()
        .map(|&p| if p < threshold { T::zero() } else { T::one() })
        .collect();
    Ok(GrayImage {
        width: img.width,
        height: img.height,
        pixels,
    })
}

pub fn to_voltages<T: Scalar>(img: &GrayImage<T>, v_max: T, mode: EncodingMode) -> Result<VoltageFrame<T>> {
    if !(v_max > T::zero()) || !v_max.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "v_max must be positive, got {v_max}"
        )));
    }
    let volts = match mode {
        EncodingMode::BinaryBipolar => img
            .pixels
            .iter()
            .map(|&p| {
                if p == T::one() {
                    Ok(v_max)
                } else if p == T::zero() {
                    Ok(-v_max)
                } else {
                    Err(Error::InvalidParameter(format!(
                        "binary_bipolar needs a binarized image, found intensity {p}"
                    )))
                }
            })
            .collect::<Result<Vec<_>>>()?,
        EncodingMode::LinearBipolar => {
            let two = T::lit(2.0);
            img.pixels.iter().map(|&p| (two * p - T::one()) * v_max).collect()
        }
    };
    Ok(VoltageFrame {
        rows: img.height,
        cols: img.width,
        volts,
    })
}

/// Encoding settings shared by the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncodingConfig {
    pub mode: EncodingMode,
    pub threshold: f64,
    pub v_max: f64,
}

impl Default for EncodingConfig {
    fn default() -> Self {
        EncodingConfig {
            mode: EncodingMode::BinaryBipolar,
            threshold: DEFAULT_THRESHOLD,
            v_max: DEFAULT_V_MAX,
        }
    }
}

impl EncodingConfig {
    /// Full image-to-frame path: binarize first in binary mode.
    pub fn encode<T: Scalar>(&self, img: &GrayImage<T>) -> Result<VoltageFrame<T>> {
        let v_max = T::lit(self.v_max);
        match self.mode {
            EncodingMode::BinaryBipolar => {
                let bin = binarize(img, T::lit(self.threshold))?;
                to_voltages(&bin, v_max, self.mode)
            }
            EncodingMode::LinearBipolar => to_voltages(img, v_max, self.mode),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OneHot {
    class_index: usize,
    num_classes: usize,
}

impl OneHot {
    pub fn class_index(&self) -> usize {
        self.class_index
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn vector<T: Scalar>(&self) -> Vec<T> {
        let mut v = vec![T::zero(); self.num_classes];
        v[self.class_index] = T::one();
        v
    }
}

pub fn one_hot(label: usize, num_classes: usize) -> Result<OneHot> {
    if label >= num_classes {
        return Err(Error::InvalidParameter(format!(
            "label {label} out of range for {num_classes} classes"
        )));
    }
    Ok(OneHot {
        class_index: label,
        num_classes,
    })
}
