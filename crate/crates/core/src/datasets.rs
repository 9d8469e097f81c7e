//! Benchmark data: MNIST IDX files and one-folder-per-class image trees.

use std::fs;
use std::path::{Path, PathBuf};

use image::imageops::{self, FilterType};
use image::{ImageBuffer, Luma};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoding::GrayImage;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

const IMAGE_EXTENSIONS: [&str; 3] = ["png", "jpg", "jpeg"];

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset<T> {
    images: Vec<GrayImage<T>>,
    labels: Vec<usize>,
    class_names: Vec<String>,
}

impl<T: Scalar> LabeledDataset<T> {
    pub fn new(images: Vec<GrayImage<T>>, labels: Vec<usize>, class_names: Vec<String>) -> Result<Self> {
        if images.len() != labels.len() {
            return Err(Error::CountMismatch {
                images: images.len(),
                labels: labels.len(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_names.len()) {
            return Err(Error::InvalidParameter(format!(
                "label {bad} out of range for {} classes",
                class_names.len()
            )));
        }
        if let Some(first) = images.first() {
            let shape = (first.width(), first.height());
            if images.iter().any(|i| (i.width(), i.height()) != shape) {
                return Err(Error::DimensionMismatch("images differ in shape".into()));
            }
        }
        Ok(LabeledDataset {
            images,
            labels,
            class_names,
        })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn images(&self) -> &[GrayImage<T>] {
        &self.images
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    /// `(width, height)` of every image, if any.
    pub fn shape(&self) -> Option<(usize, usize)> {
        self.images.first().map(|i| (i.width(), i.height()))
    }

    /// Keeps the first `n` samples.
    pub fn truncate(&mut self, n: usize) {
        self.images.truncate(n);
        self.labels.truncate(n);
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn be_u32(bytes: &[u8], offset: usize, path: &Path, expected_len: usize) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Truncated {
            path: path.to_path_buf(),
            found: bytes.len(),
            expected: expected_len.max(offset + 4),
        })
}

fn check_magic(bytes: &[u8], path: &Path, expected: u32, header_len: usize) -> Result<()> {
    let found = be_u32(bytes, 0, path, header_len)?;
    if found != expected {
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
            found,
            expected,
        });
    }
    Ok(())
}

/// Parses an IDX3 image file into `(count, rows, cols, pixels)`.
pub fn parse_idx_images(bytes: &[u8], path: &Path) -> Result<(usize, usize, usize, Vec<u8>)> {
    check_magic(bytes, path, IDX_IMAGES_MAGIC, 16)?;
    let count = be_u32(bytes, 4, path, 16)? as usize;
    let rows = be_u32(bytes, 8, path, 16)? as usize;
    let cols = be_u32(bytes, 12, path, 16)? as usize;
    let expected = 16 + count * rows * cols;
    if bytes.len() < expected {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            found: bytes.len(),
            expected,
        });
    }
    Ok((count, rows, cols, bytes[16..expected].to_vec()))
}

pub fn parse_idx_labels(bytes: &[u8], path: &Path) -> Result<Vec<u8>> {
    check_magic(bytes, path, IDX_LABELS_MAGIC, 8)?;
    let count = be_u32(bytes, 4, path, 8)? as usize;
    let expected = 8 + count;
    if bytes.len() < expected {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            found: bytes.len(),
            expected,
        });
    }
    Ok(bytes[8..expected].to_vec())
}

/// Loads an MNIST-layout IDX pair; intensities become `value / 255`.
pub fn load_mnist_idx<T: Scalar>(
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
) -> Result<LabeledDataset<T>> {
    let (ip, lp) = (images_path.as_ref(), labels_path.as_ref());
    let (count, rows, cols, pixels) = parse_idx_images(&read_file(ip)?, ip)?;
    let raw_labels = parse_idx_labels(&read_file(lp)?, lp)?;
    if raw_labels.len() != count {
        return Err(Error::CountMismatch {
            images: count,
            labels: raw_labels.len(),
        });
    }
    let pixels_per_image = rows * cols;
    let images = pixels
        .par_chunks(pixels_per_image.max(1))
        .take(count)
        .map(|chunk| GrayImage::from_u8(cols, rows, chunk))
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<usize> = raw_labels.iter().map(|&l| usize::from(l)).collect();
    let num_classes = labels.iter().max().map_or(0, |&m| m + 1).max(10);
    let class_names = (0..num_classes).map(|i| i.to_string()).collect();
    LabeledDataset::new(images, labels, class_names)
}

/// Options for [`load_image_folder`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FolderOptions {
    /// `(width, height)` after resizing.
    pub target_size: (usize, usize),
    /// Skip undecodable files instead of failing.
    pub skip_bad: bool,
}

/// Rec. 601 luma in `[0, 1]`.
fn luma601(rgb: &image::RgbImage) -> ImageBuffer<Luma<f32>, Vec<f32>> {
    ImageBuffer::from_fn(rgb.width(), rgb.height(), |x, y| {
        let [r, g, b] = rgb.get_pixel(x, y).0;
        let l = 0.299 * f32::from(r) + 0.587 * f32::from(g) + 0.114 * f32::from(b);
        Luma([l / 255.0])
    })
}

fn decode_gray<T: Scalar>(path: &Path, (w, h): (usize, usize)) -> Result<GrayImage<T>> {
    let decoded = image::open(path).map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let luma = luma601(&decoded.to_rgb8());
    let resized = if luma.dimensions() == (w as u32, h as u32) {
        luma
    } else {
        imageops::resize(&luma, w as u32, h as u32, FilterType::Triangle)
    };
    let pixels = resized
        .into_raw()
        .into_iter()
        .map(|p| T::lit(f64::from(p.clamp(0.0, 1.0))))
        .collect();
    GrayImage::new(w, h, pixels)
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut entries = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(dir, err)))
        .collect::<Result<Vec<_>>>()?;
    entries.sort();
    Ok(entries)
}

fn is_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
}

/// Loads `root/<class>/<image>` trees.
///
/// Classes are indexed by the sorted order of their folder names; images
/// become Rec. 601 grayscale, bilinearly resized.
pub fn load_image_folder<T: Scalar>(
    root: impl AsRef<Path>,
    options: FolderOptions,
) -> Result<LabeledDataset<T>> {
    let root = root.as_ref();
    let (w, h) = options.target_size;
    if w == 0 || h == 0 {
        return Err(Error::InvalidParameter("target size must be positive".into()));
    }
    let class_dirs: Vec<PathBuf> = sorted_entries(root)?.into_iter().filter(|p| p.is_dir()).collect();
    if class_dirs.is_empty() {
        return Err(Error::Empty(format!("{}: no class folders", root.display())));
    }
    let mut jobs = Vec::new();
    let mut class_names = Vec::with_capacity(class_dirs.len());
    for (label, dir) in class_dirs.iter().enumerate() {
        let files: Vec<PathBuf> = sorted_entries(dir)?.into_iter().filter(|p| is_image(p)).collect();
        if files.is_empty() {
            return Err(Error::EmptyClass { path: dir.clone() });
        }
        class_names.push(
            dir.file_name()
                .map_or_else(String::new, |n| n.to_string_lossy().into_owned()),
        );
        jobs.extend(files.into_iter().map(|f| (f, label)));
    }
    // Collecting an indexed parallel iterator keeps the sorted-path order.
    let decoded: Vec<(Result<GrayImage<T>>, usize)> = jobs
        .par_iter()
        .map(|(path, label)| (decode_gray(path, (w, h)), *label))
        .collect();
    let mut images = Vec::with_capacity(decoded.len());
    let mut labels = Vec::with_capacity(decoded.len());
    for (img, label) in decoded {
        match img {
            Ok(img) => {
                images.push(img);
                labels.push(label);
            }
            Err(Error::Decode { .. }) if options.skip_bad => {}
            Err(e) => return Err(e),
        }
    }
    LabeledDataset::new(images, labels, class_names)
}

/// Train fraction and shuffle seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.7,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "train fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        Ok(())
    }

    /// `⌈k · train_fraction⌉`, robust to representation error in the product.
    pub fn train_count(&self, k: usize) -> usize {
        let exact = k as f64 * self.train_fraction;
        ((exact - 1e-9 * exact.max(1.0)).ceil() as usize).min(k)
    }

    /// Seeded permutation split into `(train, test)` index lists.
    pub fn split_indices(&self, k: usize) -> Result<(Vec<usize>, Vec<usize>)> {
        self.validate()?;
        let mut order: Vec<usize> = (0..k).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(self.seed));
        let test = order.split_off(self.train_count(k));
        Ok((order, test))
    }
}

/// Shuffles with `spec.seed` and partitions into `(train, test)`.
pub fn shuffle_split<T: Scalar>(
    ds: LabeledDataset<T>,
    spec: &SplitSpec,
) -> Result<(LabeledDataset<T>, LabeledDataset<T>)> {
    if ds.is_empty() {
        return Err(Error::Empty("cannot split an empty dataset".into()));
    }
    let (train_idx, test_idx) = spec.split_indices(ds.len())?;
    let LabeledDataset {
        images,
        labels,
        class_names,
    } = ds;
    let mut slots: Vec<Option<GrayImage<T>>> = images.into_iter().map(Some).collect();
    let mut take = |idx: &[usize]| -> (Vec<GrayImage<T>>, Vec<usize>) {
        idx.iter()
            .map(|&i| (slots[i].take().expect("index used once"), labels[i]))
            .unzip()
    };
    let (tr_img, tr_lab) = take(&train_idx);
    let (te_img, te_lab) = take(&test_idx);
    Ok((
        LabeledDataset {
            images: tr_img,
            labels: tr_lab,
            class_names: class_names.clone(),
        },
        LabeledDataset {
            images: te_img,
            labels: te_lab,
            class_names,
        },
    ))
}
