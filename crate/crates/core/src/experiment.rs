//! End-to-end runs: configuration, pipeline, and on-disk outputs.
//!
//! Every run writes a snapshot of its effective configuration
//! (`config.toml`) next to its results; the report carries the SHA-256 of
//! that file.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::datasets::{load_image_folder, load_mnist_idx, FolderOptions, LabeledDataset, SplitSpec};
use crate::device::{default_params, DeviceParams, DEFAULT_DV};
use crate::encoding::EncodingConfig;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::plot::{LinePlot, Series};
use crate::readout::{
    evaluate, fit_iterative, fit_ridge, one_hot_targets, ConfusionMatrix, EpochRecord, IterativeConfig,
    ReadoutModel, TrainHistory, DEFAULT_LAMBDA,
};
use crate::reservoir::{forward_into, StateMatrix};
use crate::spectral::{device_response, SpectrumConfig};

/// Environment variable naming the default dataset root.
pub const DATA_DIR_ENV: &str = "RTD_RC_DATA_DIR";

/// Vertical spacing between stacked spectra (dB).
pub const SPECTRUM_PLOT_OFFSET_DB: f64 = 50.0;
/// Stacked-spectrum plots show this many multiples of the drive frequency.
const SPECTRUM_PLOT_HARMONICS: f64 = 12.0;

pub fn data_root() -> PathBuf {
    std::env::var_os(DATA_DIR_ENV).map_or_else(|| PathBuf::from("data"), PathBuf::from)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    #[default]
    Mnist,
    Folder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub kind: DatasetKind,
    /// IDX image file (mnist).
    pub images: Option<PathBuf>,
    /// IDX label file (mnist).
    pub labels: Option<PathBuf>,
    /// Class-folder root (folder).
    pub root: Option<PathBuf>,
    /// Square target size for folder images.
    pub size: usize,
    pub skip_bad: bool,
    /// Keep only the first `limit` samples before shuffling.
    pub limit: Option<usize>,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            kind: DatasetKind::Mnist,
            images: None,
            labels: None,
            root: None,
            size: 28,
            skip_bad: false,
            limit: None,
        }
    }
}

impl DatasetConfig {
    /// Fills unset paths with the conventional layout under `root`.
    pub fn resolve(&mut self, root: &Path) {
        match self.kind {
            DatasetKind::Mnist => {
                self.images
                    .get_or_insert_with(|| root.join("mnist").join("train-images-idx3-ubyte"));
                self.labels
                    .get_or_insert_with(|| root.join("mnist").join("train-labels-idx1-ubyte"));
            }
            DatasetKind::Folder => {
                self.root.get_or_insert_with(|| root.join("fruits-360"));
            }
        }
    }

    fn required(path: &Option<PathBuf>, what: &str) -> Result<PathBuf> {
        let p = path
            .clone()
            .ok_or_else(|| Error::Config(format!("dataset.{what} is not set")))?;
        if !p.exists() {
            return Err(Error::io(
                &p,
                std::io::Error::new(std::io::ErrorKind::NotFound, "dataset path does not exist"),
            ));
        }
        Ok(p)
    }

    pub fn load(&self) -> Result<LabeledDataset<f64>> {
        let mut ds = match self.kind {
            DatasetKind::Mnist => load_mnist_idx(
                Self::required(&self.images, "images")?,
                Self::required(&self.labels, "labels")?,
            )?,
            DatasetKind::Folder => load_image_folder(
                Self::required(&self.root, "root")?,
                FolderOptions {
                    target_size: (self.size, self.size),
                    skip_bad: self.skip_bad,
                },
            )?,
        };
        if let Some(n) = self.limit {
            ds.truncate(n);
        }
        if ds.is_empty() {
            return Err(Error::Empty("dataset has no samples".into()));
        }
        Ok(ds)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trainer {
    #[default]
    Ridge,
    Iterative,
}

impl std::str::FromStr for Trainer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ridge" => Ok(Trainer::Ridge),
            "iterative" => Ok(Trainer::Iterative),
            other => Err(Error::Config(format!("unknown trainer `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReadoutConfig {
    pub trainer: Trainer,
    pub lambda: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
}

impl Default for ReadoutConfig {
    fn default() -> Self {
        let it = IterativeConfig::default();
        ReadoutConfig {
            trainer: Trainer::Ridge,
            lambda: DEFAULT_LAMBDA,
            epochs: it.epochs,
            learning_rate: it.learning_rate,
            batch_size: it.batch_size,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub train_fraction: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig { train_fraction: 0.7 }
    }
}

/// Thresholds enforced by `--check`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckConfig {
    pub min_test_accuracy: f64,
    /// Required accuracy gain from the lowest to the highest swept V_max.
    pub min_sweep_gain: f64,
    pub low_vmax_accuracy_min: f64,
    pub low_vmax_accuracy_max: f64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            min_test_accuracy: 0.895,
            min_sweep_gain: 0.05,
            low_vmax_accuracy_min: 0.70,
            low_vmax_accuracy_max: 0.88,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub dataset: DatasetConfig,
    pub encoding: EncodingConfig,
    pub device: DeviceParams<f64>,
    pub readout: ReadoutConfig,
    pub split: SplitConfig,
    pub spectrum: SpectrumConfig,
    pub check: CheckConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            out_dir: PathBuf::from("runs/latest"),
            dataset: DatasetConfig::default(),
            encoding: EncodingConfig::default(),
            device: default_params(),
            readout: ReadoutConfig::default(),
            split: SplitConfig::default(),
            spectrum: SpectrumConfig::default(),
            check: CheckConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.encoding.v_max > 0.0) {
            return Err(Error::Config(format!(
                "encoding.v_max must be positive, got {}",
                self.encoding.v_max
            )));
        }
        if self.readout.epochs == 0 {
            return Err(Error::Config("readout.epochs must be >= 1".into()));
        }
        self.split_spec().validate()
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            train_fraction: self.split.train_fraction,
            seed: self.seed,
        }
    }

    pub fn iterative_config(&self) -> IterativeConfig {
        IterativeConfig {
            epochs: self.readout.epochs,
            learning_rate: self.readout.learning_rate,
            lambda: self.readout.lambda,
            batch_size: self.readout.batch_size,
            seed: self.seed,
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn write_with<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut Vec<u8>) -> Result<()>,
{
    let mut buf = Vec::new();
    f(&mut buf)?;
    write_file(path, buf)
}

/// Writes `config.toml` into `dir` and returns its SHA-256.
pub fn write_config_snapshot(config: &ExperimentConfig, dir: &Path) -> Result<String> {
    let text = config.to_toml_string();
    write_file(&dir.join("config.toml"), &text)?;
    Ok(sha256_hex(text.as_bytes()))
}

/// Reservoir states of the selected samples, in the order given.
pub fn featurize(
    ds: &LabeledDataset<f64>,
    indices: &[usize],
    encoding: &EncodingConfig,
    params: &DeviceParams<f64>,
) -> Result<StateMatrix<f64>> {
    let (w, h) = ds
        .shape()
        .ok_or_else(|| Error::Empty("dataset has no samples".into()))?;
    let dims = w * h + 1;
    let mut data = Matrix::zeros(indices.len(), dims);
    data.as_mut_slice()
        .par_chunks_mut(dims)
        .zip(indices.par_iter())
        .try_for_each(|(row, &i)| {
            let frame = encoding.encode(&ds.images()[i])?;
            forward_into(&frame, params, row)
        })?;
    Ok(StateMatrix::from_matrix(data))
}

/// Dataset plus its seeded train/test index split.
#[derive(Debug, Clone)]
pub struct PreparedSplit {
    pub dataset: LabeledDataset<f64>,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl PreparedSplit {
    pub fn load(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let dataset = config.dataset.load()?;
        let (train, test) = config.split_spec().split_indices(dataset.len())?;
        if test.is_empty() {
            return Err(Error::Empty("test split is empty".into()));
        }
        Ok(PreparedSplit { dataset, train, test })
    }

    fn labels(&self, idx: &[usize]) -> Vec<usize> {
        idx.iter().map(|&i| self.dataset.labels()[i]).collect()
    }
}

/// Summary written to `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub trainer: Trainer,
    pub v_max: f64,
    pub train_samples: usize,
    pub test_samples: usize,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    /// Final training loss (per-entry MSE).
    pub train_loss: f64,
    pub test_loss: f64,
    pub history_path: PathBuf,
    pub confusion_path: PathBuf,
    pub model_dir: PathBuf,
    pub wall_clock_secs: f64,
    pub config_hash: String,
}

/// Trained model and its history, before anything is written.
pub struct TrainOutcome {
    pub model: ReadoutModel<f64>,
    pub history: TrainHistory,
    pub test_accuracy: f64,
    pub test_loss: f64,
    pub confusion: ConfusionMatrix,
}

/// Encode, fit and evaluate on a prepared split.
pub fn train_and_evaluate(config: &ExperimentConfig, split: &PreparedSplit) -> Result<TrainOutcome> {
    let params = &config.device;
    let class_names = split.dataset.class_names().to_vec();
    let s = class_names.len();
    let train_labels = split.labels(&split.train);
    let x_train = featurize(&split.dataset, &split.train, &config.encoding, params)?;
    let y_train: Matrix<f64> = one_hot_targets(&train_labels, s)?;
    let (model, history) = match config.readout.trainer {
        Trainer::Ridge => {
            let model = fit_ridge(&x_train, &y_train, config.readout.lambda)?;
            let fit = evaluate(&model, &x_train, &train_labels)?;
            let history = TrainHistory {
                records: vec![EpochRecord {
                    epoch: 1,
                    accuracy: fit.accuracy,
                    loss: fit.mse_loss,
                }],
            };
            (model, history)
        }
        Trainer::Iterative => fit_iterative(&x_train, &y_train, &config.iterative_config())?,
    };
    drop(x_train);
    let model = model.with_class_names(class_names)?;
    let x_test = featurize(&split.dataset, &split.test, &config.encoding, params)?;
    let eval = evaluate(&model, &x_test, &split.labels(&split.test))?;
    Ok(TrainOutcome {
        model,
        history,
        test_accuracy: eval.accuracy,
        test_loss: eval.mse_loss,
        confusion: eval.confusion,
    })
}

fn history_plot(history: &TrainHistory, title: &str) -> LinePlot {
    let acc = history
        .records
        .iter()
        .map(|r| (r.epoch as f64, r.accuracy))
        .collect();
    let loss = history.records.iter().map(|r| (r.epoch as f64, r.loss)).collect();
    LinePlot::new(title, "epoch", "accuracy / loss")
        .with_series(Series::new("training accuracy", acc))
        .with_series(Series::new("training loss (MSE)", loss).dashed())
}

/// Full `train` run on an already prepared split, writing into
/// `config.out_dir`.
pub fn train_run(config: &ExperimentConfig, split: &PreparedSplit) -> Result<RunReport> {
    let start = Instant::now();
    let dir = &config.out_dir;
    create_dir(dir)?;
    let config_hash = write_config_snapshot(config, dir)?;
    let outcome = train_and_evaluate(config, split)?;

    let history_path = dir.join("history.csv");
    write_with(&history_path, |b| outcome.history.write_csv(b))?;
    let confusion_path = dir.join("confusion.csv");
    write_with(&confusion_path, |b| outcome.confusion.write_csv(b))?;
    let model_dir = dir.join("model");
    create_dir(&model_dir)?;
    outcome.model.save_to_dir(&model_dir)?;
    write_file(
        &dir.join("history.svg"),
        history_plot(
            &outcome.history,
            &format!("Training, V_max = {} V", config.encoding.v_max),
        )
        .render(),
    )?;

    let last = outcome.history.last().copied().unwrap_or(EpochRecord {
        epoch: 0,
        accuracy: 0.0,
        loss: 0.0,
    });
    let report = RunReport {
        trainer: config.readout.trainer,
        v_max: config.encoding.v_max,
        train_samples: split.train.len(),
        test_samples: split.test.len(),
        train_accuracy: last.accuracy,
        test_accuracy: outcome.test_accuracy,
        train_loss: last.loss,
        test_loss: outcome.test_loss,
        history_path,
        confusion_path,
        model_dir,
        wall_clock_secs: start.elapsed().as_secs_f64(),
        config_hash,
    };
    write_file(&dir.join("report.json"), serde_json::to_string_pretty(&report)?)?;
    Ok(report)
}

/// `train`: load, split, fit, evaluate, write outputs.
pub fn run_train(config: &ExperimentConfig) -> Result<RunReport> {
    let split = PreparedSplit::load(config)?;
    train_run(config, &split)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub test_samples: usize,
    pub accuracy: f64,
    pub mse_loss: f64,
    pub confusion_path: PathBuf,
}

/// `eval`: scores a saved model on the configured test split.
pub fn run_eval(config: &ExperimentConfig, model_dir: &Path) -> Result<EvalReport> {
    let model = ReadoutModel::<f64>::load_from_dir(model_dir)?;
    let split = PreparedSplit::load(config)?;
    let x_test = featurize(&split.dataset, &split.test, &config.encoding, &config.device)?;
    let eval = evaluate(&model, &x_test, &split.labels(&split.test))?;
    create_dir(&config.out_dir)?;
    let confusion_path = config.out_dir.join("eval_confusion.csv");
    write_with(&confusion_path, |b| eval.confusion.write_csv(b))?;
    Ok(EvalReport {
        test_samples: split.test.len(),
        accuracy: eval.accuracy,
        mse_loss: eval.mse_loss,
        confusion_path,
    })
}

/// Rejects empty lists, non-positive values and duplicates.
pub fn validate_v_list(v_list: &[f64]) -> Result<()> {
    if v_list.is_empty() {
        return Err(Error::Config("V_max list is empty".into()));
    }
    for (i, &v) in v_list.iter().enumerate() {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::Config(format!("V_max values must be positive, got {v}")));
        }
        if v_list[..i].contains(&v) {
            return Err(Error::Config(format!("duplicate V_max value {v}")));
        }
    }
    Ok(())
}

pub struct SweepOutcome {
    pub runs: Vec<(f64, Result<RunReport>)>,
    pub csv_path: PathBuf,
}

impl SweepOutcome {
    pub fn failures(&self) -> usize {
        self.runs.iter().filter(|(_, r)| r.is_err()).count()
    }

    pub fn test_accuracy(&self, v_max: f64) -> Option<f64> {
        self.runs
            .iter()
            .find(|(v, _)| *v == v_max)
            .and_then(|(_, r)| r.as_ref().ok())
            .map(|r| r.test_accuracy)
    }
}

fn vmax_dir_name(v: f64) -> String {
    format!("vmax_{v}")
}

/// `sweep-vmax`: one run per V_max on a shared split.
///
/// Failed runs are reported in the outcome and skipped in the combined CSV.
pub fn run_sweep(config: &ExperimentConfig, v_list: &[f64]) -> Result<SweepOutcome> {
    validate_v_list(v_list)?;
    let split = PreparedSplit::load(config)?;
    let base = &config.out_dir;
    create_dir(base)?;
    write_config_snapshot(config, base)?;

    let mut runs = Vec::with_capacity(v_list.len());
    for &v in v_list {
        let mut run_cfg = config.clone();
        run_cfg.encoding.v_max = v;
        run_cfg.out_dir = base.join(vmax_dir_name(v));
        runs.push((v, train_run(&run_cfg, &split)));
    }

    let csv_path = base.join("sweep.csv");
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["v_max", "epoch", "accuracy", "loss"])?;
    let mut plot = LinePlot::new("Training accuracy vs epoch", "epoch", "training accuracy");
    let mut summary = csv::Writer::from_writer(Vec::new());
    summary.write_record(["v_max", "train_accuracy", "test_accuracy", "test_loss"])?;
    for (v, run) in &runs {
        let Ok(report) = run else { continue };
        let history = TrainHistory::read_csv(
            fs::read(&report.history_path)
                .map_err(|e| Error::io(&report.history_path, e))?
                .as_slice(),
        )?;
        for r in &history.records {
            w.write_record([
                v.to_string(),
                r.epoch.to_string(),
                r.accuracy.to_string(),
                r.loss.to_string(),
            ])?;
        }
        summary.write_record([
            v.to_string(),
            report.train_accuracy.to_string(),
            report.test_accuracy.to_string(),
            report.test_loss.to_string(),
        ])?;
        plot = plot.with_series(Series::new(
            format!("V_max = {v} V"),
            history
                .records
                .iter()
                .map(|r| (r.epoch as f64, r.accuracy))
                .collect(),
        ));
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    write_file(&csv_path, bytes)?;
    let bytes = summary.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    write_file(&base.join("sweep_summary.csv"), bytes)?;
    write_file(&base.join("sweep.svg"), plot.render())?;
    Ok(SweepOutcome { runs, csv_path })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub amplitude: f64,
    pub harmonics: usize,
    pub bins: usize,
    pub csv_path: PathBuf,
}

/// `spectrum`: drives the diode with sines of each amplitude.
///
/// Writes one `spectrum_<A>.csv` per amplitude, `harmonics.csv`, and a
/// stacked plot with traces offset by 50 dB.
pub fn run_spectrum(
    amplitudes: &[f64],
    params: &DeviceParams<f64>,
    config: &SpectrumConfig,
    out_dir: &Path,
) -> Result<Vec<SpectrumRow>> {
    if amplitudes.is_empty() {
        return Err(Error::Config("amplitude list is empty".into()));
    }
    if let Some(bad) = amplitudes.iter().find(|a| !(a.is_finite() && **a >= 0.0)) {
        return Err(Error::InvalidParameter(format!("invalid amplitude {bad}")));
    }
    create_dir(out_dir)?;
    let mut rows = Vec::with_capacity(amplitudes.len());
    let mut plot = LinePlot::new(
        "Device output spectra (offset 50 dB per trace)",
        "frequency (Hz)",
        "magnitude (dB, offset)",
    );
    let mut table = csv::Writer::from_writer(Vec::new());
    table.write_record(["amplitude", "harmonics"])?;
    let plot_limit = config.frequency * SPECTRUM_PLOT_HARMONICS;
    for (i, &a) in amplitudes.iter().enumerate() {
        let (spec, harmonics) = device_response(a, params, config)?;
        let csv_path = out_dir.join(format!("spectrum_{a}.csv"));
        write_with(&csv_path, |b| spec.write_csv(b))?;
        table.write_record([a.to_string(), harmonics.to_string()])?;
        let points = spec
            .freqs
            .iter()
            .zip(&spec.mags_db)
            .take_while(|(f, _)| **f <= plot_limit)
            .map(|(&f, &m)| (f, m))
            .collect();
        plot = plot.with_series(
            Series::new(format!("A = {a} V"), points).offset(SPECTRUM_PLOT_OFFSET_DB * i as f64),
        );
        rows.push(SpectrumRow {
            amplitude: a,
            harmonics,
            bins: spec.len(),
            csv_path,
        });
    }
    let bytes = table.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    write_file(&out_dir.join("harmonics.csv"), bytes)?;
    write_file(&out_dir.join("spectra.svg"), plot.render())?;
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IvRow {
    pub v: f64,
    pub i: f64,
    pub di_dv: f64,
}

/// Uniform grid from `v_min` to `v_max` inclusive.
pub fn iv_curve(params: &DeviceParams<f64>, v_min: f64, v_max: f64, points: usize) -> Result<Vec<IvRow>> {
    if !(v_min < v_max) || !v_min.is_finite() || !v_max.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "invalid voltage range [{v_min}, {v_max}]"
        )));
    }
    if points < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 points, got {points}"
        )));
    }
    let last = (points - 1) as f64;
    (0..points)
        .map(|k| {
            let v = v_min + (v_max - v_min) * k as f64 / last;
            Ok(IvRow {
                v,
                i: params.total_current(v),
                di_dv: params.differential_conductance(v, DEFAULT_DV)?,
            })
        })
        .collect()
}

pub fn write_iv_csv(rows: &[IvRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["v", "i", "di_dv"])?;
    for r in rows {
        w.write_record([r.v.to_string(), r.i.to_string(), r.di_dv.to_string()])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    write_file(path, bytes)
}

pub fn read_iv_csv(path: &Path) -> Result<Vec<IvRow>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(bytes.as_slice());
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record?;
        let num = |i: usize| -> Result<f64> {
            record[i]
                .parse()
                .map_err(|_| Error::Config(format!("not a number: `{}`", &record[i])))
        };
        rows.push(IvRow {
            v: num(0)?,
            i: num(1)?,
            di_dv: num(2)?,
        });
    }
    Ok(rows)
}

/// `iv-curve`: writes `iv_curve.csv` and `iv_curve.svg`.
pub fn run_iv_curve(
    params: &DeviceParams<f64>,
    v_min: f64,
    v_max: f64,
    points: usize,
    out_dir: &Path,
) -> Result<Vec<IvRow>> {
    let rows = iv_curve(params, v_min, v_max, points)?;
    create_dir(out_dir)?;
    write_iv_csv(&rows, &out_dir.join("iv_curve.csv"))?;
    let plot = LinePlot::new("RTD I-V characteristic", "V (V)", "I (A) / dI/dV (S)")
        .with_series(Series::new("I(V)", rows.iter().map(|r| (r.v, r.i)).collect()))
        .with_series(Series::new("dI/dV", rows.iter().map(|r| (r.v, r.di_dv)).collect()).dashed());
    write_file(&out_dir.join("iv_curve.svg"), plot.render())?;
    Ok(rows)
}

/// True when dI/dV is negative somewhere in `[lo, hi]` on the grid.
pub fn has_ndr(rows: &[IvRow], lo: f64, hi: f64) -> bool {
    rows.iter().any(|r| r.v >= lo && r.v <= hi && r.di_dv < 0.0)
}
