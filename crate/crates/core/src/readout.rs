//! Linear readout over reservoir states.
//!
//! [`fit_ridge`] solves `(xᵀx + λI) w = xᵀy` by Cholesky. [`fit_iterative`]
//! runs mini-batch gradient descent on `(‖xw − y‖² + λ‖w‖²) / k`, whose
//! minimizer is the same ridge solution, and records per-epoch accuracy and
//! loss.

use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encoding::one_hot;
use crate::error::{Error, Result};
use crate::linalg::Cholesky;
use crate::matrix::{axpy, Matrix};
use crate::reservoir::StateMatrix;
use crate::scalar::Scalar;

pub const DEFAULT_LAMBDA: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutModel<T> {
    weights: Matrix<T>,
    lambda: T,
    class_names: Vec<String>,
}

impl<T: Scalar> ReadoutModel<T> {
    pub fn new(weights: Matrix<T>, lambda: T, class_names: Vec<String>) -> Result<Self> {
        if class_names.len() != weights.cols() {
            return Err(Error::DimensionMismatch(format!(
                "{} class names for {} weight columns",
                class_names.len(),
                weights.cols()
            )));
        }
        if !(lambda >= T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be >= 0, got {lambda}"
            )));
        }
        Ok(ReadoutModel {
            weights,
            lambda,
            class_names,
        })
    }

    /// `j x s` output weights.
    pub fn weights(&self) -> &Matrix<T> {
        &self.weights
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn num_classes(&self) -> usize {
        self.weights.cols()
    }

    pub fn with_class_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.num_classes() {
            return Err(Error::DimensionMismatch(format!(
                "{} class names for {} classes",
                names.len(),
                self.num_classes()
            )));
        }
        self.class_names = names;
        Ok(self)
    }

    /// Writes `weights.csv` (header = class names) and `model.json`.
    pub fn save_to_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        let weights_path = dir.join("weights.csv");
        let file = std::fs::File::create(&weights_path).map_err(|e| Error::io(&weights_path, e))?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(&self.class_names)?;
        for row in self.weights.row_iter() {
            w.write_record(row.iter().map(|x| x.to_string()))?;
        }
        w.flush().map_err(|e| Error::io(&weights_path, e))?;

        let sidecar = ModelSidecar {
            rows: self.weights.rows(),
            cols: self.weights.cols(),
            lambda: self.lambda.as_f64(),
            class_names: self.class_names.clone(),
            weights_file: "weights.csv".into(),
        };
        let json_path = dir.join("model.json");
        let text = serde_json::to_string_pretty(&sidecar)?;
        std::fs::write(&json_path, text).map_err(|e| Error::io(&json_path, e))
    }

    pub fn load_from_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let json_path = dir.join("model.json");
        let text = std::fs::read_to_string(&json_path).map_err(|e| Error::io(&json_path, e))?;
        let sidecar: ModelSidecar = serde_json::from_str(&text)?;
        let weights_path = dir.join(&sidecar.weights_file);
        let file = std::fs::File::open(&weights_path).map_err(|e| Error::io(&weights_path, e))?;
        let mut r = csv::Reader::from_reader(file);
        let mut data = Vec::with_capacity(sidecar.rows * sidecar.cols);
        for record in r.records() {
            for field in record?.iter() {
                data.push(T::lit(parse_f64(field)?));
            }
        }
        let weights = Matrix::from_vec(sidecar.rows, sidecar.cols, data)?;
        ReadoutModel::new(weights, T::lit(sidecar.lambda), sidecar.class_names)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelSidecar {
    rows: usize,
    cols: usize,
    lambda: f64,
    class_names: Vec<String>,
    weights_file: String,
}

fn parse_f64(field: &str) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("not a number: `{field}`")))
}

fn default_class_names(s: usize) -> Vec<String> {
    (0..s).map(|i| i.to_string()).collect()
}

/// `k x s` one-hot target matrix.
pub fn one_hot_targets<T: Scalar>(labels: &[usize], num_classes: usize) -> Result<Matrix<T>> {
    let mut y = Matrix::zeros(labels.len(), num_classes);
    for (i, &label) in labels.iter().enumerate() {
        let hot = one_hot(label, num_classes)?;
        y[(i, hot.class_index())] = T::one();
    }
    Ok(y)
}

fn check_fit_inputs<T: Scalar>(x: &StateMatrix<T>, y: &Matrix<T>, lambda: T) -> Result<()> {
    if x.samples() == 0 {
        return Err(Error::Empty("training set has no samples".into()));
    }
    if x.samples() != y.rows() {
        return Err(Error::DimensionMismatch(format!(
            "{} states vs {} target rows",
            x.samples(),
            y.rows()
        )));
    }
    if !(lambda >= T::zero()) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "lambda must be >= 0, got {lambda}"
        )));
    }
    Ok(())
}

/// Closed-form ridge readout `w = (xᵀx + λI)⁻¹ xᵀy`.
///
/// One step of iterative refinement follows the Cholesky solve.
pub fn fit_ridge<T: Scalar>(x: &StateMatrix<T>, y: &Matrix<T>, lambda: T) -> Result<ReadoutModel<T>> {
    check_fit_inputs(x, y, lambda)?;
    let mut a = x.matrix().gram();
    for i in 0..a.rows() {
        a[(i, i)] += lambda;
    }
    let b = x.matrix().t_matmul(y)?;
    let chol = Cholesky::factor(&a)?;
    if lambda == T::zero() {
        let condition = chol.condition_estimate();
        if condition * T::epsilon().as_f64() > 1e-2 {
            return Err(Error::Singular { condition });
        }
    }
    let mut w = chol.solve(&b)?;
    let residual = b.sub(&a.matmul(&w)?)?;
    let correction = chol.solve(&residual)?;
    w = w.add(&correction)?;
    ReadoutModel::new(w, lambda, default_class_names(y.cols()))
}

/// `‖(xᵀx + λI) w − xᵀy‖_F / ‖xᵀy‖_F`.
pub fn normal_equation_residual<T: Scalar>(
    x: &StateMatrix<T>,
    y: &Matrix<T>,
    model: &ReadoutModel<T>,
) -> Result<f64> {
    let w = model.weights();
    let lhs = x.matrix().gram().matmul(w)?.add(&w.scale(model.lambda()))?;
    let rhs = x.matrix().t_matmul(y)?;
    let denom = rhs.frobenius_norm().as_f64();
    let num = lhs.sub(&rhs)?.frobenius_norm().as_f64();
    Ok(if denom == 0.0 { num } else { num / denom })
}

/// Class scores `x_test · w`.
pub fn predict<T: Scalar>(model: &ReadoutModel<T>, x_test: &StateMatrix<T>) -> Result<Matrix<T>> {
    if x_test.dims() != model.weights.rows() {
        return Err(Error::DimensionMismatch(format!(
            "states have {} features, model expects {}",
            x_test.dims(),
            model.weights.rows()
        )));
    }
    x_test.matrix().matmul(&model.weights)
}

/// Row-wise argmax; ties go to the lowest index.
pub fn classify<T: Scalar>(scores: &Matrix<T>) -> Vec<usize> {
    scores.row_iter().map(argmax).collect()
}

fn argmax<T: Scalar>(row: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Square `s x s` counts, rows = true class, columns = predicted class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    class_names: Vec<String>,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(class_names: Vec<String>) -> Self {
        let s = class_names.len();
        ConfusionMatrix {
            class_names,
            counts: vec![0; s * s],
        }
    }

    pub fn from_predictions(class_names: Vec<String>, truth: &[usize], predicted: &[usize]) -> Result<Self> {
        let mut cm = Self::new(class_names);
        let s = cm.num_classes();
        if truth.len() != predicted.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels vs {} predictions",
                truth.len(),
                predicted.len()
            )));
        }
        for (&t, &p) in truth.iter().zip(predicted) {
            if t >= s || p >= s {
                return Err(Error::InvalidParameter(format!(
                    "class index out of range for {s} classes"
                )));
            }
            cm.counts[t * s + p] += 1;
        }
        Ok(cm)
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.num_classes() + predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn row_sums(&self) -> Vec<u64> {
        let s = self.num_classes();
        (0..s)
            .map(|t| self.counts[t * s..(t + 1) * s].iter().sum())
            .collect()
    }

    pub fn correct(&self) -> u64 {
        (0..self.num_classes()).map(|i| self.get(i, i)).sum()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["true\\predicted".to_string()];
        header.extend(self.class_names.iter().cloned());
        w.write_record(&header)?;
        let s = self.num_classes();
        for (t, name) in self.class_names.iter().enumerate() {
            let mut record = vec![name.clone()];
            record.extend(self.counts[t * s..(t + 1) * s].iter().map(u64::to_string));
            w.write_record(&record)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let class_names: Vec<String> = r.headers()?.iter().skip(1).map(str::to_string).collect();
        let mut counts = Vec::new();
        for record in r.records() {
            for field in record?.iter().skip(1) {
                counts.push(
                    field
                        .parse()
                        .map_err(|_| Error::Config(format!("not a count: `{field}`")))?,
                );
            }
        }
        if counts.len() != class_names.len() * class_names.len() {
            return Err(Error::DimensionMismatch("confusion matrix is not square".into()));
        }
        Ok(ConfusionMatrix { class_names, counts })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    /// Mean over all `k * s` entries of `(score - target)²`.
    pub mse_loss: f64,
    pub confusion: ConfusionMatrix,
}

pub fn evaluate<T: Scalar>(
    model: &ReadoutModel<T>,
    x_test: &StateMatrix<T>,
    labels: &[usize],
) -> Result<Evaluation> {
    if x_test.samples() == 0 {
        return Err(Error::Empty("test set has no samples".into()));
    }
    if labels.len() != x_test.samples() {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for {} states",
            labels.len(),
            x_test.samples()
        )));
    }
    let scores = predict(model, x_test)?;
    evaluate_scores(&scores, labels, model.class_names().to_vec())
}

fn evaluate_scores<T: Scalar>(
    scores: &Matrix<T>,
    labels: &[usize],
    class_names: Vec<String>,
) -> Result<Evaluation> {
    let s = scores.cols();
    let mut sq = 0.0;
    for (row, &label) in scores.row_iter().zip(labels) {
        if label >= s {
            return Err(Error::InvalidParameter(format!(
                "label {label} out of range for {s} classes"
            )));
        }
        for (c, &v) in row.iter().enumerate() {
            let target = if c == label { 1.0 } else { 0.0 };
            let e = v.as_f64() - target;
            sq += e * e;
        }
    }
    let predicted = classify(scores);
    let confusion = ConfusionMatrix::from_predictions(class_names, labels, &predicted)?;
    let k = labels.len();
    Ok(Evaluation {
        accuracy: confusion.correct() as f64 / k as f64,
        mse_loss: sq / (k * s) as f64,
        confusion,
    })
}

/// Settings of the mini-batch trainer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterativeConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub lambda: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for IterativeConfig {
    fn default() -> Self {
        IterativeConfig {
            epochs: 30,
            learning_rate: 0.01,
            lambda: DEFAULT_LAMBDA,
            batch_size: 32,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub accuracy: f64,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainHistory {
    pub records: Vec<EpochRecord>,
}

impl TrainHistory {
    pub fn last(&self) -> Option<&EpochRecord> {
        self.records.last()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// CSV columns `epoch,accuracy,loss`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["epoch", "accuracy", "loss"])?;
        for r in &self.records {
            w.write_record([r.epoch.to_string(), r.accuracy.to_string(), r.loss.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let mut records = Vec::new();
        for record in r.records() {
            let record = record?;
            if record.len() != 3 {
                return Err(Error::DimensionMismatch("history rows need 3 fields".into()));
            }
            records.push(EpochRecord {
                epoch: record[0]
                    .parse()
                    .map_err(|_| Error::Config(format!("bad epoch `{}`", &record[0])))?,
                accuracy: parse_f64(&record[1])?,
                loss: parse_f64(&record[2])?,
            });
        }
        Ok(TrainHistory { records })
    }
}

/// `(‖xw − y‖² + λ‖w‖²) / k`.
pub fn objective<T: Scalar>(x: &StateMatrix<T>, y: &Matrix<T>, w: &Matrix<T>, lambda: T) -> Result<T> {
    let r = x.matrix().matmul(w)?.sub(y)?;
    let k = T::from_usize_lossy(x.samples());
    let data: T = r.as_slice().iter().map(|&e| e * e).sum();
    let reg: T = w.as_slice().iter().map(|&e| e * e).sum();
    Ok((data + lambda * reg) / k)
}

/// Exact gradient of [`objective`].
pub fn gradient<T: Scalar>(x: &StateMatrix<T>, y: &Matrix<T>, w: &Matrix<T>, lambda: T) -> Result<Matrix<T>> {
    let rows: Vec<usize> = (0..x.samples()).collect();
    let mut g = Matrix::zeros(w.rows(), w.cols());
    minibatch_gradient(x, y, &rows, w, lambda, &mut g)?;
    Ok(g)
}

/// Unbiased estimate of the [`objective`] gradient from `rows`:
/// `(2/B) x_bᵀ(x_b w − y_b) + (2λ/k) w`.
fn minibatch_gradient<T: Scalar>(
    x: &StateMatrix<T>,
    y: &Matrix<T>,
    rows: &[usize],
    w: &Matrix<T>,
    lambda: T,
    grad: &mut Matrix<T>,
) -> Result<()> {
    let (j, s) = w.shape();
    if x.dims() != j || y.cols() != s || x.samples() != y.rows() {
        return Err(Error::DimensionMismatch(format!(
            "states {:?}, targets {:?}, weights {:?}",
            x.matrix().shape(),
            y.shape(),
            w.shape()
        )));
    }
    let two = T::lit(2.0);
    let decay = two * lambda / T::from_usize_lossy(x.samples());
    for (g, &wv) in grad.as_mut_slice().iter_mut().zip(w.as_slice()) {
        *g = decay * wv;
    }
    let scale = two / T::from_usize_lossy(rows.len());
    let mut residual = vec![T::zero(); s];
    for &r in rows {
        let xr = x.matrix().row(r);
        residual.copy_from_slice(y.row(r));
        residual.iter_mut().for_each(|v| *v = -*v);
        for (c, &xv) in xr.iter().enumerate() {
            axpy(xv, w.row(c), &mut residual);
        }
        residual.iter_mut().for_each(|v| *v *= scale);
        for (c, &xv) in xr.iter().enumerate() {
            axpy(xv, &residual, grad.row_mut(c));
        }
    }
    Ok(())
}

/// Mini-batch gradient descent from zero weights.
///
/// Each epoch visits the samples in a fresh permutation drawn from a
/// generator seeded with `config.seed`. After every epoch the history records
/// training accuracy and per-entry MSE.
pub fn fit_iterative<T: Scalar>(
    x: &StateMatrix<T>,
    y: &Matrix<T>,
    config: &IterativeConfig,
) -> Result<(ReadoutModel<T>, TrainHistory)> {
    let lambda = T::lit(config.lambda);
    check_fit_inputs(x, y, lambda)?;
    if config.epochs == 0 {
        return Err(Error::InvalidParameter("epochs must be >= 1".into()));
    }
    if !(config.learning_rate > 0.0) || !config.learning_rate.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "learning rate must be positive, got {}",
            config.learning_rate
        )));
    }
    if config.batch_size == 0 {
        return Err(Error::InvalidParameter("batch size must be >= 1".into()));
    }
    let labels = classify(y);
    let s = y.cols();
    let lr = T::lit(config.learning_rate);
    let mut w = Matrix::zeros(x.dims(), s);
    let mut grad = Matrix::zeros(x.dims(), s);
    let mut order: Vec<usize> = (0..x.samples()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut history = TrainHistory::default();

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            minibatch_gradient(x, y, batch, &w, lambda, &mut grad)?;
            axpy(-lr, grad.as_slice(), w.as_mut_slice());
        }
        let scores = x.matrix().matmul(&w)?;
        let eval = evaluate_scores(&scores, &labels, default_class_names(s))?;
        if !eval.mse_loss.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        history.records.push(EpochRecord {
            epoch,
            accuracy: eval.accuracy,
            loss: eval.mse_loss,
        });
    }
    Ok((ReadoutModel::new(w, lambda, default_class_names(s))?, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn states(rows: &[Vec<f64>]) -> StateMatrix<f64> {
        StateMatrix::from_matrix(Matrix::from_rows(rows).unwrap())
    }

    fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix<f64> {
        Matrix::from_vec(r, c, (0..r * c).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn identity_design() {
        let x = StateMatrix::from_matrix(Matrix::<f64>::identity(4));
        let y =
            Matrix::from_rows(&[vec![1.0, 2.0], vec![-3.0, 0.5], vec![0.0, 7.0], vec![2.5, -1.0]]).unwrap();
        assert_eq!(fit_ridge(&x, &y, 0.0).unwrap().weights(), &y);
        let half = fit_ridge(&x, &y, 1.0).unwrap();
        assert_eq!(half.weights(), &y.scale(0.5));
    }

    #[test]
    fn singular_without_regularization() {
        let x = states(&[vec![1.0, 1.0], vec![2.0, 2.0], vec![3.0, 3.0]]);
        let y = one_hot_targets::<f64>(&[0, 1, 0], 2).unwrap();
        match fit_ridge(&x, &y, 0.0) {
            Err(Error::Singular { condition }) => assert!(condition > 1e10),
            other => panic!("expected singular error, got {other:?}"),
        }
        assert!(fit_ridge(&x, &y, 1e-3).is_ok());
    }

    #[test]
    fn fit_input_validation() {
        let x = states(&[vec![1.0]]);
        let y = one_hot_targets::<f64>(&[0, 0], 1).unwrap();
        assert!(fit_ridge(&x, &y, 0.1).is_err());
        let y1 = one_hot_targets::<f64>(&[0], 1).unwrap();
        assert!(fit_ridge(&x, &y1, -1.0).is_err());
        let empty = StateMatrix::from_matrix(Matrix::<f64>::zeros(0, 2));
        assert!(fit_ridge(&empty, &Matrix::zeros(0, 1), 0.1).is_err());
    }

    #[test]
    fn square_system_interpolates() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut x = random_matrix(&mut rng, 10, 10);
        for i in 0..10 {
            x[(i, i)] += 3.0;
        }
        let y = random_matrix(&mut rng, 10, 4);
        let x = StateMatrix::from_matrix(x);
        let model = fit_ridge(&x, &y, 0.0).unwrap();
        let pred = predict(&model, &x).unwrap();
        assert!(pred.sub(&y).unwrap().frobenius_norm() < 1e-10);
        assert!(normal_equation_residual(&x, &y, &model).unwrap() < 1e-12);
    }

    #[test]
    fn bias_only_state_returns_bias_row() {
        let w = Matrix::from_rows(&[vec![5.0, 6.0], vec![0.25, -0.5]]).unwrap();
        let model = ReadoutModel::new(w, 0.0, vec!["a".into(), "b".into()]).unwrap();
        let x = states(&[vec![0.0, 1.0], vec![0.0, 1.0]]);
        let scores = predict(&model, &x).unwrap();
        assert_eq!(scores.row(0), &[0.25, -0.5]);
        assert_eq!(scores.row(1), &[0.25, -0.5]);
        let one = predict(&model, &states(&[vec![1.0, 1.0]])).unwrap();
        assert_eq!(one.rows(), 1);
        assert!(predict(&model, &states(&[vec![1.0, 1.0, 1.0]])).is_err());
    }

    #[test]
    fn argmax_rules() {
        let s =
            Matrix::from_rows(&[vec![0.1, 0.9, 0.3], vec![2.0, 2.0, 2.0], vec![-1.0, -0.5, -0.5]]).unwrap();
        assert_eq!(classify(&s), vec![1, 0, 1]);
    }

    #[test]
    fn evaluation_counts() {
        let names: Vec<String> = vec!["a".into(), "b".into(), "c".into()];
        let y = one_hot_targets::<f64>(&[0, 1, 2, 2], 3).unwrap();
        let model = ReadoutModel::new(Matrix::identity(3), 0.0, names.clone()).unwrap();
        let eval = evaluate(&model, &StateMatrix::from_matrix(y), &[0, 1, 2, 2]).unwrap();
        assert_eq!(eval.accuracy, 1.0);
        assert_eq!(eval.mse_loss, 0.0);
        assert_eq!(eval.confusion.row_sums(), vec![1, 1, 2]);
        assert_eq!(eval.confusion.total(), 4);
        for t in 0..3 {
            for p in 0..3 {
                assert_eq!(eval.confusion.get(t, p) > 0, t == p);
            }
        }
        let empty = StateMatrix::from_matrix(Matrix::<f64>::zeros(0, 3));
        assert!(evaluate(&model, &empty, &[]).is_err());
    }

    #[test]
    fn constant_predictor_hits_chance() {
        let labels: Vec<usize> = (0..1000).map(|i| i % 10).collect();
        let mut w = Matrix::<f64>::zeros(1, 10);
        w[(0, 3)] = 1.0;
        let model = ReadoutModel::new(w, 0.0, default_class_names(10)).unwrap();
        let x = StateMatrix::from_matrix(Matrix::from_vec(1000, 1, vec![1.0; 1000]).unwrap());
        let eval = evaluate(&model, &x, &labels).unwrap();
        assert!((eval.accuracy - 0.1).abs() < 1e-12);
        assert_eq!(eval.confusion.row_sums(), vec![100; 10]);
    }

    #[test]
    fn csv_readers_round_trip() {
        let cm = ConfusionMatrix::from_predictions(
            vec!["Apple".into(), "Apricot, dried".into()],
            &[0, 1, 1],
            &[0, 0, 1],
        )
        .unwrap();
        let mut buf = Vec::new();
        cm.write_csv(&mut buf).unwrap();
        assert_eq!(ConfusionMatrix::read_csv(&buf[..]).unwrap(), cm);

        let h = TrainHistory {
            records: vec![
                EpochRecord {
                    epoch: 1,
                    accuracy: 0.1 + 0.2,
                    loss: 1.0 / 3.0,
                },
                EpochRecord {
                    epoch: 2,
                    accuracy: 0.9,
                    loss: 1e-17,
                },
            ],
        };
        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        assert!(buf.starts_with(b"epoch,accuracy,loss\n"));
        assert_eq!(TrainHistory::read_csv(&buf[..]).unwrap(), h);
    }

    #[test]
    fn model_save_load() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let w = random_matrix(&mut rng, 5, 3);
        let model = ReadoutModel::new(w, 0.125, vec!["x".into(), "y".into(), "z".into()]).unwrap();
        model.save_to_dir(dir.path()).unwrap();
        assert_eq!(ReadoutModel::<f64>::load_from_dir(dir.path()).unwrap(), model);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = StateMatrix::from_matrix(random_matrix(&mut rng, 7, 4));
        let y = random_matrix(&mut rng, 7, 3);
        let w = random_matrix(&mut rng, 4, 3);
        let g = gradient(&x, &y, &w, 0.3).unwrap();
        let h = 1e-6;
        for idx in 0..12 {
            let mut wp = w.clone();
            let mut wm = w.clone();
            wp.as_mut_slice()[idx] += h;
            wm.as_mut_slice()[idx] -= h;
            let fd =
                (objective(&x, &y, &wp, 0.3).unwrap() - objective(&x, &y, &wm, 0.3).unwrap()) / (2.0 * h);
            let an = g.as_slice()[idx];
            assert!((fd - an).abs() <= 1e-5 * an.abs().max(1e-3), "{fd} vs {an}");
        }
    }

    #[test]
    fn iterative_converges_to_ridge() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = StateMatrix::from_matrix(random_matrix(&mut rng, 60, 5));
        let labels: Vec<usize> = (0..60).map(|i| i % 3).collect();
        let y = one_hot_targets::<f64>(&labels, 3).unwrap();
        let ridge = fit_ridge(&x, &y, 0.5).unwrap();
        let cfg = IterativeConfig {
            epochs: 3000,
            learning_rate: 0.1,
            lambda: 0.5,
            batch_size: 60,
            seed: 1,
        };
        let (model, history) = fit_iterative(&x, &y, &cfg).unwrap();
        assert_eq!(history.len(), 3000);
        assert_eq!(history.records[0].epoch, 1);
        let diff = model.weights().sub(ridge.weights()).unwrap().frobenius_norm();
        assert!(diff < 1e-6 * ridge.weights().frobenius_norm(), "diff {diff}");
    }

    #[test]
    fn iterative_is_seed_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = StateMatrix::from_matrix(random_matrix(&mut rng, 50, 6));
        let labels: Vec<usize> = (0..50).map(|i| (i * 7) % 4).collect();
        let y = one_hot_targets::<f64>(&labels, 4).unwrap();
        let cfg = IterativeConfig {
            epochs: 5,
            learning_rate: 0.1,
            lambda: 1e-3,
            batch_size: 8,
            seed: 42,
        };
        let a = fit_iterative(&x, &y, &cfg).unwrap();
        let b = fit_iterative(&x, &y, &cfg).unwrap();
        assert_eq!(a, b);
        let c = fit_iterative(&x, &y, &IterativeConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn huge_lambda_shrinks_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut x = random_matrix(&mut rng, 200, 4);
        for i in 0..200 {
            x[(i, 3)] = 1.0;
        }
        let x = StateMatrix::from_matrix(x);
        let labels: Vec<usize> = (0..200).map(|i| i % 2).collect();
        let y = one_hot_targets::<f64>(&labels, 2).unwrap();
        let cfg = IterativeConfig {
            epochs: 20,
            learning_rate: 1e-5,
            lambda: 1e6,
            batch_size: 200,
            seed: 0,
        };
        let (model, history) = fit_iterative(&x, &y, &cfg).unwrap();
        assert!(model.weights().frobenius_norm() < 1e-3);
        // Zero scores against balanced one-hot targets: per-entry MSE -> 1/2.
        assert!((history.last().unwrap().loss - 0.5).abs() < 1e-3);
    }

    #[test]
    fn tiny_learning_rate_learns_nothing() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let x = StateMatrix::from_matrix(random_matrix(&mut rng, 100, 5));
        let labels: Vec<usize> = (0..100).map(|i| i % 10).collect();
        let y = one_hot_targets::<f64>(&labels, 10).unwrap();
        let cfg = IterativeConfig {
            epochs: 1,
            learning_rate: 1e-12,
            ..Default::default()
        };
        let (model, history) = fit_iterative(&x, &y, &cfg).unwrap();
        assert!(model.weights().frobenius_norm() < 1e-9);
        assert!(history.records[0].accuracy <= 0.3);
    }

    #[test]
    fn divergence_reports_epoch() {
        let x = states(&[vec![1e3, 1.0], vec![-1e3, 1.0]]);
        let y = one_hot_targets::<f64>(&[0, 1], 2).unwrap();
        let cfg = IterativeConfig {
            epochs: 50,
            learning_rate: 10.0,
            lambda: 0.0,
            batch_size: 1,
            seed: 0,
        };
        match fit_iterative(&x, &y, &cfg) {
            Err(Error::Diverged { epoch }) => assert!(epoch >= 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn iterative_rejects_bad_config() {
        let x = states(&[vec![1.0]]);
        let y = one_hot_targets::<f64>(&[0], 1).unwrap();
        for cfg in [
            IterativeConfig {
                epochs: 0,
                ..Default::default()
            },
            IterativeConfig {
                learning_rate: 0.0,
                ..Default::default()
            },
            IterativeConfig {
                batch_size: 0,
                ..Default::default()
            },
        ] {
            assert!(fit_iterative(&x, &y, &cfg).is_err());
        }
    }

    proptest! {
        #[test]
        fn argmax_invariant_under_positive_affine(
            row in prop::collection::vec(-10.0f64..10.0, 1..12),
            c in 0.01f64..100.0,
            d in -50.0f64..50.0,
        ) {
            let s = Matrix::from_vec(1, row.len(), row.clone()).unwrap();
            let t = Matrix::from_vec(1, row.len(), row.iter().map(|v| v * c + d).collect()).unwrap();
            let cubed = Matrix::from_vec(1, row.len(), row.iter().map(|v| v.powi(3)).collect()).unwrap();
            let base = classify(&s);
            prop_assert_eq!(classify(&t), base.clone());
            prop_assert_eq!(classify(&cubed), base);
        }

        #[test]
        fn stronger_regularization_shrinks_weights(seed in 0u64..1000, l1 in 1e-4f64..1.0, factor in 1.5f64..100.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = StateMatrix::from_matrix(random_matrix(&mut rng, 15, 6));
            let y = random_matrix(&mut rng, 15, 3);
            let w1 = fit_ridge(&x, &y, l1).unwrap().weights().frobenius_norm();
            let w2 = fit_ridge(&x, &y, l1 * factor).unwrap().weights().frobenius_norm();
            prop_assert!(w1 >= w2);
        }
    }
}
