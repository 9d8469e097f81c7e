//! Feed-forward RTD array: every pulse of every diode becomes one feature.
//!
//! The diode law has no state variable, so the array is a static
//! elementwise nonlinearity. Feature order is diode-major, pulse-minor, with
//! a trailing bias entry of 1.

use std::io::{Read, Write};

use rayon::prelude::*;

use crate::device::DeviceParams;
use crate::encoding::VoltageFrame;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Largest drive magnitude accepted by [`forward`] (V).
pub const V_SUPPORTED: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ReservoirState<T> {
    features: Vec<T>,
}

impl<T: Scalar> ReservoirState<T> {
    /// Currents followed by the bias entry.
    pub fn features(&self) -> &[T] {
        &self.features
    }

    pub fn dim(&self) -> usize {
        self.features.len()
    }

    pub fn into_features(self) -> Vec<T> {
        self.features
    }
}

/// Rows are [`ReservoirState`]s of consecutive samples.
#[derive(Debug, Clone, PartialEq)]
pub struct StateMatrix<T> {
    data: Matrix<T>,
}

impl<T: Scalar> StateMatrix<T> {
    pub fn from_matrix(data: Matrix<T>) -> Self {
        StateMatrix { data }
    }

    pub fn samples(&self) -> usize {
        self.data.rows()
    }

    pub fn dims(&self) -> usize {
        self.data.cols()
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.data
    }

    pub fn into_matrix(self) -> Matrix<T> {
        self.data
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        StateMatrix {
            data: self.data.select_rows(indices),
        }
    }

    /// CSV with header `f0,...,f{j-1}`, one sample per line.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record((0..self.dims()).map(|i| format!("f{i}")))?;
        for row in self.data.row_iter() {
            w.write_record(row.iter().map(|x| x.to_string()))?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let dims = r.headers()?.len();
        let mut data = Vec::new();
        let mut rows = 0;
        for record in r.records() {
            for field in record?.iter() {
                let v: f64 = field
                    .parse()
                    .map_err(|_| Error::Config(format!("not a number: `{field}`")))?;
                data.push(T::lit(v));
            }
            rows += 1;
        }
        Ok(StateMatrix {
            data: Matrix::from_vec(rows, dims, data)?,
        })
    }
}

fn check_voltage<T: Scalar>(v: T) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::NonFinite(format!("drive voltage {v}")));
    }
    if v.abs() > T::lit(V_SUPPORTED) {
        return Err(Error::InvalidParameter(format!(
            "drive voltage {v} V outside the supported +/-{V_SUPPORTED} V"
        )));
    }
    Ok(())
}

/// Writes the state of one frame into `out` (length `rows * cols + 1`).
pub fn forward_into<T: Scalar>(
    frame: &VoltageFrame<T>,
    params: &DeviceParams<T>,
    out: &mut [T],
) -> Result<()> {
    let n = frame.volts().len();
    if out.len() != n + 1 {
        return Err(Error::DimensionMismatch(format!(
            "state slot of length {} for a frame with {n} pulses",
            out.len()
        )));
    }
    for (slot, &v) in out.iter_mut().zip(frame.volts()) {
        check_voltage(v)?;
        *slot = params.total_current(v);
    }
    out[n] = T::one();
    Ok(())
}

pub fn forward<T: Scalar>(frame: &VoltageFrame<T>, params: &DeviceParams<T>) -> Result<ReservoirState<T>> {
    let mut features = vec![T::zero(); frame.volts().len() + 1];
    forward_into(frame, params, &mut features)?;
    Ok(ReservoirState { features })
}

/// Evaluates all frames in parallel into pre-assigned rows.
pub fn forward_batch<T: Scalar>(
    frames: &[VoltageFrame<T>],
    params: &DeviceParams<T>,
) -> Result<StateMatrix<T>> {
    let first = frames
        .first()
        .ok_or_else(|| Error::Empty("no frames to evaluate".into()))?;
    let shape = (first.rows(), first.cols());
    if let Some(bad) = frames.iter().find(|f| (f.rows(), f.cols()) != shape) {
        return Err(Error::DimensionMismatch(format!(
            "frame of shape {:?} in a batch of {shape:?}",
            (bad.rows(), bad.cols())
        )));
    }
    let dims = shape.0 * shape.1 + 1;
    let mut data = Matrix::zeros(frames.len(), dims);
    data.as_mut_slice()
        .par_chunks_mut(dims)
        .zip(frames.par_iter())
        .try_for_each(|(row, frame)| forward_into(frame, params, row))?;
    Ok(StateMatrix { data })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::default_params;
    use crate::encoding::{EncodingConfig, GrayImage};
    use proptest::prelude::*;

    fn frame(rows: usize, cols: usize, v: Vec<f64>) -> VoltageFrame<f64> {
        VoltageFrame::new(rows, cols, v).unwrap()
    }

    #[test]
    fn zero_frame_gives_bias_only() {
        let p = default_params();
        let s = forward(&frame(2, 3, vec![0.0; 6]), &p).unwrap();
        assert_eq!(s.features(), &[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn mnist_frame_has_785_features() {
        let p = default_params();
        let s = forward(&frame(28, 28, vec![1.0; 784]), &p).unwrap();
        assert_eq!(s.dim(), 785);
        assert_eq!(s.features()[784], 1.0);
    }

    #[test]
    fn single_pulse() {
        let p = default_params();
        let s = forward(&frame(1, 1, vec![2.3]), &p).unwrap();
        assert_eq!(s.features(), &[p.total_current(2.3), 1.0]);
    }

    #[test]
    fn rejects_bad_voltages() {
        let p = default_params();
        assert!(matches!(
            forward(&frame(1, 1, vec![f64::NAN]), &p),
            Err(Error::NonFinite(_))
        ));
        assert!(forward(&frame(1, 1, vec![10.5]), &p).is_err());
    }

    #[test]
    fn batch_rules() {
        let p = default_params();
        let a = frame(1, 2, vec![1.0, -1.0]);
        let b = frame(1, 2, vec![3.0, 0.5]);
        let c = frame(1, 2, vec![-4.0, 4.0]);
        let m = forward_batch(&[a.clone(), b.clone(), c.clone()], &p).unwrap();
        for (i, f) in [a.clone(), b, c].iter().enumerate() {
            assert_eq!(m.matrix().row(i), forward(f, &p).unwrap().features());
        }
        let twin = forward_batch(&[a.clone(), a.clone()], &p).unwrap();
        assert_eq!(twin.matrix().row(0), twin.matrix().row(1));
        assert!(forward_batch::<f64>(&[], &p).is_err());
        assert!(forward_batch(&[a, frame(2, 1, vec![0.0, 0.0])], &p).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let p = default_params();
        let m = forward_batch(&[frame(1, 2, vec![1.0, -1.0]), frame(1, 2, vec![0.1, 4.9])], &p).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("f0,f1,f2\n"));
        assert_eq!(StateMatrix::<f64>::read_csv(&buf[..]).unwrap(), m);
    }

    proptest! {
        #[test]
        fn stateless_and_row_equivariant(
            v1 in prop::collection::vec(-5.0f64..5.0, 6),
            v2 in prop::collection::vec(-5.0f64..5.0, 6),
        ) {
            let p = default_params();
            let f1 = frame(3, 2, v1.clone());
            let f2 = frame(3, 2, v2);
            let alone = forward(&f1, &p).unwrap();
            let _ = forward(&f2, &p).unwrap();
            prop_assert_eq!(forward(&f1, &p).unwrap(), alone.clone());

            // Swap diode rows 0 and 2.
            let perm = [v1[4], v1[5], v1[2], v1[3], v1[0], v1[1]];
            let swapped = forward(&frame(3, 2, perm.to_vec()), &p).unwrap();
            let a = alone.features();
            let s = swapped.features();
            prop_assert_eq!(&s[0..2], &a[4..6]);
            prop_assert_eq!(&s[2..4], &a[2..4]);
            prop_assert_eq!(&s[4..6], &a[0..2]);
        }

        #[test]
        fn binary_encoding_yields_two_currents(
            px in prop::collection::vec(0.0f64..=1.0, 12),
            v_max in 0.2f64..5.0,
        ) {
            let p = default_params();
            let img = GrayImage::new(4, 3, px).unwrap();
            let cfg = EncodingConfig { v_max, ..Default::default() };
            let s = forward(&cfg.encode(&img).unwrap(), &p).unwrap();
            let lo = p.total_current(-v_max);
            let hi = p.total_current(v_max);
            prop_assert!(s.features()[..12].iter().all(|&i| i == lo || i == hi));
        }
    }
}
