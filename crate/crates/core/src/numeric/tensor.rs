use super::NumericError;

/// Dense row-major tensor of `f64` values.
///
/// Invariant: the number of elements always equals the product of the shape,
/// and every dimension is positive. Both are enforced at construction and
/// preserved by every method, so indexing arithmetic never needs rechecking.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        let len = checked_len(shape).expect("invalid tensor shape");
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; len],
        }
    }

    pub fn filled(shape: &[usize], value: f64) -> Self {
        let len = checked_len(shape).expect("invalid tensor shape");
        Tensor {
            shape: shape.to_vec(),
            data: vec![value; len],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self, NumericError> {
        let len = checked_len(shape)?;
        if len != data.len() {
            return Err(NumericError::InvalidArgument {
                op: "tensor construction",
                message: format!(
                    "shape {:?} implies {} elements but {} were provided",
                    shape,
                    len,
                    data.len()
                ),
            });
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Reinterprets the same elements under a new shape of equal size.
    pub fn reshape(self, shape: &[usize]) -> Result<Self, NumericError> {
        let len = checked_len(shape)?;
        if len != self.data.len() {
            return Err(NumericError::ShapeMismatch {
                op: "reshape",
                left: self.shape,
                right: shape.to_vec(),
            });
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data: self.data,
        })
    }

    /// A single summed pass: any NaN or infinity poisons the sum, and a sum
    /// that overflows to infinity means the values are diverging anyway.
    /// Eight independent stripes keep the loop off the adder's latency chain.
    pub fn is_finite(&self) -> bool {
        let mut acc = [0.0f64; 8];
        let mut chunks = self.data.chunks_exact(8);
        for chunk in &mut chunks {
            for (a, &v) in acc.iter_mut().zip(chunk) {
                *a += v;
            }
        }
        let tail: f64 = chunks.remainder().iter().sum();
        (acc.iter().sum::<f64>() + tail).is_finite()
    }
}

fn checked_len(shape: &[usize]) -> Result<usize, NumericError> {
    if shape.is_empty() {
        return Err(NumericError::InvalidArgument {
            op: "tensor construction",
            message: "shape must have at least one dimension".to_string(),
        });
    }
    let mut len = 1usize;
    for &dim in shape {
        if dim == 0 {
            return Err(NumericError::InvalidArgument {
                op: "tensor construction",
                message: format!("shape {:?} contains a zero dimension", shape),
            });
        }
        len = len.checked_mul(dim).ok_or(NumericError::InvalidArgument {
            op: "tensor construction",
            message: format!("shape {:?} overflows usize", shape),
        })?;
    }
    Ok(len)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_vec_rejects_length_mismatch() {
        let err = Tensor::from_vec(&[2, 3], vec![0.0; 5]).unwrap_err();
        assert!(err.to_string().contains("6 elements"));
    }

    #[test]
    fn from_vec_rejects_zero_dimension() {
        assert!(Tensor::from_vec(&[2, 0], vec![]).is_err());
    }

    #[test]
    fn reshape_preserves_data() {
        let t = Tensor::from_vec(&[2, 3], (0..6).map(f64::from).collect()).unwrap();
        let r = t.clone().reshape(&[3, 2]).unwrap();
        assert_eq!(r.shape(), &[3, 2]);
        assert_eq!(r.data(), t.data());
        assert!(t.clone().reshape(&[4, 2]).is_err());
    }
}
