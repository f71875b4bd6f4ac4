//! Unified small dense tensor: every symbol value and every intermediate
//! expression result is a `rows x cols` matrix with `rows, cols <= 3`.
//!
//! A scalar is a 1x1 tensor and a d-vector is a d x 1 column. Shapes are
//! checked when an operation runs, not when an expression is parsed.

use std::fmt;

use thiserror::Error;

use crate::numfmt::fmt_f64;

/// Largest extent along either tensor axis.
pub const MAX_EXTENT: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Shape {
    pub rows: usize,
    pub cols: usize,
}

impl Shape {
    pub const SCALAR: Shape = Shape { rows: 1, cols: 1 };

    pub fn new(rows: usize, cols: usize) -> Self {
        Shape { rows, cols }
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_scalar(&self) -> bool {
        self.rows == 1 && self.cols == 1
    }

    pub fn is_column(&self) -> bool {
        self.cols == 1
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.rows, self.cols)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TensorError {
    #[error("shape mismatch in `{op}`: {lhs} vs {rhs}")]
    Mismatch {
        op: &'static str,
        lhs: Shape,
        rhs: Shape,
    },
    #[error("`{op}` expects {expected}, got {got}")]
    Unsupported {
        op: &'static str,
        expected: &'static str,
        got: Shape,
    },
    #[error("tensor shape {rows}x{cols} is outside 1x1..3x3")]
    BadShape { rows: usize, cols: usize },
    #[error("tensor {shape} needs {expected} values, got {got}")]
    BadLength {
        shape: Shape,
        expected: usize,
        got: usize,
    },
}

/// Binary comparison operators; results are 1x1 tensors holding 0 or 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    Less,
    LessEq,
    Greater,
    GreaterEq,
    Equal,
    NotEqual,
}

impl Comparison {
    pub fn symbol(self) -> &'static str {
        match self {
            Comparison::Less => "<",
            Comparison::LessEq => "<=",
            Comparison::Greater => ">",
            Comparison::GreaterEq => ">=",
            Comparison::Equal => "==",
            Comparison::NotEqual => "!=",
        }
    }

    fn holds(self, a: f64, b: f64) -> bool {
        match self {
            Comparison::Less => a < b,
            Comparison::LessEq => a <= b,
            Comparison::Greater => a > b,
            Comparison::GreaterEq => a >= b,
            Comparison::Equal => a == b,
            Comparison::NotEqual => a != b,
        }
    }
}

/// Row-major tensor of at most 3x3 doubles. Unused storage is kept at zero,
/// so derived equality compares only meaningful entries.
#[derive(Clone, Copy, PartialEq)]
pub struct Tensor {
    rows: u8,
    cols: u8,
    data: [f64; 9],
}

impl Default for Tensor {
    fn default() -> Self {
        Tensor::scalar(0.0)
    }
}

impl Tensor {
    pub const ZERO: Tensor = Tensor {
        rows: 1,
        cols: 1,
        data: [0.0; 9],
    };

    pub fn new(rows: usize, cols: usize, values: &[f64]) -> Result<Self, TensorError> {
        if rows == 0 || cols == 0 || rows > MAX_EXTENT || cols > MAX_EXTENT {
            return Err(TensorError::BadShape { rows, cols });
        }
        if values.len() != rows * cols {
            return Err(TensorError::BadLength {
                shape: Shape::new(rows, cols),
                expected: rows * cols,
                got: values.len(),
            });
        }
        let mut data = [0.0; 9];
        data[..values.len()].copy_from_slice(values);
        Ok(Tensor {
            rows: rows as u8,
            cols: cols as u8,
            data,
        })
    }

    pub fn scalar(value: f64) -> Self {
        let mut data = [0.0; 9];
        data[0] = value;
        Tensor {
            rows: 1,
            cols: 1,
            data,
        }
    }

    /// Column vector from 1 to 3 components.
    ///
    /// Panics if `values` is empty or longer than three.
    pub fn vector(values: &[f64]) -> Self {
        assert!(
            (1..=MAX_EXTENT).contains(&values.len()),
            "vector length {} out of range",
            values.len()
        );
        let mut data = [0.0; 9];
        data[..values.len()].copy_from_slice(values);
        Tensor {
            rows: values.len() as u8,
            cols: 1,
            data,
        }
    }

    pub fn zeros(shape: Shape) -> Self {
        debug_assert!(shape.rows >= 1 && shape.rows <= 3 && shape.cols >= 1 && shape.cols <= 3);
        Tensor {
            rows: shape.rows as u8,
            cols: shape.cols as u8,
            data: [0.0; 9],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Tensor::zeros(Shape::new(n, n));
        for k in 0..n {
            t.data[k * n + k] = 1.0;
        }
        t
    }

    pub fn shape(&self) -> Shape {
        Shape::new(self.rows as usize, self.cols as usize)
    }

    pub fn rows(&self) -> usize {
        self.rows as usize
    }

    pub fn cols(&self) -> usize {
        self.cols as usize
    }

    pub fn len(&self) -> usize {
        self.rows() * self.cols()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_scalar(&self) -> bool {
        self.rows == 1 && self.cols == 1
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data[..self.len()]
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        let n = self.len();
        &mut self.data[..n]
    }

    /// First component; the value itself for a scalar.
    pub fn value(&self) -> f64 {
        self.data[0]
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols() + col]
    }

    pub fn scalar_value(&self, op: &'static str) -> Result<f64, TensorError> {
        if self.is_scalar() {
            Ok(self.data[0])
        } else {
            Err(TensorError::Unsupported {
                op,
                expected: "a scalar",
                got: self.shape(),
            })
        }
    }

    pub fn is_finite(&self) -> bool {
        self.as_slice().iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        let mut out = *self;
        for v in out.as_mut_slice() {
            *v = f(*v);
        }
        out
    }

    /// Elementwise combination of same-shape operands, broadcasting a 1x1
    /// operand over the other.
    pub fn zip_broadcast(
        &self,
        other: &Tensor,
        op: &'static str,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Tensor, TensorError> {
        if self.shape() == other.shape() {
            let mut out = *self;
            for (a, b) in out.as_mut_slice().iter_mut().zip(other.as_slice()) {
                *a = f(*a, *b);
            }
            Ok(out)
        } else if other.is_scalar() {
            let b = other.data[0];
            Ok(self.map(|a| f(a, b)))
        } else if self.is_scalar() {
            let a = self.data[0];
            Ok(other.map(|b| f(a, b)))
        } else {
            Err(self.mismatch(op, other))
        }
    }

    fn mismatch(&self, op: &'static str, other: &Tensor) -> TensorError {
        TensorError::Mismatch {
            op,
            lhs: self.shape(),
            rhs: other.shape(),
        }
    }

    fn zip_same(
        &self,
        other: &Tensor,
        op: &'static str,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Tensor, TensorError> {
        if self.shape() != other.shape() {
            return Err(self.mismatch(op, other));
        }
        let mut out = *self;
        for (a, b) in out.as_mut_slice().iter_mut().zip(other.as_slice()) {
            *a = f(*a, *b);
        }
        Ok(out)
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor, TensorError> {
        self.zip_same(other, "+", |a, b| a + b)
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor, TensorError> {
        self.zip_same(other, "-", |a, b| a - b)
    }

    /// Scalar broadcast when either side is 1x1, matrix product otherwise.
    pub fn mul(&self, other: &Tensor) -> Result<Tensor, TensorError> {
        if self.is_scalar() {
            let s = self.data[0];
            return Ok(other.map(|b| s * b));
        }
        if other.is_scalar() {
            let s = other.data[0];
            return Ok(self.map(|a| a * s));
        }
        if self.cols != other.rows {
            return Err(self.mismatch("*", other));
        }
        let (n, k, m) = (self.rows(), self.cols(), other.cols());
        let mut out = Tensor::zeros(Shape::new(n, m));
        for r in 0..n {
            for c in 0..m {
                let mut acc = 0.0;
                for t in 0..k {
                    acc += self.data[r * k + t] * other.data[t * m + c];
                }
                out.data[r * m + c] = acc;
            }
        }
        Ok(out)
    }

    fn elementwise_rhs(
        &self,
        other: &Tensor,
        op: &'static str,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Tensor, TensorError> {
        if other.is_scalar() {
            let b = other.data[0];
            Ok(self.map(|a| f(a, b)))
        } else {
            self.zip_same(other, op, f)
        }
    }

    pub fn div(&self, other: &Tensor) -> Result<Tensor, TensorError> {
        self.elementwise_rhs(other, "/", |a, b| a / b)
    }

    pub fn pow(&self, other: &Tensor) -> Result<Tensor, TensorError> {
        self.elementwise_rhs(other, "^", f64::powf)
    }

    pub fn neg(&self) -> Tensor {
        self.map(|a| -a)
    }

    pub fn scale(&self, s: f64) -> Tensor {
        self.map(|a| a * s)
    }

    pub fn compare(&self, other: &Tensor, cmp: Comparison) -> Result<Tensor, TensorError> {
        if !self.is_scalar() || !other.is_scalar() {
            return Err(self.mismatch(cmp.symbol(), other));
        }
        Ok(Tensor::scalar(if cmp.holds(self.data[0], other.data[0]) {
            1.0
        } else {
            0.0
        }))
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn norm_squared(&self) -> f64 {
        self.as_slice().iter().map(|v| v * v).sum()
    }

    pub fn dot(&self, other: &Tensor) -> Result<Tensor, TensorError> {
        if self.shape() != other.shape() {
            return Err(self.mismatch("dot", other));
        }
        Ok(Tensor::scalar(
            self.as_slice()
                .iter()
                .zip(other.as_slice())
                .map(|(a, b)| a * b)
                .sum(),
        ))
    }

    pub fn transpose(&self) -> Tensor {
        let (n, m) = (self.rows(), self.cols());
        let mut out = Tensor::zeros(Shape::new(m, n));
        for r in 0..n {
            for c in 0..m {
                out.data[c * n + r] = self.data[r * m + c];
            }
        }
        out
    }

    /// Stack two column vectors into one (the `|` separator).
    pub fn concat(&self, other: &Tensor) -> Result<Tensor, TensorError> {
        if !self.shape().is_column() || !other.shape().is_column() {
            return Err(self.mismatch("|", other));
        }
        let n = self.rows() + other.rows();
        if n > MAX_EXTENT {
            return Err(TensorError::BadShape { rows: n, cols: 1 });
        }
        let mut out = Tensor::zeros(Shape::new(n, 1));
        out.data[..self.rows()].copy_from_slice(self.as_slice());
        out.data[self.rows()..n].copy_from_slice(other.as_slice());
        Ok(out)
    }

    /// Apply per-axis reflection signs: components of column vectors are
    /// multiplied by `guide[r]`, matrix entries by `guide[r] * guide[c]`
    /// (row vectors by `guide[c]`), scalars are unchanged.
    pub fn mirrored(&self, guide: &[f64; 3]) -> Tensor {
        if self.is_scalar() {
            return *self;
        }
        let mut out = *self;
        let (n, m) = (self.rows(), self.cols());
        for r in 0..n {
            for c in 0..m {
                let g = match (n, m) {
                    (_, 1) => guide[r],
                    (1, _) => guide[c],
                    _ => guide[r] * guide[c],
                };
                out.data[r * m + c] *= g;
            }
        }
        out
    }

    /// Text form `RxC:v,v,...` with round-trip exact numbers.
    pub fn encode(&self) -> String {
        let values: Vec<String> = self.as_slice().iter().map(|v| fmt_f64(*v)).collect();
        format!("{}x{}:{}", self.rows, self.cols, values.join(","))
    }

    pub fn decode(text: &str) -> Option<Tensor> {
        let (shape, values) = text.split_once(':')?;
        let (r, c) = shape.split_once('x')?;
        let rows: usize = r.trim().parse().ok()?;
        let cols: usize = c.trim().parse().ok()?;
        let values: Vec<f64> = values
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .ok()?;
        Tensor::new(rows, cols, &values).ok()
    }
}

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tensor({})", self.encode())
    }
}

impl fmt::Display for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_scalar() {
            return write!(f, "{}", fmt_f64(self.data[0]));
        }
        write!(f, "[")?;
        for r in 0..self.rows() {
            if r > 0 {
                write!(f, "; ")?;
            }
            for c in 0..self.cols() {
                if c > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", fmt_f64(self.get(r, c)))?;
            }
        }
        write!(f, "]")
    }
}
