//! Quintic Wendland smoothing kernel.
//!
//! `W(r, h) = alpha_D (1 - q/2)^4 (2q + 1)`, `q = r / h`, support `2h`.
//! Gradients are taken with respect to particle `i` and expressed in the
//! neighbor convention `rel = r_j - r_i`:
//! `grad_i W = 5 alpha_D q (1 - q/2)^3 / h * rel / |rel|`.

use std::f64::consts::PI;

use thiserror::Error;

use crate::sfl::keyword::{KernelFamily, KernelKeyword};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("smoothing length must be positive, got {0}")]
    NonPositiveH(f64),
    #[error("kernel gradient undefined for zero-length separation")]
    ZeroSeparation,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel {
    pub family: KernelFamily,
    pub dimension: usize,
    pub h: f64,
    pub alpha: f64,
}

pub fn wendland_alpha(dimension: usize, h: f64) -> f64 {
    match dimension {
        1 => 3.0 / (4.0 * h),
        2 => 7.0 / (4.0 * PI * h * h),
        _ => 21.0 / (16.0 * PI * h * h * h),
    }
}

impl Kernel {
    pub fn new(keyword: &KernelKeyword, h: f64) -> Result<Self, KernelError> {
        Self::wendland(keyword.dimension, h).map(|k| Kernel {
            family: keyword.family,
            ..k
        })
    }

    pub fn wendland(dimension: usize, h: f64) -> Result<Self, KernelError> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(KernelError::NonPositiveH(h));
        }
        Ok(Kernel {
            family: KernelFamily::Wendland,
            dimension,
            h,
            alpha: wendland_alpha(dimension, h),
        })
    }

    /// Kernel built from an interaction radius (the support, `2h`).
    pub fn from_radius(keyword: &KernelKeyword, radius: f64) -> Result<Self, KernelError> {
        Self::new(keyword, radius / 2.0)
    }

    pub fn support(&self) -> f64 {
        2.0 * self.h
    }

    pub fn value(&self, distance: f64) -> f64 {
        let q = distance / self.h;
        if q >= 2.0 {
            return 0.0;
        }
        let a = 1.0 - 0.5 * q;
        self.alpha * a * a * a * a * (2.0 * q + 1.0)
    }

    /// `dW/dr`, non-positive on the support.
    pub fn derivative(&self, distance: f64) -> f64 {
        let q = distance / self.h;
        if q >= 2.0 {
            return 0.0;
        }
        let a = 1.0 - 0.5 * q;
        -5.0 * self.alpha * q * a * a * a / self.h
    }

    /// Scalar factor `F` with `grad_i W = F * rel`; zero at `rel = 0`.
    pub fn gradient_factor(&self, distance: f64) -> f64 {
        if distance <= 0.0 {
            return 0.0;
        }
        -self.derivative(distance) / distance
    }

    /// `grad_i W` for `rel = r_j - r_i` (first `dimension` components used).
    pub fn gradient(&self, rel: &[f64]) -> Result<[f64; 3], KernelError> {
        let dist = rel.iter().map(|v| v * v).sum::<f64>().sqrt();
        if dist == 0.0 {
            return Err(KernelError::ZeroSeparation);
        }
        let f = self.gradient_factor(dist);
        let mut out = [0.0; 3];
        for (o, r) in out.iter_mut().zip(rel) {
            *o = f * r;
        }
        Ok(out)
    }
}
