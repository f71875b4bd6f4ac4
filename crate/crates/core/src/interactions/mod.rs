//! Precompiled interaction operators.
//!
//! An operator supplies its name, arity, influence and a per-pair
//! contribution rule, and is summed over the neighbors of particle `i` via
//! [`InteractionContext::interact`]. Registering it in a
//! [`FunctionTable`](crate::sfl::FunctionTable) is all that is needed to use
//! it from case files.

use std::sync::Arc;

use thiserror::Error;

use crate::diagnostics::{Diagnostics, Warning};
use crate::kernels::{Kernel, KernelError};
use crate::particles::{Pair, ParticleSystem};
use crate::sfl::functions::Arity;
use crate::sfl::keyword::KernelKeyword;
use crate::tensor::{Tensor, TensorError};

mod dem;
mod gravity;
mod social;
mod sph;

pub use dem::{DemBoundaryForce, DemContact, TANGENTIAL_VELOCITY_FLOOR};
pub use gravity::NBodyGravity;
pub use social::SocialForce;
pub use sph::{SphAViscosity, SphDivergence, SphGradient, SphLaplacian, SphSample};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InteractionError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("{0}")]
    Invalid(String),
}

/// Operand staged for one evaluation pass.
#[derive(Debug, Clone, PartialEq)]
pub enum Operand {
    /// Same value for every particle.
    Uniform(Tensor),
    Particles(Vec<Tensor>),
    /// Placeholder for the kernel keyword operand.
    Keyword,
}

impl Operand {
    pub fn at(&self, j: usize) -> &Tensor {
        static ZERO: Tensor = Tensor::ZERO;
        match self {
            Operand::Uniform(t) => t,
            Operand::Particles(v) => &v[j],
            Operand::Keyword => &ZERO,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Influence {
    /// Pairs found through the cell grid, within the value of operand
    /// `radius_operand` (or the smallest cell edge when `None`).
    Finite { radius_operand: Option<usize> },
    /// All pairs, bypassing the cell grid.
    Infinite,
}

pub trait Interaction: Send + Sync {
    fn name(&self) -> &str;
    fn arity(&self) -> Arity;
    fn influence(&self) -> Influence;

    /// Index of the kernel keyword operand, if the operator takes one.
    fn kernel_operand(&self) -> Option<usize> {
        None
    }

    fn evaluate(&self, ctx: &InteractionContext<'_>, i: usize) -> Result<Tensor, InteractionError>;
}

pub struct InteractionContext<'a> {
    particles: &'a ParticleSystem,
    operands: &'a [Operand],
    keyword: Option<&'a KernelKeyword>,
    diagnostics: &'a Diagnostics,
}

impl<'a> InteractionContext<'a> {
    pub fn new(
        particles: &'a ParticleSystem,
        operands: &'a [Operand],
        keyword: Option<&'a KernelKeyword>,
        diagnostics: &'a Diagnostics,
    ) -> Self {
        InteractionContext {
            particles,
            operands,
            keyword,
            diagnostics,
        }
    }

    pub fn particles(&self) -> &ParticleSystem {
        self.particles
    }

    pub fn dimension(&self) -> usize {
        self.particles.dimension()
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        self.diagnostics
    }

    pub fn warn(&self, kind: Warning) {
        self.diagnostics.warn(kind);
    }

    pub fn operand(&self, k: usize, j: usize) -> &Tensor {
        self.operands[k].at(j)
    }

    /// Operand `k` of the pair partner, mirrored across the walls the pair
    /// image was reflected on.
    pub fn partner(&self, k: usize, pair: &Pair) -> Tensor {
        let t = self.operand(k, pair.j);
        if pair.mirrored {
            t.mirrored(&pair.guide)
        } else {
            *t
        }
    }

    pub fn scalar(&self, k: usize, j: usize, op: &'static str) -> Result<f64, InteractionError> {
        Ok(self.operand(k, j).scalar_value(op)?)
    }

    pub fn operand_count(&self) -> usize {
        self.operands.len()
    }

    pub fn is_uniform(&self, k: usize) -> bool {
        matches!(self.operands[k], Operand::Uniform(_))
    }

    /// Kernel built from the keyword operand and the interaction radius
    /// (the kernel support, `2h`).
    pub fn kernel(&self, radius: f64) -> Result<Kernel, InteractionError> {
        let keyword = self
            .keyword
            .ok_or_else(|| InteractionError::Invalid("missing kernel keyword".into()))?;
        Ok(Kernel::from_radius(keyword, radius)?)
    }

    /// Sum `rule(pair)` over every candidate within `cutoff` of `i`,
    /// including `i` itself at distance zero.
    pub fn interact(
        &self,
        i: usize,
        cutoff: f64,
        zero: Tensor,
        mut rule: impl FnMut(&Pair) -> Result<Option<Tensor>, InteractionError>,
    ) -> Result<Tensor, InteractionError> {
        let mut acc = zero;
        let mut failure = None;
        self.particles.for_each_neighbor(i, |pair| {
            if failure.is_some() || pair.dist > cutoff {
                return;
            }
            match rule(pair) {
                Ok(Some(c)) => {
                    if let Err(e) = accumulate(&mut acc, &c) {
                        failure = Some(e);
                    }
                }
                Ok(None) => {}
                Err(e) => failure = Some(e),
            }
        });
        match failure {
            Some(e) => Err(e),
            None => Ok(acc),
        }
    }
}

fn accumulate(acc: &mut Tensor, c: &Tensor) -> Result<(), InteractionError> {
    if acc.shape() != c.shape() {
        return Err(TensorError::Mismatch {
            op: "interaction sum",
            lhs: acc.shape(),
            rhs: c.shape(),
        }
        .into());
    }
    for (a, b) in acc.as_mut_slice().iter_mut().zip(c.as_slice()) {
        *a += b;
    }
    Ok(())
}

/// Every built-in operator.
pub fn standard_operators() -> Vec<Arc<dyn Interaction>> {
    vec![
        Arc::new(SphSample),
        Arc::new(SphDivergence),
        Arc::new(SphGradient),
        Arc::new(SphLaplacian),
        Arc::new(SphAViscosity),
        Arc::new(DemContact),
        Arc::new(DemBoundaryForce),
        Arc::new(NBodyGravity),
        Arc::new(SocialForce),
    ]
}
