//! Direct-summation Newtonian gravity, `nbody_gravity(mass, G[, eps])`:
//! `a_i = sum_{j != i} G m_j (r_j - r_i) / (|r_ji|^2 + eps^2)^{3/2}` over all
//! active particles, without cell lists or boundary images.

use super::{Influence, Interaction, InteractionContext, InteractionError};
use crate::sfl::functions::Arity;
use crate::tensor::{Shape, Tensor};

pub struct NBodyGravity;

impl Interaction for NBodyGravity {
    fn name(&self) -> &str {
        "nbody_gravity"
    }

    fn arity(&self) -> Arity {
        Arity::range(2, 3)
    }

    fn influence(&self) -> Influence {
        Influence::Infinite
    }

    fn evaluate(&self, ctx: &InteractionContext<'_>, i: usize) -> Result<Tensor, InteractionError> {
        let ps = ctx.particles();
        let d = ps.dimension();
        let g = ctx.scalar(1, i, "nbody_gravity")?;
        let eps = if ctx.operand_count() > 2 {
            ctx.scalar(2, i, "nbody_gravity")?
        } else {
            0.0
        };
        let eps2 = eps * eps;
        let xi = ps.position(i).as_slice();
        let mut acc = [0.0; 3];
        for j in 0..ps.len() {
            if j == i || !ps.is_active(j) {
                continue;
            }
            let xj = ps.position(j).as_slice();
            let mut rel = [0.0; 3];
            let mut r2 = 0.0;
            for a in 0..d {
                rel[a] = xj[a] - xi[a];
                r2 += rel[a] * rel[a];
            }
            if r2 == 0.0 && eps2 == 0.0 {
                return Err(InteractionError::Invalid(format!(
                    "particles {i} and {j} coincide (set a softening length)"
                )));
            }
            let s = r2 + eps2;
            let f = g * ctx.scalar(0, j, "nbody_gravity")? / (s * s.sqrt());
            for a in 0..d {
                acc[a] += f * rel[a];
            }
        }
        let mut out = Tensor::zeros(Shape::new(d, 1));
        out.as_mut_slice().copy_from_slice(&acc[..d]);
        Ok(out)
    }
}
