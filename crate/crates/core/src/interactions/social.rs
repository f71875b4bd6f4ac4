//! Social force model for pedestrians,
//! `sfm(v, v0, rdesired, R, A, B, k, c, m, tau)`:
//!
//! `(v0 e0 - v_i) / tau + 1/m_i sum_j (-A e^{(R_ij - d)/B} - k (R_ij - d)^+ + c_ij) n_ji`
//!
//! with `e0` the unit vector towards `rdesired`, `R_ij = R_i + R_j`,
//! `c_ij = (c_i + c_j) / 2`, over neighbors closer than the smallest cell edge.

use super::{Influence, Interaction, InteractionContext, InteractionError};
use crate::diagnostics::Warning;
use crate::sfl::functions::Arity;
use crate::tensor::{Shape, Tensor};

const V: usize = 0;
const V0: usize = 1;
const RDESIRED: usize = 2;
const R: usize = 3;
const A: usize = 4;
const B: usize = 5;
const K: usize = 6;
const C: usize = 7;
const M: usize = 8;
const TAU: usize = 9;

pub struct SocialForce;

impl Interaction for SocialForce {
    fn name(&self) -> &str {
        "sfm"
    }

    fn arity(&self) -> Arity {
        Arity::exactly(10)
    }

    fn influence(&self) -> Influence {
        Influence::Finite { radius_operand: None }
    }

    fn evaluate(&self, ctx: &InteractionContext<'_>, i: usize) -> Result<Tensor, InteractionError> {
        let ps = ctx.particles();
        let d = ps.dimension();
        let s = |k: usize, j: usize| ctx.scalar(k, j, "sfm");
        let tau = s(TAU, i)?;
        let mi = s(M, i)?;
        if tau <= 0.0 || mi <= 0.0 {
            return Err(InteractionError::Invalid(format!(
                "tau and m must be positive (particle {i})"
            )));
        }
        let vi = *ctx.operand(V, i);
        let target = ctx.operand(RDESIRED, i);
        if vi.shape() != Shape::new(d, 1) || target.shape() != Shape::new(d, 1) {
            return Err(InteractionError::Invalid(format!(
                "velocity and desired position must be {d}x1"
            )));
        }
        let e0 = target.sub(ps.position(i))?;
        let dist = e0.norm();
        let e0 = if dist > 0.0 {
            e0.scale(1.0 / dist)
        } else {
            ctx.warn(Warning::ZeroDirection);
            Tensor::zeros(Shape::new(d, 1))
        };
        let drive = e0.scale(s(V0, i)?).sub(&vi)?.scale(1.0 / tau);

        let (ri, ci) = (s(R, i)?, s(C, i)?);
        let (a, b, k) = (s(A, i)?, s(B, i)?, s(K, i)?);
        let cell_min = ps.domain().min_cell_size();
        let social = ctx.interact(i, cell_min, Tensor::zeros(Shape::new(d, 1)), |p| {
            if !(p.dist > 0.0 && p.dist < cell_min) {
                return Ok(None);
            }
            let rij = ri + s(R, p.j)?;
            let cij = 0.5 * (ci + s(C, p.j)?);
            let body = if p.dist < rij { k * (rij - p.dist) } else { 0.0 };
            let magnitude = -a * ((rij - p.dist) / b).exp() - body + cij;
            let mut out = Tensor::zeros(Shape::new(d, 1));
            for (ax, o) in out.as_mut_slice().iter_mut().enumerate() {
                *o = magnitude * p.rel[ax] / p.dist / mi;
            }
            Ok(Some(out))
        })?;
        Ok(drive.add(&social)?)
    }
}
