//! SPH operators. Operand order for all of them:
//! `(A, mass, rho, kernel keyword, radius)` where `radius` is the kernel
//! support (`2h`). `V_j = m_j / rho_j`, `rel = r_j - r_i`, and `grad W` is
//! the gradient with respect to particle `i`.

use super::{Influence, Interaction, InteractionContext, InteractionError};
use crate::diagnostics::Warning;
use crate::kernels::Kernel;
use crate::particles::Pair;
use crate::sfl::functions::Arity;
use crate::tensor::{Shape, Tensor};

const A: usize = 0;
const MASS: usize = 1;
const RHO: usize = 2;
const KERNEL: usize = 3;
const RADIUS: usize = 4;

fn setup(ctx: &InteractionContext<'_>, i: usize, op: &'static str) -> Result<(f64, Kernel), InteractionError> {
    let radius = ctx.scalar(RADIUS, i, op)?;
    Ok((radius, ctx.kernel(radius)?))
}

fn volume(ctx: &InteractionContext<'_>, j: usize, op: &'static str) -> Result<f64, InteractionError> {
    let rho = ctx.scalar(RHO, j, op)?;
    if rho == 0.0 {
        return Err(InteractionError::Invalid(format!("zero density at particle {j}")));
    }
    Ok(ctx.scalar(MASS, j, op)? / rho)
}

/// Pairs at zero distance carry no direction. Self pairs and coincident
/// wall images are skipped silently; coincident distinct particles are
/// counted as warnings.
fn skip_zero(ctx: &InteractionContext<'_>, i: usize, pair: &Pair) -> bool {
    if pair.dist > 0.0 {
        return false;
    }
    if pair.j != i && !pair.mirrored {
        ctx.warn(Warning::CoincidentPair);
    }
    true
}

fn grad(kernel: &Kernel, pair: &Pair, d: usize) -> Tensor {
    let f = kernel.gradient_factor(pair.dist);
    let mut g = [0.0; 3];
    for a in 0..d {
        g[a] = f * pair.rel[a];
    }
    Tensor::vector(&g[..d])
}

fn column(d: usize) -> Tensor {
    Tensor::zeros(Shape::new(d, 1))
}

macro_rules! sph_common {
    ($name:literal) => {
        fn name(&self) -> &str {
            $name
        }
        fn arity(&self) -> Arity {
            Arity::exactly(5)
        }
        fn influence(&self) -> Influence {
            Influence::Finite {
                radius_operand: Some(RADIUS),
            }
        }
        fn kernel_operand(&self) -> Option<usize> {
            Some(KERNEL)
        }
    };
}

/// `S_i = sum_j A_j V_j W_ij`, self term included.
pub struct SphSample;

impl Interaction for SphSample {
    sph_common!("sph_S");

    fn evaluate(&self, ctx: &InteractionContext<'_>, i: usize) -> Result<Tensor, InteractionError> {
        let (radius, kernel) = setup(ctx, i, "sph_S")?;
        let zero = Tensor::zeros(ctx.operand(A, i).shape());
        ctx.interact(i, radius, zero, |p| {
            let w = kernel.value(p.dist);
            if w == 0.0 {
                return Ok(None);
            }
            Ok(Some(ctx.partner(A, p).scale(volume(ctx, p.j, "sph_S")? * w)))
        })
    }
}

/// `sum_j (A_j - A_i) . grad W_ij V_j`: the divergence for a d-vector `A`,
/// the gradient (a d-vector) for a scalar `A`.
pub struct SphDivergence;

impl Interaction for SphDivergence {
    sph_common!("sph_D00");

    fn evaluate(&self, ctx: &InteractionContext<'_>, i: usize) -> Result<Tensor, InteractionError> {
        let (radius, kernel) = setup(ctx, i, "sph_D00")?;
        let d = ctx.dimension();
        let ai = *ctx.operand(A, i);
        let vector = ai.shape() == Shape::new(d, 1) && d > 1;
        if !vector && !ai.is_scalar() {
            return Err(InteractionError::Invalid(format!(
                "operand must be a scalar or a {d}x1 vector, got {}",
                ai.shape()
            )));
        }
        let zero = if vector { Tensor::scalar(0.0) } else { column(d) };
        ctx.interact(i, radius, zero, |p| {
            if skip_zero(ctx, i, p) {
                return Ok(None);
            }
            let g = grad(&kernel, p, d);
            let diff = ctx.partner(A, p).sub(&ai)?;
            let v = volume(ctx, p.j, "sph_D00")?;
            Ok(Some(if vector {
                Tensor::scalar(diff.dot(&g)?.value() * v)
            } else {
                g.scale(diff.value() * v)
            }))
        })
    }
}

/// `rho_i sum_j (A_i / rho_i^2 + A_j / rho_j^2) m_j grad W_ij` for scalar `A`.
pub struct SphGradient;

impl Interaction for SphGradient {
    sph_common!("sph_G11");

    fn evaluate(&self, ctx: &InteractionContext<'_>, i: usize) -> Result<Tensor, InteractionError> {
        let (radius, kernel) = setup(ctx, i, "sph_G11")?;
        let d = ctx.dimension();
        let ai = ctx.scalar(A, i, "sph_G11")?;
        let rho_i = ctx.scalar(RHO, i, "sph_G11")?;
        if rho_i == 0.0 {
            return Err(InteractionError::Invalid(format!("zero density at particle {i}")));
        }
        let own = ai / (rho_i * rho_i);
        let sum = ctx.interact(i, radius, column(d), |p| {
            if skip_zero(ctx, i, p) {
                return Ok(None);
            }
            let rho_j = ctx.scalar(RHO, p.j, "sph_G11")?;
            if rho_j == 0.0 {
                return Err(InteractionError::Invalid(format!("zero density at particle {}", p.j)));
            }
            let aj = ctx.scalar(A, p.j, "sph_G11")?;
            let mj = ctx.scalar(MASS, p.j, "sph_G11")?;
            Ok(Some(grad(&kernel, p, d).scale((own + aj / (rho_j * rho_j)) * mj)))
        })?;
        Ok(sum.scale(rho_i))
    }
}

/// `sum_j 2 (A_j - A_i) (rel . grad W_ij) / |rel|^2 V_j`.
pub struct SphLaplacian;

impl Interaction for SphLaplacian {
    sph_common!("sph_L0");

    fn evaluate(&self, ctx: &InteractionContext<'_>, i: usize) -> Result<Tensor, InteractionError> {
        let (radius, kernel) = setup(ctx, i, "sph_L0")?;
        let ai = *ctx.operand(A, i);
        ctx.interact(i, radius, Tensor::zeros(ai.shape()), |p| {
            if skip_zero(ctx, i, p) {
                return Ok(None);
            }
            // rel . grad W / |rel|^2 equals the gradient factor
            let f = kernel.gradient_factor(p.dist);
            if f == 0.0 {
                return Ok(None);
            }
            let diff = ctx.partner(A, p).sub(&ai)?;
            Ok(Some(diff.scale(2.0 * f * volume(ctx, p.j, "sph_L0")?)))
        })
    }
}

/// `sum_j pi_ij m_j grad W_ij` with
/// `pi_ij = (v_ji . r_ji) / (rho_i |r_ji|^2)` for approaching pairs, else 0.
pub struct SphAViscosity;

impl Interaction for SphAViscosity {
    sph_common!("sph_A");

    fn evaluate(&self, ctx: &InteractionContext<'_>, i: usize) -> Result<Tensor, InteractionError> {
        let (radius, kernel) = setup(ctx, i, "sph_A")?;
        let d = ctx.dimension();
        let vi = *ctx.operand(A, i);
        if vi.shape() != Shape::new(d, 1) {
            return Err(InteractionError::Invalid(format!(
                "velocity operand must be {d}x1, got {}",
                vi.shape()
            )));
        }
        let rho_i = ctx.scalar(RHO, i, "sph_A")?;
        ctx.interact(i, radius, column(d), |p| {
            if skip_zero(ctx, i, p) {
                return Ok(None);
            }
            let vji = ctx.partner(A, p).sub(&vi)?;
            let mut vr = 0.0;
            for a in 0..d {
                vr += vji.as_slice()[a] * p.rel[a];
            }
            if vr >= 0.0 {
                return Ok(None);
            }
            let pi = vr / (rho_i * p.dist * p.dist);
            let mj = ctx.scalar(MASS, p.j, "sph_A")?;
            Ok(Some(grad(&kernel, p, d).scale(pi * mj)))
        })
    }
}
