//! Hertzian contact with Coulomb friction, angular motion neglected.
//!
//! Operands: `(v, R, E, nu, mass, c_f, radius[, damping])`. `radius` is the
//! neighbor search cutoff; the optional `damping` multiplies `c_Hz`
//! (default 1).
//!
//! For overlap `delta = R_i + R_j - |r_ji| > 0` and `n = r_ji / |r_ji|`:
//! `k = 4/3 sqrt(R') E'`, `c = sqrt(m' k) / 8`, `ddelta = -(v_ji . n)`,
//! normal force on `i` `-(k delta^1.5 + c delta^0.25 ddelta) n`, friction
//! `c_f |f_n| v_t / |v_t|` with `v_t = v_ji - (v_ji . n) n`.
//! Wall contacts come from mirror images, so a particle meeting its own
//! image sees `R' = R/2`, `m' = m/2`, `E' = E / (2 (1 - nu^2))`.

use super::{Influence, Interaction, InteractionContext, InteractionError};
use crate::particles::Pair;
use crate::sfl::functions::Arity;
use crate::tensor::{Shape, Tensor};

pub const TANGENTIAL_VELOCITY_FLOOR: f64 = 1e-12;

const V: usize = 0;
const R: usize = 1;
const E: usize = 2;
const NU: usize = 3;
const MASS: usize = 4;
const CF: usize = 5;
const RADIUS: usize = 6;
const DAMPING: usize = 7;

/// Force exerted on `i` by the (possibly imaged) partner of `pair`.
fn contact_force(
    ctx: &InteractionContext<'_>,
    i: usize,
    pair: &Pair,
    vi: &Tensor,
    damping: f64,
) -> Result<Option<[f64; 3]>, InteractionError> {
    if pair.dist <= 0.0 {
        return Ok(None);
    }
    let j = pair.j;
    let scalar = |k: usize, p: usize| ctx.scalar(k, p, "dem_l");
    let (ri, rj) = (scalar(R, i)?, scalar(R, j)?);
    let delta = ri + rj - pair.dist;
    if delta <= 0.0 {
        return Ok(None);
    }
    let (ei, ej) = (scalar(E, i)?, scalar(E, j)?);
    if ri <= 0.0 || rj <= 0.0 || ei <= 0.0 || ej <= 0.0 {
        return Err(InteractionError::Invalid(format!(
            "radius and Young modulus must be positive (particles {i}, {j})"
        )));
    }
    let (nui, nuj) = (scalar(NU, i)?, scalar(NU, j)?);
    let (mi, mj) = (scalar(MASS, i)?, scalar(MASS, j)?);
    let r_eff = ri * rj / (ri + rj);
    let m_eff = mi * mj / (mi + mj);
    let e_eff = ei * ej / (ej * (1.0 - nui * nui) + ei * (1.0 - nuj * nuj));
    let k = 4.0 / 3.0 * r_eff.sqrt() * e_eff;
    let c = damping * (m_eff * k).sqrt() / 8.0;

    let d = ctx.dimension();
    let vj = ctx.partner(V, pair);
    let mut n = [0.0; 3];
    let mut vji = [0.0; 3];
    let mut vn = 0.0;
    for a in 0..d {
        n[a] = pair.rel[a] / pair.dist;
        vji[a] = vj.as_slice()[a] - vi.as_slice()[a];
        vn += vji[a] * n[a];
    }
    let ddelta = -vn;
    let fn_mag = k * delta.powf(1.5) + c * delta.powf(0.25) * ddelta;
    let mut force = [0.0; 3];
    for a in 0..d {
        force[a] = -fn_mag * n[a];
    }
    let cf = scalar(CF, i)?;
    if cf != 0.0 {
        let mut vt = [0.0; 3];
        let mut vt_norm = 0.0;
        for a in 0..d {
            vt[a] = vji[a] - vn * n[a];
            vt_norm += vt[a] * vt[a];
        }
        let vt_norm = vt_norm.sqrt();
        if vt_norm >= TANGENTIAL_VELOCITY_FLOOR {
            for a in 0..d {
                force[a] += cf * fn_mag.abs() * vt[a] / vt_norm;
            }
        }
    }
    Ok(Some(force))
}

fn sum_contacts(
    ctx: &InteractionContext<'_>,
    i: usize,
    walls_only: bool,
    op: &'static str,
) -> Result<Tensor, InteractionError> {
    let d = ctx.dimension();
    let vi = *ctx.operand(V, i);
    if vi.shape() != Shape::new(d, 1) {
        return Err(InteractionError::Invalid(format!(
            "velocity operand must be {d}x1, got {}",
            vi.shape()
        )));
    }
    let cutoff = ctx.scalar(RADIUS, i, op)?;
    let damping = if !has_damping(ctx) {
        1.0
    } else {
        ctx.scalar(DAMPING, i, op)?
    };
    let mass = ctx.scalar(MASS, i, op)?;
    let sum = ctx.interact(i, cutoff, Tensor::zeros(Shape::new(d, 1)), |p| {
        if walls_only && !p.mirrored {
            return Ok(None);
        }
        Ok(contact_force(ctx, i, p, &vi, damping)?.map(|f| Tensor::vector(&f[..d])))
    })?;
    Ok(if walls_only { sum } else { sum.scale(1.0 / mass) })
}

fn has_damping(ctx: &InteractionContext<'_>) -> bool {
    ctx.operand_count() > DAMPING
}

macro_rules! dem_common {
    ($name:literal) => {
        fn name(&self) -> &str {
            $name
        }
        fn arity(&self) -> Arity {
            Arity::range(7, 8)
        }
        fn influence(&self) -> Influence {
            Influence::Finite {
                radius_operand: Some(RADIUS),
            }
        }
    };
}

/// Acceleration from particle-particle and particle-wall contacts.
pub struct DemContact;

impl Interaction for DemContact {
    dem_common!("dem_l");

    fn evaluate(&self, ctx: &InteractionContext<'_>, i: usize) -> Result<Tensor, InteractionError> {
        sum_contacts(ctx, i, false, "dem_l")
    }
}

/// Wall (mirror image) contact force on each particle, not divided by mass.
pub struct DemBoundaryForce;

impl Interaction for DemBoundaryForce {
    dem_common!("dem_boundary_force");

    fn evaluate(&self, ctx: &InteractionContext<'_>, i: usize) -> Result<Tensor, InteractionError> {
        sum_contacts(ctx, i, true, "dem_boundary_force")
    }
}
