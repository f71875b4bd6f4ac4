//! Recursive evaluation of bound trees.
//!
//! Reductions and interaction operands are staged once per evaluation pass
//! (post-order over the tree) so that the per-particle recursion never
//! re-evaluates a whole-system quantity inside a pair loop.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ast::BinaryOp;
use super::functions::{Builtin, Reduction};
use super::tree::{Node, SymbolRef};
use crate::diagnostics::Diagnostics;
use crate::interactions::{InteractionContext, Operand};
use crate::parallel::Executor;
use crate::particles::ParticleSystem;
use crate::tensor::{Tensor, TensorError};

/// Read access to symbol values during evaluation.
pub trait Symbols: Sync {
    fn value(&self, symbol: SymbolRef, i: usize) -> &Tensor;
    fn particle_count(&self) -> usize;
    fn particles(&self) -> Option<&ParticleSystem>;

    fn is_active(&self, i: usize) -> bool {
        self.particles().map_or(true, |p| p.is_active(i))
    }
}

/// Identifies one evaluation pass for the counter-based `rand` streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RandKey {
    pub seed: u64,
    pub epoch: u64,
}

impl RandKey {
    /// Uniform sample in `[0, 1)` for (pass, node, particle).
    pub fn uniform(&self, stream: usize, i: usize) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.epoch);
        rng.set_word_pos((((i as u128) << 32) | stream as u128) * 2);
        rng.gen::<f64>()
    }
}

#[derive(Debug, Clone)]
pub enum Staged {
    Reduction(Tensor),
    Interaction(Vec<Operand>),
}

#[derive(Debug, Clone, Default)]
pub struct Staging {
    slots: Vec<Option<Staged>>,
}

impl Staging {
    pub fn empty() -> Self {
        Staging::default()
    }

    fn get(&self, slot: usize) -> Option<&Staged> {
        self.slots.get(slot).and_then(|s| s.as_ref())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalError {
    pub message: String,
    /// Innermost node first.
    pub path: Vec<String>,
    pub particle: Option<usize>,
}

impl EvalError {
    pub fn new(message: impl Into<String>) -> Self {
        EvalError {
            message: message.into(),
            path: Vec::new(),
            particle: None,
        }
    }

    fn at(mut self, node: &Node) -> Self {
        self.path.push(node.label());
        self
    }

    fn particle(mut self, i: usize) -> Self {
        self.particle.get_or_insert(i);
        self
    }
}

impl From<TensorError> for EvalError {
    fn from(e: TensorError) -> Self {
        EvalError::new(e.to_string())
    }
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)?;
        if !self.path.is_empty() {
            let path: Vec<&str> = self.path.iter().rev().map(String::as_str).collect();
            write!(f, " [node path: {}]", path.join(" > "))?;
        }
        if let Some(i) = self.particle {
            write!(f, " [particle {i}]")?;
        }
        Ok(())
    }
}

impl std::error::Error for EvalError {}

#[derive(Clone, Copy)]
pub struct EvalContext<'a> {
    pub symbols: &'a dyn Symbols,
    pub staging: &'a Staging,
    pub rand: RandKey,
    pub diagnostics: &'a Diagnostics,
}

/// Evaluate `node` for particle `i`.
pub fn evaluate(node: &Node, ctx: &EvalContext<'_>, i: usize) -> Result<Tensor, EvalError> {
    eval_node(node, ctx, i).map_err(|e| e.at(node))
}

fn eval_node(node: &Node, ctx: &EvalContext<'_>, i: usize) -> Result<Tensor, EvalError> {
    match node {
        Node::Literal(t) => Ok(*t),
        Node::Symbol { symbol, .. } => Ok(*ctx.symbols.value(*symbol, i)),
        Node::Neg(inner) => Ok(evaluate(inner, ctx, i)?.neg()),
        Node::Binary { op, lhs, rhs } => {
            let a = evaluate(lhs, ctx, i)?;
            let b = evaluate(rhs, ctx, i)?;
            Ok(match op {
                BinaryOp::Add => a.add(&b)?,
                BinaryOp::Sub => a.sub(&b)?,
                BinaryOp::Mul => a.mul(&b)?,
                BinaryOp::Div => a.div(&b)?,
                BinaryOp::Pow => a.pow(&b)?,
                BinaryOp::Compare(c) => a.compare(&b, *c)?,
            })
        }
        Node::Vector(items) => {
            let mut out = evaluate(&items[0], ctx, i)?;
            for item in &items[1..] {
                out = out.concat(&evaluate(item, ctx, i)?)?;
            }
            Ok(out)
        }
        Node::Builtin { f, args, id } => builtin(*f, args, *id, ctx, i),
        Node::Reduction { slot, .. } => match ctx.staging.get(*slot) {
            Some(Staged::Reduction(t)) => Ok(*t),
            _ => Err(EvalError::new("reduction evaluated before staging")),
        },
        Node::Interaction {
            op, kernel, slot, ..
        } => {
            let operands = match ctx.staging.get(*slot) {
                Some(Staged::Interaction(ops)) => ops,
                _ => return Err(EvalError::new("interaction evaluated before staging")),
            };
            let particles = ctx
                .symbols
                .particles()
                .ok_or_else(|| EvalError::new(format!("`{}` needs a particle system", op.name())))?;
            let ictx = InteractionContext::new(particles, operands, kernel.as_ref(), ctx.diagnostics);
            op.evaluate(&ictx, i)
                .map_err(|e| EvalError::new(format!("{}: {e}", op.name())))
        }
    }
}

fn builtin(
    f: Builtin,
    args: &[Node],
    id: usize,
    ctx: &EvalContext<'_>,
    i: usize,
) -> Result<Tensor, EvalError> {
    let arg = |k: usize| evaluate(&args[k], ctx, i);
    let unary = |g: fn(f64) -> f64| -> Result<Tensor, EvalError> { Ok(arg(0)?.map(g)) };
    match f {
        Builtin::Exp => unary(f64::exp),
        Builtin::Log => unary(f64::ln),
        Builtin::Sqrt => unary(f64::sqrt),
        Builtin::Sin => unary(f64::sin),
        Builtin::Cos => unary(f64::cos),
        Builtin::Tan => unary(f64::tan),
        Builtin::Abs => unary(f64::abs),
        Builtin::Floor => unary(f64::floor),
        Builtin::Ceil => unary(f64::ceil),
        Builtin::Sign => unary(|v| if v > 0.0 { 1.0 } else if v < 0.0 { -1.0 } else { 0.0 }),
        Builtin::Norm => Ok(Tensor::scalar(arg(0)?.norm())),
        Builtin::Min => Ok(arg(0)?.zip_broadcast(&arg(1)?, "min", f64::min)?),
        Builtin::Max => Ok(arg(0)?.zip_broadcast(&arg(1)?, "max", f64::max)?),
        Builtin::Dot => Ok(arg(0)?.dot(&arg(1)?)?),
        Builtin::Transpose => Ok(arg(0)?.transpose()),
        Builtin::If => {
            let cond = arg(0)?.scalar_value("if")?;
            if cond != 0.0 {
                arg(1)
            } else {
                arg(2)
            }
        }
        Builtin::Euler => {
            let x = arg(0)?;
            let xdot = arg(1)?;
            let dt = arg(2)?.scalar_value("euler")?;
            if x.shape() != xdot.shape() {
                return Err(TensorError::Mismatch {
                    op: "euler",
                    lhs: x.shape(),
                    rhs: xdot.shape(),
                }
                .into());
            }
            Ok(x.add(&xdot.scale(dt))?)
        }
        Builtin::Rand => {
            let a = arg(0)?.scalar_value("rand")?;
            let b = arg(1)?.scalar_value("rand")?;
            if a > b {
                return Err(EvalError::new(format!(
                    "rand: lower bound {} exceeds upper bound {}",
                    crate::numfmt::fmt_f64(a),
                    crate::numfmt::fmt_f64(b)
                )));
            }
            if a == b {
                return Ok(Tensor::scalar(a));
            }
            let u = ctx.rand.uniform(id, i);
            Ok(Tensor::scalar((a + (b - a) * u).min(b)))
        }
    }
}

/// Evaluate the staged nodes of `root` (reductions and interaction operands)
/// bottom-up for one evaluation pass.
pub fn stage(
    root: &Node,
    symbols: &dyn Symbols,
    rand: RandKey,
    diagnostics: &Diagnostics,
    exec: &Executor,
) -> Result<Staging, EvalError> {
    let mut staging = Staging {
        slots: vec![None; root.slot_count()],
    };
    let n = symbols.particle_count();
    for node in root.staged_nodes() {
        let staged = {
            let ctx = EvalContext {
                symbols,
                staging: &staging,
                rand,
                diagnostics,
            };
            let per_particle = |expr: &Node| -> Result<Vec<Tensor>, EvalError> {
                exec.map(n, |j| evaluate(expr, &ctx, j).map_err(|e| e.particle(j)))
            };
            match node {
                Node::Reduction { f, arg, .. } => {
                    let values: Vec<Tensor> = if arg.is_uniform() {
                        let v = evaluate(arg, &ctx, 0)?;
                        (0..n).filter(|j| symbols.is_active(*j)).map(|_| v).collect()
                    } else {
                        let all = per_particle(arg)?;
                        all.into_iter()
                            .enumerate()
                            .filter(|(j, _)| symbols.is_active(*j))
                            .map(|(_, v)| v)
                            .collect()
                    };
                    Staged::Reduction(reduce(*f, &values).map_err(|e| e.at(node))?)
                }
                Node::Interaction { op, args, .. } => {
                    let kernel_at = op.kernel_operand();
                    let mut operands = Vec::with_capacity(args.len());
                    for (k, arg) in args.iter().enumerate() {
                        let operand = if Some(k) == kernel_at {
                            Operand::Keyword
                        } else if arg.is_uniform() {
                            Operand::Uniform(evaluate(arg, &ctx, 0).map_err(|e| e.at(node))?)
                        } else {
                            Operand::Particles(per_particle(arg).map_err(|e| e.at(node))?)
                        };
                        operands.push(operand);
                    }
                    if let (
                        crate::interactions::Influence::Finite {
                            radius_operand: Some(radius_operand),
                        },
                        Some(ps),
                    ) = (op.influence(), symbols.particles())
                    {
                        if let Some(Operand::Uniform(r)) = operands.get(radius_operand) {
                            let cell = ps.domain().min_cell_size();
                            if r.value() > cell * (1.0 + 1e-12)
                                && diagnostics.warn(crate::diagnostics::Warning::RadiusExceedsCell)
                            {
                                log::warn!(
                                    "`{}` radius {} exceeds the smallest cell size {}; neighbors may be missed",
                                    op.name(),
                                    crate::numfmt::fmt_f64(r.value()),
                                    crate::numfmt::fmt_f64(cell)
                                );
                            }
                        }
                    }
                    Staged::Interaction(operands)
                }
                _ => unreachable!("only reductions and interactions are staged"),
            }
        };
        let slot = match node {
            Node::Reduction { slot, .. } | Node::Interaction { slot, .. } => *slot,
            _ => unreachable!(),
        };
        staging.slots[slot] = Some(staged);
    }
    Ok(staging)
}

fn reduce(f: Reduction, values: &[Tensor]) -> Result<Tensor, EvalError> {
    let first = *values
        .first()
        .ok_or_else(|| EvalError::new(format!("{}: no active particles", f.name())))?;
    match f {
        Reduction::Max | Reduction::Min => {
            let key = |t: &Tensor| if t.is_scalar() { t.value() } else { t.norm() };
            let mut best = first;
            let mut best_key = key(&first);
            for v in &values[1..] {
                let k = key(v);
                let better = match f {
                    Reduction::Max => k > best_key,
                    _ => k < best_key,
                };
                if better || k.is_nan() {
                    best = *v;
                    best_key = k;
                    if k.is_nan() {
                        break;
                    }
                }
            }
            // scalars keep their value, non-scalars reduce to the norm
            Ok(if best.is_scalar() { best } else { Tensor::scalar(best_key) })
        }
        Reduction::Sum | Reduction::Mean => {
            let mut acc = first;
            for v in &values[1..] {
                acc = acc.add(v)?;
            }
            if f == Reduction::Mean {
                acc = acc.scale(1.0 / values.len() as f64);
            }
            Ok(acc)
        }
    }
}

/// Evaluate a tree that contains no per-particle state, e.g. a constant
/// definition or a domain entry.
pub fn evaluate_uniform(
    root: &Node,
    symbols: &dyn Symbols,
    rand: RandKey,
    diagnostics: &Diagnostics,
) -> Result<Tensor, EvalError> {
    let exec = Executor::sequential();
    let staging = stage(root, symbols, rand, diagnostics, &exec)?;
    let ctx = EvalContext {
        symbols,
        staging: &staging,
        rand,
        diagnostics,
    };
    evaluate(root, &ctx, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sfl::functions::FunctionTable;
    use crate::sfl::parser::parse_expression;
    use crate::sfl::tree::{bind, Ids};

    struct Table {
        names: Vec<&'static str>,
        constants: Vec<Tensor>,
        field: Vec<Tensor>,
    }

    impl Symbols for Table {
        fn value(&self, symbol: SymbolRef, i: usize) -> &Tensor {
            match symbol {
                SymbolRef::Constant(k) => &self.constants[k],
                SymbolRef::Field(_) => &self.field[i],
                _ => unreachable!(),
            }
        }
        fn particle_count(&self) -> usize {
            self.field.len()
        }
        fn particles(&self) -> Option<&ParticleSystem> {
            None
        }
    }

    impl Table {
        fn new(field: &[f64]) -> Self {
            Table {
                names: vec!["rho0", "dt", "rho", "rhodot"],
                constants: vec![Tensor::scalar(1000.0), Tensor::scalar(1e-3)],
                field: field.iter().map(|v| Tensor::scalar(*v)).collect(),
            }
        }

        fn resolve(&self, name: &str) -> Option<SymbolRef> {
            match self.names.iter().position(|n| *n == name)? {
                k @ 0..=1 => Some(SymbolRef::Constant(k)),
                k => Some(SymbolRef::Field(k - 2)),
            }
        }

        fn eval_all(&self, src: &str, seed: u64) -> Vec<Tensor> {
            let functions = FunctionTable::builtins();
            let expr = parse_expression(src, &functions).unwrap();
            let node = bind(&expr, &|n| self.resolve(n), &functions, &mut Ids::default()).unwrap();
            let diag = Diagnostics::new();
            let key = RandKey { seed, epoch: 3 };
            let staging = stage(&node, self, key, &diag, &Executor::sequential()).unwrap();
            let ctx = EvalContext {
                symbols: self,
                staging: &staging,
                rand: key,
                diagnostics: &diag,
            };
            (0..self.particle_count().max(1))
                .map(|i| evaluate(&node, &ctx, i).unwrap())
                .collect()
        }

        fn eval(&self, src: &str) -> Tensor {
            self.eval_all(src, 0)[0]
        }
    }

    #[test]
    fn spec_examples() {
        let t = Table::new(&[1.0, 5.0, 3.0]);
        assert_eq!(t.eval("rho0").value(), 1000.0);
        assert_eq!(t.eval("fmax(rho)").value(), 5.0);
        assert_eq!(t.eval("fmin(rho)").value(), 1.0);
        assert_eq!(t.eval("fsum(rho)").value(), 9.0);
        assert_eq!(Table::new(&[2.0, 4.0]).eval("fmean(rho)").value(), 3.0);
        assert!((t.eval("euler(1000,5,1e-3)").value() - 1000.005).abs() < 1e-12);
        assert!((t.eval("euler(2.0,3.0,0.1)").value() - 2.3).abs() < 1e-12);
        assert_eq!(t.eval("euler(1|1,0|0,5)").as_slice(), &[1.0, 1.0]);
        assert!((t.eval("euler(0,-9.81,1e-3)").value() + 0.00981).abs() < 1e-15);
        assert_eq!(t.eval("-(-1)").value(), 1.0);
        assert_eq!(t.eval("2+3*4^2").value(), 50.0);
        assert_eq!(t.eval("-2^2").value(), -4.0);
        assert_eq!(t.eval("min(0.003,0.005)").value(), 0.003);
        assert_eq!(t.eval("exp(0)").value(), 1.0);
        assert!((t.eval("exp(1)").value() - std::f64::consts::E).abs() < 1e-9);
        assert_eq!(t.eval("norm(3|4)").value(), 5.0);
        assert_eq!(t.eval("rand(0,0)").value(), 0.0);
        assert_eq!(t.eval("rand(2,2+0)").value(), 2.0);
        assert_eq!(t.eval("if(1<2,7,8)").value(), 7.0);
        assert_eq!(t.eval("if(1>2,7,8)").value(), 8.0);
    }

    #[test]
    fn variable_dt_example() {
        let t = Table::new(&[10.0, 20.0]);
        let dt = t.eval("0.1*min(1/fmax(rho),0.0306)").value();
        // by hand: min(1/20, 0.0306) = 0.0306
        assert!((dt - 0.00306).abs() < 1e-15);
    }

    #[test]
    fn reductions_identical_at_every_index() {
        let t = Table::new(&[4.0, -1.0, 2.5, 9.0]);
        let all = t.eval_all("fmax(rho)+fsum(rho*rho)", 0);
        assert!(all.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn fmax_of_vectors_uses_norm() {
        let t = Table::new(&[1.0, -7.0, 3.0]);
        assert_eq!(t.eval("fmax(rho|0)").value(), 7.0);
        assert_eq!(t.eval("fmin(rho)").value(), -7.0);
    }

    #[test]
    fn rand_statistics_and_determinism() {
        let t = Table::new(&vec![0.0; 100_000]);
        let a = t.eval_all("rand(-1,1)", 11);
        let b = t.eval_all("rand(-1,1)", 11);
        assert_eq!(a, b);
        let c = t.eval_all("rand(-1,1)", 12);
        assert_ne!(a, c);
        assert!(a.iter().all(|v| (-1.0..=1.0).contains(&v.value())));
        let mean = a.iter().map(|v| v.value()).sum::<f64>() / a.len() as f64;
        assert!(mean.abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn rand_rejects_inverted_bounds() {
        let functions = FunctionTable::builtins();
        let t = Table::new(&[0.0]);
        let expr = parse_expression("1+rand(1,0)", &functions).unwrap();
        let node = bind(&expr, &|n| t.resolve(n), &functions, &mut Ids::default()).unwrap();
        let diag = Diagnostics::new();
        let staging = Staging::empty();
        let ctx = EvalContext {
            symbols: &t,
            staging: &staging,
            rand: RandKey::default(),
            diagnostics: &diag,
        };
        let err = evaluate(&node, &ctx, 0).unwrap_err();
        assert!(err.message.contains("lower bound"));
        assert!(err.to_string().contains("`+` > rand()"), "{err}");
    }

    #[test]
    fn shape_error_names_operator_and_path() {
        let functions = FunctionTable::builtins();
        let t = Table::new(&[0.0]);
        let expr = parse_expression("exp((1|2)+3)", &functions).unwrap();
        let node = bind(&expr, &|n| t.resolve(n), &functions, &mut Ids::default()).unwrap();
        let diag = Diagnostics::new();
        let staging = Staging::empty();
        let ctx = EvalContext {
            symbols: &t,
            staging: &staging,
            rand: RandKey::default(),
            diagnostics: &diag,
        };
        let err = evaluate(&node, &ctx, 0).unwrap_err();
        let text = err.to_string();
        assert!(text.contains("shape mismatch in `+`: 2x1 vs 1x1"), "{text}");
        assert!(text.contains("exp() > `+`"), "{text}");
    }

    #[test]
    fn division_by_zero_is_ieee() {
        let t = Table::new(&[0.0]);
        assert_eq!(t.eval("1/0").value(), f64::INFINITY);
        assert!(t.eval("0/0").value().is_nan());
    }

    #[test]
    fn unknown_symbol_is_bind_error() {
        let functions = FunctionTable::builtins();
        let t = Table::new(&[0.0]);
        let expr = parse_expression("foo+1", &functions).unwrap();
        let err = bind(&expr, &|n| t.resolve(n), &functions, &mut Ids::default()).unwrap_err();
        assert_eq!(err.to_string(), "unknown symbol `foo`");
    }

    proptest::proptest! {
        #[test]
        fn uniform_expressions_do_not_depend_on_index(a in -5.0f64..5.0, b in 0.1f64..5.0) {
            let t = Table::new(&[1.0, 2.0, 3.0, 4.0]);
            let src = format!("exp({a})*rho0/({b})+min({a},{b})^2");
            let all = t.eval_all(&src, 0);
            proptest::prop_assert!(all.windows(2).all(|w| w[0] == w[1]));
        }
    }
}
