//! Expression trees bound to workspace symbols.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use super::ast::{BinaryOp, Expr};
use super::functions::{Builtin, FunctionKind, FunctionTable, Reduction};
use super::keyword::{decode_kernel_keyword, KernelKeyword, UnknownKernel};
use crate::interactions::{Influence, Interaction};
use crate::tensor::Tensor;

/// Where a name lives in the workspace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SymbolRef {
    Constant(usize),
    Variable(usize),
    Field(usize),
    /// The reserved position field `r`.
    Position,
}

#[derive(Clone)]
pub enum Node {
    Literal(Tensor),
    Symbol { name: String, symbol: SymbolRef },
    Neg(Box<Node>),
    Binary {
        op: BinaryOp,
        lhs: Box<Node>,
        rhs: Box<Node>,
    },
    Vector(Vec<Node>),
    Builtin {
        f: Builtin,
        args: Vec<Node>,
        /// Stream index for `rand`.
        id: usize,
    },
    Reduction {
        f: Reduction,
        arg: Box<Node>,
        slot: usize,
    },
    Interaction {
        op: Arc<dyn Interaction>,
        /// The kernel operand, if any, is a placeholder literal here.
        args: Vec<Node>,
        kernel: Option<KernelKeyword>,
        slot: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BindError {
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("`{name}` expects {expected} operands, got {got}")]
    Arity {
        name: String,
        expected: String,
        got: usize,
    },
    #[error(transparent)]
    Kernel(#[from] UnknownKernel),
    #[error("operand {index} of `{name}` must be a kernel keyword such as Wp52220")]
    KernelOperand { name: String, index: usize },
}

/// Counters handing out slot and stream ids while binding one expression.
#[derive(Debug, Default, Clone, Copy)]
pub struct Ids {
    pub slots: usize,
    pub streams: usize,
}

/// Resolve names and function calls of `expr`. Slot ids are assigned in
/// post-order, so every slot's children carry smaller ids.
pub fn bind(
    expr: &Expr,
    resolve: &dyn Fn(&str) -> Option<SymbolRef>,
    functions: &FunctionTable,
    ids: &mut Ids,
) -> Result<Node, BindError> {
    let node = match expr {
        Expr::Number(v) => Node::Literal(Tensor::scalar(*v)),
        Expr::Name(name) => match resolve(name) {
            Some(symbol) => Node::Symbol {
                name: name.clone(),
                symbol,
            },
            None => return Err(BindError::UnknownSymbol(name.clone())),
        },
        Expr::Neg(inner) => Node::Neg(Box::new(bind(inner, resolve, functions, ids)?)),
        Expr::Binary { op, lhs, rhs } => Node::Binary {
            op: *op,
            lhs: Box::new(bind(lhs, resolve, functions, ids)?),
            rhs: Box::new(bind(rhs, resolve, functions, ids)?),
        },
        Expr::Vector(items) => Node::Vector(
            items
                .iter()
                .map(|e| bind(e, resolve, functions, ids))
                .collect::<Result<_, _>>()?,
        ),
        Expr::Call { name, args } => {
            let entry = functions
                .get(name)
                .ok_or_else(|| BindError::UnknownFunction(name.clone()))?;
            if !entry.arity.accepts(args.len()) {
                return Err(BindError::Arity {
                    name: name.clone(),
                    expected: entry.arity.to_string(),
                    got: args.len(),
                });
            }
            match &entry.kind {
                FunctionKind::Builtin(f) => {
                    let args = args
                        .iter()
                        .map(|e| bind(e, resolve, functions, ids))
                        .collect::<Result<_, _>>()?;
                    let id = ids.streams;
                    ids.streams += 1;
                    Node::Builtin { f: *f, args, id }
                }
                FunctionKind::Reduction(f) => {
                    let arg = Box::new(bind(&args[0], resolve, functions, ids)?);
                    let slot = ids.slots;
                    ids.slots += 1;
                    Node::Reduction { f: *f, arg, slot }
                }
                FunctionKind::Interaction(op) => {
                    let kernel_at = op.kernel_operand();
                    let mut kernel = None;
                    let mut bound = Vec::with_capacity(args.len());
                    for (k, arg) in args.iter().enumerate() {
                        if Some(k) == kernel_at {
                            match arg {
                                Expr::Name(raw) if resolve(raw).is_none() => {
                                    kernel = Some(decode_kernel_keyword(raw)?);
                                    bound.push(Node::Literal(Tensor::scalar(0.0)));
                                }
                                _ => {
                                    return Err(BindError::KernelOperand {
                                        name: name.clone(),
                                        index: k,
                                    })
                                }
                            }
                        } else {
                            bound.push(bind(arg, resolve, functions, ids)?);
                        }
                    }
                    let slot = ids.slots;
                    ids.slots += 1;
                    Node::Interaction {
                        op: op.clone(),
                        args: bound,
                        kernel,
                        slot,
                    }
                }
            }
        }
    };
    Ok(node)
}

impl Node {
    /// Children in evaluation order.
    pub fn children(&self) -> Vec<&Node> {
        match self {
            Node::Literal(_) | Node::Symbol { .. } => Vec::new(),
            Node::Neg(inner) => vec![inner],
            Node::Binary { lhs, rhs, .. } => vec![lhs, rhs],
            Node::Vector(items) | Node::Builtin { args: items, .. } => items.iter().collect(),
            Node::Reduction { arg, .. } => vec![arg],
            Node::Interaction { args, .. } => args.iter().collect(),
        }
    }

    /// Value does not depend on the particle index.
    pub fn is_uniform(&self) -> bool {
        match self {
            Node::Symbol { symbol, .. } => {
                matches!(symbol, SymbolRef::Constant(_) | SymbolRef::Variable(_))
            }
            Node::Builtin { f: Builtin::Rand, .. } => false,
            Node::Interaction { .. } => false,
            Node::Reduction { .. } => true,
            _ => self.children().iter().all(|c| c.is_uniform()),
        }
    }

    /// Reduction and interaction nodes in post-order (children first).
    pub fn staged_nodes(&self) -> Vec<&Node> {
        let mut out = Vec::new();
        self.collect_staged(&mut out);
        out
    }

    fn collect_staged<'a>(&'a self, out: &mut Vec<&'a Node>) {
        for child in self.children() {
            child.collect_staged(out);
        }
        if matches!(self, Node::Reduction { .. } | Node::Interaction { .. }) {
            out.push(self);
        }
    }

    /// True if any finite-radius interaction needs the neighbor structure.
    pub fn needs_neighbors(&self) -> bool {
        match self {
            Node::Interaction { op, .. } if matches!(op.influence(), Influence::Finite { .. }) => {
                true
            }
            _ => self.children().iter().any(|c| c.needs_neighbors()),
        }
    }

    pub fn slot_count(&self) -> usize {
        let own = match self {
            Node::Reduction { slot, .. } | Node::Interaction { slot, .. } => slot + 1,
            _ => 0,
        };
        self.children()
            .iter()
            .map(|c| c.slot_count())
            .max()
            .unwrap_or(0)
            .max(own)
    }

    pub fn references(&self, target: SymbolRef) -> bool {
        match self {
            Node::Symbol { symbol, .. } => *symbol == target,
            _ => self.children().iter().any(|c| c.references(target)),
        }
    }

    /// Short label used in error paths.
    pub fn label(&self) -> String {
        match self {
            Node::Literal(t) => t.to_string(),
            Node::Symbol { name, .. } => name.clone(),
            Node::Neg(_) => "unary -".to_string(),
            Node::Binary { op, .. } => format!("`{}`", op.symbol()),
            Node::Vector(_) => "`|`".to_string(),
            Node::Builtin { f, .. } => format!("{}()", f.name()),
            Node::Reduction { f, .. } => format!("{}()", f.name()),
            Node::Interaction { op, .. } => format!("{}()", op.name()),
        }
    }
}

impl fmt::Debug for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |f: &mut fmt::Formatter<'_>, name: &str, args: &[Node], kernel: Option<&KernelKeyword>, at: Option<usize>| {
            write!(f, "{name}(")?;
            for (k, a) in args.iter().enumerate() {
                if k > 0 {
                    f.write_str(",")?;
                }
                match (kernel, at) {
                    (Some(kw), Some(idx)) if idx == k => write!(f, "{kw}")?,
                    _ => write!(f, "{a}")?,
                }
            }
            f.write_str(")")
        };
        match self {
            Node::Literal(t) if t.is_scalar() => f.write_str(&crate::numfmt::fmt_f64(t.value())),
            Node::Literal(t) => write!(f, "{t}"),
            Node::Symbol { name, .. } => f.write_str(name),
            Node::Neg(inner) => write!(f, "(-{inner})"),
            Node::Binary { op, lhs, rhs } => write!(f, "({lhs}{}{rhs})", op.symbol()),
            Node::Vector(items) => {
                f.write_str("(")?;
                for (k, item) in items.iter().enumerate() {
                    if k > 0 {
                        f.write_str("|")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str(")")
            }
            Node::Builtin { f: b, args, .. } => list(f, b.name(), args, None, None),
            Node::Reduction { f: r, arg, .. } => write!(f, "{}({arg})", r.name()),
            Node::Interaction {
                op, args, kernel, ..
            } => list(f, op.name(), args, kernel.as_ref(), op.kernel_operand()),
        }
    }
}
