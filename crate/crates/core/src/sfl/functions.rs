//! Function table: particle-wise builtins, whole-system reductions and the
//! registered interaction operators.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::interactions::{self, Interaction};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Arity {
    pub min: usize,
    pub max: usize,
}

impl Arity {
    pub const fn exactly(n: usize) -> Self {
        Arity { min: n, max: n }
    }

    pub const fn range(min: usize, max: usize) -> Self {
        Arity { min, max }
    }

    pub fn accepts(&self, n: usize) -> bool {
        (self.min..=self.max).contains(&n)
    }
}

impl fmt::Display for Arity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.min == self.max {
            write!(f, "{}", self.min)
        } else {
            write!(f, "{} to {}", self.min, self.max)
        }
    }
}

/// Functions evaluated from the operands of a single particle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    Exp,
    Log,
    Sqrt,
    Sin,
    Cos,
    Tan,
    Abs,
    Floor,
    Ceil,
    Sign,
    Norm,
    Min,
    Max,
    Dot,
    Transpose,
    If,
    Euler,
    Rand,
}

impl Builtin {
    pub const ALL: [Builtin; 18] = [
        Builtin::Exp,
        Builtin::Log,
        Builtin::Sqrt,
        Builtin::Sin,
        Builtin::Cos,
        Builtin::Tan,
        Builtin::Abs,
        Builtin::Floor,
        Builtin::Ceil,
        Builtin::Sign,
        Builtin::Norm,
        Builtin::Min,
        Builtin::Max,
        Builtin::Dot,
        Builtin::Transpose,
        Builtin::If,
        Builtin::Euler,
        Builtin::Rand,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Exp => "exp",
            Builtin::Log => "log",
            Builtin::Sqrt => "sqrt",
            Builtin::Sin => "sin",
            Builtin::Cos => "cos",
            Builtin::Tan => "tan",
            Builtin::Abs => "abs",
            Builtin::Floor => "floor",
            Builtin::Ceil => "ceil",
            Builtin::Sign => "sgn",
            Builtin::Norm => "norm",
            Builtin::Min => "min",
            Builtin::Max => "max",
            Builtin::Dot => "dot",
            Builtin::Transpose => "transpose",
            Builtin::If => "if",
            Builtin::Euler => "euler",
            Builtin::Rand => "rand",
        }
    }

    pub fn arity(self) -> Arity {
        match self {
            Builtin::Min | Builtin::Max | Builtin::Dot | Builtin::Rand => Arity::exactly(2),
            Builtin::If | Builtin::Euler => Arity::exactly(3),
            _ => Arity::exactly(1),
        }
    }
}

/// Reductions over every active particle; the result is the same for all
/// particle indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reduction {
    Max,
    Min,
    Sum,
    Mean,
}

impl Reduction {
    pub const ALL: [Reduction; 4] = [Reduction::Max, Reduction::Min, Reduction::Sum, Reduction::Mean];

    pub fn name(self) -> &'static str {
        match self {
            Reduction::Max => "fmax",
            Reduction::Min => "fmin",
            Reduction::Sum => "fsum",
            Reduction::Mean => "fmean",
        }
    }
}

#[derive(Clone)]
pub enum FunctionKind {
    Builtin(Builtin),
    Reduction(Reduction),
    Interaction(Arc<dyn Interaction>),
}

impl fmt::Debug for FunctionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionKind::Builtin(b) => write!(f, "Builtin({})", b.name()),
            FunctionKind::Reduction(r) => write!(f, "Reduction({})", r.name()),
            FunctionKind::Interaction(op) => write!(f, "Interaction({})", op.name()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FunctionEntry {
    pub kind: FunctionKind,
    pub arity: Arity,
}

#[derive(Debug, Clone, Default)]
pub struct FunctionTable {
    entries: BTreeMap<String, FunctionEntry>,
}

impl FunctionTable {
    /// Builtins and reductions only.
    pub fn builtins() -> Self {
        let mut table = FunctionTable::default();
        for b in Builtin::ALL {
            table.entries.insert(
                b.name().to_string(),
                FunctionEntry {
                    kind: FunctionKind::Builtin(b),
                    arity: b.arity(),
                },
            );
        }
        for r in Reduction::ALL {
            table.entries.insert(
                r.name().to_string(),
                FunctionEntry {
                    kind: FunctionKind::Reduction(r),
                    arity: Arity::exactly(1),
                },
            );
        }
        table
    }

    /// Builtins, reductions and every built-in interaction operator.
    pub fn standard() -> Self {
        let mut table = Self::builtins();
        for op in interactions::standard_operators() {
            table.register_interaction(op);
        }
        table
    }

    /// Add (or replace) an interaction operator. This is the whole
    /// extension surface: nothing else needs to know about a new operator.
    pub fn register_interaction(&mut self, op: Arc<dyn Interaction>) {
        let arity = op.arity();
        self.entries.insert(
            op.name().to_string(),
            FunctionEntry {
                kind: FunctionKind::Interaction(op),
                arity,
            },
        );
    }

    pub fn get(&self, name: &str) -> Option<&FunctionEntry> {
        self.entries.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}
