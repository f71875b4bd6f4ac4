//! Symbol storage: constants, variables, per-particle fields and the
//! particle system, in one flat namespace.

use std::collections::HashMap;

use thiserror::Error;

use crate::particles::ParticleSystem;
use crate::sfl::eval::Symbols;
use crate::sfl::tree::SymbolRef;
use crate::tensor::{Shape, Tensor};

/// Name of the position field.
pub const POSITION: &str = "r";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WorkspaceError {
    #[error("duplicate definition of `{0}`")]
    Duplicate(String),
    #[error("`{0}` is reserved for particle positions")]
    Reserved(String),
    #[error("field `{name}` has {got} values, the particle system has {expected}")]
    Count {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("field `{name}` mixes shapes {first} and {other}")]
    MixedShapes {
        name: String,
        first: Shape,
        other: Shape,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldData {
    pub name: String,
    pub shape: Shape,
    pub values: Vec<Tensor>,
}

#[derive(Debug, Clone, Default)]
pub struct Workspace {
    constants: Vec<(String, Tensor)>,
    variables: Vec<(String, Tensor)>,
    fields: Vec<FieldData>,
    names: HashMap<String, SymbolRef>,
    particles: Option<ParticleSystem>,
}

impl Workspace {
    pub fn new() -> Self {
        Self::default()
    }

    fn claim(&mut self, name: &str, symbol: SymbolRef) -> Result<(), WorkspaceError> {
        if name == POSITION {
            return Err(WorkspaceError::Reserved(name.to_string()));
        }
        if self.names.contains_key(name) {
            return Err(WorkspaceError::Duplicate(name.to_string()));
        }
        self.names.insert(name.to_string(), symbol);
        Ok(())
    }

    pub fn define_constant(&mut self, name: &str, value: Tensor) -> Result<(), WorkspaceError> {
        self.claim(name, SymbolRef::Constant(self.constants.len()))?;
        self.constants.push((name.to_string(), value));
        Ok(())
    }

    pub fn define_variable(&mut self, name: &str, value: Tensor) -> Result<(), WorkspaceError> {
        self.claim(name, SymbolRef::Variable(self.variables.len()))?;
        self.variables.push((name.to_string(), value));
        Ok(())
    }

    pub fn set_particles(&mut self, particles: ParticleSystem) {
        self.particles = Some(particles);
    }

    pub fn define_field(&mut self, name: &str, values: Vec<Tensor>) -> Result<(), WorkspaceError> {
        let expected = self.particle_count();
        if values.len() != expected {
            return Err(WorkspaceError::Count {
                name: name.to_string(),
                expected,
                got: values.len(),
            });
        }
        let shape = values.first().map_or(Shape::SCALAR, |v| v.shape());
        if let Some(other) = values.iter().find(|v| v.shape() != shape) {
            return Err(WorkspaceError::MixedShapes {
                name: name.to_string(),
                first: shape,
                other: other.shape(),
            });
        }
        self.claim(name, SymbolRef::Field(self.fields.len()))?;
        self.fields.push(FieldData {
            name: name.to_string(),
            shape,
            values,
        });
        Ok(())
    }

    pub fn resolve(&self, name: &str) -> Option<SymbolRef> {
        if name == POSITION {
            return self.particles.as_ref().map(|_| SymbolRef::Position);
        }
        self.names.get(name).copied()
    }

    pub fn name_of(&self, symbol: SymbolRef) -> &str {
        match symbol {
            SymbolRef::Constant(k) => &self.constants[k].0,
            SymbolRef::Variable(k) => &self.variables[k].0,
            SymbolRef::Field(k) => &self.fields[k].name,
            SymbolRef::Position => POSITION,
        }
    }

    /// Every defined name, for suggestions.
    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.names
            .keys()
            .map(String::as_str)
            .chain(self.particles.as_ref().map(|_| POSITION))
    }

    pub fn constants(&self) -> &[(String, Tensor)] {
        &self.constants
    }

    pub fn variables(&self) -> &[(String, Tensor)] {
        &self.variables
    }

    pub fn fields(&self) -> &[FieldData] {
        &self.fields
    }

    pub fn constant(&self, name: &str) -> Option<&Tensor> {
        match self.resolve(name)? {
            SymbolRef::Constant(k) => Some(&self.constants[k].1),
            _ => None,
        }
    }

    pub fn variable(&self, name: &str) -> Option<&Tensor> {
        match self.resolve(name)? {
            SymbolRef::Variable(k) => Some(&self.variables[k].1),
            _ => None,
        }
    }

    pub fn set_variable_at(&mut self, k: usize, value: Tensor) {
        self.variables[k].1 = value;
    }

    pub fn set_variable(&mut self, name: &str, value: Tensor) -> bool {
        match self.resolve(name) {
            Some(SymbolRef::Variable(k)) => {
                self.variables[k].1 = value;
                true
            }
            _ => false,
        }
    }

    pub fn field(&self, name: &str) -> Option<&FieldData> {
        match self.resolve(name)? {
            SymbolRef::Field(k) => Some(&self.fields[k]),
            _ => None,
        }
    }

    pub fn field_at(&self, k: usize) -> &FieldData {
        &self.fields[k]
    }

    /// Swap a complete set of new values into field `k`.
    pub fn replace_field(&mut self, k: usize, values: Vec<Tensor>) -> Vec<Tensor> {
        std::mem::replace(&mut self.fields[k].values, values)
    }

    pub fn particle_system(&self) -> Option<&ParticleSystem> {
        self.particles.as_ref()
    }

    pub fn particle_system_mut(&mut self) -> Option<&mut ParticleSystem> {
        self.particles.as_mut()
    }

    /// Shape of the value stored behind `symbol`.
    pub fn shape_of(&self, symbol: SymbolRef) -> Shape {
        match symbol {
            SymbolRef::Constant(k) => self.constants[k].1.shape(),
            SymbolRef::Variable(k) => self.variables[k].1.shape(),
            SymbolRef::Field(k) => self.fields[k].shape,
            SymbolRef::Position => Shape::new(self.particles.as_ref().map_or(1, |p| p.dimension()), 1),
        }
    }
}

impl Symbols for Workspace {
    fn value(&self, symbol: SymbolRef, i: usize) -> &Tensor {
        match symbol {
            SymbolRef::Constant(k) => &self.constants[k].1,
            SymbolRef::Variable(k) => &self.variables[k].1,
            SymbolRef::Field(k) => &self.fields[k].values[i],
            SymbolRef::Position => self
                .particles
                .as_ref()
                .expect("position referenced before the particle system exists")
                .position(i),
        }
    }

    fn particle_count(&self) -> usize {
        self.particles.as_ref().map_or(0, |p| p.len())
    }

    fn particles(&self) -> Option<&ParticleSystem> {
        self.particles.as_ref()
    }
}
