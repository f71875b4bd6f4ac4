//! Case assembly and the per-step equation solve.
//!
//! Definitions are evaluated in document order (constants, variables,
//! domain, grids, fields), so later entries may reference earlier ones.
//! Equations are bound against the completed symbol table and solved
//! strictly in listed order; a field equation is evaluated for every
//! particle into a staging buffer before it replaces the old values.

use crate::diagnostics::{Diagnostics, Warning};
use crate::error::{Error, Result};
use crate::io::deck::{CaseDocument, GridSpec};
use crate::io::grid::{generate_grid, read_points_file};
use crate::io::vtk::ResultFrame;
use crate::parallel::Executor;
use crate::particles::{Boundary, Domain, ParticleSystem, ShiftReport};
use crate::scheduler::ParameterSpace;
use crate::sfl::eval::{evaluate, evaluate_uniform, stage, EvalContext, EvalError, RandKey, Symbols};
use crate::sfl::functions::FunctionTable;
use crate::sfl::parser::{parse_equation, parse_expression};
use crate::sfl::tree::{bind, BindError, Ids, Node, SymbolRef};
use crate::tensor::Tensor;
use crate::workspace::{Workspace, POSITION};

#[derive(Clone)]
pub struct Equation {
    pub name: String,
    pub lhs_name: String,
    pub lhs: SymbolRef,
    pub rhs: Node,
    /// `lhs=rhs` as written in the case file.
    pub source: String,
    pub needs_neighbors: bool,
}

/// Time, step and output counters carried across hot starts.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Clock {
    pub time: f64,
    pub step: u64,
    /// Index of the next frame to write.
    pub next_frame: usize,
}

#[derive(Debug, Clone, Default)]
pub struct AssemblyOptions {
    pub seed: u64,
    /// Worker threads; capped at the particle count.
    pub threads: usize,
    pub hot_start: Option<ResultFrame>,
}

pub struct Case {
    pub name: String,
    workspace: Workspace,
    equations: Vec<Equation>,
    params: ParameterSpace,
    functions: FunctionTable,
    seed: u64,
    epoch: u64,
    exec: Executor,
    diagnostics: Diagnostics,
    pub clock: Clock,
    hot_started: bool,
}

fn nearest<'a>(name: &str, candidates: impl Iterator<Item = &'a str>) -> Option<&'a str> {
    candidates
        .map(|c| (strsim::levenshtein(name, c), c))
        .filter(|(d, c)| *d <= 2 && *d < c.len().max(name.len()))
        .min()
        .map(|(_, c)| c)
}

/// True if `node` yields different values for different particles.
fn per_particle(node: &Node) -> bool {
    match node {
        Node::Symbol { symbol, .. } => matches!(symbol, SymbolRef::Field(_) | SymbolRef::Position),
        Node::Interaction { .. } => true,
        Node::Reduction { .. } => false,
        other => other.children().into_iter().any(per_particle),
    }
}

impl Case {
    pub fn assemble(doc: &CaseDocument, options: &AssemblyOptions) -> Result<Case> {
        Assembler::new(doc, options).run()
    }

    pub fn workspace(&self) -> &Workspace {
        &self.workspace
    }

    pub fn workspace_mut(&mut self) -> &mut Workspace {
        &mut self.workspace
    }

    pub fn equations(&self) -> &[Equation] {
        &self.equations
    }

    pub fn params(&self) -> &ParameterSpace {
        &self.params
    }

    pub fn functions(&self) -> &FunctionTable {
        &self.functions
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        &self.diagnostics
    }

    pub fn executor(&self) -> &Executor {
        &self.exec
    }

    pub fn set_threads(&mut self, threads: usize) {
        let n = self.particles().len().max(1);
        self.exec = Executor::new(threads.clamp(1, n));
    }

    pub fn is_hot_started(&self) -> bool {
        self.hot_started
    }

    pub fn particles(&self) -> &ParticleSystem {
        self.workspace.particle_system().expect("assembled case has particles")
    }

    /// True if some equation assigns the variable `name`.
    pub fn writes(&self, name: &str) -> bool {
        self.equations.iter().any(|e| e.lhs_name == name)
    }

    fn eval_error(&self, eq: &Equation, e: EvalError) -> Error {
        Error::runtime(format!("equation `{}` ({}): {e}", eq.name, eq.source))
    }

    /// Solve equation `k`: evaluate its right-hand side for every active
    /// particle (or once, for a variable) and overwrite the left-hand side.
    pub fn solve_equation(&mut self, k: usize) -> Result<()> {
        let eq = &self.equations[k];
        if eq.needs_neighbors {
            self.workspace
                .particle_system_mut()
                .expect("assembled case has particles")
                .ensure_cells();
        }
        let rand = RandKey {
            seed: self.seed,
            epoch: self.epoch,
        };
        self.epoch += 1;

        let ws = &self.workspace;
        let staging = stage(&eq.rhs, ws, rand, &self.diagnostics, &self.exec)
            .map_err(|e| self.eval_error(eq, e))?;
        let ctx = EvalContext {
            symbols: ws,
            staging: &staging,
            rand,
            diagnostics: &self.diagnostics,
        };
        let expected = ws.shape_of(eq.lhs);
        let check = |value: &Tensor, i: usize| -> Result<(), EvalError> {
            if value.shape() != expected {
                return Err(EvalError {
                    message: format!(
                        "right-hand side is {}, left-hand side `{}` is {expected}",
                        value.shape(),
                        eq.lhs_name
                    ),
                    path: Vec::new(),
                    particle: Some(i),
                });
            }
            Ok(())
        };

        match eq.lhs {
            SymbolRef::Variable(v) => {
                let value = evaluate(&eq.rhs, &ctx, 0).map_err(|e| self.eval_error(eq, e))?;
                if value.shape() != expected {
                    return Err(Error::runtime(format!(
                        "equation `{}`: right-hand side is {}, variable `{}` is {expected}",
                        eq.name,
                        value.shape(),
                        eq.lhs_name
                    )));
                }
                if !value.is_finite() {
                    return Err(Error::runtime(format!(
                        "non-finite value {} in equation `{}` ({}) for variable `{}`",
                        value, eq.name, eq.source, eq.lhs_name
                    )));
                }
                self.workspace.set_variable_at(v, value);
            }
            SymbolRef::Field(_) | SymbolRef::Position => {
                let n = ws.particle_count();
                let current = |i: usize| *ws.value(eq.lhs, i);
                let values = self
                    .exec
                    .map(n, |i| {
                        if !ws.is_active(i) {
                            return Ok(current(i));
                        }
                        let v = evaluate(&eq.rhs, &ctx, i).map_err(|e| EvalError {
                            particle: e.particle.or(Some(i)),
                            ..e
                        })?;
                        check(&v, i)?;
                        Ok(v)
                    })
                    .map_err(|e| self.eval_error(eq, e))?;
                if let Some(i) = (0..n).find(|&i| ws.is_active(i) && !values[i].is_finite()) {
                    return Err(Error::runtime(format!(
                        "non-finite value {} in equation `{}` ({}) at particle {i}",
                        values[i], eq.name, eq.source
                    )));
                }
                match eq.lhs {
                    SymbolRef::Field(f) => {
                        self.workspace.replace_field(f, values);
                    }
                    _ => {
                        let report = self
                            .workspace
                            .particle_system_mut()
                            .expect("assembled case has particles")
                            .set_positions(values);
                        self.record_shift(report);
                    }
                }
            }
            SymbolRef::Constant(_) => unreachable!("constant left-hand sides are rejected at assembly"),
        }
        Ok(())
    }

    fn record_shift(&self, report: ShiftReport) {
        if self.diagnostics.add(Warning::SymmetricEscape, report.symmetric_escapes) {
            log::warn!("particles crossed a symmetric wall (counted, kept in the boundary cell)");
        }
        if self.diagnostics.add(Warning::CutoffEscape, report.deactivated) {
            log::warn!("particles left the domain through a cut-off face and were deactivated");
        }
    }

    /// Solve every equation once, in order.
    pub fn solve_step(&mut self) -> Result<()> {
        for k in 0..self.equations.len() {
            self.solve_equation(k)?;
        }
        Ok(())
    }

    /// Current value of the scalar variable `name`.
    pub fn scalar_variable(&self, name: &str) -> Option<f64> {
        self.workspace
            .variable(name)
            .filter(|v| v.is_scalar())
            .map(|v| v.value())
    }

    pub fn set_scalar_variable(&mut self, name: &str, value: f64) {
        self.workspace.set_variable(name, Tensor::scalar(value));
    }

    /// Deep copy of the state for output.
    pub fn snapshot(&self) -> ResultFrame {
        let ps = self.particles();
        ResultFrame {
            title: format!("nauticle {} frame {}", self.name, self.clock.next_frame),
            frame: self.clock.next_frame,
            time: self.clock.time,
            step: self.clock.step,
            rng_epoch: self.epoch,
            seed: Some(self.seed),
            dimension: ps.dimension(),
            domain: ps.domain().describe(),
            constants: self.workspace.constants().to_vec(),
            variables: self.workspace.variables().to_vec(),
            equations: self
                .equations
                .iter()
                .map(|e| (e.name.clone(), e.source.clone()))
                .collect(),
            positions: ps.positions().to_vec(),
            gid: ps.gid().to_vec(),
            active: ps.active_flags().to_vec(),
            fields: self.workspace.fields().to_vec(),
        }
    }
}

struct Assembler<'a> {
    doc: &'a CaseDocument,
    options: &'a AssemblyOptions,
    functions: FunctionTable,
    workspace: Workspace,
    diagnostics: Diagnostics,
    epoch: u64,
}

impl<'a> Assembler<'a> {
    fn new(doc: &'a CaseDocument, options: &'a AssemblyOptions) -> Self {
        Assembler {
            doc,
            options,
            functions: FunctionTable::standard(),
            workspace: Workspace::new(),
            diagnostics: Diagnostics::new(),
            epoch: 0,
        }
    }

    fn next_rand(&mut self) -> RandKey {
        let key = RandKey {
            seed: self.options.seed,
            epoch: self.epoch,
        };
        self.epoch += 1;
        key
    }

    fn bind_error(&self, context: &str, e: BindError) -> Error {
        match &e {
            BindError::UnknownSymbol(name) => {
                let hint = nearest(name, self.workspace.names())
                    .map(|n| format!(" (did you mean `{n}`?)"))
                    .unwrap_or_default();
                Error::assembly(format!("{context}: unknown symbol `{name}`{hint}"))
            }
            _ => Error::assembly(format!("{context}: {e}")),
        }
    }

    fn bind_expr(&self, source: &str, context: &str) -> Result<Node> {
        let expr = parse_expression(source, &self.functions)
            .map_err(|e| Error::parse(format!("{context}: {e} in `{source}`")))?;
        let resolve = |n: &str| self.workspace.resolve(n);
        bind(&expr, &resolve, &self.functions, &mut Ids::default()).map_err(|e| self.bind_error(context, e))
    }

    /// Evaluate a definition that must not depend on particles.
    fn uniform(&mut self, source: &str, context: &str) -> Result<Tensor> {
        let node = self.bind_expr(source, context)?;
        if per_particle(&node) {
            return Err(Error::assembly(format!(
                "{context}: `{source}` depends on particle data"
            )));
        }
        let rand = self.next_rand();
        evaluate_uniform(&node, &self.workspace, rand, &self.diagnostics)
            .map_err(|e| Error::assembly(format!("{context}: {e}")))
    }

    fn components(&mut self, source: &str, context: &str) -> Result<Vec<f64>> {
        let t = self.uniform(source, context)?;
        if t.cols() != 1 {
            return Err(Error::assembly(format!("{context}: expected a scalar or a column vector")));
        }
        Ok(t.as_slice().to_vec())
    }

    fn run(mut self) -> Result<Case> {
        let doc = self.doc;
        for def in &doc.constants {
            let value = self.uniform(&def.expr, &format!("constant `{}`", def.name))?;
            self.workspace
                .define_constant(&def.name, value)
                .map_err(|e| Error::assembly(e.to_string()))?;
        }
        for def in &doc.variables {
            let value = self.uniform(&def.expr, &format!("variable `{}`", def.name))?;
            self.workspace
                .define_variable(&def.name, value)
                .map_err(|e| Error::assembly(e.to_string()))?;
        }
        match self.workspace.variable("dt") {
            Some(dt) if dt.is_scalar() => {}
            Some(_) => return Err(Error::assembly("variable `dt` must be a scalar")),
            None => return Err(Error::assembly("the case defines no `dt` variable")),
        }

        let domain = self.domain()?;
        let hot = self.options.hot_start.as_ref();
        let mut mismatches = Vec::new();
        let particles = match hot {
            None => self.grid_particles(domain)?,
            Some(frame) => {
                if frame.dimension != domain.dimension() {
                    return Err(Error::assembly(format!(
                        "hot-start file is {}D, the case domain is {}D",
                        frame.dimension,
                        domain.dimension()
                    )));
                }
                if frame.domain != domain.describe() {
                    log::warn!(
                        "hot-start domain `{}` differs from the case domain `{}`; using the case domain",
                        frame.domain,
                        domain.describe()
                    );
                }
                ParticleSystem::restore(domain, frame.positions.clone(), frame.gid.clone(), frame.active.clone())
                    .map_err(|e| Error::assembly(format!("hot start: {e}")))?
            }
        };
        if particles.is_empty() {
            return Err(Error::assembly("the particle system is empty"));
        }
        self.workspace.set_particles(particles);

        if let Some(frame) = hot {
            for (name, value) in &frame.variables {
                match self.workspace.variable(name) {
                    Some(current) if current.shape() != value.shape() => mismatches.push(format!(
                        "variable `{name}` is {} in the file but {} in the document",
                        value.shape(),
                        current.shape()
                    )),
                    Some(_) => {
                        self.workspace.set_variable(name, *value);
                    }
                    None => log::warn!("hot start: variable `{name}` is not in the document; ignored"),
                }
            }
        }

        for def in &doc.fields {
            let context = format!("field `{}`", def.name);
            if let Some(saved) = hot.and_then(|f| f.field(&def.name)) {
                let n = self.workspace.particle_count();
                if saved.values.len() != n {
                    mismatches.push(format!(
                        "field `{}` has {} values for {n} particles",
                        def.name,
                        saved.values.len()
                    ));
                    continue;
                }
                // the expression's shape decides what the document expects
                let node = self.bind_expr(&def.expr, &context)?;
                let shape = self.shape_probe(&node, &context)?;
                if shape != saved.shape {
                    mismatches.push(format!(
                        "field `{}` is {} in the file but {shape} in the document",
                        def.name, saved.shape
                    ));
                    continue;
                }
                self.workspace
                    .define_field(&def.name, saved.values.clone())
                    .map_err(|e| Error::assembly(e.to_string()))?;
                continue;
            }
            let node = self.bind_expr(&def.expr, &context)?;
            let values = self.field_values(&node, &context)?;
            self.workspace
                .define_field(&def.name, values)
                .map_err(|e| Error::assembly(e.to_string()))?;
        }
        if let Some(frame) = hot {
            for f in &frame.fields {
                if !doc.fields.iter().any(|d| d.name == f.name) {
                    log::warn!("hot start: field `{}` is not in the document; ignored", f.name);
                }
            }
        }
        if !mismatches.is_empty() {
            return Err(Error::assembly(format!(
                "hot-start file does not match the case: {}",
                mismatches.join("; ")
            )));
        }

        let mut equations = Vec::with_capacity(doc.equations.len());
        for def in &doc.equations {
            equations.push(self.equation(&def.name, &def.expr)?);
        }

        let simulated_time = self
            .uniform(&doc.simulated_time, "parameter_space.simulated_time")?
            .scalar_value("simulated_time")
            .map_err(|e| Error::assembly(format!("parameter_space.simulated_time: {e}")))?;
        let print_interval = self
            .uniform(&doc.print_interval, "parameter_space.print_interval")?
            .scalar_value("print_interval")
            .map_err(|e| Error::assembly(format!("parameter_space.print_interval: {e}")))?;
        let params = ParameterSpace::new(simulated_time, print_interval, &self.workspace)?;

        let n = self.workspace.particle_count();
        let threads = if self.options.threads == 0 {
            std::thread::available_parallelism().map_or(1, |t| t.get())
        } else {
            self.options.threads
        };
        let mut clock = Clock::default();
        let mut epoch = self.epoch;
        if let Some(frame) = hot {
            clock = Clock {
                time: frame.time,
                step: frame.step,
                next_frame: frame.frame + 1,
            };
            epoch = frame.rng_epoch;
            if let Some(seed) = frame.seed.filter(|s| *s != self.options.seed) {
                log::warn!(
                    "hot start: the file was written with seed {seed}, continuing with seed {}",
                    self.options.seed
                );
            }
        }
        Ok(Case {
            name: doc.name.clone(),
            workspace: self.workspace,
            equations,
            params,
            functions: self.functions,
            seed: self.options.seed,
            epoch,
            exec: Executor::new(threads.clamp(1, n.max(1))),
            diagnostics: self.diagnostics,
            clock,
            hot_started: hot.is_some(),
        })
    }

    fn domain(&mut self) -> Result<Domain> {
        let spec = &self.doc.domain;
        let cell = self.components(&spec.cell_size, "domain.cell_size")?;
        let lo = self.components(&spec.minimum, "domain.minimum")?;
        let hi = self.components(&spec.maximum, "domain.maximum")?;
        let boundary = spec
            .boundary
            .split('|')
            .map(|b| b.parse::<Boundary>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::assembly(format!("domain.boundary: {e}")))?;
        Domain::new(&cell, &lo, &hi, &boundary).map_err(|e| Error::assembly(format!("domain: {e}")))
    }

    fn grid_particles(&mut self, domain: Domain) -> Result<ParticleSystem> {
        let d = domain.dimension();
        let mut positions = Vec::new();
        let mut gids = Vec::new();
        let grids = self.doc.grids.clone();
        for (k, grid) in grids.iter().enumerate() {
            let context = if grids.len() > 1 { format!("grid[{k}]") } else { "grid".to_string() };
            let (gid_src, points) = match grid {
                GridSpec::Lattice {
                    gid,
                    gpos,
                    gsize,
                    goffset,
                    gip_dist,
                } => {
                    let gpos = self.components(gpos, &format!("{context}.gpos"))?;
                    let gsize = self.components(gsize, &format!("{context}.gsize"))?;
                    let mut goffset = self.components(goffset, &format!("{context}.goffset"))?;
                    if goffset.len() == 1 && d > 1 && goffset[0] == 0.0 {
                        goffset = vec![0.0; d];
                    }
                    let gip = self.components(gip_dist, &format!("{context}.gip_dist"))?;
                    if gpos.len() != d {
                        return Err(Error::assembly(format!(
                            "{context}.gpos has {} components, the domain is {d}D",
                            gpos.len()
                        )));
                    }
                    let pts = generate_grid(&gpos, &gsize, &goffset, &gip)
                        .map_err(|e| Error::assembly(format!("{context}: {e}")))?;
                    (gid.clone(), pts)
                }
                GridSpec::File { gid, file } => (gid.clone(), read_points_file(file, d)?),
            };
            let gid = self.uniform(&gid_src, &format!("{context}.gid"))?;
            let gid_value = gid.scalar_value("gid").map_err(|e| Error::assembly(format!("{context}.gid: {e}")))?;
            if gid_value.fract() != 0.0 {
                return Err(Error::assembly(format!("{context}.gid must be an integer")));
            }
            gids.extend(std::iter::repeat(gid_value as i64).take(points.len()));
            positions.extend(points);
        }
        ParticleSystem::new(domain, positions, gids).map_err(|e| Error::assembly(e.to_string()))
    }

    fn field_values(&mut self, node: &Node, context: &str) -> Result<Vec<Tensor>> {
        let rand = self.next_rand();
        let exec = Executor::new(self.options.threads.max(1));
        let staging = stage(node, &self.workspace, rand, &self.diagnostics, &exec)
            .map_err(|e| Error::assembly(format!("{context}: {e}")))?;
        let ctx = EvalContext {
            symbols: &self.workspace,
            staging: &staging,
            rand,
            diagnostics: &self.diagnostics,
        };
        let n = self.workspace.particle_count();
        exec.map(n, |i| {
            evaluate(node, &ctx, i).map_err(|e| EvalError {
                particle: e.particle.or(Some(i)),
                ..e
            })
        })
        .map_err(|e| Error::assembly(format!("{context}: {e}")))
    }

    /// Shape of a field expression, from its first active particle.
    fn shape_probe(&mut self, node: &Node, context: &str) -> Result<crate::tensor::Shape> {
        let values = self.field_values(node, context)?;
        let ps = self.workspace.particle_system().expect("particles set");
        let i = (0..ps.len()).find(|i| ps.is_active(*i)).unwrap_or(0);
        Ok(values[i].shape())
    }

    fn equation(&self, name: &str, source: &str) -> Result<Equation> {
        let context = format!("equation `{name}`");
        let syntax = parse_equation(source, &self.functions)
            .map_err(|e| Error::parse(format!("{context}: {e} in `{source}`")))?;
        let lhs = match self.workspace.resolve(&syntax.lhs) {
            Some(SymbolRef::Constant(_)) => {
                return Err(Error::assembly(format!(
                    "{context}: `{}` is a constant and cannot be assigned",
                    syntax.lhs
                )))
            }
            Some(s) => s,
            None => {
                return Err(self.bind_error(&context, BindError::UnknownSymbol(syntax.lhs.clone())));
            }
        };
        let resolve = |n: &str| self.workspace.resolve(n);
        let rhs = bind(&syntax.rhs, &resolve, &self.functions, &mut Ids::default())
            .map_err(|e| self.bind_error(&context, e))?;
        if matches!(lhs, SymbolRef::Variable(_)) && per_particle(&rhs) {
            return Err(Error::assembly(format!(
                "{context}: variable `{}` cannot take a per-particle value; reduce it with fmax, fmin, fsum or fmean",
                syntax.lhs
            )));
        }
        Ok(Equation {
            name: name.to_string(),
            lhs_name: if lhs == SymbolRef::Position { POSITION.to_string() } else { syntax.lhs.clone() },
            lhs,
            needs_neighbors: rhs.needs_neighbors(),
            rhs,
            source: source.to_string(),
        })
    }
}
