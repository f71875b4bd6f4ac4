//! Axis-aligned box domain, rectilinear cell grid and neighbor enumeration
//! with periodic, symmetric (mirror image) and cut-off boundaries.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::numfmt::fmt_f64;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Periodic,
    Symmetric,
    Cutoff,
}

impl Boundary {
    pub fn name(self) -> &'static str {
        match self {
            Boundary::Periodic => "periodic",
            Boundary::Symmetric => "symmetric",
            Boundary::Cutoff => "cutoff",
        }
    }
}

impl FromStr for Boundary {
    type Err = String;

    /// Names, or the numeric codes 0 (cut-off), 1 (periodic), 2 (symmetric).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "periodic" | "1" => Ok(Boundary::Periodic),
            "symmetric" | "2" => Ok(Boundary::Symmetric),
            "cutoff" | "cut-off" | "cut_off" | "0" => Ok(Boundary::Cutoff),
            other => Err(format!(
                "unknown boundary `{other}` (expected periodic, symmetric, cutoff or 0/1/2)"
            )),
        }
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("domain dimension must be 1, 2 or 3, got {0}")]
    Dimension(usize),
    #[error("domain entry `{entry}` has {got} components, expected {expected}")]
    Components {
        entry: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("cell_size must be positive on every axis (axis {axis}: {value})")]
    CellSize { axis: usize, value: f64 },
    #[error("minimum/maximum are cell counts and must be integers (axis {axis}: {value})")]
    NonIntegerCount { axis: usize, value: f64 },
    #[error("maximum must exceed minimum on every axis (axis {axis})")]
    Empty { axis: usize },
    #[error("particle {index} at {position} lies outside the domain on axis {axis}")]
    Outside {
        index: usize,
        axis: usize,
        position: String,
    },
    #[error("particle {index} has {got} coordinates, domain is {expected}D")]
    PositionDimension {
        index: usize,
        expected: usize,
        got: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    dimension: usize,
    cell_size: [f64; 3],
    min_cells: [i64; 3],
    max_cells: [i64; 3],
    boundary: [Boundary; 3],
}

impl Domain {
    /// `minimum` and `maximum` are integer cell counts; the physical extent
    /// of an axis is `count * cell_size`.
    pub fn new(
        cell_size: &[f64],
        minimum: &[f64],
        maximum: &[f64],
        boundary: &[Boundary],
    ) -> Result<Self, DomainError> {
        let dimension = cell_size.len();
        if !(1..=3).contains(&dimension) {
            return Err(DomainError::Dimension(dimension));
        }
        for (entry, len) in [
            ("minimum", minimum.len()),
            ("maximum", maximum.len()),
            ("boundary", boundary.len()),
        ] {
            if len != dimension {
                return Err(DomainError::Components {
                    entry,
                    expected: dimension,
                    got: len,
                });
            }
        }
        let mut out = Domain {
            dimension,
            cell_size: [1.0; 3],
            min_cells: [0; 3],
            max_cells: [1; 3],
            boundary: [Boundary::Cutoff; 3],
        };
        for axis in 0..dimension {
            let cs = cell_size[axis];
            if !(cs > 0.0 && cs.is_finite()) {
                return Err(DomainError::CellSize { axis, value: cs });
            }
            let count = |value: f64| -> Result<i64, DomainError> {
                let rounded = value.round();
                if !value.is_finite() || (value - rounded).abs() > 1e-9 * value.abs().max(1.0) {
                    Err(DomainError::NonIntegerCount { axis, value })
                } else {
                    Ok(rounded as i64)
                }
            };
            let lo = count(minimum[axis])?;
            let hi = count(maximum[axis])?;
            if hi <= lo {
                return Err(DomainError::Empty { axis });
            }
            out.cell_size[axis] = cs;
            out.min_cells[axis] = lo;
            out.max_cells[axis] = hi;
            out.boundary[axis] = boundary[axis];
        }
        Ok(out)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn cell_size(&self) -> &[f64] {
        &self.cell_size[..self.dimension]
    }

    pub fn min_cell_size(&self) -> f64 {
        self.cell_size().iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn boundary(&self, axis: usize) -> Boundary {
        self.boundary[axis]
    }

    pub fn boundaries(&self) -> &[Boundary] {
        &self.boundary[..self.dimension]
    }

    pub fn min_cells(&self) -> &[i64] {
        &self.min_cells[..self.dimension]
    }

    pub fn max_cells(&self) -> &[i64] {
        &self.max_cells[..self.dimension]
    }

    pub fn cell_count(&self, axis: usize) -> usize {
        (self.max_cells[axis] - self.min_cells[axis]) as usize
    }

    pub fn lower(&self, axis: usize) -> f64 {
        self.min_cells[axis] as f64 * self.cell_size[axis]
    }

    pub fn upper(&self, axis: usize) -> f64 {
        self.max_cells[axis] as f64 * self.cell_size[axis]
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.cell_count(axis) as f64 * self.cell_size[axis]
    }

    /// Wrap a coordinate into `[lower, upper)`.
    pub fn wrap(&self, axis: usize, x: f64) -> f64 {
        let lo = self.lower(axis);
        let len = self.extent(axis);
        let mut w = lo + (x - lo).rem_euclid(len);
        if w >= lo + len {
            w = lo;
        }
        w
    }

    pub fn contains(&self, axis: usize, x: f64) -> bool {
        x >= self.lower(axis) && x <= self.upper(axis)
    }

    /// Cell coordinate along one axis, clamped into the grid.
    fn cell_coord(&self, axis: usize, x: f64) -> usize {
        let n = self.cell_count(axis);
        let c = ((x - self.lower(axis)) / self.cell_size[axis]).floor();
        if c < 0.0 {
            0
        } else {
            (c as usize).min(n - 1)
        }
    }

    /// Human-readable one-line description used in result-file metadata.
    pub fn describe(&self) -> String {
        let join = |v: Vec<String>| v.join("|");
        format!(
            "cell_size={};minimum={};maximum={};boundary={}",
            join(self.cell_size().iter().map(|v| fmt_f64(*v)).collect()),
            join(self.min_cells().iter().map(|v| v.to_string()).collect()),
            join(self.max_cells().iter().map(|v| v.to_string()).collect()),
            join(self.boundaries().iter().map(|b| b.name().to_string()).collect()),
        )
    }
}

/// One candidate neighbor of particle `i`, possibly a periodic or mirror
/// image of particle `j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pair {
    pub j: usize,
    /// Boundary-adjusted vector from `i` to the (imaged) `j`. Unused axes are 0.
    pub rel: [f64; 3],
    pub dist: f64,
    /// Per-axis reflection signs: +1 unreflected, -1 mirrored.
    pub guide: [f64; 3],
    /// True when at least one axis is mirrored across a symmetric wall.
    pub mirrored: bool,
}

impl Pair {
    pub fn rel_tensor(&self, dimension: usize) -> Tensor {
        Tensor::vector(&self.rel[..dimension])
    }

    /// The unimaged particle itself.
    pub fn is_self(&self, i: usize) -> bool {
        self.j == i && !self.mirrored && self.dist == 0.0
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
struct CellGrid {
    counts: [usize; 3],
    cell_of: Vec<Option<usize>>,
    start: Vec<usize>,
    members: Vec<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ShiftReport {
    pub wrapped: usize,
    pub symmetric_escapes: usize,
    pub deactivated: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSystem {
    domain: Domain,
    positions: Vec<Tensor>,
    active: Vec<bool>,
    gid: Vec<i64>,
    grid: CellGrid,
    dirty: bool,
    builds: usize,
}

#[derive(Clone, Copy)]
enum Image {
    None,
    Lower,
    Upper,
}

impl ParticleSystem {
    /// Positions are validated against the domain: coordinates on periodic
    /// axes are wrapped, anything outside a non-periodic axis is an error.
    pub fn new(domain: Domain, positions: Vec<Tensor>, gid: Vec<i64>) -> Result<Self, DomainError> {
        let d = domain.dimension();
        let mut positions = positions;
        for (index, p) in positions.iter_mut().enumerate() {
            if p.rows() != d || p.cols() != 1 {
                return Err(DomainError::PositionDimension {
                    index,
                    expected: d,
                    got: p.len(),
                });
            }
            for axis in 0..d {
                let x = p.as_slice()[axis];
                match domain.boundary(axis) {
                    Boundary::Periodic => p.as_mut_slice()[axis] = domain.wrap(axis, x),
                    _ if !domain.contains(axis, x) => {
                        return Err(DomainError::Outside {
                            index,
                            axis,
                            position: p.to_string(),
                        })
                    }
                    _ => {}
                }
            }
        }
        let n = positions.len();
        let gid = if gid.len() == n { gid } else { vec![0; n] };
        let mut ps = ParticleSystem {
            domain,
            positions,
            active: vec![true; n],
            gid,
            grid: CellGrid::default(),
            dirty: true,
            builds: 0,
        };
        ps.build_cells();
        Ok(ps)
    }

    /// Rebuild a system from a saved state. Positions are taken as they
    /// are: a particle may legitimately sit beyond a symmetric wall or be
    /// inactive outside a cut-off face.
    pub fn restore(
        domain: Domain,
        positions: Vec<Tensor>,
        gid: Vec<i64>,
        active: Vec<bool>,
    ) -> Result<Self, DomainError> {
        let d = domain.dimension();
        if let Some((index, p)) = positions
            .iter()
            .enumerate()
            .find(|(_, p)| p.rows() != d || p.cols() != 1)
        {
            return Err(DomainError::PositionDimension {
                index,
                expected: d,
                got: p.len(),
            });
        }
        let n = positions.len();
        let mut ps = ParticleSystem {
            domain,
            positions,
            active: if active.len() == n { active } else { vec![true; n] },
            gid: if gid.len() == n { gid } else { vec![0; n] },
            grid: CellGrid::default(),
            dirty: true,
            builds: 0,
        };
        ps.build_cells();
        Ok(ps)
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn dimension(&self) -> usize {
        self.domain.dimension()
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Tensor] {
        &self.positions
    }

    pub fn position(&self, i: usize) -> &Tensor {
        &self.positions[i]
    }

    pub fn gid(&self) -> &[i64] {
        &self.gid
    }

    pub fn is_active(&self, i: usize) -> bool {
        self.active[i]
    }

    pub fn active_flags(&self) -> &[bool] {
        &self.active
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|a| **a).count()
    }

    pub fn set_active_flags(&mut self, flags: Vec<bool>) {
        assert_eq!(flags.len(), self.len());
        self.active = flags;
        self.dirty = true;
    }

    pub fn is_dirty(&self) -> bool {
        self.dirty
    }

    pub fn build_count(&self) -> usize {
        self.builds
    }

    /// Replace all positions (the `r` field was written), apply the boundary
    /// shift and mark the neighbor structure stale.
    pub fn set_positions(&mut self, positions: Vec<Tensor>) -> ShiftReport {
        assert_eq!(positions.len(), self.len());
        self.positions = positions;
        self.dirty = true;
        self.apply_boundary_shift()
    }

    /// Wrap positions on periodic axes; count particles beyond symmetric
    /// walls (they keep their position and are clamped into the boundary
    /// cell); deactivate particles that crossed a cut-off face.
    pub fn apply_boundary_shift(&mut self) -> ShiftReport {
        let mut report = ShiftReport::default();
        let d = self.dimension();
        for (i, p) in self.positions.iter_mut().enumerate() {
            if !self.active[i] {
                continue;
            }
            for axis in 0..d {
                let x = p.as_slice()[axis];
                match self.domain.boundary(axis) {
                    Boundary::Periodic => {
                        let w = self.domain.wrap(axis, x);
                        if w != x {
                            p.as_mut_slice()[axis] = w;
                            report.wrapped += 1;
                        }
                    }
                    Boundary::Symmetric => {
                        if !self.domain.contains(axis, x) {
                            report.symmetric_escapes += 1;
                        }
                    }
                    Boundary::Cutoff => {
                        if !self.domain.contains(axis, x) && self.active[i] {
                            self.active[i] = false;
                            self.dirty = true;
                            report.deactivated += 1;
                        }
                    }
                }
            }
        }
        report
    }

    /// Rebuild the cell lists from the current positions. Inactive particles
    /// are left out. Particles inside a cell stay in index order.
    pub fn build_cells(&mut self) {
        let d = self.dimension();
        let mut counts = [1usize; 3];
        for (axis, c) in counts.iter_mut().enumerate().take(d) {
            *c = self.domain.cell_count(axis);
        }
        let total: usize = counts.iter().product();
        let mut cell_of = Vec::with_capacity(self.len());
        let mut occupancy = vec![0usize; total + 1];
        for (i, p) in self.positions.iter().enumerate() {
            if !self.active[i] {
                cell_of.push(None);
                continue;
            }
            let mut lin = 0;
            for axis in (0..d).rev() {
                lin = lin * counts[axis] + self.domain.cell_coord(axis, p.as_slice()[axis]);
            }
            occupancy[lin + 1] += 1;
            cell_of.push(Some(lin));
        }
        for k in 1..=total {
            occupancy[k] += occupancy[k - 1];
        }
        let start = occupancy.clone();
        let mut fill = occupancy;
        let mut members = vec![0usize; start[total]];
        for (i, c) in cell_of.iter().enumerate() {
            if let Some(c) = c {
                members[fill[*c]] = i;
                fill[*c] += 1;
            }
        }
        self.grid = CellGrid {
            counts,
            cell_of,
            start,
            members,
        };
        self.dirty = false;
        self.builds += 1;
    }

    /// Rebuild only if positions changed since the last build.
    pub fn ensure_cells(&mut self) -> bool {
        if self.dirty {
            self.build_cells();
            true
        } else {
            false
        }
    }

    pub fn cell_members(&self, linear: usize) -> &[usize] {
        &self.grid.members[self.grid.start[linear]..self.grid.start[linear + 1]]
    }

    pub fn cell_of(&self, i: usize) -> Option<usize> {
        self.grid.cell_of[i]
    }

    pub fn nonempty_cells(&self) -> usize {
        (0..self.grid.start.len() - 1)
            .filter(|c| self.grid.start[c + 1] > self.grid.start[*c])
            .count()
    }

    fn cell_coords(&self, linear: usize) -> [usize; 3] {
        let mut rest = linear;
        let mut out = [0; 3];
        for axis in 0..3 {
            out[axis] = rest % self.grid.counts[axis];
            rest /= self.grid.counts[axis];
        }
        out
    }

    /// Invoke `visit` once per candidate in the 3^d cell stencil of `i`,
    /// including `i` itself at zero distance, periodic images on periodic
    /// axes, and mirror images across symmetric walls touched by `i`'s cell.
    /// Candidates are not filtered by distance.
    pub fn for_each_neighbor(&self, i: usize, mut visit: impl FnMut(&Pair)) {
        let Some(cell) = self.grid.cell_of[i] else {
            return;
        };
        let d = self.dimension();
        let ci = self.cell_coords(cell);
        let xi = self.positions[i].as_slice();

        let mut stencil: [[(usize, f64); 3]; 3] = [[(0, 0.0); 3]; 3];
        let mut stencil_len = [1usize; 3];
        let mut images: [[Image; 3]; 3] = [[Image::None; 3]; 3];
        let mut images_len = [1usize; 3];
        for axis in 0..d {
            let n = self.grid.counts[axis] as i64;
            let boundary = self.domain.boundary(axis);
            let mut len = 0;
            for off in -1i64..=1 {
                let raw = ci[axis] as i64 + off;
                let entry = if boundary == Boundary::Periodic {
                    let idx = raw.rem_euclid(n) as usize;
                    let shift = raw.div_euclid(n) as f64 * self.domain.extent(axis);
                    (idx, shift)
                } else if (0..n).contains(&raw) {
                    (raw as usize, 0.0)
                } else {
                    continue;
                };
                if !stencil[axis][..len].contains(&entry) {
                    stencil[axis][len] = entry;
                    len += 1;
                }
            }
            stencil_len[axis] = len;
            if boundary == Boundary::Symmetric {
                let mut m = 1;
                if ci[axis] == 0 {
                    images[axis][m] = Image::Lower;
                    m += 1;
                }
                if ci[axis] as i64 == n - 1 {
                    images[axis][m] = Image::Upper;
                    m += 1;
                }
                images_len[axis] = m;
            }
        }

        for ix in 0..images_len[0] {
            for iy in 0..images_len[1] {
                for iz in 0..images_len[2] {
                    let image = [images[0][ix], images[1][iy], images[2][iz]];
                    let mut guide = [1.0; 3];
                    let mut mirrored = false;
                    for axis in 0..d {
                        if !matches!(image[axis], Image::None) {
                            guide[axis] = -1.0;
                            mirrored = true;
                        }
                    }
                    for sx in 0..stencil_len[0] {
                        for sy in 0..stencil_len[1] {
                            for sz in 0..stencil_len[2] {
                                let picks = [stencil[0][sx], stencil[1][sy], stencil[2][sz]];
                                let mut lin = 0;
                                for axis in (0..d).rev() {
                                    lin = lin * self.grid.counts[axis] + picks[axis].0;
                                }
                                for &j in self.cell_members(lin) {
                                    let xj = self.positions[j].as_slice();
                                    let mut rel = [0.0; 3];
                                    let mut dist2 = 0.0;
                                    for axis in 0..d {
                                        let x = xj[axis] + picks[axis].1;
                                        let x = match image[axis] {
                                            Image::None => x,
                                            Image::Lower => 2.0 * self.domain.lower(axis) - x,
                                            Image::Upper => 2.0 * self.domain.upper(axis) - x,
                                        };
                                        rel[axis] = x - xi[axis];
                                        dist2 += rel[axis] * rel[axis];
                                    }
                                    visit(&Pair {
                                        j,
                                        rel,
                                        dist: dist2.sqrt(),
                                        guide,
                                        mirrored,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}
