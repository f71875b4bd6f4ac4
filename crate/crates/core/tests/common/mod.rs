//! Shared helpers for the integration tests.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use nauticle::io::deck::parse_case;
use nauticle::io::vtk::ResultFrame;
use nauticle::particles::{Boundary, ParticleSystem};
use nauticle::{AssemblyOptions, Case, Tensor};

pub fn decks_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../decks")
}

pub fn deck_text(name: &str) -> String {
    std::fs::read_to_string(decks_dir().join(name)).unwrap()
}

/// Replaces the value of `simulated_time:` in a deck.
pub fn with_simulated_time(text: &str, t: &str) -> String {
    replace_key(text, "simulated_time", t)
}

pub fn with_print_interval(text: &str, t: &str) -> String {
    replace_key(text, "print_interval", t)
}

fn replace_key(text: &str, key: &str, value: &str) -> String {
    let tag = format!("{key}:");
    let mut out = String::new();
    let mut hit = false;
    for line in text.lines() {
        let trimmed = line.trim_start();
        if !hit && trimmed.starts_with(&tag) {
            let indent = &line[..line.len() - trimmed.len()];
            out.push_str(&format!("{indent}{key}: {value}\n"));
            hit = true;
        } else {
            out.push_str(line);
            out.push('\n');
        }
    }
    assert!(hit, "no `{key}` in deck");
    out
}

pub fn assemble(text: &str, base_dir: &Path, threads: usize, seed: u64) -> Case {
    let doc = parse_case(text, "test", base_dir).unwrap();
    Case::assemble(
        &doc,
        &AssemblyOptions {
            seed,
            threads,
            hot_start: None,
        },
    )
    .unwrap()
}

pub enum Grid {
    Lattice { gpos: String, gsize: String, gip_dist: String },
    File(String),
}

/// A small programmatic deck.
pub struct Deck {
    pub constants: Vec<(String, String)>,
    pub variables: Vec<(String, String)>,
    pub cell_size: String,
    pub minimum: String,
    pub maximum: String,
    pub boundary: String,
    pub grid: Grid,
    pub fields: Vec<(String, String)>,
    pub equations: Vec<(String, String)>,
    pub simulated_time: String,
    pub print_interval: String,
}

pub fn pairs(items: &[(&str, &str)]) -> Vec<(String, String)> {
    items.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
}

impl Deck {
    pub fn new(cell_size: &str, minimum: &str, maximum: &str, boundary: &str, grid: Grid) -> Self {
        Deck {
            constants: Vec::new(),
            variables: pairs(&[("dt", "1")]),
            cell_size: cell_size.into(),
            minimum: minimum.into(),
            maximum: maximum.into(),
            boundary: boundary.into(),
            grid,
            fields: Vec::new(),
            equations: Vec::new(),
            simulated_time: "1".into(),
            print_interval: "1".into(),
        }
    }

    pub fn text(&self) -> String {
        let list = |items: &[(String, String)], indent: &str| -> String {
            if items.is_empty() {
                return " []\n".to_string();
            }
            let mut s = String::from("\n");
            for (k, v) in items {
                s.push_str(&format!("{indent}- {k}: \"{v}\"\n"));
            }
            s
        };
        let grid = match &self.grid {
            Grid::Lattice { gpos, gsize, gip_dist } => format!(
                "          gpos: \"{gpos}\"\n          gsize: \"{gsize}\"\n          gip_dist: \"{gip_dist}\"\n"
            ),
            Grid::File(f) => format!("          file: {f}\n"),
        };
        format!(
            "simulation:\n  case:\n    workspace:\n      constants:{}      variables:{}      particle_system:\n        domain:\n          cell_size: \"{}\"\n          minimum: \"{}\"\n          maximum: \"{}\"\n          boundary: \"{}\"\n        grid:\n{grid}      fields:{}    equations:{}  parameter_space:\n    simulated_time: {}\n    print_interval: {}\n",
            list(&self.constants, "        "),
            list(&self.variables, "        "),
            self.cell_size,
            self.minimum,
            self.maximum,
            self.boundary,
            list(&self.fields, "        "),
            list(&self.equations, "      "),
            self.simulated_time,
            self.print_interval,
        )
    }
}

pub fn write_points(dir: &Path, name: &str, points: &[Vec<f64>]) {
    let text: String = points
        .iter()
        .map(|p| p.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(" ") + "\n")
        .collect();
    std::fs::write(dir.join(name), text).unwrap();
}

pub fn field<'a>(case: &'a Case, name: &str) -> &'a [Tensor] {
    &case.workspace().field(name).unwrap_or_else(|| panic!("no field {name}")).values
}

pub fn scalars(values: &[Tensor]) -> Vec<f64> {
    values.iter().map(|t| t.value()).collect()
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    (a - b).abs() / a.abs().max(b.abs())
}

/// Largest componentwise difference relative to the largest magnitude in
/// either frame, over positions, fields and variables.
pub fn frame_distance(a: &ResultFrame, b: &ResultFrame) -> f64 {
    assert_eq!(a.len(), b.len(), "particle count");
    assert_eq!(a.fields.len(), b.fields.len(), "field count");
    let mut worst = 0.0f64;
    let mut cmp = |x: &Tensor, y: &Tensor| {
        assert_eq!(x.shape(), y.shape());
        for (u, v) in x.as_slice().iter().zip(y.as_slice()) {
            let scale = u.abs().max(v.abs());
            if scale > 0.0 {
                worst = worst.max((u - v).abs() / scale);
            } else if u.is_nan() != v.is_nan() {
                worst = f64::INFINITY;
            }
        }
    };
    for (x, y) in a.positions.iter().zip(&b.positions) {
        cmp(x, y);
    }
    for (fa, fb) in a.fields.iter().zip(&b.fields) {
        assert_eq!(fa.name, fb.name);
        for (x, y) in fa.values.iter().zip(&fb.values) {
            cmp(x, y);
        }
    }
    for ((na, x), (nb, y)) in a.variables.iter().zip(&b.variables) {
        assert_eq!(na, nb);
        cmp(x, y);
    }
    worst
}

/// vtkio does not accept a FIELD block inside a POLYDATA dataset, so the
/// file is checked as two documents: the FIELD block on its own and the
/// POLYDATA body without it.
pub fn vtkio_split(bytes: &[u8]) -> (Vec<u8>, Vec<u8>) {
    let find = |pat: &[u8]| bytes.windows(pat.len()).position(|w| w == pat).expect("section");
    let ds = find(b"DATASET POLYDATA\n");
    let pts = find(b"\nPOINTS ") + 1;
    let head = &bytes[..ds];
    let mut a = head.to_vec();
    a.extend_from_slice(&bytes[ds + "DATASET POLYDATA\n".len()..pts]);
    let mut b = head.to_vec();
    b.extend_from_slice(b"DATASET POLYDATA\n");
    b.extend_from_slice(&bytes[pts..]);
    (a, b)
}

/// Validates a frame file with vtkio and checks point count and one scalar
/// array against our own reader. Returns a description of the first problem.
pub fn vtkio_check(bytes: &[u8], expect: &ResultFrame) -> Result<(), String> {
    use vtkio::model::{Attribute, DataSet, Piece};
    let (field_doc, poly_doc) = vtkio_split(bytes);
    let fd = vtkio::Vtk::parse_legacy_be(&field_doc[..]).map_err(|e| format!("field block: {e:?}"))?;
    match fd.data {
        DataSet::Field { data_array, .. } => {
            if !data_array.iter().any(|a| a.name == "time") {
                return Err("field block lacks `time`".into());
            }
        }
        other => return Err(format!("field block parsed as {other:?}")),
    }
    let pd = vtkio::Vtk::parse_legacy_be(&poly_doc[..]).map_err(|e| format!("polydata: {e:?}"))?;
    let DataSet::PolyData { pieces, .. } = pd.data else {
        return Err("not polydata".into());
    };
    let Some(Piece::Inline(piece)) = pieces.into_iter().next() else {
        return Err("no inline piece".into());
    };
    let points: Vec<f64> = piece.points.cast_into().ok_or("points are not doubles")?;
    if points.len() != 3 * expect.len() {
        return Err(format!("{} point coordinates for {} particles", points.len(), expect.len()));
    }
    for (k, p) in expect.positions.iter().enumerate() {
        for (a, v) in p.as_slice().iter().enumerate() {
            if points[3 * k + a] != *v {
                return Err(format!("point {k} axis {a}: {} vs {v}", points[3 * k + a]));
            }
        }
    }
    for f in expect.fields.iter().filter(|f| f.shape == nauticle::Shape::SCALAR) {
        let found = piece.data.point.iter().find_map(|a| match a {
            Attribute::DataArray(d) if d.name == f.name => Some(d.data.clone()),
            _ => None,
        });
        let data: Vec<f64> = found
            .ok_or(format!("no point array `{}`", f.name))?
            .cast_into()
            .ok_or("array is not double")?;
        let ours: Vec<f64> = f.values.iter().map(|t| t.value()).collect();
        if data != ours {
            return Err(format!("array `{}` differs", f.name));
        }
    }
    Ok(())
}

pub type PairKey = (usize, [i8; 3], [f64; 3]);

/// All images of every particle within `cutoff` of `i`, as
/// `(j, per-axis guide, rel)`, found without the cell grid.
pub fn brute_force_pairs(ps: &ParticleSystem, i: usize, cutoff: f64) -> Vec<PairKey> {
    let dom = ps.domain();
    let d = dom.dimension();
    let xi = ps.position(i).as_slice();
    // per axis: (shift multiple, mirror tag) with tag 0 none, 1 lower, 2 upper
    let axis_images = |axis: usize| -> Vec<(f64, u8)> {
        match dom.boundary(axis) {
            Boundary::Periodic => vec![(-1.0, 0), (0.0, 0), (1.0, 0)],
            Boundary::Symmetric => vec![(0.0, 0), (0.0, 1), (0.0, 2)],
            Boundary::Cutoff => vec![(0.0, 0)],
        }
    };
    let per_axis: Vec<Vec<(f64, u8)>> = (0..3).map(|a| if a < d { axis_images(a) } else { vec![(0.0, 0)] }).collect();
    let mut out = Vec::new();
    for j in 0..ps.len() {
        let xj = ps.position(j).as_slice();
        for a0 in &per_axis[0] {
            for a1 in &per_axis[1] {
                for a2 in &per_axis[2] {
                    let picks = [a0, a1, a2];
                    let mut rel = [0.0; 3];
                    let mut guide = [1i8; 3];
                    let mut dist2 = 0.0;
                    for axis in 0..d {
                        let (k, tag) = *picks[axis];
                        let x = xj[axis] + k * dom.extent(axis);
                        let x = match tag {
                            1 => 2.0 * dom.lower(axis) - x,
                            2 => 2.0 * dom.upper(axis) - x,
                            _ => x,
                        };
                        if tag != 0 {
                            guide[axis] = -1;
                        }
                        rel[axis] = x - xi[axis];
                        dist2 += rel[axis] * rel[axis];
                    }
                    if dist2.sqrt() <= cutoff {
                        out.push((j, guide, rel));
                    }
                }
            }
        }
    }
    out
}

pub fn sort_pairs(v: &mut [PairKey]) {
    v.sort_by(|a, b| {
        (a.0, a.1)
            .cmp(&(b.0, b.1))
            .then(a.2.partial_cmp(&b.2).unwrap())
    });
}

