//! Legacy VTK PolyData result frames.
//!
//! Layout: a dataset-level `FIELD FieldData` block holding the case metadata
//! as UTF-8 `unsigned_char` arrays, then `POINTS` (padded to three
//! components), one `VERTICES` cell per particle and `POINT_DATA` with one
//! array per field. Binary files store big-endian doubles and int32.

use std::path::Path;

use crate::error::{Error, Result};
use crate::numfmt::fmt_f64;
use crate::tensor::{Shape, Tensor};
use crate::workspace::FieldData;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Ascii,
    Binary,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "ascii" => Ok(Format::Ascii),
            "binary" => Ok(Format::Binary),
            _ => Err(format!("unknown output format `{s}` (ascii or binary)")),
        }
    }
}

/// Complete state of one output instant.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultFrame {
    pub title: String,
    pub frame: usize,
    pub time: f64,
    pub step: u64,
    pub rng_epoch: u64,
    pub seed: Option<u64>,
    pub dimension: usize,
    pub domain: String,
    pub constants: Vec<(String, Tensor)>,
    pub variables: Vec<(String, Tensor)>,
    /// (label, `lhs=rhs` source text)
    pub equations: Vec<(String, String)>,
    pub positions: Vec<Tensor>,
    pub gid: Vec<i64>,
    pub active: Vec<bool>,
    pub fields: Vec<FieldData>,
}

impl ResultFrame {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn field(&self, name: &str) -> Option<&FieldData> {
        self.fields.iter().find(|f| f.name == name)
    }

    pub fn variable(&self, name: &str) -> Option<&Tensor> {
        self.variables.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    fn metadata(&self) -> Vec<(&'static str, String)> {
        let symbols = |list: &[(String, Tensor)]| {
            list.iter()
                .map(|(n, v)| format!("{n}={}", v.encode()))
                .collect::<Vec<_>>()
                .join("\n")
        };
        let mut out = vec![
            ("time", fmt_f64(self.time)),
            ("frame", self.frame.to_string()),
            ("step", self.step.to_string()),
            ("rng_epoch", self.rng_epoch.to_string()),
        ];
        if let Some(seed) = self.seed {
            out.push(("seed", seed.to_string()));
        }
        out.push(("dimension", self.dimension.to_string()));
        out.push(("domain", self.domain.clone()));
        out.push(("constants", symbols(&self.constants)));
        out.push(("variables", symbols(&self.variables)));
        out.push((
            "equations",
            self.equations
                .iter()
                .map(|(label, src)| format!("{label}: {src}"))
                .collect::<Vec<_>>()
                .join("\n"),
        ));
        out.push((
            "fields",
            self.fields
                .iter()
                .map(|f| format!("{}={}x{}", f.name, f.shape.rows, f.shape.cols))
                .collect::<Vec<_>>()
                .join("\n"),
        ));
        out.retain(|(_, v)| !v.is_empty());
        out
    }
}

struct Sink {
    format: Format,
    buf: Vec<u8>,
}

impl Sink {
    fn line(&mut self, text: &str) {
        self.buf.extend_from_slice(text.as_bytes());
        self.buf.push(b'\n');
    }

    fn doubles(&mut self, values: &[f64], per_line: usize) {
        match self.format {
            Format::Ascii => {
                for chunk in values.chunks(per_line.max(1)) {
                    let text: Vec<String> = chunk.iter().map(|v| fmt_f64(*v)).collect();
                    self.line(&text.join(" "));
                }
            }
            Format::Binary => {
                for v in values {
                    self.buf.extend_from_slice(&v.to_be_bytes());
                }
                self.buf.push(b'\n');
            }
        }
    }

    fn ints(&mut self, values: &[i32], per_line: usize) {
        match self.format {
            Format::Ascii => {
                for chunk in values.chunks(per_line.max(1)) {
                    let text: Vec<String> = chunk.iter().map(|v| v.to_string()).collect();
                    self.line(&text.join(" "));
                }
            }
            Format::Binary => {
                for v in values {
                    self.buf.extend_from_slice(&v.to_be_bytes());
                }
                self.buf.push(b'\n');
            }
        }
    }

    fn bytes(&mut self, values: &[u8]) {
        match self.format {
            Format::Ascii => {
                for chunk in values.chunks(32) {
                    let text: Vec<String> = chunk.iter().map(|v| v.to_string()).collect();
                    self.line(&text.join(" "));
                }
            }
            Format::Binary => {
                self.buf.extend_from_slice(values);
                self.buf.push(b'\n');
            }
        }
    }
}

/// Pad a tensor into the VTK component layout of its array kind.
fn padded(t: &Tensor, shape: Shape, out: &mut Vec<f64>) {
    if shape.is_scalar() {
        out.push(t.value());
    } else if shape.cols == 1 {
        let mut v = [0.0; 3];
        v[..shape.rows].copy_from_slice(t.as_slice());
        out.extend_from_slice(&v);
    } else {
        let mut m = [0.0; 9];
        for r in 0..shape.rows {
            for c in 0..shape.cols {
                m[3 * r + c] = t.get(r, c);
            }
        }
        out.extend_from_slice(&m);
    }
}

fn unpad(values: &[f64], shape: Shape) -> Tensor {
    if shape.is_scalar() {
        Tensor::scalar(values[0])
    } else if shape.cols == 1 {
        Tensor::vector(&values[..shape.rows])
    } else {
        let mut data = Vec::with_capacity(shape.len());
        for r in 0..shape.rows {
            for c in 0..shape.cols {
                data.push(values[3 * r + c]);
            }
        }
        Tensor::new(shape.rows, shape.cols, &data).expect("shape within 3x3")
    }
}

fn components(shape: Shape) -> usize {
    if shape.is_scalar() {
        1
    } else if shape.cols == 1 {
        3
    } else {
        9
    }
}

pub fn encode_vtk(frame: &ResultFrame, format: Format) -> Vec<u8> {
    let n = frame.len();
    let mut s = Sink {
        format,
        buf: Vec::new(),
    };
    s.line("# vtk DataFile Version 3.0");
    s.line(&frame.title.replace(['\n', '\r'], " "));
    s.line(match format {
        Format::Ascii => "ASCII",
        Format::Binary => "BINARY",
    });
    s.line("DATASET POLYDATA");

    let meta = frame.metadata();
    s.line(&format!("FIELD FieldData {}", meta.len()));
    for (name, text) in &meta {
        s.line(&format!("{name} 1 {} unsigned_char", text.len()));
        s.bytes(text.as_bytes());
    }

    s.line(&format!("POINTS {n} double"));
    let mut pts = Vec::with_capacity(3 * n);
    for p in &frame.positions {
        let mut v = [0.0; 3];
        v[..p.len()].copy_from_slice(p.as_slice());
        pts.extend_from_slice(&v);
    }
    s.doubles(&pts, 3);
    s.line(&format!("VERTICES {n} {}", 2 * n));
    let cells: Vec<i32> = (0..n).flat_map(|i| [1, i as i32]).collect();
    s.ints(&cells, 2);

    s.line(&format!("POINT_DATA {n}"));
    let taken = |name: &str| frame.fields.iter().any(|f| f.name == name);
    if !taken("gid") {
        s.line("SCALARS gid int 1");
        s.line("LOOKUP_TABLE default");
        let gid: Vec<i32> = frame.gid.iter().map(|g| *g as i32).collect();
        s.ints(&gid, 1);
    }
    if frame.active.iter().any(|a| !a) && !taken("active") {
        s.line("SCALARS active int 1");
        s.line("LOOKUP_TABLE default");
        let active: Vec<i32> = frame.active.iter().map(|a| *a as i32).collect();
        s.ints(&active, 1);
    }
    for f in &frame.fields {
        let mut values = Vec::with_capacity(components(f.shape) * n);
        for t in &f.values {
            padded(t, f.shape, &mut values);
        }
        if f.shape.is_scalar() {
            s.line(&format!("SCALARS {} double 1", f.name));
            s.line("LOOKUP_TABLE default");
            s.doubles(&values, 1);
        } else if f.shape.cols == 1 {
            s.line(&format!("VECTORS {} double", f.name));
            s.doubles(&values, 3);
        } else {
            s.line(&format!("TENSORS {} double", f.name));
            s.doubles(&values, 3);
        }
    }
    s.buf
}

pub fn write_vtk(frame: &ResultFrame, path: &Path, format: Format) -> Result<()> {
    std::fs::write(path, encode_vtk(frame, format)).map_err(|e| Error::io(path, e))
}

pub fn read_vtk(path: &Path) -> Result<ResultFrame> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_vtk(&bytes).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    binary: bool,
}

impl<'a> Cursor<'a> {
    fn bad(&self, what: impl std::fmt::Display) -> Error {
        let line = self.bytes[..self.pos.min(self.bytes.len())]
            .iter()
            .filter(|b| **b == b'\n')
            .count()
            + 1;
        Error::parse(format!("result file near line {line}: {what}"))
    }

    fn line(&mut self) -> Result<&'a str> {
        let rest = &self.bytes[self.pos..];
        if rest.is_empty() {
            return Err(self.bad("unexpected end of file"));
        }
        let end = rest.iter().position(|b| *b == b'\n').unwrap_or(rest.len());
        self.pos += (end + 1).min(rest.len());
        std::str::from_utf8(&rest[..end])
            .map(|s| s.trim_end_matches('\r'))
            .map_err(|_| self.bad("header is not UTF-8"))
    }

    fn at_end(&mut self) -> bool {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        self.pos >= self.bytes.len()
    }

    fn token(&mut self) -> Result<&'a str> {
        if self.at_end() {
            return Err(self.bad("unexpected end of file"));
        }
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos]).map_err(|_| self.bad("token is not UTF-8"))
    }

    /// A header line, split into tokens; in binary files the raw data
    /// starts right after its newline.
    fn header(&mut self) -> Result<Vec<&'a str>> {
        if self.at_end() {
            return Err(self.bad("unexpected end of file"));
        }
        Ok(self.line()?.split_whitespace().collect())
    }

    fn number<T: std::str::FromStr>(&self, text: &str) -> Result<T> {
        text.parse().map_err(|_| self.bad(format!("`{text}` is not a number")))
    }

    fn raw(&mut self, len: usize) -> Result<&'a [u8]> {
        if self.pos + len > self.bytes.len() {
            return Err(self.bad("binary data truncated"));
        }
        let out = &self.bytes[self.pos..self.pos + len];
        self.pos += len;
        Ok(out)
    }

    fn doubles(&mut self, n: usize) -> Result<Vec<f64>> {
        if self.binary {
            let raw = self.raw(8 * n)?;
            Ok(raw
                .chunks_exact(8)
                .map(|c| f64::from_be_bytes(c.try_into().expect("8 bytes")))
                .collect())
        } else {
            (0..n).map(|_| self.token().and_then(|t| self.number(t))).collect()
        }
    }

    fn ints(&mut self, n: usize) -> Result<Vec<i32>> {
        if self.binary {
            let raw = self.raw(4 * n)?;
            Ok(raw
                .chunks_exact(4)
                .map(|c| i32::from_be_bytes(c.try_into().expect("4 bytes")))
                .collect())
        } else {
            (0..n).map(|_| self.token().and_then(|t| self.number(t))).collect()
        }
    }

    fn bytes(&mut self, n: usize) -> Result<Vec<u8>> {
        if self.binary {
            Ok(self.raw(n)?.to_vec())
        } else {
            (0..n).map(|_| self.token().and_then(|t| self.number(t))).collect()
        }
    }
}

fn expect_keyword(cur: &Cursor<'_>, tokens: &[&str], keyword: &str, len: usize) -> Result<()> {
    if tokens.first() != Some(&keyword) || tokens.len() != len {
        return Err(cur.bad(format!("expected `{keyword}` section, found `{}`", tokens.join(" "))));
    }
    Ok(())
}

fn parse_symbols(cur: &Cursor<'_>, text: &str) -> Result<Vec<(String, Tensor)>> {
    text.lines()
        .filter(|l| !l.is_empty())
        .map(|l| {
            let (name, value) = l
                .split_once('=')
                .ok_or_else(|| cur.bad(format!("malformed symbol entry `{l}`")))?;
            let value = Tensor::decode(value)
                .ok_or_else(|| cur.bad(format!("malformed value for `{name}`")))?;
            Ok((name.to_string(), value))
        })
        .collect()
}

pub fn decode_vtk(bytes: &[u8]) -> Result<ResultFrame> {
    let mut cur = Cursor {
        bytes,
        pos: 0,
        binary: false,
    };
    if !cur.line()?.starts_with("# vtk DataFile") {
        return Err(cur.bad("not a legacy VTK file"));
    }
    let title = cur.line()?.to_string();
    cur.binary = match cur.line()?.trim() {
        "ASCII" => false,
        "BINARY" => true,
        other => return Err(cur.bad(format!("unknown data format `{other}`"))),
    };
    let tokens = cur.header()?;
    if tokens != ["DATASET", "POLYDATA"] {
        return Err(cur.bad("expected `DATASET POLYDATA`"));
    }

    let tokens = cur.header()?;
    expect_keyword(&cur, &tokens, "FIELD", 3)?;
    let entries: usize = cur.number(tokens[2])?;
    let mut meta = std::collections::HashMap::new();
    for _ in 0..entries {
        let tokens = cur.header()?;
        if tokens.len() != 4 || tokens[3] != "unsigned_char" {
            return Err(cur.bad(format!("unexpected field-data array `{}`", tokens.join(" "))));
        }
        let len: usize = cur.number(tokens[2])?;
        let raw = cur.bytes(len)?;
        let text = String::from_utf8(raw).map_err(|_| cur.bad("metadata is not UTF-8"))?;
        meta.insert(tokens[0].to_string(), text);
    }
    let get = |key: &str| meta.get(key).map(String::as_str).unwrap_or("");
    let time: f64 = cur.number(get("time"))?;
    let frame_index: usize = cur.number(get("frame"))?;
    let step: u64 = cur.number(get("step"))?;
    let rng_epoch: u64 = cur.number(get("rng_epoch"))?;
    let seed = match meta.get("seed") {
        Some(s) => Some(cur.number(s)?),
        None => None,
    };
    let dimension: usize = cur.number(get("dimension"))?;
    if !(1..=3).contains(&dimension) {
        return Err(cur.bad(format!("invalid dimension {dimension}")));
    }
    let constants = parse_symbols(&cur, get("constants"))?;
    let variables = parse_symbols(&cur, get("variables"))?;
    let equations = get("equations")
        .lines()
        .filter(|l| !l.is_empty())
        .map(|l| {
            let (label, src) = l.split_once(": ").unwrap_or(("", l));
            (label.to_string(), src.to_string())
        })
        .collect();
    let mut shapes = Vec::new();
    for l in get("fields").lines().filter(|l| !l.is_empty()) {
        let parsed = l.split_once('=').and_then(|(name, shape)| {
            let (r, c) = shape.split_once('x')?;
            let (r, c): (usize, usize) = (r.parse().ok()?, c.parse().ok()?);
            ((1..=3).contains(&r) && (1..=3).contains(&c)).then(|| (name.to_string(), Shape::new(r, c)))
        });
        shapes.push(parsed.ok_or_else(|| cur.bad(format!("malformed field entry `{l}`")))?);
    }

    let tokens = cur.header()?;
    expect_keyword(&cur, &tokens, "POINTS", 3)?;
    let n: usize = cur.number(tokens[1])?;
    if tokens[2] != "double" {
        return Err(cur.bad("points must be double"));
    }
    let pts = cur.doubles(3 * n)?;
    let positions = pts.chunks_exact(3).map(|p| Tensor::vector(&p[..dimension])).collect();

    let tokens = cur.header()?;
    expect_keyword(&cur, &tokens, "VERTICES", 3)?;
    let size: usize = cur.number(tokens[2])?;
    cur.ints(size)?;

    let mut gid = vec![0i64; n];
    let mut active = vec![true; n];
    let mut arrays: Vec<(String, Vec<f64>)> = Vec::new();
    if !cur.at_end() {
        let tokens = cur.header()?;
        expect_keyword(&cur, &tokens, "POINT_DATA", 2)?;
        if cur.number::<usize>(tokens[1])? != n {
            return Err(cur.bad("POINT_DATA count differs from POINTS"));
        }
    }
    while !cur.at_end() {
        let tokens = cur.header()?;
        let (kind, name) = match tokens.as_slice() {
            [kind, name, ..] => (*kind, name.to_string()),
            _ => return Err(cur.bad("malformed point-data header")),
        };
        let width = match kind {
            "SCALARS" => {
                let lut = cur.header()?;
                if lut.first() != Some(&"LOOKUP_TABLE") {
                    return Err(cur.bad("expected LOOKUP_TABLE"));
                }
                1
            }
            "VECTORS" => 3,
            "TENSORS" => 9,
            other => return Err(cur.bad(format!("unsupported point-data kind `{other}`"))),
        };
        let ty = tokens.get(2).copied().unwrap_or("");
        let is_field = shapes.iter().any(|(f, _)| *f == name);
        match ty {
            "int" if !is_field && (name == "gid" || name == "active") => {
                let values = cur.ints(n)?;
                if name == "gid" {
                    gid = values.iter().map(|v| *v as i64).collect();
                } else {
                    active = values.iter().map(|v| *v != 0).collect();
                }
            }
            "double" => arrays.push((name, cur.doubles(width * n)?)),
            other => return Err(cur.bad(format!("unsupported data type `{other}` for `{name}`"))),
        }
    }

    let mut fields = Vec::with_capacity(shapes.len());
    for (name, shape) in shapes {
        let (_, data) = arrays
            .iter()
            .find(|(a, _)| *a == name)
            .ok_or_else(|| cur.bad(format!("field `{name}` listed in metadata has no point data")))?;
        let width = components(shape);
        if data.len() != width * n {
            return Err(cur.bad(format!("field `{name}` has the wrong number of components")));
        }
        let values = data.chunks_exact(width).map(|c| unpad(c, shape)).collect();
        fields.push(FieldData { name, shape, values });
    }

    Ok(ResultFrame {
        title,
        frame: frame_index,
        time,
        step,
        rng_epoch,
        seed,
        dimension,
        domain: get("domain").to_string(),
        constants,
        variables,
        equations,
        positions,
        gid,
        active,
        fields,
    })
}

/// `frame_<k>.vtk`
pub fn frame_file_name(k: usize) -> String {
    format!("frame_{k}.vtk")
}
