//! YAML case files.
//!
//! ```yaml
//! simulation:
//!   case:
//!     workspace:
//!       constants: [- name: expr, ...]
//!       variables: [- name: expr, ...]
//!       particle_system:
//!         domain: {cell_size, minimum, maximum, boundary}
//!         grid: {gid, gpos, gsize, goffset, gip_dist} | {gid, file}
//!       fields: [- name: expr, ...]
//!     equations: [- label: lhs=rhs, ...]
//!   parameter_space: {simulated_time, print_interval}
//! ```
//!
//! Every value is an SFL expression; numbers are read as their text. List
//! order is definition order; mapping order is free. `grid` may also be a
//! list of grid mappings.

use std::path::{Path, PathBuf};

use serde_yaml::{Mapping, Value};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Definition {
    pub name: String,
    pub expr: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    pub cell_size: String,
    pub minimum: String,
    pub maximum: String,
    pub boundary: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GridSpec {
    Lattice {
        gid: String,
        gpos: String,
        gsize: String,
        goffset: String,
        gip_dist: String,
    },
    File {
        gid: String,
        file: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseDocument {
    /// Case name (file stem), used for the output directory.
    pub name: String,
    /// Directory relative paths (point files) are resolved against.
    pub base_dir: PathBuf,
    pub constants: Vec<Definition>,
    pub variables: Vec<Definition>,
    pub domain: DomainSpec,
    pub grids: Vec<GridSpec>,
    pub fields: Vec<Definition>,
    pub equations: Vec<Definition>,
    pub simulated_time: String,
    pub print_interval: String,
}

pub fn read_case_file(path: &Path) -> Result<CaseDocument> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "case".to_string());
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_case(&text, &name, &base).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_case(text: &str, name: &str, base_dir: &Path) -> Result<CaseDocument> {
    let root: Value =
        serde_yaml::from_str(text).map_err(|e| Error::parse(format!("malformed YAML: {e}")))?;
    let root = mapping(&root, "document")?;
    check_keys(root, "document", &["simulation"])?;
    let sim = mapping(required(root, "simulation", "document")?, "simulation")?;
    check_keys(sim, "simulation", &["case", "parameter_space"])?;

    let case = mapping(required(sim, "case", "simulation")?, "case")?;
    check_keys(case, "case", &["workspace", "equations"])?;
    let ws = mapping(required(case, "workspace", "case")?, "workspace")?;
    check_keys(ws, "workspace", &["constants", "variables", "particle_system", "fields"])?;

    let ps = mapping(required(ws, "particle_system", "workspace")?, "particle_system")?;
    check_keys(ps, "particle_system", &["domain", "grid"])?;
    let dom = mapping(required(ps, "domain", "particle_system")?, "domain")?;
    check_keys(dom, "domain", &["cell_size", "minimum", "maximum", "boundary"])?;
    let domain = DomainSpec {
        cell_size: text_of(required(dom, "cell_size", "domain")?, "domain.cell_size")?,
        minimum: text_of(required(dom, "minimum", "domain")?, "domain.minimum")?,
        maximum: text_of(required(dom, "maximum", "domain")?, "domain.maximum")?,
        boundary: text_of(required(dom, "boundary", "domain")?, "domain.boundary")?,
    };

    let grids = match required(ps, "grid", "particle_system")? {
        Value::Sequence(items) => items
            .iter()
            .enumerate()
            .map(|(k, g)| grid_spec(g, &format!("grid[{k}]"), base_dir))
            .collect::<Result<Vec<_>>>()?,
        other => vec![grid_spec(other, "grid", base_dir)?],
    };
    if grids.is_empty() {
        return Err(Error::parse("`grid` list is empty"));
    }

    let params = mapping(required(sim, "parameter_space", "simulation")?, "parameter_space")?;
    check_keys(params, "parameter_space", &["simulated_time", "print_interval"])?;

    Ok(CaseDocument {
        name: name.to_string(),
        base_dir: base_dir.to_path_buf(),
        constants: definitions(ws, "constants")?,
        variables: definitions(ws, "variables")?,
        domain,
        grids,
        fields: definitions(ws, "fields")?,
        equations: definitions(case, "equations")?,
        simulated_time: text_of(
            required(params, "simulated_time", "parameter_space")?,
            "parameter_space.simulated_time",
        )?,
        print_interval: text_of(
            required(params, "print_interval", "parameter_space")?,
            "parameter_space.print_interval",
        )?,
    })
}

fn grid_spec(value: &Value, context: &str, base_dir: &Path) -> Result<GridSpec> {
    let grid = mapping(value, context)?;
    check_keys(grid, context, &["gid", "gpos", "gsize", "goffset", "gip_dist", "file"])?;
    let gid = match grid.get("gid") {
        Some(v) => text_of(v, &format!("{context}.gid"))?,
        None => "0".to_string(),
    };
    let field = |key: &str| -> Result<String> {
        text_of(required(grid, key, context)?, &format!("{context}.{key}"))
    };
    if let Some(file) = grid.get("file") {
        if let Some(extra) = ["gpos", "gsize", "goffset", "gip_dist"]
            .iter()
            .find(|k| grid.contains_key(**k))
        {
            return Err(Error::parse(format!(
                "`{context}` has both `file` and `{extra}`; use one form"
            )));
        }
        let file = PathBuf::from(text_of(file, &format!("{context}.file"))?);
        let file = if file.is_relative() { base_dir.join(file) } else { file };
        return Ok(GridSpec::File { gid, file });
    }
    Ok(GridSpec::Lattice {
        gid,
        gpos: field("gpos")?,
        gsize: field("gsize")?,
        goffset: match grid.get("goffset") {
            Some(v) => text_of(v, &format!("{context}.goffset"))?,
            None => "0".to_string(),
        },
        gip_dist: field("gip_dist")?,
    })
}

fn mapping<'a>(value: &'a Value, context: &str) -> Result<&'a Mapping> {
    value
        .as_mapping()
        .ok_or_else(|| Error::parse(format!("`{context}` must be a mapping")))
}

fn required<'a>(map: &'a Mapping, key: &str, context: &str) -> Result<&'a Value> {
    map.get(key)
        .ok_or_else(|| Error::parse(format!("missing key `{key}` in `{context}`")))
}

fn check_keys(map: &Mapping, context: &str, allowed: &[&str]) -> Result<()> {
    for key in map.keys() {
        let Some(key) = key.as_str() else {
            return Err(Error::parse(format!("non-string key in `{context}`")));
        };
        if !allowed.contains(&key) {
            let nearest = allowed
                .iter()
                .map(|a| (strsim::levenshtein(key, a), *a))
                .min()
                .map(|(_, a)| a)
                .unwrap_or_default();
            return Err(Error::parse(format!(
                "unknown key `{key}` in `{context}` (did you mean `{nearest}`?)"
            )));
        }
    }
    Ok(())
}

fn text_of(value: &Value, context: &str) -> Result<String> {
    match value {
        Value::String(s) => Ok(s.trim().to_string()),
        Value::Number(n) => Ok(n.to_string()),
        Value::Tagged(t) => text_of(&t.value, context),
        _ => Err(Error::parse(format!(
            "`{context}` must be an expression (string or number)"
        ))),
    }
}

/// A list of single-entry mappings `- name: expr`; a missing key or `null`
/// means an empty list.
fn definitions(map: &Mapping, key: &str) -> Result<Vec<Definition>> {
    let items = match map.get(key) {
        None | Some(Value::Null) => return Ok(Vec::new()),
        Some(Value::Sequence(items)) => items,
        Some(_) => return Err(Error::parse(format!("`{key}` must be a list of `- name: expression`"))),
    };
    items
        .iter()
        .enumerate()
        .map(|(k, item)| {
            let entry = item.as_mapping().filter(|m| m.len() == 1).ok_or_else(|| {
                Error::parse(format!("`{key}[{k}]` must be a single `name: expression` entry"))
            })?;
            let (name, expr) = entry.iter().next().expect("one entry");
            let name = match name {
                Value::String(s) => s.clone(),
                _ => return Err(Error::parse(format!("`{key}[{k}]` needs a symbol name"))),
            };
            Ok(Definition {
                expr: text_of(expr, &format!("{key}.{name}"))?,
                name,
            })
        })
        .collect()
}
