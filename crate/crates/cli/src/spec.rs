//! Copula expression documents.
//!
//! A document is a YAML (or JSON) tree whose nodes are base copulas,
//! generators and transforms. See `docs/spec-format.md` for the grammar.

use std::fmt;

use rmm_core::generator::to_mm;
use rmm_core::multivariate::{mm_n, rmm_3, rmm_n};
use rmm_core::transform::{mm, mm_iter, mm_limit, rmm, rmm_iter, rmm_limit};
use rmm_core::{BivariateCopula, Generator, MMGenerator, MMNSpec, MmKind, NCopula};
use serde_yaml::Value;

use crate::error::SpecError;

const DEFAULT_LIMIT_TOL: f64 = 1e-12;

/// A parsed and constructed copula.
#[derive(Clone, Debug)]
pub enum Model {
    Bivariate(BivariateCopula),
    Multivariate(NCopula),
}

impl Model {
    pub fn dim(&self) -> usize {
        match self {
            Model::Bivariate(_) => 2,
            Model::Multivariate(c) => c.dim(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Model::Bivariate(c) => c.label(),
            Model::Multivariate(c) => c.label(),
        }
    }

    /// Clamped value at `u`, which must have `dim()` coordinates.
    pub fn at(&self, u: &[f64]) -> f64 {
        match self {
            Model::Bivariate(c) => c.at(u[0], u[1]),
            Model::Multivariate(c) => c.at(u),
        }
    }

    fn as_ncopula(&self) -> NCopula {
        match self {
            Model::Bivariate(c) => NCopula::from_bivariate(c),
            Model::Multivariate(c) => c.clone(),
        }
    }
}

/// Inputs of a bivariate RMM node, kept for the limit diagnostics.
#[derive(Clone, Debug)]
pub struct RmmParts {
    pub c_dot: BivariateCopula,
    pub f: Generator,
    pub g: Generator,
}

/// A validated document: its source text, the constructed copula and, for
/// bivariate RMM roots, the transform inputs.
#[derive(Clone, Debug)]
pub struct CopulaSpecDoc {
    pub text: String,
    pub model: Model,
    pub rmm_parts: Option<RmmParts>,
}

impl fmt::Display for CopulaSpecDoc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.model.label())
    }
}

/// Parses and builds a document, reporting the node path of the first error.
pub fn parse_spec(text: &str) -> Result<CopulaSpecDoc, SpecError> {
    let root: Value = serde_yaml::from_str(text)
        .map_err(|e| SpecError::new("$", format!("syntax error: {e}")))?;
    let path = Path::root();
    let model = copula(&root, &path)?;
    let rmm_parts = rmm_parts(&root, &path)?;
    Ok(CopulaSpecDoc {
        text: text.to_owned(),
        model,
        rmm_parts,
    })
}

#[derive(Clone)]
struct Path(String);

impl Path {
    fn root() -> Self {
        Path(String::from("$"))
    }

    fn key(&self, k: &str) -> Self {
        Path(format!("{}.{k}", self.0))
    }

    fn index(&self, i: usize) -> Self {
        Path(format!("{}[{i}]", self.0))
    }

    fn err(&self, msg: impl Into<String>) -> SpecError {
        SpecError::new(&self.0, msg)
    }

    fn core(&self, e: rmm_core::Error) -> SpecError {
        SpecError::new(&self.0, e.to_string())
    }
}

/// A mapping node with the `{name, k:v}` shorthand folded in: a key with a
/// null value is the node's name, and a `k:v` key without a space after the
/// colon is split into a parameter.
struct Node {
    path: Path,
    name: Option<String>,
    entries: Vec<(String, Value)>,
}

impl Node {
    fn new(value: &Value, path: &Path, name_key: &str) -> Result<Self, SpecError> {
        match value {
            Value::String(s) => Ok(Node {
                path: path.clone(),
                name: Some(s.clone()),
                entries: Vec::new(),
            }),
            Value::Mapping(m) => {
                let mut name = None;
                let mut entries = Vec::new();
                for (k, v) in m {
                    let Some(k) = k.as_str() else {
                        return Err(path.err("keys must be strings"));
                    };
                    if k == name_key {
                        let s = v
                            .as_str()
                            .ok_or_else(|| path.key(k).err("expected a name"))?;
                        name = Some(s.to_owned());
                    } else if v.is_null() {
                        match k.split_once(':') {
                            Some((key, val)) => {
                                let parsed: Value =
                                    serde_yaml::from_str(val.trim()).map_err(|_| {
                                        path.key(key.trim())
                                            .err(format!("cannot read value '{val}'"))
                                    })?;
                                entries.push((key.trim().to_owned(), parsed));
                            }
                            None if name.is_none() => name = Some(k.to_owned()),
                            None => return Err(path.key(k).err("missing value")),
                        }
                    } else {
                        entries.push((k.to_owned(), v.clone()));
                    }
                }
                Ok(Node {
                    path: path.clone(),
                    name,
                    entries,
                })
            }
            _ => Err(path.err(format!("expected a name or a mapping with '{name_key}'"))),
        }
    }

    fn name(&self, what: &str) -> Result<&str, SpecError> {
        self.name
            .as_deref()
            .ok_or_else(|| self.path.err(format!("missing {what}")))
    }

    fn get(&self, key: &str) -> Option<&Value> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    fn require(&self, key: &str) -> Result<&Value, SpecError> {
        self.get(key)
            .ok_or_else(|| self.path.key(key).err("missing field"))
    }

    fn number(&self, key: &str) -> Result<f64, SpecError> {
        number(self.require(key)?, &self.path.key(key))
    }

    fn number_or(&self, key: &str, default: f64) -> Result<f64, SpecError> {
        match self.get(key) {
            Some(v) => number(v, &self.path.key(key)),
            None => Ok(default),
        }
    }

    fn count(&self, key: &str) -> Result<usize, SpecError> {
        let p = self.path.key(key);
        self.require(key)?
            .as_u64()
            .map(|n| n as usize)
            .ok_or_else(|| p.err("expected a non-negative integer"))
    }

    fn param(&self, key: &str, r: rmm_core::Result<Generator>) -> Result<Generator, SpecError> {
        r.map_err(|e| self.path.key(key).core(e))
    }

    /// Rejects keys outside `allowed`.
    fn only(&self, allowed: &[&str]) -> Result<(), SpecError> {
        match self
            .entries
            .iter()
            .find(|(k, _)| !allowed.contains(&k.as_str()))
        {
            Some((k, _)) => Err(self.path.key(k).err("unknown field")),
            None => Ok(()),
        }
    }
}

fn number(v: &Value, path: &Path) -> Result<f64, SpecError> {
    v.as_f64().ok_or_else(|| path.err("expected a number"))
}

fn copula(value: &Value, path: &Path) -> Result<Model, SpecError> {
    let is_transform = value
        .as_mapping()
        .is_some_and(|m| m.contains_key("transform"));
    let (model, flips) = if is_transform {
        transform(value, path)?
    } else {
        let node = Node::new(value, path, "base")?;
        (base(&node)?, flips(&node)?)
    };
    apply_flips(model, flips, path)
}

fn flips(node: &Node) -> Result<Vec<usize>, SpecError> {
    let Some(v) = node.get("flip") else {
        return Ok(Vec::new());
    };
    let path = node.path.key("flip");
    let items = v
        .as_sequence()
        .ok_or_else(|| path.err("expected a list of coordinates"))?;
    items
        .iter()
        .enumerate()
        .map(|(i, x)| match x.as_u64() {
            Some(k) if k >= 1 => Ok(k as usize),
            _ => Err(path.index(i).err("coordinates are 1-based integers")),
        })
        .collect()
}

fn apply_flips(model: Model, flips: Vec<usize>, path: &Path) -> Result<Model, SpecError> {
    if flips.is_empty() {
        return Ok(model);
    }
    let path = path.key("flip");
    let dim = model.dim();
    if let Some(&k) = flips.iter().find(|&&k| k > dim) {
        return Err(path.err(format!("coordinate {k} exceeds dimension {dim}")));
    }
    Ok(match model {
        Model::Bivariate(mut c) => {
            for k in flips {
                c = if k == 1 {
                    c.flip_first()
                } else {
                    c.flip_second()
                };
            }
            Model::Bivariate(c)
        }
        Model::Multivariate(c) => {
            let idx: Vec<usize> = flips.iter().map(|k| k - 1).collect();
            Model::Multivariate(c.flip_vars(&idx).map_err(|e| path.core(e))?)
        }
    })
}

fn base(node: &Node) -> Result<Model, SpecError> {
    let name = node.name("base")?;
    let path = &node.path;
    let dim_or = |d: usize| -> Result<usize, SpecError> {
        match node.get("dim") {
            Some(_) => node.count("dim"),
            None => Ok(d),
        }
    };
    let nfamily =
        |ctor: fn(usize) -> rmm_core::Result<NCopula>, d: usize| -> Result<Model, SpecError> {
            node.only(&["dim", "flip"])?;
            let d = dim_or(d)?;
            ctor(d)
                .map(Model::Multivariate)
                .map_err(|e| node.path.key("dim").core(e))
        };
    Ok(match name {
        "pi" | "m" if node.get("dim").is_some_and(|d| d.as_u64() != Some(2)) => nfamily(
            if name == "pi" {
                NCopula::product
            } else {
                NCopula::min
            },
            2,
        )?,
        "pi" => {
            node.only(&["dim", "flip"])?;
            Model::Bivariate(BivariateCopula::independence())
        }
        "m" => {
            node.only(&["dim", "flip"])?;
            Model::Bivariate(BivariateCopula::upper())
        }
        "w" => {
            node.only(&["flip"])?;
            Model::Bivariate(BivariateCopula::lower())
        }
        "pi3" => nfamily(NCopula::product, 3)?,
        "m3" => nfamily(NCopula::min, 3)?,
        "efgm" | "clayton" => {
            node.only(&["theta", "flip"])?;
            let theta = node.number("theta")?;
            let c = if name == "efgm" {
                BivariateCopula::efgm(theta)
            } else {
                BivariateCopula::clayton(theta)
            };
            Model::Bivariate(c.map_err(|e| path.key("theta").core(e))?)
        }
        other => {
            return Err(path
                .key("base")
                .err(format!("unknown base copula '{other}'")))
        }
    })
}

/// Generator node: `zero`, `tent`, `{power, a: x}`, `{family: quadratic, c: x}`, ...
fn generator(value: &Value, path: &Path) -> Result<Generator, SpecError> {
    let node = Node::new(value, path, "family")?;
    let family = node.name("family")?;
    match family {
        "zero" => node.only(&[]).map(|_| Generator::zero()),
        "tent" => node.only(&[]).map(|_| Generator::tent()),
        "power" => {
            node.only(&["a"])?;
            node.param("a", Generator::power(node.number("a")?))
        }
        "scaled_complement" => {
            node.only(&["c"])?;
            node.param("c", Generator::scaled_complement(node.number("c")?))
        }
        "quadratic" => {
            node.only(&["c"])?;
            node.param("c", Generator::quadratic(node.number("c")?))
        }
        "trunc_linear" => {
            node.only(&["c", "s"])?;
            let (c, s) = (node.number("c")?, node.number("s")?);
            node.param("c", Generator::trunc_linear(c, s))
        }
        "tabulated" => {
            node.only(&["knots"])?;
            let kp = path.key("knots");
            let items = node
                .require("knots")?
                .as_sequence()
                .ok_or_else(|| kp.err("expected a list"))?;
            let knots = items
                .iter()
                .enumerate()
                .map(|(i, k)| {
                    let p = kp.index(i);
                    match k.as_sequence().map(Vec::as_slice) {
                        Some([x, y]) => Ok((number(x, &p)?, number(y, &p)?)),
                        _ => Err(p.err("expected [x, y]")),
                    }
                })
                .collect::<Result<Vec<_>, _>>()?;
            node.param("knots", Generator::tabulated(&knots))
        }
        other => Err(path
            .key("family")
            .err(format!("unknown generator family '{other}'"))),
    }
}

/// Maxmin generator node of the given class: `identity`, `{power, e: x}` or
/// `{converted, of: <generator>}`.
fn mm_generator(value: &Value, path: &Path, kind: MmKind) -> Result<MMGenerator, SpecError> {
    let node = Node::new(value, path, "family")?;
    match node.name("family")? {
        "identity" => node.only(&[]).map(|_| MMGenerator::identity(kind)),
        "power" => {
            node.only(&["e"])?;
            MMGenerator::power(kind, node.number("e")?).map_err(|e| path.key("e").core(e))
        }
        "converted" => {
            node.only(&["of"])?;
            Ok(to_mm(
                &generator(node.require("of")?, &path.key("of"))?,
                kind,
            ))
        }
        other => Err(path
            .key("family")
            .err(format!("unknown maxmin generator family '{other}'"))),
    }
}

fn bivariate(value: &Value, path: &Path) -> Result<BivariateCopula, SpecError> {
    match copula(value, path)? {
        Model::Bivariate(c) => Ok(c),
        Model::Multivariate(c) => Err(path.err(format!(
            "expected a bivariate copula, got dimension {}",
            c.dim()
        ))),
    }
}

fn transform(value: &Value, path: &Path) -> Result<(Model, Vec<usize>), SpecError> {
    let node = Node::new(value, path, "transform")?;
    let kind = node.name("transform")?;
    let fl = flips(&node)?;
    let base_path = path.key("base");
    let limit_tol = || node.number_or("tol", DEFAULT_LIMIT_TOL);
    let at =
        |r: rmm_core::Result<BivariateCopula>| r.map(Model::Bivariate).map_err(|e| path.core(e));
    let model = match kind {
        "rmm" | "rmm_iter" | "rmm_limit" => {
            node.only(&["base", "f", "g", "n", "tol", "flip"])?;
            let c = bivariate(node.require("base")?, &base_path)?;
            let f = generator(node.require("f")?, &path.key("f"))?;
            let g = generator(node.require("g")?, &path.key("g"))?;
            match kind {
                "rmm" => at(rmm(&c, &f, &g))?,
                "rmm_iter" => at(rmm_iter(&c, &f, &g, node.count("n")?))?,
                _ => at(rmm_limit(&c, &f, &g, limit_tol()?))?,
            }
        }
        "mm" | "mm_iter" | "mm_limit" => {
            node.only(&["base", "phi", "psi", "n", "tol", "flip"])?;
            let c = bivariate(node.require("base")?, &base_path)?;
            let phi = mm_generator(node.require("phi")?, &path.key("phi"), MmKind::F1)?;
            let psi = mm_generator(node.require("psi")?, &path.key("psi"), MmKind::F2)?;
            match kind {
                "mm" => at(mm(&c, &phi, &psi))?,
                "mm_iter" => at(mm_iter(&c, &phi, &psi, node.count("n")?))?,
                _ => at(mm_limit(&c, &phi, &psi, limit_tol()?))?,
            }
        }
        "rmm_n" | "mm_n" | "rmm_3" => {
            node.only(&["base", "generators", "p", "dim", "flip"])?;
            let base = copula(node.require("base")?, &base_path)?.as_ncopula();
            let n = base.dim();
            if node.get("dim").is_some() {
                let d = node.count("dim")?;
                if d != n {
                    return Err(path
                        .key("dim")
                        .err(format!("dim = {d} but the base has dimension {n}")));
                }
            }
            let p = if kind == "rmm_3" { 1 } else { node.count("p")? };
            if p == 0 || p >= n {
                return Err(path
                    .key("p")
                    .err(format!("p must be ≤ n−1 and ≥ 1 (p = {p}, n = {n})")));
            }
            let gp = path.key("generators");
            let items = node
                .require("generators")?
                .as_sequence()
                .ok_or_else(|| gp.err("expected a list"))?;
            if items.len() != n {
                return Err(gp.err(format!("expected {n} generators, got {}", items.len())));
            }
            if kind == "mm_n" {
                let gens = items
                    .iter()
                    .enumerate()
                    .map(|(i, v)| {
                        mm_generator(v, &gp.index(i), if i < p { MmKind::F1 } else { MmKind::F2 })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let spec = MMNSpec::new(base, gens, p).map_err(|e| path.core(e))?;
                Model::Multivariate(mm_n(&spec).map_err(|e| path.core(e))?)
            } else {
                let gens = items
                    .iter()
                    .enumerate()
                    .map(|(i, v)| generator(v, &gp.index(i)))
                    .collect::<Result<Vec<_>, _>>()?;
                if kind == "rmm_3" {
                    if n != 3 {
                        return Err(
                            base_path.err(format!("rmm_3 needs a 3-dimensional base, got {n}"))
                        );
                    }
                    Model::Multivariate(
                        rmm_3(&base, &gens[0], &gens[1], &gens[2]).map_err(|e| path.core(e))?,
                    )
                } else {
                    let spec = MMNSpec::new(base, gens, p).map_err(|e| path.core(e))?;
                    Model::Multivariate(rmm_n(&spec))
                }
            }
        }
        other => {
            return Err(path
                .key("transform")
                .err(format!("unknown transform '{other}'")))
        }
    };
    Ok((model, fl))
}

/// Transform inputs of a bivariate RMM root without flips.
fn rmm_parts(root: &Value, path: &Path) -> Result<Option<RmmParts>, SpecError> {
    let Some(m) = root.as_mapping() else {
        return Ok(None);
    };
    let is_rmm = m
        .get("transform")
        .and_then(Value::as_str)
        .is_some_and(|t| matches!(t, "rmm" | "rmm_iter" | "rmm_limit"));
    if !is_rmm || m.contains_key("flip") {
        return Ok(None);
    }
    let node = Node::new(root, path, "transform")?;
    Ok(Some(RmmParts {
        c_dot: bivariate(node.require("base")?, &path.key("base"))?,
        f: generator(node.require("f")?, &path.key("f"))?,
        g: generator(node.require("g")?, &path.key("g"))?,
    }))
}
