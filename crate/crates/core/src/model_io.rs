//! File-format ingestion: weighted spaces with named maps (JSON), finite
//! and location statistical models (JSON), action rules (JSON), feature
//! basis specs (JSON), and sample tables (CSV).
//!
//! Every parse failure names the offending field, so a one-line diagnostic
//! is always available to surface verbatim.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde_json::Value as Json;

use crate::condexp::{Feature, FeatureBasis};
use crate::error::Error;
use crate::fiducial::{Focus, LocationModel, Noise};
use crate::measure::{FiniteSpace, RandomMap, SigmaFiniteWitness};
use crate::numeric::{rat_from_f64, ExtReal, Rat, Value};
use crate::risk::{Action, FiniteModel, StatisticalModel};
use crate::Result;

fn field_err(field: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::InvalidField { field: field.into(), reason: reason.into() }
}

fn parse_document(text: &str) -> Result<Json> {
    serde_json::from_str(text).map_err(|e| field_err("document", e.to_string()))
}

fn as_object<'a>(v: &'a Json, field: &str) -> Result<&'a serde_json::Map<String, Json>> {
    v.as_object().ok_or_else(|| field_err(field, "expected a JSON object"))
}

fn as_array<'a>(v: &'a Json, field: &str) -> Result<&'a Vec<Json>> {
    v.as_array().ok_or_else(|| field_err(field, "expected a JSON array"))
}

fn as_str<'a>(v: &'a Json, field: &str) -> Result<&'a str> {
    v.as_str().ok_or_else(|| field_err(field, "expected a JSON string"))
}

fn get<'a>(map: &'a serde_json::Map<String, Json>, field: &str) -> Result<&'a Json> {
    map.get(field).ok_or_else(|| field_err(field, "required field is missing"))
}

fn reject_unknown(map: &serde_json::Map<String, Json>, allowed: &[&str]) -> Result<()> {
    for key in map.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(field_err(key.clone(), "unknown field"));
        }
    }
    Ok(())
}

/// Parse a weight entry: a JSON number (embedded exactly), a `"p/q"` string,
/// or `"inf"`.
fn ext_from_json(v: &Json, field: &str) -> Result<ExtReal> {
    match v {
        Json::Number(n) => {
            if let Some(i) = n.as_i64() {
                return Ok(ExtReal::Finite(Rat::from_integer(i.into())));
            }
            if let Some(u) = n.as_u64() {
                return Ok(ExtReal::Finite(Rat::from_integer(u.into())));
            }
            let f = n.as_f64().ok_or_else(|| field_err(field, format!("bad number {n}")))?;
            rat_from_f64(f)
                .map(ExtReal::Finite)
                .ok_or_else(|| field_err(field, format!("non-finite number {f}")))
        }
        Json::String(s) => {
            ExtReal::parse(s).ok_or_else(|| field_err(field, format!("cannot parse '{s}' as a weight")))
        }
        other => Err(field_err(field, format!("expected number or string, got {other}"))),
    }
}

/// Parse a finite rational entry: JSON number or `"p/q"` string.
fn rat_from_json(v: &Json, field: &str) -> Result<Rat> {
    match ext_from_json(v, field)? {
        ExtReal::Finite(r) => Ok(r),
        ExtReal::Infinite => Err(field_err(field, "must be finite")),
    }
}

fn value_from_json(v: &Json, field: &str) -> Result<Value> {
    Value::from_json(v).map_err(|e| match e {
        Error::InvalidField { reason, .. } => field_err(field, reason),
        other => other,
    })
}

/// A parsed space file: the weighted space, its named maps, and the optional
/// σ-finiteness witness pieces.
#[derive(Debug, Clone)]
pub struct SpaceFile {
    pub space: Arc<FiniteSpace>,
    pub maps: BTreeMap<String, RandomMap>,
    pub witness: Option<SigmaFiniteWitness>,
}

impl SpaceFile {
    /// Look up a named map, diagnosing the missing name.
    pub fn map(&self, name: &str) -> Result<&RandomMap> {
        self.maps.get(name).ok_or_else(|| {
            let known: Vec<&str> = self.maps.keys().map(String::as_str).collect();
            field_err(
                format!("maps.{name}"),
                format!("no such map; file defines [{}]", known.join(", ")),
            )
        })
    }
}

/// Parse a space file:
/// `{ "atoms": [...], "weights": [...], "maps": { name: [values] }, "pieces": [[...]] }`.
///
/// Weights are numbers, `"p/q"` strings, or `"inf"`; map values are scalars
/// (numeric text canonicalizes to numbers); `maps` and `pieces` are optional.
pub fn parse_space_json(text: &str) -> Result<SpaceFile> {
    let doc = parse_document(text)?;
    let top = as_object(&doc, "document")?;
    reject_unknown(top, &["schema", "atoms", "weights", "maps", "pieces"])?;

    let atoms_json = as_array(get(top, "atoms")?, "atoms")?;
    let mut atoms = Vec::with_capacity(atoms_json.len());
    for (i, a) in atoms_json.iter().enumerate() {
        atoms.push(as_str(a, &format!("atoms[{i}]"))?.to_string());
    }

    let weights_json = as_array(get(top, "weights")?, "weights")?;
    if weights_json.len() != atoms.len() {
        return Err(field_err(
            "weights",
            format!("{} entries for {} atoms", weights_json.len(), atoms.len()),
        ));
    }
    let mut weights = Vec::with_capacity(weights_json.len());
    for (i, w) in weights_json.iter().enumerate() {
        weights.push(ext_from_json(w, &format!("weights[{i}]"))?);
    }

    let space = FiniteSpace::new(atoms, weights)?;

    let mut maps = BTreeMap::new();
    if let Some(maps_json) = top.get("maps") {
        for (name, values_json) in as_object(maps_json, "maps")? {
            let field = format!("maps.{name}");
            let arr = as_array(values_json, &field)?;
            if arr.len() != space.len() {
                return Err(field_err(
                    field,
                    format!("{} values for {} atoms", arr.len(), space.len()),
                ));
            }
            let mut values = Vec::with_capacity(arr.len());
            for (i, v) in arr.iter().enumerate() {
                values.push(value_from_json(v, &format!("{field}[{i}]"))?);
            }
            maps.insert(name.clone(), RandomMap::from_values(space.clone(), name, values)?);
        }
    }

    let witness = match top.get("pieces") {
        None => None,
        Some(pieces_json) => {
            let outer = as_array(pieces_json, "pieces")?;
            let mut pieces: Vec<Vec<&str>> = Vec::with_capacity(outer.len());
            for (k, piece_json) in outer.iter().enumerate() {
                let field = format!("pieces[{k}]");
                let inner = as_array(piece_json, &field)?;
                let mut piece = Vec::with_capacity(inner.len());
                for (i, name) in inner.iter().enumerate() {
                    piece.push(as_str(name, &format!("{field}[{i}]"))?);
                }
                pieces.push(piece);
            }
            Some(SigmaFiniteWitness::from_atom_names(&space, &pieces)?)
        }
    };

    Ok(SpaceFile { space, maps, witness })
}

/// Parse a statistical model file, dispatching on its fields: a `thetas`
/// table is a finite model, a `noise` name is a location model.
pub fn parse_model_json(text: &str) -> Result<StatisticalModel> {
    let doc = parse_document(text)?;
    let top = as_object(&doc, "document")?;
    if top.contains_key("thetas") {
        parse_finite_model(top).map(StatisticalModel::Finite)
    } else if top.contains_key("noise") {
        let (model, psi) = parse_location_model(top)?;
        Ok(StatisticalModel::Location { model, psi })
    } else {
        Err(field_err("document", "expected either 'thetas' (finite model) or 'noise' (location model)"))
    }
}

fn parse_finite_model(top: &serde_json::Map<String, Json>) -> Result<FiniteModel> {
    reject_unknown(top, &["schema", "thetas", "prior", "ys", "likelihood", "focus"])?;

    let values_list = |field: &str| -> Result<Vec<Value>> {
        let arr = as_array(get(top, field)?, field)?;
        arr.iter()
            .enumerate()
            .map(|(i, v)| value_from_json(v, &format!("{field}[{i}]")))
            .collect()
    };
    let rat_list = |field: &str| -> Result<Vec<Rat>> {
        let arr = as_array(get(top, field)?, field)?;
        arr.iter()
            .enumerate()
            .map(|(i, v)| rat_from_json(v, &format!("{field}[{i}]")))
            .collect()
    };

    let thetas = values_list("thetas")?;
    let prior = rat_list("prior")?;
    let ys = values_list("ys")?;
    let focus = rat_list("focus")?;

    let rows = as_array(get(top, "likelihood")?, "likelihood")?;
    let mut likelihood = Vec::with_capacity(rows.len());
    for (i, row_json) in rows.iter().enumerate() {
        let field = format!("likelihood[{i}]");
        let row = as_array(row_json, &field)?;
        let mut parsed = Vec::with_capacity(row.len());
        for (j, p) in row.iter().enumerate() {
            parsed.push(rat_from_json(p, &format!("{field}[{j}]"))?);
        }
        likelihood.push(parsed);
    }

    FiniteModel::new(thetas, prior, ys, likelihood, focus)
}

fn parse_location_model(top: &serde_json::Map<String, Json>) -> Result<(LocationModel, Focus)> {
    reject_unknown(top, &["schema", "noise", "psi"])?;
    let noise = match as_str(get(top, "noise")?, "noise")? {
        "normal" => Noise::Normal,
        "uniform" => Noise::Uniform,
        "laplace" => Noise::Laplace,
        "degenerate" => Noise::Degenerate,
        other => {
            return Err(field_err(
                "noise",
                format!("unknown family '{other}'; expected normal|uniform|laplace|degenerate"),
            ))
        }
    };
    let psi = match top.get("psi") {
        None => Focus::Identity,
        Some(v) => parse_focus(v, "psi")?,
    };
    Ok((LocationModel::new(noise, psi.clone()), psi))
}

/// Parse a focus spec: `"identity"`, `"square"`, or a number (constant).
pub fn parse_focus(v: &Json, field: &str) -> Result<Focus> {
    match v {
        Json::String(s) => match s.as_str() {
            "identity" => Ok(Focus::Identity),
            "square" => Ok(Focus::Square),
            other => Err(field_err(field, format!("unknown focus '{other}'; expected identity|square or a number"))),
        },
        Json::Number(n) => {
            let c = n.as_f64().ok_or_else(|| field_err(field, format!("bad number {n}")))?;
            Ok(Focus::Constant(c))
        }
        other => Err(field_err(field, format!("expected string or number, got {other}"))),
    }
}

/// Parse an action rule: `{ "actions": [[y, a], ...] }` with scalar y and
/// rational a.
pub fn parse_action_json(text: &str) -> Result<Action> {
    let doc = parse_document(text)?;
    let top = as_object(&doc, "document")?;
    reject_unknown(top, &["schema", "actions"])?;
    let pairs = as_array(get(top, "actions")?, "actions")?;
    let mut values = BTreeMap::new();
    for (i, pair_json) in pairs.iter().enumerate() {
        let field = format!("actions[{i}]");
        let pair = as_array(pair_json, &field)?;
        if pair.len() != 2 {
            return Err(field_err(field, "expected a [y, action] pair"));
        }
        let y = value_from_json(&pair[0], &format!("{field}[0]"))?;
        let a = rat_from_json(&pair[1], &format!("{field}[1]"))?;
        if values.insert(y.clone(), a).is_some() {
            return Err(field_err(field, format!("duplicate data value '{y}'")));
        }
    }
    Ok(Action::new(values))
}

/// A declarative feature-basis spec for fitted projections over real samples.
#[derive(Debug, Clone, PartialEq)]
pub enum BasisSpec {
    /// Monomials 1, y, …, y^degree.
    Polynomial { degree: u32 },
    /// One indicator per listed value, matched by exact equality.
    Indicators { values: Vec<f64> },
}

impl BasisSpec {
    pub fn to_basis(&self) -> FeatureBasis<f64> {
        match self {
            BasisSpec::Polynomial { degree } => FeatureBasis::polynomial(*degree),
            BasisSpec::Indicators { values } => {
                let features = values
                    .iter()
                    .map(|&v| Feature::new(format!("1[y={v}]"), move |y: &f64| f64::from(*y == v)))
                    .collect();
                FeatureBasis::new(features)
            }
        }
    }
}

/// Parse a basis spec: `{ "kind": "polynomial", "degree": d }` or
/// `{ "kind": "indicators", "values": [...] }`.
pub fn parse_basis_json(text: &str) -> Result<BasisSpec> {
    let doc = parse_document(text)?;
    let top = as_object(&doc, "document")?;
    match as_str(get(top, "kind")?, "kind")? {
        "polynomial" => {
            reject_unknown(top, &["schema", "kind", "degree"])?;
            let degree = get(top, "degree")?
                .as_u64()
                .ok_or_else(|| field_err("degree", "expected a nonnegative integer"))?;
            let degree = u32::try_from(degree)
                .map_err(|_| field_err("degree", "degree is too large"))?;
            Ok(BasisSpec::Polynomial { degree })
        }
        "indicators" => {
            reject_unknown(top, &["schema", "kind", "values"])?;
            let arr = as_array(get(top, "values")?, "values")?;
            let mut values = Vec::with_capacity(arr.len());
            for (i, v) in arr.iter().enumerate() {
                let f = v
                    .as_f64()
                    .ok_or_else(|| field_err(format!("values[{i}]"), "expected a number"))?;
                values.push(f);
            }
            Ok(BasisSpec::Indicators { values })
        }
        other => Err(field_err("kind", format!("unknown basis kind '{other}'"))),
    }
}

/// Parse a two-column sample table: header `y,gamma`, one pair per line.
pub fn parse_samples_csv(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| field_err("samples", "empty file"))?;
    if header.trim() != "y,gamma" {
        return Err(field_err(
            "samples:1",
            format!("expected header 'y,gamma', got '{}'", header.trim()),
        ));
    }
    let mut samples = Vec::new();
    for (idx, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let field = format!("samples:{}", idx + 1);
        let (y_text, g_text) = line
            .split_once(',')
            .ok_or_else(|| field_err(&field, "expected two comma-separated numbers"))?;
        let y: f64 = y_text
            .trim()
            .parse()
            .map_err(|_| field_err(&field, format!("cannot parse y '{}'", y_text.trim())))?;
        let g: f64 = g_text
            .trim()
            .parse()
            .map_err(|_| field_err(&field, format!("cannot parse gamma '{}'", g_text.trim())))?;
        if !y.is_finite() || !g.is_finite() {
            return Err(field_err(&field, "samples must be finite"));
        }
        samples.push((y, g));
    }
    Ok(samples)
}
