//! JSON forms of data, states, decompositions, tensors, networks and circuits.
//!
//! Output is canonical: object keys sorted, floats written with 17
//! significant digits, so that parse followed by print is the identity.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{json, Map, Value};

use crate::choice::Choice;
use crate::circuit::{QuantumCircuit, QuditGate, Wiring};
use crate::data::{AnyData, BetheData, GeneralizedBetheData, Model};
use crate::decomposition::{ContiguousTerm, DecompositionTerm};
use crate::dense::DenseState;
use crate::error::{BetheError, Result};
use crate::network::{Mps, PlanarTree, TensorNetwork, TreeKind, TreeNode, Ttn};
use crate::partition::{LatticePartition, Part};
use crate::tensors::{SiteBasisTensor, SiteTensor, SparseChoiceTensor};
use crate::C64;

pub const SCHEMA_VERSION: u64 = 1;

struct CanonicalFormatter<'a>(PrettyFormatter<'a>);

impl Formatter for CanonicalFormatter<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> std::io::Result<()> {
        write!(w, "{value:.16e}")
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> std::io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> std::io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Pretty-printed canonical text.
pub fn to_canonical_string(value: &Value) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(
        &mut out,
        CanonicalFormatter(PrettyFormatter::new()),
    );
    value.serialize(&mut ser).expect("writing to memory");
    out.push(b'\n');
    String::from_utf8(out).expect("JSON is UTF-8")
}

pub fn parse_json(text: &str) -> Result<Value> {
    serde_json::from_str(text)
        .map_err(|e| BetheError::Format(format!("line {}, column {}: {e}", e.line(), e.column())))
}

fn fail<T>(path: &str, what: &str) -> Result<T> {
    Err(BetheError::Format(format!("{path}: {what}")))
}

fn field<'a>(v: &'a Value, key: &str, path: &str) -> Result<&'a Value> {
    match v.as_object() {
        Some(map) => match map.get(key) {
            Some(x) => Ok(x),
            None => fail(&format!("{path}.{key}"), "missing"),
        },
        None => fail(path, "expected an object"),
    }
}

fn as_f64(v: &Value, path: &str) -> Result<f64> {
    v.as_f64()
        .map_or_else(|| fail(path, "expected a number"), Ok)
}

fn as_usize(v: &Value, path: &str) -> Result<usize> {
    v.as_u64().map_or_else(
        || fail(path, "expected a non-negative integer"),
        |x| Ok(x as usize),
    )
}

fn as_array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>> {
    v.as_array()
        .map_or_else(|| fail(path, "expected an array"), Ok)
}

fn as_object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>> {
    v.as_object()
        .map_or_else(|| fail(path, "expected an object"), Ok)
}

fn as_usize_vec(v: &Value, path: &str) -> Result<Vec<usize>> {
    as_array(v, path)?
        .iter()
        .enumerate()
        .map(|(i, x)| as_usize(x, &format!("{path}[{i}]")))
        .collect()
}

pub fn complex_to_json(z: C64) -> Value {
    json!({"re": z.re, "im": z.im})
}

fn complex_from_json(v: &Value, path: &str) -> Result<C64> {
    Ok(C64::new(
        as_f64(field(v, "re", path)?, &format!("{path}.re"))?,
        as_f64(field(v, "im", path)?, &format!("{path}.im"))?,
    ))
}

fn entry_value(v: &Value, path: &str) -> Result<C64> {
    complex_from_json(v, path)
}

fn choice_from_bits(v: &Value, path: &str) -> Result<Choice> {
    let bits = v.as_u64().filter(|&b| b < (1 << 31));
    bits.map_or_else(
        || fail(path, "expected a choice bitmask"),
        |b| Ok(Choice::from_bits(b as u32)),
    )
}

fn choices_from_bits(v: &Value, path: &str) -> Result<Vec<Choice>> {
    as_array(v, path)?
        .iter()
        .enumerate()
        .map(|(i, x)| choice_from_bits(x, &format!("{path}[{i}]")))
        .collect()
}

fn bits(choices: &[Choice]) -> Value {
    Value::from(choices.iter().map(|c| c.bits()).collect::<Vec<_>>())
}

fn pair_key(j2: usize, j1: usize) -> String {
    format!("{j2},{j1}")
}

fn parse_pair_key(key: &str, path: &str) -> Result<(usize, usize)> {
    let parsed = key
        .split_once(',')
        .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)));
    parsed.map_or_else(
        || fail(&format!("{path}[\"{key}\"]"), "expected a \"j2,j1\" key"),
        Ok,
    )
}

pub fn data_to_json(data: &AnyData) -> Value {
    match data {
        AnyData::Bethe(d) => {
            let theta: Map<String, Value> = d
                .theta_map()
                .iter()
                .map(|(&(j2, j1), &t)| (pair_key(j2, j1), Value::from(t)))
                .collect();
            json!({"M": d.m(), "k": d.k(), "theta": theta})
        }
        AnyData::Generalized(d) => {
            let scattering: Map<String, Value> = d
                .scattering()
                .iter()
                .map(|(&(j2, j1), &t)| (pair_key(j2, j1), complex_to_json(t)))
                .collect();
            let phi: Vec<Value> = d
                .phi()
                .iter()
                .map(|row| Value::from(row.iter().map(|&z| complex_to_json(z)).collect::<Vec<_>>()))
                .collect();
            json!({"M": d.m(), "N": d.n(), "phi": phi, "scattering": scattering})
        }
    }
}

/// Generalized data is recognised by its `phi` field.
pub fn data_from_json(v: &Value, path: &str) -> Result<AnyData> {
    let m = as_usize(field(v, "M", path)?, &format!("{path}.M"))?;
    let invalid = |e: BetheError| BetheError::Format(format!("{path}: {e}"));
    if as_object(v, path)?.contains_key("phi") {
        let n = as_usize(field(v, "N", path)?, &format!("{path}.N"))?;
        let rows = as_array(field(v, "phi", path)?, &format!("{path}.phi"))?;
        let mut phi = Vec::new();
        for (j, row) in rows.iter().enumerate() {
            let p = format!("{path}.phi[{j}]");
            let cells = as_array(row, &p)?;
            phi.push(
                cells
                    .iter()
                    .enumerate()
                    .map(|(x, z)| complex_from_json(z, &format!("{p}[{x}]")))
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        if phi.len() != m {
            return fail(
                &format!("{path}.phi"),
                &format!("{} rows for M={m}", phi.len()),
            );
        }
        let obj = as_object(field(v, "scattering", path)?, &format!("{path}.scattering"))?;
        let mut scattering = BTreeMap::new();
        for (key, z) in obj {
            let pair = parse_pair_key(key, &format!("{path}.scattering"))?;
            scattering.insert(
                pair,
                complex_from_json(z, &format!("{path}.scattering[\"{key}\"]"))?,
            );
        }
        Ok(AnyData::Generalized(
            GeneralizedBetheData::new(n, phi, scattering).map_err(invalid)?,
        ))
    } else {
        let k = as_array(field(v, "k", path)?, &format!("{path}.k"))?
            .iter()
            .enumerate()
            .map(|(i, x)| as_f64(x, &format!("{path}.k[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        if k.len() != m {
            return fail(
                &format!("{path}.k"),
                &format!("{} momenta for M={m}", k.len()),
            );
        }
        let theta_obj = as_object(field(v, "theta", path)?, &format!("{path}.theta"))?;
        let mut theta = BTreeMap::new();
        for (key, t) in theta_obj {
            let pair = parse_pair_key(key, &format!("{path}.theta"))?;
            theta.insert(pair, as_f64(t, &format!("{path}.theta[\"{key}\"]"))?);
        }
        Ok(AnyData::Bethe(BetheData::new(k, theta).map_err(invalid)?))
    }
}

/// Run configuration: data, lattice size, optional partition and tree.
#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub data: AnyData,
    pub n: usize,
    pub partition: Option<Vec<usize>>,
    pub tree: Option<String>,
}

impl Config {
    pub fn partition(&self) -> Result<LatticePartition> {
        match &self.partition {
            Some(sizes) => LatticePartition::new(sizes.clone()),
            None => LatticePartition::uniform(self.n, 1),
        }
    }

    pub fn to_json(&self) -> Value {
        let mut map = Map::new();
        map.insert("schema_version".into(), SCHEMA_VERSION.into());
        map.insert("data".into(), data_to_json(&self.data));
        map.insert("N".into(), self.n.into());
        if let Some(p) = &self.partition {
            map.insert("partition".into(), Value::from(p.clone()));
        }
        if let Some(t) = &self.tree {
            map.insert("tree".into(), t.clone().into());
        }
        Value::Object(map)
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let version = field(v, "schema_version", "config")?.as_u64();
        if version != Some(SCHEMA_VERSION) {
            return fail(
                "config.schema_version",
                &format!("expected {SCHEMA_VERSION}"),
            );
        }
        let data = data_from_json(field(v, "data", "config")?, "config.data")?;
        let n = as_usize(field(v, "N", "config")?, "config.N")?;
        if let Some(l) = data.lattice() {
            if l != n {
                return fail("config.N", &format!("data is defined on N={l}"));
            }
        }
        if data.m() > n {
            return fail("config.N", &format!("M={} exceeds N={n}", data.m()));
        }
        let obj = as_object(v, "config")?;
        let partition = match obj.get("partition") {
            Some(p) => {
                let sizes = as_usize_vec(p, "config.partition")?;
                if sizes.iter().sum::<usize>() != n || sizes.contains(&0) {
                    return fail(
                        "config.partition",
                        &format!("sizes {sizes:?} do not split N={n}"),
                    );
                }
                Some(sizes)
            }
            None => None,
        };
        let tree = match obj.get("tree") {
            Some(t) => {
                let s = t
                    .as_str()
                    .map_or_else(|| fail("config.tree", "expected a string"), Ok)?;
                PlanarTree::parse(s)
                    .map_err(|e| BetheError::Format(format!("config.tree: {e}")))?;
                Some(s.to_string())
            }
            None => None,
        };
        Ok(Config {
            data,
            n,
            partition,
            tree,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_json(&parse_json(text)?)
    }
}

pub fn dense_to_json(state: &DenseState) -> Value {
    let amps: Vec<Value> = state
        .iter()
        .map(|(x, a)| json!({"x": x, "re": a.re, "im": a.im}))
        .collect();
    let mut map = Map::new();
    map.insert("N".into(), state.n().into());
    map.insert("M".into(), state.m().into());
    map.insert("amps".into(), amps.into());
    if state.part().start != 1 {
        map.insert("start".into(), state.part().start.into());
    }
    Value::Object(map)
}

pub fn dense_from_json(v: &Value) -> Result<DenseState> {
    let n = as_usize(field(v, "N", "state")?, "state.N")?;
    let m = as_usize(field(v, "M", "state")?, "state.M")?;
    let start = match as_object(v, "state")?.get("start") {
        Some(s) => as_usize(s, "state.start")?,
        None => 1,
    };
    let mut state = DenseState::zeros(Part::new(start, n), m)?;
    for (i, amp) in as_array(field(v, "amps", "state")?, "state.amps")?
        .iter()
        .enumerate()
    {
        let p = format!("state.amps[{i}]");
        let x = as_usize_vec(field(amp, "x", &p)?, &format!("{p}.x"))?;
        let z = entry_value(amp, &p)?;
        state
            .set(&x, z)
            .map_err(|e| BetheError::Format(format!("{p}.x: {e}")))?;
    }
    Ok(state)
}

fn symbols(c: Choice) -> Value {
    Value::from(c.to_vec())
}

fn choice_from_symbols(v: &Value, path: &str) -> Result<Choice> {
    let s = as_usize_vec(v, path)?;
    Choice::from_symbols(&s).map_err(|e| BetheError::Format(format!("{path}: {e}")))
}

pub fn terms_to_json(terms: &[DecompositionTerm]) -> Value {
    terms
        .iter()
        .map(|t| {
            json!({
                "choices": t.choices.iter().map(|&c| symbols(c)).collect::<Vec<_>>(),
                "coeff": complex_to_json(t.coeff),
            })
        })
        .collect()
}

/// Terms over `partition`, which supplies the part of every factor.
pub fn terms_from_json(v: &Value, partition: &LatticePartition) -> Result<Vec<DecompositionTerm>> {
    let parts = partition.parts();
    as_array(v, "terms")?
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let p = format!("terms[{i}]");
            let choices = as_array(field(t, "choices", &p)?, &format!("{p}.choices"))?
                .iter()
                .enumerate()
                .map(|(l, c)| choice_from_symbols(c, &format!("{p}.choices[{l}]")))
                .collect::<Result<Vec<_>>>()?;
            if choices.len() != parts.len() {
                return fail(
                    &format!("{p}.choices"),
                    &format!("{} choices for {} parts", choices.len(), parts.len()),
                );
            }
            Ok(DecompositionTerm {
                choices,
                coeff: complex_from_json(field(t, "coeff", &p)?, &format!("{p}.coeff"))?,
                parts: parts.clone(),
            })
        })
        .collect()
}

pub fn contiguous_terms_to_json(terms: &[ContiguousTerm]) -> Value {
    terms
        .iter()
        .map(|t| {
            let psi: Vec<Value> = t
                .psi
                .iter()
                .map(|&(l, r, z)| json!({"left": symbols(l), "right": symbols(r), "coeff": complex_to_json(z)}))
                .collect();
            json!({"choices": t.choices.iter().map(|&c| symbols(c)).collect::<Vec<_>>(), "psi": psi})
        })
        .collect()
}

pub fn tensor_to_json(t: &SparseChoiceTensor) -> Value {
    let entries: Vec<Value> = t
        .entries()
        .iter()
        .map(|(idx, z)| json!({"idx": bits(idx), "re": z.re, "im": z.im}))
        .collect();
    json!({
        "arity": t.arity(),
        "domains": t.domains().iter().map(|d| bits(d)).collect::<Vec<_>>(),
        "entries": entries,
    })
}

pub fn tensor_from_json(v: &Value, path: &str) -> Result<SparseChoiceTensor> {
    let arity = as_usize(field(v, "arity", path)?, &format!("{path}.arity"))?;
    let domains = as_array(field(v, "domains", path)?, &format!("{path}.domains"))?
        .iter()
        .enumerate()
        .map(|(i, d)| choices_from_bits(d, &format!("{path}.domains[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    if domains.len() != arity {
        return fail(
            &format!("{path}.domains"),
            &format!("{} domains for arity {arity}", domains.len()),
        );
    }
    let mut t = SparseChoiceTensor::new(domains);
    for (i, e) in as_array(field(v, "entries", path)?, &format!("{path}.entries"))?
        .iter()
        .enumerate()
    {
        let p = format!("{path}.entries[{i}]");
        let idx = choices_from_bits(field(e, "idx", &p)?, &format!("{p}.idx"))?;
        t.insert(idx, entry_value(e, &p)?)
            .map_err(|err| BetheError::Format(format!("{p}: {err}")))?;
    }
    Ok(t)
}

fn part_to_json(p: Part) -> Value {
    json!([p.start, p.len])
}

fn part_from_json(v: &Value, path: &str) -> Result<Part> {
    match as_usize_vec(v, path)?.as_slice() {
        &[start, len] if start >= 1 && len >= 1 => Ok(Part::new(start, len)),
        _ => fail(path, "expected [start, len]"),
    }
}

pub fn site_tensor_to_json(s: &SiteTensor) -> Value {
    let entries: Vec<Value> = s
        .entries()
        .iter()
        .map(|(&(l, r, sigma), z)| json!({"l": l.bits(), "r": r.bits(), "sigma": sigma, "re": z.re, "im": z.im}))
        .collect();
    json!({
        "left": bits(s.left_domain()),
        "right": bits(s.right_domain()),
        "part": part_to_json(s.part()),
        "entries": entries,
    })
}

pub fn site_tensor_from_json(v: &Value, path: &str) -> Result<SiteTensor> {
    let left = choices_from_bits(field(v, "left", path)?, &format!("{path}.left"))?;
    let right = choices_from_bits(field(v, "right", path)?, &format!("{path}.right"))?;
    let part = part_from_json(field(v, "part", path)?, &format!("{path}.part"))?;
    let mut entries = BTreeMap::new();
    for (i, e) in as_array(field(v, "entries", path)?, &format!("{path}.entries"))?
        .iter()
        .enumerate()
    {
        let p = format!("{path}.entries[{i}]");
        let l = choice_from_bits(field(e, "l", &p)?, &format!("{p}.l"))?;
        let r = choice_from_bits(field(e, "r", &p)?, &format!("{p}.r"))?;
        let sigma = field(e, "sigma", &p)?.as_u64().map_or_else(
            || fail(&format!("{p}.sigma"), "expected a bitstring integer"),
            Ok,
        )?;
        entries.insert((l, r, sigma), entry_value(e, &p)?);
    }
    SiteTensor::from_entries(left, right, part, entries)
        .map_err(|e| BetheError::Format(format!("{path}: {e}")))
}

pub fn basis_tensor_to_json(s: &SiteBasisTensor) -> Value {
    let entries: Vec<Value> = s
        .entries()
        .iter()
        .map(|(&(a, sigma), z)| json!({"a": a.bits(), "sigma": sigma, "re": z.re, "im": z.im}))
        .collect();
    json!({"domain": bits(s.domain()), "part": part_to_json(s.part()), "entries": entries})
}

pub fn basis_tensor_from_json(v: &Value, path: &str) -> Result<SiteBasisTensor> {
    let domain = choices_from_bits(field(v, "domain", path)?, &format!("{path}.domain"))?;
    let part = part_from_json(field(v, "part", path)?, &format!("{path}.part"))?;
    let mut entries = BTreeMap::new();
    for (i, e) in as_array(field(v, "entries", path)?, &format!("{path}.entries"))?
        .iter()
        .enumerate()
    {
        let p = format!("{path}.entries[{i}]");
        let a = choice_from_bits(field(e, "a", &p)?, &format!("{p}.a"))?;
        let sigma = field(e, "sigma", &p)?.as_u64().map_or_else(
            || fail(&format!("{p}.sigma"), "expected a bitstring integer"),
            Ok,
        )?;
        entries.insert((a, sigma), entry_value(e, &p)?);
    }
    SiteBasisTensor::from_entries(domain, part, entries)
        .map_err(|e| BetheError::Format(format!("{path}: {e}")))
}

pub fn network_to_json(net: &TensorNetwork) -> Value {
    let sizes: Vec<usize> = net.parts().iter().map(|p| p.len).collect();
    match net {
        TensorNetwork::Mps(mps) => json!({
            "kind": "mps",
            "M": mps.m,
            "homogeneous": mps.homogeneous,
            "parts": sizes,
            "sites": mps.sites.iter().map(|s| site_tensor_to_json(s)).collect::<Vec<_>>(),
        }),
        TensorNetwork::Tree(ttn) => {
            let nodes: Vec<Value> = ttn
                .tree
                .internal_nodes()
                .into_iter()
                .map(|id| json!({"node": id, "tensor": tensor_to_json(ttn.nodes[id].as_ref().unwrap())}))
                .collect();
            json!({
                "kind": match ttn.kind { TreeKind::Binary => "binary", TreeKind::Planar => "planar" },
                "M": ttn.m,
                "homogeneous": ttn.homogeneous,
                "parts": sizes,
                "tree": ttn.tree.to_string(),
                "nodes": nodes,
                "leaves": ttn.leaves.iter().map(|s| basis_tensor_to_json(s)).collect::<Vec<_>>(),
            })
        }
    }
}

pub fn network_from_json(v: &Value) -> Result<TensorNetwork> {
    let path = "network";
    let kind = field(v, "kind", path)?.as_str().unwrap_or_default();
    let m = as_usize(field(v, "M", path)?, "network.M")?;
    let homogeneous = field(v, "homogeneous", path)?
        .as_bool()
        .map_or_else(|| fail("network.homogeneous", "expected a boolean"), Ok)?;
    let sizes = as_usize_vec(field(v, "parts", path)?, "network.parts")?;
    let parts = LatticePartition::new(sizes)
        .map_err(|e| BetheError::Format(format!("network.parts: {e}")))?
        .parts();
    let net = match kind {
        "mps" => {
            let sites = as_array(field(v, "sites", path)?, "network.sites")?
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    site_tensor_from_json(s, &format!("network.sites[{i}]")).map(Arc::new)
                })
                .collect::<Result<Vec<_>>>()?;
            if sites.len() != parts.len() {
                return fail(
                    "network.sites",
                    &format!("{} sites for {} parts", sites.len(), parts.len()),
                );
            }
            TensorNetwork::Mps(Mps {
                m,
                parts,
                sites,
                homogeneous,
            })
        }
        "binary" | "planar" => {
            let text = field(v, "tree", path)?
                .as_str()
                .map_or_else(|| fail("network.tree", "expected a string"), Ok)?;
            let tree = PlanarTree::parse(text)
                .map_err(|e| BetheError::Format(format!("network.tree: {e}")))?;
            let mut nodes = vec![None; tree.len()];
            for (i, entry) in as_array(field(v, "nodes", path)?, "network.nodes")?
                .iter()
                .enumerate()
            {
                let p = format!("network.nodes[{i}]");
                let id = as_usize(field(entry, "node", &p)?, &format!("{p}.node"))?;
                if id >= tree.len() || !matches!(tree.node(id), TreeNode::Internal(_)) {
                    return fail(&format!("{p}.node"), "not an internal node of the tree");
                }
                nodes[id] = Some(Arc::new(tensor_from_json(
                    field(entry, "tensor", &p)?,
                    &format!("{p}.tensor"),
                )?));
            }
            if let Some(id) = tree
                .internal_nodes()
                .into_iter()
                .find(|&id| nodes[id].is_none())
            {
                return fail("network.nodes", &format!("node {id} has no tensor"));
            }
            let leaves = as_array(field(v, "leaves", path)?, "network.leaves")?
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    basis_tensor_from_json(s, &format!("network.leaves[{i}]")).map(Arc::new)
                })
                .collect::<Result<Vec<_>>>()?;
            if leaves.len() != parts.len() || tree.leaf_count() != parts.len() {
                return fail("network.leaves", "leaf count does not match parts");
            }
            TensorNetwork::Tree(Ttn {
                m,
                kind: if kind == "binary" {
                    TreeKind::Binary
                } else {
                    TreeKind::Planar
                },
                tree,
                parts,
                nodes,
                leaves,
                homogeneous,
            })
        }
        other => return fail("network.kind", &format!("unknown kind {other:?}")),
    };
    crate::network::check_edges(&net).map_err(|e| BetheError::Format(format!("network: {e}")))?;
    Ok(net)
}

fn matrix_to_json(u: &DMatrix<C64>) -> Value {
    (0..u.nrows())
        .map(|i| {
            Value::from(
                (0..u.ncols())
                    .map(|j| complex_to_json(u[(i, j)]))
                    .collect::<Vec<_>>(),
            )
        })
        .collect()
}

fn matrix_from_json(v: &Value, path: &str) -> Result<DMatrix<C64>> {
    let rows = as_array(v, path)?;
    let n = rows.len();
    let mut u = DMatrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        let cells = as_array(row, &format!("{path}[{i}]"))?;
        if cells.len() != n {
            return fail(&format!("{path}[{i}]"), "matrix is not square");
        }
        for (j, z) in cells.iter().enumerate() {
            u[(i, j)] = complex_from_json(z, &format!("{path}[{i}][{j}]"))?;
        }
    }
    Ok(u)
}

pub fn circuit_to_json(c: &QuantumCircuit) -> Value {
    let gates: Vec<Value> = c
        .gates
        .iter()
        .map(|g| json!({"layer": g.layer, "targets": g.targets, "unitary": matrix_to_json(&g.unitary)}))
        .collect();
    json!({
        "M": c.m,
        "num_qudits": c.num_qudits,
        "dim": c.dim(),
        "depth": c.depth(),
        "wiring": format!("{:?}", c.wiring).to_lowercase(),
        "gates": gates,
    })
}

pub fn circuit_from_json(v: &Value) -> Result<QuantumCircuit> {
    let m = as_usize(field(v, "M", "circuit")?, "circuit.M")?;
    let num_qudits = as_usize(field(v, "num_qudits", "circuit")?, "circuit.num_qudits")?;
    let wiring = match field(v, "wiring", "circuit")?.as_str() {
        Some("left") => Wiring::Left,
        Some("right") => Wiring::Right,
        Some("mixed") => Wiring::Mixed,
        _ => return fail("circuit.wiring", "expected left, right or mixed"),
    };
    let d = 1usize << m;
    let mut gates = Vec::new();
    for (i, g) in as_array(field(v, "gates", "circuit")?, "circuit.gates")?
        .iter()
        .enumerate()
    {
        let p = format!("circuit.gates[{i}]");
        let targets = as_usize_vec(field(g, "targets", &p)?, &format!("{p}.targets"))?;
        let unitary = matrix_from_json(field(g, "unitary", &p)?, &format!("{p}.unitary"))?;
        if targets.is_empty() || targets.len() > 2 || targets.iter().any(|&t| t >= num_qudits) {
            return fail(
                &format!("{p}.targets"),
                "expected one or two qudits in range",
            );
        }
        if unitary.nrows() != d.pow(targets.len() as u32) {
            return fail(&format!("{p}.unitary"), "size does not match the targets");
        }
        gates.push(QuditGate {
            layer: as_usize(field(g, "layer", &p)?, &format!("{p}.layer"))?,
            targets,
            unitary,
        });
    }
    Ok(QuantumCircuit {
        m,
        num_qudits,
        wiring,
        gates,
    })
}

/// Overlap report with normalized fidelity.
pub fn overlap_to_json(
    overlap: C64,
    norm_bra: f64,
    norm_ket: f64,
    method: &str,
    seconds: f64,
) -> Value {
    json!({
        "re": overlap.re,
        "im": overlap.im,
        "norm_bra": norm_bra,
        "norm_ket": norm_ket,
        "fidelity": crate::overlap::fidelity(overlap, norm_bra, norm_ket),
        "method": method,
        "seconds": seconds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choice::all_choices;
    use crate::circuit::compile_circuit;
    use crate::decomposition::multipartite_decompose;
    use crate::dense::build_dense;
    use crate::network::{build_binary_ttn, build_mps, build_planar_ttn, contract_to_dense};
    use crate::tensors::build_t;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn round_trip(v: &Value) -> Value {
        let text = to_canonical_string(v);
        let back = parse_json(&text).unwrap();
        assert_eq!(to_canonical_string(&back), text);
        back
    }

    #[test]
    fn floats_keep_every_bit() {
        let xs = [0.1, 1.0 / 3.0, -2.5e-300, std::f64::consts::TAU, 0.0, 1e300];
        let v = Value::from(xs.to_vec());
        let back = round_trip(&v);
        let ys: Vec<f64> = back
            .as_array()
            .unwrap()
            .iter()
            .map(|x| x.as_f64().unwrap())
            .collect();
        assert_eq!(ys, xs);
        assert!(
            to_canonical_string(&json!({"b": 1, "a": 2})).find("\"a\"")
                < to_canonical_string(&json!({"b": 1, "a": 2})).find("\"b\"")
        );
    }

    #[test]
    fn data_and_config() {
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let cfg = Config {
            data: AnyData::Bethe(BetheData::random(3, &mut rng)),
            n: 8,
            partition: Some(vec![2, 2, 4]),
            tree: Some("(1,(2,3))".into()),
        };
        let back = Config::from_json(&round_trip(&cfg.to_json())).unwrap();
        assert_eq!(back, cfg);
        let g = Config {
            data: AnyData::Generalized(GeneralizedBetheData::random(2, 5, &mut rng)),
            n: 5,
            partition: None,
            tree: None,
        };
        assert_eq!(Config::from_json(&round_trip(&g.to_json())).unwrap(), g);
    }

    #[test]
    fn schema_errors_name_the_field() {
        let text = r#"{"schema_version": 1, "N": 4, "data": {"M": 2, "k": [0.1, 0.2], "theta": {"2,1": "x"}}}"#;
        let err = Config::parse(text).unwrap_err().to_string();
        assert!(err.contains("config.data.theta[\"2,1\"]"), "{err}");
        let err = Config::parse("{\n  \"N\": 4,\n  oops\n}")
            .unwrap_err()
            .to_string();
        assert!(err.contains("line 3"), "{err}");
        let err = Config::parse(r#"{"schema_version": 2}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("schema_version"));
        let err = Config::parse(r#"{"schema_version": 1, "N": 4, "data": {"M": 1, "k": [0.1], "theta": {}}, "partition": [1, 2]}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("config.partition"));
    }

    #[test]
    fn dense_and_terms() {
        let mut rng = ChaCha8Rng::seed_from_u64(72);
        let d = BetheData::random(2, &mut rng);
        let s = build_dense(&d, 6).unwrap();
        assert_eq!(dense_from_json(&round_trip(&dense_to_json(&s))).unwrap(), s);
        let p = LatticePartition::new(vec![2, 1, 3]).unwrap();
        let terms = multipartite_decompose(&d, &p).unwrap();
        assert_eq!(
            terms_from_json(&round_trip(&terms_to_json(&terms)), &p).unwrap(),
            terms
        );
    }

    #[test]
    fn tensors_and_networks() {
        let mut rng = ChaCha8Rng::seed_from_u64(73);
        let d = BetheData::random(2, &mut rng);
        let all = all_choices(2);
        let t = build_t(&d, &all, &all, &all);
        assert_eq!(
            tensor_from_json(&round_trip(&tensor_to_json(&t)), "t").unwrap(),
            t
        );
        let p = LatticePartition::new(vec![1, 2, 1, 2]).unwrap();
        for net in [
            build_mps(&d, &p, false).unwrap(),
            build_binary_ttn(&d, &p, false).unwrap(),
            build_binary_ttn(&d, &LatticePartition::uniform(8, 2).unwrap(), true).unwrap(),
            build_planar_ttn(&d, &p, &PlanarTree::parse("((1,2),3,4)").unwrap()).unwrap(),
        ] {
            let back = network_from_json(&round_trip(&network_to_json(&net))).unwrap();
            assert_eq!(back, net);
            assert_eq!(
                contract_to_dense(&back).unwrap(),
                contract_to_dense(&net).unwrap()
            );
        }
    }

    #[test]
    fn circuits() {
        let mut rng = ChaCha8Rng::seed_from_u64(74);
        let c = compile_circuit(&BetheData::random(1, &mut rng), 4, Wiring::Mixed).unwrap();
        assert_eq!(
            circuit_from_json(&round_trip(&circuit_to_json(&c))).unwrap(),
            c
        );
    }
}
