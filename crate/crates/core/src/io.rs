//! JSON instance and decomposition files, and seeded instance generators.
//!
//! Colours are 1-based in files. Keys are written in a fixed order so equal
//! values serialize to identical bytes.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matroid::{Backend, ElementId, Matroid, UnionFind};
use crate::rainbow::{Colour, Coloured, Instance, Ris};
use crate::solver::{Decomposition, SolverConfig};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum MatroidDef {
    Uniform {
        elements: usize,
        rank: usize,
    },
    Graphic {
        vertices: usize,
        edges: Vec<[usize; 2]>,
    },
    Linear {
        p: u64,
        cols: Vec<Vec<u64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metadata {
    pub generator: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub matroid: MatroidDef,
    pub bases: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<Metadata>,
}

impl InstanceFile {
    pub fn from_instance(inst: &Instance, metadata: Option<Metadata>) -> Self {
        let m = inst.matroid();
        let matroid = match m.backend() {
            Backend::Uniform { rank } => MatroidDef::Uniform {
                elements: m.ground_size(),
                rank: *rank,
            },
            Backend::Graphic { vertices, edges } => MatroidDef::Graphic {
                vertices: *vertices,
                edges: edges.iter().map(|&(u, w)| [u, w]).collect(),
            },
            Backend::Linear { field, cols } => MatroidDef::Linear {
                p: field.modulus(),
                cols: cols.clone(),
            },
        };
        Self {
            matroid,
            bases: inst
                .bases()
                .iter()
                .map(|b| b.iter().map(|e| e.0).collect())
                .collect(),
            metadata,
        }
    }

    pub fn to_instance(&self) -> Result<Instance> {
        let m = match &self.matroid {
            MatroidDef::Uniform { elements, rank } => Matroid::uniform(*elements, *rank),
            MatroidDef::Graphic { vertices, edges } => {
                Matroid::graphic(*vertices, edges.iter().map(|e| (e[0], e[1])).collect())
            }
            MatroidDef::Linear { p, cols } => Matroid::linear(*p, cols.clone()),
        }
        .map_err(|e| Error::InvalidInput(format!("matroid: {}", strip(&e))))?;
        let bases = self
            .bases
            .iter()
            .map(|b| b.iter().map(|&x| ElementId(x)).collect())
            .collect();
        Instance::new(m, bases)
    }
}

fn strip(e: &Error) -> String {
    match e {
        Error::InvalidInput(s) | Error::Contract(s) => s.clone(),
        other => other.to_string(),
    }
}

fn json_error(e: serde_json::Error) -> Error {
    Error::InvalidInput(format!("malformed JSON: {e}"))
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    let file: InstanceFile = serde_json::from_str(text).map_err(json_error)?;
    file.to_instance()
}

pub fn serialize_instance(inst: &Instance, metadata: Option<Metadata>) -> String {
    let file = InstanceFile::from_instance(inst, metadata);
    serde_json::to_string_pretty(&file).expect("instance files serialize") + "\n"
}

/// A coloured element as `[element, colour]`, colour 1-based.
pub type PairJson = [usize; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecompositionFile {
    pub k: usize,
    pub volume: usize,
    pub complete: Vec<Vec<PairJson>>,
    pub partial: Vec<Vec<PairJson>>,
    pub rounds: usize,
    pub config: SolverConfig,
    pub instance: InstanceFile,
}

fn pairs(s: &Ris) -> Vec<PairJson> {
    s.iter()
        .map(|e| [e.element.0, e.colour.one_based()])
        .collect()
}

fn ris_from_pairs(n: usize, list: &[PairJson], path: &str) -> Result<Ris> {
    let mut members = Vec::with_capacity(list.len());
    for (j, &[x, c]) in list.iter().enumerate() {
        if c == 0 || c > n {
            return Err(Error::InvalidInput(format!(
                "{path}[{j}]: colour {c} outside 1..={n}"
            )));
        }
        members.push(Coloured::new(ElementId(x), Colour::from_one_based(c)));
    }
    Ris::from_members(n, &members)
        .map_err(|e| Error::InvalidInput(format!("{path}: {}", strip(&e))))
}

impl DecompositionFile {
    pub fn new(inst: &Instance, dec: &Decomposition, cfg: &SolverConfig) -> Self {
        Self {
            k: dec.k,
            volume: dec.volume,
            complete: dec.complete.iter().map(pairs).collect(),
            partial: dec.partial.iter().map(pairs).collect(),
            rounds: dec.rounds,
            config: cfg.clone(),
            instance: InstanceFile::from_instance(inst, None),
        }
    }

    pub fn to_decomposition(&self) -> Result<(Instance, Decomposition)> {
        let inst = self.instance.to_instance()?;
        let n = inst.n();
        let complete = self
            .complete
            .iter()
            .enumerate()
            .map(|(i, l)| ris_from_pairs(n, l, &format!("complete[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        let partial = self
            .partial
            .iter()
            .enumerate()
            .map(|(i, l)| ris_from_pairs(n, l, &format!("partial[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        let dec = Decomposition {
            k: self.k,
            complete,
            partial,
            volume: self.volume,
            rounds: self.rounds,
            trace: Vec::new(),
        };
        Ok((inst, dec))
    }
}

pub fn serialize_decomposition(inst: &Instance, dec: &Decomposition, cfg: &SolverConfig) -> String {
    let file = DecompositionFile::new(inst, dec, cfg);
    serde_json::to_string_pretty(&file).expect("decomposition files serialize") + "\n"
}

pub fn parse_decomposition(text: &str) -> Result<(Instance, Decomposition)> {
    let file: DecompositionFile = serde_json::from_str(text).map_err(json_error)?;
    file.to_decomposition()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenKind {
    /// The free matroid on `n` elements with every class equal to the ground set.
    UniformIdentical,
    /// Classes drawn from a shared pool of random vectors over GF(p).
    LinearRandom { p: u64 },
    /// Random spanning trees of a random connected multigraph on `n + 1` vertices.
    GraphicRandom,
}

impl fmt::Display for GenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GenKind::UniformIdentical => f.write_str("uniform-identical"),
            GenKind::LinearRandom { p } => write!(f, "linear-random({p})"),
            GenKind::GraphicRandom => f.write_str("graphic-random"),
        }
    }
}

impl FromStr for GenKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform-identical" => Ok(GenKind::UniformIdentical),
            "graphic-random" => Ok(GenKind::GraphicRandom),
            "linear-random" => Ok(GenKind::LinearRandom { p: 5 }),
            other => {
                let p = other
                    .strip_prefix("linear-random(")
                    .and_then(|r| r.strip_suffix(')'))
                    .and_then(|p| p.parse().ok())
                    .ok_or_else(|| Error::InvalidInput(format!("unknown generator {other:?}")))?;
                Ok(GenKind::LinearRandom { p })
            }
        }
    }
}

/// Attempts before a random generator gives up.
pub const GENERATOR_RETRIES: usize = 100;

pub fn generate_instance(kind: GenKind, n: usize, seed: u64) -> Result<Instance> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        GenKind::UniformIdentical => {
            let m = Matroid::uniform(n, n)?;
            let all: Vec<ElementId> = (0..n).map(ElementId).collect();
            Instance::new(m, vec![all; n])
        }
        GenKind::LinearRandom { p } => {
            for _ in 0..GENERATOR_RETRIES {
                let cols: Vec<Vec<u64>> = (0..2 * n)
                    .map(|_| (0..n).map(|_| rng.gen_range(0..p)).collect())
                    .collect();
                let m = Matroid::linear(p, cols)?;
                if m.rank() < n {
                    continue;
                }
                let bases = (0..n)
                    .map(|_| random_basis(&m, &mut rng))
                    .collect::<Result<Vec<_>>>()?;
                return Instance::new(m, bases);
            }
            Err(Error::InvalidInput(format!(
                "no full-rank vector pool over GF({p}) after {GENERATOR_RETRIES} attempts"
            )))
        }
        GenKind::GraphicRandom => {
            for _ in 0..GENERATOR_RETRIES {
                let edges: Vec<(usize, usize)> = (0..3 * n)
                    .map(|_| {
                        let u = rng.gen_range(0..=n);
                        let mut w = rng.gen_range(0..n);
                        if w >= u {
                            w += 1;
                        }
                        (u, w)
                    })
                    .collect();
                let mut uf = UnionFind::new(n + 1);
                let joined = edges.iter().filter(|&&(u, w)| uf.union(u, w)).count();
                if joined < n {
                    continue;
                }
                let m = Matroid::graphic(n + 1, edges)?;
                let bases = (0..n)
                    .map(|_| random_basis(&m, &mut rng))
                    .collect::<Result<Vec<_>>>()?;
                return Instance::new(m, bases);
            }
            Err(Error::InvalidInput(format!(
                "no connected random multigraph after {GENERATOR_RETRIES} attempts"
            )))
        }
    }
}

// Greedy extraction over a random ordering of the ground set.
pub(crate) fn random_basis<R: Rng + ?Sized>(m: &Matroid, rng: &mut R) -> Result<Vec<ElementId>> {
    let mut order: Vec<ElementId> = m.elements().collect();
    order.shuffle(rng);
    let mut basis = Vec::new();
    for x in order {
        basis.push(x);
        if !m.is_independent(&basis)? {
            basis.pop();
        }
    }
    basis.sort();
    Ok(basis)
}
