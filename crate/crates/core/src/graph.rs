//! Annotator graph and reliability scores.
//!
//! Nodes are annotators, edges are double-annotation projects weighted by the
//! pair's agreement. An annotator's reliability mixes intra agreement (with
//! their own re-annotations) and inter agreement (mean over incident edges):
//!
//! ```text
//! r_i = lambda * intra_i + (1 - lambda) * e_i
//! e_i = 1/|links(i)| * sum_j R_j * a(i, j)     (R_j = 1 when unweighted)
//! ```
//!
//! Scores are divided by their mean so they average to one.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::agreement::pairwise_agreement;
use crate::error::{Error, Result};
use crate::model::AnnotationStore;

#[derive(Debug, Clone, PartialEq)]
pub struct NodeInfo {
    /// Agreement with the annotator's own re-annotations, if any exist.
    pub intra_agreement: Option<f64>,
    pub reannotated_count: usize,
    pub reliability: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeInfo {
    pub agreement: f64,
    pub sample_count: usize,
}

/// Undirected annotator graph. Edge keys are stored with the smaller id first.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AnnotatorGraph {
    nodes: BTreeMap<String, NodeInfo>,
    edges: BTreeMap<(String, String), EdgeInfo>,
}

fn edge_key(x: &str, y: &str) -> (String, String) {
    if x <= y {
        (x.to_string(), y.to_string())
    } else {
        (y.to_string(), x.to_string())
    }
}

impl AnnotatorGraph {
    /// Assembles a graph from precomputed values, e.g. for fixtures.
    /// Reliabilities start at 1.0.
    pub fn from_parts<N, E>(nodes: N, edges: E) -> Result<Self>
    where
        N: IntoIterator<Item = (String, Option<f64>)>,
        E: IntoIterator<Item = (String, String, EdgeInfo)>,
    {
        let mut graph = Self::default();
        for (id, intra) in nodes {
            graph.nodes.insert(
                id,
                NodeInfo {
                    intra_agreement: intra,
                    reannotated_count: 0,
                    reliability: 1.0,
                },
            );
        }
        for (x, y, edge) in edges {
            for id in [&x, &y] {
                if !graph.nodes.contains_key(id) {
                    return Err(Error::UnknownAnnotator(id.clone()));
                }
            }
            graph.edges.insert(edge_key(&x, &y), edge);
        }
        graph.check_connected_nodes()?;
        Ok(graph)
    }

    fn check_connected_nodes(&self) -> Result<()> {
        if self.nodes.len() < 2 {
            return Err(Error::TooFewAnnotators {
                required: 2,
                actual: self.nodes.len(),
            });
        }
        for id in self.nodes.keys() {
            if self.degree(id) == 0 {
                return Err(Error::IsolatedAnnotator(id.clone()));
            }
        }
        Ok(())
    }

    pub fn nodes(&self) -> &BTreeMap<String, NodeInfo> {
        &self.nodes
    }

    pub fn edges(&self) -> &BTreeMap<(String, String), EdgeInfo> {
        &self.edges
    }

    pub fn node(&self, id: &str) -> Option<&NodeInfo> {
        self.nodes.get(id)
    }

    pub fn edge(&self, x: &str, y: &str) -> Option<&EdgeInfo> {
        self.edges.get(&edge_key(x, y))
    }

    /// Neighbours of `id` with the connecting edge.
    pub fn neighbors<'a>(&'a self, id: &'a str) -> impl Iterator<Item = (&'a str, &'a EdgeInfo)> + 'a {
        self.edges.iter().filter_map(move |((x, y), e)| {
            if x == id {
                Some((y.as_str(), e))
            } else if y == id {
                Some((x.as_str(), e))
            } else {
                None
            }
        })
    }

    pub fn degree(&self, id: &str) -> usize {
        self.neighbors(id).count()
    }

    pub fn reliabilities(&self) -> BTreeMap<String, f64> {
        self.nodes.iter().map(|(id, n)| (id.clone(), n.reliability)).collect()
    }
}

/// One edge per pair of annotators sharing at least one first-phase sample,
/// intra agreement wherever re-annotations exist.
pub fn build_graph(store: &AnnotationStore) -> Result<AnnotatorGraph> {
    let mut shared: BTreeMap<(String, String), usize> = BTreeMap::new();
    for sample in store.sample_ids() {
        let first = store.first_phase(sample);
        for (i, a) in first.iter().enumerate() {
            for b in &first[i + 1..] {
                *shared.entry(edge_key(&a.annotator_id, &b.annotator_id)).or_default() += 1;
            }
        }
    }

    let mut graph = AnnotatorGraph::default();
    for id in store.annotators() {
        let reannotated_count = store.reannotated_pairs(id).len();
        let intra_agreement = if reannotated_count > 0 {
            Some(pairwise_agreement(store, id, id)?)
        } else {
            None
        };
        graph.nodes.insert(
            id.to_string(),
            NodeInfo {
                intra_agreement,
                reannotated_count,
                reliability: 1.0,
            },
        );
    }
    for ((x, y), sample_count) in shared {
        let agreement = pairwise_agreement(store, &x, &y)?;
        graph.edges.insert(
            (x, y),
            EdgeInfo {
                agreement,
                sample_count,
            },
        );
    }
    graph.check_connected_nodes()?;
    Ok(graph)
}

/// Mean agreement over the edges incident to `annotator`, optionally scaled
/// by each neighbour's current reliability.
pub fn inter_agreement(graph: &AnnotatorGraph, annotator: &str, weighted: bool) -> Result<f64> {
    if !graph.nodes.contains_key(annotator) {
        return Err(Error::UnknownAnnotator(annotator.to_string()));
    }
    let mut sum = 0.0;
    let mut links = 0usize;
    for (other, edge) in graph.neighbors(annotator) {
        let weight = if weighted { graph.nodes[other].reliability } else { 1.0 };
        sum += weight * edge.agreement;
        links += 1;
    }
    if links == 0 {
        return Err(Error::IsolatedAnnotator(annotator.to_string()));
    }
    Ok(sum / links as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReliabilityMode {
    SinglePass,
    Iterative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityConfig {
    /// Weight on intra agreement, in `[0, 1]`.
    pub lambda: f64,
    pub mode: ReliabilityMode,
    pub use_weighted_inter: bool,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for ReliabilityConfig {
    fn default() -> Self {
        Self {
            lambda: 0.5,
            mode: ReliabilityMode::SinglePass,
            use_weighted_inter: false,
            tolerance: 1e-6,
            max_iterations: 100,
        }
    }
}

impl ReliabilityConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::InvalidLambda(self.lambda));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::InvalidConfig("tolerance must be positive".to_string()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be at least 1".to_string()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityOutcome {
    pub reliabilities: BTreeMap<String, f64>,
    /// Inter agreement used in the final evaluation.
    pub inter: BTreeMap<String, f64>,
    pub iterations: usize,
    /// Whether the last update moved no score by `tolerance` or more.
    pub converged: bool,
}

/// Computes mean-one reliability scores and writes them into the graph.
///
/// Iteration starts from the reliabilities stored in the graph (1.0 after
/// [`build_graph`]). Weighted inter agreement reads the previous iterate's
/// reliabilities (Jacobi update). Iteration stops when no score moves by `tolerance` or
/// more, or after `max_iterations`; in the latter case `converged` is false.
pub fn compute_reliability(graph: &mut AnnotatorGraph, config: &ReliabilityConfig) -> Result<ReliabilityOutcome> {
    config.validate()?;
    graph.check_connected_nodes()?;

    let ids: Vec<String> = graph.nodes.keys().cloned().collect();
    let position = |id: &str| ids.binary_search_by(|p| p.as_str().cmp(id)).unwrap();
    let mut links: Vec<Vec<(usize, f64)>> = vec![Vec::new(); ids.len()];
    for ((x, y), edge) in &graph.edges {
        let (xi, yi) = (position(x), position(y));
        links[xi].push((yi, edge.agreement));
        links[yi].push((xi, edge.agreement));
    }
    let intra: Vec<f64> = ids
        .iter()
        .map(|id| match graph.nodes[id].intra_agreement {
            Some(v) => Ok(v),
            None if config.lambda > 0.0 => Err(Error::MissingIntra(id.clone())),
            None => Ok(0.0),
        })
        .collect::<Result<_>>()?;

    let max_iterations = match config.mode {
        ReliabilityMode::SinglePass => 1,
        ReliabilityMode::Iterative => config.max_iterations,
    };

    let mut current: Vec<f64> = ids.iter().map(|id| graph.nodes[id].reliability).collect();
    let mut inter = vec![0.0; ids.len()];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iterations {
        iterations += 1;
        for (i, incident) in links.iter().enumerate() {
            let sum: f64 = incident
                .iter()
                .map(|&(j, a)| if config.use_weighted_inter { current[j] * a } else { a })
                .sum();
            inter[i] = sum / incident.len() as f64;
        }
        let mut next: Vec<f64> = intra
            .iter()
            .zip(&inter)
            .map(|(ia, ie)| config.lambda * ia + (1.0 - config.lambda) * ie)
            .collect();
        normalize_mean_one(&mut next, &ids)?;
        let change = next
            .iter()
            .zip(&current)
            .map(|(a, b)| libm::fabs(a - b))
            .fold(0.0, f64::max);
        current = next;
        if change < config.tolerance {
            converged = true;
            break;
        }
    }
    if config.mode == ReliabilityMode::Iterative && !converged {
        log::warn!("reliability did not converge within {} iterations", iterations);
    }

    for (id, r) in ids.iter().zip(&current) {
        graph.nodes.get_mut(id).unwrap().reliability = *r;
    }
    Ok(ReliabilityOutcome {
        reliabilities: ids.iter().cloned().zip(current.iter().copied()).collect(),
        inter: ids.iter().cloned().zip(inter.iter().copied()).collect(),
        iterations,
        converged,
    })
}

fn normalize_mean_one(scores: &mut [f64], ids: &[String]) -> Result<()> {
    for (id, &value) in ids.iter().zip(scores.iter()) {
        if value.is_nan() || value <= 0.0 {
            return Err(Error::NonPositiveReliability {
                annotator: id.clone(),
                value,
            });
        }
    }
    let mean = scores.iter().sum::<f64>() / scores.len() as f64;
    for s in scores.iter_mut() {
        *s /= mean;
    }
    Ok(())
}

fn dot_id(id: &str) -> String {
    let mut chars = id.chars();
    let plain = matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_');
    if plain {
        id.to_string()
    } else {
        let mut quoted = String::from("\"");
        for c in id.chars() {
            if c == '"' || c == '\\' {
                quoted.push('\\');
            }
            quoted.push(c);
        }
        quoted.push('"');
        quoted
    }
}

/// Renders the graph as an undirected DOT graph. Node labels carry intra
/// agreement (when known) and reliability, edge labels the pair agreement,
/// all to three decimals.
pub fn export_dot(graph: &AnnotatorGraph) -> String {
    let mut out = String::from("graph effiara {\n");
    for (id, node) in &graph.nodes {
        let name = dot_id(id);
        let label = id.replace('\\', "\\\\").replace('"', "\\\"");
        let _ = match node.intra_agreement {
            Some(intra) => writeln!(
                out,
                "  {name} [label=\"{label}\\nintra={intra:.3}\\nR={:.3}\"];",
                node.reliability
            ),
            None => writeln!(out, "  {name} [label=\"{label}\\nR={:.3}\"];", node.reliability),
        };
    }
    for ((x, y), edge) in &graph.edges {
        let _ = writeln!(
            out,
            "  {} -- {} [label=\"{:.3}\"];",
            dot_id(x),
            dot_id(y),
            edge.agreement
        );
    }
    out.push_str("}\n");
    out
}
