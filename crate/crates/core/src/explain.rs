//! Granger-causal edge explanations.
//!
//! For a target node the explainer measures, for every edge touching its
//! `n`-hop neighborhood, how much the target's classification loss rises
//! when that single edge is removed (`C_j = L2 - L1`). Edges with a positive
//! effect are then grown greedily into a connected subgraph around the
//! target, and fidelity compares the target's fraud probability on the full
//! graph with the probability when only the selected neighborhood edges
//! remain.
//!
//! Scores are computed on the subgraph induced by the target's receptive
//! field (the ball whose radius is the number of encoder layers). Rows and
//! edges keep their original order there, so the target's logit is the same
//! value a full forward pass produces. Edges outside that ball cannot reach
//! the target and score exactly zero.

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{BipartiteGraph, GraphView, InducedMap, Label, NodeRef, Partition};
use crate::model::SageFinModel;
use crate::tensor::{bce_logit, sigmoid, Mode};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceLabel {
    /// The model's own prediction on the full graph.
    #[default]
    Predicted,
    /// The node's known label; unknown targets are rejected.
    GroundTruth,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExplainConfig {
    pub hops: usize,
    pub top_k: usize,
    pub reference: ReferenceLabel,
    pub threshold: f64,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        Self {
            hops: 4,
            top_k: 10,
            reference: ReferenceLabel::Predicted,
            threshold: 0.5,
        }
    }
}

impl ExplainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hops < 1 || self.top_k < 1 {
            return Err(Error::InvalidConfig(format!(
                "hops and top_k must be >= 1, got {} and {}",
                self.hops, self.top_k
            )));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::InvalidConfig(format!("threshold must lie in (0,1), got {}", self.threshold)));
        }
        Ok(())
    }
}

/// Loss delta of removing one edge.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeScore {
    pub edge: usize,
    /// `ablated - baseline`.
    pub score: f64,
    pub baseline: f64,
    pub ablated: f64,
}

/// Target classification on the intact graph.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub logit: f64,
    pub probability: f64,
    /// 1 for fraud, 0 for non-fraud.
    pub reference: f64,
    pub loss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplainedNode {
    pub node: NodeRef,
    pub label: Label,
    pub name: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectedEdge {
    pub edge: usize,
    pub u: usize,
    pub v: usize,
    pub score: f64,
}

/// Greedy connected top-K selection.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    /// Admitted edges in admission order.
    pub edges: Vec<SelectedEdge>,
    /// Target first, then nodes in the order they joined.
    pub nodes: Vec<NodeRef>,
    /// Positive-score edges passed over at least once because they did not
    /// yet touch the growing subgraph.
    pub skipped: Vec<usize>,
    /// Fewer than K edges could be admitted.
    pub truncated: bool,
    pub diagnostic: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub target: NodeRef,
    pub hops: usize,
    pub top_k: usize,
    pub baseline: Baseline,
    /// Fraud probability on the full graph.
    pub p_full: f64,
    /// Fraud probability with every other neighborhood edge removed.
    pub p_subgraph: f64,
    pub fidelity_gap: f64,
    pub scores: Vec<EdgeScore>,
    pub nodes: Vec<ExplainedNode>,
    pub edges: Vec<SelectedEdge>,
    pub skipped: Vec<usize>,
    pub truncated: bool,
    pub diagnostic: Option<String>,
}

fn check_trained(model: &SageFinModel) -> Result<()> {
    if model.epochs_trained == 0 {
        return Err(Error::UntrainedModel);
    }
    Ok(())
}

/// Inference-mode fraud logit of one node.
pub fn target_logit(model: &SageFinModel, view: &GraphView<'_>, target: NodeRef) -> Result<f64> {
    view.graph().check_node(target)?;
    let z = model.encode(view, Mode::Eval)?;
    let row = match target.partition {
        Partition::U => z.u.row(target.index),
        Partition::V => z.v.row(target.index),
    };
    model.predict_node(row, target.partition)
}

/// Induced subgraph of the target's receptive field.
struct Ball {
    graph: BipartiteGraph,
    map: InducedMap,
    target: NodeRef,
}

impl Ball {
    fn new(model: &SageFinModel, view: &GraphView<'_>, target: NodeRef) -> Result<Self> {
        let radius = model.encoder.len();
        let hood = view.n_hop_neighborhood(target.partition, target.index, radius)?;
        let (graph, map) = BipartiteGraph::induced(view, &hood.u_nodes, &hood.v_nodes)?;
        let local = map.local_node(target).expect("target is in its own ball");
        Ok(Self {
            graph,
            map,
            target: NodeRef {
                partition: target.partition,
                index: local,
            },
        })
    }

    fn logit(&self, model: &SageFinModel, removed: Option<usize>) -> Result<f64> {
        let view = match removed {
            Some(e) => self.graph.remove_edge_view(e)?,
            None => self.graph.view(),
        };
        target_logit(model, &view, self.target)
    }
}

fn reference_label(graph: &BipartiteGraph, target: NodeRef, probability: f64, config: &ExplainConfig) -> Result<f64> {
    match config.reference {
        ReferenceLabel::Predicted => Ok(if probability >= config.threshold { 1.0 } else { 0.0 }),
        ReferenceLabel::GroundTruth => graph.labels(target.partition)[target.index].target().ok_or_else(|| {
            Error::InvalidConfig(format!("{target} has no known label to use as the reference"))
        }),
    }
}

/// `L1`: BCE of the target's logit against the reference label.
pub fn baseline_loss(model: &SageFinModel, graph: &BipartiteGraph, target: NodeRef, config: &ExplainConfig) -> Result<Baseline> {
    check_trained(model)?;
    let ball = Ball::new(model, &graph.view(), target)?;
    baseline_from_ball(model, graph, &ball, target, config)
}

fn baseline_from_ball(
    model: &SageFinModel,
    graph: &BipartiteGraph,
    ball: &Ball,
    target: NodeRef,
    config: &ExplainConfig,
) -> Result<Baseline> {
    let logit = ball.logit(model, None)?;
    let probability = sigmoid(logit);
    let reference = reference_label(graph, target, probability, config)?;
    Ok(Baseline {
        logit,
        probability,
        reference,
        loss: bce_logit(logit, reference),
    })
}

/// Edges incident to any node within `hops` of the target, ascending.
pub fn candidate_edges(graph: &BipartiteGraph, target: NodeRef, hops: usize) -> Result<Vec<usize>> {
    let hood = graph.n_hop_neighborhood(target.partition, target.index, hops)?;
    let mut out = BTreeSet::new();
    for &(node, _) in &hood.order {
        out.extend(graph.incident(node).iter().copied());
    }
    Ok(out.into_iter().collect())
}

/// Single-edge ablation scores for every candidate edge, by edge index.
pub fn score_edges(
    model: &SageFinModel,
    graph: &BipartiteGraph,
    target: NodeRef,
    config: &ExplainConfig,
) -> Result<Vec<EdgeScore>> {
    check_trained(model)?;
    config.validate()?;
    let ball = Ball::new(model, &graph.view(), target)?;
    let base = baseline_from_ball(model, graph, &ball, target, config)?;
    score_with(model, graph, &ball, target, config, &base)
}

fn score_with(
    model: &SageFinModel,
    graph: &BipartiteGraph,
    ball: &Ball,
    target: NodeRef,
    config: &ExplainConfig,
    base: &Baseline,
) -> Result<Vec<EdgeScore>> {
    let candidates = candidate_edges(graph, target, config.hops)?;
    candidates
        .par_iter()
        .map(|&edge| {
            let ablated = match ball.map.local_edge(edge) {
                Some(local) => bce_logit(ball.logit(model, Some(local))?, base.reference),
                None => base.loss,
            };
            Ok(EdgeScore {
                edge,
                score: ablated - base.loss,
                baseline: base.loss,
                ablated,
            })
        })
        .collect()
}

/// Greedy selection by descending score (ties by ascending edge index),
/// admitting only positive-score edges that touch the current subgraph.
/// After each admission the scan restarts from the top, so the result for a
/// smaller K is always a prefix of the result for a larger K.
pub fn select_subgraph(scores: &[EdgeScore], graph: &BipartiteGraph, target: NodeRef, k: usize) -> Result<Selection> {
    graph.check_node(target)?;
    let mut candidates: Vec<&EdgeScore> = scores.iter().filter(|s| s.score > 0.0).collect();
    candidates.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.edge.cmp(&b.edge)));
    let mut selection = Selection {
        nodes: vec![target],
        ..Selection::default()
    };
    if candidates.is_empty() {
        selection.truncated = k > 0;
        selection.diagnostic = Some(format!("no edge around {target} has a positive causal score"));
        return Ok(selection);
    }
    let mut members: HashSet<NodeRef> = HashSet::from([target]);
    let mut used = vec![false; candidates.len()];
    let mut skipped = BTreeSet::new();
    while selection.edges.len() < k {
        let mut found = None;
        for (i, c) in candidates.iter().enumerate() {
            if used[i] {
                continue;
            }
            let (u, v) = graph.edge(c.edge)?;
            if members.contains(&NodeRef::u(u)) || members.contains(&NodeRef::v(v)) {
                found = Some((i, u, v));
                break;
            }
            skipped.insert(c.edge);
        }
        let Some((i, u, v)) = found else { break };
        used[i] = true;
        for node in [NodeRef::u(u), NodeRef::v(v)] {
            if members.insert(node) {
                selection.nodes.push(node);
            }
        }
        selection.edges.push(SelectedEdge {
            edge: candidates[i].edge,
            u,
            v,
            score: candidates[i].score,
        });
    }
    selection.skipped = skipped.into_iter().collect();
    selection.truncated = selection.edges.len() < k;
    if selection.truncated {
        log::warn!(
            "{target}: only {} of {k} requested edges are connectable with a positive score",
            selection.edges.len()
        );
    }
    Ok(selection)
}

/// Fraud probabilities on the full graph and with every candidate edge
/// outside `keep` removed, plus their absolute difference.
pub fn fidelity(
    model: &SageFinModel,
    graph: &BipartiteGraph,
    target: NodeRef,
    hops: usize,
    keep: &[usize],
) -> Result<(f64, f64, f64)> {
    let keep: HashSet<usize> = keep.iter().copied().collect();
    let removed: Vec<usize> = candidate_edges(graph, target, hops)?
        .into_iter()
        .filter(|e| !keep.contains(e))
        .collect();
    let full = sigmoid(target_logit(model, &graph.view(), target)?);
    let reduced = sigmoid(target_logit(model, &graph.view().remove_edges(removed)?, target)?);
    Ok((full, reduced, (full - reduced).abs()))
}

/// Scores, selects and checks fidelity for one target.
pub fn explain(model: &SageFinModel, graph: &BipartiteGraph, target: NodeRef, config: &ExplainConfig) -> Result<Explanation> {
    check_trained(model)?;
    config.validate()?;
    let ball = Ball::new(model, &graph.view(), target)?;
    let baseline = baseline_from_ball(model, graph, &ball, target, config)?;
    let scores = score_with(model, graph, &ball, target, config, &baseline)?;
    let selection = select_subgraph(&scores, graph, target, config.top_k)?;
    let kept: Vec<usize> = selection.edges.iter().map(|e| e.edge).collect();
    let (p_full, p_subgraph, fidelity_gap) = fidelity(model, graph, target, config.hops, &kept)?;
    let nodes = selection
        .nodes
        .iter()
        .map(|&node| ExplainedNode {
            node,
            label: graph.labels(node.partition)[node.index],
            name: graph.names(node.partition).get(node.index).cloned(),
        })
        .collect();
    Ok(Explanation {
        target,
        hops: config.hops,
        top_k: config.top_k,
        baseline,
        p_full,
        p_subgraph,
        fidelity_gap,
        scores,
        nodes,
        edges: selection.edges,
        skipped: selection.skipped,
        truncated: selection.truncated,
        diagnostic: selection.diagnostic,
    })
}

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

impl Explanation {
    /// `{u|v}_{index}_top{K}` without extension.
    pub fn file_stem(&self) -> String {
        format!("{}_{}_top{}", self.target.partition.tag(), self.target.index, self.top_k)
    }

    /// Undirected DOT graph: transactions as boxes, wallets as circles,
    /// fill by label and edge width by causal score.
    pub fn to_dot(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "graph \"{}\" {{", self.file_stem());
        let _ = writeln!(out, "  node [style=filled, fontcolor=white];");
        let max = self.edges.iter().map(|e| e.score).fold(0.0_f64, f64::max);
        for n in &self.nodes {
            let shape = match n.node.partition {
                Partition::U => "box",
                Partition::V => "circle",
            };
            let color = match n.label {
                Label::Fraud => "red",
                Label::NonFraud => "green",
                Label::Unknown => "blue",
            };
            let label = match &n.name {
                Some(name) => format!("{} ({})", n.node, dot_escape(name)),
                None => n.node.to_string(),
            };
            let extra = if n.node == self.target { ", peripheries=2" } else { "" };
            let _ = writeln!(
                out,
                "  \"{}\" [shape={shape}, fillcolor={color}, label=\"{label}\"{extra}];",
                n.node
            );
        }
        for e in &self.edges {
            let width = if max > 0.0 { 1.0 + 4.0 * e.score / max } else { 1.0 };
            let _ = writeln!(
                out,
                "  \"{}\" -- \"{}\" [penwidth={width:.3}, label=\"{:.4e}\"];",
                NodeRef::u(e.u),
                NodeRef::v(e.v),
                e.score
            );
        }
        out.push_str("}\n");
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Writes `<stem>.dot` and `<stem>.json` into `dir`.
    pub fn write_files(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let dot = dir.join(format!("{}.dot", self.file_stem()));
        let json = dir.join(format!("{}.json", self.file_stem()));
        std::fs::write(&dot, self.to_dot()).map_err(|e| Error::io(&dot, e))?;
        std::fs::write(&json, self.to_json()?).map_err(|e| Error::io(&json, e))?;
        Ok((dot, json))
    }
}
