//! Data ingestion and synthetic graphs.
//!
//! The loader reads Elliptic++-shaped CSV files: a transactions feature
//! table, a wallets feature table, class tables for both, and one or more
//! address/transaction edge lists. The generator plants dense fraud clusters
//! with shifted features into a community-structured background and can
//! export the result in the same CSV layout.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{BipartiteGraph, Label, NodeRef, Partition};
use crate::tensor::Dense;

// ---------------------------------------------------------------------------
// Schema
// ---------------------------------------------------------------------------

/// File names and column layout of an Elliptic++-style dataset directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EllipticSchema {
    pub tx_features: String,
    pub tx_classes: String,
    pub wallet_features: String,
    pub wallet_classes: String,
    /// Edge lists; missing files are skipped, at least one must exist.
    pub edge_files: Vec<String>,
    pub tx_id_column: String,
    pub wallet_id_column: String,
    /// Parsed if present, then ignored.
    pub time_column: String,
    /// Transaction feature columns after the id and time columns.
    pub tx_feature_count: usize,
    /// Column range (within the feature columns) dropped as aggregated.
    pub tx_aggregated: Option<Range<usize>>,
    pub wallet_feature_count: usize,
}

impl Default for EllipticSchema {
    fn default() -> Self {
        Self {
            tx_features: "txs_features.csv".into(),
            tx_classes: "txs_classes.csv".into(),
            wallet_features: "wallets_features.csv".into(),
            wallet_classes: "wallets_classes.csv".into(),
            edge_files: vec!["AddrTx_edgelist.csv".into(), "TxAddr_edgelist.csv".into()],
            tx_id_column: "txId".into(),
            wallet_id_column: "address".into(),
            time_column: "Time step".into(),
            tx_feature_count: 165,
            tx_aggregated: Some(93..165),
            wallet_feature_count: 56,
        }
    }
}

pub const SCHEMA_FILE: &str = "schema.json";

impl EllipticSchema {
    /// `schema.json` from the directory if present, otherwise the default.
    pub fn for_dir(dir: &Path) -> Result<Self> {
        let path = dir.join(SCHEMA_FILE);
        if path.exists() {
            let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            Ok(serde_json::from_str(&text)?)
        } else {
            Ok(Self::default())
        }
    }

    pub fn kept_tx_features(&self) -> usize {
        self.tx_feature_count - self.tx_aggregated.as_ref().map_or(0, |r| r.len())
    }
}

/// Table 1-style counts.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub transactions: usize,
    pub wallets: usize,
    pub edges: usize,
    pub tx_features: usize,
    pub wallet_features: usize,
    pub edge_features: usize,
    pub tx_fraud: usize,
    pub tx_non_fraud: usize,
    pub tx_unknown: usize,
    pub wallet_fraud: usize,
    pub wallet_non_fraud: usize,
    pub wallet_unknown: usize,
}

impl DatasetSummary {
    pub fn of(graph: &BipartiteGraph) -> Self {
        let count = |p: Partition, l: Label| graph.labels(p).iter().filter(|&&x| x == l).count();
        Self {
            transactions: graph.n_u(),
            wallets: graph.n_v(),
            edges: graph.n_e(),
            tx_features: graph.u_features().cols(),
            wallet_features: graph.v_features().cols(),
            edge_features: graph.e_features().cols(),
            tx_fraud: count(Partition::U, Label::Fraud),
            tx_non_fraud: count(Partition::U, Label::NonFraud),
            tx_unknown: count(Partition::U, Label::Unknown),
            wallet_fraud: count(Partition::V, Label::Fraud),
            wallet_non_fraud: count(Partition::V, Label::NonFraud),
            wallet_unknown: count(Partition::V, Label::Unknown),
        }
    }

    pub fn to_table(&self) -> String {
        let pct = |x: usize, n: usize| if n == 0 { 0.0 } else { 100.0 * x as f64 / n as f64 };
        let mut out = String::new();
        let _ = writeln!(out, "{:<14} {:>12} {:>12}", "", "transactions", "wallets");
        let _ = writeln!(out, "{:<14} {:>12} {:>12}", "nodes", self.transactions, self.wallets);
        let _ = writeln!(out, "{:<14} {:>12} {:>12}", "features", self.tx_features, self.wallet_features);
        for (name, t, w) in [
            ("fraud", self.tx_fraud, self.wallet_fraud),
            ("non-fraud", self.tx_non_fraud, self.wallet_non_fraud),
            ("unknown", self.tx_unknown, self.wallet_unknown),
        ] {
            let _ = writeln!(
                out,
                "{:<14} {:>12} {:>12}",
                name,
                format!("{t} ({:.0}%)", pct(t, self.transactions)),
                format!("{w} ({:.0}%)", pct(w, self.wallets))
            );
        }
        let _ = writeln!(out, "{:<14} {:>12}", "edges", self.edges);
        let _ = writeln!(out, "{:<14} {:>12}", "edge features", self.edge_features);
        out
    }
}

// ---------------------------------------------------------------------------
// Loader
// ---------------------------------------------------------------------------

fn open(path: &Path) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(file))
}

fn parse_f64(path: &Path, column: &str, row: usize, value: &str) -> Result<f64> {
    value.parse::<f64>().map_err(|_| Error::SchemaMismatch {
        file: path.to_path_buf(),
        column: column.to_string(),
        detail: format!("row {row}: `{value}` is not a number"),
    })
}

struct FeatureTable {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    features: Dense,
}

fn read_features(path: &Path, id_column: &str, time_column: &str, expected: usize, drop: Option<&Range<usize>>) -> Result<FeatureTable> {
    let mut reader = open(path)?;
    let headers = reader.headers()?.clone();
    if headers.get(0) != Some(id_column) {
        return Err(Error::SchemaMismatch {
            file: path.to_path_buf(),
            column: headers.get(0).unwrap_or("").to_string(),
            detail: format!("first column must be `{id_column}`"),
        });
    }
    let skip_time = headers.get(1) == Some(time_column);
    let first = if skip_time { 2 } else { 1 };
    let found = headers.len() - first;
    if found != expected {
        return Err(Error::SchemaMismatch {
            file: path.to_path_buf(),
            column: headers.get(headers.len() - 1).unwrap_or("").to_string(),
            detail: format!("expected {expected} feature columns, found {found}"),
        });
    }
    let keep: Vec<usize> = (0..expected).filter(|c| !drop.is_some_and(|r| r.contains(c))).collect();
    let mut ids = Vec::new();
    let mut index = HashMap::new();
    let mut data = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let id = record.get(0).unwrap_or("").to_string();
        if index.contains_key(&id) {
            // repeated ids (one row per time step) keep their first row
            continue;
        }
        if record.len() != headers.len() {
            return Err(Error::SchemaMismatch {
                file: path.to_path_buf(),
                column: format!("row {}", row + 2),
                detail: format!("{} fields, header has {}", record.len(), headers.len()),
            });
        }
        for &c in &keep {
            let name = headers.get(first + c).unwrap_or("");
            data.push(parse_f64(path, name, row + 2, &record[first + c])?);
        }
        index.insert(id.clone(), ids.len());
        ids.push(id);
    }
    let features = Dense::from_vec(ids.len(), keep.len(), data)?;
    Ok(FeatureTable { ids, index, features })
}

fn parse_label(path: &Path, row: usize, value: &str) -> Result<Label> {
    match value.to_ascii_lowercase().as_str() {
        "1" | "illicit" | "fraud" => Ok(Label::Fraud),
        "2" | "licit" | "non-fraud" | "nonfraud" => Ok(Label::NonFraud),
        "3" | "unknown" | "" => Ok(Label::Unknown),
        other => Err(Error::SchemaMismatch {
            file: path.to_path_buf(),
            column: "class".into(),
            detail: format!("row {row}: unknown class `{other}`"),
        }),
    }
}

fn read_labels(path: &Path, table: &FeatureTable) -> Result<Vec<Label>> {
    let mut labels = vec![Label::Unknown; table.ids.len()];
    if !path.exists() {
        log::warn!("{} not found; all labels unknown", path.display());
        return Ok(labels);
    }
    let mut reader = open(path)?;
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let id = record.get(0).unwrap_or("");
        let Some(&i) = table.index.get(id) else {
            return Err(Error::DanglingEdge {
                file: path.to_path_buf(),
                row: row + 2,
                id: id.to_string(),
            });
        };
        labels[i] = parse_label(path, row + 2, record.get(1).unwrap_or(""))?;
    }
    Ok(labels)
}

/// Loads an Elliptic++-shaped directory.
///
/// Edge files may list `(address, txId)` or `(txId, address)`; the order is
/// read from the header. Columns after the two ids are edge features. If the
/// edge files carry none, every edge takes its transaction's kept features.
pub fn load_elliptic(dir: &Path, schema: &EllipticSchema) -> Result<BipartiteGraph> {
    let txs = read_features(
        &dir.join(&schema.tx_features),
        &schema.tx_id_column,
        &schema.time_column,
        schema.tx_feature_count,
        schema.tx_aggregated.as_ref(),
    )?;
    let wallets = read_features(
        &dir.join(&schema.wallet_features),
        &schema.wallet_id_column,
        &schema.time_column,
        schema.wallet_feature_count,
        None,
    )?;
    let u_labels = read_labels(&dir.join(&schema.tx_classes), &txs)?;
    let v_labels = read_labels(&dir.join(&schema.wallet_classes), &wallets)?;

    let mut edges = Vec::new();
    let mut edge_data = Vec::new();
    let mut edge_width: Option<usize> = None;
    let mut any = false;
    for name in &schema.edge_files {
        let path = dir.join(name);
        if !path.exists() {
            continue;
        }
        any = true;
        let mut reader = open(&path)?;
        let headers = reader.headers()?.clone();
        if headers.len() < 2 {
            return Err(Error::SchemaMismatch {
                file: path.clone(),
                column: headers.get(0).unwrap_or("").into(),
                detail: "edge list needs two id columns".into(),
            });
        }
        let tx_first = headers.get(0) == Some(schema.tx_id_column.as_str());
        let width = headers.len() - 2;
        match edge_width {
            Some(w) if w != width => {
                return Err(Error::SchemaMismatch {
                    file: path.clone(),
                    column: headers.get(headers.len() - 1).unwrap_or("").into(),
                    detail: format!("{width} edge feature columns, earlier files had {w}"),
                })
            }
            _ => edge_width = Some(width),
        }
        for (row, record) in reader.records().enumerate() {
            let record = record?;
            let (tx, wallet) = if tx_first {
                (&record[0], &record[1])
            } else {
                (&record[1], &record[0])
            };
            let dangling = |id: &str| Error::DanglingEdge {
                file: path.clone(),
                row: row + 2,
                id: id.to_string(),
            };
            let u = *txs.index.get(tx).ok_or_else(|| dangling(tx))?;
            let v = *wallets.index.get(wallet).ok_or_else(|| dangling(wallet))?;
            for c in 2..record.len() {
                edge_data.push(parse_f64(&path, headers.get(c).unwrap_or(""), row + 2, &record[c])?);
            }
            edges.push((u, v));
        }
    }
    if !any {
        return Err(Error::io(
            dir.join(schema.edge_files.first().map_or("edges.csv", |s| s.as_str())),
            std::io::Error::new(std::io::ErrorKind::NotFound, "no edge list found"),
        ));
    }
    let e_features = match edge_width {
        Some(w) if w > 0 => Dense::from_vec(edges.len(), w, edge_data)?,
        _ => {
            let rows: Vec<usize> = edges.iter().map(|&(u, _)| u).collect();
            txs.features.select_rows(&rows)?
        }
    };
    BipartiteGraph::new(txs.features, wallets.features, edges, e_features, u_labels, v_labels)?
        .with_names(txs.ids, wallets.ids)
}

// ---------------------------------------------------------------------------
// Synthetic generator
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub n_u: usize,
    pub n_v: usize,
    pub d_u: usize,
    pub d_v: usize,
    pub d_e: usize,
    /// Leading feature columns that encode community membership.
    pub profile_dims: usize,
    /// Background communities; edges form only inside a community.
    pub communities: usize,
    /// Edge probability between a U and a V node of the same community.
    pub background_density: f64,
    pub clusters: usize,
    /// U and V nodes per fraud cluster.
    pub cluster_size: usize,
    pub cluster_density: f64,
    /// Edges from each fraud cluster into the background, alternating
    /// between cluster U and cluster V endpoints.
    pub bridges_per_cluster: usize,
    /// Mean shift, in noise standard deviations, of fraud behavior features.
    pub shift: f64,
    /// Spread of community centroids in the profile columns.
    pub profile_scale: f64,
    /// Fraction of each class whose label is revealed.
    pub known_fraction: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n_u: 400,
            n_v: 400,
            d_u: 8,
            d_v: 8,
            d_e: 4,
            profile_dims: 4,
            communities: 50,
            background_density: 0.8,
            clusters: 3,
            cluster_size: 10,
            cluster_density: 0.8,
            bridges_per_cluster: 2,
            shift: 3.0,
            profile_scale: 3.0,
            known_fraction: 0.3,
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n_u == 0 || self.n_v == 0 || self.d_u == 0 || self.d_v == 0 || self.d_e == 0 {
            return bad("node counts and feature dimensions must be positive".into());
        }
        if self.profile_dims > self.d_u.min(self.d_v) {
            return bad(format!("profile_dims {} exceeds a node feature width", self.profile_dims));
        }
        if self.communities == 0 {
            return bad("communities must be positive".into());
        }
        for (name, p) in [("background_density", self.background_density), ("cluster_density", self.cluster_density)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must lie in [0,1], got {p}"));
            }
        }
        if self.clusters > 0 && self.cluster_size == 0 {
            return bad("cluster_size must be positive".into());
        }
        let planted = self.clusters * self.cluster_size;
        if planted > self.n_u || planted > self.n_v {
            return bad(format!("{planted} planted nodes exceed a partition"));
        }
        if !(self.known_fraction > 0.0 && self.known_fraction <= 1.0) {
            return bad(format!("known_fraction must lie in (0,1], got {}", self.known_fraction));
        }
        if !self.shift.is_finite() || !self.profile_scale.is_finite() {
            return bad("shift and profile_scale must be finite".into());
        }
        Ok(())
    }
}

/// True fraud membership, kept apart from the graph's revealed labels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub u_fraud: Vec<bool>,
    pub v_fraud: Vec<bool>,
    /// Member U and V nodes of each planted cluster.
    pub clusters: Vec<(Vec<usize>, Vec<usize>)>,
}

impl GroundTruth {
    pub fn is_fraud(&self, node: NodeRef) -> bool {
        match node.partition {
            Partition::U => self.u_fraud[node.index],
            Partition::V => self.v_fraud[node.index],
        }
    }

    pub fn fraud_nodes(&self, partition: Partition) -> Vec<usize> {
        let flags = match partition {
            Partition::U => &self.u_fraud,
            Partition::V => &self.v_fraud,
        };
        (0..flags.len()).filter(|&i| flags[i]).collect()
    }
}

fn normal<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Community background plus planted fraud clusters.
///
/// Profile columns place each node near its community (or cluster) centroid,
/// behavior columns are unit noise shifted by `shift` for fraud nodes. Edges
/// inside a fraud cluster carry the same shift. A few bridge edges tie each
/// cluster to the background.
pub fn generate_synthetic(config: &SyntheticConfig) -> Result<(BipartiteGraph, GroundTruth)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let planted = config.clusters * config.cluster_size;

    let mut u_order: Vec<usize> = (0..config.n_u).collect();
    let mut v_order: Vec<usize> = (0..config.n_v).collect();
    u_order.shuffle(&mut rng);
    v_order.shuffle(&mut rng);
    let (u_fraud_list, u_background) = u_order.split_at(planted);
    let (v_fraud_list, v_background) = v_order.split_at(planted);

    // groups: communities first, then fraud clusters
    let groups = config.communities + config.clusters;
    let mut u_members = vec![Vec::new(); groups];
    let mut v_members = vec![Vec::new(); groups];
    for (i, &u) in u_background.iter().enumerate() {
        u_members[i % config.communities].push(u);
    }
    for (i, &v) in v_background.iter().enumerate() {
        v_members[i % config.communities].push(v);
    }
    let mut clusters = Vec::with_capacity(config.clusters);
    for c in 0..config.clusters {
        let us = u_fraud_list[c * config.cluster_size..(c + 1) * config.cluster_size].to_vec();
        let vs = v_fraud_list[c * config.cluster_size..(c + 1) * config.cluster_size].to_vec();
        u_members[config.communities + c] = us.clone();
        v_members[config.communities + c] = vs.clone();
        clusters.push((us, vs));
    }
    let mut u_fraud = vec![false; config.n_u];
    let mut v_fraud = vec![false; config.n_v];
    u_fraud_list.iter().for_each(|&u| u_fraud[u] = true);
    v_fraud_list.iter().for_each(|&v| v_fraud[v] = true);

    let centroids: Vec<Vec<f64>> = (0..groups)
        .map(|_| (0..config.profile_dims).map(|_| config.profile_scale * normal(&mut rng)).collect())
        .collect();
    let node_features = |members: &[Vec<usize>], fraud: &[bool], n: usize, d: usize, rng: &mut ChaCha8Rng| {
        let mut x = Dense::zeros(n, d);
        for (g, nodes) in members.iter().enumerate() {
            for &i in nodes {
                let row = x.row_mut(i);
                for (c, value) in row.iter_mut().enumerate() {
                    *value = if c < config.profile_dims {
                        centroids[g][c] + normal(rng)
                    } else {
                        normal(rng) + if fraud[i] { config.shift } else { 0.0 }
                    };
                }
            }
        }
        x
    };
    let u_features = node_features(&u_members, &u_fraud, config.n_u, config.d_u, &mut rng);
    let v_features = node_features(&v_members, &v_fraud, config.n_v, config.d_v, &mut rng);

    let mut edges = Vec::new();
    let mut shifted = Vec::new();
    for g in 0..groups {
        let density = if g < config.communities {
            config.background_density
        } else {
            config.cluster_density
        };
        for &u in &u_members[g] {
            for &v in &v_members[g] {
                if rng.gen::<f64>() < density {
                    edges.push((u, v));
                    shifted.push(g >= config.communities);
                }
            }
        }
    }
    if !u_background.is_empty() && !v_background.is_empty() {
        for (us, vs) in &clusters {
            for b in 0..config.bridges_per_cluster {
                let edge = if b % 2 == 0 {
                    (us[rng.gen_range(0..us.len())], v_background[rng.gen_range(0..v_background.len())])
                } else {
                    (u_background[rng.gen_range(0..u_background.len())], vs[rng.gen_range(0..vs.len())])
                };
                edges.push(edge);
                shifted.push(false);
            }
        }
    }
    let mut e_features = Dense::zeros(edges.len(), config.d_e);
    for (i, &s) in shifted.iter().enumerate() {
        for value in e_features.row_mut(i) {
            *value = normal(&mut rng) + if s { config.shift } else { 0.0 };
        }
    }

    let mut reveal = |fraud: &[bool]| -> Vec<Label> {
        let mut labels = vec![Label::Unknown; fraud.len()];
        for (class, flag) in [(Label::Fraud, true), (Label::NonFraud, false)] {
            let mut members: Vec<usize> = (0..fraud.len()).filter(|&i| fraud[i] == flag).collect();
            members.shuffle(&mut rng);
            let k = (config.known_fraction * members.len() as f64).round() as usize;
            for &i in &members[..k.min(members.len())] {
                labels[i] = class;
            }
        }
        labels
    };
    let u_labels = reveal(&u_fraud);
    let v_labels = reveal(&v_fraud);

    let graph = BipartiteGraph::new(u_features, v_features, edges, e_features, u_labels, v_labels)?.with_names(
        (0..config.n_u).map(|i| format!("t{i}")).collect(),
        (0..config.n_v).map(|i| format!("w{i}")).collect(),
    )?;
    Ok((
        graph,
        GroundTruth {
            u_fraud,
            v_fraud,
            clusters,
        },
    ))
}

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn class_code(label: Label) -> &'static str {
    match label {
        Label::Fraud => "1",
        Label::NonFraud => "2",
        Label::Unknown => "3",
    }
}

/// Writes a graph in the loader's CSV layout plus a matching `schema.json`.
/// Node ids are the graph's names; edge features become extra edge columns.
pub fn export_csv(graph: &BipartiteGraph, dir: &Path) -> Result<EllipticSchema> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let schema = EllipticSchema {
        edge_files: vec!["AddrTx_edgelist.csv".into()],
        tx_feature_count: graph.u_features().cols(),
        tx_aggregated: None,
        wallet_feature_count: graph.v_features().cols(),
        ..EllipticSchema::default()
    };
    let names = |p: Partition| -> Vec<String> {
        let n = graph.names(p);
        if n.is_empty() {
            (0..graph.len(p)).map(|i| format!("{}{i}", p.tag())).collect()
        } else {
            n.to_vec()
        }
    };
    let (u_names, v_names) = (names(Partition::U), names(Partition::V));
    for (partition, id_col, file, classes, ids) in [
        (Partition::U, &schema.tx_id_column, &schema.tx_features, &schema.tx_classes, &u_names),
        (Partition::V, &schema.wallet_id_column, &schema.wallet_features, &schema.wallet_classes, &v_names),
    ] {
        let x = graph.features(partition);
        let mut w = writer(&dir.join(file))?;
        let mut header = vec![id_col.clone()];
        header.extend((0..x.cols()).map(|c| format!("f{c}")));
        w.write_record(&header)?;
        for (i, id) in ids.iter().enumerate() {
            let mut rec = vec![id.clone()];
            rec.extend(x.row(i).iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(dir.join(file), e))?;
        let mut w = writer(&dir.join(classes))?;
        w.write_record([id_col.as_str(), "class"])?;
        for (i, id) in ids.iter().enumerate() {
            w.write_record([id.as_str(), class_code(graph.labels(partition)[i])])?;
        }
        w.flush().map_err(|e| Error::io(dir.join(classes), e))?;
    }
    let edge_path = dir.join(&schema.edge_files[0]);
    let mut w = writer(&edge_path)?;
    let mut header = vec![schema.wallet_id_column.clone(), schema.tx_id_column.clone()];
    header.extend((0..graph.e_features().cols()).map(|c| format!("e{c}")));
    w.write_record(&header)?;
    for (i, &(u, v)) in graph.edges().iter().enumerate() {
        let mut rec = vec![v_names[v].clone(), u_names[u].clone()];
        rec.extend(graph.e_features().row(i).iter().map(|x| x.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(&edge_path, e))?;
    let schema_path = dir.join(SCHEMA_FILE);
    fs::write(&schema_path, serde_json::to_string_pretty(&schema)?).map_err(|e| Error::io(&schema_path, e))?;
    Ok(schema)
}

/// Writes the ground truth next to an export.
pub fn export_ground_truth(truth: &GroundTruth, path: &Path) -> Result<()> {
    fs::write(path, serde_json::to_string(truth)?).map_err(|e| Error::io(path, e))
}

pub fn load_ground_truth(path: &Path) -> Result<GroundTruth> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn default_paths(dir: &Path, schema: &EllipticSchema) -> Vec<PathBuf> {
    let mut out = vec![
        dir.join(&schema.tx_features),
        dir.join(&schema.tx_classes),
        dir.join(&schema.wallet_features),
        dir.join(&schema.wallet_classes),
    ];
    out.extend(schema.edge_files.iter().map(|f| dir.join(f)));
    out
}

// ---------------------------------------------------------------------------
// Degrees
// ---------------------------------------------------------------------------

/// Degree histogram per partition: degree → node count.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeSummary {
    pub u: BTreeMap<usize, usize>,
    pub v: BTreeMap<usize, usize>,
}

pub fn summarize_degrees(graph: &BipartiteGraph) -> DegreeSummary {
    let hist = |p: Partition| {
        let mut h = BTreeMap::new();
        for i in 0..graph.len(p) {
            *h.entry(graph.degree(NodeRef { partition: p, index: i })).or_insert(0) += 1;
        }
        h
    };
    DegreeSummary {
        u: hist(Partition::U),
        v: hist(Partition::V),
    }
}

impl DegreeSummary {
    pub fn histogram(&self, partition: Partition) -> &BTreeMap<usize, usize> {
        match partition {
            Partition::U => &self.u,
            Partition::V => &self.v,
        }
    }

    /// Two-column `degree count` text.
    pub fn to_text(&self, partition: Partition) -> String {
        let mut out = String::from("degree count\n");
        for (d, c) in self.histogram(partition) {
            let _ = writeln!(out, "{d} {c}");
        }
        out
    }
}
