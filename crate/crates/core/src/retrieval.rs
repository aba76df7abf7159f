//! Descriptor ranking and CMC / AUC evaluation.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::descriptor::NormalizationStats;
use crate::error::{Error, Result};

/// Ranks covered by the truncated AUC.
pub const AUC_TRUNCATION: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Cosine,
    Cityblock,
    Euclidean,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Cosine, Metric::Cityblock, Metric::Euclidean];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Cosine => "cosine",
            Metric::Cityblock => "cityblock",
            Metric::Euclidean => "euclidean",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown metric `{s}`")))
    }
}

/// Cosine distance treats a zero vector as maximally distant (1).
pub fn distance(a: &[f64], b: &[f64], metric: Metric) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(format!("distance between vectors of length {} and {}", a.len(), b.len())));
    }
    Ok(distance_unchecked(a, b, metric))
}

fn distance_unchecked(a: &[f64], b: &[f64], metric: Metric) -> f64 {
    match metric {
        Metric::Cosine => {
            let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
            for (x, y) in a.iter().zip(b) {
                dot += x * y;
                na += x * x;
                nb += y * y;
            }
            if na == 0.0 || nb == 0.0 {
                1.0
            } else {
                1.0 - dot / (na.sqrt() * nb.sqrt())
            }
        }
        Metric::Cityblock => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
        Metric::Euclidean => a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptorIndex {
    /// Sorted ascending.
    pub ids: Vec<String>,
    /// Normalized vectors, parallel to `ids`.
    pub vectors: Vec<Vec<f64>>,
    pub stats: NormalizationStats,
    pub metric_default: Metric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub query_id: String,
    /// Database ids with their distances, ascending; ties in id order.
    pub ordered: Vec<(String, f64)>,
}

impl Ranking {
    /// 1-based rank of `id`.
    pub fn rank_of(&self, id: &str) -> Option<usize> {
        self.ordered.iter().position(|(x, _)| x == id).map(|p| p + 1)
    }
}

/// Fits normalization on the raw database descriptors and stores the
/// normalized vectors. Entries are ordered by id, so the index does not
/// depend on insertion order.
pub fn build_index<V: AsRef<[f64]>>(descriptors: &[(String, V)], metric: Metric) -> Result<DescriptorIndex> {
    let mut seen = HashSet::new();
    for (id, _) in descriptors {
        if !seen.insert(id.as_str()) {
            return Err(Error::InvalidArgument(format!("duplicate database id `{id}`")));
        }
    }
    let mut order: Vec<usize> = (0..descriptors.len()).collect();
    order.sort_by(|&a, &b| descriptors[a].0.cmp(&descriptors[b].0));
    let raw: Vec<&[f64]> = order.iter().map(|&i| descriptors[i].1.as_ref()).collect();
    let stats = NormalizationStats::fit(&raw)?;
    let vectors = raw.iter().map(|v| stats.apply(v)).collect::<Result<Vec<_>>>()?;
    Ok(DescriptorIndex {
        ids: order.iter().map(|&i| descriptors[i].0.clone()).collect(),
        vectors,
        stats,
        metric_default: metric,
    })
}

impl DescriptorIndex {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.stats.dim()
    }

    pub fn query(&self, query_id: &str, raw: &[f64]) -> Result<Ranking> {
        self.query_with(query_id, raw, self.metric_default)
    }

    pub fn query_with(&self, query_id: &str, raw: &[f64], metric: Metric) -> Result<Ranking> {
        let q = self.stats.apply(raw)?;
        let mut ordered: Vec<(usize, f64)> = self
            .vectors
            .iter()
            .enumerate()
            .map(|(i, v)| (i, distance_unchecked(&q, v, metric)))
            .collect();
        // Ids are sorted, so index order is id order.
        ordered.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        Ok(Ranking {
            query_id: query_id.to_string(),
            ordered: ordered.into_iter().map(|(i, d)| (self.ids[i].clone(), d)).collect(),
        })
    }
}

/// Convenience wrapper for [`DescriptorIndex::query`].
pub fn query(index: &DescriptorIndex, query_id: &str, raw: &[f64]) -> Result<Ranking> {
    index.query(query_id, raw)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmcCurve {
    /// Entry `r - 1` is the fraction of queries matched at rank `<= r`.
    pub recognition_rate: Vec<f64>,
    pub auc: f64,
    pub auc_at_200: f64,
}

/// CMC curve over `rankings`; `truth` maps each query id to its correct
/// database id.
pub fn evaluate_cmc(rankings: &[Ranking], truth: &BTreeMap<String, String>) -> Result<CmcCurve> {
    let mut ranks = Vec::with_capacity(rankings.len());
    let mut n = None;
    for r in rankings {
        let t = truth.get(&r.query_id).ok_or_else(|| Error::MissingTruth(r.query_id.clone()))?;
        let rank = r.rank_of(t).ok_or_else(|| Error::TruthNotRanked {
            query: r.query_id.clone(),
            truth: t.clone(),
        })?;
        match n {
            None => n = Some(r.ordered.len()),
            Some(len) if len != r.ordered.len() => {
                return Err(Error::InvalidArgument(format!(
                    "ranking for `{}` has {} entries, expected {len}",
                    r.query_id,
                    r.ordered.len()
                )))
            }
            _ => {}
        }
        ranks.push(rank);
    }
    cmc_from_ranks(&ranks, n.unwrap_or(0))
}

/// CMC curve from 1-based correct-match ranks in a database of size `n`.
pub fn cmc_from_ranks(ranks: &[usize], n: usize) -> Result<CmcCurve> {
    if ranks.is_empty() || n == 0 {
        return Err(Error::InsufficientData {
            needed: 1,
            got: ranks.len().min(n),
        });
    }
    let mut hits = vec![0usize; n];
    for &r in ranks {
        if r == 0 || r > n {
            return Err(Error::InvalidArgument(format!("rank {r} outside 1..={n}")));
        }
        hits[r - 1] += 1;
    }
    let total = ranks.len() as f64;
    let mut acc = 0;
    let recognition_rate: Vec<f64> = hits
        .iter()
        .map(|&h| {
            acc += h;
            acc as f64 / total
        })
        .collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Ok(CmcCurve {
        auc: mean(&recognition_rate),
        auc_at_200: mean(&recognition_rate[..n.min(AUC_TRUNCATION)]),
        recognition_rate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub variant: String,
    pub method: String,
    pub metric: Metric,
    pub auc: f64,
    pub auc_at_200: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmcRow {
    pub variant: String,
    pub method: String,
    pub rank: usize,
    pub recognition_rate: f64,
}

pub fn cmc_rows(variant: &str, method: &str, curve: &CmcCurve) -> Vec<CmcRow> {
    curve
        .recognition_rate
        .iter()
        .enumerate()
        .map(|(i, &r)| CmcRow {
            variant: variant.to_string(),
            method: method.to_string(),
            rank: i + 1,
            recognition_rate: r,
        })
        .collect()
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    crate::io::ensure_parent(path)?;
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_csv<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let csv_err = |e| Error::Csv {
        path: path.to_path_buf(),
        source: e,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize().collect::<std::result::Result<Vec<T>, _>>().map_err(csv_err)
}

/// SVG line plot of CMC curves for one variant, truncated to the first
/// [`AUC_TRUNCATION`] ranks.
pub fn cmc_svg(variant: &str, curves: &[(&str, &CmcCurve)]) -> String {
    const W: f64 = 480.0;
    const H: f64 = 320.0;
    const M: f64 = 40.0;
    const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
    let ranks = curves
        .iter()
        .map(|(_, c)| c.recognition_rate.len().min(AUC_TRUNCATION))
        .max()
        .unwrap_or(1)
        .max(2);
    let sx = |r: usize| M + (r - 1) as f64 / (ranks - 1) as f64 * (W - 2.0 * M);
    let sy = |v: f64| H - M - v * (H - 2.0 * M);
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">CMC {variant}</text>\n\
         <polyline points=\"{M},{M} {M},{} {},{}\" fill=\"none\" stroke=\"black\"/>\n",
        W / 2.0,
        H - M,
        W - M,
        H - M
    );
    s += &format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">rank (1..{ranks})</text>\n",
        W / 2.0,
        H - 10.0
    );
    for (k, (name, curve)) in curves.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<String> = curve
            .recognition_rate
            .iter()
            .take(ranks)
            .enumerate()
            .map(|(i, &v)| format!("{:.2},{:.2}", sx(i + 1), sy(v)))
            .collect();
        s += &format!("<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n", pts.join(" "));
        s += &format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"{color}\">{name} (AUC {:.3})</text>\n",
            W - M - 150.0,
            H - M - 15.0 - 14.0 * k as f64,
            curve.auc
        );
    }
    s += "</svg>\n";
    s
}
