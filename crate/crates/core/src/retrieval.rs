//! Exhaustive Hamming ranking and mAP@all / precision@r evaluation.
//!
//! Rankings are fully deterministic: ascending Hamming distance, ties broken
//! by ascending node id. Every query is ranked against all other nodes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::codes::BinaryCodes;
use crate::error::{Error, Result};
use crate::par;

pub const TIE_POLICY: &str = "ties broken by ascending node id";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RetrievalResult {
    pub query: usize,
    /// `(node id, distance)` over all other nodes.
    pub ranked: Vec<(usize, u32)>,
}

/// Bucket sort by distance; ids within a bucket stay ascending.
fn ranking(codes: &BinaryCodes, query: usize) -> Vec<(usize, u32)> {
    let n = codes.n();
    let dist: Vec<u32> = (0..n).map(|j| codes.distance(query, j)).collect();
    let mut counts = vec![0usize; codes.bits() + 2];
    for (j, &d) in dist.iter().enumerate() {
        if j != query {
            counts[d as usize + 1] += 1;
        }
    }
    for b in 1..counts.len() {
        counts[b] += counts[b - 1];
    }
    let mut ranked = vec![(0usize, 0u32); n.saturating_sub(1)];
    for (j, &d) in dist.iter().enumerate() {
        if j != query {
            ranked[counts[d as usize]] = (j, d);
            counts[d as usize] += 1;
        }
    }
    ranked
}

pub fn rank_all(codes: &BinaryCodes, query: usize) -> Result<RetrievalResult> {
    if query >= codes.n() {
        return Err(Error::IndexOutOfRange {
            index: query,
            n: codes.n(),
        });
    }
    Ok(RetrievalResult {
        query,
        ranked: ranking(codes, query),
    })
}

fn check_labels(codes: &BinaryCodes, labels: &[u32]) -> Result<()> {
    if labels.len() != codes.n() {
        return Err(Error::LabelCount {
            expected: codes.n(),
            got: labels.len(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapResult {
    pub map: f64,
    pub evaluated_queries: usize,
    /// Queries whose class has no other member.
    pub skipped_queries: usize,
}

/// Average precision of one query, `None` when it has no relevant items.
fn average_precision(codes: &BinaryCodes, labels: &[u32], q: usize) -> Option<f64> {
    let ranked = ranking(codes, q);
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (r, &(j, _)) in ranked.iter().enumerate() {
        if labels[j] == labels[q] {
            hits += 1;
            sum += hits as f64 / (r + 1) as f64;
        }
    }
    (hits > 0).then(|| sum / hits as f64)
}

/// Mean average precision over every node as a query.
pub fn map_at_all(codes: &BinaryCodes, labels: &[u32]) -> Result<MapResult> {
    check_labels(codes, labels)?;
    let aps = par::map_range(codes.n(), |q| average_precision(codes, labels, q));
    let mut sum = 0.0;
    let mut evaluated = 0;
    for ap in aps.iter().flatten() {
        sum += ap;
        evaluated += 1;
    }
    Ok(MapResult {
        map: if evaluated > 0 { sum / evaluated as f64 } else { 0.0 },
        evaluated_queries: evaluated,
        skipped_queries: codes.n() - evaluated,
    })
}

/// Mean over queries of the fraction of the top `r` that share the label.
pub fn precision_at(codes: &BinaryCodes, labels: &[u32], r: usize) -> Result<f64> {
    check_labels(codes, labels)?;
    let n = codes.n();
    if r == 0 || r + 1 > n {
        return Err(Error::Dimension(format!("precision cutoff {r} outside [1, {}]", n.saturating_sub(1))));
    }
    let per_query = par::map_range(n, |q| {
        ranking(codes, q)[..r]
            .iter()
            .filter(|&&(j, _)| labels[j] == labels[q])
            .count() as f64
            / r as f64
    });
    Ok(per_query.iter().sum::<f64>() / n as f64)
}

/// JSON evaluation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub map_at_all: f64,
    /// Keyed by cutoff; cutoffs beyond `n − 1` are omitted.
    pub precision_at: BTreeMap<usize, f64>,
    pub skipped_queries: usize,
    pub bits: usize,
    pub n: usize,
    pub tie_policy: String,
}

pub const DEFAULT_CUTOFFS: [usize; 3] = [10, 100, 1000];

pub fn evaluate(codes: &BinaryCodes, labels: &[u32], cutoffs: &[usize]) -> Result<EvalReport> {
    let map = map_at_all(codes, labels)?;
    let mut precision = BTreeMap::new();
    for &r in cutoffs {
        if r >= 1 && r < codes.n() {
            precision.insert(r, precision_at(codes, labels, r)?);
        }
    }
    Ok(EvalReport {
        map_at_all: map.map,
        precision_at: precision,
        skipped_queries: map.skipped_queries,
        bits: codes.bits(),
        n: codes.n(),
        tie_policy: TIE_POLICY.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DenseMatrix;

    fn codes<R: AsRef<[f64]>>(rows: &[R]) -> BinaryCodes {
        BinaryCodes::pack(&DenseMatrix::from_rows(rows).unwrap()).unwrap()
    }

    #[test]
    fn two_nodes_single_entry() {
        let c = codes(&[&[1.0, -1.0], &[1.0, 1.0]]);
        assert_eq!(rank_all(&c, 0).unwrap().ranked, vec![(1, 1)]);
        assert!(rank_all(&c, 2).is_err());
    }

    #[test]
    fn identical_codes_rank_by_id() {
        let c = codes(&[[1.0]; 4]);
        let r = rank_all(&c, 2).unwrap();
        assert_eq!(r.ranked, vec![(0, 0), (1, 0), (3, 0)]);
    }

    #[test]
    fn hand_computed_map_with_ties() {
        let c = codes(&[[1.0]; 4]);
        let labels = [0, 0, 1, 1];
        // rankings: q0 (1,2,3), q1 (0,2,3), q2 (0,1,3), q3 (0,1,2)
        let aps: Vec<_> = (0..4).map(|q| average_precision(&c, &labels, q).unwrap()).collect();
        assert_eq!(aps, vec![1.0, 1.0, 1.0 / 3.0, 1.0 / 3.0]);
        let m = map_at_all(&c, &labels).unwrap();
        assert!((m.map - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn perfect_separation_gives_one() {
        let c = codes(&[&[1.0, 1.0], &[1.0, 1.0], &[-1.0, -1.0], &[-1.0, -1.0], &[-1.0, -1.0]]);
        let labels = [3, 3, 7, 7, 7];
        assert_eq!(map_at_all(&c, &labels).unwrap().map, 1.0);
        assert_eq!(precision_at(&c, &labels, 1).unwrap(), 1.0);
    }

    #[test]
    fn singleton_classes_are_skipped() {
        let c = codes(&[&[1.0], &[1.0], &[-1.0]]);
        let m = map_at_all(&c, &[0, 0, 1]).unwrap();
        assert_eq!(m.skipped_queries, 1);
        assert_eq!(m.evaluated_queries, 2);
        assert_eq!(m.map, 1.0);
    }

    #[test]
    fn single_class_precision_is_one() {
        let c = codes(&[&[1.0, -1.0], &[-1.0, 1.0], &[1.0, 1.0], &[-1.0, -1.0]]);
        for r in 1..4 {
            assert_eq!(precision_at(&c, &[5; 4], r).unwrap(), 1.0);
        }
        assert!(precision_at(&c, &[5; 4], 4).is_err());
        assert!(precision_at(&c, &[5; 4], 0).is_err());
    }

    #[test]
    fn label_count_must_match() {
        let c = codes(&[[1.0]; 3]);
        assert!(matches!(map_at_all(&c, &[0, 1]), Err(Error::LabelCount { .. })));
    }

    #[test]
    fn report_omits_large_cutoffs() {
        let c = codes(&[&[1.0], &[1.0], &[-1.0], &[-1.0]]);
        let rep = evaluate(&c, &[0, 0, 1, 1], &DEFAULT_CUTOFFS).unwrap();
        assert!(rep.precision_at.is_empty());
        assert_eq!(rep.map_at_all, 1.0);
        assert_eq!((rep.n, rep.bits), (4, 1));
    }
}
