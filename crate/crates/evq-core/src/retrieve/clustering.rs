//! Event clustering for the popularity signal: single-link connected
//! components over the cosine-threshold graph.

use std::collections::HashMap;

use crate::embedding::dot;
use crate::{Error, Result};

use super::EventIndex;

/// Cluster assignment over index rows. Cluster ids are dense and ordered
/// by first appearance, so the labeling is deterministic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventClusters {
    /// Row → cluster id.
    pub assignment: Vec<usize>,
    /// Cluster id → member count.
    pub sizes: Vec<usize>,
}

impl EventClusters {
    pub fn cluster_of_row(&self, row: usize) -> usize {
        self.assignment[row]
    }

    pub fn size_of_row(&self, row: usize) -> usize {
        self.sizes[self.assignment[row]]
    }

    /// event id → cluster size, for feature extraction.
    pub fn size_by_id<'a>(&self, index: &'a EventIndex) -> HashMap<&'a str, usize> {
        index
            .ids
            .iter()
            .enumerate()
            .map(|(row, id)| (id.as_str(), self.size_of_row(row)))
            .collect()
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, i: usize) -> usize {
        if self.0[i] != i {
            let root = self.find(self.0[i]);
            self.0[i] = root;
        }
        self.0[i]
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Single-link components: rows are connected when cosine ≥ `theta`.
pub fn cluster_events(index: &EventIndex, theta: f64) -> Result<EventClusters> {
    if !(-1.0 < theta && theta <= 1.0) {
        return Err(Error::invalid(format!(
            "cluster threshold must lie in (-1, 1], got {theta}"
        )));
    }
    let n = index.len();
    let mut uf = UnionFind::new(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if dot(index.vector(i), index.vector(j)) >= theta {
                uf.union(i, j);
            }
        }
    }
    let mut label_of_root: HashMap<usize, usize> = HashMap::new();
    let mut assignment = Vec::with_capacity(n);
    let mut sizes = Vec::new();
    for i in 0..n {
        let root = uf.find(i);
        let next = label_of_root.len();
        let label = *label_of_root.entry(root).or_insert(next);
        if label == sizes.len() {
            sizes.push(0);
        }
        sizes[label] += 1;
        assignment.push(label);
    }
    Ok(EventClusters { assignment, sizes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::EncoderModel;
    use crate::reformulate::EventPhrase;
    use crate::retrieve::{build_index, DualTower};

    fn axis_tower() -> DualTower {
        let mut m = EncoderModel::init(["x", "y", "z"], 3, 0);
        let (rx, ry, rz) = (m.row_of("x"), m.row_of("y"), m.row_of("z"));
        m.emb[rx] = vec![1.0, 0.0, 0.0];
        m.emb[ry] = vec![0.0, 1.0, 0.0];
        m.emb[rz] = vec![0.0, 0.0, 1.0];
        DualTower::shared(m)
    }

    fn index_for(texts: &[&str]) -> EventIndex {
        let events: Vec<EventPhrase> = texts
            .iter()
            .enumerate()
            .map(|(i, t)| EventPhrase {
                event_id: format!("e{i}"),
                text: (*t).to_string(),
                source_headline_id: format!("h{i}"),
                found_ts: 0,
            })
            .collect();
        build_index(&axis_tower(), &events, false, 10, 0).unwrap()
    }

    #[test]
    fn identical_vectors_form_one_cluster() {
        let idx = index_for(&["x", "x", "x", "x"]);
        let c = cluster_events(&idx, 0.85).unwrap();
        assert_eq!(c.sizes, vec![4]);
        assert!(c.assignment.iter().all(|&a| a == 0));
    }

    #[test]
    fn orthogonal_vectors_stay_singletons() {
        let idx = index_for(&["x", "y", "z"]);
        let c = cluster_events(&idx, 0.85).unwrap();
        assert_eq!(c.sizes, vec![1, 1, 1]);
    }

    #[test]
    fn single_link_transitivity_joins_chains() {
        // cos(a,b) ≈ 0.949 and cos(b,c) ≈ 0.894 clear the threshold;
        // cos(a,c) ≈ 0.707 does not. Single-link still merges all three.
        let idx = index_for(&["x", "x x x y", "x y"]);
        let c = cluster_events(&idx, 0.85).unwrap();
        assert_eq!(c.sizes, vec![3]);
        // direct edge check
        assert!(dot(idx.vector(0), idx.vector(2)) < 0.85);
    }

    #[test]
    fn assignment_permutation_invariant() {
        let texts = ["x", "y", "x y", "z"];
        let idx1 = index_for(&texts);
        let c1 = cluster_events(&idx1, 0.85).unwrap();
        let mut rev = texts;
        rev.reverse();
        let idx2 = index_for(&rev);
        let c2 = cluster_events(&idx2, 0.85).unwrap();
        // same multiset of cluster sizes regardless of input order
        let mut s1 = c1.sizes.clone();
        let mut s2 = c2.sizes.clone();
        s1.sort();
        s2.sort();
        assert_eq!(s1, s2);
    }

    #[test]
    fn size_by_id_maps_rows() {
        let idx = index_for(&["x", "x", "y"]);
        let c = cluster_events(&idx, 0.85).unwrap();
        let sizes = c.size_by_id(&idx);
        assert_eq!(sizes["e0"], 2);
        assert_eq!(sizes["e1"], 2);
        assert_eq!(sizes["e2"], 1);
    }
}
