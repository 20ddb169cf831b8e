use super::{ConnectivityMatrix, Walk};
use crate::scalar::Scalar;

/// Lazily yields every node sequence of length `depth + 1` whose
/// consecutive transitions are supported, in lexicographic order.
pub struct StructuralWalks {
    successors: Vec<Vec<usize>>,
    depth: usize,
    n: usize,
    // cursor[i] indexes into the candidate list for position i
    cursor: Vec<usize>,
    nodes: Vec<usize>,
    started: bool,
    done: bool,
}

impl StructuralWalks {
    fn candidates(&self, pos: usize) -> usize {
        if pos == 0 {
            self.n
        } else {
            self.successors[self.nodes[pos - 1]].len()
        }
    }

    fn node_at(&self, pos: usize, idx: usize) -> usize {
        if pos == 0 {
            idx
        } else {
            self.successors[self.nodes[pos - 1]][idx]
        }
    }

    /// Fills positions `from..=depth` with first candidates, backtracking
    /// when a prefix has no continuation.
    fn descend(&mut self, mut pos: usize) -> bool {
        loop {
            if pos > self.depth {
                return true;
            }
            if self.cursor[pos] < self.candidates(pos) {
                self.nodes[pos] = self.node_at(pos, self.cursor[pos]);
                pos += 1;
                if pos <= self.depth {
                    self.cursor[pos] = 0;
                }
            } else {
                if pos == 0 {
                    return false;
                }
                pos -= 1;
                self.cursor[pos] += 1;
            }
        }
    }
}

impl Iterator for StructuralWalks {
    type Item = Walk;

    fn next(&mut self) -> Option<Walk> {
        if self.done {
            return None;
        }
        let ok = if self.started {
            self.cursor[self.depth] += 1;
            self.descend(self.depth)
        } else {
            self.started = true;
            self.descend(0)
        };
        if ok {
            Some(Walk::new(self.nodes.clone()))
        } else {
            self.done = true;
            None
        }
    }
}

pub fn enumerate_structural_walks<S: Scalar>(conn: &ConnectivityMatrix<S>, depth: usize) -> StructuralWalks {
    assert!(depth >= 1, "walk depth must be at least 1");
    let n = conn.n();
    let successors = (0..n)
        .map(|j| (0..n).filter(|&k| conn.supports(j, k)).collect())
        .collect();
    StructuralWalks {
        successors,
        depth,
        n,
        cursor: vec![0; depth + 1],
        nodes: vec![0; depth + 1],
        started: false,
        done: false,
    }
}

/// Number of structural walks, `1ᵀ (Sᵀ)^depth 1` over the 0/1 support matrix.
pub fn count_structural_walks<S: Scalar>(conn: &ConnectivityMatrix<S>, depth: usize) -> u64 {
    let support = conn.support_matrix();
    let n = conn.n();
    let mut counts = vec![1u64; n];
    for _ in 0..depth {
        counts = (0..n)
            .map(|k| (0..n).filter(|&j| support[k][j]).map(|j| counts[j]).sum())
            .collect();
    }
    counts.iter().sum()
}

#[cfg(test)]
mod tests {
    use super::super::{ConnectivityScheme, Graph};
    use super::*;

    fn conn(g: &Graph) -> ConnectivityMatrix<f64> {
        ConnectivityMatrix::build(g, ConnectivityScheme::HalvedAdjacency).unwrap()
    }

    #[test]
    fn complete_three_nodes() {
        let g = Graph::new(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        assert_eq!(enumerate_structural_walks(&conn(&g), 2).count(), 27);
    }

    #[test]
    fn single_node() {
        let g = Graph::new(1, []).unwrap();
        let walks: Vec<_> = enumerate_structural_walks(&conn(&g), 3).collect();
        assert_eq!(walks, vec![Walk::new(vec![0, 0, 0, 0])]);
    }

    #[test]
    fn path_of_three() {
        let g = Graph::new(3, [(0, 1), (1, 2)]).unwrap();
        let c = conn(&g);
        // brute force over all 27 triples
        let mut brute = 0;
        for a in 0..3 {
            for b in 0..3 {
                for d in 0..3 {
                    if c.supports(a, b) && c.supports(b, d) {
                        brute += 1;
                    }
                }
            }
        }
        assert_eq!(brute, 17);
        let walks: Vec<_> = enumerate_structural_walks(&c, 2).collect();
        assert_eq!(walks.len(), 17);
        assert_eq!(count_structural_walks(&c, 2), 17);
        let mut sorted = walks.clone();
        sorted.sort();
        assert_eq!(sorted, walks);
    }
}
