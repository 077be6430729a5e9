use std::collections::BTreeSet;

use super::graph::SymGraph;
use crate::error::Result;
use crate::sparse::{CsrMatrix, Permutation};

/// Classical (exact) minimum degree ordering of `A + A^T`.
///
/// Works on the explicit elimination graph: eliminating a vertex turns its
/// neighborhood into a clique. Ties go to the smallest original index.
/// Returns `perm[v] = elimination step of v`.
pub fn min_degree(pattern: &CsrMatrix) -> Result<Permutation> {
    let n = pattern.require_square()?;
    let g = SymGraph::from_pattern(pattern);
    let mut adj: Vec<Vec<usize>> = (0..n).map(|v| g.neighbors(v).to_vec()).collect();
    let mut queue: BTreeSet<(usize, usize)> = (0..n).map(|v| (adj[v].len(), v)).collect();
    let mut order = Vec::with_capacity(n);
    let mut merged = Vec::new();

    while let Some((_, v)) = queue.pop_first() {
        order.push(v);
        let nbrs = std::mem::take(&mut adj[v]);
        for &u in &nbrs {
            queue.remove(&(adj[u].len(), u));
            merged.clear();
            let (a, b) = (&adj[u], &nbrs);
            let (mut i, mut j) = (0, 0);
            while i < a.len() || j < b.len() {
                let x = match (a.get(i), b.get(j)) {
                    (Some(&x), Some(&y)) if x == y => {
                        i += 1;
                        j += 1;
                        x
                    }
                    (Some(&x), Some(&y)) if x < y => {
                        i += 1;
                        x
                    }
                    (Some(_), Some(&y)) => {
                        j += 1;
                        y
                    }
                    (Some(&x), None) => {
                        i += 1;
                        x
                    }
                    (None, Some(&y)) => {
                        j += 1;
                        y
                    }
                    (None, None) => unreachable!(),
                };
                if x != u && x != v {
                    merged.push(x);
                }
            }
            std::mem::swap(&mut adj[u], &mut merged);
            queue.insert((adj[u].len(), u));
        }
    }
    Permutation::from_order(order)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_keeps_natural_order() {
        assert!(min_degree(&CsrMatrix::identity(6)).unwrap().is_identity());
    }

    #[test]
    fn star_eliminates_spokes_first() {
        let center = 4;
        let mut t = vec![(center, center, 1.0)];
        for s in 0..4 {
            t.push((s, s, 1.0));
            t.push((s, center, 1.0));
            t.push((center, s, 1.0));
        }
        let a = CsrMatrix::from_triplets(5, 5, &t).unwrap();
        let p = min_degree(&a).unwrap();
        assert_eq!(p.apply(center), 4);
    }
}
