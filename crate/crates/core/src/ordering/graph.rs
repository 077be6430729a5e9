use crate::sparse::CsrMatrix;

/// Undirected adjacency structure of `A + A^T` without self loops, in
/// compressed form with sorted neighbor lists.
#[derive(Debug, Clone)]
pub(crate) struct SymGraph {
    ptr: Vec<usize>,
    adj: Vec<usize>,
}

impl SymGraph {
    pub(crate) fn from_pattern(a: &CsrMatrix) -> Self {
        let n = a.nrows();
        let mut lists: Vec<Vec<usize>> = vec![Vec::new(); n];
        for i in 0..n {
            for &j in a.row(i).0 {
                if i != j {
                    lists[i].push(j);
                    lists[j].push(i);
                }
            }
        }
        let mut ptr = Vec::with_capacity(n + 1);
        let mut adj = Vec::new();
        ptr.push(0);
        for mut l in lists {
            l.sort_unstable();
            l.dedup();
            adj.extend_from_slice(&l);
            ptr.push(adj.len());
        }
        Self { ptr, adj }
    }

    #[inline]
    pub(crate) fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[self.ptr[v]..self.ptr[v + 1]]
    }

    pub(crate) fn degree(&self, v: usize) -> usize {
        self.ptr[v + 1] - self.ptr[v]
    }
}
