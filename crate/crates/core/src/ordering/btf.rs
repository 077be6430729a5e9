use super::matching::max_cardinality_matching;
use crate::error::Result;
use crate::sparse::{CsrMatrix, Permutation};

/// Block lower triangular form of a square matrix.
///
/// `permute(A, row_perm, col_perm)` has nonzero diagonal and every structural
/// entry `(i, j)` satisfies `block(i) >= block(j)`. Each diagonal block is
/// irreducible.
#[derive(Debug, Clone, PartialEq)]
pub struct BtfForm {
    pub row_perm: Permutation,
    pub col_perm: Permutation,
    /// `num_blocks + 1` strictly increasing offsets from 0 to n.
    pub block_offsets: Vec<usize>,
}

impl BtfForm {
    pub fn trivial(n: usize) -> Self {
        Self {
            row_perm: Permutation::identity(n),
            col_perm: Permutation::identity(n),
            block_offsets: if n == 0 { vec![0] } else { vec![0, n] },
        }
    }

    pub fn num_blocks(&self) -> usize {
        self.block_offsets.len() - 1
    }

    pub fn block_range(&self, k: usize) -> std::ops::Range<usize> {
        self.block_offsets[k]..self.block_offsets[k + 1]
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.block_offsets.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Block id of every permuted position.
    pub fn block_of_position(&self) -> Vec<usize> {
        let mut out = vec![0; *self.block_offsets.last().unwrap()];
        for k in 0..self.num_blocks() {
            for p in self.block_range(k) {
                out[p] = k;
            }
        }
        out
    }
}

/// Dulmage–Mendelsohn fine decomposition: a maximum matching puts structural
/// nonzeros on the diagonal, then the strongly connected components of the
/// matched graph become the diagonal blocks, emitted in an order that makes
/// the permuted matrix block lower triangular.
pub fn btf_decompose(pattern: &CsrMatrix) -> Result<BtfForm> {
    let n = pattern.require_square()?;
    let matching = max_cardinality_matching(pattern)?;
    if !matching.is_perfect() {
        return Err(matching.singular_error());
    }
    let row_for_col: Vec<usize> = matching.row_for_col().iter().map(|r| r.unwrap()).collect();

    // node i (row i, paired with its matched column) depends on node
    // row_for_col[c] for every other entry (i, c) in row i
    let succ = |i: usize| pattern.row(i).0.iter().map(|&c| row_for_col[c]).filter(move |&j| j != i);

    let components = tarjan_scc(n, |i, out: &mut Vec<usize>| out.extend(succ(i)));

    let mut position = vec![0usize; n];
    let mut block_offsets = vec![0];
    let mut next = 0;
    for mut comp in components {
        comp.sort_unstable();
        for v in comp {
            position[v] = next;
            next += 1;
        }
        block_offsets.push(next);
    }
    let row_perm = Permutation::new(position.clone())?;
    let col_perm = Permutation::new((0..n).map(|c| position[row_for_col[c]]).collect())?;
    Ok(BtfForm {
        row_perm,
        col_perm,
        block_offsets,
    })
}

/// Iterative Tarjan. Components come out with every component reachable from
/// `C` emitted before `C`. Roots are tried in increasing order.
pub(crate) fn tarjan_scc(n: usize, mut successors: impl FnMut(usize, &mut Vec<usize>)) -> Vec<Vec<usize>> {
    const UNVISITED: usize = usize::MAX;
    let mut index = vec![UNVISITED; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut components = Vec::new();
    let mut counter = 0;

    // frame: (node, successor list, cursor)
    let mut call: Vec<(usize, Vec<usize>, usize)> = Vec::new();
    for root in 0..n {
        if index[root] != UNVISITED {
            continue;
        }
        let mut s = Vec::new();
        successors(root, &mut s);
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        call.push((root, s, 0));

        while let Some(frame) = call.last_mut() {
            let v = frame.0;
            if frame.2 < frame.1.len() {
                let w = frame.1[frame.2];
                frame.2 += 1;
                if index[w] == UNVISITED {
                    let mut s = Vec::new();
                    successors(w, &mut s);
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, s, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(parent) = call.last() {
                    let p = parent.0;
                    low[p] = low[p].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    components.push(comp);
                }
            }
        }
    }
    components
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    fn pattern(n: usize, entries: &[(usize, usize)]) -> CsrMatrix {
        let t: Vec<_> = entries.iter().map(|&(i, j)| (i, j, 1.0)).collect();
        CsrMatrix::from_triplets(n, n, &t).unwrap()
    }

    #[test]
    fn diagonal_is_all_singletons() {
        let f = btf_decompose(&CsrMatrix::identity(5)).unwrap();
        assert_eq!(f.num_blocks(), 5);
        assert!(f.row_perm.is_identity() && f.col_perm.is_identity());
    }

    #[test]
    fn small_example_block_lower() {
        let a = pattern(4, &[(0, 0), (0, 1), (1, 0), (1, 1), (2, 2), (2, 0), (3, 3)]);
        let f = btf_decompose(&a).unwrap();
        assert_eq!(f.block_offsets, vec![0, 2, 3, 4]);
        let b = a.permute(&f.row_perm, &f.col_perm).unwrap();
        let blk = f.block_of_position();
        for i in 0..4 {
            for &j in b.row(i).0 {
                assert!(blk[i] >= blk[j]);
            }
        }
    }

    #[test]
    fn dense_is_one_block() {
        let mut e = Vec::new();
        for i in 0..4 {
            for j in 0..4 {
                e.push((i, j));
            }
        }
        assert_eq!(btf_decompose(&pattern(4, &e)).unwrap().num_blocks(), 1);
    }

    #[test]
    fn upper_triangular_becomes_lower() {
        let a = pattern(3, &[(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)]);
        let f = btf_decompose(&a).unwrap();
        assert_eq!(f.num_blocks(), 3);
        let b = a.permute(&f.row_perm, &f.col_perm).unwrap();
        assert!(b.is_lower_triangular());
    }

    #[test]
    fn singular_pattern_errors() {
        let a = pattern(2, &[(0, 0), (1, 0)]);
        assert!(matches!(btf_decompose(&a), Err(Error::StructurallySingular { .. })));
    }
}
