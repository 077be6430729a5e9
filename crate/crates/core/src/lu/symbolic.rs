use std::ops::Range;

use super::options::{LeafOrdering, SolverOptions};
use crate::error::Result;
use crate::ordering::{btf_decompose, min_degree, nested_dissection, BtfForm, NdPlan, SymGraph};
use crate::sparse::{CsrMatrix, Permutation};

/// Structure of one BTF diagonal block as seen by the numeric phase.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockPlan {
    /// Global positions covered by this block.
    pub range: Range<usize>,
    /// Dissection of the block, present when it exceeded the size threshold.
    pub nd: Option<NdPlan>,
    /// Pivoting domains in block-local positions (one per dissection block,
    /// or the whole block).
    pub domains: Vec<Range<usize>>,
    /// Domain ids grouped by schedule level; domains within a level are
    /// structurally independent.
    pub domain_levels: Vec<Vec<usize>>,
    /// Initial factor storage (entries of L and U).
    pub alloc_nnz: usize,
}

impl BlockPlan {
    pub fn len(&self) -> usize {
        self.range.len()
    }

    pub fn is_empty(&self) -> bool {
        self.range.is_empty()
    }
}

/// Pattern-only analysis, reusable for any values on the same pattern.
#[derive(Debug, Clone)]
pub struct SymbolicPlan {
    pub btf: BtfForm,
    /// Composite permutations (BTF, dissection and leaf orderings).
    pub row_perm: Permutation,
    pub col_perm: Permutation,
    pub blocks: Vec<BlockPlan>,
    /// Fill-reducing ordering of every dissection leaf, block by block.
    pub leaf_perms: Vec<Vec<Permutation>>,
    pub options: SolverOptions,
    pub(crate) pattern_row_ptr: Vec<usize>,
    pub(crate) pattern_col_idx: Vec<usize>,
}

impl SymbolicPlan {
    pub fn n(&self) -> usize {
        self.row_perm.len()
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn alloc_nnz(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.alloc_nnz).collect()
    }

    pub fn matches_pattern(&self, a: &CsrMatrix) -> bool {
        a.is_square()
            && a.nrows() == self.n()
            && a.row_ptr() == self.pattern_row_ptr.as_slice()
            && a.col_idx() == self.pattern_col_idx.as_slice()
    }

    /// Scales every block's initial storage estimate (never below one entry).
    pub fn scale_allocation(&mut self, factor: f64) {
        for b in &mut self.blocks {
            b.alloc_nnz = ((b.alloc_nnz as f64 * factor).ceil() as usize).max(1);
        }
    }
}

/// Symbolic analysis: matching + BTF, dissection of large blocks, leaf
/// orderings and storage estimates.
pub fn symbolic_analyze(a: &CsrMatrix, opts: &SolverOptions) -> Result<SymbolicPlan> {
    opts.validate()?;
    let n = a.require_square()?;
    let btf = if opts.use_cardinality_matching {
        btf_decompose(a)?
    } else {
        BtfForm::trivial(n)
    };
    let b0 = a.permute(&btf.row_perm, &btf.col_perm)?;

    let mut order = Vec::with_capacity(n);
    let mut plans = Vec::with_capacity(btf.num_blocks());
    let mut leaf_perms = Vec::with_capacity(btf.num_blocks());
    for k in 0..btf.num_blocks() {
        let range = btf.block_range(k);
        let sub = b0.principal_submatrix(range.clone());
        let m = range.len();
        let nd = if m > opts.nd_threshold && opts.nd_leaves > 1 {
            Some(nested_dissection(&sub, opts.nd_leaves)?)
        } else {
            None
        };
        let base = nd.clone().unwrap_or_else(|| NdPlan::single_leaf(m));

        // local ordering: dissection order refined by each leaf's ordering
        let mut local: Vec<usize> = base.perm.order().to_vec();
        let dissected = sub.permute(&base.perm, &base.perm)?;
        let mut perms = Vec::new();
        for leaf in base.leaves() {
            let leaf_sub = dissected.principal_submatrix(leaf.range());
            let lp = leaf_order(&leaf_sub, opts.leaf_ordering)?;
            let seg: Vec<usize> = local[leaf.range()].to_vec();
            for (t, slot) in local[leaf.range()].iter_mut().enumerate() {
                *slot = seg[lp.apply_inverse(t)];
            }
            perms.push(lp);
        }
        order.extend(local.iter().map(|&v| range.start + v));

        let domains: Vec<Range<usize>> = base.blocks.iter().map(|b| b.range()).collect();
        plans.push(BlockPlan {
            range,
            nd,
            domains,
            domain_levels: base.levels.clone(),
            alloc_nnz: 0,
        });
        leaf_perms.push(perms);
    }

    let within = Permutation::from_order(order)?;
    let row_perm = btf.row_perm.then(&within)?;
    let col_perm = btf.col_perm.then(&within)?;

    let b = a.permute(&row_perm, &col_perm)?;
    for plan in &mut plans {
        let sub = b.principal_submatrix(plan.range.clone());
        plan.alloc_nnz = estimate_lu_nnz(&sub).max(sub.nnz()).max(1);
    }

    Ok(SymbolicPlan {
        btf,
        row_perm,
        col_perm,
        blocks: plans,
        leaf_perms,
        options: opts.clone(),
        pattern_row_ptr: a.row_ptr().to_vec(),
        pattern_col_idx: a.col_idx().to_vec(),
    })
}

fn leaf_order(leaf: &CsrMatrix, ordering: LeafOrdering) -> Result<Permutation> {
    match ordering {
        LeafOrdering::MinDegree => min_degree(leaf),
        LeafOrdering::NestedDissection => {
            let pieces = (leaf.nrows() / 16).max(1);
            let leaves = if pieces.is_power_of_two() {
                pieces
            } else {
                pieces.next_power_of_two() / 2
            };
            Ok(nested_dissection(leaf, leaves)?.perm)
        }
    }
}

/// `nnz(L) + nnz(U)` of a no-pivoting LU on the pattern of `B + B^T`,
/// from the elimination tree and row subtrees of its Cholesky factor.
pub(crate) fn estimate_lu_nnz(block: &CsrMatrix) -> usize {
    let m = block.nrows();
    let g = SymGraph::from_pattern(block);
    let mut parent = vec![usize::MAX; m];
    let mut ancestor = vec![usize::MAX; m];
    for i in 0..m {
        for &k in g.neighbors(i) {
            if k >= i {
                break;
            }
            let mut r = k;
            while ancestor[r] != usize::MAX && ancestor[r] != i {
                let next = ancestor[r];
                ancestor[r] = i;
                r = next;
            }
            if ancestor[r] == usize::MAX {
                ancestor[r] = i;
                parent[r] = i;
            }
        }
    }
    let mut mark = vec![usize::MAX; m];
    let mut strict_lower = 0usize;
    for i in 0..m {
        mark[i] = i;
        for &k in g.neighbors(i) {
            if k >= i {
                break;
            }
            let mut r = k;
            while r != usize::MAX && mark[r] != i {
                mark[r] = i;
                strict_lower += 1;
                r = parent[r];
            }
        }
    }
    2 * strict_lower + m
}
