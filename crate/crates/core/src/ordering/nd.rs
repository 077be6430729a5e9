use std::collections::VecDeque;
use std::ops::Range;

use serde::Serialize;

use super::graph::SymGraph;
use crate::error::{Error, Result};
use crate::sparse::{CsrMatrix, Permutation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NdBlockKind {
    Leaf,
    Separator,
}

/// One node of the dissection tree, a contiguous range of the permuted order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NdBlock {
    pub start: usize,
    pub end: usize,
    pub kind: NdBlockKind,
    /// Schedule level: leaves are 0, a separator sits one above its highest child.
    pub level: usize,
    pub children: Option<[usize; 2]>,
    pub parent: Option<usize>,
}

impl NdBlock {
    pub fn range(&self) -> Range<usize> {
        self.start..self.end
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

/// Nested dissection ordering with its block tree and level schedule.
///
/// Blocks are stored in order of their ranges (post-order: left subtree,
/// right subtree, separator).
#[derive(Debug, Clone, PartialEq)]
pub struct NdPlan {
    pub perm: Permutation,
    pub blocks: Vec<NdBlock>,
    /// `levels[l]` lists the block ids scheduled at level `l`.
    pub levels: Vec<Vec<usize>>,
    pub num_leaves: usize,
}

impl NdPlan {
    pub fn single_leaf(n: usize) -> Self {
        Self {
            perm: Permutation::identity(n),
            blocks: vec![NdBlock {
                start: 0,
                end: n,
                kind: NdBlockKind::Leaf,
                level: 0,
                children: None,
                parent: None,
            }],
            levels: vec![vec![0]],
            num_leaves: 1,
        }
    }

    pub fn leaves(&self) -> impl Iterator<Item = &NdBlock> {
        self.blocks.iter().filter(|b| b.kind == NdBlockKind::Leaf)
    }
}

/// Recursive level-structure bisection of `A + A^T` into `num_leaves` leaves.
///
/// Each split roots a breadth-first level structure at a pseudo-peripheral
/// vertex and takes the level that best balances the two sides as the vertex
/// separator. Disconnected pieces are split along components with an empty
/// separator. Pieces that cannot be split further stay leaves.
pub fn nested_dissection(pattern: &CsrMatrix, num_leaves: usize) -> Result<NdPlan> {
    let n = pattern.require_square()?;
    if num_leaves == 0 || !num_leaves.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(num_leaves));
    }
    let graph = SymGraph::from_pattern(pattern);
    let mut ctx = Dissector {
        graph: &graph,
        mark: vec![usize::MAX; n],
        dist: vec![usize::MAX; n],
        tag: 0,
        order: Vec::with_capacity(n),
        blocks: Vec::new(),
    };
    let depth = num_leaves.trailing_zeros();
    ctx.build((0..n).collect(), depth);

    let Dissector { order, mut blocks, .. } = ctx;
    // blocks were pushed in post-order, which is also range order
    let mut ids: Vec<usize> = (0..blocks.len()).collect();
    ids.sort_by_key(|&b| (blocks[b].start, blocks[b].end, blocks[b].kind == NdBlockKind::Separator));
    let mut remap = vec![0; blocks.len()];
    for (new, &old) in ids.iter().enumerate() {
        remap[old] = new;
    }
    let mut sorted: Vec<NdBlock> = ids.iter().map(|&b| blocks[b].clone()).collect();
    for b in sorted.iter_mut() {
        b.children = b.children.map(|[l, r]| [remap[l], remap[r]]);
        b.parent = b.parent.map(|p| remap[p]);
    }
    blocks.clear();

    let nlevels = sorted.iter().map(|b| b.level).max().unwrap_or(0) + 1;
    let mut levels = vec![Vec::new(); nlevels];
    for (id, b) in sorted.iter().enumerate() {
        levels[b.level].push(id);
    }
    let num_leaves = sorted.iter().filter(|b| b.kind == NdBlockKind::Leaf).count();
    Ok(NdPlan {
        perm: Permutation::from_order(order)?,
        blocks: sorted,
        levels,
        num_leaves,
    })
}

struct Dissector<'a> {
    graph: &'a SymGraph,
    mark: Vec<usize>,
    dist: Vec<usize>,
    tag: usize,
    order: Vec<usize>,
    blocks: Vec<NdBlock>,
}

impl Dissector<'_> {
    fn build(&mut self, verts: Vec<usize>, depth: u32) -> usize {
        if depth > 0 {
            if let Some((left, right, sep)) = self.split(&verts) {
                let l = self.build(left, depth - 1);
                let r = self.build(right, depth - 1);
                let start = self.order.len();
                self.order.extend_from_slice(&sep);
                let level = 1 + self.blocks[l].level.max(self.blocks[r].level);
                let id = self.blocks.len();
                self.blocks.push(NdBlock {
                    start,
                    end: self.order.len(),
                    kind: NdBlockKind::Separator,
                    level,
                    children: Some([l, r]),
                    parent: None,
                });
                self.blocks[l].parent = Some(id);
                self.blocks[r].parent = Some(id);
                return id;
            }
        }
        let start = self.order.len();
        self.order.extend_from_slice(&verts);
        self.blocks.push(NdBlock {
            start,
            end: self.order.len(),
            kind: NdBlockKind::Leaf,
            level: 0,
            children: None,
            parent: None,
        });
        self.blocks.len() - 1
    }

    /// BFS over the subgraph induced by the current tag. Returns the visit
    /// order; `self.dist` holds the level of every visited vertex.
    fn bfs(&mut self, root: usize, visit_tag: usize) -> Vec<usize> {
        let mut seen = vec![root];
        self.dist[root] = 0;
        self.mark[root] = visit_tag;
        let mut q = VecDeque::from([root]);
        while let Some(v) = q.pop_front() {
            for &w in self.graph.neighbors(v) {
                if self.mark[w] == visit_tag - 1 {
                    self.mark[w] = visit_tag;
                    self.dist[w] = self.dist[v] + 1;
                    seen.push(w);
                    q.push_back(w);
                }
            }
        }
        seen
    }

    /// Marks `verts` as the active subgraph and returns a fresh visit tag.
    fn activate(&mut self, verts: &[usize]) -> usize {
        self.tag += 2;
        for &v in verts {
            self.mark[v] = self.tag - 1;
        }
        self.tag
    }

    fn split(&mut self, verts: &[usize]) -> Option<(Vec<usize>, Vec<usize>, Vec<usize>)> {
        if verts.len() < 3 {
            return None;
        }
        let t = self.activate(verts);
        let first = self.bfs(verts[0], t);
        if first.len() < verts.len() {
            return Some(self.split_components(verts));
        }

        // pseudo-peripheral root: walk to a farthest min-degree vertex until
        // the eccentricity stops growing
        let mut root = verts[0];
        let mut reach = first;
        let mut ecc = reach.iter().map(|&v| self.dist[v]).max().unwrap();
        loop {
            let cand = reach
                .iter()
                .copied()
                .filter(|&v| self.dist[v] == ecc)
                .min_by_key(|&v| (self.graph.degree(v), v))
                .unwrap();
            let t = self.activate(verts);
            let r2 = self.bfs(cand, t);
            let e2 = r2.iter().map(|&v| self.dist[v]).max().unwrap();
            if e2 > ecc {
                root = cand;
                reach = r2;
                ecc = e2;
            } else {
                let t = self.activate(verts);
                reach = self.bfs(root, t);
                break;
            }
        }
        if ecc < 2 {
            return None;
        }

        let mut counts = vec![0usize; ecc + 1];
        for &v in &reach {
            counts[self.dist[v]] += 1;
        }
        let total = verts.len();
        let mut best = None;
        let mut below = 0usize;
        for s in 1..ecc {
            below += counts[s - 1];
            let above = total - below - counts[s];
            let score = (below.max(above), counts[s]);
            if best.is_none_or(|(bs, _)| score < bs) {
                best = Some((score, s));
            }
        }
        let (_, s) = best?;
        let mut left = Vec::new();
        let mut right = Vec::new();
        let mut sep = Vec::new();
        for &v in verts {
            match self.dist[v].cmp(&s) {
                std::cmp::Ordering::Less => left.push(v),
                std::cmp::Ordering::Equal => sep.push(v),
                std::cmp::Ordering::Greater => right.push(v),
            }
        }
        Some((left, right, sep))
    }

    fn split_components(&mut self, verts: &[usize]) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
        let t = self.activate(verts);
        let mut comps: Vec<Vec<usize>> = Vec::new();
        for &v in verts {
            if self.mark[v] == t - 1 {
                let mut c = self.bfs(v, t);
                c.sort_unstable();
                comps.push(c);
            }
        }
        let half = verts.len().div_ceil(2);
        let mut left = Vec::new();
        let mut right = Vec::new();
        for c in comps {
            if left.is_empty() || left.len() + c.len() <= half && right.is_empty() {
                left.extend(c);
            } else {
                right.extend(c);
            }
        }
        left.sort_unstable();
        right.sort_unstable();
        (left, right, Vec::new())
    }
}
