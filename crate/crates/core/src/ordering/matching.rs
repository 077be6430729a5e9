use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Column-to-row assignment over structural nonzeros.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matching {
    row_for_col: Vec<Option<usize>>,
    cardinality: usize,
}

impl Matching {
    fn from_rows(row_for_col: Vec<Option<usize>>) -> Self {
        let cardinality = row_for_col.iter().filter(|r| r.is_some()).count();
        Self {
            row_for_col,
            cardinality,
        }
    }

    pub fn row_for_col(&self) -> &[Option<usize>] {
        &self.row_for_col
    }

    pub fn cardinality(&self) -> usize {
        self.cardinality
    }

    pub fn is_perfect(&self) -> bool {
        self.cardinality == self.row_for_col.len()
    }

    /// Inverse assignment, `col_for_row[r]`.
    pub fn col_for_row(&self) -> Vec<Option<usize>> {
        let mut out = vec![None; self.row_for_col.len()];
        for (c, r) in self.row_for_col.iter().enumerate() {
            if let Some(r) = r {
                out[*r] = Some(c);
            }
        }
        out
    }

    pub fn unmatched_columns(&self) -> Vec<usize> {
        self.row_for_col
            .iter()
            .enumerate()
            .filter_map(|(c, r)| r.is_none().then_some(c))
            .collect()
    }

    pub(crate) fn singular_error(&self) -> Error {
        Error::StructurallySingular {
            n: self.row_for_col.len(),
            matched: self.cardinality,
            deficient: self.unmatched_columns(),
        }
    }
}

/// Maximum cardinality matching by depth-first augmenting paths.
///
/// Columns are processed in order and rows are scanned in increasing index
/// order, so the result is deterministic.
pub fn max_cardinality_matching(pattern: &CsrMatrix) -> Result<Matching> {
    let n = pattern.require_square()?;
    let csc = pattern.to_csc();
    let mut row_match: Vec<Option<usize>> = vec![None; n];
    let mut col_match: Vec<Option<usize>> = vec![None; n];
    let mut visited = vec![usize::MAX; n];
    let mut stack: Vec<(usize, usize)> = Vec::new();
    let mut via_row: Vec<usize> = Vec::new();

    for c in 0..n {
        // cheap assignment
        if let Some(&r) = csc.col(c).0.iter().find(|&&r| row_match[r].is_none()) {
            row_match[r] = Some(c);
            col_match[c] = Some(r);
            continue;
        }
        stack.clear();
        via_row.clear();
        stack.push((c, 0));
        while let Some(top) = stack.last_mut() {
            let col = top.0;
            let rows = csc.col(col).0;
            if top.1 == rows.len() {
                stack.pop();
                via_row.pop();
                continue;
            }
            let r = rows[top.1];
            top.1 += 1;
            if visited[r] == c {
                continue;
            }
            visited[r] = c;
            match row_match[r] {
                None => {
                    let last = stack.len() - 1;
                    let mut assign = |col: usize, row: usize| {
                        col_match[col] = Some(row);
                        row_match[row] = Some(col);
                    };
                    assign(stack[last].0, r);
                    for i in (0..last).rev() {
                        assign(stack[i].0, via_row[i]);
                    }
                    break;
                }
                Some(next) => {
                    via_row.push(r);
                    stack.push((next, 0));
                }
            }
        }
    }
    Ok(Matching::from_rows(col_match))
}

#[derive(Clone, Copy, PartialEq)]
struct HeapItem {
    dist: f64,
    row: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    // BinaryHeap is a max-heap; invert so the smallest (dist, row) pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.row.cmp(&self.row))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Perfect matching maximizing the product of matched magnitudes.
///
/// Solves the assignment problem with costs `ln(max_r |a_rc|) - ln |a_rc|`
/// by successive shortest augmenting paths (Dijkstra with dual potentials).
/// Structural entries whose value is exactly zero are allowed but carry a
/// penalty larger than any achievable finite cost, so they are used only when
/// no zero-free perfect matching exists. Ties go to the smallest row index.
pub fn max_weight_matching(a: &CsrMatrix) -> Result<Matching> {
    let n = a.require_square()?;
    let structural = max_cardinality_matching(a)?;
    if !structural.is_perfect() {
        return Err(structural.singular_error());
    }
    let csc = a.to_csc();

    let mut cost = vec![0.0f64; csc.nnz()];
    let mut max_finite = 0.0f64;
    for c in 0..n {
        let r = csc.col_ptr()[c]..csc.col_ptr()[c + 1];
        let colmax = csc.values()[r.clone()].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for k in r {
            let v = csc.values()[k].abs();
            if v > 0.0 {
                cost[k] = colmax.ln() - v.ln();
                max_finite = max_finite.max(cost[k]);
            } else {
                cost[k] = f64::NAN; // patched below
            }
        }
    }
    let penalty = (n as f64 + 1.0) * (max_finite + 1.0);
    for c in cost.iter_mut() {
        if c.is_nan() {
            *c = penalty;
        }
    }

    let mut u_col = vec![0.0f64; n];
    let mut v_row = vec![0.0f64; n];
    let mut row_match: Vec<Option<usize>> = vec![None; n];
    let mut col_match: Vec<Option<usize>> = vec![None; n];

    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![usize::MAX; n];
    let mut done = vec![false; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut finalized: Vec<usize> = Vec::new();
    let mut heap = BinaryHeap::new();

    for s in 0..n {
        for &r in &touched {
            dist[r] = f64::INFINITY;
            pred[r] = usize::MAX;
            done[r] = false;
        }
        touched.clear();
        finalized.clear();
        heap.clear();

        let mut col = s;
        let mut col_dist = 0.0;
        let (sink, shortest) = loop {
            for k in csc.col_ptr()[col]..csc.col_ptr()[col + 1] {
                let r = csc.row_idx()[k];
                if done[r] {
                    continue;
                }
                let reduced = (cost[k] - u_col[col] - v_row[r]).max(0.0);
                let nd = col_dist + reduced;
                if nd < dist[r] {
                    if dist[r].is_infinite() {
                        touched.push(r);
                    }
                    dist[r] = nd;
                    pred[r] = col;
                    heap.push(HeapItem { dist: nd, row: r });
                }
            }
            let item = loop {
                match heap.pop() {
                    Some(it) if done[it.row] || it.dist > dist[it.row] => continue,
                    other => break other,
                }
            };
            // structural nonsingularity guarantees an augmenting path exists
            let item = item.expect("augmenting path exists for a structurally nonsingular matrix");
            done[item.row] = true;
            finalized.push(item.row);
            match row_match[item.row] {
                None => break (item.row, item.dist),
                Some(c2) => {
                    col = c2;
                    col_dist = item.dist;
                }
            }
        };

        // dual update keeps reduced costs non-negative and matched edges tight
        u_col[s] += shortest;
        for &r in &finalized {
            let d = dist[r];
            if d < shortest {
                v_row[r] += d - shortest;
                if let Some(c) = row_match[r] {
                    u_col[c] += shortest - d;
                }
            }
        }

        let mut r = sink;
        loop {
            let c = pred[r];
            let prev = col_match[c];
            col_match[c] = Some(r);
            row_match[r] = Some(c);
            if c == s {
                break;
            }
            r = prev.expect("interior path column is matched");
        }
    }
    Ok(Matching::from_rows(col_match))
}
