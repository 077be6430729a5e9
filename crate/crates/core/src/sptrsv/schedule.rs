use serde::Serialize;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Blocks grouped into levels; every dependency of a block lies in an
/// earlier level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LevelSchedule {
    pub levels: Vec<Vec<usize>>,
    pub level_of: Vec<usize>,
}

impl LevelSchedule {
    pub fn nlevels(&self) -> usize {
        self.levels.len()
    }

    pub fn num_blocks(&self) -> usize {
        self.level_of.len()
    }
}

/// Checks that `offsets` is a contiguous partition of `0..n`.
pub(crate) fn validate_offsets(offsets: &[usize], n: usize) -> Result<()> {
    let ok = offsets.first() == Some(&0)
        && offsets.last() == Some(&n)
        && offsets.windows(2).all(|w| w[0] < w[1] || (n == 0 && w[0] == w[1]));
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidStructure(format!(
            "block offsets must increase strictly from 0 to {n}"
        )))
    }
}

pub(crate) fn block_of_rows(offsets: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(*offsets.last().unwrap_or(&0));
    for (b, w) in offsets.windows(2).enumerate() {
        out.extend(std::iter::repeat_n(b, w[1] - w[0]));
    }
    out
}

/// Level of block `b` is one more than the deepest block it reads from;
/// blocks without dependencies sit on level 0.
pub fn build_level_schedule(l: &CsrMatrix, offsets: &[usize]) -> Result<LevelSchedule> {
    let n = l.require_square()?;
    validate_offsets(offsets, n)?;
    let block_of = block_of_rows(offsets);
    let nb = offsets.len() - 1;
    let mut level_of = vec![0usize; nb];
    for b in 0..nb {
        let mut lev = 0;
        for r in offsets[b]..offsets[b + 1] {
            for &j in l.row(r).0 {
                if j > r {
                    return Err(Error::NotTriangular("lower"));
                }
                if j < offsets[b] {
                    lev = lev.max(level_of[block_of[j]] + 1);
                }
            }
        }
        level_of[b] = lev;
    }
    let nlevels = level_of.iter().map(|&l| l + 1).max().unwrap_or(0);
    let mut levels = vec![Vec::new(); nlevels];
    for (b, &lev) in level_of.iter().enumerate() {
        levels[lev].push(b);
    }
    Ok(LevelSchedule { levels, level_of })
}
