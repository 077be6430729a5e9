use crate::error::{Error, Result};

/// A bijection on `0..n`. `perm[i]` is the new position of index `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    perm: Vec<usize>,
    inv: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        let perm: Vec<usize> = (0..n).collect();
        Self {
            inv: perm.clone(),
            perm,
        }
    }

    /// Builds from the forward map (`perm[old] = new`).
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let n = perm.len();
        let mut inv = vec![usize::MAX; n];
        for (i, &p) in perm.iter().enumerate() {
            if p >= n {
                return Err(Error::InvalidPermutation(format!(
                    "entry {p} at position {i} out of range for length {n}"
                )));
            }
            if inv[p] != usize::MAX {
                return Err(Error::InvalidPermutation(format!(
                    "position {p} is hit twice"
                )));
            }
            inv[p] = i;
        }
        Ok(Self { perm, inv })
    }

    /// Builds from an ordering list: `order[new] = old`.
    pub fn from_order(order: Vec<usize>) -> Result<Self> {
        let p = Self::new(order)?;
        Ok(p.inverse())
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(i, &p)| i == p)
    }

    /// New position of `old`.
    #[inline]
    pub fn apply(&self, old: usize) -> usize {
        self.perm[old]
    }

    /// Original index now at position `new`.
    #[inline]
    pub fn apply_inverse(&self, new: usize) -> usize {
        self.inv[new]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.perm
    }

    /// The ordering list `order[new] = old`.
    pub fn order(&self) -> &[usize] {
        &self.inv
    }

    pub fn inverse(&self) -> Self {
        Self {
            perm: self.inv.clone(),
            inv: self.perm.clone(),
        }
    }

    /// `self` followed by `then`: `i -> then(self(i))`.
    pub fn then(&self, then: &Permutation) -> Result<Self> {
        if then.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: then.len(),
            });
        }
        let perm: Vec<usize> = self.perm.iter().map(|&p| then.perm[p]).collect();
        let mut inv = vec![0; perm.len()];
        for (i, &p) in perm.iter().enumerate() {
            inv[p] = i;
        }
        Ok(Self { perm, inv })
    }

    /// `out[perm[i]] = x[i]`.
    pub fn apply_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.len());
        let mut out = vec![0.0; x.len()];
        for (i, &p) in self.perm.iter().enumerate() {
            out[p] = x[i];
        }
        out
    }

    /// `out[i] = x[perm[i]]`, the inverse of [`Permutation::apply_vec`].
    pub fn apply_inverse_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.len());
        self.perm.iter().map(|&p| x[p]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_bijection() {
        assert!(Permutation::new(vec![0, 0, 1]).is_err());
        assert!(Permutation::new(vec![0, 3, 1]).is_err());
    }

    #[test]
    fn inverse_and_compose() {
        let p = Permutation::new(vec![2, 0, 1]).unwrap();
        let q = p.inverse();
        assert!(p.then(&q).unwrap().is_identity());
        for i in 0..3 {
            assert_eq!(q.apply(p.apply(i)), i);
        }
        let x = [1.0, 2.0, 3.0];
        assert_eq!(p.apply_vec(&x), vec![2.0, 3.0, 1.0]);
        assert_eq!(p.apply_inverse_vec(&p.apply_vec(&x)), x.to_vec());
    }

    #[test]
    fn from_order_is_inverse_map() {
        let p = Permutation::from_order(vec![2, 0, 1]).unwrap();
        assert_eq!(p.apply(2), 0);
        assert_eq!(p.order(), &[2, 0, 1]);
    }
}
