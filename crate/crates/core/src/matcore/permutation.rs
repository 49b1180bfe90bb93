use serde::{Deserialize, Serialize};

use super::{DenseMatrix, MatError};

/// A bijection on `0..n`, stored as `mapping[k] = π(k)`.
///
/// The associated matrix sends basis vector `e_k` to `e_{π(k)}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation {
    mapping: Vec<usize>,
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = MatError;
    fn try_from(v: Vec<usize>) -> Result<Self, MatError> {
        Permutation::new(v)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.mapping
    }
}

impl Permutation {
    pub fn new(mapping: Vec<usize>) -> Result<Self, MatError> {
        let n = mapping.len();
        let mut seen = vec![false; n];
        for &m in &mapping {
            if m >= n {
                return Err(MatError::InvalidPermutation(format!("image {m} out of range 0..{n}")));
            }
            if std::mem::replace(&mut seen[m], true) {
                return Err(MatError::InvalidPermutation(format!("image {m} repeated")));
            }
        }
        Ok(Self { mapping })
    }

    pub(crate) fn from_vec_unchecked(mapping: Vec<usize>) -> Self {
        debug_assert!(Permutation::new(mapping.clone()).is_ok());
        Self { mapping }
    }

    pub fn identity(n: usize) -> Self {
        Self { mapping: (0..n).collect() }
    }

    /// Transposition of `a` and `b` on `n` points.
    pub fn transposition(n: usize, a: usize, b: usize) -> Self {
        let mut m: Vec<usize> = (0..n).collect();
        m.swap(a, b);
        Self { mapping: m }
    }

    /// Builds a permutation from disjoint cycles written in 0-based indices.
    pub fn from_cycles(n: usize, cycles: &[&[usize]]) -> Result<Self, MatError> {
        let mut m: Vec<usize> = (0..n).collect();
        for c in cycles {
            for (k, &from) in c.iter().enumerate() {
                let to = c[(k + 1) % c.len()];
                if from >= n || to >= n {
                    return Err(MatError::InvalidPermutation(format!("cycle entry out of range 0..{n}")));
                }
                m[from] = to;
            }
        }
        Self::new(m)
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    pub fn mapping(&self) -> &[usize] {
        &self.mapping
    }

    #[inline]
    pub fn apply(&self, k: usize) -> usize {
        self.mapping[k]
    }

    pub fn is_identity(&self) -> bool {
        self.mapping.iter().enumerate().all(|(i, &m)| i == m)
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.len()];
        for (i, &m) in self.mapping.iter().enumerate() {
            inv[m] = i;
        }
        Self { mapping: inv }
    }

    /// `self ∘ other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &Permutation) -> Self {
        assert_eq!(self.len(), other.len(), "composing permutations of different size");
        Self { mapping: other.mapping.iter().map(|&k| self.mapping[k]).collect() }
    }

    pub fn is_involution(&self) -> bool {
        self.mapping.iter().enumerate().all(|(i, &m)| self.mapping[m] == i)
    }

    /// Disjoint cycles of length ≥ 2, each starting at its smallest element.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let n = self.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] || self.mapping[start] == start {
                seen[start] = true;
                continue;
            }
            let mut cyc = vec![start];
            seen[start] = true;
            let mut k = self.mapping[start];
            while k != start {
                seen[k] = true;
                cyc.push(k);
                k = self.mapping[k];
            }
            out.push(cyc);
        }
        out
    }

    /// +1 for even, -1 for odd.
    pub fn sign(&self) -> i8 {
        let odd = self.cycles().iter().map(|c| c.len() - 1).sum::<usize>() % 2;
        if odd == 0 {
            1
        } else {
            -1
        }
    }

    /// Matrix with `P e_k = e_{π(k)}`, i.e. entry `(π(k), k)` is one.
    pub fn to_matrix(&self) -> DenseMatrix {
        let n = self.len();
        let mut p = DenseMatrix::zeros(n, n);
        for (k, &m) in self.mapping.iter().enumerate() {
            p[(m, k)] = 1.0;
        }
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_bijections() {
        assert!(Permutation::new(vec![0, 0]).is_err());
        assert!(Permutation::new(vec![0, 2]).is_err());
        assert!(Permutation::new(vec![1, 2, 0]).is_ok());
    }

    #[test]
    fn compose_and_inverse() {
        let p = Permutation::from_cycles(5, &[&[0, 1, 2], &[3, 4]]).unwrap();
        assert_eq!(p.mapping(), &[1, 2, 0, 4, 3]);
        assert!(p.compose(&p.inverse()).is_identity());
        let q = Permutation::transposition(5, 0, 4);
        let pq = p.compose(&q);
        for k in 0..5 {
            assert_eq!(pq.apply(k), p.apply(q.apply(k)));
        }
        let mp = &p.to_matrix() * &q.to_matrix();
        assert_eq!(mp, pq.to_matrix());
    }

    #[test]
    fn cycles_and_sign() {
        let p = Permutation::from_cycles(6, &[&[0, 3, 5], &[1, 2]]).unwrap();
        assert_eq!(p.cycles(), vec![vec![0, 3, 5], vec![1, 2]]);
        assert_eq!(p.sign(), -1);
        assert_eq!(Permutation::identity(4).sign(), 1);
        assert_eq!(p.to_matrix().det().unwrap(), -1.0);
    }
}
