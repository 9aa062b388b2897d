use crate::error::{Error, Result};

/// A vector in `{0,1}^n`, stored by its sorted support.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinarySignal {
    n: usize,
    support: Vec<usize>,
}

impl BinarySignal {
    pub fn zeros(n: usize) -> Self {
        Self { n, support: Vec::new() }
    }

    pub fn ones(n: usize) -> Self {
        Self {
            n,
            support: (0..n).collect(),
        }
    }

    /// Builds a signal from an arbitrary list of support indices.
    pub fn from_support(n: usize, support: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut support: Vec<usize> = support.into_iter().collect();
        support.sort_unstable();
        for w in support.windows(2) {
            if w[0] == w[1] {
                return Err(Error::DuplicateIndex(w[0]));
            }
        }
        if let Some(&last) = support.last() {
            if last >= n {
                return Err(Error::IndexOutOfRange { index: last, n });
            }
        }
        Ok(Self { n, support })
    }

    /// Parses a 0/1 vector. Any other value is rejected.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        let mut support = Vec::new();
        for (i, &v) in values.iter().enumerate() {
            if v == 1.0 {
                support.push(i);
            } else if v != 0.0 {
                return Err(Error::invalid(format!(
                    "entry {i} = {v} is not binary"
                )));
            }
        }
        Ok(Self {
            n: values.len(),
            support,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Number of ones.
    pub fn sparsity(&self) -> usize {
        self.support.len()
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn contains(&self, i: usize) -> bool {
        self.support.binary_search(&i).is_ok()
    }

    /// `1 - x`
    pub fn complement(&self) -> Self {
        let mut mask = vec![true; self.n];
        for &i in &self.support {
            mask[i] = false;
        }
        Self {
            n: self.n,
            support: (0..self.n).filter(|&i| mask[i]).collect(),
        }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.n];
        for &i in &self.support {
            v[i] = 1.0;
        }
        v
    }

    /// Support membership as a boolean mask.
    pub fn mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.n];
        for &i in &self.support {
            m[i] = true;
        }
        m
    }
}
