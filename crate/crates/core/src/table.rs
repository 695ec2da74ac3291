//! Row-major dense indexing over products of finite domains.

/// Shape of a dense table; the last axis varies fastest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shape(pub Vec<usize>);

impl Shape {
    pub fn len(&self) -> usize {
        self.0.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn ndim(&self) -> usize {
        self.0.len()
    }

    pub fn flat(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.0.len());
        let mut out = 0;
        for (i, d) in idx.iter().zip(&self.0) {
            debug_assert!(i < d);
            out = out * d + i;
        }
        out
    }

    pub fn unflat(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.0.len()];
        for axis in (0..self.0.len()).rev() {
            idx[axis] = flat % self.0[axis];
            flat /= self.0[axis];
        }
        idx
    }

    /// Iterate multi-indices in canonical (lexicographic) order.
    pub fn iter(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        let total = self.len();
        (0..total).map(move |f| self.unflat(f))
    }
}
