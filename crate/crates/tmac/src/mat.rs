//! Minimal dense square matrix used for pairwise quantities (gains,
//! capacities, rates). Row index is the transmitter, column the receiver.

#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    n: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(n: usize) -> Self {
        Mat {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.n && j < self.n, "index ({i},{j}) out of range");
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(i < self.n && j < self.n, "index ({i},{j}) out of range");
        self.data[i * self.n + j] = v;
    }

    /// Off-diagonal entries of column `j` as `(row, value)` pairs.
    pub fn column_off_diag(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..self.n).filter(move |&i| i != j).map(move |i| (i, self.get(i, j)))
    }

    pub fn iter_off_diag(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            (0..self.n)
                .filter(move |&j| j != i)
                .map(move |j| (i, j, self.get(i, j)))
        })
    }
}
