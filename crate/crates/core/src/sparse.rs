//! Compressed sparse row storage for square plans and weight matrices.

use std::io::Write;

/// Square CSR matrix. Column indices are sorted within each row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn from_parts(n: usize, indptr: Vec<usize>, indices: Vec<usize>, values: Vec<f64>) -> Self {
        assert_eq!(indptr.len(), n + 1);
        assert_eq!(indices.len(), values.len());
        assert_eq!(*indptr.last().unwrap(), indices.len());
        Self { n, indptr, indices, values }
    }

    /// Keeps entries of `dense` for which `keep` holds.
    pub fn from_dense_filtered(dense: &ndarray::Array2<f64>, keep: impl Fn(f64) -> bool) -> Self {
        let n = dense.nrows();
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for row in dense.rows() {
            for (j, &v) in row.iter().enumerate() {
                if keep(v) {
                    indices.push(j);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Self { n, indptr, indices, values }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.indptr[i]..self.indptr[i + 1];
        self.indices[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn row_len(&self, i: usize) -> usize {
        self.indptr[i + 1] - self.indptr[i]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.indptr[i]..self.indptr[i + 1];
        match self.indices[range.clone()].binary_search(&j) {
            Ok(pos) => self.values[range.start + pos],
            Err(_) => 0.0,
        }
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.n];
        for (j, v) in self.indices.iter().zip(&self.values) {
            sums[*j] += v;
        }
        sums
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn map_rows(&self, f: impl Fn(usize, f64) -> f64) -> Self {
        let mut values = self.values.clone();
        for i in 0..self.n {
            for v in &mut values[self.indptr[i]..self.indptr[i + 1]] {
                *v = f(i, *v);
            }
        }
        Self { n: self.n, indptr: self.indptr.clone(), indices: self.indices.clone(), values }
    }

    /// Exact structural and numerical symmetry.
    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, v)| self.get(j, i) == v))
    }

    pub fn to_dense(&self) -> ndarray::Array2<f64> {
        let mut out = ndarray::Array2::zeros((self.n, self.n));
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                out[[i, j]] = v;
            }
        }
        out
    }

    /// COO triplets `i,j,value`, one per stored entry.
    pub fn write_coo_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "i,j,value")?;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                writeln!(out, "{i},{j},{v:.16e}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn filtered_roundtrip_and_lookup() {
        let d = array![[1.0, 0.0, 2.0], [0.0, 0.0, 0.0], [2.0, 0.0, 3.0]];
        let m = CsrMatrix::from_dense_filtered(&d, |v| v > 0.0);
        assert_eq!(m.nnz(), 4);
        assert_eq!(m.get(0, 2), 2.0);
        assert_eq!(m.get(1, 1), 0.0);
        assert_eq!(m.row_len(1), 0);
        assert_eq!(m.to_dense(), d);
        assert!(m.is_symmetric());
        assert_eq!(m.row_sums(), vec![3.0, 0.0, 5.0]);
        assert_eq!(m.col_sums(), vec![3.0, 0.0, 5.0]);
    }

    #[test]
    fn coo_output() {
        let d = array![[0.5, 0.25], [0.25, 0.5]];
        let m = CsrMatrix::from_dense_filtered(&d, |v| v > 0.0);
        let mut buf = Vec::new();
        m.write_coo_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "i,j,value");
        assert_eq!(lines.len(), 5);
        assert!(lines[2].starts_with("0,1,2.5"));
    }
}
