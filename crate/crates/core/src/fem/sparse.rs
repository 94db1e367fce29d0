/// Compressed sparse rows with sorted column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    pub col: Vec<usize>,
    pub val: Vec<f64>,
}

impl CsrMatrix {
    /// Builds the pattern from per-row column lists (sorted and deduplicated
    /// here); values start at zero.
    pub fn from_pattern(ncols: usize, mut rows: Vec<Vec<usize>>) -> Self {
        let nrows = rows.len();
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        row_ptr.push(0);
        let mut col = Vec::new();
        for r in rows.iter_mut() {
            r.sort_unstable();
            r.dedup();
            col.extend_from_slice(r);
            row_ptr.push(col.len());
        }
        let nnz = col.len();
        Self { nrows, ncols, row_ptr, col, val: vec![0.0; nnz] }
    }

    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col[a..b], &self.val[a..b])
    }

    /// Position of entry `(i, j)` in `col`/`val`.
    #[inline]
    pub fn find(&self, i: usize, j: usize) -> Option<usize> {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col[a..b].binary_search(&j).ok().map(|p| a + p)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.find(i, j).map_or(0.0, |p| self.val[p])
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let p = self.find(i, j).expect("entry outside sparsity pattern");
        self.val[p] += v;
    }

    pub fn nnz(&self) -> usize {
        self.col.len()
    }

    pub fn mul(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.nrows {
            let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
            let mut s = 0.0;
            for p in a..b {
                s += self.val[p] * x[self.col[p]];
            }
            y[i] = s;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows).map(|i| self.get(i, i)).collect()
    }

    /// Largest `|a_ij - a_ji|` relative to the largest entry.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.val.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let mut worst = 0.0f64;
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst / scale
    }
}

/// Zero-fill incomplete LU factorization. Falls back to Jacobi when a pivot
/// is not positive.
#[derive(Debug, Clone)]
pub enum Ilu0 {
    Factor { lu: CsrMatrix, diag: Vec<usize> },
    Jacobi { inv_diag: Vec<f64> },
}

impl Ilu0 {
    pub fn new(a: &CsrMatrix) -> Self {
        let n = a.nrows;
        let mut lu = a.clone();
        let mut diag = vec![usize::MAX; n];
        for i in 0..n {
            match lu.find(i, i) {
                Some(p) => diag[i] = p,
                None => return Self::jacobi(a, "missing diagonal entry"),
            }
        }
        let mut marker = vec![usize::MAX; n];
        for i in 0..n {
            let (a0, a1) = (lu.row_ptr[i], lu.row_ptr[i + 1]);
            for p in a0..a1 {
                marker[lu.col[p]] = p;
            }
            for p in a0..a1 {
                let k = lu.col[p];
                if k >= i {
                    break;
                }
                let f = lu.val[p] / lu.val[diag[k]];
                lu.val[p] = f;
                for q in diag[k] + 1..lu.row_ptr[k + 1] {
                    let j = lu.col[q];
                    let m = marker[j];
                    if m != usize::MAX && m >= a0 && m < a1 {
                        lu.val[m] -= f * lu.val[q];
                    }
                }
            }
            for p in a0..a1 {
                marker[lu.col[p]] = usize::MAX;
            }
            let piv = lu.val[diag[i]];
            if !(piv > 0.0 && piv.is_finite()) {
                return Self::jacobi(a, "non-positive pivot");
            }
        }
        Self::Factor { lu, diag }
    }

    fn jacobi(a: &CsrMatrix, why: &str) -> Self {
        log::warn!("incomplete factorization broke down ({why}); using the diagonal preconditioner");
        let inv_diag = a.diagonal().iter().map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 }).collect();
        Self::Jacobi { inv_diag }
    }

    pub fn is_factorized(&self) -> bool {
        matches!(self, Self::Factor { .. })
    }

    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        match self {
            Self::Jacobi { inv_diag } => {
                for i in 0..r.len() {
                    z[i] = r[i] * inv_diag[i];
                }
            }
            Self::Factor { lu, diag } => {
                let n = lu.nrows;
                for i in 0..n {
                    let mut s = r[i];
                    for p in lu.row_ptr[i]..diag[i] {
                        s -= lu.val[p] * z[lu.col[p]];
                    }
                    z[i] = s;
                }
                for i in (0..n).rev() {
                    let mut s = z[i];
                    for p in diag[i] + 1..lu.row_ptr[i + 1] {
                        s -= lu.val[p] * z[lu.col[p]];
                    }
                    z[i] = s / lu.val[diag[i]];
                }
            }
        }
    }
}
