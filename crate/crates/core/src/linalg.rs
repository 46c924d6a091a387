//! Thin safe wrappers over `matrixmultiply` for row-major buffers.

/// `C = A^T A` for row-major `a` (`rows x cols`), giving a `cols x cols` matrix.
pub fn gram_columns(a: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    assert_eq!(a.len(), rows * cols);
    let mut c = vec![0.0; cols * cols];
    if rows == 0 || cols == 0 {
        return c;
    }
    // SAFETY: strides describe exactly the buffers asserted above.
    unsafe {
        matrixmultiply::dgemm(
            cols, rows, cols, 1.0,
            a.as_ptr(), 1, cols as isize,
            a.as_ptr(), cols as isize, 1,
            0.0, c.as_mut_ptr(), cols as isize, 1,
        );
    }
    c
}

/// `C = A B^T` for row-major `a` (`m x k`) and `b` (`n x k`), giving `m x n`.
pub fn mul_transposed(a: &[f64], m: usize, b: &[f64], n: usize, k: usize) -> Vec<f64> {
    assert_eq!(a.len(), m * k);
    assert_eq!(b.len(), n * k);
    let mut c = vec![0.0; m * n];
    if m == 0 || n == 0 || k == 0 {
        return c;
    }
    // SAFETY: strides describe exactly the buffers asserted above.
    unsafe {
        matrixmultiply::dgemm(
            m, k, n, 1.0,
            a.as_ptr(), k as isize, 1,
            b.as_ptr(), 1, k as isize,
            0.0, c.as_mut_ptr(), n as isize, 1,
        );
    }
    c
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    // Four accumulators let the compiler vectorize the reduction.
    let mut acc = [0.0; 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        for j in 0..4 {
            acc[j] += a[4 * i + j] * b[4 * i + j];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..a.len() {
        s += a[i] * b[i];
    }
    s
}
