//! Small dense kernels shared by the forward model and the reconstructions.

/// Dot product with a fixed eight-lane accumulation order, so results are
/// reproducible regardless of how callers batch their work.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 8];
    let chunks_a = a.chunks_exact(8);
    let chunks_b = b.chunks_exact(8);
    let tail: f64 = chunks_a
        .remainder()
        .iter()
        .zip(chunks_b.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (ca, cb) in chunks_a.zip(chunks_b) {
        for lane in 0..8 {
            acc[lane] += ca[lane] * cb[lane];
        }
    }
    let head = ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]));
    head + tail
}

/// `c[rows x cols] = a[rows x inner] * b[inner x cols]`, all row-major with
/// explicit row strides (in elements).
#[allow(clippy::too_many_arguments)]
pub(crate) fn matmul(
    rows: usize,
    inner: usize,
    cols: usize,
    a: &[f64],
    a_row_stride: usize,
    b: &[f64],
    b_row_stride: usize,
    c: &mut [f64],
) {
    assert!(c.len() >= rows * cols);
    if rows == 0 || cols == 0 {
        return;
    }
    if inner == 0 {
        c[..rows * cols].iter_mut().for_each(|v| *v = 0.0);
        return;
    }
    assert!(a.len() >= (rows - 1) * a_row_stride + inner);
    assert!(b.len() >= (inner - 1) * b_row_stride + cols);
    // SAFETY: the asserts above bound every index the kernel touches.
    unsafe {
        matrixmultiply::dgemm(
            rows,
            inner,
            cols,
            1.0,
            a.as_ptr(),
            a_row_stride as isize,
            1,
            b.as_ptr(),
            b_row_stride as isize,
            1,
            0.0,
            c.as_mut_ptr(),
            cols as isize,
            1,
        );
    }
}

/// `c[rows x cols] = a[rows x inner] * b[cols x inner]^T`; used to apply a
/// stack of patterns to a stack of objects without materializing transposes.
pub(crate) fn matmul_bt(
    rows: usize,
    inner: usize,
    cols: usize,
    a: &[f64],
    b: &[f64],
    c: &mut [f64],
) {
    assert!(a.len() >= rows * inner && b.len() >= cols * inner && c.len() >= rows * cols);
    if rows == 0 || cols == 0 {
        return;
    }
    // SAFETY: lengths checked above; b is read as its transpose via strides.
    unsafe {
        matrixmultiply::dgemm(
            rows,
            inner,
            cols,
            1.0,
            a.as_ptr(),
            inner as isize,
            1,
            b.as_ptr(),
            1,
            inner as isize,
            0.0,
            c.as_mut_ptr(),
            cols as isize,
            1,
        );
    }
}
