//! Dense row-major kernels used by the encoder.
//!
//! Everything is sequential with a fixed loop order, so results are
//! bitwise reproducible.

/// `out (m×n) = a (m×k) · w (k×n) + bias`.
pub fn affine(a: &[f64], m: usize, k: usize, w: &[f64], n: usize, bias: &[f64], out: &mut [f64]) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(w.len(), k * n);
    debug_assert_eq!(out.len(), m * n);
    for i in 0..m {
        let row = &mut out[i * n..(i + 1) * n];
        row.copy_from_slice(bias);
        for (kk, &x) in a[i * k..(i + 1) * k].iter().enumerate() {
            if x != 0.0 {
                axpy(x, &w[kk * n..(kk + 1) * n], row);
            }
        }
    }
}

/// `out (k×n) += aᵀ · g` for `a (m×k)`, `g (m×n)`.
pub fn acc_at_b(a: &[f64], m: usize, k: usize, g: &[f64], n: usize, out: &mut [f64]) {
    debug_assert_eq!(out.len(), k * n);
    for r in 0..m {
        let grow = &g[r * n..(r + 1) * n];
        for (kk, &x) in a[r * k..(r + 1) * k].iter().enumerate() {
            if x != 0.0 {
                axpy(x, grow, &mut out[kk * n..(kk + 1) * n]);
            }
        }
    }
}

/// `out (m×k) += g (m×n) · wᵀ` for `w (k×n)`.
pub fn acc_a_bt(g: &[f64], m: usize, n: usize, w: &[f64], k: usize, out: &mut [f64]) {
    debug_assert_eq!(out.len(), m * k);
    for r in 0..m {
        let grow = &g[r * n..(r + 1) * n];
        let orow = &mut out[r * k..(r + 1) * k];
        for (kk, o) in orow.iter_mut().enumerate() {
            *o += dot(grow, &w[kk * n..(kk + 1) * n]);
        }
    }
}

/// `out (n) += Σ_rows g`.
pub fn acc_colsum(g: &[f64], n: usize, out: &mut [f64]) {
    for row in g.chunks_exact(n) {
        axpy(1.0, row, out);
    }
}

#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Row-wise `xhat = (x - mean) / sqrt(var + eps)` and `y = gain·xhat + bias`.
/// Stores `xhat` and `1/sqrt(var + eps)` for the backward pass.
#[allow(clippy::too_many_arguments)]
pub fn layer_norm(
    x: &[f64],
    d: usize,
    gain: &[f64],
    bias: &[f64],
    eps: f64,
    xhat: &mut [f64],
    inv_std: &mut [f64],
    y: &mut [f64],
) {
    for (r, row) in x.chunks_exact(d).enumerate() {
        let mean = row.iter().sum::<f64>() / d as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
        let s = 1.0 / libm::sqrt(var + eps);
        inv_std[r] = s;
        for c in 0..d {
            let h = (row[c] - mean) * s;
            xhat[r * d + c] = h;
            y[r * d + c] = gain[c] * h + bias[c];
        }
    }
}

/// Backward of [`layer_norm`]: accumulates gain/bias gradients and writes
/// the input gradient into `dx`.
#[allow(clippy::too_many_arguments)]
pub fn layer_norm_backward(
    dy: &[f64],
    d: usize,
    xhat: &[f64],
    inv_std: &[f64],
    gain: &[f64],
    dgain: &mut [f64],
    dbias: &mut [f64],
    dx: &mut [f64],
) {
    let mut dxhat = alloc::vec![0.0; d];
    for (r, dyr) in dy.chunks_exact(d).enumerate() {
        let xh = &xhat[r * d..(r + 1) * d];
        let mut mean_dxhat = 0.0;
        let mut mean_dxhat_xhat = 0.0;
        for c in 0..d {
            dgain[c] += dyr[c] * xh[c];
            dbias[c] += dyr[c];
            dxhat[c] = dyr[c] * gain[c];
            mean_dxhat += dxhat[c];
            mean_dxhat_xhat += dxhat[c] * xh[c];
        }
        mean_dxhat /= d as f64;
        mean_dxhat_xhat /= d as f64;
        let s = inv_std[r];
        for c in 0..d {
            dx[r * d + c] = s * (dxhat[c] - mean_dxhat - xh[c] * mean_dxhat_xhat);
        }
    }
}

/// In-place numerically stable softmax.
pub fn softmax(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = libm::exp(*v - max);
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}
