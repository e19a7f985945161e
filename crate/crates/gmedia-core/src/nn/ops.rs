//! Low-level forward/backward kernels over raw `f32` slices.
//!
//! Layout is channel-major `[c][h][w]`. Convolutions are same-padded
//! cross-correlations with stride 1 and kernel size 1 or 3. The 3x3 path
//! copies the input into a zero-padded scratch pane once and then runs a
//! fully unrolled row kernel, which the compiler autovectorizes; the unroll
//! fixes the per-element evaluation order, so results are bit-identical
//! across runs and build targets.
//!
//! All backward kernels accumulate (`+=`) into their gradient outputs;
//! callers zero gradient buffers once per backward pass.

use alloc::vec::Vec;

/// Copy `[c][h][w]` into a `[c][h+2][w+2]` zero-padded scratch buffer.
pub(crate) fn pad_chw(x: &[f32], c: usize, h: usize, w: usize, out: &mut Vec<f32>) {
    let wp = w + 2;
    let pane = (h + 2) * wp;
    out.clear();
    out.resize(c * pane, 0.0);
    for ci in 0..c {
        for y in 0..h {
            let src = &x[ci * h * w + y * w..][..w];
            let dst = &mut out[ci * pane + (y + 1) * wp + 1..][..w];
            dst.copy_from_slice(src);
        }
    }
}

/// 3x3 convolution core: accumulate `padded (c_src panes) * wgt` into `out`
/// (`c_dst` panes of `h x w`). `wgt` is `[c_dst][c_src][3][3]`.
pub(crate) fn conv3_acc(
    padded: &[f32],
    c_src: usize,
    h: usize,
    w: usize,
    wgt: &[f32],
    c_dst: usize,
    out: &mut [f32],
) {
    let wp = w + 2;
    let pane = (h + 2) * wp;
    debug_assert_eq!(padded.len(), c_src * pane);
    debug_assert_eq!(wgt.len(), c_dst * c_src * 9);
    debug_assert_eq!(out.len(), c_dst * h * w);
    for cd in 0..c_dst {
        let ob = cd * h * w;
        for cs in 0..c_src {
            let ib = cs * pane;
            let wk = &wgt[(cd * c_src + cs) * 9..][..9];
            let (w00, w01, w02) = (wk[0], wk[1], wk[2]);
            let (w10, w11, w12) = (wk[3], wk[4], wk[5]);
            let (w20, w21, w22) = (wk[6], wk[7], wk[8]);
            for y in 0..h {
                let r0 = &padded[ib + y * wp..][..w + 2];
                let r1 = &padded[ib + (y + 1) * wp..][..w + 2];
                let r2 = &padded[ib + (y + 2) * wp..][..w + 2];
                let dst = &mut out[ob + y * w..][..w];
                for x in 0..w {
                    dst[x] += w00 * r0[x]
                        + w01 * r0[x + 1]
                        + w02 * r0[x + 2]
                        + w10 * r1[x]
                        + w11 * r1[x + 1]
                        + w12 * r1[x + 2]
                        + w20 * r2[x]
                        + w21 * r2[x + 1]
                        + w22 * r2[x + 2];
                }
            }
        }
    }
}

/// Broadcast biases over the output panes.
pub(crate) fn fill_bias(bias: &[f32], h: usize, w: usize, out: &mut [f32]) {
    for (co, &b) in bias.iter().enumerate() {
        out[co * h * w..(co + 1) * h * w].fill(b);
    }
}

/// Same-padded 3x3 convolution forward. `pad` is caller-provided scratch.
pub(crate) fn conv3_fwd(
    x: &[f32],
    c_in: usize,
    h: usize,
    w: usize,
    wgt: &[f32],
    bias: &[f32],
    c_out: usize,
    pad: &mut Vec<f32>,
    out: &mut [f32],
) {
    pad_chw(x, c_in, h, w, pad);
    fill_bias(bias, h, w, out);
    conv3_acc(pad, c_in, h, w, wgt, c_out, out);
}

/// Gradient wrt the 3x3 convolution input. Runs the same core with the
/// kernel rotated 180 degrees and in/out channels transposed.
pub(crate) fn conv3_bwd_input(
    gout: &[f32],
    c_in: usize,
    h: usize,
    w: usize,
    wgt: &[f32],
    c_out: usize,
    pad: &mut Vec<f32>,
    wflip: &mut Vec<f32>,
    gin: &mut [f32],
) {
    wflip.clear();
    wflip.resize(c_in * c_out * 9, 0.0);
    for co in 0..c_out {
        for ci in 0..c_in {
            for k in 0..9 {
                wflip[(ci * c_out + co) * 9 + (8 - k)] = wgt[(co * c_in + ci) * 9 + k];
            }
        }
    }
    pad_chw(gout, c_out, h, w, pad);
    conv3_acc(pad, c_out, h, w, wflip, c_in, gin);
}

/// Deterministic 8-lane chunked sum; vectorizes without reassociation.
fn sum8(v: &[f32]) -> f32 {
    let mut acc = [0.0f32; 8];
    let chunks = v.chunks_exact(8);
    let rem = chunks.remainder();
    for ch in chunks {
        for i in 0..8 {
            acc[i] += ch[i];
        }
    }
    let mut tail = 0.0;
    for &x in rem {
        tail += x;
    }
    (((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]))) + tail
}

/// Deterministic 8-lane dot product.
fn dot8(a: &[f32], b: &[f32]) -> f32 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f32; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let ra = ca.remainder();
    let rb = cb.remainder();
    for (x, y) in ca.zip(cb) {
        for i in 0..8 {
            acc[i] += x[i] * y[i];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    (((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]))) + tail
}

/// Gradients wrt the 3x3 convolution weights and bias. `padded_x` must hold
/// the forward input already padded (`pad_chw`).
pub(crate) fn conv3_bwd_params(
    gout: &[f32],
    c_out: usize,
    padded_x: &[f32],
    c_in: usize,
    h: usize,
    w: usize,
    gw: &mut [f32],
    gb: &mut [f32],
) {
    let wp = w + 2;
    let pane = (h + 2) * wp;
    for co in 0..c_out {
        let g = &gout[co * h * w..][..h * w];
        gb[co] += sum8(g);
        for ci in 0..c_in {
            let xb = ci * pane;
            for ky in 0..3 {
                for kx in 0..3 {
                    let mut acc = 0.0f32;
                    for y in 0..h {
                        acc += dot8(&g[y * w..][..w], &padded_x[xb + (y + ky) * wp + kx..][..w]);
                    }
                    gw[(co * c_in + ci) * 9 + ky * 3 + kx] += acc;
                }
            }
        }
    }
}

/// 1x1 convolution forward: a per-pixel channel mix.
pub(crate) fn conv1_fwd(
    x: &[f32],
    c_in: usize,
    hw: usize,
    wgt: &[f32],
    bias: &[f32],
    c_out: usize,
    out: &mut [f32],
) {
    for co in 0..c_out {
        out[co * hw..(co + 1) * hw].fill(bias[co]);
        for ci in 0..c_in {
            let wv = wgt[co * c_in + ci];
            let src = &x[ci * hw..][..hw];
            let dst = &mut out[co * hw..][..hw];
            for i in 0..hw {
                dst[i] += wv * src[i];
            }
        }
    }
}

pub(crate) fn conv1_bwd(
    gout: &[f32],
    x: &[f32],
    c_in: usize,
    hw: usize,
    wgt: &[f32],
    c_out: usize,
    gin: &mut [f32],
    gw: &mut [f32],
    gb: &mut [f32],
) {
    for co in 0..c_out {
        let g = &gout[co * hw..][..hw];
        gb[co] += sum8(g);
        for ci in 0..c_in {
            let wv = wgt[co * c_in + ci];
            let dst = &mut gin[ci * hw..][..hw];
            for i in 0..hw {
                dst[i] += wv * g[i];
            }
            gw[co * c_in + ci] += dot8(g, &x[ci * hw..][..hw]);
        }
    }
}

pub(crate) fn relu_fwd(x: &[f32], out: &mut [f32]) {
    for (o, &v) in out.iter_mut().zip(x) {
        *o = if v > 0.0 { v } else { 0.0 };
    }
}

pub(crate) fn relu_bwd(gout: &[f32], x: &[f32], gin: &mut [f32]) {
    for ((gi, &g), &v) in gin.iter_mut().zip(gout).zip(x) {
        if v > 0.0 {
            *gi += g;
        }
    }
}

/// Non-overlapping 4x4 average pooling. `h` and `w` must be divisible by 4.
pub(crate) fn avg_pool4_fwd(x: &[f32], c: usize, h: usize, w: usize, out: &mut [f32]) {
    let (oh, ow) = (h / 4, w / 4);
    for ci in 0..c {
        for oy in 0..oh {
            for ox in 0..ow {
                let mut s = 0.0f32;
                for iy in 0..4 {
                    let row = &x[ci * h * w + (oy * 4 + iy) * w + ox * 4..][..4];
                    s += (row[0] + row[1]) + (row[2] + row[3]);
                }
                out[ci * oh * ow + oy * ow + ox] = s / 16.0;
            }
        }
    }
}

pub(crate) fn avg_pool4_bwd(gout: &[f32], c: usize, h: usize, w: usize, gin: &mut [f32]) {
    let (oh, ow) = (h / 4, w / 4);
    for ci in 0..c {
        for oy in 0..oh {
            for ox in 0..ow {
                let g = gout[ci * oh * ow + oy * ow + ox] / 16.0;
                for iy in 0..4 {
                    let row = &mut gin[ci * h * w + (oy * 4 + iy) * w + ox * 4..][..4];
                    for v in row {
                        *v += g;
                    }
                }
            }
        }
    }
}

/// Fully connected layer on the flattened input. `wgt` is `[n_out][n_in]`.
pub(crate) fn dense_fwd(x: &[f32], wgt: &[f32], bias: &[f32], n_out: usize, out: &mut [f32]) {
    let n_in = x.len();
    for o in 0..n_out {
        out[o] = bias[o] + dot8(&wgt[o * n_in..][..n_in], x);
    }
}

pub(crate) fn dense_bwd(
    gout: &[f32],
    x: &[f32],
    wgt: &[f32],
    n_out: usize,
    gin: &mut [f32],
    gw: &mut [f32],
    gb: &mut [f32],
) {
    let n_in = x.len();
    for o in 0..n_out {
        let g = gout[o];
        gb[o] += g;
        let wrow = &wgt[o * n_in..][..n_in];
        let gwrow = &mut gw[o * n_in..][..n_in];
        for i in 0..n_in {
            gin[i] += g * wrow[i];
            gwrow[i] += g * x[i];
        }
    }
}

/// Sum over every element of `x`, accumulated in f64 for stability.
pub(crate) fn sum_all(x: &[f32]) -> f32 {
    let mut s = 0.0f64;
    for &v in x {
        s += v as f64;
    }
    s as f32
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use alloc::vec;
    use rand::RngExt;

    /// Direct six-loop convolution oracle (same-padded cross-correlation).
    pub(crate) fn conv_oracle(
        x: &[f32],
        c_in: usize,
        h: usize,
        w: usize,
        wgt: &[f32],
        bias: &[f32],
        c_out: usize,
        k: usize,
    ) -> Vec<f32> {
        let pad = (k as i64 - 1) / 2;
        let mut out = vec![0.0f32; c_out * h * w];
        for co in 0..c_out {
            for y in 0..h as i64 {
                for xq in 0..w as i64 {
                    let mut acc = bias[co];
                    for ci in 0..c_in {
                        for ky in 0..k as i64 {
                            for kx in 0..k as i64 {
                                let iy = y + ky - pad;
                                let ix = xq + kx - pad;
                                if iy < 0 || iy >= h as i64 || ix < 0 || ix >= w as i64 {
                                    continue;
                                }
                                acc += x[ci * h * w + iy as usize * w + ix as usize]
                                    * wgt[((co * c_in + ci) * k + ky as usize) * k + kx as usize];
                            }
                        }
                    }
                    out[co * h * w + y as usize * w + xq as usize] = acc;
                }
            }
        }
        out
    }

    #[test]
    fn conv3_matches_oracle_on_random_cases() {
        let mut r = rng::rng(101);
        for case in 0..20 {
            let c_in = r.random_range(1..5);
            let c_out = r.random_range(1..5);
            let h = r.random_range(3..9);
            let w = r.random_range(3..12);
            let x: Vec<f32> = (0..c_in * h * w).map(|_| r.random_range(-1.0..1.0)).collect();
            let wgt: Vec<f32> =
                (0..c_out * c_in * 9).map(|_| r.random_range(-1.0..1.0)).collect();
            let bias: Vec<f32> = (0..c_out).map(|_| r.random_range(-1.0..1.0)).collect();
            let mut pad = Vec::new();
            let mut out = vec![0.0f32; c_out * h * w];
            conv3_fwd(&x, c_in, h, w, &wgt, &bias, c_out, &mut pad, &mut out);
            let want = conv_oracle(&x, c_in, h, w, &wgt, &bias, c_out, 3);
            for (a, b) in out.iter().zip(&want) {
                assert!((a - b).abs() < 1e-5, "case {case}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn conv1_identity_passthrough() {
        // 1x1 identity weights, zero bias: output == input.
        let c = 3;
        let hw = 20;
        let mut r = rng::rng(5);
        let x: Vec<f32> = (0..c * hw).map(|_| r.random_range(-1.0..1.0)).collect();
        let mut wgt = vec![0.0f32; c * c];
        for i in 0..c {
            wgt[i * c + i] = 1.0;
        }
        let mut out = vec![0.0f32; c * hw];
        conv1_fwd(&x, c, hw, &wgt, &vec![0.0; c], c, &mut out);
        assert_eq!(out, x);
    }

    #[test]
    fn conv_zero_input_yields_bias() {
        let (c_in, c_out, h, w) = (2, 3, 4, 6);
        let x = vec![0.0f32; c_in * h * w];
        let wgt = vec![0.37f32; c_out * c_in * 9];
        let bias = [0.5f32, -1.25, 2.0];
        let mut pad = Vec::new();
        let mut out = vec![0.0f32; c_out * h * w];
        conv3_fwd(&x, c_in, h, w, &wgt, &bias, c_out, &mut pad, &mut out);
        for co in 0..c_out {
            assert!(out[co * h * w..(co + 1) * h * w].iter().all(|&v| v == bias[co]));
        }
    }

    #[test]
    fn pool_of_constant_is_constant() {
        let (c, h, w) = (2, 8, 8);
        let x = vec![3.25f32; c * h * w];
        let mut out = vec![0.0f32; c * (h / 4) * (w / 4)];
        avg_pool4_fwd(&x, c, h, w, &mut out);
        assert!(out.iter().all(|&v| v == 3.25));
    }

    #[test]
    fn relu_clamps_negatives() {
        let x = [-1.0f32, 2.0, 0.0, -0.5];
        let mut out = [0.0f32; 4];
        relu_fwd(&x, &mut out);
        assert_eq!(out, [0.0, 2.0, 0.0, 0.0]);
    }
}
