//! Finite-difference stencils on uniformly spaced (logarithmic) coordinates.
//!
//! Weights come from the Fornberg recurrence, so interior rows are the
//! classical 7-point sixth-order formulas and boundary rows are the one-sided
//! variants of the same order. All stencils annihilate constants exactly.

use std::ops::{Add, Mul, Sub};

pub const STENCIL_LEN: usize = 7;

/// Fornberg weights for the `m`-th derivative at `z` from the nodes `x`.
pub fn fd_weights(z: f64, x: &[f64], m: usize) -> Vec<f64> {
    let n = x.len();
    assert!(m < n, "derivative order must be below the stencil length");
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

/// One row of the differentiation tables: window start plus unit-spacing
/// weights for the first and second derivative.
#[derive(Debug, Clone, Copy)]
pub struct StencilRow {
    pub start: usize,
    pub d1: [f64; STENCIL_LEN],
    pub d2: [f64; STENCIL_LEN],
}

/// Differentiation table for `n` uniformly spaced nodes (spacing 1).
///
/// Row `i` uses the window `start..start + 7` with `start = clamp(i-3, 0, n-7)`;
/// interior rows are centered, the three rows at each edge are one-sided.
pub fn rows(n: usize) -> Vec<StencilRow> {
    assert!(n >= STENCIL_LEN, "need at least 7 nodes");
    // Only 7 distinct window shapes occur; build each shape once.
    let mut shapes = Vec::with_capacity(STENCIL_LEN);
    for offset in 0..STENCIL_LEN {
        let x: Vec<f64> = (0..STENCIL_LEN).map(|j| j as f64 - offset as f64).collect();
        let w1 = fd_weights(0.0, &x, 1);
        let w2 = fd_weights(0.0, &x, 2);
        let mut d1 = [0.0; STENCIL_LEN];
        let mut d2 = [0.0; STENCIL_LEN];
        d1.copy_from_slice(&w1);
        d2.copy_from_slice(&w2);
        shapes.push((d1, d2));
    }
    (0..n)
        .map(|i| {
            let start = i.saturating_sub(3).min(n - STENCIL_LEN);
            let (d1, d2) = shapes[i - start];
            StencilRow { start, d1, d2 }
        })
        .collect()
}

/// Apply the `order`-th derivative (order 1 or 2) with spacing `h`.
///
/// Sums run over node differences against the evaluation point, so constants
/// map to exactly zero in floating point (the 1/h^k scale never amplifies a
/// rounding residual of the row sum).
pub fn apply<T>(vals: &[T], h: f64, order: usize) -> Vec<T>
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
{
    let scale = match order {
        1 => 1.0 / h,
        2 => 1.0 / (h * h),
        _ => panic!("only first and second derivatives are tabulated"),
    };
    rows(vals.len())
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let w = if order == 1 { &row.d1 } else { &row.d2 };
            let center = vals[i];
            let mut acc = (vals[row.start] - center) * (w[0] * scale);
            for j in 1..STENCIL_LEN {
                acc = acc + (vals[row.start + j] - center) * (w[j] * scale);
            }
            acc
        })
        .collect()
}
