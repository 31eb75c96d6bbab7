//! Independent reference implementations used to cross-check the main
//! code paths.
//!
//! Everything here is deliberately naive and shares no code with the
//! modules it validates: the probability-domain SC decoder checks the
//! LLR-domain decoder, the dense GF(2) Kronecker matrix checks the
//! butterfly encoder, and the series/quadrature Bessel evaluations check
//! the production `bessel_j0`. Test suites are the intended consumer.

/// Dense GF(2) matrix as rows of 0/1 bytes.
pub type BitMatrix = Vec<Vec<u8>>;

/// `F^{⊗n}` built by explicit Kronecker products of `[[1,0],[1,1]]`.
pub fn kronecker_generator(n_stages: u32) -> BitMatrix {
    let mut g: BitMatrix = vec![vec![1]];
    for _ in 0..n_stages {
        let m = g.len();
        let mut next = vec![vec![0u8; 2 * m]; 2 * m];
        for r in 0..m {
            for c in 0..m {
                let v = g[r][c];
                // F = [[1,0],[1,1]] blocks: top-left and both bottom blocks
                next[r][c] = v;
                next[r + m][c] = v;
                next[r + m][c + m] = v;
            }
        }
        g = next;
    }
    g
}

/// Row-vector times matrix over GF(2).
pub fn gf2_vec_mat(v: &[u8], m: &BitMatrix) -> Vec<u8> {
    let cols = m[0].len();
    let mut out = vec![0u8; cols];
    for (i, &vi) in v.iter().enumerate() {
        if vi & 1 == 1 {
            for (o, &mij) in out.iter_mut().zip(&m[i]) {
                *o ^= mij;
            }
        }
    }
    out
}

/// GF(2) matrix product.
pub fn gf2_mat_mul(a: &BitMatrix, b: &BitMatrix) -> BitMatrix {
    a.iter().map(|row| gf2_vec_mat(row, b)).collect()
}

/// Successive cancellation decoding carried out entirely on normalized
/// probability pairs `(P(bit=0), P(bit=1))`, by pairwise convolution of
/// bit posteriors. Returns the reconstructed input vector `u`.
///
/// Ties (`p0 == p1`) decide 0, matching the LLR-domain tie-break.
pub fn sc_decode_prob(channel_probs: &[(f64, f64)], frozen: &[bool]) -> Vec<u8> {
    assert_eq!(channel_probs.len(), frozen.len());
    let mut u = vec![0u8; frozen.len()];
    prob_node(channel_probs, frozen, &mut u);
    u
}

/// Converts LLRs under the `log P(0)/P(1)` convention to probability
/// pairs.
pub fn llrs_to_probs(llrs: &[f64]) -> Vec<(f64, f64)> {
    llrs.iter()
        .map(|&l| {
            // evaluated so the smaller probability keeps full precision
            if l >= 0.0 {
                let e = (-l).exp();
                (1.0 / (1.0 + e), e / (1.0 + e))
            } else {
                let e = l.exp();
                (e / (1.0 + e), 1.0 / (1.0 + e))
            }
        })
        .collect()
}

fn prob_node(probs: &[(f64, f64)], frozen: &[bool], u: &mut [u8]) {
    let n = probs.len();
    if n == 1 {
        u[0] = if frozen[0] || probs[0].0 >= probs[0].1 {
            0
        } else {
            1
        };
        return;
    }
    let half = n / 2;

    // Left child sees the XOR of the two halves: marginalize the right.
    let left: Vec<(f64, f64)> = (0..half)
        .map(|i| {
            let (a0, a1) = probs[i];
            let (b0, b1) = probs[i + half];
            normalize(a0 * b0 + a1 * b1, a1 * b0 + a0 * b1)
        })
        .collect();
    prob_node(&left, &frozen[..half], &mut u[..half]);

    // Re-encode the left decisions to obtain the partial sums.
    let mut w: Vec<u8> = u[..half].to_vec();
    reference_transform(&mut w);

    // Right child combines its direct observation with the left one
    // conditioned on the known partial sum.
    let right: Vec<(f64, f64)> = (0..half)
        .map(|i| {
            let (a0, a1) = probs[i];
            let (b0, b1) = probs[i + half];
            if w[i] == 0 {
                normalize(a0 * b0, a1 * b1)
            } else {
                normalize(a1 * b0, a0 * b1)
            }
        })
        .collect();
    prob_node(&right, &frozen[half..], &mut u[half..]);
}

fn normalize(p0: f64, p1: f64) -> (f64, f64) {
    let s = p0 + p1;
    if s > 0.0 {
        (p0 / s, p1 / s)
    } else {
        (0.5, 0.5)
    }
}

/// Same butterfly as the production encoder, restated independently via
/// the recursive definition `T(u1,u2) = (T(u1)⊕T(u2), T(u2))`.
pub fn reference_transform(bits: &mut [u8]) {
    let n = bits.len();
    if n <= 1 {
        return;
    }
    let half = n / 2;
    let (a, b) = bits.split_at_mut(half);
    reference_transform(a);
    reference_transform(b);
    for i in 0..half {
        a[i] ^= b[i];
    }
}

/// Truncated power series for `J_0`, trustworthy in f64 for |x| <= 20.
pub fn j0_series_oracle(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut compensation = 0.0;
    for m in 1..200u32 {
        term *= q / ((m * m) as f64);
        // Kahan-compensated accumulation
        let y = term - compensation;
        let t = sum + y;
        compensation = (t - sum) - y;
        sum = t;
        if term.abs() < 1e-20 {
            break;
        }
    }
    sum
}

/// `J_0` via the integral representation
/// `(1/π)∫_0^π cos(x sin θ) dθ`, discretized with a 512-point midpoint
/// rule. The integrand is π-periodic and analytic, so the aliasing error
/// is `2·J_{1024}(x)`, far below machine precision for |x| <= 100.
pub fn j0_quadrature_oracle(x: f64) -> f64 {
    const M: usize = 512;
    let mut sum = 0.0;
    for j in 0..M {
        let theta = std::f64::consts::PI * (j as f64 + 0.5) / M as f64;
        sum += (x * theta.sin()).cos();
    }
    sum / M as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronecker_small_cases() {
        assert_eq!(kronecker_generator(1), vec![vec![1, 0], vec![1, 1]]);
        let g4 = kronecker_generator(2);
        assert_eq!(g4[3], vec![1, 1, 1, 1]);
        assert_eq!(g4[0], vec![1, 0, 0, 0]);
    }

    #[test]
    fn oracles_agree_on_j0() {
        for i in 0..=60 {
            let x = i as f64 * 0.2;
            let s = j0_series_oracle(x);
            let q = j0_quadrature_oracle(x);
            assert!((s - q).abs() < 1e-12, "x={x}: {s} vs {q}");
        }
    }

    #[test]
    fn transform_agrees_with_dense_multiply() {
        let g = kronecker_generator(3);
        for seed in 0..16u8 {
            let mut v: Vec<u8> = (0..8).map(|i| (seed >> (i % 8)) & 1).collect();
            let dense = gf2_vec_mat(&v, &g);
            reference_transform(&mut v);
            assert_eq!(v, dense);
        }
    }
}
