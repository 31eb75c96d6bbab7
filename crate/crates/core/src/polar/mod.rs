//! Polar encoding and LLR-domain successive cancellation decoding.
//!
//! The generator is `G_N = F^{⊗n}` with `F = [1 0; 1 1]` and no
//! bit-reversal permutation, so the butterfly network below multiplies by
//! the plain Kronecker power. Information positions are the most reliable
//! entries of the universal sequence in [`reliability`].
//!
//! LLR sign convention, shared across the whole crate:
//! `ℓ = log P(bit = 0) / P(bit = 1)`, so positive means 0 is more likely,
//! and an exact zero decodes to 0.

mod reliability;
mod sequence_table;

pub use reliability::{load_reliability_order, NR_RELIABILITY_SEQUENCE};

use crate::error::{Error, Result};

/// Channel LLR magnitudes are clamped to this value before decoding.
///
/// Zero-flip-probability channels produce infinite LLRs; ±40 saturates
/// `tanh` exactly in double precision while keeping check-node sums far
/// from overflow for every supported block length.
pub const LLR_CLAMP: f64 = 40.0;

/// Check-node combining rule for SC decoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScRule {
    /// Exact boxplus `f(a,b) = 2·atanh(tanh(a/2)·tanh(b/2))`, evaluated in
    /// a stable log-domain form.
    #[default]
    Exact,
    /// Min-sum approximation `sign(a)·sign(b)·min(|a|,|b|)`.
    MinSum,
}

/// A polar code: block length, information length and the position sets
/// derived from the universal reliability sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolarCode {
    stages: u32,
    block_len: usize,
    info_len: usize,
    /// Information positions, sorted ascending.
    info_set: Vec<usize>,
    /// `frozen[i]` is true iff position `i` is frozen to zero.
    frozen: Vec<bool>,
}

impl PolarCode {
    /// Builds the `(N, K)` code whose information set is the `K` most
    /// reliable positions of [`load_reliability_order`].
    pub fn new(n: usize, k: usize) -> Result<Self> {
        let order = load_reliability_order(n)?;
        if k == 0 || k > n {
            return Err(Error::InvalidInfoLength { k, n });
        }
        let mut info_set: Vec<usize> = order[n - k..].to_vec();
        info_set.sort_unstable();
        let mut frozen = vec![true; n];
        for &p in &info_set {
            frozen[p] = false;
        }
        Ok(Self {
            stages: n.trailing_zeros(),
            block_len: n,
            info_len: k,
            info_set,
            frozen,
        })
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    pub fn info_len(&self) -> usize {
        self.info_len
    }

    /// Information positions in ascending order.
    pub fn info_set(&self) -> &[usize] {
        &self.info_set
    }

    /// Frozen positions in ascending order.
    pub fn frozen_set(&self) -> Vec<usize> {
        (0..self.block_len).filter(|&i| self.frozen[i]).collect()
    }

    pub fn is_frozen(&self, pos: usize) -> bool {
        self.frozen[pos]
    }

    /// Places `data` on the information set (frozen positions zero) and
    /// returns the input vector `u`.
    pub fn build_input(&self, data: &[u8]) -> Result<Vec<u8>> {
        if data.len() != self.info_len {
            return Err(Error::LengthMismatch {
                what: "data word",
                expected: self.info_len,
                actual: data.len(),
            });
        }
        let mut u = vec![0u8; self.block_len];
        for (&pos, &bit) in self.info_set.iter().zip(data) {
            debug_assert!(bit <= 1);
            u[pos] = bit & 1;
        }
        Ok(u)
    }

    /// Encodes a `K`-bit data word into an `N`-bit codeword.
    pub fn encode(&self, data: &[u8]) -> Result<Vec<u8>> {
        let mut u = self.build_input(data)?;
        polar_transform(&mut u);
        Ok(u)
    }

    /// One-shot SC decode; allocates a fresh workspace. Hot loops should
    /// reuse an [`ScDecoder`].
    pub fn sc_decode(&self, llrs: &[f64], rule: ScRule) -> Result<Vec<u8>> {
        ScDecoder::new(self, rule).decode(llrs)
    }
}

/// In-place multiplication by `F^{⊗n}` over GF(2).
///
/// Involutive: applying it twice restores the input.
pub fn polar_transform(bits: &mut [u8]) {
    let n = bits.len();
    debug_assert!(n.is_power_of_two());
    let mut step = 1;
    while step < n {
        let mut base = 0;
        while base < n {
            for j in base..base + step {
                bits[j] ^= bits[j + step];
            }
            base += 2 * step;
        }
        step *= 2;
    }
}

/// Exact boxplus in log domain:
/// `s·min(|a|,|b|) + ln(1+e^{−|a+b|}) − ln(1+e^{−|a−b|})`.
#[inline]
fn boxplus_exact(a: f64, b: f64) -> f64 {
    let sign_min = if (a < 0.0) != (b < 0.0) {
        -a.abs().min(b.abs())
    } else {
        a.abs().min(b.abs())
    };
    sign_min + (-(a + b).abs()).exp().ln_1p() - (-(a - b).abs()).exp().ln_1p()
}

#[inline]
fn boxplus_minsum(a: f64, b: f64) -> f64 {
    let m = a.abs().min(b.abs());
    if (a < 0.0) != (b < 0.0) {
        -m
    } else {
        m
    }
}

/// Reusable successive cancellation decoder for one code.
///
/// Frozen positions are forced to zero; at information positions an LLR
/// of exactly zero decodes to 0.
#[derive(Debug, Clone)]
pub struct ScDecoder {
    code: PolarCode,
    rule: ScRule,
    // One scratch pair per recursion level; level l holds N >> (l+1) slots.
    level_llrs: Vec<Vec<f64>>,
    level_bits: Vec<Vec<u8>>,
    input: Vec<u8>,
}

impl ScDecoder {
    pub fn new(code: &PolarCode, rule: ScRule) -> Self {
        let n = code.block_len();
        let levels = code.stages as usize;
        let level_llrs = (0..levels).map(|l| vec![0.0; n >> (l + 1)]).collect();
        let level_bits = (0..levels).map(|l| vec![0u8; n >> (l + 1)]).collect();
        Self {
            code: code.clone(),
            rule,
            level_llrs,
            level_bits,
            input: vec![0; n],
        }
    }

    /// Decodes channel LLRs into the `K` information bits, in information
    /// set order.
    pub fn decode(&mut self, llrs: &[f64]) -> Result<Vec<u8>> {
        self.decode_input(llrs)?;
        Ok(self
            .code
            .info_set
            .iter()
            .map(|&p| self.input[p])
            .collect())
    }

    /// Decodes and returns the reconstructed input vector `u` (frozen
    /// positions are zero by construction).
    pub fn decode_full(&mut self, llrs: &[f64]) -> Result<(Vec<u8>, Vec<u8>)> {
        self.decode_input(llrs)?;
        let u = self.input.clone();
        let data = self.code.info_set.iter().map(|&p| u[p]).collect();
        Ok((data, u))
    }

    fn decode_input(&mut self, llrs: &[f64]) -> Result<()> {
        let n = self.code.block_len();
        if llrs.len() != n {
            return Err(Error::LengthMismatch {
                what: "channel LLRs",
                expected: n,
                actual: llrs.len(),
            });
        }
        if llrs.iter().any(|l| !l.is_finite()) {
            return Err(Error::NonFinite("channel LLRs"));
        }
        let mut input = std::mem::take(&mut self.input);
        self.node(0, llrs, 0, &mut input);
        self.input = input;
        Ok(())
    }

    // Decodes the subtree at `level` whose input positions are
    // `u[offset .. offset + len]`, reading `llrs` for the subtree's
    // channel observations and writing hard input decisions into `u`.
    fn node(&mut self, level: usize, llrs: &[f64], offset: usize, u: &mut [u8]) {
        let len = llrs.len();
        if len == 1 {
            u[offset] = if self.code.frozen[offset] || llrs[0] >= 0.0 {
                0
            } else {
                1
            };
            return;
        }
        let half = len / 2;

        // f-stage: combine the two channel halves for the left subtree.
        {
            let buf = &mut self.level_llrs[level];
            match self.rule {
                ScRule::Exact => {
                    for i in 0..half {
                        buf[i] = boxplus_exact(llrs[i], llrs[i + half]);
                    }
                }
                ScRule::MinSum => {
                    for i in 0..half {
                        buf[i] = boxplus_minsum(llrs[i], llrs[i + half]);
                    }
                }
            }
        }
        let f_llrs = std::mem::take(&mut self.level_llrs[level]);
        self.node(level + 1, &f_llrs[..half], offset, u);

        // Partial sums of the decided left half feed the g-stage.
        {
            let bits = &mut self.level_bits[level];
            bits[..half].copy_from_slice(&u[offset..offset + half]);
            polar_transform(&mut bits[..half]);
        }
        let mut g_llrs = f_llrs;
        for i in 0..half {
            let s = if self.level_bits[level][i] == 0 {
                1.0
            } else {
                -1.0
            };
            g_llrs[i] = llrs[i + half] + s * llrs[i];
        }
        self.node(level + 1, &g_llrs[..half], offset + half, u);
        self.level_llrs[level] = g_llrs;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code(n: usize, k: usize) -> PolarCode {
        PolarCode::new(n, k).unwrap()
    }

    #[test]
    fn info_sets_match_reliability_suffix() {
        assert_eq!(code(16, 3).info_set(), &[13, 14, 15]);
        assert_eq!(code(16, 4).info_set(), &[11, 13, 14, 15]);
        assert_eq!(code(2, 2).info_set(), &[0, 1]);
    }

    #[test]
    fn info_sets_nest() {
        for k in 1..16 {
            let small = code(16, k);
            let big = code(16, k + 1);
            for p in small.info_set() {
                assert!(big.info_set().contains(p), "K={k} position {p}");
            }
        }
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(PolarCode::new(12, 3).is_err());
        assert!(PolarCode::new(16, 0).is_err());
        assert!(PolarCode::new(16, 17).is_err());
    }

    #[test]
    fn encode_all_zero_is_all_zero() {
        let c = code(16, 4);
        assert_eq!(c.encode(&[0; 4]).unwrap(), vec![0; 16]);
    }

    #[test]
    fn single_top_input_bit_gives_all_ones() {
        // The last row of F^{⊗n} is all ones.
        let mut u = vec![0u8; 4];
        u[3] = 1;
        polar_transform(&mut u);
        assert_eq!(u, vec![1, 1, 1, 1]);
    }

    #[test]
    fn transform_is_involutive() {
        let mut bits: Vec<u8> = (0..64).map(|i| ((i * 37 + 11) % 5 % 2) as u8).collect();
        let orig = bits.clone();
        polar_transform(&mut bits);
        polar_transform(&mut bits);
        assert_eq!(bits, orig);
    }

    #[test]
    fn noiseless_decode_recovers_data() {
        let c = code(16, 4);
        let data = vec![1, 0, 1, 1];
        let cw = c.encode(&data).unwrap();
        let llrs: Vec<f64> = cw
            .iter()
            .map(|&b| LLR_CLAMP * (1.0 - 2.0 * f64::from(b)))
            .collect();
        assert_eq!(c.sc_decode(&llrs, ScRule::Exact).unwrap(), data);
        assert_eq!(c.sc_decode(&llrs, ScRule::MinSum).unwrap(), data);
    }

    #[test]
    fn all_positive_llrs_decode_to_zero() {
        let c = code(8, 3);
        let llrs = vec![LLR_CLAMP; 8];
        assert_eq!(c.sc_decode(&llrs, ScRule::Exact).unwrap(), vec![0, 0, 0]);
    }

    #[test]
    fn zero_llrs_decode_to_zero_by_tie_break() {
        let c = code(8, 3);
        let llrs = vec![0.0; 8];
        assert_eq!(c.sc_decode(&llrs, ScRule::Exact).unwrap(), vec![0, 0, 0]);
    }

    #[test]
    fn frozen_positions_stay_zero_in_reconstruction() {
        let c = code(16, 3);
        let llrs: Vec<f64> = (0..16).map(|i| ((i * 7 % 5) as f64) - 2.0).collect();
        let (_, u) = ScDecoder::new(&c, ScRule::Exact).decode_full(&llrs).unwrap();
        for p in c.frozen_set() {
            assert_eq!(u[p], 0);
        }
    }

    #[test]
    fn rejects_non_finite_llrs() {
        let c = code(4, 2);
        let llrs = vec![1.0, f64::INFINITY, 0.0, 0.0];
        assert!(matches!(
            c.sc_decode(&llrs, ScRule::Exact),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn boxplus_exact_matches_tanh_form() {
        let cases: [(f64, f64); 5] = [
            (0.3, 1.7),
            (-2.0, 5.0),
            (4.0, -4.0),
            (0.0, 3.0),
            (-1.0, -1.0),
        ];
        for (a, b) in cases {
            let reference = 2.0 * ((a / 2.0).tanh() * (b / 2.0).tanh()).atanh();
            assert!(
                (boxplus_exact(a, b) - reference).abs() < 1e-9,
                "f({a},{b})"
            );
        }
        // the tanh form saturates at clamp level; compare the closed form
        let expect = 40.0 - std::f64::consts::LN_2;
        assert!((boxplus_exact(40.0, 40.0) - expect).abs() < 1e-9);
        assert!((boxplus_exact(40.0, -40.0) + expect).abs() < 1e-9);
    }
}
