//! Link-level simulation over correlated slow fading: pilot-based channel
//! estimation with permutation mapping, and the sorted-subcarrier
//! variant with full channel knowledge.
//!
//! Subcarriers are modeled directly as parallel flat channels
//! `y_i = h_i x_i + n_i`; no waveform synthesis. Pilots ride a preamble
//! over the same fading realization as the data block, so the codeword
//! keeps its full length.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::channels::{FadingModel, FadingSampler};
use crate::error::{Error, Result};
use crate::mapping::Permutation;
use crate::polar::{PolarCode, ScDecoder, ScRule, LLR_CLAMP};
use crate::rng;
use crate::search::BerEstimate;

/// Placement rule for pilot subcarriers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PilotSpacing {
    /// `{1, ⌊N/V⌋, 2⌊N/V⌋, …, (V−1)⌊N/V⌋}` in 1-based positions. The
    /// leading 1 makes the first two pilots adjacent when `⌊N/V⌋ = 2`.
    #[default]
    Verbatim,
    /// Evenly spaced `{1, 1+⌊N/V⌋, 1+2⌊N/V⌋, …}` in 1-based positions.
    Uniform,
}

/// Pilot subcarriers (0-based, strictly increasing). Pilot symbols are
/// always +1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PilotScheme {
    positions: Vec<usize>,
    block_len: usize,
}

impl PilotScheme {
    /// Builds the pilot set for `v` pilots over `n` subcarriers.
    ///
    /// Errors when the placement formula collapses to fewer than `v`
    /// distinct positions.
    pub fn new(n: usize, v: usize, spacing: PilotSpacing) -> Result<Self> {
        if v == 0 || v > n {
            return Err(Error::InvalidParameter(format!(
                "pilot count {v} out of range for N={n}"
            )));
        }
        let stride = n / v;
        let one_based: Vec<usize> = match spacing {
            PilotSpacing::Verbatim => std::iter::once(1)
                .chain((1..v).map(|k| k * stride))
                .collect(),
            PilotSpacing::Uniform => (0..v).map(|k| 1 + k * stride).collect(),
        };
        let mut positions: Vec<usize> = one_based.iter().map(|&p| p - 1).collect();
        positions.sort_unstable();
        positions.dedup();
        if positions.len() < v {
            return Err(Error::PilotCollapse { n, v });
        }
        if *positions.last().unwrap() >= n {
            return Err(Error::InvalidParameter(format!(
                "pilot position beyond block length {n}"
            )));
        }
        Ok(Self {
            positions,
            block_len: n,
        })
    }

    /// A scheme from explicit 0-based positions.
    pub fn from_positions(positions: Vec<usize>, n: usize) -> Result<Self> {
        if positions.is_empty() || positions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "pilot positions must be non-empty and strictly increasing".into(),
            ));
        }
        if *positions.last().unwrap() >= n {
            return Err(Error::InvalidParameter(format!(
                "pilot position beyond block length {n}"
            )));
        }
        Ok(Self {
            positions,
            block_len: n,
        })
    }

    pub fn count(&self) -> usize {
        self.positions.len()
    }

    /// 0-based pilot positions.
    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }
}

/// Channel estimation strategy at the receiver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    /// Genie-aided: the true gains.
    Perfect,
    /// Linear MMSE interpolation of noisy pilot observations using the
    /// fading correlation matrix.
    Mmse,
    /// Least-squares pilot estimates, linearly interpolated, held flat
    /// beyond the outermost pilots.
    LinearInterp,
}

/// Precomputed linear-MMSE interpolator
/// `ĥ = R[:,S]·(R[S,S] + (1/γ)·I)⁻¹·y_S`.
///
/// An infinite `γ` drops the noise term and falls back to a
/// pseudo-inverse, which still recovers any gain vector in the range of
/// the correlation matrix.
#[derive(Debug, Clone)]
pub struct MmseInterpolator {
    weights: DMatrix<f64>,
}

impl MmseInterpolator {
    pub fn new(correlation: &DMatrix<f64>, scheme: &PilotScheme, gamma: f64) -> Result<Self> {
        let n = correlation.nrows();
        if n != scheme.block_len() {
            return Err(Error::LengthMismatch {
                what: "correlation matrix",
                expected: scheme.block_len(),
                actual: n,
            });
        }
        let v = scheme.count();
        let pos = scheme.positions();
        let r_ns = DMatrix::from_fn(n, v, |i, j| correlation[(i, pos[j])]);
        let mut r_ss = DMatrix::from_fn(v, v, |i, j| correlation[(pos[i], pos[j])]);
        let inverse = if gamma.is_finite() {
            for d in 0..v {
                r_ss[(d, d)] += 1.0 / gamma;
            }
            r_ss
                .clone()
                .try_inverse()
                .ok_or(Error::InvalidParameter("singular MMSE system".into()))?
        } else {
            r_ss
                .svd(true, true)
                .pseudo_inverse(1e-10)
                .map_err(|e| Error::InvalidParameter(format!("pseudo-inverse failed: {e}")))?
        };
        Ok(Self {
            weights: r_ns * inverse,
        })
    }

    /// Interpolates from pilot observations (one value per pilot).
    pub fn estimate(&self, pilot_obs: &[f64]) -> Vec<f64> {
        let y = DVector::from_column_slice(pilot_obs);
        let h = &self.weights * y;
        h.as_slice().to_vec()
    }

    fn estimate_into(&self, pilot_obs: &[f64], out: &mut [f64]) {
        let y = DVector::from_column_slice(pilot_obs);
        let h = &self.weights * y;
        out.copy_from_slice(h.as_slice());
    }
}

/// Linear interpolation of pilot values across the block, holding the
/// nearest pilot value beyond the pilot span.
fn linear_interpolate(scheme: &PilotScheme, pilot_obs: &[f64], out: &mut [f64]) {
    let pos = scheme.positions();
    debug_assert_eq!(pilot_obs.len(), pos.len());
    let n = out.len();
    let mut seg = 0usize;
    for (i, slot) in out.iter_mut().enumerate().take(n) {
        if i <= pos[0] {
            *slot = pilot_obs[0];
            continue;
        }
        if i >= pos[pos.len() - 1] {
            *slot = pilot_obs[pos.len() - 1];
            continue;
        }
        while pos[seg + 1] < i {
            seg += 1;
        }
        let (x0, x1) = (pos[seg] as f64, pos[seg + 1] as f64);
        let t = (i as f64 - x0) / (x1 - x0);
        *slot = pilot_obs[seg] * (1.0 - t) + pilot_obs[seg + 1] * t;
    }
}

/// Estimates the full gain vector from a received preamble in which
/// pilot positions carried +1.
///
/// `preamble` must be block-length long; entries off the pilot set are
/// ignored. `h_true` feeds only the `Perfect` estimator.
pub fn estimate_channel(
    kind: EstimatorKind,
    preamble: &[f64],
    h_true: &[f64],
    scheme: &PilotScheme,
    correlation: &DMatrix<f64>,
    gamma: f64,
) -> Result<Vec<f64>> {
    let n = scheme.block_len();
    if preamble.len() != n || h_true.len() != n {
        return Err(Error::LengthMismatch {
            what: "preamble or true gains",
            expected: n,
            actual: preamble.len().min(h_true.len()),
        });
    }
    let pilot_obs: Vec<f64> = scheme.positions().iter().map(|&p| preamble[p]).collect();
    match kind {
        EstimatorKind::Perfect => Ok(h_true.to_vec()),
        EstimatorKind::LinearInterp => {
            let mut out = vec![0.0; n];
            linear_interpolate(scheme, &pilot_obs, &mut out);
            Ok(out)
        }
        EstimatorKind::Mmse => {
            Ok(MmseInterpolator::new(correlation, scheme, gamma)?.estimate(&pilot_obs))
        }
    }
}

/// SNR sweep axis: points in dB plus the frame count per point.
#[derive(Debug, Clone, PartialEq)]
pub struct SnrSweep {
    pub snr_db: Vec<f64>,
    pub frames: u64,
}

impl SnrSweep {
    pub fn new(snr_db: Vec<f64>, frames: u64) -> Result<Self> {
        if snr_db.is_empty() || frames == 0 {
            return Err(Error::InvalidParameter(
                "sweep needs at least one SNR point and one frame".into(),
            ));
        }
        Ok(Self { snr_db, frames })
    }

    /// 0 to 20 dB in 2 dB steps.
    pub fn default_axis(frames: u64) -> Self {
        Self {
            snr_db: (0..=10).map(|i| 2.0 * i as f64).collect(),
            frames,
        }
    }
}

/// One row of a BER-vs-SNR table.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub snr_db: f64,
    pub estimate: BerEstimate,
}

fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Pilot-estimated link: encode, map, BPSK, correlated fading, MAP
/// demodulation with the estimated gains, demap, SC decode.
///
/// The fading model's own `snr` field is ignored; each sweep point sets
/// `γ`. Passing `None` for the permutation leaves coded bits in place.
#[allow(clippy::too_many_arguments)]
pub fn run_link_sim(
    code: &PolarCode,
    perm: Option<&Permutation>,
    model: &FadingModel,
    scheme: &PilotScheme,
    kind: EstimatorKind,
    sweep: &SnrSweep,
    seed: u64,
    rule: ScRule,
) -> Result<Vec<SweepPoint>> {
    let n = code.block_len();
    if model.block_len != n || scheme.block_len() != n {
        return Err(Error::LengthMismatch {
            what: "link dimensions",
            expected: n,
            actual: model.block_len.min(scheme.block_len()),
        });
    }
    if let Some(p) = perm {
        if p.len() != n {
            return Err(Error::LengthMismatch {
                what: "permutation",
                expected: n,
                actual: p.len(),
            });
        }
    }
    let correlation = model.correlation();
    let sampler = FadingSampler::new(&correlation, model.channel_power)?;
    let identity = Permutation::identity(n);
    let perm = perm.unwrap_or(&identity);

    let mut points = Vec::with_capacity(sweep.snr_db.len());
    for (idx, &db) in sweep.snr_db.iter().enumerate() {
        let gamma = db_to_linear(db);
        let mmse = match kind {
            EstimatorKind::Mmse => Some(MmseInterpolator::new(&correlation, scheme, gamma)?),
            _ => None,
        };
        let point_seed = rng::child_seed(seed, idx as u64);
        let noise_std = (1.0 / gamma).sqrt();
        let errors: u64 = (0..sweep.frames as usize)
            .into_par_iter()
            .with_min_len(32)
            .map_init(
                || LinkScratch::new(code, rule),
                |s, frame| {
                    let mut rng = rng::substream(point_seed, frame as u64);
                    s.draw_and_encode(code, perm, &mut rng);
                    sampler.sample_into(&mut rng, &mut s.gains);
                    // preamble: +1 pilots over the same fading realization
                    for (j, &p) in scheme.positions().iter().enumerate() {
                        let z: f64 = rng.sample(StandardNormal);
                        s.pilot_obs[j] = s.gains[p] + noise_std * z;
                    }
                    for i in 0..n {
                        let z: f64 = rng.sample(StandardNormal);
                        s.received[i] = s.gains[i] * s.symbols[i] + noise_std * z;
                    }
                    let pilots = scheme.count();
                    match kind {
                        EstimatorKind::Perfect => s.gains_hat.copy_from_slice(&s.gains),
                        EstimatorKind::LinearInterp => {
                            linear_interpolate(scheme, &s.pilot_obs[..pilots], &mut s.gains_hat)
                        }
                        EstimatorKind::Mmse => mmse
                            .as_ref()
                            .expect("interpolator prepared for MMSE")
                            .estimate_into(&s.pilot_obs[..pilots], &mut s.gains_hat),
                    }
                    for i in 0..n {
                        s.llrs[i] = map_llr(gamma, s.gains_hat[i], s.received[i]);
                    }
                    s.decode_and_count(perm)
                },
            )
            .sum();
        points.push(SweepPoint {
            snr_db: db,
            estimate: BerEstimate::from_counts(errors, sweep.frames * code.info_len() as u64),
        });
    }
    Ok(points)
}

/// Sorted-subcarrier link with full channel knowledge at both ends: each
/// frame re-sorts subcarriers by `|h|²` ascending, routes coded bit
/// `P2(j)` onto the j-th least reliable subcarrier, equalizes by the
/// known gain and SC-decodes.
pub fn run_sorted_sim(
    code: &PolarCode,
    perm: &Permutation,
    model: &FadingModel,
    sweep: &SnrSweep,
    seed: u64,
    rule: ScRule,
) -> Result<Vec<SweepPoint>> {
    let n = code.block_len();
    if model.block_len != n || perm.len() != n {
        return Err(Error::LengthMismatch {
            what: "sorted-link dimensions",
            expected: n,
            actual: model.block_len.min(perm.len()),
        });
    }
    let correlation = model.correlation();
    let sampler = FadingSampler::new(&correlation, model.channel_power)?;

    let mut points = Vec::with_capacity(sweep.snr_db.len());
    for (idx, &db) in sweep.snr_db.iter().enumerate() {
        let gamma = db_to_linear(db);
        let point_seed = rng::child_seed(seed, idx as u64);
        let noise_std = (1.0 / gamma).sqrt();
        let errors: u64 = (0..sweep.frames as usize)
            .into_par_iter()
            .with_min_len(32)
            .map_init(
                || LinkScratch::new(code, rule),
                |s, frame| {
                    let mut rng = rng::substream(point_seed, frame as u64);
                    for bit in s.data.iter_mut() {
                        *bit = u8::from(rng.random::<bool>());
                    }
                    s.codeword.fill(0);
                    for (&pos, &bit) in code.info_set().iter().zip(&s.data) {
                        s.codeword[pos] = bit;
                    }
                    crate::polar::polar_transform(&mut s.codeword);

                    sampler.sample_into(&mut rng, &mut s.gains);
                    // subcarriers by increasing |h|^2; ties by index
                    for (i, o) in s.order.iter_mut().enumerate() {
                        *o = i;
                    }
                    let gains = &s.gains;
                    s.order.sort_unstable_by(|&a, &b| {
                        let ga = gains[a] * gains[a];
                        let gb = gains[b] * gains[b];
                        ga.partial_cmp(&gb)
                            .unwrap_or(std::cmp::Ordering::Equal)
                            .then(a.cmp(&b))
                    });

                    for j in 0..n {
                        let sub = s.order[j];
                        let x = 2.0 * f64::from(s.codeword[perm.at(j)]) - 1.0;
                        let z: f64 = rng.sample(StandardNormal);
                        let y = s.gains[sub] * x + noise_std * z;
                        // equalize, then scale by the effective gain
                        let h = s.gains[sub];
                        let h_safe = if h.abs() < 1e-12 {
                            1e-12f64.copysign(h)
                        } else {
                            h
                        };
                        let equalized = y / h_safe;
                        s.llrs[j] = map_llr(gamma, h * h, equalized);
                    }
                    s.decode_and_count(perm)
                },
            )
            .sum();
        points.push(SweepPoint {
            snr_db: db,
            estimate: BerEstimate::from_counts(errors, sweep.frames * code.info_len() as u64),
        });
    }
    Ok(points)
}

#[inline]
fn map_llr(gamma: f64, gain: f64, obs: f64) -> f64 {
    let l = -2.0 * gamma * gain * obs;
    if l.is_nan() {
        0.0
    } else {
        l.clamp(-LLR_CLAMP, LLR_CLAMP)
    }
}

struct LinkScratch {
    decoder: ScDecoder,
    data: Vec<u8>,
    codeword: Vec<u8>,
    symbols: Vec<f64>,
    gains: Vec<f64>,
    gains_hat: Vec<f64>,
    pilot_obs: Vec<f64>,
    received: Vec<f64>,
    llrs: Vec<f64>,
    demapped: Vec<f64>,
    order: Vec<usize>,
}

impl LinkScratch {
    fn new(code: &PolarCode, rule: ScRule) -> Self {
        let n = code.block_len();
        Self {
            decoder: ScDecoder::new(code, rule),
            data: vec![0; code.info_len()],
            codeword: vec![0; n],
            symbols: vec![0.0; n],
            gains: vec![0.0; n],
            gains_hat: vec![0.0; n],
            pilot_obs: vec![0.0; n],
            received: vec![0.0; n],
            llrs: vec![0.0; n],
            demapped: vec![0.0; n],
            order: vec![0; n],
        }
    }

    fn draw_and_encode<R: Rng>(&mut self, code: &PolarCode, perm: &Permutation, rng: &mut R) {
        for bit in self.data.iter_mut() {
            *bit = u8::from(rng.random::<bool>());
        }
        self.codeword.fill(0);
        for (&pos, &bit) in code.info_set().iter().zip(&self.data) {
            self.codeword[pos] = bit;
        }
        crate::polar::polar_transform(&mut self.codeword);
        for (i, s) in self.symbols.iter_mut().enumerate() {
            *s = 2.0 * f64::from(self.codeword[perm.at(i)]) - 1.0;
        }
    }

    fn decode_and_count(&mut self, perm: &Permutation) -> u64 {
        perm.demap_llrs_into(&self.llrs, &mut self.demapped);
        let decoded = self
            .decoder
            .decode(&self.demapped)
            .expect("scratch dimensions match the code");
        decoded
            .iter()
            .zip(&self.data)
            .filter(|(a, b)| a != b)
            .count() as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verbatim_pilot_positions() {
        // N=128, V=64: {1, 2, 4, ..., 126} one-based
        let s = PilotScheme::new(128, 64, PilotSpacing::Verbatim).unwrap();
        assert_eq!(s.count(), 64);
        assert_eq!(s.positions()[0], 0);
        assert_eq!(s.positions()[1], 1);
        assert_eq!(s.positions()[2], 3);
        assert_eq!(*s.positions().last().unwrap(), 125);

        // N=8, V=2: {1, 4} one-based
        let s = PilotScheme::new(8, 2, PilotSpacing::Verbatim).unwrap();
        assert_eq!(s.positions(), &[0, 3]);

        // V=1: only the leading pilot
        let s = PilotScheme::new(8, 1, PilotSpacing::Verbatim).unwrap();
        assert_eq!(s.positions(), &[0]);
    }

    #[test]
    fn verbatim_formula_collapse_is_an_error() {
        assert!(matches!(
            PilotScheme::new(8, 8, PilotSpacing::Verbatim),
            Err(Error::PilotCollapse { .. })
        ));
        // uniform spacing handles the same request
        let s = PilotScheme::new(8, 8, PilotSpacing::Uniform).unwrap();
        assert_eq!(s.positions(), &[0, 1, 2, 3, 4, 5, 6, 7]);
    }

    #[test]
    fn perfect_estimator_returns_truth() {
        let scheme = PilotScheme::new(8, 2, PilotSpacing::Verbatim).unwrap();
        let r = DMatrix::identity(8, 8);
        let h: Vec<f64> = (0..8).map(|i| i as f64 * 0.25 - 1.0).collect();
        let y = vec![0.0; 8];
        let est = estimate_channel(EstimatorKind::Perfect, &y, &h, &scheme, &r, 10.0).unwrap();
        assert_eq!(est, h);
    }

    #[test]
    fn linear_interp_midpoint() {
        let scheme = PilotScheme::from_positions(vec![0, 2], 4).unwrap();
        let mut preamble = vec![0.0; 4];
        preamble[0] = 1.0;
        preamble[2] = 3.0;
        let h = vec![0.0; 4];
        let r = DMatrix::identity(4, 4);
        let est = estimate_channel(
            EstimatorKind::LinearInterp,
            &preamble,
            &h,
            &scheme,
            &r,
            f64::INFINITY,
        )
        .unwrap();
        assert_eq!(est, vec![1.0, 2.0, 3.0, 3.0]);
    }

    #[test]
    fn mmse_with_full_pilots_and_no_noise_recovers_truth() {
        let n = 8;
        let corr = crate::channels::build_jakes_correlation(n, 0.2);
        let scheme = PilotScheme::from_positions((0..n).collect(), n).unwrap();
        let sampler = FadingSampler::new(&corr, 1.0).unwrap();
        let h = sampler.sample(&mut rng::substream(3, 0));
        let mut preamble = vec![0.0; n];
        preamble.copy_from_slice(&h);
        let est = estimate_channel(
            EstimatorKind::Mmse,
            &preamble,
            &h,
            &scheme,
            &corr,
            f64::INFINITY,
        )
        .unwrap();
        for (a, b) in est.iter().zip(&h) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn noiseless_link_has_zero_errors() {
        let code = PolarCode::new(16, 4).unwrap();
        let model = FadingModel::new(0.01, 1.0, 1.0, 16).unwrap();
        let scheme = PilotScheme::new(16, 4, PilotSpacing::Verbatim).unwrap();
        let sweep = SnrSweep::new(vec![150.0], 50).unwrap();
        let rows = run_link_sim(
            &code,
            None,
            &model,
            &scheme,
            EstimatorKind::Perfect,
            &sweep,
            5,
            ScRule::Exact,
        )
        .unwrap();
        assert_eq!(rows[0].estimate.bit_errors, 0);
    }

    #[test]
    fn identity_permutation_equals_no_permutation() {
        let code = PolarCode::new(16, 4).unwrap();
        let model = FadingModel::new(0.01, 1.0, 1.0, 16).unwrap();
        let scheme = PilotScheme::new(16, 4, PilotSpacing::Verbatim).unwrap();
        let sweep = SnrSweep::new(vec![0.0, 6.0], 400).unwrap();
        let ident = Permutation::identity(16);
        let a = run_link_sim(
            &code,
            None,
            &model,
            &scheme,
            EstimatorKind::Mmse,
            &sweep,
            9,
            ScRule::Exact,
        )
        .unwrap();
        let b = run_link_sim(
            &code,
            Some(&ident),
            &model,
            &scheme,
            EstimatorKind::Mmse,
            &sweep,
            9,
            ScRule::Exact,
        )
        .unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.estimate.bit_errors, y.estimate.bit_errors);
        }
    }

    #[test]
    fn sorted_sim_noiseless_is_error_free() {
        let code = PolarCode::new(16, 4).unwrap();
        let model = FadingModel::new(0.01, 1.0, 1.0, 16).unwrap();
        let sweep = SnrSweep::new(vec![150.0], 30).unwrap();
        let rows = run_sorted_sim(
            &code,
            &Permutation::identity(16),
            &model,
            &sweep,
            11,
            ScRule::Exact,
        )
        .unwrap();
        assert_eq!(rows[0].estimate.bit_errors, 0);
    }
}
