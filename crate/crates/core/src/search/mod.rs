//! Monte Carlo BER estimation and the searches built on top of it:
//! exhaustive selection of the most valuable coded bits and
//! surrogate-assisted optimization of selections and full permutations.

mod surrogate;

pub use surrogate::{surrogate_optimize, Domain, Evaluation, Point, SearchOutcome};

use rand::Rng;
use rayon::prelude::*;

use crate::channels::{BscProfile, FadingModel, FadingSampler};
use crate::error::{Error, Result};
use crate::mapping::{selection_to_permutation, Permutation, Selection};
use crate::polar::{PolarCode, ScDecoder, ScRule, LLR_CLAMP};
use crate::rng;

/// Monte Carlo bit-error-rate estimate over information bits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerEstimate {
    pub bit_errors: u64,
    pub bits_tested: u64,
    pub ber: f64,
    /// Half-width of the normal-approximation 95% confidence interval.
    pub half_width_95: f64,
}

impl BerEstimate {
    pub fn from_counts(bit_errors: u64, bits_tested: u64) -> Self {
        assert!(bits_tested > 0);
        let ber = bit_errors as f64 / bits_tested as f64;
        let half_width_95 = 1.96 * (ber * (1.0 - ber) / bits_tested as f64).sqrt();
        Self {
            bit_errors,
            bits_tested,
            ber,
            half_width_95,
        }
    }

    /// Standard error of the estimate.
    pub fn std_error(&self) -> f64 {
        self.half_width_95 / 1.96
    }
}

/// Evaluation budget for a search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchBudget {
    pub max_evaluations: u64,
    pub frames_per_evaluation: u64,
    pub master_seed: u64,
}

impl SearchBudget {
    pub fn new(max_evaluations: u64, frames_per_evaluation: u64, master_seed: u64) -> Result<Self> {
        if max_evaluations == 0 || frames_per_evaluation == 0 {
            return Err(Error::InvalidParameter(
                "budget counts must be positive".into(),
            ));
        }
        Ok(Self {
            max_evaluations,
            frames_per_evaluation,
            master_seed,
        })
    }

    /// The common-random-numbers seed shared by every candidate
    /// evaluation of this search.
    pub fn evaluation_seed(&self) -> u64 {
        rng::child_seed(self.master_seed, 0x45564c) // "EVL"
    }
}

/// Channel used by [`estimate_ber`].
#[derive(Debug, Clone)]
pub enum Channel {
    Bsc(BscProfile),
    /// Correlated slow fading with perfect channel knowledge at the
    /// demodulator. Pilot-based estimation lives in the `ofdm` module.
    Fading(FadingModel),
}

/// Estimates the information-bit error rate of `code` when its codeword
/// is routed through `channel` by `perm`.
///
/// Per frame: draw uniform data, encode, map, transmit, demap, SC-decode
/// and count data-bit errors. Each frame runs on an RNG substream derived
/// from `(seed, frame)`, so the result is bit-identical across reruns and
/// worker counts.
pub fn estimate_ber(
    code: &PolarCode,
    perm: &Permutation,
    channel: &Channel,
    frames: u64,
    seed: u64,
    rule: ScRule,
) -> Result<BerEstimate> {
    if frames == 0 {
        return Err(Error::InvalidParameter("frames must be >= 1".into()));
    }
    let n = code.block_len();
    if perm.len() != n {
        return Err(Error::LengthMismatch {
            what: "permutation",
            expected: n,
            actual: perm.len(),
        });
    }
    let errors = match channel {
        Channel::Bsc(profile) => {
            if profile.len() != n {
                return Err(Error::LengthMismatch {
                    what: "BSC profile",
                    expected: n,
                    actual: profile.len(),
                });
            }
            run_bsc_frames(code, perm, profile, frames, seed, rule)
        }
        Channel::Fading(model) => {
            if model.block_len != n {
                return Err(Error::LengthMismatch {
                    what: "fading model",
                    expected: n,
                    actual: model.block_len,
                });
            }
            let sampler = FadingSampler::for_model(model)?;
            run_fading_frames(code, perm, model, &sampler, frames, seed, rule)
        }
    };
    Ok(BerEstimate::from_counts(
        errors,
        frames * code.info_len() as u64,
    ))
}

struct FrameScratch {
    decoder: ScDecoder,
    data: Vec<u8>,
    codeword: Vec<u8>,
    mapped: Vec<u8>,
    received: Vec<u8>,
    llrs: Vec<f64>,
    demapped: Vec<f64>,
    symbols: Vec<f64>,
    gains: Vec<f64>,
}

impl FrameScratch {
    fn new(code: &PolarCode, rule: ScRule) -> Self {
        let n = code.block_len();
        Self {
            decoder: ScDecoder::new(code, rule),
            data: vec![0; code.info_len()],
            codeword: vec![0; n],
            mapped: vec![0; n],
            received: vec![0; n],
            llrs: vec![0.0; n],
            demapped: vec![0.0; n],
            symbols: vec![0.0; n],
            gains: vec![0.0; n],
        }
    }

    fn draw_data<R: rand::Rng>(&mut self, rng: &mut R) {
        for bit in self.data.iter_mut() {
            *bit = u8::from(rng.random::<bool>());
        }
    }

    fn encode_and_map(&mut self, code: &PolarCode, perm: &Permutation) {
        self.codeword.fill(0);
        for (&pos, &bit) in code.info_set().iter().zip(&self.data) {
            self.codeword[pos] = bit;
        }
        crate::polar::polar_transform(&mut self.codeword);
        for (i, slot) in self.mapped.iter_mut().enumerate() {
            *slot = self.codeword[perm.at(i)];
        }
    }

    fn count_errors(&mut self, perm: &Permutation) -> u64 {
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

fn run_bsc_frames(
    code: &PolarCode,
    perm: &Permutation,
    profile: &BscProfile,
    frames: u64,
    seed: u64,
    rule: ScRule,
) -> u64 {
    (0..frames as usize)
        .into_par_iter()
        .with_min_len(256)
        .map_init(
            || FrameScratch::new(code, rule),
            |scratch, frame| {
                let mut rng = rng::substream(seed, frame as u64);
                scratch.draw_data(&mut rng);
                scratch.encode_and_map(code, perm);
                profile.transmit_into(
                    &scratch.mapped,
                    &mut rng,
                    &mut scratch.received,
                    &mut scratch.llrs,
                );
                scratch.count_errors(perm)
            },
        )
        .sum()
}

fn run_fading_frames(
    code: &PolarCode,
    perm: &Permutation,
    model: &FadingModel,
    sampler: &FadingSampler,
    frames: u64,
    seed: u64,
    rule: ScRule,
) -> u64 {
    let gamma = model.snr;
    let noise_std = if gamma.is_finite() {
        (1.0 / gamma).sqrt()
    } else {
        0.0
    };
    (0..frames as usize)
        .into_par_iter()
        .with_min_len(64)
        .map_init(
            || FrameScratch::new(code, rule),
            |scratch, frame| {
                let mut rng = rng::substream(seed, frame as u64);
                scratch.draw_data(&mut rng);
                scratch.encode_and_map(code, perm);
                for (s, &b) in scratch.symbols.iter_mut().zip(&scratch.mapped) {
                    *s = 2.0 * f64::from(b) - 1.0;
                }
                sampler.sample_into(&mut rng, &mut scratch.gains);
                for i in 0..scratch.symbols.len() {
                    let z: f64 = rng.sample(rand_distr::StandardNormal);
                    let y = scratch.gains[i] * scratch.symbols[i] + noise_std * z;
                    scratch.llrs[i] =
                        (-2.0 * gamma * scratch.gains[i] * y).clamp(-LLR_CLAMP, LLR_CLAMP);
                }
                scratch.count_errors(perm)
            },
        )
        .sum()
}

/// One row of an exhaustive or logged search.
#[derive(Debug, Clone)]
pub struct SelectionResult {
    pub selection: Selection,
    pub estimate: BerEstimate,
}

/// Evaluates every `v`-combination of codeword positions against the
/// two-level profile (zero flip probability on the chosen positions'
/// channels, `p` elsewhere) and returns the best selection plus the full
/// table, in lexicographic candidate order.
pub fn brute_force_select(
    n: usize,
    k: usize,
    v: usize,
    p: f64,
    budget: &SearchBudget,
    rule: ScRule,
) -> Result<(Selection, Vec<SelectionResult>)> {
    let code = PolarCode::new(n, k)?;
    let count = binomial(n, v);
    if count > budget.max_evaluations {
        return Err(Error::BudgetExceeded {
            count,
            max: budget.max_evaluations,
        });
    }
    let profile = BscProfile::two_level(n, v, p)?;
    let channel = Channel::Bsc(profile);
    let eval_seed = budget.evaluation_seed();

    let mut table = Vec::with_capacity(count as usize);
    let mut best: Option<(f64, Selection)> = None;
    for combo in Combinations::new(n, v) {
        let selection = Selection::new(combo)?;
        let perm = selection_to_permutation(&selection, n)?;
        let estimate = estimate_ber(
            &code,
            &perm,
            &channel,
            budget.frames_per_evaluation,
            eval_seed,
            rule,
        )?;
        if best.as_ref().is_none_or(|(b, _)| estimate.ber < *b) {
            best = Some((estimate.ber, selection.clone()));
        }
        table.push(SelectionResult {
            selection,
            estimate,
        });
    }
    let (_, best_selection) = best.expect("at least one combination");
    Ok((best_selection, table))
}

/// Max/min BER ratio across a search table.
pub fn table_gain(table: &[SelectionResult]) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for row in table {
        lo = lo.min(row.estimate.ber);
        hi = hi.max(row.estimate.ber);
    }
    hi / lo
}

/// Flip probabilities decreasing linearly from 0.5 (first position) to 0
/// (last position).
pub fn ramp_profile(n: usize) -> Result<BscProfile> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "ramp profile needs N >= 2, got {n}"
        )));
    }
    let probs = (0..n)
        .map(|i| 0.5 * (n - 1 - i) as f64 / (n - 1) as f64)
        .collect();
    BscProfile::new(probs)
}

/// Surrogate search for a good `v`-bit selection on the two-level
/// profile. Candidate evaluations share one set of noise realizations.
pub fn surrogate_select(
    n: usize,
    k: usize,
    v: usize,
    p: f64,
    budget: &SearchBudget,
    rule: ScRule,
) -> Result<(Selection, SearchOutcome)> {
    let code = PolarCode::new(n, k)?;
    let profile = BscProfile::two_level(n, v, p)?;
    let channel = Channel::Bsc(profile);
    let eval_seed = budget.evaluation_seed();
    let outcome = surrogate_optimize(
        |point: &Point| {
            let perm = point.to_permutation(n)?;
            Ok(estimate_ber(
                &code,
                &perm,
                &channel,
                budget.frames_per_evaluation,
                eval_seed,
                rule,
            )?
            .ber)
        },
        &Domain::Selection { n, v },
        budget.max_evaluations,
        budget.master_seed,
    )?;
    let best = outcome
        .best_point
        .as_selection()
        .expect("selection domain yields selections")
        .clone();
    Ok((best, outcome))
}

/// Surrogate search for a full permutation minimizing BER on the
/// decreasing ramp profile.
pub fn optimize_permutation(
    n: usize,
    k: usize,
    budget: &SearchBudget,
    rule: ScRule,
) -> Result<(Permutation, SearchOutcome)> {
    let code = PolarCode::new(n, k)?;
    let channel = Channel::Bsc(ramp_profile(n)?);
    let eval_seed = budget.evaluation_seed();
    let outcome = surrogate_optimize(
        |point: &Point| {
            let perm = point.to_permutation(n)?;
            Ok(estimate_ber(
                &code,
                &perm,
                &channel,
                budget.frames_per_evaluation,
                eval_seed,
                rule,
            )?
            .ber)
        },
        &Domain::Permutation { n },
        budget.max_evaluations,
        budget.master_seed,
    )?;
    let best = outcome
        .best_point
        .as_permutation()
        .expect("permutation domain yields permutations")
        .clone();
    Ok((best, outcome))
}

fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc = 1u64;
    for i in 0..k {
        acc = acc * (n - i) as u64 / (i + 1) as u64;
    }
    acc
}

/// Lexicographic k-combinations of `0..n`.
struct Combinations {
    n: usize,
    state: Vec<usize>,
    started: bool,
    done: bool,
}

impl Combinations {
    fn new(n: usize, k: usize) -> Self {
        Self {
            n,
            state: (0..k).collect(),
            started: false,
            done: k > n,
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(self.state.clone());
        }
        let k = self.state.len();
        if k == 0 {
            self.done = true;
            return None;
        }
        let mut i = k;
        loop {
            if i == 0 {
                self.done = true;
                return None;
            }
            i -= 1;
            if self.state[i] < self.n - (k - i) {
                self.state[i] += 1;
                for j in i + 1..k {
                    self.state[j] = self.state[j - 1] + 1;
                }
                return Some(self.state.clone());
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_channel_means_zero_errors() {
        let code = PolarCode::new(16, 3).unwrap();
        let perm = Permutation::identity(16);
        let channel = Channel::Bsc(BscProfile::uniform(16, 0.0).unwrap());
        let est = estimate_ber(&code, &perm, &channel, 500, 1, ScRule::Exact).unwrap();
        assert_eq!(est.bit_errors, 0);
        assert_eq!(est.bits_tested, 1500);
    }

    #[test]
    fn useless_channel_gives_half_ber() {
        // All-zero LLRs decode to all-zeros; random data has mean weight
        // one half.
        let code = PolarCode::new(16, 3).unwrap();
        let perm = Permutation::identity(16);
        let channel = Channel::Bsc(BscProfile::uniform(16, 0.5).unwrap());
        let est = estimate_ber(&code, &perm, &channel, 100_000, 2, ScRule::Exact).unwrap();
        assert!(
            (est.ber - 0.5).abs() <= 3.0 * est.std_error(),
            "ber {}",
            est.ber
        );
    }

    #[test]
    fn estimates_are_bit_identical_across_runs() {
        let code = PolarCode::new(32, 8).unwrap();
        let perm = Permutation::identity(32);
        let channel = Channel::Bsc(BscProfile::uniform(32, 0.1).unwrap());
        let a = estimate_ber(&code, &perm, &channel, 5_000, 3, ScRule::Exact).unwrap();
        let b = estimate_ber(&code, &perm, &channel, 5_000, 3, ScRule::Exact).unwrap();
        assert_eq!(a.bit_errors, b.bit_errors);
    }

    #[test]
    fn ramp_profile_endpoints_and_step() {
        let prof = ramp_profile(5).unwrap();
        let expect = [0.5, 0.375, 0.25, 0.125, 0.0];
        for (a, b) in prof.probs().iter().zip(expect.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        let prof = ramp_profile(2).unwrap();
        assert_eq!(prof.probs(), &[0.5, 0.0]);
        assert!(ramp_profile(1).is_err());
    }

    #[test]
    fn combinations_enumerate_lexicographically() {
        let all: Vec<Vec<usize>> = Combinations::new(4, 2).collect();
        assert_eq!(
            all,
            vec![
                vec![0, 1],
                vec![0, 2],
                vec![0, 3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3]
            ]
        );
        assert_eq!(Combinations::new(5, 1).count(), 5);
        assert_eq!(binomial(16, 2), 120);
    }

    #[test]
    fn brute_force_table_has_choose_rows() {
        let budget = SearchBudget::new(200, 200, 11).unwrap();
        let (_, table) = brute_force_select(8, 2, 1, 0.2, &budget, ScRule::Exact).unwrap();
        assert_eq!(table.len(), 8);
        let best_ber = table
            .iter()
            .map(|r| r.estimate.ber)
            .fold(f64::INFINITY, f64::min);
        let (best, _) = brute_force_select(8, 2, 1, 0.2, &budget, ScRule::Exact).unwrap();
        let best_row = table
            .iter()
            .find(|r| r.selection == best)
            .expect("best selection in table");
        assert_eq!(best_row.estimate.ber, best_ber);
    }

    #[test]
    fn brute_force_respects_budget() {
        let budget = SearchBudget::new(10, 100, 1).unwrap();
        assert!(matches!(
            brute_force_select(16, 3, 2, 0.2, &budget, ScRule::Exact),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn tiny_permutation_search_routes_useful_bit_to_clean_channel() {
        // N=2, K=1: info position is 1; codeword = (u1, u1). The ramp
        // profile is (0.5, 0): both permutations route one copy through
        // the clean channel, so both decode perfectly.
        let budget = SearchBudget::new(4, 500, 5).unwrap();
        let (perm, outcome) = optimize_permutation(2, 1, &budget, ScRule::Exact).unwrap();
        assert_eq!(perm.len(), 2);
        assert_eq!(outcome.best_value, 0.0);
    }

    #[test]
    fn fading_channel_estimates_run() {
        let model = FadingModel::new(0.01, 1.0, 100.0, 8).unwrap();
        let code = PolarCode::new(8, 2).unwrap();
        let perm = Permutation::identity(8);
        let est = estimate_ber(
            &code,
            &perm,
            &Channel::Fading(model),
            2_000,
            7,
            ScRule::Exact,
        )
        .unwrap();
        assert!(est.ber < 0.5);
    }
}
