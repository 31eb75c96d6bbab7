//! Permutation layer between the encoder and the channel.
//!
//! The mapper routes coded bit `P(i)` onto channel position `i`; the
//! demapper restores channel position `i` back to codeword position
//! `P(i)`. Positions are 0-based everywhere in the library; conversions to
//! the 1-based reporting convention happen at the CLI boundary.

use crate::error::{Error, Result};

/// A bijection on codeword positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    /// Validates that `map` is a bijection on `0..map.len()`.
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let n = map.len();
        let mut seen = vec![false; n];
        for &m in &map {
            if m >= n || seen[m] {
                return Err(Error::NotBijection { len: n, dup: m });
            }
            seen[m] = true;
        }
        Ok(Self { map })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            map: (0..n).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// The coded-bit index routed to channel position `i`.
    pub fn at(&self, i: usize) -> usize {
        self.map[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    /// Reversal of this permutation's assignment order; used as the
    /// deliberately bad counterpart of an optimized permutation.
    pub fn reversed(&self) -> Self {
        let mut map = self.map.clone();
        map.reverse();
        Self { map }
    }

    /// Mapper: `out[i] = input[P(i)]`.
    pub fn apply_mapper(&self, codeword: &[u8]) -> Result<Vec<u8>> {
        if codeword.len() != self.map.len() {
            return Err(Error::LengthMismatch {
                what: "mapper input",
                expected: self.map.len(),
                actual: codeword.len(),
            });
        }
        Ok(self.map.iter().map(|&p| codeword[p]).collect())
    }

    /// Demapper: restores mapper order for received bits and their LLRs,
    /// `out[P(i)] = input[i]`.
    pub fn apply_demapper(&self, bits: &[u8], llrs: &[f64]) -> Result<(Vec<u8>, Vec<f64>)> {
        let n = self.map.len();
        if bits.len() != n || llrs.len() != n {
            return Err(Error::LengthMismatch {
                what: "demapper input",
                expected: n,
                actual: bits.len().max(llrs.len()),
            });
        }
        let mut out_bits = vec![0u8; n];
        let mut out_llrs = vec![0.0; n];
        for (i, &p) in self.map.iter().enumerate() {
            out_bits[p] = bits[i];
            out_llrs[p] = llrs[i];
        }
        Ok((out_bits, out_llrs))
    }

    /// Demapper for LLRs alone, into a caller-provided buffer.
    pub fn demap_llrs_into(&self, llrs: &[f64], out: &mut [f64]) {
        debug_assert_eq!(llrs.len(), self.map.len());
        debug_assert_eq!(out.len(), self.map.len());
        for (i, &p) in self.map.iter().enumerate() {
            out[p] = llrs[i];
        }
    }
}

/// An ordered choice of distinct codeword positions — the bits to route
/// onto the reliable channel positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selection {
    chosen: Vec<usize>,
}

impl Selection {
    pub fn new(chosen: Vec<usize>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for &c in &chosen {
            if !seen.insert(c) {
                return Err(Error::DuplicateSelection(c));
            }
        }
        Ok(Self { chosen })
    }

    pub fn len(&self) -> usize {
        self.chosen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chosen.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.chosen
    }
}

/// Expands a selection into a full permutation: the chosen bits occupy
/// the first `V` channel positions in order, the rest follow ascending.
///
/// With channels that are interchangeable outside the reliable set, any
/// tail order is statistically equivalent; ascending keeps it
/// deterministic.
pub fn selection_to_permutation(sel: &Selection, n: usize) -> Result<Permutation> {
    let targets: Vec<usize> = (0..sel.len()).collect();
    selection_to_permutation_at(sel, &targets, n)
}

/// Expands a selection into a full permutation placing chosen bit `j` at
/// channel position `targets[j]`; remaining bits fill the remaining
/// positions in ascending order of both position and bit index.
///
/// This generalization places a selection onto an arbitrary reliable set,
/// e.g. the pilot subcarriers of a link simulation.
pub fn selection_to_permutation_at(
    sel: &Selection,
    targets: &[usize],
    n: usize,
) -> Result<Permutation> {
    if targets.len() != sel.len() {
        return Err(Error::LengthMismatch {
            what: "selection targets",
            expected: sel.len(),
            actual: targets.len(),
        });
    }
    let mut map = vec![usize::MAX; n];
    for (&bit, &pos) in sel.as_slice().iter().zip(targets) {
        if bit >= n || pos >= n {
            return Err(Error::InvalidParameter(format!(
                "selection entry {bit} or target {pos} out of range for N={n}"
            )));
        }
        if map[pos] != usize::MAX {
            return Err(Error::DuplicateSelection(pos));
        }
        map[pos] = bit;
    }
    let chosen: std::collections::HashSet<usize> = sel.as_slice().iter().copied().collect();
    let mut rest = (0..n).filter(|i| !chosen.contains(i));
    for slot in map.iter_mut() {
        if *slot == usize::MAX {
            *slot = rest.next().expect("exactly N - V unchosen bits");
        }
    }
    Permutation::new(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_mapper_is_noop() {
        let p = Permutation::identity(6);
        let c = vec![1, 0, 0, 1, 1, 0];
        assert_eq!(p.apply_mapper(&c).unwrap(), c);
    }

    #[test]
    fn mapper_follows_definition() {
        let p = Permutation::new(vec![3, 0, 1, 2]).unwrap();
        let c = vec![1, 0, 0, 0];
        assert_eq!(p.apply_mapper(&c).unwrap(), vec![0, 1, 0, 0]);
    }

    #[test]
    fn demapper_inverts_mapper() {
        let p = Permutation::new(vec![3, 0, 1, 2]).unwrap();
        let llrs = vec![10.0, 20.0, 30.0, 40.0];
        let (_, out) = p.apply_demapper(&[0; 4], &llrs).unwrap();
        assert_eq!(out, vec![20.0, 30.0, 40.0, 10.0]);
    }

    #[test]
    fn rejects_non_bijections() {
        assert!(Permutation::new(vec![0, 0, 1]).is_err());
        assert!(Permutation::new(vec![0, 3]).is_err());
    }

    #[test]
    fn selection_expansion() {
        let sel = Selection::new(vec![2]).unwrap();
        let p = selection_to_permutation(&sel, 4).unwrap();
        assert_eq!(p.as_slice(), &[2, 0, 1, 3]);

        let sel = Selection::new(vec![5, 11]).unwrap();
        let p = selection_to_permutation(&sel, 16).unwrap();
        assert_eq!(
            p.as_slice(),
            &[5, 11, 0, 1, 2, 3, 4, 6, 7, 8, 9, 10, 12, 13, 14, 15]
        );

        let empty = Selection::new(vec![]).unwrap();
        let p = selection_to_permutation(&empty, 4).unwrap();
        assert_eq!(p.as_slice(), Permutation::identity(4).as_slice());
    }

    #[test]
    fn selection_at_targets() {
        let sel = Selection::new(vec![5, 2]).unwrap();
        let p = selection_to_permutation_at(&sel, &[1, 4], 6).unwrap();
        // chosen bits land at positions 1 and 4, the rest fill ascending
        assert_eq!(p.as_slice(), &[0, 5, 1, 3, 2, 4]);
    }

    #[test]
    fn duplicate_selection_rejected() {
        assert!(Selection::new(vec![1, 1]).is_err());
    }
}
