//! Information-set construction from the universal reliability sequence.

use crate::error::{Error, Result};

pub use super::sequence_table::NR_RELIABILITY_SEQUENCE;

/// Returns the length-`n` reliability order: the universal 1024-entry
/// sequence filtered to entries below `n`, preserving order (ascending
/// reliability, 0-based positions).
///
/// `n` must be a power of two in 2..=1024. This nested-filtering rule is
/// what makes information sets monotone: the order for a shorter block is
/// a subsequence of the order for any longer one.
pub fn load_reliability_order(n: usize) -> Result<Vec<usize>> {
    if !n.is_power_of_two() || n < 2 || n > 1024 {
        return Err(Error::InvalidBlockLength(n));
    }
    Ok(NR_RELIABILITY_SEQUENCE
        .iter()
        .map(|&v| v as usize)
        .filter(|&v| v < n)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_is_a_permutation() {
        let mut seen = [false; 1024];
        for &v in NR_RELIABILITY_SEQUENCE.iter() {
            assert!(!seen[v as usize], "duplicate entry {v}");
            seen[v as usize] = true;
        }
    }

    #[test]
    fn table_respects_binary_domination() {
        // Any valid polar reliability order must rank an index below every
        // index whose set bits are a superset of its own.
        let mut pos = [0usize; 1024];
        for (p, &v) in NR_RELIABILITY_SEQUENCE.iter().enumerate() {
            pos[v as usize] = p;
        }
        for j in 1..1024usize {
            let mut s = (j - 1) & j;
            loop {
                assert!(
                    pos[s] < pos[j],
                    "domination violated: {s} not before {j}"
                );
                if s == 0 {
                    break;
                }
                s = (s - 1) & j;
            }
        }
    }

    #[test]
    fn filtered_orders() {
        assert_eq!(load_reliability_order(2).unwrap(), vec![0, 1]);
        assert_eq!(
            load_reliability_order(16).unwrap(),
            vec![0, 1, 2, 4, 8, 3, 5, 9, 6, 10, 12, 7, 11, 13, 14, 15]
        );
        let full = load_reliability_order(1024).unwrap();
        assert_eq!(full.len(), 1024);
        assert_eq!(full[0], NR_RELIABILITY_SEQUENCE[0] as usize);
    }

    #[test]
    fn rejects_bad_lengths() {
        for n in [0, 1, 3, 24, 2048] {
            assert!(load_reliability_order(n).is_err(), "n={n}");
        }
    }
}
