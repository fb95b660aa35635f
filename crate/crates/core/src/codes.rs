//! Bit-packed ±1 codes and Hamming distance.
//!
//! Node `i` owns `ceil(bits / 64)` consecutive words. Bit `b` of the code
//! lives in word `b / 64` at position `b % 64` (least significant first) and
//! is set exactly when the code entry is `+1`. Unused high bits of the last
//! word are always zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DenseMatrix, HyperParams};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CodesMetadata {
    pub dataset: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hyperparams: Option<HyperParams>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryCodes {
    n: usize,
    bits: usize,
    words: Vec<u64>,
    pub metadata: CodesMetadata,
}

#[inline]
pub fn words_per_code(bits: usize) -> usize {
    bits.div_ceil(64)
}

/// `sign(x)` with `sign(0) = +1`.
#[inline]
pub fn sign(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Number of differing bits between two packed codes of equal word count.
pub fn hamming(a: &[u64], b: &[u64]) -> Result<u32> {
    if a.len() != b.len() {
        return Err(Error::WidthMismatch {
            left: a.len() * 64,
            right: b.len() * 64,
        });
    }
    Ok(hamming_unchecked(a, b))
}

#[inline]
pub(crate) fn hamming_unchecked(a: &[u64], b: &[u64]) -> u32 {
    a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones()).sum()
}

impl BinaryCodes {
    /// Packs a matrix whose entries are exactly −1 or +1.
    pub fn pack(b: &DenseMatrix) -> Result<Self> {
        for i in 0..b.rows() {
            for (j, &v) in b.row(i).iter().enumerate() {
                if v != 1.0 && v != -1.0 {
                    return Err(Error::NotBinary {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
            }
        }
        Ok(Self::from_embedding(b))
    }

    /// Binarizes with `sign` (zero maps to +1) and packs.
    pub fn from_embedding(u: &DenseMatrix) -> Self {
        let bits = u.cols();
        let wpc = words_per_code(bits);
        let mut words = vec![0u64; u.rows() * wpc];
        for i in 0..u.rows() {
            let code = &mut words[i * wpc..(i + 1) * wpc];
            for (b, &v) in u.row(i).iter().enumerate() {
                if v >= 0.0 {
                    code[b / 64] |= 1u64 << (b % 64);
                }
            }
        }
        BinaryCodes {
            n: u.rows(),
            bits,
            words,
            metadata: CodesMetadata::default(),
        }
    }

    /// Builds from raw words, clearing nothing: trailing bits must already be zero.
    pub fn from_words(n: usize, bits: usize, words: Vec<u64>) -> Result<Self> {
        let wpc = words_per_code(bits);
        if words.len() != n * wpc {
            return Err(Error::Dimension(format!(
                "{n} codes of {bits} bits need {} words, got {}",
                n * wpc,
                words.len()
            )));
        }
        let codes = BinaryCodes {
            n,
            bits,
            words,
            metadata: CodesMetadata::default(),
        };
        if !bits.is_multiple_of(64) {
            let mask = !((1u64 << (bits % 64)) - 1);
            for i in 0..n {
                if codes.code(i)[wpc - 1] & mask != 0 {
                    return Err(Error::Dimension(format!(
                        "code {i} has bits set beyond width {bits}"
                    )));
                }
            }
        }
        Ok(codes)
    }

    pub fn with_metadata(mut self, metadata: CodesMetadata) -> Self {
        self.metadata = metadata;
        self
    }

    pub fn unpack(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.n, self.bits, |i, b| {
            if self.bit(i, b) {
                1.0
            } else {
                -1.0
            }
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn words_per_code(&self) -> usize {
        words_per_code(self.bits)
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn code(&self, i: usize) -> &[u64] {
        let w = self.words_per_code();
        &self.words[i * w..(i + 1) * w]
    }

    #[inline]
    pub fn bit(&self, i: usize, b: usize) -> bool {
        self.code(i)[b / 64] >> (b % 64) & 1 == 1
    }

    /// Hamming distance between node `i` of `self` and node `j` of `other`.
    pub fn distance_to(&self, i: usize, other: &BinaryCodes, j: usize) -> Result<u32> {
        if self.bits != other.bits {
            return Err(Error::WidthMismatch {
                left: self.bits,
                right: other.bits,
            });
        }
        Ok(hamming_unchecked(self.code(i), other.code(j)))
    }

    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> u32 {
        hamming_unchecked(self.code(i), self.code(j))
    }

    /// Mean of each ±1 bit column.
    pub fn bit_means(&self) -> Vec<f64> {
        (0..self.bits)
            .map(|b| {
                let ones = (0..self.n).filter(|&i| self.bit(i, b)).count() as f64;
                (2.0 * ones - self.n as f64) / self.n as f64
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_by_two_layout() {
        let b = DenseMatrix::from_rows(&[[1.0, -1.0], [-1.0, 1.0]]).unwrap();
        let c = BinaryCodes::pack(&b).unwrap();
        assert_eq!(c.words(), &[0b01, 0b10]);
        assert_eq!(c.unpack(), b);
    }

    #[test]
    fn all_ones_fills_a_word() {
        let b = DenseMatrix::from_fn(1, 64, |_, _| 1.0);
        let c = BinaryCodes::pack(&b).unwrap();
        assert_eq!(c.words(), &[u64::MAX]);
    }

    #[test]
    fn width_65_spills_into_second_word() {
        let b = DenseMatrix::from_fn(1, 65, |_, _| 1.0);
        let c = BinaryCodes::pack(&b).unwrap();
        assert_eq!(c.words(), &[u64::MAX, 1]);
        let b = DenseMatrix::from_fn(1, 65, |_, j| if j == 64 { -1.0 } else { 1.0 });
        assert_eq!(BinaryCodes::pack(&b).unwrap().words(), &[u64::MAX, 0]);
    }

    #[test]
    fn rejects_non_binary_entry() {
        let b = DenseMatrix::from_rows(&[[1.0, -1.0], [0.5, 1.0]]).unwrap();
        match BinaryCodes::pack(&b) {
            Err(Error::NotBinary { row: 1, col: 0, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sign_of_zero_is_positive() {
        let u = DenseMatrix::from_rows(&[[0.0, -0.0, -1e-300]]).unwrap();
        let c = BinaryCodes::from_embedding(&u);
        // -0.0 >= 0.0 holds in IEEE arithmetic
        assert_eq!(c.words(), &[0b011]);
    }

    #[test]
    fn hamming_examples() {
        let a = [0b1011u64];
        assert_eq!(hamming(&a, &a).unwrap(), 0);
        assert_eq!(hamming(&[0xFFFF], &[0]).unwrap(), 16);
        // (+1,-1,+1,+1) vs (+1,+1,+1,-1)
        let x = DenseMatrix::from_rows(&[[1.0, -1.0, 1.0, 1.0], [1.0, 1.0, 1.0, -1.0]]).unwrap();
        let c = BinaryCodes::pack(&x).unwrap();
        assert_eq!(c.distance(0, 1), 2);
        assert!(hamming(&[0, 0], &[0]).is_err());
    }

    #[test]
    fn from_words_rejects_stray_trailing_bits() {
        assert!(BinaryCodes::from_words(1, 3, vec![0b1000]).is_err());
        assert!(BinaryCodes::from_words(1, 3, vec![0b111]).is_ok());
    }

    fn pm_matrix() -> impl Strategy<Value = DenseMatrix> {
        (1usize..12, 1usize..200).prop_flat_map(|(n, k)| {
            proptest::collection::vec(any::<bool>(), n * k).prop_map(move |bits| {
                let data = bits.into_iter().map(|b| if b { 1.0 } else { -1.0 }).collect();
                DenseMatrix::new(n, k, data).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn pack_unpack_round_trip(b in pm_matrix()) {
            let c = BinaryCodes::pack(&b).unwrap();
            prop_assert_eq!(c.unpack(), b.clone());
            let again = BinaryCodes::from_words(c.n(), c.bits(), c.words().to_vec()).unwrap();
            prop_assert_eq!(again.words(), c.words());
        }

        #[test]
        fn hamming_is_a_metric(b in pm_matrix()) {
            let c = BinaryCodes::pack(&b).unwrap();
            let n = c.n();
            for i in 0..n {
                prop_assert_eq!(c.distance(i, i), 0);
                for j in 0..n {
                    let dij = c.distance(i, j);
                    prop_assert_eq!(dij, c.distance(j, i));
                    prop_assert!(dij as usize <= c.bits());
                    prop_assert_eq!(dij == 0, c.code(i) == c.code(j));
                    for l in 0..n {
                        prop_assert!(dij <= c.distance(i, l) + c.distance(l, j));
                    }
                }
            }
        }
    }
}
