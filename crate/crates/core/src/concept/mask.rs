use std::fmt;

/// Packed boolean node mask.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConceptMask {
    words: Vec<u64>,
    len: usize,
}

impl ConceptMask {
    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut m = Self {
            words: vec![u64::MAX; len.div_ceil(64)],
            len,
        };
        m.clear_tail();
        m
    }

    pub fn from_fn(len: usize, mut f: impl FnMut(usize) -> bool) -> Self {
        let mut m = Self::zeros(len);
        for i in 0..len {
            if f(i) {
                m.set(i, true);
            }
        }
        m
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        Self::from_fn(bits.len(), |i| bits[i])
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit {i} out of range for mask of {}", self.len);
        let bit = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= bit;
        } else {
            self.words[i / 64] &= !bit;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let tz = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + tz)
            })
        })
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.len).map(|i| self.get(i)).collect()
    }

    pub fn and(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a & b)
    }

    pub fn or(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a | b)
    }

    pub fn not(&self) -> Self {
        let mut m = Self {
            words: self.words.iter().map(|w| !w).collect(),
            len: self.len,
        };
        m.clear_tail();
        m
    }

    /// Bits `range` as a new mask.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        Self::from_fn(range.len(), |i| self.get(range.start + i))
    }

    pub fn concat<'a>(parts: impl IntoIterator<Item = &'a ConceptMask>) -> Self {
        let parts: Vec<&ConceptMask> = parts.into_iter().collect();
        let len = parts.iter().map(|p| p.len).sum();
        let mut out = Self::zeros(len);
        let mut offset = 0;
        for p in parts {
            for i in p.iter_ones() {
                out.set(offset + i, true);
            }
            offset += p.len;
        }
        out
    }

    fn zip(&self, other: &Self, f: impl Fn(u64, u64) -> u64) -> Self {
        assert_eq!(self.len, other.len, "mask lengths differ");
        Self {
            words: self.words.iter().zip(&other.words).map(|(&a, &b)| f(a, b)).collect(),
            len: self.len,
        }
    }

    fn clear_tail(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }
}

impl fmt::Debug for ConceptMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        f.write_str("]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn not_keeps_tail_clear() {
        let m = ConceptMask::zeros(70).not();
        assert_eq!(m.count_ones(), 70);
        assert_eq!(m, ConceptMask::ones(70));
    }

    #[test]
    fn concat_and_slice() {
        let a = ConceptMask::from_bools(&[true, false, true]);
        let b = ConceptMask::from_bools(&[false, true]);
        let c = ConceptMask::concat([&a, &b]);
        assert_eq!(c.to_bools(), vec![true, false, true, false, true]);
        assert_eq!(c.slice(3..5), b);
        assert_eq!(c.iter_ones().collect::<Vec<_>>(), vec![0, 2, 4]);
    }
}
