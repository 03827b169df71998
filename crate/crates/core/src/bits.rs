//! Fixed-width bit rows used by the dense reachability tables.

const WORD: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Bits {
    words: Vec<u64>,
    len: usize,
}

impl Bits {
    pub(crate) fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(WORD)],
            len,
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.len
    }

    pub(crate) fn set(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / WORD] |= 1 << (i % WORD);
    }

    #[cfg(test)]
    pub(crate) fn get(&self, i: usize) -> bool {
        i < self.len && (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    pub(crate) fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// `self |= other << shift`, truncated to `self.len()`.
    pub(crate) fn or_shifted(&mut self, other: &Bits, shift: usize) {
        let word_shift = shift / WORD;
        let bit_shift = shift % WORD;
        let n = self.words.len();
        if word_shift >= n {
            return;
        }
        for (src_idx, &w) in other.words.iter().enumerate() {
            if w == 0 {
                continue;
            }
            let dst = src_idx + word_shift;
            if dst >= n {
                break;
            }
            if bit_shift == 0 {
                self.words[dst] |= w;
            } else {
                self.words[dst] |= w << bit_shift;
                if dst + 1 < n {
                    self.words[dst + 1] |= w >> (WORD - bit_shift);
                }
            }
        }
        self.clear_tail();
    }

    fn clear_tail(&mut self) {
        let rem = self.len % WORD;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    /// Indices of set bits, ascending.
    pub(crate) fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let tz = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * WORD + tz)
            })
        })
    }
}
