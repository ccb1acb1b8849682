/// Mixed-radix codec for outcome tuples. The first coordinate is the most
/// significant digit, so increasing codes enumerate tuples lexicographically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MixedRadix {
    radices: Vec<usize>,
}

impl MixedRadix {
    pub fn new(radices: Vec<usize>) -> Self {
        debug_assert!(radices.iter().all(|&r| r > 0));
        Self { radices }
    }

    pub fn radices(&self) -> &[usize] {
        &self.radices
    }

    /// Number of tuples, or `None` on overflow.
    pub fn count(&self) -> Option<u128> {
        self.radices
            .iter()
            .try_fold(1u128, |acc, &r| acc.checked_mul(r as u128))
    }

    pub fn encode(&self, digits: &[usize]) -> usize {
        debug_assert_eq!(digits.len(), self.radices.len());
        digits
            .iter()
            .zip(&self.radices)
            .fold(0usize, |acc, (&d, &r)| acc * r + d)
    }

    pub fn decode_into(&self, mut code: usize, digits: &mut [usize]) {
        for (slot, &r) in digits.iter_mut().zip(&self.radices).rev() {
            *slot = code % r;
            code /= r;
        }
    }

    pub fn decode(&self, code: usize) -> Vec<usize> {
        let mut digits = vec![0; self.radices.len()];
        self.decode_into(code, &mut digits);
        digits
    }

    /// Iterates every tuple in code order.
    pub fn tuples(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        let total = self.count().unwrap_or(0) as usize;
        (0..total).map(move |code| self.decode(code))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encode_decode_agree() {
        let mr = MixedRadix::new(vec![2, 3, 4]);
        assert_eq!(mr.count(), Some(24));
        for (code, tuple) in mr.tuples().enumerate() {
            assert_eq!(mr.encode(&tuple), code);
        }
        assert_eq!(mr.decode(5), vec![0, 1, 1]);
        assert_eq!(mr.encode(&[1, 0, 0]), 12);
    }

    #[test]
    fn empty_radix_has_one_tuple() {
        let mr = MixedRadix::new(vec![]);
        assert_eq!(mr.count(), Some(1));
        assert_eq!(mr.tuples().count(), 1);
    }

    #[test]
    fn overflow_is_reported() {
        let mr = MixedRadix::new(vec![usize::MAX, usize::MAX, 2]);
        assert_eq!(mr.count(), None);
    }
}
