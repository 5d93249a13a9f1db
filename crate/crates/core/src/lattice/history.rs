//! Ring buffer of trajectory snapshots for backwards-in-time averaging.

use std::collections::VecDeque;

use super::FieldState;
use crate::scalar::Scalar;

/// One stored snapshot: field, origin height, and the prefix sums
/// `prefix[x] = sum_{0 < w <= x} phi_w` used by height lookups and the
/// exponential averaging weights.
#[derive(Debug, Clone)]
pub struct Slice<T> {
    pub t: T,
    pub phi: Vec<T>,
    pub j0: T,
    pub prefix: Vec<T>,
}

impl<T: Scalar> Slice<T> {
    pub fn from_state(state: &FieldState<T>) -> Self {
        let m = state.m();
        let mut prefix = Vec::with_capacity(m + 1);
        let mut acc = T::zero();
        prefix.push(acc);
        for x in 1..=m {
            acc = acc + state.phi[x % m];
            prefix.push(acc);
        }
        Self {
            t: state.t,
            phi: state.phi.clone(),
            j0: state.j0,
            prefix,
        }
    }

    /// Height at ring site `x in 0..M` (scaled prefix sum).
    pub fn height(&self, x: usize, n: u32) -> T {
        self.j0 + T::of(f64::from(n)).sqrt().recip() * self.prefix[x]
    }
}

/// Bounded deque of snapshots ordered by time.
#[derive(Debug, Clone)]
pub struct History<T> {
    slices: VecDeque<Slice<T>>,
    capacity: usize,
}

impl<T: Scalar> History<T> {
    pub fn new(capacity: usize) -> Self {
        Self {
            slices: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    pub fn push(&mut self, state: &FieldState<T>) {
        if self.slices.len() == self.capacity {
            self.slices.pop_front();
        }
        self.slices.push_back(Slice::from_state(state));
    }

    pub fn len(&self) -> usize {
        self.slices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }

    pub fn latest(&self) -> Option<&Slice<T>> {
        self.slices.back()
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = &Slice<T>> {
        self.slices.iter()
    }

    /// Slices with `t` in `[t_lo, t_hi]`, oldest first.
    pub fn window(&self, t_lo: T, t_hi: T) -> Vec<&Slice<T>> {
        self.slices
            .iter()
            .filter(|s| s.t >= t_lo - T::of(1e-12) && s.t <= t_hi + T::of(1e-12))
            .collect()
    }

    /// Earliest stored time.
    pub fn oldest_t(&self) -> Option<T> {
        self.slices.front().map(|s| s.t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn capacity_evicts_oldest() {
        let mut h = History::<f64>::new(3);
        for i in 0..5 {
            let mut s = FieldState::new(vec![0.0; 4]);
            s.t = i as f64;
            h.push(&s);
        }
        assert_eq!(h.len(), 3);
        assert_eq!(h.oldest_t(), Some(2.0));
    }

    #[test]
    fn prefix_sums_match_heights() {
        let mut state = FieldState::new(vec![1.0, 2.0, 3.0, 4.0]);
        state.j0 = 5.0;
        let slice = Slice::from_state(&state);
        // prefix[2] = phi_1 + phi_2 = 5
        assert_eq!(slice.prefix[2], 5.0);
        let h: f64 = slice.height(2, 4);
        assert!((h - (5.0 + 5.0 / 2.0)).abs() < 1e-15);
    }
}
