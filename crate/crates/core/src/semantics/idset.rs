use std::fmt;

/// A set of small indices (events or rules), at most 64 of them.
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IdSet(u64);

impl IdSet {
    pub const CAPACITY: usize = 64;

    pub const fn empty() -> Self {
        IdSet(0)
    }

    pub fn single(i: usize) -> Self {
        IdSet(1 << i)
    }

    /// `{0, …, n-1}`.
    pub fn first(n: usize) -> Self {
        if n >= 64 {
            IdSet(u64::MAX)
        } else {
            IdSet((1u64 << n) - 1)
        }
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn from_bits(bits: u64) -> Self {
        IdSet(bits)
    }

    pub fn insert(&mut self, i: usize) {
        self.0 |= 1 << i;
    }

    pub fn remove(&mut self, i: usize) {
        self.0 &= !(1 << i);
    }

    pub fn contains(self, i: usize) -> bool {
        i < 64 && self.0 & (1 << i) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn union(self, other: Self) -> Self {
        IdSet(self.0 | other.0)
    }

    pub fn intersection(self, other: Self) -> Self {
        IdSet(self.0 & other.0)
    }

    pub fn difference(self, other: Self) -> Self {
        IdSet(self.0 & !other.0)
    }

    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    /// Members in ascending order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                return None;
            }
            let i = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            Some(i)
        })
    }

    /// Every subset with at most `max_len` members, ordered by cardinality
    /// and then lexicographically by member indices.
    pub fn subsets_up_to(self, max_len: usize) -> Vec<IdSet> {
        let members: Vec<usize> = self.iter().collect();
        let mut out = vec![IdSet::empty()];
        let mut layer = vec![(IdSet::empty(), 0usize)];
        for _ in 0..max_len.min(members.len()) {
            let mut next = Vec::new();
            for (set, from) in layer {
                for (k, &m) in members.iter().enumerate().skip(from) {
                    let mut s = set;
                    s.insert(m);
                    next.push((s, k + 1));
                }
            }
            out.extend(next.iter().map(|(s, _)| *s));
            layer = next;
        }
        out
    }

    /// All subsets in the same canonical order.
    pub fn subsets(self) -> Vec<IdSet> {
        self.subsets_up_to(self.len())
    }
}

impl FromIterator<usize> for IdSet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        let mut s = IdSet::empty();
        for i in iter {
            s.insert(i);
        }
        s
    }
}

impl fmt::Debug for IdSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}
