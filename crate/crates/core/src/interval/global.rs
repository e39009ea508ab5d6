//! Ownership map kept by the server: each byte of a file has at most one
//! owner, the client that attached it last.

use std::collections::BTreeMap;

use crate::range::ByteRange;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GlobalInterval<O> {
    pub range: ByteRange,
    pub owner: O,
}

/// Per-file interval tree of exclusive owners, keyed by interval start.
///
/// Invariants held after every public call:
/// * intervals are pairwise disjoint;
/// * no two abutting intervals share an owner (they are merged instead).
#[derive(Debug, Clone)]
pub struct GlobalTree<O> {
    nodes: BTreeMap<u64, (u64, O)>,
}

impl<O> Default for GlobalTree<O> {
    fn default() -> Self {
        Self {
            nodes: BTreeMap::new(),
        }
    }
}

impl<O: Copy + Eq> GlobalTree<O> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = GlobalInterval<O>> + '_ {
        self.nodes.iter().map(|(&start, &(end, owner))| GlobalInterval {
            range: ByteRange::new(start, end).expect("tree holds valid ranges"),
            owner,
        })
    }

    /// One past the last owned byte, or 0 for an empty tree.
    pub fn extent(&self) -> u64 {
        self.nodes
            .last_key_value()
            .map(|(_, &(end, _))| end + 1)
            .unwrap_or(0)
    }

    /// Intervals intersecting `range`, unclipped, in start order.
    fn overlapping(&self, range: ByteRange) -> Vec<(u64, u64, O)> {
        let mut out = Vec::new();
        if let Some((&start, &(end, owner))) = self.nodes.range(..range.start()).next_back() {
            if end >= range.start() {
                out.push((start, end, owner));
            }
        }
        for (&start, &(end, owner)) in self.nodes.range(range.start()..=range.end()) {
            out.push((start, end, owner));
        }
        out
    }

    /// Hands `iv.range` to `iv.owner`. Partially covered intervals of other
    /// owners are split, fully covered ones are dropped, and the result is
    /// merged with same-owner neighbours.
    pub fn insert(&mut self, iv: GlobalInterval<O>) {
        let (s, e) = (iv.range.start(), iv.range.end());
        for (start, end, owner) in self.overlapping(iv.range) {
            self.nodes.remove(&start);
            if start < s {
                self.nodes.insert(start, (s - 1, owner));
            }
            if end > e {
                self.nodes.insert(e + 1, (end, owner));
            }
        }
        self.nodes.insert(s, (e, iv.owner));
        self.coalesce(s);
    }

    /// Releases the bytes of `range` currently held by `owner`. Bytes held by
    /// anyone else are left alone, so a detach after someone else took over
    /// the range does nothing.
    pub fn remove_if_owner(&mut self, range: ByteRange, owner: O) {
        let (s, e) = (range.start(), range.end());
        for (start, end, held_by) in self.overlapping(range) {
            if held_by != owner {
                continue;
            }
            self.nodes.remove(&start);
            if start < s {
                self.nodes.insert(start, (s - 1, held_by));
            }
            if end > e {
                self.nodes.insert(e + 1, (end, held_by));
            }
        }
    }

    /// Owned sub-ranges of `range`, clipped, sorted by start. Unowned gaps
    /// are simply absent.
    pub fn query(&self, range: ByteRange) -> Vec<GlobalInterval<O>> {
        self.overlapping(range)
            .into_iter()
            .map(|(start, end, owner)| GlobalInterval {
                range: ByteRange::new(start.max(range.start()), end.min(range.end()))
                    .expect("clipped overlap is non-empty"),
                owner,
            })
            .collect()
    }

    /// True when every byte of `range` is held by `owner`.
    pub fn owns_all(&self, range: ByteRange, owner: O) -> bool {
        let mut next = range.start();
        for iv in self.query(range) {
            if iv.range.start() != next || iv.owner != owner {
                return false;
            }
            if iv.range.end() == range.end() {
                return true;
            }
            next = iv.range.end() + 1;
        }
        false
    }

    fn coalesce(&mut self, key: u64) {
        let Some(&(mut end, owner)) = self.nodes.get(&key) else {
            return;
        };
        let mut start = key;
        if let Some((&prev_start, &(prev_end, prev_owner))) = self.nodes.range(..key).next_back() {
            if prev_end + 1 == key && prev_owner == owner {
                self.nodes.remove(&key);
                start = prev_start;
                self.nodes.insert(start, (end, owner));
            }
        }
        if let Some(next_start) = end.checked_add(1) {
            if let Some(&(next_end, next_owner)) = self.nodes.get(&next_start) {
                if next_owner == owner {
                    self.nodes.remove(&next_start);
                    end = next_end;
                    self.nodes.insert(start, (end, owner));
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(s: u64, e: u64) -> ByteRange {
        ByteRange::new(s, e).unwrap()
    }

    fn iv(s: u64, e: u64, o: char) -> GlobalInterval<char> {
        GlobalInterval { range: r(s, e), owner: o }
    }

    fn dump(t: &GlobalTree<char>) -> Vec<(u64, u64, char)> {
        t.iter()
            .map(|i| (i.range.start(), i.range.end(), i.owner))
            .collect()
    }

    #[test]
    fn insert_into_empty() {
        let mut t = GlobalTree::new();
        t.insert(iv(0, 99, 'A'));
        assert_eq!(dump(&t), vec![(0, 99, 'A')]);
    }

    #[test]
    fn insert_splits_other_owner() {
        let mut t = GlobalTree::new();
        t.insert(iv(0, 99, 'A'));
        t.insert(iv(50, 149, 'B'));
        assert_eq!(dump(&t), vec![(0, 49, 'A'), (50, 149, 'B')]);
    }

    #[test]
    fn insert_merges_contiguous_same_owner() {
        let mut t = GlobalTree::new();
        t.insert(iv(0, 49, 'A'));
        t.insert(iv(50, 99, 'A'));
        assert_eq!(dump(&t), vec![(0, 99, 'A')]);
    }

    #[test]
    fn insert_inside_splits_three_ways_then_rejoins() {
        let mut t = GlobalTree::new();
        t.insert(iv(0, 99, 'A'));
        t.insert(iv(40, 59, 'B'));
        assert_eq!(dump(&t), vec![(0, 39, 'A'), (40, 59, 'B'), (60, 99, 'A')]);
        t.insert(iv(40, 59, 'A'));
        assert_eq!(dump(&t), vec![(0, 99, 'A')]);
    }

    #[test]
    fn remove_by_owner() {
        let mut t = GlobalTree::new();
        t.insert(iv(0, 99, 'A'));
        t.remove_if_owner(r(0, 99), 'A');
        assert!(t.is_empty());
    }

    #[test]
    fn remove_by_non_owner_is_noop() {
        let mut t = GlobalTree::new();
        t.insert(iv(0, 99, 'B'));
        t.remove_if_owner(r(0, 99), 'A');
        assert_eq!(dump(&t), vec![(0, 99, 'B')]);
    }

    #[test]
    fn remove_middle_splits() {
        let mut t = GlobalTree::new();
        t.insert(iv(0, 99, 'A'));
        t.remove_if_owner(r(25, 49), 'A');
        assert_eq!(dump(&t), vec![(0, 24, 'A'), (50, 99, 'A')]);
    }

    #[test]
    fn query_clips() {
        let mut t = GlobalTree::new();
        assert!(t.query(r(0, 99)).is_empty());
        t.insert(iv(0, 49, 'A'));
        t.insert(iv(50, 99, 'B'));
        assert_eq!(t.query(r(25, 74)), vec![iv(25, 49, 'A'), iv(50, 74, 'B')]);
        assert!(t.query(r(200, 299)).is_empty());
        assert!(t.owns_all(r(0, 40), 'A'));
        assert!(!t.owns_all(r(0, 50), 'A'));
        assert_eq!(t.extent(), 100);
    }
}
