//! Client-side record of buffered writes: which file bytes live where in the
//! local burst-buffer file, and whether they have been attached.

use std::collections::BTreeMap;

use crate::range::ByteRange;

use super::IntervalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalInterval {
    pub file_range: ByteRange,
    pub buffer_range: ByteRange,
    pub attached: bool,
}

impl LocalInterval {
    /// Restricts this mapping to the file bytes in `within`.
    pub fn clip(&self, within: ByteRange) -> Option<LocalInterval> {
        let file_range = self.file_range.intersect(&within)?;
        let skip = file_range.start() - self.file_range.start();
        let buffer_range = ByteRange::from_offset_size(self.buffer_range.start() + skip, file_range.len())
            .expect("clipped mapping is non-empty");
        Some(LocalInterval {
            file_range,
            buffer_range,
            attached: self.attached,
        })
    }

    fn mergeable_with(&self, next: &LocalInterval) -> bool {
        self.attached == next.attached
            && self.file_range.abuts(&next.file_range)
            && self.buffer_range.abuts(&next.buffer_range)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Node {
    file_end: u64,
    buffer_start: u64,
    attached: bool,
}

impl Node {
    fn interval(&self, file_start: u64) -> LocalInterval {
        let len = self.file_end - file_start + 1;
        LocalInterval {
            file_range: ByteRange::new(file_start, self.file_end).expect("valid node"),
            buffer_range: ByteRange::from_offset_size(self.buffer_start, len).expect("valid node"),
            attached: self.attached,
        }
    }
}

/// Interval tree of one client's writes to one file, keyed by file offset.
#[derive(Debug, Clone, Default)]
pub struct LocalTree {
    nodes: BTreeMap<u64, Node>,
}

impl LocalTree {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = LocalInterval> + '_ {
        self.nodes.iter().map(|(&s, n)| n.interval(s))
    }

    pub fn attached_ranges(&self) -> Vec<ByteRange> {
        self.iter().filter(|i| i.attached).map(|i| i.file_range).collect()
    }

    pub fn unattached_ranges(&self) -> Vec<ByteRange> {
        self.iter().filter(|i| !i.attached).map(|i| i.file_range).collect()
    }

    fn insert_node(&mut self, iv: LocalInterval) {
        self.nodes.insert(
            iv.file_range.start(),
            Node {
                file_end: iv.file_range.end(),
                buffer_start: iv.buffer_range.start(),
                attached: iv.attached,
            },
        );
    }

    /// Removes the file bytes of `range` from the tree, keeping the pieces of
    /// straddling intervals that fall outside it.
    pub fn carve(&mut self, range: ByteRange) {
        let mut hit = Vec::new();
        if let Some((&s, n)) = self.nodes.range(..range.start()).next_back() {
            if n.file_end >= range.start() {
                hit.push(n.interval(s));
            }
        }
        hit.extend(
            self.nodes
                .range(range.start()..=range.end())
                .map(|(&s, n)| n.interval(s)),
        );
        for iv in hit {
            self.nodes.remove(&iv.file_range.start());
            if iv.file_range.start() < range.start() {
                let left = ByteRange::new(iv.file_range.start(), range.start() - 1).unwrap();
                self.insert_node(iv.clip(left).unwrap());
            }
            if iv.file_range.end() > range.end() {
                let right = ByteRange::new(range.end() + 1, iv.file_range.end()).unwrap();
                self.insert_node(iv.clip(right).unwrap());
            }
        }
    }

    /// Records a write of `file_range` whose bytes were appended at
    /// `buffer_range`. Older mappings of the same bytes are replaced and the
    /// new interval starts out unattached.
    pub fn insert_write(
        &mut self,
        file_range: ByteRange,
        buffer_range: ByteRange,
    ) -> Result<(), IntervalError> {
        if file_range.len() != buffer_range.len() {
            return Err(IntervalError::LengthMismatch {
                file: file_range.len(),
                buffer: buffer_range.len(),
            });
        }
        self.carve(file_range);
        self.insert_node(LocalInterval {
            file_range,
            buffer_range,
            attached: false,
        });
        self.coalesce(file_range.start());
        Ok(())
    }

    /// Buffered mappings inside `range`, clipped and sorted; unwritten gaps
    /// are absent.
    pub fn lookup(&self, range: ByteRange) -> Vec<LocalInterval> {
        let mut out = Vec::new();
        if let Some((&s, n)) = self.nodes.range(..range.start()).next_back() {
            if n.file_end >= range.start() {
                out.extend(n.interval(s).clip(range));
            }
        }
        out.extend(
            self.nodes
                .range(range.start()..=range.end())
                .filter_map(|(&s, n)| n.interval(s).clip(range)),
        );
        out
    }

    pub fn covers(&self, range: ByteRange) -> bool {
        let mut next = range.start();
        for iv in self.lookup(range) {
            if iv.file_range.start() != next {
                return false;
            }
            if iv.file_range.end() == range.end() {
                return true;
            }
            next = iv.file_range.end() + 1;
        }
        false
    }

    /// Flags every byte of `range` as attached. Fails on unwritten bytes, or
    /// when the whole range was already attached.
    pub fn mark_attached(&mut self, range: ByteRange) -> Result<(), IntervalError> {
        let pieces = self.lookup(range);
        if !self.covers(range) {
            return Err(IntervalError::UnwrittenBytes(range));
        }
        if pieces.iter().all(|p| p.attached) {
            return Err(IntervalError::AlreadyAttached(range));
        }
        self.set_attached(range, pieces, true);
        Ok(())
    }

    /// Clears the attached flag on whatever part of `range` is written.
    pub fn mark_detached(&mut self, range: ByteRange) {
        let pieces = self.lookup(range);
        self.set_attached(range, pieces, false);
    }

    fn set_attached(&mut self, range: ByteRange, pieces: Vec<LocalInterval>, attached: bool) {
        self.carve(range);
        let starts: Vec<u64> = pieces.iter().map(|p| p.file_range.start()).collect();
        for p in pieces {
            self.insert_node(LocalInterval { attached, ..p });
        }
        for s in starts {
            self.coalesce(s);
        }
        // boundaries with the carved remainders
        if let Some(prev) = range.start().checked_sub(1) {
            if let Some((&s, _)) = self.nodes.range(..=prev).next_back() {
                self.coalesce(s);
            }
        }
    }

    fn coalesce(&mut self, key: u64) {
        let Some(node) = self.nodes.get(&key).copied() else {
            return;
        };
        let mut cur = node.interval(key);
        if let Some((&ps, pn)) = self.nodes.range(..key).next_back() {
            let prev = pn.interval(ps);
            if prev.mergeable_with(&cur) {
                self.nodes.remove(&key);
                cur = LocalInterval {
                    file_range: ByteRange::new(ps, cur.file_range.end()).unwrap(),
                    buffer_range: ByteRange::new(prev.buffer_range.start(), cur.buffer_range.end())
                        .unwrap(),
                    attached: cur.attached,
                };
                self.insert_node(cur);
            }
        }
        // a merge can make the following node adjacent too
        while let Some(ns) = cur.file_range.end().checked_add(1) {
            let Some(next) = self.nodes.get(&ns).map(|n| n.interval(ns)) else {
                break;
            };
            if !cur.mergeable_with(&next) {
                break;
            }
            self.nodes.remove(&ns);
            cur = LocalInterval {
                file_range: ByteRange::new(cur.file_range.start(), next.file_range.end()).unwrap(),
                buffer_range: ByteRange::new(cur.buffer_range.start(), next.buffer_range.end())
                    .unwrap(),
                attached: cur.attached,
            };
            self.insert_node(cur);
        }
    }
}
