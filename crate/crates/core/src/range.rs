use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum RangeError {
    #[error("zero-length range at offset {0}")]
    Empty(u64),
    #[error("range start {start} is past its end {end}")]
    Inverted { start: u64, end: u64 },
    #[error("range at offset {offset} with size {size} overflows the address space")]
    Overflow { offset: u64, size: u64 },
}

/// An inclusive byte range `[start, end]` within one file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ByteRange {
    start: u64,
    end: u64,
}

impl ByteRange {
    pub fn new(start: u64, end: u64) -> Result<Self, RangeError> {
        if start > end {
            return Err(RangeError::Inverted { start, end });
        }
        Ok(Self { start, end })
    }

    /// Builds the range covering `size` bytes starting at `offset`.
    pub fn from_offset_size(offset: u64, size: u64) -> Result<Self, RangeError> {
        if size == 0 {
            return Err(RangeError::Empty(offset));
        }
        let end = offset
            .checked_add(size - 1)
            .ok_or(RangeError::Overflow { offset, size })?;
        Ok(Self { start: offset, end })
    }

    pub fn start(&self) -> u64 {
        self.start
    }

    pub fn end(&self) -> u64 {
        self.end
    }

    pub fn len(&self) -> u64 {
        self.end - self.start + 1
    }

    /// Always false; ranges hold at least one byte.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, offset: u64) -> bool {
        self.start <= offset && offset <= self.end
    }

    pub fn covers(&self, other: &ByteRange) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn overlaps(&self, other: &ByteRange) -> bool {
        self.start <= other.end && other.start <= self.end
    }

    pub fn intersect(&self, other: &ByteRange) -> Option<ByteRange> {
        if !self.overlaps(other) {
            return None;
        }
        Some(ByteRange {
            start: self.start.max(other.start),
            end: self.end.min(other.end),
        })
    }

    /// True when `other` begins on the byte right after `self` ends.
    pub fn abuts(&self, other: &ByteRange) -> bool {
        self.end.checked_add(1) == Some(other.start)
    }

    pub fn shift(&self, delta: i128) -> ByteRange {
        let start = (self.start as i128 + delta) as u64;
        ByteRange {
            start,
            end: start + (self.end - self.start),
        }
    }
}

impl fmt::Display for ByteRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.start, self.end)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offset_size_conversion() {
        let r = ByteRange::from_offset_size(100, 8).unwrap();
        assert_eq!((r.start(), r.end(), r.len()), (100, 107, 8));
        assert_eq!(
            ByteRange::from_offset_size(5, 0),
            Err(RangeError::Empty(5))
        );
        assert!(ByteRange::from_offset_size(u64::MAX, 2).is_err());
        assert!(ByteRange::new(9, 3).is_err());
    }

    #[test]
    fn intersection_and_adjacency() {
        let a = ByteRange::new(0, 49).unwrap();
        let b = ByteRange::new(25, 74).unwrap();
        let c = ByteRange::new(50, 99).unwrap();
        assert_eq!(a.intersect(&b), Some(ByteRange::new(25, 49).unwrap()));
        assert_eq!(a.intersect(&c), None);
        assert!(a.abuts(&c));
        assert!(!c.abuts(&a));
    }
}
