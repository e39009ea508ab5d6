/// Data moved by a read or write.
///
/// Benchmarks move gigabytes of simulated data, so a payload can also be a
/// bare length whose contents are never materialized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Payload {
    Bytes(Vec<u8>),
    Sized(u64),
}

impl Payload {
    pub fn len(&self) -> u64 {
        match self {
            Payload::Bytes(b) => b.len() as u64,
            Payload::Sized(n) => *n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn bytes(&self) -> Option<&[u8]> {
        match self {
            Payload::Bytes(b) => Some(b),
            Payload::Sized(_) => None,
        }
    }

    pub fn into_bytes(self) -> Option<Vec<u8>> {
        match self {
            Payload::Bytes(b) => Some(b),
            Payload::Sized(_) => None,
        }
    }

    /// Concatenates pieces; the result is materialized only if every piece is.
    pub fn concat(pieces: Vec<Payload>) -> Payload {
        if pieces.iter().all(|p| matches!(p, Payload::Bytes(_))) {
            Payload::Bytes(pieces.into_iter().flat_map(|p| p.into_bytes().unwrap()).collect())
        } else {
            Payload::Sized(pieces.iter().map(Payload::len).sum())
        }
    }
}

impl From<Vec<u8>> for Payload {
    fn from(v: Vec<u8>) -> Self {
        Payload::Bytes(v)
    }
}

impl From<&[u8]> for Payload {
    fn from(v: &[u8]) -> Self {
        Payload::Bytes(v.to_vec())
    }
}

/// Backing bytes of a burst-buffer cache file or of a PFS file.
#[derive(Debug, Clone)]
pub(crate) enum Store {
    Bytes(Vec<u8>),
    Sized(u64),
}

impl Store {
    pub(crate) fn new(materialize: bool) -> Self {
        if materialize {
            Store::Bytes(Vec::new())
        } else {
            Store::Sized(0)
        }
    }

    pub(crate) fn len(&self) -> u64 {
        match self {
            Store::Bytes(b) => b.len() as u64,
            Store::Sized(n) => *n,
        }
    }

    /// Appends and returns the offset the payload landed at.
    pub(crate) fn append(&mut self, p: &Payload) -> u64 {
        let at = self.len();
        match (self, p) {
            (Store::Bytes(b), Payload::Bytes(d)) => b.extend_from_slice(d),
            (Store::Bytes(b), Payload::Sized(n)) => b.resize(b.len() + *n as usize, 0),
            (Store::Sized(len), p) => *len += p.len(),
        }
        at
    }

    /// Writes `p` at `offset`, zero-filling any hole before it.
    pub(crate) fn write_at(&mut self, offset: u64, p: &Payload) {
        let end = offset + p.len();
        match self {
            Store::Bytes(b) => {
                if (b.len() as u64) < end {
                    b.resize(end as usize, 0);
                }
                if let Payload::Bytes(d) = p {
                    b[offset as usize..end as usize].copy_from_slice(d);
                } else {
                    b[offset as usize..end as usize].fill(0);
                }
            }
            Store::Sized(len) => *len = (*len).max(end),
        }
    }

    /// Reads `len` bytes at `offset`; bytes past the end read as zero.
    pub(crate) fn read(&self, offset: u64, len: u64) -> Payload {
        match self {
            Store::Bytes(b) => {
                let mut out = vec![0u8; len as usize];
                let have = (b.len() as u64).saturating_sub(offset).min(len);
                if have > 0 {
                    out[..have as usize]
                        .copy_from_slice(&b[offset as usize..(offset + have) as usize]);
                }
                Payload::Bytes(out)
            }
            Store::Sized(_) => Payload::Sized(len),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn store_zero_fills() {
        let mut s = Store::new(true);
        s.write_at(4, &Payload::Bytes(vec![7, 7]));
        assert_eq!(s.len(), 6);
        assert_eq!(s.read(2, 6), Payload::Bytes(vec![0, 0, 7, 7, 0, 0]));
        assert_eq!(s.append(&Payload::Sized(2)), 6);
        assert_eq!(s.len(), 8);
    }

    #[test]
    fn concat_degrades_to_sized() {
        let p = Payload::concat(vec![Payload::Bytes(vec![1]), Payload::Sized(3)]);
        assert_eq!(p, Payload::Sized(4));
        let p = Payload::concat(vec![Payload::Bytes(vec![1]), Payload::Bytes(vec![2])]);
        assert_eq!(p, Payload::Bytes(vec![1, 2]));
    }
}
