use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use super::{BaseFs, KernelError, Owned, Payload, Store};
use crate::interval::{GlobalInterval, GlobalTree, LocalTree};
use crate::range::ByteRange;
use crate::sim::{DeviceId, Direction, Entity, Fabric, MsgKind, SimConfig, SimTime};
use crate::trace_io::{OpRecord, RecordKind};

/// Fixed part of every control message, in bytes.
const HEADER: u64 = 64;
/// Wire size of one (range, owner) record.
const INTERVAL_BYTES: u64 = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ClientId {
    pub node: u32,
    pub rank: u32,
}

impl ClientId {
    pub fn new(node: u32, rank: u32) -> Self {
        Self { node, rank }
    }
}

impl fmt::Display for ClientId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "client {}.{}", self.node, self.rank)
    }
}

/// Opaque per-client handle; position and open state live in the kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FileHandle(u64);

impl FileHandle {
    pub fn raw(self) -> u64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Whence {
    Set,
    Cur,
    End,
}

/// Where clients buffer their writes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BufferTier {
    Ssd,
    Memory,
}

impl BufferTier {
    fn device(self, node: u32) -> DeviceId {
        match self {
            BufferTier::Ssd => DeviceId::ssd(node),
            BufferTier::Memory => DeviceId::memory(node),
        }
    }
}

/// Result of `bfs_read`. `undefined` is set when some byte lies beyond the
/// end of file of a PFS read; those bytes read as zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReadOut {
    pub data: Payload,
    pub undefined: bool,
}

#[derive(Debug, Default)]
struct ServerFile {
    tree: GlobalTree<ClientId>,
    eof: u64,
}

#[derive(Debug)]
struct ClientFile {
    tree: LocalTree,
    buffer: Store,
}

#[derive(Debug)]
struct HandleState {
    file: String,
    pos: u64,
    open: bool,
}

#[derive(Debug)]
struct ClientState {
    id: ClientId,
    files: BTreeMap<String, ClientFile>,
    handles: Vec<HandleState>,
    clock: SimTime,
}

/// All kernel state: the global server, the clients, the PFS, and the
/// fabric that charges every action.
pub struct Cluster {
    fabric: Fabric,
    tier: BufferTier,
    materialize: bool,
    server: BTreeMap<String, ServerFile>,
    pfs: BTreeMap<String, Store>,
    clients: Vec<ClientState>,
    index: BTreeMap<ClientId, usize>,
    trace: Vec<OpRecord>,
}

impl Cluster {
    /// `nodes * ppn` clients, ranks `0..ppn` on every node. With
    /// `materialize = false` payload contents are not kept, only lengths.
    pub fn new(config: SimConfig, nodes: u32, ppn: u32, tier: BufferTier, materialize: bool) -> Self {
        let mut c = Self {
            fabric: Fabric::new(config),
            tier,
            materialize,
            server: BTreeMap::new(),
            pfs: BTreeMap::new(),
            clients: Vec::new(),
            index: BTreeMap::new(),
            trace: Vec::new(),
        };
        for node in 0..nodes {
            for _ in 0..ppn {
                c.add_client(node);
            }
        }
        c
    }

    /// Adds a client on `node` with the next free rank there.
    pub fn add_client(&mut self, node: u32) -> ClientId {
        let rank = self.index.keys().filter(|c| c.node == node).count() as u32;
        let id = ClientId::new(node, rank);
        let idx = self.clients.len();
        self.fabric.register_client(idx as u32);
        self.index.insert(id, idx);
        self.clients.push(ClientState {
            id,
            files: BTreeMap::new(),
            handles: Vec::new(),
            clock: SimTime::ZERO,
        });
        id
    }

    pub fn clients(&self) -> Vec<ClientId> {
        self.clients.iter().map(|c| c.id).collect()
    }

    /// Index of `id` in creation order; also its fabric entity number.
    pub fn index_of(&self, id: ClientId) -> Result<usize, KernelError> {
        self.index.get(&id).copied().ok_or(KernelError::UnknownClient(id))
    }

    pub fn client(&mut self, id: ClientId) -> Result<Client<'_>, KernelError> {
        let idx = self.index_of(id)?;
        Ok(Client { cluster: self, idx })
    }

    pub fn fabric(&self) -> &Fabric {
        &self.fabric
    }

    pub fn fabric_mut(&mut self) -> &mut Fabric {
        &mut self.fabric
    }

    pub fn tier(&self) -> BufferTier {
        self.tier
    }

    pub fn materialized(&self) -> bool {
        self.materialize
    }

    pub fn clock(&self, id: ClientId) -> Result<SimTime, KernelError> {
        Ok(self.clients[self.index_of(id)?].clock)
    }

    /// Moves a client's clock forward to `t` (never backwards).
    pub fn advance_clock(&mut self, id: ClientId, t: SimTime) -> Result<SimTime, KernelError> {
        let idx = self.index_of(id)?;
        let c = &mut self.clients[idx].clock;
        *c = (*c).max(t);
        Ok(*c)
    }

    /// The server's ownership map of `file`.
    pub fn ownership(&self, file: &str) -> Vec<Owned> {
        self.server.get(file).map(|f| f.tree.iter().collect()).unwrap_or_default()
    }

    /// Size as the server reports it: the larger of the attached EOF and the
    /// flushed PFS length.
    pub fn file_size(&self, file: &str) -> u64 {
        let attached = self.server.get(file).map_or(0, |f| f.eof);
        attached.max(self.pfs.get(file).map_or(0, Store::len))
    }

    pub fn local_tree(&self, id: ClientId, file: &str) -> Option<&LocalTree> {
        let idx = self.index_of(id).ok()?;
        self.clients[idx].files.get(file).map(|f| &f.tree)
    }

    /// Contents of the PFS copy of `file`, if materialized.
    pub fn pfs_contents(&self, file: &str) -> Option<Vec<u8>> {
        match self.pfs.get(file)? {
            Store::Bytes(b) => Some(b.clone()),
            Store::Sized(_) => None,
        }
    }

    /// One record per primitive call, in call order. Data primitives are
    /// `read`/`write`; the rest are syncs named after the primitive.
    pub fn kernel_trace(&self) -> &[OpRecord] {
        &self.trace
    }

    fn record(
        &mut self,
        idx: usize,
        kind: RecordKind,
        file: &str,
        range: Option<ByteRange>,
        start: SimTime,
        undefined: bool,
    ) {
        let seq = self.trace.len() as u64;
        self.trace.push(OpRecord {
            seq,
            process: idx as u32,
            kind,
            file: file.to_string(),
            range,
            start,
            end: self.clients[idx].clock,
            undefined,
        });
    }

    /// Request to the server and its reply; advances the client's clock.
    fn server_rpc(
        &mut self,
        idx: usize,
        kind: MsgKind,
        request: u64,
        reply: u64,
    ) -> Result<(), KernelError> {
        let me = Entity::Client(idx as u32);
        let at = self.clients[idx].clock;
        let arrival = self.fabric.send_rpc_at(me, Entity::Server, kind, request, at)?;
        let done = self.fabric.server_task_at(arrival);
        let back = self.fabric.send_rpc_at(Entity::Server, me, MsgKind::Reply, reply, done)?;
        self.clients[idx].clock = back;
        Ok(())
    }

    fn handle(&self, idx: usize, fh: FileHandle) -> Result<&HandleState, KernelError> {
        let h = self.clients[idx]
            .handles
            .get(fh.0 as usize)
            .ok_or(KernelError::UnknownHandle(fh.0))?;
        if !h.open {
            return Err(KernelError::ClosedHandle(fh.0));
        }
        Ok(h)
    }

    fn file_of(&self, idx: usize, fh: FileHandle) -> Result<String, KernelError> {
        Ok(self.handle(idx, fh)?.file.clone())
    }

    fn set_pos(&mut self, idx: usize, fh: FileHandle, pos: u64) {
        self.clients[idx].handles[fh.0 as usize].pos = pos;
    }

    fn local(&mut self, idx: usize, file: &str) -> &mut ClientFile {
        let materialize = self.materialize;
        self.clients[idx]
            .files
            .entry(file.to_string())
            .or_insert_with(|| ClientFile {
                tree: LocalTree::new(),
                buffer: Store::new(materialize),
            })
    }

    /// Buffered bytes of `range`, which must be fully written.
    fn gather(file: &ClientFile, range: ByteRange) -> Payload {
        let pieces = file
            .tree
            .lookup(range)
            .into_iter()
            .map(|iv| file.buffer.read(iv.buffer_range.start(), iv.buffer_range.len()))
            .collect();
        Payload::concat(pieces)
    }

    fn attach_ranges(&mut self, idx: usize, file: &str, ranges: &[ByteRange]) -> Result<(), KernelError> {
        let id = self.clients[idx].id;
        let server = self.server.entry(file.to_string()).or_default();
        for &r in ranges {
            server.tree.insert(GlobalInterval { range: r, owner: id });
            server.eof = server.eof.max(r.end() + 1);
        }
        self.server_rpc(idx, MsgKind::Attach, HEADER + INTERVAL_BYTES * ranges.len() as u64, HEADER)
    }

    fn detach_ranges(&mut self, idx: usize, file: &str, ranges: &[ByteRange]) -> Result<(), KernelError> {
        let id = self.clients[idx].id;
        if let Some(server) = self.server.get_mut(file) {
            for &r in ranges {
                server.tree.remove_if_owner(r, id);
            }
        }
        let local = self.local(idx, file);
        for &r in ranges {
            local.tree.carve(r);
        }
        self.server_rpc(idx, MsgKind::Detach, HEADER + INTERVAL_BYTES * ranges.len() as u64, HEADER)
    }

    fn query_range(&mut self, idx: usize, file: &str, range: Option<ByteRange>) -> Result<Vec<Owned>, KernelError> {
        let found: Vec<Owned> = match (self.server.get(file), range) {
            (None, _) => Vec::new(),
            (Some(f), Some(r)) => f.tree.query(r),
            (Some(f), None) => f.tree.iter().collect(),
        };
        self.server_rpc(idx, MsgKind::Query, HEADER + INTERVAL_BYTES, HEADER + INTERVAL_BYTES * found.len() as u64)?;
        Ok(found)
    }

    fn flush_ranges(&mut self, idx: usize, file: &str, ranges: &[ByteRange]) -> Result<(), KernelError> {
        let mut pieces = Vec::new();
        if let Some(local) = self.clients[idx].files.get(file) {
            for &r in ranges {
                for iv in local.tree.lookup(r) {
                    let data = local.buffer.read(iv.buffer_range.start(), iv.buffer_range.len());
                    pieces.push((iv.file_range.start(), data));
                }
            }
        }
        if pieces.is_empty() {
            return Ok(());
        }
        let materialize = self.materialize;
        let store = self.pfs.entry(file.to_string()).or_insert_with(|| Store::new(materialize));
        let mut bytes = 0;
        for (off, data) in &pieces {
            store.write_at(*off, data);
            bytes += data.len();
        }
        let node = self.clients[idx].id.node;
        let me = Entity::Client(idx as u32);
        let at = self.clients[idx].clock;
        let read = self.fabric.device_io_at(self.tier.device(node), Direction::Read, bytes, at, me);
        let done = self.fabric.device_io_at(DeviceId::pfs(), Direction::Write, bytes, read, me);
        self.clients[idx].clock = done;
        Ok(())
    }
}

/// One client's view of the cluster.
pub struct Client<'a> {
    cluster: &'a mut Cluster,
    idx: usize,
}

impl Client<'_> {
    pub fn now(&self) -> SimTime {
        self.cluster.clients[self.idx].clock
    }

    fn sync_record(&mut self, name: &str, file: &str, start: SimTime) {
        self.cluster
            .record(self.idx, RecordKind::Sync(name.to_string()), file, None, start, false);
    }
}

impl BaseFs for Client<'_> {
    fn id(&self) -> ClientId {
        self.cluster.clients[self.idx].id
    }

    fn bfs_open(&mut self, path: &str) -> Result<FileHandle, KernelError> {
        if path.is_empty() {
            return Err(KernelError::EmptyPath);
        }
        let start = self.now();
        self.cluster.local(self.idx, path);
        let handles = &mut self.cluster.clients[self.idx].handles;
        handles.push(HandleState {
            file: path.to_string(),
            pos: 0,
            open: true,
        });
        let fh = FileHandle(handles.len() as u64 - 1);
        self.sync_record("bfs_open", path, start);
        Ok(fh)
    }

    fn bfs_close(&mut self, fh: FileHandle) -> Result<(), KernelError> {
        let file = self.cluster.file_of(self.idx, fh)?;
        let start = self.now();
        self.cluster.clients[self.idx].handles[fh.0 as usize].open = false;
        let local = self.cluster.local(self.idx, &file);
        for r in local.tree.unattached_ranges() {
            local.tree.carve(r);
        }
        self.sync_record("bfs_close", &file, start);
        Ok(())
    }

    fn bfs_write(&mut self, fh: FileHandle, data: Payload) -> Result<u64, KernelError> {
        let h = self.cluster.handle(self.idx, fh)?;
        let (file, pos) = (h.file.clone(), h.pos);
        let len = data.len();
        if len == 0 {
            return Ok(0);
        }
        let start = self.now();
        let range = ByteRange::from_offset_size(pos, len)?;
        let local = self.cluster.local(self.idx, &file);
        let at = local.buffer.append(&data);
        local.tree.insert_write(range, ByteRange::from_offset_size(at, len)?)?;
        let node = self.id().node;
        let dev = self.cluster.tier.device(node);
        let done = self.cluster.fabric.device_io_at(
            dev,
            Direction::Write,
            len,
            start,
            Entity::Client(self.idx as u32),
        );
        self.cluster.clients[self.idx].clock = done;
        self.cluster.set_pos(self.idx, fh, pos + len);
        self.cluster.record(self.idx, RecordKind::Write, &file, Some(range), start, false);
        Ok(len)
    }

    fn bfs_read(
        &mut self,
        fh: FileHandle,
        size: u64,
        owner: Option<ClientId>,
    ) -> Result<ReadOut, KernelError> {
        let h = self.cluster.handle(self.idx, fh)?;
        let (file, pos) = (h.file.clone(), h.pos);
        if size == 0 {
            return Ok(ReadOut { data: Payload::concat(Vec::new()), undefined: false });
        }
        let range = ByteRange::from_offset_size(pos, size)?;
        let start = self.now();
        let me = Entity::Client(self.idx as u32);
        let cl = &mut *self.cluster;
        let out = match owner {
            Some(o) if o == cl.clients[self.idx].id => {
                let local = cl.local(self.idx, &file);
                if !local.tree.covers(range) {
                    return Err(KernelError::NotOwner { owner: o, range });
                }
                let data = Cluster::gather(local, range);
                let dev = cl.tier.device(o.node);
                cl.clients[self.idx].clock =
                    cl.fabric.device_io_at(dev, Direction::Read, size, start, me);
                ReadOut { data, undefined: false }
            }
            Some(o) => {
                let oidx = cl.index_of(o)?;
                let not_owner = KernelError::NotOwner { owner: o, range };
                let f = cl.clients[oidx].files.get(&file).ok_or(not_owner.clone())?;
                if !f.tree.covers(range) || f.tree.lookup(range).iter().any(|iv| !iv.attached) {
                    return Err(not_owner);
                }
                let data = Cluster::gather(f, range);
                let them = Entity::Client(oidx as u32);
                let arrive = cl.fabric.send_rpc_at(me, them, MsgKind::Fetch, HEADER, start)?;
                let ready = cl.fabric.device_io_at(cl.tier.device(o.node), Direction::Read, size, arrive, them);
                cl.clients[self.idx].clock = cl.fabric.send_rpc_at(them, me, MsgKind::Data, size, ready)?;
                ReadOut { data, undefined: false }
            }
            None => {
                let eof = cl.file_size(&file);
                let data = match cl.pfs.get(&file) {
                    Some(s) => s.read(pos, size),
                    None => Store::new(cl.materialize).read(pos, size),
                };
                cl.clients[self.idx].clock =
                    cl.fabric.device_io_at(DeviceId::pfs(), Direction::Read, size, start, me);
                ReadOut { data, undefined: range.end() >= eof }
            }
        };
        cl.set_pos(self.idx, fh, pos + size);
        cl.record(self.idx, RecordKind::Read, &file, Some(range), start, out.undefined);
        Ok(out)
    }

    fn bfs_attach(&mut self, fh: FileHandle, offset: u64, size: u64) -> Result<(), KernelError> {
        let file = self.cluster.file_of(self.idx, fh)?;
        let range = ByteRange::from_offset_size(offset, size)?;
        let start = self.now();
        self.cluster.local(self.idx, &file).tree.mark_attached(range)?;
        self.cluster.attach_ranges(self.idx, &file, &[range])?;
        self.sync_record("bfs_attach", &file, start);
        Ok(())
    }

    fn bfs_attach_file(&mut self, fh: FileHandle) -> Result<(), KernelError> {
        let file = self.cluster.file_of(self.idx, fh)?;
        let start = self.now();
        let local = self.cluster.local(self.idx, &file);
        let ranges = local.tree.unattached_ranges();
        if ranges.is_empty() {
            return Ok(());
        }
        for &r in &ranges {
            local.tree.mark_attached(r)?;
        }
        self.cluster.attach_ranges(self.idx, &file, &ranges)?;
        self.sync_record("bfs_attach_file", &file, start);
        Ok(())
    }

    fn bfs_detach(&mut self, fh: FileHandle, offset: u64, size: u64) -> Result<(), KernelError> {
        let file = self.cluster.file_of(self.idx, fh)?;
        let range = ByteRange::from_offset_size(offset, size)?;
        let start = self.now();
        let local = self.cluster.local(self.idx, &file);
        if !local.tree.lookup(range).iter().any(|iv| iv.attached) {
            return Err(KernelError::NotAttached(range));
        }
        self.cluster.detach_ranges(self.idx, &file, &[range])?;
        self.sync_record("bfs_detach", &file, start);
        Ok(())
    }

    fn bfs_detach_file(&mut self, fh: FileHandle) -> Result<(), KernelError> {
        let file = self.cluster.file_of(self.idx, fh)?;
        let start = self.now();
        let ranges = self.cluster.local(self.idx, &file).tree.attached_ranges();
        if ranges.is_empty() {
            return Ok(());
        }
        self.cluster.detach_ranges(self.idx, &file, &ranges)?;
        self.sync_record("bfs_detach_file", &file, start);
        Ok(())
    }

    fn bfs_query(
        &mut self,
        fh: FileHandle,
        offset: u64,
        size: u64,
    ) -> Result<Vec<Owned>, KernelError> {
        let file = self.cluster.file_of(self.idx, fh)?;
        let range = ByteRange::from_offset_size(offset, size)?;
        let start = self.now();
        let out = self.cluster.query_range(self.idx, &file, Some(range))?;
        self.sync_record("bfs_query", &file, start);
        Ok(out)
    }

    fn bfs_query_file(&mut self, fh: FileHandle) -> Result<Vec<Owned>, KernelError> {
        let file = self.cluster.file_of(self.idx, fh)?;
        let start = self.now();
        let out = self.cluster.query_range(self.idx, &file, None)?;
        self.sync_record("bfs_query_file", &file, start);
        Ok(out)
    }

    fn bfs_flush(&mut self, fh: FileHandle, offset: u64, size: u64) -> Result<(), KernelError> {
        let file = self.cluster.file_of(self.idx, fh)?;
        let range = ByteRange::from_offset_size(offset, size)?;
        let start = self.now();
        self.cluster.flush_ranges(self.idx, &file, &[range])?;
        self.sync_record("bfs_flush", &file, start);
        Ok(())
    }

    fn bfs_flush_file(&mut self, fh: FileHandle) -> Result<(), KernelError> {
        let file = self.cluster.file_of(self.idx, fh)?;
        let start = self.now();
        let ranges: Vec<ByteRange> =
            self.cluster.local(self.idx, &file).tree.iter().map(|iv| iv.file_range).collect();
        self.cluster.flush_ranges(self.idx, &file, &ranges)?;
        self.sync_record("bfs_flush_file", &file, start);
        Ok(())
    }

    fn bfs_seek(&mut self, fh: FileHandle, offset: i64, whence: Whence) -> Result<u64, KernelError> {
        let pos = self.cluster.handle(self.idx, fh)?.pos;
        let base = match whence {
            Whence::Set => 0,
            Whence::Cur => pos,
            Whence::End => self.bfs_stat(fh)?,
        };
        let target = base as i128 + offset as i128;
        if target < 0 {
            return Err(KernelError::NegativePosition(target));
        }
        self.cluster.set_pos(self.idx, fh, target as u64);
        Ok(target as u64)
    }

    fn bfs_tell(&self, fh: FileHandle) -> Result<u64, KernelError> {
        Ok(self.cluster.handle(self.idx, fh)?.pos)
    }

    fn bfs_stat(&mut self, fh: FileHandle) -> Result<u64, KernelError> {
        let file = self.cluster.file_of(self.idx, fh)?;
        let start = self.now();
        self.cluster.server_rpc(self.idx, MsgKind::Stat, HEADER, HEADER)?;
        self.sync_record("bfs_stat", &file, start);
        Ok(self.cluster.file_size(&file))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cluster(clients: u32) -> Cluster {
        Cluster::new(SimConfig::default(), clients, 1, BufferTier::Ssd, true)
    }

    fn c(n: u32) -> ClientId {
        ClientId::new(n, 0)
    }

    fn r(s: u64, e: u64) -> ByteRange {
        ByteRange::new(s, e).unwrap()
    }

    fn write_at(cl: &mut Cluster, who: ClientId, fh: FileHandle, off: u64, data: Vec<u8>) {
        let mut v = cl.client(who).unwrap();
        v.bfs_seek(fh, off as i64, Whence::Set).unwrap();
        v.bfs_write(fh, data.into()).unwrap();
    }

    #[test]
    fn open_tell_close() {
        let mut cl = cluster(1);
        let mut a = cl.client(c(0)).unwrap();
        let f1 = a.bfs_open("f").unwrap();
        let f2 = a.bfs_open("f").unwrap();
        a.bfs_seek(f1, 10, Whence::Set).unwrap();
        assert_eq!(a.bfs_tell(f1), Ok(10));
        assert_eq!(a.bfs_tell(f2), Ok(0));
        a.bfs_close(f1).unwrap();
        assert_eq!(a.bfs_close(f1), Err(KernelError::ClosedHandle(f1.raw())));
        let f3 = a.bfs_open("f").unwrap();
        assert_eq!(a.bfs_tell(f3), Ok(0));
        assert_eq!(a.bfs_open(""), Err(KernelError::EmptyPath));
        assert!(matches!(
            a.bfs_seek(f3, -1, Whence::Set),
            Err(KernelError::NegativePosition(-1))
        ));
    }

    #[test]
    fn write_is_local_and_costs_ssd_time() {
        let mut cl = cluster(1);
        let mut a = cl.client(c(0)).unwrap();
        let fh = a.bfs_open("f").unwrap();
        a.bfs_write(fh, Payload::Sized(8 << 20)).unwrap();
        let elapsed = a.now().as_secs();
        let expect = 20e-6 + (8u64 << 20) as f64 / 1e9;
        assert!((elapsed - expect).abs() < 1e-9, "{elapsed} vs {expect}");
        assert_eq!(cl.fabric().accounting(Entity::Server).unwrap().rpc_recv, 0);
    }

    #[test]
    fn read_your_writes_and_remote_reads() {
        let mut cl = cluster(2);
        let fa = cl.client(c(0)).unwrap().bfs_open("f").unwrap();
        let fb = cl.client(c(1)).unwrap().bfs_open("f").unwrap();
        write_at(&mut cl, c(0), fa, 0, vec![7; 100]);
        let mut a = cl.client(c(0)).unwrap();
        a.bfs_seek(fa, 0, Whence::Set).unwrap();
        assert_eq!(a.bfs_read(fa, 100, Some(c(0))).unwrap().data, Payload::Bytes(vec![7; 100]));

        // not attached yet: B may not read from A
        let mut b = cl.client(c(1)).unwrap();
        assert!(matches!(b.bfs_read(fb, 100, Some(c(0))), Err(KernelError::NotOwner { .. })));
        cl.client(c(0)).unwrap().bfs_attach(fa, 0, 50).unwrap();
        let mut b = cl.client(c(1)).unwrap();
        assert!(matches!(b.bfs_read(fb, 100, Some(c(0))), Err(KernelError::NotOwner { .. })));
        assert_eq!(b.bfs_read(fb, 50, Some(c(0))).unwrap().data, Payload::Bytes(vec![7; 50]));
        assert_eq!(cl.fabric().client_to_client_bytes(0, 1), 50);
    }

    #[test]
    fn attach_takes_over_and_query_clips() {
        let mut cl = cluster(2);
        let fa = cl.client(c(0)).unwrap().bfs_open("f").unwrap();
        let fb = cl.client(c(1)).unwrap().bfs_open("f").unwrap();
        assert_eq!(cl.client(c(0)).unwrap().bfs_query(fa, 0, 10).unwrap(), vec![]);
        write_at(&mut cl, c(0), fa, 0, vec![1; 100]);
        cl.client(c(0)).unwrap().bfs_attach(fa, 0, 100).unwrap();
        write_at(&mut cl, c(1), fb, 50, vec![2; 100]);
        cl.client(c(1)).unwrap().bfs_attach(fb, 50, 100).unwrap();
        let map: Vec<_> = cl.ownership("f").iter().map(|i| (i.range, i.owner)).collect();
        assert_eq!(map, vec![(r(0, 49), c(0)), (r(50, 149), c(1))]);
        let q = cl.client(c(0)).unwrap().bfs_query(fa, 25, 50).unwrap();
        let q: Vec<_> = q.iter().map(|i| (i.range, i.owner)).collect();
        assert_eq!(q, vec![(r(25, 49), c(0)), (r(50, 74), c(1))]);
        assert_eq!(cl.client(c(0)).unwrap().bfs_stat(fa), Ok(150));
        assert_eq!(cl.fabric().server_requests(MsgKind::Query), 2);
        assert_eq!(cl.fabric().server_requests(MsgKind::Attach), 2);
    }

    #[test]
    fn attach_errors_and_noop_attach_file() {
        let mut cl = cluster(1);
        let fh = cl.client(c(0)).unwrap().bfs_open("f").unwrap();
        let mut a = cl.client(c(0)).unwrap();
        assert!(matches!(a.bfs_attach(fh, 0, 10), Err(KernelError::Interval(_))));
        a.bfs_attach_file(fh).unwrap();
        assert_eq!(cl.fabric().server_requests(MsgKind::Attach), 0);
    }

    #[test]
    fn detach_respects_newer_owner() {
        let mut cl = cluster(2);
        let fa = cl.client(c(0)).unwrap().bfs_open("f").unwrap();
        let fb = cl.client(c(1)).unwrap().bfs_open("f").unwrap();
        assert!(matches!(
            cl.client(c(0)).unwrap().bfs_detach(fa, 0, 100),
            Err(KernelError::NotAttached(_))
        ));
        for (who, fh) in [(c(0), fa), (c(1), fb)] {
            write_at(&mut cl, who, fh, 0, vec![3; 100]);
            cl.client(who).unwrap().bfs_attach(fh, 0, 100).unwrap();
        }
        cl.client(c(0)).unwrap().bfs_detach(fa, 0, 100).unwrap();
        let map: Vec<_> = cl.ownership("f").iter().map(|i| (i.range, i.owner)).collect();
        assert_eq!(map, vec![(r(0, 99), c(1))]);
        cl.client(c(1)).unwrap().bfs_detach(fb, 0, 100).unwrap();
        assert!(cl.ownership("f").is_empty());
    }

    #[test]
    fn flush_then_detach_leaves_data_on_pfs() {
        let mut cl = cluster(2);
        let fa = cl.client(c(0)).unwrap().bfs_open("f").unwrap();
        write_at(&mut cl, c(0), fa, 0, vec![9; 10]);
        cl.client(c(0)).unwrap().bfs_attach_file(fa).unwrap();
        let before = cl.ownership("f");
        cl.client(c(0)).unwrap().bfs_flush_file(fa).unwrap();
        assert_eq!(cl.ownership("f"), before);
        cl.client(c(0)).unwrap().bfs_detach_file(fa).unwrap();
        let mut b = cl.client(c(1)).unwrap();
        let fb = b.bfs_open("f").unwrap();
        let out = b.bfs_read(fb, 10, None).unwrap();
        assert_eq!(out.data, Payload::Bytes(vec![9; 10]));
        assert!(!out.undefined);
        let past = b.bfs_read(fb, 4, None).unwrap();
        assert_eq!(past.data, Payload::Bytes(vec![0; 4]));
        assert!(past.undefined);
    }

    #[test]
    fn close_discards_unattached_only() {
        let mut cl = cluster(2);
        let fa = cl.client(c(0)).unwrap().bfs_open("f").unwrap();
        write_at(&mut cl, c(0), fa, 0, vec![1; 10]);
        cl.client(c(0)).unwrap().bfs_attach_file(fa).unwrap();
        write_at(&mut cl, c(0), fa, 20, vec![2; 10]);
        cl.client(c(0)).unwrap().bfs_close(fa).unwrap();
        let tree = cl.local_tree(c(0), "f").unwrap();
        assert_eq!(tree.attached_ranges(), vec![r(0, 9)]);
        assert!(tree.unattached_ranges().is_empty());
        let mut b = cl.client(c(1)).unwrap();
        let fb = b.bfs_open("f").unwrap();
        assert_eq!(b.bfs_read(fb, 10, Some(c(0))).unwrap().data, Payload::Bytes(vec![1; 10]));
    }

    #[test]
    fn kernel_trace_records_every_call() {
        let mut cl = cluster(1);
        let mut a = cl.client(c(0)).unwrap();
        let fh = a.bfs_open("f").unwrap();
        a.bfs_write(fh, vec![1, 2].into()).unwrap();
        a.bfs_attach_file(fh).unwrap();
        let kinds: Vec<_> = cl.kernel_trace().iter().map(|o| o.kind.clone()).collect();
        assert_eq!(
            kinds,
            vec![
                RecordKind::Sync("bfs_open".into()),
                RecordKind::Write,
                RecordKind::Sync("bfs_attach_file".into())
            ]
        );
    }
}
