use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use serde::Serialize;

use super::{Accounting, SimConfig, SimError, SimTime};

/// Anything that sends or receives messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Entity {
    Client(u32),
    Server,
    Worker(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum DeviceKind {
    Ssd,
    Memory,
    Pfs,
}

/// A FIFO device. SSD and memory are per node; the PFS is a single shared
/// device on node 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct DeviceId {
    pub kind: DeviceKind,
    pub node: u32,
}

impl DeviceId {
    pub fn ssd(node: u32) -> Self {
        Self { kind: DeviceKind::Ssd, node }
    }
    pub fn memory(node: u32) -> Self {
        Self { kind: DeviceKind::Memory, node }
    }
    pub fn pfs() -> Self {
        Self { kind: DeviceKind::Pfs, node: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Read,
    Write,
}

/// What a message carries, for per-kind RPC counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum MsgKind {
    Query,
    Attach,
    Detach,
    Stat,
    Reply,
    /// Read request sent to an owning client.
    Fetch,
    /// Data returned by an owning client.
    Data,
    /// Application-level message between processes.
    Transfer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Message {
    pub from: Entity,
    pub to: Entity,
    pub kind: MsgKind,
    pub bytes: u64,
    pub sent_at: SimTime,
    pub deliver_at: SimTime,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct DeviceStats {
    pub busy_time: SimTime,
    pub requests: u64,
    pub bytes_read: u64,
    pub bytes_written: u64,
    pub cost_sum: SimTime,
    free_at: SimTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum EventKind {
    Deliver(usize),
    Wake(u32),
}

/// Drives simulated processes: the fabric calls [`Actor::wake`] whenever a
/// scheduled wake-up for a process fires.
pub trait Actor {
    type Error: From<SimError>;

    fn wake(&mut self, fabric: &mut Fabric, process: u32) -> Result<(), Self::Error>;

    /// Processes still waiting on something when the event queue runs dry.
    fn blocked(&self) -> Vec<u32> {
        Vec::new()
    }
}

struct Idle;

impl Actor for Idle {
    type Error = SimError;
    fn wake(&mut self, _: &mut Fabric, _: u32) -> Result<(), SimError> {
        Ok(())
    }
}

/// The simulated cluster substrate: clock, event queue, message latency,
/// FIFO devices, server workers and accounting.
pub struct Fabric {
    config: SimConfig,
    now: SimTime,
    seq: u64,
    queue: BinaryHeap<Reverse<(SimTime, u64, EventKind)>>,
    messages: Vec<Message>,
    delivered: Vec<usize>,
    accounting: BTreeMap<Entity, Accounting>,
    devices: BTreeMap<DeviceId, DeviceStats>,
    workers: Vec<SimTime>,
    next_worker: usize,
    c2c: BTreeMap<(u32, u32), u64>,
}

impl Fabric {
    pub fn new(config: SimConfig) -> Self {
        let workers = config.server_workers as usize;
        let mut accounting = BTreeMap::new();
        accounting.insert(Entity::Server, Accounting::default());
        for w in 0..workers {
            accounting.insert(Entity::Worker(w as u32), Accounting::default());
        }
        Self {
            config,
            now: SimTime::ZERO,
            seq: 0,
            queue: BinaryHeap::new(),
            messages: Vec::new(),
            delivered: Vec::new(),
            accounting,
            devices: BTreeMap::new(),
            workers: vec![SimTime::ZERO; workers],
            next_worker: 0,
            c2c: BTreeMap::new(),
        }
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn register_client(&mut self, id: u32) {
        self.accounting.entry(Entity::Client(id)).or_default();
    }

    pub fn is_registered(&self, e: Entity) -> bool {
        self.accounting.contains_key(&e)
    }

    fn push(&mut self, at: SimTime, kind: EventKind) {
        self.seq += 1;
        self.queue.push(Reverse((at, self.seq, kind)));
    }

    pub fn schedule_wake(&mut self, at: SimTime, process: u32) {
        debug_assert!(at >= self.now, "wake-up scheduled in the past");
        self.push(at.max(self.now), EventKind::Wake(process));
    }

    /// Wire time of one message.
    pub fn rpc_cost(&self, bytes: u64) -> SimTime {
        SimTime::from_secs(self.config.rpc_latency)
            + SimTime::from_secs(self.config.rpc_per_byte * bytes as f64)
    }

    pub fn send_rpc(
        &mut self,
        from: Entity,
        to: Entity,
        kind: MsgKind,
        bytes: u64,
    ) -> Result<SimTime, SimError> {
        self.send_rpc_at(from, to, kind, bytes, self.now)
    }

    /// Sends a message leaving at `at`; returns its delivery time.
    pub fn send_rpc_at(
        &mut self,
        from: Entity,
        to: Entity,
        kind: MsgKind,
        bytes: u64,
        at: SimTime,
    ) -> Result<SimTime, SimError> {
        for e in [from, to] {
            if !self.is_registered(e) {
                return Err(SimError::UnknownEntity(e));
            }
        }
        let deliver_at = at + self.rpc_cost(bytes);
        let idx = self.messages.len();
        self.messages.push(Message {
            from,
            to,
            kind,
            bytes,
            sent_at: at,
            deliver_at,
        });
        let sender = self.accounting.get_mut(&from).expect("registered");
        sender.rpc_sent += 1;
        *sender.sent_by_kind.entry(kind).or_default() += 1;
        let receiver = self.accounting.get_mut(&to).expect("registered");
        receiver.rpc_recv += 1;
        *receiver.recv_by_kind.entry(kind).or_default() += 1;
        if let (Entity::Client(a), Entity::Client(b), MsgKind::Data) = (from, to, kind) {
            self.accounting
                .get_mut(&from)
                .expect("registered")
                .bytes_client_to_client += bytes;
            *self.c2c.entry((a, b)).or_default() += bytes;
        }
        self.push(deliver_at, EventKind::Deliver(idx));
        Ok(deliver_at)
    }

    /// Service time of one request on a device, ignoring queueing.
    pub fn device_cost(&self, kind: DeviceKind, dir: Direction, bytes: u64) -> SimTime {
        let c = &self.config;
        let (latency, bw) = match (kind, dir) {
            (DeviceKind::Ssd, Direction::Read) => (c.ssd_op_latency, c.ssd_read_bw),
            (DeviceKind::Ssd, Direction::Write) => (c.ssd_op_latency, c.ssd_write_bw),
            (DeviceKind::Pfs, Direction::Read) => (c.pfs_op_latency, c.pfs_read_bw),
            (DeviceKind::Pfs, Direction::Write) => (c.pfs_op_latency, c.pfs_write_bw),
            (DeviceKind::Memory, _) => (0.0, c.mem_bw),
        };
        SimTime::from_secs(latency) + SimTime::transfer(bytes, bw)
    }

    /// Elapsed seconds for one uncontended request.
    pub fn device_io(&self, kind: DeviceKind, dir: Direction, bytes: u64) -> f64 {
        self.device_cost(kind, dir, bytes).as_secs()
    }

    /// Queues a request on `device` arriving at `at`, charged to `by`.
    /// Returns its completion time; each device serves requests one at a time
    /// in arrival order.
    pub fn device_io_at(
        &mut self,
        device: DeviceId,
        dir: Direction,
        bytes: u64,
        at: SimTime,
        by: Entity,
    ) -> SimTime {
        let cost = self.device_cost(device.kind, dir, bytes);
        let stats = self.devices.entry(device).or_default();
        let start = stats.free_at.max(at);
        let end = start + cost;
        stats.free_at = end;
        stats.busy_time += cost;
        stats.cost_sum += cost;
        stats.requests += 1;
        match dir {
            Direction::Read => stats.bytes_read += bytes,
            Direction::Write => stats.bytes_written += bytes,
        }
        if device.kind == DeviceKind::Ssd {
            if let Some(acct) = self.accounting.get_mut(&by) {
                match dir {
                    Direction::Read => acct.bytes_read_ssd += bytes,
                    Direction::Write => acct.bytes_written_ssd += bytes,
                }
            }
        }
        if let Some(acct) = self.accounting.get_mut(&by) {
            acct.busy_time += cost;
        }
        end
    }

    /// Hands a request that reached the server at `arrival` to the next
    /// worker in round-robin order; returns when the worker finishes it.
    pub fn server_task_at(&mut self, arrival: SimTime) -> SimTime {
        let w = self.next_worker;
        self.next_worker = (self.next_worker + 1) % self.workers.len();
        let cost = SimTime::from_secs(self.config.server_op_time);
        let start = self.workers[w].max(arrival);
        let end = start + cost;
        self.workers[w] = end;
        self.accounting
            .get_mut(&Entity::Worker(w as u32))
            .expect("workers registered")
            .busy_time += cost;
        self.accounting
            .get_mut(&Entity::Server)
            .expect("server registered")
            .busy_time += cost;
        end
    }

    pub fn accounting(&self, e: Entity) -> Option<&Accounting> {
        self.accounting.get(&e)
    }

    pub fn all_accounting(&self) -> &BTreeMap<Entity, Accounting> {
        &self.accounting
    }

    pub fn device_stats(&self, device: DeviceId) -> DeviceStats {
        self.devices.get(&device).copied().unwrap_or_default()
    }

    pub fn all_devices(&self) -> &BTreeMap<DeviceId, DeviceStats> {
        &self.devices
    }

    /// Requests of `kind` received by the server so far.
    pub fn server_requests(&self, kind: MsgKind) -> u64 {
        self.accounting[&Entity::Server]
            .recv_by_kind
            .get(&kind)
            .copied()
            .unwrap_or(0)
    }

    pub fn server_busy_time(&self) -> SimTime {
        self.accounting[&Entity::Server].busy_time
    }

    /// Payload bytes an owning client shipped to a reading client.
    pub fn client_to_client_bytes(&self, from: u32, to: u32) -> u64 {
        self.c2c.get(&(from, to)).copied().unwrap_or(0)
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    /// Messages in the order their delivery events fired.
    pub fn delivered(&self) -> impl Iterator<Item = &Message> + '_ {
        self.delivered.iter().map(|&i| &self.messages[i])
    }

    /// Fires events in (time, sequence) order until none remain.
    pub fn run_until_idle<A: Actor>(&mut self, actor: &mut A) -> Result<SimTime, A::Error> {
        while let Some(p) = self.next_wake() {
            actor.wake(self, p)?;
        }
        let blocked = actor.blocked();
        if !blocked.is_empty() {
            return Err(SimError::Deadlock(blocked).into());
        }
        Ok(self.now)
    }

    /// Advances the clock to the next wake-up and returns its process,
    /// recording every delivery on the way. `None` once the queue is empty.
    pub fn next_wake(&mut self) -> Option<u32> {
        while let Some(Reverse((at, _, kind))) = self.queue.pop() {
            debug_assert!(at >= self.now);
            self.now = at;
            match kind {
                EventKind::Deliver(idx) => self.delivered.push(idx),
                EventKind::Wake(p) => return Some(p),
            }
        }
        None
    }

    /// Drains pending deliveries with no processes attached.
    pub fn drain(&mut self) -> Result<SimTime, SimError> {
        self.run_until_idle(&mut Idle)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> SimConfig {
        SimConfig {
            rpc_latency: 10e-6,
            rpc_per_byte: 0.1e-9,
            ssd_op_latency: 0.0,
            ..SimConfig::default()
        }
    }

    #[test]
    fn empty_world_ends_at_zero() {
        let mut f = Fabric::new(cfg());
        assert_eq!(f.drain().unwrap(), SimTime::ZERO);
    }

    #[test]
    fn rpc_delivery_times() {
        let mut f = Fabric::new(cfg());
        f.register_client(0);
        let t = f
            .send_rpc(Entity::Client(0), Entity::Server, MsgKind::Query, 0)
            .unwrap();
        assert_eq!(t, SimTime::from_micros(10));
        let t = f
            .send_rpc(Entity::Client(0), Entity::Server, MsgKind::Query, 8192)
            .unwrap();
        // 10 us + 8192 B * 0.1 ns/B = 10.8192 us
        assert_eq!(t, SimTime(10_819_200));
        assert_eq!(f.accounting(Entity::Client(0)).unwrap().rpc_sent, 2);
        assert_eq!(f.server_requests(MsgKind::Query), 2);
    }

    #[test]
    fn unknown_entity_rejected() {
        let mut f = Fabric::new(cfg());
        assert_eq!(
            f.send_rpc(Entity::Client(7), Entity::Server, MsgKind::Query, 0),
            Err(SimError::UnknownEntity(Entity::Client(7)))
        );
    }

    #[test]
    fn same_tick_deliveries_keep_send_order() {
        let mut f = Fabric::new(cfg());
        f.register_client(0);
        f.register_client(1);
        f.send_rpc(Entity::Client(1), Entity::Server, MsgKind::Attach, 0).unwrap();
        f.send_rpc(Entity::Client(0), Entity::Server, MsgKind::Query, 0).unwrap();
        f.drain().unwrap();
        let order: Vec<_> = f.delivered().map(|m| m.from).collect();
        assert_eq!(order, vec![Entity::Client(1), Entity::Client(0)]);
        assert_eq!(f.now(), SimTime::from_micros(10));
    }

    #[test]
    fn device_costs() {
        let f = Fabric::new(cfg());
        assert_eq!(f.device_io(DeviceKind::Ssd, Direction::Write, 1_000_000_000), 1.0);
        let t = f.device_io(DeviceKind::Ssd, Direction::Read, 8 << 20);
        assert!((t - 8.0 * 1048576.0 / 2e9).abs() < 1e-12);
        let lat = Fabric::new(SimConfig::default());
        let t = lat.device_io(DeviceKind::Ssd, Direction::Read, 1);
        assert!((t - 20e-6).abs() < 1e-9);
    }

    #[test]
    fn device_is_fifo() {
        let mut f = Fabric::new(cfg());
        f.register_client(0);
        let dev = DeviceId::ssd(0);
        let a = f.device_io_at(dev, Direction::Write, 1000, SimTime::ZERO, Entity::Client(0));
        let b = f.device_io_at(dev, Direction::Write, 1000, SimTime::ZERO, Entity::Client(0));
        assert_eq!(b, a + a);
        // a different node's SSD is independent
        let c = f.device_io_at(DeviceId::ssd(1), Direction::Write, 1000, SimTime::ZERO, Entity::Client(0));
        assert_eq!(c, a);
        assert_eq!(f.device_stats(dev).busy_time, b);
        assert_eq!(f.accounting(Entity::Client(0)).unwrap().bytes_written_ssd, 3000);
    }

    #[test]
    fn workers_round_robin() {
        let mut f = Fabric::new(SimConfig {
            server_workers: 2,
            server_op_time: 1e-6,
            ..cfg()
        });
        let ends: Vec<_> = (0..4).map(|_| f.server_task_at(SimTime::ZERO)).collect();
        let us = SimTime::from_micros(1);
        assert_eq!(ends, vec![us, us, us + us, us + us]);
        assert_eq!(f.server_busy_time(), SimTime::from_micros(4));
    }
}
