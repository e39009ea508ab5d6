//! Raw costs from the simulated fabric: RPCs, device queues, server workers.

use scnf::sim::{DeviceId, Direction, Entity, Fabric, MsgKind, SimConfig, SimTime};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = SimConfig::default();
    println!("calibration:\n{}", config.to_toml_string());
    let mut fabric = Fabric::new(config);
    fabric.register_client(0);
    fabric.register_client(1);

    let t0 = SimTime::ZERO;
    let arrive = fabric.send_rpc_at(Entity::Client(0), Entity::Server, MsgKind::Query, 64, t0)?;
    let served = fabric.server_task_at(arrive);
    println!("query: at server {:.1} us, served {:.1} us", arrive.as_secs() * 1e6, served.as_secs() * 1e6);

    // two requests to one SSD queue up, a second SSD is independent
    let ssd0 = DeviceId::ssd(0);
    let a = fabric.device_io_at(ssd0, Direction::Write, 1 << 20, t0, Entity::Client(0));
    let b = fabric.device_io_at(ssd0, Direction::Write, 1 << 20, t0, Entity::Client(0));
    let c = fabric.device_io_at(DeviceId::ssd(1), Direction::Write, 1 << 20, t0, Entity::Client(1));
    println!("1 MiB writes: {:.1} us, {:.1} us (same SSD), {:.1} us (other SSD)",
        a.as_secs() * 1e6, b.as_secs() * 1e6, c.as_secs() * 1e6);

    fabric.drain()?;
    println!("server requests: {}, busy {:.1} us", fabric.server_requests(MsgKind::Query),
        fabric.server_busy_time().as_secs() * 1e6);
    Ok(())
}
