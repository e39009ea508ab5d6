//! The kernel primitives by hand: buffer, attach, query, read from the owner,
//! flush to the parallel file system.

use scnf::basefs::{BaseFs, BufferTier, ClientId, Cluster, Payload, Whence};
use scnf::sim::{Entity, MsgKind, SimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cluster = Cluster::new(SimConfig::default(), 2, 1, BufferTier::Ssd, true);
    let (a, b) = (ClientId::new(0, 0), ClientId::new(1, 0));

    let fa = cluster.client(a)?.bfs_open("out.dat")?;
    let fb = cluster.client(b)?.bfs_open("out.dat")?;
    {
        let mut w = cluster.client(a)?;
        w.bfs_write(fa, Payload::Bytes(b"hello, burst buffer".to_vec()))?;
        w.bfs_attach(fa, 0, 5)?; // only "hello" becomes visible
    }

    let mut r = cluster.client(b)?;
    let owners = r.bfs_query(fb, 0, 19)?;
    println!("query sees {} interval(s): {:?}", owners.len(), owners);
    r.bfs_seek(fb, 0, Whence::Set)?;
    let got = r.bfs_read(fb, 5, Some(owners[0].owner))?;
    println!("read from {}: {:?}", owners[0].owner, String::from_utf8_lossy(got.data.bytes().unwrap()));
    println!("reader clock {:.1} us", r.now().as_secs() * 1e6);

    let mut w = cluster.client(a)?;
    w.bfs_attach_file(fa)?;
    w.bfs_flush_file(fa)?;
    println!("pfs now holds {:?}", cluster.pfs_contents("out.dat").map(|v| String::from_utf8(v).unwrap()));
    let server = cluster.fabric().accounting(Entity::Server).unwrap();
    println!("server saw {:?}", server.recv_by_kind);
    println!("attach RPCs: {}", cluster.fabric().server_requests(MsgKind::Attach));
    Ok(())
}
