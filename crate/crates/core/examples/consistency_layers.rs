//! The same handoff through the POSIX, commit and session layers, and the
//! RPCs each one spends.

use scnf::basefs::{BufferTier, ClientId, Cluster, Payload};
use scnf::layers::{LayerHandle, LayerKind};
use scnf::sim::{MsgKind, SimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for kind in LayerKind::ALL {
        let mut cluster = Cluster::new(SimConfig::default(), 2, 1, BufferTier::Ssd, true);
        let (w, r) = (ClientId::new(0, 0), ClientId::new(1, 0));

        let mut fs = cluster.client(w)?;
        let mut h = LayerHandle::open(&mut fs, kind, "data")?;
        if kind == LayerKind::Session {
            h.session_open(&mut fs)?;
        }
        for i in 0..4u8 {
            h.write(&mut fs, i as u64 * 4, Payload::Bytes(vec![b'a' + i; 4]))?;
        }
        match kind {
            LayerKind::Commit => h.commit(&mut fs)?,
            LayerKind::Session => h.session_close(&mut fs)?,
            LayerKind::Posix => {}
        }
        let done = fs.now();

        cluster.advance_clock(r, done)?;
        let mut fs = cluster.client(r)?;
        let mut h = LayerHandle::open(&mut fs, kind, "data")?;
        if kind == LayerKind::Session {
            h.session_open(&mut fs)?;
        }
        let mut text = String::new();
        for i in 0..4 {
            let out = h.read(&mut fs, i * 4, 4)?;
            text.push_str(&String::from_utf8_lossy(out.data.bytes().unwrap()));
        }
        let f = cluster.fabric();
        println!(
            "{kind:>8}: read {text:?}  attach={} query={}",
            f.server_requests(MsgKind::Attach),
            f.server_requests(MsgKind::Query)
        );
    }
    Ok(())
}
