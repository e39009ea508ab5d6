//! The two interval trees: the server's owner map and a client's buffer map.

use scnf::interval::{GlobalInterval, GlobalTree, LocalTree};
use scnf::ByteRange;

fn r(s: u64, e: u64) -> ByteRange {
    ByteRange::new(s, e).unwrap()
}

fn main() {
    let mut owners: GlobalTree<&str> = GlobalTree::new();
    owners.insert(GlobalInterval { range: r(0, 99), owner: "a" });
    owners.insert(GlobalInterval { range: r(40, 59), owner: "b" }); // splits a's interval
    owners.insert(GlobalInterval { range: r(100, 149), owner: "a" });
    for iv in owners.iter() {
        println!("{:>12} -> {}", iv.range.to_string(), iv.owner);
    }

    // a detach only releases what the caller still owns
    owners.remove_if_owner(r(30, 69), "a");
    println!("after a detaches [30, 69]:");
    for iv in owners.query(r(0, 200)) {
        println!("{:>12} -> {}", iv.range.to_string(), iv.owner);
    }

    let mut local = LocalTree::new();
    local.insert_write(r(0, 9), r(0, 9)).unwrap();
    local.insert_write(r(10, 19), r(10, 19)).unwrap(); // joins the first run
    local.insert_write(r(5, 7), r(20, 22)).unwrap(); // overwrite lands elsewhere in the buffer
    local.mark_attached(r(0, 4)).unwrap();
    println!("buffer map:");
    for iv in local.iter() {
        println!("  file {} at buffer {} attached={}", iv.file_range, iv.buffer_range, iv.attached);
    }
    println!("unattached: {:?}", local.unattached_ranges());
}
