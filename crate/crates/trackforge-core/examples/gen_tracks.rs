//! Regenerates the bundled track files under `tracks/`.
//!
//! Run from the workspace root:
//! `cargo run -p trackforge-core --example gen_tracks`

use std::fmt::Write as _;
use std::fs;

use trackforge_core::track::synthetic;
use trackforge_core::track::Waypoint;

fn to_csv(comment: &str, points: &[Waypoint]) -> String {
    let mut out = String::new();
    writeln!(out, "# {comment}").unwrap();
    out.push_str("x,y\n");
    for p in points {
        writeln!(out, "{},{}", p.x, p.y).unwrap();
    }
    out
}

fn main() -> std::io::Result<()> {
    fs::create_dir_all("tracks")?;
    fs::write(
        "tracks/oval.csv",
        to_csv(
            "oval: 12 m straights joined by radius-4 semicircles, 0.25 m spacing",
            &synthetic::oval(0.25),
        ),
    )?;
    fs::write(
        "tracks/slow_corner.csv",
        to_csv(
            "slow_corner: paperclip with a radius-0.5 hairpin and a radius-2 far end, 0.25 m spacing",
            &synthetic::slow_corner(0.25),
        ),
    )?;
    println!("wrote tracks/oval.csv and tracks/slow_corner.csv");
    Ok(())
}
