//! Generate a phantom from a JSON spec (or the noisy preset) and write it
//! as a PGM stack plus truth CSVs, ready for the `octseg` binary.
//!
//!     cargo run --release --example phantom_volume -- [spec.json] [out_dir]

use std::path::PathBuf;

use octseg::io::{save_boundary_set, save_volume_pgm};
use octseg::phantom::{generate_phantom, PhantomSpec};

fn main() -> octseg::Result<()> {
    let mut args = std::env::args().skip(1);
    let spec = match args.next() {
        Some(p) if p != "-" => {
            PhantomSpec::from_json(&std::fs::read_to_string(&p).map_err(|e| octseg::Error::Format(format!("{p}: {e}")))?)?
        }
        _ => PhantomSpec::noisy(7),
    };
    let out = PathBuf::from(args.next().unwrap_or_else(|| "target/phantom".into()));

    let p = generate_phantom(&spec)?;
    save_volume_pgm(&p.volume, &out.join("frames"))?;
    save_boundary_set(&p.truth, &out.join("truth"), false)?;
    println!(
        "{}x{}x{} volume, {} shadowed columns, {} dark-spot A-scans -> {}",
        spec.width,
        spec.frames,
        spec.depth,
        p.shadow_columns.len(),
        p.dark_spots.as_slice().iter().filter(|&&s| s).count(),
        out.display()
    );
    Ok(())
}
