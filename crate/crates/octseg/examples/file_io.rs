//! Round-trip a volume through both on-disk formats and a boundary set
//! through CSV, in a temporary directory.

use octseg::io::{load_boundary_set, load_volume, save_boundary_set, save_volume_pgm, save_volume_raw, VolumeFormat};
use octseg::phantom::{generate, PhantomSpec};
use octseg::VolumeMeta;

fn main() -> octseg::Result<()> {
    let dir = std::env::temp_dir().join(format!("octseg-io-{}", std::process::id()));
    let spec = PhantomSpec::clean(9).resized(96, 12, 256);
    let (vol, truth) = generate(&spec)?;
    let meta = VolumeMeta::new(spec.axial_um_per_px, "example")?;

    let raw = dir.join("volume.raw");
    std::fs::create_dir_all(&dir).map_err(|e| octseg::Error::Format(e.to_string()))?;
    save_volume_raw(&vol, &meta, &raw)?;
    let (back, back_meta) = load_volume(&raw, VolumeFormat::Raw)?;
    println!("raw: identical {}, scale {:?}", back == vol, back_meta.axial_um_per_px);

    let stack = dir.join("frames");
    save_volume_pgm(&vol, &stack)?;
    let (back, _) = load_volume(&stack, VolumeFormat::detect(&stack))?;
    println!("pgm stack: identical {}", back == vol);

    save_boundary_set(&truth, &dir.join("truth"), true)?;
    println!("boundaries: identical {}", load_boundary_set(&dir.join("truth"))? == truth);

    let _ = std::fs::remove_dir_all(&dir);
    Ok(())
}
