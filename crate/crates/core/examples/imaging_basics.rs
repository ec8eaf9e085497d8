//! Build frames and volumes in memory, apply the geometric primitives and
//! round-trip a volume through PNG files.

use octbench::imaging::{crop_rect, mirror_horizontal, resize_bilinear, rotate_about_center, Frame, OctVolume};
use octbench::synthetic;

fn main() -> octbench::Result<()> {
    let ramp = Frame::from_fn(8, 4, |x, y| [(x * 30 + y * 5) as u8])?;
    println!("ramp row 0: {:?}", ramp.row(0));
    println!("mirrored row 0: {:?}", mirror_horizontal(&ramp).row(0));
    println!("resized to 4x2: {:?}", resize_bilinear(&ramp, 4, 2)?.data());
    println!("crop (2,1,3,2): {:?}", crop_rect(&ramp, 2, 1, 3, 2)?.data());

    let square = Frame::from_fn(5, 5, |x, _| [if x == 2 { 255 } else { 0 }])?;
    let turned = rotate_about_center(&square, 90.0);
    println!("vertical bar rotated 90 deg, row 2: {:?}", turned.row(2));

    let vol = synthetic::oct_volume(42, 128, 96);
    let dir = tempfile::tempdir().expect("temp dir");
    vol.save_dir(dir.path())?;
    let back = OctVolume::load_dir(dir.path(), "demo")?;
    println!("volume {:?} round-trips through PNG: {}", back.dims(), back == vol);
    Ok(())
}
