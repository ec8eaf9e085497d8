//! The fundus and OCT preprocessing steps on synthetic inputs: border crop,
//! ruler removal, truncation, central mask, per-direction orientation and
//! the 6x8x256 sequence stack.

use octbench::imaging::{resize_bilinear, save_image, FundusImage};
use octbench::preprocess::{
    crop_black_border, extract_sequences, mask_central_roi, orient_for_direction, remove_ruler,
    truncate_normalize, DirectionModel, RulerRegion, DEFAULT_BORDER_TAU, DEFAULT_SEQUENCE_RADIUS,
};
use octbench::synthetic;

fn main() -> octbench::Result<()> {
    let out = tempfile::tempdir().expect("temp dir");

    let raw: FundusImage = synthetic::fundus_image(3, 320, 300);
    let cropped = crop_black_border(&raw, DEFAULT_BORDER_TAU)?;
    let fundus = resize_bilinear(&cropped, 224, 224)?;
    println!("fundus {:?} -> crop {:?} -> {:?}", raw.dims(), cropped.dims(), fundus.dims());

    let model = DirectionModel::default();
    for k in 0..6 {
        let oriented = orient_for_direction(&fundus, k, &model)?;
        let masked = mask_central_roi(&oriented, 0.20, 0.60)?;
        let scaled = resize_bilinear(&masked, 768, 496)?;
        save_image(&scaled, out.path().join(format!("direction{k}.png")))?;
        println!("direction {k}: angle {:>4} deg", model.angle_of(k)?);
    }

    let bscan = synthetic::oct_volume(3, 768, 496).frame(0).clone();
    let ruler = RulerRegion::bottom_left(90, 40, 768, 496);
    let clean = remove_ruler(&bscan, ruler)?;
    let norm = truncate_normalize(&clean, 62, 255)?;
    let zeros = norm.values.iter().filter(|&&v| v == 0.0).count();
    println!("b-scan truncated: {zeros} of {} values below the floor", norm.values.len());

    let small = resize_bilinear(&fundus, 256, 256)?;
    let seq = extract_sequences(&small, &model, DEFAULT_SEQUENCE_RADIUS)?;
    println!("sequence stack shape {:?}, first values {:?}", seq.shape(), &seq.slab(0)[..4]);
    Ok(())
}
