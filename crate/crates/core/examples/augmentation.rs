//! Paired augmentation: the collaborative flip keeps fundus and B-scans
//! consistent, photometric jitter touches only the fundus.

use octbench::augment::{collaborative_flip, photometric_augment, sample_photometric, PhotometricParams};
use octbench::imaging::mirror_horizontal;
use octbench::synthetic;

fn main() {
    let fundus = synthetic::fundus_image(9, 160, 160);
    let volume = synthetic::oct_volume(9, 96, 64);

    let (f2, v2) = collaborative_flip(&fundus, &volume);
    println!("frame 0 kept as is: {}", v2.frame(0) == volume.frame(0));
    for k in 1..6 {
        let same = v2.frame((6 - k) % 6) == &mirror_horizontal(volume.frame(k));
        println!("out[{}] = mirror(in[{k}]): {same}", (6 - k) % 6);
    }
    let (f3, v3) = collaborative_flip(&f2, &v2);
    println!("flip twice is identity: {}", f3 == fundus && v3 == volume);

    for seed in [1, 2, 3] {
        let params = sample_photometric(seed);
        let out = photometric_augment(&fundus, &params);
        let again = photometric_augment(&fundus, &params);
        println!(
            "seed {seed}: brightness {:+.1}, contrast {:.2}, gamma {:.2}, blur {:.2}, deterministic {}",
            params.brightness_delta,
            params.contrast_gain,
            params.gamma,
            params.blur_sigma,
            out == again
        );
    }
    let unchanged = photometric_augment(&fundus, &PhotometricParams::identity());
    println!("identity parameters leave the image unchanged: {}", unchanged == fundus);
}
