//! Shared inputs for the criterion benchmarks.

use shadowup::eval::{generate, Pattern, SyntheticSpec};
use shadowup::PlanarImage;

/// Noisy two-band scene of the given side length.
pub fn scene(size: usize) -> PlanarImage {
    let spec = SyntheticSpec {
        pattern: Pattern::TwoBand,
        noise_std: 0.05,
        seed: 7,
        size,
    };
    generate(&spec).expect("valid spec").1
}

/// Value channel of [`scene`].
pub fn value_channel(size: usize) -> PlanarImage {
    let hsv = shadowup::rgb_to_hsv(&scene(size)).expect("rgb input");
    PlanarImage::gray(size, size, hsv.plane(2).to_vec()).expect("unit range")
}
