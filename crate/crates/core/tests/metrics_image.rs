use ncc::image::{decode_pnm, Plane};
use ncc::metrics::{ms_ssim, ssim_image, MsSsimConfig, SsimConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn camera() -> Plane {
    let bytes = std::fs::read(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/camera.pgm")).unwrap();
    decode_pnm(&bytes).unwrap().into_planes().remove(0)
}

#[test]
fn ms_ssim_decreases_with_noise() {
    let x = camera().crop(128, 128, 256, 256).unwrap();
    let cfg = MsSsimConfig::default();
    assert_eq!(ms_ssim(&x, &x, &cfg).unwrap(), 1.0);
    let mut last = 1.0;
    for sigma in [1.0, 3.0, 8.0, 20.0, 50.0] {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = Normal::new(0.0, sigma).unwrap();
        let y = Plane::new(256, 256, x.data().iter().map(|v| v + n.sample(&mut rng)).collect()).unwrap();
        let v = ms_ssim(&x, &y, &cfg).unwrap();
        assert!(v < last, "sigma {sigma}: {v} not below {last}");
        last = v;
    }
}

#[test]
fn ssim_of_full_test_image_with_itself() {
    let x = camera();
    assert_eq!(ssim_image(&x, &x, &SsimConfig::default()).unwrap(), 1.0);
}
