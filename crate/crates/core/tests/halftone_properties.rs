use halftone_core::halftone::{
    dbs_with_options, error_diffusion, error_diffusion_variable, generate_vac_mask, ordered_dither,
    white_noise_halftone, DbsOptions, DbsState, DiffusionKernel, Move, ThresholdMatrix, VariableKernelTable,
};
use halftone_core::hvs::HvsFilter;
use halftone_core::image::{constant_image, Plane};
use halftone_core::spectral::{anisotropy, bluenoise_report, power_spectrum, rapsd};
use halftone_core::GrayImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn dbs_incremental_error_matches_recompute_over_500_moves() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let c = GrayImage::from_plane(Plane::from_fn(32, 32, |_, _| rng.random())).unwrap();
    let hvs = HvsFilter::gaussian(2.0, 6).unwrap();
    let mut state = DbsState::new(&c, &white_noise_halftone(&c, 2), &hvs).unwrap();
    for _ in 0..500 {
        let a = rng.random_range(0..1024usize);
        let mv = if rng.random_bool(0.5) {
            Move::Toggle(a)
        } else {
            let (x, y) = ((a % 32) as isize, (a / 32) as isize);
            let nx = (x + rng.random_range(-1..=1i64) as isize).clamp(0, 31);
            let ny = (y + rng.random_range(-1..=1i64) as isize).clamp(0, 31);
            Move::Swap(a, (ny * 32 + nx) as usize)
        };
        let before = state.recompute_mse();
        let predicted = state.delta(mv);
        state.apply(mv);
        let after = state.recompute_mse();
        assert!((after - before - predicted).abs() < 1e-9);
        assert!((state.mse() - after).abs() < 1e-9);
    }
}

#[test]
fn dbs_gives_blue_noise_white_noise_does_not() {
    let c = constant_image(128, 128, 0.5).unwrap();
    let hvs = HvsFilter::nasanen(2000.0, 23).unwrap();
    let init = white_noise_halftone(&c, 3);
    let rep = dbs_with_options(&c, &init, &hvs, DbsOptions { max_sweeps: 30, trace: true }).unwrap();
    let blue = bluenoise_report(&rep.halftone).low_frequency_ratio.unwrap();
    assert!(blue < 0.1, "dbs ratio {blue}");
    assert!(rep.trace.windows(2).all(|w| w[1] <= w[0]));
    assert!((rep.halftone.on_fraction() - 0.5).abs() < 0.02);
    for seed in 0..8 {
        let white = bluenoise_report(&white_noise_halftone(&c, seed)).low_frequency_ratio.unwrap();
        assert!(white > 0.3, "white ratio {white}");
    }
}

#[test]
fn vac_mask_beats_white_noise_mask() {
    let hvs = HvsFilter::gaussian(1.5, 4).unwrap();
    let vac = generate_vac_mask(32, 1, &hvs).unwrap();
    let white = ThresholdMatrix::white_noise(32, 1).unwrap();
    for g in [0.25, 0.5] {
        let c = constant_image(64, 64, g).unwrap();
        let rv = bluenoise_report(&ordered_dither(&c, &vac)).low_frequency_ratio.unwrap();
        let rw = bluenoise_report(&ordered_dither(&c, &white)).low_frequency_ratio.unwrap();
        assert!(rv < rw, "g={g}: vac {rv} white {rw}");
        assert!(rv < 0.2, "g={g}: vac {rv}");
    }
}

#[test]
fn error_diffusion_preserves_tone() {
    let kernels = [
        DiffusionKernel::floyd_steinberg(true),
        DiffusionKernel::floyd_steinberg(false),
        DiffusionKernel::jarvis(true),
    ];
    let table = VariableKernelTable::placeholder();
    for k in 1..10 {
        let g = k as f64 / 10.0;
        let c = constant_image(128, 128, g).unwrap();
        for kern in &kernels {
            assert!((error_diffusion(&c, kern).on_fraction() - g).abs() < 0.01);
        }
        assert!((error_diffusion_variable(&c, &table, true).on_fraction() - g).abs() < 0.01);
    }
}

#[test]
fn vac_tone_within_one_level() {
    let m = generate_vac_mask(16, 4, &HvsFilter::gaussian(1.5, 4).unwrap()).unwrap();
    for k in 1..10 {
        let g = k as f64 / 10.0;
        let h = ordered_dither(&constant_image(64, 64, g).unwrap(), &m);
        assert!((h.on_fraction() - g).abs() <= 1.0 / 256.0);
    }
}

fn mean_db(h: &halftone_core::BinaryImage, min_count: usize) -> Option<f64> {
    let s = power_spectrum(&h.to_plane());
    let p = rapsd(&s);
    anisotropy(&s, &p).mean_db(&p, min_count)
}

#[test]
fn dbs_less_anisotropic_than_bayer() {
    let hvs = HvsFilter::gaussian(2.0, 6).unwrap();
    let bayer_mask = ThresholdMatrix::bayer(8).unwrap();
    for g in [0.5, 0.49, 0.3, 0.25] {
        let c = constant_image(64, 64, g).unwrap();
        let dbs = dbs_with_options(&c, &white_noise_halftone(&c, 5), &hvs, DbsOptions::default())
            .unwrap()
            .halftone;
        let d = mean_db(&dbs, 16).unwrap();
        // The g=0.5 Bayer pattern is a checkerboard whose only nonzero ring
        // is the 5-bin corner ring.
        let b = mean_db(&ordered_dither(&c, &bayer_mask), if g == 0.5 { 1 } else { 16 }).unwrap();
        assert!(d < b, "g={g}: dbs {d} bayer {b}");
    }
}
