use halftone_core::hvs::HvsFilter;
use halftone_core::marl::{counterfactual_rewards, marl_gradient, sample_halftone};
use halftone_core::metrics::{reward, ErrorMetricConfig};
use halftone_core::noise::sample_noise;
use halftone_core::policy::{backward, forward, Adam, Architecture, PolicyParams};
use halftone_core::{BinaryImage, GrayImage, NoiseMap, Plane};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_gray(w: usize, h: usize, seed: u64) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    GrayImage::from_plane(Plane::from_fn(w, h, |_, _| rng.random())).unwrap()
}

fn weighted_sum(params: &PolicyParams, c: &GrayImage, z: &NoiseMap, g: &Plane) -> f64 {
    let p = forward(params, c, z).unwrap();
    p.data().iter().zip(g.data()).map(|(a, b)| a * b).sum()
}

#[test]
fn backward_matches_finite_differences() {
    let arch = Architecture::new(2, 4).unwrap();
    for (k, (w, h)) in [(8usize, 8usize), (7, 5)].into_iter().enumerate() {
        let params = PolicyParams::init(arch, 20 + k as u64).unwrap();
        let c = random_gray(w, h, 30 + k as u64);
        let z = sample_noise(w, h, 40 + k as u64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(50 + k as u64);
        let g = Plane::from_fn(w, h, |_, _| rng.random_range(-1.0..1.0));
        let an = backward(&params, &c, &z, &g).unwrap();
        let eps = 1e-4;
        let mut checked = 0;
        for _ in 0..20 {
            let i = rng.random_range(0..params.len());
            let mut plus = params.clone();
            plus.data_mut()[i] += eps;
            let mut minus = params.clone();
            minus.data_mut()[i] -= eps;
            let fd = (weighted_sum(&plus, &c, &z, &g) - weighted_sum(&minus, &c, &z, &g)) / (2.0 * eps);
            let scale = fd.abs().max(an[i].abs());
            if scale < 1e-9 {
                continue;
            }
            assert!((fd - an[i]).abs() / scale < 1e-3, "{w}x{h} param {i}: fd {fd} analytic {}", an[i]);
            checked += 1;
        }
        assert!(checked >= 15);
    }
}

#[test]
fn backward_is_linear_in_output_gradient() {
    let params = PolicyParams::init(Architecture::new(2, 4).unwrap(), 3).unwrap();
    let c = random_gray(9, 6, 1);
    let z = sample_noise(9, 6, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let g = Plane::from_fn(9, 6, |_, _| rng.random_range(-1.0..1.0));
    let g2 = Plane::new(9, 6, g.data().iter().map(|v| 2.0 * v).collect()).unwrap();
    let a = backward(&params, &c, &z, &g).unwrap();
    let b = backward(&params, &c, &z, &g2).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!((2.0 * x - y).abs() <= 1e-12 * x.abs().max(1.0));
    }
}

#[test]
fn interior_is_translation_equivariant() {
    let arch = Architecture::new(2, 4).unwrap();
    let params = PolicyParams::init(arch, 8).unwrap();
    let (w, h) = (32, 28);
    let c = random_gray(w, h, 5);
    let z = sample_noise(w, h, 6).unwrap();
    let (dx, dy) = (3isize, 2isize);
    let cs = GrayImage::from_plane(c.as_plane().roll(dx, dy)).unwrap();
    let zs = NoiseMap::new(z.as_plane().roll(dx, dy), z.seed());
    let p = forward(&params, &c, &z).unwrap();
    let ps = forward(&params, &cs, &zs).unwrap();
    let margin = 2 * arch.receptive_radius() + 3;
    for y in margin..h - margin {
        for x in margin..w - margin {
            let (sx, sy) = ((x as isize + dx) as usize, (y as isize + dy) as usize);
            assert!((p.get(x, y) - ps.get(sx, sy)).abs() < 1e-6);
        }
    }
}

#[test]
fn forward_is_deterministic_and_noise_sensitive() {
    let params = PolicyParams::init(Architecture::desk(), 1).unwrap();
    let c = random_gray(16, 16, 2);
    let z = sample_noise(16, 16, 3).unwrap();
    assert_eq!(forward(&params, &c, &z).unwrap(), forward(&params, &c, &z).unwrap());
    let other = forward(&params, &c, &sample_noise(16, 16, 4).unwrap()).unwrap();
    assert_ne!(forward(&params, &c, &z).unwrap(), other);
    assert_eq!(PolicyParams::init(Architecture::desk(), 1).unwrap(), params);
}

#[test]
fn adam_descends_a_quadratic() {
    let loss = |p: &[f64]| 0.5 * (p[0] * p[0] + 10.0 * p[1] * p[1]);
    let mut p = vec![1.0, -1.0];
    let mut opt = Adam::new(2);
    let mut prev = loss(&p);
    for step in 0..200 {
        let g = [p[0], 10.0 * p[1]];
        opt.step(&mut p, &g, 0.01).unwrap();
        let now = loss(&p);
        if step >= 5 {
            assert!(now < prev, "step {step}: {now} >= {prev}");
        }
        prev = now;
    }
    assert!(prev < 0.05 * loss(&[1.0, -1.0]));
}

#[test]
fn single_pixel_estimator_is_exact() {
    let params = PolicyParams::init(Architecture::new(2, 4).unwrap(), 9).unwrap();
    let c = GrayImage::new(1, 1, vec![0.37]).unwrap();
    let z = sample_noise(1, 1, 1).unwrap();
    let p = forward(&params, &c, &z).unwrap();
    // SSIM needs an image at least one window wide, so only the MSE term is live.
    for cfg in [
        ErrorMetricConfig {
            omega_s: 0.0,
            ..ErrorMetricConfig::default()
        },
        ErrorMetricConfig {
            omega_s: 0.0,
            ..ErrorMetricConfig::with_hvs(HvsFilter::gaussian(1.0, 2).unwrap())
        },
    ] {
        let r1 = reward(&BinaryImage::new(1, 1, vec![1]).unwrap(), &c, &cfg).unwrap();
        let r0 = reward(&BinaryImage::new(1, 1, vec![0]).unwrap(), &c, &cfg).unwrap();
        let mut seen = [false; 2];
        for seed in 0..64 {
            let h = sample_halftone(&p, seed);
            seen[h.data()[0] as usize] = true;
            let g = marl_gradient(&p, &counterfactual_rewards(&h, &c, &cfg).unwrap()).unwrap();
            assert!((g.data()[0] + (r1 - r0)).abs() < 1e-12);
        }
        assert!(seen[0] && seen[1]);
    }
}
