//! Acceptance suite. Prints one `PASS`/`FAIL` line per criterion and exits
//! nonzero if any criterion fails.

use std::io::Write as _;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use halftone_core::fixtures::{corpus, CORPUS_LEN, CORPUS_SIDE};
use halftone_core::halftone::{
    dbs, error_diffusion, generate_vac_mask, ordered_dither, white_noise_halftone, DiffusionKernel, ThresholdMatrix,
};
use halftone_core::hvs::HvsFilter;
use halftone_core::image::constant_image;
use halftone_core::marl::{
    counterfactual_rewards, infer_halftone, marl_gradient, sample_halftone, TrainConfig, Trainer,
};
use halftone_core::metrics::{hvs_psnr, reward, ErrorMetricConfig};
use halftone_core::noise::sample_noise;
use halftone_core::policy::{backward, backward_into, forward, forward_trace, Architecture, PolicyParams};
use halftone_core::spectral::{anisotropy, anisotropy_loss, power_spectrum, rapsd, Spectrum};
use halftone_core::{BinaryImage, GrayImage, Plane};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_plane(w: usize, h: usize, seed: u64) -> Plane {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Plane::from_fn(w, h, |_, _| rng.random())
}

fn gray(p: Plane) -> GrayImage {
    GrayImage::from_plane(p).unwrap()
}

// ---------------------------------------------------------------------------
// 1 and 2: estimator against exhaustive enumeration

struct Instance {
    label: &'static str,
    w: usize,
    h: usize,
    sigma: f64,
    base: f64,
    param_seed: u64,
}

struct EstimatorStats {
    exact: Vec<f64>,
    mean: Vec<f64>,
    var_cf: Vec<f64>,
    var_reinforce: Vec<f64>,
}

const SAMPLES: usize = 20_000;

/// Exact `dL/dtheta` with `L = -J`, `J = sum_h pi(h) R(h)`, plus the
/// Monte-Carlo mean and variance of the counterfactual estimator and of
/// plain REINFORCE on the same draws.
fn estimator_stats(inst: &Instance) -> EstimatorStats {
    let (w, h) = (inst.w, inst.h);
    let n = w * h;
    let params = PolicyParams::init(Architecture::new(2, 4).unwrap(), inst.param_seed).unwrap();
    let c = gray(Plane::from_fn(w, h, |x, y| inst.base + 0.05 * (x + 2 * y) as f64));
    let z = sample_noise(w, h, 11).unwrap();
    let cfg = ErrorMetricConfig {
        omega_s: 0.0,
        ..ErrorMetricConfig::with_hvs(HvsFilter::gaussian(inst.sigma, 1).unwrap())
    };
    let trace = forward_trace(&params, &c, &z).unwrap();
    let p = trace.probabilities();
    let np = params.len();
    let jac: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut g = Plane::zeros(w, h);
            g.data_mut()[i] = 1.0;
            let mut row = vec![0.0; np];
            backward_into(&params, &trace, &g, &mut row).unwrap();
            row
        })
        .collect();
    let chain = |g: &[f64]| -> Vec<f64> { (0..np).map(|k| (0..n).map(|i| g[i] * jac[i][k]).sum()).collect() };

    let mut dl = vec![0.0; n];
    for bits in 0..(1u32 << n) {
        let hb = BinaryImage::from_fn(w, h, |x, y| bits >> (y * w + x) & 1 == 1);
        let prob: f64 = (0..n)
            .map(|i| if hb.data()[i] == 1 { p.data()[i] } else { 1.0 - p.data()[i] })
            .product();
        let r = reward(&hb, &c, &cfg).unwrap();
        for (i, d) in dl.iter_mut().enumerate() {
            let q = p.data()[i];
            let score = if hb.data()[i] == 1 { 1.0 / q } else { -1.0 / (1.0 - q) };
            *d -= prob * r * score;
        }
    }
    let exact = chain(&dl);

    let (mut s1, mut q1, mut s2, mut q2) = (vec![0.0; np], vec![0.0; np], vec![0.0; np], vec![0.0; np]);
    for s in 0..SAMPLES {
        let hb = sample_halftone(&p, 1000 + s as u64);
        let table = counterfactual_rewards(&hb, &c, &cfg).unwrap();
        let cf = chain(marl_gradient(&p, &table).unwrap().data());
        let r = table.sampled_reward();
        let score: Vec<f64> = (0..n)
            .map(|i| {
                let q = p.data()[i];
                -r * (hb.data()[i] as f64 - q) / (q * (1.0 - q))
            })
            .collect();
        let rf = chain(&score);
        for k in 0..np {
            s1[k] += cf[k];
            q1[k] += cf[k] * cf[k];
            s2[k] += rf[k];
            q2[k] += rf[k] * rf[k];
        }
    }
    let m = SAMPLES as f64;
    let mean: Vec<f64> = s1.iter().map(|v| v / m).collect();
    let var = |s: &[f64], q: &[f64]| -> Vec<f64> { s.iter().zip(q).map(|(s, q)| q / m - (s / m) * (s / m)).collect() };
    EstimatorStats {
        exact,
        var_cf: var(&s1, &q1),
        var_reinforce: var(&s2, &q2),
        mean,
    }
}

/// Near-independent agents: every live coordinate must be within 2%.
const PER_COORD: [Instance; 2] = [
    Instance { label: "2x2", w: 2, h: 2, sigma: 0.2, base: 0.1, param_seed: 0 },
    Instance { label: "2x3", w: 2, h: 3, sigma: 0.2, base: 0.1, param_seed: 0 },
];

/// Strongly coupled agents: statistical agreement per coordinate and 2%
/// in relative L2 norm.
const COUPLED: [Instance; 2] = [
    Instance { label: "2x2 coupled", w: 2, h: 2, sigma: 1.0, base: 0.3, param_seed: 1 },
    Instance { label: "2x3 coupled", w: 2, h: 3, sigma: 1.0, base: 0.3, param_seed: 1 },
];

fn criterion_1_2(stats: &[(&Instance, EstimatorStats)]) -> (Outcome, Outcome) {
    let unbiased = (|| {
        let mut parts = Vec::new();
        for (inst, st) in stats {
            let live: Vec<usize> = (0..st.exact.len()).filter(|&k| st.exact[k] != 0.0).collect();
            for k in 0..st.exact.len() {
                if st.exact[k] == 0.0 {
                    ensure(st.mean[k] == 0.0, || format!("{}: dead coordinate {k} has mean {}", inst.label, st.mean[k]))?;
                }
            }
            if inst.sigma < 0.5 {
                let worst = live
                    .iter()
                    .map(|&k| ((st.mean[k] - st.exact[k]) / st.exact[k]).abs())
                    .fold(0.0, f64::max);
                ensure(worst < 0.02, || format!("{}: worst per-coordinate error {worst:.4}", inst.label))?;
                parts.push(format!("{} worst {:.1e} over {}", inst.label, worst, live.len()));
            } else {
                let se = |k: usize| (st.var_cf[k] / SAMPLES as f64).sqrt();
                let worst_z = live
                    .iter()
                    .map(|&k| (st.mean[k] - st.exact[k]).abs() / se(k).max(1e-300))
                    .fold(0.0, f64::max);
                let num: f64 = live.iter().map(|&k| (st.mean[k] - st.exact[k]).powi(2)).sum();
                let den: f64 = live.iter().map(|&k| st.exact[k].powi(2)).sum();
                let rel = (num / den).sqrt();
                ensure(worst_z <= 5.0, || format!("{}: worst z {worst_z:.2}", inst.label))?;
                ensure(rel < 0.02, || format!("{}: relative L2 error {rel:.4}", inst.label))?;
                parts.push(format!("{} max|z| {:.2} relL2 {:.4}", inst.label, worst_z, rel));
            }
        }
        Ok(parts.join("; "))
    })();
    let variance = (|| {
        let mut parts = Vec::new();
        for (inst, st) in stats {
            let live: Vec<usize> = (0..st.exact.len()).filter(|&k| st.exact[k] != 0.0).collect();
            let better = live.iter().filter(|&&k| st.var_cf[k] <= st.var_reinforce[k]).count();
            let frac = better as f64 / live.len() as f64;
            ensure(frac >= 0.95, || format!("{}: only {better}/{} coordinates", inst.label, live.len()))?;
            parts.push(format!("{} {}/{}", inst.label, better, live.len()));
        }
        Ok(parts.join("; "))
    })();
    (unbiased, variance)
}

// ---------------------------------------------------------------------------

fn criterion_3() -> Outcome {
    let arch = Architecture::new(2, 4).unwrap();
    let mut worst_net: f64 = 0.0;
    for (k, (w, h)) in [(8usize, 8usize), (7, 5), (6, 9)].into_iter().enumerate() {
        let params = PolicyParams::init(arch, 100 + k as u64).unwrap();
        let c = gray(random_plane(w, h, 200 + k as u64));
        let z = sample_noise(w, h, 300 + k as u64).unwrap();
        let g = Plane::new(w, h, random_plane(w, h, 400 + k as u64).data().iter().map(|v| 2.0 * v - 1.0).collect()).unwrap();
        let an = backward(&params, &c, &z, &g).unwrap();
        let obj = |pp: &PolicyParams| -> f64 {
            forward(pp, &c, &z).unwrap().data().iter().zip(g.data()).map(|(a, b)| a * b).sum()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(500 + k as u64);
        for _ in 0..20 {
            let i = rng.random_range(0..params.len());
            let eps = 1e-4;
            let mut plus = params.clone();
            plus.data_mut()[i] += eps;
            let mut minus = params.clone();
            minus.data_mut()[i] -= eps;
            let fd = (obj(&plus) - obj(&minus)) / (2.0 * eps);
            let scale = fd.abs().max(an[i].abs());
            if scale > 1e-9 {
                worst_net = worst_net.max((fd - an[i]).abs() / scale);
            }
        }
    }
    ensure(worst_net < 1e-3, || format!("network worst relative error {worst_net:.2e}"))?;

    let mut worst_as: f64 = 0.0;
    for (k, (w, h)) in [(8usize, 8usize), (16, 16), (17, 13), (9, 12), (15, 15)].into_iter().enumerate() {
        let x = random_plane(w, h, 600 + k as u64);
        let (_, grad) = anisotropy_loss(&x);
        let mut rng = ChaCha8Rng::seed_from_u64(700 + k as u64);
        for _ in 0..10 {
            let i = rng.random_range(0..w * h);
            let eps = 1e-5;
            let mut plus = x.clone();
            plus.data_mut()[i] += eps;
            let mut minus = x.clone();
            minus.data_mut()[i] -= eps;
            let fd = (anisotropy_loss(&plus).0 - anisotropy_loss(&minus).0) / (2.0 * eps);
            let an = grad.data()[i];
            worst_as = worst_as.max((fd - an).abs() / fd.abs().max(an.abs()));
        }
    }
    ensure(worst_as < 1e-4, || format!("anisotropy-loss worst relative error {worst_as:.2e}"))?;
    Ok(format!("network {worst_net:.1e}, anisotropy loss {worst_as:.1e}"))
}

fn criterion_4() -> Outcome {
    let cfg = ErrorMetricConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for round in 0..5 {
        let c = gray(random_plane(16, 16, 40 + round));
        let h = BinaryImage::from_fn(16, 16, |_, _| rng.random_bool(0.5));
        let table = counterfactual_rewards(&h, &c, &cfg).unwrap();
        for _ in 0..100 {
            let i = rng.random_range(0..256usize);
            let mut flipped = h.clone();
            flipped.flip(i);
            let full = reward(&flipped, &c, &cfg).unwrap();
            let fast = if flipped.data()[i] == 1 { table.r1()[i] } else { table.r0()[i] };
            worst = worst.max((full - fast).abs());
        }
    }
    ensure(worst < 1e-9, || format!("worst deviation {worst:.2e}"))?;
    Ok(format!("500 flips, worst deviation {worst:.1e}"))
}

fn criterion_5() -> Outcome {
    for (w, h) in [(16, 16), (17, 13), (64, 32)] {
        let x = random_plane(w, h, (w * h) as u64);
        let energy: f64 = x.data().iter().map(|v| v * v).sum();
        let total = power_spectrum(&x).total();
        ensure((total - energy).abs() < 1e-8 * energy, || format!("Parseval {w}x{h}: {total} vs {energy}"))?;
    }
    let cb = BinaryImage::from_fn(16, 16, |x, y| (x + y) % 2 == 0);
    let s = power_spectrum(&cb.to_plane());
    let off = s.total() - s.at(8, 8) - s.at(0, 0);
    ensure(s.at(8, 8) > 0.0 && off.abs() < 1e-12, || format!("checkerboard off-Nyquist power {off}"))?;
    let p = rapsd(&power_spectrum(&constant_image(20, 20, 0.37).unwrap()));
    ensure(p.values.iter().all(|v| v.abs() < 1e-20), || "constant image has ring power".into())?;
    let hand = Spectrum::from_power(3, 1, vec![5.0, 1.0, 3.0]).unwrap();
    let a = anisotropy(&hand, &rapsd(&hand));
    ensure(a.linear[0] == Some(0.5), || format!("hand example {:?}", a.linear[0]))?;
    Ok("Parseval, checkerboard, constant, {1,3} -> 0.5".into())
}

fn criterion_6() -> Outcome {
    let hvs = HvsFilter::gaussian(2.0, 6).unwrap();
    let bayer = ThresholdMatrix::bayer(8).unwrap();
    let fs = DiffusionKernel::floyd_steinberg(true);
    let imgs = corpus();
    let mut sums = [0.0f64; 3];
    let mut per_image_ok = 0;
    for c in &imgs {
        let d = hvs_psnr(&dbs(c, &white_noise_halftone(c, 0), &hvs, 20).unwrap(), c, &hvs).unwrap();
        let e = hvs_psnr(&error_diffusion(c, &fs), c, &hvs).unwrap();
        let b = hvs_psnr(&ordered_dither(c, &bayer), c, &hvs).unwrap();
        sums[0] += d;
        sums[1] += e;
        sums[2] += b;
        if d > e && e > b {
            per_image_ok += 1;
        }
    }
    let n = imgs.len() as f64;
    let [d, e, b] = sums.map(|s| s / n);
    ensure(imgs.len() == CORPUS_LEN && imgs[0].width() == CORPUS_SIDE, || "corpus shape".into())?;
    ensure(d > e && e > b, || format!("mean HVS-PSNR dbs {d:.2} ed {e:.2} bayer {b:.2}"))?;
    ensure(per_image_ok == imgs.len(), || format!("ordering holds on {per_image_ok}/{} images", imgs.len()))?;
    Ok(format!("mean HVS-PSNR dbs {d:.2} > ed {e:.2} > bayer {b:.2} dB, all {per_image_ok} images"))
}

fn criterion_7() -> Outcome {
    let kernels = [
        DiffusionKernel::floyd_steinberg(true),
        DiffusionKernel::floyd_steinberg(false),
        DiffusionKernel::jarvis(true),
        DiffusionKernel::jarvis(false),
    ];
    let side = 32;
    let mask = generate_vac_mask(side, 0, &HvsFilter::gaussian(1.5, 4).unwrap()).unwrap();
    let (mut worst_ed, mut worst_vac): (f64, f64) = (0.0, 0.0);
    for k in 1..10 {
        let g = k as f64 / 10.0;
        let c = constant_image(128, 128, g).unwrap();
        for kern in &kernels {
            worst_ed = worst_ed.max((error_diffusion(&c, kern).on_fraction() - g).abs());
        }
        worst_vac = worst_vac.max((ordered_dither(&c, &mask).on_fraction() - g).abs());
    }
    ensure(worst_ed <= 0.01, || format!("error diffusion tone error {worst_ed}"))?;
    let tol = 1.0 / (side * side) as f64;
    ensure(worst_vac <= tol, || format!("VAC tone error {worst_vac} > {tol}"))?;
    Ok(format!("ed worst {worst_ed:.4}, vac worst {worst_vac:.5} (limit {tol:.5})"))
}

fn train_run(omega_a: f64) -> (Vec<f64>, Vec<f64>, PolicyParams, Duration) {
    let cfg = TrainConfig { omega_a, ..TrainConfig::default() };
    let mut t = Trainer::new(cfg).unwrap();
    let start = Instant::now();
    let (mut rewards, mut l_as) = (Vec::new(), Vec::new());
    t.run(|r| {
        rewards.push(r.mean_reward);
        l_as.push(r.l_as);
    })
    .unwrap();
    (rewards, l_as, t.params().clone(), start.elapsed())
}

fn avg(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn aniso_at(params: &PolicyParams, g: f64) -> f64 {
    let h = infer_halftone(params, &constant_image(64, 64, g).unwrap(), 1).unwrap();
    let s = power_spectrum(&h.to_plane());
    let p = rapsd(&s);
    anisotropy(&s, &p).mean_db(&p, 16).unwrap_or(f64::INFINITY)
}

fn criterion_8(run: &(Vec<f64>, Vec<f64>, PolicyParams, Duration)) -> Outcome {
    let (rewards, l_as, _, took) = run;
    ensure(rewards.len() == 200 && rewards.iter().chain(l_as).all(|v| v.is_finite()), || "bad series".into())?;
    let (r0, r1) = (avg(&rewards[..50]), avg(&rewards[150..]));
    let (a0, a1) = (avg(&l_as[..50]), avg(&l_as[150..]));
    ensure(r1 > r0, || format!("reward first50 {r0:.5} last50 {r1:.5}"))?;
    ensure(a1 < a0, || format!("L_AS first50 {a0:.6} last50 {a1:.6}"))?;
    ensure(*took < Duration::from_secs(600), || format!("took {took:?}"))?;
    Ok(format!(
        "reward {r0:.5} -> {r1:.5}, L_AS {a0:.6} -> {a1:.6}, {:.1}s",
        took.as_secs_f64()
    ))
}

fn criterion_9(with: &PolicyParams, without: &PolicyParams) -> Outcome {
    let (a, b) = (aniso_at(with, 0.6), aniso_at(without, 0.6));
    ensure(a <= b, || format!("with L_AS {a:.4} dB, without {b:.4} dB"))?;
    Ok(format!("g=0.6 mean anisotropy with L_AS {a:.4} dB <= without {b:.4} dB"))
}

// ---------------------------------------------------------------------------
// 10: CLI determinism through manifests

fn halftool(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_halftool"))
        .current_dir(dir)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!("`halftool {}` failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr).trim())
    })
}

fn criterion_10() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = tmp.path();
    let steps: &[&[&str]] = &[
        &["analyze", "--ramp", "96", "40", "--out", "ramp.pgm"],
        &["genmask", "--size", "16", "--seed", "3", "--out", "mask.txt", "--png", "mask.png"],
        &["halftone", "--method", "ordered", "--mask", "mask.txt", "ramp.pgm", "ordered.pbm"],
        &["halftone", "--method", "bayer", "ramp.pgm", "bayer.pbm"],
        &["halftone", "--method", "vac", "--size", "16", "--seed", "2", "ramp.pgm", "vac.png"],
        &["halftone", "--method", "ed", "--kernel", "jarvis", "ramp.pgm", "ed.pbm"],
        &["halftone", "--method", "dbs", "--sweeps", "4", "--seed", "5", "ramp.pgm", "dbs.pbm"],
        &["train", "--set", "train.iterations=3", "--set", "train.batch=2", "--out", "p.ckpt", "--log", "log.csv"],
        &["halftone", "--method", "marl", "--ckpt", "p.ckpt", "--seed", "9", "ramp.pgm", "marl.pbm"],
        &["analyze", "dbs.pbm", "--reference", "ramp.pgm", "--spectrum", "--out-dir", "an"],
        &["bench", "--count", "2", "--size", "32", "--repeats", "2", "--methods", "bayer,ed,dbs", "--out", "bench.csv"],
    ];
    for s in steps {
        halftool(d, s)?;
    }
    let manifests = [
        "ramp.pgm.manifest.json",
        "mask.txt.manifest.json",
        "ordered.pbm.manifest.json",
        "bayer.pbm.manifest.json",
        "vac.png.manifest.json",
        "ed.pbm.manifest.json",
        "dbs.pbm.manifest.json",
        "p.ckpt.manifest.json",
        "marl.pbm.manifest.json",
        "an/manifest.json",
        "bench.csv.manifest.json",
    ];
    for m in manifests {
        halftool(d, &["replay", "--verify", m])?;
    }
    Ok(format!("{} commands replayed byte-identical", manifests.len()))
}

fn report(n: usize, name: &str, outcome: &Outcome, took: Duration) -> bool {
    let mut err = std::io::stderr();
    let (tag, detail) = match outcome {
        Ok(s) => ("PASS", s),
        Err(s) => ("FAIL", s),
    };
    let _ = writeln!(err, "acceptance {n:>2} {tag} {name} ({:.1}s): {detail}", took.as_secs_f64());
    outcome.is_ok()
}

fn main() {
    let timed = |f: &dyn Fn() -> Outcome| {
        let t = Instant::now();
        let o = f();
        (o, t.elapsed())
    };

    let t_est = Instant::now();
    let stats: Vec<_> = PER_COORD.iter().chain(COUPLED.iter()).map(|i| (i, estimator_stats(i))).collect();
    let d_est = t_est.elapsed();
    let (o1, o2) = criterion_1_2(&stats);
    let o1 = o1.and_then(|s| {
        ensure(d_est < Duration::from_secs(60), || format!("took {d_est:?}"))?;
        Ok(s)
    });
    let mut ok = report(1, "policy-gradient unbiasedness", &o1, d_est);
    ok &= report(2, "variance reduction vs REINFORCE", &o2, d_est);

    let checks: [(usize, &str, fn() -> Outcome); 6] = [
        (3, "gradient correctness", criterion_3),
        (4, "counterfactual locality", criterion_4),
        (5, "spectral suite", criterion_5),
        (6, "blue-noise ordering", criterion_6),
        (7, "tone preservation", criterion_7),
        (10, "determinism", criterion_10),
    ];
    for (n, name, f) in checks {
        let (o, d) = timed(&f);
        ok &= report(n, name, &o, d);
    }

    let with = train_run(halftone_core::marl::DEFAULT_OMEGA_A);
    ok &= report(8, "training smoke test", &criterion_8(&with), with.3);
    let without = train_run(0.0);
    ok &= report(9, "anisotropy effect", &criterion_9(&with.2, &without.2), without.3);
    if !ok {
        std::process::exit(1);
    }
}
