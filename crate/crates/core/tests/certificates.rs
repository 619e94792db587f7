mod common;

use common::{normal_mat, normal_vec};
use copyreg::kernel::eval_kernel;
use copyreg::numerics::{stable_softmax, sym_eig_extremes};
use copyreg::objective::{hessian, psd_weight_bound};
use copyreg::verify::certificate_suite;
use copyreg::{Dataset, DenseMatrix, DenseVector, Hyperparameters};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Certified {
    ds: Dataset,
    hp: Hyperparameters,
    probes: Vec<DenseVector>,
}

/// Random instance whose weights meet the PSD weight bound, with γ set to
/// the smallest of ℓ and ℓ₁ seen over a cloud of probe points in the R-ball.
fn certified(seed: u64) -> Certified {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = rng.random_range(2..=8);
    let n = rng.random_range((d + 2).max(5)..=40);
    let n1 = rng.random_range(1..n);
    let a = normal_mat(&mut rng, n, d, 1.0);
    let b = stable_softmax(&normal_vec(&mut rng, n, 1.0)).unwrap();
    let ds = Dataset::new(a, b, n1).unwrap();
    let gamma_c = rng.random_range(0.1..=0.5);
    let r = 4.0;
    let probes: Vec<DenseVector> = (0..20)
        .map(|_| {
            let v = normal_vec(&mut rng, d, 1.0);
            let radius = r * rng.random_range(0.0f64..1.0).powf(1.0 / d as f64);
            v.normalize() * radius
        })
        .collect();
    let floor = probes
        .iter()
        .map(|x| {
            let ev = eval_kernel(&ds, x).unwrap();
            ev.ell1.min(ev.ell)
        })
        .fold(f64::INFINITY, f64::min);
    let mut hp = Hyperparameters::new(
        gamma_c,
        DenseVector::from_element(n, 1.0),
        1.0,
        floor,
        r,
        0.01,
    )
    .unwrap();
    let theta = psd_weight_bound(&ds, &hp).unwrap();
    hp.w = DenseVector::from_element(n, theta.sqrt() * (1.0 + 1e-12));
    Certified { ds, hp, probes }
}

#[test]
fn certified_weights_give_strong_convexity() {
    let mut worst = f64::INFINITY;
    for seed in 0..100 {
        let c = certified(seed);
        for x in &c.probes {
            let ev = eval_kernel(&c.ds, x).unwrap();
            if ev.ell1 < c.hp.gamma || x.norm() > c.hp.r {
                continue;
            }
            let (lo, _) = sym_eig_extremes(&hessian(&c.ds, &c.hp, x).unwrap()).unwrap();
            worst = worst.min(lo);
        }
    }
    assert!(
        worst >= 1.0 - 1e-6,
        "smallest certified eigenvalue {worst:e}"
    );
}

#[test]
fn certificate_suite_on_zero_matrix_flags_rank_only() {
    let ds = Dataset::new(
        DenseMatrix::zeros(4, 2),
        DenseVector::from_element(4, 0.25),
        2,
    )
    .unwrap();
    let hp = Hyperparameters::uniform(0.2, 4, 1.0).unwrap();
    let report = certificate_suite(&ds, &hp, &DenseVector::zeros(2)).unwrap();
    let weight = report.get("weight_certificate").unwrap();
    assert!(!weight.pass);
    assert_eq!(weight.margin, f64::NEG_INFINITY);
    for name in [
        "ell_le_4",
        "fc_inner_range",
        "b_spectrum",
        "b_norm_le_11",
        "bc_spectrum",
        "a_norm_le_r",
    ] {
        assert!(report.get(name).unwrap().pass, "{name}\n{report}");
    }
}

#[test]
fn certificate_suite_passes_on_certified_instance() {
    // Rows scaled so ‖A‖ ≤ R, evaluated at the origin with γ below ℓ and ℓ₁.
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let a = normal_mat(&mut rng, 12, 3, 1.0);
    let a = &a * (2.0 / copyreg::numerics::spectral_norm(&a).unwrap());
    let b = stable_softmax(&normal_vec(&mut rng, 12, 1.0)).unwrap();
    let ds = Dataset::new(a, b, 4).unwrap();
    let x = DenseVector::zeros(3);
    let ev = eval_kernel(&ds, &x).unwrap();
    let gamma = 0.5 * ev.ell1.min(ev.ell);
    let mut hp = Hyperparameters::new(
        0.2,
        DenseVector::from_element(12, 1.0),
        1.0,
        gamma,
        4.0,
        0.01,
    )
    .unwrap();
    hp.w = DenseVector::from_element(12, psd_weight_bound(&ds, &hp).unwrap().sqrt() * 1.001);
    let report = certificate_suite(&ds, &hp, &x).unwrap();
    assert!(report.all_pass(), "{report}");
}

#[test]
fn unit_weights_report_measured_eigenvalue() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = normal_mat(&mut rng, 30, 4, 1.0);
    let b = stable_softmax(&normal_vec(&mut rng, 30, 1.0)).unwrap();
    let ds = Dataset::new(a, b, 10).unwrap();
    let hp = Hyperparameters::uniform(0.2, 30, 1.0).unwrap();
    let x = normal_vec(&mut rng, 4, 0.3);
    let report = certificate_suite(&ds, &hp, &x).unwrap();
    assert!(!report.get("weight_certificate").unwrap().pass);
    let (lo, _) = sym_eig_extremes(&hessian(&ds, &hp, &x).unwrap()).unwrap();
    let item = report.get("hessian_ge_l").unwrap();
    assert!((item.margin - (lo - (1.0 - 1e-6))).abs() < 1e-9);
    assert_eq!(item.pass, lo >= 1.0 - 1e-6);
}

#[test]
fn report_text_reparses() {
    let ds = Dataset::new(
        DenseMatrix::zeros(4, 2),
        DenseVector::from_element(4, 0.25),
        2,
    )
    .unwrap();
    let hp = Hyperparameters::uniform(0.2, 4, 1.0).unwrap();
    let report = certificate_suite(&ds, &hp, &DenseVector::zeros(2)).unwrap();
    let text = report.to_string();
    assert!(text
        .lines()
        .all(|l| l.starts_with("ITEM ") && l.contains(" margin=")));
    let back: copyreg::CertificateReport = text.parse().unwrap();
    assert_eq!(back.items.len(), report.items.len());
    for (p, q) in back.items.iter().zip(&report.items) {
        assert_eq!(p.name, q.name);
        assert_eq!(p.pass, q.pass);
        assert!(p.margin == q.margin || (p.margin - q.margin).abs() <= 1e-12 * q.margin.abs());
    }
}
