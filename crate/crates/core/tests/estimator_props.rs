//! Estimator soundness and statistical behaviour against exact coefficients.

use mixvol::estimator::{
    check_decomposition, decompose, estimate_mixed_volume, EstimatorConfig, Instance,
};
use mixvol::generate::{all_alphas, random_polytopes};
use mixvol::geometry::{convex_hull, Polytope, RationalPoint};
use mixvol::minkpoly::interpolate_coefficients;
use mixvol::num::{int, to_f64};
use mixvol::sampling::{sample_shifts, RngStream, UniformSampler};
use mixvol::Rat;
use num_bigint::BigInt;
use proptest::prelude::*;

fn poly(xs: &[&[i64]]) -> Polytope {
    convex_hull(&xs.iter().map(|c| RationalPoint::from_ints(c)).collect::<Vec<_>>()).unwrap()
}

fn square_triangle() -> Vec<Polytope> {
    vec![poly(&[&[0, 0], &[1, 0], &[0, 1], &[1, 1]]), poly(&[&[0, 0], &[1, 0], &[0, 1]])]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn decompositions_are_sound(seed in any::<u64>(), n in 2usize..=3, k in 2usize..=3) {
        let polys = random_polytopes(n, k, 5, 2, &mut RngStream::new(seed, 0)).unwrap();
        let lambda: Vec<BigInt> = (0..k).map(|i| BigInt::from(1 + i as u64 * 3)).collect();
        let lambda_q: Vec<Rat> = lambda.iter().map(|l| Rat::from_integer(l.clone())).collect();
        let shifts = sample_shifts(k, n, 24, &mut RngStream::new(seed, 1)).unwrap();
        let sampler = UniformSampler::new(&polys, &lambda, 24).unwrap();
        let mut rng = RngStream::new(seed, 2);
        let mut mismatches = 0;
        let draws = 60;
        for _ in 0..draws {
            let z = sampler.draw_fine(&mut rng).unwrap().point;
            let dec = decompose(&z, &polys, &lambda_q, &shifts).unwrap();
            prop_assert!(check_decomposition(&dec, &z).is_ok());
            let total: RationalPoint = dec.parts.iter().fold(RationalPoint::zeros(n), |a, p| a.add(p));
            prop_assert_eq!(&total, &z);
            for ((part, p), lam) in dec.parts.iter().zip(&polys).zip(&lambda_q) {
                let back = part.scale(&(Rat::from_integer(1.into()) / lam));
                prop_assert!(mixvol::geometry::contains(p, &back).unwrap());
            }
            prop_assert!(dec.face_dims.iter().sum::<usize>() <= n);
            if dec.support_dims != dec.face_dims {
                mismatches += 1;
            }
        }
        // simplicial faces make support and face dimension agree for generic shifts
        prop_assert!(mismatches <= draws / 10);
    }

    #[test]
    fn hit_floor_below_true_hit_probability(seed in any::<u64>()) {
        let polys = random_polytopes(2, 2, 4, 2, &mut RngStream::new(seed, 0)).unwrap();
        let p = interpolate_coefficients(&polys).unwrap();
        for alpha in all_alphas(2, 2) {
            if p.coefficient(&alpha).unwrap() == int(0) {
                continue;
            }
            let inst = Instance::new(polys.clone(), alpha.clone(), 2).unwrap();
            let cfg = EstimatorConfig { samples: Some(20), ..Default::default() };
            let r = estimate_mixed_volume(&inst, 0.2, 0.1, seed, &cfg).unwrap();
            let lam: Vec<Rat> = r.lambda.iter().map(|l| Rat::from_integer(l.clone())).collect();
            let mono: Rat = lam.iter().zip(&alpha).map(|(l, &a)| mixvol::num::pow_rat(l, a)).product();
            let q = to_f64(&(mono * p.coefficient(&alpha).unwrap() / p.evaluate(&lam)));
            prop_assert!(r.hit_probability_floor.unwrap() <= q * (1.0 + 1e-9));
            prop_assert_eq!(r.v_at_lambda.clone().unwrap(), p.evaluate(&lam));
        }
    }
}

#[test]
fn mean_of_short_runs_is_unbiased() {
    let inst = Instance::new(square_triangle(), vec![1, 1], 1).unwrap();
    let cfg = EstimatorConfig { samples: Some(200), ..Default::default() };
    let runs = 50;
    let mean: f64 = (0..runs)
        .map(|s| estimate_mixed_volume(&inst, 0.1, 0.05, 1000 + s, &cfg).unwrap().estimate_coefficient_f64)
        .sum::<f64>()
        / runs as f64;
    assert!((mean - 2.0).abs() < 0.1, "mean {mean}");
}

#[test]
fn unit_scaling_still_estimates_two() {
    let inst = Instance::new(square_triangle(), vec![1, 1], 1).unwrap();
    let cfg = EstimatorConfig {
        samples: Some(2000),
        lambda: Some(vec![BigInt::from(1), BigInt::from(1)]),
        ..Default::default()
    };
    let r = estimate_mixed_volume(&inst, 0.1, 0.05, 8, &cfg).unwrap();
    assert!((r.estimate_coefficient_f64 - 2.0).abs() < 0.2, "{}", r.estimate_coefficient_f64);
    assert_eq!(r.v_at_lambda, Some(Rat::new(7.into(), 2.into())));
}
