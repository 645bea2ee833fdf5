//! Mixed-cell identities against interpolated coefficients.

use mixvol::generate::{all_alphas, random_polytopes};
use mixvol::minkpoly::interpolate_coefficients;
use mixvol::num::pow_rat;
use mixvol::sampling::{sample_shifts, RngStream};
use mixvol::subdivision::{alpha_cell_sum, enumerate_cells, signature_sums, verify_subdivision, DEFAULT_TUPLE_CAP};
use mixvol::{Error, Rat};
use num_bigint::BigInt;
use num_traits::Zero;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn cell_sums_match_coefficients(seed in any::<u64>(), n in 2usize..=3, k in 2usize..=3) {
        let polys = random_polytopes(n, k, 4, 2, &mut RngStream::new(seed, 0)).unwrap();
        let p = interpolate_coefficients(&polys).unwrap();
        let lambda: Vec<BigInt> = (0..k).map(|i| BigInt::from(2 + i as u64)).collect();
        let lq: Vec<Rat> = lambda.iter().map(|l| Rat::from_integer(l.clone())).collect();
        let mut reference = None;
        for draw in 0..3 {
            let shifts = sample_shifts(k, n, 20, &mut RngStream::new(seed, 10 + draw)).unwrap();
            let cells = match enumerate_cells(&polys, &lambda, &shifts, DEFAULT_TUPLE_CAP) {
                Err(Error::NonGenericShifts) => continue,
                other => other.unwrap(),
            };
            for alpha in all_alphas(n, k) {
                let mono: Rat = lq.iter().zip(&alpha).map(|(l, &a)| pow_rat(l, a)).product();
                prop_assert_eq!(alpha_cell_sum(&cells, &alpha), mono * p.coefficient(&alpha).unwrap());
            }
            for c in &cells {
                let product: Rat = c.face_volumes_squared.iter().product();
                prop_assert_eq!(&c.volume * &c.volume, &c.bracket_squared * product);
                prop_assert!(!c.volume.is_zero());
            }
            let sums = signature_sums(&cells);
            match &reference {
                None => reference = Some(sums),
                Some(r) => prop_assert_eq!(r, &sums),
            }
            if draw == 0 {
                let rec = verify_subdivision(&cells, &polys, &lambda, 200, &mut RngStream::new(seed, 3)).unwrap();
                prop_assert!(rec.pass, "{:?}", rec);
            }
        }
    }
}
