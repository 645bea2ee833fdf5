//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::path::PathBuf;
use std::sync::mpsc;
use std::time::{Duration, Instant};

use mixvol::capacity::{
    a_upper_bound, bound_report, capacity_minimize, capacity_ratio, constant_a, constant_a_tilde,
    search_box,
};
use mixvol::estimator::{decompose, estimate_mixed_volume, EstimatorConfig, Instance};
use mixvol::generate::{all_alphas, random_polytopes};
use mixvol::geometry::{self, convex_hull, minkowski_sum, Polytope, RationalPoint};
use mixvol::minkpoly::{evaluate_volume, interpolate_coefficients, MinkowskiPolynomial};
use mixvol::num::{int, pow_rat, rat, to_f64};
use mixvol::sampling::{sample_shifts, RngStream, UniformSampler};
use mixvol::subdivision::{alpha_cell_sum, enumerate_cells, signature_sums, DEFAULT_TUPLE_CAP};
use mixvol::{Error, Rat};
use mixvol_cli::{commands, InstanceFile};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn fixture(name: &str) -> InstanceFile {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name);
    InstanceFile::load(&path).expect("fixture loads")
}

fn poly(xs: &[&[i64]]) -> Polytope {
    convex_hull(&xs.iter().map(|c| RationalPoint::from_ints(c)).collect::<Vec<_>>()).unwrap()
}

fn square_triangle() -> Vec<Polytope> {
    vec![poly(&[&[0, 0], &[1, 0], &[0, 1], &[1, 1]]), poly(&[&[0, 0], &[1, 0], &[0, 1]])]
}

/// Twice the signed area of an integer polygon given in cyclic order.
fn shoelace2(pts: &[(i64, i64)]) -> i64 {
    (0..pts.len())
        .map(|i| {
            let (a, b) = (pts[i], pts[(i + 1) % pts.len()]);
            a.0 * b.1 - a.1 * b.0
        })
        .sum::<i64>()
        .abs()
}

fn c1_oracle_exactness() -> Outcome {
    let start = Instant::now();
    let r = commands::exact(&fixture("square-triangle.json"), Some(&[1, 1])).unwrap();
    let elapsed = start.elapsed();
    // polarization with hand-ordered polygons: P+Q is the pentagon below
    let sum = shoelace2(&[(0, 0), (2, 0), (2, 1), (1, 2), (0, 2)]);
    let (p, q) = (shoelace2(&[(0, 0), (1, 0), (1, 1), (0, 1)]), shoelace2(&[(0, 0), (1, 0), (0, 1)]));
    let oracle = rat(sum - p - q, 2);
    let got = |k: &str| r[k].as_str().unwrap_or("").to_string();
    let pass = got("coefficient") == oracle.to_string()
        && got("derivative_form") == "2"
        && got("standard_mixed_volume") == "1"
        && elapsed < Duration::from_secs(1);
    outcome(
        pass,
        format!(
            "c = {}, derivative = {}, standard = {}, oracle = {oracle}, {:.3} s",
            got("coefficient"),
            got("derivative_form"),
            got("standard_mixed_volume"),
            elapsed.as_secs_f64()
        ),
    )
}

struct Desk {
    polys: Vec<Polytope>,
    poly: MinkowskiPolynomial,
    n: usize,
    k: usize,
    l: u32,
    m0: usize,
}

fn desk_instances() -> Vec<Desk> {
    (0..20u64)
        .map(|i| {
            let n = 2 + (i % 2) as usize;
            let k = 2 + (i / 2 % 2) as usize;
            let m0 = 4 + (i % 3) as usize;
            let l = 1 + (i % 3) as u32;
            let polys = random_polytopes(n, k, m0, l, &mut RngStream::new(1000 + i, 0)).unwrap();
            let poly = interpolate_coefficients(&polys).unwrap();
            Desk { polys, poly, n, k, l, m0 }
        })
        .collect()
}

fn c2_schneider_identity(desk: &[Desk]) -> Outcome {
    let start = Instant::now();
    let (mut checks, mut failures, mut resamples) = (0usize, Vec::new(), 0usize);
    for (idx, d) in desk.iter().enumerate() {
        let mut rng = RngStream::new(2000 + idx as u64, 0);
        let lambda: Vec<BigInt> = (0..d.k).map(|_| BigInt::from(rng.gen_range(1..=3u32))).collect();
        let lq: Vec<Rat> = lambda.iter().map(|l| Rat::from_integer(l.clone())).collect();
        let sum_vol = geometry::volume(&minkowski_sum(&d.polys, &lq).unwrap()).unwrap();
        let mut stream = 1u64;
        let mut draws = 0;
        let mut first_sums = None;
        while draws < 3 {
            let shifts = sample_shifts(d.k, d.n, 32, &mut RngStream::new(3000 + idx as u64, stream)).unwrap();
            stream += 1;
            let cells = match enumerate_cells(&d.polys, &lambda, &shifts, DEFAULT_TUPLE_CAP) {
                Err(Error::NonGenericShifts) => {
                    resamples += 1;
                    continue;
                }
                other => other.unwrap(),
            };
            draws += 1;
            let total: Rat = cells.iter().map(|c| &c.volume).sum();
            checks += 1;
            if total != sum_vol {
                failures.push(format!("instance {idx}: cell volumes {total} vs {sum_vol}"));
            }
            for alpha in all_alphas(d.n, d.k) {
                let mono: Rat = lq.iter().zip(&alpha).map(|(l, &a)| pow_rat(l, a)).product();
                let want = mono * d.poly.coefficient(&alpha).unwrap();
                let got = alpha_cell_sum(&cells, &alpha);
                checks += 1;
                if got != want {
                    failures.push(format!("instance {idx} α {alpha:?}: {got} vs {want}"));
                }
            }
            let sums = signature_sums(&cells);
            match &first_sums {
                None => first_sums = Some(sums),
                Some(s) if *s != sums => failures.push(format!("instance {idx}: sums depend on shifts")),
                _ => {}
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = failures.is_empty() && elapsed < Duration::from_secs(300);
    outcome(
        pass,
        format!(
            "{} instances, {checks} exact checks, {} failures, {resamples} shift resamples, {:.1} s{}",
            desk.len(),
            failures.len(),
            elapsed.as_secs_f64(),
            failures.first().map(|f| format!("; first: {f}")).unwrap_or_default()
        ),
    )
}

fn c3_estimator_accuracy() -> Outcome {
    let start = Instant::now();
    let inst = Instance::new(square_triangle(), vec![1, 1], 1).unwrap();
    let cfg = EstimatorConfig::default();
    let mut inside = 0;
    let mut values = Vec::new();
    for seed in 0..40u64 {
        let r = estimate_mixed_volume(&inst, 0.1, 0.05, seed, &cfg).unwrap();
        let e = r.estimate_coefficient_f64;
        if (1.8..=2.2).contains(&e) {
            inside += 1;
        }
        values.push(e);
    }
    let elapsed = start.elapsed();
    let (lo, hi) = values.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
    outcome(
        inside >= 36 && elapsed < Duration::from_secs(600),
        format!("{inside}/40 in [1.8, 2.2], range [{lo:.4}, {hi:.4}], {:.1} s", elapsed.as_secs_f64()),
    )
}

fn c4_capacity_value() -> Outcome {
    let polys = square_triangle();
    let p = interpolate_coefficients(&polys).unwrap();
    let cap = capacity_minimize(&p, &[1, 1], 1e-9, search_box(2, 1, 4)).unwrap();
    let target = 2.0 + 2f64.sqrt();
    let err = (cap.cap_value - target).abs();
    let mut rng = RngStream::new(4, 0);
    let mut ratio_fail = 0;
    for _ in 0..100 {
        let lambda: Vec<Rat> =
            (0..2).map(|_| rat(rng.gen_range(1..=50), rng.gen_range(1..=20))).collect();
        let t = rat(rng.gen_range(1..=30), rng.gen_range(1..=7));
        let scaled: Vec<Rat> = lambda.iter().map(|l| l * &t).collect();
        // both sides from exact volumes of the scaled sums, and from the polynomial
        let direct = |lam: &[Rat]| evaluate_volume(&polys, lam).unwrap() / (&lam[0] * &lam[1]);
        if direct(&scaled) != direct(&lambda)
            || capacity_ratio(&p, &scaled, &[1, 1]) != direct(&lambda)
        {
            ratio_fail += 1;
        }
    }
    outcome(
        err <= 1e-6 && ratio_fail == 0,
        format!("Cap = {:.9} (|Δ| = {err:.2e}), ratio invariance failures {ratio_fail}/100", cap.cap_value),
    )
}

fn c5_coefficient_bounds(desk: &[Desk]) -> Outcome {
    let (mut checked, mut gurvits, mut violations) = (0, 0, Vec::new());
    for (idx, d) in desk.iter().enumerate() {
        let radius = search_box(d.n, d.l, d.m0);
        for alpha in all_alphas(d.n, d.k) {
            let cap = capacity_minimize(&d.poly, &alpha, 1e-6, radius).unwrap();
            let c = to_f64(&d.poly.coefficient(&alpha).unwrap());
            let a = to_f64(&constant_a(&d.poly.degrees_d(&alpha).unwrap(), &alpha).unwrap());
            let cap_low = cap.cap_value * (-cap.certified_gap).exp();
            checked += 1;
            if !(cap_low / a <= c && c <= cap.cap_value) {
                violations.push(format!("instance {idx} α {alpha:?}: {}/{a} vs {c} vs {}", cap_low, cap.cap_value));
            }
            if d.k == d.n && alpha.iter().all(|&x| x == 1) {
                gurvits += 1;
                let nf: f64 = (1..=d.n).map(|x| x as f64).product();
                let low = nf / (d.n as f64).powi(d.n as i32) * cap_low;
                // α! = 1 here, so the derivative form equals c
                if !(low <= c && c <= cap.cap_value) {
                    violations.push(format!("instance {idx}: Gurvits {low} ≤ {c} ≤ {}", cap.cap_value));
                }
            }
            if let Err(e) = bound_report(&d.poly, &alpha, &cap) {
                violations.push(format!("instance {idx} α {alpha:?}: {e}"));
            }
        }
    }
    outcome(
        violations.is_empty(),
        format!(
            "{checked} (instance, α) pairs, {gurvits} Gurvits sandwiches, {} violations{}",
            violations.len(),
            violations.first().map(|v| format!("; first: {v}")).unwrap_or_default()
        ),
    )
}

/// `(a+1)^{a+1}/a^a` with `0 ↦ 1`, from integer powers.
fn pair(a: u32) -> Rat {
    if a == 0 {
        return Rat::one();
    }
    Rat::new(BigInt::from(a + 1).pow(a + 1), BigInt::from(a).pow(a))
}

fn c6_constant_ledger(desk: &[Desk]) -> Outcome {
    let st = interpolate_coefficients(&square_triangle()).unwrap();
    let d = st.degrees_d(&[1, 1]).unwrap();
    let a = constant_a(&d, &[1, 1]).unwrap();
    let at = constant_a_tilde(&[1, 1]);
    let mut fails = Vec::new();
    if a != int(4) || at != int(4) {
        fails.push(format!("square/triangle A = {a}, Ã = {at}"));
    }
    let mut checked = 0;
    for (idx, inst) in desk.iter().enumerate() {
        for alpha in all_alphas(inst.n, inst.k) {
            let d = inst.poly.degrees_d(&alpha).unwrap();
            let a = constant_a(&d, &alpha).unwrap();
            let at = constant_a_tilde(&alpha);
            let oracle_a: Rat = d.iter().zip(&alpha).skip(1).map(|(&di, &ai)| pair(ai).min(pair(di - ai))).product();
            let oracle_at: Rat = alpha.iter().skip(1).map(|&ai| pair(ai)).product();
            let upper = a_upper_bound(inst.n, inst.k);
            checked += 1;
            if a != oracle_a || at != oracle_at || a > at || to_f64(&at) > upper {
                fails.push(format!("instance {idx} α {alpha:?}: A = {a}, Ã = {at}, bound {upper}"));
            }
        }
    }
    outcome(
        fails.is_empty(),
        format!("A = {a}, Ã = {at}; chain checked on {checked} pairs, {} failures", fails.len()),
    )
}

fn c7_decomposition_soundness() -> Outcome {
    let mut instances: Vec<(Vec<Polytope>, Vec<BigInt>)> =
        vec![(square_triangle(), vec![BigInt::from(1_048_576), BigInt::from(1_482_910)])];
    for (i, &(n, k)) in [(2, 2), (2, 3), (3, 2), (3, 3)].iter().enumerate() {
        let polys = random_polytopes(n, k, 5, 2, &mut RngStream::new(7000 + i as u64, 0)).unwrap();
        let lambda = (0..k).map(|j| BigInt::from(3 + 2 * j as u64)).collect();
        instances.push((polys, lambda));
    }
    let per = 2000;
    let (mut total, mut outside, mut mismatch, mut bad) = (0usize, 0usize, 0usize, Vec::new());
    for (idx, (polys, lambda)) in instances.iter().enumerate() {
        let n = polys[0].ambient_dim();
        let lq: Vec<Rat> = lambda.iter().map(|l| Rat::from_integer(l.clone())).collect();
        let sampler = UniformSampler::new(polys, lambda, 32).unwrap();
        let shifts = sample_shifts(polys.len(), n, 32, &mut RngStream::new(8000 + idx as u64, 0)).unwrap();
        let mut rng = RngStream::new(9000 + idx as u64, 0);
        for _ in 0..per {
            let z = sampler.draw(&mut rng).unwrap().point;
            let dec = match decompose(&z, polys, &lq, &shifts) {
                Err(Error::NotInMinkowskiSum) => {
                    outside += 1;
                    continue;
                }
                other => other.unwrap(),
            };
            total += 1;
            let sum = dec.parts.iter().fold(RationalPoint::zeros(n), |a, p| a.add(p));
            let inside = dec.parts.iter().zip(polys).zip(&lq).all(|((part, p), lam)| {
                p.h_rep().unwrap().contains(&part.scale(&(Rat::one() / lam)))
            });
            if sum != z || !inside || dec.face_dims.iter().sum::<usize>() > n {
                bad.push(format!("instance {idx}: z = {z:?}"));
            }
            if dec.support_dims != dec.face_dims {
                mismatch += 1;
            }
        }
    }
    let rate = mismatch as f64 / total.max(1) as f64;
    outcome(
        total >= 10_000 && bad.is_empty() && rate < 0.01,
        format!(
            "{total} decompositions ({outside} grid-rounded points outside), {} unsound, disagreement {:.3}%",
            bad.len(),
            100.0 * rate
        ),
    )
}

fn c8_sampler_statistics() -> Outcome {
    let sampler = UniformSampler::new(&square_triangle(), &[BigInt::one(), BigInt::one()], 16).unwrap();
    let mut rng = RngStream::new(8, 0);
    let trials = 100_000;
    let hits = (0..trials).filter(|_| sampler.trial(&mut rng).unwrap().1).count();
    let p = 7.0 / 8.0;
    let sigma = (p * (1.0 - p) / trials as f64).sqrt();
    let rate = hits as f64 / trials as f64;
    let z = (rate - p) / sigma;

    let square = [poly(&[&[0, 0], &[1, 0], &[0, 1], &[1, 1]])];
    let unit = UniformSampler::new(&square, &[BigInt::one()], 16).unwrap();
    let mut rng = RngStream::new(9, 0);
    let draws = 100_000;
    let mut bins = [0f64; 4];
    for _ in 0..draws {
        let pt = unit.draw_fine(&mut rng).unwrap().point;
        bins[(pt[0] >= rat(1, 2)) as usize * 2 + (pt[1] >= rat(1, 2)) as usize] += 1.0;
    }
    let e = draws as f64 / 4.0;
    let chi2: f64 = bins.iter().map(|o| (o - e).powi(2) / e).sum();
    // 3 degrees of freedom, upper 10⁻³ quantile
    let critical = 16.266;
    outcome(
        z.abs() <= 3.0 && chi2 < critical,
        format!("acceptance {rate:.5} (z = {z:+.2}), χ² = {chi2:.3} < {critical}"),
    )
}

fn c9_degenerate_handling() -> Outcome {
    let segs = vec![poly(&[&[0, 0], &[1, 0]]), poly(&[&[0, 0], &[0, 1]])];
    let r = estimate_mixed_volume(&Instance::new(segs, vec![1, 1], 1).unwrap(), 0.1, 0.05, 9, &EstimatorConfig::default())
        .unwrap();
    let seg_ok = r.estimate_coefficient == int(1) && r.p_hat == int(1);

    let (tx, rx) = mpsc::channel();
    std::thread::spawn(move || {
        let flat = vec![poly(&[&[0, 0], &[1, 0]]), poly(&[&[0, 0], &[2, 0]])];
        let inst = Instance::new(flat, vec![1, 1], 2).unwrap();
        let _ = tx.send(estimate_mixed_volume(&inst, 0.1, 0.05, 9, &EstimatorConfig::default()));
    });
    let flat_ok = match rx.recv_timeout(Duration::from_secs(60)) {
        Ok(Ok(r)) => r.estimate_coefficient.is_zero() && !r.warnings.is_empty(),
        _ => false,
    };
    outcome(
        seg_ok && flat_ok,
        format!(
            "segments estimate {} with p̂ = {} over N = {}; flat sum → 0 with warning: {flat_ok}",
            r.estimate_coefficient, r.p_hat, r.n_samples
        ),
    )
}

fn main() {
    let start = Instant::now();
    let desk = desk_instances();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("C1 oracle exactness", Box::new(c1_oracle_exactness)),
        ("C2 cell-sum identity", Box::new(|| c2_schneider_identity(&desk))),
        ("C3 estimator accuracy", Box::new(c3_estimator_accuracy)),
        ("C4 capacity value", Box::new(c4_capacity_value)),
        ("C5 coefficient bounds", Box::new(|| c5_coefficient_bounds(&desk))),
        ("C6 constant ledger", Box::new(|| c6_constant_ledger(&desk))),
        ("C7 decomposition soundness", Box::new(c7_decomposition_soundness)),
        ("C8 sampler statistics", Box::new(c8_sampler_statistics)),
        ("C9 degenerate handling", Box::new(c9_degenerate_handling)),
    ];
    let mut failed = 0;
    for (name, run) in &criteria {
        let t = Instant::now();
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} {name}: {} [{:.1} s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {}/{} criteria passed in {:.1} s",
        criteria.len() - failed,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
