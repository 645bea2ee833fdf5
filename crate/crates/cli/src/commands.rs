//! One driver per subcommand. Each returns a JSON report; `main` only parses
//! flags and prints.

use std::path::PathBuf;
use std::time::Instant;

use mixvol::capacity::{self, bound_report, capacity_minimize, search_box};
use mixvol::estimator::{estimate_mixed_volume, EstimatorConfig, VolumeMode};
use mixvol::generate::{all_alphas, random_polytopes};
use mixvol::minkpoly::{convert_normalization, interpolate_coefficients};
use mixvol::num;
use mixvol::sampling::{sample_shifts, RngStream, RNG_ALGORITHM};
use mixvol::subdivision::{
    alpha_cell_sum, enumerate_cells, export_svg, signature_sums, verify_subdivision, AUDIT_POINTS,
};
use mixvol::{Error, Rat};
use num_bigint::BigInt;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::error::{CliError, CliResult};
use crate::instance::InstanceFile;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Shift draws tried by `subdivide` before giving up: the first plus five resamples.
pub const SHIFT_ATTEMPTS: u64 = 6;

/// Stream id of the subdivision audit points, clear of the shift streams.
const AUDIT_STREAM: u64 = 1 << 40;

fn to_object<T: Serialize>(x: &T) -> Map<String, Value> {
    match serde_json::to_value(x).expect("report serializes") {
        Value::Object(m) => m,
        other => Map::from_iter([("value".to_string(), other)]),
    }
}

/// Wrap a command body with tool metadata, the instance summary, the config
/// echo and wall-clock time.
fn envelope(
    command: &str,
    file: Option<&InstanceFile>,
    config: Value,
    seed: Option<u64>,
    mut body: Map<String, Value>,
    start: Instant,
) -> Value {
    let mut out = Map::new();
    out.insert("tool".into(), json!("mixvol"));
    out.insert("version".into(), json!(VERSION));
    out.insert("command".into(), json!(command));
    if let Some(f) = file {
        out.insert(
            "instance".into(),
            json!({ "n": f.n, "L": f.l, "k": f.k(), "names": f.names() }),
        );
    }
    if let Some(s) = seed {
        out.insert("seed".into(), json!(s));
        out.insert("rng".into(), json!(RNG_ALGORITHM));
    }
    let mut timings = match body.remove("timings") {
        Some(Value::Object(t)) => t,
        _ => Map::new(),
    };
    timings.insert("wall_ms".into(), json!(start.elapsed().as_secs_f64() * 1e3));
    body.remove("config");
    out.insert("config".into(), config);
    out.extend(body);
    out.insert("timings".into(), Value::Object(timings));
    Value::Object(out)
}

fn rat_str(x: &Rat) -> String {
    x.to_string()
}

#[derive(Clone, Debug, Serialize)]
pub struct EstimateArgs {
    pub alpha: Option<Vec<u32>>,
    pub eps: f64,
    pub delta: f64,
    pub seed: u64,
    pub mode: VolumeMode,
    pub d2: u32,
    pub scale_bits: u32,
    pub samples: Option<u64>,
    pub threads: Option<usize>,
    #[serde(skip)]
    pub lambda: Option<Vec<BigInt>>,
}

impl Default for EstimateArgs {
    fn default() -> Self {
        let cfg = EstimatorConfig::default();
        EstimateArgs {
            alpha: None,
            eps: 0.1,
            delta: 0.05,
            seed: 0,
            mode: cfg.mode,
            d2: cfg.d2,
            scale_bits: cfg.scale_bits,
            samples: None,
            threads: None,
            lambda: None,
        }
    }
}

pub fn estimate(file: &InstanceFile, args: &EstimateArgs) -> CliResult<Value> {
    let start = Instant::now();
    let alpha = file.resolve_alpha(args.alpha.as_deref())?;
    let inst = file.instance(alpha.clone())?;
    let cfg = EstimatorConfig {
        mode: args.mode,
        d2: args.d2,
        scale_bits: args.scale_bits,
        samples: args.samples,
        lambda: args.lambda.clone(),
        threads: args.threads,
    };
    let report = estimate_mixed_volume(&inst, args.eps, args.delta, args.seed, &cfg)?;
    let mut config = to_object(args);
    config.insert("alpha".into(), json!(alpha));
    config.insert(
        "lambda".into(),
        json!(args.lambda.as_ref().map(|l| l.iter().map(|x| x.to_string()).collect::<Vec<_>>())),
    );
    Ok(envelope("estimate", Some(file), Value::Object(config), Some(args.seed), to_object(&report), start))
}

pub fn exact(file: &InstanceFile, alpha: Option<&[u32]>) -> CliResult<Value> {
    let start = Instant::now();
    let alphas = match alpha.or(file.alpha.as_deref()) {
        Some(a) => {
            file.check_alpha(a)?;
            vec![a.to_vec()]
        }
        None => all_alphas(file.n, file.k()),
    };
    let p = interpolate_coefficients(&file.polytopes()?)?;
    let mut rows = Vec::with_capacity(alphas.len());
    for a in &alphas {
        let c = p.coefficient(a)?;
        let mut row = to_object(&convert_normalization(&c, a));
        row.insert("alpha".into(), json!(a));
        row.insert("coefficient_f64".into(), json!(num::to_f64(&c)));
        rows.push(Value::Object(row));
    }
    let mut body = Map::new();
    if alphas.len() == 1 {
        if let Value::Object(m) = rows.remove(0) {
            body.extend(m);
        }
    } else {
        body.insert("normalizations".into(), Value::Array(rows));
    }
    body.insert("volume_at_ones".into(), json!(rat_str(&p.total())));
    body.insert("coefficients".into(), serde_json::to_value(p.coefficient_table()).unwrap());
    let config = json!({ "alpha": alpha });
    Ok(envelope("exact", Some(file), config, None, body, start))
}

/// Solve for the capacity of the interpolated polynomial at `alpha`.
fn capacity_of(
    file: &InstanceFile,
    alpha: &[u32],
    tol: f64,
) -> CliResult<(mixvol::minkpoly::MinkowskiPolynomial, capacity::CapacityResult)> {
    let polys = file.polytopes()?;
    let m0 = polys.iter().map(|p| p.vertices().len()).max().unwrap_or(1);
    let p = interpolate_coefficients(&polys)?;
    let cap = capacity_minimize(&p, alpha, tol, search_box(file.n, file.l, m0))?;
    Ok((p, cap))
}

pub fn capacity(file: &InstanceFile, alpha: Option<&[u32]>, tol: f64) -> CliResult<Value> {
    let start = Instant::now();
    let alpha = file.resolve_alpha(alpha)?;
    let (p, cap) = capacity_of(file, &alpha, tol)?;
    let mut body = to_object(&cap);
    body.insert("alpha".into(), json!(alpha));
    body.insert("coefficient".into(), json!(rat_str(&p.coefficient(&alpha)?)));
    let config = json!({ "alpha": alpha, "tol": tol });
    Ok(envelope("capacity", Some(file), config, None, body, start))
}

pub fn bounds(file: &InstanceFile, alpha: Option<&[u32]>, tol: f64) -> CliResult<Value> {
    let start = Instant::now();
    let alpha = file.resolve_alpha(alpha)?;
    let (p, cap) = capacity_of(file, &alpha, tol)?;
    let report = bound_report(&p, &alpha, &cap)?;
    let mut body = to_object(&report);
    body.insert("alpha".into(), json!(alpha));
    body.insert("capacity".into(), serde_json::to_value(&cap).unwrap());
    let config = json!({ "alpha": alpha, "tol": tol });
    Ok(envelope("bounds", Some(file), config, None, body, start))
}

#[derive(Clone, Debug)]
pub struct SubdivideArgs {
    pub lambda: Option<Vec<BigInt>>,
    pub seed: u64,
    pub d2: u32,
    pub svg: Option<PathBuf>,
    pub tuple_cap: u128,
    pub audit_points: usize,
}

impl Default for SubdivideArgs {
    fn default() -> Self {
        SubdivideArgs {
            lambda: None,
            seed: 0,
            d2: 32,
            svg: None,
            tuple_cap: mixvol::subdivision::DEFAULT_TUPLE_CAP,
            audit_points: AUDIT_POINTS,
        }
    }
}

pub fn subdivide(file: &InstanceFile, args: &SubdivideArgs) -> CliResult<Value> {
    let start = Instant::now();
    if args.svg.is_some() && file.n != 2 {
        return Err(Error::InvalidInput(format!("SVG export needs n = 2, got n = {}", file.n)).into());
    }
    let polys = file.polytopes()?;
    let k = file.k();
    let lambda = args.lambda.clone().unwrap_or_else(|| vec![BigInt::from(1); k]);
    if lambda.len() != k {
        return Err(CliError::Usage(format!("lambda has {} entries for {k} polytopes", lambda.len())));
    }
    let mut found = None;
    for attempt in 0..SHIFT_ATTEMPTS {
        let shifts = sample_shifts(k, file.n, args.d2, &mut RngStream::new(args.seed, attempt))?;
        match enumerate_cells(&polys, &lambda, &shifts, args.tuple_cap) {
            Err(Error::NonGenericShifts) => continue,
            other => {
                found = Some((attempt + 1, shifts, other?));
                break;
            }
        }
    }
    let (attempts, shifts, cells) = found.ok_or(Error::NonGenericShifts)?;
    let verification = verify_subdivision(
        &cells,
        &polys,
        &lambda,
        args.audit_points,
        &mut RngStream::new(args.seed, AUDIT_STREAM),
    )?;

    let p = interpolate_coefficients(&polys)?;
    let lq: Vec<Rat> = lambda.iter().map(|l| Rat::from_integer(l.clone())).collect();
    let mut identity = Vec::new();
    let mut identity_pass = true;
    for a in all_alphas(file.n, k) {
        let cell_sum = alpha_cell_sum(&cells, &a);
        let mono: Rat = lq.iter().zip(&a).map(|(l, &e)| num::pow_rat(l, e)).product();
        let target = mono * p.coefficient(&a)?;
        identity_pass &= cell_sum == target;
        identity.push(json!({
            "alpha": a,
            "cell_sum": rat_str(&cell_sum),
            "lambda_alpha_coefficient": rat_str(&target),
            "equal": cell_sum == target,
        }));
    }
    if !identity_pass {
        return Err(Error::Inconsistency("cell sums disagree with interpolated coefficients".into()).into());
    }
    if let Some(path) = &args.svg {
        export_svg(&cells, &file.names(), path)?;
    }
    let sums: Vec<Value> = signature_sums(&cells)
        .iter()
        .map(|(sig, v)| json!({ "signature": sig, "volume": rat_str(v) }))
        .collect();

    let mut body = Map::new();
    body.insert("lambda".into(), json!(lambda.iter().map(|l| l.to_string()).collect::<Vec<_>>()));
    body.insert("shift_attempts".into(), json!(attempts));
    body.insert("shifts".into(), serde_json::to_value(&shifts).unwrap());
    body.insert("cell_count".into(), json!(cells.len()));
    body.insert("cells".into(), serde_json::to_value(&cells).unwrap());
    body.insert("signature_sums".into(), Value::Array(sums));
    body.insert("identity".into(), Value::Array(identity));
    body.insert("verification".into(), serde_json::to_value(&verification).unwrap());
    body.insert("svg".into(), json!(args.svg.as_ref().map(|p| p.display().to_string())));
    let config = json!({
        "lambda": lambda.iter().map(|l| l.to_string()).collect::<Vec<_>>(),
        "d2": args.d2,
        "tuple_cap": args.tuple_cap.to_string(),
        "audit_points": args.audit_points,
        "svg": args.svg.as_ref().map(|p| p.display().to_string()),
    });
    Ok(envelope("subdivide", Some(file), config, Some(args.seed), body, start))
}

/// A random full-dimensional instance, reproducible from the seed.
pub fn gen(n: usize, k: usize, m0: usize, l: u32, seed: u64) -> CliResult<InstanceFile> {
    if l > crate::instance::MAX_L {
        return Err(CliError::Usage(format!("L = {l} exceeds {}", crate::instance::MAX_L)));
    }
    let polys = random_polytopes(n, k, m0, l, &mut RngStream::new(seed, 0))?;
    InstanceFile::from_polytopes(n, l, &polys)
}
