//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines always reach stdout.

use std::cmp::Ordering;
use std::process::Command;
use std::time::Instant;

use rug::ops::Pow;
use rug::{Float, Integer, Rational};

use powmod::analysis::{self, synthetic, RowStatus};
use powmod::cantor::{BranchPolicy, Certificate, Construction, ConstructionConfig};
use powmod::precision::{FracPart, RInterval};
use powmod::sequences::{self, Family, FillPolicy, SequenceSpec, Target};

type Outcome = Result<String, String>;
type Check = (&'static str, fn() -> Outcome);

fn q(n: i64, d: i64) -> Rational {
    Rational::from((n, d))
}

fn squares_spec(count: usize, target: Target) -> SequenceSpec {
    SequenceSpec::new(Family::Squares, target, count)
}

fn config(lambda: Rational, delta: Rational, eta: Rational, depth: usize) -> ConstructionConfig {
    ConstructionConfig::new(lambda, delta, eta, depth)
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// λ=3, δ=1, η=1/2, q_n = n², r_n = 0, to n = 20.
fn base_certificate(base_bits: Option<u32>) -> Result<Certificate, String> {
    let mut cfg = config(q(3, 1), q(1, 1), q(1, 2), 20);
    cfg.base_bits = base_bits;
    powmod::cantor::construct(&cfg, &squares_spec(21, Target::Zero)).map_err(err)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let cert = base_certificate(None)?;
    let elapsed = start.elapsed().as_secs_f64();
    if cert.precision_bits() > 4096 {
        return Err(format!("needed {} bits", cert.precision_bits()));
    }
    // thresholds written out independently of the schedule code
    let qs: Vec<Rational> = (1..=20).map(|n| q(n * n, 1)).collect();
    let rs = vec![Rational::new(); 20];
    let th: Vec<Rational> = (1..=20).map(|n| q(1, 2 * (2 * n + 1))).collect();
    let report = analysis::verify(&cert.alpha, &qs, &rs, Some(&th), cert.start_level..=20, 8).map_err(err)?;
    if let Some(row) = report.first_failure() {
        return Err(format!("‖α^(n²)‖ bound fails at n = {}", row.n));
    }
    if report.rows.iter().any(|r| r.status != RowStatus::Pass) {
        return Err("unchecked rows".into());
    }
    Ok(format!(
        "N = {}, {} levels certified, {} bits, {elapsed:.1}s",
        cert.start_level,
        report.rows.len(),
        cert.precision_bits()
    ))
}

fn criterion_2() -> Outcome {
    let cfg = config(q(3, 1), q(1, 1), q(1, 2), 20);
    let target = q(3, 10);
    let cert = powmod::cantor::construct(&cfg, &squares_spec(21, Target::Const(target.clone()))).map_err(err)?;
    let qs: Vec<Rational> = (1..=20).map(|n| q(n * n, 1)).collect();
    let rs = vec![target.clone(); 20];
    let report = analysis::verify(&cert.alpha, &qs, &rs, None, cert.start_level..=20, 8).map_err(err)?;
    let prec = cert.precision_bits() + 64;
    let t = RInterval::from_rational(&target, prec);
    for (row, level) in report.rows.iter().zip(&cert.levels) {
        let FracPart::Value(frac) = &row.frac else {
            return Err(format!("fractional part undecided at n = {}", row.n));
        };
        let diff = frac.sub(&t, prec);
        let below = diff.hi().cmp_rational(&level.eps) == Ordering::Less && diff.lo().cmp_rational(&Rational::from(-&level.eps)) == Ordering::Greater;
        if !below {
            return Err(format!("|{{α^(n²)}} − 0.3| ≥ ε_n at n = {}", row.n));
        }
    }
    Ok(format!("{} levels within ε_n of 0.3", report.rows.len()))
}

fn criterion_3() -> Outcome {
    let mut lines = Vec::new();
    for lambda in [q(3, 2), q(2, 1), q(3, 1), q(10, 1)] {
        let delta = q(1, 10);
        let upper = Rational::from(&lambda + &delta);
        let mut alphas = Vec::new();
        for seed in [1, 2] {
            let mut cfg = config(lambda.clone(), delta.clone(), q(1, 2), 12);
            cfg.branch = BranchPolicy::SeededRandom(seed);
            let cert = powmod::cantor::construct(&cfg, &squares_spec(13, Target::Zero)).map_err(|e| format!("λ = {lambda}: {e}"))?;
            let a = &cert.alpha;
            if a.lo().cmp_rational(&lambda) == Ordering::Less || a.hi().cmp_rational(&upper) == Ordering::Greater {
                return Err(format!("α outside [{lambda}, {upper}] for seed {seed}"));
            }
            alphas.push(cert.alpha);
        }
        if alphas[0].intersects(&alphas[1]) {
            return Err(format!("seeds 1 and 2 give overlapping α for λ = {lambda}"));
        }
        lines.push(format!("λ={}", powmod::precision::format_rational(&lambda)));
    }
    Ok(format!("{} windows, distinct α per seed pair", lines.join(" ")))
}

fn criterion_4() -> Outcome {
    let spec = SequenceSpec::new(Family::Geometric(2), Target::Zero, 12);
    let sp = spec.original().map_err(err)?;
    let eps = q(1, 2);
    let dp = sequences::densify(&sp, &eps, &FillPolicy::Zero).map_err(err)?;
    let bound = Rational::from(1) + &eps;
    for (i, w) in dp.q().windows(2).enumerate() {
        if w[1] > Rational::from(&bound * &w[0]) {
            return Err(format!("ratio bound fails at index {}", i + 1));
        }
    }
    let origin = dp.origin_map();
    for (k, pair) in origin.windows(2).enumerate() {
        let qn = Rational::from(Integer::from(2).pow(k as u32 + 1));
        let step = Rational::from(&eps * &qn) / 2;
        for j in pair[0]..pair[1] - 1 {
            if Rational::from(&dp.q()[j + 1] - &dp.q()[j]) != step {
                return Err(format!("inserted gap after q = {qn} is not ε q / 2"));
            }
        }
    }
    if dp.extract_original() != sp {
        return Err("origin map does not reproduce the input".into());
    }
    Ok(format!("{} terms from {}", dp.len(), sp.len()))
}

fn criterion_5() -> Outcome {
    let third = (2f64).ln() / (3f64).ln();
    let mt = analysis::falconer_from_levels(&synthetic::middle_third_levels(40), None).map_err(err)?;
    let geo = analysis::falconer_from_levels(&synthetic::geometric_levels(40, 4), None).map_err(err)?;
    let e1 = (mt.extrapolated - third).abs();
    let e2 = (geo.extrapolated - 0.5).abs();
    let detail = format!(
        "middle-third {:.7} (raw {:.5}), γ=4^-n {:.7} (raw {:.5})",
        mt.extrapolated,
        mt.last().raw,
        geo.extrapolated,
        geo.last().raw
    );
    if e1 < 1e-3 && e2 < 1e-3 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_6() -> Outcome {
    // reference values from an independent 40-digit evaluation
    let closed_ref = 0.703_270_442_152_150_3;
    let limit_ref = 0.756_470_797_366_030_1;
    let c = analysis::closed_form_bound(&q(2, 1), &q(1, 2), &q(1, 10), &q(1, 1), 128).map_err(err)?;
    let l = analysis::limit_bound(&q(2, 1), &q(1, 2), 128).map_err(err)?;
    if (c.midpoint().to_f64() - closed_ref).abs() > 1e-4 || (l.midpoint().to_f64() - limit_ref).abs() > 1e-4 {
        return Err("closed forms off the reference".into());
    }
    let mut sweep = 0;
    for lambda in [q(11, 10), q(3, 2), q(2, 1), q(3, 1), q(10, 1)] {
        for delta in [q(1, 100), q(1, 2), q(5, 1), q(50, 1)] {
            for (eps, eta) in [
                (q(1, 100), q(1, 1)),
                (q(1, 10), q(9, 10)),
                (q(1, 4), q(1, 2)),
                (q(1, 2), q(1, 10)),
                (q(1, 3), q(99, 100)),
            ] {
                let c = analysis::closed_form_bound(&lambda, &delta, &eps, &eta, 128).map_err(err)?;
                let l = analysis::limit_bound(&lambda, &delta, 128).map_err(err)?;
                if c.hi() > l.lo() {
                    return Err(format!("closed form above limit at λ={lambda} δ={delta} ε={eps} η={eta}"));
                }
                sweep += 1;
            }
        }
    }
    let spec = SequenceSpec {
        densify: Some(q(1, 10)),
        ..squares_spec(41, Target::Zero)
    };
    let (_, dp, es) = spec.build().map_err(err)?;
    let depth = dp.origin_map()[39] + 1;
    let cfg = config(q(2, 1), q(1, 2), q(9, 10), depth);
    let construction = Construction::new(&cfg, &dp, &es).map_err(err)?;
    let tree = construction.enumerate_tree().map_err(err)?;
    let report = analysis::falconer_bound(&tree).map_err(err)?;
    let run_closed = analysis::closed_form_bound(&q(2, 1), &q(1, 2), &q(1, 10), &q(9, 10), 128).map_err(err)?;
    let partial = report.last().partial;
    let floor = run_closed.hi().to_f64().max(c.hi().to_f64()) - 0.05;
    let detail = format!(
        "closed {:.6}, limit {:.6}, {sweep} tuples ordered, tree partial {partial:.4} at q = {} vs floor {floor:.4}",
        c.midpoint().to_f64(),
        l.midpoint().to_f64(),
        tree.levels.last().map(|l| l.q.to_string()).unwrap_or_default()
    );
    if partial >= floor {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_7() -> Outcome {
    let prec = 256;
    let five = RInterval::from_integer(&Integer::from(5), prec);
    let phi = five
        .sqrt(prec)
        .map_err(err)?
        .add(&RInterval::from_integer(&Integer::from(1), prec), prec)
        .div(&RInterval::from_integer(&Integer::from(2), prec), prec)
        .map_err(err)?;
    let qs: Vec<Rational> = (1..=50).map(|n| q(n, 1)).collect();
    let rs = vec![Rational::new(); 50];
    let report = analysis::verify(&phi, &qs, &rs, None, 2..=50, 8).map_err(err)?;
    // Lucas and Fibonacci numbers: φ^n = (L_n + F_n √5) / 2
    let (mut l_prev, mut l) = (Integer::from(2), Integer::from(1));
    let (mut f_prev, mut f) = (Integer::from(0), Integer::from(1));
    let sqrt5 = Float::with_val(1024, 5).sqrt();
    for n in 2..=50usize {
        (l_prev, l) = (l.clone(), l + &l_prev);
        (f_prev, f) = (f.clone(), f + &f_prev);
        let row = &report.rows[n - 2];
        if row.nearest.as_ref() != Some(&l) {
            return Err(format!("nearest integer to φ^{n} is not L_{n}"));
        }
        let oracle = Float::with_val(1024, 2) / (Float::with_val(1024, &l) + Float::with_val(1024, &f) * &sqrt5);
        let w = Float::with_val(1024, row.dist.hi().as_float() - row.dist.lo().as_float());
        let lo = Float::with_val(1024, row.dist.lo().as_float() - &w);
        let hi = Float::with_val(1024, row.dist.hi().as_float() + &w);
        if oracle < lo || oracle > hi {
            return Err(format!("‖φ^{n}‖ enclosure misses φ^-{n}"));
        }
    }
    Ok("‖φ^n‖ = φ^-n for 2 ≤ n ≤ 50".into())
}

fn run_verify(cert: &Certificate) -> Result<(i32, String), String> {
    let dir = tempfile::tempdir().map_err(err)?;
    let path = dir.path().join("cert.toml");
    std::fs::write(&path, cert.to_toml(50)).map_err(err)?;
    let out = Command::new(env!("CARGO_BIN_EXE_powmod"))
        .args(["verify", "--certificate"])
        .arg(&path)
        .output()
        .map_err(err)?;
    Ok((out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stderr).trim().to_string()))
}

fn criterion_8() -> Outcome {
    let cert = base_certificate(None)?;
    let (code, _) = run_verify(&cert)?;
    if code != 0 {
        return Err(format!("unperturbed certificate exits {code}"));
    }
    let prec = cert.alpha.prec() + 64;
    let shift = RInterval::point(
        cert.alpha
            .width(prec)
            .mul(&powmod::precision::BigReal::from_i64(2, prec), prec, powmod::precision::Rounding::Up),
    );
    let mut shifted = cert.clone();
    shifted.alpha = cert.alpha.add(&shift, prec);
    let (code, message) = run_verify(&shifted)?;
    if code == 1 {
        Ok(format!("exit 1: {message}"))
    } else {
        Err(format!("perturbed certificate exits {code}"))
    }
}

fn criterion_9() -> Outcome {
    let first = base_certificate(None)?;
    let second = base_certificate(Some(2 * first.precision_bits()))?;
    if first.levels.len() != second.levels.len() {
        return Err("different level counts".into());
    }
    for (a, b) in first.levels.iter().zip(&second.levels) {
        if a.label != b.label {
            return Err(format!("labels differ at level {}", a.n));
        }
        if !b.left.is_subset_of(&a.left) || !b.right.is_subset_of(&a.right) {
            return Err(format!("endpoint enclosure not nested at level {}", a.n));
        }
    }
    Ok(format!(
        "{} levels nested, {} → {} bits",
        first.levels.len(),
        first.precision_bits(),
        second.precision_bits()
    ))
}

fn main() {
    let criteria: [Check; 9] = [
        ("constructive soundness", criterion_1),
        ("constant target", criterion_2),
        ("density windows", criterion_3),
        ("densification", criterion_4),
        ("dimension oracle", criterion_5),
        ("closed forms and tree bound", criterion_6),
        ("golden ratio oracle", criterion_7),
        ("negative control", criterion_8),
        ("precision nesting", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail}) [{secs:.1}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({detail}) [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
