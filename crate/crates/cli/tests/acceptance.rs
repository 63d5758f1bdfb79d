//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::f64::consts::{PI, TAU};
use std::process::{Command, ExitCode};
use std::time::Instant;

use bidisc_cli::{execute, ExperimentConfig, Overrides};
use bidisc_core::measure::rng::SampleStream;
use bidisc_core::measure::{sublevel_indicator, sublevel_volume_exact, weighted_volume_with, Proposal, WeightParams};
use bidisc_core::operator::{
    align_at_one, carleson_sweep, default_centers, stabilized_lojasiewicz, theorem_certificate, CertificateOptions,
};
use bidisc_core::singularity::default_radii;
use bidisc_core::{
    build_pzeta, find_singularities, nt_limit, zero_set_interior_check, zoo, BiPolynomial, BoundaryPoint, Error,
    RationalInnerFunction,
};
use num_complex::Complex64;

type Check = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// `(a, b)` angle pairs of the three Phi_{A,B} instances.
const PHI_AB: [(f64, f64); 3] = [(2.0, 4.0), (PI / 2.0, 3.0 * PI / 2.0), (1.0, 5.5)];

fn zoo_functions() -> Vec<(String, RationalInnerFunction)> {
    let mut out = vec![("knese".to_string(), zoo::knese())];
    for (a, b) in PHI_AB {
        out.push((format!("phi_ab({a:.3}, {b:.3})"), zoo::phi_ab(a, b).unwrap()));
    }
    out
}

fn random_polynomial(stream: &mut SampleStream) -> BiPolynomial {
    let n = (stream.uniform() * 5.0) as usize;
    let m = (stream.uniform() * 5.0) as usize;
    let coeffs = (0..(n + 1) * (m + 1))
        .map(|_| Complex64::new(stream.uniform(), stream.uniform()))
        .collect();
    BiPolynomial::new(n, m, coeffs).unwrap()
}

fn criterion_1() -> Check {
    let mut stream = SampleStream::new(1, 0);
    let worst = (0..1000)
        .map(|_| {
            let p = random_polynomial(&mut stream);
            p.reflect().reflect().max_coeff_distance(&p)
        })
        .fold(0.0, f64::max);
    let knese = zoo::knese();
    let reflected = knese.denominator().reflect();
    let expected = BiPolynomial::from_terms(&[
        (1, 1, Complex64::new(2.0, 0.0)),
        (1, 0, Complex64::new(-1.0, 0.0)),
        (0, 1, Complex64::new(-1.0, 0.0)),
    ]);
    let exact = reflected.max_coeff_distance(&expected) == 0.0 && reflected.to_text() == "2z1z2 - z1 - z2";
    ensure(
        worst <= 1e-14 && exact,
        format!("max involution error {worst:.1e}; Knese reflection {}", reflected.to_text()),
    )
}

fn criterion_2() -> Check {
    let proposal = Proposal::full(-0.5);
    let mut worst_z = 0.0f64;
    let mut worst_fit = 0.0f64;
    for beta in [0.0, 0.5, 1.0, 2.0] {
        let w = WeightParams::new(beta).map_err(err)?;
        for delta in [1e-1, 1e-2, 1e-3] {
            let mc = weighted_volume_with(&proposal, sublevel_indicator(delta), w, 1_000_000, 0xB1D15C).map_err(err)?;
            let exact = sublevel_volume_exact(w, delta).map_err(err)?;
            worst_z = worst_z.max((mc.value - exact).abs() / mc.std_error);
        }
        let cfg = ExperimentConfig::from_toml(&format!(
            "experiment = \"volume-lemma\"\nbeta = {beta:?}\nscales = [1e-1, 1e-2, 1e-3]\nsamples = 1000000\n"
        ))
        .map_err(err)?;
        let report = execute(cfg, &Overrides::default()).map_err(err)?;
        let json: serde_json::Value = serde_json::from_str(&report.body).map_err(err)?;
        let q = json["result"]["fit_mc"]["exponent"].as_f64().ok_or("missing fit")?;
        worst_fit = worst_fit.max((q - (beta + 1.0)).abs());
    }
    ensure(
        worst_z <= 3.0 && worst_fit <= 0.05,
        format!("max |z| {worst_z:.2} over 12 cells; max |fit - (beta + 1)| {worst_fit:.4}"),
    )
}

fn criterion_3() -> Check {
    let cfg = ExperimentConfig::from_toml("experiment = \"box-scaling\"\nbeta = 0.0\n").map_err(err)?;
    let report = execute(cfg, &Overrides::default()).map_err(err)?;
    let json: serde_json::Value = serde_json::from_str(&report.body).map_err(err)?;
    let exact = json["result"]["fit_exact"]["exponent"].as_f64().ok_or("missing fit")?;
    let mc = json["result"]["fit_mc"]["exponent"].as_f64().ok_or("missing fit")?;
    ensure(
        (exact - 4.0).abs() <= 0.1 && (mc - 4.0).abs() <= 0.1,
        format!("exponent {exact:.4} (quadrature), {mc:.4} (Monte Carlo)"),
    )
}

fn criterion_4() -> Check {
    let mut interior_violations = 0usize;
    let mut torus_worst = 0.0f64;
    for (k, (name, phi)) in zoo_functions().into_iter().enumerate() {
        let mut stream = SampleStream::new(4, k as u64);
        for _ in 0..1_000_000 {
            let z1 = Complex64::from_polar(stream.uniform().sqrt(), TAU * stream.uniform());
            let z2 = Complex64::from_polar(stream.uniform().sqrt(), TAU * stream.uniform());
            if let Ok(v) = phi.eval_default(z1, z2) {
                if v.norm() >= 1.0 {
                    interior_violations += 1;
                }
            }
        }
        let singular = find_singularities(&phi, 64, 1e-10).map_err(err)?;
        if singular.is_empty() {
            return Err(format!("{name}: no singularity found"));
        }
        for i in 0..512 {
            for j in 0..512 {
                let tau = BoundaryPoint::new(TAU * i as f64 / 512.0, TAU * j as f64 / 512.0);
                if singular.iter().any(|s| tau.distance(s) < 1e-2) {
                    continue;
                }
                let [z1, z2] = tau.coords();
                let v = phi.eval_default(z1, z2).map_err(err)?;
                torus_worst = torus_worst.max((v.norm() - 1.0).abs());
            }
        }
    }
    let limit = nt_limit(&zoo::knese(), &BoundaryPoint::one(), &default_radii(), 1e-8).map_err(err)?;
    let value_err = (limit.value + 1.0).norm();
    let modulus_err = (limit.modulus - 1.0).abs();
    ensure(
        interior_violations == 0 && torus_worst < 1e-9 && value_err <= 1e-8 && modulus_err <= 1e-10,
        format!(
            "{interior_violations} interior violations; torus ||phi| - 1| <= {torus_worst:.1e}; \
             Knese limit error {value_err:.1e}, modulus error {modulus_err:.1e}"
        ),
    )
}

fn criterion_5() -> Check {
    let knese = zoo::knese();
    let at_one = zero_set_interior_check(&build_pzeta(&knese, Complex64::new(1.0, 0.0)).map_err(err)?, 0.1, 32)
        .map_err(err)?;
    let mut min_all = f64::INFINITY;
    for (_, phi) in zoo_functions() {
        for j in 0..64 {
            let zeta = Complex64::from_polar(1.0, TAU * j as f64 / 64.0);
            let pz = build_pzeta(&phi, zeta).map_err(err)?;
            min_all = min_all.min(zero_set_interior_check(&pz, 0.1, 32).map_err(err)?);
        }
    }
    ensure(
        at_one >= 0.379 && min_all > 0.0,
        format!("Knese zeta = 1: {at_one:.6}; min over 4 x 64 cases {min_all:.3e}"),
    )
}

fn criterion_6() -> Check {
    let one = BoundaryPoint::one();
    let fit = |phi: &RationalInnerFunction| -> Result<(f64, usize), String> {
        let (_, _, aligned) = align_at_one(phi, None).map_err(err)?;
        let est = stabilized_lojasiewicz(&aligned, &one, 200_000, 32, 0xB1D15C).map_err(err)?;
        Ok((est.exponent_hat, est.envelope_points.len()))
    };
    let (q_knese, bins) = fit(&zoo::knese())?;
    let (q_smooth, _) = fit(&zoo::coordinate(0))?;
    let mut worst_rot = 0.0f64;
    for (a, b) in PHI_AB {
        let (q, _) = fit(&zoo::phi_ab(a, b).map_err(err)?)?;
        worst_rot = worst_rot.max((q - q_knese).abs());
    }
    ensure(
        q_knese <= 2.2 && bins >= 6 && (q_smooth - 1.0).abs() <= 0.15 && worst_rot <= 0.2,
        format!(
            "Knese q_hat {q_knese:.4} ({bins} bins); z1 q_hat {q_smooth:.4}; \
             max |q_hat(Phi_AB) - q_hat(Knese)| {worst_rot:.4}"
        ),
    )
}

fn criterion_7() -> Check {
    let pair = zoo::knese_pair();
    let scales: Vec<f64> = (1..=8).map(|k| 0.5f64.powi(k)).collect();
    let mut opts = CertificateOptions::new(scales.clone(), 10_000_000, 0xB1D15C);
    opts.q_override = Some(2.0);
    let report = theorem_certificate(&pair, 8.0, &opts).map_err(err)?;
    let fit = report.pullback_fit.as_ref().ok_or("no pull-back fit")?.exponent;
    let mut small = CertificateOptions::new(scales, 100_000, 0xB1D15C);
    small.q_override = Some(2.0);
    let rejected = matches!(theorem_certificate(&pair, 3.0, &small), Err(Error::BetaTooSmall { .. }));
    ensure(
        report.a == 0.0 && fit >= 3.7 && !report.growth_flag && rejected,
        format!(
            "a = {}; pull-back exponent {fit:.3}; growth_flag {}; sup ratio {:.3e}; beta = 3 {}",
            report.a,
            report.growth_flag,
            report.sup_ratio,
            if rejected { "-> BetaTooSmall" } else { "not rejected" }
        ),
    )
}

fn criterion_8() -> Check {
    let pair = zoo::identity_pair();
    let centers: Vec<BoundaryPoint> = default_centers(&pair, 0xB1D15C).map_err(err)?.into_iter().take(5).collect();
    let scales: Vec<f64> = (1..=6).map(|k| 0.5f64.powi(k)).collect();
    let report = carleson_sweep(&pair, 1.0, 1.0, &centers, &scales, 1.0, 200_000, 0xB1D15C).map_err(err)?;
    let worst = report
        .ratio_table
        .iter()
        .map(|r| (r.ratio - 1.0).abs() / r.ratio_std_error)
        .fold(0.0, f64::max);
    ensure(
        centers.len() == 5 && report.ratio_table.len() == 30 && worst <= 3.0,
        format!("{} cells; max |ratio - 1| / se {worst:.2}", report.ratio_table.len()),
    )
}

fn criterion_9() -> Check {
    let dir = tempfile::tempdir().map_err(err)?;
    let configs = [
        ("volume", "experiment = \"volume-lemma\"\nbeta = 1.0\nsamples = 200000\n"),
        ("box", "experiment = \"box-scaling\"\nsamples = 100000\n"),
        ("loj", "experiment = \"lojasiewicz\"\nsamples = 50000\n"),
        ("cert", "experiment = \"certificate\"\nbeta = 8.0\nq = 2.0\nsamples = 100000\n"),
        ("sweep", "experiment = \"sweep\"\nbeta = 8.0\na = 3.0\nsamples = 100000\nscales = [0.5, 0.25, 0.125]\n"),
    ];
    for (name, text) in configs {
        let config = dir.path().join(format!("{name}.toml"));
        std::fs::write(&config, text).map_err(err)?;
        let mut outputs = Vec::new();
        for workers in [1, 4, 8] {
            for format in ["json", "csv"] {
                let out = dir.path().join(format!("{name}-{workers}.{format}"));
                let status = Command::new(env!("CARGO_BIN_EXE_bidisc"))
                    .arg("--config")
                    .arg(&config)
                    .args(["--seed", "12345", "--workers", &workers.to_string(), "--format", format, "--output"])
                    .arg(&out)
                    .output()
                    .map_err(err)?;
                if !status.status.success() {
                    return Err(format!("{name} at {workers} workers: {}", String::from_utf8_lossy(&status.stderr)));
                }
                outputs.push((format, std::fs::read(&out).map_err(err)?));
            }
        }
        for format in ["json", "csv"] {
            let mut same = outputs.iter().filter(|(f, _)| *f == format).map(|(_, b)| b);
            let first = same.next().unwrap();
            if !same.all(|b| b == first) {
                return Err(format!("{name} {format} differs across worker counts"));
            }
        }
    }
    Ok(format!("{} experiments byte-identical at 1, 4, 8 workers", configs.len()))
}

fn main() -> ExitCode {
    let criteria: [(u32, fn() -> Check); 9] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
    ];
    let mut failed = 0;
    for (n, check) in criteria {
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {n}: PASS {detail} ({secs:.1} s)"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n}: FAIL {detail} ({secs:.1} s)");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
