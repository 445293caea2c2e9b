//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::time::{Duration, Instant};

use nearunitary::ed::{multiplet_comparison, EdConfig};
use nearunitary::irreps::{sign_label, standard_label, trivial_label};
use nearunitary::linalg::{symmetric_eigen, symmetric_eigenvalues};
use nearunitary::perm::{
    all_orderings, factorial, hexagon_ordering, ordering_action, particle_action, Permutation,
    WellOperator,
};
use nearunitary::slater::{
    all_bond_coefficients, monte_carlo_boundary_integral, CouplingCoefficients, CouplingOptions,
    LevelIndex,
};
use nearunitary::trap::{eigenbasis, TrapSpec};
use nearunitary::tunneling::{
    build_tunneling, commutator_norm, spectral_report, IrrepContent, Parity, RateVector,
    ReportOptions,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn fail<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn rates(v: &[f64]) -> RateVector {
    RateVector::new(v.to_vec()).unwrap()
}

fn rate(rng: &mut ChaCha8Rng) -> f64 {
    // (0, 1]
    1.0 - rng.random::<f64>()
}

fn within(elapsed: Duration, limit: Duration) -> bool {
    elapsed < limit
}

fn symmetric_spectrum() -> Outcome {
    let start = Instant::now();
    let t = build_tunneling(3, &rates(&[1.0, 1.0])).map_err(fail)?;
    let eig = symmetric_eigen(&t).map_err(fail)?;
    let expect = [-6.0, -5.0, -5.0, -3.0, -3.0, -2.0];
    let err = eig
        .values
        .iter()
        .zip(&expect)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let norm = 1.0 / 6.0_f64.sqrt();
    let overlap: f64 = (0..6)
        .map(|i| eig.vectors[(i, 0)] * norm)
        .sum::<f64>()
        .abs();
    let elapsed = start.elapsed();
    check(
        err < 1e-10 && overlap >= 1.0 - 1e-10 && within(elapsed, Duration::from_secs(1)),
        format!("max eigenvalue error {err:.2e}, ground overlap {overlap:.15}, {elapsed:.2?}"),
    )
}

fn asymmetric_spectrum() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let (t, u) = (rate(&mut rng), rate(&mut rng));
        let vals = symmetric_eigenvalues(&build_tunneling(3, &rates(&[t, u])).map_err(fail)?)
            .map_err(fail)?;
        let s = t + u;
        let r = (t * t - t * u + u * u).sqrt();
        let mut expect = [
            -3.0 * s,
            -2.0 * s - r,
            -2.0 * s - r,
            -2.0 * s + r,
            -2.0 * s + r,
            -s,
        ];
        expect.sort_by(f64::total_cmp);
        for (a, b) in vals.iter().zip(&expect) {
            worst = worst.max((a - b).abs());
        }
    }
    let elapsed = start.elapsed();
    check(
        worst < 1e-9 && within(elapsed, Duration::from_secs(5)),
        format!("100 random (t,u): max error {worst:.2e}, {elapsed:.2?}"),
    )
}

fn parity_labels() -> Outcome {
    let letters = |a, b| {
        WellOperator::well_swap(&hexagon_ordering(a).unwrap(), &hexagon_ordering(b).unwrap())
    };
    let pi = letters('A', 'D')
        .and_then(|ad| ad.compose(&letters('B', 'E')?))
        .and_then(|x| x.compose(&letters('C', 'F')?))
        .map_err(fail)?;
    let same_operator = pi == WellOperator::parity(3).map_err(fail)?;
    let rv = rates(&[1.0, 1.0]);
    let report = spectral_report(
        &build_tunneling(3, &rv).map_err(fail)?,
        &rv,
        ReportOptions::default(),
    )
    .map_err(fail)?;
    let got: Vec<(f64, Parity)> = report
        .clusters
        .iter()
        .map(|c| (c.eigenvalue, c.parity.clone()))
        .collect();
    let expect = [
        (-6.0, Parity::Even),
        (-5.0, Parity::Odd),
        (-3.0, Parity::Even),
        (-2.0, Parity::Odd),
    ];
    let ok = same_operator
        && got.len() == 4
        && got
            .iter()
            .zip(&expect)
            .all(|((e, p), (x, q))| (e - x).abs() < 1e-10 && p == q);
    check(
        ok,
        format!("Π = P(AD)P(BE)P(CF): {same_operator}; clusters {got:?}"),
    )
}

fn irrep_labels() -> Outcome {
    let rv = rates(&[1.0, 1.0]);
    let opts = ReportOptions {
        cluster_tol: None,
        with_shift: true,
    };
    let report =
        spectral_report(&build_tunneling(3, &rv).map_err(fail)?, &rv, opts).map_err(fail)?;
    let only: Vec<Option<&str>> = report.clusters.iter().map(|c| c.irreps.only()).collect();
    let expect = [
        trivial_label(3),
        standard_label(3),
        standard_label(3),
        sign_label(3),
    ];
    let symmetric_ok = only.len() == 4
        && only
            .iter()
            .zip(&expect)
            .all(|(a, b)| *a == Some(b.as_str()))
        && report.clusters[3].eigenvalue.abs() < 1e-10;

    // S_4: every cluster decomposes with integer multiplicities; the labelling
    // itself rejects projection residuals above 1e-8.
    let table = nearunitary::irreps::character_table(4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut s4_ok = true;
    let mut cases = 0;
    let run = |v: Vec<f64>| -> std::result::Result<bool, String> {
        let rv = rates(&v);
        let report =
            spectral_report(&build_tunneling(4, &rv).map_err(fail)?, &rv, opts).map_err(fail)?;
        let mut total = 0;
        for c in &report.clusters {
            let IrrepContent::Labeled(m) = &c.irreps else {
                return Ok(false);
            };
            let dim: usize = m
                .iter()
                .map(|(l, k)| table.dimension(l).unwrap_or(0) * k)
                .sum();
            if dim != c.multiplicity {
                return Ok(false);
            }
            total += dim;
        }
        Ok(total == 24)
    };
    for v in [
        vec![1.0, 1.0, 1.0],
        vec![1.0, 2.0, 1.0],
        vec![1.0, 0.0, 1.0],
        vec![0.0, 1.0, 0.0],
    ] {
        s4_ok &= run(v)?;
        cases += 1;
    }
    for _ in 0..50 {
        let v = vec![rate(&mut rng), rate(&mut rng), rate(&mut rng)];
        s4_ok &= run(v)?;
        cases += 1;
    }
    check(
        symmetric_ok && s4_ok,
        format!("N=3 labels {only:?}; {cases} S_4 rate vectors decompose to 24: {s4_ok}"),
    )
}

fn symmetry_preservation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0_f64;
    for n in [3usize, 4] {
        for _ in 0..10 {
            let v: Vec<f64> = (0..n - 1).map(|_| rate(&mut rng)).collect();
            let t = build_tunneling(n, &rates(&v)).map_err(fail)?;
            for w in all_orderings(n).map_err(fail)? {
                let p = Permutation::from_zero_based(w.seq().to_vec()).map_err(fail)?;
                worst = worst.max(commutator_norm(
                    &t,
                    &WellOperator::particle(&p).map_err(fail)?,
                ));
            }
        }
    }
    let t = build_tunneling(3, &rates(&[1.0, 2.0])).map_err(fail)?;
    let mut broken = 0.0_f64;
    for w in all_orderings(3).map_err(fail)? {
        let q = Permutation::from_zero_based(w.seq().to_vec()).map_err(fail)?;
        broken = broken.max(commutator_norm(
            &t,
            &WellOperator::ordering(&q).map_err(fail)?,
        ));
    }
    check(
        worst < 1e-12 && broken > 0.1,
        format!(
            "max ‖[T,P_particle]‖ {worst:.2e}; rates [1,2] max ordering commutator {broken:.3}"
        ),
    )
}

fn trace_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0_f64;
    for n in [2usize, 3, 4] {
        let class = (factorial(n) / 2) as f64;
        for _ in 0..20 {
            let v: Vec<f64> = (0..n - 1).map(|_| rate(&mut rng)).collect();
            let rv = rates(&v);
            let t = build_tunneling(n, &rv).map_err(fail)?;
            let trace: f64 = (0..t.nrows()).map(|i| t[(i, i)]).sum();
            let expect = -rv.total() * class * (factorial(n) as f64 - 2.0);
            worst = worst.max((trace - expect).abs());
        }
    }
    check(
        worst < 1e-10,
        format!("max trace error {worst:.2e} over 60 rate vectors"),
    )
}

fn coefficients(
    trap: &TrapSpec,
    quanta: &[usize],
    g: f64,
) -> std::result::Result<CouplingCoefficients, String> {
    let basis = eigenbasis(trap, quanta.iter().max().unwrap() + 2).map_err(fail)?;
    let level = LevelIndex::new(quanta.to_vec()).map_err(fail)?;
    all_bond_coefficients(
        &level,
        &basis,
        g,
        &CouplingOptions::for_basis(&basis, quanta.len()),
    )
    .map_err(fail)
}

fn max_pairwise(values: &[f64]) -> f64 {
    let mut worst = 0.0_f64;
    for (i, a) in values.iter().enumerate() {
        for b in &values[i + 1..] {
            worst = worst.max((a - b).abs() / a.abs().max(b.abs()));
        }
    }
    worst
}

fn coefficient_equality() -> Outcome {
    let start = Instant::now();
    let h012 = coefficients(&TrapSpec::Harmonic, &[0, 1, 2], 10.0)?;
    let h013 = coefficients(&TrapSpec::Harmonic, &[0, 1, 3], 10.0)?;
    let b4 = coefficients(&TrapSpec::Box { length: 1.0 }, &[0, 1, 2, 3], 10.0)?;
    let d = [
        max_pairwise(&h012.values),
        max_pairwise(&h013.values),
        max_pairwise(&b4.values),
    ];
    let elapsed = start.elapsed();
    check(
        d.iter().all(|x| *x < 1e-4) && within(elapsed, Duration::from_secs(120)),
        format!(
            "harmonic {{0,1,2}} {:.1e}, {{0,1,3}} {:.1e}, box N=4 {:.1e}; {elapsed:.2?}",
            d[0], d[1], d[2]
        ),
    )
}

fn inverse_g_scaling() -> Outcome {
    let mut worst = 0.0_f64;
    for (trap, q) in [
        (TrapSpec::Harmonic, vec![0, 1, 2]),
        (TrapSpec::Box { length: 1.0 }, vec![0, 1]),
    ] {
        let a = coefficients(&trap, &q, 10.0)?;
        let b = coefficients(&trap, &q, 20.0)?;
        for (x, y) in a.values.iter().zip(&b.values) {
            worst = worst.max((x / y - 2.0).abs() / 2.0);
        }
    }
    check(
        worst < 1e-12,
        format!("max relative deviation of t(g)/t(2g) from 2: {worst:.2e}"),
    )
}

fn monte_carlo_agreement() -> Outcome {
    let start = Instant::now();
    let g = 10.0;
    let basis = eigenbasis(&TrapSpec::Harmonic, 4).map_err(fail)?;
    let level = LevelIndex::ground(3);
    let quad = all_bond_coefficients(&level, &basis, g, &CouplingOptions::for_basis(&basis, 3))
        .map_err(fail)?;
    let mc = monte_carlo_boundary_integral(&level, &basis, 1, 10_000_000, 9).map_err(fail)?;
    let (q, qe) = (quad.values[0], quad.quadrature_error[0]);
    let (m, me) = (mc.value / g, mc.std_error / g);
    let combined = (qe * qe + me * me).sqrt();
    let sigmas = (q - m).abs() / combined;
    check(
        sigmas < 3.0,
        format!(
            "quadrature {q:.10} ± {qe:.1e}, Monte Carlo {m:.10} ± {me:.1e} ({} samples): {sigmas:.2} σ, {:.1?}",
            mc.samples,
            start.elapsed()
        ),
    )
}

fn splitting_fingerprint() -> Outcome {
    let start = Instant::now();
    let gs = [15.0, 20.0, 30.0];
    let cfg = EdConfig::new(TrapSpec::Harmonic, LevelIndex::ground(3), gs[0], 12);
    let r = multiplet_comparison(&cfg, &gs).map_err(fail)?;
    let s = r.slopes.as_ref().ok_or("fewer than two g samples")?;
    let fp: Vec<String> = s.fingerprint.iter().map(|x| format!("{x:.3}")).collect();
    let elapsed = start.elapsed();
    check(
        r.max_gap_error < 0.15
            && r.scale_deviation < 0.15
            && within(elapsed, Duration::from_secs(600)),
        format!(
            "fingerprint [{}], max gap error {:.4}, scale ratio {:.4}; {elapsed:.1?}",
            fp.join(", "),
            r.max_gap_error,
            s.scale_ratio
        ),
    )
}

fn unitary_limit() -> Outcome {
    let gs = [15.0, 20.0, 30.0, 45.0, 60.0];
    let mut cfg = EdConfig::new(TrapSpec::Harmonic, LevelIndex::ground(3), gs[0], 12);
    cfg.systematic_cutoffs = vec![10, 14];
    let r = multiplet_comparison(&cfg, &gs).map_err(fail)?;
    let sys = r.systematic.as_ref().ok_or("no cutoff sweep")?;
    let limit = sys.unitary_limit.ok_or("centroid fit failed")?;
    let intercepts: Vec<String> = sys
        .cutoffs
        .iter()
        .map(|c| {
            format!(
                "M={}: {:.4}",
                c.cutoff,
                c.centroid_intercept.unwrap_or(f64::NAN)
            )
        })
        .collect();
    let dev = (limit - r.e_infinity).abs() / r.e_infinity;
    check(
        dev < 0.02,
        format!(
            "1/g intercepts {}; extrapolated in 1/√M {limit:.4} vs {} ({:.2}%)",
            intercepts.join(", "),
            r.e_infinity,
            100.0 * dev
        ),
    )
}

fn action_commutation() -> Outcome {
    let mut checked = 0usize;
    let mut failures = 0usize;
    for n in 2..=4 {
        let perms: Vec<Permutation> = all_orderings(n)
            .map_err(fail)?
            .iter()
            .map(|w| Permutation::from_zero_based(w.seq().to_vec()).unwrap())
            .collect();
        let wells = all_orderings(n).map_err(fail)?;
        for p in &perms {
            for q in &perms {
                for w in &wells {
                    let a =
                        particle_action(p, &ordering_action(q, w).map_err(fail)?).map_err(fail)?;
                    let b =
                        ordering_action(q, &particle_action(p, w).map_err(fail)?).map_err(fail)?;
                    checked += 1;
                    failures += usize::from(a != b);
                }
            }
        }
    }
    check(
        failures == 0,
        format!("{checked} triples (p, q, w) for N <= 4, {failures} failures"),
    )
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("symmetric N=3 spectrum", symmetric_spectrum),
        ("asymmetric N=3 closed forms", asymmetric_spectrum),
        ("parity labels", parity_labels),
        ("irrep labels", irrep_labels),
        ("symmetry preservation and breaking", symmetry_preservation),
        ("trace identity", trace_identity),
        ("symmetric-trap coefficient equality", coefficient_equality),
        ("1/g scaling", inverse_g_scaling),
        ("quadrature vs Monte Carlo", monte_carlo_agreement),
        ("ED splitting fingerprint", splitting_fingerprint),
        ("unitary-limit energy", unitary_limit),
        ("action commutation", action_commutation),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let (tag, detail) = match run() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} {tag}: {name}: {detail}", i + 1);
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
