//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on failure.

mod common;

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use laakso::analytic::{
    cross_spectrum, decompose_bruteforce, piece_counts, required_depth, theorem_spectrum, Rational, SpectrumTable,
};
use laakso::compare::{
    convergence_study, dispersion, match_spectra, tabulated_column, undo_dispersion, ComparisonReport,
};
use laakso::eigen::{solve_dense, solve_lanczos, EigenResult};
use laakso::{assemble_laplacian, build_graph, symmetrize, Form, JSequence, LaaksoGraph, MatrixFreeLaplacian};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn graph(j: u64, n: usize) -> LaaksoGraph {
    build_graph(&JSequence::constant(j).unwrap(), n).unwrap()
}

fn solve(g: &LaaksoGraph, k: usize) -> EigenResult {
    let s = symmetrize(&assemble_laplacian(g));
    if s.vertex_weights().len() <= 2000 {
        solve_dense(&s).unwrap()
    } else {
        solve_lanczos(&s, k).unwrap()
    }
}

fn exact_table(js: &JSequence, lambda_max: f64) -> SpectrumTable {
    theorem_spectrum(js, required_depth(js, lambda_max).unwrap(), lambda_max).unwrap()
}

fn report_for(j: u64, n: usize, k: usize) -> ComparisonReport {
    let js = JSequence::constant(j).unwrap();
    let g = build_graph(&js, n).unwrap();
    let h = g.h();
    let r = solve(&g, k);
    let table = exact_table(&js, undo_dispersion(0.4 / (h * h), h));
    match_spectra(&r, &table, h).unwrap()
}

fn c1_matrix_fixtures() -> Outcome {
    let inc2: [[u32; 5]; 5] =
        [[0, 0, 1, 0, 0], [0, 0, 1, 0, 0], [1, 1, 0, 1, 1], [0, 0, 1, 0, 0], [0, 0, 1, 0, 0]];
    let inc3: [[u32; 6]; 6] = [
        [0, 0, 1, 0, 0, 0],
        [0, 0, 1, 0, 0, 0],
        [1, 1, 0, 2, 0, 0],
        [0, 0, 2, 0, 1, 1],
        [0, 0, 0, 1, 0, 0],
        [0, 0, 0, 1, 0, 0],
    ];
    let lap2: [[f64; 5]; 5] = [
        [8.0, 0.0, -8.0, 0.0, 0.0],
        [0.0, 8.0, -8.0, 0.0, 0.0],
        [-2.0, -2.0, 8.0, -2.0, -2.0],
        [0.0, 0.0, -8.0, 8.0, 0.0],
        [0.0, 0.0, -8.0, 0.0, 8.0],
    ];
    let lap3: [[f64; 6]; 6] = [
        [18.0, 0.0, -18.0, 0.0, 0.0, 0.0],
        [0.0, 18.0, -18.0, 0.0, 0.0, 0.0],
        [-4.5, -4.5, 18.0, -9.0, 0.0, 0.0],
        [0.0, 0.0, -9.0, 18.0, -4.5, -4.5],
        [0.0, 0.0, 0.0, -18.0, 18.0, 0.0],
        [0.0, 0.0, 0.0, -18.0, 0.0, 18.0],
    ];
    let ulps = |a: f64, b: f64| (a.to_bits() as i64 - b.to_bits() as i64).unsigned_abs();
    let g2 = graph(2, 1);
    let g3 = graph(3, 1);
    for (u, row) in inc2.iter().enumerate() {
        check(g2.incidence_matrix().row(u) == row, format!("j=2 incidence row {u}"))?;
    }
    for (u, row) in inc3.iter().enumerate() {
        check(g3.incidence_matrix().row(u) == row, format!("j=3 incidence row {u}"))?;
    }
    let d2 = assemble_laplacian(&g2).to_dense();
    let d3 = assemble_laplacian(&g3).to_dense();
    let mut worst = 0;
    for (a, b) in d2.iter().flatten().zip(lap2.iter().flatten()) {
        worst = worst.max(ulps(*a, *b));
    }
    for (a, b) in d3.iter().flatten().zip(lap3.iter().flatten()) {
        worst = worst.max(ulps(*a, *b));
    }
    check(worst <= 1, format!("Laplacian differs by {worst} ulp"))?;
    Ok(format!("4 matrices, max deviation {worst} ulp"))
}

fn c2_figure_values() -> Outcome {
    let g = graph(2, 3);
    let h = g.h();
    check(h == 0.125, "h != 1/8")?;
    let r = solve(&g, 0);
    let mut found = Vec::new();
    for (k, target) in [(1.0, 9.74), (2.0, 37.49)] {
        let predicted = 2.0 / (h * h) * (1.0 - (k * PI * h).cos());
        let near = r
            .eigenvalues
            .iter()
            .copied()
            .min_by(|a, b| (a - predicted).abs().total_cmp(&(b - predicted).abs()))
            .unwrap();
        check((near - target).abs() <= 0.01, format!("{near} not within 0.01 of {target}"))?;
        check((near - predicted).abs() <= 1e-6, format!("{near} vs dispersion {predicted}"))?;
        found.push(format!("{near:.6}"));
    }
    Ok(format!("found {}", found.join(", ")))
}

/// Two printed values in the table drop or change a digit; the comparison
/// uses the corrected reading and lists it.
const PRINTED_CORRECTIONS: &[(u64, f64, f64)] = &[(4, 35.31, 355.31), (4, 621.65, 631.65)];

fn c3_table_reproduction() -> Outcome {
    let mut rows = 0;
    let mut flagged = Vec::new();
    let mut corrected = Vec::new();
    for j in 2..=7u64 {
        let js = JSequence::constant(j).unwrap();
        let table = exact_table(&js, 81.0 * PI * PI + 1.0);
        for row in tabulated_column(j) {
            let entry = table.find(row.value()).ok_or_else(|| format!("j={j}: {} pi^2 missing", row.value()))?;
            let printed = PRINTED_CORRECTIONS
                .iter()
                .find(|c| c.0 == j && c.1 == row.printed)
                .map(|c| {
                    corrected.push(format!("j={j} {}->{}", c.1, c.2));
                    c.2
                })
                .unwrap_or(row.printed);
            if entry.lambda == 0.0 {
                check(printed == 0.0, format!("j={j}: zero mode printed as {printed}"))?;
            } else {
                let rel = (printed - entry.lambda).abs() / entry.lambda;
                check(rel <= 0.005, format!("j={j}: printed {printed} vs {:.4} ({:.3}%)", entry.lambda, rel * 100.0))?;
            }
            if j == 2 && row.value() == Rational::from_integer(4) {
                flagged.push(format!("j=2 39.48: table {} derived {}", row.multiplicity, entry.multiplicity));
                continue;
            }
            check(
                entry.multiplicity == row.multiplicity,
                format!("j={j} {}: table {} derived {}", row.printed, row.multiplicity, entry.multiplicity),
            )?;
            rows += 1;
        }
    }
    let anchors: &[(u64, i128, i128, u64)] = &[
        (2, 1, 1, 3),
        (2, 16, 1, 18),
        (2, 64, 1, 66),
        (3, 9, 4, 2),
        (3, 81, 4, 8),
        (4, 64, 1, 10),
        (5, 25, 1, 4),
        (6, 36, 1, 5),
        (7, 49, 1, 6),
    ];
    for &(j, num, den, m) in anchors {
        let table = exact_table(&JSequence::constant(j).unwrap(), 81.0 * PI * PI + 1.0);
        let got = table.find(Rational::new(num, den)).map(|e| e.multiplicity);
        check(got == Some(m), format!("anchor j={j} {num}/{den}: {got:?} != {m}"))?;
    }
    // the level-2 decomposition for j = 3 is not probed by any table cell;
    // the derived counts are reported next to the tabulated ones
    let j3 = exact_table(&JSequence::constant(3).unwrap(), 81.0 * PI * PI + 1.0);
    check(j3.notes.len() == 1, "expected one decomposition note for j=3")?;
    Ok(format!(
        "{rows} cells exact, {} anchors; flagged {}; {}; printed corrections {}",
        anchors.len(),
        flagged.join(""),
        j3.notes[0],
        corrected.join(", ")
    ))
}

fn c4_discrepancy() -> Outcome {
    let report = report_for(2, 6, 60);
    let pair = report
        .pairs
        .iter()
        .find(|p| p.value == Rational::from_integer(4))
        .ok_or("no cluster matched 4 pi^2")?;
    check(!pair.truncated, "cluster at 4 pi^2 touches the end of the computed range")?;
    check(pair.tabulated_multiplicity == Some(3), "tabulated multiplicity not recorded")?;
    check(
        pair.cluster.size() as u64 == pair.multiplicity,
        format!("numeric cluster {} vs derived {}", pair.cluster.size(), pair.multiplicity),
    )?;
    check(report.notes.iter().any(|n| n.contains("tabulated multiplicity 3")), "report lacks the note")?;
    Ok(format!(
        "cluster {} (table {}, derived {}), corrected mean {:.6}",
        pair.cluster.size(),
        3,
        pair.multiplicity,
        pair.cluster.corrected_mean
    ))
}

fn c5_decomposition() -> Outcome {
    let mut cases = 0;
    for j in 2..=7u64 {
        let js = JSequence::constant(j).unwrap();
        let top = if j == 2 { 5 } else { 4 };
        for n in 1..=top {
            let closed = piece_counts(&js, n).map_err(|e| e.to_string())?;
            let brute = decompose_bruteforce(&js, n).map_err(|e| e.to_string())?;
            check(closed == brute, format!("j={j} n={n}: {closed:?} vs {brute:?}"))?;
            check(closed.length_conserved(&js).unwrap(), format!("j={j} n={n}: length not conserved"))?;
            cases += 1;
        }
    }
    Ok(format!("{cases} cases"))
}

fn c6_cross_identity() -> Outcome {
    let lambda_max = 1e4 * PI * PI;
    let mut values = 0;
    for d in [Rational::new(1, 4), Rational::new(1, 9)] {
        let oracle = common::star_oracle(d, lambda_max);
        let ours: std::collections::BTreeMap<Rational, u64> =
            cross_spectrum(d, lambda_max).into_iter().map(|e| (e.value, e.multiplicity)).collect();
        check(ours == oracle, format!("d={d}: cross spectrum differs from the star oracle"))?;
        values += ours.len();
    }
    Ok(format!("{values} distinct values equal"))
}

fn c7_convergence() -> Outcome {
    let js = JSequence::constant(2).unwrap();
    let rows = convergence_study(&js, &[3, 4, 5, 6], 4).map_err(|e| e.to_string())?;
    let row = rows.iter().find(|r| r.value == Rational::from_integer(1)).ok_or("pi^2 not tracked")?;
    let slope = row.slope.ok_or("no slope")?;
    check((slope - 2.0).abs() <= 0.2, format!("slope {slope}"))?;
    Ok(format!("slope {slope:.4}"))
}

fn c8_union_membership() -> Outcome {
    let mut detail = Vec::new();
    for (j, n) in [(2u64, 5usize), (3, 3)] {
        let report = report_for(j, n, 0);
        check(
            report.unmatched_numeric.is_empty(),
            format!("j={j} n={n}: {} unmatched numeric clusters", report.unmatched_numeric.len()),
        )?;
        check(
            report.unmatched_analytic.is_empty(),
            format!("j={j} n={n}: {} unmatched exact values", report.unmatched_analytic.len()),
        )?;
        let eigs: usize = report.pairs.iter().map(|p| p.cluster.size()).sum();
        detail.push(format!("j={j} n={n}: {eigs} eigenvalues in {} clusters", report.pairs.len()));
        for p in &report.pairs {
            let tol = (3.0 * p.lambda * p.lambda * report.h * report.h / 12.0).max(1e-6);
            check((p.cluster.mean - dispersion(p.lambda, report.h)).abs() <= tol, "pair outside tolerance")?;
        }
    }
    Ok(detail.join("; "))
}

fn peak_rss_kib() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    line.split_whitespace().nth(1)?.parse().ok()
}

fn c9_scale() -> Outcome {
    let g = graph(2, 9);
    check(g.vertex_count() == 131_840, format!("dimension {}", g.vertex_count()))?;
    let op = MatrixFreeLaplacian::new(&g, Form::Symmetrized);
    let r = solve_lanczos(&op, 200).map_err(|e| e.to_string())?;
    check(r.len() == 200 && r.all_converged(), "not all pairs converged")?;
    let rss = peak_rss_kib().ok_or("peak RSS unavailable")?;
    check(rss < 4 * 1024 * 1024, format!("peak RSS {rss} KiB"))?;
    Ok(format!(
        "dim {}, 200 pairs, {} iterations, lambda_200 = {:.4}, peak RSS {} MiB",
        g.vertex_count(),
        r.iterations,
        r.eigenvalues[199],
        rss / 1024
    ))
}

fn main() -> ExitCode {
    let criteria: &[Criterion] = &[
        ("1 matrix fixtures", c1_matrix_fixtures, Some(Duration::from_secs(1))),
        ("2 figure eigenvalues", c2_figure_values, Some(Duration::from_secs(1))),
        ("3 table reproduction", c3_table_reproduction, Some(Duration::from_secs(1))),
        ("4 discrepancy at 4 pi^2", c4_discrepancy, Some(Duration::from_secs(120))),
        ("5 decomposition oracle", c5_decomposition, None),
        ("6 cross identity", c6_cross_identity, None),
        ("7 convergence order", c7_convergence, None),
        ("8 union membership", c8_union_membership, None),
        ("9 scale n=9", c9_scale, None),
    ];
    let mut failed = 0;
    for (name, f, limit) in criteria {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let outcome = match (outcome, limit) {
            (Ok(_), Some(l)) if elapsed > *l => Err(format!("took {elapsed:.2?}, limit {l:?}")),
            (o, _) => o,
        };
        match outcome {
            Ok(detail) => println!("PASS [{name}] {detail} ({elapsed:.2?})"),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{name}] {detail} ({elapsed:.2?})");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
