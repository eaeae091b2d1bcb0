//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.
//!
//! Criteria 6 to 9 need the reference transcription, read from
//! `FOLIO_TOPICS_TRANSCRIPTION` or `data/reference/transcription.evt`.

mod common;

use common::{Corpus, Outcome};
use folio_topics::corpus::{self, Document, Segmentation};
use folio_topics::factor::{self, NmfConfig};
use folio_topics::graph::{self, node_id};
use folio_topics::lda::{self, GibbsSampler, LdaConfig};
use folio_topics::linalg::{self, DenseMatrix};
use folio_topics::mca::{self, CategoryTable};
use folio_topics::vectorize::{self, TfidfOptions};
use folio_topics::Result;
use rand::Rng;

fn outcome(passed: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome {
        passed,
        detail: detail.into(),
    })
}

fn tfidf_exactness() -> Result<Outcome> {
    let doc = |id: &str, tokens: &[&str]| Document {
        id: id.into(),
        page: id.into(),
        mode: Segmentation::Page,
        tokens: tokens.iter().map(|t| t.to_string()).collect(),
    };
    let docs = [doc("d1", &["a", "a", "b"]), doc("d2", &["b", "c"]), doc("d3", &["c"])];
    let (_, w) = vectorize::vectorize(&docs, 1, TfidfOptions::default())?;
    // N = 3; df(a) = 1, df(b) = 2, df(c) = 2.
    let log3 = 0.477_121_254_719_662_4;
    let log1_5 = 0.176_091_259_055_681_2;
    let expected = [
        [2.0 * log3, log1_5, 0.0],
        [0.0, log1_5, log1_5],
        [0.0, 0.0, log1_5],
    ];
    let terms = w.vocab.terms().join(",");
    let mut worst = 0.0f64;
    for (d, row) in expected.iter().enumerate() {
        for (t, &x) in row.iter().enumerate() {
            worst = worst.max((w.weights.get(d, t) - x).abs());
        }
    }
    outcome(terms == "a,b,c" && worst <= 1e-12, format!("vocabulary [{terms}], max cell error {worst:.2e} (tol 1e-12)"))
}

fn svd_kernel() -> Result<Outcome> {
    let mut r = common::rng(2);
    let (mut recon, mut ortho) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let (n, m) = (r.random_range(1..=50), r.random_range(1..=50));
        let a = common::random_matrix(&mut r, n, m);
        let k = n.min(m);
        let svd = linalg::truncated_svd(&a, k, linalg::DEFAULT_TOL, linalg::DEFAULT_MAX_ITER)?;
        let mut diff = svd.reconstruct();
        for (x, y) in diff.as_mut_slice().iter_mut().zip(a.as_slice()) {
            *x -= y;
        }
        recon = recon.max(diff.frobenius_norm());
        let id = DenseMatrix::identity(k);
        ortho = ortho
            .max(svd.u.t_matmul(&svd.u).max_abs_diff(&id))
            .max(svd.v.t_matmul(&svd.v).max_abs_diff(&id));
    }
    outcome(
        recon <= 1e-8 && ortho <= 1e-8,
        format!("20 matrices: max reconstruction error {recon:.2e}, max orthogonality error {ortho:.2e} (tol 1e-8)"),
    )
}

fn nmf_monotonicity() -> Result<Outcome> {
    let cfg = |seed| NmfConfig {
        seed,
        max_iter: 500,
        tol: 0.0,
    };
    let mut r = common::rng(3);
    let mut worst_rise = f64::NEG_INFINITY;
    let mut short_runs = 0;
    for seed in 0..10 {
        let (n, m) = (r.random_range(5..=40), r.random_range(5..=40));
        let a = common::weights_of(common::random_nonnegative(&mut r, n, m));
        let k = r.random_range(1..=5);
        let fit = factor::nmf_fit(&a, k, &cfg(seed))?;
        if fit.iterations < 500 {
            short_runs += 1;
        }
        for pair in fit.objective.windows(2) {
            worst_rise = worst_rise.max(pair[1] - pair[0]);
        }
    }
    let u: Vec<f64> = (0..12).map(|i| 0.5 + i as f64 / 7.0).collect();
    let v: Vec<f64> = (0..9).map(|j| 1.0 + (j as f64).sqrt()).collect();
    let rank1 = DenseMatrix::from_vec(12, 9, u.iter().flat_map(|x| v.iter().map(move |y| x * y)).collect())?;
    let exact = factor::nmf_fit(&common::weights_of(rank1), 1, &cfg(7))?;
    let final_obj = *exact.objective.last().unwrap();
    outcome(
        worst_rise <= 1e-9 && short_runs == 0 && final_obj <= 1e-6,
        format!(
            "largest step increase {worst_rise:.2e} (slack 1e-9), runs stopped before 500 iterations: {short_runs}, rank-1 objective {final_obj:.2e} (tol 1e-6)"
        ),
    )
}

fn lda_correctness() -> Result<Outcome> {
    let counts = common::random_counts(4, 50, 30);
    let cfg = LdaConfig {
        k: 4,
        seed: 4,
        ..LdaConfig::default()
    };
    let mut sampler = GibbsSampler::new(&counts, cfg)?;
    let sweeps = 100;
    let consistent = (0..sweeps).all(|_| {
        sampler.sweep();
        sampler.counts_consistent()
    });

    let single = LdaConfig {
        k: 1,
        iterations: 20,
        burn_in: 10,
        sample_lag: 5,
        ..LdaConfig::default()
    };
    let model = lda::lda_fit(&counts, &single)?;
    let total = counts.total() as f64;
    let v = counts.n_terms() as f64;
    let mut phi_err = 0.0f64;
    for t in 0..counts.n_terms() {
        let n_t: u32 = (0..counts.n_docs()).map(|d| counts.get(d, t)).sum();
        let analytic = (n_t as f64 + single.beta) / (total + v * single.beta);
        phi_err = phi_err.max((model.topic_term.get(0, t) - analytic).abs());
    }

    let (two, truth) = common::two_topic_corpus(5, 40, 10, 50);
    let fit = lda::lda_fit(
        &two,
        &LdaConfig {
            k: 2,
            seed: 5,
            iterations: 200,
            burn_in: 100,
            ..LdaConfig::default()
        },
    )?;
    let mass = |swap: bool| -> Vec<f64> {
        truth
            .iter()
            .enumerate()
            .map(|(d, &g)| fit.doc_topic.get(d, if swap { 1 - g } else { g }))
            .collect()
    };
    let (straight, swapped) = (mass(false), mass(true));
    let best = if straight.iter().sum::<f64>() >= swapped.iter().sum::<f64>() {
        straight
    } else {
        swapped
    };
    let recovered = best.iter().filter(|&&m| m >= 0.8).count() as f64 / best.len() as f64;
    outcome(
        consistent && phi_err <= 1e-12 && recovered >= 0.9,
        format!(
            "recount consistent over {sweeps} sweeps: {consistent}, k=1 phi error {phi_err:.2e} (tol 1e-12), docs recovered {:.0}% (need 90%)",
            100.0 * recovered
        ),
    )
}

fn mca_inertia_identity() -> Result<Outcome> {
    let mut worst = 0.0f64;
    for seed in 0..10 {
        let table = common::random_category_table(100 + seed);
        let ind = mca::build_indicator(&table)?;
        let model = mca::mca_fit_at_most(&ind, 2)?;
        let (j, q) = (ind.columns.len() as f64, ind.q as f64);
        let identity = (j - q) / q;
        let spectrum: f64 = model.principal_inertias.iter().sum();
        worst = worst
            .max((common::chi_square_inertia(&ind) - identity).abs())
            .max((model.total_inertia - identity).abs())
            .max((spectrum - identity).abs());
    }
    outcome(
        worst <= 1e-10,
        format!("10 tables: max deviation of chi-square, reported and spectral inertia from (J-Q)/Q {worst:.2e} (tol 1e-10)"),
    )
}

fn hand4_network() -> Result<Outcome> {
    let meta = corpus::load_metadata(&common::metadata_path())?;
    let table = CategoryTable::new(
        vec!["hand".into(), "subject".into()],
        meta.rows().iter().map(|r| r.page.clone()).collect(),
        meta.rows()
            .iter()
            .map(|r| vec![r.hand.to_string(), r.subject.as_str().to_string()])
            .collect(),
    )?;
    let g = graph::build_category_graph(&table, "hand", "subject")?;
    let hand4 = node_id("hand", "4");
    let edge = g.weight(&hand4, &node_id("subject", "astrological"));
    let total = g.degree(&hand4);
    let share = if total == 0 { 0.0 } else { edge as f64 / total as f64 };
    outcome(
        edge > 0 && share >= 0.9,
        format!("hand 4 astrological edge weight {edge} of {total} ({:.1}%, need 90%)", 100.0 * share),
    )
}

fn determinism() -> Result<Outcome> {
    let (input, which) = match common::reference_input() {
        Some(i) => (i, "reference"),
        None => (common::sample_input(), "sample"),
    };
    let mut o = common::identical_runs("analysis3", input)?;
    o.detail = format!("{which} corpus: {}", o.detail);
    Ok(o)
}

fn reproduction(corpus: &Option<Result<Corpus>>, check: fn(&Corpus) -> Result<Outcome>) -> Result<Outcome> {
    match corpus {
        None => outcome(
            false,
            "reference transcription not found; set FOLIO_TOPICS_TRANSCRIPTION or add data/reference/transcription.evt",
        ),
        Some(Err(e)) => outcome(false, format!("reference transcription unreadable: {e}")),
        Some(Ok(c)) => check(c),
    }
}

fn main() {
    let reference = common::reference_input().map(|i| Corpus::load(&i));
    let criteria: Vec<(&str, Box<dyn Fn() -> Result<Outcome>>)> = vec![
        ("tf-idf exactness", Box::new(tfidf_exactness)),
        ("SVD kernel", Box::new(svd_kernel)),
        ("NMF monotonicity", Box::new(nmf_monotonicity)),
        ("LDA correctness", Box::new(lda_correctness)),
        ("MCA inertia identity", Box::new(mca_inertia_identity)),
        ("Currier language split", Box::new(|| reproduction(&reference, common::currier_split))),
        ("astrology near hand 4", Box::new(|| reproduction(&reference, common::astrology_hand4))),
        ("LDA dominant topic", Box::new(|| reproduction(&reference, common::lda_dominance))),
        ("subsampling robustness", Box::new(|| reproduction(&reference, common::subsampling_robustness))),
        ("hand 4 network edge", Box::new(hand4_network)),
        ("end-to-end determinism", Box::new(determinism)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = std::time::Instant::now();
        let o = check().unwrap_or_else(|e| Outcome {
            passed: false,
            detail: format!("error: {e}"),
        });
        if !o.passed {
            failed += 1;
        }
        println!(
            "{} [{:>2}] {name}: {} ({:.1}s)",
            if o.passed { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
