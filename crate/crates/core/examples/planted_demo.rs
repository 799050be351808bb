//! Fits a small anchored model on a synthetic two-cluster corpus and prints
//! the recovered topics, their keywords and the TC trajectory.
//!
//! Run with `cargo run --example planted_demo`.

use anchorex::corex::{fit, label, tc_bound, top_words, FitOptions, SeedSet};
use anchorex::preprocess::{build_vocabulary, vectorize};
use anchorex::rng::SplitMix64;

fn main() {
    let mut rng = SplitMix64::new(3);
    let mut docs = Vec::new();
    for d in 0..100 {
        let prefix = if d < 50 { "apple" } else { "metro" };
        let mut doc = vec![format!("{prefix}0")];
        for w in 1..=5 {
            if rng.next_f64() < 0.6 {
                doc.push(format!("{prefix}{w}"));
            }
        }
        docs.push(doc);
    }
    let ids: Vec<String> = (0..docs.len()).map(|i| i.to_string()).collect();

    let vocab = build_vocabulary(&docs, 1, 1000, &[]).expect("vocabulary");
    let matrix = vectorize(&docs, &ids, &vocab).expect("matrix");
    let seeds = SeedSet::new(vec![vec!["apple0".into()], vec!["metro0".into()]], 2.0)
        .expect("seed set");
    let opts = FitOptions {
        n_topics: 2,
        n_iter: 100,
        rng_seed: 11,
        threads: 1,
    };
    let model = fit(&matrix, &vocab, &seeds, &opts).expect("fit");

    println!(
        "converged after {} iterations, TC bound {:.4} nats",
        model.tc_history.len(),
        tc_bound(&model).unwrap()
    );
    for topic in 0..model.n_topics {
        let words = top_words(&model, &vocab, topic, 5).unwrap();
        println!("topic {topic}: {}", words.join(", "));
    }
    let labels = label(&model, &matrix).unwrap();
    let first_cluster = labels.iter().take(50).filter(|l| l.topic == 0).count();
    println!("{first_cluster}/50 docs of the first cluster labeled topic 0");
}
