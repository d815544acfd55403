//! Semantic deduplication: the same flaw reported by three tools in three
//! wordings lands in one cluster, unrelated findings stay apart.
//!
//! cargo run -p triagebase --example semantic_dedup

use triagebase::dedup::{cosine, term_counts, LsiModel, SemanticIndex};
use triagebase::model::{RawId, ToolCategory};

fn main() {
    let texts = [
        "SQL injection query built from user input in load_orders python.security.sql-injection",
        "Possible SQL injection: user input flows into query in load_orders py/sql-injection",
        "load_orders builds SQL query from user input sql-injection-cwe89",
        "Hard coded credentials in settings module python.security.hardcoded-password",
        "Cross site scripting: template renders unescaped search term py/reflective-xss",
    ];
    let corpus: Vec<_> = texts.iter().map(|t| term_counts(t)).collect();

    let model = LsiModel::build(&corpus, 100);
    println!("vocabulary {} terms, rank {}\n", model.vocabulary.len(), model.rank());
    let projected: Vec<_> = corpus.iter().map(|d| model.project(d)).collect();
    println!("pairwise cosine in the latent space:");
    for (i, a) in projected.iter().enumerate() {
        let row: Vec<String> = projected.iter().map(|b| format!("{:5.2}", cosine(a, b))).collect();
        println!("  {i}: {}", row.join(" "));
    }

    let mut index = SemanticIndex::default();
    index.rebuild(&corpus, 100);
    println!("\nassignment at threshold 0.5:");
    for (i, terms) in corpus.into_iter().enumerate() {
        let a = index.assign_cluster(RawId::new(format!("raw-{i}")), terms, ToolCategory::StaticAnalysis, 0.5);
        match a.similarity.filter(|_| !a.created) {
            Some(sim) => println!("  {i} -> {} (joined, cosine {sim:.2})", a.agg_id),
            None => println!("  {i} -> {} (new cluster)", a.agg_id),
        }
    }
}
