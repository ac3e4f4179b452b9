//! The retrieval stage end to end: build a small multi-modal record store,
//! retrieve the top-K matches of a query by cosine similarity, then re-rank
//! them with a weighted mix of similarity functions.
//!
//! Run: `cargo run --release --example rerank_pipeline`

use freshcontract::rerank::{
    mis_score, rerank, retrieve_top_k, FeatureRecord, Modality, SimilarityComponent,
    SimilarityFn, SimilaritySpec,
};

fn image(id: &str, vector: Vec<f64>, matrix: Vec<Vec<f64>>) -> FeatureRecord {
    FeatureRecord { id: id.into(), modality: Modality::Image, vector, matrix: Some(matrix) }
}

fn main() -> freshcontract::Result<()> {
    // Embeddings disagree with pixel structure on purpose: records B and C
    // have similar vectors, but C's pixels are the query's shifted copy.
    let query = image(
        "query",
        vec![0.9, 0.1, 0.2, 0.1],
        vec![vec![0.1, 0.5, 0.9], vec![0.2, 0.6, 1.0], vec![0.1, 0.4, 0.8]],
    );
    let db = vec![
        image(
            "scan-a",
            vec![0.1, 0.9, 0.8, 0.2],
            vec![vec![0.9, 0.5, 0.1], vec![1.0, 0.5, 0.1], vec![0.8, 0.4, 0.2]],
        ),
        image(
            "scan-b",
            vec![0.85, 0.15, 0.25, 0.1],
            vec![vec![0.9, 0.1, 0.9], vec![0.1, 0.9, 0.1], vec![0.9, 0.1, 0.9]],
        ),
        image(
            "scan-c",
            vec![0.8, 0.2, 0.2, 0.15],
            vec![vec![0.2, 0.6, 1.0], vec![0.3, 0.7, 1.0], vec![0.2, 0.5, 0.9]],
        ),
        image(
            "scan-d",
            vec![0.3, 0.3, 0.9, 0.4],
            vec![vec![0.5, 0.5, 0.5], vec![0.5, 0.6, 0.5], vec![0.5, 0.5, 0.4]],
        ),
    ];

    let retrieved = retrieve_top_k(&query, &db, 3)?;
    println!("top-3 by embedding cosine:");
    for r in &retrieved {
        println!("  {:<7} {:.4}", r.record.id, r.score);
    }

    let spec = SimilaritySpec {
        components: vec![
            SimilarityComponent { function: SimilarityFn::Cosine, weight: 0.4 },
            SimilarityComponent { function: SimilarityFn::Ncc, weight: 0.3 },
            SimilarityComponent { function: SimilarityFn::Ssim, weight: 0.3 },
        ],
        ssim_dynamic_range: 1.0,
    };
    println!("\nmixed similarity per candidate:");
    for r in &retrieved {
        println!("  {:<7} {:.4}", r.record.id, mis_score(&query, r.record, &spec)?);
    }

    let reranked = rerank(&query, &retrieved, &spec, 2)?;
    println!("\nre-ranked top-2:");
    for r in &reranked {
        println!("  {:<7} {:.4}", r.record.id, r.score);
    }
    println!("\nThe pixel-level components promote the structurally matching record");
    println!("over the one that merely shares an embedding direction.");
    Ok(())
}
