use std::collections::BTreeSet;

use pacepath_core::transcripts::Chunk;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const FILLER: &[&str] = &[
    "orbit", "planet", "energy", "signal", "gravity", "photon", "crust", "mantle", "layer", "motion", "speed",
    "mass", "field", "galaxy", "cloud", "dust", "ocean", "ridge", "plate", "stress", "light", "heat", "pressure",
    "cycle", "model", "sample", "measure", "distance", "angle", "surface", "density", "current", "boundary",
    "spectrum", "pulse", "record", "period", "scale", "wave", "medium", "climate", "ice", "rock", "core",
];

pub struct PlantedCorpus {
    pub chunks: Vec<Chunk>,
    pub lessons: Vec<String>,
    /// (marker, chunk_id, lesson_id): each marker occurs in exactly one chunk.
    pub markers: Vec<(String, String, String)>,
}

/// Random corpus of filler text with one unique marker token per chunk.
pub fn planted_corpus(seed: u64) -> PlantedCorpus {
    let mut rng = StdRng::seed_from_u64(seed);
    let n_lessons = rng.random_range(2..=8);
    let mut chunks = Vec::new();
    let mut markers = Vec::new();
    let mut lessons = Vec::new();
    for l in 0..n_lessons {
        let lesson = format!("lesson{l}");
        let mut t = 0.0;
        for c in 0..rng.random_range(1..=6) {
            let mut words: Vec<String> = (0..rng.random_range(15..60))
                .map(|_| FILLER[rng.random_range(0..FILLER.len())].to_string())
                .collect();
            let marker = format!("zq{seed}m{l}x{c}");
            let at = rng.random_range(0..=words.len());
            words.insert(at, marker.clone());
            let chunk_id = format!("{lesson}#{c}");
            let len = rng.random_range(20.0..70.0_f64).round();
            chunks.push(Chunk {
                chunk_id: chunk_id.clone(),
                lesson_id: lesson.clone(),
                start_seconds: t,
                end_seconds: t + len,
                text: words.join(" "),
            });
            markers.push((marker, chunk_id, lesson.clone()));
            t += len;
        }
        lessons.push(lesson);
    }
    PlantedCorpus { chunks, lessons, markers }
}

/// A random non-empty-or-empty subset of lessons and a random query mixing
/// filler words and at most one marker.
pub fn gated_query(corpus: &PlantedCorpus, rng: &mut StdRng) -> (BTreeSet<String>, String) {
    let allowed = corpus.lessons.iter().filter(|_| rng.random_bool(0.5)).cloned().collect();
    let mut words: Vec<String> = (0..rng.random_range(1..5))
        .map(|_| FILLER[rng.random_range(0..FILLER.len())].to_string())
        .collect();
    if rng.random_bool(0.5) {
        words.push(corpus.markers[rng.random_range(0..corpus.markers.len())].0.clone());
    }
    (allowed, words.join(" "))
}
