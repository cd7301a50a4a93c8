#![allow(dead_code)]

use cherry_core::model::{Article, ArticleKind, BiasCategory, Corpus, Event, Outlet, Statement, TimeWindow};
use cherry_core::textproc::{DenseVector, HybridVector, SparseVector};
use chrono::{TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Explicit weighted concatenation `[sqrt(w) d, sqrt(1-w) s]` of the
/// unit-normalized blocks.
pub fn concat(v: &HybridVector, w: f64) -> Vec<f64> {
    let unit = |x: Vec<f64>| {
        let n = x.iter().map(|y| y * y).sum::<f64>().sqrt();
        if n == 0.0 { x } else { x.into_iter().map(|y| y / n).collect() }
    };
    let mut out: Vec<f64> = unit(v.dense.values().to_vec()).into_iter().map(|x| x * w.sqrt()).collect();
    out.extend(unit(v.sparse.to_dense()).into_iter().map(|x| x * (1.0 - w).sqrt()));
    out
}

pub fn plain_cosine(x: &[f64], y: &[f64]) -> f64 {
    let dot: f64 = x.iter().zip(y).map(|(p, q)| p * q).sum();
    let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    if nx == 0.0 || ny == 0.0 { 0.0 } else { dot / (nx * ny) }
}

pub fn concat_cosine(a: &HybridVector, b: &HybridVector, w: f64) -> f64 {
    plain_cosine(&concat(a, w), &concat(b, w))
}

/// Brute-force DBSCAN: full distance matrix, then the textbook expansion
/// with a growing seed list.
pub fn oracle_dbscan(points: &[HybridVector], eps: f64, min_points: usize, w: f64) -> Vec<Option<usize>> {
    let n = points.len();
    let flat: Vec<Vec<f64>> = points.iter().map(|p| concat(p, w)).collect();
    let dist: Vec<Vec<f64>> =
        (0..n).map(|i| (0..n).map(|j| 1.0 - plain_cosine(&flat[i], &flat[j])).collect()).collect();
    let region = |p: usize| -> Vec<usize> { (0..n).filter(|&q| q == p || dist[p][q] <= eps).collect() };
    let mut labels: Vec<Option<usize>> = vec![None; n];
    let mut visited = vec![false; n];
    let mut c = 0;
    for p in 0..n {
        if visited[p] {
            continue;
        }
        visited[p] = true;
        let nb = region(p);
        if nb.len() < min_points {
            continue;
        }
        labels[p] = Some(c);
        let mut seeds = nb;
        let mut k = 0;
        while k < seeds.len() {
            let q = seeds[k];
            k += 1;
            if !visited[q] {
                visited[q] = true;
                let nq = region(q);
                if nq.len() >= min_points {
                    seeds.extend(nq);
                }
            }
            if labels[q].is_none() {
                labels[q] = Some(c);
            }
        }
        c += 1;
    }
    labels
}

pub fn canonical(labels: &[Option<usize>]) -> Vec<Option<usize>> {
    let mut map = std::collections::HashMap::new();
    labels
        .iter()
        .map(|l| {
            l.map(|c| {
                let next = map.len();
                *map.entry(c).or_insert(next)
            })
        })
        .collect()
}

/// Points scattered around a few random centers in both blocks, so that a
/// small eps yields a mix of clusters, borders and noise.
pub fn clustered_points(seed: u64, n: usize, centers: usize, spread: f64) -> Vec<HybridVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dense_dim = 8;
    let sparse_dim = 12;
    let cs: Vec<(Vec<f64>, Vec<f64>)> = (0..centers)
        .map(|_| {
            let d = (0..dense_dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let s = (0..sparse_dim).map(|_| if rng.random_bool(0.4) { rng.random_range(0.1..1.0) } else { 0.0 }).collect();
            (d, s)
        })
        .collect();
    (0..n)
        .map(|i| {
            let (d, s) = &cs[i % centers];
            let d: Vec<f64> = d.iter().map(|x| x + rng.random_range(-spread..spread)).collect();
            let pairs: Vec<(u32, f64)> = s
                .iter()
                .enumerate()
                .filter(|(_, x)| **x > 0.0)
                .map(|(j, x)| (j as u32, (x + rng.random_range(-spread..spread)).max(0.01)))
                .collect();
            HybridVector {
                dense: DenseVector::new(d).normalized(),
                sparse: SparseVector::from_pairs(sparse_dim, pairs).normalized(),
            }
        })
        .collect()
}

/// Stationary distribution of the damped walk over the thresholded cosine
/// graph, from a dense linear solve of `(M^T - I) p = 0` with `sum p = 1`.
pub fn oracle_centrality(sentences: &[String], threshold: f64, damping: f64) -> Vec<f64> {
    use nalgebra::{DMatrix, DVector};
    let n = sentences.len();
    let tfidf = cherry_core::textproc::fit_tfidf(sentences).unwrap();
    let vecs: Vec<Vec<f64>> = sentences.iter().map(|s| tfidf.transform(s).to_dense()).collect();
    let mut b = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let sim = plain_cosine(&vecs[i], &vecs[j]);
            let nonzero = vecs[i].iter().any(|x| *x != 0.0) && vecs[j].iter().any(|x| *x != 0.0);
            if nonzero && sim >= threshold {
                b[(i, j)] = 1.0;
            }
        }
        let row_sum: f64 = b.row(i).sum();
        for j in 0..n {
            b[(i, j)] = if row_sum == 0.0 { 1.0 / n as f64 } else { b[(i, j)] / row_sum };
        }
    }
    let m = DMatrix::from_element(n, n, damping / n as f64) + b * (1.0 - damping);
    let mut a = m.transpose() - DMatrix::identity(n, n);
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = 1.0;
    a.lu().solve(&rhs).expect("singular system").iter().copied().collect()
}

/// Capitalized sentences of 3 to 8 words over a small vocabulary, so the
/// similarity graphs have a mix of edges and isolated nodes.
pub fn random_sentences(rng: &mut ChaCha8Rng, max: usize) -> Vec<String> {
    const WORDS: [&str; 18] = [
        "senate", "vote", "budget", "bill", "storm", "coast", "mayor", "court", "ruling", "tax", "plan", "rally",
        "police", "report", "vaccine", "doses", "border", "talks",
    ];
    let n = rng.random_range(1..=max);
    (0..n)
        .map(|_| {
            let len = rng.random_range(3..=8);
            let words: Vec<&str> = (0..len).map(|_| WORDS[rng.random_range(0..WORDS.len())]).collect();
            let mut s = words.join(" ");
            s[..1].make_ascii_uppercase();
            s.push('.');
            s
        })
        .collect()
}

/// Outlet `k` of [`event_corpus`] gets band `BAND_CYCLE[k % 5]`, so outlet0
/// is the Center one.
pub const BAND_CYCLE: [BiasCategory; 5] =
    [BiasCategory::Center, BiasCategory::Left, BiasCategory::Right, BiasCategory::LeftCenter, BiasCategory::RightCenter];

pub fn outlet(id: &str, band: BiasCategory) -> Outlet {
    Outlet {
        id: id.into(),
        name: format!("{id} Daily"),
        domain: format!("{id}.example.org"),
        bias_category: band,
        bias_ratings: Default::default(),
    }
}

pub fn ts(day: u32) -> chrono::DateTime<Utc> {
    Utc.with_ymd_and_hms(2021, 1, day, 9, 0, 0).unwrap()
}

/// One event with one article per entry of `per_article`, from outlet
/// `outlet{k}`, one statement per sentence.
pub fn event_corpus(per_article: &[Vec<&str>]) -> (Corpus, Event) {
    let mut articles = Vec::new();
    let mut statements = Vec::new();
    for (k, sentences) in per_article.iter().enumerate() {
        let outlet = format!("outlet{k}");
        let url = format!("https://{outlet}.example.org/story");
        let id = Article::derive_id(&outlet, &url);
        for (i, s) in sentences.iter().enumerate() {
            statements.push(Statement {
                id: Statement::derive_id(&id, i as u32),
                article_id: id.clone(),
                ordinal: i as u32,
                text: s.to_string(),
                word_count: s.split_whitespace().count() as u32,
            });
        }
        articles.push(Article {
            id,
            outlet_id: outlet,
            url,
            headline: format!("Story {k}"),
            body: sentences.join(" "),
            published_at: ts(1 + k as u32),
            kind: ArticleKind::News,
        });
    }
    let mut ids: Vec<String> = articles.iter().map(|a| a.id.clone()).collect();
    ids.sort();
    let event = Event {
        id: Event::derive_id(&ids),
        title: "Story".into(),
        article_ids: ids,
        window: TimeWindow { start: ts(1), end: ts(per_article.len() as u32) },
    };
    let outlets = (0..per_article.len()).map(|k| outlet(&format!("outlet{k}"), BAND_CYCLE[k % 5])).collect();
    let corpus = Corpus { outlets, articles, statements, events: vec![event.clone()], ..Default::default() };
    (corpus, event)
}

/// Sentence `k` of a pool whose members share no word token.
pub fn pool_sentence(k: usize) -> String {
    format!("Item{k}a item{k}b item{k}c item{k}d.")
}

/// A planted event: which pool sentences each document carries, and which
/// pool sentences are important.
#[derive(Debug, Clone)]
pub struct PlantedEvent {
    pub docs: Vec<Vec<usize>>,
    pub important: std::collections::BTreeSet<usize>,
}

impl PlantedEvent {
    pub fn random(rng: &mut ChaCha8Rng) -> Self {
        let pool = rng.random_range(3..12);
        let n_docs = rng.random_range(2..6);
        let docs: Vec<Vec<usize>> = (0..n_docs)
            .map(|_| {
                let mut d: Vec<usize> = (0..pool).filter(|_| rng.random_bool(0.5)).collect();
                if d.is_empty() {
                    d.push(rng.random_range(0..pool));
                }
                d
            })
            .collect();
        let used: std::collections::BTreeSet<usize> = docs.iter().flatten().copied().collect();
        let important = used.into_iter().filter(|_| rng.random_bool(0.4)).collect();
        Self { docs, important }
    }

    /// Every document carries every important sentence.
    pub fn all_present(rng: &mut ChaCha8Rng) -> Self {
        let mut e = Self::random(rng);
        for d in e.docs.iter_mut() {
            d.extend(e.important.iter().copied());
            d.sort();
            d.dedup();
        }
        e
    }

    pub fn important_texts(&self) -> Vec<String> {
        self.important.iter().map(|&k| pool_sentence(k)).collect()
    }

    pub fn build(&self) -> (Corpus, Event) {
        let texts: Vec<Vec<String>> = self.docs.iter().map(|d| d.iter().map(|&k| pool_sentence(k)).collect()).collect();
        let refs: Vec<Vec<&str>> = texts.iter().map(|d| d.iter().map(String::as_str).collect()).collect();
        event_corpus(&refs)
    }
}

/// c_i = I_e − present(d_i) by plain set arithmetic on statement texts.
/// Each important text is reported once, under its smallest statement id.
pub fn eq1_oracle(
    corpus: &Corpus,
    important: &std::collections::BTreeSet<String>,
) -> std::collections::BTreeMap<String, std::collections::BTreeSet<String>> {
    let mut rep: std::collections::BTreeMap<&str, &str> = std::collections::BTreeMap::new();
    for s in corpus.statements.iter().filter(|s| important.contains(&s.text)) {
        let e = rep.entry(s.text.as_str()).or_insert(s.id.as_str());
        if s.id.as_str() < *e {
            *e = s.id.as_str();
        }
    }
    corpus
        .articles
        .iter()
        .map(|a| {
            let present: std::collections::BTreeSet<&str> =
                corpus.statements.iter().filter(|s| s.article_id == a.id).map(|s| s.text.as_str()).collect();
            let missing = rep.iter().filter(|(t, _)| !present.contains(*t)).map(|(_, id)| id.to_string()).collect();
            (a.id.clone(), missing)
        })
        .collect()
}
pub mod synthetic;
