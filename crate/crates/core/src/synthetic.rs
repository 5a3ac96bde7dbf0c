//! Seeded synthetic bilingual corpora with a fixed per-(language, label)
//! distribution, for demos and tests at desk scale.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, Label, Lang, Sample, Split};
use crate::error::Result;

/// Cell counts of the shared-task training split.
pub const TRAIN_CELLS: [(Lang, Label, usize); 4] = [
    (Lang::Hi, Label::NonHate, 7376),
    (Lang::Ne, Label::NonHate, 9429),
    (Lang::Hi, Label::Hate, 679),
    (Lang::Ne, Label::Hate, 1535),
];

/// Cell counts of the shared-task evaluation split.
pub const EVAL_CELLS: [(Lang, Label, usize); 4] = [
    (Lang::Hi, Label::NonHate, 1596),
    (Lang::Ne, Label::NonHate, 2006),
    (Lang::Hi, Label::Hate, 142),
    (Lang::Ne, Label::Hate, 332),
];

const HI_WORDS: &[&str] = &[
    "आज",
    "मौसम",
    "अच्छा",
    "है",
    "हम",
    "बाजार",
    "जा",
    "रहे",
    "हैं",
    "खेल",
    "देखा",
    "सुंदर",
    "दिन",
    "दोस्त",
    "घर",
    "पानी",
    "किताब",
    "पढ़ी",
    "गाना",
    "सुना",
    "शहर",
    "नया",
    "काम",
    "शुरू",
    "चाय",
    "पी",
    "रेल",
    "समय",
];

const NE_WORDS: &[&str] = &[
    "आज",
    "मौसम",
    "राम्रो",
    "छ",
    "हामी",
    "बजार",
    "जाँदैछौं",
    "खेल",
    "हेर्यौं",
    "सुन्दर",
    "दिन",
    "साथी",
    "घर",
    "पानी",
    "किताब",
    "पढें",
    "गीत",
    "सुनें",
    "सहर",
    "नयाँ",
    "काम",
    "सुरु",
    "चिया",
    "पिएँ",
    "बस",
    "समय",
];

const HI_HATE: &[&str] = &["गंदे", "बेकार", "निकालो", "घटिया", "भगाओ", "नफरत", "गद्दार"];

const NE_HATE: &[&str] = &["फोहोरी", "बेकामे", "निकाल", "घटिया", "धपाऊ", "घृणा", "गद्दार"];

/// Scales `cells` to `total` samples by the largest-remainder method, so the
/// result sums to `total` exactly.
pub fn scale_cells(cells: &[(Lang, Label, usize)], total: usize) -> Vec<(Lang, Label, usize)> {
    let full: usize = cells.iter().map(|c| c.2).sum();
    if full == 0 {
        return cells.iter().map(|&(l, y, _)| (l, y, 0)).collect();
    }
    let mut out: Vec<(Lang, Label, usize)> = Vec::with_capacity(cells.len());
    let mut rems: Vec<(usize, usize)> = Vec::with_capacity(cells.len());
    for (i, &(lang, label, n)) in cells.iter().enumerate() {
        let exact = n * total;
        out.push((lang, label, exact / full));
        rems.push((exact % full, i));
    }
    let assigned: usize = out.iter().map(|c| c.2).sum();
    // Largest remainder first; ties go to the earlier cell.
    rems.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, i) in rems.iter().take(total - assigned) {
        out[i].2 += 1;
    }
    out
}

fn sentence(rng: &mut ChaCha8Rng, lang: Lang, label: Label) -> String {
    let (words, hate) = match lang {
        Lang::Hi => (HI_WORDS, HI_HATE),
        Lang::Ne => (NE_WORDS, NE_HATE),
    };
    let len = rng.gen_range(5..=12);
    let mut tokens: Vec<&str> = (0..len).map(|_| *words.choose(rng).expect("non-empty")).collect();
    // Markers are a strong but imperfect signal in both directions.
    let markers = match label {
        Label::Hate if rng.gen_bool(0.85) => rng.gen_range(1..=2),
        Label::NonHate if rng.gen_bool(0.04) => 1,
        _ => 0,
    };
    for _ in 0..markers {
        let at = rng.gen_range(0..=tokens.len());
        tokens.insert(at, hate.choose(rng).expect("non-empty"));
    }
    tokens.join(" ")
}

/// Builds a labeled corpus with exactly the given cell counts. Ids start at
/// `first_id`; samples of different cells are interleaved by a seeded
/// shuffle.
pub fn synthetic_corpus(split: Split, cells: &[(Lang, Label, usize)], first_id: u64, seed: u64) -> Result<Corpus> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut slots: Vec<(Lang, Label)> = cells
        .iter()
        .flat_map(|&(lang, label, n)| std::iter::repeat_n((lang, label), n))
        .collect();
    slots.shuffle(&mut rng);
    let samples = slots
        .into_iter()
        .zip(first_id..)
        .map(|((lang, label), id)| Sample::labeled(id, sentence(&mut rng, lang, label), label, Some(lang)))
        .collect();
    Corpus::new(split, samples)
}

/// A `total`-sample training split plus an evaluation split scaled by the
/// same factor, both with the shared-task proportions.
pub fn synthetic_pair(train_total: usize, seed: u64) -> Result<(Corpus, Corpus)> {
    let full_train: usize = TRAIN_CELLS.iter().map(|c| c.2).sum();
    let full_eval: usize = EVAL_CELLS.iter().map(|c| c.2).sum();
    let eval_total = ((train_total * full_eval) as f64 / full_train as f64).round().max(1.0) as usize;
    let train = synthetic_corpus(Split::Train, &scale_cells(&TRAIN_CELLS, train_total), 0, seed)?;
    let eval = synthetic_corpus(
        Split::Evaluation,
        &scale_cells(&EVAL_CELLS, eval_total),
        train_total as u64,
        seed.wrapping_add(1),
    )?;
    Ok((train, eval))
}
