//! Formula corpora for the equivalence sweeps: an exhaustive micro corpus,
//! seeded random 3-CNFs and a few fixed regression formulas.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cnf::{normalize_to_3cnf, parse_dimacs, Clause, Formula, Literal};

pub const DEFAULT_SEED: u64 = 0x5a7_2_7ac;
pub const DEFAULT_COUNT: usize = 500;
pub const DEFAULT_MAX_VARIABLES: usize = 8;
pub const DEFAULT_MAX_CLAUSES: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusEntry {
    pub label: String,
    pub formula: Formula,
}

/// Every 3-CNF over two variables with at most two clauses, up to the order
/// of literals within a clause and of clauses within the formula.
pub fn micro_corpus() -> Vec<Formula> {
    let literals = [
        Literal::positive(1),
        Literal::negative(1),
        Literal::positive(2),
        Literal::negative(2),
    ];
    let mut clauses = Vec::new();
    for a in 0..4 {
        for b in a..4 {
            for c in b..4 {
                clauses.push(Clause::new(literals[a], literals[b], literals[c]));
            }
        }
    }
    let formula = |cs: Vec<Clause>| Formula::new(2, cs).expect("two variables declared");
    let mut out = vec![formula(Vec::new())];
    for (i, &first) in clauses.iter().enumerate() {
        out.push(formula(vec![first]));
        for &second in &clauses[i..] {
            out.push(formula(vec![first, second]));
        }
    }
    out
}

/// `count` random 3-CNFs with 1..=`max_variables` variables and
/// 1..=`max_clauses` clauses, literals drawn uniformly.
pub fn random_corpus(
    seed: u64,
    count: usize,
    max_variables: usize,
    max_clauses: usize,
) -> Vec<Formula> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.gen_range(1..=max_variables.max(1));
            let m = rng.gen_range(1..=max_clauses.max(1));
            draw(&mut rng, n, m)
        })
        .collect()
}

/// One random 3-CNF with exactly `n` variables and `m` clauses.
pub fn random_formula(seed: u64, n: usize, m: usize) -> Formula {
    draw(&mut ChaCha8Rng::seed_from_u64(seed), n, m)
}

fn draw(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Formula {
    let mut lit = || {
        let v = rng.gen_range(1..=n as u32);
        if rng.gen_bool(0.5) {
            Literal::positive(v)
        } else {
            Literal::negative(v)
        }
    };
    let clauses = (0..m).map(|_| Clause::new(lit(), lit(), lit())).collect();
    Formula::new(n, clauses).expect("literals drawn from declared variables")
}

/// Hand-picked formulas that every sweep includes.
pub fn regression_corpus() -> Vec<CorpusEntry> {
    let entry = |label: &str, dimacs: &str| CorpusEntry {
        label: label.to_string(),
        formula: normalize_to_3cnf(&parse_dimacs(dimacs).expect("valid regression formula"))
            .formula,
    };
    let mut all_eight = String::from("p cnf 3 8\n");
    for bits in 0..8 {
        for v in 1..=3 {
            let sign = if bits >> (v - 1) & 1 == 1 { -1 } else { 1 };
            all_eight.push_str(&format!("{} ", sign * v));
        }
        all_eight.push_str("0\n");
    }
    vec![
        entry("empty", "p cnf 0 0\n"),
        entry("unit", "p cnf 1 1\n1 0\n"),
        entry("contradiction", "p cnf 1 2\n1 0\n-1 0\n"),
        entry("single-clause", "p cnf 4 1\n1 -3 4 0\n"),
        entry("all-eight-clauses", &all_eight),
    ]
}

/// Regression formulas first, then seeded random formulas up to `total` entries.
pub fn default_corpus(seed: u64, total: usize, max_variables: usize, max_clauses: usize) -> Vec<CorpusEntry> {
    let mut entries = regression_corpus();
    entries.truncate(total);
    let fill = total - entries.len();
    entries.extend(
        random_corpus(seed, fill, max_variables, max_clauses)
            .into_iter()
            .enumerate()
            .map(|(i, formula)| CorpusEntry {
                label: format!("random-{i}"),
                formula,
            }),
    );
    entries
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::sat_oracle;
    use std::collections::HashSet;

    #[test]
    fn micro_corpus_is_complete_and_duplicate_free() {
        let corpus = micro_corpus();
        assert_eq!(corpus.len(), 1 + 20 + 210);
        let canonical: HashSet<Vec<Vec<i64>>> = corpus
            .iter()
            .map(|f| {
                let mut cs: Vec<Vec<i64>> = f
                    .clauses()
                    .iter()
                    .map(|c| {
                        let mut l: Vec<i64> = c.literals.iter().map(|l| l.to_dimacs()).collect();
                        l.sort_unstable();
                        l
                    })
                    .collect();
                cs.sort();
                cs
            })
            .collect();
        assert_eq!(canonical.len(), corpus.len());
    }

    #[test]
    fn random_corpus_is_seeded_and_in_range() {
        let a = random_corpus(3, 50, 8, 12);
        assert_eq!(a, random_corpus(3, 50, 8, 12));
        assert_ne!(a, random_corpus(4, 50, 8, 12));
        for f in &a {
            assert!((1..=8).contains(&f.num_variables()));
            assert!((1..=12).contains(&f.num_clauses()));
        }
    }

    #[test]
    fn fixed_size_formulas_have_the_requested_shape() {
        let f = random_formula(1, 30, 90);
        assert_eq!((f.num_variables(), f.num_clauses()), (30, 90));
        assert_eq!(f, random_formula(1, 30, 90));
    }

    #[test]
    fn regressions_have_known_answers() {
        let answers: Vec<bool> = regression_corpus()
            .iter()
            .map(|e| sat_oracle(&e.formula).unwrap().is_some())
            .collect();
        assert_eq!(answers, vec![true, true, false, true, false]);
    }

    #[test]
    fn default_corpus_has_requested_size() {
        let c = default_corpus(DEFAULT_SEED, DEFAULT_COUNT, 8, 12);
        assert_eq!(c.len(), DEFAULT_COUNT);
        assert_eq!(c[2].label, "contradiction");
    }
}
