//! Enumeration of words over a finite generating set, with shared prefix
//! products.
//!
//! Words are sequences of generator indices. Two traversals are provided:
//! the full k-ary tree of words of a given length in lexicographic
//! depth-first order, and one representative per cyclic class (the
//! lexicographically smallest rotation) via the classic FKM recursion.
//! Both maintain a stack of running [`ScaledMatrix`] products so each tree
//! node costs exactly one matrix multiplication, and both charge that cost
//! against an explicit [`Budget`].

use crate::error::{Error, Result};
use crate::mat::{GroupFrame, ScaledMatrix, SquareMatrix};

pub type Letter = u8;

/// Default multiplication budget for enumeration passes.
pub const DEFAULT_BUDGET: u64 = 100_000_000;

/// Multiplication budget shared across an enumeration pass.
#[derive(Debug, Clone)]
pub struct Budget {
    limit: u64,
    used: u64,
}

impl Budget {
    pub fn new(limit: u64) -> Self {
        Self { limit, used: 0 }
    }

    pub fn unlimited() -> Self {
        Self { limit: u64::MAX, used: 0 }
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn remaining(&self) -> u64 {
        self.limit - self.used
    }

    /// Record `n` multiplications, failing once the limit is crossed.
    pub fn charge(&mut self, n: u64) -> Result<()> {
        let needed = self.used.saturating_add(n);
        if needed > self.limit {
            return Err(Error::BudgetExceeded { needed, budget: self.limit });
        }
        self.used = needed;
        Ok(())
    }

    /// Fail fast when a known upfront cost cannot fit.
    pub fn check_upfront(&self, cost: u64) -> Result<()> {
        let needed = self.used.saturating_add(cost);
        if needed > self.limit {
            return Err(Error::BudgetExceeded { needed, budget: self.limit });
        }
        Ok(())
    }
}

/// Multiplications needed to visit every word of length 1..=n over k
/// generators with prefix sharing: k + k² + … + kⁿ, saturating.
pub fn full_tree_cost(k: usize, n: usize) -> u64 {
    let k = k as u64;
    let mut cost: u64 = 0;
    let mut level: u64 = 1;
    for _ in 0..n {
        level = level.saturating_mul(k);
        cost = cost.saturating_add(level);
    }
    cost
}

/// Visit every word of length exactly `n` in lexicographic order together
/// with its product. The whole prefix tree is charged upfront.
pub fn for_each_product_at_level(
    gens: &[SquareMatrix],
    frame: &GroupFrame,
    n: usize,
    budget: &mut Budget,
    visit: &mut impl FnMut(&[Letter], &ScaledMatrix),
) -> Result<()> {
    check_gens(gens, frame)?;
    if n == 0 {
        return Err(Error::InvalidParams("word length must be at least 1".into()));
    }
    let cost = full_tree_cost(gens.len(), n);
    budget.check_upfront(cost)?;
    budget.charge(cost)?;
    let mut word = Vec::with_capacity(n);
    let root = ScaledMatrix::identity(frame);
    dfs_products(gens, &root, n, &mut word, visit);
    Ok(())
}

/// Visit every extension of `prefix_word` by exactly `n_more` letters, in
/// lexicographic order. `prefix` must be the product of `prefix_word`.
/// Charges only the subtree cost; used to fan the level out across threads
/// without changing the arithmetic of any word's product.
pub fn for_each_product_in_subtree(
    gens: &[SquareMatrix],
    prefix_word: &[Letter],
    prefix: &ScaledMatrix,
    n_more: usize,
    budget: &mut Budget,
    visit: &mut impl FnMut(&[Letter], &ScaledMatrix),
) -> Result<()> {
    let cost = full_tree_cost(gens.len(), n_more);
    budget.check_upfront(cost)?;
    budget.charge(cost)?;
    let mut word = prefix_word.to_vec();
    dfs_products(gens, prefix, n_more, &mut word, visit);
    Ok(())
}

fn dfs_products(
    gens: &[SquareMatrix],
    acc: &ScaledMatrix,
    remaining: usize,
    word: &mut Vec<Letter>,
    visit: &mut impl FnMut(&[Letter], &ScaledMatrix),
) {
    if remaining == 0 {
        visit(word, acc);
        return;
    }
    for (idx, g) in gens.iter().enumerate() {
        let next = acc.times(g);
        word.push(idx as Letter);
        dfs_products(gens, &next, remaining - 1, word, visit);
        word.pop();
    }
}

/// Visit every word of length 1..=n (every node of the prefix tree, not just
/// the leaves) in lexicographic depth-first order, with its product. The
/// whole tree is charged upfront.
pub fn for_each_prefix_product(
    gens: &[SquareMatrix],
    frame: &GroupFrame,
    n: usize,
    budget: &mut Budget,
    visit: &mut impl FnMut(&[Letter], &ScaledMatrix),
) -> Result<()> {
    check_gens(gens, frame)?;
    if n == 0 {
        return Err(Error::InvalidParams("word length must be at least 1".into()));
    }
    let cost = full_tree_cost(gens.len(), n);
    budget.check_upfront(cost)?;
    budget.charge(cost)?;
    let mut word = Vec::with_capacity(n);
    let root = ScaledMatrix::identity(frame);
    dfs_prefixes(gens, &root, n, &mut word, visit);
    Ok(())
}

/// Every-node variant of [`for_each_product_in_subtree`]: visits every strict
/// extension of `prefix_word` by 1..=n_more letters. The prefix node itself
/// is not re-visited.
pub fn for_each_prefix_product_in_subtree(
    gens: &[SquareMatrix],
    prefix_word: &[Letter],
    prefix: &ScaledMatrix,
    n_more: usize,
    budget: &mut Budget,
    visit: &mut impl FnMut(&[Letter], &ScaledMatrix),
) -> Result<()> {
    let cost = full_tree_cost(gens.len(), n_more);
    budget.check_upfront(cost)?;
    budget.charge(cost)?;
    let mut word = prefix_word.to_vec();
    dfs_prefixes(gens, prefix, n_more, &mut word, visit);
    Ok(())
}

fn dfs_prefixes(
    gens: &[SquareMatrix],
    acc: &ScaledMatrix,
    remaining: usize,
    word: &mut Vec<Letter>,
    visit: &mut impl FnMut(&[Letter], &ScaledMatrix),
) {
    if remaining == 0 {
        return;
    }
    for (idx, g) in gens.iter().enumerate() {
        let next = acc.times(g);
        word.push(idx as Letter);
        visit(word, &next);
        dfs_prefixes(gens, &next, remaining - 1, word, visit);
        word.pop();
    }
}

/// Visit one representative per cyclic class of words of length exactly `n`
/// (the lexicographically smallest rotation), with its product. FKM
/// recursion; each node costs one multiplication, charged as it happens.
pub fn for_each_necklace_product(
    gens: &[SquareMatrix],
    frame: &GroupFrame,
    n: usize,
    budget: &mut Budget,
    visit: &mut impl FnMut(&[Letter], &ScaledMatrix),
) -> Result<()> {
    check_gens(gens, frame)?;
    if n == 0 {
        return Err(Error::InvalidParams("word length must be at least 1".into()));
    }
    let k = gens.len();
    let mut a = vec![0 as Letter; n + 1];
    let mut prods = vec![ScaledMatrix::identity(frame); n + 1];
    fkm(gens, k, n, 1, 1, &mut a, &mut prods, budget, visit)
}

#[allow(clippy::too_many_arguments)]
fn fkm(
    gens: &[SquareMatrix],
    k: usize,
    n: usize,
    t: usize,
    p: usize,
    a: &mut Vec<Letter>,
    prods: &mut Vec<ScaledMatrix>,
    budget: &mut Budget,
    visit: &mut impl FnMut(&[Letter], &ScaledMatrix),
) -> Result<()> {
    if t > n {
        if n % p == 0 {
            visit(&a[1..=n], &prods[n]);
        }
        return Ok(());
    }
    let c = a[t - p];
    a[t] = c;
    budget.charge(1)?;
    prods[t] = prods[t - 1].times(&gens[c as usize]);
    fkm(gens, k, n, t + 1, p, a, prods, budget, visit)?;
    for j in (c + 1)..(k as Letter) {
        a[t] = j;
        budget.charge(1)?;
        prods[t] = prods[t - 1].times(&gens[j as usize]);
        fkm(gens, k, n, t + 1, t, a, prods, budget, visit)?;
    }
    Ok(())
}

/// Letters-only variant of the FKM traversal, for counting and for callers
/// that build their own products.
pub fn for_each_necklace(k: usize, n: usize, visit: &mut impl FnMut(&[Letter])) {
    assert!(k >= 1 && k <= 255 && n >= 1);
    let mut a = vec![0 as Letter; n + 1];
    fn rec(k: usize, n: usize, t: usize, p: usize, a: &mut Vec<Letter>, visit: &mut impl FnMut(&[Letter])) {
        if t > n {
            if n % p == 0 {
                visit(&a[1..=n]);
            }
            return;
        }
        let c = a[t - p];
        a[t] = c;
        rec(k, n, t + 1, p, a, visit);
        for j in (c + 1)..(k as Letter) {
            a[t] = j;
            rec(k, n, t + 1, t, a, visit);
        }
    }
    rec(k, n, 1, 1, &mut a, visit);
}

/// True when `w` is the lexicographically smallest of its rotations.
pub fn is_canonical_rotation(w: &[Letter]) -> bool {
    let n = w.len();
    for shift in 1..n {
        for i in 0..n {
            let a = w[i];
            let b = w[(i + shift) % n];
            match b.cmp(&a) {
                std::cmp::Ordering::Less => return false,
                std::cmp::Ordering::Greater => break,
                std::cmp::Ordering::Equal => continue,
            }
        }
    }
    true
}

/// Human-readable form of a word: generator labels joined by `.`, or a
/// compact letter string when every index is below 26.
pub fn word_label(word: &[Letter], gens: &[SquareMatrix]) -> String {
    let have_labels = gens.iter().all(|g| g.label().is_some());
    if have_labels {
        word.iter()
            .map(|&l| gens[l as usize].label().unwrap())
            .collect::<Vec<_>>()
            .join(".")
    } else if gens.len() <= 26 {
        word.iter()
            .map(|&l| (b'a' + l) as char)
            .collect()
    } else {
        word.iter()
            .map(|&l| format!("g{l}"))
            .collect::<Vec<_>>()
            .join(".")
    }
}

pub(crate) fn check_gens(gens: &[SquareMatrix], frame: &GroupFrame) -> Result<()> {
    if gens.is_empty() {
        return Err(Error::InvalidParams("generator set must be non-empty".into()));
    }
    if gens.len() > 255 {
        return Err(Error::InvalidParams("at most 255 generators supported".into()));
    }
    for g in gens {
        if g.dim() != frame.matrix_dim() {
            return Err(Error::DimensionMismatch(format!(
                "generator dim {} vs frame dim {}",
                g.dim(),
                frame.matrix_dim()
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::GroupFrame;

    fn two_gens() -> (Vec<SquareMatrix>, GroupFrame) {
        let a = SquareMatrix::from_rows(&[vec![2.0, 1.0], vec![3.0, 2.0]]);
        let b = SquareMatrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]);
        (vec![a, b], GroupFrame::sl(2))
    }

    #[test]
    fn full_level_visits_every_word_once() {
        let (gens, frame) = two_gens();
        let mut seen = Vec::new();
        let mut budget = Budget::unlimited();
        for_each_product_at_level(&gens, &frame, 3, &mut budget, &mut |w, _| {
            seen.push(w.to_vec());
        })
        .unwrap();
        assert_eq!(seen.len(), 8);
        let mut sorted = seen.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted, seen, "DFS must emit lexicographic order");
        assert_eq!(budget.used(), 2 + 4 + 8);
    }

    #[test]
    fn prefix_products_are_exact() {
        let (gens, frame) = two_gens();
        let mut budget = Budget::unlimited();
        for_each_product_at_level(&gens, &frame, 4, &mut budget, &mut |w, p| {
            let mut direct = SquareMatrix::identity(2);
            for &l in w {
                direct = direct.mul(&gens[l as usize]);
            }
            let got = p.cartan().unwrap();
            let want = crate::mat::cartan(&direct, &frame).unwrap();
            for (x, y) in got.coords.iter().zip(&want.coords) {
                assert!((x - y).abs() < 1e-9, "word {w:?}: {x} vs {y}");
            }
        })
        .unwrap();
    }

    #[test]
    fn prefix_walk_visits_every_node_once() {
        let (gens, frame) = two_gens();
        let mut budget = Budget::unlimited();
        let mut by_depth = [0usize; 4];
        let mut seen = Vec::new();
        for_each_prefix_product(&gens, &frame, 3, &mut budget, &mut |w, _| {
            by_depth[w.len()] += 1;
            seen.push(w.to_vec());
        })
        .unwrap();
        assert_eq!(by_depth, [0, 2, 4, 8]);
        let mut dedup = seen.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(dedup.len(), seen.len());
        assert_eq!(budget.used(), 2 + 4 + 8);
        // Subtree walk below the first letter covers that half of the nodes.
        let prefix = ScaledMatrix::identity(&frame).times(&gens[0]);
        let mut count = 0;
        for_each_prefix_product_in_subtree(&gens, &[0], &prefix, 2, &mut Budget::unlimited(), &mut |w, p| {
            assert_eq!(w[0], 0);
            assert!(w.len() >= 2 && w.len() <= 3);
            let mut direct = SquareMatrix::identity(2);
            for &l in w {
                direct = direct.mul(&gens[l as usize]);
            }
            let got = p.cartan().unwrap();
            let want = crate::mat::cartan(&direct, &frame).unwrap();
            for (x, y) in got.coords.iter().zip(&want.coords) {
                assert!((x - y).abs() < 1e-9);
            }
            count += 1;
        })
        .unwrap();
        assert_eq!(count, 2 + 4);
    }

    #[test]
    fn budget_is_enforced() {
        let (gens, frame) = two_gens();
        let mut budget = Budget::new(10);
        let err = for_each_product_at_level(&gens, &frame, 4, &mut budget, &mut |_, _| {});
        match err {
            Err(Error::BudgetExceeded { needed, budget }) => {
                assert_eq!(needed, 2 + 4 + 8 + 16);
                assert_eq!(budget, 10);
            }
            other => panic!("expected budget failure, got {other:?}"),
        }
    }

    #[test]
    fn necklace_counts_match_closed_form() {
        // Binary cyclic-class counts for n = 1..8.
        let expect = [2usize, 3, 4, 6, 8, 14, 20, 36];
        for (i, &want) in expect.iter().enumerate() {
            let mut count = 0;
            for_each_necklace(2, i + 1, &mut |_| count += 1);
            assert_eq!(count, want, "n = {}", i + 1);
        }
    }

    #[test]
    fn necklace_representatives_are_canonical_and_complete() {
        let (gens, frame) = two_gens();
        let n = 6;
        let mut reps = Vec::new();
        let mut budget = Budget::unlimited();
        for_each_necklace_product(&gens, &frame, n, &mut budget, &mut |w, _| {
            assert!(is_canonical_rotation(w), "{w:?} not canonical");
            reps.push(w.to_vec());
        })
        .unwrap();
        // Every word of length n must rotate onto exactly one representative.
        let mut covered = std::collections::HashSet::new();
        for rep in &reps {
            for shift in 0..n {
                let rotated: Vec<Letter> =
                    (0..n).map(|i| rep[(i + shift) % n]).collect();
                covered.insert(rotated);
            }
        }
        assert_eq!(covered.len(), 1 << n);
        assert_eq!(reps.len(), 14);
    }

    #[test]
    fn necklace_products_follow_their_words() {
        let (gens, frame) = two_gens();
        let mut budget = Budget::unlimited();
        for_each_necklace_product(&gens, &frame, 5, &mut budget, &mut |w, p| {
            let mut direct = SquareMatrix::identity(2);
            for &l in w {
                direct = direct.mul(&gens[l as usize]);
            }
            let got = p.jordan().unwrap();
            let want = crate::mat::jordan(&direct, &frame).unwrap();
            for (x, y) in got.coords.iter().zip(&want.coords) {
                assert!((x - y).abs() < 1e-9);
            }
        })
        .unwrap();
    }

    #[test]
    fn canonical_rotation_spot_checks() {
        assert!(is_canonical_rotation(&[0, 0, 1, 1]));
        assert!(!is_canonical_rotation(&[0, 1, 0, 1, 0, 0]));
        assert!(is_canonical_rotation(&[0, 1]));
        assert!(!is_canonical_rotation(&[1, 0]));
        assert!(is_canonical_rotation(&[1, 1, 1]));
    }

    #[test]
    fn word_labels() {
        let (mut gens, _) = two_gens();
        assert_eq!(word_label(&[0, 1, 0], &gens), "aba");
        gens[0] = gens[0].clone().with_label("A");
        gens[1] = gens[1].clone().with_label("B");
        assert_eq!(word_label(&[0, 1, 0], &gens), "A.B.A");
    }
}
