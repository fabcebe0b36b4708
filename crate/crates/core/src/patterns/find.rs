use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::count::count_3aps_fft;
use super::Configuration;
use crate::bohr::BohrSet;
use crate::error::{Error, Result};
use crate::intset::IntSet;

/// Outcome of an exhaustive search. `Inconclusive` means some root ran out
/// of budget before anything was found; it is never reported as `None`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Search {
    Found { configuration: Configuration },
    None { roots: u64 },
    Inconclusive { root: i64, budget: u64 },
}

impl Search {
    pub fn found(&self) -> Option<&Configuration> {
        match self {
            Search::Found { configuration } => Some(configuration),
            _ => None,
        }
    }
}

enum Root {
    Found(Vec<i64>),
    Exhausted,
    OutOfBudget,
}

struct Clique<'a> {
    set: &'a IntSet,
    s: usize,
    budget: u64,
    visited: u64,
}

impl Clique<'_> {
    fn extend(&mut self, chosen: &mut Vec<i64>, cands: &[i64]) -> Option<bool> {
        if chosen.len() == self.s {
            return Some(true);
        }
        for (k, &y) in cands.iter().enumerate() {
            self.visited += 1;
            if self.visited > self.budget {
                return None;
            }
            let next: Vec<i64> = cands[k + 1..]
                .iter()
                .copied()
                .filter(|&z| self.set.contains((y + z) / 2))
                .collect();
            if chosen.len() + 1 + next.len() < self.s {
                continue;
            }
            chosen.push(y);
            if self.extend(chosen, &next)? {
                return Some(true);
            }
            chosen.pop();
        }
        Some(false)
    }
}

fn search_root(set: &IntSet, s: usize, x: i64, budget: u64) -> Root {
    let cands: Vec<i64> = set
        .iter()
        .filter(|&y| y > x && (y - x) % 2 == 0 && set.contains((x + y) / 2))
        .collect();
    if cands.len() + 1 < s {
        return Root::Exhausted;
    }
    let mut clique = Clique {
        set,
        s,
        budget,
        visited: 0,
    };
    let mut chosen = vec![x];
    match clique.extend(&mut chosen, &cands) {
        Some(true) => Root::Found(chosen),
        Some(false) => Root::Exhausted,
        None => Root::OutOfBudget,
    }
}

/// Search `A` for a nontrivial `s`-configuration anywhere inside its extent.
///
/// Roots are tried in increasing order and the lowest root that finds a
/// configuration (or runs out of its `budget` of search nodes) decides the
/// result, so the answer does not depend on scheduling. For `s = 2` the
/// answer is cross-checked against an exact convolution count.
pub fn find_configuration(set: &IntSet, s: usize, budget: u64) -> Result<Search> {
    if s < 2 {
        return Err(Error::Invalid(format!("s must be at least 2, got {s}")));
    }
    let roots = set.as_slice();
    let decided = roots.par_iter().find_map_first(|&x| match search_root(set, s, x, budget) {
        Root::Found(pts) => Some(Ok(pts)),
        Root::OutOfBudget => Some(Err(x)),
        Root::Exhausted => None,
    });
    let result = match decided {
        Some(Ok(pts)) => Search::Found {
            configuration: Configuration::from_points(&pts).expect("points share parity"),
        },
        Some(Err(root)) => Search::Inconclusive { root, budget },
        None => Search::None {
            roots: roots.len() as u64,
        },
    };
    if s == 2 {
        let aps = count_3aps_fft(set);
        match (&result, aps) {
            (Search::Found { .. }, 0) | (Search::None { .. }, 1..) => {
                return Err(Error::Invalid(format!(
                    "3-AP count {aps} disagrees with direct search result {result:?}"
                )));
            }
            (Search::Inconclusive { .. }, 0) => {
                return Ok(Search::None {
                    roots: set.len() as u64,
                });
            }
            _ => {}
        }
    }
    Ok(result)
}

/// Search with `a ∈ Λ` and `n_i ∈ Λ_i`, the `n_i` pairwise distinct.
/// The returned configuration keeps the `n_i` in their slots.
pub fn find_configuration_in_bohr(
    set: &IntSet,
    outer: &BohrSet,
    inner: &[BohrSet],
    budget: u64,
) -> Result<Search> {
    let s = inner.len();
    if s < 2 {
        return Err(Error::Invalid(format!("s must be at least 2, got {s}")));
    }
    let decided = outer.elements().par_iter().find_map_first(|&a| {
        let mut ns = Vec::with_capacity(s);
        let mut visited = 0u64;
        match bohr_extend(set, inner, a, &mut ns, &mut visited, budget) {
            Some(true) => Some(Ok(Configuration::new(a, ns))),
            Some(false) => None,
            None => Some(Err(a)),
        }
    });
    Ok(match decided {
        Some(Ok(configuration)) => Search::Found { configuration },
        Some(Err(root)) => Search::Inconclusive { root, budget },
        None => Search::None {
            roots: outer.len() as u64,
        },
    })
}

fn bohr_extend(
    set: &IntSet,
    inner: &[BohrSet],
    a: i64,
    ns: &mut Vec<i64>,
    visited: &mut u64,
    budget: u64,
) -> Option<bool> {
    let k = ns.len();
    if k == inner.len() {
        return Some(true);
    }
    for &n in inner[k].elements() {
        *visited += 1;
        if *visited > budget {
            return None;
        }
        if !set.contains(2 * n + a) || ns.contains(&n) || !ns.iter().all(|&m| set.contains(m + n + a)) {
            continue;
        }
        ns.push(n);
        if bohr_extend(set, inner, a, ns, visited, budget)? {
            return Some(true);
        }
        ns.pop();
    }
    Some(false)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn find(xs: &[i64], s: usize) -> Search {
        find_configuration(&IntSet::new(xs.to_vec()), s, 1_000_000).unwrap()
    }

    #[test]
    fn small_examples() {
        assert_eq!(
            find(&[1, 2, 3], 2).found().unwrap(),
            &Configuration::new(1, vec![0, 1])
        );
        let c = find(&[0, 1, 2, 3, 4], 3).found().unwrap().clone();
        assert!(c.is_nontrivial());
        assert!(c.lies_in(&IntSet::new(vec![0, 1, 2, 3, 4])));
        assert!(matches!(find(&[1, 2, 4], 2), Search::None { .. }));
        assert!(matches!(find(&[], 2), Search::None { .. }));
    }

    #[test]
    fn budget_trip_is_inconclusive() {
        let set = IntSet::new((0..60).collect());
        assert_eq!(
            find_configuration(&set, 4, 2).unwrap(),
            Search::Inconclusive { root: 0, budget: 2 }
        );
    }
}
