use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::formula::Formula;
use crate::error::{Error, Result};

/// Ultimately periodic sequence `prefix · cycle^ω`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lasso<T> {
    pub prefix: Vec<T>,
    pub cycle: Vec<T>,
}

impl<T> Lasso<T> {
    pub fn new(prefix: Vec<T>, cycle: Vec<T>) -> Result<Self> {
        if cycle.is_empty() {
            return Err(Error::InvalidInput("lasso cycle is empty".into()));
        }
        Ok(Self { prefix, cycle })
    }

    pub fn len(&self) -> usize {
        self.prefix.len() + self.cycle.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Element at position `i` of the infinite unrolling.
    pub fn at(&self, i: usize) -> &T {
        if i < self.prefix.len() {
            &self.prefix[i]
        } else {
            &self.cycle[(i - self.prefix.len()) % self.cycle.len()]
        }
    }

    /// First `n` elements of the unrolling.
    pub fn unroll(&self, n: usize) -> Vec<&T> {
        (0..n).map(|i| self.at(i)).collect()
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Lasso<U> {
        let mut f = f;
        Lasso { prefix: self.prefix.iter().map(&mut f).collect(), cycle: self.cycle.iter().map(&mut f).collect() }
    }
}

pub type Letter = BTreeSet<String>;

/// Truth of `formula` at position 0 of `prefix · cycle^ω`.
pub fn eval_on_lasso(formula: &Formula, prefix: &[Letter], cycle: &[Letter]) -> Result<bool> {
    if cycle.is_empty() {
        return Err(Error::InvalidInput("lasso cycle is empty".into()));
    }
    let word: Vec<&Letter> = prefix.iter().chain(cycle).collect();
    let succ = |i: usize| if i + 1 < word.len() { i + 1 } else { prefix.len() };
    Ok(truth(formula, &word, &succ)[0])
}

/// Truth values at every position of the finite lasso graph. Until is the
/// least fixpoint of `b ∨ (a ∧ ○(a U b))`, computed by iteration.
fn truth(f: &Formula, word: &[&Letter], succ: &dyn Fn(usize) -> usize) -> Vec<bool> {
    let n = word.len();
    let until = |a: Vec<bool>, b: Vec<bool>| {
        let mut v = b.clone();
        loop {
            let mut changed = false;
            for i in (0..n).rev() {
                if !v[i] && a[i] && v[succ(i)] {
                    v[i] = true;
                    changed = true;
                }
            }
            if !changed {
                return v;
            }
        }
    };
    match f {
        Formula::True => vec![true; n],
        Formula::Atom(p) => word.iter().map(|l| l.contains(p)).collect(),
        Formula::Not(x) => truth(x, word, succ).into_iter().map(|v| !v).collect(),
        Formula::And(a, b) => {
            let (a, b) = (truth(a, word, succ), truth(b, word, succ));
            a.iter().zip(&b).map(|(x, y)| *x && *y).collect()
        }
        Formula::Or(a, b) => {
            let (a, b) = (truth(a, word, succ), truth(b, word, succ));
            a.iter().zip(&b).map(|(x, y)| *x || *y).collect()
        }
        Formula::Implies(a, b) => {
            let (a, b) = (truth(a, word, succ), truth(b, word, succ));
            a.iter().zip(&b).map(|(x, y)| !*x || *y).collect()
        }
        Formula::Next(x) => {
            let v = truth(x, word, succ);
            (0..n).map(|i| v[succ(i)]).collect()
        }
        Formula::Until(a, b) => until(truth(a, word, succ), truth(b, word, succ)),
        Formula::Eventually(x) => until(vec![true; n], truth(x, word, succ)),
        Formula::Always(x) => {
            let not_x = truth(x, word, succ).into_iter().map(|v| !v).collect();
            until(vec![true; n], not_x).into_iter().map(|v| !v).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::formula::parse;

    fn w(s: &str) -> Vec<Letter> {
        s.split(',')
            .filter(|x| !x.is_empty())
            .map(|l| l.chars().filter(|c| *c != '-').map(|c| c.to_string()).collect())
            .collect()
    }

    fn eval(f: &str, prefix: &str, cycle: &str) -> bool {
        eval_on_lasso(&parse(f).unwrap(), &w(prefix), &w(cycle)).unwrap()
    }

    #[test]
    fn basic_cases() {
        assert!(eval("[]a", "", "a,ab"));
        assert!(!eval("[]a", "", "a,b"));
        assert!(!eval("<>b", "a", "a,-"));
        assert!(eval("X a", "b", "a"));
        assert!(!eval("X a", "a", "b"));
        assert!(eval("a U b", "a,a", "b"));
        assert!(!eval("a U b", "a,-", "b"));
        assert!(eval("[]<>b", "-,-", "a,b"));
        assert!(!eval("<>[]a", "", "a,-"));
        assert!(eval("<>[]a", "-", "a"));
        assert!(eval("[]<>(a && <>b)", "", "a,-,b"));
    }

    #[test]
    fn empty_cycle_rejected() {
        assert!(eval_on_lasso(&Formula::True, &[], &[]).is_err());
    }

    #[test]
    fn unroll_wraps_into_cycle() {
        let l = Lasso::new(vec![1, 2], vec![3, 4]).unwrap();
        assert_eq!(l.unroll(7), vec![&1, &2, &3, &4, &3, &4, &3]);
    }
}
