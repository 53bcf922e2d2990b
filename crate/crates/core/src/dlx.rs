//! Dancing links enumeration of exact covers.
//!
//! All items are primary. The search picks the item with the fewest
//! remaining options first; [`ExactCovers`] yields each cover once as a
//! sorted list of option indices and can be dropped at any point.

/// Column headers occupy slots `1..=items`; slot 0 is the root.
pub struct ExactCovers {
    left: Vec<usize>,
    right: Vec<usize>,
    up: Vec<usize>,
    down: Vec<usize>,
    col: Vec<usize>,
    row: Vec<usize>,
    size: Vec<usize>,
    stack: Vec<usize>,
    state: State,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum State {
    Start,
    Backtrack,
    Done,
}

impl ExactCovers {
    /// `options[k]` lists the items (in `0..items`) covered by option `k`.
    ///
    /// # Panics
    /// If an option is empty, repeats an item, or names an item out of range.
    pub fn new(items: usize, options: &[Vec<usize>]) -> Self {
        let total = 1 + items + options.iter().map(Vec::len).sum::<usize>();
        let mut s = ExactCovers {
            left: Vec::with_capacity(total),
            right: Vec::with_capacity(total),
            up: Vec::with_capacity(total),
            down: Vec::with_capacity(total),
            col: Vec::with_capacity(total),
            row: Vec::with_capacity(total),
            size: vec![0; items + 1],
            stack: Vec::new(),
            state: State::Start,
        };
        for h in 0..=items {
            s.left.push(if h == 0 { items } else { h - 1 });
            s.right.push(if h == items { 0 } else { h + 1 });
            s.up.push(h);
            s.down.push(h);
            s.col.push(h);
            s.row.push(usize::MAX);
        }
        for (k, opt) in options.iter().enumerate() {
            assert!(!opt.is_empty(), "option {k} is empty");
            let first = s.col.len();
            for (j, &item) in opt.iter().enumerate() {
                assert!(item < items, "option {k} names item {item} out of range");
                assert!(!opt[..j].contains(&item), "option {k} repeats item {item}");
                let c = item + 1;
                let node = s.col.len();
                let last = first + opt.len() - 1;
                s.left.push(if node == first { last } else { node - 1 });
                s.right.push(if node == last { first } else { node + 1 });
                s.up.push(s.up[c]);
                s.down.push(c);
                s.col.push(c);
                s.row.push(k);
                let above = s.up[c];
                s.down[above] = node;
                s.up[c] = node;
                s.size[c] += 1;
            }
        }
        s
    }

    fn cover(&mut self, c: usize) {
        let (l, r) = (self.left[c], self.right[c]);
        self.right[l] = r;
        self.left[r] = l;
        let mut i = self.down[c];
        while i != c {
            let mut j = self.right[i];
            while j != i {
                let (u, d) = (self.up[j], self.down[j]);
                self.down[u] = d;
                self.up[d] = u;
                self.size[self.col[j]] -= 1;
                j = self.right[j];
            }
            i = self.down[i];
        }
    }

    fn uncover(&mut self, c: usize) {
        let mut i = self.up[c];
        while i != c {
            let mut j = self.left[i];
            while j != i {
                self.size[self.col[j]] += 1;
                let (u, d) = (self.up[j], self.down[j]);
                self.down[u] = j;
                self.up[d] = j;
                j = self.left[j];
            }
            i = self.up[i];
        }
        let (l, r) = (self.left[c], self.right[c]);
        self.right[l] = c;
        self.left[r] = c;
    }

    fn cover_row(&mut self, r: usize) {
        let mut j = self.right[r];
        while j != r {
            self.cover(self.col[j]);
            j = self.right[j];
        }
    }

    fn uncover_row(&mut self, r: usize) {
        let mut j = self.left[r];
        while j != r {
            self.uncover(self.col[j]);
            j = self.left[j];
        }
    }

    fn choose_column(&self) -> usize {
        let mut best = self.right[0];
        let mut c = best;
        while c != 0 {
            if self.size[c] < self.size[best] {
                best = c;
            }
            c = self.right[c];
        }
        best
    }

    fn solution(&self) -> Vec<usize> {
        let mut rows: Vec<usize> = self.stack.iter().map(|&n| self.row[n]).collect();
        rows.sort_unstable();
        rows
    }
}

impl Iterator for ExactCovers {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let mut backtracking = match self.state {
            State::Done => return None,
            State::Start => false,
            State::Backtrack => true,
        };
        loop {
            if backtracking {
                let Some(r) = self.stack.pop() else {
                    self.state = State::Done;
                    return None;
                };
                self.uncover_row(r);
                let c = self.col[r];
                let next = self.down[r];
                if next == c {
                    self.uncover(c);
                    continue;
                }
                self.stack.push(next);
                self.cover_row(next);
                backtracking = false;
            } else {
                if self.right[0] == 0 {
                    self.state = State::Backtrack;
                    return Some(self.solution());
                }
                let c = self.choose_column();
                if self.size[c] == 0 {
                    backtracking = true;
                    continue;
                }
                self.cover(c);
                let r = self.down[c];
                self.stack.push(r);
                self.cover_row(r);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    /// Independent recursive enumerator: cover the smallest uncovered item
    /// with every compatible option.
    fn brute(items: usize, options: &[Vec<usize>]) -> BTreeSet<Vec<usize>> {
        fn go(items: usize, options: &[Vec<usize>], used: &mut Vec<bool>, chosen: &mut Vec<usize>, out: &mut BTreeSet<Vec<usize>>) {
            let Some(first) = (0..items).find(|&i| !used[i]) else {
                let mut s = chosen.clone();
                s.sort_unstable();
                out.insert(s);
                return;
            };
            for (k, o) in options.iter().enumerate() {
                if o.contains(&first) && o.iter().all(|&i| !used[i]) {
                    for &i in o {
                        used[i] = true;
                    }
                    chosen.push(k);
                    go(items, options, used, chosen, out);
                    chosen.pop();
                    for &i in o {
                        used[i] = false;
                    }
                }
            }
        }
        let mut out = BTreeSet::new();
        go(items, options, &mut vec![false; items], &mut Vec::new(), &mut out);
        out
    }

    #[test]
    fn knuth_example() {
        // TAOCP 7.2.2.1 (5): the unique cover is {0, 3, 4}.
        let options = vec![vec![2, 4], vec![0, 3, 6], vec![1, 2, 5], vec![0, 3, 5], vec![1, 6], vec![3, 4, 6]];
        let all: Vec<_> = ExactCovers::new(7, &options).collect();
        assert_eq!(all, vec![vec![0, 3, 4]]);
    }

    #[test]
    fn single_item() {
        let all: Vec<_> = ExactCovers::new(1, &[vec![0]]).collect();
        assert_eq!(all, vec![vec![0]]);
    }

    #[test]
    fn no_cover() {
        assert_eq!(ExactCovers::new(2, &[vec![0]]).count(), 0);
    }

    #[test]
    fn matches_brute_force_on_interval_families() {
        for n in 1..=7 {
            for span in 1..=4 {
                let mut options = Vec::new();
                for mask in 1u32..(1 << n) {
                    let items: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
                    if items.last().unwrap() - items[0] < span {
                        options.push(items);
                    }
                }
                let got: BTreeSet<_> = ExactCovers::new(n, &options).collect();
                let count = ExactCovers::new(n, &options).count();
                assert_eq!(count, got.len(), "duplicate covers for n={n} span={span}");
                assert_eq!(got, brute(n, &options), "n={n} span={span}");
            }
        }
    }

    #[test]
    fn can_stop_early() {
        let options: Vec<Vec<usize>> = (0..6).map(|i| vec![i]).chain([vec![0, 1]]).collect();
        let mut it = ExactCovers::new(6, &options);
        assert!(it.next().is_some());
        drop(it);
    }
}
