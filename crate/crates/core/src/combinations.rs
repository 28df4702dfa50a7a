//! Minimal-change enumeration of t-subsets of {0, …, n−1}.
//!
//! Consecutive subsets differ by one element leaving and one entering
//! (the revolving-door order), so an incremental state needs two updates per step.

/// C(n, k), saturating at `u128::MAX`.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        // C(n, i+1) = C(n, i)·(n − i)/(i + 1) is an integer at every step
        match c.checked_mul((n - i) as u128) {
            Some(v) => c = v / (i + 1) as u128,
            None => return u128::MAX,
        }
    }
    c
}

#[derive(Clone, Debug)]
pub struct RevolvingDoor {
    n: usize,
    t: usize,
    /// c[0..t] is the current subset in increasing order, c[t] = n is a sentinel.
    c: Vec<usize>,
    done: bool,
}

impl RevolvingDoor {
    pub fn new(n: usize, t: usize) -> Self {
        assert!(t <= n, "subset size {t} exceeds {n}");
        let mut c: Vec<usize> = (0..t).collect();
        c.push(n);
        Self {
            n,
            t,
            c,
            done: false,
        }
    }

    pub fn current(&self) -> &[usize] {
        &self.c[..self.t]
    }

    /// Moves to the next subset and returns `(removed, added)`, or `None` once
    /// every subset has been visited.
    pub fn advance(&mut self) -> Option<(usize, usize)> {
        if self.done {
            return None;
        }
        let step = match self.t {
            0 => None,
            t if t == self.n => None,
            1 => {
                let out = self.c[0];
                (out + 1 < self.n).then(|| {
                    self.c[0] += 1;
                    (out, out + 1)
                })
            }
            _ => self.knuth_step(),
        };
        if step.is_none() {
            self.done = true;
        }
        step
    }

    // Knuth's Algorithm R with 1-based c_j stored at c[j − 1].
    fn knuth_step(&mut self) -> Option<(usize, usize)> {
        let t = self.t;
        let c = &mut self.c;
        let mut j;
        let mut try_r5;
        if t % 2 == 1 {
            if c[0] + 1 < c[1] {
                let out = c[0];
                c[0] += 1;
                return Some((out, out + 1));
            }
            j = 2;
            try_r5 = false;
        } else {
            if c[0] > 0 {
                let out = c[0];
                c[0] -= 1;
                return Some((out, out - 1));
            }
            j = 2;
            try_r5 = true;
        }
        loop {
            if !try_r5 {
                // R4: try to decrease c_j
                if c[j - 1] >= j {
                    let out = c[j - 1];
                    let added = j - 2;
                    c[j - 1] = c[j - 2];
                    c[j - 2] = added;
                    return Some((out, added));
                }
                j += 1;
                if j > t {
                    return None;
                }
            }
            // R5: try to increase c_j
            if c[j - 1] + 1 < c[j] {
                let out = c[j - 2];
                let added = c[j - 1] + 1;
                c[j - 2] = c[j - 1];
                c[j - 1] = added;
                return Some((out, added));
            }
            j += 1;
            if j > t {
                return None;
            }
            try_r5 = false;
        }
    }
}
