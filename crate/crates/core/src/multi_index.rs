//! Multi-index enumeration and combinatorics.

/// All multi-indices in `nvars` variables with total order ≤ `max_order`,
/// in graded lexicographic order: by total degree, then lexicographically
/// descending in the first coordinate.
pub fn multi_indices(nvars: usize, max_order: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    for d in 0..=max_order {
        out.extend(of_degree(nvars, d));
    }
    out
}

/// Multi-indices of exact total degree `d`.
pub fn of_degree(nvars: usize, d: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; nvars];
    fill(&mut cur, 0, d, &mut out);
    out
}

fn fill(cur: &mut Vec<u32>, pos: usize, rem: u32, out: &mut Vec<Vec<u32>>) {
    if cur.is_empty() {
        if rem == 0 {
            out.push(Vec::new());
        }
        return;
    }
    if pos == cur.len() - 1 {
        cur[pos] = rem;
        out.push(cur.clone());
        return;
    }
    for k in (0..=rem).rev() {
        cur[pos] = k;
        fill(cur, pos + 1, rem - k, out);
    }
    cur[pos] = 0;
}

pub fn order(alpha: &[u32]) -> u32 {
    alpha.iter().sum()
}

pub fn factorial(k: u32) -> u64 {
    (1..=k as u64).product()
}

pub fn multi_factorial(alpha: &[u32]) -> u64 {
    alpha.iter().map(|&a| factorial(a)).product()
}

pub fn binomial(n: u32, k: u32) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u64 = 1;
    for i in 0..k as u64 {
        r = r * (n as u64 - i) / (i + 1);
    }
    r
}

/// All δ ≤ α componentwise.
pub fn sub_indices(alpha: &[u32]) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for &a in alpha {
        let mut next = Vec::with_capacity(out.len() * (a as usize + 1));
        for prefix in &out {
            for k in 0..=a {
                let mut p = prefix.clone();
                p.push(k);
                next.push(p);
            }
        }
        out = next;
    }
    out
}
