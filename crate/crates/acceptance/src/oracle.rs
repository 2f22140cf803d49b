//! Reference implementations written independently of the library: a
//! from-scratch SHA-256 and base64url, and brute-force recounts.

use std::collections::BTreeMap;

const K: [u32; 64] = [
    0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1, 0x923f82a4, 0xab1c5ed5,
    0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3, 0x72be5d74, 0x80deb1fe, 0x9bdc06a7, 0xc19bf174,
    0xe49b69c1, 0xefbe4786, 0x0fc19dc6, 0x240ca1cc, 0x2de92c6f, 0x4a7484aa, 0x5cb0a9dc, 0x76f988da,
    0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7, 0xc6e00bf3, 0xd5a79147, 0x06ca6351, 0x14292967,
    0x27b70a85, 0x2e1b2138, 0x4d2c6dfc, 0x53380d13, 0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85,
    0xa2bfe8a1, 0xa81a664b, 0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070,
    0x19a4c116, 0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a, 0x5b9cca4f, 0x682e6ff3,
    0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208, 0x90befffa, 0xa4506ceb, 0xbef9a3f7, 0xc67178f2,
];

pub fn sha256(data: &[u8]) -> [u8; 32] {
    let mut h: [u32; 8] = [
        0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a, 0x510e527f, 0x9b05688c, 0x1f83d9ab,
        0x5be0cd19,
    ];
    let mut msg = data.to_vec();
    msg.push(0x80);
    while msg.len() % 64 != 56 {
        msg.push(0);
    }
    msg.extend_from_slice(&((data.len() as u64) * 8).to_be_bytes());
    for block in msg.chunks(64) {
        let mut w = [0u32; 64];
        for i in 0..16 {
            w[i] = u32::from_be_bytes([
                block[4 * i],
                block[4 * i + 1],
                block[4 * i + 2],
                block[4 * i + 3],
            ]);
        }
        for i in 16..64 {
            let s0 = w[i - 15].rotate_right(7) ^ w[i - 15].rotate_right(18) ^ (w[i - 15] >> 3);
            let s1 = w[i - 2].rotate_right(17) ^ w[i - 2].rotate_right(19) ^ (w[i - 2] >> 10);
            w[i] = w[i - 16]
                .wrapping_add(s0)
                .wrapping_add(w[i - 7])
                .wrapping_add(s1);
        }
        let [mut a, mut b, mut c, mut d, mut e, mut f, mut g, mut hh] = h;
        for i in 0..64 {
            let s1 = e.rotate_right(6) ^ e.rotate_right(11) ^ e.rotate_right(25);
            let ch = (e & f) ^ (!e & g);
            let t1 = hh
                .wrapping_add(s1)
                .wrapping_add(ch)
                .wrapping_add(K[i])
                .wrapping_add(w[i]);
            let s0 = a.rotate_right(2) ^ a.rotate_right(13) ^ a.rotate_right(22);
            let maj = (a & b) ^ (a & c) ^ (b & c);
            let t2 = s0.wrapping_add(maj);
            hh = g;
            g = f;
            f = e;
            e = d.wrapping_add(t1);
            d = c;
            c = b;
            b = a;
            a = t1.wrapping_add(t2);
        }
        for (x, y) in h.iter_mut().zip([a, b, c, d, e, f, g, hh]) {
            *x = x.wrapping_add(y);
        }
    }
    let mut out = [0u8; 32];
    for (i, word) in h.iter().enumerate() {
        out[4 * i..4 * i + 4].copy_from_slice(&word.to_be_bytes());
    }
    out
}

/// RFC 4648 section 5 alphabet, no padding.
pub fn base64url(data: &[u8]) -> String {
    const A: &[u8; 64] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_";
    let mut out = String::new();
    for chunk in data.chunks(3) {
        let n = chunk
            .iter()
            .enumerate()
            .fold(0u32, |acc, (i, &b)| acc | (u32::from(b) << (16 - 8 * i)));
        let chars = chunk.len() + 1;
        for i in 0..chars {
            out.push(A[((n >> (18 - 6 * i)) & 63) as usize] as char);
        }
    }
    out
}

pub fn content_hash(data: &[u8]) -> String {
    base64url(&sha256(data))
}

/// `1 - prod(1 - c)` via the pairwise recurrence `a + c - a*c`.
pub fn aggregate(confidences: &[f64]) -> f64 {
    confidences.iter().fold(0.0, |a, &c| a + c - a * c)
}

/// A supersession graph: node `i` names `refs[i]` (an index) and belongs to
/// `domains[i]`.
pub struct Graph {
    pub domains: Vec<u8>,
    pub refs: Vec<Option<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expected {
    Effective,
    SupersededBy(Vec<usize>),
    Cycle,
}

/// Fixpoint formulation: a node is superseded iff some same-domain node
/// names it; a cycle is a set closed under "names" within the domain.
#[allow(clippy::needless_range_loop)]
pub fn supersession(g: &Graph) -> Vec<Expected> {
    let n = g.refs.len();
    let edge = |i: usize| g.refs[i].filter(|&t| g.domains[t] == g.domains[i]);
    // Reachability by repeated relaxation until nothing changes.
    let mut reach = vec![vec![false; n]; n];
    for i in 0..n {
        if let Some(t) = edge(i) {
            reach[i][t] = true;
        }
    }
    let mut changed = true;
    while changed {
        changed = false;
        for i in 0..n {
            for j in 0..n {
                if reach[i][j] {
                    for k in 0..n {
                        if reach[j][k] && !reach[i][k] {
                            reach[i][k] = true;
                            changed = true;
                        }
                    }
                }
            }
        }
    }
    (0..n)
        .map(|i| {
            if reach[i][i] {
                return Expected::Cycle;
            }
            let by: Vec<usize> = (0..n).filter(|&j| edge(j) == Some(i)).collect();
            if by.is_empty() {
                Expected::Effective
            } else {
                Expected::SupersededBy(by)
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct Ballot {
    pub id: usize,
    pub voter: u8,
    pub poll_matches: bool,
    pub time: i64,
    pub option: String,
    /// Index of an earlier ballot this one repeats byte for byte.
    pub copy_of: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Why {
    WrongPoll,
    AfterDeadline,
    UnknownOption,
    Duplicate,
    Older,
    Tied,
}

/// Recount from the rules, one question per ballot.
pub fn recount(
    options: &[String],
    deadline: i64,
    ballots: &[Ballot],
) -> (BTreeMap<String, u64>, BTreeMap<usize, Why>) {
    let mut why = BTreeMap::new();
    for b in ballots {
        let r = if !b.poll_matches {
            Some(Why::WrongPoll)
        } else if b.time > deadline {
            Some(Why::AfterDeadline)
        } else if !options.contains(&b.option) {
            Some(Why::UnknownOption)
        } else if b.copy_of.is_some() {
            Some(Why::Duplicate)
        } else {
            None
        };
        if let Some(r) = r {
            why.insert(b.id, r);
        }
    }
    let standing = |b: &&Ballot| !why.contains_key(&b.id);
    let mut counts: BTreeMap<String, u64> = options.iter().map(|o| (o.clone(), 0)).collect();
    let live: Vec<&Ballot> = ballots.iter().filter(standing).collect();
    for b in &live {
        let rivals: Vec<&&Ballot> = live
            .iter()
            .filter(|o| o.voter == b.voter && o.id != b.id)
            .collect();
        if rivals.iter().any(|o| o.time > b.time) {
            why.insert(b.id, Why::Older);
        } else if rivals.iter().any(|o| o.time == b.time) {
            why.insert(b.id, Why::Tied);
        } else {
            *counts.get_mut(&b.option).expect("known option") += 1;
        }
    }
    (counts, why)
}
