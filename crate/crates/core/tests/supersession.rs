use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stated_core::supersession::{resolve, Link, Status};
use stated_core::{effective_statements, ParsedStatement};

/// Expected status by brute force: a node is on a cycle iff walking its
/// references returns to it; superseded iff someone validly references it.
fn oracle(links: &[Link<u32, u8>]) -> Vec<Status<u32>> {
    let valid_next = |i: usize| -> Option<usize> {
        let target = links[i].supersedes?;
        let t = links.iter().position(|l| l.key == target)?;
        (links[t].domain == links[i].domain).then_some(t)
    };
    (0..links.len())
        .map(|i| {
            let mut node = i;
            let mut cyclic = false;
            for _ in 0..links.len() {
                match valid_next(node) {
                    Some(n) if n == i => {
                        cyclic = true;
                        break;
                    }
                    Some(n) => node = n,
                    None => break,
                }
            }
            if cyclic {
                return Status::CycleFlagged;
            }
            let by = (0..links.len())
                .filter(|&j| valid_next(j) == Some(i))
                .map(|j| links[j].key)
                .min();
            match by {
                Some(by) => Status::Superseded { by },
                None => Status::Effective,
            }
        })
        .collect()
}

fn random_links(rng: &mut ChaCha8Rng) -> Vec<Link<u32, u8>> {
    let n = rng.random_range(1..=50);
    let mut links: Vec<Link<u32, u8>> = (0..n)
        .map(|i| Link {
            key: i as u32 * 7 + 3,
            domain: rng.random_range(0..3),
            supersedes: None,
        })
        .collect();
    for i in 0..n {
        if rng.random_bool(0.6) {
            // mostly backward references (a DAG), sometimes forward ones
            let j = if rng.random_bool(0.9) && i > 0 {
                rng.random_range(0..i)
            } else {
                rng.random_range(0..n)
            };
            links[i].supersedes = Some(links[j].key);
            if rng.random_bool(0.7) {
                links[i].domain = links[j].domain;
            }
        }
    }
    links
}

#[test]
fn matches_brute_force_on_random_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut cycles = 0;
    for _ in 0..200 {
        let links = random_links(&mut rng);
        let resolution = resolve(&links);
        let expected = oracle(&links);
        for (link, want) in links.iter().zip(&expected) {
            assert_eq!(&resolution.status[&link.key], want);
        }
        cycles += resolution.flagged().count();

        // Resolving the effective set again changes nothing.
        let effective: Vec<_> = links
            .iter()
            .filter(|l| resolution.is_effective(&l.key))
            .cloned()
            .collect();
        let again = resolve(&effective);
        assert!(again.status.values().all(Status::is_effective));
    }
    assert!(cycles > 0, "generator should exercise cycles");
}

#[test]
fn statements_chain() {
    let base = |content: &str, sup: Option<&str>| {
        let sup_line = sup
            .map(|h| format!("Superseded statement: {h}\n"))
            .unwrap_or_default();
        let text = format!(
            "Publishing domain: a.gov\nAuthor: A\nTime: 2027-01-01T10:30:00Z\n{sup_line}Format version: 4\nStatement content: {content}"
        );
        ParsedStatement::from_text(&text).unwrap()
    };
    let s1 = base("one", None);
    let s2 = base("two", Some(s1.hash.as_str()));
    let s3 = base("three", Some(s2.hash.as_str()));
    let effective = effective_statements(&[s1, s2, s3.clone()]);
    assert_eq!(effective, vec![s3]);
}
