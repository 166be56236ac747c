//! Longest-common-subsequence string distance (insert/delete edit distance)
//! and its length-normalized similarity.

/// Uppercase, trim, and collapse internal whitespace runs to single spaces.
pub fn normalize_name(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut pending_space = false;
    for c in s.trim().chars() {
        if c.is_whitespace() {
            pending_space = true;
        } else {
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            for u in c.to_uppercase() {
                out.push(u);
            }
        }
    }
    out
}

fn lcs_len(a: &[char], b: &[char]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    // Two-row DP over the shorter string.
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let mut prev = vec![0usize; short.len() + 1];
    let mut cur = vec![0usize; short.len() + 1];
    for &lc in long {
        for (j, &sc) in short.iter().enumerate() {
            cur[j + 1] = if lc == sc {
                prev[j] + 1
            } else {
                prev[j + 1].max(cur[j])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[short.len()]
}

/// Edit distance permitting only insertions and deletions:
/// `|a| + |b| - 2 * LCS(a, b)` over normalized names.
pub fn lcs_distance(a: &str, b: &str) -> usize {
    let an: Vec<char> = normalize_name(a).chars().collect();
    let bn: Vec<char> = normalize_name(b).chars().collect();
    an.len() + bn.len() - 2 * lcs_len(&an, &bn)
}

/// `1 - d / (|a| + |b|)`, in [0,1]; two empty strings score 1.0.
pub fn lcs_similarity(a: &str, b: &str) -> f64 {
    let an: Vec<char> = normalize_name(a).chars().collect();
    let bn: Vec<char> = normalize_name(b).chars().collect();
    let total = an.len() + bn.len();
    if total == 0 {
        return 1.0;
    }
    let d = total - 2 * lcs_len(&an, &bn);
    1.0 - d as f64 / total as f64
}

/// Normalized distance used by the grouping clusterer: `d / (|a| + |b|)`.
pub fn normalized_name_distance(a: &str, b: &str) -> f64 {
    1.0 - lcs_similarity(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Plain recursive-with-memo LCS, kept independent of the two-row DP.
    fn oracle_lcs(a: &[char], b: &[char]) -> usize {
        fn go(
            a: &[char],
            b: &[char],
            i: usize,
            j: usize,
            memo: &mut Vec<Vec<Option<usize>>>,
        ) -> usize {
            if i == a.len() || j == b.len() {
                return 0;
            }
            if let Some(v) = memo[i][j] {
                return v;
            }
            let v = if a[i] == b[j] {
                1 + go(a, b, i + 1, j + 1, memo)
            } else {
                go(a, b, i + 1, j, memo).max(go(a, b, i, j + 1, memo))
            };
            memo[i][j] = Some(v);
            v
        }
        let mut memo = vec![vec![None; b.len()]; a.len()];
        go(a, b, 0, 0, &mut memo)
    }

    pub(crate) fn oracle_distance(a: &str, b: &str) -> usize {
        let an: Vec<char> = normalize_name(a).chars().collect();
        let bn: Vec<char> = normalize_name(b).chars().collect();
        an.len() + bn.len() - 2 * oracle_lcs(&an, &bn)
    }

    #[test]
    fn identical_strings_have_zero_distance() {
        assert_eq!(lcs_distance("COSTCO", "COSTCO"), 0);
        assert_eq!(lcs_similarity("COSTCO", "COSTCO"), 1.0);
    }

    #[test]
    fn disjoint_alphabets() {
        assert_eq!(lcs_distance("AB", "CD"), 4);
    }

    #[test]
    fn voltage_suffix_pair() {
        // Oracle: L("CANA 115","CANA") = 4, d = 8 + 4 - 8 = 4.
        assert_eq!(oracle_distance("CANA 115", "CANA"), 4);
        assert_eq!(lcs_distance("CANA 115", "CANA"), 4);
        let sim = lcs_similarity("CANA 115", "CANA");
        assert!((sim - (1.0 - 4.0 / 12.0)).abs() < 1e-12);
    }

    #[test]
    fn empty_versus_nonempty() {
        assert_eq!(lcs_similarity("", "X"), 0.0);
        assert_eq!(lcs_similarity("", ""), 1.0);
    }

    #[test]
    fn normalization_folds_case_and_whitespace() {
        assert_eq!(normalize_name("  San  Juan\tSP "), "SAN JUAN SP");
        assert_eq!(lcs_distance("san juan", "SAN  JUAN"), 0);
    }

    proptest! {
        #[test]
        fn matches_brute_force_oracle(a in "[A-D 0-3]{0,12}", b in "[A-D 0-3]{0,12}") {
            prop_assert_eq!(lcs_distance(&a, &b), oracle_distance(&a, &b));
        }

        #[test]
        fn metric_properties(
            a in "[A-C]{0,10}",
            b in "[A-C]{0,10}",
            c in "[A-C]{0,10}",
        ) {
            let dab = lcs_distance(&a, &b);
            let dba = lcs_distance(&b, &a);
            prop_assert_eq!(dab, dba);
            let eq_after_norm = normalize_name(&a) == normalize_name(&b);
            prop_assert_eq!(dab == 0, eq_after_norm);
            let dac = lcs_distance(&a, &c);
            let dcb = lcs_distance(&c, &b);
            prop_assert!(dab <= dac + dcb);
        }

        #[test]
        fn similarity_in_unit_interval(a in ".{0,16}", b in ".{0,16}") {
            let s = lcs_similarity(&a, &b);
            prop_assert!((0.0..=1.0).contains(&s));
        }
    }
}
