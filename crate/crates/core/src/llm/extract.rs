use crate::error::{LabError, Result};
use crate::rule_space::{Domain, Triple};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Separator {
    Comma,
    Hyphen,
    Space,
}

pub fn format_triple(t: &Triple, sep: Separator) -> String {
    let [a, b, c] = t.0;
    match sep {
        Separator::Comma => format!("{a}, {b}, {c}"),
        Separator::Hyphen => format!("{a}-{b}-{c}"),
        Separator::Space => format!("{a} {b} {c}"),
    }
}

fn is_separator(c: char) -> bool {
    c.is_whitespace() || matches!(c, ',' | '-' | '\u{2013}' | '\u{2014}')
}

/// Pull a triple out of free text.
///
/// Prefers the first three integers joined only by separators (commas,
/// hyphens, whitespace); otherwise takes the first three integers in the
/// text. Hyphens never make a number negative.
pub fn extract_triple(text: &str, domain: Domain) -> Result<Triple> {
    let mut numbers: Vec<(usize, usize, u64)> = Vec::new();
    let bytes: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i].1.is_ascii_digit() {
            let start = bytes[i].0;
            let mut j = i;
            while j < bytes.len() && bytes[j].1.is_ascii_digit() {
                j += 1;
            }
            let end = if j < bytes.len() { bytes[j].0 } else { text.len() };
            let value = text[start..end].parse::<u64>().unwrap_or(u64::MAX);
            numbers.push((start, end, value));
            i = j;
        } else {
            i += 1;
        }
    }
    if numbers.len() < 3 {
        return Err(LabError::Extraction(format!("found {} integer(s) in {:?}", numbers.len(), truncate(text))));
    }
    let joined = |a: &(usize, usize, u64), b: &(usize, usize, u64)| text[a.1..b.0].chars().all(is_separator);
    let start = (0..numbers.len() - 2)
        .find(|&k| joined(&numbers[k], &numbers[k + 1]) && joined(&numbers[k + 1], &numbers[k + 2]))
        .unwrap_or(0);
    let mut xs = [0u32; 3];
    for (slot, n) in xs.iter_mut().zip(&numbers[start..start + 3]) {
        if n.2 == 0 || n.2 > domain.max_value() as u64 {
            return Err(LabError::OutOfDomain(text[n.0..n.1].to_string(), domain.max_value()));
        }
        *slot = n.2 as u32;
    }
    Ok(Triple(xs))
}

fn truncate(text: &str) -> String {
    text.chars().take(80).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d() -> Domain {
        Domain::monte_carlo()
    }

    #[test]
    fn reply_examples() {
        assert_eq!(extract_triple("The next sequence is 8, 10, 12.", d()).unwrap(), Triple::new(8, 10, 12));
        assert_eq!(extract_triple("12-14-16", d()).unwrap(), Triple::new(12, 14, 16));
        assert_eq!(extract_triple("Try 8, 10, 12", d()).unwrap(), Triple::new(8, 10, 12));
        assert!(matches!(extract_triple("I agree with your rule!", d()), Err(LabError::Extraction(_))));
    }

    #[test]
    fn prefers_joined_run_over_stray_numbers() {
        let t = extract_triple("Round 2 of 3: here is 20 - 22 - 30", d()).unwrap();
        assert_eq!(t, Triple::new(20, 22, 30));
        let scattered = extract_triple("1 apple, then 2 pears; finally 3", d()).unwrap();
        assert_eq!(scattered, Triple::new(1, 2, 3));
    }

    #[test]
    fn out_of_domain_is_distinct_error() {
        assert!(matches!(extract_triple("12-14-16", Domain::exact()), Err(LabError::OutOfDomain(..))));
        assert!(matches!(extract_triple("0, 2, 4", d()), Err(LabError::OutOfDomain(..))));
        assert!(matches!(extract_triple("99999999999999999999, 2, 4", d()), Err(LabError::OutOfDomain(..))));
    }

    #[test]
    fn round_trips_full_exact_domain() {
        let dom = Domain::exact();
        for t in dom.iter() {
            for sep in [Separator::Comma, Separator::Hyphen, Separator::Space] {
                assert_eq!(extract_triple(&format_triple(&t, sep), dom).unwrap(), t);
            }
        }
    }
}
