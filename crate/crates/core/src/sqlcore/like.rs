/// Case-insensitive `LIKE` match where `%` matches any run and `_` one character.
pub fn like_matches(text: &str, pattern: &str) -> bool {
    let t: Vec<char> = text.chars().flat_map(char::to_lowercase).collect();
    let p: Vec<char> = pattern.chars().flat_map(char::to_lowercase).collect();
    // reach[j]: pattern prefix of length j matches the text prefix consumed so far
    let mut reach = vec![false; p.len() + 1];
    reach[0] = true;
    for j in 0..p.len() {
        if p[j] == '%' {
            reach[j + 1] = reach[j];
        }
    }
    for &c in &t {
        let mut next = vec![false; p.len() + 1];
        for j in 0..p.len() {
            match p[j] {
                '%' => next[j + 1] = next[j] || reach[j + 1] || reach[j],
                '_' => next[j + 1] = reach[j],
                pc => next[j + 1] = reach[j] && pc == c,
            }
        }
        reach = next;
    }
    reach[p.len()]
}

#[cfg(test)]
mod tests {
    use super::like_matches;

    #[test]
    fn wildcards() {
        assert!(like_matches("Kyle", "k%"));
        assert!(like_matches("Kyle", "%YL%"));
        assert!(like_matches("Kyle", "_yle"));
        assert!(!like_matches("Kyle", "_le"));
        assert!(like_matches("", "%"));
        assert!(!like_matches("", "_"));
        assert!(like_matches("abc", "a%%c"));
        assert!(like_matches("a%c", "a%c"));
        assert!(!like_matches("abd", "a%c"));
    }
}
