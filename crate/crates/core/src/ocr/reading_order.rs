//! Deterministic reading-order normalization.
//!
//! Sequence models need tokens in a stable order. Tokens are grouped into
//! lines — two tokens share a line when their vertical overlap is at least
//! half the smaller box height, taken transitively — then lines are ordered
//! by top edge and tokens within a line left to right. All ties keep the
//! input order.

use crate::ocr::OcrToken;

const LINE_OVERLAP: f64 = 0.5;

fn same_line(a: &OcrToken, b: &OcrToken) -> bool {
    let overlap = a.bbox.y_max.min(b.bbox.y_max) - a.bbox.y_min.max(b.bbox.y_min);
    if overlap <= 0.0 {
        return false;
    }
    overlap >= LINE_OVERLAP * a.bbox.height().min(b.bbox.height())
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, i: usize) -> usize {
        if self.0[i] != i {
            let root = self.find(self.0[i]);
            self.0[i] = root;
        }
        self.0[i]
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        // lower index wins so grouping stays stable
        if ra < rb {
            self.0[rb] = ra;
        } else {
            self.0[ra] = rb;
        }
    }
}

/// Sorts tokens into reading order. Idempotent, and a permutation of the
/// input.
pub fn sort_reading_order(tokens: Vec<OcrToken>) -> Vec<OcrToken> {
    let n = tokens.len();
    if n <= 1 {
        return tokens;
    }

    let mut uf = UnionFind::new(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if same_line(&tokens[i], &tokens[j]) {
                uf.union(i, j);
            }
        }
    }

    // component -> member indices, in input order
    let mut lines: Vec<(usize, Vec<usize>)> = Vec::new();
    for i in 0..n {
        let root = uf.find(i);
        match lines.iter_mut().find(|(r, _)| *r == root) {
            Some((_, members)) => members.push(i),
            None => lines.push((root, vec![i])),
        }
    }

    // lines by top edge (then input order of the root for exact ties)
    lines.sort_by(|(ra, a), (rb, b)| {
        let top_a = a.iter().map(|&i| tokens[i].bbox.y_min).fold(f64::INFINITY, f64::min);
        let top_b = b.iter().map(|&i| tokens[i].bbox.y_min).fold(f64::INFINITY, f64::min);
        top_a.total_cmp(&top_b).then(ra.cmp(rb))
    });

    let mut order: Vec<usize> = Vec::with_capacity(n);
    for (_, mut members) in lines {
        // stable within the line: left to right, ties keep input order
        members.sort_by(|&i, &j| tokens[i].bbox.x_min.total_cmp(&tokens[j].bbox.x_min));
        order.extend(members);
    }

    let mut slots: Vec<Option<OcrToken>> = tokens.into_iter().map(Some).collect();
    order.into_iter().map(|i| slots[i].take().unwrap()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BBox;

    fn token(text: &str, x: f64, y: f64, w: f64, h: f64) -> OcrToken {
        OcrToken {
            text: text.to_string(),
            bbox: BBox::new(x, y, x + w, y + h).unwrap(),
            confidence: 0.9,
        }
    }

    #[test]
    fn empty_is_empty() {
        assert!(sort_reading_order(Vec::new()).is_empty());
    }

    #[test]
    fn same_band_sorts_left_to_right() {
        let tokens = vec![token("b", 50.0, 10.0, 20.0, 10.0), token("a", 10.0, 10.0, 20.0, 10.0)];
        let sorted = sort_reading_order(tokens);
        assert_eq!(sorted[0].text, "a");
        assert_eq!(sorted[1].text, "b");
    }

    #[test]
    fn forty_percent_overlap_keeps_lines_apart() {
        // heights 10; vertical overlap 4 < 5 = 50% of the smaller height
        let tokens = vec![
            token("second", 0.0, 16.0, 20.0, 10.0),
            token("first-right", 40.0, 10.0, 20.0, 10.0),
            token("first-left", 0.0, 10.0, 20.0, 10.0),
        ];
        let sorted = sort_reading_order(tokens);
        let texts: Vec<&str> = sorted.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(texts, vec!["first-left", "first-right", "second"]);
    }

    #[test]
    fn fifty_percent_overlap_merges_lines() {
        let tokens = vec![
            token("right", 40.0, 15.0, 20.0, 10.0), // overlap 5 = 50% of 10
            token("left", 0.0, 10.0, 20.0, 10.0),
        ];
        let sorted = sort_reading_order(tokens);
        assert_eq!(sorted[0].text, "left");
        assert_eq!(sorted[1].text, "right");
    }

    #[test]
    fn idempotent_and_permutation() {
        let tokens = vec![
            token("c", 5.0, 40.0, 10.0, 8.0),
            token("a", 5.0, 10.0, 10.0, 8.0),
            token("b", 20.0, 11.0, 10.0, 8.0),
            token("d", 20.0, 40.5, 10.0, 8.0),
        ];
        let once = sort_reading_order(tokens.clone());
        let twice = sort_reading_order(once.clone());
        assert_eq!(once, twice);

        let mut input_texts: Vec<String> = tokens.iter().map(|t| t.text.clone()).collect();
        let mut output_texts: Vec<String> = once.iter().map(|t| t.text.clone()).collect();
        input_texts.sort();
        output_texts.sort();
        assert_eq!(input_texts, output_texts);
    }
}
