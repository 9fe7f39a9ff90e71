use std::cmp::Reverse;
use std::collections::BinaryHeap;

/// Binary Huffman coding tree over word counts. Each word has a path of
/// inner nodes from the root and the branch bit taken at each of them.
#[derive(Debug, Clone, PartialEq)]
pub struct HuffmanTree {
    codes: Vec<Vec<u8>>,
    points: Vec<Vec<usize>>,
}

impl HuffmanTree {
    /// `counts` must have at least two entries.
    pub fn build(counts: &[u64]) -> Self {
        let n = counts.len();
        assert!(n >= 2, "huffman tree needs at least two symbols");
        let mut parent = vec![0usize; 2 * n - 1];
        let mut bit = vec![0u8; 2 * n - 1];
        // ties broken by node id so the tree is deterministic
        let mut heap: BinaryHeap<Reverse<(u64, usize)>> =
            counts.iter().enumerate().map(|(i, &c)| Reverse((c, i))).collect();
        let mut next = n;
        while heap.len() > 1 {
            let Reverse((c1, a)) = heap.pop().expect("len > 1");
            let Reverse((c2, b)) = heap.pop().expect("len > 1");
            parent[a] = next;
            parent[b] = next;
            bit[b] = 1;
            heap.push(Reverse((c1 + c2, next)));
            next += 1;
        }
        let root = 2 * n - 2;
        let mut codes = Vec::with_capacity(n);
        let mut points = Vec::with_capacity(n);
        for leaf in 0..n {
            let mut code = Vec::new();
            let mut point = Vec::new();
            let mut node = leaf;
            while node != root {
                code.push(bit[node]);
                node = parent[node];
                point.push(node - n);
            }
            code.reverse();
            point.reverse();
            codes.push(code);
            points.push(point);
        }
        Self { codes, points }
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    /// Number of inner nodes.
    pub fn inner_nodes(&self) -> usize {
        self.codes.len() - 1
    }

    /// Branch bits from the root to the word's leaf.
    pub fn code(&self, word: usize) -> &[u8] {
        &self.codes[word]
    }

    /// Inner-node indices from the root, aligned with [`code`](Self::code).
    pub fn path(&self, word: usize) -> &[usize] {
        &self.points[word]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frequent_words_get_shorter_codes() {
        let t = HuffmanTree::build(&[50, 20, 10, 5, 1]);
        assert_eq!(t.inner_nodes(), 4);
        let lens: Vec<usize> = (0..5).map(|w| t.code(w).len()).collect();
        assert!(lens.windows(2).all(|w| w[0] <= w[1]), "{lens:?}");
        // every path starts at the root
        for w in 0..5 {
            assert_eq!(t.path(w)[0], 3);
            assert_eq!(t.path(w).len(), t.code(w).len());
        }
    }

    #[test]
    fn codes_are_prefix_free() {
        let t = HuffmanTree::build(&[7, 7, 7, 3, 2, 2, 1, 1]);
        for a in 0..t.len() {
            for b in 0..t.len() {
                if a != b {
                    assert!(!t.code(b).starts_with(t.code(a)));
                }
            }
        }
    }

    #[test]
    fn two_words() {
        let t = HuffmanTree::build(&[3, 1]);
        assert_eq!(t.code(0).len(), 1);
        assert_ne!(t.code(0), t.code(1));
    }
}
