//! Huffman symbol codes built from a [`QuantizedPmf`].

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::pmf::QuantizedPmf;
use crate::bits::{BitReader, BitVector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Node {
    Leaf(usize),
    Internal { zero: usize, one: usize },
}

/// Prefix code tree. Branch `0` is the left child, `1` the right child.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HuffmanTree {
    nodes: Vec<Node>,
    root: usize,
    codes: Vec<(u64, u8)>,
}

impl HuffmanTree {
    /// Builds the tree by repeatedly merging the two lightest nodes.
    ///
    /// Ties are broken by the smallest symbol index contained in each node.
    /// A single-symbol alphabet receives the one-bit codeword `0`.
    pub fn build(pmf: &QuantizedPmf) -> Self {
        let m = pmf.num_symbols();
        let mut nodes: Vec<Node> = (0..m).map(Node::Leaf).collect();
        if m == 1 {
            nodes.push(Node::Internal { zero: 0, one: 0 });
            return Self { nodes, root: 1, codes: vec![(0, 1)] };
        }

        // (weight, smallest symbol in subtree, node id)
        let mut heap: BinaryHeap<Reverse<(u64, usize, usize)>> =
            (0..m).map(|s| Reverse((pmf.freq(s) as u64, s, s))).collect();
        while heap.len() > 1 {
            let Reverse((wa, ma, a)) = heap.pop().unwrap();
            let Reverse((wb, mb, b)) = heap.pop().unwrap();
            nodes.push(Node::Internal { zero: a, one: b });
            heap.push(Reverse((wa + wb, ma.min(mb), nodes.len() - 1)));
        }
        let root = heap.pop().unwrap().0 .2;

        let mut codes = vec![(0u64, 0u8); m];
        let mut stack = vec![(root, 0u64, 0u8)];
        while let Some((id, code, len)) = stack.pop() {
            match nodes[id] {
                Node::Leaf(s) => codes[s] = (code, len),
                Node::Internal { zero, one } => {
                    assert!(len < 64, "code length exceeds 64 bits");
                    stack.push((zero, code << 1, len + 1));
                    stack.push((one, (code << 1) | 1, len + 1));
                }
            }
        }
        Self { nodes, root, codes }
    }

    pub fn num_symbols(&self) -> usize {
        self.codes.len()
    }

    pub fn code_length(&self, symbol: usize) -> usize {
        self.codes[symbol].1 as usize
    }

    pub fn code_lengths(&self) -> Vec<usize> {
        (0..self.num_symbols()).map(|s| self.code_length(s)).collect()
    }

    pub fn codeword(&self, symbol: usize) -> BitVector {
        let (code, len) = self.codes[symbol];
        let mut v = BitVector::new();
        v.push_bits(code, len as u32);
        v
    }

    /// Kraft sum `Σ 2^-len(x)`.
    pub fn kraft_sum(&self) -> f64 {
        self.codes.iter().map(|&(_, l)| 2f64.powi(-(l as i32))).sum()
    }

    /// Expected code length under `pmf` in bits per symbol.
    pub fn expected_length(&self, pmf: &QuantizedPmf) -> f64 {
        (0..self.num_symbols()).map(|s| pmf.probability(s) * self.code_length(s) as f64).sum()
    }

    pub fn encode(&self, message: &[usize]) -> Result<BitVector> {
        let mut out = BitVector::new();
        for &s in message {
            let &(code, len) = self
                .codes
                .get(s)
                .ok_or(Error::SymbolOutOfRange { symbol: s, alphabet: self.num_symbols() })?;
            out.push_bits(code, len as u32);
        }
        Ok(out)
    }

    pub fn decode(&self, bits: &BitVector, n_symbols: usize) -> Result<Vec<usize>> {
        let mut reader = BitReader::new(bits);
        let mut out = Vec::with_capacity(n_symbols);
        for _ in 0..n_symbols {
            let mut id = self.root;
            loop {
                match self.nodes[id] {
                    Node::Leaf(s) => {
                        out.push(s);
                        break;
                    }
                    Node::Internal { zero, one } => {
                        let bit = reader.read().ok_or(Error::TruncatedStream)?;
                        id = if bit { one } else { zero };
                    }
                }
            }
        }
        Ok(out)
    }
}

pub fn build_huffman(pmf: &QuantizedPmf) -> HuffmanTree {
    HuffmanTree::build(pmf)
}

pub fn huffman_encode(tree: &HuffmanTree, message: &[usize]) -> Result<BitVector> {
    tree.encode(message)
}

pub fn huffman_decode(tree: &HuffmanTree, bits: &BitVector, n_symbols: usize) -> Result<Vec<usize>> {
    tree.decode(bits, n_symbols)
}
