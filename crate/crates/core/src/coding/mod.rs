//! Entropy coders operating on [`QuantizedPmf`] models: Huffman (symbol code),
//! arithmetic coding (queue) and rANS (stack).

pub mod arith;
pub mod huffman;
pub mod pmf;
pub mod rans;

pub use arith::{ac_decode, ac_encode, ArithDecoder, ArithEncoder, AC_FLUSH_BITS};
pub use huffman::{build_huffman, huffman_decode, huffman_encode, HuffmanTree};
pub use pmf::{quantize_pmf, QuantizedPmf, DEFAULT_PRECISION};
pub use rans::{
    rans_decode, rans_decode_as_sample, rans_encode, rans_pop, rans_push, RansState,
    RANS_FLUSH_BITS,
};
