//! Analog parameter-to-symbol codecs: direct mapping, layer repetition, and
//! Archimedes-spiral (Shannon-Kotelnikov) bandwidth expansion, plus
//! whole-network encode/decode with per-layer expansion plans.

mod repeat;
mod spiral;
mod stream;

pub use repeat::{repeat_decode, repeat_encode};
pub use spiral::{
    recursion_scale, sk_decode, sk_decode_recursive, sk_encode, sk_encode_recursive, SpiralParams,
    DECODE_GRID_POINTS, DECODE_REFINE_TOL,
};
pub use stream::{
    decode_network, encode_network, read_stream, write_stream, ExpansionMode, ExpansionPlan,
    LayerLayout, StreamMeta, SymbolStream,
};
