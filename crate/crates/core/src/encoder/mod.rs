//! Input assembly and the small transformer that produces the dense
//! representation `h`.

mod model;
mod params;
mod tokenize;

pub use model::{backward, embed, encode, encode_gradients, forward, forward_embedded, DenseVector, EncoderTrace};
pub use params::{Block, EncoderConfig, EncoderParams, LayerNorm, Linear};
pub use tokenize::{assemble_input, build_token_vocab, tokenize, EncoderInput, TokenVocabulary, CLS, PAD, SEP, UNK};
