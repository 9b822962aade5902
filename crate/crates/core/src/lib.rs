//! Visual secret sharing with recursive hiding.
//!
//! The crate builds monochrome visual cryptography schemes as pairs of
//! canonical Boolean matrices, splits binary images into shares, stacks
//! shares by OR-ing their subpixels, and decodes stacks by a weight
//! threshold. Smaller secrets can be hidden verbatim inside the shares of
//! larger ones without growing those shares. Every construction can be
//! audited exhaustively for contrast and for indistinguishability of
//! sub-threshold share sets.
//!
//! ```
//! use recursive_vc::{build_three_of_n, default_layout, split_image, stack, decode, BinaryImage};
//!
//! let basis = build_three_of_n(5)?;
//! let layout = default_layout(basis.m(), true)?;
//! let secret = BinaryImage::from_fn(8, 8, |x, y| x == y);
//! let shares = split_image(&secret, &basis, &layout, 2024)?;
//!
//! let stacked = stack(&[&shares[0], &shares[2], &shares[4]])?;
//! assert_eq!(decode(&stacked, &basis, 3)?, secret);
//! # Ok::<(), recursive_vc::Error>(())
//! ```
//!
//! A longer walk through the constructions lives in the guide under `book/`.

pub mod audit;
pub mod bitcore;
pub mod codec;
pub mod error;
pub mod pbm;
pub mod recursive;
pub mod schemes;
pub mod sharefile;

pub use audit::{
    composed_security_audit, contrast_audit, security_audit, security_report, ContrastReport,
    SecurityMode, SecurityReport,
};
pub use bitcore::{
    complement, enumerate_permutations, hamming_weight, or_rows, permute_columns, BitMatrix,
    BitRow, ColumnPermutation,
};
pub use codec::{
    decision_threshold, decode, default_layout, encode_pixel, encode_pixel_with, pixel_rng,
    split_image, stack, BinaryImage, PixelCode, ShareImage, StackedImage, SubpixelGrid,
    SubpixelLayout,
};
pub use error::{Error, Result};
pub use recursive::{
    default_placement, embed_chain, extract_embedded, extract_levels,
    sample_constrained_permutation, ChainEmbedding, Placement, SecretChain,
};
pub use schemes::{
    analyze_family, build_function_family, build_k_of_k, build_k_of_n, build_three_of_n, Color,
    FamilyMode, FunctionFamily, Rational, SchemeBasis, SchemeSpec,
};

/// The guide in `book/` is compiled here so its snippets run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/basis-matrices.md")]
    mod basis_matrices {}
    #[doc = include_str!("../../../book/src/k-of-k.md")]
    mod k_of_k {}
    #[doc = include_str!("../../../book/src/k-of-n.md")]
    mod k_of_n {}
    #[doc = include_str!("../../../book/src/sharing-images.md")]
    mod sharing_images {}
    #[doc = include_str!("../../../book/src/recursive-hiding.md")]
    mod recursive_hiding {}
    #[doc = include_str!("../../../book/src/auditing.md")]
    mod auditing {}
    #[doc = include_str!("../../../book/src/file-formats.md")]
    mod file_formats {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
