#pragma once

#include "ncpb/linalg.hpp"

#include <vector>

namespace ncpb {

/// Wedderburn form of a unital *-subalgebra B of M_d:
///   W^* B W = (+)_t M_{m_t} (x) 1_{k_t},
/// with W unitary. Within block t, adapted index (a, c) sits at offset + a*k + c.
struct BlockStructure {
    struct Block {
        Index m = 0;       // matrix size of the block
        Index k = 0;       // multiplicity in the ambient space
        Index offset = 0;  // first adapted column of the block
    };

    Index dim = 0;
    Mat w;
    std::vector<Block> blocks;

    Index algebra_dim() const;
    std::vector<Index> block_sizes() const;

    /// HS-orthogonal projection onto B, returned as one m_t x m_t matrix per block.
    std::vector<Mat> compress(const Mat& x) const;
    Mat embed(const std::vector<Mat>& xs) const;
    Mat project(const Mat& x) const { return embed(compress(x)); }
    /// ||x - project(x)||_F / max(1, ||x||_F).
    double membership_residual(const Mat& x) const;

    Mat matrix_unit(std::size_t t, Index a, Index b) const;
    Mat central_projection(std::size_t t) const;
    Mat random_element(Rng& rng, bool hermitian) const;

    /// Coordinates in the matrix-unit basis (block-major, row-major inside a block).
    Vec coords(const Mat& x) const;
    Mat from_coords(const Vec& c) const;
};

/// Decomposes the *-algebra spanned by `basis` (assumed unital and *-closed;
/// both are verified). Generic-element method with a fixed internal seed.
BlockStructure decompose_star_algebra(const std::vector<Mat>& basis, std::uint64_t seed = 0x5eedULL);

/// Same algebra with blocks reordered by (m, k) ascending; stable.
BlockStructure sort_blocks(const BlockStructure& s);

/// Structure of B' from the structure of B (the bicommutant swap).
BlockStructure commutant_structure(const BlockStructure& s);

/// Elements of span(ambient) commuting with every generator.
std::vector<Mat> commutant_within(const std::vector<Mat>& ambient, const std::vector<Mat>& gens);

/// Span closure of words in gens (with adjoints when star_closed), including 1.
/// Returns an HS-orthonormal basis. Iteration count is capped at d^2.
std::vector<Mat> algebra_closure(const std::vector<Mat>& gens, Index d, bool star_closed);

}  // namespace ncpb
