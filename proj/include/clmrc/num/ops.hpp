#pragma once

// Differentiable ops over Var. Shapes are 2-D; a "row" is 1 x n.
// Every op validates shapes and throws DimensionError naming both operands.

#include <cstddef>
#include <span>
#include <vector>

#include "clmrc/num/rng.hpp"
#include "clmrc/num/tape.hpp"

namespace clmrc::num {

/// Column mask shared by every row (true = position participates), or a
/// full rows*cols mask in row-major order.
using Mask = std::vector<bool>;

Var matmul(Var a, Var b);
/// a * b^T without materializing the transpose.
Var matmul_nt(Var a, Var b);
Var transpose(Var a);

Var add(Var a, Var b);
Var scale(Var a, double factor);
/// x + bias, bias a 1 x cols row broadcast over rows.
Var add_row(Var x, Var bias);
/// x * weight + bias.
Var affine(Var x, Var weight, Var bias);

/// Row-wise softmax over the last axis. Masked entries are exactly 0.
/// Throws InvalidMaskError when a row has no unmasked entry.
Var masked_softmax(Var logits, const Mask& mask);
Var softmax(Var logits);

/// Normalizes each row to zero mean / unit variance, then gain * x + bias.
Var layer_norm(Var x, Var gain, Var bias, double epsilon = 1e-12);

/// Exact GELU, x * Phi(x).
Var gelu(Var x);

/// Inverted dropout; identity when rate == 0.
Var dropout(Var x, double rate, Rng& rng);

/// -log(p[gold]) for a 1 x n probability row.
Var cross_entropy(Var probabilities, std::size_t gold_index, const Mask& mask = {});

Var concat_cols(Var a, Var b);
Var slice_cols(Var a, std::size_t begin, std::size_t count);
Var slice_rows(Var a, std::size_t begin, std::size_t count);
/// Rows of table picked by ids (embedding lookup); gradient scatter-adds.
Var gather_rows(Var table, std::span<const std::size_t> ids);
/// 1 x cols mean over rows.
Var mean_rows(Var a);

/// Cosine of the angle between u and v. Not differentiable: callers use
/// it on detached values. Throws DegenerateVectorError on a zero vector.
double cosine_similarity(std::span<const double> u, std::span<const double> v);

}  // namespace clmrc::num
